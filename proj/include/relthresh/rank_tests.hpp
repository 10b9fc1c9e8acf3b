#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace relthresh {

/// Scores of k models (columns) on N datasets (blocks). Higher is better.
/// Missing cells are nullopt.
struct ScoreTable {
    std::vector<std::string> models;
    std::vector<std::string> blocks;
    std::vector<std::vector<std::optional<double>>> scores;  // [block][model]

    bool complete() const;
};

struct RankTestResult {
    std::string method;  // "friedman" or "skillings-mack"
    std::vector<std::string> models;
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    std::size_t n_blocks = 0;           // blocks entering the statistic
    std::size_t n_complete_blocks = 0;  // blocks behind avg_ranks and the CD
    std::vector<double> avg_ranks;      // rank 1 = best, averaged over complete blocks
    double alpha = 0.05;
    double nemenyi_cd = 0.0;
    bool posthoc_applied = false;  // only after the omnibus test rejects at alpha
    std::vector<std::vector<bool>> pairwise_significant;
    std::vector<std::string> warnings;
};

/// Within-block ranks (1 = highest score, ties averaged) for observed cells.
std::vector<std::optional<double>> block_ranks(const std::vector<std::optional<double>>& block);

/// Classic Friedman chi-square on a complete table.
RankTestResult friedman(const ScoreTable& table, double alpha = 0.05);

/// Skillings-Mack statistic; blocks with fewer than two observed models are
/// dropped. Reduces to Friedman on complete tables.
RankTestResult skillings_mack(const ScoreTable& table, double alpha = 0.05);

/// Friedman on complete tables; Skillings-Mack when cells are missing and
/// allow_missing is set, otherwise Error(MissingValues). Requires k >= 3.
RankTestResult friedman_test(const ScoreTable& table, bool allow_missing, double alpha = 0.05);

/// Studentized-range based critical value q_alpha for k in [2, 10] and
/// alpha in {0.05, 0.10}.
double nemenyi_q(std::size_t k, double alpha = 0.05);

/// Critical difference in average rank: q_alpha * sqrt(k(k+1) / (6N)).
double nemenyi_cd(std::size_t k, std::size_t n_blocks, double alpha = 0.05);

nlohmann::json to_json(const RankTestResult& r);

/// Plot-ready critical-difference diagram: model ranks plus CD segments
/// joining groups of models that are not significantly different.
nlohmann::json cd_diagram(const RankTestResult& r);

}  // namespace relthresh
