#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "relthresh/error.hpp"
#include "relthresh/estimation.hpp"
#include "relthresh/fixture.hpp"
#include "relthresh/synthetic.hpp"
#include "support.hpp"

using namespace relthresh;
using testing::planted_levels;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected relthresh::Error");
    return ErrorCode::Io;
}

SizeThresholdPair pair(std::string sys, std::string ver, int order, std::size_t size, std::optional<std::int64_t> t) {
    return {std::move(sys), std::move(ver), order, size, t};
}

// Two-sided Student t p-value as the regularized incomplete beta
// I_x(df/2, 1/2), x = df / (df + t^2), by Simpson quadrature.
double t_two_sided_oracle(double t, double df) {
    const double a = df / 2, b = 0.5, x = df / (df + t * t);
    const int n = 400000;
    const double h = x / n;
    auto f = [&](double u) { return u <= 0 ? 0.0 : std::pow(u, a - 1) * std::pow(1 - u, b - 1); };
    double s = f(0) + f(x);
    for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4 : 2);
    double beta_fn = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    return s * h / 3 / beta_fn;
}

std::vector<std::pair<double, double>> zip(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.emplace_back(a[i], b[i]);
    return out;
}

}  // namespace

TEST_CASE("build_pairs marks insignificant versions") {
    std::vector<SystemDataset> ds;
    for (int i = 0; i < 3; ++i) {
        auto d = planted_levels(-2.0, 0.2, 20, 30, "sig" + std::to_string(i));
        ds.push_back(d);
    }
    ds.push_back(planted_levels(-1.0, 0.0, 20, 10, "flat0"));
    ds.push_back(planted_levels(-1.0, 0.0, 20, 10, "flat1"));
    auto c = make_corpus(ds, {metrics::CBO});
    auto pairs = build_pairs(c, metrics::CBO);
    REQUIRE(pairs.size() == 5);
    auto with = std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.threshold.has_value(); });
    CHECK(with == 3);
    for (const auto& p : pairs) CHECK(p.threshold.has_value() == (p.system_id.rfind("sig", 0) == 0));
    CHECK(pairs_from_analyses({}, c).empty());
}

TEST_CASE("dedup keeps one latest pair per system") {
    std::vector<SizeThresholdPair> pairs{
        pair("a", "1.0", 0, 100, 4), pair("a", "1.2", 1, 150, 5), pair("b", "2.0", 0, 300, 7),
        pair("b", "2.1", 1, 320, std::nullopt), pair("c", "1", 0, 50, 3),
    };
    auto dedup = latest_version_pairs(pairs);
    REQUIRE(dedup.size() == 2);
    CHECK(dedup[0] == std::pair<double, double>{150, 5});
    CHECK(dedup[1] == std::pair<double, double>{50, 3});
}

TEST_CASE("spearman known values") {
    auto up = spearman(zip({1, 2, 3, 4}, {2, 4, 6, 8}));
    CHECK(up.rho == 1.0);
    CHECK(up.p_value == 0.0);
    auto down = spearman(zip({1, 2, 3, 4}, {8, 6, 4, 2}));
    CHECK(down.rho == -1.0);
    CHECK(code_of([] { spearman(zip({1, 2, 3}, {1, 2, 3})); }) == ErrorCode::InsufficientData);
    CHECK(code_of([] { spearman(zip({1, 2, 3, 4}, {5, 5, 5, 5})); }) == ErrorCode::UndefinedCorrelation);
}

TEST_CASE("spearman matches the rank-then-pearson oracle") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> small(0, 6);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x, y;
        for (int i = 0; i < 12; ++i) x.push_back(small(rng)), y.push_back(small(rng) + 0.5 * x.back());
        if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
        if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
        auto r = spearman(zip(x, y));
        CHECK(std::fabs(r.rho - testing::oracle::spearman(x, y)) < 1e-12);
        CHECK(r.df == 10);
        double t = r.rho * std::sqrt(10.0 / (1 - r.rho * r.rho));
        CHECK(r.p_value == doctest::Approx(t_two_sided_oracle(t, 10)).epsilon(1e-6));
    }
}

TEST_CASE("spearman is invariant under increasing transforms") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(1, 100);
    std::vector<double> x, y, x2, ylog;
    for (int i = 0; i < 15; ++i) {
        x.push_back(std::round(u(rng)));
        y.push_back(std::round(u(rng)));
        x2.push_back(x.back() * x.back());
        ylog.push_back(std::log(y.back()));
    }
    CHECK(spearman(zip(x, y)).rho == spearman(zip(x2, ylog)).rho);
}

TEST_CASE("exact permutation p-value enumerates all orderings") {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7}, y{2, 1, 4, 3, 7, 5, 6};
    auto r = spearman(zip(x, y), SpearmanPValue::ExactPermutation);
    // Oracle: count permutations with |rho| >= |observed|.
    std::vector<double> perm = y;
    std::sort(perm.begin(), perm.end());
    std::size_t hit = 0, total = 0;
    do {
        ++total;
        if (std::fabs(testing::oracle::spearman(x, perm)) >= std::fabs(r.rho) - 1e-12) ++hit;
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(r.p_value == doctest::Approx(static_cast<double>(hit) / static_cast<double>(total)).epsilon(1e-12));
    auto approx = spearman(zip(x, y));
    CHECK(approx.rho == r.rho);
}

TEST_CASE("ordinary least squares") {
    std::vector<SizeThresholdPair> line{pair("a", "1", 0, 1, 2), pair("b", "1", 0, 2, 4), pair("c", "1", 0, 3, 6)};
    auto m = fit_ols(line);
    CHECK(m.slope == doctest::Approx(2.0));
    CHECK(std::fabs(m.intercept) < 1e-12);
    CHECK(m.n_train == 3);

    std::vector<SizeThresholdPair> flat{pair("a", "1", 0, 10, 6), pair("b", "1", 0, 20, 6), pair("c", "1", 0, 35, 6)};
    auto f = fit_ols(flat);
    CHECK(f.slope == 0.0);
    CHECK(f.intercept == 6.0);

    std::vector<SizeThresholdPair> few{pair("a", "1", 0, 10, 6), pair("b", "1", 0, 20, 7)};
    CHECK(code_of([&] { fit_ols(few); }) == ErrorCode::InsufficientData);
    std::vector<SizeThresholdPair> same{pair("a", "1", 0, 10, 6), pair("b", "1", 0, 10, 7), pair("c", "1", 0, 10, 8)};
    CHECK(code_of([&] { fit_ols(same); }) == ErrorCode::SingularDesign);

    // Residuals are orthogonal to sizes and sum to zero.
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> us(100, 2000), ut(2, 25);
    std::vector<SizeThresholdPair> rnd;
    for (int i = 0; i < 30; ++i) rnd.push_back(pair("s" + std::to_string(i), "1", 0, us(rng), ut(rng)));
    auto r = fit_ols(rnd);
    double dot = 0, sum = 0;
    for (const auto& p : rnd) {
        double e = static_cast<double>(*p.threshold) - (r.slope * static_cast<double>(p.size) + r.intercept);
        dot += e * static_cast<double>(p.size);
        sum += e;
    }
    CHECK(std::fabs(dot) < 1e-9 * 2000 * 30);
    CHECK(std::fabs(sum) < 1e-9 * 30);
}

TEST_CASE("estimate_threshold from published models") {
    auto models = published_models();
    auto by = [&](const MetricId& m) { return *std::find_if(models.begin(), models.end(), [&](auto& e) { return e.metric == m; }); };
    auto cbo = estimate_threshold(by(metrics::CBO), 994);
    CHECK(cbo.varl_raw == doctest::Approx(13.21281));
    CHECK(cbo.threshold == 13);
    CHECK(estimate_threshold(by(metrics::NOM), 500).threshold == 9);
    auto dcc = estimate_threshold(by(metrics::DCC), 10);
    CHECK(dcc.threshold == 2);
    CHECK(dcc.clamped);
    std::int64_t prev = 0;
    for (std::size_t size = 1; size < 5000; size += 37) {
        auto t = estimate_threshold(by(metrics::CBO), size).threshold;
        CHECK(t >= prev);
        prev = t;
    }
}

TEST_CASE("leave-one-system-out") {
    SUBCASE("three single-version systems cannot train") {
        std::vector<SizeThresholdPair> p{pair("a", "1", 0, 100, 4), pair("b", "1", 0, 200, 5), pair("c", "1", 0, 300, 6)};
        CHECK(code_of([&] { leave_one_system_out(p, metrics::CBO); }) == ErrorCode::InsufficientData);
    }
    SUBCASE("held-out system never trains its own round") {
        std::vector<SizeThresholdPair> p;
        for (int s = 0; s < 6; ++s) {
            for (int v = 0; v < 3; ++v) {
                std::size_t size = 200 + 100 * s + 20 * v;
                p.push_back(pair("sys" + std::to_string(s), "1." + std::to_string(v), v, size,
                                 static_cast<std::int64_t>(std::lround(0.01 * size + 3))));
            }
        }
        p[4].threshold.reset();
        auto r = leave_one_system_out(p, metrics::CBO);
        CHECK(r.thresholds.size() == p.size());
        REQUIRE(r.rounds.size() == 6);
        for (const auto& round : r.rounds) {
            CHECK(std::find(round.training_systems.begin(), round.training_systems.end(), round.test_system) ==
                  round.training_systems.end());
            CHECK(round.model.n_train == 14 + (round.test_system == "sys1" ? 1 : 0));
        }
        for (const auto& q : p) {
            double planted = 0.01 * static_cast<double>(q.size) + 3;
            CHECK(std::fabs(static_cast<double>(r.thresholds.at({q.system_id, q.version_label}).threshold) - planted) <= 1.0);
        }
    }
}

TEST_CASE("screening selects only the planted metric") {
    auto c = generate_synthetic(planted_line_spec(42));
    std::vector<MetricId> ms{metrics::CBO, metrics::WMC};
    auto selected = screen_metrics(c, ms);
    CHECK(selected == std::vector<MetricId>{metrics::CBO});
    auto detail = screen_metrics_detailed(c, ms);
    REQUIRE(detail.size() == 2);
    CHECK(detail[0].correlation->p_value < 0.05);
    CHECK(detail[0].correlation->rho > 0);
    CHECK_FALSE(detail[1].selected);
    CHECK(screen_metrics(c, std::vector<MetricId>{}).empty());
}

TEST_CASE("population ratio resolution") {
    auto c = generate_synthetic(planted_line_spec(1));
    EstimationConfig cfg;
    CHECK(resolve_population_ratio(c, cfg) == doctest::Approx(population_defect_ratio(c)));
    cfg.population_ratio = 0.25;
    CHECK(resolve_population_ratio(c, cfg) == 0.25);
    cfg.population_ratio = 1.5;
    CHECK(code_of([&] { resolve_population_ratio(c, cfg); }) == ErrorCode::Config);
}
