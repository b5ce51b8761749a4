#include <doctest.h>

#include <cmath>

#include "mpcr/estimators.hpp"
#include "mpcr/inference.hpp"
#include "mpcr/oracle.hpp"
#include "support.hpp"

using namespace mpcr;
using namespace testsupport;

TEST_SUITE_BEGIN("oracle");

TEST_CASE("true estimands of the potential-outcome fixture") {
    auto pd = make_ds_p();
    CHECK(true_estimand(pd, Estimand::Sate) == doctest::Approx(3.0).epsilon(1e-14));
    SUBCASE("no effect") {
        auto pairs = pd.pairs();
        for (auto& p : pairs)
            for (auto& c : p.clusters)
                for (auto& u : c.units) u.y1 = u.y0;
        CHECK(true_estimand(PotentialDataset(pairs), Estimand::Sate) == 0.0);
    }
    SUBCASE("constant shift") {
        auto pairs = pd.pairs();
        for (auto& p : pairs)
            for (auto& c : p.clusters)
                for (auto& u : c.units) u.y1 = u.y0 + 2.25;
        CHECK(true_estimand(PotentialDataset(pairs), Estimand::Sate) ==
              doctest::Approx(2.25).epsilon(1e-14));
    }
    SUBCASE("population weighting") {
        auto pairs = pd.pairs();
        for (auto& p : pairs)
            for (auto& c : p.clusters) c.population_size = c.sample_size();
        auto with_pops = PotentialDataset(pairs);
        CHECK(true_estimand(with_pops, Estimand::Cate) ==
              doctest::Approx(true_estimand(with_pops, Estimand::Sate)).epsilon(1e-14));
        CHECK_THROWS_AS(true_estimand(pd, Estimand::Cate), ValidationError);
    }
}

TEST_CASE("exact law over all assignments") {
    auto pd = make_ds_p();
    SUBCASE("symmetric pairs make the point estimator constant") {
        auto law = exact_law(pd, [](const MpcrDataset& ds) {
            return point_estimate(ds, Estimand::Sate, WeightScheme::arithmetic_sample());
        });
        CHECK(law.values.size() == 4);
        CHECK(law.mean() == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(law.variance() == doctest::Approx(0.0));
    }
    SUBCASE("variance estimator is constant at 4 here") {
        auto law = exact_law(pd, [](const MpcrDataset& ds) {
            return variance_estimate(ds, Estimand::Sate, WeightScheme::arithmetic_sample());
        });
        CHECK(law.mean() == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(law.variance() == doctest::Approx(0.0));
    }
    SUBCASE("constant statistic has zero spread") {
        auto law = exact_law(pd, [](const MpcrDataset&) { return 7.0; });
        CHECK(law.mean() == 7.0);
        CHECK(law.variance() == 0.0);
    }
    SUBCASE("cap is enforced") {
        CHECK_THROWS_AS(exact_law(pd, [](const MpcrDataset&) { return 0.0; }, 1), ValidationError);
    }
}

TEST_CASE("exact law matches the analytic assignment variance") {
    CounterRng rng(207, 0);
    FuzzOptions opt;
    opt.receipts = false;
    for (int trial = 0; trial < 10; ++trial) {
        auto pd = random_potential_dataset(rng, opt);
        auto law = exact_law(pd, [](const MpcrDataset& ds) {
            return point_estimate(ds, Estimand::Sate, WeightScheme::arithmetic_sample());
        });
        // Var_a = (1/4n^2) sum wt_k^2 (D_k(1) - D_k(0))^2
        double n = static_cast<double>(pd.total_sample_size());
        auto realized = pd.realize(std::vector<int>(pd.num_pairs(), 0));
        auto diffs = pair_differences(realized, WeightScheme::arithmetic_sample());
        double expected = 0.0;
        for (int k = 0; k < pd.num_pairs(); ++k) {
            const auto& p = pd.pairs()[k];
            double d1 = p.clusters[0].mean_y(1) - p.clusters[1].mean_y(0);
            double d0 = p.clusters[1].mean_y(1) - p.clusters[0].mean_y(0);
            expected += diffs[k].normalized_weight * diffs[k].normalized_weight * (d1 - d0) * (d1 - d0);
        }
        expected /= 4.0 * n * n;
        CHECK(law.variance() == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("identity residuals vanish on the fixture") {
    auto pd = make_ds_p();
    CHECK(check_identity(pd, Identity::SampleWeightBias) < 1e-12);
    CHECK(check_identity(pd, Identity::VarianceBiasSampleWeights) < 1e-12);
    CHECK(check_identity(pd, Identity::ClassicalVarianceExpectation) < 1e-12);
}

TEST_CASE("identity residuals vanish across the fuzz corpus") {
    Identity ids[] = {
        Identity::SampleWeightBias,          Identity::PopulationWeightBias,
        Identity::VarianceBiasSampleWeights, Identity::VarianceBiasPopulationWeights,
        Identity::ClassicalVarianceExpectation, Identity::CovarianceExpectation};
    for (int i = 0; i < 30; ++i) {
        CounterRng rng(99, i);
        auto pd = random_potential_dataset(rng);
        for (auto id : ids) CHECK(check_identity(pd, id) < 1e-10);
    }
}

TEST_CASE("identity preconditions") {
    CounterRng rng(98, 0);
    FuzzOptions opt;
    opt.receipts = false;
    opt.populations = false;
    auto pd = random_potential_dataset(rng, opt);
    CHECK_THROWS_AS(check_identity(pd, Identity::PopulationWeightBias), ValidationError);
    CHECK_THROWS_AS(check_identity(pd, Identity::VarianceBiasPopulationWeights), ValidationError);
    CHECK_THROWS_AS(check_identity(pd, Identity::CovarianceExpectation), ValidationError);
}

TEST_CASE("nonzero bias cases are matched exactly by the closed form") {
    // Unequal within-pair sizes with heterogeneous effects: the bias of
    // the sample-size-weighted estimator is nonzero, and the enumeration
    // must agree with the closed form.
    CounterRng rng(97, 0);
    FuzzOptions opt;
    opt.receipts = false;
    int nonzero = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto pd = random_potential_dataset(rng, opt);
        auto law = exact_law(pd, [](const MpcrDataset& ds) {
            return point_estimate(ds, Estimand::Sate, WeightScheme::arithmetic_sample());
        });
        double bias = law.mean() - true_estimand(pd, Estimand::Sate);
        if (std::fabs(bias) > 1e-6) ++nonzero;
        CHECK(check_identity(pd, Identity::SampleWeightBias) < 1e-10);
    }
    CHECK(nonzero > 0);
}

TEST_CASE("exact law agrees with a large Monte Carlo") {
    CounterRng rng(96, 0);
    FuzzOptions opt;
    opt.receipts = false;
    opt.min_pairs = 3;
    opt.max_pairs = 3;
    auto pd = random_potential_dataset(rng, opt);
    auto law = exact_law(pd, [](const MpcrDataset& ds) {
        return point_estimate(ds, Estimand::Sate, WeightScheme::arithmetic_sample());
    });

    // Precompute per-pair treated/control possibilities for a fast draw.
    struct PairVals {
        double d1, d0, w;
    };
    std::vector<PairVals> vals;
    auto realized = pd.realize(std::vector<int>(pd.num_pairs(), 0));
    auto diffs = pair_differences(realized, WeightScheme::arithmetic_sample());
    for (int k = 0; k < pd.num_pairs(); ++k) {
        const auto& p = pd.pairs()[k];
        vals.push_back({p.clusters[0].mean_y(1) - p.clusters[1].mean_y(0),
                        p.clusters[1].mean_y(1) - p.clusters[0].mean_y(0),
                        diffs[k].normalized_weight});
    }
    double n = static_cast<double>(pd.total_sample_size());
    const int R = 1000000;
    CounterRng mc(4096, 0);
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < R; ++r) {
        double acc = 0.0;
        for (const auto& v : vals) acc += v.w * (mc.next_bit() ? v.d1 : v.d0);
        double psi = acc / n;
        sum += psi;
        sumsq += psi * psi;
    }
    double mc_mean = sum / R;
    double mc_var = sumsq / R - mc_mean * mc_mean;
    double se_mean = std::sqrt(mc_var / R);
    CHECK(std::fabs(mc_mean - law.mean()) < 3.0 * se_mean + 1e-12);
    // CLT-scale check for the second moment.
    CHECK(mc_var == doctest::Approx(law.variance()).epsilon(0.02));
}

TEST_CASE("coverage simulation behaviors") {
    SUBCASE("degenerate noise-free DGP covers always") {
        DgpConfig cfg;
        PairTemplate t;
        t.control_mean = 5.0;
        t.effect = 2.0;
        t.sd1 = 0.0;
        t.sd2 = 0.0;
        t.size1 = 4;
        t.size2 = 4;
        cfg.templates = {t};
        cfg.m = 6;
        cfg.replicates = 200;
        cfg.seed = 3;
        cfg.level = 0.90;
        auto sigma = coverage_simulation(cfg, VarianceMethod::DesignBased);
        CHECK(sigma.coverage == 1.0);
        cfg.target = Estimand::Sate;
        auto sate = coverage_simulation(cfg, VarianceMethod::DesignBased);
        CHECK(sate.coverage == 1.0);
    }
    SUBCASE("bit-reproducible for a fixed seed") {
        DgpConfig cfg;
        cfg.templates = default_coverage_templates();
        cfg.m = 12;
        cfg.replicates = 300;
        cfg.seed = 17;
        auto a = coverage_simulation(cfg, VarianceMethod::DesignBased);
        auto b = coverage_simulation(cfg, VarianceMethod::DesignBased);
        CHECK(a.coverage == b.coverage);
        cfg.seed = 18;
        auto c = coverage_simulation(cfg, VarianceMethod::DesignBased);
        CHECK(a.coverage != c.coverage);  // different seed, different draw
    }
    SUBCASE("conservative coverage when targeting the sample estimand") {
        DgpConfig cfg;
        cfg.templates = default_coverage_templates();
        cfg.m = 15;
        cfg.replicates = 2000;
        cfg.seed = 29;
        cfg.level = 0.90;
        cfg.target = Estimand::Sate;
        auto summary = coverage_simulation(cfg, VarianceMethod::DesignBased);
        CHECK(summary.coverage >= 0.90 - 3.0 * summary.std_error);
    }
    SUBCASE("config validation") {
        DgpConfig cfg;
        CHECK_THROWS_AS(coverage_simulation(cfg, VarianceMethod::DesignBased), ValidationError);
        cfg.templates = default_coverage_templates();
        cfg.m = 1;
        CHECK_THROWS_AS(coverage_simulation(cfg, VarianceMethod::DesignBased), ValidationError);
        cfg.m = 5;
        cfg.level = 1.5;
        CHECK_THROWS_AS(coverage_simulation(cfg, VarianceMethod::DesignBased), ValidationError);
    }
}

TEST_CASE("bias-variance sweep captures the weighting tradeoff") {
    SUBCASE("no imbalance: the two weightings coincide") {
        BiasVarianceConfig cfg;
        cfg.m = 4;
        cfg.base_size = 6;
        cfg.effect_gradient = 2.0;
        cfg.level_gradient = 1.0;
        cfg.imbalances = {0.0};
        auto rows = bias_variance_profile(cfg);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].bias2_arith == doctest::Approx(rows[0].bias2_harm).epsilon(1e-12));
        CHECK(rows[0].var_arith == doctest::Approx(rows[0].var_harm).epsilon(1e-12));
        CHECK(rows[0].mse_arith == doctest::Approx(rows[0].mse_harm).epsilon(1e-12));
    }
    SUBCASE("effects correlated with imbalance bias the harmonic weighting") {
        BiasVarianceConfig cfg;
        cfg.m = 4;
        cfg.base_size = 6;
        cfg.effect_gradient = 2.0;
        cfg.imbalances = {0.5, 0.8};
        auto rows = bias_variance_profile(cfg);
        for (const auto& row : rows) {
            CHECK(row.bias2_arith < 1e-20);
            CHECK(row.bias2_harm > row.bias2_arith);
            CHECK(row.bias2_harm > 1e-6);
        }
    }
    SUBCASE("homogeneous effects: both unbiased, harmonic variance no larger") {
        BiasVarianceConfig cfg;
        cfg.m = 4;
        cfg.base_size = 6;
        cfg.effect_gradient = 0.0;
        cfg.level_gradient = 3.0;
        cfg.imbalances = {0.4, 0.8};
        auto rows = bias_variance_profile(cfg);
        for (const auto& row : rows) {
            CHECK(row.bias2_arith < 1e-20);
            CHECK(row.bias2_harm < 1e-20);
            CHECK(row.var_harm <= row.var_arith);
            CHECK(row.var_harm < row.var_arith);  // strict on this construction
        }
    }
}

TEST_CASE("potential receipts must be monotone") {
    PotentialPair p;
    p.pair_id = "1";
    for (int slot = 0; slot < 2; ++slot) {
        PotentialCluster c;
        c.units.push_back({0.0, 1.0, 1, 0});  // r0 = 1, r1 = 0: a defier
        p.clusters[slot] = std::move(c);
    }
    CHECK_THROWS_WITH_AS(PotentialDataset(std::vector<PotentialPair>{p}),
                         doctest::Contains("monotonicity"), ValidationError);
}

TEST_CASE("fuzz generator honors its options") {
    CounterRng rng(95, 0);
    FuzzOptions opt;
    opt.equal_within_pair_sizes = true;
    opt.constant_pair_effects = true;
    for (int trial = 0; trial < 5; ++trial) {
        auto pd = random_potential_dataset(rng, opt);
        CHECK(pd.num_pairs() >= 2);
        CHECK(pd.num_pairs() <= 6);
        for (const auto& p : pd.pairs()) {
            CHECK(p.clusters[0].sample_size() == p.clusters[1].sample_size());
            double e0 = p.clusters[0].mean_effect();
            CHECK(p.clusters[1].mean_effect() == doctest::Approx(e0).epsilon(1e-12));
            for (const auto& c : p.clusters) {
                REQUIRE(c.population_size.has_value());
                CHECK(*c.population_size >= c.sample_size());
                for (const auto& u : c.units) {
                    REQUIRE(u.r0.has_value());
                    CHECK(*u.r1 >= *u.r0);
                }
            }
        }
    }
}

TEST_SUITE_END();
