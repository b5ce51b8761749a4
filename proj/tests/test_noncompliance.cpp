#include <doctest.h>

#include <cmath>

#include "mpcr/estimators.hpp"
#include "mpcr/inference.hpp"
#include "mpcr/noncompliance.hpp"
#include "mpcr/oracle.hpp"
#include "mpcr/rng.hpp"
#include "support.hpp"

using namespace mpcr;
using namespace testsupport;

TEST_SUITE_BEGIN("noncompliance");

TEST_CASE("encouragement-design numbers on the canonical receipt dataset") {
    auto ds = make_ds_b();
    auto scheme = WeightScheme::arithmetic_sample();
    CHECK(receipt_itt_estimate(ds, scheme) == 0.75);
    CHECK(cace_estimate(ds, scheme) == 4.0);
    CHECK(covariance_estimate(ds, scheme) == -0.5);
    auto [var, truncated] = cace_variance(ds, scheme);
    CHECK(var == 16.0);
    CHECK_FALSE(truncated);
    auto [pa, pn, pc] = compliance_shares(ds, scheme);
    CHECK(pa == 0.0);
    CHECK(pn == 0.25);
    CHECK(pc == 0.75);
}

namespace {

// Receipts equal to treatment status everywhere.
MpcrDataset full_compliance_dataset() {
    std::vector<UnitRecord> units;
    append(units, units_of("1", 1, {2, 4}, {1, 1}));
    append(units, units_of("1", 2, {1, 3}, {0, 0}));
    append(units, units_of("2", 1, {0, 2}, {0, 0}));
    append(units, units_of("2", 2, {5, 7}, {1, 1}));
    return load_dataset(units, {}, {{"1", 1}, {"2", 0}});
}

MpcrDataset never_taker_dataset() {
    std::vector<UnitRecord> units;
    append(units, units_of("1", 1, {2, 4}, {0, 0}));
    append(units, units_of("1", 2, {1, 3}, {0, 0}));
    append(units, units_of("2", 1, {0, 2}, {0, 0}));
    append(units, units_of("2", 2, {5, 7}, {0, 0}));
    return load_dataset(units, {}, {{"1", 1}, {"2", 0}});
}

}  // namespace

TEST_CASE("degenerate compliance patterns") {
    auto scheme = WeightScheme::arithmetic_sample();
    SUBCASE("full compliance collapses the IV ratio to the ITT") {
        auto ds = full_compliance_dataset();
        CHECK(receipt_itt_estimate(ds, scheme) == 1.0);
        CHECK(cace_estimate(ds, scheme) == point_estimate(ds, Estimand::Sate, scheme));
        auto [var, truncated] = cace_variance(ds, scheme);
        CHECK(var == doctest::Approx(variance_estimate(ds, Estimand::Sate, scheme)).epsilon(1e-14));
        CHECK_FALSE(truncated);
        auto [pa, pn, pc] = compliance_shares(ds, scheme);
        CHECK(pa == 0.0);
        CHECK(pn == 0.0);
        CHECK(pc == 1.0);
    }
    SUBCASE("nobody takes the treatment") {
        auto ds = never_taker_dataset();
        CHECK(receipt_itt_estimate(ds, scheme) == 0.0);
        CHECK_THROWS_WITH_AS(cace_estimate(ds, scheme), doctest::Contains("no identified compliers"),
                             ComputationError);
        CHECK_THROWS_AS(cace_variance(ds, scheme), ComputationError);
        auto [pa, pn, pc] = compliance_shares(ds, scheme);
        CHECK(pa == 0.0);
        CHECK(pn == 1.0);
        CHECK(pc == 0.0);
    }
    SUBCASE("everyone always takes the treatment") {
        auto ds = make_ds_b();
        auto pairs = ds.pairs();
        for (auto& p : pairs)
            for (auto& c : p.clusters)
                for (auto& u : c.units) u.receipt = 1;
        MpcrDataset always(pairs);
        auto [pa, pn, pc] = compliance_shares(always, scheme);
        CHECK(pa == 1.0);
        CHECK(pn == 0.0);
        CHECK(pc == 0.0);
    }
}

TEST_CASE("missing receipts are rejected") {
    auto ds = make_ds_a();
    auto scheme = WeightScheme::arithmetic_sample();
    CHECK_THROWS_AS(receipt_itt_estimate(ds, scheme), ValidationError);
    CHECK_THROWS_AS(compliance_shares(ds, scheme), ValidationError);
}

TEST_CASE("covariance estimator properties") {
    auto scheme = WeightScheme::arithmetic_sample();
    SUBCASE("constant per-arm receipts with equal pair weights contribute nothing") {
        // G_k = 1 in every pair and the weighted receipt differences all
        // equal their mean, so the covariance vanishes.
        auto ds = full_compliance_dataset();
        CHECK(covariance_estimate(ds, scheme) == doctest::Approx(0.0));
    }
    SUBCASE("self-covariance equals the variance when receipts mirror outcomes") {
        // 0/1 outcomes so the receipt column can equal the outcome column.
        std::vector<UnitRecord> units;
        append(units, units_of("1", 1, {1, 1}, {1, 1}));
        append(units, units_of("1", 2, {0, 0}, {0, 0}));
        append(units, units_of("2", 1, {0, 1}, {0, 1}));
        append(units, units_of("2", 2, {1, 1}, {1, 1}));
        auto ds = load_dataset(units, {}, {{"1", 1}, {"2", 0}});
        CHECK(covariance_estimate(ds, scheme) ==
              doctest::Approx(variance_estimate(ds, Estimand::Sate, scheme)).epsilon(1e-14));
    }
    SUBCASE("swapping the series leaves the covariance unchanged") {
        // nu(Y, R) computed directly vs with the roles exchanged.
        std::vector<UnitRecord> units;
        append(units, units_of("1", 1, {1, 0}, {1, 1}));
        append(units, units_of("1", 2, {0, 0}, {0, 1}));
        append(units, units_of("2", 1, {1, 1}, {0, 0}));
        append(units, units_of("2", 2, {0, 1}, {1, 0}));
        auto ds = load_dataset(units, {}, {{"1", 1}, {"2", 0}});
        std::vector<UnitRecord> swapped_units;
        for (const auto& p : ds.pairs())
            for (const auto& c : p.clusters)
                for (const auto& u : c.units) {
                    UnitRecord s = u;
                    s.outcome = static_cast<double>(*u.receipt);
                    s.receipt = static_cast<int>(u.outcome);
                    swapped_units.push_back(s);
                }
        auto swapped = load_dataset(swapped_units, {}, {{"1", 1}, {"2", 0}});
        CHECK(covariance_estimate(ds, scheme) ==
              doctest::Approx(covariance_estimate(swapped, scheme)).epsilon(1e-14));
    }
}

TEST_CASE("delta-method variance clamps below zero") {
    // The plug-in form is nonnegative for any actual dataset (the sample
    // covariance obeys Cauchy-Schwarz), so the clamp is exercised at the
    // component level.
    auto [var, truncated] = cace_variance_from_components(3.0, 0.5, 1.0, 4.0, 2.0);
    // raw = (0.25*1 + 9*4 - 2*3*0.5*2) / 0.0625 = (0.25 + 36 - 6)/0.0625 > 0
    CHECK_FALSE(truncated);
    CHECK(var > 0.0);
    auto [var2, truncated2] = cace_variance_from_components(3.0, 1.0, 0.1, 0.1, 1.0);
    // raw = (0.1 + 0.9 - 6) < 0 -> clamped
    CHECK(var2 == 0.0);
    CHECK(truncated2);
    CHECK_THROWS_AS(cace_variance_from_components(1.0, 0.0, 1.0, 1.0, 0.0), ComputationError);
}

TEST_CASE("perfectly aligned receipts drive the delta-method variance to zero") {
    // With two pairs the weighted series are perfectly correlated, and
    // receipts proportional to outcomes align the remaining terms.
    std::vector<UnitRecord> units;
    append(units, units_of("1", 1, {1, 1}, {1, 1}));
    append(units, units_of("1", 2, {0, 0}, {0, 0}));
    append(units, units_of("2", 1, {0, 0}, {0, 0}));
    append(units, units_of("2", 2, {1, 0}, {1, 0}));
    auto ds = load_dataset(units, {}, {{"1", 1}, {"2", 0}});
    auto [var, truncated] = cace_variance(ds, WeightScheme::arithmetic_sample());
    CHECK(var == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("complier share equals the receipt ITT under matched weights") {
    CounterRng rng(77, 0);
    for (int trial = 0; trial < 25; ++trial) {
        auto pd = random_potential_dataset(rng);
        std::vector<int> z;
        for (int k = 0; k < pd.num_pairs(); ++k) z.push_back(rng.next_bit());
        auto ds = pd.realize(z);
        for (auto scheme : {WeightScheme::arithmetic_sample(), WeightScheme::harmonic_sample(),
                            WeightScheme::constant()}) {
            auto [pa, pn, pc] = compliance_shares(ds, scheme);
            double tau = receipt_itt_estimate(ds, scheme);
            CHECK(std::fabs(pc - tau) < 1e-12);
            CHECK(std::fabs((1.0 - pa - pn) - pc) < 1e-12);
        }
    }
}

TEST_CASE("full-compliance identity holds for every scheme on fuzzed data") {
    CounterRng rng(78, 0);
    for (int trial = 0; trial < 20; ++trial) {
        auto pd = random_potential_dataset(rng);
        // Rewrite receipts to full compliance: r0 = 0, r1 = 1.
        std::vector<PotentialPair> pairs = pd.pairs();
        for (auto& p : pairs)
            for (auto& c : p.clusters)
                for (auto& u : c.units) {
                    u.r0 = 0;
                    u.r1 = 1;
                }
        PotentialDataset full(std::move(pairs));
        std::vector<int> z;
        for (int k = 0; k < full.num_pairs(); ++k) z.push_back(rng.next_bit());
        auto ds = full.realize(z);
        for (auto scheme : {WeightScheme::arithmetic_sample(), WeightScheme::harmonic_sample(),
                            WeightScheme::constant()}) {
            double gamma = cace_estimate(ds, scheme);
            double psi = point_estimate(ds, Estimand::Sate, scheme);
            CHECK(std::fabs(gamma - psi) < 1e-12 * std::max(1.0, std::fabs(psi)));
        }
    }
}

TEST_CASE("compliance_analysis bundles the pieces coherently") {
    auto report = compliance_analysis(make_ds_b(), WeightScheme::arithmetic_sample());
    CHECK(report.itt_outcome == 3.0);
    CHECK(report.itt_receipt == 0.75);
    CHECK(report.cace == 4.0);
    CHECK(report.cace_variance == 16.0);
    CHECK(report.p_complier == doctest::Approx(report.itt_receipt).epsilon(1e-14));
    CHECK_FALSE(report.truncated);
}

TEST_SUITE_END();
