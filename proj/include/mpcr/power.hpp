#pragma once

#include <array>
#include <optional>

#include "mpcr/dataset.hpp"

namespace mpcr {

enum class PowerMode { Uate, Pate };

const char* to_string(PowerMode m);

// Inputs for the two-sided t test of a zero effect against a
// standardized alternative. `effect` is measured in units of the
// between-pair standard deviation of the mean difference; `pi` is the
// ratio of summed mean within-cluster variances to that between-pair
// variance, and `nbar` the common cluster size (Pate mode only).
struct PowerSpec {
    double alpha = 0.05;
    int m = 2;
    double effect = 0.0;
    std::optional<double> pi;
    std::optional<double> nbar;
};

// Power of the level-alpha two-sided t test with m-1 degrees of freedom
// and noncentrality effect * sqrt(m).
double power_uate(const PowerSpec& spec);

// Same test with the noncentrality attenuated by within-cluster
// sampling noise: effect * sqrt(m) / sqrt(1 + pi / nbar).
double power_pate(const PowerSpec& spec);

// Smallest m >= 2 whose power reaches the target.
int sample_size(double alpha, double target_power, double effect, PowerMode mode,
                std::optional<double> pi = std::nullopt,
                std::optional<double> nbar = std::nullopt);

// The standardized effect at which power equals the target, by
// bracketed root-finding (power is strictly increasing in the effect).
double minimum_detectable_effect(double alpha, double target_power, int m, PowerMode mode,
                                 std::optional<double> pi = std::nullopt,
                                 std::optional<double> nbar = std::nullopt);

struct EfficiencyReport {
    double ratio = 1.0;             // unmatched variance / matched variance
    double covariance_term = 0.0;   // cov of weighted treated and control means
    std::array<double, 2> variance_terms = {0.0, 0.0};  // treated, control
    bool unbounded = false;         // covariance share reached 1
    bool equal_within_pair_sizes = true;  // the ratio's derivation assumes this
};

// Estimated efficiency of the paired design over an unmatched design
// on the same clusters: {1 - 2 cov / (var1 + var0)}^{-1} from the
// across-pair sample moments of weighted treated and control means.
EfficiencyReport relative_efficiency_estimate(const MpcrDataset& ds, Estimand estimand);

// Pearson correlation across pairs of treated vs control cluster means;
// weighted = true multiplies both series by the pair weight (population
// sizes when present, sample sizes otherwise).
double pair_correlation(const MpcrDataset& ds, bool weighted);

// Smallest within-pair correlation at which the paired design (m-1
// dof, difference variance scaled by 1-rho) detects effects at least as
// small as the unmatched design (2(m-1) dof), at the given test size
// and power. Solved by bracketed bisection on rho.
double break_even_correlation(int m, double alpha, double target_power);

// Sample analogue of the cluster-noise ratio pi: mean within-cluster
// variance (summed over the two slots) over the between-pair variance
// of the observed differences. Unbiased sample variances throughout.
double estimate_pi(const MpcrDataset& ds);

}  // namespace mpcr
