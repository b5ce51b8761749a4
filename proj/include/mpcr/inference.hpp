#pragma once

#include <optional>
#include <utility>

#include "mpcr/dataset.hpp"

namespace mpcr {

// Asymptotic regime governing the confidence-interval quantile. The two
// t regimes differ only in what justifies the t reference distribution
// (cluster-level CLT vs an outright normality assumption); both use
// m - 1 degrees of freedom.
enum class CiRegime { ManyPairs, FewPairsManyUnits, FewPairsFewUnits };

const char* to_string(CiRegime r);

struct EstimateReport {
    Estimand estimand = Estimand::Sate;
    WeightScheme scheme;
    CiRegime regime = CiRegime::FewPairsManyUnits;
    double point = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double confidence_level = 0.0;
    std::optional<int> dof;  // empty => normal reference
    bool conservative = false;  // variance is an upper bound (Sate/Cate)
    int num_pairs = 0;
    long long num_units = 0;
};

// Design-based variance of the weighted pair-difference estimator:
//   m / ((m-1) n^2) * sum_k (wt_k D_k - n psi / m)^2
// with normalized weights wt_k. Unbiased for Uate/Pate, an upper bound
// for Sate/Cate.
double variance_estimate(const MpcrDataset& ds, Estimand estimand,
                         std::optional<WeightScheme> scheme = std::nullopt);

// The classical weighted one-sample form:
//   (sum_k wt_k^2 / n^3) * sum_k wt_k (D_k - psi)^2.
// Kept for comparison; biased unless normalized weights are equal.
double harmonic_variance_estimate(const MpcrDataset& ds, const WeightScheme& scheme);

// point +/- q * sqrt(variance); q is a normal quantile under ManyPairs
// and a t(m-1) quantile otherwise.
std::pair<double, double> confidence_interval(double point, double variance, int m, double level,
                                              CiRegime regime);

// One-stop composition of point estimate, variance, and interval.
EstimateReport analyze(const MpcrDataset& ds, Estimand estimand,
                       std::optional<WeightScheme> scheme, double level,
                       CiRegime regime = CiRegime::FewPairsManyUnits);

}  // namespace mpcr
