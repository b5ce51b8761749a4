#pragma once

#include <optional>
#include <tuple>
#include <utility>

#include "mpcr/dataset.hpp"

namespace mpcr {

// Encouragement-design summary. The analysis presumes no interference
// between units, the exclusion restriction, and monotonicity (no
// defiers); these are design assumptions, not testable checks.
struct ComplianceReport {
    double p_always = 0.0;
    double p_never = 0.0;
    double p_complier = 0.0;
    double itt_outcome = 0.0;   // effect of encouragement on the outcome
    double itt_receipt = 0.0;   // effect of encouragement on take-up
    double cace = 0.0;          // itt_outcome / itt_receipt
    double cace_variance = 0.0;
    bool truncated = false;     // delta-method variance clamped at zero
};

// Weighted pair-difference estimator applied to receipts instead of
// outcomes (the take-up effect of encouragement).
double receipt_itt_estimate(const MpcrDataset& ds, const WeightScheme& scheme);

// Instrumental-variable ratio: outcome ITT over receipt ITT.
double cace_estimate(const MpcrDataset& ds, const WeightScheme& scheme);

// Design-based covariance between the outcome and receipt estimators:
//   m / ((m-1) n^2) * sum_k (wt_k D_k - n psi / m)(wt_k G_k - n tau / m).
double covariance_estimate(const MpcrDataset& ds, const WeightScheme& scheme);

// Delta-method variance assembled from plug-in components. Negative
// values (possible only through rounding) clamp to zero with the flag set.
std::pair<double, bool> cace_variance_from_components(double itt_outcome, double itt_receipt,
                                                      double outcome_variance,
                                                      double receipt_variance, double covariance);

std::pair<double, bool> cace_variance(const MpcrDataset& ds, const WeightScheme& scheme);

// Compliance-type shares under monotonicity: always-takers from control
// receipts, never-takers from treated receipts, compliers as the rest.
// Cluster receipt means aggregate with the same pair weights as the
// estimators, so p_complier equals the receipt ITT exactly.
std::tuple<double, double, double> compliance_shares(const MpcrDataset& ds,
                                                     const WeightScheme& scheme);

ComplianceReport compliance_analysis(const MpcrDataset& ds, const WeightScheme& scheme);

}  // namespace mpcr
