#include "mpcr/noncompliance.hpp"

#include <cmath>

#include "mpcr/estimators.hpp"
#include "mpcr/inference.hpp"

namespace mpcr {

double receipt_itt_estimate(const MpcrDataset& ds, const WeightScheme& scheme) {
    auto diffs = receipt_differences(ds, scheme);
    double num = 0.0, den = 0.0;
    for (const auto& d : diffs) {
        num += d.raw_weight * d.observed_difference;
        den += d.raw_weight;
    }
    return num / den;
}

double cace_estimate(const MpcrDataset& ds, const WeightScheme& scheme) {
    double tau = receipt_itt_estimate(ds, scheme);
    if (tau == 0.0)
        throw ComputationError("no identified compliers: receipt ITT is zero");
    double psi = point_estimate(ds, Estimand::Sate, scheme);
    return psi / tau;
}

double covariance_estimate(const MpcrDataset& ds, const WeightScheme& scheme) {
    if (ds.num_pairs() < 2)
        throw ValidationError("covariance estimation needs m >= 2 pairs");
    auto outcome = pair_differences(ds, scheme);
    auto receipt = receipt_differences(ds, scheme);
    double n = static_cast<double>(ds.total_sample_size());
    double m = static_cast<double>(ds.num_pairs());

    double psi = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < outcome.size(); ++k) {
        psi += outcome[k].normalized_weight * outcome[k].observed_difference;
        tau += receipt[k].normalized_weight * receipt[k].observed_difference;
    }
    psi /= n;
    tau /= n;

    double acc = 0.0;
    for (std::size_t k = 0; k < outcome.size(); ++k) {
        double dy = outcome[k].normalized_weight * outcome[k].observed_difference - n * psi / m;
        double dr = receipt[k].normalized_weight * receipt[k].observed_difference - n * tau / m;
        acc += dy * dr;
    }
    return m / ((m - 1.0) * n * n) * acc;
}

std::pair<double, bool> cace_variance_from_components(double itt_outcome, double itt_receipt,
                                                      double outcome_variance,
                                                      double receipt_variance, double covariance) {
    if (itt_receipt == 0.0)
        throw ComputationError("no identified compliers: receipt ITT is zero");
    double t2 = itt_receipt * itt_receipt;
    double raw = (t2 * outcome_variance + itt_outcome * itt_outcome * receipt_variance -
                  2.0 * itt_outcome * itt_receipt * covariance) /
                 (t2 * t2);
    if (raw < 0.0) return {0.0, true};
    return {raw, false};
}

std::pair<double, bool> cace_variance(const MpcrDataset& ds, const WeightScheme& scheme) {
    if (ds.num_pairs() < 2)
        throw ValidationError("CACE variance needs m >= 2 pairs");
    double psi = point_estimate(ds, Estimand::Sate, scheme);
    double tau = receipt_itt_estimate(ds, scheme);
    double var_y = variance_estimate(ds, Estimand::Sate, scheme);

    // Receipt-series variance: same design-based form with G_k for D_k.
    auto receipt = receipt_differences(ds, scheme);
    double n = static_cast<double>(ds.total_sample_size());
    double m = static_cast<double>(ds.num_pairs());
    double acc = 0.0;
    for (const auto& d : receipt) {
        double dev = d.normalized_weight * d.observed_difference - n * tau / m;
        acc += dev * dev;
    }
    double var_r = m / ((m - 1.0) * n * n) * acc;

    double cov = covariance_estimate(ds, scheme);
    return cace_variance_from_components(psi, tau, var_y, var_r, cov);
}

std::tuple<double, double, double> compliance_shares(const MpcrDataset& ds,
                                                     const WeightScheme& scheme) {
    if (!ds.has_receipts())
        throw ValidationError("missing receipts: dataset has no receipt column");
    auto diffs = pair_differences(ds, scheme);  // for the weights only
    double wsum = 0.0, treated_acc = 0.0, control_acc = 0.0;
    for (std::size_t k = 0; k < diffs.size(); ++k) {
        const MatchedPair& p = ds.pairs()[k];
        double w = diffs[k].raw_weight;
        wsum += w;
        treated_acc += w * p.treated().receipt_mean();
        control_acc += w * p.control().receipt_mean();
    }
    double p_always = control_acc / wsum;
    double p_never = 1.0 - treated_acc / wsum;
    double p_complier = 1.0 - p_always - p_never;
    return {p_always, p_never, p_complier};
}

ComplianceReport compliance_analysis(const MpcrDataset& ds, const WeightScheme& scheme) {
    ComplianceReport report;
    auto [pa, pn, pc] = compliance_shares(ds, scheme);
    report.p_always = pa;
    report.p_never = pn;
    report.p_complier = pc;
    report.itt_outcome = point_estimate(ds, Estimand::Sate, scheme);
    report.itt_receipt = receipt_itt_estimate(ds, scheme);
    report.cace = cace_estimate(ds, scheme);
    auto [var, truncated] = cace_variance(ds, scheme);
    report.cace_variance = var;
    report.truncated = truncated;
    return report;
}

}  // namespace mpcr
