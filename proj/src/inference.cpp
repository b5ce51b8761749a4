#include "mpcr/inference.hpp"

#include <cmath>

#include "mpcr/estimators.hpp"
#include "mpcr/special_functions.hpp"

namespace mpcr {

const char* to_string(CiRegime r) {
    switch (r) {
        case CiRegime::ManyPairs: return "many_pairs";
        case CiRegime::FewPairsManyUnits: return "few_pairs_many_units";
        case CiRegime::FewPairsFewUnits: return "few_pairs_few_units";
    }
    return "?";
}

namespace {

double variance_from_differences(const std::vector<PairDifference>& diffs, double n) {
    double m = static_cast<double>(diffs.size());
    double psi = 0.0;
    for (const auto& d : diffs) psi += d.normalized_weight * d.observed_difference;
    psi /= n;
    double center = n * psi / m;
    double ss = 0.0;
    for (const auto& d : diffs) {
        double term = d.normalized_weight * d.observed_difference - center;
        ss += term * term;
    }
    return m / ((m - 1.0) * n * n) * ss;
}

}  // namespace

double variance_estimate(const MpcrDataset& ds, Estimand estimand,
                         std::optional<WeightScheme> scheme) {
    if (ds.num_pairs() < 2)
        throw ValidationError("variance estimation needs m >= 2 pairs");
    WeightScheme s = scheme ? *scheme : default_scheme_for(estimand);
    auto diffs = pair_differences(ds, s);
    return variance_from_differences(diffs, static_cast<double>(ds.total_sample_size()));
}

double harmonic_variance_estimate(const MpcrDataset& ds, const WeightScheme& scheme) {
    if (ds.num_pairs() < 2)
        throw ValidationError("variance estimation needs m >= 2 pairs");
    auto diffs = pair_differences(ds, scheme);
    double n = static_cast<double>(ds.total_sample_size());
    double psi = 0.0, wt_sq = 0.0;
    for (const auto& d : diffs) {
        psi += d.normalized_weight * d.observed_difference;
        wt_sq += d.normalized_weight * d.normalized_weight;
    }
    psi /= n;
    double ss = 0.0;
    for (const auto& d : diffs) {
        double dev = d.observed_difference - psi;
        ss += d.normalized_weight * dev * dev;
    }
    return wt_sq / (n * n * n) * ss;
}

std::pair<double, double> confidence_interval(double point, double variance, int m, double level,
                                              CiRegime regime) {
    if (!(level > 0.0 && level < 1.0))
        throw ValidationError("confidence level must lie in (0,1)");
    if (variance < 0.0) throw ValidationError("variance must be nonnegative");
    double p = 1.0 - (1.0 - level) / 2.0;
    double q;
    if (regime == CiRegime::ManyPairs) {
        q = normal_quantile(p);
    } else {
        if (m < 2) throw ValidationError("t-based intervals need m >= 2 pairs");
        q = t_quantile(static_cast<double>(m - 1), p);
    }
    double half = q * std::sqrt(variance);
    return {point - half, point + half};
}

EstimateReport analyze(const MpcrDataset& ds, Estimand estimand,
                       std::optional<WeightScheme> scheme, double level, CiRegime regime) {
    WeightScheme s = scheme ? *scheme : default_scheme_for(estimand);
    EstimateReport report;
    report.estimand = estimand;
    report.scheme = s;
    report.regime = regime;
    report.num_pairs = ds.num_pairs();
    report.num_units = ds.total_sample_size();
    report.point = point_estimate(ds, estimand, s);
    report.variance = variance_estimate(ds, estimand, s);
    report.std_error = std::sqrt(report.variance);
    report.confidence_level = level;
    auto [lo, hi] = confidence_interval(report.point, report.variance, ds.num_pairs(), level, regime);
    report.ci_lower = lo;
    report.ci_upper = hi;
    if (regime != CiRegime::ManyPairs) report.dof = ds.num_pairs() - 1;
    report.conservative = (estimand == Estimand::Sate || estimand == Estimand::Cate);
    return report;
}

}  // namespace mpcr
