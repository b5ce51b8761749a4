#include "mpcr/power.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mpcr/special_functions.hpp"

namespace mpcr {

const char* to_string(PowerMode m) {
    return m == PowerMode::Uate ? "uate" : "pate";
}

namespace {

// Two-sided rejection probability of the t test with the given degrees
// of freedom when the statistic is noncentral t with parameter ncp.
double power_at(int dof, double alpha, double ncp) {
    double crit = t_quantile(static_cast<double>(dof), 1.0 - alpha / 2.0);
    double p = 1.0 + noncentral_t_cdf(-crit, static_cast<double>(dof), ncp) -
               noncentral_t_cdf(crit, static_cast<double>(dof), ncp);
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("alpha must lie in (0,1)");
}

double pate_attenuation(const PowerSpec& spec) {
    if (!spec.pi || !spec.nbar)
        throw ValidationError("pate power needs pi and nbar");
    if (*spec.pi < 0.0) throw ValidationError("pi must be nonnegative");
    if (!(*spec.nbar > 0.0)) throw ValidationError("nbar must be positive");
    return std::sqrt(1.0 + *spec.pi / *spec.nbar);
}

}  // namespace

double power_uate(const PowerSpec& spec) {
    check_alpha(spec.alpha);
    if (spec.m < 2) throw ValidationError("power needs m >= 2 pairs");
    return power_at(spec.m - 1, spec.alpha, spec.effect * std::sqrt(static_cast<double>(spec.m)));
}

double power_pate(const PowerSpec& spec) {
    check_alpha(spec.alpha);
    if (spec.m < 2) throw ValidationError("power needs m >= 2 pairs");
    double ncp = spec.effect * std::sqrt(static_cast<double>(spec.m)) / pate_attenuation(spec);
    return power_at(spec.m - 1, spec.alpha, ncp);
}

namespace {

double power_for(double alpha, double effect, int m, PowerMode mode, std::optional<double> pi,
                 std::optional<double> nbar) {
    PowerSpec spec{alpha, m, effect, pi, nbar};
    return mode == PowerMode::Uate ? power_uate(spec) : power_pate(spec);
}

}  // namespace

int sample_size(double alpha, double target_power, double effect, PowerMode mode,
                std::optional<double> pi, std::optional<double> nbar) {
    check_alpha(alpha);
    if (!(target_power > 0.0 && target_power < 1.0))
        throw ValidationError("target power must lie in (0,1)");
    if (effect == 0.0)
        throw ComputationError("unreachable power: effect size is zero");

    const int hard_cap = 1 << 26;
    if (power_for(alpha, effect, 2, mode, pi, nbar) >= target_power) return 2;
    // Exponential search for an upper bound, then binary search for the
    // smallest sufficient m (power is increasing in m).
    int lo = 2, hi = 4;
    while (power_for(alpha, effect, hi, mode, pi, nbar) < target_power) {
        lo = hi;
        hi *= 2;
        if (hi > hard_cap)
            throw ComputationError("unreachable power: required m exceeds the search cap");
    }
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (power_for(alpha, effect, mid, mode, pi, nbar) >= target_power)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double minimum_detectable_effect(double alpha, double target_power, int m, PowerMode mode,
                                 std::optional<double> pi, std::optional<double> nbar) {
    check_alpha(alpha);
    if (m < 2) throw ValidationError("minimum detectable effect needs m >= 2 pairs");
    if (!(target_power > alpha && target_power < 1.0))
        throw ValidationError("target power must lie in (alpha, 1)");

    double lo = 0.0, hi = 1.0;
    while (power_for(alpha, hi, m, mode, pi, nbar) < target_power) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw ComputationError("minimum detectable effect: bracketing failed");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (power_for(alpha, mid, m, mode, pi, nbar) >= target_power)
            hi = mid;
        else
            lo = mid;
        if (hi - lo < 1e-10 * std::max(1.0, hi)) break;
    }
    // The upper end of the bracket: power(hi) >= target, so solving for
    // the sample size at the returned effect recovers m exactly.
    return hi;
}

EfficiencyReport relative_efficiency_estimate(const MpcrDataset& ds, Estimand estimand) {
    if (ds.num_pairs() < 2)
        throw ValidationError("efficiency estimation needs m >= 2 pairs");
    auto diffs = pair_differences(ds, default_scheme_for(estimand));
    double m = static_cast<double>(ds.num_pairs());

    std::vector<double> treated, control;
    treated.reserve(ds.num_pairs());
    control.reserve(ds.num_pairs());
    bool equal_sizes = true;
    for (std::size_t k = 0; k < diffs.size(); ++k) {
        const MatchedPair& p = ds.pairs()[k];
        treated.push_back(diffs[k].normalized_weight * p.treated().outcome_mean());
        control.push_back(diffs[k].normalized_weight * p.control().outcome_mean());
        if (p.clusters[0].sample_size() != p.clusters[1].sample_size()) equal_sizes = false;
    }
    double mean_t = 0.0, mean_c = 0.0;
    for (std::size_t k = 0; k < treated.size(); ++k) {
        mean_t += treated[k];
        mean_c += control[k];
    }
    mean_t /= m;
    mean_c /= m;
    double var_t = 0.0, var_c = 0.0, cov = 0.0;
    for (std::size_t k = 0; k < treated.size(); ++k) {
        var_t += (treated[k] - mean_t) * (treated[k] - mean_t);
        var_c += (control[k] - mean_c) * (control[k] - mean_c);
        cov += (treated[k] - mean_t) * (control[k] - mean_c);
    }
    var_t /= (m - 1.0);
    var_c /= (m - 1.0);
    cov /= (m - 1.0);

    EfficiencyReport report;
    report.covariance_term = cov;
    report.variance_terms = {var_t, var_c};
    report.equal_within_pair_sizes = equal_sizes;
    double denom = var_t + var_c;
    if (denom == 0.0)
        throw ComputationError("efficiency ratio undefined: both weighted mean series are constant");
    double share = 2.0 * cov / denom;
    if (share >= 1.0) {
        report.unbounded = true;
        report.ratio = std::numeric_limits<double>::infinity();
    } else {
        report.ratio = 1.0 / (1.0 - share);
    }
    return report;
}

double pair_correlation(const MpcrDataset& ds, bool weighted) {
    if (ds.num_pairs() < 2)
        throw ValidationError("pair correlation needs m >= 2 pairs");
    std::vector<double> treated, control;
    for (const auto& p : ds.pairs()) {
        double w = 1.0;
        if (weighted) {
            if (p.clusters[0].population_size && p.clusters[1].population_size)
                w = static_cast<double>(*p.clusters[0].population_size +
                                        *p.clusters[1].population_size);
            else
                w = static_cast<double>(p.sample_size());
        }
        treated.push_back(w * p.treated().outcome_mean());
        control.push_back(w * p.control().outcome_mean());
    }
    double m = static_cast<double>(treated.size());
    double mean_t = 0.0, mean_c = 0.0;
    for (std::size_t k = 0; k < treated.size(); ++k) {
        mean_t += treated[k];
        mean_c += control[k];
    }
    mean_t /= m;
    mean_c /= m;
    double var_t = 0.0, var_c = 0.0, cov = 0.0;
    for (std::size_t k = 0; k < treated.size(); ++k) {
        var_t += (treated[k] - mean_t) * (treated[k] - mean_t);
        var_c += (control[k] - mean_c) * (control[k] - mean_c);
        cov += (treated[k] - mean_t) * (control[k] - mean_c);
    }
    if (var_t == 0.0 || var_c == 0.0)
        throw ComputationError("pair correlation undefined: a mean series has zero variance");
    return cov / std::sqrt(var_t * var_c);
}

namespace {

// Noncentrality needed for the two-sided t test at the given dof to
// reach the target power.
double required_noncentrality(int dof, double alpha, double target_power) {
    double crit = t_quantile(static_cast<double>(dof), 1.0 - alpha / 2.0);
    auto power_of = [&](double ncp) {
        return 1.0 + noncentral_t_cdf(-crit, static_cast<double>(dof), ncp) -
               noncentral_t_cdf(crit, static_cast<double>(dof), ncp);
    };
    double lo = 0.0, hi = 1.0;
    while (power_of(hi) < target_power) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw ComputationError("required noncentrality: bracketing failed");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (power_of(mid) >= target_power)
            hi = mid;
        else
            lo = mid;
        if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double break_even_correlation(int m, double alpha, double target_power) {
    check_alpha(alpha);
    if (m < 2) throw ValidationError("break-even correlation needs m >= 2 pairs");
    if (!(target_power > alpha && target_power < 1.0))
        throw ValidationError("target power must lie in (alpha, 1)");

    // In units of the common cluster-mean dispersion, the paired design
    // detects ncp_m * sqrt(1 - rho) / sqrt(m) and the unmatched design
    // ncp_u / sqrt(m); the crossing is where they agree.
    double ncp_matched = required_noncentrality(m - 1, alpha, target_power);
    double ncp_unmatched = required_noncentrality(2 * (m - 1), alpha, target_power);

    auto gap = [&](double rho) {
        return ncp_matched * std::sqrt(1.0 - rho) - ncp_unmatched;
    };
    double lo = 0.0, hi = 1.0;
    if (gap(lo) <= 0.0) return 0.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (gap(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-8) break;
    }
    return 0.5 * (lo + hi);
}

double estimate_pi(const MpcrDataset& ds) {
    if (ds.num_pairs() < 2) throw ValidationError("pi estimation needs m >= 2 pairs");
    double m = static_cast<double>(ds.num_pairs());

    double within = 0.0;  // sum over slots of the mean within-cluster variance
    std::vector<double> d;
    for (const auto& p : ds.pairs()) {
        for (const auto& c : p.clusters) within += c.outcome_variance();
        d.push_back(p.treated().outcome_mean() - p.control().outcome_mean());
    }
    within /= m;

    double mean_d = 0.0;
    for (double v : d) mean_d += v;
    mean_d /= m;
    double var_d = 0.0;
    for (double v : d) var_d += (v - mean_d) * (v - mean_d);
    var_d /= (m - 1.0);
    if (var_d == 0.0)
        throw ComputationError("pi undefined: observed differences have zero variance");
    return within / var_d;
}

}  // namespace mpcr
