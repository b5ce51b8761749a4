#include "mpcr/estimators.hpp"

#include <cmath>
#include <set>

namespace mpcr {

double point_estimate(const MpcrDataset& ds, Estimand estimand,
                      std::optional<WeightScheme> scheme) {
    WeightScheme s = scheme ? *scheme : default_scheme_for(estimand);
    auto diffs = pair_differences(ds, s);
    double num = 0.0, den = 0.0;
    for (const auto& d : diffs) {
        num += d.raw_weight * d.observed_difference;
        den += d.raw_weight;
    }
    return num / den;
}

double cluster_level_estimate(const MpcrDataset& ds) {
    return point_estimate(ds, Estimand::Sate, WeightScheme::constant());
}

double mixture_estimate(const MpcrDataset& ds, const GroupLabeling& groups) {
    if (groups.empty()) throw ValidationError("mixture estimator: empty group labeling");
    if (!ds.has_populations())
        throw ValidationError("mixture estimator requires population sizes");
    for (const auto& p : ds.pairs())
        if (!groups.count(p.pair_id))
            throw ValidationError("mixture estimator: pair " + p.pair_id + " is unlabeled");

    // Within-group harmonic-weight means of D_k.
    auto diffs = pair_differences(ds, WeightScheme::harmonic_sample());
    std::map<int, double> num, den;
    for (std::size_t k = 0; k < diffs.size(); ++k) {
        int label = groups.at(ds.pairs()[k].pair_id);
        num[label] += diffs[k].raw_weight * diffs[k].observed_difference;
        den[label] += diffs[k].raw_weight;
    }
    std::map<int, double> group_mean;
    for (const auto& [label, total] : num) group_mean[label] = total / den[label];

    double total_population = static_cast<double>(*ds.total_population_size());
    double estimate = 0.0;
    for (const auto& p : ds.pairs()) {
        double pair_population = static_cast<double>(*p.clusters[0].population_size +
                                                     *p.clusters[1].population_size);
        estimate += pair_population * group_mean.at(groups.at(p.pair_id));
    }
    return estimate / total_population;
}

double UmcrCluster::outcome_mean() const {
    if (outcomes.empty()) throw ComputationError("UMCR cluster " + cluster_id + " is empty");
    double s = 0.0;
    for (double y : outcomes) s += y;
    return s / static_cast<double>(outcomes.size());
}

UmcrDataset::UmcrDataset(std::vector<UmcrCluster> clusters) : clusters_(std::move(clusters)) {
    if (clusters_.empty()) throw ValidationError("UMCR dataset: no clusters");
    std::set<std::string> seen;
    for (const auto& c : clusters_) {
        if (c.outcomes.empty())
            throw ValidationError("UMCR cluster " + c.cluster_id + " is empty");
        if (c.assignment != 0 && c.assignment != 1)
            throw ValidationError("UMCR cluster " + c.cluster_id + ": assignment must be 0 or 1");
        if (!c.cluster_id.empty() && !seen.insert(c.cluster_id).second)
            throw ValidationError("duplicate UMCR cluster id " + c.cluster_id);
    }
}

long long UmcrDataset::total_sample_size() const {
    long long n = 0;
    for (const auto& c : clusters_) n += c.sample_size();
    return n;
}

int UmcrDataset::treated_count() const {
    int t = 0;
    for (const auto& c : clusters_) t += c.assignment;
    return t;
}

bool UmcrDataset::has_populations() const {
    for (const auto& c : clusters_)
        if (!c.population_size) return false;
    return true;
}

double umcr_point_estimate(const UmcrDataset& ds, Estimand estimand) {
    int treated = ds.treated_count();
    int total = static_cast<int>(ds.clusters().size());
    if (2 * treated != total)
        throw ValidationError("UMCR estimator requires equally sized arms (m treated, m control)");

    bool population_weights = (estimand == Estimand::Cate || estimand == Estimand::Pate);
    if (population_weights && !ds.has_populations())
        throw ValidationError("population weights requested but population sizes are absent");

    double n = static_cast<double>(ds.total_sample_size());
    double wsum = 0.0;
    std::vector<double> w;
    w.reserve(ds.clusters().size());
    for (const auto& c : ds.clusters()) {
        double wj = population_weights ? static_cast<double>(*c.population_size)
                                       : static_cast<double>(c.sample_size());
        w.push_back(wj);
        wsum += wj;
    }

    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const auto& c = ds.clusters()[j];
        double normalized = n * w[j] / wsum;
        double sign = c.assignment == 1 ? 1.0 : -1.0;
        acc += normalized * sign * c.outcome_mean();
    }
    return 2.0 * acc / n;
}

double umcr_kappa(const UmcrDataset& ds) {
    double treated_total = 0.0, control_total = 0.0;
    long long treated_units = 0, control_units = 0;
    for (const auto& c : ds.clusters()) {
        double s = 0.0;
        for (double y : c.outcomes) s += y;
        if (c.assignment == 1) {
            treated_total += s;
            treated_units += c.sample_size();
        } else {
            control_total += s;
            control_units += c.sample_size();
        }
    }
    if (treated_units == 0 || control_units == 0)
        throw ComputationError("kappa estimator needs at least one cluster in each arm");
    return treated_total / static_cast<double>(treated_units) -
           control_total / static_cast<double>(control_units);
}

}  // namespace mpcr
