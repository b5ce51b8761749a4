#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpcr/dataset.hpp"

namespace mpcr {

// Weighted pair-difference estimator: sum(w_k D_k) / sum(w_k). The scheme
// defaults to the estimand's standard weighting and may be overridden,
// including with fully custom per-pair weights.
double point_estimate(const MpcrDataset& ds, Estimand estimand,
                      std::optional<WeightScheme> scheme = std::nullopt);

// Constant-weight special case: the unweighted mean of D_k. Appropriate
// when the quantity of interest lives at the cluster level.
double cluster_level_estimate(const MpcrDataset& ds);

// pair_id -> group label. Pairs sharing a label are modeled as
// exchangeable (common mean and spread).
using GroupLabeling = std::map<std::string, int>;

// Known-group mixture estimator: within each group a harmonic-weight
// mean of D_k, then a population-size weighted average of the group
// means. Requires population sizes.
double mixture_estimate(const MpcrDataset& ds, const GroupLabeling& groups);

// --- Unmatched cluster randomization -------------------------------------

struct UmcrCluster {
    std::string cluster_id;
    int assignment = 0;  // Z_j
    std::vector<double> outcomes;
    std::optional<long long> population_size;

    long long sample_size() const { return static_cast<long long>(outcomes.size()); }
    double outcome_mean() const;
};

class UmcrDataset {
public:
    UmcrDataset() = default;
    explicit UmcrDataset(std::vector<UmcrCluster> clusters);

    const std::vector<UmcrCluster>& clusters() const { return clusters_; }
    long long total_sample_size() const;
    int treated_count() const;
    bool has_populations() const;

private:
    std::vector<UmcrCluster> clusters_;
};

// Weighted per-unit difference estimator for the unmatched design, with
// weights normalized to the total unit count (sample sizes for
// Sate/Uate, population sizes for Cate/Pate). Requires balanced arms.
double umcr_point_estimate(const UmcrDataset& ds, Estimand estimand);

// Pooled treated-unit mean minus pooled control-unit mean. Coincides
// with umcr_point_estimate when all cluster sizes are equal.
double umcr_kappa(const UmcrDataset& ds);

}  // namespace mpcr
