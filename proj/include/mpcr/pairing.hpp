#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mpcr/errors.hpp"

namespace mpcr {

struct ClusterProfile {
    std::string cluster_id;
    double size = 0.0;
    std::vector<double> covariates;  // same arity across all clusters
};

struct Pairing {
    std::vector<std::pair<std::string, std::string>> pairs;  // ids, smaller first
    double total_distance = 0.0;
    std::vector<std::string> warnings;  // e.g. dropped zero-variance dimensions
};

// Repeatedly joins the globally closest remaining clusters under
// Euclidean distance in standardized covariate space (size appended as
// a dimension when include_size). Deterministic: input is sorted by id
// and ties break lexicographically.
Pairing pair_clusters_greedy(const std::vector<ClusterProfile>& profiles, bool include_size);

// Minimum total-distance perfect matching over the same standardized
// space, exact over all pairings. Limited to 16 clusters; larger
// inputs are rejected toward the greedy method.
Pairing pair_clusters_optimal(const std::vector<ClusterProfile>& profiles, bool include_size);

// Independent fair coin per pair from a seeded deterministic stream;
// entry k is z for pairing.pairs[k].
std::vector<int> assign_within_pairs(const Pairing& pairing, std::uint64_t seed);

}  // namespace mpcr
