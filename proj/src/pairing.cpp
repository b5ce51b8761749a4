#include "mpcr/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpcr/rng.hpp"

namespace mpcr {

namespace {

struct StandardizedSpace {
    std::vector<std::string> ids;               // sorted
    std::vector<std::vector<double>> points;    // parallel to ids
    std::vector<std::string> warnings;
};

StandardizedSpace standardize(const std::vector<ClusterProfile>& profiles, bool include_size) {
    if (profiles.size() < 4)
        throw ValidationError("pairing needs at least 4 clusters");
    if (profiles.size() % 2 != 0)
        throw ValidationError("odd count: pairing needs an even number of clusters");

    std::size_t arity = profiles.front().covariates.size();
    for (const auto& p : profiles)
        if (p.covariates.size() != arity)
            throw ValidationError("cluster " + p.cluster_id + ": covariate arity differs");

    std::vector<const ClusterProfile*> sorted;
    for (const auto& p : profiles) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const ClusterProfile* a, const ClusterProfile* b) {
                  return a->cluster_id < b->cluster_id;
              });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i]->cluster_id == sorted[i - 1]->cluster_id)
            throw ValidationError("duplicate cluster id " + sorted[i]->cluster_id);

    std::size_t dims = arity + (include_size ? 1 : 0);
    auto raw = [&](const ClusterProfile& p, std::size_t d) {
        return d < arity ? p.covariates[d] : p.size;
    };

    StandardizedSpace space;
    for (const auto* p : sorted) space.ids.push_back(p->cluster_id);
    space.points.assign(sorted.size(), {});

    double n = static_cast<double>(sorted.size());
    for (std::size_t d = 0; d < dims; ++d) {
        double mean = 0.0;
        for (const auto* p : sorted) mean += raw(*p, d);
        mean /= n;
        double ss = 0.0;
        for (const auto* p : sorted) ss += (raw(*p, d) - mean) * (raw(*p, d) - mean);
        double sd = std::sqrt(ss / (n - 1.0));
        if (sd == 0.0) {
            std::string name = d < arity ? "cov_" + std::to_string(d + 1) : "size";
            space.warnings.push_back("dropped zero-variance dimension " + name);
            continue;
        }
        for (std::size_t i = 0; i < sorted.size(); ++i)
            space.points[i].push_back((raw(*sorted[i], d) - mean) / sd);
    }
    return space;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(s);
}

}  // namespace

Pairing pair_clusters_greedy(const std::vector<ClusterProfile>& profiles, bool include_size) {
    StandardizedSpace space = standardize(profiles, include_size);
    std::size_t n = space.ids.size();

    std::vector<bool> used(n, false);
    Pairing result;
    result.warnings = space.warnings;
    for (std::size_t round = 0; round < n / 2; ++round) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (used[j]) continue;
                double d = distance(space.points[i], space.points[j]);
                if (d < best) {  // indices are id-sorted, so first hit is the tie-break
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        used[bi] = used[bj] = true;
        result.pairs.emplace_back(space.ids[bi], space.ids[bj]);
        result.total_distance += best;
    }
    std::sort(result.pairs.begin(), result.pairs.end());
    return result;
}

Pairing pair_clusters_optimal(const std::vector<ClusterProfile>& profiles, bool include_size) {
    if (profiles.size() > 16)
        throw ValidationError("optimal pairing is limited to 16 clusters; use greedy");
    StandardizedSpace space = standardize(profiles, include_size);
    std::size_t n = space.ids.size();

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] = distance(space.points[i], space.points[j]);

    // Exact minimum-weight perfect matching over subsets: the lowest
    // set index of each subset is matched against every other member,
    // partners scanned in index order so ties resolve lexicographically.
    std::size_t full = std::size_t{1} << n;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> best(full, inf);
    std::vector<int> choice(full, -1);
    best[0] = 0.0;
    for (std::size_t mask = 1; mask < full; ++mask) {
        std::size_t i = 0;
        while (!(mask & (std::size_t{1} << i))) ++i;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!(mask & (std::size_t{1} << j))) continue;
            std::size_t sub = mask ^ (std::size_t{1} << i) ^ (std::size_t{1} << j);
            if (best[sub] == inf) continue;
            double cost = best[sub] + dist[i][j];
            if (cost < best[mask]) {
                best[mask] = cost;
                choice[mask] = static_cast<int>(j);
            }
        }
    }

    Pairing result;
    result.warnings = space.warnings;
    result.total_distance = best[full - 1];
    std::size_t mask = full - 1;
    while (mask != 0) {
        std::size_t i = 0;
        while (!(mask & (std::size_t{1} << i))) ++i;
        std::size_t j = static_cast<std::size_t>(choice[mask]);
        result.pairs.emplace_back(space.ids[i], space.ids[j]);
        mask ^= (std::size_t{1} << i) | (std::size_t{1} << j);
    }
    std::sort(result.pairs.begin(), result.pairs.end());
    return result;
}

std::vector<int> assign_within_pairs(const Pairing& pairing, std::uint64_t seed) {
    CounterRng rng(seed, 0);
    std::vector<int> z;
    z.reserve(pairing.pairs.size());
    for (std::size_t k = 0; k < pairing.pairs.size(); ++k) z.push_back(rng.next_bit());
    return z;
}

}  // namespace mpcr
