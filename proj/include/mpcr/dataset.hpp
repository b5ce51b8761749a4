#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpcr/errors.hpp"

namespace mpcr {

// One surveyed unit: outcome Y, and in encouragement designs the observed
// treatment-receipt indicator R.
struct UnitRecord {
    std::string pair_id;
    int cluster_slot = 1;  // 1 or 2
    double outcome = 0.0;
    std::optional<int> receipt;  // 0/1 when present
};

struct ClusterData {
    std::string pair_id;
    int cluster_slot = 1;
    std::vector<UnitRecord> units;
    std::optional<long long> population_size;

    long long sample_size() const { return static_cast<long long>(units.size()); }
    double outcome_mean() const;
    double receipt_mean() const;      // requires receipts on every unit
    double outcome_variance() const;  // unbiased (n-1); requires >= 2 units
};

// A pair of clusters sharing one randomization coin. Slot 1 is treated
// iff z = 1; orientation is always derived from (z, slot), never stored
// per unit.
struct MatchedPair {
    std::string pair_id;
    int assignment = 0;  // Z_k
    std::array<ClusterData, 2> clusters;  // index 0 = slot 1, index 1 = slot 2

    const ClusterData& treated() const { return clusters[assignment == 1 ? 0 : 1]; }
    const ClusterData& control() const { return clusters[assignment == 1 ? 1 : 0]; }
    long long sample_size() const {
        return clusters[0].sample_size() + clusters[1].sample_size();
    }
};

enum class Estimand { Sate, Cate, Uate, Pate };

const char* to_string(Estimand e);
Estimand parse_estimand(const std::string& s);

// Rule producing the per-pair weight w_k. The estimators consume the
// normalized form scaled to sum to the total unit count.
struct WeightScheme {
    enum class Kind {
        ArithmeticSample,      // n_1k + n_2k
        ArithmeticPopulation,  // N_1k + N_2k
        HarmonicSample,        // n_1k * n_2k / (n_1k + n_2k)
        Constant,              // 1
        Custom,                // user-supplied positive reals, keyed by pair id
    };

    Kind kind = Kind::ArithmeticSample;
    std::map<std::string, double> custom_weights;

    static WeightScheme arithmetic_sample() { return {Kind::ArithmeticSample, {}}; }
    static WeightScheme arithmetic_population() { return {Kind::ArithmeticPopulation, {}}; }
    static WeightScheme harmonic_sample() { return {Kind::HarmonicSample, {}}; }
    static WeightScheme constant() { return {Kind::Constant, {}}; }
    static WeightScheme custom(std::map<std::string, double> weights) {
        return {Kind::Custom, std::move(weights)};
    }
};

const char* to_string(WeightScheme::Kind k);

// Default weighting per estimand: sample sizes for Sate/Uate, population
// sizes for Cate/Pate.
WeightScheme default_scheme_for(Estimand e);

struct PairDifference {
    std::string pair_id;
    double raw_weight = 0.0;
    double normalized_weight = 0.0;      // n * w_k / sum(w)
    double observed_difference = 0.0;    // treated mean - control mean
};

// Immutable after construction; all member functions are const and
// safe for concurrent reads.
class MpcrDataset {
public:
    MpcrDataset() = default;
    explicit MpcrDataset(std::vector<MatchedPair> pairs);

    const std::vector<MatchedPair>& pairs() const { return pairs_; }
    int num_pairs() const { return static_cast<int>(pairs_.size()); }
    long long total_sample_size() const;
    bool has_populations() const;
    std::optional<long long> total_population_size() const;
    bool has_receipts() const;

private:
    std::vector<MatchedPair> pairs_;
};

// Assembles and validates a dataset from flat unit records, an optional
// (pair_id, slot) -> population size map, and pair_id -> z assignments.
// Throws ValidationError on any malformed input.
MpcrDataset load_dataset(const std::vector<UnitRecord>& units,
                         const std::map<std::pair<std::string, int>, long long>& populations,
                         const std::map<std::string, int>& assignments);

struct DesignReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool ok() const { return violations.empty(); }
};

// Structural design checks: exactly one treated cluster per pair (binary
// z), nonempty clusters, unique pair ids, coherent receipts and
// population sizes. Warnings flag datasets too small for variance work.
DesignReport validate_design(const MpcrDataset& ds);

struct DropResult {
    MpcrDataset dataset;
    std::vector<std::string> dropped_pairs;
    std::vector<std::string> warnings;
};

// Removes whole pairs containing any lost cluster (identified by
// (pair_id, slot)). Throws if nothing survives.
DropResult drop_incomplete_pairs(const MpcrDataset& ds,
                                 const std::vector<std::pair<std::string, int>>& lost_clusters);

// Per-pair observed differences D_k with raw and normalized weights.
std::vector<PairDifference> pair_differences(const MpcrDataset& ds, const WeightScheme& scheme);

// Same shape, with receipt means in place of outcome means (G_k).
std::vector<PairDifference> receipt_differences(const MpcrDataset& ds, const WeightScheme& scheme);

}  // namespace mpcr
