#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mpcr/dataset.hpp"
#include "mpcr/rng.hpp"

namespace mpcr {

// --- Potential-outcome data ------------------------------------------------

struct PotentialUnit {
    double y0 = 0.0;
    double y1 = 0.0;
    std::optional<int> r0;  // potential receipts, r1 >= r0 (no defiers)
    std::optional<int> r1;
};

struct PotentialCluster {
    std::vector<PotentialUnit> units;
    std::optional<long long> population_size;

    long long sample_size() const { return static_cast<long long>(units.size()); }
    double mean_effect() const;  // mean of y1 - y0
    double mean_y(int t) const;
    double mean_r(int t) const;
};

struct PotentialPair {
    std::string pair_id;
    std::array<PotentialCluster, 2> clusters;
};

// Both potential outcomes for every unit. The listed units are treated
// as the complete population of each cluster; declared population sizes
// act as aggregation weights for the population-scale estimands.
class PotentialDataset {
public:
    PotentialDataset() = default;
    explicit PotentialDataset(std::vector<PotentialPair> pairs);

    const std::vector<PotentialPair>& pairs() const { return pairs_; }
    int num_pairs() const { return static_cast<int>(pairs_.size()); }
    long long total_sample_size() const;
    bool has_receipts() const;
    bool has_populations() const;

    // Observed dataset under assignment vector z (one entry per pair).
    MpcrDataset realize(const std::vector<int>& z) const;

private:
    std::vector<PotentialPair> pairs_;
};

// Exact averages of the unit effects: Sate over listed units, Cate with
// clusters weighted by their declared population sizes.
double true_estimand(const PotentialDataset& pd, Estimand estimand);

// --- Exact assignment law ---------------------------------------------------

// Value of a statistic under every one of the 2^m assignments, indexed
// by bitmask (bit k = z of pair k), with exact moments under the
// uniform assignment law.
struct ExactLaw {
    std::vector<double> values;
    double mean() const;
    double variance() const;
};

// Evaluates the statistic on the realized dataset for every assignment.
// Enumeration refuses m beyond max_pairs (default 16, hard cap 20).
ExactLaw exact_law(const PotentialDataset& pd,
                   const std::function<double(const MpcrDataset&)>& statistic,
                   int max_pairs = 16);

// Closed-form identities checked against enumeration; each returns the
// absolute residual between the enumerated and closed-form sides.
enum class Identity {
    SampleWeightBias,               // point-estimator bias, sample-size weights
    PopulationWeightBias,           // point-estimator bias, population-size weights
    VarianceBiasSampleWeights,      // variance-estimator bias, sample-size weights
    VarianceBiasPopulationWeights,  // variance-estimator bias, population-size weights
    ClassicalVarianceExpectation,   // exact mean of the classical variance estimator
    CovarianceExpectation,          // exact mean of the outcome/receipt covariance
};

const char* to_string(Identity id);

double check_identity(const PotentialDataset& pd, Identity id);

// --- Fuzz corpus -------------------------------------------------------------

struct FuzzOptions {
    int min_pairs = 2;
    int max_pairs = 6;
    int min_cluster_size = 1;
    int max_cluster_size = 5;
    bool equal_within_pair_sizes = false;
    bool constant_pair_effects = false;  // same unit effect within each pair
    bool receipts = true;
    bool populations = true;
    double outcome_scale = 5.0;
};

PotentialDataset random_potential_dataset(CounterRng& rng, const FuzzOptions& opt = {});

// --- Simulation --------------------------------------------------------------

// One pair blueprint: both clusters share the control mean and the
// treatment effect; unit noise is normal with per-cluster spread.
struct PairTemplate {
    double control_mean = 0.0;
    double effect = 0.0;
    double sd1 = 1.0;
    double sd2 = 1.0;
    int size1 = 2;
    int size2 = 2;
};

struct DgpConfig {
    std::vector<PairTemplate> templates;
    int m = 2;
    int replicates = 1000;
    std::uint64_t seed = 0;
    double level = 0.90;
    Estimand target = Estimand::Uate;  // Uate or Sate
};

enum class VarianceMethod { DesignBased, Classical };

const char* to_string(VarianceMethod m);

struct CoverageSummary {
    double coverage = 0.0;
    double std_error = 0.0;  // binomial
    double nominal = 0.0;
    int replicates = 0;
};

// Bootstraps pairs from the templates, draws unit outcomes, randomizes
// within pairs, and reports how often the t interval covers the truth.
// Bit-reproducible for a fixed (seed, replicates, config).
CoverageSummary coverage_simulation(const DgpConfig& cfg, VarianceMethod method);

// Bundled synthetic pair population for simulation demos: sizes,
// effects and noise spreads all vary across pairs, with effects
// correlated with pair size.
std::vector<PairTemplate> default_coverage_templates();

// --- Bias-variance sweep -------------------------------------------------------

// Sweeps within-pair size imbalance; pair-level effects and cluster
// level mismatch grow with each pair's imbalance via the gradients.
struct BiasVarianceConfig {
    int m = 4;
    int base_size = 6;
    double effect_base = 1.0;
    double effect_gradient = 0.0;
    double level_base = 0.0;
    double level_gradient = 0.0;
    std::vector<double> imbalances = {0.0, 0.2, 0.4, 0.6, 0.8};
};

struct BiasVarianceRow {
    double imbalance = 0.0;
    double bias2_arith = 0.0;
    double var_arith = 0.0;
    double mse_arith = 0.0;
    double bias2_harm = 0.0;
    double var_harm = 0.0;
    double mse_harm = 0.0;
};

// Exact (enumerated) squared bias, variance and MSE of the sample-size
// and harmonic weightings at each sweep point.
std::vector<BiasVarianceRow> bias_variance_profile(const BiasVarianceConfig& cfg);

}  // namespace mpcr
