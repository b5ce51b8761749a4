#include "mpcr/oracle.hpp"

#include <cmath>

#include "mpcr/estimators.hpp"
#include "mpcr/inference.hpp"
#include "mpcr/noncompliance.hpp"
#include "mpcr/special_functions.hpp"

namespace mpcr {

double PotentialCluster::mean_effect() const {
    double s = 0.0;
    for (const auto& u : units) s += u.y1 - u.y0;
    return s / static_cast<double>(units.size());
}

double PotentialCluster::mean_y(int t) const {
    double s = 0.0;
    for (const auto& u : units) s += t == 1 ? u.y1 : u.y0;
    return s / static_cast<double>(units.size());
}

double PotentialCluster::mean_r(int t) const {
    double s = 0.0;
    for (const auto& u : units) {
        if (!u.r0 || !u.r1) throw ValidationError("potential receipts missing");
        s += static_cast<double>(t == 1 ? *u.r1 : *u.r0);
    }
    return s / static_cast<double>(units.size());
}

PotentialDataset::PotentialDataset(std::vector<PotentialPair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw ValidationError("potential dataset: no pairs");
    for (const auto& p : pairs_) {
        for (const auto& c : p.clusters) {
            if (c.units.empty())
                throw ValidationError("potential dataset: empty cluster in pair " + p.pair_id);
            if (c.population_size && *c.population_size < c.sample_size())
                throw ValidationError("potential dataset: population smaller than sample in pair " +
                                      p.pair_id);
            for (const auto& u : c.units) {
                if (u.r0.has_value() != u.r1.has_value())
                    throw ValidationError("potential dataset: receipts must give both r0 and r1");
                if (u.r0 && u.r1) {
                    if ((*u.r0 != 0 && *u.r0 != 1) || (*u.r1 != 0 && *u.r1 != 1))
                        throw ValidationError("potential dataset: receipts must be 0 or 1");
                    if (*u.r1 < *u.r0)
                        throw ValidationError(
                            "potential dataset: r1 < r0 violates monotonicity (pair " + p.pair_id + ")");
                }
            }
        }
    }
}

long long PotentialDataset::total_sample_size() const {
    long long n = 0;
    for (const auto& p : pairs_) n += p.clusters[0].sample_size() + p.clusters[1].sample_size();
    return n;
}

bool PotentialDataset::has_receipts() const {
    for (const auto& p : pairs_)
        for (const auto& c : p.clusters)
            for (const auto& u : c.units)
                if (!u.r0 || !u.r1) return false;
    return true;
}

bool PotentialDataset::has_populations() const {
    for (const auto& p : pairs_)
        for (const auto& c : p.clusters)
            if (!c.population_size) return false;
    return true;
}

MpcrDataset PotentialDataset::realize(const std::vector<int>& z) const {
    if (z.size() != pairs_.size())
        throw ValidationError("assignment vector length must equal the number of pairs");
    std::vector<MatchedPair> out;
    out.reserve(pairs_.size());
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
        const PotentialPair& p = pairs_[k];
        MatchedPair mp;
        mp.pair_id = p.pair_id;
        mp.assignment = z[k];
        for (int slot = 1; slot <= 2; ++slot) {
            const PotentialCluster& pc = p.clusters[slot - 1];
            bool treated = (slot == 1) == (z[k] == 1);
            ClusterData c;
            c.pair_id = p.pair_id;
            c.cluster_slot = slot;
            c.population_size = pc.population_size;
            c.units.reserve(pc.units.size());
            for (const auto& u : pc.units) {
                UnitRecord r;
                r.pair_id = p.pair_id;
                r.cluster_slot = slot;
                r.outcome = treated ? u.y1 : u.y0;
                if (u.r0 && u.r1) r.receipt = treated ? *u.r1 : *u.r0;
                c.units.push_back(std::move(r));
            }
            mp.clusters[slot - 1] = std::move(c);
        }
        out.push_back(std::move(mp));
    }
    return MpcrDataset(std::move(out));
}

double true_estimand(const PotentialDataset& pd, Estimand estimand) {
    if (estimand == Estimand::Sate || estimand == Estimand::Uate) {
        double s = 0.0;
        long long n = 0;
        for (const auto& p : pd.pairs())
            for (const auto& c : p.clusters)
                for (const auto& u : c.units) {
                    s += u.y1 - u.y0;
                    ++n;
                }
        return s / static_cast<double>(n);
    }
    if (!pd.has_populations())
        throw ValidationError("population-scale estimand needs population sizes");
    double s = 0.0, total = 0.0;
    for (const auto& p : pd.pairs())
        for (const auto& c : p.clusters) {
            double w = static_cast<double>(*c.population_size);
            s += w * c.mean_effect();
            total += w;
        }
    return s / total;
}

double ExactLaw::mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double ExactLaw::variance() const {
    double m = mean();
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return s / static_cast<double>(values.size());
}

ExactLaw exact_law(const PotentialDataset& pd,
                   const std::function<double(const MpcrDataset&)>& statistic, int max_pairs) {
    int m = pd.num_pairs();
    if (max_pairs > 20) max_pairs = 20;
    if (m > max_pairs)
        throw ValidationError("enumeration refused: m exceeds the cap of " +
                              std::to_string(max_pairs) + " pairs");
    ExactLaw law;
    law.values.reserve(std::size_t{1} << m);
    std::vector<int> z(m, 0);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        for (int k = 0; k < m; ++k) z[k] = static_cast<int>((mask >> k) & 1u);
        law.values.push_back(statistic(pd.realize(z)));
    }
    return law;
}

const char* to_string(Identity id) {
    switch (id) {
        case Identity::SampleWeightBias: return "sample_weight_bias";
        case Identity::PopulationWeightBias: return "population_weight_bias";
        case Identity::VarianceBiasSampleWeights: return "variance_bias_sample_weights";
        case Identity::VarianceBiasPopulationWeights: return "variance_bias_population_weights";
        case Identity::ClassicalVarianceExpectation: return "classical_variance_expectation";
        case Identity::CovarianceExpectation: return "covariance_expectation";
    }
    return "?";
}

namespace {

// Potential within-pair differences: d1 = D_k(1), d0 = D_k(0); same for
// receipts when present.
struct PotentialDiffs {
    std::vector<double> d1, d0, g1, g0;
};

PotentialDiffs potential_diffs(const PotentialDataset& pd, bool receipts) {
    PotentialDiffs out;
    for (const auto& p : pd.pairs()) {
        out.d1.push_back(p.clusters[0].mean_y(1) - p.clusters[1].mean_y(0));
        out.d0.push_back(p.clusters[1].mean_y(1) - p.clusters[0].mean_y(0));
        if (receipts) {
            out.g1.push_back(p.clusters[0].mean_r(1) - p.clusters[1].mean_r(0));
            out.g0.push_back(p.clusters[1].mean_r(1) - p.clusters[0].mean_r(0));
        }
    }
    return out;
}

std::vector<double> normalized_weights(const PotentialDataset& pd, const WeightScheme& scheme) {
    std::vector<int> z(pd.num_pairs(), 0);
    auto diffs = pair_differences(pd.realize(z), scheme);
    std::vector<double> w;
    for (const auto& d : diffs) w.push_back(d.normalized_weight);
    return w;
}

double sample_variance(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double sample_covariance(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(a.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size() - 1);
}

}  // namespace

double check_identity(const PotentialDataset& pd, Identity id) {
    int m = pd.num_pairs();
    double n = static_cast<double>(pd.total_sample_size());

    switch (id) {
        case Identity::SampleWeightBias: {
            auto law = exact_law(pd, [](const MpcrDataset& ds) {
                return point_estimate(ds, Estimand::Sate, WeightScheme::arithmetic_sample());
            });
            double lhs = law.mean() - true_estimand(pd, Estimand::Sate);
            double rhs = 0.0;
            for (const auto& p : pd.pairs()) {
                double n1 = static_cast<double>(p.clusters[0].sample_size());
                double n2 = static_cast<double>(p.clusters[1].sample_size());
                double half = 0.5 * (n1 + n2);
                rhs += (half - n1) * p.clusters[0].mean_effect();
                rhs += (half - n2) * p.clusters[1].mean_effect();
            }
            rhs /= n;
            return std::fabs(lhs - rhs);
        }
        case Identity::PopulationWeightBias: {
            if (!pd.has_populations())
                throw ValidationError("identity inapplicable: needs population sizes");
            auto law = exact_law(pd, [](const MpcrDataset& ds) {
                return point_estimate(ds, Estimand::Cate, WeightScheme::arithmetic_population());
            });
            double lhs = law.mean() - true_estimand(pd, Estimand::Cate);
            double total = 0.0, rhs = 0.0;
            for (const auto& p : pd.pairs()) {
                double n1 = static_cast<double>(*p.clusters[0].population_size);
                double n2 = static_cast<double>(*p.clusters[1].population_size);
                double half = 0.5 * (n1 + n2);
                rhs += (half - n1) * p.clusters[0].mean_effect();
                rhs += (half - n2) * p.clusters[1].mean_effect();
                total += n1 + n2;
            }
            rhs /= total;
            return std::fabs(lhs - rhs);
        }
        case Identity::VarianceBiasSampleWeights:
        case Identity::VarianceBiasPopulationWeights: {
            WeightScheme scheme = id == Identity::VarianceBiasSampleWeights
                                      ? WeightScheme::arithmetic_sample()
                                      : WeightScheme::arithmetic_population();
            if (id == Identity::VarianceBiasPopulationWeights && !pd.has_populations())
                throw ValidationError("identity inapplicable: needs population sizes");
            auto law_sigma = exact_law(pd, [&](const MpcrDataset& ds) {
                return variance_estimate(ds, Estimand::Sate, scheme);
            });
            auto law_psi = exact_law(pd, [&](const MpcrDataset& ds) {
                return point_estimate(ds, Estimand::Sate, scheme);
            });
            double lhs = law_sigma.mean() - law_psi.variance();
            auto diffs = potential_diffs(pd, false);
            auto w = normalized_weights(pd, scheme);
            std::vector<double> s(m);
            for (int k = 0; k < m; ++k) s[k] = w[k] * (diffs.d1[k] + diffs.d0[k]);
            double rhs = static_cast<double>(m) / (4.0 * n * n) * sample_variance(s);
            return std::fabs(lhs - rhs);
        }
        case Identity::ClassicalVarianceExpectation: {
            WeightScheme scheme = WeightScheme::harmonic_sample();
            auto law = exact_law(pd, [&](const MpcrDataset& ds) {
                return harmonic_variance_estimate(ds, scheme);
            });
            auto diffs = potential_diffs(pd, false);
            auto w = normalized_weights(pd, scheme);
            double wsq = 0.0;
            for (double v : w) wsq += v * v;
            double first = 0.0;
            for (int k = 0; k < m; ++k)
                first += (1.0 - w[k] / n) * w[k] *
                         (diffs.d1[k] * diffs.d1[k] + diffs.d0[k] * diffs.d0[k]);
            double cross = 0.0;
            for (int k = 0; k < m; ++k)
                for (int j = 0; j < m; ++j)
                    if (j != k)
                        cross += w[k] * w[j] * (diffs.d1[k] + diffs.d0[k]) *
                                 (diffs.d1[j] + diffs.d0[j]);
            double rhs = wsq / (2.0 * n * n * n) * (first - cross / (2.0 * n));
            return std::fabs(law.mean() - rhs);
        }
        case Identity::CovarianceExpectation: {
            if (!pd.has_receipts())
                throw ValidationError("identity inapplicable: needs potential receipts");
            WeightScheme scheme = WeightScheme::arithmetic_sample();
            auto law_nu = exact_law(pd, [&](const MpcrDataset& ds) {
                return covariance_estimate(ds, scheme);
            });
            // Enumerated covariance between the outcome and receipt estimators.
            auto law_psi = exact_law(pd, [&](const MpcrDataset& ds) {
                return point_estimate(ds, Estimand::Sate, scheme);
            });
            auto law_tau = exact_law(pd, [&](const MpcrDataset& ds) {
                return receipt_itt_estimate(ds, scheme);
            });
            double e_joint = 0.0;
            for (std::size_t i = 0; i < law_psi.values.size(); ++i)
                e_joint += law_psi.values[i] * law_tau.values[i];
            e_joint /= static_cast<double>(law_psi.values.size());
            double cov_enum = e_joint - law_psi.mean() * law_tau.mean();

            auto diffs = potential_diffs(pd, true);
            auto w = normalized_weights(pd, scheme);
            std::vector<double> u(m), v(m);
            for (int k = 0; k < m; ++k) {
                u[k] = w[k] * (diffs.d1[k] + diffs.d0[k]);
                v[k] = w[k] * (diffs.g1[k] + diffs.g0[k]);
            }
            double rhs = static_cast<double>(m) / (4.0 * n * n) * sample_covariance(u, v);
            return std::fabs((law_nu.mean() - cov_enum) - rhs);
        }
    }
    throw ValidationError("unknown identity");
}

PotentialDataset random_potential_dataset(CounterRng& rng, const FuzzOptions& opt) {
    int m = opt.min_pairs +
            static_cast<int>(rng.next_below(static_cast<std::uint64_t>(opt.max_pairs - opt.min_pairs + 1)));
    int size_range = opt.max_cluster_size - opt.min_cluster_size + 1;
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_unit(); };

    std::vector<PotentialPair> pairs;
    for (int k = 0; k < m; ++k) {
        PotentialPair p;
        p.pair_id = std::to_string(k + 1);
        int n1 = opt.min_cluster_size + static_cast<int>(rng.next_below(size_range));
        int n2 = opt.equal_within_pair_sizes
                     ? n1
                     : opt.min_cluster_size + static_cast<int>(rng.next_below(size_range));
        double pair_effect = uniform(-opt.outcome_scale, opt.outcome_scale);
        std::array<int, 2> sizes = {n1, n2};
        for (int slot = 0; slot < 2; ++slot) {
            PotentialCluster c;
            for (int i = 0; i < sizes[slot]; ++i) {
                PotentialUnit u;
                u.y0 = uniform(-opt.outcome_scale, opt.outcome_scale);
                u.y1 = opt.constant_pair_effects
                           ? u.y0 + pair_effect
                           : uniform(-opt.outcome_scale, opt.outcome_scale);
                if (opt.receipts) {
                    int r0 = rng.next_unit() < 0.25 ? 1 : 0;
                    int r1 = std::max(r0, rng.next_unit() < 0.6 ? 1 : 0);
                    u.r0 = r0;
                    u.r1 = r1;
                }
                c.units.push_back(u);
            }
            if (opt.populations)
                c.population_size = sizes[slot] + static_cast<long long>(rng.next_below(5));
            p.clusters[slot] = std::move(c);
        }
        pairs.push_back(std::move(p));
    }
    return PotentialDataset(std::move(pairs));
}

const char* to_string(VarianceMethod m) {
    return m == VarianceMethod::DesignBased ? "design_based" : "classical";
}

std::vector<PairTemplate> default_coverage_templates() {
    // Pair sizes spread widely (so the normalized weights genuinely
    // vary) under a null effect, with heterogeneous unit noise. Cluster
    // sizes are matched within pairs.
    std::vector<PairTemplate> t;
    for (int i = 0; i < 40; ++i) {
        PairTemplate pt;
        int size = 10 + 5 * i;
        pt.size1 = size;
        pt.size2 = size;
        pt.effect = 0.0;
        pt.control_mean = 20.0 + 1.0 * i;
        pt.sd1 = 3.0 + static_cast<double>((i * 7) % 5);
        pt.sd2 = 3.0 + static_cast<double>((i * 3) % 5);
        t.push_back(pt);
    }
    return t;
}

CoverageSummary coverage_simulation(const DgpConfig& cfg, VarianceMethod method) {
    if (cfg.templates.empty()) throw ValidationError("coverage simulation: no pair templates");
    if (cfg.m < 2) throw ValidationError("coverage simulation: m must be >= 2");
    if (cfg.replicates < 1) throw ValidationError("coverage simulation: replicates must be >= 1");
    if (!(cfg.level > 0.0 && cfg.level < 1.0))
        throw ValidationError("coverage simulation: level must lie in (0,1)");
    if (cfg.target != Estimand::Uate && cfg.target != Estimand::Sate)
        throw ValidationError("coverage simulation targets Uate or Sate");

    // Fixed truth for the cluster-population estimand.
    double truth_uate = 0.0, weight_total = 0.0;
    for (const auto& t : cfg.templates) {
        double w = static_cast<double>(t.size1 + t.size2);
        truth_uate += w * t.effect;
        weight_total += w;
    }
    truth_uate /= weight_total;

    WeightScheme scheme = method == VarianceMethod::DesignBased ? WeightScheme::arithmetic_sample()
                                                             : WeightScheme::harmonic_sample();

    long long covered = 0;
    std::vector<MatchedPair> pairs(cfg.m);
    for (int r = 0; r < cfg.replicates; ++r) {
        CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r) + 1);
        double effect_sum = 0.0;
        long long unit_count = 0;
        for (int k = 0; k < cfg.m; ++k) {
            const PairTemplate& t = cfg.templates[rng.next_below(cfg.templates.size())];
            int z = rng.next_bit();
            MatchedPair mp;
            mp.pair_id = std::to_string(k + 1);
            mp.assignment = z;
            std::array<int, 2> sizes = {t.size1, t.size2};
            std::array<double, 2> sds = {t.sd1, t.sd2};
            for (int slot = 0; slot < 2; ++slot) {
                bool treated = (slot == 0) == (z == 1);
                ClusterData c;
                c.pair_id = mp.pair_id;
                c.cluster_slot = slot + 1;
                c.units.reserve(sizes[slot]);
                for (int i = 0; i < sizes[slot]; ++i) {
                    double y0 = t.control_mean + sds[slot] * rng.next_normal();
                    double y1 = t.control_mean + t.effect + sds[slot] * rng.next_normal();
                    UnitRecord u;
                    u.pair_id = mp.pair_id;
                    u.cluster_slot = slot + 1;
                    u.outcome = treated ? y1 : y0;
                    c.units.push_back(std::move(u));
                    effect_sum += y1 - y0;
                    ++unit_count;
                }
                mp.clusters[slot] = std::move(c);
            }
            pairs[k] = std::move(mp);
        }
        MpcrDataset ds(pairs);
        double point = point_estimate(ds, Estimand::Sate, scheme);
        double variance = method == VarianceMethod::DesignBased
                              ? variance_estimate(ds, Estimand::Sate, scheme)
                              : harmonic_variance_estimate(ds, scheme);
        auto [lo, hi] = confidence_interval(point, variance, cfg.m, cfg.level,
                                            CiRegime::FewPairsManyUnits);
        double truth = cfg.target == Estimand::Uate
                           ? truth_uate
                           : effect_sum / static_cast<double>(unit_count);
        if (lo <= truth && truth <= hi) ++covered;
    }
    CoverageSummary summary;
    summary.replicates = cfg.replicates;
    summary.nominal = cfg.level;
    summary.coverage = static_cast<double>(covered) / static_cast<double>(cfg.replicates);
    summary.std_error =
        std::sqrt(summary.coverage * (1.0 - summary.coverage) / static_cast<double>(cfg.replicates));
    return summary;
}

std::vector<BiasVarianceRow> bias_variance_profile(const BiasVarianceConfig& cfg) {
    if (cfg.m < 2) throw ValidationError("bias-variance profile: m must be >= 2");
    if (cfg.base_size < 2) throw ValidationError("bias-variance profile: base size must be >= 2");

    std::vector<BiasVarianceRow> rows;
    for (double lambda : cfg.imbalances) {
        std::vector<PotentialPair> pairs;
        for (int k = 0; k < cfg.m; ++k) {
            double a = static_cast<double>(k + 1) / static_cast<double>(cfg.m);
            int n1 = std::max(1, static_cast<int>(std::lround(cfg.base_size * (1.0 + lambda * a))));
            int n2 = std::max(1, static_cast<int>(std::lround(cfg.base_size * (1.0 - lambda * a))));
            double effect = cfg.effect_base + cfg.effect_gradient * lambda * a;
            double mismatch = cfg.level_gradient * lambda * a;
            PotentialPair p;
            p.pair_id = std::to_string(k + 1);
            std::array<int, 2> sizes = {n1, n2};
            std::array<double, 2> levels = {cfg.level_base + 0.5 * mismatch,
                                            cfg.level_base - 0.5 * mismatch};
            for (int slot = 0; slot < 2; ++slot) {
                PotentialCluster c;
                for (int i = 0; i < sizes[slot]; ++i)
                    c.units.push_back({levels[slot], levels[slot] + effect, std::nullopt, std::nullopt});
                p.clusters[slot] = std::move(c);
            }
            pairs.push_back(std::move(p));
        }
        PotentialDataset pd(std::move(pairs));
        double sate = true_estimand(pd, Estimand::Sate);

        auto law_arith = exact_law(pd, [](const MpcrDataset& ds) {
            return point_estimate(ds, Estimand::Sate, WeightScheme::arithmetic_sample());
        });
        auto law_harm = exact_law(pd, [](const MpcrDataset& ds) {
            return point_estimate(ds, Estimand::Sate, WeightScheme::harmonic_sample());
        });

        BiasVarianceRow row;
        row.imbalance = lambda;
        double ba = law_arith.mean() - sate;
        double bh = law_harm.mean() - sate;
        row.bias2_arith = ba * ba;
        row.var_arith = law_arith.variance();
        row.mse_arith = row.bias2_arith + row.var_arith;
        row.bias2_harm = bh * bh;
        row.var_harm = law_harm.variance();
        row.mse_harm = row.bias2_harm + row.var_harm;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mpcr
