#include "mpcr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mpcr {

double ClusterData::outcome_mean() const {
    if (units.empty()) throw ComputationError("cluster " + pair_id + ":" + std::to_string(cluster_slot) + " is empty");
    double s = 0.0;
    for (const auto& u : units) s += u.outcome;
    return s / static_cast<double>(units.size());
}

double ClusterData::receipt_mean() const {
    if (units.empty()) throw ComputationError("cluster " + pair_id + ":" + std::to_string(cluster_slot) + " is empty");
    double s = 0.0;
    for (const auto& u : units) {
        if (!u.receipt) throw ValidationError("missing receipts in pair " + pair_id);
        s += static_cast<double>(*u.receipt);
    }
    return s / static_cast<double>(units.size());
}

double ClusterData::outcome_variance() const {
    if (units.size() < 2)
        throw ComputationError("within-cluster variance needs >= 2 units (pair " + pair_id +
                               ", slot " + std::to_string(cluster_slot) + ")");
    double m = outcome_mean();
    double ss = 0.0;
    for (const auto& u : units) ss += (u.outcome - m) * (u.outcome - m);
    return ss / static_cast<double>(units.size() - 1);
}

const char* to_string(Estimand e) {
    switch (e) {
        case Estimand::Sate: return "sate";
        case Estimand::Cate: return "cate";
        case Estimand::Uate: return "uate";
        case Estimand::Pate: return "pate";
    }
    return "?";
}

Estimand parse_estimand(const std::string& s) {
    if (s == "sate") return Estimand::Sate;
    if (s == "cate") return Estimand::Cate;
    if (s == "uate") return Estimand::Uate;
    if (s == "pate") return Estimand::Pate;
    throw ValidationError("unknown estimand '" + s + "' (expected sate|cate|uate|pate)");
}

const char* to_string(WeightScheme::Kind k) {
    switch (k) {
        case WeightScheme::Kind::ArithmeticSample: return "arithmetic_sample";
        case WeightScheme::Kind::ArithmeticPopulation: return "arithmetic_population";
        case WeightScheme::Kind::HarmonicSample: return "harmonic_sample";
        case WeightScheme::Kind::Constant: return "constant";
        case WeightScheme::Kind::Custom: return "custom";
    }
    return "?";
}

WeightScheme default_scheme_for(Estimand e) {
    switch (e) {
        case Estimand::Sate:
        case Estimand::Uate: return WeightScheme::arithmetic_sample();
        case Estimand::Cate:
        case Estimand::Pate: return WeightScheme::arithmetic_population();
    }
    return WeightScheme::arithmetic_sample();
}

MpcrDataset::MpcrDataset(std::vector<MatchedPair> pairs) : pairs_(std::move(pairs)) {}

long long MpcrDataset::total_sample_size() const {
    long long n = 0;
    for (const auto& p : pairs_) n += p.sample_size();
    return n;
}

bool MpcrDataset::has_populations() const {
    if (pairs_.empty()) return false;
    for (const auto& p : pairs_)
        for (const auto& c : p.clusters)
            if (!c.population_size) return false;
    return true;
}

std::optional<long long> MpcrDataset::total_population_size() const {
    if (!has_populations()) return std::nullopt;
    long long total = 0;
    for (const auto& p : pairs_)
        for (const auto& c : p.clusters) total += *c.population_size;
    return total;
}

bool MpcrDataset::has_receipts() const {
    if (pairs_.empty()) return false;
    for (const auto& p : pairs_)
        for (const auto& c : p.clusters)
            for (const auto& u : c.units)
                if (!u.receipt) return false;
    return true;
}

MpcrDataset load_dataset(const std::vector<UnitRecord>& units,
                         const std::map<std::pair<std::string, int>, long long>& populations,
                         const std::map<std::string, int>& assignments) {
    if (units.empty()) throw ValidationError("empty design: no units");

    // Group units by pair, preserving first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::array<std::vector<UnitRecord>, 2>> grouped;
    for (const auto& u : units) {
        if (u.cluster_slot != 1 && u.cluster_slot != 2)
            throw ValidationError("malformed pair " + u.pair_id + ": cluster_slot must be 1 or 2");
        auto it = grouped.find(u.pair_id);
        if (it == grouped.end()) {
            order.push_back(u.pair_id);
            it = grouped.emplace(u.pair_id, std::array<std::vector<UnitRecord>, 2>{}).first;
        }
        it->second[u.cluster_slot - 1].push_back(u);
    }

    std::vector<MatchedPair> pairs;
    pairs.reserve(order.size());
    for (const auto& pid : order) {
        const auto& slots = grouped.at(pid);
        if (slots[0].empty() || slots[1].empty())
            throw ValidationError("malformed pair " + pid + ": expected nonempty clusters in slots 1 and 2");
        auto za = assignments.find(pid);
        if (za == assignments.end())
            throw ValidationError("missing assignment for pair " + pid);
        if (za->second != 0 && za->second != 1)
            throw ValidationError("pair " + pid + ": assignment z must be 0 or 1");

        MatchedPair mp;
        mp.pair_id = pid;
        mp.assignment = za->second;
        for (int slot = 1; slot <= 2; ++slot) {
            ClusterData c;
            c.pair_id = pid;
            c.cluster_slot = slot;
            c.units = slots[slot - 1];
            auto pit = populations.find({pid, slot});
            if (pit != populations.end()) c.population_size = pit->second;
            mp.clusters[slot - 1] = std::move(c);
        }
        pairs.push_back(std::move(mp));
    }

    MpcrDataset ds(std::move(pairs));
    DesignReport report = validate_design(ds);
    if (!report.ok()) throw ValidationError(report.violations.front());
    return ds;
}

DesignReport validate_design(const MpcrDataset& ds) {
    DesignReport report;
    auto violation = [&](const std::string& msg) { report.violations.push_back(msg); };

    if (ds.num_pairs() == 0) {
        violation("empty design: no pairs");
        return report;
    }

    std::set<std::string> seen;
    int with_receipt = 0, without_receipt = 0;
    int with_population = 0, without_population = 0;
    for (const auto& p : ds.pairs()) {
        if (!seen.insert(p.pair_id).second)
            violation("duplicate pair id " + p.pair_id);
        if (p.assignment != 0 && p.assignment != 1)
            violation("pair " + p.pair_id +
                      ": assignment must mark exactly one treated cluster (z in {0,1})");
        for (int slot = 1; slot <= 2; ++slot) {
            const ClusterData& c = p.clusters[slot - 1];
            if (c.cluster_slot != slot)
                violation("pair " + p.pair_id + ": cluster stored in the wrong slot");
            if (c.units.empty())
                violation("malformed pair " + p.pair_id + ": empty cluster in slot " + std::to_string(slot));
            if (c.population_size) {
                ++with_population;
                if (*c.population_size < c.sample_size())
                    violation("pair " + p.pair_id + " slot " + std::to_string(slot) +
                              ": population size smaller than sample size");
            } else {
                ++without_population;
            }
            for (const auto& u : c.units) {
                if (u.receipt) {
                    ++with_receipt;
                    if (*u.receipt != 0 && *u.receipt != 1)
                        violation("pair " + p.pair_id + ": receipt must be 0 or 1");
                } else {
                    ++without_receipt;
                }
            }
        }
    }
    if (with_population > 0 && without_population > 0)
        violation("partial populations: population sizes must be given for all clusters or none");
    if (with_receipt > 0 && without_receipt > 0)
        violation("partial receipts: receipts must be given for all units or none");
    if (ds.num_pairs() == 1)
        report.warnings.push_back("single pair: variance unavailable (m >= 2 required)");
    return report;
}

DropResult drop_incomplete_pairs(const MpcrDataset& ds,
                                 const std::vector<std::pair<std::string, int>>& lost_clusters) {
    std::set<std::pair<std::string, int>> lost(lost_clusters.begin(), lost_clusters.end());
    for (const auto& [pid, slot] : lost) {
        bool found = false;
        for (const auto& p : ds.pairs())
            if (p.pair_id == pid && (slot == 1 || slot == 2)) found = true;
        if (!found)
            throw ValidationError("lost cluster (" + pid + ", " + std::to_string(slot) +
                                  ") not present in the dataset");
    }

    DropResult result;
    std::vector<MatchedPair> kept;
    for (const auto& p : ds.pairs()) {
        if (lost.count({p.pair_id, 1}) || lost.count({p.pair_id, 2}))
            result.dropped_pairs.push_back(p.pair_id);
        else
            kept.push_back(p);
    }
    if (kept.empty()) throw ValidationError("empty design: all pairs dropped");
    result.dataset = MpcrDataset(std::move(kept));
    if (!result.dropped_pairs.empty()) {
        std::ostringstream os;
        os << "dropped " << result.dropped_pairs.size() << " pair(s) with lost clusters;"
           << " estimands now refer to the remaining pairs";
        result.warnings.push_back(os.str());
    }
    auto design = validate_design(result.dataset);
    for (const auto& w : design.warnings) result.warnings.push_back(w);
    return result;
}

namespace {

std::vector<double> raw_weights(const MpcrDataset& ds, const WeightScheme& scheme) {
    std::vector<double> w;
    w.reserve(ds.pairs().size());
    for (const auto& p : ds.pairs()) {
        double n1 = static_cast<double>(p.clusters[0].sample_size());
        double n2 = static_cast<double>(p.clusters[1].sample_size());
        switch (scheme.kind) {
            case WeightScheme::Kind::ArithmeticSample:
                w.push_back(n1 + n2);
                break;
            case WeightScheme::Kind::ArithmeticPopulation: {
                if (!p.clusters[0].population_size || !p.clusters[1].population_size)
                    throw ValidationError("population weights requested but population sizes are absent");
                w.push_back(static_cast<double>(*p.clusters[0].population_size +
                                                *p.clusters[1].population_size));
                break;
            }
            case WeightScheme::Kind::HarmonicSample:
                w.push_back(n1 * n2 / (n1 + n2));
                break;
            case WeightScheme::Kind::Constant:
                w.push_back(1.0);
                break;
            case WeightScheme::Kind::Custom: {
                auto it = scheme.custom_weights.find(p.pair_id);
                if (it == scheme.custom_weights.end())
                    throw ValidationError("custom weight missing for pair " + p.pair_id);
                if (!(it->second > 0.0))
                    throw ValidationError("custom weight for pair " + p.pair_id +
                                          " must be strictly positive");
                w.push_back(it->second);
                break;
            }
        }
    }
    return w;
}

std::vector<PairDifference> differences_impl(const MpcrDataset& ds, const WeightScheme& scheme,
                                             bool use_receipts) {
    if (ds.num_pairs() == 0) throw ValidationError("empty design: no pairs");
    std::vector<double> w = raw_weights(ds, scheme);
    double wsum = 0.0;
    for (double v : w) wsum += v;
    double n = static_cast<double>(ds.total_sample_size());

    std::vector<PairDifference> out;
    out.reserve(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        const MatchedPair& p = ds.pairs()[k];
        double treated = use_receipts ? p.treated().receipt_mean() : p.treated().outcome_mean();
        double control = use_receipts ? p.control().receipt_mean() : p.control().outcome_mean();
        PairDifference d;
        d.pair_id = p.pair_id;
        d.raw_weight = w[k];
        d.normalized_weight = n * w[k] / wsum;
        d.observed_difference = treated - control;
        out.push_back(d);
    }
    return out;
}

}  // namespace

std::vector<PairDifference> pair_differences(const MpcrDataset& ds, const WeightScheme& scheme) {
    return differences_impl(ds, scheme, false);
}

std::vector<PairDifference> receipt_differences(const MpcrDataset& ds, const WeightScheme& scheme) {
    if (!ds.has_receipts()) throw ValidationError("missing receipts: dataset has no receipt column");
    return differences_impl(ds, scheme, true);
}

}  // namespace mpcr
