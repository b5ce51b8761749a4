#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mpcr/csv.hpp"
#include "mpcr/dataset.hpp"
#include "mpcr/estimators.hpp"
#include "mpcr/inference.hpp"
#include "mpcr/noncompliance.hpp"
#include "mpcr/oracle.hpp"
#include "mpcr/pairing.hpp"
#include "mpcr/power.hpp"
#include "mpcr/report.hpp"

namespace {

using mpcr::Json;

struct CommonIo {
    std::string out_path;
    std::string format = "json";
};

void add_io_flags(CLI::App* cmd, CommonIo& io) {
    cmd->add_option("--out", io.out_path, "Write the report to this path (default: stdout)");
    cmd->add_option("--format", io.format, "Report format: json or tsv")
        ->check(CLI::IsMember({"json", "tsv"}));
}

struct DataFlags {
    std::string units_path;
    std::string assign_path;
    std::string clusters_path;
};

void add_data_flags(CLI::App* cmd, DataFlags& d) {
    cmd->add_option("--units", d.units_path, "units.csv: pair_id,cluster_slot,outcome[,receipt]")
        ->required();
    cmd->add_option("--assign", d.assign_path, "assignments.csv: pair_id,z")->required();
    cmd->add_option("--clusters", d.clusters_path,
                    "clusters.csv: pair_id,cluster_slot,population_size");
}

mpcr::MpcrDataset load_from_flags(const DataFlags& d) {
    std::optional<std::string> clusters;
    if (!d.clusters_path.empty()) clusters = d.clusters_path;
    return mpcr::load_dataset_from_files(d.units_path, d.assign_path, clusters);
}

std::map<std::string, std::string> input_map(const DataFlags& d) {
    std::map<std::string, std::string> m{{"units", d.units_path}, {"assign", d.assign_path}};
    if (!d.clusters_path.empty()) m["clusters"] = d.clusters_path;
    return m;
}

mpcr::WeightScheme parse_weights(const std::string& s) {
    if (s == "arith") return mpcr::WeightScheme::arithmetic_sample();
    if (s == "pop") return mpcr::WeightScheme::arithmetic_population();
    if (s == "harmonic") return mpcr::WeightScheme::harmonic_sample();
    if (s == "const") return mpcr::WeightScheme::constant();
    throw mpcr::ValidationError("unknown weights '" + s + "' (expected arith|pop|harmonic|const)");
}

mpcr::CiRegime parse_regime(const std::string& s) {
    if (s == "normal") return mpcr::CiRegime::ManyPairs;
    if (s == "t") return mpcr::CiRegime::FewPairsManyUnits;
    throw mpcr::ValidationError("unknown regime '" + s + "' (expected normal|t)");
}

mpcr::PowerMode parse_mode(const std::string& s) {
    if (s == "uate") return mpcr::PowerMode::Uate;
    if (s == "pate") return mpcr::PowerMode::Pate;
    throw mpcr::ValidationError("unknown mode '" + s + "' (expected uate|pate)");
}

Json dgp_config_json(const mpcr::DgpConfig& cfg) {
    Json j;
    j["pairs"] = cfg.m;
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["level"] = cfg.level;
    j["target"] = mpcr::to_string(cfg.target);
    Json templates = Json::array();
    for (const auto& t : cfg.templates) {
        Json e;
        e["control_mean"] = t.control_mean;
        e["effect"] = t.effect;
        e["sd1"] = t.sd1;
        e["sd2"] = t.sd2;
        e["size1"] = t.size1;
        e["size2"] = t.size2;
        templates.push_back(e);
    }
    j["templates"] = templates;
    return j;
}

mpcr::DgpConfig dgp_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mpcr::ValidationError("cannot open " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const std::exception& e) {
        throw mpcr::ValidationError(path + ": invalid JSON: " + e.what());
    }
    mpcr::DgpConfig cfg;
    cfg.m = j.value("pairs", cfg.m);
    cfg.replicates = j.value("replicates", cfg.replicates);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.level = j.value("level", cfg.level);
    if (j.contains("target")) cfg.target = mpcr::parse_estimand(j["target"].get<std::string>());
    if (j.contains("templates")) {
        for (const auto& e : j["templates"]) {
            mpcr::PairTemplate t;
            t.control_mean = e.value("control_mean", 0.0);
            t.effect = e.value("effect", 0.0);
            t.sd1 = e.value("sd1", 1.0);
            t.sd2 = e.value("sd2", 1.0);
            t.size1 = e.value("size1", 2);
            t.size2 = e.value("size2", 2);
            cfg.templates.push_back(t);
        }
    } else {
        cfg.templates = mpcr::default_coverage_templates();
    }
    return cfg;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Analysis and design toolkit for matched-pair cluster-randomized experiments"};
    app.require_subcommand(1);

    // --- estimate ---
    auto* estimate = app.add_subcommand("estimate", "Point estimate, variance and interval");
    DataFlags est_data;
    add_data_flags(estimate, est_data);
    std::string est_estimand = "sate", est_weights, est_regime = "t";
    double est_level = 0.95;
    CommonIo est_io;
    estimate->add_option("--estimand", est_estimand, "sate|cate|uate|pate");
    estimate->add_option("--weights", est_weights, "arith|pop|harmonic|const");
    estimate->add_option("--level", est_level, "Confidence level in (0,1)");
    estimate->add_option("--regime", est_regime, "Interval regime: normal|t");
    add_io_flags(estimate, est_io);

    // --- cace ---
    auto* cace = app.add_subcommand("cace", "Noncompliance analysis (ITT, CACE, shares)");
    DataFlags cace_data;
    add_data_flags(cace, cace_data);
    std::string cace_weights = "arith";
    CommonIo cace_io;
    cace->add_option("--weights", cace_weights, "arith|pop|harmonic|const");
    add_io_flags(cace, cace_io);

    // --- power ---
    auto* power = app.add_subcommand("power", "Power of the two-sided t test");
    std::string power_mode = "uate";
    double power_alpha = 0.05, power_effect = 0.0;
    int power_pairs = 2;
    double power_pi = -1.0, power_nbar = -1.0;
    CommonIo power_io;
    power->add_option("--mode", power_mode, "uate|pate");
    power->add_option("--alpha", power_alpha, "Two-sided test size")->required();
    power->add_option("--effect", power_effect, "Standardized effect size")->required();
    power->add_option("--pairs", power_pairs, "Number of pairs m")->required();
    power->add_option("--pi", power_pi, "Cluster-noise ratio (pate mode)");
    power->add_option("--nbar", power_nbar, "Units per cluster (pate mode)");
    add_io_flags(power, power_io);

    // --- samplesize ---
    auto* samplesize = app.add_subcommand("samplesize", "Smallest m reaching a target power");
    std::string ss_mode = "uate";
    double ss_alpha = 0.05, ss_power = 0.8, ss_effect = 0.0;
    double ss_pi = -1.0, ss_nbar = -1.0;
    CommonIo ss_io;
    samplesize->add_option("--mode", ss_mode, "uate|pate");
    samplesize->add_option("--alpha", ss_alpha, "Two-sided test size")->required();
    samplesize->add_option("--power", ss_power, "Target power")->required();
    samplesize->add_option("--effect", ss_effect, "Standardized effect size")->required();
    samplesize->add_option("--pi", ss_pi, "Cluster-noise ratio (pate mode)");
    samplesize->add_option("--nbar", ss_nbar, "Units per cluster (pate mode)");
    add_io_flags(samplesize, ss_io);

    // --- mde ---
    auto* mde = app.add_subcommand("mde", "Minimum detectable standardized effect");
    std::string mde_mode = "uate";
    double mde_alpha = 0.05, mde_power = 0.8;
    int mde_pairs = 2;
    double mde_pi = -1.0, mde_nbar = -1.0;
    CommonIo mde_io;
    mde->add_option("--mode", mde_mode, "uate|pate");
    mde->add_option("--alpha", mde_alpha, "Two-sided test size")->required();
    mde->add_option("--power", mde_power, "Target power")->required();
    mde->add_option("--pairs", mde_pairs, "Number of pairs m")->required();
    mde->add_option("--pi", mde_pi, "Cluster-noise ratio (pate mode)");
    mde->add_option("--nbar", mde_nbar, "Units per cluster (pate mode)");
    add_io_flags(mde, mde_io);

    // --- efficiency ---
    auto* efficiency = app.add_subcommand("efficiency", "Paired vs unmatched design efficiency");
    DataFlags eff_data;
    add_data_flags(efficiency, eff_data);
    std::string eff_estimand = "uate";
    CommonIo eff_io;
    efficiency->add_option("--estimand", eff_estimand, "sate|cate|uate|pate");
    add_io_flags(efficiency, eff_io);

    // --- correlation ---
    auto* correlation = app.add_subcommand("correlation", "Across-pair correlation of cluster means");
    DataFlags corr_data;
    add_data_flags(correlation, corr_data);
    bool corr_weighted = false;
    CommonIo corr_io;
    correlation->add_flag("--weighted", corr_weighted, "Weight means by pair size");
    add_io_flags(correlation, corr_io);

    // --- breakeven ---
    auto* breakeven = app.add_subcommand("breakeven", "Break-even matching correlation");
    int be_pairs = 3;
    double be_alpha = 0.05, be_power = 0.8;
    CommonIo be_io;
    breakeven->add_option("--pairs", be_pairs, "Number of pairs m")->required();
    breakeven->add_option("--alpha", be_alpha, "Two-sided test size")->required();
    breakeven->add_option("--power", be_power, "Target power")->required();
    add_io_flags(breakeven, be_io);

    // --- pair ---
    auto* pair_cmd = app.add_subcommand("pair", "Pair clusters and randomize within pairs");
    std::string pair_profiles, pair_method = "greedy";
    bool pair_include_size = false;
    std::uint64_t pair_seed = 0;
    CommonIo pair_io;
    pair_cmd->add_option("--profiles", pair_profiles, "profiles.csv: cluster_id,size[,cov_...]")
        ->required();
    pair_cmd->add_option("--method", pair_method, "greedy|optimal");
    pair_cmd->add_flag("--include-size", pair_include_size, "Append size as a matching dimension");
    pair_cmd->add_option("--seed", pair_seed, "Seed for the within-pair coin flips");
    add_io_flags(pair_cmd, pair_io);

    // --- simulate ---
    auto* simulate = app.add_subcommand("simulate", "Coverage simulation on a synthetic population");
    std::string sim_config, sim_method = "design";
    CommonIo sim_io;
    simulate->add_option("--config", sim_config, "DGP config JSON (omit for the bundled fixture)");
    simulate->add_option("--method", sim_method, "Variance method: design|classical");
    add_io_flags(simulate, sim_io);
    int sim_m = 0, sim_replicates = 0;
    std::uint64_t sim_seed = 0;
    double sim_level = 0.0;
    simulate->add_option("--pairs", sim_m, "Override pairs per replicate");
    simulate->add_option("--replicates", sim_replicates, "Override replicate count");
    simulate->add_option("--seed", sim_seed, "Override master seed");
    simulate->add_option("--level", sim_level, "Override nominal level");

    // --- check-identities ---
    auto* check = app.add_subcommand("check-identities",
                                     "Exact enumeration checks of the design-based identities");
    int chk_count = 100;
    std::uint64_t chk_seed = 1;
    CommonIo chk_io;
    check->add_option("--count", chk_count, "Number of fuzzed datasets");
    check->add_option("--seed", chk_seed, "Fuzz seed");
    add_io_flags(check, chk_io);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }

    if (*estimate) {
        auto ds = load_from_flags(est_data);
        mpcr::Estimand estimand = mpcr::parse_estimand(est_estimand);
        std::optional<mpcr::WeightScheme> scheme;
        if (!est_weights.empty()) scheme = parse_weights(est_weights);
        auto report = mpcr::analyze(ds, estimand, scheme, est_level, parse_regime(est_regime));
        Json config;
        config["estimand"] = mpcr::to_string(report.estimand);
        config["weights"] = mpcr::to_string(report.scheme.kind);
        config["level"] = est_level;
        config["regime"] = mpcr::to_string(report.regime);
        Json result;
        result["estimand"] = mpcr::to_string(report.estimand);
        result["weight_scheme"] = mpcr::to_string(report.scheme.kind);
        result["point"] = report.point;
        result["variance"] = report.variance;
        result["std_error"] = report.std_error;
        result["ci_lower"] = report.ci_lower;
        result["ci_upper"] = report.ci_upper;
        result["confidence_level"] = report.confidence_level;
        if (report.dof)
            result["dof"] = *report.dof;
        else
            result["dof"] = "normal";
        result["regime"] = mpcr::to_string(report.regime);
        result["conservative"] = report.conservative;
        result["num_pairs"] = report.num_pairs;
        result["num_units"] = report.num_units;
        mpcr::emit_report(mpcr::make_envelope("estimate", input_map(est_data), config, result),
                          est_io.out_path, est_io.format);
        return 0;
    }

    if (*cace) {
        auto ds = load_from_flags(cace_data);
        auto scheme = parse_weights(cace_weights);
        auto report = mpcr::compliance_analysis(ds, scheme);
        Json config;
        config["weights"] = mpcr::to_string(scheme.kind);
        Json result;
        result["p_always"] = report.p_always;
        result["p_never"] = report.p_never;
        result["p_complier"] = report.p_complier;
        result["itt_outcome"] = report.itt_outcome;
        result["itt_receipt"] = report.itt_receipt;
        result["cace"] = report.cace;
        result["cace_variance"] = report.cace_variance;
        result["cace_std_error"] = std::sqrt(report.cace_variance);
        result["truncated"] = report.truncated;
        result["assumptions"] = Json::array({"no interference between units",
                                             "exclusion restriction", "monotonicity (no defiers)"});
        mpcr::emit_report(mpcr::make_envelope("cace", input_map(cace_data), config, result),
                          cace_io.out_path, cace_io.format);
        return 0;
    }

    if (*power) {
        mpcr::PowerSpec spec;
        spec.alpha = power_alpha;
        spec.m = power_pairs;
        spec.effect = power_effect;
        if (power_pi >= 0.0) spec.pi = power_pi;
        if (power_nbar > 0.0) spec.nbar = power_nbar;
        auto mode = parse_mode(power_mode);
        double value = mode == mpcr::PowerMode::Uate ? mpcr::power_uate(spec)
                                                     : mpcr::power_pate(spec);
        Json config;
        config["mode"] = power_mode;
        config["alpha"] = power_alpha;
        config["effect"] = power_effect;
        config["pairs"] = power_pairs;
        if (spec.pi) config["pi"] = *spec.pi;
        if (spec.nbar) config["nbar"] = *spec.nbar;
        Json result;
        result["power"] = value;
        mpcr::emit_report(mpcr::make_envelope("power", {}, config, result), power_io.out_path,
                          power_io.format);
        return 0;
    }

    if (*samplesize) {
        auto mode = parse_mode(ss_mode);
        std::optional<double> pi, nbar;
        if (ss_pi >= 0.0) pi = ss_pi;
        if (ss_nbar > 0.0) nbar = ss_nbar;
        int m = mpcr::sample_size(ss_alpha, ss_power, ss_effect, mode, pi, nbar);
        Json config;
        config["mode"] = ss_mode;
        config["alpha"] = ss_alpha;
        config["target_power"] = ss_power;
        config["effect"] = ss_effect;
        if (pi) config["pi"] = *pi;
        if (nbar) config["nbar"] = *nbar;
        Json result;
        result["pairs"] = m;
        mpcr::emit_report(mpcr::make_envelope("samplesize", {}, config, result), ss_io.out_path,
                          ss_io.format);
        return 0;
    }

    if (*mde) {
        auto mode = parse_mode(mde_mode);
        std::optional<double> pi, nbar;
        if (mde_pi >= 0.0) pi = mde_pi;
        if (mde_nbar > 0.0) nbar = mde_nbar;
        double effect = mpcr::minimum_detectable_effect(mde_alpha, mde_power, mde_pairs, mode, pi, nbar);
        Json config;
        config["mode"] = mde_mode;
        config["alpha"] = mde_alpha;
        config["target_power"] = mde_power;
        config["pairs"] = mde_pairs;
        if (pi) config["pi"] = *pi;
        if (nbar) config["nbar"] = *nbar;
        Json result;
        result["effect"] = effect;
        mpcr::emit_report(mpcr::make_envelope("mde", {}, config, result), mde_io.out_path,
                          mde_io.format);
        return 0;
    }

    if (*efficiency) {
        auto ds = load_from_flags(eff_data);
        auto estimand = mpcr::parse_estimand(eff_estimand);
        auto report = mpcr::relative_efficiency_estimate(ds, estimand);
        Json config;
        config["estimand"] = eff_estimand;
        Json result;
        if (report.unbounded)
            result["ratio_unbounded"] = true;
        else
            result["ratio"] = report.ratio;
        result["covariance_term"] = report.covariance_term;
        result["variance_treated"] = report.variance_terms[0];
        result["variance_control"] = report.variance_terms[1];
        result["equal_within_pair_sizes"] = report.equal_within_pair_sizes;
        mpcr::emit_report(mpcr::make_envelope("efficiency", input_map(eff_data), config, result),
                          eff_io.out_path, eff_io.format);
        return 0;
    }

    if (*correlation) {
        auto ds = load_from_flags(corr_data);
        double rho = mpcr::pair_correlation(ds, corr_weighted);
        Json config;
        config["weighted"] = corr_weighted;
        Json result;
        result["correlation"] = rho;
        result["pairs"] = ds.num_pairs();
        mpcr::emit_report(mpcr::make_envelope("correlation", input_map(corr_data), config, result),
                          corr_io.out_path, corr_io.format);
        return 0;
    }

    if (*breakeven) {
        double rho = mpcr::break_even_correlation(be_pairs, be_alpha, be_power);
        Json config;
        config["pairs"] = be_pairs;
        config["alpha"] = be_alpha;
        config["target_power"] = be_power;
        Json result;
        result["correlation"] = rho;
        mpcr::emit_report(mpcr::make_envelope("breakeven", {}, config, result), be_io.out_path,
                          be_io.format);
        return 0;
    }

    if (*pair_cmd) {
        auto profiles = mpcr::read_profiles_csv(pair_profiles);
        mpcr::Pairing pairing;
        if (pair_method == "greedy")
            pairing = mpcr::pair_clusters_greedy(profiles, pair_include_size);
        else if (pair_method == "optimal")
            pairing = mpcr::pair_clusters_optimal(profiles, pair_include_size);
        else
            throw mpcr::ValidationError("unknown method '" + pair_method +
                                        "' (expected greedy|optimal)");
        auto z = mpcr::assign_within_pairs(pairing, pair_seed);
        Json config;
        config["method"] = pair_method;
        config["include_size"] = pair_include_size;
        config["seed"] = pair_seed;
        Json result;
        result["total_distance"] = pairing.total_distance;
        Json pairs = Json::array();
        for (std::size_t k = 0; k < pairing.pairs.size(); ++k) {
            Json e;
            e["pair_id"] = std::to_string(k + 1);
            e["cluster_1"] = pairing.pairs[k].first;
            e["cluster_2"] = pairing.pairs[k].second;
            e["z"] = z[k];
            pairs.push_back(e);
        }
        result["pairs"] = pairs;
        result["warnings"] = pairing.warnings;
        mpcr::emit_report(
            mpcr::make_envelope("pair", {{"profiles", pair_profiles}}, config, result),
            pair_io.out_path, pair_io.format);
        return 0;
    }

    if (*simulate) {
        mpcr::DgpConfig cfg;
        std::map<std::string, std::string> inputs;
        if (!sim_config.empty()) {
            cfg = dgp_config_from_file(sim_config);
            inputs["config"] = sim_config;
        } else {
            cfg.templates = mpcr::default_coverage_templates();
            cfg.m = 25;
            cfg.replicates = 1000;
        }
        if (sim_m > 0) cfg.m = sim_m;
        if (sim_replicates > 0) cfg.replicates = sim_replicates;
        if (simulate->count("--seed") > 0) cfg.seed = sim_seed;
        if (sim_level > 0.0) cfg.level = sim_level;
        mpcr::VarianceMethod method;
        if (sim_method == "design")
            method = mpcr::VarianceMethod::DesignBased;
        else if (sim_method == "classical")
            method = mpcr::VarianceMethod::Classical;
        else
            throw mpcr::ValidationError("unknown method '" + sim_method + "' (expected design|classical)");
        auto summary = mpcr::coverage_simulation(cfg, method);
        Json config = dgp_config_json(cfg);
        config["method"] = mpcr::to_string(method);
        Json result;
        result["coverage"] = summary.coverage;
        result["std_error"] = summary.std_error;
        result["nominal"] = summary.nominal;
        result["replicates"] = summary.replicates;
        mpcr::emit_report(mpcr::make_envelope("simulate", inputs, config, result), sim_io.out_path,
                          sim_io.format);
        return 0;
    }

    if (*check) {
        if (chk_count < 1) throw mpcr::ValidationError("--count must be positive");
        const mpcr::Identity identities[] = {
            mpcr::Identity::SampleWeightBias,
            mpcr::Identity::PopulationWeightBias,
            mpcr::Identity::VarianceBiasSampleWeights,
            mpcr::Identity::VarianceBiasPopulationWeights,
            mpcr::Identity::ClassicalVarianceExpectation,
            mpcr::Identity::CovarianceExpectation,
        };
        std::map<std::string, double> worst;
        for (int i = 0; i < chk_count; ++i) {
            mpcr::CounterRng rng(chk_seed, static_cast<std::uint64_t>(i));
            auto pd = mpcr::random_potential_dataset(rng);
            for (auto id : identities) {
                double r = mpcr::check_identity(pd, id);
                auto& slot = worst[mpcr::to_string(id)];
                if (r > slot) slot = r;
            }
        }
        double max_residual = 0.0;
        Json residuals;
        for (const auto& [name, r] : worst) {
            residuals[name] = r;
            if (r > max_residual) max_residual = r;
        }
        const double tolerance = 1e-10;
        Json config;
        config["count"] = chk_count;
        config["seed"] = chk_seed;
        config["tolerance"] = tolerance;
        Json result;
        result["max_residual"] = max_residual;
        result["residuals"] = residuals;
        result["pass"] = max_residual < tolerance;
        mpcr::emit_report(mpcr::make_envelope("check-identities", {}, config, result),
                          chk_io.out_path, chk_io.format);
        return max_residual < tolerance ? 0 : 2;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const mpcr::ValidationError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const mpcr::ComputationError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
}
