#pragma once

// Shared fixtures and test-side oracles. The canonical datasets here are
// small enough to verify every expected value by hand; the quadrature
// oracle provides an implementation-independent route to the noncentral
// t distribution function.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpcr/csv.hpp"
#include "mpcr/dataset.hpp"
#include "mpcr/estimators.hpp"
#include "mpcr/oracle.hpp"

namespace testsupport {

using mpcr::Estimand;
using mpcr::MpcrDataset;
using mpcr::UnitRecord;

inline std::vector<UnitRecord> units_of(const std::string& pair_id, int slot,
                                        std::vector<double> outcomes,
                                        std::vector<int> receipts = {}) {
    std::vector<UnitRecord> out;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        UnitRecord u;
        u.pair_id = pair_id;
        u.cluster_slot = slot;
        u.outcome = outcomes[i];
        if (!receipts.empty()) u.receipt = receipts[i];
        out.push_back(u);
    }
    return out;
}

inline void append(std::vector<UnitRecord>& to, std::vector<UnitRecord> from) {
    for (auto& u : from) to.push_back(std::move(u));
}

// Two pairs of two-unit clusters, all sizes 2, D = (1, 5).
inline MpcrDataset make_ds_a(bool with_populations = true) {
    std::vector<UnitRecord> units;
    append(units, units_of("1", 1, {2, 4}));
    append(units, units_of("1", 2, {1, 3}));
    append(units, units_of("2", 1, {0, 2}));
    append(units, units_of("2", 2, {5, 7}));
    std::map<std::pair<std::string, int>, long long> pops;
    if (with_populations)
        pops = {{{"1", 1}, 2}, {{"1", 2}, 2}, {{"2", 1}, 2}, {{"2", 2}, 2}};
    return mpcr::load_dataset(units, pops, {{"1", 1}, {"2", 0}});
}

// DS-A plus receipts: treated clusters {1,1} and {1,0}, controls all zero.
inline MpcrDataset make_ds_b() {
    std::vector<UnitRecord> units;
    append(units, units_of("1", 1, {2, 4}, {1, 1}));
    append(units, units_of("1", 2, {1, 3}, {0, 0}));
    append(units, units_of("2", 1, {0, 2}, {0, 0}));
    append(units, units_of("2", 2, {5, 7}, {1, 0}));
    return mpcr::load_dataset(units, {}, {{"1", 1}, {"2", 0}});
}

// Unequal within-pair sizes: D = (2, 5), n = 8.
inline MpcrDataset make_ds_c(bool with_populations = true) {
    std::vector<UnitRecord> units;
    append(units, units_of("1", 1, {4}));
    append(units, units_of("1", 2, {1, 1, 4}));
    append(units, units_of("2", 1, {0, 2}));
    append(units, units_of("2", 2, {5, 7}));
    std::map<std::pair<std::string, int>, long long> pops;
    if (with_populations)
        pops = {{{"1", 1}, 1}, {{"1", 2}, 3}, {{"2", 1}, 2}, {{"2", 2}, 2}};
    return mpcr::load_dataset(units, pops, {{"1", 1}, {"2", 0}});
}

// Potential-outcome fixture: identical clusters within each pair, so the
// point estimator is constant over assignments.
inline mpcr::PotentialDataset make_ds_p() {
    auto cluster = [](std::vector<double> y0, std::vector<double> y1) {
        mpcr::PotentialCluster c;
        for (std::size_t i = 0; i < y0.size(); ++i)
            c.units.push_back({y0[i], y1[i], std::nullopt, std::nullopt});
        return c;
    };
    mpcr::PotentialPair p1;
    p1.pair_id = "1";
    p1.clusters = {cluster({1, 3}, {2, 4}), cluster({1, 3}, {2, 4})};
    mpcr::PotentialPair p2;
    p2.pair_id = "2";
    p2.clusters = {cluster({0, 2}, {5, 7}), cluster({0, 2}, {5, 7})};
    return mpcr::PotentialDataset({p1, p2});
}

// Unmatched design: four clusters of two units, Z = (1,0,1,0).
inline mpcr::UmcrDataset make_ds_u() {
    auto cluster = [](const std::string& id, int z, std::vector<double> y) {
        mpcr::UmcrCluster c;
        c.cluster_id = id;
        c.assignment = z;
        c.outcomes = std::move(y);
        return c;
    };
    return mpcr::UmcrDataset({cluster("a", 1, {2, 4}), cluster("b", 0, {1, 3}),
                              cluster("c", 1, {5, 7}), cluster("d", 0, {0, 2})});
}

// --- Quadrature oracle for the noncentral t CDF -----------------------------
//
// P(T <= x) = E[Phi(x sqrt(V/dof) - lambda)] with V ~ chi^2_dof;
// substituting u = sqrt(V) gives a smooth chi-density integrand.

inline double chi_log_pdf(double u, double dof) {
    return (1.0 - 0.5 * dof) * std::log(2.0) + (dof - 1.0) * std::log(u) - 0.5 * u * u -
           std::lgamma(0.5 * dof);
}

inline double nct_integrand(double u, double x, double dof, double lambda) {
    if (u <= 0.0) return 0.0;
    double phi = 0.5 * std::erfc(-(x * u / std::sqrt(dof) - lambda) * 0.7071067811865475244);
    return phi * std::exp(chi_log_pdf(u, dof));
}

inline double adaptive_simpson(double (*f)(double, double, double, double), double a, double b,
                               double fa, double fm, double fb, double tol, int depth, double x,
                               double dof, double lambda) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm, x, dof, lambda), frm = f(rm, x, dof, lambda);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1, x, dof, lambda) +
           adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1, x, dof, lambda);
}

inline double nct_cdf_quadrature(double x, double dof, double lambda) {
    double root = std::sqrt(dof);
    double hi = root + 14.0 + 3.0 * std::sqrt(root);
    std::vector<double> knots = {0.0, 0.25 * root, 0.5 * root, 0.75 * root, root,
                                 std::min(1.5 * root, hi), hi};
    double total = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        double a = knots[i - 1], b = knots[i];
        if (!(b > a)) continue;
        double fa = nct_integrand(a, x, dof, lambda);
        double fb = nct_integrand(b, x, dof, lambda);
        double fm = nct_integrand(0.5 * (a + b), x, dof, lambda);
        total += adaptive_simpson(nct_integrand, a, b, fa, fm, fb, 1e-13, 48, x, dof, lambda);
    }
    if (total < 0.0) total = 0.0;
    if (total > 1.0) total = 1.0;
    return total;
}

// --- Minimal JSON Schema checker ----------------------------------------------
//
// Supports the subset used by schemas/report.schema.json: type (string or
// array), const, enum, required, properties, additionalProperties (bool or
// schema), items, anyOf, minimum, maximum.

using nlohmann::json;

inline bool schema_valid(const json& schema, const json& value);

inline bool type_matches(const std::string& type, const json& value) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    if (type == "number") return value.is_number();
    if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
    return false;
}

inline bool schema_valid(const json& schema, const json& value) {
    if (schema.is_boolean()) return schema.get<bool>();
    if (!schema.is_object()) return false;

    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(t.get<std::string>(), value);
        } else if (t.is_array()) {
            for (const auto& alt : t)
                if (type_matches(alt.get<std::string>(), value)) ok = true;
        }
        if (!ok) return false;
    }
    if (schema.contains("const") && schema["const"] != value) return false;
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& alt : schema["enum"])
            if (alt == value) ok = true;
        if (!ok) return false;
    }
    if (schema.contains("minimum") && value.is_number() &&
        value.get<double>() < schema["minimum"].get<double>())
        return false;
    if (schema.contains("maximum") && value.is_number() &&
        value.get<double>() > schema["maximum"].get<double>())
        return false;
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!value.contains(key.get<std::string>())) return false;
        const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
        for (const auto& [key, child] : value.items()) {
            if (props && props->contains(key)) {
                if (!schema_valid((*props)[key], child)) return false;
            } else if (schema.contains("additionalProperties")) {
                if (!schema_valid(schema["additionalProperties"], child)) return false;
            }
        }
    }
    if (value.is_array() && schema.contains("items")) {
        for (const auto& item : value)
            if (!schema_valid(schema["items"], item)) return false;
    }
    if (schema.contains("anyOf")) {
        bool ok = false;
        for (const auto& alt : schema["anyOf"])
            if (schema_valid(alt, value)) ok = true;
        if (!ok) return false;
    }
    return true;
}

// --- CLI process helpers -------------------------------------------------------

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("mpcr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline CliResult run_cli(const std::string& args, const std::filesystem::path& workdir) {
    auto out_path = workdir / "stdout.txt";
    auto err_path = workdir / "stderr.txt";
    std::string cmd = std::string("\"") + MPCR_CLI_PATH + "\" " + args + " > \"" +
                      out_path.string() + "\" 2> \"" + err_path.string() + "\"";
    int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

inline json report_schema() {
    static json schema = json::parse(slurp(std::string(MPCR_SOURCE_DIR) + "/schemas/report.schema.json"));
    return schema;
}

// DS-A as CSV text, for CLI round trips.
inline std::string ds_a_units_csv() {
    return "pair_id,cluster_slot,outcome\n"
           "1,1,2\n1,1,4\n1,2,1\n1,2,3\n"
           "2,1,0\n2,1,2\n2,2,5\n2,2,7\n";
}

inline std::string ds_a_assign_csv() { return "pair_id,z\n1,1\n2,0\n"; }

inline std::string ds_b_units_csv() {
    return "pair_id,cluster_slot,outcome,receipt\n"
           "1,1,2,1\n1,1,4,1\n1,2,1,0\n1,2,3,0\n"
           "2,1,0,0\n2,1,2,0\n2,2,5,1\n2,2,7,0\n";
}

}  // namespace testsupport
