#include "mpcr/csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mpcr {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // data rows, 1-based reporting offset +2
    std::string path;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
    int require_column(const std::string& name) const {
        int c = column(name);
        if (c < 0)
            throw ValidationError(path + ": missing column '" + name + "'");
        return c;
    }
};

CsvTable read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    CsvTable table;
    table.path = path;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
            line = line.substr(3);  // strip UTF-8 BOM
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (first) {
            table.header = fields;
            first = false;
        } else {
            table.rows.push_back(fields);
        }
    }
    if (first) throw ValidationError(path + ": empty file");
    return table;
}

std::string cell(const CsvTable& t, std::size_t row, int col) {
    if (col < 0 || static_cast<std::size_t>(col) >= t.rows[row].size()) return "";
    return t.rows[row][static_cast<std::size_t>(col)];
}

[[noreturn]] void cell_error(const CsvTable& t, std::size_t row, const std::string& column,
                             const std::string& what) {
    // Data rows start at file line 2.
    throw ValidationError(t.path + ": row " + std::to_string(row + 2) + ", column '" + column +
                          "': " + what);
}

double parse_real(const CsvTable& t, std::size_t row, int col, const std::string& column) {
    std::string s = cell(t, row, col);
    if (s.empty()) cell_error(t, row, column, "empty value");
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end == s.c_str() || *end != '\0')
        cell_error(t, row, column, "not a number: '" + s + "'");
    return v;
}

long long parse_integer(const CsvTable& t, std::size_t row, int col, const std::string& column) {
    std::string s = cell(t, row, col);
    if (s.empty()) cell_error(t, row, column, "empty value");
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0')
        cell_error(t, row, column, "not an integer: '" + s + "'");
    return v;
}

}  // namespace

std::vector<UnitRecord> read_units_csv(const std::string& path) {
    CsvTable t = read_table(path);
    int c_pair = t.require_column("pair_id");
    int c_slot = t.require_column("cluster_slot");
    int c_outcome = t.require_column("outcome");
    int c_receipt = t.column("receipt");

    std::vector<UnitRecord> units;
    int with_receipt = 0, without_receipt = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        UnitRecord u;
        u.pair_id = cell(t, r, c_pair);
        if (u.pair_id.empty()) cell_error(t, r, "pair_id", "empty value");
        long long slot = parse_integer(t, r, c_slot, "cluster_slot");
        if (slot != 1 && slot != 2) cell_error(t, r, "cluster_slot", "must be 1 or 2");
        u.cluster_slot = static_cast<int>(slot);
        u.outcome = parse_real(t, r, c_outcome, "outcome");
        if (c_receipt >= 0 && !cell(t, r, c_receipt).empty()) {
            long long rec = parse_integer(t, r, c_receipt, "receipt");
            if (rec != 0 && rec != 1) cell_error(t, r, "receipt", "must be 0 or 1");
            u.receipt = static_cast<int>(rec);
            ++with_receipt;
        } else {
            ++without_receipt;
        }
        units.push_back(std::move(u));
    }
    if (with_receipt > 0 && without_receipt > 0)
        throw ValidationError(path + ": partial receipts (receipt must be set on every row or none)");
    return units;
}

std::map<std::string, int> read_assignments_csv(const std::string& path) {
    CsvTable t = read_table(path);
    int c_pair = t.require_column("pair_id");
    int c_z = t.require_column("z");
    std::map<std::string, int> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::string pid = cell(t, r, c_pair);
        if (pid.empty()) cell_error(t, r, "pair_id", "empty value");
        long long z = parse_integer(t, r, c_z, "z");
        if (z != 0 && z != 1) cell_error(t, r, "z", "must be 0 or 1");
        if (!out.emplace(pid, static_cast<int>(z)).second)
            cell_error(t, r, "pair_id", "duplicate pair_id '" + pid + "'");
    }
    return out;
}

std::map<std::pair<std::string, int>, long long> read_clusters_csv(const std::string& path) {
    CsvTable t = read_table(path);
    int c_pair = t.require_column("pair_id");
    int c_slot = t.require_column("cluster_slot");
    int c_pop = t.require_column("population_size");
    std::map<std::pair<std::string, int>, long long> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::string pid = cell(t, r, c_pair);
        if (pid.empty()) cell_error(t, r, "pair_id", "empty value");
        long long slot = parse_integer(t, r, c_slot, "cluster_slot");
        if (slot != 1 && slot != 2) cell_error(t, r, "cluster_slot", "must be 1 or 2");
        long long pop = parse_integer(t, r, c_pop, "population_size");
        if (pop < 1) cell_error(t, r, "population_size", "must be positive");
        if (!out.emplace(std::make_pair(pid, static_cast<int>(slot)), pop).second)
            cell_error(t, r, "pair_id", "duplicate (pair_id, cluster_slot)");
    }
    return out;
}

std::vector<ClusterProfile> read_profiles_csv(const std::string& path) {
    CsvTable t = read_table(path);
    int c_id = t.require_column("cluster_id");
    int c_size = t.require_column("size");
    std::vector<int> cov_cols;
    std::vector<std::string> cov_names;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i].rfind("cov_", 0) == 0) {
            cov_cols.push_back(static_cast<int>(i));
            cov_names.push_back(t.header[i]);
        }
    }
    std::vector<ClusterProfile> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ClusterProfile p;
        p.cluster_id = cell(t, r, c_id);
        if (p.cluster_id.empty()) cell_error(t, r, "cluster_id", "empty value");
        p.size = parse_real(t, r, c_size, "size");
        if (!(p.size > 0.0)) cell_error(t, r, "size", "must be positive");
        for (std::size_t c = 0; c < cov_cols.size(); ++c)
            p.covariates.push_back(parse_real(t, r, cov_cols[c], cov_names[c]));
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

std::string format_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void write_units_csv(const std::string& path, const std::vector<UnitRecord>& units) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    bool receipts = !units.empty() && units.front().receipt.has_value();
    out << "pair_id,cluster_slot,outcome" << (receipts ? ",receipt" : "") << "\n";
    for (const auto& u : units) {
        out << u.pair_id << ',' << u.cluster_slot << ',' << format_real(u.outcome);
        if (receipts) out << ',' << (u.receipt ? std::to_string(*u.receipt) : "");
        out << "\n";
    }
}

void write_assignments_csv(const std::string& path, const std::map<std::string, int>& assignments) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << "pair_id,z\n";
    for (const auto& [pid, z] : assignments) out << pid << ',' << z << "\n";
}

void write_clusters_csv(const std::string& path,
                        const std::map<std::pair<std::string, int>, long long>& populations) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << "pair_id,cluster_slot,population_size\n";
    for (const auto& [key, pop] : populations)
        out << key.first << ',' << key.second << ',' << pop << "\n";
}

MpcrDataset load_dataset_from_files(const std::string& units_path,
                                    const std::string& assignments_path,
                                    const std::optional<std::string>& clusters_path) {
    auto units = read_units_csv(units_path);
    auto assignments = read_assignments_csv(assignments_path);
    std::map<std::pair<std::string, int>, long long> populations;
    if (clusters_path) populations = read_clusters_csv(*clusters_path);
    return load_dataset(units, populations, assignments);
}

}  // namespace mpcr
