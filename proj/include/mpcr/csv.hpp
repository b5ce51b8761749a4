#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpcr/dataset.hpp"
#include "mpcr/pairing.hpp"

namespace mpcr {

// CSV schemas (exact headers, UTF-8, "." decimal point):
//   units.csv:       pair_id,cluster_slot,outcome[,receipt]
//   assignments.csv: pair_id,z
//   clusters.csv:    pair_id,cluster_slot,population_size
//   profiles.csv:    cluster_id,size[,cov_1..cov_p]
// Parse failures name the row and column of the first offending cell.

std::vector<UnitRecord> read_units_csv(const std::string& path);
std::map<std::string, int> read_assignments_csv(const std::string& path);
std::map<std::pair<std::string, int>, long long> read_clusters_csv(const std::string& path);
std::vector<ClusterProfile> read_profiles_csv(const std::string& path);

void write_units_csv(const std::string& path, const std::vector<UnitRecord>& units);
void write_assignments_csv(const std::string& path, const std::map<std::string, int>& assignments);
void write_clusters_csv(const std::string& path,
                        const std::map<std::pair<std::string, int>, long long>& populations);

// Reads the unit file plus assignments (and populations when given) and
// assembles the validated dataset.
MpcrDataset load_dataset_from_files(const std::string& units_path,
                                    const std::string& assignments_path,
                                    const std::optional<std::string>& clusters_path);

}  // namespace mpcr
