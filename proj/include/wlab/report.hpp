#pragma once

// CSV and summary writers. Every CSV starts with a versioned comment line
// "# wlab <kind> v1" followed by the column header. Numbers use %.17g so that
// identical runs produce identical bytes.

#include <filesystem>
#include <string>
#include <vector>

#include "wlab/harnack.hpp"
#include "wlab/ricciflow.hpp"

namespace wlab {

std::string format_number(double v);

// Writes through a temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string curvature_csv(const WeightedManifold& M, const CurvatureField& field);
std::string field_csv(const WeightedManifold& M, const Field& values, const std::string& column);
std::string snapshots_csv(const std::vector<HeatState>& snapshots);
std::string manifest_csv(const std::vector<ManifestEntry>& manifest);

struct HarnackRow {
  std::string inequality;
  double t = 0.0;
  double m = 0.0;
  double K = 0.0;
  double min_defect = 0.0;
  std::size_t argmin = 0;
  bool ok = false;
  double resolved_mass = 1.0;
};
HarnackRow to_row(const HarnackReport& r);
std::string harnack_csv(const std::vector<HarnackRow>& rows);

std::string entropy_csv(const EntropySeries& series, bool with_margin);
std::string dissipation_csv(const std::vector<DissipationRow>& rows);

}  // namespace wlab
