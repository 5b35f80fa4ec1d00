#pragma once

// CSV persistence with exact 64-bit float round-tripping (17 significant
// digits).  Files are a header row, optional leading '#' comment lines, and
// numeric data rows.  Writes are atomic (temp file + rename).

#include <string>
#include <vector>

#include "hypflow/lorentz.hpp"

namespace hypflow {

// %.17g — enough digits to reproduce any double exactly.
std::string fmt17(double v);

void write_file_atomic(const std::string& path, const std::string& content);

struct CsvTable {
  std::vector<std::string> comments;  // without leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

// Ambient point coordinates, columns x0..x<dim>.
void write_points_csv(const std::string& path, const std::vector<ManifoldPoint>& pts);
std::vector<ManifoldPoint> read_points_csv(const std::string& path);

}  // namespace hypflow
