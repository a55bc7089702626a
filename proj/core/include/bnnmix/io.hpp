#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bnnmix/core.hpp"
#include "bnnmix/mixture.hpp"

namespace bnnmix {

/// Long-format table with a fixed column order; cells are preformatted text.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::size_t column_index(std::string_view name) const;
  std::string to_csv() const;
};

/// Round-trip text for a double ("%.17g").
std::string format_double(double v);

/// Writes `table`, optionally preceded by one "# ..." comment line.
void write_table(const Table& table, const std::filesystem::path& path,
                 const std::string& comment = {});
Table read_table(const std::filesystem::path& path);

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Directory with x1.csv (d x n), y.csv (n x 1) and meta.json.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Directory with shape.json, masses.csv and one candidate_<j>_layer_<l>.csv per
/// layer: d_l rows of weights followed by one bias row.
void save_candidates(const CandidateSet& candidates, const NetworkShape& shape,
                     const std::filesystem::path& dir);
std::pair<CandidateSet, NetworkShape> load_candidates(const std::filesystem::path& dir);

/// Columns component,weight,mean,sd.
Table mixture_table(const MixturePredictive& mix);
MixturePredictive mixture_from_table(const Table& table);

}  // namespace bnnmix
