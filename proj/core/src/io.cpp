#include "bnnmix/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace bnnmix {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw InvalidArgument(fmt::format("cannot parse '{}' as a number", text));
  return v;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot read {}", path.string()));
  return in;
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw InvalidArgument(fmt::format("row has {} cells, table has {} columns", row.size(),
                                      columns.size()));
  rows.push_back(std::move(row));
}

std::size_t Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw InvalidArgument(fmt::format("no column named '{}'", name));
}

std::string Table::to_csv() const {
  std::string out = fmt::format("{}\n", fmt::join(columns, ","));
  for (const auto& row : rows) out += fmt::format("{}\n", fmt::join(row, ","));
  return out;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_table(const Table& table, const fs::path& path, const std::string& comment) {
  auto out = open_out(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << table.to_csv();
}

Table read_table(const fs::path& path) {
  auto in = open_in(path);
  Table table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      table.columns = split_line(line);
      header = false;
    } else {
      table.add_row(split_line(line));
    }
  }
  if (header) throw InvalidArgument(fmt::format("{} has no header", path.string()));
  return table;
}

void write_matrix_csv(const Matrix& m, const fs::path& path) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split_line(line)) row.push_back(parse_double(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidArgument(fmt::format("{}: ragged rows", path.string()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void save_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  write_matrix_csv(data.x1(), dir / "x1.csv");
  write_matrix_csv(data.y(), dir / "y.csv");
  const nlohmann::ordered_json meta = {
      {"d", data.d()},
      {"n", data.n()},
      {"noise_var", data.noise_var()},
      {"seed", data.seed()},
      {"generator", std::string(to_string(data.generator()))},
  };
  auto out = open_out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

Dataset load_dataset(const fs::path& dir) {
  const auto meta = nlohmann::json::parse(read_text(dir / "meta.json"));
  Matrix x1 = read_matrix_csv(dir / "x1.csv");
  const Matrix y = read_matrix_csv(dir / "y.csv");
  if (y.cols() != 1) throw InvalidArgument("y.csv must have exactly one column");
  if (x1.rows() != meta.at("d").get<int>() || x1.cols() != meta.at("n").get<int>())
    throw InvalidArgument("x1.csv does not match the d and n in meta.json");
  return Dataset(std::move(x1), y.col(0), meta.at("noise_var").get<double>(),
                 meta.value("seed", std::uint64_t{0}),
                 target_generator_from_string(meta.value("generator", "standard_gaussian_y")));
}

void save_candidates(const CandidateSet& candidates, const NetworkShape& shape,
                     const fs::path& dir) {
  fs::create_directories(dir);
  const nlohmann::ordered_json meta = {
      {"widths", shape.widths()},
      {"activation", std::string(to_string(shape.activation()))},
      {"count", candidates.size()},
  };
  {
    auto out = open_out(dir / "shape.json");
    out << meta.dump(2) << '\n';
  }
  Table masses{{"candidate", "log_prior_mass"}, {}};
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const auto& layers = candidates[j].layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Matrix block(layers[l].weights.rows() + 1, layers[l].weights.cols());
      block.topRows(layers[l].weights.rows()) = layers[l].weights;
      block.bottomRows(1) = layers[l].bias.transpose();
      write_matrix_csv(block, dir / fmt::format("candidate_{:05}_layer_{}.csv", j, l + 1));
    }
    masses.add_row({std::to_string(j), format_double(candidates[j].log_prior_mass())});
  }
  write_table(masses, dir / "masses.csv");
}

std::pair<CandidateSet, NetworkShape> load_candidates(const fs::path& dir) {
  const auto meta = nlohmann::json::parse(read_text(dir / "shape.json"));
  NetworkShape shape(meta.at("widths").get<std::vector<int>>(),
                     activation_from_string(meta.at("activation").get<std::string>()));
  const Table masses = read_table(dir / "masses.csv");
  const auto mass_col = masses.column_index("log_prior_mass");
  std::vector<ThetaCandidate> out;
  out.reserve(masses.rows.size());
  for (std::size_t j = 0; j < masses.rows.size(); ++j) {
    std::vector<Layer> layers;
    for (int l = 0; l < shape.layer_count(); ++l) {
      const Matrix block =
          read_matrix_csv(dir / fmt::format("candidate_{:05}_layer_{}.csv", j, l + 1));
      if (block.rows() < 2) throw InvalidArgument("candidate layer file is too short");
      layers.push_back(Layer{block.topRows(block.rows() - 1), block.bottomRows(1).transpose()});
    }
    out.emplace_back(std::move(layers), parse_double(masses.rows[j][mass_col]));
    out.back().check_shape(shape);
  }
  return {CandidateSet(std::move(out)), std::move(shape)};
}

Table mixture_table(const MixturePredictive& mix) {
  mix.validate();
  Table table{{"component", "weight", "mean", "sd"}, {}};
  for (std::size_t j = 0; j < mix.size(); ++j) {
    table.add_row({std::to_string(j), format_double(mix.weights[j]), format_double(mix.means[j]),
                   format_double(mix.sds[j])});
  }
  return table;
}

MixturePredictive mixture_from_table(const Table& table) {
  const auto w = table.column_index("weight");
  const auto m = table.column_index("mean");
  const auto s = table.column_index("sd");
  MixturePredictive mix;
  for (const auto& row : table.rows) {
    mix.weights.push_back(parse_double(row[w]));
    mix.means.push_back(parse_double(row[m]));
    mix.sds.push_back(parse_double(row[s]));
  }
  mix.validate();
  return mix;
}

}  // namespace bnnmix
