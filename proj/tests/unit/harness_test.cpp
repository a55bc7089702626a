#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bnnmix/harness.hpp"

namespace bnnmix {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.d_list = {6};
  cfg.n_over_d = {0.5, 1.0};
  cfg.p_over_d = {1.0, 2.0};
  cfg.j_count = 40;
  cfg.grid_points = 101;
  cfg.mode_grid_points = 201;
  return cfg;
}

std::string read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(ExperimentConfig, JsonRoundTrip) {
  auto cfg = small_config();
  cfg.class_spec = EquivalenceClassSpec{2, 3, 4};
  cfg.candidate_source = CandidateSource::kEquivalenceClass;
  cfg.seed = 123456789012345ULL;
  const auto back = ExperimentConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  EXPECT_EQ(back.class_spec->n_preimage, 3);
  EXPECT_EQ(back.seed, cfg.seed);
}

TEST(ExperimentConfig, AbsentFieldsKeepBaseValues) {
  auto base = small_config();
  base.threshold = 1e-3;
  const auto cfg = ExperimentConfig::from_json(R"({"j_count": 7})", base);
  EXPECT_EQ(cfg.j_count, 7);
  EXPECT_EQ(cfg.threshold, 1e-3);
  EXPECT_EQ(cfg.d_list, base.d_list);
}

TEST(ExperimentConfig, RejectsInvalidValues) {
  EXPECT_THROW(ExperimentConfig::from_json(R"({"d_list": []})"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"n_over_d": [0.0]})"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"j_count": 0})"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"candidate_source": "uniform"})"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_json("{"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"j_count": "many"})"), InvalidArgument);
}

TEST(ExperimentConfig, HashIgnoresThreadsOnly) {
  auto a = small_config();
  auto b = a;
  b.threads = 8;
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = 1;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(GridCells, RoundsRatios) {
  ExperimentConfig cfg;
  cfg.d_list = {10};
  cfg.n_over_d = {0.5, 1.25};
  cfg.p_over_d = {1.5};
  const auto cells = grid_cells(cfg);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].n, 5);
  EXPECT_EQ(cells[1].n, 13);
  EXPECT_EQ(cells[1].p, 15);
  EXPECT_EQ(scaled_size(0.01, 10), 1);
}

TEST(Heatmap, OneRowPerCellWithConsistentCounts) {
  const auto out = run_heatmap(small_config());
  const auto& t = out.table("heatmap.csv");
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(out.failed_cells, 0);
  const auto count = t.column_index("n_significant");
  for (const auto& row : t.rows) {
    const int c = std::stoi(row[count]);
    EXPECT_GE(c, 1);
    EXPECT_LE(c, 40);
    EXPECT_TRUE(row.back().empty());
  }
}

TEST(Heatmap, ThreadCountDoesNotChangeOutput) {
  auto cfg = small_config();
  const auto serial = run_heatmap(cfg);
  cfg.threads = 4;
  const auto parallel = run_heatmap(cfg);
  EXPECT_EQ(serial.table("heatmap.csv").to_csv(), parallel.table("heatmap.csv").to_csv());
}

TEST(Heatmap, RequiresGaussianCandidates) {
  auto cfg = small_config();
  cfg.candidate_source = CandidateSource::kEquivalenceClass;
  EXPECT_THROW(run_heatmap(cfg), InvalidArgument);
}

TEST(PdfDump, EmitsDensityAndComponentsPerCell) {
  auto cfg = small_config();
  cfg.n_test_points = 2;
  const auto out = run_pdf_dump(cfg);
  EXPECT_EQ(out.tables.size(), 1u + 4u * 2u * 2u);
  const auto& summary = out.table("pdf_summary.csv");
  EXPECT_EQ(summary.rows.size(), 8u);
  const auto& pdf = out.table("pdf_d6_n3_p6_g0.01_t0.csv");
  EXPECT_EQ(pdf.rows.size(), 101u);
  EXPECT_EQ(out.table("pdf_d6_n3_p6_g0.01_t1_components.csv").rows.size(), 40u);
}

TEST(PdfDump, EquivalenceClassFailuresAreRecordedPerCell) {
  auto cfg = small_config();
  cfg.candidate_source = CandidateSource::kEquivalenceClass;
  cfg.class_spec = EquivalenceClassSpec{2, 2, 2};
  cfg.n_over_d = {0.5, 2.0};
  cfg.p_over_d = {2.0};
  const auto out = run_pdf_dump(cfg);
  EXPECT_EQ(out.failed_cells, 1);
  const auto& summary = out.table("pdf_summary.csv");
  ASSERT_EQ(summary.rows.size(), 2u);
  EXPECT_TRUE(summary.rows[0].back().empty());
  EXPECT_FALSE(summary.rows[1].back().empty());
}

TEST(VarianceScaling, ReportsMeanAndStandardError) {
  ExperimentConfig cfg;
  cfg.candidate_source = CandidateSource::kEquivalenceClass;
  cfg.class_spec = EquivalenceClassSpec{2, 2, 2};
  cfg.d_list = {10, 20};
  cfg.n_over_d = {0.5};
  cfg.p_over_n = {2.0};
  cfg.n_y_realizations = 3;
  cfg.n_test_points = 3;
  const auto out = run_variance_scaling(cfg);
  const auto& t = out.table("variance_scaling.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], "10");
  EXPECT_EQ(t.rows[1][2], "20");
  EXPECT_GT(std::stod(t.rows[0][t.column_index("mean_median_variance")]), 0.0);
  EXPECT_GE(std::stod(t.rows[0][t.column_index("standard_error")]), 0.0);
}

TEST(OptimalityGap, ConjectureWithinBound) {
  auto cfg = small_config();
  cfg.n_over_d = {0.5, 1.0};
  const auto out = run_optimality_gap(cfg);
  const auto& t = out.table("optimality_gap.csv");
  for (const auto& row : t.rows) {
    EXPECT_GE(std::stod(row[t.column_index("bound_minus_conjectured")]), -1e-12);
  }
}

TEST(PriorComparison, HistogramsAreDensities) {
  ExperimentConfig cfg;
  cfg.candidate_source = CandidateSource::kEquivalenceClass;
  cfg.class_spec = EquivalenceClassSpec{2, 2, 2};
  cfg.d_list = {12};
  cfg.n_over_d = {0.5};
  cfg.p_over_d = {1.0};
  cfg.histogram_bins = 20;
  const auto out = run_prior_comparison(cfg);
  for (const char* name : {"prior_comparison_theta.csv", "prior_comparison_w.csv"}) {
    const auto& t = out.table(name);
    ASSERT_EQ(t.rows.size(), 20u);
    double mass = 0.0;
    for (const auto& row : t.rows) mass += std::stod(row[3]) * (std::stod(row[1]) - std::stod(row[0]));
    EXPECT_NEAR(mass, 1.0, 1e-9);
  }
  EXPECT_EQ(out.table("prior_comparison_summary.csv").rows.size(), 2u);
}

TEST(Classify, BinaryAndMeanFieldTables) {
  auto cfg = small_config();
  cfg.n_over_d = {1.0};
  cfg.p_over_d = {1.0};
  cfg.n_test_points = 3;
  const auto out = run_classify(cfg);
  EXPECT_EQ(out.table("class_probs.csv").rows.size(), 6u);
  EXPECT_EQ(out.table("binary_probs.csv").rows.size(), 3u);
}

TEST(WriteOutput, FilesCarryTheConfigHash) {
  const auto cfg = small_config();
  const auto out = run_heatmap(cfg);
  const auto dir = fs::temp_directory_path() / "bnnmix_harness_write";
  fs::remove_all(dir);
  write_output(out, cfg, dir);
  const auto text = read(dir / "heatmap.csv");
  EXPECT_EQ(text.rfind("# bnnmix heatmap config_hash=" + cfg.hash(), 0), 0u);
  EXPECT_TRUE(fs::exists(dir / "heatmap.meta.json"));
}

}  // namespace
}  // namespace bnnmix
