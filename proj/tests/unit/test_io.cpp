#include "domdec/engine.hpp"
#include "domdec/errors.hpp"
#include "domdec/io.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace domdec;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("domdec_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path file(const std::string& name) const { return dir_ / name; }
  void write(const fs::path& p, const std::string& text) const { std::ofstream(p, std::ios::binary) << text; }

  fs::path dir_;
};

std::uint32_t bigEndian(const std::string& s, std::size_t at) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3]));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

using Io = TempDir;

TEST_F(Io, CsvOfOnesIsUniform) {
  write(file("ones.csv"), "1,1,1,1\n1,1,1,1\n1,1,1,1\n1,1,1,1\n");
  auto img = ingestImage(file("ones.csv"), ImageFormat::Csv);
  EXPECT_EQ(img.side, 4);
  for (double w : img.measure.weights()) EXPECT_NEAR(w, 1.0 / 16.0, 1e-15);
  EXPECT_TRUE(img.measure.isProbability());
}

TEST_F(Io, PgmIsProportionalPlusFloor) {
  std::string data = "P5\n4 4\n255\n";
  std::vector<int> px{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120, 130, 140, 255};
  for (int v : px) data.push_back(static_cast<char>(v));
  write(file("a.pgm"), data);
  EXPECT_EQ(formatFromPath(file("a.pgm")), ImageFormat::Pgm);
  auto img = ingestImage(file("a.pgm"), ImageFormat::Pgm);
  double total = 0.0;
  for (int v : px) total += v;
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_NEAR(img.measure[i], px[i] / total, 1e-9);
  EXPECT_GT(img.measure[0], 0.0);
  EXPECT_NEAR(img.measure.totalMass(), 1.0, 1e-14);
}

TEST_F(Io, NegativeEntryReportsPosition) {
  write(file("neg.csv"), "1,1\n1,-2\n");
  try {
    ingestImage(file("neg.csv"), ImageFormat::Csv);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1, col 1"), std::string::npos) << e.what();
  }
}

TEST_F(Io, ParseAndShapeErrors) {
  write(file("bad.csv"), "1,x\n1,1\n");
  EXPECT_THROW(ingestImage(file("bad.csv"), ImageFormat::Csv), ValidationError);
  write(file("ragged.csv"), "1,1\n1\n");
  EXPECT_THROW(ingestImage(file("ragged.csv"), ImageFormat::Csv), ValidationError);
  write(file("three.csv"), "1,1,1\n1,1,1\n1,1,1\n");
  EXPECT_THROW(ingestImage(file("three.csv"), ImageFormat::Csv), ConfigError);
  IngestOptions pad;
  pad.pad = true;
  auto img = ingestImage(file("three.csv"), ImageFormat::Csv, pad);
  EXPECT_EQ(img.side, 4);
  EXPECT_LT(img.measure[3], 1e-9);
  IngestOptions expect8;
  expect8.expectedSide = 8;
  write(file("ones.csv"), "1,1\n1,1\n");
  EXPECT_THROW(ingestImage(file("ones.csv"), ImageFormat::Csv, expect8), ConfigError);
  EXPECT_THROW(ingestImage(file("missing.csv"), ImageFormat::Csv), ValidationError);
  write(file("p2.pgm"), "P2\n2 2\n255\n1 2 3 4\n");
  EXPECT_THROW(ingestImage(file("p2.pgm"), ImageFormat::Pgm), ValidationError);
}

TEST_F(Io, CsvAndPgmRoundTrip) {
  auto m = generateImage(8, 3);
  writeCsv(file("m.csv"), m.weights(), 8);
  auto back = readCsv(file("m.csv"));
  ASSERT_EQ(back.values.size(), 64u);
  for (int i = 0; i < 64; ++i) EXPECT_EQ(back.values[i], m[i]);
  writePgm(file("m.pgm"), m.weights(), 8);
  auto pgm = readPgm(file("m.pgm"));
  EXPECT_EQ(pgm.rows, 8);
  EXPECT_DOUBLE_EQ(*std::max_element(pgm.values.begin(), pgm.values.end()), 255.0);
}

TEST(Generator, DeterministicAndValid) {
  auto a = generateImage(64, 7), b = generateImage(64, 7), c = generateImage(64, 8);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_NE(a.weights(), c.weights());
  GeneratorOptions ten;
  ten.components = 10;
  auto m = generateImage(64, 7, ten);
  EXPECT_NEAR(m.totalMass(), 1.0, 1e-12);
  const auto [lo, hi] = std::minmax_element(m.weights().begin(), m.weights().end());
  EXPECT_GE(*lo, 1e-9 / 4096.0 * (1.0 - 1e-12));
  EXPECT_TRUE(std::isfinite(*hi / *lo));
  EXPECT_THROW(generateImage(12, 1), ConfigError);
}

TEST(Generator, WideSingleComponentIsNearUniform) {
  GeneratorOptions wide;
  wide.components = 1;
  wide.minStdFraction = wide.maxStdFraction = 100.0;
  auto m = generateImage(32, 4, wide);
  const auto [lo, hi] = std::minmax_element(m.weights().begin(), m.weights().end());
  EXPECT_LT(*hi / *lo, 1.001);
}

TEST_F(Io, CouplingAndTraceExport) {
  SparseCoupling pi;
  pi.xSize = 3;
  pi.ySize = 2;
  pi.entries = {{0, 1, 0.25}, {2, 0, 1.0 / 3.0}, {1, 1, 0.1}};
  pi.sortEntries();
  writeCouplingTsv(file("c.tsv"), pi);
  auto back = readCouplingTsv(file("c.tsv"), 3, 2);
  ASSERT_EQ(back.entries.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.entries[k].x, pi.entries[k].x);
    EXPECT_EQ(back.entries[k].mass, pi.entries[k].mass);
  }
  EXPECT_THROW(readCouplingTsv(file("c.tsv"), 2, 2), ValidationError);
  writeTraceCsv(file("t.csv"), {1.0, 0.5});
  EXPECT_EQ(slurp(file("t.csv")).substr(0, 12), "sweep,delta\n");
}

TEST(Visualize, ProductStateIsUniformBlend) {
  GridGeometry g(16, 1.0);
  auto mu = generateImage(16, 1), nu = generateImage(16, 2);
  auto p = buildGridPartitions(g, mu, 4);
  auto s = initializeProductState(p, nu, 1.0);
  auto colors = blendCellColors(s, nu, [&](Index i) { return checkerboardColor(p.basic, i); });
  Rgb expected{0, 0, 0};
  for (std::size_t i = 0; i < p.basic.size(); ++i)
    for (int ch = 0; ch < 3; ++ch) expected[ch] += p.basic.cellMasses[i] * checkerboardColor(p.basic, static_cast<Index>(i))[ch];
  for (const auto& c : colors)
    for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(c[ch], expected[ch], 1e-12);
}

TEST(Visualize, PermutationShowsTransportedPalette) {
  GridGeometry g(8, 1.0);
  auto u = DiscreteMeasure::uniform(64);
  auto p = buildGridPartitions(g, u, 2);
  // Transpose map x = (r, c) -> (c, r).
  SparseCoupling pi;
  pi.xSize = pi.ySize = 64;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) pi.entries.push_back({g.flat(r, c), g.flat(c, r), 1.0 / 64});
  pi.sortEntries();
  auto s = initializeFromCoupling(p, pi, 1.0);
  auto colors = blendCellColors(s, u, [&](Index i) { return checkerboardColor(p.basic, i); });
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const Rgb want = checkerboardColor(p.basic, p.basic.cellOf[g.flat(c, r)]);
      for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(colors[g.flat(r, c)][ch], want[ch], 1e-12);
    }
  std::set<std::array<double, 3>> distinct;
  for (std::size_t i = 0; i < p.basic.size(); ++i) distinct.insert(checkerboardColor(p.basic, static_cast<Index>(i)));
  EXPECT_EQ(distinct.size(), 4u);
}

TEST(Visualize, ZeroMassPixelsAreBlack) {
  std::vector<double> w(64, 1.0 / 63);
  w[5] = 0.0;
  DiscreteMeasure nu(w), mu = DiscreteMeasure::uniform(64);
  GridGeometry g(8, 1.0);
  auto p = buildGridPartitions(g, mu, 4);
  auto s = initializeProductState(p, nu, 1.0);
  auto img = visualizeCells(s, p, g, nu);
  ASSERT_EQ(img.pixels.size(), 64u * 3);
  EXPECT_EQ(img.pixels[15], 0);
  EXPECT_EQ(img.pixels[16], 0);
  EXPECT_EQ(img.pixels[17], 0);
  EXPECT_GT(int(img.pixels[0]) + img.pixels[1] + img.pixels[2], 0);
}

TEST(Visualize, OneDimensionalRunShowsCellBands) {
  fixture::LineBands f;
  const double eps = 1e-3;
  SparseCoupling pi0;
  pi0.xSize = pi0.ySize = 128;
  for (Index x = 0; x < 128; ++x) pi0.entries.push_back({x, 127 - x, 1.0 / 128});
  auto state = initializeFromCoupling(f.p, pi0, eps);
  ProblemData data{&f.mu, &f.mu, &f.cost, eps};
  Executor ex(1);
  EngineConfig cfg;
  cfg.errTol = 1e-8;
  for (int l = 0; l < 60; ++l) sweep(state, l % 2 ? Label::B : Label::A, f.p, data, cfg, ex);
  auto colors = blendCellColors(state, f.mu, [&](Index i) { return checkerboardColor(f.p.basic, i); });
  const Rgb even = checkerboardColor(f.p.basic, 0), odd = checkerboardColor(f.p.basic, 1);
  auto near = [](const Rgb& a, const Rgb& b) {
    return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]) < 0.05;
  };
  for (int y : {10, 24, 40}) EXPECT_TRUE(near(colors[y], even)) << y;
  for (int y : {56, 64, 72}) EXPECT_TRUE(near(colors[y], odd)) << y;
  for (int y : {88, 104, 120}) EXPECT_TRUE(near(colors[y], even)) << y;
  auto img = stripeImage(colors, 4);
  EXPECT_EQ(img.width, 128);
  EXPECT_EQ(img.height, 4);
  EXPECT_EQ(img.pixels.size(), 128u * 4 * 3);
}

TEST_F(Io, PngHeader) {
  RgbImage img{5, 3, std::vector<std::uint8_t>(45, 200)};
  writePng(file("x.png"), img);
  auto bytes = slurp(file("x.png"));
  ASSERT_GT(bytes.size(), 24u);
  EXPECT_EQ(bytes.substr(1, 3), "PNG");
  EXPECT_EQ(bytes.substr(12, 4), "IHDR");
  EXPECT_EQ(bigEndian(bytes, 16), 5u);
  EXPECT_EQ(bigEndian(bytes, 20), 3u);
}
