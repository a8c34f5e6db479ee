#pragma once

// File formats and image sources: CSV/PGM marginals, the seeded Gaussian
// mixture generator, coupling and trace export, and the colored-cell PNG.

#include "domdec/engine.hpp"
#include "domdec/measures.hpp"
#include "domdec/partition.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace domdec {

enum class ImageFormat { Csv, Pgm };

/// Picks the format from the file extension (.pgm, otherwise CSV).
ImageFormat formatFromPath(const std::filesystem::path& path);

struct RawImage {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major
};

/// Row-major decimal floats, one image row per line, comma separated.
RawImage readCsv(const std::filesystem::path& path);
/// Binary P5, maxval <= 255.
RawImage readPgm(const std::filesystem::path& path);

struct IngestOptions {
  int expectedSide = 0;  // 0 accepts any power-of-two side
  bool pad = false;      // zero-pad to the next power of two
  double massFloor = 1e-9;
};

struct IngestedImage {
  DiscreteMeasure measure;
  int side = 0;
};

/// Square power-of-two image, negatives rejected with row/col diagnostics,
/// mass floor applied and normalized to unit mass.
IngestedImage toMeasure(const RawImage& raw, const IngestOptions& options = {});
IngestedImage ingestImage(const std::filesystem::path& path, ImageFormat format,
                          const IngestOptions& options = {});

void writeCsv(const std::filesystem::path& path, std::span<const double> values, int side);
/// Linear 8-bit quantization against the maximum.
void writePgm(const std::filesystem::path& path, std::span<const double> values, int side);

struct GeneratorOptions {
  int components = 0;  // 0 draws uniformly from [5, 15]
  double minStdFraction = 1.0 / 32.0;
  double maxStdFraction = 1.0 / 6.0;
  double massFloor = 1e-9;
};

/// Gaussian mixture with centers uniform on the grid, per-axis standard deviations
/// uniform in [side * minStdFraction, side * maxStdFraction] and magnitudes
/// log-uniform in [0.1, 1]; mass floor applied and normalized.
DiscreteMeasure generateImage(int side, std::uint64_t seed, const GeneratorOptions& options = {});

/// `x<TAB>y<TAB>mass` per line, flat row-major indices.
void writeCouplingTsv(const std::filesystem::path& path, const SparseCoupling& pi);
SparseCoupling readCouplingTsv(const std::filesystem::path& path, std::size_t xSize,
                               std::size_t ySize);

/// Header `sweep,delta`, one row per sweep (row 0 is the initial coupling).
void writeTraceCsv(const std::filesystem::path& path, const std::vector<double>& delta);

using Rgb = std::array<double, 3>;

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB triples, row-major
};

/// Color at y = sum_i col_i nu_i(y) / nu(y); black where nu(y) = 0.
std::vector<Rgb> blendCellColors(const CellState& state, const DiscreteMeasure& nu,
                                 const std::function<Rgb(Index)>& colorOf);

/// Checkerboard palette over grid basic cells (four colors by row and column parity).
Rgb checkerboardColor(const BasicPartition& basic, Index cell);

RgbImage visualizeCells(const CellState& state, const PartitionSet& p, const GridGeometry& geometry,
                        const DiscreteMeasure& nu);

/// One row per Y point of a 1D problem, repeated `height` times.
RgbImage stripeImage(const std::vector<Rgb>& colors, int height);

void writePng(const std::filesystem::path& path, const RgbImage& image);

}  // namespace domdec
