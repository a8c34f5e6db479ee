#include "domdec/io.hpp"

#include "domdec/errors.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

namespace domdec {

namespace fs = std::filesystem;

ImageFormat formatFromPath(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" ? ImageFormat::Pgm : ImageFormat::Csv;
}

RawImage readCsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  RawImage img;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    int cols = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::string cell = line.substr(pos, end - pos);
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ValidationError(path.string() + ": cannot parse value at row " +
                              std::to_string(img.rows) + ", col " + std::to_string(cols) +
                              " (line " + std::to_string(lineNo) + ")");
      }
      img.values.push_back(v);
      ++cols;
      pos = end + 1;
    }
    if (img.rows == 0) {
      img.cols = cols;
    } else if (cols != img.cols) {
      throw ValidationError(path.string() + ": row " + std::to_string(img.rows) + " has " +
                            std::to_string(cols) + " values, expected " + std::to_string(img.cols));
    }
    ++img.rows;
  }
  if (img.rows == 0) throw ValidationError(path.string() + ": empty image");
  return img;
}

RawImage readPgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(ch);
    }
    return t;
  };
  if (token() != "P5") throw ValidationError(path.string() + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw ValidationError(path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw ValidationError(path.string() + ": unsupported PGM geometry or maxval");
  }
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw ValidationError(path.string() + ": truncated PGM data");
  }
  RawImage img{h, w, {}};
  img.values.reserve(buf.size());
  for (unsigned char v : buf) img.values.push_back(static_cast<double>(v));
  return img;
}

IngestedImage toMeasure(const RawImage& raw, const IngestOptions& opt) {
  for (int r = 0; r < raw.rows; ++r) {
    for (int c = 0; c < raw.cols; ++c) {
      const double v = raw.values[static_cast<std::size_t>(r) * raw.cols + c];
      if (!std::isfinite(v) || v < 0.0) {
        throw DomainError("negative or non-finite pixel at row " + std::to_string(r) + ", col " +
                          std::to_string(c) + " (" + std::to_string(v) + ")");
      }
    }
  }
  int side = std::max(raw.rows, raw.cols);
  if (raw.rows != raw.cols || !isPowerOfTwo(side)) {
    if (!opt.pad) {
      throw ConfigError("image is " + std::to_string(raw.rows) + "x" + std::to_string(raw.cols) +
                        "; expected a square power-of-two side (use padding)");
    }
    int p = 1;
    while (p < side) p *= 2;
    side = p;
  }
  if (opt.expectedSide > 0 && side != opt.expectedSide) {
    throw ConfigError("image side " + std::to_string(side) + " differs from expected " +
                      std::to_string(opt.expectedSide));
  }
  std::vector<double> w(static_cast<std::size_t>(side) * side, 0.0);
  for (int r = 0; r < raw.rows; ++r) {
    for (int c = 0; c < raw.cols; ++c) {
      w[static_cast<std::size_t>(r) * side + c] = raw.values[static_cast<std::size_t>(r) * raw.cols + c];
    }
  }
  DiscreteMeasure m(std::move(w));
  if (!(m.totalMass() > 0.0)) throw DomainError("image has zero total mass");
  return {m.withMassFloor(opt.massFloor), side};
}

IngestedImage ingestImage(const fs::path& path, ImageFormat format, const IngestOptions& options) {
  return toMeasure(format == ImageFormat::Pgm ? readPgm(path) : readCsv(path), options);
}

namespace {

std::ofstream openOut(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::string formatDouble(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void writeCsv(const fs::path& path, std::span<const double> values, int side) {
  auto out = openOut(path);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (c) out << ',';
      out << formatDouble(values[static_cast<std::size_t>(r) * side + c]);
    }
    out << '\n';
  }
}

void writePgm(const fs::path& path, std::span<const double> values, int side) {
  auto out = openOut(path, std::ios::binary);
  const double mx = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  out << "P5\n" << side << ' ' << side << "\n255\n";
  for (double v : values) {
    const double s = mx > 0.0 ? v / mx * 255.0 : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(s), 0L, 255L))));
  }
}

DiscreteMeasure generateImage(int side, std::uint64_t seed, const GeneratorOptions& opt) {
  if (!isPowerOfTwo(side)) throw ConfigError("generator side must be a power of two");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int k = opt.components;
  if (k <= 0) k = std::uniform_int_distribution<int>(5, 15)(rng);
  const double s = static_cast<double>(side);
  std::vector<double> w(static_cast<std::size_t>(side) * side, 0.0);
  for (int j = 0; j < k; ++j) {
    const double cr = unit(rng) * s;
    const double cc = unit(rng) * s;
    const double sr = s * (opt.minStdFraction + unit(rng) * (opt.maxStdFraction - opt.minStdFraction));
    const double sc = s * (opt.minStdFraction + unit(rng) * (opt.maxStdFraction - opt.minStdFraction));
    const double mag = std::exp(std::log(0.1) + unit(rng) * (std::log(1.0) - std::log(0.1)));
    for (int r = 0; r < side; ++r) {
      const double er = (r - cr) / sr;
      for (int c = 0; c < side; ++c) {
        const double ec = (c - cc) / sc;
        w[static_cast<std::size_t>(r) * side + c] += mag * std::exp(-0.5 * (er * er + ec * ec));
      }
    }
  }
  return DiscreteMeasure(std::move(w)).withMassFloor(opt.massFloor);
}

void writeCouplingTsv(const fs::path& path, const SparseCoupling& pi) {
  auto out = openOut(path);
  for (const auto& e : pi.entries) out << e.x << '\t' << e.y << '\t' << formatDouble(e.mass) << '\n';
}

SparseCoupling readCouplingTsv(const fs::path& path, std::size_t xSize, std::size_t ySize) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  SparseCoupling pi;
  pi.xSize = xSize;
  pi.ySize = ySize;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    unsigned long x = 0, y = 0;
    double m = 0.0;
    if (!(ls >> x >> y >> m) || x >= xSize || y >= ySize) {
      throw ValidationError(path.string() + ": malformed coupling line '" + line + "'");
    }
    pi.entries.push_back({static_cast<Index>(x), static_cast<Index>(y), m});
  }
  pi.sortEntries();
  return pi;
}

void writeTraceCsv(const fs::path& path, const std::vector<double>& delta) {
  auto out = openOut(path);
  out << "sweep,delta\n";
  for (std::size_t l = 0; l < delta.size(); ++l) out << l << ',' << formatDouble(delta[l]) << '\n';
}

std::vector<Rgb> blendCellColors(const CellState& state, const DiscreteMeasure& nu,
                                 const std::function<Rgb(Index)>& colorOf) {
  std::vector<Rgb> out(nu.size(), Rgb{0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < state.basicMarginals.size(); ++i) {
    const Rgb col = colorOf(static_cast<Index>(i));
    const auto& m = state.basicMarginals[i];
    for (std::size_t e = 0; e < m.size(); ++e) {
      const double w = nu[m.index[e]];
      if (!(w > 0.0)) continue;
      const double f = m.mass[e] / w;
      for (int ch = 0; ch < 3; ++ch) out[m.index[e]][ch] += f * col[ch];
    }
  }
  for (std::size_t y = 0; y < out.size(); ++y) {
    if (!(nu[y] > 0.0)) out[y] = {0.0, 0.0, 0.0};
  }
  return out;
}

Rgb checkerboardColor(const BasicPartition& basic, Index cell) {
  static constexpr Rgb palette[4] = {
      {0.90, 0.30, 0.25}, {0.20, 0.55, 0.85}, {0.95, 0.80, 0.20}, {0.30, 0.75, 0.40}};
  const int per = std::max(basic.cellsPerAxis, 1);
  const int r = static_cast<int>(cell) / per;
  const int c = static_cast<int>(cell) % per;
  return basic.cellsPerAxis > 0 ? palette[(r % 2) * 2 + (c % 2)] : palette[cell % 2];
}

namespace {

std::uint8_t toByte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

RgbImage visualizeCells(const CellState& state, const PartitionSet& p, const GridGeometry& geometry,
                        const DiscreteMeasure& nu) {
  if (nu.size() != geometry.size()) throw ConsistencyError("nu does not match the geometry");
  const auto colors =
      blendCellColors(state, nu, [&](Index i) { return checkerboardColor(p.basic, i); });
  RgbImage img{geometry.side(), geometry.side(), {}};
  img.pixels.reserve(colors.size() * 3);
  for (const Rgb& c : colors) {
    for (double v : c) img.pixels.push_back(toByte(v));
  }
  return img;
}

RgbImage stripeImage(const std::vector<Rgb>& colors, int height) {
  RgbImage img{static_cast<int>(colors.size()), height, {}};
  img.pixels.reserve(colors.size() * 3 * static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r) {
    for (const Rgb& c : colors) {
      for (double v : c) img.pixels.push_back(toByte(v));
    }
  }
  return img;
}

void writePng(const fs::path& path, const RgbImage& image) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw ValidationError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw ValidationError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ValidationError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < image.height; ++r) {
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(r) * image.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace domdec
