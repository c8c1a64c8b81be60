#include "topoforge/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "topoforge/error.hpp"

namespace topoforge {

GreyImage density_pixels(const RasterField& raster) {
  GreyImage px(raster.res_u(), raster.res_v(), 0);
  for (std::size_t k = 0; k < px.size(); ++k) {
    if (!raster.mask.data()[k]) continue;
    const double v = std::clamp(raster.values.data()[k], 0.0, 1.0);
    px.data()[k] = static_cast<std::uint8_t>(std::lround(255.0 * v));
  }
  return px;
}

GreyImage binary_pixels(const BinaryImage& image) {
  GreyImage px(image.bits.rows(), image.bits.cols(), 0);
  for (std::size_t k = 0; k < px.size(); ++k) px.data()[k] = image.bits.data()[k] ? 255 : 0;
  return px;
}

void write_pgm(const std::filesystem::path& path, const GreyImage& px) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  const int width = px.rows(), height = px.cols();
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::string row(width, '\0');
  for (int r = 0; r < height; ++r) {
    const int b = height - 1 - r;
    for (int a = 0; a < width; ++a) row[a] = static_cast<char>(px(a, b));
    out.write(row.data(), width);
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

GreyImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  if (header_token(in) != "P5") fail(ErrorCode::Parse, path.string() + ": not a binary PGM (P5)");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(header_token(in));
    height = std::stoi(header_token(in));
    maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, path.string() + ": malformed PGM header");
  }
  if (width < 1 || height < 1) fail(ErrorCode::Parse, path.string() + ": empty image");
  if (maxval < 1 || maxval > 255) fail(ErrorCode::Parse, path.string() + ": only 8-bit PGM is supported");
  std::string data(static_cast<std::size_t>(width) * height, '\0');
  in.read(data.data(), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size()))
    fail(ErrorCode::Parse, path.string() + ": truncated pixel data");
  GreyImage px(width, height, 0);
  for (int r = 0; r < height; ++r)
    for (int a = 0; a < width; ++a) {
      const int v = static_cast<unsigned char>(data[static_cast<std::size_t>(r) * width + a]);
      px(a, height - 1 - r) = static_cast<std::uint8_t>(maxval == 255 ? v : std::lround(255.0 * v / maxval));
    }
  return px;
}

RasterField raster_from_pixels(const GreyImage& px) {
  RasterField r{Grid2D<double>(px.rows(), px.cols(), 0.0), Grid2D<std::uint8_t>(px.rows(), px.cols(), 1)};
  for (std::size_t k = 0; k < px.size(); ++k) r.values.data()[k] = px.data()[k] / 255.0;
  return r;
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string diagram_csv(std::span<const PersistencePair> pairs) {
  std::ostringstream os;
  os << "dim,birth,death,birth_a,birth_b,death_a,death_b\n";
  for (const auto& p : pairs) {
    os << p.dim << ',' << num(p.birth) << ',' << (p.essential() ? std::string("inf") : num(p.death)) << ','
       << p.birth_cell.a << ',' << p.birth_cell.b << ',';
    if (p.death_cell)
      os << p.death_cell->a << ',' << p.death_cell->b;
    else
      os << ',';
    os << '\n';
  }
  return os.str();
}

void write_diagram_csv(const std::filesystem::path& path, std::span<const PersistencePair> pairs) {
  write_text(path, diagram_csv(pairs));
}

std::string history_csv(std::span<const IterationRecord> history) {
  std::ostringstream os;
  os << "iter,compliance,volume,N0,N1,C_top0,C_top1\n";
  for (const auto& r : history)
    os << r.iter << ',' << num(r.compliance) << ',' << num(r.volume) << ',' << r.n0 << ',' << r.n1 << ','
       << num(r.c_top0) << ',' << num(r.c_top1) << '\n';
  return os.str();
}

std::string topology_csv(std::span<const IterationRecord> history) {
  std::ostringstream os;
  os << "iter,N0,N1,C_top0,C_top1,topology_active,freeze_active,frozen\n";
  for (const auto& r : history)
    os << r.iter << ',' << r.n0 << ',' << r.n1 << ',' << num(r.c_top0) << ',' << num(r.c_top1) << ','
       << r.topology_active << ',' << r.freeze_active << ',' << r.frozen << '\n';
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace topoforge
