#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "topoforge/cubical_ph.hpp"
#include "topoforge/density_field.hpp"
#include "topoforge/runner.hpp"

namespace topoforge {

/// 8-bit grey image in raster orientation: pixels(a, b) with a along u (image columns) and b along
/// v (image rows, bottom-up).
using GreyImage = Grid2D<std::uint8_t>;

/// round(255 rho) on in-domain cells, 0 elsewhere.
GreyImage density_pixels(const RasterField& raster);

/// 255 for solid, 0 for void or outside the domain.
GreyImage binary_pixels(const BinaryImage& image);

/// Binary PGM (P5, maxval 255). The top image row is the largest v.
void write_pgm(const std::filesystem::path& path, const GreyImage& pixels);
GreyImage read_pgm(const std::filesystem::path& path);

/// Unmasked raster with rho = pixel / 255.
RasterField raster_from_pixels(const GreyImage& pixels);

/// `dim,birth,death,birth_a,birth_b,death_a,death_b`, `inf` and empty death cell for essential pairs.
std::string diagram_csv(std::span<const PersistencePair> pairs);
void write_diagram_csv(const std::filesystem::path& path, std::span<const PersistencePair> pairs);

/// `iter,compliance,volume,N0,N1,C_top0,C_top1` with round-trip precision.
std::string history_csv(std::span<const IterationRecord> history);

/// `iter,N0,N1,C_top0,C_top1,topology_active,freeze_active,frozen`.
std::string topology_csv(std::span<const IterationRecord> history);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace topoforge
