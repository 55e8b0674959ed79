#pragma once

// Binary field snapshots (.chbf).
//
// Layout, all little-endian:
//   bytes  0..3   magic "CHBF"
//   bytes  4..7   u32 version (1)
//   bytes  8..15  u32 nx, u32 ny
//   bytes 16..31  f64 lx, f64 ly
// Scalar snapshots follow with nx*ny f64 values, row-major (y outer).
// Face snapshots add a u8 kind tag (velocity BC) after the header, then the
// (nx+1)*ny ux block and the nx*(ny+1) uy block.

#include "chb/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace chb {

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 32;

std::vector<std::uint8_t> encode_snapshot(const ScalarField& f);
std::vector<std::uint8_t> encode_snapshot(const MacVector& v);

/// Throws std::runtime_error on bad magic, version, truncated data or a
/// scalar/face kind mismatch.
ScalarField decode_scalar_snapshot(const std::vector<std::uint8_t>& bytes,
                                   ScalarBC bc = ScalarBC::Neumann);
MacVector decode_vector_snapshot(const std::vector<std::uint8_t>& bytes);

void write_snapshot(const std::filesystem::path& path, const ScalarField& f);
void write_snapshot(const std::filesystem::path& path, const MacVector& v);
ScalarField read_scalar_snapshot(const std::filesystem::path& path, ScalarBC bc = ScalarBC::Neumann);
MacVector read_vector_snapshot(const std::filesystem::path& path);

/// Grid stored in a snapshot header.
GridSpec snapshot_grid(const std::vector<std::uint8_t>& bytes);

} // namespace chb
