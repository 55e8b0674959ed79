#include "chb/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace chb {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size())
    throw std::runtime_error("snapshot truncated");
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

void put_header(std::vector<std::uint8_t>& out, const GridSpec& g) {
  out.insert(out.end(), {'C', 'H', 'B', 'F'});
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ny));
  put<double>(out, g.lx);
  put<double>(out, g.ly);
}

GridSpec get_header(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (in.size() < kSnapshotHeaderBytes || std::memcmp(in.data(), "CHBF", 4) != 0)
    throw std::runtime_error("not a CHBF snapshot");
  pos = 4;
  if (get<std::uint32_t>(in, pos) != kSnapshotVersion)
    throw std::runtime_error("unsupported snapshot version");
  GridSpec g;
  g.nx = static_cast<int>(get<std::uint32_t>(in, pos));
  g.ny = static_cast<int>(get<std::uint32_t>(in, pos));
  g.lx = get<double>(in, pos);
  g.ly = get<double>(in, pos);
  g.validate();
  return g;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open snapshot " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write snapshot " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

std::vector<std::uint8_t> encode_snapshot(const ScalarField& f) {
  std::vector<std::uint8_t> out;
  out.reserve(kSnapshotHeaderBytes + 8 * f.size());
  put_header(out, f.grid());
  for (double v : f.values())
    put<double>(out, v);
  return out;
}

std::vector<std::uint8_t> encode_snapshot(const MacVector& v) {
  std::vector<std::uint8_t> out;
  put_header(out, v.grid());
  out.push_back(static_cast<std::uint8_t>(v.bc()));
  for (double x : v.ux_values())
    put<double>(out, x);
  for (double x : v.uy_values())
    put<double>(out, x);
  return out;
}

GridSpec snapshot_grid(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  return get_header(bytes, pos);
}

ScalarField decode_scalar_snapshot(const std::vector<std::uint8_t>& bytes, ScalarBC bc) {
  std::size_t pos = 0;
  const GridSpec g = get_header(bytes, pos);
  if (bytes.size() != kSnapshotHeaderBytes + 8 * g.cells())
    throw std::runtime_error("scalar snapshot has wrong payload size");
  ScalarField f(g, bc);
  for (double& v : f.values())
    v = get<double>(bytes, pos);
  return f;
}

MacVector decode_vector_snapshot(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  const GridSpec g = get_header(bytes, pos);
  const std::size_t nvals = static_cast<std::size_t>(g.nx + 1) * g.ny + static_cast<std::size_t>(g.nx) * (g.ny + 1);
  if (bytes.size() != kSnapshotHeaderBytes + 1 + 8 * nvals)
    throw std::runtime_error("face snapshot has wrong payload size");
  const std::uint8_t kind = bytes[pos++];
  if (kind > static_cast<std::uint8_t>(VelocityBC::Periodic))
    throw std::runtime_error("unknown face snapshot kind tag");
  MacVector v(g, static_cast<VelocityBC>(kind));
  for (double& x : v.ux_values())
    x = get<double>(bytes, pos);
  for (double& x : v.uy_values())
    x = get<double>(bytes, pos);
  return v;
}

void write_snapshot(const std::filesystem::path& path, const ScalarField& f) {
  write_file(path, encode_snapshot(f));
}

void write_snapshot(const std::filesystem::path& path, const MacVector& v) {
  write_file(path, encode_snapshot(v));
}

ScalarField read_scalar_snapshot(const std::filesystem::path& path, ScalarBC bc) {
  return decode_scalar_snapshot(read_file(path), bc);
}

MacVector read_vector_snapshot(const std::filesystem::path& path) {
  return decode_vector_snapshot(read_file(path));
}

} // namespace chb
