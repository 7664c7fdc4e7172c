#include "nf/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace nf {

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

void write_csv(const std::string& path, const Table& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n' << std::setprecision(17);
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return nlohmann::json::parse(in);
}

namespace {

// explicit little-endian byte order regardless of the host
template <class T>
void put(std::ofstream& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U u = std::bit_cast<U>(v);
  char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  out.write(b, sizeof b);
}

template <class T>
T get(std::ifstream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char b[sizeof(U)];
  in.read(reinterpret_cast<char*>(b), sizeof b);
  if (!in) throw std::runtime_error("truncated snapshot file");
  U u = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) u |= static_cast<U>(b[i]) << (8 * i);
  return std::bit_cast<T>(u);
}

constexpr char kMagic[8] = {'N', 'F', 'S', 'N', 'A', 'P', '0', '1'};

}  // namespace

void write_snapshots(const std::string& path, const GridSpec& g, const std::vector<double>& times,
                     const std::vector<Vec>& rows) {
  if (times.size() != rows.size()) throw std::invalid_argument("times and rows differ in length");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, 8);
  put<std::uint32_t>(out, 1);
  put<double>(out, g.half_length);
  put<double>(out, g.spacing);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.n_points));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(rows.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.n_points));
  for (double t : times) put<double>(out, t);
  for (const Vec& r : rows) {
    if (r.size() != g.n_points) throw std::invalid_argument("row length differs from the grid");
    for (double v : r) put<double>(out, v);
  }
}

SnapshotFile read_snapshots(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("not a snapshot file");
  if (get<std::uint32_t>(in) != 1) throw std::runtime_error("unsupported snapshot version");
  SnapshotFile f;
  const double half = get<double>(in);
  get<double>(in);
  const int n = static_cast<int>(get<std::uint32_t>(in));
  f.grid = GridSpec::make(half, n);
  const std::uint32_t rows = get<std::uint32_t>(in);
  const std::uint32_t cols = get<std::uint32_t>(in);
  if (static_cast<int>(cols) != n) throw std::runtime_error("snapshot columns differ from the grid");
  for (std::uint32_t r = 0; r < rows; ++r) f.times.push_back(get<double>(in));
  for (std::uint32_t r = 0; r < rows; ++r) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = get<double>(in);
    f.rows.push_back(std::move(v));
  }
  return f;
}

}  // namespace nf
