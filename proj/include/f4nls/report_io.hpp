#pragma once

// Report files: summary.txt, metrics.csv, series_<kind>.csv and F4NS snapshots.

#include <bit>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "f4nls/error.hpp"
#include "f4nls/experiments.hpp"
#include "f4nls/grid.hpp"

namespace f4nls {

namespace fs = std::filesystem;

inline constexpr char snapshot_magic[4] = {'F', '4', 'N', 'S'};
inline constexpr std::uint32_t snapshot_version = 1;

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is, const fs::path& path) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw IoError("snapshot truncated: " + path.string());
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

inline std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

inline std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

inline void finish(std::ostream& os, const fs::path& path) {
  os.flush();
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline double parse_double(const std::string& s, const fs::path& path) {
  // strtod rather than stod: subnormals must parse (stod reports them as out of range).
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError("malformed number '" + s + "' in " + path.string());
  return v;
}

/// Keeps [A-Za-z0-9._-]; everything else becomes '_'.
inline std::string file_token(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) c = '_';
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Snapshots

inline void write_snapshot(const fs::path& path, const ComplexField& field, double t) {
  field.require(Space::physical, "write_snapshot");
  const GridSpec& g = field.grid();
  auto os = detail::open_out(path, std::ios::binary);
  os.write(snapshot_magic, 4);
  detail::put_le<std::uint32_t>(os, snapshot_version);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.ndim()));
  for (int a = 0; a < g.ndim(); ++a) detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(g.points(a)));
  for (int a = 0; a < g.ndim(); ++a) detail::put_le<double>(os, g.half_width(a));
  detail::put_le<double>(os, t);
  for (const Complex& z : field.samples()) {
    detail::put_le<double>(os, z.real());
    detail::put_le<double>(os, z.imag());
  }
  detail::finish(os, path);
}

struct SnapshotData {
  ComplexField field;
  double t = 0.0;
};

inline SnapshotData read_snapshot(const fs::path& path) {
  auto is = detail::open_in(path, std::ios::binary);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, snapshot_magic, 4) != 0)
    throw IoError("not a snapshot file (bad magic): " + path.string());
  const auto version = detail::get_le<std::uint32_t>(is, path);
  if (version != snapshot_version)
    throw IoError("unsupported snapshot version " + std::to_string(version) + ": " + path.string());
  const auto ndim = detail::get_le<std::uint32_t>(is, path);
  if (ndim < 1 || ndim > 3) throw IoError("snapshot has invalid ndim: " + path.string());
  std::vector<int> pts(ndim);
  std::vector<double> hw(ndim);
  for (auto& n : pts) n = static_cast<int>(detail::get_le<std::uint64_t>(is, path));
  for (auto& l : hw) l = detail::get_le<double>(is, path);
  SnapshotData out;
  out.t = detail::get_le<double>(is, path);
  GridSpec g;
  try {
    g = make_grid(static_cast<int>(ndim), pts, hw);
  } catch (const DomainError& e) {
    throw IoError(std::string("snapshot grid rejected (") + e.what() + "): " + path.string());
  }
  std::vector<Complex> s(g.size());
  for (auto& z : s) {
    const double re = detail::get_le<double>(is, path);
    const double im = detail::get_le<double>(is, path);
    z = {re, im};
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in snapshot: " + path.string());
  out.field = ComplexField(g, std::move(s), Space::physical);
  return out;
}

// ---------------------------------------------------------------------------
// CSV files

inline std::string metrics_header(double p) { return "t,mass,energy,h2,linf,weak_lp_" + label(p); }

inline void write_metrics(const fs::path& path, const std::vector<MetricsRow>& rows, double p) {
  auto os = detail::open_out(path);
  os << metrics_header(p) << '\n';
  for (const auto& r : rows)
    os << format_double(r.t) << ',' << format_double(r.mass) << ',' << format_double(r.energy) << ','
       << format_double(r.h2) << ',' << format_double(r.linf) << ',' << format_double(r.weak_lp) << '\n';
  detail::finish(os, path);
}

struct MetricsTable {
  std::string header;
  std::vector<MetricsRow> rows;
};

inline MetricsTable read_metrics(const fs::path& path) {
  auto is = detail::open_in(path);
  MetricsTable out;
  if (!std::getline(is, out.header) || out.header.rfind("t,mass,energy,h2,linf,weak_lp_", 0) != 0)
    throw IoError("metrics header missing or malformed: " + path.string());
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = detail::split_csv(line);
    if (c.size() != 6) throw IoError("metrics row needs 6 columns: " + path.string());
    out.rows.push_back({detail::parse_double(c[0], path), detail::parse_double(c[1], path),
                        detail::parse_double(c[2], path), detail::parse_double(c[3], path),
                        detail::parse_double(c[4], path), detail::parse_double(c[5], path)});
  }
  return out;
}

inline void write_series(const fs::path& path, const NormSeries& s) {
  if (s.times.size() != s.values.size()) throw DomainError("write_series: times and values differ in length");
  auto os = detail::open_out(path);
  os << "t," << s.kind << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) os << format_double(s.times[i]) << ',' << format_double(s.values[i]) << '\n';
  detail::finish(os, path);
}

inline NormSeries read_series(const fs::path& path) {
  auto is = detail::open_in(path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,", 0) != 0) throw IoError("series header malformed: " + path.string());
  NormSeries s;
  s.kind = line.substr(2);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = detail::split_csv(line);
    if (c.size() != 2) throw IoError("series row needs 2 columns: " + path.string());
    s.push(detail::parse_double(c[0], path), detail::parse_double(c[1], path));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Summary

inline constexpr const char* timestamp_key = "timestamp (nondeterministic)";

/// key: value lines. The timestamp line is the only one that changes between identical runs.
inline std::string summary_text(const ExperimentReport& r, const std::optional<std::string>& timestamp) {
  std::ostringstream os;
  os << "kind: " << r.kind << '\n';
  if (timestamp) os << timestamp_key << ": " << *timestamp << '\n';
  for (const auto& [k, v] : r.config) os << "config." << k << ": " << v << '\n';
  for (const auto& [k, v] : r.provenance) os << "provenance." << k << ": " << v << '\n';
  for (const auto& f : r.fitted)
    os << "fitted." << f.name << ": " << format_double(f.value) << " +- " << format_double(f.std_error) << '\n';
  for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
    const Verdict& v = r.verdicts[i];
    const std::string key = "verdict." + std::to_string(i);
    os << key << ".criterion: " << v.criterion << '\n';
    os << key << ".pass: " << (v.pass ? "true" : "false") << '\n';
    os << key << ".measured: " << format_double(v.measured) << '\n';
    os << key << ".relation: " << v.relation << '\n';
    os << key << ".tolerance: " << format_double(v.tolerance) << '\n';
  }
  os << "passed: " << (r.passed() ? "true" : "false") << '\n';
  return os.str();
}

inline std::vector<std::pair<std::string, std::string>> read_summary(const fs::path& path) {
  auto is = detail::open_in(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto pos = line.find(": ");
    if (pos == std::string::npos) throw IoError("summary line without 'key: value': " + path.string());
    out.emplace_back(line.substr(0, pos), line.substr(pos + 2));
  }
  return out;
}

struct PersistOptions {
  /// When false the timestamp line is omitted.
  bool timestamp = true;
};

/// Writes summary.txt, metrics.csv, one CSV per series and one F4NS file per
/// snapshot into out_dir. Returns the written paths in that order.
inline std::vector<fs::path> persist_report(const ExperimentReport& r, const fs::path& out_dir,
                                            const PersistOptions& opts = {}) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> paths;
  const fs::path summary = out_dir / "summary.txt";
  {
    auto os = detail::open_out(summary);
    os << summary_text(r, opts.timestamp ? std::optional<std::string>(detail::utc_timestamp()) : std::nullopt);
    detail::finish(os, summary);
  }
  paths.push_back(summary);
  paths.push_back(out_dir / "metrics.csv");
  write_metrics(paths.back(), r.metrics, r.metrics_p);
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    paths.push_back(out_dir / ("series_" + std::to_string(i) + "_" + detail::file_token(r.series[i].kind) + ".csv"));
    write_series(paths.back(), r.series[i]);
  }
  for (const auto& s : r.snapshots) {
    paths.push_back(out_dir / (detail::file_token(s.name) + ".f4ns"));
    write_snapshot(paths.back(), s.field, s.t);
  }
  return paths;
}

}  // namespace f4nls
