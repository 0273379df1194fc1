#pragma once

// CSV and JSON file formats.
//
// Every CSV starts with two metadata comment lines
//   # siws-kit <kind>; role=<role>; rows=<grid>; cols=<grid>
//   # config=<json>; seed=<seed>; version=<version>
// followed by a column header line and one line per row. Complex entries are
// written as adjacent re,im columns; numbers use %.17g so files round-trip
// exactly. Grids are written as
//   geometric(log_t_min=..,log_ratio=..,n=..)  or  frequency(center=..,step=..,n=..)

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siws/bench.hpp"
#include "siws/synth.hpp"
#include "siws/tfr.hpp"

namespace siws::io {

struct Metadata {
  nlohmann::json config = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string grid_text(const GeometricGrid& g) {
  return "geometric(log_t_min=" + fmt(g.log_t_min()) + ",log_ratio=" + fmt(g.log_ratio()) +
         ",n=" + std::to_string(g.size()) + ")";
}

inline std::string grid_text(const FrequencyGrid& g) {
  return "frequency(center=" + fmt(g.center()) + ",step=" + fmt(g.step()) + ",n=" + std::to_string(g.size()) + ")";
}

namespace detail {

inline std::map<std::string, std::string> parse_fields(const std::string& inner) {
  std::map<std::string, std::string> out;
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidInput("malformed grid field \"" + item + "\"");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

inline double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw InvalidInput("trailing characters in number \"" + s + "\"");
    return v;
  } catch (const std::invalid_argument&) {
    throw InvalidInput("not a number: \"" + s + "\"");
  } catch (const std::out_of_range&) {
    throw InvalidInput("number out of range: \"" + s + "\"");
  }
}

inline std::pair<std::string, std::map<std::string, std::string>> split_grid(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') throw InvalidInput("malformed grid \"" + text + "\"");
  return {text.substr(0, open), parse_fields(text.substr(open + 1, text.size() - open - 2))};
}

inline std::size_t field_n(const std::map<std::string, std::string>& f) {
  const double n = to_double(f.at("n"));
  if (!(n >= 1.0) || n != static_cast<double>(static_cast<std::size_t>(n))) throw InvalidInput("grid size must be a positive integer");
  return static_cast<std::size_t>(n);
}

} // namespace detail

inline GeometricGrid parse_geometric(const std::string& text) {
  const auto [kind, f] = detail::split_grid(text);
  if (kind != "geometric") throw InvalidInput("expected a geometric grid, got \"" + text + "\"");
  try {
    return GeometricGrid::from_log(detail::to_double(f.at("log_t_min")), detail::to_double(f.at("log_ratio")),
                                   detail::field_n(f));
  } catch (const std::out_of_range&) {
    throw InvalidInput("geometric grid needs log_t_min, log_ratio and n");
  }
}

inline FrequencyGrid parse_frequency(const std::string& text) {
  const auto [kind, f] = detail::split_grid(text);
  if (kind != "frequency") throw InvalidInput("expected a frequency grid, got \"" + text + "\"");
  try {
    return FrequencyGrid(detail::to_double(f.at("center")), detail::to_double(f.at("step")), detail::field_n(f));
  } catch (const std::out_of_range&) {
    throw InvalidInput("frequency grid needs center, step and n");
  }
}

/// Parsed CSV: header fields, metadata and a row-major complex table.
struct CsvTable {
  std::string kind;
  std::map<std::string, std::string> fields;  ///< role, rows, cols, ...
  std::string config;
  std::string seed;
  std::string version;
  std::vector<std::vector<Complex>> rows;
};

namespace detail {

inline std::map<std::string, std::string> split_semicolon(const std::string& line) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto end = line.find("; ", pos);
    if (end == std::string::npos) end = line.size();
    const std::string item = line.substr(pos, end - pos);
    const auto eq = item.find('=');
    if (eq != std::string::npos) out[item.substr(0, eq)] = item.substr(eq + 1);
    pos = end + 2;
  }
  return out;
}

inline void write_header(std::ostream& os, const std::string& kind, const std::vector<std::pair<std::string, std::string>>& fields,
                         const Metadata& meta) {
  os << "# siws-kit " << kind;
  for (const auto& [k, v] : fields) os << "; " << k << '=' << v;
  os << '\n';
  os << "# config=" << meta.config.dump() << "; seed=" << (meta.seed ? std::to_string(*meta.seed) : "none")
     << "; version=" << kVersion << '\n';
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open \"" + path + "\" for writing");
  return os;
}

inline void write_complex_row(std::ostream& os, const std::string& lead, const Eigen::Ref<const ComplexMatrix>& row) {
  os << lead;
  for (Eigen::Index j = 0; j < row.cols(); ++j) os << ',' << fmt(row(0, j).real()) << ',' << fmt(row(0, j).imag());
  os << '\n';
}

} // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open \"" + path + "\"");
  CsvTable t;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# siws-kit ", 0) != 0) throw InvalidInput(path + ": missing siws-kit header");
  {
    const std::string body = line.substr(11);
    const auto semi = body.find("; ");
    t.kind = body.substr(0, semi);
    if (semi != std::string::npos) t.fields = detail::split_semicolon(body.substr(semi + 2));
  }
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw InvalidInput(path + ": missing metadata line");
  {
    const std::string body = line.substr(2);
    const auto seed_pos = body.rfind("; seed=");
    if (body.rfind("config=", 0) != 0 || seed_pos == std::string::npos) throw InvalidInput(path + ": malformed metadata line");
    t.config = body.substr(7, seed_pos - 7);
    const auto rest = detail::split_semicolon(body.substr(seed_pos + 2));
    t.seed = rest.count("seed") ? rest.at("seed") : "";
    t.version = rest.count("version") ? rest.at("version") : "";
  }
  if (!std::getline(is, line)) throw InvalidInput(path + ": missing column header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> nums;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        first = false;
        continue;  // row coordinate
      }
      nums.push_back(detail::to_double(cell));
    }
    if (nums.size() % 2 != 0) throw InvalidInput(path + ": odd number of re/im columns");
    std::vector<Complex> row(nums.size() / 2);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = {nums[2 * j], nums[2 * j + 1]};
    if (!t.rows.empty() && row.size() != t.rows.front().size()) throw InvalidInput(path + ": ragged rows");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline ComplexMatrix to_matrix(const CsvTable& t) {
  const auto r = static_cast<Eigen::Index>(t.rows.size());
  const auto c = static_cast<Eigen::Index>(t.rows.empty() ? 0 : t.rows.front().size());
  ComplexMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline std::string require_field(const CsvTable& t, const std::string& key, const std::string& path) {
  const auto it = t.fields.find(key);
  if (it == t.fields.end()) throw InvalidInput(path + ": header has no " + key + " field");
  return it->second;
}

// --- TFMatrix ------------------------------------------------------------

inline void write_tf(const std::string& path, const TFMatrix& m, const Metadata& meta) {
  auto os = detail::open_out(path);
  detail::write_header(os, "tf", {{"role", to_string(m.role)}, {"rows", grid_text(m.time_grid)}, {"cols", grid_text(m.xi_grid)}}, meta);
  os << "t";
  for (std::size_t j = 0; j < m.xi_grid.size(); ++j) os << ",re(xi=" << fmt(m.xi_grid.point(j)) << "),im";
  os << '\n';
  for (Eigen::Index k = 0; k < m.values.rows(); ++k)
    detail::write_complex_row(os, fmt(m.time_grid.point(static_cast<std::size_t>(k))), m.values.row(k));
}

inline TFMatrix read_tf(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.kind != "tf") throw InvalidInput(path + ": not a time-frequency file");
  TFMatrix m{parse_geometric(require_field(t, "rows", path)), parse_frequency(require_field(t, "cols", path)),
             to_matrix(t), TFRole::estimate};
  const std::string role = require_field(t, "role", path);
  for (auto r : {TFRole::siwd, TFRole::siws_true, TFRole::estimate, TFRole::tf_kernel, TFRole::wvs_classical,
                 TFRole::estimate_error})
    if (to_string(r) == role) m.role = r;
  if (static_cast<std::size_t>(m.values.rows()) != m.time_grid.size() ||
      static_cast<std::size_t>(m.values.cols()) != m.xi_grid.size())
    throw DimensionError(path + ": table size does not match its grids");
  return m;
}

// --- AmbiguityMatrix -----------------------------------------------------

inline void write_ambiguity(const std::string& path, const AmbiguityMatrix& m, const Metadata& meta) {
  auto os = detail::open_out(path);
  detail::write_header(os, "ambiguity",
                       {{"role", to_string(m.role)}, {"rows", grid_text(m.theta_grid)}, {"cols", grid_text(m.tau_grid)}},
                       meta);
  os << "theta";
  for (std::size_t j = 0; j < m.tau_grid.size(); ++j) os << ",re(tau=" << fmt(m.tau_grid.point(j)) << "),im";
  os << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i)
    detail::write_complex_row(os, fmt(m.theta_grid.point(static_cast<std::size_t>(i))), m.values.row(i));
}

inline AmbiguityMatrix read_ambiguity(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.kind != "ambiguity") throw InvalidInput(path + ": not an ambiguity-domain file");
  AmbiguityMatrix m{parse_frequency(require_field(t, "rows", path)), parse_geometric(require_field(t, "cols", path)),
                    to_matrix(t), AmbiguityRole::kernel};
  const std::string role = require_field(t, "role", path);
  for (auto r : {AmbiguityRole::siaf, AmbiguityRole::esiaf, AmbiguityRole::e_abs2, AmbiguityRole::kernel})
    if (to_string(r) == role) m.role = r;
  if (static_cast<std::size_t>(m.values.rows()) != m.theta_grid.size() ||
      static_cast<std::size_t>(m.values.cols()) != m.tau_grid.size())
    throw DimensionError(path + ": table size does not match its grids");
  return m;
}

// --- Covariance and samples ---------------------------------------------

inline void write_covariance(const std::string& path, const CovarianceMatrix& r, const Metadata& meta) {
  auto os = detail::open_out(path);
  detail::write_header(os, "covariance", {{"role", "COVARIANCE"}, {"rows", grid_text(r.grid)}, {"cols", grid_text(r.grid)}},
                       meta);
  os << "t";
  for (std::size_t j = 0; j < r.grid.size(); ++j) os << ",re(s=" << fmt(r.grid.point(j)) << "),im";
  os << '\n';
  for (Eigen::Index k = 0; k < r.entries.rows(); ++k)
    detail::write_complex_row(os, fmt(r.grid.point(static_cast<std::size_t>(k))), r.entries.row(k));
}

inline CovarianceMatrix read_covariance(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.kind != "covariance") throw InvalidInput(path + ": not a covariance file");
  CovarianceMatrix r{parse_geometric(require_field(t, "rows", path)), to_matrix(t), std::nullopt};
  if (static_cast<std::size_t>(r.entries.rows()) != r.grid.size() || r.entries.rows() != r.entries.cols())
    throw DimensionError(path + ": covariance table is not n x n");
  return r;
}

/// One row per trial, one re/im pair per time point.
inline void write_samples(const std::string& path, const SampleBatch& b, const Metadata& meta) {
  auto os = detail::open_out(path);
  detail::write_header(os, "samples",
                       {{"role", "SAMPLES"}, {"symmetry", to_string(b.symmetry)}, {"cols", grid_text(b.grid)}}, meta);
  os << "trial";
  for (std::size_t j = 0; j < b.grid.size(); ++j) os << ",re(t=" << fmt(b.grid.point(j)) << "),im";
  os << '\n';
  for (Eigen::Index i = 0; i < b.paths.rows(); ++i) detail::write_complex_row(os, std::to_string(i), b.paths.row(i));
}

inline SampleBatch read_samples(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.kind != "samples") throw InvalidInput(path + ": not a samples file");
  SampleBatch b{parse_geometric(require_field(t, "cols", path)), to_matrix(t), 0, Symmetry::circular};
  if (t.fields.count("symmetry")) b.symmetry = symmetry_from_string(t.fields.at("symmetry"));
  if (!t.seed.empty() && t.seed != "none") b.seed = std::stoull(t.seed);
  if (static_cast<std::size_t>(b.paths.cols()) != b.grid.size()) throw DimensionError(path + ": path length does not match grid");
  return b;
}

/// Mellin line: one row per frequency.
inline void write_mellin(const std::string& path, const MellinLine& line, const Metadata& meta) {
  auto os = detail::open_out(path);
  detail::write_header(os, "mellin", {{"role", "MELLIN"}, {"rows", grid_text(line.grid)}, {"offset", fmt(line.line_offset)}},
                       meta);
  os << "theta,re,im\n";
  for (Eigen::Index j = 0; j < line.values.size(); ++j)
    detail::write_complex_row(os, fmt(line.grid.point(static_cast<std::size_t>(j))), line.values.segment(j, 1).transpose());
}

// --- JSON ---------------------------------------------------------------

inline void write_json(const std::string& path, const nlohmann::json& j) {
  auto os = detail::open_out(path);
  os << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open \"" + path + "\"");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

/// Sidecar with the same metadata as the CSV header.
inline nlohmann::json sidecar(const std::string& kind, const std::string& role, const Metadata& meta) {
  nlohmann::json j{{"kind", kind}, {"role", role}, {"config", meta.config}, {"version", kVersion}};
  j["seed"] = meta.seed ? nlohmann::json(*meta.seed) : nlohmann::json(nullptr);
  return j;
}

} // namespace siws::io
