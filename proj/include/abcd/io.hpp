#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "abcd/bench.hpp"
#include "abcd/detector.hpp"
#include "abcd/generators.hpp"

namespace abcd {

// Shortest representation that parses back to the same double.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view field) {
  // Leading/trailing blanks are tolerated; anything else must consume the field.
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
    field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  if (field.empty()) return std::nullopt;
  double value = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

// ---------------------------------------------------------------------------
// Stream files: CSV with one observation per row and a header naming the
// dimensions, plus a JSON truth sidecar.

inline void write_stream_csv(std::ostream& out, const StreamWithTruth& stream) {
  for (int j = 1; j <= stream.d; ++j) out << (j > 1 ? "," : "") << "x" << j;
  out << "\n";
  for (const auto& x : stream.observations) {
    for (int j = 0; j < stream.d; ++j) {
      if (j > 0) out << ",";
      out << format_double(x(j));
    }
    out << "\n";
  }
}

inline nlohmann::ordered_json truth_to_json(const StreamWithTruth& stream) {
  nlohmann::ordered_json j;
  j["changes"] = nlohmann::ordered_json::array();
  for (const auto& c : stream.changes) {
    nlohmann::ordered_json cj;
    cj["index"] = c.index;
    cj["subspace"] = c.subspace;
    cj["severity_param"] = c.severity_param;
    j["changes"].push_back(std::move(cj));
  }
  j["d"] = stream.d;
  j["generator"] = stream.generator;
  j["seed"] = stream.seed;
  return j;
}

// Truth sidecar without observations; observations load from the CSV.
inline StreamWithTruth truth_from_json(const nlohmann::json& j) {
  StreamWithTruth stream;
  stream.d = j.at("d").get<int>();
  stream.generator = j.value("generator", std::string{});
  stream.seed = j.value("seed", std::uint64_t{0});
  for (const auto& cj : j.at("changes")) {
    ChangeTruth c;
    c.index = cj.at("index").get<std::int64_t>();
    c.subspace = cj.at("subspace").get<std::vector<int>>();
    c.severity_param = cj.at("severity_param").get<double>();
    stream.changes.push_back(std::move(c));
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Row-oriented input: CSV (header auto-detected) or JSONL with one flat
// numeric array per line. Malformed rows are reported, not thrown, so the
// caller decides between skipping and aborting.

enum class RowFormat { csv, jsonl };

struct Row {
  std::vector<double> values;
  std::string error;  // empty when the row parsed
  std::int64_t line = 0;

  bool ok() const { return error.empty(); }
};

class RowReader {
 public:
  RowReader(std::istream& in, RowFormat format) : in_(in), format_(format) {}

  // nullopt at end of input.
  std::optional<Row> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_number_;
      if (line.empty() || line == "\r") continue;
      Row row;
      row.line = line_number_;
      if (format_ == RowFormat::csv) {
        parse_csv(line, row);
        if (first_ && !row.ok()) {  // header row
          first_ = false;
          continue;
        }
        first_ = false;
      } else {
        parse_jsonl(line, row);
      }
      return row;
    }
    return std::nullopt;
  }

 private:
  void parse_csv(const std::string& line, Row& row) {
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      const auto value = parse_double(std::string_view(line).substr(start, end - start));
      if (!value) {
        row.error = "unparseable field at column " + std::to_string(row.values.size() + 1);
        return;
      }
      row.values.push_back(*value);
      start = end + 1;
    }
  }

  void parse_jsonl(const std::string& line, Row& row) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
      row.error = "not a JSON array";
      return;
    }
    for (const auto& v : j) {
      if (!v.is_number()) {
        row.error = "non-numeric element";
        return;
      }
      row.values.push_back(v.get<double>());
    }
  }

  std::istream& in_;
  RowFormat format_;
  bool first_ = true;
  std::int64_t line_number_ = 0;
};

inline std::vector<Eigen::VectorXd> read_observations(std::istream& in, RowFormat format) {
  RowReader reader(in, format);
  std::vector<Eigen::VectorXd> rows;
  while (auto row = reader.next()) {
    if (!row->ok())
      throw std::runtime_error("line " + std::to_string(row->line) + ": " + row->error);
    if (!rows.empty() && static_cast<std::size_t>(rows.front().size()) != row->values.size())
      throw std::runtime_error("line " + std::to_string(row->line) + ": expected " +
                               std::to_string(rows.front().size()) + " columns, got " +
                               std::to_string(row->values.size()));
    rows.push_back(Eigen::Map<const Eigen::VectorXd>(row->values.data(),
                                                     static_cast<Eigen::Index>(row->values.size())));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Min-max normalizer fitted on a warm-up sample so arbitrary inputs satisfy
// the detector's [0,1] requirement. Degenerate dimensions map to 0.5.

struct Normalizer {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  static Normalizer fit(std::span<const Eigen::VectorXd> rows) {
    if (rows.empty()) throw std::invalid_argument("Normalizer: no rows to fit");
    Normalizer n;
    n.min = rows[0];
    n.max = rows[0];
    for (const auto& row : rows.subspan(1)) {
      if (row.size() != n.min.size())
        throw std::domain_error("Normalizer: dimension mismatch while fitting");
      n.min = n.min.cwiseMin(row);
      n.max = n.max.cwiseMax(row);
    }
    return n;
  }

  Eigen::VectorXd transform(const Eigen::VectorXd& x) const {
    if (x.size() != min.size()) throw std::domain_error("Normalizer: dimension mismatch");
    Eigen::VectorXd out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double range = max(j) - min(j);
      out(j) = range > 0.0 ? std::clamp((x(j) - min(j)) / range, 0.0, 1.0) : 0.5;
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["min"] = std::vector<double>(min.data(), min.data() + min.size());
    j["max"] = std::vector<double>(max.data(), max.data() + max.size());
    return j;
  }

  static Normalizer from_json(const nlohmann::json& j) {
    const auto lo = j.at("min").get<std::vector<double>>();
    const auto hi = j.at("max").get<std::vector<double>>();
    if (lo.size() != hi.size() || lo.empty())
      throw std::invalid_argument("Normalizer: malformed bounds");
    Normalizer n;
    n.min = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    n.max = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    for (Eigen::Index j2 = 0; j2 < n.min.size(); ++j2)
      if (n.max(j2) < n.min(j2)) throw std::invalid_argument("Normalizer: max below min");
    return n;
  }
};

// ---------------------------------------------------------------------------
// Change reports: one JSON object per line.

inline nlohmann::ordered_json report_to_json(const ChangeReport& report) {
  nlohmann::ordered_json j;
  j["t_detected"] = report.t_detected;
  j["t_star"] = report.t_star;
  j["p"] = report.p;
  j["subspace"] = report.subspace;
  j["severity"] = report.severity;
  j["subspace_fallback"] = report.subspace_fallback;
  return j;
}

inline ChangeReport report_from_json(const nlohmann::json& j) {
  ChangeReport r;
  r.t_detected = j.at("t_detected").get<std::int64_t>();
  r.t_star = j.at("t_star").get<std::int64_t>();
  r.p = j.at("p").get<double>();
  r.subspace = j.at("subspace").get<std::vector<int>>();
  r.severity = j.at("severity").get<double>();
  r.subspace_fallback = j.at("subspace_fallback").get<bool>();
  return r;
}

// ---------------------------------------------------------------------------
// Detector configuration as flat JSON, used by the bench manifest.

inline DetectorConfig detector_config_from_json(const nlohmann::json& j) {
  DetectorConfig c;
  c.delta = j.value("delta", c.delta);
  c.tau = j.value("tau", c.tau);
  c.n_min = j.value("nmin", c.n_min);
  c.k_max = j.value("kmax", c.k_max);
  c.n_max = j.value("nmax", c.n_max);
  c.M = j.value("M", c.M);
  if (j.contains("model")) c.model.kind = model_kind_from_string(j.at("model").get<std::string>());
  c.model.eta = j.value("eta", c.model.eta);
  c.model.epochs = j.value("epochs", c.model.epochs);
  c.model.learning_rate = j.value("learning_rate", c.model.learning_rate);
  c.model.rbf_gamma = j.value("rbf_gamma", c.model.rbf_gamma);
  c.model.seed = j.value("seed", c.model.seed);
  c.validate();
  return c;
}

struct ManifestStream {
  std::string id;
  std::string csv_path;
  std::string truth_path;
};

struct BenchManifest {
  std::vector<ManifestStream> streams;
  std::vector<DetectorConfig> configs;
};

inline BenchManifest manifest_from_json(const nlohmann::json& j) {
  BenchManifest m;
  for (const auto& sj : j.at("streams")) {
    ManifestStream s;
    s.csv_path = sj.at("csv").get<std::string>();
    s.truth_path = sj.at("truth").get<std::string>();
    if (sj.contains("id")) {
      s.id = sj.at("id").get<std::string>();
    } else {
      const auto slash = s.csv_path.find_last_of('/');
      const std::string base =
          slash == std::string::npos ? s.csv_path : s.csv_path.substr(slash + 1);
      const auto dot = base.find_last_of('.');
      s.id = dot == std::string::npos ? base : base.substr(0, dot);
    }
    m.streams.push_back(std::move(s));
  }
  for (const auto& cj : j.at("configs")) m.configs.push_back(detector_config_from_json(cj));
  if (m.streams.empty() || m.configs.empty())
    throw std::invalid_argument("manifest: need at least one stream and one config");
  return m;
}

// ---------------------------------------------------------------------------
// Metrics table. The header is fixed; failed grid cells are not emitted as
// rows (the caller reports them separately).

inline constexpr const char* kMetricsCsvHeader =
    "stream_id,generator,seed,model,eta,epochs,delta,tau,kmax,"
    "tp,fp,fn,precision,recall,f1,mtd,sacc,spearman_rho";

inline void write_metrics_row(std::ostream& out, const std::string& stream_id,
                              const std::string& generator, std::uint64_t seed,
                              const DetectorConfig& config, const Metrics& m) {
  out << stream_id << "," << generator << "," << seed << "," << to_string(config.model.kind)
      << "," << format_double(config.model.eta) << "," << config.model.epochs << ","
      << format_double(config.delta) << "," << format_double(config.tau) << "," << config.k_max
      << "," << m.tp << "," << m.fp << "," << m.fn << "," << format_double(m.precision) << ","
      << format_double(m.recall) << "," << format_double(m.f1) << "," << format_double(m.mtd)
      << "," << format_double(m.sacc) << "," << format_double(m.spearman_rho) << "\n";
}

}  // namespace abcd
