#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "radius.hpp"

namespace qcg {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

/// Round-trip decimal form of a double.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Hash of the canonical (sorted-key, compact) dump of a config.
inline std::string config_hash(const nlohmann::json& config) { return hex64(fnv1a64(config.dump())); }

struct CsvTable {
  std::vector<std::string> comments;  // written as "# ..." lines before the header
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> r) {
    if (r.size() != header.size()) throw InvalidInput("CsvTable: row width does not match header");
    rows.push_back(std::move(r));
  }
  void add_row(const std::vector<double>& r) {
    std::vector<std::string> s;
    for (double v : r) s.push_back(fmt_double(v));
    add_row(std::move(s));
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
        if (!quote) {
          out += cells[i];
          continue;
        }
        out += '"';
        for (char c : cells[i]) {
          if (c == '"') out += '"';
          out += c;
        }
        out += '"';
      }
      out += '\n';
    };
    for (const auto& c : comments) out += "# " + c + '\n';
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline CsvTable curve_csv(const MeanRadiusCurve& c, const std::string& hash) {
  CsvTable t;
  t.comments.push_back("map=" + c.label + " n=" + std::to_string(c.n) + " seed=" + std::to_string(c.seed) +
                       " budget=" + std::to_string(c.budget) + " config=" + hash);
  t.header = {"t", "rhoTilde", "stdError"};
  for (std::size_t k = 0; k < c.size(); ++k) t.add_row(std::vector<double>{c.t[k], c.rho_tilde[k], c.error[k]});
  return t;
}

/// JSON document with the schema version and config hash stamped in.
inline nlohmann::json versioned(const std::string& kind, const std::string& hash, nlohmann::json body) {
  nlohmann::json j;
  j["schema"] = "qcgrowth/" + kind;
  j["schemaVersion"] = kSchemaVersion;
  j["config"] = hash;
  j["data"] = std::move(body);
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects result files and writes them together with manifest.json.
/// File names carry the config hash. Nothing reaches disk before commit().
class ResultWriter {
 public:
  ResultWriter(std::filesystem::path dir, nlohmann::json config)
      : dir_(std::move(dir)), config_(std::move(config)), hash_(config_hash(config_)), started_(utc_timestamp()) {}

  const std::string& hash() const { return hash_; }
  const std::filesystem::path& dir() const { return dir_; }

  /// stem "rho-curve", ext "csv" -> rho-curve-<hash>.csv
  std::string add(const std::string& stem, const std::string& ext, std::string content) {
    const std::string name = stem + "-" + hash_ + "." + ext;
    files_.emplace_back(name, std::move(content));
    return name;
  }

  void annotate(const std::string& key, nlohmann::json v) { notes_[key] = std::move(v); }

  nlohmann::json manifest() const {
    nlohmann::json m;
    m["schemaVersion"] = kSchemaVersion;
    m["artifactVersion"] = kArtifactVersion;
    m["configHash"] = hash_;
    m["config"] = config_;
    if (config_.contains("seed")) m["seed"] = config_["seed"];
    m["started"] = started_;
    m["finished"] = utc_timestamp();
    m["files"] = nlohmann::json::array();
    for (const auto& f : files_) m["files"].push_back(f.first);
    if (!notes_.empty()) m["annotations"] = notes_;
    return m;
  }

  std::vector<std::filesystem::path> commit() const {
    std::filesystem::create_directories(dir_);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& body) {
      const auto p = dir_ / name;
      std::ofstream os(p, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + p.string());
      os << body;
      written.push_back(p);
    };
    put("manifest-" + hash_ + ".json", manifest().dump(2) + "\n");
    for (const auto& f : files_) put(f.first, f.second);
    return written;
  }

 private:
  std::filesystem::path dir_;
  nlohmann::json config_;
  std::string hash_;
  std::string started_;
  std::vector<std::pair<std::string, std::string>> files_;
  nlohmann::json notes_ = nlohmann::json::object();
};

}  // namespace qcg
