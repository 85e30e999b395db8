#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/sim/log.hpp"
#include "hydrosim/sim/table4.hpp"

namespace hydrosim::bridge {

struct SampleRecord {
  std::string mission;  ///< records are unique per (mission, label)
  std::string label;
  double volume = 0.0;  ///< mL
  double t_start = 0.0;
  double t_end = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  sim::WaterQuality measured;

  friend bool operator==(const SampleRecord& a, const SampleRecord& b) {
    const auto& x = a.measured;
    const auto& y = b.measured;
    return a.mission == b.mission && a.label == b.label && a.volume == b.volume && a.t_start == b.t_start &&
           a.t_end == b.t_end && a.lat == b.lat && a.lon == b.lon && x.temperature_C == y.temperature_C &&
           x.pH == y.pH && x.TDS_mg_L == y.TDS_mg_L && x.EC_uS_cm == y.EC_uS_cm;
  }
};

inline nlohmann::json record_to_json(const SampleRecord& r) {
  nlohmann::json j{{"mission", r.mission}, {"label", r.label}, {"volume", r.volume}, {"t_start", r.t_start},
                   {"t_end", r.t_end},     {"lat", r.lat},     {"lon", r.lon}};
  const auto put = [&](const char* k, const std::optional<double>& v) { j[k] = v ? nlohmann::json(*v) : nlohmann::json(); };
  put("temperature_C", r.measured.temperature_C);
  put("pH", r.measured.pH);
  put("TDS_mg_L", r.measured.TDS_mg_L);
  put("EC_uS_cm", r.measured.EC_uS_cm);
  return j;
}

/// Throws BadCommand for malformed bodies, OutOfRange for invalid values.
inline SampleRecord record_from_json(const nlohmann::json& j, double capacity = 45.0) {
  SampleRecord r;
  try {
    r.mission = j.value("mission", std::string("default"));
    r.label = j.at("label").get<std::string>();
    r.volume = j.at("volume").get<double>();
    r.t_start = j.value("t_start", 0.0);
    r.t_end = j.value("t_end", r.t_start);
    r.lat = j.at("lat").get<double>();
    r.lon = j.at("lon").get<double>();
    r.measured = sim::water_quality_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadCommand, std::string("sample record: ") + e.what());
  }
  if (r.label.empty() || r.label.size() > 64) throw Error(Errc::OutOfRange, "label must be 1..64 bytes");
  if (!(r.volume >= 0.0 && r.volume <= capacity)) throw Error(Errc::OutOfRange, "volume outside [0, capacity]");
  if (!(std::abs(r.lat) <= 90.0) || !(std::abs(r.lon) <= 180.0)) throw Error(Errc::OutOfRange, "coordinates");
  if (!std::isfinite(r.t_start) || !std::isfinite(r.t_end)) throw Error(Errc::OutOfRange, "times must be finite");
  return r;
}

enum class Parameter { Temperature, PH, TDS, EC, Volume };

inline Parameter parameter_from_name(const std::string& s) {
  if (s == "temperature") return Parameter::Temperature;
  if (s == "pH") return Parameter::PH;
  if (s == "TDS") return Parameter::TDS;
  if (s == "EC") return Parameter::EC;
  if (s == "volume") return Parameter::Volume;
  throw Error(Errc::UnknownParameter, "unknown parameter " + s);
}

inline std::optional<double> parameter_value(const SampleRecord& r, Parameter p) {
  switch (p) {
    case Parameter::Temperature: return r.measured.temperature_C;
    case Parameter::PH: return r.measured.pH;
    case Parameter::TDS: return r.measured.TDS_mg_L;
    case Parameter::EC: return r.measured.EC_uS_cm;
    case Parameter::Volume: return r.volume;
  }
  return std::nullopt;
}

struct HeatmapCell {
  double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;
  std::string parameter;
  double mean = 0.0;
  std::size_t count = 0;
};

inline nlohmann::json heatmap_cell_to_json(const HeatmapCell& c) {
  return {{"lat_min", c.lat_min}, {"lat_max", c.lat_max}, {"lon_min", c.lon_min}, {"lon_max", c.lon_max},
          {"parameter", c.parameter}, {"mean", c.mean}, {"count", c.count}};
}

struct MergeReport {
  std::size_t added = 0;
  std::size_t replaced = 0;
  std::size_t unchanged = 0;
};

inline nlohmann::json merge_report_to_json(const MergeReport& m) {
  return {{"added", m.added}, {"replaced", m.replaced}, {"unchanged", m.unchanged}};
}

/// Data directory from a flag, else HYDROSIM_DATA, else ./hydrosim-data.
inline std::filesystem::path resolve_data_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("HYDROSIM_DATA"); env && *env) return env;
  return "hydrosim-data";
}

/// Sample store backed by an append-only line-delimited journal. The live
/// view is the journal reduced by the merge rule: a record replaces an
/// existing one with the same key only if its t_end is later.
class SampleStore {
 public:
  /// In-memory store with no journal.
  SampleStore() = default;

  explicit SampleStore(const std::filesystem::path& dir) : path_(dir / "journal.jsonl") {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::Io, "cannot create " + dir.string() + ": " + ec.message());
    std::ifstream in(*path_);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        merge_one(record_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        throw Error(Errc::Io, path_->string() + ":" + std::to_string(n) + ": " + e.what());
      }
    }
  }

  void record_sample(const SampleRecord& r) {
    std::lock_guard lock(mu_);
    if (records_.count(key(r))) throw Error(Errc::DuplicateLabel, "label " + r.label + " already recorded");
    append(r);
    records_.emplace(key(r), r);
  }

  std::vector<SampleRecord> list_samples(const std::optional<std::string>& mission = std::nullopt,
                                         const std::optional<Parameter>& has = std::nullopt) const {
    std::lock_guard lock(mu_);
    std::vector<SampleRecord> out;
    for (const auto& [k, r] : records_) {
      if (mission && r.mission != *mission) continue;
      if (has && !parameter_value(r, *has)) continue;
      out.push_back(r);
    }
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  /// Equal-angle bins: floor(lat / bin) and floor(lon / bin).
  std::vector<HeatmapCell> heatmap(const std::string& parameter, double bin) const {
    const Parameter p = parameter_from_name(parameter);
    if (!(bin > 0) || !std::isfinite(bin)) throw Error(Errc::OutOfRange, "bin size must be > 0");
    struct Acc {
      double sum = 0;
      std::size_t n = 0;
    };
    std::map<std::pair<long long, long long>, Acc> bins;
    {
      std::lock_guard lock(mu_);
      for (const auto& [k, r] : records_) {
        const auto v = parameter_value(r, p);
        if (!v) continue;
        auto& a = bins[{static_cast<long long>(std::floor(r.lat / bin)), static_cast<long long>(std::floor(r.lon / bin))}];
        a.sum += *v;
        ++a.n;
      }
    }
    std::vector<HeatmapCell> out;
    for (const auto& [ij, a] : bins) {
      const double la = static_cast<double>(ij.first) * bin, lo = static_cast<double>(ij.second) * bin;
      out.push_back({la, la + bin, lo, lo + bin, parameter, a.sum / static_cast<double>(a.n), a.n});
    }
    return out;
  }

  /// Self-contained snapshot of the live view with a content checksum.
  nlohmann::json sync_export() const {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : list_samples()) recs.push_back(record_to_json(r));
    return {{"format", "hydrosim-journal"}, {"version", 1}, {"records", recs}, {"sha256", sim::sha256_hex(recs.dump())}};
  }

  MergeReport sync_import(const nlohmann::json& archive) {
    std::vector<SampleRecord> incoming;
    try {
      if (archive.at("format") != "hydrosim-journal" || archive.at("version") != 1)
        throw Error(Errc::ArchiveCorrupt, "unknown archive format");
      const auto& recs = archive.at("records");
      if (sim::sha256_hex(recs.dump()) != archive.at("sha256").get<std::string>())
        throw Error(Errc::ArchiveCorrupt, "checksum mismatch");
      for (const auto& j : recs) incoming.push_back(record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ArchiveCorrupt, e.what());
    } catch (const Error& e) {
      if (e.code() == Errc::ArchiveCorrupt) throw;
      throw Error(Errc::ArchiveCorrupt, e.what());
    }
    MergeReport rep;
    std::lock_guard lock(mu_);
    for (const auto& r : incoming) {
      const auto it = records_.find(key(r));
      if (it == records_.end()) {
        ++rep.added;
      } else if (r.t_end > it->second.t_end) {
        ++rep.replaced;
      } else {
        ++rep.unchanged;
        continue;
      }
      append(r);
      merge_one(r);
    }
    return rep;
  }

 private:
  static std::string key(const SampleRecord& r) { return r.mission + '\x1f' + r.label; }

  void merge_one(const SampleRecord& r) {
    const auto it = records_.find(key(r));
    if (it == records_.end()) records_.emplace(key(r), r);
    else if (r.t_end > it->second.t_end) it->second = r;
  }

  void append(const SampleRecord& r) {
    if (!path_) return;
    std::ofstream out(*path_, std::ios::app);
    out << record_to_json(r).dump() << '\n';
    if (!out) throw Error(Errc::Io, "journal write failed");
  }

  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::map<std::string, SampleRecord> records_;
};

}  // namespace hydrosim::bridge
