#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"

namespace hydrosim::sim {

/// In situ readings; an empty field was not measured.
struct WaterQuality {
  std::optional<double> temperature_C;
  std::optional<double> pH;
  std::optional<double> TDS_mg_L;
  std::optional<double> EC_uS_cm;
};

struct SyringeSample {
  std::string label;  ///< e.g. "A3_S1"
  std::string group;  ///< motor group, e.g. "A3"
  double volume_mL = 0.0;
  double loss_pct = 0.0;
  double fill_time_s = 0.0;  ///< cycle time of the motor that filled it
  WaterQuality quality;
};

inline double loss_pct(double volume, double capacity) { return 100.0 * (1.0 - volume / capacity); }

inline std::string group_of(const std::string& label) { return label.substr(0, label.find('_')); }

struct ColumnMeans {
  double volume_mL = 0.0;
  double loss_pct = 0.0;
  std::optional<double> temperature_C;
  std::optional<double> pH;
  std::optional<double> TDS_mg_L;
  std::optional<double> EC_uS_cm;
};

struct GroupRow {
  std::string group;
  std::size_t n = 0;
  double fill_time_s = 0.0;
  double time_error_pct = 0.0;
  ColumnMeans means;
};

struct Table4Aggregate {
  std::vector<GroupRow> groups;  ///< in order of first appearance
  GroupRow global;
};

namespace detail {

using QualityField = std::optional<double> WaterQuality::*;

/// Group rows average over every syringe, an unmeasured one counting as
/// zero. Nothing measured at all gives no value.
inline std::optional<double> mean_missing_as_zero(const std::vector<const SyringeSample*>& s, QualityField f) {
  double sum = 0.0;
  bool any = false;
  for (const auto* x : s)
    if (x->quality.*f) {
      sum += *(x->quality.*f);
      any = true;
    }
  if (!any) return std::nullopt;
  return sum / static_cast<double>(s.size());
}

/// The overall row averages measured values only.
inline std::optional<double> mean_present(const std::vector<SyringeSample>& s, QualityField f) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : s)
    if (x.quality.*f) {
      sum += *(x.quality.*f);
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace detail

/// Per-group and overall means in the layout of the field sampling table.
/// Time error is relative to `baseline_s`; the overall fill time is the mean
/// of the group times.
inline Table4Aggregate aggregate_table4(const std::vector<SyringeSample>& samples, double baseline_s = 130.0) {
  if (samples.empty()) throw Error(Errc::EmptyLog, "aggregate_table4: no samples");
  if (!(baseline_s > 0)) throw Error(Errc::ConfigInvalid, "aggregate_table4: baseline must be > 0");
  const auto time_error = [&](double t) { return 100.0 * (t - baseline_s) / baseline_s; };

  std::vector<std::string> order;
  std::map<std::string, std::vector<const SyringeSample*>> by_group;
  for (const auto& s : samples) {
    auto& v = by_group[s.group];
    if (v.empty()) order.push_back(s.group);
    v.push_back(&s);
  }

  Table4Aggregate out;
  double time_sum = 0.0;
  for (const auto& g : order) {
    const auto& rows = by_group[g];
    GroupRow r;
    r.group = g;
    r.n = rows.size();
    const double n = static_cast<double>(rows.size());
    for (const auto* s : rows) {
      r.fill_time_s += s->fill_time_s / n;
      r.means.volume_mL += s->volume_mL / n;
      r.means.loss_pct += s->loss_pct / n;
    }
    r.time_error_pct = time_error(r.fill_time_s);
    r.means.temperature_C = detail::mean_missing_as_zero(rows, &WaterQuality::temperature_C);
    r.means.pH = detail::mean_missing_as_zero(rows, &WaterQuality::pH);
    r.means.TDS_mg_L = detail::mean_missing_as_zero(rows, &WaterQuality::TDS_mg_L);
    r.means.EC_uS_cm = detail::mean_missing_as_zero(rows, &WaterQuality::EC_uS_cm);
    time_sum += r.fill_time_s;
    out.groups.push_back(std::move(r));
  }

  GroupRow& all = out.global;
  all.group = "all";
  all.n = samples.size();
  all.fill_time_s = time_sum / static_cast<double>(out.groups.size());
  all.time_error_pct = time_error(all.fill_time_s);
  const double n = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    all.means.volume_mL += s.volume_mL / n;
    all.means.loss_pct += s.loss_pct / n;
  }
  all.means.temperature_C = detail::mean_present(samples, &WaterQuality::temperature_C);
  all.means.pH = detail::mean_present(samples, &WaterQuality::pH);
  all.means.TDS_mg_L = detail::mean_present(samples, &WaterQuality::TDS_mg_L);
  all.means.EC_uS_cm = detail::mean_present(samples, &WaterQuality::EC_uS_cm);
  return out;
}

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace detail

inline nlohmann::json column_means_to_json(const ColumnMeans& m) {
  return {{"volume_mL", m.volume_mL},
          {"loss_pct", m.loss_pct},
          {"temperature_C", detail::opt_json(m.temperature_C)},
          {"pH", detail::opt_json(m.pH)},
          {"TDS_mg_L", detail::opt_json(m.TDS_mg_L)},
          {"EC_uS_cm", detail::opt_json(m.EC_uS_cm)}};
}

inline nlohmann::json group_row_to_json(const GroupRow& r) {
  nlohmann::json j = column_means_to_json(r.means);
  j["group"] = r.group;
  j["n"] = r.n;
  j["fill_time_s"] = r.fill_time_s;
  j["time_error_pct"] = r.time_error_pct;
  return j;
}

inline nlohmann::json table4_to_json(const Table4Aggregate& a) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : a.groups) groups.push_back(group_row_to_json(g));
  return {{"groups", groups}, {"all", group_row_to_json(a.global)}};
}

inline WaterQuality water_quality_from_json(const nlohmann::json& j) {
  return {detail::opt_from(j, "temperature_C"), detail::opt_from(j, "pH"), detail::opt_from(j, "TDS_mg_L"),
          detail::opt_from(j, "EC_uS_cm")};
}

/// Field dataset file: {capacity_mL, reporting_baseline_s, groups:[{group,
/// fill_time_s, time_error_pct, pi:{...}}], syringes:[{label, group,
/// volume_mL, loss_pct, temperature_C, ...}], pi:{...}}. Each syringe takes
/// its group's fill time and the tabulated loss.
struct FieldDataset {
  double capacity_mL = 45.0;
  double baseline_s = 130.0;
  std::vector<SyringeSample> samples;
  std::vector<GroupRow> printed_groups;
  GroupRow printed_global;
};

inline GroupRow printed_row(const std::string& group, const nlohmann::json& pi, double t, double e) {
  GroupRow r;
  r.group = group;
  r.fill_time_s = t;
  r.time_error_pct = e;
  r.means.volume_mL = pi.at("volume_mL").get<double>();
  r.means.loss_pct = pi.at("loss_pct").get<double>();
  r.means.temperature_C = detail::opt_from(pi, "temperature_C");
  r.means.pH = detail::opt_from(pi, "pH");
  r.means.TDS_mg_L = detail::opt_from(pi, "TDS_mg_L");
  r.means.EC_uS_cm = detail::opt_from(pi, "EC_uS_cm");
  return r;
}

inline FieldDataset field_dataset_from_json(const nlohmann::json& j) {
  FieldDataset d;
  try {
    d.capacity_mL = j.value("capacity_mL", d.capacity_mL);
    d.baseline_s = j.value("reporting_baseline_s", d.baseline_s);
    std::map<std::string, double> times;
    for (const auto& g : j.at("groups")) {
      const auto name = g.at("group").get<std::string>();
      times[name] = g.at("fill_time_s").get<double>();
      d.printed_groups.push_back(
          printed_row(name, g.at("pi"), times[name], g.at("time_error_pct").get<double>()));
    }
    for (const auto& s : j.at("syringes")) {
      SyringeSample x;
      x.label = s.at("label").get<std::string>();
      x.group = s.value("group", group_of(x.label));
      x.volume_mL = s.at("volume_mL").get<double>();
      x.loss_pct = s.contains("loss_pct") ? s.at("loss_pct").get<double>() : loss_pct(x.volume_mL, d.capacity_mL);
      x.fill_time_s = times.at(x.group);
      x.quality = water_quality_from_json(s);
      d.samples.push_back(std::move(x));
    }
    const auto& pi = j.at("pi");
    d.printed_global =
        printed_row("all", pi, pi.at("fill_time_s").get<double>(), pi.at("time_error_pct").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("field dataset: ") + e.what());
  } catch (const std::out_of_range&) {
    throw Error(Errc::ConfigInvalid, "field dataset: syringe references an unknown group");
  }
  return d;
}

}  // namespace hydrosim::sim
