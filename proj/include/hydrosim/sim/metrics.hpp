#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/mission/controller.hpp"
#include "hydrosim/sim/table4.hpp"
#include "hydrosim/telemetry/link.hpp"

namespace hydrosim::sim {

struct SyringeResult {
  std::string label;
  std::string group;
  double fill_time_s = 0.0;
  double volume_mL = 0.0;  ///< at retrieval when the log has one
  double loss_pct = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double lat = 0.0;
  double lon = 0.0;
};

struct EnduranceReport {
  double duration_s = 0.0;
  double energy_used_Wh = 0.0;
  double mean_power_W = 0.0;
  double predicted_endurance_min = 0.0;  ///< usable energy over the mean draw
  std::optional<double> depleted_at_s;
};

struct MetricsReport {
  std::string end_reason;
  std::string mission_status;
  bool success = false;
  double t_end = 0.0;
  int replans = 0;
  std::vector<double> waypoint_errors;
  std::optional<mission::WaypointMetrics> waypoints;
  std::vector<SyringeResult> syringes;
  std::optional<Table4Aggregate> table4;
  EnduranceReport endurance;
  telemetry::LinkStats downlink;
};

/// Recomputes every figure from log records alone.
inline MetricsReport metrics_from_log(const std::vector<nlohmann::json>& recs) {
  if (recs.empty() || recs.front().value("type", "") != "header") throw Error(Errc::LogCorrupt, "missing header");
  MetricsReport m;
  const auto& header = recs.front();
  const double capacity = header.value("capacity_mL", 45.0);
  const double baseline = header.value("reporting_baseline_s", 130.0);
  const double threshold = header.value("wp_hit_threshold", 0.10);
  const double e_use = header.value("E_use_Wh", 1920.0);

  std::map<std::string, std::size_t> by_label;
  std::map<std::uint64_t, double> tx_latency;
  bool ended = false;
  try {
    for (const auto& r : recs) {
      const std::string type = r.at("type").get<std::string>();
      if (type == "waypoint") {
        m.waypoint_errors.push_back(r.at("error_m").get<double>());
      } else if (type == "replan") {
        if (r.value("status", "") != "Disabled") ++m.replans;
      } else if (type == "sample_record") {
        SyringeResult s;
        s.label = r.at("label").get<std::string>();
        s.group = group_of(s.label);
        s.volume_mL = r.at("volume").get<double>();
        s.t_start = r.at("t_start").get<double>();
        s.t_end = r.at("t_end").get<double>();
        s.fill_time_s = s.t_end - s.t_start;
        s.lat = r.at("lat").get<double>();
        s.lon = r.at("lon").get<double>();
        by_label[s.label] = m.syringes.size();
        m.syringes.push_back(s);
      } else if (type == "retrieval") {
        const auto it = by_label.find(r.at("label").get<std::string>());
        if (it != by_label.end()) m.syringes[it->second].volume_mL = r.at("volume").get<double>();
      } else if (type == "tx") {
        if (r.at("link") != "downlink") continue;
        ++m.downlink.sent;
        if (r.at("outcome") == "dropped")
          ++m.downlink.dropped;
        else
          m.downlink.last_latency = r.at("latency").get<double>();
      } else if (type == "rx") {
        if (r.at("link") == "downlink") ++m.downlink.delivered;
      } else if (type == "depleted") {
        m.endurance.depleted_at_s = r.at("t").get<double>();
      } else if (type == "end") {
        ended = true;
        m.end_reason = r.at("reason").get<std::string>();
        m.mission_status = r.at("mission_status").get<std::string>();
        m.success = r.at("success").get<bool>();
        m.t_end = r.at("mission_end_s").get<double>();
        m.endurance.duration_s = r.at("mission_end_s").get<double>();
        m.endurance.energy_used_Wh = r.at("energy_used_Wh").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::LogCorrupt, std::string("metrics: ") + e.what());
  }
  if (!ended) throw Error(Errc::LogCorrupt, "missing end record");

  for (auto& s : m.syringes) s.loss_pct = loss_pct(s.volume_mL, capacity);
  if (!m.waypoint_errors.empty()) m.waypoints = mission::waypoint_metrics(m.waypoint_errors, threshold);
  if (!m.syringes.empty()) {
    std::vector<SyringeSample> samples;
    for (const auto& s : m.syringes) samples.push_back({s.label, s.group, s.volume_mL, s.loss_pct, s.fill_time_s, {}});
    m.table4 = aggregate_table4(samples, baseline);
  }
  auto& e = m.endurance;
  if (e.duration_s > 0 && e.energy_used_Wh > 0) {
    e.mean_power_W = e.energy_used_Wh * 3600.0 / e.duration_s;
    e.predicted_endurance_min = 60.0 * e_use / e.mean_power_W;
  }
  return m;
}

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["end_reason"] = m.end_reason;
  j["mission_status"] = m.mission_status;
  j["success"] = m.success;
  j["t_end"] = m.t_end;
  j["replans"] = m.replans;
  j["waypoint_errors"] = m.waypoint_errors;
  j["waypoints"] = m.waypoints ? mission::waypoint_metrics_to_json(*m.waypoints) : nlohmann::json();
  nlohmann::json syr = nlohmann::json::array();
  for (const auto& s : m.syringes)
    syr.push_back({{"label", s.label},
                   {"group", s.group},
                   {"fill_time_s", s.fill_time_s},
                   {"volume_mL", s.volume_mL},
                   {"loss_pct", s.loss_pct},
                   {"t_start", s.t_start},
                   {"t_end", s.t_end},
                   {"lat", s.lat},
                   {"lon", s.lon}});
  j["syringes"] = syr;
  j["table4"] = m.table4 ? table4_to_json(*m.table4) : nlohmann::json();
  j["endurance"] = {{"duration_s", m.endurance.duration_s},
                    {"energy_used_Wh", m.endurance.energy_used_Wh},
                    {"mean_power_W", m.endurance.mean_power_W},
                    {"predicted_endurance_min", m.endurance.predicted_endurance_min},
                    {"depleted_at_s", m.endurance.depleted_at_s ? nlohmann::json(*m.endurance.depleted_at_s)
                                                                : nlohmann::json()}};
  j["downlink"] = telemetry::link_stats_to_json(m.downlink);
  return j;
}

/// One row per syringe.
inline std::string syringes_csv(const MetricsReport& m) {
  std::ostringstream out;
  out.precision(10);
  out << "label,group,fill_time_s,volume_mL,loss_pct,t_start,t_end,lat,lon\n";
  for (const auto& s : m.syringes)
    out << s.label << ',' << s.group << ',' << s.fill_time_s << ',' << s.volume_mL << ',' << s.loss_pct << ','
        << s.t_start << ',' << s.t_end << ',' << s.lat << ',' << s.lon << '\n';
  return out.str();
}

/// Time series of the periodic state records.
inline std::string timeseries_csv(const std::vector<nlohmann::json>& recs) {
  std::ostringstream out;
  out.precision(10);
  out << "t,x,y,theta,est_x,est_y,est_theta,v_x,w_z,thrust_left,thrust_right,soc_Wh,V,I,mode\n";
  for (const auto& r : recs) {
    if (r.value("type", "") != "state") continue;
    const auto& tr = r.at("truth");
    const auto& es = r.at("est");
    out << r.at("t").get<double>() << ',' << tr.at("x").get<double>() << ',' << tr.at("y").get<double>() << ','
        << tr.at("theta").get<double>() << ',' << es.at("x").get<double>() << ',' << es.at("y").get<double>() << ','
        << es.at("theta").get<double>() << ',' << r.at("cmd").at("v_x").get<double>() << ','
        << r.at("cmd").at("w_z").get<double>() << ',' << r.at("thrust").at("left").get<double>() << ','
        << r.at("thrust").at("right").get<double>() << ',' << r.at("power").at("soc_Wh").get<double>() << ','
        << r.at("power").at("V").get<double>() << ',' << r.at("power").at("I").get<double>() << ','
        << r.at("mode").get<std::string>() << '\n';
  }
  return out.str();
}

}  // namespace hydrosim::sim
