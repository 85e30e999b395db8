#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/bridge/session.hpp"
#include "hydrosim/bridge/store.hpp"
#include "hydrosim/core/error.hpp"

namespace hydrosim::bridge {

struct ApiRequest {
  std::string method;  ///< upper case
  std::string target;  ///< path with optional query
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

inline int http_status(Errc c) {
  switch (c) {
    case Errc::NotFound: return 404;
    case Errc::Conflict:
    case Errc::DuplicateLabel:
    case Errc::SessionNotRunning: return 409;
    case Errc::Io: return 500;
    default: return 400;
  }
}

inline ApiResponse error_response(const Error& e) {
  return {http_status(e.code()), {{"error", std::string(errc_name(e.code()))}, {"message", e.what()}}};
}

inline std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out.push_back(' ');
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

struct Target {
  std::vector<std::string> segments;
  std::map<std::string, std::string> query;
};

inline Target parse_target(std::string_view target) {
  Target t;
  const auto q = target.find('?');
  std::string_view path = target.substr(0, q);
  while (!path.empty()) {
    const auto slash = path.find('/');
    const auto seg = path.substr(0, slash);
    if (!seg.empty()) t.segments.push_back(percent_decode(seg));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  if (q != std::string_view::npos) {
    std::string_view qs = target.substr(q + 1);
    while (!qs.empty()) {
      const auto amp = qs.find('&');
      const auto kv = qs.substr(0, amp);
      const auto eq = kv.find('=');
      if (!kv.empty())
        t.query[percent_decode(kv.substr(0, eq))] = eq == std::string_view::npos ? "" : percent_decode(kv.substr(eq + 1));
      if (amp == std::string_view::npos) break;
      qs.remove_prefix(amp + 1);
    }
  }
  return t;
}

/// Routes the REST surface onto the session manager and sample store.
class BridgeApi {
 public:
  BridgeApi(SessionManager& sessions, SampleStore& store) : sessions_(sessions), store_(store) {}

  ApiResponse handle(const ApiRequest& req) {
    try {
      return route(req);
    } catch (const Error& e) {
      return error_response(e);
    }
  }

  SessionManager& sessions() { return sessions_; }
  SampleStore& store() { return store_; }

 private:
  static nlohmann::json parse_body(const std::string& body, Errc code) {
    try {
      return nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(code, std::string("body: ") + e.what());
    }
  }

  ApiResponse route(const ApiRequest& req) {
    const Target t = parse_target(req.target);
    const auto& s = t.segments;
    const auto& m = req.method;
    if (s.size() < 2 || s[0] != "api") throw Error(Errc::NotFound, "no route " + req.target);

    if (s[1] == "sessions") {
      if (s.size() == 2 && m == "POST") {
        const auto session = sessions_.start(parse_body(req.body, Errc::ConfigInvalid));
        return {201, session->info()};
      }
      if (s.size() == 2 && m == "GET") return {200, sessions_.list()};
      if (s.size() == 3 && m == "DELETE") {
        sessions_.stop(s[2]);
        return {200, sessions_.get(s[2])->info()};
      }
      if (s.size() == 3 && m == "GET") return {200, sessions_.get(s[2])->info()};
      if (s.size() == 4 && s[3] == "metrics" && m == "GET") return {200, sessions_.get(s[2])->metrics()};
      if (s.size() == 4 && s[3] == "command" && m == "POST") {
        auto session = sessions_.get(s[2]);
        return {200, session->ingest_command(parse_body(req.body, Errc::BadCommand))};
      }
    }

    if (s[1] == "samples" && s.size() == 2) {
      if (m == "POST") {
        const auto body = parse_body(req.body, Errc::BadCommand);
        const auto rec = record_from_json(body);
        store_.record_sample(rec);
        return {201, record_to_json(rec)};
      }
      if (m == "GET") {
        std::optional<std::string> mission;
        std::optional<Parameter> param;
        if (const auto it = t.query.find("mission"); it != t.query.end()) mission = it->second;
        if (const auto it = t.query.find("param"); it != t.query.end()) param = parameter_from_name(it->second);
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : store_.list_samples(mission, param)) out.push_back(record_to_json(r));
        return {200, out};
      }
    }

    if (s[1] == "heatmap" && s.size() == 2 && m == "GET") {
      const auto p = t.query.find("param");
      if (p == t.query.end()) throw Error(Errc::UnknownParameter, "param is required");
      double bin = 0.001;
      if (const auto it = t.query.find("bin"); it != t.query.end()) {
        try {
          bin = std::stod(it->second);
        } catch (const std::exception&) {
          throw Error(Errc::OutOfRange, "bin must be a number");
        }
      }
      nlohmann::json out = nlohmann::json::array();
      for (const auto& c : store_.heatmap(p->second, bin)) out.push_back(heatmap_cell_to_json(c));
      return {200, out};
    }

    if (s[1] == "sync" && s.size() == 3) {
      if (s[2] == "export" && m == "GET") return {200, store_.sync_export()};
      if (s[2] == "import" && m == "POST")
        return {200, merge_report_to_json(store_.sync_import(parse_body(req.body, Errc::ArchiveCorrupt)))};
    }
    throw Error(Errc::NotFound, "no route " + m + " " + req.target);
  }

  SessionManager& sessions_;
  SampleStore& store_;
};

}  // namespace hydrosim::bridge
