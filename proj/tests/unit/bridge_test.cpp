#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include <boost/beast/websocket.hpp>

#include "hydrosim/bridge/api.hpp"
#include "hydrosim/bridge/server.hpp"
#include "hydrosim/bridge/store.hpp"
#include "hydrosim/sim/table4.hpp"

// after Eigen: <resolv.h> defines a _res macro
#include <httplib.h>

using namespace hydrosim;
using namespace hydrosim::bridge;
using namespace std::chrono_literals;

namespace {

const std::filesystem::path kRoot = HYDROSIM_SOURCE_DIR;

SampleRecord rec(const std::string& label, double t_end, std::optional<double> pH = std::nullopt) {
  SampleRecord r;
  r.mission = "m1";
  r.label = label;
  r.volume = 40.0;
  r.t_start = t_end - 120.0;
  r.t_end = t_end;
  r.lat = -16.57405;
  r.lon = -68.16995;
  r.measured.pH = pH;
  return r;
}

std::vector<SampleRecord> table4_records() {
  std::ifstream in(kRoot / "data" / "table4.json");
  const auto d = sim::field_dataset_from_json(nlohmann::json::parse(in));
  std::vector<SampleRecord> out;
  double t = 0;
  for (const auto& s : d.samples) {
    SampleRecord r;
    r.mission = "field";
    r.label = s.label;
    r.volume = s.volume_mL;
    r.t_start = t;
    r.t_end = t += s.fill_time_s;
    r.lat = -16.5740 + 1e-5 * static_cast<double>(out.size());
    r.lon = -68.1700;
    r.measured = s.quality;
    out.push_back(r);
  }
  return out;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("hydrosim_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  return p;
}

nlohmann::json scenario_at(double x, double drop_prob = 0.2) {
  auto j = nlohmann::json::parse(std::ifstream(kRoot / "scenarios" / "single_waypoint.json"));
  j["map"]["empty"]["width_m"] = 200;
  j["start"] = {{"x", x}, {"y", 0}, {"theta", 0}};
  j["link"] = {{"drop_prob_beyond", drop_prob}};
  return j;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Io;  // sentinel: no error thrown
}

}  // namespace

TEST(Store, RecordAndList) {
  SampleStore s;
  s.record_sample(rec("A1_S1", 200));
  s.record_sample(rec("A1_S2", 300));
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.list_samples("m1").size(), 2u);
  EXPECT_TRUE(s.list_samples("other").empty());
  EXPECT_EQ(code_of([&] { s.record_sample(rec("A1_S1", 500)); }), Errc::DuplicateLabel);
}

TEST(Store, RecordValidation) {
  nlohmann::json j = record_to_json(rec("A1_S1", 10));
  EXPECT_EQ(record_from_json(j), rec("A1_S1", 10));
  j["volume"] = 46;
  EXPECT_EQ(code_of([&] { record_from_json(j); }), Errc::OutOfRange);
  j["volume"] = "lots";
  EXPECT_EQ(code_of([&] { record_from_json(j); }), Errc::BadCommand);
  j = record_to_json(rec(std::string(65, 'x'), 10));
  EXPECT_EQ(code_of([&] { record_from_json(j); }), Errc::OutOfRange);
}

TEST(Store, Table4IngestGlobalPh) {
  SampleStore s;
  for (const auto& r : table4_records()) s.record_sample(r);
  EXPECT_EQ(s.size(), 24u);
  const auto with_ph = s.list_samples(std::nullopt, Parameter::PH);
  double sum = 0;
  for (const auto& r : with_ph) sum += *r.measured.pH;
  EXPECT_EQ(std::round(100.0 * sum / static_cast<double>(with_ph.size())) / 100.0, 7.62);
}

TEST(Store, HeatmapEmptyAndMean) {
  SampleStore s;
  EXPECT_TRUE(s.heatmap("pH", 0.001).empty());
  s.record_sample(rec("A1_S1", 100, 7.4));
  s.record_sample(rec("A1_S2", 200, 7.6));
  const auto h = s.heatmap("pH", 0.001);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_NEAR(h[0].mean, 7.5, 1e-12);
  EXPECT_EQ(h[0].count, 2u);
  EXPECT_LE(h[0].lat_min, -16.57405);
  EXPECT_GT(h[0].lat_max, -16.57405);
  EXPECT_EQ(code_of([&] { s.heatmap("salinity", 0.001); }), Errc::UnknownParameter);
  EXPECT_EQ(code_of([&] { s.heatmap("pH", 0); }), Errc::OutOfRange);
}

TEST(Store, Table4TdsCellsStayInRange) {
  SampleStore s;
  for (const auto& r : table4_records()) s.record_sample(r);
  const auto h = s.heatmap("TDS", 1e-5);
  ASSERT_FALSE(h.empty());
  for (const auto& c : h) {
    EXPECT_GE(c.mean, 0.20);
    EXPECT_LE(c.mean, 0.22);
  }
}

TEST(Sync, ExportImportRoundTrip) {
  SampleStore a;
  for (const auto& r : table4_records()) a.record_sample(r);
  SampleStore b;
  const auto rep = b.sync_import(a.sync_export());
  EXPECT_EQ(rep.added, 24u);
  EXPECT_EQ(b.list_samples(), a.list_samples());
  EXPECT_EQ(b.sync_export(), a.sync_export());
}

TEST(Sync, ImportIsIdempotent) {
  SampleStore a;
  a.record_sample(rec("A1_S1", 100, 7.4));
  const auto archive = a.sync_export();
  SampleStore b;
  b.sync_import(archive);
  const auto once = b.list_samples();
  const auto rep = b.sync_import(archive);
  EXPECT_EQ(rep.added, 0u);
  EXPECT_EQ(rep.unchanged, 1u);
  EXPECT_EQ(b.list_samples(), once);
}

TEST(Sync, ConflictKeepsLaterRecord) {
  SampleStore a, b;
  a.record_sample(rec("A1_S1", 100, 7.4));
  b.record_sample(rec("A1_S1", 250, 7.9));
  const auto rep = a.sync_import(b.sync_export());
  EXPECT_EQ(rep.replaced, 1u);
  EXPECT_EQ(a.list_samples()[0].t_end, 250.0);
  const auto back = b.sync_import(a.sync_export());
  EXPECT_EQ(back.unchanged, 1u);
  EXPECT_EQ(*b.list_samples()[0].measured.pH, 7.9);
}

TEST(Sync, CorruptArchiveRejected) {
  SampleStore a;
  a.record_sample(rec("A1_S1", 100, 7.4));
  auto archive = a.sync_export();
  archive["records"][0]["volume"] = 12.0;
  SampleStore b;
  EXPECT_EQ(code_of([&] { b.sync_import(archive); }), Errc::ArchiveCorrupt);
  EXPECT_EQ(code_of([&] { b.sync_import({{"format", "zip"}}); }), Errc::ArchiveCorrupt);
  EXPECT_EQ(b.size(), 0u);
}

TEST(Sync, JournalSurvivesReopen) {
  const auto dir = temp_dir("journal");
  {
    SampleStore s(dir);
    s.record_sample(rec("A1_S1", 100, 7.4));
    SampleStore other;
    other.record_sample(rec("A1_S1", 300, 7.7));
    other.record_sample(rec("A1_S2", 300));
    s.sync_import(other.sync_export());
  }
  SampleStore reopened(dir);
  const auto all = reopened.list_samples();
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(*all[0].measured.pH, 7.7);
  std::filesystem::remove_all(dir);
}

TEST(DataDir, FlagThenEnvThenDefault) {
  EXPECT_EQ(resolve_data_dir(std::string("/x")), "/x");
  ::setenv("HYDROSIM_DATA", "/from-env", 1);
  EXPECT_EQ(resolve_data_dir(std::nullopt), "/from-env");
  ::unsetenv("HYDROSIM_DATA");
  EXPECT_EQ(resolve_data_dir(std::nullopt), "hydrosim-data");
}

TEST(Api, TargetParsing) {
  const auto t = parse_target("/api/samples?mission=a%20b&param=pH");
  EXPECT_EQ(t.segments, (std::vector<std::string>{"api", "samples"}));
  EXPECT_EQ(t.query.at("mission"), "a b");
  EXPECT_EQ(t.query.at("param"), "pH");
}

TEST(Api, SessionLifecycle) {
  SampleStore store;
  SessionManager mgr(store, kRoot / "scenarios");
  BridgeApi api(mgr, store);
  const auto r = api.handle({"POST", "/api/sessions", R"({"scenario":"single_waypoint.json","speed":0})"});
  ASSERT_EQ(r.status, 201) << r.body.dump();
  const std::string id = r.body["id"];
  ASSERT_TRUE(mgr.get(id)->wait_finished(60s));
  const auto m = api.handle({"GET", "/api/sessions/" + id + "/metrics", ""});
  EXPECT_EQ(m.status, 200);
  EXPECT_EQ(m.body["final"], true);
  EXPECT_EQ(m.body["end_reason"], "mission_complete");
  EXPECT_EQ(api.handle({"DELETE", "/api/sessions/" + id, ""}).status, 200);
  EXPECT_EQ(api.handle({"DELETE", "/api/sessions/" + id, ""}).status, 200);
  EXPECT_EQ(api.handle({"GET", "/api/sessions/nope", ""}).status, 404);
  EXPECT_EQ(api.handle({"POST", "/api/sessions/" + id + "/command", R"({"type":"estop","engage":true})"}).status, 409);
}

TEST(Api, SecondRunningSessionConflicts) {
  SampleStore store;
  SessionManager mgr(store, kRoot / "scenarios");
  BridgeApi api(mgr, store);
  const auto a = api.handle({"POST", "/api/sessions", R"({"scenario":"single_waypoint.json"})"});
  ASSERT_EQ(a.status, 201);
  const auto b = api.handle({"POST", "/api/sessions", R"({"scenario":"single_waypoint.json"})"});
  EXPECT_EQ(b.status, 409);
  EXPECT_EQ(b.body["error"], "Conflict");
  EXPECT_EQ(api.handle({"POST", "/api/sessions", "{not json"}).status, 400);
}

TEST(Api, CommandBeyondRangeIsDropped) {
  SampleStore store;
  SessionManager mgr(store, kRoot / "scenarios");
  BridgeApi api(mgr, store);
  nlohmann::json body{{"scenario", scenario_at(120.0, 1.0)}};
  const auto s = api.handle({"POST", "/api/sessions", body.dump()});
  ASSERT_EQ(s.status, 201) << s.body.dump();
  const auto r = api.handle({"POST", "/api/sessions/s1/command", R"({"type":"estop","engage":true})"});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["outcome"], "Dropped");
  EXPECT_GT(r.body["distance"].get<double>(), 66.8);
}

TEST(Api, EstopInRangeIsDelivered) {
  SampleStore store;
  SessionManager mgr(store, kRoot / "scenarios");
  BridgeApi api(mgr, store);
  nlohmann::json body{{"scenario", scenario_at(10.0)}};
  ASSERT_EQ(api.handle({"POST", "/api/sessions", body.dump()}).status, 201);
  const auto r = api.handle({"POST", "/api/sessions/s1/command", R"({"type":"estop","engage":true})"});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["outcome"], "Delivered");
  EXPECT_NEAR(r.body["latency"].get<double>(), 0.1, 1e-12);
  const double due = r.body["t"].get<double>() + r.body["latency"].get<double>();
  auto session = mgr.get("s1");
  for (int i = 0; i < 100 && session->inspect([](const sim::Simulator& s) { return s.time(); }) < due + 0.1; ++i)
    std::this_thread::sleep_for(20ms);
  session->inspect([&](const sim::Simulator& s) {
    EXPECT_EQ(s.executor().mode(), mission::Mode::EStopped);
    EXPECT_EQ(s.last_command(), (vehicle::VelocityCommand{0, 0}));
    return 0;
  });

  auto bad = api.handle({"POST", "/api/sessions/s1/command", R"({"type":"command","mode":"sideways"})"});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body["error"], "BadCommand");
  bad = api.handle({"POST", "/api/sessions/s1/command", R"({"type":"telemetry"})"});
  EXPECT_EQ(bad.body["error"], "BadCommand");
  bad = api.handle({"POST", "/api/sessions/s1/command", "]["});
  EXPECT_EQ(bad.body["error"], "BadCommand");
}

TEST(Api, SessionSampleRecordsReachStore) {
  SampleStore store;
  SessionManager mgr(store, kRoot / "scenarios");
  BridgeApi api(mgr, store);
  ASSERT_EQ(api.handle({"POST", "/api/sessions", R"({"scenario":"eight_waypoint.json","speed":0})"}).status, 201);
  ASSERT_TRUE(mgr.get("s1")->wait_finished(300s));
  const auto list = api.handle({"GET", "/api/samples?mission=s1", ""});
  EXPECT_EQ(list.status, 200);
  EXPECT_EQ(list.body.size(), 24u);
}

TEST(Api, SamplesAndHeatmapRoutes) {
  SampleStore store;
  SessionManager mgr(store, kRoot / "scenarios");
  BridgeApi api(mgr, store);
  EXPECT_EQ(api.handle({"POST", "/api/samples", record_to_json(rec("A1_S1", 100, 7.4)).dump()}).status, 201);
  EXPECT_EQ(api.handle({"POST", "/api/samples", record_to_json(rec("A1_S1", 100, 7.4)).dump()}).status, 409);
  EXPECT_EQ(api.handle({"POST", "/api/samples", record_to_json(rec("A1_S2", 100, 7.6)).dump()}).status, 201);
  const auto h = api.handle({"GET", "/api/heatmap?param=pH&bin=0.001", ""});
  ASSERT_EQ(h.status, 200);
  ASSERT_EQ(h.body.size(), 1u);
  EXPECT_NEAR(h.body[0]["mean"].get<double>(), 7.5, 1e-12);
  EXPECT_EQ(api.handle({"GET", "/api/heatmap?param=salt", ""}).body["error"], "UnknownParameter");
  EXPECT_EQ(api.handle({"GET", "/api/heatmap", ""}).body["error"], "UnknownParameter");
  const auto ex = api.handle({"GET", "/api/sync/export", ""});
  SampleStore other;
  SessionManager mgr2(other);
  BridgeApi api2(mgr2, other);
  const auto im = api2.handle({"POST", "/api/sync/import", ex.body.dump()});
  EXPECT_EQ(im.status, 200);
  EXPECT_EQ(im.body["added"], 2);
  EXPECT_EQ(api2.handle({"POST", "/api/sync/import", "{}"}).body["error"], "ArchiveCorrupt");
  EXPECT_EQ(api.handle({"GET", "/api/nothing", ""}).status, 404);
}

TEST(Server, HttpRoundTrip) {
  SampleStore store;
  SessionManager mgr(store, kRoot / "scenarios");
  BridgeApi api(mgr, store);
  Server server(api, "127.0.0.1", 0, 2);
  server.start();
  httplib::Client cli("127.0.0.1", server.port());
  auto res = cli.Post("/api/samples", record_to_json(rec("A1_S1", 100, 7.4)).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
  res = cli.Get("/api/samples");
  ASSERT_TRUE(res);
  EXPECT_EQ(nlohmann::json::parse(res->body).size(), 1u);
  res = cli.Get("/api/heatmap?param=bogus");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"], "UnknownParameter");
  server.stop();
}

TEST(Server, WebSocketPushesTelemetryAndTakesCommands) {
  namespace ws = boost::beast::websocket;
  SampleStore store;
  SessionManager mgr(store, kRoot / "scenarios");
  BridgeApi api(mgr, store);
  Server server(api, "127.0.0.1", 0, 2);
  server.start();
  ASSERT_EQ(api.handle({"POST", "/api/sessions", R"({"scenario":"single_waypoint.json","speed":10})"}).status, 201);

  net::io_context ioc;
  ws::stream<beast::tcp_stream> client(ioc);
  client.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), server.port()));
  client.handshake("127.0.0.1", "/ws/telemetry?session=s1");

  nlohmann::json telemetry, result;
  bool sent = false;
  beast::flat_buffer buf;
  std::function<void()> read_next = [&] {
    client.async_read(buf, [&](beast::error_code ec, std::size_t) {
      if (ec) return;
      const auto j = nlohmann::json::parse(beast::buffers_to_string(buf.data()));
      buf.consume(buf.size());
      if (j["type"] == "telemetry" && telemetry.is_null()) {
        telemetry = j;
        if (!sent) {
          sent = true;
          client.write(net::buffer(std::string(R"({"type":"estop","engage":true})")));
        }
      }
      if (j["type"] == "command_result") result = j;
      if (!telemetry.is_null() && !result.is_null()) return;
      read_next();
    });
  };
  read_next();
  ioc.run_for(15s);
  ASSERT_FALSE(telemetry.is_null());
  EXPECT_EQ(telemetry["session"], "s1");
  EXPECT_TRUE(telemetry.contains("soc"));
  ASSERT_FALSE(result.is_null());
  EXPECT_EQ(result["outcome"], "Delivered");
  beast::error_code ec;
  client.next_layer().socket().close(ec);
  mgr.stop("s1");
  server.stop();
}
