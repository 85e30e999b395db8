#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/telemetry/frame.hpp"

namespace hydrosim::telemetry {

/// Mission state as carried on the wire; codes are defined by the mission
/// executor.
struct MissionStateWire {
  std::uint8_t mode = 0;
  std::uint8_t status = 0;
  std::uint16_t waypoint = 0;

  friend bool operator==(const MissionStateWire&, const MissionStateWire&) = default;
};

struct TelemetryMsg {
  float x = 0, y = 0, theta = 0;
  float V = 0, I = 0, soc = 0;
  float t = 0;  ///< sim time, s
  MissionStateWire mission;
  std::array<std::uint8_t, 9> motor_status{};

  friend bool operator==(const TelemetryMsg&, const TelemetryMsg&) = default;
};

enum class DriveMode : std::uint8_t { Auto = 0, Manual = 1 };

struct CommandMsg {
  DriveMode mode = DriveMode::Auto;
  float v_x = 0;
  float w_z = 0;

  friend bool operator==(const CommandMsg&, const CommandMsg&) = default;
};

struct MotorCommandMsg {
  std::array<std::uint8_t, 3> bytes{};

  friend bool operator==(const MotorCommandMsg&, const MotorCommandMsg&) = default;
};

struct EStopMsg {
  bool engage = true;

  friend bool operator==(const EStopMsg&, const EStopMsg&) = default;
};

struct AckMsg {
  std::uint16_t acked_seq = 0;

  friend bool operator==(const AckMsg&, const AckMsg&) = default;
};

struct SampleRecordMsg {
  std::string label;
  float volume = 0;
  float t_start = 0;
  float t_end = 0;
  double lat = 0;
  double lon = 0;

  friend bool operator==(const SampleRecordMsg&, const SampleRecordMsg&) = default;
};

using Message = std::variant<TelemetryMsg, CommandMsg, MotorCommandMsg, EStopMsg, AckMsg, SampleRecordMsg>;

inline MessageType message_type(const Message& m) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TelemetryMsg>) return MessageType::Telemetry;
        else if constexpr (std::is_same_v<T, CommandMsg>) return MessageType::Command;
        else if constexpr (std::is_same_v<T, MotorCommandMsg>) return MessageType::MotorCommand;
        else if constexpr (std::is_same_v<T, EStopMsg>) return MessageType::EStop;
        else if constexpr (std::is_same_v<T, AckMsg>) return MessageType::Ack;
        else return MessageType::SampleRecord;
      },
      m);
}

namespace detail {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v & 0xFF));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    return static_cast<std::uint16_t>(lo | (u8() << 8));
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void done() const {
    if (pos_ != in_.size()) throw Error(Errc::BadLength, "trailing payload bytes");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error(Errc::BadLength, "payload too short");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Little-endian payload layouts, floats as IEEE-754 binary32:
///   Telemetry    x y theta V I soc t (f32 x7), mode u8, status u8,
///                waypoint u16, motor_status[9]               41 bytes
///   Command      mode u8, v_x f32, w_z f32                    9 bytes
///   MotorCommand module u8, motor u8, action u8               3 bytes
///   EStop        engage u8                                    1 byte
///   Ack          acked_seq u16                                2 bytes
///   SampleRecord label_len u8, label, volume t_start t_end (f32 x3),
///                lat lon (f64 x2)
inline std::vector<std::uint8_t> encode_payload(const Message& m) {
  detail::Writer w;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TelemetryMsg>) {
          for (float f : {v.x, v.y, v.theta, v.V, v.I, v.soc, v.t}) w.f32(f);
          w.u8(v.mission.mode);
          w.u8(v.mission.status);
          w.u16(v.mission.waypoint);
          w.bytes(v.motor_status);
        } else if constexpr (std::is_same_v<T, CommandMsg>) {
          w.u8(static_cast<std::uint8_t>(v.mode));
          w.f32(v.v_x);
          w.f32(v.w_z);
        } else if constexpr (std::is_same_v<T, MotorCommandMsg>) {
          w.bytes(v.bytes);
        } else if constexpr (std::is_same_v<T, EStopMsg>) {
          w.u8(v.engage ? 1 : 0);
        } else if constexpr (std::is_same_v<T, AckMsg>) {
          w.u16(v.acked_seq);
        } else {
          if (v.label.size() > 64) throw Error(Errc::PayloadTooLarge, "sample label longer than 64 bytes");
          w.u8(static_cast<std::uint8_t>(v.label.size()));
          w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(v.label.data()), v.label.size()));
          w.f32(v.volume);
          w.f32(v.t_start);
          w.f32(v.t_end);
          w.f64(v.lat);
          w.f64(v.lon);
        }
      },
      m);
  return w.take();
}

inline Message decode_payload(MessageType type, std::span<const std::uint8_t> payload) {
  detail::Reader r(payload);
  Message out;
  switch (type) {
    case MessageType::Telemetry: {
      TelemetryMsg v;
      v.x = r.f32();
      v.y = r.f32();
      v.theta = r.f32();
      v.V = r.f32();
      v.I = r.f32();
      v.soc = r.f32();
      v.t = r.f32();
      v.mission.mode = r.u8();
      v.mission.status = r.u8();
      v.mission.waypoint = r.u16();
      for (auto& b : v.motor_status) b = r.u8();
      out = v;
      break;
    }
    case MessageType::Command: {
      CommandMsg v;
      const std::uint8_t mode = r.u8();
      if (mode > 1) throw Error(Errc::BadCommand, "drive mode");
      v.mode = static_cast<DriveMode>(mode);
      v.v_x = r.f32();
      v.w_z = r.f32();
      out = v;
      break;
    }
    case MessageType::MotorCommand: {
      MotorCommandMsg v;
      for (auto& b : v.bytes) b = r.u8();
      out = v;
      break;
    }
    case MessageType::EStop: {
      const std::uint8_t e = r.u8();
      if (e > 1) throw Error(Errc::BadCommand, "estop flag");
      out = EStopMsg{e == 1};
      break;
    }
    case MessageType::Ack: out = AckMsg{r.u16()}; break;
    case MessageType::SampleRecord: {
      SampleRecordMsg v;
      const std::size_t n = r.u8();
      for (std::size_t i = 0; i < n; ++i) v.label.push_back(static_cast<char>(r.u8()));
      v.volume = r.f32();
      v.t_start = r.f32();
      v.t_end = r.f32();
      v.lat = r.f64();
      v.lon = r.f64();
      out = v;
      break;
    }
    default: throw Error(Errc::UnknownType, "message type");
  }
  r.done();
  return out;
}

inline std::vector<std::uint8_t> encode_message(const Message& m, std::uint16_t seq) {
  return encode_frame({message_type(m), seq, encode_payload(m)});
}

struct Decoded {
  std::uint16_t seq = 0;
  Message message;
};

inline Decoded decode_message(std::span<const std::uint8_t> bytes) {
  const Frame f = decode_frame(bytes);
  return {f.seq, decode_payload(f.type, f.payload)};
}

// JSON mirror for the bridge stream; field names match the structs.

inline const char* type_name(MessageType t) {
  switch (t) {
    case MessageType::Telemetry: return "telemetry";
    case MessageType::Command: return "command";
    case MessageType::MotorCommand: return "motor_command";
    case MessageType::EStop: return "estop";
    case MessageType::Ack: return "ack";
    case MessageType::SampleRecord: return "sample_record";
  }
  return "?";
}

inline nlohmann::json message_to_json(const Message& m) {
  nlohmann::json j;
  j["type"] = type_name(message_type(m));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TelemetryMsg>) {
          j["x"] = v.x;
          j["y"] = v.y;
          j["theta"] = v.theta;
          j["V"] = v.V;
          j["I"] = v.I;
          j["soc"] = v.soc;
          j["t"] = v.t;
          j["mission_state"] = {{"mode", v.mission.mode}, {"status", v.mission.status}, {"waypoint", v.mission.waypoint}};
          j["motor_status"] = v.motor_status;
        } else if constexpr (std::is_same_v<T, CommandMsg>) {
          j["mode"] = v.mode == DriveMode::Manual ? "manual" : "auto";
          j["v_x"] = v.v_x;
          j["w_z"] = v.w_z;
        } else if constexpr (std::is_same_v<T, MotorCommandMsg>) {
          j["module"] = v.bytes[0];
          j["motor"] = v.bytes[1];
          j["action"] = v.bytes[2];
        } else if constexpr (std::is_same_v<T, EStopMsg>) {
          j["engage"] = v.engage;
        } else if constexpr (std::is_same_v<T, AckMsg>) {
          j["acked_seq"] = v.acked_seq;
        } else {
          j["label"] = v.label;
          j["volume"] = v.volume;
          j["t_start"] = v.t_start;
          j["t_end"] = v.t_end;
          j["lat"] = v.lat;
          j["lon"] = v.lon;
        }
      },
      m);
  return j;
}

inline Message message_from_json(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "telemetry") {
      TelemetryMsg v;
      v.x = j.at("x").get<float>();
      v.y = j.at("y").get<float>();
      v.theta = j.at("theta").get<float>();
      v.V = j.at("V").get<float>();
      v.I = j.at("I").get<float>();
      v.soc = j.at("soc").get<float>();
      v.t = j.at("t").get<float>();
      const auto& ms = j.at("mission_state");
      v.mission = {ms.at("mode").get<std::uint8_t>(), ms.at("status").get<std::uint8_t>(),
                   ms.at("waypoint").get<std::uint16_t>()};
      v.motor_status = j.at("motor_status").get<std::array<std::uint8_t, 9>>();
      return v;
    }
    if (type == "command") {
      const std::string mode = j.at("mode").get<std::string>();
      if (mode != "auto" && mode != "manual") throw Error(Errc::BadCommand, "mode must be auto or manual");
      return CommandMsg{mode == "manual" ? DriveMode::Manual : DriveMode::Auto, j.value("v_x", 0.0f),
                        j.value("w_z", 0.0f)};
    }
    if (type == "motor_command")
      return MotorCommandMsg{{j.at("module").get<std::uint8_t>(), j.at("motor").get<std::uint8_t>(),
                              j.at("action").get<std::uint8_t>()}};
    if (type == "estop") return EStopMsg{j.at("engage").get<bool>()};
    if (type == "ack") return AckMsg{j.at("acked_seq").get<std::uint16_t>()};
    if (type == "sample_record")
      return SampleRecordMsg{j.at("label").get<std::string>(), j.at("volume").get<float>(),
                             j.at("t_start").get<float>(),   j.at("t_end").get<float>(),
                             j.at("lat").get<double>(),      j.at("lon").get<double>()};
    throw Error(Errc::UnknownType, "json message type " + type);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadCommand, e.what());
  }
}

}  // namespace hydrosim::telemetry
