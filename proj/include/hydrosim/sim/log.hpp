#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "hydrosim/core/error.hpp"

namespace hydrosim::sim {

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::Io, "sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

/// Line-delimited JSON records. Every record carries `type`, `t` and a
/// running `seq`; keys are emitted sorted, so equal inputs give equal bytes.
class SimLog {
 public:
  using Observer = std::function<void(const nlohmann::json&)>;

  void append(std::string type, double t, nlohmann::json rec = nlohmann::json::object()) {
    rec["type"] = std::move(type);
    rec["t"] = t;
    rec["seq"] = lines_.size();
    text_ += rec.dump();
    text_ += '\n';
    lines_.push_back(text_.size());
    if (observer_) observer_(rec);
  }

  void set_observer(Observer f) { observer_ = std::move(f); }

  std::size_t size() const { return lines_.size(); }
  const std::string& text() const { return text_; }
  std::string hash() const { return sha256_hex(text_); }

  void write(const std::filesystem::path& p) const {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + p.string());
    out << text_;
    if (!out) throw Error(Errc::Io, "write failed for " + p.string());
  }

 private:
  std::string text_;
  std::vector<std::size_t> lines_;  ///< end offsets
  Observer observer_;
};

/// Parses and checks a log: header first, end record last, seq counting
/// from zero, time never decreasing.
inline std::vector<nlohmann::json> parse_log(std::string_view text) {
  std::vector<nlohmann::json> recs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw Error(Errc::LogCorrupt, "last line is not terminated");
    try {
      recs.push_back(nlohmann::json::parse(text.substr(pos, nl - pos)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::LogCorrupt, "line " + std::to_string(recs.size() + 1) + ": " + e.what());
    }
    pos = nl + 1;
  }
  if (recs.empty()) throw Error(Errc::LogCorrupt, "empty log");
  double last_t = -1e300;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    if (!r.is_object() || !r.contains("type") || !r.contains("t") || !r.contains("seq"))
      throw Error(Errc::LogCorrupt, "record " + std::to_string(i) + " lacks type, t or seq");
    if (!r.at("seq").is_number_unsigned() || r.at("seq").get<std::size_t>() != i)
      throw Error(Errc::LogCorrupt, "seq gap at record " + std::to_string(i));
    const double t = r.at("t").get<double>();
    if (t < last_t) throw Error(Errc::LogCorrupt, "time goes backwards at record " + std::to_string(i));
    last_t = t;
  }
  if (recs.front().at("type") != "header") throw Error(Errc::LogCorrupt, "missing header");
  if (recs.back().at("type") != "end") throw Error(Errc::LogCorrupt, "missing end record, log truncated");
  return recs;
}

inline std::vector<nlohmann::json> read_log(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + p.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_log(text);
}

/// Re-emits records at `rate` times sim time; rate 0 emits everything at
/// once. The sink may return false to stop early.
inline std::size_t replay(const std::vector<nlohmann::json>& recs, double rate,
                          const std::function<bool(const nlohmann::json&)>& sink) {
  if (!(rate >= 0)) throw Error(Errc::ConfigInvalid, "replay rate must be >= 0");
  const auto wall0 = std::chrono::steady_clock::now();
  const double t0 = recs.empty() ? 0.0 : recs.front().at("t").get<double>();
  std::size_t n = 0;
  for (const auto& r : recs) {
    if (rate > 0) {
      const double due = (r.at("t").get<double>() - t0) / rate;
      std::this_thread::sleep_until(
          wall0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(due)));
    }
    ++n;
    if (!sink(r)) break;
  }
  return n;
}

inline std::size_t replay(std::string_view text, double rate, const std::function<bool(const nlohmann::json&)>& sink) {
  return replay(parse_log(text), rate, sink);
}

}  // namespace hydrosim::sim
