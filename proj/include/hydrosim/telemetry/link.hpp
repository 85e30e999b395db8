#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/rng.hpp"

namespace hydrosim::telemetry {

struct LinkModel {
  double reliable_range = 66.8;  ///< m, inclusive
  double base_latency = 0.1;     ///< s
  double latency_slope = 0.01;   ///< s per m beyond reliable range
  double drop_prob_beyond = 0.2;

  void validate() const {
    if (!(reliable_range > 0)) throw Error(Errc::ConfigInvalid, "link: reliable_range must be > 0");
    if (!(base_latency >= 0) || !(latency_slope >= 0)) throw Error(Errc::ConfigInvalid, "link: latencies must be >= 0");
    if (!(drop_prob_beyond >= 0 && drop_prob_beyond <= 1))
      throw Error(Errc::ConfigInvalid, "link: drop_prob_beyond in [0, 1]");
  }
};

struct Delivered {
  double latency = 0.0;
};
struct Dropped {};
using LinkOutcome = std::variant<Delivered, Dropped>;

inline bool delivered(const LinkOutcome& o) { return std::holds_alternative<Delivered>(o); }

/// Deterministic latency for a frame that gets through.
inline double link_latency(double distance, const LinkModel& m) {
  const double excess = std::max(0.0, distance - m.reliable_range);
  return m.base_latency + m.latency_slope * excess;
}

/// Within range nothing is drawn, so the stream is only consumed beyond it.
template <class Rng>
LinkOutcome link_transmit(double distance, const LinkModel& m, Rng& rng) {
  if (!(distance >= 0)) throw Error(Errc::NonFiniteInput, "link distance must be >= 0");
  if (distance <= m.reliable_range) return Delivered{m.base_latency};
  if (uniform01(rng) < m.drop_prob_beyond) return Dropped{};
  return Delivered{link_latency(distance, m)};
}

inline std::uint16_t next_seq(std::uint16_t s) { return static_cast<std::uint16_t>(s + 1); }

class SeqCounter {
 public:
  std::uint16_t next() {
    const std::uint16_t s = value_;
    value_ = next_seq(value_);
    return s;
  }
  std::uint16_t peek() const { return value_; }

 private:
  std::uint16_t value_ = 0;
};

/// Remembers the last `window` sequence numbers seen; a repeat inside the
/// window is a duplicate. Sized well below 65536 so wrapped seqs are fresh.
class DuplicateFilter {
 public:
  explicit DuplicateFilter(std::size_t window = 1024) : window_(window) {}

  bool accept(std::uint16_t seq) {
    if (seen_.count(seq)) return false;
    seen_.insert(seq);
    order_.push_back(seq);
    if (order_.size() > window_) {
      seen_.erase(order_.front());
      order_.pop_front();
    }
    return true;
  }

 private:
  std::size_t window_;
  std::deque<std::uint16_t> order_;
  std::unordered_set<std::uint16_t> seen_;
};

struct LinkStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t duplicates = 0;
  double last_latency = 0.0;
};

inline nlohmann::json link_stats_to_json(const LinkStats& s) {
  return {{"sent", s.sent},
          {"delivered", s.delivered},
          {"dropped", s.dropped},
          {"duplicates", s.duplicates},
          {"last_latency", s.last_latency}};
}

/// One direction of the link. Frames leave in send order; a frame never
/// overtakes an earlier one, so delivery times are monotone.
class LinkChannel {
 public:
  struct InFlight {
    double deliver_at;
    std::uint16_t seq;
    std::vector<std::uint8_t> bytes;
  };

  LinkChannel(LinkModel model, CounterRng rng) : model_(model), rng_(rng) { model_.validate(); }

  LinkOutcome send(std::vector<std::uint8_t> bytes, std::uint16_t seq, double now, double distance) {
    ++stats_.sent;
    const LinkOutcome o = link_transmit(distance, model_, rng_);
    if (const auto* d = std::get_if<Delivered>(&o)) {
      const double at = std::max(last_delivery_, now + d->latency);
      last_delivery_ = at;
      queue_.push_back({at, seq, std::move(bytes)});
      stats_.last_latency = d->latency;
    } else {
      ++stats_.dropped;
    }
    return o;
  }

  /// Frames due by `now`, duplicates removed.
  std::vector<std::vector<std::uint8_t>> receive(double now) {
    std::vector<std::vector<std::uint8_t>> out;
    while (!queue_.empty() && queue_.front().deliver_at <= now) {
      InFlight f = std::move(queue_.front());
      queue_.pop_front();
      if (filter_.accept(f.seq)) {
        ++stats_.delivered;
        out.push_back(std::move(f.bytes));
      } else {
        ++stats_.duplicates;
      }
    }
    return out;
  }

  std::size_t in_flight() const { return queue_.size(); }
  const LinkStats& stats() const { return stats_; }
  const LinkModel& model() const { return model_; }

 private:
  LinkModel model_;
  CounterRng rng_;
  std::deque<InFlight> queue_;
  double last_delivery_ = -1e300;
  DuplicateFilter filter_;
  LinkStats stats_;
};

inline nlohmann::json link_model_to_json(const LinkModel& m) {
  return {{"reliable_range", m.reliable_range},
          {"base_latency", m.base_latency},
          {"latency_slope", m.latency_slope},
          {"drop_prob_beyond", m.drop_prob_beyond}};
}

inline LinkModel link_model_from_json(const nlohmann::json& j, LinkModel m = {}) {
  try {
    m.reliable_range = j.value("reliable_range", m.reliable_range);
    m.base_latency = j.value("base_latency", m.base_latency);
    m.latency_slope = j.value("latency_slope", m.latency_slope);
    m.drop_prob_beyond = j.value("drop_prob_beyond", m.drop_prob_beyond);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("link: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace hydrosim::telemetry
