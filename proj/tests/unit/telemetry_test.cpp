#include <gtest/gtest.h>

#include <random>
#include <string_view>

#include "hydrosim/sampler/sampler.hpp"
#include "hydrosim/telemetry/link.hpp"
#include "hydrosim/telemetry/messages.hpp"
#include "support/message_fuzz.hpp"
#include "support/oracles.hpp"

using namespace hydrosim;
using namespace hydrosim::telemetry;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

Errc decode_error(std::span<const std::uint8_t> b) {
  try {
    decode_message(b);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Io;  // sentinel: nothing thrown
}

}  // namespace

TEST(Crc16, CheckValue) {
  const auto v = bytes_of("123456789");
  EXPECT_EQ(crc16(v), 0x29B1);
  EXPECT_EQ(oracle::crc16_ccitt_false(v), 0x29B1);
}

TEST(Crc16, MatchesBitwiseReference) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint8_t> b(rng() % 300);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    ASSERT_EQ(crc16(b), oracle::crc16_ccitt_false(b));
  }
}

TEST(Frame, EStopLayout) {
  const auto b = encode_message(EStopMsg{true}, 7);
  const std::vector<std::uint8_t> body{0x01, 0x04, 0x00, 0x07, 0x00, 0x01, 0x01};
  const std::uint16_t crc = oracle::crc16_ccitt_false(body);
  std::vector<std::uint8_t> expect{0xA5, 0x5A};
  expect.insert(expect.end(), body.begin(), body.end());
  expect.push_back(static_cast<std::uint8_t>(crc >> 8));
  expect.push_back(static_cast<std::uint8_t>(crc & 0xFF));
  EXPECT_EQ(b, expect);
  const auto d = decode_message(b);
  EXPECT_EQ(d.seq, 7);
  EXPECT_EQ(std::get<EStopMsg>(d.message), EStopMsg{true});
}

TEST(Frame, PayloadSizes) {
  EXPECT_EQ(encode_payload(TelemetryMsg{}).size(), 41u);
  EXPECT_EQ(encode_payload(CommandMsg{}).size(), 9u);
  EXPECT_EQ(encode_payload(MotorCommandMsg{}).size(), 3u);
  EXPECT_EQ(encode_payload(EStopMsg{}).size(), 1u);
  EXPECT_EQ(encode_payload(AckMsg{}).size(), 2u);
  EXPECT_EQ(encode_payload(SampleRecordMsg{"A3-1", 1, 2, 3, 4, 5}).size(), 1u + 4 + 12 + 16);
}

TEST(Frame, LittleEndianFields) {
  const auto p = encode_payload(AckMsg{0x1234});
  EXPECT_EQ(p[0], 0x34);
  EXPECT_EQ(p[1], 0x12);
  const auto c = encode_payload(CommandMsg{DriveMode::Manual, 1.0f, 0.0f});
  // 1.0f = 0x3F800000
  EXPECT_EQ(c[0], 1);
  EXPECT_EQ(c[1], 0x00);
  EXPECT_EQ(c[4], 0x3F);
  EXPECT_EQ(c[3], 0x80);
}

TEST(Frame, MtuBoundary) {
  Frame f{MessageType::Telemetry, 0, std::vector<std::uint8_t>(240, 0xAB)};
  EXPECT_EQ(decode_frame(encode_frame(f)), f);
  f.payload.push_back(0);
  try {
    encode_frame(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PayloadTooLarge);
  }
}

TEST(Frame, RejectionCodes) {
  auto good = encode_message(AckMsg{3}, 1);
  auto b = good;
  b[0] = 0x00;
  EXPECT_EQ(decode_error(b), Errc::BadSync);
  b = good;
  b[2] = 2;
  EXPECT_EQ(decode_error(b), Errc::BadSync);
  b = good;
  b.pop_back();
  EXPECT_EQ(decode_error(b), Errc::BadLength);
  b = good;
  b[7] = 9;
  EXPECT_EQ(decode_error(b), Errc::BadLength);
  b = good;
  b[8] ^= 0x01;
  EXPECT_EQ(decode_error(b), Errc::BadCrc);

  Frame f{MessageType::Ack, 0, {1, 2}};
  auto raw = encode_frame(f);
  raw[3] = 0x7F;
  const std::uint16_t crc = oracle::crc16_ccitt_false(std::span(raw).subspan(2, raw.size() - 4));
  raw[raw.size() - 2] = static_cast<std::uint8_t>(crc >> 8);
  raw[raw.size() - 1] = static_cast<std::uint8_t>(crc & 0xFF);
  EXPECT_EQ(decode_error(raw), Errc::UnknownType);
}

TEST(Frame, FuzzedRoundtrip) {
  std::mt19937_64 rng(2024);
  std::uint16_t seq = 0;
  for (int i = 0; i < 10000; ++i) {
    const Message m = fuzz::random_message(rng);
    const auto d = decode_message(encode_message(m, seq));
    ASSERT_EQ(d.seq, seq);
    ASSERT_EQ(d.message, m) << "case " << i;
    seq = next_seq(seq);
  }
}

TEST(Frame, EverySingleByteCorruptionDetected) {
  std::mt19937_64 rng(99);
  int detected = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto b = encode_message(fuzz::random_message(rng), static_cast<std::uint16_t>(rng()));
    const std::size_t at = rng() % b.size();
    const auto delta = static_cast<std::uint8_t>(1 + rng() % 255);
    b[at] ^= delta;
    try {
      decode_frame(b);
    } catch (const Error&) {
      ++detected;
    }
  }
  EXPECT_EQ(detected, trials);
}

TEST(Frame, EveryPayloadBitFlipIsBadCrc) {
  const auto good = encode_message(TelemetryMsg{1, 2, 3, 4, 5, 6, 7, {1, 2, 3}, {}}, 42);
  for (std::size_t i = kHeaderSize; i < good.size() - kCrcSize; ++i)
    for (int bit = 0; bit < 8; ++bit) {
      auto b = good;
      b[i] ^= static_cast<std::uint8_t>(1u << bit);
      ASSERT_EQ(decode_error(b), Errc::BadCrc);
    }
}

TEST(Messages, MotorStatusBitmapRoundtrips) {
  sampler::SamplerState st(sampler::SamplerParams{});
  sampler::apply_command(st, {2, 3, sampler::Action::Forward});
  TelemetryMsg t;
  t.motor_status = sampler::status_bitmap(sampler::status_report(st));
  const auto d = decode_message(encode_message(t, 0));
  EXPECT_EQ(std::get<TelemetryMsg>(d.message).motor_status, sampler::status_bitmap(sampler::status_report(st)));
}

TEST(Messages, JsonMirror) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Message m = fuzz::random_message(rng);
    if (std::holds_alternative<SampleRecordMsg>(m)) continue;  // arbitrary bytes are not valid UTF-8
    ASSERT_EQ(message_from_json(nlohmann::json::parse(message_to_json(m).dump())), m);
  }
  const auto j = message_to_json(CommandMsg{DriveMode::Manual, 0.5f, -0.25f});
  EXPECT_EQ(j["type"], "command");
  EXPECT_EQ(j["mode"], "manual");
  EXPECT_THROW(message_from_json({{"type", "bogus"}}), Error);
  EXPECT_THROW(message_from_json({{"type", "command"}, {"mode", "sideways"}}), Error);
}

TEST(Link, Examples) {
  const LinkModel m;
  CounterRng rng(1);
  auto o = link_transmit(10.0, m, rng);
  ASSERT_TRUE(delivered(o));
  EXPECT_EQ(std::get<Delivered>(o).latency, m.base_latency);
  EXPECT_TRUE(delivered(link_transmit(66.8, m, rng)));
  LinkModel forced = m;
  forced.drop_prob_beyond = 1.0;
  EXPECT_FALSE(delivered(link_transmit(120.0, forced, rng)));
  EXPECT_THROW(link_transmit(-1.0, m, rng), Error);
}

TEST(Link, LosslessInsideRangeDegradesBeyond) {
  const LinkModel m;
  CounterRng rng(7);
  for (int i = 0; i <= 668; ++i) {
    const auto o = link_transmit(i * 0.1, m, rng);
    ASSERT_TRUE(delivered(o));
    ASSERT_EQ(std::get<Delivered>(o).latency, m.base_latency);
  }
  int drops = 0;
  for (int i = 0; i < 10000; ++i)
    if (!delivered(link_transmit(100.0, m, rng))) ++drops;
  EXPECT_NEAR(drops / 10000.0, m.drop_prob_beyond, 0.02);
  double prev = link_latency(66.8, m);
  for (double d = 67.0; d < 300.0; d += 1.0) {
    EXPECT_GT(link_latency(d, m), prev);
    prev = link_latency(d, m);
  }
}

TEST(Seq, Wraps) {
  EXPECT_EQ(next_seq(0), 1);
  EXPECT_EQ(next_seq(65535), 0);
  SeqCounter c;
  for (int i = 0; i < 65536; ++i) c.next();
  EXPECT_EQ(c.next(), 0);
}

TEST(Channel, DoubleSendSuppressedOnce) {
  LinkChannel ch(LinkModel{}, CounterRng(3));
  const auto f = encode_message(AckMsg{1}, 5);
  ch.send(f, 5, 0.0, 10.0);
  ch.send(f, 5, 0.0, 10.0);
  EXPECT_TRUE(ch.receive(0.05).empty());
  const auto got = ch.receive(0.2);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0], f);
  EXPECT_EQ(ch.stats().duplicates, 1u);
}

TEST(Channel, InOrderDespiteLatencyChange) {
  LinkModel m;
  m.drop_prob_beyond = 0.0;
  LinkChannel ch(m, CounterRng(4));
  ch.send(encode_message(AckMsg{0}, 0), 0, 0.0, 200.0);  // slow
  ch.send(encode_message(AckMsg{1}, 1), 1, 0.1, 10.0);   // would arrive first
  const auto got = ch.receive(10.0);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(decode_message(got[0]).seq, 0);
  EXPECT_EQ(decode_message(got[1]).seq, 1);
}

TEST(Channel, WrappedSeqIsNotADuplicate) {
  LinkChannel ch(LinkModel{}, CounterRng(5));
  SeqCounter c;
  double t = 0;
  std::size_t n = 0;
  for (int i = 0; i < 70000; ++i) {
    const auto s = c.next();
    ch.send(encode_message(AckMsg{s}, s), s, t, 1.0);
    t += 1.0;
    n += ch.receive(t).size();
  }
  EXPECT_EQ(n, 70000u);
}
