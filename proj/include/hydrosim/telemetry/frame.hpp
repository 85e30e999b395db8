#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <boost/crc.hpp>

#include "hydrosim/core/error.hpp"

namespace hydrosim::telemetry {

inline constexpr std::uint8_t kSync0 = 0xA5;
inline constexpr std::uint8_t kSync1 = 0x5A;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kMtu = 240;
inline constexpr std::size_t kHeaderSize = 8;  // sync(2) version type seq(2) len(2)
inline constexpr std::size_t kCrcSize = 2;

enum class MessageType : std::uint8_t {
  Telemetry = 0x01,
  Command = 0x02,
  MotorCommand = 0x03,
  EStop = 0x04,
  Ack = 0x05,
  SampleRecord = 0x06,
};

constexpr bool known_type(std::uint8_t t) { return t >= 0x01 && t <= 0x06; }

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
inline std::uint16_t crc16(std::span<const std::uint8_t> data) {
  boost::crc_optimal<16, 0x1021, 0xFFFF, 0, false, false> crc;
  crc.process_bytes(data.data(), data.size());
  return crc.checksum();
}

struct Frame {
  MessageType type = MessageType::Ack;
  std::uint16_t seq = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.payload.size() > kMtu) throw Error(Errc::PayloadTooLarge, "payload exceeds 240 bytes");
  const auto len = static_cast<std::uint16_t>(f.payload.size());
  std::vector<std::uint8_t> out{kSync0, kSync1, kVersion, static_cast<std::uint8_t>(f.type),
                                static_cast<std::uint8_t>(f.seq >> 8), static_cast<std::uint8_t>(f.seq & 0xFF),
                                static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len & 0xFF)};
  out.reserve(kHeaderSize + f.payload.size() + kCrcSize);
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  const std::uint16_t crc = crc16(std::span(out).subspan(2));
  out.push_back(static_cast<std::uint8_t>(crc >> 8));
  out.push_back(static_cast<std::uint8_t>(crc & 0xFF));
  return out;
}

/// Checks run in wire order: sync and version, length, CRC, then type.
inline Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 3 || bytes[0] != kSync0 || bytes[1] != kSync1 || bytes[2] != kVersion)
    throw Error(Errc::BadSync, "missing sync or unsupported version");
  if (bytes.size() < kHeaderSize + kCrcSize) throw Error(Errc::BadLength, "frame shorter than header");
  const std::size_t len = (static_cast<std::size_t>(bytes[6]) << 8) | bytes[7];
  if (len > kMtu || bytes.size() != kHeaderSize + len + kCrcSize)
    throw Error(Errc::BadLength, "length field disagrees with frame size");
  const std::size_t crc_at = kHeaderSize + len;
  const std::uint16_t got = static_cast<std::uint16_t>((bytes[crc_at] << 8) | bytes[crc_at + 1]);
  if (crc16(bytes.subspan(2, crc_at - 2)) != got) throw Error(Errc::BadCrc, "checksum mismatch");
  if (!known_type(bytes[3])) throw Error(Errc::UnknownType, "message type");
  Frame f;
  f.type = static_cast<MessageType>(bytes[3]);
  f.seq = static_cast<std::uint16_t>((bytes[4] << 8) | bytes[5]);
  f.payload.assign(bytes.begin() + kHeaderSize, bytes.begin() + static_cast<std::ptrdiff_t>(crc_at));
  return f;
}

}  // namespace hydrosim::telemetry
