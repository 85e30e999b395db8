#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hydrosim {

/// Error codes shared by every module. Each operation documents which of
/// these it can raise.
enum class Errc {
  // world
  BadMagic,
  TruncatedData,
  MaxvalUnsupported,
  // localization
  NonFiniteInput,
  SingularInnovation,
  // planner
  AllOccupied,
  // vehicle
  PoseOutOfBounds,
  // sampler
  OutOfRange,
  // power
  NonPositivePower,
  // telemetry
  BadSync,
  BadCrc,
  BadLength,
  UnknownType,
  PayloadTooLarge,
  // mission
  DuplicateMotorAssignment,
  EmptyLog,
  InvalidPlan,
  // sim
  ConfigInvalid,
  MapLoadFailed,
  LogCorrupt,
  // bridge
  Conflict,
  NotFound,
  SessionNotRunning,
  BadCommand,
  DuplicateLabel,
  UnknownParameter,
  ArchiveCorrupt,
  Io,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedData: return "TruncatedData";
    case Errc::MaxvalUnsupported: return "MaxvalUnsupported";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::SingularInnovation: return "SingularInnovation";
    case Errc::AllOccupied: return "AllOccupied";
    case Errc::PoseOutOfBounds: return "PoseOutOfBounds";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonPositivePower: return "NonPositivePower";
    case Errc::BadSync: return "BadSync";
    case Errc::BadCrc: return "BadCrc";
    case Errc::BadLength: return "BadLength";
    case Errc::UnknownType: return "UnknownType";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::DuplicateMotorAssignment: return "DuplicateMotorAssignment";
    case Errc::EmptyLog: return "EmptyLog";
    case Errc::InvalidPlan: return "InvalidPlan";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::MapLoadFailed: return "MapLoadFailed";
    case Errc::LogCorrupt: return "LogCorrupt";
    case Errc::Conflict: return "Conflict";
    case Errc::NotFound: return "NotFound";
    case Errc::SessionNotRunning: return "SessionNotRunning";
    case Errc::BadCommand: return "BadCommand";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::UnknownParameter: return "UnknownParameter";
    case Errc::ArchiveCorrupt: return "ArchiveCorrupt";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hydrosim
