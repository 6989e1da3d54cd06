#pragma once

#include <stdexcept>
#include <string>

namespace bayeskb {

enum class Errc {
  InvalidArgument,
  IncompleteBinding,
  ValueOutOfRange,
  MissingRule,
  CycleDetected,
  UnknownNode,
  OverlappingSets,
  IncompleteAssignment,
  ZeroEvidence,
  SizeLimit,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IncompleteBinding: return "IncompleteBinding";
    case Errc::ValueOutOfRange: return "ValueOutOfRange";
    case Errc::MissingRule: return "MissingRule";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::OverlappingSets: return "OverlappingSets";
    case Errc::IncompleteAssignment: return "IncompleteAssignment";
    case Errc::ZeroEvidence: return "ZeroEvidence";
    case Errc::SizeLimit: return "SizeLimit";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace bayeskb
