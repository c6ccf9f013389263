#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qgerbe {

enum class Errc {
  ZeroQuaternion,
  NotConformal,
  FactorizationUnstable,
  NonComposable,
  DegenerateBimodule,
  MalformedCover,
  NotAFace,
  MissingField,
  NerveMismatch,
  PoleHit,
  StepTooSmall,
  GaugeInconsistency,
  UnknownAtlas,
  ParseError,
};

constexpr std::string_view to_string(Errc code) noexcept
{
  switch (code) {
  case Errc::ZeroQuaternion: return "ZeroQuaternion";
  case Errc::NotConformal: return "NotConformal";
  case Errc::FactorizationUnstable: return "FactorizationUnstable";
  case Errc::NonComposable: return "NonComposable";
  case Errc::DegenerateBimodule: return "DegenerateBimodule";
  case Errc::MalformedCover: return "MalformedCover";
  case Errc::NotAFace: return "NotAFace";
  case Errc::MissingField: return "MissingField";
  case Errc::NerveMismatch: return "NerveMismatch";
  case Errc::PoleHit: return "PoleHit";
  case Errc::StepTooSmall: return "StepTooSmall";
  case Errc::GaugeInconsistency: return "GaugeInconsistency";
  case Errc::UnknownAtlas: return "UnknownAtlas";
  case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what)
  {}

  Errc code() const noexcept { return code_; }

  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  Errc code_;
  std::string detail_;
};

} // namespace qgerbe
