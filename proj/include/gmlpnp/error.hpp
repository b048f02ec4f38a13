#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gmlpnp {

enum class ErrorCode {
  InsufficientPoints,
  DegenerateGeometry,
  DegenerateCovariance,
  NonFiniteCost,
  BehindCamera,
  InvalidPixel,
  DegenerateGroundTruth,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code.
class PnpError : public std::runtime_error {
 public:
  PnpError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gmlpnp
