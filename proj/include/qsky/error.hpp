#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsky {

enum class Errc {
  NotHermitian,
  NotPSD,
  NotUnitary,
  BadSpectrum,
  BadBasis,
  EmptyPostselection,
  Unbalanceable,
  Degenerate,
  MissingSetting,
  NoCoherence,
  TooDegenerate,
  BadConfig,
  BadFormat,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qsky
