#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace wavenl {

enum class ErrorKind {
  config,
  domain,
  collar,
  shape,
  evaluation,
  compatibility,
  divergence,
  blowup,
  resolution,
  range,
  io,
  gap,
  geometry,
};

const char* to_string(ErrorKind kind);

// Every failure in the library is reported through this type. Numeric
// payload (blow-up time, last contraction ratio, admissible rho, ...) travels
// in `details` so callers and the CLI can serialize it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::map<std::string, double> details = {})
      : std::runtime_error(message), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const { return kind_; }
  const std::map<std::string, double>& details() const { return details_; }
  double detail(const std::string& key, double fallback = 0.0) const {
    auto it = details_.find(key);
    return it == details_.end() ? fallback : it->second;
  }

 private:
  ErrorKind kind_;
  std::map<std::string, double> details_;
};

}  // namespace wavenl
