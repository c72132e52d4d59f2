#pragma once

#include <stdexcept>
#include <string>

namespace scancor {

enum class Errc {
  malformed_line,
  missing_header,
  unsupported_format,
  empty_port_set,
  all_weights_zero,
  duplicate_scanner,
  missing_fingerprint,
  mixed_versions,
  spec_capacity_exceeded,
  invalid_config,
  io,
  internal,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::malformed_line: return "malformed line";
    case Errc::missing_header: return "missing header";
    case Errc::unsupported_format: return "unsupported format";
    case Errc::empty_port_set: return "empty port set";
    case Errc::all_weights_zero: return "all weights zero";
    case Errc::duplicate_scanner: return "duplicate scanner";
    case Errc::missing_fingerprint: return "missing fingerprint";
    case Errc::mixed_versions: return "mixed address versions";
    case Errc::spec_capacity_exceeded: return "capacity exceeded";
    case Errc::invalid_config: return "invalid config";
    case Errc::io: return "io";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

/// Library error. `kind` decides the CLI exit code: problems with user
/// inputs or configuration exit 2, everything else exits 3.
class Error : public std::runtime_error {
public:
  Error(Errc kind, const std::string& msg)
      : std::runtime_error(std::string(errc_name(kind)) + ": " + msg),
        kind_(kind) {}

  Errc kind() const { return kind_; }

  bool is_input_error() const {
    switch (kind_) {
      case Errc::malformed_line:
      case Errc::missing_header:
      case Errc::unsupported_format:
      case Errc::mixed_versions:
      case Errc::spec_capacity_exceeded:
      case Errc::invalid_config:
      case Errc::all_weights_zero:
      case Errc::io:
        return true;
      default:
        return false;
    }
  }

private:
  Errc kind_;
};

}  // namespace scancor
