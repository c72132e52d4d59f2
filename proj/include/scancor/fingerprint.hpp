#pragma once

#include <set>
#include <span>
#include <string>

#include "scancor/detect.hpp"
#include "scancor/geo.hpp"

namespace scancor {

/// Distinct-port set collapsed to Single / Few / Multiple. Single keeps the
/// concrete port; Few covers 2..x ports, Multiple anything beyond.
struct PortClass {
  enum class Kind : uint8_t { single, few, multiple };

  Kind kind = Kind::single;
  uint16_t port = 0;  // meaningful for single only

  std::string to_string() const;  // "S+30443", "F", "M"

  friend bool operator==(const PortClass&, const PortClass&) = default;
  friend auto operator<=>(const PortClass&, const PortClass&) = default;
};

PortClass port_class(const std::set<uint16_t>& distinct_ports, uint32_t x);

/// Ten-feature characterization of one scanner.
struct Fingerprint {
  IpAddress scanner_ip;
  PortClass src_ports;
  PortClass dst_ports;
  bool vertical = false;    // more than one target host
  IpAddress single_target;  // the unique host, meaningful when !vertical
  bool horizontal = false;  // at least two ports on some single host
  bool validation = false;  // some host:port pair probed at least twice
  int ip_version = 4;
  uint64_t target_hosts = 0;
  uint64_t probe_count = 0;
  GeoLocation location;
};

Fingerprint compute_fingerprint(const ScannerProfile& profile, uint32_t x,
                                const GeoDatabase& geo);

/// Fingerprints all profiles, parallel over profiles. threads <= 0 takes
/// the OpenMP default. Entries are independent, so the output matches
/// fingerprint_all_serial() bit for bit at any thread count.
std::vector<Fingerprint> fingerprint_all(std::span<const ScannerProfile> profiles,
                                         uint32_t x, const GeoDatabase& geo,
                                         int threads = 0);
std::vector<Fingerprint> fingerprint_all_serial(
    std::span<const ScannerProfile> profiles, uint32_t x,
    const GeoDatabase& geo);

}  // namespace scancor
