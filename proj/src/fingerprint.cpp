#include "scancor/fingerprint.hpp"

#include <omp.h>

#include <unordered_map>

#include "scancor/error.hpp"

namespace scancor {

std::string PortClass::to_string() const {
  switch (kind) {
    case Kind::single: return "S+" + std::to_string(port);
    case Kind::few: return "F";
    case Kind::multiple: return "M";
  }
  return "?";
}

PortClass port_class(const std::set<uint16_t>& distinct_ports, uint32_t x) {
  if (distinct_ports.empty())
    throw Error(Errc::empty_port_set, "cannot classify an empty port set");
  PortClass pc;
  if (distinct_ports.size() == 1) {
    pc.kind = PortClass::Kind::single;
    pc.port = *distinct_ports.begin();
  } else if (distinct_ports.size() <= x) {
    pc.kind = PortClass::Kind::few;
  } else {
    pc.kind = PortClass::Kind::multiple;
  }
  return pc;
}

namespace {

struct TargetKey {
  IpAddress ip;
  uint16_t port;

  friend bool operator==(const TargetKey&, const TargetKey&) = default;
};

struct TargetKeyHash {
  size_t operator()(const TargetKey& k) const {
    return IpHash{}(k.ip) * 31 + k.port;
  }
};

}  // namespace

Fingerprint compute_fingerprint(const ScannerProfile& profile, uint32_t x,
                                const GeoDatabase& geo) {
  if (profile.probes.empty())
    throw Error(Errc::internal, "profile without probes");

  Fingerprint fp;
  fp.scanner_ip = profile.scanner_ip;
  fp.ip_version = profile.scanner_ip.version();
  fp.probe_count = profile.probes.size();

  std::set<uint16_t> src_ports, dst_ports;
  std::unordered_map<TargetKey, uint32_t, TargetKeyHash> pair_counts;
  pair_counts.reserve(profile.probes.size());
  for (const ScanProbe& p : profile.probes) {
    src_ports.insert(p.src_port);
    dst_ports.insert(p.target_port);
    ++pair_counts[TargetKey{p.target_ip, p.target_port}];
  }
  fp.src_ports = port_class(src_ports, x);
  fp.dst_ports = port_class(dst_ports, x);

  // Distinct pair keys grouped by host give the per-host distinct port
  // count directly.
  std::unordered_map<IpAddress, uint32_t, IpHash> ports_per_host;
  ports_per_host.reserve(pair_counts.size());
  for (const auto& [key, count] : pair_counts) {
    ++ports_per_host[key.ip];
    if (count >= 2) fp.validation = true;
  }
  fp.target_hosts = ports_per_host.size();
  fp.vertical = fp.target_hosts > 1;
  if (!fp.vertical) fp.single_target = ports_per_host.begin()->first;
  for (const auto& [host, nports] : ports_per_host) {
    if (nports >= 2) {
      fp.horizontal = true;
      break;
    }
  }

  fp.location = geo.lookup(profile.scanner_ip);
  return fp;
}

std::vector<Fingerprint> fingerprint_all_serial(
    std::span<const ScannerProfile> profiles, uint32_t x,
    const GeoDatabase& geo) {
  std::vector<Fingerprint> out(profiles.size());
  for (size_t i = 0; i < profiles.size(); ++i)
    out[i] = compute_fingerprint(profiles[i], x, geo);
  return out;
}

std::vector<Fingerprint> fingerprint_all(std::span<const ScannerProfile> profiles,
                                         uint32_t x, const GeoDatabase& geo,
                                         int threads) {
  // Exceptions must not escape the parallel region; validate up front.
  // A non-empty profile cannot throw below (port sets are never empty).
  for (const ScannerProfile& p : profiles)
    if (p.probes.empty()) throw Error(Errc::internal, "profile without probes");

  std::vector<Fingerprint> out(profiles.size());
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  const std::ptrdiff_t n = (std::ptrdiff_t)profiles.size();
#pragma omp parallel for schedule(dynamic, 64) num_threads(nthreads)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[(size_t)i] = compute_fingerprint(profiles[(size_t)i], x, geo);
  return out;
}

}  // namespace scancor
