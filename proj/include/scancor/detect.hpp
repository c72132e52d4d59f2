#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "scancor/conn.hpp"

namespace scancor {

/// One failed connection attempt attributed to a scanner.
struct ScanProbe {
  IpAddress scanner_ip;
  uint16_t src_port = 0;
  IpAddress target_ip;
  uint16_t target_port = 0;
  double ts = 0;
};

/// Every probe one source sent. Never empty.
struct ScannerProfile {
  IpAddress scanner_ip;
  std::vector<ScanProbe> probes;
};

/// Which records count as probes. The defaults select TCP attempts that
/// never completed a handshake.
struct ProbeClassifierConfig {
  std::set<std::string> probe_states = {"S0", "REJ", "RSTOS0", "SH"};
  std::set<Proto> protocols = {Proto::tcp};
};

/// The originator becomes the scanner; the responder is the target.
std::optional<ScanProbe> classify_probe(const ConnRecord& rec,
                                        const ProbeClassifierConfig& cfg);

/// Groups probes by source. Profiles come out sorted by scanner address,
/// so the result is independent of insertion order.
class ScannerAggregator {
public:
  void add(ScanProbe probe);
  size_t probe_count() const { return probes_; }
  size_t scanner_count() const { return by_scanner_.size(); }
  std::vector<ScannerProfile> take_profiles();

private:
  std::unordered_map<IpAddress, std::vector<ScanProbe>, IpHash> by_scanner_;
  size_t probes_ = 0;
};

std::vector<ScannerProfile> aggregate_scanners(std::span<const ScanProbe> probes);

/// Per-scanner probe counter. Keeps one integer per scanner, nothing else,
/// so arbitrarily long logs need memory linear in the number of scanners.
class ScannerCounter {
public:
  void add(const IpAddress& scanner_ip) { ++counts_[scanner_ip]; }
  size_t size() const { return counts_.size(); }
  const std::unordered_map<IpAddress, uint64_t, IpHash>& counts() const {
    return counts_;
  }

private:
  std::unordered_map<IpAddress, uint64_t, IpHash> counts_;
};

/// Drops scanners with fewer than `epsilon` probes. epsilon = 0 keeps all.
std::vector<ScannerProfile> filter_epsilon(std::vector<ScannerProfile> profiles,
                                           uint64_t epsilon);

void write_probe_tsv_header(std::ostream& out);
void write_probe_tsv_row(std::ostream& out, const ScanProbe& p);
void write_probe_tsv(std::ostream& out, std::span<const ScanProbe> probes);

/// Reads the format written above. Strict: any bad row throws.
std::vector<ScanProbe> read_probe_tsv(std::istream& in);

}  // namespace scancor
