#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scancor/cluster.hpp"

namespace scancor {

/// Aggregated view of one campaign across its members' fingerprints.
/// Set-valued fields list the distinct values observed, sorted.
struct CampaignSummary {
  std::vector<IpAddress> members;
  double formation_similarity = 1;
  uint64_t member_count = 0;
  uint64_t total_probes = 0;
  std::vector<PortClass> src_ports;
  std::vector<PortClass> dst_ports;
  std::vector<bool> vertical;
  std::vector<bool> horizontal;
  std::vector<bool> validation;
  std::vector<int> ip_versions;
  std::pair<uint64_t, uint64_t> target_hosts_range{0, 0};
  std::pair<uint64_t, uint64_t> probe_count_range{0, 0};
  std::vector<Cidr> covering;          // one per address family present
  std::vector<std::string> countries;  // "??" marks unknown locations
};

using FingerprintIndex =
    std::unordered_map<IpAddress, const Fingerprint*, IpHash>;

FingerprintIndex index_fingerprints(std::span<const Fingerprint> fingerprints);

/// Throws Errc::missing_fingerprint when a member has no fingerprint.
CampaignSummary summarize_campaign(const Campaign& campaign,
                                   const FingerprintIndex& index);

/// Tightest prefix containing every address. All addresses must share one
/// family; the set must not be empty.
Cidr minimal_covering_cidr(std::span<const IpAddress> addrs);

/// (value, scanner count) pairs, ascending by value.
using Distribution = std::vector<std::pair<uint64_t, uint64_t>>;

struct DatasetStats {
  uint64_t scanners = 0;
  uint64_t probes = 0;
  uint64_t campaigns = 0;
  uint64_t distributed_scanners = 0;
  double distributed_fraction = 0;
  Distribution probe_counts;
  Distribution src_port_counts;  // distinct source ports per scanner
  Distribution dst_port_counts;  // distinct target ports per scanner
};

DatasetStats dataset_stats(std::span<const ScannerProfile> profiles,
                           std::span<const Campaign> campaigns);

void write_distribution_tsv(std::ostream& out, const Distribution& dist);

nlohmann::json summary_to_json(const CampaignSummary& s);
nlohmann::json stats_to_json(const DatasetStats& s);

}  // namespace scancor
