#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "scancor/cluster.hpp"
#include "scancor/conn.hpp"
#include "scancor/geo.hpp"

namespace scancor {

enum class SrcPortStrategy { fixed_shared, fixed_per_scanner, ephemeral_random };

const char* src_port_strategy_name(SrcPortStrategy s);
SrcPortStrategy src_port_strategy_from_name(std::string_view name);

/// One coordinated scanner group. Every scanner sweeps its equal slice of
/// the target pool across all dst_ports; probes_per_scanner picks the probe
/// budget per scanner, realized as whole sweeps (at least one). With
/// validation_retries every probed host:port is hit twice.
struct CampaignSpec {
  std::string label;
  uint32_t scanner_count = 1;
  Cidr source_cidr;
  GeoLocation source_location;
  SrcPortStrategy src_port_strategy = SrcPortStrategy::fixed_per_scanner;
  std::set<uint16_t> dst_ports;
  Cidr target_cidr;
  uint32_t target_count = 1;
  uint32_t probes_min = 1;
  uint32_t probes_max = 1;
  bool validation_retries = false;
  int ip_version = 4;
};

struct NoiseSpec {
  uint32_t benign_failures = 0;  // sources with one or two failed attempts
  uint32_t lone_scanners = 0;    // independent scanners, randomized behavior
};

struct Scenario {
  uint64_t seed = 1;
  NoiseSpec noise;
  std::vector<CampaignSpec> campaigns;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& sc);
Scenario load_scenario(std::istream& in);

/// Campaign scanners map to their label; noise scanners are unlabeled.
struct GroundTruth {
  std::map<IpAddress, std::string> labels;
  std::vector<IpAddress> noise_scanners;
};

struct SynthDataset {
  std::vector<ConnRecord> records;
  GroundTruth truth;
  std::vector<GeoEntry> geo;  // locations consistent with the scenario
};

/// Same inputs, same bytes out. Campaign and noise draws come from
/// separate substreams, so editing one campaign leaves the rest unchanged.
SynthDataset generate_dataset(std::span<const CampaignSpec> campaigns,
                              const NoiseSpec& noise, uint64_t seed);

void write_truth_tsv(std::ostream& out, const GroundTruth& truth);
GroundTruth read_truth_tsv(std::istream& in);

struct PairwiseEval {
  double precision = 1;
  double recall = 1;
  double f1 = 0;
  uint64_t true_pairs = 0;
  uint64_t predicted_pairs = 0;
  uint64_t truth_pairs = 0;
};

/// Pair-counting comparison of predicted groups against the labels.
/// Conventions: no predicted pairs means precision 1; no truth pairs means
/// recall 1; f1 is 0 when precision + recall is 0.
PairwiseEval pairwise_eval(std::span<const std::vector<IpAddress>> predicted,
                           const GroundTruth& truth);
PairwiseEval pairwise_eval(std::span<const Campaign> predicted,
                           const GroundTruth& truth);

}  // namespace scancor
