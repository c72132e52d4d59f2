#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "scancor/campaign.hpp"
#include "scancor/ingest.hpp"
#include "scancor/synth.hpp"

namespace scancor {

/// Everything one run needs. Values load from a JSON config file first;
/// command line flags override individual fields afterwards.
struct RunConfig {
  uint64_t epsilon = 10;  // backbone-scale default
  uint32_t port_class_x = 10;
  double cutoff_t = 0.15;
  double geo_box_degrees = 5.0;
  FeatureWeights weights;
  ProbeClassifierConfig classifier;
  std::optional<SubnetFilter> visibility;
  std::string geo_db_path;
  bool strict_parse = false;
  int threads = 0;
  size_t matrix_warn_limit = 30000;
  size_t min_campaign_size = 2;

  void validate() const;  // throws Errc::invalid_config
};

/// Monitoring scopes and their probe-count floors: a backbone sees enough
/// traffic to demand 10, an ISP 5, an enterprise keeps everything.
uint64_t scope_default_epsilon(std::string_view scope);

void apply_config_json(RunConfig& cfg, const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

struct DetectStats {
  uint64_t records = 0;
  uint64_t parse_errors = 0;
  uint64_t probes = 0;
  uint64_t scanners = 0;
};

/// Streams a conn log into a probe TSV. Holds one counter per scanner and
/// nothing per record, so input size only costs time.
DetectStats run_detect(std::istream& log, LogFormat format,
                       const RunConfig& cfg, std::ostream& probes_out);

/// Probes plus where they came from.
struct CorrelateInput {
  std::vector<ScanProbe> probes;
  DetectStats input;
};

CorrelateInput load_probe_input(std::istream& probes_tsv);
CorrelateInput detect_input(std::istream& log, LogFormat format,
                            const RunConfig& cfg);

struct CorrelateResult {
  std::vector<ScannerProfile> profiles;  // after the epsilon filter
  std::vector<Fingerprint> fingerprints;
  Dendrogram dendrogram;
  CampaignExtraction extraction;
  std::vector<CampaignSummary> summaries;
  DatasetStats stats;
  nlohmann::json report;
};

/// The full pipeline after probe detection. Deterministic: identical
/// probes, config and geo give a byte-identical report.
CorrelateResult run_correlate(std::vector<ScanProbe> probes,
                              const RunConfig& cfg, const GeoDatabase& geo,
                              const DetectStats& input = {});

std::string report_to_string(const nlohmann::json& report);

/// "start:stop:step" (inclusive) or "v1,v2,...".
std::vector<double> parse_grid(std::string_view text);
std::vector<uint64_t> parse_int_grid(std::string_view text);

struct SweepEpsilonRow {
  uint64_t epsilon;
  uint64_t scanners;
  uint64_t probes;
};

std::vector<SweepEpsilonRow> run_sweep_epsilon(
    std::span<const ScannerProfile> profiles, std::span<const uint64_t> grid);

/// Member lists of the campaigns in a report.
std::vector<std::vector<IpAddress>> campaigns_from_report(
    const nlohmann::json& report);

}  // namespace scancor
