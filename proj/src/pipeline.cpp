#include "scancor/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "scancor/error.hpp"
#include "scancor/strings.hpp"

namespace scancor {

void RunConfig::validate() const {
  if (port_class_x < 1)
    throw Error(Errc::invalid_config, "x must be at least 1");
  if (!(cutoff_t >= 0) || !std::isfinite(cutoff_t))
    throw Error(Errc::invalid_config, "t must be a finite value >= 0");
  if (!(geo_box_degrees > 0))
    throw Error(Errc::invalid_config, "d must be positive");
  if (min_campaign_size < 2)
    throw Error(Errc::invalid_config, "min campaign size must be >= 2");
  if (classifier.probe_states.empty())
    throw Error(Errc::invalid_config, "probe state set is empty");
  if (classifier.protocols.empty())
    throw Error(Errc::invalid_config, "protocol set is empty");
  weights.validate();
  if (weights.sum() == 0)
    throw Error(Errc::all_weights_zero, "all feature weights are zero");
}

uint64_t scope_default_epsilon(std::string_view scope) {
  if (scope == "backbone") return 10;
  if (scope == "isp") return 5;
  if (scope == "enterprise") return 0;
  throw Error(Errc::invalid_config,
              "unknown scope '" + std::string(scope) +
                  "' (expected backbone, isp or enterprise)");
}

namespace {

void apply_weights_json(FeatureWeights& w, const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    double v = value.get<double>();
    if (key == "src_ports")
      w.src_ports = v;
    else if (key == "dst_ports")
      w.dst_ports = v;
    else if (key == "vertical")
      w.vertical = v;
    else if (key == "horizontal")
      w.horizontal = v;
    else if (key == "validation")
      w.validation = v;
    else if (key == "ip_version")
      w.ip_version = v;
    else if (key == "target_hosts_mag")
      w.target_hosts_mag = v;
    else if (key == "probe_count_mag")
      w.probe_count_mag = v;
    else if (key == "subnet")
      w.subnet = v;
    else if (key == "location")
      w.location = v;
    else
      throw Error(Errc::invalid_config, "unknown weight '" + key + "'");
  }
}

}  // namespace

void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  try {
    if (j.contains("scope"))
      cfg.epsilon = scope_default_epsilon(j.at("scope").get<std::string>());
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<uint64_t>();
    if (j.contains("x")) cfg.port_class_x = j.at("x").get<uint32_t>();
    if (j.contains("t")) cfg.cutoff_t = j.at("t").get<double>();
    if (j.contains("d")) cfg.geo_box_degrees = j.at("d").get<double>();
    if (j.contains("weights")) apply_weights_json(cfg.weights, j.at("weights"));
    if (j.contains("probe_states")) {
      cfg.classifier.probe_states.clear();
      for (const auto& s : j.at("probe_states"))
        cfg.classifier.probe_states.insert(s.get<std::string>());
    }
    if (j.contains("protocols")) {
      cfg.classifier.protocols.clear();
      for (const auto& s : j.at("protocols"))
        cfg.classifier.protocols.insert(
            proto_from_token(s.get<std::string>()));
    }
    if (j.contains("visibility")) {
      auto cidr = Cidr::parse(j.at("visibility").get<std::string>());
      if (!cidr)
        throw Error(Errc::invalid_config, "bad visibility prefix");
      cfg.visibility = SubnetFilter{*cidr};
    }
    if (j.contains("geo_db")) cfg.geo_db_path = j.at("geo_db").get<std::string>();
    if (j.contains("strict")) cfg.strict_parse = j.at("strict").get<bool>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("min_campaign_size"))
      cfg.min_campaign_size = j.at("min_campaign_size").get<size_t>();
    if (j.contains("matrix_warn_limit"))
      cfg.matrix_warn_limit = j.at("matrix_warn_limit").get<size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("config: ") + e.what());
  }
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config,
                path + " is not valid JSON: " + e.what());
  }
  RunConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

DetectStats run_detect(std::istream& log, LogFormat format,
                       const RunConfig& cfg, std::ostream& probes_out) {
  cfg.validate();
  LogReader reader(log, format, cfg.strict_parse);
  ScannerCounter counter;
  DetectStats st;
  write_probe_tsv_header(probes_out);
  ConnRecord rec;
  while (reader.next(rec)) {
    ++st.records;
    if (cfg.visibility && !cfg.visibility->matches(rec)) continue;
    if (auto probe = classify_probe(rec, cfg.classifier)) {
      ++st.probes;
      counter.add(probe->scanner_ip);
      write_probe_tsv_row(probes_out, *probe);
    }
  }
  st.parse_errors = reader.parse_errors();
  st.scanners = counter.size();
  return st;
}

CorrelateInput load_probe_input(std::istream& probes_tsv) {
  CorrelateInput in;
  in.probes = read_probe_tsv(probes_tsv);
  in.input.probes = in.probes.size();
  ScannerCounter counter;
  for (const ScanProbe& p : in.probes) counter.add(p.scanner_ip);
  in.input.scanners = counter.size();
  return in;
}

CorrelateInput detect_input(std::istream& log, LogFormat format,
                            const RunConfig& cfg) {
  LogReader reader(log, format, cfg.strict_parse);
  CorrelateInput in;
  ConnRecord rec;
  ScannerCounter counter;
  while (reader.next(rec)) {
    ++in.input.records;
    if (cfg.visibility && !cfg.visibility->matches(rec)) continue;
    if (auto probe = classify_probe(rec, cfg.classifier)) {
      counter.add(probe->scanner_ip);
      in.probes.push_back(*probe);
    }
  }
  in.input.parse_errors = reader.parse_errors();
  in.input.probes = in.probes.size();
  in.input.scanners = counter.size();
  return in;
}

namespace {

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["epsilon"] = cfg.epsilon;
  j["x"] = cfg.port_class_x;
  j["t"] = cfg.cutoff_t;
  j["d"] = cfg.geo_box_degrees;
  j["min_campaign_size"] = cfg.min_campaign_size;
  const FeatureWeights& w = cfg.weights;
  j["weights"] = {{"src_ports", w.src_ports},
                  {"dst_ports", w.dst_ports},
                  {"vertical", w.vertical},
                  {"horizontal", w.horizontal},
                  {"validation", w.validation},
                  {"ip_version", w.ip_version},
                  {"target_hosts_mag", w.target_hosts_mag},
                  {"probe_count_mag", w.probe_count_mag},
                  {"subnet", w.subnet},
                  {"location", w.location}};
  j["probe_states"] = cfg.classifier.probe_states;
  nlohmann::json protos = nlohmann::json::array();
  for (Proto p : cfg.classifier.protocols) protos.push_back(proto_name(p));
  j["protocols"] = std::move(protos);
  j["visibility"] = cfg.visibility
                        ? nlohmann::json(cfg.visibility->cidr.to_string())
                        : nlohmann::json(nullptr);
  j["geo_db"] = cfg.geo_db_path.empty() ? nlohmann::json(nullptr)
                                        : nlohmann::json(cfg.geo_db_path);
  return j;
}

}  // namespace

CorrelateResult run_correlate(std::vector<ScanProbe> probes,
                              const RunConfig& cfg, const GeoDatabase& geo,
                              const DetectStats& input) {
  cfg.validate();
  CorrelateResult res;
  res.profiles =
      filter_epsilon(aggregate_scanners(probes), cfg.epsilon);
  probes.clear();
  probes.shrink_to_fit();

  res.fingerprints = fingerprint_all(res.profiles, cfg.port_class_x, geo,
                                     cfg.threads);
  if (!res.fingerprints.empty()) {
    MatrixOptions opt;
    opt.threads = cfg.threads;
    opt.warn_limit = cfg.matrix_warn_limit;
    SimilarityMatrix matrix =
        build_matrix(res.fingerprints, cfg.weights, cfg.geo_box_degrees, opt);
    res.dendrogram = upgma(matrix);
    std::vector<ClusterCut> cuts = cut_clusters(res.dendrogram, cfg.cutoff_t);
    res.extraction = extract_campaigns(cuts, cfg.min_campaign_size);
    FingerprintIndex index = index_fingerprints(res.fingerprints);
    for (const Campaign& c : res.extraction.campaigns)
      res.summaries.push_back(summarize_campaign(c, index));
  }
  res.stats = dataset_stats(res.profiles, res.extraction.campaigns);

  nlohmann::json j;
  j["parameters"] = config_to_json(cfg);
  j["input"] = {{"records", input.records},
                {"parse_errors", input.parse_errors},
                {"probes", input.probes},
                {"scanners", input.scanners}};
  nlohmann::json campaigns = nlohmann::json::array();
  for (const CampaignSummary& s : res.summaries)
    campaigns.push_back(summary_to_json(s));
  j["campaigns"] = std::move(campaigns);
  nlohmann::json standalone = nlohmann::json::array();
  for (const IpAddress& ip : res.extraction.standalone)
    standalone.push_back(ip.to_string());
  j["standalone"] = std::move(standalone);
  j["dataset"] = stats_to_json(res.stats);
  res.report = std::move(j);
  return res;
}

std::string report_to_string(const nlohmann::json& report) {
  return report.dump(2) + "\n";
}

std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> out;
  auto bad = [&]() -> Error {
    return Error(Errc::invalid_config,
                 "bad grid '" + std::string(text) +
                     "' (want start:stop:step or v1,v2,...)");
  };
  if (text.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts = split(text, ':');
    if (parts.size() != 3) throw bad();
    auto start = parse_double(parts[0]);
    auto stop = parse_double(parts[1]);
    auto step = parse_double(parts[2]);
    if (!start || !stop || !step || *step <= 0 || *stop < *start) throw bad();
    // Indexed stepping keeps the grid free of drift from repeated adds.
    uint64_t count = (uint64_t)std::floor((*stop - *start) / *step + 1e-9) + 1;
    for (uint64_t i = 0; i < count; ++i) out.push_back(*start + (double)i * *step);
    return out;
  }
  for (std::string_view part : split(text, ',')) {
    auto v = parse_double(part);
    if (!v) throw bad();
    out.push_back(*v);
  }
  if (out.empty()) throw bad();
  return out;
}

std::vector<uint64_t> parse_int_grid(std::string_view text) {
  std::vector<uint64_t> out;
  for (double v : parse_grid(text)) {
    if (v < 0 || v != std::floor(v))
      throw Error(Errc::invalid_config,
                  "grid value " + format_double(v) + " is not a whole number");
    out.push_back((uint64_t)v);
  }
  return out;
}

std::vector<SweepEpsilonRow> run_sweep_epsilon(
    std::span<const ScannerProfile> profiles, std::span<const uint64_t> grid) {
  // Sorted per-scanner counts plus a suffix sum answer every epsilon with
  // one binary search.
  std::vector<uint64_t> counts;
  counts.reserve(profiles.size());
  for (const ScannerProfile& p : profiles) counts.push_back(p.probes.size());
  std::sort(counts.begin(), counts.end());
  std::vector<uint64_t> suffix(counts.size() + 1, 0);
  for (size_t i = counts.size(); i-- > 0;)
    suffix[i] = suffix[i + 1] + counts[i];

  std::vector<SweepEpsilonRow> out;
  out.reserve(grid.size());
  for (uint64_t eps : grid) {
    size_t idx = (size_t)(std::lower_bound(counts.begin(), counts.end(), eps) -
                          counts.begin());
    out.push_back(
        SweepEpsilonRow{eps, counts.size() - idx, suffix[idx]});
  }
  return out;
}

std::vector<std::vector<IpAddress>> campaigns_from_report(
    const nlohmann::json& report) {
  std::vector<std::vector<IpAddress>> out;
  try {
    for (const auto& cj : report.at("campaigns")) {
      std::vector<IpAddress> members;
      for (const auto& m : cj.at("members")) {
        auto ip = IpAddress::parse(m.get<std::string>());
        if (!ip)
          throw Error(Errc::malformed_line,
                      "bad member address in report");
        members.push_back(*ip);
      }
      out.push_back(std::move(members));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config,
                std::string("report shape: ") + e.what());
  }
  return out;
}

}  // namespace scancor
