#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "scancor/pipeline.hpp"
#include "scancor/strings.hpp"

using namespace scancor;

namespace {

struct Input {
  std::ifstream file;
  std::istream* stream = nullptr;
};

Input open_input(const std::string& path) {
  Input in;
  if (path == "-") {
    in.stream = &std::cin;
    return in;
  }
  in.file.open(path);
  if (!in.file) throw Error(Errc::io, "cannot open " + path);
  in.stream = &in.file;
  return in;
}

struct Output {
  std::ofstream file;
  std::ostream* stream = nullptr;
};

Output open_output(const std::string& path) {
  Output out;
  if (path == "-") {
    out.stream = &std::cout;
    return out;
  }
  out.file.open(path);
  if (!out.file) throw Error(Errc::io, "cannot write " + path);
  out.stream = &out.file;
  return out;
}

// Options shared by every pipeline-running subcommand. CLI flags override
// whatever the config file set.
struct ConfigFlags {
  std::string config_path;
  std::string scope;
  int64_t epsilon = -1;
  int64_t x = -1;
  double t = -1;
  double d = -1;
  std::vector<std::string> weight_kv;
  std::string probe_states;
  std::string protocols;
  std::string subnet;
  std::string geo_path;
  int threads = 0;
  bool threads_set = false;
  int64_t min_campaign = -1;
  bool strict = false;

  void add_common(CLI::App* cmd, bool with_cluster_flags) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--scope", scope,
                    "deployment scope preset for epsilon "
                    "(backbone|isp|enterprise)");
    cmd->add_option("--epsilon", epsilon,
                    "minimum probes per scanner (overrides --scope)");
    cmd->add_option("--subnet", subnet, "restrict visibility to this prefix");
    cmd->add_option("--probe-states", probe_states,
                    "comma list of conn states that count as probes");
    cmd->add_option("--protocols", protocols,
                    "comma list of protocols that count as probes");
    cmd->add_flag("--strict", strict, "fail on the first malformed line");
    if (with_cluster_flags) {
      cmd->add_option("--x", x, "max distinct ports still classed as Few");
      cmd->add_option("--d", d, "coordinate box size in degrees");
      cmd->add_option("--weight", weight_kv,
                      "feature weight override, name=value (repeatable)");
      cmd->add_option("--geo", geo_path, "geo CSV (network,country,lat,lon)");
      cmd->add_option("--threads", threads, "OpenMP threads (0 = default)")
          ->check(CLI::NonNegativeNumber);
      cmd->add_option("--min-campaign-size", min_campaign,
                      "smallest cluster reported as a campaign");
    }
  }

  RunConfig build() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (!scope.empty()) cfg.epsilon = scope_default_epsilon(scope);
    if (epsilon >= 0) cfg.epsilon = (uint64_t)epsilon;
    if (x >= 0) cfg.port_class_x = (uint32_t)x;
    if (t >= 0) cfg.cutoff_t = t;
    if (d >= 0) cfg.geo_box_degrees = d;
    for (const std::string& kv : weight_kv) {
      size_t eq = kv.find('=');
      auto value =
          eq == std::string::npos
              ? std::nullopt
              : parse_double(std::string_view(kv).substr(eq + 1));
      if (!value)
        throw Error(Errc::invalid_config,
                    "bad --weight '" + kv + "', want name=value");
      nlohmann::json j;
      j["weights"][kv.substr(0, eq)] = *value;
      apply_config_json(cfg, j);
    }
    if (!probe_states.empty()) {
      cfg.classifier.probe_states.clear();
      for (std::string_view s : split(probe_states, ','))
        if (!s.empty()) cfg.classifier.probe_states.insert(std::string(s));
    }
    if (!protocols.empty()) {
      cfg.classifier.protocols.clear();
      for (std::string_view s : split(protocols, ','))
        if (!s.empty()) cfg.classifier.protocols.insert(proto_from_token(s));
    }
    if (!subnet.empty()) {
      auto cidr = Cidr::parse(subnet);
      if (!cidr)
        throw Error(Errc::invalid_config,
                    "bad --subnet '" + subnet + "' (host bits must be zero)");
      cfg.visibility = SubnetFilter{*cidr};
    }
    if (!geo_path.empty()) cfg.geo_db_path = geo_path;
    if (threads_set) cfg.threads = threads;
    if (min_campaign >= 0) cfg.min_campaign_size = (size_t)min_campaign;
    if (strict) cfg.strict_parse = true;
    cfg.validate();
    return cfg;
  }
};

GeoDatabase load_geo(const RunConfig& cfg) {
  if (cfg.geo_db_path.empty()) return GeoDatabase();
  Input in = open_input(cfg.geo_db_path);
  return GeoDatabase::load_csv(*in.stream);
}

CorrelateInput read_correlate_input(const std::string& probes_path,
                                    const std::string& log_path,
                                    const std::string& format,
                                    const RunConfig& cfg) {
  if (!probes_path.empty()) {
    Input in = open_input(probes_path);
    return load_probe_input(*in.stream);
  }
  Input in = open_input(log_path);
  return detect_input(*in.stream, log_format_from_name(format), cfg);
}

int cmd_detect(const ConfigFlags& flags, const std::string& log_path,
               const std::string& format, const std::string& out_path) {
  RunConfig cfg = flags.build();
  Input log = open_input(log_path);
  Output out = open_output(out_path);
  DetectStats st =
      run_detect(*log.stream, log_format_from_name(format), cfg, *out.stream);
  std::cerr << "detect: " << st.records << " records, " << st.parse_errors
            << " parse errors, " << st.probes << " probes, " << st.scanners
            << " scanners\n";
  return 0;
}

int cmd_correlate(const ConfigFlags& flags, const std::string& probes_path,
                  const std::string& log_path, const std::string& format,
                  const std::string& out_path, const std::string& matrix_out,
                  const std::string& dendro_out) {
  RunConfig cfg = flags.build();
  GeoDatabase geo = load_geo(cfg);
  CorrelateInput in = read_correlate_input(probes_path, log_path, format, cfg);
  CorrelateResult res =
      run_correlate(std::move(in.probes), cfg, geo, in.input);

  if (!matrix_out.empty()) {
    // The report pipeline discards the matrix; rebuild it for the export.
    MatrixOptions opt;
    opt.threads = cfg.threads;
    opt.warn_limit = cfg.matrix_warn_limit;
    SimilarityMatrix m =
        build_matrix(res.fingerprints, cfg.weights, cfg.geo_box_degrees, opt);
    Output out = open_output(matrix_out);
    write_matrix_tsv(*out.stream, m);
  }
  if (!dendro_out.empty()) {
    Output out = open_output(dendro_out);
    write_dendrogram_tsv(*out.stream, res.dendrogram);
  }
  Output out = open_output(out_path);
  *out.stream << report_to_string(res.report);
  std::cerr << "correlate: " << res.stats.scanners << " scanners, "
            << res.stats.campaigns << " campaigns, "
            << res.stats.distributed_scanners << " distributed\n";
  return 0;
}

int cmd_sweep_t(const ConfigFlags& flags, const std::string& probes_path,
                const std::string& log_path, const std::string& format,
                const std::string& grid_spec, const std::string& out_path) {
  RunConfig cfg = flags.build();
  GeoDatabase geo = load_geo(cfg);
  CorrelateInput in = read_correlate_input(probes_path, log_path, format, cfg);
  std::vector<double> grid = parse_grid(grid_spec);

  std::vector<ScannerProfile> profiles =
      filter_epsilon(aggregate_scanners(in.probes), cfg.epsilon);
  std::vector<Fingerprint> fps =
      fingerprint_all(profiles, cfg.port_class_x, geo, cfg.threads);
  Output out = open_output(out_path);
  *out.stream << "t\tclusters\n";
  if (fps.empty()) return 0;
  MatrixOptions opt;
  opt.threads = cfg.threads;
  opt.warn_limit = cfg.matrix_warn_limit;
  SimilarityMatrix m = build_matrix(fps, cfg.weights, cfg.geo_box_degrees, opt);
  Dendrogram dg = upgma(m);
  for (const auto& [t, clusters] : sweep_threshold(dg, grid))
    *out.stream << format_double(t) << '\t' << clusters << '\n';
  return 0;
}

int cmd_sweep_epsilon(const ConfigFlags& flags, const std::string& probes_path,
                      const std::string& log_path, const std::string& format,
                      const std::string& grid_spec,
                      const std::string& out_path) {
  RunConfig cfg = flags.build();
  CorrelateInput in = read_correlate_input(probes_path, log_path, format, cfg);
  std::vector<uint64_t> grid = parse_int_grid(grid_spec);
  std::vector<ScannerProfile> profiles = aggregate_scanners(in.probes);
  Output out = open_output(out_path);
  *out.stream << "epsilon\tscanners\tprobes\n";
  for (const SweepEpsilonRow& row : run_sweep_epsilon(profiles, grid))
    *out.stream << row.epsilon << '\t' << row.scanners << '\t' << row.probes
                << '\n';
  return 0;
}

int cmd_stats(const ConfigFlags& flags, const std::string& probes_path,
              const std::string& log_path, const std::string& format,
              const std::string& out_path, const std::string& dist_dir) {
  RunConfig cfg = flags.build();
  CorrelateInput in = read_correlate_input(probes_path, log_path, format, cfg);
  std::vector<ScannerProfile> profiles =
      filter_epsilon(aggregate_scanners(in.probes), cfg.epsilon);
  DatasetStats st = dataset_stats(profiles, {});
  Output out = open_output(out_path);
  *out.stream << stats_to_json(st).dump(2) << "\n";
  if (!dist_dir.empty()) {
    auto write_dist = [&](const char* name, const Distribution& dist) {
      Output f = open_output(dist_dir + "/" + name);
      write_distribution_tsv(*f.stream, dist);
    };
    write_dist("probe_counts.tsv", st.probe_counts);
    write_dist("src_ports.tsv", st.src_port_counts);
    write_dist("dst_ports.tsv", st.dst_port_counts);
  }
  return 0;
}

int cmd_synth(const std::string& scenario_path, int64_t seed_override,
              const std::string& log_out, const std::string& truth_out,
              const std::string& geo_out) {
  Input in = open_input(scenario_path);
  Scenario sc = load_scenario(*in.stream);
  if (seed_override >= 0) sc.seed = (uint64_t)seed_override;
  SynthDataset data = generate_dataset(sc.campaigns, sc.noise, sc.seed);

  Output log = open_output(log_out);
  write_conn_log(*log.stream, data.records);
  if (!truth_out.empty()) {
    Output out = open_output(truth_out);
    write_truth_tsv(*out.stream, data.truth);
  }
  if (!geo_out.empty()) {
    GeoDatabase db;
    for (const GeoEntry& e : data.geo) db.add(e);
    Output out = open_output(geo_out);
    db.write_csv(*out.stream);
  }
  std::cerr << "synth: " << data.records.size() << " records, "
            << data.truth.labels.size() << " campaign scanners, "
            << data.truth.noise_scanners.size() << " noise scanners\n";
  return 0;
}

int cmd_eval(const std::string& report_path, const std::string& truth_path) {
  Input rin = open_input(report_path);
  nlohmann::json report;
  try {
    *rin.stream >> report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config,
                report_path + " is not valid JSON: " + std::string(e.what()));
  }
  std::vector<std::vector<IpAddress>> predicted = campaigns_from_report(report);
  Input tin = open_input(truth_path);
  GroundTruth truth = read_truth_tsv(*tin.stream);
  PairwiseEval ev = pairwise_eval(predicted, truth);
  std::cout << "precision\t" << format_double(ev.precision) << '\n'
            << "recall\t" << format_double(ev.recall) << '\n'
            << "f1\t" << format_double(ev.f1) << '\n'
            << "true_pairs\t" << ev.true_pairs << '\n'
            << "predicted_pairs\t" << ev.predicted_pairs << '\n'
            << "truth_pairs\t" << ev.truth_pairs << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Port scan detection and scan campaign correlation"};
  app.require_subcommand(1);

  // detect
  ConfigFlags detect_flags;
  std::string detect_log, detect_format = "zeek", detect_out = "-";
  CLI::App* detect =
      app.add_subcommand("detect", "extract scan probes from a conn log");
  detect->add_option("--log", detect_log, "conn log path, - for stdin")
      ->required();
  detect->add_option("--format", detect_format, "log format (zeek|csv)");
  detect->add_option("--out", detect_out, "probe TSV output, - for stdout");
  detect_flags.add_common(detect, false);

  // correlate
  ConfigFlags corr_flags;
  std::string corr_probes, corr_log, corr_format = "zeek", corr_out = "-";
  std::string corr_matrix_out, corr_dendro_out;
  CLI::App* correlate = app.add_subcommand(
      "correlate", "fingerprint scanners and report campaigns");
  correlate->add_option("--probes", corr_probes, "probe TSV from detect");
  correlate->add_option("--log", corr_log, "conn log (detect inline)");
  correlate->add_option("--format", corr_format, "log format (zeek|csv)");
  correlate->add_option("--out", corr_out, "report JSON output");
  correlate->add_option("--matrix-out", corr_matrix_out,
                        "write the similarity matrix TSV here");
  correlate->add_option("--dendrogram-out", corr_dendro_out,
                        "write the merge list TSV here");
  corr_flags.add_common(correlate, true);
  correlate->add_option("--t", corr_flags.t, "campaign cutoff similarity");

  // sweep-t
  ConfigFlags st_flags;
  std::string st_probes, st_log, st_format = "zeek", st_out = "-";
  std::string st_grid = "0:1:0.05";
  CLI::App* sweep_t = app.add_subcommand(
      "sweep-t", "cluster counts across cutoff thresholds");
  sweep_t->add_option("--probes", st_probes, "probe TSV from detect");
  sweep_t->add_option("--log", st_log, "conn log (detect inline)");
  sweep_t->add_option("--format", st_format, "log format (zeek|csv)");
  sweep_t->add_option("--grid", st_grid, "start:stop:step or v1,v2,...");
  sweep_t->add_option("--out", st_out, "TSV output");
  st_flags.add_common(sweep_t, true);

  // sweep-epsilon
  ConfigFlags se_flags;
  std::string se_probes, se_log, se_format = "zeek", se_out = "-";
  std::string se_grid = "0:20:1";
  CLI::App* sweep_eps = app.add_subcommand(
      "sweep-epsilon", "retained scanners and probes per epsilon");
  sweep_eps->add_option("--probes", se_probes, "probe TSV from detect");
  sweep_eps->add_option("--log", se_log, "conn log (detect inline)");
  sweep_eps->add_option("--format", se_format, "log format (zeek|csv)");
  sweep_eps->add_option("--grid", se_grid, "start:stop:step or v1,v2,...");
  sweep_eps->add_option("--out", se_out, "TSV output");
  se_flags.add_common(sweep_eps, false);

  // stats
  ConfigFlags stats_flags;
  std::string stats_probes, stats_log, stats_format = "zeek", stats_out = "-";
  std::string stats_dist_dir;
  CLI::App* stats =
      app.add_subcommand("stats", "dataset statistics and distributions");
  stats->add_option("--probes", stats_probes, "probe TSV from detect");
  stats->add_option("--log", stats_log, "conn log (detect inline)");
  stats->add_option("--format", stats_format, "log format (zeek|csv)");
  stats->add_option("--out", stats_out, "stats JSON output");
  stats->add_option("--dist-dir", stats_dist_dir,
                    "directory for distribution TSVs");
  stats_flags.add_common(stats, false);

  // synth
  std::string synth_scenario, synth_log = "-", synth_truth, synth_geo;
  int64_t synth_seed = -1;
  CLI::App* synth =
      app.add_subcommand("synth", "generate a labeled synthetic conn log");
  synth->add_option("--scenario", synth_scenario, "scenario JSON")->required();
  synth->add_option("--seed", synth_seed, "override the scenario seed");
  synth->add_option("--log-out", synth_log, "conn log output");
  synth->add_option("--truth-out", synth_truth, "ground truth TSV output");
  synth->add_option("--geo-out", synth_geo, "matching geo CSV output");

  // eval
  std::string eval_report, eval_truth;
  CLI::App* eval = app.add_subcommand(
      "eval", "score a report against ground truth labels");
  eval->add_option("--report", eval_report, "report JSON from correlate")
      ->required();
  eval->add_option("--truth", eval_truth, "truth TSV from synth")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    corr_flags.threads_set = correlate->count("--threads") > 0;
    st_flags.threads_set = sweep_t->count("--threads") > 0;
    if (detect->parsed()) return cmd_detect(detect_flags, detect_log,
                                            detect_format, detect_out);
    if (correlate->parsed()) {
      if (corr_probes.empty() == corr_log.empty())
        throw Error(Errc::invalid_config,
                    "need exactly one of --probes or --log");
      return cmd_correlate(corr_flags, corr_probes, corr_log, corr_format,
                           corr_out, corr_matrix_out, corr_dendro_out);
    }
    if (sweep_t->parsed()) {
      if (st_probes.empty() == st_log.empty())
        throw Error(Errc::invalid_config,
                    "need exactly one of --probes or --log");
      return cmd_sweep_t(st_flags, st_probes, st_log, st_format, st_grid,
                         st_out);
    }
    if (sweep_eps->parsed()) {
      if (se_probes.empty() == se_log.empty())
        throw Error(Errc::invalid_config,
                    "need exactly one of --probes or --log");
      return cmd_sweep_epsilon(se_flags, se_probes, se_log, se_format, se_grid,
                               se_out);
    }
    if (stats->parsed()) {
      if (stats_probes.empty() == stats_log.empty())
        throw Error(Errc::invalid_config,
                    "need exactly one of --probes or --log");
      return cmd_stats(stats_flags, stats_probes, stats_log, stats_format,
                       stats_out, stats_dist_dir);
    }
    if (synth->parsed())
      return cmd_synth(synth_scenario, synth_seed, synth_log, synth_truth,
                       synth_geo);
    if (eval->parsed()) return cmd_eval(eval_report, eval_truth);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_input_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
