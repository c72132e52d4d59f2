#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <sstream>

#include "doctest.h"
#include "scancor/detect.hpp"
#include "scancor/error.hpp"
#include "scancor/ingest.hpp"
#include "scancor/synth.hpp"

using namespace scancor;

namespace {

CampaignSpec base_spec() {
  CampaignSpec cs;
  cs.label = "alpha";
  cs.scanner_count = 4;
  cs.source_cidr = *Cidr::parse("88.138.143.0/27");
  cs.source_location = GeoLocation{"FR", 46.2, 2.2, true};
  cs.src_port_strategy = SrcPortStrategy::fixed_shared;
  cs.dst_ports = {30443};
  cs.target_cidr = *Cidr::parse("198.18.0.0/16");
  cs.target_count = 100;
  cs.probes_min = 25;
  cs.probes_max = 25;
  cs.validation_retries = false;
  cs.ip_version = 4;
  return cs;
}

std::string serialize(const std::vector<ConnRecord>& records) {
  std::ostringstream out;
  write_conn_log(out, records);
  return out.str();
}

std::map<std::string, std::vector<ScanProbe>> probes_by_scanner(
    const std::vector<ConnRecord>& records) {
  ProbeClassifierConfig cfg;
  std::map<std::string, std::vector<ScanProbe>> out;
  for (const ConnRecord& r : records)
    if (auto p = classify_probe(r, cfg))
      out[p->scanner_ip.to_string()].push_back(*p);
  return out;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (SrcPortStrategy s :
       {SrcPortStrategy::fixed_shared, SrcPortStrategy::fixed_per_scanner,
        SrcPortStrategy::ephemeral_random})
    CHECK(src_port_strategy_from_name(src_port_strategy_name(s)) == s);
  CHECK_THROWS_AS(src_port_strategy_from_name("roulette"), Error);
}

TEST_CASE("scenario json round-trips") {
  Scenario sc;
  sc.seed = 42;
  sc.noise.benign_failures = 500;
  sc.noise.lone_scanners = 200;
  CampaignSpec cs = base_spec();
  cs.src_port_strategy = SrcPortStrategy::ephemeral_random;
  cs.dst_ports = {22, 23, 2323};
  cs.validation_retries = true;
  sc.campaigns.push_back(cs);

  std::istringstream in(scenario_to_json(sc).dump());
  Scenario back = load_scenario(in);
  CHECK(back.seed == 42);
  CHECK(back.noise.benign_failures == 500);
  CHECK(back.noise.lone_scanners == 200);
  REQUIRE(back.campaigns.size() == 1);
  const CampaignSpec& b = back.campaigns[0];
  CHECK(b.label == "alpha");
  CHECK(b.scanner_count == 4);
  CHECK(b.source_cidr.to_string() == "88.138.143.0/27");
  CHECK(b.source_location == cs.source_location);
  CHECK(b.src_port_strategy == SrcPortStrategy::ephemeral_random);
  CHECK(b.dst_ports == std::set<uint16_t>{22, 23, 2323});
  CHECK(b.target_cidr.to_string() == "198.18.0.0/16");
  CHECK(b.target_count == 100);
  CHECK(b.probes_min == 25);
  CHECK(b.probes_max == 25);
  CHECK(b.validation_retries);
  CHECK(b.ip_version == 4);
}

TEST_CASE("scenario parsing rejects malformed input") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return load_scenario(in);
  };
  CHECK_THROWS_AS(parse("not json"), Error);
  CHECK_THROWS_AS(parse("{\"seed\": 1}"), Error);
  CHECK_THROWS_AS(parse("{\"campaigns\": [{}]}"), Error);
  CHECK_THROWS_AS(
      parse("{\"campaigns\": [{\"scanners\": 2, \"source_cidr\": \"bad\","
            "\"dst_ports\": [22], \"target_pool\": {\"cidr\": \"10.0.0.0/8\","
            "\"count\": 5}, \"probes_per_scanner\": {\"min\": 1, \"max\": 1}"
            "}]}"),
      Error);
  CHECK_THROWS_AS(
      parse("{\"campaigns\": [{\"scanners\": 2, \"source_cidr\":"
            "\"10.0.0.0/24\", \"dst_ports\": [0], \"target_pool\": {\"cidr\":"
            "\"10.1.0.0/16\", \"count\": 5}, \"probes_per_scanner\":"
            "{\"min\": 1, \"max\": 1}}]}"),
      Error);
}

TEST_CASE("spec validation fires before generation") {
  auto gen = [](CampaignSpec cs) {
    std::vector<CampaignSpec> v = {std::move(cs)};
    return generate_dataset(v, NoiseSpec{}, 1);
  };
  CampaignSpec cs = base_spec();
  cs.scanner_count = 0;
  CHECK_THROWS_AS(gen(cs), Error);

  cs = base_spec();
  cs.label = "-";
  CHECK_THROWS_AS(gen(cs), Error);

  cs = base_spec();
  cs.dst_ports.clear();
  CHECK_THROWS_AS(gen(cs), Error);

  cs = base_spec();
  cs.probes_min = 10;
  cs.probes_max = 5;
  CHECK_THROWS_AS(gen(cs), Error);

  cs = base_spec();
  cs.ip_version = 6;  // v4 prefixes
  CHECK_THROWS_AS(gen(cs), Error);

  // /30 holds four addresses, not eight.
  cs = base_spec();
  cs.source_cidr = *Cidr::parse("10.0.0.0/30");
  cs.scanner_count = 8;
  CHECK_THROWS_WITH_AS(gen(cs), doctest::Contains("cannot hold"), Error);
}

TEST_CASE("generation is deterministic per seed") {
  std::vector<CampaignSpec> specs = {base_spec()};
  NoiseSpec noise;
  noise.lone_scanners = 20;
  noise.benign_failures = 30;

  SynthDataset a = generate_dataset(specs, noise, 99);
  SynthDataset b = generate_dataset(specs, noise, 99);
  CHECK(serialize(a.records) == serialize(b.records));
  CHECK(a.truth.labels == b.truth.labels);
  CHECK(a.truth.noise_scanners == b.truth.noise_scanners);

  SynthDataset c = generate_dataset(specs, noise, 100);
  CHECK(serialize(a.records) != serialize(c.records));
}

TEST_CASE("campaign draws are isolated per campaign index") {
  CampaignSpec first = base_spec();
  CampaignSpec second = base_spec();
  second.label = "beta";
  second.source_cidr = *Cidr::parse("203.0.113.0/27");
  second.target_cidr = *Cidr::parse("198.19.0.0/16");
  second.dst_ports = {23};

  std::vector<CampaignSpec> solo = {first};
  std::vector<CampaignSpec> both = {first, second};
  SynthDataset a = generate_dataset(solo, NoiseSpec{}, 7);
  SynthDataset b = generate_dataset(both, NoiseSpec{}, 7);

  auto alpha_only = [](const SynthDataset& ds) {
    std::vector<ConnRecord> out;
    for (const ConnRecord& r : ds.records) {
      auto it = ds.truth.labels.find(r.orig_ip);
      if (it != ds.truth.labels.end() && it->second == "alpha")
        out.push_back(r);
    }
    return out;
  };
  CHECK(serialize(alpha_only(a)) == serialize(alpha_only(b)));
  CHECK(b.truth.labels.size() == a.truth.labels.size() + 4);
}

TEST_CASE("scanners split the target pool evenly") {
  std::vector<CampaignSpec> specs = {base_spec()};
  SynthDataset ds = generate_dataset(specs, NoiseSpec{}, 5);

  auto by_scanner = probes_by_scanner(ds.records);
  REQUIRE(by_scanner.size() == 4);

  std::set<std::string> all_targets;
  std::set<uint16_t> src_ports;
  for (const auto& [scanner, probes] : by_scanner) {
    CHECK(ds.truth.labels.at(*IpAddress::parse(scanner)) == "alpha");
    CHECK(specs[0].source_cidr.contains(*IpAddress::parse(scanner)));
    CHECK(probes.size() == 25);
    std::set<std::string> hosts;
    for (const ScanProbe& p : probes) {
      CHECK(p.target_port == 30443);
      CHECK(specs[0].target_cidr.contains(p.target_ip));
      hosts.insert(p.target_ip.to_string());
      src_ports.insert(p.src_port);
      CHECK(p.ts >= 1557014400.0);
      CHECK(p.ts < 1557014400.0 + 900.0);
    }
    CHECK(hosts.size() == 25);  // no repeats, distinct hosts
    for (const std::string& h : hosts) CHECK(all_targets.insert(h).second);
  }
  CHECK(all_targets.size() == 100);  // disjoint slices cover the pool
  CHECK(src_ports.size() == 1);     // fixed_shared

  for (const ConnRecord& r : ds.records) {
    CHECK(r.conn_state == "S0");
    CHECK(r.proto == Proto::tcp);
  }

  REQUIRE(ds.geo.size() == 1);
  CHECK(ds.geo[0].network == specs[0].source_cidr);
  CHECK(ds.geo[0].location.country == "FR");
}

TEST_CASE("validation retries double every pair") {
  CampaignSpec cs = base_spec();
  cs.validation_retries = true;
  cs.dst_ports = {22, 23};
  cs.probes_min = 100;  // per pass: 25 hosts * 2 ports * 2 = 100
  cs.probes_max = 100;
  std::vector<CampaignSpec> specs = {cs};
  SynthDataset ds = generate_dataset(specs, NoiseSpec{}, 5);

  for (const auto& [scanner, probes] : probes_by_scanner(ds.records)) {
    CHECK(probes.size() == 100);
    std::map<std::pair<std::string, uint16_t>, int> pair_counts;
    for (const ScanProbe& p : probes)
      ++pair_counts[{p.target_ip.to_string(), p.target_port}];
    for (const auto& [pair, count] : pair_counts) CHECK(count == 2);
  }
}

TEST_CASE("probe budget rounds up to whole sweeps") {
  CampaignSpec cs = base_spec();
  cs.probes_min = 30;  // per pass is 25, so two passes
  cs.probes_max = 30;
  std::vector<CampaignSpec> specs = {cs};
  SynthDataset ds = generate_dataset(specs, NoiseSpec{}, 5);
  for (const auto& [scanner, probes] : probes_by_scanner(ds.records))
    CHECK(probes.size() == 50);
}

TEST_CASE("per-scanner and ephemeral source ports") {
  CampaignSpec cs = base_spec();
  cs.src_port_strategy = SrcPortStrategy::fixed_per_scanner;
  std::vector<CampaignSpec> specs = {cs};
  SynthDataset ds = generate_dataset(specs, NoiseSpec{}, 11);
  std::set<uint16_t> distinct;
  for (const auto& [scanner, probes] : probes_by_scanner(ds.records)) {
    std::set<uint16_t> own;
    for (const ScanProbe& p : probes) own.insert(p.src_port);
    CHECK(own.size() == 1);
    distinct.insert(*own.begin());
  }
  CHECK(distinct.size() > 1);

  cs.src_port_strategy = SrcPortStrategy::ephemeral_random;
  specs = {cs};
  SynthDataset eph = generate_dataset(specs, NoiseSpec{}, 11);
  for (const auto& [scanner, probes] : probes_by_scanner(eph.records)) {
    std::set<uint16_t> own;
    for (const ScanProbe& p : probes) {
      CHECK(p.src_port >= 32768);
      CHECK(p.src_port <= 60999);
      own.insert(p.src_port);
    }
    CHECK(own.size() > 5);
  }
}

TEST_CASE("more scanners than targets still yields a probe per scanner") {
  CampaignSpec cs = base_spec();
  cs.scanner_count = 8;
  cs.target_count = 3;
  cs.probes_min = 1;
  cs.probes_max = 1;
  std::vector<CampaignSpec> specs = {cs};
  SynthDataset ds = generate_dataset(specs, NoiseSpec{}, 5);
  auto by_scanner = probes_by_scanner(ds.records);
  CHECK(by_scanner.size() == 8);
  for (const auto& [scanner, probes] : by_scanner)
    CHECK(!probes.empty());
}

TEST_CASE("noise scanners stay clear of campaign space") {
  std::vector<CampaignSpec> specs = {base_spec()};
  NoiseSpec noise;
  noise.lone_scanners = 40;
  noise.benign_failures = 25;
  SynthDataset ds = generate_dataset(specs, noise, 13);

  CHECK(ds.truth.noise_scanners.size() == 40);
  std::set<IpAddress> noise_set(ds.truth.noise_scanners.begin(),
                                ds.truth.noise_scanners.end());
  CHECK(noise_set.size() == 40);
  for (const IpAddress& ip : noise_set) {
    CHECK_FALSE(specs[0].source_cidr.contains(ip));
    CHECK(ds.truth.labels.count(ip) == 0);
  }
  // One geo row per campaign plus one per lone scanner.
  CHECK(ds.geo.size() == 41);

  // Benign sources appear in no truth table and send at most two records.
  std::map<std::string, int> per_source;
  for (const ConnRecord& r : ds.records) ++per_source[r.orig_ip.to_string()];
  int benign_sources = 0;
  for (const auto& [src, count] : per_source) {
    IpAddress ip = *IpAddress::parse(src);
    if (ds.truth.labels.count(ip) || noise_set.count(ip)) continue;
    ++benign_sources;
    CHECK(count <= 2);
  }
  CHECK(benign_sources == 25);
}

TEST_CASE("truth tsv round-trips") {
  GroundTruth truth;
  truth.labels[*IpAddress::parse("10.0.0.1")] = "alpha";
  truth.labels[*IpAddress::parse("10.0.0.2")] = "alpha";
  truth.labels[*IpAddress::parse("192.168.1.9")] = "beta";
  truth.noise_scanners = {*IpAddress::parse("172.16.0.5")};

  std::ostringstream out;
  write_truth_tsv(out, truth);
  std::istringstream in(out.str());
  GroundTruth back = read_truth_tsv(in);
  CHECK(back.labels == truth.labels);
  CHECK(back.noise_scanners == truth.noise_scanners);

  std::istringstream empty("");
  CHECK_THROWS_AS(read_truth_tsv(empty), Error);
  std::istringstream bad("scanner_ip\tlabel\njunk\talpha\n");
  CHECK_THROWS_AS(read_truth_tsv(bad), Error);
}

TEST_CASE("pairwise eval counts pairs by label") {
  auto addr = [](int i) {
    return *IpAddress::parse("10.0.0." + std::to_string(i));
  };
  GroundTruth truth;
  truth.labels[addr(1)] = "a";
  truth.labels[addr(2)] = "a";
  truth.labels[addr(3)] = "a";
  truth.labels[addr(4)] = "b";
  truth.labels[addr(5)] = "b";
  truth.noise_scanners = {addr(6)};

  std::vector<std::vector<IpAddress>> predicted = {
      {addr(1), addr(2)}, {addr(3), addr(4)}, {addr(5)}, {addr(6), addr(7)}};
  PairwiseEval ev = pairwise_eval(predicted, truth);
  CHECK(ev.truth_pairs == 4);
  CHECK(ev.predicted_pairs == 3);
  CHECK(ev.true_pairs == 1);
  CHECK(ev.precision == 1.0 / 3.0);
  CHECK(ev.recall == 0.25);
  CHECK(ev.f1 == doctest::Approx(2.0 / 7.0));

  // Perfect grouping.
  std::vector<std::vector<IpAddress>> exact = {{addr(1), addr(2), addr(3)},
                                               {addr(4), addr(5)}};
  PairwiseEval good = pairwise_eval(exact, truth);
  CHECK(good.precision == 1.0);
  CHECK(good.recall == 1.0);
  CHECK(good.f1 == 1.0);

  // Conventions at the degenerate ends.
  PairwiseEval none = pairwise_eval(std::vector<std::vector<IpAddress>>{},
                                    truth);
  CHECK(none.precision == 1.0);
  CHECK(none.recall == 0.0);

  GroundTruth empty_truth;
  PairwiseEval no_truth = pairwise_eval(exact, empty_truth);
  CHECK(no_truth.recall == 1.0);
  CHECK(no_truth.precision == 0.0);

  std::vector<std::vector<IpAddress>> wrong = {{addr(1), addr(4)}};
  PairwiseEval zero = pairwise_eval(wrong, truth);
  CHECK(zero.precision == 0.0);
  CHECK(zero.recall == 0.0);
  CHECK(zero.f1 == 0.0);
}
