#include "scancor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <ostream>
#include <unordered_set>

#include "scancor/error.hpp"
#include "scancor/rng.hpp"
#include "scancor/strings.hpp"

namespace scancor {

const char* src_port_strategy_name(SrcPortStrategy s) {
  switch (s) {
    case SrcPortStrategy::fixed_shared: return "fixed_shared";
    case SrcPortStrategy::fixed_per_scanner: return "fixed_per_scanner";
    case SrcPortStrategy::ephemeral_random: return "ephemeral_random";
  }
  return "?";
}

SrcPortStrategy src_port_strategy_from_name(std::string_view name) {
  if (name == "fixed_shared") return SrcPortStrategy::fixed_shared;
  if (name == "fixed_per_scanner") return SrcPortStrategy::fixed_per_scanner;
  if (name == "ephemeral_random") return SrcPortStrategy::ephemeral_random;
  throw Error(Errc::invalid_config,
              "unknown src_port_strategy '" + std::string(name) + "'");
}

namespace {

constexpr double kWindowStart = 1557014400.0;  // one fixed 15 min window
constexpr double kWindowSeconds = 900.0;

struct CountryPoint {
  const char* cc;
  double lat, lon;
};

// Rough country centroids for randomized noise locations.
constexpr CountryPoint kCountries[] = {
    {"US", 39.8, -98.6}, {"CN", 35.9, 104.2},  {"DE", 51.2, 10.4},
    {"NL", 52.1, 5.3},   {"FR", 46.2, 2.2},    {"GB", 54.0, -2.9},
    {"RU", 61.5, 105.3}, {"BR", -14.2, -51.9}, {"IN", 20.6, 79.0},
    {"JP", 36.2, 138.3}, {"KR", 35.9, 127.8},  {"CA", 56.1, -106.3},
    {"AU", -25.3, 133.8},{"IT", 41.9, 12.6},   {"ES", 40.5, -3.7},
    {"SE", 60.1, 18.6},  {"PL", 51.9, 19.1},   {"TR", 39.0, 35.2},
    {"ZA", -30.6, 22.9}, {"MX", 23.6, -102.6}, {"AR", -38.4, -63.6},
    {"UA", 48.4, 31.2},  {"VN", 14.1, 108.3},  {"TH", 15.9, 101.0},
};

uint64_t cidr_capacity(const Cidr& cidr) {
  int bits = cidr.host_bits();
  if (bits >= 64) return UINT64_MAX;
  return 1ULL << bits;
}

using IpSet = std::unordered_set<IpAddress, IpHash>;

/// Distinct addresses from a prefix, ascending, never colliding with
/// `used`. Marks the picks as used.
std::vector<IpAddress> sample_distinct_ips(const Cidr& cidr, uint64_t count,
                                           Rng& rng, IpSet& used) {
  uint64_t cap = cidr_capacity(cidr);
  if (count > cap)
    throw Error(Errc::spec_capacity_exceeded,
                cidr.to_string() + " cannot hold " + std::to_string(count) +
                    " distinct addresses");
  std::vector<IpAddress> out;
  out.reserve(count);
  if (cap != UINT64_MAX && count * 3 >= cap && cap <= (1u << 20)) {
    std::vector<uint64_t> offsets;
    offsets.reserve(cap);
    for (uint64_t o = 0; o < cap; ++o)
      if (!used.count(ip_add_offset(cidr.base(), o))) offsets.push_back(o);
    if (offsets.size() < count)
      throw Error(Errc::spec_capacity_exceeded,
                  cidr.to_string() + " has too few free addresses");
    for (uint64_t i = 0; i < count; ++i) {
      uint64_t j = rng.uniform(i, offsets.size() - 1);
      std::swap(offsets[i], offsets[j]);
    }
    offsets.resize(count);
    std::sort(offsets.begin(), offsets.end());
    for (uint64_t o : offsets) out.push_back(ip_add_offset(cidr.base(), o));
  } else {
    std::set<uint64_t> chosen;
    uint64_t attempts = 0, limit = 200 * count + 1000;
    while (chosen.size() < count) {
      if (++attempts > limit)
        throw Error(Errc::spec_capacity_exceeded,
                    "address sampling stalled in " + cidr.to_string());
      uint64_t o = rng.uniform(0, cap - 1);
      if (chosen.count(o)) continue;
      IpAddress ip = ip_add_offset(cidr.base(), o);
      if (used.count(ip)) continue;
      chosen.insert(o);
    }
    for (uint64_t o : chosen) out.push_back(ip_add_offset(cidr.base(), o));
  }
  for (const IpAddress& ip : out) used.insert(ip);
  return out;
}

double draw_ts(Rng& rng) {
  uint64_t us = rng.uniform(0, (uint64_t)(kWindowSeconds * 1e6) - 1);
  return kWindowStart + (double)us * 1e-6;
}

uint16_t draw_port(Rng& rng, uint32_t lo, uint32_t hi) {
  return (uint16_t)rng.uniform(lo, hi);
}

ConnRecord make_record(double ts, const IpAddress& src, uint16_t sp,
                       const IpAddress& dst, uint16_t dp, const char* state) {
  ConnRecord r;
  r.ts = ts;
  r.orig_ip = src;
  r.orig_port = sp;
  r.resp_ip = dst;
  r.resp_port = dp;
  r.proto = Proto::tcp;
  r.conn_state = state;
  return r;
}

IpAddress draw_address(Rng& rng, int version) {
  if (version == 4) {
    uint8_t a;
    do {
      a = (uint8_t)rng.uniform(1, 223);
    } while (a == 127);
    uint8_t b[4] = {a, (uint8_t)rng.uniform(0, 255),
                    (uint8_t)rng.uniform(0, 255), (uint8_t)rng.uniform(0, 255)};
    return IpAddress::from_bytes(b, 4);
  }
  uint8_t b[16];
  b[0] = 0x20;
  b[1] = 0x01;
  for (int i = 2; i < 16; ++i) b[i] = (uint8_t)rng.uniform(0, 255);
  return IpAddress::from_bytes(b, 16);
}

void validate_spec(const CampaignSpec& cs, size_t index) {
  auto bad = [&](const std::string& what) -> Error {
    return Error(Errc::invalid_config,
                 "campaign " + std::to_string(index) + ": " + what);
  };
  if (cs.scanner_count < 1) throw bad("needs at least one scanner");
  if (cs.label == "-") throw bad("label '-' is reserved for noise");
  if (cs.dst_ports.empty()) throw bad("dst_ports is empty");
  if (cs.target_count < 1) throw bad("needs at least one target");
  if (cs.probes_min < 1 || cs.probes_min > cs.probes_max)
    throw bad("probes_per_scanner range is invalid");
  if (cs.ip_version != 4 && cs.ip_version != 6)
    throw bad("ip_version must be 4 or 6");
  if (cs.source_cidr.base().version() != cs.ip_version ||
      cs.target_cidr.base().version() != cs.ip_version)
    throw bad("cidr families disagree with ip_version");
  if (cs.source_location.has_coords && !cs.source_location.known())
    throw bad("coordinates need a country");
}

}  // namespace

SynthDataset generate_dataset(std::span<const CampaignSpec> campaigns,
                              const NoiseSpec& noise, uint64_t seed) {
  for (size_t i = 0; i < campaigns.size(); ++i) validate_spec(campaigns[i], i);

  SynthDataset out;
  IpSet used_sources;

  for (size_t ci = 0; ci < campaigns.size(); ++ci) {
    const CampaignSpec& cs = campaigns[ci];
    const std::string label =
        cs.label.empty() ? "campaign_" + std::to_string(ci) : cs.label;
    const std::vector<uint16_t> ports(cs.dst_ports.begin(),
                                      cs.dst_ports.end());

    Rng crng = Rng::stream(seed, 1, ci);
    std::vector<IpAddress> scanners =
        sample_distinct_ips(cs.source_cidr, cs.scanner_count, crng,
                            used_sources);
    const uint16_t shared_port = draw_port(crng, 1024, 65535);

    Rng trng = Rng::stream(seed, 2, ci);
    IpSet target_used;
    std::vector<IpAddress> targets =
        sample_distinct_ips(cs.target_cidr, cs.target_count, trng,
                            target_used);

    if (cs.source_location.known())
      out.geo.push_back(GeoEntry{cs.source_cidr, cs.source_location});

    // Equal contiguous slices of the sorted target pool; the first
    // target_count % scanner_count slices are one host longer.
    const uint64_t base_len = cs.target_count / cs.scanner_count;
    const uint64_t longer = cs.target_count % cs.scanner_count;
    uint64_t slice_begin = 0;

    for (size_t si = 0; si < scanners.size(); ++si) {
      const IpAddress& scanner = scanners[si];
      out.truth.labels[scanner] = label;

      uint64_t slice_len = base_len + (si < longer ? 1 : 0);
      if (slice_len == 0) slice_len = 1;  // more scanners than targets
      if (slice_begin + slice_len > cs.target_count)
        slice_begin = cs.target_count - slice_len;

      Rng srng = Rng::stream(seed, 3, ci, si);
      const uint16_t fixed_port =
          cs.src_port_strategy == SrcPortStrategy::fixed_per_scanner
              ? draw_port(srng, 1024, 65535)
              : shared_port;
      const uint64_t budget = srng.uniform(cs.probes_min, cs.probes_max);
      const uint64_t mult = cs.validation_retries ? 2 : 1;
      const uint64_t per_pass = slice_len * ports.size() * mult;
      const uint64_t passes = std::max<uint64_t>(1, (budget + per_pass - 1) / per_pass);

      for (uint64_t pass = 0; pass < passes; ++pass) {
        for (uint64_t h = 0; h < slice_len; ++h) {
          const IpAddress& host = targets[slice_begin + h];
          for (uint16_t port : ports) {
            for (uint64_t rep = 0; rep < mult; ++rep) {
              uint16_t sp =
                  cs.src_port_strategy == SrcPortStrategy::ephemeral_random
                      ? draw_port(srng, 32768, 60999)
                      : fixed_port;
              out.records.push_back(
                  make_record(draw_ts(srng), scanner, sp, host, port, "S0"));
            }
          }
        }
      }
      slice_begin += slice_len;
    }
  }

  std::vector<Cidr> campaign_blocks;
  for (const CampaignSpec& cs : campaigns)
    campaign_blocks.push_back(cs.source_cidr);
  auto in_campaign_space = [&](const IpAddress& ip) {
    for (const Cidr& c : campaign_blocks)
      if (c.contains(ip)) return true;
    return false;
  };
  auto draw_free_address = [&](Rng& rng, int version) {
    for (int tries = 0; tries < 4096; ++tries) {
      IpAddress ip = draw_address(rng, version);
      if (used_sources.count(ip) || in_campaign_space(ip)) continue;
      return ip;
    }
    throw Error(Errc::internal, "address space exhausted");
  };

  for (uint32_t i = 0; i < noise.lone_scanners; ++i) {
    Rng rng = Rng::stream(seed, 4, i);
    const int version = rng.uniform(0, 7) == 0 ? 6 : 4;
    IpAddress scanner = draw_free_address(rng, version);
    used_sources.insert(scanner);
    out.truth.noise_scanners.push_back(scanner);

    uint64_t port_roll = rng.uniform(0, 99);
    uint64_t nports = port_roll < 45   ? 1
                      : port_roll < 75 ? rng.uniform(2, 9)
                                       : rng.uniform(11, 40);
    std::set<uint16_t> port_set;
    while (port_set.size() < nports)
      port_set.insert(draw_port(rng, 1, 65535));
    std::vector<uint16_t> ports(port_set.begin(), port_set.end());

    uint64_t hosts =
        (uint64_t)std::llround(std::exp(rng.uniform_real() * std::log(300.0)));
    hosts = std::clamp<uint64_t>(hosts, 1, 300);
    if (hosts * ports.size() > 600)
      hosts = std::max<uint64_t>(1, 600 / ports.size());
    std::set<IpAddress> target_set;
    while (target_set.size() < hosts)
      target_set.insert(draw_address(rng, version));

    const bool spray = ports.size() >= 2 && rng.uniform(0, 99) < 30;
    const uint64_t mult = rng.uniform(0, 99) < 25 ? 2 : 1;
    const bool ephemeral = rng.uniform(0, 99) >= 60;
    const uint16_t fixed_port = draw_port(rng, 1024, 65535);

    const CountryPoint& country =
        kCountries[rng.uniform(0, std::size(kCountries) - 1)];
    GeoLocation loc;
    loc.country = country.cc;
    loc.lat = country.lat + rng.uniform_real(-3.0, 3.0);
    loc.lon = country.lon + rng.uniform_real(-3.0, 3.0);
    loc.has_coords = true;
    out.geo.push_back(
        GeoEntry{Cidr::from_prefix(scanner, version == 4 ? 24 : 48), loc});

    for (const IpAddress& host : target_set) {
      if (spray) {
        uint16_t port = ports[rng.uniform(0, ports.size() - 1)];
        for (uint64_t rep = 0; rep < mult; ++rep) {
          uint16_t sp = ephemeral ? draw_port(rng, 32768, 60999) : fixed_port;
          out.records.push_back(
              make_record(draw_ts(rng), scanner, sp, host, port, "S0"));
        }
      } else {
        for (uint16_t port : ports) {
          for (uint64_t rep = 0; rep < mult; ++rep) {
            uint16_t sp =
                ephemeral ? draw_port(rng, 32768, 60999) : fixed_port;
            out.records.push_back(
                make_record(draw_ts(rng), scanner, sp, host, port, "S0"));
          }
        }
      }
    }
  }

  for (uint32_t i = 0; i < noise.benign_failures; ++i) {
    Rng rng = Rng::stream(seed, 5, i);
    IpAddress src = draw_free_address(rng, 4);
    used_sources.insert(src);
    uint64_t attempts = rng.uniform(1, 2);
    for (uint64_t k = 0; k < attempts; ++k) {
      const char* state = rng.uniform(0, 1) ? "S0" : "REJ";
      out.records.push_back(make_record(
          draw_ts(rng), src, draw_port(rng, 32768, 60999),
          draw_address(rng, 4), draw_port(rng, 1, 65535), state));
    }
  }

  return out;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& what) -> Error {
    return Error(Errc::invalid_config, "scenario: " + what);
  };
  try {
    Scenario sc;
    sc.seed = j.value("seed", (uint64_t)1);
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      sc.noise.benign_failures = n.value("benign_failures", 0u);
      sc.noise.lone_scanners = n.value("lone_scanners", 0u);
    }
    if (!j.contains("campaigns") || !j.at("campaigns").is_array())
      throw bad("needs a campaigns array");
    for (const auto& cj : j.at("campaigns")) {
      CampaignSpec cs;
      cs.label = cj.value("label", std::string());
      cs.scanner_count = cj.at("scanners").get<uint32_t>();
      auto source = Cidr::parse(cj.at("source_cidr").get<std::string>());
      if (!source) throw bad("bad source_cidr");
      cs.source_cidr = *source;
      if (cj.contains("location")) {
        const auto& lj = cj.at("location");
        cs.source_location.country = lj.value("country", std::string());
        if (lj.contains("lat") && lj.contains("lon")) {
          cs.source_location.lat = lj.at("lat").get<double>();
          cs.source_location.lon = lj.at("lon").get<double>();
          cs.source_location.has_coords = true;
        }
      }
      cs.src_port_strategy = src_port_strategy_from_name(
          cj.value("src_port_strategy", "fixed_per_scanner"));
      for (const auto& p : cj.at("dst_ports")) {
        uint32_t v = p.get<uint32_t>();
        if (v == 0 || v > 65535) throw bad("bad dst_port");
        cs.dst_ports.insert((uint16_t)v);
      }
      const auto& pool = cj.at("target_pool");
      auto tcidr = Cidr::parse(pool.at("cidr").get<std::string>());
      if (!tcidr) throw bad("bad target_pool.cidr");
      cs.target_cidr = *tcidr;
      cs.target_count = pool.at("count").get<uint32_t>();
      const auto& pps = cj.at("probes_per_scanner");
      cs.probes_min = pps.at("min").get<uint32_t>();
      cs.probes_max = pps.at("max").get<uint32_t>();
      cs.validation_retries = cj.value("validation_retries", false);
      cs.ip_version = cj.value("ip_version", cs.source_cidr.base().version());
      sc.campaigns.push_back(std::move(cs));
    }
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw bad(e.what());
  }
}

nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["seed"] = sc.seed;
  j["noise"] = {{"benign_failures", sc.noise.benign_failures},
                {"lone_scanners", sc.noise.lone_scanners}};
  nlohmann::json arr = nlohmann::json::array();
  for (const CampaignSpec& cs : sc.campaigns) {
    nlohmann::json cj;
    if (!cs.label.empty()) cj["label"] = cs.label;
    cj["scanners"] = cs.scanner_count;
    cj["source_cidr"] = cs.source_cidr.to_string();
    if (cs.source_location.known()) {
      nlohmann::json lj;
      lj["country"] = cs.source_location.country;
      if (cs.source_location.has_coords) {
        lj["lat"] = cs.source_location.lat;
        lj["lon"] = cs.source_location.lon;
      }
      cj["location"] = std::move(lj);
    }
    cj["src_port_strategy"] = src_port_strategy_name(cs.src_port_strategy);
    cj["dst_ports"] = cs.dst_ports;
    cj["target_pool"] = {{"cidr", cs.target_cidr.to_string()},
                         {"count", cs.target_count}};
    cj["probes_per_scanner"] = {{"min", cs.probes_min},
                                {"max", cs.probes_max}};
    cj["validation_retries"] = cs.validation_retries;
    cj["ip_version"] = cs.ip_version;
    arr.push_back(std::move(cj));
  }
  j["campaigns"] = std::move(arr);
  return j;
}

Scenario load_scenario(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config,
                std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

void write_truth_tsv(std::ostream& out, const GroundTruth& truth) {
  out << "scanner_ip\tlabel\n";
  for (const auto& [ip, label] : truth.labels)
    out << ip.to_string() << '\t' << label << '\n';
  for (const IpAddress& ip : truth.noise_scanners)
    out << ip.to_string() << "\t-\n";
}

GroundTruth read_truth_tsv(std::istream& in) {
  GroundTruth truth;
  std::string line;
  uint64_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line != "scanner_ip\tlabel")
        throw Error(Errc::missing_header, "not a truth TSV");
      have_header = true;
      continue;
    }
    std::vector<std::string_view> f = split(line, '\t');
    if (f.size() != 2)
      throw Error(Errc::malformed_line,
                  "truth TSV line " + std::to_string(line_no));
    auto ip = IpAddress::parse(f[0]);
    if (!ip)
      throw Error(Errc::malformed_line,
                  "truth TSV line " + std::to_string(line_no) +
                      ": bad address");
    if (f[1] == "-")
      truth.noise_scanners.push_back(*ip);
    else
      truth.labels[*ip] = std::string(f[1]);
  }
  if (!have_header) throw Error(Errc::missing_header, "not a truth TSV");
  return truth;
}

PairwiseEval pairwise_eval(std::span<const std::vector<IpAddress>> predicted,
                           const GroundTruth& truth) {
  PairwiseEval ev;
  std::map<std::string, uint64_t> group_sizes;
  for (const auto& [ip, label] : truth.labels) ++group_sizes[label];
  for (const auto& [label, size] : group_sizes)
    ev.truth_pairs += size * (size - 1) / 2;

  for (const std::vector<IpAddress>& group : predicted) {
    ev.predicted_pairs += group.size() * (group.size() - 1) / 2;
    for (size_t i = 0; i < group.size(); ++i) {
      auto it = truth.labels.find(group[i]);
      if (it == truth.labels.end()) continue;
      for (size_t j = i + 1; j < group.size(); ++j) {
        auto jt = truth.labels.find(group[j]);
        if (jt != truth.labels.end() && jt->second == it->second)
          ++ev.true_pairs;
      }
    }
  }

  ev.precision = ev.predicted_pairs
                     ? (double)ev.true_pairs / (double)ev.predicted_pairs
                     : 1.0;
  ev.recall =
      ev.truth_pairs ? (double)ev.true_pairs / (double)ev.truth_pairs : 1.0;
  ev.f1 = (ev.precision + ev.recall > 0)
              ? 2 * ev.precision * ev.recall / (ev.precision + ev.recall)
              : 0.0;
  return ev;
}

PairwiseEval pairwise_eval(std::span<const Campaign> predicted,
                           const GroundTruth& truth) {
  std::vector<std::vector<IpAddress>> groups;
  groups.reserve(predicted.size());
  for (const Campaign& c : predicted) groups.push_back(c.members);
  return pairwise_eval(groups, truth);
}

}  // namespace scancor
