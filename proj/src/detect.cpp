#include "scancor/detect.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "scancor/error.hpp"
#include "scancor/strings.hpp"

namespace scancor {

std::optional<ScanProbe> classify_probe(const ConnRecord& rec,
                                        const ProbeClassifierConfig& cfg) {
  if (!cfg.protocols.count(rec.proto)) return std::nullopt;
  if (!cfg.probe_states.count(rec.conn_state)) return std::nullopt;
  ScanProbe p;
  p.scanner_ip = rec.orig_ip;
  p.src_port = rec.orig_port;
  p.target_ip = rec.resp_ip;
  p.target_port = rec.resp_port;
  p.ts = rec.ts;
  return p;
}

void ScannerAggregator::add(ScanProbe probe) {
  IpAddress key = probe.scanner_ip;
  by_scanner_[key].push_back(std::move(probe));
  ++probes_;
}

std::vector<ScannerProfile> ScannerAggregator::take_profiles() {
  std::vector<ScannerProfile> out;
  out.reserve(by_scanner_.size());
  for (auto& [ip, probes] : by_scanner_)
    out.push_back(ScannerProfile{ip, std::move(probes)});
  by_scanner_.clear();
  probes_ = 0;
  std::sort(out.begin(), out.end(),
            [](const ScannerProfile& a, const ScannerProfile& b) {
              return a.scanner_ip < b.scanner_ip;
            });
  return out;
}

std::vector<ScannerProfile> aggregate_scanners(
    std::span<const ScanProbe> probes) {
  ScannerAggregator agg;
  for (const ScanProbe& p : probes) agg.add(p);
  return agg.take_profiles();
}

std::vector<ScannerProfile> filter_epsilon(std::vector<ScannerProfile> profiles,
                                           uint64_t epsilon) {
  std::erase_if(profiles, [epsilon](const ScannerProfile& p) {
    return p.probes.size() < epsilon;
  });
  return profiles;
}

void write_probe_tsv_header(std::ostream& out) {
  out << "scanner_ip\tsrc_port\ttarget_ip\ttarget_port\tts\n";
}

void write_probe_tsv_row(std::ostream& out, const ScanProbe& p) {
  out << p.scanner_ip.to_string() << '\t' << p.src_port << '\t'
      << p.target_ip.to_string() << '\t' << p.target_port << '\t'
      << format_double(p.ts) << '\n';
}

void write_probe_tsv(std::ostream& out, std::span<const ScanProbe> probes) {
  write_probe_tsv_header(out);
  for (const ScanProbe& p : probes) write_probe_tsv_row(out, p);
}

std::vector<ScanProbe> read_probe_tsv(std::istream& in) {
  std::vector<ScanProbe> out;
  std::string line;
  uint64_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line != "scanner_ip\tsrc_port\ttarget_ip\ttarget_port\tts")
        throw Error(Errc::missing_header, "not a probe TSV");
      have_header = true;
      continue;
    }
    std::vector<std::string_view> f = split(line, '\t');
    auto bad = [&](const char* what) -> Error {
      return Error(Errc::malformed_line,
                   "probe TSV line " + std::to_string(line_no) + ": " + what);
    };
    if (f.size() != 5) throw bad("wrong column count");
    ScanProbe p;
    auto sip = IpAddress::parse(f[0]);
    auto tip = IpAddress::parse(f[2]);
    auto sp = parse_int<uint32_t>(f[1]);
    auto tp = parse_int<uint32_t>(f[3]);
    auto ts = parse_double(f[4]);
    if (!sip || !tip) throw bad("bad address");
    if (!sp || *sp > 65535 || !tp || *tp > 65535) throw bad("bad port");
    if (!ts || !std::isfinite(*ts) || *ts < 0) throw bad("bad ts");
    p.scanner_ip = *sip;
    p.src_port = (uint16_t)*sp;
    p.target_ip = *tip;
    p.target_port = (uint16_t)*tp;
    p.ts = *ts;
    out.push_back(p);
  }
  if (!have_header) throw Error(Errc::missing_header, "not a probe TSV");
  return out;
}

}  // namespace scancor
