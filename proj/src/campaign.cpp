#include "scancor/campaign.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "scancor/error.hpp"

namespace scancor {

FingerprintIndex index_fingerprints(std::span<const Fingerprint> fingerprints) {
  FingerprintIndex idx;
  idx.reserve(fingerprints.size());
  for (const Fingerprint& fp : fingerprints) idx[fp.scanner_ip] = &fp;
  return idx;
}

Cidr minimal_covering_cidr(std::span<const IpAddress> addrs) {
  if (addrs.empty())
    throw Error(Errc::internal, "covering prefix of an empty set");
  const IpAddress& first = addrs.front();
  int prefix = first.bit_width();
  for (const IpAddress& ip : addrs) {
    if (ip.version() != first.version())
      throw Error(Errc::mixed_versions,
                  "cannot cover v4 and v6 addresses with one prefix");
    prefix = std::min(prefix, common_prefix_bits(first, ip));
  }
  return Cidr::from_prefix(first, prefix);
}

CampaignSummary summarize_campaign(const Campaign& campaign,
                                   const FingerprintIndex& index) {
  CampaignSummary s;
  s.members = campaign.members;
  std::sort(s.members.begin(), s.members.end());
  s.formation_similarity = campaign.formation_similarity;
  s.member_count = s.members.size();

  std::set<PortClass> src, dst;
  std::set<bool> vert, horiz, valid;
  std::set<int> versions;
  std::set<std::string> countries;
  std::vector<IpAddress> v4, v6;
  bool first = true;
  for (const IpAddress& ip : s.members) {
    auto it = index.find(ip);
    if (it == index.end())
      throw Error(Errc::missing_fingerprint,
                  "no fingerprint for " + ip.to_string());
    const Fingerprint& fp = *it->second;
    s.total_probes += fp.probe_count;
    src.insert(fp.src_ports);
    dst.insert(fp.dst_ports);
    vert.insert(fp.vertical);
    horiz.insert(fp.horizontal);
    valid.insert(fp.validation);
    versions.insert(fp.ip_version);
    countries.insert(fp.location.known() ? fp.location.country : "??");
    (fp.ip_version == 4 ? v4 : v6).push_back(ip);
    if (first) {
      s.target_hosts_range = {fp.target_hosts, fp.target_hosts};
      s.probe_count_range = {fp.probe_count, fp.probe_count};
      first = false;
    } else {
      s.target_hosts_range.first =
          std::min(s.target_hosts_range.first, fp.target_hosts);
      s.target_hosts_range.second =
          std::max(s.target_hosts_range.second, fp.target_hosts);
      s.probe_count_range.first =
          std::min(s.probe_count_range.first, fp.probe_count);
      s.probe_count_range.second =
          std::max(s.probe_count_range.second, fp.probe_count);
    }
  }
  s.src_ports.assign(src.begin(), src.end());
  s.dst_ports.assign(dst.begin(), dst.end());
  s.vertical.assign(vert.begin(), vert.end());
  s.horizontal.assign(horiz.begin(), horiz.end());
  s.validation.assign(valid.begin(), valid.end());
  s.ip_versions.assign(versions.begin(), versions.end());
  s.countries.assign(countries.begin(), countries.end());
  if (!v4.empty()) s.covering.push_back(minimal_covering_cidr(v4));
  if (!v6.empty()) s.covering.push_back(minimal_covering_cidr(v6));
  return s;
}

DatasetStats dataset_stats(std::span<const ScannerProfile> profiles,
                           std::span<const Campaign> campaigns) {
  DatasetStats st;
  st.scanners = profiles.size();
  std::map<uint64_t, uint64_t> probes, srcp, dstp;
  for (const ScannerProfile& p : profiles) {
    st.probes += p.probes.size();
    std::set<uint16_t> sp, dp;
    for (const ScanProbe& probe : p.probes) {
      sp.insert(probe.src_port);
      dp.insert(probe.target_port);
    }
    ++probes[p.probes.size()];
    ++srcp[sp.size()];
    ++dstp[dp.size()];
  }
  st.probe_counts.assign(probes.begin(), probes.end());
  st.src_port_counts.assign(srcp.begin(), srcp.end());
  st.dst_port_counts.assign(dstp.begin(), dstp.end());
  st.campaigns = campaigns.size();
  for (const Campaign& c : campaigns)
    st.distributed_scanners += c.members.size();
  st.distributed_fraction =
      st.scanners ? (double)st.distributed_scanners / (double)st.scanners
                  : 0.0;
  return st;
}

void write_distribution_tsv(std::ostream& out, const Distribution& dist) {
  out << "value\tscanners\n";
  for (const auto& [value, count] : dist)
    out << value << '\t' << count << '\n';
}

namespace {

nlohmann::json distribution_to_json(const Distribution& dist) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [value, count] : dist)
    arr.push_back(nlohmann::json::array({value, count}));
  return arr;
}

}  // namespace

nlohmann::json summary_to_json(const CampaignSummary& s) {
  nlohmann::json j;
  nlohmann::json members = nlohmann::json::array();
  for (const IpAddress& ip : s.members) members.push_back(ip.to_string());
  j["members"] = std::move(members);
  j["member_count"] = s.member_count;
  j["formation_similarity"] = s.formation_similarity;
  j["total_probes"] = s.total_probes;
  auto classes = [](const std::vector<PortClass>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PortClass& pc : v) arr.push_back(pc.to_string());
    return arr;
  };
  j["src_ports"] = classes(s.src_ports);
  j["dst_ports"] = classes(s.dst_ports);
  j["vertical"] = s.vertical;
  j["horizontal"] = s.horizontal;
  j["validation"] = s.validation;
  nlohmann::json versions = nlohmann::json::array();
  for (int v : s.ip_versions) versions.push_back("v" + std::to_string(v));
  j["ip_versions"] = std::move(versions);
  j["target_hosts_range"] = nlohmann::json::array(
      {s.target_hosts_range.first, s.target_hosts_range.second});
  j["probe_count_range"] = nlohmann::json::array(
      {s.probe_count_range.first, s.probe_count_range.second});
  nlohmann::json covering = nlohmann::json::object();
  for (const Cidr& c : s.covering)
    covering["v" + std::to_string(c.base().version())] = c.to_string();
  j["covering_cidr"] = std::move(covering);
  j["countries"] = s.countries;
  return j;
}

nlohmann::json stats_to_json(const DatasetStats& s) {
  nlohmann::json j;
  j["scanners"] = s.scanners;
  j["probes"] = s.probes;
  j["campaigns"] = s.campaigns;
  j["distributed_scanners"] = s.distributed_scanners;
  j["distributed_fraction"] = s.distributed_fraction;
  j["standalone_scanners"] = s.scanners - s.distributed_scanners;
  j["probe_count_distribution"] = distribution_to_json(s.probe_counts);
  j["src_port_distribution"] = distribution_to_json(s.src_port_counts);
  j["dst_port_distribution"] = distribution_to_json(s.dst_port_counts);
  return j;
}

}  // namespace scancor
