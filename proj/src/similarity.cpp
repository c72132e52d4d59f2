#include "scancor/similarity.hpp"

#include <omp.h>

#include <cmath>
#include <iostream>
#include <ostream>
#include <unordered_set>

#include "scancor/error.hpp"
#include "scancor/strings.hpp"

namespace scancor {

double FeatureWeights::sum() const {
  double den = 0;
  den += src_ports;
  den += dst_ports;
  den += vertical;
  den += horizontal;
  den += validation;
  den += ip_version;
  den += target_hosts_mag;
  den += probe_count_mag;
  den += subnet;
  den += location;
  return den;
}

void FeatureWeights::validate() const {
  const double all[] = {src_ports,  dst_ports,        vertical,
                        horizontal, validation,       ip_version,
                        target_hosts_mag, probe_count_mag, subnet, location};
  for (double w : all)
    if (!(w >= 0) || !std::isfinite(w))
      throw Error(Errc::invalid_config, "feature weights must be >= 0");
}

double sim_port_class(const PortClass& a, const PortClass& b) {
  if (a.kind != b.kind) return 0.0;
  if (a.kind == PortClass::Kind::single) return a.port == b.port ? 1.0 : 0.5;
  return 1.0;
}

double sim_vertical(const Fingerprint& a, const Fingerprint& b) {
  if (a.vertical != b.vertical) return 0.0;
  if (a.vertical) return 1.0;
  return a.single_target == b.single_target ? 1.0 : 0.0;
}

double sim_flag(bool a, bool b) { return a == b ? 1.0 : 0.0; }

double sim_magnitude(uint64_t a, uint64_t b) {
  uint64_t diff = a > b ? a - b : b - a;
  return diff < std::min(a, b) ? 1.0 : 0.0;
}

double sim_subnet(const IpAddress& a, const IpAddress& b) {
  if (a.version() != b.version()) return 0.0;
  return (double)common_prefix_bits(a, b) / (double)a.bit_width();
}

double sim_geo(const GeoLocation& a, const GeoLocation& b,
               double box_degrees) {
  if (a.has_coords && b.has_coords &&
      std::abs(a.lat - b.lat) <= box_degrees &&
      std::abs(a.lon - b.lon) <= box_degrees)
    return 1.0;
  if (a.known() && b.known() && a.country == b.country) return 0.5;
  return 0.0;
}

std::array<double, 10> feature_scores(const Fingerprint& a,
                                      const Fingerprint& b,
                                      double box_degrees) {
  return {
      sim_port_class(a.src_ports, b.src_ports),
      sim_port_class(a.dst_ports, b.dst_ports),
      sim_vertical(a, b),
      sim_flag(a.horizontal, b.horizontal),
      sim_flag(a.validation, b.validation),
      sim_flag(a.ip_version == 4, b.ip_version == 4),
      sim_magnitude(a.target_hosts, b.target_hosts),
      sim_magnitude(a.probe_count, b.probe_count),
      sim_subnet(a.scanner_ip, b.scanner_ip),
      sim_geo(a.location, b.location, box_degrees),
  };
}

double weighted_average(const std::array<double, 10>& s,
                        const FeatureWeights& w) {
  const double weights[] = {w.src_ports,  w.dst_ports,        w.vertical,
                            w.horizontal, w.validation,       w.ip_version,
                            w.target_hosts_mag, w.probe_count_mag, w.subnet,
                            w.location};
  // Numerator and denominator accumulate in the same order, so equal
  // scores of 1 everywhere yield exactly 1.
  double num = 0, den = 0;
  for (size_t i = 0; i < 10; ++i) {
    num += s[i] * weights[i];
    den += weights[i];
  }
  if (den == 0)
    throw Error(Errc::all_weights_zero, "similarity needs a nonzero weight");
  return num / den;
}

double similarity(const Fingerprint& a, const Fingerprint& b,
                  const FeatureWeights& w, double box_degrees) {
  return weighted_average(feature_scores(a, b, box_degrees), w);
}

SimilarityMatrix::SimilarityMatrix(std::vector<IpAddress> ids,
                                   std::vector<double> upper)
    : ids_(std::move(ids)), upper_(std::move(upper)) {
  const size_t n = ids_.size();
  if (upper_.size() != n * (n - 1) / 2)
    throw Error(Errc::internal, "similarity matrix shape mismatch");
  std::unordered_set<IpAddress, IpHash> seen;
  for (const IpAddress& ip : ids_)
    if (!seen.insert(ip).second)
      throw Error(Errc::duplicate_scanner,
                  "duplicate scanner " + ip.to_string());
}

double SimilarityMatrix::at(size_t i, size_t j) const {
  if (i == j) return 1.0;
  if (i > j) std::swap(i, j);
  return upper_[pair_index(ids_.size(), i, j)];
}

namespace {

std::vector<IpAddress> collect_ids(std::span<const Fingerprint> fps) {
  std::vector<IpAddress> ids;
  ids.reserve(fps.size());
  std::unordered_set<IpAddress, IpHash> seen;
  for (const Fingerprint& fp : fps) {
    if (!seen.insert(fp.scanner_ip).second)
      throw Error(Errc::duplicate_scanner,
                  "duplicate scanner " + fp.scanner_ip.to_string());
    ids.push_back(fp.scanner_ip);
  }
  return ids;
}

}  // namespace

SimilarityMatrix build_matrix_serial(std::span<const Fingerprint> fps,
                                     const FeatureWeights& w,
                                     double box_degrees) {
  w.validate();
  if (w.sum() == 0)
    throw Error(Errc::all_weights_zero, "similarity needs a nonzero weight");
  std::vector<IpAddress> ids = collect_ids(fps);
  const size_t n = fps.size();
  std::vector<double> upper(n * (n - 1) / 2);
  for (size_t i = 0; i + 1 < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      upper[SimilarityMatrix::pair_index(n, i, j)] =
          similarity(fps[i], fps[j], w, box_degrees);
  return SimilarityMatrix(std::move(ids), std::move(upper));
}

SimilarityMatrix build_matrix(std::span<const Fingerprint> fps,
                              const FeatureWeights& w, double box_degrees,
                              const MatrixOptions& opt) {
  w.validate();
  if (w.sum() == 0)
    throw Error(Errc::all_weights_zero, "similarity needs a nonzero weight");
  std::vector<IpAddress> ids = collect_ids(fps);
  const size_t n = fps.size();
  if (n > opt.warn_limit)
    std::cerr << "warning: " << n << " scanners need "
              << (n * (n - 1) / 2 * sizeof(double)) / (1024 * 1024)
              << " MiB of pairwise similarities; consider raising epsilon\n";
  std::vector<double> upper(n * (n - 1) / 2);
  const int nthreads = opt.threads > 0 ? opt.threads : omp_get_max_threads();
  const std::ptrdiff_t rows = (std::ptrdiff_t)n - 1;
  // Row lengths shrink with i; dynamic scheduling keeps threads busy.
  // Entries are written once and depend only on fps[i], fps[j].
#pragma omp parallel for schedule(dynamic, 8) num_threads(nthreads)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const size_t row = (size_t)i;
    size_t k = SimilarityMatrix::pair_index(n, row, row + 1);
    for (size_t j = row + 1; j < n; ++j, ++k)
      upper[k] = similarity(fps[row], fps[j], w, box_degrees);
  }
  return SimilarityMatrix(std::move(ids), std::move(upper));
}

void write_matrix_tsv(std::ostream& out, const SimilarityMatrix& m) {
  const size_t n = m.size();
  for (size_t i = 0; i < n; ++i)
    out << m.ids()[i].to_string() << (i + 1 < n ? '\t' : '\n');
  for (size_t i = 0; i + 1 < n; ++i) {
    for (size_t j = i + 1; j < n; ++j)
      out << format_double(m.at(i, j)) << (j + 1 < n ? '\t' : '\n');
  }
}

}  // namespace scancor
