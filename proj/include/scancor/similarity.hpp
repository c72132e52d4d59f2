#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "scancor/fingerprint.hpp"

namespace scancor {

/// Per-feature weights of the aggregate similarity. Defaults: both port
/// classes 4; scan geometry, validation, subnet and location 2; address
/// version and the two magnitudes 1. They sum to 21.
struct FeatureWeights {
  double src_ports = 4;
  double dst_ports = 4;
  double vertical = 2;
  double horizontal = 2;
  double validation = 2;
  double ip_version = 1;
  double target_hosts_mag = 1;
  double probe_count_mag = 1;
  double subnet = 2;
  double location = 2;

  double sum() const;
  /// Throws Errc::invalid_config on negative entries.
  void validate() const;
};

/// 1 for the same class (same port when both Single), 0.5 for Single
/// classes with different ports, 0 otherwise.
double sim_port_class(const PortClass& a, const PortClass& b);

/// 0 when the flags differ; for two single-host scanners the host must
/// match too.
double sim_vertical(const Fingerprint& a, const Fingerprint& b);

double sim_flag(bool a, bool b);

/// 1 when the counts are within a factor of two of each other:
/// |a - b| < min(a, b). Both counts must be >= 1.
double sim_magnitude(uint64_t a, uint64_t b);

/// Shared leading bits over address width; 0 across families.
double sim_subnet(const IpAddress& a, const IpAddress& b);

/// 1 when both coordinates lie within box_degrees per axis, 0.5 for the
/// same country, 0 otherwise. Unknown locations score 0 against anything.
double sim_geo(const GeoLocation& a, const GeoLocation& b, double box_degrees);

/// The ten per-feature scores in weight declaration order.
std::array<double, 10> feature_scores(const Fingerprint& a,
                                      const Fingerprint& b,
                                      double box_degrees);

/// sum(s[i] * w[i]) / sum(w[i]). Throws Errc::all_weights_zero when the
/// weights sum to zero.
double weighted_average(const std::array<double, 10>& s,
                        const FeatureWeights& w);

double similarity(const Fingerprint& a, const Fingerprint& b,
                  const FeatureWeights& w, double box_degrees);

/// Symmetric pairwise similarities with the diagonal fixed at 1, stored as
/// the row-major upper triangle.
class SimilarityMatrix {
public:
  SimilarityMatrix() = default;
  /// ids must be distinct; upper must hold n*(n-1)/2 entries.
  SimilarityMatrix(std::vector<IpAddress> ids, std::vector<double> upper);

  size_t size() const { return ids_.size(); }
  const std::vector<IpAddress>& ids() const { return ids_; }
  const std::vector<double>& upper() const { return upper_; }

  double at(size_t i, size_t j) const;

  /// Condensed index of pair (i, j), i < j.
  static size_t pair_index(size_t n, size_t i, size_t j) {
    return i * n - i * (i + 1) / 2 + (j - i - 1);
  }

private:
  std::vector<IpAddress> ids_;
  std::vector<double> upper_;
};

struct MatrixOptions {
  int threads = 0;          // <= 0: OpenMP default
  size_t warn_limit = 30000;  // stderr note above this many scanners
};

/// All-pairs similarity, parallel over rows. Each entry depends only on
/// its two fingerprints, so the result matches build_matrix_serial() bit
/// for bit at any thread count.
SimilarityMatrix build_matrix(std::span<const Fingerprint> fingerprints,
                              const FeatureWeights& w, double box_degrees,
                              const MatrixOptions& opt = {});
SimilarityMatrix build_matrix_serial(std::span<const Fingerprint> fingerprints,
                                     const FeatureWeights& w,
                                     double box_degrees);

/// Debug export: tab-joined ids, then one row per leading id with the
/// similarities to all later ids.
void write_matrix_tsv(std::ostream& out, const SimilarityMatrix& m);

}  // namespace scancor
