#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "scancor/ip.hpp"

namespace scancor {

/// Country plus optional coordinates for a source. An empty country means
/// the location is unknown; coordinates never appear without a country.
struct GeoLocation {
  std::string country;  // ISO 3166 alpha-2, empty = unknown
  double lat = 0;
  double lon = 0;
  bool has_coords = false;

  bool known() const { return !country.empty(); }

  friend bool operator==(const GeoLocation&, const GeoLocation&) = default;
};

struct GeoEntry {
  Cidr network;
  GeoLocation location;
};

/// Offline prefix-to-location table. Lookup picks the longest matching
/// prefix; among equal-length duplicates the earliest entry wins, so a
/// given table always answers the same way.
class GeoDatabase {
public:
  GeoDatabase() = default;

  /// CSV with header network,country,lat,lon. lat/lon may be empty for
  /// country-only entries.
  static GeoDatabase load_csv(std::istream& in);

  void add(GeoEntry entry);
  GeoLocation lookup(const IpAddress& ip) const;
  size_t size() const { return entries_.size(); }
  void write_csv(std::ostream& out) const;

private:
  std::vector<GeoEntry> entries_;
};

}  // namespace scancor
