#include "scancor/geo.hpp"

#include <istream>
#include <ostream>

#include "scancor/error.hpp"
#include "scancor/strings.hpp"

namespace scancor {

GeoDatabase GeoDatabase::load_csv(std::istream& in) {
  GeoDatabase db;
  std::string line;
  uint64_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line != "network,country,lat,lon")
        throw Error(Errc::missing_header,
                    "geo CSV must start with 'network,country,lat,lon'");
      have_header = true;
      continue;
    }
    std::vector<std::string_view> f = split(line, ',');
    auto bad = [&](const std::string& what) -> Error {
      return Error(Errc::malformed_line,
                   "geo CSV line " + std::to_string(line_no) + ": " + what);
    };
    if (f.size() != 4) throw bad("expected 4 columns");
    auto net = Cidr::parse(f[0]);
    if (!net) throw bad("bad network '" + std::string(f[0]) + "'");
    GeoEntry e;
    e.network = *net;
    e.location.country = std::string(f[1]);
    if (!f[2].empty() || !f[3].empty()) {
      if (e.location.country.empty())
        throw bad("coordinates without a country");
      auto lat = parse_double(f[2]);
      auto lon = parse_double(f[3]);
      if (!lat || !lon || *lat < -90 || *lat > 90 || *lon < -180 || *lon > 180)
        throw bad("bad coordinates");
      e.location.lat = *lat;
      e.location.lon = *lon;
      e.location.has_coords = true;
    }
    db.add(std::move(e));
  }
  if (!have_header)
    throw Error(Errc::missing_header, "empty geo CSV");
  return db;
}

void GeoDatabase::add(GeoEntry entry) { entries_.push_back(std::move(entry)); }

GeoLocation GeoDatabase::lookup(const IpAddress& ip) const {
  const GeoEntry* best = nullptr;
  for (const GeoEntry& e : entries_) {
    if (!e.network.contains(ip)) continue;
    if (!best || e.network.prefix() > best->network.prefix()) best = &e;
  }
  return best ? best->location : GeoLocation{};
}

void GeoDatabase::write_csv(std::ostream& out) const {
  out << "network,country,lat,lon\n";
  for (const GeoEntry& e : entries_) {
    out << e.network.to_string() << ',' << e.location.country << ',';
    if (e.location.has_coords)
      out << format_double(e.location.lat) << ','
          << format_double(e.location.lon);
    else
      out << ',';
    out << '\n';
  }
}

}  // namespace scancor
