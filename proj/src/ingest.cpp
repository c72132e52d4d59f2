#include "scancor/ingest.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "scancor/strings.hpp"

namespace scancor {

Proto proto_from_token(std::string_view token) {
  if (token == "tcp") return Proto::tcp;
  if (token == "udp") return Proto::udp;
  if (token == "icmp") return Proto::icmp;
  return Proto::other;
}

const char* proto_name(Proto p) {
  switch (p) {
    case Proto::tcp: return "tcp";
    case Proto::udp: return "udp";
    case Proto::icmp: return "icmp";
    case Proto::other: return "other";
  }
  return "other";
}

LogFormat log_format_from_name(std::string_view name) {
  if (name == "zeek" || name == "zeek-tsv") return LogFormat::zeek_tsv;
  if (name == "csv") return LogFormat::generic_csv;
  throw Error(Errc::unsupported_format, "unknown log format '" +
                                            std::string(name) +
                                            "' (expected zeek or csv)");
}

LogSchema LogSchema::from_header(const std::vector<std::string>& names) {
  LogSchema s;
  s.column_count = names.size();
  for (size_t i = 0; i < names.size(); ++i) {
    const std::string& n = names[i];
    int idx = (int)i;
    if (n == "ts")
      s.ts = idx;
    else if (n == "orig_h" || n == "id.orig_h")
      s.orig_h = idx;
    else if (n == "orig_p" || n == "id.orig_p")
      s.orig_p = idx;
    else if (n == "resp_h" || n == "id.resp_h")
      s.resp_h = idx;
    else if (n == "resp_p" || n == "id.resp_p")
      s.resp_p = idx;
    else if (n == "proto")
      s.proto = idx;
    else if (n == "conn_state")
      s.conn_state = idx;
    else if (n == "history")
      s.history = idx;
  }
  return s;
}

namespace {

uint16_t parse_port(std::string_view s) {
  auto v = parse_int<uint32_t>(s);
  if (!v || *v > 65535)
    throw Error(Errc::malformed_line, "bad port '" + std::string(s) + "'");
  return (uint16_t)*v;
}

std::string_view field_at(std::span<const std::string_view> fields, int idx) {
  return fields[(size_t)idx];
}

}  // namespace

ConnRecord parse_conn_fields(std::span<const std::string_view> fields,
                             const LogSchema& schema, std::string_view unset) {
  if (fields.size() != schema.column_count)
    throw Error(Errc::malformed_line,
                "expected " + std::to_string(schema.column_count) +
                    " columns, got " + std::to_string(fields.size()));
  auto required = [&](int idx, const char* name) -> std::string_view {
    std::string_view v = field_at(fields, idx);
    if (v.empty() || v == unset)
      throw Error(Errc::malformed_line,
                  std::string("unset required field ") + name);
    return v;
  };

  ConnRecord rec;
  std::string_view ts = required(schema.ts, "ts");
  auto tsv = parse_double(ts);
  if (!tsv || !std::isfinite(*tsv) || *tsv < 0)
    throw Error(Errc::malformed_line, "bad ts '" + std::string(ts) + "'");
  rec.ts = *tsv;

  std::string_view oh = required(schema.orig_h, "orig_h");
  auto oip = IpAddress::parse(oh);
  if (!oip)
    throw Error(Errc::malformed_line, "bad address '" + std::string(oh) + "'");
  rec.orig_ip = *oip;

  std::string_view rh = required(schema.resp_h, "resp_h");
  auto rip = IpAddress::parse(rh);
  if (!rip)
    throw Error(Errc::malformed_line, "bad address '" + std::string(rh) + "'");
  rec.resp_ip = *rip;

  if (rec.orig_ip.version() != rec.resp_ip.version())
    throw Error(Errc::malformed_line, "endpoint address families differ");

  rec.orig_port = parse_port(required(schema.orig_p, "orig_p"));
  rec.resp_port = parse_port(required(schema.resp_p, "resp_p"));
  rec.proto = proto_from_token(required(schema.proto, "proto"));
  rec.conn_state = std::string(required(schema.conn_state, "conn_state"));
  if (schema.history >= 0) {
    std::string_view h = field_at(fields, schema.history);
    if (h != unset) rec.history = std::string(h);
  }
  return rec;
}

ConnRecord parse_conn_line(std::string_view line, const LogSchema& schema,
                           char sep, std::string_view unset) {
  std::vector<std::string_view> fields = split(line, sep);
  return parse_conn_fields(fields, schema, unset);
}

LogReader::LogReader(std::istream& in, LogFormat format, bool strict)
    : in_(in), format_(format), strict_(strict) {}

void LogReader::fail_line(const std::string& what) {
  ++errors_;
  if (strict_)
    throw Error(Errc::malformed_line,
                "line " + std::to_string(line_no_) + ": " + what);
}

namespace {

// "#separator \x09" carries the separator as an escape after a space.
char decode_separator(std::string_view value) {
  if (value.size() >= 4 && value[0] == '\\' &&
      (value[1] == 'x' || value[1] == 'X')) {
    int v = 0;
    for (int i = 2; i < 4; ++i) {
      char c = value[(size_t)i];
      v <<= 4;
      if (c >= '0' && c <= '9')
        v |= c - '0';
      else if (c >= 'a' && c <= 'f')
        v |= c - 'a' + 10;
      else if (c >= 'A' && c <= 'F')
        v |= c - 'A' + 10;
      else
        return '\t';
    }
    return (char)v;
  }
  return value.empty() ? '\t' : value[0];
}

}  // namespace

bool LogReader::next_zeek(ConnRecord& out) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#separator", 0) == 0) {
        size_t sp = line.find(' ');
        if (sp != std::string::npos)
          sep_ = decode_separator(std::string_view(line).substr(sp + 1));
        continue;
      }
      std::vector<std::string_view> tokens = split(line, sep_);
      if (tokens[0] == "#fields") {
        std::vector<std::string> names(tokens.begin() + 1, tokens.end());
        schema_ = LogSchema::from_header(names);
        have_schema_ = true;
      } else if (tokens[0] == "#unset_field" && tokens.size() > 1) {
        unset_ = std::string(tokens[1]);
      }
      continue;
    }
    if (!have_schema_ || !schema_.complete())
      throw Error(Errc::missing_header,
                  "no usable #fields header before data (line " +
                      std::to_string(line_no_) + ")");
    try {
      out = parse_conn_line(line, schema_, sep_, unset_);
      return true;
    } catch (const Error& e) {
      if (e.kind() != Errc::malformed_line) throw;
      fail_line(e.what());
    }
  }
  return false;
}

// RFC 4180: quoted fields may contain separators, doubled quotes and
// newlines. Returns false only at end of input.
bool LogReader::read_csv_record(std::vector<std::string>& fields) {
  fields.clear();
  std::string cur;
  bool in_quotes = false;
  bool any = false;
  int ch;
  ++line_no_;
  while ((ch = in_.get()) != EOF) {
    any = true;
    char c = (char)ch;
    if (in_quotes) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          cur += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no_;
        cur += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!any) {
    --line_no_;
    return false;
  }
  fields.push_back(std::move(cur));
  return true;
}

bool LogReader::next_csv(ConnRecord& out) {
  std::vector<std::string> fields;
  if (!have_schema_) {
    if (!read_csv_record(fields))
      throw Error(Errc::missing_header, "empty input, no CSV header");
    schema_ = LogSchema::from_header(fields);
    if (!schema_.complete())
      throw Error(Errc::missing_header,
                  "CSV header lacks required fields (need ts, orig_h, "
                  "orig_p, resp_h, resp_p, proto, conn_state)");
    have_schema_ = true;
  }
  while (read_csv_record(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    std::vector<std::string_view> views(fields.begin(), fields.end());
    try {
      out = parse_conn_fields(views, schema_, unset_);
      return true;
    } catch (const Error& e) {
      if (e.kind() != Errc::malformed_line) throw;
      fail_line(e.what());
    }
  }
  return false;
}

bool LogReader::next(ConnRecord& out) {
  return format_ == LogFormat::zeek_tsv ? next_zeek(out) : next_csv(out);
}

ReadResult read_conn_log(std::istream& in, LogFormat format, bool strict) {
  LogReader reader(in, format, strict);
  ReadResult res;
  ConnRecord rec;
  while (reader.next(rec)) res.records.push_back(std::move(rec));
  res.parse_errors = reader.parse_errors();
  return res;
}

std::vector<ConnRecord> restrict_visibility(std::span<const ConnRecord> records,
                                            const SubnetFilter& filter) {
  std::vector<ConnRecord> out;
  for (const ConnRecord& r : records)
    if (filter.matches(r)) out.push_back(r);
  return out;
}

void write_conn_log(std::ostream& out, std::span<const ConnRecord> records) {
  out << "#separator \\x09\n";
  out << "#unset_field\t-\n";
  out << "#fields\tts\torig_h\torig_p\tresp_h\tresp_p\tproto\tconn_state"
         "\thistory\n";
  for (const ConnRecord& r : records) {
    out << format_double(r.ts) << '\t' << r.orig_ip.to_string() << '\t'
        << r.orig_port << '\t' << r.resp_ip.to_string() << '\t' << r.resp_port
        << '\t' << proto_name(r.proto) << '\t' << r.conn_state << '\t'
        << (r.history.empty() ? "-" : r.history.c_str()) << '\n';
  }
}

}  // namespace scancor
