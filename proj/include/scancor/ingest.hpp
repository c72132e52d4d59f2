#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "scancor/conn.hpp"
#include "scancor/error.hpp"

namespace scancor {

enum class LogFormat { zeek_tsv, generic_csv };

/// Maps "zeek" / "csv" spellings; anything else throws.
LogFormat log_format_from_name(std::string_view name);

/// Column positions of the canonical fields. The ingest accepts both the
/// plain names (orig_h, ...) and the conn.log spellings (id.orig_h, ...).
struct LogSchema {
  int ts = -1;
  int orig_h = -1;
  int orig_p = -1;
  int resp_h = -1;
  int resp_p = -1;
  int proto = -1;
  int conn_state = -1;
  int history = -1;  // optional
  size_t column_count = 0;

  bool complete() const {
    return ts >= 0 && orig_h >= 0 && orig_p >= 0 && resp_h >= 0 &&
           resp_p >= 0 && proto >= 0 && conn_state >= 0;
  }

  static LogSchema from_header(const std::vector<std::string>& names);
};

/// Parses one data row. `unset` is the marker for absent values; required
/// fields may not be unset. Throws Errc::malformed_line.
ConnRecord parse_conn_fields(std::span<const std::string_view> fields,
                             const LogSchema& schema,
                             std::string_view unset = "-");
ConnRecord parse_conn_line(std::string_view line, const LogSchema& schema,
                           char sep = '\t', std::string_view unset = "-");

/// Streaming reader for both supported formats. Malformed data lines are
/// dropped and counted; in strict mode the first one throws instead.
class LogReader {
public:
  LogReader(std::istream& in, LogFormat format, bool strict = false);

  /// False at end of input.
  bool next(ConnRecord& out);

  uint64_t parse_errors() const { return errors_; }
  uint64_t line_number() const { return line_no_; }

private:
  bool next_zeek(ConnRecord& out);
  bool next_csv(ConnRecord& out);
  bool read_csv_record(std::vector<std::string>& fields);
  void fail_line(const std::string& what);

  std::istream& in_;
  LogFormat format_;
  bool strict_;
  char sep_ = '\t';
  std::string unset_ = "-";
  LogSchema schema_;
  bool have_schema_ = false;
  uint64_t errors_ = 0;
  uint64_t line_no_ = 0;
};

struct ReadResult {
  std::vector<ConnRecord> records;
  uint64_t parse_errors = 0;
};

ReadResult read_conn_log(std::istream& in, LogFormat format,
                         bool strict = false);

std::vector<ConnRecord> restrict_visibility(std::span<const ConnRecord> records,
                                            const SubnetFilter& filter);

/// Writes tab-separated rows with a field header, the same dialect
/// read_conn_log() accepts.
void write_conn_log(std::ostream& out, std::span<const ConnRecord> records);

}  // namespace scancor
