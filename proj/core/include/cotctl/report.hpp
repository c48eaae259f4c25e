#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cotctl/eval.hpp"

namespace cotctl::eval {

enum class ReportFormat { Table, Csv, PlotData };

std::optional<ReportFormat> parse_report_format(std::string_view s);

/// Deterministic renderings. CSV rows are `section,index,metric,value`;
/// plot data holds blank-line separated two-column blocks for gnuplot.
void emit_report(const SchedulingReport& report, ReportFormat format, std::ostream& out);
void emit_report(const RcaReport& report, ReportFormat format, std::ostream& out);

/// Writes to `path`; throws IoError when it cannot be opened.
void emit_report_file(const SchedulingReport& report, ReportFormat format,
                      const std::filesystem::path& path);
void emit_report_file(const RcaReport& report, ReportFormat format,
                      const std::filesystem::path& path);

struct CsvRow {
  std::string section;
  std::string index;
  std::string metric;
  std::string value;

  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

/// Reads `section,index,metric,value` rows (header required, no quoting).
std::vector<CsvRow> read_report_csv(std::istream& in);

/// Rebuilds a scheduling report from its CSV rendering. Throws ConfigError
/// on unknown rows or malformed numbers.
SchedulingReport scheduling_report_from_csv(std::istream& in);

/// Shortest round-trip decimal rendering.
std::string format_number(double v);

}  // namespace cotctl::eval
