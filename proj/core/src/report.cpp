#include "cotctl/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "cotctl/cot.hpp"
#include "cotctl/error.hpp"

namespace cotctl::eval {

std::optional<ReportFormat> parse_report_format(std::string_view s) {
  if (s == "table") return ReportFormat::Table;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "plotdata") return ReportFormat::PlotData;
  return std::nullopt;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string labels_text(const std::vector<RootLabel>& labels) {
  return cot::render_root(labels);
}

void row(std::ostream& out, std::string_view section, std::string_view index,
         std::string_view metric, std::string_view value) {
  out << section << ',' << index << ',' << metric << ',' << value << '\n';
}

}  // namespace

void emit_report(const SchedulingReport& r, ReportFormat format, std::ostream& out) {
  switch (format) {
    case ReportFormat::Table: {
      out << "scenario " << r.scenario << "  policy " << r.policy << "  iterations "
          << r.iterations << "\n";
      out << "executed " << r.executed_actions << "  rejected " << r.rejected_actions
          << "  audit violations " << r.audit_violations << "\n";
      out << "SLO-violation fraction " << fixed(r.slo_violation_fraction, 4) << "\n\n";
      out << "period  ticks          mean RPS    mean latency (ms)\n";
      for (std::size_t i = 0; i < r.periods.size(); ++i) {
        const auto& p = r.periods[i];
        char line[128];
        std::snprintf(line, sizeof line, "%-7zu %5lld-%-8lld %10.2f %16.2f\n", i + 1,
                      static_cast<long long>(p.first_tick), static_cast<long long>(p.last_tick),
                      p.mean_rps, p.mean_latency_ms);
        out << line;
      }
      out << "\npercentile  latency (ms)\n";
      for (const auto& [p, v] : r.percentiles) {
        char line[64];
        std::snprintf(line, sizeof line, "%-11s %12.2f\n", (format_number(p) + "%").c_str(), v);
        out << line;
      }
      return;
    }
    case ReportFormat::Csv: {
      out << "section,index,metric,value\n";
      row(out, "meta", "0", "scenario", r.scenario);
      row(out, "meta", "0", "policy", r.policy);
      row(out, "meta", "0", "iterations", std::to_string(r.iterations));
      row(out, "meta", "0", "executed_actions", std::to_string(r.executed_actions));
      row(out, "meta", "0", "rejected_actions", std::to_string(r.rejected_actions));
      row(out, "meta", "0", "audit_violations", std::to_string(r.audit_violations));
      row(out, "summary", "0", "slo_violation_fraction", format_number(r.slo_violation_fraction));
      for (std::size_t i = 0; i < r.periods.size(); ++i) {
        const auto idx = std::to_string(i + 1);
        row(out, "period", idx, "first_tick", std::to_string(r.periods[i].first_tick));
        row(out, "period", idx, "last_tick", std::to_string(r.periods[i].last_tick));
        row(out, "period", idx, "mean_rps", format_number(r.periods[i].mean_rps));
        row(out, "period", idx, "mean_latency_ms", format_number(r.periods[i].mean_latency_ms));
      }
      for (const auto& [p, v] : r.percentiles) {
        row(out, "percentile", format_number(p), "latency_ms", format_number(v));
      }
      for (std::size_t i = 0; i < r.cdf.size(); ++i) {
        const auto idx = std::to_string(i + 1);
        row(out, "cdf", idx, "latency_ms", format_number(r.cdf[i].first));
        row(out, "cdf", idx, "fraction", format_number(r.cdf[i].second));
      }
      return;
    }
    case ReportFormat::PlotData: {
      out << "# latency CDF: latency_ms cumulative_fraction\n";
      for (const auto& [latency, fraction] : r.cdf) {
        out << format_number(latency) << ' ' << format_number(fraction) << '\n';
      }
      out << "\n\n# per-period mean RPS: period mean_rps\n";
      for (std::size_t i = 0; i < r.periods.size(); ++i) {
        out << (i + 1) << ' ' << format_number(r.periods[i].mean_rps) << '\n';
      }
      out << "\n\n# per-period mean latency: period mean_latency_ms\n";
      for (std::size_t i = 0; i < r.periods.size(); ++i) {
        out << (i + 1) << ' ' << format_number(r.periods[i].mean_latency_ms) << '\n';
      }
      return;
    }
  }
}

void emit_report(const RcaReport& r, ReportFormat format, std::ostream& out) {
  switch (format) {
    case ReportFormat::Table: {
      out << "precision " << fixed(r.precision, 4) << (r.precision_defined ? "" : " (undefined)")
          << "  recall " << fixed(r.recall, 4) << (r.recall_defined ? "" : " (undefined)")
          << "  accuracy " << fixed(r.accuracy, 4) << "\n\n";
      out << "case  top1  format  truth / predicted\n";
      for (std::size_t i = 0; i < r.cases.size(); ++i) {
        const auto& c = r.cases[i];
        const std::vector<RootLabel> truth(c.truth.begin(), c.truth.end());
        char head[64];
        std::snprintf(head, sizeof head, "%-5zu %-5s %-7d ", i + 1, c.top1_correct ? "yes" : "no",
                      c.format_failures);
        out << head << labels_text(truth) << " / " << labels_text(c.predicted) << '\n';
      }
      return;
    }
    case ReportFormat::Csv: {
      out << "section,index,metric,value\n";
      row(out, "summary", "0", "precision", format_number(r.precision));
      row(out, "summary", "0", "precision_defined", r.precision_defined ? "1" : "0");
      row(out, "summary", "0", "recall", format_number(r.recall));
      row(out, "summary", "0", "recall_defined", r.recall_defined ? "1" : "0");
      row(out, "summary", "0", "accuracy", format_number(r.accuracy));
      for (std::size_t i = 0; i < r.cases.size(); ++i) {
        const auto& c = r.cases[i];
        const auto idx = std::to_string(i + 1);
        const std::vector<RootLabel> truth(c.truth.begin(), c.truth.end());
        row(out, "case", idx, "scenario", c.scenario);
        row(out, "case", idx, "truth", labels_text(truth));
        row(out, "case", idx, "predicted", labels_text(c.predicted));
        row(out, "case", idx, "top1_correct", c.top1_correct ? "1" : "0");
        row(out, "case", idx, "format_failures", std::to_string(c.format_failures));
      }
      return;
    }
    case ReportFormat::PlotData: {
      out << "# metric value\n";
      out << "precision " << format_number(r.precision) << '\n';
      out << "recall " << format_number(r.recall) << '\n';
      out << "accuracy " << format_number(r.accuracy) << '\n';
      return;
    }
  }
}

namespace {

template <typename Report>
void emit_to(const Report& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path.string());
  emit_report(report, format, out);
  if (!out) throw IoError("failed writing report " + path.string());
}

double to_double(const CsvRow& r) {
  double v = 0.0;
  const auto* end = r.value.data() + r.value.size();
  auto [ptr, ec] = std::from_chars(r.value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("report csv: '" + r.value + "' is not a number (" + r.metric + ")");
  }
  return v;
}

std::size_t to_index(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) {
    throw ConfigError("report csv: bad index '" + s + "'");
  }
  return v;
}

}  // namespace

void emit_report_file(const SchedulingReport& report, ReportFormat format,
                      const std::filesystem::path& path) {
  emit_to(report, format, path);
}

void emit_report_file(const RcaReport& report, ReportFormat format,
                      const std::filesystem::path& path) {
  emit_to(report, format, path);
}

std::vector<CsvRow> read_report_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != "section,index,metric,value") {
    throw ConfigError("report csv: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CsvRow r;
    std::size_t a = line.find(',');
    std::size_t b = a == std::string::npos ? a : line.find(',', a + 1);
    std::size_t c = b == std::string::npos ? b : line.find(',', b + 1);
    if (c == std::string::npos) throw ConfigError("report csv: short row '" + line + "'");
    r.section = line.substr(0, a);
    r.index = line.substr(a + 1, b - a - 1);
    r.metric = line.substr(b + 1, c - b - 1);
    r.value = line.substr(c + 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

SchedulingReport scheduling_report_from_csv(std::istream& in) {
  SchedulingReport r;
  for (const auto& row : read_report_csv(in)) {
    if (row.section == "meta") {
      if (row.metric == "scenario") {
        r.scenario = row.value;
      } else if (row.metric == "policy") {
        r.policy = row.value;
      } else if (row.metric == "iterations") {
        r.iterations = static_cast<int>(to_double(row));
      } else if (row.metric == "executed_actions") {
        r.executed_actions = static_cast<int>(to_double(row));
      } else if (row.metric == "rejected_actions") {
        r.rejected_actions = static_cast<int>(to_double(row));
      } else if (row.metric == "audit_violations") {
        r.audit_violations = static_cast<int>(to_double(row));
      } else {
        throw ConfigError("report csv: unknown meta field " + row.metric);
      }
    } else if (row.section == "summary" && row.metric == "slo_violation_fraction") {
      r.slo_violation_fraction = to_double(row);
    } else if (row.section == "period") {
      const auto i = to_index(row.index);
      if (r.periods.size() < i) r.periods.resize(i);
      auto& p = r.periods[i - 1];
      if (row.metric == "first_tick") {
        p.first_tick = static_cast<Tick>(to_double(row));
      } else if (row.metric == "last_tick") {
        p.last_tick = static_cast<Tick>(to_double(row));
      } else if (row.metric == "mean_rps") {
        p.mean_rps = to_double(row);
      } else if (row.metric == "mean_latency_ms") {
        p.mean_latency_ms = to_double(row);
      } else {
        throw ConfigError("report csv: unknown period field " + row.metric);
      }
    } else if (row.section == "percentile") {
      CsvRow key{"", "", "", row.index};
      r.percentiles.emplace_back(to_double(key), to_double(row));
    } else if (row.section == "cdf") {
      const auto i = to_index(row.index);
      if (r.cdf.size() < i) r.cdf.resize(i);
      if (row.metric == "latency_ms") {
        r.cdf[i - 1].first = to_double(row);
      } else if (row.metric == "fraction") {
        r.cdf[i - 1].second = to_double(row);
      } else {
        throw ConfigError("report csv: unknown cdf field " + row.metric);
      }
    } else {
      throw ConfigError("report csv: unknown row " + row.section + "/" + row.metric);
    }
  }
  return r;
}

}  // namespace cotctl::eval
