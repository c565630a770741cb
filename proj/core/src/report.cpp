#include "ctxbench/report.hpp"

#include <cstdio>
#include <sstream>

#include "ctxbench/error.hpp"

namespace ctxbench {

using nlohmann::json;

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw Error(ErrorCode::ConfigError, "report format must be markdown, csv or json, got '" + std::string(s) + "'");
}

std::string format_percent(std::optional<double> fraction) {
  if (!fraction) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *fraction * 100.0);
  return buf;
}

namespace {

struct Column {
  std::string_view name;
  std::optional<Row> row;  // nullopt: K.Am or St.Avg
  Split split = Split::Known;
};

constexpr Column kColumns[] = {
    {"K.Am", std::nullopt},
    {"St.KK", Row::Standard, Split::Known},
    {"St.UK", Row::Standard, Split::Unknown},
    {"St.Avg", std::nullopt},
    {"Dist.KK", Row::StandardDistractor, Split::Known},
    {"Dist.UK", Row::StandardDistractor, Split::Unknown},
    {"Conf.KK", Row::Conflicting, Split::Known},
    {"Conf.UK", Row::Conflicting, Split::Unknown},
    {"Conf.Dist.KK", Row::ConflictingDistractor, Split::Known},
    {"Conf.Dist.UK", Row::ConflictingDistractor, Split::Unknown},
    {"Irr.KK", Row::Irrelevant, Split::Known},
    {"Irr.UK", Row::Irrelevant, Split::Unknown},
};

std::vector<std::string> values(const DesiderataReport& report) {
  std::vector<std::string> out;
  for (const auto& col : kColumns) {
    if (col.name == "K.Am") {
      out.push_back(format_percent(report.knowledge_amount));
    } else if (col.name == "St.Avg") {
      out.push_back(format_percent(report.standard_avg));
    } else {
      const auto& cell = report.cell(*col.row, col.split);
      out.push_back(format_percent(cell.status == CellStatus::Complete ? cell.value : std::nullopt));
    }
  }
  return out;
}

std::vector<std::string> footnotes(const DesiderataReport& report) {
  std::vector<std::string> incomplete;
  std::vector<std::string> unavailable;
  for (const auto& col : kColumns) {
    if (!col.row) continue;
    const auto& cell = report.cell(*col.row, col.split);
    if (cell.status == CellStatus::Incomplete) incomplete.emplace_back(col.name);
    if (cell.status == CellStatus::Unavailable) unavailable.emplace_back(col.name);
  }
  auto list = [](const std::vector<std::string>& names) {
    std::string s;
    for (std::size_t i = 0; i < names.size(); ++i) s += (i ? ", " : "") + names[i];
    return s;
  };
  std::vector<std::string> out;
  if (!incomplete.empty()) {
    out.push_back("partial report: " + list(incomplete) +
                  " incomplete after provider failures; rerun `ctxbench evaluate` to resume");
  }
  if (!unavailable.empty()) {
    out.push_back(list(unavailable) + " unavailable: distractor search requires a scoring endpoint");
  }
  return out;
}

}  // namespace

std::string render_report(const DesiderataReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) return to_json(report).dump(2) + "\n";

  const auto row = values(report);
  const auto notes = footnotes(report);
  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    for (std::size_t i = 0; i < kReportColumns.size(); ++i) out << (i ? "," : "") << kReportColumns[i];
    out << "\n";
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
    for (const auto& n : notes) out << "# " << n << "\n";
    return out.str();
  }

  out << "| Model |";
  for (auto name : kReportColumns) out << ' ' << name << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) out << "---:|";
  out << "\n| " << report.model_id << " |";
  for (const auto& v : row) out << ' ' << v << " |";
  out << "\n";
  if (!notes.empty()) {
    out << "\n";
    for (const auto& n : notes) out << "* " << n << "\n";
  }
  return out.str();
}

nlohmann::ordered_json to_json(const DesiderataReport& report) {
  nlohmann::ordered_json j;
  j["model_id"] = report.model_id;
  j["knowledge_amount"] = report.knowledge_amount;
  j["standard_avg"] = report.standard_avg ? json(*report.standard_avg) : json(nullptr);
  j["complete"] = report.complete();
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json cj;
    cj["row"] = to_string(c.row);
    cj["split"] = to_string(c.split);
    cj["value"] = c.value ? json(*c.value) : json(nullptr);
    cj["n"] = c.n;
    cj["status"] = to_string(c.status);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  auto columns = nlohmann::ordered_json::object();
  const auto row = values(report);
  for (std::size_t i = 0; i < row.size(); ++i) columns[std::string(kReportColumns[i])] = row[i];
  j["columns"] = std::move(columns);
  nlohmann::ordered_json meta;
  meta["dataset"] = report.metadata.dataset_name;
  meta["seed"] = report.metadata.seed;
  meta["config_hash"] = report.metadata.config_hash;
  meta["provider_endpoint"] = report.metadata.provider_endpoint;
  meta["generated_at"] = report.metadata.generated_at ? json(*report.metadata.generated_at) : json(nullptr);
  j["metadata"] = std::move(meta);
  return j;
}

DesiderataReport report_from_json(const json& j) {
  try {
    DesiderataReport r;
    r.model_id = j.at("model_id").get<std::string>();
    r.knowledge_amount = j.at("knowledge_amount").get<double>();
    if (!j.at("standard_avg").is_null()) r.standard_avg = j.at("standard_avg").get<double>();
    for (const auto& cj : j.at("cells")) {
      CellScore c;
      c.row = row_from_string(cj.at("row").get<std::string>());
      c.split = split_from_string(cj.at("split").get<std::string>());
      if (!cj.at("value").is_null()) c.value = cj.at("value").get<double>();
      c.n = cj.at("n").get<std::size_t>();
      const auto status = cj.at("status").get<std::string>();
      c.status = status == "complete"     ? CellStatus::Complete
                 : status == "incomplete" ? CellStatus::Incomplete
                                          : CellStatus::Unavailable;
      r.cells.push_back(c);
    }
    const auto& meta = j.at("metadata");
    r.metadata.dataset_name = meta.at("dataset").get<std::string>();
    r.metadata.seed = meta.at("seed").get<std::uint64_t>();
    r.metadata.config_hash = meta.at("config_hash").get<std::string>();
    r.metadata.provider_endpoint = meta.at("provider_endpoint").get<std::string>();
    if (!meta.at("generated_at").is_null()) r.metadata.generated_at = meta.at("generated_at").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("report: ") + e.what());
  }
}

}  // namespace ctxbench
