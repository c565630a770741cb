#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ctxbench/eval.hpp"

namespace ctxbench {

enum class ReportFormat { Markdown, Csv, Json };

ReportFormat report_format_from_string(std::string_view s);

inline constexpr std::array<std::string_view, 12> kReportColumns = {
    "K.Am",    "St.KK",        "St.UK",        "St.Avg", "Dist.KK", "Dist.UK",
    "Conf.KK", "Conf.UK",      "Conf.Dist.KK", "Conf.Dist.UK", "Irr.KK", "Irr.UK"};

// 0.973 -> "97.3"; nullopt -> "-".
std::string format_percent(std::optional<double> fraction);

std::string render_report(const DesiderataReport& report, ReportFormat format);

nlohmann::ordered_json to_json(const DesiderataReport& report);
DesiderataReport report_from_json(const nlohmann::json& j);

}  // namespace ctxbench
