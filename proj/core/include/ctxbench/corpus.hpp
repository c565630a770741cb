#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxbench {

enum class TaskKind { FreeForm, MultipleChoice };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view s);

inline constexpr std::size_t kMcOptionCount = 4;
inline constexpr int kSchemaVersion = 1;

struct QARecord {
  std::string id;
  std::string question;
  std::string context;
  // Non-empty; the first element is the canonical answer.
  std::vector<std::string> gold_answers;
  std::optional<std::vector<std::string>> options;
  std::optional<std::size_t> correct_option_index;
  TaskKind task_kind = TaskKind::FreeForm;

  const std::string& canonical_answer() const { return gold_answers.front(); }

  bool operator==(const QARecord&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<QARecord> records;
  int schema_version = kSchemaVersion;

  TaskKind task_kind() const;
  const QARecord* find(std::string_view id) const;

  bool operator==(const Dataset&) const = default;
};

// Checks every record and dataset invariant; throws InvalidDataset.
void validate(const Dataset& dataset);

enum class FreeFormFormat { SquadV1Json, GenericJsonl };
enum class McqaFormat { McqaJsonl };

Dataset parse_freeform(const std::filesystem::path& path, FreeFormFormat format);
Dataset parse_mcqa(const std::filesystem::path& path, McqaFormat format = McqaFormat::McqaJsonl);

// String-level entry points used by the file readers (and by tests).
Dataset parse_squad_v1(std::string_view json_text, std::string name);
Dataset parse_generic_jsonl(std::string_view text, std::string name);
Dataset parse_mcqa_jsonl(std::string_view text, std::string name);

/// Canonical persisted form: one JSON object per line, stable field order,
/// every line carries `schema_version` and the dataset name.
std::string serialize_canonical(const Dataset& dataset);
Dataset parse_canonical(std::string_view text);
void write_canonical(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_canonical(const std::filesystem::path& path);

struct FilterResult {
  Dataset retained;
  std::vector<std::string> discarded;
};

// Keeps records whose canonical answer occurs verbatim in the context.
FilterResult filter_verbatim(const Dataset& dataset);

struct AnswerSpan {
  std::size_t begin = 0;
  std::size_t length = 0;
};

// First word-bounded occurrence of the canonical answer in the context.
std::optional<AnswerSpan> canonical_span(const QARecord& record);

}  // namespace ctxbench
