#include "ctxbench/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxbench/error.hpp"
#include "ctxbench/text.hpp"

namespace ctxbench {

using nlohmann::json;

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::FreeForm ? "free_form" : "multiple_choice";
}

TaskKind task_kind_from_string(std::string_view s) {
  if (s == "free_form") return TaskKind::FreeForm;
  if (s == "multiple_choice") return TaskKind::MultipleChoice;
  throw Error(ErrorCode::MalformedInput, "unknown task_kind '" + std::string(s) + "'");
}

TaskKind Dataset::task_kind() const {
  return records.empty() ? TaskKind::FreeForm : records.front().task_kind;
}

const QARecord* Dataset::find(std::string_view id) const {
  auto it = std::find_if(records.begin(), records.end(),
                         [&](const QARecord& r) { return r.id == id; });
  return it == records.end() ? nullptr : &*it;
}

void validate(const Dataset& dataset) {
  std::set<std::string_view> ids;
  for (const auto& r : dataset.records) {
    const std::string where = "record '" + r.id + "'";
    if (!ids.insert(r.id).second) throw Error(ErrorCode::InvalidDataset, "duplicate id in " + where);
    if (r.gold_answers.empty()) throw Error(ErrorCode::InvalidDataset, "no gold answers in " + where);
    if (r.task_kind != dataset.task_kind()) {
      throw Error(ErrorCode::InvalidDataset, "mixed task kinds at " + where);
    }
    const bool mc = r.task_kind == TaskKind::MultipleChoice;
    if (mc != (r.options.has_value() && r.correct_option_index.has_value())) {
      throw Error(ErrorCode::InvalidDataset, "task kind does not match options in " + where);
    }
    if (mc) {
      if (r.options->size() != kMcOptionCount) {
        throw Error(ErrorCode::OptionCountError, where + " has " + std::to_string(r.options->size()) + " options");
      }
      if (*r.correct_option_index >= r.options->size()) {
        throw Error(ErrorCode::IndexOutOfRange, "correct index out of range in " + where);
      }
      if ((*r.options)[*r.correct_option_index] != r.canonical_answer()) {
        throw Error(ErrorCode::InvalidDataset, "correct option differs from gold in " + where);
      }
    }
  }
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string require_string(const json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorCode::MalformedInput, where + ": missing string field '" + field + "'");
  }
  return it->get<std::string>();
}

void push_unique(std::vector<std::string>& out, std::string s) {
  if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
}

json parse_json(std::string_view text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, where + ": " + e.what());
  }
}

// Calls fn(line_json, "line N") for every non-blank line.
template <typename Fn>
void for_each_jsonl(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (collapse_whitespace(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    json j = parse_json(line, where);
    if (!j.is_object()) throw Error(ErrorCode::MalformedInput, where + ": expected a JSON object");
    fn(j, where);
  }
}

void finish(Dataset& ds) {
  if (ds.records.empty()) throw Error(ErrorCode::EmptyDataset, "dataset '" + ds.name + "' has no questions");
  std::set<std::string> ids;
  for (const auto& r : ds.records) {
    if (!ids.insert(r.id).second) throw Error(ErrorCode::MalformedInput, "duplicate id '" + r.id + "'");
  }
  validate(ds);
}

std::string stem_name(const std::filesystem::path& path) { return path.stem().string(); }

}  // namespace

Dataset parse_squad_v1(std::string_view json_text, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  json root = parse_json(json_text, "document");
  if (!root.is_object() || !root.contains("data") || !root["data"].is_array()) {
    throw Error(ErrorCode::MalformedInput, "document: missing 'data' array");
  }
  const auto& data = root["data"];
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string art = "data[" + std::to_string(a) + "]";
    const auto& article = data[a];
    if (!article.is_object() || !article.contains("paragraphs") || !article["paragraphs"].is_array()) {
      throw Error(ErrorCode::MalformedInput, art + ": missing 'paragraphs' array");
    }
    const auto& paragraphs = article["paragraphs"];
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string par = art + ".paragraphs[" + std::to_string(p) + "]";
      const auto& paragraph = paragraphs[p];
      if (!paragraph.is_object()) throw Error(ErrorCode::MalformedInput, par + ": expected object");
      const std::string context = require_string(paragraph, "context", par);
      if (!paragraph.contains("qas") || !paragraph["qas"].is_array()) {
        throw Error(ErrorCode::MalformedInput, par + ": missing 'qas' array");
      }
      const auto& qas = paragraph["qas"];
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string where = par + ".qas[" + std::to_string(q) + "]";
        const auto& qa = qas[q];
        if (!qa.is_object()) throw Error(ErrorCode::MalformedInput, where + ": expected object");
        QARecord r;
        r.id = require_string(qa, "id", where);
        r.question = require_string(qa, "question", where);
        r.context = context;
        if (!qa.contains("answers") || !qa["answers"].is_array()) {
          throw Error(ErrorCode::MalformedInput, where + ": missing 'answers' array");
        }
        for (const auto& ans : qa["answers"]) {
          if (!ans.is_object()) throw Error(ErrorCode::MalformedInput, where + ": answer must be an object");
          push_unique(r.gold_answers, require_string(ans, "text", where + ".answers"));
        }
        if (r.gold_answers.empty()) throw Error(ErrorCode::MalformedInput, where + ": no answers");
        ds.records.push_back(std::move(r));
      }
    }
  }
  finish(ds);
  return ds;
}

Dataset parse_generic_jsonl(std::string_view text, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  for_each_jsonl(text, [&](const json& j, const std::string& where) {
    QARecord r;
    r.id = require_string(j, "id", where);
    r.question = require_string(j, "question", where);
    r.context = require_string(j, "context", where);
    auto it = j.find("answers");
    if (it == j.end() || !it->is_array() || it->empty()) {
      throw Error(ErrorCode::MalformedInput, where + ": 'answers' must be a non-empty array");
    }
    for (const auto& a : *it) {
      if (!a.is_string()) throw Error(ErrorCode::MalformedInput, where + ": answers must be strings");
      push_unique(r.gold_answers, a.get<std::string>());
    }
    ds.records.push_back(std::move(r));
  });
  finish(ds);
  return ds;
}

Dataset parse_mcqa_jsonl(std::string_view text, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  for_each_jsonl(text, [&](const json& j, const std::string& where) {
    QARecord r;
    r.task_kind = TaskKind::MultipleChoice;
    r.id = require_string(j, "id", where);
    r.question = require_string(j, "question", where);
    r.context = require_string(j, "context", where);
    auto opts = j.find("options");
    if (opts == j.end() || !opts->is_array()) {
      throw Error(ErrorCode::MalformedInput, where + ": 'options' must be an array");
    }
    std::vector<std::string> options;
    for (const auto& o : *opts) {
      if (!o.is_string()) throw Error(ErrorCode::MalformedInput, where + ": options must be strings");
      options.push_back(o.get<std::string>());
    }
    if (options.size() != kMcOptionCount) {
      throw Error(ErrorCode::OptionCountError,
                  where + ": expected 4 options, got " + std::to_string(options.size()));
    }
    auto correct = j.find("correct");
    if (correct == j.end() || !correct->is_number_integer()) {
      throw Error(ErrorCode::MalformedInput, where + ": 'correct' must be an integer");
    }
    const auto idx = correct->get<std::int64_t>();
    if (idx < 0 || idx >= static_cast<std::int64_t>(options.size())) {
      throw Error(ErrorCode::IndexOutOfRange, where + ": correct index " + std::to_string(idx));
    }
    r.correct_option_index = static_cast<std::size_t>(idx);
    r.gold_answers = {options[*r.correct_option_index]};
    r.options = std::move(options);
    ds.records.push_back(std::move(r));
  });
  finish(ds);
  return ds;
}

Dataset parse_freeform(const std::filesystem::path& path, FreeFormFormat format) {
  const std::string text = read_file(path);
  try {
    return format == FreeFormFormat::SquadV1Json ? parse_squad_v1(text, stem_name(path))
                                                 : parse_generic_jsonl(text, stem_name(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

Dataset parse_mcqa(const std::filesystem::path& path, McqaFormat) {
  const std::string text = read_file(path);
  try {
    return parse_mcqa_jsonl(text, stem_name(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string serialize_canonical(const Dataset& dataset) {
  std::string out;
  for (const auto& r : dataset.records) {
    nlohmann::ordered_json j;
    j["schema_version"] = dataset.schema_version;
    j["dataset"] = dataset.name;
    j["id"] = r.id;
    j["task_kind"] = to_string(r.task_kind);
    j["question"] = r.question;
    j["context"] = r.context;
    j["answers"] = r.gold_answers;
    if (r.options) {
      j["options"] = *r.options;
      j["correct"] = *r.correct_option_index;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset parse_canonical(std::string_view text) {
  Dataset ds;
  bool first = true;
  for_each_jsonl(text, [&](const json& j, const std::string& where) {
    auto version = j.find("schema_version");
    if (version == j.end() || !version->is_number_integer() || version->get<int>() != kSchemaVersion) {
      throw Error(ErrorCode::MalformedInput, where + ": unsupported schema_version");
    }
    const std::string name = require_string(j, "dataset", where);
    if (first) {
      ds.name = name;
      first = false;
    } else if (name != ds.name) {
      throw Error(ErrorCode::MalformedInput, where + ": dataset name changes mid-file");
    }
    QARecord r;
    r.id = require_string(j, "id", where);
    r.task_kind = task_kind_from_string(require_string(j, "task_kind", where));
    r.question = require_string(j, "question", where);
    r.context = require_string(j, "context", where);
    auto answers = j.find("answers");
    if (answers == j.end() || !answers->is_array()) {
      throw Error(ErrorCode::MalformedInput, where + ": 'answers' must be an array");
    }
    for (const auto& a : *answers) {
      if (!a.is_string()) throw Error(ErrorCode::MalformedInput, where + ": answers must be strings");
      r.gold_answers.push_back(a.get<std::string>());
    }
    if (r.task_kind == TaskKind::MultipleChoice) {
      if (!j.contains("options") || !j["options"].is_array() || !j.contains("correct") ||
          !j["correct"].is_number_unsigned()) {
        throw Error(ErrorCode::MalformedInput, where + ": multiple-choice record needs options/correct");
      }
      r.options = j["options"].get<std::vector<std::string>>();
      r.correct_option_index = j["correct"].get<std::size_t>();
    }
    ds.records.push_back(std::move(r));
  });
  finish(ds);
  return ds;
}

void write_canonical(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << serialize_canonical(dataset);
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

Dataset read_canonical(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_canonical(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::optional<AnswerSpan> canonical_span(const QARecord& record) {
  const std::string& answer = record.canonical_answer();
  auto pos = find_verbatim(record.context, answer);
  if (!pos) return std::nullopt;
  return AnswerSpan{*pos, answer.size()};
}

FilterResult filter_verbatim(const Dataset& dataset) {
  FilterResult result;
  result.retained.name = dataset.name;
  result.retained.schema_version = dataset.schema_version;
  for (const auto& r : dataset.records) {
    if (canonical_span(r)) {
      result.retained.records.push_back(r);
    } else {
      result.discarded.push_back(r.id);
    }
  }
  return result;
}

}  // namespace ctxbench
