#include "ctxbench/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ctxbench/error.hpp"
#include "ctxbench/eval.hpp"
#include "ctxbench/hash.hpp"

namespace ctxbench {

using nlohmann::json;

bool KnowledgePartition::is_known(std::string_view id) const {
  return std::find(known_ids.begin(), known_ids.end(), id) != known_ids.end();
}

bool answers_record(const QARecord& record, const ModelAnswer& answer) {
  if (record.task_kind == TaskKind::MultipleChoice) {
    return answer.option_index.has_value() && *answer.option_index == *record.correct_option_index;
  }
  return exact_match(answer.text, record.gold_answers);
}

KnowledgePartition probe(const Dataset& dataset, QaModel& model, const PromptTemplate& tmpl) {
  std::vector<AnswerRequest> requests;
  requests.reserve(dataset.records.size());
  for (const auto& r : dataset.records) requests.push_back({tmpl.render_closed_book(r.question), r.options});
  const auto answers = model.answer_batch(requests);

  KnowledgePartition p;
  p.model_id = model.model_id();
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    (answers_record(r, answers[i]) ? p.known_ids : p.unknown_ids).push_back(r.id);
    // Multiple choice keeps only the chosen index, matching the persisted form.
    p.closed_book_answers[r.id] =
        answers[i].option_index ? ModelAnswer{"", answers[i].option_index} : ModelAnswer{answers[i].text, std::nullopt};
  }
  const double total = static_cast<double>(dataset.records.size());
  p.knowledge_amount = total == 0 ? 0.0 : std::round(1000.0 * static_cast<double>(p.known_ids.size()) / total) / 1000.0;
  return p;
}

void check_partition(const KnowledgePartition& partition, const Dataset& dataset) {
  std::set<std::string> known(partition.known_ids.begin(), partition.known_ids.end());
  std::set<std::string> unknown(partition.unknown_ids.begin(), partition.unknown_ids.end());
  std::size_t covered = 0;
  for (const auto& r : dataset.records) {
    const bool k = known.count(r.id) > 0;
    const bool u = unknown.count(r.id) > 0;
    if (k == u) {
      throw Error(ErrorCode::InvalidDataset, "partition for '" + partition.model_id + "' does not place record '" +
                                                 r.id + "' in exactly one split");
    }
    ++covered;
  }
  if (covered != known.size() + unknown.size()) {
    throw Error(ErrorCode::InvalidDataset, "partition for '" + partition.model_id + "' lists unknown record ids");
  }
}

nlohmann::ordered_json to_json(const KnowledgePartition& p) {
  json answers = json::object();
  for (const auto& [id, a] : p.closed_book_answers) {
    answers[id] = a.option_index ? json(*a.option_index) : json(a.text);
  }
  nlohmann::ordered_json j;
  j["model_id"] = p.model_id;
  j["known_ids"] = p.known_ids;
  j["unknown_ids"] = p.unknown_ids;
  j["closed_book_answers"] = answers;
  j["knowledge_amount"] = p.knowledge_amount;
  return j;
}

KnowledgePartition partition_from_json(const json& j) {
  try {
    KnowledgePartition p;
    p.model_id = j.at("model_id").get<std::string>();
    p.known_ids = j.at("known_ids").get<std::vector<std::string>>();
    p.unknown_ids = j.at("unknown_ids").get<std::vector<std::string>>();
    for (const auto& [id, v] : j.at("closed_book_answers").items()) {
      ModelAnswer a;
      if (v.is_number_integer()) {
        a.option_index = v.get<std::size_t>();
      } else {
        a.text = v.get<std::string>();
      }
      p.closed_book_answers[id] = a;
    }
    p.knowledge_amount = j.at("knowledge_amount").get<double>();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("partition: ") + e.what());
  }
}

std::string probe_cache_key(const Dataset& dataset, std::string_view model_id, const PromptTemplate& tmpl) {
  const std::string material = sha256_hex(serialize_canonical(dataset)) + '\0' + std::string(model_id) + '\0' +
                               tmpl.fingerprint();
  return sha256_hex(material);
}

}  // namespace ctxbench
