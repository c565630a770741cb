#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxbench/corpus.hpp"
#include "ctxbench/prompt.hpp"
#include "ctxbench/qa_model.hpp"

namespace ctxbench {

struct KnowledgePartition {
  std::string model_id;
  // Both in dataset order.
  std::vector<std::string> known_ids;
  std::vector<std::string> unknown_ids;
  std::map<std::string, ModelAnswer> closed_book_answers;
  // |known| / total rounded to 3 decimals.
  double knowledge_amount = 0.0;

  bool is_known(std::string_view id) const;
  bool operator==(const KnowledgePartition&) const = default;
};

// EM against any gold (free-form) or option index match (multiple choice).
bool answers_record(const QARecord& record, const ModelAnswer& answer);

/// Closed-book probe: asks the model every question with an empty context
/// and puts the record in the known split iff the answer is correct.
/// Provider failures propagate; no partial partition is returned.
KnowledgePartition probe(const Dataset& dataset, QaModel& model, const PromptTemplate& tmpl);

void check_partition(const KnowledgePartition& partition, const Dataset& dataset);

nlohmann::ordered_json to_json(const KnowledgePartition& p);
KnowledgePartition partition_from_json(const nlohmann::json& j);

// Cache key over (dataset content, model id, template).
std::string probe_cache_key(const Dataset& dataset, std::string_view model_id,
                            const PromptTemplate& tmpl);

}  // namespace ctxbench
