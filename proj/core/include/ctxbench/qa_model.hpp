#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxbench/providers.hpp"

namespace ctxbench {

struct AnswerRequest {
  std::string prompt;
  // Present for multiple-choice questions.
  std::optional<std::vector<std::string>> options;
};

struct ModelAnswer {
  std::string text;
  std::optional<std::size_t> option_index;

  bool operator==(const ModelAnswer&) const = default;
};

// The evaluated model as seen by probing and evaluation: free-form questions
// are answered by generation, multiple-choice ones by option scoring.
class QaModel {
 public:
  virtual ~QaModel() = default;
  virtual const std::string& model_id() const = 0;
  virtual std::vector<ModelAnswer> answer_batch(std::span<const AnswerRequest> requests) = 0;

  ModelAnswer answer(const AnswerRequest& request);
};

// Index of the largest probability; ties go to the lowest index.
std::size_t argmax_lowest(const std::vector<double>& probs);

/// Routes free-form requests to a generation provider and multiple-choice
/// requests to a scoring provider. Either may be null; using the missing one
/// throws ModeMismatch.
class ProviderQaModel final : public QaModel {
 public:
  ProviderQaModel(std::string model_id, GenerationProvider* generator, ScoringProvider* scorer,
                  std::size_t max_answer_tokens = 32);

  const std::string& model_id() const override { return model_id_; }
  std::vector<ModelAnswer> answer_batch(std::span<const AnswerRequest> requests) override;

 private:
  std::string model_id_;
  GenerationProvider* generator_;
  ScoringProvider* scorer_;
  std::size_t max_answer_tokens_;
};

/// Content-addressed store of model responses: one JSON file per key under
/// `dir`, named by the SHA-256 of (model id, request). Writes go through a
/// temp file and rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key(const std::string& model_id, const AnswerRequest& request);

  std::optional<ModelAnswer> get(const std::string& key) const;
  void put(const std::string& key, const ModelAnswer& answer);

  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
};

// Read-through cache in front of another model.
class CachedQaModel final : public QaModel {
 public:
  CachedQaModel(QaModel& inner, ResponseCache& cache) : inner_(inner), cache_(cache) {}

  const std::string& model_id() const override { return inner_.model_id(); }
  std::vector<ModelAnswer> answer_batch(std::span<const AnswerRequest> requests) override;

 private:
  QaModel& inner_;
  ResponseCache& cache_;
};

nlohmann::json to_json(const ModelAnswer& a);
ModelAnswer model_answer_from_json(const nlohmann::json& j);

}  // namespace ctxbench
