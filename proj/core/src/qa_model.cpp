#include "ctxbench/qa_model.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>

#include "ctxbench/error.hpp"
#include "ctxbench/hash.hpp"

namespace ctxbench {

using nlohmann::json;

ModelAnswer QaModel::answer(const AnswerRequest& request) {
  return answer_batch(std::span<const AnswerRequest>(&request, 1)).front();
}

std::size_t argmax_lowest(const std::vector<double>& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

ProviderQaModel::ProviderQaModel(std::string model_id, GenerationProvider* generator, ScoringProvider* scorer,
                                 std::size_t max_answer_tokens)
    : model_id_(std::move(model_id)),
      generator_(generator),
      scorer_(scorer),
      max_answer_tokens_(max_answer_tokens) {}

std::vector<ModelAnswer> ProviderQaModel::answer_batch(std::span<const AnswerRequest> requests) {
  std::vector<ModelAnswer> out(requests.size());
  std::vector<GenerateQuery> gen;
  std::vector<std::size_t> gen_slots;
  std::vector<ScoreQuery> mc;
  std::vector<std::size_t> mc_slots;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    if (r.options) {
      mc.push_back(ScoreQuery::options(r.prompt, *r.options));
      mc_slots.push_back(i);
    } else {
      gen.push_back(GenerateQuery{r.prompt, max_answer_tokens_});
      gen_slots.push_back(i);
    }
  }
  if (!gen.empty()) {
    if (!generator_) throw Error(ErrorCode::ModeMismatch, model_id_ + " has no generation endpoint");
    auto results = generator_->generate_batch(gen);
    for (std::size_t k = 0; k < results.size(); ++k) out[gen_slots[k]].text = std::move(results[k].answer_text);
  }
  if (!mc.empty()) {
    if (!scorer_) throw Error(ErrorCode::ModeMismatch, model_id_ + " has no scoring endpoint");
    auto results = scorer_->score_batch(mc);
    for (std::size_t k = 0; k < results.size(); ++k) {
      check_score_result(mc[k], results[k]);
      const std::size_t idx = argmax_lowest(results[k].option_probs());
      out[mc_slots[k]].option_index = idx;
      out[mc_slots[k]].text = mc[k].option_texts()[idx];
    }
  }
  return out;
}

json to_json(const ModelAnswer& a) {
  json j = {{"text", a.text}};
  if (a.option_index) j["option_index"] = *a.option_index;
  return j;
}

ModelAnswer model_answer_from_json(const json& j) {
  ModelAnswer a;
  a.text = j.at("text").get<std::string>();
  if (j.contains("option_index")) a.option_index = j.at("option_index").get<std::size_t>();
  return a;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ResponseCache::key(const std::string& model_id, const AnswerRequest& request) {
  json j = {{"model_id", model_id}, {"prompt", request.prompt}};
  if (request.options) j["options"] = *request.options;
  return sha256_hex(j.dump());
}

std::optional<ModelAnswer> ResponseCache::get(const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  std::ifstream in(path);
  std::lock_guard<std::mutex> lock(mu_);
  if (!in) {
    ++misses_;
    return std::nullopt;
  }
  try {
    auto answer = model_answer_from_json(json::parse(in));
    ++hits_;
    return answer;
  } catch (const json::exception&) {
    // A torn entry counts as absent and is rewritten on the next put.
    ++misses_;
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const ModelAnswer& answer) {
  const auto final_path = dir_ / (key + ".json");
  static std::atomic<std::uint64_t> counter{0};
  const auto tmp = dir_ / (key + ".json.tmp" + std::to_string(counter++));
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << to_json(answer).dump();
    if (!out) throw Error(ErrorCode::Io, "cannot write cache entry " + tmp.string());
  }
  std::filesystem::rename(tmp, final_path);
}

std::size_t ResponseCache::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}

std::size_t ResponseCache::misses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return misses_;
}

std::vector<ModelAnswer> CachedQaModel::answer_batch(std::span<const AnswerRequest> requests) {
  std::vector<ModelAnswer> out(requests.size());
  std::vector<std::string> keys(requests.size());
  std::vector<AnswerRequest> pending;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    keys[i] = ResponseCache::key(inner_.model_id(), requests[i]);
    if (auto hit = cache_.get(keys[i])) {
      out[i] = std::move(*hit);
    } else {
      pending.push_back(requests[i]);
      slots.push_back(i);
    }
  }
  // Chunked so an interrupted batch keeps the answers it already obtained.
  constexpr std::size_t kChunk = 16;
  for (std::size_t begin = 0; begin < pending.size(); begin += kChunk) {
    const std::size_t len = std::min(kChunk, pending.size() - begin);
    auto fresh = inner_.answer_batch(std::span<const AnswerRequest>(pending).subspan(begin, len));
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      const std::size_t slot = slots[begin + k];
      cache_.put(keys[slot], fresh[k]);
      out[slot] = std::move(fresh[k]);
    }
  }
  return out;
}

}  // namespace ctxbench
