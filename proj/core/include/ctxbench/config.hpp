#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctxbench/http_provider.hpp"
#include "ctxbench/perturb.hpp"

namespace ctxbench {

// Flat view of a TOML-style file: `[section]` headers and `key = value`
// lines, values being quoted strings, integers, floats or booleans. Keys are
// addressed as "section.key".
using ConfigValue = std::variant<std::string, std::int64_t, double, bool>;
using ConfigTable = std::map<std::string, ConfigValue>;

ConfigTable parse_config_text(std::string_view text);

// Where a provider lives: "mock:<name>", an http(s) base URL, or nothing.
struct ProviderEndpoint {
  std::string spec;

  bool empty() const { return spec.empty(); }
  bool is_mock() const;
  std::string mock_name() const;
};

struct RunConfig {
  std::filesystem::path dataset_path;
  std::string dataset_format = "squad_v1";  // squad_v1 | generic_jsonl | mcqa_jsonl
  std::string dataset_name;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;

  std::size_t conflicting_k = 10;
  std::size_t irrelevant_n = 5;
  bool strict_equality = false;
  std::size_t distractor_length = 10;
  std::size_t distractor_epochs = 3;
  std::filesystem::path pool_path;  // empty: built-in 1,000 common English words
  bool include_question_words = true;
  DistractorPlacement placement = DistractorPlacement::Append;
  bool reuse_distractor = false;

  std::string model_id;
  ProviderEndpoint eval_model;
  ProviderEndpoint fill;
  ProviderEndpoint scorer;
  std::size_t max_answer_tokens = 32;
  double mock_planted_fraction = 0.3;

  std::string pattern = "question: {question}. context: {context}.";
  std::string closed_book_pattern = "question: {question}. context:";

  std::int64_t timeout_ms = 30'000;
  int max_retries = 3;
  std::int64_t backoff_ms = 500;
  std::size_t parallelism = 4;
  bool use_batch_endpoints = false;

  bool force = false;

  // Relative paths in the file resolve against the file's directory.
  static RunConfig from_table(const ConfigTable& table, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  // Throws ConfigError: explicit seed, resolvable paths, known formats.
  void validate(bool need_dataset_file) const;

  HttpProviderConfig http_config(const std::string& base_url) const;

  // SHA-256 over every field that affects artifacts.
  std::string fingerprint() const;
};

}  // namespace ctxbench
