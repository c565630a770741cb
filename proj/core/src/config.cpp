#include "ctxbench/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxbench/error.hpp"
#include "ctxbench/hash.hpp"
#include "ctxbench/prompt.hpp"
#include "ctxbench/text.hpp"

namespace ctxbench {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

// Parses a value starting at s[0]; returns the value and the remaining text.
std::pair<ConfigValue, std::string_view> parse_value(std::string_view s, std::size_t line) {
  if (s.empty()) fail(line, "missing value");
  if (s.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < s.size() && s[i] != '"'; ++i) {
      if (s[i] != '\\') {
        out.push_back(s[i]);
        continue;
      }
      if (++i >= s.size()) fail(line, "unterminated escape");
      switch (s[i]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: fail(line, std::string("unsupported escape \\") + s[i]);
      }
    }
    if (i >= s.size()) fail(line, "unterminated string");
    return {out, s.substr(i + 1)};
  }
  if (s.front() == '\'') {
    const auto end = s.find('\'', 1);
    if (end == std::string_view::npos) fail(line, "unterminated literal string");
    return {std::string(s.substr(1, end - 1)), s.substr(end + 1)};
  }
  std::size_t end = 0;
  while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end])) && s[end] != '#') ++end;
  const std::string token = std::string(s.substr(0, end));
  const auto rest = s.substr(end);
  if (token == "true") return {true, rest};
  if (token == "false") return {false, rest};
  std::string digits;
  for (char c : token) {
    if (c != '_') digits.push_back(c);
  }
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
  if (ec == std::errc() && p == digits.data() + digits.size()) return {i, rest};
  try {
    std::size_t used = 0;
    const double d = std::stod(digits, &used);
    if (used == digits.size()) return {d, rest};
  } catch (const std::exception&) {
  }
  fail(line, "cannot parse value '" + token + "'");
}

template <typename T>
const T* get_if(const ConfigTable& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end()) return nullptr;
  const T* v = std::get_if<T>(&it->second);
  if (!v) throw Error(ErrorCode::ConfigError, "key '" + key + "' has the wrong type");
  return v;
}

}  // namespace

ConfigTable parse_config_text(std::string_view text) {
  ConfigTable table;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string l = trim(raw);
    if (l.empty() || l.front() == '#') continue;
    if (l.front() == '[') {
      const auto close = l.find(']');
      if (close == std::string::npos || trim(l.substr(close + 1)).size() > 0) fail(line, "malformed section header");
      section = trim(l.substr(1, close - 1));
      if (!is_bare_key(section)) fail(line, "bad section name '" + section + "'");
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(l.substr(0, eq));
    if (!is_bare_key(key)) fail(line, "bad key '" + key + "'");
    const std::string value_text = trim(l.substr(eq + 1));
    auto [value, rest] = parse_value(value_text, line);
    const std::string tail = trim(rest);
    if (!tail.empty() && tail.front() != '#') fail(line, "trailing characters after value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!table.emplace(full, std::move(value)).second) fail(line, "duplicate key '" + full + "'");
  }
  return table;
}

bool ProviderEndpoint::is_mock() const { return spec.starts_with("mock:"); }

std::string ProviderEndpoint::mock_name() const { return is_mock() ? spec.substr(5) : std::string(); }

RunConfig RunConfig::from_table(const ConfigTable& table, const std::filesystem::path& base_dir) {
  RunConfig c;
  std::set<std::string> used;
  auto str = [&](const std::string& key, auto&& apply) {
    if (auto v = get_if<std::string>(table, key)) apply(*v);
    used.insert(key);
  };
  auto integer = [&](const std::string& key, auto&& apply) {
    if (auto v = get_if<std::int64_t>(table, key)) {
      if (*v < 0) throw Error(ErrorCode::ConfigError, "key '" + key + "' must be non-negative");
      apply(*v);
    }
    used.insert(key);
  };
  auto boolean = [&](const std::string& key, bool& out) {
    if (auto v = get_if<bool>(table, key)) out = *v;
    used.insert(key);
  };
  auto real = [&](const std::string& key, double& out) {
    auto it = table.find(key);
    if (it != table.end()) {
      if (auto d = std::get_if<double>(&it->second)) {
        out = *d;
      } else if (auto i = std::get_if<std::int64_t>(&it->second)) {
        out = static_cast<double>(*i);
      } else {
        throw Error(ErrorCode::ConfigError, "key '" + key + "' must be a number");
      }
    }
    used.insert(key);
  };
  auto path = [&](const std::string& key, std::filesystem::path& out) {
    str(key, [&](const std::string& v) {
      std::filesystem::path p(v);
      out = p.is_absolute() || v.empty() ? p : base_dir / p;
    });
  };
  auto size = [](std::size_t& out) { return [&out](std::int64_t v) { out = static_cast<std::size_t>(v); }; };

  path("dataset.path", c.dataset_path);
  str("dataset.format", [&](const std::string& v) { c.dataset_format = v; });
  str("dataset.name", [&](const std::string& v) { c.dataset_name = v; });
  path("output.dir", c.out_dir);
  integer("run.seed", [&](std::int64_t v) { c.seed = static_cast<std::uint64_t>(v); });
  integer("run.parallelism", size(c.parallelism));
  integer("perturb.k", size(c.conflicting_k));
  integer("perturb.n", size(c.irrelevant_n));
  boolean("perturb.strict_equality", c.strict_equality);
  integer("distractor.length", size(c.distractor_length));
  integer("distractor.max_epochs", size(c.distractor_epochs));
  path("distractor.pool", c.pool_path);
  boolean("distractor.include_question_words", c.include_question_words);
  str("distractor.placement", [&](const std::string& v) { c.placement = distractor_placement_from_string(v); });
  boolean("distractor.reuse", c.reuse_distractor);
  str("model.id", [&](const std::string& v) { c.model_id = v; });
  str("model.endpoint", [&](const std::string& v) { c.eval_model.spec = v; });
  integer("model.max_answer_tokens", size(c.max_answer_tokens));
  str("providers.fill", [&](const std::string& v) { c.fill.spec = v; });
  str("providers.scorer", [&](const std::string& v) { c.scorer.spec = v; });
  integer("http.timeout_ms", [&](std::int64_t v) { c.timeout_ms = v; });
  integer("http.retries", [&](std::int64_t v) { c.max_retries = static_cast<int>(v); });
  integer("http.backoff_ms", [&](std::int64_t v) { c.backoff_ms = v; });
  boolean("http.batch", c.use_batch_endpoints);
  str("template.pattern", [&](const std::string& v) { c.pattern = v; });
  str("template.closed_book", [&](const std::string& v) { c.closed_book_pattern = v; });
  real("mock.planted_fraction", c.mock_planted_fraction);

  for (const auto& [key, value] : table) {
    if (!used.count(key)) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return from_table(parse_config_text(ss.str()), path.parent_path());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

namespace {

void check_endpoint(const ProviderEndpoint& e, const char* role, std::initializer_list<std::string_view> mocks) {
  if (e.empty()) return;
  if (e.is_mock()) {
    for (auto m : mocks) {
      if (e.mock_name() == m) return;
    }
    throw Error(ErrorCode::ConfigError, std::string(role) + ": unknown mock '" + e.spec + "'");
  }
  if (!e.spec.starts_with("http://") && !e.spec.starts_with("https://")) {
    throw Error(ErrorCode::ConfigError, std::string(role) + ": endpoint must be mock:<name> or an http(s) URL");
  }
}

}  // namespace

void RunConfig::validate(bool need_dataset_file) const {
  if (!seed) throw Error(ErrorCode::ConfigError, "seed must be set explicitly (run.seed or --seed)");
  if (out_dir.empty()) throw Error(ErrorCode::ConfigError, "output directory must be set (output.dir or --out)");
  if (dataset_format != "squad_v1" && dataset_format != "generic_jsonl" && dataset_format != "mcqa_jsonl") {
    throw Error(ErrorCode::ConfigError, "dataset.format must be squad_v1, generic_jsonl or mcqa_jsonl");
  }
  if (need_dataset_file) {
    if (dataset_path.empty()) throw Error(ErrorCode::ConfigError, "dataset.path must be set");
    if (!std::filesystem::is_regular_file(dataset_path)) {
      throw Error(ErrorCode::ConfigError, "dataset file not found: " + dataset_path.string());
    }
  }
  if (!pool_path.empty() && !std::filesystem::is_regular_file(pool_path)) {
    throw Error(ErrorCode::ConfigError, "distractor pool file not found: " + pool_path.string());
  }
  if (conflicting_k == 0 || irrelevant_n == 0) throw Error(ErrorCode::ConfigError, "perturb.k and perturb.n must be >= 1");
  if (distractor_length == 0 || distractor_epochs == 0) {
    throw Error(ErrorCode::ConfigError, "distractor.length and distractor.max_epochs must be >= 1");
  }
  if (parallelism == 0) throw Error(ErrorCode::ConfigError, "parallelism must be >= 1");
  if (mock_planted_fraction < 0.0 || mock_planted_fraction > 1.0) {
    throw Error(ErrorCode::ConfigError, "mock.planted_fraction must lie in [0, 1]");
  }
  try {
    PromptTemplate tmpl(pattern, closed_book_pattern);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.detail());
  }
  check_endpoint(eval_model, "model.endpoint", {"context_echo", "parametric", "uniform"});
  check_endpoint(fill, "providers.fill", {"generated"});
  check_endpoint(scorer, "providers.scorer", {"noisy", "uniform", "context_echo", "parametric"});
}

HttpProviderConfig RunConfig::http_config(const std::string& base_url) const {
  HttpProviderConfig h = HttpProviderConfig::from_env();
  h.base_url = base_url;
  h.timeout = std::chrono::milliseconds(timeout_ms);
  h.max_retries = max_retries;
  h.backoff_base = std::chrono::milliseconds(backoff_ms);
  h.max_parallel = parallelism;
  h.use_batch_endpoints = use_batch_endpoints;
  return h;
}

std::string RunConfig::fingerprint() const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset_path.filename().string();
  j["format"] = dataset_format;
  j["name"] = dataset_name;
  j["seed"] = seed.value_or(0);
  j["k"] = conflicting_k;
  j["n"] = irrelevant_n;
  j["strict"] = strict_equality;
  j["d"] = distractor_length;
  j["epochs"] = distractor_epochs;
  j["pool"] = pool_path.filename().string();
  j["question_words"] = include_question_words;
  j["placement"] = to_string(placement);
  j["reuse"] = reuse_distractor;
  j["model_id"] = model_id;
  j["model"] = eval_model.spec;
  j["fill"] = fill.spec;
  j["scorer"] = scorer.spec;
  j["max_answer_tokens"] = max_answer_tokens;
  j["planted"] = mock_planted_fraction;
  j["pattern"] = pattern;
  j["closed_book"] = closed_book_pattern;
  return sha256_hex(j.dump());
}

}  // namespace ctxbench
