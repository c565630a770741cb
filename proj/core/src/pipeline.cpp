#include "ctxbench/pipeline.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxbench/eval.hpp"
#include "ctxbench/hash.hpp"
#include "ctxbench/mock_providers.hpp"
#include "ctxbench/parallel.hpp"
#include "ctxbench/split.hpp"

namespace ctxbench {

namespace fs = std::filesystem;

ExitCode exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyPool:
      return ExitCode::ConfigError;
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::ProtocolError:
    case ErrorCode::BadMask:
    case ErrorCode::ModeMismatch:
    case ErrorCode::FillMaskFailure:
    case ErrorCode::ScorerFailure:
      return ExitCode::ProviderError;
    default:
      return ExitCode::InputError;
  }
}

namespace {

// Model ids appear in file names; anything outside [A-Za-z0-9._-] becomes '_'.
std::string path_safe(std::string_view id) {
  std::string out(id);
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

}  // namespace

fs::path ArtifactLayout::partition(const std::string& model_id) const {
  return root / "partition" / (path_safe(model_id) + ".json");
}

fs::path ArtifactLayout::variants(VariantKind kind) const {
  return root / "variants" / (std::string(to_string(kind)) + ".jsonl");
}

fs::path ArtifactLayout::progress(VariantKind kind) const {
  return root / "variants" / (std::string(to_string(kind)) + ".progress");
}

fs::path ArtifactLayout::report_dir(const std::string& model_id) const {
  return root / "reports" / path_safe(model_id);
}

// ---------------------------------------------------------------------------

OutputLock::OutputLock(const fs::path& lock_path) : path_(lock_path) {
  fs::create_directories(lock_path.parent_path());
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(lock_path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw Error(ErrorCode::Io, "cannot create lock " + lock_path.string());
    // A lock left behind by a dead process is taken over.
    std::ifstream in(lock_path);
    long holder = 0;
    if (in >> holder && holder > 0 && (::kill(static_cast<pid_t>(holder), 0) == 0 || errno == EPERM)) break;
    fs::remove(lock_path);
  }
  throw Error(ErrorCode::Io, "output directory " + lock_path.parent_path().string() +
                                 " is in use by another ctxbench process (lock: " + lock_path.string() + ")");
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

PerturbKind perturb_kind_from_string(std::string_view s) {
  if (s == "conflicting") return PerturbKind::Conflicting;
  if (s == "irrelevant") return PerturbKind::Irrelevant;
  if (s == "distractor") return PerturbKind::Distractor;
  throw Error(ErrorCode::ConfigError,
              "perturbation kind must be conflicting, irrelevant or distractor, got '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

namespace {

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string effective_model_id(const RunConfig& cfg) {
  if (!cfg.model_id.empty()) return cfg.model_id;
  if (cfg.eval_model.is_mock()) return cfg.eval_model.mock_name();
  return "model";
}

std::string eval_endpoint(const RunConfig& cfg) {
  if (!cfg.eval_model.empty()) return cfg.eval_model.spec;
  if (const char* url = std::getenv(kProviderUrlEnv); url && *url) return url;
  return {};
}

Dataset load_dataset(const ArtifactLayout& layout) {
  if (!fs::exists(layout.dataset())) {
    throw Error(ErrorCode::InvalidDataset, "no ingested dataset in " + layout.root.string() +
                                               "; run `ctxbench ingest` first");
  }
  return read_canonical(layout.dataset());
}

KnowledgePartition load_partition(const ArtifactLayout& layout, const std::string& model_id) {
  const auto path = layout.partition(model_id);
  if (!fs::exists(path)) {
    throw Error(ErrorCode::InvalidDataset,
                "no knowledge partition for '" + model_id + "'; run `ctxbench probe` first");
  }
  return partition_from_json(nlohmann::json::parse(read_file(path)));
}

// Per-kind resume state: source id -> "ok" or "no_survivors", in file order.
using Progress = std::map<std::string, std::string>;

Progress read_progress(const fs::path& path) {
  Progress done;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;  // torn final line
    done[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return done;
}

bool kind_complete(const Progress& done, const Dataset& dataset) {
  for (const auto& r : dataset.records) {
    if (!done.count(r.id)) return false;
  }
  return true;
}

// Variants of finished records; a torn final line is dropped.
std::vector<PerturbationVariant> read_finished_variants(const fs::path& path, const Progress& done) {
  std::vector<PerturbationVariant> out;
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      auto v = variant_from_jsonl_line(lines[i]);
      if (done.count(v.source_id)) out.push_back(std::move(v));
    } catch (const Error&) {
      if (i + 1 != lines.size()) throw;
    }
  }
  return out;
}

void load_kind(const ArtifactLayout& layout, VariantKind kind, VariantStore& store) {
  const auto vpath = layout.variants(kind);
  if (!fs::exists(vpath)) return;
  const auto done = read_progress(layout.progress(kind));
  store.add(read_finished_variants(vpath, done));
  for (const auto& [id, status] : done) {
    if (status == "no_survivors") store.mark_skipped(kind, id);
  }
  store.mark_loaded(kind);
}

// ---------------------------------------------------------------------------
// Providers named by the configuration.

struct Providers {
  std::unique_ptr<HttpProvider> eval_http;
  std::unique_ptr<HttpProvider> fill_http;
  std::unique_ptr<HttpProvider> scorer_http;
  std::unique_ptr<mock::ContextEchoModel> echo;
  std::unique_ptr<mock::ParametricModel> parametric;
  std::unique_ptr<mock::GeneratedFillMask> generated;
  std::unique_ptr<ScoringProvider> eval_mock_scorer;
  std::unique_ptr<ScoringProvider> mock_scorer;

  GenerationProvider* generator = nullptr;
  ScoringProvider* eval_scorer = nullptr;
  FillMaskProvider* fill = nullptr;
  ScoringProvider* scorer = nullptr;
};

// Echo lexicon: golds plus the persisted conflicting answers per record.
mock::ContextEchoModel::Lexicon echo_lexicon_for(const Dataset& dataset, const ArtifactLayout& layout) {
  std::map<std::string, std::vector<std::string>> extra;
  if (fs::exists(layout.variants(VariantKind::Conflicting))) {
    const auto done = read_progress(layout.progress(VariantKind::Conflicting));
    for (const auto& v : read_finished_variants(layout.variants(VariantKind::Conflicting), done)) {
      extra[v.source_id].push_back(v.expected_answer);
    }
  }
  return mock::echo_lexicon(dataset, extra);
}

Providers make_providers(const RunConfig& cfg, const Dataset& dataset, const ArtifactLayout& layout,
                         const PromptTemplate& tmpl) {
  Providers p;
  const std::uint64_t seed = *cfg.seed;
  const std::string model_spec = eval_endpoint(cfg);

  if (model_spec == "mock:context_echo") {
    p.echo = std::make_unique<mock::ContextEchoModel>(tmpl, echo_lexicon_for(dataset, layout));
    p.generator = p.echo.get();
    p.eval_scorer = p.echo.get();
  } else if (model_spec == "mock:parametric") {
    p.parametric = std::make_unique<mock::ParametricModel>(
        mock::make_parametric(dataset, tmpl, cfg.mock_planted_fraction, seed));
    p.generator = p.parametric.get();
    p.eval_scorer = p.parametric.get();
  } else if (model_spec == "mock:uniform") {
    p.eval_mock_scorer = std::make_unique<mock::UniformScorer>();
    p.eval_scorer = p.eval_mock_scorer.get();
  } else if (!model_spec.empty()) {
    p.eval_http = std::make_unique<HttpProvider>(cfg.http_config(model_spec));
    p.generator = p.eval_http.get();
    p.eval_scorer = p.eval_http.get();
  }

  if (cfg.fill.spec == "mock:generated") {
    p.generated = std::make_unique<mock::GeneratedFillMask>(seed, cfg.conflicting_k);
    p.fill = p.generated.get();
  } else if (!cfg.fill.empty()) {
    p.fill_http = std::make_unique<HttpProvider>(cfg.http_config(cfg.fill.spec));
    p.fill = p.fill_http.get();
  } else if (p.eval_http) {
    p.fill = p.eval_http.get();
  }

  const std::string scorer = cfg.scorer.spec;
  if (scorer == "mock:noisy") {
    p.mock_scorer = std::make_unique<mock::NoisyScorer>(seed);
    p.scorer = p.mock_scorer.get();
  } else if (scorer == "mock:uniform") {
    p.mock_scorer = std::make_unique<mock::UniformScorer>();
    p.scorer = p.mock_scorer.get();
  } else if (scorer == "mock:context_echo" || scorer == "mock:parametric") {
    if (scorer != model_spec) {
      throw Error(ErrorCode::ConfigError, "scorer " + scorer + " requires the same mock as model.endpoint");
    }
    p.scorer = p.eval_scorer;
  } else if (!scorer.empty()) {
    p.scorer_http = std::make_unique<HttpProvider>(cfg.http_config(scorer));
    p.scorer = p.scorer_http.get();
  } else if (p.eval_http) {
    p.scorer = p.eval_http.get();
  }
  return p;
}

PromptTemplate make_template(const RunConfig& cfg) { return PromptTemplate(cfg.pattern, cfg.closed_book_pattern); }

std::unique_ptr<QaModel> make_qa_model(const RunConfig& cfg, Providers& p) {
  if (!p.generator && !p.eval_scorer) {
    throw Error(ErrorCode::ConfigError, std::string("no model endpoint: set model.endpoint or ") + kProviderUrlEnv);
  }
  return std::make_unique<ProviderQaModel>(effective_model_id(cfg), p.generator, p.eval_scorer,
                                           cfg.max_answer_tokens);
}

// ---------------------------------------------------------------------------
// Resumable per-record generation of one variant kind.

struct RecordOutcome {
  std::vector<PerturbationVariant> variants;
  bool no_survivors = false;
};

using RecordFn = std::function<RecordOutcome(const QARecord&)>;

void generate_kind(const RunConfig& cfg, const ArtifactLayout& layout, const Dataset& dataset, VariantKind kind,
                   const RecordFn& fn, std::ostream& log) {
  const auto vpath = layout.variants(kind);
  const auto ppath = layout.progress(kind);
  fs::create_directories(vpath.parent_path());
  const std::string name(to_string(kind));

  if (cfg.force) {
    fs::remove(vpath);
    fs::remove(ppath);
  }
  Progress done = read_progress(ppath);
  if (kind_complete(done, dataset) && fs::exists(vpath)) {
    log << name << ": already complete, skipping (use --force to regenerate)\n";
    return;
  }
  // Rewrite both files so they hold exactly the finished records.
  {
    const auto kept = read_finished_variants(vpath, done);
    std::string vtext;
    for (const auto& v : kept) vtext += to_jsonl_line(v) + "\n";
    write_file_atomic(vpath, vtext);
    std::string ptext;
    for (const auto& r : dataset.records) {
      if (auto it = done.find(r.id); it != done.end()) ptext += r.id + "\t" + it->second + "\n";
    }
    write_file_atomic(ppath, ptext);
    if (!done.empty()) log << name << ": resuming after " << done.size() << " finished records\n";
  }

  std::vector<const QARecord*> todo;
  for (const auto& r : dataset.records) {
    if (!done.count(r.id)) todo.push_back(&r);
  }

  std::ofstream vout(vpath, std::ios::app | std::ios::binary);
  std::ofstream pout(ppath, std::ios::app | std::ios::binary);
  if (!vout || !pout) throw Error(ErrorCode::Io, "cannot append to " + vpath.string());

  const std::size_t chunk = std::max<std::size_t>(1, cfg.parallelism);
  std::size_t produced = 0;
  std::size_t skipped = 0;
  for (std::size_t start = 0; start < todo.size(); start += chunk) {
    const std::size_t count = std::min(chunk, todo.size() - start);
    std::vector<RecordOutcome> results(count);
    parallel_for(count, cfg.parallelism, [&](std::size_t i) { results[i] = fn(*todo[start + i]); });
    for (std::size_t i = 0; i < count; ++i) {
      for (const auto& v : results[i].variants) vout << to_jsonl_line(v) << "\n";
      vout.flush();
      pout << todo[start + i]->id << '\t' << (results[i].no_survivors ? "no_survivors" : "ok") << "\n";
      pout.flush();
      produced += results[i].variants.size();
      skipped += results[i].no_survivors ? 1 : 0;
    }
  }
  log << name << ": " << produced << " variants for " << todo.size() - skipped << " records";
  if (skipped) log << ", " << skipped << " records without surviving candidates";
  log << "\n";
}

std::optional<std::string> generated_at() {
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (!epoch || !*epoch) return std::nullopt;
  char* end = nullptr;
  const long long secs = std::strtoll(epoch, &end, 10);
  if (*end != '\0') throw Error(ErrorCode::ConfigError, "SOURCE_DATE_EPOCH must be an integer");
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

// Drops userinfo so tokens embedded in URLs never reach reports.
std::string redact(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) return endpoint;
  const auto at = endpoint.find('@', scheme);
  const auto slash = endpoint.find('/', scheme + 3);
  if (at == std::string::npos || (slash != std::string::npos && at > slash)) return endpoint;
  return endpoint.substr(0, scheme + 3) + endpoint.substr(at + 1);
}

}  // namespace

// ---------------------------------------------------------------------------

ExitCode cmd_ingest(const RunConfig& cfg, std::ostream& log) {
  cfg.validate(true);
  const ArtifactLayout layout{cfg.out_dir};
  fs::create_directories(layout.root);
  OutputLock lock(layout.lock_file());
  if (fs::exists(layout.dataset()) && !cfg.force) {
    throw Error(ErrorCode::ConfigError,
                layout.dataset().string() + " already exists; pass --force to re-ingest");
  }

  Dataset raw;
  if (cfg.dataset_format == "squad_v1") {
    raw = parse_freeform(cfg.dataset_path, FreeFormFormat::SquadV1Json);
  } else if (cfg.dataset_format == "generic_jsonl") {
    raw = parse_freeform(cfg.dataset_path, FreeFormFormat::GenericJsonl);
  } else {
    raw = parse_mcqa(cfg.dataset_path, McqaFormat::McqaJsonl);
  }
  if (!cfg.dataset_name.empty()) {
    raw.name = cfg.dataset_name;
  }

  auto filtered = filter_verbatim(raw);
  filtered.retained.name = raw.name;
  if (filtered.retained.records.empty()) {
    throw Error(ErrorCode::EmptyDataset, "no record of " + cfg.dataset_path.string() +
                                             " has its answer verbatim in the context");
  }
  Dataset discarded;
  discarded.name = raw.name;
  const std::set<std::string> dropped(filtered.discarded.begin(), filtered.discarded.end());
  for (const auto& r : raw.records) {
    if (dropped.count(r.id)) discarded.records.push_back(r);
  }
  write_file_atomic(layout.discarded(), discarded.records.empty() ? std::string() : serialize_canonical(discarded));
  write_file_atomic(layout.dataset(), serialize_canonical(filtered.retained));
  log << "ingested " << filtered.retained.records.size() << " records into " << layout.dataset().string()
      << " (" << filtered.discarded.size() << " discarded without a verbatim answer)\n";
  return ExitCode::Ok;
}

ExitCode cmd_probe(const RunConfig& cfg, std::ostream& log) {
  cfg.validate(false);
  const ArtifactLayout layout{cfg.out_dir};
  const Dataset dataset = load_dataset(layout);
  OutputLock lock(layout.lock_file());
  const auto tmpl = make_template(cfg);
  const std::string model_id = effective_model_id(cfg);
  const fs::path cached = layout.probe_cache() / (probe_cache_key(dataset, model_id, tmpl) + ".json");

  KnowledgePartition partition;
  if (fs::exists(cached) && !cfg.force) {
    partition = partition_from_json(nlohmann::json::parse(read_file(cached)));
    log << "probe: cache hit for '" << model_id << "'\n";
  } else {
    auto providers = make_providers(cfg, dataset, layout, tmpl);
    auto model = make_qa_model(cfg, providers);
    ResponseCache cache(layout.response_cache());
    CachedQaModel cached_model(*model, cache);
    partition = probe(dataset, cached_model, tmpl);
    write_file_atomic(cached, to_json(partition).dump(2) + "\n");
  }
  write_file_atomic(layout.partition(model_id), to_json(partition).dump(2) + "\n");
  log << "probe: " << partition.known_ids.size() << " known, " << partition.unknown_ids.size()
      << " unknown, K.Am " << format_percent(partition.knowledge_amount) << "\n";
  return ExitCode::Ok;
}

ExitCode cmd_perturb(const RunConfig& cfg, const std::set<PerturbKind>& kinds, std::ostream& log) {
  cfg.validate(false);
  if (kinds.empty()) throw Error(ErrorCode::ConfigError, "no perturbation kind selected");
  const ArtifactLayout layout{cfg.out_dir};
  const Dataset dataset = load_dataset(layout);
  OutputLock lock(layout.lock_file());
  const auto tmpl = make_template(cfg);
  const std::uint64_t seed = *cfg.seed;

  if (kinds.count(PerturbKind::Conflicting)) {
    auto providers = make_providers(cfg, dataset, layout, tmpl);
    if (!providers.fill) {
      throw Error(ErrorCode::ConfigError, "conflicting contexts need a fill-mask provider (providers.fill)");
    }
    const ConflictingOptions opts{cfg.conflicting_k, cfg.strict_equality, seed};
    generate_kind(cfg, layout, dataset, VariantKind::Conflicting,
                  [&](const QARecord& r) {
                    try {
                      return RecordOutcome{make_conflicting(r, *providers.fill, opts), false};
                    } catch (const Error& e) {
                      if (e.code() != ErrorCode::NoSurvivingCandidates) throw;
                      return RecordOutcome{{}, true};
                    }
                  },
                  log);
  }

  if (kinds.count(PerturbKind::Irrelevant)) {
    generate_kind(cfg, layout, dataset, VariantKind::Irrelevant,
                  [&](const QARecord& r) {
                    return RecordOutcome{make_irrelevant(r, dataset, cfg.irrelevant_n, seed), false};
                  },
                  log);
  }

  if (kinds.count(PerturbKind::Distractor)) {
    // Built after conflicting generation so the echo lexicon sees its answers.
    auto providers = make_providers(cfg, dataset, layout, tmpl);
    if (!providers.scorer) {
      throw Error(ErrorCode::ConfigError,
                  "distractor search needs scoring access to the evaluated model (providers.scorer)");
    }
    DistractorConfig dcfg;
    dcfg.length = cfg.distractor_length;
    dcfg.max_epochs = cfg.distractor_epochs;
    dcfg.pool_common_words = cfg.pool_path.empty() ? default_common_words() : load_word_pool(cfg.pool_path);
    dcfg.include_question_words = cfg.include_question_words;
    dcfg.seed = seed;
    dcfg.placement = cfg.placement;
    validate(dcfg);

    generate_kind(cfg, layout, dataset, VariantKind::Distracted,
                  [&](const QARecord& r) {
                    return RecordOutcome{{make_distractor(r, *providers.scorer, dcfg, tmpl).variant}, false};
                  },
                  log);

    const auto conf_done = read_progress(layout.progress(VariantKind::Conflicting));
    if (!fs::exists(layout.variants(VariantKind::Conflicting)) || !kind_complete(conf_done, dataset)) {
      throw Error(ErrorCode::MissingVariants,
                  "conflicting_distracted needs complete conflicting variants; run `ctxbench perturb --kinds "
                  "conflicting` first");
    }
    VariantStore store;
    load_kind(layout, VariantKind::Conflicting, store);
    load_kind(layout, VariantKind::Distracted, store);
    generate_kind(cfg, layout, dataset, VariantKind::ConflictingDistracted,
                  [&](const QARecord& r) {
                    RecordOutcome out;
                    const auto& conflicting = store.for_source(VariantKind::Conflicting, r.id);
                    if (conflicting.empty()) {
                      out.no_survivors = true;
                      return out;
                    }
                    for (const auto& v : conflicting) {
                      if (cfg.reuse_distractor) {
                        const auto& base = store.for_source(VariantKind::Distracted, r.id);
                        out.variants.push_back(
                            attach_distractor(v, base.at(0).distractor_text.value_or(""), cfg.placement));
                      } else {
                        out.variants.push_back(make_distractor(r, v, *providers.scorer, dcfg, tmpl).variant);
                      }
                    }
                    return out;
                  },
                  log);
  }
  return ExitCode::Ok;
}

ExitCode cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate(false);
  const ArtifactLayout layout{cfg.out_dir};
  const Dataset dataset = load_dataset(layout);
  OutputLock lock(layout.lock_file());
  const auto tmpl = make_template(cfg);
  const std::string model_id = effective_model_id(cfg);
  const auto partition = load_partition(layout, model_id);

  VariantStore store;
  for (VariantKind k : {VariantKind::Conflicting, VariantKind::Irrelevant, VariantKind::Distracted,
                        VariantKind::ConflictingDistracted}) {
    load_kind(layout, k, store);
  }

  auto providers = make_providers(cfg, dataset, layout, tmpl);
  auto model = make_qa_model(cfg, providers);
  ResponseCache cache(layout.response_cache());
  CachedQaModel cached_model(*model, cache);

  RunOptions options;
  options.distractor_rows = store.has_kind(VariantKind::Distracted) || providers.scorer != nullptr;

  ReportMetadata meta;
  meta.dataset_name = dataset.name;
  meta.seed = *cfg.seed;
  meta.config_hash = cfg.fingerprint();
  meta.provider_endpoint = redact(eval_endpoint(cfg));
  meta.generated_at = generated_at();

  const auto report = run_all(dataset, cached_model, partition, store, tmpl, options, meta);
  const auto dir = layout.report_dir(model_id);
  write_file_atomic(dir / "report.json", render_report(report, ReportFormat::Json));
  write_file_atomic(dir / "report.md", render_report(report, ReportFormat::Markdown));
  write_file_atomic(dir / "report.csv", render_report(report, ReportFormat::Csv));
  log << render_report(report, ReportFormat::Markdown);
  log << "evaluate: " << cache.hits() << " cached responses, " << cache.misses() << " provider calls\n";
  if (!report.complete()) {
    log << "evaluate: report is partial; rerun to resume the incomplete cells\n";
    return ExitCode::Incomplete;
  }
  return ExitCode::Ok;
}

ExitCode cmd_report(const RunConfig& cfg, ReportFormat format, std::ostream& out, std::ostream& log) {
  const ArtifactLayout layout{cfg.out_dir};
  if (layout.root.empty()) throw Error(ErrorCode::ConfigError, "output directory must be set (output.dir or --out)");
  const auto path = layout.report_dir(effective_model_id(cfg)) / "report.json";
  if (!fs::exists(path)) {
    throw Error(ErrorCode::InvalidDataset, "no report at " + path.string() + "; run `ctxbench evaluate` first");
  }
  const auto report = report_from_json(nlohmann::json::parse(read_file(path)));
  out << render_report(report, format);
  if (!report.complete()) log << "report: partial, some cells are incomplete\n";
  return report.complete() ? ExitCode::Ok : ExitCode::Incomplete;
}

int run_command(const std::function<ExitCode()>& fn, std::ostream& log) {
  try {
    return static_cast<int>(fn());
  } catch (const Error& e) {
    log << "error [" << to_string(e.code()) << "]: " << e.detail() << "\n";
    return static_cast<int>(exit_code_for(e.code()));
  } catch (const fs::filesystem_error& e) {
    log << "error [io]: " << e.what() << "\n";
    return static_cast<int>(ExitCode::InputError);
  } catch (const nlohmann::json::exception& e) {
    log << "error [malformed_input]: " << e.what() << "\n";
    return static_cast<int>(ExitCode::InputError);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ctxbench
