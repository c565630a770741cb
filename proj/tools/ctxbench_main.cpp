// ctxbench: command-line driver for the context-usage benchmark.

#include <csignal>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctxbench/corpus.hpp"
#include "ctxbench/mock_providers.hpp"
#include "ctxbench/pipeline.hpp"
#include "ctxbench/provider_server.hpp"

namespace {

using namespace ctxbench;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::optional<std::size_t> parallelism;
  std::string dataset;
  std::string format;
  std::string model;
  std::string model_id;
  std::string fill;
  std::string scorer;
};

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.seed) cfg.seed = o.seed;
  if (o.force) cfg.force = true;
  if (o.parallelism) cfg.parallelism = *o.parallelism;
  if (!o.dataset.empty()) cfg.dataset_path = o.dataset;
  if (!o.format.empty()) cfg.dataset_format = o.format;
  if (!o.model.empty()) cfg.eval_model.spec = o.model;
  if (!o.model_id.empty()) cfg.model_id = o.model_id;
  if (!o.fill.empty()) cfg.fill.spec = o.fill;
  if (!o.scorer.empty()) cfg.scorer.spec = o.scorer;
  return cfg;
}

// Serves the mocks over HTTP until SIGINT/SIGTERM.
ExitCode serve_mock(const Overrides& o, const std::string& host, int port, const std::string& model) {
  const std::uint64_t seed = o.seed.value_or(0);
  const PromptTemplate tmpl;
  mock::GeneratedFillMask fill(seed);
  mock::NoisyScorer noisy(seed);
  std::unique_ptr<mock::ContextEchoModel> echo;
  std::unique_ptr<mock::ParametricModel> parametric;
  GenerationProvider* generator = nullptr;
  ScoringProvider* scorer = &noisy;
  if (!model.empty()) {
    if (o.dataset.empty()) throw Error(ErrorCode::ConfigError, "--model needs --dataset (an ingested dataset.jsonl)");
    const Dataset dataset = read_canonical(o.dataset);
    if (model == "context_echo") {
      echo = std::make_unique<mock::ContextEchoModel>(tmpl, mock::echo_lexicon(dataset));
      generator = echo.get();
      scorer = echo.get();
    } else if (model == "parametric") {
      parametric = std::make_unique<mock::ParametricModel>(mock::make_parametric(dataset, tmpl, 0.3, seed));
      generator = parametric.get();
      scorer = parametric.get();
    } else {
      throw Error(ErrorCode::ConfigError, "--model must be context_echo or parametric");
    }
  }

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  ProviderServer server(&fill, scorer, generator);
  server.start(host, port);
  std::cout << "listening on " << server.base_url() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  return ExitCode::Ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctxbench: measure how language models use retrieved context"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("-c,--config", o.config, "TOML config file")->check(CLI::ExistingFile);
  app.add_option("-o,--out", o.out, "Output directory (overrides output.dir)");
  app.add_option("--seed", o.seed, "Run seed (overrides run.seed)");
  app.add_flag("--force", o.force, "Overwrite or regenerate existing artifacts");
  app.add_option("-j,--parallelism", o.parallelism, "Concurrent provider requests")->check(CLI::PositiveNumber);
  app.add_option("--dataset", o.dataset, "Dataset file (overrides dataset.path)");
  app.add_option("--format", o.format, "Dataset format: squad_v1, generic_jsonl, mcqa_jsonl");
  app.add_option("--model", o.model, "Evaluated model endpoint: http(s) URL or mock:<name>");
  app.add_option("--model-id", o.model_id, "Model identifier used in artifact names");
  app.add_option("--fill", o.fill, "Fill-mask endpoint: http(s) URL or mock:generated");
  app.add_option("--scorer", o.scorer, "Scoring endpoint used by the distractor search");

  auto* ingest = app.add_subcommand("ingest", "Parse, filter and persist the dataset");
  auto* probe = app.add_subcommand("probe", "Split questions into known and unknown by closed-book probing");
  auto* perturb = app.add_subcommand("perturb", "Generate conflicting, irrelevant and distractor contexts");
  std::vector<std::string> kinds{"conflicting", "irrelevant", "distractor"};
  perturb->add_option("--kinds", kinds, "Subset of conflicting,irrelevant,distractor")->delimiter(',');
  auto* evaluate = app.add_subcommand("evaluate", "Score every desiderata cell and write reports");
  auto* report = app.add_subcommand("report", "Print a stored report");
  std::string format = "markdown";
  report->add_option("--format", format, "markdown, csv or json");
  auto* serve = app.add_subcommand("serve-mock", "Serve the deterministic mock providers over HTTP");
  std::string host = "127.0.0.1";
  int port = 8089;
  std::string serve_model;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--mock-model", serve_model, "Also serve a mock model: context_echo or parametric");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::ConfigError);
  }

  return run_command(
      [&]() -> ExitCode {
        if (serve->parsed()) return serve_mock(o, host, port, serve_model);
        const RunConfig cfg = resolve(o);
        if (ingest->parsed()) return cmd_ingest(cfg, std::cerr);
        if (probe->parsed()) return cmd_probe(cfg, std::cerr);
        if (perturb->parsed()) {
          std::set<PerturbKind> selected;
          for (const auto& k : kinds) selected.insert(perturb_kind_from_string(k));
          return cmd_perturb(cfg, selected, std::cerr);
        }
        if (evaluate->parsed()) return cmd_evaluate(cfg, std::cerr);
        return cmd_report(cfg, report_format_from_string(format), std::cout, std::cerr);
      },
      std::cerr);
}
