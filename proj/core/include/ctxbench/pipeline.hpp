#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ctxbench/config.hpp"
#include "ctxbench/error.hpp"
#include "ctxbench/perturb.hpp"
#include "ctxbench/report.hpp"

namespace ctxbench {

enum class ExitCode : int {
  Ok = 0,
  ConfigError = 2,
  InputError = 3,
  ProviderError = 4,
  Incomplete = 5,
};

ExitCode exit_code_for(ErrorCode code);

/// Artifact layout under the output directory:
///   dataset.jsonl, dataset.discarded.jsonl
///   partition/<model>.json
///   variants/<kind>.jsonl (+ <kind>.progress while resumable)
///   cache/responses/, cache/probe/
///   reports/<model>/report.{json,md,csv}
struct ArtifactLayout {
  std::filesystem::path root;

  std::filesystem::path dataset() const { return root / "dataset.jsonl"; }
  std::filesystem::path discarded() const { return root / "dataset.discarded.jsonl"; }
  std::filesystem::path partition(const std::string& model_id) const;
  std::filesystem::path variants(VariantKind kind) const;
  std::filesystem::path progress(VariantKind kind) const;
  std::filesystem::path response_cache() const { return root / "cache" / "responses"; }
  std::filesystem::path probe_cache() const { return root / "cache" / "probe"; }
  std::filesystem::path report_dir(const std::string& model_id) const;
  std::filesystem::path lock_file() const { return root / ".lock"; }
};

// Single-writer guard on an output directory (O_EXCL lock file).
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& lock_path);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

enum class PerturbKind { Conflicting, Irrelevant, Distractor };

PerturbKind perturb_kind_from_string(std::string_view s);

// Each command writes progress lines to `log` and throws ctxbench::Error on
// failure. cmd_evaluate returns Incomplete when some cell could not finish.
ExitCode cmd_ingest(const RunConfig& cfg, std::ostream& log);
ExitCode cmd_probe(const RunConfig& cfg, std::ostream& log);
ExitCode cmd_perturb(const RunConfig& cfg, const std::set<PerturbKind>& kinds, std::ostream& log);
ExitCode cmd_evaluate(const RunConfig& cfg, std::ostream& log);
ExitCode cmd_report(const RunConfig& cfg, ReportFormat format, std::ostream& out, std::ostream& log);

// Runs `fn`, maps ctxbench::Error (and filesystem/JSON failures) to exit codes
// and prints the message to `log`.
int run_command(const std::function<ExitCode()>& fn, std::ostream& log);

// The 1,000 most common English words bundled with the library.
const std::vector<std::string>& default_common_words();

}  // namespace ctxbench
