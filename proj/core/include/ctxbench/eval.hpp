#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctxbench/corpus.hpp"
#include "ctxbench/perturb.hpp"
#include "ctxbench/prompt.hpp"
#include "ctxbench/qa_model.hpp"
#include "ctxbench/split.hpp"

namespace ctxbench {

// Lowercase, strip ASCII punctuation, drop the articles a/an/the, collapse
// whitespace.
std::string normalize_answer(std::string_view text);

// True iff the normalized prediction equals some normalized gold.
// golds must be non-empty (InvalidArgument otherwise).
bool exact_match(std::string_view prediction, const std::vector<std::string>& golds);

enum class Row { Standard, StandardDistractor, Conflicting, ConflictingDistractor, NoContext, Irrelevant };
enum class Split { Known, Unknown };

inline constexpr std::array<Row, 6> kAllRows = {Row::Standard,     Row::StandardDistractor,
                                                Row::Conflicting,  Row::ConflictingDistractor,
                                                Row::NoContext,    Row::Irrelevant};

std::string_view to_string(Row row);
std::string_view to_string(Split split);
Row row_from_string(std::string_view s);
Split split_from_string(std::string_view s);

enum class CellStatus {
  Complete,
  // A provider failure interrupted the cell; rerunning resumes from the cache.
  Incomplete,
  // The row could not be produced for this model (no scoring access for
  // distractor search).
  Unavailable,
};

std::string_view to_string(CellStatus s);

struct CellScore {
  Row row = Row::Standard;
  Split split = Split::Known;
  // Undefined when n == 0 or the cell is not complete.
  std::optional<double> value;
  std::size_t n = 0;
  CellStatus status = CellStatus::Complete;

  bool operator==(const CellScore&) const = default;
};

// Variants for evaluation, grouped by kind and source record.
class VariantStore {
 public:
  void add(const PerturbationVariant& v);
  void add(const std::vector<PerturbationVariant>& vs);
  // Record with no variants of this kind for a legitimate reason
  // (e.g. every fill candidate matched the original answer).
  void mark_skipped(VariantKind kind, const std::string& source_id);
  void mark_loaded(VariantKind kind);

  bool has_kind(VariantKind kind) const;
  bool skipped(VariantKind kind, const std::string& source_id) const;
  // Variants sorted by variant_index; empty when none.
  const std::vector<PerturbationVariant>& for_source(VariantKind kind,
                                                     const std::string& source_id) const;

 private:
  std::map<VariantKind, std::map<std::string, std::vector<PerturbationVariant>>> by_kind_;
  std::map<VariantKind, std::set<std::string>> skipped_;
  std::set<VariantKind> loaded_;
};

/// Scores one (row, split) cell. Rows with several variants per question are
/// averaged per question, then over questions. Targets:
///   Standard, StandardDistractor, Irrelevant/Known : the gold answer
///   Conflicting, ConflictingDistractor             : the variant's answer
///   Irrelevant/Unknown                             : the closed-book answer
///   NoContext                                      : read from the partition
/// Throws MissingVariants when a needed variant set is absent. Provider
/// failures propagate.
CellScore evaluate_cell(Row row, Split split, const Dataset& dataset, const VariantStore& variants,
                        const KnowledgePartition& partition, QaModel& model,
                        const PromptTemplate& tmpl);

struct ReportMetadata {
  std::string dataset_name;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string provider_endpoint;
  std::optional<std::string> generated_at;

  bool operator==(const ReportMetadata&) const = default;
};

struct DesiderataReport {
  std::string model_id;
  double knowledge_amount = 0.0;
  // 6 rows x 2 splits in kAllRows order, Known before Unknown.
  std::vector<CellScore> cells;
  // Micro-average of the Standard row over all records.
  std::optional<double> standard_avg;
  ReportMetadata metadata;

  const CellScore& cell(Row row, Split split) const;
  bool complete() const;

  bool operator==(const DesiderataReport&) const = default;
};

struct RunOptions {
  // False when the model exposes no scoring access: distractor rows are
  // reported as Unavailable.
  bool distractor_rows = true;
};

/// Fills every cell. A cell whose provider calls fail is marked Incomplete
/// and the remaining cells are still attempted; MissingVariants propagates.
DesiderataReport run_all(const Dataset& dataset, QaModel& model, const KnowledgePartition& partition,
                         const VariantStore& variants, const PromptTemplate& tmpl,
                         const RunOptions& options = {}, ReportMetadata metadata = {});

}  // namespace ctxbench
