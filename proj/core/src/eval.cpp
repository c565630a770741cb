#include "ctxbench/eval.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "ctxbench/error.hpp"
#include "ctxbench/text.hpp"

namespace ctxbench {

std::string normalize_answer(std::string_view text) {
  std::string stripped;
  stripped.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    stripped.push_back(static_cast<char>(std::tolower(u)));
  }
  std::vector<std::string> kept;
  for (auto& w : split_whitespace(stripped)) {
    if (w == "a" || w == "an" || w == "the") continue;
    kept.push_back(std::move(w));
  }
  return join(kept, " ");
}

bool exact_match(std::string_view prediction, const std::vector<std::string>& golds) {
  if (golds.empty()) throw Error(ErrorCode::InvalidArgument, "exact_match needs at least one gold answer");
  const std::string pred = normalize_answer(prediction);
  return std::any_of(golds.begin(), golds.end(), [&](const std::string& g) { return normalize_answer(g) == pred; });
}

std::string_view to_string(Row row) {
  switch (row) {
    case Row::Standard: return "standard";
    case Row::StandardDistractor: return "standard_distractor";
    case Row::Conflicting: return "conflicting";
    case Row::ConflictingDistractor: return "conflicting_distractor";
    case Row::NoContext: return "no_context";
    case Row::Irrelevant: return "irrelevant";
  }
  return "unknown";
}

std::string_view to_string(Split split) { return split == Split::Known ? "known" : "unknown"; }

Row row_from_string(std::string_view s) {
  for (Row r : kAllRows) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorCode::MalformedInput, "unknown row '" + std::string(s) + "'");
}

Split split_from_string(std::string_view s) {
  if (s == "known") return Split::Known;
  if (s == "unknown") return Split::Unknown;
  throw Error(ErrorCode::MalformedInput, "unknown split '" + std::string(s) + "'");
}

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Complete: return "complete";
    case CellStatus::Incomplete: return "incomplete";
    case CellStatus::Unavailable: return "unavailable";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

void VariantStore::add(const PerturbationVariant& v) {
  loaded_.insert(v.kind);
  auto& list = by_kind_[v.kind][v.source_id];
  list.push_back(v);
  std::stable_sort(list.begin(), list.end(), [](const PerturbationVariant& a, const PerturbationVariant& b) {
    return a.variant_index < b.variant_index;
  });
}

void VariantStore::add(const std::vector<PerturbationVariant>& vs) {
  for (const auto& v : vs) add(v);
}

void VariantStore::mark_skipped(VariantKind kind, const std::string& source_id) {
  loaded_.insert(kind);
  skipped_[kind].insert(source_id);
}

void VariantStore::mark_loaded(VariantKind kind) { loaded_.insert(kind); }

bool VariantStore::has_kind(VariantKind kind) const { return loaded_.count(kind) > 0; }

bool VariantStore::skipped(VariantKind kind, const std::string& source_id) const {
  auto it = skipped_.find(kind);
  return it != skipped_.end() && it->second.count(source_id) > 0;
}

const std::vector<PerturbationVariant>& VariantStore::for_source(VariantKind kind, const std::string& source_id) const {
  static const std::vector<PerturbationVariant> kEmpty;
  auto k = by_kind_.find(kind);
  if (k == by_kind_.end()) return kEmpty;
  auto s = k->second.find(source_id);
  return s == k->second.end() ? kEmpty : s->second;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<VariantKind> kind_for(Row row) {
  switch (row) {
    case Row::StandardDistractor: return VariantKind::Distracted;
    case Row::Conflicting: return VariantKind::Conflicting;
    case Row::ConflictingDistractor: return VariantKind::ConflictingDistracted;
    case Row::Irrelevant: return VariantKind::Irrelevant;
    default: return std::nullopt;
  }
}

struct RowScores {
  // Per scored record, in dataset order: mean correctness over its variants.
  std::vector<std::pair<const QARecord*, double>> per_record;
  std::size_t pairs = 0;
};

// One graded query: which record it belongs to and how to judge the answer.
struct Probe {
  const QARecord* record;
  AnswerRequest request;
  const PerturbationVariant* variant;  // null for rows on the original context
};

bool judge(Row row, Split split, const Probe& p, const ModelAnswer& answer, const KnowledgePartition& partition) {
  const QARecord& rec = *p.record;
  const bool mc = rec.task_kind == TaskKind::MultipleChoice;
  switch (row) {
    case Row::Standard:
    case Row::StandardDistractor:
      return answers_record(rec, answer);
    case Row::Conflicting:
    case Row::ConflictingDistractor:
      if (mc) return answer.option_index == variant_correct_option(rec, *p.variant);
      return exact_match(answer.text, {p.variant->expected_answer});
    case Row::Irrelevant: {
      if (split == Split::Known) return answers_record(rec, answer);
      const auto& closed = partition.closed_book_answers.at(rec.id);
      if (mc) return answer.option_index == closed.option_index;
      return normalize_answer(answer.text) == normalize_answer(closed.text);
    }
    case Row::NoContext:
      return answers_record(rec, answer);
  }
  return false;
}

RowScores score_row(Row row, Split split, const std::vector<const QARecord*>& records, const VariantStore& variants,
                    const KnowledgePartition& partition, QaModel& model, const PromptTemplate& tmpl) {
  RowScores out;
  if (row == Row::NoContext) {
    for (const QARecord* rec : records) {
      auto it = partition.closed_book_answers.find(rec->id);
      if (it == partition.closed_book_answers.end()) {
        throw Error(ErrorCode::InvalidDataset, "partition has no closed-book answer for '" + rec->id + "'");
      }
      out.per_record.emplace_back(rec, answers_record(*rec, it->second) ? 1.0 : 0.0);
      ++out.pairs;
    }
    return out;
  }

  const auto kind = kind_for(row);
  if (kind && !variants.has_kind(*kind)) {
    throw Error(ErrorCode::MissingVariants, std::string(to_string(*kind)) +
                                                " variants have not been generated; run `ctxbench perturb` first");
  }

  std::vector<Probe> probes;
  std::vector<const QARecord*> scored;
  for (const QARecord* rec : records) {
    if (!kind) {
      probes.push_back({rec, {tmpl.render(rec->question, rec->context), rec->options}, nullptr});
      scored.push_back(rec);
      continue;
    }
    const auto& list = variants.for_source(*kind, rec->id);
    if (list.empty()) {
      if (variants.skipped(*kind, rec->id)) continue;
      throw Error(ErrorCode::MissingVariants, "no " + std::string(to_string(*kind)) + " variants for record '" +
                                                  rec->id + "'; rerun `ctxbench perturb`");
    }
    scored.push_back(rec);
    for (const auto& v : list) {
      std::optional<std::vector<std::string>> options;
      if (rec->options) options = variant_options(*rec, v);
      probes.push_back({rec, {tmpl.render(rec->question, v.context), std::move(options)}, &v});
    }
  }

  std::vector<AnswerRequest> requests;
  requests.reserve(probes.size());
  for (const auto& p : probes) requests.push_back(p.request);
  const auto answers = model.answer_batch(requests);

  std::size_t cursor = 0;
  for (const QARecord* rec : scored) {
    double correct = 0.0;
    std::size_t count = 0;
    for (; cursor < probes.size() && probes[cursor].record == rec; ++cursor, ++count) {
      if (judge(row, split, probes[cursor], answers[cursor], partition)) correct += 1.0;
    }
    out.per_record.emplace_back(rec, correct / static_cast<double>(count));
    out.pairs += count;
  }
  return out;
}

std::vector<const QARecord*> records_in(const Dataset& dataset, const KnowledgePartition& partition, Split split) {
  std::vector<const QARecord*> out;
  for (const auto& r : dataset.records) {
    if (partition.is_known(r.id) == (split == Split::Known)) out.push_back(&r);
  }
  return out;
}

CellScore aggregate(Row row, Split split, const RowScores& scores) {
  CellScore cell{row, split, std::nullopt, scores.pairs, CellStatus::Complete};
  if (!scores.per_record.empty()) {
    double sum = 0.0;
    for (const auto& [rec, s] : scores.per_record) sum += s;
    cell.value = sum / static_cast<double>(scores.per_record.size());
  }
  return cell;
}

bool interrupts_cell(ErrorCode code) {
  return code == ErrorCode::ProviderUnavailable || code == ErrorCode::ProtocolError;
}

}  // namespace

CellScore evaluate_cell(Row row, Split split, const Dataset& dataset, const VariantStore& variants,
                        const KnowledgePartition& partition, QaModel& model, const PromptTemplate& tmpl) {
  const auto records = records_in(dataset, partition, split);
  return aggregate(row, split, score_row(row, split, records, variants, partition, model, tmpl));
}

const CellScore& DesiderataReport::cell(Row row, Split split) const {
  auto it = std::find_if(cells.begin(), cells.end(),
                         [&](const CellScore& c) { return c.row == row && c.split == split; });
  if (it == cells.end()) throw Error(ErrorCode::InvalidArgument, "report has no cell " + std::string(to_string(row)));
  return *it;
}

bool DesiderataReport::complete() const {
  return std::none_of(cells.begin(), cells.end(), [](const CellScore& c) { return c.status == CellStatus::Incomplete; });
}

DesiderataReport run_all(const Dataset& dataset, QaModel& model, const KnowledgePartition& partition,
                         const VariantStore& variants, const PromptTemplate& tmpl, const RunOptions& options,
                         ReportMetadata metadata) {
  check_partition(partition, dataset);
  if (partition.model_id != model.model_id()) {
    throw Error(ErrorCode::InvalidArgument, "partition belongs to '" + partition.model_id + "', not '" +
                                                model.model_id() + "'");
  }
  DesiderataReport report;
  report.model_id = model.model_id();
  report.knowledge_amount = partition.knowledge_amount;
  report.metadata = std::move(metadata);
  if (report.metadata.dataset_name.empty()) report.metadata.dataset_name = dataset.name;

  const auto known = records_in(dataset, partition, Split::Known);
  const auto unknown = records_in(dataset, partition, Split::Unknown);

  for (Row row : kAllRows) {
    const bool distractor = row == Row::StandardDistractor || row == Row::ConflictingDistractor;
    for (Split split : {Split::Known, Split::Unknown}) {
      if (distractor && !options.distractor_rows) {
        report.cells.push_back({row, split, std::nullopt, 0, CellStatus::Unavailable});
        continue;
      }
      try {
        const auto& subset = split == Split::Known ? known : unknown;
        report.cells.push_back(aggregate(row, split, score_row(row, split, subset, variants, partition, model, tmpl)));
      } catch (const Error& e) {
        if (!interrupts_cell(e.code())) throw;
        report.cells.push_back({row, split, std::nullopt, 0, CellStatus::Incomplete});
      }
    }
  }

  // Pooled Standard accuracy; with one query per record this equals the
  // K.Am-weighted mean of the two splits.
  const auto& st_known = report.cell(Row::Standard, Split::Known);
  const auto& st_unknown = report.cell(Row::Standard, Split::Unknown);
  if (st_known.status == CellStatus::Complete && st_unknown.status == CellStatus::Complete &&
      (st_known.value || st_unknown.value)) {
    const double total = static_cast<double>(known.size() + unknown.size());
    report.standard_avg = (st_known.value.value_or(0.0) * static_cast<double>(known.size()) +
                           st_unknown.value.value_or(0.0) * static_cast<double>(unknown.size())) /
                          total;
  }
  return report;
}

}  // namespace ctxbench
