#include <doctest.h>

#include "ctxbench/error.hpp"
#include "ctxbench/eval.hpp"
#include "ctxbench/mock_providers.hpp"
#include "ctxbench/report.hpp"
#include "ctxbench/split.hpp"
#include "em_cases.hpp"
#include "scripted_model.hpp"
#include "support.hpp"

using namespace ctxbench;
using testing::error_code;

namespace {

PerturbationVariant variant(const std::string& id, VariantKind kind, std::size_t index, std::string context,
                            std::string expected) {
  PerturbationVariant v;
  v.source_id = id;
  v.kind = kind;
  v.variant_index = index;
  v.context = std::move(context);
  v.expected_answer = std::move(expected);
  return v;
}

// Four landmarks (Paris, Lima, Oslo, Cairo); r0 and r1 known. Expected cell
// values are derived by hand from the echo rule in the comments below.
struct Scenario {
  Dataset dataset = testing::synthetic_dataset(4);
  PromptTemplate tmpl;
  mock::ContextEchoModel echo{tmpl, mock::echo_lexicon(dataset, {{"r0", {"Rome"}}, {"r1", {"Bern"}}, {"r3", {"Riga"}}})};
  ProviderQaModel model{"echo", &echo, &echo};
  KnowledgePartition partition;
  VariantStore store;

  Scenario() {
    partition.model_id = "echo";
    partition.known_ids = {"r0", "r1"};
    partition.unknown_ids = {"r2", "r3"};
    partition.closed_book_answers = {{"r0", {"Paris", std::nullopt}},
                                     {"r1", {"Lima", std::nullopt}},
                                     {"r2", {"UNKNOWN", std::nullopt}},
                                     {"r3", {"Quito", std::nullopt}}};
    partition.knowledge_amount = 0.5;

    const auto& rs = dataset.records;
    // r0: Rome is echoed (right), Zorvel is not in the lexicon (wrong) -> 0.5.
    // r1: 1.0. Known mean 0.75 (a pooled mean would give 2/3).
    store.add(variant("r0", VariantKind::Conflicting, 0, "Landmark 0 stands in Rome near the old market.", "Rome"));
    store.add(variant("r0", VariantKind::Conflicting, 1, "Landmark 0 stands in Zorvel near the old market.", "Zorvel"));
    store.add(variant("r1", VariantKind::Conflicting, 0, "Landmark 1 stands in Bern near the old market.", "Bern"));
    store.mark_skipped(VariantKind::Conflicting, "r2");
    store.add(variant("r3", VariantKind::Conflicting, 0, "Landmark 3 stands in Riga near the old market.", "Riga"));

    // Known: r0 echoes UNKNOWN (wrong), r1 finds Lima by chance (right).
    // Unknown: r2 repeats its closed-book UNKNOWN (right), r3 does not (wrong).
    store.add(variant("r0", VariantKind::Irrelevant, 0, rs[1].context, "Paris"));
    store.add(variant("r1", VariantKind::Irrelevant, 0, "The Lima office closed.", "Lima"));
    store.add(variant("r2", VariantKind::Irrelevant, 0, rs[3].context, "Oslo"));
    store.add(variant("r3", VariantKind::Irrelevant, 0, rs[0].context, "Cairo"));

    for (const auto& r : rs) store.add(variant(r.id, VariantKind::Distracted, 0, r.context + " zz qq", r.canonical_answer()));

    store.add(variant("r0", VariantKind::ConflictingDistracted, 0, "Landmark 0 stands in Rome near the old market. zz",
                      "Rome"));
    for (const char* id : {"r1", "r2", "r3"}) store.mark_skipped(VariantKind::ConflictingDistracted, id);
  }
};

}  // namespace

TEST_CASE("hand-built exact-match cases") {
  for (const auto& c : testing::em_cases()) {
    CAPTURE(c.prediction);
    CHECK(exact_match(c.prediction, c.golds) == c.expected);
  }
  CHECK(testing::em_cases().size() == 30u);
  CHECK(normalize_answer(" The  Eiffel-Tower! ") == "eiffeltower");
  CHECK(error_code([] { exact_match("x", {}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("closed-book probe splits by correctness") {
  const Dataset d = testing::synthetic_dataset(10);
  const PromptTemplate t;
  auto parametric = mock::make_parametric(d, t, 0.5, 4);
  ProviderQaModel model("param", &parametric, &parametric);
  const auto p = probe(d, model, t);
  CHECK(p.model_id == "param");
  CHECK(p.known_ids.size() == 5u);
  CHECK(p.unknown_ids.size() == 5u);
  CHECK(p.knowledge_amount == 0.5);
  for (const auto& r : d.records) {
    const bool right = p.closed_book_answers.at(r.id).text == r.canonical_answer();
    CHECK(p.is_known(r.id) == right);
  }
  CHECK_NOTHROW(check_partition(p, d));
  CHECK(partition_from_json(nlohmann::json::parse(to_json(p).dump())) == p);

  auto broken = p;
  broken.unknown_ids.push_back(broken.known_ids.front());
  CHECK(error_code([&] { check_partition(broken, d); }) == ErrorCode::InvalidDataset);
  auto extra = p;
  extra.known_ids.push_back("nope");
  CHECK(error_code([&] { check_partition(extra, d); }) == ErrorCode::InvalidDataset);

  // Multiple choice is probed by option scoring.
  const Dataset m = parse_mcqa(testing::fixture("mcqa_small.jsonl"));
  mock::LogitScorer picks_second({0.0, 5.0, 0.0, 0.0});
  ProviderQaModel mc("logit", nullptr, &picks_second);
  const auto pm = probe(m, mc, t);
  for (const auto& r : m.records) CHECK(pm.is_known(r.id) == (*r.correct_option_index == 1u));

  // Three decimals.
  const auto d3 = testing::synthetic_dataset(3);
  auto one_third = mock::make_parametric(d3, t, 1.0 / 3.0, 1);
  ProviderQaModel m3("p3", &one_third, &one_third);
  CHECK(probe(d3, m3, t).knowledge_amount == 0.333);
}

TEST_CASE("probe cache key covers dataset, model and template") {
  const Dataset d = testing::synthetic_dataset(3);
  const PromptTemplate t;
  const auto base = probe_cache_key(d, "m", t);
  CHECK(base == probe_cache_key(testing::synthetic_dataset(3), "m", t));
  CHECK(base != probe_cache_key(d, "m2", t));
  CHECK(base != probe_cache_key(d, "m", PromptTemplate("Q: {question} C: {context}")));
  CHECK(base != probe_cache_key(testing::synthetic_dataset(4), "m", t));
}

TEST_CASE("every cell of a hand-computed scenario") {
  Scenario s;
  const auto report = run_all(s.dataset, s.model, s.partition, s.store, s.tmpl);
  auto value = [&](Row row, Split split) { return report.cell(row, split).value; };
  CHECK(value(Row::Standard, Split::Known) == 1.0);
  CHECK(value(Row::Standard, Split::Unknown) == 1.0);
  CHECK(value(Row::StandardDistractor, Split::Known) == 1.0);
  CHECK(value(Row::Conflicting, Split::Known) == 0.75);
  CHECK(report.cell(Row::Conflicting, Split::Known).n == 3u);
  CHECK(value(Row::Conflicting, Split::Unknown) == 1.0);
  CHECK(report.cell(Row::Conflicting, Split::Unknown).n == 1u);
  CHECK(value(Row::ConflictingDistractor, Split::Known) == 1.0);
  CHECK_FALSE(value(Row::ConflictingDistractor, Split::Unknown).has_value());
  CHECK(value(Row::NoContext, Split::Known) == 1.0);
  CHECK(value(Row::NoContext, Split::Unknown) == 0.0);
  CHECK(value(Row::Irrelevant, Split::Known) == 0.5);
  CHECK(value(Row::Irrelevant, Split::Unknown) == 0.5);
  CHECK(report.standard_avg == 1.0);
  CHECK(report.complete());
  CHECK(report.model_id == "echo");
  CHECK(report.metadata.dataset_name == "synthetic");

  CHECK(render_report(report, ReportFormat::Csv) ==
        "K.Am,St.KK,St.UK,St.Avg,Dist.KK,Dist.UK,Conf.KK,Conf.UK,Conf.Dist.KK,Conf.Dist.UK,Irr.KK,Irr.UK\n"
        "50.0,100.0,100.0,100.0,100.0,100.0,75.0,100.0,100.0,-,50.0,50.0\n");
  const auto md = render_report(report, ReportFormat::Markdown);
  CHECK(md.starts_with("| Model | K.Am | St.KK | St.UK | St.Avg |"));
  CHECK(md.find("| echo | 50.0 | 100.0 |") != std::string::npos);
  const auto j = nlohmann::json::parse(render_report(report, ReportFormat::Json));
  CHECK(j["columns"]["Conf.KK"] == "75.0");
  CHECK(report_from_json(j) == report);

  CHECK(evaluate_cell(Row::Conflicting, Split::Known, s.dataset, s.store, s.partition, s.model, s.tmpl) ==
        report.cell(Row::Conflicting, Split::Known));
}

TEST_CASE("missing and unavailable variant sets") {
  Scenario s;
  VariantStore partial;
  partial.add(variant("r0", VariantKind::Conflicting, 0, "x Rome", "Rome"));
  CHECK(error_code([&] { run_all(s.dataset, s.model, s.partition, partial, s.tmpl); }) == ErrorCode::MissingVariants);
  VariantStore empty;
  CHECK(error_code([&] {
          evaluate_cell(Row::Irrelevant, Split::Known, s.dataset, empty, s.partition, s.model, s.tmpl);
        }) == ErrorCode::MissingVariants);

  RunOptions no_scorer;
  no_scorer.distractor_rows = false;
  const auto report = run_all(s.dataset, s.model, s.partition, s.store, s.tmpl, no_scorer);
  CHECK(report.cell(Row::StandardDistractor, Split::Known).status == CellStatus::Unavailable);
  CHECK(report.complete());
  const auto csv = render_report(report, ReportFormat::Csv);
  CHECK(csv.find("\n50.0,100.0,100.0,100.0,-,-,75.0,100.0,-,-,50.0,50.0\n") != std::string::npos);
  CHECK(csv.find("# Dist.KK, Dist.UK, Conf.Dist.KK, Conf.Dist.UK unavailable") != std::string::npos);

  auto other = s.partition;
  other.model_id = "someone else";
  CHECK(error_code([&] { run_all(s.dataset, s.model, other, s.store, s.tmpl); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("provider failures leave cells incomplete") {
  Scenario s;
  struct Down final : QaModel {
    std::string id = "echo";
    const std::string& model_id() const override { return id; }
    std::vector<ModelAnswer> answer_batch(std::span<const AnswerRequest>) override {
      throw Error(ErrorCode::ProviderUnavailable, "connection refused");
    }
  } down;
  const auto report = run_all(s.dataset, down, s.partition, s.store, s.tmpl);
  CHECK_FALSE(report.complete());
  for (const auto& c : report.cells) {
    CHECK(c.status == (c.row == Row::NoContext ? CellStatus::Complete : CellStatus::Incomplete));
  }
  CHECK_FALSE(report.standard_avg.has_value());
  const auto csv = render_report(report, ReportFormat::Csv);
  CHECK(csv.find("\n50.0,-,-,-,-,-,-,-,-,-,-,-\n# partial report:") != std::string::npos);

  struct Wrong final : QaModel {
    std::string id = "echo";
    const std::string& model_id() const override { return id; }
    std::vector<ModelAnswer> answer_batch(std::span<const AnswerRequest>) override {
      throw Error(ErrorCode::ModeMismatch, "no generation");
    }
  } wrong;
  CHECK(error_code([&] { run_all(s.dataset, wrong, s.partition, s.store, s.tmpl); }) == ErrorCode::ModeMismatch);
}

TEST_CASE("multiple-choice conflicting rows follow the replaced option") {
  const Dataset m = parse_mcqa(testing::fixture("mcqa_small.jsonl"));
  const PromptTemplate t;
  mock::TableFillMask fill(std::vector<mock::TableFillMask::Entry>{{"[MASK]", {"Zorvel"}}});
  VariantStore store;
  for (const auto& r : m.records) store.add(make_conflicting(r, fill));
  // The echo scorer puts all mass on the option found in the context, which
  // is the substituted one.
  mock::ContextEchoModel echo(t, mock::echo_lexicon(m));
  ProviderQaModel model("echo", nullptr, &echo);
  KnowledgePartition p = probe(m, model, t);
  // Closed-book the echo scorer is uniform, so records whose answer is
  // option 0 land in the known split.
  std::size_t n = 0;
  for (Split split : {Split::Known, Split::Unknown}) {
    const auto cell = evaluate_cell(Row::Conflicting, split, m, store, p, model, t);
    n += cell.n;
    if (cell.n > 0) CHECK(cell.value == 1.0);
  }
  CHECK(n == m.records.size());
}

TEST_CASE("weighted identity on a scripted ten-thousand-question run") {
  const auto report = testing::weighted_identity_report();
  const double kam = report.knowledge_amount;
  const double kk = report.cell(Row::Standard, Split::Known).value.value();
  const double uk = report.cell(Row::Standard, Split::Unknown).value.value();
  CHECK(kam == 0.003);
  CHECK(kk == doctest::Approx(0.7));
  CHECK(uk == doctest::Approx(7238.0 / 9970.0));
  CHECK(*report.standard_avg == doctest::Approx(kam * kk + (1 - kam) * uk).epsilon(1e-12));
  const auto csv = render_report(report, ReportFormat::Csv);
  CHECK(csv.find("\n0.3,70.0,72.6,72.6,") != std::string::npos);
}

TEST_CASE("format_percent") {
  CHECK(format_percent(std::nullopt) == "-");
  CHECK(format_percent(0.0) == "0.0");
  CHECK(format_percent(1.0) == "100.0");
  CHECK(format_percent(0.973) == "97.3");
  CHECK(format_percent(0.7259) == "72.6");
  CHECK(report_format_from_string("md") == ReportFormat::Markdown);
  CHECK(error_code([] { report_format_from_string("xml"); }) == ErrorCode::ConfigError);
}

TEST_CASE("response cache reads through and keys by model") {
  testing::TempDir tmp;
  const Dataset d = testing::synthetic_dataset(3);
  testing::ScriptedModel inner("m", d, [](const QARecord& r, const std::string&, const auto&) {
    return ModelAnswer{r.canonical_answer(), std::nullopt};
  });
  ResponseCache cache(tmp.path() / "responses");
  CachedQaModel cached(inner, cache);
  const PromptTemplate t;
  std::vector<AnswerRequest> reqs;
  for (const auto& r : d.records) reqs.push_back({t.render(r.question, r.context), std::nullopt});
  const auto first = cached.answer_batch(reqs);
  const auto second = cached.answer_batch(reqs);
  CHECK(first == second);
  CHECK(inner.calls == 3u);
  CHECK(cache.hits() == 3u);
  CHECK(cache.misses() == 3u);
  CHECK(ResponseCache::key("m", reqs[0]) != ResponseCache::key("m2", reqs[0]));
  CHECK(ResponseCache::key("m", reqs[0]) != ResponseCache::key("m", {reqs[0].prompt, std::vector<std::string>{"a"}}));
  CHECK(argmax_lowest({0.2, 0.4, 0.4}) == 1u);
}
