#include <doctest.h>

#include <cmath>
#include <set>

#include "ctxbench/error.hpp"
#include "ctxbench/mock_providers.hpp"
#include "ctxbench/prompt.hpp"
#include "ctxbench/providers.hpp"
#include "ctxbench/wire.hpp"
#include "support.hpp"

using namespace ctxbench;
using nlohmann::json;

TEST_CASE("prompt template renders the fixed pattern and inverts it") {
  const PromptTemplate t;
  CHECK(t.render("Who wrote Hamlet?", "Hamlet is by Shakespeare") ==
        "question: Who wrote Hamlet?. context: Hamlet is by Shakespeare.");
  CHECK(t.render_closed_book("Who wrote Hamlet?") == "question: Who wrote Hamlet?. context:");

  const auto open = t.extract(t.render("q one", "some. context: tricky"));
  REQUIRE(open);
  CHECK(open->question == "q one");
  CHECK(open->context == "some. context: tricky");
  const auto closed = t.extract(t.render_closed_book("q two"));
  REQUIRE(closed);
  CHECK(closed->question == "q two");
  CHECK(closed->context.empty());
  CHECK_FALSE(t.extract("nonsense").has_value());

  CHECK_THROWS_AS(PromptTemplate("no placeholders"), Error);
  CHECK(PromptTemplate("Q: {question} C: {context}").fingerprint() != t.fingerprint());
  CHECK(PromptTemplate().fingerprint() == t.fingerprint());
}

TEST_CASE("query validation") {
  CHECK_NOTHROW(validate(FillMaskQuery{"a [MASK] b", 10}));
  for (const char* bad : {"no mask", "[MASK] and [MASK]"}) {
    try {
      validate(FillMaskQuery{bad, 10});
      FAIL("expected BadMask");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadMask);
    }
  }
  CHECK_THROWS_AS(validate(FillMaskQuery{"[MASK]", 0}), Error);
  CHECK_THROWS_AS(validate(ScoreQuery::options("p", {})), Error);
  CHECK_THROWS_AS(validate(GenerateQuery{"p", 0}), Error);
}

TEST_CASE("fill candidates are cleaned, ordered and truncated") {
  FillMaskResult raw = {{"b", 0.5}, {"", 0.9}, {"[MASK]", 0.8}, {"a", 0.7}, {"c", 0.5}, {"d", std::nan("")}};
  const auto out = conform_candidates(raw, 2);
  REQUIRE(out.size() == 2u);
  CHECK(out[0].text == "a");
  CHECK(out[1].text == "b");  // stable among equal scores
}

TEST_CASE("score results are checked against their query") {
  const auto cont = ScoreQuery::continuation("p", "x");
  const auto opts = ScoreQuery::options("p", {"a", "b"});
  CHECK_NOTHROW(check_score_result(cont, ScoreResult::from_perplexity(3.0)));
  CHECK_NOTHROW(check_score_result(opts, ScoreResult::from_probs({0.25, 0.75})));

  auto code = [](const ScoreQuery& q, const ScoreResult& r) {
    try {
      check_score_result(q, r);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code(cont, ScoreResult::from_probs({1.0})) == ErrorCode::ModeMismatch);
  CHECK(code(opts, ScoreResult::from_perplexity(2.0)) == ErrorCode::ModeMismatch);
  CHECK(code(cont, ScoreResult::from_perplexity(0.5)) == ErrorCode::ProtocolError);
  CHECK(code(opts, ScoreResult::from_probs({0.5, 0.6})) == ErrorCode::ProtocolError);
  CHECK(code(opts, ScoreResult::from_probs({1.0})) == ErrorCode::ProtocolError);
  CHECK_THROWS_AS(ScoreResult::from_perplexity(2.0).option_probs(), Error);
}

TEST_CASE("wire encoding round-trips every message") {
  const FillMaskQuery fq{"a [MASK] b", 7};
  const auto fq2 = wire::decode_fill_mask_query(wire::encode(fq));
  CHECK(fq2.masked_text == fq.masked_text);
  CHECK(fq2.top_k == 7u);

  const FillMaskResult fr = {{"x", 0.5}, {"y", 0.25}};
  CHECK(wire::decode_fill_mask_result(wire::encode(fr)) == fr);

  const auto sq = wire::decode_score_query(wire::encode(ScoreQuery::options("p", {"a", "b"})));
  CHECK(sq.option_texts() == std::vector<std::string>{"a", "b"});
  const auto sc = wire::decode_score_query(wire::encode(ScoreQuery::continuation("p", "ans")));
  CHECK(sc.continuation_text() == "ans");
  CHECK(wire::decode_score_result(wire::encode(ScoreResult::from_perplexity(4.5))).perplexity() == 4.5);

  const auto gq = wire::decode_generate_query(wire::encode(GenerateQuery{"p", 12}));
  CHECK(gq.max_answer_tokens == 12u);
  CHECK(wire::decode_generate_result(json{{"answer_text", "Paris"}}).answer_text == "Paris");

  CHECK(wire::encode(fq) == json::parse(R"({"masked_text":"a [MASK] b","top_k":7})"));
  CHECK(wire::encode(ScoreResult::from_probs({0.5, 0.5})) == json::parse(R"({"option_probs":[0.5,0.5]})"));

  CHECK_THROWS_AS(wire::decode_score_query(json{{"prompt", "p"}}), Error);
  CHECK_THROWS_AS(wire::decode_score_query(json{{"prompt", "p"}, {"continuation", "a"}, {"options", {"a"}}}), Error);
  CHECK_THROWS_AS(wire::decode_fill_mask_query(json{{"masked_text", "x"}, {"top_k", 0}}), Error);
  CHECK_THROWS_AS(wire::decode_generate_result(json::array()), Error);
}

TEST_CASE("logit scorer matches a hand-computed softmax") {
  // e^2 / (e^2 + 3) and 1 / (e^2 + 3).
  const double hi = 0.7112345942275938;
  const double lo = 0.09625513525746872;
  mock::LogitScorer s({2.0, 0.0, 0.0, 0.0});
  const auto probs = s.score(ScoreQuery::options("p", {"a", "b", "c", "d"})).option_probs();
  REQUIRE(probs.size() == 4u);
  CHECK(probs[0] == doctest::Approx(hi).epsilon(1e-12));
  for (int i = 1; i < 4; ++i) CHECK(probs[i] == doctest::Approx(lo).epsilon(1e-12));
}

TEST_CASE("mock providers honour the contract") {
  mock::GeneratedFillMask fill(3);
  const auto a = fill.fill_mask({"The [MASK] is here", 10});
  const auto b = fill.fill_mask({"The [MASK] is here", 10});
  CHECK(a == b);
  REQUIRE(a.size() == 10u);
  std::set<std::string> distinct;
  for (const auto& c : a) distinct.insert(c.text);
  CHECK(distinct.size() == 10u);
  CHECK(fill.fill_mask({"The [MASK] is here", 4}).size() == 4u);
  CHECK_THROWS_AS(fill.fill_mask({"no sentinel", 4}), Error);

  mock::TableFillMask table({{"capital", {"Lyon", "Paris"}}});
  const auto t = table.fill_mask({"[MASK] is the capital", 10});
  REQUIRE(t.size() == 2u);
  CHECK(t[0] == FillMaskCandidate{"Lyon", 1.0});
  CHECK(t[1] == FillMaskCandidate{"Paris", 0.5});

  mock::NoisyScorer noisy(9);
  for (int i = 0; i < 20; ++i) {
    const auto q = ScoreQuery::continuation("prompt " + std::to_string(i), "x");
    const double p = noisy.score(q).perplexity();
    CHECK(p >= 1.0);
    CHECK(p < 11.0);
    CHECK(noisy.score(q).perplexity() == p);
    const auto oq = ScoreQuery::options("prompt " + std::to_string(i), {"a", "b", "c", "d"});
    CHECK_NOTHROW(check_score_result(oq, noisy.score(oq)));
  }

  mock::PlantedTokenScorer planted({"zebra"});
  CHECK(planted.score(ScoreQuery::continuation("a zebra and a zebra", "x")).perplexity() == 3.0);
}

TEST_CASE("context-echo and parametric mocks") {
  const PromptTemplate t;
  const Dataset d = testing::synthetic_dataset(4);
  mock::ContextEchoModel echo(t, mock::echo_lexicon(d, {{"r0", {"Zorvel"}}}));
  const auto& r0 = d.records[0];
  CHECK(echo.generate({t.render(r0.question, r0.context)}).answer_text == "Paris");
  CHECK(echo.generate({t.render(r0.question, "It is in Zorvel, not Paris.")}).answer_text == "Zorvel");
  CHECK(echo.generate({t.render_closed_book(r0.question)}).answer_text == "UNKNOWN");
  CHECK(echo.generate({t.render(r0.question, d.records[1].context)}).answer_text == "UNKNOWN");
  const auto probs = echo.score(ScoreQuery::options(t.render("q", "choose Lima"), {"Oslo", "Lima", "x", "y"}));
  CHECK(probs.option_probs() == std::vector<double>{0.0, 1.0, 0.0, 0.0});

  const auto p = mock::make_parametric(d, t, 0.5, 1);
  mock::ParametricModel model = p;
  std::size_t known = 0;
  for (const auto& r : d.records) {
    const auto a = model.generate({t.render(r.question, "irrelevant text")}).answer_text;
    const auto closed = model.generate({t.render_closed_book(r.question)}).answer_text;
    CHECK(a == closed);
    if (a == r.canonical_answer()) ++known;
    else CHECK(a == "UNKNOWN");
  }
  CHECK(known == 2u);
}
