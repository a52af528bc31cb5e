#include <algorithm>
#include <random>
#include <sstream>

#include "bdikit/evaluation.hpp"
#include "catch2/catch_amalgamated.hpp"
#include "test_util.hpp"

using namespace bdikit;

namespace {

PredictionTable table_from(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& rows,
    Scoring scoring = Scoring::csls) {
  PredictionTable table;
  table.scoring = scoring;
  table.k = rows.empty() ? 1 : static_cast<int>(rows.front().second.size());
  table.k_csls = scoring == Scoring::csls ? 10 : 0;
  for (const auto& [source, targets] : rows) {
    table.sources.push_back(source);
    std::vector<Prediction> preds;
    double score = 1.0;
    for (const auto& t : targets) {
      preds.push_back({t, score});
      score -= 0.01;
    }
    table.entries.push_back(std::move(preds));
  }
  return table;
}

AnnotatedDictionary gold_from(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& words,
    std::optional<PosTag> tag = {}) {
  std::vector<AnnotatedPair> pairs;
  for (const auto& [source, targets] : words)
    for (const auto& t : targets) {
      AnnotatedPair p;
      p.source = source;
      p.target = t;
      p.pos = tag;
      pairs.push_back(std::move(p));
    }
  return AnnotatedDictionary("en", "xx", std::move(pairs));
}

struct RandomInstance {
  PredictionTable preds;
  AnnotatedDictionary gold;
};

// Gold with randomized tags plus a prediction table whose rank-r entries hit
// a gold target with decaying probability.
RandomInstance random_instance(std::mt19937& rng, std::size_t n_words,
                               int list_len) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> tag_pick(0, 4);
  std::vector<std::pair<std::string, std::vector<std::string>>> gold_rows;
  std::vector<std::pair<std::string, std::vector<std::string>>> pred_rows;
  for (std::size_t w = 0; w < n_words; ++w) {
    std::string source = "w" + std::to_string(w);
    std::vector<std::string> targets;
    int n_targets = 1 + static_cast<int>(coin(rng) * 2.99);
    for (int t = 0; t < n_targets; ++t)
      targets.push_back(cat("g", w, "_", t));
    std::vector<std::string> preds;
    for (int r = 0; r < list_len; ++r) {
      if (coin(rng) < 0.25 / (r + 1))
        preds.push_back(targets[static_cast<std::size_t>(
            coin(rng) * static_cast<double>(targets.size()))]);
      else
        preds.push_back(cat("junk", w, "_", r));
    }
    gold_rows.emplace_back(source, targets);
    pred_rows.emplace_back(source, preds);
  }
  RandomInstance instance{table_from(pred_rows), gold_from(gold_rows)};
  // Random per-pair tags, leaving some pairs unannotated.
  std::vector<AnnotatedPair> pairs = instance.gold.pairs();
  for (auto& p : pairs)
    if (coin(rng) < 0.8)
      p.pos = kAllPosTags[static_cast<std::size_t>(tag_pick(rng))];
  instance.gold = AnnotatedDictionary("en", "xx", std::move(pairs));
  return instance;
}

}  // namespace

TEST_CASE("precision_at_k is 100 when every rank-1 prediction is gold") {
  auto gold = gold_from({{"a", {"x"}}, {"b", {"y", "z"}}});
  auto preds = table_from({{"a", {"x"}}, {"b", {"z"}}});
  EvaluationReport report = precision_at_k(preds, gold, {1});
  CHECK(report.p_at_k == 100.0);
  CHECK(report.evaluated == 2);
  CHECK(report.correct == 2);
}

TEST_CASE("precision_at_k matches a hand count of 45 in 100") {
  std::vector<std::pair<std::string, std::vector<std::string>>> gold_rows;
  std::vector<std::pair<std::string, std::vector<std::string>>> pred_rows;
  for (int w = 0; w < 100; ++w) {
    std::string source = cat("w", w);
    gold_rows.push_back({source, {cat("g", w)}});
    // First 45 words predict the gold target, the rest miss.
    pred_rows.push_back({source, {w < 45 ? cat("g", w) : cat("x", w)}});
  }
  EvaluationReport report =
      precision_at_k(table_from(pred_rows), gold_from(gold_rows), {1});
  CHECK(report.p_at_k == Catch::Approx(45.0));
}

TEST_CASE("precision_at_k reports words with too-short prediction lists") {
  auto gold = gold_from({{"a", {"x"}}});
  auto preds = table_from({{"a", {"x", "y"}}});
  try {
    precision_at_k(preds, gold, {5});
    FAIL("expected an error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("k=5") != std::string::npos);
    CHECK(msg.find("\"a\"") != std::string::npos);
  }
}

TEST_CASE("oov policy controls how missing source words count") {
  auto gold = gold_from({{"a", {"x"}}, {"b", {"y"}}, {"c", {"z"}}});
  auto preds = table_from({{"a", {"x"}}, {"b", {"q"}}});
  EvaluationReport excluded =
      precision_at_k(preds, gold, {1, OovPolicy::exclude});
  CHECK(excluded.evaluated == 2);
  CHECK(excluded.excluded_oov == 1);
  CHECK(excluded.missing_sources == 1);
  CHECK(excluded.p_at_k == Catch::Approx(50.0));
  EvaluationReport counted =
      precision_at_k(preds, gold, {1, OovPolicy::count_wrong});
  CHECK(counted.evaluated == 3);
  CHECK(counted.excluded_oov == 0);
  CHECK(counted.missing_sources == 1);
  CHECK(counted.p_at_k == Catch::Approx(100.0 / 3.0));
}

TEST_CASE("stratified equals overall when every pair is NOUN") {
  auto gold = gold_from({{"a", {"x"}}, {"b", {"y"}}}, PosTag::NOUN);
  auto preds = table_from({{"a", {"x"}}, {"b", {"q"}}});
  EvaluationReport report = stratified(preds, gold, {1});
  REQUIRE(report.per_tag.size() == 1);
  CHECK(report.per_tag[0].first == PosTag::NOUN);
  CHECK(report.per_tag[0].second.precision() == report.p_at_k);
  CHECK_FALSE(report.unannotated.has_value());
}

TEST_CASE("stratified matches hand counts per stratum") {
  // NOUN stratum: 3 words, 2 correct; VERB stratum: 1 word, 0 correct.
  std::vector<AnnotatedPair> pairs = {{"a", "x", PosTag::NOUN, {}},
                                      {"b", "y", PosTag::NOUN, {}},
                                      {"c", "z", PosTag::NOUN, {}},
                                      {"d", "v", PosTag::VERB, {}}};
  AnnotatedDictionary gold("en", "xx", std::move(pairs));
  auto preds =
      table_from({{"a", {"x"}}, {"b", {"y"}}, {"c", {"no"}}, {"d", {"no"}}});
  EvaluationReport report = stratified(preds, gold, {1});
  REQUIRE(report.per_tag.size() == 2);
  CHECK(report.per_tag[0].first == PosTag::NOUN);
  CHECK(report.per_tag[0].second.precision() ==
        Catch::Approx(66.7).margin(0.05));
  CHECK(report.per_tag[1].first == PosTag::VERB);
  CHECK(report.per_tag[1].second.precision() == 0.0);
}

TEST_CASE("stratified puts words without annotated pairs in a bucket") {
  std::vector<AnnotatedPair> pairs = {{"a", "x", PosTag::AD, {}},
                                      {"b", "y", {}, {}}};
  AnnotatedDictionary gold("en", "xx", std::move(pairs));
  auto preds = table_from({{"a", {"x"}}, {"b", {"y"}}});
  EvaluationReport report = stratified(preds, gold, {1});
  REQUIRE(report.unannotated.has_value());
  CHECK(report.unannotated->evaluated == 1);
  CHECK(report.unannotated->correct == 1);
  // Empty strata are absent rather than zero.
  for (const auto& [tag, stats] : report.per_tag) CHECK(tag == PosTag::AD);
}

TEST_CASE("stratified word tie-break uses the first annotated pair") {
  std::vector<AnnotatedPair> pairs = {{"a", "x1", {}, {}},
                                      {"a", "x2", PosTag::VERB, {}},
                                      {"a", "x3", PosTag::NOUN, {}}};
  AnnotatedDictionary gold("en", "xx", std::move(pairs));
  auto preds = table_from({{"a", {"x3"}}});
  EvaluationReport report = stratified(preds, gold, {1});
  REQUIRE(report.per_tag.size() == 1);
  CHECK(report.per_tag[0].first == PosTag::VERB);
}

TEST_CASE("P@k is monotone in k and invariant to gold permutation") {
  std::mt19937 rng(211);
  for (int round = 0; round < 100; ++round) {
    RandomInstance instance = random_instance(rng, 30, 5);
    double last = 0.0;
    for (int k = 1; k <= 5; ++k) {
      EvaluationReport report =
          precision_at_k(instance.preds, instance.gold, {k});
      CHECK(report.p_at_k >= last - 1e-12);
      last = report.p_at_k;
    }
    // Permute each source's gold target list.
    std::vector<AnnotatedPair> pairs = instance.gold.pairs();
    std::shuffle(pairs.begin(), pairs.end(), rng);
    AnnotatedDictionary permuted("en", "xx", std::move(pairs));
    EvaluationReport a = precision_at_k(instance.preds, instance.gold, {3});
    EvaluationReport b = precision_at_k(instance.preds, permuted, {3});
    CHECK(a.p_at_k == b.p_at_k);
  }
}

TEST_CASE("stratified per-tag counts sum to the overall counts") {
  std::mt19937 rng(223);
  for (int round = 0; round < 100; ++round) {
    RandomInstance instance = random_instance(rng, 40, 3);
    EvaluationReport report = stratified(instance.preds, instance.gold, {2});
    std::size_t evaluated = 0, correct = 0;
    for (const auto& [tag, stats] : report.per_tag) {
      evaluated += stats.evaluated;
      correct += stats.correct;
    }
    if (report.unannotated) {
      evaluated += report.unannotated->evaluated;
      correct += report.unannotated->correct;
    }
    CHECK(evaluated == report.evaluated);
    CHECK(correct == report.correct);
  }
}

TEST_CASE("compare produces zero delta against itself and exact differences") {
  EvaluationReport base;
  base.system_label = "MUSE-S";
  base.gold_id = "gold";
  base.config = {1, OovPolicy::exclude};
  base.p_at_k = 47.5;
  EvaluationReport other = base;
  other.system_label = "RCSLS";
  other.p_at_k = 50.0;
  DeltaTable table = compare({base, other}, "MUSE-S");
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].delta == 0.0);
  CHECK(table.rows[1].delta == Catch::Approx(2.5));
}

TEST_CASE("compare refuses mismatched configurations") {
  EvaluationReport a;
  a.system_label = "A";
  a.gold_id = "gold";
  a.config = {1, OovPolicy::exclude};
  EvaluationReport b = a;
  b.system_label = "B";
  b.config.k = 5;
  CHECK_THROWS_AS(compare({a, b}, "A"), Error);
  b = a;
  b.system_label = "B";
  b.gold_id = "other";
  CHECK_THROWS_AS(compare({a, b}, "A"), Error);
  b = a;
  b.system_label = "B";
  CHECK_THROWS_AS(compare({a, b}, "missing"), Error);
}

TEST_CASE("disagreements partition matches the set-algebra fixture") {
  auto gold = gold_from(
      {{"w1", {"g1"}}, {"w2", {"g2"}}, {"w3", {"g3"}}, {"w4", {"g4"}}});
  auto a = table_from(
      {{"w1", {"g1"}}, {"w2", {"g2"}}, {"w3", {"no"}}, {"w4", {"no"}}});
  auto b = table_from(
      {{"w1", {"no"}}, {"w2", {"g2"}}, {"w3", {"g3"}}, {"w4", {"no"}}});
  DisagreementSets sets = disagreements(a, b, gold);
  CHECK(sets.a_only == std::vector<std::string>{"w1"});
  CHECK(sets.b_only == std::vector<std::string>{"w3"});
  CHECK(sets.both == std::vector<std::string>{"w2"});
  CHECK(sets.neither == std::vector<std::string>{"w4"});
  CHECK(sets.evaluated() == 4);
}

TEST_CASE("disagreements of identical tables have empty exclusive sets") {
  auto gold = gold_from({{"a", {"x"}}, {"b", {"y"}}});
  auto preds = table_from({{"a", {"x"}}, {"b", {"no"}}});
  DisagreementSets sets = disagreements(preds, preds, gold);
  CHECK(sets.a_only.empty());
  CHECK(sets.b_only.empty());
  CHECK(sets.both.size() == 1);
  CHECK(sets.neither.size() == 1);
}

TEST_CASE("disagreements place uncovered words per the OOV policy") {
  auto gold = gold_from({{"a", {"x"}}, {"b", {"y"}}});
  auto a = table_from({{"a", {"x"}}, {"b", {"y"}}});
  auto b = table_from({{"a", {"x"}}});
  DisagreementSets excluded = disagreements(a, b, gold, OovPolicy::exclude);
  CHECK(excluded.excluded == std::vector<std::string>{"b"});
  CHECK(excluded.evaluated() == 1);
  DisagreementSets counted = disagreements(a, b, gold, OovPolicy::count_wrong);
  CHECK(counted.excluded.empty());
  CHECK(counted.a_only == std::vector<std::string>{"b"});
}

TEST_CASE("partition sizes are consistent with per-system correct counts") {
  std::mt19937 rng(227);
  for (int round = 0; round < 50; ++round) {
    RandomInstance ia = random_instance(rng, 30, 1);
    RandomInstance ib = random_instance(rng, 30, 1);
    DisagreementSets sets = disagreements(ia.preds, ib.preds, ia.gold);
    EvaluationReport ra = precision_at_k(ia.preds, ia.gold, {1});
    EvaluationReport rb = precision_at_k(ib.preds, ia.gold, {1});
    long long correct_delta = static_cast<long long>(ra.correct) -
                              static_cast<long long>(rb.correct);
    long long set_delta = static_cast<long long>(sets.a_only.size()) -
                          static_cast<long long>(sets.b_only.size());
    CHECK(correct_delta == set_delta);
  }
}

TEST_CASE("gap arithmetic reproduces the worked 125/50/1125 example") {
  DisagreementSets sets;
  sets.label_a = "RCSLS";
  sets.label_b = "VM-S";
  VerdictFile verdicts;
  for (int i = 0; i < 125; ++i) {
    std::string word = cat("a", i);
    sets.a_only.push_back(word);
    // 34 genuine wins; the rest split between the false-FP categories.
    Verdict v = i < 34 ? Verdict::genuine_win
                       : (i < 102 ? Verdict::canonical_variant_missing
                                  : Verdict::synonym_or_sense_missing);
    verdicts.rows.push_back({word, "RCSLS", v, ""});
  }
  for (int i = 0; i < 50; ++i) {
    std::string word = cat("b", i);
    sets.b_only.push_back(word);
    Verdict v = i < 25 ? Verdict::genuine_win : Verdict::genuine_error;
    verdicts.rows.push_back({word, "VM-S", v, ""});
  }
  GapReport report = gap_analysis(sets, verdicts, 1125);
  CHECK(report.raw_gap_pct() == Catch::Approx(6.67).margin(0.01));
  CHECK(report.adjusted_gap_pct() == Catch::Approx(0.80).margin(0.01));
  // Exact rational identity of the raw gap.
  CHECK(report.raw_gap_pct() ==
        Catch::Approx((125.0 - 50.0) / 1125.0 * 100.0).margin(1e-9));
  CHECK(report.a_genuine == 34);
  CHECK(report.b_genuine == 25);
}

TEST_CASE("adjusted gap equals raw gap when every verdict is genuine_win") {
  DisagreementSets sets;
  sets.label_a = "A";
  sets.label_b = "B";
  VerdictFile verdicts;
  for (int i = 0; i < 8; ++i) {
    std::string word = cat("a", i);
    sets.a_only.push_back(word);
    verdicts.rows.push_back({word, "A", Verdict::genuine_win, ""});
  }
  for (int i = 0; i < 3; ++i) {
    std::string word = cat("b", i);
    sets.b_only.push_back(word);
    verdicts.rows.push_back({word, "B", Verdict::genuine_win, ""});
  }
  GapReport report = gap_analysis(sets, verdicts, 100);
  CHECK(report.adjusted_gap_pct() == report.raw_gap_pct());
}

TEST_CASE("gap analysis lists words with missing verdicts") {
  DisagreementSets sets;
  sets.label_a = "A";
  sets.label_b = "B";
  sets.a_only = {"covered", "uncovered"};
  VerdictFile verdicts;
  verdicts.rows.push_back({"covered", "A", Verdict::genuine_win, ""});
  try {
    gap_analysis(sets, verdicts, 10);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("uncovered") != std::string::npos);
  }
  CHECK_THROWS_AS(gap_analysis(sets, verdicts, 0), Error);
}

TEST_CASE("verdict files round-trip and reject duplicates") {
  VerdictFile verdicts;
  verdicts.rows.push_back(
      {"joke", "RCSLS", Verdict::canonical_variant_missing, "definite form"});
  verdicts.rows.push_back({"bench", "VM-S", Verdict::synonym_or_sense_missing,
                           "synonym missing"});
  std::ostringstream out;
  save_verdicts(verdicts, out);
  std::istringstream in(out.str());
  VerdictFile reloaded = load_verdicts(in);
  REQUIRE(reloaded.rows.size() == 2);
  CHECK(reloaded.rows[0].category == Verdict::canonical_variant_missing);
  CHECK(reloaded.rows[1].note == "synonym missing");
  CHECK(*reloaded.lookup("joke", "RCSLS") ==
        Verdict::canonical_variant_missing);

  std::istringstream dup(
      cat(kVerdictHeader, "\nw\tA\tgenuine_win\t\nw\tA\tgenuine_error\t\n"));
  CHECK_THROWS_AS(load_verdicts(dup), Error);
  std::istringstream bad_cat(cat(kVerdictHeader, "\nw\tA\tnot_a_category\t\n"));
  CHECK_THROWS_AS(load_verdicts(bad_cat), Error);
}

TEST_CASE("disagreement sets round-trip through TSV") {
  DisagreementSets sets;
  sets.label_a = "A";
  sets.label_b = "B";
  sets.a_only = {"w1", "w2"};
  sets.b_only = {"w3"};
  sets.both = {"w4"};
  sets.neither = {"w5", "w6"};
  sets.excluded = {"w7"};
  std::ostringstream out;
  save_disagreements(sets, out);
  std::istringstream in(out.str());
  DisagreementSets reloaded = load_disagreements(in, "A", "B");
  CHECK(reloaded.a_only == sets.a_only);
  CHECK(reloaded.b_only == sets.b_only);
  CHECK(reloaded.both == sets.both);
  CHECK(reloaded.neither == sets.neither);
  CHECK(reloaded.excluded == sets.excluded);
}
