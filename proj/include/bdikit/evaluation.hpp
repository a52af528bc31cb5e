// Scoring of prediction tables against gold dictionaries: P@k, POS-stratified
// precision, baseline-relative comparison, disagreement partitions between
// two systems, and the gap arithmetic that discounts false False Positives.
//
// Correctness is exact string match against the gold targets; no folding.
#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bdikit/common.hpp"
#include "bdikit/dictionary.hpp"
#include "bdikit/retrieval.hpp"

namespace bdikit {

enum class OovPolicy { exclude, count_wrong };

inline const char* to_string(OovPolicy p) {
  return p == OovPolicy::exclude ? "exclude" : "count_wrong";
}

inline std::optional<OovPolicy> oov_policy_from_string(std::string_view s) {
  if (s == "exclude") return OovPolicy::exclude;
  if (s == "count_wrong") return OovPolicy::count_wrong;
  return {};
}

struct EvalConfig {
  int k = 1;
  OovPolicy oov_policy = OovPolicy::exclude;
};

struct StratumStats {
  std::size_t evaluated = 0;
  std::size_t correct = 0;

  double precision() const {
    return evaluated == 0
               ? 0.0
               : 100.0 * static_cast<double>(correct) /
                     static_cast<double>(evaluated);
  }
};

struct EvaluationReport {
  std::string system_label;
  std::string gold_id;  // identity used by compare(); path or fixture label
  EvalConfig config;
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  std::size_t missing_sources = 0;  // gold source words absent from preds
  std::size_t excluded_oov = 0;     // missing words dropped under exclude
  double p_at_k = 0;                // percentage
  // Strata in PosTag order; empty strata are absent, not zero.
  std::vector<std::pair<PosTag, StratumStats>> per_tag;
  std::optional<StratumStats> unannotated;
  // Full effective configuration echo, in emission order.
  std::vector<std::pair<std::string, std::string>> config_echo;
};

namespace detail {

struct WordOutcome {
  std::string word;
  bool covered = false;  // present in the prediction table
  bool correct = false;
};

// Per gold source word (file order), correctness of the top-k predictions.
inline std::vector<WordOutcome> score_words(const PredictionTable& preds,
                                            const AnnotatedDictionary& gold,
                                            const EvalConfig& config) {
  if (config.k < 1) throw Error("k must be >= 1");
  std::unordered_map<std::string_view, std::size_t> row_of;
  row_of.reserve(preds.sources.size());
  for (std::size_t i = 0; i < preds.sources.size(); ++i)
    row_of.emplace(preds.sources[i], i);

  std::vector<WordOutcome> outcomes;
  outcomes.reserve(gold.source_word_count());
  for (const auto& word : gold.source_words()) {
    WordOutcome outcome{word, false, false};
    auto it = row_of.find(word);
    if (it == row_of.end()) {
      outcomes.push_back(std::move(outcome));
      continue;
    }
    const auto& row = preds.entries[it->second];
    if (row.size() < static_cast<std::size_t>(config.k))
      throw Error(cat("k=", config.k, " exceeds prediction list length ",
                      row.size(), " for word \"", word, "\""));
    outcome.covered = true;
    const auto* pair_idx = gold.pairs_of(word);
    for (int r = 0; r < config.k && !outcome.correct; ++r)
      for (std::size_t pi : *pair_idx)
        if (gold.pairs()[pi].target == row[static_cast<std::size_t>(r)].target) {
          outcome.correct = true;
          break;
        }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace detail

// A source word scores 1 when any of its top-k predictions string-matches
// any gold target. Words absent from the table follow the OOV policy and
// are always counted.
inline EvaluationReport precision_at_k(const PredictionTable& preds,
                                       const AnnotatedDictionary& gold,
                                       const EvalConfig& config = {}) {
  EvaluationReport report;
  report.config = config;
  auto outcomes = detail::score_words(preds, gold, config);
  for (const auto& o : outcomes) {
    if (!o.covered) {
      ++report.missing_sources;
      if (config.oov_policy == OovPolicy::exclude) {
        ++report.excluded_oov;
        continue;
      }
    }
    ++report.evaluated;
    if (o.correct) ++report.correct;
  }
  report.p_at_k = report.evaluated == 0
                      ? 0.0
                      : 100.0 * static_cast<double>(report.correct) /
                            static_cast<double>(report.evaluated);
  return report;
}

// A source word's stratum is the tag of its first annotated pair; words with
// no annotated pair land in the unannotated bucket.
inline EvaluationReport stratified(const PredictionTable& preds,
                                   const AnnotatedDictionary& gold,
                                   const EvalConfig& config = {}) {
  EvaluationReport report = precision_at_k(preds, gold, config);
  auto outcomes = detail::score_words(preds, gold, config);
  std::array<StratumStats, 5> strata{};
  std::array<bool, 5> seen{};
  StratumStats unannotated;
  bool any_unannotated = false;
  for (const auto& o : outcomes) {
    if (!o.covered && config.oov_policy == OovPolicy::exclude) continue;
    std::optional<PosTag> tag;
    for (std::size_t pi : *gold.pairs_of(o.word)) {
      if (gold.pairs()[pi].pos) {
        tag = gold.pairs()[pi].pos;
        break;
      }
    }
    StratumStats* bucket;
    if (tag) {
      bucket = &strata[static_cast<std::size_t>(*tag)];
      seen[static_cast<std::size_t>(*tag)] = true;
    } else {
      bucket = &unannotated;
      any_unannotated = true;
    }
    ++bucket->evaluated;
    if (o.correct) ++bucket->correct;
  }
  for (PosTag t : kAllPosTags)
    if (seen[static_cast<std::size_t>(t)])
      report.per_tag.emplace_back(t, strata[static_cast<std::size_t>(t)]);
  if (any_unannotated) report.unannotated = unannotated;
  return report;
}

struct DeltaRow {
  std::string label;
  double p_at_k = 0;
  double delta = 0;  // P@k - baseline P@k
};

struct DeltaTable {
  std::string baseline_label;
  double baseline_p = 0;
  std::vector<DeltaRow> rows;  // one per input report, input order
  int k = 1;
  std::string gold_id;
};

// All reports must share gold identity, k, and OOV policy; the baseline is
// selected by label and included as a zero row.
inline DeltaTable compare(const std::vector<EvaluationReport>& reports,
                          const std::string& baseline_label) {
  if (reports.empty()) throw Error("compare requires at least one report");
  const EvaluationReport* baseline = nullptr;
  for (const auto& r : reports) {
    if (r.config.k != reports.front().config.k ||
        r.config.oov_policy != reports.front().config.oov_policy)
      throw Error(cat("mismatched evaluation configs: report \"",
                      r.system_label, "\" differs in k or oov_policy"));
    if (r.gold_id != reports.front().gold_id)
      throw Error(cat("mismatched gold dictionaries: \"", r.gold_id,
                      "\" vs \"", reports.front().gold_id, "\""));
    if (r.system_label == baseline_label) {
      if (baseline)
        throw Error(cat("duplicate baseline label: ", baseline_label));
      baseline = &r;
    }
  }
  if (!baseline)
    throw Error(cat("baseline label \"", baseline_label,
                    "\" not found among reports"));
  DeltaTable table;
  table.baseline_label = baseline_label;
  table.baseline_p = baseline->p_at_k;
  table.k = reports.front().config.k;
  table.gold_id = reports.front().gold_id;
  for (const auto& r : reports)
    table.rows.push_back({r.system_label, r.p_at_k, r.p_at_k - baseline->p_at_k});
  return table;
}

struct DisagreementSets {
  std::string label_a, label_b;
  // Partition of the evaluated source words, in gold file order.
  std::vector<std::string> a_only, b_only, both, neither;
  std::vector<std::string> excluded;  // missing from a table, policy=exclude

  std::size_t evaluated() const {
    return a_only.size() + b_only.size() + both.size() + neither.size();
  }
};

// Partition by correctness at k=1 against the shared gold dictionary.
// Words missing from either table are reported and placed per the policy:
// excluded entirely, or counted incorrect for the missing side.
inline DisagreementSets disagreements(const PredictionTable& preds_a,
                                      const PredictionTable& preds_b,
                                      const AnnotatedDictionary& gold,
                                      OovPolicy oov_policy = OovPolicy::exclude,
                                      std::string label_a = "A",
                                      std::string label_b = "B") {
  EvalConfig config{1, oov_policy};
  auto a = detail::score_words(preds_a, gold, config);
  auto b = detail::score_words(preds_b, gold, config);
  DisagreementSets sets;
  sets.label_a = std::move(label_a);
  sets.label_b = std::move(label_b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string& word = a[i].word;
    if (oov_policy == OovPolicy::exclude && (!a[i].covered || !b[i].covered)) {
      sets.excluded.push_back(word);
      continue;
    }
    bool ca = a[i].correct;
    bool cb = b[i].correct;
    if (ca && cb)
      sets.both.push_back(word);
    else if (ca)
      sets.a_only.push_back(word);
    else if (cb)
      sets.b_only.push_back(word);
    else
      sets.neither.push_back(word);
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Verdicts and gap arithmetic
// ---------------------------------------------------------------------------

enum class Verdict {
  canonical_variant_missing,  // false FP: valid form absent from gold
  synonym_or_sense_missing,   // false FP: valid synonym/sense absent
  genuine_win,
  genuine_error
};

inline constexpr std::array<Verdict, 4> kAllVerdicts = {
    Verdict::canonical_variant_missing, Verdict::synonym_or_sense_missing,
    Verdict::genuine_win, Verdict::genuine_error};

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::canonical_variant_missing: return "canonical_variant_missing";
    case Verdict::synonym_or_sense_missing: return "synonym_or_sense_missing";
    case Verdict::genuine_win: return "genuine_win";
    case Verdict::genuine_error: return "genuine_error";
  }
  return "?";
}

inline std::optional<Verdict> verdict_from_string(std::string_view s) {
  for (Verdict v : kAllVerdicts)
    if (s == to_string(v)) return v;
  return {};
}

struct VerdictFile {
  struct Row {
    std::string source;
    std::string system;
    Verdict category;
    std::string note;
  };
  std::vector<Row> rows;

  std::optional<Verdict> lookup(std::string_view source,
                                std::string_view system) const {
    for (const auto& r : rows)
      if (r.source == source && r.system == system) return r.category;
    return {};
  }
};

inline const char kVerdictHeader[] = "source\tsystem_label\tcategory\tnote";

inline VerdictFile load_verdicts(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw Error("verdict file is empty (header row required)");
  if (trim(line) != kVerdictHeader)
    throw Error(cat("verdict header must be \"", kVerdictHeader, "\""));
  VerdictFile verdicts;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() != 3 && fields.size() != 4)
      throw Error(cat("verdict line ", line_no, ": expected 3 or 4 fields, got ",
                      fields.size()));
    auto category = verdict_from_string(fields[2]);
    if (!category)
      throw Error(cat("verdict line ", line_no, ": unknown category \"",
                      fields[2], "\""));
    if (!seen.insert(cat(fields[0], '\t', fields[1])).second)
      throw Error(cat("verdict line ", line_no, ": duplicate verdict for (",
                      fields[0], ", ", fields[1], ")"));
    verdicts.rows.push_back({std::string(fields[0]), std::string(fields[1]),
                             *category,
                             fields.size() == 4 ? std::string(fields[3]) : ""});
  }
  return verdicts;
}

inline void save_verdicts(const VerdictFile& verdicts, std::ostream& out) {
  out << kVerdictHeader << '\n';
  for (const auto& r : verdicts.rows)
    out << r.source << '\t' << r.system << '\t' << to_string(r.category)
        << '\t' << r.note << '\n';
}

struct GapReport {
  std::string label_a, label_b;
  std::size_t n = 0;
  std::size_t a_only = 0, b_only = 0;
  std::size_t a_genuine = 0, b_genuine = 0;
  std::array<std::size_t, 4> a_categories{};  // indexed by Verdict order
  std::array<std::size_t, 4> b_categories{};

  // (|A_only| - |B_only|) / N * 100, which may be negative.
  double raw_gap_pct() const {
    return 100.0 *
           (static_cast<double>(a_only) - static_cast<double>(b_only)) /
           static_cast<double>(n);
  }
  // Genuine wins only: the two false-False-Positive categories and
  // genuine_error are excluded from both sides.
  double adjusted_gap_pct() const {
    return 100.0 *
           (static_cast<double>(a_genuine) - static_cast<double>(b_genuine)) /
           static_cast<double>(n);
  }
};

// Every A_only word needs a verdict for label_a, every B_only word one for
// label_b; missing verdicts are a hard error listing the words.
inline GapReport gap_analysis(const DisagreementSets& sets,
                              const VerdictFile& verdicts, std::size_t n) {
  if (n == 0) throw Error("gap analysis requires N > 0");
  GapReport report;
  report.label_a = sets.label_a;
  report.label_b = sets.label_b;
  report.n = n;
  report.a_only = sets.a_only.size();
  report.b_only = sets.b_only.size();

  std::unordered_map<std::string, Verdict> by_key;
  by_key.reserve(verdicts.rows.size());
  for (const auto& r : verdicts.rows)
    by_key.emplace(cat(r.source, '\t', r.system), r.category);

  std::vector<std::string> missing;
  auto tally = [&](const std::vector<std::string>& words,
                   const std::string& system,
                   std::array<std::size_t, 4>& categories,
                   std::size_t& genuine) {
    for (const auto& w : words) {
      auto it = by_key.find(cat(w, '\t', system));
      if (it == by_key.end()) {
        missing.push_back(cat(w, " (", system, ")"));
        continue;
      }
      ++categories[static_cast<std::size_t>(it->second)];
      if (it->second == Verdict::genuine_win) ++genuine;
    }
  };
  tally(sets.a_only, sets.label_a, report.a_categories, report.a_genuine);
  tally(sets.b_only, sets.label_b, report.b_categories, report.b_genuine);
  if (!missing.empty()) {
    std::string msg = "missing verdicts for:";
    for (const auto& m : missing) msg += cat(" ", m, ";");
    throw Error(msg);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Disagreement-set TSV: "set<TAB>word", sets in a_only/b_only/both/neither/
// excluded order. This is the fixture format cmd_gap consumes.
// ---------------------------------------------------------------------------

inline const char kSetsHeader[] = "set\tword";

inline void save_disagreements(const DisagreementSets& sets,
                               std::ostream& out) {
  out << kSetsHeader << '\n';
  auto dump = [&](const char* name, const std::vector<std::string>& words) {
    for (const auto& w : words) out << name << '\t' << w << '\n';
  };
  dump("a_only", sets.a_only);
  dump("b_only", sets.b_only);
  dump("both", sets.both);
  dump("neither", sets.neither);
  dump("excluded", sets.excluded);
}

inline DisagreementSets load_disagreements(std::istream& in,
                                           std::string label_a = "A",
                                           std::string label_b = "B") {
  std::string line;
  if (!std::getline(in, line))
    throw Error("disagreement file is empty (header row required)");
  if (trim(line) != kSetsHeader)
    throw Error(cat("disagreement header must be \"", kSetsHeader, "\""));
  DisagreementSets sets;
  sets.label_a = std::move(label_a);
  sets.label_b = std::move(label_b);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() != 2)
      throw Error(cat("disagreement line ", line_no,
                      ": expected 2 fields, got ", fields.size()));
    std::string word(fields[1]);
    if (fields[0] == "a_only")
      sets.a_only.push_back(word);
    else if (fields[0] == "b_only")
      sets.b_only.push_back(word);
    else if (fields[0] == "both")
      sets.both.push_back(word);
    else if (fields[0] == "neither")
      sets.neither.push_back(word);
    else if (fields[0] == "excluded")
      sets.excluded.push_back(word);
    else
      throw Error(cat("disagreement line ", line_no, ": unknown set \"",
                      fields[0], "\""));
  }
  return sets;
}

}  // namespace bdikit
