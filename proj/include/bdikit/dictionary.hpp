// MUSE-format bilingual dictionaries with five-class POS annotations:
// loading, annotation merge, proper-noun / invalid-pair cleaning,
// composition statistics, and cross-dictionary intersection.
#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bdikit/common.hpp"

namespace bdikit {

enum class PosTag { NOUN, PNOUN, VERB, AD, OTHER };

inline constexpr std::array<PosTag, 5> kAllPosTags = {
    PosTag::NOUN, PosTag::PNOUN, PosTag::VERB, PosTag::AD, PosTag::OTHER};

inline const char* to_string(PosTag t) {
  switch (t) {
    case PosTag::NOUN: return "NOUN";
    case PosTag::PNOUN: return "PNOUN";
    case PosTag::VERB: return "VERB";
    case PosTag::AD: return "AD";
    case PosTag::OTHER: return "OTHER";
  }
  return "?";
}

inline std::optional<PosTag> pos_from_string(std::string_view s) {
  if (s == "NOUN") return PosTag::NOUN;
  if (s == "PNOUN") return PosTag::PNOUN;
  if (s == "VERB") return PosTag::VERB;
  if (s == "AD") return PosTag::AD;
  if (s == "OTHER") return PosTag::OTHER;
  return {};
}

// Penn-Treebank-style tag -> five-class schema.
inline PosTag reduce_pretag(std::string_view fine_tag) {
  if (fine_tag == "NNP" || fine_tag == "NNPS") return PosTag::PNOUN;
  if (fine_tag == "NN" || fine_tag == "NNS") return PosTag::NOUN;
  if (fine_tag.size() >= 2 && fine_tag.substr(0, 2) == "VB")
    return PosTag::VERB;
  if (fine_tag.size() >= 2 &&
      (fine_tag.substr(0, 2) == "JJ" || fine_tag.substr(0, 2) == "RB"))
    return PosTag::AD;
  return PosTag::OTHER;
}

struct AnnotatedPair {
  std::string source;
  std::string target;
  std::optional<PosTag> pos;
  std::optional<bool> valid;
  bool enriched = false;  // provenance flag for targets added by enrichment

  bool annotated() const { return pos.has_value() || valid.has_value(); }
};

class AnnotatedDictionary {
 public:
  AnnotatedDictionary(std::string src_lang, std::string tgt_lang,
                      std::vector<AnnotatedPair> pairs,
                      std::size_t duplicates_dropped = 0)
      : src_lang_(std::move(src_lang)),
        tgt_lang_(std::move(tgt_lang)),
        pairs_(std::move(pairs)),
        duplicates_dropped_(duplicates_dropped) {
    std::unordered_set<std::string> pair_keys;
    pair_keys.reserve(pairs_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto& p = pairs_[i];
      if (p.source.empty() || p.target.empty())
        throw Error(cat("empty word in pair at position ", i + 1));
      if (!pair_keys.insert(pair_key(p.source, p.target)).second)
        throw Error(cat("duplicate pair: ", p.source, " ", p.target));
      auto [it, inserted] = by_source_.try_emplace(p.source);
      if (inserted) source_order_.push_back(p.source);
      it->second.push_back(i);
    }
  }

  const std::string& src_lang() const { return src_lang_; }
  const std::string& tgt_lang() const { return tgt_lang_; }
  const std::vector<AnnotatedPair>& pairs() const { return pairs_; }
  std::size_t pair_count() const { return pairs_.size(); }
  std::size_t source_word_count() const { return source_order_.size(); }
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }

  // Distinct source words in file order.
  const std::vector<std::string>& source_words() const {
    return source_order_;
  }

  // Pair indices for a source word, in file order; null when absent.
  const std::vector<std::size_t>* pairs_of(std::string_view source) const {
    auto it = by_source_.find(std::string(source));
    if (it == by_source_.end()) return nullptr;
    return &it->second;
  }

  bool contains_pair(std::string_view source, std::string_view target) const {
    const auto* idx = pairs_of(source);
    if (!idx) return false;
    for (std::size_t i : *idx)
      if (pairs_[i].target == target) return true;
    return false;
  }

 private:
  static std::string pair_key(std::string_view s, std::string_view t) {
    std::string k(s);
    k.push_back('\t');
    k.append(t);
    return k;
  }

  std::string src_lang_, tgt_lang_;
  std::vector<AnnotatedPair> pairs_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_source_;
  std::vector<std::string> source_order_;
  std::size_t duplicates_dropped_ = 0;
};

// One "source target" pair per line; duplicates dropped with a count.
inline AnnotatedDictionary load_dictionary(std::istream& in,
                                           std::string src_lang = "src",
                                           std::string tgt_lang = "tgt") {
  std::vector<AnnotatedPair> pairs;
  std::unordered_set<std::string> seen;
  std::size_t duplicates = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.size() != 2)
      throw Error(cat("line ", line_no, ": expected 2 fields, got ",
                      fields.size()));
    std::string key = cat(fields[0], '\t', fields[1]);
    if (!seen.insert(key).second) {
      ++duplicates;
      continue;
    }
    pairs.push_back({std::string(fields[0]), std::string(fields[1]), {}, {}});
  }
  return AnnotatedDictionary(std::move(src_lang), std::move(tgt_lang),
                             std::move(pairs), duplicates);
}

inline void save_dictionary(const AnnotatedDictionary& dict,
                            std::ostream& out) {
  for (const auto& p : dict.pairs()) out << p.source << ' ' << p.target << '\n';
}

enum class MergeMode { strict, lenient };

struct MergeStats {
  std::size_t matched_rows = 0;
  std::size_t unmatched_rows = 0;   // lenient mode only; strict errors out
  std::size_t unannotated_pairs = 0;  // dictionary pairs left untouched
};

inline const char kAnnotationHeader[] = "source\ttarget\tpos\tvalid";

// Annotation TSV: header "source target pos valid" (tab-separated), pos in
// {NOUN,PNOUN,VERB,AD,OTHER} or empty/-/--, valid in {1,0} or empty. Every
// row must match an existing pair; strict mode fails listing the offenders.
inline AnnotatedDictionary merge_annotations(const AnnotatedDictionary& dict,
                                             std::istream& in,
                                             MergeMode mode = MergeMode::strict,
                                             MergeStats* stats = nullptr) {
  std::string line;
  if (!std::getline(in, line))
    throw Error("annotation file is empty (header row required)");
  {
    auto fields = split_char(line, '\t');
    if (fields.size() != 4 || fields[0] != "source" || fields[1] != "target" ||
        fields[2] != "pos" || fields[3] != "valid")
      throw Error(cat("annotation header must be \"", kAnnotationHeader,
                      "\", got \"", trim(line), "\""));
  }

  std::vector<AnnotatedPair> pairs = dict.pairs();
  std::unordered_map<std::string, std::size_t> by_key;
  by_key.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    by_key.emplace(cat(pairs[i].source, '\t', pairs[i].target), i);

  MergeStats local;
  std::vector<std::string> unmatched;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() != 4)
      throw Error(cat("annotation line ", line_no, ": expected 4 fields, got ",
                      fields.size()));
    std::string key = cat(fields[0], '\t', fields[1]);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      if (mode == MergeMode::strict)
        unmatched.push_back(cat("line ", line_no, " (", fields[0], " -> ",
                                fields[1], ")"));
      else
        ++local.unmatched_rows;
      continue;
    }
    AnnotatedPair& p = pairs[it->second];
    std::string_view pos_field = trim(fields[2]);
    if (!pos_field.empty() && pos_field != "-" && pos_field != "--") {
      auto tag = pos_from_string(pos_field);
      if (!tag)
        throw Error(cat("annotation line ", line_no, ": unknown POS tag \"",
                        pos_field, "\""));
      p.pos = tag;
    }
    std::string_view valid_field = trim(fields[3]);
    if (!valid_field.empty()) {
      if (valid_field == "1")
        p.valid = true;
      else if (valid_field == "0")
        p.valid = false;
      else
        throw Error(cat("annotation line ", line_no,
                        ": valid must be 1 or 0, got \"", valid_field, "\""));
    }
    ++local.matched_rows;
  }
  if (!unmatched.empty()) {
    std::string msg = "annotation rows with no matching pair:";
    for (const auto& u : unmatched) msg += cat(" ", u, ";");
    throw Error(msg);
  }
  for (const auto& p : pairs)
    if (!p.annotated()) ++local.unannotated_pairs;
  if (stats) *stats = local;
  return AnnotatedDictionary(dict.src_lang(), dict.tgt_lang(),
                             std::move(pairs), dict.duplicates_dropped());
}

// Annotation TSV writer (round-trip format for the merge above).
inline void save_annotations(const AnnotatedDictionary& dict,
                             std::ostream& out) {
  out << kAnnotationHeader << '\n';
  for (const auto& p : dict.pairs()) {
    out << p.source << '\t' << p.target << '\t'
        << (p.pos ? to_string(*p.pos) : "") << '\t'
        << (p.valid ? (*p.valid ? "1" : "0") : "") << '\n';
  }
}

struct RemovalSummary {
  std::size_t pairs_before = 0;
  std::size_t pairs_after = 0;
  std::size_t removed_pnoun = 0;    // includes pairs both PNOUN and invalid
  std::size_t removed_invalid = 0;  // invalid-only removals
  std::size_t removed_enriched = 0;  // only when include_enriched is false
  std::size_t kept_unannotated = 0;
  std::size_t sources_before = 0;
  std::size_t sources_after = 0;
};

// Drops every pair annotated PNOUN or marked invalid. Unannotated pairs
// survive: removal requires positive evidence. A pair that is both PNOUN
// and invalid counts once, under PNOUN.
inline std::pair<AnnotatedDictionary, RemovalSummary> clean(
    const AnnotatedDictionary& dict, bool include_enriched = true) {
  RemovalSummary summary;
  summary.pairs_before = dict.pair_count();
  summary.sources_before = dict.source_word_count();
  std::vector<AnnotatedPair> kept;
  kept.reserve(dict.pair_count());
  for (const auto& p : dict.pairs()) {
    if (!include_enriched && p.enriched) {
      ++summary.removed_enriched;
      continue;
    }
    if (p.pos && *p.pos == PosTag::PNOUN) {
      ++summary.removed_pnoun;
      continue;
    }
    if (p.valid && !*p.valid) {
      ++summary.removed_invalid;
      continue;
    }
    if (!p.annotated()) ++summary.kept_unannotated;
    kept.push_back(p);
  }
  AnnotatedDictionary out(dict.src_lang(), dict.tgt_lang(), std::move(kept));
  summary.pairs_after = out.pair_count();
  summary.sources_after = out.source_word_count();
  return {std::move(out), summary};
}

struct CompositionEntry {
  std::string label;
  std::array<std::size_t, 5> counts{};  // indexed by PosTag order
  std::size_t annotated = 0;
  std::size_t unannotated = 0;

  double pct(PosTag t) const {
    if (annotated == 0) return 0.0;
    return 100.0 * static_cast<double>(counts[static_cast<std::size_t>(t)]) /
           static_cast<double>(annotated);
  }
};

struct CompositionReport {
  // Unit: pairs; macro average over dictionaries.
  std::vector<CompositionEntry> per_dict;
  std::array<double, 5> macro_pct{};
  bool low_annotation_warning = false;  // some dict under 90% annotated

  double macro(PosTag t) const {
    return macro_pct[static_cast<std::size_t>(t)];
  }
};

inline CompositionReport composition(
    const std::vector<AnnotatedDictionary>& dicts,
    const std::vector<std::string>& labels = {},
    bool include_enriched = true) {
  if (dicts.empty()) throw Error("composition requires at least one dictionary");
  if (!labels.empty() && labels.size() != dicts.size())
    throw Error("composition labels must match the number of dictionaries");
  CompositionReport report;
  for (std::size_t di = 0; di < dicts.size(); ++di) {
    CompositionEntry entry;
    entry.label = labels.empty() ? cat("dict", di + 1) : labels[di];
    std::size_t considered = 0;
    for (const auto& p : dicts[di].pairs()) {
      if (!include_enriched && p.enriched) continue;
      ++considered;
      if (p.pos) {
        ++entry.counts[static_cast<std::size_t>(*p.pos)];
        ++entry.annotated;
      } else {
        ++entry.unannotated;
      }
    }
    if (entry.annotated == 0)
      throw Error(cat("dictionary ", entry.label,
                      " has no POS annotations; composition is undefined"));
    if (static_cast<double>(entry.annotated) <
        0.9 * static_cast<double>(considered))
      report.low_annotation_warning = true;
    report.per_dict.push_back(entry);
  }
  for (PosTag t : kAllPosTags) {
    double sum = 0;
    for (const auto& e : report.per_dict) sum += e.pct(t);
    report.macro_pct[static_cast<std::size_t>(t)] =
        sum / static_cast<double>(report.per_dict.size());
  }
  return report;
}

enum class IntersectMode { full_pair, source_side };

// full_pair: pairs whose (source, target) appear in both dictionaries
// (directions must match). source_side: pairs of A whose source word is
// also a source in B (source languages must match) -- the mode used to
// compare en->X dictionaries across target languages. The optional POS
// filter applies on both sides.
inline std::vector<AnnotatedPair> intersect(
    const AnnotatedDictionary& a, const AnnotatedDictionary& b,
    IntersectMode mode, std::optional<PosTag> pos_filter = {}) {
  auto passes = [&](const AnnotatedPair& p) {
    return !pos_filter || (p.pos && *p.pos == *pos_filter);
  };
  std::vector<AnnotatedPair> shared;
  if (mode == IntersectMode::full_pair) {
    if (a.src_lang() != b.src_lang() || a.tgt_lang() != b.tgt_lang())
      throw Error(cat("full_pair intersection needs matching directions, got ",
                      a.src_lang(), "-", a.tgt_lang(), " vs ", b.src_lang(),
                      "-", b.tgt_lang()));
    for (const auto& p : a.pairs()) {
      if (!passes(p) || !b.contains_pair(p.source, p.target)) continue;
      const auto* idx = b.pairs_of(p.source);
      bool counterpart_passes = false;
      for (std::size_t i : *idx) {
        const auto& q = b.pairs()[i];
        if (q.target == p.target && passes(q)) counterpart_passes = true;
      }
      if (counterpart_passes) shared.push_back(p);
    }
  } else {
    if (a.src_lang() != b.src_lang())
      throw Error(cat("source_side intersection needs a shared source "
                      "language, got ",
                      a.src_lang(), " vs ", b.src_lang()));
    std::unordered_set<std::string> b_sources;
    for (const auto& q : b.pairs())
      if (passes(q)) b_sources.insert(q.source);
    for (const auto& p : a.pairs())
      if (passes(p) && b_sources.count(p.source)) shared.push_back(p);
  }
  return shared;
}

}  // namespace bdikit
