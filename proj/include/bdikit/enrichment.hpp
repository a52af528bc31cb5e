// Dictionary target enrichment with inflectional variants: UniMorph paradigm
// tables, a source->target feature-bundle correspondence map, and the
// addition procedure conditioned on embedding-vocabulary presence.
//
// For a pair (s, t): every bundle of s in the source table selects its map
// rules; every target paradigm containing the form t contributes the forms
// whose bundle is in a rule's target list. A candidate form is added when it
// is in the vocabulary and not already a target of s; every candidate is
// logged, added or skipped.
#pragma once

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
#include "bdikit/dictionary.hpp"
#include "bdikit/embedding.hpp"

namespace bdikit {

// Semicolon-joined uppercase feature tokens, e.g. "V;IND;PRS;3;PL".
inline bool valid_bundle(std::string_view bundle) {
  if (bundle.empty()) return false;
  bool token_open = false;
  for (char c : bundle) {
    if (c == ';') {
      if (!token_open) return false;
      token_open = false;
      continue;
    }
    bool ok = (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
              c == '+' || c == '/' || c == '-';
    if (!ok) return false;
    token_open = true;
  }
  return token_open;
}

struct ParadigmEntry {
  std::string lemma;
  std::string form;
  std::string bundle;
};

class ParadigmTable {
 public:
  explicit ParadigmTable(std::vector<ParadigmEntry> entries,
                         std::size_t malformed_skipped = 0)
      : entries_(std::move(entries)), malformed_skipped_(malformed_skipped) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      by_form_[e.form].push_back(i);
      by_lemma_[e.lemma].push_back(i);
      by_lemma_bundle_[cat(e.lemma, '\t', e.bundle)].push_back(i);
    }
  }

  const std::vector<ParadigmEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t malformed_skipped() const { return malformed_skipped_; }

  const std::vector<std::size_t>* by_form(std::string_view form) const {
    auto it = by_form_.find(std::string(form));
    return it == by_form_.end() ? nullptr : &it->second;
  }
  const std::vector<std::size_t>* by_lemma(std::string_view lemma) const {
    auto it = by_lemma_.find(std::string(lemma));
    return it == by_lemma_.end() ? nullptr : &it->second;
  }
  // Entries of one paradigm cell; multiple variant forms are kept.
  const std::vector<std::size_t>* by_lemma_bundle(std::string_view lemma,
                                                  std::string_view bundle) const {
    auto it = by_lemma_bundle_.find(cat(lemma, '\t', bundle));
    return it == by_lemma_bundle_.end() ? nullptr : &it->second;
  }

 private:
  std::vector<ParadigmEntry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_form_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_lemma_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_lemma_bundle_;
  std::size_t malformed_skipped_ = 0;
};

// UniMorph TSV: lemma, form, bundle. Malformed rows are skipped with a
// count; exact duplicate rows are stored once.
inline ParadigmTable load_unimorph(std::istream& in) {
  std::vector<ParadigmEntry> entries;
  std::unordered_set<std::string> seen;
  std::size_t malformed = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() != 3) {
      ++malformed;
      continue;
    }
    std::string lemma(trim(fields[0]));
    std::string form(trim(fields[1]));
    std::string bundle(trim(fields[2]));
    if (lemma.empty() || form.empty() || !valid_bundle(bundle)) {
      ++malformed;
      continue;
    }
    if (!seen.insert(cat(lemma, '\t', form, '\t', bundle)).second) continue;
    entries.push_back({std::move(lemma), std::move(form), std::move(bundle)});
  }
  if (entries.empty()) throw Error("no usable UniMorph rows");
  return ParadigmTable(std::move(entries), malformed);
}

class CorrespondenceMap {
 public:
  struct Rule {
    std::string source_bundle;
    std::vector<std::string> target_bundles;
  };

  CorrespondenceMap() = default;
  explicit CorrespondenceMap(std::vector<Rule> rules)
      : rules_(std::move(rules)) {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      if (!index_.emplace(rules_[i].source_bundle, i).second)
        throw Error(cat("duplicate source bundle: ", rules_[i].source_bundle));
    }
  }

  const std::vector<Rule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

  const std::vector<std::string>* targets_for(std::string_view bundle) const {
    auto it = index_.find(std::string(bundle));
    return it == index_.end() ? nullptr : &rules_[it->second].target_bundles;
  }

 private:
  std::vector<Rule> rules_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Two layouts, mixable line by line: a source bundle at column zero followed
// by indented target bundle lines, or TSV rows "src_bundle<TAB>tgt_bundle".
// Duplicate identical rules collapse; re-opening a source block with a
// different target list is an error.
inline CorrespondenceMap load_correspondence_map(std::istream& in) {
  std::vector<CorrespondenceMap::Rule> rules;
  std::unordered_map<std::string, std::size_t> index;
  std::optional<std::string> open_src;
  std::vector<std::string> open_targets;
  std::string line;
  std::size_t line_no = 0;

  auto dedup = [](const std::vector<std::string>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) {
      bool dup = false;
      for (const auto& t : out) dup = dup || t == s;
      if (!dup) out.push_back(s);
    }
    return out;
  };
  auto close_block = [&]() {
    if (!open_src) return;
    if (open_targets.empty())
      throw Error(cat("source bundle ", *open_src, " has no target bundles"));
    std::vector<std::string> targets = dedup(open_targets);
    auto it = index.find(*open_src);
    if (it == index.end()) {
      index.emplace(*open_src, rules.size());
      rules.push_back({*open_src, std::move(targets)});
    } else if (targets != rules[it->second].target_bundles) {
      throw Error(cat("duplicate source bundle with conflicting targets: ",
                      *open_src));
    }
    open_src.reset();
    open_targets.clear();
  };
  auto check_bundle = [&](std::string_view bundle) {
    if (!valid_bundle(bundle))
      throw Error(cat("map line ", line_no, ": invalid feature bundle \"",
                      bundle, "\""));
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line.find('\t') != std::string::npos) {
      auto fields = split_char(line, '\t');
      if (fields.size() != 2)
        throw Error(cat("map line ", line_no, ": expected 2 fields, got ",
                        fields.size()));
      close_block();
      std::string src(trim(fields[0])), tgt(trim(fields[1]));
      check_bundle(src);
      check_bundle(tgt);
      auto it = index.find(src);
      if (it == index.end()) {
        index.emplace(src, rules.size());
        rules.push_back({std::move(src), {std::move(tgt)}});
      } else {
        auto& targets = rules[it->second].target_bundles;
        bool dup = false;
        for (const auto& t : targets) dup = dup || t == tgt;
        if (!dup) targets.push_back(std::move(tgt));
      }
      continue;
    }
    std::string bundle(trim(line));
    if (line[0] == ' ') {
      if (!open_src)
        throw Error(cat("map line ", line_no,
                        ": indented target with no open source bundle"));
      check_bundle(bundle);
      open_targets.push_back(std::move(bundle));
      continue;
    }
    check_bundle(bundle);
    close_block();
    open_src = std::move(bundle);
  }
  close_block();
  return CorrespondenceMap(std::move(rules));
}

enum class SkipReason { not_in_vocab, already_present, no_paradigm, no_rule };

inline const char* to_string(SkipReason r) {
  switch (r) {
    case SkipReason::not_in_vocab: return "not_in_vocab";
    case SkipReason::already_present: return "already_present";
    case SkipReason::no_paradigm: return "no_paradigm";
    case SkipReason::no_rule: return "no_rule";
  }
  return "?";
}

struct EnrichmentLog {
  struct Added {
    std::string source, seed_target, form, bundle, lemma;
  };
  struct Skipped {
    std::string source, seed_target, form, bundle, lemma;
    SkipReason reason;
  };
  std::vector<Added> added;
  std::vector<Skipped> skipped;

  std::size_t skipped_count(SkipReason reason) const {
    std::size_t n = 0;
    for (const auto& s : skipped)
      if (s.reason == reason) ++n;
    return n;
  }
  // Candidate forms actually generated (pair-level no_rule / no_paradigm
  // entries record the absence of candidates).
  std::size_t candidates() const {
    return added.size() + skipped_count(SkipReason::not_in_vocab) +
           skipped_count(SkipReason::already_present);
  }
};

// Adds inflectional variants of existing targets, conditioned on their
// presence in the embedding vocabulary. Existing pairs are never removed or
// reordered; added pairs inherit pos/valid from the seed pair and carry the
// enriched provenance flag. Output order is deterministic: seed-pair order,
// then rule order, then paradigm order, then table order within a cell.
inline std::pair<AnnotatedDictionary, EnrichmentLog> enrich(
    const AnnotatedDictionary& dict, const ParadigmTable& src_table,
    const ParadigmTable& tgt_table, const CorrespondenceMap& map,
    const EmbeddingSpace& vocab) {
  EnrichmentLog log;
  std::vector<AnnotatedPair> out = dict.pairs();
  std::unordered_set<std::string> present;
  present.reserve(out.size());
  for (const auto& p : out) present.insert(cat(p.source, '\t', p.target));

  for (const auto& seed : dict.pairs()) {
    // Bundles of the source surface form, first-seen order, deduplicated.
    std::vector<std::string_view> bundles;
    if (const auto* src_entries = src_table.by_form(seed.source)) {
      for (std::size_t ei : *src_entries) {
        std::string_view b = src_table.entries()[ei].bundle;
        bool dup = false;
        for (auto seen : bundles) dup = dup || seen == b;
        if (!dup) bundles.push_back(b);
      }
    }
    std::vector<const std::vector<std::string>*> rule_targets;
    for (auto b : bundles)
      if (const auto* targets = map.targets_for(b))
        rule_targets.push_back(targets);
    if (rule_targets.empty()) {
      log.skipped.push_back(
          {seed.source, seed.target, "", "", "", SkipReason::no_rule});
      continue;
    }

    // Every paradigm containing the seed target, lemma order as encountered.
    std::vector<std::string_view> lemmas;
    if (const auto* tgt_entries = tgt_table.by_form(seed.target)) {
      for (std::size_t ei : *tgt_entries) {
        std::string_view l = tgt_table.entries()[ei].lemma;
        bool dup = false;
        for (auto seen : lemmas) dup = dup || seen == l;
        if (!dup) lemmas.push_back(l);
      }
    }
    if (lemmas.empty()) {
      log.skipped.push_back(
          {seed.source, seed.target, "", "", "", SkipReason::no_paradigm});
      continue;
    }

    for (const auto* targets : rule_targets) {
      for (auto lemma : lemmas) {
        for (const auto& bundle : *targets) {
          const auto* cell = tgt_table.by_lemma_bundle(lemma, bundle);
          if (!cell) continue;
          for (std::size_t ei : *cell) {
            const std::string& form = tgt_table.entries()[ei].form;
            if (present.count(cat(seed.source, '\t', form))) {
              log.skipped.push_back({seed.source, seed.target, form, bundle,
                                     std::string(lemma),
                                     SkipReason::already_present});
              continue;
            }
            if (!vocab.lookup(form)) {
              log.skipped.push_back({seed.source, seed.target, form, bundle,
                                     std::string(lemma),
                                     SkipReason::not_in_vocab});
              continue;
            }
            AnnotatedPair added;
            added.source = seed.source;
            added.target = form;
            added.pos = seed.pos;
            added.valid = seed.valid;
            added.enriched = true;
            out.push_back(added);
            present.insert(cat(seed.source, '\t', form));
            log.added.push_back({seed.source, seed.target, form, bundle,
                                 std::string(lemma)});
          }
        }
      }
    }
  }
  return {AnnotatedDictionary(dict.src_lang(), dict.tgt_lang(), std::move(out),
                              dict.duplicates_dropped()),
          std::move(log)};
}

// Log TSV: status, source, seed_target, form, bundle, lemma, reason.
inline const char kEnrichmentLogHeader[] =
    "status\tsource\tseed_target\tform\tbundle\tlemma\treason";

inline void save_enrichment_log(const EnrichmentLog& log, std::ostream& out) {
  out << kEnrichmentLogHeader << '\n';
  for (const auto& a : log.added)
    out << "added\t" << a.source << '\t' << a.seed_target << '\t' << a.form
        << '\t' << a.bundle << '\t' << a.lemma << "\t\n";
  for (const auto& s : log.skipped)
    out << "skipped\t" << s.source << '\t' << s.seed_target << '\t' << s.form
        << '\t' << s.bundle << '\t' << s.lemma << '\t' << to_string(s.reason)
        << '\n';
}

}  // namespace bdikit
