// Report emission. Every command writes a machine-readable JSON record and a
// human-readable summary; percentages render at two decimals, raw scores in
// shortest round-trip form. Nothing here is time- or locale-dependent, so
// identical inputs produce byte-identical files.
#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bdikit/alignment.hpp"
#include "bdikit/common.hpp"
#include "bdikit/dictionary.hpp"
#include "bdikit/enrichment.hpp"
#include "bdikit/evaluation.hpp"
#include "bdikit/retrieval.hpp"

namespace bdikit {

using Json = nlohmann::ordered_json;

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(cat("cannot write file: ", path));
  out << content;
}

inline Json config_echo_json(
    const std::vector<std::pair<std::string, std::string>>& echo) {
  Json j = Json::object();
  for (const auto& [key, value] : echo) j[key] = value;
  return j;
}

// --------------------------------------------------------------------------
// Evaluation
// --------------------------------------------------------------------------

inline Json evaluation_report_json(const EvaluationReport& report) {
  Json j;
  j["system"] = report.system_label;
  j["gold"] = report.gold_id;
  j["k"] = report.config.k;
  j["oov_policy"] = to_string(report.config.oov_policy);
  j["evaluated"] = report.evaluated;
  j["correct"] = report.correct;
  j["missing_sources"] = report.missing_sources;
  j["excluded_oov"] = report.excluded_oov;
  j["p_at_k"] = report.p_at_k;
  if (!report.per_tag.empty() || report.unannotated) {
    Json tags = Json::object();
    for (const auto& [tag, stats] : report.per_tag) {
      tags[to_string(tag)] = {{"evaluated", stats.evaluated},
                              {"correct", stats.correct},
                              {"precision", stats.precision()}};
    }
    if (report.unannotated)
      tags["UNANNOTATED"] = {{"evaluated", report.unannotated->evaluated},
                             {"correct", report.unannotated->correct},
                             {"precision", report.unannotated->precision()}};
    j["per_tag"] = tags;
  }
  j["config"] = config_echo_json(report.config_echo);
  return j;
}

inline std::string evaluation_report_text(const EvaluationReport& report) {
  std::string out;
  out += cat("system: ", report.system_label, "\n");
  out += cat("gold: ", report.gold_id, "\n");
  out += cat("P@", report.config.k, " = ", fmt_pct(report.p_at_k), " (",
             report.correct, "/", report.evaluated, ")\n");
  out += cat("missing_sources=", report.missing_sources,
             " excluded_oov=", report.excluded_oov,
             " oov_policy=", to_string(report.config.oov_policy), "\n");
  for (const auto& [tag, stats] : report.per_tag)
    out += cat("  ", to_string(tag), ": ", fmt_pct(stats.precision()), " (",
               stats.correct, "/", stats.evaluated, ")\n");
  if (report.unannotated)
    out += cat("  UNANNOTATED: ", fmt_pct(report.unannotated->precision()),
               " (", report.unannotated->correct, "/",
               report.unannotated->evaluated, ")\n");
  for (const auto& [key, value] : report.config_echo)
    out += cat("config ", key, "=", value, "\n");
  return out;
}

// Parses the fields compare() needs back out of an emitted report.
inline EvaluationReport evaluation_report_from_json(const Json& j) {
  EvaluationReport report;
  report.system_label = j.at("system").get<std::string>();
  report.gold_id = j.at("gold").get<std::string>();
  report.config.k = j.at("k").get<int>();
  auto policy = oov_policy_from_string(j.at("oov_policy").get<std::string>());
  if (!policy) throw Error("bad oov_policy in report");
  report.config.oov_policy = *policy;
  report.evaluated = j.at("evaluated").get<std::size_t>();
  report.correct = j.at("correct").get<std::size_t>();
  report.missing_sources = j.at("missing_sources").get<std::size_t>();
  report.excluded_oov = j.at("excluded_oov").get<std::size_t>();
  report.p_at_k = j.at("p_at_k").get<double>();
  return report;
}

// --------------------------------------------------------------------------
// Comparison
// --------------------------------------------------------------------------

// One row per system; when a cleaned-data table is present its columns sit
// beside the original ones (systems matched by label).
inline std::string delta_table_tsv(const DeltaTable& original,
                                   const DeltaTable* cleaned = nullptr) {
  std::string out = "system\tp_at_k\tdelta";
  if (cleaned) out += "\tp_at_k_cleaned\tdelta_cleaned";
  out += '\n';
  for (const auto& row : original.rows) {
    out += cat(row.label, '\t', fmt_num(row.p_at_k), '\t', fmt_num(row.delta));
    if (cleaned) {
      const DeltaRow* match = nullptr;
      for (const auto& c : cleaned->rows)
        if (c.label == row.label) match = &c;
      if (!match)
        throw Error(cat("system \"", row.label,
                        "\" missing from cleaned-data reports"));
      out += cat('\t', fmt_num(match->p_at_k), '\t', fmt_num(match->delta));
    }
    out += '\n';
  }
  return out;
}

inline Json delta_table_json(const DeltaTable& table) {
  Json j;
  j["baseline"] = table.baseline_label;
  j["baseline_p_at_k"] = table.baseline_p;
  j["k"] = table.k;
  j["gold"] = table.gold_id;
  Json rows = Json::array();
  for (const auto& row : table.rows)
    rows.push_back({{"system", row.label},
                    {"p_at_k", row.p_at_k},
                    {"delta", row.delta}});
  j["rows"] = rows;
  return j;
}

inline std::string delta_table_text(const DeltaTable& table) {
  std::string out = cat("baseline: ", table.baseline_label, " (P@", table.k,
                        " = ", fmt_pct(table.baseline_p), ")\n");
  for (const auto& row : table.rows)
    out += cat("  ", row.label, ": ", fmt_pct(row.p_at_k), " (",
               row.delta >= 0 ? "+" : "", fmt_pct(row.delta), ")\n");
  return out;
}

// --------------------------------------------------------------------------
// Cleaning
// --------------------------------------------------------------------------

inline Json removal_summary_json(const RemovalSummary& summary) {
  Json j;
  j["pairs_before"] = summary.pairs_before;
  j["pairs_after"] = summary.pairs_after;
  j["removed_pnoun"] = summary.removed_pnoun;
  j["removed_invalid"] = summary.removed_invalid;
  j["removed_enriched"] = summary.removed_enriched;
  j["kept_unannotated"] = summary.kept_unannotated;
  j["sources_before"] = summary.sources_before;
  j["sources_after"] = summary.sources_after;
  return j;
}

inline std::string removal_summary_text(const RemovalSummary& summary) {
  return cat("pairs: ", summary.pairs_before, " -> ", summary.pairs_after,
             " (removed_pnoun=", summary.removed_pnoun,
             " removed_invalid=", summary.removed_invalid,
             " kept_unannotated=", summary.kept_unannotated, ")\n",
             "source words: ", summary.sources_before, " -> ",
             summary.sources_after, "\n");
}

// --------------------------------------------------------------------------
// Composition
// --------------------------------------------------------------------------

inline Json composition_report_json(const CompositionReport& report) {
  Json j;
  j["unit"] = "pairs";  // percentages over annotated pairs, macro over dicts
  j["low_annotation_warning"] = report.low_annotation_warning;
  Json dicts = Json::array();
  for (const auto& entry : report.per_dict) {
    Json e;
    e["label"] = entry.label;
    e["annotated"] = entry.annotated;
    e["unannotated"] = entry.unannotated;
    for (PosTag t : kAllPosTags) {
      e[cat(to_string(t), "_count")] =
          entry.counts[static_cast<std::size_t>(t)];
      e[cat(to_string(t), "_pct")] = entry.pct(t);
    }
    dicts.push_back(e);
  }
  j["per_dict"] = dicts;
  Json macro = Json::object();
  for (PosTag t : kAllPosTags) macro[to_string(t)] = report.macro(t);
  j["macro_pct"] = macro;
  return j;
}

inline std::string composition_report_tsv(const CompositionReport& report) {
  std::string out = "label\tNOUN\tPNOUN\tVERB\tAD\tOTHER\tannotated\tunannotated\n";
  for (const auto& entry : report.per_dict) {
    out += entry.label;
    for (PosTag t : kAllPosTags) out += cat('\t', fmt_pct(entry.pct(t)));
    out += cat('\t', entry.annotated, '\t', entry.unannotated, '\n');
  }
  out += "macro";
  for (PosTag t : kAllPosTags) out += cat('\t', fmt_pct(report.macro(t)));
  out += "\t\t\n";
  return out;
}

inline std::string composition_report_text(const CompositionReport& report) {
  std::string out =
      "POS composition (percent of annotated pairs, macro-averaged):\n";
  for (PosTag t : kAllPosTags)
    out += cat("  ", to_string(t), ": ", fmt_pct(report.macro(t)), "\n");
  if (report.low_annotation_warning)
    out += "warning: a dictionary is annotated on fewer than 90% of pairs\n";
  return out;
}

// --------------------------------------------------------------------------
// Gap analysis
// --------------------------------------------------------------------------

inline Json gap_report_json(const GapReport& report) {
  Json j;
  j["system_a"] = report.label_a;
  j["system_b"] = report.label_b;
  j["n"] = report.n;
  j["a_only"] = report.a_only;
  j["b_only"] = report.b_only;
  j["a_genuine_win"] = report.a_genuine;
  j["b_genuine_win"] = report.b_genuine;
  j["raw_gap_pct"] = report.raw_gap_pct();
  j["adjusted_gap_pct"] = report.adjusted_gap_pct();
  auto side = [](const std::array<std::size_t, 4>& categories,
                 std::size_t total) {
    Json s = Json::object();
    for (Verdict v : kAllVerdicts) {
      std::size_t count = categories[static_cast<std::size_t>(v)];
      s[to_string(v)] = count;
      s[cat(to_string(v), "_pct")] =
          total == 0 ? 0.0
                     : 100.0 * static_cast<double>(count) /
                           static_cast<double>(total);
    }
    return s;
  };
  j["a_breakdown"] = side(report.a_categories, report.a_only);
  j["b_breakdown"] = side(report.b_categories, report.b_only);
  // The adjusted gap evaluates the verdict formula literally; published
  // roundings of the same arithmetic may print a smaller figure.
  j["note"] =
      "adjusted_gap_pct = (genuine_win_a - genuine_win_b) / n * 100, computed "
      "from exact counts";
  return j;
}

inline std::string gap_report_text(const GapReport& report) {
  std::string out;
  out += cat("A=", report.label_a, " B=", report.label_b, " N=", report.n,
             "\n");
  out += cat("|A_only|=", report.a_only, " |B_only|=", report.b_only, "\n");
  out += cat("raw_gap=", fmt_pct(report.raw_gap_pct()), "%\n");
  out += cat("adjusted_gap=", fmt_pct(report.adjusted_gap_pct()), "%\n");
  auto side = [&](const char* name, const std::array<std::size_t, 4>& cats,
                  std::size_t total) {
    std::string s = cat(name, " breakdown:");
    for (Verdict v : kAllVerdicts) {
      std::size_t count = cats[static_cast<std::size_t>(v)];
      double pct = total == 0 ? 0.0
                              : 100.0 * static_cast<double>(count) /
                                    static_cast<double>(total);
      s += cat(" ", to_string(v), "=", count, " (", fmt_pct(pct), "%)");
    }
    return s + "\n";
  };
  out += side("A_only", report.a_categories, report.a_only);
  out += side("B_only", report.b_categories, report.b_only);
  out +=
      "note: adjusted_gap applies the genuine-win formula literally over "
      "exact counts\n";
  return out;
}

// --------------------------------------------------------------------------
// Enrichment
// --------------------------------------------------------------------------

inline Json enrichment_summary_json(const EnrichmentLog& log) {
  Json j;
  j["added"] = log.added.size();
  j["candidates"] = log.candidates();
  Json skipped = Json::object();
  for (SkipReason r : {SkipReason::not_in_vocab, SkipReason::already_present,
                       SkipReason::no_paradigm, SkipReason::no_rule})
    skipped[to_string(r)] = log.skipped_count(r);
  j["skipped"] = skipped;
  return j;
}

inline std::string enrichment_summary_text(const EnrichmentLog& log) {
  return cat("added=", log.added.size(), " candidates=", log.candidates(),
             " not_in_vocab=", log.skipped_count(SkipReason::not_in_vocab),
             " already_present=",
             log.skipped_count(SkipReason::already_present),
             " no_paradigm=", log.skipped_count(SkipReason::no_paradigm),
             " no_rule=", log.skipped_count(SkipReason::no_rule), "\n");
}

// --------------------------------------------------------------------------
// Alignment
// --------------------------------------------------------------------------

inline Json alignment_summary_json(const AlignmentMap& map,
                                   const SelectionScore& score) {
  Json j;
  j["trainer"] = to_string(map.trainer);
  j["orthogonal"] = map.orthogonal;
  j["dim"] = map.W.rows();
  j["selection_score"] = score.value;
  j["degenerate"] = score.degenerate;
  j["degenerate_threshold"] = score.threshold;
  j["selection_sample"] = score.sample;
  j["selection_sample_clamped"] = score.clamped;
  Json meta = Json::object();
  for (const auto& [key, value] : map.meta) meta[key] = value;
  j["meta"] = meta;
  return j;
}

inline std::string alignment_summary_text(const AlignmentMap& map,
                                          const SelectionScore& score) {
  std::string out;
  out += cat("trainer=", to_string(map.trainer),
             " orthogonal=", map.orthogonal ? "true" : "false",
             " dim=", map.W.rows(), "\n");
  out += cat("selection_score=", fmt_num(score.value),
             " degenerate=", score.degenerate ? "true" : "false", "\n");
  for (const auto& [key, value] : map.meta)
    out += cat("meta ", key, "=", value, "\n");
  return out;
}

}  // namespace bdikit
