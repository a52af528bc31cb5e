// Command-line front end: align, evaluate, clean, stats, compare, gap,
// enrich. Every command validates its input paths up front (exit 2 on a
// missing one), writes a machine-readable JSON report plus a human-readable
// summary into --out-dir, and embeds the full effective configuration in the
// report. With a fixed seed, reruns are byte-identical.
#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bdikit/alignment.hpp"
#include "bdikit/common.hpp"
#include "bdikit/dictionary.hpp"
#include "bdikit/embedding.hpp"
#include "bdikit/enrichment.hpp"
#include "bdikit/evaluation.hpp"
#include "bdikit/report.hpp"
#include "bdikit/retrieval.hpp"

namespace bdikit::cli {

namespace fs = std::filesystem;

struct RunConfig {
  // paths
  std::string src_emb, tgt_emb, seed_dict;
  std::string gold, gold_annotations;
  std::string map_path, preds_path, preds_a, preds_b;
  std::string verdicts, sets;
  std::vector<std::string> dicts, annotations, labels;
  std::vector<std::string> reports, cleaned_reports;
  std::string src_unimorph, tgt_unimorph, corr_map;
  std::string out_dir;
  std::string pair = "src-tgt";
  // trainer
  std::string trainer = "procrustes_refined";
  int rounds = 5;
  int epochs = 10;
  double learning_rate = 1.0;
  int rcsls_k = 10;
  long long dict_top = 20000;
  long long selection_sample = 10000;
  double degenerate_threshold = 0.0;
  // evaluation
  int k = 1;
  int k_csls = 10;
  std::string scorer = "csls";
  std::string oov = "exclude";
  std::string label = "system";
  std::string label_a = "A", label_b = "B";
  std::string baseline;
  long long n_override = 0;
  long long penalty_pool = 10000;
  // shared
  std::string normalize_scheme = "unit";
  long long max_vocab = 200000;  // 0 = unlimited
  long long pool = 0;            // retrieval candidate pool cap; 0 = loaded vocab
  int block = 1024;
  int threads = 1;
  unsigned long long seed = 0;
  bool lenient_annotations = false;
  bool exclude_enriched = false;
};

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(cat(what, " path is required"));
  if (!fs::exists(path)) throw ConfigError(cat(what, " not found: ", path));
}

inline void prepare_out_dir(const RunConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("--out-dir is required");
  fs::create_directories(config.out_dir);
}

inline std::string out_path(const RunConfig& config, const char* name) {
  return (fs::path(config.out_dir) / name).string();
}

inline std::pair<std::string, std::string> parse_pair(const std::string& pair) {
  auto dash = pair.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == pair.size())
    throw ConfigError(cat("--pair must look like \"en-bg\", got \"", pair,
                          "\""));
  return {pair.substr(0, dash), pair.substr(dash + 1)};
}

inline std::vector<std::pair<std::string, std::string>> build_echo(
    const std::string& command, const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> echo;
  auto add = [&](const char* key, const auto& value) {
    echo.emplace_back(key, cat(value));
  };
  auto add_list = [&](const char* key, const std::vector<std::string>& v) {
    std::string joined;
    for (const auto& s : v) joined += joined.empty() ? s : cat(",", s);
    echo.emplace_back(key, joined);
  };
  add("command", command);
  add("src_emb", c.src_emb);
  add("tgt_emb", c.tgt_emb);
  add("seed_dict", c.seed_dict);
  add("gold", c.gold);
  add("gold_annotations", c.gold_annotations);
  add("map", c.map_path);
  add("preds", c.preds_path);
  add("preds_a", c.preds_a);
  add("preds_b", c.preds_b);
  add("verdicts", c.verdicts);
  add("sets", c.sets);
  add_list("dicts", c.dicts);
  add_list("annotations", c.annotations);
  add_list("labels", c.labels);
  add_list("reports", c.reports);
  add_list("cleaned_reports", c.cleaned_reports);
  add("src_unimorph", c.src_unimorph);
  add("tgt_unimorph", c.tgt_unimorph);
  add("corr_map", c.corr_map);
  add("out_dir", c.out_dir);
  add("pair", c.pair);
  add("trainer", c.trainer);
  add("rounds", c.rounds);
  add("epochs", c.epochs);
  add("learning_rate", fmt_num(c.learning_rate));
  add("rcsls_k", c.rcsls_k);
  add("dict_top", c.dict_top);
  add("selection_sample", c.selection_sample);
  add("degenerate_threshold", fmt_num(c.degenerate_threshold));
  add("k", c.k);
  add("k_csls", c.k_csls);
  add("scorer", c.scorer);
  add("oov_policy", c.oov);
  add("label", c.label);
  add("label_a", c.label_a);
  add("label_b", c.label_b);
  add("baseline", c.baseline);
  add("n", c.n_override);
  add("penalty_pool", c.penalty_pool);
  add("normalize", c.normalize_scheme);
  add("max_vocab", c.max_vocab);
  add("pool", c.pool);
  add("block", c.block);
  add("threads", c.threads);
  add("seed", c.seed);
  add("lenient_annotations", c.lenient_annotations ? "true" : "false");
  add("exclude_enriched", c.exclude_enriched ? "true" : "false");
  return echo;
}

inline EmbeddingSpace load_space(const std::string& path,
                                 const std::string& lang,
                                 const RunConfig& config) {
  require_file(path, "embedding file");
  std::ifstream in(path);
  if (!in) throw ConfigError(cat("cannot open embedding file: ", path));
  LoadOptions options;
  options.lang = lang;
  if (config.max_vocab > 0) options.max_vocab = config.max_vocab;
  EmbeddingSpace raw = load_embeddings(in, options);
  auto scheme = norm_state_from_string(config.normalize_scheme);
  if (!scheme || *scheme == NormState::raw)
    throw ConfigError(cat("--normalize must be unit or centered_unit, got ",
                          config.normalize_scheme));
  return normalize(raw, *scheme);
}

inline AnnotatedDictionary load_dict(const std::string& path,
                                     const std::string& annotations_path,
                                     const RunConfig& config) {
  require_file(path, "dictionary file");
  std::ifstream in(path);
  if (!in) throw ConfigError(cat("cannot open dictionary file: ", path));
  auto [src_lang, tgt_lang] = parse_pair(config.pair);
  AnnotatedDictionary dict = load_dictionary(in, src_lang, tgt_lang);
  if (annotations_path.empty()) return dict;
  require_file(annotations_path, "annotation file");
  std::ifstream ann(annotations_path);
  if (!ann)
    throw ConfigError(cat("cannot open annotation file: ", annotations_path));
  return merge_annotations(dict, ann,
                           config.lenient_annotations ? MergeMode::lenient
                                                      : MergeMode::strict);
}

inline RetrievalOptions retrieval_options(const RunConfig& config) {
  RetrievalOptions opts;
  opts.block = config.block;
  opts.threads = config.threads;
  opts.pool = static_cast<Eigen::Index>(config.pool);
  return opts;
}

// --------------------------------------------------------------------------
// align
// --------------------------------------------------------------------------

inline int cmd_align(const RunConfig& config) {
  prepare_out_dir(config);
  auto [src_lang, tgt_lang] = parse_pair(config.pair);
  EmbeddingSpace src = load_space(config.src_emb, src_lang, config);
  EmbeddingSpace tgt = load_space(config.tgt_emb, tgt_lang, config);
  require_file(config.seed_dict, "seed dictionary");
  std::ifstream dict_in(config.seed_dict);
  AnnotatedDictionary dict = load_dictionary(dict_in, src_lang, tgt_lang);
  SeedStats stats;
  SeedPairs seeds = seeds_from_dictionary(dict, src, tgt, &stats);
  if (seeds.empty())
    throw Error("all seed pairs are out of vocabulary");

  auto trainer = trainer_from_string(config.trainer);
  if (!trainer || *trainer == Trainer::external)
    throw ConfigError(cat("--trainer must be procrustes, procrustes_refined "
                          "or rcsls, got ",
                          config.trainer));
  AlignmentMap map;
  RetrievalOptions ropts = retrieval_options(config);
  switch (*trainer) {
    case Trainer::procrustes:
      map = procrustes_fit(src, tgt, seeds);
      break;
    case Trainer::procrustes_refined: {
      RefineConfig rc;
      rc.rounds = config.rounds;
      rc.dict_top = static_cast<Eigen::Index>(config.dict_top);
      rc.k_csls = config.k_csls;
      rc.selection_sample =
          static_cast<Eigen::Index>(config.selection_sample);
      rc.retrieval = ropts;
      map = refine(src, tgt, seeds, rc);
      break;
    }
    default: {
      RcslsConfig rc;
      rc.epochs = config.epochs;
      rc.learning_rate = config.learning_rate;
      rc.k = config.rcsls_k;
      rc.pool = static_cast<Eigen::Index>(config.pool);
      rc.retrieval = ropts;
      map = rcsls_fit(src, tgt, seeds, rc);
      break;
    }
  }
  map.meta["seed_pairs_kept"] = cat(stats.kept);
  map.meta["seed_pairs_dropped_oov"] = cat(stats.dropped_oov);

  SelectionScore score = selection_score(
      map, src, tgt, static_cast<Eigen::Index>(config.selection_sample),
      config.k_csls, config.degenerate_threshold, ropts);

  save_alignment(map, out_path(config, "W.txt"));
  Json j = alignment_summary_json(map, score);
  j["config"] = config_echo_json(build_echo("align", config));
  write_text_file(out_path(config, "align_report.json"), j.dump(2) + "\n");
  write_text_file(out_path(config, "align_summary.txt"),
                  alignment_summary_text(map, score));
  std::cout << "align: trainer=" << to_string(map.trainer)
            << " selection_score=" << fmt_num(score.value)
            << " degenerate=" << (score.degenerate ? "true" : "false")
            << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// evaluate
// --------------------------------------------------------------------------

inline int cmd_evaluate(const RunConfig& config) {
  prepare_out_dir(config);
  auto [src_lang, tgt_lang] = parse_pair(config.pair);
  require_file(config.gold, "gold dictionary");
  AnnotatedDictionary gold =
      load_dict(config.gold, config.gold_annotations, config);

  auto oov = oov_policy_from_string(config.oov);
  if (!oov)
    throw ConfigError(cat("--oov must be exclude or count_wrong, got ",
                          config.oov));
  EvalConfig eval_config{config.k, *oov};

  PredictionTable preds;
  if (!config.preds_path.empty()) {
    // Evaluation-only mode over an external prediction table.
    require_file(config.preds_path, "prediction table");
    std::ifstream in(config.preds_path);
    preds = load_prediction_table(in);
  } else {
    EmbeddingSpace src = load_space(config.src_emb, src_lang, config);
    EmbeddingSpace tgt = load_space(config.tgt_emb, tgt_lang, config);
    require_file(config.map_path, "alignment map");
    AlignmentMap map = load_alignment(config.map_path);

    // Query rows for the gold source words present in the source space.
    std::vector<std::string> query_words;
    std::vector<Eigen::Index> query_rows;
    for (const auto& word : gold.source_words()) {
      auto idx = src.lookup(word);
      if (!idx) continue;
      query_words.push_back(word);
      query_rows.push_back(*idx);
    }
    if (query_words.empty())
      throw Error("no gold source word is in the source vocabulary");
    MatrixF sub(static_cast<Eigen::Index>(query_rows.size()), src.dim());
    for (std::size_t i = 0; i < query_rows.size(); ++i)
      sub.row(static_cast<Eigen::Index>(i)) = src.matrix().row(query_rows[i]);
    EmbeddingSpace query_space(src.lang(), query_words, std::move(sub),
                               src.norm_state());
    MatrixF queries = map_queries(query_space, map.W);

    auto scorer = scoring_from_string(config.scorer);
    if (!scorer)
      throw ConfigError(cat("--scorer must be cosine or csls, got ",
                            config.scorer));
    RetrievalOptions ropts = retrieval_options(config);
    if (*scorer == Scoring::cosine) {
      preds = knn_cosine(queries, query_words, tgt, config.k, ropts);
    } else {
      // Penalty pool: the query set itself while it is dense enough,
      // otherwise the top-frequency slice of the mapped source vocabulary.
      CslsPenaltyCache cache;
      if (queries.rows() < 5000) {
        cache = csls_penalties(queries, queries, tgt.matrix(), ropts.pool,
                               config.k_csls, ropts);
      } else {
        MatrixF mapped = map_queries(src, map.W);
        MatrixF slice = mapped.topRows(std::min<Eigen::Index>(
            mapped.rows(),
            static_cast<Eigen::Index>(config.penalty_pool)));
        cache = csls_penalties(queries, slice, tgt.matrix(), ropts.pool,
                               config.k_csls, ropts);
      }
      preds = knn_csls(queries, query_words, tgt.matrix(), tgt.vocab(),
                       config.k, cache, ropts);
    }
    std::ofstream pred_out(out_path(config, "predictions.tsv"),
                           std::ios::binary);
    save_prediction_table(preds, pred_out);
  }

  EvaluationReport report = stratified(preds, gold, eval_config);
  report.system_label = config.label;
  report.gold_id = config.gold;
  report.config_echo = build_echo("evaluate", config);
  report.config_echo.emplace_back("scoring", to_string(preds.scoring));
  report.config_echo.emplace_back("candidate_pool",
                                  cat(preds.candidate_pool));

  write_text_file(out_path(config, "report.json"),
                  evaluation_report_json(report).dump(2) + "\n");
  write_text_file(out_path(config, "report.txt"),
                  evaluation_report_text(report));
  std::cout << "evaluate: " << config.label << " P@" << config.k << " = "
            << fmt_pct(report.p_at_k) << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// clean
// --------------------------------------------------------------------------

inline int cmd_clean(const RunConfig& config) {
  prepare_out_dir(config);
  if (config.dicts.size() != 1)
    throw ConfigError("clean expects exactly one --dict");
  std::string annotations =
      config.annotations.empty() ? "" : config.annotations.front();
  AnnotatedDictionary dict = load_dict(config.dicts.front(), annotations,
                                       config);
  auto [cleaned, summary] = clean(dict, !config.exclude_enriched);

  std::ofstream dict_out(out_path(config, "cleaned.dict"), std::ios::binary);
  save_dictionary(cleaned, dict_out);
  std::ofstream ann_out(out_path(config, "cleaned_annotations.tsv"),
                        std::ios::binary);
  save_annotations(cleaned, ann_out);
  Json j = removal_summary_json(summary);
  j["config"] = config_echo_json(build_echo("clean", config));
  write_text_file(out_path(config, "removal_summary.json"), j.dump(2) + "\n");
  write_text_file(out_path(config, "removal_summary.txt"),
                  removal_summary_text(summary));
  std::cout << "clean: sources " << summary.sources_before << " -> "
            << summary.sources_after << ", removed "
            << summary.removed_pnoun + summary.removed_invalid << " pairs\n";
  return 0;
}

// --------------------------------------------------------------------------
// stats
// --------------------------------------------------------------------------

inline int cmd_stats(const RunConfig& config) {
  prepare_out_dir(config);
  if (config.dicts.empty()) throw ConfigError("stats expects at least one --dict");
  if (!config.annotations.empty() &&
      config.annotations.size() != config.dicts.size())
    throw ConfigError("--annotations must pair up with --dict");
  if (!config.labels.empty() && config.labels.size() != config.dicts.size())
    throw ConfigError("--labels must pair up with --dict");

  std::vector<AnnotatedDictionary> dicts;
  std::vector<std::string> labels = config.labels;
  for (std::size_t i = 0; i < config.dicts.size(); ++i) {
    std::string annotations =
        config.annotations.empty() ? "" : config.annotations[i];
    dicts.push_back(load_dict(config.dicts[i], annotations, config));
    if (config.labels.empty())
      labels.push_back(fs::path(config.dicts[i]).filename().string());
  }
  CompositionReport report =
      composition(dicts, labels, !config.exclude_enriched);

  Json j = composition_report_json(report);
  j["config"] = config_echo_json(build_echo("stats", config));
  write_text_file(out_path(config, "composition_report.json"),
                  j.dump(2) + "\n");
  write_text_file(out_path(config, "composition_report.tsv"),
                  composition_report_tsv(report));
  write_text_file(out_path(config, "composition_report.txt"),
                  composition_report_text(report));
  std::cout << "stats: " << dicts.size() << " dictionaries, macro NOUN "
            << fmt_pct(report.macro(PosTag::NOUN)) << "%\n";
  return 0;
}

// --------------------------------------------------------------------------
// compare
// --------------------------------------------------------------------------

inline std::vector<EvaluationReport> load_reports(
    const std::vector<std::string>& paths) {
  std::vector<EvaluationReport> reports;
  for (const auto& path : paths) {
    require_file(path, "report file");
    std::ifstream in(path);
    Json j = Json::parse(in);
    reports.push_back(evaluation_report_from_json(j));
  }
  return reports;
}

inline int cmd_compare(const RunConfig& config) {
  prepare_out_dir(config);
  if (config.reports.empty())
    throw ConfigError("compare expects at least one --report");
  if (config.baseline.empty()) throw ConfigError("--baseline is required");
  std::vector<EvaluationReport> reports = load_reports(config.reports);
  DeltaTable original = compare(reports, config.baseline);

  std::optional<DeltaTable> cleaned;
  if (!config.cleaned_reports.empty()) {
    std::vector<EvaluationReport> cleaned_reports =
        load_reports(config.cleaned_reports);
    cleaned = compare(cleaned_reports, config.baseline);
  }

  Json j;
  j["original"] = delta_table_json(original);
  if (cleaned) j["cleaned"] = delta_table_json(*cleaned);
  j["config"] = config_echo_json(build_echo("compare", config));
  write_text_file(out_path(config, "compare_report.json"), j.dump(2) + "\n");
  write_text_file(out_path(config, "delta.tsv"),
                  delta_table_tsv(original, cleaned ? &*cleaned : nullptr));
  std::string text = delta_table_text(original);
  if (cleaned) text += cat("cleaned data:\n", delta_table_text(*cleaned));
  write_text_file(out_path(config, "compare_summary.txt"), text);
  std::cout << "compare: baseline " << config.baseline << ", "
            << original.rows.size() << " systems\n";
  return 0;
}

// --------------------------------------------------------------------------
// gap
// --------------------------------------------------------------------------

inline int cmd_gap(const RunConfig& config) {
  prepare_out_dir(config);
  DisagreementSets sets;
  if (!config.sets.empty()) {
    require_file(config.sets, "disagreement sets file");
    std::ifstream in(config.sets);
    sets = load_disagreements(in, config.label_a, config.label_b);
  } else {
    require_file(config.preds_a, "prediction table A");
    require_file(config.preds_b, "prediction table B");
    require_file(config.gold, "gold dictionary");
    AnnotatedDictionary gold =
        load_dict(config.gold, config.gold_annotations, config);
    std::ifstream in_a(config.preds_a), in_b(config.preds_b);
    PredictionTable a = load_prediction_table(in_a);
    PredictionTable b = load_prediction_table(in_b);
    auto oov = oov_policy_from_string(config.oov);
    if (!oov) throw ConfigError(cat("--oov must be exclude or count_wrong"));
    sets = disagreements(a, b, gold, *oov, config.label_a, config.label_b);
  }
  require_file(config.verdicts, "verdict file");
  std::ifstream vin(config.verdicts);
  VerdictFile verdicts = load_verdicts(vin);
  std::size_t n = config.n_override > 0
                      ? static_cast<std::size_t>(config.n_override)
                      : sets.evaluated();
  GapReport report = gap_analysis(sets, verdicts, n);

  Json j = gap_report_json(report);
  j["config"] = config_echo_json(build_echo("gap", config));
  write_text_file(out_path(config, "gap_report.json"), j.dump(2) + "\n");
  std::string summary = gap_report_text(report);
  write_text_file(out_path(config, "gap_summary.txt"), summary);
  std::ofstream sets_out(out_path(config, "disagreements.tsv"),
                         std::ios::binary);
  save_disagreements(sets, sets_out);
  std::cout << "gap: raw_gap=" << fmt_pct(report.raw_gap_pct())
            << "% adjusted_gap=" << fmt_pct(report.adjusted_gap_pct())
            << "%\n";
  return 0;
}

// --------------------------------------------------------------------------
// enrich
// --------------------------------------------------------------------------

inline int cmd_enrich(const RunConfig& config) {
  prepare_out_dir(config);
  if (config.dicts.size() != 1)
    throw ConfigError("enrich expects exactly one --dict");
  std::string annotations =
      config.annotations.empty() ? "" : config.annotations.front();
  AnnotatedDictionary dict = load_dict(config.dicts.front(), annotations,
                                       config);

  require_file(config.src_unimorph, "source UniMorph table");
  require_file(config.tgt_unimorph, "target UniMorph table");
  require_file(config.corr_map, "correspondence map");
  require_file(config.tgt_emb, "target embedding file");
  std::ifstream src_in(config.src_unimorph), tgt_in(config.tgt_unimorph),
      map_in(config.corr_map);
  ParadigmTable src_table = load_unimorph(src_in);
  ParadigmTable tgt_table = load_unimorph(tgt_in);
  CorrespondenceMap corr = load_correspondence_map(map_in);
  // Vocabulary gate only; normalization is irrelevant here.
  std::ifstream emb_in(config.tgt_emb);
  LoadOptions emb_options;
  emb_options.lang = parse_pair(config.pair).second;
  if (config.max_vocab > 0) emb_options.max_vocab = config.max_vocab;
  EmbeddingSpace vocab = load_embeddings(emb_in, emb_options);

  auto [enriched, log] = enrich(dict, src_table, tgt_table, corr, vocab);

  std::ofstream dict_out(out_path(config, "enriched.dict"), std::ios::binary);
  save_dictionary(enriched, dict_out);
  std::ofstream ann_out(out_path(config, "enriched_annotations.tsv"),
                        std::ios::binary);
  save_annotations(enriched, ann_out);
  std::ofstream log_out(out_path(config, "enrichment_log.tsv"),
                        std::ios::binary);
  save_enrichment_log(log, log_out);
  Json j = enrichment_summary_json(log);
  j["config"] = config_echo_json(build_echo("enrich", config));
  write_text_file(out_path(config, "enrichment_summary.json"),
                  j.dump(2) + "\n");
  write_text_file(out_path(config, "enrichment_summary.txt"),
                  enrichment_summary_text(log));
  std::cout << "enrich: added " << log.added.size() << " of "
            << log.candidates() << " candidate forms\n";
  return 0;
}

// --------------------------------------------------------------------------
// app wiring
// --------------------------------------------------------------------------

inline void add_common_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--out-dir", c.out_dir, "output directory");
  sub->add_option("--threads", c.threads, "worker threads")
      ->envname("BDIKIT_THREADS");
  sub->add_option("--seed", c.seed, "random seed echoed into reports");
  sub->add_option("--max-vocab", c.max_vocab,
                  "embedding vocabulary cap (0 = unlimited)");
  sub->add_option("--normalize", c.normalize_scheme,
                  "embedding normalization: unit or centered_unit");
  sub->add_option("--block", c.block, "retrieval block size");
  sub->add_option("--pool", c.pool, "candidate pool cap (0 = loaded vocab)");
  sub->add_option("--pair", c.pair, "language pair, e.g. en-bg");
  sub->add_flag("--lenient-annotations", c.lenient_annotations,
                "skip unmatched annotation rows instead of failing");
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"bilingual dictionary induction evaluation toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");
  RunConfig config;
  std::string command;

  CLI::App* align = app.add_subcommand("align", "train an alignment map");
  align->add_option("--src-emb", config.src_emb, "source embeddings");
  align->add_option("--tgt-emb", config.tgt_emb, "target embeddings");
  align->add_option("--seed-dict", config.seed_dict, "training dictionary");
  align->add_option("--trainer", config.trainer,
                    "procrustes | procrustes_refined | rcsls");
  align->add_option("--rounds", config.rounds, "refinement rounds");
  align->add_option("--epochs", config.epochs, "rcsls epochs");
  align->add_option("--lr", config.learning_rate, "rcsls learning rate");
  align->add_option("--rcsls-k", config.rcsls_k, "rcsls neighborhood size");
  align->add_option("--dict-top", config.dict_top,
                    "frequent-vocabulary cut for refinement");
  align->add_option("--k-csls", config.k_csls, "CSLS neighborhood size");
  align->add_option("--selection-sample", config.selection_sample,
                    "words sampled by the selection criterion");
  align->add_option("--degenerate-threshold", config.degenerate_threshold,
                    "selection score below this flags degeneracy");
  add_common_options(align, config);
  align->callback([&] { command = "align"; });

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "retrieve translations and score P@k");
  evaluate->add_option("--src-emb", config.src_emb, "source embeddings");
  evaluate->add_option("--tgt-emb", config.tgt_emb, "target embeddings");
  evaluate->add_option("--map", config.map_path, "alignment map file");
  evaluate->add_option("--preds", config.preds_path,
                       "existing prediction table (evaluation-only mode)");
  evaluate->add_option("--gold", config.gold, "gold dictionary");
  evaluate->add_option("--gold-annotations", config.gold_annotations,
                       "annotation TSV for the gold dictionary");
  evaluate->add_option("--scorer", config.scorer, "cosine | csls");
  evaluate->add_option("-k,--k", config.k, "the k of P@k");
  evaluate->add_option("--k-csls", config.k_csls, "CSLS neighborhood size");
  evaluate->add_option("--oov", config.oov, "exclude | count_wrong");
  evaluate->add_option("--label", config.label, "system label");
  evaluate->add_option("--penalty-pool", config.penalty_pool,
                       "mapped-vocabulary slice for r_tgt when queries are "
                       "sparse");
  add_common_options(evaluate, config);
  evaluate->callback([&] { command = "evaluate"; });

  CLI::App* clean_cmd =
      app.add_subcommand("clean", "drop proper-noun and invalid pairs");
  clean_cmd->add_option("--dict", config.dicts, "dictionary file");
  clean_cmd->add_option("--annotations", config.annotations,
                        "annotation TSV");
  clean_cmd->add_flag("--exclude-enriched", config.exclude_enriched,
                      "drop enrichment-provenance pairs too");
  add_common_options(clean_cmd, config);
  clean_cmd->callback([&] { command = "clean"; });

  CLI::App* stats =
      app.add_subcommand("stats", "POS composition of dictionaries");
  stats->add_option("--dict", config.dicts, "dictionary files");
  stats->add_option("--annotations", config.annotations,
                    "annotation TSVs, paired with --dict");
  stats->add_option("--labels", config.labels, "labels, paired with --dict");
  stats->add_flag("--exclude-enriched", config.exclude_enriched,
                  "ignore enrichment-provenance pairs");
  add_common_options(stats, config);
  stats->callback([&] { command = "stats"; });

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "deltas against a baseline system");
  compare_cmd->add_option("--report", config.reports,
                          "evaluation report.json files");
  compare_cmd->add_option("--cleaned-report", config.cleaned_reports,
                          "report.json files on cleaned data");
  compare_cmd->add_option("--baseline", config.baseline, "baseline label");
  add_common_options(compare_cmd, config);
  compare_cmd->callback([&] { command = "compare"; });

  CLI::App* gap = app.add_subcommand(
      "gap", "disagreement partition and gap arithmetic");
  gap->add_option("--sets", config.sets, "disagreement sets TSV");
  gap->add_option("--preds-a", config.preds_a, "prediction table A");
  gap->add_option("--preds-b", config.preds_b, "prediction table B");
  gap->add_option("--gold", config.gold, "gold dictionary");
  gap->add_option("--gold-annotations", config.gold_annotations,
                  "annotation TSV for the gold dictionary");
  gap->add_option("--verdicts", config.verdicts, "verdict TSV");
  gap->add_option("--label-a", config.label_a, "label of system A");
  gap->add_option("--label-b", config.label_b, "label of system B");
  gap->add_option("--oov", config.oov, "exclude | count_wrong");
  gap->add_option("-n,--n", config.n_override,
                  "total source words N (0 = partition size)");
  add_common_options(gap, config);
  gap->callback([&] { command = "gap"; });

  CLI::App* enrich_cmd = app.add_subcommand(
      "enrich", "add inflectional variants to gold targets");
  enrich_cmd->add_option("--dict", config.dicts, "dictionary file");
  enrich_cmd->add_option("--annotations", config.annotations,
                         "annotation TSV");
  enrich_cmd->add_option("--src-unimorph", config.src_unimorph,
                         "source-language UniMorph TSV");
  enrich_cmd->add_option("--tgt-unimorph", config.tgt_unimorph,
                         "target-language UniMorph TSV");
  enrich_cmd->add_option("--corr-map", config.corr_map,
                         "feature-bundle correspondence map");
  enrich_cmd->add_option("--tgt-emb", config.tgt_emb,
                         "target embeddings (vocabulary gate)");
  add_common_options(enrich_cmd, config);
  enrich_cmd->callback([&] { command = "enrich"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (command == "align") return cmd_align(config);
    if (command == "evaluate") return cmd_evaluate(config);
    if (command == "clean") return cmd_clean(config);
    if (command == "stats") return cmd_stats(config);
    if (command == "compare") return cmd_compare(config);
    if (command == "gap") return cmd_gap(config);
    if (command == "enrich") return cmd_enrich(config);
    throw ConfigError("no subcommand selected");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  static const char* kProgram = "bdikit";
  argv.push_back(kProgram);
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace bdikit::cli
