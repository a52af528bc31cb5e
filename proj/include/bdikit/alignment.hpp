// Linear source->target alignment maps, applied as x -> Wx.
//
//   procrustes_fit  closed-form orthogonal solution: W = U V^T from the SVD
//                   of Y^T X over seed rows, the minimizer of |XW^T - Y|_F
//                   over orthogonal matrices.
//   refine          iterated Procrustes; each round rebuilds the seed set as
//                   mutual CSLS nearest neighbors over the frequent vocab.
//   rcsls_fit       full-batch gradient ascent on the relaxed-CSLS criterion,
//                   initialized from Procrustes, step-halved on decrease.
//   selection_score mean cosine between mapped sources and their CSLS-top-1
//                   targets (the model selection criterion).
#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bdikit/common.hpp"
#include "bdikit/dictionary.hpp"
#include "bdikit/embedding.hpp"
#include "bdikit/retrieval.hpp"

namespace bdikit {

enum class Trainer { procrustes, procrustes_refined, rcsls, external };

inline const char* to_string(Trainer t) {
  switch (t) {
    case Trainer::procrustes: return "procrustes";
    case Trainer::procrustes_refined: return "procrustes_refined";
    case Trainer::rcsls: return "rcsls";
    case Trainer::external: return "external";
  }
  return "?";
}

inline std::optional<Trainer> trainer_from_string(std::string_view s) {
  if (s == "procrustes") return Trainer::procrustes;
  if (s == "procrustes_refined") return Trainer::procrustes_refined;
  if (s == "rcsls") return Trainer::rcsls;
  if (s == "external") return Trainer::external;
  return {};
}

struct SeedPairs {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct AlignmentMap {
  Eigen::MatrixXd W;  // d x d, applied as x -> Wx
  bool orthogonal = false;
  Trainer trainer = Trainer::external;
  std::map<std::string, std::string> meta;
};

inline double orthogonality_residual(const Eigen::MatrixXd& W) {
  Eigen::MatrixXd gram = W.transpose() * W;
  gram.diagonal().array() -= 1.0;
  return gram.cwiseAbs().maxCoeff();
}

struct SeedStats {
  std::size_t kept = 0;
  std::size_t dropped_oov = 0;
};

// Renders a dictionary as index pairs; pairs with an OOV side are dropped
// with a count.
inline SeedPairs seeds_from_dictionary(const AnnotatedDictionary& dict,
                                       const EmbeddingSpace& src,
                                       const EmbeddingSpace& tgt,
                                       SeedStats* stats = nullptr) {
  SeedPairs seeds;
  SeedStats local;
  for (const auto& p : dict.pairs()) {
    auto si = src.lookup(p.source);
    auto ti = tgt.lookup(p.target);
    if (!si || !ti) {
      ++local.dropped_oov;
      continue;
    }
    seeds.pairs.emplace_back(*si, *ti);
    ++local.kept;
  }
  if (stats) *stats = local;
  return seeds;
}

// Closed-form orthogonal Procrustes over paired rows (X source, Y target).
inline Eigen::MatrixXd procrustes_solve(const Eigen::MatrixXd& X,
                                        const Eigen::MatrixXd& Y) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols())
    throw Error(cat("paired seed matrices differ in shape: ", X.rows(), "x",
                    X.cols(), " vs ", Y.rows(), "x", Y.cols()));
  if (X.rows() == 0) throw Error("empty seed set");
  Eigen::MatrixXd M = Y.transpose() * X;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace detail {

inline void check_training_inputs(const EmbeddingSpace& src,
                                  const EmbeddingSpace& tgt,
                                  const SeedPairs& seeds) {
  if (src.norm_state() == NormState::raw || tgt.norm_state() == NormState::raw)
    throw Error("spaces must be normalized before alignment training");
  if (src.dim() != tgt.dim())
    throw Error(cat("dimension mismatch between spaces: ", src.dim(), " vs ",
                    tgt.dim()));
  if (seeds.empty()) throw Error("empty seed set");
  for (const auto& [si, ti] : seeds.pairs)
    if (si < 0 || si >= src.size() || ti < 0 || ti >= tgt.size())
      throw Error(cat("seed pair (", si, ", ", ti, ") out of range"));
}

inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> seed_matrices(
    const EmbeddingSpace& src, const EmbeddingSpace& tgt,
    const SeedPairs& seeds) {
  const Eigen::Index n = static_cast<Eigen::Index>(seeds.size());
  Eigen::MatrixXd X(n, src.dim()), Y(n, tgt.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = src.matrix().row(seeds.pairs[static_cast<std::size_t>(i)].first)
                   .cast<double>();
    Y.row(i) = tgt.matrix().row(seeds.pairs[static_cast<std::size_t>(i)].second)
                   .cast<double>();
  }
  return {std::move(X), std::move(Y)};
}

// CSLS top-1 candidate index for every query row.
inline std::vector<Eigen::Index> csls_top1(const MatrixF& queries,
                                           const MatrixF& pool,
                                           const CslsPenaltyCache& cache,
                                           const RetrievalOptions& opts) {
  std::vector<Eigen::Index> top(static_cast<std::size_t>(queries.rows()), 0);
  parallel_for(static_cast<std::size_t>(queries.rows()), opts.threads,
               [&](std::size_t lo, std::size_t hi) {
                 for (std::size_t q = lo; q < hi; ++q) {
                   ScoredIdx best{-std::numeric_limits<double>::infinity(), 0};
                   const float* qv =
                       queries.row(static_cast<Eigen::Index>(q)).data();
                   for (Eigen::Index c = 0; c < pool.rows(); ++c) {
                     double cos = dot_f64(qv, pool.row(c).data(),
                                          queries.cols());
                     ScoredIdx s{2.0 * cos - cache.r_src[q] -
                                     cache.r_tgt[static_cast<std::size_t>(c)],
                                 c};
                     if (better(s, best)) best = s;
                   }
                   top[q] = best.idx;
                 }
               });
  return top;
}

}  // namespace detail

inline AlignmentMap procrustes_fit(const EmbeddingSpace& src,
                                   const EmbeddingSpace& tgt,
                                   const SeedPairs& seeds) {
  detail::check_training_inputs(src, tgt, seeds);
  auto [X, Y] = detail::seed_matrices(src, tgt, seeds);
  AlignmentMap map;
  map.W = procrustes_solve(X, Y);
  map.orthogonal = true;
  map.trainer = Trainer::procrustes;
  map.meta["seeds"] = cat(seeds.size());
  map.meta["iterations"] = "1";
  if (static_cast<Eigen::Index>(seeds.size()) < src.dim())
    map.meta["warning"] =
        cat("seed count ", seeds.size(), " below dimension ", src.dim());
  return map;
}

struct RefineConfig {
  int rounds = 5;                    // Procrustes iterations
  Eigen::Index dict_top = 20000;     // frequent-vocabulary cut per side
  int k_csls = 10;
  Eigen::Index selection_sample = 10000;
  RetrievalOptions retrieval;
};

struct SelectionScore {
  double value = 0;
  bool degenerate = false;
  double threshold = 0;
  Eigen::Index sample = 0;
  bool clamped = false;  // sample_size exceeded the vocabulary
};

inline SelectionScore selection_score(const AlignmentMap& map,
                                      const EmbeddingSpace& src,
                                      const EmbeddingSpace& tgt,
                                      Eigen::Index sample_size = 10000,
                                      int k_csls = 10,
                                      double degenerate_threshold = 0.0,
                                      const RetrievalOptions& opts = {}) {
  if (src.norm_state() == NormState::raw || tgt.norm_state() == NormState::raw)
    throw Error("spaces must be normalized before scoring");
  if (sample_size <= 0) throw Error("sample_size must be positive");
  SelectionScore result;
  result.threshold = degenerate_threshold;
  result.clamped = sample_size > src.size();
  result.sample = std::min(sample_size, src.size());

  MatrixF mapped = map_queries(src, map.W);
  MatrixF sample = mapped.topRows(result.sample);
  const Eigen::Index pool_rows =
      detail::effective_pool(tgt.size(), opts.pool);
  if (k_csls > pool_rows || k_csls > sample.rows())
    throw Error(cat("k_csls=", k_csls, " exceeds a pool size"));
  CslsPenaltyCache cache =
      csls_penalties(sample, sample, tgt.matrix(), opts.pool, k_csls, opts);
  MatrixF pool = tgt.matrix().topRows(pool_rows);
  auto top1 = detail::csls_top1(sample, pool, cache, opts);
  double sum = 0.0;
  for (Eigen::Index q = 0; q < sample.rows(); ++q)
    sum += detail::dot_f64(sample.row(q).data(),
                           pool.row(top1[static_cast<std::size_t>(q)]).data(),
                           sample.cols());
  result.value = sum / static_cast<double>(sample.rows());
  result.degenerate = result.value < degenerate_threshold;
  return result;
}

// Iterated Procrustes. Round 1 fits the given seeds; each later round
// induces a fresh seed set as mutual CSLS nearest neighbors between the
// mapped frequent source vocabulary and the frequent target vocabulary
// (frequency = vocabulary order), then refits.
inline AlignmentMap refine(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                           const SeedPairs& seeds,
                           const RefineConfig& config = {}) {
  if (config.rounds < 1)
    throw Error(cat("rounds must be >= 1, got ", config.rounds));
  detail::check_training_inputs(src, tgt, seeds);

  AlignmentMap map = procrustes_fit(src, tgt, seeds);
  std::string scores;
  std::string dict_sizes = cat(seeds.size());
  auto round_score = [&]() {
    SelectionScore s = selection_score(map, src, tgt, config.selection_sample,
                                       config.k_csls, 0.0, config.retrieval);
    scores += scores.empty() ? fmt_num(s.value) : cat(",", fmt_num(s.value));
  };
  round_score();

  const Eigen::Index f_src = std::min(config.dict_top, src.size());
  const Eigen::Index f_tgt = std::min(config.dict_top, tgt.size());
  for (int round = 2; round <= config.rounds; ++round) {
    MatrixF mapped = map_queries(src, map.W).topRows(f_src);
    MatrixF tpool = tgt.matrix().topRows(f_tgt);
    if (config.k_csls > f_src || config.k_csls > f_tgt)
      throw Error(cat("k_csls=", config.k_csls,
                      " exceeds the frequent-vocabulary cut"));
    RetrievalOptions ropts = config.retrieval;
    ropts.pool = 0;
    CslsPenaltyCache fwd_cache =
        csls_penalties(mapped, mapped, tpool, 0, config.k_csls, ropts);
    auto fwd = detail::csls_top1(mapped, tpool, fwd_cache, ropts);
    CslsPenaltyCache bwd_cache =
        csls_penalties(tpool, tpool, mapped, 0, config.k_csls, ropts);
    auto bwd = detail::csls_top1(tpool, mapped, bwd_cache, ropts);

    SeedPairs induced;
    for (Eigen::Index i = 0; i < f_src; ++i) {
      Eigen::Index j = fwd[static_cast<std::size_t>(i)];
      if (bwd[static_cast<std::size_t>(j)] == i)
        induced.pairs.emplace_back(i, j);
    }
    if (induced.empty())
      throw Error(cat("refinement round ", round,
                      " induced an empty dictionary"));
    AlignmentMap refit = procrustes_fit(src, tgt, induced);
    map.W = refit.W;
    dict_sizes += cat(",", induced.size());
    round_score();
  }
  map.trainer = Trainer::procrustes_refined;
  map.orthogonal = true;
  map.meta.clear();
  map.meta["rounds"] = cat(config.rounds);
  map.meta["seeds"] = cat(seeds.size());
  map.meta["dict_top"] = cat(config.dict_top);
  map.meta["k_csls"] = cat(config.k_csls);
  map.meta["round_dict_sizes"] = dict_sizes;
  map.meta["selection_scores"] = scores;
  return map;
}

struct RcslsConfig {
  int epochs = 10;
  double learning_rate = 1.0;
  int k = 10;               // neighborhood size of the relaxed-CSLS criterion
  Eigen::Index pool = 0;    // neighborhood candidate pool cap; 0 = full vocab
  int max_halvings = 20;    // step halvings per epoch before stalling
  RetrievalOptions retrieval;
};

struct RcslsEval {
  double objective = 0;
  Eigen::MatrixXd gradient;
};

// Relaxed-CSLS criterion over seed pairs (x_i, y_i), vectors unit-normalized:
//
//   f(W) = (1/n) sum_i [ 2 (Wx_i).y_i
//                        - (1/k) sum_{y in N_k(Wx_i)} (Wx_i).y
//                        - (1/k) sum_{x in N_k(y_i)}  (Wx).y_i ]
//
// N_k(Wx_i) ranges over the target pool, N_k(y_i) over the mapped source
// pool. The gradient holds the neighborhoods fixed at W; ties break by
// ascending pool index.
inline RcslsEval rcsls_objective(const Eigen::MatrixXd& W,
                                 const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& Y,
                                 const Eigen::MatrixXd& src_pool,
                                 const Eigen::MatrixXd& tgt_pool, int k) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (k <= 0) throw Error("neighborhood size k must be positive");
  if (k > src_pool.rows() || k > tgt_pool.rows())
    throw Error(cat("k=", k, " exceeds a neighborhood pool size"));

  Eigen::MatrixXd mapped_seeds = X * W.transpose();     // n x d, rows Wx_i
  Eigen::MatrixXd mapped_pool = src_pool * W.transpose();  // P_s x d

  RcslsEval eval;
  eval.gradient = Eigen::MatrixXd::Zero(d, d);
  const double inv_k = 1.0 / static_cast<double>(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    eval.objective += 2.0 * mapped_seeds.row(i).dot(Y.row(i));
    eval.gradient += 2.0 * Y.row(i).transpose() * X.row(i);

    detail::TopK near_tgt(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < tgt_pool.rows(); ++c)
      near_tgt.offer(mapped_seeds.row(i).dot(tgt_pool.row(c)), c);
    for (const auto& s : near_tgt.ranked()) {
      eval.objective -= inv_k * s.score;
      eval.gradient -= inv_k * tgt_pool.row(s.idx).transpose() * X.row(i);
    }

    detail::TopK near_src(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < mapped_pool.rows(); ++c)
      near_src.offer(mapped_pool.row(c).dot(Y.row(i)), c);
    for (const auto& s : near_src.ranked()) {
      eval.objective -= inv_k * s.score;
      eval.gradient -= inv_k * Y.row(i).transpose() * src_pool.row(s.idx);
    }
  }
  eval.objective /= static_cast<double>(n);
  eval.gradient /= static_cast<double>(n);
  return eval;
}

// Full-batch gradient ascent from the Procrustes initialization. A step that
// would decrease the objective is retried with a halved rate (the halving is
// permanent); accepted objectives are therefore non-decreasing.
inline AlignmentMap rcsls_fit(const EmbeddingSpace& src,
                              const EmbeddingSpace& tgt,
                              const SeedPairs& seeds,
                              const RcslsConfig& config = {}) {
  detail::check_training_inputs(src, tgt, seeds);
  if (config.epochs < 0) throw Error("epochs must be non-negative");
  if (!(config.learning_rate >= 0))
    throw Error("learning rate must be non-negative");

  auto [X, Y] = detail::seed_matrices(src, tgt, seeds);
  const Eigen::Index p_src = detail::effective_pool(src.size(), config.pool);
  const Eigen::Index p_tgt = detail::effective_pool(tgt.size(), config.pool);
  Eigen::MatrixXd src_pool = src.matrix().topRows(p_src).cast<double>();
  Eigen::MatrixXd tgt_pool = tgt.matrix().topRows(p_tgt).cast<double>();

  AlignmentMap map;
  map.W = procrustes_solve(X, Y);
  RcslsEval cur = rcsls_objective(map.W, X, Y, src_pool, tgt_pool, config.k);
  if (!std::isfinite(cur.objective))
    throw Error("non-finite objective at initialization");

  double lr = config.learning_rate;
  std::string objectives = fmt_num(cur.objective);
  int stalled_epoch = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Eigen::MatrixXd cand = map.W + lr * cur.gradient;
    RcslsEval cand_eval =
        rcsls_objective(cand, X, Y, src_pool, tgt_pool, config.k);
    int halvings = 0;
    while ((!std::isfinite(cand_eval.objective) ||
            cand_eval.objective < cur.objective) &&
           halvings < config.max_halvings) {
      lr /= 2.0;
      ++halvings;
      cand = map.W + lr * cur.gradient;
      cand_eval = rcsls_objective(cand, X, Y, src_pool, tgt_pool, config.k);
    }
    if (!std::isfinite(cand_eval.objective))
      throw Error(cat("non-finite objective at epoch ", epoch,
                      " (learning rate ", fmt_num(lr), ")"));
    if (cand_eval.objective < cur.objective) {
      stalled_epoch = epoch;  // no ascent direction left at this scale
      break;
    }
    map.W = std::move(cand);
    cur = std::move(cand_eval);
    objectives += cat(",", fmt_num(cur.objective));
  }

  map.trainer = Trainer::rcsls;
  map.orthogonal = orthogonality_residual(map.W) < 1e-5;
  map.meta["seeds"] = cat(seeds.size());
  map.meta["epochs"] = cat(config.epochs);
  map.meta["learning_rate"] = fmt_num(config.learning_rate);
  map.meta["learning_rate_final"] = fmt_num(lr);
  map.meta["k"] = cat(config.k);
  map.meta["pool_src"] = cat(p_src);
  map.meta["pool_tgt"] = cat(p_tgt);
  map.meta["init"] = "procrustes";
  map.meta["objectives"] = objectives;
  if (stalled_epoch > 0) map.meta["stalled_epoch"] = cat(stalled_epoch);
  return map;
}

// Text persistence: header "d d" then d rows, plus a key=value sidecar at
// <path>.meta. Loaded maps always carry trainer=external.
inline void save_alignment(const AlignmentMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(cat("cannot write alignment file: ", path));
  out << map.W.rows() << ' ' << map.W.cols() << '\n';
  for (Eigen::Index i = 0; i < map.W.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.W.cols(); ++j) {
      if (j) out << ' ';
      out << fmt_num(map.W(i, j));
    }
    out << '\n';
  }
  std::ofstream meta(path + ".meta");
  if (!meta) throw Error(cat("cannot write alignment sidecar: ", path, ".meta"));
  meta << "trainer=" << to_string(map.trainer) << '\n';
  meta << "orthogonal=" << (map.orthogonal ? "true" : "false") << '\n';
  meta << "dim=" << map.W.rows() << '\n';
  for (const auto& [key, value] : map.meta)
    meta << key << '=' << value << '\n';
}

inline AlignmentMap load_alignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(cat("cannot open alignment file: ", path));
  std::string line;
  if (!std::getline(in, line)) throw Error("alignment file is empty");
  auto header = split_ws(line);
  if (header.size() != 2)
    throw Error("alignment header must be \"<rows> <cols>\"");
  auto rows = parse_int(header[0]);
  auto cols = parse_int(header[1]);
  if (!rows || !cols || *rows <= 0 || *cols <= 0 || *rows != *cols)
    throw Error("alignment matrix must be square with positive dimension");
  AlignmentMap map;
  map.W.resize(*rows, *cols);
  for (Eigen::Index i = 0; i < map.W.rows(); ++i) {
    if (!std::getline(in, line))
      throw Error(cat("alignment file truncated at row ", i + 1));
    auto fields = split_ws(line);
    if (fields.size() != static_cast<std::size_t>(*cols))
      throw Error(cat("alignment row ", i + 1, ": expected ", *cols,
                      " values, got ", fields.size()));
    for (Eigen::Index j = 0; j < map.W.cols(); ++j) {
      auto v = parse_double(fields[static_cast<std::size_t>(j)]);
      if (!v) throw Error(cat("alignment row ", i + 1, ": bad value"));
      map.W(i, j) = *v;
    }
  }
  map.trainer = Trainer::external;
  map.orthogonal = orthogonality_residual(map.W) < 1e-5;
  std::ifstream meta(path + ".meta");
  if (meta) {
    while (std::getline(meta, line)) {
      auto pos = line.find('=');
      if (pos == std::string::npos) continue;
      map.meta[line.substr(0, pos)] = std::string(trim(line.substr(pos + 1)));
    }
  }
  return map;
}

}  // namespace bdikit
