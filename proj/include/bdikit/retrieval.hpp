// Batched top-k translation retrieval under cosine and CSLS scoring, plus
// the naive full-matrix reference used as a testing oracle.
//
// Ranking is deterministic: ties break by ascending candidate index, and the
// blocked kernels accumulate per-pair dot products and penalty sums in the
// same order as the naive reference, so rankings are identical for any block
// size or thread count.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bdikit/common.hpp"
#include "bdikit/embedding.hpp"

namespace bdikit {

enum class Scoring { cosine, csls };

inline const char* to_string(Scoring s) {
  return s == Scoring::cosine ? "cosine" : "csls";
}

inline std::optional<Scoring> scoring_from_string(std::string_view s) {
  if (s == "cosine") return Scoring::cosine;
  if (s == "csls") return Scoring::csls;
  return {};
}

struct Prediction {
  std::string target;
  double score = 0;
};

struct PredictionTable {
  Scoring scoring = Scoring::cosine;
  int k = 1;
  int k_csls = 0;  // 0 when scoring is cosine or unknown (external tables)
  std::size_t candidate_pool = 0;
  std::vector<std::string> sources;
  std::vector<std::vector<Prediction>> entries;  // parallel to sources
};

// Scores non-increasing within each list, list lengths within k.
inline bool table_is_ordered(const PredictionTable& table) {
  for (const auto& row : table.entries) {
    if (row.size() > static_cast<std::size_t>(table.k)) return false;
    for (std::size_t i = 1; i < row.size(); ++i)
      if (row[i].score > row[i - 1].score) return false;
  }
  return table.entries.size() == table.sources.size();
}

struct CslsPenaltyCache {
  std::vector<double> r_src;  // per query: mean cosine to k_csls nearest candidates
  std::vector<double> r_tgt;  // per candidate: mean cosine to k_csls nearest pool queries
  int k_csls = 0;
};

struct RetrievalOptions {
  int block = 1024;          // candidate block size
  int threads = 1;
  Eigen::Index pool = 0;     // candidate pool cap; 0 = full vocabulary
};

namespace detail {

inline double dot_f64(const float* a, const float* b, Eigen::Index d) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

struct ScoredIdx {
  double score;
  Eigen::Index idx;
};

inline bool better(const ScoredIdx& a, const ScoredIdx& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.idx < b.idx;
}

// Fixed-capacity selector; worst kept element sits at the heap front.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

  void offer(double score, Eigen::Index idx) {
    ScoredIdx s{score, idx};
    if (heap_.size() < k_) {
      heap_.push_back(s);
      std::push_heap(heap_.begin(), heap_.end(), better);
      return;
    }
    if (better(s, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), better);
      heap_.back() = s;
      std::push_heap(heap_.begin(), heap_.end(), better);
    }
  }

  std::vector<ScoredIdx> ranked() const {
    std::vector<ScoredIdx> out = heap_;
    std::sort(out.begin(), out.end(), better);
    return out;
  }

 private:
  std::size_t k_;
  std::vector<ScoredIdx> heap_;
};

inline Eigen::Index effective_pool(Eigen::Index rows, Eigen::Index cap) {
  return cap > 0 ? std::min(rows, cap) : rows;
}

inline void check_knn_args(Eigen::Index query_cols, Eigen::Index pool_rows,
                           Eigen::Index pool_cols, int k) {
  if (k <= 0) throw Error(cat("k must be positive, got ", k));
  if (pool_rows == 0) throw Error("empty candidate pool");
  if (k > pool_rows)
    throw Error(cat("k=", k, " exceeds candidate pool size ", pool_rows));
  if (query_cols != pool_cols)
    throw Error(cat("dimension mismatch: queries d=", query_cols,
                    ", candidates d=", pool_cols));
}

// Mean of the k best cosines for every row of `queries` against `pool`.
inline std::vector<double> knn_mean_cosine(const MatrixF& queries,
                                           const MatrixF& pool,
                                           Eigen::Index pool_rows, int k,
                                           const RetrievalOptions& opts) {
  const Eigen::Index d = queries.cols();
  const Eigen::Index block =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(opts.block));
  std::vector<double> means(static_cast<std::size_t>(queries.rows()), 0.0);
  parallel_for(static_cast<std::size_t>(queries.rows()), opts.threads,
               [&](std::size_t lo, std::size_t hi) {
                 std::vector<double> buf(static_cast<std::size_t>(block));
                 for (std::size_t q = lo; q < hi; ++q) {
                   TopK top(static_cast<std::size_t>(k));
                   const float* qv =
                       queries.row(static_cast<Eigen::Index>(q)).data();
                   for (Eigen::Index c0 = 0; c0 < pool_rows; c0 += block) {
                     Eigen::Index c1 = std::min(pool_rows, c0 + block);
                     for (Eigen::Index c = c0; c < c1; ++c)
                       buf[static_cast<std::size_t>(c - c0)] =
                           dot_f64(qv, pool.row(c).data(), d);
                     for (Eigen::Index c = c0; c < c1; ++c)
                       top.offer(buf[static_cast<std::size_t>(c - c0)], c);
                   }
                   double sum = 0.0;
                   for (const auto& s : top.ranked()) sum += s.score;
                   means[q] = sum / static_cast<double>(k);
                 }
               });
  return means;
}

}  // namespace detail

// Unit-normalized query rows plus their words against a candidate matrix.
inline PredictionTable knn_cosine(const MatrixF& queries,
                                  const std::vector<std::string>& query_words,
                                  const MatrixF& pool,
                                  const std::vector<std::string>& pool_words,
                                  int k, const RetrievalOptions& opts = {}) {
  const Eigen::Index pool_rows =
      detail::effective_pool(pool.rows(), opts.pool);
  detail::check_knn_args(queries.cols(), pool_rows, pool.cols(), k);
  if (query_words.size() != static_cast<std::size_t>(queries.rows()))
    throw Error("query word list does not match query matrix rows");

  PredictionTable table;
  table.scoring = Scoring::cosine;
  table.k = k;
  table.candidate_pool = static_cast<std::size_t>(pool_rows);
  table.sources = query_words;
  table.entries.resize(query_words.size());

  const Eigen::Index d = queries.cols();
  const Eigen::Index block =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(opts.block));
  parallel_for(static_cast<std::size_t>(queries.rows()), opts.threads,
               [&](std::size_t lo, std::size_t hi) {
                 for (std::size_t q = lo; q < hi; ++q) {
                   detail::TopK top(static_cast<std::size_t>(k));
                   const float* qv =
                       queries.row(static_cast<Eigen::Index>(q)).data();
                   for (Eigen::Index c0 = 0; c0 < pool_rows; c0 += block) {
                     Eigen::Index c1 = std::min(pool_rows, c0 + block);
                     for (Eigen::Index c = c0; c < c1; ++c)
                       top.offer(detail::dot_f64(qv, pool.row(c).data(), d), c);
                   }
                   auto ranked = top.ranked();
                   auto& row = table.entries[q];
                   row.reserve(ranked.size());
                   for (const auto& s : ranked)
                     row.push_back(
                         {pool_words[static_cast<std::size_t>(s.idx)], s.score});
                 }
               });
  return table;
}

inline PredictionTable knn_cosine(const MatrixF& queries,
                                  const std::vector<std::string>& query_words,
                                  const EmbeddingSpace& tgt, int k,
                                  const RetrievalOptions& opts = {}) {
  if (tgt.norm_state() == NormState::raw)
    throw Error("candidate space must be normalized before retrieval");
  return knn_cosine(queries, query_words, tgt.matrix(), tgt.vocab(), k, opts);
}

// r_src per query row against the candidate pool; r_tgt per candidate
// against `penalty_pool` (normally the query set itself, or a frequent
// slice of the mapped source vocabulary when the query set is sparse).
inline CslsPenaltyCache csls_penalties(const MatrixF& queries,
                                       const MatrixF& penalty_pool,
                                       const MatrixF& pool,
                                       Eigen::Index pool_cap, int k_csls,
                                       const RetrievalOptions& opts = {}) {
  if (k_csls <= 0) throw Error(cat("k_csls must be positive, got ", k_csls));
  const Eigen::Index pool_rows = detail::effective_pool(pool.rows(), pool_cap);
  if (k_csls > pool_rows)
    throw Error(cat("k_csls=", k_csls, " exceeds candidate pool size ",
                    pool_rows));
  if (k_csls > penalty_pool.rows())
    throw Error(cat("k_csls=", k_csls, " exceeds penalty pool size ",
                    penalty_pool.rows()));
  if (queries.cols() != pool.cols() || penalty_pool.cols() != pool.cols())
    throw Error("dimension mismatch in csls_penalties");

  CslsPenaltyCache cache;
  cache.k_csls = k_csls;
  cache.r_src = detail::knn_mean_cosine(queries, pool, pool_rows, k_csls, opts);
  MatrixF pool_slice = pool.topRows(pool_rows);
  cache.r_tgt = detail::knn_mean_cosine(pool_slice, penalty_pool,
                                        penalty_pool.rows(), k_csls, opts);
  return cache;
}

inline CslsPenaltyCache csls_penalties(const MatrixF& queries,
                                       const EmbeddingSpace& tgt, int k_csls,
                                       const RetrievalOptions& opts = {}) {
  if (tgt.norm_state() == NormState::raw)
    throw Error("candidate space must be normalized before retrieval");
  return csls_penalties(queries, queries, tgt.matrix(), opts.pool, k_csls,
                        opts);
}

// CSLS(x,y) = 2 cos(x,y) - r_src(x) - r_tgt(y). r_src is constant per query,
// so rankings depend on 2 cos - r_tgt; the emitted score is the full CSLS.
inline PredictionTable knn_csls(const MatrixF& queries,
                                const std::vector<std::string>& query_words,
                                const MatrixF& pool,
                                const std::vector<std::string>& pool_words,
                                int k, const CslsPenaltyCache& cache,
                                const RetrievalOptions& opts = {}) {
  const Eigen::Index pool_rows =
      detail::effective_pool(pool.rows(), opts.pool);
  detail::check_knn_args(queries.cols(), pool_rows, pool.cols(), k);
  if (query_words.size() != static_cast<std::size_t>(queries.rows()))
    throw Error("query word list does not match query matrix rows");
  if (cache.r_src.size() != static_cast<std::size_t>(queries.rows()) ||
      cache.r_tgt.size() < static_cast<std::size_t>(pool_rows))
    throw Error("CSLS penalty cache does not cover queries and pool");

  PredictionTable table;
  table.scoring = Scoring::csls;
  table.k = k;
  table.k_csls = cache.k_csls;
  table.candidate_pool = static_cast<std::size_t>(pool_rows);
  table.sources = query_words;
  table.entries.resize(query_words.size());

  const Eigen::Index d = queries.cols();
  const Eigen::Index block =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(opts.block));
  parallel_for(
      static_cast<std::size_t>(queries.rows()), opts.threads,
      [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = lo; q < hi; ++q) {
          detail::TopK top(static_cast<std::size_t>(k));
          const float* qv = queries.row(static_cast<Eigen::Index>(q)).data();
          const double r_q = cache.r_src[q];
          for (Eigen::Index c0 = 0; c0 < pool_rows; c0 += block) {
            Eigen::Index c1 = std::min(pool_rows, c0 + block);
            for (Eigen::Index c = c0; c < c1; ++c) {
              double cos = detail::dot_f64(qv, pool.row(c).data(), d);
              top.offer(2.0 * cos - r_q -
                            cache.r_tgt[static_cast<std::size_t>(c)],
                        c);
            }
          }
          auto ranked = top.ranked();
          auto& row = table.entries[q];
          row.reserve(ranked.size());
          for (const auto& s : ranked)
            row.push_back(
                {pool_words[static_cast<std::size_t>(s.idx)], s.score});
        }
      });
  return table;
}

inline PredictionTable knn_csls(const MatrixF& queries,
                                const std::vector<std::string>& query_words,
                                const MatrixF& pool,
                                const std::vector<std::string>& pool_words,
                                int k, int k_csls,
                                const RetrievalOptions& opts = {}) {
  CslsPenaltyCache cache =
      csls_penalties(queries, queries, pool, opts.pool, k_csls, opts);
  return knn_csls(queries, query_words, pool, pool_words, k, cache, opts);
}

inline PredictionTable knn_csls(const MatrixF& queries,
                                const std::vector<std::string>& query_words,
                                const EmbeddingSpace& tgt, int k,
                                int k_csls = 10,
                                const RetrievalOptions& opts = {}) {
  CslsPenaltyCache cache = csls_penalties(queries, tgt, k_csls, opts);
  return knn_csls(queries, query_words, tgt.matrix(), tgt.vocab(), k, cache,
                  opts);
}

// Maps every source row through W (x -> Wx) and unit-normalizes the result.
// Zero rows (possible only for singular W) are left as zeros.
inline MatrixF map_queries(const EmbeddingSpace& src, const Eigen::MatrixXd& W) {
  if (W.rows() != src.dim() || W.cols() != src.dim())
    throw Error(cat("alignment map is ", W.rows(), "x", W.cols(),
                    " but embeddings have dimension ", src.dim()));
  Eigen::MatrixXd mapped = src.matrix().cast<double>() * W.transpose();
  for (Eigen::Index i = 0; i < mapped.rows(); ++i) {
    double norm = std::sqrt(mapped.row(i).squaredNorm());
    if (norm > 0) mapped.row(i) /= norm;
  }
  return mapped.cast<float>();
}

// ---------------------------------------------------------------------------
// Naive O(nm) reference: full similarity matrix, full sort. Kept independent
// of the blocked kernels above; used by tests and shipped for oracle runs.
// ---------------------------------------------------------------------------
namespace naive {

inline std::vector<std::vector<double>> cosine_matrix(const MatrixF& queries,
                                                      const MatrixF& pool,
                                                      Eigen::Index pool_rows) {
  std::vector<std::vector<double>> scores(
      static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    auto& row = scores[static_cast<std::size_t>(q)];
    row.resize(static_cast<std::size_t>(pool_rows));
    for (Eigen::Index c = 0; c < pool_rows; ++c) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < queries.cols(); ++i)
        acc += static_cast<double>(queries(q, i)) *
               static_cast<double>(pool(c, i));
      row[static_cast<std::size_t>(c)] = acc;
    }
  }
  return scores;
}

inline std::vector<detail::ScoredIdx> sort_row(const std::vector<double>& row) {
  std::vector<detail::ScoredIdx> order(row.size());
  for (std::size_t i = 0; i < row.size(); ++i)
    order[i] = {row[i], static_cast<Eigen::Index>(i)};
  std::sort(order.begin(), order.end(), detail::better);
  return order;
}

inline PredictionTable knn_cosine(const MatrixF& queries,
                                  const std::vector<std::string>& query_words,
                                  const MatrixF& pool,
                                  const std::vector<std::string>& pool_words,
                                  int k, Eigen::Index pool_cap = 0) {
  const Eigen::Index pool_rows = detail::effective_pool(pool.rows(), pool_cap);
  detail::check_knn_args(queries.cols(), pool_rows, pool.cols(), k);
  PredictionTable table;
  table.scoring = Scoring::cosine;
  table.k = k;
  table.candidate_pool = static_cast<std::size_t>(pool_rows);
  table.sources = query_words;
  auto scores = cosine_matrix(queries, pool, pool_rows);
  for (const auto& row : scores) {
    auto order = sort_row(row);
    std::vector<Prediction> preds;
    for (int i = 0; i < k; ++i)
      preds.push_back({pool_words[static_cast<std::size_t>(order[i].idx)],
                       order[i].score});
    table.entries.push_back(std::move(preds));
  }
  return table;
}

inline CslsPenaltyCache csls_penalties(const MatrixF& queries,
                                       const MatrixF& penalty_pool,
                                       const MatrixF& pool,
                                       Eigen::Index pool_cap, int k_csls) {
  if (k_csls <= 0) throw Error(cat("k_csls must be positive, got ", k_csls));
  const Eigen::Index pool_rows = detail::effective_pool(pool.rows(), pool_cap);
  if (k_csls > pool_rows || k_csls > penalty_pool.rows())
    throw Error("k_csls exceeds a pool size");
  CslsPenaltyCache cache;
  cache.k_csls = k_csls;
  auto fwd = cosine_matrix(queries, pool, pool_rows);
  for (const auto& row : fwd) {
    auto order = sort_row(row);
    double sum = 0.0;
    for (int i = 0; i < k_csls; ++i) sum += order[i].score;
    cache.r_src.push_back(sum / static_cast<double>(k_csls));
  }
  MatrixF pool_slice = pool.topRows(pool_rows);
  auto bwd = cosine_matrix(pool_slice, penalty_pool, penalty_pool.rows());
  for (const auto& row : bwd) {
    auto order = sort_row(row);
    double sum = 0.0;
    for (int i = 0; i < k_csls; ++i) sum += order[i].score;
    cache.r_tgt.push_back(sum / static_cast<double>(k_csls));
  }
  return cache;
}

inline PredictionTable knn_csls(const MatrixF& queries,
                                const std::vector<std::string>& query_words,
                                const MatrixF& pool,
                                const std::vector<std::string>& pool_words,
                                int k, int k_csls, Eigen::Index pool_cap = 0) {
  const Eigen::Index pool_rows = detail::effective_pool(pool.rows(), pool_cap);
  detail::check_knn_args(queries.cols(), pool_rows, pool.cols(), k);
  CslsPenaltyCache cache =
      csls_penalties(queries, queries, pool, pool_cap, k_csls);
  PredictionTable table;
  table.scoring = Scoring::csls;
  table.k = k;
  table.k_csls = k_csls;
  table.candidate_pool = static_cast<std::size_t>(pool_rows);
  table.sources = query_words;
  auto cos = cosine_matrix(queries, pool, pool_rows);
  for (std::size_t q = 0; q < cos.size(); ++q) {
    std::vector<double> row(cos[q].size());
    for (std::size_t c = 0; c < row.size(); ++c)
      row[c] = 2.0 * cos[q][c] - cache.r_src[q] - cache.r_tgt[c];
    auto order = sort_row(row);
    std::vector<Prediction> preds;
    for (int i = 0; i < k; ++i)
      preds.push_back({pool_words[static_cast<std::size_t>(order[i].idx)],
                       order[i].score});
    table.entries.push_back(std::move(preds));
  }
  return table;
}

}  // namespace naive

// ---------------------------------------------------------------------------
// TSV interchange: source, rank, target, score, scoring, k, k_csls. This is
// the format external systems' predictions are evaluated through.
// ---------------------------------------------------------------------------

inline const char kPredictionHeader[] =
    "source\trank\ttarget\tscore\tscoring\tk\tk_csls";

inline void save_prediction_table(const PredictionTable& table,
                                  std::ostream& out) {
  out << kPredictionHeader << '\n';
  for (std::size_t q = 0; q < table.sources.size(); ++q) {
    const auto& row = table.entries[q];
    for (std::size_t r = 0; r < row.size(); ++r) {
      out << table.sources[q] << '\t' << r + 1 << '\t' << row[r].target << '\t'
          << fmt_num(row[r].score) << '\t' << to_string(table.scoring) << '\t'
          << table.k << '\t' << table.k_csls << '\n';
    }
  }
}

inline PredictionTable load_prediction_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw Error("prediction table is empty (header row required)");
  if (trim(line) != kPredictionHeader)
    throw Error(cat("prediction table header must be \"", kPredictionHeader,
                    "\""));
  PredictionTable table;
  std::unordered_map<std::string, std::size_t> row_of;
  bool first = true;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() != 7)
      throw Error(cat("prediction line ", line_no, ": expected 7 fields, got ",
                      fields.size()));
    auto rank = parse_int(fields[1]);
    auto score = parse_double(fields[3]);
    auto scoring = scoring_from_string(fields[4]);
    auto k = parse_int(fields[5]);
    auto k_csls = parse_int(fields[6]);
    if (!rank || !score || !scoring || !k || !k_csls)
      throw Error(cat("prediction line ", line_no, ": malformed field"));
    if (first) {
      table.scoring = *scoring;
      table.k = static_cast<int>(*k);
      table.k_csls = static_cast<int>(*k_csls);
      first = false;
    } else if (*scoring != table.scoring || *k != table.k ||
               *k_csls != table.k_csls) {
      throw Error(cat("prediction line ", line_no,
                      ": scoring/k/k_csls differ from earlier rows"));
    }
    std::string source(fields[0]);
    auto it = row_of.find(source);
    if (it == row_of.end()) {
      if (*rank != 1)
        throw Error(cat("prediction line ", line_no, ": source \"", source,
                        "\" must start at rank 1"));
      row_of.emplace(source, table.sources.size());
      table.sources.push_back(source);
      table.entries.push_back({{std::string(fields[2]), *score}});
    } else {
      auto& row = table.entries[it->second];
      if (*rank != static_cast<long long>(row.size()) + 1)
        throw Error(cat("prediction line ", line_no, ": rank ", *rank,
                        " out of sequence for source \"", source, "\""));
      row.push_back({std::string(fields[2]), *score});
    }
  }
  if (table.sources.empty()) throw Error("prediction table has no rows");
  return table;
}

}  // namespace bdikit
