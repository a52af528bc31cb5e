// Monolingual embedding store: text vector-file ingestion, unit / centered
// normalization, and exact case-sensitive vocabulary lookup. Matrices are
// stored in 32-bit floats; all accumulations (norms, means, dot products)
// run in 64-bit.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bdikit/common.hpp"

namespace bdikit {

using MatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class NormState { raw, unit, centered_unit };

inline const char* to_string(NormState s) {
  switch (s) {
    case NormState::raw: return "raw";
    case NormState::unit: return "unit";
    case NormState::centered_unit: return "centered_unit";
  }
  return "?";
}

inline std::optional<NormState> norm_state_from_string(std::string_view s) {
  if (s == "raw") return NormState::raw;
  if (s == "unit") return NormState::unit;
  if (s == "centered_unit") return NormState::centered_unit;
  return {};
}

class EmbeddingSpace {
 public:
  EmbeddingSpace(std::string lang, std::vector<std::string> vocab,
                 MatrixF matrix, NormState norm_state,
                 std::size_t duplicates_dropped = 0)
      : lang_(std::move(lang)),
        vocab_(std::move(vocab)),
        matrix_(std::move(matrix)),
        norm_state_(norm_state),
        duplicates_dropped_(duplicates_dropped) {
    if (static_cast<Eigen::Index>(vocab_.size()) != matrix_.rows())
      throw Error(cat("vocabulary size ", vocab_.size(),
                      " does not match matrix rows ", matrix_.rows()));
    index_.reserve(vocab_.size());
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      auto [it, inserted] =
          index_.emplace(vocab_[i], static_cast<Eigen::Index>(i));
      if (!inserted)
        throw Error(cat("duplicate vocabulary entry: ", vocab_[i]));
    }
  }

  const std::string& lang() const { return lang_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const MatrixF& matrix() const { return matrix_; }
  Eigen::Index size() const { return matrix_.rows(); }
  Eigen::Index dim() const { return matrix_.cols(); }
  NormState norm_state() const { return norm_state_; }
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }

  const float* row(Eigen::Index i) const { return matrix_.row(i).data(); }

  // Exact, case-sensitive match; OOV is a value, never an error.
  std::optional<Eigen::Index> lookup(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return {};
    return it->second;
  }

 private:
  std::string lang_;
  std::vector<std::string> vocab_;
  MatrixF matrix_;
  NormState norm_state_;
  std::unordered_map<std::string, Eigen::Index> index_;
  std::size_t duplicates_dropped_ = 0;
};

inline std::optional<Eigen::Index> lookup(const EmbeddingSpace& space,
                                          std::string_view word) {
  return space.lookup(word);
}

struct LoadOptions {
  std::string lang = "xx";
  // No cap when unset. The CLI defaults its candidate pools to 200k.
  std::optional<Eigen::Index> max_vocab;
};

// Text vector format: header "<count> <dim>", then one token plus dim numeric
// fields per line. Duplicate tokens keep the first occurrence.
inline EmbeddingSpace load_embeddings(std::istream& in,
                                      const LoadOptions& options = {}) {
  std::string line;
  if (!std::getline(in, line))
    throw Error("malformed header: empty stream");
  auto header = split_ws(line);
  if (header.size() != 2)
    throw Error(cat("malformed header: expected \"<count> <dim>\", got \"",
                    trim(line), "\""));
  auto count = parse_int(header[0]);
  auto dim = parse_int(header[1]);
  if (!count || !dim)
    throw Error(cat("malformed header: non-numeric field in \"", trim(line),
                    "\""));
  if (*dim <= 0)
    throw Error(cat("embedding dimension must be positive, got ", *dim));
  if (options.max_vocab && *options.max_vocab <= 0)
    throw Error(cat("max_vocab must be positive, got ", *options.max_vocab));

  const Eigen::Index d = static_cast<Eigen::Index>(*dim);
  Eigen::Index cap = options.max_vocab
                         ? *options.max_vocab
                         : static_cast<Eigen::Index>(*count);
  std::vector<std::string> vocab;
  std::vector<float> values;
  std::unordered_map<std::string, bool> seen;
  vocab.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(cap, 0)));
  std::size_t duplicates = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != static_cast<std::size_t>(d) + 1)
      throw Error(cat("line ", line_no, ": expected ", d + 1,
                      " fields, got ", fields.size()));
    std::string word(fields[0]);
    if (!seen.emplace(word, true).second) {
      ++duplicates;
      continue;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      auto v = parse_float(fields[static_cast<std::size_t>(j) + 1]);
      if (!v)
        throw Error(cat("line ", line_no, ": bad numeric field \"",
                        fields[static_cast<std::size_t>(j) + 1], "\""));
      values.push_back(*v);
    }
    vocab.push_back(std::move(word));
    if (static_cast<Eigen::Index>(vocab.size()) >= cap) break;
  }
  if (vocab.empty()) throw Error("no usable embedding rows");

  MatrixF matrix(static_cast<Eigen::Index>(vocab.size()), d);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      matrix(i, j) = values[static_cast<std::size_t>(i * d + j)];
  return EmbeddingSpace(options.lang, std::move(vocab), std::move(matrix),
                        NormState::raw, duplicates);
}

// unit: rows scaled to Euclidean norm 1. centered_unit: column mean removed
// first, then unit. Input must be raw; zero-norm rows are rejected by word.
inline EmbeddingSpace normalize(const EmbeddingSpace& space, NormState scheme) {
  if (scheme != NormState::unit && scheme != NormState::centered_unit)
    throw Error("normalization scheme must be unit or centered_unit");
  if (space.norm_state() != NormState::raw)
    throw Error(cat("double normalization: space already has norm_state=",
                    to_string(space.norm_state())));

  const Eigen::Index n = space.size();
  const Eigen::Index d = space.dim();
  Eigen::MatrixXd work = space.matrix().cast<double>();
  if (scheme == NormState::centered_unit) {
    Eigen::RowVectorXd mean = work.colwise().sum() / static_cast<double>(n);
    work.rowwise() -= mean;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double norm = std::sqrt(work.row(i).squaredNorm());
    if (!(norm > 1e-35))
      throw Error(cat("zero-norm row for word \"", space.vocab()[i],
                      "\" under scheme ", to_string(scheme)));
    work.row(i) /= norm;
  }
  MatrixF out = work.cast<float>();
  return EmbeddingSpace(space.lang(), space.vocab(), std::move(out), scheme,
                        space.duplicates_dropped());
}

// Inverse of load_embeddings for the retained rows; values are written in
// shortest round-trip decimal form.
inline void save_embeddings(const EmbeddingSpace& space, std::ostream& out) {
  out << space.size() << ' ' << space.dim() << '\n';
  for (Eigen::Index i = 0; i < space.size(); ++i) {
    out << space.vocab()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < space.dim(); ++j)
      out << ' ' << fmt_num(space.matrix()(i, j));
    out << '\n';
  }
}

}  // namespace bdikit
