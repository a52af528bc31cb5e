#include <cmath>
#include <sstream>

#include "bdikit/embedding.hpp"
#include "catch2/catch_amalgamated.hpp"
#include "test_util.hpp"

using namespace bdikit;

static EmbeddingSpace from_text(const std::string& text,
                                const LoadOptions& options = {}) {
  std::istringstream in(text);
  return load_embeddings(in, options);
}

TEST_CASE("load_embeddings parses a minimal well-formed file") {
  EmbeddingSpace space = from_text("2 3\na 1 0 0\nb 0 1 0\n");
  CHECK(space.size() == 2);
  CHECK(space.dim() == 3);
  CHECK(space.vocab() == std::vector<std::string>{"a", "b"});
  CHECK(space.norm_state() == NormState::raw);
  CHECK(space.matrix()(1, 1) == 1.0f);
  CHECK(space.duplicates_dropped() == 0);
}

TEST_CASE("load_embeddings reports arity violations with the line number") {
  try {
    from_text("3 2\na 1 0\nb 0 1\nc 1\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("expected 3 fields") != std::string::npos);
  }
}

TEST_CASE("load_embeddings keeps the first occurrence of a duplicate word") {
  EmbeddingSpace space = from_text("3 2\na 1 0\na 0 1\nb 0.5 0.5\n");
  CHECK(space.size() == 2);
  CHECK(space.duplicates_dropped() == 1);
  CHECK(space.matrix()(0, 0) == 1.0f);  // first occurrence wins
}

TEST_CASE("load_embeddings rejects malformed input") {
  CHECK_THROWS_AS(from_text(""), Error);
  CHECK_THROWS_AS(from_text("5\n"), Error);
  CHECK_THROWS_AS(from_text("x y\na 1 0\n"), Error);
  CHECK_THROWS_AS(from_text("1 0\n"), Error);
  CHECK_THROWS_AS(from_text("1 -3\n"), Error);
  CHECK_THROWS_AS(from_text("2 2\n"), Error);  // zero usable rows
  CHECK_THROWS_AS(from_text("1 2\na 1 zz\n"), Error);
}

TEST_CASE("load_embeddings honors max_vocab in file order") {
  LoadOptions options;
  options.max_vocab = 2;
  EmbeddingSpace space = from_text("3 2\na 1 0\nb 0 1\nc 1 1\n", options);
  CHECK(space.size() == 2);
  CHECK(space.vocab() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("normalize unit scales rows to length one") {
  EmbeddingSpace space = from_text("1 2\nw 3 4\n");
  EmbeddingSpace unit = normalize(space, NormState::unit);
  CHECK(unit.matrix()(0, 0) == Catch::Approx(0.6).margin(1e-7));
  CHECK(unit.matrix()(0, 1) == Catch::Approx(0.8).margin(1e-7));
  CHECK(unit.norm_state() == NormState::unit);
}

TEST_CASE("centered_unit equals unit when the column mean is zero") {
  EmbeddingSpace space = from_text("2 2\np 1 0\nq -1 0\n");
  EmbeddingSpace centered = normalize(space, NormState::centered_unit);
  CHECK(centered.matrix()(0, 0) == 1.0f);
  CHECK(centered.matrix()(1, 0) == -1.0f);
  CHECK(centered.matrix()(0, 1) == 0.0f);
}

TEST_CASE("centered_unit matches the hand-computed oracle") {
  // rows (2,0),(0,2): mean (1,1), centered (1,-1),(-1,1), normalized
  // (+-1/sqrt(2), -+1/sqrt(2)).
  EmbeddingSpace space = from_text("2 2\np 2 0\nq 0 2\n");
  EmbeddingSpace centered = normalize(space, NormState::centered_unit);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(centered.matrix()(0, 0) == Catch::Approx(inv_sqrt2).margin(1e-7));
  CHECK(centered.matrix()(0, 1) == Catch::Approx(-inv_sqrt2).margin(1e-7));
  CHECK(centered.matrix()(1, 0) == Catch::Approx(-inv_sqrt2).margin(1e-7));
  CHECK(centered.matrix()(1, 1) == Catch::Approx(inv_sqrt2).margin(1e-7));
}

TEST_CASE("normalize rejects zero rows and double normalization") {
  EmbeddingSpace with_zero = from_text("2 2\nok 1 0\nzero 0 0\n");
  try {
    normalize(with_zero, NormState::unit);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("zero") != std::string::npos);
  }
  EmbeddingSpace unit = normalize(from_text("1 2\nw 3 4\n"), NormState::unit);
  CHECK_THROWS_AS(normalize(unit, NormState::unit), Error);
  CHECK_THROWS_AS(normalize(unit, NormState::centered_unit), Error);
}

TEST_CASE("lookup is exact and case-sensitive; OOV is a value") {
  EmbeddingSpace space = from_text("2 2\nParis 1 0\nparis 0 1\n");
  REQUIRE(space.lookup("Paris").has_value());
  REQUIRE(space.lookup("paris").has_value());
  CHECK(*space.lookup("Paris") == 0);
  CHECK(*space.lookup("paris") == 1);
  CHECK_FALSE(space.lookup("PARIS").has_value());
  CHECK_FALSE(space.lookup("absent").has_value());
}

TEST_CASE("lookup of every vocab word returns its own row") {
  std::mt19937 rng(7);
  EmbeddingSpace space = testutil::random_unit_space(rng, "xx", "w", 50, 5);
  for (Eigen::Index i = 0; i < space.size(); ++i)
    CHECK(*space.lookup(space.vocab()[static_cast<std::size_t>(i)]) == i);
}

TEST_CASE("save_embeddings round-trips retained lines bit-identically") {
  const std::string text =
      "3 3\nalpha 1 0 -0.25\nbeta 0.5 0.123 1\ngamma -1 0.75 2.5\n";
  EmbeddingSpace space = from_text(text);
  std::ostringstream out;
  save_embeddings(space, out);
  CHECK(out.str() == text);

  // Duplicate and over-cap rows are dropped, so only retained rows return.
  std::istringstream in("3 2\na 1 0\na 0 1\nb 0.5 -0.5\n");
  EmbeddingSpace deduped = load_embeddings(in);
  std::ostringstream out2;
  save_embeddings(deduped, out2);
  CHECK(out2.str() == "2 2\na 1 0\nb 0.5 -0.5\n");
}

TEST_CASE("unit normalization is idempotent in effect") {
  std::mt19937 rng(11);
  Eigen::MatrixXd raw(40, 6);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(i, j) = gauss(rng);
  bdikit::MatrixF m = raw.cast<float>();
  EmbeddingSpace space = testutil::make_space(
      "xx", testutil::number_words("w", 40), m, NormState::raw);
  EmbeddingSpace once = normalize(space, NormState::unit);
  EmbeddingSpace again =
      normalize(testutil::make_space("xx", once.vocab(), once.matrix(),
                                     NormState::raw),
                NormState::unit);
  double max_diff = 0;
  for (Eigen::Index i = 0; i < once.size(); ++i)
    for (Eigen::Index j = 0; j < once.dim(); ++j)
      max_diff = std::max(
          max_diff, std::abs(static_cast<double>(once.matrix()(i, j)) -
                             static_cast<double>(again.matrix()(i, j))));
  CHECK(max_diff <= 1e-12);
}

TEST_CASE("normalized rows have unit norm within tolerance") {
  std::mt19937 rng(13);
  Eigen::MatrixXd raw(25, 8);
  std::normal_distribution<double> gauss(0.0, 3.0);
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(i, j) = gauss(rng);
  EmbeddingSpace space = testutil::make_space(
      "xx", testutil::number_words("w", 25), raw.cast<float>(),
      NormState::raw);
  for (NormState scheme : {NormState::unit, NormState::centered_unit}) {
    EmbeddingSpace normed = normalize(space, scheme);
    for (Eigen::Index i = 0; i < normed.size(); ++i) {
      double norm = normed.matrix().row(i).cast<double>().norm();
      CHECK(std::abs(norm - 1.0) < 1e-6);
    }
  }
}
