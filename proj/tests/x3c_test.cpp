#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <filesystem>
#include <set>
#include <vector>

#include "sparsegap/x3c.hpp"

using namespace sparsegap;
using namespace sparsegap::x3c;

namespace {

X3CInstance tiny() { return make_instance(3, {{{1, 2, 3}}}); }

}  // namespace

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(make_instance(4, {}), InvalidGroundSet);
  CHECK_THROWS_AS(make_instance(0, {}), InvalidGroundSet);
  CHECK_THROWS_AS(make_instance(6, {{{1, 2, 7}}}), InvalidInstance);
  CHECK_THROWS_AS(make_instance(6, {{{2, 1, 3}}}), InvalidInstance);
  CHECK_THROWS_AS(make_instance(6, {{{1, 1, 3}}}), InvalidInstance);
  CHECK_THROWS_AS(make_instance(6, {{{1, 2, 3}, {1, 2, 3}}}), InvalidInstance);
  CHECK_NOTHROW(make_instance(6, {{{1, 2, 3}, {4, 5, 6}, {1, 2, 4}}}));
}

TEST_CASE("triple indexing is the lexicographic bijection") {
  TripleIndex idx = enumerate_triples(4);
  REQUIRE(idx.all.size() == 4);
  CHECK(idx.all[0] == Triple{1, 2, 3});
  CHECK(idx.all[1] == Triple{1, 2, 4});
  CHECK(idx.all[2] == Triple{1, 3, 4});
  CHECK(idx.all[3] == Triple{2, 3, 4});
  CHECK(idx.index_of({1, 2, 3}) == 1);
  CHECK(idx.index_of({2, 3, 4}) == 4);

  TripleIndex idx6 = enumerate_triples(6);
  REQUIRE(idx6.all.size() == 20);
  CHECK(idx6.index_of({1, 2, 3}) == 1);
  CHECK(idx6.index_of({4, 5, 6}) == 20);
  CHECK_THROWS_AS(idx6.index_of({1, 2, 7}), InvalidInstance);
}

TEST_CASE("smallest system matrix matches hand derivation") {
  CoverMatrix cm = build_cover_matrix(3);
  REQUIRE(cm.p == 1);
  REQUIRE(cm.M.rows() == 6);
  REQUIRE(cm.M.cols() == 4);
  Eigen::MatrixXd want(6, 4);
  want << 1, 0, 0, 0,   // coverage of element 1
          1, 0, 0, 0,   // coverage of element 2
          1, 0, 0, 0,   // coverage of element 3
          1, -1, 0, 0,  // u - v
          1, 0, 1, 0,   // u + w
          0, 0, 0, 1;   // z
  CHECK(cm.M == want);
}

TEST_CASE("system matrix structure at larger sizes") {
  for (int m : {3, 6, 9}) {
    CoverMatrix cm = build_cover_matrix(m);
    const int p = static_cast<int>(binomial(static_cast<std::uint64_t>(m), 3));
    REQUIRE(cm.p == p);
    REQUIRE(cm.M.rows() == m + 3 * p);
    REQUIRE(cm.M.cols() == 4 * p);
    // Exactly 8 nonzeros per triple, all in {-1, 0, 1}.
    int nnz = 0, neg = 0;
    for (Eigen::Index i = 0; i < cm.M.rows(); ++i)
      for (Eigen::Index j = 0; j < cm.M.cols(); ++j) {
        double v = cm.M(i, j);
        REQUIRE((v == 0.0 || v == 1.0 || v == -1.0));
        if (v != 0.0) ++nnz;
        if (v == -1.0) ++neg;
      }
    CHECK(nnz == 8 * p);
    CHECK(neg == p);
    // Each coverage row of the selection block has 1s exactly at the triples
    // containing that element: C(m-1, 2) of them.
    const int per_elem = static_cast<int>(
        binomial(static_cast<std::uint64_t>(m - 1), 2));
    for (int i = 0; i < m; ++i) {
      CHECK(cm.M.row(i).head(p).sum() == per_elem);
      CHECK(cm.M.row(i).tail(3 * p).isZero());
    }
  }
}

TEST_CASE("response encodes membership in the fixed block pattern") {
  Eigen::VectorXd y = build_response(tiny());
  Eigen::VectorXd want(6);
  want << 1, 1, 1, 0, 1, 0;
  CHECK(y == want);

  X3CInstance empty = make_instance(3, {});
  Eigen::VectorXd y0 = build_response(empty);
  Eigen::VectorXd want0(6);
  want0 << 1, 1, 1, 0, 0, 1;
  CHECK(y0 == want0);

  // m = 6: members {1,2,3} (index 1) and {4,5,6} (index 20).
  X3CInstance inst = make_instance(6, {{{1, 2, 3}, {4, 5, 6}}});
  Eigen::VectorXd y6 = build_response(inst);
  REQUIRE(y6.size() == 6 + 60);
  CHECK(y6.head(6).sum() == 6.0);
  for (int j = 1; j <= 20; ++j) {
    bool member = (j == 1 || j == 20);
    CHECK(y6[6 + j - 1] == 0.0);
    CHECK(y6[6 + 20 + j - 1] == (member ? 1.0 : 0.0));
    CHECK(y6[6 + 40 + j - 1] == (member ? 0.0 : 1.0));
  }
}

TEST_CASE("encoding the unique tiny cover") {
  BinarySolution sol = encode_cover(tiny(), ExactCover{{1}});
  Eigen::VectorXd want(4);
  want << 1, 1, 0, 0;
  CHECK(sol.u == want);
  CHECK(sol.nnz == 2);
}

TEST_CASE("encoded covers solve the system exactly at the sparsity budget") {
  X3CInstance inst = make_instance(
      6, {{{1, 2, 3}, {4, 5, 6}, {1, 2, 4}, {3, 5, 6}, {2, 4, 6}}});
  CoverMatrix cm = build_cover_matrix(6);
  Eigen::VectorXd y = build_response(inst);
  for (const ExactCover& cover : enumerate_exact_covers(inst)) {
    BinarySolution sol = encode_cover(inst, cover);
    CHECK(sol.nnz == 6 / 3 + cm.p);
    CHECK((cm.M * sol.u - y).squaredNorm() == 0.0);
  }
}

TEST_CASE("encode rejects non-covers") {
  X3CInstance inst = make_instance(6, {{{1, 2, 3}, {4, 5, 6}, {1, 2, 4}}});
  TripleIndex idx = enumerate_triples(6);
  int j123 = idx.index_of({1, 2, 3});
  int j456 = idx.index_of({4, 5, 6});
  int j124 = idx.index_of({1, 2, 4});
  CHECK_NOTHROW(encode_cover(inst, ExactCover{{j123, j456}}));
  // Overlap.
  CHECK_THROWS_AS(encode_cover(inst, ExactCover{{j123, j124}}), NotACover);
  // Incomplete.
  CHECK_THROWS_AS(encode_cover(inst, ExactCover{{j123}}), NotACover);
  // Not in the collection.
  int j135 = idx.index_of({1, 3, 5});
  CHECK_THROWS_AS(encode_cover(inst, ExactCover{{j135, j456}}), NotACover);
  // Out of range.
  CHECK_THROWS_AS(encode_cover(inst, ExactCover{{0, j456}}), NotACover);
  CHECK_THROWS_AS(encode_cover(inst, ExactCover{{21, j456}}), NotACover);
}

TEST_CASE("decoder is exhaustively sound on the smallest instance") {
  // All 11 binary vectors within the sparsity budget (nnz <= 2, length 4):
  // only the true witness (1,1,0,0) decodes.
  X3CInstance inst = tiny();
  int decoded = 0;
  for (int bits = 0; bits < 16; ++bits) {
    Eigen::VectorXd u(4);
    for (int i = 0; i < 4; ++i) u[i] = (bits >> i) & 1;
    if (nnz_count(u) > 2) {
      CHECK_THROWS_AS(decode_cover(inst, u), SparsityViolation);
      continue;
    }
    if (bits == 0b0011) {  // u_1 = v_1 = 1
      ExactCover c = decode_cover(inst, u);
      CHECK(c.selected == std::vector<int>{1});
      ++decoded;
    } else {
      CHECK_THROWS_AS(decode_cover(inst, u), NotASolution);
    }
  }
  CHECK(decoded == 1);
}

TEST_CASE("decoder accepts near-witnesses within the residual margin") {
  X3CInstance inst = tiny();
  Eigen::VectorXd u(4);
  // Perturbed witness: residual stays below the certificate threshold.
  u << 0.9, 1.05, 0.0, 0.0;
  ExactCover c = decode_cover(inst, u);
  CHECK(c.selected == std::vector<int>{1});
  // Same support but too far from solving the system.
  u << 0.5, 0.5, 0.0, 0.0;
  CHECK_THROWS_AS(decode_cover(inst, u), NotASolution);
}

TEST_CASE("decoder rejects wrong shapes") {
  CHECK_THROWS_AS(decode_cover(tiny(), Eigen::VectorXd::Zero(5)), ShapeError);
}

TEST_CASE("brute force agrees with full enumeration") {
  X3CInstance with = make_instance(
      6, {{{1, 2, 3}, {4, 5, 6}, {1, 2, 4}, {3, 5, 6}, {1, 3, 5}}});
  auto covers = enumerate_exact_covers(with);
  REQUIRE(covers.size() == 2);  // {123,456} and {124,356}
  auto first = solve_x3c_bruteforce(with);
  REQUIRE(first.has_value());
  CHECK(first->selected == covers.front().selected);

  // Every reported cover is genuine.
  for (const auto& c : covers) CHECK_NOTHROW(encode_cover(with, c));

  X3CInstance without =
      make_instance(6, {{{1, 2, 3}, {1, 4, 5}, {2, 4, 6}, {3, 4, 5}}});
  CHECK(enumerate_exact_covers(without).empty());
  CHECK(!solve_x3c_bruteforce(without).has_value());
}

TEST_CASE("cover indices are global triple indices") {
  X3CInstance inst = make_instance(6, {{{1, 2, 3}, {4, 5, 6}}});
  auto covers = enumerate_exact_covers(inst);
  REQUIRE(covers.size() == 1);
  CHECK(covers.front().selected == std::vector<int>{1, 20});
}

TEST_CASE("enumeration budget is enforced") {
  X3CInstance inst = gen_planted_instance(12, 100, 5);
  CHECK_THROWS_AS(enumerate_exact_covers(inst, 1000), BudgetExceeded);
  CHECK_THROWS_AS(solve_x3c_bruteforce(inst, 1000), BudgetExceeded);
}

TEST_CASE("round trip: encode then decode across planted instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    X3CInstance inst = gen_planted_instance(6, 6, seed);
    auto covers = enumerate_exact_covers(inst);
    REQUIRE(!covers.empty());
    for (const auto& cover : covers) {
      BinarySolution sol = encode_cover(inst, cover);
      ExactCover back = decode_cover(inst, sol.u);
      CHECK(back.selected == cover.selected);
    }
  }
}

TEST_CASE("planted instances always contain a cover; decoys respect bounds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    X3CInstance inst = gen_planted_instance(6, 4, seed);
    CHECK(inst.triples.size() >= 6);  // 2 planted + 4 decoys, minus collisions
    CHECK(!enumerate_exact_covers(inst).empty());
  }
  CHECK_THROWS_AS(gen_planted_instance(3, 1, 0), PreconditionError);
  CHECK_THROWS_AS(gen_planted_instance(6, -1, 0), PreconditionError);
}

TEST_CASE("random instances are duplicate-free and reproducible") {
  X3CInstance a = gen_random_instance(6, 10, 99);
  X3CInstance b = gen_random_instance(6, 10, 99);
  CHECK(a.triples == b.triples);
  REQUIRE(a.triples.size() == 10);
  std::set<Triple> uniq(a.triples.begin(), a.triples.end());
  CHECK(uniq.size() == 10);
  X3CInstance c = gen_random_instance(6, 10, 100);
  CHECK(a.triples != c.triples);
  CHECK_THROWS_AS(gen_random_instance(6, 21, 0), PreconditionError);
}

TEST_CASE("regression-oracle solver decodes a perfect oracle and rejects noise") {
  X3CInstance inst = make_instance(
      6, {{{1, 2, 3}, {4, 5, 6}, {1, 2, 4}, {3, 5, 6}, {2, 4, 6}}});
  Eigen::VectorXd witness =
      encode_cover(inst, enumerate_exact_covers(inst).front()).u;
  auto perfect = [&](const Eigen::MatrixXd&, const Eigen::VectorXd&,
                     int) { return witness; };
  auto got = solve_x3c_via_regression(inst, perfect);
  REQUIRE(got.has_value());
  CHECK(got->selected == enumerate_exact_covers(inst).front().selected);

  auto useless = [&](const Eigen::MatrixXd& M, const Eigen::VectorXd&, int) {
    return Eigen::VectorXd::Zero(M.cols()).eval();
  };
  CHECK(!solve_x3c_via_regression(inst, useless).has_value());
}

TEST_CASE("instance json round trip") {
  namespace fs = std::filesystem;
  X3CInstance inst = make_instance(6, {{{1, 2, 3}, {4, 5, 6}, {2, 3, 5}}});
  fs::path p = fs::temp_directory_path() / "sparsegap_x3c_test.json";
  fs::remove(p);
  save_instance(p, inst);
  CHECK_THROWS_AS(save_instance(p, inst), OutputExists);
  X3CInstance back = load_instance(p);
  CHECK(back.m == inst.m);
  CHECK(back.triples == inst.triples);
  fs::remove(p);
  CHECK_THROWS_AS(
      instance_from_json(nlohmann::json::parse(R"({"m": 6})")),
      InvalidInstance);
  CHECK_THROWS_AS(
      instance_from_json(nlohmann::json::parse(R"({"m": 6, "triples": [[1, 2]]})")),
      InvalidInstance);
}
