#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsegap/combinatorics.hpp"
#include "sparsegap/errors.hpp"
#include "sparsegap/prng.hpp"
#include "sparsegap/textio.hpp"

// Exact 3-set cover instances and their encoding as a sparse linear system.
//
// Ground set {1..m} (m divisible by 3), collection of 3-element subsets.
// All C(m,3) triples over the ground set are ordered lexicographically; a
// triple's position in that order is its global index j in {1..p}. The
// system matrix M has 4p columns grouped as four length-p blocks
// (selection u, then auxiliary v, w, z) and m + 3p rows:
//   rows 1..m        coverage: row i sums u_j over triples containing i
//   row  m+j         u_j - v_j
//   row  m+p+j       u_j + w_j
//   row  m+2p+j      z_j
// The response y has 1 on the first m rows, then per triple j the pattern
// (0,1,0) when j is in the collection and (0,0,1) otherwise. A collection
// admits an exact cover iff some binary u with at most m/3 + p nonzeros
// satisfies ||Mu - y|| < 1/2; the decoder below inverts the encoding.

namespace sparsegap::x3c {

using Triple = std::array<int, 3>;  // 1-based, strictly ascending

struct X3CInstance {
  int m = 0;
  std::vector<Triple> triples;  // duplicate-free collection
};

// Lexicographic bijection between all triples over {1..m} and {1..p}.
struct TripleIndex {
  int m = 0;
  std::vector<Triple> all;  // all[j-1] is the triple with global index j

  int index_of(const Triple& t) const {
    auto it = std::lower_bound(all.begin(), all.end(), t);
    if (it == all.end() || *it != t)
      throw InvalidInstance("triple not in index");
    return static_cast<int>(it - all.begin()) + 1;
  }
};

struct CoverMatrix {
  int m = 0;
  int p = 0;
  Eigen::MatrixXd M;  // (m + 3p) x 4p, entries in {-1, 0, 1}
};

struct BinarySolution {
  Eigen::VectorXd u;  // length 4p, entries in {0, 1}
  int nnz = 0;
};

struct ExactCover {
  std::vector<int> selected;  // global triple indices, ascending
};

inline int nnz_count(const Eigen::VectorXd& v) {
  int c = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) ++c;
  return c;
}

inline void validate_triple(int m, const Triple& t) {
  if (!(1 <= t[0] && t[0] < t[1] && t[1] < t[2] && t[2] <= m))
    throw InvalidInstance("triple must be strictly ascending within 1..m");
}

inline X3CInstance make_instance(int m, std::vector<Triple> triples) {
  if (m < 3 || m % 3 != 0)
    throw InvalidGroundSet("ground set size must be a positive multiple of 3");
  for (const auto& t : triples) validate_triple(m, t);
  std::vector<Triple> sorted = triples;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidInstance("duplicate triple in collection");
  return X3CInstance{m, std::move(triples)};
}

inline TripleIndex enumerate_triples(int m) {
  if (m < 3) throw InvalidGroundSet("ground set needs at least 3 elements");
  TripleIndex idx;
  idx.m = m;
  idx.all.reserve(binomial(static_cast<std::uint64_t>(m), 3));
  for (int a = 1; a <= m - 2; ++a)
    for (int b = a + 1; b <= m - 1; ++b)
      for (int c = b + 1; c <= m; ++c) idx.all.push_back({a, b, c});
  return idx;
}

inline CoverMatrix build_cover_matrix(int m) {
  if (m < 3 || m % 3 != 0)
    throw InvalidGroundSet("ground set size must be a positive multiple of 3");
  TripleIndex idx = enumerate_triples(m);
  const int p = static_cast<int>(idx.all.size());
  CoverMatrix cm;
  cm.m = m;
  cm.p = p;
  cm.M = Eigen::MatrixXd::Zero(m + 3 * p, 4 * p);
  for (int j = 1; j <= p; ++j) {
    const Triple& t = idx.all[static_cast<std::size_t>(j - 1)];
    for (int v : t) cm.M(v - 1, j - 1) = 1.0;  // coverage rows
    cm.M(m + j - 1, j - 1) = 1.0;              // u_j - v_j
    cm.M(m + j - 1, p + j - 1) = -1.0;
    cm.M(m + p + j - 1, j - 1) = 1.0;          // u_j + w_j
    cm.M(m + p + j - 1, 2 * p + j - 1) = 1.0;
    cm.M(m + 2 * p + j - 1, 3 * p + j - 1) = 1.0;  // z_j
  }
  return cm;
}

namespace detail {

inline std::set<int> member_indices(const X3CInstance& inst,
                                    const TripleIndex& idx) {
  std::set<int> members;
  for (const auto& t : inst.triples) members.insert(idx.index_of(t));
  return members;
}

// Throws NotACover unless the selected triples partition {1..m}.
inline void check_cover(const X3CInstance& inst, const TripleIndex& idx,
                        const std::set<int>& members,
                        const std::vector<int>& selected) {
  std::vector<int> hit(static_cast<std::size_t>(inst.m) + 1, 0);
  for (int j : selected) {
    if (j < 1 || j > static_cast<int>(idx.all.size()))
      throw NotACover("selected index out of range");
    if (!members.count(j))
      throw NotACover("selected triple is not in the collection");
    for (int v : idx.all[static_cast<std::size_t>(j - 1)]) ++hit[static_cast<std::size_t>(v)];
  }
  for (int v = 1; v <= inst.m; ++v) {
    if (hit[static_cast<std::size_t>(v)] == 0)
      throw NotACover("element not covered");
    if (hit[static_cast<std::size_t>(v)] > 1)
      throw NotACover("selected triples overlap");
  }
}

}  // namespace detail

inline Eigen::VectorXd build_response(const X3CInstance& inst) {
  TripleIndex idx = enumerate_triples(inst.m);
  const int p = static_cast<int>(idx.all.size());
  std::set<int> members = detail::member_indices(inst, idx);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(inst.m + 3 * p);
  y.head(inst.m).setOnes();
  for (int j = 1; j <= p; ++j) {
    if (members.count(j))
      y[inst.m + p + j - 1] = 1.0;
    else
      y[inst.m + 2 * p + j - 1] = 1.0;
  }
  return y;
}

// Binary witness for an exact cover: selected triples get (u,v) = (1,1),
// unselected collection members get w = 1, non-members get z = 1. The
// result has exactly m/3 + p nonzeros and satisfies Mu = y exactly.
inline BinarySolution encode_cover(const X3CInstance& inst,
                                   const ExactCover& cover) {
  TripleIndex idx = enumerate_triples(inst.m);
  const int p = static_cast<int>(idx.all.size());
  std::set<int> members = detail::member_indices(inst, idx);
  detail::check_cover(inst, idx, members, cover.selected);
  std::set<int> chosen(cover.selected.begin(), cover.selected.end());
  BinarySolution sol;
  sol.u = Eigen::VectorXd::Zero(4 * p);
  for (int j = 1; j <= p; ++j) {
    if (chosen.count(j)) {
      sol.u[j - 1] = 1.0;
      sol.u[p + j - 1] = 1.0;
    } else if (members.count(j)) {
      sol.u[2 * p + j - 1] = 1.0;
    } else {
      sol.u[3 * p + j - 1] = 1.0;
    }
  }
  sol.nnz = nnz_count(sol.u);
  return sol;
}

// Inverts encode_cover from any real vector u close enough to a valid
// witness: requires nnz(u) <= m/3 + p and ||Mu - y|| < 1/2, then reads the
// cover off the coordinates with u_j > 1/2 and re-validates it.
inline ExactCover decode_cover(const X3CInstance& inst,
                               const Eigen::VectorXd& u) {
  CoverMatrix cm = build_cover_matrix(inst.m);
  const int p = cm.p;
  if (u.size() != 4 * p)
    throw ShapeError("solution vector has wrong length");
  if (nnz_count(u) > inst.m / 3 + p)
    throw SparsityViolation("solution vector exceeds the sparsity budget");
  Eigen::VectorXd y = build_response(inst);
  double res2 = (cm.M * u - y).squaredNorm();
  if (!(res2 < 0.25))
    throw NotASolution("residual does not certify a solution");
  ExactCover cover;
  for (int j = 1; j <= p; ++j)
    if (u[j - 1] > 0.5) cover.selected.push_back(j);
  TripleIndex idx = enumerate_triples(inst.m);
  std::set<int> members = detail::member_indices(inst, idx);
  try {
    detail::check_cover(inst, idx, members, cover.selected);
  } catch (const NotACover& e) {
    throw DecodeInconsistency(std::string("decoded selection is not a cover: ") +
                              e.what());
  }
  return cover;
}

// First exact cover in lexicographic subset order, if any. budget bounds the
// number of candidate subsets.
inline std::optional<ExactCover> solve_x3c_bruteforce(
    const X3CInstance& inst, std::uint64_t budget = 10'000'000) {
  const int need = inst.m / 3;
  const int count = static_cast<int>(inst.triples.size());
  if (binomial(static_cast<std::uint64_t>(count),
               static_cast<std::uint64_t>(need)) > budget)
    throw BudgetExceeded("subset enumeration exceeds the budget");
  TripleIndex idx = enumerate_triples(inst.m);
  // Positions sorted by triple value so subset order is stable regardless of
  // input collection order.
  std::vector<Triple> sorted = inst.triples;
  std::sort(sorted.begin(), sorted.end());
  std::optional<ExactCover> found;
  for_each_combination(count, need, [&](const std::vector<int>& pick) {
    std::vector<int> hit(static_cast<std::size_t>(inst.m) + 1, 0);
    for (int pos : pick)
      for (int v : sorted[static_cast<std::size_t>(pos)])
        if (++hit[static_cast<std::size_t>(v)] > 1) return true;  // overlap; keep searching
    for (int v = 1; v <= inst.m; ++v)
      if (!hit[static_cast<std::size_t>(v)]) return true;
    ExactCover cover;
    for (int pos : pick)
      cover.selected.push_back(idx.index_of(sorted[static_cast<std::size_t>(pos)]));
    std::sort(cover.selected.begin(), cover.selected.end());
    found = std::move(cover);
    return false;
  });
  return found;
}

// All exact covers, in lexicographic subset order. Used for uniform cover
// sampling in the experiments and as a test oracle.
inline std::vector<ExactCover> enumerate_exact_covers(
    const X3CInstance& inst, std::uint64_t budget = 10'000'000) {
  const int need = inst.m / 3;
  const int count = static_cast<int>(inst.triples.size());
  if (binomial(static_cast<std::uint64_t>(count),
               static_cast<std::uint64_t>(need)) > budget)
    throw BudgetExceeded("subset enumeration exceeds the budget");
  TripleIndex idx = enumerate_triples(inst.m);
  std::vector<Triple> sorted = inst.triples;
  std::sort(sorted.begin(), sorted.end());
  std::vector<ExactCover> covers;
  for_each_combination(count, need, [&](const std::vector<int>& pick) {
    std::vector<int> hit(static_cast<std::size_t>(inst.m) + 1, 0);
    for (int pos : pick)
      for (int v : sorted[static_cast<std::size_t>(pos)])
        if (++hit[static_cast<std::size_t>(v)] > 1) return true;
    for (int v = 1; v <= inst.m; ++v)
      if (!hit[static_cast<std::size_t>(v)]) return true;
    ExactCover cover;
    for (int pos : pick)
      cover.selected.push_back(idx.index_of(sorted[static_cast<std::size_t>(pos)]));
    std::sort(cover.selected.begin(), cover.selected.end());
    covers.push_back(std::move(cover));
    return true;
  });
  return covers;
}

// Sparse regression oracle: given (M, y, k) returns a coefficient vector
// with at most k nonzeros. Kept abstract so this module stays independent
// of any particular estimator.
using RegressionOracle = std::function<Eigen::VectorXd(
    const Eigen::MatrixXd&, const Eigen::VectorXd&, int)>;

// Solves the instance by handing (M, y, m/3 + p) to the oracle and decoding
// its output. Decode failures mean "no cover found"; oracle errors propagate.
inline std::optional<ExactCover> solve_x3c_via_regression(
    const X3CInstance& inst, const RegressionOracle& oracle) {
  CoverMatrix cm = build_cover_matrix(inst.m);
  Eigen::VectorXd y = build_response(inst);
  Eigen::VectorXd u = oracle(cm.M, y, inst.m / 3 + cm.p);
  try {
    return decode_cover(inst, u);
  } catch (const SparsityViolation&) {
    return std::nullopt;
  } catch (const NotASolution&) {
    return std::nullopt;
  } catch (const DecodeInconsistency&) {
    return std::nullopt;
  }
}

// Random instance that contains at least one exact cover (a seeded shuffle
// partition) plus `extra` random decoy triples.
inline X3CInstance gen_planted_instance(int m, int extra, std::uint64_t seed) {
  if (m < 3 || m % 3 != 0)
    throw InvalidGroundSet("ground set size must be a positive multiple of 3");
  Prng rng(seed);
  std::vector<int> perm(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i + 1;
  for (int i = m - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::set<Triple> chosen;
  for (int g = 0; g < m / 3; ++g) {
    Triple t{perm[static_cast<std::size_t>(3 * g)],
             perm[static_cast<std::size_t>(3 * g + 1)],
             perm[static_cast<std::size_t>(3 * g + 2)]};
    std::sort(t.begin(), t.end());
    chosen.insert(t);
  }
  TripleIndex idx = enumerate_triples(m);
  const int p = static_cast<int>(idx.all.size());
  if (extra < 0 || extra > p - m / 3)
    throw PreconditionError("decoy count out of range");
  while (static_cast<int>(chosen.size()) < m / 3 + extra) {
    const Triple& t = idx.all[rng.next_below(static_cast<std::uint64_t>(p))];
    chosen.insert(t);
  }
  return X3CInstance{m, std::vector<Triple>(chosen.begin(), chosen.end())};
}

// Random duplicate-free collection with no planted structure.
inline X3CInstance gen_random_instance(int m, int count, std::uint64_t seed) {
  if (m < 3 || m % 3 != 0)
    throw InvalidGroundSet("ground set size must be a positive multiple of 3");
  TripleIndex idx = enumerate_triples(m);
  const int p = static_cast<int>(idx.all.size());
  if (count < 0 || count > p)
    throw PreconditionError("collection size out of range");
  Prng rng(seed);
  std::vector<int> pick = rng.sample_subset(p, count);
  X3CInstance inst;
  inst.m = m;
  for (int pos : pick) inst.triples.push_back(idx.all[static_cast<std::size_t>(pos)]);
  return inst;
}

inline nlohmann::ordered_json instance_to_json(const X3CInstance& inst) {
  nlohmann::ordered_json j;
  j["m"] = inst.m;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : inst.triples) arr.push_back({t[0], t[1], t[2]});
  j["triples"] = arr;
  return j;
}

inline X3CInstance instance_from_json(const nlohmann::json& j) {
  if (!j.contains("m") || !j.contains("triples"))
    throw InvalidInstance("instance JSON needs fields 'm' and 'triples'");
  std::vector<Triple> triples;
  for (const auto& t : j.at("triples")) {
    if (!t.is_array() || t.size() != 3)
      throw InvalidInstance("each triple must be a 3-element array");
    triples.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
  }
  return make_instance(j.at("m").get<int>(), std::move(triples));
}

inline void save_instance(const std::filesystem::path& path,
                          const X3CInstance& inst, bool force = false) {
  ensure_writable(path, force);
  write_text_file(path, instance_to_json(inst).dump(2) + "\n");
}

inline X3CInstance load_instance(const std::filesystem::path& path) {
  return instance_from_json(nlohmann::json::parse(read_text_file(path)));
}

}  // namespace sparsegap::x3c
