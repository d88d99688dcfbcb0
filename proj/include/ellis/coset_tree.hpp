#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellis/zset.hpp"

namespace ellis::tree {

class OnInfiniteBranch : public std::runtime_error {
 public:
  explicit OnInfiniteBranch(long long point)
      : std::runtime_error("point " + std::to_string(point) +
                           " descends a flagged infinite branch"),
        point_(point) {}
  long long point() const { return point_; }

 private:
  long long point_;
};

class DepthBudgetExceeded : public std::runtime_error {
 public:
  explicit DepthBudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct Violation {
  std::string path;  // child indices from the root, e.g. "/1/0"
  std::string rule;
};

// One node of a valued tree of cosets over Z. A node denotes the coset
// rep + modulus*Z. Exactly one of the following holds: it carries a value
// (leaf), it is a flagged cut point of a designated infinite branch
// (branch), or it has children partitioning its coset.
struct Node {
  long long modulus = 1;
  long long rep = 0;
  std::optional<int> value;
  bool branch = false;
  std::vector<Node> children;

  bool is_leaf() const { return value.has_value(); }
  bool contains(long long g) const { return zset::mod_floor(g, modulus) == rep; }
};

class CosetTree {
 public:
  explicit CosetTree(Node root, std::map<long long, int> exceptions = {})
      : root_(std::move(root)), exceptions_(std::move(exceptions)) {}

  const Node& root() const { return root_; }
  const std::map<long long, int>& exceptions() const { return exceptions_; }

  std::vector<Violation> validate() const;
  bool valid() const { return validate().empty(); }

  int evaluate(long long g) const;  // throws OnInfiniteBranch
  std::optional<int> try_evaluate(long long g) const;

  int depth() const;
  bool is_linear() const;
  // Every homogeneous node is a leaf. A node with unresolved (branch)
  // descendants is never treated as homogeneous.
  bool is_irreducible() const;

  // Moduli per depth, when linear.
  std::vector<long long> depth_moduli() const;

 private:
  Node root_;
  std::map<long long, int> exceptions_;
};

// Least-common-multiple chain linearization: the output tree's modulus
// depends only on depth and the founded function agrees pointwise with the
// input on every resolved integer.
CosetTree linearize(const CosetTree& t, long long modulus_budget = 1ll << 40);

// Collapse homogeneous internal nodes bottom-up until none remain.
CosetTree reduce(const CosetTree& t);

// Conversion to the symbolic residue representation; requires validity.
// Flagged branches become undecided regions; exceptions carry over.
zset::PfSet to_pfset(const CosetTree& t, std::map<long long, int> extra_exceptions = {});

struct ChainStep {
  long long coarse_modulus = 1;
  long long coarse_rep = 0;    // coset on which the function is not constant
  long long fine_modulus = 1;
  long long witness_rep = 0;   // leaf coset on which the function is constant
  int witness_value = 0;
  long long point_a = 0;       // two window points in the coarse coset
  long long point_b = 0;       // with different values
};

struct ChainEvidence {
  std::vector<ChainStep> steps;
  int requested = 0;
  bool exhausted = false;
  long long window = 0;
};

class ChainExhausted : public std::runtime_error {
 public:
  ChainExhausted(ChainEvidence achieved)
      : std::runtime_error("chain search exhausted after " +
                           std::to_string(achieved.steps.size()) + " of " +
                           std::to_string(achieved.requested) + " steps"),
        evidence_(std::move(achieved)) {}
  const ChainEvidence& evidence() const { return evidence_; }

 private:
  ChainEvidence evidence_;
};

// Builds a strict chain of subgroups along the designated infinite branch,
// one verified step per requested depth. Requires a linear irreducible tree.
// Throws ChainExhausted (carrying the partial evidence) when fewer steps than
// requested can be certified inside the window.
ChainEvidence nonperiodicity_chain(const CosetTree& t, int depth, long long window = 4096);

// Re-checks every step of an evidence object by direct evaluation.
bool verify_chain(const CosetTree& t, const ChainEvidence& ev);

// Reference constructions.
//
// Dyadic ladder: along branch digits a_0, a_1, ... the node at depth n is the
// coset (alpha mod 2^n) + 2^n Z; its sibling is a leaf valued n mod 2. With
// all-zero digits and an exception at 0 this founds the
// parity-of-2-adic-valuation set.
CosetTree dyadic_ladder_tree(const std::vector<int>& branch_digits, int depth,
                             std::map<long long, int> exceptions = {});

// The non-linear irreducible construction over base 3: the branch follows
// alpha = 1 + 3 + 9 + ... (= -1/2 in Z_3); each off-branch coset c + 3^n Z
// splits into two leaves mod 2*3^n valued by parity. Founds k mod 2.
CosetTree ternary_parity_tree(int depth);

}  // namespace ellis::tree
