#include "ellis/coset_tree.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <numeric>

namespace ellis::tree {

using zset::mod_floor;

namespace {

constexpr std::size_t kNodeCap = 1u << 22;

void validate_node(const Node& n, const std::string& path, std::vector<Violation>& out) {
  if (n.rep < 0 || n.rep >= n.modulus)
    out.push_back({path, "representative not reduced modulo the subgroup"});
  int roles = (n.is_leaf() ? 1 : 0) + (n.branch ? 1 : 0) + (!n.children.empty() ? 1 : 0);
  if (roles != 1) {
    out.push_back({path, "node must be exactly one of leaf, branch cut, internal"});
    return;
  }
  if (n.is_leaf() && *n.value != 0 && *n.value != 1)
    out.push_back({path, "leaf value must be 0 or 1"});
  if (n.children.empty()) return;

  long long m = n.children.front().modulus;
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    const Node& c = n.children[i];
    std::string cpath = path + "/" + std::to_string(i);
    if (c.modulus != m) out.push_back({cpath, "sibling subgroup mismatch"});
    if (c.modulus <= n.modulus || c.modulus % n.modulus != 0)
      out.push_back({cpath, "child subgroup is not a proper finite-index subgroup of the parent"});
    else if (mod_floor(c.rep, n.modulus) != n.rep)
      out.push_back({cpath, "child coset not contained in the parent coset"});
  }
  for (std::size_t i = 0; i < n.children.size(); ++i)
    for (std::size_t j = i + 1; j < n.children.size(); ++j)
      if (n.children[i].modulus == n.children[j].modulus &&
          n.children[i].rep == n.children[j].rep)
        out.push_back({path + "/" + std::to_string(j), "not disjoint"});
  if (m > n.modulus && m % n.modulus == 0 &&
      static_cast<long long>(n.children.size()) != m / n.modulus)
    out.push_back({path, "children do not partition the parent coset"});
  for (std::size_t i = 0; i < n.children.size(); ++i)
    validate_node(n.children[i], path + "/" + std::to_string(i), out);
}

bool has_leaf_descendant(const Node& n) {
  if (n.is_leaf()) return true;
  return std::any_of(n.children.begin(), n.children.end(),
                     [](const Node& c) { return has_leaf_descendant(c); });
}

void check_nowhere_dense(const Node& n, const std::string& path, std::vector<Violation>& out) {
  if (!n.children.empty() && !has_leaf_descendant(n))
    out.push_back({path, "internal node has no leaf descendant (branch set not nowhere dense)"});
  for (std::size_t i = 0; i < n.children.size(); ++i)
    check_nowhere_dense(n.children[i], path + "/" + std::to_string(i), out);
}

bool has_branch_descendant(const Node& n) {
  if (n.branch) return true;
  return std::any_of(n.children.begin(), n.children.end(),
                     [](const Node& c) { return has_branch_descendant(c); });
}

struct Homogeneity {
  bool has_branch = false;
  bool seen[2] = {false, false};
};

Homogeneity homog(const Node& n) {
  Homogeneity h;
  if (n.branch) {
    h.has_branch = true;
    return h;
  }
  if (n.is_leaf()) {
    h.seen[*n.value] = true;
    return h;
  }
  for (const Node& c : n.children) {
    Homogeneity hc = homog(c);
    h.has_branch |= hc.has_branch;
    h.seen[0] |= hc.seen[0];
    h.seen[1] |= hc.seen[1];
  }
  return h;
}

bool internal_homogeneous_exists(const Node& n) {
  if (n.children.empty()) return false;
  Homogeneity h = homog(n);
  if (!h.has_branch && (h.seen[0] != h.seen[1])) return true;
  return std::any_of(n.children.begin(), n.children.end(),
                     [](const Node& c) { return internal_homogeneous_exists(c); });
}

long long lcm_checked(long long a, long long b, long long budget) {
  long long g = std::gcd(a, b);
  long long q = a / g;
  if (q > budget / b) throw DepthBudgetExceeded("linearization modulus exceeds budget");
  return q * b;
}

}  // namespace

std::vector<Violation> CosetTree::validate() const {
  std::vector<Violation> out;
  if (root_.modulus != 1 || root_.rep != 0)
    out.push_back({"", "root must denote the whole group"});
  validate_node(root_, "", out);
  if (out.empty()) check_nowhere_dense(root_, "", out);
  return out;
}

int CosetTree::evaluate(long long g) const {
  auto v = try_evaluate(g);
  if (!v) throw OnInfiniteBranch(g);
  return *v;
}

std::optional<int> CosetTree::try_evaluate(long long g) const {
  auto it = exceptions_.find(g);
  if (it != exceptions_.end()) return it->second;
  const Node* cur = &root_;
  while (true) {
    if (cur->is_leaf()) return *cur->value;
    if (cur->branch) return std::nullopt;
    const Node* next = nullptr;
    for (const Node& c : cur->children)
      if (c.contains(g)) {
        next = &c;
        break;
      }
    if (!next) return std::nullopt;  // malformed tree; treated as unresolved
    cur = next;
  }
}

int CosetTree::depth() const {
  int d = 0;
  std::deque<std::pair<const Node*, int>> work{{&root_, 0}};
  while (!work.empty()) {
    auto [n, nd] = work.front();
    work.pop_front();
    d = std::max(d, nd);
    for (const Node& c : n->children) work.emplace_back(&c, nd + 1);
  }
  return d;
}

bool CosetTree::is_linear() const {
  std::map<int, long long> moduli;
  bool ok = true;
  std::deque<std::pair<const Node*, int>> work{{&root_, 0}};
  while (!work.empty() && ok) {
    auto [n, d] = work.front();
    work.pop_front();
    auto [it, inserted] = moduli.emplace(d, n->modulus);
    if (!inserted && it->second != n->modulus) ok = false;
    for (const Node& c : n->children) work.emplace_back(&c, d + 1);
  }
  return ok;
}

bool CosetTree::is_irreducible() const { return !internal_homogeneous_exists(root_); }

std::vector<long long> CosetTree::depth_moduli() const {
  std::vector<long long> moduli;
  std::deque<std::pair<const Node*, int>> work{{&root_, 0}};
  while (!work.empty()) {
    auto [n, d] = work.front();
    work.pop_front();
    if (static_cast<int>(moduli.size()) <= d) moduli.resize(static_cast<std::size_t>(d) + 1, 0);
    moduli[static_cast<std::size_t>(d)] = n->modulus;
    for (const Node& c : n->children) work.emplace_back(&c, d + 1);
  }
  return moduli;
}

namespace {

enum class Kind { Leaf, Branch, Internal };

struct Resolution {
  Kind kind;
  int value = 0;
};

// Deepest answer the input tree gives about the coset r + lk*Z.
Resolution resolve(const Node& n, long long lk, long long r) {
  if (n.is_leaf()) return {Kind::Leaf, *n.value};
  if (n.branch) return {Kind::Branch, 0};
  long long m = n.children.front().modulus;
  if (lk % m != 0) return {Kind::Internal, 0};
  long long target = mod_floor(r, m);
  for (const Node& c : n.children)
    if (c.rep == target) return resolve(c, lk, r);
  throw std::logic_error("coset tree does not partition; validate first");
}

}  // namespace

CosetTree linearize(const CosetTree& t, long long modulus_budget) {
  if (!t.valid()) throw std::invalid_argument("linearize requires a valid tree");

  // lcm of all subgroups appearing at each depth, deduplicated to a strictly
  // increasing chain. Over Z this replaces the intersection of conjugates.
  int maxd = t.depth();
  std::vector<long long> lcm_at(static_cast<std::size_t>(maxd) + 1, 1);
  std::deque<std::pair<const Node*, int>> work{{&t.root(), 0}};
  while (!work.empty()) {
    auto [n, d] = work.front();
    work.pop_front();
    lcm_at[static_cast<std::size_t>(d)] =
        lcm_checked(lcm_at[static_cast<std::size_t>(d)], n->modulus, modulus_budget);
    for (const Node& c : n->children) work.emplace_back(&c, d + 1);
  }
  for (std::size_t d = 1; d < lcm_at.size(); ++d)
    lcm_at[d] = lcm_checked(lcm_at[d], lcm_at[d - 1], modulus_budget);
  std::vector<long long> chain{1};
  for (long long m : lcm_at)
    if (m > chain.back()) chain.push_back(m);

  std::size_t built = 0;
  auto make = [&](auto&& self, std::size_t k, long long r) -> Node {
    if (++built > kNodeCap) throw DepthBudgetExceeded("linearized tree exceeds node budget");
    Resolution res = resolve(t.root(), chain[k], r);
    Node n;
    n.modulus = chain[k];
    n.rep = r;
    switch (res.kind) {
      case Kind::Leaf:
        n.value = res.value;
        return n;
      case Kind::Branch:
        n.branch = true;
        return n;
      case Kind::Internal:
        break;
    }
    if (k + 1 >= chain.size())
      throw std::logic_error("linearization ran past the deepest level");
    for (long long q = r; q < chain[k + 1]; q += chain[k]) n.children.push_back(self(self, k + 1, q));
    return n;
  };
  return CosetTree(make(make, 0, 0), t.exceptions());
}

namespace {

Node reduce_node(const Node& n) {
  if (n.children.empty()) return n;
  Node out;
  out.modulus = n.modulus;
  out.rep = n.rep;
  for (const Node& c : n.children) out.children.push_back(reduce_node(c));
  bool uniform = true;
  for (const Node& c : out.children)
    if (!c.is_leaf() || *c.value != *out.children.front().value) uniform = false;
  if (uniform) {
    Node leaf;
    leaf.modulus = n.modulus;
    leaf.rep = n.rep;
    leaf.value = *out.children.front().value;
    return leaf;
  }
  return out;
}

}  // namespace

CosetTree reduce(const CosetTree& t) { return CosetTree(reduce_node(t.root()), t.exceptions()); }

zset::PfSet to_pfset(const CosetTree& t, std::map<long long, int> extra_exceptions) {
  if (!t.valid()) throw std::invalid_argument("to_pfset requires a valid tree");
  CosetTree lin = t.is_linear() ? t : linearize(t);
  std::vector<long long> moduli = lin.depth_moduli();
  if (moduli.front() != 1) throw std::logic_error("root modulus must be 1");
  auto chain = zset::FiltrationChain::from_moduli(moduli);

  std::vector<zset::PfSet::Level> levels(moduli.size());
  std::deque<std::pair<const Node*, int>> work{{&lin.root(), 0}};
  while (!work.empty()) {
    auto [n, d] = work.front();
    work.pop_front();
    zset::Status st = zset::Status::Defer;
    if (n->is_leaf()) st = *n->value == 1 ? zset::Status::In : zset::Status::Out;
    levels[static_cast<std::size_t>(d)][n->rep] = st;
    for (const Node& c : n->children) work.emplace_back(&c, d + 1);
  }
  std::map<long long, int> exceptions = lin.exceptions();
  for (auto& [p, bit] : extra_exceptions) exceptions[p] = bit;
  return zset::PfSet::from_levels(std::move(chain), std::move(levels), std::move(exceptions));
}

namespace {

// Scans the coset rep + m*Z inside [-window, window] for two points with
// different values.
std::optional<std::pair<long long, long long>> nonconstant_pair(const CosetTree& t, long long rep,
                                                                long long m, long long window) {
  std::optional<long long> p0;
  std::optional<int> v0;
  long long start = -window + mod_floor(rep + window, m);
  for (long long k = start; k <= window; k += m) {
    auto v = t.try_evaluate(k);
    if (!v) continue;
    if (!v0) {
      v0 = *v;
      p0 = k;
    } else if (*v != *v0) {
      return std::make_pair(*p0, k);
    }
  }
  return std::nullopt;
}

bool constant_on(const CosetTree& t, long long rep, long long m, int value, long long window) {
  bool seen = false;
  long long start = -window + mod_floor(rep + window, m);
  for (long long k = start; k <= window; k += m) {
    auto v = t.try_evaluate(k);
    if (!v) continue;
    if (*v != value) return false;
    seen = true;
  }
  return seen;
}

const Node* shallowest_leaf(const Node& n, int base_depth, int* out_depth) {
  std::deque<std::pair<const Node*, int>> work{{&n, base_depth}};
  while (!work.empty()) {
    auto [cur, d] = work.front();
    work.pop_front();
    if (cur->is_leaf()) {
      *out_depth = d;
      return cur;
    }
    for (const Node& c : cur->children) work.emplace_back(&c, d + 1);
  }
  return nullptr;
}

}  // namespace

ChainEvidence nonperiodicity_chain(const CosetTree& t, int depth, long long window) {
  if (!t.valid()) throw std::invalid_argument("chain search requires a valid tree");
  if (!t.is_linear()) throw std::invalid_argument("chain search requires a linear tree");
  if (!t.is_irreducible()) throw std::invalid_argument("chain search requires an irreducible tree");

  ChainEvidence ev;
  ev.requested = depth;
  ev.window = window;

  // Designated infinite branch: the path of nodes with a branch cut below.
  std::vector<const Node*> path{&t.root()};
  while (!path.back()->children.empty()) {
    const Node* next = nullptr;
    for (const Node& c : path.back()->children)
      if (has_branch_descendant(c)) {
        next = &c;
        break;
      }
    if (!next) break;
    path.push_back(next);
  }
  if (!path.back()->branch) {
    ev.exhausted = true;
    throw ChainExhausted(std::move(ev));
  }

  std::size_t j = 1;
  while (static_cast<int>(ev.steps.size()) < depth) {
    if (j >= path.size() || path[j]->branch) break;
    const Node* coarse = path[j];
    int witness_depth = 0;
    const Node* witness = nullptr;
    // Shallowest leaf hanging under the branch-path node but off the path.
    for (const Node& c : coarse->children) {
      if (&c == (j + 1 < path.size() ? path[j + 1] : nullptr)) continue;
      int d = 0;
      const Node* leaf = shallowest_leaf(c, static_cast<int>(j) + 1, &d);
      if (leaf && (!witness || d < witness_depth)) {
        witness = leaf;
        witness_depth = d;
      }
    }
    if (!witness) break;
    auto pair = nonconstant_pair(t, coarse->rep, coarse->modulus, window);
    if (!pair) break;
    if (!constant_on(t, witness->rep, witness->modulus, *witness->value, window)) break;
    ChainStep step;
    step.coarse_modulus = coarse->modulus;
    step.coarse_rep = coarse->rep;
    step.fine_modulus = witness->modulus;
    step.witness_rep = witness->rep;
    step.witness_value = *witness->value;
    step.point_a = pair->first;
    step.point_b = pair->second;
    ev.steps.push_back(step);
    j = static_cast<std::size_t>(witness_depth);
  }

  if (static_cast<int>(ev.steps.size()) < depth) {
    ev.exhausted = true;
    throw ChainExhausted(std::move(ev));
  }
  return ev;
}

bool verify_chain(const CosetTree& t, const ChainEvidence& ev) {
  for (std::size_t i = 0; i < ev.steps.size(); ++i) {
    const ChainStep& s = ev.steps[i];
    if (s.fine_modulus <= s.coarse_modulus || s.fine_modulus % s.coarse_modulus != 0) return false;
    if (mod_floor(s.witness_rep, s.coarse_modulus) != s.coarse_rep) return false;
    if (i > 0 && ev.steps[i - 1].fine_modulus != s.coarse_modulus) return false;
    if (std::llabs(s.point_a) > ev.window || std::llabs(s.point_b) > ev.window) return false;
    if (mod_floor(s.point_a, s.coarse_modulus) != s.coarse_rep) return false;
    if (mod_floor(s.point_b, s.coarse_modulus) != s.coarse_rep) return false;
    auto va = t.try_evaluate(s.point_a), vb = t.try_evaluate(s.point_b);
    if (!va || !vb || *va == *vb) return false;
    if (!constant_on(t, s.witness_rep, s.fine_modulus, s.witness_value, ev.window)) return false;
  }
  return true;
}

CosetTree dyadic_ladder_tree(const std::vector<int>& branch_digits, int depth,
                             std::map<long long, int> exceptions) {
  if (static_cast<int>(branch_digits.size()) < depth)
    throw std::invalid_argument("need one branch digit per depth");
  auto build = [&](auto&& self, int n, long long d) -> Node {
    Node node;
    node.modulus = 1ll << n;
    node.rep = d;
    if (n == depth) {
      node.branch = true;
      return node;
    }
    long long step = 1ll << n;
    int a = branch_digits[static_cast<std::size_t>(n)] != 0 ? 1 : 0;
    Node leaf;
    leaf.modulus = 1ll << (n + 1);
    leaf.rep = d + (1 - a) * step;
    leaf.value = n % 2;
    node.children.push_back(std::move(leaf));
    node.children.push_back(self(self, n + 1, d + a * step));
    return node;
  };
  return CosetTree(build(build, 0, 0), std::move(exceptions));
}

CosetTree ternary_parity_tree(int depth) {
  auto off_branch = [](long long m, long long c) {
    Node n;
    n.modulus = m;
    n.rep = c;
    for (int i = 0; i < 2; ++i) {
      Node leaf;
      leaf.modulus = 2 * m;
      leaf.rep = c + i * m;
      leaf.value = static_cast<int>(leaf.rep % 2);
      n.children.push_back(std::move(leaf));
    }
    return n;
  };
  auto build = [&](auto&& self, int n, long long d, long long pow3) -> Node {
    Node node;
    node.modulus = pow3;
    node.rep = d;
    if (n == depth) {
      node.branch = true;
      return node;
    }
    long long next = pow3 * 3;
    node.children.push_back(off_branch(next, d));
    node.children.push_back(self(self, n + 1, d + pow3, next));
    node.children.push_back(off_branch(next, d + 2 * pow3));
    return node;
  };
  return CosetTree(build(build, 0, 0, 1));
}

}  // namespace ellis::tree
