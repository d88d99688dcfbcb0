#include "ellis/zset.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "ellis/rng.hpp"

namespace ellis::zset {

namespace {
constexpr std::size_t kLevelEntryCap = 1u << 21;
constexpr long long kCoverModulusCap = 1 << 16;
}  // namespace

long long mod_floor(long long a, long long m) {
  long long r = a % m;
  return r < 0 ? r + m : r;
}

FiltrationChain FiltrationChain::power(long long base, int max_depth) {
  if (base < 2 || max_depth < 1) throw ChainMismatch("power chain needs base >= 2, depth >= 1");
  std::vector<long long> moduli{1};
  long long m = 1;
  for (int d = 0; d < max_depth; ++d) {
    if (m > (1ll << 62) / base) throw BudgetExceeded("chain modulus overflow");
    m *= base;
    moduli.push_back(m);
  }
  FiltrationChain c;
  c.moduli_ = std::move(moduli);
  return c;
}

FiltrationChain FiltrationChain::from_moduli(std::vector<long long> moduli) {
  if (moduli.empty() || moduli.front() != 1) throw ChainMismatch("chain must start with 1");
  for (std::size_t i = 1; i < moduli.size(); ++i) {
    if (moduli[i] <= moduli[i - 1] || moduli[i] % moduli[i - 1] != 0)
      throw ChainMismatch("chain moduli must strictly increase and divide");
  }
  FiltrationChain c;
  c.moduli_ = std::move(moduli);
  return c;
}

std::optional<int> FiltrationChain::depth_of(long long m) const {
  for (std::size_t d = 0; d < moduli_.size(); ++d)
    if (moduli_[d] == m) return static_cast<int>(d);
  return std::nullopt;
}

FiltrationChain FiltrationChain::merge(const FiltrationChain& a, const FiltrationChain& b) {
  const auto& s = a.moduli_.size() <= b.moduli_.size() ? a : b;
  const auto& l = a.moduli_.size() <= b.moduli_.size() ? b : a;
  for (std::size_t i = 0; i < s.moduli_.size(); ++i)
    if (s.moduli_[i] != l.moduli_[i])
      throw ChainMismatch("filtration chains disagree at depth " + std::to_string(i));
  return l;
}

PfSet::PfSet(FiltrationChain chain, std::vector<Level> levels, std::map<long long, int> exceptions)
    : chain_(std::move(chain)), levels_(std::move(levels)), exceptions_(std::move(exceptions)) {
  if (levels_.empty()) levels_.push_back(Level{{0, Status::Defer}});
  canonicalize();
  rebuild_frontier();
  for (auto& [p, bit] : exceptions_)
    if (status_at(p, depth_used()) != Status::Defer)
      throw ChainMismatch("exception point " + std::to_string(p) +
                          " does not sit on an undecided branch");
}

PfSet PfSet::empty(FiltrationChain chain) {
  return PfSet(std::move(chain), {Level{{0, Status::Out}}}, {});
}

PfSet PfSet::whole(FiltrationChain chain) {
  return PfSet(std::move(chain), {Level{{0, Status::In}}}, {});
}

PfSet PfSet::coset(FiltrationChain chain, long long rep, long long modulus) {
  auto depth = chain.depth_of(modulus);
  if (!depth) throw ChainMismatch("coset modulus not on the chain");
  rep = mod_floor(rep, modulus);
  std::vector<Level> levels(static_cast<std::size_t>(*depth) + 1);
  levels[0][0] = *depth == 0 ? Status::In : Status::Defer;
  for (int d = 1; d <= *depth; ++d) {
    long long md = chain.modulus(d), mp = chain.modulus(d - 1);
    long long parent = mod_floor(rep, mp);
    for (long long q = parent; q < md; q += mp)
      levels[static_cast<std::size_t>(d)][q] =
          q == mod_floor(rep, md) ? (d == *depth ? Status::In : Status::Defer) : Status::Out;
  }
  return PfSet(std::move(chain), std::move(levels), {});
}

PfSet PfSet::valuation_parity(FiltrationChain chain, int zero_bit) {
  for (int d = 1; d <= chain.max_depth(); ++d)
    if (chain.modulus(d) != chain.modulus(d - 1) * 2)
      throw ChainMismatch("valuation-parity set requires the chain 1,2,4,8,...");
  int dmax = chain.max_depth();
  std::vector<Level> levels(static_cast<std::size_t>(dmax) + 1);
  levels[0][0] = Status::Defer;
  for (int d = 1; d <= dmax; ++d) {
    long long half = chain.modulus(d - 1);
    levels[static_cast<std::size_t>(d)][0] = Status::Defer;
    levels[static_cast<std::size_t>(d)][half] = ((d - 1) % 2 == 1) ? Status::In : Status::Out;
  }
  return PfSet(std::move(chain), std::move(levels), {{0, zero_bit != 0 ? 1 : 0}});
}

PfSet PfSet::from_points(FiltrationChain chain, std::map<long long, int> points) {
  return PfSet(std::move(chain), {Level{{0, Status::Defer}}}, std::move(points));
}

PfSet PfSet::from_levels(FiltrationChain chain, std::vector<Level> levels,
                         std::map<long long, int> exceptions) {
  return PfSet(std::move(chain), std::move(levels), std::move(exceptions));
}

Status PfSet::status_at(long long k, int depth) const {
  int limit = std::min(depth, depth_used());
  for (int d = 0; d <= limit; ++d) {
    long long r = mod_floor(k, chain_.modulus(d));
    auto it = levels_[static_cast<std::size_t>(d)].find(r);
    if (it == levels_[static_cast<std::size_t>(d)].end()) return Status::Defer;
    if (it->second != Status::Defer) return it->second;
  }
  return Status::Defer;
}

int PfSet::membership(long long k) const {
  auto b = try_membership(k);
  if (!b) throw Unresolved(depth_used());
  return *b;
}

std::optional<int> PfSet::try_membership(long long k) const {
  auto it = exceptions_.find(k);
  if (it != exceptions_.end()) return it->second;
  Status st = status_at(k, depth_used());
  if (st == Status::In) return 1;
  if (st == Status::Out) return 0;
  return std::nullopt;
}

PfSet PfSet::complemented() const {
  std::vector<Level> levels = levels_;
  for (auto& lvl : levels)
    for (auto& [r, st] : lvl) {
      if (st == Status::In)
        st = Status::Out;
      else if (st == Status::Out)
        st = Status::In;
    }
  std::map<long long, int> exc;
  for (auto& [p, bit] : exceptions_) exc[p] = 1 - bit;
  return PfSet(chain_, std::move(levels), std::move(exc));
}

PfSet PfSet::translated(long long t) const {
  std::vector<Level> levels(levels_.size());
  for (std::size_t d = 0; d < levels_.size(); ++d) {
    long long m = chain_.modulus(static_cast<int>(d));
    for (auto& [r, st] : levels_[d]) levels[d][mod_floor(r + t, m)] = st;
  }
  std::map<long long, int> exc;
  for (auto& [p, bit] : exceptions_) exc[p + t] = bit;
  return PfSet(chain_, std::move(levels), std::move(exc));
}

PfSet PfSet::binary(const PfSet& a, const PfSet& b, BinOp op) {
  FiltrationChain chain = FiltrationChain::merge(a.chain_, b.chain_);
  int dmax = std::max(a.depth_used(), b.depth_used());
  auto combine = [op](Status x, Status y) {
    if (op == BinOp::Union) {
      if (x == Status::In || y == Status::In) return Status::In;
      if (x == Status::Out && y == Status::Out) return Status::Out;
      return Status::Defer;
    }
    if (x == Status::Out || y == Status::Out) return Status::Out;
    if (x == Status::In && y == Status::In) return Status::In;
    return Status::Defer;
  };

  std::vector<Level> levels(static_cast<std::size_t>(dmax) + 1);
  std::size_t entries = 0;
  std::deque<std::pair<int, long long>> work{{0, 0}};
  while (!work.empty()) {
    auto [d, r] = work.front();
    work.pop_front();
    Status st = combine(a.status_at(r, d), b.status_at(r, d));
    levels[static_cast<std::size_t>(d)][r] = st;
    if (++entries > kLevelEntryCap) throw BudgetExceeded("residue expansion exceeded budget");
    if (st == Status::Defer && d < dmax) {
      long long md = chain.modulus(d + 1), mp = chain.modulus(d);
      for (long long q = r; q < md; q += mp) work.emplace_back(d + 1, q);
    }
  }

  // Exception points survive only where the levels stay undecided and both
  // operands resolve the point.
  PfSet result(chain, std::move(levels), {});
  std::map<long long, int> exc;
  auto consider = [&](long long p) {
    if (result.status_at(p, result.depth_used()) != Status::Defer) return;
    auto xa = a.try_membership(p), xb = b.try_membership(p);
    if (!xa || !xb) return;
    exc[p] = op == BinOp::Union ? (*xa | *xb) : (*xa & *xb);
  };
  for (auto& [p, bit] : a.exceptions_) consider(p);
  for (auto& [p, bit] : b.exceptions_) consider(p);
  result.exceptions_ = std::move(exc);
  return result;
}

PfSet PfSet::unite(const PfSet& a, const PfSet& b) { return binary(a, b, BinOp::Union); }
PfSet PfSet::intersect(const PfSet& a, const PfSet& b) { return binary(a, b, BinOp::Intersection); }

void PfSet::canonicalize() {
  for (int d = static_cast<int>(levels_.size()) - 1; d >= 1; --d) {
    auto& lvl = levels_[static_cast<std::size_t>(d)];
    auto& up = levels_[static_cast<std::size_t>(d - 1)];
    long long md = chain_.modulus(d), mp = chain_.modulus(d - 1);
    long long fanout = md / mp;
    // Group children by parent residue and lift uniform families.
    std::map<long long, std::pair<long long, long long>> count;  // parent -> (in, out)
    for (auto& [r, st] : lvl) {
      auto& c = count[mod_floor(r, mp)];
      if (st == Status::In) ++c.first;
      else if (st == Status::Out) ++c.second;
    }
    for (auto& [parent, c] : count) {
      Status merged;
      if (c.first == fanout) merged = Status::In;
      else if (c.second == fanout) merged = Status::Out;
      else continue;
      for (long long q = parent; q < md; q += mp) lvl.erase(q);
      up[parent] = merged;
    }
  }
  while (levels_.size() > 1 && levels_.back().empty()) levels_.pop_back();
}

void PfSet::rebuild_frontier() {
  defer_frontier_.clear();
  for (int d = 0; d <= depth_used(); ++d) {
    for (auto& [r, st] : levels_[static_cast<std::size_t>(d)]) {
      if (st != Status::Defer) continue;
      bool has_child = false;
      if (d < depth_used()) {
        long long md1 = chain_.modulus(d + 1), md = chain_.modulus(d);
        for (long long q = r; q < md1 && !has_child; q += md)
          has_child = levels_[static_cast<std::size_t>(d + 1)].count(q) > 0;
      }
      if (!has_child) defer_frontier_.push_back(r);
    }
  }
}

bool PfSet::provably_empty() const {
  if (!defer_frontier_.empty()) return false;
  for (auto& [p, bit] : exceptions_)
    if (bit == 1) return false;
  for (auto& lvl : levels_)
    for (auto& [r, st] : lvl)
      if (st == Status::In) return false;
  return true;
}

std::optional<PfSet::InResidue> PfSet::shallowest_in() const {
  for (int d = 0; d <= depth_used(); ++d)
    for (auto& [r, st] : levels_[static_cast<std::size_t>(d)])
      if (st == Status::In) return InResidue{d, r, chain_.modulus(d)};
  return std::nullopt;
}

std::vector<long long> PfSet::in_residues_mod(int depth) const {
  long long m = chain_.modulus(depth);
  if (m > kCoverModulusCap) throw BudgetExceeded("cover modulus exceeds budget");
  std::vector<long long> out;
  for (int d = 0; d <= std::min(depth, depth_used()); ++d) {
    long long md = chain_.modulus(d);
    for (auto& [r, st] : levels_[static_cast<std::size_t>(d)])
      if (st == Status::In)
        for (long long q = r; q < m; q += md) out.push_back(q);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool PfSet::contains_coset(long long rep, long long modulus) const {
  auto depth = chain_.depth_of(modulus);
  if (!depth) throw ChainMismatch("coset modulus not on the chain");
  return status_at(rep, *depth) == Status::In;
}

PfSet per_set(const PfSet& s, const std::vector<long long>& u) {
  PfSet acc = PfSet::whole(s.chain());
  for (long long x : u) {
    int bit = s.membership(x);
    PfSet factor = bit == 1 ? s : s.complemented();
    acc = PfSet::intersect(acc, factor.translated(-x));
  }
  return acc;
}

GenericityCertificate genericity_certificate(const PfSet& s) {
  GenericityCertificate cert;
  cert.depth_reached = s.depth_used();
  auto in = s.shallowest_in();
  if (!in) {
    cert.verdict = s.provably_empty() ? GenericityCertificate::Verdict::NotGeneric
                                      : GenericityCertificate::Verdict::Inconclusive;
    return cert;
  }
  cert.verdict = GenericityCertificate::Verdict::GenericWithWitness;
  cert.coset_rep = in->residue;
  cert.coset_modulus = in->modulus;
  cert.coset_depth = in->depth;

  long long m = in->modulus;
  std::vector<long long> contained = s.in_residues_mod(in->depth);
  std::vector<char> covered(static_cast<std::size_t>(m), 0);
  long long remaining = m;
  while (remaining > 0) {
    long long best_t = -1, best_gain = 0;
    for (long long t = 0; t < m; ++t) {
      long long gain = 0;
      for (long long r : contained)
        if (!covered[static_cast<std::size_t>(mod_floor(r + t, m))]) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best_t = t;
      }
    }
    if (best_t < 0) break;  // cannot happen for a true In residue
    cert.translates.push_back(best_t);
    for (long long r : contained) covered[static_cast<std::size_t>(mod_floor(r + best_t, m))] = 1;
    remaining = 0;
    for (char c : covered)
      if (!c) ++remaining;
  }
  std::sort(cert.translates.begin(), cert.translates.end());
  return cert;
}

bool verify_certificate(const PfSet& s, const GenericityCertificate& cert) {
  switch (cert.verdict) {
    case GenericityCertificate::Verdict::Inconclusive:
      return true;
    case GenericityCertificate::Verdict::NotGeneric:
      return s.provably_empty();
    case GenericityCertificate::Verdict::GenericWithWitness:
      break;
  }
  if (!s.contains_coset(cert.coset_rep, cert.coset_modulus)) return false;
  long long m = cert.coset_modulus;
  std::vector<long long> contained = s.in_residues_mod(cert.coset_depth);
  std::vector<char> covered(static_cast<std::size_t>(m), 0);
  for (long long t : cert.translates)
    for (long long r : contained) covered[static_cast<std::size_t>(mod_floor(r + t, m))] = 1;
  return std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; });
}

SgReport strong_genericity_report(const PfSet& s,
                                  const std::vector<std::vector<long long>>& battery) {
  SgReport report;
  report.depth_budget = s.depth_used();
  bool all_generic = true;
  for (const auto& u : battery) {
    SgEntry entry;
    entry.u = u;
    try {
      PfSet per = per_set(s, u);
      entry.cert = genericity_certificate(per);
    } catch (const Unresolved& e) {
      entry.cert.verdict = GenericityCertificate::Verdict::Inconclusive;
      entry.cert.depth_reached = e.depth();
    }
    if (entry.cert.verdict != GenericityCertificate::Verdict::GenericWithWitness)
      all_generic = false;
    report.max_witness_count = std::max(report.max_witness_count, entry.cert.translates.size());
    report.entries.push_back(std::move(entry));
  }
  report.locally_periodic_up_to_battery = all_generic && !battery.empty();
  return report;
}

UsgProbeReport usg_probe(const PfSet& s, const std::vector<int>& size_buckets, std::uint64_t seed,
                         int window, int samples_per_bucket) {
  UsgProbeReport report;
  report.seed = seed;
  report.window = window;
  Rng rng(seed);
  for (int bucket : size_buckets) {
    UsgProbeRow row;
    row.bucket = bucket;
    std::vector<std::vector<long long>> battery;
    // Deterministic ladder first: {2}, {0,2}, {0,2,8}, {0,2,8,32}, ... These
    // force progressively deeper U-period cosets for valuation-style sets.
    std::vector<long long> ladder;
    if (bucket == 1) {
      ladder = {2};
    } else {
      ladder.push_back(0);
      long long v = 2;
      for (int i = 1; i < bucket; ++i) {
        ladder.push_back(v);
        v *= 4;
      }
    }
    if (ladder.size() == static_cast<std::size_t>(bucket)) battery.push_back(ladder);
    while (battery.size() < static_cast<std::size_t>(samples_per_bucket)) {
      std::set<long long> pick;
      while (pick.size() < static_cast<std::size_t>(bucket))
        pick.insert(rng.range(-window, window));
      battery.emplace_back(pick.begin(), pick.end());
    }
    auto sg = strong_genericity_report(s, battery);
    row.samples = battery.size();
    for (const auto& e : sg.entries) {
      if (e.cert.verdict == GenericityCertificate::Verdict::GenericWithWitness)
        row.max_witnesses = std::max(row.max_witnesses, e.cert.translates.size());
      else
        ++row.inconclusive;
    }
    report.rows.push_back(row);
  }
  report.monotone_growth = report.rows.size() > 1;
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    if (report.rows[i].max_witnesses <= report.rows[i - 1].max_witnesses)
      report.monotone_growth = false;
  return report;
}

}  // namespace ellis::zset
