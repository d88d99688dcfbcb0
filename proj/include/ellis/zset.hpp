#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ellis::zset {

// Thrown when a membership query descends past the recorded depth without
// resolving. Queries are budgeted; nothing deepens silently.
class Unresolved : public std::runtime_error {
 public:
  explicit Unresolved(int depth)
      : std::runtime_error("membership unresolved at depth " + std::to_string(depth)),
        depth_(depth) {}
  int depth() const { return depth_; }

 private:
  int depth_;
};

class ChainMismatch : public std::runtime_error {
 public:
  explicit ChainMismatch(const std::string& what) : std::runtime_error(what) {}
};

class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Divisibility chain m_0 = 1 | m_1 | m_2 | ...; strictly increasing.
class FiltrationChain {
 public:
  static FiltrationChain power(long long base, int max_depth);
  static FiltrationChain from_moduli(std::vector<long long> moduli);

  int max_depth() const { return static_cast<int>(moduli_.size()) - 1; }
  long long modulus(int depth) const { return moduli_.at(static_cast<std::size_t>(depth)); }
  const std::vector<long long>& moduli() const { return moduli_; }

  // Depth whose modulus equals m, if any.
  std::optional<int> depth_of(long long m) const;

  bool operator==(const FiltrationChain& o) const { return moduli_ == o.moduli_; }

  // Two chains combine when one's modulus list is a prefix of the other's.
  static FiltrationChain merge(const FiltrationChain& a, const FiltrationChain& b);

 private:
  std::vector<long long> moduli_;
};

enum class Status : std::uint8_t { In, Out, Defer };

// Symbolic subset of Z over a filtration chain.
//
// Level d assigns residues mod m_d one of In/Out/Defer; a residue appears at
// level d only if its parent residue is Defer at level d-1 (the root residue
// 0 mod 1 is level 0). In/Out cosets are exact. Exception points override
// membership pointwise and always sit inside a residue that is still Defer at
// depth_used: they mark sampled points of an otherwise undecided branch.
class PfSet {
 public:
  using Level = std::map<long long, Status>;

  static PfSet empty(FiltrationChain chain);
  static PfSet whole(FiltrationChain chain);
  // The coset rep + modulus*Z; modulus must occur in the chain.
  static PfSet coset(FiltrationChain chain, long long rep, long long modulus);
  // Parity-of-2-adic-valuation set: bit(k) = v2(k) mod 2 for k != 0 and
  // bit(0) = zero_bit. Requires the chain 1,2,4,8,...
  static PfSet valuation_parity(FiltrationChain chain, int zero_bit);
  // All levels Defer; the listed points are the only resolved ones.
  static PfSet from_points(FiltrationChain chain, std::map<long long, int> points);
  static PfSet from_levels(FiltrationChain chain, std::vector<Level> levels,
                           std::map<long long, int> exceptions);

  const FiltrationChain& chain() const { return chain_; }
  int depth_used() const { return static_cast<int>(levels_.size()) - 1; }
  const std::vector<Level>& levels() const { return levels_; }
  const std::map<long long, int>& exceptions() const { return exceptions_; }

  // Status of (k mod m_depth) taking ancestors into account.
  Status status_at(long long k, int depth) const;

  int membership(long long k) const;  // throws Unresolved
  std::optional<int> try_membership(long long k) const;

  PfSet complemented() const;
  PfSet translated(long long t) const;
  static PfSet unite(const PfSet& a, const PfSet& b);
  static PfSet intersect(const PfSet& a, const PfSet& b);

  // No In coset, no exception with bit 1, no undecided branch.
  bool provably_empty() const;
  bool has_defer_frontier() const { return !defer_frontier_.empty(); }
  const std::vector<long long>& defer_frontier() const { return defer_frontier_; }

  struct InResidue {
    int depth = 0;
    long long residue = 0;
    long long modulus = 1;
  };
  // Shallowest In residue, smallest residue first within a depth.
  std::optional<InResidue> shallowest_in() const;
  // All residues mod m_depth provably contained in the set.
  std::vector<long long> in_residues_mod(int depth) const;
  // Exact containment of the coset rep + modulus*Z (modulus from the chain).
  bool contains_coset(long long rep, long long modulus) const;

  bool operator==(const PfSet& o) const {
    return chain_ == o.chain_ && levels_ == o.levels_ && exceptions_ == o.exceptions_;
  }

 private:
  PfSet(FiltrationChain chain, std::vector<Level> levels, std::map<long long, int> exceptions);

  enum class BinOp { Union, Intersection };
  static PfSet binary(const PfSet& a, const PfSet& b, BinOp op);

  void canonicalize();
  void rebuild_frontier();

  FiltrationChain chain_;
  std::vector<Level> levels_;               // levels_[0] is the root status
  std::map<long long, int> exceptions_;     // point -> bit
  std::vector<long long> defer_frontier_;   // residues mod m_depth_used still Defer
};

long long mod_floor(long long a, long long m);

// Per_U(chi_S) = { t : chi_S(u+t) = chi_S(u) for all u in U }.
// Throws Unresolved if chi_S(u) is undecided for some u in U.
PfSet per_set(const PfSet& s, const std::vector<long long>& u);

struct GenericityCertificate {
  enum class Verdict { GenericWithWitness, NotGeneric, Inconclusive };
  Verdict verdict = Verdict::Inconclusive;
  // Witness data, present when verdict == GenericWithWitness.
  long long coset_rep = 0;
  long long coset_modulus = 1;
  int coset_depth = 0;
  std::vector<long long> translates;
  int depth_reached = 0;
};

GenericityCertificate genericity_certificate(const PfSet& s);

// Re-checks an emitted certificate from scratch: the coset is contained in
// the set and the translates cover all residues mod the coset modulus.
bool verify_certificate(const PfSet& s, const GenericityCertificate& cert);

struct SgEntry {
  std::vector<long long> u;
  GenericityCertificate cert;
};

struct SgReport {
  std::vector<SgEntry> entries;
  bool locally_periodic_up_to_battery = false;
  std::size_t max_witness_count = 0;
  int window = 0;
  int depth_budget = 0;
};

SgReport strong_genericity_report(const PfSet& s, const std::vector<std::vector<long long>>& battery);

struct UsgProbeRow {
  int bucket = 0;                  // |U|
  std::size_t max_witnesses = 0;   // max over sampled U of minimized witness count
  std::size_t samples = 0;
  std::size_t inconclusive = 0;
};

struct UsgProbeReport {
  std::vector<UsgProbeRow> rows;
  bool monotone_growth = false;
  std::uint64_t seed = 0;
  int window = 0;
};

UsgProbeReport usg_probe(const PfSet& s, const std::vector<int>& size_buckets,
                         std::uint64_t seed, int window, int samples_per_bucket = 40);

}  // namespace ellis::zset
