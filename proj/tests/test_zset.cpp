#include "ellis/zset.hpp"

#include <set>

#include "doctest.h"
#include "ellis/rng.hpp"

using namespace ellis::zset;

namespace {

// Independent oracle: parity of the 2-adic valuation, directly from the
// defining formula.
int val2_parity(long long k, int zero_bit) {
  if (k == 0) return zero_bit;
  int v = 0;
  while (k % 2 == 0) {
    k /= 2;
    ++v;
  }
  return v % 2;
}

FiltrationChain chain2(int depth = 24) { return FiltrationChain::power(2, depth); }

std::set<long long> materialize(const PfSet& s, long long window) {
  std::set<long long> out;
  for (long long k = -window; k <= window; ++k)
    if (s.membership(k) == 1) out.insert(k);
  return out;
}

}  // namespace

TEST_CASE("zset: A0 membership matches the valuation oracle on a window") {
  PfSet a0 = PfSet::valuation_parity(chain2(), 0);
  CHECK(a0.membership(0) == 0);
  CHECK(a0.membership(6) == 1);
  CHECK(a0.membership(12) == 0);
  for (long long k = -256; k <= 256; ++k) CHECK(a0.membership(k) == val2_parity(k, 0));
  PfSet a1 = PfSet::valuation_parity(chain2(), 1);
  for (long long k = -256; k <= 256; ++k) CHECK(a1.membership(k) == val2_parity(k, 1));
}

TEST_CASE("zset: boolean laws agree with window set operations") {
  PfSet a0 = PfSet::valuation_parity(chain2(), 0);
  PfSet even = PfSet::coset(chain2(), 0, 2);
  PfSet c8 = PfSet::coset(chain2(), 3, 8);

  const long long w = 128;
  auto A = materialize(a0, w), E = materialize(even, w), C = materialize(c8, w);

  auto U = materialize(PfSet::unite(a0, c8), w);
  auto I = materialize(PfSet::intersect(a0, even), w);
  auto N = materialize(even.complemented(), w);
  auto T = materialize(a0.translated(5), w - 5);

  for (long long k = -w; k <= w; ++k) {
    CHECK(U.count(k) == (A.count(k) || C.count(k)));
    CHECK(I.count(k) == (A.count(k) && E.count(k)));
    CHECK(N.count(k) == !E.count(k));
  }
  for (long long k = -w + 5; k <= w - 5; ++k) CHECK(T.count(k) == A.count(k - 5));
}

TEST_CASE("zset: trivial identities") {
  PfSet even = PfSet::coset(chain2(), 0, 2);
  CHECK(even.complemented() == PfSet::coset(chain2(), 1, 2));
  CHECK(PfSet::unite(even, even.complemented()) == PfSet::whole(chain2()));
  CHECK(PfSet::intersect(even, even.complemented()).provably_empty());
}

TEST_CASE("zset: chain mismatch is reported") {
  PfSet a = PfSet::coset(chain2(8), 0, 2);
  PfSet b = PfSet::coset(FiltrationChain::power(3, 8), 0, 3);
  CHECK_THROWS_AS(PfSet::unite(a, b), ChainMismatch);
}

TEST_CASE("zset: per_set equals the window brute force") {
  PfSet a0 = PfSet::valuation_parity(chain2(), 0);
  PfSet even = PfSet::coset(chain2(), 0, 2);

  SUBCASE("periodic set keeps its period group") {
    PfSet per = per_set(even, {0, 1});
    CHECK(per == even);
  }

  SUBCASE("A0 with U = {0} gives the complement") {
    PfSet per = per_set(a0, {0});
    const long long w = 64;
    for (long long t = -w; t <= w; ++t) CHECK(per.membership(t) == (1 - a0.membership(t)));
  }

  SUBCASE("A0 with U = {0,2} contains the coset 4 + 8Z") {
    PfSet per = per_set(a0, {0, 2});
    CHECK(per.contains_coset(4, 8));
  }

  SUBCASE("brute force comparison on sampled U") {
    ellis::Rng rng(0xE1115u);
    for (int trial = 0; trial < 12; ++trial) {
      std::set<long long> u;
      int size = 1 + static_cast<int>(rng.below(3));
      while (static_cast<int>(u.size()) < size) u.insert(rng.range(-32, 32));
      std::vector<long long> uv(u.begin(), u.end());
      PfSet per = per_set(a0, uv);
      for (long long t = -64; t <= 64; ++t) {
        bool expect = true;
        for (long long x : uv)
          if (a0.membership(x + t) != a0.membership(x)) expect = false;
        CHECK(per.membership(t) == (expect ? 1 : 0));
      }
    }
  }
}

TEST_CASE("zset: genericity certificates re-verify") {
  SUBCASE("odd numbers need two translates") {
    PfSet odd = PfSet::coset(chain2(), 1, 2);
    auto cert = genericity_certificate(odd);
    REQUIRE(cert.verdict == GenericityCertificate::Verdict::GenericWithWitness);
    CHECK(cert.translates.size() == 2);
    CHECK(verify_certificate(odd, cert));
  }

  SUBCASE("A0 is witnessed by 2 + 4Z with four translates") {
    PfSet a0 = PfSet::valuation_parity(chain2(), 0);
    auto cert = genericity_certificate(a0);
    REQUIRE(cert.verdict == GenericityCertificate::Verdict::GenericWithWitness);
    CHECK(cert.coset_rep == 2);
    CHECK(cert.coset_modulus == 4);
    CHECK(cert.translates.size() == 4);
    CHECK(verify_certificate(a0, cert));
  }

  SUBCASE("empty set is not generic") {
    auto cert = genericity_certificate(PfSet::empty(chain2()));
    CHECK(cert.verdict == GenericityCertificate::Verdict::NotGeneric);
  }

  SUBCASE("tampered certificates fail re-verification") {
    PfSet a0 = PfSet::valuation_parity(chain2(), 0);
    auto cert = genericity_certificate(a0);
    cert.translates.pop_back();
    CHECK_FALSE(verify_certificate(a0, cert));
    auto cert2 = genericity_certificate(a0);
    cert2.coset_rep = 1;
    CHECK_FALSE(verify_certificate(a0, cert2));
  }
}

TEST_CASE("zset: strong genericity reports") {
  PfSet even = PfSet::coset(chain2(), 0, 2);
  auto rep = strong_genericity_report(even, {{0}, {0, 1}});
  CHECK(rep.locally_periodic_up_to_battery);
  CHECK(rep.max_witness_count <= 2);

  SUBCASE("every small-U battery on A0 is generic with the predicted coset") {
    PfSet a0 = PfSet::valuation_parity(chain2(), 0);
    ellis::Rng rng(0xBA77E21u);
    for (int trial = 0; trial < 30; ++trial) {
      std::set<long long> u;
      int size = 1 + static_cast<int>(rng.below(3));
      while (static_cast<int>(u.size()) < size) u.insert(rng.range(-8, 8));
      std::vector<long long> uv(u.begin(), u.end());
      PfSet per = per_set(a0, uv);
      auto cert = genericity_certificate(per);
      REQUIRE(cert.verdict == GenericityCertificate::Verdict::GenericWithWitness);
      CHECK(verify_certificate(per, cert));
      // Predicted witness: 2^N + 2^(N+1) Z for the least even N above the
      // valuations appearing in U.
      int maxv = -1;
      for (long long x : uv)
        if (x != 0) {
          int v = 0;
          long long y = x < 0 ? -x : x;
          while (y % 2 == 0) {
            y /= 2;
            ++v;
          }
          maxv = std::max(maxv, v);
        }
      int n = 0;
      while (n <= maxv || n % 2 != 0) ++n;
      CHECK(per.contains_coset(1ll << n, 1ll << (n + 1)));
    }
  }

  SUBCASE("a half-line encoded by sampled points stays inconclusive") {
    std::map<long long, int> pts;
    for (long long k = -8; k <= 8; ++k) pts[k] = k >= 0 ? 1 : 0;
    PfSet half = PfSet::from_points(chain2(), std::move(pts));
    auto rep2 = strong_genericity_report(half, {{0}, {0, 1}});
    CHECK_FALSE(rep2.locally_periodic_up_to_battery);
    for (auto& e : rep2.entries)
      CHECK(e.cert.verdict != GenericityCertificate::Verdict::GenericWithWitness);
  }
}

TEST_CASE("zset: usg probe") {
  SUBCASE("periodic sets stay flat") {
    PfSet even = PfSet::coset(chain2(), 0, 2);
    auto rep = usg_probe(even, {1, 2, 3}, 7, 16, 10);
    for (auto& row : rep.rows) CHECK(row.max_witnesses <= 2);
    CHECK_FALSE(rep.monotone_growth);
  }
  SUBCASE("whole group needs one translate") {
    auto rep = usg_probe(PfSet::whole(chain2()), {1, 2}, 7, 16, 5);
    for (auto& row : rep.rows) CHECK(row.max_witnesses == 1);
  }
  SUBCASE("A0 witnesses grow strictly with |U|") {
    PfSet a0 = PfSet::valuation_parity(chain2(), 0);
    auto rep = usg_probe(a0, {1, 2, 3}, 0x5EED, 64, 20);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].max_witnesses < rep.rows[1].max_witnesses);
    CHECK(rep.rows[1].max_witnesses < rep.rows[2].max_witnesses);
    CHECK(rep.monotone_growth);
    for (auto& row : rep.rows) CHECK(row.inconclusive == 0);
  }
}

TEST_CASE("zset: worked intersection example at depth one") {
  PfSet a0 = PfSet::valuation_parity(chain2(), 0);
  PfSet b = PfSet::intersect(a0, a0.translated(4));
  CHECK(b.contains_coset(2, 4));
  // Exactly 2 + 4Z: the symmetric difference with that coset is empty.
  PfSet target = PfSet::coset(chain2(), 2, 4);
  PfSet diff = PfSet::unite(PfSet::intersect(b, target.complemented()),
                            PfSet::intersect(b.complemented(), target));
  CHECK(diff.provably_empty());
}
