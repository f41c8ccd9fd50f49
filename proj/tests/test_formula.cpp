#include <doctest.h>

#include <map>

#include "tsl/formula.hpp"
#include "tsl/semantics.hpp"

#include "testutil.hpp"

using tsl::formula;
using K = tsl::formula::kind_t;

TEST_CASE("formula construction and accessors") {
  formula a = formula::atom("A");
  formula ad = formula::atom("A", true);
  CHECK(a.kind() == K::atom);
  CHECK(a.atom_name() == "A");
  CHECK_FALSE(a.atom_dualled());
  CHECK(ad.atom_dualled());
  CHECK(a != ad);
  CHECK(a == formula::atom("A"));

  formula t = formula::tensor(a, ad);
  CHECK(t.kind() == K::tensor);
  CHECK(t.left() == a);
  CHECK(t.right() == ad);

  formula s = formula::sum(formula::unit(), formula::zero());
  CHECK(s.kind() == K::sum);
  CHECK(s.left().kind() == K::unit);
  CHECK(s.right().kind() == K::zero);
}

TEST_CASE("printing respects precedence and associativity") {
  formula A = formula::atom("A"), B = formula::atom("B"), C = formula::atom("C");
  CHECK(to_string(formula::tensor(formula::tensor(A, B), C)) == "A @ B @ C");
  CHECK(to_string(formula::tensor(A, formula::tensor(B, C))) == "A @ (B @ C)");
  CHECK(to_string(formula::sum(formula::sum(A, B), C)) == "A + B + C");
  CHECK(to_string(formula::sum(A, formula::sum(B, C))) == "A + (B + C)");
  CHECK(to_string(formula::sum(formula::tensor(A, B), C)) == "A @ B + C");
  CHECK(to_string(formula::tensor(A, formula::sum(B, C))) == "A @ (B + C)");
  CHECK(to_string(formula::tensor(formula::sum(A, B), C)) == "(A + B) @ C");
  CHECK(to_string(formula::atom("A", true)) == "A*");
  CHECK(to_string(formula::zero()) == "0");
  CHECK(to_string(formula::unit()) == "I");
}

TEST_CASE("dual is an involution matching the reference implementation") {
  tslt::rng_t rng(41);
  for (int i = 0; i < 500; ++i) {
    formula f = tslt::random_formula(rng);
    CHECK(tsl::dual(tsl::dual(f)) == f);
    CHECK(tsl::dual(f) == tslt::dual_oracle(f));
  }
}

TEST_CASE("dual reverses tensors, preserves sums, stars atoms") {
  formula A = formula::atom("A"), B = formula::atom("B");
  CHECK(tsl::dual(formula::tensor(A, B)) ==
        formula::tensor(formula::atom("B", true), formula::atom("A", true)));
  CHECK(tsl::dual(formula::sum(A, B)) ==
        formula::sum(formula::atom("A", true), formula::atom("B", true)));
  CHECK(tsl::dual(formula::unit()) == formula::unit());
  CHECK(tsl::dual(formula::zero()) == formula::zero());
}

TEST_CASE("reduce applies the unit and absorption laws") {
  formula A = formula::atom("A");
  formula I = formula::unit(), Z = formula::zero();
  CHECK(tsl::reduce(formula::tensor(I, A)) == A);
  CHECK(tsl::reduce(formula::tensor(A, I)) == A);
  CHECK(tsl::reduce(formula::tensor(Z, A)) == Z);
  CHECK(tsl::reduce(formula::tensor(A, Z)) == Z);
  CHECK(tsl::reduce(formula::sum(Z, A)) == A);
  CHECK(tsl::reduce(formula::sum(A, Z)) == A);
}

TEST_CASE("reduce is idempotent, matches the oracle, and preserves dimension") {
  tslt::rng_t rng(42);
  for (int i = 0; i < 1000; ++i) {
    formula f = tslt::random_formula(rng, 4);
    formula r = tsl::reduce(f);
    CHECK(tsl::is_reduced(r));
    CHECK(tsl::reduce(r) == r);
    CHECK(r == tslt::reduce_oracle(f));
    for (int trial = 0; trial < 3; ++trial) {
      std::map<std::string, int> dims;
      for (const auto& a : tslt::test_atoms()) dims[a] = tslt::pick(rng, 0, 3);
      CHECK(tsl::dim_of(f, dims) == tsl::dim_of(r, dims));
    }
  }
}

TEST_CASE("ports_of flattens the tensor spine") {
  formula A = formula::atom("A"), B = formula::atom("B"), C = formula::atom("C");
  auto ports = tsl::ports_of(formula::tensor(A, formula::tensor(B, C)));
  REQUIRE(ports.size() == 3);
  CHECK(ports[0] == A);
  CHECK(ports[1] == B);
  CHECK(ports[2] == C);
  CHECK(tsl::ports_of(formula::unit()).empty());
  auto zp = tsl::ports_of(formula::zero());
  REQUIRE(zp.size() == 1);
  CHECK(zp[0].kind() == K::zero);
  auto sp = tsl::ports_of(formula::sum(A, B));
  REQUIRE(sp.size() == 1);
  CHECK(sp[0] == formula::sum(A, B));
}

TEST_CASE("ports of a reduced formula are reduced non-tensor factors") {
  tslt::rng_t rng(43);
  for (int i = 0; i < 300; ++i) {
    formula r = tsl::reduce(tslt::random_formula(rng, 4));
    for (const auto& p : tsl::ports_of(r)) {
      CHECK(p.kind() != K::tensor);
      CHECK(p.kind() != K::unit);
      CHECK(tsl::is_reduced(p));
    }
  }
}
