#include <doctest.h>

#include "tsl/parse.hpp"
#include "tsl/semantics.hpp"
#include "tsl/sequent.hpp"

#include "testutil.hpp"

using tsl::formula;
using tsl::make_proof;
using tsl::proof;
using tsl::proof_ptr;
using tsl::rule_tag;

namespace {

formula A() { return formula::atom("A"); }
formula B() { return formula::atom("B"); }

proof_ptr id_ax(formula f) {
  proof p;
  p.rule = rule_tag::id_ax;
  p.f = std::move(f);
  return make_proof(std::move(p));
}

proof_ptr gen_ax(std::string name) {
  proof p;
  p.rule = rule_tag::gen_ax;
  p.gen_name = std::move(name);
  return make_proof(std::move(p));
}

proof_ptr eta_ax(formula f) {
  proof p;
  p.rule = rule_tag::eta_ax;
  p.f = std::move(f);
  return make_proof(std::move(p));
}

proof_ptr i_intro() {
  proof p;
  p.rule = rule_tag::i_intro;
  return make_proof(std::move(p));
}

proof_ptr unary(rule_tag r, proof_ptr prem, std::size_t pos = 0) {
  proof p;
  p.rule = r;
  p.premises = {std::move(prem)};
  p.pos = pos;
  return make_proof(std::move(p));
}

proof_ptr dress(rule_tag r, proof_ptr prem, std::size_t pos, std::vector<formula> parts) {
  proof p;
  p.rule = r;
  p.premises = {std::move(prem)};
  p.pos = pos;
  p.parts = std::move(parts);
  return make_proof(std::move(p));
}

proof_ptr binary(rule_tag r, proof_ptr a, proof_ptr b) {
  proof p;
  p.rule = r;
  p.premises = {std::move(a), std::move(b)};
  return make_proof(std::move(p));
}

std::string conclude(const proof_ptr& p, const tsl::signature& sig) {
  auto res = tsl::check_proof(p, sig);
  std::string msg = res.diagnostics.empty() ? std::string() : res.diagnostics[0];
  CAPTURE(msg);
  REQUIRE(res.ok);
  return tsl::to_string(res.conclusion);
}

void expect_reject(const proof_ptr& p, const tsl::signature& sig) {
  auto res = tsl::check_proof(p, sig);
  CHECK_FALSE(res.ok);
  CHECK_FALSE(res.diagnostics.empty());
  CHECK_THROWS_AS(tsl::proof_to_net(p, sig), tsl::error);
}

}  // namespace

TEST_CASE("axiom conclusions and scalars") {
  tsl::signature sig = tslt::fixed_signature();
  CHECK(conclude(id_ax(A()), sig) == "A |- A ; 1");
  CHECK(conclude(gen_ax("f"), sig) == "A |- A ; 1");
  CHECK(conclude(gen_ax("k"), sig) == "B, A* |- C ; 1");
  CHECK(conclude(gen_ax("st"), sig) == "|- A ; 1");
  CHECK(conclude(gen_ax("sc"), sig) == "|- ; 1");
  CHECK(conclude(eta_ax(A()), sig) == "|- A*, A ; 1");
  // pairing a direct sum expands per summand, so the scalar counts branches
  CHECK(conclude(eta_ax(formula::sum(A(), formula::unit())), sig) ==
        "|- A* + I, A + I ; 2");
  // 0 is a reduced formula, so its pairing is admitted; it denotes the zero
  // morphism and the scalar records that
  CHECK(conclude(eta_ax(formula::zero()), sig) == "|- 0, 0 ; 0");
  CHECK(conclude(i_intro(), sig) == "|- I ; 1");

  proof z;
  z.rule = rule_tag::zero_ax;
  z.gamma = {A()};
  z.delta = {B(), formula::unit()};
  CHECK(conclude(make_proof(std::move(z)), sig) == "A |- B, I ; 0");
}

TEST_CASE("structural rules rearrange exactly one position") {
  tsl::signature sig = tslt::fixed_signature();
  // k : B, A* |- C
  CHECK(conclude(unary(rule_tag::exch_l, gen_ax("k"), 0), sig) == "A*, B |- C ; 1");
  CHECK(conclude(unary(rule_tag::tensor_l, gen_ax("k"), 0), sig) == "B @ A* |- C ; 1");
  CHECK(conclude(unary(rule_tag::exch_r, eta_ax(A()), 0), sig) == "|- A, A* ; 1");
  CHECK(conclude(unary(rule_tag::tensor_r, eta_ax(A()), 0), sig) == "|- A* @ A ; 1");
  CHECK(conclude(unary(rule_tag::shift_lr, gen_ax("k"), 0), sig) == "A* |- B*, C ; 1");
  CHECK(conclude(unary(rule_tag::shift_rl, eta_ax(A()), 0), sig) == "A |- A ; 1");
  // moving a dual atom across flips the star back off
  CHECK(conclude(unary(rule_tag::shift_lr, unary(rule_tag::exch_l, gen_ax("k"), 0), 0),
                 sig) == "B |- A, C ; 1");
}

TEST_CASE("direct-sum dressing picks one summand") {
  tsl::signature sig = tslt::fixed_signature();
  std::vector<formula> ii = {formula::unit(), formula::unit()};
  CHECK(conclude(dress(rule_tag::inj, i_intro(), 0, ii), sig) == "|- I + I ; 1");
  CHECK(conclude(dress(rule_tag::inj, i_intro(), 1, ii), sig) == "|- I + I ; 1");
  CHECK(conclude(dress(rule_tag::proj, gen_ax("f"), 0, {A(), B()}), sig) ==
        "A + B |- A ; 1");
  // the two injections of I+I are different morphisms
  tsl::sum_net j0 = tsl::proof_to_net(dress(rule_tag::inj, i_intro(), 0, ii), sig);
  tsl::sum_net j1 = tsl::proof_to_net(dress(rule_tag::inj, i_intro(), 1, ii), sig);
  CHECK_FALSE(tsl::equal(j0, j1, sig, {}));
}

TEST_CASE("cut traces the matched end formulas into a loop scalar") {
  tsl::signature sig = tslt::fixed_signature();
  // gen f : A |- A cuts against itself circularly
  auto circ = unary(rule_tag::cut, gen_ax("f"));
  auto res = tsl::check_proof(circ, sig);
  REQUIRE(res.ok);
  CHECK(tsl::to_string(res.conclusion) == "|- ; cyc(f)");
  // identity traces to the plain dimension
  auto dim = unary(rule_tag::cut, id_ax(A()));
  CHECK(conclude(dim, sig) == "|- ; dim(A)");
  // the scalar matches the evaluated trace
  tslt::rng_t rng(60);
  auto m = tslt::random_model_nat(rng, sig);
  auto M = tsl::evaluate(tsl::proof_to_net(circ, sig), m);
  std::uint64_t tr = 0;
  for (long i = 0; i < m.gens["f"].rows(); ++i) tr += m.gens["f"](i, i);
  CHECK(M(0, 0) == tr);
}

TEST_CASE("mix juxtaposes and multiplies scalars") {
  tsl::signature sig = tslt::fixed_signature();
  CHECK(conclude(binary(rule_tag::mix, gen_ax("k"), gen_ax("f")), sig) ==
        "B, A*, A |- C, A ; 1");
  auto circ = unary(rule_tag::cut, id_ax(A()));
  CHECK(conclude(binary(rule_tag::mix, circ, circ), sig) == "|- ; dim(A) * dim(A)");
}

TEST_CASE("formal sums require identical sequents and add weighted scalars") {
  tsl::signature sig = tslt::fixed_signature();
  proof p;
  p.rule = rule_tag::sum_rule;
  p.premises = {gen_ax("f"), gen_ax("g")};
  p.w1 = tsl::loop_poly::one();
  p.w2 = tsl::loop_poly::label(tsl::loop_label::declared("d"));
  auto sum = make_proof(std::move(p));
  CHECK(conclude(sum, sig) == "A |- A ; 1 + d");
  tslt::rng_t rng(61);
  auto m = tslt::random_model_nat(rng, sig);
  auto M = tsl::evaluate(tsl::proof_to_net(sum, sig), m);
  tsl::mat<std::uint64_t> want = m.gens["f"] + m.loops["d"] * m.gens["g"];
  CHECK(tsl::matrices_approx_equal(M, want));
}

TEST_CASE("measure and control bundle branches behind an index port") {
  tsl::signature sig = tslt::fixed_signature();
  auto meas = binary(rule_tag::measure, gen_ax("f"), gen_ax("g"));
  CHECK(conclude(meas, sig) == "A |- A, I + I ; 2");
  auto ctrl = binary(rule_tag::control, gen_ax("f"), gen_ax("g"));
  CHECK(conclude(ctrl, sig) == "A, I + I |- A ; 2");

  // compiled nets match the box builders
  tsl::sum_net bf = tsl::generator_net("f", {A()}, {A()});
  tsl::sum_net bg = tsl::generator_net("g", {A()}, {A()});
  CHECK(tsl::equal(tsl::proof_to_net(meas, sig),
                   tsl::box_net({bf, bg}, tsl::box_dir::measure), sig, {}));
  CHECK(tsl::equal(tsl::proof_to_net(ctrl, sig),
                   tsl::box_net({bf, bg}, tsl::box_dir::control), sig, {}));
}

TEST_CASE("schema violations are rejected with diagnostics") {
  tsl::signature sig = tslt::fixed_signature();

  expect_reject(id_ax(formula::tensor(A(), B())), sig);      // id on a non-atom
  expect_reject(id_ax(formula::atom("Zz")), sig);            // undeclared atom
  expect_reject(gen_ax("nope"), sig);                        // unknown generator
  expect_reject(eta_ax(formula::tensor(formula::unit(), A())), sig);  // unreduced

  expect_reject(unary(rule_tag::exch_l, gen_ax("k"), 1), sig);   // pos+1 off the end
  expect_reject(unary(rule_tag::exch_r, eta_ax(A()), 1), sig);
  expect_reject(unary(rule_tag::tensor_l, gen_ax("f"), 0), sig);  // needs two formulas
  expect_reject(unary(rule_tag::tensor_r, gen_ax("st"), 0), sig);
  expect_reject(unary(rule_tag::shift_lr, eta_ax(A()), 0), sig);  // empty antecedent
  expect_reject(unary(rule_tag::shift_rl, gen_ax("sc"), 0), sig);  // empty succedent

  std::vector<formula> ii = {formula::unit(), formula::unit()};
  expect_reject(dress(rule_tag::inj, i_intro(), 2, ii), sig);    // index out of range
  expect_reject(dress(rule_tag::inj, gen_ax("sc"), 0, ii), sig);  // nothing to dress
  expect_reject(dress(rule_tag::inj, gen_ax("f"), 0, ii), sig);  // A is not parts[0]=I
  expect_reject(dress(rule_tag::proj, gen_ax("f"), 0, {B(), A()}), sig);  // parts[0] != A
  expect_reject(dress(rule_tag::proj, gen_ax("st"), 0, {A(), B()}), sig);  // empty ante

  expect_reject(unary(rule_tag::cut, gen_ax("h")), sig);  // A |- B: ends differ
  expect_reject(unary(rule_tag::cut, gen_ax("st")), sig);  // |- A: empty antecedent

  {
    proof p;  // sum of different sequents
    p.rule = rule_tag::sum_rule;
    p.premises = {gen_ax("f"), gen_ax("h")};
    expect_reject(make_proof(std::move(p)), sig);
  }
  {
    proof p;  // measure branches must share one sequent
    p.rule = rule_tag::measure;
    p.premises = {gen_ax("f"), gen_ax("h")};
    expect_reject(make_proof(std::move(p)), sig);
  }
  {
    proof p;  // control without branches
    p.rule = rule_tag::control;
    expect_reject(make_proof(std::move(p)), sig);
  }
  {
    proof p;  // wrong premise count: axioms take none
    p.rule = rule_tag::id_ax;
    p.f = A();
    p.premises = {i_intro()};
    expect_reject(make_proof(std::move(p)), sig);
  }
  {
    proof p;  // wrong premise count: cut is single-premise
    p.rule = rule_tag::cut;
    p.premises = {gen_ax("f"), gen_ax("f")};
    expect_reject(make_proof(std::move(p)), sig);
  }
  expect_reject(unary(rule_tag::mix, gen_ax("f")), sig);  // mix needs two premises
}

TEST_CASE("compiled boundaries follow the sequent") {
  tsl::signature sig = tslt::fixed_signature();
  auto p = binary(rule_tag::mix, gen_ax("k"), gen_ax("f"));
  tsl::sum_net s = tsl::proof_to_net(p, sig);
  REQUIRE(s.bnd.inputs.size() == 3);
  CHECK(s.bnd.inputs[0] == B());
  CHECK(s.bnd.inputs[1] == formula::atom("A", true));
  CHECK(s.bnd.inputs[2] == A());
  REQUIRE(s.bnd.outputs.size() == 2);
  CHECK(s.bnd.outputs[0] == formula::atom("C"));
  CHECK(s.bnd.outputs[1] == A());
  // a tensor_l premise fuses formulas but keeps the same port list
  auto q = unary(rule_tag::tensor_l, gen_ax("k"), 0);
  tsl::sum_net sq = tsl::proof_to_net(q, sig);
  REQUIRE(sq.bnd.inputs.size() == 2);
  CHECK(tsl::equal(s.summands.empty() ? s : tsl::proof_to_net(gen_ax("k"), sig), sq, sig,
                   {}));
}

TEST_CASE("derived two-premise cut expands to mix plus trace") {
  tsl::signature sig = tslt::fixed_signature();
  // f : A |- A then h : A |- B
  auto joined = tsl::derived_cut(gen_ax("f"), gen_ax("h"), sig);
  CHECK(conclude(joined, sig) == "A |- B ; 1");
  tsl::sum_net direct = tsl::compose(tsl::generator_net("f", {A()}, {A()}),
                                     tsl::generator_net("h", {A()}, {B()}));
  CHECK(tsl::equal(tsl::proof_to_net(joined, sig), direct, sig, {}));
  // contexts are carried along: k : B, A* |- C cut with st : |- A is illegal
  // (no matching end formulas), while h after f again via contexts works
  CHECK_THROWS_AS(tsl::derived_cut(gen_ax("k"), gen_ax("f"), sig), tsl::error);
}

TEST_CASE("checked proofs carry the abstract weight of their nets") {
  tslt::rng_t rng(62);
  tsl::signature sig = tslt::fixed_signature();
  for (int i = 0; i < 60; ++i) {
    tsl::proof_ptr p = tslt::random_proof(rng, sig);
    auto res = tsl::check_proof(p, sig);
    REQUIRE(res.ok);
    tsl::sum_net s = tsl::proof_to_net(p, sig);
    CHECK(tsl::to_string(res.conclusion.scalar) == tsl::to_string(tsl::abstract_weight(s)));
  }
}

TEST_CASE("cut elimination preserves the denotation of random proofs") {
  tslt::rng_t rng(63);
  tsl::signature sig = tslt::fixed_signature();
  int done = 0;
  while (done < 40) {
    tsl::proof_ptr p = tslt::random_proof(rng, sig);
    auto res = tsl::check_proof(p, sig);
    REQUIRE(res.ok);
    if (tslt::sequent_ports(res.conclusion) > 8) continue;
    ++done;
    tsl::sum_net raw = tsl::proof_to_net(p, sig);
    tsl::sum_net nf = tsl::cut_eliminate(p, sig, {});
    CHECK(tsl::is_normal(nf, sig, {}));
    auto m = tslt::random_model_nat(rng, sig);
    CAPTURE(tsl::to_string(res.conclusion));
    CHECK(tsl::matrices_approx_equal(tsl::evaluate(raw, m), tsl::evaluate(nf, m)));
  }
}
