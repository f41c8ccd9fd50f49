#include <doctest.h>

#include <fstream>
#include <sstream>

#include "tsl/parse.hpp"
#include "tsl/rewrite.hpp"
#include "tsl/semantics.hpp"

#include "testutil.hpp"

using tsl::formula;

namespace {

formula A() { return formula::atom("A"); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string corpus(const std::string& name) {
  return std::string(TSL_CORPUS_DIR) + "/" + name;
}

tsl::sum_net gen_net(const tsl::signature& sig, const std::string& name) {
  const auto* g = sig.find_generator(name);
  REQUIRE(g != nullptr);
  return tsl::generator_net(name, g->dom, g->cod);
}

// Deterministic normalization with the default options.
tsl::normalize_result norm(const tsl::sum_net& s, const tsl::signature& sig,
                           tsl::rewrite_options opts = {}) {
  return tsl::normalize(s, sig, tsl::strategy::deterministic(), opts);
}

}  // namespace

TEST_CASE("rule names are stable identifiers") {
  CHECK(tsl::rule_name(tsl::rule_kind::orient) == "orient");
  CHECK(tsl::rule_name(tsl::rule_kind::yank) == "yank");
  CHECK(tsl::rule_name(tsl::rule_kind::loop) == "loop");
  CHECK(tsl::rule_name(tsl::rule_kind::delta) == "delta");
  CHECK(tsl::rule_name(tsl::rule_kind::zero) == "zero");
  CHECK(tsl::rule_name(tsl::rule_kind::collect) == "collect");
  CHECK(tsl::rule_name(tsl::rule_kind::open_measure) == "open-measure");
  CHECK(tsl::rule_name(tsl::rule_kind::open_control) == "open-control");
  CHECK(tsl::rule_name(tsl::rule_kind::equation) == "eq");
}

TEST_CASE("corpus single-rule nets normalize to their expected forms") {
  struct row {
    const char* base;
    const char* rule;  // rule expected in the first trace entry
  };
  const row rows[] = {
      {"yank", "yank"}, {"loop", "loop"}, {"delta", "delta"},
      {"zero", "zero"}, {"collect", "collect"},
  };
  tsl::signature sig = tsl::parse_signature(slurp(corpus("teleport.sig")));
  for (const auto& r : rows) {
    CAPTURE(r.base);
    tsl::sum_net in = tsl::parse_net(slurp(corpus(std::string(r.base) + ".net")), sig);
    tsl::sum_net want =
        tsl::parse_net(slurp(corpus(std::string(r.base) + ".expect.net")), sig);
    auto res = norm(in, sig);
    REQUIRE_FALSE(res.trace.empty());
    CHECK(tsl::rule_name(res.trace.front().rule) == r.rule);
    CHECK(tsl::canonical_sum_string(res.nf) == tsl::canonical_sum_string(want));
    CHECK(res.trace.back().digest == tsl::digest(res.nf));
  }
}

TEST_CASE("orient relabels dual-atom pairings and swaps their ports") {
  tsl::signature sig = tslt::fixed_signature();
  auto res = norm(tsl::eta_net(formula::atom("A", true)), sig);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].rule == tsl::rule_kind::orient);
  tsl::sum_net want = tsl::permute_outputs(tsl::eta_net(A()), {1, 0});
  CHECK(tsl::digest(res.nf) == tsl::digest(want));

  auto res2 = norm(tsl::eps_net(formula::atom("A", true)), sig);
  REQUIRE(res2.trace.size() == 1);
  CHECK(res2.trace[0].rule == tsl::rule_kind::orient);
  CHECK(tsl::digest(res2.nf) == tsl::digest(tsl::permute_inputs(tsl::eps_net(A()), {1, 0})));
}

TEST_CASE("yanking a zig-zag yields the identity") {
  tsl::signature sig = tslt::fixed_signature();
  // (eps (x) id) . (id (x) eta) : A -> A via builders
  tsl::sum_net left = tsl::tensor_product(tsl::identity_net({A()}), tsl::eta_net(A()));
  tsl::sum_net right = tsl::tensor_product(tsl::eps_net(A()), tsl::identity_net({A()}));
  tsl::sum_net zig = tsl::compose(left, right);
  auto res = norm(zig, sig);
  CHECK(res.trace.size() == 1);
  CHECK(res.trace[0].rule == tsl::rule_kind::yank);
  CHECK(tsl::equal(res.nf, tsl::identity_net({A()}), sig, {}));
}

TEST_CASE("delta drops mismatched inject/project pairs") {
  tsl::signature sig = tslt::fixed_signature();
  std::vector<formula> parts = {A(), formula::unit()};
  tsl::sum_net hit =
      tsl::compose(tsl::inject_net(0, parts), tsl::project_net(0, parts));
  tsl::sum_net miss =
      tsl::compose(tsl::inject_net(1, parts), tsl::project_net(0, parts));
  auto rh = norm(hit, sig);
  CHECK(tsl::equal(rh.nf, tsl::identity_net({A()}), sig, {}));
  auto rm = norm(miss, sig);
  CHECK(rm.nf.summands.empty());  // the zero morphism I -> A
  REQUIRE_FALSE(rm.trace.empty());
  CHECK(rm.trace[0].rule == tsl::rule_kind::delta);
}

TEST_CASE("zero drops weight-zero summands") {
  tsl::signature sig = tslt::fixed_signature();
  // scale() by zero collapses eagerly; build the weight-zero summand by hand
  // so the rewrite rule itself is exercised
  CHECK(tsl::scale(tsl::identity_net({A()}), tsl::loop_poly::zero()).summands.empty());
  tsl::sum_net z = tsl::identity_net({A()});
  z.summands[0].weight = tsl::loop_poly::zero();
  auto res = norm(z, sig);
  CHECK(res.nf.summands.empty());
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].rule == tsl::rule_kind::zero);
}

TEST_CASE("collect merges isomorphic summands, adding weights") {
  tsl::signature sig = tslt::fixed_signature();
  tsl::sum_net f = gen_net(sig, "f");
  auto res = norm(tsl::sum_nets(f, f), sig);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].rule == tsl::rule_kind::collect);
  REQUIRE(res.nf.summands.size() == 1);
  CHECK(tsl::to_string(res.nf.summands[0].weight) == "2");
  // weights add even when they carry loop labels
  tsl::loop_poly d = tsl::loop_poly::label(tsl::loop_label::declared("d"));
  auto res2 = norm(tsl::sum_nets(tsl::scale(f, d), f), sig);
  REQUIRE(res2.nf.summands.size() == 1);
  CHECK(tsl::to_string(res2.nf.summands[0].weight) == "1 + d");
}

TEST_CASE("opening a measurement box tags each branch with its index") {
  tsl::signature sig = tslt::fixed_signature();
  tsl::sum_net bf = gen_net(sig, "f"), bg = gen_net(sig, "g");
  tsl::sum_net box = tsl::box_net({bf, bg}, tsl::box_dir::measure);
  auto res = norm(box, sig);
  REQUIRE(res.trace.size() >= 1);
  CHECK(res.trace[0].rule == tsl::rule_kind::open_measure);
  REQUIRE(res.nf.summands.size() == 2);

  std::vector<formula> tags = {formula::unit(), formula::unit()};
  tsl::sum_net want = tsl::sum_nets(
      tsl::tensor_product(bf, tsl::inject_net(0, tags)),
      tsl::tensor_product(bg, tsl::inject_net(1, tags)));
  CHECK(tsl::equal(res.nf, want, sig, {}));
}

TEST_CASE("a control box consumes a matching index state by branch selection") {
  tsl::signature sig = tslt::fixed_signature();
  tsl::sum_net bf = gen_net(sig, "f"), bg = gen_net(sig, "g");
  tsl::sum_net box = tsl::box_net({bf, bg}, tsl::box_dir::control);
  std::vector<formula> tags = {formula::unit(), formula::unit()};
  for (int k = 0; k < 2; ++k) {
    tsl::sum_net fed = tsl::compose(
        tsl::tensor_product(tsl::identity_net({A()}), tsl::inject_net(k, tags)), box);
    auto res = norm(fed, sig);
    REQUIRE_FALSE(res.trace.empty());
    CHECK(res.trace[0].rule == tsl::rule_kind::open_control);
    CHECK(res.trace[0].location.find("match") != std::string::npos);
    CHECK(tsl::equal(res.nf, k == 0 ? bf : bg, sig, {}));
  }
}

TEST_CASE("a bare control box expands against projector states") {
  tsl::signature sig = tslt::fixed_signature();
  tsl::sum_net bf = gen_net(sig, "f"), bg = gen_net(sig, "g");
  tsl::sum_net box = tsl::box_net({bf, bg}, tsl::box_dir::control);
  auto res = norm(box, sig);
  REQUIRE_FALSE(res.trace.empty());
  CHECK(res.trace[0].rule == tsl::rule_kind::open_control);
  REQUIRE(res.nf.summands.size() == 2);
  for (const auto& sm : res.nf.summands) {
    bool has_project = false;
    for (const auto& n : sm.graph.nodes)
      has_project = has_project || n.kind == tsl::node_kind::project;
    CHECK(has_project);
  }
  // expansion preserves the denotation
  tslt::rng_t rng(50);
  auto m = tslt::random_model_nat(rng, sig);
  CHECK(tsl::matrices_approx_equal(tsl::evaluate(box, m), tsl::evaluate(res.nf, m)));
}

TEST_CASE("user equations rewrite left to right when enabled") {
  tsl::signature sig = tslt::fixed_signature();
  tsl::sum_net bf = gen_net(sig, "f");
  tsl::sum_net ff = tsl::compose(bf, bf);
  tsl::user_equation eq{"ff", ff.summands[0].graph,
                        tsl::identity_net({A()}).summands[0].graph};
  sig.declare_equation(eq);

  // disabled by default: f;f is already normal
  CHECK(tsl::is_normal(ff, sig, {}));
  CHECK(tsl::find_redexes(ff, sig, {}, true).empty());

  tsl::rewrite_options opts;
  opts.use_equations = true;
  CHECK_FALSE(tsl::is_normal(ff, sig, opts));
  auto res = norm(ff, sig, opts);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].rule == tsl::rule_kind::equation);
  CHECK(res.trace[0].location.find("eq:ff") != std::string::npos);
  CHECK(tsl::equal(res.nf, tsl::identity_net({A()}), sig, {}));

  // and the step preserves evaluation in a model satisfying the equation
  tsl::model<std::uint64_t> m;
  m.dims["A"] = 2;
  m.dims["B"] = m.dims["C"] = 1;
  m.loops["d"] = m.loops["e"] = 1;
  for (const auto& [name, g] : sig.generators()) {
    long rows = 1, cols = 1;
    for (const auto& f : g.cod) rows *= tsl::dim_of(f, m.dims);
    for (const auto& f : g.dom) cols *= tsl::dim_of(f, m.dims);
    m.gens[name] = tsl::mat<std::uint64_t>::Zero(rows, cols);
  }
  tsl::mat<std::uint64_t> swap(2, 2);
  swap << 0, 1, 1, 0;
  m.gens["f"] = swap;
  REQUIRE(tsl::check_equation(eq, m));
  CHECK(tsl::matrices_approx_equal(tsl::evaluate(ff, m), tsl::evaluate(res.nf, m)));
}

TEST_CASE("normal forms admit no further redexes") {
  tslt::rng_t rng(51);
  tsl::signature sig = tslt::fixed_signature();
  for (int i = 0; i < 40; ++i) {
    tsl::sum_net s = tslt::random_net(rng, sig);
    auto res = norm(s, sig);
    CHECK(tsl::is_normal(res.nf, sig, {}));
    CHECK(tsl::find_redexes(res.nf, sig, {}, true).empty());
    // normalization is idempotent
    auto res2 = norm(res.nf, sig);
    CHECK(res2.trace.empty());
    CHECK(tsl::digest(res2.nf) == tsl::digest(res.nf));
  }
}

TEST_CASE("every rewrite step preserves the exact counting semantics") {
  tslt::rng_t rng(52);
  tsl::signature sig = tslt::fixed_signature();
  int nets = 0, steps = 0;
  while (nets < 100) {
    tsl::sum_net s = tslt::random_net(rng, sig);
    auto m = tslt::random_model_nat(rng, sig);
    tsl::mat<std::uint64_t> before = tsl::evaluate(s, m);
    ++nets;
    for (int guard = 0; guard < 200; ++guard) {
      auto rs = tsl::find_redexes(s, sig, {}, true);
      if (rs.empty()) break;
      const auto& r = rs[tslt::pick(rng, 0, int(rs.size()) - 1)];
      tsl::sum_net next = tsl::apply_redex(s, r, sig);
      tsl::mat<std::uint64_t> after = tsl::evaluate(next, m);
      CAPTURE(tsl::rule_name(r.rule));
      CAPTURE(r.location);
      REQUIRE(tsl::matrices_approx_equal(before, after));
      s = std::move(next);
      before = std::move(after);
      ++steps;
    }
  }
  CHECK(steps > 100);  // the batch actually exercised rewriting
}

TEST_CASE("randomized strategies reach the deterministic normal form") {
  tslt::rng_t rng(53);
  tsl::signature sig = tslt::fixed_signature();
  for (int i = 0; i < 30; ++i) {
    tsl::sum_net s = tslt::random_net(rng, sig);
    auto rep = tsl::check_confluence(s, sig, 5, rng(), {});
    CAPTURE(rep.baseline_digest);
    CHECK(rep.ok);
    CHECK(rep.trials == 5);
    CHECK(rep.mismatches.empty());
  }
}

TEST_CASE("traces replay and tampered traces are rejected") {
  tslt::rng_t rng(54);
  tsl::signature sig = tslt::fixed_signature();
  int replayed = 0;
  while (replayed < 25) {
    tsl::sum_net s = tslt::random_net(rng, sig);
    auto res = tsl::normalize(s, sig, tsl::strategy::seeded(rng()), {});
    if (res.trace.empty()) continue;
    ++replayed;
    auto ok = tsl::replay(s, res.trace, sig, {});
    REQUIRE(ok.ok);
    CHECK(tsl::digest(ok.final_net) == tsl::digest(res.nf));

    std::size_t victim = res.trace.size() / 2;
    auto bad = res.trace;
    bad[victim].digest = std::string(16, '0');
    auto r1 = tsl::replay(s, bad, sig, {});
    CHECK_FALSE(r1.ok);
    CHECK(r1.failed_step == victim);

    bad = res.trace;
    bad[victim].location = "s999:n999";
    auto r2 = tsl::replay(s, bad, sig, {});
    CHECK_FALSE(r2.ok);
    CHECK(r2.failed_step == victim);
  }
}

TEST_CASE("running out of fuel is an engine fault") {
  tsl::signature sig = tslt::fixed_signature();
  tsl::sum_net f = gen_net(sig, "f");
  tsl::sum_net three = tsl::sum_nets(tsl::sum_nets(f, f), f);  // two collects needed
  tsl::rewrite_options opts;
  opts.fuel = 1;
  CHECK_THROWS_AS(tsl::normalize(three, sig, tsl::strategy::deterministic(), opts),
                  tsl::engine_fault);
  opts.fuel = 2;
  CHECK(norm(three, sig, opts).nf.summands.size() == 1);
}

TEST_CASE("equality is decided up to weights, sums, and renumbering") {
  tsl::signature sig = tslt::fixed_signature();
  tsl::sum_net f = gen_net(sig, "f"), g = gen_net(sig, "g"), h = gen_net(sig, "h");

  CHECK(tsl::equal(f, f, sig, {}));
  CHECK_FALSE(tsl::equal(f, g, sig, {}));
  CHECK_FALSE(tsl::equal(f, h, sig, {}));  // different boundary
  // adding a zero-weight summand changes nothing
  tsl::sum_net fz = tsl::sum_nets(f, g);
  fz.summands.back().weight = tsl::loop_poly::zero();
  CHECK(tsl::equal(fz, f, sig, {}));
  // f + f = 2 f
  tsl::loop_poly two = tsl::loop_poly::constant(2);
  CHECK(tsl::equal(tsl::sum_nets(f, f), tsl::scale(f, two), sig, {}));
  // weights distribute over collection: d*f + f = (d+1)*f
  tsl::loop_poly d = tsl::loop_poly::label(tsl::loop_label::declared("d"));
  tsl::loop_poly d1 = d;
  d1 = d1 + tsl::loop_poly::one();
  CHECK(tsl::equal(tsl::sum_nets(tsl::scale(f, d), f), tsl::scale(f, d1), sig, {}));
}

TEST_CASE("redex enumeration is deterministic and stable") {
  tslt::rng_t rng(55);
  tsl::signature sig = tslt::fixed_signature();
  for (int i = 0; i < 20; ++i) {
    tsl::sum_net s = tslt::random_net(rng, sig);
    auto r1 = tsl::find_redexes(s, sig, {}, true);
    auto r2 = tsl::find_redexes(s, sig, {}, true);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t j = 0; j < r1.size(); ++j) {
      CHECK(r1[j].rule == r2[j].rule);
      CHECK(r1[j].location == r2[j].location);
    }
    // locations are unique within one enumeration
    std::set<std::string> locs;
    for (const auto& r : r1) locs.insert(r.location);
    CHECK(locs.size() == r1.size());
  }
}
