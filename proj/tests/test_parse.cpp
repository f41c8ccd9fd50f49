#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tsl/parse.hpp"
#include "tsl/rewrite.hpp"
#include "tsl/semantics.hpp"
#include "tsl/sequent.hpp"

#include "testutil.hpp"

using tsl::formula;

namespace {

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

}  // namespace

TEST_CASE("formulas print and reparse to the same tree") {
  tslt::rng_t rng(70);
  for (int i = 0; i < 1000; ++i) {
    formula f = tslt::random_formula(rng, 4);
    std::string text = tsl::to_string(f);
    formula back = tsl::parse_formula(text);
    CAPTURE(text);
    CHECK(back == f);
    CHECK(tsl::to_string(back) == text);
  }
  // accepted spellings beyond the printer's own
  CHECK(tsl::parse_formula("  ( A @ B ) ") == formula::tensor(formula::atom("A"),
                                                              formula::atom("B")));
  CHECK(tsl::parse_formula("A@B+C") ==
        formula::sum(formula::tensor(formula::atom("A"), formula::atom("B")),
                     formula::atom("C")));
  CHECK(tsl::parse_formula("A**") == formula::atom("A"));  // stars cancel
}

TEST_CASE("malformed formulas are rejected") {
  for (const char* bad : {"", "@", "A @", "@ A", "A + ", "(A", "A)", "A B", "()",
                          "A ++ B", "1", "A-", "*A"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(tsl::parse_formula(bad), tsl::error);
  }
}

TEST_CASE("loop polynomials round-trip through text") {
  tslt::rng_t rng(71);
  auto random_poly = [&](tslt::rng_t& r) {
    tsl::loop_poly p = tsl::loop_poly::zero();
    int terms = tslt::pick(r, 0, 3);
    for (int t = 0; t < terms; ++t) {
      tsl::loop_monomial m;
      int factors = tslt::pick(r, 0, 2);
      for (int k = 0; k < factors; ++k) {
        switch (tslt::pick(r, 0, 2)) {
          case 0: m[tsl::loop_label::declared(tslt::coin(r) ? "d" : "e")] += 1; break;
          case 1: m[tsl::loop_label::dimension(tslt::coin(r) ? "A" : "B")] += 1; break;
          case 2: {
            std::vector<tsl::cycle_letter> word;
            int len = tslt::pick(r, 1, 2);
            for (int j = 0; j < len; ++j)
              word.push_back({tslt::coin(r) ? "f" : "g", tslt::coin(r)});
            m[tsl::loop_label::cycle(word)] += 1;
            break;
          }
        }
      }
      p = p + tsl::loop_poly::monomial(m, std::uint64_t(tslt::pick(r, 1, 5)));
    }
    return p;
  };
  for (int i = 0; i < 300; ++i) {
    tsl::loop_poly p = random_poly(rng);
    std::string text = tsl::to_string(p);
    CAPTURE(text);
    tsl::loop_poly back = tsl::parse_loop_poly(text);
    CHECK(back == p);
    CHECK(tsl::to_string(back) == text);
  }
  CHECK(tsl::parse_loop_poly("0").is_zero());
  CHECK(tsl::parse_loop_poly("1") == tsl::loop_poly::one());
  CHECK_THROWS_AS(tsl::parse_loop_poly("d +"), tsl::error);
  CHECK_THROWS_AS(tsl::parse_loop_poly("dim()"), tsl::error);
  CHECK_THROWS_AS(tsl::parse_loop_poly("cyc()"), tsl::error);
}

TEST_CASE("signatures round-trip with equations registered") {
  std::string text = slurp(corpus("teleport.sig"));
  tsl::signature sig = tsl::parse_signature(text);
  CHECK(sig.has_atom("Q"));
  CHECK(sig.has_loop("d"));
  REQUIRE(sig.find_generator("X") != nullptr);
  CHECK(sig.find_generator("X")->dom.size() == 1);
  CHECK(sig.find_generator("s")->dom.empty());
  CHECK(sig.find_generator("s")->cod.empty());
  REQUIRE(sig.equations().size() == 3);
  CHECK(sig.equations()[0].name == "xx");
  // each equation left side is the two-node chain, right side the identity
  CHECK(sig.equations()[0].lhs.nodes.size() == 2);
  CHECK(sig.equations()[0].rhs.nodes.empty());

  std::string printed = tsl::signature_to_text(sig);
  tsl::signature back = tsl::parse_signature(printed);
  CHECK(back.atoms() == sig.atoms());
  CHECK(back.loops() == sig.loops());
  CHECK(back.generators() == sig.generators());
  CHECK(back.equations() == sig.equations());

  CHECK_THROWS_AS(tsl::parse_signature("atom Q\natom Q"), tsl::error);
  CHECK_THROWS_AS(tsl::parse_signature("gen f : P -> P"), tsl::error);
  CHECK_THROWS_AS(tsl::parse_signature("wibble Q"), tsl::error);
}

TEST_CASE("nets round-trip through text verbatim") {
  tslt::rng_t rng(72);
  tsl::signature sig = tslt::fixed_signature();
  for (int i = 0; i < 100; ++i) {
    tsl::sum_net s = tslt::random_net(rng, sig);
    std::string text = tsl::net_to_text(s);
    CAPTURE(text);
    tsl::sum_net back = tsl::parse_net(text, sig);
    CHECK(back == s);
    CHECK(tsl::net_to_text(back) == text);
  }
  // hand-written spellings: weightless summand braces, top-level single summand
  tsl::sum_net id = tsl::parse_net("input a : A\noutput b : A\nwire a -> b\n", sig);
  CHECK(tsl::equal(id, tsl::identity_net({formula::atom("A")}), sig, {}));
  tsl::sum_net zero = tsl::parse_net("input a : A\noutput b : A\nzero\n", sig);
  CHECK(zero.summands.empty());

  // parsing builds the raw structure; validation reports wiring defects
  CHECK_FALSE(tsl::validate(tsl::parse_net("input a : A\n", sig), sig).empty());
  CHECK_FALSE(tsl::validate(tsl::parse_net("input a : A\noutput b : A\nwire a -> b\n"
                                           "wire a -> b\n",
                                           sig),
                            sig)
                  .empty());  // double wiring
  CHECK_THROWS_AS(tsl::parse_net("node n : gen nope\n", sig), tsl::error);
  CHECK_THROWS_AS(tsl::parse_net("input a : A\nwire a -> b\noutput b : A\n", sig),
                  tsl::error);  // references resolve in order
}

TEST_CASE("models parse every documented scalar spelling") {
  std::string base = "dim Q = 2\nloop d = 2\n";
  auto m = tsl::parse_model_complex(
      base +
      "matrix X = [[1, 2i], [1.5-0.25i, -3]]\n"
      "matrix Y = [[0.5e1, -2.5i], [1e-2, 1+1i]]\n");
  CHECK(m.dims["Q"] == 2);
  CHECK(m.loops["d"] == std::complex<double>(2.0, 0.0));
  CHECK(m.gens["X"](0, 0) == std::complex<double>(1, 0));
  CHECK(m.gens["X"](0, 1) == std::complex<double>(0, 2));
  CHECK(m.gens["X"](1, 0) == std::complex<double>(1.5, -0.25));
  CHECK(m.gens["X"](1, 1) == std::complex<double>(-3, 0));
  CHECK(m.gens["Y"](0, 0) == std::complex<double>(5, 0));
  CHECK(m.gens["Y"](0, 1) == std::complex<double>(0, -2.5));
  CHECK(m.gens["Y"](1, 0) == std::complex<double>(0.01, 0));
  CHECK(m.gens["Y"](1, 1) == std::complex<double>(1, 1));

  auto n = tsl::parse_model_nat(base + "matrix X = [[3, 0], [0, 7]]\n");
  CHECK(n.gens["X"](1, 1) == 7);
  std::string bool_base = "dim Q = 2\nloop d = 1\n";
  auto b = tsl::parse_model_bool(bool_base + "matrix X = [[1, 0], [0, 1]]\n");
  CHECK(b.gens["X"](0, 0).v);
  CHECK_FALSE(b.gens["X"](0, 1).v);
  CHECK_THROWS_AS(tsl::parse_model_bool(base), tsl::error);  // 2 is not boolean

  CHECK_THROWS_AS(tsl::parse_model_nat(base + "matrix X = [[1, 2], [3]]\n"),
                  tsl::error);  // ragged rows
  CHECK_THROWS_AS(tsl::parse_model_nat(base + "dim Q = 3\n"), tsl::error);  // dup
  CHECK_THROWS_AS(tsl::parse_model_nat(base + "matrix X = [[-1]]\n"), tsl::error);
  CHECK_THROWS_AS(tsl::parse_model_bool(base + "matrix X = [[2]]\n"), tsl::error);
}

TEST_CASE("the recorded teleportation script checks and annotates correctly") {
  tsl::signature sig = tsl::parse_signature(slurp(corpus("teleport.sig")));
  tsl::proof_script script = tsl::parse_proof_script(slurp(corpus("teleport.proof")), sig);
  REQUIRE(script.root != nullptr);
  auto res = tsl::check_script(script, sig);
  CAPTURE(res.diagnostics.empty() ? std::string() : res.diagnostics[0]);
  REQUIRE(res.ok);
  CHECK(tsl::to_string(res.conclusion) == "Q |- Q, I + I + I + I ; 16");

  // annotation mismatches are caught
  std::string tampered = slurp(corpus("teleport.proof"));
  auto at = tampered.find("Q |- Q, I + I + I + I ; 16");
  REQUIRE(at != std::string::npos);
  tampered.replace(at, std::string("Q |- Q, I + I + I + I ; 16").size(),
                   "Q |- Q, I + I + I + I ; 15");
  auto bad = tsl::check_script(tsl::parse_proof_script(tampered, sig), sig);
  CHECK_FALSE(bad.ok);
}

TEST_CASE("malformed proof scripts are rejected at parse time") {
  tsl::signature sig = tslt::fixed_signature();
  // unknown rule
  CHECK_THROWS_AS(tsl::parse_proof_script("p = frobnicate()\n", sig), tsl::error);
  // undefined premise id
  CHECK_THROWS_AS(tsl::parse_proof_script("p = cut(q)\n", sig), tsl::error);
  // duplicate id
  CHECK_THROWS_AS(tsl::parse_proof_script("p = id(A)\np = id(A)\n", sig), tsl::error);
  // arity errors in args
  CHECK_THROWS_AS(tsl::parse_proof_script("p = id()\n", sig), tsl::error);
  CHECK_THROWS_AS(tsl::parse_proof_script("p = exch_l(; 0)\n", sig), tsl::error);
  // bad sequent annotation syntax
  CHECK_THROWS_AS(tsl::parse_proof_script("p = id(A) : A |-|- A\n", sig), tsl::error);
  // empty script has no root
  CHECK_THROWS_AS(tsl::parse_proof_script("", sig), tsl::error);
}

TEST_CASE("rewrite traces round-trip through their text format") {
  tslt::rng_t rng(73);
  tsl::signature sig = tslt::fixed_signature();
  int done = 0;
  while (done < 20) {
    tsl::sum_net s = tslt::random_net(rng, sig);
    auto res = tsl::normalize(s, sig, tsl::strategy::seeded(rng()), {});
    if (res.trace.empty()) continue;
    ++done;
    std::string text = tsl::trace_to_text(res.trace);
    auto back = tsl::parse_trace(text);
    REQUIRE(back.size() == res.trace.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].rule == res.trace[i].rule);
      CHECK(back[i].location == res.trace[i].location);
      CHECK(back[i].digest == res.trace[i].digest);
    }
    // replay straight from the parsed text
    auto rep = tsl::replay(s, back, sig, {});
    CHECK(rep.ok);
  }
  CHECK_THROWS_AS(tsl::parse_trace("step 0: yank @\n"), tsl::error);
  CHECK_THROWS_AS(tsl::parse_trace("yank\n"), tsl::error);
  CHECK(tsl::parse_trace("").empty());
}

TEST_CASE("JSON export is well-formed and structurally faithful") {
  tsl::signature sig = tsl::parse_signature(slurp(corpus("teleport.sig")));
  tsl::sum_net s = tsl::parse_net(slurp(corpus("teleport.net")), sig);
  nlohmann::json j = nlohmann::json::parse(tsl::net_to_json(s));
  REQUIRE(j.contains("inputs"));
  REQUIRE(j.contains("outputs"));
  REQUIRE(j.contains("summands"));
  CHECK(j["inputs"].size() == s.bnd.inputs.size());
  CHECK(j["outputs"].size() == s.bnd.outputs.size());
  REQUIRE(j["summands"].size() == s.summands.size());
  const auto& sm = j["summands"][0];
  REQUIRE(sm.contains("weight"));
  REQUIRE(sm.contains("graph"));
  const auto& g = sm["graph"];
  REQUIRE(g.contains("nodes"));
  REQUIRE(g.contains("wires"));
  CHECK(g["nodes"].size() == s.summands[0].graph.nodes.size());
  CHECK(g["wires"].size() == s.summands[0].graph.wires.size());
  // every node record carries its kind and id; wires carry endpoints
  for (const auto& n : g["nodes"]) {
    CHECK(n.contains("kind"));
    CHECK(n.contains("id"));
  }
  const auto& w0 = g["wires"][0];
  CHECK(w0.contains("from"));
  CHECK(w0.contains("to"));
  // box nodes expose their branches recursively
  bool saw_box = false;
  for (const auto& n : g["nodes"])
    if (n["kind"] == "box") {
      saw_box = true;
      REQUIRE(n.contains("branches"));
      CHECK(n["branches"].size() >= 2);
      CHECK(n["branches"][0].contains("nodes"));
    }
  CHECK(saw_box);
}

TEST_CASE("every corpus file parses") {
  tsl::signature sig = tsl::parse_signature(slurp(corpus("teleport.sig")));
  for (const char* f : {"teleport.net", "teleport.expect.net", "teleport_scaled.net",
                        "yank.net", "yank.expect.net", "loop.net", "loop.expect.net",
                        "delta.net", "delta.expect.net", "zero.net", "zero.expect.net",
                        "collect.net", "collect.expect.net"}) {
    CAPTURE(f);
    tsl::sum_net s = tsl::parse_net(slurp(corpus(f)), sig);
    CHECK(tsl::validate(s, sig).empty());
  }
  CHECK_FALSE(tsl::model_diagnostics(
                  tsl::parse_model_complex(slurp(corpus("teleport_complex.model"))), sig)
                  .size());
  CHECK_FALSE(tsl::model_diagnostics(
                  tsl::parse_model_nat(slurp(corpus("teleport_nat.model"))), sig)
                  .size());
}
