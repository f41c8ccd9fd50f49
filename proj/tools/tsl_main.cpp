#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tsl/canonical.hpp"
#include "tsl/parse.hpp"
#include "tsl/rewrite.hpp"
#include "tsl/semantics.hpp"
#include "tsl/sequent.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tsl::error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tsl::error("cannot write file: " + path);
  out << content;
}

tsl::sum_net load_net(const std::string& path, const tsl::signature& sig) {
  tsl::sum_net s = tsl::parse_net(read_file(path), sig);
  auto diags = tsl::validate(s, sig);
  if (!diags.empty()) {
    std::string msg = path + " is not a well-formed net:";
    for (const auto& d : diags) msg += "\n  " + d;
    throw tsl::error(msg);
  }
  return s;
}

std::set<tsl::rule_kind> parse_rule_set(const std::string& csv) {
  std::set<tsl::rule_kind> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto comma = csv.find(',', start);
    std::string tok = csv.substr(start, comma == std::string::npos ? csv.size() : comma - start);
    auto b = tok.find_first_not_of(" \t");
    if (b != std::string::npos) {
      auto e = tok.find_last_not_of(" \t");
      tok = tok.substr(b, e - b + 1);
      bool found = false;
      for (tsl::rule_kind k :
           {tsl::rule_kind::orient, tsl::rule_kind::yank, tsl::rule_kind::loop,
            tsl::rule_kind::delta, tsl::rule_kind::zero, tsl::rule_kind::collect,
            tsl::rule_kind::open_measure, tsl::rule_kind::open_control, tsl::rule_kind::equation})
        if (tsl::rule_name(k) == tok) {
          out.insert(k);
          found = true;
        }
      if (!found) throw tsl::error("unknown rewrite rule '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw tsl::error("--rules needs at least one rule name");
  return out;
}

struct common_opts {
  std::string sig_path;
  std::uint64_t fuel = 100000;
  bool use_equations = false;
  std::optional<std::uint64_t> seed;
  bool solo = false;
  std::string rules_csv;

  tsl::rewrite_options rewrite() const { return {use_equations, fuel}; }
  tsl::strategy strat() const {
    tsl::strategy st = seed ? tsl::strategy::seeded(*seed) : tsl::strategy::deterministic();
    st.solo_boxes = solo;
    if (!rules_csv.empty()) st.allowed = parse_rule_set(rules_csv);
    return st;
  }
};

void add_common(CLI::App* sub, common_opts& o, bool with_strategy) {
  sub->add_option("--sig", o.sig_path, "signature file")->required();
  sub->add_option("--fuel", o.fuel, "rewrite step budget (default 100000)");
  sub->add_flag("--equations", o.use_equations, "enable oriented user equations as rewrite rules");
  if (with_strategy) {
    sub->add_option("--seed", o.seed, "randomized strategy with this seed (default: deterministic)");
    sub->add_flag("--solo", o.solo, "force solo expansion of control boxes");
    sub->add_option("--rules", o.rules_csv, "comma-separated rule allow-list");
  }
}

int run_check(const common_opts& o, const std::string& net_path, const std::string& proof_path,
              const std::string& model_path, const std::string& semiring) {
  tsl::signature sig = tsl::parse_signature(read_file(o.sig_path));
  int given = (!net_path.empty()) + (!proof_path.empty()) + (!model_path.empty());
  if (given != 1) throw tsl::error("check: give exactly one of --net, --proof, --model");
  if (!net_path.empty()) {
    tsl::sum_net s = tsl::parse_net(read_file(net_path), sig);
    auto diags = tsl::validate(s, sig);
    if (diags.empty()) {
      std::cout << "ok: " << s.summands.size() << " summand(s), digest " << tsl::digest(s)
                << "\n";
      return 0;
    }
    for (const auto& d : diags) std::cout << d << "\n";
    return 2;
  }
  if (!proof_path.empty()) {
    tsl::proof_script script = tsl::parse_proof_script(read_file(proof_path), sig);
    tsl::check_result cr = tsl::check_script(script, sig);
    if (cr.ok) {
      std::cout << "ok: " << to_string(cr.conclusion) << "\n";
      return 0;
    }
    for (const auto& d : cr.diagnostics) std::cout << d << "\n";
    return 2;
  }
  std::vector<std::string> diags;
  if (semiring == "nat")
    diags = tsl::model_diagnostics(tsl::parse_model_nat(read_file(model_path)), sig);
  else if (semiring == "complex")
    diags = tsl::model_diagnostics(tsl::parse_model_complex(read_file(model_path)), sig);
  else if (semiring == "bool")
    diags = tsl::model_diagnostics(tsl::parse_model_bool(read_file(model_path)), sig);
  else
    throw tsl::error("unknown semiring '" + semiring + "' (nat, complex, bool)");
  if (diags.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& d : diags) std::cout << d << "\n";
  return 2;
}

int run_normalize(const common_opts& o, const std::string& net_path, const std::string& trace_out,
                  const std::string& export_out, std::uint64_t confluence_trials) {
  tsl::signature sig = tsl::parse_signature(read_file(o.sig_path));
  tsl::sum_net s = load_net(net_path, sig);
  tsl::normalize_result res = tsl::normalize(s, sig, o.strat(), o.rewrite());
  std::cout << tsl::net_to_text(res.nf);
  std::cerr << "steps: " << res.trace.size() << ", digest: " << tsl::digest(res.nf) << "\n";
  if (!trace_out.empty()) write_file(trace_out, tsl::trace_to_text(res.trace));
  if (!export_out.empty()) write_file(export_out, tsl::net_to_json(res.nf));
  if (confluence_trials > 0) {
    tsl::confluence_report rep = tsl::check_confluence(s, sig, confluence_trials,
                                                       o.seed.value_or(1), o.rewrite());
    if (!rep.ok) {
      std::cerr << "confluence: " << rep.mismatches.size() << " of " << rep.trials
                << " randomized runs missed the baseline " << rep.baseline_digest << "\n";
      for (const auto& [sd, dg] : rep.mismatches)
        std::cerr << "  seed " << sd << " -> " << dg << "\n";
      return 2;
    }
    std::cerr << "confluence: " << rep.trials << " randomized runs agree on "
              << rep.baseline_digest << "\n";
  }
  return 0;
}

int run_equal(const common_opts& o, const std::string& a_path, const std::string& b_path) {
  tsl::signature sig = tsl::parse_signature(read_file(o.sig_path));
  tsl::sum_net a = load_net(a_path, sig);
  tsl::sum_net b = load_net(b_path, sig);
  if (tsl::equal(a, b, sig, o.rewrite())) {
    std::cout << "equal\n";
    return 0;
  }
  std::cout << "not equal\n";
  return 2;
}

template <class S>
int eval_with(const tsl::signature& sig, const tsl::sum_net& s, const tsl::model<S>& m) {
  auto diags = tsl::model_diagnostics(m, sig);
  if (!diags.empty()) {
    std::string msg = "the model does not interpret the signature:";
    for (const auto& d : diags) msg += "\n  " + d;
    throw tsl::error(msg);
  }
  std::cout << tsl::matrix_to_string(tsl::evaluate(s, m)) << "\n";
  return 0;
}

int run_eval(const common_opts& o, const std::string& net_path, const std::string& model_path,
             const std::string& semiring) {
  tsl::signature sig = tsl::parse_signature(read_file(o.sig_path));
  tsl::sum_net s = load_net(net_path, sig);
  if (semiring == "nat") return eval_with(sig, s, tsl::parse_model_nat(read_file(model_path)));
  if (semiring == "complex")
    return eval_with(sig, s, tsl::parse_model_complex(read_file(model_path)));
  if (semiring == "bool") return eval_with(sig, s, tsl::parse_model_bool(read_file(model_path)));
  throw tsl::error("unknown semiring '" + semiring + "' (nat, complex, bool)");
}

int run_compile(const common_opts& o, const std::string& proof_path, bool to_nf,
                const std::string& export_out) {
  tsl::signature sig = tsl::parse_signature(read_file(o.sig_path));
  tsl::proof_script script = tsl::parse_proof_script(read_file(proof_path), sig);
  tsl::check_result cr = tsl::check_script(script, sig);
  if (!cr.ok) {
    for (const auto& d : cr.diagnostics) std::cout << d << "\n";
    return 2;
  }
  std::cerr << "conclusion: " << to_string(cr.conclusion) << "\n";
  tsl::sum_net n = to_nf ? tsl::cut_eliminate(script.root, sig, o.rewrite())
                         : tsl::proof_to_net(script.root, sig);
  std::cout << tsl::net_to_text(n);
  if (!export_out.empty()) write_file(export_out, tsl::net_to_json(n));
  return 0;
}

int run_replay(const common_opts& o, const std::string& net_path, const std::string& trace_path) {
  tsl::signature sig = tsl::parse_signature(read_file(o.sig_path));
  tsl::sum_net s = load_net(net_path, sig);
  std::vector<tsl::trace_entry> trace = tsl::parse_trace(read_file(trace_path));
  tsl::replay_result res = tsl::replay(s, trace, sig, o.rewrite());
  if (!res.ok) {
    std::cout << "replay failed at step " << res.failed_step << ": " << res.message << "\n";
    return 2;
  }
  std::cout << tsl::net_to_text(res.final_net);
  std::cerr << "replayed " << trace.size() << " step(s)\n";
  return 0;
}

int run_examples() {
  const std::string sig_text =
      "atom Q\n"
      "loop d\n"
      "gen X : Q -> Q\n"
      "gen Y : Q -> Q\n";
  tsl::signature sig = tsl::parse_signature(sig_text);
  std::cout << "# A signature declares atoms, loop labels, and generators:\n"
            << sig_text << "\n";
  const std::string net_text =
      "input in0 : Q\n"
      "output out0 : Q\n"
      "node n0 : eta Q\n"
      "node n1 : eps Q\n"
      "wire in0 -> n1.0\n"
      "wire n0.0 -> n1.1\n"
      "wire n0.1 -> out0\n";
  std::cout << "# A net bends a wire through a cup (eta) and a cap (eps):\n"
            << net_text << "\n";
  tsl::sum_net s = tsl::parse_net(net_text, sig);
  tsl::normalize_result res =
      tsl::normalize(s, sig, tsl::strategy::deterministic(), tsl::rewrite_options{});
  std::cout << "# Normalizing straightens it to an identity wire:\n"
            << tsl::net_to_text(res.nf) << "\n# The trace records each step:\n"
            << tsl::trace_to_text(res.trace);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensor-sum logic: sequent proofs and proof-net rewriting for compact closed "
               "categories with biproducts"};
  app.require_subcommand(1);

  common_opts check_o, norm_o, equal_o, eval_o, compile_o, replay_o;
  std::string check_net, check_proof, check_model, check_semiring = "nat";
  std::string norm_net, norm_trace_out, norm_export;
  std::uint64_t norm_confluence = 0;
  std::string equal_a, equal_b;
  std::string eval_net, eval_model, eval_semiring = "nat";
  std::string compile_proof, compile_export;
  bool compile_nf = false;
  std::string replay_net, replay_trace;

  CLI::App* c_check = app.add_subcommand("check", "validate a net, proof script, or model");
  add_common(c_check, check_o, false);
  c_check->add_option("--net", check_net, "net file to validate");
  c_check->add_option("--proof", check_proof, "proof script to check (incl. annotations)");
  c_check->add_option("--model", check_model, "model file to check against the signature");
  c_check->add_option("--semiring", check_semiring, "model semiring: nat, complex, bool");

  CLI::App* c_norm = app.add_subcommand("normalize", "rewrite a net to normal form");
  add_common(c_norm, norm_o, true);
  c_norm->add_option("net", norm_net, "net file")->required();
  c_norm->add_option("--trace", norm_trace_out, "write the rewrite trace to this file");
  c_norm->add_option("--export", norm_export, "write the normal form as JSON to this file");
  c_norm->add_option("--confluence", norm_confluence,
                     "also re-normalize under N randomized strategies and compare");

  CLI::App* c_equal = app.add_subcommand("equal", "decide equality of two nets");
  add_common(c_equal, equal_o, false);
  c_equal->add_option("a", equal_a, "first net file")->required();
  c_equal->add_option("b", equal_b, "second net file")->required();

  CLI::App* c_eval = app.add_subcommand("eval", "evaluate a net to a matrix under a model");
  add_common(c_eval, eval_o, false);
  c_eval->add_option("net", eval_net, "net file")->required();
  c_eval->add_option("--model", eval_model, "model file")->required();
  c_eval->add_option("--semiring", eval_semiring, "nat, complex, bool (default nat)");

  CLI::App* c_compile = app.add_subcommand("compile", "compile a proof script to its net");
  add_common(c_compile, compile_o, false);
  c_compile->add_option("proof", compile_proof, "proof script file")->required();
  c_compile->add_flag("--normalize", compile_nf, "normalize the compiled net (cut elimination)");
  c_compile->add_option("--export", compile_export, "write the net as JSON to this file");

  CLI::App* c_replay = app.add_subcommand("replay", "re-run a recorded rewrite trace");
  add_common(c_replay, replay_o, false);
  c_replay->add_option("net", replay_net, "net file the trace starts from")->required();
  c_replay->add_option("trace", replay_trace, "trace file")->required();

  CLI::App* c_examples = app.add_subcommand("examples", "print a small worked example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (c_check->parsed())
      return run_check(check_o, check_net, check_proof, check_model, check_semiring);
    if (c_norm->parsed())
      return run_normalize(norm_o, norm_net, norm_trace_out, norm_export, norm_confluence);
    if (c_equal->parsed()) return run_equal(equal_o, equal_a, equal_b);
    if (c_eval->parsed()) return run_eval(eval_o, eval_net, eval_model, eval_semiring);
    if (c_compile->parsed()) return run_compile(compile_o, compile_proof, compile_nf, compile_export);
    if (c_replay->parsed()) return run_replay(replay_o, replay_net, replay_trace);
    if (c_examples->parsed()) return run_examples();
  } catch (const tsl::engine_fault& e) {
    std::cerr << "engine fault: " << e.what() << "\n";
    return 3;
  } catch (const tsl::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
