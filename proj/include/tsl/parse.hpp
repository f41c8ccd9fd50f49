#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsl/net.hpp"
#include "tsl/rewrite.hpp"
#include "tsl/semantics.hpp"
#include "tsl/sequent.hpp"
#include "tsl/signature.hpp"

namespace tsl {

// Formulae: `0`, `I`, atoms, postfix `*`, `@` tensor, `+` sum; `@` binds
// tighter, both left-associative. Inverse of to_string(formula).
formula parse_formula(const std::string& text);

// Loop monomials: `1` or `*`-separated label factors (`d`, `dim(Q)`,
// `cyc(g,h')`). Polynomials: `+`-separated terms `coeff * monomial`.
// Inverses of the corresponding to_string forms.
loop_monomial parse_loop_monomial(const std::string& text);
loop_poly parse_loop_poly(const std::string& text);

// Signature files: `atom Q`, `loop d`, `gen X : Q -> Q` (comma-separated
// atom references on both sides), and `eq name : <expr> = <expr>` where the
// expression grammar is generator names, id(F), eta(F), eps(F),
// inj(k; F0, F1, ...), proj(k; ...), tensor `@`, and diagrammatic
// composition `;` (left to right). `#` starts a comment.
signature parse_signature(const std::string& text);
// Serializes declarations (atoms, loops, generators). Equations are stored
// as nets, not expressions, and are emitted as comments only.
std::string signature_to_text(const signature& sig);

// Net files. Statements end at line breaks:
//   input <name> : <formula>       output <name> : <formula>
//   zero                           (no summands: the zero morphism)
//   summand [ <poly> ] { ... }     (weight brackets optional)
// and inside a summand (or at top level for a single-summand net):
//   node <name> : eta <formula> | eps <formula> | gen <name>
//                | inject <k> [ F | F | ... ] | project <k> [ ... ]
//   box <name> : measure|control { branch [ <monomial> ] { ... } ... }
//   wire <provider> -> <consumer>  (port refs: <bndname>, <node>.<k>, <box>.index)
//   loops <monomial>
// Box branches are full net blocks with their own input/output lines.
sum_net parse_net(const std::string& text, const signature& sig);
std::string net_to_text(const sum_net& s);

// Model files: `dim Q = 2`, `loop d = <scalar>`, `matrix X = [[...],[...]]`
// (row-major, rows = codomain). Scalars: nat = unsigned integers; complex =
// `a`, `bi`, `a+bi`, `a-bi` with decimal parts; bool = 0/1.
model<std::uint64_t> parse_model_nat(const std::string& text);
model<std::complex<double>> parse_model_complex(const std::string& text);
model<bool_rig> parse_model_bool(const std::string& text);

// Proof scripts: one inference per line,
//   <id> = <rule>(<premise ids>; <args>) [ : <sequent annotation> ]
// Rules: id, gen, eta, zero, i_intro, exch_l, exch_r, tensor_l, tensor_r,
// shift_lr, shift_rl, inj, proj, cut, mix, sum, measure, control.
// The root is the last line.
struct script_line {
  std::string id;
  proof_ptr node;
  bool has_annotation = false;
  sequent annotation;             // formulas (and scalar when annotated)
  bool annotation_has_scalar = false;
};
struct proof_script {
  std::vector<script_line> lines;
  proof_ptr root;
};
proof_script parse_proof_script(const std::string& text, const signature& sig);

// Check the whole script: the root proof plus every line's annotation.
check_result check_script(const proof_script& script, const signature& sig);

// Rewrite traces: `step <i>: <rule> @ <location> -> <digest>` per line.
std::string trace_to_text(const std::vector<trace_entry>& trace);
std::vector<trace_entry> parse_trace(const std::string& text);

// One-way JSON export of a sum net (boundary, weights, nodes, wires).
std::string net_to_json(const sum_net& s);

}  // namespace tsl
