#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tsl/net.hpp"
#include "tsl/rewrite.hpp"
#include "tsl/signature.hpp"

namespace tsl {

// A sequent: antecedent and succedent formula lists plus the loop scalar.
// The scalar of a checked proof is always the abstract weight of its
// compiled net, so circular cuts and box sums are accounted exactly.
struct sequent {
  std::vector<formula> ante, succ;
  loop_poly scalar = loop_poly::one();

  bool same_shape(const sequent& other) const {
    return ante == other.ante && succ == other.succ;
  }
};

std::string to_string(const sequent& s);

// Inference rules. Leaves are the axiom group (id, gen, eta, zero, i_intro).
enum class rule_tag : std::uint8_t {
  id_ax,     // A |- A for a declared atom reference
  gen_ax,    // dom |- cod for a declared generator
  eta_ax,    // |- X*, X (the unit rule)
  zero_ax,   // Gamma |- Delta ; 0 for any lists
  i_intro,   // |- I
  exch_l,    // swap adjacent antecedent formulas at (pos, pos+1)
  exch_r,    // swap adjacent succedent formulas
  tensor_l,  // fuse adjacent antecedent formulas into a tensor
  tensor_r,  // fuse adjacent succedent formulas
  shift_lr,  // move the first antecedent formula to the succedent front, dualled
  shift_rl,  // move the first succedent formula to the antecedent front, dualled
  inj,       // dress the last succedent formula as a direct-sum injection
  proj,      // dress the first antecedent formula as a direct-sum projection
  cut,       // trace the last antecedent formula against the equal last succedent
  mix,       // juxtapose two proofs (comma is a tensor on both sides)
  sum_rule,  // weighted formal sum of two proofs of the same sequent
  measure,   // bundle k proofs of one sequent into a measurement box, tag out
  control,   // bundle k proofs into a control box, tag in
};

std::string rule_tag_name(rule_tag t);

struct proof;
using proof_ptr = std::shared_ptr<const proof>;

// One inference. Scripts share premises by id, so proofs form a DAG; the
// meaning is the unfolded tree.
struct proof {
  rule_tag rule = rule_tag::id_ax;
  std::vector<proof_ptr> premises;

  // principal arguments (rule-specific)
  std::string gen_name;             // gen_ax
  formula f;                        // id_ax (atom ref), eta_ax (any reduced formula)
  std::vector<formula> gamma, delta;  // zero_ax
  std::size_t pos = 0;              // exch_*/tensor_* position; inj/proj index
  std::vector<formula> parts;       // inj/proj summand list
  loop_poly w1 = loop_poly::one(), w2 = loop_poly::one();  // sum_rule weights

  std::string label;  // script id, for diagnostics; empty for library-built proofs
};

proof_ptr make_proof(proof p);

struct check_result {
  bool ok = true;
  std::vector<std::string> diagnostics;
  sequent conclusion;  // valid when ok
};

// Verify every inference against its rule schema, compiling bottom-up; the
// conclusion carries the computed loop scalar.
check_result check_proof(const proof_ptr& p, const signature& sig);

// Compile a checked proof to its net. Boundary: ports of the antecedent
// tensor to ports of the succedent tensor. Throws error if the proof fails
// to check.
sum_net proof_to_net(const proof_ptr& p, const signature& sig);

// The two-premise cut, expanded through mix and exchanges to the one-sequent
// trace form: p1 proves Gamma |- Delta, A and p2 proves A, Gamma' |- Delta'.
proof_ptr derived_cut(const proof_ptr& p1, const proof_ptr& p2, const signature& sig);

// Compile and normalize: by cut elimination the result denotes the same
// morphism with no trace redexes left.
sum_net cut_eliminate(const proof_ptr& p, const signature& sig, const rewrite_options& opts);

}  // namespace tsl
