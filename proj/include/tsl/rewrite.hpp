#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tsl/net.hpp"
#include "tsl/signature.hpp"

namespace tsl {

// The rewrite rules, in the engine's deterministic priority order.
enum class rule_kind : std::uint8_t {
  orient,        // eta/eps on a dualled atom: relabel to the plain atom, swapping ports
  yank,          // eta/eps pair joined by a wire: splice (or a dimension circle)
  loop,          // closed chain of 2-port nodes: extract its loop label
  delta,         // inject wired into project: splice on match, drop summand on mismatch
  zero,          // summand with a 0-typed port: drop it
  collect,       // isomorphic summands: merge, adding weights
  open_measure,  // measurement box: one summand per branch, tagging the index port
  open_control,  // control box: select the branch of an attached index state,
                 //   or expand against projector states
  equation,      // oriented user equation, applied as a subgraph replacement
};

std::string rule_name(rule_kind r);

struct rewrite_options {
  bool use_equations = false;  // enable `equation` steps
  std::uint64_t fuel = 100000;  // max steps before the engine gives up
};

// How step targets are picked. Deterministic: first redex in priority order.
// Random: uniform over all redexes (including solo box openings that the
// deterministic strategy would bypass in favour of an index match).
struct strategy {
  bool random = false;
  std::uint64_t seed = 0;
  bool solo_boxes = false;           // force solo expansion of control boxes
  std::set<rule_kind> allowed;       // empty = every rule enabled

  bool permits(rule_kind r) const { return allowed.empty() || allowed.count(r) != 0; }

  static strategy deterministic() { return {}; }
  static strategy seeded(std::uint64_t seed) {
    strategy st;
    st.random = true;
    st.seed = seed;
    return st;
  }
};

// One rewriting opportunity. `location` identifies it uniquely within its
// enumeration, stable across runs, and is what traces record.
struct redex {
  rule_kind rule = rule_kind::yank;
  std::size_t summand = 0;
  std::size_t other = 0;    // collect: the second summand
  std::int32_t a = -1;      // yank: eta node; delta: inject; open_*: box node
  std::int32_t b = -1;      // yank: eps; delta: project; open_control: index state (-1 = solo)
  linear_cycle cycle;       // loop
  std::size_t eq = 0;       // equation: index into signature equations
  std::vector<std::pair<std::int32_t, std::int32_t>> match;  // equation: lhs node -> host node
  std::string location;
};

// Enumerate redexes in deterministic order. With `include_alternatives` the
// list also carries solo openings for control boxes that have an index match
// (random strategies draw from this wider pool; replay searches it).
std::vector<redex> find_redexes(const sum_net& s, const signature& sig,
                                const rewrite_options& opts, bool include_alternatives);

// Apply one redex (found on this exact net) and return the result.
sum_net apply_redex(const sum_net& s, const redex& r, const signature& sig);

bool is_normal(const sum_net& s, const signature& sig, const rewrite_options& opts);

struct trace_entry {
  rule_kind rule = rule_kind::yank;
  std::string location;
  std::string digest;  // digest of the whole sum after the step
};

struct normalize_result {
  sum_net nf;
  std::vector<trace_entry> trace;
};

// Rewrite to normal form under the given strategy. Throws engine_fault when
// fuel runs out.
normalize_result normalize(sum_net s, const signature& sig, const strategy& st,
                           const rewrite_options& opts);

// Decide equality of morphisms: same boundary, then normalize both sides
// deterministically and compare canonical forms.
bool equal(const sum_net& a, const sum_net& b, const signature& sig,
           const rewrite_options& opts);

struct confluence_report {
  bool ok = true;
  std::size_t trials = 0;
  std::string baseline_digest;
  // (seed, digest) of every randomized run that missed the baseline.
  std::vector<std::pair<std::uint64_t, std::string>> mismatches;
};

// Normalize once deterministically, then `trials` times under seeded random
// strategies, and compare the normal forms.
confluence_report check_confluence(const sum_net& s, const signature& sig,
                                   std::size_t trials, std::uint64_t seed,
                                   const rewrite_options& opts);

struct replay_result {
  bool ok = true;
  std::size_t failed_step = 0;  // valid when !ok
  std::string message;
  sum_net final_net;
};

// Re-run a recorded trace: at each step the redex with the recorded rule and
// location must exist and must reproduce the recorded digest.
replay_result replay(sum_net s, const std::vector<trace_entry>& trace,
                     const signature& sig, const rewrite_options& opts);

}  // namespace tsl
