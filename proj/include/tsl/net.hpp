#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsl/formula.hpp"
#include "tsl/loop.hpp"

namespace tsl {

// A port reference. Node ports: (node id, port index) on the input or output
// face of the node. Boundary ports: (port index) on the net's input or
// output list; boundary inputs act as providers inside the net, boundary
// outputs as consumers.
struct endpoint {
  enum class kind_t : std::uint8_t { node_in, node_out, bnd_in, bnd_out };
  kind_t kind = kind_t::node_in;
  std::int32_t node = -1;  // -1 for boundary endpoints
  std::int32_t port = 0;

  bool is_provider() const { return kind == kind_t::node_out || kind == kind_t::bnd_in; }
  bool is_consumer() const { return kind == kind_t::node_in || kind == kind_t::bnd_out; }

  auto operator<=>(const endpoint&) const = default;
};

endpoint node_in(std::int32_t node, std::int32_t port);
endpoint node_out(std::int32_t node, std::int32_t port);
endpoint bnd_in(std::int32_t port);
endpoint bnd_out(std::int32_t port);

// Directed wire from a provider endpoint to a consumer endpoint. A wire from
// a boundary input straight to a boundary output is a pass-through.
struct wire {
  endpoint from, to;
  auto operator<=>(const wire&) const = default;
};

enum class node_kind : std::uint8_t { generator, eta, eps, inject, project, box };
enum class box_dir : std::uint8_t { measure, control };

struct net;

// One vertex of a net. Port layout by kind:
//   generator: inputs gdom, outputs gcod (atom references, one port each)
//   eta:       inputs [],            outputs [carrier*, carrier]
//   eps:       inputs [carrier, carrier*], outputs []
//   inject:    inputs ports_of(summands[index]), outputs [(+)-fold summands]
//   project:   inputs [(+)-fold summands], outputs ports_of(summands[index])
//   box:       inputs/outputs of the shared branch boundary; control boxes
//              append the index port ((+)_k I) last on the input side,
//              measurement boxes last on the output side.
struct node {
  node_kind kind = node_kind::generator;
  std::string name;                 // generator
  std::vector<formula> gdom, gcod;  // generator
  formula carrier;                  // eta / eps (atom reference)
  std::int32_t index = 0;           // inject / project
  std::vector<formula> summands;    // inject / project
  box_dir dir = box_dir::measure;   // box
  std::vector<net> branches;        // box

  bool operator==(const node&) const;
};

struct boundary {
  std::vector<formula> inputs, outputs;
  bool operator==(const boundary&) const = default;
};

// A simple net: nodes, a perfect matching of ports by wires, and residual
// free loops (a monomial of loop labels). Box branches are nets whose free
// loops carry the branch's scalar weight.
struct net {
  std::vector<node> nodes;
  std::vector<wire> wires;
  boundary bnd;
  loop_monomial free_loops;

  bool operator==(const net&) const;
};

struct summand {
  loop_poly weight;
  net graph;
  bool operator==(const summand&) const = default;
};

// Formal weighted sum of nets over a common boundary. The empty sum is the
// zero morphism.
struct sum_net {
  boundary bnd;
  std::vector<summand> summands;

  static sum_net zero(boundary b);
  static sum_net lift(net n, loop_poly w = loop_poly::one());

  bool operator==(const sum_net&) const = default;
};

// ---- typing ---------------------------------------------------------------

formula fold_sum(const std::vector<formula>& parts);  // left-associated (+)
formula box_index_carrier(std::size_t k);             // (+)_k I, k >= 2

std::vector<formula> node_input_carriers(const node& n);
std::vector<formula> node_output_carriers(const node& n);
formula endpoint_carrier(const net& g, const endpoint& e);

// Dimension polynomial of a formula: dim(atom) labels, dim(I)=1, dim(0)=0,
// products over tensor, sums over direct sum.
loop_poly formula_dim_poly(const formula& f);

// Net-intrinsic well-formedness (wiring, typing, boxes); does not check
// generator declarations against a signature.
std::vector<std::string> structural_diagnostics(const net& g);
std::vector<std::string> structural_diagnostics(const sum_net& s);

// ---- lookups and surgery ---------------------------------------------------

// Index of the unique wire with the given endpoint on the stated side.
std::optional<std::size_t> wire_feeding(const net& g, const endpoint& consumer);
std::optional<std::size_t> wire_leaving(const net& g, const endpoint& provider);

// Delete the given nodes, reconnecting each (consumer port, provider port)
// pair by fusing the wire into the consumer with the wire out of the
// provider. Chains across pairs are resolved; closed rings contribute the
// carrier's dimension polynomial. Returns the total extracted factor.
loop_poly splice_out(net& g, const std::vector<std::int32_t>& dead_nodes,
                     const std::vector<std::pair<endpoint, endpoint>>& throughs);

// Replace a set of nodes by a net fragment. The fragment's boundary ports
// attach where the victims' ports were wired: fragment input i takes over the
// wire that fed input_sites[i] (a victim in-port), fragment output j takes
// over the wire leaving output_sites[j] (a victim out-port). Victim ports not
// listed must be wired victim-to-victim. Pass-through fragment wires and
// feedback wires between victim ports are chased through; closed rings this
// produces contribute the carrier's dimension polynomial to the returned
// factor. The fragment's free loops are merged into the host net.
loop_poly replace_nodes_by_net(net& g, const std::vector<std::int32_t>& victims,
                               const net& frag, const std::vector<endpoint>& input_sites,
                               const std::vector<endpoint>& output_sites);

// A closed chain of 2-port nodes (eta, eps, 1-1 generators) with the label
// it would extract to.
struct linear_cycle {
  std::vector<std::int32_t> nodes;
  loop_label label;
};
std::vector<linear_cycle> find_linear_cycles(const net& g);
// Remove one cycle found by find_linear_cycles.
void remove_cycle(net& g, const linear_cycle& c);
// Remove all linear cycles, returning the product of their labels.
loop_monomial extract_linear_cycles(net& g);

// Move every summand's residual free loops into its weight.
void fold_loops(sum_net& s);
// Total box-expanded weight: sum over summands of weight x free loops x
// product over boxes of (sum over branches of the branch's weight).
loop_poly abstract_weight(const sum_net& s);
loop_poly net_weight_poly(const net& g);

// ---- builders --------------------------------------------------------------

sum_net identity_net(const std::vector<formula>& port_carriers);
sum_net generator_net(const std::string& name, std::vector<formula> dom_ports,
                      std::vector<formula> cod_ports);
// Cup and cap on an arbitrary reduced object; direct sums expand to sums of
// injection-dressed summands, so the result is generally a sum_net.
sum_net eta_net(const formula& x);
sum_net eps_net(const formula& x);
sum_net inject_net(std::int32_t index, std::vector<formula> summand_list);
sum_net project_net(std::int32_t index, std::vector<formula> summand_list);

// ---- combinators (bilinear over summands) ----------------------------------

sum_net compose(const sum_net& f, const sum_net& g);  // f then g
sum_net tensor_product(const sum_net& f, const sum_net& g);
sum_net sum_nets(const sum_net& f, const sum_net& g);
sum_net scale(sum_net f, const loop_poly& w);
sum_net permute_inputs(const sum_net& f, const std::vector<std::size_t>& perm);
sum_net permute_outputs(const sum_net& f, const std::vector<std::size_t>& perm);
// Tie the last n output ports back to the last n input ports (port i+k with
// port i+k, matching carriers), extracting any closed loops this forms.
sum_net trace_last(const sum_net& f, std::size_t n);
// Form a k-branch box (k >= 2) from branch nets over a common boundary.
// Branches whose scalar is a single monomial fold it into branch free loops
// and become box-node branches; otherwise the box is built in expanded form
// (a sum over branches dressed with index injections/projections).
sum_net box_net(const std::vector<sum_net>& branches, box_dir dir);

}  // namespace tsl
