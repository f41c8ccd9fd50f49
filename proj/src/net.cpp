#include "tsl/net.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace tsl {

endpoint node_in(std::int32_t node, std::int32_t port) {
  return endpoint{endpoint::kind_t::node_in, node, port};
}
endpoint node_out(std::int32_t node, std::int32_t port) {
  return endpoint{endpoint::kind_t::node_out, node, port};
}
endpoint bnd_in(std::int32_t port) { return endpoint{endpoint::kind_t::bnd_in, -1, port}; }
endpoint bnd_out(std::int32_t port) { return endpoint{endpoint::kind_t::bnd_out, -1, port}; }

bool node::operator==(const node& o) const {
  return kind == o.kind && name == o.name && gdom == o.gdom && gcod == o.gcod &&
         carrier == o.carrier && index == o.index && summands == o.summands && dir == o.dir &&
         branches == o.branches;
}

bool net::operator==(const net& o) const {
  return nodes == o.nodes && wires == o.wires && bnd == o.bnd && free_loops == o.free_loops;
}

sum_net sum_net::zero(boundary b) { return sum_net{std::move(b), {}}; }

sum_net sum_net::lift(net n, loop_poly w) {
  sum_net s;
  s.bnd = n.bnd;
  if (!w.is_zero()) s.summands.push_back(summand{std::move(w), std::move(n)});
  return s;
}

// ---- typing ---------------------------------------------------------------

formula fold_sum(const std::vector<formula>& parts) {
  if (parts.empty()) throw error("direct-sum fold of an empty list");
  formula acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = formula::sum(acc, parts[i]);
  return acc;
}

formula box_index_carrier(std::size_t k) {
  if (k < 2) throw error("box index carrier needs at least 2 branches");
  return fold_sum(std::vector<formula>(k, formula::unit()));
}

std::vector<formula> node_input_carriers(const node& n) {
  switch (n.kind) {
    case node_kind::generator:
      return n.gdom;
    case node_kind::eta:
      return {};
    case node_kind::eps:
      return {n.carrier, dual(n.carrier)};
    case node_kind::inject:
      return ports_of(n.summands.at(n.index));
    case node_kind::project:
      return {fold_sum(n.summands)};
    case node_kind::box: {
      auto v = n.branches.at(0).bnd.inputs;
      if (n.dir == box_dir::control) v.push_back(box_index_carrier(n.branches.size()));
      return v;
    }
  }
  throw engine_fault("unreachable node kind");
}

std::vector<formula> node_output_carriers(const node& n) {
  switch (n.kind) {
    case node_kind::generator:
      return n.gcod;
    case node_kind::eta:
      return {dual(n.carrier), n.carrier};
    case node_kind::eps:
      return {};
    case node_kind::inject:
      return {fold_sum(n.summands)};
    case node_kind::project:
      return ports_of(n.summands.at(n.index));
    case node_kind::box: {
      auto v = n.branches.at(0).bnd.outputs;
      if (n.dir == box_dir::measure) v.push_back(box_index_carrier(n.branches.size()));
      return v;
    }
  }
  throw engine_fault("unreachable node kind");
}

formula endpoint_carrier(const net& g, const endpoint& e) {
  switch (e.kind) {
    case endpoint::kind_t::bnd_in:
      return g.bnd.inputs.at(e.port);
    case endpoint::kind_t::bnd_out:
      return g.bnd.outputs.at(e.port);
    case endpoint::kind_t::node_in:
      return node_input_carriers(g.nodes.at(e.node)).at(e.port);
    case endpoint::kind_t::node_out:
      return node_output_carriers(g.nodes.at(e.node)).at(e.port);
  }
  throw engine_fault("unreachable endpoint kind");
}

loop_poly formula_dim_poly(const formula& f) {
  switch (f.kind()) {
    case formula::kind_t::zero:
      return loop_poly::zero();
    case formula::kind_t::unit:
      return loop_poly::one();
    case formula::kind_t::atom:
      return loop_poly::label(loop_label::dimension(f.atom_name()));
    case formula::kind_t::tensor:
      return formula_dim_poly(f.left()) * formula_dim_poly(f.right());
    case formula::kind_t::sum:
      return formula_dim_poly(f.left()) + formula_dim_poly(f.right());
  }
  throw engine_fault("unreachable formula kind");
}

// ---- validation -------------------------------------------------------------

namespace {

bool valid_port_carrier(const formula& f) {
  return is_reduced(f) && !f.is_tensor() && !f.is_unit();
}

void node_diagnostics(const net& g, std::size_t idx, std::vector<std::string>& out) {
  const node& n = g.nodes[idx];
  const std::string where = "node " + std::to_string(idx) + ": ";
  switch (n.kind) {
    case node_kind::generator:
      if (n.name.empty()) out.push_back(where + "generator without a name");
      for (const auto& f : n.gdom)
        if (!f.is_atom()) out.push_back(where + "generator domain entry is not an atom reference");
      for (const auto& f : n.gcod)
        if (!f.is_atom()) out.push_back(where + "generator codomain entry is not an atom reference");
      break;
    case node_kind::eta:
    case node_kind::eps:
      if (!n.carrier.is_atom()) out.push_back(where + "eta/eps carrier must be an atom reference");
      break;
    case node_kind::inject:
    case node_kind::project: {
      if (n.summands.empty()) {
        out.push_back(where + "injection/projection needs a non-empty summand list");
        break;
      }
      for (const auto& f : n.summands) {
        if (!is_reduced(f)) out.push_back(where + "summand formula not reduced: " + to_string(f));
        if (f.is_zero() && n.summands.size() > 1)
          out.push_back(where + "zero summand in a direct sum");
      }
      if (n.index < 0 || static_cast<std::size_t>(n.index) >= n.summands.size())
        out.push_back(where + "summand index out of range");
      break;
    }
    case node_kind::box: {
      if (n.branches.size() < 2) {
        out.push_back(where + "box needs at least 2 branches");
        break;
      }
      for (std::size_t b = 1; b < n.branches.size(); ++b)
        if (!(n.branches[b].bnd == n.branches[0].bnd))
          out.push_back(where + "box branch " + std::to_string(b) + " boundary differs");
      for (std::size_t b = 0; b < n.branches.size(); ++b) {
        auto sub = structural_diagnostics(n.branches[b]);
        for (auto& d : sub) out.push_back(where + "branch " + std::to_string(b) + ": " + d);
      }
      break;
    }
  }
}

}  // namespace

std::vector<std::string> structural_diagnostics(const net& g) {
  std::vector<std::string> out;
  for (const auto& f : g.bnd.inputs)
    if (!valid_port_carrier(f))
      out.push_back("boundary input carrier invalid (one port per factor): " + to_string(f));
  for (const auto& f : g.bnd.outputs)
    if (!valid_port_carrier(f))
      out.push_back("boundary output carrier invalid (one port per factor): " + to_string(f));
  for (std::size_t i = 0; i < g.nodes.size(); ++i) node_diagnostics(g, i, out);
  if (!out.empty()) return out;  // port maps below assume node payloads are sane

  // Perfect matching: every port appears on exactly one wire, with matching
  // carriers and provider->consumer orientation.
  std::map<endpoint, int> uses;
  for (std::size_t w = 0; w < g.wires.size(); ++w) {
    const wire& e = g.wires[w];
    const std::string where = "wire " + std::to_string(w) + ": ";
    if (!e.from.is_provider()) out.push_back(where + "source is not a provider endpoint");
    if (!e.to.is_consumer()) out.push_back(where + "target is not a consumer endpoint");
    for (const endpoint* p : {&e.from, &e.to}) {
      if (p->kind == endpoint::kind_t::node_in || p->kind == endpoint::kind_t::node_out) {
        if (p->node < 0 || static_cast<std::size_t>(p->node) >= g.nodes.size()) {
          out.push_back(where + "node id out of range");
          continue;
        }
      }
      std::size_t limit = 0;
      switch (p->kind) {
        case endpoint::kind_t::bnd_in:
          limit = g.bnd.inputs.size();
          break;
        case endpoint::kind_t::bnd_out:
          limit = g.bnd.outputs.size();
          break;
        case endpoint::kind_t::node_in:
          limit = node_input_carriers(g.nodes[p->node]).size();
          break;
        case endpoint::kind_t::node_out:
          limit = node_output_carriers(g.nodes[p->node]).size();
          break;
      }
      if (p->port < 0 || static_cast<std::size_t>(p->port) >= limit)
        out.push_back(where + "port index out of range");
      else
        uses[*p] += 1;
    }
  }
  if (!out.empty()) return out;

  for (const auto& e : g.wires) {
    formula a = endpoint_carrier(g, e.from);
    formula b = endpoint_carrier(g, e.to);
    if (a != b)
      out.push_back("wire carrier mismatch: " + to_string(a) + " vs " + to_string(b));
  }

  auto expect_one = [&uses, &out](const endpoint& e, const char* what) {
    auto it = uses.find(e);
    int c = it == uses.end() ? 0 : it->second;
    if (c != 1)
      out.push_back(std::string(what) + " port has " + std::to_string(c) +
                    " wires (expected exactly 1)");
  };
  for (std::size_t i = 0; i < g.bnd.inputs.size(); ++i)
    expect_one(bnd_in(static_cast<std::int32_t>(i)), "boundary input");
  for (std::size_t i = 0; i < g.bnd.outputs.size(); ++i)
    expect_one(bnd_out(static_cast<std::int32_t>(i)), "boundary output");
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    auto ins = node_input_carriers(g.nodes[n]);
    auto outs = node_output_carriers(g.nodes[n]);
    for (std::size_t p = 0; p < ins.size(); ++p)
      expect_one(node_in(static_cast<std::int32_t>(n), static_cast<std::int32_t>(p)), "node input");
    for (std::size_t p = 0; p < outs.size(); ++p)
      expect_one(node_out(static_cast<std::int32_t>(n), static_cast<std::int32_t>(p)),
                 "node output");
  }
  return out;
}

std::vector<std::string> structural_diagnostics(const sum_net& s) {
  std::vector<std::string> out;
  for (const auto& f : s.bnd.inputs)
    if (!valid_port_carrier(f)) out.push_back("boundary input carrier invalid: " + to_string(f));
  for (const auto& f : s.bnd.outputs)
    if (!valid_port_carrier(f)) out.push_back("boundary output carrier invalid: " + to_string(f));
  for (std::size_t i = 0; i < s.summands.size(); ++i) {
    const std::string where = "summand " + std::to_string(i) + ": ";
    if (s.summands[i].weight.is_zero()) out.push_back(where + "zero weight");
    if (!(s.summands[i].graph.bnd == s.bnd)) out.push_back(where + "boundary differs from sum");
    for (auto& d : structural_diagnostics(s.summands[i].graph)) out.push_back(where + d);
  }
  return out;
}

// ---- lookups and surgery ----------------------------------------------------

std::optional<std::size_t> wire_feeding(const net& g, const endpoint& consumer) {
  for (std::size_t i = 0; i < g.wires.size(); ++i)
    if (g.wires[i].to == consumer) return i;
  return std::nullopt;
}

std::optional<std::size_t> wire_leaving(const net& g, const endpoint& provider) {
  for (std::size_t i = 0; i < g.wires.size(); ++i)
    if (g.wires[i].from == provider) return i;
  return std::nullopt;
}

namespace {

void erase_nodes(net& g, const std::set<std::int32_t>& dead) {
  if (dead.empty()) return;
  std::vector<std::int32_t> remap(g.nodes.size(), -1);
  std::vector<node> live;
  live.reserve(g.nodes.size() - dead.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (dead.count(static_cast<std::int32_t>(i))) continue;
    remap[i] = static_cast<std::int32_t>(live.size());
    live.push_back(std::move(g.nodes[i]));
  }
  g.nodes = std::move(live);
  for (auto& w : g.wires) {
    for (endpoint* e : {&w.from, &w.to}) {
      if (e->node >= 0) {
        if (remap[e->node] < 0) throw engine_fault("wire references an erased node");
        e->node = remap[e->node];
      }
    }
  }
}

}  // namespace

loop_poly splice_out(net& g, const std::vector<std::int32_t>& dead_nodes,
                     const std::vector<std::pair<endpoint, endpoint>>& throughs) {
  loop_poly factor = loop_poly::one();
  const std::size_t k = throughs.size();
  std::vector<std::size_t> win(k), wout(k);
  std::map<endpoint, std::size_t> by_pout, by_cin;
  for (std::size_t i = 0; i < k; ++i) {
    auto wi = wire_feeding(g, throughs[i].first);
    auto wo = wire_leaving(g, throughs[i].second);
    if (!wi || !wo) throw engine_fault("splice through an unwired port");
    win[i] = *wi;
    wout[i] = *wo;
    by_cin[throughs[i].first] = i;
    by_pout[throughs[i].second] = i;
  }

  std::set<std::size_t> dead_wires;
  std::set<std::int32_t> dead(dead_nodes.begin(), dead_nodes.end());
  for (std::size_t i = 0; i < k; ++i) {
    dead_wires.insert(win[i]);
    dead_wires.insert(wout[i]);
  }
  // Every wire touching a dead node disappears (shared pattern wires).
  for (std::size_t w = 0; w < g.wires.size(); ++w) {
    for (const endpoint* e : {&g.wires[w].from, &g.wires[w].to})
      if (e->node >= 0 && dead.count(e->node)) dead_wires.insert(w);
  }

  std::vector<bool> visited(k, false);
  std::vector<wire> added;
  for (std::size_t i = 0; i < k; ++i) {
    if (visited[i]) continue;
    // Walk backwards to the head of the chain containing i.
    std::size_t j = i;
    bool ring = false;
    for (;;) {
      endpoint u = g.wires[win[j]].from;
      auto it = by_pout.find(u);
      if (it == by_pout.end()) break;
      j = it->second;
      if (j == i) {
        ring = true;
        break;
      }
    }
    if (ring) {
      // Closed circle of spliced pairs: contributes the carrier dimension.
      formula c = endpoint_carrier(g, throughs[i].first);
      factor *= formula_dim_poly(c);
      std::size_t m = i;
      do {
        visited[m] = true;
        endpoint u = g.wires[win[m]].from;
        m = by_pout.at(u);
      } while (m != i);
      continue;
    }
    endpoint u = g.wires[win[j]].from;
    std::size_t m = j;
    for (;;) {
      visited[m] = true;
      endpoint v = g.wires[wout[m]].to;
      auto it = by_cin.find(v);
      if (it == by_cin.end()) {
        added.push_back(wire{u, v});
        break;
      }
      m = it->second;
    }
  }

  std::vector<wire> kept;
  kept.reserve(g.wires.size());
  for (std::size_t w = 0; w < g.wires.size(); ++w)
    if (!dead_wires.count(w)) kept.push_back(g.wires[w]);
  for (auto& w : added) kept.push_back(w);
  g.wires = std::move(kept);
  for (const auto& w : added)
    for (const endpoint* e : {&w.from, &w.to})
      if (e->node >= 0 && dead.count(e->node))
        throw engine_fault("splice reconnected through a dead node");
  erase_nodes(g, dead);
  return factor;
}

loop_poly replace_nodes_by_net(net& g, const std::vector<std::int32_t>& victims,
                               const net& frag, const std::vector<endpoint>& input_sites,
                               const std::vector<endpoint>& output_sites) {
  if (input_sites.size() != frag.bnd.inputs.size() ||
      output_sites.size() != frag.bnd.outputs.size())
    throw engine_fault("replacement sites do not match the fragment boundary");
  for (std::size_t i = 0; i < input_sites.size(); ++i) {
    if (input_sites[i].kind != endpoint::kind_t::node_in)
      throw engine_fault("replacement input site is not a node in-port");
    if (!(endpoint_carrier(g, input_sites[i]) == frag.bnd.inputs[i]))
      throw engine_fault("replacement input carrier mismatch");
  }
  for (std::size_t j = 0; j < output_sites.size(); ++j) {
    if (output_sites[j].kind != endpoint::kind_t::node_out)
      throw engine_fault("replacement output site is not a node out-port");
    if (!(endpoint_carrier(g, output_sites[j]) == frag.bnd.outputs[j]))
      throw engine_fault("replacement output carrier mismatch");
  }

  // Synthetic ports stand in for the fragment boundary: the fragment's wire at
  // bnd_in i re-emerges from a shadow out-port on the victim that owned
  // input_sites[i]; symmetrically for outputs. splice_out then fuses the
  // victims' external wires with the fragment's boundary wires, chasing
  // pass-throughs and feedback into direct wires or dimension rings.
  constexpr std::int32_t shadow = 1 << 20;
  const auto off = static_cast<std::int32_t>(g.nodes.size());
  for (const auto& n : frag.nodes) g.nodes.push_back(n);

  auto shadow_provider = [&](std::size_t i) {
    return node_out(input_sites[i].node, input_sites[i].port + shadow);
  };
  auto shadow_consumer = [&](std::size_t j) {
    return node_in(output_sites[j].node, output_sites[j].port + shadow);
  };
  auto relocate = [&](const endpoint& e) -> endpoint {
    switch (e.kind) {
      case endpoint::kind_t::node_in:
      case endpoint::kind_t::node_out: {
        endpoint r = e;
        r.node += off;
        return r;
      }
      case endpoint::kind_t::bnd_in:
        return shadow_provider(static_cast<std::size_t>(e.port));
      case endpoint::kind_t::bnd_out:
        return shadow_consumer(static_cast<std::size_t>(e.port));
    }
    throw engine_fault("unreachable endpoint kind");
  };
  for (const auto& w : frag.wires) g.wires.push_back(wire{relocate(w.from), relocate(w.to)});

  std::vector<std::pair<endpoint, endpoint>> throughs;
  throughs.reserve(input_sites.size() + output_sites.size());
  for (std::size_t i = 0; i < input_sites.size(); ++i)
    throughs.emplace_back(input_sites[i], shadow_provider(i));
  for (std::size_t j = 0; j < output_sites.size(); ++j)
    throughs.emplace_back(shadow_consumer(j), output_sites[j]);

  loop_poly factor = splice_out(g, victims, throughs);
  g.free_loops = monomial_mul(g.free_loops, frag.free_loops);
  return factor;
}

// ---- linear cycles ----------------------------------------------------------

namespace {

bool cycle_candidate(const node& n) {
  switch (n.kind) {
    case node_kind::eta:
    case node_kind::eps:
      return true;
    case node_kind::generator:
      return n.gdom.size() == 1 && n.gcod.size() == 1;
    default:
      return false;
  }
}

// The two endpoints of a 2-port candidate node.
std::pair<endpoint, endpoint> candidate_ports(std::int32_t id, const node& n) {
  switch (n.kind) {
    case node_kind::eta:
      return {node_out(id, 0), node_out(id, 1)};
    case node_kind::eps:
      return {node_in(id, 0), node_in(id, 1)};
    case node_kind::generator:
      return {node_in(id, 0), node_out(id, 0)};
    default:
      throw engine_fault("candidate_ports on a non-candidate node");
  }
}

// The endpoint at the other end of the wire incident to e.
std::optional<endpoint> peer_of(const net& g, const endpoint& e) {
  if (e.is_provider()) {
    auto w = wire_leaving(g, e);
    if (!w) return std::nullopt;
    return g.wires[*w].to;
  }
  auto w = wire_feeding(g, e);
  if (!w) return std::nullopt;
  return g.wires[*w].from;
}

}  // namespace

std::vector<linear_cycle> find_linear_cycles(const net& g) {
  std::vector<linear_cycle> out;
  std::set<std::int32_t> used;
  for (std::size_t start = 0; start < g.nodes.size(); ++start) {
    std::int32_t s = static_cast<std::int32_t>(start);
    if (used.count(s) || !cycle_candidate(g.nodes[start])) continue;
    // Walk from `start` out of its second port; succeed if we re-enter via
    // the first port having crossed only candidate nodes.
    std::vector<std::int32_t> path;
    std::vector<cycle_letter> word;
    auto [back_port, exit_port] = candidate_ports(s, g.nodes[start]);
    endpoint at = exit_port;
    std::int32_t cur = s;
    bool ok = true;
    for (;;) {
      path.push_back(cur);
      if (g.nodes[cur].kind == node_kind::generator) {
        // Exiting via the output means we traverse the generator forward.
        bool fwd = at.kind == endpoint::kind_t::node_out;
        word.push_back(cycle_letter{g.nodes[cur].name, !fwd});
      }
      auto nxt = peer_of(g, at);
      if (!nxt || nxt->node < 0) {
        ok = false;
        break;
      }
      std::int32_t m = nxt->node;
      if (m == s) {
        ok = *nxt == back_port;
        break;
      }
      if (!cycle_candidate(g.nodes[m]) || std::count(path.begin(), path.end(), m)) {
        ok = false;
        break;
      }
      auto [p0, p1] = candidate_ports(m, g.nodes[m]);
      at = (*nxt == p0) ? p1 : p0;
      cur = m;
    }
    if (!ok) continue;
    loop_label label = word.empty()
                           ? loop_label::dimension(
                                 endpoint_carrier(g, exit_port).atom_name())
                           : loop_label::cycle(word);
    for (auto n : path) used.insert(n);
    out.push_back(linear_cycle{std::move(path), std::move(label)});
  }
  return out;
}

void remove_cycle(net& g, const linear_cycle& c) {
  std::set<std::int32_t> dead(c.nodes.begin(), c.nodes.end());
  std::vector<wire> kept;
  for (const auto& w : g.wires) {
    bool touches = (w.from.node >= 0 && dead.count(w.from.node)) ||
                   (w.to.node >= 0 && dead.count(w.to.node));
    if (!touches) kept.push_back(w);
  }
  g.wires = std::move(kept);
  erase_nodes(g, dead);
}

loop_monomial extract_linear_cycles(net& g) {
  loop_monomial acc;
  for (;;) {
    auto cycles = find_linear_cycles(g);
    if (cycles.empty()) return acc;
    for (const auto& c : cycles) acc[c.label] += 1;
    // Collect ids before removal; remove together (disjoint by construction).
    std::set<std::int32_t> dead;
    for (const auto& c : cycles) dead.insert(c.nodes.begin(), c.nodes.end());
    std::vector<wire> kept;
    for (const auto& w : g.wires) {
      bool touches = (w.from.node >= 0 && dead.count(w.from.node)) ||
                     (w.to.node >= 0 && dead.count(w.to.node));
      if (!touches) kept.push_back(w);
    }
    g.wires = std::move(kept);
    erase_nodes(g, dead);
  }
}

void fold_loops(sum_net& s) {
  for (auto& sm : s.summands) {
    if (!sm.graph.free_loops.empty()) {
      sm.weight *= loop_poly::monomial(sm.graph.free_loops);
      sm.graph.free_loops.clear();
    }
  }
}

loop_poly net_weight_poly(const net& g) {
  loop_poly acc = loop_poly::monomial(g.free_loops);
  for (const auto& n : g.nodes) {
    if (n.kind != node_kind::box) continue;
    loop_poly branch_sum = loop_poly::zero();
    for (const auto& b : n.branches) branch_sum += net_weight_poly(b);
    acc *= branch_sum;
  }
  return acc;
}

loop_poly abstract_weight(const sum_net& s) {
  loop_poly acc = loop_poly::zero();
  for (const auto& sm : s.summands) acc += sm.weight * net_weight_poly(sm.graph);
  return acc;
}

// ---- builders ----------------------------------------------------------------

sum_net identity_net(const std::vector<formula>& port_carriers) {
  net g;
  for (const auto& f : port_carriers) {
    if (!valid_port_carrier(f)) throw error("identity: invalid port carrier " + to_string(f));
  }
  g.bnd.inputs = port_carriers;
  g.bnd.outputs = port_carriers;
  for (std::size_t i = 0; i < port_carriers.size(); ++i)
    g.wires.push_back(wire{bnd_in(static_cast<std::int32_t>(i)),
                           bnd_out(static_cast<std::int32_t>(i))});
  return sum_net::lift(std::move(g));
}

sum_net generator_net(const std::string& name, std::vector<formula> dom_ports,
                      std::vector<formula> cod_ports) {
  for (const auto& f : dom_ports)
    if (!f.is_atom()) throw error("generator domain entries must be atom references");
  for (const auto& f : cod_ports)
    if (!f.is_atom()) throw error("generator codomain entries must be atom references");
  net g;
  node n;
  n.kind = node_kind::generator;
  n.name = name;
  n.gdom = dom_ports;
  n.gcod = cod_ports;
  g.nodes.push_back(std::move(n));
  g.bnd.inputs = std::move(dom_ports);
  g.bnd.outputs = std::move(cod_ports);
  for (std::size_t i = 0; i < g.bnd.inputs.size(); ++i)
    g.wires.push_back(wire{bnd_in(static_cast<std::int32_t>(i)),
                           node_in(0, static_cast<std::int32_t>(i))});
  for (std::size_t i = 0; i < g.bnd.outputs.size(); ++i)
    g.wires.push_back(wire{node_out(0, static_cast<std::int32_t>(i)),
                           bnd_out(static_cast<std::int32_t>(i))});
  return sum_net::lift(std::move(g));
}

sum_net inject_net(std::int32_t index, std::vector<formula> summand_list) {
  if (summand_list.empty()) throw error("injection needs a non-empty summand list");
  if (index < 0 || static_cast<std::size_t>(index) >= summand_list.size())
    throw error("injection index out of range");
  for (const auto& f : summand_list)
    if (!is_reduced(f)) throw error("injection summand not reduced: " + to_string(f));
  net g;
  node n;
  n.kind = node_kind::inject;
  n.index = index;
  n.summands = summand_list;
  g.bnd.inputs = ports_of(summand_list[index]);
  g.bnd.outputs = {fold_sum(summand_list)};
  g.nodes.push_back(std::move(n));
  for (std::size_t i = 0; i < g.bnd.inputs.size(); ++i)
    g.wires.push_back(wire{bnd_in(static_cast<std::int32_t>(i)),
                           node_in(0, static_cast<std::int32_t>(i))});
  g.wires.push_back(wire{node_out(0, 0), bnd_out(0)});
  return sum_net::lift(std::move(g));
}

sum_net project_net(std::int32_t index, std::vector<formula> summand_list) {
  if (summand_list.empty()) throw error("projection needs a non-empty summand list");
  if (index < 0 || static_cast<std::size_t>(index) >= summand_list.size())
    throw error("projection index out of range");
  for (const auto& f : summand_list)
    if (!is_reduced(f)) throw error("projection summand not reduced: " + to_string(f));
  net g;
  node n;
  n.kind = node_kind::project;
  n.index = index;
  n.summands = summand_list;
  g.bnd.inputs = {fold_sum(summand_list)};
  g.bnd.outputs = ports_of(summand_list[index]);
  g.nodes.push_back(std::move(n));
  g.wires.push_back(wire{bnd_in(0), node_in(0, 0)});
  for (std::size_t i = 0; i < g.bnd.outputs.size(); ++i)
    g.wires.push_back(wire{node_out(0, static_cast<std::int32_t>(i)),
                           bnd_out(static_cast<std::int32_t>(i))});
  return sum_net::lift(std::move(g));
}

namespace {

std::vector<std::size_t> group_perm(const std::vector<std::size_t>& group_sizes,
                                    const std::vector<std::size_t>& order) {
  std::vector<std::size_t> starts(group_sizes.size(), 0);
  for (std::size_t i = 1; i < group_sizes.size(); ++i)
    starts[i] = starts[i - 1] + group_sizes[i - 1];
  std::vector<std::size_t> perm;
  for (auto g : order)
    for (std::size_t k = 0; k < group_sizes[g]; ++k) perm.push_back(starts[g] + k);
  return perm;
}

}  // namespace

sum_net eta_net(const formula& x_in) {
  formula x = reduce(x_in);
  switch (x.kind()) {
    case formula::kind_t::unit: {
      net g;  // empty scalar net
      return sum_net::lift(std::move(g));
    }
    case formula::kind_t::zero:
      return sum_net::zero(boundary{{}, {formula::zero()}});
    case formula::kind_t::atom: {
      net g;
      node n;
      n.kind = node_kind::eta;
      n.carrier = x;
      g.nodes.push_back(std::move(n));
      g.bnd.outputs = {dual(x), x};
      g.wires.push_back(wire{node_out(0, 0), bnd_out(0)});
      g.wires.push_back(wire{node_out(0, 1), bnd_out(1)});
      return sum_net::lift(std::move(g));
    }
    case formula::kind_t::tensor: {
      formula l = x.left(), r = x.right();
      sum_net t = tensor_product(eta_net(l), eta_net(r));
      // outputs [l*, l, r*, r] -> [r*, l*, l, r]
      std::size_t pl = ports_of(l).size(), pr = ports_of(r).size();
      auto perm = group_perm({pl, pl, pr, pr}, {2, 0, 1, 3});
      return permute_outputs(t, perm);
    }
    case formula::kind_t::sum: {
      formula l = x.left(), r = x.right();
      std::vector<formula> plain = {l, r};
      std::vector<formula> duals = {dual(l), dual(r)};
      sum_net acc = sum_net::zero(
          boundary{{}, {fold_sum(duals), fold_sum(plain)}});
      for (std::int32_t k = 0; k < 2; ++k) {
        sum_net inner = eta_net(plain[k]);
        sum_net dressed = compose(
            inner, tensor_product(inject_net(k, duals), inject_net(k, plain)));
        acc = sum_nets(acc, dressed);
      }
      return acc;
    }
  }
  throw engine_fault("unreachable formula kind");
}

sum_net eps_net(const formula& x_in) {
  formula x = reduce(x_in);
  switch (x.kind()) {
    case formula::kind_t::unit: {
      net g;
      return sum_net::lift(std::move(g));
    }
    case formula::kind_t::zero:
      return sum_net::zero(boundary{{formula::zero()}, {}});
    case formula::kind_t::atom: {
      net g;
      node n;
      n.kind = node_kind::eps;
      n.carrier = x;
      g.nodes.push_back(std::move(n));
      g.bnd.inputs = {x, dual(x)};
      g.wires.push_back(wire{bnd_in(0), node_in(0, 0)});
      g.wires.push_back(wire{bnd_in(1), node_in(0, 1)});
      return sum_net::lift(std::move(g));
    }
    case formula::kind_t::tensor: {
      formula l = x.left(), r = x.right();
      sum_net t = tensor_product(eps_net(l), eps_net(r));
      // inputs [l, l*, r, r*] -> [l, r, r*, l*]
      std::size_t pl = ports_of(l).size(), pr = ports_of(r).size();
      auto perm = group_perm({pl, pl, pr, pr}, {0, 2, 3, 1});
      return permute_inputs(t, perm);
    }
    case formula::kind_t::sum: {
      formula l = x.left(), r = x.right();
      std::vector<formula> plain = {l, r};
      std::vector<formula> duals = {dual(l), dual(r)};
      sum_net acc = sum_net::zero(
          boundary{{fold_sum(plain), fold_sum(duals)}, {}});
      for (std::int32_t k = 0; k < 2; ++k) {
        sum_net dressed = compose(
            tensor_product(project_net(k, plain), project_net(k, duals)),
            eps_net(plain[k]));
        acc = sum_nets(acc, dressed);
      }
      return acc;
    }
  }
  throw engine_fault("unreachable formula kind");
}

// ---- combinators ---------------------------------------------------------------

sum_net compose(const sum_net& f, const sum_net& g) {
  if (!(f.bnd.outputs == g.bnd.inputs))
    throw error("compose boundary mismatch");
  sum_net out;
  out.bnd = boundary{f.bnd.inputs, g.bnd.outputs};
  for (const auto& sf : f.summands) {
    for (const auto& sg : g.summands) {
      net n;
      n.bnd = out.bnd;
      n.nodes = sf.graph.nodes;
      std::int32_t offset = static_cast<std::int32_t>(n.nodes.size());
      n.nodes.insert(n.nodes.end(), sg.graph.nodes.begin(), sg.graph.nodes.end());
      n.free_loops = monomial_mul(sf.graph.free_loops, sg.graph.free_loops);

      const std::size_t seam = f.bnd.outputs.size();
      std::vector<endpoint> provider(seam), consumer(seam);
      for (const auto& w : sf.graph.wires) {
        if (w.to.kind == endpoint::kind_t::bnd_out)
          provider[w.to.port] = w.from;
        else
          n.wires.push_back(w);
      }
      auto shift = [offset](endpoint e) {
        if (e.node >= 0) e.node += offset;
        return e;
      };
      for (const auto& w : sg.graph.wires) {
        if (w.from.kind == endpoint::kind_t::bnd_in)
          consumer[w.from.port] = shift(w.to);
        else
          n.wires.push_back(wire{shift(w.from), shift(w.to)});
      }
      for (std::size_t k = 0; k < seam; ++k)
        n.wires.push_back(wire{provider[k], consumer[k]});

      loop_monomial extracted = extract_linear_cycles(n);
      loop_poly w = sf.weight * sg.weight;
      if (!extracted.empty()) w *= loop_poly::monomial(extracted);
      if (!w.is_zero()) out.summands.push_back(summand{std::move(w), std::move(n)});
    }
  }
  return out;
}

sum_net tensor_product(const sum_net& f, const sum_net& g) {
  sum_net out;
  out.bnd.inputs = f.bnd.inputs;
  out.bnd.inputs.insert(out.bnd.inputs.end(), g.bnd.inputs.begin(), g.bnd.inputs.end());
  out.bnd.outputs = f.bnd.outputs;
  out.bnd.outputs.insert(out.bnd.outputs.end(), g.bnd.outputs.begin(), g.bnd.outputs.end());
  const std::int32_t in_off = static_cast<std::int32_t>(f.bnd.inputs.size());
  const std::int32_t out_off = static_cast<std::int32_t>(f.bnd.outputs.size());
  for (const auto& sf : f.summands) {
    for (const auto& sg : g.summands) {
      net n;
      n.bnd = out.bnd;
      n.nodes = sf.graph.nodes;
      std::int32_t offset = static_cast<std::int32_t>(n.nodes.size());
      n.nodes.insert(n.nodes.end(), sg.graph.nodes.begin(), sg.graph.nodes.end());
      n.free_loops = monomial_mul(sf.graph.free_loops, sg.graph.free_loops);
      n.wires = sf.graph.wires;
      for (auto w : sg.graph.wires) {
        for (endpoint* e : {&w.from, &w.to}) {
          if (e->node >= 0)
            e->node += offset;
          else if (e->kind == endpoint::kind_t::bnd_in)
            e->port += in_off;
          else
            e->port += out_off;
        }
        n.wires.push_back(w);
      }
      out.summands.push_back(summand{sf.weight * sg.weight, std::move(n)});
    }
  }
  return out;
}

sum_net sum_nets(const sum_net& f, const sum_net& g) {
  if (!(f.bnd == g.bnd)) throw error("sum of nets with different boundaries");
  sum_net out = f;
  out.summands.insert(out.summands.end(), g.summands.begin(), g.summands.end());
  return out;
}

sum_net scale(sum_net f, const loop_poly& w) {
  if (w.is_zero()) return sum_net::zero(f.bnd);
  for (auto& s : f.summands) s.weight *= w;
  return f;
}

namespace {

std::vector<std::size_t> inverse_perm(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= perm.size() || seen[perm[i]]) throw error("invalid permutation");
    seen[perm[i]] = true;
    inv[perm[i]] = i;
  }
  return inv;
}

}  // namespace

sum_net permute_inputs(const sum_net& f, const std::vector<std::size_t>& perm) {
  if (perm.size() != f.bnd.inputs.size()) throw error("input permutation size mismatch");
  auto inv = inverse_perm(perm);
  sum_net out = f;
  out.bnd.inputs.clear();
  for (auto p : perm) out.bnd.inputs.push_back(f.bnd.inputs[p]);
  for (auto& s : out.summands) {
    s.graph.bnd = out.bnd;
    for (auto& w : s.graph.wires)
      for (endpoint* e : {&w.from, &w.to})
        if (e->kind == endpoint::kind_t::bnd_in)
          e->port = static_cast<std::int32_t>(inv[e->port]);
  }
  return out;
}

sum_net permute_outputs(const sum_net& f, const std::vector<std::size_t>& perm) {
  if (perm.size() != f.bnd.outputs.size()) throw error("output permutation size mismatch");
  auto inv = inverse_perm(perm);
  sum_net out = f;
  out.bnd.outputs.clear();
  for (auto p : perm) out.bnd.outputs.push_back(f.bnd.outputs[p]);
  for (auto& s : out.summands) {
    s.graph.bnd = out.bnd;
    for (auto& w : s.graph.wires)
      for (endpoint* e : {&w.from, &w.to})
        if (e->kind == endpoint::kind_t::bnd_out)
          e->port = static_cast<std::int32_t>(inv[e->port]);
  }
  return out;
}

sum_net trace_last(const sum_net& f, std::size_t n) {
  if (n > f.bnd.inputs.size() || n > f.bnd.outputs.size())
    throw error("trace width exceeds boundary");
  const std::size_t in0 = f.bnd.inputs.size() - n;
  const std::size_t out0 = f.bnd.outputs.size() - n;
  for (std::size_t t = 0; t < n; ++t)
    if (f.bnd.inputs[in0 + t] != f.bnd.outputs[out0 + t])
      throw error("trace carrier mismatch at tied port " + std::to_string(t));

  sum_net out;
  out.bnd.inputs.assign(f.bnd.inputs.begin(), f.bnd.inputs.begin() + in0);
  out.bnd.outputs.assign(f.bnd.outputs.begin(), f.bnd.outputs.begin() + out0);
  for (const auto& s : f.summands) {
    net g = s.graph;
    loop_poly factor = loop_poly::one();
    for (std::size_t t = 0; t < n; ++t) {
      endpoint ein = bnd_in(static_cast<std::int32_t>(in0 + t));
      endpoint eout = bnd_out(static_cast<std::int32_t>(out0 + t));
      auto wi = wire_leaving(g, ein);
      auto wo = wire_feeding(g, eout);
      if (!wi || !wo) throw engine_fault("trace on an unwired boundary port");
      if (*wi == *wo) {
        // Pass-through straight from the tied input to the tied output.
        factor *= formula_dim_poly(f.bnd.inputs[in0 + t]);
        g.wires.erase(g.wires.begin() + static_cast<std::ptrdiff_t>(*wi));
      } else {
        endpoint x = g.wires[*wo].from;
        endpoint y = g.wires[*wi].to;
        std::size_t a = std::max(*wi, *wo), b = std::min(*wi, *wo);
        g.wires.erase(g.wires.begin() + static_cast<std::ptrdiff_t>(a));
        g.wires.erase(g.wires.begin() + static_cast<std::ptrdiff_t>(b));
        g.wires.push_back(wire{x, y});
      }
    }
    g.bnd = out.bnd;
    loop_monomial extracted = extract_linear_cycles(g);
    if (!extracted.empty()) factor *= loop_poly::monomial(extracted);
    loop_poly w = s.weight * factor;
    if (!w.is_zero()) out.summands.push_back(summand{std::move(w), std::move(g)});
  }
  return out;
}

sum_net box_net(const std::vector<sum_net>& branches, box_dir dir) {
  if (branches.size() < 2) throw error("box needs at least 2 branches");
  const boundary common = branches[0].bnd;
  for (const auto& b : branches)
    if (!(b.bnd == common)) throw error("box branches must share a boundary");

  bool all_pure = true;
  for (const auto& b : branches) {
    if (b.summands.size() != 1 || !b.summands[0].weight.is_single_monomial()) {
      all_pure = false;
      break;
    }
  }

  const std::size_t k = branches.size();
  if (all_pure) {
    node bx;
    bx.kind = node_kind::box;
    bx.dir = dir;
    for (const auto& b : branches) {
      net br = b.summands[0].graph;
      br.free_loops = monomial_mul(br.free_loops, b.summands[0].weight.as_monomial());
      bx.branches.push_back(std::move(br));
    }
    net g;
    g.bnd = common;
    if (dir == box_dir::measure)
      g.bnd.outputs.push_back(box_index_carrier(k));
    else
      g.bnd.inputs.push_back(box_index_carrier(k));
    g.nodes.push_back(std::move(bx));
    auto ins = node_input_carriers(g.nodes[0]);
    auto outs = node_output_carriers(g.nodes[0]);
    for (std::size_t i = 0; i < ins.size(); ++i)
      g.wires.push_back(wire{bnd_in(static_cast<std::int32_t>(i)),
                             node_in(0, static_cast<std::int32_t>(i))});
    for (std::size_t i = 0; i < outs.size(); ++i)
      g.wires.push_back(wire{node_out(0, static_cast<std::int32_t>(i)),
                             bnd_out(static_cast<std::int32_t>(i))});
    return sum_net::lift(std::move(g));
  }

  // Expanded form: sum over branches dressed with an index state.
  std::vector<formula> units(k, formula::unit());
  boundary bb = common;
  if (dir == box_dir::measure)
    bb.outputs.push_back(box_index_carrier(k));
  else
    bb.inputs.push_back(box_index_carrier(k));
  sum_net acc = sum_net::zero(bb);
  for (std::size_t i = 0; i < k; ++i) {
    sum_net tag = dir == box_dir::measure ? inject_net(static_cast<std::int32_t>(i), units)
                                          : project_net(static_cast<std::int32_t>(i), units);
    acc = sum_nets(acc, tensor_product(branches[i], tag));
  }
  return acc;
}

}  // namespace tsl
