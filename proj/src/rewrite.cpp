#include "tsl/rewrite.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "tsl/canonical.hpp"

namespace tsl {

std::string rule_name(rule_kind r) {
  switch (r) {
    case rule_kind::orient: return "orient";
    case rule_kind::yank: return "yank";
    case rule_kind::loop: return "loop";
    case rule_kind::delta: return "delta";
    case rule_kind::zero: return "zero";
    case rule_kind::collect: return "collect";
    case rule_kind::open_measure: return "open-measure";
    case rule_kind::open_control: return "open-control";
    case rule_kind::equation: return "eq";
  }
  throw engine_fault("unreachable rule kind");
}

namespace {

// ---- fragment builders ------------------------------------------------------

net identity_frag(const std::vector<formula>& carriers) {
  net g;
  g.bnd.inputs = carriers;
  g.bnd.outputs = carriers;
  for (std::size_t i = 0; i < carriers.size(); ++i)
    g.wires.push_back(wire{bnd_in(static_cast<std::int32_t>(i)),
                           bnd_out(static_cast<std::int32_t>(i))});
  return g;
}

node index_state_node(node_kind kind, std::int32_t index, std::size_t k) {
  node st;
  st.kind = kind;
  st.index = index;
  st.summands.assign(k, formula::unit());
  return st;
}

// Branch i of a measurement box, with an index state emitting the tag on a
// new last output port.
net measure_branch_frag(const net& branch, std::int32_t i, std::size_t k) {
  net frag = branch;
  const auto st = static_cast<std::int32_t>(frag.nodes.size());
  frag.nodes.push_back(index_state_node(node_kind::inject, i, k));
  const auto port = static_cast<std::int32_t>(frag.bnd.outputs.size());
  frag.bnd.outputs.push_back(box_index_carrier(k));
  frag.wires.push_back(wire{node_out(st, 0), bnd_out(port)});
  return frag;
}

// Branch i of a control box opened without an index match: a projector state
// consumes the tag on a new last input port.
net control_branch_frag(const net& branch, std::int32_t i, std::size_t k) {
  net frag = branch;
  const auto st = static_cast<std::int32_t>(frag.nodes.size());
  frag.nodes.push_back(index_state_node(node_kind::project, i, k));
  const auto port = static_cast<std::int32_t>(frag.bnd.inputs.size());
  frag.bnd.inputs.push_back(box_index_carrier(k));
  frag.wires.push_back(wire{bnd_in(port), node_in(st, 0)});
  return frag;
}

bool is_index_state(const node& n, node_kind kind, std::size_t k) {
  if (n.kind != kind || n.summands.size() != k) return false;
  for (const auto& f : n.summands)
    if (!f.is_unit()) return false;
  return true;
}

std::vector<endpoint> in_sites(std::int32_t id, std::size_t count) {
  std::vector<endpoint> v;
  for (std::size_t p = 0; p < count; ++p) v.push_back(node_in(id, static_cast<std::int32_t>(p)));
  return v;
}

std::vector<endpoint> out_sites(std::int32_t id, std::size_t count) {
  std::vector<endpoint> v;
  for (std::size_t p = 0; p < count; ++p) v.push_back(node_out(id, static_cast<std::int32_t>(p)));
  return v;
}

// ---- locations --------------------------------------------------------------

std::string loc_summand(std::size_t s) { return "s" + std::to_string(s); }

std::string loc_nodes(std::size_t s, const std::vector<std::int32_t>& nodes) {
  std::string out = loc_summand(s) + ":";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += "+";
    out += "n" + std::to_string(nodes[i]);
  }
  return out;
}

// ---- equation matching ------------------------------------------------------

// All injective embeddings of the (connected, box-free) pattern into g that
// preserve node payloads and internal wires exactly.
std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> equation_matches(
    const net& g, const net& pattern) {
  const auto m = pattern.nodes.size();
  std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> out;
  if (m == 0 || g.nodes.size() < m) return out;

  std::set<wire> host_wires(g.wires.begin(), g.wires.end());
  std::vector<std::int32_t> phi(m, -1);
  std::vector<bool> used(g.nodes.size(), false);

  // Internal pattern wires whose endpoints are both mapped once depth d is
  // assigned, keyed by the larger endpoint depth.
  std::vector<std::vector<wire>> checks(m);
  for (const auto& w : pattern.wires) {
    if (w.from.node < 0 || w.to.node < 0) continue;
    checks[static_cast<std::size_t>(std::max(w.from.node, w.to.node))].push_back(w);
  }

  auto consistent = [&](std::size_t d) {
    for (const auto& w : checks[d]) {
      wire img{node_out(phi[static_cast<std::size_t>(w.from.node)], w.from.port),
               node_in(phi[static_cast<std::size_t>(w.to.node)], w.to.port)};
      if (!host_wires.count(img)) return false;
    }
    return true;
  };

  std::function<void(std::size_t)> descend = [&](std::size_t d) {
    if (d == m) {
      std::vector<std::pair<std::int32_t, std::int32_t>> match;
      for (std::size_t i = 0; i < m; ++i)
        match.emplace_back(static_cast<std::int32_t>(i), phi[i]);
      out.push_back(std::move(match));
      return;
    }
    for (std::size_t h = 0; h < g.nodes.size(); ++h) {
      if (used[h]) continue;
      if (!(g.nodes[h] == pattern.nodes[d])) continue;
      phi[d] = static_cast<std::int32_t>(h);
      if (consistent(d)) {
        used[h] = true;
        descend(d + 1);
        used[h] = false;
      }
      phi[d] = -1;
    }
  };
  descend(0);
  return out;
}

// Attachment sites of a pattern match: where each pattern boundary port's
// node-side endpoint lands in the host.
void match_sites(const net& pattern,
                 const std::vector<std::pair<std::int32_t, std::int32_t>>& match,
                 std::vector<endpoint>& inputs, std::vector<endpoint>& outputs) {
  std::map<std::int32_t, std::int32_t> phi(match.begin(), match.end());
  inputs.assign(pattern.bnd.inputs.size(), endpoint{});
  outputs.assign(pattern.bnd.outputs.size(), endpoint{});
  for (const auto& w : pattern.wires) {
    if (w.from.kind == endpoint::kind_t::bnd_in) {
      if (w.to.node < 0) throw engine_fault("pattern has a pass-through wire");
      inputs[static_cast<std::size_t>(w.from.port)] = node_in(phi.at(w.to.node), w.to.port);
    }
    if (w.to.kind == endpoint::kind_t::bnd_out) {
      if (w.from.node < 0) throw engine_fault("pattern has a pass-through wire");
      outputs[static_cast<std::size_t>(w.to.port)] = node_out(phi.at(w.from.node), w.from.port);
    }
  }
}

}  // namespace

// ---- enumeration ------------------------------------------------------------

std::vector<redex> find_redexes(const sum_net& s, const signature& sig,
                                const rewrite_options& opts, bool include_alternatives) {
  std::vector<redex> out;

  auto add = [&](redex r) { out.push_back(std::move(r)); };

  // orient
  for (std::size_t si = 0; si < s.summands.size(); ++si) {
    const net& g = s.summands[si].graph;
    for (std::size_t ni = 0; ni < g.nodes.size(); ++ni) {
      const auto& n = g.nodes[ni];
      if ((n.kind != node_kind::eta && n.kind != node_kind::eps) || !n.carrier.is_atom() ||
          !n.carrier.atom_dualled())
        continue;
      redex r;
      r.rule = rule_kind::orient;
      r.summand = si;
      r.a = static_cast<std::int32_t>(ni);
      r.location = loc_nodes(si, {r.a});
      add(std::move(r));
    }
  }

  // yank
  for (std::size_t si = 0; si < s.summands.size(); ++si) {
    const net& g = s.summands[si].graph;
    std::set<std::pair<std::int32_t, std::int32_t>> seen;
    for (const auto& w : g.wires) {
      if (w.from.kind != endpoint::kind_t::node_out || w.to.kind != endpoint::kind_t::node_in)
        continue;
      if (g.nodes[static_cast<std::size_t>(w.from.node)].kind != node_kind::eta) continue;
      if (g.nodes[static_cast<std::size_t>(w.to.node)].kind != node_kind::eps) continue;
      if (!seen.insert({w.from.node, w.to.node}).second) continue;
      redex r;
      r.rule = rule_kind::yank;
      r.summand = si;
      r.a = w.from.node;
      r.b = w.to.node;
      r.location = loc_nodes(si, {r.a, r.b});
      add(std::move(r));
    }
  }

  // loop
  for (std::size_t si = 0; si < s.summands.size(); ++si) {
    for (auto& c : find_linear_cycles(s.summands[si].graph)) {
      redex r;
      r.rule = rule_kind::loop;
      r.summand = si;
      r.cycle = c;
      r.location = loc_summand(si) + ":loop(" + loc_nodes(si, c.nodes).substr(loc_summand(si).size() + 1) + ")";
      add(std::move(r));
    }
  }

  // delta
  for (std::size_t si = 0; si < s.summands.size(); ++si) {
    const net& g = s.summands[si].graph;
    for (const auto& w : g.wires) {
      if (w.from.kind != endpoint::kind_t::node_out || w.to.kind != endpoint::kind_t::node_in)
        continue;
      const auto& a = g.nodes[static_cast<std::size_t>(w.from.node)];
      const auto& b = g.nodes[static_cast<std::size_t>(w.to.node)];
      if (a.kind != node_kind::inject || b.kind != node_kind::project) continue;
      redex r;
      r.rule = rule_kind::delta;
      r.summand = si;
      r.a = w.from.node;
      r.b = w.to.node;
      r.location = loc_nodes(si, {r.a, r.b});
      add(std::move(r));
    }
  }

  // zero
  for (std::size_t si = 0; si < s.summands.size(); ++si) {
    const net& g = s.summands[si].graph;
    bool dead = s.summands[si].weight.is_zero();
    for (const auto& f : g.bnd.inputs) dead = dead || f.is_zero();
    for (const auto& f : g.bnd.outputs) dead = dead || f.is_zero();
    for (const auto& w : g.wires) {
      if (dead) break;
      dead = endpoint_carrier(g, w.from).is_zero();
    }
    if (dead) {
      redex r;
      r.rule = rule_kind::zero;
      r.summand = si;
      r.location = loc_summand(si);
      add(std::move(r));
    }
  }

  // collect
  if (s.summands.size() > 1) {
    std::vector<std::string> keys(s.summands.size());
    for (std::size_t i = 0; i < s.summands.size(); ++i)
      keys[i] = canonical_net_string(s.summands[i].graph);
    for (std::size_t i = 0; i + 1 < s.summands.size(); ++i)
      for (std::size_t j = i + 1; j < s.summands.size(); ++j)
        if (keys[i] == keys[j]) {
          redex r;
          r.rule = rule_kind::collect;
          r.summand = i;
          r.other = j;
          r.location = loc_summand(i) + "+" + loc_summand(j);
          add(std::move(r));
        }
  }

  // open_measure
  for (std::size_t si = 0; si < s.summands.size(); ++si) {
    const net& g = s.summands[si].graph;
    for (std::size_t ni = 0; ni < g.nodes.size(); ++ni) {
      if (g.nodes[ni].kind != node_kind::box || g.nodes[ni].dir != box_dir::measure) continue;
      redex r;
      r.rule = rule_kind::open_measure;
      r.summand = si;
      r.a = static_cast<std::int32_t>(ni);
      r.location = loc_nodes(si, {r.a});
      add(std::move(r));
    }
  }

  // open_control
  for (std::size_t si = 0; si < s.summands.size(); ++si) {
    const net& g = s.summands[si].graph;
    for (std::size_t ni = 0; ni < g.nodes.size(); ++ni) {
      const auto& n = g.nodes[ni];
      if (n.kind != node_kind::box || n.dir != box_dir::control) continue;
      const auto id = static_cast<std::int32_t>(ni);
      const auto k = n.branches.size();
      const auto idx_port = static_cast<std::int32_t>(n.branches[0].bnd.inputs.size());
      auto w = wire_feeding(g, node_in(id, idx_port));
      if (!w) throw engine_fault("control box index port is unwired");
      const endpoint& src = g.wires[*w].from;
      std::int32_t state = -1;
      if (src.kind == endpoint::kind_t::node_out &&
          is_index_state(g.nodes[static_cast<std::size_t>(src.node)], node_kind::inject, k))
        state = src.node;
      if (state >= 0) {
        redex r;
        r.rule = rule_kind::open_control;
        r.summand = si;
        r.a = id;
        r.b = state;
        r.location = loc_nodes(si, {id}) + ":match(n" + std::to_string(state) + ")";
        add(std::move(r));
        if (!include_alternatives) continue;
      }
      redex r;
      r.rule = rule_kind::open_control;
      r.summand = si;
      r.a = id;
      r.b = -1;
      r.location = loc_nodes(si, {id}) + ":solo";
      add(std::move(r));
    }
  }

  // equation
  if (opts.use_equations) {
    for (std::size_t si = 0; si < s.summands.size(); ++si) {
      const net& g = s.summands[si].graph;
      for (std::size_t ei = 0; ei < sig.equations().size(); ++ei) {
        const auto& eq = sig.equations()[ei];
        for (auto& match : equation_matches(g, eq.lhs)) {
          redex r;
          r.rule = rule_kind::equation;
          r.summand = si;
          r.eq = ei;
          r.match = match;
          std::vector<std::int32_t> hosts;
          for (auto& [l, h] : match) hosts.push_back(h);
          r.location = loc_summand(si) + ":eq:" + eq.name + "@" +
                       loc_nodes(si, hosts).substr(loc_summand(si).size() + 1);
          add(std::move(r));
        }
      }
    }
  }

  return out;
}

// ---- application ------------------------------------------------------------

namespace {

void erase_summand(sum_net& s, std::size_t i) {
  s.summands.erase(s.summands.begin() + static_cast<std::ptrdiff_t>(i));
}

}  // namespace

sum_net apply_redex(const sum_net& s0, const redex& r, const signature& sig) {
  sum_net s = s0;
  if (r.summand >= s.summands.size()) throw engine_fault("redex summand out of range");

  switch (r.rule) {
    case rule_kind::orient: {
      net& g = s.summands[r.summand].graph;
      node& n = g.nodes[static_cast<std::size_t>(r.a)];
      if ((n.kind != node_kind::eta && n.kind != node_kind::eps) || !n.carrier.is_atom() ||
          !n.carrier.atom_dualled())
        throw engine_fault("stale orient redex");
      // eta(A*) emits [A, A*] where eta(A) emits [A*, A]; the node's delta
      // tensor is symmetric, so relabelling plus a port swap is exact.
      const bool provider = n.kind == node_kind::eta;
      for (auto& w : g.wires) {
        endpoint& e = provider ? w.from : w.to;
        if (e.node == r.a &&
            e.kind == (provider ? endpoint::kind_t::node_out : endpoint::kind_t::node_in))
          e.port = 1 - e.port;
      }
      n.carrier = formula::atom(n.carrier.atom_name(), false);
      break;
    }

    case rule_kind::yank: {
      net& g = s.summands[r.summand].graph;
      const auto& eta = g.nodes[static_cast<std::size_t>(r.a)];
      if (eta.kind != node_kind::eta ||
          g.nodes[static_cast<std::size_t>(r.b)].kind != node_kind::eps)
        throw engine_fault("stale yank redex");
      // Locate one joining wire; the remaining ports carry the spliced line.
      std::int32_t sp = -1, tp = -1;
      for (const auto& w : g.wires)
        if (w.from == node_out(r.a, 0) || w.from == node_out(r.a, 1))
          if (w.to == node_in(r.b, 0) || w.to == node_in(r.b, 1)) {
            sp = w.from.port;
            tp = w.to.port;
            break;
          }
      if (sp < 0) throw engine_fault("stale yank redex");
      endpoint keep_out = node_out(r.a, 1 - sp);
      endpoint keep_in = node_in(r.b, 1 - tp);
      net frag = identity_frag({endpoint_carrier(g, keep_in)});
      loop_poly factor = replace_nodes_by_net(g, {r.a, r.b}, frag, {keep_in}, {keep_out});
      s.summands[r.summand].weight *= factor;
      break;
    }

    case rule_kind::loop: {
      net& g = s.summands[r.summand].graph;
      remove_cycle(g, r.cycle);
      s.summands[r.summand].weight *= loop_poly::label(r.cycle.label);
      break;
    }

    case rule_kind::delta: {
      net& g = s.summands[r.summand].graph;
      const auto& inj = g.nodes[static_cast<std::size_t>(r.a)];
      const auto& prj = g.nodes[static_cast<std::size_t>(r.b)];
      if (inj.kind != node_kind::inject || prj.kind != node_kind::project)
        throw engine_fault("stale delta redex");
      if (inj.index != prj.index) {
        erase_summand(s, r.summand);
        break;
      }
      auto carriers = ports_of(inj.summands[static_cast<std::size_t>(inj.index)]);
      net frag = identity_frag(carriers);
      loop_poly factor = replace_nodes_by_net(g, {r.a, r.b}, frag,
                                              in_sites(r.a, carriers.size()),
                                              out_sites(r.b, carriers.size()));
      s.summands[r.summand].weight *= factor;
      break;
    }

    case rule_kind::zero: {
      erase_summand(s, r.summand);
      break;
    }

    case rule_kind::collect: {
      if (r.other >= s.summands.size() || r.other <= r.summand)
        throw engine_fault("stale collect redex");
      s.summands[r.summand].weight += s.summands[r.other].weight;
      erase_summand(s, r.other);
      break;
    }

    case rule_kind::open_measure: {
      const net g = s.summands[r.summand].graph;  // copy: the summand is replaced
      const loop_poly w = s.summands[r.summand].weight;
      const auto& box = g.nodes[static_cast<std::size_t>(r.a)];
      if (box.kind != node_kind::box || box.dir != box_dir::measure)
        throw engine_fault("stale box redex");
      const auto k = box.branches.size();
      const auto nin = box.branches[0].bnd.inputs.size();
      const auto nout = box.branches[0].bnd.outputs.size();
      std::vector<summand> repl;
      for (std::size_t i = 0; i < k; ++i) {
        net h = g;
        net frag = measure_branch_frag(box.branches[i], static_cast<std::int32_t>(i), k);
        loop_poly factor = replace_nodes_by_net(h, {r.a}, frag, in_sites(r.a, nin),
                                                out_sites(r.a, nout + 1));
        repl.push_back(summand{w * factor, std::move(h)});
      }
      erase_summand(s, r.summand);
      s.summands.insert(s.summands.begin() + static_cast<std::ptrdiff_t>(r.summand),
                        repl.begin(), repl.end());
      break;
    }

    case rule_kind::open_control: {
      const net g = s.summands[r.summand].graph;
      const loop_poly w = s.summands[r.summand].weight;
      const auto& box = g.nodes[static_cast<std::size_t>(r.a)];
      if (box.kind != node_kind::box || box.dir != box_dir::control)
        throw engine_fault("stale box redex");
      const auto k = box.branches.size();
      const auto nin = box.branches[0].bnd.inputs.size();
      const auto nout = box.branches[0].bnd.outputs.size();
      if (r.b >= 0) {
        // Index match: embed the selected branch, consuming the state.
        const auto& st = g.nodes[static_cast<std::size_t>(r.b)];
        if (!is_index_state(st, node_kind::inject, k)) throw engine_fault("stale state redex");
        net h = g;
        net frag = box.branches[static_cast<std::size_t>(st.index)];
        loop_poly factor = replace_nodes_by_net(h, {r.a, r.b}, frag, in_sites(r.a, nin),
                                                out_sites(r.a, nout));
        s.summands[r.summand] = summand{w * factor, std::move(h)};
        break;
      }
      // Solo: expand against projector states.
      std::vector<summand> repl;
      for (std::size_t i = 0; i < k; ++i) {
        net h = g;
        net frag = control_branch_frag(box.branches[i], static_cast<std::int32_t>(i), k);
        loop_poly factor = replace_nodes_by_net(h, {r.a}, frag, in_sites(r.a, nin + 1),
                                                out_sites(r.a, nout));
        repl.push_back(summand{w * factor, std::move(h)});
      }
      erase_summand(s, r.summand);
      s.summands.insert(s.summands.begin() + static_cast<std::ptrdiff_t>(r.summand),
                        repl.begin(), repl.end());
      break;
    }

    case rule_kind::equation: {
      net& g = s.summands[r.summand].graph;
      const auto& eq = sig.equations().at(r.eq);
      std::vector<endpoint> inputs, outputs;
      match_sites(eq.lhs, r.match, inputs, outputs);
      std::vector<std::int32_t> victims;
      for (auto& [l, h] : r.match) victims.push_back(h);
      loop_poly factor = replace_nodes_by_net(g, victims, eq.rhs, inputs, outputs);
      s.summands[r.summand].weight *= factor;
      break;
    }
  }

  fold_loops(s);
  return s;
}

bool is_normal(const sum_net& s, const signature& sig, const rewrite_options& opts) {
  return find_redexes(s, sig, opts, false).empty();
}

// ---- normalization ----------------------------------------------------------

normalize_result normalize(sum_net s, const signature& sig, const strategy& st,
                           const rewrite_options& opts) {
  fold_loops(s);
  normalize_result res;
  std::mt19937_64 rng(st.seed);
  for (std::uint64_t step = 0;; ++step) {
    auto pool = find_redexes(s, sig, opts, st.random || st.solo_boxes);
    std::vector<redex> usable;
    for (auto& r : pool) {
      if (!st.permits(r.rule)) continue;
      if (st.solo_boxes && r.rule == rule_kind::open_control && r.b >= 0) continue;
      usable.push_back(std::move(r));
    }
    if (usable.empty()) break;
    if (step >= opts.fuel) throw engine_fault("rewrite fuel exhausted");
    std::size_t pick = 0;
    if (st.random)
      pick = static_cast<std::size_t>(rng() % usable.size());
    const redex& r = usable[pick];
    s = apply_redex(s, r, sig);
    res.trace.push_back(trace_entry{r.rule, r.location, digest(s)});
  }
  res.nf = std::move(s);
  return res;
}

bool equal(const sum_net& a, const sum_net& b, const signature& sig,
           const rewrite_options& opts) {
  if (!(a.bnd == b.bnd)) return false;
  auto na = normalize(a, sig, strategy::deterministic(), opts);
  auto nb = normalize(b, sig, strategy::deterministic(), opts);
  return canonical_sum_string(na.nf) == canonical_sum_string(nb.nf);
}

confluence_report check_confluence(const sum_net& s, const signature& sig,
                                   std::size_t trials, std::uint64_t seed,
                                   const rewrite_options& opts) {
  confluence_report rep;
  rep.trials = trials;
  auto base = normalize(s, sig, strategy::deterministic(), opts);
  rep.baseline_digest = digest(base.nf);
  std::string base_key = canonical_sum_string(base.nf);
  for (std::size_t t = 0; t < trials; ++t) {
    std::uint64_t trial_seed = seed + t;
    auto alt = normalize(s, sig, strategy::seeded(trial_seed), opts);
    if (canonical_sum_string(alt.nf) != base_key) {
      rep.ok = false;
      rep.mismatches.emplace_back(trial_seed, digest(alt.nf));
    }
  }
  return rep;
}

replay_result replay(sum_net s, const std::vector<trace_entry>& trace,
                     const signature& sig, const rewrite_options& opts) {
  replay_result res;
  fold_loops(s);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    auto pool = find_redexes(s, sig, opts, true);
    const redex* found = nullptr;
    for (const auto& r : pool)
      if (r.rule == trace[i].rule && r.location == trace[i].location) {
        found = &r;
        break;
      }
    if (!found) {
      res.ok = false;
      res.failed_step = i;
      res.message = "no redex " + rule_name(trace[i].rule) + " @ " + trace[i].location;
      res.final_net = std::move(s);
      return res;
    }
    s = apply_redex(s, *found, sig);
    if (digest(s) != trace[i].digest) {
      res.ok = false;
      res.failed_step = i;
      res.message = "digest mismatch after " + rule_name(trace[i].rule) + " @ " +
                    trace[i].location + ": got " + digest(s) + ", recorded " + trace[i].digest;
      res.final_net = std::move(s);
      return res;
    }
  }
  res.final_net = std::move(s);
  return res;
}

}  // namespace tsl
