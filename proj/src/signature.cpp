#include "tsl/signature.hpp"

#include <algorithm>
#include <cctype>

namespace tsl {

namespace {

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

}  // namespace

void signature::declare_atom(const std::string& name) {
  if (!valid_name(name)) throw error("invalid atom name: '" + name + "'");
  if (name == "I") throw error("'I' is reserved for the tensor unit");
  if (!atoms_.insert(name).second) throw error("atom '" + name + "' already declared");
}

void signature::declare_generator(generator g) {
  if (!valid_name(g.name)) throw error("invalid generator name: '" + g.name + "'");
  if (gens_.count(g.name)) throw error("generator '" + g.name + "' already declared");
  for (const auto& lists : {&g.dom, &g.cod}) {
    for (const auto& f : *lists) {
      if (!f.is_atom()) throw error("generator '" + g.name + "' has a non-atom port");
      if (!has_atom(f.atom_name()))
        throw error("generator '" + g.name + "' mentions undeclared atom '" + f.atom_name() + "'");
    }
  }
  gens_.emplace(g.name, std::move(g));
}

void signature::declare_loop(const std::string& name) {
  if (!valid_name(name)) throw error("invalid loop label name: '" + name + "'");
  if (!loops_.insert(name).second) throw error("loop label '" + name + "' already declared");
}

void signature::declare_equation(user_equation eq) {
  if (!valid_name(eq.name)) throw error("invalid equation name: '" + eq.name + "'");
  for (const auto& e : eqs_)
    if (e.name == eq.name) throw error("equation '" + eq.name + "' already declared");
  if (!(eq.lhs.bnd == eq.rhs.bnd))
    throw error("equation '" + eq.name + "': sides have different boundaries");
  if (eq.lhs.nodes.empty())
    throw error("equation '" + eq.name + "': left side must contain at least one node");
  if (!eq.lhs.free_loops.empty() || !eq.rhs.free_loops.empty())
    throw error("equation '" + eq.name + "': sides must not carry free loops");
  for (const net* side : {&eq.lhs, &eq.rhs}) {
    auto diags = validate(*side, *this);
    if (!diags.empty())
      throw error("equation '" + eq.name + "': " + diags.front());
    for (const auto& n : side->nodes)
      if (n.kind == node_kind::box)
        throw error("equation '" + eq.name + "': boxes are not allowed in equations");
  }
  // Connectivity of the left side (nodes joined by wires).
  {
    const net& l = eq.lhs;
    std::vector<int> comp(l.nodes.size(), -1);
    std::vector<std::size_t> stack;
    comp[0] = 0;
    stack.push_back(0);
    while (!stack.empty()) {
      std::size_t n = stack.back();
      stack.pop_back();
      for (const auto& w : l.wires) {
        if (w.from.node == static_cast<std::int32_t>(n) && w.to.node >= 0 && comp[w.to.node] < 0) {
          comp[w.to.node] = 0;
          stack.push_back(w.to.node);
        }
        if (w.to.node == static_cast<std::int32_t>(n) && w.from.node >= 0 &&
            comp[w.from.node] < 0) {
          comp[w.from.node] = 0;
          stack.push_back(w.from.node);
        }
      }
    }
    if (std::count(comp.begin(), comp.end(), -1) > 0)
      throw error("equation '" + eq.name + "': left side must be connected");
  }
  eqs_.push_back(std::move(eq));
}

const generator* signature::find_generator(const std::string& name) const {
  auto it = gens_.find(name);
  return it == gens_.end() ? nullptr : &it->second;
}

namespace {

void check_formula_atoms(const formula& f, const signature& sig, std::vector<std::string>& out) {
  switch (f.kind()) {
    case formula::kind_t::zero:
    case formula::kind_t::unit:
      return;
    case formula::kind_t::atom:
      if (!sig.has_atom(f.atom_name()))
        out.push_back("undeclared atom '" + f.atom_name() + "'");
      return;
    case formula::kind_t::tensor:
    case formula::kind_t::sum:
      check_formula_atoms(f.left(), sig, out);
      check_formula_atoms(f.right(), sig, out);
      return;
  }
}

void check_label(const loop_label& l, const signature& sig, std::vector<std::string>& out) {
  switch (l.kind()) {
    case loop_label::kind_t::declared:
      if (!sig.has_loop(l.name())) out.push_back("undeclared loop label '" + l.name() + "'");
      return;
    case loop_label::kind_t::dimension:
      if (!sig.has_atom(l.name()))
        out.push_back("dimension label over undeclared atom '" + l.name() + "'");
      return;
    case loop_label::kind_t::cycle:
      for (const auto& c : l.word())
        if (!sig.find_generator(c.gen))
          out.push_back("cycle label mentions undeclared generator '" + c.gen + "'");
      return;
  }
}

void signature_checks(const net& g, const signature& sig, std::vector<std::string>& out) {
  for (const auto& f : g.bnd.inputs) check_formula_atoms(f, sig, out);
  for (const auto& f : g.bnd.outputs) check_formula_atoms(f, sig, out);
  for (const auto& [l, n] : g.free_loops) check_label(l, sig, out);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const node& n = g.nodes[i];
    const std::string where = "node " + std::to_string(i) + ": ";
    switch (n.kind) {
      case node_kind::generator: {
        const generator* gen = sig.find_generator(n.name);
        if (!gen) {
          out.push_back(where + "undeclared generator '" + n.name + "'");
          break;
        }
        if (n.gdom != gen->dom || n.gcod != gen->cod)
          out.push_back(where + "generator '" + n.name + "' ports differ from its declaration");
        break;
      }
      case node_kind::eta:
      case node_kind::eps:
        check_formula_atoms(n.carrier, sig, out);
        break;
      case node_kind::inject:
      case node_kind::project:
        for (const auto& f : n.summands) check_formula_atoms(f, sig, out);
        break;
      case node_kind::box:
        for (const auto& b : n.branches) signature_checks(b, sig, out);
        break;
    }
  }
}

}  // namespace

std::vector<std::string> validate(const net& g, const signature& sig) {
  std::vector<std::string> out = structural_diagnostics(g);
  signature_checks(g, sig, out);
  return out;
}

std::vector<std::string> validate(const sum_net& s, const signature& sig) {
  std::vector<std::string> out = structural_diagnostics(s);
  for (const auto& sm : s.summands) signature_checks(sm.graph, sig, out);
  return out;
}

}  // namespace tsl
