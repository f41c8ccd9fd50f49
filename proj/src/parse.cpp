#include "tsl/parse.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tsl {

namespace {

// ---- character cursor --------------------------------------------------------

struct cursor {
  const std::string& s;
  std::size_t i = 0;

  void skip_ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  bool done() {
    skip_ws();
    return i >= s.size();
  }
  char peek() {
    skip_ws();
    return i < s.size() ? s[i] : '\0';
  }
  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  void expect(char c, const std::string& what) {
    if (!eat(c))
      throw error(what + ": expected '" + std::string(1, c) + "' at \"" + rest() + "\"");
  }
  // Matches a fixed token; tokens ending in a word character must not be
  // followed by one (so "I" does not match the prefix of "Int").
  bool eat_word(const std::string& w) {
    skip_ws();
    if (s.compare(i, w.size(), w) != 0) return false;
    char last = w.back();
    bool wordy = std::isalnum(static_cast<unsigned char>(last)) || last == '_';
    std::size_t end = i + w.size();
    if (wordy && end < s.size() &&
        (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
      return false;
    i = end;
    return true;
  }
  std::string ident(const std::string& what) {
    skip_ws();
    std::size_t b = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    if (b == i || std::isdigit(static_cast<unsigned char>(s[b])))
      throw error(what + ": expected a name at \"" + rest(b) + "\"");
    return s.substr(b, i - b);
  }
  std::uint64_t integer(const std::string& what) {
    skip_ws();
    std::size_t b = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (b == i) throw error(what + ": expected a number at \"" + rest(b) + "\"");
    return std::stoull(s.substr(b, i - b));
  }
  std::string rest(std::size_t from = std::string::npos) const {
    std::size_t b = from == std::string::npos ? i : from;
    if (b >= s.size()) return "<end>";
    return s.substr(b, std::min<std::size_t>(24, s.size() - b));
  }
};

void expect_end(cursor& c, const std::string& what) {
  if (!c.done()) throw error(what + ": trailing input at \"" + c.rest() + "\"");
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Split on a delimiter at parenthesis/bracket depth zero. Always returns at
// least one segment.
std::vector<std::string> split_top(const std::string& s, char delim) {
  std::vector<std::string> out;
  int depth = 0;
  std::string curr;
  for (char ch : s) {
    if (ch == '(' || ch == '[') ++depth;
    if (ch == ')' || ch == ']') --depth;
    if (ch == delim && depth == 0) {
      out.push_back(curr);
      curr.clear();
    } else {
      curr += ch;
    }
  }
  out.push_back(curr);
  return out;
}

// ---- formula grammar -----------------------------------------------------------

formula parse_sum_expr(cursor& c);

formula parse_primary(cursor& c) {
  if (c.eat('(')) {
    formula f = parse_sum_expr(c);
    c.expect(')', "formula");
    return f;
  }
  if (c.eat('0')) return formula::zero();
  if (c.eat_word("I")) return formula::unit();
  return formula::atom(c.ident("formula"));
}

formula parse_postfix(cursor& c) {
  formula f = parse_primary(c);
  while (c.eat('*')) f = dual(f);
  return f;
}

formula parse_tensor_expr(cursor& c) {
  formula f = parse_postfix(c);
  while (c.eat('@')) f = formula::tensor(f, parse_postfix(c));
  return f;
}

formula parse_sum_expr(cursor& c) {
  formula f = parse_tensor_expr(c);
  while (c.eat('+')) f = formula::sum(f, parse_tensor_expr(c));
  return f;
}

std::vector<formula> parse_formula_list_to_end(cursor& c) {
  std::vector<formula> out;
  if (c.done()) return out;
  out.push_back(parse_sum_expr(c));
  while (c.eat(',')) out.push_back(parse_sum_expr(c));
  return out;
}

formula parse_atom_ref(cursor& c) {
  formula f = parse_postfix(c);
  if (!f.is_atom()) throw error("expected an atom reference, got " + to_string(f));
  return f;
}

// ---- loop label grammar ----------------------------------------------------------

// `dim` / `cyc` act as keywords only when a '(' follows, so plain declared
// labels may reuse the names. On success the cursor sits before the '('.
bool at_call(cursor& c, const std::string& w) {
  std::size_t save = c.i;
  if (c.eat_word(w) && c.peek() == '(') return true;
  c.i = save;
  return false;
}

loop_label parse_label(cursor& c) {
  if (at_call(c, "dim")) {
    c.expect('(', "dim label");
    std::string a = c.ident("dim label");
    c.expect(')', "dim label");
    return loop_label::dimension(a);
  }
  if (at_call(c, "cyc")) {
    c.expect('(', "cycle label");
    std::vector<cycle_letter> word;
    do {
      std::string g = c.ident("cycle label");
      word.push_back(cycle_letter{g, c.eat('\'')});
    } while (c.eat(','));
    c.expect(')', "cycle label");
    return loop_label::cycle(std::move(word));
  }
  return loop_label::declared(c.ident("loop label"));
}

loop_monomial parse_monomial(cursor& c) {
  loop_monomial m;
  for (;;) {
    if (c.eat('1')) {
      // the empty monomial; contributes no factor
    } else {
      ++m[parse_label(c)];
    }
    if (!c.eat('*')) break;
  }
  return m;
}

loop_poly parse_poly(cursor& c) {
  loop_poly p = loop_poly::zero();
  for (;;) {
    if (std::isdigit(static_cast<unsigned char>(c.peek()))) {
      std::uint64_t coeff = c.integer("polynomial");
      if (c.eat('*'))
        p += loop_poly::monomial(parse_monomial(c), coeff);
      else
        p += loop_poly::constant(coeff);
    } else {
      p += loop_poly::monomial(parse_monomial(c), 1);
    }
    if (!c.eat('+')) break;
  }
  return p;
}

// ---- file lines -------------------------------------------------------------------

struct numbered_line {
  std::size_t num = 0;
  std::string text;
};

std::vector<numbered_line> logical_lines(const std::string& text) {
  std::vector<numbered_line> out;
  std::size_t num = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string raw =
        nl == std::string::npos ? text.substr(start) : text.substr(start, nl - start);
    ++num;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    raw = trim(raw);
    if (!raw.empty()) out.push_back({num, raw});
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out;
}

[[noreturn]] void fail_line(const numbered_line& l, const std::string& what) {
  throw error("line " + std::to_string(l.num) + ": " + what);
}

bool starts_with_word(const std::string& text, const std::string& w) {
  cursor c{text};
  return c.eat_word(w);
}

std::string join_formulas(const std::vector<formula>& fs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) out += sep;
    out += to_string(fs[i]);
  }
  return out;
}

}  // namespace

// ---- public scalar parsers ------------------------------------------------------

formula parse_formula(const std::string& text) {
  cursor c{text};
  formula f = parse_sum_expr(c);
  expect_end(c, "formula");
  return f;
}

loop_monomial parse_loop_monomial(const std::string& text) {
  cursor c{text};
  loop_monomial m = parse_monomial(c);
  expect_end(c, "monomial");
  return m;
}

loop_poly parse_loop_poly(const std::string& text) {
  cursor c{text};
  if (c.eat('0')) {
    expect_end(c, "polynomial");
    return loop_poly::zero();
  }
  loop_poly p = parse_poly(c);
  expect_end(c, "polynomial");
  return p;
}

// ---- signature files --------------------------------------------------------------

namespace {

sum_net parse_eq_seq(cursor& c, const signature& sig);

sum_net parse_eq_injproj(cursor& c, bool is_inj) {
  const std::string what = is_inj ? "inj" : "proj";
  c.expect('(', what);
  auto k = static_cast<std::int32_t>(c.integer(what));
  c.expect(';', what);
  std::vector<formula> parts;
  do {
    formula f = parse_sum_expr(c);
    if (!is_reduced(f))
      throw error(what + ": summand formulas must be reduced, got " + to_string(f));
    parts.push_back(f);
  } while (c.eat(','));
  c.expect(')', what);
  return is_inj ? inject_net(k, std::move(parts)) : project_net(k, std::move(parts));
}

sum_net parse_eq_prim(cursor& c, const signature& sig) {
  if (c.eat('(')) {
    sum_net n = parse_eq_seq(c, sig);
    c.expect(')', "equation");
    return n;
  }
  if (at_call(c, "id")) {
    c.expect('(', "id");
    formula f = reduce(parse_sum_expr(c));
    c.expect(')', "id");
    return identity_net(ports_of(f));
  }
  if (at_call(c, "eta")) {
    c.expect('(', "eta");
    formula f = reduce(parse_sum_expr(c));
    c.expect(')', "eta");
    return eta_net(f);
  }
  if (at_call(c, "eps")) {
    c.expect('(', "eps");
    formula f = reduce(parse_sum_expr(c));
    c.expect(')', "eps");
    return eps_net(f);
  }
  if (at_call(c, "inj")) return parse_eq_injproj(c, true);
  if (at_call(c, "proj")) return parse_eq_injproj(c, false);
  std::string name = c.ident("equation");
  const generator* g = sig.find_generator(name);
  if (!g) throw error("equation references undeclared generator '" + name + "'");
  return generator_net(g->name, g->dom, g->cod);
}

sum_net parse_eq_tensor(cursor& c, const signature& sig) {
  sum_net n = parse_eq_prim(c, sig);
  while (c.eat('@')) n = tensor_product(n, parse_eq_prim(c, sig));
  return n;
}

sum_net parse_eq_seq(cursor& c, const signature& sig) {
  sum_net n = parse_eq_tensor(c, sig);
  while (c.eat(';')) n = compose(n, parse_eq_tensor(c, sig));
  return n;
}

net eq_side_net(const std::string& text, const signature& sig) {
  cursor c{text};
  sum_net n = parse_eq_seq(c, sig);
  expect_end(c, "equation");
  if (n.summands.size() != 1 || !n.summands[0].weight.is_one())
    throw error("an equation side must be a single unweighted net: " + trim(text));
  return n.summands[0].graph;
}

}  // namespace

signature parse_signature(const std::string& text) {
  signature sig;
  for (const auto& l : logical_lines(text)) {
    try {
      cursor c{l.text};
      if (c.eat_word("atom")) {
        std::string name = c.ident("atom");
        expect_end(c, "atom");
        sig.declare_atom(name);
      } else if (c.eat_word("loop")) {
        std::string name = c.ident("loop");
        expect_end(c, "loop");
        sig.declare_loop(name);
      } else if (c.eat_word("gen")) {
        generator g;
        g.name = c.ident("gen");
        c.expect(':', "gen");
        if (!c.eat_word("->")) {
          do g.dom.push_back(parse_atom_ref(c));
          while (c.eat(','));
          if (!c.eat_word("->")) throw error("gen: expected '->' after the domain");
        }
        if (!c.done()) {
          do g.cod.push_back(parse_atom_ref(c));
          while (c.eat(','));
        }
        expect_end(c, "gen");
        sig.declare_generator(std::move(g));
      } else if (c.eat_word("eq")) {
        user_equation eq;
        eq.name = c.ident("eq");
        c.expect(':', "eq");
        auto sides = split_top(l.text.substr(c.i), '=');
        if (sides.size() != 2) throw error("eq: expected exactly one '=' between the sides");
        eq.lhs = eq_side_net(sides[0], sig);
        eq.rhs = eq_side_net(sides[1], sig);
        eq.source = trim(sides[0]) + " = " + trim(sides[1]);
        sig.declare_equation(std::move(eq));
      } else {
        throw error("unknown declaration (expected atom, loop, gen, or eq)");
      }
    } catch (const error& e) {
      throw error("line " + std::to_string(l.num) + ": " + e.what());
    }
  }
  return sig;
}

std::string signature_to_text(const signature& sig) {
  std::string out;
  for (const auto& a : sig.atoms()) out += "atom " + a + "\n";
  for (const auto& l : sig.loops()) out += "loop " + l + "\n";
  for (const auto& [name, g] : sig.generators()) {
    std::string dom = join_formulas(g.dom, ", ");
    out += "gen " + name + " : " + (dom.empty() ? "" : dom + " ") + "-> " +
           join_formulas(g.cod, ", ") + "\n";
  }
  for (const auto& eq : sig.equations()) {
    if (!eq.source.empty())
      out += "eq " + eq.name + " : " + eq.source + "\n";
    else
      out += "# equation '" + eq.name + "' was registered as nets and has no source form\n";
  }
  return out;
}

// ---- net files ----------------------------------------------------------------------

namespace {

struct net_block {
  net g;
  std::map<std::string, std::int32_t> nodes;  // node and box names
  std::map<std::string, std::int32_t> ins, outs;
};

endpoint resolve_ref(cursor& c, const net_block& ctx, bool provider, const numbered_line& l) {
  std::string name = c.ident("wire");
  if (c.eat('.')) {
    auto it = ctx.nodes.find(name);
    if (it == ctx.nodes.end()) fail_line(l, "unknown node '" + name + "'");
    const node& n = ctx.g.nodes[static_cast<std::size_t>(it->second)];
    std::int32_t port = 0;
    if (c.eat_word("index")) {
      if (n.kind != node_kind::box) fail_line(l, "'.index' is only valid on a box");
      if (n.dir == box_dir::measure) {
        if (!provider) fail_line(l, "the index port of a measurement box is an output");
        port = static_cast<std::int32_t>(node_output_carriers(n).size()) - 1;
      } else {
        if (provider) fail_line(l, "the index port of a control box is an input");
        port = static_cast<std::int32_t>(node_input_carriers(n).size()) - 1;
      }
    } else {
      port = static_cast<std::int32_t>(c.integer("wire"));
      auto count = provider ? node_output_carriers(n).size() : node_input_carriers(n).size();
      if (port < 0 || static_cast<std::size_t>(port) >= count)
        fail_line(l, "node '" + name + "' has no " + (provider ? "output" : "input") +
                         " port " + std::to_string(port));
    }
    return provider ? node_out(it->second, port) : node_in(it->second, port);
  }
  if (provider) {
    auto it = ctx.ins.find(name);
    if (it == ctx.ins.end()) {
      if (ctx.outs.count(name))
        fail_line(l, "'" + name + "' is an output port; it cannot provide");
      fail_line(l, "unknown port '" + name + "'");
    }
    return bnd_in(it->second);
  }
  auto it = ctx.outs.find(name);
  if (it == ctx.outs.end()) {
    if (ctx.ins.count(name)) fail_line(l, "'" + name + "' is an input port; it cannot consume");
    fail_line(l, "unknown port '" + name + "'");
  }
  return bnd_out(it->second);
}

void parse_io_line(const numbered_line& l, net_block& ctx) {
  cursor c{l.text};
  bool is_input = c.eat_word("input");
  if (!is_input) c.eat_word("output");
  std::string name = c.ident("port");
  c.expect(':', "port");
  formula f = parse_sum_expr(c);
  expect_end(c, "port");
  if (!is_reduced(f)) fail_line(l, "port carriers must be reduced formulas");
  if (ctx.ins.count(name) || ctx.outs.count(name))
    fail_line(l, "port '" + name + "' already declared");
  if (is_input) {
    ctx.ins[name] = static_cast<std::int32_t>(ctx.g.bnd.inputs.size());
    ctx.g.bnd.inputs.push_back(f);
  } else {
    ctx.outs[name] = static_cast<std::int32_t>(ctx.g.bnd.outputs.size());
    ctx.g.bnd.outputs.push_back(f);
  }
}

void parse_net_statements(const std::vector<numbered_line>& lines, std::size_t& pos,
                          const signature& sig, net_block& ctx, bool inside_braces,
                          bool allow_io);

// "box <name> : measure|control {" ... branches ... "}"
node parse_box(const std::vector<numbered_line>& lines, std::size_t& pos,
               const signature& sig, const numbered_line& header, cursor& c) {
  node n;
  n.kind = node_kind::box;
  if (c.eat_word("measure"))
    n.dir = box_dir::measure;
  else if (c.eat_word("control"))
    n.dir = box_dir::control;
  else
    fail_line(header, "a box is 'measure' or 'control'");
  c.expect('{', "box");
  expect_end(c, "box");
  while (true) {
    if (pos >= lines.size()) fail_line(header, "unterminated box: missing '}'");
    const numbered_line& l = lines[pos];
    if (l.text == "}") {
      ++pos;
      break;
    }
    cursor bc{l.text};
    if (!bc.eat_word("branch")) fail_line(l, "expected 'branch' or '}' inside a box");
    loop_monomial weight;
    if (bc.eat('[')) {
      weight = parse_monomial(bc);
      bc.expect(']', "branch");
    }
    bc.expect('{', "branch");
    expect_end(bc, "branch");
    ++pos;
    net_block branch;
    parse_net_statements(lines, pos, sig, branch, /*inside_braces=*/true, /*allow_io=*/true);
    branch.g.free_loops = monomial_mul(branch.g.free_loops, weight);
    n.branches.push_back(std::move(branch.g));
  }
  if (n.branches.size() < 2) fail_line(header, "a box needs at least two branches");
  return n;
}

// Parses the statements of one net block. In brace mode the closing "}" line
// is consumed; at top level parsing stops at end of input.
void parse_net_statements(const std::vector<numbered_line>& lines, std::size_t& pos,
                          const signature& sig, net_block& ctx, bool inside_braces,
                          bool allow_io) {
  while (true) {
    if (pos >= lines.size()) {
      if (inside_braces) throw error("unterminated block: missing '}'");
      return;
    }
    const numbered_line& l = lines[pos];
    if (l.text == "}") {
      if (!inside_braces) fail_line(l, "unmatched '}'");
      ++pos;
      return;
    }

    if (starts_with_word(l.text, "input") || starts_with_word(l.text, "output")) {
      if (!allow_io) fail_line(l, "the boundary of this block was already declared");
      parse_io_line(l, ctx);
      ++pos;
      continue;
    }

    if (starts_with_word(l.text, "node")) {
      cursor c{l.text};
      c.eat_word("node");
      std::string name = c.ident("node");
      if (ctx.nodes.count(name)) fail_line(l, "node '" + name + "' already declared");
      c.expect(':', "node");
      node n;
      if (c.eat_word("eta")) {
        n.kind = node_kind::eta;
        n.carrier = parse_sum_expr(c);
        if (!n.carrier.is_atom()) fail_line(l, "an eta carrier must be an atom reference");
      } else if (c.eat_word("eps")) {
        n.kind = node_kind::eps;
        n.carrier = parse_sum_expr(c);
        if (!n.carrier.is_atom()) fail_line(l, "an eps carrier must be an atom reference");
      } else if (c.eat_word("gen")) {
        std::string gname = c.ident("gen");
        const generator* g = sig.find_generator(gname);
        if (!g) fail_line(l, "undeclared generator '" + gname + "'");
        n.kind = node_kind::generator;
        n.name = g->name;
        n.gdom = g->dom;
        n.gcod = g->cod;
      } else {
        bool is_inject = c.eat_word("inject");
        bool is_project = !is_inject && c.eat_word("project");
        if (!is_inject && !is_project)
          fail_line(l, "unknown node kind (expected eta, eps, gen, inject, or project)");
        n.kind = is_inject ? node_kind::inject : node_kind::project;
        n.index = static_cast<std::int32_t>(c.integer("node"));
        c.expect('[', "node");
        do {
          formula f = parse_sum_expr(c);
          if (!is_reduced(f)) fail_line(l, "summand formulas must be reduced");
          n.summands.push_back(f);
        } while (c.eat('|'));
        c.expect(']', "node");
        if (n.index < 0 || static_cast<std::size_t>(n.index) >= n.summands.size())
          fail_line(l, "summand index out of range");
      }
      expect_end(c, "node");
      ctx.nodes[name] = static_cast<std::int32_t>(ctx.g.nodes.size());
      ctx.g.nodes.push_back(std::move(n));
      ++pos;
      continue;
    }

    if (starts_with_word(l.text, "box")) {
      cursor c{l.text};
      c.eat_word("box");
      std::string name = c.ident("box");
      if (ctx.nodes.count(name)) fail_line(l, "node '" + name + "' already declared");
      c.expect(':', "box");
      ++pos;
      node n = parse_box(lines, pos, sig, l, c);
      ctx.nodes[name] = static_cast<std::int32_t>(ctx.g.nodes.size());
      ctx.g.nodes.push_back(std::move(n));
      continue;
    }

    if (starts_with_word(l.text, "wire")) {
      cursor c{l.text};
      c.eat_word("wire");
      endpoint from = resolve_ref(c, ctx, /*provider=*/true, l);
      if (!c.eat_word("->")) fail_line(l, "expected '->' between the wire's endpoints");
      endpoint to = resolve_ref(c, ctx, /*provider=*/false, l);
      expect_end(c, "wire");
      ctx.g.wires.push_back(wire{from, to});
      ++pos;
      continue;
    }

    if (starts_with_word(l.text, "loops")) {
      cursor c{l.text};
      c.eat_word("loops");
      loop_monomial m = parse_monomial(c);
      expect_end(c, "loops");
      ctx.g.free_loops = monomial_mul(ctx.g.free_loops, m);
      ++pos;
      continue;
    }

    if (starts_with_word(l.text, "summand") || starts_with_word(l.text, "zero"))
      fail_line(l, "summand blocks cannot mix with bare statements");
    fail_line(l, "unknown statement");
  }
}

}  // namespace

sum_net parse_net(const std::string& text, const signature& sig) {
  auto lines = logical_lines(text);
  std::size_t pos = 0;

  // Shared boundary, declared up front.
  net_block top;
  while (pos < lines.size() && (starts_with_word(lines[pos].text, "input") ||
                                starts_with_word(lines[pos].text, "output"))) {
    parse_io_line(lines[pos], top);
    ++pos;
  }

  sum_net out;
  out.bnd = top.g.bnd;

  if (pos < lines.size() && lines[pos].text == "zero") {
    ++pos;
    if (pos != lines.size()) fail_line(lines[pos], "'zero' must be the only statement");
    return out;
  }

  if (pos < lines.size() && starts_with_word(lines[pos].text, "summand")) {
    while (pos < lines.size()) {
      const numbered_line& l = lines[pos];
      cursor c{l.text};
      if (!c.eat_word("summand")) fail_line(l, "expected a 'summand' block");
      loop_poly weight = loop_poly::one();
      if (c.eat('[')) {
        weight = parse_poly(c);
        c.expect(']', "summand");
      }
      c.expect('{', "summand");
      expect_end(c, "summand");
      ++pos;
      net_block ctx = top;  // copies the boundary and its port names
      parse_net_statements(lines, pos, sig, ctx, /*inside_braces=*/true, /*allow_io=*/false);
      out.summands.push_back(summand{std::move(weight), std::move(ctx.g)});
    }
    return out;
  }

  // Bare form: the remaining statements are a single summand of weight one.
  net_block ctx = top;
  parse_net_statements(lines, pos, sig, ctx, /*inside_braces=*/false, /*allow_io=*/false);
  out.summands.push_back(summand{loop_poly::one(), std::move(ctx.g)});
  return out;
}

// ---- net printing -------------------------------------------------------------------

namespace {

std::string endpoint_ref(const endpoint& e) {
  switch (e.kind) {
    case endpoint::kind_t::bnd_in:
      return "in" + std::to_string(e.port);
    case endpoint::kind_t::bnd_out:
      return "out" + std::to_string(e.port);
    case endpoint::kind_t::node_in:
    case endpoint::kind_t::node_out:
      return "n" + std::to_string(e.node) + "." + std::to_string(e.port);
  }
  return "?";
}

void print_net_lines(std::string& out, const net& g, const std::string& ind, bool with_io,
                     bool with_loops) {
  if (with_io) {
    for (std::size_t p = 0; p < g.bnd.inputs.size(); ++p)
      out += ind + "input in" + std::to_string(p) + " : " + to_string(g.bnd.inputs[p]) + "\n";
    for (std::size_t p = 0; p < g.bnd.outputs.size(); ++p)
      out += ind + "output out" + std::to_string(p) + " : " + to_string(g.bnd.outputs[p]) + "\n";
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const node& n = g.nodes[i];
    const std::string name = "n" + std::to_string(i);
    switch (n.kind) {
      case node_kind::eta:
        out += ind + "node " + name + " : eta " + to_string(n.carrier) + "\n";
        break;
      case node_kind::eps:
        out += ind + "node " + name + " : eps " + to_string(n.carrier) + "\n";
        break;
      case node_kind::generator:
        out += ind + "node " + name + " : gen " + n.name + "\n";
        break;
      case node_kind::inject:
      case node_kind::project: {
        out += ind + "node " + name + " : " +
               (n.kind == node_kind::inject ? "inject " : "project ") +
               std::to_string(n.index) + " [ " + join_formulas(n.summands, " | ") + " ]\n";
        break;
      }
      case node_kind::box: {
        out += ind + "box " + name + " : " +
               (n.dir == box_dir::measure ? "measure" : "control") + " {\n";
        for (const auto& br : n.branches) {
          out += ind + "  branch";
          if (!br.free_loops.empty()) out += " [ " + to_string(br.free_loops) + " ]";
          out += " {\n";
          print_net_lines(out, br, ind + "    ", /*with_io=*/true, /*with_loops=*/false);
          out += ind + "  }\n";
        }
        out += ind + "}\n";
        break;
      }
    }
  }
  for (const auto& w : g.wires)
    out += ind + "wire " + endpoint_ref(w.from) + " -> " + endpoint_ref(w.to) + "\n";
  if (with_loops && !g.free_loops.empty())
    out += ind + "loops " + to_string(g.free_loops) + "\n";
}

}  // namespace

std::string net_to_text(const sum_net& s) {
  std::string out;
  for (std::size_t p = 0; p < s.bnd.inputs.size(); ++p)
    out += "input in" + std::to_string(p) + " : " + to_string(s.bnd.inputs[p]) + "\n";
  for (std::size_t p = 0; p < s.bnd.outputs.size(); ++p)
    out += "output out" + std::to_string(p) + " : " + to_string(s.bnd.outputs[p]) + "\n";
  if (s.summands.empty()) {
    out += "zero\n";
    return out;
  }
  if (s.summands.size() == 1 && s.summands[0].weight.is_one()) {
    print_net_lines(out, s.summands[0].graph, "", /*with_io=*/false, /*with_loops=*/true);
    return out;
  }
  for (const auto& sm : s.summands) {
    out += "summand";
    if (!sm.weight.is_one()) out += " [ " + to_string(sm.weight) + " ]";
    out += " {\n";
    print_net_lines(out, sm.graph, "  ", /*with_io=*/false, /*with_loops=*/true);
    out += "}\n";
  }
  return out;
}

// ---- model files ---------------------------------------------------------------------

namespace {

double scan_double(cursor& c) {
  c.skip_ws();
  std::size_t b = c.i;
  if (c.i < c.s.size() && (c.s[c.i] == '+' || c.s[c.i] == '-')) ++c.i;
  bool digits = false;
  while (c.i < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.i]))) {
    ++c.i;
    digits = true;
  }
  if (c.i < c.s.size() && c.s[c.i] == '.') {
    ++c.i;
    while (c.i < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.i]))) {
      ++c.i;
      digits = true;
    }
  }
  if (!digits) throw error("expected a number at \"" + c.rest(b) + "\"");
  if (c.i < c.s.size() && (c.s[c.i] == 'e' || c.s[c.i] == 'E')) {
    std::size_t mark = c.i;
    ++c.i;
    if (c.i < c.s.size() && (c.s[c.i] == '+' || c.s[c.i] == '-')) ++c.i;
    bool exp_digits = false;
    while (c.i < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.i]))) {
      ++c.i;
      exp_digits = true;
    }
    if (!exp_digits) c.i = mark;  // the 'e' belongs to something else
  }
  return std::stod(c.s.substr(b, c.i - b));
}

std::uint64_t scan_nat(cursor& c) { return c.integer("scalar"); }

bool_rig scan_bool(cursor& c) {
  std::uint64_t v = c.integer("scalar");
  if (v > 1) throw error("boolean scalars are 0 or 1");
  return bool_rig{v == 1};
}

std::complex<double> scan_complex(cursor& c) {
  double first = scan_double(c);
  if (c.eat('i')) return {0.0, first};
  c.skip_ws();
  if (c.i < c.s.size() && (c.s[c.i] == '+' || c.s[c.i] == '-')) {
    double second = scan_double(c);
    c.expect('i', "complex scalar");
    return {first, second};
  }
  return {first, 0.0};
}

template <class S, class Scan>
model<S> parse_model_impl(const std::string& text, Scan scan) {
  model<S> m;
  for (const auto& l : logical_lines(text)) {
    try {
      cursor c{l.text};
      if (c.eat_word("dim")) {
        std::string name = c.ident("dim");
        c.expect('=', "dim");
        auto d = c.integer("dim");
        expect_end(c, "dim");
        if (m.dims.count(name)) throw error("dim '" + name + "' already set");
        m.dims[name] = static_cast<int>(d);
      } else if (c.eat_word("loop")) {
        std::string name = c.ident("loop");
        c.expect('=', "loop");
        S v = scan(c);
        expect_end(c, "loop");
        if (m.loops.count(name)) throw error("loop '" + name + "' already set");
        m.loops[name] = v;
      } else if (c.eat_word("matrix")) {
        std::string name = c.ident("matrix");
        c.expect('=', "matrix");
        std::vector<std::vector<S>> rows;
        c.expect('[', "matrix");
        if (!c.eat(']')) {
          do {
            c.expect('[', "matrix row");
            std::vector<S> row;
            if (!c.eat(']')) {
              do row.push_back(scan(c));
              while (c.eat(','));
              c.expect(']', "matrix row");
            }
            rows.push_back(std::move(row));
          } while (c.eat(','));
          c.expect(']', "matrix");
        }
        expect_end(c, "matrix");
        const long rr = static_cast<long>(rows.size());
        const long cc = rows.empty() ? 0 : static_cast<long>(rows[0].size());
        for (const auto& row : rows)
          if (static_cast<long>(row.size()) != cc)
            throw error("matrix '" + name + "' has ragged rows");
        if (m.gens.count(name)) throw error("matrix '" + name + "' already set");
        mat<S> M(rr, cc);
        for (long r = 0; r < rr; ++r)
          for (long col = 0; col < cc; ++col)
            M(r, col) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
        m.gens.emplace(name, std::move(M));
      } else {
        throw error("unknown entry (expected dim, loop, or matrix)");
      }
    } catch (const error& e) {
      throw error("line " + std::to_string(l.num) + ": " + e.what());
    }
  }
  return m;
}

}  // namespace

model<std::uint64_t> parse_model_nat(const std::string& text) {
  return parse_model_impl<std::uint64_t>(text, [](cursor& c) { return scan_nat(c); });
}

model<std::complex<double>> parse_model_complex(const std::string& text) {
  return parse_model_impl<std::complex<double>>(text, [](cursor& c) { return scan_complex(c); });
}

model<bool_rig> parse_model_bool(const std::string& text) {
  return parse_model_impl<bool_rig>(text, [](cursor& c) { return scan_bool(c); });
}

// ---- proof scripts --------------------------------------------------------------------

namespace {

sequent parse_sequent_text(const std::string& text, bool& has_scalar) {
  auto bar = text.find("|-");
  if (bar == std::string::npos) throw error("a sequent needs '|-'");
  std::string left = text.substr(0, bar);
  auto segs = split_top(text.substr(bar + 2), ';');
  if (segs.size() > 2) throw error("too many ';' in a sequent");
  has_scalar = segs.size() == 2;
  sequent s;
  {
    cursor c{left};
    s.ante = parse_formula_list_to_end(c);
    expect_end(c, "sequent");
  }
  {
    cursor c{segs[0]};
    s.succ = parse_formula_list_to_end(c);
    expect_end(c, "sequent");
  }
  if (has_scalar) s.scalar = parse_loop_poly(trim(segs[1]));
  return s;
}

std::vector<proof_ptr> resolve_premises(const std::string& seg,
                                        const std::map<std::string, proof_ptr>& env) {
  std::vector<proof_ptr> out;
  if (trim(seg).empty()) return out;
  for (const auto& tok : split_top(seg, ',')) {
    std::string t = trim(tok);
    if (t.empty()) throw error("empty premise reference");
    auto it = env.find(t);
    if (it == env.end()) throw error("unknown premise '" + t + "'");
    out.push_back(it->second);
  }
  return out;
}

std::size_t parse_index_arg(const std::string& seg, const std::string& what) {
  cursor c{seg};
  auto v = c.integer(what);
  expect_end(c, what);
  return static_cast<std::size_t>(v);
}

proof_ptr build_script_node(const std::string& rname, const std::string& inside,
                            const std::map<std::string, proof_ptr>& env, const signature& sig,
                            const std::string& id) {
  auto segs = split_top(inside, ';');
  auto need_segs = [&](std::size_t n) {
    if (segs.size() != n)
      throw error(rname + ": expected " + std::to_string(n) + " ';'-separated parts, got " +
                  std::to_string(segs.size()));
  };
  auto premises = [&](std::size_t n) {
    auto ps = resolve_premises(segs[0], env);
    if (ps.size() != n)
      throw error(rname + ": expected " + std::to_string(n) + " premises, got " +
                  std::to_string(ps.size()));
    return ps;
  };

  proof p;
  p.label = id;

  if (rname == "id") {
    need_segs(1);
    p.rule = rule_tag::id_ax;
    p.f = parse_formula(trim(segs[0]));
    return make_proof(std::move(p));
  }
  if (rname == "gen") {
    need_segs(1);
    p.rule = rule_tag::gen_ax;
    p.gen_name = trim(segs[0]);
    return make_proof(std::move(p));
  }
  if (rname == "eta") {
    need_segs(1);
    p.rule = rule_tag::eta_ax;
    p.f = parse_formula(trim(segs[0]));
    return make_proof(std::move(p));
  }
  if (rname == "zero") {
    need_segs(1);
    p.rule = rule_tag::zero_ax;
    auto bar = segs[0].find("|-");
    if (bar == std::string::npos) throw error("zero: expected '<gamma> |- <delta>'");
    {
      std::string left = segs[0].substr(0, bar);
      cursor cl{left};
      p.gamma = parse_formula_list_to_end(cl);
      expect_end(cl, "zero");
    }
    {
      std::string right = segs[0].substr(bar + 2);
      cursor cr{right};
      p.delta = parse_formula_list_to_end(cr);
      expect_end(cr, "zero");
    }
    return make_proof(std::move(p));
  }
  if (rname == "i_intro") {
    need_segs(1);
    if (!trim(segs[0]).empty()) throw error("i_intro takes no arguments");
    p.rule = rule_tag::i_intro;
    return make_proof(std::move(p));
  }
  if (rname == "exch_l" || rname == "exch_r" || rname == "tensor_l" || rname == "tensor_r") {
    need_segs(2);
    p.rule = rname == "exch_l"     ? rule_tag::exch_l
             : rname == "exch_r"   ? rule_tag::exch_r
             : rname == "tensor_l" ? rule_tag::tensor_l
                                   : rule_tag::tensor_r;
    p.premises = premises(1);
    p.pos = parse_index_arg(segs[1], rname);
    return make_proof(std::move(p));
  }
  if (rname == "shift_lr" || rname == "shift_rl") {
    need_segs(1);
    p.rule = rname == "shift_lr" ? rule_tag::shift_lr : rule_tag::shift_rl;
    p.premises = premises(1);
    return make_proof(std::move(p));
  }
  if (rname == "inj" || rname == "proj") {
    need_segs(3);
    p.rule = rname == "inj" ? rule_tag::inj : rule_tag::proj;
    p.premises = premises(1);
    p.pos = parse_index_arg(segs[1], rname);
    cursor c{segs[2]};
    p.parts = parse_formula_list_to_end(c);
    expect_end(c, rname);
    if (p.parts.empty()) throw error(rname + ": expected a summand list");
    return make_proof(std::move(p));
  }
  if (rname == "cut") {
    need_segs(1);
    auto ps = resolve_premises(segs[0], env);
    if (ps.size() == 1) {
      p.rule = rule_tag::cut;
      p.premises = std::move(ps);
      return make_proof(std::move(p));
    }
    if (ps.size() == 2) return derived_cut(ps[0], ps[1], sig);
    throw error("cut: expected one premise (trace form) or two (derived form)");
  }
  if (rname == "mix") {
    need_segs(1);
    p.rule = rule_tag::mix;
    p.premises = premises(2);
    return make_proof(std::move(p));
  }
  if (rname == "sum") {
    need_segs(2);
    p.rule = rule_tag::sum_rule;
    p.premises = premises(2);
    auto ws = split_top(segs[1], ',');
    if (ws.size() != 2) throw error("sum: expected two weights");
    p.w1 = parse_loop_poly(trim(ws[0]));
    p.w2 = parse_loop_poly(trim(ws[1]));
    return make_proof(std::move(p));
  }
  if (rname == "measure" || rname == "control") {
    need_segs(1);
    p.rule = rname == "measure" ? rule_tag::measure : rule_tag::control;
    p.premises = resolve_premises(segs[0], env);
    if (p.premises.size() < 2) throw error(rname + ": expected at least two premises");
    return make_proof(std::move(p));
  }
  throw error("unknown rule '" + rname + "'");
}

}  // namespace

proof_script parse_proof_script(const std::string& text, const signature& sig) {
  proof_script out;
  std::map<std::string, proof_ptr> env;
  for (const auto& l : logical_lines(text)) {
    try {
      auto eq = l.text.find('=');
      if (eq == std::string::npos) throw error("expected '<id> = <rule>(...)'");
      std::string id = trim(l.text.substr(0, eq));
      {
        cursor c{id};
        c.ident("inference id");
        expect_end(c, "inference id");
      }
      if (env.count(id)) throw error("id '" + id + "' already used");
      std::string rest = trim(l.text.substr(eq + 1));
      auto open = rest.find('(');
      if (open == std::string::npos) throw error("expected '(' after the rule name");
      std::string rname = trim(rest.substr(0, open));
      int depth = 0;
      std::size_t close = std::string::npos;
      for (std::size_t k = open; k < rest.size(); ++k) {
        if (rest[k] == '(') ++depth;
        if (rest[k] == ')' && --depth == 0) {
          close = k;
          break;
        }
      }
      if (close == std::string::npos) throw error("unbalanced parentheses");
      std::string inside = rest.substr(open + 1, close - open - 1);
      std::string after = trim(rest.substr(close + 1));

      script_line sl;
      sl.id = id;
      if (!after.empty()) {
        if (after[0] != ':') throw error("unexpected text after the rule: \"" + after + "\"");
        sl.has_annotation = true;
        sl.annotation = parse_sequent_text(trim(after.substr(1)), sl.annotation_has_scalar);
      }
      sl.node = build_script_node(rname, inside, env, sig, id);
      env[id] = sl.node;
      out.lines.push_back(std::move(sl));
    } catch (const error& e) {
      throw error("line " + std::to_string(l.num) + ": " + e.what());
    }
  }
  if (out.lines.empty()) throw error("the proof script has no inferences");
  out.root = out.lines.back().node;
  return out;
}

check_result check_script(const proof_script& script, const signature& sig) {
  check_result out;
  if (script.lines.empty()) {
    out.ok = false;
    out.diagnostics.push_back("the proof script has no inferences");
    return out;
  }
  for (const auto& sl : script.lines) {
    check_result cr = check_proof(sl.node, sig);
    if (!cr.ok) {
      out.ok = false;
      for (const auto& d : cr.diagnostics)
        out.diagnostics.push_back("line '" + sl.id + "': " + d);
      continue;
    }
    if (sl.has_annotation) {
      if (!cr.conclusion.same_shape(sl.annotation)) {
        out.ok = false;
        out.diagnostics.push_back("line '" + sl.id + "': annotated as " +
                                  to_string(sl.annotation) + " but the proof concludes " +
                                  to_string(cr.conclusion));
      } else if (sl.annotation_has_scalar && !(cr.conclusion.scalar == sl.annotation.scalar)) {
        out.ok = false;
        out.diagnostics.push_back("line '" + sl.id + "': annotated scalar " +
                                  to_string(sl.annotation.scalar) + " but the proof yields " +
                                  to_string(cr.conclusion.scalar));
      }
    }
    if (&sl == &script.lines.back()) out.conclusion = cr.conclusion;
  }
  return out;
}

// ---- rewrite traces ---------------------------------------------------------------------

namespace {

rule_kind rule_from_name(const std::string& s) {
  for (rule_kind k :
       {rule_kind::orient, rule_kind::yank, rule_kind::loop, rule_kind::delta, rule_kind::zero,
        rule_kind::collect, rule_kind::open_measure, rule_kind::open_control,
        rule_kind::equation})
    if (rule_name(k) == s) return k;
  throw error("unknown rewrite rule '" + s + "'");
}

}  // namespace

std::string trace_to_text(const std::vector<trace_entry>& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i)
    out += "step " + std::to_string(i) + ": " + rule_name(trace[i].rule) + " @ " +
           trace[i].location + " -> " + trace[i].digest + "\n";
  return out;
}

std::vector<trace_entry> parse_trace(const std::string& text) {
  std::vector<trace_entry> out;
  for (const auto& l : logical_lines(text)) {
    try {
      cursor c{l.text};
      if (!c.eat_word("step")) throw error("expected 'step'");
      auto idx = c.integer("trace");
      if (idx != out.size()) throw error("steps must be numbered consecutively from 0");
      c.expect(':', "trace");
      // Rule names may contain hyphens ("open-measure"), so scan explicitly.
      c.skip_ws();
      std::size_t b = c.i;
      while (c.i < c.s.size() &&
             (std::isalnum(static_cast<unsigned char>(c.s[c.i])) || c.s[c.i] == '-' ||
              c.s[c.i] == '_'))
        ++c.i;
      if (b == c.i) throw error("expected a rule name");
      rule_kind rk = rule_from_name(c.s.substr(b, c.i - b));
      c.expect('@', "trace");
      std::string tail = l.text.substr(c.i);
      auto arrow = tail.rfind(" -> ");
      if (arrow == std::string::npos) throw error("expected ' -> <digest>'");
      std::string loc = trim(tail.substr(0, arrow));
      std::string dg = trim(tail.substr(arrow + 4));
      if (loc.empty()) throw error("empty step location");
      if (dg.size() != 16 || !std::all_of(dg.begin(), dg.end(), [](char ch) {
            return std::isxdigit(static_cast<unsigned char>(ch));
          }))
        throw error("a digest is 16 hex digits, got '" + dg + "'");
      out.push_back(trace_entry{rk, std::move(loc), std::move(dg)});
    } catch (const error& e) {
      throw error("line " + std::to_string(l.num) + ": " + e.what());
    }
  }
  return out;
}

// ---- JSON export ---------------------------------------------------------------------------

namespace {

nlohmann::json formulas_json(const std::vector<formula>& fs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& f : fs) a.push_back(to_string(f));
  return a;
}

nlohmann::json net_json(const net& g) {
  nlohmann::json j;
  j["inputs"] = formulas_json(g.bnd.inputs);
  j["outputs"] = formulas_json(g.bnd.outputs);
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const node& n = g.nodes[i];
    nlohmann::json e;
    e["id"] = i;
    switch (n.kind) {
      case node_kind::generator:
        e["kind"] = "gen";
        e["name"] = n.name;
        e["dom"] = formulas_json(n.gdom);
        e["cod"] = formulas_json(n.gcod);
        break;
      case node_kind::eta:
        e["kind"] = "eta";
        e["carrier"] = to_string(n.carrier);
        break;
      case node_kind::eps:
        e["kind"] = "eps";
        e["carrier"] = to_string(n.carrier);
        break;
      case node_kind::inject:
      case node_kind::project:
        e["kind"] = n.kind == node_kind::inject ? "inject" : "project";
        e["index"] = n.index;
        e["summands"] = formulas_json(n.summands);
        break;
      case node_kind::box: {
        e["kind"] = "box";
        e["dir"] = n.dir == box_dir::measure ? "measure" : "control";
        nlohmann::json bs = nlohmann::json::array();
        for (const auto& br : n.branches) bs.push_back(net_json(br));
        e["branches"] = std::move(bs);
        break;
      }
    }
    nodes.push_back(std::move(e));
  }
  j["nodes"] = std::move(nodes);
  nlohmann::json wires = nlohmann::json::array();
  for (const auto& w : g.wires) {
    nlohmann::json e;
    e["from"] = endpoint_ref(w.from);
    e["to"] = endpoint_ref(w.to);
    wires.push_back(std::move(e));
  }
  j["wires"] = std::move(wires);
  if (!g.free_loops.empty()) j["loops"] = to_string(g.free_loops);
  return j;
}

}  // namespace

std::string net_to_json(const sum_net& s) {
  nlohmann::json j;
  j["inputs"] = formulas_json(s.bnd.inputs);
  j["outputs"] = formulas_json(s.bnd.outputs);
  nlohmann::json sums = nlohmann::json::array();
  for (const auto& sm : s.summands) {
    nlohmann::json e;
    e["weight"] = to_string(sm.weight);
    e["graph"] = net_json(sm.graph);
    sums.push_back(std::move(e));
  }
  j["summands"] = std::move(sums);
  return j.dump(2);
}

}  // namespace tsl
