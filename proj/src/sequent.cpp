#include "tsl/sequent.hpp"

#include <map>

namespace tsl {

std::string to_string(const sequent& s) {
  std::string out;
  for (std::size_t i = 0; i < s.ante.size(); ++i) {
    if (i) out += ", ";
    out += to_string(s.ante[i]);
  }
  out += s.ante.empty() ? "|-" : " |-";
  for (std::size_t i = 0; i < s.succ.size(); ++i) {
    out += i ? ", " : " ";
    out += to_string(s.succ[i]);
  }
  out += " ; " + to_string(s.scalar);
  return out;
}

std::string rule_tag_name(rule_tag t) {
  switch (t) {
    case rule_tag::id_ax: return "id";
    case rule_tag::gen_ax: return "gen";
    case rule_tag::eta_ax: return "eta";
    case rule_tag::zero_ax: return "zero";
    case rule_tag::i_intro: return "i_intro";
    case rule_tag::exch_l: return "exch_l";
    case rule_tag::exch_r: return "exch_r";
    case rule_tag::tensor_l: return "tensor_l";
    case rule_tag::tensor_r: return "tensor_r";
    case rule_tag::shift_lr: return "shift_lr";
    case rule_tag::shift_rl: return "shift_rl";
    case rule_tag::inj: return "inj";
    case rule_tag::proj: return "proj";
    case rule_tag::cut: return "cut";
    case rule_tag::mix: return "mix";
    case rule_tag::sum_rule: return "sum";
    case rule_tag::measure: return "measure";
    case rule_tag::control: return "control";
  }
  throw engine_fault("unreachable rule tag");
}

proof_ptr make_proof(proof p) { return std::make_shared<const proof>(std::move(p)); }

namespace {

struct compiled {
  std::vector<formula> ante, succ;
  sum_net graph;
};

std::vector<formula> ports_of_list(const std::vector<formula>& fs) {
  std::vector<formula> out;
  for (const auto& f : fs) {
    auto ps = ports_of(f);
    out.insert(out.end(), ps.begin(), ps.end());
  }
  return out;
}

sum_net id_on(const std::vector<formula>& fs) { return identity_net(ports_of_list(fs)); }

// Port-level permutation that swaps the adjacent formula groups at pos.
std::vector<std::size_t> swap_groups(const std::vector<formula>& fs, std::size_t pos) {
  std::vector<std::size_t> perm;
  std::size_t off = 0;
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // (offset, size)
  for (const auto& f : fs) {
    std::size_t n = ports_of(f).size();
    groups.emplace_back(off, n);
    off += n;
  }
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    std::size_t src = gi;
    if (gi == pos) src = pos + 1;
    else if (gi == pos + 1) src = pos;
    for (std::size_t k = 0; k < groups[src].second; ++k)
      perm.push_back(groups[src].first + k);
  }
  return perm;
}

class compiler {
 public:
  explicit compiler(const signature& sig) : sig_(sig) {}

  const compiled& run(const proof_ptr& p) {
    auto it = memo_.find(p.get());
    if (it != memo_.end()) return it->second;
    compiled c = build(p);
    return memo_.emplace(p.get(), std::move(c)).first->second;
  }

 private:
  [[noreturn]] void fail(const proof& p, const std::string& what) const {
    std::string where = rule_tag_name(p.rule);
    if (!p.label.empty()) where = p.label + " = " + where;
    throw error(where + ": " + what);
  }

  void need_premises(const proof& p, std::size_t n) const {
    if (p.premises.size() != n)
      fail(p, "expects " + std::to_string(n) + " premise(s), got " +
                  std::to_string(p.premises.size()));
    for (const auto& q : p.premises)
      if (!q) fail(p, "null premise");
  }

  void need_reduced(const proof& p, const formula& f) const {
    if (!is_reduced(f)) fail(p, "formula " + to_string(f) + " is not reduced");
  }

  compiled build(const proof_ptr& pp) {
    const proof& p = *pp;
    switch (p.rule) {
      case rule_tag::id_ax: {
        need_premises(p, 0);
        if (!p.f.is_atom()) fail(p, "identity axiom needs an atom reference");
        if (!sig_.has_atom(p.f.atom_name())) fail(p, "undeclared atom " + p.f.atom_name());
        return {{p.f}, {p.f}, identity_net({p.f})};
      }
      case rule_tag::gen_ax: {
        need_premises(p, 0);
        const generator* g = sig_.find_generator(p.gen_name);
        if (!g) fail(p, "undeclared generator " + p.gen_name);
        return {g->dom, g->cod, generator_net(g->name, g->dom, g->cod)};
      }
      case rule_tag::eta_ax: {
        need_premises(p, 0);
        need_reduced(p, p.f);
        return {{}, {dual(p.f), p.f}, eta_net(p.f)};
      }
      case rule_tag::zero_ax: {
        need_premises(p, 0);
        for (const auto& f : p.gamma) need_reduced(p, f);
        for (const auto& f : p.delta) need_reduced(p, f);
        boundary b{ports_of_list(p.gamma), ports_of_list(p.delta)};
        return {p.gamma, p.delta, sum_net::zero(std::move(b))};
      }
      case rule_tag::i_intro: {
        need_premises(p, 0);
        return {{}, {formula::unit()}, identity_net({})};
      }
      case rule_tag::exch_l: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (p.pos + 1 >= c.ante.size()) fail(p, "exchange position out of range");
        auto perm = swap_groups(c.ante, p.pos);
        std::swap(c.ante[p.pos], c.ante[p.pos + 1]);
        c.graph = permute_inputs(c.graph, perm);
        return c;
      }
      case rule_tag::exch_r: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (p.pos + 1 >= c.succ.size()) fail(p, "exchange position out of range");
        auto perm = swap_groups(c.succ, p.pos);
        std::swap(c.succ[p.pos], c.succ[p.pos + 1]);
        c.graph = permute_outputs(c.graph, perm);
        return c;
      }
      case rule_tag::tensor_l: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (p.pos + 1 >= c.ante.size()) fail(p, "tensor position out of range");
        formula t = formula::tensor(c.ante[p.pos], c.ante[p.pos + 1]);
        if (!is_reduced(t))
          fail(p, "tensor " + to_string(t) + " is not reduced; reduce the sides first");
        c.ante.erase(c.ante.begin() + static_cast<std::ptrdiff_t>(p.pos + 1));
        c.ante[p.pos] = t;
        return c;  // ports are unchanged by regrouping
      }
      case rule_tag::tensor_r: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (p.pos + 1 >= c.succ.size()) fail(p, "tensor position out of range");
        formula t = formula::tensor(c.succ[p.pos], c.succ[p.pos + 1]);
        if (!is_reduced(t))
          fail(p, "tensor " + to_string(t) + " is not reduced; reduce the sides first");
        c.succ.erase(c.succ.begin() + static_cast<std::ptrdiff_t>(p.pos + 1));
        c.succ[p.pos] = t;
        return c;
      }
      case rule_tag::shift_lr: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (c.ante.empty()) fail(p, "shift needs a nonempty antecedent");
        formula x = c.ante.front();
        std::vector<formula> rest(c.ante.begin() + 1, c.ante.end());
        // (id_{X*} (x) N) o (eta_X (x) id_rest) : rest -> X*, Delta
        sum_net lifted = compose(tensor_product(eta_net(x), id_on(rest)),
                                 tensor_product(identity_net(ports_of(dual(x))), c.graph));
        compiled out;
        out.ante = std::move(rest);
        out.succ.push_back(dual(x));
        out.succ.insert(out.succ.end(), c.succ.begin(), c.succ.end());
        out.graph = std::move(lifted);
        return out;
      }
      case rule_tag::shift_rl: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (c.succ.empty()) fail(p, "shift needs a nonempty succedent");
        formula x = c.succ.front();
        std::vector<formula> rest(c.succ.begin() + 1, c.succ.end());
        // (eps_{X*} (x) id_rest) o (id_{X*} (x) N) : X*, Gamma -> Delta
        sum_net lowered = compose(tensor_product(identity_net(ports_of(dual(x))), c.graph),
                                  tensor_product(eps_net(dual(x)), id_on(rest)));
        compiled out;
        out.ante.push_back(dual(x));
        out.ante.insert(out.ante.end(), c.ante.begin(), c.ante.end());
        out.succ = std::move(rest);
        out.graph = std::move(lowered);
        return out;
      }
      case rule_tag::inj: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (c.succ.empty()) fail(p, "injection needs a nonempty succedent");
        if (p.pos >= p.parts.size()) fail(p, "injection index out of range");
        for (const auto& f : p.parts) need_reduced(p, f);
        formula folded = fold_sum(p.parts);
        if (!is_reduced(folded))
          fail(p, "direct sum " + to_string(folded) + " is not reduced");
        if (!(c.succ.back() == p.parts[p.pos]))
          fail(p, "last succedent formula is " + to_string(c.succ.back()) + ", expected " +
                      to_string(p.parts[p.pos]));
        std::vector<formula> rest(c.succ.begin(), c.succ.end() - 1);
        c.graph = compose(c.graph, tensor_product(id_on(rest),
                                                  inject_net(static_cast<std::int32_t>(p.pos),
                                                             p.parts)));
        c.succ.back() = folded;
        return c;
      }
      case rule_tag::proj: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (c.ante.empty()) fail(p, "projection needs a nonempty antecedent");
        if (p.pos >= p.parts.size()) fail(p, "projection index out of range");
        for (const auto& f : p.parts) need_reduced(p, f);
        formula folded = fold_sum(p.parts);
        if (!is_reduced(folded))
          fail(p, "direct sum " + to_string(folded) + " is not reduced");
        if (!(c.ante.front() == p.parts[p.pos]))
          fail(p, "first antecedent formula is " + to_string(c.ante.front()) + ", expected " +
                      to_string(p.parts[p.pos]));
        std::vector<formula> rest(c.ante.begin() + 1, c.ante.end());
        c.graph = compose(tensor_product(project_net(static_cast<std::int32_t>(p.pos), p.parts),
                                         id_on(rest)),
                          c.graph);
        c.ante.front() = folded;
        return c;
      }
      case rule_tag::cut: {
        need_premises(p, 1);
        compiled c = run(p.premises[0]);
        if (c.ante.empty() || c.succ.empty()) fail(p, "cut needs formulas on both sides");
        if (!(c.ante.back() == c.succ.back()))
          fail(p, "cut formulas differ: " + to_string(c.ante.back()) + " vs " +
                      to_string(c.succ.back()));
        std::size_t n = ports_of(c.ante.back()).size();
        c.graph = trace_last(c.graph, n);
        c.ante.pop_back();
        c.succ.pop_back();
        return c;
      }
      case rule_tag::mix: {
        need_premises(p, 2);
        compiled a = run(p.premises[0]);
        compiled b = run(p.premises[1]);
        compiled out;
        out.ante = a.ante;
        out.ante.insert(out.ante.end(), b.ante.begin(), b.ante.end());
        out.succ = a.succ;
        out.succ.insert(out.succ.end(), b.succ.begin(), b.succ.end());
        out.graph = tensor_product(a.graph, b.graph);
        return out;
      }
      case rule_tag::sum_rule: {
        need_premises(p, 2);
        compiled a = run(p.premises[0]);
        compiled b = run(p.premises[1]);
        if (a.ante != b.ante || a.succ != b.succ)
          fail(p, "sum needs premises of the same sequent");
        compiled out;
        out.ante = a.ante;
        out.succ = a.succ;
        out.graph = sum_nets(scale(a.graph, p.w1), scale(b.graph, p.w2));
        return out;
      }
      case rule_tag::measure:
      case rule_tag::control: {
        if (p.premises.size() < 2) fail(p, "boxes need at least two branches");
        for (const auto& q : p.premises)
          if (!q) fail(p, "null premise");
        std::vector<compiled> cs;
        for (const auto& q : p.premises) cs.push_back(run(q));
        for (std::size_t i = 1; i < cs.size(); ++i)
          if (cs[i].ante != cs[0].ante || cs[i].succ != cs[0].succ)
            fail(p, "box branches must prove the same sequent");
        std::vector<sum_net> branches;
        for (auto& c : cs) branches.push_back(c.graph);
        compiled out;
        out.ante = cs[0].ante;
        out.succ = cs[0].succ;
        formula tag = box_index_carrier(p.premises.size());
        if (p.rule == rule_tag::measure) {
          out.graph = box_net(branches, box_dir::measure);
          out.succ.push_back(tag);
        } else {
          out.graph = box_net(branches, box_dir::control);
          out.ante.push_back(tag);
        }
        return out;
      }
    }
    throw engine_fault("unreachable rule tag");
  }

  const signature& sig_;
  std::map<const proof*, compiled> memo_;
};

}  // namespace

check_result check_proof(const proof_ptr& p, const signature& sig) {
  check_result res;
  if (!p) {
    res.ok = false;
    res.diagnostics.push_back("empty proof");
    return res;
  }
  try {
    compiler comp(sig);
    const compiled& c = comp.run(p);
    auto diags = validate(c.graph, sig);
    if (!diags.empty()) {
      res.ok = false;
      for (auto& d : diags) res.diagnostics.push_back("compiled net: " + d);
      return res;
    }
    res.conclusion.ante = c.ante;
    res.conclusion.succ = c.succ;
    res.conclusion.scalar = abstract_weight(c.graph);
  } catch (const error& e) {
    res.ok = false;
    res.diagnostics.push_back(e.what());
  }
  return res;
}

sum_net proof_to_net(const proof_ptr& p, const signature& sig) {
  if (!p) throw error("empty proof");
  compiler comp(sig);
  return comp.run(p).graph;
}

proof_ptr derived_cut(const proof_ptr& p1, const proof_ptr& p2, const signature& sig) {
  auto r1 = check_proof(p1, sig);
  auto r2 = check_proof(p2, sig);
  if (!r1.ok) throw error("derived_cut: first premise does not check");
  if (!r2.ok) throw error("derived_cut: second premise does not check");
  if (r1.conclusion.succ.empty() || r2.conclusion.ante.empty())
    throw error("derived_cut: no cut formula");
  const formula a = r1.conclusion.succ.back();
  if (!(a == r2.conclusion.ante.front()))
    throw error("derived_cut: cut formulas differ: " + to_string(a) + " vs " +
                to_string(r2.conclusion.ante.front()));

  // mix, walk A to the end of each side with exchanges, then trace it.
  proof mixed;
  mixed.rule = rule_tag::mix;
  mixed.premises = {p1, p2};
  proof_ptr cur = make_proof(std::move(mixed));
  const std::size_t n1 = r1.conclusion.ante.size();
  const std::size_t g2 = r2.conclusion.ante.size() - 1;  // formulas after A on the left
  for (std::size_t i = 0; i < g2; ++i) {
    proof q;
    q.rule = rule_tag::exch_l;
    q.premises = {cur};
    q.pos = n1 + i;
    cur = make_proof(std::move(q));
  }
  const std::size_t d1 = r1.conclusion.succ.size() - 1;  // formulas before A on the right
  const std::size_t d2 = r2.conclusion.succ.size();
  for (std::size_t i = 0; i < d2; ++i) {
    proof q;
    q.rule = rule_tag::exch_r;
    q.premises = {cur};
    q.pos = d1 + i;
    cur = make_proof(std::move(q));
  }
  proof final_cut;
  final_cut.rule = rule_tag::cut;
  final_cut.premises = {cur};
  return make_proof(std::move(final_cut));
}

sum_net cut_eliminate(const proof_ptr& p, const signature& sig, const rewrite_options& opts) {
  sum_net g = proof_to_net(p, sig);
  return normalize(std::move(g), sig, strategy::deterministic(), opts).nf;
}

}  // namespace tsl
