#include "tsl/formula.hpp"

namespace tsl {

formula formula::zero() {
  static const formula f{std::make_shared<const rep>(rep{kind_t::zero, "", false, nullptr, nullptr})};
  return f;
}

formula formula::unit() {
  static const formula f{std::make_shared<const rep>(rep{kind_t::unit, "", false, nullptr, nullptr})};
  return f;
}

formula formula::atom(std::string name, bool dualled) {
  if (name.empty()) throw error("atom name must be non-empty");
  return formula{std::make_shared<const rep>(rep{kind_t::atom, std::move(name), dualled, nullptr, nullptr})};
}

formula formula::tensor(formula lhs, formula rhs) {
  return formula{std::make_shared<const rep>(rep{kind_t::tensor, "", false, lhs.rep_, rhs.rep_})};
}

formula formula::sum(formula lhs, formula rhs) {
  return formula{std::make_shared<const rep>(rep{kind_t::sum, "", false, lhs.rep_, rhs.rep_})};
}

const std::string& formula::atom_name() const {
  if (!is_atom()) throw error("atom_name on non-atom formula");
  return rep_->name;
}

bool formula::atom_dualled() const {
  if (!is_atom()) throw error("atom_dualled on non-atom formula");
  return rep_->dualled;
}

formula formula::left() const {
  if (!rep_->lhs) throw error("left() on leaf formula");
  return formula{rep_->lhs};
}

formula formula::right() const {
  if (!rep_->rhs) throw error("right() on leaf formula");
  return formula{rep_->rhs};
}

int formula::compare(const rep& a, const rep& b) {
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  switch (a.kind) {
    case kind_t::zero:
    case kind_t::unit:
      return 0;
    case kind_t::atom: {
      if (int c = a.name.compare(b.name); c != 0) return c < 0 ? -1 : 1;
      if (a.dualled != b.dualled) return a.dualled ? 1 : -1;
      return 0;
    }
    case kind_t::tensor:
    case kind_t::sum: {
      if (a.lhs.get() != b.lhs.get()) {
        if (int c = compare(*a.lhs, *b.lhs); c != 0) return c;
      }
      if (a.rhs.get() != b.rhs.get()) {
        if (int c = compare(*a.rhs, *b.rhs); c != 0) return c;
      }
      return 0;
    }
  }
  return 0;
}

bool formula::operator==(const formula& other) const {
  if (rep_.get() == other.rep_.get()) return true;
  return compare(*rep_, *other.rep_) == 0;
}

bool formula::operator<(const formula& other) const {
  if (rep_.get() == other.rep_.get()) return false;
  return compare(*rep_, *other.rep_) < 0;
}

std::size_t formula::hash() const {
  // FNV-1a over a structural encoding; stable across runs.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  auto walk = [&mix](const rep& r, auto&& self) -> void {
    mix(static_cast<std::uint64_t>(r.kind) + 17);
    if (r.kind == kind_t::atom) {
      for (char c : r.name) mix(static_cast<unsigned char>(c));
      mix(r.dualled ? 2 : 3);
    }
    if (r.lhs) self(*r.lhs, self);
    if (r.rhs) self(*r.rhs, self);
  };
  walk(*rep_, walk);
  return static_cast<std::size_t>(h);
}

formula dual(const formula& f) {
  switch (f.kind()) {
    case formula::kind_t::zero:
    case formula::kind_t::unit:
      return f;
    case formula::kind_t::atom:
      return formula::atom(f.atom_name(), !f.atom_dualled());
    case formula::kind_t::tensor:
      return formula::tensor(dual(f.right()), dual(f.left()));
    case formula::kind_t::sum:
      return formula::sum(dual(f.left()), dual(f.right()));
  }
  throw engine_fault("unreachable formula kind");
}

bool is_multiplicative(const formula& f) {
  switch (f.kind()) {
    case formula::kind_t::zero:
      return false;
    case formula::kind_t::unit:
    case formula::kind_t::atom:
      return true;
    case formula::kind_t::tensor:
      return is_multiplicative(f.left()) && is_multiplicative(f.right());
    case formula::kind_t::sum:
      return false;
  }
  throw engine_fault("unreachable formula kind");
}

formula reduce(const formula& f) {
  switch (f.kind()) {
    case formula::kind_t::zero:
    case formula::kind_t::unit:
    case formula::kind_t::atom:
      return f;
    case formula::kind_t::tensor: {
      formula l = reduce(f.left());
      formula r = reduce(f.right());
      if (l.is_zero() || r.is_zero()) return formula::zero();
      if (l.is_unit()) return r;
      if (r.is_unit()) return l;
      return formula::tensor(l, r);
    }
    case formula::kind_t::sum: {
      formula l = reduce(f.left());
      formula r = reduce(f.right());
      if (l.is_zero()) return r;
      if (r.is_zero()) return l;
      return formula::sum(l, r);
    }
  }
  throw engine_fault("unreachable formula kind");
}

bool is_reduced(const formula& f) {
  switch (f.kind()) {
    case formula::kind_t::zero:
    case formula::kind_t::unit:
    case formula::kind_t::atom:
      return true;
    case formula::kind_t::tensor: {
      const formula& l = f.left();
      const formula& r = f.right();
      if (l.is_zero() || r.is_zero() || l.is_unit() || r.is_unit()) return false;
      return is_reduced(l) && is_reduced(r);
    }
    case formula::kind_t::sum: {
      const formula& l = f.left();
      const formula& r = f.right();
      if (l.is_zero() || r.is_zero()) return false;
      return is_reduced(l) && is_reduced(r);
    }
  }
  throw engine_fault("unreachable formula kind");
}

namespace {

void collect_ports(const formula& f, std::vector<formula>& out) {
  if (f.is_tensor()) {
    collect_ports(f.left(), out);
    collect_ports(f.right(), out);
  } else {
    out.push_back(f);
  }
}

}  // namespace

std::vector<formula> ports_of(const formula& f) {
  if (!is_reduced(f)) throw error("ports_of requires a reduced formula: " + to_string(f));
  if (f.is_unit()) return {};
  std::vector<formula> out;
  collect_ports(f, out);
  return out;
}

namespace {

// Precedence: atoms/units/0 bind tightest, then (X), then (+).
void print(const formula& f, std::string& out, int parent_level) {
  int level = 0;  // 0 leaf, 1 tensor, 2 sum
  switch (f.kind()) {
    case formula::kind_t::zero:
      out += '0';
      return;
    case formula::kind_t::unit:
      out += 'I';
      return;
    case formula::kind_t::atom:
      out += f.atom_name();
      if (f.atom_dualled()) out += '*';
      return;
    case formula::kind_t::tensor:
      level = 1;
      break;
    case formula::kind_t::sum:
      level = 2;
      break;
  }
  bool paren = level > parent_level;
  if (paren) out += '(';
  // Both connectives print left-associated; children at the same level get
  // parens on the right to preserve the tree shape on re-parse.
  print(f.left(), out, level);
  out += level == 1 ? " @ " : " + ";
  print(f.right(), out, level - 1);
  if (paren) out += ')';
}

}  // namespace

std::string to_string(const formula& f) {
  std::string out;
  print(f, out, 2);
  return out;
}

}  // namespace tsl
