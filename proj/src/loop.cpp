#include "tsl/loop.hpp"

#include <algorithm>

#include "tsl/formula.hpp"

namespace tsl {

loop_label loop_label::declared(std::string name) {
  if (name.empty()) throw error("loop label name must be non-empty");
  loop_label l;
  l.kind_ = kind_t::declared;
  l.name_ = std::move(name);
  return l;
}

loop_label loop_label::dimension(std::string atom) {
  if (atom.empty()) throw error("dimension label needs an atom name");
  loop_label l;
  l.kind_ = kind_t::dimension;
  l.name_ = std::move(atom);
  return l;
}

namespace {

std::vector<cycle_letter> reverse_word(const std::vector<cycle_letter>& w) {
  std::vector<cycle_letter> out(w.rbegin(), w.rend());
  for (auto& c : out) c.reversed = !c.reversed;
  return out;
}

std::vector<cycle_letter> least_rotation(std::vector<cycle_letter> w) {
  std::vector<cycle_letter> best = w;
  for (std::size_t i = 1; i < w.size(); ++i) {
    std::rotate(w.begin(), w.begin() + 1, w.end());
    if (w < best) best = w;
  }
  return best;
}

}  // namespace

loop_label loop_label::cycle(std::vector<cycle_letter> word) {
  if (word.empty()) throw error("cyclic word must be non-empty");
  std::vector<cycle_letter> fwd = least_rotation(word);
  std::vector<cycle_letter> bwd = least_rotation(reverse_word(word));
  loop_label l;
  l.kind_ = kind_t::cycle;
  l.word_ = fwd < bwd ? fwd : bwd;
  return l;
}

std::string to_string(const loop_label& l) {
  switch (l.kind()) {
    case loop_label::kind_t::declared:
      return l.name();
    case loop_label::kind_t::dimension:
      return "dim(" + l.name() + ")";
    case loop_label::kind_t::cycle: {
      std::string out = "cyc(";
      bool first = true;
      for (const auto& c : l.word()) {
        if (!first) out += ",";
        first = false;
        out += c.gen;
        if (c.reversed) out += "'";
      }
      return out + ")";
    }
  }
  return "?";
}

loop_monomial monomial_mul(const loop_monomial& a, const loop_monomial& b) {
  loop_monomial out = a;
  for (const auto& [l, n] : b) out[l] += n;
  return out;
}

std::string to_string(const loop_monomial& m) {
  if (m.empty()) return "1";
  std::string out;
  bool first = true;
  for (const auto& [l, n] : m) {
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!first) out += " * ";
      first = false;
      out += to_string(l);
    }
  }
  return out;
}

loop_poly loop_poly::one() { return constant(1); }

loop_poly loop_poly::label(loop_label l) {
  loop_monomial m;
  m[std::move(l)] = 1;
  return monomial(std::move(m));
}

loop_poly loop_poly::monomial(loop_monomial m, std::uint64_t coeff) {
  loop_poly p;
  if (coeff != 0) p.terms_[std::move(m)] = coeff;
  return p;
}

loop_poly loop_poly::constant(std::uint64_t n) { return monomial({}, n); }

bool loop_poly::is_one() const {
  return terms_.size() == 1 && terms_.begin()->first.empty() && terms_.begin()->second == 1;
}

bool loop_poly::is_single_monomial() const {
  return terms_.size() == 1 && terms_.begin()->second == 1;
}

loop_monomial loop_poly::as_monomial() const {
  if (!is_single_monomial()) throw error("loop polynomial is not a single monomial: " + to_string(*this));
  return terms_.begin()->first;
}

loop_poly& loop_poly::operator+=(const loop_poly& o) {
  for (const auto& [m, c] : o.terms_) {
    auto it = terms_.find(m);
    if (it == terms_.end())
      terms_.emplace(m, c);
    else
      it->second += c;
  }
  return *this;
}

loop_poly loop_poly::operator+(const loop_poly& o) const {
  loop_poly out = *this;
  out += o;
  return out;
}

loop_poly loop_poly::operator*(const loop_poly& o) const {
  loop_poly out;
  for (const auto& [m1, c1] : terms_)
    for (const auto& [m2, c2] : o.terms_) out.terms_[monomial_mul(m1, m2)] += c1 * c2;
  return out;
}

loop_poly& loop_poly::operator*=(const loop_poly& o) {
  *this = *this * o;
  return *this;
}

std::string to_string(const loop_poly& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    if (!first) out += " + ";
    first = false;
    if (m.empty()) {
      out += std::to_string(c);
    } else {
      if (c != 1) out += std::to_string(c) + " * ";
      out += to_string(m);
    }
  }
  return out;
}

}  // namespace tsl
