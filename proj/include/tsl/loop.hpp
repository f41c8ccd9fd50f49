#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace tsl {

// One letter of a cyclic generator word: generator name plus whether the
// cycle traverses it against its orientation (codomain to domain).
struct cycle_letter {
  std::string gen;
  bool reversed = false;

  auto operator<=>(const cycle_letter&) const = default;
};

// Scalar labels produced by closed wiring: declared labels from the
// signature, dimensions of atoms (pure-wire circles), and cyclic generator
// words (traced linear cycles). Cyclic words are stored canonically: the
// least word over all rotations and both traversal directions.
class loop_label {
 public:
  enum class kind_t : std::uint8_t { declared, dimension, cycle };

  static loop_label declared(std::string name);
  static loop_label dimension(std::string atom);
  static loop_label cycle(std::vector<cycle_letter> word);

  kind_t kind() const { return kind_; }
  const std::string& name() const { return name_; }  // declared / dimension
  const std::vector<cycle_letter>& word() const { return word_; }

  auto operator<=>(const loop_label&) const = default;

 private:
  kind_t kind_ = kind_t::declared;
  std::string name_;
  std::vector<cycle_letter> word_;
};

std::string to_string(const loop_label& l);

// Multiset of loop labels, as label -> multiplicity. The product of labels.
using loop_monomial = std::map<loop_label, std::uint32_t>;

loop_monomial monomial_mul(const loop_monomial& a, const loop_monomial& b);
std::string to_string(const loop_monomial& m);

// Finite formal sum of loop monomials with natural coefficients. This is the
// commutative-semiring closure of loop labels: + is multiset union of terms,
// * distributes and merges monomials.
class loop_poly {
 public:
  loop_poly() = default;  // zero
  static loop_poly zero() { return {}; }
  static loop_poly one();
  static loop_poly label(loop_label l);
  static loop_poly monomial(loop_monomial m, std::uint64_t coeff = 1);
  static loop_poly constant(std::uint64_t n);

  bool is_zero() const { return terms_.empty(); }
  bool is_one() const;
  // Single term with coefficient 1: the weights a box branch can absorb.
  bool is_single_monomial() const;
  loop_monomial as_monomial() const;

  const std::map<loop_monomial, std::uint64_t>& terms() const { return terms_; }

  loop_poly operator+(const loop_poly& o) const;
  loop_poly operator*(const loop_poly& o) const;
  loop_poly& operator+=(const loop_poly& o);
  loop_poly& operator*=(const loop_poly& o);

  bool operator==(const loop_poly&) const = default;
  bool operator<(const loop_poly& o) const { return terms_ < o.terms_; }

 private:
  std::map<loop_monomial, std::uint64_t> terms_;
};

std::string to_string(const loop_poly& p);

}  // namespace tsl
