#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsl {

// Error thrown on malformed user-level input (parse errors, ill-typed
// constructions, bad indices). Engine-internal failures use engine_fault.
struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

struct engine_fault : std::runtime_error {
  explicit engine_fault(const std::string& what) : std::runtime_error(what) {}
};

// Object-language formulae: 0, I, atoms A and duals A*, tensor, direct sum.
// Immutable shared trees; cheap to copy.
class formula {
 public:
  enum class kind_t : std::uint8_t { zero, unit, atom, tensor, sum };

  formula() : formula(unit()) {}

  static formula zero();
  static formula unit();
  static formula atom(std::string name, bool dualled = false);
  static formula tensor(formula lhs, formula rhs);
  static formula sum(formula lhs, formula rhs);

  kind_t kind() const { return rep_->kind; }
  bool is_zero() const { return kind() == kind_t::zero; }
  bool is_unit() const { return kind() == kind_t::unit; }
  bool is_atom() const { return kind() == kind_t::atom; }
  bool is_tensor() const { return kind() == kind_t::tensor; }
  bool is_sum() const { return kind() == kind_t::sum; }

  const std::string& atom_name() const;
  bool atom_dualled() const;
  formula left() const;
  formula right() const;

  bool operator==(const formula& other) const;
  bool operator!=(const formula& other) const { return !(*this == other); }
  // Structural total order (kind, then payload, then children); used for maps.
  bool operator<(const formula& other) const;

  std::size_t hash() const;

 private:
  struct rep {
    kind_t kind;
    std::string name;  // atom
    bool dualled = false;
    std::shared_ptr<const rep> lhs, rhs;
  };
  explicit formula(std::shared_ptr<const rep> r) : rep_(std::move(r)) {}
  static int compare(const rep& a, const rep& b);

  std::shared_ptr<const rep> rep_;
};

// De Morgan dual: swaps tensor operands, keeps sum order, stars atoms.
formula dual(const formula& f);

// True when the formula mentions no 0 and no direct sum.
bool is_multiplicative(const formula& f);

// Normal form under the six unit/absorption equivalences:
//   X (X) I == X, I (X) X == X, X (X) 0 == 0, 0 (X) X == 0,
//   X (+) 0 == X, 0 (+) X == X.
formula reduce(const formula& f);
bool is_reduced(const formula& f);

// Port carriers of a reduced formula: the tensor spine flattened left to
// right. unit contributes no ports; any other reduced formula contributes
// its non-tensor factors. ports_of(zero) is a single zero-typed port.
std::vector<formula> ports_of(const formula& f);

std::string to_string(const formula& f);

}  // namespace tsl
