#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tsl/net.hpp"

namespace tsl {

// A monoidal generator: name plus domain/codomain lists of atom references
// (one port each).
struct generator {
  std::string name;
  std::vector<formula> dom, cod;
  bool operator==(const generator&) const = default;
};

// An oriented rewriting equation between two single nets over a common
// boundary. Orientation is left-to-right. The left side must contain at
// least one node and be connected, so it can be located as a subgraph.
// `source` holds the expression text the equation was parsed from, when it
// came from a signature file; it is what serialization re-emits. Equations
// declared programmatically leave it empty.
struct user_equation {
  std::string name;
  net lhs, rhs;
  std::string source;
  bool operator==(const user_equation&) const = default;
};

class signature {
 public:
  void declare_atom(const std::string& name);
  void declare_generator(generator g);
  void declare_loop(const std::string& name);
  // Structural registration checks only; semantic validation against a model
  // is a separate concern (see check_equation in semantics).
  void declare_equation(user_equation eq);

  bool has_atom(const std::string& name) const { return atoms_.count(name) != 0; }
  bool has_loop(const std::string& name) const { return loops_.count(name) != 0; }
  const generator* find_generator(const std::string& name) const;

  const std::set<std::string>& atoms() const { return atoms_; }
  const std::set<std::string>& loops() const { return loops_; }
  const std::map<std::string, generator>& generators() const { return gens_; }
  const std::vector<user_equation>& equations() const { return eqs_; }

 private:
  std::set<std::string> atoms_;
  std::map<std::string, generator> gens_;
  std::set<std::string> loops_;
  std::vector<user_equation> eqs_;
};

// Full validation: structural well-formedness plus signature cross-checks
// (declared atoms in every carrier, generator payloads matching their
// declarations, declared loop labels known), recursively through boxes.
std::vector<std::string> validate(const net& g, const signature& sig);
std::vector<std::string> validate(const sum_net& s, const signature& sig);

}  // namespace tsl
