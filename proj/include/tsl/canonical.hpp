#pragma once

#include <cstdint>
#include <string>

#include "tsl/net.hpp"

namespace tsl {

// Canonical text form of a net, invariant under node renumbering: computed
// by boundary-anchored color refinement with individualization backtracking,
// so two nets produce the same string exactly when they are isomorphic as
// port graphs (boundaries pointwise fixed). Box branches are canonicalized
// recursively in branch order.
std::string canonical_net_string(const net& g);

// Canonical form of a weighted sum: free loops folded into weights, summands
// canonicalized and sorted. Two normal forms are equal morphisms exactly when
// these strings match.
std::string canonical_sum_string(const sum_net& s);

bool isomorphic(const net& a, const net& b);

std::uint64_t fnv1a64(const std::string& s);
// 16-hex-digit digest of the canonical sum string.
std::string digest(const sum_net& s);

}  // namespace tsl
