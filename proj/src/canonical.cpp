#include "tsl/canonical.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace tsl {

namespace {

std::string static_color(const node& n) {
  std::string s;
  switch (n.kind) {
    case node_kind::generator:
      s = "g:" + n.name + ":";
      for (const auto& f : n.gdom) s += to_string(f) + ",";
      s += "->";
      for (const auto& f : n.gcod) s += to_string(f) + ",";
      return s;
    case node_kind::eta:
      return "eta:" + to_string(n.carrier);
    case node_kind::eps:
      return "eps:" + to_string(n.carrier);
    case node_kind::inject:
    case node_kind::project:
      s = n.kind == node_kind::inject ? "inj:" : "proj:";
      s += std::to_string(n.index) + ":";
      for (const auto& f : n.summands) s += to_string(f) + "|";
      return s;
    case node_kind::box:
      s = n.dir == box_dir::measure ? "boxm{" : "boxc{";
      for (const auto& b : n.branches) s += canonical_net_string(b) + "&";
      return s + "}";
  }
  return "?";
}

struct peer_table {
  // peer endpoint for every wired endpoint
  std::map<endpoint, endpoint> peer;
};

peer_table build_peers(const net& g) {
  peer_table t;
  for (const auto& w : g.wires) {
    t.peer[w.from] = w.to;
    t.peer[w.to] = w.from;
  }
  return t;
}

std::string peer_tag(const peer_table& t, const std::vector<int>& color, const endpoint& e) {
  auto it = t.peer.find(e);
  if (it == t.peer.end()) return "x";  // unwired (invalid nets still get a string)
  const endpoint& p = it->second;
  switch (p.kind) {
    case endpoint::kind_t::bnd_in:
      return "bi" + std::to_string(p.port);
    case endpoint::kind_t::bnd_out:
      return "bo" + std::to_string(p.port);
    case endpoint::kind_t::node_in:
      return "n" + std::to_string(color[p.node]) + "i" + std::to_string(p.port);
    case endpoint::kind_t::node_out:
      return "n" + std::to_string(color[p.node]) + "o" + std::to_string(p.port);
  }
  return "?";
}

// One refinement pass; returns number of distinct colors.
std::size_t refine_once(const net& g, const peer_table& t, std::vector<int>& color) {
  std::vector<std::string> sig(g.nodes.size());
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    std::string s = std::to_string(color[n]) + "|";
    auto ins = node_input_carriers(g.nodes[n]);
    auto outs = node_output_carriers(g.nodes[n]);
    for (std::size_t p = 0; p < ins.size(); ++p)
      s += peer_tag(t, color, node_in(static_cast<std::int32_t>(n), static_cast<std::int32_t>(p))) + ",";
    s += ";";
    for (std::size_t p = 0; p < outs.size(); ++p)
      s += peer_tag(t, color, node_out(static_cast<std::int32_t>(n), static_cast<std::int32_t>(p))) + ",";
    sig[n] = std::move(s);
  }
  std::map<std::string, int> index;
  for (const auto& s : sig) index.emplace(s, 0);
  int next = 0;
  for (auto& [k, v] : index) v = next++;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) color[n] = index[sig[n]];
  return index.size();
}

void refine(const net& g, const peer_table& t, std::vector<int>& color) {
  std::size_t classes = 0;
  for (std::size_t round = 0; round <= g.nodes.size() + 1; ++round) {
    std::size_t c = refine_once(g, t, color);
    if (c == classes) return;
    classes = c;
    if (classes == g.nodes.size()) return;
  }
}

std::string render(const net& g, const std::vector<std::string>& statics,
                   const std::vector<int>& color) {
  // color is discrete here: rank nodes by color.
  std::vector<std::size_t> order(g.nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&color](std::size_t a, std::size_t b) { return color[a] < color[b]; });
  std::vector<int> pos(g.nodes.size());
  for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = static_cast<int>(r);

  std::string s = "B[";
  for (const auto& f : g.bnd.inputs) s += to_string(f) + ";";
  s += "]C[";
  for (const auto& f : g.bnd.outputs) s += to_string(f) + ";";
  s += "]L[" + to_string(g.free_loops) + "]N[";
  for (auto n : order) s += statics[n] + ";";
  s += "]W[";
  auto enc = [&pos](const endpoint& e) {
    switch (e.kind) {
      case endpoint::kind_t::bnd_in:
        return "bi" + std::to_string(e.port);
      case endpoint::kind_t::bnd_out:
        return "bo" + std::to_string(e.port);
      case endpoint::kind_t::node_in:
        return "n" + std::to_string(pos[e.node]) + "i" + std::to_string(e.port);
      case endpoint::kind_t::node_out:
        return "n" + std::to_string(pos[e.node]) + "o" + std::to_string(e.port);
    }
    return std::string("?");
  };
  std::vector<std::string> ws;
  ws.reserve(g.wires.size());
  for (const auto& w : g.wires) ws.push_back(enc(w.from) + ">" + enc(w.to));
  std::sort(ws.begin(), ws.end());
  for (const auto& w : ws) s += w + ";";
  return s + "]";
}

std::string canonical_search(const net& g, const peer_table& t,
                             const std::vector<std::string>& statics, std::vector<int> color,
                             int depth) {
  if (depth > 64) throw engine_fault("canonical labeling recursion too deep");
  refine(g, t, color);
  std::set<int> distinct(color.begin(), color.end());
  if (distinct.size() == g.nodes.size()) return render(g, statics, color);

  // Smallest non-singleton cell with the lowest color; branch on each member.
  std::map<int, std::vector<std::size_t>> cells;
  for (std::size_t n = 0; n < color.size(); ++n) cells[color[n]].push_back(n);
  int target = -1;
  std::size_t best_size = 0;
  for (const auto& [c, members] : cells) {
    if (members.size() < 2) continue;
    if (target == -1 || members.size() < best_size) {
      target = c;
      best_size = members.size();
    }
  }
  std::string best;
  for (auto member : cells[target]) {
    std::vector<int> c2 = color;
    c2[member] = static_cast<int>(g.nodes.size()) + 1;  // individualize
    std::string cand = canonical_search(g, t, statics, std::move(c2), depth + 1);
    if (best.empty() || cand < best) best = std::move(cand);
  }
  return best;
}

}  // namespace

std::string canonical_net_string(const net& g) {
  peer_table t = build_peers(g);
  std::vector<std::string> statics(g.nodes.size());
  for (std::size_t n = 0; n < g.nodes.size(); ++n) statics[n] = static_color(g.nodes[n]);
  std::map<std::string, int> init;
  for (const auto& s : statics) init.emplace(s, 0);
  int next = 0;
  for (auto& [k, v] : init) v = next++;
  std::vector<int> color(g.nodes.size());
  for (std::size_t n = 0; n < g.nodes.size(); ++n) color[n] = init[statics[n]];
  return canonical_search(g, t, statics, std::move(color), 0);
}

std::string canonical_sum_string(const sum_net& s) {
  sum_net c = s;
  fold_loops(c);
  std::string out = "S{in[";
  for (const auto& f : c.bnd.inputs) out += to_string(f) + ";";
  out += "]out[";
  for (const auto& f : c.bnd.outputs) out += to_string(f) + ";";
  out += "]:";
  std::vector<std::string> parts;
  parts.reserve(c.summands.size());
  for (const auto& sm : c.summands)
    parts.push_back("(" + to_string(sm.weight) + ")*" + canonical_net_string(sm.graph));
  std::sort(parts.begin(), parts.end());
  for (const auto& p : parts) out += p + " + ";
  return out + "}";
}

bool isomorphic(const net& a, const net& b) {
  if (!(a.bnd == b.bnd)) return false;
  if (a.nodes.size() != b.nodes.size() || a.wires.size() != b.wires.size()) return false;
  return canonical_net_string(a) == canonical_net_string(b);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string digest(const sum_net& s) {
  static const char* hex = "0123456789abcdef";
  std::uint64_t h = fnv1a64(canonical_sum_string(s));
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace tsl
