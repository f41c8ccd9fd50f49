#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tsl/signature.hpp"

namespace tsl {

// The two-element rig ({false,true}, or, and): connectivity semantics.
struct bool_rig {
  bool v = false;
  constexpr bool_rig() = default;
  constexpr bool_rig(bool b) : v(b) {}
  explicit constexpr bool_rig(int n) : v(n != 0) {}
  friend constexpr bool_rig operator+(bool_rig a, bool_rig b) { return bool_rig{a.v || b.v}; }
  friend constexpr bool_rig operator*(bool_rig a, bool_rig b) { return bool_rig{a.v && b.v}; }
  bool_rig& operator+=(bool_rig o) {
    v = v || o.v;
    return *this;
  }
  bool_rig& operator*=(bool_rig o) {
    v = v && o.v;
    return *this;
  }
  friend constexpr bool operator==(bool_rig a, bool_rig b) { return a.v == b.v; }
  friend constexpr bool operator!=(bool_rig a, bool_rig b) { return a.v != b.v; }
  friend constexpr bool_rig operator-(bool_rig a) { return a; }  // Eigen requires negation to exist
};

template <class S>
using mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Tolerance for the complex semiring; the exact semirings compare exactly.
inline constexpr double complex_tolerance = 1e-9;

template <class S>
struct scalar_ops;

template <>
struct scalar_ops<std::uint64_t> {
  static std::uint64_t zero() { return 0; }
  static std::uint64_t one() { return 1; }
  static std::uint64_t from_count(std::uint64_t n) { return n; }
  static bool approx_equal(std::uint64_t a, std::uint64_t b) { return a == b; }
  static std::string str(std::uint64_t v) { return std::to_string(v); }
};

template <>
struct scalar_ops<std::complex<double>> {
  static std::complex<double> zero() { return {0.0, 0.0}; }
  static std::complex<double> one() { return {1.0, 0.0}; }
  static std::complex<double> from_count(std::uint64_t n) {
    return {static_cast<double>(n), 0.0};
  }
  static bool approx_equal(std::complex<double> a, std::complex<double> b) {
    return std::abs(a - b) <= complex_tolerance;
  }
  static std::string str(std::complex<double> v) {
    std::ostringstream os;
    os.precision(12);
    if (v.imag() == 0.0) {
      os << v.real();
    } else {
      os << v.real();
      if (v.imag() >= 0.0) os << "+";
      os << v.imag() << "i";
    }
    return os.str();
  }
};

template <>
struct scalar_ops<bool_rig> {
  static bool_rig zero() { return bool_rig{false}; }
  static bool_rig one() { return bool_rig{true}; }
  static bool_rig from_count(std::uint64_t n) { return bool_rig{n != 0}; }
  static bool approx_equal(bool_rig a, bool_rig b) { return a == b; }
  static std::string str(bool_rig v) { return v.v ? "1" : "0"; }
};

// An interpretation of a signature: atom dimensions, a matrix per generator
// (rows = codomain, columns = domain, port-0-major composite indices), and a
// value per declared loop label.
template <class S>
struct model {
  std::map<std::string, int> dims;
  std::map<std::string, mat<S>> gens;
  std::map<std::string, S> loops;
};

inline int dim_of(const formula& f, const std::map<std::string, int>& dims) {
  switch (f.kind()) {
    case formula::kind_t::zero:
      return 0;
    case formula::kind_t::unit:
      return 1;
    case formula::kind_t::atom: {
      auto it = dims.find(f.atom_name());
      if (it == dims.end()) throw error("model does not set dim for atom '" + f.atom_name() + "'");
      return it->second;
    }
    case formula::kind_t::tensor:
      return dim_of(f.left(), dims) * dim_of(f.right(), dims);
    case formula::kind_t::sum:
      return dim_of(f.left(), dims) + dim_of(f.right(), dims);
  }
  throw engine_fault("unreachable formula kind");
}

template <class S>
std::vector<std::string> model_diagnostics(const model<S>& m, const signature& sig) {
  std::vector<std::string> out;
  for (const auto& a : sig.atoms()) {
    auto it = m.dims.find(a);
    if (it == m.dims.end())
      out.push_back("model does not set dim for atom '" + a + "'");
    else if (it->second < 1)
      out.push_back("atom '" + a + "' has non-positive dimension");
  }
  for (const auto& [name, g] : sig.generators()) {
    auto it = m.gens.find(name);
    if (it == m.gens.end()) {
      out.push_back("model does not set a matrix for generator '" + name + "'");
      continue;
    }
    long rows = 1, cols = 1;
    bool sized = true;
    for (const auto& f : g.cod) {
      auto d = m.dims.find(f.atom_name());
      if (d == m.dims.end()) { sized = false; break; }
      rows *= d->second;
    }
    for (const auto& f : g.dom) {
      auto d = m.dims.find(f.atom_name());
      if (d == m.dims.end()) { sized = false; break; }
      cols *= d->second;
    }
    if (sized && (it->second.rows() != rows || it->second.cols() != cols))
      out.push_back("matrix for generator '" + name + "' has shape " +
                    std::to_string(it->second.rows()) + "x" + std::to_string(it->second.cols()) +
                    ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (const auto& l : sig.loops())
    if (!m.loops.count(l)) out.push_back("model does not set a value for loop label '" + l + "'");
  return out;
}

template <class S>
mat<S> evaluate(const net& g, const model<S>& m);

template <class S>
S loop_label_value(const loop_label& l, const model<S>& m) {
  switch (l.kind()) {
    case loop_label::kind_t::declared: {
      auto it = m.loops.find(l.name());
      if (it == m.loops.end())
        throw error("model does not set a value for loop label '" + l.name() + "'");
      return it->second;
    }
    case loop_label::kind_t::dimension: {
      auto it = m.dims.find(l.name());
      if (it == m.dims.end()) throw error("model does not set dim for atom '" + l.name() + "'");
      return scalar_ops<S>::from_count(static_cast<std::uint64_t>(it->second));
    }
    case loop_label::kind_t::cycle: {
      // Trace of the word, transposing letters traversed against orientation.
      mat<S> acc;
      bool first = true;
      for (const auto& c : l.word()) {
        auto it = m.gens.find(c.gen);
        if (it == m.gens.end())
          throw error("model does not set a matrix for generator '" + c.gen + "'");
        mat<S> step = c.reversed ? mat<S>(it->second.transpose()) : it->second;
        if (first) {
          acc = step;
          first = false;
        } else {
          acc = step.lazyProduct(acc).eval();
        }
      }
      S t = scalar_ops<S>::zero();
      for (long i = 0; i < acc.rows(); ++i) t += acc(i, i);
      return t;
    }
  }
  throw engine_fault("unreachable loop label kind");
}

template <class S>
S loop_monomial_value(const loop_monomial& mono, const model<S>& m) {
  S acc = scalar_ops<S>::one();
  for (const auto& [l, n] : mono) {
    S v = loop_label_value(l, m);
    for (std::uint32_t i = 0; i < n; ++i) acc *= v;
  }
  return acc;
}

template <class S>
S loop_poly_value(const loop_poly& p, const model<S>& m) {
  S acc = scalar_ops<S>::zero();
  for (const auto& [mono, coeff] : p.terms()) {
    S term = scalar_ops<S>::from_count(coeff);
    term *= loop_monomial_value(mono, m);
    acc += term;
  }
  return acc;
}

namespace detail {

inline constexpr std::size_t eval_entry_limit = 1u << 20;  // ~1e6 entries

template <class S>
struct tensor_nd {
  std::vector<int> ids;
  std::vector<long> dims;
  std::vector<S> data;  // row-major, slot 0 slowest

  std::size_t size() const {
    std::size_t s = 1;
    for (long d : dims) s *= static_cast<std::size_t>(d);
    return s;
  }
};

template <class S>
tensor_nd<S> permute_tensor(const tensor_nd<S>& t, const std::vector<int>& perm) {
  tensor_nd<S> out;
  out.ids.resize(perm.size());
  out.dims.resize(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.ids[i] = t.ids[perm[i]];
    out.dims[i] = t.dims[perm[i]];
  }
  out.data.assign(t.size(), scalar_ops<S>::zero());
  if (t.size() == 0) return out;
  const std::size_t rank = t.dims.size();
  std::vector<std::size_t> new_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) new_strides[i - 1] = new_strides[i] * out.dims[i];
  std::vector<long> tuple(rank, 0);
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    std::size_t nf = 0;
    for (std::size_t i = 0; i < rank; ++i) nf += tuple[perm[i]] * new_strides[i];
    out.data[nf] = t.data[flat];
    for (std::size_t i = rank; i-- > 0;) {
      if (++tuple[i] < t.dims[i]) break;
      tuple[i] = 0;
    }
  }
  return out;
}

// Contract all slot pairs within one tensor that carry the same id.
template <class S>
void self_trace(tensor_nd<S>& t) {
  for (;;) {
    int a = -1, b = -1;
    for (std::size_t i = 0; i < t.ids.size() && a < 0; ++i)
      for (std::size_t j = i + 1; j < t.ids.size(); ++j)
        if (t.ids[i] == t.ids[j]) {
          a = static_cast<int>(i);
          b = static_cast<int>(j);
          break;
        }
    if (a < 0) return;
    tensor_nd<S> out;
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
      if (static_cast<int>(i) == a || static_cast<int>(i) == b) continue;
      out.ids.push_back(t.ids[i]);
      out.dims.push_back(t.dims[i]);
    }
    out.data.assign(out.size(), scalar_ops<S>::zero());
    const std::size_t rank = t.dims.size();
    std::vector<std::size_t> strides(rank, 1);
    for (std::size_t i = rank; i-- > 1;) strides[i - 1] = strides[i] * t.dims[i];
    const long d = t.dims[a];
    std::vector<long> tuple(out.dims.size(), 0);
    const std::size_t osize = out.size();
    for (std::size_t of = 0; of < osize; ++of) {
      S acc = scalar_ops<S>::zero();
      for (long k = 0; k < d; ++k) {
        std::size_t flat = 0;
        std::size_t oi = 0;
        for (std::size_t i = 0; i < rank; ++i) {
          long idx;
          if (static_cast<int>(i) == a || static_cast<int>(i) == b)
            idx = k;
          else
            idx = tuple[oi++];
          flat += idx * strides[i];
        }
        acc += t.data[flat];
      }
      out.data[of] = acc;
      for (std::size_t i = out.dims.size(); i-- > 0;) {
        if (++tuple[i] < out.dims[i]) break;
        tuple[i] = 0;
      }
    }
    t = std::move(out);
  }
}

template <class S>
tensor_nd<S> contract_pair(const tensor_nd<S>& a, const tensor_nd<S>& b) {
  std::vector<int> shared;
  for (int id : a.ids)
    for (int jd : b.ids)
      if (id == jd) shared.push_back(id);
  std::sort(shared.begin(), shared.end());

  auto slot_of = [](const tensor_nd<S>& t, int id) {
    for (std::size_t i = 0; i < t.ids.size(); ++i)
      if (t.ids[i] == id) return static_cast<int>(i);
    throw engine_fault("missing tensor slot");
  };

  std::vector<int> pa, pb;
  for (std::size_t i = 0; i < a.ids.size(); ++i)
    if (std::find(shared.begin(), shared.end(), a.ids[i]) == shared.end())
      pa.push_back(static_cast<int>(i));
  std::size_t fa = pa.size();
  for (int id : shared) pa.push_back(slot_of(a, id));
  for (int id : shared) pb.push_back(slot_of(b, id));
  for (std::size_t i = 0; i < b.ids.size(); ++i)
    if (std::find(shared.begin(), shared.end(), b.ids[i]) == shared.end())
      pb.push_back(static_cast<int>(i));

  tensor_nd<S> ta = permute_tensor(a, pa);
  tensor_nd<S> tb = permute_tensor(b, pb);

  long rows = 1, mid = 1, cols = 1;
  for (std::size_t i = 0; i < fa; ++i) rows *= ta.dims[i];
  for (std::size_t i = fa; i < ta.dims.size(); ++i) mid *= ta.dims[i];
  for (std::size_t i = shared.size(); i < tb.dims.size(); ++i) cols *= tb.dims[i];

  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) > eval_entry_limit)
    throw error("evaluation intermediate exceeds the entry limit");

  tensor_nd<S> out;
  for (std::size_t i = 0; i < fa; ++i) {
    out.ids.push_back(ta.ids[i]);
    out.dims.push_back(ta.dims[i]);
  }
  for (std::size_t i = shared.size(); i < tb.dims.size(); ++i) {
    out.ids.push_back(tb.ids[i]);
    out.dims.push_back(tb.dims[i]);
  }
  if (rows == 0 || cols == 0 || mid == 0) {
    // Empty contraction range (a zero-dimensional index): all entries vanish.
    out.data.assign(static_cast<std::size_t>(rows) * cols, scalar_ops<S>::zero());
    return out;
  }
  using rmat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const rmat> ma(ta.data.data(), rows, mid);
  Eigen::Map<const rmat> mb(tb.data.data(), mid, cols);
  rmat c = ma.lazyProduct(mb);
  out.data.assign(c.data(), c.data() + static_cast<std::size_t>(rows) * cols);
  return out;
}

template <class S>
tensor_nd<S> node_tensor(const net& g, std::size_t node_id, const model<S>& m,
                         const std::vector<int>& in_ids, const std::vector<int>& out_ids);

}  // namespace detail

template <class S>
mat<S> evaluate(const net& g, const model<S>& m) {
  using detail::tensor_nd;
  long rows = 1, cols = 1;
  for (const auto& f : g.bnd.outputs) rows *= dim_of(f, m.dims);
  for (const auto& f : g.bnd.inputs) cols *= dim_of(f, m.dims);
  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) >
      detail::eval_entry_limit)
    throw error("evaluation result exceeds the entry limit");

  // Index ids: one per wire; pass-through wires get a second id bridged by an
  // identity tensor so boundary ports keep distinct indices.
  const int W = static_cast<int>(g.wires.size());
  std::vector<int> pass_extra(g.wires.size(), -1);
  int next_id = W;
  for (std::size_t w = 0; w < g.wires.size(); ++w)
    if (g.wires[w].from.kind == endpoint::kind_t::bnd_in &&
        g.wires[w].to.kind == endpoint::kind_t::bnd_out)
      pass_extra[w] = next_id++;

  std::vector<long> id_dim(static_cast<std::size_t>(next_id), 1);
  for (std::size_t w = 0; w < g.wires.size(); ++w) {
    long d = dim_of(endpoint_carrier(g, g.wires[w].from), m.dims);
    id_dim[w] = d;
    if (pass_extra[w] >= 0) id_dim[pass_extra[w]] = d;
  }

  auto id_at = [&](const endpoint& e) -> int {
    for (std::size_t w = 0; w < g.wires.size(); ++w) {
      if (g.wires[w].from == e) return static_cast<int>(w);
      if (g.wires[w].to == e) {
        if (pass_extra[w] >= 0 && e.kind == endpoint::kind_t::bnd_out) return pass_extra[w];
        return static_cast<int>(w);
      }
    }
    throw engine_fault("evaluation: unwired endpoint");
  };

  std::vector<tensor_nd<S>> pool;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    auto ins = node_input_carriers(g.nodes[n]);
    auto outs = node_output_carriers(g.nodes[n]);
    std::vector<int> iin(ins.size()), iout(outs.size());
    for (std::size_t p = 0; p < ins.size(); ++p)
      iin[p] = id_at(node_in(static_cast<std::int32_t>(n), static_cast<std::int32_t>(p)));
    for (std::size_t p = 0; p < outs.size(); ++p)
      iout[p] = id_at(node_out(static_cast<std::int32_t>(n), static_cast<std::int32_t>(p)));
    pool.push_back(detail::node_tensor(g, n, m, iin, iout));
  }
  for (std::size_t w = 0; w < g.wires.size(); ++w) {
    if (pass_extra[w] < 0) continue;
    tensor_nd<S> id_t;
    id_t.ids = {static_cast<int>(w), pass_extra[w]};
    long d = id_dim[w];
    id_t.dims = {d, d};
    id_t.data.assign(static_cast<std::size_t>(d) * d, scalar_ops<S>::zero());
    for (long i = 0; i < d; ++i) id_t.data[i * d + i] = scalar_ops<S>::one();
    pool.push_back(std::move(id_t));
  }

  for (auto& t : pool) detail::self_trace(t);

  S closed = scalar_ops<S>::one();
  // Peel off scalar tensors as they appear.
  auto sweep_scalars = [&]() {
    std::vector<tensor_nd<S>> keep;
    for (auto& t : pool) {
      if (t.ids.empty()) {
        closed *= t.data.empty() ? scalar_ops<S>::zero() : t.data[0];
      } else {
        keep.push_back(std::move(t));
      }
    }
    pool = std::move(keep);
  };
  sweep_scalars();

  while (pool.size() > 1) {
    std::size_t bi = 0, bj = 1;
    std::size_t best = static_cast<std::size_t>(-1);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      for (std::size_t j = i + 1; j < pool.size(); ++j) {
        std::map<int, long> un;
        for (std::size_t s = 0; s < pool[i].ids.size(); ++s) un[pool[i].ids[s]] = pool[i].dims[s];
        for (std::size_t s = 0; s < pool[j].ids.size(); ++s) un[pool[j].ids[s]] = pool[j].dims[s];
        bool any_shared = pool[i].ids.size() + pool[j].ids.size() > un.size();
        std::size_t sz = 1;
        for (auto& [id, d] : un) {
          bool shared = false;
          for (int x : pool[i].ids)
            if (x == id)
              for (int y : pool[j].ids)
                if (y == id) shared = true;
          if (!shared) sz *= static_cast<std::size_t>(d);
        }
        if (!any_shared) sz = pool[i].size() * pool[j].size();
        if (sz < best) {
          best = sz;
          bi = i;
          bj = j;
        }
      }
    }
    tensor_nd<S> merged = detail::contract_pair(pool[bi], pool[bj]);
    detail::self_trace(merged);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(bj));
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(bi));
    pool.push_back(std::move(merged));
    sweep_scalars();
  }

  // Residual free loops of the net.
  closed *= loop_monomial_value(g.free_loops, m);

  mat<S> out(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) out(r, c) = scalar_ops<S>::zero();

  // Assemble the boundary tensor in [outputs..., inputs...] slot order.
  std::vector<int> target;
  for (std::size_t p = 0; p < g.bnd.outputs.size(); ++p)
    target.push_back(id_at(bnd_out(static_cast<std::int32_t>(p))));
  for (std::size_t p = 0; p < g.bnd.inputs.size(); ++p)
    target.push_back(id_at(bnd_in(static_cast<std::int32_t>(p))));

  if (pool.empty()) {
    if (target.empty()) {
      out(0, 0) = closed;
      return out;
    }
    throw engine_fault("evaluation lost boundary indices");
  }
  tensor_nd<S>& t = pool[0];
  if (t.ids.size() != target.size()) throw engine_fault("boundary index mismatch");
  std::vector<int> perm(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    int slot = -1;
    for (std::size_t s = 0; s < t.ids.size(); ++s)
      if (t.ids[s] == target[i]) slot = static_cast<int>(s);
    if (slot < 0) throw engine_fault("boundary index missing from result");
    perm[i] = slot;
  }
  tensor_nd<S> arranged = detail::permute_tensor(t, perm);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      S v = arranged.data[static_cast<std::size_t>(r) * cols + c];
      out(r, c) = closed * v;
    }
  return out;
}

namespace detail {

template <class S>
tensor_nd<S> node_tensor(const net& g, std::size_t node_id, const model<S>& m,
                         const std::vector<int>& in_ids, const std::vector<int>& out_ids) {
  const node& n = g.nodes[node_id];
  auto ins = node_input_carriers(n);
  auto outs = node_output_carriers(n);
  tensor_nd<S> t;
  for (std::size_t p = 0; p < ins.size(); ++p) {
    t.ids.push_back(in_ids[p]);
    t.dims.push_back(dim_of(ins[p], m.dims));
  }
  for (std::size_t p = 0; p < outs.size(); ++p) {
    t.ids.push_back(out_ids[p]);
    t.dims.push_back(dim_of(outs[p], m.dims));
  }
  long X = 1, Y = 1;
  for (std::size_t p = 0; p < ins.size(); ++p) X *= dim_of(ins[p], m.dims);
  for (std::size_t p = 0; p < outs.size(); ++p) Y *= dim_of(outs[p], m.dims);
  if (static_cast<std::size_t>(X) * static_cast<std::size_t>(Y) > eval_entry_limit)
    throw error("node tensor exceeds the entry limit");
  t.data.assign(static_cast<std::size_t>(X) * Y, scalar_ops<S>::zero());

  switch (n.kind) {
    case node_kind::generator: {
      auto it = m.gens.find(n.name);
      if (it == m.gens.end())
        throw error("model does not set a matrix for generator '" + n.name + "'");
      const mat<S>& M = it->second;
      if (M.rows() != Y || M.cols() != X)
        throw error("matrix for generator '" + n.name + "' has the wrong shape");
      for (long x = 0; x < X; ++x)
        for (long y = 0; y < Y; ++y) t.data[x * Y + y] = M(y, x);
      return t;
    }
    case node_kind::eta: {
      long d = dim_of(n.carrier, m.dims);
      for (long i = 0; i < d; ++i) t.data[i * d + i] = scalar_ops<S>::one();
      return t;
    }
    case node_kind::eps: {
      long d = dim_of(n.carrier, m.dims);
      for (long i = 0; i < d; ++i) t.data[i * d + i] = scalar_ops<S>::one();
      return t;
    }
    case node_kind::inject: {
      long off = 0;
      for (std::int32_t j = 0; j < n.index; ++j) off += dim_of(n.summands[j], m.dims);
      long D = Y;  // single output port
      for (long x = 0; x < X; ++x) t.data[x * D + (off + x)] = scalar_ops<S>::one();
      return t;
    }
    case node_kind::project: {
      long off = 0;
      for (std::int32_t j = 0; j < n.index; ++j) off += dim_of(n.summands[j], m.dims);
      long D = X;  // single input port
      for (long y = 0; y < Y; ++y) t.data[(off + y) * Y + y] = scalar_ops<S>::one();
      return t;
    }
    case node_kind::box: {
      const std::size_t k = n.branches.size();
      std::vector<mat<S>> B;
      B.reserve(k);
      for (const auto& br : n.branches) B.push_back(evaluate(br, m));
      long bx = 1, by = 1;
      for (const auto& f : n.branches[0].bnd.inputs) bx *= dim_of(f, m.dims);
      for (const auto& f : n.branches[0].bnd.outputs) by *= dim_of(f, m.dims);
      if (n.dir == box_dir::measure) {
        // slots [ins..., branch outs..., index]
        for (long x = 0; x < bx; ++x)
          for (long y = 0; y < by; ++y)
            for (std::size_t i = 0; i < k; ++i)
              t.data[(x * by + y) * static_cast<long>(k) + static_cast<long>(i)] = B[i](y, x);
      } else {
        // slots [branch ins..., index, branch outs...]
        for (long x = 0; x < bx; ++x)
          for (std::size_t i = 0; i < k; ++i)
            for (long y = 0; y < by; ++y)
              t.data[(x * static_cast<long>(k) + static_cast<long>(i)) * by + y] = B[i](y, x);
      }
      return t;
    }
  }
  throw engine_fault("unreachable node kind");
}

}  // namespace detail

template <class S>
mat<S> evaluate(const sum_net& s, const model<S>& m) {
  long rows = 1, cols = 1;
  for (const auto& f : s.bnd.outputs) rows *= dim_of(f, m.dims);
  for (const auto& f : s.bnd.inputs) cols *= dim_of(f, m.dims);
  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) >
      detail::eval_entry_limit)
    throw error("evaluation result exceeds the entry limit");
  mat<S> acc(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) acc(r, c) = scalar_ops<S>::zero();
  for (const auto& sm : s.summands) {
    S w = loop_poly_value(sm.weight, m);
    mat<S> part = evaluate(sm.graph, m);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) acc(r, c) += w * part(r, c);
  }
  return acc;
}

template <class S>
bool matrices_approx_equal(const mat<S>& a, const mat<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (long r = 0; r < a.rows(); ++r)
    for (long c = 0; c < a.cols(); ++c)
      if (!scalar_ops<S>::approx_equal(a(r, c), b(r, c))) return false;
  return true;
}

// Semantic side of equation registration: both sides must denote the same
// matrix under the model.
template <class S>
bool check_equation(const user_equation& eq, const model<S>& m) {
  return matrices_approx_equal(evaluate<S>(eq.lhs, m), evaluate<S>(eq.rhs, m));
}

template <class S>
std::string matrix_to_string(const mat<S>& m) {
  std::string out = "[";
  for (long r = 0; r < m.rows(); ++r) {
    out += "[";
    for (long c = 0; c < m.cols(); ++c) {
      out += scalar_ops<S>::str(m(r, c));
      if (c + 1 < m.cols()) out += ", ";
    }
    out += "]";
    if (r + 1 < m.rows()) out += ", ";
  }
  return out + "]";
}

}  // namespace tsl

namespace Eigen {
template <>
struct NumTraits<tsl::bool_rig> {
  using Real = tsl::bool_rig;
  using NonInteger = tsl::bool_rig;
  using Nested = tsl::bool_rig;
  using Literal = tsl::bool_rig;
  enum {
    IsComplex = 0,
    IsInteger = 1,
    IsSigned = 0,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 1,
    MulCost = 1
  };
  static inline Real epsilon() { return tsl::bool_rig{false}; }
  static inline Real dummy_precision() { return tsl::bool_rig{false}; }
  static inline Real highest() { return tsl::bool_rig{true}; }
  static inline Real lowest() { return tsl::bool_rig{false}; }
  static inline int digits10() { return 1; }
};
}  // namespace Eigen
