#include "cldice/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "cldice/rng.hpp"

namespace cldice {

namespace {

bool is_scalar(const Shape& s) { return s.nd == 0; }

Shape broadcast_shape(const Shape& a, const Shape& b) {
  if (a == b) return a;
  if (is_scalar(a)) return b;
  if (is_scalar(b)) return a;
  throw std::invalid_argument("tape op: incompatible shapes");
}

struct SigHash {
  std::uint64_t h = 1469598103934665603ULL;
  void fold(std::uint64_t x) {
    h ^= x;
    h *= 1099511628211ULL;
  }
};

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size() - 1);
}

void Tape::check_index(int node) const {
  if (node < 0 || node >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: bad node id");
}

int Tape::leaf(const ScalarField& f) {
  return leaf(f.shape(), f.data());
}

int Tape::leaf(const Shape& shape, std::vector<double> values) {
  if (shape.size() != values.size())
    throw std::invalid_argument("tape leaf: size mismatch");
  Node n;
  n.op = Op::Leaf;
  n.shape = shape;
  n.val = std::move(values);
  return push(std::move(n));
}

int Tape::scalar_leaf(double v) { return leaf(Shape{}, {v}); }

int Tape::constant(const Shape& shape, std::vector<double> values) {
  const int id = leaf(shape, std::move(values));
  nodes_[id].op = Op::Const;
  return id;
}

int Tape::scalar_const(double v) { return constant(Shape{}, {v}); }

namespace {

// elementwise binary with scalar broadcast
template <class F>
std::vector<double> apply2(const std::vector<double>& a, const std::vector<double>& b,
                           F f) {
  if (a.size() == b.size()) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  if (a.size() == 1) {
    std::vector<double> out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = f(a[0], b[i]);
    return out;
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[0]);
  return out;
}

}  // namespace

int Tape::add(int a, int b) {
  check_index(a);
  check_index(b);
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.shape = broadcast_shape(nodes_[a].shape, nodes_[b].shape);
  n.val = apply2(nodes_[a].val, nodes_[b].val, [](double x, double y) { return x + y; });
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  check_index(a);
  check_index(b);
  Node n;
  n.op = Op::Sub;
  n.a = a;
  n.b = b;
  n.shape = broadcast_shape(nodes_[a].shape, nodes_[b].shape);
  n.val = apply2(nodes_[a].val, nodes_[b].val, [](double x, double y) { return x - y; });
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  check_index(a);
  check_index(b);
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  n.shape = broadcast_shape(nodes_[a].shape, nodes_[b].shape);
  n.val = apply2(nodes_[a].val, nodes_[b].val, [](double x, double y) { return x * y; });
  return push(std::move(n));
}

int Tape::div(int a, int b) {
  check_index(a);
  check_index(b);
  Node n;
  n.op = Op::Div;
  n.a = a;
  n.b = b;
  n.shape = broadcast_shape(nodes_[a].shape, nodes_[b].shape);
  n.val = apply2(nodes_[a].val, nodes_[b].val, [](double x, double y) { return x / y; });
  return push(std::move(n));
}

int Tape::neg(int a) {
  check_index(a);
  Node n;
  n.op = Op::Neg;
  n.a = a;
  n.shape = nodes_[a].shape;
  n.val.resize(nodes_[a].val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = -nodes_[a].val[i];
  return push(std::move(n));
}

int Tape::relu(int a) {
  check_index(a);
  Node n;
  n.op = Op::Relu;
  n.a = a;
  n.shape = nodes_[a].shape;
  n.val.resize(nodes_[a].val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i)
    n.val[i] = nodes_[a].val[i] > 0.0 ? nodes_[a].val[i] : 0.0;
  return push(std::move(n));
}

int Tape::sigmoid(int a) {
  check_index(a);
  Node n;
  n.op = Op::Sigmoid;
  n.a = a;
  n.shape = nodes_[a].shape;
  n.val.resize(nodes_[a].val.size());
  for (std::size_t i = 0; i < n.val.size(); ++i)
    n.val[i] = 1.0 / (1.0 + std::exp(-nodes_[a].val[i]));
  return push(std::move(n));
}

int Tape::sum(int a) {
  check_index(a);
  Node n;
  n.op = Op::Sum;
  n.a = a;
  n.shape = Shape{};
  double s = 0.0;
  for (double v : nodes_[a].val) s += v;
  n.val = {s};
  return push(std::move(n));
}

namespace {

std::size_t axis_stride(const Shape& s, int axis) {
  if (axis == 0) return static_cast<std::size_t>(s.d[1]) * s.d[2];
  if (axis == 1) return static_cast<std::size_t>(s.d[2]);
  return 1;
}

}  // namespace

int Tape::max_pool_1d(int a, int axis) {
  check_index(a);
  const Shape& s = nodes_[a].shape;
  if (axis < 0 || axis >= s.nd)
    throw std::invalid_argument("max_pool_1d: axis out of range");
  Node n;
  n.op = Op::MaxPool1D;
  n.a = a;
  n.axis = axis;
  n.shape = s;
  n.val.resize(nodes_[a].val.size());
  n.route.resize(n.val.size());
  const auto& in = nodes_[a].val;
  const std::size_t stride = axis_stride(s, axis);
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < s.d[2]; ++k) {
        const std::size_t f = s.flat(i, j, k);
        const int pos = axis == 0 ? i : axis == 1 ? j : k;
        // window scanned in increasing coordinate; strict > keeps first max
        std::size_t best = pos > 0 ? f - stride : f;
        double bv = in[best];
        if (pos > 0 && in[f] > bv) {
          best = f;
          bv = in[f];
        }
        if (pos + 1 < s.d[axis] && in[f + stride] > bv) {
          best = f + stride;
          bv = in[f + stride];
        }
        n.val[f] = bv;
        n.route[f] = static_cast<std::int32_t>(best);
      }
  return push(std::move(n));
}

int Tape::min_pool_1d(int a, int axis) {
  return neg(max_pool_1d(neg(a), axis));
}

int Tape::max_pool_window(int a) {
  check_index(a);
  const Shape& s = nodes_[a].shape;
  if (s.nd != 2 && s.nd != 3)
    throw std::invalid_argument("max_pool_window: field input required");
  Node n;
  n.op = Op::MaxPoolWin;
  n.a = a;
  n.shape = s;
  n.val.resize(nodes_[a].val.size());
  n.route.resize(n.val.size());
  const auto& in = nodes_[a].val;
  const int kspan = s.nd == 3 ? 1 : 0;
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < s.d[2]; ++k) {
        double bv = -1.0;
        std::size_t best = 0;
        bool first = true;
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -kspan; dk <= kspan; ++dk) {
              const int ni = i + di, nj = j + dj, nk = k + dk;
              if (ni < 0 || ni >= s.d[0] || nj < 0 || nj >= s.d[1] || nk < 0 ||
                  nk >= s.d[2])
                continue;
              const std::size_t f = s.flat(ni, nj, nk);
              if (first || in[f] > bv) {
                bv = in[f];
                best = f;
                first = false;
              }
            }
        const std::size_t f = s.flat(i, j, k);
        n.val[f] = bv;
        n.route[f] = static_cast<std::int32_t>(best);
      }
  return push(std::move(n));
}

int Tape::conv2d(int input, int kernel) {
  check_index(input);
  check_index(kernel);
  const Shape& s = nodes_[input].shape;
  const Shape& ks = nodes_[kernel].shape;
  if (s.nd != 2 || ks.nd != 2)
    throw std::invalid_argument("conv2d: 2D input and kernel required");
  if (ks.d[0] % 2 == 0 || ks.d[1] % 2 == 0)
    throw std::invalid_argument("conv2d: kernel extents must be odd");
  Node n;
  n.op = Op::Conv2D;
  n.a = input;
  n.b = kernel;
  n.shape = s;
  n.val.assign(nodes_[input].val.size(), 0.0);
  const auto& in = nodes_[input].val;
  const auto& ker = nodes_[kernel].val;
  const int ck = ks.d[0] / 2, cl = ks.d[1] / 2;
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j) {
      double acc = 0.0;
      for (int a = 0; a < ks.d[0]; ++a)
        for (int b = 0; b < ks.d[1]; ++b) {
          const int ii = i + a - ck, jj = j + b - cl;
          if (ii < 0 || ii >= s.d[0] || jj < 0 || jj >= s.d[1]) continue;
          acc += in[s.flat(ii, jj)] * ker[ks.flat(a, b)];
        }
      n.val[s.flat(i, j)] = acc;
    }
  return push(std::move(n));
}

void Tape::set_leaf(int node, const std::vector<double>& values) {
  check_index(node);
  Node& n = nodes_[node];
  if (n.op != Op::Leaf) throw std::invalid_argument("set_leaf: node is not a leaf");
  if (n.val.size() != values.size())
    throw std::invalid_argument("set_leaf: size mismatch");
  n.val = values;
}

void Tape::set_leaf_scalar(int node, double v) { set_leaf(node, {v}); }

std::uint64_t Tape::forward() {
  SigHash sig;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
        break;
      case Op::Add:
        n.val = apply2(nodes_[n.a].val, nodes_[n.b].val,
                       [](double x, double y) { return x + y; });
        break;
      case Op::Sub:
        n.val = apply2(nodes_[n.a].val, nodes_[n.b].val,
                       [](double x, double y) { return x - y; });
        break;
      case Op::Mul:
        n.val = apply2(nodes_[n.a].val, nodes_[n.b].val,
                       [](double x, double y) { return x * y; });
        break;
      case Op::Div:
        n.val = apply2(nodes_[n.a].val, nodes_[n.b].val,
                       [](double x, double y) { return x / y; });
        break;
      case Op::Neg:
        for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = -nodes_[n.a].val[i];
        break;
      case Op::Relu: {
        const auto& in = nodes_[n.a].val;
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < n.val.size(); ++i) {
          const bool on = in[i] > 0.0;
          n.val[i] = on ? in[i] : 0.0;
          bits = (bits << 1) | static_cast<std::uint64_t>(on);
          if ((i & 63) == 63) {
            sig.fold(bits);
            bits = 0;
          }
        }
        sig.fold(bits);
        break;
      }
      case Op::Sigmoid: {
        const auto& in = nodes_[n.a].val;
        for (std::size_t i = 0; i < n.val.size(); ++i)
          n.val[i] = 1.0 / (1.0 + std::exp(-in[i]));
        break;
      }
      case Op::Sum: {
        double s = 0.0;
        for (double v : nodes_[n.a].val) s += v;
        n.val[0] = s;
        break;
      }
      case Op::MaxPool1D: {
        const auto& in = nodes_[n.a].val;
        const Shape& s = n.shape;
        const std::size_t stride = axis_stride(s, n.axis);
        for (int i = 0; i < s.d[0]; ++i)
          for (int j = 0; j < s.d[1]; ++j)
            for (int k = 0; k < s.d[2]; ++k) {
              const std::size_t f = s.flat(i, j, k);
              const int pos = n.axis == 0 ? i : n.axis == 1 ? j : k;
              std::size_t best = pos > 0 ? f - stride : f;
              double bv = in[best];
              if (pos > 0 && in[f] > bv) {
                best = f;
                bv = in[f];
              }
              if (pos + 1 < s.d[n.axis] && in[f + stride] > bv) {
                best = f + stride;
                bv = in[f + stride];
              }
              n.val[f] = bv;
              n.route[f] = static_cast<std::int32_t>(best);
              sig.fold(static_cast<std::uint64_t>(best) ^ (id << 32));
            }
        break;
      }
      case Op::MaxPoolWin: {
        const auto& in = nodes_[n.a].val;
        const Shape& s = n.shape;
        const int kspan = s.nd == 3 ? 1 : 0;
        for (int i = 0; i < s.d[0]; ++i)
          for (int j = 0; j < s.d[1]; ++j)
            for (int k = 0; k < s.d[2]; ++k) {
              double bv = 0.0;
              std::size_t best = 0;
              bool first = true;
              for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                  for (int dk = -kspan; dk <= kspan; ++dk) {
                    const int ni = i + di, nj = j + dj, nk = k + dk;
                    if (ni < 0 || ni >= s.d[0] || nj < 0 || nj >= s.d[1] ||
                        nk < 0 || nk >= s.d[2])
                      continue;
                    const std::size_t f = s.flat(ni, nj, nk);
                    if (first || in[f] > bv) {
                      bv = in[f];
                      best = f;
                      first = false;
                    }
                  }
              const std::size_t f = s.flat(i, j, k);
              n.val[f] = bv;
              n.route[f] = static_cast<std::int32_t>(best);
              sig.fold(static_cast<std::uint64_t>(best) ^ (id << 32));
            }
        break;
      }
      case Op::Conv2D: {
        const auto& in = nodes_[n.a].val;
        const auto& ker = nodes_[n.b].val;
        const Shape& s = n.shape;
        const Shape& ks = nodes_[n.b].shape;
        const int ck = ks.d[0] / 2, cl = ks.d[1] / 2;
        for (int i = 0; i < s.d[0]; ++i)
          for (int j = 0; j < s.d[1]; ++j) {
            double acc = 0.0;
            for (int a = 0; a < ks.d[0]; ++a)
              for (int b = 0; b < ks.d[1]; ++b) {
                const int ii = i + a - ck, jj = j + b - cl;
                if (ii < 0 || ii >= s.d[0] || jj < 0 || jj >= s.d[1]) continue;
                acc += in[s.flat(ii, jj)] * ker[ks.flat(a, b)];
              }
            n.val[s.flat(i, j)] = acc;
          }
        break;
      }
    }
  }
  return sig.h;
}

void Tape::backward(int loss_node) {
  check_index(loss_node);
  if (nodes_[loss_node].val.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar-valued");
  adjoints_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    adjoints_[i].assign(nodes_[i].val.size(), 0.0);
  adjoints_[loss_node][0] = 1.0;

  auto spread = [&](int target, const std::vector<double>& grad) {
    // accumulate grad into target, reducing when target is scalar
    auto& acc = adjoints_[target];
    if (acc.size() == grad.size()) {
      for (std::size_t i = 0; i < grad.size(); ++i) acc[i] += grad[i];
    } else {
      double s = 0.0;
      for (double g : grad) s += g;
      acc[0] += s;
    }
  };

  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[id];
    const auto& g = adjoints_[id];
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
        break;
      case Op::Add:
        spread(n.a, g);
        spread(n.b, g);
        break;
      case Op::Sub: {
        spread(n.a, g);
        std::vector<double> ng(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) ng[i] = -g[i];
        spread(n.b, ng);
        break;
      }
      case Op::Mul: {
        const auto& av = nodes_[n.a].val;
        const auto& bv = nodes_[n.b].val;
        std::vector<double> ga(g.size()), gb(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double a = av.size() == 1 ? av[0] : av[i];
          const double b = bv.size() == 1 ? bv[0] : bv[i];
          ga[i] = g[i] * b;
          gb[i] = g[i] * a;
        }
        spread(n.a, ga);
        spread(n.b, gb);
        break;
      }
      case Op::Div: {
        const auto& av = nodes_[n.a].val;
        const auto& bv = nodes_[n.b].val;
        std::vector<double> ga(g.size()), gb(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double a = av.size() == 1 ? av[0] : av[i];
          const double b = bv.size() == 1 ? bv[0] : bv[i];
          ga[i] = g[i] / b;
          gb[i] = -g[i] * a / (b * b);
        }
        spread(n.a, ga);
        spread(n.b, gb);
        break;
      }
      case Op::Neg: {
        std::vector<double> ng(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) ng[i] = -g[i];
        spread(n.a, ng);
        break;
      }
      case Op::Relu: {
        const auto& in = nodes_[n.a].val;
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] = in[i] > 0.0 ? g[i] : 0.0;  // subgradient 0 at 0
        spread(n.a, ga);
        break;
      }
      case Op::Sigmoid: {
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double sv = n.val[i];
          ga[i] = g[i] * sv * (1.0 - sv);
        }
        spread(n.a, ga);
        break;
      }
      case Op::Sum: {
        std::vector<double> ga(nodes_[n.a].val.size(), g[0]);
        spread(n.a, ga);
        break;
      }
      case Op::MaxPool1D:
      case Op::MaxPoolWin: {
        auto& acc = adjoints_[n.a];
        for (std::size_t i = 0; i < g.size(); ++i)
          acc[static_cast<std::size_t>(n.route[i])] += g[i];
        break;
      }
      case Op::Conv2D: {
        const auto& in = nodes_[n.a].val;
        const auto& ker = nodes_[n.b].val;
        const Shape& s = n.shape;
        const Shape& ks = nodes_[n.b].shape;
        const int ck = ks.d[0] / 2, cl = ks.d[1] / 2;
        std::vector<double> gin(in.size(), 0.0), gker(ker.size(), 0.0);
        for (int i = 0; i < s.d[0]; ++i)
          for (int j = 0; j < s.d[1]; ++j) {
            const double go = g[s.flat(i, j)];
            if (go == 0.0) continue;
            for (int a = 0; a < ks.d[0]; ++a)
              for (int b = 0; b < ks.d[1]; ++b) {
                const int ii = i + a - ck, jj = j + b - cl;
                if (ii < 0 || ii >= s.d[0] || jj < 0 || jj >= s.d[1]) continue;
                gin[s.flat(ii, jj)] += go * ker[ks.flat(a, b)];
                gker[ks.flat(a, b)] += go * in[s.flat(ii, jj)];
              }
          }
        spread(n.a, gin);
        spread(n.b, gker);
        break;
      }
    }
  }
}

double Tape::value(int node) const {
  check_index(node);
  if (nodes_[node].val.size() != 1)
    throw std::invalid_argument("value: node is not scalar");
  return nodes_[node].val[0];
}

const std::vector<double>& Tape::values(int node) const {
  check_index(node);
  return nodes_[node].val;
}

const std::vector<double>& Tape::adjoint(int node) const {
  check_index(node);
  if (adjoints_.size() != nodes_.size())
    throw std::logic_error("adjoint: run backward first");
  return adjoints_[node];
}

const Shape& Tape::shape(int node) const {
  check_index(node);
  return nodes_[node].shape;
}

// ---------------------------------------------------------------------------
// Loss graphs

namespace {

int field_min(Tape& t, int a, int b) {
  // min(a, b) = a - relu(a - b); ties route the gradient to a
  return t.sub(a, t.relu(t.sub(a, b)));
}

}  // namespace

int build_soft_erode(Tape& t, int x) {
  const int nd = t.shape(x).nd;
  int e = field_min(t, t.min_pool_1d(x, 0), t.min_pool_1d(x, 1));
  if (nd == 3) e = field_min(t, e, t.min_pool_1d(x, 2));
  return e;
}

int build_soft_dilate(Tape& t, int x) { return t.max_pool_window(x); }

int build_soft_open(Tape& t, int x) {
  return build_soft_dilate(t, build_soft_erode(t, x));
}

int build_soft_skeleton(Tape& t, int x, int k) {
  if (k < 0) throw std::invalid_argument("build_soft_skeleton: k must be >= 0");
  int img = x;
  int skel = t.relu(t.sub(img, build_soft_open(t, img)));
  const int one = t.scalar_const(1.0);
  for (int it = 0; it < k; ++it) {
    img = build_soft_erode(t, img);
    const int delta = t.relu(t.sub(img, build_soft_open(t, img)));
    skel = t.add(skel, t.mul(t.sub(one, skel), delta));
  }
  return skel;
}

int build_soft_dice(Tape& t, int p, int l, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  const int eps = t.scalar_const(epsilon);
  const int num = t.add(t.mul(t.scalar_const(2.0), t.sum(t.mul(p, l))), eps);
  const int den = t.add(t.add(t.sum(p), t.sum(l)), eps);
  return t.div(num, den);
}

int build_soft_cl_dice(Tape& t, int p, int l, const LossParams& params) {
  validate(params);
  const int sp = build_soft_skeleton(t, p, params.k);
  const int sl = build_soft_skeleton(t, l, params.k);
  const int eps = t.scalar_const(params.epsilon);
  const int tp = t.div(t.add(t.sum(t.mul(sp, l)), eps), t.add(t.sum(sp), eps));
  const int ts = t.div(t.add(t.sum(t.mul(sl, p)), eps), t.add(t.sum(sl), eps));
  return t.div(t.mul(t.scalar_const(2.0), t.mul(tp, ts)), t.add(tp, ts));
}

int build_combined_loss(Tape& t, int p, int l, const LossParams& params) {
  validate(params);
  const int one = t.scalar_const(1.0);
  const int dice_term = t.sub(one, build_soft_dice(t, p, l, params.epsilon));
  if (params.alpha == 0.0) return dice_term;
  const int cl_term = t.sub(one, build_soft_cl_dice(t, p, l, params));
  return t.add(t.mul(t.scalar_const(1.0 - params.alpha), dice_term),
               t.mul(t.scalar_const(params.alpha), cl_term));
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checker

GradCheckReport grad_check(const std::function<int(Tape&, int)>& build_loss,
                           const ScalarField& input, double h, double tol,
                           int max_coords, std::uint64_t seed) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be > 0");
  (void)tol;
  Tape t;
  const int x = t.leaf(input);
  const int loss = build_loss(t, x);
  const std::uint64_t base_sig = t.forward();
  t.backward(loss);
  const std::vector<double> analytic = t.adjoint(x);

  std::vector<std::size_t> coords(input.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  if (max_coords > 0 && static_cast<std::size_t>(max_coords) < coords.size()) {
    Rng rng(seed);
    for (std::size_t i = 0; i < static_cast<std::size_t>(max_coords); ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.next_below(coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(static_cast<std::size_t>(max_coords));
  }

  GradCheckReport rep;
  std::vector<double> probe = input.data();
  std::vector<GradCheckReport::Offender> all;
  for (const std::size_t c : coords) {
    const double orig = probe[c];
    probe[c] = orig + h;
    t.set_leaf(x, probe);
    const std::uint64_t sig_plus = t.forward();
    const double f_plus = t.value(loss);
    probe[c] = orig - h;
    t.set_leaf(x, probe);
    const std::uint64_t sig_minus = t.forward();
    const double f_minus = t.value(loss);
    probe[c] = orig;
    if (sig_plus != base_sig || sig_minus != base_sig) {
      ++rep.excluded_ties;
      continue;
    }
    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double a = analytic[c];
    ++rep.checked;
    const double mass = std::abs(a) + std::abs(numeric);
    if (mass <= 1e-8) {
      ++rep.skipped_small;
      continue;
    }
    const double rel = std::abs(a - numeric) / mass;
    if (rel > rep.max_rel_err) rep.max_rel_err = rel;
    all.push_back({c, a, numeric, rel});
  }
  t.set_leaf(x, input.data());
  t.forward();

  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.rel_err > b.rel_err; });
  if (all.size() > 3) all.resize(3);
  rep.worst = std::move(all);
  return rep;
}

}  // namespace cldice
