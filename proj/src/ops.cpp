#include "grec/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

namespace grec {
namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

// Creates the output node and wires parents only when a gradient is needed.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value,
                      std::initializer_list<Tensor<T>> inputs) {
  auto out = Tensor<T>::from_data(std::move(shape), std::move(value));
  bool needs_grad = false;
  if (!grad_enabled()) return out;
  for (const auto& in : inputs) {
    if (in.defined() && in.requires_grad()) needs_grad = true;
  }
  if (needs_grad) {
    out.node()->requires_grad = true;
    for (const auto& in : inputs) {
      if (in.defined()) out.node()->parents.push_back(in.shared_node());
    }
  }
  return out;
}

void require(bool cond, const std::string& message) {
  if (!cond) throw std::invalid_argument(message);
}

// y[0..n) += a * x[0..n)
template <typename T>
inline void axpy(std::size_t n, T a, const T* __restrict x, T* __restrict y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// out[c] += sum over rows of m[r][c], accumulated in row order so the
// result does not depend on buffer alignment.
template <typename T>
void add_row_sums(const T* m, std::size_t rows, std::size_t cols, T* out) {
  for (std::size_t r = 0; r < rows; ++r) axpy(cols, T(1), m + r * cols, out);
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Calls fn(dst, src, n) for each sequence's block of rows where position
// i + offset lies inside [0, len): dst rows read src rows.
template <typename Fn>
void for_shifted_rows(std::size_t batch, std::size_t len, long offset, Fn&& fn) {
  const long t = static_cast<long>(len);
  const long lo = std::max(0L, -offset), hi = std::min(t, t - offset);
  if (hi <= lo) return;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t base = b * len;
    fn(base + static_cast<std::size_t>(lo), base + static_cast<std::size_t>(lo + offset),
       static_cast<std::size_t>(hi - lo));
  }
}

}  // namespace

template <typename T>
long ConvKernel<T>::tap_offset(std::size_t j) const {
  const long k = static_cast<long>(width());
  const long jj = static_cast<long>(j);
  return causal ? (jj - (k - 1)) * dilation : (jj - (k - 1) / 2) * dilation;
}

template <typename T>
void ConvKernel<T>::validate() const {
  require(weight.defined() && weight.rank() == 3,
          "conv weight must be [width, in, out]");
  require(width() >= 1, "conv width must be >= 1");
  require(dilation >= 1, "conv dilation must be >= 1");
  require(causal || width() % 2 == 1,
          "non-causal conv requires an odd width, got " +
              std::to_string(width()));
  require(!bias.defined() || (bias.rank() == 1 && bias.dim(0) == out_channels()),
          "conv bias must be [out_channels]");
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " +
                                      shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
  std::vector<T> out(a.size());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  auto result = make_result<T>(a.shape(), std::move(out), {a, b});
  if (result.requires_grad()) {
    NodePtr<T> pa = a.shared_node(), pb = b.shared_node();
    result.node()->backward = [pa, pb](detail::Node<T>& self) {
      for (auto* p : {pa.get(), pb.get()}) {
        if (!p->requires_grad) continue;
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch");
  std::vector<T> out(a.size());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  auto result = make_result<T>(a.shape(), std::move(out), {a, b});
  if (result.requires_grad()) {
    NodePtr<T> pa = a.shared_node(), pb = b.shared_node();
    result.node()->backward = [pa, pb](detail::Node<T>& self) {
      if (pa->requires_grad) {
        auto& g = pa->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
      }
      if (pb->requires_grad) {
        auto& g = pb->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  auto result = make_result<T>({}, {total}, {x});
  if (result.requires_grad()) {
    NodePtr<T> px = x.shared_node();
    result.node()->backward = [px](detail::Node<T>& self) {
      auto& g = px->ensure_grad();
      for (auto& v : g) v += self.grad[0];
    };
  }
  return result;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
  auto result = make_result<T>(x.shape(), std::move(out), {x});
  if (result.requires_grad()) {
    NodePtr<T> px = x.shared_node();
    result.node()->backward = [px](detail::Node<T>& self) {
      auto& g = px->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (px->value[i] > T(0)) g[i] += self.grad[i];
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const IdMatrix& ids) {
  require(table.rank() == 2, "embedding table must be [V, d]");
  const std::size_t rows = table.dim(0), d = table.dim(1);
  for (int id : ids.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
      throw std::out_of_range("embedding id " + std::to_string(id) +
                              " out of range for table with " +
                              std::to_string(rows) + " rows");
    }
  }
  std::vector<T> out(ids.ids.size() * d);
  auto src = table.data();
  for (std::size_t n = 0; n < ids.ids.size(); ++n) {
    std::copy_n(src.data() + ids.ids[n] * d, d, out.data() + n * d);
  }
  auto result = make_result<T>({ids.rows, ids.cols, d}, std::move(out), {table});
  if (result.requires_grad()) {
    NodePtr<T> pt = table.shared_node();
    result.node()->backward = [pt, index = ids.ids, d](detail::Node<T>& self) {
      auto& g = pt->ensure_grad();
      for (std::size_t n = 0; n < index.size(); ++n) {
        axpy<T>(d, T(1), self.grad.data() + n * d, g.data() + index[n] * d);
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const ConvKernel<T>& kernel) {
  kernel.validate();
  require(input.rank() == 3, "conv1d input must be [B, t, c]");
  const std::size_t batch = input.dim(0), len = input.dim(1),
                    cin = input.dim(2);
  require(len >= 1, "conv1d needs t >= 1");
  require(cin == kernel.in_channels(),
          "conv1d channel mismatch: input has " + std::to_string(cin) +
              ", kernel expects " + std::to_string(kernel.in_channels()));
  const std::size_t cout = kernel.out_channels(), taps = kernel.width();
  const std::size_t rows = batch * len;
  std::vector<long> offsets(taps);
  for (std::size_t j = 0; j < taps; ++j) offsets[j] = kernel.tap_offset(j);

  std::vector<T> out(rows * cout, T(0));
  ConstMatrixMap<T> x(input.data().data(), rows, cin);
  MatrixMap<T> o(out.data(), rows, cout);
  if (kernel.bias.defined()) {
    o.rowwise() = ConstMatrixMap<T>(kernel.bias.data().data(), 1, cout).row(0);
  }
  RowMatrix<T> tap_out(rows, cout);
  for (std::size_t j = 0; j < taps; ++j) {
    ConstMatrixMap<T> wj(kernel.weight.data().data() + j * cin * cout, cin, cout);
    tap_out.noalias() = x * wj;
    // Row (b, i) reads tap output (b, i + offset) when that position exists.
    for_shifted_rows(batch, len, offsets[j], [&](std::size_t dst, std::size_t src, std::size_t n) {
      o.middleRows(dst, n) += tap_out.middleRows(src, n);
    });
  }

  auto result = make_result<T>({batch, len, cout}, std::move(out),
                               {input, kernel.weight, kernel.bias});
  if (result.requires_grad()) {
    NodePtr<T> px = input.shared_node();
    NodePtr<T> pw = kernel.weight.shared_node();
    NodePtr<T> pb = kernel.bias.defined() ? kernel.bias.shared_node() : nullptr;
    result.node()->backward = [=](detail::Node<T>& self) {
      ConstMatrixMap<T> g(self.grad.data(), rows, cout);
      if (pb && pb->requires_grad) {
        add_row_sums(self.grad.data(), rows, cout, pb->ensure_grad().data());
      }
      ConstMatrixMap<T> xv(px->value.data(), rows, cin);
      RowMatrix<T> shifted;
      if (pw->requires_grad) {
        auto& gw = pw->ensure_grad();
        shifted.resize(rows, cin);
        for (std::size_t j = 0; j < taps; ++j) {
          shifted.setZero();
          for_shifted_rows(batch, len, offsets[j], [&](std::size_t dst, std::size_t src, std::size_t n) {
            shifted.middleRows(dst, n) = xv.middleRows(src, n);
          });
          MatrixMap<T>(gw.data() + j * cin * cout, cin, cout).noalias() += shifted.transpose() * g;
        }
      }
      if (px->requires_grad) {
        MatrixMap<T> gx(px->ensure_grad().data(), rows, cin);
        shifted.resize(rows, cin);
        for (std::size_t j = 0; j < taps; ++j) {
          ConstMatrixMap<T> wj(pw->value.data() + j * cin * cout, cin, cout);
          shifted.noalias() = g * wj.transpose();
          for_shifted_rows(batch, len, offsets[j], [&](std::size_t dst, std::size_t src, std::size_t n) {
            gx.middleRows(src, n) += shifted.middleRows(dst, n);
          });
        }
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gain,
                     const Tensor<T>& shift, double eps) {
  require(input.rank() >= 1, "layer_norm needs at least one axis");
  const std::size_t d = input.shape().back();
  require(d >= 1, "layer_norm needs d >= 1");
  require(gain.size() == d && shift.size() == d,
          "layer_norm gain/shift must have length " + std::to_string(d));
  const std::size_t rows = input.size() / d;
  std::vector<T> out(input.size());
  std::vector<T> normalized(input.size());
  std::vector<T> inv_std(rows);
  auto x = input.data();
  auto ga = gain.data();
  auto sh = shift.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * d;
    T mean = 0;
    for (std::size_t c = 0; c < d; ++c) mean += xr[c];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
    inv_std[r] = inv;
    for (std::size_t c = 0; c < d; ++c) {
      const T n = (xr[c] - mean) * inv;
      normalized[r * d + c] = n;
      out[r * d + c] = ga[c] * n + sh[c];
    }
  }
  auto result = make_result<T>(input.shape(), std::move(out), {input, gain, shift});
  if (result.requires_grad()) {
    NodePtr<T> px = input.shared_node(), pg = gain.shared_node(),
               ps = shift.shared_node();
    result.node()->backward = [=, normalized = std::move(normalized),
                               inv_std = std::move(inv_std)](detail::Node<T>& self) {
      const T* g = self.grad.data();
      if (pg->requires_grad) {
        auto& gg = pg->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < d; ++c) gg[c] += g[r * d + c] * normalized[r * d + c];
        }
      }
      if (ps->requires_grad) {
        auto& gs = ps->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) axpy<T>(d, T(1), g + r * d, gs.data());
      }
      if (px->requires_grad) {
        auto& gx = px->ensure_grad();
        const T* gain_v = pg->value.data();
        const T dn = static_cast<T>(d);
        for (std::size_t r = 0; r < rows; ++r) {
          T sum_dn = 0, sum_dn_n = 0;
          for (std::size_t c = 0; c < d; ++c) {
            const T dnorm = g[r * d + c] * gain_v[c];
            sum_dn += dnorm;
            sum_dn_n += dnorm * normalized[r * d + c];
          }
          for (std::size_t c = 0; c < d; ++c) {
            const T dnorm = g[r * d + c] * gain_v[c];
            gx[r * d + c] += inv_std[r] / dn *
                             (dn * dnorm - sum_dn - normalized[r * d + c] * sum_dn_n);
          }
        }
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> pointwise(const Tensor<T>& input, const Tensor<T>& weights,
                    const Tensor<T>& bias) {
  require(weights.rank() == 2, "pointwise weights must be [c_in, c_out]");
  const std::size_t cin = weights.dim(0), cout = weights.dim(1);
  require(input.rank() >= 1 && input.shape().back() == cin,
          "pointwise channel mismatch: input " + shape_string(input.shape()) +
              " vs weights " + shape_string(weights.shape()));
  require(!bias.defined() || bias.size() == cout, "pointwise bias size mismatch");
  const std::size_t rows = input.size() / cin;
  std::vector<T> out(rows * cout);
  MatrixMap<T> o(out.data(), rows, cout);
  o.noalias() = ConstMatrixMap<T>(input.data().data(), rows, cin) *
                ConstMatrixMap<T>(weights.data().data(), cin, cout);
  if (bias.defined()) o.rowwise() += ConstMatrixMap<T>(bias.data().data(), 1, cout).row(0);
  Shape shape = input.shape();
  shape.back() = cout;
  auto result = make_result<T>(std::move(shape), std::move(out), {input, weights, bias});
  if (result.requires_grad()) {
    NodePtr<T> px = input.shared_node(), pw = weights.shared_node();
    NodePtr<T> pb = bias.defined() ? bias.shared_node() : nullptr;
    result.node()->backward = [=](detail::Node<T>& self) {
      ConstMatrixMap<T> g(self.grad.data(), rows, cout);
      if (pb && pb->requires_grad) {
        add_row_sums(self.grad.data(), rows, cout, pb->ensure_grad().data());
      }
      if (pw->requires_grad) {
        MatrixMap<T>(pw->ensure_grad().data(), cin, cout).noalias() +=
            ConstMatrixMap<T>(px->value.data(), rows, cin).transpose() * g;
      }
      if (px->requires_grad) {
        MatrixMap<T>(px->ensure_grad().data(), rows, cin).noalias() +=
            g * ConstMatrixMap<T>(pw->value.data(), cin, cout).transpose();
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> gather_positions(const Tensor<T>& input,
                           std::span<const std::size_t> flat_positions) {
  require(input.rank() == 3, "gather_positions input must be [B, t, d]");
  const std::size_t slots = input.dim(0) * input.dim(1), d = input.dim(2);
  std::vector<T> out(flat_positions.size() * d);
  auto x = input.data();
  for (std::size_t m = 0; m < flat_positions.size(); ++m) {
    if (flat_positions[m] >= slots) {
      throw std::out_of_range("gather position " +
                              std::to_string(flat_positions[m]) + " out of range");
    }
    std::copy_n(x.data() + flat_positions[m] * d, d, out.data() + m * d);
  }
  auto result = make_result<T>({flat_positions.size(), d}, std::move(out), {input});
  if (result.requires_grad()) {
    NodePtr<T> px = input.shared_node();
    std::vector<std::size_t> index(flat_positions.begin(), flat_positions.end());
    result.node()->backward = [px, index = std::move(index), d](detail::Node<T>& self) {
      auto& gx = px->ensure_grad();
      for (std::size_t m = 0; m < index.size(); ++m) {
        axpy<T>(d, T(1), self.grad.data() + m * d, gx.data() + index[m] * d);
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() >= 1 && a.rank() == b.rank(), "concat_last rank mismatch");
  Shape lead_a(a.shape().begin(), a.shape().end() - 1);
  Shape lead_b(b.shape().begin(), b.shape().end() - 1);
  require(lead_a == lead_b, "concat_last leading shape mismatch");
  const std::size_t da = a.shape().back(), db = b.shape().back();
  const std::size_t rows = shape_size(lead_a);
  std::vector<T> out(rows * (da + db));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().data() + r * da, da, out.data() + r * (da + db));
    std::copy_n(b.data().data() + r * db, db, out.data() + r * (da + db) + da);
  }
  Shape shape = a.shape();
  shape.back() = da + db;
  auto result = make_result<T>(std::move(shape), std::move(out), {a, b});
  if (result.requires_grad()) {
    NodePtr<T> pa = a.shared_node(), pb = b.shared_node();
    result.node()->backward = [=](detail::Node<T>& self) {
      const T* g = self.grad.data();
      if (pa->requires_grad) {
        auto& ga = pa->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) axpy<T>(da, T(1), g + r * (da + db), ga.data() + r * da);
      }
      if (pb->requires_grad) {
        auto& gb = pb->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) axpy<T>(db, T(1), g + r * (da + db) + da, gb.data() + r * db);
      }
    };
  }
  return result;
}

template <typename T>
std::vector<T> softmax_rows(std::span<const T> logits, std::size_t cols) {
  std::vector<T> out(logits.size());
  const std::size_t rows = cols ? logits.size() / cols : 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * cols;
    T* p = out.data() + r * cols;
    const T peak = *std::max_element(z, z + cols);
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = std::exp(z[c] - peak);
      total += p[c];
    }
    for (std::size_t c = 0; c < cols; ++c) p[c] /= total;
  }
  return out;
}

template <typename T>
Tensor<T> masked_softmax_xent(const Tensor<T>& logits, std::span<const int> targets) {
  require(logits.rank() == 2, "masked_softmax_xent logits must be [M, n]");
  const std::size_t rows = logits.dim(0), n = logits.dim(1);
  require(rows >= 1, "masked_softmax_xent needs at least one prediction site");
  require(targets.size() == rows, "masked_softmax_xent: one target per row");
  for (int target : targets) {
    if (target <= 0 || static_cast<std::size_t>(target) >= n) {
      throw std::invalid_argument("masked_softmax_xent: target " +
                                  std::to_string(target) +
                                  " is PAD/MASK or outside [1, " +
                                  std::to_string(n - 1) + "]");
    }
  }
  auto probs = softmax_rows<T>(logits.data(), n);
  T total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data().data() + r * n;
    const T peak = *std::max_element(z, z + n);
    T acc = 0;
    for (std::size_t c = 0; c < n; ++c) acc += std::exp(z[c] - peak);
    total += peak + std::log(acc) - z[targets[r]];
  }
  auto result = make_result<T>({}, {total / static_cast<T>(rows)}, {logits});
  if (result.requires_grad()) {
    NodePtr<T> pl = logits.shared_node();
    std::vector<int> tgt(targets.begin(), targets.end());
    result.node()->backward = [pl, probs = std::move(probs), tgt = std::move(tgt),
                               rows, n](detail::Node<T>& self) {
      auto& gl = pl->ensure_grad();
      const T scale = self.grad[0] / static_cast<T>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < n; ++c) gl[r * n + c] += scale * probs[r * n + c];
        gl[r * n + tgt[r]] -= scale;
      }
    };
  }
  return result;
}

#define GREC_INSTANTIATE_OPS(T)                                                  \
  template struct ConvKernel<T>;                                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> sum(const Tensor<T>&);                                      \
  template Tensor<T> relu(const Tensor<T>&);                                     \
  template Tensor<T> embedding_lookup(const Tensor<T>&, const IdMatrix&);        \
  template Tensor<T> conv1d(const Tensor<T>&, const ConvKernel<T>&);             \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&,              \
                                const Tensor<T>&, double);                       \
  template Tensor<T> pointwise(const Tensor<T>&, const Tensor<T>&,               \
                               const Tensor<T>&);                                \
  template Tensor<T> gather_positions(const Tensor<T>&,                          \
                                      std::span<const std::size_t>);             \
  template Tensor<T> concat_last(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> masked_softmax_xent(const Tensor<T>&, std::span<const int>); \
  template std::vector<T> softmax_rows(std::span<const T>, std::size_t);

GREC_INSTANTIATE_OPS(float)
GREC_INSTANTIATE_OPS(double)

#undef GREC_INSTANTIATE_OPS

}  // namespace grec
