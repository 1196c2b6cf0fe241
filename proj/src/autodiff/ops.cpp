#include "svea/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <numbers>

namespace svea::ops {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using CMapMat = Eigen::Map<const RowMat<T>>;
template <class T>
using Strided = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <class T>
using CStrided = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

void require(bool ok, const std::string& op, const std::string& what) {
  if (!ok) throw ConfigError(op + ": " + what);
}

std::string shapes(const Shape& a, const Shape& b) { return shape_str(a) + " vs " + shape_str(b); }

template <class T>
BasicTape<T>& same_tape(BasicVar<T> a, BasicVar<T> b, const char* op) {
  require(a.valid() && b.valid() && &a.tape() == &b.tape(), op, "operands live on different tapes");
  return a.tape();
}

/// Elementwise unary op; `deriv(x, y)` gives dy/dx from input and output.
template <class T, class F, class D>
BasicVar<T> unary(const char* name, BasicVar<T> x, F f, D deriv) {
  const auto& xv = x.value();
  BasicTensor<T> y(xv.shape());
  for (std::int64_t i = 0; i < xv.numel(); ++i) y[i] = f(xv[i]);
  const int xi = x.id();
  return x.tape().record(name, std::move(y), {xi}, [xi, deriv](BasicTape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    const auto& g = *t.grad(self);
    const auto& xv = t.value(xi);
    const auto& yv = t.value(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
  });
}

}  // namespace

template <class T>
BasicVar<T> linear(BasicVar<T> x, BasicVar<T> w, BasicVar<T> b) {
  auto& tape = same_tape(x, w, "linear");
  const auto& xv = x.value();
  const auto& wv = w.value();
  require(wv.rank() == 2 && xv.rank() >= 1 && xv.dim(-1) == wv.dim(1), "linear",
          "input " + shapes(xv.shape(), wv.shape()));
  const std::int64_t in = wv.dim(1), out = wv.dim(0), rows = xv.numel() / in;
  if (b.valid()) {
    require(b.value().rank() == 1 && b.value().dim(0) == out, "linear",
            "bias " + shapes(b.value().shape(), wv.shape()));
  }
  Shape yshape = xv.shape();
  yshape.back() = out;
  BasicTensor<T> y(yshape);
  MapMat<T> Y(y.data(), rows, out);
  Y.noalias() = CMapMat<T>(xv.data(), rows, in) * CMapMat<T>(wv.data(), out, in).transpose();
  if (b.valid()) {
    Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b.value().data(), out);
  }
  std::vector<int> inputs{x.id(), w.id()};
  if (b.valid()) inputs.push_back(b.id());
  const int xi = x.id(), wi = w.id(), bi = b.valid() ? b.id() : -1;
  return tape.record("linear", std::move(y), inputs, [=](BasicTape<T>& t, int self) {
    CMapMat<T> G(t.grad(self)->data(), rows, out);
    if (t.needs_grad(xi)) {
      MapMat<T>(t.grad_buffer(xi).data(), rows, in).noalias() += G * CMapMat<T>(t.value(wi).data(), out, in);
    }
    if (t.needs_grad(wi)) {
      MapMat<T>(t.grad_buffer(wi).data(), out, in).noalias() += G.transpose() * CMapMat<T>(t.value(xi).data(), rows, in);
    }
    if (bi >= 0 && t.needs_grad(bi)) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(t.grad_buffer(bi).data(), out) += G.colwise().sum();
    }
  });
}

template <class T>
BasicVar<T> conv2d(BasicVar<T> x, BasicVar<T> w, BasicVar<T> b, int stride, int padding) {
  auto& tape = same_tape(x, w, "conv2d");
  const auto& xv = x.value();
  const auto& wv = w.value();
  require(xv.rank() == 4 && wv.rank() == 4 && xv.dim(1) == wv.dim(1) && wv.dim(2) == wv.dim(3), "conv2d",
          "input/kernel " + shapes(xv.shape(), wv.shape()));
  require(stride >= 1 && padding >= 0, "conv2d", "stride must be >= 1 and padding >= 0");
  const std::int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), wd = xv.dim(3);
  const std::int64_t o = wv.dim(0), k = wv.dim(2);
  const std::int64_t ho = (h + 2 * padding - k) / stride + 1;
  const std::int64_t wo = (wd + 2 * padding - k) / stride + 1;
  require(h + 2 * padding >= k && wd + 2 * padding >= k, "conv2d",
          "kernel larger than padded input " + shapes(xv.shape(), wv.shape()));
  if (b.valid()) {
    require(b.value().rank() == 1 && b.value().dim(0) == o, "conv2d",
            "bias " + shapes(b.value().shape(), wv.shape()));
  }
  const std::int64_t ckk = c * k * k, plane = ho * wo, ncols = n * plane;

  // im2col: row (ci, ky, kx), column (sample, oy, ox); zero outside the input.
  auto cols = std::make_shared<AlignedVector<T>>(static_cast<std::size_t>(ckk * ncols), T(0));
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t ky = 0; ky < k; ++ky) {
      for (std::int64_t kx = 0; kx < k; ++kx) {
        T* row = cols->data() + ((ci * k + ky) * k + kx) * ncols;
        for (std::int64_t s = 0; s < n; ++s) {
          const T* src = xv.data() + (s * c + ci) * h * wd;
          for (std::int64_t oy = 0; oy < ho; ++oy) {
            const std::int64_t iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= h) continue;
            T* dst = row + s * plane + oy * wo;
            for (std::int64_t ox = 0; ox < wo; ++ox) {
              const std::int64_t ix = ox * stride - padding + kx;
              if (ix >= 0 && ix < wd) dst[ox] = src[iy * wd + ix];
            }
          }
        }
      }
    }
  }
  RowMat<T> all = CMapMat<T>(wv.data(), o, ckk) * CMapMat<T>(cols->data(), ckk, ncols);
  BasicTensor<T> y(Shape{n, o, ho, wo});
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t oc = 0; oc < o; ++oc) {
      const T bias = b.valid() ? b.value()[oc] : T(0);
      const T* src = all.data() + oc * ncols + s * plane;
      T* dst = y.data() + (s * o + oc) * plane;
      for (std::int64_t p = 0; p < plane; ++p) dst[p] = src[p] + bias;
    }
  }
  std::vector<int> inputs{x.id(), w.id()};
  if (b.valid()) inputs.push_back(b.id());
  const int xi = x.id(), wi = w.id(), bi = b.valid() ? b.id() : -1;
  return tape.record("conv2d", std::move(y), inputs, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    RowMat<T> gall(o, ncols);
    for (std::int64_t s = 0; s < n; ++s) {
      for (std::int64_t oc = 0; oc < o; ++oc) {
        std::copy_n(g.data() + (s * o + oc) * plane, plane, gall.data() + oc * ncols + s * plane);
      }
    }
    if (t.needs_grad(wi)) {
      MapMat<T>(t.grad_buffer(wi).data(), o, ckk).noalias() +=
          gall * CMapMat<T>(cols->data(), ckk, ncols).transpose();
    }
    if (bi >= 0 && t.needs_grad(bi)) {
      auto& gb = t.grad_buffer(bi);
      for (std::int64_t oc = 0; oc < o; ++oc) gb[oc] += gall.row(oc).sum();
    }
    if (t.needs_grad(xi)) {
      RowMat<T> dcols = CMapMat<T>(t.value(wi).data(), o, ckk).transpose() * gall;
      auto& gx = t.grad_buffer(xi);
      for (std::int64_t ci = 0; ci < c; ++ci) {
        for (std::int64_t ky = 0; ky < k; ++ky) {
          for (std::int64_t kx = 0; kx < k; ++kx) {
            const T* row = dcols.data() + ((ci * k + ky) * k + kx) * ncols;
            for (std::int64_t s = 0; s < n; ++s) {
              T* dst = gx.data() + (s * c + ci) * h * wd;
              for (std::int64_t oy = 0; oy < ho; ++oy) {
                const std::int64_t iy = oy * stride - padding + ky;
                if (iy < 0 || iy >= h) continue;
                const T* src = row + s * plane + oy * wo;
                for (std::int64_t ox = 0; ox < wo; ++ox) {
                  const std::int64_t ix = ox * stride - padding + kx;
                  if (ix >= 0 && ix < wd) dst[iy * wd + ix] += src[ox];
                }
              }
            }
          }
        }
      }
    }
  });
}

template <class T>
BasicVar<T> relu(BasicVar<T> x) {
  return unary<T>(
      "relu", x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
BasicVar<T> tanh(BasicVar<T> x) {
  return unary<T>(
      "tanh", x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
BasicVar<T> gelu(BasicVar<T> x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt2pi = 0.39894228040143267794;
  return unary<T>(
      "gelu", x, [](T v) { return T(0.5) * v * (T(1) + std::erf(v * T(inv_sqrt2))); },
      [](T v, T) {
        return T(0.5) * (T(1) + std::erf(v * T(inv_sqrt2))) + v * T(inv_sqrt2pi) * std::exp(T(-0.5) * v * v);
      });
}

template <class T>
BasicVar<T> exp(BasicVar<T> x) {
  return unary<T>(
      "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <class T>
BasicVar<T> log(BasicVar<T> x) {
  return unary<T>(
      "log", x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <class T>
BasicVar<T> layernorm(BasicVar<T> x, BasicVar<T> gamma, BasicVar<T> beta, double eps) {
  auto& tape = same_tape(x, gamma, "layernorm");
  const auto& xv = x.value();
  require(xv.rank() >= 1, "layernorm", "input must have rank >= 1");
  const std::int64_t d = xv.dim(-1), rows = xv.numel() / d;
  require(gamma.value().shape() == Shape{d} && beta.value().shape() == Shape{d}, "layernorm",
          "gain/bias " + shapes(gamma.value().shape(), xv.shape()));
  auto xhat = std::make_shared<AlignedVector<T>>(static_cast<std::size_t>(xv.numel()));
  auto rstd = std::make_shared<AlignedVector<T>>(static_cast<std::size_t>(rows));
  BasicTensor<T> y(xv.shape());
  const auto& gv = gamma.value();
  const auto& bv = beta.value();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    double mu = 0;
    for (std::int64_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0;
    for (std::int64_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const T rs = static_cast<T>(1.0 / std::sqrt(var + eps));
    (*rstd)[static_cast<std::size_t>(r)] = rs;
    for (std::int64_t j = 0; j < d; ++j) {
      const T xh = static_cast<T>(xr[j] - mu) * rs;
      (*xhat)[static_cast<std::size_t>(r * d + j)] = xh;
      y[r * d + j] = xh * gv[j] + bv[j];
    }
  }
  const int xi = x.id(), gi = gamma.id(), bi = beta.id();
  return tape.record("layernorm", std::move(y), {xi, gi, bi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    const auto& gv = t.value(gi);
    if (t.needs_grad(gi)) {
      auto& gg = t.grad_buffer(gi);
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * (*xhat)[static_cast<std::size_t>(r * d + j)];
    }
    if (t.needs_grad(bi)) {
      auto& gb = t.grad_buffer(bi);
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
    }
    if (t.needs_grad(xi)) {
      auto& gx = t.grad_buffer(xi);
      for (std::int64_t r = 0; r < rows; ++r) {
        T mean_dxh = 0, mean_dxh_xh = 0;
        for (std::int64_t j = 0; j < d; ++j) {
          const T dxh = g[r * d + j] * gv[j];
          mean_dxh += dxh;
          mean_dxh_xh += dxh * (*xhat)[static_cast<std::size_t>(r * d + j)];
        }
        mean_dxh /= static_cast<T>(d);
        mean_dxh_xh /= static_cast<T>(d);
        const T rs = (*rstd)[static_cast<std::size_t>(r)];
        for (std::int64_t j = 0; j < d; ++j) {
          const T xh = (*xhat)[static_cast<std::size_t>(r * d + j)];
          gx[r * d + j] += rs * (g[r * d + j] * gv[j] - mean_dxh - xh * mean_dxh_xh);
        }
      }
    }
  });
}

template <class T>
BasicVar<T> softmax(BasicVar<T> x) {
  const auto& xv = x.value();
  require(xv.rank() >= 1, "softmax", "input must have rank >= 1");
  const std::int64_t d = xv.dim(-1), rows = xv.numel() / d;
  BasicTensor<T> y(xv.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    T* yr = y.data() + r * d;
    T mx = xr[0];
    for (std::int64_t j = 1; j < d; ++j) mx = std::max(mx, xr[j]);
    T sum = 0;
    for (std::int64_t j = 0; j < d; ++j) sum += (yr[j] = std::exp(xr[j] - mx));
    for (std::int64_t j = 0; j < d; ++j) yr[j] /= sum;
  }
  const int xi = x.id();
  return x.tape().record("softmax", std::move(y), {xi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    const auto& yv = t.value(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t r = 0; r < rows; ++r) {
      T dot = 0;
      for (std::int64_t j = 0; j < d; ++j) dot += g[r * d + j] * yv[r * d + j];
      for (std::int64_t j = 0; j < d; ++j) gx[r * d + j] += yv[r * d + j] * (g[r * d + j] - dot);
    }
  });
}

template <class T>
BasicVar<T> scaled_dot_attention(BasicVar<T> q, BasicVar<T> k, BasicVar<T> v, int heads) {
  auto& tape = same_tape(q, k, "scaled_dot_attention");
  same_tape(q, v, "scaled_dot_attention");
  const auto& qv = q.value();
  require(qv.rank() == 3 && k.value().shape() == qv.shape() && v.value().shape() == qv.shape(),
          "scaled_dot_attention", "q/k/v shapes " + shapes(qv.shape(), k.value().shape()) + " vs " +
                                      shape_str(v.value().shape()));
  const std::int64_t n = qv.dim(0), len = qv.dim(1), e = qv.dim(2);
  require(heads >= 1 && e % heads == 0, "scaled_dot_attention",
          "head count " + std::to_string(heads) + " does not divide embed dim " + std::to_string(e));
  const std::int64_t hd = e / heads;
  const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
  // Attention probabilities, (n, heads, len, len).
  auto probs = std::make_shared<AlignedVector<T>>(static_cast<std::size_t>(n * heads * len * len));
  BasicTensor<T> y(qv.shape());
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t hh = 0; hh < heads; ++hh) {
      const std::int64_t off = s * len * e + hh * hd;
      CStrided<T> Q(qv.data() + off, len, hd, Eigen::OuterStride<>(e));
      CStrided<T> K(k.value().data() + off, len, hd, Eigen::OuterStride<>(e));
      CStrided<T> V(v.value().data() + off, len, hd, Eigen::OuterStride<>(e));
      MapMat<T> P(probs->data() + (s * heads + hh) * len * len, len, len);
      P.noalias() = (Q * K.transpose()) * inv;
      for (std::int64_t r = 0; r < len; ++r) {
        const T mx = P.row(r).maxCoeff();
        P.row(r) = (P.row(r).array() - mx).exp();
        P.row(r) /= P.row(r).sum();
      }
      Strided<T>(y.data() + off, len, hd, Eigen::OuterStride<>(e)).noalias() = P * V;
    }
  }
  const int qi = q.id(), ki = k.id(), vi = v.id();
  return tape.record("scaled_dot_attention", std::move(y), {qi, ki, vi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    const bool need_q = t.needs_grad(qi), need_k = t.needs_grad(ki), need_v = t.needs_grad(vi);
    T* gq = need_q ? t.grad_buffer(qi).data() : nullptr;
    T* gk = need_k ? t.grad_buffer(ki).data() : nullptr;
    T* gv = need_v ? t.grad_buffer(vi).data() : nullptr;
    RowMat<T> dP(len, len), dS(len, len);
    for (std::int64_t s = 0; s < n; ++s) {
      for (std::int64_t hh = 0; hh < heads; ++hh) {
        const std::int64_t off = s * len * e + hh * hd;
        const Eigen::OuterStride<> st(e);
        CStrided<T> Q(t.value(qi).data() + off, len, hd, st);
        CStrided<T> K(t.value(ki).data() + off, len, hd, st);
        CStrided<T> V(t.value(vi).data() + off, len, hd, st);
        CStrided<T> G(g.data() + off, len, hd, st);
        CMapMat<T> P(probs->data() + (s * heads + hh) * len * len, len, len);
        if (need_v) Strided<T>(gv + off, len, hd, st).noalias() += P.transpose() * G;
        if (!need_q && !need_k) continue;
        dP.noalias() = G * V.transpose();
        for (std::int64_t r = 0; r < len; ++r) {
          const T dot = dP.row(r).dot(P.row(r));
          dS.row(r) = P.row(r).array() * (dP.row(r).array() - dot);
        }
        dS *= inv;
        if (need_q) Strided<T>(gq + off, len, hd, st).noalias() += dS * K;
        if (need_k) Strided<T>(gk + off, len, hd, st).noalias() += dS.transpose() * Q;
      }
    }
  });
}

template <class T>
BasicVar<T> add(BasicVar<T> a, BasicVar<T> b) {
  auto& tape = same_tape(a, b, "add");
  const auto& av = a.value();
  const auto& bv = b.value();
  const bool same = av.shape() == bv.shape();
  const bool suffix = !same && bv.rank() <= av.rank() && bv.numel() > 0 &&
                      std::equal(bv.shape().rbegin(), bv.shape().rend(), av.shape().rbegin());
  require(same || suffix, "add", "operand " + shapes(av.shape(), bv.shape()));
  const std::int64_t bn = bv.numel();
  BasicTensor<T> y(av.shape());
  for (std::int64_t i = 0; i < av.numel(); ++i) y[i] = av[i] + bv[i % bn];
  const int ai = a.id(), bi = b.id();
  return tape.record("add", std::move(y), {ai, bi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    if (t.needs_grad(ai)) {
      auto& ga = t.grad_buffer(ai);
      for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
    }
    if (t.needs_grad(bi)) {
      auto& gb = t.grad_buffer(bi);
      for (std::int64_t i = 0; i < g.numel(); ++i) gb[i % bn] += g[i];
    }
  });
}

template <class T>
BasicVar<T> sub(BasicVar<T> a, BasicVar<T> b) {
  auto& tape = same_tape(a, b, "sub");
  require(a.shape() == b.shape(), "sub", "operand " + shapes(a.shape(), b.shape()));
  BasicTensor<T> y(a.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] - b.value()[i];
  const int ai = a.id(), bi = b.id();
  return tape.record("sub", std::move(y), {ai, bi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    if (t.needs_grad(ai)) {
      auto& ga = t.grad_buffer(ai);
      for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
    }
    if (t.needs_grad(bi)) {
      auto& gb = t.grad_buffer(bi);
      for (std::int64_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
    }
  });
}

template <class T>
BasicVar<T> mul(BasicVar<T> a, BasicVar<T> b) {
  auto& tape = same_tape(a, b, "mul");
  require(a.shape() == b.shape(), "mul", "operand " + shapes(a.shape(), b.shape()));
  BasicTensor<T> y(a.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] * b.value()[i];
  const int ai = a.id(), bi = b.id();
  return tape.record("mul", std::move(y), {ai, bi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    if (t.needs_grad(ai)) {
      auto& ga = t.grad_buffer(ai);
      const auto& bv = t.value(bi);
      for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(bi)) {
      auto& gb = t.grad_buffer(bi);
      const auto& av = t.value(ai);
      for (std::int64_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <class T>
BasicVar<T> scale(BasicVar<T> x, double c) {
  const T ct = static_cast<T>(c);
  return unary<T>(
      "scale", x, [ct](T v) { return v * ct; }, [ct](T, T) { return ct; });
}

template <class T>
BasicVar<T> add_scalar(BasicVar<T> x, double c) {
  const T ct = static_cast<T>(c);
  return unary<T>(
      "add_scalar", x, [ct](T v) { return v + ct; }, [](T, T) { return T(1); });
}

template <class T>
BasicVar<T> minimum(BasicVar<T> a, BasicVar<T> b) {
  auto& tape = same_tape(a, b, "minimum");
  require(a.shape() == b.shape(), "minimum", "operand " + shapes(a.shape(), b.shape()));
  BasicTensor<T> y(a.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = std::min(a.value()[i], b.value()[i]);
  const int ai = a.id(), bi = b.id();
  return tape.record("minimum", std::move(y), {ai, bi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    const auto& av = t.value(ai);
    const auto& bv = t.value(bi);
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      // Ties route to the first operand.
      if (av[i] <= bv[i]) {
        if (t.needs_grad(ai)) t.grad_buffer(ai)[i] += g[i];
      } else if (t.needs_grad(bi)) {
        t.grad_buffer(bi)[i] += g[i];
      }
    }
  });
}

template <class T>
BasicVar<T> concat_batch(BasicVar<T> a, BasicVar<T> b) {
  auto& tape = same_tape(a, b, "concat_batch");
  BasicTensor<T> y = concat_rows(a.value(), b.value());
  const int ai = a.id(), bi = b.id();
  const std::int64_t na = a.value().numel();
  return tape.record("concat_batch", std::move(y), {ai, bi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    if (t.needs_grad(ai)) {
      auto& ga = t.grad_buffer(ai);
      for (std::int64_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (t.needs_grad(bi)) {
      auto& gb = t.grad_buffer(bi);
      for (std::int64_t i = 0; i < gb.numel(); ++i) gb[i] += g[na + i];
    }
  });
}

template <class T>
BasicVar<T> slice_batch(BasicVar<T> x, std::int64_t begin, std::int64_t end) {
  BasicTensor<T> y = slice_rows(x.value(), begin, end);
  const int xi = x.id();
  const std::int64_t offset = x.value().dim(0) == 0 ? 0 : begin * (x.value().numel() / x.value().dim(0));
  return x.tape().record("slice_batch", std::move(y), {xi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[offset + i] += g[i];
  });
}

template <class T>
BasicVar<T> reshape(BasicVar<T> x, Shape shape) {
  BasicTensor<T> y = x.value().reshaped(std::move(shape));
  const int xi = x.id();
  return x.tape().record("reshape", std::move(y), {xi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  });
}

template <class T>
BasicVar<T> prepend_token(BasicVar<T> x, BasicVar<T> token) {
  auto& tape = same_tape(x, token, "prepend_token");
  const auto& xv = x.value();
  require(xv.rank() == 3 && token.value().shape() == Shape{xv.dim(2)}, "prepend_token",
          "sequence/token " + shapes(xv.shape(), token.value().shape()));
  const std::int64_t n = xv.dim(0), len = xv.dim(1), e = xv.dim(2);
  BasicTensor<T> y(Shape{n, len + 1, e});
  for (std::int64_t s = 0; s < n; ++s) {
    std::copy_n(token.value().data(), e, y.data() + s * (len + 1) * e);
    std::copy_n(xv.data() + s * len * e, len * e, y.data() + (s * (len + 1) + 1) * e);
  }
  const int xi = x.id(), ti = token.id();
  return tape.record("prepend_token", std::move(y), {xi, ti}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    for (std::int64_t s = 0; s < n; ++s) {
      const T* gs = g.data() + s * (len + 1) * e;
      if (t.needs_grad(ti)) {
        auto& gt = t.grad_buffer(ti);
        for (std::int64_t j = 0; j < e; ++j) gt[j] += gs[j];
      }
      if (t.needs_grad(xi)) {
        T* gx = t.grad_buffer(xi).data() + s * len * e;
        for (std::int64_t j = 0; j < len * e; ++j) gx[j] += gs[e + j];
      }
    }
  });
}

template <class T>
BasicVar<T> select_token(BasicVar<T> x, std::int64_t index) {
  const auto& xv = x.value();
  require(xv.rank() == 3 && index >= 0 && index < xv.dim(1), "select_token",
          "index " + std::to_string(index) + " for shape " + shape_str(xv.shape()));
  const std::int64_t n = xv.dim(0), len = xv.dim(1), e = xv.dim(2);
  BasicTensor<T> y(Shape{n, e});
  for (std::int64_t s = 0; s < n; ++s) std::copy_n(xv.data() + (s * len + index) * e, e, y.data() + s * e);
  const int xi = x.id();
  return x.tape().record("select_token", std::move(y), {xi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t s = 0; s < n; ++s)
      for (std::int64_t j = 0; j < e; ++j) gx[(s * len + index) * e + j] += g[s * e + j];
  });
}

template <class T>
BasicVar<T> mean_tokens(BasicVar<T> x) {
  const auto& xv = x.value();
  require(xv.rank() == 3 && xv.dim(1) > 0, "mean_tokens", "shape " + shape_str(xv.shape()));
  const std::int64_t n = xv.dim(0), len = xv.dim(1), e = xv.dim(2);
  const T inv = T(1) / static_cast<T>(len);
  BasicTensor<T> y(Shape{n, e});
  for (std::int64_t s = 0; s < n; ++s)
    for (std::int64_t l = 0; l < len; ++l)
      for (std::int64_t j = 0; j < e; ++j) y[s * e + j] += xv[(s * len + l) * e + j] * inv;
  const int xi = x.id();
  return x.tape().record("mean_tokens", std::move(y), {xi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t s = 0; s < n; ++s)
      for (std::int64_t l = 0; l < len; ++l)
        for (std::int64_t j = 0; j < e; ++j) gx[(s * len + l) * e + j] += g[s * e + j] * inv;
  });
}

template <class T>
BasicVar<T> gather_cols(BasicVar<T> x, std::span<const int> index) {
  const auto& xv = x.value();
  require(xv.rank() == 2 && static_cast<std::int64_t>(index.size()) == xv.dim(0), "gather_cols",
          "index length " + std::to_string(index.size()) + " for shape " + shape_str(xv.shape()));
  const std::int64_t n = xv.dim(0), a = xv.dim(1);
  std::vector<int> idx(index.begin(), index.end());
  BasicTensor<T> y(Shape{n});
  for (std::int64_t i = 0; i < n; ++i) {
    require(idx[static_cast<std::size_t>(i)] >= 0 && idx[static_cast<std::size_t>(i)] < a, "gather_cols",
            "column index " + std::to_string(idx[static_cast<std::size_t>(i)]) + " out of range for " +
                shape_str(xv.shape()));
    y[i] = xv[i * a + idx[static_cast<std::size_t>(i)]];
  }
  const int xi = x.id();
  return x.tape().record("gather_cols", std::move(y), {xi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t i = 0; i < n; ++i) gx[i * a + idx[static_cast<std::size_t>(i)]] += g[i];
  });
}

template <class T>
BasicVar<T> concat_cols(BasicVar<T> a, BasicVar<T> b) {
  auto& tape = same_tape(a, b, "concat_cols");
  require(a.value().rank() == 2 && b.value().rank() == 2 && a.dim(0) == b.dim(0), "concat_cols",
          "operand " + shapes(a.shape(), b.shape()));
  const std::int64_t n = a.dim(0), p = a.dim(1), q = b.dim(1);
  BasicTensor<T> y(Shape{n, p + q});
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(a.value().data() + i * p, p, y.data() + i * (p + q));
    std::copy_n(b.value().data() + i * q, q, y.data() + i * (p + q) + p);
  }
  const int ai = a.id(), bi = b.id();
  return tape.record("concat_cols", std::move(y), {ai, bi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    for (std::int64_t i = 0; i < n; ++i) {
      if (t.needs_grad(ai)) {
        auto& ga = t.grad_buffer(ai);
        for (std::int64_t j = 0; j < p; ++j) ga[i * p + j] += g[i * (p + q) + j];
      }
      if (t.needs_grad(bi)) {
        auto& gb = t.grad_buffer(bi);
        for (std::int64_t j = 0; j < q; ++j) gb[i * q + j] += g[i * (p + q) + p + j];
      }
    }
  });
}

template <class T>
BasicVar<T> slice_cols(BasicVar<T> x, std::int64_t begin, std::int64_t end) {
  const auto& xv = x.value();
  require(xv.rank() == 2 && begin >= 0 && begin <= end && end <= xv.dim(1), "slice_cols",
          "range [" + std::to_string(begin) + ", " + std::to_string(end) + ") for " + shape_str(xv.shape()));
  const std::int64_t n = xv.dim(0), p = xv.dim(1), w = end - begin;
  BasicTensor<T> y(Shape{n, w});
  for (std::int64_t i = 0; i < n; ++i) std::copy_n(xv.data() + i * p + begin, w, y.data() + i * w);
  const int xi = x.id();
  return x.tape().record("slice_cols", std::move(y), {xi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < w; ++j) gx[i * p + begin + j] += g[i * w + j];
  });
}

template <class T>
BasicVar<T> sum_last(BasicVar<T> x) {
  const auto& xv = x.value();
  require(xv.rank() >= 1, "sum_last", "input must have rank >= 1");
  const std::int64_t d = xv.dim(-1), rows = xv.numel() / d;
  Shape ys(xv.shape().begin(), xv.shape().end() - 1);
  BasicTensor<T> y(ys);
  for (std::int64_t r = 0; r < rows; ++r) {
    T s = 0;
    for (std::int64_t j = 0; j < d; ++j) s += xv[r * d + j];
    y[r] = s;
  }
  const int xi = x.id();
  return x.tape().record("sum_last", std::move(y), {xi}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t j = 0; j < d; ++j) gx[r * d + j] += g[r];
  });
}

template <class T>
BasicVar<T> mean(BasicVar<T> x) {
  const auto& xv = x.value();
  require(xv.numel() > 0, "mean", "empty input");
  T s = 0;
  for (T v : xv.vec()) s += v;
  const T inv = T(1) / static_cast<T>(xv.numel());
  const int xi = x.id();
  return x.tape().record("mean", BasicTensor<T>::scalar(s * inv), {xi}, [=](BasicTape<T>& t, int self) {
    const T g = (*t.grad(self))[0] * inv;
    auto& gx = t.grad_buffer(xi);
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  });
}

template <class T>
BasicVar<T> mse(BasicVar<T> pred, BasicVar<T> target) {
  auto& tape = same_tape(pred, target, "mse");
  require(pred.shape() == target.shape() && pred.value().numel() > 0, "mse",
          "operand " + shapes(pred.shape(), target.shape()));
  const auto& p = pred.value();
  const auto& q = target.value();
  T s = 0;
  for (std::int64_t i = 0; i < p.numel(); ++i) {
    const T d = p[i] - q[i];
    s += T(0.5) * d * d;
  }
  const T inv = T(1) / static_cast<T>(p.numel());
  const int pi = pred.id(), ti = target.id();
  return tape.record("mse", BasicTensor<T>::scalar(s * inv), {pi, ti}, [=](BasicTape<T>& t, int self) {
    const T g = (*t.grad(self))[0] * inv;
    const auto& p = t.value(pi);
    const auto& q = t.value(ti);
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      const T d = g * (p[i] - q[i]);
      if (t.needs_grad(pi)) t.grad_buffer(pi)[i] += d;
      if (t.needs_grad(ti)) t.grad_buffer(ti)[i] -= d;
    }
  });
}

template <class T>
BasicVar<T> gaussian_logprob(BasicVar<T> x, BasicVar<T> mu, BasicVar<T> log_std) {
  auto& tape = same_tape(x, mu, "gaussian_logprob");
  same_tape(x, log_std, "gaussian_logprob");
  require(x.value().rank() == 2 && mu.shape() == x.shape() && log_std.shape() == x.shape(), "gaussian_logprob",
          "operand " + shapes(x.shape(), mu.shape()) + " vs " + shape_str(log_std.shape()));
  const std::int64_t n = x.dim(0), d = x.dim(1);
  const T half_log_2pi = static_cast<T>(0.5 * std::log(2.0 * std::numbers::pi));
  BasicTensor<T> y(Shape{n});
  for (std::int64_t i = 0; i < n; ++i) {
    T s = 0;
    for (std::int64_t j = 0; j < d; ++j) {
      const std::int64_t k = i * d + j;
      const T z = (x.value()[k] - mu.value()[k]) * std::exp(-log_std.value()[k]);
      s += T(-0.5) * z * z - log_std.value()[k] - half_log_2pi;
    }
    y[i] = s;
  }
  const int xi = x.id(), mi = mu.id(), li = log_std.id();
  return tape.record("gaussian_logprob", std::move(y), {xi, mi, li}, [=](BasicTape<T>& t, int self) {
    const auto& g = *t.grad(self);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < d; ++j) {
        const std::int64_t k = i * d + j;
        const T inv_std = std::exp(-t.value(li)[k]);
        const T z = (t.value(xi)[k] - t.value(mi)[k]) * inv_std;
        if (t.needs_grad(xi)) t.grad_buffer(xi)[k] += g[i] * (-z * inv_std);
        if (t.needs_grad(mi)) t.grad_buffer(mi)[k] += g[i] * (z * inv_std);
        if (t.needs_grad(li)) t.grad_buffer(li)[k] += g[i] * (z * z - T(1));
      }
    }
  });
}

#define SVEA_INSTANTIATE_OPS(T)                                                                     \
  template BasicVar<T> linear(BasicVar<T>, BasicVar<T>, BasicVar<T>);                               \
  template BasicVar<T> conv2d(BasicVar<T>, BasicVar<T>, BasicVar<T>, int, int);                     \
  template BasicVar<T> relu(BasicVar<T>);                                                           \
  template BasicVar<T> tanh(BasicVar<T>);                                                           \
  template BasicVar<T> gelu(BasicVar<T>);                                                           \
  template BasicVar<T> exp(BasicVar<T>);                                                            \
  template BasicVar<T> log(BasicVar<T>);                                                            \
  template BasicVar<T> layernorm(BasicVar<T>, BasicVar<T>, BasicVar<T>, double);                    \
  template BasicVar<T> softmax(BasicVar<T>);                                                        \
  template BasicVar<T> scaled_dot_attention(BasicVar<T>, BasicVar<T>, BasicVar<T>, int);            \
  template BasicVar<T> add(BasicVar<T>, BasicVar<T>);                                               \
  template BasicVar<T> sub(BasicVar<T>, BasicVar<T>);                                               \
  template BasicVar<T> mul(BasicVar<T>, BasicVar<T>);                                               \
  template BasicVar<T> scale(BasicVar<T>, double);                                                  \
  template BasicVar<T> add_scalar(BasicVar<T>, double);                                             \
  template BasicVar<T> minimum(BasicVar<T>, BasicVar<T>);                                           \
  template BasicVar<T> concat_batch(BasicVar<T>, BasicVar<T>);                                      \
  template BasicVar<T> slice_batch(BasicVar<T>, std::int64_t, std::int64_t);                        \
  template BasicVar<T> reshape(BasicVar<T>, Shape);                                                 \
  template BasicVar<T> prepend_token(BasicVar<T>, BasicVar<T>);                                     \
  template BasicVar<T> select_token(BasicVar<T>, std::int64_t);                                     \
  template BasicVar<T> mean_tokens(BasicVar<T>);                                                    \
  template BasicVar<T> gather_cols(BasicVar<T>, std::span<const int>);                              \
  template BasicVar<T> concat_cols(BasicVar<T>, BasicVar<T>);                                       \
  template BasicVar<T> slice_cols(BasicVar<T>, std::int64_t, std::int64_t);                         \
  template BasicVar<T> sum_last(BasicVar<T>);                                                       \
  template BasicVar<T> mean(BasicVar<T>);                                                           \
  template BasicVar<T> mse(BasicVar<T>, BasicVar<T>);                                               \
  template BasicVar<T> gaussian_logprob(BasicVar<T>, BasicVar<T>, BasicVar<T>);

SVEA_INSTANTIATE_OPS(float)
SVEA_INSTANTIATE_OPS(double)

}  // namespace svea::ops
