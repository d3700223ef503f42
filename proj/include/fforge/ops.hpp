#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fforge/tensor.hpp"

namespace fforge {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;

template <typename Scalar>
using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

namespace detail {

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " +
                         to_string(b));
}

/// Geometry of a strided, zero-padded square-kernel window sweep.
struct Window {
  Index channels, height, width;  // the padded-side image
  Index kernel, stride, padding;
  Index out_height, out_width;    // window positions

  Index rows() const { return channels * kernel * kernel; }
  Index cols() const { return out_height * out_width; }
};

/// Unfolds one C×H×W image into a (C·k·k) × (Ho·Wo) row-major matrix.
template <typename Scalar>
void im2col(const Scalar* image, const Window& g, Scalar* cols) {
  const Index P = g.cols();
  for (Index c = 0; c < g.channels; ++c)
    for (Index ki = 0; ki < g.kernel; ++ki)
      for (Index kj = 0; kj < g.kernel; ++kj) {
        Scalar* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * P;
        for (Index oh = 0; oh < g.out_height; ++oh) {
          const Index ih = oh * g.stride - g.padding + ki;
          Scalar* dst = row + oh * g.out_width;
          if (ih < 0 || ih >= g.height) {
            std::fill(dst, dst + g.out_width, Scalar(0));
            continue;
          }
          const Scalar* src = image + (c * g.height + ih) * g.width;
          for (Index ow = 0; ow < g.out_width; ++ow) {
            const Index iw = ow * g.stride - g.padding + kj;
            dst[ow] = (iw >= 0 && iw < g.width) ? src[iw] : Scalar(0);
          }
        }
      }
}

/// Adjoint of im2col: scatters-and-adds columns back into the image.
template <typename Scalar>
void col2im(const Scalar* cols, const Window& g, Scalar* image) {
  const Index P = g.cols();
  for (Index c = 0; c < g.channels; ++c)
    for (Index ki = 0; ki < g.kernel; ++ki)
      for (Index kj = 0; kj < g.kernel; ++kj) {
        const Scalar* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * P;
        for (Index oh = 0; oh < g.out_height; ++oh) {
          const Index ih = oh * g.stride - g.padding + ki;
          if (ih < 0 || ih >= g.height) continue;
          Scalar* dst = image + (c * g.height + ih) * g.width;
          const Scalar* src = row + oh * g.out_width;
          for (Index ow = 0; ow < g.out_width; ++ow) {
            const Index iw = ow * g.stride - g.padding + kj;
            if (iw >= 0 && iw < g.width) dst[iw] += src[ow];
          }
        }
      }
}

template <typename Scalar>
void check_bias(const Tensor<Scalar>& bias, Index channels, const char* op) {
  if (bias.defined() && bias.size() != channels)
    throw DimensionError(std::string(op) + ": bias has " + std::to_string(bias.size()) +
                         " entries, expected " + std::to_string(channels));
}

template <typename Scalar>
std::vector<std::shared_ptr<Node<Scalar>>> nodes_of(std::initializer_list<Tensor<Scalar>> ts) {
  std::vector<std::shared_ptr<Node<Scalar>>> out;
  for (const auto& t : ts)
    if (t.defined()) out.push_back(t.node());
  return out;
}

template <typename Scalar, typename Forward, typename Derivative>
Tensor<Scalar> unary(const Tensor<Scalar>& x, Forward f, Derivative df) {
  Buffer<Scalar> y = x.value().unaryExpr(f);
  auto* xn = x.node().get();
  return make_result<Scalar>(x.shape(), std::move(y), {x.node()},
                             [xn, df](const Buffer<Scalar>& g) {
                               xn->accumulate(g * xn->value.unaryExpr(df));
                             });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

/// 2-D cross-correlation with zero padding.
///
/// input (N, Cin, H, W), weight (Cout, Cin, k, k), bias of Cout entries or an
/// undefined tensor for no bias. Output extent floor((H + 2p - k) / s) + 1.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias, Index stride, Index padding) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (stride < 1 || padding < 0) throw ConfigError("conv2d: stride must be >= 1 and padding >= 0");
  if (ws[2] != ws[3]) throw DimensionError("conv2d: kernel must be square, got " + to_string(ws));
  if (ws[1] != xs[1])
    throw DimensionError("conv2d: input has " + std::to_string(xs[1]) + " channels, weight expects " +
                         std::to_string(ws[1]));
  const Index k = ws[2];
  const Index span_h = xs[2] + 2 * padding - k, span_w = xs[3] + 2 * padding - k;
  if (span_h < 0 || span_w < 0)
    throw ConfigError("conv2d: kernel " + std::to_string(k) + " larger than padded input " +
                      to_string(xs));
  const Index cout = ws[0];
  detail::check_bias(bias, cout, "conv2d");

  const detail::Window g{xs[1], xs[2], xs[3], k, stride, padding, span_h / stride + 1,
                         span_w / stride + 1};
  const Index N = xs[0], P = g.cols(), K = g.rows();
  const Shape out_shape{N, cout, g.out_height, g.out_width};

  Buffer<Scalar> y(numel(out_shape));
  RowMatrix<Scalar> cols(K, P);
  ConstMatrixMap<Scalar> W(weight.value().data(), cout, K);
  for (Index n = 0; n < N; ++n) {
    detail::im2col(input.value().data() + n * xs[1] * xs[2] * xs[3], g, cols.data());
    MatrixMap<Scalar> Y(y.data() + n * cout * P, cout, P);
    Y.noalias() = W * cols;
    if (bias.defined()) Y.colwise() += bias.value().matrix();
  }

  auto* xn = input.node().get();
  auto* wn = weight.node().get();
  auto* bn = bias.defined() ? bias.node().get() : nullptr;
  return detail::make_result<Scalar>(
      out_shape, std::move(y), detail::nodes_of({input, weight, bias}),
      [xn, wn, bn, g, N, cout, K, P](const Buffer<Scalar>& grad) {
        const Index in_size = g.channels * g.height * g.width;
        ConstMatrixMap<Scalar> W(wn->value.data(), cout, K);
        RowMatrix<Scalar> cols(K, P);
        Buffer<Scalar> dx;
        RowMatrix<Scalar> dW;
        if (xn->requires_grad) dx = Buffer<Scalar>::Zero(xn->value.size());
        if (wn->requires_grad) dW = RowMatrix<Scalar>::Zero(cout, K);
        Buffer<Scalar> db = Buffer<Scalar>::Zero(cout);
        for (Index n = 0; n < N; ++n) {
          ConstMatrixMap<Scalar> dY(grad.data() + n * cout * P, cout, P);
          if (wn->requires_grad) {
            detail::im2col(xn->value.data() + n * in_size, g, cols.data());
            dW.noalias() += dY * cols.transpose();
          }
          if (xn->requires_grad) {
            cols.noalias() = W.transpose() * dY;
            detail::col2im(cols.data(), g, dx.data() + n * in_size);
          }
          if (bn) db += dY.rowwise().sum().array();
        }
        if (xn->requires_grad) xn->accumulate(dx);
        if (wn->requires_grad) wn->accumulate(Eigen::Map<const Buffer<Scalar>>(dW.data(), dW.size()));
        if (bn) bn->accumulate(db);
      });
}

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight, Index stride,
                      Index padding) {
  return conv2d(input, weight, Tensor<Scalar>(), stride, padding);
}

/// Transposed convolution: the exact adjoint of conv2d with the same
/// (k, stride, padding), producing (H - 1)·s - 2p + k + output_padding rows.
///
/// weight is (Cin, Cout, k, k). output_padding must be smaller than stride.
template <typename Scalar>
Tensor<Scalar> conv_transpose2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                                const Tensor<Scalar>& bias, Index stride, Index padding,
                                Index output_padding = 0) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (stride < 1 || padding < 0 || output_padding < 0)
    throw ConfigError("conv_transpose2d: stride must be >= 1, padding and output_padding >= 0");
  if (output_padding >= stride && output_padding != 0)
    throw ConfigError("conv_transpose2d: output_padding must be smaller than stride");
  if (ws[2] != ws[3])
    throw DimensionError("conv_transpose2d: kernel must be square, got " + to_string(ws));
  if (ws[0] != xs[1])
    throw DimensionError("conv_transpose2d: input has " + std::to_string(xs[1]) +
                         " channels, weight expects " + std::to_string(ws[0]));
  const Index k = ws[2], cin = ws[0], cout = ws[1];
  const Index ho = (xs[2] - 1) * stride - 2 * padding + k + output_padding;
  const Index wo = (xs[3] - 1) * stride - 2 * padding + k + output_padding;
  if (ho < 1 || wo < 1)
    throw ConfigError("conv_transpose2d: non-positive output extent for input " + to_string(xs));
  detail::check_bias(bias, cout, "conv_transpose2d");

  // Window over the (larger) output image whose positions are the input pixels.
  const detail::Window g{cout, ho, wo, k, stride, padding, xs[2], xs[3]};
  const Index N = xs[0], P = g.cols(), K = g.rows(), out_size = cout * ho * wo;
  const Shape out_shape{N, cout, ho, wo};

  Buffer<Scalar> y = Buffer<Scalar>::Zero(numel(out_shape));
  RowMatrix<Scalar> cols(K, P);
  ConstMatrixMap<Scalar> W(weight.value().data(), cin, K);
  for (Index n = 0; n < N; ++n) {
    ConstMatrixMap<Scalar> X(input.value().data() + n * cin * P, cin, P);
    cols.noalias() = W.transpose() * X;
    detail::col2im(cols.data(), g, y.data() + n * out_size);
    if (bias.defined()) {
      MatrixMap<Scalar> Y(y.data() + n * out_size, cout, ho * wo);
      Y.colwise() += bias.value().matrix();
    }
  }

  auto* xn = input.node().get();
  auto* wn = weight.node().get();
  auto* bn = bias.defined() ? bias.node().get() : nullptr;
  return detail::make_result<Scalar>(
      out_shape, std::move(y), detail::nodes_of({input, weight, bias}),
      [xn, wn, bn, g, N, cin, cout, K, P, out_size](const Buffer<Scalar>& grad) {
        ConstMatrixMap<Scalar> W(wn->value.data(), cin, K);
        RowMatrix<Scalar> cols(K, P);
        Buffer<Scalar> dx;
        RowMatrix<Scalar> dW;
        if (xn->requires_grad) dx.resize(xn->value.size());
        if (wn->requires_grad) dW = RowMatrix<Scalar>::Zero(cin, K);
        Buffer<Scalar> db = Buffer<Scalar>::Zero(cout);
        for (Index n = 0; n < N; ++n) {
          const Scalar* dy = grad.data() + n * out_size;
          if (xn->requires_grad || wn->requires_grad) detail::im2col(dy, g, cols.data());
          if (xn->requires_grad) {
            MatrixMap<Scalar> dX(dx.data() + n * cin * P, cin, P);
            dX.noalias() = W * cols;
          }
          if (wn->requires_grad) {
            ConstMatrixMap<Scalar> X(xn->value.data() + n * cin * P, cin, P);
            dW.noalias() += X * cols.transpose();
          }
          if (bn) db += ConstMatrixMap<Scalar>(dy, cout, g.height * g.width).rowwise().sum().array();
        }
        if (xn->requires_grad) xn->accumulate(dx);
        if (wn->requires_grad) wn->accumulate(Eigen::Map<const Buffer<Scalar>>(dW.data(), dW.size()));
        if (bn) bn->accumulate(db);
      });
}

// ---------------------------------------------------------------------------
// Normalization, activations, affine
// ---------------------------------------------------------------------------

/// Per-channel batch normalization.
///
/// Train mode normalizes with biased batch statistics and, when running
/// tensors are defined, blends the batch mean and unbiased variance into them
/// with weight `momentum`. Eval mode normalizes with the running statistics.
template <typename Scalar>
Tensor<Scalar> batchnorm2d(const Tensor<Scalar>& input, const Tensor<Scalar>& gamma,
                           const Tensor<Scalar>& beta, const Tensor<Scalar>& running_mean,
                           const Tensor<Scalar>& running_var, Mode mode, Scalar momentum = 0.1,
                           Scalar eps = 1e-5) {
  const Shape& xs = input.shape();
  const Index N = xs[0], C = xs[1], HW = xs[2] * xs[3];
  if (gamma.size() != C || beta.size() != C)
    throw DimensionError("batchnorm2d: gamma/beta length must equal channel count " +
                         std::to_string(C));
  if (!(eps > 0)) throw ConfigError("batchnorm2d: eps must be positive");
  const bool have_running = running_mean.defined() && running_var.defined();
  if (have_running && (running_mean.size() != C || running_var.size() != C))
    throw DimensionError("batchnorm2d: running statistics length must equal channel count");
  if (mode == Mode::eval && !have_running)
    throw UsageError("batchnorm2d: eval mode needs running statistics");

  const Index M = N * HW;
  Buffer<Scalar> mean(C), inv_std(C);
  const Buffer<Scalar>& x = input.value();
  if (mode == Mode::train) {
    for (Index c = 0; c < C; ++c) {
      Scalar s = 0;
      for (Index n = 0; n < N; ++n) s += x.segment((n * C + c) * HW, HW).sum();
      const Scalar mu = s / Scalar(M);
      Scalar ss = 0;
      for (Index n = 0; n < N; ++n) ss += (x.segment((n * C + c) * HW, HW) - mu).square().sum();
      const Scalar var = ss / Scalar(M);
      mean[c] = mu;
      inv_std[c] = Scalar(1) / std::sqrt(var + eps);
      if (have_running) {
        const Scalar unbiased = M > 1 ? var * Scalar(M) / Scalar(M - 1) : var;
        running_mean.mutable_value()[c] = (1 - momentum) * running_mean.value()[c] + momentum * mu;
        running_var.mutable_value()[c] = (1 - momentum) * running_var.value()[c] + momentum * unbiased;
      }
    }
  } else {
    mean = running_mean.value();
    inv_std = (running_var.value() + eps).rsqrt();
  }

  Buffer<Scalar> xhat(x.size()), y(x.size());
  for (Index n = 0; n < N; ++n)
    for (Index c = 0; c < C; ++c) {
      const Index off = (n * C + c) * HW;
      xhat.segment(off, HW) = (x.segment(off, HW) - mean[c]) * inv_std[c];
      y.segment(off, HW) = xhat.segment(off, HW) * gamma.value()[c] + beta.value()[c];
    }

  auto* xn = input.node().get();
  auto* gn = gamma.node().get();
  auto* bn = beta.node().get();
  return detail::make_result<Scalar>(
      xs, std::move(y), {input.node(), gamma.node(), beta.node()},
      [xn, gn, bn, xhat = std::move(xhat), inv_std, mode, N, C, HW, M](const Buffer<Scalar>& g) {
        Buffer<Scalar> dgamma = Buffer<Scalar>::Zero(C), dbeta = Buffer<Scalar>::Zero(C);
        for (Index n = 0; n < N; ++n)
          for (Index c = 0; c < C; ++c) {
            const Index off = (n * C + c) * HW;
            dbeta[c] += g.segment(off, HW).sum();
            dgamma[c] += (g.segment(off, HW) * xhat.segment(off, HW)).sum();
          }
        if (xn->requires_grad) {
          Buffer<Scalar> dx(g.size());
          for (Index c = 0; c < C; ++c) {
            const Scalar scale = gn->value[c] * inv_std[c];
            for (Index n = 0; n < N; ++n) {
              const Index off = (n * C + c) * HW;
              if (mode == Mode::train)
                dx.segment(off, HW) =
                    scale / Scalar(M) *
                    (Scalar(M) * g.segment(off, HW) - dbeta[c] - xhat.segment(off, HW) * dgamma[c]);
              else
                dx.segment(off, HW) = scale * g.segment(off, HW);
            }
          }
          xn->accumulate(dx);
        }
        gn->accumulate(dgamma);
        bn->accumulate(dbeta);
      });
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  return detail::unary(
      x, [](Scalar v) { return v > 0 ? v : Scalar(0); },
      [](Scalar v) { return v > 0 ? Scalar(1) : Scalar(0); });
}

/// Logistic function, evaluated without overflow and kept strictly inside
/// (0, 1) so downstream logs and 8-bit quantization stay well defined.
template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& x) {
  constexpr Scalar lo = std::numeric_limits<Scalar>::min();
  constexpr Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / 2;
  Buffer<Scalar> y = x.value().unaryExpr([lo, hi](Scalar v) {
    const Scalar s = v >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-v))
                            : std::exp(v) / (Scalar(1) + std::exp(v));
    return std::clamp(s, lo, hi);
  });
  auto* xn = x.node().get();
  Buffer<Scalar> yc = y;
  return detail::make_result<Scalar>(x.shape(), std::move(y), {x.node()},
                                     [xn, yc = std::move(yc)](const Buffer<Scalar>& g) {
                                       xn->accumulate(g * yc * (Scalar(1) - yc));
                                     });
}

/// Affine map of each flattened batch row: (N × D) · (D × M) + b.
/// weight is stored with shape (1, 1, D, M); output shape is (N, M, 1, 1).
template <typename Scalar>
Tensor<Scalar> fully_connected(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                               const Tensor<Scalar>& bias) {
  const Index N = input.batch(), D = input.size() / N;
  const Index M = weight.shape()[3];
  if (weight.shape()[2] != D || weight.shape()[0] != 1 || weight.shape()[1] != 1)
    throw DimensionError("fully_connected: input has " + std::to_string(D) +
                         " features per row, weight is " + to_string(weight.shape()));
  detail::check_bias(bias, M, "fully_connected");
  const Shape out_shape{N, M, 1, 1};
  Buffer<Scalar> y(N * M);
  MatrixMap<Scalar> Y(y.data(), N, M);
  ConstMatrixMap<Scalar> X(input.value().data(), N, D);
  ConstMatrixMap<Scalar> W(weight.value().data(), D, M);
  Y.noalias() = X * W;
  if (bias.defined()) Y.rowwise() += bias.value().matrix().transpose();

  auto* xn = input.node().get();
  auto* wn = weight.node().get();
  auto* bn = bias.defined() ? bias.node().get() : nullptr;
  return detail::make_result<Scalar>(
      out_shape, std::move(y), detail::nodes_of({input, weight, bias}),
      [xn, wn, bn, N, D, M](const Buffer<Scalar>& g) {
        ConstMatrixMap<Scalar> dY(g.data(), N, M);
        if (xn->requires_grad) {
          Buffer<Scalar> dx(N * D);
          MatrixMap<Scalar>(dx.data(), N, D).noalias() =
              dY * ConstMatrixMap<Scalar>(wn->value.data(), D, M).transpose();
          xn->accumulate(dx);
        }
        if (wn->requires_grad) {
          Buffer<Scalar> dw(D * M);
          MatrixMap<Scalar>(dw.data(), D, M).noalias() =
              ConstMatrixMap<Scalar>(xn->value.data(), N, D).transpose() * dY;
          wn->accumulate(dw);
        }
        if (bn) bn->accumulate(dY.colwise().sum().transpose().array());
      });
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic and reductions
// ---------------------------------------------------------------------------

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "add");
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return detail::make_result<Scalar>(a.shape(), a.value() + b.value(), {a.node(), b.node()},
                                     [an, bn](const Buffer<Scalar>& g) {
                                       an->accumulate(g);
                                       bn->accumulate(g);
                                     });
}

template <typename Scalar>
Tensor<Scalar> subtract(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "subtract");
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return detail::make_result<Scalar>(a.shape(), a.value() - b.value(), {a.node(), b.node()},
                                     [an, bn](const Buffer<Scalar>& g) {
                                       an->accumulate(g);
                                       bn->accumulate(-g);
                                     });
}

template <typename Scalar>
Tensor<Scalar> multiply(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "multiply");
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return detail::make_result<Scalar>(a.shape(), a.value() * b.value(), {a.node(), b.node()},
                                     [an, bn](const Buffer<Scalar>& g) {
                                       an->accumulate(g * bn->value);
                                       bn->accumulate(g * an->value);
                                     });
}

template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& x, Scalar s) {
  auto* xn = x.node().get();
  return detail::make_result<Scalar>(x.shape(), x.value() * s, {x.node()},
                                     [xn, s](const Buffer<Scalar>& g) { xn->accumulate(g * s); });
}

template <typename Scalar>
Tensor<Scalar> add_scalar(const Tensor<Scalar>& x, Scalar s) {
  auto* xn = x.node().get();
  return detail::make_result<Scalar>(x.shape(), x.value() + s, {x.node()},
                                     [xn](const Buffer<Scalar>& g) { xn->accumulate(g); });
}

/// |x| with subgradient 0 at 0.
template <typename Scalar>
Tensor<Scalar> abs(const Tensor<Scalar>& x) {
  return detail::unary(
      x, [](Scalar v) { return std::abs(v); },
      [](Scalar v) { return v > 0 ? Scalar(1) : (v < 0 ? Scalar(-1) : Scalar(0)); });
}

template <typename Scalar>
Tensor<Scalar> square(const Tensor<Scalar>& x) {
  return detail::unary(
      x, [](Scalar v) { return v * v; }, [](Scalar v) { return 2 * v; });
}

/// Natural log; inputs must be strictly positive (clamp first).
template <typename Scalar>
Tensor<Scalar> log(const Tensor<Scalar>& x) {
  if (!(x.value() > 0).all()) throw NumericError("log: non-positive input; clamp before log");
  return detail::unary(
      x, [](Scalar v) { return std::log(v); }, [](Scalar v) { return Scalar(1) / v; });
}

/// Clamp to [lo, hi]; gradient passes only where the input is inside.
template <typename Scalar>
Tensor<Scalar> clamp(const Tensor<Scalar>& x, Scalar lo, Scalar hi) {
  return detail::unary(
      x, [lo, hi](Scalar v) { return std::clamp(v, lo, hi); },
      [lo, hi](Scalar v) { return (v >= lo && v <= hi) ? Scalar(1) : Scalar(0); });
}

template <typename Scalar>
Tensor<Scalar> sum(const Tensor<Scalar>& x) {
  auto* xn = x.node().get();
  const Index n = x.size();
  return detail::make_result<Scalar>(
      {1, 1, 1, 1}, Buffer<Scalar>::Constant(1, x.value().sum()), {x.node()},
      [xn, n](const Buffer<Scalar>& g) { xn->accumulate(Buffer<Scalar>::Constant(n, g[0])); });
}

template <typename Scalar>
Tensor<Scalar> mean(const Tensor<Scalar>& x) {
  auto* xn = x.node().get();
  const Index n = x.size();
  return detail::make_result<Scalar>(
      {1, 1, 1, 1}, Buffer<Scalar>::Constant(1, x.value().mean()), {x.node()},
      [xn, n](const Buffer<Scalar>& g) {
        xn->accumulate(Buffer<Scalar>::Constant(n, g[0] / Scalar(n)));
      });
}

enum class Axis { height, width };

/// Forward difference along one spatial axis: out[.., j] = x[.., j+1] - x[.., j].
/// The differenced axis shrinks by one; requires an extent of at least 2.
template <typename Scalar>
Tensor<Scalar> spatial_diff(const Tensor<Scalar>& x, Axis axis) {
  const Shape& s = x.shape();
  const Index step = axis == Axis::width ? 1 : s[3];
  const Index extent = axis == Axis::width ? s[3] : s[2];
  if (extent < 2) throw DimensionError("spatial_diff: axis extent must be at least 2");
  Shape os = s;
  (axis == Axis::width ? os[3] : os[2]) -= 1;
  const Index planes = s[0] * s[1];
  Buffer<Scalar> y(numel(os));
  const Scalar* xv = x.value().data();
  Index k = 0;
  for (Index p = 0; p < planes; ++p)
    for (Index h = 0; h < os[2]; ++h)
      for (Index w = 0; w < os[3]; ++w, ++k) {
        const Index i = (p * s[2] + h) * s[3] + w;
        y[k] = xv[i + step] - xv[i];
      }
  auto* xn = x.node().get();
  return detail::make_result<Scalar>(os, std::move(y), {x.node()},
                                     [xn, s, os, step, planes](const Buffer<Scalar>& g) {
                                       Buffer<Scalar> dx = Buffer<Scalar>::Zero(numel(s));
                                       Index k = 0;
                                       for (Index p = 0; p < planes; ++p)
                                         for (Index h = 0; h < os[2]; ++h)
                                           for (Index w = 0; w < os[3]; ++w, ++k) {
                                             const Index i = (p * s[2] + h) * s[3] + w;
                                             dx[i + step] += g[k];
                                             dx[i] -= g[k];
                                           }
                                       xn->accumulate(dx);
                                     });
}

/// Same values under new extents with an equal element count.
template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& x, const Shape& shape) {
  if (numel(shape) != x.size())
    throw DimensionError("reshape: " + to_string(x.shape()) + " cannot become " + to_string(shape));
  auto* xn = x.node().get();
  return detail::make_result<Scalar>(shape, x.value(), {x.node()},
                                     [xn](const Buffer<Scalar>& g) { xn->accumulate(g); });
}

/// Stacks a over b along the batch axis; trailing extents must agree.
template <typename Scalar>
Tensor<Scalar> concat_batch(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as[1] != bs[1] || as[2] != bs[2] || as[3] != bs[3])
    throw DimensionError("concat_batch: " + to_string(as) + " and " + to_string(bs) + " differ past the batch axis");
  Buffer<Scalar> y(a.size() + b.size());
  y.head(a.size()) = a.value();
  y.tail(b.size()) = b.value();
  auto* an = a.node().get();
  auto* bn = b.node().get();
  const Index na = a.size(), nb = b.size();
  return detail::make_result<Scalar>({as[0] + bs[0], as[1], as[2], as[3]}, std::move(y), {a.node(), b.node()},
                                     [an, bn, na, nb](const Buffer<Scalar>& g) {
                                       an->accumulate(g.head(na));
                                       bn->accumulate(g.tail(nb));
                                     });
}

/// Batch items [begin, begin + count).
template <typename Scalar>
Tensor<Scalar> slice_batch(const Tensor<Scalar>& x, Index begin, Index count) {
  const Shape& xs = x.shape();
  if (begin < 0 || count < 1 || begin + count > xs[0])
    throw DimensionError("slice_batch: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside batch of " + std::to_string(xs[0]));
  const Index item = xs[1] * xs[2] * xs[3];
  auto* xn = x.node().get();
  const Index total = x.size();
  return detail::make_result<Scalar>({count, xs[1], xs[2], xs[3]}, x.value().segment(begin * item, count * item),
                                     {x.node()}, [xn, begin, item, total](const Buffer<Scalar>& g) {
                                       Buffer<Scalar> dx = Buffer<Scalar>::Zero(total);
                                       dx.segment(begin * item, g.size()) = g;
                                       xn->accumulate(dx);
                                     });
}

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return add(a, b);
}
template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return subtract(a, b);
}
template <typename Scalar>
Tensor<Scalar> operator*(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return multiply(a, b);
}
template <typename Scalar>
Tensor<Scalar> operator*(Scalar s, const Tensor<Scalar>& x) {
  return scale(x, s);
}

}  // namespace fforge
