#pragma once

#include <string>

#include "fforge/ops.hpp"

namespace fforge {

/// Weights of the content loss: alpha scales the TV term, beta balances the
/// infrared and visible reconstruction terms.
struct LossWeights {
  double alpha = 1.0;
  double beta = 0.5;

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("loss weights: alpha must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("loss weights: beta must lie in [0, 1]");
  }
};

enum class AdversarialForm {
  literal,         // minimize E[log(1 - D(F))]
  non_saturating,  // minimize -E[log D(F)]
};

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

/// Scalar loss values of one generator/discriminator step.
struct LossReport {
  double content = 0, mse_ir = 0, mse_vis = 0, tv = 0, gen_adv = 0, disc = 0, generator_total = 0;
};

template <typename Scalar>
Tensor<Scalar> mse(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return mean(square(subtract(a, b)));
}

/// Anisotropic total variation: sum of absolute horizontal and vertical
/// forward differences, divided by the number of pixels in the batch.
template <typename Scalar>
Tensor<Scalar> tv_norm(const Tensor<Scalar>& d) {
  const Scalar pixels = Scalar(d.size());
  Tensor<Scalar> total = Tensor<Scalar>::scalar(0);
  if (d.width() > 1) total = add(total, sum(abs(spatial_diff(d, Axis::width))));
  if (d.height() > 1) total = add(total, sum(abs(spatial_diff(d, Axis::height))));
  return scale(total, Scalar(1) / pixels);
}

template <typename Scalar>
struct ContentTerms {
  Tensor<Scalar> content, mse_ir, mse_vis, tv;
};

/// beta·E[(F - I)²] + (1 - beta)·E[(F - V)²] + alpha·‖F - V‖_TV
template <typename Scalar>
ContentTerms<Scalar> content_loss(const Tensor<Scalar>& f, const Tensor<Scalar>& v,
                                  const Tensor<Scalar>& i, const LossWeights& w) {
  w.validate();
  if (f.shape() != v.shape() || f.shape() != i.shape())
    throw DimensionError("content_loss: F, V and I must share a shape");
  ContentTerms<Scalar> t;
  t.mse_ir = mse(f, i);
  t.mse_vis = mse(f, v);
  t.tv = tv_norm(subtract(f, v));
  t.content = add(add(scale(t.mse_ir, Scalar(w.beta)), scale(t.mse_vis, Scalar(1 - w.beta))),
                  scale(t.tv, Scalar(w.alpha)));
  return t;
}

namespace detail {
template <typename Scalar>
Tensor<Scalar> clamped_log(const Tensor<Scalar>& p) {
  const Scalar lo = Scalar(kProbClamp), hi = Scalar(1) - Scalar(kProbClamp);
  return log(clamp(p, lo, hi));
}
}  // namespace detail

/// -E[log(1 - D(F))] - E[log D(V)]
template <typename Scalar>
Tensor<Scalar> disc_loss(const Tensor<Scalar>& d_fused, const Tensor<Scalar>& d_visible) {
  const Tensor<Scalar> fake = mean(detail::clamped_log(add_scalar(scale(d_fused, Scalar(-1)), Scalar(1))));
  const Tensor<Scalar> real = mean(detail::clamped_log(d_visible));
  return scale(add(fake, real), Scalar(-1));
}

/// E[log(1 - D(F))], or -E[log D(F)] for the non-saturating variant.
template <typename Scalar>
Tensor<Scalar> gen_adv_loss(const Tensor<Scalar>& d_fused,
                            AdversarialForm form = AdversarialForm::literal) {
  if (form == AdversarialForm::non_saturating)
    return scale(mean(detail::clamped_log(d_fused)), Scalar(-1));
  return mean(detail::clamped_log(add_scalar(scale(d_fused, Scalar(-1)), Scalar(1))));
}

template <typename Scalar>
Tensor<Scalar> generator_total(const Tensor<Scalar>& content, const Tensor<Scalar>& gen_adv) {
  return add(content, gen_adv);
}

}  // namespace fforge
