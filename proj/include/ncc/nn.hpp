#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ncc/tensor.hpp"

namespace ncc {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Deterministic random numbers. std::mt19937_64 output is fixed by the
// standard; the distributions below are implemented here because the
// standard library ones are not reproducible across implementations.

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// Fills every tensor with uniform(-scale, scale) in parameter order, except
/// parameters whose name ends in "b_h"/"b_y" (biases), which are zeroed.
void init_uniform(ParameterSet& params, Rng& rng, double scale = 0.08);

// ---------------------------------------------------------------------------
// Layers. Matrices are stored input-major: an affine map from n to m units
// uses W of shape n x m and computes y = W^T x + b.

/// y = W^T x + b (b may be null).
void affine_forward(const Tensor& w, const Tensor* b, std::span<const double> x, std::span<double> y);

/// Accumulates dW += x dy^T, db += dy, and (if dx non-empty) dx += W dy.
void affine_backward(const Tensor& w, std::span<const double> x, std::span<const double> dy, Tensor& dw,
                     Tensor* db, std::span<double> dx);

/// Row `id` of the embedding table.
std::span<const double> embedding_lookup(const Tensor& table, int id);
void embedding_backward(Tensor& dtable, int id, std::span<const double> dy);

/// Elman cell weights.
struct RnnCellRef {
  const Tensor& w_xh;  // d x h
  const Tensor& w_hh;  // h x h
  const Tensor& b_h;   // h
};

struct RnnCellGrad {
  Tensor& w_xh;
  Tensor& w_hh;
  Tensor& b_h;
};

/// h_t = tanh(W_xh^T x_t + W_hh^T h_prev + b_h). Throws ShapeMismatch.
void rnn_step(std::span<const double> x, std::span<const double> h_prev, const RnnCellRef& cell,
              std::span<double> h_out);
Vec rnn_step(std::span<const double> x, std::span<const double> h_prev, const RnnCellRef& cell);

/// Backward of rnn_step given dL/dh_t. Accumulates weight grads; writes
/// (adds) dL/dx into dx when non-empty and dL/dh_prev into dh_prev.
void rnn_step_backward(std::span<const double> x, std::span<const double> h_prev, std::span<const double> h,
                       std::span<const double> dh, const RnnCellRef& cell, RnnCellGrad grads, std::span<double> dx,
                       std::span<double> dh_prev);

/// Max-subtracted softmax.
Vec softmax(std::span<const double> logits);
Vec log_softmax(std::span<const double> logits);

struct XentResult {
  double loss = 0.0;
  Vec grad;  // softmax(logits) - onehot(target)
};

/// -log softmax(logits)[target]. Throws TargetOutOfRange.
XentResult softmax_xent(std::span<const double> logits, int target);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

// ---------------------------------------------------------------------------
// Optimizers

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Gradients m;
  Gradients v;
  std::int64_t t = 0;
  AdamHyper hyper;
};

AdamState make_adam_state(const ParameterSet& params, AdamHyper hyper = {});

/// Bias-corrected Adam step on every parameter using Parameter::grad, then
/// zeroes the grads. Increments t exactly once.
void adam_update(ParameterSet& params, AdamState& state, double lr);

/// Plain SGD step, then zeroes the grads.
void sgd_update(ParameterSet& params, double lr);

/// Global L2 norm of Parameter::grad (before clipping). When it exceeds
/// max_norm every grad is scaled by max_norm / norm.
double clip_grad_norm(ParameterSet& params, double max_norm);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking

/// Returns the loss at the current parameter values; when `grads` is non-null
/// it must be overwritten with the analytic gradient.
using LossFn = std::function<double(const ParameterSet&, Gradients*)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates examined when the model is larger than this; a seeded random
  /// subset is used instead of all of them (never fewer than 200).
  std::size_t max_coords = 4000;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

/// rel err = |a - n| / max(1e-12, |a| + |n|) with n the central difference.
double relative_error(double analytic, double numeric);

GradCheckResult grad_check(ParameterSet& params, const LossFn& loss_fn, const GradCheckOptions& options = {});

}  // namespace ncc
