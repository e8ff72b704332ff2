#include "ncc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ncc/error.hpp"

namespace ncc {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::deserialize(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  if (!in) throw Error(ErrorCode::CorruptDirectory, "invalid RNG state");
}

namespace {

bool is_bias(const std::string& name) {
  return name.ends_with("b_h") || name.ends_with("b_y");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

}  // namespace

void init_uniform(ParameterSet& params, Rng& rng, double scale) {
  for (auto& p : params) {
    if (is_bias(p.name)) {
      p.value.fill(0.0);
      continue;
    }
    for (auto& x : p.value.data()) x = rng.uniform(-scale, scale);
  }
}

// ---------------------------------------------------------------------------

void affine_forward(const Tensor& w, const Tensor* b, std::span<const double> x, std::span<double> y) {
  const std::size_t in = w.dim(0);
  const std::size_t out = w.dim(1);
  require(x.size() == in && y.size() == out, "affine: input/output sizes do not match weight shape");
  if (b) {
    std::copy(b->data().begin(), b->data().end(), y.begin());
  } else {
    std::fill(y.begin(), y.end(), 0.0);
  }
  const double* wd = w.data().data();
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = wd + i * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += xi * row[j];
  }
}

void affine_backward(const Tensor& w, std::span<const double> x, std::span<const double> dy, Tensor& dw, Tensor* db,
                     std::span<double> dx) {
  const std::size_t in = w.dim(0);
  const std::size_t out = w.dim(1);
  const double* wd = w.data().data();
  double* dwd = dw.data().data();
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = x[i];
    double* drow = dwd + i * out;
    for (std::size_t j = 0; j < out; ++j) drow[j] += xi * dy[j];
    if (!dx.empty()) {
      const double* row = wd + i * out;
      double acc = 0.0;
      for (std::size_t j = 0; j < out; ++j) acc += row[j] * dy[j];
      dx[i] += acc;
    }
  }
  if (db) {
    auto bd = db->data();
    for (std::size_t j = 0; j < out; ++j) bd[j] += dy[j];
  }
}

std::span<const double> embedding_lookup(const Tensor& table, int id) {
  if (id < 0 || static_cast<std::size_t>(id) >= table.dim(0)) {
    throw Error(ErrorCode::TargetOutOfRange, "embedding id " + std::to_string(id) + " out of range");
  }
  return table.row(static_cast<std::size_t>(id));
}

void embedding_backward(Tensor& dtable, int id, std::span<const double> dy) {
  auto row = dtable.row(static_cast<std::size_t>(id));
  for (std::size_t j = 0; j < row.size(); ++j) row[j] += dy[j];
}

void rnn_step(std::span<const double> x, std::span<const double> h_prev, const RnnCellRef& cell,
              std::span<double> h_out) {
  const std::size_t h = cell.w_hh.dim(0);
  require(cell.w_xh.rank() == 2 && cell.w_hh.rank() == 2 && cell.w_hh.dim(1) == h && cell.w_xh.dim(1) == h &&
              cell.b_h.size() == h,
          "rnn_step: inconsistent cell shapes");
  require(x.size() == cell.w_xh.dim(0), "rnn_step: input width " + std::to_string(x.size()) + " != " +
                                            std::to_string(cell.w_xh.dim(0)));
  require(h_prev.size() == h && h_out.size() == h, "rnn_step: hidden width mismatch");
  affine_forward(cell.w_xh, &cell.b_h, x, h_out);
  const double* whh = cell.w_hh.data().data();
  for (std::size_t i = 0; i < h; ++i) {
    const double hi = h_prev[i];
    if (hi == 0.0) continue;
    const double* row = whh + i * h;
    for (std::size_t j = 0; j < h; ++j) h_out[j] += hi * row[j];
  }
  for (auto& v : h_out) v = std::tanh(v);
}

Vec rnn_step(std::span<const double> x, std::span<const double> h_prev, const RnnCellRef& cell) {
  Vec out(cell.b_h.size());
  rnn_step(x, h_prev, cell, out);
  return out;
}

void rnn_step_backward(std::span<const double> x, std::span<const double> h_prev, std::span<const double> h,
                       std::span<const double> dh, const RnnCellRef& cell, RnnCellGrad grads, std::span<double> dx,
                       std::span<double> dh_prev) {
  Vec da(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) da[j] = dh[j] * (1.0 - h[j] * h[j]);
  affine_backward(cell.w_xh, x, da, grads.w_xh, &grads.b_h, dx);
  affine_backward(cell.w_hh, h_prev, da, grads.w_hh, nullptr, dh_prev);
}

Vec softmax(std::span<const double> logits) {
  Vec p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

Vec log_softmax(std::span<const double> logits) {
  Vec out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double v : out) sum += std::exp(v - mx);
  const double log_z = mx + std::log(sum);
  for (auto& v : out) v -= log_z;
  return out;
}

XentResult softmax_xent(std::span<const double> logits, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw Error(ErrorCode::TargetOutOfRange,
                "target " + std::to_string(target) + " outside [0, " + std::to_string(logits.size()) + ")");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  XentResult r;
  r.grad.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    r.grad[i] = std::exp(logits[i] - mx);
    sum += r.grad[i];
  }
  r.loss = -(logits[static_cast<std::size_t>(target)] - mx - std::log(sum));
  for (auto& g : r.grad) g /= sum;
  r.grad[static_cast<std::size_t>(target)] -= 1.0;
  return r;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------

AdamState make_adam_state(const ParameterSet& params, AdamHyper hyper) {
  AdamState s;
  s.m = params.zero_gradients();
  s.v = params.zero_gradients();
  s.hyper = hyper;
  return s;
}

void adam_update(ParameterSet& params, AdamState& state, double lr) {
  if (state.m.size() != params.size()) {
    state = make_adam_state(params, state.hyper);
  }
  ++state.t;
  const auto& hp = state.hyper;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto g = params[i].grad.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = hp.beta1 * m[j] + (1.0 - hp.beta1) * g[j];
      v[j] = hp.beta2 * v[j] + (1.0 - hp.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + hp.eps);
    }
  }
  params.zero_grad();
}

void sgd_update(ParameterSet& params, double lr) {
  for (auto& p : params) {
    auto w = p.value.data();
    auto g = p.grad.data();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
  }
  params.zero_grad();
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& p : params) {
      for (auto& g : p.grad.data()) g *= scale;
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-12, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult grad_check(ParameterSet& params, const LossFn& loss_fn, const GradCheckOptions& options) {
  Gradients analytic = params.zero_gradients();
  loss_fn(params, &analytic);

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t j = 0; j < params[p].value.size(); ++j) coords.emplace_back(p, j);
  }
  const std::size_t budget = std::max<std::size_t>(options.max_coords, 200);
  if (coords.size() > budget) {
    Rng rng(options.seed);
    rng.shuffle(coords);
    coords.resize(budget);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckResult result;
  for (const auto& [p, j] : coords) {
    double& theta = params[p].value[j];
    const double saved = theta;
    theta = saved + options.step;
    const double f_plus = loss_fn(params, nullptr);
    theta = saved - options.step;
    const double f_minus = loss_fn(params, nullptr);
    theta = saved;
    const double numeric = (f_plus - f_minus) / (2.0 * options.step);
    const double err = relative_error(analytic[p][j], numeric);
    ++result.coords_checked;
    if (err > result.max_rel_err) {
      result.max_rel_err = err;
      result.worst_param = params[p].name;
      result.worst_index = j;
    }
  }
  return result;
}

}  // namespace ncc
