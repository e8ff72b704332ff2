#include "ncc/trainer.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "ncc/error.hpp"

namespace ncc {

using nlohmann::json;

namespace {

template <class T>
void read_opt(const json& obj, const char* key, T& out) {
  if (!obj.is_object()) return;
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) {
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::BadConfig, std::string("config key '") + key + "' has the wrong type");
    }
  }
}

bool all_finite(const Gradients& g) {
  for (const auto& t : g) {
    if (!t.all_finite()) return false;
  }
  return true;
}

}  // namespace

TrainConfig TrainConfig::from_json(const json& doc) {
  TrainConfig c;
  const json opt = doc.value("optimization", json::object());
  auto& o = c.optimization;
  read_opt(opt, "lr", o.lr);
  read_opt(opt, "min_lr", o.min_lr);
  read_opt(opt, "lr_shrink", o.lr_shrink);
  read_opt(opt, "max_epoch", o.max_epoch);
  read_opt(opt, "max_update", o.max_update);
  read_opt(opt, "update_freq", o.update_freq);
  read_opt(opt, "clip_norm", o.clip_norm);
  read_opt(opt, "seed", o.seed);
  read_opt(opt, "workers", o.workers);
  read_opt(opt, "optimizer", o.optimizer);
  const json data = doc.value("data", json::object());
  read_opt(data, "batch_size", c.batch_size);
  read_opt(data, "bptt_len", c.bptt_len);
  read_opt(data, "shuffle", c.shuffle);
  read_opt(doc, "trainer", c.trainer);

  if (!(o.lr > o.min_lr)) throw Error(ErrorCode::BadConfig, "optimization.lr must exceed optimization.min_lr");
  if (o.update_freq < 1) throw Error(ErrorCode::BadConfig, "optimization.update_freq must be >= 1");
  if (o.workers < 1) throw Error(ErrorCode::BadConfig, "optimization.workers must be >= 1");
  if (c.batch_size < 1) throw Error(ErrorCode::BadConfig, "data.batch_size must be >= 1");
  if (o.optimizer != "adam" && o.optimizer != "sgd") {
    throw Error(ErrorCode::BadConfig, "optimization.optimizer must be 'adam' or 'sgd'");
  }
  if (c.trainer != "default" && c.trainer != "simple") {
    throw Error(ErrorCode::BadConfig, "trainer must be 'default' or 'simple'");
  }
  return c;
}

bool should_continue(const TrainState& state, const TrainConfig& config) {
  const auto& o = config.optimization;
  return state.lr > o.min_lr && state.epoch + 1 <= o.max_epoch && state.num_updates < o.max_update;
}

std::vector<std::vector<std::size_t>> Objective::split(std::span<const std::size_t> batch) const {
  std::vector<std::vector<std::size_t>> units;
  units.reserve(batch.size());
  for (auto i : batch) units.push_back({i});
  return units;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(Objective& objective, TrainConfig config) : objective_(objective), config_(std::move(config)) {
  if (config_.trainer == "simple") {
    config_.optimization.update_freq = 1;
    config_.optimization.workers = 1;
  }
  state_.lr = config_.optimization.lr;
  state_.rng_state = Rng(config_.optimization.seed).serialize();
  adam_ = make_adam_state(objective_.parameters());
  total_ = objective_.parameters().zero_gradients();
  worker_grads_.assign(static_cast<std::size_t>(config_.optimization.workers), total_);
}

void Trainer::resume(const Checkpoint& ckpt) {
  auto& params = objective_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params[i].name;
    const Tensor* value = ckpt.find(name);
    if (!value) throw Error(ErrorCode::DataMissing, "checkpoint lacks parameter '" + name + "'");
    if (value->shape() != params[i].value.shape()) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint shape mismatch for '" + name + "'");
    }
    params[i].value = *value;
    const Tensor* m = ckpt.find("optim.m." + name);
    const Tensor* v = ckpt.find("optim.v." + name);
    if (m && v) {
      adam_.m[i] = *m;
      adam_.v[i] = *v;
    }
  }
  state_ = ckpt.state;
  adam_.t = state_.optimizer_steps;
}

NamedTensors Trainer::checkpoint_tensors() const {
  NamedTensors out;
  const auto& params = objective_.parameters();
  for (const auto& p : params) out.emplace_back(p.name, p.value);
  for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back("optim.m." + params[i].name, adam_.m[i]);
  for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back("optim.v." + params[i].name, adam_.v[i]);
  return out;
}

void Trainer::write_checkpoint() {
  if (!target_) return;
  save_checkpoint(target_->path,
                  Checkpoint{target_->model_name, checkpoint_tensors(), state_, target_->config_digest, false});
}

std::vector<std::vector<std::vector<std::size_t>>> Trainer::make_windows() const {
  const std::size_t n = objective_.num_examples();
  const std::size_t bs = config_.batch_size;
  const auto freq = static_cast<std::size_t>(config_.optimization.update_freq);
  std::vector<std::vector<std::vector<std::size_t>>> windows;
  for (std::size_t start = 0; start < n; start += bs * freq) {
    std::vector<std::vector<std::size_t>> window;
    for (std::size_t b = start; b < std::min(n, start + bs * freq); b += bs) {
      std::vector<std::size_t> batch;
      for (std::size_t i = b; i < std::min(n, b + bs); ++i) batch.push_back(i);
      window.push_back(std::move(batch));
    }
    windows.push_back(std::move(window));
  }
  return windows;
}

WorkResult Trainer::run_window(const std::vector<std::vector<std::size_t>>& window) {
  std::vector<std::vector<std::size_t>> units;
  for (const auto& batch : window) {
    for (auto& u : objective_.split(batch)) units.push_back(std::move(u));
  }
  zero(total_);
  WorkResult total;
  const std::size_t workers = worker_grads_.size();
  std::vector<WorkResult> results(workers);
  for (std::size_t wave = 0; wave < units.size(); wave += workers) {
    const std::size_t n = std::min(workers, units.size() - wave);
    auto work = [&](std::size_t w) {
      zero(worker_grads_[w]);
      results[w] = objective_.compute(units[wave + w], &worker_grads_[w]);
    };
    std::vector<std::jthread> threads;
    for (std::size_t w = 1; w < n; ++w) threads.emplace_back(work, w);
    work(0);
    threads.clear();
    for (std::size_t w = 0; w < n; ++w) {
      accumulate(total_, worker_grads_[w]);
      total.loss_sum += results[w].loss_sum;
      total.weight += results[w].weight;
    }
  }
  return total;
}

void Trainer::apply_update(const WorkResult& result) {
  if (!std::isfinite(result.loss_sum) || !all_finite(total_)) {
    write_checkpoint();
    throw Error(ErrorCode::NonFiniteLoss, "non-finite loss or gradient at update " +
                                              std::to_string(state_.num_updates + 1) +
                                              "; kept last good parameters in the checkpoint");
  }
  for (auto& g : total_) {
    for (auto& v : g.data()) v /= result.weight;
  }
  auto& params = objective_.parameters();
  params.set_grads(total_);
  clip_grad_norm(params, config_.optimization.clip_norm);
  if (config_.optimization.optimizer == "sgd") {
    sgd_update(params, state_.lr);
    ++adam_.t;
  } else {
    adam_update(params, adam_, state_.lr);
  }
  ++state_.num_updates;
  state_.optimizer_steps = adam_.t;
}

void Trainer::end_epoch(TrainReport& report, double loss_sum, double weight) {
  report.epoch_losses.push_back(weight > 0.0 ? loss_sum / weight : 0.0);
  if (auto valid = objective_.validation(); valid && valid->weight > 0.0) {
    const double v = valid->loss_sum / valid->weight;
    report.valid_losses.push_back(v);
    if (v < state_.best_valid_loss) state_.best_valid_loss = v;
  }
  ++state_.epoch;
  state_.windows_done = 0;
  state_.lr *= config_.optimization.lr_shrink;
  write_checkpoint();
}

TrainReport Trainer::train() {
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  bool hit_max_update = false;

  while (should_continue(state_, config_)) {
    Rng rng;
    rng.deserialize(state_.rng_state);
    const auto windows = make_windows();
    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (config_.shuffle) rng.shuffle(order);

    double epoch_loss = 0.0;
    double epoch_weight = 0.0;
    for (auto w = static_cast<std::size_t>(state_.windows_done); w < order.size(); ++w) {
      if (state_.num_updates >= config_.optimization.max_update) {
        hit_max_update = true;
        break;
      }
      const WorkResult r = run_window(windows[order[w]]);
      ++state_.windows_done;
      if (r.weight <= 0.0) continue;
      apply_update(r);
      report.update_losses.push_back(r.loss_sum / r.weight);
      epoch_loss += r.loss_sum;
      epoch_weight += r.weight;
    }
    if (hit_max_update) break;
    state_.rng_state = rng.serialize();
    end_epoch(report, epoch_loss, epoch_weight);
  }

  const auto& o = config_.optimization;
  if (state_.num_updates >= o.max_update) {
    report.stop_reason = "max_update";
  } else if (!(state_.lr > o.min_lr)) {
    report.stop_reason = "min_lr";
  } else {
    report.stop_reason = "max_epoch";
  }
  write_checkpoint();
  report.num_updates = state_.num_updates;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (target_) report.checkpoint_path = target_->path;
  return report;
}

}  // namespace ncc
