#pragma once

#include <nlohmann/json_fwd.hpp>

#include "dca/config.hpp"
#include "dca/data.hpp"

namespace dca {

// lr = base_lr * (1 - iter/max_iter)^power; past max_iter the rate clamps
// to zero and *warned is set.
double poly_lr(long iteration, const TrainConfig& cfg, bool* warned = nullptr);

// Plain SGD with momentum and weight decay:
//   v <- momentum * v + (grad + weight_decay * param);  param <- param - lr * v
template <typename T>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(StateDict<T>& sd, double momentum, double weight_decay)
      : sd_(&sd), momentum_(momentum), weight_decay_(weight_decay) {
    for (auto& [name, p] : sd.params) velocity_.emplace_back(p->value.shape);
  }

  void zero_grad() {
    for (auto& [name, p] : sd_->params)
      if (!p->grad.empty()) p->grad.fill(T(0));
  }

  void step(double lr) {
    for (std::size_t i = 0; i < sd_->params.size(); ++i) {
      auto& p = sd_->params[i].second;
      if (p->grad.empty()) continue;
      auto& v = velocity_[i];
      for (std::size_t e = 0; e < v.size(); ++e) {
        v.v[e] = static_cast<T>(momentum_ * v.v[e] + (p->grad.v[e] + weight_decay_ * p->value.v[e]));
        p->value.v[e] -= static_cast<T>(lr) * v.v[e];
      }
    }
  }

 private:
  StateDict<T>* sd_;
  double momentum_, weight_decay_;
  std::vector<Tensor<T>> velocity_;
};

// Raised when the loss goes non-finite; carries the failing iteration and
// the last checkpoint that was written (empty if none).
class TrainAbortError : public std::runtime_error {
 public:
  TrainAbortError(long iter, std::string last_checkpoint)
      : std::runtime_error("training aborted at iteration " + std::to_string(iter) + ": non-finite loss" +
                           (last_checkpoint.empty() ? "" : "; last good checkpoint: " + last_checkpoint)),
        iteration(iter),
        last_checkpoint(std::move(last_checkpoint)) {}
  long iteration;
  std::string last_checkpoint;
};

struct LogRecord {
  long iter;
  double lr, loss_total, loss_main, loss_aux, loss_sem;
};

struct TrainResult {
  std::vector<LogRecord> log;
  std::string final_checkpoint;  // empty when out_dir was empty
  long iterations = 0;
};

// Runs cfg.train.max_iter SGD iterations. When out_dir is nonempty, writes
// checkpoints at the configured cadence plus ckpt_final.bin, a JSON-lines
// metric log, and an echo of the resolved config.
TrainResult train_model(SegModel<float>& model, const Dataset& train_ds, const ExperimentConfig& cfg,
                        const std::string& out_dir);

std::string log_record_jsonl(const LogRecord& r);

}  // namespace dca
