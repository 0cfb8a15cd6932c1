// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "subband/checkpoint.hpp"
#include "subband/config.hpp"
#include "subband/dataset.hpp"
#include "subband/error.hpp"
#include "subband/model.hpp"
#include "subband/optimizer.hpp"
#include "subband/quantize.hpp"

namespace subband {

struct EvalResult {
  std::int64_t samples = 0;
  std::int64_t top1 = 0;
  std::int64_t top5 = 0;

  double top1_pct() const { return 100.0 * static_cast<double>(top1) / static_cast<double>(samples); }
  double top5_pct() const { return 100.0 * static_cast<double>(top5) / static_cast<double>(samples); }
};

/// Top-1/top-5 accuracy over a normalized dataset, sequential batches.
template <typename T = float>
EvalResult evaluate(Model<T>& model, const Dataset& ds, int batch_size = 250) {
  if (model.config().classes != ds.classes)
    throw ConfigError("model expects " + std::to_string(model.config().classes) +
                      " classes but dataset " + ds.name + " has " + std::to_string(ds.classes));
  EvalResult r;
  const Shape4 s = ds.images.shape();
  const std::int64_t sample_len = s.h * s.w * s.c;
  for (std::int64_t at = 0; at < s.n; at += batch_size) {
    const std::int64_t take = std::min<std::int64_t>(batch_size, s.n - at);
    Tensor4<T> x({take, s.h, s.w, s.c});
    for (std::int64_t i = 0; i < take * sample_len; ++i)
      x.data()[i] = static_cast<T>(ds.images.data()[at * sample_len + i]);
    std::vector<int> labels(ds.labels.begin() + at, ds.labels.begin() + at + take);
    const Tensor4<T> logits = model.forward(x, Mode::Eval);
    r.top1 += count_top1(logits, labels, &r.top5);
    r.samples += take;
  }
  return r;
}

/// Accuracy under the requested quantizations: inputs quantized in the raw
/// [0,1] pixel domain before normalization, weights mapped through the
/// target float format. Either part is optional.
template <typename T = float>
EvalResult quant_evaluate(const Model<T>& model, const Dataset& raw_test, const NormStats& stats,
                          std::optional<int> input_bits, WeightFormat format,
                          int batch_size = 250) {
  if (raw_test.normalized)
    throw StateError("quantized evaluation needs the raw [0,1] test split");
  Model<T> q = quantize_params(model, format);
  if (q.config().classes != raw_test.classes)
    throw ConfigError("model/dataset class count mismatch");
  EvalResult r;
  const Shape4 s = raw_test.images.shape();
  const std::int64_t sample_len = s.h * s.w * s.c;
  for (std::int64_t at = 0; at < s.n; at += batch_size) {
    const std::int64_t take = std::min<std::int64_t>(batch_size, s.n - at);
    Tensor4<float> x({take, s.h, s.w, s.c});
    std::memcpy(x.data(), raw_test.images.data() + at * sample_len,
                static_cast<std::size_t>(take * sample_len) * sizeof(float));
    if (input_bits) x = quantize_input(x, *input_bits);
    Tensor4<T> xn({take, s.h, s.w, s.c});
    for (std::int64_t i = 0; i < x.size(); ++i) {
      const auto c = static_cast<std::size_t>(i % s.c);
      xn.data()[i] = static_cast<T>((x.data()[i] - stats.mean[c]) / stats.stddev[c]);
    }
    std::vector<int> labels(raw_test.labels.begin() + at, raw_test.labels.begin() + at + take);
    const Tensor4<T> logits = q.forward(xn, Mode::Eval);
    r.top1 += count_top1(logits, labels, &r.top5);
    r.samples += take;
  }
  return r;
}

struct EpochRow {
  int epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double test_top1 = 0;
  double test_top5 = 0;
};

struct TrainOptions {
  std::uint64_t seed = 1;
  int epochs = 0;          // 0: use the config's value
  std::int64_t limit_train = 0;  // 0: full split
  std::int64_t limit_test = 0;
  bool log_top5 = false;   // set for 100-class runs
  bool quiet = false;
};

struct TrainOutcome {
  std::vector<EpochRow> rows;
  double best_top1 = 0;
  int best_epoch = -1;
  double wall_seconds = 0;
  std::string metrics_csv;  // full log text, header included
};

namespace detail {
inline Dataset limited(const Dataset& ds, std::int64_t limit) {
  if (limit <= 0 || limit >= ds.images.shape().n) return ds;
  const Shape4 s = ds.images.shape();
  Dataset out{ds.name, ds.split, ds.classes, Tensor4<float>({limit, s.h, s.w, s.c}),
              std::vector<int>(ds.labels.begin(), ds.labels.begin() + limit), ds.normalized};
  std::memcpy(out.images.data(), ds.images.data(),
              static_cast<std::size_t>(out.images.size()) * sizeof(float));
  return out;
}

inline std::string format_row(const EpochRow& r, bool top5) {
  std::ostringstream s;
  s << r.epoch << "," << std::setprecision(10) << r.lr << "," << std::fixed
    << std::setprecision(6) << r.train_loss << "," << std::setprecision(4) << r.test_top1;
  if (top5) s << "," << std::setprecision(4) << r.test_top5;
  return s.str();
}
}  // namespace detail

/// Full training run per the configured recipe. Writes, when `out_dir` is
/// non-empty: metrics.csv (one row per epoch), best.ckpt, last.ckpt. The
/// same seed and thread count reproduce byte-identical outputs.
template <typename T = float>
TrainOutcome train_model(Model<T>& model, const DatasetPair& raw, const TrainOptions& opt,
                         const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const ArchitectureConfig& cfg = model.config();
  const int epochs = opt.epochs > 0 ? opt.epochs : cfg.epochs;

  Dataset train = detail::limited(raw.train, opt.limit_train);
  Dataset test = detail::limited(raw.test, opt.limit_test);
  if (train.normalized || test.normalized)
    throw StateError("train_model expects raw datasets and normalizes internally");
  const NormStats stats = compute_stats(train);
  normalize(train, stats);
  normalize(test, stats);

  SgdOptimizer<T> optimizer(cfg.momentum, cfg.decay);
  auto params = model.param_tensors();
  optimizer.attach(params);
  model.reset_dropout(opt.seed);
  LrSchedule schedule{cfg.lr, cfg.lr_steps};

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  std::ofstream metrics;
  std::ostringstream metrics_text;
  const std::string header =
      opt.log_top5 ? "epoch,lr,train_loss,test_top1,test_top5" : "epoch,lr,train_loss,test_top1";
  if (!out_dir.empty()) {
    metrics.open(out_dir + "/metrics.csv");
    if (!metrics) throw IoError("cannot write " + out_dir + "/metrics.csv");
    metrics << header << "\n";
  }
  metrics_text << header << "\n";

  TrainOutcome outcome;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double lr = schedule.at(epoch);
    BatchStream stream(train, {cfg.batch_size, opt.seed, epoch});
    Tensor4<float> xb;
    std::vector<int> labels;
    double loss_sum = 0;
    std::int64_t batch_count = 0;
    while (stream.next(xb, labels)) {
      Tensor4<T> x = [&] {
        if constexpr (std::is_same_v<T, float>) return std::move(xb);
        else return xb.template cast<T>();
      }();
      Tape<T> tape;
      model.forward(x, Mode::Train, &tape);
      const SoftmaxResult<T> sm = softmax_xent(tape.logits, labels);
      if (!std::isfinite(sm.loss))
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_count) + "; first bad layer: " +
                              Model<T>::first_nonfinite(tape));
      loss_sum += sm.loss;
      ++batch_count;
      const Tensor4<T> dlogits = softmax_xent_backward(sm, labels);
      const std::vector<Tensor4<T>> grads = model.backward(tape, dlogits);
      optimizer.step(params, grads, lr);
    }

    const EvalResult ev = evaluate(model, test);
    EpochRow row{epoch, lr, loss_sum / static_cast<double>(batch_count), ev.top1_pct(),
                 ev.top5_pct()};
    outcome.rows.push_back(row);
    const std::string line = detail::format_row(row, opt.log_top5);
    metrics_text << line << "\n";
    if (!out_dir.empty()) {
      metrics << line << "\n";
      metrics.flush();
      save_checkpoint(out_dir + "/last.ckpt", model, &optimizer, epoch);
      if (row.test_top1 > outcome.best_top1 || outcome.best_epoch < 0) {
        save_checkpoint(out_dir + "/best.ckpt", model, &optimizer, epoch);
      }
    }
    if (row.test_top1 > outcome.best_top1 || outcome.best_epoch < 0) {
      outcome.best_top1 = row.test_top1;
      outcome.best_epoch = epoch;
    }
    if (!opt.quiet) {
      std::ostringstream msg;
      msg << "epoch " << epoch << ": lr " << lr << ", loss " << std::fixed
          << std::setprecision(4) << row.train_loss << ", test " << row.test_top1 << "%";
      std::fputs((msg.str() + "\n").c_str(), stderr);
    }
  }
  outcome.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  outcome.metrics_csv = metrics_text.str();
  return outcome;
}

}  // namespace subband
