// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "subband/error.hpp"
#include "subband/layers.hpp"
#include "subband/tensor.hpp"

namespace subband {

enum class Family { BCNN, TCNN, SRCNN };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::BCNN: return "bcnn";
    case Family::TCNN: return "tcnn";
    case Family::SRCNN: return "srcnn";
  }
  return "?";
}

inline Family family_from(const std::string& s) {
  if (s == "bcnn" || s == "BCNN") return Family::BCNN;
  if (s == "tcnn" || s == "TCNN") return Family::TCNN;
  if (s == "srcnn" || s == "SRCNN") return Family::SRCNN;
  throw ConfigError("unknown family '" + s + "'");
}

/// One entry of the per-subband stack: a same-padded convolution or a max
/// pool. Convolutions are always followed by the leaky activation.
struct LayerDesc {
  enum class Kind { Conv, Pool } kind = Kind::Conv;
  std::int64_t kh = 3, kw = 3;      // conv
  std::int64_t c_in = 0, c_out = 0; // conv
  PoolSpec pool;                    // pool
};

struct FcDesc {
  std::int64_t d_in = 0, d_out = 0;
  double dropout = 0.0;  // applied after this layer's activation
};

/// Declarative description of one model. `subband_stack` describes a single
/// stack; SRCNN instantiates it once per subband with independent weights,
/// TCNN/BCNN exactly once.
struct ArchitectureConfig {
  std::string name;
  std::string dataset;  // mnist | cifar10 | cifar100; selects the loader
  Family family = Family::BCNN;
  int dwt_levels = 0;
  std::int64_t in_h = 0, in_w = 0, in_c = 0;
  std::vector<LayerDesc> subband_stack;
  std::vector<FcDesc> fc_stack;
  std::int64_t classes = 0;
  double leak = 0.1;

  // Training hyperparameters (CLI defaults; overridable per run).
  double lr = 0.01;
  double momentum = 0.9;
  double decay = 0.0005;
  int batch_size = 64;
  int epochs = 15;
  std::vector<std::pair<int, double>> lr_steps;

  std::int64_t subband_count() const {
    std::int64_t k = 1;
    for (int i = 0; i < dwt_levels; ++i) k *= 4;
    return k;
  }

  /// Number of independent weight stacks (SRCNN: one per subband).
  std::int64_t stack_count() const { return family == Family::SRCNN ? subband_count() : 1; }

  /// Channels entering the first stack layer.
  std::int64_t stack_in_channels() const {
    return family == Family::TCNN ? in_c * subband_count() : in_c;
  }

  /// Spatial extent entering the stacks.
  std::int64_t stack_in_h() const { return in_h >> dwt_levels; }
  std::int64_t stack_in_w() const { return in_w >> dwt_levels; }
};

/// Output shape of every stack layer, starting from the subband input.
/// Shared by the model builder and the cost model so both agree.
inline std::vector<Shape4> stack_shapes(const ArchitectureConfig& cfg) {
  std::int64_t h = cfg.stack_in_h(), w = cfg.stack_in_w(), c = cfg.stack_in_channels();
  std::vector<Shape4> out;
  out.reserve(cfg.subband_stack.size());
  for (std::size_t i = 0; i < cfg.subband_stack.size(); ++i) {
    const LayerDesc& d = cfg.subband_stack[i];
    if (d.kind == LayerDesc::Kind::Conv) {
      if (d.c_in != c)
        throw ConfigError("layer " + std::to_string(i) + ": conv expects " +
                          std::to_string(d.c_in) + " input channels but gets " +
                          std::to_string(c));
      c = d.c_out;
    } else {
      if ((h - d.pool.ph) % d.pool.sh != 0 || (w - d.pool.pw) % d.pool.sw != 0)
        throw ConfigError("layer " + std::to_string(i) + ": pool does not tile " +
                          std::to_string(h) + "x" + std::to_string(w));
      h = (h - d.pool.ph) / d.pool.sh + 1;
      w = (w - d.pool.pw) / d.pool.sw + 1;
    }
    out.push_back({1, h, w, c});
  }
  return out;
}

/// Feature length after flattening all subband stack outputs.
inline std::int64_t concat_length(const ArchitectureConfig& cfg) {
  const auto shapes = stack_shapes(cfg);
  const Shape4 last = shapes.empty()
                          ? Shape4{1, cfg.stack_in_h(), cfg.stack_in_w(), cfg.stack_in_channels()}
                          : shapes.back();
  return cfg.stack_count() * last.h * last.w * last.c;
}

inline void validate(const ArchitectureConfig& cfg) {
  if (cfg.in_h < 1 || cfg.in_w < 1 || cfg.in_c < 1) throw ConfigError("invalid input shape");
  if (cfg.classes < 2) throw ConfigError("need at least two classes");
  if (cfg.leak < 0.0 || cfg.leak > 1.0) throw ConfigError("leak must lie in [0, 1]");
  if (cfg.family == Family::BCNN && cfg.dwt_levels != 0)
    throw ConfigError("bcnn runs on the full band; dwt_levels must be 0");
  if (cfg.family != Family::BCNN && cfg.dwt_levels < 1)
    throw ConfigError(family_name(cfg.family) + " needs dwt_levels >= 1");
  const std::int64_t div = std::int64_t(1) << cfg.dwt_levels;
  if (cfg.in_h % div != 0 || cfg.in_w % div != 0)
    throw ConfigError("input extent not divisible by 2^dwt_levels");
  stack_shapes(cfg);  // validates chaining and pooling
  if (cfg.fc_stack.empty()) throw ConfigError("fc_stack must not be empty");
  const std::int64_t concat = concat_length(cfg);
  if (cfg.fc_stack.front().d_in != concat)
    throw ConfigError("fc layer 0: d_in " + std::to_string(cfg.fc_stack.front().d_in) +
                      " must equal the concatenated feature length " + std::to_string(concat));
  for (std::size_t i = 1; i < cfg.fc_stack.size(); ++i)
    if (cfg.fc_stack[i].d_in != cfg.fc_stack[i - 1].d_out)
      throw ConfigError("fc layer " + std::to_string(i) + ": d_in does not chain");
  for (std::size_t i = 0; i < cfg.fc_stack.size(); ++i)
    if (cfg.fc_stack[i].dropout < 0.0 || cfg.fc_stack[i].dropout >= 1.0)
      throw ConfigError("fc layer " + std::to_string(i) + ": dropout must lie in [0, 1)");
  if (cfg.fc_stack.back().d_out != cfg.classes)
    throw ConfigError("last fc layer must emit one logit per class");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.lr <= 0) throw ConfigError("lr must be positive");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

// "AxB" or "AxBxC"
inline std::vector<std::int64_t> parse_dims(const std::string& s, const char* what) {
  std::vector<std::int64_t> dims;
  std::string cur;
  for (char ch : s + "x") {
    if (ch == 'x' || ch == 'X') {
      if (cur.empty()) throw ConfigError(std::string("malformed ") + what + " '" + s + "'");
      dims.push_back(std::stoll(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return dims;
}

}  // namespace detail

/// Parses the plain-text key = value format. Repeated `subband_stack` and
/// `fc_stack` keys append in order:
///   subband_stack = conv 3x3 16 32
///   subband_stack = pool 2x2 stride 2
///   fc_stack = 2048 4096 dropout 0.5
inline ArchitectureConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  ArchitectureConfig cfg;
  std::string line;
  int line_no = 0;
  bool have_family = false, have_input = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      if (key == "name") {
        cfg.name = value;
      } else if (key == "dataset") {
        cfg.dataset = value;
      } else if (key == "family") {
        cfg.family = family_from(value);
        have_family = true;
      } else if (key == "dwt_levels") {
        cfg.dwt_levels = std::stoi(value);
      } else if (key == "input_shape") {
        const auto d = detail::parse_dims(value, "input_shape");
        if (d.size() != 3) throw ConfigError("input_shape needs HxWxC");
        cfg.in_h = d[0]; cfg.in_w = d[1]; cfg.in_c = d[2];
        have_input = true;
      } else if (key == "classes") {
        cfg.classes = std::stoll(value);
      } else if (key == "leak") {
        cfg.leak = std::stod(value);
      } else if (key == "subband_stack") {
        const auto t = detail::tokens(value);
        LayerDesc d;
        if (!t.empty() && t[0] == "conv") {
          if (t.size() != 4) throw ConfigError("conv needs: conv KhxKw c_in c_out");
          const auto kk = detail::parse_dims(t[1], "kernel");
          if (kk.size() != 2) throw ConfigError("kernel needs KhxKw");
          d.kind = LayerDesc::Kind::Conv;
          d.kh = kk[0]; d.kw = kk[1];
          d.c_in = std::stoll(t[2]); d.c_out = std::stoll(t[3]);
        } else if (!t.empty() && t[0] == "pool") {
          if (t.size() != 4 || t[2] != "stride")
            throw ConfigError("pool needs: pool PhxPw stride S");
          const auto pp = detail::parse_dims(t[1], "pool window");
          if (pp.size() != 2) throw ConfigError("pool window needs PhxPw");
          d.kind = LayerDesc::Kind::Pool;
          d.pool.ph = pp[0]; d.pool.pw = pp[1];
          d.pool.sh = d.pool.sw = std::stoll(t[3]);
        } else {
          throw ConfigError("subband_stack entry must start with conv or pool");
        }
        cfg.subband_stack.push_back(d);
      } else if (key == "fc_stack") {
        const auto t = detail::tokens(value);
        if (t.size() != 2 && !(t.size() == 4 && t[2] == "dropout"))
          throw ConfigError("fc_stack needs: d_in d_out [dropout RATE]");
        FcDesc f;
        f.d_in = std::stoll(t[0]);
        f.d_out = std::stoll(t[1]);
        if (t.size() == 4) f.dropout = std::stod(t[3]);
        cfg.fc_stack.push_back(f);
      } else if (key == "lr") {
        cfg.lr = std::stod(value);
      } else if (key == "momentum") {
        cfg.momentum = std::stod(value);
      } else if (key == "decay") {
        cfg.decay = std::stod(value);
      } else if (key == "batch_size") {
        cfg.batch_size = std::stoi(value);
      } else if (key == "epochs") {
        cfg.epochs = std::stoi(value);
      } else if (key == "schedule") {
        // epoch:factor pairs separated by commas
        std::istringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const auto colon = item.find(':');
          if (colon == std::string::npos) throw ConfigError("schedule needs epoch:factor pairs");
          cfg.lr_steps.emplace_back(std::stoi(detail::trim(item.substr(0, colon))),
                                    std::stod(detail::trim(item.substr(colon + 1))));
        }
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_family || !have_input) throw ConfigError(origin + ": family and input_shape are required");
  validate(cfg);
  return cfg;
}

inline ArchitectureConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  ArchitectureConfig cfg = parse_config(in, path);
  if (cfg.name.empty()) {
    auto base = path;
    const auto slash = base.find_last_of('/');
    if (slash != std::string::npos) base = base.substr(slash + 1);
    const auto dot = base.find_last_of('.');
    if (dot != std::string::npos) base = base.substr(0, dot);
    cfg.name = base;
  }
  return cfg;
}

/// Serializes a config back to the text format (used for checkpoint echo).
inline std::string config_text(const ArchitectureConfig& cfg) {
  std::ostringstream out;
  out << "name = " << cfg.name << "\n";
  if (!cfg.dataset.empty()) out << "dataset = " << cfg.dataset << "\n";
  out << "family = " << family_name(cfg.family) << "\n";
  out << "dwt_levels = " << cfg.dwt_levels << "\n";
  out << "input_shape = " << cfg.in_h << "x" << cfg.in_w << "x" << cfg.in_c << "\n";
  out << "classes = " << cfg.classes << "\n";
  out << "leak = " << cfg.leak << "\n";
  for (const auto& d : cfg.subband_stack) {
    if (d.kind == LayerDesc::Kind::Conv)
      out << "subband_stack = conv " << d.kh << "x" << d.kw << " " << d.c_in << " " << d.c_out
          << "\n";
    else
      out << "subband_stack = pool " << d.pool.ph << "x" << d.pool.pw << " stride " << d.pool.sh
          << "\n";
  }
  for (const auto& f : cfg.fc_stack) {
    out << "fc_stack = " << f.d_in << " " << f.d_out;
    if (f.dropout > 0) out << " dropout " << f.dropout;
    out << "\n";
  }
  out << "lr = " << cfg.lr << "\n";
  out << "momentum = " << cfg.momentum << "\n";
  out << "decay = " << cfg.decay << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "epochs = " << cfg.epochs << "\n";
  if (!cfg.lr_steps.empty()) {
    out << "schedule = ";
    for (std::size_t i = 0; i < cfg.lr_steps.size(); ++i) {
      if (i) out << ",";
      out << cfg.lr_steps[i].first << ":" << cfg.lr_steps[i].second;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace subband
