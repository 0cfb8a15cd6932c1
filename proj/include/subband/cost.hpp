// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "subband/config.hpp"
#include "subband/tensor.hpp"

namespace subband {

// Counting conventions: one MAC is one multiply-accumulate. Convolutions
// cost h_out*w_out*c_out*kh*kw*c_in, fully connected layers d_in*d_out.
// Bias adds, pooling comparisons, activations, dropout, softmax and the
// fixed wavelet front end all count as zero MACs, matching the convention
// used by published CNN cost tables.
struct LayerCost {
  std::string name;
  Shape4 out_shape;          // per instance
  std::int64_t instances;    // SRCNN stack layers replicate per subband
  std::uint64_t macs;        // per instance
  std::uint64_t params;      // per instance

  std::uint64_t total_macs() const { return macs * static_cast<std::uint64_t>(instances); }
  std::uint64_t total_params() const { return params * static_cast<std::uint64_t>(instances); }
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::uint64_t total_macs = 0;
  std::uint64_t total_params = 0;

  std::uint64_t param_bytes(Precision p) const {
    return total_params * (p == Precision::F32 ? 4 : 8);
  }
  std::uint64_t conv_macs() const {
    std::uint64_t n = 0;
    for (const auto& l : layers)
      if (l.name.find("conv") != std::string::npos) n += l.total_macs();
    return n;
  }
};

/// MACs and parameters of one stack layer for the given input shape.
inline std::pair<std::uint64_t, std::uint64_t> count_layer(const LayerDesc& d,
                                                           const Shape4& in) {
  if (d.kind == LayerDesc::Kind::Conv) {
    if (in.c != d.c_in) throw ConfigError("count_layer: channel mismatch");
    const auto macs = static_cast<std::uint64_t>(in.h) * static_cast<std::uint64_t>(in.w) *
                      static_cast<std::uint64_t>(d.c_out) * static_cast<std::uint64_t>(d.kh) *
                      static_cast<std::uint64_t>(d.kw) * static_cast<std::uint64_t>(d.c_in);
    const auto params = static_cast<std::uint64_t>(d.kh) * static_cast<std::uint64_t>(d.kw) *
                            static_cast<std::uint64_t>(d.c_in) *
                            static_cast<std::uint64_t>(d.c_out) +
                        static_cast<std::uint64_t>(d.c_out);
    return {macs, params};
  }
  return {0, 0};
}

inline std::pair<std::uint64_t, std::uint64_t> count_fc(const FcDesc& f) {
  const auto macs = static_cast<std::uint64_t>(f.d_in) * static_cast<std::uint64_t>(f.d_out);
  return {macs, macs + static_cast<std::uint64_t>(f.d_out)};
}

/// Per-layer walk over a config for a single input sample. The per-layer
/// rows expose instance counts so the subband replication factor and the
/// spatial reduction stay auditable separately.
inline CostReport count_model(const ArchitectureConfig& cfg) {
  validate(cfg);
  CostReport report;
  const std::int64_t stacks = cfg.stack_count();

  if (cfg.dwt_levels > 0) {
    report.layers.push_back({"dwt",
                             {1, cfg.stack_in_h(), cfg.stack_in_w(), cfg.stack_in_channels()},
                             1, 0, 0});
  }

  Shape4 in{1, cfg.stack_in_h(), cfg.stack_in_w(), cfg.stack_in_channels()};
  const auto shapes = stack_shapes(cfg);
  int conv_no = 0, pool_no = 0;
  for (std::size_t i = 0; i < cfg.subband_stack.size(); ++i) {
    const LayerDesc& d = cfg.subband_stack[i];
    const auto [macs, params] = count_layer(d, in);
    const std::string name = d.kind == LayerDesc::Kind::Conv
                                 ? "conv" + std::to_string(conv_no++)
                                 : "pool" + std::to_string(pool_no++);
    report.layers.push_back({name, shapes[i], stacks, macs, params});
    in = shapes[i];
  }
  for (std::size_t i = 0; i < cfg.fc_stack.size(); ++i) {
    const auto [macs, params] = count_fc(cfg.fc_stack[i]);
    report.layers.push_back(
        {"fc" + std::to_string(i), {1, 1, 1, cfg.fc_stack[i].d_out}, 1, macs, params});
  }
  for (const auto& l : report.layers) {
    report.total_macs += l.total_macs();
    report.total_params += l.total_params();
  }
  return report;
}

/// Published reference figures for well-known architectures, as reported:
/// MACs and parameters in millions, parameter storage in MBytes. Rendered
/// alongside computed counts for comparison; never computed here.
struct ReferenceEntry {
  std::string name;
  double macs_millions;
  double params_millions;
  double params_mbytes;
};

inline const std::vector<ReferenceEntry>& reference_table() {
  static const std::vector<ReferenceEntry> table = {
      {"MobileNet V1", 569.0, 4.24, 2.0},
      {"MobileNet V2", 300.0, 3.47, 1.7},
      {"GoogleNet", 741.0, 6.99, 3.3},
      {"AlexNet", 724.0, 60.95, 29.1},
      {"SqueezeNet", 451.0, 1.24, 0.6},
      {"ResNet-50", 3900.0, 25.6, 12.2},
      {"VGG", 15500.0, 138.0, 65.8},
      {"Inception-V1", 1430.0, 7.0, 3.3},
      {"SRCNN (1L)", 169.5, 42.05, 20.1},
      {"SRCNN (2L)", 46.34, 13.64, 6.5},
  };
  return table;
}

inline std::string cost_table_text(const CostReport& r) {
  std::ostringstream out;
  out << std::left << std::setw(8) << "layer" << std::right << std::setw(16) << "out shape"
      << std::setw(6) << "x" << std::setw(14) << "macs" << std::setw(12) << "params" << "\n";
  for (const auto& l : r.layers) {
    std::ostringstream shape;
    shape << l.out_shape.h << "x" << l.out_shape.w << "x" << l.out_shape.c;
    out << std::left << std::setw(8) << l.name << std::right << std::setw(16) << shape.str()
        << std::setw(6) << l.instances << std::setw(14) << l.total_macs() << std::setw(12)
        << l.total_params() << "\n";
  }
  out << std::left << std::setw(8) << "total" << std::right << std::setw(16) << "" << std::setw(6)
      << "" << std::setw(14) << r.total_macs << std::setw(12) << r.total_params << "\n";
  return out.str();
}

inline std::string cost_table_csv(const CostReport& r) {
  std::ostringstream out;
  out << "layer,out_h,out_w,out_c,instances,macs,params\n";
  for (const auto& l : r.layers)
    out << l.name << "," << l.out_shape.h << "," << l.out_shape.w << "," << l.out_shape.c << ","
        << l.instances << "," << l.total_macs() << "," << l.total_params() << "\n";
  out << "total,,,,," << r.total_macs << "," << r.total_params << "\n";
  return out.str();
}

}  // namespace subband
