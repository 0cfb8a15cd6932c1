// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "subband/config.hpp"
#include "subband/error.hpp"
#include "subband/model.hpp"
#include "subband/optimizer.hpp"
#include "subband/tensor_io.hpp"

namespace subband {

// Checkpoint container, little-endian throughout:
//   "SBNC" | u16 version | u8 precision | u8 reserved
//   u32 config text length | config text
//   u64 epoch | u64 optimizer iteration
//   u64 dropout rng key | u64 dropout nonce
//   u32 record count | records: u16 name length, name, tensor blob
// Parameter records use their registry names; velocity records are
// "vel." + name. Restoring reproduces bit-identical forward passes.
inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {
template <typename V>
void write_pod(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) throw CorruptDataError("checkpoint truncated");
  return v;
}
}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, Model<T>& model, const SgdOptimizer<T>* opt,
                     std::int64_t epoch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write("SBNC", 4);
  detail::write_pod<std::uint16_t>(out, kCheckpointVersion);
  detail::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(precision_of<T>()));
  detail::write_pod<std::uint8_t>(out, 0);

  const std::string cfg_text = config_text(model.config());
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(cfg_text.size()));
  out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

  detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(epoch));
  detail::write_pod<std::uint64_t>(out,
                                   static_cast<std::uint64_t>(opt ? opt->iteration() : 0));
  const auto [rng_key, rng_nonce] = model.dropout_state();
  detail::write_pod<std::uint64_t>(out, rng_key);
  detail::write_pod<std::uint64_t>(out, rng_nonce);

  auto params = model.params();
  const std::uint32_t records =
      static_cast<std::uint32_t>(params.size() + (opt ? opt->velocity().size() : 0));
  detail::write_pod<std::uint32_t>(out, records);
  auto write_record = [&](const std::string& name, const Tensor4<T>& t) {
    detail::write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, t);
  };
  for (const auto& p : params) write_record(p.name, *p.tensor);
  if (opt)
    for (std::size_t i = 0; i < opt->velocity().size(); ++i)
      write_record("vel." + params[i].name, opt->velocity()[i]);
  if (!out) throw IoError("checkpoint write failed");
}

template <typename T>
struct Checkpoint {
  Model<T> model;
  SgdOptimizer<T> optimizer{0.9, 0.0005};
  bool has_optimizer = false;
  std::int64_t epoch = 0;
};

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SBNC", 4) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  const auto version = detail::read_pod<std::uint16_t>(in);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto precision = detail::read_pod<std::uint8_t>(in);
  if (precision != static_cast<std::uint8_t>(precision_of<T>()))
    throw CheckpointError("checkpoint precision does not match the requested element type");
  detail::read_pod<std::uint8_t>(in);

  const auto cfg_len = detail::read_pod<std::uint32_t>(in);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  if (!in) throw CorruptDataError("checkpoint truncated in config block");
  std::istringstream cfg_stream(cfg_text);
  const ArchitectureConfig cfg = parse_config(cfg_stream, path + ":config");

  Checkpoint<T> ck;
  ck.epoch = static_cast<std::int64_t>(detail::read_pod<std::uint64_t>(in));
  const auto opt_iter = detail::read_pod<std::uint64_t>(in);
  const auto rng_key = detail::read_pod<std::uint64_t>(in);
  const auto rng_nonce = detail::read_pod<std::uint64_t>(in);

  ck.model = Model<T>::build(cfg, 0);
  ck.model.set_dropout_state(rng_key, rng_nonce);
  ck.optimizer = SgdOptimizer<T>(cfg.momentum, cfg.decay);
  ck.optimizer.attach(ck.model.param_tensors());
  ck.optimizer.set_iteration(static_cast<std::int64_t>(opt_iter));

  auto params = ck.model.params();
  const auto records = detail::read_pod<std::uint32_t>(in);
  std::size_t loaded_params = 0, loaded_vel = 0;
  for (std::uint32_t r = 0; r < records; ++r) {
    const auto name_len = detail::read_pod<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw CorruptDataError("checkpoint truncated in record " + std::to_string(r));
    Tensor4<T> t = read_tensor<T>(in);
    const bool is_vel = name.rfind("vel.", 0) == 0;
    const std::string param_name = is_vel ? name.substr(4) : name;
    bool found = false;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].name != param_name) continue;
      found = true;
      if (!(t.shape() == params[i].tensor->shape()))
        throw CheckpointError("record " + name + " has shape " + t.shape().str() +
                              ", expected " + params[i].tensor->shape().str());
      if (is_vel) {
        ck.optimizer.velocity()[i] = std::move(t);
        ++loaded_vel;
      } else {
        *params[i].tensor = std::move(t);
        ++loaded_params;
      }
      break;
    }
    if (!found) throw CheckpointError("unexpected checkpoint record " + name);
  }
  if (loaded_params != params.size())
    throw CheckpointError("checkpoint is missing parameter records (" +
                          std::to_string(loaded_params) + "/" + std::to_string(params.size()) +
                          ")");
  ck.has_optimizer = loaded_vel == params.size();
  return ck;
}

}  // namespace subband
