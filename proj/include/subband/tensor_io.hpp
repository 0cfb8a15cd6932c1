// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "subband/error.hpp"
#include "subband/tensor.hpp"

namespace subband {

// Flat binary tensor container:
//   bytes 0..3   magic "TNS4"
//   byte  4      precision code (1 = f32, 2 = f64)
//   bytes 5..7   reserved, zero
//   bytes 8..23  four u32 little-endian dims (n, h, w, c)
//   bytes 24..   raw little-endian element data
static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; big-endian hosts are unsupported");

inline constexpr char kTensorMagic[4] = {'T', 'N', 'S', '4'};

template <typename T>
void write_tensor(std::ostream& out, const Tensor4<T>& t) {
  char header[24] = {};
  std::memcpy(header, kTensorMagic, 4);
  header[4] = static_cast<char>(precision_of<T>());
  const std::uint32_t dims[4] = {
      static_cast<std::uint32_t>(t.shape().n), static_cast<std::uint32_t>(t.shape().h),
      static_cast<std::uint32_t>(t.shape().w), static_cast<std::uint32_t>(t.shape().c)};
  std::memcpy(header + 8, dims, 16);
  out.write(header, sizeof(header));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(T)));
  if (!out) throw IoError("tensor write failed");
}

template <typename T>
void write_tensor(const std::string& path, const Tensor4<T>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_tensor(out, t);
}

namespace detail {
template <typename Elem, typename T>
Tensor4<T> read_tensor_payload(std::istream& in, Shape4 shape) {
  std::vector<Elem> raw(static_cast<std::size_t>(shape.count()));
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(Elem)));
  if (!in)
    throw CorruptDataError("tensor file truncated at byte " +
                           std::to_string(24 + in.gcount()));
  std::vector<T> data(raw.begin(), raw.end());
  return Tensor4<T>(shape, std::move(data));
}
}  // namespace detail

/// Reads a tensor file; the payload converts to T when the stored precision
/// differs.
template <typename T>
Tensor4<T> read_tensor(std::istream& in) {
  char header[24];
  in.read(header, sizeof(header));
  if (!in) throw CorruptDataError("tensor file truncated at byte " + std::to_string(in.gcount()));
  if (std::memcmp(header, kTensorMagic, 4) != 0)
    throw CorruptDataError("bad tensor magic at byte 0");
  const auto code = static_cast<std::uint8_t>(header[4]);
  std::uint32_t dims[4];
  std::memcpy(dims, header + 8, 16);
  const Shape4 shape{static_cast<std::int64_t>(dims[0]), static_cast<std::int64_t>(dims[1]),
                     static_cast<std::int64_t>(dims[2]), static_cast<std::int64_t>(dims[3])};
  if (code == static_cast<std::uint8_t>(Precision::F32))
    return detail::read_tensor_payload<float, T>(in, shape);
  if (code == static_cast<std::uint8_t>(Precision::F64))
    return detail::read_tensor_payload<double, T>(in, shape);
  throw CorruptDataError("unknown tensor precision code " + std::to_string(code) + " at byte 4");
}

template <typename T>
Tensor4<T> read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_tensor<T>(in);
}

}  // namespace subband
