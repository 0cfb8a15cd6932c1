// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "subband/error.hpp"
#include "subband/hash.hpp"
#include "subband/rng.hpp"
#include "subband/tensor.hpp"

namespace subband {

/// Loaded split: images in [0, 1] until normalize() is applied.
struct Dataset {
  std::string name;    // mnist | cifar10 | cifar100
  std::string split;   // train | test
  std::int64_t classes = 0;
  Tensor4<float> images;
  std::vector<int> labels;
  bool normalized = false;
};

struct DatasetPair {
  Dataset train, test;
};

namespace detail {

/// Reads a whole file through zlib, which transparently handles both raw
/// and gzip-compressed content.
inline std::vector<std::uint8_t> read_maybe_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + n);
  const bool bad = n < 0;
  gzclose(f);
  if (bad) throw CorruptDataError("gzip decode failed for " + path);
  return out;
}

/// Resolves `name` or `name.gz` inside dir.
inline std::string resolve(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  const std::string plain = dir + "/" + name;
  if (fs::exists(plain)) return plain;
  if (fs::exists(plain + ".gz")) return plain + ".gz";
  throw IoError("missing dataset file " + plain + "[.gz]");
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at,
                               const std::string& path) {
  if (at + 4 > b.size())
    throw CorruptDataError(path + ": truncated at byte " + std::to_string(b.size()));
  return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) |
         (std::uint32_t(b[at + 2]) << 8) | std::uint32_t(b[at + 3]);
}

}  // namespace detail

/// IDX image file (magic 0x00000803): big-endian dims, u8 pixels. Pixels
/// scale to [0, 1] and 28x28 images are zero-padded to 32x32 so that two
/// pooling stages land on the 4x4 grid the fully connected stage expects
/// and the extent divides cleanly under the wavelet.
inline Tensor4<float> load_idx_images(const std::string& path) {
  const auto bytes = detail::read_maybe_gz(path);
  const std::uint32_t magic = detail::read_be32(bytes, 0, path);
  if (magic != 0x00000803)
    throw CorruptDataError(path + ": bad image magic 0x" + [&] {
      std::ostringstream s;
      s << std::hex << magic;
      return s.str();
    }() + " at byte 0");
  const std::int64_t n = detail::read_be32(bytes, 4, path);
  const std::int64_t rows = detail::read_be32(bytes, 8, path);
  const std::int64_t cols = detail::read_be32(bytes, 12, path);
  const std::size_t need = 16 + static_cast<std::size_t>(n * rows * cols);
  if (bytes.size() != need)
    throw CorruptDataError(path + ": expected " + std::to_string(need) + " bytes, got " +
                           std::to_string(bytes.size()));

  const bool pad = (rows == 28 && cols == 28);
  const std::int64_t out_h = pad ? 32 : rows, out_w = pad ? 32 : cols;
  const std::int64_t off = pad ? 2 : 0;
  Tensor4<float> images({n, out_h, out_w, 1});
  const std::uint8_t* px = bytes.data() + 16;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < cols; ++c)
        images(i, r + off, c + off, 0) =
            static_cast<float>(px[(i * rows + r) * cols + c]) / 255.0f;
  return images;
}

/// IDX label file (magic 0x00000801).
inline std::vector<int> load_idx_labels(const std::string& path) {
  const auto bytes = detail::read_maybe_gz(path);
  const std::uint32_t magic = detail::read_be32(bytes, 0, path);
  if (magic != 0x00000801)
    throw CorruptDataError(path + ": bad label magic at byte 0");
  const std::int64_t n = detail::read_be32(bytes, 4, path);
  if (bytes.size() != 8 + static_cast<std::size_t>(n))
    throw CorruptDataError(path + ": truncated at byte " + std::to_string(bytes.size()));
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = bytes[8 + i];
  return labels;
}

inline DatasetPair load_mnist(const std::string& dir) {
  DatasetPair out;
  out.train = {"mnist", "train", 10,
               load_idx_images(detail::resolve(dir, "train-images-idx3-ubyte")),
               load_idx_labels(detail::resolve(dir, "train-labels-idx1-ubyte")), false};
  out.test = {"mnist", "test", 10,
              load_idx_images(detail::resolve(dir, "t10k-images-idx3-ubyte")),
              load_idx_labels(detail::resolve(dir, "t10k-labels-idx1-ubyte")), false};
  for (const Dataset* d : {&out.train, &out.test})
    if (d->images.shape().n != static_cast<std::int64_t>(d->labels.size()))
      throw CorruptDataError("mnist " + d->split + ": image/label count mismatch");
  return out;
}

namespace detail {

/// CIFAR binary records: [coarse?] label byte(s) + 3072 channel-planar
/// pixels, converted here to interleaved (h, w, c).
inline void append_cifar_records(const std::string& path, int label_bytes, Dataset& ds,
                                 std::int64_t expected_records) {
  const auto bytes = read_maybe_gz(path);
  const std::size_t record = static_cast<std::size_t>(label_bytes) + 3072;
  if (bytes.size() != record * static_cast<std::size_t>(expected_records))
    throw CorruptDataError(path + ": expected " +
                           std::to_string(record * static_cast<std::size_t>(expected_records)) +
                           " bytes, got " + std::to_string(bytes.size()));
  const std::int64_t base = static_cast<std::int64_t>(ds.labels.size());
  for (std::int64_t r = 0; r < expected_records; ++r) {
    const std::uint8_t* rec = bytes.data() + static_cast<std::size_t>(r) * record;
    ds.labels.push_back(rec[label_bytes - 1]);  // fine label is the last label byte
    const std::uint8_t* px = rec + label_bytes;
    for (std::int64_t c = 0; c < 3; ++c)
      for (std::int64_t i = 0; i < 32; ++i)
        for (std::int64_t j = 0; j < 32; ++j)
          ds.images(base + r, i, j, c) =
              static_cast<float>(px[(c * 32 + i) * 32 + j]) / 255.0f;
  }
}

}  // namespace detail

inline DatasetPair load_cifar(const std::string& dir, int variant) {
  if (variant != 10 && variant != 100) throw ConfigError("cifar variant must be 10 or 100");
  DatasetPair out;
  const std::string name = "cifar" + std::to_string(variant);
  out.train = {name, "train", variant, Tensor4<float>({50000, 32, 32, 3}), {}, false};
  out.test = {name, "test", variant, Tensor4<float>({10000, 32, 32, 3}), {}, false};
  out.train.labels.reserve(50000);
  out.test.labels.reserve(10000);
  if (variant == 10) {
    for (int b = 1; b <= 5; ++b)
      detail::append_cifar_records(detail::resolve(dir, "data_batch_" + std::to_string(b) + ".bin"),
                                   1, out.train, 10000);
    detail::append_cifar_records(detail::resolve(dir, "test_batch.bin"), 1, out.test, 10000);
  } else {
    detail::append_cifar_records(detail::resolve(dir, "train.bin"), 2, out.train, 50000);
    detail::append_cifar_records(detail::resolve(dir, "test.bin"), 2, out.test, 10000);
  }
  for (const Dataset* d : {&out.train, &out.test})
    for (int label : d->labels)
      if (label < 0 || label >= d->classes)
        throw CorruptDataError(d->name + " " + d->split + ": label out of range");
  return out;
}

/// Per-channel statistics of a dataset in the raw [0, 1] domain. Test
/// splits normalize with the train split's statistics.
struct NormStats {
  std::vector<double> mean, stddev;
};

inline NormStats compute_stats(const Dataset& ds) {
  if (ds.normalized) throw StateError("statistics must come from the raw [0,1] images");
  const Shape4 s = ds.images.shape();
  NormStats st;
  st.mean.assign(static_cast<std::size_t>(s.c), 0.0);
  st.stddev.assign(static_cast<std::size_t>(s.c), 0.0);
  const std::int64_t per_channel = s.n * s.h * s.w;
  for (std::int64_t i = 0; i < ds.images.size(); ++i)
    st.mean[static_cast<std::size_t>(i % s.c)] += ds.images.data()[i];
  for (auto& m : st.mean) m /= static_cast<double>(per_channel);
  for (std::int64_t i = 0; i < ds.images.size(); ++i) {
    const double d = ds.images.data()[i] - st.mean[static_cast<std::size_t>(i % s.c)];
    st.stddev[static_cast<std::size_t>(i % s.c)] += d * d;
  }
  for (auto& v : st.stddev) v = std::max(std::sqrt(v / static_cast<double>(per_channel)), 1e-6);
  return st;
}

inline void normalize(Dataset& ds, const NormStats& stats) {
  if (ds.normalized) throw StateError("dataset already normalized");
  const Shape4 s = ds.images.shape();
  for (std::int64_t i = 0; i < ds.images.size(); ++i) {
    const auto c = static_cast<std::size_t>(i % s.c);
    ds.images.data()[i] =
        static_cast<float>((ds.images.data()[i] - stats.mean[c]) / stats.stddev[c]);
  }
  ds.normalized = true;
}

struct BatchPlan {
  int batch_size = 64;
  std::uint64_t seed = 0;
  int epoch = 0;
};

/// Seeded shuffled pass over a dataset; every sample appears exactly once
/// per epoch and the final short batch is included.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, const BatchPlan& plan)
      : ds_(ds),
        plan_(plan),
        perm_(random_permutation(
            ds.images.shape().n,
            CounterRng::stream(plan.seed, 0xBA7C4ull + static_cast<std::uint64_t>(plan.epoch)))) {}

  bool next(Tensor4<float>& x, std::vector<int>& labels) {
    const std::int64_t n = ds_.images.shape().n;
    if (cursor_ >= n) return false;
    const std::int64_t take = std::min<std::int64_t>(plan_.batch_size, n - cursor_);
    const Shape4 s = ds_.images.shape();
    x = Tensor4<float>({take, s.h, s.w, s.c});
    labels.resize(static_cast<std::size_t>(take));
    const std::int64_t sample_len = s.h * s.w * s.c;
    for (std::int64_t b = 0; b < take; ++b) {
      const std::int64_t src = perm_[static_cast<std::size_t>(cursor_ + b)];
      std::memcpy(x.data() + b * sample_len, ds_.images.data() + src * sample_len,
                  static_cast<std::size_t>(sample_len) * sizeof(float));
      labels[static_cast<std::size_t>(b)] = ds_.labels[static_cast<std::size_t>(src)];
    }
    cursor_ += take;
    return true;
  }

  std::int64_t batches_total() const {
    const std::int64_t n = ds_.images.shape().n;
    return (n + plan_.batch_size - 1) / plan_.batch_size;
  }

  const std::vector<std::int64_t>& permutation() const { return perm_; }

 private:
  const Dataset& ds_;
  BatchPlan plan_;
  std::vector<std::int64_t> perm_;
  std::int64_t cursor_ = 0;
};

/// Pinned-checksum manifest: lines of "<sha256> <size> <relative path>".
struct FileStamp {
  std::string sha256;
  std::uint64_t size = 0;
  std::string path;
};

inline std::vector<FileStamp> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  std::vector<FileStamp> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    FileStamp f;
    if (!(row >> f.sha256 >> f.size >> f.path))
      throw CorruptDataError(path + ": malformed manifest line '" + line + "'");
    out.push_back(std::move(f));
  }
  return out;
}

/// Size check always; checksums only when `deep` (hashing is slow on the
/// full archives). Returns a human-readable problem list, empty when clean.
/// Files missing from disk are reported but never fetched.
inline std::vector<std::string> verify_files(const std::string& root,
                                             const std::vector<FileStamp>& manifest, bool deep) {
  namespace fs = std::filesystem;
  std::vector<std::string> problems;
  for (const auto& f : manifest) {
    const std::string path = root + "/" + f.path;
    if (!fs::exists(path)) {
      problems.push_back(f.path + ": missing");
      continue;
    }
    const auto size = static_cast<std::uint64_t>(fs::file_size(path));
    if (size != f.size) {
      problems.push_back(f.path + ": size " + std::to_string(size) + ", expected " +
                         std::to_string(f.size));
      continue;
    }
    if (deep && sha256_file(path) != f.sha256) problems.push_back(f.path + ": checksum mismatch");
  }
  return problems;
}

}  // namespace subband
