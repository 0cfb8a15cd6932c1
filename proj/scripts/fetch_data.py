#!/usr/bin/env python3
# Copyright (c) 2026 The subband project authors
# SPDX-License-Identifier: Apache-2.0
"""Out-of-band dataset fetch/convert helper.

Produces the standard on-disk layouts the library parses:

  <root>/mnist/      train-images-idx3-ubyte.gz  train-labels-idx1-ubyte.gz
                     t10k-images-idx3-ubyte.gz   t10k-labels-idx1-ubyte.gz
  <root>/cifar10/    data_batch_1..5.bin  test_batch.bin      (3073-byte records)
  <root>/cifar100/   train.bin  test.bin                      (3074-byte records)

MNIST downloads the canonical IDX containers. CIFAR is rebuilt from the
parquet copies of the original datasets (--parquet-dir to reuse local
files, otherwise downloaded), decoding each PNG back to the raw planar
pixel records of the original binary distribution.

Nothing in the test suite shells out to this script; it exists so a fresh
machine can materialize the fixtures once. A SHA256SUMS file is written
next to the data for the library's size/checksum verification.
"""

import argparse
import hashlib
import io
import os
import sys
import urllib.request

MNIST_FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]
MNIST_BASE = "https://ossci-datasets.s3.amazonaws.com/mnist/"
HF_BASE = "https://huggingface.co/datasets/uoft-cs/"
CIFAR_PARQUET = {
    ("cifar10", "train"): "cifar10/resolve/main/plain_text/train-00000-of-00001.parquet",
    ("cifar10", "test"): "cifar10/resolve/main/plain_text/test-00000-of-00001.parquet",
    ("cifar100", "train"): "cifar100/resolve/main/cifar100/train-00000-of-00001.parquet",
    ("cifar100", "test"): "cifar100/resolve/main/cifar100/test-00000-of-00001.parquet",
}


def fetch(url: str, dest: str) -> None:
    if os.path.exists(dest):
        print(f"  kept {dest}")
        return
    print(f"  {url} -> {dest}")
    with urllib.request.urlopen(url) as r, open(dest + ".part", "wb") as f:
        while chunk := r.read(1 << 20):
            f.write(chunk)
    os.rename(dest + ".part", dest)


def planar_records(parquet_path: str, label_cols):
    import numpy as np
    import pyarrow.parquet as pq
    from PIL import Image

    table = pq.read_table(parquet_path)
    cols = table.column_names
    img_col = "img" if "img" in cols else "image"
    images = table.column(img_col).to_pylist()
    labels = [table.column(c).to_pylist() for c in label_cols]
    out = bytearray()
    for i, cell in enumerate(images):
        png = cell["bytes"] if isinstance(cell, dict) else cell
        arr = np.asarray(Image.open(io.BytesIO(png)).convert("RGB"), dtype=np.uint8)
        assert arr.shape == (32, 32, 3), arr.shape
        for lab in labels:
            out.append(lab[i])
        out += arr[:, :, 0].tobytes()
        out += arr[:, :, 1].tobytes()
        out += arr[:, :, 2].tobytes()
    return bytes(out)


def build_cifar(root: str, variant: str, parquet_dir: str | None) -> list[str]:
    outdir = os.path.join(root, variant)
    os.makedirs(outdir, exist_ok=True)
    written = []
    label_cols = ["label"] if variant == "cifar10" else ["coarse_label", "fine_label"]
    rec = 3072 + len(label_cols)
    for split in ("train", "test"):
        if parquet_dir:
            src = os.path.join(parquet_dir, f"{variant}_{split}.parquet")
        else:
            src = os.path.join(outdir, f"{split}.parquet")
            fetch(HF_BASE + CIFAR_PARQUET[(variant, split)], src)
        blob = planar_records(src, label_cols)
        if variant == "cifar10" and split == "train":
            assert len(blob) == 50000 * rec
            for b in range(5):
                name = os.path.join(outdir, f"data_batch_{b + 1}.bin")
                with open(name, "wb") as f:
                    f.write(blob[b * 10000 * rec:(b + 1) * 10000 * rec])
                written.append(name)
        else:
            count = 50000 if split == "train" else 10000
            assert len(blob) == count * rec, (len(blob), count * rec)
            name = os.path.join(
                outdir, "test_batch.bin" if variant == "cifar10" else f"{split}.bin")
            if variant == "cifar100":
                name = os.path.join(outdir, f"{split}.bin")
            with open(name, "wb") as f:
                f.write(blob)
            written.append(name)
    return written


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", required=True, help="data root directory")
    ap.add_argument("--datasets", default="mnist,cifar10,cifar100")
    ap.add_argument("--mnist-base", default=MNIST_BASE)
    ap.add_argument("--parquet-dir", default=None,
                    help="reuse pre-downloaded <variant>_<split>.parquet files")
    args = ap.parse_args()

    wanted = set(args.datasets.split(","))
    produced = []
    if "mnist" in wanted:
        outdir = os.path.join(args.root, "mnist")
        os.makedirs(outdir, exist_ok=True)
        for name in MNIST_FILES:
            dest = os.path.join(outdir, name)
            fetch(args.mnist_base + name, dest)
            produced.append(dest)
    for variant in ("cifar10", "cifar100"):
        if variant in wanted:
            produced.extend(build_cifar(args.root, variant, args.parquet_dir))

    manifest = os.path.join(args.root, "SHA256SUMS")
    with open(manifest, "w") as f:
        for path in produced:
            digest = hashlib.sha256(open(path, "rb").read()).hexdigest()
            rel = os.path.relpath(path, args.root)
            size = os.path.getsize(path)
            f.write(f"{digest} {size} {rel}\n")
            print(f"  {digest[:12]}  {size:>10}  {rel}")
    print(f"manifest: {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
