#!/usr/bin/env python3
"""Builds gzipped IDX files from the digits shipped in the `mnist` npm package.

The package holds 10,000 digits as JSON arrays of pixel intensities in
[0, 1]. They are rescaled to bytes, shuffled with a fixed seed and split
into 7,000 training and 3,000 test items.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_from_npm.py package/src/digits data/mnist
"""

import gzip
import json
import random
import struct
import sys
from pathlib import Path

TRAIN = 7000
SEED = 20170831


def load(digits_dir):
    items = []
    for label in range(10):
        data = json.loads((Path(digits_dir) / f"{label}.json").read_text())["data"]
        for i in range(len(data) // 784):
            px = bytes(min(255, max(0, round(v * 255))) for v in data[i * 784:(i + 1) * 784])
            items.append((px, label))
    return items


def write(out_dir, prefix, items):
    with gzip.GzipFile(out_dir / f"{prefix}-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(items), 28, 28))
        for px, _ in items:
            f.write(px)
    with gzip.GzipFile(out_dir / f"{prefix}-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(items)))
        f.write(bytes(label for _, label in items))


def main():
    src, out = sys.argv[1], Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    items = load(src)
    random.Random(SEED).shuffle(items)
    write(out, "subset-train", items[:TRAIN])
    write(out, "subset-test", items[TRAIN:])
    print(f"wrote {TRAIN} train and {len(items) - TRAIN} test items to {out}")


if __name__ == "__main__":
    main()
