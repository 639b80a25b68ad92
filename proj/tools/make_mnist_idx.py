#!/usr/bin/env python3
"""Convert the digit samples shipped in the npm `mnist` package into IDX files.

The package stores each digit class as a JSON array of 28x28 images with
pixels already divided by 255 and rounded to three decimals. Multiplying by
255 and rounding recovers the original 8-bit pixel values exactly.

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_idx.py package/src/digits data/mnist
"""
import json
import struct
import sys
from pathlib import Path

ROWS = COLS = 28


def load_digit(path: Path) -> list[bytes]:
    flat = json.loads(path.read_text())["data"]
    if len(flat) % (ROWS * COLS) != 0:
        raise ValueError(f"{path}: {len(flat)} values is not a multiple of 784")
    images = []
    for start in range(0, len(flat), ROWS * COLS):
        pixels = flat[start:start + ROWS * COLS]
        images.append(bytes(int(round(v * 255.0)) for v in pixels))
    return images


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    per_class = [load_digit(src / f"{digit}.json") for digit in range(10)]

    # Round-robin over classes so that any prefix is roughly class-balanced.
    images, labels = [], []
    for i in range(max(len(c) for c in per_class)):
        for digit, samples in enumerate(per_class):
            if i < len(samples):
                images.append(samples[i])
                labels.append(digit)

    dst.mkdir(parents=True, exist_ok=True)
    with open(dst / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), ROWS, COLS))
        for img in images:
            f.write(img)
    with open(dst / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))
    print(f"wrote {len(images)} images; per class: {[len(c) for c in per_class]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
