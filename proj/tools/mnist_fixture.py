#!/usr/bin/env python3
"""Build the small MNIST IDX fixture used by the smoke tests.

Source: the `mnist` npm package (src/digits/<d>.json), which ships ~10k real
MNIST digits as 784-float arrays scaled to [0,1] with three decimals. Pixels
are mapped back to bytes with round(v * 255).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_fixture.py package/src/digits tests/data 2000
"""
import json
import struct
import sys
from pathlib import Path


def main():
    src, out, count = Path(sys.argv[1]), Path(sys.argv[2]), int(sys.argv[3])
    per_digit = [json.loads((src / f"{d}.json").read_text())["data"] for d in range(10)]
    images, labels = [], []
    # round-robin over digits so any prefix is class balanced
    while len(labels) < count:
        d = len(labels) % 10
        k = len(labels) // 10
        pix = per_digit[d][k * 784:(k + 1) * 784]
        images.append(bytes(min(255, max(0, round(v * 255))) for v in pix))
        labels.append(d)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"mnist{count}-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, count, 28, 28))
        for img in images:
            f.write(img)
    with open(out / f"mnist{count}-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, count))
        f.write(bytes(labels))


if __name__ == "__main__":
    main()
