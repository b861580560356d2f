#!/usr/bin/env python3
"""Build the bundled digit dataset in IDX format.

Uses the scikit-learn handwritten digits (1797 samples, 8x8, 10 classes),
upscaled to 28x28 and augmented with small random shifts to reach
2000 training / 1000 test images. The split happens before augmentation so
no source digit appears on both sides. Output goes to data/.
"""

import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

OUT = Path(__file__).resolve().parent.parent / "data"
SEED = 20240901
TRAIN_SRC, TRAIN_N = 1200, 2000
TEST_N = 1000


def upscale28(img8):
    idx = np.arange(28) * 8 // 28
    big = img8[np.ix_(idx, idx)]
    return np.clip(big * (255.0 / 16.0), 0, 255).astype(np.uint8)


def shift(img, dy, dx):
    out = np.zeros_like(img)
    ys = slice(max(0, dy), 28 + min(0, dy))
    xs = slice(max(0, dx), 28 + min(0, dx))
    yd = slice(max(0, -dy), 28 + min(0, -dy))
    xd = slice(max(0, -dx), 28 + min(0, -dx))
    out[ys, xs] = img[yd, xd]
    return out


def augment_to(images, labels, target, rng):
    out_i, out_l = list(images), list(labels)
    while len(out_i) < target:
        j = rng.integers(0, len(images))
        dy, dx = rng.integers(-2, 3, size=2)
        out_i.append(shift(images[j], int(dy), int(dx)))
        out_l.append(labels[j])
    return np.stack(out_i[:target]), np.array(out_l[:target], dtype=np.uint8)


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())


def main():
    rng = np.random.default_rng(SEED)
    ds = load_digits()
    order = rng.permutation(len(ds.images))
    images = np.stack([upscale28(ds.images[i]) for i in order])
    labels = ds.target[order].astype(np.uint8)

    train_i, train_l = augment_to(images[:TRAIN_SRC], labels[:TRAIN_SRC], TRAIN_N, rng)
    test_i, test_l = augment_to(images[TRAIN_SRC:], labels[TRAIN_SRC:], TEST_N, rng)

    OUT.mkdir(exist_ok=True)
    write_idx_images(OUT / "train-images-idx3-ubyte", train_i)
    write_idx_labels(OUT / "train-labels-idx1-ubyte", train_l)
    write_idx_images(OUT / "test-images-idx3-ubyte", test_i)
    write_idx_labels(OUT / "test-labels-idx1-ubyte", test_l)
    print(f"wrote {len(train_i)} train / {len(test_i)} test to {OUT}")


if __name__ == "__main__":
    main()
