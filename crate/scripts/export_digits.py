"""Export the UCI optical handwritten digits set (as bundled with scikit-learn)
to IDX files under data/digits/.

Pixels (0..16) are stored as round(v * 255 / 16) so the loader's 1/255 scaling
maps them back onto [0, 1]. The first 1297 samples form the training split,
the remaining 500 the test split.
"""
import os
import struct

import numpy as np
from sklearn.datasets import load_digits

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "digits")
TRAIN = 1297


def write_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def main():
    d = load_digits()
    images = np.rint(d.images * 255.0 / 16.0).clip(0, 255).astype(np.uint8)
    labels = d.target
    os.makedirs(OUT, exist_ok=True)
    write_images(os.path.join(OUT, "train-images-idx3-ubyte"), images[:TRAIN])
    write_labels(os.path.join(OUT, "train-labels-idx1-ubyte"), labels[:TRAIN])
    write_images(os.path.join(OUT, "test-images-idx3-ubyte"), images[TRAIN:])
    write_labels(os.path.join(OUT, "test-labels-idx1-ubyte"), labels[TRAIN:])


if __name__ == "__main__":
    main()
