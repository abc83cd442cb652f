"""Write the tiny IDX fixtures used by the loader tests.

two-images: 2 images of 2x3 pixels with labels [7, 2].
mismatch:   3 labels paired with the 2-image file.
"""
import os
import struct

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "fixtures")

PIXELS = [
    [0, 255, 51, 102, 153, 204],
    [1, 2, 3, 250, 128, 0],
]


def main():
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "two-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, 2, 2, 3))
        for img in PIXELS:
            f.write(bytes(img))
    with open(os.path.join(OUT, "two-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, 2))
        f.write(bytes([7, 2]))
    with open(os.path.join(OUT, "three-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, 3))
        f.write(bytes([7, 2, 1]))


if __name__ == "__main__":
    main()
