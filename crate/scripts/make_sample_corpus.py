"""Regenerate corpus/sample/ from the scikit-image bundled sample photographs.

Deterministic: fixed crop sizes and a seeded crop-origin generator.
"""
import os

import numpy as np
from PIL import Image
import skimage

SOURCES = [
    ("astronaut.png", 5),
    ("camera.png", 5),
    ("chelsea.png", 5),
    ("coffee.png", 5),
    ("coins.png", 5),
    ("rocket.jpg", 5),
    ("hubble_deep_field.jpg", 4),
    ("moon.png", 4),
    ("grass.png", 4),
    ("gravel.png", 4),
    ("brick.png", 4),
]
SIZES = [(256, 256), (240, 200), (200, 176), (256, 192), (224, 224)]


def main():
    src_dir = os.path.join(os.path.dirname(skimage.__file__), "data")
    out_dir = os.path.join(os.path.dirname(__file__), "..", "corpus", "sample")
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(20240611)
    idx = 0
    for name, count in SOURCES:
        im = Image.open(os.path.join(src_dir, name))
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        stem = os.path.splitext(name)[0]
        for k in range(count):
            w, h = SIZES[(idx + k) % len(SIZES)]
            x = int(rng.integers(0, im.width - w + 1))
            y = int(rng.integers(0, im.height - h + 1))
            crop = im.crop((x, y, x + w, y + h))
            crop.save(os.path.join(out_dir, f"{idx:02d}_{stem}_{k}.png"), optimize=True)
            idx += 1
    print(f"wrote {idx} images to {out_dir}")


if __name__ == "__main__":
    main()
