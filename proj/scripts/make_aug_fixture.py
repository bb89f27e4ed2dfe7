#!/usr/bin/env python3
"""Builds the small augmentation fixture: three PPM images plus annotations.

Pixels follow a fixed per-channel gradient so any resampling bug shows up
as a byte diff. Box coordinates are dyadic rationals, so affine box maps
round-trip exactly through the center-form representation. The layout is
chosen so a +width/4 translation exercises all three outcomes: fully
inside, clipped at the right edge, and dropped entirely.

Usage: python3 scripts/make_aug_fixture.py [out_dir]
"""

import json
import sys
from pathlib import Path

IMAGES = [
    {"image_id": 0, "path": "sign_a.ppm", "width": 32, "height": 24},
    {"image_id": 1, "path": "sign_b.ppm", "width": 40, "height": 32},
    {"image_id": 2, "path": "sign_c.ppm", "width": 28, "height": 28},
]

# (image_id, class, x_min, y_min, x_max, y_max); y_min values are unique
# per (image, class) so tests can key boxes by them.
GROUND_TRUTHS = [
    (0, "stop", 4.0, 6.0, 14.0, 12.0),       # +8 -> fully inside
    (0, "warning", 18.0, 3.0, 30.0, 20.0),   # +8 -> clipped at x=32
    (0, "stop", 26.0, 14.0, 31.0, 22.0),     # +8 -> shifted out, dropped
    (1, "stop", 2.5, 4.5, 20.5, 16.5),       # +10, half-pixel corners
    (1, "warning", 8.0, 20.0, 36.0, 30.0),   # +10 -> clipped at x=40
    (2, "stop", 6.0, 8.0, 18.0, 24.0),       # +7 -> fully inside
    (2, "warning", 1.0, 2.0, 9.0, 10.0),     # +7 -> fully inside
    (2, "warning", 20.0, 12.0, 27.0, 26.0),  # +7 -> one-pixel sliver left
]


def write_ppm(path, w, h):
    raster = bytearray()
    for y in range(h):
        for x in range(w):
            for c in range(3):
                raster.append((x * 7 + y * 13 + c * 29) % 256)
    path.write_bytes(f"P6\n{w} {h}\n255\n".encode() + bytes(raster))


def main():
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "data/aug_fixture")
    out_dir.mkdir(parents=True, exist_ok=True)
    for img in IMAGES:
        write_ppm(out_dir / img["path"], img["width"], img["height"])
    annotations = {
        "categories": ["stop", "warning"],
        "images": IMAGES,
        "ground_truths": [
            {"image_id": i, "class": cls, "x_min": x0, "y_min": y0,
             "x_max": x1, "y_max": y1}
            for i, cls, x0, y0, x1, y1 in GROUND_TRUTHS
        ],
    }
    (out_dir / "annotations.json").write_text(
        json.dumps(annotations, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir}: {len(IMAGES)} images, {len(GROUND_TRUTHS)} boxes")


if __name__ == "__main__":
    main()
