"""Walkthrough: compose a collage, synthesize detector output, decode it back.

Builds nine colored tiles, packs them into a 3x3 collage PPM, fakes the boxes
a collage model would emit, and shows the decoder recovering one class per
original image. Run from the repo root:

    python demos/01_collage_roundtrip.py
"""

from pathlib import Path

from collagecode import (
    CollageLayout,
    GridSpec,
    RasterImage,
    compose_collage,
    decode_collage,
    mock_collage_boxes,
    write_ppm_file,
)
from collagecode.models import MockModelParams
from collagecode.rng import Prng

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

spec = GridSpec(3)
print(f"grid: {spec.s}x{spec.s} -> {spec.n} images per collage")

# nine tiles, each a distinct gray so the quadrants are easy to eyeball
tiles = [RasterImage.uniform(32, 32, (28 * i, 28 * i, 28 * i)) for i in range(spec.n)]
layout = CollageLayout(spec, cell_w=32, cell_h=32)
collage = compose_collage(tiles, layout)
write_ppm_file(out_dir / "collage.ppm", collage)
print(f"wrote {out_dir / 'collage.ppm'} ({collage.width}x{collage.height})")

# pretend the collage model looked at it: one box per cell, some jitter,
# occasionally wrong class
truths = list(range(spec.n))
params = MockModelParams(num_classes=10, acc_single=0.97, acc_collage=0.9, p_miss=0.1, box_jitter=0.2)
boxes = mock_collage_boxes(truths, params, spec, Prng(7))
print(f"collage model emitted {len(boxes)} boxes (p_miss drops some cells)")

decoded = decode_collage(boxes, spec)
print("\ncell  truth  decoded")
for i, slot in enumerate(decoded.slots):
    shown = "MISSING" if slot is None else f"{slot.class_id} (conf {slot.confidence:.2f})"
    print(f"{i:>4}  {truths[i]:>5}  {shown}")
