"""Mock probabilistic model backends and accuracy accounting.

Stream discipline: every operation consumes a fixed number of uniforms no
matter which branch it takes, so toggling an outcome (wrong class, missed
cell) never desynchronizes later draws. mock_classify always consumes 2;
mock_collage_boxes always consumes 6 per cell (miss, jitter x, jitter y,
classify pair, confidence).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import DetectionBox, GridSpec, cell_rect
from .protocol import Source
from .rng import Prng


@dataclass(frozen=True)
class MockModelParams:
    num_classes: int
    acc_single: float
    acc_collage: float
    p_miss: float = 0.0
    box_jitter: float = 0.0  # fraction of cell size, < 0.5 keeps centers inside their cell

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.num_classes}")
        for name in ("acc_single", "acc_collage", "p_miss"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if not 0.0 <= self.box_jitter < 0.5:
            raise ValueError(f"box_jitter must be in [0, 0.5), got {self.box_jitter}")


def mock_classify(truth: int, acc: float, num_classes: int, prng: Prng) -> int:
    """Return ``truth`` with probability ``acc``, else a uniform other class.

    The wrong-class uniform is consumed even when the answer is correct.
    """
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if not 0 <= truth < num_classes:
        raise ValueError(f"truth {truth} out of range for {num_classes} classes")
    u_correct = prng.next_float()
    u_wrong = prng.next_float()
    if u_correct < acc:
        return truth
    wrong = int(u_wrong * (num_classes - 1))
    return wrong if wrong < truth else wrong + 1


def mock_collage_boxes(
    truths: list[int], params: MockModelParams, spec: GridSpec, prng: Prng
) -> list[DetectionBox]:
    """Synthesize detector-style output for one collage, cell by cell.

    Per cell: with probability p_miss no box is emitted; otherwise one box
    centered at the cell center plus uniform jitter within
    box_jitter * (1/s), extents 0.8/s, class drawn at acc_collage,
    confidence uniform in [0.5, 1].
    """
    if len(truths) != spec.n:
        raise ValueError(f"expected {spec.n} truths, got {len(truths)}")
    s = spec.s
    extent = 0.8 / s
    boxes = []
    for i, truth in enumerate(truths):
        u_miss = prng.next_float()
        u_dx = prng.next_float()
        u_dy = prng.next_float()
        class_id = mock_classify(truth, params.acc_collage, params.num_classes, prng)
        u_conf = prng.next_float()
        if u_miss < params.p_miss:
            continue  # all six draws above happened anyway
        cell = cell_rect(spec, i)
        cx = cell.x + cell.w / 2 + (2.0 * u_dx - 1.0) * params.box_jitter / s
        cy = cell.y + cell.h / 2 + (2.0 * u_dy - 1.0) * params.box_jitter / s
        boxes.append(DetectionBox(cx, cy, extent, extent, class_id, 0.5 + 0.5 * u_conf))
    return boxes


@dataclass
class AccuracyReport:
    total: int
    correct: int
    per_source: dict[Source, tuple[int, int]] = field(default_factory=dict)  # source -> (total, correct)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def source_fraction(self, source: Source) -> float:
        t, _ = self.per_source.get(source, (0, 0))
        return t / self.total if self.total else 0.0

    def source_accuracy(self, source: Source) -> float | None:
        t, c = self.per_source.get(source, (0, 0))
        return c / t if t else None


def end_to_end_accuracy(
    completions: list[tuple[Source, int]], truths: list[int]
) -> AccuracyReport:
    """Exact counting of correct answers, partitioned by serving source."""
    if len(completions) != len(truths):
        raise ValueError(f"{len(completions)} completions vs {len(truths)} truths")
    per_source: dict[Source, tuple[int, int]] = {}
    correct = 0
    for (source, class_id), truth in zip(completions, truths):
        ok = class_id == truth
        correct += ok
        t, c = per_source.get(source, (0, 0))
        per_source[source] = (t + 1, c + ok)
    return AccuracyReport(total=len(truths), correct=correct, per_source=per_source)
