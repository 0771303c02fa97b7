"""Deterministic discrete-event comparison of redundancy schemes on tail latency.

PRNG consumption order is part of the external contract (it is what makes
golden files portable). Per batch:

* no_redundancy:  n single latencies (request order), then n classify draws.
* replication(r): r latency draws per request (request order), then n
  classify draws.
* collage:        n single latencies, 1 collage latency, n single classify
  draws, per-cell collage box draws (6 uniforms per cell), n reissue
  latencies, n reissue classify draws. Reissue draws are consumed every
  batch whether or not a reissue happens.

Each latency sample consumes 3 uniforms: straggler uniform, then the
Box-Muller pair. Truth labels are assigned round-robin (request index mod K)
and consume nothing. Trace-driven runs take single/collage latencies from
the trace instead of the stream (reissue latencies stay model-sampled); all
prediction draws keep their order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .geometry import GridSpec
from .models import MockModelParams, end_to_end_accuracy, mock_classify, mock_collage_boxes
from .protocol import (
    CollageResult,
    DeadlineTick,
    ProtocolConfig,
    SingleResult,
    Source,
    run_batch,
)
from .decoder import decode_collage
from .rng import Prng


@dataclass(frozen=True)
class LatencyModel:
    """Parametric heavy-tailed worker latency, in milliseconds.

    sample = floor + X * (m with probability p_straggler, else 1),
    X ~ LogNormal(mu, sigma).
    """

    mu: float
    sigma: float
    p_straggler: float = 0.0
    straggler_multiplier: float = 1.0
    floor: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.p_straggler <= 1.0:
            raise ValueError(f"p_straggler must be in [0,1], got {self.p_straggler}")
        if self.straggler_multiplier < 1.0:
            raise ValueError(f"straggler multiplier must be >= 1, got {self.straggler_multiplier}")
        if self.floor < 0:
            raise ValueError(f"floor must be >= 0, got {self.floor}")

    @property
    def median(self) -> float:
        """Median of the non-straggler component: floor + exp(mu)."""
        return self.floor + math.exp(self.mu)


def sample_latency(model: LatencyModel, prng: Prng) -> float:
    """One latency draw; consumes exactly 3 uniforms in documented order."""
    u_straggle = prng.next_float()
    z = prng.next_normal()
    x = math.exp(model.mu + model.sigma * z)
    if u_straggle < model.p_straggler:
        x *= model.straggler_multiplier
    return model.floor + x


def percentile_nearest_rank(values: list[float], q: float) -> float:
    """Nearest-rank percentile: element at 1-indexed rank ceil(q/100 * N)."""
    if not values:
        raise ValueError("cannot take a percentile of an empty list")
    if not 0 < q <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {q}")
    ordered = sorted(values)
    rank = math.ceil(q / 100.0 * len(ordered))
    return ordered[rank - 1]


# -- schemes -----------------------------------------------------------------


@dataclass(frozen=True)
class NoRedundancy:
    @property
    def scheme_id(self) -> str:
        return "no_redundancy"


@dataclass(frozen=True)
class Replication:
    replicas: int

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError(f"replication factor must be >= 1, got {self.replicas}")

    @property
    def scheme_id(self) -> str:
        return f"replication_{self.replicas}"


@dataclass(frozen=True)
class CollageScheme:
    protocol: ProtocolConfig
    collage_latency: LatencyModel
    collage_cost: float = 1.0  # worker-equivalents of the collage model

    def __post_init__(self):
        if self.collage_cost < 0:
            raise ValueError(f"collage_cost must be >= 0, got {self.collage_cost}")

    @property
    def scheme_id(self) -> str:
        s = self.protocol.spec.s
        return f"collage_{s}x{s}"


Scheme = NoRedundancy | Replication | CollageScheme


@dataclass(frozen=True)
class TraceData:
    """Measured per-task latencies to replay instead of sampling."""

    singles: tuple[float, ...]
    collages: tuple[float, ...]


@dataclass(frozen=True)
class Workload:
    num_batches: int
    spec: GridSpec
    single_model: LatencyModel
    mock: MockModelParams
    trace: TraceData | None = None

    def __post_init__(self):
        if self.num_batches < 1:
            raise ValueError(f"num_batches must be >= 1, got {self.num_batches}")


@dataclass(frozen=True)
class SchemeReport:
    scheme_id: str
    n_requests: int
    mean: float
    p50: float
    p95: float
    p99: float
    p999: float
    max: float
    accuracy: float
    frac_single: float
    frac_collage: float
    frac_reissue: float
    overhead: float


@dataclass
class BatchDetail:
    """Raw sample log of one collage batch, for oracle cross-checks."""

    t_singles: list[float]
    t_collage: float
    decoded_mask: list[bool]
    reissue_latencies: list[float]
    completions: list[tuple[float, Source, int]]  # (time, source, class_id)


@dataclass
class SimDetail:
    truths: list[int]
    latencies: list[float]
    sources: list[Source]
    classes: list[int]
    batches: list[BatchDetail]  # populated for collage runs only


class _TraceCursor:
    def __init__(self, trace: TraceData):
        self._singles = trace.singles
        self._collages = trace.collages
        self._si = 0
        self._ci = 0

    def next_single(self) -> float:
        if self._si >= len(self._singles):
            raise ConfigError("trace exhausted: not enough single-task rows")
        v = self._singles[self._si]
        self._si += 1
        return v

    def next_collage(self) -> float:
        if self._ci >= len(self._collages):
            raise ConfigError("trace exhausted: not enough collage-task rows")
        v = self._collages[self._ci]
        self._ci += 1
        return v


def _validate(scheme: Scheme, workload: Workload) -> None:
    if isinstance(scheme, CollageScheme) and scheme.protocol.spec != workload.spec:
        raise ConfigError(
            f"collage scheme grid {scheme.protocol.spec.s} does not match "
            f"workload grid {workload.spec.s}"
        )
    if workload.trace is not None:
        n = workload.spec.n
        need_singles = workload.num_batches * n
        if isinstance(scheme, Replication):
            need_singles *= scheme.replicas
        if len(workload.trace.singles) < need_singles:
            raise ConfigError(
                f"trace has {len(workload.trace.singles)} single rows, "
                f"need {need_singles} for {workload.num_batches} batches"
            )
        if isinstance(scheme, CollageScheme) and len(workload.trace.collages) < workload.num_batches:
            raise ConfigError(
                f"trace has {len(workload.trace.collages)} collage rows, "
                f"need {workload.num_batches}"
            )


def run_scheme(
    scheme: Scheme, workload: Workload, seed: int, keep_detail: bool = False
) -> SchemeReport | tuple[SchemeReport, SimDetail]:
    """Run one scheme over the workload; deterministic for fixed inputs."""
    _validate(scheme, workload)
    prng = Prng(seed)
    n = workload.spec.n
    k = workload.mock.num_classes
    trace = _TraceCursor(workload.trace) if workload.trace is not None else None

    detail = SimDetail(truths=[], latencies=[], sources=[], classes=[], batches=[])

    def single_latency() -> float:
        return trace.next_single() if trace else sample_latency(workload.single_model, prng)

    for b in range(workload.num_batches):
        truths = [(b * n + i) % k for i in range(n)]

        if isinstance(scheme, NoRedundancy) or isinstance(scheme, Replication):
            r = scheme.replicas if isinstance(scheme, Replication) else 1
            lats = [min(single_latency() for _ in range(r)) for _ in range(n)]
            classes = [
                mock_classify(truths[i], workload.mock.acc_single, k, prng) for i in range(n)
            ]
            sources = [Source.SINGLE] * n

        else:  # collage
            config = scheme.protocol
            t_singles = [single_latency() for _ in range(n)]
            t_collage = (
                trace.next_collage() if trace else sample_latency(scheme.collage_latency, prng)
            )
            single_classes = [
                mock_classify(truths[i], workload.mock.acc_single, k, prng) for i in range(n)
            ]
            boxes = mock_collage_boxes(truths, workload.mock, workload.spec, prng)
            reissue_lat = [sample_latency(workload.single_model, prng) for _ in range(n)]
            reissue_classes = [
                mock_classify(truths[i], workload.mock.acc_single, k, prng) for i in range(n)
            ]

            events = [
                SingleResult(i, t_singles[i], single_classes[i]) for i in range(n)
            ]
            events.append(CollageResult(t_collage, tuple(boxes)))
            events.append(DeadlineTick(config.straggler_deadline))
            events.append(DeadlineTick(config.reissue_deadline))
            replay = run_batch(
                events,
                config,
                reissue_responder=lambda i: (
                    config.reissue_deadline + reissue_lat[i],
                    reissue_classes[i],
                ),
            )
            completions = replay.completions
            assert all(c is not None for c in completions), "batch left pending requests"
            lats = [c.time for c in completions]
            classes = [c.class_id for c in completions]
            sources = [c.source for c in completions]
            if keep_detail:
                detail.batches.append(
                    BatchDetail(
                        t_singles=t_singles,
                        t_collage=t_collage,
                        decoded_mask=list(decode_collage(boxes, workload.spec).decoded_mask()),
                        reissue_latencies=reissue_lat,
                        completions=[(c.time, c.source, c.class_id) for c in completions],
                    )
                )

        detail.truths.extend(truths)
        detail.latencies.extend(lats)
        detail.sources.extend(sources)
        detail.classes.extend(classes)

    if isinstance(scheme, NoRedundancy):
        overhead = 1.0
    elif isinstance(scheme, Replication):
        overhead = float(scheme.replicas)
    else:
        overhead = (n + scheme.collage_cost) / n

    acc = end_to_end_accuracy(list(zip(detail.sources, detail.classes)), detail.truths)
    lats = detail.latencies
    report = SchemeReport(
        scheme_id=scheme.scheme_id,
        n_requests=len(lats),
        mean=sum(lats) / len(lats),
        p50=percentile_nearest_rank(lats, 50),
        p95=percentile_nearest_rank(lats, 95),
        p99=percentile_nearest_rank(lats, 99),
        p999=percentile_nearest_rank(lats, 99.9),
        max=max(lats),
        accuracy=acc.accuracy,
        frac_single=acc.source_fraction(Source.SINGLE),
        frac_collage=acc.source_fraction(Source.COLLAGE),
        frac_reissue=acc.source_fraction(Source.REISSUE),
        overhead=overhead,
    )
    if keep_detail:
        return report, detail
    return report
