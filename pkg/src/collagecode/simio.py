"""Config, trace, and report formats for the simulator.

Config is one JSON document::

    {
      "workload": {
        "num_batches": 1200,          // optional when "trace" is given
        "grid_s": 3,
        "single_latency": {"mu": ..., "sigma": ..., "p_straggler": ...,
                            "straggler_multiplier": ..., "floor": ...},
        "model": {"num_classes": ..., "acc_single": ..., "acc_collage": ...,
                   "p_miss": ..., "box_jitter": ...},
        "trace": "latencies.csv"      // optional, resolved next to the config
      },
      "schemes": [
        {"kind": "no_redundancy"},
        {"kind": "replication", "replicas": 2},
        {"kind": "collage", "collage_latency": {...}, "collage_cost": 1.0,
         "straggler_deadline": 20.0, "reissue_deadline": 60.0,
         "fill_policy": "fill_after_deadline"}
      ]
    }

Trace CSV: header ``task_id,kind,latency_ms`` with kind in {single, collage};
rows are consumed in file order, never wrapped. Report CSV: header
``scheme,N,mean,p50,p95,p99,p999,max,accuracy,frac_single,frac_collage,
frac_reissue,overhead``, floats at 6 decimals, "\\n" line endings.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .geometry import GridSpec
from .models import MockModelParams
from .protocol import FillPolicy, ProtocolConfig
from .sim import (
    CollageScheme,
    LatencyModel,
    NoRedundancy,
    Replication,
    Scheme,
    SchemeReport,
    TraceData,
    Workload,
)

REPORT_HEADER = (
    "scheme,N,mean,p50,p95,p99,p999,max,accuracy,"
    "frac_single,frac_collage,frac_reissue,overhead"
)


@dataclass(frozen=True)
class SimConfig:
    workload: Workload
    schemes: tuple[Scheme, ...]


def default_config_path() -> Path:
    """Path of the bundled default config (synthetic heavy-tail parameters)."""
    return Path(resources.files("collagecode").joinpath("configs/default.json"))


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"{where}.{key}: missing required field")
    return obj[key]


def _number(obj: dict, key: str, where: str, default=None) -> float:
    if key not in obj:
        if default is not None:
            return default
        raise ConfigError(f"{where}.{key}: missing required field")
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(obj: dict, key: str, where: str) -> int:
    v = _require(obj, key, where)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def _latency_model(obj, where: str) -> LatencyModel:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {obj!r}")
    try:
        return LatencyModel(
            mu=_number(obj, "mu", where),
            sigma=_number(obj, "sigma", where),
            p_straggler=_number(obj, "p_straggler", where, default=0.0),
            straggler_multiplier=_number(obj, "straggler_multiplier", where, default=1.0),
            floor=_number(obj, "floor", where, default=0.0),
        )
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e


def _mock_params(obj, where: str) -> MockModelParams:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {obj!r}")
    try:
        return MockModelParams(
            num_classes=_integer(obj, "num_classes", where),
            acc_single=_number(obj, "acc_single", where),
            acc_collage=_number(obj, "acc_collage", where),
            p_miss=_number(obj, "p_miss", where, default=0.0),
            box_jitter=_number(obj, "box_jitter", where, default=0.0),
        )
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e


def _scheme(obj, spec: GridSpec, where: str) -> Scheme:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {obj!r}")
    kind = _require(obj, "kind", where)
    if kind == "no_redundancy":
        return NoRedundancy()
    if kind == "replication":
        try:
            return Replication(replicas=_integer(obj, "replicas", where))
        except ValueError as e:
            raise ConfigError(f"{where}.replicas: {e}") from e
    if kind == "collage":
        policy_name = obj.get("fill_policy", FillPolicy.FILL_AFTER_DEADLINE.value)
        try:
            policy = FillPolicy(policy_name)
        except ValueError:
            raise ConfigError(
                f"{where}.fill_policy: unknown policy {policy_name!r}, expected one of "
                f"{[p.value for p in FillPolicy]}"
            ) from None
        try:
            protocol = ProtocolConfig(
                spec=spec,
                straggler_deadline=_number(obj, "straggler_deadline", where),
                reissue_deadline=_number(obj, "reissue_deadline", where),
                fill_policy=policy,
            )
        except ValueError as e:
            raise ConfigError(f"{where}: {e}") from e
        try:
            return CollageScheme(
                protocol=protocol,
                collage_latency=_latency_model(
                    _require(obj, "collage_latency", where), f"{where}.collage_latency"
                ),
                collage_cost=_number(obj, "collage_cost", where, default=1.0),
            )
        except ValueError as e:
            raise ConfigError(f"{where}: {e}") from e
    raise ConfigError(f"{where}.kind: unknown scheme kind {kind!r}")


def load_config(path) -> SimConfig:
    """Load and validate a simulation config; errors carry the field path."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON at line {e.lineno}: {e.msg}") from e
    return parse_config(doc, base_dir=path.parent)


def parse_config(doc: dict, base_dir: Path | None = None) -> SimConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root: expected an object")
    wl = _require(doc, "workload", "config")
    if not isinstance(wl, dict):
        raise ConfigError("workload: expected an object")
    grid_s = _integer(wl, "grid_s", "workload")
    try:
        spec = GridSpec(grid_s)
    except ValueError as e:
        raise ConfigError(f"workload.grid_s: {e}") from e

    trace = None
    if "trace" in wl:
        trace_path = Path(wl["trace"])
        if base_dir is not None and not trace_path.is_absolute():
            trace_path = base_dir / trace_path
        trace = read_trace_csv(trace_path)

    if "num_batches" in wl:
        num_batches = _integer(wl, "num_batches", "workload")
    elif trace is not None:
        num_batches = len(trace.singles) // spec.n
        if num_batches < 1:
            raise ConfigError(
                f"workload.trace: only {len(trace.singles)} single rows, "
                f"not enough for one {grid_s}x{grid_s} batch"
            )
    else:
        raise ConfigError("workload.num_batches: missing required field (no trace given)")

    try:
        workload = Workload(
            num_batches=num_batches,
            spec=spec,
            single_model=_latency_model(
                _require(wl, "single_latency", "workload"), "workload.single_latency"
            ),
            mock=_mock_params(_require(wl, "model", "workload"), "workload.model"),
            trace=trace,
        )
    except ValueError as e:
        raise ConfigError(f"workload: {e}") from e

    schemes_doc = _require(doc, "schemes", "config")
    if not isinstance(schemes_doc, list) or not schemes_doc:
        raise ConfigError("schemes: expected a non-empty array")
    schemes = tuple(
        _scheme(obj, spec, f"schemes[{k}]") for k, obj in enumerate(schemes_doc)
    )
    return SimConfig(workload=workload, schemes=schemes)


def read_trace_csv(path) -> TraceData:
    """Parse a latency trace: header ``task_id,kind,latency_ms``."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read trace {path}: {e}") from e
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError(f"trace {path} is empty") from None
    if header != ["task_id", "kind", "latency_ms"]:
        raise ConfigError(
            f"trace {path}: bad header {','.join(header)!r}, expected 'task_id,kind,latency_ms'"
        )
    singles, collages = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ConfigError(f"trace {path} line {lineno}: expected 3 fields, got {len(row)}")
        _, kind, latency = row
        try:
            value = float(latency)
        except ValueError:
            raise ConfigError(f"trace {path} line {lineno}: bad latency {latency!r}") from None
        if value <= 0:
            raise ConfigError(f"trace {path} line {lineno}: latency must be positive, got {value}")
        if kind == "single":
            singles.append(value)
        elif kind == "collage":
            collages.append(value)
        else:
            raise ConfigError(f"trace {path} line {lineno}: unknown kind {kind!r}")
    return TraceData(singles=tuple(singles), collages=tuple(collages))


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def report_row(r: SchemeReport) -> str:
    return ",".join(
        [
            r.scheme_id,
            str(r.n_requests),
            _fmt(r.mean),
            _fmt(r.p50),
            _fmt(r.p95),
            _fmt(r.p99),
            _fmt(r.p999),
            _fmt(r.max),
            _fmt(r.accuracy),
            _fmt(r.frac_single),
            _fmt(r.frac_collage),
            _fmt(r.frac_reissue),
            _fmt(r.overhead),
        ]
    )


def write_report_csv(reports: list[SchemeReport]) -> str:
    lines = [REPORT_HEADER]
    lines.extend(report_row(r) for r in reports)
    return "\n".join(lines) + "\n"


def parse_report_csv(text: str) -> list[SchemeReport]:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or lines[0] != REPORT_HEADER:
        got = lines[0] if lines else "<empty>"
        raise ValueError(f"bad report header {got!r}")
    reports = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 13:
            raise ValueError(f"report line {lineno}: expected 13 fields, got {len(fields)}")
        try:
            reports.append(
                SchemeReport(
                    scheme_id=fields[0],
                    n_requests=int(fields[1]),
                    mean=float(fields[2]),
                    p50=float(fields[3]),
                    p95=float(fields[4]),
                    p99=float(fields[5]),
                    p999=float(fields[6]),
                    max=float(fields[7]),
                    accuracy=float(fields[8]),
                    frac_single=float(fields[9]),
                    frac_collage=float(fields[10]),
                    frac_reissue=float(fields[11]),
                    overhead=float(fields[12]),
                )
            )
        except ValueError as e:
            raise ValueError(f"report line {lineno}: {e}") from e
    return reports
