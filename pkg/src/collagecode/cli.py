"""Command-line surface: encode collages, decode box files, simulate, report, serve.

Exit codes: 0 success, 1 usage error (bad flags/arity), 2 data or protocol
error (unreadable/malformed inputs, invalid config).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bridge import dispatch_live, events_to_jsonl
from .codec import CollageLayout, compose_collage, read_ppm_file, write_ppm_file
from .decoder import decode_collage, parse_boxes_json
from .errors import ConfigError, PpmParseError, ProtocolError, WireProtocolError
from .geometry import GridSpec
from .protocol import FillPolicy, ProtocolConfig
from .report import aggregate_reports, format_table, order_reports, render_percentile_svg
from .sim import run_scheme
from .simio import default_config_path, load_config, parse_report_csv, write_report_csv


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _parse_cell(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise _UsageError(f"bad --cell {text!r}, expected WxH like 64x64")
    try:
        w, h = int(parts[0]), int(parts[1])
    except ValueError:
        raise _UsageError(f"bad --cell {text!r}, expected WxH like 64x64") from None
    if w < 1 or h < 1:
        raise _UsageError(f"--cell dimensions must be positive, got {text}")
    return w, h


def cmd_encode(args) -> int:
    spec = GridSpec(args.grid)
    if len(args.images) != spec.n:
        print(
            f"error: a {spec.s}x{spec.s} collage needs exactly {spec.n} images, "
            f"got {len(args.images)}",
            file=sys.stderr,
        )
        return 1
    cell_w, cell_h = _parse_cell(args.cell)
    images = []
    for path in args.images:
        try:
            images.append(read_ppm_file(path))
        except (OSError, PpmParseError) as e:
            raise ConfigError(f"{path}: {e}") from e
    collage = compose_collage(images, CollageLayout(spec, cell_w, cell_h))
    write_ppm_file(args.out, collage)
    return 0


def cmd_decode(args) -> int:
    spec = GridSpec(args.grid)
    try:
        text = Path(args.boxes_file).read_text()
    except OSError as e:
        raise ConfigError(f"{args.boxes_file}: {e}") from e
    boxes = parse_boxes_json(text)
    decoded = decode_collage(boxes, spec, min_confidence=args.min_confidence)
    lines = ["cell,class_id,confidence"]
    for i, slot in enumerate(decoded.slots):
        if slot is None:
            lines.append(f"{i},MISSING,")
        else:
            lines.append(f"{i},{slot.class_id},{slot.confidence:.6f}")
    out = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_simulate(args) -> int:
    config_path = args.config if args.config else default_config_path()
    cfg = load_config(config_path)
    reports = [run_scheme(scheme, cfg.workload, args.seed) for scheme in cfg.schemes]
    csv_text = write_report_csv(reports)
    if args.out:
        Path(args.out).write_text(csv_text, newline="")
        print(format_table(reports))
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_report(args) -> int:
    try:
        text = Path(args.input).read_text()
    except OSError as e:
        raise ConfigError(f"{args.input}: {e}") from e
    reports = parse_report_csv(text)
    if args.format == "csv":
        out = write_report_csv(aggregate_reports(reports))
    else:
        out = render_percentile_svg(reports)
    if args.out:
        Path(args.out).write_text(out, newline="")
    else:
        sys.stdout.write(out)
    return 0


def _resolve(base: Path, value: str) -> str:
    p = Path(value)
    return str(p if p.is_absolute() else base / p)


def load_serve_config(path) -> dict:
    """Validate the serve config document; returns plain resolved fields."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read serve config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"serve config {path} is not valid JSON at line {e.lineno}: {e.msg}") from e
    base = path.parent
    if not isinstance(doc, dict):
        raise ConfigError("serve config root: expected an object")

    def need(key):
        if key not in doc:
            raise ConfigError(f"serve config: missing required field {key!r}")
        return doc[key]

    grid_s = need("grid_s")
    try:
        spec = GridSpec(grid_s)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"serve config grid_s: {e}") from e
    images = need("images")
    if not isinstance(images, list) or len(images) != spec.n:
        raise ConfigError(f"serve config images: expected a list of {spec.n} paths")
    images = [_resolve(base, p) for p in images]

    if "single_backends" in doc:
        single_cmds = doc["single_backends"]
        if not isinstance(single_cmds, list) or len(single_cmds) != spec.n:
            raise ConfigError(f"serve config single_backends: expected {spec.n} command lines")
    else:
        cmd = need("single_backend")
        if not isinstance(cmd, list) or not cmd:
            raise ConfigError("serve config single_backend: expected a non-empty command line")
        single_cmds = [list(cmd) for _ in range(spec.n)]
    collage_cmd = need("collage_backend")
    if not isinstance(collage_cmd, list) or not collage_cmd:
        raise ConfigError("serve config collage_backend: expected a non-empty command line")

    try:
        policy = FillPolicy(doc.get("fill_policy", FillPolicy.FILL_AFTER_DEADLINE.value))
    except ValueError:
        raise ConfigError(
            f"serve config fill_policy: unknown policy {doc.get('fill_policy')!r}"
        ) from None
    try:
        protocol = ProtocolConfig(
            spec=spec,
            straggler_deadline=float(need("straggler_deadline")),
            reissue_deadline=float(need("reissue_deadline")),
            fill_policy=policy,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"serve config deadlines: {e}") from e

    cell = doc.get("cell", [64, 64])
    if not (isinstance(cell, list) and len(cell) == 2 and all(isinstance(v, int) and v > 0 for v in cell)):
        raise ConfigError(f"serve config cell: expected [width, height], got {cell!r}")

    return {
        "protocol": protocol,
        "images": images,
        "single_cmds": single_cmds,
        "collage_cmd": list(collage_cmd),
        "cell": (cell[0], cell[1]),
        "reissue_timeout": float(doc["reissue_timeout"]) if "reissue_timeout" in doc else None,
        "event_log": _resolve(base, doc["event_log"]) if "event_log" in doc else None,
        "collage_image_out": _resolve(base, doc["collage_image_out"]) if "collage_image_out" in doc else None,
    }


def cmd_serve(args) -> int:
    if not args.config:
        raise ConfigError("serve needs --config")
    cfg = load_serve_config(args.config)
    result = dispatch_live(
        image_paths=cfg["images"],
        single_cmds=cfg["single_cmds"],
        collage_cmd=cfg["collage_cmd"],
        config=cfg["protocol"],
        cell_w=cfg["cell"][0],
        cell_h=cfg["cell"][1],
        reissue_timeout=cfg["reissue_timeout"],
        collage_image_out=cfg["collage_image_out"],
    )
    lines = ["request,source,class_id,time_ms,error"]
    for c in result.completions:
        source = c.source.value if c.source else ""
        class_id = c.class_id if c.class_id is not None else ""
        time_ms = f"{c.time_ms:.3f}" if c.time_ms is not None else ""
        lines.append(f"{c.request},{source},{class_id},{time_ms},{c.error or ''}")
    out = "\n".join(lines) + "\n"
    sys.stdout.write(out)
    print(f"replay sources match: {'yes' if result.replay_matches else 'no'}")
    for err in result.backend_errors:
        print(f"backend: {err}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(out, newline="")
    if cfg["event_log"]:
        Path(cfg["event_log"]).write_text(events_to_jsonl(result.events), newline="")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="collagecode", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("encode", help="compose s*s PPM images into one collage PPM")
    p.add_argument("--grid", type=int, required=True, metavar="S")
    p.add_argument("--cell", default="64x64", metavar="WxH")
    p.add_argument("--out", required=True)
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="map a detection-box JSON file to per-cell predictions")
    p.add_argument("--grid", type=int, required=True, metavar="S")
    p.add_argument("--min-confidence", type=float, default=0.0)
    p.add_argument("--out")
    p.add_argument("boxes_file")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="compare redundancy schemes on a synthetic or traced workload")
    p.add_argument("--config", help="config JSON (bundled default when omitted)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="write the report CSV here (and print a table)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="aggregate report CSVs or chart them as SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="dispatch one live batch against external backends")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="also write the completions CSV here")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ConfigError, PpmParseError, WireProtocolError, ProtocolError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
