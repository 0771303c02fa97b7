"""Walkthrough: the headline comparison — tail latency under three schemes.

Runs the bundled heavy-tail workload (9-image batches, 5% stragglers at 5x
slowdown) under no redundancy, full replication, and collage coding, then
prints the percentile table and writes the SVG chart.

    python demos/03_scheme_comparison.py
"""

from pathlib import Path

from collagecode import run_scheme
from collagecode.report import format_table, render_percentile_svg
from collagecode.simio import default_config_path, load_config, write_report_csv

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

cfg = load_config(default_config_path())
n = cfg.workload.spec.n
print(f"workload: {cfg.workload.num_batches} batches of {n} requests, "
      f"{cfg.workload.single_model.p_straggler:.0%} stragglers at "
      f"{cfg.workload.single_model.straggler_multiplier:.0f}x\n")

reports = [run_scheme(scheme, cfg.workload, seed=42) for scheme in cfg.schemes]
print(format_table(reports))

base = next(r for r in reports if r.scheme_id == "no_redundancy")
col = next(r for r in reports if r.scheme_id.startswith("collage"))
rep = next(r for r in reports if r.scheme_id.startswith("replication"))
print(f"\ncollage p99 is {col.p99 / base.p99:.2f}x the unprotected p99 "
      f"at {col.overhead:.3f} worker-equivalents per request")
print(f"replication gets {rep.p99 / base.p99:.2f}x but costs {rep.overhead:.1f}x")

(out_dir / "comparison.csv").write_text(write_report_csv(reports), newline="")
(out_dir / "comparison.svg").write_text(render_percentile_svg(reports), newline="")
print(f"\nwrote {out_dir / 'comparison.csv'} and {out_dir / 'comparison.svg'}")
