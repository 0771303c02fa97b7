"""Summaries of scheme reports: CSV aggregation across runs and a static SVG chart.

Charts are reports, not an operator console: one bar group per scheme
(p50/p95/p99/p999), labeled axes, schemes ordered no_redundancy,
replication, collage.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from collections import defaultdict

from .sim import SchemeReport

_PERCENTILE_FIELDS = ("p50", "p95", "p99", "p999")
_BAR_COLORS = ("#4878a8", "#6aa84f", "#e69138", "#cc4125")


def _kind_rank(scheme_id: str) -> tuple[int, str]:
    if scheme_id.startswith("no_redundancy"):
        rank = 0
    elif scheme_id.startswith("replication"):
        rank = 1
    elif scheme_id.startswith("collage"):
        rank = 2
    else:
        rank = 3
    return (rank, scheme_id)


def order_reports(reports: list[SchemeReport]) -> list[SchemeReport]:
    return sorted(reports, key=lambda r: _kind_rank(r.scheme_id))


def aggregate_reports(reports: list[SchemeReport]) -> list[SchemeReport]:
    """Mean of every numeric column per scheme id; N sums across runs."""
    groups: dict[str, list[SchemeReport]] = defaultdict(list)
    for r in reports:
        groups[r.scheme_id].append(r)
    out = []
    for scheme_id, rows in groups.items():
        k = len(rows)
        out.append(
            SchemeReport(
                scheme_id=scheme_id,
                n_requests=sum(r.n_requests for r in rows),
                mean=sum(r.mean for r in rows) / k,
                p50=sum(r.p50 for r in rows) / k,
                p95=sum(r.p95 for r in rows) / k,
                p99=sum(r.p99 for r in rows) / k,
                p999=sum(r.p999 for r in rows) / k,
                max=sum(r.max for r in rows) / k,
                accuracy=sum(r.accuracy for r in rows) / k,
                frac_single=sum(r.frac_single for r in rows) / k,
                frac_collage=sum(r.frac_collage for r in rows) / k,
                frac_reissue=sum(r.frac_reissue for r in rows) / k,
                overhead=sum(r.overhead for r in rows) / k,
            )
        )
    return order_reports(out)


def render_percentile_svg(reports: list[SchemeReport]) -> str:
    """Grouped latency-percentile bars, one group per scheme."""
    if not reports:
        raise ValueError("nothing to chart: no report rows")
    reports = order_reports(reports)

    margin_left, margin_right = 70.0, 30.0
    margin_top, margin_bottom = 40.0, 70.0
    group_w = 120.0
    plot_h = 300.0
    width = margin_left + margin_right + group_w * len(reports)
    height = margin_top + plot_h + margin_bottom

    peak = max(getattr(r, f) for r in reports for f in _PERCENTILE_FIELDS)
    y_max = peak * 1.05 if peak > 0 else 1.0

    def y_of(v: float) -> float:
        return margin_top + plot_h * (1.0 - v / y_max)

    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=f"{width:.0f}",
        height=f"{height:.0f}",
        viewBox=f"0 0 {width:.0f} {height:.0f}",
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=f"{width:.0f}", height=f"{height:.0f}", fill="white")
    title = ET.SubElement(
        svg, "text", x=f"{width / 2:.1f}", y="22",
        fill="black", **{"font-size": "15", "text-anchor": "middle", "font-family": "sans-serif"},
    )
    title.text = "Latency percentiles per scheme"

    # axes
    x0, x1 = margin_left, width - margin_right
    y0, y1 = margin_top + plot_h, margin_top
    ET.SubElement(svg, "line", x1=f"{x0:.1f}", y1=f"{y0:.1f}", x2=f"{x1:.1f}", y2=f"{y0:.1f}", stroke="black")
    ET.SubElement(svg, "line", x1=f"{x0:.1f}", y1=f"{y0:.1f}", x2=f"{x0:.1f}", y2=f"{y1:.1f}", stroke="black")
    axis_label = ET.SubElement(
        svg, "text", x="18", y=f"{margin_top + plot_h / 2:.1f}",
        fill="black",
        **{
            "font-size": "12",
            "text-anchor": "middle",
            "font-family": "sans-serif",
            "transform": f"rotate(-90 18 {margin_top + plot_h / 2:.1f})",
        },
    )
    axis_label.text = "latency (ms)"

    for k in range(5):
        v = y_max * k / 4
        yy = y_of(v)
        ET.SubElement(svg, "line", x1=f"{x0 - 4:.1f}", y1=f"{yy:.1f}", x2=f"{x0:.1f}", y2=f"{yy:.1f}", stroke="black")
        tick = ET.SubElement(
            svg, "text", x=f"{x0 - 8:.1f}", y=f"{yy + 4:.1f}",
            fill="black", **{"font-size": "11", "text-anchor": "end", "font-family": "sans-serif"},
        )
        tick.text = f"{v:.1f}"

    bar_w = group_w / (len(_PERCENTILE_FIELDS) + 1)
    for gi, r in enumerate(reports):
        gx = margin_left + gi * group_w
        group = ET.SubElement(svg, "g", **{"class": "scheme-group", "data-scheme": r.scheme_id})
        for bi, field in enumerate(_PERCENTILE_FIELDS):
            v = getattr(r, field)
            bx = gx + bar_w * (bi + 0.5)
            by = y_of(v)
            ET.SubElement(
                group, "rect",
                x=f"{bx:.1f}", y=f"{by:.1f}",
                width=f"{bar_w * 0.9:.1f}", height=f"{y0 - by:.1f}",
                fill=_BAR_COLORS[bi],
            )
        label = ET.SubElement(
            svg, "text", x=f"{gx + group_w / 2:.1f}", y=f"{y0 + 18:.1f}",
            fill="black", **{"font-size": "11", "text-anchor": "middle", "font-family": "sans-serif"},
        )
        label.text = r.scheme_id

    # legend
    for bi, field in enumerate(_PERCENTILE_FIELDS):
        lx = margin_left + bi * 70.0
        ly = height - 24.0
        ET.SubElement(svg, "rect", x=f"{lx:.1f}", y=f"{ly:.1f}", width="12", height="12", fill=_BAR_COLORS[bi])
        txt = ET.SubElement(
            svg, "text", x=f"{lx + 17:.1f}", y=f"{ly + 10:.1f}",
            fill="black", **{"font-size": "11", "font-family": "sans-serif"},
        )
        txt.text = field

    return ET.tostring(svg, encoding="unicode") + "\n"


def format_table(reports: list[SchemeReport]) -> str:
    """Human-readable percentile table for terminal output."""
    header = (
        f"{'scheme':<16} {'N':>7} {'mean':>9} {'p50':>9} {'p95':>9} "
        f"{'p99':>9} {'p99.9':>9} {'max':>9} {'acc':>7} {'ovh':>6}"
    )
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.scheme_id:<16} {r.n_requests:>7} {r.mean:>9.3f} {r.p50:>9.3f} "
            f"{r.p95:>9.3f} {r.p99:>9.3f} {r.p999:>9.3f} {r.max:>9.3f} "
            f"{r.accuracy:>7.4f} {r.overhead:>6.3f}"
        )
    return "\n".join(lines)
