"""CSV and SVG renderings of spectrum and census reports."""

from __future__ import annotations

import csv
import io
from xml.sax.saxutils import escape

from .spectrum import SpectrumReport

SPECTRUM_COLUMNS = ("record", "index", "lo", "hi", "status", "energy", "energy_approx", "sign",
                    "residual", "gap_index", "exact", "bracket", "factor")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, list):
        return " ".join(_fmt(t) for t in x)
    return str(x)


def spectrum_rows(d: dict) -> list[dict]:
    """Flat CSV rows for a SpectrumReport dictionary (see ``SpectrumReport.to_dict``)."""
    rows = [{"record": "meta", "status": f"{d['model']} p={d['p']} {d['backend']}"}]
    for i, b in enumerate(d["bands"], 1):
        rows.append({"record": "band", "index": i, "lo": b["lo"], "hi": b["hi"]})
    for i, gp in enumerate(d["gaps"], 1):
        rows.append({"record": "gap", "index": i, "lo": gp["lo"], "hi": gp["hi"],
                     "status": gp["status"]})
    for i, ct in enumerate(d["closed_gaps"], 1):
        row = {"record": "closed_gap", "index": i}
        row.update(ct)
        rows.append(row)
    rows.append({"record": "g", "index": d["g"]})
    return rows


def spectrum_csv(rep: SpectrumReport | dict) -> str:
    d = rep.to_dict() if isinstance(rep, SpectrumReport) else rep
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SPECTRUM_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in spectrum_rows(d):
        w.writerow({k: _fmt(row.get(k)) for k in SPECTRUM_COLUMNS})
    return buf.getvalue()


def _scalar(text: str):
    """Inverse of ``_fmt`` for one energy-like cell: num/den strings stay strings."""
    if "/" in text or text.lstrip("-").isdigit():
        return text
    return float(text)


def parse_spectrum_csv(text: str) -> dict:
    """Rebuild the JSON-shaped report from ``spectrum_csv`` output."""
    out = {"bands": [], "gaps": [], "closed_gaps": [], "g": None}
    for row in csv.DictReader(io.StringIO(text)):
        rec = row["record"]
        if rec == "meta":
            model, p, backend = row["status"].split()
            out.update(model=model, p=int(p[2:]), backend=backend)
        elif rec == "band":
            out["bands"].append({"lo": float(row["lo"]), "hi": float(row["hi"])})
        elif rec == "gap":
            out["gaps"].append({"lo": float(row["lo"]), "hi": float(row["hi"]),
                                "status": row["status"]})
        elif rec == "closed_gap":
            ct = {"energy": _scalar(row["energy"]), "energy_approx": float(row["energy_approx"]),
                  "sign": int(row["sign"]), "residual": float(row["residual"]),
                  "gap_index": int(row["gap_index"]), "exact": row["exact"] == "true"}
            if row["bracket"]:
                ct["bracket"] = row["bracket"].split()
            if row["factor"]:
                ct["factor"] = row["factor"].split()
            out["closed_gaps"].append(ct)
        elif rec == "g":
            out["g"] = int(row["index"])
    return out


def rows_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(row.get(k)) for k in columns})
    return buf.getvalue()


def census_csv(d: dict) -> str:
    rows = [{"count": k, "frequency": v} for k, v in d["histogram"].items()]
    return rows_csv(rows, ["count", "frequency"])


def band_svg(rep: SpectrumReport, title: str = "", width: int = 800, height: int = 140) -> str:
    """Static band diagram: bands as bars on an energy axis, closed gaps as diamonds."""
    lo, hi = rep.bands[0].lo, rep.bands[-1].hi
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    x0, x1 = lo - pad, hi + pad
    margin = 40

    def X(E: float) -> str:
        return f"{margin + (E - x0) / (x1 - x0) * (width - 2 * margin):.3f}"

    axis_y, bar_y, bar_h = height - 40, height - 80, 24
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{margin}" y="20" font-family="sans-serif" font-size="13">'
                   f'{escape(title)}</text>')
    out.append(f'<line x1="{margin}" y1="{axis_y}" x2="{width - margin}" y2="{axis_y}" '
               f'stroke="black" stroke-width="1"/>')
    for b in rep.bands:
        w = float(X(b.hi)) - float(X(b.lo))
        out.append(f'<rect class="band" x="{X(b.lo)}" y="{bar_y}" width="{w:.3f}" '
                   f'height="{bar_h}" fill="#4a78b5" stroke="#1f3d66" stroke-width="0.5"/>')
    for ct in rep.closed_gaps:
        cx, cy, r = float(X(ct.energy)), bar_y + bar_h / 2, 7
        pts = f"{cx:.3f},{cy - r:.3f} {cx + r:.3f},{cy:.3f} {cx:.3f},{cy + r:.3f} {cx - r:.3f},{cy:.3f}"
        out.append(f'<polygon class="closed-gap" points="{pts}" fill="#d9412b" stroke="black" '
                   f'stroke-width="0.5"/>')
    for E in (lo, hi):
        out.append(f'<line x1="{X(E)}" y1="{axis_y}" x2="{X(E)}" y2="{axis_y + 5}" stroke="black"/>')
        out.append(f'<text x="{X(E)}" y="{axis_y + 18}" font-family="sans-serif" font-size="11" '
                   f'text-anchor="middle">{E:.4g}</text>')
    out.append(f'<text x="{width - margin}" y="{axis_y + 32}" font-family="sans-serif" '
               f'font-size="11" text-anchor="end">E</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
