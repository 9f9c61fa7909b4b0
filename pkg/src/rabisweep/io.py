"""Serialization: CSV result tables, run manifests, and self-contained SVG plots.

CSV layout is fixed: one line per (grid point, label), floats at 9 significant
digits, UTF-8 with LF line endings. Wall-clock times live only in the manifest
so identical configurations produce byte-identical CSVs.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError
from .experiments import ResultTable
from .model import BasisLabel

CSV_HEADER = "scan_value,label_scheme,qubit_label,n,probability,oracle_probability,abs_dev,converged"

# Paper-style curve palette; the survival label is red, climbing levels follow.
_PALETTE = ("#228b22", "#1f4fd8", "#c71585", "#00b7c7", "#ff8c00", "#808000",
            "#8b4513", "#4b0082", "#2f4f4f", "#b22222")
_SURVIVAL_COLOR = "#d62728"


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _photons_str(photons) -> str:
    if isinstance(photons, tuple):
        return ";".join(str(n) for n in photons)
    return str(photons)


def _photons_parse(text: str):
    if ";" in text:
        return tuple(int(t) for t in text.split(";"))
    return int(text)


def render_result_csv(table: ResultTable) -> str:
    lines = [CSV_HEADER]
    for row in table.rows:
        sim = {r.label: r.probability for r in (row.sim or ())}
        oracle = {r.label: r.probability for r in (row.oracle or ())}
        labels = list(dict.fromkeys([*sim, *oracle]))
        for lab in labels:
            p_sim = sim.get(lab)
            p_or = oracle.get(lab)
            dev = abs(p_sim - p_or) if (p_sim is not None and p_or is not None) else None
            lines.append(
                ",".join(
                    (
                        _fmt(row.scan_value),
                        lab.scheme,
                        lab.qubit,
                        _photons_str(lab.photons),
                        _fmt(p_sim) if p_sim is not None else "",
                        _fmt(p_or) if p_or is not None else "",
                        _fmt(dev) if dev is not None else "",
                        "true" if row.converged else "false",
                    )
                )
            )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CsvRecord:
    scan_value: float
    label: BasisLabel
    probability: float | None
    oracle_probability: float | None
    abs_dev: float | None
    converged: bool


def parse_result_csv(text: str) -> list[CsvRecord]:
    lines = text.strip("\n").split("\n")
    if not lines or lines[0] != CSV_HEADER:
        raise InvalidParameterError("unrecognized result-table header")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 8:
            raise InvalidParameterError(f"malformed result row: {line!r}")
        sv, scheme, qubit, n, p, po, dev, conv = parts
        records.append(
            CsvRecord(
                float(sv),
                BasisLabel(scheme, qubit, _photons_parse(n)),
                float(p) if p else None,
                float(po) if po else None,
                float(dev) if dev else None,
                conv == "true",
            )
        )
    return records


def read_result_table(path: str | Path) -> list[CsvRecord]:
    return parse_result_csv(Path(path).read_text(encoding="utf-8"))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_result_table(
    table: ResultTable, out_dir: str | Path, name: str | None = None
) -> list[Path]:
    """Write one CSV plus its run manifest; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = name or table.spec.kind
    csv_path = out / f"{name}.csv"
    payload = render_result_csv(table).encode("utf-8")
    with open(csv_path, "wb") as fh:
        fh.write(payload)
    manifest = {
        "name": name,
        "version": table.provenance.get("version"),
        "config": {
            "kind": table.spec.kind,
            "scan_name": table.spec.scan_name,
            "scan_values": [float(v) for v in table.spec.scan_values],
            "n_steps": table.spec.n_steps,
            "truncation": table.provenance.get("truncation"),
            "options": {k: _jsonable(v) for k, v in table.spec.options.items()},
        },
        "provenance": {k: _jsonable(v) for k, v in table.provenance.items()},
        "convergence": {
            _fmt(row.scan_value): bool(row.converged) for row in table.rows
        },
        "warnings": {
            _fmt(row.scan_value): list(row.warnings) for row in table.rows if row.warnings
        },
        "checksums": {csv_path.name: _sha256(payload)},
        "written_at_unix": time.time(),
    }
    manifest_path = out / f"{name}_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [csv_path, manifest_path]


def _jsonable(value):
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

def _decade_bounds(values: np.ndarray) -> tuple[float, float]:
    lo = math.floor(math.log10(values.min()))
    hi = math.ceil(math.log10(values.max()))
    if hi == lo:
        hi = lo + 1
    return float(lo), float(hi)


def _color_for(label: BasisLabel, index: int) -> str:
    if label.qubit in ("down", "-", "left") and label.photons in (0, (0,), (0, 0)):
        return _SURVIVAL_COLOR
    if label.qubit in ("up", "+", "right") and isinstance(label.photons, int) and label.photons < len(_PALETTE):
        return _PALETTE[label.photons]
    return _PALETTE[index % len(_PALETTE)]


def emit_svg(
    table: ResultTable,
    labels: list[BasisLabel],
    out_dir: str | Path,
    name: str | None = None,
) -> Path | None:
    """Render requested labels as log-x probability curves; one polyline each.

    The x range snaps to the surrounding decade boundaries of the scan grid.
    Degenerate single-point grids are skipped with a warning.
    """
    scan = np.array([row.scan_value for row in table.rows], dtype=float)
    if len(scan) < 2:
        warnings.warn("single-point grid: skipping SVG output", stacklevel=2)
        return None
    if np.any(scan <= 0):
        warnings.warn("non-positive scan values: log-x plot skipped", stacklevel=2)
        return None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = name or table.spec.kind
    path = out / f"{name}.svg"

    width, height = 720, 460
    ml, mr, mt, mb = 70, 190, 20, 50
    plot_w, plot_h = width - ml - mr, height - mt - mb
    lo, hi = _decade_bounds(scan)

    def x_px(v: float) -> float:
        return ml + (math.log10(v) - lo) / (hi - lo) * plot_w

    def y_px(p: float) -> float:
        return mt + (1.0 - min(max(p, 0.0), 1.0)) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
    ]
    for d in range(int(lo), int(hi) + 1):
        x = x_px(10.0**d)
        parts.append(
            f'<line x1="{x:.1f}" y1="{mt + plot_h}" x2="{x:.1f}" y2="{mt + plot_h + 6}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{mt + plot_h + 22}" font-size="12" text-anchor="middle">1e{d}</text>'
        )
    for frac in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        y = y_px(frac)
        parts.append(f'<line x1="{ml - 6}" y1="{y:.1f}" x2="{ml}" y2="{y:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{ml - 10}" y="{y + 4:.1f}" font-size="12" text-anchor="end">{frac:.1f}</text>'
        )
    parts.append(
        f'<text x="{ml + plot_w / 2:.1f}" y="{height - 12}" font-size="13" '
        f'text-anchor="middle">{table.spec.scan_name}</text>'
    )

    for i, lab in enumerate(labels):
        col = table.column(lab, "sim")
        if np.all(np.isnan(col)):
            col = table.column(lab, "oracle")
        ok = ~np.isnan(col)
        if not ok.any():
            continue
        pts = " ".join(f"{x_px(v):.2f},{y_px(pv):.2f}" for v, pv in zip(scan[ok], col[ok]))
        color = _color_for(lab, i)
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{pts}"/>'
        )
        ly = mt + 16 + 18 * i
        lx = ml + plot_w + 14
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 30}" y="{ly}" font-size="12">{lab.scheme} {lab}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Flat key=value config files
# ---------------------------------------------------------------------------

def parse_config_file(path: str | Path) -> dict[str, str]:
    """key = value lines; '#' starts a comment; later keys win."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
