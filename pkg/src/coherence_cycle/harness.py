"""Parameter sweeps, comparison against the reference tables, and SVG plots."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .channels import ChiMatrix, depolarized_cnot
from .measures import coherence_rel_ent, discord_rel_ent, qi_rel_ent
from .protocol import (
    CycleInput,
    MeasurementBasis,
    abs_a_for_coherence,
    convert,
    measure_ancilla,
    run_cycle,
    with_blank_ancilla,
)
from .reference import ReferenceTable, load_table
from .tomography import TomographyConfig, complete_settings, mle_state, simulate_counts

SWEEP_COLUMNS = ("key", "c_initial", "discord", "qi_rel_ent", "c_final", "p_plus", "p_minus")
DEFAULT_MAX_RMS_DISCORD = 0.10
DEFAULT_MAX_RMS_CFINAL = 0.12
BAND_SLACK = 0.05


class HarnessError(ValueError):
    """Bad input to a harness operation (maps to the CLI usage-error exit code)."""


def fmt(x: float, digits: int = 9) -> str:
    s = f"{x:.{digits}g}"
    return "0" if s == "-0" else s


@dataclass
class SweepSpec:
    mode: str
    grid: list[float] = field(default_factory=list)
    gate: str = "ideal"
    basis: str = "pauli_y"
    seed: int = 0
    out: str | None = None
    table: str | None = None
    shots: int | None = None
    workers: int = 1
    tp_tol: float = 1e-6

    def __post_init__(self):
        if self.mode not in ("pure", "mixed"):
            raise HarnessError(f"mode must be 'pure' or 'mixed', got {self.mode!r}")
        if self.table is not None:
            table = load_table(self.table)
            expected = "pure" if self.table == "S1" else "mixed"
            if self.mode != expected:
                raise HarnessError(f"table {self.table} requires mode {expected!r}")
            if not self.grid:
                self.grid = table.keys
        if not self.grid:
            raise HarnessError("sweep grid is empty")
        for value in self.inputs_keys():
            if self.mode == "pure" and not 0.0 <= value <= 45.0:
                raise HarnessError(f"theta {value} outside [0, 45]")
            if self.mode == "mixed" and not 0.0 <= value <= 1.0:
                raise HarnessError(f"|a| {value} outside [0, 1]")
        MeasurementBasis.by_name(self.basis)

    def inputs_keys(self) -> list[float]:
        """Grid values translated to theta (pure) or |a| (mixed)."""
        if self.table == "S2":
            table = load_table("S2")
            by_key = {r.key: r.c_initial for r in table.rows}
            try:
                return [abs_a_for_coherence(by_key[float(k)]) for k in self.grid]
            except KeyError as exc:
                raise HarnessError(f"grid key {exc} not present in table S2") from exc
        return [float(k) for k in self.grid]

    def inputs(self) -> list[CycleInput]:
        if self.mode == "pure":
            return [CycleInput.pure(t) for t in self.inputs_keys()]
        return [CycleInput.mixed(a) for a in self.inputs_keys()]


def resolve_gate(gate: str):
    """'ideal', 'lambda=<x>' / a bare float, or a path to a chi JSON file."""
    if gate in ("ideal", "", None):
        return None
    if gate.startswith("lambda="):
        gate = gate.split("=", 1)[1]
    try:
        lam = float(gate)
    except ValueError:
        path = Path(gate)
        if not path.is_file():
            raise HarnessError(f"chi file {gate} does not exist")
        try:
            return ChiMatrix.load(path)
        except ValueError as exc:
            raise HarnessError(str(exc)) from exc
    if not 0.0 <= lam <= 1.0:
        raise HarnessError(f"lambda {lam} outside [0, 1]")
    return depolarized_cnot(lam)


def _tomographic_point(inp: CycleInput, gate, basis, config: TomographyConfig, index: int, tp_tol: float) -> dict:
    """Cycle quantities estimated from simulated tomography, as in the experiment."""
    rho_a = inp.system_state()
    joint = convert(with_blank_ancilla(rho_a), gate, tp_tol=tp_tol)
    est_a = mle_state(simulate_counts(rho_a, complete_settings(1), config, stream=(index, 0)), config)
    est_joint = mle_state(simulate_counts(joint, complete_settings(2), config, stream=(index, 1)), config)
    probs, c_final = [], 0.0
    for out in measure_ancilla(joint, basis):
        probs.append(out.probability)
        if out.state is not None:
            recs = simulate_counts(out.state, complete_settings(1), config, stream=(index, 2 + out.index))
            c_final += out.probability * coherence_rel_ent(mle_state(recs, config))
    return {
        "c_initial": coherence_rel_ent(est_a),
        "discord": discord_rel_ent(est_joint).value,
        "qi_rel_ent": qi_rel_ent(est_joint),
        "c_final": c_final,
        "p_plus": probs[0],
        "p_minus": probs[1],
    }


def _run_point(args) -> dict:
    spec, key, inp, index = args
    gate = resolve_gate(spec.gate)
    basis = MeasurementBasis.by_name(spec.basis)
    if spec.shots:
        config = TomographyConfig(shots_per_setting=spec.shots, seed=spec.seed)
        row = _tomographic_point(inp, gate, basis, config, index, spec.tp_tol)
    else:
        rep = run_cycle(inp, gate, basis, tp_tol=spec.tp_tol)
        row = {
            "c_initial": rep.c_initial,
            "discord": rep.discord,
            "qi_rel_ent": rep.qi_rel_ent,
            "c_final": rep.c_final,
            "p_plus": rep.outcomes[0].probability,
            "p_minus": rep.outcomes[1].probability,
        }
    return {"key": float(key), **row}


def sweep(spec: SweepSpec) -> list[dict]:
    """Run one cycle per grid point; rows come back in grid order."""
    resolve_gate(spec.gate)
    tasks = [(spec, key, inp, i) for i, (key, inp) in enumerate(zip(spec.grid, spec.inputs()))]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_point, tasks))
    else:
        rows = [_run_point(t) for t in tasks]
    if spec.out:
        write_text(spec.out, sweep_csv(rows))
    return rows


def sweep_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise HarnessError(f"cannot write {path}: {exc}") from exc


def read_csv_rows(path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [{k: v for k, v in r.items()} for r in reader]
            fields = reader.fieldnames or []
    except OSError as exc:
        raise HarnessError(f"cannot read {path}: {exc}") from exc
    if "key" not in fields:
        raise HarnessError(f"{path} has no 'key' column")
    out = []
    for r in rows:
        try:
            out.append({k: float(v) for k, v in r.items() if v not in (None, "")})
        except ValueError as exc:
            raise HarnessError(f"malformed number in {path}: {exc}") from exc
    return out


@dataclass
class Comparison:
    table: str
    rows: list[dict]
    rms_discord: float
    rms_c_final: float
    max_deviation: float
    band_violations: int
    passed: bool

    def to_csv(self) -> str:
        cols = ("key", "discord_sim", "discord_ref", "discord_dev", "c_final_sim", "c_final_ref", "c_final_dev", "ideal", "in_band")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in self.rows:
            writer.writerow([fmt(r[c]) if isinstance(r[c], float) else str(r[c]).lower() for c in cols])
        writer.writerow([])
        writer.writerow(["summary", "rms_discord", fmt(self.rms_discord), "rms_c_final", fmt(self.rms_c_final), "max_deviation", fmt(self.max_deviation), "band_violations", self.band_violations])
        return buf.getvalue()


def in_band(sim: float, ref: float, ideal: float, slack: float = BAND_SLACK) -> bool:
    """sim lies between the experimental and ideal values, widened by ``slack``."""
    return min(ref, ideal) - slack <= sim <= max(ref, ideal) + slack


def report(
    sim_rows: Sequence[dict],
    table: ReferenceTable,
    max_rms_discord: float = DEFAULT_MAX_RMS_DISCORD,
    max_rms_c_final: float = DEFAULT_MAX_RMS_CFINAL,
    require_band: bool = False,
) -> Comparison:
    """Per-row absolute deviations from a reference table plus RMS summaries."""
    sim_keys = [r["key"] for r in sim_rows]
    if len(sim_keys) != len(table.rows) or any(abs(a - b) > 1e-9 for a, b in zip(sim_keys, table.keys)):
        raise HarnessError(f"simulation keys {sim_keys} do not match table {table.name} keys {table.keys}")
    ideal = table.ideal()
    rows, violations = [], 0
    for sim, ref, ide in zip(sim_rows, table.rows, ideal):
        if "discord" not in sim or "c_final" not in sim:
            raise HarnessError("simulation CSV needs discord and c_final columns")
        ok = in_band(sim["discord"], ref.discord, ide) and in_band(sim["c_final"], ref.c_final, ide)
        violations += not ok
        rows.append(
            {
                "key": ref.key,
                "discord_sim": sim["discord"],
                "discord_ref": ref.discord,
                "discord_dev": abs(sim["discord"] - ref.discord),
                "c_final_sim": sim["c_final"],
                "c_final_ref": ref.c_final,
                "c_final_dev": abs(sim["c_final"] - ref.c_final),
                "ideal": float(ide),
                "in_band": ok,
            }
        )
    rms_d = math.sqrt(np.mean([r["discord_dev"] ** 2 for r in rows]))
    rms_c = math.sqrt(np.mean([r["c_final_dev"] ** 2 for r in rows]))
    max_dev = max(max(r["discord_dev"], r["c_final_dev"]) for r in rows)
    passed = rms_d <= max_rms_discord and rms_c <= max_rms_c_final and (violations == 0 or not require_band)
    return Comparison(table.name, rows, rms_d, rms_c, max_dev, violations, passed)


_SERIES = (
    ("c_initial", "initial coherence", "#8c564b"),
    ("discord", "discord", "#1f77b4"),
    ("c_final", "final coherence", "#d62728"),
)


def plot_svg(rows: Sequence[dict], x_label: str = "key", title: str = "") -> str:
    """Static SVG 1.1 line plot of c_initial, discord and c_final against key."""
    series = [(col, name, color) for col, name, color in _SERIES if any(col in r for r in rows)]
    if not rows or not series:
        raise HarnessError("nothing to plot: no rows or no c_initial/discord/c_final columns")
    width, height = 640, 420
    left, right, top, bottom = 70, 170, 40, 60
    xs = [r["key"] for r in rows]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    y_vals = [r[c] for r in rows for c, _, _ in series if c in r]
    y_lo, y_hi = 0.0, max(1.0, max(y_vals))

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)

    def py(y):
        return height - bottom - (y - y_lo) / (y_hi - y_lo) * (height - top - bottom)

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{(width - right + left) / 2:.2f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{_escape(title)}</text>')
    x0, x1, y0, y1 = px(x_lo), px(x_hi), py(y_lo), py(y_hi)
    out.append(f'<polyline points="{x0:.2f},{y1:.2f} {x0:.2f},{y0:.2f} {x1:.2f},{y0:.2f}" fill="none" stroke="black" stroke-width="1"/>')
    for i in range(6):
        xv = x_lo + (x_hi - x_lo) * i / 5
        yv = y_lo + (y_hi - y_lo) * i / 5
        out.append(f'<line x1="{px(xv):.2f}" y1="{y0:.2f}" x2="{px(xv):.2f}" y2="{y0 + 5:.2f}" stroke="black"/>')
        out.append(f'<text x="{px(xv):.2f}" y="{y0 + 20:.2f}" text-anchor="middle" font-family="sans-serif" font-size="12">{fmt(xv, 4)}</text>')
        out.append(f'<line x1="{x0 - 5:.2f}" y1="{py(yv):.2f}" x2="{x0:.2f}" y2="{py(yv):.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8:.2f}" y="{py(yv) + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="12">{fmt(yv, 3)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{height - 15}" text-anchor="middle" font-family="sans-serif" font-size="13">{_escape(x_label)}</text>')
    out.append(f'<text x="18" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {(y0 + y1) / 2:.2f})">bits</text>')
    for k, (col, name, color) in enumerate(series):
        pts = " ".join(f"{px(r['key']):.2f},{py(r[col]):.2f}" for r in rows if col in r)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for r in rows:
            if col in r:
                out.append(f'<circle cx="{px(r["key"]):.2f}" cy="{py(r[col]):.2f}" r="3" fill="{color}"/>')
        ly = top + 20 + 22 * k
        out.append(f'<line x1="{width - right + 15}" y1="{ly}" x2="{width - right + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{width - right + 46}" y="{ly + 4}" font-family="sans-serif" font-size="12">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def plot(csv_path, out_path, x_label: str = "key") -> None:
    svg = plot_svg(read_csv_rows(csv_path), x_label=x_label)
    write_text(out_path, svg)
