"""Experiment orchestration: raw -> readout-mitigated -> readout+ZNE
curves with repetition error bars and the exact-diagonalization reference,
plus CSV/SVG emission."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .transpile import get_topology
from .transpile import transpile as route_circuit
from .circuits import model_circuit
from .mitigation import ResponseMatrix, ZnePoint, calibrate, fold, mitigate_readout, zne
from .models import GaugeModel, Geometry, gauss_operators, initial_state, winding_operators
from .paulis import exact_evolve, PauliSum, sum_to_matrix
from .simulator import Counts, NoiseModel, child_seed, run_noisy
from . import models as mdl

log = logging.getLogger(__name__)

_GEOMETRY_BY_NAME = {
    "square1": "square-1",
    "triangle1": "triangle-1",
    "two_square_pbc": "two-square-pbc",
}


class TimeGrid(BaseModel):
    model_config = ConfigDict(extra="forbid")
    start: float = 0.0
    stop: float = 3.0
    n: int = Field(default=20, ge=1)


class NoiseConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p2: float = Field(default=0.0, ge=0.0, le=1.0)
    eps01: float = Field(default=0.0, ge=0.0, le=1.0)
    eps10: float = Field(default=0.0, ge=0.0, le=1.0)

    def to_model(self) -> NoiseModel:
        return NoiseModel(self.p2, self.eps01, self.eps10)


class ExperimentConfig(BaseModel):
    """Full description of one mitigated-dynamics experiment."""

    model_config = ConfigDict(extra="forbid")

    model: str  # "z2" | "u1"
    geometry: str  # "square1" | "triangle1" | "two_square_pbc"
    g: float = 1.0
    convention: str = "pauli"
    times: list[float] | TimeGrid = Field(default_factory=TimeGrid)
    shots: int = Field(default=8192, ge=1)
    repetitions: int = Field(default=5, ge=1)
    scale_factors: list[float] = Field(
        default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
    )
    zne_method: str = "quadratic"
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    topology: str = "none"
    initial_state: str | None = None
    basis: str | None = None  # measurement/label basis; default per group
    observables: list[str] = Field(default_factory=list)
    master_seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if self.model not in ("z2", "u1"):
            raise ValueError("model must be 'z2' or 'u1'")
        if self.geometry not in _GEOMETRY_BY_NAME:
            raise ValueError(f"geometry must be one of {sorted(_GEOMETRY_BY_NAME)}")
        if isinstance(self.times, list) and not self.times:
            raise ValueError("need at least one time")
        if not self.scale_factors or min(self.scale_factors) < 1:
            raise ValueError("scale factors must be >= 1")
        if 1.0 not in self.scale_factors:
            raise ValueError("scale factors must include 1")
        if self.zne_method not in ("quadratic", "richardson"):
            raise ValueError("zne_method must be 'quadratic' or 'richardson'")
        return self

    # --- derived pieces ---

    def gauge_model(self) -> GaugeModel:
        return GaugeModel(
            "Z2" if self.model == "z2" else "U1", self.g, 0.0, self.convention
        )

    def geom(self) -> Geometry:
        return Geometry(_GEOMETRY_BY_NAME[self.geometry])

    def label_basis(self) -> str:
        if self.basis is not None:
            return self.basis
        return "x" if self.model == "z2" else "z"

    def initial_label(self) -> str:
        if self.initial_state is not None:
            return self.initial_state
        return "1" * self.geom().n_links if self.model == "z2" else _default_u1_label(self.geom())

    def time_list(self) -> list[float]:
        if isinstance(self.times, list):
            return list(self.times)
        t = self.times
        return list(np.linspace(t.start, t.stop, t.n))

    def observable_list(self) -> list[str]:
        if self.observables:
            return list(self.observables)
        return [f"loschmidt:{self.initial_label()}"]


def _default_u1_label(geom: Geometry) -> str:
    return {"square-1": "0011", "triangle-1": "000", "two-square-pbc": "001011"}[
        geom.kind
    ]


@dataclass
class ResultRow:
    time: float
    observable: str
    raw_mean: float
    raw_err: float
    ro_mean: float
    ro_err: float
    zne_mean: float
    zne_err: float
    exact: float


@dataclass
class ResultTable:
    rows: list[ResultRow]
    executed_circuits: int = 0

    def observables(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.observable not in seen:
                seen.append(r.observable)
        return seen


# --- observables ------------------------------------------------------------


def _site_value(bitstring_index: int, obs: PauliSum) -> float:
    val = 0.0
    for t in obs.terms:
        sign = 1
        for q in t.support:
            if (bitstring_index >> q) & 1:
                sign = -sign
        val += t.coefficient * sign
    return val


def observable_evaluator(name: str, cfg: ExperimentConfig):
    """Bitstring -> value function for a named observable, plus whether it
    is a probability (for ZNE clamping).

    Measured bitstrings are x-basis labels for Z2 and z-basis labels for
    U(1); all in-scope observables are diagonal there.
    """
    model, geom = cfg.gauge_model(), cfg.geom()
    if name.startswith("loschmidt:"):
        target = int(name.split(":", 1)[1], 2)
        return (lambda idx: 1.0 if idx == target else 0.0), True
    if name.startswith("gauss:"):
        site = name.split(":", 1)[1]
        op = gauss_operators(model, geom)[site]
        return (lambda idx: _site_value(idx, op)), False
    if name == "gauss_sq_sum":
        ops = list(gauss_operators(model, geom).values())
        return (lambda idx: sum(_site_value(idx, op) ** 2 for op in ops)), False
    if name.startswith("winding:"):
        axis = name.split(":", 1)[1]
        key = {"x": "x", "y": "y13", "y13": "y13", "y56": "y56"}[axis]
        op = winding_operators(geom)[key]
        return (lambda idx: _site_value(idx, op)), False
    raise ValueError(f"unknown observable {name!r}")


def _eval_on_distribution(dist: np.ndarray, f) -> float:
    return float(sum(p * f(i) for i, p in enumerate(dist) if p))


# --- exact reference --------------------------------------------------------


def _measured_distribution_exact(cfg: ExperimentConfig, t: float) -> np.ndarray:
    """Ideal outcome distribution over system bitstrings at time t."""
    model, geom = cfg.gauge_model(), cfg.geom()
    h = mdl.build_hamiltonian(model, geom)
    psi0 = initial_state(geom, cfg.initial_label(), cfg.label_basis())
    psit = exact_evolve(h, psi0, t)
    if cfg.label_basis() == "x":
        # amplitudes in the x product basis via Hadamard transform
        n = geom.n_links
        had = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        full = np.array([[1.0]])
        for _ in range(n):
            full = np.kron(full, had)
        psit = full @ psit
    return np.abs(psit) ** 2


def exact_reference(cfg: ExperimentConfig, n_points: int = 200):
    """Dense oracle curves over the configured time range."""
    times = cfg.time_list()
    lo, hi = min(times), max(times)
    dense = np.linspace(lo, hi, max(n_points, 2))
    out = {}
    evaluators = {
        name: observable_evaluator(name, cfg)[0] for name in cfg.observable_list()
    }
    for name, f in evaluators.items():
        vals = []
        for t in dense:
            dist = _measured_distribution_exact(cfg, float(t))
            vals.append(_eval_on_distribution(dist, f))
        out[name] = (dense.copy(), np.array(vals))
    return out


# --- the pipeline -----------------------------------------------------------


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    """Run the full raw / readout / readout+ZNE pipeline.

    For each time, scale factor, and repetition the circuit is built,
    optionally routed, folded, executed under the noise model, and readout
    mitigated with a response matrix calibrated once per experiment; ZNE
    runs across scale factors per repetition, then means and standard
    deviations are taken over repetitions.
    """
    model, geom = cfg.gauge_model(), cfg.geom()
    noise = cfg.noise.to_model()
    times = cfg.time_list()
    scales = sorted(cfg.scale_factors)
    reps = cfg.repetitions
    n_sys = geom.n_links
    observables = cfg.observable_list()
    evaluators = {name: observable_evaluator(name, cfg) for name in observables}

    topo = None if cfg.topology == "none" else get_topology(cfg.topology)

    response = calibrate(
        n_sys, noise, max(cfg.shots, 8192), child_seed(cfg.master_seed, 0)
    )

    executed = 0
    rows: list[ResultRow] = []
    # values[name][rep][scale_index] per time
    for ti, t in enumerate(times):
        base = model_circuit(model, geom, t, cfg.initial_label(), cfg.label_basis())
        if topo is not None:
            base, _ = route_circuit(base, topo)
        raw_vals = {name: np.zeros(reps) for name in observables}
        ro_vals = {name: np.zeros(reps) for name in observables}
        zne_vals = {name: np.zeros(reps) for name in observables}
        for rep in range(reps):
            per_scale = {name: [] for name in observables}
            for si, lam in enumerate(scales):
                folded, achieved = fold(base, lam)
                seed = child_seed(cfg.master_seed, 1, ti, si, rep)
                counts = run_noisy(folded, noise, cfg.shots, seed)
                executed += 1
                raw_dist = counts.to_distribution(n_sys)
                ro_dist = mitigate_readout(raw_dist, response)
                for name in observables:
                    f, _ = evaluators[name]
                    if math.isclose(lam, 1.0):
                        raw_vals[name][rep] = _eval_on_distribution(raw_dist, f)
                        ro_vals[name][rep] = _eval_on_distribution(ro_dist, f)
                    per_scale[name].append(
                        ZnePoint(lam, achieved, _eval_on_distribution(ro_dist, f))
                    )
            for name in observables:
                _, is_prob = evaluators[name]
                result = zne(per_scale[name], cfg.zne_method, probability=is_prob)
                zne_vals[name][rep] = result.intercept
        exact_dist = _measured_distribution_exact(cfg, t)
        for name in observables:
            f, _ = evaluators[name]
            rows.append(
                ResultRow(
                    time=t,
                    observable=name,
                    raw_mean=float(raw_vals[name].mean()),
                    raw_err=float(raw_vals[name].std(ddof=0)),
                    ro_mean=float(ro_vals[name].mean()),
                    ro_err=float(ro_vals[name].std(ddof=0)),
                    zne_mean=float(zne_vals[name].mean()),
                    zne_err=float(zne_vals[name].std(ddof=0)),
                    exact=_eval_on_distribution(exact_dist, f),
                )
            )
    log.info(
        "experiment complete: %d circuit executions (%d times x %d scales x %d reps)",
        executed, len(times), len(scales), reps,
    )
    return ResultTable(rows, executed)


# --- output -----------------------------------------------------------------

CSV_HEADER = "time,observable,raw_mean,raw_err,ro_mean,ro_err,zne_mean,zne_err,exact"


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def write_csv(table: ResultTable, path) -> None:
    if not table.rows:
        raise ValueError("refusing to write an empty table")
    lines = [CSV_HEADER]
    for r in table.rows:
        nums = [r.raw_mean, r.raw_err, r.ro_mean, r.ro_err, r.zne_mean, r.zne_err, r.exact]
        lines.append(
            ",".join(
                [f"{r.time:.17g}", _csv_field(r.observable)]
                + [f"{x:.17g}" for x in nums]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> ResultTable:
    with open(path) as fh:
        lines = [l for l in fh.read().splitlines() if l]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unrecognized CSV header")
    rows = []
    for line in lines[1:]:
        parts = _split_csv_line(line)
        rows.append(
            ResultRow(
                float(parts[0]), parts[1], *(float(x) for x in parts[2:9])
            )
        )
    return ResultTable(rows)


def _split_csv_line(line: str) -> list[str]:
    out, cur, quoted = [], [], False
    i = 0
    while i < len(line):
        ch = line[i]
        if quoted:
            if ch == '"':
                if i + 1 < len(line) and line[i + 1] == '"':
                    cur.append('"')
                    i += 1
                else:
                    quoted = False
            else:
                cur.append(ch)
        elif ch == '"':
            quoted = True
        elif ch == ",":
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    out.append("".join(cur))
    return out


def write_svg(table: ResultTable, path, observable: str | None = None) -> None:
    """Minimal hand-emitted SVG: raw/readout/ZNE points with error bars and
    the exact curve dashed.  One observable per file."""
    if not table.rows:
        raise ValueError("refusing to plot an empty table")
    names = table.observables()
    name = observable if observable is not None else names[0]
    rows = [r for r in table.rows if r.observable == name]
    if not rows:
        raise ValueError(f"no rows for observable {name!r}")

    w, h, pad = 640, 420, 50
    ts = [r.time for r in rows]
    all_vals = []
    for r in rows:
        all_vals += [r.raw_mean - r.raw_err, r.raw_mean + r.raw_err,
                     r.ro_mean - r.ro_err, r.ro_mean + r.ro_err,
                     r.zne_mean - r.zne_err, r.zne_mean + r.zne_err, r.exact]
    t0, t1 = min(ts), max(ts) or 1.0
    v0, v1 = min(all_vals), max(all_vals)
    if t1 == t0:
        t1 = t0 + 1.0
    if v1 == v0:
        v1 = v0 + 1.0

    def sx(t):
        return pad + (t - t0) / (t1 - t0) * (w - 2 * pad)

    def sy(v):
        return h - pad - (v - v0) / (v1 - v0) * (h - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<line x1="{pad}" y1="{h-pad}" x2="{w-pad}" y2="{h-pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h-pad}" stroke="black"/>',
        f'<text x="{w//2}" y="{h-10}" text-anchor="middle" font-size="13">time</text>',
        f'<text x="{w//2}" y="20" text-anchor="middle" font-size="13">{name}</text>',
    ]
    exact_pts = " ".join(f"{sx(r.time):.2f},{sy(r.exact):.2f}" for r in rows)
    parts.append(
        f'<polyline points="{exact_pts}" fill="none" stroke="black" '
        f'stroke-dasharray="6 4"/>'
    )
    series = [
        ("raw", "#c44", lambda r: (r.raw_mean, r.raw_err)),
        ("readout", "#47c", lambda r: (r.ro_mean, r.ro_err)),
        ("zne", "#2a2", lambda r: (r.zne_mean, r.zne_err)),
    ]
    for si, (label, color, pick) in enumerate(series):
        for r in rows:
            v, e = pick(r)
            x, y = sx(r.time), sy(v)
            parts.append(
                f'<line x1="{x:.2f}" y1="{sy(v-e):.2f}" x2="{x:.2f}" '
                f'y2="{sy(v+e):.2f}" stroke="{color}"/>'
            )
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{w-pad-120}" y="{pad+16*si}" font-size="12" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
