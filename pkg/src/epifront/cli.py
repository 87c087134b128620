"""Command-line interface: config ingestion, run orchestration, file emission.

Subcommands: run, threshold, sweep, validate.  Configs are flat
``key = value`` text with dotted sections (model.d, solver.n_cells,
init.sigma); every run is fully deterministic and CSV numbers carry 17
significant digits so refinement studies reproduce exactly.  Plots are
emitted as self-contained SVG.

Exit codes: 0 success (validate: assumptions hold), 1 assumption
failure, 2 bad configuration, 3 numerical blow-up, 4 monitor violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis, model, threshold
from .errors import (
    BlowUpError,
    ConfigError,
    EpifrontError,
    MonitorViolation,
    ThresholdUndefinedError,
)
from .model import InfectionResponse, InitialData, ModelParams
from .solver import SolverConfig, Trajectory, simulate

THREADS_ENV = "EPIFRONT_THREADS"

_MODEL_FIELDS = ("d", "a11", "a12", "a22", "mu", "h0")
_SHAPES = ("cosine", "skewed_cosine")


def _fmt(x: float) -> str:
    """CSV float format: 17 significant digits."""
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict[str, tuple[str, int]]:
    """Flat dotted-key config: one ``key = value`` per line, # comments."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("missing key before '='", line=lineno)
        if key in entries:
            raise ConfigError(
                f"duplicate key {key!r} (first set at line {entries[key][1]})",
                key=key,
                line=lineno,
            )
        entries[key] = (value.strip(), lineno)
    return entries


class _Reader:
    """Typed access to parsed entries with line-anchored errors."""

    def __init__(self, entries: dict[str, tuple[str, int]]):
        self.entries = entries
        self.used: set[str] = set()

    def _raw(self, key: str) -> tuple[str, int] | None:
        if key in self.entries:
            self.used.add(key)
            return self.entries[key]
        return None

    def error(self, key: str, message: str) -> ConfigError:
        line = self.entries[key][1] if key in self.entries else None
        return ConfigError(f"{key}: {message}", key=key, line=line)

    def get_float(self, key: str, default: float | None) -> float | None:
        raw = self._raw(key)
        if raw is None:
            return default
        try:
            return float(raw[0])
        except ValueError:
            raise self.error(key, f"expected a number, got {raw[0]!r}") from None

    def get_int(self, key: str, default: int) -> int:
        raw = self._raw(key)
        if raw is None:
            return default
        try:
            return int(raw[0])
        except ValueError:
            raise self.error(key, f"expected an integer, got {raw[0]!r}") from None

    def get_bool(self, key: str, default: bool) -> bool:
        raw = self._raw(key)
        if raw is None:
            return default
        value = raw[0].lower()
        if value in ("true", "yes", "on", "1"):
            return True
        if value in ("false", "no", "off", "0"):
            return False
        raise self.error(key, f"expected true/false, got {raw[0]!r}")

    def get_str(self, key: str, default: str, choices: tuple[str, ...] | None = None) -> str:
        raw = self._raw(key)
        value = default if raw is None else raw[0]
        if choices is not None and value not in choices:
            raise self.error(key, f"expected one of {', '.join(choices)}; got {value!r}")
        return value

    def get_floats(self, key: str, default: list[float] | None = None) -> list[float] | None:
        raw = self._raw(key)
        if raw is None:
            return default
        text = raw[0]
        if not text:
            return []
        try:
            return [float(part) for part in text.split(",")]
        except ValueError:
            raise self.error(key, f"expected comma-separated numbers, got {text!r}") from None

    def reject_unknown(self) -> None:
        for key, (_, lineno) in self.entries.items():
            if key not in self.used:
                raise ConfigError(f"unknown key {key!r}", key=key, line=lineno)


@dataclass
class RunSetup:
    """Everything a subcommand needs, resolved from a config file."""

    params: ModelParams
    resp: InfectionResponse
    init: InitialData
    solver: SolverConfig
    thresholds: analysis.ClassifyThresholds
    monitor_toggles: dict[str, bool]
    bisect: threshold.BisectConfig
    sweep_sigma: list[float] | None
    sweep_mu: list[float] | None
    sweep_d: list[float] | None
    echo: dict[str, str] = field(default_factory=dict)


def _table_response(reader: _Reader) -> InfectionResponse:
    zs = reader.get_floats("response.z_values")
    gs = reader.get_floats("response.g_values")
    if zs is None or gs is None:
        raise ConfigError(
            "response.kind = table needs response.z_values and response.g_values",
            key="response.kind",
        )
    if len(zs) != len(gs) or len(zs) < 3:
        raise reader.error("response.z_values", "need >= 3 matching z/g samples")
    z_arr = np.asarray(zs, dtype=float)
    g_arr = np.asarray(gs, dtype=float)
    if z_arr[0] != 0.0 or g_arr[0] != 0.0:
        raise reader.error("response.z_values", "table must start at (0, 0)")
    if np.any(np.diff(z_arr) <= 0):
        raise reader.error("response.z_values", "z samples must be strictly increasing")
    slopes = np.gradient(g_arr, z_arr)
    resp = InfectionResponse(
        g=lambda z: np.interp(z, z_arr, g_arr),
        g_prime=lambda z: np.interp(z, z_arr, slopes),
        deriv_at_zero=float(slopes[0]),
        kind="table",
    )
    resp.table = (z_arr, g_arr)
    return resp


def build_setup(entries: dict[str, tuple[str, int]]) -> RunSetup:
    reader = _Reader(entries)

    values: dict[str, float] = {}
    for name in _MODEL_FIELDS:
        key = f"model.{name}"
        value = reader.get_float(key, 1.0)
        if not (value is not None and math.isfinite(value) and value > 0):
            raise reader.error(key, f"must be a finite positive number (got {value!r})")
        values[name] = value
    params = ModelParams(**values)

    kind = reader.get_str("response.kind", "monod", choices=("monod", "table"))
    if kind == "monod":
        a21 = reader.get_float("response.a21", 2.0)
        if not a21 > 0:
            raise reader.error("response.a21", f"must be > 0 (got {a21!r})")
        resp = InfectionResponse.monod(a21)
    else:
        resp = _table_response(reader)

    sigma = reader.get_float("init.sigma", 1.0)
    if sigma < 0:
        raise reader.error("init.sigma", f"must be >= 0 (got {sigma!r})")
    shape = reader.get_str("init.shape", "cosine", choices=_SHAPES)
    skew = reader.get_float("init.skew", 0.5)
    if shape == "cosine":
        init = InitialData.cosine(sigma, params.h0)
    else:
        if not abs(skew) < 1.0:
            raise reader.error("init.skew", f"magnitude must be < 1 (got {skew!r})")
        init = InitialData.skewed_cosine(sigma, params.h0, skew=skew)

    record_times = reader.get_floats("solver.record_times", []) or []
    try:
        solver_cfg = SolverConfig(
            n_cells=reader.get_int("solver.n_cells", 256),
            dt_max=reader.get_float("solver.dt_max", None),
            cfl_adv=reader.get_float("solver.cfl_adv", 0.5),
            front_cfl=reader.get_float("solver.front_cfl", 0.2),
            t_max=reader.get_float("solver.t_max", None),
            frame_stride=reader.get_int("solver.frame_stride", 50),
            record_times=tuple(record_times),
            early_stop=reader.get_str(
                "solver.early_stop", "both", choices=("both", "vanishing", "spreading", "none")
            ),
        ).resolved(params)
    except EpifrontError as exc:
        raise ConfigError(f"solver configuration invalid: {exc}") from exc

    thresholds = analysis.ClassifyThresholds(
        r0f_margin=reader.get_float("classify.r0f_margin", 1e-6),
        width_factor=reader.get_float("classify.width_factor", 10.0),
        interior_factor=reader.get_float("classify.interior_factor", 0.5),
        vanish_ratio=reader.get_float("classify.vanish_ratio", 1e-6),
        plateau_ratio=reader.get_float("classify.plateau_ratio", 1e-6),
        trailing_fraction=reader.get_float("classify.trailing_fraction", 0.1),
    )

    monitor_toggles = {
        "bounds": reader.get_bool("monitors.bounds", True),
        "symmetry": reader.get_bool("monitors.symmetry", True),
        "speed": reader.get_bool("monitors.speed", True),
    }

    bisect = threshold.BisectConfig(
        rel_tol=reader.get_float("threshold.tol", 1e-2),
        hi_seed_factor=reader.get_float("threshold.hi_factor", 10.0),
    )

    sweep_sigma = reader.get_floats("sweep.sigma", None)
    sweep_mu = reader.get_floats("sweep.mu", None)
    sweep_d = reader.get_floats("sweep.d", None)

    reader.reject_unknown()

    echo: dict[str, str] = {}
    for name in _MODEL_FIELDS:
        echo[f"model.{name}"] = _fmt(values[name])
    echo["response.kind"] = kind
    if kind == "monod":
        echo["response.a21"] = _fmt(resp.a21)
    else:
        z_arr, g_arr = resp.table
        echo["response.z_values"] = ",".join(_fmt(z) for z in z_arr)
        echo["response.g_values"] = ",".join(_fmt(g) for g in g_arr)
    echo["init.sigma"] = _fmt(sigma)
    echo["init.shape"] = shape
    if shape == "skewed_cosine":
        echo["init.skew"] = _fmt(skew)
    echo["solver.n_cells"] = str(solver_cfg.n_cells)
    echo["solver.dt_max"] = _fmt(solver_cfg.dt_max)
    echo["solver.cfl_adv"] = _fmt(solver_cfg.cfl_adv)
    echo["solver.front_cfl"] = _fmt(solver_cfg.front_cfl)
    echo["solver.t_max"] = _fmt(solver_cfg.t_max)
    echo["solver.frame_stride"] = str(solver_cfg.frame_stride)
    if solver_cfg.record_times:
        echo["solver.record_times"] = ",".join(_fmt(t) for t in solver_cfg.record_times)
    echo["solver.early_stop"] = solver_cfg.early_stop
    for key, value in monitor_toggles.items():
        echo[f"monitors.{key}"] = "true" if value else "false"
    echo["classify.r0f_margin"] = _fmt(thresholds.r0f_margin)
    echo["classify.width_factor"] = _fmt(thresholds.width_factor)
    echo["classify.interior_factor"] = _fmt(thresholds.interior_factor)
    echo["classify.vanish_ratio"] = _fmt(thresholds.vanish_ratio)
    echo["classify.plateau_ratio"] = _fmt(thresholds.plateau_ratio)
    echo["classify.trailing_fraction"] = _fmt(thresholds.trailing_fraction)
    echo["threshold.tol"] = _fmt(bisect.rel_tol)
    echo["threshold.hi_factor"] = _fmt(bisect.hi_seed_factor)
    for key, grid in (("sweep.sigma", sweep_sigma), ("sweep.mu", sweep_mu), ("sweep.d", sweep_d)):
        if grid is not None:
            echo[key] = ",".join(_fmt(v) for v in grid)

    return RunSetup(
        params=params,
        resp=resp,
        init=init,
        solver=solver_cfg,
        thresholds=thresholds,
        monitor_toggles=monitor_toggles,
        bisect=bisect,
        sweep_sigma=sweep_sigma,
        sweep_mu=sweep_mu,
        sweep_d=sweep_d,
        echo=echo,
    )


def load_setup(path: str | None) -> RunSetup:
    if path is None:
        return build_setup({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        return build_setup(parse_config_text(text))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}", key=exc.key, line=None) from exc


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------

def write_trajectory_csv(path: Path, traj: Trajectory, residuals: np.ndarray) -> None:
    columns = ("t", "g", "h", "width", "sup_u", "sup_v", "mass", "mass_residual",
               "r0f", "g_speed", "h_speed")
    lines = [",".join(columns)]
    for k, f in enumerate(traj.frames):
        row = (f.t, f.g, f.h, f.width, f.sup_w, f.sup_z, f.mass, float(residuals[k]),
               f.r0f, f.g_speed, f.h_speed)
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_profiles_csv(path: Path, traj: Trajectory, times: list[float]) -> None:
    y = traj.y_grid()
    lines = ["t,x,u,v"]
    for target in times:
        frame = min(traj.frames, key=lambda f: abs(f.t - target))
        x = (y * frame.width + traj.h0 * (frame.h + frame.g)) / (2.0 * traj.h0)
        for xi, ui, vi in zip(x, frame.w, frame.z):
            lines.append(",".join(_fmt(v) for v in (frame.t, xi, ui, vi)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _summary_payload(setup: RunSetup, traj: Trajectory, cls: analysis.Classification,
                     cert: analysis.BoundCertificate) -> dict:
    p, resp = setup.params, setup.resp
    equilibrium = model.endemic_equilibrium(p, resp)
    h_star = model.critical_width(p, resp)
    last = traj.final
    return {
        "verdict": cls.verdict.value,
        "evidence": {
            "criterion": cls.evidence.criterion,
            "time": cls.evidence.time,
            "r0f": cls.evidence.r0f,
            "final_width": cls.evidence.final_width,
            "final_sup_u": cls.evidence.final_sup_u,
            "final_sup_v": cls.evidence.final_sup_v,
            "details": cls.evidence.details,
        },
        "r0": model.basic_reproduction_number(p, resp),
        "r0f_initial": model.free_boundary_reproduction_number(p, resp, 2.0 * p.h0),
        "h_star": h_star,
        "equilibrium": None if equilibrium is None else {"u": equilibrium[0], "v": equilibrium[1]},
        "certificate": {"c1": cert.c1, "c2": cert.c2, "c3": cert.c3, "m": cert.m},
        "run": {
            "n_steps": traj.n_steps,
            "n_frames": len(traj.frames),
            "terminated_by": traj.terminated_by,
            "t_final": last.t,
            "final_width": last.width,
            "final_sup_u": last.sup_w,
            "final_sup_v": last.sup_z,
        },
        "config": setup.echo,
    }


def _svg_header(title: str) -> list[str]:
    return [
        '<svg xmlns="http://www.w3.org/2000/svg" width="800" height="500" '
        'viewBox="0 0 800 500">',
        '<rect width="800" height="500" fill="white"/>',
        f'<text x="400" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
    ]


def svg_line_plot(path: Path, title: str, xlabel: str, ylabel: str,
                  series: list[tuple[str, np.ndarray, np.ndarray, str]]) -> None:
    """Polyline plot in a fixed 800x500 viewport, no external tooling."""
    left, right, top, bottom = 70.0, 780.0, 40.0, 450.0
    xs_all = np.concatenate([s[1] for s in series])
    ys_all = np.concatenate([s[2] for s in series])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * (right - left)

    def sy(y: float) -> float:
        return bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top)

    parts = _svg_header(title)
    parts.append(
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>'
    )
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>')
    for tick in np.linspace(x_lo, x_hi, 5):
        px = sx(tick)
        parts.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" y2="{bottom + 5}" '
                     'stroke="black"/>')
        parts.append(f'<text x="{px:.2f}" y="{bottom + 20}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{tick:.4g}</text>')
    for tick in np.linspace(y_lo, y_hi, 5):
        py = sy(tick)
        parts.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" '
                     'stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{tick:.4g}</text>')
    parts.append(f'<text x="{(left + right) / 2}" y="485" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    parts.append(f'<text x="16" y="{(top + bottom) / 2}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 16 {(top + bottom) / 2})">{ylabel}</text>')
    for idx, (label, xs, ys, color) in enumerate(series):
        points = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" '
                     'stroke-width="1.5"/>')
        ly = top + 16 * (idx + 1)
        parts.append(f'<line x1="{right - 130}" y1="{ly - 4}" x2="{right - 104}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{right - 98}" y="{ly}" font-family="sans-serif" '
                     f'font-size="12">{label}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


_VERDICT_COLORS = {
    "spreading": "#c0392b",
    "vanishing": "#2c6fbb",
    "undetermined": "#999999",
    "error": "#222222",
}


def svg_heatmap(path: Path, title: str, xlabel: str, ylabel: str,
                x_values: list[float], y_values: list[float],
                verdicts: list[list[str]]) -> None:
    left, right, top, bottom = 70.0, 700.0, 40.0, 450.0
    n_x, n_y = len(x_values), len(y_values)
    cell_w = (right - left) / max(1, n_x)
    cell_h = (bottom - top) / max(1, n_y)
    parts = _svg_header(title)
    for j in range(n_y):
        for i in range(n_x):
            color = _VERDICT_COLORS.get(verdicts[j][i], "#222222")
            x = left + i * cell_w
            y = bottom - (j + 1) * cell_h
            parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cell_w:.2f}" '
                         f'height="{cell_h:.2f}" fill="{color}" stroke="white" '
                         'stroke-width="0.5"/>')
    for i, v in enumerate(x_values):
        px = left + (i + 0.5) * cell_w
        parts.append(f'<text x="{px:.2f}" y="{bottom + 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="10">{v:.4g}</text>')
    for j, v in enumerate(y_values):
        py = bottom - (j + 0.5) * cell_h
        parts.append(f'<text x="{left - 6}" y="{py + 3:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="10">{v:.4g}</text>')
    parts.append(f'<text x="{(left + right) / 2}" y="485" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    parts.append(f'<text x="16" y="{(top + bottom) / 2}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 16 {(top + bottom) / 2})">{ylabel}</text>')
    for idx, (name, color) in enumerate(_VERDICT_COLORS.items()):
        ly = top + 16 * (idx + 1)
        parts.append(f'<rect x="{right + 10}" y="{ly - 10}" width="12" height="12" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{right + 28}" y="{ly}" font-family="sans-serif" '
                     f'font-size="12">{name}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _make_monitors(setup: RunSetup) -> analysis.Monitors | None:
    toggles = setup.monitor_toggles
    if not any(toggles.values()):
        return None
    return analysis.make_monitors(setup.params, setup.resp, setup.init, **toggles)


def _write_partial(traj: Trajectory | None, setup: RunSetup, out: Path) -> Path | None:
    if traj is None or not traj.frames:
        return None
    path = out / "trajectory.csv"
    residuals = (
        analysis.mass_balance_residual(traj, setup.params, setup.resp)
        if len(traj.frames) >= 2
        else np.zeros(len(traj.frames))
    )
    write_trajectory_csv(path, traj, residuals)
    return path


def cmd_run(args: argparse.Namespace) -> int:
    setup = load_setup(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    profile_times = [float(s) for s in args.profiles.split(",")] if args.profiles else []
    solver_cfg = setup.solver
    if profile_times:
        merged = tuple(sorted(set(solver_cfg.record_times) | set(profile_times)))
        solver_cfg = replace(solver_cfg, record_times=merged)
        # Keep the echoed config faithful to the run actually executed.
        setup.echo["solver.record_times"] = ",".join(_fmt(t) for t in merged)

    monitors = _make_monitors(setup)
    cert = monitors.certificate if monitors and monitors.certificate else analysis.bound_certificate(
        setup.params, setup.resp, setup.init
    )
    try:
        traj, cls = simulate(
            setup.params, setup.resp, setup.init, solver_cfg,
            monitors=monitors, thresholds=setup.thresholds,
        )
    except (BlowUpError, MonitorViolation) as exc:
        path = _write_partial(getattr(exc, "trajectory", None), setup, out)
        where = f"; last good frames in {path}" if path else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return 3 if isinstance(exc, BlowUpError) else 4

    residuals = analysis.mass_balance_residual(traj, setup.params, setup.resp)
    write_trajectory_csv(out / "trajectory.csv", traj, residuals)

    payload = _summary_payload(setup, traj, cls, cert)
    (out / "summary.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    if profile_times:
        write_profiles_csv(out / "profiles.csv", traj, profile_times)

    if args.svg:
        t = traj.times
        svg_line_plot(
            out / "fronts.svg", "front positions", "t", "x",
            [("h(t)", t, traj.column("h"), "#c0392b"), ("g(t)", t, traj.column("g"), "#2c6fbb")],
        )
        svg_line_plot(
            out / "supnorms.svg", "sup norms", "t", "sup",
            [("sup u", t, traj.column("sup_w"), "#c0392b"),
             ("sup v", t, traj.column("sup_z"), "#2c6fbb")],
        )

    print(f"verdict: {cls.verdict.value} ({cls.evidence.criterion} at t={cls.evidence.time:.6g})")
    print(f"wrote {out / 'trajectory.csv'}")
    print(f"wrote {out / 'summary.json'}")
    return 0


def cmd_threshold(args: argparse.Namespace) -> int:
    setup = load_setup(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p, resp = setup.params, setup.resp

    try:
        if args.target == "sigma":
            result = threshold.find_sigma_star(
                p, resp, setup.init.phi, setup.init.psi, setup.solver, setup.bisect
            )
        else:
            result = threshold.find_mu_star(p, resp, setup.init, setup.solver, setup.bisect)
    except ThresholdUndefinedError as exc:
        payload = {
            "target": args.target,
            "status": "no_threshold",
            "reason": str(exc),
            "r0": model.basic_reproduction_number(p, resp),
            "config": setup.echo,
        }
        (out / "threshold.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"no threshold: {exc}")
        print(f"wrote {out / 'threshold.json'}")
        return 0

    confirmations = {}
    if result.status == "bracketed":
        def confirm(value: float) -> str:
            if args.target == "sigma":
                init = setup.init.with_sigma(value)
                _, cls = simulate(p, resp, init, setup.solver)
            else:
                _, cls = simulate(p.with_(mu=value), resp, setup.init, setup.solver)
            return cls.verdict.value

        endpoints = [result.lo, result.hi]
        workers = _threads()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=min(2, workers)) as pool:
                lo_v, hi_v = pool.map(confirm, endpoints)
        else:
            lo_v, hi_v = (confirm(v) for v in endpoints)
        confirmations = {"lo": lo_v, "hi": hi_v}

    payload = {
        "target": result.target,
        "status": result.status,
        "bracket": [result.lo, result.hi],
        "midpoint": result.midpoint,
        "rel_width": result.rel_width,
        "n_sims": result.n_sims,
        "monotone_verdicts": result.monotone,
        "probes": [
            {
                "value": r.value,
                "verdict": r.verdict.value,
                "criterion": r.criterion,
                "time": r.time,
                "final_width": r.final_width,
                "extended": r.extended,
            }
            for r in result.probes
        ],
        "confirmations": confirmations,
        "bisect": result.config,
        "config": setup.echo,
    }
    (out / "threshold.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"{args.target}* in [{result.lo:.6g}, {result.hi:.6g}] ({result.status}, "
          f"{result.n_sims} simulations)")
    print(f"wrote {out / 'threshold.json'}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    setup = load_setup(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = setup.params

    sigmas = setup.sweep_sigma if setup.sweep_sigma is not None else [setup.init.sigma]
    mus = setup.sweep_mu if setup.sweep_mu is not None else [p.mu]
    ds = setup.sweep_d if setup.sweep_d is not None else [p.d]

    param_grid = [p.with_(mu=mu, d=d) for d in ds for mu in mus]
    init_grid = [setup.init.with_sigma(s) for s in sigmas]
    cells = threshold.sweep(param_grid, setup.resp, init_grid, setup.solver,
                            max_workers=_threads())

    lines = ["d,mu,sigma,verdict,criterion,trigger_time,final_width,error"]
    for cell in cells:
        verdict = cell.verdict.value if cell.verdict is not None else "error"
        error = cell.error or ""
        lines.append(",".join((
            _fmt(cell.params.d), _fmt(cell.params.mu), _fmt(cell.sigma), verdict,
            cell.criterion, _fmt(cell.time), _fmt(cell.final_width),
            error.replace(",", ";"),
        )))
    (out / "phase.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'phase.csv'} ({len(cells)} cells)")

    if args.svg and len(sigmas) > 1 and len(mus) > 1 and len(ds) == 1:
        lookup = {(c.params.mu, c.sigma): c for c in cells}
        verdicts = [
            [
                (lookup[(mu, s)].verdict.value if lookup[(mu, s)].verdict else "error")
                for mu in mus
            ]
            for s in sigmas
        ]
        svg_heatmap(out / "phase.svg", "phase diagram", "mu", "sigma", mus, sigmas, verdicts)
        print(f"wrote {out / 'phase.svg'}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    setup = load_setup(args.config)
    p, resp = setup.params, setup.resp
    report = model.validate_response(p, resp)

    print("assumption checks:")
    for check in report.checks:
        mark = "pass" if check.passed else "FAIL"
        print(f"  [{mark}] {check.name}: {check.detail}")
    print(f"  G' trend across probes: {report.deriv_trend}")

    r0 = model.basic_reproduction_number(p, resp)
    r0f0 = model.free_boundary_reproduction_number(p, resp, 2.0 * p.h0)
    h_star = model.critical_width(p, resp)
    equilibrium = model.endemic_equilibrium(p, resp)
    print(f"R0 = {r0:.12g}")
    print(f"R0F(0) = {r0f0:.12g}")
    print(f"h* = {'absent (R0 <= 1)' if h_star is None else format(h_star, '.12g')}")
    if equilibrium is None:
        print("equilibrium: absent (R0 <= 1)")
    else:
        print(f"equilibrium: u* = {equilibrium[0]:.12g}, v* = {equilibrium[1]:.12g}")

    small = model.small_data_vanishing_bound(p, resp, deriv_trend=report.deriv_trend)
    if small is None:
        print("small-data vanishing bound: absent (R0F(0) >= 1)")
    else:
        note = "" if small.endpoint_check_rigorous else " [heuristic: G' not monotone]"
        print(f"small-data vanishing bound: delta = {small.delta:.12g}, "
              f"eps = {small.eps:.12g}{note}")
    spread = model.spreading_subsolution_delta(p, resp, deriv_trend=report.deriv_trend)
    if spread is None:
        print("spreading subsolution delta: absent (R0F(0) <= 1)")
    else:
        note = "" if spread.endpoint_check_rigorous else " [heuristic: G' not monotone]"
        print(f"spreading subsolution delta: {spread.delta:.12g}{note}")

    print("resolved config:")
    for key, value in setup.echo.items():
        print(f"  {key} = {value}")
    return 0 if report.passed else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="epifront",
        description="two-front free-boundary epidemic invasion simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", default=None, help="flat key=value config file")
        sp.add_argument("--out", default="epifront-out", help="output directory")
        sp.add_argument("--svg", action="store_true", help="emit SVG plots")

    sp_run = sub.add_parser("run", help="simulate and classify one scenario")
    add_common(sp_run)
    sp_run.add_argument("--profiles", default=None,
                        help="comma-separated times for profile snapshots CSV")
    sp_run.set_defaults(handler=cmd_run)

    sp_thr = sub.add_parser("threshold", help="bracket the sharp threshold by bisection")
    add_common(sp_thr)
    sp_thr.add_argument("--target", choices=("sigma", "mu"), default="sigma")
    sp_thr.set_defaults(handler=cmd_threshold)

    sp_sweep = sub.add_parser("sweep", help="classify a parameter grid")
    add_common(sp_sweep)
    sp_sweep.set_defaults(handler=cmd_sweep)

    sp_val = sub.add_parser("validate", help="check assumptions and print derived constants")
    sp_val.add_argument("--config", default=None, help="flat key=value config file")
    sp_val.set_defaults(handler=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EpifrontError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
