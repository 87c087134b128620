"""Trajectory diagnostics: verdict classification, a-priori bound
certificates, conservation residuals, and runtime invariant monitors.

Everything operates on recorded trajectories (or single frames) and is
pure; nothing here touches the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import CertificateError, DomainError, MonitorViolation
from .model import (
    InfectionResponse,
    InitialData,
    ModelParams,
    critical_width,
    endemic_equilibrium,
)

if TYPE_CHECKING:  # pragma: no cover
    from .solver import Frame, Trajectory


class Verdict(str, Enum):
    SPREADING = "spreading"
    VANISHING = "vanishing"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Evidence:
    """What fired the verdict, when, and the supporting state."""

    criterion: str
    time: float
    r0f: float
    final_width: float
    final_sup_u: float
    final_sup_v: float
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    evidence: Evidence


@dataclass(frozen=True)
class ClassifyThresholds:
    """Numeric margins for the verdict rules.

    The habitat reproduction trigger uses a small positive margin because
    the exact-arithmetic statement is R0F >= 1; the vanishing rule pairs a
    relative sup-norm decay test with a width-plateau test over the
    trailing fraction of frames.
    """

    r0f_margin: float = 1e-6
    width_factor: float = 10.0
    interior_factor: float = 0.5
    vanish_ratio: float = 1e-6
    plateau_ratio: float = 1e-6
    trailing_fraction: float = 0.1


def classify(
    traj: "Trajectory",
    p: ModelParams,
    resp: InfectionResponse,
    thresholds: ClassifyThresholds | None = None,
) -> Classification:
    """Spreading / vanishing / undetermined with the evidence that fired.

    Spreading: some frame has R0F >= 1 + margin, or the width blew past
    width_factor * h_star with a substantial interior level.  Vanishing:
    sup norms decayed below vanish_ratio of their initial sum while the
    width stalled.  Otherwise undetermined at the horizon.
    """
    th = thresholds or ClassifyThresholds()
    frames = traj.frames
    if not frames:
        raise DomainError("cannot classify an empty trajectory")
    last = frames[-1]

    def evidence(criterion: str, t: float, r0f: float, **details) -> Evidence:
        return Evidence(
            criterion=criterion,
            time=t,
            r0f=r0f,
            final_width=last.width,
            final_sup_u=last.sup_w,
            final_sup_v=last.sup_z,
            details=details,
        )

    r0f = traj.column("r0f")
    hot = np.nonzero(r0f >= 1.0 + th.r0f_margin)[0]
    if hot.size:
        k = int(hot[0])
        return Classification(
            Verdict.SPREADING,
            evidence("r0f_threshold", frames[k].t, float(r0f[k]), margin=th.r0f_margin),
        )

    h_star = critical_width(p, resp)
    equilibrium = endemic_equilibrium(p, resp)
    if h_star is not None and equilibrium is not None:
        widths = traj.widths
        sup_w = traj.column("sup_w")
        big = np.nonzero(
            (widths > th.width_factor * h_star)
            & (sup_w > th.interior_factor * equilibrium[0])
        )[0]
        if big.size:
            k = int(big[0])
            return Classification(
                Verdict.SPREADING,
                evidence(
                    "width_blowout",
                    frames[k].t,
                    float(r0f[k]),
                    width=float(widths[k]),
                    sup_u=float(sup_w[k]),
                ),
            )

    initial_sup = frames[0].sup_w + frames[0].sup_z
    tail_start = int(math.floor((len(frames) - 1) * (1.0 - th.trailing_fraction)))
    growth = last.width - frames[tail_start].width
    decayed = last.sup_w + last.sup_z <= th.vanish_ratio * initial_sup
    stalled = growth < th.plateau_ratio * traj.h0
    if decayed and stalled:
        return Classification(
            Verdict.VANISHING,
            evidence(
                "decay_plateau",
                last.t,
                float(r0f[-1]),
                trailing_width_growth=growth,
                sup_ratio=(last.sup_w + last.sup_z) / initial_sup if initial_sup else 0.0,
            ),
        )

    return Classification(
        Verdict.UNDETERMINED,
        evidence("horizon", last.t, float(r0f[-1]), trailing_width_growth=growth),
    )


# ---------------------------------------------------------------------------
# A-priori bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCertificate:
    """Constants (C1, C2) bounding the fields and C3 bounding front speeds.

    Validity: -a11 C1 + a12 C2 < 0, -a22 C2 + G(C1) < 0, and the pair
    dominates the initial data; C3 = 2 M C1 mu.
    """

    c1: float
    c2: float
    c3: float
    m: float


_CERT_MAX_DOUBLINGS = 60


def bound_certificate(
    p: ModelParams, resp: InfectionResponse, init: InitialData, n_samples: int = 2049
) -> BoundCertificate:
    """Search outward for a valid (C1, C2) pair by doubling C1.

    Failure to find one within the doubling budget signals that the
    response violates the (A2) slope cap.
    """
    x = np.linspace(-p.h0, p.h0, n_samples)
    u0 = np.asarray(init.u0(x), dtype=float)
    v0 = np.asarray(init.v0(x), dtype=float)
    sup_u0 = float(np.max(u0, initial=0.0))
    sup_v0 = float(np.max(v0, initial=0.0))
    sup_du0 = float(np.max(np.abs(np.gradient(u0, x))))

    c1 = max(sup_u0, 1.0)
    for _ in range(_CERT_MAX_DOUBLINGS):
        lo = max(float(resp(c1)) / p.a22, sup_v0)
        hi = p.a11 * c1 / p.a12
        if lo < hi:
            c2 = 0.5 * (lo + hi)
            if -p.a11 * c1 + p.a12 * c2 < 0.0 and -p.a22 * c2 + float(resp(c1)) < 0.0:
                m = max(
                    1.0 / p.h0,
                    math.sqrt(p.a12 * c2 / (2.0 * p.d * c1)),
                    4.0 * (sup_u0 + sup_du0) / (3.0 * c1),
                )
                return BoundCertificate(c1=c1, c2=c2, c3=2.0 * m * c1 * p.mu, m=m)
        c1 *= 2.0
    raise CertificateError(
        "no valid bound pair within the doubling budget; the response "
        "appears to violate the asymptotic slope cap"
    )


# ---------------------------------------------------------------------------
# Conservation and symmetry diagnostics
# ---------------------------------------------------------------------------

def mass_balance_residual(
    traj: "Trajectory", p: ModelParams, resp: InfectionResponse
) -> np.ndarray:
    """Per-frame residual of the integrated balance law.

    The exact identity relates the weighted mass, the habitat growth
    scaled by d/mu, and the time-integrated reaction; the discrete
    residual uses trapezoid quadrature in x (already folded into the
    recorded mass and reaction columns) and cumulative trapezoid in t.
    """
    if len(traj.frames) < 2:
        raise DomainError("mass balance needs at least two frames")
    t = traj.times
    mass = traj.column("mass")
    widths = traj.widths
    reaction = traj.column("reaction")
    cumulative = cumulative_trapezoid(reaction, t, initial=0.0)
    return mass - mass[0] - (p.d / p.mu) * (widths[0] - widths) - cumulative


def symmetry_band_check(traj: "Trajectory") -> float:
    """Worst excess of |g + h| beyond the 2 h0 symmetry band (0 when respected)."""
    centers = traj.column("g") + traj.column("h")
    return float(np.max(np.maximum(0.0, np.abs(centers) - 2.0 * traj.h0), initial=0.0))


def equilibrium_convergence(
    traj: "Trajectory",
    p: ModelParams,
    resp: InfectionResponse,
    half_width: float,
) -> np.ndarray:
    """Sup of |u - u*| + |v - v*| over the window [-half_width, half_width] per frame.

    Points of the window not yet covered by the habitat contribute the
    full equilibrium distance u* + v*.
    """
    equilibrium = endemic_equilibrium(p, resp)
    if equilibrium is None:
        raise DomainError("no endemic equilibrium: R0 <= 1")
    u_star, v_star = equilibrium
    y = traj.y_grid()
    errs = np.empty(len(traj.frames))
    for k, f in enumerate(traj.frames):
        x = (y * f.width + traj.h0 * (f.h + f.g)) / (2.0 * traj.h0)
        inside = (x >= -half_width) & (x <= half_width)
        err = 0.0
        if inside.any():
            err = float(np.max(np.abs(f.w[inside] - u_star) + np.abs(f.z[inside] - v_star)))
        if f.g > -half_width or f.h < half_width:
            err = max(err, u_star + v_star)
        errs[k] = err
    return errs


# ---------------------------------------------------------------------------
# Runtime monitors
# ---------------------------------------------------------------------------

@dataclass
class Monitors:
    """Per-frame hard checks on the analytic invariants.

    ``certificate`` feeds the field-bound and speed checks; the symmetry
    check needs only the frame.  A violation raises
    :class:`MonitorViolation`, aborting the run with a diagnostic.
    """

    certificate: BoundCertificate | None = None
    bounds: bool = True
    symmetry: bool = True
    speed: bool = True
    bound_slack: float = 1e-8
    speed_margin: float = 1.1
    clip_ratio: float = 1e-8

    def on_frame(self, frame: "Frame", traj: "Trajectory") -> None:
        if self.bounds and self.certificate is not None:
            if frame.sup_w > self.certificate.c1 + self.bound_slack:
                raise MonitorViolation(
                    "bounds", frame.t, f"sup u = {frame.sup_w!r} > C1 = {self.certificate.c1!r}"
                )
            if frame.sup_z > self.certificate.c2 + self.bound_slack:
                raise MonitorViolation(
                    "bounds", frame.t, f"sup v = {frame.sup_z!r} > C2 = {self.certificate.c2!r}"
                )
            mass_scale = frame.mass + 1e-9 * traj.frames[0].mass + 1e-300
            if frame.clipped > self.clip_ratio * mass_scale:
                raise MonitorViolation(
                    "bounds", frame.t, f"clipped mass {frame.clipped!r} vs mass {frame.mass!r}"
                )
        if self.symmetry:
            excess = abs(frame.g + frame.h) - 2.0 * traj.h0
            if excess >= 0.0:
                raise MonitorViolation(
                    "symmetry", frame.t, f"|g + h| = {abs(frame.g + frame.h)!r} >= 2 h0"
                )
        if self.speed and self.certificate is not None:
            cap = self.certificate.c3 * self.speed_margin
            if frame.h_speed > cap or -frame.g_speed > cap:
                raise MonitorViolation(
                    "speed",
                    frame.t,
                    f"front speeds ({frame.g_speed!r}, {frame.h_speed!r}) exceed C3 = "
                    f"{self.certificate.c3!r}",
                )


def make_monitors(
    p: ModelParams,
    resp: InfectionResponse,
    init: InitialData,
    bounds: bool = True,
    symmetry: bool = True,
    speed: bool = True,
) -> Monitors:
    """Monitors wired to a freshly computed bound certificate."""
    cert = bound_certificate(p, resp, init) if (bounds or speed) else None
    return Monitors(certificate=cert, bounds=bounds, symmetry=symmetry, speed=speed)
