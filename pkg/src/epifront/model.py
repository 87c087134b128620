"""Parameters, infection response, and closed-form threshold quantities.

Everything here is a pure function of its inputs: reproduction numbers,
the principal Dirichlet eigenvalue on an interval habitat, the critical
habitat width, the endemic equilibrium, and the two comparison-function
certificates (a smallness bound that forces extinction and a subsolution
amplitude that forces invasion).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import CertificateError, DomainError, InvalidResponseError

# Bracketed bisection settings used by every scalar search in this module.
ROOT_REL_TOL = 1e-10
ROOT_MAX_ITER = 200

# Probe for the asymptotic-slope test: the limit in (A2) is uncheckable
# exactly, so the slope is sampled at this multiple of the unit scale.
SLOPE_PROBE_SCALE = 1e6


@dataclass(frozen=True)
class ModelParams:
    """Rate constants and geometry of the two-front invasion problem.

    d      bacterial diffusion rate            (length^2 / time)
    a11    bacterial decay rate                (1 / time)
    a12    infective-to-bacteria factor        (bacteria / (infective * time))
    a22    infective recovery rate             (1 / time)
    mu     front response coefficient          (length^2 / (bacteria * time))
    h0     initial habitat half-width          (length)
    """

    d: float
    a11: float
    a12: float
    a22: float
    mu: float
    h0: float

    def __post_init__(self) -> None:
        for name in ("d", "a11", "a12", "a22", "mu", "h0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0 (got {value!r})")

    def with_(self, **changes: float) -> "ModelParams":
        return replace(self, **changes)


class InfectionResponse:
    """The infection rate G with its derivative.

    Instances are callable: ``resp(z)`` evaluates G(z) for scalars or
    numpy arrays.  ``resp.deriv(z)`` evaluates G'(z) and
    ``resp.deriv_at_zero`` holds G'(0), which enters every reproduction
    number.  Use :func:`validate_response` to check (A1)/(A2).
    """

    def __init__(
        self,
        g: Callable,
        g_prime: Callable,
        deriv_at_zero: float,
        kind: str = "custom",
    ):
        self._g = g
        self._g_prime = g_prime
        self.deriv_at_zero = float(deriv_at_zero)
        self.kind = kind

    def __call__(self, z):
        return self._g(z)

    def deriv(self, z):
        return self._g_prime(z)

    @classmethod
    def monod(cls, a21: float) -> "InfectionResponse":
        """Saturating response G(z) = a21 z / (1 + z)."""
        if not (math.isfinite(a21) and a21 > 0):
            raise DomainError(f"a21 must be finite and > 0 (got {a21!r})")
        resp = cls(
            g=lambda z: a21 * z / (1.0 + z),
            g_prime=lambda z: a21 / (1.0 + z) ** 2,
            deriv_at_zero=a21,
            kind="monod",
        )
        resp.a21 = a21
        return resp

    def __repr__(self) -> str:
        return f"InfectionResponse(kind={self.kind!r}, deriv_at_zero={self.deriv_at_zero!r})"


@dataclass(frozen=True)
class InitialData:
    """Initial data (u0, v0) = (sigma * phi, sigma * psi) on [-h0, h0].

    ``phi`` and ``psi`` must vanish at the endpoints and be nonnegative
    inside; independent amplitudes are expressed by scaling psi itself.
    """

    sigma: float
    phi: Callable
    psi: Callable

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise DomainError(f"sigma must be finite and >= 0 (got {self.sigma!r})")

    def u0(self, x):
        return self.sigma * self.phi(x)

    def v0(self, x):
        return self.sigma * self.psi(x)

    def with_sigma(self, sigma: float) -> "InitialData":
        return replace(self, sigma=sigma)

    @staticmethod
    def cosine(sigma: float, h0: float) -> "InitialData":
        """The default hump cos(pi x / (2 h0)) for both components."""
        shape = _cosine_shape(h0)
        return InitialData(sigma=sigma, phi=shape, psi=shape)

    @staticmethod
    def skewed_cosine(sigma: float, h0: float, skew: float = 0.5) -> "InitialData":
        """Asymmetric hump cos(pi x/(2 h0)) * (1 + skew * sin(pi x/h0))."""
        if not abs(skew) < 1.0:
            raise DomainError("skew magnitude must be < 1 to keep the shape nonnegative")
        shape = _cosine_shape(h0)

        def skewed(x):
            return shape(x) * (1.0 + skew * np.sin(np.pi * x / h0))

        return InitialData(sigma=sigma, phi=skewed, psi=skewed)


def _cosine_shape(h0: float) -> Callable:
    def shape(x):
        return np.cos(np.pi * x / (2.0 * h0))

    return shape


# ---------------------------------------------------------------------------
# Response validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    witness: float | None = None


@dataclass(frozen=True)
class ResponseReport:
    checks: tuple[CheckResult, ...]
    slope_cap: float
    deriv_trend: str  # "decreasing" | "increasing" | "mixed"

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def default_probe_grid(scale: float = 1.0) -> np.ndarray:
    """Log-spaced probes from 1e-6 to 1e6 times the unit scale."""
    s = max(1.0, float(scale))
    return np.logspace(-6.0, math.log10(SLOPE_PROBE_SCALE * s), 121)


def validate_response(
    p: ModelParams,
    resp: InfectionResponse,
    probe_grid: Sequence[float] | None = None,
) -> ResponseReport:
    """Check (A1)/(A2) on a probe grid and report each condition.

    Checks: G(0) = 0; G' > 0 at every probe; z -> G(z)/z non-increasing;
    and the sampled asymptotic slope below a11 a22 / a12.  The trend of
    G' across the grid is recorded because both comparison certificates
    reduce the pointwise condition on G'(xi) to interval endpoints,
    which is only rigorous for monotone G'.
    """
    probes = np.asarray(probe_grid if probe_grid is not None else default_probe_grid(), dtype=float)
    if probes.ndim != 1 or probes.size < 3:
        raise DomainError("probe grid must be a 1-D sequence with at least 3 points")
    if probes[0] <= 0 or np.any(np.diff(probes) <= 0):
        raise DomainError("probe grid must be strictly increasing and start above 0")

    g0 = float(resp(0.0))
    values = np.asarray(resp(probes), dtype=float)
    derivs = np.asarray(resp.deriv(probes), dtype=float)
    if not (math.isfinite(g0) and np.all(np.isfinite(values)) and np.all(np.isfinite(derivs))):
        raise InvalidResponseError("G or G' is non-finite on the probe grid")

    checks: list[CheckResult] = []

    tol0 = 1e-12 * max(1.0, abs(resp.deriv_at_zero))
    checks.append(
        CheckResult("zero_at_origin", abs(g0) <= tol0, f"G(0) = {g0!r}", witness=0.0)
    )

    pos = derivs > 0
    bad = None if bool(pos.all()) and resp.deriv_at_zero > 0 else float(probes[np.argmin(pos)])
    checks.append(
        CheckResult(
            "derivative_positive",
            bad is None,
            "G' > 0 at all probes" if bad is None else f"G'({bad!r}) <= 0",
            witness=bad,
        )
    )

    ratios = values / probes
    slack = 1e-12 * np.maximum(np.abs(ratios[:-1]), 1e-300)
    rising = ratios[1:] > ratios[:-1] + slack
    wit = float(probes[1:][rising][0]) if rising.any() else None
    checks.append(
        CheckResult(
            "ratio_nonincreasing",
            wit is None,
            "G(z)/z non-increasing" if wit is None else f"G(z)/z increases at z={wit!r}",
            witness=wit,
        )
    )

    slope_cap = p.a11 * p.a22 / p.a12
    tail = float(ratios[-1])
    checks.append(
        CheckResult(
            "asymptotic_slope",
            tail < slope_cap,
            f"G(z)/z = {tail:.6g} at z = {probes[-1]:.3g} vs cap {slope_cap:.6g}",
            witness=float(probes[-1]),
        )
    )

    dslack = 1e-12 * np.maximum(np.abs(derivs[:-1]), 1e-300)
    nonrising = bool(np.all(derivs[1:] <= derivs[:-1] + dslack))
    nonfalling = bool(np.all(derivs[1:] >= derivs[:-1] - dslack))
    trend = "decreasing" if nonrising else ("increasing" if nonfalling else "mixed")

    return ResponseReport(checks=tuple(checks), slope_cap=slope_cap, deriv_trend=trend)


# ---------------------------------------------------------------------------
# Reproduction numbers and eigen-quantities
# ---------------------------------------------------------------------------

def basic_reproduction_number(p: ModelParams, resp: InfectionResponse) -> float:
    """R0 = G'(0) a12 / (a11 a22), the nonspatial threshold."""
    return resp.deriv_at_zero * p.a12 / (p.a11 * p.a22)


def free_boundary_reproduction_number(
    p: ModelParams, resp: InfectionResponse, width: float
) -> float:
    """Habitat-dependent reproduction number on an interval of the given width.

    Strictly increasing in the width, with supremum R0.
    """
    if not width > 0:
        raise DomainError(f"width must be > 0 (got {width!r})")
    return (resp.deriv_at_zero * p.a12 / p.a22) / (p.a11 + p.d * (math.pi / width) ** 2)


def principal_eigenvalue(p: ModelParams, resp: InfectionResponse, width: float) -> float:
    """Principal Dirichlet eigenvalue of the linearized operator on the habitat.

    Equals a11 + d (pi/width)^2 - G'(0) a12 / a22 and has the same sign
    as 1 - R0F(width).
    """
    if not width > 0:
        raise DomainError(f"width must be > 0 (got {width!r})")
    return p.a11 + p.d * (math.pi / width) ** 2 - resp.deriv_at_zero * p.a12 / p.a22


def critical_width(p: ModelParams, resp: InfectionResponse) -> float | None:
    """The unique width with R0F = 1, or None when R0 <= 1."""
    gain = resp.deriv_at_zero * p.a12 / p.a22 - p.a11
    if gain <= 0:
        return None
    return math.pi * math.sqrt(p.d / gain)


def endemic_equilibrium(
    p: ModelParams, resp: InfectionResponse
) -> tuple[float, float] | None:
    """Positive steady state (u*, v*) of the nonspatial system, or None if R0 <= 1.

    u* is the unique positive solution of a11 u = (a12/a22) G(u), located
    by bracketed bisection on the monotone excess rate
    a11 - (a12/a22) G(u)/u; then v* = G(u*)/a22.
    """
    if basic_reproduction_number(p, resp) <= 1.0:
        return None

    def excess(u: float) -> float:
        return p.a11 - (p.a12 / p.a22) * resp(u) / u

    lo = 1e-12
    if excess(lo) >= 0:  # pragma: no cover - R0 > 1 forces excess(0+) < 0
        raise DomainError("excess rate not negative near 0 despite R0 > 1")
    hi = 1.0
    for _ in range(200):
        if excess(hi) > 0:
            break
        hi *= 2.0
    else:
        raise CertificateError("no slope crossing found; (A2) limit appears violated")
    u_star = _bisect_root(excess, lo, hi)
    return u_star, float(resp(u_star)) / p.a22


# ---------------------------------------------------------------------------
# Comparison-function certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmallDataBound:
    """Certified smallness region that forces extinction when R0F(0) < 1.

    Initial data lying below eps * psi pointwise (and below
    v_factor * eps * psi in the second component), with
    psi(x) = cos(pi x / (2 h0)), must vanish.  ``sup_u_threshold`` and
    ``sup_v_threshold`` are the cruder sup-norm versions of the same
    guarantee.  ``endpoint_check_rigorous`` is False when G' is not
    monotone, in which case the certificate is heuristic.
    """

    delta: float
    eps: float
    lambda0: float
    v_factor: float
    sup_u_threshold: float
    sup_v_threshold: float
    endpoint_check_rigorous: bool = True


@dataclass(frozen=True)
class SpreadingBound:
    """Certified subsolution amplitude that forces invasion when R0F(0) > 1.

    Initial data dominating (delta * psi, v_factor * delta * psi) with
    psi(x) = cos(pi x / (2 h0)) must spread.
    """

    delta: float
    lambda0: float
    v_factor: float
    endpoint_check_rigorous: bool = True


def small_data_vanishing_bound(
    p: ModelParams,
    resp: InfectionResponse,
    delta_cap: float = 1.0,
    deriv_trend: str = "decreasing",
) -> SmallDataBound | None:
    """Compute the extinction certificate (delta, eps), or None if R0F(0) >= 1.

    delta is the largest value in (0, delta_cap] satisfying both scalar
    comparison inequalities, found by predicate bisection; eps follows
    as delta^2 h0^2 (1 + delta) / (mu pi) from the eigenfunction slope
    psi'(h0) = -pi/(2 h0).
    """
    width0 = 2.0 * p.h0
    if free_boundary_reproduction_number(p, resp, width0) >= 1.0:
        return None
    lam0 = principal_eigenvalue(p, resp, width0)
    drift = abs(-p.a11 + resp.deriv_at_zero * p.a12 / p.a22)
    g_prime0 = resp.deriv_at_zero

    def eps_of(delta: float) -> float:
        return delta * delta * p.h0 * p.h0 * (1.0 + delta) / (p.mu * math.pi)

    def decay_ok(delta: float) -> bool:
        shrink = 1.0 / (1.0 + delta) ** 2
        return -delta + (shrink - 1.0) * drift + (shrink - 0.25) * lam0 >= 0.0

    def recovery_ok(delta: float) -> bool:
        base = (p.a22 - delta) * lam0 / (4.0 * p.a12) - g_prime0 * delta / p.a22
        # G'(0) - G'(xi) is extremal at an interval endpoint for monotone G'.
        for xi in (0.0, eps_of(delta)):
            if base + (g_prime0 - float(resp.deriv(xi))) < 0.0:
                return False
        return True

    def admissible(delta: float) -> bool:
        return decay_ok(delta) and recovery_ok(delta)

    delta = _largest_satisfying(admissible, delta_cap)
    if delta is None:
        return None
    eps = eps_of(delta)
    crest = math.cos(math.pi / (2.0 + delta))  # psi(h0 / (1 + delta/2))
    v_factor = g_prime0 / p.a22 + lam0 / (4.0 * p.a12)
    return SmallDataBound(
        delta=delta,
        eps=eps,
        lambda0=lam0,
        v_factor=v_factor,
        sup_u_threshold=eps * crest,
        sup_v_threshold=eps * crest * v_factor,
        endpoint_check_rigorous=(deriv_trend != "mixed"),
    )


def spreading_subsolution_delta(
    p: ModelParams,
    resp: InfectionResponse,
    delta_cap: float | None = None,
    deriv_trend: str = "decreasing",
) -> SpreadingBound | None:
    """Compute the invasion certificate delta, or None unless R0F(0) > 1.

    Requires the strict case (negative eigenvalue); the marginal case
    R0F(0) = 1 spreads by waiting and carries no pointwise certificate.
    delta is the largest value with G'(0) - G'(delta) <= -a22 lambda0/(4 a12),
    capped at the equilibrium scale so the subsolution stays below (u*, v*).
    """
    lam0 = principal_eigenvalue(p, resp, 2.0 * p.h0)
    if lam0 >= 0.0:
        return None
    if delta_cap is None:
        equilibrium = endemic_equilibrium(p, resp)
        assert equilibrium is not None  # lam0 < 0 implies R0F(0) > 1 < R0
        delta_cap = equilibrium[0]
    slack = -p.a22 * lam0 / (4.0 * p.a12)
    g_prime0 = resp.deriv_at_zero

    def admissible(delta: float) -> bool:
        return g_prime0 - float(resp.deriv(delta)) <= slack

    delta = _largest_satisfying(admissible, delta_cap)
    if delta is None:
        return None
    v_factor = g_prime0 / p.a22 + lam0 / (4.0 * p.a12)
    return SpreadingBound(
        delta=delta,
        lambda0=lam0,
        v_factor=v_factor,
        endpoint_check_rigorous=(deriv_trend != "mixed"),
    )


# ---------------------------------------------------------------------------
# Scalar searches
# ---------------------------------------------------------------------------

def _bisect_root(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Bisection for a sign change of f on [lo, hi] to ROOT_REL_TOL."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise DomainError("bisection bracket does not straddle a root")
    for _ in range(ROOT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if hi - lo <= ROOT_REL_TOL * max(abs(lo), abs(hi)):
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (fhi > 0):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _largest_satisfying(pred: Callable[[float], bool], cap: float) -> float | None:
    """Largest delta in (0, cap] with pred true, for pred true near 0.

    Returns cap when the predicate holds there; None when it fails even
    arbitrarily close to 0 (certificate hypothesis violated).
    """
    if pred(cap):
        return cap
    lo, hi = 0.0, cap
    if not pred(lo):
        return None
    for _ in range(ROOT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if hi - lo <= ROOT_REL_TOL * max(abs(hi), 1e-300):
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo if lo > 0.0 else None
