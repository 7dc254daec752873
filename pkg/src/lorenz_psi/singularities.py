"""Complex-time singularities of periodic Lorenz orbits.

Location runs in two stages.

1. Coefficient asymptotics.  Near a conjugate pair of double poles
   ``p, conj(p)`` the Taylor coefficients of ``z`` at a real point behave
   like ``(n + 1) Re(K w^n)`` with ``w = 1/(p - t_star)``.  After dividing
   by ``n + 1`` the tail obeys the two-term recurrence
   ``b_{n+1} = (w + conj w) b_n - |w|^2 b_{n-1}``, whose coefficients are
   fitted by least squares; the roots of the characteristic polynomial
   give ``rho = 1/|w|`` and ``theta = -arg w``.
2. Marching.  The solution is continued in complex time toward the
   estimate, stopping at standoff distances that halve each round.  At
   each stop the leading psi-series term ``z ~ -1/(5 (t - t0)^2)`` is
   inverted for a new ``t0``.

:func:`fit_psi_parameters` then matches a truncated psi series to
integrated states on an annulus around the refined singularity.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .orbits import PeriodicOrbit, find_periodic_orbit
from .series import DMode, PsiSeries, SeriesFamily, generate
from .taylor import (PathSpec, PrecisionConfig, State, TaylorJet, _jet_numpy, flow,
                     integrate_path, taylor_jet)

__all__ = [
    "LocatorError",
    "FitError",
    "SingularityEstimate",
    "SingularityFit",
    "LocateResult",
    "nearest_singularity_estimate",
    "scan_orbit",
    "best_estimate",
    "refine_singularity",
    "RefineConfig",
    "check_divergence_bound",
    "DivergenceReport",
    "annulus_samples",
    "fit_psi_parameters",
    "synthetic_samples",
    "locate",
    "ATTRACTOR_IM_BOUND",
]

log = logging.getLogger(__name__)

# known lower bound on |Im t0| for singularities of solutions on the attractor
ATTRACTOR_IM_BOUND = 0.037


class LocatorError(RuntimeError):
    """A location stage failed; ``stage`` names it and ``best`` holds partial output."""

    def __init__(self, message: str, stage: str = "", best=None):
        super().__init__(f"{stage}: {message}" if stage else message)
        self.stage = stage
        self.best = best


class FitError(RuntimeError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SingularityEstimate:
    t_star: float
    rho: float
    theta: float
    t0: complex
    method_stage: str  # "asymptotic" or "refined"
    sigma: float = 0.0  # spread of the complex estimate over fit windows
    state: Optional[Tuple[float, float, float]] = None  # real state at t_star

    def __post_init__(self):
        if self.method_stage not in ("asymptotic", "refined"):
            raise ValueError(f"unknown stage {self.method_stage!r}")
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    @property
    def conjugate(self) -> complex:
        return self.t0.conjugate()

    def to_json(self) -> dict:
        return {"t_star": self.t_star, "rho": self.rho, "theta": self.theta,
                "t0": [self.t0.real, self.t0.imag], "stage": self.method_stage,
                "sigma": self.sigma}


# ---------------------------------------------------------------------------
# stage 1: coefficient asymptotics
# ---------------------------------------------------------------------------


def _pair_from_coefficients(a: np.ndarray, lo: int) -> complex:
    """``w`` (upper half plane root) from the tail ``a[lo:]`` of a real coefficient sequence."""
    n = np.arange(len(a))
    b = a / (n + 1)
    tail = np.abs(b[lo:])
    good = tail > 0
    if good.sum() < 4:
        raise LocatorError("coefficient tail vanishes", stage="asymptotic")
    slope = np.polyfit(n[lo:][good], np.log(tail[good]), 1)[0]
    scale = math.exp(-slope)
    bs = b * scale ** n
    top = len(a) - 1
    M = np.column_stack([bs[lo:top], bs[lo - 1: top - 1]])
    rhs = bs[lo + 1: top + 1]
    (p, q), *_ = np.linalg.lstsq(M, rhs, rcond=None)
    disc = p * p + 4 * q
    if disc >= 0:
        raise LocatorError("tail is not oscillatory (real characteristic roots)", stage="asymptotic")
    w = complex(p / 2, math.sqrt(-disc) / 2) / scale
    return w


def nearest_singularity_estimate(jet: TaylorJet, windows: Sequence[int] = (20, 25, 30, 35)
                                 ) -> SingularityEstimate:
    """Conjugate-pair estimate from the ``z`` coefficients of a real jet.

    The fit is repeated with tails starting at each index in ``windows``;
    the result uses the last window and ``sigma`` is the largest distance
    from it to the other windows' estimates.  The estimates drift slowly
    with the window (log corrections in the psi series), so this spread
    is a fair scale for the remaining error.  The singularity above the real axis is
    returned; its conjugate is the other member of the pair.
    """
    if jet.extended:
        coeffs = np.array([float(complex(r[2]).real) for r in jet.coeffs])
        imag = max(abs(complex(r[2]).imag) for r in jet.coeffs)
    else:
        coeffs = np.real(np.asarray(jet.coeffs)[:, 2]).astype(float)
        imag = float(np.max(np.abs(np.imag(np.asarray(jet.coeffs)[:, 2]))))
    if abs(complex(jet.base.t).imag) > 0 or imag > 1e-12 * max(1.0, np.max(np.abs(coeffs))):
        raise ValueError("the asymptotic stage needs a real jet at a real time")
    usable = [w for w in windows if w + 6 <= jet.order]
    if not usable:
        raise ValueError(f"jet order {jet.order} is too low for the tail windows")
    ests = []
    for lo in usable:
        w = _pair_from_coefficients(coeffs, lo)
        ests.append(1.0 / w)
    ests = [e.conjugate() if e.imag < 0 else e for e in ests]
    d = ests[-1]
    if abs(d.imag) == 0:
        raise LocatorError("real singularity estimate rejected", stage="asymptotic")
    spread = max(abs(e - d) for e in ests)
    t_star = float(complex(jet.base.t).real)
    base = tuple(float(complex(v).real) for v in jet.base.vector())
    return SingularityEstimate(t_star, abs(d), cmath.phase(d), complex(t_star + d),
                               "asymptotic", spread, base)


def scan_orbit(orbit: PeriodicOrbit, samples: int = 100, order: int = 60,
               windows: Sequence[int] = (20, 25, 30, 35)) -> List[SingularityEstimate]:
    """Asymptotic estimates at ``samples`` equally spaced times over one period."""
    out = []
    state = np.array(orbit.initial_state, dtype=float)
    t = 0.0
    for k in range(samples):
        tk = orbit.period * k / samples
        if tk > t:
            state = flow(state, tk - t).state
            t = tk
        jet = taylor_jet(State(tk, *state), order)
        try:
            out.append(nearest_singularity_estimate(jet, windows))
        except LocatorError:
            continue
    if not out:
        raise LocatorError("no expansion point gave an oscillatory tail", stage="asymptotic")
    return out


def best_estimate(estimates: Sequence[SingularityEstimate]) -> SingularityEstimate:
    """The estimate whose singularity is closest to its expansion point.

    That point has the cleanest coefficient tail, and the singularity it
    sees is the one closest to the real line in its neighbourhood.
    """
    return min(estimates, key=lambda e: e.rho)


# ---------------------------------------------------------------------------
# stage 2: marching refinement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RefineConfig:
    order: int = 30
    tolerance: float = 1e-14
    first_standoff: float = 0.5  # fraction of the initial distance
    min_standoff: float = 5e-6
    movement_tol: float = 1e-10
    terms: int = 1  # 1: leading term only, 2: include the 1/(t - t0) term
    max_rounds: int = 60

    def __post_init__(self):
        if self.terms not in (1, 2):
            raise ValueError("terms must be 1 or 2")
        if not 0 < self.first_standoff < 1:
            raise ValueError("first_standoff must lie in (0, 1)")


def _invert_leading(z: complex, terms: int) -> Tuple[complex, complex]:
    """Both candidates for ``h = t - t0`` given ``z(t)``."""
    if terms == 1:
        r = cmath.sqrt(-1.0 / (5.0 * z))
        return r, -r
    # z h^2 - (17/9) h + 1/5 = 0
    a, b, c = z, -17.0 / 9.0, 0.2
    s = cmath.sqrt(b * b - 4 * a * c)
    return (-b + s) / (2 * a), (-b - s) / (2 * a)


@dataclass
class RefineResult:
    estimate: SingularityEstimate
    trace: List[tuple]
    history: List[complex]
    standoffs: List[float]


def refine_singularity(est: SingularityEstimate, cfg: RefineConfig = RefineConfig(),
                       state: Optional[Sequence[float]] = None,
                       lower: bool = False) -> RefineResult:
    """March toward ``est.t0`` (or its conjugate when ``lower``) and correct it.

    ``state`` is the real state at ``est.t_star``; it defaults to the one
    stored on the estimate.  The approach trace (all integration steps)
    is returned for :func:`check_divergence_bound`.
    """
    state = state if state is not None else est.state
    if state is None:
        raise ValueError("a real state at t_star is needed to start the march")
    t0 = est.t0.conjugate() if lower else est.t0
    cur = State(complex(est.t_star), *(complex(v) for v in state))
    pcfg = PrecisionConfig(taylor_order=cfg.order)
    standoff = cfg.first_standoff * abs(t0 - cur.t)
    trace: List[tuple] = [(cur.t, cur.x, cur.y, cur.z)]
    history = [t0]
    standoffs = []
    moves: List[float] = []
    for _ in range(cfg.max_rounds):
        direction = (t0 - cur.t) / abs(t0 - cur.t)
        target = t0 - standoff * direction
        if abs(target - cur.t) > 0:
            res = integrate_path(cur, PathSpec((cur.t, target), tolerance=cfg.tolerance), pcfg)
            trace.extend(r[:4] for r in res.trace[1:])
            if res.diverged:
                raise LocatorError(f"march diverged ({res.reason})", stage="refine", best=t0)
            cur = res.state
        cands = [cur.t - h for h in _invert_leading(cur.z, cfg.terms)]
        new = min(cands, key=lambda c: abs(c - t0))
        move = abs(new - t0)
        moves.append(move)
        t0 = new
        history.append(t0)
        standoffs.append(standoff)
        if len(moves) >= 4 and moves[-1] > moves[-2] > moves[-3] and moves[-1] > 10 * cfg.movement_tol \
                and standoff < 1e-3:
            raise LocatorError("t0 updates are not settling", stage="refine", best=t0)
        if move < cfg.movement_tol or standoff <= cfg.min_standoff:
            break
        standoff = max(0.5 * standoff, cfg.min_standoff)
        # never ask the march to pass the current estimate
        standoff = min(standoff, 0.5 * abs(t0 - cur.t)) if abs(t0 - cur.t) > 0 else standoff
    d = t0 - est.t_star
    refined = SingularityEstimate(est.t_star, abs(d), cmath.phase(d), t0, "refined",
                                  est.sigma, est.state)
    return RefineResult(refined, trace, history, standoffs)


# ---------------------------------------------------------------------------
# the 1/8 product bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceReport:
    holds: bool
    min_product: float
    d_min: float
    samples: int
    quadratic_products: Tuple[Tuple[float, float], ...]

    def to_json(self) -> dict:
        return {"holds": self.holds, "min_product": self.min_product, "d_min": self.d_min,
                "samples": self.samples,
                "quadratic_products": [list(p) for p in self.quadratic_products]}


def check_divergence_bound(trace: Sequence[tuple], t0: complex, bound: float = 0.125
                           ) -> DivergenceReport:
    """``|t - t0| (|x| + |y| + |z|) >= 1/8`` over the last decade of approach.

    The last decade is every sample with ``|t - t0| <= 10 d_min``.  The
    report also lists ``(|t - t0|, |t - t0|^2 (|y| + |z|))``, which should
    approach ``2/5`` (the leading coefficients of ``y`` and ``z`` both
    have modulus ``1/5``).
    """
    if not trace:
        raise ValueError("empty approach trace")
    ts = np.array([complex(r[0]) for r in trace])
    xs = np.array([[complex(v) for v in r[1:4]] for r in trace])
    d = np.abs(ts - t0)
    d_min = float(d.min())
    if d_min > 1e-3:
        raise ValueError(f"trace comes no closer than {d_min:.3e} to t0 (needs 1e-3)")
    sel = d <= 10 * d_min
    prod = d[sel] * np.abs(xs[sel]).sum(axis=1)
    quad = d[sel] ** 2 * (np.abs(xs[sel, 1]) + np.abs(xs[sel, 2]))
    order = np.argsort(d[sel])
    pairs = tuple((float(d[sel][i]), float(quad[i])) for i in order[:10])
    return DivergenceReport(bool(np.all(prod >= bound)), float(prod.min()), d_min,
                            int(sel.sum()), pairs)


# ---------------------------------------------------------------------------
# psi-series fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularityFit:
    t0: complex
    family: SeriesFamily
    C: complex
    D: complex
    rms_residual: float
    window: Tuple[float, float]
    holdout_rms: float = math.nan
    N: int = 0

    def to_json(self) -> dict:
        return {"t0": [self.t0.real, self.t0.imag], "family": self.family.value,
                "C": [self.C.real, self.C.imag], "D": [self.D.real, self.D.imag],
                "rms": self.rms_residual, "holdout_rms": self.holdout_rms,
                "window": list(self.window), "N": self.N, "im_D": self.D.imag}


class _SymbolicEvaluator:
    """Vectorised evaluation of a symbolic-``D`` series at many points.

    Coefficients are stored as complex arrays indexed ``[u_power, d_power]``
    so each ``P_n(u, D)`` is one ``polyval2d`` call.
    """

    def __init__(self, series: PsiSeries, N: int):
        if N > series.max_m:
            raise ValueError(f"N = {N} exceeds the generated order {series.max_m}")
        self.N = N
        self.tables = []
        for letter, start in (("P", -1), ("Q", -2), ("R", -2)):
            rows = []
            for n in range(start, N + 1):
                poly = getattr(series, letter)(n)
                du = max(poly.u_degree, 0) + 1
                dd = poly.d_degree + 1 if poly.u_degree >= 0 else 1
                arr = np.zeros((du, max(dd, 1)), dtype=complex)
                for (up, dp), c in poly.iter_terms():
                    arr[up, dp] = complex(c)
                rows.append((n, arr))
            self.tables.append((start, rows))

    def __call__(self, h: np.ndarray, u: np.ndarray, D: complex) -> np.ndarray:
        out = np.zeros((3, len(h)), dtype=complex)
        for k, (start, rows) in enumerate(self.tables):
            acc = np.zeros(len(h), dtype=complex)
            for n, arr in reversed(rows):
                dvals = np.polynomial.polynomial.polyval(D, arr.T)  # one value per u power
                acc = acc * h + np.polynomial.polynomial.polyval(u, dvals)
            out[k] = acc * h ** start
        return out


def _model(ev: _SymbolicEvaluator, t: np.ndarray, t0: complex, b: complex, C: complex, D: complex):
    h = t - t0
    u = np.log(b * h) + C
    return ev(h, u, D)


def synthetic_samples(series: PsiSeries, t0: complex, b: complex, C: complex, D: complex,
                      N: int, radii: Tuple[float, float], count: int = 48, seed: int = 0,
                      margin: float = 0.3) -> Tuple[np.ndarray, np.ndarray]:
    """Points on the annulus off the cut and the series values there."""
    rng = np.random.default_rng(seed)
    ev = _SymbolicEvaluator(series, N)
    rad = rng.uniform(radii[0], radii[1], count)
    # arg(b h) in (-pi + margin, pi - margin)
    ang = rng.uniform(-math.pi + margin, math.pi - margin, count)
    t = t0 + rad * np.exp(1j * ang) / b
    return t, _model(ev, t, t0, b, C, D).T


def annulus_samples(est: SingularityEstimate, radii: Tuple[float, float], rings: int = 3,
                    per_ring: int = 16, order: int = 30, tolerance: float = 1e-14,
                    margin: float = 0.3, state: Optional[Sequence[float]] = None
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """Integrated states on circles around ``est.t0`` avoiding its cut.

    The march starts at the real expansion point, climbs straight toward
    the singularity to the bottom of each circle (the side facing the
    real axis), then walks the circle both ways up to ``margin`` radians
    short of the cut.  For a singularity above the axis the cut points
    away from the axis, so these arcs never cross it.
    """
    state = state if state is not None else est.state
    t0 = est.t0
    b = -1j if t0.imag < 0 else 1j
    cfg = PrecisionConfig(taylor_order=order)
    start = State(complex(est.t_star), *(complex(v) for v in state))
    # direction from t0 toward the side facing the expansion point
    toward = (start.t - t0) / abs(start.t - t0)
    base_angle = cmath.phase(toward)
    cut_angle = cmath.phase(-1.0 / b)
    ts, vals = [], []
    for rad in np.linspace(radii[1], radii[0], rings):
        bottom = t0 + rad * toward
        res = integrate_path(start, PathSpec((start.t, bottom), tolerance=tolerance), cfg)
        if res.diverged:
            raise FitError(f"path to the annulus diverged: {res.reason}")
        anchor = res.state
        # half-width of the admissible arc around base_angle
        span = abs(((cut_angle - base_angle) + math.pi) % (2 * math.pi) - math.pi) - margin
        for sign in (1, -1):
            angles = base_angle + sign * np.linspace(0, span, per_ring // 2 + 1)
            pts = [t0 + rad * cmath.exp(1j * a) for a in angles]
            res = integrate_path(anchor, PathSpec(tuple(_arc_polyline(t0, rad, angles))
                                                  , tolerance=tolerance), cfg)
            if res.diverged:
                raise FitError(f"arc integration diverged: {res.reason}")
            # states exactly at the sample angles come from the polyline vertices
            got = {round(complex(r[0]).real, 13) + 1j * round(complex(r[0]).imag, 13): r
                   for r in res.trace}
            for p in pts[1:] if sign == -1 else pts:
                key = round(p.real, 13) + 1j * round(p.imag, 13)
                r = got.get(key)
                if r is not None:
                    ts.append(complex(r[0]))
                    vals.append([complex(v) for v in r[1:4]])
    return np.array(ts), np.array(vals)


def _arc_polyline(t0: complex, rad: float, angles: np.ndarray, sub: int = 4) -> List[complex]:
    """Vertices at each sample angle, with ``sub - 1`` extra vertices between them."""
    pts = []
    for a0, a1 in zip(angles[:-1], angles[1:]):
        for k in range(sub):
            a = a0 + (a1 - a0) * k / sub
            pts.append(t0 + rad * cmath.exp(1j * a))
    pts.append(t0 + rad * cmath.exp(1j * angles[-1]))
    return pts


def _pack(t0, C, D):
    return np.array([t0.real, t0.imag, C.real, C.imag, D.real, D.imag])


def _unpack(p):
    return complex(p[0], p[1]), complex(p[2], p[3]), complex(p[4], p[5])


def _weighted_residual(ev, t, samples, b, p):
    t0, C, D = _unpack(p)
    model = _model(ev, t, t0, b, C, D).T
    rel = (model - samples) / np.abs(samples).clip(1e-300)
    return np.concatenate([rel.real.ravel(), rel.imag.ravel()])


def _rms(r: np.ndarray) -> float:
    return float(math.sqrt(np.mean(r * r) * 2)) if r.size else math.nan


def fit_psi_parameters(t: np.ndarray, samples: np.ndarray, series_by_family: Dict[SeriesFamily, PsiSeries],
                       N: int, t0_guess: complex, window: Tuple[float, float],
                       C_guesses: Sequence[complex] = (0j, 3 + 0j, -3 + 0j),
                       D_guess: complex = 0j, holdout: float = 0.25, seed: int = 0,
                       threshold: float = 1e-3, b: Optional[complex] = None) -> SingularityFit:
    """Least-squares match of the truncated series to sampled states.

    Free parameters are ``t0``, ``C`` and ``D`` (complex) and the family,
    which is chosen by trying each series supplied.  Residuals are
    relative to the sample size.  A seeded random ``holdout`` fraction of
    the samples is kept out of the fit and its rms is reported.
    """
    if N < 10:
        raise ValueError("N must be at least 10")
    t = np.asarray(t, dtype=complex)
    samples = np.asarray(samples, dtype=complex)
    if len(t) != len(samples) or len(t) < 8:
        raise ValueError("need at least 8 samples with matching times")
    b = b if b is not None else (-1j if t0_guess.imag < 0 else 1j)
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(t))
    n_hold = int(round(holdout * len(t)))
    hold, train = idx[:n_hold], idx[n_hold:]
    best = None
    for family, series in series_by_family.items():
        if not series.d_mode.is_symbolic:
            raise ValueError("fitting needs series generated with symbolic D")
        ev = _SymbolicEvaluator(series, N)
        fun = lambda p: _weighted_residual(ev, t[train], samples[train], b, p)
        for C0 in C_guesses:
            p0 = _pack(complex(t0_guess), complex(C0), complex(D_guess))
            try:
                sol = least_squares(fun, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                    max_nfev=4000)
            except (ValueError, FloatingPointError):
                continue
            if not np.all(np.isfinite(sol.fun)):
                continue
            rms = _rms(sol.fun)
            if best is None or rms < best[0]:
                best = (rms, family, sol.x, ev)
    if best is None:
        raise FitError("no starting point produced a finite fit")
    rms, family, p, ev = best
    t0, C, D = _unpack(p)
    hold_rms = _rms(_weighted_residual(ev, t[hold], samples[hold], b, p)) if n_hold else math.nan
    # report the principal representative of C: Im C in (-pi, pi]
    k = math.floor((C.imag + math.pi) / (2 * math.pi))
    C_principal = complex(C.real, C.imag - 2 * math.pi * k)
    if C_principal.imag <= -math.pi:
        C_principal += 2j * math.pi
    fit = SingularityFit(t0, family, C_principal, D, rms, tuple(window), hold_rms, N)
    if not rms < threshold:
        raise FitError(f"best rms {rms:.3e} is above the threshold {threshold:.1e}", best=fit)
    return fit


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------


@dataclass
class LocateResult:
    orbit: PeriodicOrbit
    asymptotic: SingularityEstimate
    refined: SingularityEstimate
    conjugate: SingularityEstimate
    divergence: DivergenceReport
    trace: List[tuple] = field(repr=False, default_factory=list)
    fit: Optional[SingularityFit] = None

    def to_json(self) -> dict:
        out = {"orbit": str(self.orbit.symbols), "t_star": self.refined.t_star,
               "rho": self.refined.rho, "theta": self.refined.theta,
               "t0": [self.refined.t0.real, self.refined.t0.imag],
               "t0_conjugate": [self.conjugate.t0.real, self.conjugate.t0.imag],
               "stage": self.refined.method_stage,
               "asymptotic": self.asymptotic.to_json(),
               "divergence_bound": self.divergence.to_json()}
        out["fit"] = self.fit.to_json() if self.fit is not None else None
        return out


def locate(symbols, orbit: Optional[PeriodicOrbit] = None, order: int = 60, scan: int = 100,
           refine_cfg: RefineConfig = RefineConfig()) -> LocateResult:
    """Orbit, asymptotic estimate, refined pair and the 1/8 check for one itinerary."""
    stage = "find_periodic_orbit"
    try:
        if orbit is None:
            orbit = find_periodic_orbit(symbols)
        stage = "nearest_singularity_estimate"
        est = best_estimate(scan_orbit(orbit, scan, order))
        stage = "refine_singularity"
        up = refine_singularity(est, refine_cfg)
        down = refine_singularity(est, refine_cfg, lower=True)
        stage = "check_divergence_bound"
        report = check_divergence_bound(up.trace, up.estimate.t0)
    except LocatorError:
        raise
    except Exception as exc:  # surface the failing stage
        raise LocatorError(str(exc), stage=stage) from exc
    return LocateResult(orbit, est, up.estimate, down.estimate, report, up.trace)
