"""High-order Taylor integration of the Lorenz system in complex time.

The Lorenz field is quadratic, so the Taylor coefficients of a solution
follow from Cauchy products:

    x_{n+1} = 10 (y_n - x_n) / (n+1)
    y_{n+1} = (28 x_n - y_n - sum_j x_j z_{n-j}) / (n+1)
    z_{n+1} = (-(8/3) z_n + sum_j x_j y_{n-j}) / (n+1)

Steps are taken along straight segments of a polyline in the complex
``t`` plane.  The step length comes from the jet itself: the last two
coefficients give a root-test estimate of how far the truncated series
can be trusted for a requested relative tolerance.

Binary64 uses numpy; ``mantissa_bits > 53`` switches every operation to
mpmath at that precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

__all__ = [
    "State",
    "TaylorJet",
    "PathSpec",
    "PrecisionConfig",
    "PathResult",
    "FlowResult",
    "StepRejected",
    "lorenz_rhs",
    "taylor_jet",
    "variational_jet",
    "step",
    "step_error",
    "integrate_path",
    "flow",
    "growth_rate",
    "growth_check",
    "SIGMA",
    "RHO",
    "BETA",
]

SIGMA, RHO, BETA = 10.0, 28.0, 8.0 / 3.0


class StepRejected(ValueError):
    """Requested step exceeds the jet's trust radius."""


@dataclass(frozen=True)
class State:
    t: complex
    x: complex
    y: complex
    z: complex

    def vector(self):
        return (self.x, self.y, self.z)

    def is_finite(self) -> bool:
        return all(math.isfinite(abs(complex(v))) for v in self.vector())


@dataclass(frozen=True)
class PrecisionConfig:
    mantissa_bits: int = 53
    taylor_order: int = 25

    def __post_init__(self):
        if self.taylor_order < 4:
            raise ValueError("taylor_order must be at least 4")
        if self.mantissa_bits < 53:
            raise ValueError("mantissa_bits below 53 is not supported")

    @property
    def extended(self) -> bool:
        return self.mantissa_bits > 53

    @property
    def unit_roundoff(self) -> float:
        return 2.0 ** (-self.mantissa_bits)


@dataclass(frozen=True)
class PathSpec:
    waypoints: Tuple[complex, ...]
    tolerance: float = 1e-14
    max_step: float = math.inf
    min_step: float = 1e-13
    max_steps: int = 200000

    def __post_init__(self):
        pts = tuple(self.waypoints)
        object.__setattr__(self, "waypoints", pts)
        if len(pts) < 2:
            raise ValueError("a path needs at least two waypoints")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive waypoints must be distinct")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


def lorenz_rhs(x, y, z):
    return (SIGMA * (y - x), RHO * x - y - x * z, -BETA * z + x * y)


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaylorJet:
    """Taylor coefficients ``coeffs[n] = (x_n, y_n, z_n)`` at ``base``."""

    base: State
    order: int
    coeffs: object  # numpy array (order+1, 3) or list of mpmath triples
    extended: bool = False

    def norms(self) -> List[float]:
        if self.extended:
            return [float(max(abs(c) for c in row)) for row in self.coeffs]
        return list(np.max(np.abs(self.coeffs), axis=1))

    def _scale(self) -> float:
        return max(1.0, self.norms()[0])

    def radius_estimate(self) -> float:
        """Root-test estimate of the radius of convergence from the last two terms."""
        nrm = self.norms()
        scale = self._scale()
        est = math.inf
        for k in (self.order - 1, self.order):
            if nrm[k] > 0:
                est = min(est, (scale / nrm[k]) ** (1.0 / k))
        return est

    def trust_radius(self, tol: float) -> float:
        """Largest ``|h|`` for which each of the last two terms is below ``tol`` (relative)."""
        nrm = self.norms()
        scale = self._scale()
        est = math.inf
        for k in (self.order - 1, self.order):
            if nrm[k] > 0:
                est = min(est, (tol * scale / nrm[k]) ** (1.0 / k))
        return est

    def component(self, i: int) -> list:
        if self.extended:
            return [row[i] for row in self.coeffs]
        return list(self.coeffs[:, i])


def _jet_numpy(x0, y0, z0, order: int, dtype=complex) -> np.ndarray:
    x = np.zeros(order + 1, dtype=dtype)
    y = np.zeros(order + 1, dtype=dtype)
    z = np.zeros(order + 1, dtype=dtype)
    x[0], y[0], z[0] = x0, y0, z0
    for n in range(order):
        xz = np.dot(x[: n + 1], z[n::-1])
        xy = np.dot(x[: n + 1], y[n::-1])
        k = n + 1
        x[k] = SIGMA * (y[n] - x[n]) / k
        y[k] = (RHO * x[n] - y[n] - xz) / k
        z[k] = (-BETA * z[n] + xy) / k
    return np.stack([x, y, z], axis=1)


def _jet_mp(x0, y0, z0, order: int) -> list:
    x = [mpmath.mpc(x0)]
    y = [mpmath.mpc(y0)]
    z = [mpmath.mpc(z0)]
    sigma, rho, beta = mpmath.mpf(10), mpmath.mpf(28), mpmath.mpf(8) / 3
    for n in range(order):
        xz = mpmath.fsum(x[j] * z[n - j] for j in range(n + 1))
        xy = mpmath.fsum(x[j] * y[n - j] for j in range(n + 1))
        k = n + 1
        x.append(sigma * (y[n] - x[n]) / k)
        y.append((rho * x[n] - y[n] - xz) / k)
        z.append((-beta * z[n] + xy) / k)
    return [(a, b, c) for a, b, c in zip(x, y, z)]


def taylor_jet(s: State, order: int = 25, cfg: Optional[PrecisionConfig] = None) -> TaylorJet:
    if order < 1:
        raise ValueError("order must be at least 1")
    if cfg is not None and cfg.extended:
        with mpmath.workprec(cfg.mantissa_bits):
            coeffs = _jet_mp(s.x, s.y, s.z, order)
        return TaylorJet(s, order, coeffs, extended=True)
    return TaylorJet(s, order, _jet_numpy(s.x, s.y, s.z, order), extended=False)


def variational_jet(x0: Sequence[float], order: int, dtype=float) -> Tuple[np.ndarray, np.ndarray]:
    """Jet of the solution and of its 3x3 derivative with respect to the initial state.

    Returns ``(c, J)`` with ``c`` of shape ``(order+1, 3)`` and ``J`` of
    shape ``(order+1, 3, 3)``; ``J[0]`` is the identity.
    """
    c = _jet_numpy(x0[0], x0[1], x0[2], order, dtype=dtype)
    x, y, z = c[:, 0], c[:, 1], c[:, 2]
    J = np.zeros((order + 1, 3, 3), dtype=dtype)
    J[0] = np.eye(3)
    for n in range(order):
        k = n + 1
        dx, dy, dz = J[: n + 1, 0, :], J[: n + 1, 1, :], J[: n + 1, 2, :]
        # product rule inside the Cauchy sums
        xz = x[n::-1] @ dz + z[n::-1] @ dx
        xy = x[n::-1] @ dy + y[n::-1] @ dx
        J[k, 0] = SIGMA * (J[n, 1] - J[n, 0]) / k
        J[k, 1] = (RHO * J[n, 0] - J[n, 1] - xz) / k
        J[k, 2] = (-BETA * J[n, 2] + xy) / k
    return c, J


def _horner_vec(coeffs, h):
    acc = coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * h + c
    return acc


def step_error(jet: TaylorJet, h) -> float:
    """Size of the last two retained terms at ``h`` (relative to the base state)."""
    nrm = jet.norms()
    ah = abs(complex(h))
    N = jet.order
    return (nrm[N - 1] * ah ** (N - 1) + nrm[N] * ah ** N) / jet._scale()


def step(jet: TaylorJet, h, tol: Optional[float] = None) -> State:
    """Evaluate the jet at ``base.t + h``.

    With ``tol`` the step is refused (:class:`StepRejected`) when ``|h|``
    exceeds the trust radius for that relative tolerance; otherwise it is
    checked against the root-test radius of convergence.
    """
    ah = abs(complex(h))
    limit = jet.trust_radius(tol) if tol is not None else jet.radius_estimate()
    if ah > limit * (1 + 1e-12):
        raise StepRejected(f"|h| = {ah:.3e} exceeds trust radius {limit:.3e}")
    if jet.extended:
        hm = mpmath.mpc(h)
        vals = [mpmath.mpc(0)] * 3
        for row in reversed(jet.coeffs):
            vals = [v * hm + c for v, c in zip(vals, row)]
        return State(jet.base.t + complex(h), *vals)
    v = _horner_vec(jet.coeffs, complex(h))
    return State(jet.base.t + complex(h), complex(v[0]), complex(v[1]), complex(v[2]))


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------


@dataclass
class PathResult:
    state: State
    trace: List[tuple] = field(default_factory=list)
    diverged: bool = False
    reason: str = ""

    def trace_rows(self) -> List[dict]:
        rows = []
        for t, x, y, z, hs, err in self.trace:
            t, x, y, z = complex(t), complex(x), complex(y), complex(z)
            rows.append({"re_t": t.real, "im_t": t.imag, "re_x": x.real, "im_x": x.imag,
                         "re_y": y.real, "im_y": y.imag, "re_z": z.real, "im_z": z.imag,
                         "step": hs, "err_est": err})
        return rows


def integrate_path(s: State, path: PathSpec, cfg: PrecisionConfig = PrecisionConfig(),
                   on_step: Optional[Callable[[State], None]] = None) -> PathResult:
    """Follow the polyline ``path.waypoints`` starting from ``s``.

    ``s.t`` must equal the first waypoint.  Each step uses
    ``0.8 * trust_radius(tol)``, clipped to ``max_step`` and to the end of
    the current segment.  If the admissible step falls below
    ``path.min_step`` (relative to ``max(1, |t|)``), the result is
    returned with ``diverged=True`` and the last good state; this is the
    expected outcome when a path runs into a singularity.
    """
    if abs(complex(s.t) - path.waypoints[0]) > 1e-12 * max(1.0, abs(path.waypoints[0])):
        raise ValueError("state time must match the first waypoint")
    tol = path.tolerance
    cur = State(path.waypoints[0], s.x, s.y, s.z)
    trace = [(cur.t, cur.x, cur.y, cur.z, 0.0, 0.0)]
    steps = 0
    for a, b in zip(path.waypoints, path.waypoints[1:]):
        seg = complex(b) - complex(a)
        length = abs(seg)
        direction = seg / length
        done = 0.0
        while done < length:
            jet = taylor_jet(cur, cfg.taylor_order, cfg)
            hmag = min(0.8 * jet.trust_radius(tol), path.max_step, length - done)
            last = hmag == length - done
            floor = path.min_step * max(1.0, abs(complex(cur.t)))
            if hmag < floor and not last:
                return PathResult(cur, trace, True, f"step floor reached at t={complex(cur.t)}")
            steps += 1
            if steps > path.max_steps:
                return PathResult(cur, trace, True, "step budget exhausted")
            h = hmag * direction if not last else complex(b) - complex(cur.t)
            err = step_error(jet, h)
            nxt = step(jet, h, tol=None if last else tol * 1.0000001)
            if last:
                nxt = State(complex(b), nxt.x, nxt.y, nxt.z)
            if not nxt.is_finite():
                return PathResult(cur, trace, True, "non-finite state")
            cur = nxt
            done = length if last else done + hmag
            trace.append((cur.t, cur.x, cur.y, cur.z, hmag, err))
            if on_step is not None:
                on_step(cur)
    return PathResult(cur, trace, False, "")


# ---------------------------------------------------------------------------
# real-time flow with optional variational equations and section events
# ---------------------------------------------------------------------------


@dataclass
class FlowResult:
    state: np.ndarray
    jacobian: Optional[np.ndarray]
    crossings: List[Tuple[float, np.ndarray]]
    trace: List[Tuple[float, np.ndarray]]


def _section_root(c: np.ndarray, hmax: float, level: float) -> Optional[float]:
    """First upward root of ``z(tau) = level`` on ``(0, hmax]`` from the jet of ``z``."""
    zc = c[:, 2].copy()
    zc[0] -= level
    N = len(zc)
    grid = np.linspace(0.0, hmax, 17)
    vals = np.polynomial.polynomial.polyval(grid, zc)
    for i in range(16):
        if vals[i] < 0 <= vals[i + 1]:
            lo, hi = grid[i], grid[i + 1]
            tau = 0.5 * (lo + hi)
            dz = np.arange(1, N) * zc[1:]
            for _ in range(60):
                f = np.polynomial.polynomial.polyval(tau, zc)
                if f < 0:
                    lo = tau
                else:
                    hi = tau
                d = np.polynomial.polynomial.polyval(tau, dz)
                new = tau - f / d if d != 0 else 0.5 * (lo + hi)
                if not lo <= new <= hi:
                    new = 0.5 * (lo + hi)
                if abs(new - tau) <= 1e-16 * max(1.0, abs(tau)):
                    tau = new
                    break
                tau = new
            return tau if tau > 0 else None
    return None


def flow(x0: Sequence[float], T: float, order: int = 30, tol: float = 1e-15,
         jacobian: bool = False, section: Optional[float] = None,
         keep_trace: bool = False, t_start: float = 0.0) -> FlowResult:
    """Integrate the real system for time ``T`` (may be zero).

    ``jacobian`` also integrates the variational equations and returns
    ``d(state(T))/d(state(0))``.  ``section`` records upward crossings of
    ``z = section`` as ``(time, state)`` pairs.
    """
    cur = np.array(x0, dtype=float)
    J = np.eye(3) if jacobian else None
    t = 0.0
    crossings = []
    trace = [(t_start, cur.copy())] if keep_trace else []
    while t < T:
        if jacobian:
            c, Jc = variational_jet(cur, order)
        else:
            c = _jet_numpy(cur[0], cur[1], cur[2], order, dtype=float)
        nrm = np.max(np.abs(c), axis=1)
        scale = max(1.0, nrm[0])
        h = math.inf
        for k in (order - 1, order):
            if nrm[k] > 0:
                h = min(h, (tol * scale / nrm[k]) ** (1.0 / k))
        h = min(0.8 * h, T - t)
        if section is not None:
            tau = _section_root(c, h, section)
            if tau is not None and tau < h:
                xs = _horner_vec(c, tau)
                crossings.append((t_start + t + tau, xs))
            elif tau is not None and tau == h:
                crossings.append((t_start + t + h, _horner_vec(c, h)))
        new = _horner_vec(c, h)
        if jacobian:
            J = _horner_vec(Jc, h) @ J
        cur = new
        t = t + h if T - t > h else T
        if keep_trace:
            trace.append((t_start + t, cur.copy()))
    return FlowResult(cur, J, crossings, trace)


# ---------------------------------------------------------------------------
# energy-like growth bound for real trajectories
# ---------------------------------------------------------------------------


def growth_rate(x, y, z):
    """``dQ/dt`` for ``Q = x^2 + y^2 + z^2`` along the real flow."""
    return 2 * (-10 * x * x - y * y - BETA * z * z + 38 * x * y)


def growth_check(trace, bound: float = 58.0) -> bool:
    """``|dQ/dt| <= bound * Q`` at every sample of a real trajectory.

    ``trace`` is an iterable of states (``State``, ``(t, x, y, z, ...)``
    tuples from :class:`PathResult`, or ``(t, array)`` pairs from
    :func:`flow`) or an ``(n, 3)`` array.
    """
    pts = _real_points(trace)
    if pts.size == 0:
        return True
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    Q = x * x + y * y + z * z
    dQ = growth_rate(x, y, z)
    return bool(np.all(np.abs(dQ) <= bound * Q * (1 + 1e-12) + 1e-300))


def _real_points(trace) -> np.ndarray:
    if isinstance(trace, np.ndarray):
        return np.real(trace.reshape(-1, 3)).astype(float)
    rows = []
    for item in trace:
        if isinstance(item, State):
            rows.append([item.x, item.y, item.z])
        elif len(item) == 2:
            rows.append(list(item[1]))
        else:
            rows.append([item[1], item[2], item[3]])
    arr = np.array(rows, dtype=complex).reshape(-1, 3)
    return np.real(arr).astype(float)
