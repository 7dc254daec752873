"""Periodic orbits of the real Lorenz system labelled by symbol sequences.

A trajectory is cut by the plane ``z = 27`` where ``z`` increases
(equivalently ``x*y > 72``).  Each crossing is labelled ``A`` when
``x < 0`` and ``B`` when ``x > 0``, so one letter is emitted per turn
around a wing.  A periodic orbit with itinerary ``s_0 s_1 ... s_{n-1}``
is found by multiple shooting: the unknowns are the section points
``(x_k, y_k)`` and the flight times ``T_k`` between consecutive
crossings, and Newton's method drives

    phi_{T_k}(x_k, y_k, 27) - (x_{k+1}, y_{k+1}, 27)

to zero for all ``k`` (indices mod ``n``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .taylor import flow, lorenz_rhs

__all__ = [
    "SECTION_Z",
    "OrbitError",
    "SymbolSequence",
    "PeriodicOrbit",
    "section_crossings",
    "harvest_guess",
    "find_periodic_orbit",
    "itinerary",
]

log = logging.getLogger(__name__)

SECTION_Z = 27.0


class OrbitError(RuntimeError):
    """Newton failure or wrong itinerary; ``best`` holds the last iterate."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SymbolSequence:
    symbols: str

    def __post_init__(self):
        s = self.symbols.strip().upper()
        if not s or set(s) - {"A", "B"}:
            raise ValueError(f"symbol sequences use only A and B: {self.symbols!r}")
        object.__setattr__(self, "symbols", s)

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return self.symbols

    def rotations(self) -> List[str]:
        s = self.symbols
        return [s[k:] + s[:k] for k in range(len(s))]

    def canonical(self) -> str:
        return min(self.rotations())

    def equivalent(self, other: str) -> bool:
        """Same cyclic word (a periodic orbit has no preferred starting letter)."""
        other = other.upper()
        return len(other) == len(self.symbols) and other in (self.symbols * 2)

    def validate_for_orbit(self):
        if len(self.symbols) < 2 or len(set(self.symbols)) < 2:
            raise ValueError("periodic orbits need at least two symbols with both A and B present")


@dataclass(frozen=True)
class PeriodicOrbit:
    symbols: SymbolSequence
    period: float
    initial_state: Tuple[float, float, float]
    closure_residual: float
    section_points: Tuple[Tuple[float, float], ...] = field(default=(), compare=False)
    segment_times: Tuple[float, ...] = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {"symbols": str(self.symbols), "period": self.period,
                "initial_state": list(self.initial_state),
                "closure_residual": self.closure_residual}

    @classmethod
    def from_json(cls, obj) -> "PeriodicOrbit":
        return cls(SymbolSequence(obj["symbols"]), float(obj["period"]),
                   tuple(float(v) for v in obj["initial_state"]), float(obj["closure_residual"]))


def _letter(x: float) -> str:
    return "A" if x < 0 else "B"


def section_crossings(x0: Sequence[float], T: float, order: int = 30) -> List[Tuple[float, np.ndarray]]:
    """Upward crossings of ``z = 27`` within ``(0, T]`` as ``(time, state)``."""
    return flow(x0, T, order=order, section=SECTION_Z).crossings


def itinerary(x0: Sequence[float], T: float, order: int = 30) -> str:
    """Letters of the crossings within ``(0, T]`` (a crossing at ``T`` itself counts)."""
    pts = section_crossings(x0, T * (1 + 1e-9), order)
    return "".join(_letter(p[0]) for _, p in pts)


def harvest_guess(symbols: SymbolSequence, transient: float = 30.0, span: float = 1500.0,
                  start: Sequence[float] = (1.0, 1.0, 20.0), order: int = 30):
    """Best-closing window of a long trajectory whose crossings spell ``symbols``.

    Returns ``(points, times)`` with ``n`` section points and the ``n``
    flight times between them.
    """
    warm = flow(start, transient, order=order).state
    crossings = section_crossings(warm, span, order)
    letters = "".join(_letter(p[0]) for _, p in crossings)
    n = len(symbols)
    best = None
    for i in range(len(crossings) - n):
        word = letters[i: i + n]
        if word != symbols.symbols:
            continue
        a, b = crossings[i][1], crossings[i + n][1]
        gap = math.hypot(a[0] - b[0], a[1] - b[1])
        if best is None or gap < best[0]:
            best = (gap, i)
    if best is None:
        raise OrbitError(f"no window spelling {symbols} in the harvested trajectory")
    i = best[1]
    pts = [crossings[i + k][1][:2].copy() for k in range(n)]
    times = [crossings[i + k + 1][0] - crossings[i + k][0] for k in range(n)]
    return pts, times


def _residual(v: np.ndarray, n: int, order: int, with_jac: bool):
    G = np.zeros(3 * n)
    Jm = np.zeros((3 * n, 3 * n)) if with_jac else None
    for k in range(n):
        xk, yk, Tk = v[3 * k: 3 * k + 3]
        kn = (k + 1) % n
        res = flow([xk, yk, SECTION_Z], Tk, order=order, jacobian=with_jac)
        end = res.state
        G[3 * k: 3 * k + 3] = end - np.array([v[3 * kn], v[3 * kn + 1], SECTION_Z])
        if with_jac:
            rows = slice(3 * k, 3 * k + 3)
            Jm[rows, 3 * k: 3 * k + 2] += res.jacobian[:, :2]
            Jm[rows, 3 * k + 2] += np.array(lorenz_rhs(*end))
            Jm[3 * k, 3 * kn] -= 1.0
            Jm[3 * k + 1, 3 * kn + 1] -= 1.0
    return G, Jm


def find_periodic_orbit(symbols, guess=None, order: int = 30, tol: float = 1e-12,
                        max_iter: int = 40, harvest_span: float = 1500.0) -> PeriodicOrbit:
    """Multiple-shooting Newton solve for the orbit with itinerary ``symbols``.

    ``guess`` may be ``(points, times)`` as returned by
    :func:`harvest_guess`; by default one is harvested from a long
    trajectory.
    """
    symbols = symbols if isinstance(symbols, SymbolSequence) else SymbolSequence(symbols)
    symbols.validate_for_orbit()
    n = len(symbols)
    pts, times = guess if guess is not None else harvest_guess(symbols, span=harvest_span, order=order)
    v = np.zeros(3 * n)
    for k in range(n):
        v[3 * k: 3 * k + 2] = pts[k][:2]
        v[3 * k + 2] = times[k]
    G, J = _residual(v, n, order, True)
    norm = np.linalg.norm(G)
    for it in range(max_iter):
        if norm < tol:
            break
        delta = np.linalg.lstsq(J, -G, rcond=None)[0]
        lam = 1.0
        while True:
            trial = v + lam * delta
            if np.all(trial[2::3] > 0):
                Gt, Jt = _residual(trial, n, order, True)
                nt = np.linalg.norm(Gt)
                if nt < norm or lam < 1e-3:
                    break
            lam *= 0.5
            if lam < 1e-4:
                raise OrbitError(f"Newton stagnated at residual {norm:.3e}", best=v)
        v, G, J, norm = trial, Gt, Jt, nt
        log.debug("shooting %s iteration %d residual %.3e", symbols, it, norm)
    if norm >= tol:
        raise OrbitError(f"Newton did not converge (residual {norm:.3e})", best=v)
    period = float(np.sum(v[2::3]))
    x0 = (float(v[0]), float(v[1]), SECTION_Z)
    end = flow(x0, period, order=order).state
    closure = float(np.linalg.norm(end - np.array(x0)))
    word = itinerary(x0, period, order)
    if not symbols.equivalent(word):
        raise OrbitError(f"converged orbit has itinerary {word}, expected {symbols}", best=v)
    if closure > 1e-10:
        raise OrbitError(f"closure residual {closure:.3e} exceeds 1e-10", best=v)
    return PeriodicOrbit(symbols, period, x0, closure,
                         tuple((float(v[3 * k]), float(v[3 * k + 1])) for k in range(n)),
                         tuple(float(T) for T in v[2::3]))
