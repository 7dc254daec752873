"""Reference coefficient table and its exact verification.

The fixture lists every published coefficient from ``Q_{-2}`` up to
``P_4``.  Each entry maps ``(u_power, d_power)`` to ``(re, im)`` as
strings; ``u`` stands for ``eta + C``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

from .exact import GaussianRational, PsiPoly, parse_rational
from .series import PsiSeries, SeriesFamily, generate

__all__ = ["TABLE1", "CellResult", "table1_fixture", "verify_table1"]

# name -> {(u, d): (re, im)}
TABLE1: Dict[str, Dict[Tuple[int, int], Tuple[str, str]]] = {
    "Q_-2": {(0, 0): ("0", "-1/5")},
    "R_-2": {(0, 0): ("-1/5", "0")},
    "P_-1": {(0, 0): ("0", "2")},
    "Q_-1": {(0, 0): ("0", "2")},
    "R_-1": {(0, 0): ("17/9", "0")},
    "P_0": {(0, 0): ("0", "71/9")},
    "Q_0": {(0, 0): ("0", "-349/81"), (1, 0): ("0", "-988/81")},
    "R_0": {(0, 0): ("1385/54", "0"), (1, 0): ("-988/81", "0")},
    "P_1": {(1, 0): ("0", "-9880/81")},
    "Q_1": {(0, 0): ("0", "-25991/108"), (1, 0): ("0", "64220/243")},
    "R_1": {(0, 0): ("-211189/972", "0"), (1, 0): ("167960/729", "0")},
    "P_2": {(0, 0): ("0", "-2108195/972"), (1, 0): ("0", "469300/243")},
    "Q_2": {
        (0, 1): ("0", "3/10"),
        (0, 0): ("0", "-477319147/131220"),
        (1, 0): ("0", "-167831753/65610"),
        (2, 0): ("0", "-273676/2187"),
    },
    "R_2": {
        (0, 1): ("-1/5", "0"),
        (0, 0): ("138959125/17496", "0"),
        (1, 0): ("-58846039/32805", "0"),
        (2, 0): ("-1444456/2187", "0"),
    },
    "P_3": {
        (0, 1): ("0", "1"),
        (1, 0): ("0", "-96356411/6561"),
        (2, 0): ("0", "-2736760/6561"),
    },
    "Q_3": {
        (0, 0): ("0", "-25925844899/708588"),
        (0, 1): ("0", "32/27"),
        (1, 0): ("0", "-516846814/59049"),
        (2, 0): ("0", "26636480/2187"),
    },
    "R_3": {
        (0, 1): ("-55/27", "0"),
        (0, 0): ("64036692917/3542940", "0"),
        (1, 0): ("-2458513/2187", "0"),
        (2, 0): ("813193160/59049", "0"),
    },
    "P_4": {
        (0, 1): ("0", "25/54"),
        (0, 0): ("0", "-64653009635/708588"),
        (1, 0): ("0", "-107735075/118098"),
        (2, 0): ("0", "206615500/6561"),
    },
}


def table1_fixture(family=SeriesFamily.PLUS,
                   raw: Mapping[str, Mapping] | None = None) -> Dict[str, PsiPoly]:
    """Fixture polynomials; for the minus family ``P`` and ``Q`` change sign."""
    family = SeriesFamily.parse(family)
    raw = TABLE1 if raw is None else raw
    out = {}
    for name, cells in raw.items():
        poly = PsiPoly({k: GaussianRational(parse_rational(re), parse_rational(im))
                        for k, (re, im) in cells.items()})
        if family is SeriesFamily.MINUS and name[0] in "PQ":
            poly = -poly
        out[name] = poly
    return out


def _lookup(series: PsiSeries, name: str) -> PsiPoly:
    letter, index = name.split("_", 1)
    return getattr(series, letter)(int(index))


@dataclass(frozen=True)
class CellResult:
    name: str
    matches: bool
    expected: str
    computed: str


def verify_table1(family=SeriesFamily.PLUS, series: PsiSeries | None = None,
                  fixture: Mapping[str, PsiPoly] | None = None) -> List[CellResult]:
    """Compare generated coefficients with the fixture cell by cell."""
    family = SeriesFamily.parse(family)
    if series is None:
        series = generate(3, family)
    if fixture is None:
        fixture = table1_fixture(family)
    results = []
    for name, expected in fixture.items():
        got = _lookup(series, name)
        results.append(CellResult(name, got == expected, str(expected), str(got)))
    return results
