import time

import pytest

from lorenz_psi.series import DMode, SeriesFamily, generate


@pytest.fixture(scope="session")
def plus12():
    return generate(12, SeriesFamily.PLUS)


@pytest.fixture(scope="session")
def minus12():
    return generate(12, SeriesFamily.MINUS)


@pytest.fixture(scope="session")
def symbolic60():
    """Symbolic-D series through m = 60, generated with exact step verification."""
    start = time.perf_counter()
    s = generate(60, SeriesFamily.PLUS, DMode.symbolic(), verify=True)
    s._cache["generation_seconds"] = time.perf_counter() - start
    return s


def _numeric200(value):
    start = time.perf_counter()
    s = generate(200, SeriesFamily.PLUS, DMode.numeric(value), verify=False)
    s._cache["generation_seconds"] = time.perf_counter() - start
    return s


@pytest.fixture(scope="session")
def numeric200_d0():
    return _numeric200(0)


@pytest.fixture(scope="session")
def numeric200_d1():
    return _numeric200(1)


@pytest.fixture(scope="session")
def numeric200_di():
    from lorenz_psi.exact import I
    return _numeric200(I)


@pytest.fixture(scope="session")
def ab_locate():
    from lorenz_psi.singularities import locate
    start = time.perf_counter()
    r = locate("AB")
    return r, time.perf_counter() - start


@pytest.fixture(scope="session")
def fit_series():
    return {f: generate(30, f, DMode.symbolic(), verify=False) for f in SeriesFamily}


# --- per-criterion summary for the acceptance suite --------------------------

_criteria = {}



@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, title = mark.args
    entry = _criteria.setdefault(n, {"title": title, "passed": 0, "failed": [], "notes": []})
    if rep.passed:
        entry["passed"] += 1
    else:
        entry["failed"].append(item.name)
    entry["notes"].extend(getattr(item, "_criterion_notes", []))


@pytest.fixture
def note(request):
    """Attach a short measured fact to the criterion summary line."""
    request.node._criterion_notes = []
    return request.node._criterion_notes.append


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        status = "FAIL" if e["failed"] else "PASS"
        line = f"criterion {n:2d} {status}  {e['title']}"
        if e["notes"]:
            line += "  [" + "; ".join(e["notes"]) + "]"
        tr.write_line(line)
        for name in e["failed"]:
            tr.write_line(f"             failed: {name}")
