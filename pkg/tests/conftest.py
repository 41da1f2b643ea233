import numpy as np
import pytest

from netembed.graph import Graph, NodeMetadata, SbmParams, generate_sbm, largest_connected_component


def two_triangles() -> Graph:
    return Graph.from_edges(6, [0, 1, 2, 3, 4, 5], [1, 2, 0, 4, 5, 3])


def path3() -> Graph:
    return Graph.from_edges(3, [0, 1], [1, 2])


def complete(n: int) -> Graph:
    i, j = np.triu_indices(n, 1)
    return Graph.from_edges(n, i, j)


def random_graph(n, p, seed, weighted=False):
    rng = np.random.default_rng(seed)
    i, j = np.triu_indices(n, 1)
    hit = rng.random(len(i)) < p
    w = rng.uniform(0.5, 2.0, hit.sum()) if weighted else None
    return Graph.from_edges(n, i[hit], j[hit], w)


@pytest.fixture
def triangles():
    return two_triangles()


@pytest.fixture(scope="session")
def sbm_small():
    """Three 40-node blocks, clearly separated; LCC with labels."""
    g, lab = generate_sbm(SbmParams([40, 40, 40], 0.3, 0.01), seed=11)
    g, meta = largest_connected_component(g, NodeMetadata(labels=lab))
    return g, meta


@pytest.fixture(scope="session")
def sbm600():
    g, lab = generate_sbm(SbmParams([200, 200, 200], 0.05, 0.005), seed=7)
    g, meta = largest_connected_component(g, NodeMetadata(labels=lab))
    return g, meta


def fd_grad(f, x, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        fp = f(x)
        flat[k] = old - h
        fm = f(x)
        flat[k] = old
        gflat[k] = (fp - fm) / (2 * h)
    return g


def rel_err(analytic, numeric):
    a = np.ravel(analytic)
    b = np.ravel(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)


# -- one PASS/FAIL line per acceptance criterion in the terminal summary

_criteria = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = dict(report.user_properties).get("detail", "")
        _criteria[name] = ("PASS" if report.passed else "SKIP" if report.skipped else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda s: int(s.split("_")[2])):
        outcome, detail = _criteria[name]
        label = " ".join(name.split("_")[3:])
        terminalreporter.write_line(f"criterion {name.split('_')[2]} ({label}): {outcome}"
                                    + (f"  [{detail}]" if detail else ""))
