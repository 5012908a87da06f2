import sys

import numpy as np
import pytest

from blochop.geometry import Domain
from blochop.supsearch import SearchConfig
from blochop.symbolic import parse_expr

FAST = SearchConfig(initial_grid_per_dim=12, refinement_rounds=4)
MEDIUM = SearchConfig(initial_grid_per_dim=16, refinement_rounds=5)

# (text, arity); every entry is holomorphic on a neighbourhood of the closed unit disk/polydisk,
# except the atanh entry, which is smooth on |z| < 1 and has Bloch seminorm 1
CORPUS = [
    ("z1", 1),
    ("z1^2 + 0.5", 1),
    ("exp(z1)", 1),
    ("log(4/(1 - 0.8*z1))", 1),
    ("sqrt(1 + z1/2)", 1),
    ("1/(2 - z1)", 1),
    ("(1+2i)*z1^3 - z1", 1),
    ("exp(z1/2)*log(2 + z1)", 1),
    ("0.5*log((1+z1)/(1-z1))", 1),
    ("z1/(1.5 + z1^2)", 1),
    ("z1*z2", 2),
    ("z1 + z2", 2),
    ("exp(z1 - 2i*z2)", 2),
    ("log(3 - z1 - z2)", 2),
    ("sqrt(2 + z1*z2)", 2),
    ("(z1 - z2)^2/(3 + z1)", 2),
    ("z1^4 + i*z2^3", 2),
    ("1/(1 - z1*z2/2)", 2),
    ("log(4/(1 - 0.5*z1 - 0.3*z2))", 2),
    ("exp(z1*z2)*sqrt(4 - z2)", 2),
]


def corpus_functions():
    return [(text, parse_expr(text, n)) for text, n in CORPUS]


def interior(domain: Domain, count: int, seed: int, shrink: float = 0.95) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = domain.dim
    Z = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    if domain.kind == "ball":
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        Z *= (rng.uniform(size=count) ** (1 / (2 * n)))[:, None]
    else:
        Z /= np.abs(Z)
        Z *= np.sqrt(rng.uniform(size=(count, n)))
    return Z * shrink


@pytest.fixture
def fast_cfg():
    return FAST


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
