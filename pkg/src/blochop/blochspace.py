"""Bloch seminorm and norm, ω lower bounds, Lipschitz cross-check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArityError, SingularityError
from .geometry import Domain, inverse_metric_quadratic_batch, pseudo_distance_upper_batch, sample_interior
from .supsearch import SearchConfig, SupResult, sup_over_domain
from .symbolic import BinOp, Call, Const, HoloFunction, Var

LOG4 = math.log(4.0)


def qf_batch(f: HoloFunction, domain: Domain):
    """Batched objective z ↦ Q_f(z)."""

    def g(Z):
        _, G, ok = f.evaluate_batch(Z, want_grad=True)
        q2 = inverse_metric_quadratic_batch(domain, Z, G)
        return np.where(ok, np.sqrt(np.maximum(q2, 0.0)), np.nan)

    return g


def qf(f: HoloFunction, domain: Domain, z) -> float:
    """Q_f(z) = sup_u |∇f(z)u| / H_z(u,ū)^{1/2}, maximized in closed form."""
    z = domain.check_point(z)
    grad = f.eval_with_gradient(z).gradient
    q2 = inverse_metric_quadratic_batch(domain, z[None, :], grad[None, :])[0]
    return float(np.sqrt(max(q2, 0.0)))


@dataclass
class BlochAnalysis:
    beta: float
    beta_witness: np.ndarray
    bloch_norm: float
    value_at_origin: complex
    little_bloch_profile: list  # (shell level, annulus sup of Q_f)
    status: str
    search: SupResult

    @property
    def finite(self) -> bool:
        return self.status == "Converged"


def beta(f: HoloFunction, domain: Domain, cfg: SearchConfig) -> BlochAnalysis:
    if f.arity != domain.dim:
        raise ArityError(f"function arity {f.arity} != domain dimension {domain.dim}")
    res = sup_over_domain(qf_batch(f, domain), domain, cfg)
    f0 = f(np.zeros(domain.dim))
    b = res.value
    return BlochAnalysis(b, res.witness, abs(f0) + b, f0, res.shell_profile, res.status, res)


def lipschitz_lower(f: HoloFunction, domain: Domain, pairs: int, seed: int) -> float:
    """max |f(z)-f(w)| / ρ_upper(z,w) over sampled pairs: a lower bound for β_f."""
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    rng = np.random.default_rng(seed)
    n = domain.dim
    Z = sample_interior(domain, pairs, seed)
    near = np.arange(pairs) % 2 == 0
    # close pairs concentrated near the origin, where the quotient approaches β for linear maps
    Z[near] *= (rng.uniform(size=near.sum()) ** 2)[:, None]
    rad = domain.radius_batch(Z)
    step = rng.normal(size=(pairs, n)) + 1j * rng.normal(size=(pairs, n))
    step /= np.linalg.norm(step, axis=1, keepdims=True)
    scale = (1.0 - rad) * 10.0 ** rng.uniform(-5, -1, size=pairs)
    W = np.where(near[:, None], Z + step * scale[:, None], sample_interior(domain, pairs, seed + 7))
    wr = domain.radius_batch(W)
    W = np.where((wr >= 1.0)[:, None], W * (0.999 / wr)[:, None], W)
    fz, _, okz = f.evaluate_batch(Z, want_grad=False)
    fw, _, okw = f.evaluate_batch(W, want_grad=False)
    rho = pseudo_distance_upper_batch(domain, Z, W)
    good = okz & okw & (rho > 0)
    if not good.any():
        return 0.0
    return float(np.max(np.abs(fz[good] - fw[good]) / rho[good]))


def log_family_sum(conj_params, n: int) -> HoloFunction:
    """(1/(n(2+log 4))) Σ_j Log(4/(1 - z_j c_j))."""
    total = None
    for j, c in enumerate(conj_params, start=1):
        term = Call("log", BinOp("/", Const(4.0), BinOp("-", Const(1.0), BinOp("*", Var(j), Const(complex(c))))))
        total = term if total is None else BinOp("+", total, term)
    return HoloFunction(BinOp("*", Const(1.0 / (n * (2.0 + LOG4))), total), n)


def _atanh_of(zeta: HoloFunction) -> HoloFunction:
    n = zeta.arity
    one = HoloFunction.constant(1.0, n)
    return HoloFunction(BinOp("*", Const(0.5), Call("log", ((one + zeta) / (one - zeta)).node)), n)


def linear_by_coord(w: np.ndarray) -> list:
    """ζ_j(z) = e^{-i arg w_j} z_j, or None where w_j = 0."""
    n = len(w)
    return [
        HoloFunction.variable(j + 1, n) * complex(np.conj(w[j]) / abs(w[j])) if abs(w[j]) > 0 else None
        for j in range(n)
    ]


def omega_candidates(domain: Domain, w: np.ndarray) -> list:
    """Holomorphic g with g(0) = 0 used as test functions for ω(w)."""
    n = domain.dim
    cands = []
    linear = []
    if domain.kind == "ball":
        a = w / np.linalg.norm(w)
        zeta = None
        for j in range(n):
            t = HoloFunction.variable(j + 1, n) * complex(np.conj(a[j]))
            zeta = t if zeta is None else zeta + t
        linear.append(zeta)
    else:
        linear = [z for z in linear_by_coord(w) if z is not None]
    for zeta in linear:
        cands.append(_atanh_of(zeta))
        cands.append(zeta)
        cands.append(zeta + zeta**3 * (1.0 / 3.0))
    if domain.kind == "polydisk" and n > 1:
        d = np.arctanh(np.abs(w))
        p = d / np.linalg.norm(d)
        mix = None
        for j, zeta in enumerate(linear_by_coord(w)):
            if zeta is None or p[j] == 0:
                continue
            t = _atanh_of(zeta) * float(p[j])
            mix = t if mix is None else mix + t
        cands.append(mix)
    fam = log_family_sum(np.conj(w), n)
    cands.append(fam - fam(np.zeros(n)))
    return cands


def omega_lower(domain: Domain, w, cfg: SearchConfig) -> float:
    """Certified-by-construction lower bound for ω(w) from normalized test functions."""
    w = domain.check_point(w, cfg.boundary_clamp)
    if not np.any(w):
        return 0.0
    best = 0.0
    for g in omega_candidates(domain, w):
        try:
            val = abs(g(w))
        except SingularityError:
            continue
        an = beta(g, domain, cfg)
        if not an.finite or an.beta <= 0:
            continue
        best = max(best, val / (an.beta * (1.0 + cfg.tolerance)))
    return best
