"""Weights μ and weighted sup-norms ‖f‖_μ = sup μ(z)|f(z)|."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ArityError, NonpositiveWeight
from .geometry import Domain, sample_interior
from .supsearch import SearchConfig, SupResult, sup_over_domain
from .symbolic import HoloFunction, parse_expr, to_text


@dataclass(frozen=True, eq=False)
class Weight:
    """A radial weight.

    kind is one of ``const`` (param c), ``alpha`` (param α, the standard weight
    Π(1-|z_j|²)^α or (1-‖z‖²)^α), ``logrec`` (1/log(4/(1-r²)) with r the domain
    radius) or ``custom`` (an expression in r1..rn; on the ball only r1 = ‖z‖).
    """

    kind: str
    param: float = 1.0
    expr: Optional[HoloFunction] = None

    def __post_init__(self):
        if self.kind not in ("const", "alpha", "logrec", "custom"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind in ("const", "alpha") and not self.param > 0:
            raise ValueError(f"{self.kind} weight parameter must be positive")
        if self.kind == "custom" and self.expr is None:
            raise ValueError("custom weight needs an expression")

    @classmethod
    def constant(cls, c: float = 1.0) -> "Weight":
        return cls("const", float(c))

    @classmethod
    def standard(cls, alpha: float) -> "Weight":
        return cls("alpha", float(alpha))

    @classmethod
    def log_reciprocal(cls) -> "Weight":
        return cls("logrec")

    @classmethod
    def custom(cls, text: str, arity: int) -> "Weight":
        return cls("custom", 1.0, parse_expr(text, arity, var_prefix="r"))

    @classmethod
    def parse(cls, spec: str, domain: Domain) -> "Weight":
        """Parse ``alpha:1.0``, ``const:1.0``, ``logrec`` or ``custom:<expr>``."""
        head, _, tail = spec.partition(":")
        if head == "alpha":
            return cls.standard(float(tail))
        if head == "const":
            return cls.constant(float(tail) if tail else 1.0)
        if head == "logrec" and not tail:
            return cls.log_reciprocal()
        if head == "custom":
            w = cls.custom(tail, 1 if domain.kind == "ball" else domain.dim)
            validate_weight(w, domain)
            return w
        raise ValueError(f"bad weight spec {spec!r}")

    def spec(self) -> str:
        if self.kind == "logrec":
            return "logrec"
        if self.kind == "custom":
            return "custom:" + to_text(self.expr.node, "r")
        return f"{self.kind}:{self.param!r}"

    def evaluate_batch(self, domain: Domain, Z: np.ndarray) -> np.ndarray:
        if self.kind == "const":
            return np.full(len(Z), self.param)
        if self.kind == "alpha":
            if domain.kind == "polydisk":
                return np.prod((1.0 - np.abs(Z) ** 2) ** self.param, axis=1)
            return (1.0 - np.sum(np.abs(Z) ** 2, axis=1)) ** self.param
        if self.kind == "logrec":
            r = domain.radius_batch(Z)
            return 1.0 / np.log(4.0 / (1.0 - r**2))
        radii = np.abs(Z) if domain.kind == "polydisk" else domain.radius_batch(Z)[:, None]
        if radii.shape[1] != self.expr.arity:
            raise ArityError("custom weight arity does not match the domain")
        v, _, ok = self.expr.evaluate_batch(radii.astype(complex), want_grad=False)
        out = np.where(ok & (np.abs(v.imag) <= 1e-12 * np.maximum(1.0, np.abs(v.real))), v.real, np.nan)
        return out


def weight_eval(mu: Weight, domain: Domain, z) -> float:
    z = domain.check_point(z)
    v = float(mu.evaluate_batch(domain, z[None, :])[0])
    if not v > 0:
        raise NonpositiveWeight(f"weight is {v} at {z.tolist()}")
    return v


def validate_weight(mu: Weight, domain: Domain, samples: int = 2000, seed: int = 0) -> None:
    """Reject a custom weight that is nonpositive (or non-real) at any sampled point."""
    Z = sample_interior(domain, samples, seed)
    v = mu.evaluate_batch(domain, Z)
    bad = ~(v > 0)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonpositiveWeight(f"weight {mu.spec()} is not positive at {Z[i].tolist()}")


@dataclass
class MuNormResult:
    value: float
    witness: np.ndarray
    status: str
    search: SupResult

    @property
    def finite(self) -> bool:
        return self.status == "Converged"


def weighted_modulus(f: HoloFunction, mu: Weight, domain: Domain):
    """Batched objective z ↦ μ(z)|f(z)|."""

    def g(Z):
        v, _, ok = f.evaluate_batch(Z, want_grad=False)
        return np.where(ok, mu.evaluate_batch(domain, Z) * np.abs(v), np.nan)

    return g


def mu_norm(f: HoloFunction, mu: Weight, domain: Domain, cfg: SearchConfig) -> MuNormResult:
    if f.arity != domain.dim:
        raise ArityError(f"function arity {f.arity} != domain dimension {domain.dim}")
    res = sup_over_domain(weighted_modulus(f, mu, domain), domain, cfg)
    return MuNormResult(res.value, res.witness, res.status, res)
