"""Unit polydisk and unit ball: Bergman metric, distance to the origin, omega bounds.

Points are 1-D complex arrays of length ``dim``. Batched helpers (suffix
``_batch``) take arrays of shape ``(N, dim)`` and skip the membership checks;
callers are expected to generate interior points themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import BoundaryClamp, PointOutsideDomain

DEFAULT_BOUNDARY_CLAMP = 1e-9


@dataclass(frozen=True)
class Domain:
    kind: Literal["polydisk", "ball"]
    dim: int

    def __post_init__(self):
        if self.kind not in ("polydisk", "ball"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")

    @classmethod
    def polydisk(cls, n: int) -> "Domain":
        return cls("polydisk", n)

    @classmethod
    def ball(cls, n: int) -> "Domain":
        return cls("ball", n)

    @property
    def is_disk(self) -> bool:
        return self.dim == 1

    def radius(self, z) -> float:
        """max_j |z_j| on the polydisk, Euclidean norm on the ball."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "polydisk":
            return float(np.max(np.abs(z)))
        return float(np.sqrt(np.sum(np.abs(z) ** 2)))

    def radius_batch(self, Z: np.ndarray) -> np.ndarray:
        if self.kind == "polydisk":
            return np.max(np.abs(Z), axis=1)
        return np.sqrt(np.sum(np.abs(Z) ** 2, axis=1))

    def check_point(self, z, clamp: float = DEFAULT_BOUNDARY_CLAMP) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if z.shape != (self.dim,):
            raise PointOutsideDomain(f"expected {self.dim} coordinates, got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            raise PointOutsideDomain("point has non-finite coordinates")
        r = self.radius(z)
        if r >= 1.0:
            raise PointOutsideDomain(f"point radius {r!r} is not < 1")
        if r > 1.0 - clamp:
            raise BoundaryClamp(f"point radius {r!r} exceeds 1 - {clamp:g}")
        return z

    def __str__(self) -> str:
        return f"{'Polydisk' if self.kind == 'polydisk' else 'Ball'}({self.dim})"


@dataclass(frozen=True)
class Interval:
    """Enclosure [lower, upper]; ``upper`` may be +inf for a diverging quantity."""

    lower: float
    upper: float
    exact: bool = False

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError("interval endpoints must not be NaN")
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} > upper {self.upper}")
        if self.exact and self.lower != self.upper:
            raise ValueError("exact interval must have lower == upper")

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(value, value, True)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def scaled(self, c: float) -> "Interval":
        return Interval(self.lower * c, self.upper * c, self.exact)

    def to_dict(self) -> dict:
        return {"lower": _num(self.lower), "upper": _num(self.upper), "exact": self.exact}


def _num(x: float):
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return float(x)


@dataclass(frozen=True)
class HermitianForm:
    """Evaluation data for H_z(u, v̄) = v^H M u."""

    matrix: np.ndarray

    def __call__(self, u, v=None) -> complex:
        u = np.asarray(u, dtype=complex)
        v = u if v is None else np.asarray(v, dtype=complex)
        return complex(np.conj(v) @ self.matrix @ u)

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def metric_matrix(domain: Domain, z, clamp: float = DEFAULT_BOUNDARY_CLAMP) -> HermitianForm:
    z = domain.check_point(z, clamp)
    if domain.kind == "polydisk":
        return HermitianForm(np.diag(1.0 / (1.0 - np.abs(z) ** 2) ** 2).astype(complex))
    s = 1.0 - float(np.sum(np.abs(z) ** 2))
    # H_z(u, ū) = (s‖u‖² + |<u, z>|²) / s²  with <u, z> = Σ u_j conj(z_j)
    m = (s * np.eye(domain.dim) + np.outer(z, np.conj(z))) / s**2
    return HermitianForm(m)


def disk_distance(r):
    """Poincaré distance from 0 to a point of modulus r in the unit disk."""
    return np.arctanh(r)


def rho_to_origin(domain: Domain, z, clamp: float = DEFAULT_BOUNDARY_CLAMP) -> Interval:
    """Distance from z to 0: exact on the ball and disk, an enclosure on the polydisk."""
    z = domain.check_point(z, clamp)
    if domain.kind == "ball":
        return Interval.point(float(disk_distance(domain.radius(z))))
    per_coord = disk_distance(np.abs(z))
    if domain.dim == 1:
        return Interval.point(float(per_coord[0]))
    lo, hi = float(np.max(per_coord)), float(np.sum(per_coord))
    if np.count_nonzero(per_coord) <= 1:
        return Interval.point(lo)
    return Interval(lo, max(lo, hi), False)


def omega_upper(domain: Domain, z, clamp: float = DEFAULT_BOUNDARY_CLAMP) -> float:
    """Upper bound for ω(z); equal to ω(z) on the ball and disk."""
    return rho_to_origin(domain, z, clamp).upper


def omega_upper_exact(domain: Domain) -> bool:
    return domain.kind == "ball" or domain.dim == 1


def omega_upper_batch(domain: Domain, Z: np.ndarray) -> np.ndarray:
    if domain.kind == "ball":
        return disk_distance(domain.radius_batch(Z))
    return np.sum(disk_distance(np.abs(Z)), axis=1)


def omega_lower_batch(domain: Domain, Z: np.ndarray) -> np.ndarray:
    """Closed-form lower bound for ω.

    Ball: atanh‖z‖ (exact). Polydisk: sqrt(Σ_j atanh²|z_j|), the value at z of
    Σ_j p_j atanh(e^{-i arg z_j} ζ_j) with p ∝ atanh|z_j|, Σ p_j² = 1; each
    summand contributes p_j²(1-|ζ_j|²)²/|1-ζ_j²|² ≤ p_j² to Q², so that test
    function vanishes at 0 and has Bloch norm ≤ 1.
    """
    if domain.kind == "ball":
        return disk_distance(domain.radius_batch(Z))
    return np.sqrt(np.sum(disk_distance(np.abs(Z)) ** 2, axis=1))


def inverse_metric_quadratic_batch(domain: Domain, Z: np.ndarray, G: np.ndarray) -> np.ndarray:
    """sup_u |G·u|² / H_z(u, ū) for rows z of Z and holomorphic gradients G (shape (N, n))."""
    if domain.kind == "polydisk":
        return np.sum(np.abs(G) ** 2 * (1.0 - np.abs(Z) ** 2) ** 2, axis=1)
    s = 1.0 - np.sum(np.abs(Z) ** 2, axis=1)
    # M^{-1} = s (I - z z^H)
    radial = np.sum(G * Z, axis=1)
    return s * (np.sum(np.abs(G) ** 2, axis=1) - np.abs(radial) ** 2)


def pseudo_distance_upper_batch(domain: Domain, Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Upper bound for the Bergman distance ρ(z, w); exact on the ball."""
    if domain.kind == "polydisk":
        num = np.abs(Z - W)
        den = np.abs(1.0 - np.conj(Z) * W)
        p = np.clip(num / den, 0.0, 1.0 - 1e-16)
        return np.sum(np.arctanh(p), axis=1)
    zz = 1.0 - np.sum(np.abs(Z) ** 2, axis=1)
    ww = 1.0 - np.sum(np.abs(W) ** 2, axis=1)
    cross = np.abs(1.0 - np.sum(Z * np.conj(W), axis=1)) ** 2
    p2 = np.clip(1.0 - zz * ww / cross, 0.0, 1.0 - 1e-16)
    return np.arctanh(np.sqrt(p2))


def sample_interior(domain: Domain, count: int, seed: int) -> np.ndarray:
    """Scrambled-Halton points, uniform in volume, strictly inside the domain."""
    from scipy.stats import qmc

    n = domain.dim
    if domain.kind == "polydisk":
        u = qmc.Halton(d=2 * n, scramble=True, seed=seed).random(count)
        r = np.sqrt(u[:, :n])
        return r * np.exp(2j * np.pi * u[:, n:])
    from scipy.special import ndtri

    u = qmc.Halton(d=2 * n + 1, scramble=True, seed=seed).random(count)
    g = ndtri(np.clip(u[:, : 2 * n], 1e-12, 1 - 1e-12))
    d = g[:, :n] + 1j * g[:, n:]
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = u[:, 2 * n] ** (1.0 / (2 * n))
    return d * np.minimum(r, 1.0 - 1e-12)[:, None]


def sample_shells(domain: Domain, count: int, seed: int, levels) -> np.ndarray:
    """Points whose radius cycles through ``levels`` (boundary-biased sample)."""
    base = sample_interior(domain, count, seed + 1)
    rad = domain.radius_batch(base)
    rad[rad == 0] = 1.0
    t = np.asarray(levels, dtype=float)[np.arange(count) % len(levels)]
    return base * (t / rad)[:, None]
