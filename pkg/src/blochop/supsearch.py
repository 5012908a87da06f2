"""Global supremum search over the polydisk or ball.

Points are parameterized per coordinate by a log-radial variable
``s = -log(1 - r)`` and an angle (polydisk), or by ``s`` and a direction in
R^{2n} (ball). The initial grid is a polar product whose radial nodes are
quadratically clustered toward the boundary and always contain the shell
levels; refinement evaluates shrinking stencils around the best candidates.

Every objective is a batched callable ``g(Z) -> values`` on arrays of shape
``(N, n)``; non-finite values mark points to skip. Batches are split into
fixed-size chunks before they reach the worker pool, so results never depend
on the number of workers.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import SearchBudgetExceeded
from .geometry import DEFAULT_BOUNDARY_CLAMP, Domain

Objective = Callable[[np.ndarray], np.ndarray]

CHUNK = 4096
TOP_K = 4
STARTS = 6
START_SEPARATION = 0.3
STENCIL_FULL_MAX_PARAMS = 4
STENCIL_RANDOM = 600
TAIL_WINDOW = 6
DECAY_RATIO = 0.99
POLISH_STARTS = 2
POLISH_ROUNDS = 300
POLISH_MIN_STEP = 1e-10


def default_shell_levels(clamp: float = DEFAULT_BOUNDARY_CLAMP) -> tuple:
    return tuple(t for t in (1.0 - 2.0**-k for k in range(1, 21)) if t < 1.0 - clamp)


@dataclass(frozen=True)
class SearchConfig:
    initial_grid_per_dim: int = 24
    refinement_rounds: int = 6
    refinement_factor: float = 3.0
    shell_levels: tuple = field(default_factory=default_shell_levels)
    divergence_threshold: float = 1e9
    tolerance: float = 1e-4
    seed: int = 0
    parallel_workers: int = 1
    boundary_clamp: float = DEFAULT_BOUNDARY_CLAMP
    max_initial_points: int = 150_000
    max_evaluations: int = 50_000_000

    def __post_init__(self):
        object.__setattr__(self, "shell_levels", tuple(float(t) for t in self.shell_levels))
        if self.initial_grid_per_dim < 2 or self.refinement_rounds < 0:
            raise ValueError("grid must have >= 2 nodes per axis and rounds must be >= 0")
        if self.refinement_factor <= 1.0:
            raise ValueError("refinement_factor must exceed 1")
        if self.divergence_threshold <= 0 or self.tolerance <= 0 or self.parallel_workers < 1:
            raise ValueError("threshold, tolerance and worker count must be positive")
        if not 0 < self.boundary_clamp < 0.5:
            raise ValueError("boundary_clamp must lie in (0, 0.5)")
        lv = self.shell_levels
        if not lv or any(not 0 < t < 1.0 - self.boundary_clamp for t in lv):
            raise ValueError("shell levels must lie in (0, 1 - boundary_clamp)")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError("shell levels must be strictly increasing")

    def replace(self, **kw) -> "SearchConfig":
        d = asdict(self)
        d.update(kw)
        return SearchConfig(**d)

    def digest(self) -> str:
        """Hash of every field that affects numeric output (workers excluded)."""
        d = asdict(self)
        d.pop("parallel_workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class SupResult:
    value: float
    witness: np.ndarray
    status: str  # Converged | SupDiverging | MaxRefinementReached
    shell_profile: list  # (t, annulus sup or None)
    skipped: int = 0
    evaluations: int = 0
    history: list = field(default_factory=list)  # best value after each refinement round

    @property
    def converged(self) -> bool:
        return self.status == "Converged"

    @property
    def diverging(self) -> bool:
        return self.status == "SupDiverging"


@dataclass
class LimitEstimate:
    sequence: list  # (t, restricted sup or None)
    verdict: str  # TendsToZero | BoundedAway | Inconclusive | BoundaryUnreachable
    estimate: Optional[float]  # ε achieved, or liminf estimate
    max_image_radius: float
    note: str = ""


# ----------------------------------------------------------------- parameterization


class _Chart:
    def __init__(self, domain: Domain, cfg: SearchConfig):
        self.domain = domain
        self.cfg = cfg
        self.n = domain.dim
        self.s_max = -math.log(cfg.boundary_clamp)
        self.polydisk = domain.kind == "polydisk"
        self.nparams = 2 * self.n if self.polydisk else 1 + 2 * self.n

    def radial_nodes(self, m: int) -> np.ndarray:
        quad = 1.0 - (1.0 - np.arange(m) / m) ** 2
        r = np.union1d(quad, np.asarray(self.cfg.shell_levels))
        return r[r <= 1.0 - self.cfg.boundary_clamp]

    def s_of_r(self, r):
        return -np.log1p(-np.asarray(r))

    def to_points(self, P: np.ndarray) -> np.ndarray:
        n = self.n
        if self.polydisk:
            s = np.clip(P[:, :n], 0.0, self.s_max)
            r = -np.expm1(-s)
            return r * np.exp(1j * P[:, n:])
        s = np.clip(P[:, 0], 0.0, self.s_max)
        r = -np.expm1(-s)
        x = P[:, 1:]
        nrm = np.linalg.norm(x, axis=1)
        x = np.where(nrm[:, None] > 0, x / np.where(nrm > 0, nrm, 1.0)[:, None], 0.0)
        x[nrm == 0, 0] = 1.0
        return r[:, None] * (x[:, :n] + 1j * x[:, n:])

    def normalize(self, P: np.ndarray) -> np.ndarray:
        P = P.copy()
        n = self.n
        if self.polydisk:
            P[:, :n] = np.clip(P[:, :n], 0.0, self.s_max)
            P[:, n:] = np.mod(P[:, n:], 2 * np.pi)
        else:
            P[:, 0] = np.clip(P[:, 0], 0.0, self.s_max)
            nrm = np.linalg.norm(P[:, 1:], axis=1, keepdims=True)
            P[:, 1:] = np.where(nrm > 0, P[:, 1:] / np.where(nrm > 0, nrm, 1.0), 0.0)
        return P

    def initial(self) -> np.ndarray:
        m = self.cfg.initial_grid_per_dim
        n = self.n
        budget = self.cfg.max_initial_points
        if self.polydisk:
            m_eff = max(4, int(round(m / n)))
            radii = self.radial_nodes(m_eff)
            angles = 2 * np.pi * np.arange(m_eff) / m_eff
            coord = [(0.0, 0.0)] + [(s, a) for s in self.s_of_r(radii[radii > 0]) for a in angles]
            coord = np.array(coord)
            total = len(coord) ** n
            if total <= budget:
                idx = np.array(list(itertools.product(range(len(coord)), repeat=n)))
            else:
                rng = np.random.default_rng([self.cfg.seed, 17])
                flat = np.sort(rng.choice(total, size=budget, replace=False))
                idx = np.stack(np.unravel_index(flat, (len(coord),) * n), axis=1)
                idx = np.vstack([idx, np.zeros((1, n), dtype=int)])
            s = coord[idx, 0]
            a = coord[idx, 1]
            return np.hstack([s, a])
        dirs = self._ball_directions(m)
        radii = self.radial_nodes(m)
        s = self.s_of_r(radii[radii > 0])
        P = [np.concatenate([[0.0], dirs[0]])[None, :]]
        for sv in s:
            P.append(np.hstack([np.full((len(dirs), 1), sv), dirs]))
        P = np.vstack(P)
        if len(P) > budget:
            rng = np.random.default_rng([self.cfg.seed, 19])
            keep = np.sort(rng.choice(len(P), size=budget, replace=False))
            keep[0] = 0
            P = P[keep]
        return P

    def _ball_directions(self, m: int) -> np.ndarray:
        n = self.n
        if n == 1:
            a = 2 * np.pi * np.arange(m) / m
            return np.stack([np.cos(a), np.sin(a)], axis=1)
        m_theta = max(4, m // n)
        moduli = (0.5, 1.0)
        angles = 2 * np.pi * np.arange(m_theta) / m_theta
        per = [0.0 + 0.0j] + [mo * np.exp(1j * a) for mo in moduli for a in angles]
        vecs = np.array(list(itertools.product(per, repeat=n)))
        nrm = np.linalg.norm(vecs, axis=1)
        vecs = vecs[nrm > 0] / nrm[nrm > 0, None]
        real = np.hstack([vecs.real, vecs.imag])
        _, first = np.unique(np.round(real, 12), axis=0, return_index=True)
        return real[np.sort(first)]

    def project_to_level(self, P: np.ndarray, s_target: float) -> np.ndarray:
        """Move a parameter vector so its domain radius corresponds to s_target."""
        P = P.copy()
        if self.polydisk:
            n = self.n
            j = int(np.argmax(P[:n]))
            P[:n] = np.minimum(P[:n], s_target)
            P[j] = s_target
        else:
            P[0] = s_target
        return P

    def initial_steps(self) -> np.ndarray:
        m = self.cfg.initial_grid_per_dim
        n = self.n
        if self.polydisk:
            m_eff = max(4, int(round(m / n)))
            return np.concatenate([np.full(n, 0.5), np.full(n, 2 * np.pi / m_eff)])
        return np.concatenate([[0.5], np.full(2 * n, 2 * np.pi / max(4, m // n))])

    def stencil(self, round_index: int) -> np.ndarray:
        p = self.nparams
        if p <= STENCIL_FULL_MAX_PARAMS:
            grid = np.array(list(itertools.product((-1.0, -0.5, 0.0, 0.5, 1.0), repeat=p)))
            return grid[np.any(grid != 0, axis=1)]
        rng = np.random.default_rng([self.cfg.seed, 23, round_index])
        axes = np.vstack([np.eye(p) * c for c in (-1.0, -0.5, 0.5, 1.0)])
        return np.vstack([axes, rng.uniform(-1.0, 1.0, size=(STENCIL_RANDOM, p))])


# ------------------------------------------------------------------- evaluation


class _Evaluator:
    def __init__(self, cfg: SearchConfig):
        self.cfg = cfg
        self.count = 0
        self.best_value = float("nan")
        self.best_point = None

    def __call__(self, g: Objective, Z: np.ndarray) -> np.ndarray:
        self.count += len(Z)
        if self.count > self.cfg.max_evaluations:
            raise SearchBudgetExceeded(f"more than {self.cfg.max_evaluations} evaluations",
                                       self.best_value, self.best_point)
        chunks = [Z[i : i + CHUNK] for i in range(0, len(Z), CHUNK)]
        if self.cfg.parallel_workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(self.cfg.parallel_workers) as pool:
                parts = list(pool.map(lambda c: _safe(g, c), chunks))
        else:
            parts = [_safe(g, c) for c in chunks]
        if not parts:
            return np.empty(0)
        V = np.concatenate(parts)
        i = _argmax(V)
        if i >= 0 and not V[i] <= self.best_value:
            self.best_value, self.best_point = float(V[i]), Z[i].copy()
        return V


def _safe(g: Objective, Z: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        v = np.asarray(g(Z), dtype=float).reshape(len(Z))
    return np.where(np.isfinite(v), v, np.nan)


def _argmax(vals: np.ndarray) -> int:
    """First index of the maximum, ignoring NaN; -1 if nothing is finite."""
    if vals.size == 0 or np.all(np.isnan(vals)):
        return -1
    return int(np.nanargmax(vals))


class _Pool:
    """Everything evaluated so far, in evaluation order."""

    def __init__(self, chart: _Chart):
        self.chart = chart
        self.P: list = []
        self.Z: list = []
        self.V: list = []
        self.extra: list = []

    def add(self, P, Z, V, extra=None):
        self.P.append(P)
        self.Z.append(Z)
        self.V.append(V)
        self.extra.append(extra if extra is not None else np.zeros(len(P)))

    def arrays(self):
        return (
            np.vstack(self.P),
            np.vstack(self.Z),
            np.concatenate(self.V),
            np.concatenate(self.extra),
        )


def _top_k(P: np.ndarray, V: np.ndarray, k: int) -> list:
    order = np.lexsort((np.arange(len(V)), -np.nan_to_num(V, nan=-np.inf)))
    chosen, seen = [], set()
    for i in order:
        if np.isnan(V[i]):
            break
        key = tuple(np.round(P[i], 12))
        if key in seen:
            continue
        seen.add(key)
        chosen.append(int(i))
        if len(chosen) == k:
            break
    return chosen


def _separated_top(Z: np.ndarray, V: np.ndarray, k: int, sep: float) -> list:
    """Best points, greedily skipping any within Euclidean distance ``sep`` of one already taken."""
    order = np.lexsort((np.arange(len(V)), -np.nan_to_num(V, nan=-np.inf)))
    chosen = []
    for i in order:
        if np.isnan(V[i]) or len(chosen) == k:
            break
        if all(np.linalg.norm(Z[i] - Z[j]) >= sep for j in chosen):
            chosen.append(int(i))
    return chosen


def _refine(chart, evaluate, g, pool, centers_P, rounds, k, feasible=None, start_round=0):
    """Shrinking-stencil refinement; returns best value after each round.

    Centres are chosen among this run's own points only, so separate runs stay in
    their own basins (and shell-restricted runs stay in their shell).
    """
    cfg = chart.cfg
    h = chart.initial_steps()
    history = []
    P_all = np.array(centers_P, dtype=float)
    Zc = chart.to_points(P_all)
    V_all = evaluate(g, Zc)
    if feasible is not None:
        V_all = np.where(feasible(Zc)[0], V_all, np.nan)
    centers = centers_P
    for rd in range(rounds):
        offs = chart.stencil(start_round + rd) * h
        cand = np.vstack([c[None, :] + offs for c in centers])
        cand = chart.normalize(cand)
        Z = chart.to_points(cand)
        V = evaluate(g, Z)
        extra = None
        if feasible is not None:
            mask, extra = feasible(Z)
            V = np.where(mask, V, np.nan)
        pool.add(cand, Z, V, extra)
        P_all = np.vstack([P_all, cand])
        V_all = np.concatenate([V_all, V])
        idx = _top_k(P_all, V_all, k)
        if idx:
            centers = [P_all[i] for i in idx]
            history.append(float(V_all[idx[0]]))
        h = h / cfg.refinement_factor
    return history


def _polish(chart, evaluate, g, start_P, start_v, seed_offset: int):
    """Compass search that keeps its step while improving and halves it otherwise.

    The refinement rounds shrink the stencil on a fixed schedule, which can stall
    short of a maximum lying on a boundary face; this finishes the job.
    """
    h = chart.initial_steps() / chart.cfg.refinement_factor**2
    c, cv, cz = start_P, start_v, None
    for rd in range(POLISH_ROUNDS):
        cand = chart.normalize(c[None, :] + chart.stencil(1000 + seed_offset + rd) * h)
        Z = chart.to_points(cand)
        V = evaluate(g, Z)
        i = _argmax(V)
        if i >= 0 and V[i] > cv:
            c, cv, cz = cand[i], float(V[i]), Z[i].copy()
        else:
            h = h / 2.0
            if np.max(h) < POLISH_MIN_STEP:
                break
    return cv, cz


# ---------------------------------------------------------------------- profiles


def _annulus_profile(levels, radius: np.ndarray, V: np.ndarray) -> list:
    prof = []
    for i, t in enumerate(levels):
        hi = levels[i + 1] if i + 1 < len(levels) else np.inf
        m = (radius >= t) & (radius < hi) & ~np.isnan(V)
        prof.append((float(t), float(np.max(V[m])) if m.any() else None))
    return prof


def is_diverging(profile: list, cfg: SearchConfig) -> bool:
    """Tail of an annulus profile grows without the geometric slow-down of a convergent one."""
    vals = [v for _, v in profile if v is not None]
    if len(vals) < 4:
        return False
    tail = np.array(vals[-TAIL_WINDOW:])
    d = np.diff(tail)
    last3 = d[-3:]
    floor = 1e-12 * max(1.0, abs(tail[-1]))
    if not np.all(last3 > floor):
        return False
    if tail[-1] > cfg.divergence_threshold:
        return True
    # a late jump (a better point found near a boundary face) shrinks the next increment;
    # genuine growth keeps consecutive increments comparable
    steady = np.all(last3[1:] >= 0.8 * last3[:-1])
    return bool(np.all(d > floor) and d[-1] >= 0.8 * d[0] and steady)


# ------------------------------------------------------------------------ public


def sup_over_domain(g: Objective, domain: Domain, cfg: SearchConfig) -> SupResult:
    chart = _Chart(domain, cfg)
    evaluate = _Evaluator(cfg)
    pool = _Pool(chart)
    P0 = chart.initial()
    Z0 = chart.to_points(P0)
    V0 = evaluate(g, Z0)
    pool.add(P0, Z0, V0)
    first = _argmax(V0)
    history = [float(V0[first])] if first >= 0 else []
    if first >= 0:
        # independent refinements from separated starts, so that maxima on different boundary
        # faces each get followed instead of all centres collapsing into the first basin found
        runs = [_refine(chart, evaluate, g, pool, [P0[i]], cfg.refinement_rounds, TOP_K)
                for i in _separated_top(Z0, V0, STARTS, START_SEPARATION)]
        runs = [r for r in runs if r]
        if runs:
            history += [max(vals) for vals in zip(*runs)]

    levels = cfg.shell_levels
    P_glob, Z, V, _ = pool.arrays()
    rad = domain.radius_batch(Z)
    g_best = _argmax(V)
    # refine each annulus separately so the profile is not an artifact of the coarse grid; the
    # global best, moved into the annulus, is a second seed so that sups approached on a boundary
    # face are tracked at every level instead of only where global refinement happened to land
    for i, t in enumerate(levels):
        hi = levels[i + 1] if i + 1 < len(levels) else np.inf
        m = (rad >= t) & (rad < hi) & ~np.isnan(V)
        if not m.any():
            continue
        j = int(np.flatnonzero(m)[np.nanargmax(V[m])])
        s_lo = float(chart.s_of_r(t))
        s_hi = float(chart.s_of_r(hi)) if np.isfinite(hi) else chart.s_max
        seeds = [P_glob[j]]
        if g_best >= 0:
            seeds.append(chart.project_to_level(P_glob[g_best], 0.5 * (s_lo + s_hi)))

        def in_shell(Zc, t=t, hi=hi):
            r = domain.radius_batch(Zc)
            return (r >= t) & (r < hi), None

        _refine(chart, evaluate, g, pool, seeds, cfg.refinement_rounds, 1, feasible=in_shell)

    P, Z, V, _ = pool.arrays()
    best = _argmax(V)
    skipped = int(np.count_nonzero(np.isnan(V)))
    if best < 0:
        return SupResult(float("nan"), np.zeros(domain.dim, complex), "MaxRefinementReached",
                         [(t, None) for t in levels], skipped, evaluate.count, history)
    value = float(V[best])
    witness = Z[best].copy()
    profile = _annulus_profile(levels, domain.radius_batch(Z), V)
    if is_diverging(profile, cfg):
        status = "SupDiverging"
    else:
        gain = history[-1] - history[-2] if len(history) > 1 else 0.0
        ok = gain <= cfg.tolerance * max(1.0, abs(value))
        status = "Converged" if ok else "MaxRefinementReached"
        # polished points improve value and witness only; the profile above stays as classified
        for k, i in enumerate(_top_k(P, V, POLISH_STARTS)):
            pv, pz = _polish(chart, evaluate, g, P[i], float(V[i]), 100 * k)
            if pz is not None and pv > value:
                value, witness = pv, pz
    return SupResult(value, witness, status, profile, skipped, evaluate.count, history)


def boundary_limit(g: Objective, phi, domain: Domain, cfg: SearchConfig) -> LimitEstimate:
    """Estimate lim sup of g(z) as the image radius of φ(z) tends to 1."""
    chart = _Chart(domain, cfg)
    evaluate = _Evaluator(cfg)
    pool = _Pool(chart)

    def image_radius(Z):
        W, ok = phi.evaluate_batch(Z)
        return np.where(ok, domain.radius_batch(W), np.nan)

    def g_and_radius(Z):
        return g(Z), image_radius(Z)

    P0 = chart.initial()
    Z0 = chart.to_points(P0)
    R0 = evaluate(image_radius, Z0)
    pool.add(P0, Z0, R0)
    idx = _top_k(P0, R0, TOP_K)
    if idx:
        _refine(chart, evaluate, image_radius, pool, [P0[i] for i in idx], cfg.refinement_rounds, TOP_K)
    P, Z, R, _ = pool.arrays()
    G = evaluate(g, Z)
    r_star = float(np.nanmax(R)) if np.any(~np.isnan(R)) else 0.0

    # second pool: objective g, radius kept alongside for the shell restriction
    gpool = _Pool(chart)
    gpool.add(P, Z, G, R)
    levels = cfg.shell_levels
    for t in levels:
        feas = (R >= t) & ~np.isnan(G)
        if not feas.any():
            continue
        j = int(np.flatnonzero(feas)[np.nanargmax(G[feas])])

        def restricted(Zc, t=t):
            r = image_radius(Zc)
            return r >= t, r

        _refine(chart, evaluate, g, gpool, [P[j]], cfg.refinement_rounds, 1, feasible=restricted)
    _, _, G, R = gpool.arrays()
    seq = []
    for t in levels:
        m = (R >= t) & ~np.isnan(G)
        seq.append((float(t), float(np.max(G[m])) if m.any() else None))

    reach_level = levels[len(levels) // 2]
    if r_star < levels[0]:
        return LimitEstimate(seq, "BoundaryUnreachable", None, r_star,
                             "image stays inside the first shell; limit condition is vacuous")
    if r_star < reach_level:
        return LimitEstimate(seq, "BoundaryUnreachable", None, r_star,
                             f"image separated from boundary: max image radius {r_star:.6g}")
    verdict, est, note = classify_tail([v for _, v in seq if v is not None], cfg)
    return LimitEstimate(seq, verdict, est, r_star, note)


def classify_tail(vals: list, cfg: SearchConfig):
    tol = cfg.tolerance
    if len(vals) < 3:
        return "Inconclusive", None, "too few nonempty shells"
    tail = np.array(vals[-4:])
    nonincreasing = bool(np.all(np.diff(tail) <= tol))
    if nonincreasing and tail[-1] < tol:
        return "TendsToZero", float(tail[-1]), ""
    ratios = tail[1:] / np.where(tail[:-1] > 0, tail[:-1], np.inf)
    if np.all(np.diff(tail) < 0) and np.all(ratios <= DECAY_RATIO):
        return "TendsToZero", float(tail[-1]), "tail decays geometrically; limit extrapolated"
    if float(np.min(tail)) > 10 * tol:
        return "BoundedAway", float(np.min(tail)), ""
    return "Inconclusive", float(tail[-1]), "tail neither vanishes nor stays away from 0"
