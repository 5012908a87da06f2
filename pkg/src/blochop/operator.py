"""Weighted composition operators W_{ψ,φ} f = ψ·(f∘φ) from the Bloch space into H∞_μ.

Criterion quantities, boundedness and norm, compactness, and the logarithmic
test-function families used for lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .blochspace import LOG4
from .errors import ArityError, DomainMismatch
from .geometry import Domain, Interval, omega_lower_batch, omega_upper_batch
from .supsearch import LimitEstimate, SearchConfig, SupResult, boundary_limit, sup_over_domain
from .symbolic import BinOp, Call, Const, HoloFunction, Pow, SelfMap, Var, range_check, require_self_map
from .weightedspace import MuNormResult, Weight, mu_norm

LOG2 = math.log(2.0)


def sandwich_constant(n: int) -> float:
    """n(1 + log 2): ratio between the two sides of the polydisk norm estimate."""
    return n * (1.0 + LOG2)


@dataclass(frozen=True, eq=False)
class SymbolTriple:
    psi: HoloFunction
    phi: SelfMap
    mu: Weight
    domain: Domain

    def __post_init__(self):
        n = self.domain.dim
        if self.psi.arity != n:
            raise ArityError(f"ψ has arity {self.psi.arity}, domain dimension is {n}")
        if self.phi.dim != n:
            raise ArityError(f"φ has {self.phi.dim} components, domain dimension is {n}")
        require_self_map(self.phi)

    @classmethod
    def build(cls, domain: Domain, psi: str, phi: Sequence[str], weight: str,
              range_samples: int = 1000, seed: int = 0) -> "SymbolTriple":
        from .symbolic import parse_expr

        if len(phi) != domain.dim:
            raise ArityError(f"need {domain.dim} components for φ, got {len(phi)}")
        f = parse_expr(psi, domain.dim)
        checked = range_check(SelfMap.parse(list(phi)), domain, range_samples, seed)
        return cls(f, checked, Weight.parse(weight, domain), domain)

    @property
    def exact_omega(self) -> bool:
        return self.domain.kind == "ball" or self.domain.dim == 1

    def scaled(self, c: complex) -> "SymbolTriple":
        return SymbolTriple(self.psi * c, self.phi, self.mu, self.domain)


# ------------------------------------------------------------------ objectives


def _weighted_psi(sym: SymbolTriple, Z: np.ndarray):
    v, _, ok = sym.psi.evaluate_batch(Z, want_grad=False)
    W, okw = sym.phi.evaluate_batch(Z)
    return sym.mu.evaluate_batch(sym.domain, Z) * np.abs(v), W, ok & okw


def upsilon_upper_objective(sym: SymbolTriple):
    """μ|ψ|·ω_upper(φ); on the polydisk this is also the θ integrand."""

    def g(Z):
        a, W, ok = _weighted_psi(sym, Z)
        return np.where(ok, a * omega_upper_batch(sym.domain, W), np.nan)

    return g


def upsilon_lower_objective(sym: SymbolTriple):
    def g(Z):
        a, W, ok = _weighted_psi(sym, Z)
        return np.where(ok, a * omega_lower_batch(sym.domain, W), np.nan)

    return g


def upsilon0_lower_objective(sym: SymbolTriple):
    """μ|ψ|·g_w(φ), g_w the centred log-family sum: a member of the *-little Bloch unit ball."""
    n = sym.domain.dim

    def g(Z):
        a, W, ok = _weighted_psi(sym, Z)
        val = np.sum(-np.log1p(-np.abs(W) ** 2), axis=1) / (n * (2.0 + LOG4))
        return np.where(ok, a * val, np.nan)

    return g


def compactness_objective(sym: SymbolTriple):
    """Quantity whose boundary limit decides compactness.

    Polydisk (and disk): ½μ|ψ|Σ log((1+|φ_j|)/(1-|φ_j|)). Ball: ½μ|ψ|ω(φ).
    """
    base = upsilon_upper_objective(sym)
    if sym.domain.kind == "ball" and sym.domain.dim > 1:
        return lambda Z: 0.5 * base(Z)
    return base


# --------------------------------------------------------------- criterion values


def theta(sym: SymbolTriple, cfg: SearchConfig) -> SupResult:
    if sym.domain.kind != "polydisk":
        raise DomainMismatch("θ is defined on the polydisk only")
    return sup_over_domain(upsilon_upper_objective(sym), sym.domain, cfg)


def _interval_from(upper: SupResult, lower: Optional[SupResult], exact: bool) -> Interval:
    if upper.diverging:
        lo = lower.value if lower is not None else upper.value
        return Interval(min(lo, upper.value), math.inf)
    if exact:
        return Interval.point(upper.value)
    lo = min(lower.value, upper.value)
    return Interval(lo, upper.value)


def _upsilon_searches(sym: SymbolTriple, cfg: SearchConfig, upper: Optional[SupResult] = None):
    if upper is None:
        upper = sup_over_domain(upsilon_upper_objective(sym), sym.domain, cfg)
    if sym.exact_omega:
        return _interval_from(upper, None, True), upper, None
    lower = sup_over_domain(upsilon_lower_objective(sym), sym.domain, cfg)
    return _interval_from(upper, lower, False), upper, lower


def upsilon(sym: SymbolTriple, cfg: SearchConfig) -> Interval:
    """Enclosure of sup μ|ψ|ω(φ): exact on the ball and disk."""
    return _upsilon_searches(sym, cfg)[0]


@dataclass
class CriterionValues:
    psi_mu_norm: MuNormResult
    upsilon: Interval
    upsilon0: Interval
    theta: Optional[SupResult]
    witness_points: dict
    searches: dict = field(default_factory=dict)  # name -> SupResult


def criterion_values(sym: SymbolTriple, cfg: SearchConfig) -> CriterionValues:
    psi = mu_norm(sym.psi, sym.mu, sym.domain, cfg)
    th = theta(sym, cfg) if sym.domain.kind == "polydisk" else None
    ups, up_res, lo_res = _upsilon_searches(sym, cfg, upper=th)
    searches = {"psi_mu_norm": psi.search, "upsilon_upper": up_res}
    witnesses = {"psi_mu_norm": psi.witness, "upsilon_upper": up_res.witness}
    if lo_res is not None:
        searches["upsilon_lower"] = lo_res
        witnesses["upsilon_lower"] = lo_res.witness
    if th is not None:
        searches["theta"] = th
        witnesses["theta"] = th.witness
    if sym.exact_omega:
        ups0 = ups
    else:
        r0 = sup_over_domain(upsilon0_lower_objective(sym), sym.domain, cfg)
        searches["upsilon0_lower"] = r0
        witnesses["upsilon0_lower"] = r0.witness
        ups0 = Interval(min(r0.value, ups.upper), ups.upper)
    return CriterionValues(psi, ups, ups0, th, witnesses, searches)


# ----------------------------------------------------------------------- verdicts


@dataclass
class AnalysisReport:
    boundedness: str  # Bounded | Unbounded | Inconclusive
    norm: Interval
    compactness: Optional[str]  # Compact | NotCompact | CompactSufficient | Inconclusive
    criterion: CriterionValues
    limit: Optional[LimitEstimate] = None
    oracle_crosscheck: Optional[object] = None
    notes: list = field(default_factory=list)
    basis: dict = field(default_factory=dict)


def _statuses(crit: CriterionValues, exact: bool) -> list:
    key = "upsilon_upper" if exact else "theta"
    return [crit.psi_mu_norm.status, crit.searches[key].status]


def analyze_boundedness(sym: SymbolTriple, cfg: SearchConfig,
                        crit: Optional[CriterionValues] = None) -> AnalysisReport:
    crit = crit or criterion_values(sym, cfg)
    exact = sym.exact_omega
    n = sym.domain.dim
    psi = crit.psi_mu_norm.value
    statuses = _statuses(crit, exact)
    notes = []
    if any(s == "SupDiverging" for s in statuses):
        verdict = "Unbounded"
        which = "ψ ∉ H∞_μ" if statuses[0] == "SupDiverging" else "criterion supremum diverges"
        notes.append(f"unbounded: {which} (shell profile strictly increasing without slowing)")
        lower = max(psi if statuses[0] != "SupDiverging" else 0.0, crit.upsilon.lower)
        norm = Interval(lower, math.inf)
    elif all(s == "Converged" for s in statuses):
        verdict = "Bounded"
        if exact:
            norm = Interval.point(max(psi, crit.upsilon.upper))
        else:
            th = crit.theta.value
            norm = Interval(max(psi, th / sandwich_constant(n)), max(psi, th))
    else:
        verdict = "Inconclusive"
        notes.append("search budget exhausted before convergence")
        norm = Interval(max(psi, crit.upsilon.lower), math.inf)
    if exact:
        basis = ("bounded iff ψ ∈ H∞_μ and sup μ|ψ|ω(φ) < ∞ with ω(w) = atanh‖w‖; "
                 "norm = max(‖ψ‖_μ, υ_μ)")
    else:
        basis = (f"bounded iff ψ ∈ H∞_μ and θ_μ < ∞; norm in "
                 f"[max(‖ψ‖_μ, θ_μ/(n(1+log 2))), max(‖ψ‖_μ, θ_μ)] with n(1+log 2) = {sandwich_constant(n):.6f}")
    return AnalysisReport(verdict, norm, None, crit, notes=notes, basis={"boundedness": basis})


def analyze_compactness(sym: SymbolTriple, cfg: SearchConfig,
                        report: Optional[AnalysisReport] = None) -> AnalysisReport:
    report = report or analyze_boundedness(sym, cfg)
    iff = sym.domain.kind == "polydisk" or sym.domain.dim == 1
    if report.boundedness == "Unbounded":
        report.compactness = "NotCompact"
        report.notes.append("not compact: the operator is not even bounded")
        report.basis["compactness"] = "compact operators are bounded"
        return report
    if report.boundedness == "Inconclusive":
        report.compactness = "Inconclusive"
        report.basis["compactness"] = "boundedness undecided"
        return report
    lim = boundary_limit(compactness_objective(sym), sym.phi, sym.domain, cfg)
    report.limit = lim
    report.notes.append(
        "boundary approach of φ(z) is measured by Euclidean shell levels of max_j|φ_j(z)| "
        "(‖φ(z)‖ on the ball)"
    )
    if lim.verdict == "BoundaryUnreachable":
        report.notes.append(lim.note)
    if iff:
        verdict = {
            "TendsToZero": "Compact",
            "BoundaryUnreachable": "Compact",
            "BoundedAway": "NotCompact",
            "Inconclusive": "Inconclusive",
        }[lim.verdict]
        report.basis["compactness"] = (
            "compact iff ψ ∈ H∞_μ and ½μ|ψ|Σ log((1+|φ_j|)/(1-|φ_j|)) → 0 as φ(z) → boundary"
        )
    else:
        verdict = {
            "TendsToZero": "CompactSufficient",
            "BoundaryUnreachable": "CompactSufficient",
            "BoundedAway": "Inconclusive",
            "Inconclusive": "Inconclusive",
        }[lim.verdict]
        report.basis["compactness"] = (
            "sufficient: ψ ∈ H∞_μ and ½μ|ψ|ω(φ) → 0 as φ(z) → boundary; "
            "necessity is only conjectured on the ball"
        )
        if lim.verdict == "BoundedAway":
            report.notes.append(
                "criterion bounded away from 0; the conjectured converse would give NotCompact, "
                "but no verdict is rendered without it"
            )
    report.compactness = verdict
    return report


def analyze(sym: SymbolTriple, cfg: SearchConfig) -> AnalysisReport:
    return analyze_compactness(sym, cfg, analyze_boundedness(sym, cfg))


# -------------------------------------------------------------- test families


def _log_kernel(j: int, c: complex) -> Call:
    """Log(4/(1 - z_j c))."""
    return Call("log", BinOp("/", Const(4.0), BinOp("-", Const(1.0), BinOp("*", Var(j), Const(complex(c))))))


def make_h(j: int, lam, phi: SelfMap, n: int) -> HoloFunction:
    """h_j(z) = Log(4/(1 - z_j·conj(φ_j(λ)))) / (n(2 + log 4))."""
    if not 1 <= j <= n:
        raise ValueError(f"coordinate index {j} outside 1..{n}")
    w = phi(np.asarray(lam, dtype=complex))
    c = complex(np.conj(w[j - 1]))
    return HoloFunction(BinOp("*", Const(1.0 / (n * (2.0 + LOG4))), _log_kernel(j, c)), n)


def make_f_lambda(lam, phi: SelfMap, n: int) -> HoloFunction:
    """Σ_j h_j: a *-little Bloch function of norm at most 1."""
    total = make_h(1, lam, phi, n)
    for j in range(2, n + 1):
        total = total + make_h(j, lam, phi, n)
    return total


def make_fk(k: int, m: int, w_m: complex, n: int) -> HoloFunction:
    """(Log(4/(1 - z_m·conj(w_m))))² / log(4/(1 - |w_m|²)); ``k`` only labels the sequence member."""
    if abs(w_m) >= 1:
        raise ValueError("|w_m| must be < 1")
    if not 1 <= m <= n:
        raise ValueError(f"coordinate index {m} outside 1..{n}")
    denom = math.log(4.0 / (1.0 - abs(w_m) ** 2))
    return HoloFunction(BinOp("/", Pow(_log_kernel(m, np.conj(w_m)), 2), Const(denom)), n)
