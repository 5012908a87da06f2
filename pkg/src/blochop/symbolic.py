"""Holomorphic expression DSL: parser, printer, and evaluation with exact gradients.

Grammar::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := base ("^" int)?
    base   := number | "i" | var | "(" expr ")" | func "(" expr ")" | "-" base
    func   := "exp" | "log" | "sqrt"
    var    := "z" int

A unary minus binds tighter than ``^`` (``-z1^2`` is ``(-z1)^2``), exactly as
the grammar reads. Gradients come from forward-mode dual numbers that carry
all n tangent directions at once and are evaluated on whole batches of points.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArityError, ExprSyntaxError, SelfMapViolation, SingularityError, UnknownIdentifier
from .geometry import Domain, sample_interior, sample_shells

SINGULARITY_TOL = 1e-14
FUNCTIONS = ("exp", "log", "sqrt")


# --------------------------------------------------------------------------- AST


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: complex


@dataclass(frozen=True)
class Var(Node):
    index: int  # 1-based


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Call(Node):
    name: str
    arg: Node


@dataclass(frozen=True)
class Compose(Node):
    """``outer`` with its variable k replaced by ``inner[k-1]``."""

    outer: Node
    inner: tuple


def max_var_index(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Const):
        return 0
    if isinstance(node, (Neg, Call)):
        return max_var_index(node.arg)
    if isinstance(node, Pow):
        return max_var_index(node.base)
    if isinstance(node, BinOp):
        return max(max_var_index(node.left), max_var_index(node.right))
    if isinstance(node, Compose):
        return max((max_var_index(c) for c in node.inner), default=0)
    raise TypeError(node)


# ------------------------------------------------------------------------ parser

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text: str):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, arity: int, var_prefix: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.arity = arity
        self.var_re = re.compile(rf"{re.escape(var_prefix)}([1-9]\d*)")

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, value):
        t = self.take()
        if t[1] != value:
            raise ExprSyntaxError(f"expected {value!r}, found {t[1] or 'end of input'!r}", t[2])

    def parse(self) -> Node:
        node = self.expr()
        if self.tok[0] != "end":
            raise ExprSyntaxError(f"unexpected token {self.tok[1]!r}", self.tok[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        node = self.base()
        if self.tok[1] == "^":
            self.take()
            sign = 1
            if self.tok[1] == "-":
                self.take()
                sign = -1
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ExprSyntaxError("exponent must be an integer literal", pos)
            node = Pow(node, sign * int(val))
        return node

    def base(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            if val.endswith("i"):
                return Const(complex(0.0, float(val[:-1])))
            return Const(complex(float(val)))
        if kind == "name":
            if val == "i":
                return Const(1j)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            m = self.var_re.fullmatch(val)
            if m:
                k = int(m.group(1))
                if k > self.arity:
                    raise ArityError(f"variable {val} exceeds arity {self.arity}")
                return Var(k)
            raise UnknownIdentifier(val)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if val == "-":
            return Neg(self.base())
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def parse_expr(text: str, arity: int, var_prefix: str = "z") -> "HoloFunction":
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    node = _Parser(text, arity, var_prefix).parse()
    return HoloFunction(node, arity)


# ----------------------------------------------------------------------- printer


def _fmt_complex(c: complex) -> str:
    re_, im = c.real, c.imag
    if im == 0.0:
        return f"({re_!r})" if re_ < 0 or str(re_).startswith("-") else repr(re_)
    if re_ == 0.0:
        return f"({im!r}i)" if im >= 0 else f"(-{-im!r}i)"
    sign = "+" if im >= 0 else "-"
    return f"({re_!r}{sign}{abs(im)!r}i)"


def to_text(node: Node, var_prefix: str = "z") -> str:
    if isinstance(node, Const):
        return _fmt_complex(node.value)
    if isinstance(node, Var):
        return f"{var_prefix}{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg, var_prefix)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left, var_prefix)} {node.op} {to_text(node.right, var_prefix)})"
    if isinstance(node, Pow):
        return f"({to_text(node.base, var_prefix)})^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg, var_prefix)})"
    if isinstance(node, Compose):
        inner = [to_text(c, var_prefix) for c in node.inner]
        return _substitute_text(node.outer, inner, var_prefix)
    raise TypeError(node)


def _substitute_text(node: Node, inner: list[str], var_prefix: str) -> str:
    if isinstance(node, Var):
        return f"({inner[node.index - 1]})"
    if isinstance(node, Const):
        return _fmt_complex(node.value)
    if isinstance(node, Neg):
        return f"(-{_substitute_text(node.arg, inner, var_prefix)})"
    if isinstance(node, BinOp):
        a = _substitute_text(node.left, inner, var_prefix)
        b = _substitute_text(node.right, inner, var_prefix)
        return f"({a} {node.op} {b})"
    if isinstance(node, Pow):
        return f"({_substitute_text(node.base, inner, var_prefix)})^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.name}({_substitute_text(node.arg, inner, var_prefix)})"
    if isinstance(node, Compose):
        deeper = [_substitute_text(c, inner, var_prefix) for c in node.inner]
        return _substitute_text(node.outer, deeper, var_prefix)
    raise TypeError(node)


# -------------------------------------------------------------------- evaluation


class _Dual:
    """Batched dual number: values (N,) and tangents (n, N); ``grad is None`` means zero."""

    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = val
        self.grad = grad


def _gscale(g, s):
    return None if g is None else g * s


def _gadd(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


class _Evaluator:
    def __init__(self, npts: int, want_grad: bool):
        self.npts = npts
        self.want_grad = want_grad
        self.bad = np.zeros(npts, dtype=bool)

    def _guard(self, x: np.ndarray) -> np.ndarray:
        """Mark near-zero entries singular and replace them so no warnings fire."""
        near = np.abs(x) < SINGULARITY_TOL
        if near.any():
            self.bad |= near
            x = np.where(near, 1.0, x)
        return x

    def run(self, node: Node, env: list) -> _Dual:
        if isinstance(node, Const):
            return _Dual(np.full(self.npts, node.value, dtype=complex), None)
        if isinstance(node, Var):
            return env[node.index - 1]
        if isinstance(node, Neg):
            a = self.run(node.arg, env)
            return _Dual(-a.val, _gscale(a.grad, -1.0))
        if isinstance(node, BinOp):
            a = self.run(node.left, env)
            b = self.run(node.right, env)
            op = node.op
            if op == "+":
                return _Dual(a.val + b.val, _gadd(a.grad, b.grad))
            if op == "-":
                return _Dual(a.val - b.val, _gadd(a.grad, _gscale(b.grad, -1.0)))
            if op == "*":
                return _Dual(a.val * b.val, _gadd(_gscale(a.grad, b.val), _gscale(b.grad, a.val)))
            den = self._guard(b.val)
            q = a.val / den
            g = None
            if self.want_grad:
                g = _gscale(_gadd(a.grad, _gscale(b.grad, -q)), 1.0 / den)
            return _Dual(q, g)
        if isinstance(node, Pow):
            a = self.run(node.base, env)
            k = node.exponent
            if k == 0:
                return _Dual(np.ones(self.npts, dtype=complex), None)
            if k < 0:
                base = self._guard(a.val)
                val = 1.0 / base ** (-k)
                g = _gscale(a.grad, k * val / base)
                return _Dual(val, g)
            val = a.val**k
            g = _gscale(a.grad, k * a.val ** (k - 1)) if self.want_grad else None
            return _Dual(val, g)
        if isinstance(node, Call):
            a = self.run(node.arg, env)
            if node.name == "exp":
                e = np.exp(a.val)
                return _Dual(e, _gscale(a.grad, e))
            if node.name == "log":
                x = self._guard(a.val)
                return _Dual(np.log(x), _gscale(a.grad, 1.0 / x))
            if self.want_grad and a.grad is not None:
                x = self._guard(a.val)
                s = np.sqrt(x)
                return _Dual(s, _gscale(a.grad, 0.5 / s))
            return _Dual(np.sqrt(a.val), None)
        if isinstance(node, Compose):
            inner = [self.run(c, env) for c in node.inner]
            return self.run(node.outer, inner)
        raise TypeError(node)


def evaluate_batch(node: Node, Z: np.ndarray, want_grad: bool = True):
    """Evaluate at rows of Z (shape (N, n)).

    Returns ``(values, gradients, ok)``; gradients has shape (N, n) or is None,
    and ``ok`` is False at singular or non-finite points (values there are junk).
    """
    Z = np.asarray(Z, dtype=complex)
    npts, n = Z.shape
    ev = _Evaluator(npts, want_grad)
    if want_grad:
        eye = np.eye(n, dtype=complex)
        env = [_Dual(Z[:, k], np.repeat(eye[:, k : k + 1], npts, axis=1)) for k in range(n)]
    else:
        env = [_Dual(Z[:, k], None) for k in range(n)]
    with np.errstate(all="ignore"):
        out = ev.run(node, env)
        val = np.broadcast_to(out.val, (npts,)).astype(complex)
        ok = ~ev.bad & np.isfinite(val)
        grad = None
        if want_grad:
            grad = np.zeros((npts, n), dtype=complex) if out.grad is None else out.grad.T.copy()
            ok &= np.all(np.isfinite(grad), axis=1)
    return val, grad, ok


@dataclass(frozen=True)
class EvalResult:
    value: complex
    gradient: np.ndarray


@dataclass(frozen=True, eq=False)
class HoloFunction:
    """A holomorphic function of ``arity`` complex variables, held as an AST."""

    node: Node
    arity: int

    def __post_init__(self):
        if max_var_index(self.node) > self.arity:
            raise ArityError(f"expression uses z{max_var_index(self.node)} but arity is {self.arity}")

    # construction helpers
    @classmethod
    def constant(cls, c: complex, arity: int) -> "HoloFunction":
        return cls(Const(complex(c)), arity)

    @classmethod
    def variable(cls, k: int, arity: int) -> "HoloFunction":
        return cls(Var(k), arity)

    def _lift(self, other) -> Node:
        if isinstance(other, HoloFunction):
            if other.arity != self.arity:
                raise ArityError("cannot combine functions of different arity")
            return other.node
        return Const(complex(other))

    def __add__(self, other):
        return HoloFunction(BinOp("+", self.node, self._lift(other)), self.arity)

    __radd__ = __add__

    def __sub__(self, other):
        return HoloFunction(BinOp("-", self.node, self._lift(other)), self.arity)

    def __rsub__(self, other):
        return HoloFunction(BinOp("-", self._lift(other), self.node), self.arity)

    def __mul__(self, other):
        return HoloFunction(BinOp("*", self.node, self._lift(other)), self.arity)

    def __rmul__(self, other):
        return HoloFunction(BinOp("*", self._lift(other), self.node), self.arity)

    def __truediv__(self, other):
        return HoloFunction(BinOp("/", self.node, self._lift(other)), self.arity)

    def __neg__(self):
        return HoloFunction(Neg(self.node), self.arity)

    def __pow__(self, k: int):
        return HoloFunction(Pow(self.node, int(k)), self.arity)

    def compose(self, maps: Sequence["HoloFunction"]) -> "HoloFunction":
        """self ∘ (maps[0], ..., maps[arity-1])."""
        if len(maps) != self.arity:
            raise ArityError(f"need {self.arity} inner maps, got {len(maps)}")
        inner_arity = maps[0].arity
        if any(m.arity != inner_arity for m in maps):
            raise ArityError("inner maps must share one arity")
        return HoloFunction(Compose(self.node, tuple(m.node for m in maps)), inner_arity)

    # evaluation
    def evaluate_batch(self, Z: np.ndarray, want_grad: bool = True):
        Z = np.asarray(Z, dtype=complex)
        if Z.ndim != 2 or Z.shape[1] != self.arity:
            raise ArityError(f"points must have shape (N, {self.arity})")
        return evaluate_batch(self.node, Z, want_grad)

    def eval_with_gradient(self, z) -> EvalResult:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if not np.all(np.isfinite(z)):
            raise ValueError("point must be finite")
        val, grad, ok = self.evaluate_batch(z[None, :], want_grad=True)
        if not ok[0]:
            raise SingularityError(f"{self.to_text()} is singular at {z.tolist()}", z)
        return EvalResult(complex(val[0]), grad[0])

    def __call__(self, z) -> complex:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        val, _, ok = self.evaluate_batch(z[None, :], want_grad=False)
        if not ok[0]:
            raise SingularityError(f"{self.to_text()} is singular at {z.tolist()}", z)
        return complex(val[0])

    def to_text(self) -> str:
        return to_text(self.node)

    def __repr__(self) -> str:
        return f"HoloFunction({self.to_text()!r}, arity={self.arity})"


def eval_with_gradient(f: HoloFunction, z) -> EvalResult:
    return f.eval_with_gradient(z)


# -------------------------------------------------------------------- self-maps


@dataclass(frozen=True, eq=False)
class SelfMap:
    components: tuple
    range_status: str = "Unverified"  # Verified | Unverified | ViolationWitness
    samples: int = 0
    witness: np.ndarray | None = field(default=None)

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ArityError("self-map needs at least one component")
        n = len(comps)
        for c in comps:
            if c.arity != n:
                raise ArityError(f"component arity {c.arity} != number of components {n}")
        if self.range_status not in ("Verified", "Unverified", "ViolationWitness"):
            raise ValueError(self.range_status)

    @classmethod
    def parse(cls, texts: Sequence[str]) -> "SelfMap":
        n = len(texts)
        return cls(tuple(parse_expr(t, n) for t in texts))

    @classmethod
    def identity(cls, n: int) -> "SelfMap":
        return cls(tuple(HoloFunction.variable(k + 1, n) for k in range(n)))

    @property
    def dim(self) -> int:
        return len(self.components)

    def evaluate_batch(self, Z: np.ndarray):
        """Image points (N, n) and a mask of points where every component is finite."""
        Z = np.asarray(Z, dtype=complex)
        W = np.empty_like(Z)
        ok = np.ones(Z.shape[0], dtype=bool)
        for k, c in enumerate(self.components):
            v, _, good = c.evaluate_batch(Z, want_grad=False)
            W[:, k] = v
            ok &= good
        return W, ok

    def __call__(self, z) -> np.ndarray:
        return np.array([c(z) for c in self.components])

    def texts(self) -> list[str]:
        return [c.to_text() for c in self.components]


def range_check(phi: SelfMap, domain: Domain, sample_count: int, seed: int) -> SelfMap:
    """Check φ(D) ⊂ D on a quasi-random interior sample plus boundary shells."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if phi.dim != domain.dim:
        raise ArityError(f"self-map has {phi.dim} components, domain dimension is {domain.dim}")
    n_in = max(1, sample_count - sample_count // 4)
    n_sh = sample_count - n_in
    levels = [1.0 - 2.0**-k for k in range(1, 21)]
    pts = sample_interior(domain, n_in, seed)
    if n_sh:
        pts = np.vstack([pts, sample_shells(domain, n_sh, seed, levels)])
    W, ok = phi.evaluate_batch(pts)
    if not ok.all():
        bad = int(np.argmin(ok))
        raise SingularityError(f"self-map is singular at {pts[bad].tolist()}", pts[bad])
    rad = domain.radius_batch(W)
    out = rad >= 1.0
    if out.any():
        first = int(np.argmax(out))
        return SelfMap(phi.components, "ViolationWitness", len(pts), pts[first].copy())
    return SelfMap(phi.components, "Verified", len(pts), None)


def require_self_map(phi: SelfMap) -> None:
    if phi.range_status == "ViolationWitness":
        raise SelfMapViolation(f"φ leaves the domain at {np.asarray(phi.witness).tolist()}")
