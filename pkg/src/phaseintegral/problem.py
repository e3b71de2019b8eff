"""Problem ingestion and reduction to the normal form u'' + R(x) u = 0.

Systems may arrive in "Schrodinger like" form with first-derivative terms
a_j(x) u_j'; those are removed by the exponential amplitude transform,
shifting the diagonal of the coefficient matrix.  The reduced matrix is
then split as

    R(x) = lambda**-2 G(x) + a(x) I

around a user-chosen auxiliary function a(x) and formal small parameter
lambda (default 1, retained for order-scaling studies).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EvaluationSingularity, SingularCoefficient
from .expressions import (
    Add, Const, Expression, Mul, Pow, Sub, Var,
    diff_expr, eval_expr, eval_expr_jet, parse_expr, to_string,
)
from .jets import Jet

__all__ = [
    "ProblemSpec", "ReducedProblem", "reduce_first_derivative", "split_R",
    "langer_auxiliary", "load_problem", "problem_to_dict",
]

_ZERO = Const(0.0)


@dataclass(frozen=True)
class ProblemSpec:
    """A coupled system, either already reduced or Schrodinger-like."""

    n: int
    form: str                         # "reduced" | "schrodinger_like"
    matrix: tuple                     # n x n tuple of Expression (R or R-bar)
    first_derivative: Optional[tuple] = None   # n expressions a_j(x)
    params: dict = field(default_factory=dict)
    domain: tuple = (0.0, 1.0)
    hermitian_hint: str = "general"   # real_symmetric | hermitian | general
    amplitude_transform: Optional[tuple] = None  # a_j used to reach reduced form

    def __post_init__(self):
        if self.form not in ("reduced", "schrodinger_like"):
            raise ValueError(f"unknown form {self.form!r}")
        if len(self.matrix) != self.n or any(len(r) != self.n for r in self.matrix):
            raise ValueError("matrix must be n x n")
        if (self.first_derivative is not None) != (self.form == "schrodinger_like"):
            raise ValueError("first_derivative present iff form is schrodinger_like")

    def matrix_value(self, x: float) -> np.ndarray:
        return np.array([[eval_expr(e, x, self.params) for e in row]
                         for row in self.matrix], dtype=complex)


@dataclass(frozen=True)
class ReducedProblem:
    """The split R = lambda**-2 G + a I defining one PIA computation."""

    n: int
    G: tuple                          # n x n tuple of Expression
    a: Expression
    lam: float
    params: dict = field(default_factory=dict)
    domain: tuple = (0.0, 1.0)
    hermitian_hint: str = "general"

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.hermitian_hint == "real_symmetric":
            self._check_symmetry()

    def _check_symmetry(self):
        lo, hi = self.domain
        for x in np.linspace(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo), 7):
            g = self.G_value(float(x))
            if np.max(np.abs(g - g.T)) > 1e-12 * (1.0 + np.max(np.abs(g))):
                raise ValueError(
                    f"hermitian_hint=real_symmetric but G asymmetric at x={x}")

    # -- evaluators -------------------------------------------------------

    def G_value(self, x: float) -> np.ndarray:
        return np.array([[eval_expr(e, x, self.params) for e in row]
                         for row in self.G], dtype=complex)

    def G_jet(self, x: float, order: int) -> list:
        return [[eval_expr_jet(e, x, order, self.params) for e in row]
                for row in self.G]

    def a_value(self, x: float) -> complex:
        return eval_expr(self.a, x, self.params)

    def a_jet(self, x: float, order: int) -> Jet:
        return eval_expr_jet(self.a, x, order, self.params)

    def R_value(self, x: float, lam: float | None = None) -> np.ndarray:
        """R = lambda**-2 G + a I, optionally at an overridden lambda."""
        lam = self.lam if lam is None else lam
        g = self.G_value(x)
        return g / lam**2 + self.a_value(x) * np.eye(self.n)

    def with_lambda(self, lam: float) -> "ReducedProblem":
        """Same G and a, rebound small parameter (R changes accordingly)."""
        return ReducedProblem(self.n, self.G, self.a, lam, self.params,
                              self.domain, self.hermitian_hint)


def reduce_first_derivative(spec: ProblemSpec,
                            pole_scan: int = 257) -> ProblemSpec:
    """Eliminate a_j(x) u_j' terms; returns an equivalent reduced spec.

    The new diagonal is R_jj = Rbar_jj - (a_j**2/2 + a_j')/2 and the
    amplitude transform exp((1/2) int a_j dx) is recorded so solutions of
    the reduced system can be mapped back.
    """
    if spec.form != "schrodinger_like":
        return spec
    lo, hi = spec.domain
    for a_j in spec.first_derivative:
        for x in np.linspace(lo, hi, pole_scan)[1:-1]:
            try:
                eval_expr(a_j, float(x), spec.params)
            except EvaluationSingularity as exc:
                raise SingularCoefficient(
                    f"first-derivative coefficient singular at x={x}") from exc
    rows = []
    for j, row in enumerate(spec.matrix):
        a_j = spec.first_derivative[j]
        # (1/2)*((1/2)*a^2 + a')
        shift = Mul(Const(0.5), Add(Mul(Const(0.5), Mul(a_j, a_j)),
                                    diff_expr(a_j)))
        new_row = list(row)
        new_row[j] = Sub(row[j], shift)
        rows.append(tuple(new_row))
    return ProblemSpec(spec.n, "reduced", tuple(rows), None, spec.params,
                       spec.domain, spec.hermitian_hint,
                       amplitude_transform=tuple(spec.first_derivative))


def split_R(spec: ProblemSpec, lam: float = 1.0,
            a: Expression | None = None) -> ReducedProblem:
    """Form G = lambda**2 (R - a I) so that R = lambda**-2 G + a I."""
    if spec.form != "reduced":
        raise ValueError("split_R needs a reduced spec; "
                         "call reduce_first_derivative first")
    a = a if a is not None else _ZERO
    lam2 = Const(lam * lam)
    rows = []
    for j, row in enumerate(spec.matrix):
        new_row = []
        for k, e in enumerate(row):
            entry = Sub(e, a) if j == k else e
            new_row.append(entry if lam == 1.0 else Mul(lam2, entry))
        rows.append(tuple(new_row))
    return ReducedProblem(spec.n, tuple(rows), a, lam, dict(spec.params),
                          spec.domain, spec.hermitian_hint)


def langer_auxiliary(c_a: float, d_a: Expression | None = None) -> Expression:
    """a(x) = c_a * x**-2 * (1 + d_a(x)).

    With c_a = 1/4 and d_a = 0 this shifts a second-order pole of strength
    l(l+1) to (l + 1/2)**2, the classic centrifugal modification.
    """
    if c_a == 0.0:
        return _ZERO
    core = Mul(Const(c_a), Pow(Var(), Const(-2.0)))
    if d_a is None or d_a == _ZERO:
        return core
    return Mul(core, Add(Const(1.0), d_a))


# --------------------------------------------------------------------------
# JSON problem files
# --------------------------------------------------------------------------

def problem_to_dict(spec: ProblemSpec, lam: float | None = None,
                    a: Expression | None = None) -> dict:
    out = {
        "n": spec.n,
        "form": spec.form,
        "R": [[to_string(e) for e in row] for row in spec.matrix],
        "params": {k: _num(v) for k, v in spec.params.items()},
        "domain": list(spec.domain),
        "hermitian_hint": spec.hermitian_hint,
    }
    if spec.first_derivative is not None:
        out["first_derivative"] = [to_string(e) for e in spec.first_derivative]
    if a is not None:
        out["a"] = to_string(a)
    if lam is not None:
        out["lambda"] = lam
    return out


def _num(v):
    v = complex(v)
    return v.real if v.imag == 0.0 else [v.real, v.imag]


def load_problem(source) -> tuple[ProblemSpec, float, Expression]:
    """Parse a problem dict/JSON text; returns (spec, lambda, a)."""
    data = json.loads(source) if isinstance(source, str) else dict(source)
    n = int(data["n"])
    form = data.get("form", "reduced")
    matrix = tuple(tuple(parse_expr(s) for s in row) for row in data["R"])
    first = data.get("first_derivative")
    if first is not None:
        first = tuple(parse_expr(s) for s in first)
    params = {}
    for k, v in data.get("params", {}).items():
        params[k] = complex(v[0], v[1]) if isinstance(v, list) else complex(v)
    domain = tuple(float(v) for v in data.get("domain", (0.0, 1.0)))
    hint = data.get("hermitian_hint", "general")
    spec = ProblemSpec(n, form, matrix, first, params, domain, hint)
    lam = float(data.get("lambda", 1.0))
    a = parse_expr(data["a"]) if "a" in data else _ZERO
    return spec, lam, a
