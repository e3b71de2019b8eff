"""Order-by-order phase integral corrections for coupled systems.

The ansatz u(x) = s(x) q(x)**-1/2 exp(i/lambda int q dx) with
q = +-Q(x) Y(x), Y = sum Y_m lambda**m, s = sum s_m lambda**m turns the
system u'' + (lambda**-2 G + a I) u = 0 into one relation per order m:

    Y_m s0 - (G - Q**2 I) . s_m / (2 Q**2) = b_m

where b_m collects products of lower-order corrections and their
derivatives with respect to the phase variable zeta (d zeta = Q dx).
The complement component of s_m follows from a linear solve; the
eigenvector-parallel coordinate is fixed by the variant:

  fulling_current       (e1, s_m) chosen so the generalized current is
                        conserved order by order; hermitian G, Kato gauge.
  wronskian_conserving  same with alternating signs, conserving the
                        generalized Wronskian of the u+/u- pair.
  simplified_hermitian  (e1, s_m) = 0; no integrations at all when d = 1.
  non_hermitian         (s0, s_m) = 0 with arbitrary eigenvector gauge;
                        works for any matrix, Y_1 generally nonzero.

Even-order corrections are invariant under Q -> -Q, odd orders flip sign;
closed-form comparisons are quoted in the upper sign convention
(Q = |Q| for positive eigenvalues, Q = -i |Q| for negative ones).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ApplicabilityWarning,
    CompatibilityViolation,
    CrossingPoint,
    GaugeNotFixed,
    InsufficientJetOrder,
    MinorSingular,
    NonPositiveYWarning,
    TurningPoint,
    TurningPointOnGrid,
    UnsupportedDegeneracy,
)
from .jets import Jet, jet_const, jet_exp, jet_pow, jet_sqrt
from .problem import ReducedProblem
from .quadrature import JetChainIntegral
from .scalar import Wave, WaveSample, scalar_corrections
from .spectral import BranchField

__all__ = [
    "VARIANTS", "CorrectionSet", "CorrectionEngine", "vector_corrections",
    "p_coefficients", "assemble_vector_wave",
]

VARIANTS = ("fulling_current", "wronskian_conserving",
            "simplified_hermitian", "non_hermitian")
_HERMITIAN_VARIANTS = ("fulling_current", "wronskian_conserving",
                       "simplified_hermitian")
_CONSERVING = ("fulling_current", "wronskian_conserving")


@dataclass
class CorrectionSet:
    """All corrections at one point, each carried as a jet."""

    x0: float
    m_max: int
    variant: str
    Qsq: Jet
    Q: Jet
    eps0: Jet
    Y: list                    # Y[m] jets; Y[0] = 1
    s: list                    # s[m], tuples of jets; s[0] = s0
    s_perp: list               # perpendicular parts (s_perp[0] = 0)
    c_perp: list               # N=2 multiplier jets (None otherwise / m=0)
    c_par: list                # (e1, s_m) jets; c_par[0] = None
    b: list                    # b[m] tuples of jets; b[0] = None

    @property
    def n(self) -> int:
        return len(self.s[0])

    def Y_values(self) -> list:
        return [j.value for j in self.Y]

    def c_perp_values(self) -> list:
        return [None if j is None else j.value for j in self.c_perp]

    def c_par_values(self) -> list:
        return [None if j is None else j.value for j in self.c_par]


# -- small vector-of-jets helpers -------------------------------------------

def _vzero(x: float, order: int, n: int) -> tuple:
    return tuple(jet_const(0.0, x, order) for _ in range(n))


def _vadd(a, b):
    return tuple(p + q for p, q in zip(a, b))


def _vsub(a, b):
    return tuple(p - q for p, q in zip(a, b))


def _vscale(s, v):
    return tuple(s * c for c in v)


def _vtrunc(v, k: int):
    return tuple(c.truncated(k) for c in v)


def _dot(a, b, k: int) -> Jet:
    """Hilbert scalar product (a, b) = sum conj(a_j) b_j as a jet."""
    acc = a[0].conj().truncated(k) * b[0].truncated(k)
    for p, q in zip(a[1:], b[1:]):
        acc = acc + p.conj().truncated(k) * q.truncated(k)
    return acc


def _imag(j: Jet) -> Jet:
    return (j - j.conj()) * complex(0.0, -0.5)


def _real(j: Jet) -> Jet:
    return (j + j.conj()) * 0.5


def _compositions(total: int, parts: int):
    """Ordered tuples of non-negative ints of length `parts` summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def _jet_solve(A: list, rhs: list) -> list:
    """Gaussian elimination with jet entries (partial pivoting by value)."""
    n = len(rhs)
    A = [row[:] for row in A]
    rhs = rhs[:]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(A[r][col].value))
        scale = max(abs(A[r][col].value) for r in range(col, n))
        if abs(A[piv][col].value) < 1e-13 * (1.0 + scale):
            raise MinorSingular("reduced non-hermitian system is singular")
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        for r in range(col + 1, n):
            f = A[r][col] / A[col][col]
            for c in range(col, n):
                A[r][c] = A[r][c] - f * A[col][c]
            rhs[r] = rhs[r] - f * rhs[col]
    out = [None] * n
    for r in range(n - 1, -1, -1):
        acc = rhs[r]
        for c in range(r + 1, n):
            acc = acc - A[r][c] * out[c]
        out[r] = acc / A[r][r]
    return out


class CorrectionEngine:
    """Evaluates the correction hierarchy of one branch at arbitrary x.

    Cumulative integrals (parallel coordinates, degenerate coordinates,
    wave phase) all take the value 0 at `anchor`.  Point data is memoized,
    so grids and quadrature nodes share work.

    Internally every order-m quantity is carried as a jet of order
    K - m with K = 2 m_max + 2; each recurrence level consumes at most
    two derivatives, leaving order >= 2 at the top for wave assembly.
    """

    def __init__(self, prob: ReducedProblem, branch: BranchField,
                 variant: str, m_max: int, anchor: float | None = None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if m_max < 0:
            raise ValueError("m_max must be >= 0")
        hint = prob.hermitian_hint
        if variant in _HERMITIAN_VARIANTS and hint not in (
                "real_symmetric", "hermitian"):
            raise GaugeNotFixed(
                f"{variant} requires a hermitian matrix (hint={hint!r})")
        if variant in _CONSERVING:
            kato_ok = branch.gauge == "kato" or (
                branch.gauge == "normalized" and hint == "real_symmetric")
            if not kato_ok:
                raise GaugeNotFixed(
                    f"{variant} requires the Kato gauge; got "
                    f"gauge={branch.gauge!r} with hint={hint!r}")
        self.prob = prob
        self.field = branch
        self.variant = variant
        self.m_max = int(m_max)
        self.anchor = float(anchor if anchor is not None else branch.anchor)
        self.K = 2 * self.m_max + 2
        if prob.n > 2 and self.K > 6:
            raise InsufficientJetOrder(
                "N > 2 eigen jets are capped at order 6; "
                f"m_max={m_max} needs order {self.K}")
        self.sgn = +1.0 if variant == "fulling_current" else -1.0
        self._points: dict[float, dict] = {}
        self._cpar_cum: dict[int, JetChainIntegral] = {}
        self._coord_cum: dict[tuple, JetChainIntegral] = {}
        self._deg_cache: dict[int, np.ndarray] = {}
        d = branch.degeneracy(self.anchor)
        self._scalar_route = (d == prob.n and prob.n > 1)
        if d > 1 and not self._scalar_route:
            if hint != "real_symmetric":
                raise UnsupportedDegeneracy(
                    "degenerate eigenvalues are only supported for real "
                    "symmetric matrices")
            if variant == "non_hermitian":
                raise UnsupportedDegeneracy(
                    "the non-hermitian theory requires a non-degenerate "
                    "eigenvalue")

    # ------------------------------------------------------------------
    # point construction
    # ------------------------------------------------------------------

    def at(self, x: float) -> CorrectionSet:
        pt = self._point(float(x), self.m_max)
        mm = self.m_max + 1
        return CorrectionSet(
            x0=float(x), m_max=self.m_max, variant=self.variant,
            Qsq=pt["Qsq"], Q=pt["Q"], eps0=pt["eps0"], Y=pt["Y"][:mm],
            s=pt["s"][:mm], s_perp=pt["s_perp"][:mm],
            c_perp=pt["c_perp"][:mm], c_par=pt["c_par"][:mm], b=pt["b"][:mm])

    def _point(self, x: float, m_upto: int) -> dict:
        """Point data with levels 0..m_upto fully assembled."""
        pt = self._points.get(x)
        if pt is None:
            pt = self._base_point(x)
            self._points[x] = pt
        while len(pt["s"]) - 1 < m_upto:
            m = len(pt["s"])
            self._stage(pt, m)
            self._finish_level(pt, m)
        return pt

    def _point_staged(self, x: float, m: int) -> dict:
        """Levels < m assembled; level m through Y_m (no parallel part)."""
        pt = self._point(x, m - 1)
        if len(pt["Y"]) - 1 < m:
            self._stage(pt, m)
        return pt

    def _base_point(self, x: float) -> dict:
        K = self.K
        fld = self.field
        Qsq = fld.qsq_jet(x, K)
        Q = fld.q_jet(x, K)
        eps0 = fld.eps0_jet(x, K - 2)
        n = self.prob.n
        d = fld.degeneracy(x)
        basis = None
        comp = ()
        if not self._scalar_route and n > 1 and d > 1:
            basis = self._deg_basis_jets(x, K, d)
            comp = self._deg_complement_jets(x, K, d)
            s0 = basis[0]
        else:
            s0 = fld.s0_jets(x, K)
            if not self._scalar_route and n == 2:
                comp = ((-s0[1].conj(), s0[0].conj()),)
            elif not self._scalar_route and n > 2:
                comp = fld.complement_jets(x, K)
        G = fld._g_jet(x, K) if n > 1 else None
        return {
            "x": x, "d": d,
            "Qsq": Qsq, "Q": Q, "eps0": eps0, "G": G,
            "norm0": _dot(s0, s0, K),
            "Y": [jet_const(1.0, x, K)], "s": [s0],
            "s_perp": [_vzero(x, K, n)], "c_perp": [None], "c_par": [None],
            "b": [None], "basis": basis, "comp": comp, "coords": [None],
        }

    def _stage(self, pt: dict, m: int):
        """Compute b_m, s_m_perp and Y_m (everything except P s_m)."""
        if self._scalar_route:
            return   # handled wholesale in _finish_level
        if len(pt["Y"]) - 1 >= m:
            return   # already staged by an integrand evaluation
        k = self.K - m
        b_m = self._compute_b(pt, m, k)
        pt["b"].append(b_m)
        s_perp, c_perp = self._solve_perp(pt, m, b_m, k)
        pt["s_perp"].append(s_perp)
        pt["c_perp"].append(c_perp)
        pt["Y"].append(self._compute_Y(pt, m, b_m, s_perp, k))

    def _finish_level(self, pt: dict, m: int):
        if self._scalar_route:
            self._scalar_level(pt, m)
            return
        k = self.K - m
        c_par = self._parallel_jet(pt, m, k)
        pt["c_par"].append(c_par)
        s_m = _vtrunc(pt["s_perp"][m], k)
        s_m = _vadd(s_m, _vscale(c_par, _vtrunc(pt["s"][0], k)))
        coords = None
        if pt["d"] > 1 and pt["basis"] is not None:
            coords = []
            for kk in range(1, pt["d"]):
                cj = self._degenerate_coord_jet(pt, m, kk, k)
                coords.append(cj)
                s_m = _vadd(s_m, _vscale(cj, _vtrunc(pt["basis"][kk], k)))
        pt["coords"].append(coords)
        pt["s"].append(s_m)

    def _scalar_level(self, pt: dict, m: int):
        # Full degeneration: G = Q^2 I, each component is the scalar problem
        # and every vector correction vanishes.
        x, n, k = pt["x"], self.prob.n, self.K - m
        if m % 2 == 1:
            pt["Y"].append(jet_const(0.0, x, k))
        else:
            sc = scalar_corrections(pt["eps0"], pt["Qsq"], m // 2)
            pt["Y"].append(sc.Y[m // 2].truncated(k))
        pt["b"].append(_vzero(x, k, n))
        pt["s_perp"].append(_vzero(x, k, n))
        pt["c_perp"].append(None)
        pt["c_par"].append(jet_const(0.0, x, k))
        pt["coords"].append(None)
        pt["s"].append(_vzero(x, k, n))

    # ------------------------------------------------------------------
    # b_m : driving vector of the order-m relation
    # ------------------------------------------------------------------

    def _dz(self, j: Jet, Q: Jet) -> Jet:
        """d/d zeta = Q**-1 d/dx (order drops by one)."""
        p = j.order - 1
        return j.diff() / Q.truncated(p)

    def _compute_b(self, pt: dict, m: int, k: int,
                   s_list: list | None = None) -> tuple:
        x, n = pt["x"], self.prob.n
        Q = pt["Q"]
        Y, b = pt["Y"], pt["b"]
        s = pt["s"] if s_list is None else s_list
        dz = self._dz
        Yt = [y.truncated(k) for y in Y]
        _yp_memo: dict = {}

        def yprod(total, count):
            got = _yp_memo.get((total, count))
            if got is not None:
                return got
            acc = jet_const(0.0, x, k)
            for combo in _compositions(total, count):
                term = Yt[combo[0]]
                for idx in combo[1:]:
                    term = term * Yt[idx]
                acc = acc + term
            _yp_memo[(total, count)] = acc
            return acc

        acc = _vzero(x, k, n)
        for sigma in range(1, m):
            coef = yprod(m - sigma, 2)
            inner = _vadd(_vtrunc(s[sigma], k),
                          _vscale(2.0 * Y[sigma].truncated(k),
                                  _vtrunc(s[0], k)))
            inner = _vsub(inner, _vscale(jet_const(2.0, x, k),
                                         _vtrunc(b[sigma], k)))
            acc = _vadd(acc, _vscale(coef, inner))
            acc = _vsub(acc, _vscale(yprod(m - sigma, 4), _vtrunc(s[sigma], k)))
        c2 = jet_const(0.0, x, k)
        for combo in _compositions(m, 2):
            if max(combo) < m:
                c2 = c2 + Yt[combo[0]] * Yt[combo[1]]
        c4 = jet_const(0.0, x, k)
        for combo in _compositions(m, 4):
            if max(combo) < m:
                term = Yt[combo[0]]
                for idx in combo[1:]:
                    term = term * Yt[idx]
                c4 = c4 + term
        acc = _vadd(acc, _vscale(c2 - c4, _vtrunc(s[0], k)))
        dzs_cache: dict = {}

        def dzs(sigma):
            got = dzs_cache.get(sigma)
            if got is None:
                got = tuple(dz(c, Q).truncated(k) for c in s[sigma])
                dzs_cache[sigma] = got
            return got

        dzy_cache: dict = {}

        def dzy(a):
            got = dzy_cache.get(a)
            if got is None:
                got = dz(Y[a], Q).truncated(k)
                dzy_cache[a] = got
            return got

        # i-term: first zeta derivatives
        for sigma in range(0, m):
            coef3 = yprod(m - 1 - sigma, 3)
            acc = _vadd(acc, _vscale(2.0j * coef3, dzs(sigma)))
        # lambda^2 block: second zeta derivatives (absent for m = 1)
        for sigma in range(0, m - 1):
            rem = m - 2 - sigma
            pair = yprod(rem, 2)
            ddsv = tuple(dz(dz(c, Q), Q).truncated(k) for c in s[sigma])
            acc = _vadd(acc, _vscale(pair, ddsv))
            for a in range(rem + 1):
                bi = rem - a
                if bi >= 1:
                    acc = _vsub(acc, _vscale(Yt[a] * dzy(bi), dzs(sigma)))
            scal = pt["eps0"].truncated(k) * pair
            for a in range(rem + 1):
                bi = rem - a
                if a >= 1 and bi >= 1:
                    scal = scal + 0.75 * (dzy(a) * dzy(bi))
                if bi >= 1:
                    scal = scal - 0.5 * (Yt[a]
                                         * dz(dz(Y[bi], Q), Q).truncated(k))
            acc = _vadd(acc, _vscale(scal, _vtrunc(s[sigma], k)))
        return _vscale(jet_const(0.5, x, k), acc)

    def _compute_b_tilde(self, pt: dict, m_next: int, k: int) -> tuple:
        """b~_{m+1}: the part of b_{m+1} independent of s_m.

        Valid in the Kato gauge where Y_1 = 0 (only the i s_m'(zeta) term
        couples to s_m there).
        """
        masked = list(pt["s"])
        zero = _vzero(pt["x"], self.K, self.prob.n)
        if len(masked) > m_next - 1:
            masked[m_next - 1] = zero
        else:
            masked.append(zero)     # s_m not assembled yet: b~ excludes it
        return self._compute_b(pt, m_next, k, s_list=masked)

    # ------------------------------------------------------------------
    # complement solve
    # ------------------------------------------------------------------

    def _solve_perp(self, pt: dict, m: int, b_m: tuple, k: int):
        n = self.prob.n
        x = pt["x"]
        if n == 1:
            return _vzero(x, k, n), None
        Qsq = pt["Qsq"].truncated(k)
        if n == 2 and pt["d"] == 1:
            s0 = pt["s"][0]
            sperp = pt["comp"][0]
            G = pt["G"]
            t = lambda j: j.truncated(k)
            D = (t(s0[0].conj()) * t(s0[0]) * t(G[1][1])
                 + t(s0[1].conj()) * t(s0[1]) * t(G[0][0])
                 - t(pt["norm0"]) * Qsq
                 - (t(s0[0].conj()) * t(s0[1]) * t(G[0][1])
                    + t(s0[0]) * t(s0[1].conj()) * t(G[1][0])))
            gmax = max(abs(G[i][j].value) for i in range(2) for j in range(2))
            if abs(D.value) < 1e-10 * (1.0 + gmax * gmax):
                raise CrossingPoint(
                    f"complement solve singular (crossing) at x = {x}")
            c_perp = (-2.0 * Qsq * _dot(sperp, b_m, k)) / D
            return _vscale(c_perp, _vtrunc(sperp, k)), c_perp
        if self.variant == "non_hermitian":
            return self._solve_perp_nonhermitian(pt, b_m, k)
        return self._solve_perp_complement(pt, b_m, k)

    def _solve_perp_complement(self, pt: dict, b_m: tuple, k: int):
        # hermitian path; complement vectors are sibling eigenvectors, so
        # the projected matrix is diagonal with entries Q_j^2 - Q^2.
        x, n = pt["x"], self.prob.n
        Qsq = pt["Qsq"].truncated(k)
        gnorm = 1.0 + float(np.sum(np.abs(
            np.array([[g.value for g in row] for row in pt["G"]])) ** 2))
        out = _vzero(x, k, n)
        for vec in pt["comp"]:
            sib_qsq = self._rayleigh(pt, vec, k)
            denom = sib_qsq - Qsq
            if abs(denom.value) ** 2 < 1e-8 * gnorm:
                raise CrossingPoint(f"complement solve singular at x = {x}")
            coord = (-2.0 * Qsq * _dot(vec, b_m, k)) / denom
            out = _vadd(out, _vscale(coord, _vtrunc(vec, k)))
        return out, None

    def _rayleigh(self, pt: dict, vec: tuple, k: int) -> Jet:
        G = pt["G"]
        n = self.prob.n
        gv = []
        for i in range(n):
            acc = G[i][0].truncated(k) * vec[0].truncated(k)
            for j in range(1, n):
                acc = acc + G[i][j].truncated(k) * vec[j].truncated(k)
            gv.append(acc)
        return _dot(vec, tuple(gv), k) / _dot(vec, vec, k)

    def _solve_perp_nonhermitian(self, pt: dict, b_m: tuple, k: int):
        # reduced solve in coordinates 2..N, factored to stay finite as
        # the first eigenvector component goes to zero
        x, n = pt["x"], self.prob.n
        G = pt["G"]
        s0 = pt["s"][0]
        Qsq = pt["Qsq"].truncated(k)
        s01 = s0[0].truncated(k)
        s0bar = [c.truncated(k) for c in s0[1:]]
        bbar = [c.truncated(k) for c in b_m[1:]]
        nm1 = n - 1
        norm01 = s01.conj() * s01
        A = [[None] * nm1 for _ in range(nm1)]
        for j in range(nm1):
            for c in range(nm1):
                entry = norm01 * G[j + 1][c + 1].truncated(k)
                if j == c:
                    entry = entry - norm01 * Qsq
                entry = entry + (G[0][0].truncated(k) - Qsq) \
                    * (s0bar[j] * s0bar[c].conj())
                entry = entry - s01.conj() * s0bar[j] * G[0][c + 1].truncated(k)
                entry = entry - s01 * G[j + 1][0].truncated(k) * s0bar[c].conj()
                A[j][c] = entry
        rhs = [2.0 * Qsq * (b_m[0].truncated(k) * s0bar[j] - s01 * bbar[j])
               for j in range(nm1)]
        tbar = _jet_solve(A, rhs)
        sbar = [s01.conj() * t for t in tbar]
        sm1 = jet_const(0.0, x, k)
        for j in range(nm1):
            sm1 = sm1 - s0bar[j].conj() * tbar[j]
        return tuple([sm1] + sbar), None

    # ------------------------------------------------------------------
    # Y_m and the parallel coordinate
    # ------------------------------------------------------------------

    def _compute_Y(self, pt: dict, m: int, b_m: tuple, s_perp: tuple,
                   k: int) -> Jet:
        # Projection of the order-m relation on s0.  The G-term vanishes
        # identically for hermitian G; it carries the non-hermitian part.
        s0 = pt["s"][0]
        n = self.prob.n
        acc = _dot(s0, b_m, k)
        if n > 1:
            G = pt["G"]
            gs = []
            for i in range(n):
                row = G[i][0].truncated(k) * s_perp[0].truncated(k)
                for j in range(1, n):
                    row = row + G[i][j].truncated(k) * s_perp[j].truncated(k)
                gs.append(row)
            acc = acc + 0.5 * (_dot(s0, tuple(gs), k) / pt["Qsq"].truncated(k))
        return acc / pt["norm0"].truncated(k)

    def _parallel_jet(self, pt: dict, m: int, k: int) -> Jet:
        x = pt["x"]
        if self.variant not in _CONSERVING:
            return jet_const(0.0, x, k)
        cum = self._cpar_cum.get(m)
        if cum is None:
            kf = max(self.K - m - 1, 0)
            cum = JetChainIntegral(
                lambda t, mm=m, kk=kf: self._cpar_f_jet(
                    self._point_staged(t, mm), mm, kk),
                self.anchor)
            self._cpar_cum[m] = cum
        f_jet = self._cpar_f_jet(pt, m, max(k - 1, 0))
        integral = f_jet.antiderivative(cum.value(x)).truncated(k)
        return integral + self._cpar_boundary(pt, m, k)

    def _cpar_f_jet(self, pt: dict, m: int, k: int) -> Jet:
        """Integrand of the conserving-coordinate integral, as a jet."""
        sgn = self.sgn
        e1 = pt["s"][0]
        e1p = tuple(c.diff().truncated(k) for c in e1)
        sperp = _vtrunc(pt["s_perp"][m], k)
        s = pt["s"]
        inner = _dot(e1p, sperp, k)
        if m % 2 == 0:
            nn = m // 2
            snp = tuple(c.diff().truncated(k) for c in s[nn])
            inner = inner - (sgn ** nn) * 0.5 * _dot(_vtrunc(s[nn], k), snp, k)
            for a in range(1, nn):
                sap = tuple(c.diff().truncated(k) for c in s[a])
                inner = inner - (sgn ** a) * _dot(_vtrunc(s[m - a], k), sap, k)
            return 2.0j * _imag(inner)
        nn = (m - 1) // 2
        for a in range(1, nn + 1):
            sap = tuple(c.diff().truncated(k) for c in s[a])
            inner = inner + (sgn ** a) * _dot(sap, _vtrunc(s[m - a], k), k)
        if self.variant == "fulling_current":
            return 2.0j * _imag(inner)
        return 2.0 * _real(inner)

    def _cpar_boundary(self, pt: dict, m: int, k: int) -> Jet:
        sgn = self.sgn
        s = pt["s"]
        out = jet_const(0.0, pt["x"], k)
        if m % 2 == 0:
            nn = m // 2
            out = out - (sgn ** nn) * 0.5 * _dot(_vtrunc(s[nn], k),
                                                 _vtrunc(s[nn], k), k)
            rng = range(1, nn)
        else:
            nn = (m - 1) // 2
            rng = range(1, nn + 1)
        for a in rng:
            out = out - (sgn ** a) * _dot(_vtrunc(s[a], k),
                                          _vtrunc(s[m - a], k), k)
        return out

    # ------------------------------------------------------------------
    # degenerate subspace machinery (real hermitian, 1 < d < N)
    # ------------------------------------------------------------------

    _DEG_STEP = 0.05

    def _deg_subspace(self, x: float, d: int) -> np.ndarray:
        g = self.prob.G_value(x).real
        vals, vecs = np.linalg.eigh(g)
        target = self.field.qsq_value(x).real
        tol = np.sqrt(1e-8 * (1.0 + float(np.sum(g * g))))
        idx = [i for i, v in enumerate(vals) if abs(v - target) <= tol]
        if len(idx) != d:
            raise CrossingPoint(f"degeneracy changes near x = {x}")
        return vecs[:, idx]

    def _deg_vectors(self, x: float, d: int) -> np.ndarray:
        """Continued orthonormal eigenspace basis (values only)."""
        sub = self._deg_subspace(x, d)
        ref = self._deg_ref(x, d)
        proj = sub @ (sub.T @ ref)
        q, r = np.linalg.qr(proj)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        return q * signs

    def _deg_ref(self, x: float, d: int) -> np.ndarray:
        step = self._DEG_STEP
        k = int(abs(x - self.anchor) / step)
        sgn = 1.0 if x >= self.anchor else -1.0
        if 0 not in self._deg_cache:
            self._deg_cache[0] = self._deg_subspace(self.anchor, d)
        have = max((abs(j) for j in self._deg_cache
                    if j == 0 or (j > 0) == (sgn > 0)), default=0)
        for j in range(have + 1, k + 1):
            t = self.anchor + sgn * j * step
            sub = self._deg_subspace(t, d)
            ref = self._deg_cache[int((j - 1) * sgn)]
            proj = sub @ (sub.T @ ref)
            q, r = np.linalg.qr(proj)
            signs = np.sign(np.diag(r))
            signs[signs == 0] = 1.0
            self._deg_cache[int(j * sgn)] = q * signs
        return self._deg_cache[int(k * sgn)]

    def _deg_basis_jets(self, x: float, order: int, d: int) -> tuple:
        h = 1e-3 * (1.0 + abs(x))
        ref = self._deg_vectors(x, d)
        n = self.prob.n

        def basis_at(t):
            sub = self._deg_subspace(t, d)
            proj = sub @ (sub.T @ ref)
            q, r = np.linalg.qr(proj)
            signs = np.sign(np.diag(r))
            signs[signs == 0] = 1.0
            return q * signs

        pts = 2 * order + 1
        offs = np.arange(pts) - order
        samples = np.array([basis_at(x + j * h) for j in offs])
        v = np.vander(offs.astype(float), pts, increasing=True)
        coef = np.linalg.solve(v, samples.reshape(pts, -1))
        scale = h ** np.arange(pts)
        coef = (coef / scale[:, None]).reshape(pts, n, d)
        return tuple(tuple(Jet(x, coef[: order + 1, row, col])
                           for row in range(n)) for col in range(d))

    def _deg_complement_jets(self, x: float, order: int, d: int) -> tuple:
        vecs = []
        gnorm = 1.0 + float(np.sum(np.abs(self.prob.G_value(x)) ** 2))
        sibs = getattr(self, "_deg_sibs", None)
        if sibs is None:
            sibs = {r: BranchField(self.prob, r, "normalized", None,
                                   self.anchor, self.field.q_sign)
                    for r in range(self.prob.n)}
            self._deg_sibs = sibs
        for r in range(self.prob.n):
            sib = sibs[r]
            if abs(sib.qsq_value(x) - self.field.qsq_value(x)) ** 2 \
                    < 1e-8 * gnorm:
                continue
            vecs.append(sib.s0_jets(x, order))
        if len(vecs) != self.prob.n - d:
            raise CrossingPoint(f"could not build a clean complement at x = {x}")
        return tuple(vecs)

    def _degenerate_coord_jet(self, pt: dict, m: int, kk: int, k: int) -> Jet:
        cum = self._coord_cum.get((m, kk))
        if cum is None:
            kf = max(self.K - m - 1, 0)
            # these coordinates feed a 1e-6 compatibility check; a looser
            # tolerance keeps the low-order panels from over-bisecting
            cum = JetChainIntegral(
                lambda t, mm=m, kkk=kk, ko=kf: self._coord_f_jet(
                    self._point_staged(t, mm), mm, kkk, ko),
                self.anchor, rtol=1e-9, atol=1e-12)
            self._coord_cum[(m, kk)] = cum
        f_jet = self._coord_f_jet(pt, m, kk, max(k - 1, 0))
        return f_jet.antiderivative(cum.value(pt["x"])).truncated(k)

    def _coord_f_jet(self, pt: dict, m: int, kk: int, k: int) -> Jet:
        """(e_k, i Q b~_{m+1} - d/dx s_m_perp), the Kato-coordinate integrand."""
        e_k = pt["basis"][kk]
        btilde = self._compute_b_tilde(pt, m + 1, k)
        Q = pt["Q"].truncated(k)
        sperp_p = tuple(c.diff().truncated(k) for c in pt["s_perp"][m])
        inner = _vsub(_vscale(1.0j * Q, _vtrunc(btilde, k)), sperp_p)
        return _dot(_vtrunc(e_k, k), inner, k)

    def compatibility_residual(self, x: float, m: int) -> float:
        """Residual of the order-(m+1) constraint for k > 1 (d > 1 only)."""
        pt = self._point(float(x), m)
        if pt["d"] <= 1 or pt["basis"] is None:
            return 0.0
        btilde = self._compute_b_tilde(pt, m + 1, 0)
        Q = pt["Q"].truncated(0)
        worst = 0.0
        for kk in range(1, pt["d"]):
            e_k = pt["basis"][kk]
            smp = tuple(c.diff().truncated(0) for c in pt["s"][m])
            lhs = _dot(_vtrunc(e_k, 0), smp, 0).value
            rhs = (1.0j * Q * _dot(_vtrunc(e_k, 0), _vtrunc(btilde, 0), 0)).value
            worst = max(worst, abs(lhs - rhs))
        return worst

    # ------------------------------------------------------------------
    # applicability monitor
    # ------------------------------------------------------------------

    def applicability_warnings(self, corr: CorrectionSet, lam: float) -> list:
        msgs = []
        for m in range(1, corr.m_max + 1):
            for tag, jet in (("Y", corr.Y[m]), ("c_perp", corr.c_perp[m]),
                             ("c_par", corr.c_par[m])):
                if jet is None:
                    continue
                size = abs(jet.value) * lam ** m
                if size >= 1.0:
                    msgs.append(f"order {m}: |{tag}_{m}| lambda^{m} = "
                                f"{size:.3g} >= 1")
        for msg in msgs:
            warnings.warn(msg, ApplicabilityWarning, stacklevel=3)
        return msgs


# --------------------------------------------------------------------------
# spec-level operations
# --------------------------------------------------------------------------

def vector_corrections(prob: ReducedProblem, branch: BranchField,
                       variant: str, m_max: int, anchor: float,
                       x0: float) -> CorrectionSet:
    """Full correction set of one branch at x0 (with degeneracy self-check)."""
    engine = CorrectionEngine(prob, branch, variant, m_max, anchor)
    corr = engine.at(x0)
    if variant in _HERMITIAN_VARIANTS and m_max >= 1 \
            and branch.degeneracy(x0) > 1 and not engine._scalar_route:
        res = engine.compatibility_residual(x0, m_max)
        if res > 1e-6:
            raise CompatibilityViolation(
                f"order-(m+1) compatibility residual {res:.3g} at x={x0}")
    return corr


def p_coefficients(corr: CorrectionSet, Qsq: Jet | None = None) -> list:
    """p_m = Q^2 sum_{a<=m} Y_a Y_{m-a} (momentum-squared expansion)."""
    qsq = (Qsq if Qsq is not None else corr.Qsq).value
    Y = corr.Y_values()
    return [qsq * sum(Y[a] * Y[m - a] for a in range(m + 1))
            for m in range(len(Y))]


def assemble_vector_wave(engine: CorrectionEngine, sign: int,
                         grid: Sequence[float], anchor: float | None = None,
                         lam: float | None = None, jet_order: int = 2) -> Wave:
    """The pair member u(+-) sampled on a grid, with an exact jet evaluator.

    Real normal forms are used when Q**2 is real (oscillatory for
    Q**2 > 0, real exponential for Q**2 < 0); otherwise the general
    complex form.  Derivative samples come from the same jets as the
    values, never from finite differences.
    """
    lam = engine.prob.lam if lam is None else float(lam)
    anchor = engine.anchor if anchor is None else float(anchor)
    grid = [float(x) for x in grid]
    sign = +1 if sign >= 0 else -1
    m_max = engine.m_max

    qsq0 = engine.field.qsq_value(grid[0])
    real_case = abs(qsq0.imag) <= 1e-10 * abs(qsq0)
    positive = real_case and qsq0.real > 0
    warned_y: list = []
    kq = engine.K - m_max

    def qbar_jet(t: float) -> Jet:
        # staged data is enough here: Y_m never needs the parallel part
        try:
            pt = engine._point_staged(t, m_max) if m_max \
                else engine._point(t, 0)
        except TurningPoint as exc:
            raise TurningPointOnGrid(
                f"turning point reached near x = {t}") from exc
        y = jet_const(0.0, t, kq)
        for m in range(m_max + 1):
            y = y + (sign * lam) ** m * pt["Y"][m].truncated(kq)
        qsq = pt["Qsq"].truncated(kq)
        if real_case:
            if (qsq.value.real > 0) != positive:
                raise TurningPointOnGrid(f"Q**2 changes sign at x = {t}")
            if y.value.real <= 0.0 and not warned_y:
                warned_y.append(t)
                warnings.warn(
                    f"Re Y{'+' if sign > 0 else '-'} <= 0 at x = {t}",
                    NonPositiveYWarning, stacklevel=2)
            absq = jet_sqrt(qsq) if positive else jet_sqrt(-qsq)
            return (absq * y) * (1.0 / lam)
        return (float(sign) * pt["Q"].truncated(kq) * y) * (1.0 / lam)

    cum = JetChainIntegral(qbar_jet, anchor)

    def jets_at(x: float):
        pt = engine._point(x, m_max)
        k = min(engine.K - m_max, max(jet_order, 2))
        y = jet_const(0.0, x, k)
        for m in range(m_max + 1):
            y = y + (sign * lam) ** m * pt["Y"][m].truncated(k)
        svec = _vzero(x, k, engine.prob.n)
        for m in range(m_max + 1):
            svec = _vadd(svec, _vscale(jet_const((sign * lam) ** m, x, k),
                                       _vtrunc(pt["s"][m], k)))
        phase0 = cum.value(x)
        if real_case:
            qsq = pt["Qsq"].truncated(k)
            absq = jet_sqrt(qsq) if positive else jet_sqrt(-qsq)
            qbar = absq * y
            phi = (qbar * (1.0 / lam)).antiderivative(phase0).truncated(k)
            osc = jet_exp((1j if positive else 1.0) * sign * phi)
            amp = jet_pow(qbar, -0.5)
            u = tuple(c * amp * osc for c in svec)
            ph = complex(sign) * (phase0 if positive else -1j * phase0)
            return u, ph
        qs = float(sign) * pt["Q"].truncated(k) * y
        phi = (qs * (1.0 / lam)).antiderivative(phase0).truncated(k)
        u = tuple(c * jet_pow(qs, -0.5) * jet_exp(1j * phi) for c in svec)
        return u, phase0

    samples = []
    for x in grid:
        u, ph = jets_at(x)
        samples.append(WaveSample(x, np.array([c.value for c in u]),
                                  np.array([c.derivative(1) for c in u]), ph))
    return Wave(samples, lambda x: jets_at(x)[0], lam, sign)
