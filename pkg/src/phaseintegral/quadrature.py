"""Adaptive Gauss-Kronrod quadrature with cumulative evaluation.

The correction recurrences and the wave phase need indefinite integrals
anchored at a user-chosen point (integration constant 0 there).  The
:class:`CumulativeIntegral` memoizes partial sums so that repeated
evaluations along a sweep only integrate the new segment.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import QuadratureFailure

# 15-point Kronrod nodes (positive half) and weights, with the embedded
# 7-point Gauss rule for the error estimate.  QUADPACK dqk15 constants.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])


def _gk15(f, a: float, b: float):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = np.concatenate((mid - half * _XGK[:-1], [mid], mid + half * _XGK[-2::-1]))
    vals = np.array([f(t) for t in nodes], dtype=complex)
    # fold symmetric values: index 7 is the midpoint
    sym = vals[:7][::-1] + vals[8:]
    kron = half * (np.dot(_WGK[:7], sym[::-1]) + _WGK[7] * vals[7])
    gauss_syms = sym[::-1][1::2]          # Kronrod indices 1,3,5 folded
    gauss = half * (np.dot(_WG[:3], gauss_syms) + _WG[3] * vals[7])
    err = abs(kron - gauss)
    return kron, err


def quad(f: Callable[[float], complex], a: float, b: float,
         rtol: float = 1e-10, atol: float = 1e-14,
         max_depth: int = 24) -> complex:
    """Integral of f over [a, b] by adaptive bisection of GK15 panels."""
    if a == b:
        return 0.0 + 0.0j
    total, err0 = _gk15(f, a, b)
    stack = [(a, b, total, err0, 0)]
    result = 0.0 + 0.0j
    scale = abs(total)
    while stack:
        lo, hi, val, err, depth = stack.pop()
        if err <= max(atol, rtol * max(scale, abs(val))) or (hi - lo) == 0.0:
            result += val
            continue
        if depth >= max_depth:
            raise QuadratureFailure(
                f"quadrature did not converge on [{lo}, {hi}] (err={err:.3g})")
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        scale = max(scale, abs(v1 + v2))
        stack.append((lo, mid, v1, e1, depth + 1))
        stack.append((mid, hi, v2, e2, depth + 1))
    return result


class JetChainIntegral:
    """Cumulative integral of a function whose Taylor jets are available.

    Each panel [a, b] is integrated twice from the endpoint jets alone
    (antiderivative of the left jet forward, of the right jet backward);
    the mean is the two-point Obreshkov value and the difference an error
    estimate that triggers bisection.  Panel endpoints snap to a fixed
    ladder so that independent queries share evaluation points.
    """

    def __init__(self, f_jet_at: Callable[[float], "object"], anchor: float,
                 rtol: float = 1e-11, atol: float = 1e-14,
                 max_step: float = 0.0625, min_step: float = 1e-9):
        self.f_jet_at = f_jet_at
        self.anchor = float(anchor)
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.min_step = min_step
        self._known: dict[float, complex] = {self.anchor: 0.0 + 0.0j}
        self._keys: list[float] = [self.anchor]
        self._scale = 0.0

    def _panel(self, a: float, b: float, fa=None, fb=None, depth: int = 0) -> complex:
        if fa is None:
            fa = self.f_jet_at(a)
        if fb is None:
            fb = self.f_jet_at(b)
        h = b - a
        pa = np.arange(1, fa.coeffs.size + 1)
        fwd = complex(np.sum(fa.coeffs * (h ** pa) / pa))
        pb = np.arange(1, fb.coeffs.size + 1)
        bwd = -complex(np.sum(fb.coeffs * ((-h) ** pb) / pb))
        err = abs(fwd - bwd)
        val = 0.5 * (fwd + bwd)
        if err <= max(self.atol, self.rtol * max(self._scale, abs(val))):
            return val
        if abs(h) <= self.min_step:
            raise QuadratureFailure(
                f"jet-chain panel [{a}, {b}] did not converge (err={err:.3g})")
        mid = 0.5 * (a + b)
        return (self._panel(a, mid, fa, None, depth + 1)
                + self._panel(mid, b, None, fb, depth + 1))

    def value(self, x: float) -> complex:
        x = float(x)
        got = self._known.get(x)
        if got is not None:
            return got
        keys = np.asarray(self._keys)
        base = float(keys[np.argmin(np.abs(keys - x))])
        acc = self._known[base]
        sgn = 1.0 if x >= base else -1.0
        # march on the snapped ladder so endpoints are shared between queries
        pos = base
        while sgn * (x - pos) > self.max_step:
            j = round((pos - self.anchor) / self.max_step)
            nxt = self.anchor + (j + sgn) * self.max_step
            if sgn * (nxt - pos) <= 0:
                nxt = pos + sgn * self.max_step
            if sgn * (nxt - x) > 0:
                break
            acc = acc + self._panel(pos, nxt)
            self._known[nxt] = acc
            self._keys.append(nxt)
            self._scale = max(self._scale, abs(acc))
            pos = nxt
        if x != pos:
            acc = acc + self._panel(pos, x)
        self._known[x] = acc
        self._keys.append(x)
        self._scale = max(self._scale, abs(acc))
        return acc

    def __call__(self, x: float) -> complex:
        return self.value(x)


class CumulativeIntegral:
    """Indefinite integral of f with value 0 at the anchor.

    Evaluations are memoized; a new point integrates only from the nearest
    previously computed abscissa, so ordered sweeps cost one panel each.
    """

    def __init__(self, f: Callable[[float], complex], anchor: float,
                 rtol: float = 1e-10, atol: float = 1e-14):
        self.f = f
        self.anchor = float(anchor)
        self.rtol = rtol
        self.atol = atol
        self._known: dict[float, complex] = {self.anchor: 0.0 + 0.0j}
        self._keys: list[float] = [self.anchor]

    def value(self, x: float) -> complex:
        x = float(x)
        got = self._known.get(x)
        if got is not None:
            return got
        keys = np.asarray(self._keys)
        base = float(keys[np.argmin(np.abs(keys - x))])
        val = self._known[base] + quad(self.f, base, x,
                                       rtol=self.rtol, atol=self.atol)
        self._known[x] = val
        self._keys.append(x)
        return val

    def __call__(self, x: float) -> complex:
        return self.value(x)
