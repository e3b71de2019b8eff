"""Scalar phase integral machinery.

The corrections Y_2n multiply the base momentum Q = sqrt(Q**2) so that the
truncated

    q(x) = +/- Q(x) * sum_{n<=N} Y_2n(x) lambda**(2n)

inserted into u = q**(-1/2) exp(i/lambda int q dx) solves u'' + R u = 0
through order lambda**(2N).  Only even orders exist here; everything is a
polynomial in eps0 and its derivatives.  Derivatives with respect to the
phase variable zeta (d zeta = Q dx) are rewritten in x immediately:

    A'(zeta) B'(zeta) = A'(x) B'(x) / Q^2
    B''(zeta)         = [B''(x) - (Q^2)'(x) B'(x) / (2 Q^2)] / Q^2

which keeps every quantity single valued (only Q**2 enters).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BranchPointEvaluation,
    InsufficientJetOrder,
    ModelSingularity,
    TurningPoint,
    TurningPointOnGrid,
)
from .expressions import Expression, eval_expr_jet
from .jets import Jet, jet_const, jet_exp, jet_pow, jet_sqrt
from .quadrature import JetChainIntegral

__all__ = [
    "ScalarCorrections", "WaveSample", "Wave", "scalar_corrections",
    "truncate_q", "assemble_scalar_wave", "model_epsilon00",
]


@dataclass
class ScalarCorrections:
    """Even-order corrections; Y[n] is the jet of Y_{2n} (Y[0] = 1)."""

    eps0: Jet
    Qsq: Jet
    Y: list

    @property
    def n_max(self) -> int:
        return len(self.Y) - 1


@dataclass
class WaveSample:
    x: float
    u: np.ndarray          # complex, one entry per component
    u_prime: np.ndarray
    phase: complex         # running integral lambda**-1 int q dx from anchor


@dataclass
class Wave:
    """Sampled approximation plus its analytic jet evaluator.

    `jet_at(x)` returns per-component jets of order >= 2, so residual
    checks can use exact second derivatives instead of finite differences.
    """

    samples: list
    jet_at: Callable[[float], tuple]
    lam: float
    sign: int

    def __iter__(self):
        return iter(self.samples)


def _dz_pair(a: Jet, b: Jet, qsq: Jet, order: int) -> Jet:
    """A'(zeta) B'(zeta) rewritten through x-derivatives."""
    return (a.diff().truncated(order) * b.diff().truncated(order)) \
        / qsq.truncated(order)


def _dz_second(b: Jet, qsq: Jet, order: int) -> Jet:
    """B''(zeta) rewritten through x-derivatives."""
    q2 = qsq.truncated(order)
    bp = b.diff().truncated(order)
    bpp = b.diff().diff().truncated(order)
    corr = (qsq.diff().truncated(order) * bp) / (2.0 * q2)
    return (bpp - corr) / q2


def scalar_corrections(eps0: Jet, Qsq: Jet, n_max: int) -> ScalarCorrections:
    """Y_{2n} for n = 0..n_max from the explicit recurrence."""
    if eps0.order < 2 * n_max:
        raise InsufficientJetOrder(
            f"eps0 jet order {eps0.order} < {2 * n_max} needed for n_max={n_max}")
    x0 = eps0.center
    Y = [jet_const(1.0, x0, eps0.order)]
    for n in range(1, n_max + 1):
        k = eps0.order - 2 * (n - 1)
        pair = jet_const(0.0, x0, k)
        for a in range(1, n):          # alpha, beta <= n-1, alpha + beta = n
            pair = pair + Y[a].truncated(k) * Y[n - a].truncated(k)
        quad = jet_const(0.0, x0, k)
        for a in range(0, n + 1):
            for b in range(0, n + 1 - a):
                for c in range(0, n + 1 - a - b):
                    d = n - a - b - c
                    if max(a, b, c, d) >= n:
                        continue
                    quad = quad + (Y[a].truncated(k) * Y[b].truncated(k)
                                   * Y[c].truncated(k) * Y[d].truncated(k))
        low = jet_const(0.0, x0, k)
        for a in range(0, n):
            b = n - 1 - a
            term = eps0.truncated(k) * (Y[a].truncated(k) * Y[b].truncated(k))
            if a >= 1 and b >= 1:               # Y_0' vanishes identically
                term = term + 0.75 * _dz_pair(Y[a], Y[b], Qsq, k)
            if b >= 1:
                term = term - 0.5 * (Y[a].truncated(k)
                                     * _dz_second(Y[b], Qsq, k))
            low = low + term
        Y.append(0.5 * (pair - quad + low))
    return ScalarCorrections(eps0, Qsq, Y)


def _q_upper(qsq: Jet) -> Jet:
    """Q in the standard convention: +|Q| if Q^2 > 0, -i|Q| if Q^2 < 0."""
    scale = 1.0 + float(np.max(np.abs(qsq.coeffs)))
    if abs(qsq.value) < 1e-13 * scale:
        raise TurningPoint(f"q**2 vanishes at x = {qsq.center}")
    v = qsq.value
    if abs(v.imag) <= 1e-12 * abs(v):
        return jet_sqrt(qsq) if v.real > 0 else -1j * jet_sqrt(-qsq)
    return jet_sqrt(qsq)


def truncate_q(Qsq: Jet, corr: ScalarCorrections, lam: float,
               n_trunc: int, sign: int = +1) -> Jet:
    """q = sign * Q * sum_{n<=n_trunc} Y_2n lambda**(2n)."""
    if n_trunc > corr.n_max:
        raise InsufficientJetOrder(
            f"requested truncation {n_trunc} beyond computed {corr.n_max}")
    k = corr.Y[n_trunc].order if n_trunc else min(Qsq.order, corr.Y[0].order)
    total = jet_const(0.0, Qsq.center, k)
    for n in range(n_trunc + 1):
        total = total + (lam ** (2 * n)) * corr.Y[n].truncated(k)
    q = _q_upper(Qsq.truncated(k))
    return float(sign) * (q * total)


def assemble_scalar_wave(q_of: Callable[[float, int], Jet], sign: int,
                         grid: Sequence[float], anchor: float,
                         lam: float = 1.0, jet_order: int = 2) -> Wave:
    """Phase integral wave u = q**(-1/2) exp(i/lambda int q dx).

    `q_of(x, order)` must return the upper-sign q jet; `sign` selects the
    u+ / u- member.  For real q**2 the two standard normal forms are used
    (oscillatory when q**2 > 0, real growing/decaying when q**2 < 0), so
    the exact invariants sigma = +-1/lambda and W = -2i/lambda (or -2/lambda)
    hold.
    """
    grid = [float(x) for x in grid]
    probe = q_of(grid[0], 0).value
    qsq0 = probe * probe
    real_case = abs(qsq0.imag) <= 1e-10 * abs(qsq0)
    positive = real_case and (probe.real ** 2 - probe.imag ** 2) > 0

    if real_case:
        def qbar_jet(t):
            try:
                q = q_of(t, 4)
            except (TurningPoint, BranchPointEvaluation) as exc:
                raise TurningPointOnGrid(
                    f"turning point reached near x = {t}") from exc
            b = q if positive else 1j * q     # strip the -i of the lower case
            v = b.value
            if abs(v.imag) > 1e-8 * (1.0 + abs(v)) or v.real <= 0.0:
                raise TurningPointOnGrid(
                    f"q**2 changes character at x = {t}")
            return b * (1.0 / lam)
        cum = JetChainIntegral(qbar_jet, anchor)

        def jets_at(x: float):
            q = q_of(x, jet_order)
            qbar = q if positive else 1j * q
            phase = cum.value(x)
            phi = (qbar * (1.0 / lam)).antiderivative(phase).truncated(qbar.order)
            osc = jet_exp((1j if positive else 1.0) * sign * phi)
            u = jet_pow(qbar, -0.5) * osc
            ph = phase if positive else -1j * phase   # lambda^-1 int q_sign
            return (u,), complex(sign) * ph
    else:
        cum = JetChainIntegral(lambda t: (float(sign) / lam) * q_of(t, 4),
                               anchor)

        def jets_at(x: float):
            qs = float(sign) * q_of(x, jet_order)
            phase = cum.value(x)
            phi = (qs * (1.0 / lam)).antiderivative(phase).truncated(qs.order)
            u = jet_pow(qs, -0.5) * jet_exp(1j * phi)
            return (u,), phase

    samples = []
    for x in grid:
        (u,), ph = jets_at(x)
        samples.append(WaveSample(x, np.array([u.value]),
                                  np.array([u.derivative(1)]), ph))
    return Wave(samples, lambda x: jets_at(x)[0], lam, sign)


def model_epsilon00(model: tuple, d: Expression | None, x0: float,
                    params=None) -> complex:
    """Local eps0 (with a = 0) predicted by a singularity model of Q**2.

    model is one of
        ("power", m, c)      Q_M^2 = c x^m
        ("exp_pole", eta, c) Q_M^2 = c x^-4 exp(eta/x)
        ("exp_flat", eta, c) Q_M^2 = c exp(eta/x)
        ("bounded", c0)      Q_0^2 = x^-2 (c0 + d(x))
    and d(x) the correcting function (Q^2 = Q_M^2 (1 + d)).
    """
    if x0 == 0.0:
        raise ModelSingularity("model evaluation at the reference point x = 0")
    if d is None:
        dv, dp, dpp = 0.0 + 0j, 0.0 + 0j, 0.0 + 0j
    else:
        jd = eval_expr_jet(d, x0, 2, params or {})
        dv, dp, dpp = jd.value, jd.derivative(1), jd.derivative(2)

    kind = model[0]
    if kind == "bounded":
        c0 = complex(model[1])
        den = c0 + dv
        if abs(den) < 1e-300:
            raise ModelSingularity("c0 + d(x) vanishes: eps0 model singular")
        r1 = x0 * dp / den
        return -0.25 / den * (1.0 + (x0 * dp + x0 * x0 * dpp) / den
                              - 1.25 * r1 * r1)

    if kind == "power":
        m, c = float(model[1]), complex(model[2])
        s_over = m * (m + 4.0) / (16.0 * x0 * x0)
        dlog = m / x0
        qm2 = c * x0 ** m
    elif kind == "exp_pole":
        eta, c = complex(model[1]), complex(model[2])
        s_over = eta * eta / (16.0 * x0 ** 4)
        dlog = -4.0 / x0 - eta / (x0 * x0)
        qm2 = c * x0 ** (-4.0) * cmath.exp(eta / x0)
    elif kind == "exp_flat":
        eta, c = complex(model[1]), complex(model[2])
        s_over = eta * (eta - 8.0 * x0) / (16.0 * x0 ** 4)
        dlog = -eta / (x0 * x0)
        qm2 = c * cmath.exp(eta / x0)
    else:
        raise ValueError(f"unknown model kind {kind!r}")

    if abs(qm2) < 1e-300:
        raise ModelSingularity("model Q_M^2 underflowed to zero")
    gamma = 1.0 / (1.0 + dv)
    qsq = qm2 * (1.0 + dv)
    if abs(qsq) < 1e-300:
        raise ModelSingularity("Q^2 vanishes in the model")
    return (s_over / qsq
            + 0.125 * gamma * (dp * dlog - 2.0 * dpp) / qsq
            + 0.3125 * gamma * gamma * dp * dp / qsq)
