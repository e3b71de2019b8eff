"""Independent checks: currents, Wronskians, residuals, reference solutions.

Everything here deliberately avoids the correction machinery's internals:
residuals use the waves' own analytic jets, the reference trajectories come
from an off-the-shelf embedded Runge-Kutta pair, and conservation drifts
are measured against the median sample (robust to boundary quadrature
noise).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import GridMismatch, StepSizeUnderflow
from .problem import ReducedProblem
from .scalar import Wave, WaveSample

__all__ = [
    "ConservationReport", "current_sigma", "wronskian", "residual",
    "reference_integrate", "order_scaling", "crossing_diagnostics",
    "OrderScalingResult",
]

_DRIFT_FLOOR = 1e-14


@dataclass
class ConservationReport:
    quantity: str
    samples: list            # (x, value) pairs
    drift: float             # max |value - median| / (|median| + floor)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.samples], dtype=complex)

    def absolute_drift(self) -> float:
        v = self.values()
        med = complex(np.median(v.real), np.median(v.imag))
        return float(np.max(np.abs(v - med))) if len(v) else 0.0


def _report(quantity: str, xs, values) -> ConservationReport:
    v = np.asarray(values, dtype=complex)
    med = complex(np.median(v.real), np.median(v.imag))
    drift = float(np.max(np.abs(v - med)) / (abs(med) + _DRIFT_FLOOR))
    return ConservationReport(quantity, list(zip(xs, v.tolist())), drift)


def current_sigma(wave) -> ConservationReport:
    """sigma_N = Im (u, u') per sample."""
    xs, vals = [], []
    for smp in wave:
        xs.append(smp.x)
        vals.append(complex(np.imag(np.vdot(smp.u, smp.u_prime))))
    return _report("current_sigma", xs, vals)


def wronskian(w1, w2, kind: str = "generalized") -> ConservationReport:
    """W_N = Re[(u1, u2') - (u2, u1')]; symmetric variant drops conjugation."""
    s1 = list(w1)
    s2 = list(w2)
    if len(s1) != len(s2) or any(a.x != b.x for a, b in zip(s1, s2)):
        raise GridMismatch("wronskian needs two waves on the same grid")
    xs, vals = [], []
    for a, b in zip(s1, s2):
        if kind == "generalized":
            val = complex(np.real(np.vdot(a.u, b.u_prime)
                                  - np.vdot(b.u, a.u_prime)))
            name = "wronskian_generalized"
        elif kind == "symmetric":
            val = complex(np.dot(a.u, b.u_prime) - np.dot(b.u, a.u_prime))
            name = "wronskian_symmetric"
        else:
            raise ValueError(f"unknown wronskian kind {kind!r}")
        xs.append(a.x)
        vals.append(val)
    return _report(name, xs, vals)


def residual(wave: Wave, R_eval: Callable[[float], np.ndarray],
             points: Sequence[float] | None = None) -> list:
    """Per-point (x, |u'' + R u|, relative scale |R| |u|).

    Second derivatives come from the wave's analytic jets, never from
    finite differences of samples.
    """
    xs = [smp.x for smp in wave.samples] if points is None else list(points)
    out = []
    for x in xs:
        jets = wave.jet_at(x)
        u = np.array([j.value for j in jets])
        upp = np.array([j.derivative(2) for j in jets])
        rmat = np.atleast_2d(np.asarray(R_eval(x), dtype=complex))
        res = upp + rmat @ u
        scale = float(np.linalg.norm(rmat) * np.linalg.norm(u))
        out.append((x, float(np.linalg.norm(res)), scale))
    return out


def relative_residual(wave: Wave, R_eval, points=None) -> float:
    rows = residual(wave, R_eval, points)
    return max(r / (s + 1e-300) for _, r, s in rows)


def reference_integrate(R_eval: Callable[[float], np.ndarray], x_start: float,
                        u0: Sequence[complex], du0: Sequence[complex],
                        x_end: float, tol: float = 1e-10,
                        dense_points: Sequence[float] | None = None) -> list:
    """Direct numerical solution of u'' + R(x) u = 0 (embedded RK 5(4)).

    Complex systems are integrated as stacked real/imaginary parts; dense
    output is evaluated at `dense_points` (default: endpoints only).
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol outside [1e-12, 1e-4]")
    u0 = np.asarray(u0, dtype=complex)
    du0 = np.asarray(du0, dtype=complex)
    n = u0.size

    def rhs(x, y):
        u = y[:n] + 1j * y[n: 2 * n]
        du = y[2 * n: 3 * n] + 1j * y[3 * n:]
        rmat = np.atleast_2d(np.asarray(R_eval(x), dtype=complex))
        ddu = -(rmat @ u)
        return np.concatenate([du.real, du.imag, ddu.real, ddu.imag])

    y0 = np.concatenate([u0.real, u0.imag, du0.real, du0.imag])
    sol = solve_ivp(rhs, (x_start, x_end), y0, method="RK45",
                    rtol=tol, atol=tol * 1e-2, dense_output=True)
    if not sol.success:
        raise StepSizeUnderflow(f"reference integration failed: {sol.message}")
    pts = sorted(dense_points) if dense_points is not None else [x_start, x_end]
    lo, hi = min(x_start, x_end), max(x_start, x_end)
    samples = []
    for x in pts:
        if not lo <= x <= hi:
            raise ValueError(f"dense point {x} outside integration range")
        y = sol.sol(x)
        u = y[:n] + 1j * y[n: 2 * n]
        du = y[2 * n: 3 * n] + 1j * y[3 * n:]
        samples.append(WaveSample(float(x), u, du, 0.0))
    return samples


@dataclass
class OrderScalingResult:
    lambdas: list
    residuals: list
    slope: float
    measurable: bool


def order_scaling(make_wave: Callable[[float], Wave],
                  R_of_lambda: Callable[[float], Callable[[float], np.ndarray]],
                  lambdas: Sequence[float],
                  probe_points: Sequence[float]) -> OrderScalingResult:
    """Least-squares slope of log(relative residual) against log(lambda).

    `make_wave(lam)` must assemble the wave for that lambda with the same
    corrections (G fixed, R = lambda**-2 G + a I varying).
    """
    lambdas = [float(v) for v in lambdas]
    if len(lambdas) < 3:
        raise ValueError("need at least three lambda values")
    res = []
    for lam in lambdas:
        wave = make_wave(lam)
        res.append(relative_residual(wave, R_of_lambda(lam), probe_points))
    if max(res) < 1e-13:
        return OrderScalingResult(lambdas, res, float("nan"), False)
    slope = float(np.polyfit(np.log(lambdas), np.log(res), 1)[0])
    return OrderScalingResult(lambdas, res, slope, True)


def crossing_diagnostics(prob: ReducedProblem, lo: float, hi: float,
                         scan_points: int = 801) -> list:
    """Crossing points of the eigenvalues of G with local exponents.

    Scans the minimal eigenvalue gap, refines each local minimum, and
    estimates the exponent p of D ~ (x - x_cr)^p from a log-log fit of the
    gap (D is proportional to the gap times a smooth factor).
    """
    def gap(x: float) -> float:
        g = prob.G_value(x)
        if prob.n == 1:
            return float("inf")
        vals = np.linalg.eigvals(g)
        vals = vals[np.lexsort((vals.imag, vals.real))]
        return float(min(abs(vals[i + 1] - vals[i])
                         for i in range(len(vals) - 1)))

    xs = np.linspace(lo, hi, scan_points)
    gaps = np.array([gap(float(x)) for x in xs])
    scale = max(1.0, float(np.median(gaps)))
    out = []
    for i in range(1, len(xs) - 1):
        if gaps[i] <= gaps[i - 1] and gaps[i] <= gaps[i + 1] \
                and gaps[i] < 1e-2 * scale:
            a, b = float(xs[i - 1]), float(xs[i + 1])
            for _ in range(80):          # ternary refinement
                m1 = a + (b - a) / 3.0
                m2 = b - (b - a) / 3.0
                if gap(m1) < gap(m2):
                    b = m2
                else:
                    a = m1
            x_cr = 0.5 * (a + b)
            if gap(x_cr) > 1e-5 * scale:
                continue
            eps = max(1e-4, 1e-6 * (1 + abs(x_cr)))
            ds = np.array([eps * 2.0 ** j for j in range(6)])
            gs = np.array([gap(x_cr + d) for d in ds])
            if np.any(gs <= 0):
                continue
            p = float(np.polyfit(np.log(ds), np.log(gs), 1)[0])
            if out and abs(out[-1]["x_cr"] - x_cr) < 1e-6 * (1 + abs(x_cr)):
                continue
            out.append({"x_cr": x_cr, "p": int(round(p))})
    return out
