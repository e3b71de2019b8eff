import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from phaseintegral.errors import CrossingPoint, TurningPoint
from phaseintegral.expressions import parse_expr
from phaseintegral.jets import Jet, jet_const, jet_pow, jet_variable
from phaseintegral.problem import ProblemSpec, split_R
from phaseintegral.quadrature import quad
from phaseintegral.spectral import (
    BranchField, eigen_n2_closed_form, eigen_track, epsilon0, kato_gauge,
    schwartzian,
)

ZERO = parse_expr("0")


def _sign_match(got, want, tol=1e-10):
    """Componentwise equality up to one common sign (gauge freedom)."""
    got = np.asarray(got, dtype=complex)
    want = np.asarray(want, dtype=complex)
    return (np.allclose(got, want, atol=tol)
            or np.allclose(got, -want, atol=tol))


class TestClosedFormEigen:
    def test_fex1_lower_branch(self, fex1):
        br = eigen_n2_closed_form(fex1, 3.0, 4, sign=+1)
        assert_allclose(br.Qsq.coeffs, [1.0] + [0.0] * 4, atol=1e-12)
        assert _sign_match(br.s0_values(), [math.sin(3), -math.cos(3)])

    def test_fex1_upper_branch(self, fex1):
        br = eigen_n2_closed_form(fex1, 3.0, 4, sign=-1)
        assert_allclose(br.Qsq.coeffs, [3.0, 1.0, 0, 0, 0], atol=1e-12)
        assert _sign_match(br.s0_values(), [math.cos(3), math.sin(3)])

    def test_full_degeneracy_is_crossing_for_closed_form(self):
        spec = ProblemSpec(2, "reduced",
                           ((parse_expr("2"), ZERO), (ZERO, parse_expr("2"))),
                           None, {}, (0.0, 1.0), "real_symmetric")
        prob = split_R(spec, 1.0, None)
        with pytest.raises(CrossingPoint):
            eigen_n2_closed_form(prob, 0.5, 2, sign=+1)

    def test_eigen_residual_invariant(self, fex1):
        for x in np.linspace(2.0, 10.0, 9):
            br = eigen_n2_closed_form(fex1, float(x), 3, sign=+1)
            g = fex1.G_value(float(x))
            assert br.eigen_residual(g) <= 1e-10 * (1 + np.linalg.norm(g))


class TestTracking:
    def test_fex1_both_branches_on_grid(self, fex1):
        grid = np.linspace(2.0, 10.0, 9)
        lower = eigen_track(fex1, grid, 0, 2)
        upper = eigen_track(fex1, grid, 1, 2)
        for x, bl, bu in zip(grid, lower, upper):
            assert_allclose(bl.Qsq.value, 1.0, atol=1e-12)
            assert_allclose(bu.Qsq.value, x, atol=1e-12)

    def test_constant_matrix_constant_branch(self):
        spec = ProblemSpec(2, "reduced",
                           ((parse_expr("2"), parse_expr("1")),
                            (parse_expr("1"), parse_expr("2"))),
                           None, {}, (0.0, 4.0), "real_symmetric")
        prob = split_R(spec, 1.0, None)
        branches = eigen_track(prob, np.linspace(0.0, 4.0, 7), 0, 2)
        vals = [b.Qsq.value for b in branches]
        vecs = [b.s0_values() for b in branches]
        assert_allclose(vals, [1.0] * 7, atol=1e-13)
        for v in vecs[1:]:
            assert_allclose(v, vecs[0], atol=1e-12)

    def test_bec_branch_magnitudes(self, bec):
        # |Q| at x = 55 for k = 0.04, omega = 0.002604
        f_ge = BranchField(bec, 0, "normalized", None, anchor=55.0)
        f_se = BranchField(bec, 1, "normalized", None, anchor=55.0)
        assert_allclose(abs(cmath.sqrt(f_ge.qsq_value(55.0))), 1.41464,
                        rtol=5e-6)
        assert_allclose(abs(cmath.sqrt(f_se.qsq_value(55.0))), 0.0427842,
                        rtol=5e-6)

    def test_smoothness_of_eigenvector_field(self, fex1):
        # the normalized field must be continuous through the points where
        # the closed-form parameterization switches rows
        fld = BranchField(fex1, 0, "normalized", None, anchor=2.0)
        xs = np.linspace(2.0, 8.0, 241)    # spans cos/sin zeros
        prev = None
        for x in xs:
            v = np.array([c.value for c in fld.s0_jets(float(x), 0)])
            if prev is not None:
                assert np.linalg.norm(v - prev) < 0.1
            prev = v


class TestKatoGauge:
    def test_real_vectors_theta_zero(self, fex1):
        fld = BranchField(fex1, 0, "normalized", None, anchor=2.0)
        kato = kato_gauge(fld, 2.0)
        for x in (2.5, 4.0):
            a = [c.value for c in fld.s0_jets(x, 1)]
            b = [c.value for c in kato.s0_jets(x, 1)]
            assert_allclose(a, b, atol=1e-12)

    def test_phase_restores_real_vector(self):
        # e~ = exp(ix) {sin x, -cos x}: theta1 = -x undoes the phase
        g12 = parse_expr("(x - 1)*cos(x)*sin(x)*exp(i*x)")
        g21 = parse_expr("(x - 1)*cos(x)*sin(x)*exp(-i*x)")
        spec = ProblemSpec(2, "reduced",
                           ((parse_expr("x*cos(x)^2 + sin(x)^2"), g12),
                            (g21, parse_expr("x*sin(x)^2 + cos(x)^2"))),
                           None, {}, (2.0, 2.9), "hermitian")
        prob = split_R(spec, 1.0, None)
        fld = BranchField(prob, 0, "kato", None, anchor=2.2)
        for x in (2.3, 2.6, 2.8):
            e = fld.s0_jets(x, 2)
            ip = sum(c.conj().value * c.diff().value for c in e)
            assert abs(ip) < 1e-10
            norm = sum(abs(c.value) ** 2 for c in e)
            assert_allclose(norm, 1.0, atol=1e-12)

    def test_spec_example_phase_restores_real_vector(self):
        # e~ = exp(ix) {sin x, -cos x}: (e~, e~') = i, theta1 = -x up to a
        # constant, and exp(i theta1) e~ is real again.
        from phaseintegral.jets import jet_exp, jet_sin, jet_cos
        anchor, x = 1.0, 1.8
        for t in (anchor, 1.3, x):
            xj = jet_variable(t, 3)
            ph = jet_exp(1j * xj)
            e = (ph * jet_sin(xj), ph * (-1.0) * jet_cos(xj))
            ip = sum(c.conj().value * c.diff().value for c in e)
            assert_allclose(ip, 1j, atol=1e-12)
        theta1 = 1j * quad(lambda t: 1j, anchor, x)      # = -(x - anchor)
        assert_allclose(theta1, -(x - anchor), atol=1e-12)
        gauged = cmath.exp(1j * theta1) * cmath.exp(1j * x) \
            * np.array([math.sin(x), -math.cos(x)])
        # real again up to the constant phase exp(i * anchor)
        restored = gauged * cmath.exp(-1j * anchor)
        assert_allclose(restored.imag, 0.0, atol=1e-12)

    def test_quadrature_against_independent_oracle(self):
        # The applied Kato phase must match an independent adaptive
        # quadrature of i (e~, e~') for the field's own raw section.
        g12 = parse_expr("(x - 1)*cos(x)*sin(x)*exp(i*x)")
        g21 = parse_expr("(x - 1)*cos(x)*sin(x)*exp(-i*x)")
        spec = ProblemSpec(2, "reduced",
                           ((parse_expr("x*cos(x)^2 + sin(x)^2"), g12),
                            (g21, parse_expr("x*sin(x)^2 + cos(x)^2"))),
                           None, {}, (2.0, 2.9), "hermitian")
        prob = split_R(spec, 1.0, None)
        raw = BranchField(prob, 0, "normalized", None, anchor=2.2)

        def integrand(t):
            e = raw.s0_jets(t, 1)
            return 1j * sum(c.conj().value * c.diff().value for c in e)

        theta = quad(integrand, 2.2, 2.7)
        assert abs(theta.imag) < 1e-10        # theta1 is real
        fld = BranchField(prob, 0, "kato", None, anchor=2.2)
        e_kato = np.array([c.value for c in fld.s0_jets(2.7, 0)])
        e_raw = np.array([c.value for c in raw.s0_jets(2.7, 0)])
        ratio = e_kato / e_raw
        assert_allclose(ratio, np.full(2, ratio[0]), atol=1e-10)
        assert_allclose(ratio[0], cmath.exp(1j * theta), atol=1e-9)

    def test_constant_complex_vector_untouched(self):
        spec = ProblemSpec(2, "reduced",
                           ((parse_expr("2"), parse_expr("i")),
                            (parse_expr("-i"), parse_expr("2"))),
                           None, {}, (0.0, 3.0), "hermitian")
        prob = split_R(spec, 1.0, None)
        fld = BranchField(prob, 0, "kato", None, anchor=0.5)
        v1 = np.array([c.value for c in fld.s0_jets(0.5, 0)])
        v2 = np.array([c.value for c in fld.s0_jets(2.5, 0)])
        assert_allclose(v1, v2, atol=1e-10)


class TestComplement:
    def test_fex1(self, fex1):
        fld = BranchField(fex1, 0, "normalized", None, anchor=3.0)
        s0 = fld.s0_jets(3.0, 1)
        (perp,) = fld.complement_jets(3.0, 1)
        assert _sign_match([c.value for c in perp],
                           [math.cos(3), math.sin(3)])
        ip = s0[0].conj().value * perp[0].value \
            + s0[1].conj().value * perp[1].value
        assert abs(ip) < 1e-12

    def test_nonnormalized_convention(self, fex4):
        # s0 = {2 sin x, i cos x} -> s_perp = {i cos x, 2 sin x}
        fld = BranchField(fex4, 0, "raw", parse_expr("2*sin(x)"), anchor=2.0)
        (perp,) = fld.complement_jets(3.0, 0)
        assert_allclose([c.value for c in perp],
                        [1j * math.cos(3), 2 * math.sin(3)], atol=1e-12)

    def test_axis_vector(self):
        spec = ProblemSpec(2, "reduced",
                           ((parse_expr("1"), ZERO), (ZERO, parse_expr("3"))),
                           None, {}, (0.0, 1.0), "real_symmetric")
        prob = split_R(spec, 1.0, None)
        fld = BranchField(prob, 0, "normalized", None, anchor=0.5)
        s0 = [c.value for c in fld.s0_jets(0.5, 0)]
        (perp,) = fld.complement_jets(0.5, 0)
        assert _sign_match(s0, [1.0, 0.0])
        assert _sign_match([c.value for c in perp], [0.0, 1.0])


class TestSchwartzianAndEps0:
    def test_constant_q(self):
        assert schwartzian(jet_const(4.0, 1.0, 3)) == 0.0

    def test_qsq_linear(self):
        # q^2 = x at x0 = 2: S = (5/16)(1/x)^2 = 5/64
        s = schwartzian(jet_variable(2.0, 3))
        assert_allclose(s, 5.0 / 64.0, rtol=1e-13)

    def test_qsq_quartic(self):
        # q^2 = x^4 at x0 = 1: (5/16)*16 - (1/4)*12 = 2
        j = jet_pow(jet_variable(1.0, 4), 4.0)
        assert_allclose(schwartzian(j), 2.0, rtol=1e-13)

    def test_product_rule_numeric(self):
        # S_x[q1 q21] = S_x[q1] + q1^2 S_x1[q21], x1 = int q1 dx, checked
        # for q1 = exp(x/3), q21(x1) with x1(x) known analytically.
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = float(rng.uniform(0.2, 0.8))
            b = float(rng.uniform(0.5, 1.5))
            x0 = float(rng.uniform(0.3, 1.5))
            K = 4
            q1 = lambda x, k: np.exp(a * x) * np.ones(1)  # placeholder
            # jets: q1 = exp(a x), q21 = b + x^2 evaluated at x1(x) = exp(ax)/a
            from phaseintegral.jets import jet_exp
            q1j = jet_exp(a * jet_variable(x0, K))
            x1_of_x = jet_exp(a * jet_variable(x0, K)) * (1.0 / a)
            q21_of_x1 = lambda xj: b + xj * xj
            comp = q21_of_x1(x1_of_x)
            lhs = schwartzian((q1j * comp) * (q1j * comp))
            # S_x1[q21] evaluated at x1(x0), via a jet in the x1 variable
            x1v = math.exp(a * x0) / a
            q21j = q21_of_x1(jet_variable(x1v, K))
            s21 = schwartzian(q21j * q21j)
            rhs = schwartzian(q1j * q1j) + (q1j.value ** 2) * s21
            assert_allclose(lhs, rhs, rtol=1e-8, atol=1e-10)

    def test_homogeneity(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            alpha = complex(rng.uniform(0.5, 2), rng.uniform(-1, 1))
            j = (2.0 + jet_variable(1.1, 4)) * (1.0 + 0.3 * jet_variable(1.1, 4))
            assert_allclose(schwartzian((alpha * alpha) * j), schwartzian(j),
                            rtol=1e-12)

    def test_eps0_linear_qsq(self, fex1):
        # Q^2 = x: eps0 = 5/(16 x^3)
        br = eigen_n2_closed_form(fex1, 2.0, 6, sign=-1)
        e = epsilon0(br, ZERO, 2.0, 3)
        assert_allclose(e.value, 5.0 / (16.0 * 8.0), rtol=1e-12)

    def test_eps0_constant_qsq(self, fex1):
        br = eigen_n2_closed_form(fex1, 3.0, 6, sign=+1)   # Q^2 = 1
        e = epsilon0(br, ZERO, 3.0, 2)
        assert abs(e.value) < 1e-12

    def test_eps0_constant_with_auxiliary(self):
        spec = ProblemSpec(1, "reduced", ((parse_expr("4"),),), None, {},
                           (0.5, 3.0), "real_symmetric")
        prob = split_R(spec, 1.0, None)
        fld = BranchField(prob, 0, "normalized", None, anchor=1.0)
        br = fld.branch(1.3, 4)
        a = parse_expr("sin(x)")
        e = epsilon0(br, a, 1.3, 2)
        assert_allclose(e.value, math.sin(1.3) / 4.0, rtol=1e-12)

    def test_eps0_branch_sign_invariance(self, fex1):
        fp = BranchField(fex1, 1, "normalized", None, anchor=2.0, q_sign=+1)
        fm = BranchField(fex1, 1, "normalized", None, anchor=2.0, q_sign=-1)
        assert_allclose(fp.eps0_jet(3.0, 2).coeffs, fm.eps0_jet(3.0, 2).coeffs,
                        rtol=1e-13)

    def test_turning_point_refused(self):
        spec = ProblemSpec(1, "reduced", ((parse_expr("x"),),), None, {},
                           (-1.0, 1.0), "real_symmetric")
        prob = split_R(spec, 1.0, None)
        fld = BranchField(prob, 0, "normalized", None, anchor=0.5)
        with pytest.raises(TurningPoint):
            fld.eps0_jet(0.0, 2)


class TestErrorPaths:
    def test_degenerate_parameterization(self):
        spec = ProblemSpec(2, "reduced",
                           ((parse_expr("1"), ZERO), (ZERO, parse_expr("3"))),
                           None, {}, (0.0, 1.0), "real_symmetric")
        prob = split_R(spec, 1.0, None)
        from phaseintegral.errors import DegenerateParameterization
        fld = BranchField(prob, 0, "raw", parse_expr("1"), anchor=0.5)
        with pytest.raises(DegenerateParameterization):
            fld.s0_jets(0.5, 1)

    def test_crossing_guard(self, fex1):
        fld = BranchField(fex1, 0, "normalized", None, anchor=2.0)
        with pytest.raises(CrossingPoint):
            fld.qsq_jet(1.0, 2)

    def test_module_level_complement(self, fex1):
        from phaseintegral.spectral import complement_basis
        fld = BranchField(fex1, 0, "normalized", None, anchor=3.0)
        basis = complement_basis(fld, 3.0, 1)
        assert len(basis.vectors) == 1
        (vec,) = basis.vectors
        norm = sum(abs(c.value) ** 2 for c in vec)
        assert abs(norm - 1.0) < 1e-12
