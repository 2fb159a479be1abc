import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgtransit import (
    FieldSuperposition,
    ModeSpec,
    UndefinedDecompositionError,
    coupling,
    coupling_ratio,
    effective_mode,
    hermite_poly,
    intensity_grid,
    mode_amplitude,
    scaling_report,
)

TWO_PI = 2.0 * math.pi


def hermite_explicit(m, u):
    """Closed-form coefficient sum, independent of the recurrence."""
    total = 0.0
    for k in range(m // 2 + 1):
        total += ((-1) ** k / (math.factorial(k) * math.factorial(m - 2 * k))
                  * (2 * u) ** (m - 2 * k))
    return math.factorial(m) * total


class TestHermitePoly:
    def test_trivial_orders(self):
        assert hermite_poly(0, 1.7) == 1.0
        assert hermite_poly(1, 3.0) == 6.0
        assert hermite_poly(2, 1.0) == 2.0

    def test_against_explicit_coefficients(self):
        for m in (3, 5, 8, 10, 12):
            for u in (-2.3, -0.7, 0.5, 1.9):
                assert hermite_poly(m, u) == pytest.approx(
                    hermite_explicit(m, u), rel=1e-10)

    def test_vectorized(self):
        u = np.linspace(-2, 2, 7)
        out = hermite_poly(4, u)
        assert out.shape == u.shape
        assert out[3] == pytest.approx(hermite_explicit(4, 0.0))

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            hermite_poly(-1, 0.0)


class TestModeAmplitude:
    def test_fundamental_at_origin(self, waist):
        mode = ModeSpec(0, 0, waist)
        assert mode_amplitude(mode, 0.0, 0.0) == pytest.approx(
            math.sqrt(2.0 / math.pi) / waist, rel=1e-14)

    def test_nodal_line(self, waist):
        mode = ModeSpec(1, 0, waist)
        ys = np.linspace(-3 * waist, 3 * waist, 17)
        assert np.all(mode_amplitude(mode, 0.0, ys) == 0.0)

    @pytest.mark.parametrize("m,n", [(0, 0), (1, 0), (2, 2), (5, 3), (10, 10)])
    def test_normalization_quadrature(self, waist, m, n):
        mode = ModeSpec(m, n, waist)
        span = (math.sqrt(2 * max(m, n) + 1) + 5.0) * waist / math.sqrt(2)
        axis = np.linspace(-span, span, 701)
        xg, yg = np.meshgrid(axis, axis)
        vals = mode_amplitude(mode, xg, yg) ** 2
        step = axis[1] - axis[0]
        integral = float(vals.sum()) * step * step
        assert integral == pytest.approx(1.0, abs=1e-6)

    def test_orthogonality_separable(self, waist):
        # 1-D factors reconstructed from the public 2-D amplitude
        span = 9.0 * waist / math.sqrt(2)
        axis = np.linspace(-span, span, 2001)
        step = axis[1] - axis[0]
        ref = ModeSpec(0, 0, waist)
        phi0_peak = mode_amplitude(ref, 0.0, 0.0)
        factors = {}
        for m in range(7):
            mode = ModeSpec(m, 0, waist)
            factors[m] = mode_amplitude(mode, axis, 0.0) / math.sqrt(phi0_peak)
        for m in range(7):
            for mp in range(m + 1, 7):
                overlap = float(np.sum(factors[m] * factors[mp])) * step
                assert abs(overlap) < 1e-6

    def test_parity_exact(self, waist):
        rng = np.random.default_rng(3)
        for m, n in [(1, 0), (2, 3), (5, 5), (4, 1)]:
            mode = ModeSpec(m, n, waist)
            x = rng.uniform(-2, 2, 9) * waist
            y = rng.uniform(-2, 2, 9) * waist
            left = mode_amplitude(mode, -x, y)
            right = (-1.0) ** m * mode_amplitude(mode, x, y)
            assert np.array_equal(left, right)

    def test_index_swap_symmetry(self, waist):
        a = ModeSpec(3, 1, waist)
        b = ModeSpec(1, 3, waist)
        assert mode_amplitude(a, 0.3 * waist, -0.8 * waist) == mode_amplitude(
            b, -0.8 * waist, 0.3 * waist)

    @given(theta=st.floats(-math.pi / 2, math.pi / 2, exclude_max=True),
           xw=st.floats(-2.5, 2.5), yw=st.floats(-2.5, 2.5))
    @settings(max_examples=60, deadline=None)
    def test_rotation_consistency(self, theta, xw, yw):
        w0 = 29e-6
        tilted = ModeSpec(2, 1, w0, theta=theta)
        plain = ModeSpec(2, 1, w0)
        x, y = xw * w0, yw * w0
        c, s = math.cos(theta), math.sin(theta)
        back = (c * x + s * y, -s * x + c * y)
        a = mode_amplitude(tilted, x, y)
        b = mode_amplitude(plain, *back)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12 / w0)

    def test_theta_range_enforced(self, waist):
        with pytest.raises(ValueError):
            ModeSpec(0, 1, waist, theta=math.pi / 2)


class TestCoupling:
    def test_peak_value(self, params, waist):
        assert coupling(params, ModeSpec(0, 0, waist), 0.0, 0.0) == pytest.approx(
            params.g0, rel=1e-14)

    def test_order1_maximum(self, params, waist):
        g = coupling(params, ModeSpec(1, 0, waist), waist / math.sqrt(2), 0.0)
        assert abs(g) / TWO_PI == pytest.approx(13.72e6, abs=0.05e6)
        assert round(abs(g) / TWO_PI / 1e6) == 14

    def test_nodal_line_zero(self, params, waist):
        xs = np.linspace(-2 * waist, 2 * waist, 11)
        assert np.all(coupling(params, ModeSpec(0, 1, waist), xs, 0.0) == 0.0)

    def test_sign_carries_field_sign(self, params, waist):
        mode = ModeSpec(1, 0, waist)
        assert coupling(params, mode, 0.5 * waist, 0.0) > 0
        assert coupling(params, mode, -0.5 * waist, 0.0) < 0


class TestIntensityGrid:
    def test_zero_line_and_maxima_separation(self, waist):
        grid = intensity_grid(ModeSpec(0, 1, waist), 2.0 * waist, 801)
        mid = 400
        assert np.all(grid.values[mid, :] < 1e-12 * grid.values.max())
        column = grid.values[:, mid]
        peaks = np.where((column[1:-1] > column[:-2])
                         & (column[1:-1] > column[2:]))[0] + 1
        assert len(peaks) == 2
        separation = grid.ys[peaks[1]] - grid.ys[peaks[0]]
        cell = grid.ys[1] - grid.ys[0]
        assert abs(separation - math.sqrt(2) * waist) <= cell

    def test_eleven_maxima_for_order_ten(self, waist):
        grid = intensity_grid(ModeSpec(0, 10, waist), 4.0 * waist, 1201)
        column = grid.values[:, 600]
        peaks = np.where((column[1:-1] > column[:-2])
                         & (column[1:-1] > column[2:]))[0] + 1
        assert len(peaks) == 11

    def test_validation(self, waist):
        with pytest.raises(ValueError):
            intensity_grid(ModeSpec(0, 1, waist), 0.0, 101)
        with pytest.raises(ValueError):
            intensity_grid(ModeSpec(0, 1, waist), waist, 1)


class TestSuperposition:
    def test_norm_enforced(self, waist):
        modes = (ModeSpec(1, 0, waist), ModeSpec(0, 1, waist))
        with pytest.raises(ValueError):
            FieldSuperposition(((modes[0], 1.0), (modes[1], 0.5)))
        FieldSuperposition(((modes[0], 1 / math.sqrt(2)), (modes[1], 1j / math.sqrt(2))))

    def test_mixed_family_rejected(self, waist):
        with pytest.raises(ValueError):
            FieldSuperposition(((ModeSpec(1, 0, waist), 1.0),
                                (ModeSpec(2, 0, waist), 0.0)))


class TestEffectiveMode:
    def test_on_axis_selects_single_member(self, params, waist):
        family = [ModeSpec(1, 0, waist), ModeSpec(0, 1, waist)]
        dec = effective_mode(params, family, 0.6 * waist, 0.0)
        coeffs = [c for _, c in dec.effective.members]
        assert abs(coeffs[0]) == pytest.approx(1.0, rel=1e-12)
        assert abs(coeffs[1]) == 0.0

    def test_diagonal_point_equal_weights(self, params, waist):
        family = [ModeSpec(1, 0, waist), ModeSpec(0, 1, waist)]
        d = 0.4 * waist
        dec = effective_mode(params, family, d, d)
        mags = [abs(c) for _, c in dec.effective.members]
        assert mags[0] == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        assert mags[1] == pytest.approx(1 / math.sqrt(2), rel=1e-12)

    def test_maximality_over_random_superpositions(self, params, waist):
        rng = np.random.default_rng(7)
        family = [ModeSpec(2, 0, waist), ModeSpec(1, 1, waist), ModeSpec(0, 2, waist)]
        x, y = 0.35 * waist, -0.55 * waist
        dec = effective_mode(params, family, x, y)
        amps = np.array([mode_amplitude(m, x, y) for m in family])
        peak = math.sqrt(2 / math.pi) / waist
        for _ in range(1000):
            c = rng.normal(size=3) + 1j * rng.normal(size=3)
            c /= np.linalg.norm(c)
            g = params.g0 * abs(np.sum(c * amps)) / peak
            assert g <= dec.g_eff * (1 + 1e-12)

    def test_residual_vanishes_at_atom(self, params, waist):
        rng = np.random.default_rng(13)
        family = [ModeSpec(1, 0, waist), ModeSpec(0, 1, waist)]
        for _ in range(25):
            x, y = rng.uniform(-waist, waist, 2)
            if abs(x) < 1e-8 * waist and abs(y) < 1e-8 * waist:
                continue
            c = rng.normal(size=2) + 1j * rng.normal(size=2)
            c /= np.linalg.norm(c)
            driven = FieldSuperposition(tuple(zip(family, (complex(v) for v in c))))
            dec = effective_mode(params, family, x, y, driven=driven)
            scale = abs(driven.amplitude(x, y)) + math.sqrt(2 / math.pi) / waist
            assert abs(dec.residual_amplitude) <= 1e-10 * scale

    def test_common_node_raises(self, params, waist):
        family = [ModeSpec(1, 0, waist), ModeSpec(0, 1, waist)]
        with pytest.raises(UndefinedDecompositionError):
            effective_mode(params, family, 0.0, 0.0)


class TestScalingReport:
    def test_lobe_counts_and_rough_exponents(self, params, waist):
        report = scaling_report(params, list(range(4, 25, 2)), waist=waist)
        by_order = {r.order: r for r in report.rows}
        assert by_order[10].lobe_count == 11
        assert by_order[4].lobe_count == 5
        assert report.exponents["peak_coupling"] == pytest.approx(-0.25, abs=0.05)
        assert report.exponents["lobe_spacing"] == pytest.approx(-0.5, abs=0.06)
        assert report.exponents["rms_size"] == pytest.approx(0.5, abs=0.05)

    def test_global_max_scales_weakly(self, params, waist):
        # the tallest (outermost) lobe follows the edge law, much flatter than -1/4
        report = scaling_report(params, [8, 16, 32, 64], waist=waist)
        assert -0.13 < report.exponents["global_max_coupling"] < -0.05

    def test_input_validation(self, params, waist):
        with pytest.raises(ValueError):
            scaling_report(params, [4], waist=waist)
        with pytest.raises(ValueError):
            scaling_report(params, [0, 5], waist=waist)
