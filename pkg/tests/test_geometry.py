import math
from dataclasses import replace

import numpy as np
import pytest

from hgtransit import (
    CavityParams,
    StabilityError,
    derive,
    family_spectrum,
    family_splitting,
    mode_frequency,
    with_astigmatic_splitting,
)
from hgtransit.geometry import C_LIGHT

TWO_PI = 2.0 * math.pi


def eq3_frequency(params, m, n, q):
    """Spherical-mirror eigenfrequency evaluated directly as an oracle."""
    xi1 = 1.0 - params.length / params.roc1
    xi2 = 1.0 - params.length / params.roc2
    gouy = math.acos(math.sqrt(xi1 * xi2))
    return (q + (m + n + 1) * gouy / math.pi) * math.pi * C_LIGHT / params.length


class TestDerive:
    def test_reference_values(self, params):
        d = derive(params)
        assert d.fsr == pytest.approx(1.22e12, rel=5e-3)
        assert d.waist == pytest.approx(29e-6, abs=1e-6)
        assert d.linewidth == pytest.approx(2.8e6, rel=1e-12)
        assert d.finesse == pytest.approx(440_000, rel=0.02)

    def test_finesse_is_fsr_over_linewidth(self, params):
        d = derive(params)
        assert abs(d.finesse * d.linewidth / d.fsr - 1.0) < 5e-3

    def test_fsr_identity_exact(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            length = rng.uniform(50e-6, 5e-3)
            roc = rng.uniform(0.05, 0.5)
            p = CavityParams(length=length, roc1=roc, roc2=roc,
                             wavelength=780e-9, kappa=1e7, gamma=1e7, g0=1e8)
            assert derive(p).fsr * 2.0 * p.length / C_LIGHT == 1.0

    def test_symmetric_waist_formula(self, params):
        # w0^2 = (lam/2pi) sqrt(L (2R - L)) for R1 = R2
        w0 = derive(params).waist
        expect = math.sqrt(
            params.wavelength / (2 * math.pi)
            * math.sqrt(params.length * (2 * params.roc1 - params.length))
        )
        assert w0 == pytest.approx(expect, rel=1e-12)

    def test_monotonicity_in_length(self, params):
        lengths = np.linspace(80e-6, 5e-3, 12)
        fsrs, waists = [], []
        for length in lengths:
            p = replace(params, length=length)
            d = derive(p)
            fsrs.append(d.fsr)
            waists.append(d.waist)
        assert all(a > b for a, b in zip(fsrs, fsrs[1:]))
        assert all(a < b for a, b in zip(waists, waists[1:]))

    def test_unstable_geometry_raises(self, params):
        with pytest.raises(StabilityError):
            CavityParams(length=0.5, roc1=0.2, roc2=0.2, wavelength=780e-9,
                         kappa=1e7, gamma=1e7, g0=1e8)
        with pytest.raises(StabilityError):
            replace(params, kappa=-1.0)
        with pytest.raises(StabilityError):
            # one convex mirror pushes xi1*xi2 above 1
            CavityParams(length=123e-6, roc1=-0.2, roc2=0.1, wavelength=780e-9,
                         kappa=1e7, gamma=1e7, g0=1e8)


class TestSpectrum:
    def test_matches_direct_formula(self, params):
        for m, n, q in [(0, 0, 1), (1, 0, 1), (3, 2, 7), (0, 10, 2)]:
            assert mode_frequency(params, m, n, q) == pytest.approx(
                eq3_frequency(params, m, n, q), rel=1e-14)

    def test_permutation_exact_for_spherical(self, params):
        for m, n, q in [(1, 0, 1), (2, 1, 3), (7, 3, 2), (10, 0, 1)]:
            assert mode_frequency(params, m, n, q) == mode_frequency(params, n, m, q)

    def test_family_spacing_value(self, params):
        spacing = mode_frequency(params, 1, 0, 1) - mode_frequency(params, 0, 0, 1)
        assert spacing / TWO_PI == pytest.approx(13.6e9, rel=0.01)

    def test_invalid_indices(self, params):
        with pytest.raises(ValueError):
            mode_frequency(params, -1, 0, 1)
        with pytest.raises(ValueError):
            mode_frequency(params, 0, 0, 0)

    def test_astigmatic_reduces_bit_identically(self, params):
        explicit = replace(params, roc_x=(params.roc1, params.roc2),
                           roc_y=(params.roc1, params.roc2))
        for m, n, q in [(0, 0, 1), (1, 0, 1), (5, 2, 3), (0, 10, 1)]:
            assert mode_frequency(explicit, m, n, q) == mode_frequency(params, m, n, q)

    def test_family_spectrum_degenerate(self, params):
        spec = family_spectrum(params, 2, 1)
        assert [(m, n) for m, n, _ in spec] == [(0, 2), (1, 1), (2, 0)]
        freqs = [f for _, _, f in spec]
        assert freqs[0] == freqs[1] == freqs[2]
        assert family_spectrum(params, 0, 1) == [
            (0, 0, mode_frequency(params, 0, 0, 1))]


class TestAstigmatism:
    def test_calibration_hits_target(self, params):
        target = TWO_PI * 25e6
        cal = with_astigmatic_splitting(params, target)
        assert family_splitting(cal) == pytest.approx(target, rel=1e-6)

    def test_calibration_radius_difference(self, params):
        cal = with_astigmatic_splitting(params, TWO_PI * 25e6)
        delta = cal.roc_x[0] - cal.roc_y[0]
        # first-order estimate: delta R = 2 R * L * splitting / (c * gouy)
        assert delta == pytest.approx(0.73e-3, abs=0.1e-3)

    def test_n2_triplet_equally_spaced(self, params):
        cal = with_astigmatic_splitting(params, TWO_PI * 25e6)
        spec = family_spectrum(cal, 2, 1)
        freqs = np.array([f for _, _, f in spec])
        gaps = np.diff(freqs) / TWO_PI
        assert gaps == pytest.approx([25e6, 25e6], rel=1e-5)
        assert (freqs[-1] - freqs[0]) / TWO_PI == pytest.approx(50e6, rel=1e-5)

    def test_zero_splitting_restores_degeneracy(self, params):
        cal = with_astigmatic_splitting(params, 0.0)
        assert family_splitting(cal) == 0.0
