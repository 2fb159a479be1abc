"""Cavity geometry, derived resonator quantities, and the transverse-mode spectrum.

Angular frequencies (rad/s) are the internal unit everywhere; plain Hz
appears only at I/O boundaries.  Lengths are meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.optimize import brentq

from .errors import StabilityError

C_LIGHT = 299_792_458.0  # m/s, exact
G_GRAV = 9.81            # m/s^2, used for ballistic launch bookkeeping
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CavityParams:
    """Physical constants of the cavity-atom system.

    Attributes:
        length: mirror separation L (m).
        roc1, roc2: nominal radii of curvature of the two mirrors (m).
        wavelength: light wavelength (m).
        kappa: cavity-field amplitude decay rate (rad/s).
        gamma: atomic-dipole amplitude decay rate (rad/s).
        g0: peak coupling of the fundamental mode at an antinode (rad/s).
        roc_x, roc_y: optional per-axis radii (rx1, rx2) / (ry1, ry2) for a
            two-axis astigmatic mirror model; default to the nominal radii.
        astig_axis: orientation of the astigmatism axes in the transverse
            plane (rad).  Bookkeeping only: the spectrum depends on the
            per-axis radii, mode orientation lives on ModeSpec.
    """

    length: float
    roc1: float
    roc2: float
    wavelength: float
    kappa: float
    gamma: float
    g0: float
    roc_x: tuple[float, float] | None = None
    roc_y: tuple[float, float] | None = None
    astig_axis: float = 0.0

    def __post_init__(self):
        if self.length <= 0:
            raise StabilityError(f"cavity length must be positive, got {self.length}")
        if self.length >= self.roc1 + self.roc2:
            raise StabilityError(
                f"unstable geometry: L={self.length} >= R1+R2={self.roc1 + self.roc2}"
            )
        for name in ("wavelength", "kappa", "gamma", "g0"):
            if getattr(self, name) <= 0:
                raise StabilityError(f"{name} must be strictly positive")
        for r1, r2 in (self.axis_radii("x"), self.axis_radii("y"), (self.roc1, self.roc2)):
            xi = (1.0 - self.length / r1) * (1.0 - self.length / r2)
            if not 0.0 <= xi <= 1.0:
                raise StabilityError(f"unstable geometry: xi1*xi2 = {xi} outside [0, 1]")

    def axis_radii(self, axis: str) -> tuple[float, float]:
        """Per-mirror radii along 'x' or 'y'; the nominal radii when not astigmatic."""
        radii = self.roc_x if axis == "x" else self.roc_y
        return radii if radii is not None else (self.roc1, self.roc2)


@dataclass(frozen=True)
class DerivedParams:
    """Derived optical quantities of a cavity geometry."""

    fsr: float        # free spectral range c/2L (Hz)
    waist: float      # fundamental-mode waist w0 (m)
    linewidth: float  # FWHM 2*kappa/2pi (Hz)
    finesse: float    # FSR / linewidth


def _xi(params: CavityParams, radii: tuple[float, float]) -> tuple[float, float]:
    return 1.0 - params.length / radii[0], 1.0 - params.length / radii[1]


def derive(params: CavityParams) -> DerivedParams:
    """Free spectral range, waist, linewidth and finesse of the resonator.

    The waist uses the standard two-mirror formula
    w0^2 = (L lam / pi) sqrt(xi1 xi2 (1 - xi1 xi2)) / |xi1 + xi2 - 2 xi1 xi2|
    with the nominal radii; per-axis astigmatic radii perturb the waist at
    the 1e-3 level and are ignored here (they only move the spectrum).
    """
    xi1, xi2 = _xi(params, (params.roc1, params.roc2))
    prod = xi1 * xi2
    if not 0.0 <= prod <= 1.0:
        raise StabilityError(f"unstable geometry: xi1*xi2 = {prod} outside [0, 1]")
    denom = abs(xi1 + xi2 - 2.0 * prod)
    arg = prod * (1.0 - prod)
    if denom == 0.0 or arg <= 0.0:
        raise StabilityError("degenerate geometry: waist undefined at the stability edge")
    w0_sq = (params.length * params.wavelength / math.pi) * math.sqrt(arg) / denom
    fsr = C_LIGHT / (2.0 * params.length)
    linewidth = params.kappa / math.pi
    return DerivedParams(fsr=fsr, waist=math.sqrt(w0_sq), linewidth=linewidth,
                         finesse=fsr / linewidth)


def _gouy(params: CavityParams, axis: str) -> float:
    """One-way Gouy phase arccos(+-sqrt(xi1 xi2)) along one transverse axis."""
    xi1, xi2 = _xi(params, params.axis_radii(axis))
    prod = xi1 * xi2
    if not 0.0 <= prod <= 1.0:
        raise StabilityError(f"unstable geometry along {axis}: xi1*xi2 = {prod}")
    sign = 1.0 if xi1 >= 0.0 else -1.0
    return math.acos(sign * math.sqrt(prod))


def mode_frequency(params: CavityParams, m: int, n: int, q: int) -> float:
    """Eigenfrequency (rad/s) of the transverse mode (m, n) at axial index q.

    For spherical mirrors this is the usual
    omega = [q + (m + n + 1)/pi * arccos(sqrt(xi1 xi2))] * pi c / L;
    with per-axis radii the Gouy term splits into
    (m + 1/2)/pi * arccos(sqrt(xi_x1 xi_x2)) + (n + 1/2)/pi * arccos(sqrt(xi_y1 xi_y2)),
    which reduces bit-identically to the spherical form when the per-axis
    radii coincide.
    """
    if q < 1 or m < 0 or n < 0:
        raise ValueError(f"invalid mode indices (m={m}, n={n}, q={q})")
    gouy = (m + 0.5) * _gouy(params, "x") + (n + 0.5) * _gouy(params, "y")
    return (q + gouy / math.pi) * math.pi * C_LIGHT / params.length


def family_spectrum(params: CavityParams, family: int, q: int) -> list[tuple[int, int, float]]:
    """All (m, n, omega) with m + n = family, sorted by frequency then m."""
    if family < 0:
        raise ValueError(f"family order must be >= 0, got {family}")
    members = [
        (m, family - m, mode_frequency(params, m, family - m, q))
        for m in range(family + 1)
    ]
    return sorted(members, key=lambda entry: (entry[2], entry[0]))


def family_splitting(params: CavityParams, q: int = 1) -> float:
    """Magnitude of the (1,0)/(0,1) frequency splitting (rad/s)."""
    return abs(mode_frequency(params, 1, 0, q) - mode_frequency(params, 0, 1, q))


def with_astigmatic_splitting(params: CavityParams, splitting: float,
                              q: int = 1) -> CavityParams:
    """Calibrate per-axis radii so the order-1 family splits by `splitting` (rad/s).

    The observed splitting drifts in real cavities, so it is treated as a
    calibration input: both mirrors get rx = R + d/2 and ry = R - d/2 with d
    root-found to reproduce the target.  d comes out around 0.7 mm for a
    25 MHz splitting on 20 cm mirrors.
    """
    if splitting < 0:
        raise ValueError("splitting must be >= 0")
    if splitting == 0.0:
        return replace(params, roc_x=None, roc_y=None)

    def gap(delta: float) -> float:
        trial = replace(
            params,
            roc_x=(params.roc1 + delta / 2, params.roc2 + delta / 2),
            roc_y=(params.roc1 - delta / 2, params.roc2 - delta / 2),
        )
        return family_splitting(trial, q) - splitting

    hi = 0.2 * min(params.roc1, params.roc2)
    delta = brentq(gap, 0.0, hi, xtol=1e-12, rtol=8.9e-16)
    return replace(
        params,
        roc_x=(params.roc1 + delta / 2, params.roc2 + delta / 2),
        roc_y=(params.roc1 - delta / 2, params.roc2 - delta / 2),
    )
