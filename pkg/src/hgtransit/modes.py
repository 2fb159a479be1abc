"""Hermite-Gaussian transverse mode functions, superpositions and coupling.

The transverse mode function is
    psi_mn(x, y) = C_mn exp(-(x^2+y^2)/w0^2) H_m(sqrt(2) x / w0) H_n(sqrt(2) y / w0)
with C_mn = (2^m 2^n m! n!)^(-1/2) (w0^2 pi / 2)^(-1/2), normalized so the
transverse-plane integral of |psi|^2 is 1.  Internally everything is
evaluated through orthonormal 1-D Hermite functions
    phi_k(u) = H_k(u) exp(-u^2/2) / (2^k k! sqrt(pi))^(1/2),
so that psi_mn(x, y) = (sqrt(2)/w0) phi_m(sqrt(2)x/w0) phi_n(sqrt(2)y/w0);
the normalized recurrence keeps values O(1) at any order.

Couplings follow g_mn(x, y) = g0 * psi_mn(x, y) / psi_00(0, 0) and may be
negative (sign of the field); only |g| enters transmission.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ._kernels import SQRT2, SQRT_PI, hermite_fn_1d, np_hermite_fn
from .errors import UndefinedDecompositionError
from .geometry import CavityParams

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ModeSpec:
    """A single Hermite-Gaussian transverse mode.

    Attributes:
        m, n: transverse indices along the mode's own x/y axes.
        waist: mode waist w0 (m).
        theta: rotation of the mode's x-axis in the lab transverse plane
            (rad), restricted to [-pi/2, pi/2).
    """

    m: int
    n: int
    waist: float
    theta: float = 0.0

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError(f"mode indices must be >= 0, got ({self.m}, {self.n})")
        if self.waist <= 0:
            raise ValueError(f"waist must be positive, got {self.waist}")
        if not -math.pi / 2 <= self.theta < math.pi / 2:
            raise ValueError(f"theta must lie in [-pi/2, pi/2), got {self.theta}")

    @property
    def order(self) -> int:
        return self.m + self.n


@dataclass(frozen=True)
class FieldSuperposition:
    """Normalized linear combination of degenerate family members.

    Coefficients are complex to cover the continuous family between
    Hermite-Gaussian and Laguerre-Gaussian shapes, although the shipped
    scenarios only use real ones.  All members must share the family order,
    waist and orientation, and the coefficients must be unit-norm.
    """

    members: tuple[tuple[ModeSpec, complex], ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("superposition needs at least one member")
        first = self.members[0][0]
        for mode, _ in self.members:
            if mode.order != first.order:
                raise ValueError("all members must share the family order m+n")
            if mode.waist != first.waist or mode.theta != first.theta:
                raise ValueError("all members must share waist and orientation")
        norm = sum(abs(c) ** 2 for _, c in self.members)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"coefficients must be unit-norm, got |c|^2 = {norm}")

    @property
    def order(self) -> int:
        return self.members[0][0].order

    @property
    def waist(self) -> float:
        return self.members[0][0].waist

    @property
    def theta(self) -> float:
        return self.members[0][0].theta

    def amplitude(self, x, y):
        """Complex field amplitude sum_i c_i psi_i(x, y)."""
        total = None
        for mode, c in self.members:
            term = c * mode_amplitude(mode, x, y)
            total = term if total is None else total + term
        return total


@dataclass(frozen=True)
class EffectiveDecomposition:
    """Split of a driven field into the maximally coupled mode and its remainder."""

    effective: FieldSuperposition
    residual_amplitude: complex
    g_eff: float
    residual_coefficients: tuple[complex, ...]


def hermite_poly(m: int, u):
    """Physicists' Hermite polynomial H_m(u) by the three-term recurrence.

    H_{k+1}(u) = 2 u H_k(u) - 2 k H_{k-1}(u); scalar in, scalar out.
    """
    if m < 0:
        raise ValueError(f"order must be >= 0, got {m}")
    u = np.asarray(u, dtype=np.float64)
    h0 = np.ones_like(u)
    if m == 0:
        return h0 if h0.ndim else float(h0)
    h1 = 2.0 * u
    for k in range(1, m):
        h0, h1 = h1, 2.0 * u * h1 - 2.0 * k * h0
    return h1 if h1.ndim else float(h1)


def _phi(m: int, u):
    """Orthonormal Hermite function, dispatched to the active kernel backend."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1 and u.size > 32:
        return hermite_fn_1d(m, u)
    return np_hermite_fn(m, u)


def _rotated(mode: ModeSpec, x, y):
    """Coordinates in the mode frame: the lab point rotated by -theta."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if mode.theta == 0.0:
        return x, y
    c, s = math.cos(mode.theta), math.sin(mode.theta)
    return c * x + s * y, -s * x + c * y


def mode_amplitude(mode: ModeSpec, x, y):
    """Transverse mode function psi_mn at lab coordinates (x, y), in 1/m."""
    xr, yr = _rotated(mode, x, y)
    shape = np.broadcast_shapes(xr.shape, yr.shape)
    xr, yr = np.broadcast_to(xr, shape), np.broadcast_to(yr, shape)
    ux = SQRT2 * np.ravel(xr) / mode.waist
    uy = SQRT2 * np.ravel(yr) / mode.waist
    val = (SQRT2 / mode.waist) * _phi(mode.m, ux) * _phi(mode.n, uy)
    val = val.reshape(shape)
    return val if shape else float(val)


def coupling_ratio(mode: ModeSpec, x, y):
    """Dimensionless g/g0 = psi_mn(x, y) / psi_00(0, 0); may be negative."""
    xr, yr = _rotated(mode, x, y)
    shape = np.broadcast_shapes(xr.shape, yr.shape)
    xr, yr = np.broadcast_to(xr, shape), np.broadcast_to(yr, shape)
    ux = SQRT2 * np.ravel(xr) / mode.waist
    uy = SQRT2 * np.ravel(yr) / mode.waist
    val = SQRT_PI * _phi(mode.m, ux) * _phi(mode.n, uy)
    val = val.reshape(shape)
    return val if shape else float(val)


def coupling(params: CavityParams, mode: ModeSpec, x, y):
    """Atom-field coupling g(x, y) in rad/s; magnitude is what enters transmission."""
    return params.g0 * coupling_ratio(mode, x, y)


@dataclass(frozen=True)
class IntensityGrid:
    """|psi|^2 sampled on a centered square window.

    values[i, j] is the intensity at (x = xs[j], y = ys[i]); both axes
    ascend, so rows run bottom to top.
    """

    values: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    extent: float
    resolution: int


def intensity_grid(field: Union[ModeSpec, FieldSuperposition], extent: float,
                   resolution: int) -> IntensityGrid:
    """Sample |psi|^2 on [-extent, extent]^2 with `resolution` points per axis."""
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    if extent <= 0:
        raise ValueError(f"extent must be positive, got {extent}")
    axis = np.linspace(-extent, extent, resolution)
    xg, yg = np.meshgrid(axis, axis)
    if isinstance(field, ModeSpec):
        amp = mode_amplitude(field, xg, yg)
        values = amp * amp
    else:
        amp = field.amplitude(xg, yg)
        values = np.abs(amp) ** 2
    return IntensityGrid(values=values, xs=axis, ys=axis, extent=extent,
                         resolution=resolution)


def effective_mode(params: CavityParams, family: Sequence[ModeSpec], x: float,
                   y: float, driven: FieldSuperposition | None = None
                   ) -> EffectiveDecomposition:
    """Family superposition with maximal coupling at the atom position (x, y).

    Coefficients are proportional to the conjugated member amplitudes at the
    atom position, which maximizes |sum c_i psi_i(x, y)| over unit-norm
    coefficient vectors (Cauchy-Schwarz), giving
    g_eff = g0 sqrt(sum_i |psi_i(x, y)|^2) / psi_00(0, 0).

    When a driven superposition is supplied, its component orthogonal to the
    effective mode is the residual; the residual amplitude at the atom
    position vanishes by construction.

    Raises UndefinedDecompositionError when the atom sits on a common node.
    """
    family = list(family)
    if not family:
        raise ValueError("family must contain at least one mode")
    amps = np.array([mode_amplitude(mode, x, y) for mode in family], dtype=complex)
    norm = math.sqrt(float(np.sum(np.abs(amps) ** 2)))
    peak = math.sqrt(2.0 / math.pi) / family[0].waist  # psi_00(0, 0)
    if norm <= 1e-12 * peak:
        raise UndefinedDecompositionError(
            f"every family member vanishes at ({x}, {y}); decomposition undefined"
        )
    coeffs = np.conj(amps) / norm
    effective = FieldSuperposition(tuple(zip(family, (complex(c) for c in coeffs))))
    g_eff = params.g0 * norm / peak

    if driven is None:
        residual = np.zeros_like(coeffs)
        residual_amp = 0.0 + 0.0j
    else:
        if [m for m, _ in driven.members] != family:
            raise ValueError("driven superposition must list the same family members")
        d = np.array([c for _, c in driven.members], dtype=complex)
        proj = np.vdot(coeffs, d)
        residual = d - proj * coeffs
        residual_amp = complex(np.sum(residual * amps))
    return EffectiveDecomposition(
        effective=effective,
        residual_amplitude=complex(residual_amp),
        g_eff=float(g_eff),
        residual_coefficients=tuple(complex(r) for r in residual),
    )


# --------------------------------------------------------------------------
# scaling diagnostics for HG_{N,0}
# --------------------------------------------------------------------------


def _golden_max(f, a: float, b: float, tol: float = 1e-12) -> float:
    """Golden-section maximizer of f on [a, b]."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _phi_deriv(order: int, u):
    """d/du of the orthonormal Hermite function."""
    u = np.asarray(u, dtype=np.float64)
    lower = _phi(order - 1, u) if order > 0 else np.zeros_like(u)
    upper = _phi(order + 1, u)
    return math.sqrt(order / 2.0) * lower - math.sqrt((order + 1) / 2.0) * upper


@dataclass(frozen=True)
class ScalingRow:
    """Per-order diagnostics of the HG_{N,0} coupling profile along its axis."""

    order: int
    lobe_count: int             # number of on-axis intensity maxima (N + 1)
    peak_coupling: float        # median lobe-peak |g| (rad/s)
    innermost_coupling: float   # |g| at the lobe nearest the axis
    global_max_coupling: float  # |g| at the tallest (outermost) lobe
    outermost_position: float   # |x| of the outermost intensity maximum (m)
    rms_size: float             # intensity-weighted rms extent along the axis (m)
    lobe_spacing: float         # mean distance between adjacent maxima (m)
    max_gradient: float         # max |dg/dx| along the axis (rad/s/m)


@dataclass(frozen=True)
class ScalingReport:
    rows: tuple[ScalingRow, ...]
    exponents: dict[str, float]


def _fit_loglog(orders, values) -> float:
    x = np.log(np.asarray(orders, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    design = np.vstack([x, np.ones_like(x)]).T
    slope, _ = np.linalg.lstsq(design, y, rcond=None)[0]
    return float(slope)


def scaling_report(params: CavityParams, n_values: Sequence[int],
                   waist: float | None = None) -> ScalingReport:
    """Locate the on-axis intensity maxima of HG_{N,0} and fit power laws.

    Maxima are seeded from a dense grid (>= 50 N samples out to the
    classical turning point plus margin) and refined by golden section.
    Log-log least squares over the requested orders gives the exponents
    for: peak coupling (median over lobes), mode size (both the outermost
    maximum position and the rms extent), lobe spacing, and the maximum
    coupling gradient.
    """
    n_values = sorted(int(n) for n in n_values)
    if len(n_values) < 2 or n_values[0] < 1:
        raise ValueError("need at least two orders, all >= 1")
    if waist is None:
        from .geometry import derive

        waist = derive(params).waist
    scale = waist / SQRT2  # x = scale * u

    rows = []
    for order in n_values:
        u_max = math.sqrt(2.0 * order) + 4.0
        samples = max(50 * order, 2000) | 1  # odd count puts u = 0 on the grid
        u = np.linspace(-u_max, u_max, samples)
        prof = np.abs(_phi(order, u))

        interior = np.where((prof[1:-1] > prof[:-2]) & (prof[1:-1] >= prof[2:]))[0] + 1
        lobes = []
        for i in interior:
            um = _golden_max(lambda z: abs(float(np_hermite_fn(order, np.array([z]))[0])),
                             u[i - 1], u[i + 1])
            lobes.append((um, abs(float(np_hermite_fn(order, np.array([um]))[0]))))
        pos = np.array([p for p, _ in lobes])
        val = np.array([v for _, v in lobes])

        grad = np.abs(_phi_deriv(order, u))
        gi = int(np.argmax(grad))
        ug = _golden_max(lambda z: abs(float(_phi_deriv(order, np.array([z]))[0])),
                         u[max(gi - 1, 0)], u[min(gi + 1, samples - 1)])
        grad_max = abs(float(_phi_deriv(order, np.array([ug]))[0]))

        weight = prof * prof
        rms_u = math.sqrt(float(np.trapezoid(weight * u * u, u) / np.trapezoid(weight, u)))

        g_unit = params.g0 * math.pi ** 0.25  # |g| = g_unit * |phi_N(u)| on the axis
        rows.append(ScalingRow(
            order=order,
            lobe_count=len(pos),
            peak_coupling=g_unit * float(np.median(val)),
            innermost_coupling=g_unit * float(val[np.argmin(np.abs(pos))]),
            global_max_coupling=g_unit * float(val.max()),
            outermost_position=scale * float(np.abs(pos).max()),
            rms_size=scale * rms_u,
            lobe_spacing=scale * float(np.mean(np.diff(np.sort(pos)))),
            max_gradient=g_unit * grad_max / scale,
        ))

    orders = [r.order for r in rows]
    exponents = {
        "peak_coupling": _fit_loglog(orders, [r.peak_coupling for r in rows]),
        "innermost_coupling": _fit_loglog(orders, [r.innermost_coupling for r in rows]),
        "global_max_coupling": _fit_loglog(orders, [r.global_max_coupling for r in rows]),
        "outermost_position": _fit_loglog(orders, [r.outermost_position for r in rows]),
        "rms_size": _fit_loglog(orders, [r.rms_size for r in rows]),
        "lobe_spacing": _fit_loglog(orders, [r.lobe_spacing for r in rows]),
        "max_gradient": _fit_loglog(orders, [r.max_gradient for r in rows]),
    }
    return ScalingReport(rows=tuple(rows), exponents=exponents)
