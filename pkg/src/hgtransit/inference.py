"""Fit transit records, enumerate degenerate solutions, invert two-mode data.

Bin counts are small, so fits maximize the Poisson likelihood rather than
least squares; the goodness metric is the Poisson deviance.  The optimizer
is a derivative-free simplex with multistart seeded from the data (arrival
time from the dip centroid, offset from the dip depth, speed from the dip
width); the multistart covers the exactly degenerate offset branches, which
are also reported explicitly as the equivalent-solution set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, minimize, root

from ._kernels import poisson_nll, transit_ratio_series
from .errors import (
    ConfigurationError,
    InfeasibleMeasurementError,
    NoTransitError,
    ZeroCouplingError,
)
from .geometry import CavityParams
from .modes import ModeSpec, coupling
from .transit import DEFAULT_AXIAL_NODES, TransitRecord, Trajectory
from .transmission import Detuning, axial_average, standing_wave_nodes

PARAM_NAMES = ("t0", "x0", "v")
MAX_EVALS = 10_000          # simplex evaluation budget per fit
DEDUP_TOL_W0 = 1e-2         # candidate/offset dedup tolerance in waist units
_PEAK_RATIO = math.sqrt(2.0) * math.exp(-0.5)  # max |g|/g0 of an order-1 mode


def amplitude_profile(u):
    """Offset-amplitude law of an order-1 lobe: A(u) = u exp(-u^2), u = x0/w0."""
    return u * np.exp(-np.asarray(u, dtype=np.float64) ** 2)


def poisson_deviance(counts, mu) -> float:
    """Poisson deviance 2 sum[mu - n + n ln(n/mu)] (n = 0 terms contribute 2 mu)."""
    counts = np.asarray(counts, dtype=np.float64)
    mu = np.maximum(np.asarray(mu, dtype=np.float64), 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(counts > 0,
                        counts * np.log(np.where(counts > 0, counts, 1.0) / mu), 0.0)
    return 2.0 * float(np.sum(mu - counts + term))


def expected_counts(record: TransitRecord, modes: Mapping[str, ModeSpec],
                    params: CavityParams, traj: Trajectory,
                    nodes: int = DEFAULT_AXIAL_NODES) -> np.ndarray:
    """Model expectation per record bin for a trajectory (R0 and live times applied)."""
    if record.delta_a is None or record.delta_c is None:
        raise ConfigurationError("record carries no per-bin detunings; attach a schedule")
    mids = 0.5 * (record.starts + record.ends)
    live = record.live_durations()
    cos_nodes = standing_wave_nodes(nodes)
    mu = np.empty_like(mids)
    for mode_id in set(record.mode_ids):
        if mode_id not in modes:
            raise ConfigurationError(f"record references unknown mode id {mode_id!r}")
        mode = modes[mode_id]
        idx = np.array([i for i, mid in enumerate(record.mode_ids) if mid == mode_id])
        ratio = transit_ratio_series(
            np.ascontiguousarray(mids[idx]), mode.m, mode.n, mode.waist,
            math.cos(mode.theta), math.sin(mode.theta), params.g0,
            float(record.delta_a[idx[0]]), float(record.delta_c[idx[0]]),
            params.kappa, params.gamma, cos_nodes, traj.x0, traj.t0, traj.v,
        )
        mu[idx] = record.r0 * ratio * live[idx]
    return mu


@dataclass(frozen=True)
class TransitFit:
    """Maximum-likelihood trajectory estimate for one transit record."""

    estimates: dict[str, float]       # t0 (s), x0 (m), v (m/s), fitted or fixed
    sigmas: dict[str, float]          # 1-sigma for the free parameters
    free: tuple[str, ...]
    fixed: dict[str, float]
    deviance: float
    residuals: np.ndarray             # Pearson (n - mu)/sqrt(mu) per bin
    equivalent_x0: tuple[float, ...]  # offsets producing the identical signal
    converged: bool
    n_evaluations: int
    mode_id: str

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "transit_fit",
            "mode": self.mode_id,
            "estimates": {
                "t0_us": self.estimates["t0"] * 1e6,
                "x0_um": self.estimates["x0"] * 1e6,
                "v_mps": self.estimates["v"],
            },
            "sigmas": {
                **({"t0_us": self.sigmas["t0"] * 1e6} if "t0" in self.sigmas else {}),
                **({"x0_um": self.sigmas["x0"] * 1e6} if "x0" in self.sigmas else {}),
                **({"v_mps": self.sigmas["v"]} if "v" in self.sigmas else {}),
            },
            "free": list(self.free),
            "fixed": {k: (v * 1e6 if k == "t0" else v * 1e6 if k == "x0" else v)
                      for k, v in self.fixed.items()},
            "deviance": self.deviance,
            "n_bins": int(len(self.residuals)),
            "equivalent_x0_um": [x * 1e6 for x in self.equivalent_x0],
            "converged": self.converged,
            "n_evaluations": self.n_evaluations,
        }

    def residuals_csv(self) -> str:
        lines = ["bin_index,pearson_residual"]
        lines += [f"{i},{float(r)!r}" for i, r in enumerate(self.residuals)]
        return "\n".join(lines) + "\n"


def _single_mode_arrays(record: TransitRecord):
    ids = set(record.mode_ids)
    if len(ids) != 1:
        raise ConfigurationError(
            f"fit_transit expects a single-mode record, got mode ids {sorted(ids)};"
            " use fit_switched_transit or record.subset()"
        )
    if record.delta_a is None or record.delta_c is None:
        raise ConfigurationError("record carries no per-bin detunings; attach a schedule")
    mids = np.ascontiguousarray(0.5 * (record.starts + record.ends))
    live = record.live_durations()
    counts = record.counts.astype(np.float64)
    return ids.pop(), mids, live, counts, float(record.delta_a[0]), float(record.delta_c[0])


def _invert_axial_on_peak(params, det, ratio_target, nodes):
    """Coupling magnitude whose axially averaged transmission equals ratio_target."""
    lo, hi = 0.0, 4.0 * params.g0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if axial_average(mid, det, params, nodes) > ratio_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _dip_heuristics(record, mode, params, mids, live, counts, det, nodes):
    """Data-driven starting values (t0 from centroid, x0 from depth, v from width).

    Raises NoTransitError when the smoothed record never drops below 90% of
    the baseline or the largest deficit is insignificant (< 3 sigma of the
    smoothed baseline noise).
    """
    base_ratio = float(axial_average(0.0, det, params, nodes))
    base = record.r0 * live * base_ratio
    k = max(3, min(9, len(counts) // 10) | 1)
    kern = np.ones(k) / k
    smooth = np.convolve(counts, kern, mode="same")
    bsmooth = np.convolve(base, kern, mode="same")
    ratio = smooth / np.maximum(bsmooth, 1e-300)
    deficit = np.maximum(bsmooth - smooth, 0.0)
    noise = np.sqrt(np.maximum(bsmooth, 1e-300) / k)
    if float(ratio.min()) >= 0.9 or float((deficit / noise).max()) <= 3.0:
        raise NoTransitError(
            "no dip detected: smoothed counts stay above 0.9 of baseline"
            " or below 3 sigma significance"
        )

    t0_init = float(np.sum(deficit * mids) / deficit.sum())
    spread = math.sqrt(float(np.sum(deficit * (mids - t0_init) ** 2) / deficit.sum()))
    spread = max(spread, float(np.median(record.ends - record.starts)))

    ratio_min = min(max(float(ratio.min()), 1e-4), 1.0)
    g_est = _invert_axial_on_peak(params, det, ratio_min * base_ratio, nodes)

    # peak |g| along the vertical path as a function of offset, inverted on a grid
    w0 = mode.waist
    ygrid = np.linspace(-5.0 * w0, 5.0 * w0, 501)
    us = np.linspace(0.0, 3.0, 121)
    peak = np.array([
        float(np.max(np.abs(coupling(params, mode, u * w0, ygrid)))) for u in us
    ])
    diff = peak - g_est
    x0_cands = []
    for i in range(len(us) - 1):
        if diff[i] == 0.0 or diff[i] * diff[i + 1] < 0:
            lo_u, hi_u = us[i], us[i + 1]
            f = lambda u: float(np.max(np.abs(coupling(params, mode, u * w0, ygrid)))) - g_est
            try:
                x0_cands.append(brentq(f, lo_u, hi_u, xtol=1e-6) * w0)
            except ValueError:
                pass
    if not x0_cands:
        x0_cands = [float(us[int(np.argmin(np.abs(diff)))]) * w0]
    # coalesce near-duplicates
    dedup = []
    for c in sorted(x0_cands):
        if not dedup or abs(c - dedup[-1]) > DEDUP_TOL_W0 * w0:
            dedup.append(c)
    x0_cands = dedup

    # speed from the dip width: rms extent of the model deficit profile in y
    prof = np.abs(coupling(params, mode, x0_cands[0], ygrid))
    dprof = base_ratio - axial_average(prof, det, params, nodes)
    dprof = np.maximum(dprof, 0.0)
    wsum = float(dprof.sum())
    if wsum <= 0:
        y_rms = w0
    else:
        yc = float(np.sum(dprof * ygrid) / wsum)
        y_rms = math.sqrt(float(np.sum(dprof * (ygrid - yc) ** 2) / wsum))
    v_init = max(y_rms / spread, 1e-3)
    return t0_init, x0_cands, v_init


def _hessian(fun, theta, steps):
    n = len(theta)
    h = np.asarray(steps, dtype=np.float64)
    f0 = fun(theta)
    hess = np.zeros((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (fun(theta + ei) - 2.0 * f0 + fun(theta - ei)) / h[i] ** 2
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h[i]
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                fun(theta + ei + ej) - fun(theta + ei - ej)
                - fun(theta - ei + ej) + fun(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return hess


def fit_transit(record: TransitRecord, modes: Mapping[str, ModeSpec],
                params: CavityParams, free: Sequence[str] = PARAM_NAMES,
                fixed: Mapping[str, float] | None = None,
                init: Mapping[str, float] | None = None,
                nodes: int = DEFAULT_AXIAL_NODES) -> TransitFit:
    """Poisson maximum-likelihood fit of (t0, x0, v) to a single-mode record.

    `free` selects the fitted parameters; the rest must appear in `fixed`.
    `init` overrides the data-driven starting point (one start, deterministic).
    1-sigma uncertainties come from the observed-information matrix, i.e. a
    finite-difference Hessian of the negative log-likelihood at the optimum.
    The arrival-time curvature is measured with a step no smaller than half
    a bin and of order its own sigma: shot noise leaves ripple on the
    likelihood below that scale and the micro-curvature at the optimum
    overstates the information.

    Raises NoTransitError for records without a significant dip; returns a
    non-converged result (best point found) when the evaluation budget runs
    out before the simplex settles.
    """
    free = tuple(free)
    if not free or any(f not in PARAM_NAMES for f in free):
        raise ValueError(f"free parameters must be a subset of {PARAM_NAMES}")
    fixed = dict(fixed or {})
    missing = [nm for nm in PARAM_NAMES if nm not in free and nm not in fixed]
    if missing:
        raise ValueError(f"parameters {missing} are neither free nor fixed")
    if record.n_bins < 10:
        raise ValueError("record must have at least 10 bins")

    mode_id, mids, live, counts, da, dc = _single_mode_arrays(record)
    mode = modes.get(mode_id)
    if mode is None:
        raise ConfigurationError(f"record references unknown mode id {mode_id!r}")
    det = Detuning(da, dc)
    cos_nodes = standing_wave_nodes(nodes)
    ct, st = math.cos(mode.theta), math.sin(mode.theta)

    def nll_full(t0, x0, v):
        ratio = transit_ratio_series(mids, mode.m, mode.n, mode.waist, ct, st,
                                     params.g0, da, dc, params.kappa, params.gamma,
                                     cos_nodes, x0, t0, v)
        return poisson_nll(record.r0 * ratio * live, counts)

    t0_init, x0_cands, v_init = _dip_heuristics(
        record, mode, params, mids, live, counts, det, nodes)
    defaults = {"t0": t0_init, "x0": x0_cands[0], "v": v_init}
    for nm, val in fixed.items():
        defaults[nm] = float(val)

    if init is not None:
        start_sets = [{**defaults, **{k: float(v) for k, v in init.items()}}]
    else:
        start_sets = []
        x0_list = x0_cands if "x0" in free else [defaults["x0"]]
        v_list = [v_init * f for f in (0.7, 1.0, 1.4)] if "v" in free else [defaults["v"]]
        for x0s in x0_list:
            for vs in v_list:
                start_sets.append({**defaults, "x0": x0s, "v": vs})

    bin_w = float(np.median(record.ends - record.starts))
    scale = {"t0": max(2.0 * bin_w, 1e-6), "x0": mode.waist, "v": max(v_init, 0.1)}

    def pack(values):
        return np.array([values[nm] / scale[nm] for nm in free])

    def unpack(z):
        values = dict(defaults)
        for i, nm in enumerate(free):
            values[nm] = z[i] * scale[nm]
        return values

    def objective(z):
        values = unpack(z)
        return nll_full(values["t0"], values["x0"], values["v"])

    budget = max(MAX_EVALS // (2 * len(start_sets)), 200)
    best = None
    n_eval = 0
    converged = False
    for s in start_sets:
        res = minimize(objective, pack(s), method="Nelder-Mead",
                       options=dict(maxfev=budget, xatol=1e-7, fatol=1e-9))
        n_eval += res.nfev
        res = minimize(objective, res.x, method="Nelder-Mead",
                       options=dict(maxfev=budget, xatol=1e-9, fatol=1e-11))
        n_eval += res.nfev
        if best is None or res.fun < best.fun:
            best = res
            converged = bool(res.success)

    values = unpack(best.x)
    theta = np.array([values[nm] for nm in free])

    def nll_free(th):
        vals = dict(values)
        for i, nm in enumerate(free):
            vals[nm] = th[i]
        return nll_full(vals["t0"], vals["x0"], vals["v"])

    # two-pass observed information: first with scale-based steps, then with
    # steps matched to the reported sigmas (arrival time floored at bin/2)
    steps = np.array([
        {"t0": 0.1 * bin_w, "x0": 0.02 * mode.waist, "v": 0.02 * max(abs(values["v"]), 0.1)}[nm]
        for nm in free
    ])
    sigmas = None
    for refine in range(2):
        hess = _hessian(nll_free, theta, steps)
        try:
            cov = np.linalg.inv(hess)
            sig = np.sqrt(np.abs(np.diag(cov)))
        except np.linalg.LinAlgError:
            sig = steps.copy()
        sigmas = sig
        if refine == 0:
            steps = np.array([
                max(3.0 * sig[i], 0.5 * bin_w) if nm == "t0" else
                max(0.5 * sig[i], 1e-12)
                for i, nm in enumerate(free)
            ])

    mu = record.r0 * transit_ratio_series(
        mids, mode.m, mode.n, mode.waist, ct, st, params.g0, da, dc,
        params.kappa, params.gamma, cos_nodes,
        values["x0"], values["t0"], values["v"],
    ) * live
    residuals = (counts - mu) / np.sqrt(np.maximum(mu, 1e-300))

    x0_hat = float(values["x0"])
    if mode.theta == 0.0 and mode.m == 1 and mode.n == 0 and abs(x0_hat) > 1e-12 * mode.waist:
        equivalent = equivalent_offsets(mode, x0_hat)
    elif mode.theta == 0.0:
        equivalent = (x0_hat,) if x0_hat == 0.0 else tuple(sorted((x0_hat, -x0_hat)))
    else:
        equivalent = (x0_hat,)

    return TransitFit(
        estimates={nm: float(values[nm]) for nm in PARAM_NAMES},
        sigmas={nm: float(sigmas[i]) for i, nm in enumerate(free)},
        free=free,
        fixed={k: float(v) for k, v in fixed.items()},
        deviance=poisson_deviance(counts, mu),
        residuals=residuals,
        equivalent_x0=equivalent,
        converged=converged,
        n_evaluations=n_eval,
        mode_id=mode_id,
    )


def equivalent_offsets(mode: ModeSpec, x0: float) -> tuple[float, ...]:
    """All offsets giving a transit signal identical to the one at x0.

    Valid for an untilted order-1 mode whose node is parallel to the travel
    direction (m, n) = (1, 0): the signal depends on the offset only through
    the amplitude A(u) = u exp(-u^2) with u = x0/w0, so besides the sign
    pair there is a conjugate amplitude root on the other side of the
    maximum at u = 1/sqrt(2).  Offsets at the maximum return the sign pair
    only.  Raises ZeroCouplingError at x0 = 0 (no signal at all).
    """
    if not (mode.m == 1 and mode.n == 0 and mode.theta == 0.0):
        raise ValueError(
            "equivalent offsets are defined for untilted (1, 0) modes whose"
            " amplitude depends on the offset alone"
        )
    if x0 == 0.0:
        raise ZeroCouplingError("offset on the nodal line gives no signal")
    w0 = mode.waist
    u0 = abs(x0) / w0
    u_peak = 1.0 / math.sqrt(2.0)
    a0 = float(amplitude_profile(u0))

    def gap(u):
        return float(amplitude_profile(u)) - a0

    offsets = {x0, -x0}
    if abs(u0 - u_peak) > 1e-9:
        if u0 < u_peak:
            lo, hi = u_peak, u_peak + 1.0
            while gap(hi) > 0:
                hi += 1.0
        else:
            lo, hi = 1e-18, u_peak
        conj = brentq(gap, lo, hi, xtol=1e-15, rtol=8.9e-16)
        if abs(conj - u0) > DEDUP_TOL_W0:
            offsets.update((conj * w0, -conj * w0))
    return tuple(sorted(offsets))


@dataclass(frozen=True)
class PositionCandidateSet:
    """Transverse positions compatible with two measured coupling magnitudes."""

    g10_mag: float
    g01_mag: float
    sigma10: float
    sigma01: float
    candidates: tuple[tuple[float, float], ...]
    generic: bool  # True when the full eightfold intersection multiplicity holds

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "position_candidates",
            "g10_mhz": self.g10_mag / (2 * math.pi) * 1e-6,
            "g01_mhz": self.g01_mag / (2 * math.pi) * 1e-6,
            "sigma10_mhz": self.sigma10 / (2 * math.pi) * 1e-6,
            "sigma01_mhz": self.sigma01 / (2 * math.pi) * 1e-6,
            "generic": self.generic,
            "candidates_um": [[x * 1e6, y * 1e6] for x, y in self.candidates],
        }


def _order1_pair(modes: Mapping[str, ModeSpec]) -> tuple[ModeSpec, ModeSpec]:
    m10 = next((m for m in modes.values() if (m.m, m.n) == (1, 0)), None)
    m01 = next((m for m in modes.values() if (m.m, m.n) == (0, 1)), None)
    if m10 is None or m01 is None:
        raise ConfigurationError("need both (1,0) and (0,1) modes in the table")
    if m10.waist != m01.waist or m10.theta != m01.theta:
        raise ConfigurationError("the two order-1 modes must share waist and tilt")
    return m10, m01


def _clamp_feasible(mag: float, sigma: float, gmax: float, label: str) -> float:
    if mag < 0:
        raise ValueError(f"{label} magnitude must be >= 0")
    if mag > gmax:
        if mag - sigma > gmax:
            raise InfeasibleMeasurementError(
                f"{label} magnitude {mag:.4g} exceeds the mode maximum {gmax:.4g}"
                " beyond its uncertainty"
            )
        return gmax
    return mag


def _ring_roots(target: float, c: float = 1.0) -> list[float]:
    """Positive roots of 2 t exp(-c t^2) = target (0, 1 or 2 of them)."""
    t_peak = 1.0 / math.sqrt(2.0 * c)
    peak = 2.0 * t_peak * math.exp(-0.5)
    if target > peak:
        return []
    if target == peak:
        return [t_peak]

    def f(t):
        return 2.0 * t * math.exp(-c * t * t) - target

    if target <= 0.0:
        return [0.0]
    hi = t_peak
    while f(hi) > 0:
        hi += 1.0
    inner = brentq(f, 0.0, t_peak, xtol=1e-15, rtol=8.9e-16)
    outer = brentq(f, t_peak, hi, xtol=1e-15, rtol=8.9e-16)
    return [inner, outer]


def invert_two_mode(g10_mag: float, g01_mag: float, modes: Mapping[str, ModeSpec],
                    params: CavityParams, sigma10: float = 0.0,
                    sigma01: float = 0.0) -> PositionCandidateSet:
    """Positions (x, y) with |g_10(x, y)| = g10_mag and |g_01(x, y)| = g01_mag.

    In waist units the contours are |2 u exp(-r^2)| = a and |2 v exp(-r^2)| = b;
    each magnitude draws two rings and the rings intersect in generically 8
    points, closed under both sign reflections.  Solutions are bracketed by
    sign changes on a first-quadrant grid (plus the analytic ray reduction
    u/v = a/b as extra seeds), refined with a 2-D root solve, deduplicated at
    1e-2 w0, and verified to reproduce both magnitudes to 1e-6 relative.
    On-axis (one magnitude zero) and at-maximum measurements yield fewer
    candidates; a magnitude above its mode maximum by more than its stated
    uncertainty raises InfeasibleMeasurementError.
    """
    m10, m01 = _order1_pair(modes)
    w0, theta = m10.waist, m10.theta
    gmax = params.g0 * _PEAK_RATIO
    a = _clamp_feasible(g10_mag, sigma10, gmax, "(1,0)") / params.g0
    b = _clamp_feasible(g01_mag, sigma01, gmax, "(0,1)") / params.g0

    first_quadrant: list[tuple[float, float]] = []
    if a == 0.0 and b == 0.0:
        first_quadrant = [(0.0, 0.0)]
    elif a == 0.0 or b == 0.0:
        roots = _ring_roots(max(a, b))
        first_quadrant = [(0.0, t) if a == 0.0 else (t, 0.0) for t in roots]
    else:
        seeds = []
        ratio = a / b
        for t in _ring_roots(b, 1.0 + ratio * ratio):
            seeds.append((ratio * t, t))

        span = math.sqrt(max(1.0, -math.log(min(a, b) / 2.0))) + 1.0
        span = min(span, 6.0)
        grid = np.linspace(0.0, span, 241)
        uu, vv = np.meshgrid(grid, grid)
        env = np.exp(-(uu * uu + vv * vv))
        f1 = 2.0 * uu * env - a
        f2 = 2.0 * vv * env - b
        sign_flip = lambda f: (
            (np.sign(f[:-1, :-1]) != np.sign(f[1:, :-1]))
            | (np.sign(f[:-1, :-1]) != np.sign(f[:-1, 1:]))
            | (np.sign(f[:-1, :-1]) != np.sign(f[1:, 1:]))
        )
        cells = np.argwhere(sign_flip(f1) & sign_flip(f2))
        seeds += [
            (0.5 * (grid[j] + grid[j + 1]), 0.5 * (grid[i] + grid[i + 1]))
            for i, j in cells
        ]

        def residual(z):
            u, v = z
            e = math.exp(-(u * u + v * v))
            return [2.0 * u * e - a, 2.0 * v * e - b]

        for seed in seeds:
            sol = root(residual, np.array(seed), method="hybr", tol=1e-14)
            u, v = sol.x
            if not sol.success and max(abs(r) for r in residual(sol.x)) > 1e-9:
                continue
            if u < -1e-9 or v < -1e-9:
                continue
            first_quadrant.append((max(u, 0.0), max(v, 0.0)))

    # dedup in the first quadrant, then reflect into the other quadrants
    kept: list[tuple[float, float]] = []
    for cand in sorted(first_quadrant):
        if all(math.hypot(cand[0] - k[0], cand[1] - k[1]) > DEDUP_TOL_W0 for k in kept):
            kept.append(cand)
    full = []
    for u, v in kept:
        for su in (1.0, -1.0):
            for sv in (1.0, -1.0):
                pt = (su * u, sv * v)
                if all(math.hypot(pt[0] - q[0], pt[1] - q[1]) > DEDUP_TOL_W0 for q in full):
                    full.append(pt)

    # verify: every candidate reproduces both magnitudes within 1e-6 relative
    verified = []
    ref = max(a, b, 1e-12)
    for u, v in full:
        e = math.exp(-(u * u + v * v))
        if (abs(abs(2.0 * u * e) - a) <= 1e-6 * ref
                and abs(abs(2.0 * v * e) - b) <= 1e-6 * ref):
            verified.append((u, v))

    ct, st = math.cos(theta), math.sin(theta)
    candidates = tuple(
        (w0 * (ct * u - st * v), w0 * (st * u + ct * v)) for u, v in sorted(verified)
    )
    return PositionCandidateSet(
        g10_mag=g10_mag, g01_mag=g01_mag, sigma10=sigma10, sigma01=sigma01,
        candidates=candidates, generic=len(candidates) == 8,
    )


@dataclass(frozen=True)
class CompanionPrediction:
    """Zero-free-parameter prediction of the other interleaved mode's trace."""

    mode_id: str
    starts: np.ndarray
    ends: np.ndarray
    observed: np.ndarray
    expected: np.ndarray
    deviance: float

    def to_csv(self) -> str:
        lines = ["t_start_us,t_end_us,observed,expected"]
        for s, e, o, x in zip(self.starts, self.ends, self.observed, self.expected):
            lines.append(f"{s * 1e6!r},{e * 1e6!r},{int(o)},{float(x)!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SwitchedTransitFit:
    fit: TransitFit
    companion: CompanionPrediction

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "switched_transit_fit",
            "fit": self.fit.to_json_dict(),
            "companion": {
                "mode": self.companion.mode_id,
                "deviance": self.companion.deviance,
                "n_bins": int(len(self.companion.observed)),
            },
        }


def fit_switched_transit(record: TransitRecord, modes: Mapping[str, ModeSpec],
                         params: CavityParams, fit_mode_id: str | None = None,
                         predict_mode_id: str | None = None,
                         nodes: int = DEFAULT_AXIAL_NODES) -> SwitchedTransitFit:
    """Fit one interleaved mode, predict the other with zero free parameters.

    By default the (0, 1) sub-record is fitted for (t0, x0, v) -- the lobe
    pair along the travel direction pins the speed independently -- and the
    (1, 0) trace is predicted from the fitted trajectory; both deviances are
    reported.
    """
    ids = list(dict.fromkeys(record.mode_ids))
    if len(ids) != 2:
        raise ConfigurationError(
            f"switched fit needs a record with exactly two mode ids, got {ids}"
        )
    for mode_id in ids:
        if mode_id not in modes:
            raise ConfigurationError(f"record references unknown mode id {mode_id!r}")
    if fit_mode_id is None:
        fit_mode_id = next(
            (i for i in ids if (modes[i].m, modes[i].n) == (0, 1)), ids[0])
    if predict_mode_id is None:
        predict_mode_id = next(i for i in ids if i != fit_mode_id)
    if fit_mode_id == predict_mode_id or fit_mode_id not in ids or predict_mode_id not in ids:
        raise ConfigurationError("fit and companion mode ids must be the record's two ids")

    fit = fit_transit(record.subset(fit_mode_id), modes, params, nodes=nodes)
    traj = Trajectory(x0=fit.estimates["x0"], t0=fit.estimates["t0"],
                      v=fit.estimates["v"])
    sub = record.subset(predict_mode_id)
    mu = expected_counts(sub, modes, params, traj, nodes=nodes)
    companion = CompanionPrediction(
        mode_id=predict_mode_id, starts=sub.starts, ends=sub.ends,
        observed=sub.counts.copy(), expected=mu,
        deviance=poisson_deviance(sub.counts, mu),
    )
    return SwitchedTransitFit(fit=fit, companion=companion)
