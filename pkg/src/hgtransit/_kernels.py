"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

The numba backend is used whenever numba imports cleanly, unless the
environment variable ``HGTRANSIT_NO_NUMBA`` is set to a truthy value
("1", "true", "yes", "on"), in which case the vectorized numpy
implementations are used instead.  ``ACTIVE_BACKEND`` records the choice.
Both implementations stay importable (``numpy_backend`` / ``numba_backend``)
so the benchmark can time them against each other; they agree to rounding.

Kernel conventions: positions enter in units of the mode waist via
u = sqrt(2) x / w0, couplings and rates in rad/s, and the axial
standing-wave average is a midpoint rule over the phase nodes passed in
as cos(phi_j).
"""

import math
import os

import numpy as np

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)
_PI_M4 = math.pi ** -0.25


def _numba_disabled() -> bool:
    return os.environ.get("HGTRANSIT_NO_NUMBA", "").strip().lower() in {
        "1", "true", "yes", "on",
    }


# --------------------------------------------------------------------------
# numpy backend
# --------------------------------------------------------------------------

def np_hermite_fn(m, u):
    """Orthonormal Hermite function phi_m(u) = H_m(u) exp(-u^2/2) / (2^m m! sqrt(pi))^(1/2).

    Evaluated by the stable normalized three-term recurrence; values stay
    O(1) for any order, so high orders neither overflow nor underflow.
    """
    u = np.asarray(u, dtype=np.float64)
    h0 = _PI_M4 * np.exp(-0.5 * u * u)
    if m == 0:
        return h0
    h1 = SQRT2 * u * h0
    if m == 1:
        return h1
    for k in range(1, m):
        h0, h1 = h1, u * math.sqrt(2.0 / (k + 1)) * h1 - math.sqrt(k / (k + 1.0)) * h0
    return h1


def np_transmission_ratio(gsq, delta_a, delta_c, kappa, gamma):
    """Weak-probe transmission T/T0 for coupling-squared gsq (elementwise)."""
    num = kappa * kappa * (delta_a * delta_a + gamma * gamma)
    den = (delta_c * gamma + delta_a * kappa) ** 2 + (
        gsq - delta_a * delta_c + gamma * kappa
    ) ** 2
    return num / den


def np_axial_average(g, delta_a, delta_c, kappa, gamma, cos_nodes):
    """Standing-wave average of T/T0 over coupling g*cos(phi) (g broadcastable)."""
    g = np.asarray(g, dtype=np.float64)
    gsq = (g[..., None] * cos_nodes) ** 2
    return np_transmission_ratio(gsq, delta_a, delta_c, kappa, gamma).mean(axis=-1)


def np_transit_ratio_series(
    mids, m, n, w0, cos_t, sin_t, g0, delta_a, delta_c, kappa, gamma,
    cos_nodes, x0, t0, v,
):
    """Axially averaged T/T0 at bin midpoints for a straight vertical trajectory.

    The atom sits at (x0, v*(t - t0)); the mode frame is rotated by the
    tilt angle whose cosine/sine are passed in.
    """
    mids = np.asarray(mids, dtype=np.float64)
    y = v * (mids - t0)
    xr = cos_t * x0 + sin_t * y
    yr = -sin_t * x0 + cos_t * y
    phi_x = np_hermite_fn(m, SQRT2 * xr / w0)
    phi_y = np_hermite_fn(n, SQRT2 * yr / w0)
    g = g0 * SQRT_PI * phi_x * phi_y
    return np_axial_average(g, delta_a, delta_c, kappa, gamma, cos_nodes)


def np_lag_products(counts, kmax):
    """Lagged pair sums for the correlation estimator.

    Returns (s, q, pairs) where, for lag k > 0, s[k] = sum_t n_t n_{t+k},
    q[k] = sum_t (n_t n_{t+k})^2 and pairs[k] = T - k.  At k = 0 the
    self-pairing is removed: products are n (n - 1).
    """
    counts = np.asarray(counts, dtype=np.float64)
    T = counts.shape[0]
    s = np.empty(kmax + 1)
    q = np.empty(kmax + 1)
    pairs = np.empty(kmax + 1)
    p0 = counts * (counts - 1.0)
    s[0] = p0.sum()
    q[0] = (p0 * p0).sum()
    pairs[0] = T
    for k in range(1, kmax + 1):
        prod = counts[: T - k] * counts[k:]
        s[k] = prod.sum()
        q[k] = (prod * prod).sum()
        pairs[k] = T - k
    return s, q, pairs


def np_poisson_nll(mu, counts):
    """Poisson negative log-likelihood up to the data-only constant."""
    mu = np.maximum(np.asarray(mu, dtype=np.float64), 1e-300)
    return float(np.sum(mu - counts * np.log(mu)))


_NUMPY_BACKEND = {
    "hermite_fn": np_hermite_fn,
    "transmission_ratio": np_transmission_ratio,
    "axial_average": np_axial_average,
    "transit_ratio_series": np_transit_ratio_series,
    "lag_products": np_lag_products,
    "poisson_nll": np_poisson_nll,
}


# --------------------------------------------------------------------------
# numba backend
# --------------------------------------------------------------------------

_NUMBA_BACKEND = None

if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None

    if njit is not None:

        @njit(cache=True)
        def _phi_scalar(m, u):
            h0 = _PI_M4 * math.exp(-0.5 * u * u)
            if m == 0:
                return h0
            h1 = SQRT2 * u * h0
            for k in range(1, m):
                h2 = u * math.sqrt(2.0 / (k + 1)) * h1 - math.sqrt(k / (k + 1.0)) * h0
                h0 = h1
                h1 = h2
            return h1

        @njit(cache=True)
        def nb_hermite_fn(m, u):
            out = np.empty_like(u)
            for i in range(u.shape[0]):
                out[i] = _phi_scalar(m, u[i])
            return out

        @njit(cache=True)
        def _ratio_scalar(gsq, delta_a, delta_c, kappa, gamma):
            num = kappa * kappa * (delta_a * delta_a + gamma * gamma)
            den = (delta_c * gamma + delta_a * kappa) ** 2 + (
                gsq - delta_a * delta_c + gamma * kappa
            ) ** 2
            return num / den

        @njit(cache=True)
        def nb_transmission_ratio(gsq, delta_a, delta_c, kappa, gamma):
            out = np.empty_like(gsq)
            for i in range(gsq.shape[0]):
                out[i] = _ratio_scalar(gsq[i], delta_a, delta_c, kappa, gamma)
            return out

        @njit(cache=True)
        def _axial_scalar(g, delta_a, delta_c, kappa, gamma, cos_nodes):
            acc = 0.0
            for j in range(cos_nodes.shape[0]):
                gc = g * cos_nodes[j]
                acc += _ratio_scalar(gc * gc, delta_a, delta_c, kappa, gamma)
            return acc / cos_nodes.shape[0]

        @njit(cache=True)
        def nb_axial_average(g, delta_a, delta_c, kappa, gamma, cos_nodes):
            out = np.empty_like(g)
            for i in range(g.shape[0]):
                out[i] = _axial_scalar(g[i], delta_a, delta_c, kappa, gamma, cos_nodes)
            return out

        @njit(cache=True)
        def nb_transit_ratio_series(
            mids, m, n, w0, cos_t, sin_t, g0, delta_a, delta_c, kappa, gamma,
            cos_nodes, x0, t0, v,
        ):
            out = np.empty_like(mids)
            for i in range(mids.shape[0]):
                y = v * (mids[i] - t0)
                xr = cos_t * x0 + sin_t * y
                yr = -sin_t * x0 + cos_t * y
                g = g0 * SQRT_PI * _phi_scalar(m, SQRT2 * xr / w0) * _phi_scalar(
                    n, SQRT2 * yr / w0
                )
                out[i] = _axial_scalar(g, delta_a, delta_c, kappa, gamma, cos_nodes)
            return out

        @njit(cache=True)
        def nb_lag_products(counts, kmax):
            T = counts.shape[0]
            s = np.empty(kmax + 1)
            q = np.empty(kmax + 1)
            pairs = np.empty(kmax + 1)
            s0 = 0.0
            q0 = 0.0
            for t in range(T):
                p = counts[t] * (counts[t] - 1.0)
                s0 += p
                q0 += p * p
            s[0] = s0
            q[0] = q0
            pairs[0] = T
            for k in range(1, kmax + 1):
                sk = 0.0
                qk = 0.0
                for t in range(T - k):
                    p = counts[t] * counts[t + k]
                    sk += p
                    qk += p * p
                s[k] = sk
                q[k] = qk
                pairs[k] = T - k
            return s, q, pairs

        @njit(cache=True)
        def nb_poisson_nll(mu, counts):
            acc = 0.0
            for i in range(mu.shape[0]):
                m_i = mu[i] if mu[i] > 1e-300 else 1e-300
                acc += m_i - counts[i] * math.log(m_i)
            return acc

        _NUMBA_BACKEND = {
            "hermite_fn": nb_hermite_fn,
            "transmission_ratio": nb_transmission_ratio,
            "axial_average": nb_axial_average,
            "transit_ratio_series": nb_transit_ratio_series,
            "lag_products": nb_lag_products,
            "poisson_nll": nb_poisson_nll,
        }


if _NUMBA_BACKEND is not None:
    ACTIVE_BACKEND = "numba"
    _ACTIVE = _NUMBA_BACKEND
else:
    ACTIVE_BACKEND = "numpy"
    _ACTIVE = _NUMPY_BACKEND

numpy_backend = _NUMPY_BACKEND
numba_backend = _NUMBA_BACKEND

hermite_fn_1d = _ACTIVE["hermite_fn"]
transmission_ratio_1d = _ACTIVE["transmission_ratio"]
axial_average_1d = _ACTIVE["axial_average"]
transit_ratio_series = _ACTIVE["transit_ratio_series"]
lag_products = _ACTIVE["lag_products"]
poisson_nll = _ACTIVE["poisson_nll"]
