"""Weak-probe transmission of the coupled atom-cavity system.

Relative transmission for an atom with coupling g:

    T/T0 = kappa^2 (Delta_A^2 + gamma^2)
           / [ (Delta_C gamma + Delta_A kappa)^2 + (g^2 - Delta_A Delta_C + gamma kappa)^2 ]

normalized to the resonant empty cavity.  The fast axial motion through the
standing wave is handled by averaging the transmission (not the coupling)
over the standing-wave phase with a uniform weight, the natural choice for
motion much faster than the transit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import CavityParams


@dataclass(frozen=True)
class Detuning:
    """Probe detunings: delta_a = w_L - w_A, delta_c = w_L - w_C (rad/s)."""

    delta_a: float = 0.0
    delta_c: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.delta_a) and math.isfinite(self.delta_c)):
            raise ValueError("detunings must be finite")


def transmission_ratio(g, det: Detuning, params: CavityParams):
    """Relative transmission T/T0 for transverse coupling g (rad/s), elementwise.

    Even in g; equals the empty-cavity Lorentzian kappa^2/(delta_c^2+kappa^2)
    at g = 0 and (1 + g^2/(gamma kappa))^-2 on twofold resonance.
    """
    g = np.asarray(g, dtype=np.float64)
    num = params.kappa**2 * (det.delta_a**2 + params.gamma**2)
    den = (det.delta_c * params.gamma + det.delta_a * params.kappa) ** 2 + (
        g * g - det.delta_a * det.delta_c + params.gamma * params.kappa
    ) ** 2
    out = num / den
    return out if out.ndim else float(out)


def standing_wave_nodes(nodes: int) -> np.ndarray:
    """cos(phi_j) at the midpoint phases phi_j = (j + 1/2) pi / nodes."""
    if nodes < 8:
        raise ValueError(f"need at least 8 quadrature nodes, got {nodes}")
    phi = (np.arange(nodes) + 0.5) * math.pi / nodes
    return np.cos(phi)


def axial_average(g_transverse, det: Detuning, params: CavityParams,
                  nodes: int = 64):
    """Standing-wave average (1/pi) Int_0^pi T/T0(g cos phi) dphi.

    Fixed-node midpoint rule (deterministic for a given node count); the
    integrand is pi-periodic and analytic, so the rule converges
    geometrically at a rate set by a = g^2/(gamma kappa).  The default 64
    nodes are accurate to ~3e-6 relative at the strongest on-axis coupling
    (a ~ 61) and to better than 1e-8 for g below ~2pi * 10 MHz; pass more
    nodes (512 covers a up to 1e3 at 1e-12) when needed.
    """
    cos_nodes = standing_wave_nodes(nodes)
    g = np.asarray(g_transverse, dtype=np.float64)
    gsq = (g[..., None] * cos_nodes) ** 2
    out = transmission_ratio(np.sqrt(gsq), det, params).mean(axis=-1)
    return out if out.ndim else float(out)


def mode_selectivity(splitting: float, params: CavityParams) -> float:
    """Suppression 1 + (splitting/kappa)^2 of a neighbour mode's excitation.

    Ratio of on-resonance to off-resonance empty-cavity transmission at a
    frequency offset `splitting` (rad/s).
    """
    if splitting < 0:
        raise ValueError("splitting must be >= 0")
    return 1.0 + (splitting / params.kappa) ** 2
