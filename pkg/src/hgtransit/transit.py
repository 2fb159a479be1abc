"""Trajectory model, probe schedules, expected flux and photon-count sampling.

An atom crosses the transverse plane on a straight vertical line,
x(t) = x0, y(t) = v (t - t0).  A probe schedule assigns one mode and one
detuning pair to each time segment; after every frequency switch the
intracavity light needs a settle time during which detected photons are
discarded.  Expected detected counts per bin are

    mu_i = R0 * <T/T0>_axial(|g(t_i)|) * live_i

with t_i the bin midpoint and live_i the bin duration minus its overlap
with the settle window, so a schedule with settle s and half-period h
collects exactly (1 - s/h) of the no-discard counts.  Counts are Poisson.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._kernels import transit_ratio_series
from .errors import ConfigurationError, ScheduleError
from .geometry import G_GRAV, CavityParams, TWO_PI
from .modes import ModeSpec
from .transmission import Detuning, standing_wave_nodes

DEFAULT_AXIAL_NODES = 64


@dataclass(frozen=True)
class Trajectory:
    """Straight vertical transit: signed offset x0 (m), center time t0 (s), speed v (m/s).

    Launch kinematics are optional bookkeeping tying v to a ballistic flight.
    """

    x0: float
    t0: float
    v: float
    launch_velocity: float | None = None
    launch_time: float | None = None


def position_at(traj: Trajectory, t):
    """Transverse position (x, y) at time t; t may be an array."""
    t = np.asarray(t, dtype=np.float64)
    y = traj.v * (t - traj.t0)
    x = np.broadcast_to(np.float64(traj.x0), y.shape)
    if y.ndim:
        return np.array(x), y
    return float(x), float(y)


def ballistic_launch_velocity(v_target: float, t_since_launch: float,
                              g: float = G_GRAV) -> float:
    """Launch speed that decelerates to v_target after t_since_launch seconds."""
    return v_target + g * t_since_launch


def ballistic_velocity(v_launch: float, t_since_launch: float,
                       g: float = G_GRAV) -> float:
    """Speed after t_since_launch seconds of gravitational deceleration."""
    return v_launch - g * t_since_launch


@dataclass(frozen=True)
class Segment:
    """One schedule segment: a single mode probed at fixed detunings."""

    mode_id: str
    detuning: Detuning
    start: float
    duration: float


@dataclass(frozen=True)
class ProbeSchedule:
    """Time-segmented probe assignment with settle discards and a bin grid.

    Segments must tile the observation window contiguously.  The first
    `settle` seconds of each segment are discarded (detection gated off);
    bins subdivide each segment and must not be wider than a segment.
    """

    segments: tuple[Segment, ...]
    settle: float
    bin_width: float
    switch_period: float | None = None

    def __post_init__(self):
        if not self.segments:
            raise ScheduleError("schedule needs at least one segment")
        if self.settle < 0:
            raise ScheduleError("settle must be >= 0")
        if self.bin_width <= 0:
            raise ScheduleError("bin width must be positive")
        prev_end = None
        for seg in self.segments:
            if seg.duration <= 0:
                raise ScheduleError("segment durations must be positive")
            if self.settle >= seg.duration:
                raise ScheduleError(
                    f"settle {self.settle} not below segment duration {seg.duration}"
                )
            if self.bin_width > seg.duration * (1 + 1e-9):
                raise ScheduleError("bin width exceeds a segment duration")
            if prev_end is not None and abs(seg.start - prev_end) > 1e-9 * seg.duration:
                raise ScheduleError("segments must be contiguous and non-overlapping")
            prev_end = seg.start + seg.duration

    @property
    def window(self) -> tuple[float, float]:
        return self.segments[0].start, self.segments[-1].start + self.segments[-1].duration

    def mode_ids(self) -> tuple[str, ...]:
        seen = []
        for seg in self.segments:
            if seg.mode_id not in seen:
                seen.append(seg.mode_id)
        return tuple(seen)

    def bins(self):
        """Bin grid as arrays (starts, ends, live, mode index) plus per-bin detunings.

        Bins of `bin_width` tile each segment from its start; a trailing
        remainder shorter than a bin is dropped.  live is the bin duration
        minus its overlap with the segment's settle window.
        """
        starts, ends, live, mode_ids, da, dc = [], [], [], [], [], []
        for seg in self.segments:
            n_bins = int(math.floor(seg.duration / self.bin_width + 1e-9))
            discard_end = seg.start + self.settle
            for i in range(n_bins):
                b0 = seg.start + i * self.bin_width
                b1 = b0 + self.bin_width
                overlap = max(0.0, min(b1, discard_end) - max(b0, seg.start))
                starts.append(b0)
                ends.append(b1)
                live.append((b1 - b0) - overlap)
                mode_ids.append(seg.mode_id)
                da.append(seg.detuning.delta_a)
                dc.append(seg.detuning.delta_c)
        return (np.array(starts), np.array(ends), np.array(live), mode_ids,
                np.array(da), np.array(dc))


def single_mode_schedule(mode_id: str, detuning: Detuning,
                         window: tuple[float, float], bin_width: float
                         ) -> ProbeSchedule:
    """Continuous probing of one mode over the window, no settle discard."""
    start, end = window
    if end <= start:
        raise ScheduleError("window end must exceed start")
    seg = Segment(mode_id=mode_id, detuning=detuning, start=start,
                  duration=end - start)
    return ProbeSchedule(segments=(seg,), settle=0.0, bin_width=bin_width)


def make_switched_schedule(mode_ids: tuple[str, str],
                           detunings: tuple[Detuning, Detuning],
                           switch_frequency: float, settle: float,
                           window: tuple[float, float],
                           bin_width: float | None = None) -> ProbeSchedule:
    """Alternate two probe tones at switch_frequency, half a period each.

    A 200 kHz switch gives 2.5 us segments; with a 300 ns settle the first
    0.3 us of each segment is discarded.  The window must hold a whole
    number of half-periods.  With identical mode ids and detunings the
    schedule degenerates to continuous single-mode probing.  Default bin
    width is one bin per segment.
    """
    if switch_frequency <= 0:
        raise ScheduleError("switch frequency must be positive")
    start, end = window
    if end <= start:
        raise ScheduleError("window end must exceed start")
    if mode_ids[0] == mode_ids[1] and detunings[0] == detunings[1]:
        return single_mode_schedule(mode_ids[0], detunings[0], window,
                                    bin_width if bin_width is not None else (end - start))
    half = 0.5 / switch_frequency
    if settle >= half:
        raise ScheduleError(f"settle {settle} not below half period {half}")
    n_half = (end - start) / half
    if abs(n_half - round(n_half)) > 1e-6:
        raise ScheduleError(
            f"window must span a whole number of half-periods ({half} s), got {n_half}"
        )
    n_half = int(round(n_half))
    segments = tuple(
        Segment(mode_id=mode_ids[i % 2], detuning=detunings[i % 2],
                start=start + i * half, duration=half)
        for i in range(n_half)
    )
    return ProbeSchedule(segments=segments, settle=settle,
                         bin_width=bin_width if bin_width is not None else half,
                         switch_period=1.0 / switch_frequency)


@dataclass(frozen=True)
class ExpectedFlux:
    """Expected detection per bin: rate (counts/s) at the midpoint and counts."""

    starts: np.ndarray
    ends: np.ndarray
    live: np.ndarray
    mode_ids: list[str]
    delta_a: np.ndarray
    delta_c: np.ndarray
    rate: np.ndarray
    expected: np.ndarray


def expected_flux(traj: Trajectory, schedule: ProbeSchedule,
                  modes: Mapping[str, ModeSpec], params: CavityParams,
                  r0: float, nodes: int = DEFAULT_AXIAL_NODES) -> ExpectedFlux:
    """Expected photon flux and counts per bin for a trajectory under a schedule.

    rate(t) = r0 * <T/T0>_axial(|g(mode(t), x0, v(t - t0))|) sampled at bin
    midpoints; expected counts scale with the live (non-discarded) fraction
    of each bin.
    """
    if traj.v == 0:
        raise ValueError("transit synthesis needs a nonzero vertical velocity")
    for mode_id in schedule.mode_ids():
        if mode_id not in modes:
            raise ConfigurationError(f"schedule references unknown mode id {mode_id!r}")
    starts, ends, live, mode_ids, da, dc = schedule.bins()
    mids = 0.5 * (starts + ends)
    cos_nodes = standing_wave_nodes(nodes)
    rate = np.empty_like(mids)
    for mode_id in set(mode_ids):
        mode = modes[mode_id]
        sel = np.array([mid == mode_id for mid in mode_ids])
        idx = np.where(sel)[0]
        # detunings are constant per mode within a schedule segment group
        for pair in {(da[i], dc[i]) for i in idx}:
            sub = idx[(da[idx] == pair[0]) & (dc[idx] == pair[1])]
            ratio = transit_ratio_series(
                np.ascontiguousarray(mids[sub]), mode.m, mode.n, mode.waist,
                math.cos(mode.theta), math.sin(mode.theta), params.g0,
                pair[0], pair[1], params.kappa, params.gamma, cos_nodes,
                traj.x0, traj.t0, traj.v,
            )
            rate[sub] = r0 * ratio
    return ExpectedFlux(starts=starts, ends=ends, live=live, mode_ids=mode_ids,
                        delta_a=da, delta_c=dc, rate=rate, expected=rate * live)


@dataclass(frozen=True)
class TransitRecord:
    """Binned photon counts with timing metadata and provenance.

    The generating trajectory and schedule are kept for synthetic records
    and absent (None) for ingested data.
    """

    starts: np.ndarray
    ends: np.ndarray
    mode_ids: list[str]
    counts: np.ndarray
    r0: float
    seed: int | None = None
    schedule: ProbeSchedule | None = None
    trajectory: Trajectory | None = None
    delta_a: np.ndarray | None = None
    delta_c: np.ndarray | None = None
    live: np.ndarray | None = None

    def __post_init__(self):
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        if np.any(np.diff(self.starts) < 0):
            raise ValueError("bins must be time-ordered")

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def live_durations(self) -> np.ndarray:
        if self.live is not None:
            return self.live
        return self.ends - self.starts

    def subset(self, mode_id: str) -> "TransitRecord":
        """Bins belonging to one mode id, preserving metadata."""
        sel = np.array([mid == mode_id for mid in self.mode_ids])
        if not sel.any():
            raise ConfigurationError(f"record has no bins for mode id {mode_id!r}")
        idx = np.where(sel)[0]
        return TransitRecord(
            starts=self.starts[idx], ends=self.ends[idx],
            mode_ids=[self.mode_ids[i] for i in idx], counts=self.counts[idx],
            r0=self.r0, seed=self.seed, schedule=self.schedule,
            trajectory=self.trajectory,
            delta_a=None if self.delta_a is None else self.delta_a[idx],
            delta_c=None if self.delta_c is None else self.delta_c[idx],
            live=None if self.live is None else self.live[idx],
        )

    def to_json_dict(self) -> dict:
        meta = {
            "schema": 1,
            "kind": "transit_record",
            "seed": self.seed,
            "r0_per_us": self.r0 * 1e-6,
            "schedule": None if self.schedule is None else _schedule_to_json(self.schedule),
            "trajectory": None if self.trajectory is None else _trajectory_to_json(self.trajectory),
            "bins": [
                [s * 1e6, e * 1e6, m, int(c)]
                for s, e, m, c in zip(self.starts, self.ends, self.mode_ids, self.counts)
            ],
        }
        return meta

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["t_start_us,t_end_us,mode_id,count"]
        for s, e, m, c in zip(self.starts, self.ends, self.mode_ids, self.counts):
            lines.append(f"{s * 1e6!r},{e * 1e6!r},{m},{int(c)}")
        return "\n".join(lines) + "\n"


def _trajectory_to_json(traj: Trajectory) -> dict:
    out = {"x0_um": traj.x0 * 1e6, "t0_us": traj.t0 * 1e6, "v_mps": traj.v}
    if traj.launch_velocity is not None:
        out["launch_v_mps"] = traj.launch_velocity
    if traj.launch_time is not None:
        out["launch_t_us"] = traj.launch_time * 1e6
    return out


def _schedule_to_json(schedule: ProbeSchedule) -> dict:
    return {
        "settle_us": schedule.settle * 1e6,
        "bin_us": schedule.bin_width * 1e6,
        "switch_khz": None if schedule.switch_period is None
        else 1e-3 / schedule.switch_period,
        "segments": [
            {
                "mode": seg.mode_id,
                "da_mhz": seg.detuning.delta_a / TWO_PI * 1e-6,
                "dc_mhz": seg.detuning.delta_c / TWO_PI * 1e-6,
                "start_us": seg.start * 1e6,
                "duration_us": seg.duration * 1e6,
            }
            for seg in schedule.segments
        ],
    }


def record_from_json_dict(payload: dict) -> TransitRecord:
    """Inverse of TransitRecord.to_json_dict (schedule/trajectory restored if present)."""
    bins = payload["bins"]
    starts = np.array([b[0] for b in bins]) * 1e-6
    ends = np.array([b[1] for b in bins]) * 1e-6
    mode_ids = [b[2] for b in bins]
    counts = np.array([b[3] for b in bins], dtype=np.int64)
    sched = payload.get("schedule")
    schedule = None
    if sched is not None:
        segments = tuple(
            Segment(
                mode_id=s["mode"],
                detuning=Detuning(s["da_mhz"] * TWO_PI * 1e6, s["dc_mhz"] * TWO_PI * 1e6),
                start=s["start_us"] * 1e-6,
                duration=s["duration_us"] * 1e-6,
            )
            for s in sched["segments"]
        )
        schedule = ProbeSchedule(
            segments=segments, settle=sched["settle_us"] * 1e-6,
            bin_width=sched["bin_us"] * 1e-6,
            switch_period=None if sched.get("switch_khz") is None
            else 1e-3 / sched["switch_khz"],
        )
    tr = payload.get("trajectory")
    trajectory = None
    if tr is not None:
        trajectory = Trajectory(
            x0=tr["x0_um"] * 1e-6, t0=tr["t0_us"] * 1e-6, v=tr["v_mps"],
            launch_velocity=tr.get("launch_v_mps"),
            launch_time=None if tr.get("launch_t_us") is None else tr["launch_t_us"] * 1e-6,
        )
    live = da = dc = None
    if schedule is not None:
        _, _, live, _, da, dc = schedule.bins()
    return TransitRecord(starts=starts, ends=ends, mode_ids=mode_ids, counts=counts,
                         r0=payload["r0_per_us"] * 1e6, seed=payload.get("seed"),
                         schedule=schedule, trajectory=trajectory,
                         delta_a=da, delta_c=dc, live=live)


def sample_counts(flux: ExpectedFlux, seed: int, r0: float,
                  schedule: ProbeSchedule | None = None,
                  trajectory: Trajectory | None = None) -> TransitRecord:
    """Draw one Poisson realization of the expected per-bin counts.

    Counts are independent Poisson with mean = rate * live duration;
    a fixed seed reproduces the record bit for bit.
    """
    if np.any(flux.expected < 0):
        raise ValueError("expected counts must be >= 0")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(flux.expected).astype(np.int64)
    return TransitRecord(
        starts=flux.starts, ends=flux.ends, mode_ids=list(flux.mode_ids),
        counts=counts, r0=r0, seed=seed, schedule=schedule, trajectory=trajectory,
        delta_a=flux.delta_a, delta_c=flux.delta_c, live=flux.live,
    )


def simulate_transit(traj: Trajectory, schedule: ProbeSchedule,
                     modes: Mapping[str, ModeSpec], params: CavityParams,
                     r0: float, seed: int,
                     nodes: int = DEFAULT_AXIAL_NODES) -> TransitRecord:
    """Synthesize one transit record (expected flux + Poisson sampling)."""
    flux = expected_flux(traj, schedule, modes, params, r0, nodes=nodes)
    return sample_counts(flux, seed, r0, schedule=schedule, trajectory=traj)


def simulate_ensemble(trajectories: Sequence[Trajectory], schedule: ProbeSchedule,
                      modes: Mapping[str, ModeSpec], params: CavityParams,
                      r0: float, master_seed: int,
                      nodes: int = DEFAULT_AXIAL_NODES) -> list[TransitRecord]:
    """Independent transits; transit i is sampled with seed master_seed + i."""
    return [
        simulate_transit(traj, schedule, modes, params, r0, master_seed + i, nodes=nodes)
        for i, traj in enumerate(trajectories)
    ]
