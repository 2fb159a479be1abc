"""Command-line interface: JSON-configured scenarios with JSON/CSV outputs.

Subcommands: spectrum, mode-image, simulate, fit, invert, g2, scaling,
validate.  Global flags: --config, --seed (overrides the config seed),
--out-dir.  Exit codes: 0 ok, 2 validation failure, 3 runtime failure.

Config units at the boundary (converted to SI and rad/s internally):
lengths in um unless the field name says otherwise (mirror radii in mm),
frequencies and rates as nu = omega/2pi in MHz (kHz for the switching
rate), times in us, velocities in m/s, count rates in counts/us.  Offsets
may be given in waist units (x0_w0) or microns (x0_um).  Identical config
and seed produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .correlation import (
    average_over_transits,
    characteristic_frequency,
    significant_maxima,
)
from .errors import InsufficientStructureError
from .geometry import (
    TWO_PI,
    CavityParams,
    derive,
    family_spectrum,
    family_splitting,
    with_astigmatic_splitting,
)
from .inference import fit_switched_transit, fit_transit, invert_two_mode
from .modes import ModeSpec, coupling, intensity_grid, scaling_report
from .transit import (
    Trajectory,
    TransitRecord,
    make_switched_schedule,
    record_from_json_dict,
    simulate_ensemble,
    single_mode_schedule,
)
from .transmission import Detuning

SCHEMA_VERSION = 1
KINDS = ("spectrum", "mode-image", "simulate", "fit", "invert", "g2", "scaling")
_MHZ = TWO_PI * 1e6


class _Validator:
    def __init__(self):
        self.errors: list[str] = []

    def err(self, path: str, message: str):
        self.errors.append(f"{path}: {message}")

    def require(self, obj: dict, path: str, key: str, types, default=None):
        if key not in obj:
            if default is not None:
                return default
            self.err(f"{path}.{key}", "missing required field")
            return None
        value = obj[key]
        if not isinstance(value, types):
            self.err(f"{path}.{key}", f"expected {types}, got {type(value).__name__}")
            return None
        return value


@dataclass
class ScenarioConfig:
    params: CavityParams
    modes: dict[str, ModeSpec]
    waist: float
    kind: str
    scenario: dict
    seed: int | None
    out_dir: str


_NUMBER = (int, float)


def validate(text: str, seed_override: int | None = None,
             out_dir_override: str | None = None
             ) -> tuple[ScenarioConfig | None, list[str]]:
    """Parse and validate a config document, collecting every error found."""
    v = _Validator()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        return None, [f"$: invalid JSON ({exc})"]
    if not isinstance(doc, dict):
        return None, ["$: top level must be an object"]
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        v.err("schema", f"expected {SCHEMA_VERSION}, got {schema!r}")

    cav = doc.get("cavity")
    params = None
    if not isinstance(cav, dict):
        v.err("cavity", "missing cavity block")
    else:
        length = v.require(cav, "cavity", "length_um", _NUMBER)
        roc = v.require(cav, "cavity", "roc_mm", list)
        wavelength = v.require(cav, "cavity", "wavelength_nm", _NUMBER)
        kappa = v.require(cav, "cavity", "kappa_mhz", _NUMBER)
        gamma = v.require(cav, "cavity", "gamma_mhz", _NUMBER)
        g0 = v.require(cav, "cavity", "g0_mhz", _NUMBER)
        if roc is not None and (len(roc) != 2 or not all(isinstance(r, _NUMBER) for r in roc)):
            v.err("cavity.roc_mm", "expected two numbers [R1, R2]")
            roc = None
        if None not in (length, roc, wavelength, kappa, gamma, g0):
            kwargs = {}
            if "roc_x_mm" in cav or "roc_y_mm" in cav:
                for key, name in (("roc_x_mm", "roc_x"), ("roc_y_mm", "roc_y")):
                    pair = cav.get(key)
                    if not (isinstance(pair, list) and len(pair) == 2
                            and all(isinstance(r, _NUMBER) for r in pair)):
                        v.err(f"cavity.{key}", "expected two numbers")
                    else:
                        kwargs[name] = (pair[0] * 1e-3, pair[1] * 1e-3)
            if "astig_axis_deg" in cav:
                kwargs["astig_axis"] = math.radians(cav["astig_axis_deg"])
            try:
                params = CavityParams(
                    length=length * 1e-6, roc1=roc[0] * 1e-3, roc2=roc[1] * 1e-3,
                    wavelength=wavelength * 1e-9, kappa=kappa * _MHZ,
                    gamma=gamma * _MHZ, g0=g0 * _MHZ, **kwargs,
                )
                splitting = cav.get("splitting_mhz")
                if splitting is not None:
                    if not isinstance(splitting, _NUMBER) or splitting < 0:
                        v.err("cavity.splitting_mhz", "expected a number >= 0")
                    elif "roc_x_mm" in cav or "roc_y_mm" in cav:
                        v.err("cavity.splitting_mhz",
                              "give either explicit per-axis radii or a splitting, not both")
                    else:
                        params = with_astigmatic_splitting(params, splitting * _MHZ)
            except ValueError as exc:
                v.err("cavity", str(exc))

    waist = None
    if params is not None:
        waist = derive(params).waist

    modes: dict[str, ModeSpec] = {}
    mode_block = doc.get("modes", {})
    if not isinstance(mode_block, dict):
        v.err("modes", "expected an object of id -> mode spec")
        mode_block = {}
    for mode_id, spec in mode_block.items():
        if not isinstance(spec, dict):
            v.err(f"modes.{mode_id}", "expected an object")
            continue
        m = v.require(spec, f"modes.{mode_id}", "m", int)
        n = v.require(spec, f"modes.{mode_id}", "n", int)
        tilt = spec.get("tilt_deg", 0.0)
        w_um = spec.get("waist_um")
        if m is None or n is None:
            continue
        w = w_um * 1e-6 if isinstance(w_um, _NUMBER) else waist
        if w is None:
            v.err(f"modes.{mode_id}", "no waist available (invalid cavity block)")
            continue
        try:
            modes[mode_id] = ModeSpec(m=m, n=n, waist=w, theta=math.radians(tilt))
        except ValueError as exc:
            v.err(f"modes.{mode_id}", str(exc))

    scenario = doc.get("scenario")
    kind = None
    if not isinstance(scenario, dict):
        v.err("scenario", "missing scenario block")
        scenario = {}
    else:
        kind = scenario.get("kind")
        if kind not in KINDS:
            v.err("scenario.kind", f"expected one of {KINDS}, got {kind!r}")

    seed = seed_override if seed_override is not None else doc.get("seed")
    if seed is not None and not isinstance(seed, int):
        v.err("seed", "expected an integer")
        seed = None
    if kind in ("simulate", "fit", "g2") and seed is None:
        needs_seed = not (kind == "fit" and "record" in scenario)
        if needs_seed:
            v.err("seed", f"stochastic scenario {kind!r} needs a seed")

    if kind is not None and params is not None:
        _validate_scenario(v, kind, scenario, modes)

    out_dir = out_dir_override or doc.get("out_dir", "out")
    if v.errors or params is None:
        return None, v.errors
    return ScenarioConfig(params=params, modes=modes, waist=waist, kind=kind,
                          scenario=scenario, seed=seed, out_dir=out_dir), []


def _validate_scenario(v: _Validator, kind: str, sc: dict, modes: dict):
    path = "scenario"

    def need_mode(key="mode"):
        mode_id = sc.get(key)
        if not isinstance(mode_id, str) or mode_id not in modes:
            v.err(f"{path}.{key}", f"mode id {mode_id!r} not in the mode table")

    if kind == "spectrum":
        fams = sc.get("families", [0, 1, 2])
        if not (isinstance(fams, list) and all(isinstance(f, int) and f >= 0 for f in fams)
                and fams):
            v.err(f"{path}.families", "expected a non-empty list of ints >= 0")
    elif kind == "mode-image":
        need_mode()
        res = sc.get("resolution", 301)
        if not (isinstance(res, int) and res >= 2):
            v.err(f"{path}.resolution", "expected an int >= 2")
        if not any(isinstance(sc.get(k), _NUMBER) and sc.get(k) > 0
                   for k in ("extent_w0", "extent_um")):
            v.err(f"{path}.extent_w0", "need a positive extent_w0 or extent_um")
    elif kind in ("simulate", "fit"):
        if kind == "fit" and "record" in sc:
            if not isinstance(sc["record"], str):
                v.err(f"{path}.record", "expected a file path")
        else:
            if not isinstance(sc.get("trajectory"), dict):
                v.err(f"{path}.trajectory", "missing trajectory block")
            _validate_schedule(v, sc.get("schedule"), modes)
        if kind == "fit":
            free = sc.get("free", ["t0", "x0", "v"])
            if not (isinstance(free, list) and free
                    and all(f in ("t0", "x0", "v") for f in free)):
                v.err(f"{path}.free", "expected a non-empty subset of ['t0','x0','v']")
    elif kind == "invert":
        if "truth_w0" in sc:
            t = sc["truth_w0"]
            if not (isinstance(t, list) and len(t) == 2
                    and all(isinstance(x, _NUMBER) for x in t)):
                v.err(f"{path}.truth_w0", "expected [x, y] in waist units")
        else:
            for key in ("g10_mhz", "g01_mhz"):
                val = sc.get(key)
                if not (isinstance(val, _NUMBER) and val >= 0):
                    v.err(f"{path}.{key}", "expected a number >= 0")
        if not modes:
            v.err("modes", "invert needs (1,0) and (0,1) modes in the table")
    elif kind == "g2":
        need_mode()
        for key, cond in (("transits", lambda x: isinstance(x, int) and x >= 1),
                          ("v_mps", lambda x: isinstance(x, _NUMBER) and x != 0),
                          ("tau_max_us", lambda x: isinstance(x, _NUMBER) and x > 0)):
            if not cond(sc.get(key)):
                v.err(f"{path}.{key}", "missing or invalid")
        rng = sc.get("x0_w0_range", [0.0, 0.7])
        if not (isinstance(rng, list) and len(rng) == 2
                and all(isinstance(x, _NUMBER) for x in rng) and 0 <= rng[0] <= rng[1]):
            v.err(f"{path}.x0_w0_range", "expected [lo, hi] with 0 <= lo <= hi")
        win = sc.get("window_us")
        if not (isinstance(win, list) and len(win) == 2
                and all(isinstance(x, _NUMBER) for x in win) and win[0] < win[1]):
            v.err(f"{path}.window_us", "expected [start, end] with start < end")
    elif kind == "scaling":
        orders = sc.get("orders")
        if isinstance(orders, dict):
            lo, hi = orders.get("from"), orders.get("to")
            if not (isinstance(lo, int) and isinstance(hi, int) and 1 <= lo < hi):
                v.err(f"{path}.orders", "expected {'from': int >= 1, 'to': int > from}")
        elif not (isinstance(orders, list) and len(orders) >= 2
                  and all(isinstance(o, int) and o >= 1 for o in orders)):
            v.err(f"{path}.orders", "expected a list of >= 2 ints >= 1 or a from/to object")


def _validate_schedule(v: _Validator, sched: dict | None, modes: dict):
    path = "scenario.schedule"
    if not isinstance(sched, dict):
        v.err(path, "missing schedule block")
        return
    stype = sched.get("type")
    if stype not in ("single", "switched"):
        v.err(f"{path}.type", f"expected 'single' or 'switched', got {stype!r}")
        return
    win = sched.get("window_us")
    if not (isinstance(win, list) and len(win) == 2
            and all(isinstance(x, _NUMBER) for x in win) and win[0] < win[1]):
        v.err(f"{path}.window_us", "expected [start, end] with start < end")
    if stype == "single":
        mode_id = sched.get("mode")
        if not isinstance(mode_id, str) or mode_id not in modes:
            v.err(f"{path}.mode", f"mode id {mode_id!r} not in the mode table")
        if not (isinstance(sched.get("bin_us"), _NUMBER) and sched["bin_us"] > 0):
            v.err(f"{path}.bin_us", "expected a positive bin width in us")
    else:
        pair = sched.get("modes")
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(m, str) and m in modes for m in pair)):
            v.err(f"{path}.modes", "expected two mode ids from the mode table")
        if not (isinstance(sched.get("switch_khz"), _NUMBER) and sched["switch_khz"] > 0):
            v.err(f"{path}.switch_khz", "expected a positive switching rate in kHz")
        settle = sched.get("settle_us", 0.0)
        if not (isinstance(settle, _NUMBER) and settle >= 0):
            v.err(f"{path}.settle_us", "expected a settle time >= 0 in us")


# --------------------------------------------------------------------------
# scenario execution
# --------------------------------------------------------------------------


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _build_trajectory(block: dict, waist: float) -> Trajectory:
    if "x0_w0" in block:
        x0 = block["x0_w0"] * waist
    else:
        x0 = block.get("x0_um", 0.0) * 1e-6
    return Trajectory(
        x0=x0,
        t0=block.get("t0_us", 0.0) * 1e-6,
        v=block["v_mps"],
        launch_velocity=block.get("launch_v_mps"),
        launch_time=None if block.get("launch_t_us") is None
        else block["launch_t_us"] * 1e-6,
    )


def _build_schedule(block: dict):
    window = (block["window_us"][0] * 1e-6, block["window_us"][1] * 1e-6)
    if block["type"] == "single":
        det = Detuning(block.get("da_mhz", 0.0) * _MHZ, block.get("dc_mhz", 0.0) * _MHZ)
        return single_mode_schedule(block["mode"], det, window, block["bin_us"] * 1e-6)
    da = block.get("da_mhz", [0.0, 0.0])
    dc = block.get("dc_mhz", [0.0, 0.0])
    dets = (Detuning(da[0] * _MHZ, dc[0] * _MHZ), Detuning(da[1] * _MHZ, dc[1] * _MHZ))
    bin_w = block.get("bin_us")
    return make_switched_schedule(
        tuple(block["modes"]), dets, block["switch_khz"] * 1e3,
        block.get("settle_us", 0.0) * 1e-6, window,
        None if bin_w is None else bin_w * 1e-6,
    )


def _run_spectrum(cfg: ScenarioConfig, out: Path) -> list[str]:
    d = derive(cfg.params)
    q = cfg.scenario.get("q", 1)
    families = cfg.scenario.get("families", [0, 1, 2])
    fam_entries = []
    csv_lines = ["family,m,n,freq_thz,offset_mhz"]
    for fam in families:
        members = family_spectrum(cfg.params, fam, q)
        base = min(freq for _, _, freq in members)
        entries = []
        for m, n, freq in members:
            off = (freq - base) / _MHZ
            entries.append({"m": m, "n": n, "freq_thz": freq / TWO_PI / 1e12,
                            "offset_mhz": off})
            csv_lines.append(
                f"{fam},{m},{n},{freq / TWO_PI / 1e12!r},{off!r}")
        fam_entries.append({"family": fam, "members": entries})
    payload = {
        "schema": 1,
        "kind": "spectrum",
        "derived": {
            "fsr_thz": d.fsr / 1e12,
            "waist_um": d.waist * 1e6,
            "linewidth_mhz": d.linewidth / 1e6,
            "finesse": d.finesse,
        },
        "n1_splitting_mhz": family_splitting(cfg.params, q) / _MHZ,
        "families": fam_entries,
    }
    _write(out / "spectrum.json", _json_text(payload))
    _write(out / "spectrum.csv", "\n".join(csv_lines) + "\n")
    return [
        f"spectrum: FSR {d.fsr / 1e12:.3f} THz, waist {d.waist * 1e6:.1f} um, "
        f"finesse {d.finesse:.0f}, N=1 splitting "
        f"{payload['n1_splitting_mhz']:.2f} MHz -> {out / 'spectrum.json'}"
    ]


def _run_mode_image(cfg: ScenarioConfig, out: Path) -> list[str]:
    sc = cfg.scenario
    mode = cfg.modes[sc["mode"]]
    extent = (sc["extent_w0"] * cfg.waist if "extent_w0" in sc
              else sc["extent_um"] * 1e-6)
    grid = intensity_grid(mode, extent, sc.get("resolution", 301))
    header = (f"# intensity grid: mode={sc['mode']} extent_um={extent * 1e6!r} "
              f"resolution={grid.resolution} layout=row-major, rows follow y ascending,"
              " columns follow x ascending")
    body = "\n".join(",".join(repr(float(val)) for val in row) for row in grid.values)
    _write(out / "mode_image.csv", header + "\n" + body + "\n")
    meta = {
        "schema": 1, "kind": "mode_image", "mode": sc["mode"],
        "extent_um": extent * 1e6, "resolution": grid.resolution,
        "peak_intensity": float(grid.values.max()),
    }
    _write(out / "mode_image.json", _json_text(meta))
    return [f"mode-image: {sc['mode']} {grid.resolution}x{grid.resolution}"
            f" -> {out / 'mode_image.csv'}"]


def _simulate_records(cfg: ScenarioConfig) -> list[TransitRecord]:
    sc = cfg.scenario
    schedule = _build_schedule(sc["schedule"])
    traj = _build_trajectory(sc["trajectory"], cfg.waist)
    r0 = sc.get("r0_per_us", 1.0) * 1e6
    n = sc.get("transits", 1)
    return simulate_ensemble([traj] * n, schedule, cfg.modes, cfg.params, r0,
                             cfg.seed)


def _run_simulate(cfg: ScenarioConfig, out: Path) -> list[str]:
    records = _simulate_records(cfg)
    lines = []
    if len(records) == 1:
        rec = records[0]
        _write(out / "record.json", rec.to_json())
        _write(out / "record.csv", rec.to_csv())
        lines.append(
            f"simulate: 1 transit, {rec.n_bins} bins, {int(rec.counts.sum())} counts"
            f" -> {out / 'record.json'}")
    else:
        payload = [rec.to_json_dict() for rec in records]
        _write(out / "records.json", _json_text(payload))
        total = sum(int(r.counts.sum()) for r in records)
        lines.append(f"simulate: {len(records)} transits, {total} counts"
                     f" -> {out / 'records.json'}")
    return lines


def _run_fit(cfg: ScenarioConfig, out: Path) -> list[str]:
    sc = cfg.scenario
    if "record" in sc:
        payload = json.loads(Path(sc["record"]).read_text())
        record = record_from_json_dict(payload)
    else:
        record = _simulate_records(cfg)[0]
        _write(out / "record.json", record.to_json())
    free = tuple(sc.get("free", ["t0", "x0", "v"]))
    fixed = {k: (v * 1e-6 if k in ("t0", "x0") else v)
             for k, v in sc.get("fixed", {}).items()}
    lines = []
    if len(set(record.mode_ids)) == 2:
        result = fit_switched_transit(record, cfg.modes, cfg.params)
        fit = result.fit
        _write(out / "fit.json", _json_text(result.to_json_dict()))
        _write(out / "residuals.csv", fit.residuals_csv())
        _write(out / "companion.csv", result.companion.to_csv())
        lines.append(
            f"fit (switched, {fit.mode_id}): v={abs(fit.estimates['v']):.3f}"
            f"({fit.sigmas.get('v', float('nan')):.3f}) m/s, "
            f"|x0|={abs(fit.estimates['x0']) / cfg.waist:.3f}"
            f"({fit.sigmas.get('x0', float('nan')) / cfg.waist:.3f}) w0,"
            f" companion deviance {result.companion.deviance:.1f}"
            f" / {len(result.companion.observed)} bins -> {out / 'fit.json'}")
    else:
        fit = fit_transit(record, cfg.modes, cfg.params, free=free, fixed=fixed)
        _write(out / "fit.json", _json_text(fit.to_json_dict()))
        _write(out / "residuals.csv", fit.residuals_csv())
        sig_v = fit.sigmas.get("v")
        v_txt = (f"v={abs(fit.estimates['v']):.3f}({sig_v:.3f}) m/s"
                 if sig_v is not None else f"v={fit.estimates['v']:.3f} m/s (fixed)")
        lines.append(
            f"fit ({fit.mode_id}): {v_txt}, |x0|="
            f"{abs(fit.estimates['x0']) / cfg.waist:.3f} w0, deviance "
            f"{fit.deviance:.1f} / {fit.residuals.size} bins -> {out / 'fit.json'}")
    return lines


def _run_invert(cfg: ScenarioConfig, out: Path) -> list[str]:
    sc = cfg.scenario
    if "truth_w0" in sc:
        m10 = next(m for m in cfg.modes.values() if (m.m, m.n) == (1, 0))
        m01 = next(m for m in cfg.modes.values() if (m.m, m.n) == (0, 1))
        x, y = sc["truth_w0"][0] * cfg.waist, sc["truth_w0"][1] * cfg.waist
        g10 = abs(coupling(cfg.params, m10, x, y))
        g01 = abs(coupling(cfg.params, m01, x, y))
    else:
        g10 = sc["g10_mhz"] * _MHZ
        g01 = sc["g01_mhz"] * _MHZ
    sigma10 = sc.get("sigma10_mhz", 0.0) * _MHZ
    sigma01 = sc.get("sigma01_mhz", 0.0) * _MHZ
    result = invert_two_mode(g10, g01, cfg.modes, cfg.params,
                             sigma10=sigma10, sigma01=sigma01)
    _write(out / "invert.json", _json_text(result.to_json_dict()))
    csv_lines = ["x_um,y_um"] + [f"{x * 1e6!r},{y * 1e6!r}" for x, y in result.candidates]
    _write(out / "candidates.csv", "\n".join(csv_lines) + "\n")
    return [f"invert: {len(result.candidates)} candidate positions"
            f" (generic={result.generic}) -> {out / 'invert.json'}"]


def _run_g2(cfg: ScenarioConfig, out: Path) -> list[str]:
    sc = cfg.scenario
    det = Detuning(sc.get("da_mhz", 0.0) * _MHZ, sc.get("dc_mhz", 0.0) * _MHZ)
    window = (sc["window_us"][0] * 1e-6, sc["window_us"][1] * 1e-6)
    schedule = single_mode_schedule(sc["mode"], det, window,
                                    sc.get("bin_us", 1.0) * 1e-6)
    lo, hi = sc.get("x0_w0_range", [0.0, 0.7])
    rng = np.random.default_rng(cfg.seed)
    mags = rng.uniform(lo * cfg.waist, hi * cfg.waist, sc["transits"])
    signs = rng.choice(np.array([-1.0, 1.0]), sc["transits"])
    trajs = [Trajectory(x0=float(m * s), t0=0.0, v=sc["v_mps"])
             for m, s in zip(mags, signs)]
    records = simulate_ensemble(trajs, schedule, cfg.modes, cfg.params,
                                sc.get("r0_per_us", 1.0) * 1e6, cfg.seed)
    est = average_over_transits(records, sc["tau_max_us"] * 1e-6)
    peaks = significant_maxima(est)
    try:
        freq, freq_err = characteristic_frequency(est)
        freq_txt = f", f = {freq / 1e3:.1f}({freq_err / 1e3:.1f}) kHz"
    except InsufficientStructureError:
        freq, freq_err = None, None
        freq_txt = ", too little structure for a frequency"
    payload = est.to_json_dict()
    payload["significant_maxima_us"] = [est.tau[i] * 1e6 for i in peaks]
    payload["characteristic_khz"] = None if freq is None else freq / 1e3
    payload["characteristic_err_khz"] = None if freq_err is None else freq_err / 1e3
    _write(out / "g2.json", _json_text(payload))
    _write(out / "g2.csv", est.to_csv())
    return [f"g2: {sc['transits']} transits, {len(peaks)} significant maxima"
            f"{freq_txt} -> {out / 'g2.csv'}"]


def _run_scaling(cfg: ScenarioConfig, out: Path) -> list[str]:
    orders = cfg.scenario["orders"]
    if isinstance(orders, dict):
        orders = list(range(orders["from"], orders["to"] + 1))
    report = scaling_report(cfg.params, orders, waist=cfg.waist)
    csv_lines = ["order,peak_coupling_mhz,innermost_mhz,global_max_mhz,"
                 "outermost_um,rms_size_um,lobe_spacing_um,max_gradient_mhz_per_um"]
    for r in report.rows:
        csv_lines.append(
            f"{r.order},{r.peak_coupling / _MHZ!r},{r.innermost_coupling / _MHZ!r},"
            f"{r.global_max_coupling / _MHZ!r},{r.outermost_position * 1e6!r},"
            f"{r.rms_size * 1e6!r},{r.lobe_spacing * 1e6!r},"
            f"{r.max_gradient / _MHZ / 1e6!r}")
    _write(out / "scaling.csv", "\n".join(csv_lines) + "\n")
    payload = {"schema": 1, "kind": "scaling", "orders": orders,
               "exponents": {k: float(val) for k, val in report.exponents.items()}}
    _write(out / "scaling.json", _json_text(payload))
    e = report.exponents
    return [f"scaling: exponents coupling {e['peak_coupling']:+.3f}, size (rms)"
            f" {e['rms_size']:+.3f}, gradient {e['max_gradient']:+.3f}"
            f" -> {out / 'scaling.json'}"]


_RUNNERS = {
    "spectrum": _run_spectrum,
    "mode-image": _run_mode_image,
    "simulate": _run_simulate,
    "fit": _run_fit,
    "invert": _run_invert,
    "g2": _run_g2,
    "scaling": _run_scaling,
}


def run(cfg: ScenarioConfig) -> int:
    """Execute a validated scenario, writing outputs and printing summaries."""
    out = Path(cfg.out_dir)
    for line in _RUNNERS[cfg.kind](cfg, out):
        print(line)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hgtransit",
        description="Simulate and invert single-atom transits through"
                    " higher-order transverse cavity modes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in KINDS + ("validate",):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out-dir", default=None, help="override the output directory")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2

    cfg, errors = validate(text, seed_override=args.seed,
                           out_dir_override=args.out_dir)
    if args.command == "validate":
        if errors:
            for e in errors:
                print(f"invalid: {e}", file=sys.stderr)
            return 2
        print(f"valid: kind={cfg.kind}, modes={sorted(cfg.modes)}, "
              f"waist {cfg.waist * 1e6:.2f} um")
        return 0
    if errors:
        for e in errors:
            print(f"invalid: {e}", file=sys.stderr)
        return 2
    if cfg.kind != args.command:
        print(f"invalid: scenario.kind: config declares {cfg.kind!r}, "
              f"subcommand is {args.command!r}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except Exception as exc:  # surface module errors with context, exit 3
        print(f"runtime error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
