"""Experiment configuration: loading, defaults and strict validation.

A config is one JSON object. Unknown keys are errors. Validation collects
every problem before raising, so a single run reports all of them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .conversion import EfficiencyStage, SpectralWindows
from .errors import ValidationError
from .measurement import NOISELESS, NoiseModel
from .metrics import ChshSettings, FringeScan
from .states import BELL_KINDS, BeamGeometry, QubitSpec

SCENARIOS = (
    "qubit-tomography",
    "hybrid-fringes",
    "hybrid-tomography",
    "hybrid-witness",
    "oam-fringes",
    "oam-chsh",
    "efficiency-budget",
    "mode-capacity",
)

MODES = ("analytic", "sampled")

COMMON_KEYS = {"scenario", "seed", "mode", "description", "resamples"}
COUNTING_KEYS = {"state", "noise", "noise_overrides", "pair_rate", "duration", "conversion_eta"}

SCENARIO_KEYS = {
    "qubit-tomography": COUNTING_KEYS,
    "hybrid-fringes": COUNTING_KEYS | {"angles", "idler_bases"},
    "hybrid-witness": COUNTING_KEYS | {"angles", "idler_bases"},
    "hybrid-tomography": COUNTING_KEYS,
    "oam-fringes": COUNTING_KEYS | {"angles", "a_angles"},
    "oam-chsh": COUNTING_KEYS | {"chsh"},
    "efficiency-budget": {"signal_chain", "idler_chain", "spectral", "xi_t"},
    "mode-capacity": {"w0", "w_max"},
}

DEFAULT_STATE = {
    "hybrid-fringes": "hybrid-plus",
    "hybrid-witness": "hybrid-plus",
    "hybrid-tomography": "hybrid-plus",
    "oam-fringes": "oam-minus",
    "oam-chsh": "oam-minus",
}

NOISE_KEYS = {"singles_a", "singles_b", "coincidence_window", "werner_v", "crosstalk_eps"}
CHSH_KEYS = {"theta_a", "theta_a_prime", "theta_b", "theta_b_prime"}
DEFAULT_RESAMPLES = 200


class ConfigError(ValidationError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated scenario description. ``raw`` is the parsed document, kept for echoing."""

    scenario: str
    seed: int
    mode: str
    resamples: int
    raw: dict = field(compare=False)
    options: dict = field(default_factory=dict, compare=False)

    @property
    def sampled(self) -> bool:
        return self.mode == "sampled"


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _complex(value, where, problems):
    if _is_number(value):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(_is_number(v) for v in value):
        return complex(value[0], value[1])
    problems.append(f"{where}: expected a number or [re, im], got {value!r}")
    return None


def _parse_state(value, scenario, problems):
    """Returns a list of ``(label, spec)`` where spec is a label string or QubitSpec."""
    if scenario == "qubit-tomography":
        items = value if isinstance(value, list) else [value]
        if not items:
            problems.append("state: list must not be empty")
        out = []
        for k, item in enumerate(items):
            if isinstance(item, str):
                if item not in ("R", "L", "H", "V", "D", "A"):
                    problems.append(f"state[{k}]: unknown OAM qubit {item!r}")
                out.append((item, item))
            elif isinstance(item, dict):
                unknown = set(item) - {"alpha", "beta", "l", "label"}
                if unknown:
                    problems.append(f"state[{k}]: unknown keys {sorted(unknown)}")
                missing = {"alpha", "beta"} - set(item)
                if missing:
                    problems.append(f"state[{k}]: missing keys {sorted(missing)}")
                    continue
                alpha = _complex(item["alpha"], f"state[{k}].alpha", problems)
                beta = _complex(item["beta"], f"state[{k}].beta", problems)
                if alpha is None or beta is None:
                    continue
                try:
                    spec = QubitSpec(alpha, beta, int(item.get("l", 1)))
                except ValidationError as exc:
                    problems.append(f"state[{k}]: {exc}")
                    continue
                out.append((str(item.get("label", f"qubit{k}")), spec))
            else:
                problems.append(f"state[{k}]: expected a basis label or {{alpha, beta}}, got {item!r}")
        return out
    family = "hybrid" if scenario.startswith("hybrid") else "oam"
    allowed = [k for k in BELL_KINDS if k.startswith(family)]
    if value not in allowed:
        problems.append(f"state: expected one of {allowed}, got {value!r}")
        return []
    return [(value, value)]


def _parse_noise(value, where, problems, base=NOISELESS):
    if not isinstance(value, dict):
        problems.append(f"{where}: expected an object")
        return base
    unknown = set(value) - NOISE_KEYS
    if unknown:
        problems.append(f"{where}: unknown keys {sorted(unknown)}")
    fields = {k: getattr(base, k) for k in NOISE_KEYS}
    for k in NOISE_KEYS & set(value):
        if not _is_number(value[k]):
            problems.append(f"{where}.{k}: expected a number, got {value[k]!r}")
        else:
            fields[k] = float(value[k])
    try:
        return NoiseModel(**fields)
    except ValidationError as exc:
        problems.append(f"{where}: {exc}")
        return base


def _parse_angles(value, where, problems):
    if isinstance(value, dict):
        unknown = set(value) - {"num", "start", "stop"}
        if unknown or "num" not in value or not isinstance(value["num"], int):
            problems.append(f"{where}: expected {{num, start?, stop?}} with integer num")
            return []
        start = float(value.get("start", 0.0))
        stop = float(value.get("stop", math.pi))
        return [float(x) for x in np.linspace(start, stop, value["num"], endpoint=False)]
    if isinstance(value, list) and value and all(_is_number(v) for v in value):
        return [float(v) for v in value]
    problems.append(f"{where}: expected a non-empty list of angles or {{num, start, stop}}")
    return []


def _positive(cfg, key, problems, required=True, allow_zero=False):
    if key not in cfg:
        if required:
            problems.append(f"{key}: required for scenario {cfg.get('scenario')!r}")
        return None
    v = cfg[key]
    if not _is_number(v) or v < 0 or (v == 0 and not allow_zero):
        problems.append(f"{key}: expected a positive number, got {v!r}")
        return None
    return float(v)


def _parse_chain(value, where, problems):
    if not isinstance(value, list):
        problems.append(f"{where}: expected a list of {{name, eta}}")
        return None
    out = []
    for k, st in enumerate(value):
        if not isinstance(st, dict) or set(st) != {"name", "eta"} or not _is_number(st.get("eta")):
            problems.append(f"{where}[{k}]: expected {{name, eta}}")
            continue
        try:
            out.append(EfficiencyStage(str(st["name"]), float(st["eta"])))
        except ValidationError as exc:
            problems.append(f"{where}[{k}]: {exc}")
    return out


def validate(cfg: Any) -> ExperimentConfig:
    """Check a parsed config document and return the typed config."""
    if not isinstance(cfg, dict):
        raise ConfigError(["config must be a JSON object"])
    problems = []
    scenario = cfg.get("scenario")
    if scenario not in SCENARIOS:
        problems.append(f"scenario: expected one of {list(SCENARIOS)}, got {scenario!r}")
        raise ConfigError(problems)

    unknown = set(cfg) - COMMON_KEYS - SCENARIO_KEYS[scenario]
    if unknown:
        problems.append(f"unknown keys for {scenario}: {sorted(unknown)}")

    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append(f"seed: expected a non-negative integer, got {seed!r}")
        seed = 0
    mode = cfg.get("mode", "sampled")
    if mode not in MODES:
        problems.append(f"mode: expected one of {list(MODES)}, got {mode!r}")
    resamples = cfg.get("resamples", DEFAULT_RESAMPLES)
    if not isinstance(resamples, int) or isinstance(resamples, bool) or resamples < 100:
        problems.append(f"resamples: expected an integer >= 100, got {resamples!r}")
        resamples = DEFAULT_RESAMPLES

    opts = {}
    keys = SCENARIO_KEYS[scenario]
    if "pair_rate" in keys:
        opts["pair_rate"] = _positive(cfg, "pair_rate", problems)
        opts["duration"] = _positive(cfg, "duration", problems)
        eta = cfg.get("conversion_eta", 1.0)
        if not _is_number(eta) or not 0 < eta <= 1:
            problems.append(f"conversion_eta: expected a number in (0, 1], got {eta!r}")
            eta = 1.0
        opts["conversion_eta"] = float(eta)
        if "state" not in cfg and scenario not in DEFAULT_STATE:
            problems.append(f"state: required for scenario {scenario!r}")
            opts["states"] = []
        else:
            opts["states"] = _parse_state(cfg.get("state", DEFAULT_STATE.get(scenario)), scenario, problems)
        noise = _parse_noise(cfg.get("noise", {}), "noise", problems)
        opts["noise"] = noise
        overrides = cfg.get("noise_overrides", {})
        opts["noise_overrides"] = {}
        if not isinstance(overrides, dict):
            problems.append("noise_overrides: expected an object keyed by group label")
        else:
            for group, partial in overrides.items():
                opts["noise_overrides"][group] = _parse_noise(partial, f"noise_overrides.{group}", problems, base=noise)

    if scenario in ("hybrid-fringes", "hybrid-witness"):
        opts["angles"] = _parse_angles(cfg.get("angles", {"num": 16}), "angles", problems)
        bases = cfg.get("idler_bases", ["d", "r"])
        if not isinstance(bases, list) or not bases or any(b not in ("h", "v", "d", "a", "r", "l") for b in bases):
            problems.append(f"idler_bases: expected polarization labels, got {bases!r}")
        elif scenario == "hybrid-witness" and len(bases) != 2:
            problems.append("idler_bases: the witness needs exactly two bases")
        opts["idler_bases"] = bases
    if scenario == "oam-fringes":
        opts["angles"] = _parse_angles(cfg.get("angles", {"num": 16}), "angles", problems)
        opts["a_angles"] = _parse_angles(cfg.get("a_angles", [math.pi / 4, 0.0]), "a_angles", problems)
    if scenario == "oam-chsh":
        chsh = cfg.get("chsh", {})
        if not isinstance(chsh, dict) or set(chsh) - CHSH_KEYS or not all(_is_number(v) for v in chsh.values()):
            problems.append(f"chsh: expected numeric keys from {sorted(CHSH_KEYS)}")
            chsh = {}
        opts["chsh"] = ChshSettings(**{k: float(v) for k, v in chsh.items()})
    if scenario == "efficiency-budget":
        for key in ("signal_chain", "idler_chain"):
            if key in cfg:
                opts[key] = _parse_chain(cfg[key], key, problems)
        if "spectral" in cfg:
            sp = cfg["spectral"]
            if not isinstance(sp, dict) or set(sp) != {"bw_source", "bw_sfg"} or not all(_is_number(v) for v in sp.values()):
                problems.append("spectral: expected {bw_source, bw_sfg}")
            else:
                try:
                    opts["spectral"] = SpectralWindows(float(sp["bw_source"]), float(sp["bw_sfg"]))
                except ValidationError as exc:
                    problems.append(f"spectral: {exc}")
        if "xi_t" in cfg:
            opts["xi_t"] = _positive(cfg, "xi_t", problems, allow_zero=True)
    if scenario == "mode-capacity":
        w0 = _positive(cfg, "w0", problems)
        w_max = cfg.get("w_max")
        values = w_max if isinstance(w_max, list) else [w_max]
        if w_max is None:
            problems.append("w_max: required for scenario 'mode-capacity'")
            values = []
        geoms = []
        for v in values:
            if not _is_number(v):
                problems.append(f"w_max: expected numbers, got {v!r}")
                continue
            if w0 is not None:
                try:
                    geoms.append(BeamGeometry(w0, float(v)))
                except ValidationError as exc:
                    problems.append(f"w_max: {exc}")
        opts["geometries"] = geoms

    if opts.get("angles"):
        try:
            FringeScan(tuple(opts["angles"]), (0.0,) * len(opts["angles"]))
        except ValidationError as exc:
            problems.append(f"angles: {exc}")

    if "noise_overrides" in opts:
        groups = set(measurement_groups(scenario, opts))
        for group in opts["noise_overrides"]:
            if group not in groups:
                problems.append(f"noise_overrides: unknown group {group!r}; groups are {sorted(groups)}")

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(scenario, seed, mode, resamples, dict(cfg), opts)


def measurement_groups(scenario: str, opts: dict) -> list:
    """Labels that ``noise_overrides`` may target."""
    if scenario == "qubit-tomography":
        return [label for label, _ in opts.get("states", [])]
    if scenario in ("hybrid-fringes", "hybrid-witness"):
        return list(opts.get("idler_bases", []))
    if scenario == "oam-fringes":
        return [f"a{k}" for k in range(len(opts.get("a_angles", [])))]
    return []


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from exc
    return validate(doc)


def with_overrides(cfg: ExperimentConfig, seed=None, mode=None) -> ExperimentConfig:
    doc = dict(cfg.raw)
    if seed is not None:
        doc["seed"] = seed
    if mode is not None:
        doc["mode"] = mode
    return validate(doc)


def golden_dir() -> Path:
    return Path(__file__).with_name("configs")


def golden_configs() -> dict:
    """Shipped configs by file stem."""
    return {p.stem: p for p in sorted(golden_dir().glob("*.json"))}

