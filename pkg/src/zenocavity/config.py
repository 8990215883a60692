"""Run configuration: JSON schema, validation, presets.

Configs are plain JSON. Complex numbers are written as [re, im] pairs.
Validation collects every problem before raising, so an invalid config
produces a single aggregated report. Presets live in the package as JSON
files, one per reproduced figure panel plus a few extras.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

PROTOCOLS = (
    "zeno_confine",
    "zeno_upper",
    "tangential",
    "fig3_revival",
    "tweezer_stretch",
    "tweezer_move",
    "crush",
    "four_cat",
    "realistic",
)


class ConfigError(ValueError):
    """Invalid configuration; message lists every detected problem."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config:\n" + "\n".join(f"  - {p}" for p in problems))


def _as_complex(value: Any, key: str, problems: list[str]) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    problems.append(f"{key}: expected a number or [re, im] pair, got {value!r}")
    return 0j


@dataclass
class TrajectoryConfig:
    start: complex
    stop: complex
    steps: int
    s: int = 1
    adiabatic_cap: float = 0.1


@dataclass
class PulseConfig:
    omega: float = 2 * math.pi * 50e3  # rad/s
    theta: float = 2 * math.pi
    rabi_drive: float = 0.0  # rad/s; 0 -> derived from total_duration
    total_duration: float = 3.4e-3  # s, whole protocol


@dataclass
class LindbladConfig:
    t_c: float = 0.13
    n_th: float = 0.0
    dt: float = 0.0  # 0 -> t_c / 1e6


@dataclass
class WignerConfig:
    nx: int = 121
    ny: int = 121
    bounds: tuple[float, float, float, float] | None = None  # None -> auto


@dataclass
class RunConfig:
    protocol: str
    dim: int
    s: int = 6
    beta: complex = 0.1
    alpha_init: complex = 0j
    cat_init: complex | None = None  # even cat |a> + |-a> instead of coherent
    steps: int = 45
    record_every: int = 1
    snapshot_every: int = 0  # 0 -> no wigner snapshots
    snapshot_steps: tuple[int, ...] = ()
    dump_states: bool = False
    leak_tol: float = 1e-6
    guard_levels: int = 3
    trajectories: tuple[TrajectoryConfig, ...] = ()
    interleave: str = "roundrobin"
    component_positions: tuple[complex, ...] = ()
    overlap_tol: float = 1e-3
    gamma: complex = 0j  # tweezer_stretch hold point
    alpha_free: complex | None = None  # tweezer_stretch moving component
    crush_centers: tuple[complex, complex] = (-2.5, 2.5)
    crush_steps: int = 200
    n_components: int = 4
    separation: float = 2.5
    steps_per_crush: int = 200
    pulse: PulseConfig | None = None
    kick_theta: float = 0.0  # 0 -> ideal kicks; else dressed kicks in zeno runs
    kick_rabi_drive: float = 0.0
    kick_omega: float = 2 * math.pi * 50e3
    lindblad: LindbladConfig = field(default_factory=LindbladConfig)
    wigner: WignerConfig = field(default_factory=WignerConfig)
    theta_grid: tuple[float, ...] = (2 * math.pi, 2.0, 1.0, 0.5)
    waypoints_per_component: int = 5
    target_alpha: complex | None = None


def _validate(cfg: RunConfig, problems: list[str]) -> None:
    if cfg.protocol not in PROTOCOLS:
        problems.append(
            f"protocol: {cfg.protocol!r} is not one of {', '.join(PROTOCOLS)}"
        )
    if cfg.dim < 2:
        problems.append(f"dim: must be >= 2, got {cfg.dim}")
    if cfg.steps < 1:
        problems.append(f"steps: must be >= 1, got {cfg.steps}")
    if cfg.record_every < 1:
        problems.append("record_every: must be >= 1")
    if cfg.s < 0:
        problems.append("s: must be >= 0")
    if cfg.s >= cfg.dim - cfg.guard_levels:
        problems.append(f"s: {cfg.s} reaches the guard band of dim={cfg.dim}")
    if cfg.leak_tol <= 0:
        problems.append("leak_tol: must be positive")
    if cfg.interleave not in ("roundrobin", "sequential"):
        problems.append(f"interleave: {cfg.interleave!r} not roundrobin/sequential")
    if cfg.protocol in ("tweezer_move",) and not cfg.trajectories:
        problems.append("trajectories: required for tweezer_move")
    for k, traj in enumerate(cfg.trajectories):
        if traj.steps < 1:
            problems.append(f"trajectories[{k}].steps: must be >= 1")
        if traj.s < 0:
            problems.append(f"trajectories[{k}].s: must be >= 0")
        jump = abs(traj.stop - traj.start) / traj.steps
        if jump > traj.adiabatic_cap * (1 + 1e-12):
            problems.append(
                f"trajectories[{k}]: waypoint jump {jump:.4g} exceeds "
                f"adiabatic_cap {traj.adiabatic_cap:.4g}"
            )
    if cfg.protocol == "tweezer_stretch" and cfg.alpha_free is None:
        problems.append("alpha_free: required for tweezer_stretch")
    if cfg.protocol == "four_cat":
        n = cfg.n_components
        if n < 2 or (n & (n - 1)) != 0:
            problems.append(f"n_components: must be a power of two >= 2, got {n}")
    if cfg.protocol == "realistic":
        if cfg.pulse is None:
            problems.append("pulse: required for realistic runs")
        elif cfg.pulse.total_duration <= 0 and cfg.pulse.rabi_drive <= 0:
            problems.append("pulse: needs total_duration or rabi_drive")
        if cfg.lindblad.t_c <= 0:
            problems.append("lindblad.t_c: must be positive")
    if cfg.kick_theta and not cfg.kick_rabi_drive:
        problems.append("kick_rabi_drive: required when kick_theta is set")
    if cfg.wigner.nx < 2 or cfg.wigner.ny < 2:
        problems.append("wigner: nx and ny must be >= 2")


def parse_config(raw: dict[str, Any]) -> RunConfig:
    """Build and validate a RunConfig from decoded JSON."""
    problems: list[str] = []
    known = set(RunConfig.__dataclass_fields__)
    for key in raw:
        if key not in known:
            problems.append(f"{key}: unknown key")
    if "protocol" not in raw:
        problems.append("protocol: missing (required)")
    if "dim" not in raw:
        problems.append("dim: missing (required)")
    if problems:
        raise ConfigError(problems)

    kwargs: dict[str, Any] = {}
    for key in ("protocol", "interleave"):
        if key in raw:
            kwargs[key] = str(raw[key])
    for key in (
        "dim", "s", "steps", "record_every", "snapshot_every", "crush_steps",
        "n_components", "steps_per_crush", "guard_levels", "waypoints_per_component",
    ):
        if key in raw:
            kwargs[key] = int(raw[key])
    for key in ("leak_tol", "overlap_tol", "separation", "kick_theta",
                "kick_rabi_drive", "kick_omega"):
        if key in raw:
            kwargs[key] = float(raw[key])
    for key in ("beta", "alpha_init", "gamma"):
        if key in raw:
            kwargs[key] = _as_complex(raw[key], key, problems)
    for key in ("cat_init", "alpha_free", "target_alpha"):
        if key in raw and raw[key] is not None:
            kwargs[key] = _as_complex(raw[key], key, problems)
    if "dump_states" in raw:
        kwargs["dump_states"] = bool(raw["dump_states"])
    if "snapshot_steps" in raw:
        kwargs["snapshot_steps"] = tuple(int(v) for v in raw["snapshot_steps"])
    if "component_positions" in raw:
        kwargs["component_positions"] = tuple(
            _as_complex(v, "component_positions", problems)
            for v in raw["component_positions"]
        )
    if "crush_centers" in raw:
        pair = raw["crush_centers"]
        if not isinstance(pair, list) or len(pair) != 2:
            problems.append("crush_centers: expected two complex values")
        else:
            kwargs["crush_centers"] = tuple(
                _as_complex(v, "crush_centers", problems) for v in pair
            )
    if "trajectories" in raw:
        trajs = []
        for k, t in enumerate(raw["trajectories"]):
            trajs.append(
                TrajectoryConfig(
                    start=_as_complex(t.get("start", 0), f"trajectories[{k}].start", problems),
                    stop=_as_complex(t.get("stop", 0), f"trajectories[{k}].stop", problems),
                    steps=int(t.get("steps", 1)),
                    s=int(t.get("s", 1)),
                    adiabatic_cap=float(t.get("adiabatic_cap", 0.1)),
                )
            )
        kwargs["trajectories"] = tuple(trajs)
    if "pulse" in raw and raw["pulse"] is not None:
        p = raw["pulse"]
        kwargs["pulse"] = PulseConfig(
            omega=float(p.get("omega", 2 * math.pi * 50e3)),
            theta=float(p.get("theta", 2 * math.pi)),
            rabi_drive=float(p.get("rabi_drive", 0.0)),
            total_duration=float(p.get("total_duration", 3.4e-3)),
        )
    if "lindblad" in raw:
        ld = raw["lindblad"]
        kwargs["lindblad"] = LindbladConfig(
            t_c=float(ld.get("t_c", 0.13)),
            n_th=float(ld.get("n_th", 0.0)),
            dt=float(ld.get("dt", 0.0)),
        )
    if "wigner" in raw:
        w = raw["wigner"]
        bounds = w.get("bounds")
        kwargs["wigner"] = WignerConfig(
            nx=int(w.get("nx", 121)),
            ny=int(w.get("ny", 121)),
            bounds=tuple(float(b) for b in bounds) if bounds else None,
        )
    if "theta_grid" in raw:
        kwargs["theta_grid"] = tuple(float(v) for v in raw["theta_grid"])

    cfg = RunConfig(**kwargs)
    _validate(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a JSON object"])
    return parse_config(raw)


def list_presets() -> list[str]:
    files = resources.files("zenocavity").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> RunConfig:
    files = resources.files("zenocavity").joinpath("presets")
    path = files.joinpath(f"{name}.json")
    if not path.is_file():
        raise ConfigError(
            [f"preset: unknown name {name!r}; available: {', '.join(list_presets())}"]
        )
    raw = json.loads(path.read_text(encoding="utf-8"))
    return parse_config(raw)


def preset_raw(name: str) -> dict[str, Any]:
    files = resources.files("zenocavity").joinpath("presets")
    path = files.joinpath(f"{name}.json")
    if not path.is_file():
        raise ConfigError([f"preset: unknown name {name!r}"])
    return json.loads(path.read_text(encoding="utf-8"))
