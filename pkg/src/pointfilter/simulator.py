"""Synthetic multi-target scenario with range-bearing sensing and Poisson clutter.

Frames are numbered ``0 .. num_frames - 1``. A track is present in frame
``t`` when ``birth_frame <= t < death_frame``. The sensor sits at the origin,
measures range and bearing with Gaussian noise, and the noisy polar
measurements (targets and clutter alike) are converted back to Cartesian
coordinates before the filter sees them.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import MeasurementFrame

SCENARIO_VERSION = 1


@dataclass(frozen=True)
class Track:
    """Ground-truth trajectory.

    ``motion`` is ``"cv"`` (constant velocity, uses ``velocity``) or ``"ct"``
    (coordinated turn, uses ``speed``, ``heading`` and ``turn_rate`` in
    rad/frame). ``position`` is where the track is at ``birth_frame``.
    """

    birth_frame: int
    death_frame: int
    position: tuple
    motion: str = "cv"
    velocity: tuple = (0.0, 0.0)
    speed: float = 0.0
    heading: float = 0.0
    turn_rate: float = 0.0

    def __post_init__(self):
        if self.motion not in ("cv", "ct"):
            raise ValueError(f"unknown motion model {self.motion!r}")
        if not self.birth_frame < self.death_frame:
            raise ValueError("birth_frame must precede death_frame")
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))

    def positions(self) -> np.ndarray:
        """Positions for frames ``birth_frame .. death_frame - 1``."""
        n = self.death_frame - self.birth_frame
        k = np.arange(n, dtype=float)
        p0 = np.array(self.position)
        if self.motion == "cv":
            return p0 + k[:, None] * np.array(self.velocity)
        if self.turn_rate == 0.0:
            step = self.speed * np.array([math.cos(self.heading), math.sin(self.heading)])
            return p0 + k[:, None] * step
        # exact arc: the heading turns by turn_rate per frame at constant speed
        rho = self.speed / self.turn_rate
        h = self.heading + self.turn_rate * k
        dx = rho * (np.sin(h) - math.sin(self.heading))
        dy = rho * (math.cos(self.heading) - np.cos(h))
        return p0 + np.column_stack([dx, dy])


@dataclass(frozen=True)
class ScenarioSpec:
    num_frames: int
    tracks: tuple
    range_max: float = 1000.0
    sigma_r: float = 10.0
    sigma_theta: float = math.pi / 90
    lambda_c: float = 20.0
    p_detect: float = 1.0
    seed: int = 0

    def __post_init__(self):
        tracks = tuple(t if isinstance(t, Track) else Track(**t) for t in self.tracks)
        object.__setattr__(self, "tracks", tracks)
        if self.num_frames < 1:
            raise ValueError("num_frames must be >= 1")
        for t in tracks:
            if t.birth_frame < 0 or t.death_frame > self.num_frames:
                raise ValueError(f"track lifespan [{t.birth_frame}, {t.death_frame}) outside scenario")
        if min(self.sigma_r, self.sigma_theta, self.lambda_c) < 0:
            raise ValueError("noise levels and clutter rate must be nonnegative")
        if not 0.0 <= self.p_detect <= 1.0:
            raise ValueError("p_detect must lie in [0, 1]")
        if self.range_max <= 0:
            raise ValueError("range_max must be positive")

    def to_dict(self) -> dict:
        return {"version": SCENARIO_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        data = dict(data)
        version = data.pop("version", SCENARIO_VERSION)
        if version != SCENARIO_VERSION:
            raise ValueError(f"unsupported scenario version {version}")
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ScenarioSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class GroundTruthFrame:
    time_step: int
    labels: tuple = ()
    positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("ground-truth labels must be unique within a frame")
        pos = np.array(self.positions, dtype=float)
        pos = pos.reshape(len(self.labels), pos.shape[-1] if pos.ndim == 2 else 2)
        object.__setattr__(self, "positions", pos)


def to_polar(xy: np.ndarray):
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    return np.hypot(xy[:, 0], xy[:, 1]), np.arctan2(xy[:, 1], xy[:, 0])


def to_cartesian(r, theta) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def ground_truth(spec: ScenarioSpec) -> list:
    paths = [t.positions() for t in spec.tracks]
    frames = []
    for t in range(spec.num_frames):
        labels, pos = [], []
        for label, (track, path) in enumerate(zip(spec.tracks, paths)):
            if track.birth_frame <= t < track.death_frame:
                labels.append(label)
                pos.append(path[t - track.birth_frame])
        frames.append(GroundTruthFrame(t, tuple(labels), np.array(pos, dtype=float).reshape(len(pos), 2)))
    return frames


def generate(spec: ScenarioSpec):
    """Ground truth and cluttered measurement frames, deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    truth = ground_truth(spec)
    frames = []
    for gt in truth:
        n = len(gt.labels)
        detected = rng.random(n) < spec.p_detect
        r, theta = to_polar(gt.positions[detected])
        r = r + spec.sigma_r * rng.standard_normal(r.shape[0])
        theta = theta + spec.sigma_theta * rng.standard_normal(theta.shape[0])
        n_clutter = rng.poisson(spec.lambda_c)
        r_c = rng.uniform(0.0, spec.range_max, n_clutter)
        theta_c = rng.uniform(-math.pi, math.pi, n_clutter)
        pts = to_cartesian(np.concatenate([r, r_c]), np.concatenate([theta, theta_c]))
        pts = pts[rng.permutation(pts.shape[0])]
        frames.append(MeasurementFrame(pts, gt.time_step, d=2))
    return truth, frames


def default_scenario(lambda_c: float = 20.0, seed: int = 0) -> ScenarioSpec:
    """Ten staggered tracks over 100 frames inside a 1000-unit sensing range.

    Mixes constant-velocity and coordinated-turn motion; lifespans overlap
    and several tracks leave before the end. The fixture is versioned with
    :data:`SCENARIO_VERSION` and must stay stable.
    """
    tracks = (
        Track(0, 70, (-300.0, 250.0), "cv", velocity=(4.0, -2.0)),
        Track(0, 100, (200.0, 300.0), "ct", speed=4.0, heading=math.pi, turn_rate=0.02),
        Track(0, 70, (-150.0, -350.0), "cv", velocity=(3.0, 3.0)),
        Track(20, 100, (350.0, -100.0), "cv", velocity=(-3.0, 4.0)),
        Track(20, 100, (-350.0, -50.0), "ct", speed=5.0, heading=0.5, turn_rate=-0.015),
        Track(20, 100, (100.0, -300.0), "cv", velocity=(2.5, -1.5)),
        Track(40, 100, (-100.0, 400.0), "ct", speed=4.0, heading=-1.2, turn_rate=0.02),
        Track(40, 100, (300.0, 150.0), "cv", velocity=(-4.0, 1.0)),
        Track(60, 100, (-400.0, 150.0), "cv", velocity=(3.5, -3.0)),
        Track(60, 100, (250.0, -350.0), "ct", speed=3.5, heading=2.2, turn_rate=-0.02),
    )
    return ScenarioSpec(num_frames=100, tracks=tracks, range_max=1000.0, sigma_r=10.0,
                        sigma_theta=math.pi / 90, lambda_c=lambda_c, seed=seed)


def with_clean_sensing(spec: ScenarioSpec) -> ScenarioSpec:
    """Copy of ``spec`` without measurement noise or clutter."""
    return replace(spec, sigma_r=0.0, sigma_theta=0.0, lambda_c=0.0)
