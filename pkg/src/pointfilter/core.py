"""Target, measurement and configuration types shared across the filter.

All types are frozen values. Arrays stored on them are marked read-only so a
tuple handed to one stage cannot be mutated behind another stage's back.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np


def as_vector(z, d: int) -> np.ndarray:
    """Return ``z`` as a float vector of length ``d`` or raise ``ValueError``."""
    v = np.asarray(z, dtype=float)
    if v.ndim != 1 or v.shape[0] != d:
        raise ValueError(f"expected a {d}-component vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class FilterConfig:
    """Hyperparameters of the filter, the recurrent model and the OSPA metric.

    The gates ``g_min``/``g_max`` and ``a_min`` are in state units and frames.
    ``normalize`` feeds the network scaled by ``norm_scale`` and predicts
    relative to the newest row instead of in raw coordinates. With
    ``increments`` the inputs are frame-to-frame differences of the history,
    otherwise offsets from the newest row. ``report_min_history``,
    ``report_min_age`` and ``report_max_coast`` select which targets are
    reported as estimates; they do not change the target set itself.

    ``g_min`` defaults to three range standard deviations of the default
    sensor (30). With a gate at one standard deviation most true updates
    fall into the decay band and tracks coast on predictions.
    """

    d: int = 2
    a_min: int = 3
    g_min: float = 30.0
    g_max: float = 50.0
    max_batch_size: int = 10
    min_history_for_training: int = 3
    epochs_init: int = 50
    epochs_finetune: int = 20
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.99
    adam_epsilon: float = 1e-8
    hidden_units: int = 20
    num_layers: int = 3
    init_scale: float = 0.08
    normalize: bool = True
    norm_scale: float = 10.0
    increments: bool = True
    report_min_history: int = 3
    report_min_age: int = 5
    report_max_coast: int = 1
    ospa_p: float = 1.0
    ospa_c: float = 100.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.a_min < 0:
            raise ValueError("a_min must be >= 0")
        if not 0 < self.g_min < self.g_max:
            raise ValueError("require 0 < g_min < g_max")
        if self.max_batch_size < 2:
            raise ValueError("max_batch_size must be >= 2")
        if self.min_history_for_training < 2:
            raise ValueError("min_history_for_training must be >= 2")
        if self.epochs_init < 1 or self.epochs_finetune < 1:
            raise ValueError("epoch counts must be >= 1")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.learning_rate <= 0 or self.adam_epsilon <= 0:
            raise ValueError("learning_rate and adam_epsilon must be positive")
        if self.hidden_units < 1 or self.num_layers < 1:
            raise ValueError("network needs at least one layer and one unit")
        if self.norm_scale <= 0:
            raise ValueError("norm_scale must be positive")
        if self.ospa_c <= 0 or self.ospa_p < 1:
            raise ValueError("OSPA needs c > 0 and p >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "FilterConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown filter config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class TargetTuple:
    """One tracked target.

    ``state`` holds the S most recent states (oldest first), ``age`` counts
    frames survived and can go negative while decaying, ``genuinity_error`` is
    the distance to the last associated measurement and ``freeze`` is set when
    the target coasted on its own prediction. ``coast`` counts consecutive
    frames in which no measurement picked this target as its nearest one.
    """

    state: np.ndarray
    age: int
    genuinity_error: float
    freeze: bool
    track_id: int
    coast: int = 0

    def __post_init__(self):
        state = np.array(self.state, dtype=float)
        if state.ndim != 2 or state.shape[0] < 1:
            raise ValueError("state matrix needs at least one row")
        if self.genuinity_error < 0:
            raise ValueError("genuinity error must be nonnegative")
        state.setflags(write=False)
        object.__setattr__(self, "state", state)

    @property
    def d(self) -> int:
        return self.state.shape[1]

    @property
    def history(self) -> int:
        return self.state.shape[0]

    @property
    def last(self) -> np.ndarray:
        return self.state[-1]

    def __repr__(self):
        return (f"TargetTuple(id={self.track_id}, S={self.history}, last={self.last.tolist()}, "
                f"age={self.age}, g={self.genuinity_error:.4g}, freeze={self.freeze})")


@dataclass(frozen=True)
class TargetSet:
    targets: tuple = ()
    time_step: int = 0

    def __post_init__(self):
        targets = tuple(self.targets)
        ids = [t.track_id for t in targets]
        if len(set(ids)) != len(ids):
            raise ValueError("track ids must be unique within a target set")
        object.__setattr__(self, "targets", targets)

    def __len__(self):
        return len(self.targets)

    def __iter__(self):
        return iter(self.targets)

    @property
    def cardinality(self) -> int:
        return len(self.targets)


@dataclass(frozen=True, eq=False)
class MeasurementFrame:
    """The measurements received at one time step, as an (N, d) array."""

    points: np.ndarray
    time_step: int = 0
    d: int = field(default=2, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.size == 0:
            pts = np.zeros((0, self.d))
        if pts.ndim != 2 or pts.shape[1] != self.d:
            raise ValueError(f"measurements must have shape (N, {self.d}), got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def new_birth_target(z, cfg: FilterConfig, track_id: int) -> TargetTuple:
    """Start a target from a single unassociated measurement."""
    z = as_vector(z, cfg.d)
    return TargetTuple(state=z[None, :], age=cfg.a_min, genuinity_error=cfg.g_min,
                       freeze=False, track_id=track_id)


def append_state(target: TargetTuple, row, cfg: FilterConfig, **changes) -> TargetTuple:
    """Append ``row`` to the state matrix, dropping the oldest row past ``max_batch_size``.

    Extra keyword arguments replace the other fields of the tuple.
    """
    row = as_vector(row, target.d)
    state = np.vstack([target.state, row[None, :]])
    if state.shape[0] > cfg.max_batch_size:
        state = state[-cfg.max_batch_size:]
    return replace(target, state=state, **changes)
