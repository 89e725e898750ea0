"""Histogram-based data association and the per-frame filter step.

Indices are 0-based. An empty axis yields ``+inf`` minima and the sentinel
index ``NO_INDEX``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .core import FilterConfig, MeasurementFrame, TargetSet, append_state, new_birth_target
from .neural import ModelTuple, OptimizerState, init_model
from .predictor import PredictedTarget, predict_all

NO_INDEX = -1


def targetness_matrix(preds, frame: MeasurementFrame) -> np.ndarray:
    """N x M matrix of distances between measurement k' (row) and predicted target k (column)."""
    Z = frame.points
    if preds:
        P = np.array([p.predicted_state for p in preds], dtype=float)
    else:
        P = np.zeros((0, Z.shape[1]))
    if P.shape[1] != Z.shape[1]:
        raise ValueError(f"prediction dimension {P.shape[1]} != measurement dimension {Z.shape[1]}")
    if Z.shape[0] == 0 or P.shape[0] == 0:
        return np.zeros((Z.shape[0], P.shape[0]))
    return np.linalg.norm(Z[:, None, :] - P[None, :, :], axis=2)


def closest_indices(T: np.ndarray):
    """Row and column argmin/min of the targetness matrix.

    Returns ``(C_idx, R_idx, C, R)``: for each measurement the closest target
    and its distance, for each target the closest measurement and its
    distance. Ties go to the lowest index (``np.argmin`` semantics).
    """
    T = np.asarray(T, dtype=float)
    N, M = T.shape
    if M == 0:
        C_idx, C = np.full(N, NO_INDEX), np.full(N, np.inf)
    else:
        C_idx = np.argmin(T, axis=1)
        C = T[np.arange(N), C_idx]
    if N == 0:
        R_idx, R = np.full(M, NO_INDEX), np.full(M, np.inf)
    else:
        R_idx = np.argmin(T, axis=0)
        R = T[R_idx, np.arange(M)]
    return C_idx, R_idx, C, R


def association_histograms(C_idx, R_idx, M: int, N: int):
    """Counts of how often each target / measurement is somebody's nearest neighbour."""
    C_idx = np.asarray(C_idx, dtype=int)
    R_idx = np.asarray(R_idx, dtype=int)
    H_C = np.bincount(C_idx[C_idx != NO_INDEX], minlength=M)[:M]
    H_R = np.bincount(R_idx[R_idx != NO_INDEX], minlength=N)[:N]
    return H_C, H_R


@dataclass
class AssociationDiagnostics:
    C_idx: np.ndarray
    R_idx: np.ndarray
    C: np.ndarray
    R: np.ndarray
    H_C: np.ndarray
    H_R: np.ndarray
    targetness: np.ndarray
    case_ops: int = 0
    fallbacks: dict = field(default_factory=dict)

    def to_record(self, max_matrix_entries: int = 400) -> dict:
        """JSON-ready dict; the matrix is dropped when it has more than ``max_matrix_entries`` entries."""

        def clean(a):
            return [None if not np.isfinite(v) else float(v) for v in np.asarray(a, dtype=float)]

        rec = {
            "C_idx": [int(v) for v in self.C_idx],
            "R_idx": [int(v) for v in self.R_idx],
            "C": clean(self.C),
            "R": clean(self.R),
            "H_C": [int(v) for v in self.H_C],
            "H_R": [int(v) for v in self.H_R],
            "case_ops": self.case_ops,
            "fallbacks": {str(k): v for k, v in self.fallbacks.items()},
        }
        if self.targetness.size <= max_matrix_entries:
            rec["targetness"] = [clean(row) for row in self.targetness]
        return rec


@dataclass
class AssociationOutcome:
    survived: list
    decayed: list
    born: list
    dead: list
    diagnostics: AssociationDiagnostics

    @property
    def targets(self) -> list:
        """The new target set: updated targets followed by births."""
        return [*self.survived, *self.decayed, *self.born]


def associate(preds, frame: MeasurementFrame, cfg: FilterConfig, id_gen) -> AssociationOutcome:
    """Assign decay, survival, death and birth for one frame.

    Targets are visited once and measurements are visited once after the
    distance matrix is built; ``diagnostics.case_ops`` counts those visits.
    """
    T = targetness_matrix(preds, frame)
    N, M = T.shape
    C_idx, R_idx, C, R = closest_indices(T)
    H_C, H_R = association_histograms(C_idx, R_idx, M, N)
    Z = frame.points
    ops = 0

    survived, decayed, dead, born = [], [], [], []
    for k, pred in enumerate(preds):
        ops += 1
        x = pred.base
        r = R[k]
        coast = x.coast + 1 if H_C[k] == 0 else 0
        if (H_C[k] == 0 and x.age >= cfg.a_min) or (H_C[k] >= 1 and cfg.g_min <= r <= cfg.g_max):
            g = float(r) if np.isfinite(r) else x.genuinity_error
            decayed.append(append_state(x, pred.predicted_state, cfg, age=x.age - 1,
                                        genuinity_error=g, freeze=True, coast=coast))
        elif H_C[k] >= 1 and r < cfg.g_min:
            survived.append(append_state(x, Z[R_idx[k]], cfg, age=x.age + 1,
                                         genuinity_error=float(r), freeze=False, coast=coast))
        else:
            dead.append(x.track_id)

    for kp in range(N):
        ops += 1
        if H_R[kp] == 0 or C[kp] > cfg.g_max:
            born.append(new_birth_target(Z[kp], cfg, next(id_gen)))

    diag = AssociationDiagnostics(C_idx, R_idx, C, R, H_C, H_R, T, ops,
                                  {p.base.track_id: p.fallback for p in preds if p.fallback})
    return AssociationOutcome(survived, decayed, born, dead, diag)


def step(targets: TargetSet, frame: MeasurementFrame, model: ModelTuple, opt: OptimizerState,
         cfg: FilterConfig, id_gen=None):
    """Predict, associate and form the target set for ``frame.time_step``.

    ``id_gen`` yields fresh track ids; by default it counts up from one past
    the largest id in ``targets``. Returns ``(targets, model, opt, outcome)``.
    """
    if frame.time_step != targets.time_step + 1:
        raise ValueError(f"frame {frame.time_step} does not follow target set at {targets.time_step}")
    if id_gen is None:
        id_gen = itertools.count(max((t.track_id for t in targets), default=-1) + 1)
    preds, model, opt = predict_all(targets, model, opt, cfg)
    outcome = associate(preds, frame, cfg, id_gen)
    return TargetSet(outcome.targets, frame.time_step), model, opt, outcome


def estimates(targets: TargetSet, cfg: FilterConfig) -> np.ndarray:
    """Reported target positions: the newest row of each established, recently observed target.

    A target is reported once its history holds ``report_min_history`` rows
    and its age has reached ``report_min_age``, and while it has gone at most
    ``report_max_coast`` consecutive frames without any measurement choosing
    it as nearest target. Births start at age ``a_min``, so the age rule asks
    for net survivals over decays.
    """
    pts = [t.last for t in targets
           if t.history >= cfg.report_min_history and t.age >= cfg.report_min_age
           and t.coast <= cfg.report_max_coast]
    return np.array(pts, dtype=float).reshape(len(pts), cfg.d)


class MultiTargetFilter:
    """Stateful wrapper that carries targets, model and id counter across frames."""

    def __init__(self, cfg: FilterConfig, model: ModelTuple | None = None,
                 opt: OptimizerState | None = None, start_time: int = 0):
        self.cfg = cfg
        self.model = init_model(cfg) if model is None else model
        self.opt = OptimizerState.zeros_like(self.model) if opt is None else opt
        self.targets = TargetSet((), start_time - 1)
        self._ids = itertools.count()

    def update(self, frame: MeasurementFrame) -> AssociationOutcome:
        if frame.time_step != self.targets.time_step + 1:
            # gaps and a non-zero start are allowed for streams read from files
            self.targets = replace(self.targets, time_step=frame.time_step - 1)
        self.targets, self.model, self.opt, outcome = step(
            self.targets, frame, self.model, self.opt, self.cfg, self._ids)
        return outcome

    def estimates(self) -> np.ndarray:
        return estimates(self.targets, self.cfg)
