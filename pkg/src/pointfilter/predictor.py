"""One-step prediction of every target with the shared recurrent model."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import FilterConfig, TargetSet, TargetTuple
from .neural import ModelTuple, OptimizerState, TrainingDiverged, predict_next, train_online

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PredictedTarget:
    """A target from the previous frame paired with its predicted next state.

    ``fallback`` is ``None`` when the network produced the prediction, else
    the reason the last row was reused (``"short-history"``,
    ``"diverged"``).
    """

    base: TargetTuple
    predicted_state: np.ndarray
    fallback: str | None = None


def network_frame(seq: np.ndarray, cfg: FilterConfig):
    """Map a state history into the coordinates the network trains on.

    Returns ``(transformed, anchor, scale)``; a network output ``y`` maps back
    to the state ``anchor + scale * y``. With normalisation off the map is
    the identity. With increments the transformed sequence is one row
    shorter than the history.
    """
    if not cfg.normalize:
        return seq, np.zeros(seq.shape[1]), 1.0
    anchor = seq[-1]
    if cfg.increments:
        return np.diff(seq, axis=0) / cfg.norm_scale, anchor, cfg.norm_scale
    return (seq - anchor) / cfg.norm_scale, anchor, cfg.norm_scale


def predict_target(target: TargetTuple, m: ModelTuple, opt: OptimizerState, cfg: FilterConfig):
    """Train on one target's history, then predict its next state.

    Returns ``(PredictedTarget, model, optimizer_state)``.
    """
    if target.history < cfg.min_history_for_training:
        return PredictedTarget(target, target.last.copy(), "short-history"), m, opt
    xs, anchor, scale = network_frame(target.state, cfg)
    try:
        m_new, opt_new = train_online(m, opt, xs, None, cfg)
        y = predict_next(m_new, xs)
        if not np.all(np.isfinite(anchor + scale * y)):
            raise TrainingDiverged("non-finite prediction")
    except TrainingDiverged as exc:
        log.warning("track %d: %s; keeping previous model and last state", target.track_id, exc)
        return PredictedTarget(target, target.last.copy(), "diverged"), m, opt
    return PredictedTarget(target, anchor + scale * y), m_new, opt_new


def predict_all(targets: TargetSet, m: ModelTuple, opt: OptimizerState, cfg: FilterConfig):
    """Predict every target, fine-tuning the shared model on each in track-id order.

    Returns ``(predictions, model, optimizer_state)``; the predictions follow
    the order of ``targets``.
    """
    preds = {}
    for target in sorted(targets, key=lambda t: t.track_id):
        preds[target.track_id], m, opt = predict_target(target, m, opt, cfg)
    return [preds[t.track_id] for t in targets], m, opt
