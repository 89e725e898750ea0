import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from pointfilter.core import FilterConfig, TargetSet, TargetTuple, new_birth_target
from pointfilter.neural import ModelTuple, OptimizerState, init_model, predict_next
from pointfilter.predictor import network_frame, predict_all, predict_target


def fresh(cfg, seed=0):
    m = init_model(cfg, np.random.default_rng(seed))
    return m, OptimizerState.zeros_like(m)


def test_single_row_uses_persistence():
    cfg = FilterConfig()
    m, opt = fresh(cfg)
    p, m2, opt2 = predict_target(new_birth_target([7, 7], cfg, 0), m, opt, cfg)
    assert p.predicted_state.tolist() == [7.0, 7.0]
    assert p.fallback == "short-history"
    assert m2 is m and opt2 is opt


def test_empty_set_leaves_model_alone():
    cfg = FilterConfig()
    m, opt = fresh(cfg)
    preds, m2, opt2 = predict_all(TargetSet((), 0), m, opt, cfg)
    assert preds == [] and m2 is m and opt2 is opt


def test_linear_motion_is_learned():
    cfg = FilterConfig()
    history = np.column_stack([np.arange(10.0), np.zeros(10)])
    hits = 0
    for seed in range(5):
        m, opt = fresh(FilterConfig(rng_seed=seed), seed)
        p, _, opt2 = predict_target(TargetTuple(history, 3, 10.0, False, 0), m, opt, cfg)
        assert opt2.step == cfg.epochs_init and p.fallback is None
        hits += np.linalg.norm(p.predicted_state - [10.0, 0.0]) <= 0.5
    assert hits >= 3


def test_zero_model_predicts_output_bias():
    m = ModelTuple.zeros(2, 4, 2)
    m = m.with_params(list(m.params()[:-1]) + [np.array([1.5, -2.0])])
    seq = np.random.default_rng(1).normal(size=(5, 2))
    assert predict_next(m, seq).tolist() == [1.5, -2.0]


def test_network_frame_maps_back():
    seq = np.array([[0.0, 0.0], [3.0, 1.0], [6.0, 2.0]])
    for cfg in (FilterConfig(), FilterConfig(increments=False), FilterConfig(normalize=False)):
        xs, anchor, scale = network_frame(seq, cfg)
        if not cfg.normalize:
            assert xs is seq and scale == 1.0 and not anchor.any()
        elif cfg.increments:
            np.testing.assert_allclose(xs * scale, np.diff(seq, axis=0))
            assert anchor.tolist() == seq[-1].tolist()
        else:
            np.testing.assert_allclose(anchor + scale * xs, seq)


def test_diverged_training_falls_back():
    cfg = FilterConfig()
    m, opt = fresh(cfg)
    bad = m.with_params(tuple(np.full_like(p, np.nan) for p in m.params()))
    history = np.column_stack([np.arange(5.0), np.arange(5.0)])
    p, m2, _ = predict_target(TargetTuple(history, 3, 10.0, False, 0), bad, opt, cfg)
    assert p.fallback == "diverged" and p.predicted_state.tolist() == [4.0, 4.0]
    assert m2 is bad


@settings(max_examples=15, deadline=None)
@given(lengths=st.lists(st.integers(1, 4), max_size=5))
def test_predictions_match_input_cardinality_and_order(lengths):
    cfg = FilterConfig(hidden_units=4, num_layers=1, epochs_init=2, epochs_finetune=1)
    m, opt = fresh(cfg)
    rng = np.random.default_rng(len(lengths))
    ids = rng.permutation(len(lengths)) * 3
    targets = TargetSet(tuple(TargetTuple(rng.normal(size=(n, 2)), 3, 10.0, False, int(i))
                              for n, i in zip(lengths, ids)), 4)
    preds, _, _ = predict_all(targets, m, opt, cfg)
    assert [p.base.track_id for p in preds] == [t.track_id for t in targets]
    for p, t in zip(preds, targets):
        assert p.predicted_state.shape == (2,) and np.all(np.isfinite(p.predicted_state))
        if t.history < cfg.min_history_for_training:
            assert p.predicted_state.tolist() == t.last.tolist()


def test_shared_model_is_tuned_in_track_id_order():
    cfg = FilterConfig(hidden_units=4, num_layers=1, epochs_init=3, epochs_finetune=2)
    m, opt = fresh(cfg)
    rng = np.random.default_rng(0)
    a = TargetTuple(rng.normal(size=(4, 2)), 3, 10.0, False, 5)
    b = TargetTuple(rng.normal(size=(4, 2)), 3, 10.0, False, 2)
    _, m_ab, opt_ab = predict_all(TargetSet((a, b), 0), m, opt, cfg)
    _, m_ba, _ = predict_all(TargetSet((b, a), 0), m, opt, cfg)
    assert opt_ab.step == 3 + 2
    for x, y in zip(m_ab.params(), m_ba.params()):
        assert x.tobytes() == y.tobytes()
