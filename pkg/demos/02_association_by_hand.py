"""
Histogram association, step by step
===================================

Two predicted targets and two measurements, small gates so every case of
the update shows up: one target survives, one dies, and the far measurement
starts a new track.
"""

# %%
import itertools

import numpy as np

from pointfilter import FilterConfig, MeasurementFrame, associate
from pointfilter.association import association_histograms, closest_indices, targetness_matrix
from pointfilter.core import TargetTuple
from pointfilter.predictor import PredictedTarget

cfg = FilterConfig(a_min=1, g_min=1.0, g_max=5.0)
preds = [PredictedTarget(TargetTuple(np.array([[0.0, 0.0]]), 2, 1.0, False, 0), np.array([0.0, 0.0])),
         PredictedTarget(TargetTuple(np.array([[10.0, 10.0]]), 2, 1.0, False, 1), np.array([10.0, 10.0]))]
frame = MeasurementFrame([[0.1, 0.0], [50.0, 50.0]], time_step=1)

# %%
# Rows are measurements, columns are predicted targets.
T = targetness_matrix(preds, frame)
print(np.round(T, 4))

# %%
C_idx, R_idx, C, R = closest_indices(T)
H_C, H_R = association_histograms(C_idx, R_idx, M=len(preds), N=len(frame))
print("closest target per measurement", C_idx, np.round(C, 4))
print("closest measurement per target", R_idx, np.round(R, 4))
print("H_C", H_C, " H_R", H_R)

# %%
# Target 0 is chosen by a measurement and is within g_min of it: it survives.
# Target 1 is chosen too, but its nearest measurement is beyond g_max: no case
# applies and it is dropped. Nobody's nearest neighbour is (50, 50), so it is born.
out = associate(preds, frame, cfg, itertools.count(2))
for t in out.survived:
    print("survived", t.track_id, t.state.tolist(), "age", t.age)
print("dead", out.dead)
for t in out.born:
    print("born", t.track_id, t.state.tolist(), "age", t.age)
