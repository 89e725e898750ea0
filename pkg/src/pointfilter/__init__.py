"""Multi-target filtering with an online-trained recurrent motion model and histogram association."""
from .association import (AssociationOutcome, MultiTargetFilter, associate,
                          association_histograms, closest_indices, estimates, step,
                          targetness_matrix)
from .core import FilterConfig, MeasurementFrame, TargetSet, TargetTuple, new_birth_target
from .harness import (RunReport, emit, ingest_measurements, ingest_truth, load_config,
                      read_report, run_filter, run_sweep, run_synthetic)
from .metrics import hungarian, ospa, ospa_series
from .neural import (ModelTuple, OptimizerState, init_model, load_model, predict_next,
                     save_model, train_online)
from .predictor import PredictedTarget, predict_all
from .simulator import ScenarioSpec, Track, default_scenario, generate

__version__ = "0.1.0"
