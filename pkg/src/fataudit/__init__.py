"""Fairness, accountability and transparency audits for tabular classifiers."""

from .counterfactuals import (Counterfactual, CounterfactualConfig,
                              CounterfactualSearch, FairnessVerdict,
                              config_for_dataset, counterfactual_fairness,
                              default_grids, find_counterfactuals,
                              same_class_variations, score_feasibility)
from .density import (DensityEstimator, density_score, fit_density,
                      flag_sparse_rows, prediction_confidence, score_rows)
from .errors import (ArgumentError, AuditError, FitError, IngestionError,
                     RemoteModelError, SchemaError, StateError, TrainingError,
                     UnsupportedError)
from .fairness import (DisparityMatrix, ThresholdAssignment, confusion,
                       fit_group_thresholds, group_fairness,
                       performance_disparity, systemic_bias)
from .grouping import GroupPartition, partition, representation_audit
from .models import (KNNModel, LogisticModel, PredictionBatch, RemoteModel,
                     TreeModel, make_model, predict_labels, try_predict_proba)
from .surrogates import (IcePd, SurrogateConfig, SurrogateExplanation,
                         discretize, explain, fit_ridge, fit_surrogate,
                         fit_tree, ice_pd, kernel_weights, sample_global,
                         sample_mixup, sample_normal, select_features)
from .tabular import (Column, Dataset, FeatureSchema, distance_matrix,
                      infer_schema, load_csv, load_schema_file, mixed_distance,
                      save_csv, save_schema_file, summarize)

__version__ = "0.1.0"
