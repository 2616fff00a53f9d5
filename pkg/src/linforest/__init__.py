"""Random forests with ridge-regularized linear models in the leaves.

The split search is exact and quasilinear: features are sorted once and
candidate boundaries are scored through rank-one updates of the inverse
regularized Gram matrix, so each node costs O(n log n + n d^2) instead of
the quadratic cost of refitting per boundary. Splits are accepted only
when a one-step look-ahead cross-validation gain clears min_split_gain.
"""

from .dataset import (Column, Dataset, LinearFeatureSet, from_arrays,
                      group_distinct, linear_feature_set, linear_matrix,
                      linear_row, load_csv, sorted_order, write_csv)
from .errors import ConfigError, DataError, LinforestError
from .forest import (Forest, HyperParams, evaluate, load_forest, predict,
                     predict_row, save_forest, train_forest)
from .ridge import (LeafModel, RidgeComponents, components_from_rows,
                    predict_leaf, rss_pair)
from .splitter import (SplitCandidate, SplitConfig, best_split_categorical,
                       best_split_node, best_split_numeric)
from .synthgen import (StepSurface, SynthSpec, gen_dataset, gen_linear,
                       gen_mixed, gen_step, gen_train_test, linear_surface)
from .tree import (Internal, Leaf, StoppingConfig, TreeParams, audit_tree,
                   build_tree, check_split, predict_tree, split_gain,
                   structure_signature)
from .oracle import OracleReport, best_split_exhaustive, ridge_fit_direct, timing_probe

__version__ = "0.1.0"
