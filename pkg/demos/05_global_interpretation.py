"""
Which features matter globally?
===============================

Three views: rank correlation with the level, per-level weights of a linear
model, and impurity importance of a random forest. A two-sample t-test
checks the forest's top surface feature.
"""

# %%
import warnings

import numpy as np

from filread.interpret import (
    cross_reference_top,
    format_spearman_table,
    linear_global_weights,
    rank_by_spearman,
    rf_global_importance,
    two_sample_ttest,
)
from filread.models import train
from filread.pipeline import ExperimentConfig, prepare_data
from filread.synth import SynthConfig, generate_corpus

warnings.simplefilter("ignore")
cfg = ExperimentConfig()
data = prepare_data(cfg, generate_corpus(SynthConfig()))
fam = data.resources.registry

# %%
# Top-10 Spearman correlations with the level.
print(format_spearman_table(rank_by_spearman(data.Z_train, data.y_train, 10, data.names, fam)))

# %%
# Per-level logistic regression weights and the features shared by all three top-10 lists.
logreg = train(data.Z_train, data.y_train, cfg.train_config("logreg"), feature_names=data.names)
per_level = linear_global_weights(logreg, 10, fam)
for r in per_level:
    print(f"level {r.class_context}:", ", ".join(f"{e.name}({e.score:+.2f})" for e in r.entries[:5]))
print("shared:", cross_reference_top(per_level, 10))

# %%
# Random forest importance, annotated with the direction of each feature's correlation.
rf = train(data.Z_train, data.y_train, cfg.train_config("rf"), feature_names=data.names)
for e in rf_global_importance(rf, 5, data.Z_train, data.y_train, fam).entries:
    print(f"{e.name:24s} {e.score:.4f} {e.direction}")

# %%
# Are level-1 and level-3 word counts really different?
wc = np.array([v["word_count"] for v in data.train_vectors])
res = two_sample_ttest(wc[data.y_train == 1], wc[data.y_train == 3])
print(f"t = {res.t_statistic:.2f}, df = {res.degrees_of_freedom:.1f}, p = {res.p_value:.2e}")
