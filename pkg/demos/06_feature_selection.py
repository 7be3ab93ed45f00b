"""
Correlation, global and combined feature selection
==================================================

Keep the top-10 features by rank correlation, the top-10 by forest
importance, or their union. Correlation alone misses features whose
relationship with the level is not monotone; the forest sees them.
"""

# %%
import warnings

import numpy as np

from filread.pipeline import ExperimentConfig, run_experiment
from filread.synth import SynthConfig, generate_corpus

warnings.simplefilter("ignore")
corpus = generate_corpus(SynthConfig())
acc = {}
for seed in range(42, 47):
    result = run_experiment(ExperimentConfig(seed=seed, selection="spearman,global,combined", n_explain=0), corpus)
    for name, rep in result.metric_rows:
        acc.setdefault(name, []).append(rep.accuracy)
    if seed == 42:
        combined = result.runs[-1].selection.names
        print(f"{len(combined)} combined features:", ", ".join(combined))

for name, values in acc.items():
    print(f"{name:14s} mean accuracy {np.mean(values):.4f}  ({', '.join(f'{v:.3f}' for v in values)})")
