"""
Explaining single documents
===========================

For one test document, perturb its z-scored features bin by bin, weight
the perturbations by how many quartile bins they share with the document,
and fit a weighted ridge model to the forest's probability for the level.
The largest coefficients are reported as quartile conditions.
"""

# %%
import warnings

from filread.explain import ExplainConfig, explain_instance, explanation_to_text, fit_discretizer
from filread.models import predict_label, train
from filread.pipeline import ExperimentConfig, prepare_data
from filread.synth import SynthConfig, generate_corpus

warnings.simplefilter("ignore")
cfg = ExperimentConfig(features="trad,syll")
data = prepare_data(cfg, generate_corpus(SynthConfig()))
model = train(data.Z_train, data.y_train, cfg.train_config("rf"), feature_names=data.names, stats=data.stats)
disc = fit_discretizer(data.Z_train, data.names)

# %%
# One correctly classified document per level.
for level in (1, 2, 3):
    i = next(i for i, y in enumerate(data.y_test) if y == level and predict_label(model, data.Z_test[i]) == level)
    vec = data.test_vectors[i]
    exp = explain_instance(model, vec, disc, level, ExplainConfig(seed=7))
    print(explanation_to_text(exp))

# %%
# The boundaries of one feature chain from bin to bin, so conditions for
# different documents can be read as one scale.
from filread.explain import render_boundary

print([str(render_boundary(disc, "avg_sentence_length", b)) for b in range(4)])
