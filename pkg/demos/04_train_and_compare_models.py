"""
Comparing classifiers and feature families
==========================================

Logistic regression, a linear SVM and a random forest are trained on the
same split, first on every family, then on surface counts plus syllable
patterns only.
"""

# %%
from filread.evaluation import metrics_markdown
from filread.pipeline import ExperimentConfig, run_experiment
from filread.synth import SynthConfig, generate_corpus

corpus = generate_corpus(SynthConfig())  # 300 documents, seed 42
rows = []
for families in ("trad,lex,lm,syll,morph", "trad,syll"):
    cfg = ExperimentConfig(model="logreg,svm,rf", features=families, n_explain=0)
    result = run_experiment(cfg, corpus)
    tag = "All" if families.count(",") == 4 else "TRAD+SYLL"
    rows += [(f"{name.split(' + ')[0]} + {tag}", rep) for name, rep in result.metric_rows]

print(metrics_markdown(rows))
