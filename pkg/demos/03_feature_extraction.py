"""
The 46 linguistic predictors
============================

Features come in five families: surface counts (TRAD), lexical diversity
and part-of-speech ratios (LEX), language-model perplexities (LM),
syllable-pattern densities (SYLL) and verb-inflection frequencies (MORPH).
"""

# %%
from filread.corpus import make_document
from filread.features import Resources, default_registry, extract_all, feature_matrix, standardize

registry = default_registry()
for family in registry.families:
    names = [n for n, f in registry.entries if f == family]
    print(f"{family:5s} {len(names):2d}  {', '.join(names[:4])}, ...")

# %%
# Without language models, pick the other four families.
res = Resources.default(registry=registry.select_families(["trad", "lex", "syll", "morph"]))
doc = make_document("d1", "Kumain ang bata ng tinapay. Naglalaro sila sa pinakamalaking parke!", 2)
vec = extract_all(doc, res)
for name in ("word_count", "avg_syllables_per_word", "ttr", "verb_token_ratio", "cv_density", "actor_focus"):
    print(f"{name:24s} {vec[name]:.3f}")

# %%
# Features are z-scored with statistics from the training matrix only;
# constant columns map to zero.
from filread.synth import SynthConfig, generate_corpus

corpus = generate_corpus(SynthConfig(docs_per_level=20, seed=3))
X = feature_matrix([extract_all(d, res) for d in corpus], res.registry.names)
Z, stats = standardize(X)
print(Z.shape, "column means ~0:", abs(Z.mean(axis=0)).max() < 1e-9)
