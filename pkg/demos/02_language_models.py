"""
Per-level n-gram language models
================================

Each readability level gets its own add-one smoothed unigram, bigram and
trigram model. A document's perplexity under each of the nine models is a
feature: text resembling level-1 books is less surprising to the level-1
models.
"""

# %%
# A hand-checkable case: unigram counts a=2, b=1 plus an <unk> slot give
# P(a)=3/6 and P(b)=2/6, so the perplexity of "a b" is sqrt(6).
import math

from filread.lm import perplexity, perplexity_sentences, train_ngram

m = train_ngram([["a", "a", "b"]], order=1)
print(perplexity(m, ["a", "b"]), math.sqrt(6))

# %%
# Higher orders pad each sentence with start markers and one end marker.
bigram = train_ngram([["a", "b"]], order=2)
print(sorted(bigram.ngram_counts))

# %%
# Train level models on a synthetic corpus and score an unseen document.
from filread.evaluation import stratified_split
from filread.pipeline import train_level_lms
from filread.synth import SynthConfig, generate_corpus

corpus = generate_corpus(SynthConfig(docs_per_level=40, seed=1))
train, test = stratified_split(corpus, 0.3, seed=1)
lms = train_level_lms(train)
doc = test.by_level(3)[0]
for (level, order), model in sorted(lms.items()):
    print(f"{level} order {order}: PP = {perplexity_sentences(model, doc.sentences):8.2f}")
