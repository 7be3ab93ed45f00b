"""
Tokens, sentences and syllables
===============================

Every feature downstream is computed from three views of a document:
its lowercase tokens, its sentences, and the syllables of each word.
"""

# %%
# Tokenizing keeps hyphenated reduplication as one token and drops punctuation.
from filread.corpus import classify_syllable_pattern, make_document, split_sentences, syllabify, tokenize

text = "Si Ana ay bata. Araw-araw siyang naglalaro sa labas! Masaya ba siya?"
print(tokenize(text))
print(split_sentences(text))

# %%
# A Document bundles both views with a readability level (1, 2 or 3).
doc = make_document("demo", text, label=1)
print(len(doc.tokens), "tokens in", len(doc.sentences), "sentences")

# %%
# Syllabification uses maximal onset: a vowel takes the longest permissible
# consonant cluster before it, and "ng" counts as a single consonant.
for word in ["bata", "ngayon", "aso", "bahay", "trabaho", "pinakamahalaga", "araw-araw"]:
    sylls = syllabify(word)
    print(f"{word:16s}", "-".join(s.text for s in sylls), " ".join(s.pattern for s in sylls))

# %%
# Patterns are c/v templates; these feed the syllable density features.
for s in ["ba", "prok", "nga", "trans"]:
    print(s, "->", classify_syllable_pattern(s))
