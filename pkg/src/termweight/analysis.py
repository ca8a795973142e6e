"""Text analysis: tokenization, case folding, stopword removal, stemming.

Every stage of the pipeline (target generation, indexing, query weighting,
searching) runs text through the same analyzer, so term keys in weight
files always agree with terms in the index lexicon.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from termweight.errors import ConfigError

# Maximal runs of unicode alphanumerics (word chars minus underscore).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

STEM_NONE = "none"
STEM_PORTER = "porter"


@dataclass(frozen=True)
class AnalyzerConfig:
    """Deterministic analysis settings: same config + same text => same terms."""

    lowercase: bool = True
    stem: str = STEM_PORTER
    stopwords: frozenset[str] | None = None

    def __post_init__(self):
        if self.stem not in (STEM_NONE, STEM_PORTER):
            raise ConfigError(f"unknown stemmer {self.stem!r} (expected none|porter)")
        if self.stopwords is not None and not isinstance(self.stopwords, frozenset):
            object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def without_stopwords(self) -> "AnalyzerConfig":
        """Same analysis with stopword removal disabled.

        Target computation uses this so stopwords still receive targets;
        they stay droppable at index time under the original config.
        """
        if self.stopwords is None:
            return self
        return AnalyzerConfig(lowercase=self.lowercase, stem=self.stem, stopwords=None)


def segment(text: str) -> list[str]:
    """Raw alphanumeric tokens in order, before any normalization."""
    return _TOKEN_RE.findall(text)


def analyze(text: str, config: AnalyzerConfig | None = None) -> list[str]:
    """Normalize text into the ordered term sequence used everywhere downstream.

    Pipeline: case fold (on the whole text, so tokens always match the token
    rule) -> alphanumeric tokenization -> stopword removal -> stemming.
    Positions elsewhere in the package are 0-based indices into the returned
    sequence. Empty text yields an empty sequence.
    """
    if config is None:
        config = AnalyzerConfig()
    if config.lowercase:
        text = text.lower()
    tokens = _TOKEN_RE.findall(text)
    if config.stopwords is not None:
        tokens = [t for t in tokens if t not in config.stopwords]
    if config.stem == STEM_PORTER:
        tokens = [porter_stem(t) for t in tokens]
    return tokens


# ---------------------------------------------------------------------------
# Porter stemmer (original 1980 algorithm).
#
# Vowels are a,e,i,o,u plus y when preceded by a consonant. The measure m of
# a stem is the number of vowel->consonant transitions, i.e. m in the form
# [C](VC)^m[V]. Within each step the longest matching suffix decides the
# rule; if its condition fails the step does nothing.
# ---------------------------------------------------------------------------

_VOWELS = frozenset("aeiou")


def _is_cons(word: str, i: int) -> bool:
    c = word[i]
    if c in _VOWELS:
        return False
    if c == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    m = 0
    prev_cons = None
    for i in range(len(stem)):
        cons = _is_cons(stem, i)
        if prev_cons is False and cons:
            m += 1
        prev_cons = cons
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _is_cons(word, len(word) - 1)


def _ends_cvc(stem: str) -> bool:
    if len(stem) < 3:
        return False
    n = len(stem)
    return (
        _is_cons(stem, n - 3)
        and not _is_cons(stem, n - 2)
        and _is_cons(stem, n - 1)
        and stem[-1] not in "wxy"
    )


# (suffix, replacement) pairs; longest suffix wins within a step.
_STEP2 = sorted(
    [
        ("ational", "ate"), ("tional", "tion"),
        ("enci", "ence"), ("anci", "ance"),
        ("izer", "ize"), ("abli", "able"),
        ("alli", "al"), ("entli", "ent"), ("eli", "e"), ("ousli", "ous"),
        ("ization", "ize"), ("ation", "ate"), ("ator", "ate"),
        ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
        ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"),
        ("biliti", "ble"),
    ],
    key=lambda p: -len(p[0]),
)

_STEP3 = sorted(
    [
        ("icate", "ic"), ("ative", ""), ("alize", "al"),
        ("iciti", "ic"), ("ical", "ic"), ("ful", ""), ("ness", ""),
    ],
    key=lambda p: -len(p[0]),
)

_STEP4 = sorted(
    [
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant",
        "ement", "ment", "ent", "ion", "ou", "ism", "ate", "iti",
        "ous", "ive", "ize",
    ],
    key=len,
    reverse=True,
)


def _step1ab(w: str) -> str:
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed") and _has_vowel(w[:-2]):
        w = _step1b_fixup(w[:-2])
    elif w.endswith("ing") and _has_vowel(w[:-3]):
        w = _step1b_fixup(w[:-3])
    return w


def _step1b_fixup(w: str) -> str:
    if w.endswith(("at", "bl", "iz")):
        return w + "e"
    if _ends_double_cons(w) and w[-1] not in "lsz":
        return w[:-1]
    if _measure(w) == 1 and _ends_cvc(w):
        return w + "e"
    return w


def _step1c(w: str) -> str:
    if w.endswith("y") and _has_vowel(w[:-1]):
        return w[:-1] + "i"
    return w


def _map_suffix(w: str, rules) -> str:
    for suffix, repl in rules:
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if _measure(stem) > 0:
                return stem + repl
            return w
    return w


def _step4(w: str) -> str:
    for suffix in _STEP4:
        if w.endswith(suffix):
            stem = w[: -len(suffix)]
            if _measure(stem) > 1:
                if suffix == "ion" and not stem.endswith(("s", "t")):
                    return w
                return stem
            return w
    return w


def _step5(w: str) -> str:
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            w = stem
    if w.endswith("ll") and _measure(w) > 1:
        w = w[:-1]
    return w


def porter_stem(word: str) -> str:
    """Stem a single lowercase token. Words of length <= 2 pass through."""
    if len(word) <= 2:
        return word
    word = _step1ab(word)
    word = _step1c(word)
    word = _map_suffix(word, _STEP2)
    word = _map_suffix(word, _STEP3)
    word = _step4(word)
    word = _step5(word)
    return word
