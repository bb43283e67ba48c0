"""Tweet text normalization, tokenization and phrase matching.

One normalization pipeline is shared by belief seeding, word-vector averaging,
category counting and profanity counting so that all token-level statistics
agree on what a "token" is: lowercase, URLs removed, punctuation replaced by
spaces, split on whitespace.
"""

import re

_URL_RE = re.compile(r"https?://\S+")
# Anything that is not a letter, digit, underscore or '#' becomes a space.
# '#' survives tokenization so hashtag tokens stay intact; it is stripped by
# normalize_tokens so "#war" and "war" match the same lexicon entries.
_PUNCT_RE = re.compile(r"[^\w#]+")


def strip_urls(text: str) -> str:
    return _URL_RE.sub(" ", text)


def tokenize(text: str) -> list[str]:
    """Raw whitespace tokens, no normalization (used for URL/hashtag counting)."""
    return text.split()


def normalize_tokens(text: str) -> list[str]:
    """Normalized tokens: lowercase, URLs stripped, punctuation -> space."""
    text = strip_urls(text.lower())
    text = _PUNCT_RE.sub(" ", text)
    return [t.lstrip("#") for t in text.split() if t.lstrip("#")]


class PhraseMatcher:
    """Whole-token matching of (possibly multi-word) lowercase phrases.

    A phrase matches iff its token sequence occurs contiguously in the
    normalized token stream, so "skypes" does not match inside "skypeserver"
    and "white genocide" requires both tokens adjacent.
    """

    def __init__(self, phrases):
        self.phrases = list(phrases)
        self._by_first = {}
        self._max_len = 1
        for phrase in self.phrases:
            toks = tuple(normalize_tokens(phrase))
            if not toks:
                continue
            self._by_first.setdefault(toks[0], []).append(toks)
            self._max_len = max(self._max_len, len(toks))

    def count_matches(self, tokens: list[str]) -> int:
        """Number of phrase occurrences in the token list (non-overlap not enforced)."""
        hits = 0
        for i, tok in enumerate(tokens):
            for cand in self._by_first.get(tok, ()):
                if tuple(tokens[i : i + len(cand)]) == cand:
                    hits += 1
        return hits

    def matches(self, tokens: list[str]) -> bool:
        for i, tok in enumerate(tokens):
            for cand in self._by_first.get(tok, ()):
                if tuple(tokens[i : i + len(cand)]) == cand:
                    return True
        return False

    def matches_text(self, text: str) -> bool:
        return self.matches(normalize_tokens(text))
