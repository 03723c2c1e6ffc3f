"""Inflection-tolerant matching of lemma concepts against sentence tokens.

Suffix rules (a token matches a lemma when it equals the lemma or one of
its candidate stems does):

    -ing  stem, stem+e, undoubled stem, -ying -> -ie   running -> run
    -ed   stem, stem+e (the -d case), undoubled stem,  stopped -> stop
          -ied -> -y                                   used -> use
    -ies  -y                                           flies -> fly
    -es   stem                                         boxes -> box
    -s    stem                                         throws -> throw

A lemma dictionary (`inflected<TAB>lemma` lines) takes precedence over the
rules for the forms it lists.
"""
import re
import string
from collections import defaultdict
from dataclasses import dataclass

from concept_ordering.utils import open_text

_PUNCTUATION = string.punctuation + "‘’“”–—…"
_POSSESSIVE_RE = re.compile(r"['’]s$")
_SPLIT_RE = re.compile(r"[^\w-]+|_")
_VOWELS = set("aeiou")


@dataclass(frozen=True)
class TokenizedSentence:
    tokens: tuple
    raw: str

    def __len__(self):
        return len(self.tokens)


def tokenize(sentence):
    tokens = []
    for chunk in sentence.lower().split():
        chunk = _POSSESSIVE_RE.sub("", chunk.strip(_PUNCTUATION))
        for piece in _SPLIT_RE.split(chunk):
            piece = piece.strip("-")
            if piece:
                tokens.append(piece)
    return TokenizedSentence(tuple(tokens), sentence)


def _undouble(stem):
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS:
        return stem[:-1]
    return None


def candidate_lemmas(token):
    """All stems the suffix rules derive from `token`, longest suffix first."""
    candidates = []
    if token.endswith("ing") and len(token) > 4:
        stem = token[:-3]
        candidates += [stem, stem + "e", _undouble(stem)]
        if stem.endswith("y"):
            candidates.append(stem[:-1] + "ie")
    if token.endswith("ied") and len(token) > 4:
        candidates.append(token[:-3] + "y")
    if token.endswith("ed") and len(token) > 3:
        stem = token[:-2]
        candidates += [stem, stem + "e", _undouble(stem)]
    if token.endswith("ies") and len(token) > 4:
        candidates.append(token[:-3] + "y")
    if token.endswith("es") and len(token) > 3:
        candidates.append(token[:-2])
    if token.endswith("s") and not token.endswith("ss") and len(token) > 2:
        candidates.append(token[:-1])
    return [c for c in dict.fromkeys(candidates) if c]


class LemmaDictionary:

    def __init__(self, entries=None):
        self.lemmas = defaultdict(set)
        for inflected, lemma in entries or ():
            self.lemmas[inflected.lower()].add(lemma.lower())

    def __contains__(self, token):
        return token in self.lemmas

    def __len__(self):
        return len(self.lemmas)

    def get(self, token):
        return self.lemmas.get(token, set())

    @classmethod
    def from_tsv(cls, path):
        entries = []
        with open_text(path) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                inflected, lemma = line.split("\t")[:2]
                entries.append((inflected, lemma))
        return cls(entries)


def matches(lemma, token, dictionary=None):
    if token == lemma:
        return True
    if dictionary is not None and token in dictionary:
        return lemma in dictionary.get(token)
    return lemma in candidate_lemmas(token)


def match_position(concept, sent, dictionary=None):
    if isinstance(sent, str):
        sent = tokenize(sent)
    for i, token in enumerate(sent.tokens):
        if matches(concept, token, dictionary):
            return i
    return None


class LexicalMatcher:
    """Rule-based matcher with an optional lemma dictionary override."""

    def __init__(self, dictionary=None):
        self.dictionary = dictionary

    @classmethod
    def from_path(cls, dictionary_path=None):
        if dictionary_path is None:
            return cls()
        return cls(LemmaDictionary.from_tsv(dictionary_path))

    def tokenize(self, sentence):
        return tokenize(sentence)

    def matches(self, lemma, token):
        return matches(lemma, token, self.dictionary)

    def match_position(self, concept, sent):
        return match_position(concept, sent, self.dictionary)

    def lemma_candidates(self, token):
        found = {token} | set(candidate_lemmas(token))
        if self.dictionary is not None and token in self.dictionary:
            found = {token} | self.dictionary.get(token)
        return found
