"""Corpus-built word-level tokenizer with reserved control tokens.

The same normalization (lowercase, '.' and ',' split into standalone tokens,
whitespace split) is used for building the vocabulary, encoding model
targets, and tokenizing text for the evaluation metrics, so training and
scoring never disagree on word boundaries.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import VocabularyError

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
RESERVED_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")


def normalize_text(text: str) -> list[str]:
    """Lowercase and split, with '.' and ',' as standalone tokens."""
    return text.lower().replace(".", " . ").replace(",", " , ").split()


@dataclass(frozen=True)
class Vocabulary:
    """Immutable token table; ids are contiguous and start at the reserved four."""

    id_to_token: tuple[str, ...]
    token_to_id: dict[str, int]

    def __len__(self) -> int:
        return len(self.id_to_token)

    def token_id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.id_to_token):
            raise VocabularyError(f"token id {token_id} outside vocabulary of size {len(self)}")
        return self.id_to_token[token_id]


def _make_vocabulary(tokens: Sequence[str]) -> Vocabulary:
    id_to_token = RESERVED_TOKENS + tuple(tokens)
    return Vocabulary(id_to_token, {tok: i for i, tok in enumerate(id_to_token)})


def build_vocab(descriptions: Iterable[str], min_freq: int = 1) -> Vocabulary:
    """Build the token table from corpus text.

    Tokens with frequency >= min_freq enter in descending frequency, ties
    broken lexicographically, after the four reserved ids.
    """
    counts: Counter[str] = Counter()
    for text in descriptions:
        counts.update(normalize_text(text))
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_freq and tok not in RESERVED_TOKENS),
        key=lambda tok: (-counts[tok], tok),
    )
    return _make_vocabulary(kept)


def encode(vocab: Vocabulary, text: str, max_len: int) -> list[int]:
    """Encode text as [BOS, word ids..., EOS], truncated to max_len total."""
    if max_len < 3:
        raise VocabularyError(f"max_len must be at least 3, got {max_len}")
    ids = [vocab.token_id(tok) for tok in normalize_text(text)]
    return [BOS_ID] + ids[: max_len - 2] + [EOS_ID]


def decode(vocab: Vocabulary, ids: Sequence[int]) -> str:
    """Join tokens with spaces, dropping PAD/BOS and stopping at the first EOS."""
    words = []
    for token_id in ids:
        token_id = int(token_id)
        if token_id == EOS_ID:
            break
        if token_id in (PAD_ID, BOS_ID):
            continue
        words.append(vocab.token(token_id))
    return " ".join(words)


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    """One token per line; the line number is the id."""
    Path(path).write_text("\n".join(vocab.id_to_token) + "\n", encoding="utf-8")


def load_vocab(path: str | Path) -> Vocabulary:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if tuple(lines[:4]) != RESERVED_TOKENS:
        raise VocabularyError(f"vocabulary file {path} does not start with the reserved tokens")
    return _make_vocabulary(lines[4:])


__all__ = [
    "PAD_ID",
    "BOS_ID",
    "EOS_ID",
    "UNK_ID",
    "RESERVED_TOKENS",
    "Vocabulary",
    "normalize_text",
    "build_vocab",
    "encode",
    "decode",
    "save_vocab",
    "load_vocab",
]
