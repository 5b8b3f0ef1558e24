from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TokenSequence:
    """Padded token ids with a mask of real positions."""

    token_ids: np.ndarray
    mask: np.ndarray
    max_len: int
    vocab_size: int

    @classmethod
    def from_ids(cls, ids, max_len, vocab_size, pad_id):
        ids = list(ids)[:max_len]
        k = len(ids)
        token_ids = np.full(max_len, pad_id, dtype=np.int64)
        token_ids[:k] = ids
        mask = np.zeros(max_len, dtype=bool)
        mask[:k] = True
        return cls(token_ids=token_ids, mask=mask, max_len=max_len, vocab_size=vocab_size)

    @property
    def length(self):
        return int(self.mask.sum())
