"""Subword vocabularies and greedy longest-match partitioning."""
from ..errors import VocabularyMissing


class SubwordVocabulary:
    """Ordered subword list; ids follow file order.

    Two specials sit past the end: ``pad_id == size`` and ``unk_id == size + 1``.
    """

    def __init__(self, subwords, frequencies=None):
        subwords = list(subwords)
        if not subwords:
            raise VocabularyMissing("empty subword vocabulary")
        if len(set(subwords)) != len(subwords):
            raise VocabularyMissing("duplicate subwords in vocabulary")
        self.subwords = tuple(subwords)
        self.frequencies = tuple(frequencies) if frequencies is not None else (0,) * len(subwords)
        self.index = {s: i for i, s in enumerate(self.subwords)}
        self.max_len = max(map(len, self.subwords))

    @classmethod
    def from_tsv(cls, text):
        words, freqs = [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            word, _, freq = line.partition("\t")
            words.append(word)
            freqs.append(int(freq) if freq else 0)
        return cls(words, freqs)

    @property
    def size(self):
        return len(self.subwords)

    @property
    def pad_id(self):
        return self.size

    @property
    def unk_id(self):
        return self.size + 1

    def __len__(self):
        return self.size

    def partition(self, text):
        """Split ``text`` left to right, always taking the longest subword that matches.

        Characters not covered by any subword come out as single-character
        pieces mapped to ``unk_id``. Returns ``[(piece, id), ...]``.
        """
        out = []
        i, n = 0, len(text)
        while i < n:
            for L in range(min(self.max_len, n - i), 0, -1):
                piece = text[i:i + L]
                idx = self.index.get(piece)
                if idx is not None:
                    out.append((piece, idx))
                    i += L
                    break
            else:
                out.append((text[i], self.unk_id))
                i += 1
        return out

    def encode(self, text):
        return [idx for _, idx in self.partition(text)]
