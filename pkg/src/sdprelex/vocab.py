from typing import Iterable, Sequence


class Vocabulary:
    """String <-> id mapping with reserved entries at the front."""

    def __init__(self, items: Iterable[str] = (), specials: Sequence[str] = ()):
        self.itos = []
        self.stoi = {}
        for s in list(specials) + list(items):
            if s not in self.stoi:
                self.stoi[s] = len(self.itos)
                self.itos.append(s)
        self.n_specials = len(specials)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, s):
        return s in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def get(self, s, default=None):
        return self.stoi.get(s, default)

    def __getitem__(self, s):
        return self.stoi[s]

    def __repr__(self):
        return f"Vocabulary(size={len(self)})"
