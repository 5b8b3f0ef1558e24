"""Size of the two-entity model space (encoder subsets per entity)."""
import math
from itertools import combinations


def enumerate_model_space(n_drug, n_protein, max_total):
    """Number of (drug encoder set, protein encoder set) pairs, each non-empty,
    with at most ``max_total`` encoders in total."""
    if min(n_drug, n_protein, max_total) < 1:
        raise ValueError("all arguments must be >= 1")
    return sum(math.comb(n_drug, d) * math.comb(n_protein, p)
               for d in range(1, n_drug + 1) for p in range(1, n_protein + 1) if d + p <= max_total)


def enumerate_models(drug_encoders, protein_encoders, max_total):
    """Yield every (drug subset, protein subset) counted by :func:`enumerate_model_space`."""
    for d in range(1, len(drug_encoders) + 1):
        for p in range(1, min(len(protein_encoders), max_total - d) + 1):
            for ds in combinations(drug_encoders, d):
                for ps in combinations(protein_encoders, p):
                    yield ds, ps
