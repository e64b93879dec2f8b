"""Shared helpers: cached spectral decompositions for reuse across tests."""
from functools import lru_cache

from diskescape import ModelParams, assemble_vtv, decompose


@lru_cache(maxsize=32)
def spectral_case(a, eps, n_trunc, d1=1.0, d2=1.0, max_n_trunc=8000):
    p = ModelParams(a=a, epsilon=eps, d1=d1, d2=d2)
    return decompose(assemble_vtv(p, n_trunc, max_n_trunc=max_n_trunc))
