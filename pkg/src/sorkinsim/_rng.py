import numpy as np

def make_rng(seed) -> np.random.Generator:
    """Return a counter-based (Philox) generator for ``seed``.

    A ready ``Generator`` is passed through untouched so callers can share
    one stream across several draws.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    if seed is None or isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        from .errors import DomainError

        raise DomainError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def derived_seed(seed: int, *key: int) -> np.random.SeedSequence:
    """Independent child stream addressed by an integer key path."""
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
