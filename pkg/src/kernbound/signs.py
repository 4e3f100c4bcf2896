"""
Rademacher sign vectors.

Monte Carlo trials draw their signs from a Philox counter-based generator:
trial ``t`` always reads the same counter range for a given seed, so a trial
produces the same vector whichever block or worker computes it.
"""

from typing import Iterator

import numpy as np

from .errors import ParameterError

WORDS_PER_COUNTER = 4
BITS_PER_WORD = 64
MAX_SEED = 2 ** 64 - 1


def counters_per_trial(m: int) -> int:
    words = -(-m // BITS_PER_WORD)
    return -(-words // WORDS_PER_COUNTER)


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= MAX_SEED:
        raise ParameterError(f"seed must be an integer in [0, 2^64), got {seed}", {"seed": seed})
    return int(seed)


def _bits_to_signs(words: np.ndarray, m: int) -> np.ndarray:
    raw = np.ascontiguousarray(words.astype("<u8", copy=False)).view(np.uint8)
    bits = np.unpackbits(raw.reshape(words.shape[0], words.shape[1] * 8), axis=1, bitorder="little")[:, :m]
    return 1.0 - 2.0 * bits.astype(np.float64)


def mc_signs(seed: int, m: int, first_trial: int, n_trials: int) -> np.ndarray:
    """Sign vectors for trials ``first_trial .. first_trial + n_trials - 1``, shape (n_trials, m)."""
    seed = check_seed(seed)
    if m < 1:
        raise ParameterError("m must be >= 1", {"m": m})
    if first_trial < 0 or n_trials < 0:
        raise ParameterError("trial indices must be nonnegative", {"first_trial": first_trial, "n_trials": n_trials})
    per_trial = counters_per_trial(m)
    bit_generator = np.random.Philox(key=seed, counter=first_trial * per_trial)
    words = bit_generator.random_raw(n_trials * per_trial * WORDS_PER_COUNTER)
    return _bits_to_signs(np.asarray(words).reshape(n_trials, per_trial * WORDS_PER_COUNTER), m)


def enumerate_signs(m: int, half: bool = True, block: int = 4096) -> Iterator[np.ndarray]:
    """
    Every sign vector of length m in blocks of rows.

    With ``half`` only vectors with sigma_0 = +1 are produced; the other half
    are their negations.
    """
    if m < 1:
        raise ParameterError("m must be >= 1", {"m": m})
    free = m - 1 if half else m
    total = 2 ** free
    shifts = np.arange(free, dtype=np.uint64)
    for start in range(0, total, block):
        codes = np.arange(start, min(start + block, total), dtype=np.uint64)
        bits = (codes[:, None] >> shifts[None, :]) & np.uint64(1)
        free_signs = 1.0 - 2.0 * bits.astype(np.float64)
        if half:
            yield np.hstack([np.ones((codes.size, 1)), free_signs])
        else:
            yield free_signs
