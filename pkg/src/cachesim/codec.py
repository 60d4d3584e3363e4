"""Byte-level XOR with zero padding (the only finite-field operation the schemes use)."""
from __future__ import annotations

from typing import Sequence

import numpy as np


def xor_encode(pieces: Sequence[np.ndarray]) -> np.ndarray:
    """XOR of uint8 pieces, each zero-padded to the longest."""
    n = max((len(p) for p in pieces), default=0)
    out = np.zeros(n, dtype=np.uint8)
    for p in pieces:
        out[:len(p)] ^= np.asarray(p, dtype=np.uint8)
    return out


def xor_decode(payload: np.ndarray, known: Sequence[np.ndarray], length: int | None = None) -> np.ndarray:
    """Recover the one unknown piece from ``payload`` and all the others.

    ``length`` trims the zero padding when the unknown piece is shorter than
    the payload.
    """
    out = xor_encode([payload, *known])
    return out if length is None else out[:length]


def xor_codec(pieces: Sequence[np.ndarray]) -> np.ndarray:
    return xor_encode(pieces)
