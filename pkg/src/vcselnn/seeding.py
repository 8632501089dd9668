"""Stable derivation of independent sub-seeds from one master seed.

Every stochastic element in the package (input weights, mixing matrix, node
layout, noise streams, training moves, ...) draws its seed through
:func:`subseed` so that a single master seed pins the whole experiment while
keeping the individual streams statistically independent.
"""

from __future__ import annotations

import hashlib


def subseed(master: int, *labels) -> int:
    """Derive a 64-bit seed from ``master`` and a path of labels.

    The same ``(master, labels)`` pair always yields the same value; distinct
    label paths yield unrelated values.  Labels may be ints or strings.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "little")
