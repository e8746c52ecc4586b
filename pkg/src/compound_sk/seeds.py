"""Deterministic seed derivation for independent random streams.

Every random draw in the package is driven by a 64-bit seed derived from a
master seed, an index (trial, class, codebook draw) and a purpose tag. The mix
is the splitmix64 finaliser applied to a running state::

    state = master
    for word in (tag, index):
        state = splitmix64(state ^ word)

where ``splitmix64(z)`` adds the golden-ratio increment ``0x9E3779B97F4A7C15``
and applies the two xor-shift-multiply rounds of the reference generator.
Distinct tags give disjoint-looking streams, so sources, codebooks and
extractors never share randomness.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

#: Purpose tags. Values are arbitrary distinct 64-bit constants.
TAGS = {
    "source": 0x736F75726365,
    "codebook": 0x636F6465626F6F6B,
    "extractor": 0x65787472616374,
    "estimation": 0x657374696D,
    "ensemble": 0x656E73656D626C,
    "plugin": 0x706C7567696E,
    "search": 0x736561726368,
    "draw": 0x64726177,
}


def splitmix64(z: int) -> int:
    """One step of the splitmix64 generator (returns the output word)."""
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int, tag: str) -> int:
    """Mix ``(master, index, tag)`` into a 64-bit seed."""
    if tag not in TAGS:
        raise ValueError(f"unknown seed tag {tag!r}")
    state = int(master) & MASK64
    for word in (TAGS[tag], int(index) & MASK64):
        state = splitmix64(state ^ word)
    return state


def rng_for(master: int, index: int, tag: str) -> np.random.Generator:
    """A numpy generator seeded from :func:`derive_seed`."""
    return np.random.Generator(np.random.PCG64(derive_seed(master, index, tag)))
