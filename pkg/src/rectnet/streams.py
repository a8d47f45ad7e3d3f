"""Counter-based random streams keyed by (run seed, key).

Every stream is identified by a 128-bit BLAKE2b digest of the run seed and a
key (a label, a replicate id, any string).  Draw ``i`` of a stream is the
BLAKE2b hash of the counter ``i`` under that 128-bit key, so streams are
splittable, order-independent and trivially serializable as
``(seed, key, counter)``.

Exponential variates use the inverse CDF ``-log(1 - U)``: one uniform per
variate, which keeps the two simulators of the network in lock-step.
"""

from __future__ import annotations

import hashlib
import math
from typing import Any

import numpy as np

from .genealogy import Label, format_label

_PERSON = b"rectnet-stream"
_TWO53 = 2.0 ** -53


def _seed_bytes(seed: int) -> bytes:
    return int(seed).to_bytes(8, "little", signed=int(seed) < 0)


def key_bytes(key: Any) -> bytes:
    """Canonical byte encoding of a stream key."""
    if isinstance(key, bytes):
        return key
    if isinstance(key, tuple) and all(isinstance(k, int) for k in key):
        return b"L" + format_label(key).encode()
    return b"S" + str(key).encode()


def stream_key(seed: int, key: Any) -> bytes:
    return hashlib.blake2b(_seed_bytes(seed) + key_bytes(key), digest_size=16,
                           person=_PERSON).digest()


def _u64(skey: bytes, counter: int) -> int:
    h = hashlib.blake2b(counter.to_bytes(8, "little"), digest_size=8, key=skey)
    return int.from_bytes(h.digest(), "little")


class KeyedStream:
    """A resumable uniform/exponential stream."""

    __slots__ = ("seed", "key", "counter", "_skey")

    def __init__(self, seed: int, key: Any, counter: int = 0):
        self.seed = int(seed)
        self.key = key
        self.counter = int(counter)
        self._skey = stream_key(self.seed, key)

    def random(self) -> float:
        x = _u64(self._skey, self.counter)
        self.counter += 1
        return (x >> 11) * _TWO53

    def exponential(self) -> float:
        return -math.log1p(-self.random())

    def state(self) -> dict:
        key = self.key
        if isinstance(key, tuple):
            key = {"label": format_label(key)}
        return {"seed": self.seed, "key": key, "counter": self.counter}

    @classmethod
    def from_state(cls, state: dict) -> "KeyedStream":
        key = state["key"]
        if isinstance(key, dict) and "label" in key:
            from .genealogy import parse_label
            key = parse_label(key["label"])
        return cls(state["seed"], key, state["counter"])


def seed_streams(seed: int, key: Any) -> KeyedStream:
    return KeyedStream(seed, key)


def label_exponential(seed: int, label: Label) -> float:
    """First exponential draw of the stream owned by ``label``.

    This is the lifetime of the branch / the branching clock of the rectangle
    with that label; both simulators call exactly this.
    """
    x = _u64(stream_key(seed, label), 0)
    return -math.log1p(-((x >> 11) * _TWO53))


def numpy_generator(seed: int, key: Any) -> np.random.Generator:
    """Philox generator keyed by the same 128-bit hash, for batch Monte Carlo."""
    k = np.frombuffer(stream_key(seed, key), dtype=np.uint64).copy()
    return np.random.Generator(np.random.Philox(key=k))


def exponentials(rng: np.random.Generator, size) -> np.ndarray:
    """Inverse-CDF exponential(1) variates from a numpy generator."""
    return -np.log1p(-rng.random(size))


def draw_exponential(rng) -> float:
    """One inverse-CDF exponential from anything exposing ``random()``."""
    return -math.log1p(-rng.random())
