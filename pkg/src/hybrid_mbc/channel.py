"""
Seeded i.i.d. packet-erasure channel.

Each message is kept or dropped by a uniform draw derived from a keyed hash of
``(seed, seq)``. The draw for message ``k`` therefore does not depend on how
many messages the log holds, which keeps sweep cells comparable when the
threshold changes the message count.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .scheduler import TxLog

__all__ = ["ChannelConfig", "uniform_draw", "delivery_mask", "apply_channel", "derive_seed"]

_U64 = struct.Struct("<Q")
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ChannelConfig:
    per: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.per <= 1.0) or math.isnan(self.per):
            raise ConfigError(f"per must lie in [0, 1], got {self.per}")
        if int(self.seed) != self.seed:
            raise ConfigError("seed must be an integer")


def uniform_draw(seed: int, counter: int) -> float:
    """Deterministic U[0, 1) value for ``(seed, counter)``."""
    h = hashlib.blake2b(_U64.pack(int(seed) & _MASK64) + _U64.pack(int(counter) & _MASK64),
                        digest_size=8, person=b"mbc-chan")
    return (_U64.unpack(h.digest())[0] >> 11) * 2.0 ** -53


def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit seed mixed from ``master`` and arbitrary printable parts."""
    text = "/".join([str(int(master))] + [str(p) for p in parts]).encode()
    return _U64.unpack(hashlib.blake2b(text, digest_size=8).digest())[0] >> 1


def delivery_mask(seqs, cfg: ChannelConfig) -> np.ndarray:
    """Boolean array, true where the message with that sequence number survives."""
    return np.array([uniform_draw(cfg.seed, s) >= cfg.per for s in seqs], dtype=bool)


def apply_channel(log: TxLog, cfg: ChannelConfig) -> TxLog:
    """Delivered sub-log: messages dropped independently with probability ``cfg.per``."""
    return log.subset(delivery_mask([m.seq for m in log.messages], cfg))
