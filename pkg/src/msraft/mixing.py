"""Dataset mixing for fine-tuning schedules: categorical sampling and the
VIPER frame-subsampling rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

_PROP_TOL = 1e-9


@dataclass(frozen=True)
class MixSpec:
    """(dataset-id, proportion) pairs; proportions are >= 0 and sum to 1."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        entries = tuple((str(name), float(p)) for name, p in self.entries)
        if not entries:
            raise InputError("mix spec is empty")
        if any(p < 0 for _, p in entries):
            raise InputError(f"proportions must be >= 0, got {entries}")
        total = sum(p for _, p in entries)
        if abs(total - 1.0) > _PROP_TOL:
            raise InputError(f"proportions sum to {total!r}, expected 1")
        names = [name for name, _ in entries]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate dataset ids in {names}")
        object.__setattr__(self, "entries", entries)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    @property
    def proportions(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.entries)


#: Mixing proportions used for the multi-benchmark fine-tuning recipe.
RVC_MIX = MixSpec((
    ("sintel", 0.30),
    ("viper", 0.30),
    ("kitti2015", 0.28),
    ("things", 0.10),
    ("hd1k", 0.02),
))


def mix_sampler(spec: MixSpec, seed: int, n: int) -> list[str]:
    """Draw ``n`` i.i.d. dataset ids from the spec's categorical distribution.

    Uses inverse-CDF sampling over PCG64 uniforms, so sequences are fully
    reproducible from the seed.
    """
    if n < 0:
        raise InputError(f"n must be >= 0, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    cum = np.cumsum(spec.proportions)
    cum[-1] = 1.0  # guard against accumulated rounding
    idx = np.searchsorted(cum, rng.random(n), side="right")
    ids = spec.ids
    return [ids[i] for i in idx]


def viper_frame_filter(indices) -> list[int]:
    """Keep every 10th frame: indices congruent to 0 mod 10."""
    out = []
    for i in indices:
        if i < 0:
            raise InputError(f"frame indices must be >= 0, got {i}")
        if i % 10 == 0:
            out.append(int(i))
    return out
