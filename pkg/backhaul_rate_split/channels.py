"""Channel generation for the symmetric two-cell fading model."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .exceptions import StructuralError
from .model import ChannelState, SystemConfig, load_system

SAMPLE_CHANNEL = Path(__file__).parent / "config" / "sample_channel.json"


@dataclass(frozen=True)
class FadingModel:
    """Rayleigh fading with unit-variance direct links and cross links of variance eps.

    Each sample has its own counter-based stream keyed by (seed, index), so any subset of
    samples can be drawn in any order and still match a sequential run.
    """

    eps: float
    n_t: int
    seed: int = 0

    def __post_init__(self):
        if not self.eps >= 0:
            raise StructuralError("FadingModel", f"cross-link variance {self.eps} is negative")
        if self.n_t < 1:
            raise StructuralError("FadingModel", f"need at least one antenna, got {self.n_t}")
        if self.seed < 0:
            raise StructuralError("FadingModel", f"seed must be nonnegative, got {self.seed}")

    def generator(self, index: int) -> Generator:
        return Generator(Philox(SeedSequence([self.seed, index])))

    def draw(self, index: int) -> ChannelState:
        rng = self.generator(index)
        shape = (2, 2, self.n_t)
        h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        variance = np.array([[1.0, self.eps], [self.eps, 1.0]])
        return ChannelState(h * np.sqrt(variance)[:, :, None])


def generate_channels(model: FadingModel, n: int, start: int = 0) -> list[ChannelState]:
    if n < 0:
        raise ValueError(f"sample count must be nonnegative, got {n}")
    return [model.draw(index) for index in range(start, start + n)]


def sample_channel(path: Path = SAMPLE_CHANNEL) -> tuple[SystemConfig, ChannelState]:
    cfg, ch, _ = load_system(path)
    if ch is None:
        raise StructuralError("ChannelState", f"'{Path(path).name}' has no channel entry 'H'")
    return cfg, ch
