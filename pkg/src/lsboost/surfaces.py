"""Synthetic ground-truth surfaces and reproducible dataset sampling.

Two piecewise surfaces over a square domain: a four-bowl quadratic (c0,
on [-2, 2]^2) and an oscillatory terrain (c1, on [-1, 1]^2). Sampling is
pinned to the PCG64 generator so identical seeds reproduce identical
datasets on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import UsageError
from .io import NormalizationRecord

__all__ = [
    "SurfaceSpec",
    "eval_c0",
    "eval_c1",
    "sample_surface",
    "make_sidecar",
    "GENERATOR_NAME",
    "GENERATOR_IMPL",
]

GENERATOR_NAME = "PCG64"
GENERATOR_IMPL = f"numpy-{np.__version__}"

_DOMAINS = {"c0": (-2.0, 2.0), "c1": (-1.0, 1.0)}


@dataclass(frozen=True)
class SurfaceSpec:
    surface: str
    n: int
    seed: int
    noise_sd: float = 0.0

    def __post_init__(self):
        if self.surface not in _DOMAINS:
            raise UsageError(f"unknown surface {self.surface!r}, expected c0 or c1")
        if self.n < 1:
            raise UsageError(f"sample count must be >= 1, got {self.n}")
        if not (np.isfinite(self.noise_sd) and self.noise_sd >= 0.0):
            raise UsageError(f"noise_sd must be a finite non-negative real, got {self.noise_sd}")

    @property
    def domain(self) -> tuple[float, float]:
        """Coordinate range of the square the surface is defined on."""
        return _DOMAINS[self.surface]


def eval_c0(x1: float, x2: float) -> float:
    """Quadrant-wise bowl (x +- 1)^2 + (y -+ 1)^2: four cones meeting at the
    axes, zero at (+-1, +-1)."""
    u = x1 + 1.0 if x1 <= 0 else x1 - 1.0
    w = x2 - 1.0 if x2 >= 0 else x2 + 1.0
    return u * u + w * w


def eval_c1(x1: float, x2: float) -> float:
    """Oscillatory terrain: x plus a 20*x*y^2*cos(8x)*sin(8y) ripple scaled by
    a quadrant-dependent quadratic envelope.

    The x <= 0 branches are written with cos(-8x), which equals cos(8x), so a
    single cosine covers both sides; only the squared terms switch sign.
    """
    sq = (x1 + 1.0) ** 2 if x1 <= 0 else (x1 - 1.0) ** 2
    wq = (x2 - 1.0) ** 2 if x2 >= 0 else (x2 + 1.0) ** 2
    ripple = 20.0 * x1 * x2 * x2 * math.cos(8.0 * x1) * math.sin(8.0 * x2)
    return x1 + ripple * ((1.5 * x1 + 4.0) * sq / (x2 + 3.0) + wq)


def _eval_c0_batch(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    u = np.where(x1 <= 0, x1 + 1.0, x1 - 1.0)
    w = np.where(x2 >= 0, x2 - 1.0, x2 + 1.0)
    return u * u + w * w


def _eval_c1_batch(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    sq = np.where(x1 <= 0, (x1 + 1.0) ** 2, (x1 - 1.0) ** 2)
    wq = np.where(x2 >= 0, (x2 - 1.0) ** 2, (x2 + 1.0) ** 2)
    ripple = 20.0 * x1 * x2 * x2 * np.cos(8.0 * x1) * np.sin(8.0 * x2)
    return x1 + ripple * ((1.5 * x1 + 4.0) * sq / (x2 + 3.0) + wq)


_BATCH = {"c0": _eval_c0_batch, "c1": _eval_c1_batch}


def sample_surface(
    spec: SurfaceSpec, reuse_normalization: NormalizationRecord | None = None
) -> tuple[Dataset, NormalizationRecord]:
    """Draw n points uniformly from the surface's domain and label them.

    Labels are the surface values (plus Gaussian noise when noise_sd > 0),
    min-max rescaled into [0, 1] by the sample's own range. Pass a stored
    record instead to normalize a fresh sample (e.g. a test set) with the
    same constants; values outside the recorded range then clamp to [0, 1].
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    lo, hi = spec.domain
    features = rng.uniform(lo, hi, size=(spec.n, 2))
    raw = _BATCH[spec.surface](features[:, 0], features[:, 1])
    if spec.noise_sd > 0.0:
        raw = raw + spec.noise_sd * rng.standard_normal(spec.n)
    if reuse_normalization is None:
        record = NormalizationRecord(lo=float(raw.min()), hi=float(raw.max()))
    else:
        record = reuse_normalization
    return Dataset(features, record.apply(raw)), record


def make_sidecar(spec: SurfaceSpec, record: NormalizationRecord) -> dict:
    """Reproducibility sidecar written next to a sampled dataset: everything
    needed to regenerate it or to normalize a companion sample the same way."""
    return {
        "surface": spec.surface,
        "n": spec.n,
        "seed": spec.seed,
        "noise_sd": spec.noise_sd,
        "generator": GENERATOR_NAME,
        "generator_impl": GENERATOR_IMPL,
        "normalization": record.to_obj(),
    }
