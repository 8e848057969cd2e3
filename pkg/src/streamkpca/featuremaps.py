"""Explicit feature maps from input space R^d into feature space R^m.

Three maps are shipped:

* ``identity`` -- recovers plain linear streaming PCA (m = d) and makes
  exact comparison with the offline oracle possible.
* ``poly2`` -- homogeneous degree-2 monomials with sqrt(2)-scaled cross
  terms, so <phi(x), phi(y)> = <x, y>^2 exactly (m = d(d+1)/2).
* ``rff`` -- random Fourier cosine features approximating an RBF kernel;
  frequencies and phases are frozen from a seed at spec construction, so
  the map is one fixed deterministic function for the whole stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import DimensionError, as_vector

KINDS = ("identity", "poly2", "rff")


def poly2_dim(d: int) -> int:
    return d * (d + 1) // 2


@dataclass(frozen=True)
class FeatureMapSpec:
    """Immutable description of one feature map.

    ``bandwidth`` and ``seed`` are only meaningful for kind="rff".
    """

    kind: str
    input_dim: int
    feature_dim: int
    bandwidth: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature map kind {self.kind!r}")
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if self.kind == "identity" and self.feature_dim != self.input_dim:
            raise ValueError("identity map requires feature_dim == input_dim")
        if self.kind == "poly2" and self.feature_dim != poly2_dim(self.input_dim):
            raise ValueError(
                f"poly2 map requires feature_dim == d(d+1)/2 = {poly2_dim(self.input_dim)}"
            )
        if self.kind == "rff":
            if self.feature_dim < 1:
                raise ValueError("rff feature_dim must be positive")
            if self.bandwidth is None or self.bandwidth <= 0:
                raise ValueError("rff bandwidth must be positive")
            if self.seed is None:
                raise ValueError("rff map requires a seed")

    @classmethod
    def identity(cls, d: int) -> "FeatureMapSpec":
        return cls(kind="identity", input_dim=d, feature_dim=d)

    @classmethod
    def poly2(cls, d: int) -> "FeatureMapSpec":
        return cls(kind="poly2", input_dim=d, feature_dim=poly2_dim(d))

    @classmethod
    def rff(
        cls, d: int, m: int, bandwidth: float, seed: int
    ) -> "FeatureMapSpec":
        return cls(
            kind="rff",
            input_dim=d,
            feature_dim=m,
            bandwidth=bandwidth,
            seed=seed,
        )

    def apply(self, x) -> np.ndarray:
        """Map an input vector into feature space.

        Raises:
            DimensionError: if len(x) != input_dim.
        """
        v = as_vector(x)
        if v.shape[0] != self.input_dim:
            raise DimensionError(
                f"expected input of length {self.input_dim}, got {v.shape[0]}"
            )
        if self.kind == "identity":
            return v
        if self.kind == "poly2":
            i, j, w = _poly2_layout(self.input_dim)
            return w * v[i] * v[j]
        w_freq, b = rff_parameters(self)
        return cosine_features(w_freq, b, v)

    def norm_bound(self, generator_bound: float) -> float:
        """Certified bound on ||phi(x)||^2 given a bound on ||x||^2.

        ``generator_bound`` must dominate max ||x||^2 over the stream;
        the caller (data generator or user) certifies that.
        """
        if generator_bound <= 0:
            raise ValueError("generator_bound must be positive")
        if self.kind == "identity":
            return float(generator_bound)
        if self.kind == "poly2":
            # ||phi(x)||^2 = <x, x>^2 <= generator_bound^2
            return float(generator_bound) ** 2
        # sum_j (2/m) cos^2(...) <= 2 regardless of the input
        return 2.0

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "feature_dim": self.feature_dim,
        }
        if self.kind == "rff":
            out["bandwidth"] = self.bandwidth
            out["seed"] = self.seed
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMapSpec":
        return cls(
            kind=d["kind"],
            input_dim=int(d["input_dim"]),
            feature_dim=int(d["feature_dim"]),
            bandwidth=d.get("bandwidth"),
            seed=d.get("seed"),
        )


@lru_cache(maxsize=64)
def _poly2_layout(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    i, j = np.triu_indices(d)
    weights = np.where(i == j, 1.0, math.sqrt(2.0))
    return i, j, weights


@lru_cache(maxsize=64)
def _rff_parameters_cached(
    d: int, m: int, bandwidth: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    freqs = rng.standard_normal((m, d)) / bandwidth
    phases = rng.uniform(0.0, 2.0 * math.pi, size=m)
    return freqs, phases


def rff_parameters(spec: FeatureMapSpec) -> tuple[np.ndarray, np.ndarray]:
    """Frozen frequency matrix (m, d) and phase vector (m,) of an rff spec."""
    if spec.kind != "rff":
        raise ValueError("rff_parameters only applies to rff specs")
    return _rff_parameters_cached(
        spec.input_dim, spec.feature_dim, float(spec.bandwidth), int(spec.seed)
    )


def cosine_features(freqs: np.ndarray, phases: np.ndarray, x: np.ndarray) -> np.ndarray:
    """sqrt(2/m) * cos(freqs @ x + phases) for given frozen parameters."""
    m = freqs.shape[0]
    return math.sqrt(2.0 / m) * np.cos(freqs @ x + phases)
