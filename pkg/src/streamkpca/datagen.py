"""Seeded synthetic streams with a controlled spectrum, plus a Gaussian
offset-norm Monte Carlo used to sanity-check the random-start argument.

The generator draws a Haar-random orthonormal basis from one seed and
i.i.d. Gaussian coefficients from another, giving a spiked covariance
whose top-two eigenvalue ratio is a direct knob. Samples whose squared
norm exceeds the certified guard bound (a <0.01% event) are skipped and
redrawn from the same seed stream, so the guard holds exactly and the
learning-rate precondition is never violated by an outlier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_vector


@dataclass(frozen=True)
class SpikedSpec:
    """Spiked-covariance stream description.

    The population spectrum is lambda_1 followed by a geometric tail
    lambda_k = lambda2 * tail_decay^(k-2) for k >= 2.
    """

    input_dim: int
    n: int
    lambda1: float
    lambda2: float
    tail_decay: float = 1.0
    basis_seed: int = 0
    sample_seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ValueError("spectrum must be strictly positive")
        if self.lambda2 > self.lambda1:
            raise ValueError("lambda2 must not exceed lambda1")
        if not (0.0 < self.tail_decay <= 1.0):
            raise ValueError("tail_decay must lie in (0, 1]")

    @property
    def target_ratio(self) -> float:
        return self.lambda1 / self.lambda2

    def spectrum(self) -> np.ndarray:
        lam = np.empty(self.input_dim)
        lam[0] = self.lambda1
        if self.input_dim > 1:
            k = np.arange(self.input_dim - 1)
            lam[1:] = self.lambda2 * self.tail_decay**k
        return lam

    def norm_guard(self) -> float:
        """99.99th-percentile-style guard on ||x||^2 used for eta selection."""
        d = self.input_dim
        return self.lambda1 * (d + 10.0 * math.sqrt(d) + 50.0)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "n": self.n,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "tail_decay": self.tail_decay,
            "basis_seed": self.basis_seed,
            "sample_seed": self.sample_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpikedSpec":
        return cls(
            input_dim=int(d["input_dim"]),
            n=int(d["n"]),
            lambda1=float(d["lambda1"]),
            lambda2=float(d["lambda2"]),
            tail_decay=float(d["tail_decay"]),
            basis_seed=int(d["basis_seed"]),
            sample_seed=int(d["sample_seed"]),
        )


@dataclass(frozen=True)
class SpikedGroundTruth:
    """Population quantities of a generated stream."""

    spectrum: np.ndarray
    basis: np.ndarray
    top_direction: np.ndarray
    norm_bound: float

    @property
    def ratio(self) -> float:
        if self.spectrum.shape[0] < 2:
            return math.inf
        return float(self.spectrum[0] / self.spectrum[1])


def random_orthonormal_basis(d: int, seed: int) -> np.ndarray:
    """Haar-random orthonormal basis: QR of a Gaussian draw, signs fixed."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def make_spiked_stream(spec: SpikedSpec) -> tuple[np.ndarray, SpikedGroundTruth]:
    """Generate the stream and its population ground truth.

    Returns:
        (xs, truth) where xs has shape (n, input_dim), rows in arrival
        order, and every row satisfies ||x||^2 <= truth.norm_bound.
    """
    basis = random_orthonormal_basis(spec.input_dim, spec.basis_seed)
    lam = spec.spectrum()
    sqrt_lam = np.sqrt(lam)
    guard = spec.norm_guard()

    rng = np.random.default_rng(spec.sample_seed)
    xs = np.empty((spec.n, spec.input_dim))
    mix = basis * sqrt_lam  # column k is sqrt(lambda_k) * u_k
    count = 0
    while count < spec.n:
        g = rng.standard_normal(spec.input_dim)
        x = mix @ g
        if float(x @ x) > guard:
            continue  # skip the outlier, keep consuming the same seed stream
        xs[count] = x
        count += 1
    truth = SpikedGroundTruth(
        spectrum=lam,
        basis=basis,
        top_direction=basis[:, 0].copy(),
        norm_bound=guard,
    )
    return xs, truth


def monte_carlo_offset_norm(
    u, v, delta: float, trials: int, seed: int
) -> float:
    """Empirical Pr[||a*u + v|| >= delta*||u||] over a ~ N(0, 1).

    The exact probability is at least 1 - delta for any u, v; this
    estimates it by simulation.
    """
    uu = as_vector(u)
    vv = as_vector(v)
    if uu.shape != vv.shape:
        raise ValueError("u and v must have equal length")
    u_norm_sq = float(uu @ uu)
    if u_norm_sq == 0.0:
        raise ValueError("u must be nonzero")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(trials)
    # ||a u + v||^2 expanded once; no per-trial vector work needed.
    cross = float(uu @ vv)
    v_norm_sq = float(vv @ vv)
    norms_sq = a * a * u_norm_sq + 2.0 * a * cross + v_norm_sq
    hits = np.count_nonzero(norms_sq >= delta * delta * u_norm_sq)
    return hits / trials
