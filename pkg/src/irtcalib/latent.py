"""Latent ability generation.

Each built-in shape is constructed so that the base variable ``z`` has mean 0
and variance 1 analytically; abilities are then ``theta = mu + sigma * z``.
Shapes:

* ``normal``      -- standard normal.
* ``bimodal``     -- z = s*delta + eps with s a random sign and
                     eps ~ Normal(0, 1 - delta^2); delta in (0, 1).
* ``skew_pos``    -- z = (Gamma(k, 1) - k) / sqrt(k); k > 0.
* ``heavy_tail``  -- z = t_nu / sqrt(nu / (nu - 2)); nu > 2, and nu > 4 is
                     needed for a finite fourth moment.
* ``mixture``     -- arbitrary normal mixture, re-centered and re-scaled
                     analytically so the standardization invariant holds.

Because the construction is location-scale, changing a shape never changes
the first two moments of the generated abilities.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy import stats

from .errors import EmptyRequestError, ParameterError
from .rng import stream

SHAPES = ("normal", "bimodal", "skew_pos", "heavy_tail", "mixture")

VALIDATION_SHAPE_PARAMS = {
    "normal": {},
    "bimodal": {"delta": 0.8},
    "skew_pos": {"k": 4.0},
    "heavy_tail": {"nu": 5.0},
}


def _mixture_components(params: Mapping[str, Any]):
    comps = params.get("components")
    if not comps:
        raise ParameterError("shape_params.components must be a nonempty list for mixture")
    w = np.asarray([c["weight"] for c in comps], dtype=float)
    m = np.asarray([c["mean"] for c in comps], dtype=float)
    s = np.asarray([c["sd"] for c in comps], dtype=float)
    if np.any(w <= 0):
        raise ParameterError("shape_params.components weights must be positive")
    if np.any(s < 0):
        raise ParameterError("shape_params.components sd must be nonnegative")
    w = w / w.sum()
    mean = float(np.sum(w * m))
    var = float(np.sum(w * (s**2 + m**2)) - mean**2)
    if var <= 0:
        raise ParameterError("mixture has zero variance; cannot standardize")
    return w, m, s, mean, var


@dataclass(frozen=True)
class LatentSpec:
    """Shape of the latent distribution plus location, scale, and seed."""

    shape: str = "normal"
    shape_params: Mapping[str, Any] = field(default_factory=dict)
    mu: float = 0.0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ParameterError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if not np.isfinite(self.mu):
            raise ParameterError("mu must be finite")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        p = self.shape_params
        if self.shape == "bimodal":
            delta = p.get("delta")
            if delta is None or not 0 < delta < 1:
                raise ParameterError(f"shape_params.delta must lie in (0, 1), got {delta}")
        elif self.shape == "skew_pos":
            k = p.get("k")
            if k is None or k <= 0:
                raise ParameterError(f"shape_params.k must be positive, got {k}")
        elif self.shape == "heavy_tail":
            nu = p.get("nu")
            if nu is None or nu <= 2:
                raise ParameterError(
                    f"shape_params.nu must exceed 2 (variance undefined), got {nu}"
                )
            if nu <= 4:
                warnings.warn(
                    f"heavy_tail with nu={nu} <= 4 has no fourth moment; "
                    "kurtosis diagnostics will be undefined",
                    UserWarning,
                    stacklevel=2,
                )
        elif self.shape == "mixture":
            _mixture_components(p)

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "shape_params": dict(self.shape_params),
            "mu": self.mu,
            "sigma": self.sigma,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "LatentSpec":
        return LatentSpec(
            shape=d["shape"],
            shape_params=dict(d.get("shape_params", {})),
            mu=float(d.get("mu", 0.0)),
            sigma=float(d.get("sigma", 1.0)),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class LatentSample:
    """Generated abilities together with the pre-standardized draws."""

    theta: np.ndarray
    z: np.ndarray
    spec: LatentSpec

    @property
    def sample_moments(self) -> dict:
        if not hasattr(self, "_moments"):
            self._moments = sample_moments(self.theta)
        return self._moments


def sample_moments(x: np.ndarray) -> dict:
    """Mean, unbiased variance, skewness, and excess kurtosis of a sample."""
    x = np.asarray(x, dtype=float)
    return {
        "mean": float(np.mean(x)),
        "var": float(np.var(x, ddof=1)) if x.size > 1 else 0.0,
        "skew": float(stats.skew(x)),
        "excess_kurtosis": float(stats.kurtosis(x, fisher=True)),
    }


def _sample_z(spec: LatentSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    p = spec.shape_params
    if spec.shape == "normal":
        return rng.standard_normal(n)
    if spec.shape == "bimodal":
        delta = float(p["delta"])
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        eps = rng.normal(0.0, np.sqrt(1.0 - delta**2), n)
        return signs * delta + eps
    if spec.shape == "skew_pos":
        k = float(p["k"])
        return (rng.gamma(k, 1.0, n) - k) / np.sqrt(k)
    if spec.shape == "heavy_tail":
        nu = float(p["nu"])
        return rng.standard_t(nu, n) / np.sqrt(nu / (nu - 2.0))
    if spec.shape == "mixture":
        w, m, s, mean, var = _mixture_components(p)
        comp = rng.choice(len(w), size=n, p=w)
        draws = rng.normal(m[comp], s[comp])
        return (draws - mean) / np.sqrt(var)
    raise ParameterError(f"unknown shape {spec.shape!r}")


def sample_latent(spec: LatentSpec, n: int, rng: np.random.Generator | None = None) -> LatentSample:
    """Draw ``n`` abilities from ``spec``.

    Deterministic given ``(spec, n, spec.seed)`` when ``rng`` is omitted;
    callers that manage their own streams pass an explicit generator.
    """
    n = int(n)
    if n < 1:
        raise EmptyRequestError(f"requested sample size must be >= 1, got {n}")
    if rng is None:
        rng = stream(spec.seed, "latent")
    z = _sample_z(spec, n, rng)
    theta = spec.mu + spec.sigma * z
    return LatentSample(theta=theta, z=z, spec=spec)


def theoretical_moments(spec: LatentSpec) -> dict:
    """Closed-form moments of the pre-standardized variable ``z``.

    Mean and variance are 0 and 1 for every shape by construction. The
    bimodal excess kurtosis follows from direct moment expansion of the
    sign-mixture construction: E[z^4] = 3 - 2*delta^4, so the excess is
    -2*delta^4. For ``heavy_tail`` with nu <= 4 the fourth moment does not
    exist and the excess kurtosis is reported as NaN.
    """
    p = spec.shape_params
    skew, kurt = 0.0, 0.0
    if spec.shape == "bimodal":
        kurt = -2.0 * float(p["delta"]) ** 4
    elif spec.shape == "skew_pos":
        k = float(p["k"])
        skew, kurt = 2.0 / np.sqrt(k), 6.0 / k
    elif spec.shape == "heavy_tail":
        nu = float(p["nu"])
        kurt = 6.0 / (nu - 4.0) if nu > 4 else float("nan")
    elif spec.shape == "mixture":
        w, m, s, mean, var = _mixture_components(p)
        m1 = np.sum(w * m)
        m2 = np.sum(w * (m**2 + s**2))
        m3 = np.sum(w * (m**3 + 3 * m * s**2))
        m4 = np.sum(w * (m**4 + 6 * m**2 * s**2 + 3 * s**4))
        mu3 = m3 - 3 * m1 * m2 + 2 * m1**3
        mu4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
        skew = float(mu3 / var**1.5)
        kurt = float(mu4 / var**2 - 3.0)
    return {"mean": 0.0, "variance": 1.0, "skewness": float(skew), "excess_kurtosis": float(kurt)}


@dataclass
class DensityTable:
    """Grid of kernel density estimates plus per-shape sample moments."""

    theta: np.ndarray
    densities: dict[str, np.ndarray]
    moments: dict[str, dict]

    def to_csv(self, path) -> None:
        labels = list(self.densities)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(["theta"] + labels) + "\n")
            for i in range(self.theta.size):
                row = [repr(float(self.theta[i]))]
                row += [repr(float(self.densities[lab][i])) for lab in labels]
                fh.write(",".join(row) + "\n")


def describe_shapes(specs: list[LatentSpec], n: int, grid_size: int = 256) -> DensityTable:
    """Sample each spec and tabulate kernel density estimates on a shared grid."""
    if int(n) < 100:
        raise ParameterError(f"n must be >= 100 for density estimation, got {n}")
    if not specs:
        return DensityTable(theta=np.empty(0), densities={}, moments={})

    samples, labels = [], []
    counts: dict[str, int] = {}
    for spec in specs:
        counts[spec.shape] = counts.get(spec.shape, 0) + 1
        label = spec.shape if counts[spec.shape] == 1 else f"{spec.shape}_{counts[spec.shape]}"
        labels.append(label)
        samples.append(sample_latent(spec, n))

    lo = min(float(s.theta.min()) for s in samples)
    hi = max(float(s.theta.max()) for s in samples)
    pad = 0.05 * (hi - lo)
    grid = np.linspace(lo - pad, hi + pad, grid_size)

    densities, moments = {}, {}
    for label, s in zip(labels, samples):
        kde = stats.gaussian_kde(s.theta)
        densities[label] = kde(grid)
        moments[label] = s.sample_moments
    return DensityTable(theta=grid, densities=densities, moments=moments)
