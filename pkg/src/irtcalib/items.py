"""Item parameter pools.

Difficulties come from a parametric normal source or by resampling an
empirical pool file; 2PL discriminations are log-normal with a target
Spearman rank correlation to difficulty, imposed by a Gaussian copula (or a
conditional-normal / independent fallback) while leaving the difficulty
marginal untouched.

Pool CSV format: header ``beta,lambda`` (the ``lambda`` column is optional;
when absent the pool carries difficulties only), one item per row, UTF-8,
decimal point, full precision. ``save_pool_csv``/``load_pool_csv`` round-trip
losslessly.

The bundled synthetic pool stands in for a real operational item bank: a
two-component normal mixture 0.45*N(-2, 0.8^2) + 0.55*N(1, 0.9^2), rescaled
about its mean so the file's overall SD is exactly 1.6, giving the bimodal,
wide-spread difficulty structure typical of operational item banks.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri

from .errors import (
    ConfigurationError,
    DegenerateInputError,
    IngestionError,
    InsufficientDataError,
    ParameterError,
)
from .rng import stream

MODELS = ("rasch", "twopl")
SOURCES = ("parametric", "empirical_pool", "custom")
GEN_METHODS = ("copula", "conditional", "independent", "fixed")

_POOL_RESOURCE = "synthetic_pool.csv"


@dataclass(frozen=True)
class DiscriminationSpec:
    """Log-normal marginal for baseline discriminations and the rank-correlation target."""

    mu_log: float = 0.0
    sigma_log: float = 0.3
    rho: float = -0.3

    def __post_init__(self):
        if self.sigma_log < 0:
            raise ParameterError(f"sigma_log must be nonnegative, got {self.sigma_log}")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [-1, 1], got {self.rho}")


@dataclass
class ItemPool:
    """A realized set of item parameters: difficulties and baseline discriminations."""

    model: str
    beta: np.ndarray
    lambda0: np.ndarray
    source: str = "custom"
    gen_method: str = "fixed"
    seed: int | None = None
    target_spearman: float | None = None
    achieved_spearman: float | None = None

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.lambda0 = np.asarray(self.lambda0, dtype=float)
        if self.model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.beta.size == 0:
            raise ParameterError("pool must contain at least one item")
        if self.beta.shape != self.lambda0.shape:
            raise ParameterError("beta and lambda0 must have equal length")
        if not np.all(np.isfinite(self.beta)) or not np.all(np.isfinite(self.lambda0)):
            raise ParameterError("item parameters must be finite")
        if np.any(self.lambda0 <= 0):
            raise ParameterError("lambda0 must be positive for every item")
        if self.model == "rasch" and not np.all(self.lambda0 == 1.0):
            raise ParameterError("rasch pools require lambda0 = 1 for every item")

    @property
    def n_items(self) -> int:
        return int(self.beta.size)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "source": self.source,
            "gen_method": self.gen_method,
            "seed": self.seed,
            "target_spearman": self.target_spearman,
            "achieved_spearman": self.achieved_spearman,
            "beta": [float(b) for b in self.beta],
            "lambda0": [float(l) for l in self.lambda0],
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "ItemPool":
        return ItemPool(
            model=d["model"],
            beta=np.asarray(d["beta"], dtype=float),
            lambda0=np.asarray(d["lambda0"], dtype=float),
            source=d.get("source", "custom"),
            gen_method=d.get("gen_method", "fixed"),
            seed=d.get("seed"),
            target_spearman=d.get("target_spearman"),
            achieved_spearman=d.get("achieved_spearman"),
        )


def bundled_pool_path() -> str:
    """Filesystem path of the bundled synthetic difficulty pool."""
    return str(resources.files("irtcalib").joinpath("data", _POOL_RESOURCE))


def make_synthetic_pool(n: int = 5000, seed: int = 902_114_551) -> np.ndarray:
    """Regenerate the bundled synthetic difficulty pool.

    Mixture draws are rescaled about their empirical mean so the pool SD is
    exactly 1.6. The defaults reproduce the shipped ``data/synthetic_pool.csv``
    byte-for-byte.
    """
    rng = stream(seed, "synthetic-pool")
    n = int(n)
    comp = rng.random(n) < 0.45
    draws = np.where(comp, rng.normal(-2.0, 0.8, n), rng.normal(1.0, 0.9, n))
    mean = draws.mean()
    return mean + (draws - mean) * (1.6 / draws.std(ddof=0))


# Parsed pool files keyed by (path, mtime_ns, size); resampling draws from the
# same file thousands of times per calibration.
_pool_cache: dict = {}


def _load_pool_cached(path) -> np.ndarray:
    try:
        st = os.stat(path)
    except OSError as exc:
        raise IngestionError(f"cannot read pool file {path}: {exc}") from exc
    key = (os.fspath(path), st.st_mtime_ns, st.st_size)
    if key not in _pool_cache:
        _pool_cache[key] = load_pool_csv(path)[0]
    return _pool_cache[key]


def load_pool_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a pool CSV, returning ``(beta, lambda0-or-None)``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IngestionError(f"cannot read pool file {path}: {exc}") from exc
    if not lines:
        raise IngestionError(f"pool file {path} is empty")
    header = [h.strip() for h in lines[0].split(",")]
    if header not in (["beta"], ["beta", "lambda"]):
        raise IngestionError(
            f"pool file {path}: header must be 'beta' or 'beta,lambda', got {lines[0]!r}"
        )
    has_lambda = len(header) == 2
    betas, lambdas = [], []
    for rownum, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise IngestionError(f"pool file {path}, row {rownum}: expected {len(header)} fields")
        try:
            betas.append(float(parts[0]))
            if has_lambda:
                lambdas.append(float(parts[1]))
        except ValueError as exc:
            raise IngestionError(f"pool file {path}, row {rownum}: non-numeric entry") from exc
    if not betas:
        raise IngestionError(f"pool file {path} contains no items")
    beta = np.asarray(betas)
    return beta, (np.asarray(lambdas) if has_lambda else None)


def save_pool_csv(pool: ItemPool, path) -> None:
    """Write a pool at full precision (header ``beta,lambda``)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("beta,lambda\n")
        for b, l in zip(pool.beta, pool.lambda0):
            fh.write(f"{float(b)!r},{float(l)!r}\n")


def gen_difficulties(
    source: str,
    n_items: int,
    params: Mapping[str, float] | None = None,
    seed: int = 0,
    pool_path=None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Draw ``n_items`` difficulties from the parametric or empirical source."""
    n_items = int(n_items)
    if n_items < 1:
        raise ParameterError(f"n_items must be >= 1, got {n_items}")
    if rng is None:
        rng = stream(seed, "difficulties")
    if source == "parametric":
        params = params or {}
        return rng.normal(params.get("mu", 0.0), params.get("sigma", 1.0), n_items)
    if source == "empirical_pool":
        beta = _load_pool_cached(pool_path if pool_path is not None else bundled_pool_path())
        return rng.choice(beta, size=n_items, replace=True)
    raise ParameterError(f"difficulty source must be 'parametric' or 'empirical_pool', got {source!r}")


def rank_uniform(betas: np.ndarray) -> np.ndarray:
    """Nonparametric CDF transform: average ranks mapped to rank/(n+1)."""
    betas = np.asarray(betas, dtype=float)
    return stats.rankdata(betas, method="average") / (betas.size + 1)


def copula_discriminations(
    betas: np.ndarray,
    spec: DiscriminationSpec,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Gaussian-copula discriminations with the target rank correlation to ``betas``.

    Five-step construction: (1) u = rank(beta)/(n+1); (2) z_beta = ndtri(u);
    (3) z_lam = rho*z_beta + sqrt(1-rho^2)*z_indep; (4) v = ndtr(z_lam);
    (5) log lambda = mu_log + sigma_log*ndtri(v). The difficulty vector is
    never modified, so its marginal is preserved exactly.
    """
    betas = np.asarray(betas, dtype=float)
    if betas.size < 2:
        raise InsufficientDataError("copula needs at least 2 items to form ranks")
    if rng is None:
        rng = stream(seed, "discriminations")
    u = rank_uniform(betas)
    z_beta = ndtri(u)
    z_indep = rng.standard_normal(betas.size)
    z_lam = spec.rho * z_beta + np.sqrt(1.0 - spec.rho**2) * z_indep
    v = ndtr(z_lam)
    log_lam = spec.mu_log + spec.sigma_log * ndtri(v)
    return np.exp(log_lam)


def conditional_discriminations(
    betas: np.ndarray,
    spec: DiscriminationSpec,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Conditional-normal regression on empirically standardized difficulties."""
    betas = np.asarray(betas, dtype=float)
    if betas.size < 2:
        raise InsufficientDataError("conditional method needs at least 2 items")
    sd = betas.std(ddof=1)
    if sd == 0:
        raise DegenerateInputError("difficulties have zero variance; cannot standardize")
    if rng is None:
        rng = stream(seed, "discriminations")
    b_std = (betas - betas.mean()) / sd
    z = rng.standard_normal(betas.size)
    log_lam = spec.mu_log + spec.sigma_log * (spec.rho * b_std + np.sqrt(1.0 - spec.rho**2) * z)
    return np.exp(log_lam)


def independent_discriminations(
    n_items: int,
    spec: DiscriminationSpec,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    if rng is None:
        rng = stream(seed, "discriminations")
    return np.exp(spec.mu_log + spec.sigma_log * rng.standard_normal(int(n_items)))


@dataclass(frozen=True)
class PoolConfig:
    """Recipe for generating an :class:`ItemPool`.

    ``gen_method`` defaults to ``fixed`` for Rasch and ``copula`` for 2PL.
    ``custom`` sources supply explicit difficulties (and optionally
    discriminations) instead of drawing them.
    """

    model: str = "rasch"
    source: str = "parametric"
    n_items: int = 30
    gen_method: str | None = None
    difficulty_mu: float = 0.0
    difficulty_sigma: float = 1.0
    pool_path: str | None = None
    discrimination: DiscriminationSpec = field(default_factory=DiscriminationSpec)
    betas: Sequence[float] | None = None
    lambdas: Sequence[float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.source not in SOURCES:
            raise ParameterError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.n_items < 1:
            raise ParameterError(f"n_items must be >= 1, got {self.n_items}")
        method = self.resolved_method()
        if method not in GEN_METHODS:
            raise ParameterError(f"gen_method must be one of {GEN_METHODS}, got {method!r}")
        if self.model == "rasch" and method != "fixed":
            raise ConfigurationError(
                "rasch fixes every discrimination at 1; gen_method must be 'fixed'"
            )
        if self.model == "twopl" and method == "fixed" and self.lambdas is None:
            raise ConfigurationError("twopl with gen_method='fixed' requires explicit lambdas")
        if self.source == "custom" and self.betas is None:
            raise ConfigurationError("custom source requires explicit betas")

    def resolved_method(self) -> str:
        if self.gen_method is not None:
            return self.gen_method
        return "fixed" if self.model == "rasch" else "copula"

    def to_dict(self) -> dict:
        d = {
            "model": self.model,
            "source": self.source,
            "n_items": self.n_items,
            "gen_method": self.resolved_method(),
            "difficulty_mu": self.difficulty_mu,
            "difficulty_sigma": self.difficulty_sigma,
            "pool_path": self.pool_path,
            "seed": self.seed,
            "discrimination": {
                "mu_log": self.discrimination.mu_log,
                "sigma_log": self.discrimination.sigma_log,
                "rho": self.discrimination.rho,
            },
        }
        if self.betas is not None:
            d["betas"] = [float(b) for b in self.betas]
        if self.lambdas is not None:
            d["lambdas"] = [float(l) for l in self.lambdas]
        return d

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "PoolConfig":
        disc = d.get("discrimination", {})
        return PoolConfig(
            model=d.get("model", "rasch"),
            source=d.get("source", "parametric"),
            n_items=int(d.get("n_items", 30)),
            gen_method=d.get("gen_method"),
            difficulty_mu=float(d.get("difficulty_mu", 0.0)),
            difficulty_sigma=float(d.get("difficulty_sigma", 1.0)),
            pool_path=d.get("pool_path"),
            discrimination=DiscriminationSpec(
                mu_log=float(disc.get("mu_log", 0.0)),
                sigma_log=float(disc.get("sigma_log", 0.3)),
                rho=float(disc.get("rho", -0.3)),
            ),
            betas=d.get("betas"),
            lambdas=d.get("lambdas"),
            seed=int(d.get("seed", 0)),
        )


def build_pool(config: PoolConfig) -> ItemPool:
    """Assemble difficulties and discriminations into an :class:`ItemPool`.

    All randomness comes from a single pool-generation stream: difficulties
    first, then (for dependent methods) one independent normal per item in
    item order, so pools are reproducible from ``config.seed`` alone.
    """
    rng = stream(config.seed, "pool")
    method = config.resolved_method()

    if config.source == "custom":
        beta = np.asarray(config.betas, dtype=float)
    else:
        beta = gen_difficulties(
            config.source,
            config.n_items,
            params={"mu": config.difficulty_mu, "sigma": config.difficulty_sigma},
            pool_path=config.pool_path,
            rng=rng,
        )

    if config.model == "rasch":
        lam = np.ones_like(beta)
    elif method == "fixed":
        lam = np.asarray(config.lambdas, dtype=float)
    elif method == "copula":
        lam = copula_discriminations(beta, config.discrimination, rng=rng)
    elif method == "conditional":
        lam = conditional_discriminations(beta, config.discrimination, rng=rng)
    else:
        lam = independent_discriminations(beta.size, config.discrimination, rng=rng)

    achieved = None
    if config.model == "twopl" and method != "fixed" and beta.size >= 2:
        achieved = float(stats.spearmanr(beta, np.log(lam)).statistic)

    return ItemPool(
        model=config.model,
        beta=beta,
        lambda0=lam,
        source=config.source,
        gen_method=method,
        seed=config.seed,
        target_spearman=(config.discrimination.rho if method in ("copula", "conditional") else None),
        achieved_spearman=achieved,
    )
