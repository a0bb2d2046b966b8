"""Stochastic scale calibration by projected Robbins-Monro iteration.

Each iteration draws a fresh latent batch (and, by default, a fresh pool
realization), measures the reliability of the current scale on it, and moves
the scale against the signed error with a decaying step; the reported scale
is the average of the post-burn-in iterates. Unlike the quadrature method
this integrates over all generation randomness and can target the
error-variance metric directly.

The reported ``achieved_rho`` comes from an independent evaluation stream:
``eval_m / m_per_iter`` blocks, each shaped exactly like an iteration batch,
whose metric values are averaged. This estimates the same functional the
iteration equilibrates on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Union

import numpy as np

from .errors import ConfigurationError, DivergedObjectiveError, ParameterError
from .items import ItemPool, PoolConfig, build_pool
from .latent import LatentSpec, sample_latent
from .psychometrics import (
    METRIC_AVG_INFO,
    METRICS,
    ScaleInterval,
    metric_value,
    reliability_summary,
)
from .rng import child_seed, stream

STATUS_OK = "ok"
STATUS_BOUNDARY_CHATTER = "hit_boundary_often"

_BOUNDARY_CHATTER_FRACTION = 0.10


@dataclass(frozen=True)
class SacConfig:
    """Inputs for a stochastic calibration run."""

    target_rho: float
    latent: LatentSpec
    items: Union[PoolConfig, ItemPool]
    metric: str = METRIC_AVG_INFO
    n_iter: int = 300
    burn_in: int = 150
    step_a: float = 1.0
    step_A: float = 50.0
    step_gamma: float = 0.67
    m_per_iter: int = 1000
    interval: ScaleInterval = field(default_factory=lambda: ScaleInterval(0.3, 3.0))
    c_init: Any = None  # float, a calibration result (warm start), or None for the midpoint
    redraw_items: bool = True
    eval_m: int | None = None  # None -> 10 * m_per_iter
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.target_rho < 1.0:
            raise ParameterError(f"target_rho must lie in (0, 1), got {self.target_rho}")
        if self.metric not in METRICS:
            raise ParameterError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.n_iter < 1:
            raise ParameterError(f"n_iter must be >= 1, got {self.n_iter}")
        if not 0 <= self.burn_in < self.n_iter:
            raise ParameterError(
                f"burn_in must satisfy 0 <= burn_in < n_iter, got {self.burn_in} vs {self.n_iter}"
            )
        if self.step_a <= 0:
            raise ParameterError(f"step_a must be positive, got {self.step_a}")
        if self.step_A < 0:
            raise ParameterError(f"step_A must be nonnegative, got {self.step_A}")
        if not 0.5 < self.step_gamma <= 1.0:
            raise ParameterError(f"step_gamma must lie in (0.5, 1], got {self.step_gamma}")
        if self.m_per_iter < 1:
            raise ParameterError(f"m_per_iter must be >= 1, got {self.m_per_iter}")
        if self.eval_m is not None and self.eval_m < 1:
            raise ParameterError(f"eval_m must be >= 1, got {self.eval_m}")
        c0 = self.resolved_c_init()
        if not self.interval.c_lower <= c0 <= self.interval.c_upper:
            raise ConfigurationError(
                f"c_init {c0} lies outside the calibration interval "
                f"[{self.interval.c_lower}, {self.interval.c_upper}]"
            )

    def resolved_c_init(self) -> float:
        if self.c_init is None:
            return self.interval.midpoint()
        c0 = getattr(self.c_init, "c_star", self.c_init)
        return float(c0)

    def resolved_eval_m(self) -> int:
        return self.eval_m if self.eval_m is not None else 10 * self.m_per_iter


@dataclass
class SacResult:
    """Averaged scale, its independent evaluation, and the full iterate trace."""

    c_star: float
    achieved_rho: float
    trace_c: np.ndarray
    trace_rho: np.ndarray
    eval_m: int
    metric: str
    status: str
    clamp_fraction: float
    pool: ItemPool  # evaluation-stage pool; carried so response generation can reuse it
    config: SacConfig

    @property
    def target_rho(self) -> float:
        return self.config.target_rho

    def trace_rows(self):
        """(n, c_n, rho_hat_n) rows, n = 1..n_iter."""
        for i, (c, r) in enumerate(zip(self.trace_c, self.trace_rho), start=1):
            yield i, float(c), float(r)

    def save_trace_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("n,c_n,rho_hat_n\n")
            for n, c, r in self.trace_rows():
                fh.write(f"{n},{c!r},{r!r}\n")

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "result_type": "sac",
            "schema_version": 1,
            "target_rho": cfg.target_rho,
            "achieved_rho": self.achieved_rho,
            "abs_error": abs(self.achieved_rho - cfg.target_rho),
            "c_star": self.c_star,
            "status": self.status,
            "metric": self.metric,
            "n_items": self.pool.n_items,
            "n_iter": cfg.n_iter,
            "burn_in": cfg.burn_in,
            "step_a": cfg.step_a,
            "step_A": cfg.step_A,
            "step_gamma": cfg.step_gamma,
            "m_per_iter": cfg.m_per_iter,
            "eval_m": self.eval_m,
            "clamp_fraction": self.clamp_fraction,
            "c_init": cfg.resolved_c_init(),
            "redraw_items": cfg.redraw_items,
            "seed": cfg.seed,
            "bracket": {"c_lower": cfg.interval.c_lower, "c_upper": cfg.interval.c_upper},
            "latent": cfg.latent.to_dict(),
            "pool": self.pool.to_dict(),
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "SacResult":
        if d.get("result_type") != "sac":
            raise ConfigurationError(f"expected a sac result document, got {d.get('result_type')!r}")
        pool = ItemPool.from_dict(d["pool"])
        cfg = SacConfig(
            target_rho=float(d["target_rho"]),
            latent=LatentSpec.from_dict(d["latent"]),
            items=pool,
            metric=d["metric"],
            n_iter=int(d["n_iter"]),
            burn_in=int(d["burn_in"]),
            step_a=float(d["step_a"]),
            step_A=float(d["step_A"]),
            step_gamma=float(d["step_gamma"]),
            m_per_iter=int(d["m_per_iter"]),
            interval=ScaleInterval(float(d["bracket"]["c_lower"]), float(d["bracket"]["c_upper"])),
            c_init=float(d["c_init"]),
            redraw_items=bool(d["redraw_items"]),
            eval_m=int(d["eval_m"]),
            seed=int(d["seed"]),
        )
        return SacResult(
            c_star=float(d["c_star"]),
            achieved_rho=float(d["achieved_rho"]),
            trace_c=np.empty(0),
            trace_rho=np.empty(0),
            eval_m=int(d["eval_m"]),
            metric=d["metric"],
            status=d["status"],
            clamp_fraction=float(d["clamp_fraction"]),
            pool=pool,
            config=cfg,
        )


def step_size(n: int, cfg: SacConfig) -> float:
    """Decaying gain ``a / (n + A)^gamma`` at iteration ``n`` (1-based)."""
    if n < 1:
        raise ParameterError(f"iteration index must be >= 1, got {n}")
    return cfg.step_a / (n + cfg.step_A) ** cfg.step_gamma


def _iterate(
    config: SacConfig,
    c0: float,
    rho_of: Callable[[int, float], float],
) -> tuple[np.ndarray, np.ndarray, int]:
    """Run the projected update loop; ``rho_of(n, c)`` supplies the noisy measurement."""
    lo, hi = config.interval.c_lower, config.interval.c_upper
    trace_c = np.empty(config.n_iter)
    trace_rho = np.empty(config.n_iter)
    c = c0
    clamps = 0
    for n in range(1, config.n_iter + 1):
        rho_hat = rho_of(n, c)
        raw = c - step_size(n, config) * (rho_hat - config.target_rho)
        c = min(max(raw, lo), hi)
        if c != raw:
            clamps += 1
        trace_c[n - 1] = c
        trace_rho[n - 1] = rho_hat
    return trace_c, trace_rho, clamps


def _frozen_pool(config: SacConfig) -> ItemPool:
    if isinstance(config.items, ItemPool):
        return config.items
    return build_pool(replace(config.items, seed=child_seed(config.seed, "sac/pool", 0)))


def _pool_for_iteration(config: SacConfig, frozen: ItemPool, tag: str, n: int) -> ItemPool:
    if not config.redraw_items or isinstance(config.items, ItemPool):
        return frozen
    return build_pool(replace(config.items, seed=child_seed(config.seed, tag, n)))


def sac_calibrate(config: SacConfig) -> SacResult:
    """Run the full stochastic calibration.

    Raises :class:`DivergedObjectiveError` if the error-variance metric meets
    a batch whose information underflows to zero (infinite error variance);
    large but finite error variances are propagated as ordinary noise.
    """
    c0 = config.resolved_c_init()
    frozen = _frozen_pool(config)
    theta_rng = stream(config.seed, "sac/theta")

    def rho_of(n: int, c: float) -> float:
        theta = sample_latent(config.latent, config.m_per_iter, rng=theta_rng).theta
        pool = _pool_for_iteration(config, frozen, "sac/pool", n)
        summary = reliability_summary(theta, pool, c)
        if config.metric != METRIC_AVG_INFO and summary.underflow:
            raise DivergedObjectiveError(
                f"error-variance objective diverged at iteration {n} (c={c}): "
                "test information underflowed to zero on the batch"
            )
        return metric_value(summary, config.metric)

    trace_c, trace_rho, clamps = _iterate(config, c0, rho_of)
    c_star = float(np.mean(trace_c[config.burn_in:]))

    # Independent evaluation: blocks shaped like iteration batches, fresh streams.
    eval_rng = stream(config.seed, "sac/eval")
    n_blocks = max(1, config.resolved_eval_m() // config.m_per_iter)
    block_values = []
    for b in range(n_blocks):
        theta = sample_latent(config.latent, config.m_per_iter, rng=eval_rng).theta
        pool = _pool_for_iteration(config, frozen, "sac/eval-pool", b)
        block_values.append(metric_value(reliability_summary(theta, pool, c_star), config.metric))
    achieved = float(np.mean(block_values))
    eval_pool = _pool_for_iteration(config, frozen, "sac/eval-pool", 0)

    clamp_fraction = clamps / config.n_iter
    status = STATUS_BOUNDARY_CHATTER if clamp_fraction > _BOUNDARY_CHATTER_FRACTION else STATUS_OK
    return SacResult(
        c_star=c_star,
        achieved_rho=achieved,
        trace_c=trace_c,
        trace_rho=trace_rho,
        eval_m=n_blocks * config.m_per_iter,
        metric=config.metric,
        status=status,
        clamp_fraction=clamp_fraction,
        pool=eval_pool,
        config=config,
    )


def sac_deviation_study(config: SacConfig, n_seeds: int) -> dict:
    """Deviation statistics for one condition across independent seeds.

    Each run uses a seed derived from ``(config.seed, run index)``; deltas are
    ``achieved - target``. Returns the summary-table aggregates: mean, SD,
    mean absolute error, and the percentage of runs within 0.01 / 0.02 / 0.05.
    """
    if n_seeds < 2:
        raise ParameterError(f"n_seeds must be >= 2 for deviation statistics, got {n_seeds}")
    deltas = np.empty(n_seeds)
    for i in range(n_seeds):
        run_cfg = replace(config, seed=child_seed(config.seed, "sac/study", i))
        deltas[i] = sac_calibrate(run_cfg).achieved_rho - config.target_rho
    abs_d = np.abs(deltas)
    return {
        "n_seeds": int(n_seeds),
        "mean_delta": float(np.mean(deltas)),
        "sd_delta": float(np.std(deltas, ddof=1)),
        "mae": float(np.mean(abs_d)),
        "pct_within_001": float(100.0 * np.mean(abs_d < 0.01)),
        "pct_within_002": float(100.0 * np.mean(abs_d < 0.02)),
        "pct_within_005": float(100.0 * np.mean(abs_d < 0.05)),
    }
