"""Synthetic biased-dataset generators.

Four linear generation schemes differing in how the protected attribute
``z`` reaches the target: a direct additive effect (simple-direct), an
effect mediated by "unfair" features centred on z (simple-proxy), a direct
effect gated by a product of binary interaction features
(interactions-direct), and a mediated effect gated by a single interaction
feature (interactions-proxy). The latent log-odds score is linear in the
sampled covariates and the label is Bernoulli in its sigmoid.

Calibration searches the direct-effect weight (or the unfair-weight
scale) and the intercept by nested bisection against target prevalence
and target statistical-parity difference, evaluated on the exact
conditional label probabilities of a large fixed sample.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, replace

import numpy as np
import yaml

from .data import Dataset
from .errors import CalibrationError, GenerationSpecError, ParameterError

SIMPLE_DIRECT = "simple-direct"
SIMPLE_PROXY = "simple-proxy"
INTERACTIONS_DIRECT = "interactions-direct"
INTERACTIONS_PROXY = "interactions-proxy"

SCHEMES = (SIMPLE_DIRECT, SIMPLE_PROXY, INTERACTIONS_DIRECT, INTERACTIONS_PROXY)

_DIRECT_SCHEMES = (SIMPLE_DIRECT, INTERACTIONS_DIRECT)


@dataclass(frozen=True)
class SyntheticSpec:
    """Complete recipe for one synthetic dataset draw."""

    scheme: str
    n: int
    fair_weights: tuple[float, ...]
    unfair_weights: tuple[float, ...] = ()
    d_interaction: int = 0
    direct_weight: float = 0.0
    intercept: float = 0.0
    z_prob: float = 0.5
    interaction_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise GenerationSpecError(f"unknown scheme {self.scheme!r}")
        if self.n < 1:
            raise GenerationSpecError("n must be positive")
        if not 0.0 < self.z_prob < 1.0 or not 0.0 < self.interaction_prob < 1.0:
            raise GenerationSpecError("probabilities must lie in (0, 1)")
        object.__setattr__(self, "fair_weights", tuple(float(v) for v in self.fair_weights))
        object.__setattr__(self, "unfair_weights", tuple(float(v) for v in self.unfair_weights))
        if len(self.fair_weights) == 0:
            raise GenerationSpecError("at least one fair feature is required")
        if self.scheme in (SIMPLE_PROXY, INTERACTIONS_PROXY) and len(self.unfair_weights) == 0:
            raise GenerationSpecError(f"{self.scheme} requires unfair features")
        if self.scheme in (SIMPLE_DIRECT,) and (self.unfair_weights or self.d_interaction):
            raise GenerationSpecError("simple-direct uses fair features and z only")
        if self.scheme == SIMPLE_PROXY and self.d_interaction:
            raise GenerationSpecError("simple-proxy takes no interaction features")
        if self.scheme == INTERACTIONS_DIRECT and (self.unfair_weights or self.d_interaction < 1):
            raise GenerationSpecError("interactions-direct needs interaction features and no unfair ones")
        if self.scheme == INTERACTIONS_PROXY and self.d_interaction != 1:
            raise GenerationSpecError("interactions-proxy uses exactly one interaction feature")

    @property
    def d_fair(self) -> int:
        return len(self.fair_weights)

    @property
    def d_unfair(self) -> int:
        return len(self.unfair_weights)

    @property
    def total_features(self) -> int:
        """Feature count of the generated dataset (includes the z column)."""
        return self.d_fair + self.d_unfair + self.d_interaction + 1


def _sigmoid(s: np.ndarray) -> np.ndarray:
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    return out


def _draw_covariates(spec: SyntheticSpec, n: int, rng: np.random.Generator):
    """Sample (z, fair, unfair, interaction) blocks in a fixed order."""
    z = rng.binomial(1, spec.z_prob, n).astype(np.float64)
    fair = rng.standard_normal((n, spec.d_fair))
    unfair = None
    if spec.d_unfair:
        unfair = z[:, None] + rng.standard_normal((n, spec.d_unfair))
    inter = None
    if spec.d_interaction:
        inter = rng.binomial(1, spec.interaction_prob, (n, spec.d_interaction)).astype(np.float64)
    return z, fair, unfair, inter


def _latent_score(spec: SyntheticSpec, z, fair, unfair, inter) -> np.ndarray:
    s = spec.intercept + fair @ np.asarray(spec.fair_weights)
    if spec.scheme == SIMPLE_DIRECT:
        s = s + spec.direct_weight * z
    elif spec.scheme == SIMPLE_PROXY:
        s = s + unfair @ np.asarray(spec.unfair_weights)
    elif spec.scheme == INTERACTIONS_DIRECT:
        s = s + spec.direct_weight * z * inter.prod(axis=1)
    else:  # interactions-proxy
        s = s + inter[:, 0] * (unfair @ np.asarray(spec.unfair_weights))
    return s


def generate(spec: SyntheticSpec) -> Dataset:
    """Draw one dataset from the spec; deterministic given its seed.

    Feature columns are ordered fair block, unfair block, interaction
    block, then the protected attribute itself (named ``z``), which is
    model-visible by design.
    """
    rng = np.random.default_rng(spec.seed)
    z, fair, unfair, inter = _draw_covariates(spec, spec.n, rng)
    s = _latent_score(spec, z, fair, unfair, inter)
    y = (rng.random(spec.n) < _sigmoid(s)).astype(np.int64)

    blocks = [fair]
    names = [f"fair_{i}" for i in range(spec.d_fair)]
    if unfair is not None:
        blocks.append(unfair)
        names += [f"unfair_{i}" for i in range(spec.d_unfair)]
    if inter is not None:
        blocks.append(inter)
        names += [f"inter_{i}" for i in range(spec.d_interaction)]
    blocks.append(z[:, None])
    names.append("z")
    return Dataset(
        features=np.hstack(blocks),
        protected=z.astype(np.int64),
        labels=y,
        feature_names=tuple(names),
    )


def _bisect(fn, lo: float, hi: float, target: float, iters: int = 38) -> float:
    """Root of fn(x) = target for nondecreasing fn on [lo, hi]."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate(spec: SyntheticSpec, target_prevalence: float, target_spd: float,
              tolerance: float = 0.02, n_eval: int = 100_000, max_expand: int = 40) -> SyntheticSpec:
    """Adjust the intercept and the z-effect scale to hit the targets.

    Direct schemes move the direct-effect weight; proxy schemes rescale
    the unfair-feature weights. The outer bisection drives the
    statistical-parity difference, with an inner bisection re-solving the
    intercept for prevalence at each candidate; both run on the exact
    conditional label probabilities of one fixed sample, so the search is
    deterministic.
    """
    if not 0.0 < target_prevalence < 1.0:
        raise ParameterError("target prevalence must lie in (0, 1)")
    if not 0.0 <= target_spd < 1.0:
        raise ParameterError("target SPD must lie in [0, 1)")
    if tolerance <= 0:
        raise ParameterError("tolerance must be positive")

    direct = spec.scheme in _DIRECT_SCHEMES
    base_unfair = np.asarray(spec.unfair_weights) if spec.unfair_weights else None
    if not direct and float(np.abs(base_unfair).sum()) == 0.0:
        raise CalibrationError("unfair weights are all zero; SPD cannot be tuned")

    rng = np.random.default_rng(spec.seed)
    z, fair, unfair, inter = _draw_covariates(spec, max(n_eval, 100_000), rng)
    priv = z == 1

    # score = intercept + base + scale * path; only (intercept, scale) move
    base = fair @ np.asarray(spec.fair_weights)
    if spec.scheme == SIMPLE_DIRECT:
        path = z
    elif spec.scheme == INTERACTIONS_DIRECT:
        path = z * inter.prod(axis=1)
    elif spec.scheme == SIMPLE_PROXY:
        path = unfair @ base_unfair
    else:
        path = inter[:, 0] * (unfair @ base_unfair)

    def stats(scale: float, intercept: float) -> tuple[float, float]:
        p = _sigmoid(intercept + base + scale * path)
        return float(p.mean()), abs(float(p[priv].mean()) - float(p[~priv].mean()))

    def with_knobs(scale: float, intercept: float) -> SyntheticSpec:
        if direct:
            return replace(spec, direct_weight=scale, intercept=intercept)
        return replace(spec, unfair_weights=tuple(base_unfair * scale), intercept=intercept)

    def solve_intercept(scale: float) -> float:
        return _bisect(lambda b: stats(scale, b)[0], -30.0, 30.0, target_prevalence)

    def spd_at(scale: float) -> float:
        return stats(scale, solve_intercept(scale))[1]

    hi = 1.0
    spd_hi = spd_at(hi)
    expansions = 0
    while spd_hi < target_spd and expansions < max_expand:
        hi *= 2.0
        new_spd = spd_at(hi)
        if new_spd <= spd_hi + 1e-9 and new_spd < target_spd:
            raise CalibrationError(
                f"target SPD {target_spd} is unreachable; plateau at {new_spd:.4f}",
                best_residual=abs(new_spd - target_spd),
            )
        spd_hi = new_spd
        expansions += 1
    if spd_hi < target_spd:
        raise CalibrationError(
            f"could not reach target SPD {target_spd}; best {spd_hi:.4f} at scale {hi:.2f}",
            best_residual=abs(spd_hi - target_spd),
        )
    scale = _bisect(spd_at, 0.0, hi, target_spd)
    calibrated = with_knobs(scale, solve_intercept(scale))

    prev, spd = stats(scale, calibrated.intercept)
    if abs(prev - target_prevalence) > tolerance or abs(spd - target_spd) > tolerance:
        raise CalibrationError(
            f"calibration residuals too large: prevalence {prev:.4f}, SPD {spd:.4f}",
            best_residual=max(abs(prev - target_prevalence), abs(spd - target_spd)),
        )
    return calibrated


# ---------------------------------------------------------------------------
# presets


def _preset_path():
    return importlib.resources.files("fairbench") / "configs" / "presets"


def preset_names() -> list[str]:
    return sorted(p.name[:-5].upper().replace("_", "-") for p in _preset_path().iterdir()
                  if p.name.endswith(".yaml"))


def load_preset(name: str, n: int | None = None, seed: int | None = None) -> SyntheticSpec:
    """A shipped preset spec, optionally overriding row count and seed.

    Preset coefficients were frozen by running :func:`calibrate` against
    the published prevalence/SPD targets; the YAML files record those
    targets alongside the coefficients.
    """
    fname = name.lower().replace("-", "_") + ".yaml"
    path = _preset_path() / fname
    if not path.is_file():
        raise ParameterError(f"unknown preset {name!r}; available: {preset_names()}")
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    spec = SyntheticSpec(
        scheme=raw["scheme"],
        n=int(raw["n"]),
        fair_weights=tuple(raw["fair_weights"]),
        unfair_weights=tuple(raw.get("unfair_weights", []) or []),
        d_interaction=int(raw.get("d_interaction", 0)),
        direct_weight=float(raw.get("direct_weight", 0.0)),
        intercept=float(raw["intercept"]),
        z_prob=float(raw.get("z_prob", 0.5)),
        interaction_prob=float(raw.get("interaction_prob", 0.5)),
        seed=int(raw.get("seed", 0)),
    )
    if n is not None:
        spec = replace(spec, n=int(n))
    if seed is not None:
        spec = replace(spec, seed=int(seed))
    return spec


def preset_targets(name: str) -> tuple[float, float]:
    """(prevalence, spd) targets recorded in a preset file."""
    fname = name.lower().replace("-", "_") + ".yaml"
    raw = yaml.safe_load((_preset_path() / fname).read_text(encoding="utf-8"))
    return float(raw["target_prevalence"]), float(raw["target_spd"])
