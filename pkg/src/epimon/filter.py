"""Augmented sampling-importance-resampling filter over SEIRD parameters.

Each particle binds a parameter hypothesis (alpha, beta, gamma, eta) to a
compartment state whose S and E entries are its own latent reconstruction
and whose I, R, D entries are re-anchored to the observed counts after each
day is absorbed: the weight for day k+1 conditions on the actual observed
state at day k, so predictive means never drift from the data they are
conditioned on.  One filter day is: perturb every retained particle into a
batch of children (augmentation), propagate each child's state one day
under its own rates, weight by the Poisson likelihood of the new
observation times a prior/candidate density ratio, normalize with
log-sum-exp, resample a fixed-size population by multinomial draw, and
anchor the survivors to the new observation.  The augmentation step is what
keeps the population from depleting onto a handful of distinct values.

Clouds are stored as row-per-particle arrays; ``Particle`` is the scalar
view used at the edges (tests, inspection).

Randomness is drawn from per-day, per-purpose substreams of a single master
seed, so a run is a pure function of (data, config, master seed) no matter
how the per-particle work is scheduled.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import ParamVector, StateVector, integrate_day_arrays
from .likelihood import Observation, obs_loglik_arrays

log = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)

# Substream purposes: every random draw in a run comes from
# SeedSequence(master_seed, spawn_key=(day, purpose)).
STREAM_INIT = 0
STREAM_AUGMENT = 1
STREAM_RESAMPLE = 2
STREAM_PREDICTIVE = 3
STREAM_SIMULATE = 4


class TotalDepletionError(RuntimeError):
    """Every particle weight collapsed to zero: model and data are incompatible."""


def substream(master_seed: int, day: int, purpose: int) -> np.random.Generator:
    """Deterministic per-day, per-purpose generator derived from the master seed."""
    if day < 0:
        raise ValueError("day must be >= 0")
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(day, purpose))
    return np.random.default_rng(ss)


def _as_generator(rng_seed) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


@dataclass(frozen=True)
class PriorSpec:
    """Independent Exponential priors on the four rates, mean-parameterized.

    ``mean_gamma = 1/14`` means E[gamma] = 1/14, i.e. a 14-day mean
    infectious duration.
    """

    mean_alpha: float
    mean_beta: float
    mean_gamma: float
    mean_eta: float

    def __post_init__(self):
        for name in ("mean_alpha", "mean_beta", "mean_gamma", "mean_eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def means(self) -> np.ndarray:
        return np.array(
            [self.mean_alpha, self.mean_beta, self.mean_gamma, self.mean_eta], dtype=float
        )

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw an (n, 4) matrix of rate vectors."""
        return rng.exponential(scale=self.means(), size=(n, 4))

    def log_density(self, params: np.ndarray) -> np.ndarray:
        """Joint log-density of each row of an (n, 4) rate matrix."""
        m = self.means()
        return -np.log(m).sum() - (params / m).sum(axis=1)


@dataclass(frozen=True)
class KernelSpec:
    """Multiplicative log-normal perturbation applied independently per rate.

    A child rate is parent * exp(sigma_log * z) with z standard normal, so
    positivity is preserved and the perturbation scale is relative, which
    matters when the four rates differ by five orders of magnitude.
    """

    sigma_log: float

    def __post_init__(self):
        if not self.sigma_log > 0:
            raise ValueError("sigma_log must be > 0")

    def log_density(self, children: np.ndarray, parents: np.ndarray) -> np.ndarray:
        """Joint log-density g(child | parent) for paired (n, 4) rate matrices."""
        s = self.sigma_log
        z = np.log(children / parents) / s
        per_dim = -np.log(children) - math.log(s) - 0.5 * _LOG_2PI - 0.5 * z**2
        return per_dim.sum(axis=1)


@dataclass(frozen=True)
class Particle:
    """Scalar view of one particle: rates, latent state, unnormalized log weight."""

    params: ParamVector
    state: StateVector
    log_weight: float = 0.0


@dataclass
class ParticleCloud:
    """A weighted particle population synchronized to one day.

    params      : (n, 4) rows of (alpha, beta, gamma, eta)
    states      : (n, 5) rows of (S, E, I, R, D); S and E are the particle's
                  own latent reconstruction, I, R, D equal the last absorbed
                  observation (or the propagated means mid-step, before
                  ``anchor`` runs)
    log_weights : (n,) unnormalized log weights
    weights     : (n,) normalized weights, populated by ``normalize``
    log_kernel  : (n,) log candidate density of each child given its parent,
                  populated by ``augment`` and consumed by ``weigh``
    sizes       : the (n_c, n_p, n_b) sampler configuration this cloud belongs to
    """

    day: int
    params: np.ndarray
    states: np.ndarray
    log_weights: np.ndarray
    sizes: tuple[int, int, int]
    weights: np.ndarray | None = None
    log_kernel: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.params)
        if len(self.states) != n or len(self.log_weights) != n:
            raise ValueError("params, states and log_weights must have equal length")

    @property
    def n(self) -> int:
        return len(self.params)

    def particle(self, i: int) -> Particle:
        return Particle(
            params=ParamVector.from_array(self.params[i]),
            state=StateVector.from_array(self.states[i]),
            log_weight=float(self.log_weights[i]),
        )

    @classmethod
    def from_particles(cls, day, particles, sizes=(0, 0, 0)) -> "ParticleCloud":
        return cls(
            day=day,
            params=np.array([p.params.as_array() for p in particles]),
            states=np.array([p.state.as_array() for p in particles]),
            log_weights=np.array([p.log_weight for p in particles], dtype=float),
            sizes=sizes,
        )


@dataclass(frozen=True)
class FilterOutput:
    """One filter day's result: posterior rate samples and their predictive means.

    posterior_samples : (n_p, 4) retained rate vectors for this day
    ess               : effective sample size of the weighting stage that
                        produced them (bounded by the candidate count)
    predictive_means  : (n_p, 5) each survivor's one-day-ahead propagated
                        state, i.e. the Poisson means its weight was based on
    """

    day: int
    posterior_samples: np.ndarray
    ess: float
    predictive_means: np.ndarray


@dataclass(frozen=True)
class FilterConfig:
    """Sampler sizes and knobs for a full filter run."""

    n_c: int = 10_000
    n_p: int = 1_000
    n_b: int = 10
    substeps: int = 10
    sigma_log: float = 0.1
    prior_in_weight: bool = True
    master_seed: int = 0

    def __post_init__(self):
        for name in ("n_c", "n_p", "n_b", "substeps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.sigma_log > 0:
            raise ValueError("sigma_log must be > 0")


def init_cloud(
    prior: PriorSpec, init_state: StateVector, n_c: int, rng_seed, day: int = 0
) -> ParticleCloud:
    """Draw the anchor-day candidate population from the prior.

    The candidate distribution on the anchor day is the prior itself, so the
    prior/candidate ratio in the first weighting cancels; ``weigh`` sees
    ``log_kernel is None`` and applies no correction.
    """
    if n_c < 1:
        raise ValueError("n_c must be >= 1")
    rng = _as_generator(rng_seed)
    params = prior.sample(n_c, rng)
    states = np.tile(init_state.as_array(), (n_c, 1))
    return ParticleCloud(
        day=day,
        params=params,
        states=states,
        log_weights=np.zeros(n_c),
        sizes=(n_c, 0, 0),
    )


def weigh(
    cloud: ParticleCloud,
    next_obs: Observation,
    substeps: int = 10,
    prior: PriorSpec | None = None,
) -> ParticleCloud:
    """Propagate every particle one day and weight it against the new observation.

    The log weight is the observation log-likelihood at the particle's own
    propagated means, plus ``log prior - log candidate`` when the cloud came
    from ``augment`` (its ``log_kernel`` is set).  Pass ``prior=None`` to
    drop the prior factor and weight against a flat prior instead.

    Raises
    ------
    TotalDepletionError
        If every weight is -inf.
    """
    if next_obs.day != cloud.day + 1:
        raise ValueError(
            f"cloud is synchronized to day {cloud.day}, cannot weigh day-{next_obs.day} data"
        )
    states, clamped = integrate_day_arrays(cloud.states, cloud.params, substeps)
    if clamped:
        log.debug("day %d: clamped %d negative compartment values", next_obs.day, clamped)
    lw = obs_loglik_arrays(next_obs, states)
    if cloud.log_kernel is not None:
        lw = lw - cloud.log_kernel
        if prior is not None:
            lw = lw + prior.log_density(cloud.params)
    if not (lw > -np.inf).any():
        raise TotalDepletionError(
            f"all {cloud.n} particle weights vanished at day {next_obs.day}"
        )
    return ParticleCloud(
        day=next_obs.day,
        params=cloud.params,
        states=states,
        log_weights=lw,
        sizes=cloud.sizes,
        log_kernel=cloud.log_kernel,
    )


def normalize(cloud: ParticleCloud) -> tuple[ParticleCloud, float]:
    """Materialize normalized weights and the effective sample size.

    Weights are exponentiated after subtracting the max log weight, so any
    common shift cancels exactly.  ESS is 1 / sum(w^2), between 1 and the
    particle count (the latter iff weights are uniform).
    """
    lw = cloud.log_weights
    m = lw.max()
    if not m > -np.inf:
        raise TotalDepletionError(f"no finite weight among {cloud.n} particles")
    w = np.exp(lw - m)
    w /= w.sum()
    ess = 1.0 / float((w**2).sum())
    return replace(cloud, weights=w), ess


def resample(cloud: ParticleCloud, n_p: int, rng_seed) -> ParticleCloud:
    """Multinomial resampling with replacement down to ``n_p`` particles.

    Each survivor keeps its rate vector and its own latent state; weights
    reset to uniform and the kernel record is cleared.
    """
    if cloud.weights is None:
        raise ValueError("resample requires normalized weights; call normalize first")
    rng = _as_generator(rng_seed)
    ancestors = rng.choice(cloud.n, size=n_p, replace=True, p=cloud.weights)
    return ParticleCloud(
        day=cloud.day,
        params=cloud.params[ancestors],
        states=cloud.states[ancestors],
        log_weights=np.zeros(n_p),
        sizes=cloud.sizes,
    )


def anchor(cloud: ParticleCloud, obs: Observation) -> ParticleCloud:
    """Replace every particle's I, R, D entries with the observed counts.

    S and E stay latent, carried per particle; the observable compartments
    are conditioned on the data once an observation has been absorbed, so
    the next day's propagation starts from the actual observed state.
    """
    if obs.day != cloud.day:
        raise ValueError(f"cloud is at day {cloud.day}, cannot anchor day-{obs.day} counts")
    states = cloud.states.copy()
    states[:, 2] = obs.infected
    states[:, 3] = obs.recovered
    states[:, 4] = obs.deaths
    return replace(cloud, states=states)


def augment(cloud: ParticleCloud, kernel: KernelSpec, n_b: int, rng_seed) -> ParticleCloud:
    """Expand each retained particle into ``n_b`` perturbed children.

    Children inherit the parent's latent state; the candidate log-density
    g(child | parent) is stored on the cloud for the weight correction.
    Children are laid out parent-major: rows [l*n_b, (l+1)*n_b) descend from
    parent l.
    """
    if n_b < 1:
        raise ValueError("n_b must be >= 1")
    rng = _as_generator(rng_seed)
    n_p = cloud.n
    z = rng.standard_normal((n_p, n_b, 4))
    children = (cloud.params[:, None, :] * np.exp(kernel.sigma_log * z)).reshape(-1, 4)
    # g(child|parent) evaluated from the z draws directly: log(child/parent)
    # equals sigma_log * z exactly, which sidesteps a round trip through log.
    log_kernel = (
        -np.log(children).reshape(n_p, n_b, 4).sum(axis=2)
        - 4 * (math.log(kernel.sigma_log) + 0.5 * _LOG_2PI)
        - 0.5 * (z**2).sum(axis=2)
    ).reshape(-1)
    states = np.repeat(cloud.states, n_b, axis=0)
    return ParticleCloud(
        day=cloud.day,
        params=children,
        states=states,
        log_weights=np.zeros(n_p * n_b),
        sizes=cloud.sizes,
        log_kernel=log_kernel,
    )


def step_filter(
    cloud: ParticleCloud,
    obs_next: Observation,
    prior: PriorSpec,
    kernel: KernelSpec,
    config: FilterConfig,
) -> tuple[ParticleCloud, FilterOutput]:
    """Advance one filter day: augment, weigh, normalize, resample, anchor.

    Returns the anchored cloud (ready for the next day) and the day's
    ``FilterOutput``.  The output's predictive means are captured before
    anchoring: they are the propagated means the weights were based on.
    """
    day = obs_next.day
    cloud = augment(
        cloud, kernel, config.n_b, substream(config.master_seed, day, STREAM_AUGMENT)
    )
    cloud = weigh(
        cloud, obs_next, config.substeps, prior if config.prior_in_weight else None
    )
    cloud, ess = normalize(cloud)
    cloud = resample(cloud, config.n_p, substream(config.master_seed, day, STREAM_RESAMPLE))
    out = FilterOutput(
        day=day,
        posterior_samples=cloud.params,
        ess=ess,
        predictive_means=cloud.states,
    )
    return anchor(cloud, obs_next), out


def run_filter(
    observations,
    prior: PriorSpec,
    kernel: KernelSpec,
    init_state: StateVector,
    config: FilterConfig,
) -> list[FilterOutput]:
    """Run the filter over an ordered observation sequence.

    ``observations[0]`` supplies the anchor day (its counts are represented
    by ``init_state``); each later observation yields one ``FilterOutput``,
    so T+1 observed days produce T outputs.
    """
    obs = list(observations)
    if len(obs) < 2:
        raise ValueError("need at least two observed days to run the filter")
    day0 = obs[0].day
    cloud = init_cloud(
        prior, init_state, config.n_c, substream(config.master_seed, day0, STREAM_INIT), day=day0
    )
    outputs = []
    # Day 0 -> 1: candidates are raw prior draws, so no augmentation and no
    # density correction; the weight is the likelihood alone.
    first = obs[1]
    cloud = weigh(cloud, first, config.substeps, prior=None)
    cloud, ess = normalize(cloud)
    cloud = resample(
        cloud, config.n_p, substream(config.master_seed, first.day, STREAM_RESAMPLE)
    )
    outputs.append(
        FilterOutput(
            day=first.day,
            posterior_samples=cloud.params,
            ess=ess,
            predictive_means=cloud.states,
        )
    )
    cloud = anchor(cloud, first)
    for ob in obs[2:]:
        cloud, out = step_filter(cloud, ob, prior, kernel, config)
        outputs.append(out)
    return outputs
