# Data model for monotone single index regression:
#   Y_i = link(alpha0' X_i) + eps_i,   ||alpha0||_2 = 1,  link nondecreasing.
#
# Conventions
# -----------
# - Covariates are stored in shape (n, d): rows = observations.
# - All containers are immutable after construction (arrays are frozen),
#   so they can be shared freely across worker processes.
# - Randomness always flows through numpy's Generator seeded from an
#   explicit integer; child streams are derived with `derive_seed`.

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "Sample",
    "ModelSpec",
    "IndexProjection",
    "cubic_normal_spec",
    "generate_sample",
    "project_sample",
    "conditional_mean_cubic",
    "derive_seed",
    "link_function",
    "link_derivative",
]

CovariateSampler = Callable[[np.random.Generator, int, int], np.ndarray]

# Named link functions: name -> (value, first derivative).
_LINKS: dict[str, tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]] = {
    "cubic": (lambda u: u**3, lambda u: 3.0 * u**2),
    "identity": (lambda u: np.asarray(u, dtype=float) + 0.0, lambda u: np.ones_like(np.asarray(u, dtype=float))),
}


def link_function(name: str) -> Callable[[np.ndarray], np.ndarray]:
    """Return the link function registered under `name`."""
    try:
        return _LINKS[name][0]
    except KeyError:
        raise ValueError(f"unknown link {name!r}; available: {sorted(_LINKS)}") from None


def link_derivative(name: str) -> Callable[[np.ndarray], np.ndarray]:
    """Return the first derivative of the link registered under `name`."""
    try:
        return _LINKS[name][1]
    except KeyError:
        raise ValueError(f"unknown link {name!r}; available: {sorted(_LINKS)}") from None


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Sample:
    """Observed covariates and responses.

    Parameters
    ----------
    xs : (n, d) ndarray
        Covariate rows. Requires n >= 2 and d >= 2, all entries finite.
    ys : (n,) ndarray
        Responses, one per covariate row.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 2:
            raise ValueError("xs must be a 2-d array of shape (n, d)")
        n, d = xs.shape
        if n < 2:
            raise ValueError(f"need at least 2 observations, got {n}")
        if d < 2:
            raise ValueError(f"need at least 2 covariates, got {d}")
        if ys.shape != (n,):
            raise ValueError(f"ys has shape {ys.shape}, expected ({n},)")
        if not np.isfinite(xs).all() or not np.isfinite(ys).all():
            raise ValueError("sample contains non-finite entries")
        object.__setattr__(self, "xs", _freeze(xs))
        object.__setattr__(self, "ys", _freeze(ys))

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]


@dataclass(frozen=True)
class ModelSpec:
    """Simulation model: index direction, link, noise level and covariate law.

    `covariate_law` is either the name "standard_normal" (i.i.d. N(0,1)
    entries) or a callable (rng, n, d) -> (n, d) array. Callables must be
    picklable if the spec is to be used with multiprocess replication.
    """

    alpha0: np.ndarray
    link: str = "cubic"
    noise_sd: float = 1.0
    covariate_law: Union[str, CovariateSampler] = "standard_normal"

    def __post_init__(self):
        a = np.asarray(self.alpha0, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise ValueError("alpha0 must be a vector of length >= 2")
        if not np.isfinite(a).all():
            raise ValueError("alpha0 contains non-finite entries")
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("alpha0 must have unit Euclidean norm (within 1e-12)")
        if self.link not in _LINKS:
            raise ValueError(f"unknown link {self.link!r}; available: {sorted(_LINKS)}")
        if not np.isfinite(self.noise_sd) or self.noise_sd < 0:
            raise ValueError("noise_sd must be a nonnegative real")
        if isinstance(self.covariate_law, str) and self.covariate_law != "standard_normal":
            raise ValueError(f"unknown covariate law {self.covariate_law!r}")
        object.__setattr__(self, "alpha0", _freeze(a))

    @property
    def d(self) -> int:
        return self.alpha0.size


@dataclass(frozen=True)
class IndexProjection:
    """Projected covariate values alpha'x_i sorted ascending.

    `order` is the permutation that sorts the projections (ties broken by
    original index), `ts` the sorted values and `ys_ordered` the responses
    rearranged the same way.
    """

    order: np.ndarray
    ts: np.ndarray
    ys_ordered: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "order", _freeze(np.asarray(self.order)))
        object.__setattr__(self, "ts", _freeze(np.asarray(self.ts, dtype=float)))
        object.__setattr__(self, "ys_ordered", _freeze(np.asarray(self.ys_ordered, dtype=float)))


def cubic_normal_spec(d: int = 3) -> ModelSpec:
    """The reference simulation model: equal-weights index, cubic link,
    unit noise, i.i.d. standard normal covariates."""
    if d < 2:
        raise ValueError("d must be >= 2")
    return ModelSpec(alpha0=np.full(d, 1.0 / np.sqrt(d)), link="cubic", noise_sd=1.0)


def derive_seed(seed: int, *path: int) -> int:
    """Derive a reproducible child seed from a root seed and a stream path.

    Distinct paths give statistically independent streams; the same
    (seed, path) always gives the same child seed.
    """
    parts = [int(seed)] + [int(p) for p in path]
    if any(p < 0 for p in parts):
        raise ValueError("seed and stream ids must be nonnegative integers")
    # SeedSequence ignores trailing zero entropy words, so the path length
    # is mixed in to keep distinct paths on distinct streams.
    ss = np.random.SeedSequence([parts[0], len(parts) - 1, *parts[1:]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generate_sample(spec: ModelSpec, n: int, seed: int) -> Sample:
    """Draw a sample of size n from the model.

    Parameters
    ----------
    spec : ModelSpec
        Model to sample from.
    n : int
        Number of observations, at least 2.
    seed : int
        Seed for the generator; identical seeds give bit-identical samples.

    Returns
    -------
    Sample
        ys_i = link(alpha0' xs_i) + eps_i with eps_i ~ N(0, noise_sd^2).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(int(seed))
    # Fixed draw order (covariates first, then noise) pins determinism.
    if callable(spec.covariate_law):
        xs = np.asarray(spec.covariate_law(rng, n, spec.d), dtype=float)
        if xs.shape != (n, spec.d):
            raise ValueError(f"covariate sampler returned shape {xs.shape}, expected {(n, spec.d)}")
    else:
        xs = rng.standard_normal((n, spec.d))
    ys = link_function(spec.link)(xs @ spec.alpha0)
    if spec.noise_sd > 0:
        ys = ys + spec.noise_sd * rng.standard_normal(n)
    return Sample(xs=xs, ys=ys)


def project_sample(sample: Sample, alpha: np.ndarray) -> IndexProjection:
    """Order the sample by the projected values alpha'x_i.

    Ties are broken by original index (stable sort), so the ordering is
    invariant under positive rescaling of `alpha`.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (sample.d,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({sample.d},)")
    if not np.isfinite(alpha).all() or np.linalg.norm(alpha) == 0.0:
        raise ValueError("alpha must be a finite nonzero vector")
    t = sample.xs @ alpha
    order = np.argsort(t, kind="stable")
    return IndexProjection(order=order, ts=t[order], ys_ordered=sample.ys[order])


def conditional_mean_cubic(alpha: np.ndarray, u) -> np.ndarray | float:
    """Closed-form E[Y | alpha'X = u] for the 3-d cubic-normal model.

    Valid only for d = 3, i.i.d. standard normal covariates, cubic link and
    unit-norm `alpha`; at alpha = alpha0 this reduces to u^3. Used as an
    exact oracle in tests and diagnostics.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (3,):
        raise ValueError("closed form is specific to d = 3")
    if abs(np.linalg.norm(alpha) - 1.0) > 1e-8:
        raise ValueError("alpha must have unit norm")
    u = np.asarray(u, dtype=float)
    s1 = alpha.sum()
    s2 = float(alpha @ alpha)
    cross = 0.5 * (s1 * s1 - s2)
    num = s1 * u * (6.0 * s2 * (s2 - cross) + (s1 * u) ** 2)
    out = num / (3.0 * np.sqrt(3.0) * s2**3)
    return float(out) if out.ndim == 0 else out
