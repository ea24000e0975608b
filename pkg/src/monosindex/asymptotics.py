# Limiting covariance targets of the index estimators, computed by Monte
# Carlo integration with small-matrix spectral routines.
#
# All three targets have sandwich form: an outer curvature matrix
# (pseudo-inverted, since it annihilates the true direction) around a
# score covariance. Writing P = I - a0 a0' and U = a0'X:
#
#   sse:    curvature  E[link'(U)   Cov(X|U)],
#           score cov  E[eps^2 (X - E[X|U])(X - E[X|U])'].
#   ese:    same with link'(U)^2 inside both expectations.
#   linear: c^{-2} P S^{-1} G S^{-1} P with S = Cov(X),
#           c = Cov(link(U), U) / Var(U) and G either the literal
#           second-moment matrix E[Y^2 X X'] - E[YX]E[YX]'  (variant
#           "paper_formula") or the OLS residual form
#           E[(Y - c a0'(X - mean))^2 (X - mean)(X - mean)']  (variant
#           "sandwich"). The two variants disagree for nonlinear links;
#           both are exposed.
#
# For the standard normal covariate law the conditional moments are exact
# (E[X|U] = a0 U, Cov(X|U) = P) and the perpendicular component of X is
# independent of (U, eps); every matrix then factorizes into a Monte Carlo
# scalar times P, which keeps the per-entry Monte Carlo error small at
# moderate sample counts. Other covariate laws fall back to binned
# conditional moments (200 quantile bins).

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ModelSpec, link_derivative, link_function

__all__ = [
    "CovarianceTarget",
    "moore_penrose_psd",
    "asymptotic_cov_sse",
    "asymptotic_cov_ese",
    "asymptotic_cov_linear",
]

_N_BINS = 200
_DEFAULT_MC = 1_000_000


@dataclass(frozen=True)
class CovarianceTarget:
    """A limiting covariance matrix with its building blocks.

    `covariance` is the limit of n * Cov(alpha_hat); `curvature` and
    `score_cov` are the outer and inner sandwich matrices (None for the
    linear estimator, which instead reports the proportionality constant
    `constant`).
    """

    covariance: np.ndarray
    curvature: Optional[np.ndarray] = None
    score_cov: Optional[np.ndarray] = None
    constant: Optional[float] = None

    def __post_init__(self):
        for name in ("covariance", "curvature", "score_cov"):
            a = getattr(self, name)
            if a is None:
                continue
            a = np.ascontiguousarray(np.asarray(a, dtype=float))
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def moore_penrose_psd(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix by eigendecomposition.

    Eigenvalues below tol * (largest eigenvalue) are treated as exact
    zeros; the rest are reciprocated. Asymmetric input is rejected.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("input must be a square matrix")
    if not np.isfinite(m).all():
        raise ValueError("input must be finite")
    if np.max(np.abs(m - m.T)) > 1e-10:
        raise ValueError("input is not symmetric (beyond 1e-10)")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    w_max = float(w.max(initial=0.0))
    if w_max <= 0:
        return np.zeros_like(m)
    inv = np.zeros_like(w)
    keep = w > tol * w_max
    inv[keep] = 1.0 / w[keep]
    return (v * inv) @ v.T


def _projector(alpha0: np.ndarray) -> np.ndarray:
    return np.eye(alpha0.size) - np.outer(alpha0, alpha0)


def _rank_check(matrix: np.ndarray, d: int, what: str, tol: float = 1e-10) -> None:
    w = np.linalg.eigvalsh(matrix)
    rank = int(np.sum(w > tol * max(float(w.max(initial=0.0)), 1e-300)))
    if rank < d - 1:
        raise ValueError(f"{what} has rank {rank} < d - 1 = {d - 1}; the limit theorem does not apply")


def _is_standard_normal(spec: ModelSpec) -> bool:
    return spec.covariate_law == "standard_normal"


def _draw_index_and_noise(spec: ModelSpec, mc_samples: int, rng: np.random.Generator):
    u = rng.standard_normal(mc_samples)
    eps = spec.noise_sd * rng.standard_normal(mc_samples) if spec.noise_sd > 0 else np.zeros(mc_samples)
    return u, eps


def _binned_conditional_moments(xs: np.ndarray, u: np.ndarray, n_bins: int = _N_BINS):
    """Bin-wise E[X|U] and Cov(X|U) over quantile bins of u.

    Returns (bin_of_sample, means (B, d), covs (B, d, d)).
    """
    edges = np.quantile(u, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    bin_id = np.searchsorted(edges, u, side="right")
    counts = np.bincount(bin_id, minlength=n_bins).astype(float)
    counts = np.maximum(counts, 1.0)
    d = xs.shape[1]
    means = np.empty((n_bins, d))
    for j in range(d):
        means[:, j] = np.bincount(bin_id, weights=xs[:, j], minlength=n_bins) / counts
    centered = xs - means[bin_id]
    covs = np.empty((n_bins, d, d))
    for j in range(d):
        for k in range(j, d):
            m = np.bincount(bin_id, weights=centered[:, j] * centered[:, k], minlength=n_bins) / counts
            covs[:, j, k] = m
            covs[:, k, j] = m
    return bin_id, means, covs


def _score_target_generic(spec: ModelSpec, mc_samples: int, rng: np.random.Generator, squared: bool):
    """Full-matrix Monte Carlo for non-normal covariate laws."""
    d = spec.d
    xs = spec.covariate_law(rng, mc_samples, d) if callable(spec.covariate_law) else rng.standard_normal((mc_samples, d))
    u = xs @ spec.alpha0
    eps = spec.noise_sd * rng.standard_normal(mc_samples) if spec.noise_sd > 0 else np.zeros(mc_samples)
    lp = link_derivative(spec.link)(u)
    weight = lp**2 if squared else lp
    bin_id, means, covs = _binned_conditional_moments(xs, u)
    bin_weight = np.bincount(bin_id, weights=weight, minlength=covs.shape[0])
    curvature = np.tensordot(bin_weight, covs, axes=1) / mc_samples
    centered = xs - means[bin_id]
    noise_w = eps**2 * (weight if squared else 1.0)
    score_cov = (centered * noise_w[:, None]).T @ centered / mc_samples
    # Both matrices annihilate the true direction exactly (the index has
    # zero conditional variance given itself); binning bias leaks a small
    # spurious component along it that the pseudo-inverse would amplify,
    # so project it out.
    proj = _projector(spec.alpha0)
    return proj @ curvature @ proj, proj @ score_cov @ proj


def _score_target(spec: ModelSpec, mc_samples: int, seed: int, squared: bool) -> CovarianceTarget:
    rng = np.random.default_rng(int(seed))
    d = spec.d
    if _is_standard_normal(spec):
        u, eps = _draw_index_and_noise(spec, mc_samples, rng)
        lp = link_derivative(spec.link)(u)
        weight = lp**2 if squared else lp
        proj = _projector(spec.alpha0)
        # E[X|U] = a0 U and the perpendicular part of X is independent of
        # (U, eps), so both matrices are Monte Carlo scalars times P.
        curvature = float(weight.mean()) * proj
        noise_scalar = float(np.mean(eps**2 * weight)) if squared else float(np.mean(eps**2))
        score_cov = noise_scalar * proj
    else:
        curvature, score_cov = _score_target_generic(spec, mc_samples, rng, squared)
    _rank_check(curvature, d, "the curvature matrix")
    curv_inv = moore_penrose_psd(curvature)
    return CovarianceTarget(covariance=curv_inv @ score_cov @ curv_inv, curvature=curvature, score_cov=score_cov)


def asymptotic_cov_sse(spec: ModelSpec, mc_samples: int = _DEFAULT_MC, seed: int = 0) -> CovarianceTarget:
    """Limiting n * Cov for the simple score estimator."""
    return _score_target(spec, mc_samples, seed, squared=False)


def asymptotic_cov_ese(spec: ModelSpec, mc_samples: int = _DEFAULT_MC, seed: int = 0) -> CovarianceTarget:
    """Limiting n * Cov for the efficient score estimator."""
    return _score_target(spec, mc_samples, seed, squared=True)


def asymptotic_cov_linear(
    spec: ModelSpec,
    mc_samples: int = _DEFAULT_MC,
    seed: int = 0,
    variant: str = "sandwich",
) -> CovarianceTarget:
    """Limiting n * Cov for the normalized linear estimator.

    variant "paper_formula" evaluates the second-moment matrix
    G = E[Y^2 XX'] - E[YX]E[YX]'; variant "sandwich" uses the OLS residual
    form. The proportionality constant c is reported as a diagnostic and
    must be positive for direction consistency.
    """
    if variant not in ("paper_formula", "sandwich"):
        raise ValueError("variant must be 'paper_formula' or 'sandwich'")
    rng = np.random.default_rng(int(seed))
    d = spec.d
    link = link_function(spec.link)
    if _is_standard_normal(spec):
        u, eps = _draw_index_and_noise(spec, mc_samples, rng)
        y = link(u) + eps
        # Var(U) = 1 and mean(X) = 0 exactly under the standard normal law.
        c = float(np.mean(y * u) - y.mean() * u.mean())
        if c <= 0:
            raise ValueError(f"proportionality constant is not positive (c = {c:.3e})")
        proj = _projector(spec.alpha0)
        if variant == "paper_formula":
            scalar = float(np.mean(y**2))
        else:
            q = y - c * u
            scalar = float(np.mean(q**2))
        cov = (scalar / c**2) * proj
        return CovarianceTarget(covariance=cov, constant=c)
    xs = spec.covariate_law(rng, mc_samples, d)
    eps = spec.noise_sd * rng.standard_normal(mc_samples) if spec.noise_sd > 0 else np.zeros(mc_samples)
    u = xs @ spec.alpha0
    y = link(u) + eps
    mean_x = xs.mean(axis=0)
    xc = xs - mean_x
    sigma = xc.T @ xc / mc_samples
    var_u = float(spec.alpha0 @ sigma @ spec.alpha0)
    c = float(np.mean(y * u) - y.mean() * u.mean()) / var_u
    if c <= 0:
        raise ValueError(f"proportionality constant is not positive (c = {c:.3e})")
    if variant == "paper_formula":
        first = (xs * (y**2)[:, None]).T @ xs / mc_samples
        mean_yx = (xs * y[:, None]).mean(axis=0)
        gamma = first - np.outer(mean_yx, mean_yx)
    else:
        q = y - c * (xc @ spec.alpha0)
        gamma = (xc * (q**2)[:, None]).T @ xc / mc_samples
    sigma_inv = np.linalg.inv(sigma)
    proj = _projector(spec.alpha0)
    cov = proj @ sigma_inv @ gamma @ sigma_inv @ proj / c**2
    return CovarianceTarget(covariance=cov, constant=c)
