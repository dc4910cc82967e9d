"""Laplace noise, privacy-budget accounting, and the publication
mechanisms: per-entry noise (basic), wavelet-domain noise (privelet),
and the hybrid that skips the transform on a chosen attribute subset
(privelet+).

Privacy accounting: a transform whose coefficients change, per unit
change of one matrix entry, by a weighted total of at most rho (weights
W, noise magnitude lambda/W per coefficient) yields (2*rho/lambda)-
differential privacy; so lambda = 2*rho/epsilon.  The per-attribute
sensitivity factor P multiplies across transformed dimensions; the
untransformed identity has factor 1, which makes the basic mechanism
the empty-product case with epsilon = 2/lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import multidim
from .data import FrequencyMatrix
from .schema import ORDINAL, AttributeSchema, Schema, ValidationError

METHOD_BASIC = "basic"
METHOD_PRIVELET = "privelet"
METHOD_PRIVELET_PLUS = "privelet+"
METHODS = (METHOD_BASIC, METHOD_PRIVELET, METHOD_PRIVELET_PLUS)


def laplace_from_uniform(u: np.ndarray, magnitude) -> np.ndarray:
    """Map uniform(0,1) draws to zero-mean Laplace noise by the inverse
    CDF: x = -magnitude * sign(u - 1/2) * ln(1 - 2|u - 1/2|).

    The map is linear in `magnitude`, so scaling the magnitude scales an
    identical draw stream point-wise.
    """
    d = np.asarray(u, dtype=np.float64) - 0.5
    t = np.abs(d)
    t *= -2.0
    t += 1.0
    np.maximum(t, np.finfo(np.float64).tiny, out=t)  # u == 0 exactly
    np.log(t, out=t)
    t *= np.sign(d, out=d)
    t *= magnitude
    t *= -1.0
    return t


def laplace_sample(magnitude: float, rng: np.random.Generator, size=None):
    """Draw Laplace noise with the given magnitude (density
    e^(-|x|/magnitude) / (2*magnitude); variance 2*magnitude**2)."""
    if magnitude <= 0:
        raise ValueError(f"noise magnitude must be positive, got {magnitude}")
    u = rng.random(size)
    out = laplace_from_uniform(u, magnitude)
    return float(out) if size is None else out


def sensitivity_factor(attr: AttributeSchema) -> float:
    """Per-attribute generalized-sensitivity factor P: 1 + log2 of the
    padded domain for ordinal, hierarchy height for nominal."""
    if attr.kind == ORDINAL:
        return 1.0 + math.log2(attr.padded_size)
    return float(attr.hierarchy.height)


def variance_factor(attr: AttributeSchema) -> float:
    """Per-attribute query-variance factor H: (2 + log2 padded)/2 for
    ordinal, 4 for nominal."""
    if attr.kind == ORDINAL:
        return (2.0 + math.log2(attr.padded_size)) / 2.0
    return 4.0


def epsilon_for(lam: float, schema: Schema, split: tuple[str, ...] = ()) -> float:
    """Privacy level of noise magnitude lam with the dimensions in
    `split` untransformed: epsilon = (2/lam) * prod P(A) over the
    transformed attributes (empty product = 1, the basic case)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    rho = 1.0
    for attr in schema:
        if attr.name not in split:
            rho *= sensitivity_factor(attr)
    return 2.0 * rho / lam


@dataclass(frozen=True)
class PrivacyBudget:
    """(epsilon, lambda, rho) with lambda = 2*rho/epsilon."""

    epsilon: float
    lam: float
    rho: float

    def __post_init__(self):
        if self.epsilon <= 0 or self.lam <= 0 or self.rho <= 0:
            raise ValueError("epsilon, lambda and rho must all be positive")
        if abs(self.lam - 2.0 * self.rho / self.epsilon) > 1e-12 * self.lam:
            raise ValueError("inconsistent budget: lambda must equal 2*rho/epsilon")


def budget_for(schema: Schema, split: tuple[str, ...], epsilon: float) -> PrivacyBudget:
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    rho = 1.0
    for attr in schema:
        if attr.name not in split:
            rho *= sensitivity_factor(attr)
    return PrivacyBudget(epsilon=epsilon, lam=2.0 * rho / epsilon, rho=rho)


def variance_bound(schema: Schema, split: tuple[str, ...], epsilon: float) -> float:
    """Worst-case noise variance of a range-count answer at the given
    privacy level: 8/eps^2 times the storage size of every split
    attribute times P(A)^2 * H(A) for every transformed one.

    With everything split this is the basic mechanism's m * 8/eps^2;
    with nothing split it is 2*(2*prod P/eps)^2 * prod H.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    out = 8.0 / (epsilon * epsilon)
    for attr in schema:
        if attr.name in split:
            out *= attr.storage_size
        else:
            p = sensitivity_factor(attr)
            out *= p * p * variance_factor(attr)
    return out


def prefers_identity(attr: AttributeSchema) -> bool:
    """Advisory rule for putting an attribute in the split set: its
    domain is small enough that per-entry noise beats the transform,
    |A| <= P(A)^2 * H(A)."""
    p = sensitivity_factor(attr)
    return attr.domain_size <= p * p * variance_factor(attr)


def suggest_split(schema: Schema) -> tuple[str, ...]:
    return tuple(a.name for a in schema if prefers_identity(a))


@dataclass(frozen=True)
class PublishResult:
    matrix: FrequencyMatrix
    method: str
    budget: PrivacyBudget
    split: tuple[str, ...]
    seed: int
    coefficients: "multidim.CoefficientMatrix | None" = None

    @property
    def metadata(self) -> dict:
        return {
            "method": self.method,
            "epsilon": self.budget.epsilon,
            "lambda": self.budget.lam,
            "split": list(self.split),
            "seed": self.seed,
            "schema_hash": self.matrix.schema.content_hash(),
        }


def _noisy_coefficients(
    matrix: FrequencyMatrix,
    lam: float,
    split: tuple[str, ...],
    seed: int,
    noise: bool = True,
) -> multidim.CoefficientMatrix:
    """Shared engine front half: transform the non-split dimensions and
    add Laplace noise with magnitude lam/weight to every coefficient.

    One seeded generator per call; coefficients consume the draws in
    row-major order over the final coefficient layout, so the published
    output does not depend on any processing order.  With `split` equal
    to all attributes nothing is transformed, every weight is 1, and the
    result is exactly the basic mechanism's per-entry noise.
    """
    if lam <= 0:
        raise ValidationError(f"noise magnitude must be positive, got {lam}")
    coeffs = multidim.forward(matrix, split=split)
    values = coeffs.values
    if noise:
        rng = np.random.default_rng(int(seed))
        u = rng.random(values.shape)
        values = values + laplace_from_uniform(u, lam / coeffs.weights)
    return multidim.CoefficientMatrix(
        schema=coeffs.schema,
        values=values,
        weights=coeffs.weights,
        split=coeffs.split,
        tuple_count=coeffs.tuple_count,
    )


def _noisy_publish(
    matrix: FrequencyMatrix,
    lam: float,
    split: tuple[str, ...],
    seed: int,
    noise: bool = True,
) -> FrequencyMatrix:
    return multidim.inverse(_noisy_coefficients(matrix, lam, split, seed, noise))


def basic_publish(matrix: FrequencyMatrix, lam: float, seed: int) -> FrequencyMatrix:
    """Independent Laplace(lam) noise on every entry: (2/lam)-DP."""
    return _noisy_publish(matrix, lam, split=matrix.schema.names, seed=seed)


def privelet_plus_publish(
    matrix: FrequencyMatrix,
    lam: float,
    split: tuple[str, ...],
    seed: int,
    noise: bool = True,
) -> FrequencyMatrix:
    """Split the matrix along the `split` dimensions and run the wavelet
    mechanism on each sub-matrix; (2 * prod P / lam)-DP over the
    transformed attributes.  `noise=False` is a test hook that bypasses
    the noise step for round-trip verification."""
    split = tuple(split)
    for name in split:
        matrix.schema.attribute(name)
    return _noisy_publish(matrix, lam, split=split, seed=seed, noise=noise)


def privelet_publish(matrix: FrequencyMatrix, lam: float, seed: int) -> FrequencyMatrix:
    """privelet+ with an empty split: every dimension is transformed."""
    return privelet_plus_publish(matrix, lam, split=(), seed=seed)


def publish(
    matrix: FrequencyMatrix,
    method: str,
    epsilon: float,
    split: tuple[str, ...] = (),
    seed: int = 0,
    keep_coefficients: bool = False,
) -> PublishResult:
    """Epsilon-level entry point: derives lambda = 2*rho/epsilon with
    rho the product of P over the transformed attributes."""
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == METHOD_BASIC:
        split = matrix.schema.names
    elif method == METHOD_PRIVELET:
        split = ()
    else:
        split = tuple(split)
        for name in split:
            matrix.schema.attribute(name)
    budget = budget_for(matrix.schema, split, epsilon)
    coeffs = _noisy_coefficients(matrix, budget.lam, split=split, seed=seed)
    return PublishResult(
        matrix=multidim.inverse(coeffs),
        method=method,
        budget=budget,
        split=split,
        seed=int(seed),
        coefficients=coeffs if keep_coefficients else None,
    )
