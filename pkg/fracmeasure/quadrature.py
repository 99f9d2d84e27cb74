"""Bessel-root diagonalization of (−Δ_h)^{-s} and the practical solver.

The rule replaces λ^{-s} by Σ_k ψ_k / (λ + Υ_k) with Υ_k = (η_k / Y)² built
from the positive roots η_k of J_{-s}; applied to the discrete Laplacian it
turns one fractional solve into K independent shifted Poisson solves.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from scipy import special

from .errors import DomainError, NoConvergence, RootNotBracketed
from .fem import FEFunction
from .mesh import Mesh
from .numerics import SparseSymMatrix, conjugate_gradient, shifted_operator

logger = logging.getLogger(__name__)

ROOT_WIDTH = 1e-13
INNER_TOL = 1e-10
_SMALLEST_BRACKET = 1e-12
_BISECTION_STEPS = 200


def _check_order(nu: float) -> None:
    if not -1.0 < nu < 1.0:
        raise DomainError(f"order nu={nu} outside (-1, 1)")


def bessel_j(nu: float, x):
    """J_ν(x) for ν ∈ (−1, 1) and x > 0 (scalar or array)."""

    _check_order(nu)
    values = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values <= 0.0):
        raise DomainError("J_nu is evaluated only at finite x > 0")
    result = special.jv(nu, values)
    return float(result) if result.ndim == 0 else result


def mcmahon_guess(nu: float, k: np.ndarray) -> np.ndarray:
    """Leading McMahon term (k + ν/2 − ¼)π for the k-th positive root of J_ν."""

    return (np.asarray(k, dtype=float) + 0.5 * nu - 0.25) * math.pi


def bessel_roots(nu: float, K: int) -> np.ndarray:
    """First K positive roots of J_ν, strictly increasing.

    Each root is bracketed by the McMahon guess ± π/2, bisected to width
    ``ROOT_WIDTH`` (or a few ulps for large roots) and polished by one Newton
    step that is kept only if it stays inside the final bracket.
    """

    _check_order(nu)
    if K < 1:
        raise ValueError("K must be at least 1")
    k = np.arange(1, K + 1)
    guess = mcmahon_guess(nu, k)
    lo = np.maximum(guess - 0.5 * math.pi, _SMALLEST_BRACKET)
    hi = guess + 0.5 * math.pi
    f_lo = special.jv(nu, lo)
    f_hi = special.jv(nu, hi)
    missing = np.flatnonzero(np.sign(f_lo) * np.sign(f_hi) > 0)
    if missing.size:
        raise RootNotBracketed(f"no sign change for root {int(k[missing[0]])} of J_{nu:g}")

    for _ in range(_BISECTION_STEPS):
        width = hi - lo
        if np.all(width <= np.maximum(ROOT_WIDTH, 4.0 * np.spacing(hi))):
            break
        mid = 0.5 * (lo + hi)
        f_mid = special.jv(nu, mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)

    eta = 0.5 * (lo + hi)
    slope = special.jvp(nu, eta)
    polished = eta - special.jv(nu, eta) / slope
    inside = np.isfinite(polished) & (polished >= lo) & (polished <= hi)
    eta = np.where(inside, polished, eta)
    if np.any(np.diff(eta) <= 0.0):
        raise RootNotBracketed(f"roots of J_{nu:g} are not strictly increasing")
    return eta


@dataclass(frozen=True, eq=False)
class DiagonalizationRule:
    """Nodes Υ_k and weights ψ_k of the rational approximation of λ^{-s}."""

    s: float
    Y: float
    K: int
    eta: np.ndarray
    upsilon: np.ndarray
    psi: np.ndarray

    def __post_init__(self) -> None:
        for name in ("eta", "upsilon", "psi"):
            array = getattr(self, name)
            if array.shape != (self.K,):
                raise ValueError(f"{name} must have length K={self.K}")
            array.setflags(write=False)

    def approximate(self, lam) -> np.ndarray:
        """Σ_k ψ_k / (λ + Υ_k), summed in ascending k."""

        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.empty_like(lam)
        for start in range(0, lam.size, 256):
            block = lam[start : start + 256, np.newaxis]
            out[start : start + 256] = np.sum(self.psi / (block + self.upsilon), axis=1)
        return out

    def truncated(self, K: int) -> "DiagonalizationRule":
        """The same rule restricted to its first K terms."""

        if not 1 <= K <= self.K:
            raise ValueError(f"K must lie in [1, {self.K}]")
        return DiagonalizationRule(
            s=self.s,
            Y=self.Y,
            K=K,
            eta=self.eta[:K].copy(),
            upsilon=self.upsilon[:K].copy(),
            psi=self.psi[:K].copy(),
        )


def build_rule(s: float, Y: float, K: int) -> DiagonalizationRule:
    """ψ_k = 4 sin(πs) / (Υ_k^s Y² π J_{1−s}(η_k)²) with η_k the roots of J_{−s}."""

    if not 0.0 < s < 1.0:
        raise DomainError(f"s={s} outside (0, 1)")
    if Y <= 0.0:
        raise ValueError("Y must be positive")
    eta = bessel_roots(-s, K)
    upsilon = (eta / Y) ** 2
    companion = bessel_j(1.0 - s, eta)
    psi = 4.0 * math.sin(math.pi * s) / (upsilon**s * Y**2 * math.pi * companion**2)
    if not (np.all(np.isfinite(psi)) and np.all(psi > 0.0)):
        raise DomainError("diagonalization weights are not finite and positive")
    logger.info("built rule s=%g Y=%.6g K=%d (Υ_K=%.4g)", s, Y, K, upsilon[-1])
    return DiagonalizationRule(s=s, Y=Y, K=K, eta=eta, upsilon=upsilon, psi=psi)


def scalar_error(rule: DiagonalizationRule, lam):
    """|λ^{-s} − Σ_k ψ_k/(λ + Υ_k)| (scalar or array)."""

    values = np.asarray(lam, dtype=float)
    if np.any(values <= 0.0):
        raise ValueError("lambda must be positive")
    error = np.abs(np.atleast_1d(values) ** (-rule.s) - rule.approximate(values))
    return float(error[0]) if values.ndim == 0 else error.reshape(values.shape)


def spectrum_error(rule: DiagonalizationRule, lower: float, upper: float, *, points: int = 200) -> float:
    """Largest scalar_error over a logarithmic grid of [lower, upper]."""

    grid = np.geomspace(lower, upper, points)
    return float(np.max(scalar_error(rule, grid)))


def select_params(s: float, h: float, c: float = 2.0) -> Tuple[float, int]:
    """Y = c·s·|ln h| and K = ⌈Y/h⌉."""

    if not 0.0 < h < 1.0:
        raise ValueError("h must lie in (0, 1)")
    Y = c * s * abs(math.log(h))
    return Y, int(math.ceil(Y / h))


def _shifted_solve(K_mat, M_mat, upsilon: float, b: np.ndarray, tol: float, index: int) -> np.ndarray:
    try:
        return conjugate_gradient(shifted_operator(K_mat, M_mat, upsilon), b, tol=tol)
    except NoConvergence as exc:
        raise NoConvergence(
            f"shifted solve k={index} (Υ={upsilon:.6g}) did not converge",
            iterations=exc.iterations,
            residual=exc.residual,
            last_iterate=exc.last_iterate,
            shift_index=index,
        ) from exc


def _batches(count: int, size: int) -> Iterable[range]:
    for start in range(0, count, size):
        yield range(start, min(start + size, count))


def solve_practical(
    K_mat: SparseSymMatrix,
    M_mat: SparseSymMatrix,
    rule: DiagonalizationRule,
    b: np.ndarray,
    tol: float = INNER_TOL,
    *,
    mesh: Mesh,
    workers: int = 1,
) -> FEFunction:
    """u = Σ_k ψ_k U_k with (K + Υ_k M) U_k = b.

    With ``workers > 1`` the shifted systems run on a thread pool in batches;
    the weighted sum is always accumulated in ascending k, so the result does
    not depend on the worker count. ``NoConvergence`` carries the 1-based
    shift index that failed.
    """

    b = np.asarray(b, dtype=float)
    u = np.zeros_like(b)
    if not np.any(b):
        return FEFunction(mesh, u)
    logger.info("practical solve: %d shifted systems of size %d", rule.K, b.size)
    if workers <= 1:
        for k in range(rule.K):
            u += rule.psi[k] * _shifted_solve(K_mat, M_mat, rule.upsilon[k], b, tol, k + 1)
        return FEFunction(mesh, u)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for batch in _batches(rule.K, 4 * workers):
            futures = [
                pool.submit(_shifted_solve, K_mat, M_mat, rule.upsilon[k], b, tol, k + 1) for k in batch
            ]
            for k, future in zip(batch, futures):
                u += rule.psi[k] * future.result()
    return FEFunction(mesh, u)
