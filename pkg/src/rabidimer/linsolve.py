"""Regularized dense complex linear solver.

All numerical-robustness policy for the equation-of-motion solves lives
here: Tikhonov-damped LU with partial pivoting as the fast path, and a
truncated-SVD pseudo-inverse (minimum-norm solution) as the fallback for
the near-degenerate overlap matrices that coalescing configurations
produce.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SolverError

__all__ = ["SolverConfig", "SolveResult", "solve"]

# relative residual above which the LU path is abandoned and the SVD
# pseudo-inverse result is required to do better
_RESIDUAL_TOL = 1e-6
# refinement against the undamped matrix is only safe when the system is
# comfortably well conditioned; for near-degenerate systems it would undo
# the damping and re-amplify the ill-determined directions
_REFINE_COND_LIMIT = 1e6


@dataclass(frozen=True)
class SolverConfig:
    """tikhonov_eps is relative to the largest matrix entry; svd_threshold
    is the relative singular-value cutoff of the fallback pseudo-inverse."""

    tikhonov_eps: float = 1e-10
    svd_threshold: float = 1e-8
    strategy: str = "lu_with_fallback"  # or "svd_always"

    def __post_init__(self):
        if self.tikhonov_eps < 0:
            raise ValueError("tikhonov_eps >= 0")
        if not 0 <= self.svd_threshold < 1:
            raise ValueError("svd_threshold in [0, 1)")
        if self.strategy not in ("lu_with_fallback", "svd_always"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class SolveResult:
    solution: np.ndarray
    residual_norm: float
    cond_estimate: float


def _residual(matrix, rhs, x, rhs_norm):
    if rhs_norm == 0.0:
        return 0.0
    return float(np.linalg.norm(matrix @ x - rhs) / rhs_norm)


def _svd_solve(matrix, rhs, threshold):
    u, s, vh = np.linalg.svd(matrix)
    if s[0] == 0.0:
        return np.zeros_like(rhs), np.inf
    keep = s > threshold * s[0]
    s_kept = s[keep]
    x = vh[keep].conj().T @ ((u[:, keep].conj().T @ rhs) / s_kept)
    cond = float(s[0] / s_kept[-1]) if s_kept.size else np.inf
    return x, cond


def solve(matrix: np.ndarray, rhs: np.ndarray,
          config: SolverConfig = SolverConfig()) -> SolveResult:
    """Solve matrix @ x = rhs with regularization diagnostics.

    The residual is always recomputed against the *unregularized* inputs,
    |Ax - b|_2 / |b|_2 (0 when |b| = 0).
    """
    matrix = np.asarray(matrix, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    n = matrix.shape[0]
    if n < 1 or matrix.shape != (n, n) or rhs.shape != (n,):
        raise ValueError(f"shape mismatch: matrix {matrix.shape}, rhs {rhs.shape}")
    if not (np.all(np.isfinite(matrix.view(float))) and np.all(np.isfinite(rhs.view(float)))):
        raise SolverError("non-finite entries in linear system")

    rhs_norm = float(np.linalg.norm(rhs))
    scale = float(np.max(np.abs(matrix)))

    if config.strategy == "lu_with_fallback" and scale > 0.0:
        damped = matrix + (config.tikhonov_eps * scale) * np.eye(n)
        try:
            with warnings.catch_warnings(), np.errstate(all="ignore"):
                warnings.simplefilter("ignore")
                lu, piv = scipy.linalg.lu_factor(damped, check_finite=False)
                x = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
                udiag = np.abs(np.diag(lu))
                umin = float(udiag.min())
                cond = float(udiag.max() / umin) if umin > 0 else np.inf
                if cond < _REFINE_COND_LIMIT:
                    # refine against the undamped matrix so the damping
                    # shift does not limit well-conditioned solves
                    for _ in range(2):
                        r = rhs - matrix @ x
                        if rhs_norm == 0.0 or np.linalg.norm(r) <= 1e-14 * rhs_norm:
                            break
                        x = x + scipy.linalg.lu_solve((lu, piv), r, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            x = None
        if x is not None and np.all(np.isfinite(x.view(float))):
            res = _residual(matrix, rhs, x, rhs_norm)
            if res <= _RESIDUAL_TOL:
                return SolveResult(solution=x, residual_norm=res, cond_estimate=cond)

    x, cond = _svd_solve(matrix, rhs, config.svd_threshold)
    res = _residual(matrix, rhs, x, rhs_norm)
    if res > _RESIDUAL_TOL:
        raise SolverError(
            f"linear solve failed: relative residual {res:.3e} after SVD fallback "
            f"(cond estimate {cond:.3e})",
            residual_norm=res, cond_estimate=cond,
        )
    return SolveResult(solution=x, residual_norm=res, cond_estimate=cond)
