"""Scalar figures of merit and power-law tail fits.

Qubit fidelity uses the determinant closed form rather than matrix
square roots, which avoids eigensolver noise for near-pure states; the
general definition survives only in the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .states import DensityMatrix, QubitState

__all__ = [
    "FitResult",
    "linear_entropy",
    "hartree_infidelity",
    "qubit_fidelity",
    "convergence_infidelity",
    "power_law_tail_fit",
]


def linear_entropy(rho: DensityMatrix) -> float:
    """1 - Tr(rho^2) of a normalized state; zero iff pure, 1/2 for a maximally mixed qubit."""
    rho.require_normalized()
    m = rho.entries
    return 1.0 - float(np.trace(m @ m).real)


def hartree_infidelity(rho: DensityMatrix, phi: QubitState) -> float:
    """1 - <phi|rho|phi>: mismatch between a marginal and a mean-field state."""
    rho.require_normalized()
    v = phi.as_array()
    overlap = complex(v.conj() @ rho.entries @ v)
    if abs(overlap.imag) > 1e-12:
        raise ValueError(f"overlap has a non-negligible imaginary part: {overlap.imag}")
    return 1.0 - overlap.real


def _require_qubit_state(rho: DensityMatrix, name: str) -> None:
    if rho.k != 1:
        raise ValueError(f"{name} must be a single-qubit state")
    rho.require_normalized()
    min_eig = rho.min_eigenvalue()
    if min_eig < -1e-10:
        raise ValueError(f"{name} has a negative eigenvalue: {min_eig}")


def qubit_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Fidelity of two qubit states via the determinant closed form.

    F = Tr(rho sigma) + 2 sqrt(det rho det sigma), equal to the usual
    (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in dimension two.  Symmetric,
    contained in [0, 1], and exactly |<psi|chi>|^2 for pure inputs.
    """
    _require_qubit_state(rho, "rho")
    _require_qubit_state(sigma, "sigma")
    cross = float(np.trace(rho.entries @ sigma.entries).real)
    det_r = max(float(np.linalg.det(rho.entries).real), 0.0)
    det_s = max(float(np.linalg.det(sigma.entries).real), 0.0)
    return cross + 2.0 * math.sqrt(det_r * det_s)


def convergence_infidelity(rho_n: DensityMatrix, rho_limit: DensityMatrix) -> float:
    """1 - F between a finite-N marginal and its infinite-N limit."""
    return 1.0 - qubit_fidelity(rho_n, rho_limit)


@dataclass(frozen=True)
class FitResult:
    """Least-squares power law a * x^b fitted to the tail of a curve."""

    amplitude_a: float
    exponent_b: float
    residual: float
    n_points_used: int
    exponent_stderr: float = float("nan")


def power_law_tail_fit(xs, ys, tail_fraction: float = 0.2) -> FitResult:
    """Fit a * x^b to the last fraction of a curve by least squares in log-log.

    Parameters
    ----------
    xs, ys : sequences of float
        Sample locations (strictly increasing, positive) and values
        (positive on the fitted tail).
    tail_fraction : float
        Fraction of points, from the right, entering the fit; the number
        used is ceil(tail_fraction * len(xs)) and must be at least 3.

    Returns
    -------
    FitResult
        Amplitude, exponent, RMS residual in log-log space, the number of
        points used, and the standard error of the exponent (diagnostic).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValueError("xs and ys must be one-dimensional and equally long")
    if np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be positive and strictly increasing")
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")

    n_tail = int(math.ceil(tail_fraction * len(xs)))
    if n_tail < 3:
        raise ValueError(
            f"insufficient data: tail has {n_tail} points, need at least 3"
        )
    tail_x = xs[-n_tail:]
    tail_y = ys[-n_tail:]
    bad = np.nonzero(tail_y <= 0)[0]
    if bad.size:
        index = len(xs) - n_tail + int(bad[0])
        raise ValueError(
            f"cannot fit a power law: y[{index}] = {ys[index]} is not positive"
        )

    lx = np.log(tail_x)
    ly = np.log(tail_y)
    design = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = ly - design @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    if n_tail > 2:
        sxx = float(np.sum((lx - lx.mean()) ** 2))
        var = float(np.sum(resid**2)) / (n_tail - 2)
        stderr = math.sqrt(var / sxx) if sxx > 0 else float("nan")
    else:
        stderr = float("nan")
    return FitResult(
        amplitude_a=math.exp(intercept),
        exponent_b=slope,
        residual=rms,
        n_points_used=n_tail,
        exponent_stderr=stderr,
    )
