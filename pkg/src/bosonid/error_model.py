"""Dephasing from a shot-to-shot Gaussian rescaling of the Hamiltonian ``H(s) = s H0``.

Frequencies are in whatever unit the caller uses for ``omegas`` and ``W``;
``t`` must be in the reciprocal unit. Pass angular frequencies to get the
phase ``omega t`` directly.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InputError


def _damping(omegas: np.ndarray, sigma: float, t: float) -> np.ndarray:
    diff = omegas[:, None] - omegas[None, :]
    return np.exp(-((sigma * diff * t) ** 2) / 2)


def _check(sigma: float, t: float) -> None:
    if sigma < 0 or t < 0:
        raise InputError("sigma and t must be nonnegative")


def dephase(rho: np.ndarray, omegas: Sequence[float], sigma: float, t: float) -> np.ndarray:
    """Average over ``s ~ N(1, sigma^2)`` of the state evolved with ``s H0`` instead of ``H0``.

    ``rho`` is the nominally evolved state in the energy basis, so only the
    fluctuation ``s - 1`` acts and the result is a pure damping of coherences.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    w = np.asarray(omegas, dtype=np.float64)
    _check(sigma, t)
    if rho.shape != (w.size, w.size):
        raise InputError(f"state shape {rho.shape} does not match {w.size} frequencies")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise InputError("state is not Hermitian")
    return rho * _damping(w, sigma, t)


def fidelity_after_dephasing(rho0: np.ndarray, omegas: Sequence[float], sigma: float, t: float) -> float:
    """``<psi| rho' |psi>`` for a pure target ``rho0 = |psi><psi|``."""
    rho0 = np.asarray(rho0, dtype=np.complex128)
    purity = np.trace(rho0 @ rho0).real
    if abs(purity - 1) > 1e-8:
        raise InputError(f"target state has purity {purity:.10f}, expected 1")
    w = np.asarray(omegas, dtype=np.float64)
    _check(sigma, t)
    if rho0.shape != (w.size, w.size):
        raise InputError(f"state shape {rho0.shape} does not match {w.size} frequencies")
    return float(np.sum(np.abs(rho0) ** 2 * _damping(w, sigma, t)))


def fidelity_lower_bound(n: int, sigma: float, bandwidth: float, t: float) -> float:
    """``exp(-(n sigma W t)^2 / 2)``; the many-body bandwidth is at most ``n W``."""
    if n < 0 or bandwidth < 0:
        raise InputError("particle number and bandwidth must be nonnegative")
    _check(sigma, t)
    return float(np.exp(-((n * sigma * bandwidth * t) ** 2) / 2))
