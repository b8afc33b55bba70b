"""Truncated Fock-space reference calculations.

This is the slow, independent route used to validate the analytic layer:
displacement matrices from the associated-Laguerre closed form, thermal
occupations, literal operator products in a truncated number basis, and the
one-dimensional emission spectrum built from those matrix elements.

Nothing here may import from :mod:`heraldkick.phase_space`. Agreement between
the two routes is asserted in the test suite; it is not an implementation
shortcut, so keep the routes independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln


class ConvergenceError(RuntimeError):
    """A truncation or quadrature check failed; results would be untrustworthy."""


def default_cutoff(nbar: float, max_abs_beta: float) -> int:
    """Heuristic Fock cutoff for thermal states displaced by up to ``max_abs_beta``."""
    return int(np.ceil((nbar + 1.0) * 8.0 + 10.0 * abs(max_abs_beta) ** 2 + 10.0))


@dataclass(frozen=True)
class FockMatrix:
    """A dense operator on the truncated number basis ``{|0>, ..., |cutoff-1>}``."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError("FockMatrix data must be a square matrix with cutoff >= 1")
        object.__setattr__(self, "data", arr)

    @property
    def cutoff(self) -> int:
        return self.data.shape[0]

    def unitarity_defect(self, inner: int | None = None) -> float:
        """Max deviation of ``U^dag U`` from identity on the inner block.

        Truncation always spoils unitarity near the top of the basis, so the
        defect is measured on indices below ``inner`` (default ``cutoff // 2``).
        """
        if inner is None:
            inner = self.cutoff // 2
        g = self.data.conj().T @ self.data
        block = g[:inner, :inner] - np.eye(inner)
        return float(np.max(np.abs(block))) if inner else 0.0


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, FockMatrix):
        return op.data
    return np.asarray(op, dtype=complex)


def certified_block(beta: complex, cutoff: int) -> int:
    """Size of the block on which a truncated D(beta) is trusted to be unitary.

    Truncation leaks amplitude into the discarded levels; the leak at level m
    scales like |beta|^(2(cutoff-m)), so a margin growing with |beta| sqrt(cutoff)
    (floored at 8 levels so small-beta leakage has decayed too) bounds the
    defect below 1e-8.
    """
    margin = max(int(np.ceil(5.0 * abs(beta) * np.sqrt(cutoff))), 8)
    return cutoff - margin


def displacement_matrix(beta: complex, cutoff: int, check: bool = True) -> FockMatrix:
    """Matrix elements ``<m|D(beta)|n>`` from the associated-Laguerre closed form.

    For m >= n:  sqrt(n!/m!) beta^(m-n) e^(-|beta|^2/2) L_n^(m-n)(|beta|^2),
    and the m < n elements follow from D(beta)^dag = D(-beta). Magnitudes are
    assembled in log space so large cutoffs do not overflow the factorials.

    With ``check`` on, a cutoff too small to keep the certified inner block
    unitary to 1e-8, or below the support of the displacement itself, raises
    :class:`ConvergenceError`.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    beta = complex(beta)
    if check and cutoff < abs(beta) ** 2 + 5.0 * abs(beta) + 8.0:
        # D(beta)|0> is Poissonian with mean |beta|^2; below mean + 5 sigma the
        # matrix cannot hold the operator's own support.
        raise ConvergenceError(
            f"displacement cutoff {cutoff} cannot represent |beta|={abs(beta):.3g}"
        )
    n = np.arange(cutoff)
    m_idx, n_idx = np.meshgrid(n, n, indexing="ij")
    lo = np.minimum(m_idx, n_idx)
    hi = np.maximum(m_idx, n_idx)
    d = hi - lo
    x = abs(beta) ** 2

    lag = eval_genlaguerre(lo, d, x)
    log_mag = 0.5 * (gammaln(lo + 1.0) - gammaln(hi + 1.0)) - 0.5 * x
    if beta == 0.0:
        power = np.where(d == 0, 1.0, 0.0).astype(complex)
    else:
        log_mag = log_mag + d * np.log(abs(beta))
        # beta^(m-n) above the diagonal, (-conj(beta))^(n-m) below it.
        ang = np.where(m_idx >= n_idx, np.angle(beta), np.angle(-np.conj(beta)))
        power = np.exp(1j * d * ang)
    out = FockMatrix(np.exp(log_mag) * power * lag)
    if check:
        inner = certified_block(beta, cutoff)
        if inner >= 1 and out.unitarity_defect(inner) > 1e-8:
            raise ConvergenceError(
                f"displacement cutoff {cutoff} too small for |beta|={abs(beta):.3g}: "
                f"unitarity defect on the certified block exceeds 1e-8"
            )
    return out


def displacement_matrix_expm(beta: complex, cutoff: int) -> FockMatrix:
    """Same operator via ``expm(beta a^dag - beta* a)``; test-only second route.

    The generator is exponentiated on a padded space and truncated afterwards,
    so boundary artifacts of the truncated ladder stay out of the result.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    pad = int(np.ceil(6.0 * (abs(beta) + 1.0) * np.sqrt(cutoff))) + 8
    dim = cutoff + pad
    n = np.arange(1, dim)
    a = np.zeros((dim, dim), dtype=complex)
    a[n - 1, n] = np.sqrt(n)
    gen = beta * a.conj().T - np.conj(beta) * a
    return FockMatrix(expm(gen)[:cutoff, :cutoff])


def thermal_diagonal(nbar: float, cutoff: int) -> np.ndarray:
    """Occupations of a thermal state, renormalized on the truncated basis."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if nbar == 0.0:
        p = np.zeros(cutoff)
        p[0] = 1.0
        return p
    # p_n = (nbar/(nbar+1))^n / (nbar+1), evaluated in log space.
    log_q = np.log(nbar) - np.log1p(nbar)
    p = np.exp(np.arange(cutoff) * log_q)
    return p / p.sum()


def thermal_density(nbar: float, cutoff: int) -> FockMatrix:
    return FockMatrix(np.diag(thermal_diagonal(nbar, cutoff)))


def trace_product(ops, rho) -> complex:
    """``tr(ops[0] @ ops[1] @ ... @ rho)`` on a common truncated basis."""
    rho_m = _as_matrix(rho)
    mats = [_as_matrix(op) for op in ops]
    dim = rho_m.shape[0]
    for m in mats:
        if m.shape[0] != dim:
            raise ValueError("all operators must share the density matrix cutoff")
    if not mats:
        return complex(np.trace(rho_m))
    prod = mats[0]
    for m in mats[1:]:
        prod = prod @ m
    return complex(np.einsum("ij,ji->", prod, rho_m))


def _initial_density(initial, cutoff: int | None):
    """Normalize the accepted initial-state forms to (density matrix, cutoff)."""
    if np.isscalar(initial) and not isinstance(initial, (np.ndarray,)):
        nbar = float(initial)
        n = cutoff if cutoff is not None else default_cutoff(nbar, 0.0)
        return thermal_density(nbar, n).data, n
    dense = _as_matrix(initial)
    if cutoff is None or cutoff <= dense.shape[0]:
        return dense, dense.shape[0]
    padded = np.zeros((cutoff, cutoff), dtype=complex)
    padded[: dense.shape[0], : dense.shape[0]] = dense
    return padded, cutoff


@dataclass(frozen=True)
class SpectrumResult:
    """Emission spectral density on a detuning grid (detuning in decay-rate units)."""

    detunings: np.ndarray
    density: np.ndarray
    boundary_population: float
    cutoff: int

    @property
    def converged(self) -> bool:
        """False when the top Fock level carries visible weight (> 1e-6)."""
        return self.boundary_population <= 1e-6


def emission_spectrum_1d(
    eta: float,
    mu_over_gamma: float,
    initial,
    detunings,
    cutoff: int | None = None,
) -> SpectrumResult:
    """Spontaneous-emission spectrum of a single trapped mode in one dimension.

    The emitted-photon amplitude at detuning ``delta`` (units of the decay
    rate) for a motional transition ``l -> n`` carries a Lorentzian resonance
    ``1 / (1/2 + i(mu (l - n) - delta))`` weighted by the recoil matrix element
    ``<n|D(-i eta)|l>``. The returned density sums these amplitudes coherently
    over ``l`` for every spectral component of the initial motional state, then
    incoherently over final states ``n``, and is normalized to unit integral on
    the supplied grid.

    ``initial`` may be a mean occupation (thermal shorthand), a FockMatrix, or
    a plain density matrix.
    """
    mu = float(mu_over_gamma)
    if mu <= 0:
        raise ValueError("mu_over_gamma must be > 0")
    delta = np.asarray(detunings, dtype=float)
    if delta.ndim != 1 or delta.size < 2:
        raise ValueError("detunings must be a 1-D grid with at least two points")

    rho0, dim0 = _initial_density(initial, None)
    if cutoff is None:
        # Headroom for recoil spreading on top of the initial support.
        cutoff = dim0 + int(np.ceil(10.0 * eta * eta + 10.0))
    rho, n_max = _initial_density(rho0, cutoff)

    disp = displacement_matrix(-1j * eta, n_max).data
    evals, evecs = np.linalg.eigh(rho)
    keep = evals > 1e-14 * max(evals.max(), 1.0)

    offsets = np.arange(-(n_max - 1), n_max)
    resonance = 1.0 / (0.5 + 1j * (mu * offsets[:, None] - delta[None, :]))

    density = np.zeros_like(delta)
    boundary = 0.0
    for p_m, zeta in zip(evals[keep], evecs[:, keep].T):
        weighted = disp * zeta[None, :]  # [n, l]
        amp = np.zeros((n_max, delta.size), dtype=complex)
        for k_i, k in enumerate(offsets):
            diag = np.diagonal(weighted, offset=k)  # entries with l - n = k
            rows = np.arange(diag.size) + max(0, -k)
            amp[rows, :] += diag[:, None] * resonance[k_i][None, :]
        density += p_m * np.sum(np.abs(amp) ** 2, axis=0)
        boundary += p_m * float(np.sum(np.abs(weighted[-1, :])) ** 2)

    norm = np.trapezoid(density, delta)
    if norm <= 0:
        raise ConvergenceError("emission spectrum carries no weight on the given grid")
    return SpectrumResult(
        detunings=delta,
        density=density / norm,
        boundary_population=float(boundary),
        cutoff=n_max,
    )
