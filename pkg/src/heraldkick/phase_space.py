"""Multi-mode displacement algebra and thermal expectation values.

Displacement operators on independent harmonic modes are closed under
multiplication up to a scalar phase,

    D(a) D(b) = exp((a b* - a* b) / 2) D(a + b)        (per mode),

and a thermal state gives every trace in closed form,

    tr(D(b) rho_th) = exp(-|b|^2 (nbar + 1/2)).

Operators are therefore carried around as per-mode amplitudes plus one
accumulated scalar phase, never as truncated matrices. Frequencies are
quoted as ratios to the emitter decay rate and times in units of the
inverse decay rate throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-12
ORTHO_TOL = 1e-10


def _as_unit_vector(v, tol: float, what: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{what} must be a real 3-vector")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{what} must be a unit vector (|v| - 1 = {norm - 1.0:.3e})")
    return arr


@dataclass(frozen=True)
class MotionalMode:
    """One harmonic mode of the trapped emitter.

    frequency_ratio : trap frequency over the emitter decay rate, > 0
    lamb_dicke      : Lamb-Dicke parameter of the emitted light for this mode
    axis            : unit oscillation axis in the lab frame
    """

    frequency_ratio: float
    lamb_dicke: float
    axis: np.ndarray

    def __post_init__(self):
        if not self.frequency_ratio > 0:
            raise ValueError("frequency_ratio must be > 0")
        if self.lamb_dicke < 0:
            raise ValueError("lamb_dicke must be >= 0")
        object.__setattr__(self, "axis", _as_unit_vector(self.axis, UNIT_TOL, "mode axis"))


@dataclass(frozen=True)
class TrapModel:
    """A set of motional modes with pairwise orthogonal axes."""

    modes: tuple[MotionalMode, ...]

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise ValueError("a trap needs at least one motional mode")
        axes = np.array([m.axis for m in modes])
        gram = axes @ axes.T - np.eye(len(modes))
        if np.max(np.abs(gram)) > ORTHO_TOL:
            raise ValueError("mode axes must be pairwise orthogonal")
        object.__setattr__(self, "modes", modes)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def axes(self) -> np.ndarray:
        return np.array([m.axis for m in self.modes])

    @property
    def frequency_ratios(self) -> np.ndarray:
        return np.array([m.frequency_ratio for m in self.modes])

    @property
    def lamb_dicke(self) -> np.ndarray:
        return np.array([m.lamb_dicke for m in self.modes])


def isotropic_trap(frequency_ratio: float, lamb_dicke: float) -> TrapModel:
    """Three degenerate modes along the lab axes; the common symmetric idealization."""
    eye = np.eye(3)
    return TrapModel(tuple(MotionalMode(frequency_ratio, lamb_dicke, eye[i]) for i in range(3)))


@dataclass(frozen=True)
class ThermalState:
    """Independent thermal occupations, one per trap mode."""

    nbar: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.nbar, dtype=float))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("nbar must be a 1-D sequence with one entry per mode")
        if np.any(arr < 0):
            raise ValueError("nbar entries must be >= 0")
        object.__setattr__(self, "nbar", arr)

    @property
    def n_modes(self) -> int:
        return self.nbar.size


@dataclass(frozen=True)
class MultiDisplacement:
    """A product of per-mode displacements times a scalar phase factor."""

    betas: np.ndarray
    global_phase: complex = 1.0 + 0.0j

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.betas, dtype=complex))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("betas must be a 1-D sequence with one entry per mode")
        phase = complex(self.global_phase)
        if abs(abs(phase) - 1.0) > UNIT_TOL:
            raise ValueError("global_phase must have unit modulus")
        object.__setattr__(self, "betas", arr)
        object.__setattr__(self, "global_phase", phase)

    @property
    def n_modes(self) -> int:
        return self.betas.size

    def adjoint(self) -> "MultiDisplacement":
        return MultiDisplacement(-self.betas, np.conj(self.global_phase))


def identity_displacement(n_modes: int) -> MultiDisplacement:
    return MultiDisplacement(np.zeros(n_modes, dtype=complex))


def _check_modes(*counts: int):
    if len(set(counts)) != 1:
        raise ValueError(f"mode-count mismatch: {counts}")


def compose(a: MultiDisplacement, b: MultiDisplacement) -> MultiDisplacement:
    """Operator product ``a b`` as a single displacement with accumulated phase."""
    _check_modes(a.n_modes, b.n_modes)
    cross = np.sum(a.betas * np.conj(b.betas) - np.conj(a.betas) * b.betas) / 2.0
    phase = a.global_phase * b.global_phase * np.exp(cross)
    # cross is purely imaginary, so unit modulus survives up to rounding;
    # renormalize to keep long composition chains within tolerance.
    phase = phase / abs(phase)
    return MultiDisplacement(a.betas + b.betas, phase)


def compose_all(*ops: MultiDisplacement) -> MultiDisplacement:
    out = ops[0]
    for op in ops[1:]:
        out = compose(out, op)
    return out


def thermal_char(d: MultiDisplacement, rho: ThermalState) -> complex:
    """``tr(D rho)`` for a thermal state, including the accumulated phase of D."""
    _check_modes(d.n_modes, rho.n_modes)
    exponent = -np.sum(np.abs(d.betas) ** 2 * (rho.nbar + 0.5))
    return complex(d.global_phase * np.exp(exponent))


def displaced_thermal_char(
    d: MultiDisplacement, frame: MultiDisplacement, rho: ThermalState
) -> complex:
    """``tr(D L rho L^dag)`` for a displacement frame L applied to a thermal state.

    Conjugating by the frame only imprints a phase:
    ``tr(D(g) D(l) rho D(l)^dag) = exp(g l* - g* l) tr(D(g) rho)``.
    """
    _check_modes(d.n_modes, frame.n_modes, rho.n_modes)
    cross = np.sum(d.betas * np.conj(frame.betas) - np.conj(d.betas) * frame.betas)
    return complex(np.exp(cross)) * thermal_char(d, rho)
