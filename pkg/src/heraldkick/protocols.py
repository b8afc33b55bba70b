"""Post-herald qubit states and fidelities for photon-mediated entanglement.

Each protocol conditions two remote emitters on detector clicks and reports
the resulting two-qubit density matrix, its closest-Bell fidelity, the
motional coherence contrast, and the herald efficiency. All protocol outputs
reduce to thermal moments of kick operators integrated over the exponential
herald-time envelope:

  single photon : Gauss-Laguerre average of first moments tr(K rho) and
                  heralding powers tr(K rho K^dag), assembled into the
                  conditional matrix including double-excitation terms;
  two photon    : double time integral over (t_H, t_V) of pair-moment
                  products, optionally restricted to |t_H - t_V| <= dt_max;
  time bin      : the two-photon machinery with early/late kicks built from
                  time-shifted excitation pulses;
  pi-sigma      : cross-channel pair moments at t = 0 for two decay channels
                  coupling into both fibre polarizations.

Zero-NA closed forms of the same quantities are provided as independent
single/double quadratures for cross-checks.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_laguerre

from .collection import (
    CollectionGeometry,
    DipoleChannel,
    GaussianLens,
    StandingWavePair,
    WeightGrid,
    ZeroNA,
    build_weight_grid,
)
from .kick import (
    CorrectionSpec,
    KickSpec,
    LaserKick,
    first_moment_fock,
    first_moment_table,
    optimize_kavg,
    pair_moment_fock,
    pair_moment_pairs,
    pair_moment_table,
)
from .phase_space import UNIT_TOL, ThermalState, TrapModel, _as_unit_vector, isotropic_trap

DEFAULT_TIME_NODES = 64
OSCILLATORY_MU = 0.5  # above this, the herald quadrature order is doubled
COARSE_TIME_NODES = 16  # correction-optimizer objective quadrature
INNER_WINDOW_NODES = 24  # per-panel quadrature across the dt acceptance band
INNER_PANEL_WIDTH = 4.0  # wide bands get split so the envelope stays resolved
QUAD_LIMIT = 400


@dataclass(frozen=True)
class HeraldWindow:
    """Accepted detection times: t <= t_max, and |t_H - t_V| <= dt_max if set."""

    t_max: float = np.inf
    dt_max: float | None = None

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        if self.dt_max is not None and not self.dt_max >= 0:
            raise ValueError("dt_max must be >= 0 when present")


@dataclass(frozen=True)
class NodeConfig:
    """One emitter node: trap, motional state, collection, and drive settings.

    excitation is the unit propagation direction of the excitation pulse
    (None for protocols idealized without a laser kick); the excitation
    probability p and interferometer link phase only enter the single-photon
    scheme.
    """

    trap: TrapModel
    motion: ThermalState
    geometry: CollectionGeometry
    channels: tuple[DipoleChannel, ...]
    excitation: np.ndarray | None = None
    excitation_probability: float = 0.0
    link_phase: float = 0.0

    def __post_init__(self):
        channels = tuple(self.channels)
        if not channels:
            raise ValueError("channels must be nonempty")
        object.__setattr__(self, "channels", channels)
        if self.motion.n_modes != self.trap.n_modes:
            raise ValueError("motional state and trap mode counts differ")
        if not 0.0 <= self.excitation_probability <= 1.0:
            raise ValueError("excitation probability must be in [0, 1]")
        if self.excitation is not None:
            object.__setattr__(
                self, "excitation", _as_unit_vector(self.excitation, UNIT_TOL, "excitation")
            )

    def weight_grid(self, n_polar: int | None = None, n_azimuthal: int | None = None):
        return build_weight_grid(self.geometry, self.channels, n_polar, n_azimuthal)

    def laser(self, t_ex: float = 0.0) -> LaserKick | None:
        return LaserKick(self.excitation, t_ex) if self.excitation is not None else None


@dataclass(frozen=True)
class FidelityResult:
    """Normalized post-herald state with its summary figures.

    A zero herald probability is reported as efficiency 0 with NaN fidelity
    and contrast and a zero matrix, never as a division error.
    """

    rho_qubits: np.ndarray
    fidelity: float
    contrast: float
    efficiency: float

    @property
    def heralded(self) -> bool:
        return self.efficiency > 0.0


def _no_herald_result() -> FidelityResult:
    return FidelityResult(
        np.zeros((4, 4), dtype=complex), float("nan"), float("nan"), 0.0
    )


def closest_bell_fidelity(rho: np.ndarray) -> float:
    """Largest Bell-state overlap over the four Bell states, allowing the
    optimal relative phase rotation within each parity sector."""
    r = np.asarray(rho)
    odd = 0.5 * (r[1, 1].real + r[2, 2].real) + abs(r[1, 2])
    even = 0.5 * (r[0, 0].real + r[3, 3].real) + abs(r[0, 3])
    return float(max(odd, even))


def low_efficiency_fidelity(p: float, contrast: float) -> float:
    """First-order single-photon fidelity (1 - p)(1 + C)/2, for comparison
    against the full conditional-matrix value."""
    return (1.0 - p) * (1.0 + contrast) / 2.0


def herald_quadrature(window: HeraldWindow, mu_max: float, n_time: int | None = None):
    """Nodes/weights for int_0^{t_max} e^{-t} f(t) dt.

    Gauss-Laguerre absorbs the exponential envelope on the half-infinite
    window; a finite cutoff maps Gauss-Legendre nodes with an explicit
    envelope. The order doubles for fast motion, where the integrand
    oscillates.
    """
    if n_time is None:
        n_time = DEFAULT_TIME_NODES * (2 if mu_max > OSCILLATORY_MU else 1)
    if np.isinf(window.t_max):
        return roots_laguerre(n_time)
    x, wx = np.polynomial.legendre.leggauss(n_time)
    t = 0.5 * window.t_max * (x + 1.0)
    return t, 0.5 * window.t_max * wx * np.exp(-t)


class _Moments:
    """Kick-moment evaluation, routed through the closed-form engine or, for
    desk-scale validation, the truncated Fock-matrix oracle."""

    def __init__(self, node: NodeConfig, oracle: bool = False, cutoff: int | None = None):
        self.rho = node.motion
        self.oracle = oracle
        self.cutoff = cutoff

    def pair_table(self, sa: KickSpec, ta, sb: KickSpec, tb) -> np.ndarray:
        ta, tb = np.atleast_1d(ta), np.atleast_1d(tb)
        if not self.oracle:
            return pair_moment_table(sa, ta, sb, tb, self.rho)
        out = np.empty((ta.size, tb.size), dtype=complex)
        for i, t1 in enumerate(ta):
            for j, t2 in enumerate(tb):
                out[i, j] = pair_moment_fock(sa, t1, sb, t2, self.rho, self.cutoff)
        return out

    def pair_pairs(self, sa: KickSpec, ta, sb: KickSpec, tb) -> np.ndarray:
        ta, tb = np.atleast_1d(ta), np.atleast_1d(tb)
        if not self.oracle:
            return pair_moment_pairs(sa, ta, sb, tb, self.rho)
        return np.array(
            [pair_moment_fock(sa, t1, sb, t2, self.rho, self.cutoff) for t1, t2 in zip(ta, tb)]
        )

    def first_table(self, spec: KickSpec, times) -> np.ndarray:
        times = np.atleast_1d(times)
        if not self.oracle:
            return first_moment_table(spec, times, self.rho)
        return np.array([first_moment_fock(spec, t, self.rho, self.cutoff) for t in times])


def _dominant_mode(grid: WeightGrid, label: str) -> int:
    """Output mode carrying most of the channel's collected power."""
    i = grid.channel_index(label)
    power = np.einsum("q,fq->f", grid.weights, np.abs(grid.values[i]) ** 2)
    return int(np.argmax(power))


def _channel_spec(
    grid: WeightGrid,
    node: NodeConfig,
    label: str,
    laser: LaserKick | None,
    mode: int | None = None,
) -> KickSpec:
    if mode is None:
        mode = _dominant_mode(grid, label)
    return KickSpec(grid, node.trap, label, mode=mode, laser=laser)


def _optimized_correction(spec: KickSpec, rho: ThermalState) -> CorrectionSpec:
    """Correction displacement maximizing the thermal return amplitude.

    The objective is the herald-envelope average of |tr(K_corr(t) rho)|^2 on
    a coarse Laguerre grid shifted to the kick's own excitation time; it is
    evaluated with the closed-form engine regardless of oracle mode, since
    the optimized amplitudes are configuration, not a checked observable.
    """
    t, w = roots_laguerre(COARSE_TIME_NODES)
    if spec.laser is not None:
        t = t + spec.laser.t_ex

    def objective(k_avg):
        trial = dataclasses.replace(spec, correction=CorrectionSpec(k_avg))
        m = first_moment_table(trial, t, rho)
        return float(w @ np.abs(m) ** 2)

    return CorrectionSpec(optimize_kavg(spec, rho, objective))


def _corrected(spec: KickSpec, rho: ThermalState) -> KickSpec:
    return dataclasses.replace(spec, correction=_optimized_correction(spec, rho))


def _inner_window(t: np.ndarray, window: HeraldWindow):
    """Per-outer-node Legendre rule across the accepted |t_V - t_H| band.

    Returns inner times and weights of shape (T, J); the weights carry the
    e^{-t_V} envelope and the interval Jacobian, so discarded mass outside
    the band simply never enters the sums. Bands wider than a few decay
    times are split into panels to keep the envelope resolved.
    """
    x, wx = np.polynomial.legendre.leggauss(INNER_WINDOW_NODES)
    lo = np.maximum(t - window.dt_max, 0.0)
    hi = t + window.dt_max
    if np.isfinite(window.t_max):
        hi = np.minimum(hi, window.t_max)
    width = np.maximum(hi - lo, 0.0)
    panels = max(1, int(np.ceil(width.max() / INNER_PANEL_WIDTH)))
    starts = lo[:, None] + width[:, None] * (np.arange(panels) / panels)[None, :]
    half = (width / (2.0 * panels))[:, None, None]
    tv = starts[:, :, None] + half * (x[None, None, :] + 1.0)
    wv = half * wx[None, None, :] * np.exp(-tv)
    return tv.reshape(t.size, -1), wv.reshape(t.size, -1)


def _assemble_odd_sector(i11: float, i22: float, i12: complex) -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = i11
    rho[2, 2] = i22
    rho[1, 2] = i12
    rho[2, 1] = np.conj(i12)
    return rho


def _finalize_two_photon(i11: float, i22: float, i12: complex) -> FidelityResult:
    total = i11 + i22
    if not total > 0.0:
        return _no_herald_result()
    contrast = 2.0 * abs(i12) / total
    rho = _assemble_odd_sector(i11, i22, i12) / total
    return FidelityResult(rho, closest_bell_fidelity(rho), contrast, float(total))


# ---------------------------------------------------------------------------
# single-photon scheme


def single_photon_result(
    node_a: NodeConfig,
    node_b: NodeConfig,
    window: HeraldWindow = HeraldWindow(),
    corrected: bool = False,
    detector_sign: int = 1,
    n_time: int | None = None,
    oracle: bool = False,
    oracle_cutoff: int | None = None,
    n_polar: int | None = None,
    n_azimuthal: int | None = None,
) -> FidelityResult:
    """Post-herald state of the weak-excitation single-click scheme.

    Each node holds one emitting channel and an excitation probability p.
    The conditional matrix accumulates single-excitation populations, their
    first-moment coherence (with the link phases and the herald detector's
    sign), and the double-excitation terms including the same-mode
    double-click exclusion. The contrast is |I_coh| / sqrt(E_A E_B).
    """
    if window.dt_max is not None:
        raise ValueError("dt_max applies to two-photon protocols only")
    mu_max = max(
        float(np.max(node_a.trap.frequency_ratios)),
        float(np.max(node_b.trap.frequency_ratios)),
    )
    t, w = herald_quadrature(window, mu_max, n_time)

    specs, engines, norms, powers, effs = [], [], [], [], []
    for node in (node_a, node_b):
        if len(node.channels) != 1:
            raise ValueError("single-photon nodes emit on exactly one channel")
        label = node.channels[0].label
        grid = node.weight_grid(n_polar, n_azimuthal)
        eng = _Moments(node, oracle, oracle_cutoff)
        spec = _channel_spec(grid, node, label, node.laser(0.0))
        norm = float(grid.channel_norms[grid.channel_index(label)])
        power = eng.pair_pairs(spec, t, spec, t).real / norm
        specs.append(spec)
        engines.append(eng)
        norms.append(norm)
        powers.append(power)
        effs.append(float(w @ power))

    p_a, p_b = node_a.excitation_probability, node_b.excitation_probability
    e_a, e_b = effs
    double = float(w @ (np.exp(-t) * powers[0] * powers[1]))
    link = np.exp(1j * (node_b.link_phase - node_a.link_phase))

    def assemble(spec_a: KickSpec, spec_b: KickSpec) -> FidelityResult:
        # The correction is unitary, so the populations and the
        # double-excitation overlap never change; only the first-moment
        # coherence is spec-dependent.
        m_a = engines[0].first_table(spec_a, t) / np.sqrt(norms[0])
        m_b = engines[1].first_table(spec_b, t) / np.sqrt(norms[1])
        i_coh = complex(w @ (np.conj(m_a) * m_b))
        rho = np.zeros((4, 4), dtype=complex)
        rho[1, 1] = (1.0 - p_a) * p_b * e_b / 2.0
        rho[2, 2] = p_a * (1.0 - p_b) * e_a / 2.0
        rho[1, 2] = (
            detector_sign
            * np.sqrt(p_a * p_b * (1.0 - p_a) * (1.0 - p_b))
            * i_coh
            * link
            / 2.0
        )
        rho[2, 1] = np.conj(rho[1, 2])
        rho[3, 3] = p_a * p_b * (
            ((1.0 - e_a) * e_b + (1.0 - e_b) * e_a) / 2.0 + double / 4.0
        )
        total = float(np.trace(rho).real)
        if not total > 0.0:
            return _no_herald_result()
        contrast = (
            abs(i_coh) / np.sqrt(e_a * e_b) if e_a > 0 and e_b > 0 else float("nan")
        )
        rho /= total
        return FidelityResult(rho, closest_bell_fidelity(rho), float(contrast), total)

    base = assemble(specs[0], specs[1])
    if not corrected or not base.heralded:
        return base
    best = assemble(
        _corrected(specs[0], node_a.motion), _corrected(specs[1], node_b.motion)
    )
    return best if best.fidelity >= base.fidelity else base


def single_photon_zero_na_contrast(
    chi: float, eta: float, mu_over_gamma: float, nbar: float, t_max: float = np.inf
) -> float:
    """Single-direction collection contrast by adaptive quadrature.

    Integrates e^{-t} e^{-2 eta^2 (1 - cos chi cos mu t)(1 + 2 nbar)} over the
    herald window, normalized to the window's envelope mass. chi is the angle
    between the excitation direction and the collection direction.
    """
    a = 2.0 * eta**2 * (1.0 + 2.0 * nbar)
    cos_chi = np.cos(chi)

    def integrand(time):
        return np.exp(-time - a * (1.0 - cos_chi * np.cos(mu_over_gamma * time)))

    upper = t_max if np.isfinite(t_max) else np.inf
    value, _ = quad(integrand, 0.0, upper, epsabs=1e-14, epsrel=1e-12, limit=QUAD_LIMIT)
    norm = 1.0 - np.exp(-t_max) if np.isfinite(t_max) else 1.0
    return float(value / norm)


# ---------------------------------------------------------------------------
# two-photon scheme


def _two_photon_specs(node: NodeConfig, grid: WeightGrid, corrected: bool):
    labels = [ch.label for ch in node.channels]
    if len(labels) != 2:
        raise ValueError("two-photon nodes need exactly two decay channels")
    specs = [_channel_spec(grid, node, label, node.laser(0.0)) for label in labels]
    if corrected:
        specs = [_corrected(s, node.motion) for s in specs]
    return specs


def _two_photon_norms(grid: WeightGrid, node: NodeConfig):
    return [grid.channel_norms[grid.channel_index(ch.label)] for ch in node.channels]


def two_photon_post_herald(
    node_a: NodeConfig,
    node_b: NodeConfig,
    t_h: float,
    t_v: float,
    detector_parity: int = 1,
    oracle: bool = False,
    oracle_cutoff: int | None = None,
    n_polar: int | None = None,
    n_azimuthal: int | None = None,
) -> np.ndarray:
    """Unnormalized post-herald matrix at fixed detection times (t_H, t_V).

    Qubit basis: state 0 emits on the node's first channel (H), state 1 on
    the second (V). Only the odd-parity block is populated; detector_parity
    flips the coherence sign for clicks on opposite beamsplitter sides.
    """
    grid_a, grid_b = (n.weight_grid(n_polar, n_azimuthal) for n in (node_a, node_b))
    s_ah, s_av = _two_photon_specs(node_a, grid_a, corrected=False)
    s_bh, s_bv = _two_photon_specs(node_b, grid_b, corrected=False)
    n_ah, n_av = _two_photon_norms(grid_a, node_a)
    n_bh, n_bv = _two_photon_norms(grid_b, node_b)
    eng_a, eng_b = (_Moments(n, oracle, oracle_cutoff) for n in (node_a, node_b))

    p_ah = eng_a.pair_pairs(s_ah, t_h, s_ah, t_h)[0].real / n_ah
    p_av = eng_a.pair_pairs(s_av, t_v, s_av, t_v)[0].real / n_av
    p_bh = eng_b.pair_pairs(s_bh, t_h, s_bh, t_h)[0].real / n_bh
    p_bv = eng_b.pair_pairs(s_bv, t_v, s_bv, t_v)[0].real / n_bv
    # tr(K_AH(tH) rho K_AV(tV)^dag) and tr(K_BV(tV) rho K_BH(tH)^dag)
    t_a = eng_a.pair_pairs(s_av, t_v, s_ah, t_h)[0] / np.sqrt(n_av * n_ah)
    t_b = eng_b.pair_pairs(s_bh, t_h, s_bv, t_v)[0] / np.sqrt(n_bh * n_bv)

    return _assemble_odd_sector(
        p_ah * p_bv, p_av * p_bh, detector_parity * t_a * t_b
    )


def _cross_coherence(
    eng_a: _Moments,
    eng_b: _Moments,
    s_ah: KickSpec,
    s_av: KickSpec,
    s_bh: KickSpec,
    s_bv: KickSpec,
    norm: float,
    t: np.ndarray,
    w: np.ndarray,
    window: HeraldWindow,
    shift_a=(0.0, 0.0),
    shift_b=(0.0, 0.0),
) -> complex:
    """Integrated coherence I12 over the accepted (t_H, t_V) region.

    The H/V kick evaluation times may be rigidly shifted per spec (used by
    the time-bin scheme, where bins start at 0 and tau); the envelope and the
    window always act on the bin-local times.
    """
    ah, av = shift_a
    bh, bv = shift_b
    if window.dt_max is None:
        table_a = eng_a.pair_table(s_av, t + av, s_ah, t + ah).T  # (tH, tV)
        table_b = eng_b.pair_table(s_bh, t + bh, s_bv, t + bv)  # (tH, tV)
        return complex(w @ (table_a * table_b) @ w / norm)
    tv, wv = _inner_window(t, window)
    flat = tv.ravel()
    outer = np.repeat(t, tv.shape[1])
    ta = eng_a.pair_pairs(s_av, flat + av, s_ah, outer + ah).reshape(tv.shape)
    tb = eng_b.pair_pairs(s_bh, outer + bh, s_bv, flat + bv).reshape(tv.shape)
    return complex(w @ np.sum(wv * ta * tb, axis=1) / norm)


def _windowed_populations(
    eng_a: _Moments,
    eng_b: _Moments,
    s_ah: KickSpec,
    s_av: KickSpec,
    s_bh: KickSpec,
    s_bv: KickSpec,
    norms,
    t: np.ndarray,
    w: np.ndarray,
    window: HeraldWindow,
    shifts=(0.0, 0.0, 0.0, 0.0),
):
    """(I11, I22) with the dt acceptance band applied to the inner time."""
    n_ah, n_av, n_bh, n_bv = norms
    ah, av, bh, bv = shifts
    p_ah = eng_a.pair_pairs(s_ah, t + ah, s_ah, t + ah).real / n_ah
    p_bh = eng_b.pair_pairs(s_bh, t + bh, s_bh, t + bh).real / n_bh
    if window.dt_max is None:
        p_av = eng_a.pair_pairs(s_av, t + av, s_av, t + av).real / n_av
        p_bv = eng_b.pair_pairs(s_bv, t + bv, s_bv, t + bv).real / n_bv
        return float((w @ p_ah) * (w @ p_bv)), float((w @ p_av) * (w @ p_bh))
    tv, wv = _inner_window(t, window)
    flat = tv.ravel()
    p_bv_in = eng_b.pair_pairs(s_bv, flat + bv, s_bv, flat + bv).real.reshape(tv.shape) / n_bv
    p_av_in = eng_a.pair_pairs(s_av, flat + av, s_av, flat + av).real.reshape(tv.shape) / n_av
    i11 = float(w @ (p_ah * np.sum(wv * p_bv_in, axis=1)))
    i22 = float(w @ (p_bh * np.sum(wv * p_av_in, axis=1)))
    return i11, i22


def two_photon_fidelity(
    node_a: NodeConfig,
    node_b: NodeConfig,
    window: HeraldWindow = HeraldWindow(),
    corrected: bool = False,
    detector_parity: int = 1,
    n_time: int | None = None,
    oracle: bool = False,
    oracle_cutoff: int | None = None,
    n_polar: int | None = None,
    n_azimuthal: int | None = None,
) -> FidelityResult:
    """Detection-time-averaged two-photon result.

    The efficiency is the absolute herald mass I11 + I22 within the window,
    so narrowing dt_max reports the discarded heralds. The spin-conditional
    correction modifies only the coherence I12 (it is unitary per qubit
    branch); if an optimized correction fails to improve the fidelity the
    uncorrected result is returned, making correction dominance structural.
    """
    if window.dt_max is not None and window.dt_max == 0.0:
        raise ValueError("empty acceptance window: dt_max = 0 admits no herald pairs")
    mu_max = max(
        float(np.max(node_a.trap.frequency_ratios)),
        float(np.max(node_b.trap.frequency_ratios)),
    )
    t, w = herald_quadrature(window, mu_max, n_time)
    grid_a, grid_b = (n.weight_grid(n_polar, n_azimuthal) for n in (node_a, node_b))
    s_ah, s_av = _two_photon_specs(node_a, grid_a, corrected=False)
    s_bh, s_bv = _two_photon_specs(node_b, grid_b, corrected=False)
    n_ah, n_av = _two_photon_norms(grid_a, node_a)
    n_bh, n_bv = _two_photon_norms(grid_b, node_b)
    eng_a, eng_b = (_Moments(n, oracle, oracle_cutoff) for n in (node_a, node_b))

    i11, i22 = _windowed_populations(
        eng_a, eng_b, s_ah, s_av, s_bh, s_bv, (n_ah, n_av, n_bh, n_bv), t, w, window
    )
    cross_norm = np.sqrt(n_av * n_ah * n_bh * n_bv)
    i12 = detector_parity * _cross_coherence(
        eng_a, eng_b, s_ah, s_av, s_bh, s_bv, cross_norm, t, w, window
    )
    base = _finalize_two_photon(i11, i22, i12)
    if not corrected or not base.heralded:
        return base

    c_ah, c_av = (_corrected(s, node_a.motion) for s in (s_ah, s_av))
    c_bh, c_bv = (_corrected(s, node_b.motion) for s in (s_bh, s_bv))
    i12c = detector_parity * _cross_coherence(
        eng_a, eng_b, c_ah, c_av, c_bh, c_bv, cross_norm, t, w, window
    )
    best = _finalize_two_photon(i11, i22, i12c)
    return best if best.fidelity >= base.fidelity else base


def two_photon_zero_na_timing(eta, mu_over_gamma, nbar, k_coll=(0.0, 0.0, 1.0)):
    """Timing contrast for single-direction collection: exact and closed form.

    Returns (exact, approximate). The exact value reduces the double herald
    integral to one dimension in the time difference; the approximation
    replaces the oscillating exponent by its quadratic expansion and is
    accurate to O((mu/Gamma)^4). Scalars describe an isotropic trap; per-mode
    arrays are broadcast against the lab-frame collection components.
    """
    k = _as_unit_vector(np.asarray(k_coll, dtype=float), UNIT_TOL, "direction")
    eta, mu, nbar, c = np.broadcast_arrays(
        np.asarray(eta, dtype=float),
        np.asarray(mu_over_gamma, dtype=float),
        np.asarray(nbar, dtype=float),
        k,
    )
    scale = 2.0 * c**2 * eta**2 * (1.0 + 2.0 * nbar)

    def integrand(dt):
        return np.exp(-dt - np.sum(scale * (1.0 - np.cos(mu * dt))))

    exact, _ = quad(integrand, 0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=QUAD_LIMIT)
    closed = float(np.exp(-np.sum(scale * mu**2)))
    return float(exact), closed


# ---------------------------------------------------------------------------
# collection-geometry scheme (tilted arms), evaluated in the fast-emission limit


def geometry_contrast(eta: float, xi: float, nbar: float, two_sided: bool = False):
    """Closed-form contrast and efficiency factor for tilted collection arms.

    gamma = eta^2 sin^2(xi) (1 + 2 nbar). One-sided collection of the two
    channels from directions tilted by xi in orthogonal planes gives
    C = e^{-2 gamma} at full efficiency; a symmetric two-sided pair per
    channel cancels the first-order recoil phase, C = sech^2(gamma), at the
    cost of the efficiency factor (1 + e^{-2 gamma})/2.
    """
    gamma = eta**2 * np.sin(xi) ** 2 * (1.0 + 2.0 * nbar)
    if two_sided:
        return float(1.0 / np.cosh(gamma) ** 2), float((1.0 + np.exp(-2.0 * gamma)) / 2.0)
    return float(np.exp(-2.0 * gamma)), 1.0


def geometry_contrast_numeric(
    eta: float,
    xi: float,
    nbar: float,
    two_sided: bool = False,
    frequency_ratio: float = 0.1,
):
    """Same quantities from the kick-moment engine at coincident herald times.

    Timing effects are excluded by evaluating every moment at t = 0; the
    result is therefore frequency-independent and tests only the geometric
    arrangement of the collection arms.
    """
    trap = isotropic_trap(frequency_ratio, eta)
    rho = ThermalState([nbar, nbar, nbar])
    x, y, z = np.eye(3)
    if two_sided:
        channels = [DipoleChannel("H", y), DipoleChannel("V", x)]
        grid = build_weight_grid(
            StandingWavePair(z, xi, azimuths=(0.0, np.pi / 2)), channels
        )
        grid_h = grid_v = grid
    else:
        sin_x, cos_x = np.sin(xi), np.cos(xi)
        grid_h = build_weight_grid(ZeroNA([sin_x, 0.0, cos_x]), [DipoleChannel("H", y)])
        grid_v = build_weight_grid(ZeroNA([0.0, sin_x, cos_x]), [DipoleChannel("V", x)])

    s_h = KickSpec(grid_h, trap, "H", mode=_dominant_mode(grid_h, "H"))
    s_v = KickSpec(grid_v, trap, "V", mode=_dominant_mode(grid_v, "V"))
    cross = pair_moment_table(s_v, [0.0], s_h, [0.0], rho)[0, 0]
    p_h = pair_moment_table(s_h, [0.0], s_h, [0.0], rho)[0, 0].real
    p_v = pair_moment_table(s_v, [0.0], s_v, [0.0], rho)[0, 0].real
    contrast = float(abs(cross) ** 2 / (p_h * p_v))
    if two_sided:
        return contrast, float(p_h / grid.collected_power("H"))
    return contrast, 1.0


# ---------------------------------------------------------------------------
# time-bin scheme


def time_bin_fidelity(
    node: NodeConfig,
    tau: float,
    window: HeraldWindow = HeraldWindow(),
    corrected: bool = False,
    detector_parity: int = 1,
    n_time: int | None = None,
    oracle: bool = False,
    oracle_cutoff: int | None = None,
    n_polar: int | None = None,
    n_azimuthal: int | None = None,
) -> FidelityResult:
    """Early/late encoding on a single decay channel, identical nodes.

    The early kick carries the excitation pulse at time 0 and emission at
    t_e; the late kick is shifted by the bin separation tau in both. The
    coherence integrates |tr(K_e(t_e)^dag K_l(tau + t_l) rho)|^2 over
    bin-local times, optionally restricted to |t_l - t_e| <= dt_max. The
    correction is optimized per bin and falls back to the uncorrected result
    if it does not improve the fidelity.
    """
    if not tau > 0:
        raise ValueError("time-bin spacing tau must be > 0")
    if node.excitation is None:
        raise ValueError("time-bin encoding requires an excitation direction")
    if len(node.channels) != 1:
        raise ValueError("time-bin nodes decay on a single channel")
    if window.dt_max is not None and window.dt_max == 0.0:
        raise ValueError("empty acceptance window: dt_max = 0 admits no herald pairs")

    label = node.channels[0].label
    grid = node.weight_grid(n_polar, n_azimuthal)
    norm = grid.channel_norms[grid.channel_index(label)]
    eng = _Moments(node, oracle, oracle_cutoff)
    mu_max = float(np.max(node.trap.frequency_ratios))
    t, w = herald_quadrature(window, mu_max, n_time)

    spec_e = _channel_spec(grid, node, label, LaserKick(node.excitation, 0.0))
    spec_l = _channel_spec(grid, node, label, LaserKick(node.excitation, tau))

    def evaluate(s_e: KickSpec, s_l: KickSpec) -> FidelityResult:
        # Identical nodes: I12 = sum ww T_el conj(T_el); the early index plays
        # H, the late index plays V, with bin-local envelopes.
        shifts = (0.0, tau, 0.0, tau)
        i11, i22 = _windowed_populations(
            eng, eng, s_e, s_l, s_e, s_l, (norm,) * 4, t, w, window, shifts
        )
        if window.dt_max is None:
            table = eng.pair_table(s_e, t, s_l, tau + t) / norm  # (t_e, t_l)
            i12 = complex(w @ (np.abs(table) ** 2) @ w)
        else:
            tv, wv = _inner_window(t, window)
            flat = tv.ravel()
            outer = np.repeat(t, tv.shape[1])
            pairs = eng.pair_pairs(s_e, outer, s_l, tau + flat).reshape(tv.shape) / norm
            i12 = complex(w @ np.sum(wv * np.abs(pairs) ** 2, axis=1))
        return _finalize_two_photon(i11, i22, detector_parity * i12)

    base = evaluate(spec_e, spec_l)
    if not corrected or not base.heralded:
        return base
    best = evaluate(_corrected(spec_e, node.motion), _corrected(spec_l, node.motion))
    return best if best.fidelity >= base.fidelity else base


def time_bin_zero_na_contrast(
    eta: float,
    mu_over_gamma: float,
    mu_tau: float,
    nbar: float,
    cos_chi: float = 0.0,
) -> float:
    """Closed-form time-bin contrast for single-direction collection.

    The residual displacement after interfering early and late emission is
    u k_ex - v k_coll with u = 1 - e^{i mu tau} from the two excitation
    kicks and v = e^{i mu t_e} - e^{i (mu tau + mu t_l)} from the emission
    recoil; the contrast averages e^{-eta^2 (1 + 2 nbar) |beta|^2} over both
    bin-local herald times. mu_over_gamma = 0 gives the fast-emission limit
    with the bin phase mu_tau held finite.
    """
    a = eta**2 * (1.0 + 2.0 * nbar)
    u = 1.0 - np.exp(1j * mu_tau)

    def inner(t_e):
        def f(t_l):
            v = np.exp(1j * mu_over_gamma * t_e) - np.exp(
                1j * (mu_tau + mu_over_gamma * t_l)
            )
            psi = abs(u) ** 2 + abs(v) ** 2 - 2.0 * cos_chi * np.real(u * np.conj(v))
            return np.exp(-t_l - a * psi)

        value, _ = quad(f, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=QUAD_LIMIT)
        return np.exp(-t_e) * value

    total, _ = quad(inner, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=QUAD_LIMIT)
    return float(total)


# ---------------------------------------------------------------------------
# crossed-dipole (pi/sigma) high-NA scheme


def pi_sigma_high_na_fidelity(
    eta: float = 0.07,
    na: float = 0.6,
    nbar: float = 10.0,
    transverse_only: bool = False,
    sigma_sign: int = 1,
    detector_parity: int = 1,
    frequency_ratio: float = 0.1,
    fk: float = 1e5,
    n_polar: int | None = None,
    n_azimuthal: int | None = None,
    oracle: bool = False,
    oracle_cutoff: int | None = None,
) -> FidelityResult:
    """Two-photon entanglement from sigma/pi decays through one high-NA lens.

    Qubit 0 decays on the circular dipole -(x +- iz)/sqrt(3), qubit 1 on the
    linear dipole y/sqrt(3), with the field axis along y and collection along
    z. Both channels couple into both fibre polarizations, so the herald
    matrix takes cross-channel pair moments at coincident detection times
    (fast-emission limit). transverse_only drops the longitudinal dipole
    component, isolating the radiation-pattern-mismatch error.
    """
    x, y, z = np.eye(3)
    raw0 = (-x / np.sqrt(3.0)) if transverse_only else (-(x + 1j * sigma_sign * z) / np.sqrt(3.0))
    channels = (
        DipoleChannel.from_raw("0", raw0),
        DipoleChannel.from_raw("1", y / np.sqrt(3.0)),
    )
    trap = isotropic_trap(frequency_ratio, eta)
    rho = ThermalState([nbar, nbar, nbar])
    node = NodeConfig(trap, rho, GaussianLens(na, fk, axis=z), channels)
    grid = node.weight_grid(n_polar, n_azimuthal)
    eng = _Moments(node, oracle, oracle_cutoff)

    # The kick amplitudes carry the physical branching ratios between the
    # decay channels, so the moments enter raw; dividing by the summed
    # emission norm only fixes the overall scale of the trace.
    total_norm = float(np.sum(_two_photon_norms(grid, node)))
    specs = [
        [KickSpec(grid, trap, ch.label, mode=f) for f in range(grid.n_modes)]
        for ch in channels
    ]
    # cross[i, f, i2, f2] = tr(K_{i f}(0) rho K_{i2 f2}(0)^dag) / total_norm
    cross = np.empty((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for f in range(2):
            for i2 in range(2):
                for f2 in range(2):
                    if (i2, f2) < (i, f):
                        cross[i, f, i2, f2] = np.conj(cross[i2, f2, i, f])
                        continue
                    value = eng.pair_pairs(specs[i2][f2], 0.0, specs[i][f], 0.0)[0]
                    cross[i, f, i2, f2] = value / total_norm

    parity = float(detector_parity)
    rho4 = np.zeros((4, 4), dtype=complex)
    for ia in range(2):
        for ib in range(2):
            for ja in range(2):
                for jb in range(2):
                    element = (
                        cross[ia, 0, ja, 0] * cross[ib, 1, jb, 1]
                        + parity * cross[ia, 0, ja, 1] * cross[ib, 1, jb, 0]
                        + parity * cross[ia, 1, ja, 0] * cross[ib, 0, jb, 1]
                        + cross[ia, 1, ja, 1] * cross[ib, 0, jb, 0]
                    )
                    rho4[2 * ia + ib, 2 * ja + jb] = element

    total = float(np.trace(rho4).real)
    if not total > 0.0:
        return _no_herald_result()
    rho4 /= total
    odd = rho4[1, 1].real + rho4[2, 2].real
    contrast = 2.0 * abs(rho4[1, 2]) / odd if odd > 0 else float("nan")
    return FidelityResult(rho4, closest_bell_fidelity(rho4), float(contrast), total)
