"""Collection geometries and plane-wave weights for emitted photons.

A collected output mode assigns each transverse plane wave ``(k_hat, sigma)``
a complex amplitude. For a decay channel with dipole ``d_hat`` the weight is

    w(k_hat) = sum_sigma  channel_weight (d_hat . eps_sigma) alpha_sigma(k_hat),

where ``alpha`` describes the collection optics: a delta on a single direction
(zero-NA limit), the Gaussian fibre mode behind a high-NA lens, or a coherent
pair of collection directions mirrored through a common axis. Weight grids
pair these values with sphere-cap quadrature nodes so kick-operator moments
become finite node sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import jv

from .phase_space import UNIT_TOL, _as_unit_vector

CAP_TOL = 1e-10
POLE_EPS = 1e-12
AXIS_EPS = 1e-3  # rad; below this the lens overlap falls back to direct quadrature
DEFAULT_FK = 1e5
DEFAULT_GRID = (48, 96)


def polarization_basis(khat) -> tuple[np.ndarray, np.ndarray]:
    """Right-handed transverse basis ``(theta_hat, phi_hat)`` for a direction.

    Away from the z poles this is the spherical-coordinate basis; at the poles
    the azimuth is fixed to zero, giving ``(x_hat, y_hat)`` at ``+z`` so the
    basis stays deterministic.
    """
    k = _as_unit_vector(khat, UNIT_TOL, "direction")
    sin_t = np.hypot(k[0], k[1])
    if sin_t < POLE_EPS:
        sign = 1.0 if k[2] > 0 else -1.0
        # theta_hat at phi=0 is (cos t, 0, -sin t): x_hat at +z, -x_hat... at -z
        return np.array([sign, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    cos_t = k[2]
    cos_p, sin_p = k[0] / sin_t, k[1] / sin_t
    e_theta = np.array([cos_t * cos_p, cos_t * sin_p, -sin_t])
    e_phi = np.array([-sin_p, cos_p, 0.0])
    return e_theta, e_phi


@dataclass(frozen=True)
class DipoleChannel:
    """One decay channel: a normalized dipole direction and a branching amplitude."""

    label: str
    dipole: np.ndarray
    channel_weight: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.dipole, dtype=complex)
        if arr.shape != (3,):
            raise ValueError("dipole must be a complex 3-vector")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > UNIT_TOL:
            raise ValueError("dipole must be normalized; use from_raw to absorb the norm")
        if self.channel_weight < 0:
            raise ValueError("channel_weight must be >= 0")
        object.__setattr__(self, "dipole", arr)

    @classmethod
    def from_raw(cls, label: str, raw, weight: float = 1.0) -> "DipoleChannel":
        """Build from an unnormalized dipole vector, folding |raw| into the weight."""
        arr = np.asarray(raw, dtype=complex)
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise ValueError("raw dipole must be nonzero")
        return cls(label, arr / norm, weight * norm)

    @property
    def emitted_power(self) -> float:
        """Total radiated weight of the channel, int dOmega sum_sigma |g|^2."""
        return 8.0 * np.pi / 3.0 * self.channel_weight**2


def dipole_coupling(channel: DipoleChannel, eps) -> complex:
    """Emission amplitude ``channel_weight (d_hat . eps)`` into polarization eps.

    The product is bilinear (no conjugation): complex dipoles carry their phase
    into the emitted field.
    """
    return complex(channel.channel_weight * np.dot(channel.dipole, np.asarray(eps)))


@dataclass(frozen=True)
class ZeroNA:
    """Collection of a single plane-wave direction (vanishing aperture limit)."""

    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "direction", _as_unit_vector(self.direction, UNIT_TOL, "direction")
        )


@dataclass(frozen=True)
class GaussianLens:
    """High-NA lens focusing a Gaussian fibre mode onto the emitter.

    na          : sin of the cap half-angle, in (0, 1]
    fk          : focal length times wavenumber (dimensionless, >= 100)
    waist_ratio : w0/f of the collimated Gaussian; None selects the efficiency
                  optimum for the channel set when the grid is built
    axis        : optical axis in the lab frame
    sigma_f     : fibre polarization angles, one output mode per entry
    """

    na: float
    fk: float = DEFAULT_FK
    waist_ratio: float | None = None
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    sigma_f: tuple[float, ...] = (0.0, np.pi / 2)

    def __post_init__(self):
        if not 0.0 < self.na <= 1.0:
            raise ValueError("na must be in (0, 1]")
        if self.fk < 100.0:
            raise ValueError("fk must be >= 100 for the stationary-phase form")
        if self.waist_ratio is not None and not self.waist_ratio > 0:
            raise ValueError("waist_ratio must be > 0")
        object.__setattr__(self, "axis", _as_unit_vector(self.axis, UNIT_TOL, "axis"))
        object.__setattr__(self, "sigma_f", tuple(float(s) for s in self.sigma_f))


@dataclass(frozen=True)
class StandingWavePair:
    """Two collection directions mirrored through a shared axis, summed coherently.

    The pair for azimuth ``a`` is ``cos(tilt) axis +- sin(tilt) u(a)`` with
    ``u(a)`` perpendicular to the axis; both directions share the axial running
    wave and form a standing wave in the transverse plane. One azimuth entry
    per decay channel.
    """

    axis: np.ndarray
    tilt: float
    azimuths: tuple[float, ...] = (0.0, np.pi / 2)
    relative_phase: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tilt <= np.pi / 2:
            raise ValueError("tilt must be in [0, pi/2]")
        object.__setattr__(self, "axis", _as_unit_vector(self.axis, UNIT_TOL, "axis"))
        object.__setattr__(self, "azimuths", tuple(float(a) for a in self.azimuths))


CollectionGeometry = ZeroNA | GaussianLens | StandingWavePair


def rotation_from_z(axis: np.ndarray) -> np.ndarray:
    """Rotation matrix taking z_hat to ``axis`` about their common normal."""
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, axis))
    if c > 1.0 - 1e-14:
        return np.eye(3)
    if c < -1.0 + 1e-14:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(z, axis)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def _perp_at_azimuth(axis: np.ndarray, azimuth: float) -> np.ndarray:
    rot = rotation_from_z(axis)
    return rot @ np.array([np.cos(azimuth), np.sin(azimuth), 0.0])


def _fiber_bracket(theta, phi, sigma_f):
    """Cartesian bracket of the fibre-overlap integrand, per Bessel order.

    Rows are the (x, y, z) field components; the returned arrays multiply
    J_0, J_2 and J_1 respectively in the direct integral.
    """
    c2, s2 = np.cos(theta / 2.0) ** 2, np.sin(theta / 2.0) ** 2
    row0 = np.array(
        [c2 * np.cos(sigma_f) * np.ones_like(phi), c2 * np.sin(sigma_f) * np.ones_like(phi),
         np.zeros_like(phi)]
    )
    row2 = np.array(
        [s2 * np.cos(2.0 * phi - sigma_f), s2 * np.sin(2.0 * phi - sigma_f),
         np.zeros_like(phi)]
    )
    row1 = np.array(
        [np.zeros_like(phi), np.zeros_like(phi),
         -1j * np.sin(theta) * np.cos(phi - sigma_f)]
    )
    return row0, row2, row1


def _stationary_fiber_field(theta, phi, lens: GaussianLens, sigma_f: float) -> np.ndarray:
    """Leading-order fibre-mode field vector at cap directions (theta, phi).

    The oscillatory theta-integral localizes at theta = vartheta; each Bessel
    order nu contributes its amplitude times e^{i(fk + pi/2 (3 nu - 1))}.
    Accepts arrays; returns complex components of shape (3,) + theta.shape with
    alpha_sigma = V . eps_sigma.
    """
    w0 = lens.waist_ratio
    pref = (
        np.sqrt(8.0 * np.pi) / (w0 * lens.fk)
        * np.sqrt(np.cos(theta))
        * np.exp(-((np.sin(theta) / w0) ** 2))
        * np.exp(1j * lens.fk)
    )
    row0, row2, row1 = _fiber_bracket(theta, phi, sigma_f)
    phase = [np.exp(1j * np.pi / 2.0 * (3.0 * nu - 1.0)) for nu in (0, 2, 1)]
    return pref * (phase[0] * row0 + phase[1] * row2 + phase[2] * row1)


def _direct_fiber_field(theta, phi, lens: GaussianLens, sigma_f: float) -> np.ndarray:
    """Brute-force oscillatory quadrature of the fibre-overlap integral.

    Composite Gauss-Legendre with enough panels to resolve both the fk cos
    phase and the Bessel oscillation; used for validation and near the axis
    where the stationary-phase form breaks down.
    """
    theta_max = np.arcsin(lens.na)
    cycles = lens.fk * theta_max / (2.0 * np.pi) + 10.0
    n_panels = int(np.ceil(10.0 * cycles))
    x, w = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, theta_max, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()

    w0 = lens.waist_ratio
    xi = lens.fk * np.sin(theta) * np.sin(t)
    envelope = np.sin(t) * np.sqrt(np.cos(t)) * np.exp(-((np.sin(t) / w0) ** 2))
    osc = np.exp(1j * lens.fk * np.cos(theta) * np.cos(t))
    c2, s2 = np.cos(t / 2.0) ** 2, np.sin(t / 2.0) ** 2
    j0, j1, j2 = jv(0, xi), jv(1, xi), jv(2, xi)

    fx = c2 * np.cos(sigma_f) * j0 + s2 * np.cos(2.0 * phi - sigma_f) * j2
    fy = c2 * np.sin(sigma_f) * j0 + s2 * np.sin(2.0 * phi - sigma_f) * j2
    fz = -1j * np.sin(t) * np.cos(phi - sigma_f) * j1
    base = wt * envelope * osc
    vec = np.array([np.sum(base * fx), np.sum(base * fy), np.sum(base * fz)])
    return np.sqrt(8.0 * np.pi) / w0 * vec


def gaussian_fiber_overlap(
    theta: float, phi: float, lens: GaussianLens, sigma_f: float, direct: bool = False
) -> np.ndarray:
    """Raw overlap amplitudes ``alpha_sigma`` (both transverse polarizations).

    ``theta``/``phi`` are lens-frame cap coordinates. Outside the cap the
    overlap vanishes. The default is the stationary-phase closed form; the
    direct flag (or a near-axis point) switches to oscillatory quadrature.
    """
    if lens.waist_ratio is None:
        raise ValueError("lens waist_ratio must be resolved before evaluating overlaps")
    theta_max = np.arcsin(lens.na)
    if theta > theta_max:
        return np.zeros(2, dtype=complex)
    if direct or np.sin(theta) < AXIS_EPS:
        V = _direct_fiber_field(theta, phi, lens, sigma_f)
    else:
        V = _stationary_fiber_field(theta, phi, lens, sigma_f)
    khat = np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )
    e1, e2 = polarization_basis(khat)
    return np.array([np.dot(V, e1), np.dot(V, e2)])


@dataclass(frozen=True)
class WeightGrid:
    """Plane-wave weights on quadrature nodes for a set of channels and modes.

    values[i, F, q] is the collected amplitude density of channel i into
    output mode F at node q. Discrete geometries carry unit node weights;
    lens grids carry product quadrature weights summing to the cap area.
    """

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    channel_labels: tuple[str, ...]
    channel_norms: np.ndarray
    cap_area: float | None = None
    waist_ratio: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if nodes.ndim != 2 or nodes.shape[1] != 3:
            raise ValueError("nodes must be an (N, 3) array")
        if weights.shape != (nodes.shape[0],) or np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive, one per node")
        if values.ndim != 3 or values.shape[2] != nodes.shape[0]:
            raise ValueError("values must be (channels, modes, N)")
        if len(self.channel_labels) != values.shape[0]:
            raise ValueError("one label per channel required")
        if self.cap_area is not None and abs(weights.sum() - self.cap_area) > CAP_TOL:
            raise ValueError("quadrature weights do not sum to the cap area")
        totals = np.einsum("q,ifq->i", weights, np.abs(values) ** 2)
        if not np.all(np.isfinite(totals)) or not np.any(totals > 0):
            raise ValueError("no channel couples to the collected modes")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_labels", tuple(self.channel_labels))
        object.__setattr__(self, "channel_norms", np.asarray(self.channel_norms, dtype=float))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    def channel_index(self, label: str) -> int:
        try:
            return self.channel_labels.index(label)
        except ValueError:
            raise KeyError(f"channel {label!r} not in grid {self.channel_labels}") from None

    def collected_power(self, label: str) -> float:
        """Power coupled by one channel into the output modes at zero recoil.

        The coherent node sum ``sum_F |int w dOmega|^2`` is the heralding
        numerator with all kick operators set to the identity; dividing by the
        channel's emitted power gives the collection efficiency.
        """
        i = self.channel_index(label)
        amp = self.values[i] @ self.weights
        return float(np.sum(np.abs(amp) ** 2))

    def mode_weighted_power(self, label: str) -> float:
        """Incoherent cap integral ``sum_F int |w|^2`` for one channel."""
        i = self.channel_index(label)
        return float(np.sum(self.weights[None, :] * np.abs(self.values[i]) ** 2))


def cap_quadrature(na: float, n_polar: int, n_azimuthal: int):
    """Product rule on the spherical cap: Gauss-Legendre in cos(theta), uniform in phi."""
    if n_polar < 1 or n_azimuthal < 1:
        raise ValueError("grid sizes must be >= 1")
    cos_max = np.sqrt(1.0 - na * na) if na < 1.0 else 0.0
    x, w = np.polynomial.legendre.leggauss(n_polar)
    cos_t = 0.5 * (1.0 + cos_max) + 0.5 * (1.0 - cos_max) * x
    w_t = 0.5 * (1.0 - cos_max) * w
    phi = 2.0 * np.pi * np.arange(n_azimuthal) / n_azimuthal
    w_phi = 2.0 * np.pi / n_azimuthal
    return cos_t, w_t, phi, w_phi


def _default_grid_size(geometry, n_polar, n_azimuthal):
    if n_polar is None or n_azimuthal is None:
        base = DEFAULT_GRID
        if isinstance(geometry, GaussianLens) and geometry.na >= 1.0:
            base = (2 * DEFAULT_GRID[0], 2 * DEFAULT_GRID[1])
        n_polar = n_polar or base[0]
        n_azimuthal = n_azimuthal or base[1]
    return n_polar, n_azimuthal


def _lens_efficiency(lens, channels, n_polar, n_azimuthal) -> float:
    grid = _build_lens_grid(lens, channels, n_polar, n_azimuthal)
    return sum(
        grid.collected_power(ch.label) / ch.emitted_power for ch in channels
    )


def optimal_waist(
    lens: GaussianLens, channels, n_polar: int | None = None, n_azimuthal: int | None = None
) -> float:
    """Waist ratio w0/f maximizing the summed collection efficiency of the channels."""
    n_polar, n_azimuthal = _default_grid_size(lens, n_polar, n_azimuthal)

    def neg_eff(log_w0):
        trial = GaussianLens(lens.na, lens.fk, float(np.exp(log_w0)), lens.axis, lens.sigma_f)
        return -_lens_efficiency(trial, channels, n_polar, n_azimuthal)

    res = minimize_scalar(
        neg_eff, bounds=(np.log(0.02), np.log(20.0)), method="bounded",
        options={"xatol": 1e-5},
    )
    return float(np.exp(res.x))


def _basis_arrays(theta, phi):
    """Vectorized transverse basis; matches polarization_basis pointwise."""
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    cos_p, sin_p = np.cos(phi), np.sin(phi)
    e1 = np.stack([cos_t * cos_p, cos_t * sin_p, -sin_t], axis=-1)
    e2 = np.stack([-sin_p, cos_p, np.zeros_like(phi)], axis=-1)
    pole = sin_t < POLE_EPS
    if np.any(pole):
        e1[pole] = np.where(cos_t[pole, None] > 0, [1.0, 0, 0], [-1.0, 0, 0])
        e2[pole] = [0.0, 1.0, 0.0]
    return e1, e2


def _build_lens_grid(lens, channels, n_polar, n_azimuthal, direct=False) -> WeightGrid:
    cos_t, w_t, phi, w_phi = cap_quadrature(lens.na, n_polar, n_azimuthal)
    theta_1d = np.arccos(np.clip(cos_t, -1.0, 1.0))

    theta = np.repeat(theta_1d, n_azimuthal)
    phis = np.tile(phi, n_polar)
    weights = np.repeat(w_t, n_azimuthal) * w_phi
    sin_t, cos_tt = np.sin(theta), np.cos(theta)
    k_lens = np.stack([sin_t * np.cos(phis), sin_t * np.sin(phis), cos_tt], axis=-1)
    e1, e2 = _basis_arrays(theta, phis)

    # alpha[F, sigma, q]: fibre overlap of each plane-wave polarization.
    n_f = len(lens.sigma_f)
    alpha = np.empty((n_f, 2, theta.size), dtype=complex)
    near_axis = np.sin(theta) < AXIS_EPS
    for fi, s_f in enumerate(lens.sigma_f):
        V = _stationary_fiber_field(theta, phis, lens, s_f)
        alpha[fi, 0] = np.einsum("aq,qa->q", V, e1)
        alpha[fi, 1] = np.einsum("aq,qa->q", V, e2)
        idx_fallback = np.nonzero(near_axis)[0] if not direct else range(theta.size)
        for q in idx_fallback:
            Vq = _direct_fiber_field(theta[q], phis[q], lens, s_f)
            alpha[fi, 0, q] = np.dot(Vq, e1[q])
            alpha[fi, 1, q] = np.dot(Vq, e2[q])

    # Plane-wave measure: with density (fk/2pi)^2 per solid angle the fibre
    # mode is unit-normalized over the full focal plane, int sum_sigma
    # |alpha|^2 dOmega = 1 - e^{-2(na/w0)^2} (the encircled fraction), so
    # mode-overlap amplitudes int w dOmega are physical and fk-independent
    # in magnitude.
    alpha *= lens.fk / (2.0 * np.pi)

    # Emission couplings g[i, sigma, q] in the lab frame.
    rot = rotation_from_z(lens.axis)
    e1_lab, e2_lab = e1 @ rot.T, e2 @ rot.T
    dips = np.array([ch.dipole for ch in channels])
    cws = np.array([ch.channel_weight for ch in channels])
    g = np.stack([dips @ e1_lab.T, dips @ e2_lab.T], axis=1) * cws[:, None, None]

    values = np.einsum("fsq,isq->ifq", alpha, g)
    cap = 2.0 * np.pi * (1.0 - (np.sqrt(1.0 - lens.na**2) if lens.na < 1.0 else 0.0))
    return WeightGrid(
        nodes=k_lens @ rot.T,
        weights=weights,
        values=values,
        channel_labels=tuple(ch.label for ch in channels),
        channel_norms=np.array([ch.emitted_power for ch in channels]),
        cap_area=cap,
        waist_ratio=lens.waist_ratio,
    )


def build_weight_grid(
    geometry: CollectionGeometry,
    channels,
    n_polar: int | None = None,
    n_azimuthal: int | None = None,
    direct: bool = False,
) -> WeightGrid:
    """Assemble the WeightGrid for any geometry variant.

    ZeroNA gives one unit-weight node, StandingWavePair two unit-weight nodes
    per channel (amplitudes 1/sqrt(2), second node carrying the relative
    phase), and GaussianLens a full cap quadrature with fibre overlaps.
    """
    channels = list(channels)
    if not channels:
        raise ValueError("at least one channel required")
    labels = tuple(ch.label for ch in channels)
    norms = np.array([ch.emitted_power for ch in channels])

    if isinstance(geometry, ZeroNA):
        e1, e2 = polarization_basis(geometry.direction)
        values = np.zeros((len(channels), 2, 1), dtype=complex)
        for ci, ch in enumerate(channels):
            values[ci, 0, 0] = dipole_coupling(ch, e1)
            values[ci, 1, 0] = dipole_coupling(ch, e2)
        return WeightGrid(
            nodes=geometry.direction[None, :],
            weights=np.array([1.0]),
            values=values,
            channel_labels=labels,
            channel_norms=norms,
        )

    if isinstance(geometry, StandingWavePair):
        if len(geometry.azimuths) != len(channels):
            raise ValueError("one standing-wave azimuth per channel required")
        axis = geometry.axis
        n_nodes = 2 * len(channels)
        nodes = np.empty((n_nodes, 3))
        values = np.zeros((len(channels), 2, n_nodes), dtype=complex)
        rel = np.exp(1j * geometry.relative_phase)
        for ci, (ch, az) in enumerate(zip(channels, geometry.azimuths)):
            u = _perp_at_azimuth(axis, az)
            k_plus = np.cos(geometry.tilt) * axis + np.sin(geometry.tilt) * u
            k_minus = np.cos(geometry.tilt) * axis - np.sin(geometry.tilt) * u
            # Pair-adapted polarization: e2 transverse to both directions, e1
            # completing the right-handed triad at each node.
            e2 = np.cross(axis, u)
            for ni, k in enumerate((k_plus, k_minus)):
                e1 = np.cross(e2, k)
                node = 2 * ci + ni
                nodes[node] = k
                amp = (1.0 if ni == 0 else rel) / np.sqrt(2.0)
                values[ci, 0, node] = amp * dipole_coupling(ch, e1)
                values[ci, 1, node] = amp * dipole_coupling(ch, e2)
        return WeightGrid(
            nodes=nodes,
            weights=np.ones(n_nodes),
            values=values,
            channel_labels=labels,
            channel_norms=norms,
        )

    if isinstance(geometry, GaussianLens):
        n_polar, n_azimuthal = _default_grid_size(geometry, n_polar, n_azimuthal)
        lens = geometry
        if lens.waist_ratio is None:
            w0 = optimal_waist(lens, channels, n_polar, n_azimuthal)
            lens = GaussianLens(lens.na, lens.fk, w0, lens.axis, lens.sigma_f)
        return _build_lens_grid(lens, channels, n_polar, n_azimuthal, direct)

    raise TypeError(f"unknown collection geometry {type(geometry).__name__}")
