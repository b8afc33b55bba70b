"""Batch front-end: scenario configs in, sweep result tables out.

A scenario is one TOML file selecting a protocol, an emitter/collection
configuration, and a one-parameter sweep. ``run`` evaluates every sweep point
(optionally for both correction settings) and writes a CSV whose provenance
header echoes every resolved setting, so a result file is reproducible from
its own header. ``compare`` diffs two result files row by row.

Units at this interface: times in units of 1/Gamma, trap frequencies as
mu/Gamma, angles in degrees. Internally everything is converted to radians.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

from . import __version__, fock
from .collection import DipoleChannel, GaussianLens, ZeroNA
from .phase_space import ThermalState, isotropic_trap
from .protocols import (
    FidelityResult,
    HeraldWindow,
    NodeConfig,
    geometry_contrast_numeric,
    pi_sigma_high_na_fidelity,
    single_photon_result,
    time_bin_fidelity,
    two_photon_fidelity,
)

PROTOCOLS = (
    "single-photon",
    "two-photon",
    "two-photon-geometry",
    "time-bin",
    "spectrum",
    "pi-sigma",
)

SWEEPABLE = {
    "single-photon": ("nbar", "chi"),
    "two-photon": ("nbar", "na", "dt_max"),
    "two-photon-geometry": ("nbar", "xi"),
    "time-bin": ("nbar", "tau", "dt_max", "na"),
    "pi-sigma": ("nbar", "na"),
    "spectrum": ("mu",),
}

CSV_HEADER = "sweep_param, value, fidelity, contrast, efficiency, corrected"

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3

DEFAULT_CONFIG = """\
[scenario]
protocol = "two-photon"
correction = "off"          # "on", "off", or "both"
output = "results.csv"
json_mirror = false

[sweep]
parameter = "nbar"          # one of: nbar, na, xi, tau, dt_max, chi, mu
values = [20.0, 100.0]      # nonempty, strictly monotone

[node]
eta = 0.07                  # Lamb-Dicke parameter (isotropic trap)
mu = 0.1                    # trap frequency over decay rate
nbar = 20.0                 # thermal occupation (all modes)
dipole = [1.0, 0.0, 0.0]    # single-channel protocols
dipoles = [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]  # two-photon channels H, V
excitation = [1.0, 0.0, 0.0]  # unit pulse direction; [] disables the pulse
excitation_probability = 0.05  # single-photon drive strength
link_phase_deg = 0.0

[node_b]                    # optional per-key overrides for the second node

[geometry]
kind = "zero-na"            # "zero-na" or "lens"
direction = [0.0, 0.0, 1.0] # zero-na collection direction
na = 0.6                    # lens numerical aperture
fk = 1e5                    # lens focal length in wavenumbers
waist_ratio = "optimal"     # fibre waist over lens aperture, or a number
axis = [0.0, 0.0, 1.0]      # lens optical axis

[window]
t_max = inf                 # herald cutoff time
dt_max = inf                # coincidence window |t_V - t_H|; inf disables it

[quadrature]
n_time = 0                  # herald-time nodes; 0 keeps the adaptive default
n_polar = 0                 # collection-grid polar nodes; 0 = default
n_azimuthal = 0             # collection-grid azimuthal nodes; 0 = default
oracle_cutoff = 0           # Fock-space cutoff in --oracle mode; 0 = auto

[single_photon]
chi_deg = 90.0              # angle between excitation and collection
detector_sign = 1

[two_photon]
detector_parity = 1         # +1 same-side clicks, -1 opposite

[split_geometry]
xi_deg = 45.0               # arm tilt from the shared axis
two_sided = false

[time_bin]
tau = 10.0                  # bin separation
detector_parity = 1

[pi_sigma]
transverse_only = false
sigma_sign = 1
detector_parity = 1

[spectrum]
detuning_min = -30.0        # spectral grid, units of the decay rate
detuning_max = 30.0
n_detuning = 1201
"""


class ConfigError(Exception):
    """Validation failure carrying the offending key for line lookup."""

    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ResultRow:
    value: float
    fidelity: float
    contrast: float
    efficiency: float
    corrected: bool
    wall_time: float


def _defaults() -> dict:
    return tomllib.loads(DEFAULT_CONFIG)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(key, f"unknown config key '{where}'")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _unit(vec, key: str) -> np.ndarray:
    v = np.asarray(vec, dtype=float)
    if v.shape != (3,):
        raise ConfigError(key, f"'{key}' must be a 3-vector")
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ConfigError(key, f"'{key}' must be a unit vector")
    return v


@dataclass(frozen=True)
class Scenario:
    """Fully resolved run configuration (defaults applied and validated)."""

    protocol: str
    correction: str
    output: Path
    json_mirror: bool
    sweep_param: str
    sweep_values: tuple[float, ...]
    config: dict

    @property
    def corrected_variants(self) -> tuple[bool, ...]:
        return {"off": (False,), "on": (True,), "both": (False, True)}[self.correction]


def parse_scenario(text: str, base_dir: Path | None = None) -> Scenario:
    try:
        user = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("", f"TOML syntax error: {exc}") from exc
    # node_b holds sparse overrides of node, so it validates against the
    # node schema rather than against its own (empty) defaults
    node_b = user.pop("node_b", {})
    cfg = _merge(_defaults(), user)
    for key in node_b:
        if key not in cfg["node"]:
            raise ConfigError(key, f"unknown config key 'node_b.{key}'")
    cfg["node_b"] = node_b

    protocol = cfg["scenario"]["protocol"]
    if protocol not in PROTOCOLS:
        raise ConfigError("protocol", f"unknown protocol '{protocol}'")
    correction = cfg["scenario"]["correction"]
    if correction not in ("on", "off", "both"):
        raise ConfigError("correction", "correction must be 'on', 'off', or 'both'")
    # schemes without a spin-dependent correction would emit duplicate rows
    if protocol in ("spectrum", "two-photon-geometry", "pi-sigma") and correction != "off":
        raise ConfigError(
            "correction", f"protocol '{protocol}' has no correction; use \"off\""
        )

    param = cfg["sweep"]["parameter"]
    if param not in SWEEPABLE[protocol]:
        allowed = ", ".join(SWEEPABLE[protocol])
        raise ConfigError(
            "parameter", f"protocol '{protocol}' sweeps one of: {allowed}"
        )
    values = [float(v) for v in cfg["sweep"]["values"]]
    if not values:
        raise ConfigError("values", "sweep grid must be nonempty")
    diffs = np.diff(values)
    if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ConfigError("values", "sweep grid must be strictly monotone")

    node = cfg["node"]
    for side, nd in (("node", node), ("node_b", {**node, **cfg["node_b"]})):
        if nd["eta"] < 0:
            raise ConfigError("eta", f"[{side}] eta must be >= 0")
        if nd["mu"] <= 0:
            raise ConfigError("mu", f"[{side}] mu must be > 0")
        if nd["nbar"] < 0:
            raise ConfigError("nbar", f"[{side}] nbar must be >= 0")
        if not 0.0 <= nd["excitation_probability"] <= 1.0:
            raise ConfigError(
                "excitation_probability",
                f"[{side}] excitation_probability must be in [0, 1]",
            )
        if nd["excitation"]:
            _unit(nd["excitation"], "excitation")
        np.asarray(nd["dipole"], dtype=float)
        if protocol == "two-photon" and len(nd["dipoles"]) != 2:
            raise ConfigError("dipoles", f"[{side}] needs exactly two channel dipoles")
        for dip in nd["dipoles"]:
            np.asarray(dip, dtype=float)

    # lens settings are validated even under kind = "zero-na": an na sweep
    # builds a lens from them regardless of the configured kind
    geo = cfg["geometry"]
    if geo["kind"] not in ("zero-na", "lens"):
        raise ConfigError("kind", "geometry kind must be 'zero-na' or 'lens'")
    _unit(geo["direction"], "direction")
    if not 0.0 < geo["na"] <= 1.0:
        raise ConfigError("na", "lens na must lie in (0, 1]")
    if geo["waist_ratio"] != "optimal" and not float(geo["waist_ratio"]) > 0:
        raise ConfigError("waist_ratio", "waist_ratio must be 'optimal' or > 0")
    _unit(geo["axis"], "axis")
    if param == "na":
        for v in values:
            if not 0.0 < v <= 1.0:
                raise ConfigError("values", "swept na values must lie in (0, 1]")
    if param == "nbar" and min(values) < 0:
        raise ConfigError("values", "swept nbar values must be >= 0")
    if param in ("tau", "dt_max") and min(values) <= 0:
        raise ConfigError("values", f"swept {param} values must be > 0")
    if param == "mu" and min(values) <= 0:
        raise ConfigError("values", "swept mu values must be > 0")

    window = cfg["window"]
    if not window["t_max"] > 0:
        raise ConfigError("t_max", "t_max must be > 0")
    if not window["dt_max"] > 0:
        raise ConfigError("dt_max", "dt_max must be > 0")
    quad = cfg["quadrature"]
    for key in ("n_time", "n_polar", "n_azimuthal", "oracle_cutoff"):
        if quad[key] < 0 or quad[key] != int(quad[key]):
            raise ConfigError(key, f"{key} must be a nonnegative integer")
    if cfg["time_bin"]["tau"] <= 0:
        raise ConfigError("tau", "time_bin tau must be > 0")
    if cfg["spectrum"]["n_detuning"] < 2:
        raise ConfigError("n_detuning", "n_detuning must be at least 2")
    if not cfg["spectrum"]["detuning_max"] > cfg["spectrum"]["detuning_min"]:
        raise ConfigError("detuning_max", "detuning_max must exceed detuning_min")
    if protocol == "time-bin" and not node["excitation"]:
        raise ConfigError("excitation", "time-bin requires an excitation direction")

    output = Path(cfg["scenario"]["output"])
    if base_dir is not None and not output.is_absolute():
        output = base_dir / output
    return Scenario(
        protocol=protocol,
        correction=correction,
        output=output,
        json_mirror=bool(cfg["scenario"]["json_mirror"]),
        sweep_param=param,
        sweep_values=tuple(values),
        config=cfg,
    )


def _geometry(scn: Scenario, na_override: float | None = None):
    geo = scn.config["geometry"]
    if geo["kind"] == "zero-na" and na_override is None:
        return ZeroNA(_unit(geo["direction"], "direction"))
    na = float(geo["na"] if na_override is None else na_override)
    waist = None if geo["waist_ratio"] == "optimal" else float(geo["waist_ratio"])
    return GaussianLens(na, float(geo["fk"]), waist, _unit(geo["axis"], "axis"))


def _side_settings(scn: Scenario, side: str) -> dict:
    nd = dict(scn.config["node"])
    if side == "b":
        nd.update(scn.config["node_b"])
    return nd


def _node_config(
    scn: Scenario,
    nd: dict,
    channels: tuple[DipoleChannel, ...],
    nbar_override: float | None = None,
    na_override: float | None = None,
    excitation=None,
) -> NodeConfig:
    nbar = float(nd["nbar"] if nbar_override is None else nbar_override)
    return NodeConfig(
        trap=isotropic_trap(float(nd["mu"]), float(nd["eta"])),
        motion=ThermalState([nbar] * 3),
        geometry=_geometry(scn, na_override),
        channels=channels,
        excitation=excitation,
        excitation_probability=float(nd["excitation_probability"]),
        link_phase=np.deg2rad(float(nd["link_phase_deg"])),
    )


def _window(scn: Scenario, dt_override: float | None = None) -> HeraldWindow:
    w = scn.config["window"]
    dt = float(w["dt_max"] if dt_override is None else dt_override)
    # an unbounded coincidence window is the plain unwindowed integral
    return HeraldWindow(t_max=float(w["t_max"]), dt_max=None if np.isinf(dt) else dt)


def _quad_kwargs(scn: Scenario, oracle: bool) -> dict:
    q = scn.config["quadrature"]
    return {
        "n_time": int(q["n_time"]) or None,
        "n_polar": int(q["n_polar"]) or None,
        "n_azimuthal": int(q["n_azimuthal"]) or None,
        "oracle": oracle,
        "oracle_cutoff": int(q["oracle_cutoff"]) or None,
    }


def _channel(nd_key_vec, label: str) -> DipoleChannel:
    return DipoleChannel.from_raw(label, np.asarray(nd_key_vec, dtype=float))


def evaluate_point(
    scn: Scenario, value: float, corrected: bool, oracle: bool
) -> tuple[ResultRow, object]:
    """One sweep point. Returns the result row plus protocol side data
    (the spectrum object for spectrum runs, else None)."""
    started = time.perf_counter()
    cfg = scn.config
    node_cfg = cfg["node"]
    param = scn.sweep_param
    nbar = value if param == "nbar" else None
    na = value if param == "na" else None
    quad = _quad_kwargs(scn, oracle)
    side_data = None

    if scn.protocol == "single-photon":
        chi = np.deg2rad(
            value if param == "chi" else float(cfg["single_photon"]["chi_deg"])
        )
        k_ex = np.array([np.sin(chi), 0.0, np.cos(chi)])
        nodes = []
        for side in ("a", "b"):
            nd = _side_settings(scn, side)
            channels = (_channel(nd["dipole"], "H"),)
            nodes.append(_node_config(scn, nd, channels, nbar, na, excitation=k_ex))
        res = single_photon_result(
            nodes[0],
            nodes[1],
            window=_window(scn),
            corrected=corrected,
            detector_sign=int(cfg["single_photon"]["detector_sign"]),
            **quad,
        )
    elif scn.protocol == "two-photon":
        dt = value if param == "dt_max" else None
        labels = ("H", "V")
        nodes = []
        for side in ("a", "b"):
            nd = _side_settings(scn, side)
            channels = tuple(
                _channel(dip, lab) for dip, lab in zip(nd["dipoles"], labels)
            )
            excitation = _unit(nd["excitation"], "excitation") if nd["excitation"] else None
            nodes.append(_node_config(scn, nd, channels, nbar, na, excitation))
        res = two_photon_fidelity(
            nodes[0],
            nodes[1],
            window=_window(scn, dt),
            corrected=corrected,
            detector_parity=int(cfg["two_photon"]["detector_parity"]),
            **quad,
        )
    elif scn.protocol == "two-photon-geometry":
        xi = np.deg2rad(
            value if param == "xi" else float(cfg["split_geometry"]["xi_deg"])
        )
        nb = value if param == "nbar" else float(node_cfg["nbar"])
        contrast, eff = geometry_contrast_numeric(
            float(node_cfg["eta"]),
            float(xi),
            float(nb),
            two_sided=bool(cfg["split_geometry"]["two_sided"]),
            frequency_ratio=float(node_cfg["mu"]),
        )
        rho = np.zeros((4, 4), dtype=complex)
        rho[1, 1] = rho[2, 2] = 0.5
        rho[1, 2] = rho[2, 1] = contrast / 2.0
        res = FidelityResult(rho, (1.0 + contrast) / 2.0, contrast, eff)
    elif scn.protocol == "time-bin":
        tau = float(value if param == "tau" else cfg["time_bin"]["tau"])
        dt = value if param == "dt_max" else None
        channels = (_channel(node_cfg["dipole"], "H"),)
        node = _node_config(
            scn,
            _side_settings(scn, "a"),
            channels,
            nbar,
            na,
            _unit(node_cfg["excitation"], "excitation"),
        )
        res = time_bin_fidelity(
            node,
            tau,
            window=_window(scn, dt),
            corrected=corrected,
            detector_parity=int(cfg["time_bin"]["detector_parity"]),
            **quad,
        )
    elif scn.protocol == "pi-sigma":
        ps = cfg["pi_sigma"]
        geo = cfg["geometry"]
        res = pi_sigma_high_na_fidelity(
            eta=float(node_cfg["eta"]),
            na=float(geo["na"] if na is None else na),
            nbar=float(node_cfg["nbar"] if nbar is None else nbar),
            transverse_only=bool(ps["transverse_only"]),
            sigma_sign=int(ps["sigma_sign"]),
            detector_parity=int(ps["detector_parity"]),
            frequency_ratio=float(node_cfg["mu"]),
            fk=float(geo["fk"]),
            n_polar=quad["n_polar"],
            n_azimuthal=quad["n_azimuthal"],
            oracle=oracle,
            oracle_cutoff=quad["oracle_cutoff"],
        )
    else:  # spectrum
        sp = cfg["spectrum"]
        grid = np.linspace(
            float(sp["detuning_min"]), float(sp["detuning_max"]), int(sp["n_detuning"])
        )
        spectrum = fock.emission_spectrum_1d(
            float(node_cfg["eta"]),
            float(value),
            float(node_cfg["nbar"]),
            grid,
            cutoff=int(cfg["quadrature"]["oracle_cutoff"]) or None,
        )
        if not spectrum.converged:
            raise fock.ConvergenceError(
                f"spectrum boundary-population check: cutoff {spectrum.cutoff} "
                f"leaves {spectrum.boundary_population:.3g} in the top Fock level"
            )
        res = FidelityResult(
            np.zeros((4, 4)), float("nan"), float("nan"), float("nan")
        )
        side_data = spectrum

    row = ResultRow(
        value=float(value),
        fidelity=res.fidelity,
        contrast=res.contrast,
        efficiency=res.efficiency,
        corrected=corrected,
        wall_time=time.perf_counter() - started,
    )
    return row, side_data


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _flatten(prefix: str, obj) -> list[tuple[str, str]]:
    if isinstance(obj, dict):
        items = []
        for key in sorted(obj):
            items.extend(_flatten(f"{prefix}.{key}" if prefix else key, obj[key]))
        return items
    if isinstance(obj, bool):
        return [(prefix, "true" if obj else "false")]
    if isinstance(obj, float):
        return [(prefix, _fmt(obj))]
    if isinstance(obj, (list, tuple)):
        inner = ", ".join(_flatten("", v)[0][1] for v in obj)
        return [(prefix, f"[{inner}]")]
    return [(prefix, str(obj))]


def provenance_lines(scn: Scenario, oracle: bool) -> list[str]:
    lines = [
        f"# heraldkick {__version__}",
        f"# oracle = {'true' if oracle else 'false'}",
    ]
    for key, value in _flatten("", scn.config):
        lines.append(f"# {key} = {value}")
    return lines


def _spectrum_path(output: Path, value: float) -> Path:
    return output.with_name(f"{output.stem}_mu{value:g}{output.suffix or '.csv'}")


def write_results(
    scn: Scenario, rows: list[ResultRow], side: list[object], oracle: bool
) -> None:
    header = provenance_lines(scn, oracle)
    body = [CSV_HEADER]
    for row in rows:
        body.append(
            ", ".join(
                [
                    scn.sweep_param,
                    _fmt(row.value),
                    _fmt(row.fidelity),
                    _fmt(row.contrast),
                    _fmt(row.efficiency),
                    "true" if row.corrected else "false",
                ]
            )
        )
    scn.output.parent.mkdir(parents=True, exist_ok=True)
    scn.output.write_text("\n".join(header + body) + "\n", encoding="utf-8")

    for row, data in zip(rows, side):
        if data is None:
            continue
        path = _spectrum_path(scn.output, row.value)
        lines = list(header)
        lines.append(f"# spectrum mu = {_fmt(row.value)}")
        lines.append(f"# fock cutoff = {data.cutoff}")
        lines.append("detuning, density")
        for d, s in zip(data.detunings, data.density):
            lines.append(f"{_fmt(d)}, {_fmt(s)}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    if scn.json_mirror:
        payload = {
            "version": __version__,
            "oracle": oracle,
            "config": scn.config,
            "rows": [
                {
                    "sweep_param": scn.sweep_param,
                    "value": row.value,
                    "fidelity": row.fidelity,
                    "contrast": row.contrast,
                    "efficiency": row.efficiency,
                    "corrected": row.corrected,
                }
                for row in rows
            ],
        }
        scn.output.with_suffix(".json").write_text(
            json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n",
            encoding="utf-8",
        )


def run_scenario(scn: Scenario, threads: int | None, oracle: bool) -> list[ResultRow]:
    points = [
        (value, corrected)
        for value in scn.sweep_values
        for corrected in scn.corrected_variants
    ]
    workers = threads or os.cpu_count() or 1
    if workers > 1 and len(points) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(evaluate_point, scn, v, c, oracle) for v, c in points
            ]
            results = [f.result() for f in futures]
    else:
        results = [evaluate_point(scn, v, c, oracle) for v, c in points]
    rows = [r for r, _ in results]
    side = [s for _, s in results]
    write_results(scn, rows, side, oracle)
    return rows


def _line_of(text: str, key: str) -> int:
    if key:
        for i, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0]
            if key in stripped:
                return i
    return 1


def _read_table(path: Path) -> tuple[str, list[list[str]]]:
    header = None
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if header is None:
            header = line
            continue
        rows.append([cell.strip() for cell in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no table header found")
    return header, rows


def compare_results(path_a: Path, path_b: Path, tol: float) -> int:
    header_a, rows_a = _read_table(path_a)
    header_b, rows_b = _read_table(path_b)
    if header_a != header_b:
        print(f"schema mismatch: {header_a!r} vs {header_b!r}", file=sys.stderr)
        return EXIT_CONFIG
    if len(rows_a) != len(rows_b):
        print(
            f"schema mismatch: {len(rows_a)} rows vs {len(rows_b)} rows",
            file=sys.stderr,
        )
        return EXIT_CONFIG

    worst = 0.0
    failed = False
    for i, (ra, rb) in enumerate(zip(rows_a, rows_b)):
        if len(ra) != len(rb):
            print(f"schema mismatch on row {i}: column counts differ", file=sys.stderr)
            return EXIT_CONFIG
        deltas = []
        for ca, cb in zip(ra, rb):
            try:
                xa, xb = float(ca), float(cb)
            except ValueError:
                if ca != cb:
                    print(f"row {i}: non-numeric mismatch {ca!r} vs {cb!r}")
                    failed = True
                continue
            if np.isnan(xa) and np.isnan(xb):
                deltas.append((0.0, 0.0))
                continue
            abs_d = abs(xa - xb)
            scale = max(abs(xa), abs(xb))
            rel_d = abs_d / scale if scale > 0 else 0.0
            deltas.append((abs_d, rel_d))
        max_abs = max((d for d, _ in deltas), default=0.0)
        max_rel = max((d for _, d in deltas), default=0.0)
        worst = max(worst, min(max_abs, max_rel))
        print(f"row {i}: max_abs_delta={max_abs:.3e} max_rel_delta={max_rel:.3e}")
        if not (max_abs <= tol or max_rel <= tol):
            failed = True
    print(f"worst delta {worst:.3e} against tolerance {tol:.3e}")
    return EXIT_TOLERANCE if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="heraldkick",
        description="Motional-error budgets for heralded entanglement protocols.",
    )
    parser.add_argument(
        "--emit-config-defaults",
        action="store_true",
        help="print a fully commented default scenario config and exit",
    )
    sub = parser.add_subparsers(dest="command")

    run_p = sub.add_parser("run", help="evaluate a scenario config")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--threads", type=int, default=None, metavar="N")
    run_p.add_argument(
        "--oracle",
        action="store_true",
        help="evaluate kick moments with truncated Fock matrices (desk scale)",
    )

    cmp_p = sub.add_parser("compare", help="diff two result files")
    cmp_p.add_argument("a", type=Path)
    cmp_p.add_argument("b", type=Path)
    cmp_p.add_argument("--tol", type=float, default=0.0)

    args = parser.parse_args(argv)
    if args.emit_config_defaults:
        sys.stdout.write(DEFAULT_CONFIG)
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    if args.command == "compare":
        try:
            return compare_results(args.a, args.b, args.tol)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scenario = parse_scenario(text, base_dir=args.config.parent)
    except ConfigError as exc:
        line = _line_of(text, exc.key)
        print(f"{args.config}:{line}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        rows = run_scenario(scenario, args.threads, args.oracle)
    except fock.ConvergenceError as exc:
        print(f"error: convergence check failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(f"wrote {scenario.output} ({len(rows)} rows)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
