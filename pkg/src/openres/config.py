"""Experiment configuration: flat key = value text with dotted sections.

The format is deliberately primitive (diff-friendly, no parser
dependency): one `key = value` per line, `#` comments, keys grouped by
dotted prefixes.  Complex numbers are written "re,im"; reals accept plain
decimals or exact fractions like -1/3; lists use ';' separators.

A family block looks like

    family.n = 2
    family.level1.e_intercept = 1.0
    family.level1.e_slope = -0.5
    family.level1.gamma_half_intercept = -0.495
    family.omega_scalar = 0.001,0.01        # or family.omega_1_2 = re,im

Bundled experiment configs shipping with the package reproduce the
standard two- and three-level scenarios (see `list_experiments`).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .hamiltonian import Affine, HamiltonianFamily, LevelSpec
from .sweep import SweepConfig

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config_text",
    "load_config",
    "list_experiments",
    "bundled_config_text",
]

MODES = ("sweep", "ep", "xsec-scan", "xsec-contour", "diagnose")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (message is line-anchored)."""


def parse_config_text(text: str) -> dict:
    """Parse flat config text into {key: (value_string, line_number)}."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return entries


def _real(value: str, key: str, lineno: int) -> float:
    value = value.strip()
    try:
        if "/" in value:
            num, den = value.split("/", 1)
            return float(num) / float(den)
        return float(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"line {lineno}: {key}: bad real {value!r}") from exc


def _complex(value: str, key: str, lineno: int) -> complex:
    parts = value.split(",")
    if len(parts) != 2:
        raise ConfigError(f"line {lineno}: {key}: expected 're,im', got {value!r}")
    return complex(
        _real(parts[0], key, lineno), _real(parts[1], key, lineno)
    )


def _int(value: str, key: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: {key}: bad integer {value!r}") from exc


def _bool(value: str, key: str, lineno: int) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"line {lineno}: {key}: bad boolean {value!r}")


class _Entries:
    """Typed access to the parsed key table with consumption tracking."""

    def __init__(self, entries):
        self.entries = entries
        self.used = set()

    def get(self, key, conv, default=None, required=False):
        if key not in self.entries:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return default
        self.used.add(key)
        value, lineno = self.entries[key]
        return conv(value, key, lineno)

    def unknown_keys(self):
        return sorted(set(self.entries) - self.used)


@dataclass
class EpOptions:
    search: str = "param"          # param | scale | coupling | generic
    a_min: float = 0.0
    a_max: float = 1.0
    s_min: float = 0.25
    s_max: float = 2.0
    two_d: bool = False
    fixed_a: float = 0.0           # for the coupling search
    cluster_radius: float = 0.05


@dataclass
class XsecOptions:
    a_values: tuple = ()
    energy_min: float | None = None
    energy_max: float | None = None
    energy_steps: int = 2001


@dataclass
class ExperimentConfig:
    description: str
    mode: str
    family: HamiltonianFamily
    sweep: SweepConfig
    xsec: XsecOptions
    ep: EpOptions
    compare_no_coupling: bool = False
    diagnose_a_values: tuple = ()
    source_text: str = ""

    @property
    def energy_grid_auto(self) -> bool:
        return self.xsec.energy_min is None


def _parse_family(e: _Entries) -> HamiltonianFamily:
    n = e.get("family.n", _int, required=True)
    if n < 2:
        raise ConfigError("family.n must be at least 2")
    levels = []
    for i in range(1, n + 1):
        prefix = f"family.level{i}"
        ei = e.get(f"{prefix}.e_intercept", _real, required=True)
        es = e.get(f"{prefix}.e_slope", _real, default=0.0)
        gi = e.get(f"{prefix}.gamma_half_intercept", _real, default=0.0)
        gs = e.get(f"{prefix}.gamma_half_slope", _real, default=0.0)
        levels.append(LevelSpec(Affine(ei, es), Affine(gi, gs)))
    omega_scalar = e.get("family.omega_scalar", _complex)
    matrix_keys = [
        k for k in e.entries if k.startswith("family.omega_") and k != "family.omega_scalar"
    ]
    if omega_scalar is not None and matrix_keys:
        raise ConfigError("give either family.omega_scalar or family.omega_i_j keys")
    if omega_scalar is not None:
        return HamiltonianFamily(levels, omega_scalar)
    coupling = np.zeros((n, n), dtype=complex)
    for key in matrix_keys:
        tail = key[len("family.omega_"):]
        try:
            i_s, j_s = tail.split("_", 1)
            i, j = int(i_s), int(j_s)
        except ValueError as exc:
            raise ConfigError(f"bad coupling key {key!r}") from exc
        if not (1 <= i <= n and 1 <= j <= n) or i == j:
            raise ConfigError(f"coupling key {key!r} out of range or diagonal")
        w = e.get(key, _complex)
        coupling[i - 1, j - 1] = w
        coupling[j - 1, i - 1] = w
    return HamiltonianFamily(levels, coupling)


def _parse_list(value: str, key: str, lineno: int) -> tuple:
    items = [p for p in value.split(";") if p.strip()]
    return tuple(_real(p, key, lineno) for p in items)


def config_from_entries(entries: dict, source_text: str = "") -> ExperimentConfig:
    e = _Entries(entries)
    description = e.get("description", lambda v, k, ln: v, default="")
    mode = e.get("mode", lambda v, k, ln: v.strip(), required=True)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    family = _parse_family(e)

    sweep = SweepConfig(
        a_min=e.get("sweep.a_min", _real, default=0.0),
        a_max=e.get("sweep.a_max", _real, default=1.0),
        steps=e.get("sweep.steps", _int, default=2001),
        refine_near_ep=e.get("sweep.refine_near_ep", _bool, default=True),
        refine_gap_threshold=e.get("sweep.refine_gap_threshold", _real, default=1e-2),
        max_refine_depth=e.get("sweep.max_refine_depth", _int, default=8),
        suspect_rigidity=e.get("sweep.suspect_rigidity", _real, default=0.8),
    )

    energy_grid = e.get("energy_grid", lambda v, k, ln: v.strip(), default="auto")
    xsec = XsecOptions(
        a_values=e.get("xsec.a_values", _parse_list, default=()),
        energy_steps=e.get("xsec.energy_steps", _int, default=2001),
    )
    if energy_grid != "auto":
        xsec.energy_min = e.get("energy_grid.min", _real, required=True)
        xsec.energy_max = e.get("energy_grid.max", _real, required=True)
        xsec.energy_steps = e.get("energy_grid.steps", _int, default=2001)
        if not xsec.energy_min < xsec.energy_max:
            raise ConfigError("energy_grid.min must be below energy_grid.max")
    elif "energy_grid.min" in entries or "energy_grid.max" in entries:
        raise ConfigError("energy_grid bounds given but energy_grid != explicit")

    ep = EpOptions(
        search=e.get("ep.search", lambda v, k, ln: v.strip(), default="param"),
        a_min=e.get("ep.a_min", _real, default=sweep.a_min),
        a_max=e.get("ep.a_max", _real, default=sweep.a_max),
        s_min=e.get("ep.s_min", _real, default=0.25),
        s_max=e.get("ep.s_max", _real, default=2.0),
        two_d=e.get("ep.two_d", _bool, default=False),
        fixed_a=e.get("ep.fixed_a", _real, default=0.0),
        cluster_radius=e.get("ep.cluster_radius", _real, default=0.05),
    )
    if ep.search not in ("param", "scale", "coupling", "generic"):
        raise ConfigError(f"unknown ep.search {ep.search!r}")

    cfg = ExperimentConfig(
        description=description,
        mode=mode,
        family=family,
        sweep=sweep,
        xsec=xsec,
        ep=ep,
        compare_no_coupling=e.get("compare_no_coupling", _bool, default=False),
        diagnose_a_values=e.get("diagnose.a_values", _parse_list, default=()),
        source_text=source_text,
    )

    unknown = e.unknown_keys()
    if unknown:
        lines = ", ".join(
            f"{k!r} (line {entries[k][1]})" for k in unknown
        )
        raise ConfigError(f"unknown keys: {lines}")
    if mode in ("xsec-scan",) and not cfg.xsec.a_values:
        raise ConfigError("xsec-scan mode needs xsec.a_values")
    if mode == "diagnose" and not cfg.diagnose_a_values:
        raise ConfigError("diagnose mode needs diagnose.a_values")
    return cfg


def load_config(text: str) -> ExperimentConfig:
    return config_from_entries(parse_config_text(text), source_text=text)


# ------------------------------------------------------------------ bundled

_BUNDLED = {
    "fig1_left": "Two-level eigenvalue sweep, weak complex coupling (crossing energies, nearly equal widths)",
    "fig1_right": "Two-level eigenvalue sweep, strong complex coupling (well separated widths)",
    "fig2_left": "Three-level eigenvalue sweep, weak complex coupling (triple energy crossing region)",
    "fig2_right": "Three-level eigenvalue sweep, strong complex coupling",
    "fig3": "Two-level cross-section scans and contour, weak coupling, with no-coupling twin",
    "fig4": "Two-level cross-section scans and contour, strong coupling, with no-coupling twin",
    "fig5": "Three-level cross-section scans and contour, weak coupling, with no-coupling twin",
    "kato": "Exact coupling-space EP roots of the [[1, k], [k, -1]] test family",
}


def list_experiments():
    """(name, description) pairs for the bundled configs."""
    return [(name, _BUNDLED[name]) for name in sorted(_BUNDLED)]


def bundled_config_text(name: str) -> str:
    if name not in _BUNDLED:
        raise ConfigError(f"unknown bundled experiment {name!r}")
    ref = resources.files("openres.experiments").joinpath(f"{name}.conf")
    return ref.read_text(encoding="utf-8")
