"""TOML model files.

Schema (all tables optional except ``weights`` and one boundary choice)::

    [lattice]
    N = 3
    Omega = [1, 3, 4]          # explicit boundary positions, or
    staircase = 2              # Ω = (1, 1+m, 1+2m, …), or
    segments = [[0, 0.5], [1, 1.5]]   # piecewise runs (a_i, b_i)

    [weights]
    n = 2
    x = [1.3, 0.6]
    y = { "1" = 2.0 }          # square-row residues and their weights
    m = 2                      # staircase parameter for the limit formulas

    [run]                      # defaults for command-line flags
    seed = 7
    samples = 1000

The row pattern ``c`` is implied by the square-row residues.  ``m`` defaults
to ``lattice.staircase`` when that is given.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .lattice import LatticeSpec, staircase_omega
from .piecewise import PiecewiseModel, boundary_from_segments
from .schur import WeightModel

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "bundled_path", "bundled_lattices"]

DATA = Path(__file__).parent / "data"


class ConfigError(ValueError):
    """Invalid or inconsistent model file."""


@dataclass(frozen=True)
class RunConfig:
    """A parsed model file."""

    spec: LatticeSpec
    model: WeightModel
    segments: tuple[tuple[float, float], ...] | None = None
    run: dict = field(default_factory=dict)
    source: str = "<string>"
    digest: str = ""

    @property
    def is_uniform(self) -> bool:
        return self.model.m is not None and self.segments is None

    def piecewise(self) -> PiecewiseModel:
        if self.segments is None:
            raise ConfigError("model has no piecewise segments")
        return PiecewiseModel.from_segments(self.segments, self.model)


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing '{key}' in [{where}]")
    return table[key]


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse the TOML text of a model file."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    digest = hashlib.sha256(text.encode()).hexdigest()
    lat = raw.get("lattice", {})
    w = _require(raw, "weights", "") if "weights" in raw else None
    if w is None:
        raise ConfigError("missing [weights] table")
    try:
        x = tuple(float(v) for v in _require(w, "x", "weights"))
        n = int(w.get("n", len(x)))
        y = {int(k): float(v) for k, v in dict(w.get("y", {})).items()}
        m = w.get("m", lat.get("staircase"))
        model = WeightModel(n, x, y, int(m) if m is not None else None)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: bad [weights]: {exc}") from exc
    choices = [k for k in ("Omega", "staircase", "segments") if k in lat]
    if len(choices) != 1:
        raise ConfigError(f"{source}: [lattice] needs exactly one of Omega, staircase, segments")
    segments = None
    try:
        if "Omega" in lat:
            omega = tuple(int(v) for v in lat["Omega"])
            N = int(lat.get("N", len(omega)))
        elif "staircase" in lat:
            N = int(_require(lat, "N", "lattice"))
            omega = staircase_omega(int(lat["staircase"]), N)
        else:
            N = int(_require(lat, "N", "lattice"))
            segments = tuple((float(a), float(b)) for a, b in lat["segments"])
            omega, _ = boundary_from_segments(segments, N)
        spec = LatticeSpec(N, omega, model.c_pattern(N), model)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: bad [lattice]: {exc}") from exc
    return RunConfig(spec, model, segments, dict(raw.get("run", {})), source, digest)


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a model file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc
    return parse_config(text, str(p))


def bundled_path(name: str) -> Path:
    """Path of a bundled file, e.g. ``"models/uniform_m2_n1.toml"``."""
    p = DATA / name
    if not p.exists():
        raise ConfigError(f"no bundled file {name}")
    return p


def bundled_lattices() -> list[RunConfig]:
    """The tiny lattices used by the verification suites, in name order."""
    return [load_config(p) for p in sorted((DATA / "lattices").glob("*.toml"))]
