"""Command-line interface: ``sqhex sample | verify | limits``.

Every output file starts with a provenance record (package version, command,
seed and the SHA-256 of the model file), is written atomically and depends
only on ``(config, flags)``.  Exit codes: 0 ok, 2 configuration error,
3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import functools
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4

#: bump when a CSV layout changes
CSV_VERSION = 1


class VerificationFailed(Exception):
    """At least one verification suite failed."""


NUMERIC_ERRORS = (ArithmeticError, FloatingPointError, np.linalg.LinAlgError)


def _guarded(fn):
    """Map exceptions to the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except VerificationFailed as exc:
            click.echo(f"verification failed: {exc}", err=True)
            sys.exit(EXIT_VERIFY)
        except NUMERIC_ERRORS as exc:
            click.echo(f"numerical failure: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)

    return wrapper


# ---------------------------------------------------------------------------
# output helpers


def _provenance(command: str, cfg: RunConfig | None, seed: int | None) -> dict:
    return {
        "tool": "sqhex",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config_sha256": cfg.digest if cfg is not None else None,
    }


_UMASK = os.umask(0)
os.umask(_UMASK)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else f"{v:.12g}"


def _write_csv(path: Path, prov: dict, columns: list[str], rows) -> None:
    head = dict(prov, csv_version=CSV_VERSION)
    lines = ["# " + json.dumps(head, sort_keys=True), ",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _parse_floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc
    return vals


def _parse_ints(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc


def _seed(cfg: RunConfig, seed: int | None) -> int:
    seed = seed if seed is not None else cfg.run.get("seed")
    if seed is None:
        raise ConfigError("a seed is required: pass --seed or set [run] seed")
    if int(seed) < 0:
        raise ConfigError("seed must be nonnegative")
    return int(seed)


def _kappas(cfg: RunConfig, text: str | None) -> list[float]:
    ks = _parse_floats(text) or [float(k) for k in cfg.run.get("kappa", [0.25, 0.5, 0.75])]
    if any(not 0 <= k < 1 for k in ks):
        raise ConfigError("every κ must lie in [0, 1)")
    return ks


# ---------------------------------------------------------------------------
# svg


def _height_svg(xs: np.ndarray, ys: np.ndarray, hs: np.ndarray, prov: dict) -> str:
    """Face centroids coloured by mean height (dark = low)."""
    pad, scale = 10.0, 12.0
    x0, y1 = xs.min(), ys.max()
    width = (xs.max() - x0) * scale + 2 * pad
    height = (y1 - ys.min()) * scale + 2 * pad
    lo, hi = float(hs.min()), float(hs.max())
    span = hi - lo if hi > lo else 1.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1f}" height="{height:.1f}" viewBox="0 0 {width:.1f} {height:.1f}">',
        f"<!-- {json.dumps(prov, sort_keys=True)} -->",
        f'<rect width="{width:.1f}" height="{height:.1f}" fill="white"/>',
    ]
    for x, y, h in zip(xs, ys, hs):
        g = int(round(40 + 200 * (h - lo) / span))
        cx = (x - x0) * scale + pad
        cy = (y1 - y) * scale + pad
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{0.45 * scale:.2f}" fill="rgb({g},{g},{255 - g // 2})"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# commands


@click.group()
@click.version_option(__version__, prog_name="sqhex")
def main() -> None:
    """Dimers on contracting square-hexagon lattices."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Model file (TOML).")
@click.option("--seed", type=int, default=None, help="Random seed (mandatory here or in [run]).")
@click.option("--samples", type=int, default=None, help="Number of samples.")
@click.option("--method", type=click.Choice(["kernel", "kasteleyn"]), default="kernel", show_default=True)
@click.option("--rows", default=None, help="Comma-separated lattice rows whose signatures are recorded (default: all).")
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False), show_default=True)
@_guarded
def sample(config_path, seed, samples, method, rows, out_dir):
    """Draw exact samples; write samples.jsonl, height.csv and height.svg."""
    from .kasteleyn import determinantal_samples
    from .lattice import MatchingRecord, build_lattice, height_field, signatures_to_matching
    from .sampler import CoordinateChainSampler

    cfg = load_config(config_path)
    seed = _seed(cfg, seed)
    count = int(samples if samples is not None else cfg.run.get("samples", 1000))
    if count < 1:
        raise ConfigError("--samples must be positive")
    lat = build_lattice(cfg.spec)
    n_rows = 2 * cfg.spec.N + 1
    keep = _parse_ints(rows) or list(range(1, n_rows + 1))
    if any(not 1 <= r <= n_rows for r in keep):
        raise ConfigError(f"rows must lie in 1..{n_rows}")
    prov = _provenance("sample", cfg, seed) | {"method": method, "samples": count}

    if method == "kernel":
        sampler = CoordinateChainSampler(cfg.spec)
        records = []
        for b0 in range(0, count, 1000):
            for seq in sampler.full_chains(seed, range(b0, min(b0 + 1000, count))):
                edges = signatures_to_matching(lat, seq)
                records.append(MatchingRecord(edges, seq, lat.matching_weight(edges)))
    else:
        records = determinantal_samples(lat, seed, count)

    lines = [json.dumps({"provenance": prov}, sort_keys=True)]
    total = None
    for k, rec in enumerate(records):
        body = rec.to_json(lat)
        body["signatures"] = {str(r): list(rec.signatures[r - 1]) for r in keep}
        lines.append(json.dumps({"index": k, **body}, sort_keys=True))
        h = height_field(lat, rec.edges, check=False).values.astype(float)
        total = h if total is None else total + h
    out = Path(out_dir)
    _atomic_write(out / "samples.jsonl", "\n".join(lines) + "\n")

    mean = total / count
    cents = lat.dual.centroids
    xs = np.array([float(c[0]) for c in cents])
    ys = np.array([float(c[1]) for c in cents])
    _write_csv(out / "height.csv", prov, ["x", "y", "mean_height"], zip(xs, ys, mean))
    _atomic_write(out / "height.svg", _height_svg(xs, ys, mean, prov))
    click.echo(f"wrote {count} samples to {out}")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(dir_okay=False), help="Optional model; its lattice is added to the partition-function check.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the randomized suites.")
@click.option("--samples", type=int, default=20000, show_default=True, help="Samples per sampler in the sampler suite.")
@click.option("--suite", "suites", multiple=True, help="Run only these suites (repeatable).")
@click.option("--inject-sign-error", type=int, default=None, help="Negative control: flip one Kasteleyn sign.")
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False), show_default=True)
@_guarded
def verify(config_path, seed, samples, suites, inject_sign_error, out_dir):
    """Run every invariant suite; write verify_report.json."""
    from .verify import REPORT_SCHEMA, Check, SuiteResult, run_suites

    cfg = load_config(config_path) if config_path else None
    try:
        results = run_suites(list(suites) or None, seed=seed, samples=samples, inject_sign_error=inject_sign_error)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg is not None and cfg.spec.N <= 4:
        from .kasteleyn import kasteleyn_matrix
        from .lattice import build_lattice, enumerate_matchings
        from .schur import partition_function

        lat = build_lattice(cfg.spec)
        Z = math.fsum(r.weight for r in enumerate_matchings(lat))
        K = kasteleyn_matrix(lat, inject_sign_error=None if inject_sign_error is None else inject_sign_error % len(lat.edges))
        results.append(
            SuiteResult(
                "config_model",
                [
                    Check("formula vs enumeration", abs(partition_function(lat) - Z) / Z, 1e-8),
                    Check("|det K| vs enumeration", abs(K.abs_det() - Z) / Z, 1e-8),
                ],
            )
        )
    report = {
        "schema": REPORT_SCHEMA,
        "provenance": _provenance("verify", cfg, seed) | {"samples": samples, "inject_sign_error": inject_sign_error},
        "suites": [r.to_json() for r in results],
        "pass": all(r.passed for r in results),
    }
    _write_json(Path(out_dir) / "verify_report.json", report)
    for r in results:
        click.echo(f"{'PASS' if r.passed else 'FAIL'}  {r.name}")
    if not report["pass"]:
        raise VerificationFailed(", ".join(r.name for r in results if not r.passed))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Model file (TOML).")
@click.option("--kappa", default=None, help="Comma-separated κ values (default: [run] kappa or 0.25,0.5,0.75).")
@click.option("--seed", type=int, default=None, help="Seed for the Monte Carlo covariance check.")
@click.option("--samples", type=int, default=None, help="Monte Carlo samples for covariance_report.json (0 skips).")
@click.option("--rows", default=None, help="Comma-separated power-sum orders l for the covariance report (default 1).")
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False), show_default=True)
@_guarded
def limits(config_path, kappa, seed, samples, rows, out_dir):
    """Limit moments, density, frozen boundary and covariance; compare with Monte Carlo."""
    from . import asymptotics as asy
    from .fluctuations import cov_limit_uniform, mc_covariance
    from .piecewise import cov_limit_piecewise, piecewise_frozen_boundary, piecewise_moments, piecewise_root
    from .sampler import CoordinateChainSampler, level_of_kappa

    cfg = load_config(config_path)
    ks = _kappas(cfg, kappa)
    count = int(samples if samples is not None else cfg.run.get("samples", 0))
    seed = _seed(cfg, seed) if count > 0 else seed
    orders = _parse_ints(rows) or [1]
    if any(l < 1 for l in orders):
        raise ConfigError("power-sum orders must be positive")
    out = Path(out_dir)
    prov = _provenance("limits", cfg, seed)
    W = cfg.model
    uniform = cfg.is_uniform
    if not uniform and cfg.segments is None:
        raise ConfigError("limits need a staircase boundary (with m) or piecewise segments")
    pm = None if uniform else cfg.piecewise()

    # moments
    P = 5
    mom_rows = []
    for k in ks:
        if uniform:
            vals = [asy.limit_moments(k, p, W) for p in range(P)]
        else:
            vals = [piecewise_moments(k, p, pm) for p in range(P)]
        mom_rows.append([k, *vals])
    _write_csv(out / "moments.csv", prov, ["kappa", *[f"p{p}" for p in range(P)]], mom_rows)

    # density grid in the rescaled coordinate u = χ/(1-κ)
    dens_rows = []
    for k in ks:
        if uniform:
            top = asy.support_edge(k, W)
            for u in np.linspace(0, top, 41)[1:-1]:
                dens_rows.append([k, 0, u, (1 - k) * u, asy.density(float(u), k, W)])
        else:
            for i in range(1, pm.n + 1):
                # the class lives where its frozen boundary does
                chis = piecewise_frozen_boundary(i, pm)[:, 0]
                for u in np.linspace(chis.min() / (1 - k), chis.max() / (1 - k), 41):
                    try:
                        z, _ = piecewise_root((1 - k) * u, k, i, pm)
                        d = float(np.angle(z) / math.pi)
                    except ArithmeticError:
                        d = math.nan  # frozen: no complex root
                    dens_rows.append([k, i, u, (1 - k) * u, d])
    _write_csv(out / "density_grid.csv", prov, ["kappa", "class", "u", "chi", "density"], dens_rows)

    # frozen boundary
    fb_rows = []
    if uniform:
        fb_rows = [[0, c, k] for c, k in asy.frozen_boundary(W)]
    else:
        for i in range(1, pm.n + 1):
            fb_rows += [[i, c, k] for c, k in piecewise_frozen_boundary(i, pm)]
    _write_csv(out / "frozen_boundary.csv", prov, ["class", "chi", "kappa"], fb_rows)

    # covariance of power sums at equal heights, formula vs Monte Carlo
    entries = []
    N = cfg.spec.N
    mc = None
    if count > 0:
        sampler = CoordinateChainSampler(cfg.spec, levels=sorted({level_of_kappa(N, k) for k in ks}))
        mc = sampler.sample(seed, count)
    for k in ks:
        if k == 0:
            continue  # the bottom row is deterministic
        for l in orders:
            if uniform:
                formula = cov_limit_uniform(l, k, l, k, W)
            else:
                formula = cov_limit_piecewise(l, k, l, k, pm)
            entry = {"kappa": k, "l": l, "formula": formula, "mc_estimate": None, "stderr": None, "z_score": None}
            if mc is not None:
                rows_k = mc[level_of_kappa(N, k)]
                est, se = mc_covariance(rows_k, rows_k, l, l, N)
                entry.update(mc_estimate=est, stderr=se, z_score=(est - formula) / se if se > 0 else None)
            entries.append(entry)
    report = {
        "schema": "sqhex.covariance/1",
        "provenance": prov | {"samples": count, "N": N},
        "statistic": "Cov(p_l, p_l)/N^(2l) at the row of height κ",
        "entries": entries,
    }
    _write_json(out / "covariance_report.json", report)
    click.echo(f"wrote limit tables for {len(ks)} heights to {out}")


if __name__ == "__main__":  # pragma: no cover
    main()
