"""Command-line front end.

Exit codes: 0 ran and separable (or no verdict), 10 ran and entangled,
2 configuration error, 3 unphysical input, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from scipy.optimize import brentq

from . import detection, scenarios, separability
from .covariance import (
    PatternMismatch,
    QuadratureMatrix,
    UnphysicalStateError,
    reduce_v0_to_v1,
    to_standard_v0,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_SEPARABLE = 0
EXIT_ENTANGLED = 10
EXIT_CONFIG = 2
EXIT_UNPHYSICAL = 3
EXIT_IO = 4

COMMANDS = ("build", "test", "sample", "reconstruct", "region-map", "sweep")
PARAM_KEYS = ("n_tilde", "s", "n_tilde_1", "n_tilde_2", "s1", "s2", "n_tilde_env", "gamma_t")
CONFIG_KEYS = set(PARAM_KEYS) | {
    "family", "matrix", "eta", "shots", "seed", "out", "format", "grid",
    "sweep", "chi", "tap", "delta1", "delta2",
}


ConfigError = scenarios.ConfigError


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class RunConfig:
    command: str
    family: str | None = None
    params: dict[str, float] = field(default_factory=dict)
    matrix: str | None = None
    eta: float = 1.0
    shots: int = 10_000
    seed: int = 0
    out: str | None = None
    format: str = "json"
    grid: str | None = None
    sweep: str | None = None
    chi: str | None = None
    tap: int | None = None
    delta1: float | None = None
    delta2: float | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"command: unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format: must be csv or json, got {self.format!r}")
        if not (isinstance(self.eta, (int, float)) and 0 <= self.eta <= 1):
            raise ConfigError(f"eta: must lie in [0, 1], got {self.eta!r}")
        if self.command == "reconstruct" and self.shots < detection.MIN_SHOTS:
            raise ConfigError(f"shots: must be >= {detection.MIN_SHOTS}, got {self.shots}")
        if self.shots < 1:
            raise ConfigError(f"shots: must be positive, got {self.shots}")
        if self.family is not None and self.matrix is not None:
            raise ConfigError("matrix: give either --family or --matrix, not both")
        if self.family is not None:
            scenarios.params_from_config({"family": self.family, **self.params})
        elif self.params:
            raise ConfigError(f"{sorted(self.params)[0]}: parameter given without --family")
        if self.command == "sweep" and self.sweep not in ("eta", "gamma_t"):
            raise ConfigError(f"sweep: must be eta or gamma_t, got {self.sweep!r}")
        if self.command in ("region-map", "sweep") and self.grid is None:
            raise ConfigError("grid: required as MIN:MAX:STEPS")
        if self.tap is not None and self.tap not in (0, 1):
            raise ConfigError(f"tap: must be 0 or 1, got {self.tap!r}")
        for name in ("delta1", "delta2"):
            x = getattr(self, name)
            if x is not None and not x > 0:
                raise ConfigError(f"{name}: must be positive, got {x!r}")
        return self


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaussent", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or TOML file with default options")
    common.add_argument("--family", choices=sorted(scenarios.FAMILIES))
    common.add_argument("--matrix", help="quadrature-matrix JSON file")
    for key in PARAM_KEYS:
        common.add_argument("--" + key.replace("_", "-"), dest=key, type=float)
    common.add_argument("--eta", type=float)
    common.add_argument("--shots", type=int)
    common.add_argument("--seed", type=int, help="RNG seed (fallback: $GAUSSENT_SEED, then 0)")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--grid", help="MIN:MAX:STEPS")
    for name, helptext in [
        ("build", "print the quadrature matrix of a state"),
        ("test", "run every applicable separability, EPR and purity test"),
        ("sample", "draw homodyne samples for one setting"),
        ("reconstruct", "simulate the full measurement schedule and test the estimate"),
        ("region-map", "label a (delta1, delta2) grid with S / E / E' regions"),
        ("sweep", "sweep eta or gamma_t and locate the verdict transition"),
    ]:
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if name == "sample":
            sp.add_argument("--chi", help="comma-separated LO phases, 'none' skips a mode")
            sp.add_argument("--tap", type=int, help="route this mode through the 50:50 tap")
        if name == "sweep":
            sp.add_argument("--sweep", choices=("eta", "gamma_t"))
            sp.add_argument("--delta1", type=float)
            sp.add_argument("--delta2", type=float)
    return p


def _load_config_file(path: str) -> dict[str, Any]:
    text = Path(path).read_bytes()
    if path.endswith(".toml"):
        data = tomllib.loads(text.decode())
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("config: file must contain an object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config key")
    return data


def make_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    merged: dict[str, Any] = {}
    if args.config:
        merged.update(_load_config_file(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if "seed" not in merged and environ.get("GAUSSENT_SEED"):
        try:
            merged["seed"] = int(environ["GAUSSENT_SEED"])
        except ValueError:
            raise ConfigError("seed: GAUSSENT_SEED must be an integer") from None
    params = {k: merged.pop(k) for k in PARAM_KEYS if k in merged}
    if args.command == "sweep" and merged.get("sweep") == "gamma_t" and "family" not in merged:
        merged["family"] = "decohered"
    try:
        cfg = RunConfig(command=args.command, params=params, **merged)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from None
    if cfg.command == "region-map" and "format" not in merged:
        cfg.format = "csv"
    if cfg.command == "sweep" and "format" not in merged:
        cfg.format = "csv"
    return cfg.validate()


def load_state(cfg: RunConfig) -> QuadratureMatrix:
    if cfg.matrix is not None:
        return QuadratureMatrix.from_json(Path(cfg.matrix).read_text())
    if cfg.family is None:
        raise ConfigError("family: a state is required (--family or --matrix)")
    family, params = scenarios.params_from_config({"family": cfg.family, **cfg.params})
    return scenarios.build(family, params).matrix()


def state_verdicts(V: QuadratureMatrix) -> tuple[list[separability.Verdict], dict[str, Any]]:
    V.check_physical()
    verdicts = []
    extra: dict[str, Any] = {"purity": separability.purity(V)}
    if V.n_modes != 2:
        return verdicts, extra
    try:
        f = to_standard_v0(V)
    except PatternMismatch:
        f = None
    if f is not None:
        verdicts.append(separability.lemma1_separability(f))
        verdicts.append(separability.simon_v1_inequality(reduce_v0_to_v1(f)))
        verdicts.append(separability.quadrature_correlation_form(f))
    verdicts.append(separability.simon_general_ppt(V))
    if f is not None:
        verdicts.append(separability.reid_drummond_epr(f))
        verdicts.append(separability.purity_inequality(f))
        extra["region"] = detection.classify_region(f).value
        extra["delta1"] = f.delta1
        extra["delta2"] = f.delta2
    return verdicts, extra


def _primary(verdicts: list[separability.Verdict]) -> separability.Verdict | None:
    for name in ("lemma1", "simon_ppt"):
        for v in verdicts:
            if v.test_name == name:
                return v
    return None


def _exit_for(verdicts) -> int:
    v = _primary(verdicts)
    return EXIT_ENTANGLED if v is not None and v.entangled_or_violated else EXIT_SEPARABLE


def _verdict_csv(verdicts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["test", "verdict", "lhs", "rhs", "margin", "boundary"])
    for v in verdicts:
        d = v.to_dict()
        w.writerow([d["test"], d["verdict"], fmt(d["lhs"]), fmt(d["rhs"]), fmt(d["margin"]),
                    str(d["boundary"]).lower()])
    return buf.getvalue()


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_build(cfg: RunConfig) -> tuple[str, int]:
    V = load_state(cfg)
    return V.to_json() + "\n", EXIT_SEPARABLE


def cmd_test(cfg: RunConfig) -> tuple[str, int]:
    V = load_state(cfg)
    verdicts, extra = state_verdicts(V)
    if cfg.format == "csv":
        text = _verdict_csv(verdicts)
    else:
        text = _dump({"verdicts": [v.to_dict() for v in verdicts], **extra})
    return text, _exit_for(verdicts)


def _parse_chi(text: str | None, n_modes: int):
    if text is None:
        return tuple([0.0] * n_modes)
    out = []
    for part in text.split(","):
        part = part.strip()
        if part.lower() == "none":
            out.append(None)
        else:
            try:
                out.append(float(part))
            except ValueError:
                raise ConfigError(f"chi: cannot parse phase {part!r}") from None
    return tuple(out)


def cmd_sample(cfg: RunConfig) -> tuple[str, int]:
    V = load_state(cfg)
    n = 3 if cfg.tap is not None else V.n_modes
    try:
        setting = detection.HomodyneSetting(_parse_chi(cfg.chi, n), tapped_mode=cfg.tap)
    except ValueError as exc:
        raise ConfigError(f"chi: {exc}") from None
    batch = detection.sample_homodyne(V, setting, cfg.shots, cfg.seed, cfg.eta)
    if cfg.out is not None:
        Path(cfg.out + ".json").write_text(_dump(batch.sidecar()))
    if cfg.format == "json":
        return _dump({**batch.sidecar(), "outcomes": batch.outcomes.tolist()}), EXIT_SEPARABLE
    return batch.to_csv(), EXIT_SEPARABLE


def cmd_reconstruct(cfg: RunConfig) -> tuple[str, int]:
    V = load_state(cfg)
    rec = detection.reconstruct_quadrature_matrix(V, cfg.shots, cfg.eta, cfg.seed)
    verdicts = detection.reconstruction_verdicts(rec)
    report = detection.reconstruction_report(rec, verdicts)
    if cfg.format == "csv":
        return _verdict_csv(verdicts), _exit_for(verdicts)
    return _dump(report), _exit_for(verdicts)


def region_map_rows(axis: scenarios.GridAxis) -> list[tuple[float, float, str]]:
    vals = axis.values()
    return [
        (float(d1), float(d2), detection.region_of(d1, d2).value)
        for d1 in vals
        for d2 in vals
    ]


def cmd_region_map(cfg: RunConfig) -> tuple[str, int]:
    axis = scenarios.parse_grid_flag("grid", cfg.grid)
    if axis.min <= 0:
        raise ConfigError("grid: delta values must be positive")
    rows = region_map_rows(axis)
    if cfg.format == "json":
        return _dump([{"delta1": a, "delta2": b, "label": c} for a, b, c in rows]), EXIT_SEPARABLE
    return _rows_csv(["delta1", "delta2", "label"], rows), EXIT_SEPARABLE


def locate_transitions(values, flags, margin) -> list[float]:
    """Refine every flag change between neighbouring grid points by root bracketing."""
    out = []
    for a, b, fa, fb in zip(values[:-1], values[1:], flags[:-1], flags[1:]):
        if fa != fb:
            ma, mb = margin(a), margin(b)
            if ma == 0:
                out.append(float(a))
            elif mb == 0:
                out.append(float(b))
            elif ma * mb < 0:
                out.append(float(brentq(margin, a, b, xtol=1e-14, rtol=1e-14)))
    return out


def sweep_eta(delta1: float, delta2: float, axis: scenarios.GridAxis):
    vals = axis.values()
    if axis.min < 0 or axis.max > 1:
        raise ConfigError("grid: eta must lie in [0, 1]")
    verdicts = [detection.detected_entanglement_condition(delta1, delta2, float(e)) for e in vals]
    rows = [(float(e), v.witness_lhs, v.entangled_or_violated) for e, v in zip(vals, verdicts)]
    trans = locate_transitions(
        vals, [r[2] for r in rows], lambda e: 1 - detection.detected_product(delta1, delta2, e)
    )
    return rows, trans


def sweep_gamma_t(s: float, n_tilde_env: float, axis: scenarios.GridAxis):
    if axis.min < 0:
        raise ConfigError("grid: gamma_t must be >= 0")
    vals = axis.values()

    def form(g):
        return scenarios.decohered_squeezed_vacuum(scenarios.DecoherenceParams(s, n_tilde_env, float(g)))

    rows = []
    for g in vals:
        f = form(g)
        rows.append((float(g), f.delta1, separability.lemma1_separability(f).entangled_or_violated))
    trans = locate_transitions(vals, [r[2] for r in rows], lambda g: 1 - form(g).delta1 * form(g).delta2)
    return rows, trans


def cmd_sweep(cfg: RunConfig) -> tuple[str, int]:
    axis = scenarios.parse_grid_flag(cfg.sweep, cfg.grid)
    if cfg.sweep == "eta":
        if cfg.delta1 is not None and cfg.delta2 is not None:
            d1, d2 = cfg.delta1, cfg.delta2
        else:
            f = to_standard_v0(load_state(cfg))
            d1, d2 = f.delta1, f.delta2
        rows, trans = sweep_eta(d1, d2, axis)
        header = ["eta", "delta_product", "detected"]
    else:
        if cfg.family != "decohered":
            raise ConfigError("family: gamma_t sweeps use the decohered family")
        s = cfg.params.get("s", 0.0)
        env = cfg.params.get("n_tilde_env", 1.0)
        scenarios.DecoherenceParams(s, env, 0.0)
        rows, trans = sweep_gamma_t(s, env, axis)
        header = ["gamma_t", "delta", "entangled"]
    if cfg.format == "json":
        return _dump({
            "sweep": cfg.sweep,
            "rows": [dict(zip(header, r)) for r in rows],
            "transitions": trans,
        }), EXIT_SEPARABLE
    text = _rows_csv(header, [(a, b, str(c).lower()) for a, b, c in rows])
    return text, EXIT_SEPARABLE


HANDLERS = {
    "build": cmd_build,
    "test": cmd_test,
    "sample": cmd_sample,
    "reconstruct": cmd_reconstruct,
    "region-map": cmd_region_map,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        text, code = HANDLERS[cfg.command](cfg)
    except UnphysicalStateError as exc:
        print(f"gaussent: unphysical input: {exc}", file=sys.stderr)
        return EXIT_UNPHYSICAL
    except (scenarios.ConfigError, PatternMismatch, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        print(f"gaussent: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"gaussent: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"gaussent: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.out is not None:
            Path(cfg.out).write_text(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"gaussent: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
