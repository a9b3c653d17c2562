"""Command-line entry point.

Every invocation is first turned into a :class:`RunConfig`, a flat
``key = <json value>`` text record.  Output files are named after the
command and the first 12 hex digits of the SHA-256 of that record, so
identical configurations overwrite identical files with identical bytes.

Exit status: 0 on success, 1 on usage or precondition errors, 2 when an
audit fails or a classification is indeterminate.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import io
from .errors import AuditFailure, CancellationFailure, NlsLabError, UsageError

COMMANDS = ("ground", "classify", "evolve", "concentrate", "sphere", "exponents")


@dataclass
class RunConfig:
    command: str
    N: int = 3
    p: float = 3.0
    r_max: float = 30.0
    dr: float = 0.01
    input: str | None = None
    gaussian: float | None = None
    out: str | None = None
    output_dir: str = "."
    dt: float = 1e-4
    t_max: float = 1.0
    cfl: float = 0.05
    sample_dt: float = 0.01
    record_every: int = 0
    adaptive: bool = True
    grad_growth_cap: float = 10.0
    scheme: str | None = None
    snapshot_dir: str | None = None
    radial: bool = False
    finite_variance: bool = False
    trace_dir: str | None = None
    c1: float = 1.0
    c2: float = 1.0
    c: float = 4.0
    mass: float = 1.0
    T: float = 1.0
    theta: float = 0.0
    audit: bool = False
    export_t: float | None = None
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        for name in ("r_max", "dr", "dt", "t_max", "cfl", "sample_dt", "c1", "c2", "c", "mass", "T"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise UsageError(f"{name} must be a positive number, got {val!r}")
        if self.command in ("classify", "evolve") and self.input is None and self.gaussian is None:
            raise UsageError(f"{self.command} needs --input FILE or --gaussian AMPLITUDE")
        if self.input is not None and not Path(self.input).is_file():
            raise UsageError(f"input file not found: {self.input}")
        if self.command == "concentrate":
            if self.trace_dir is None:
                raise UsageError("concentrate needs --trace-dir")
            if not (Path(self.trace_dir) / "index.json").is_file():
                raise UsageError(f"no snapshot index in {self.trace_dir}")
        return self

    def to_text(self) -> str:
        return "".join(f"{f.name} = {json.dumps(getattr(self, f.name))}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            key = key.strip()
            if not sep or key not in known:
                raise UsageError(f"config line {lineno}: cannot parse {line!r}")
            try:
                values[key] = json.loads(raw.strip())
            except json.JSONDecodeError as exc:
                raise UsageError(f"config line {lineno}: {exc}") from None
        if "command" not in values:
            raise UsageError("config has no command")
        return cls(**values)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]

    def artifact(self, suffix: str) -> Path:
        return Path(self.output_dir) / f"{self.command}-{self.digest}{suffix}"


# -- commands -------------------------------------------------------------------

def _params(cfg: RunConfig):
    from .fields import NlsParams
    try:
        return NlsParams(int(cfg.N), float(cfg.p))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _ground(cfg: RunConfig, params=None):
    from .fields import RadialGrid
    from .ground_state import solve_ground_state
    params = params or _params(cfg)
    return solve_ground_state(params, RadialGrid.from_spacing(cfg.dr, cfg.r_max))


def _initial(cfg: RunConfig):
    from .fields import ComplexField, RadialGrid
    params = _params(cfg)
    if cfg.input is not None:
        return io.read_field_csv(cfg.input, params)
    grid = RadialGrid.from_spacing(cfg.dr, cfg.r_max)
    amp = float(cfg.gaussian)
    return ComplexField.from_function(lambda r: amp * np.exp(-r ** 2 / 2), grid, params)


def cmd_ground(cfg: RunConfig):
    gs = _ground(cfg)
    io.write_field_csv(cfg.artifact(".csv"), gs.profile)
    keys = ("q0", "mass", "grad_sq", "c_gn", "sigma_pn", "lambda_threshold")
    d = gs.to_dict()
    return {k: d[k] for k in keys}, 0


def cmd_classify(cfg: RunConfig):
    from .classifier import Verdict, classify
    u0 = _initial(cfg)
    gs = _ground(cfg, u0.params)
    rep = classify(u0, gs, finite_variance=cfg.finite_variance, radial=cfg.radial)
    return rep.to_dict(), 2 if rep.verdict is Verdict.INDETERMINATE else 0


def cmd_evolve(cfg: RunConfig):
    from .evolver import StepControls, evolve
    u0 = _initial(cfg)
    controls = StepControls(dt0=cfg.dt, t_max=cfg.t_max, cfl=cfg.cfl, sample_dt=cfg.sample_dt,
                            record_every=cfg.record_every, adaptive=cfg.adaptive,
                            grad_growth_cap=cfg.grad_growth_cap,
                            keep_snapshots=cfg.snapshot_dir is not None)
    trace = evolve(u0, controls, scheme=cfg.scheme)
    out = Path(cfg.out) if cfg.out else cfg.artifact(".csv")
    io.write_trace_csv(out, trace)
    if cfg.snapshot_dir is not None:
        io.write_snapshots(cfg.snapshot_dir, trace.snapshots)
    g = trace.grad_norm
    return {"stop_reason": trace.stop_reason, "t_final": trace.times[-1], "n_records": len(trace.times),
            "n_steps": len(trace.dt_history), "grad_growth": g[-1] / g[0] if g[0] > 0 else None,
            "trace_csv": str(out)}, 0


def cmd_concentrate(cfg: RunConfig):
    from .concentration import Cutoffs, concentration_report, scenario_flags
    from .fields import mass
    snaps = io.read_snapshots(cfg.trace_dir, _params(cfg))
    if not snaps:
        raise UsageError(f"no snapshots listed in {cfg.trace_dir}")
    reports = concentration_report(snaps, Cutoffs(cfg.c1, cfg.c2, cfg.c), mass(snaps[0][1]))
    rows = [r.row() for r in reports]
    io.write_rows(cfg.artifact(".csv"), list(rows[0]), [list(r.values()) for r in rows])
    summary = {"n_snapshots": len(rows), "csv": str(cfg.artifact(".csv")),
               "all_bounds_ok": all(v[2] for r in reports for v in r.bound_checks.values())}
    if len(reports) >= 3:
        fl = scenario_flags(reports)
        summary.update(dataclasses.asdict(fl), scenario=fl.scenario)
    return summary, 0


def cmd_sphere(cfg: RunConfig):
    from . import sphere
    sp = sphere.derive_params(cfg.mass, cfg.T, cfg.theta)
    out = {"params": sp.to_dict(), "kappa_intro_value": sp.nu}
    status = 0
    if cfg.export_t is not None:
        path = cfg.artifact(".csv")
        io.write_field_csv(path, sphere.profile_field(sp, cfg.export_t))
        out["profile_csv"] = str(path)
    if cfg.audit:
        rep = sphere.conservation_audit(sp, raise_on_failure=False)
        out["audit"] = rep.to_dict()
        try:
            out["cancellation"] = sphere.refined_cancellation(sp, sp.T - 1e-4).to_dict()
        except CancellationFailure as exc:
            out["cancellation"] = {"error": str(exc)}
            status = 2
        out["residual_scaling"] = sphere.residual_scaling(sp)
        if not rep.ok:
            status = 2
    return out, status


def cmd_exponents(cfg: RunConfig):
    from .sphere import general_exponents
    try:
        return general_exponents(cfg.p, int(cfg.N)).to_dict(), 0
    except ValueError as exc:
        raise UsageError(f"{type(exc).__name__}: {exc}") from None


HANDLERS = {"ground": cmd_ground, "classify": cmd_classify, "evolve": cmd_evolve,
            "concentrate": cmd_concentrate, "sphere": cmd_sphere, "exponents": cmd_exponents}


def run(cfg: RunConfig) -> int:
    """Dispatch, write ``<command>-<digest>.json`` and echo it; returns the exit status."""
    cfg.validate()
    report, status = HANDLERS[cfg.command](cfg)
    text = io.dumps(report)
    path = cfg.artifact(".json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n")
    print(text)
    return status


# -- argument parsing -----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlslab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="read a RunConfig text file instead of flags")
    parser.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, grid=True):
        p.add_argument("--N", type=int, default=3)
        p.add_argument("--p", type=float, default=3.0)
        if grid:
            p.add_argument("--r-max", dest="r_max", type=float, default=30.0)
            p.add_argument("--dr", type=float, default=0.01)
        p.add_argument("--output-dir", default=".")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ground", help="ground state and sharp constants")
    common(p)

    for name, helptext in (("classify", "threshold dichotomy verdict"), ("evolve", "radial Strang evolution")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--input", help="field CSV with header r,re,im")
        p.add_argument("--gaussian", type=float, help="use A*exp(-r^2/2) on the --dr/--r-max grid")
        if name == "classify":
            p.add_argument("--radial", action="store_true")
            p.add_argument("--finite-variance", dest="finite_variance", action="store_true")
        else:
            p.add_argument("--tmax", dest="t_max", type=float, default=1.0)
            p.add_argument("--dt", type=float, default=1e-4)
            p.add_argument("--cfl", type=float, default=0.05)
            p.add_argument("--sample-dt", dest="sample_dt", type=float, default=0.01)
            p.add_argument("--record-every", dest="record_every", type=int, default=0)
            p.add_argument("--fixed-dt", dest="adaptive", action="store_false")
            p.add_argument("--growth-cap", dest="grad_growth_cap", type=float, default=10.0)
            p.add_argument("--scheme", choices=("spectral", "cn"))
            p.add_argument("--out", help="trace CSV path")
            p.add_argument("--snapshot-dir", dest="snapshot_dir", help="write lattice snapshots here")

    p = sub.add_parser("concentrate", help="L^3 concentration windows on a snapshot directory")
    common(p, grid=False)
    p.add_argument("--trace-dir", dest="trace_dir", required=True)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--c", type=float, default=4.0)

    p = sub.add_parser("sphere", help="contracting-sphere profile constants and audits")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--audit", action="store_true")
    p.add_argument("--export-t", dest="export_t", type=float, help="write the profile at this time as field CSV")
    p.add_argument("--output-dir", default=".")

    p = sub.add_parser("exponents", help="sphere exponents and regime for (p, N)")
    p.add_argument("--p", type=str, required=True, help="integer, decimal or fraction such as 7/3")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--output-dir", default=".")
    return parser


def _parse_exponent(text):
    from fractions import Fraction
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read p = {text!r}") from None
    return int(q) if q.denominator == 1 else str(q)


def config_from_args(argv=None) -> RunConfig | None:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        path = Path(ns.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        return RunConfig.from_text(path.read_text())
    if ns.command is None:
        raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
    values = {k: v for k, v in vars(ns).items() if k not in ("config", "dump_config")}
    if ns.command == "exponents":
        values["p"] = _parse_exponent(values["p"])
    return RunConfig(**values)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
        if "--dump-config" in argv:
            sys.stdout.write(cfg.to_text())
            return 0
        return run(cfg)
    except UsageError as exc:
        print(f"UsageError: {exc}", file=sys.stderr)
        return 1
    except (AuditFailure, CancellationFailure) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except NlsLabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
