"""Command-line driver: ``twistlab {gen,verify,flow,energy,report}``.

Exit codes: 0 pass, 1 assertion failure, 2 usage or config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import logging
import sys
from pathlib import Path

from . import snapshot
from .config import ConfigError, RunConfig, load
from .director_field import DirectorField, TwistError
from .ericksen_leslie import ELCoefficients, dissipation_terms, energy_report, velocity_field
from .heat_flow import CFLError, FlowConfig, energy_dissipation_check, evolve
from .report import EstimateReport
from .suite import build_field, ensemble_member, verify_ensemble, verify_sampled, verify_with_refinement, verify_field

log = logging.getLogger("twistlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _out_dir(cfg: RunConfig, args) -> Path:
    path = Path(args.out or cfg.output.dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _stamp(rep: EstimateReport, cfg: RunConfig) -> EstimateReport:
    if cfg.output.timestamp:
        rep.meta["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return rep


def _write_report(rep: EstimateReport, out: Path, name: str, cfg: RunConfig) -> Path:
    _stamp(rep, cfg)
    path = out / f"{name}.json"
    path.write_text(rep.to_json())
    (out / f"{name}.csv").write_text(rep.to_csv())
    return path


def _summary(rep: EstimateReport, stream=None) -> None:
    stream = stream or sys.stdout
    for name in rep.failures():
        e = rep.entries[name]
        stream.write(f"FAIL {name} = {e.value:.6g}" + (f" (tolerance {e.tolerance:g})" if e.tolerance is not None else "") + "\n")
    if "diagnostic" in rep.meta:
        stream.write(f"diagnostic: {rep.meta['diagnostic']}\n")
    stream.write(("PASS" if rep.passed else "FAIL") + f" ({len(rep.entries)} entries, {len(rep.failures())} failed)\n")


def _read_director(path: str) -> DirectorField:
    f = snapshot.read(path)
    return DirectorField(f, Path(path).stem)


def cmd_gen(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    grid = cfg.grid.build()
    written = []
    if args.ensemble:
        for seed in cfg.ensemble.seed_list:
            d = ensemble_member(cfg, seed, grid)
            written.append(snapshot.write(out / f"{cfg.ensemble.kind}_seed{seed:04d}.tlab", d.base))
    else:
        d = build_field(cfg.generator, grid)
        name = args.name or cfg.generator.kind
        written.append(snapshot.write(out / f"{name}.tlab", d.base))
    for p in written:
        print(p)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    if args.snapshot:
        f = snapshot.read(args.snapshot)
        rep = verify_sampled(f, cfg, Path(args.snapshot).stem)
    elif args.ensemble:
        rep = verify_ensemble(cfg)
    elif args.refine or cfg.verify.refine:
        rep = verify_with_refinement(cfg.generator, cfg)
    else:
        rep = verify_field(build_field(cfg.generator, cfg.grid.build()), cfg)
    path = _write_report(rep, out, args.name or "verify", cfg)
    _summary(rep)
    print(path)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_flow(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    d0 = _read_director(args.snapshot) if args.snapshot else build_field(cfg.generator, cfg.grid.build())
    fc = cfg.flow
    flow_cfg = FlowConfig(steps=fc.steps, dt_factor=fc.dt_factor, record_every=fc.record_every,
                          cfl=fc.cfl, record_ratios=fc.record_ratios)
    flow_cfg.time_step(d0)  # CFL violations surface before any output is written
    name = args.name or "flow"

    def checkpoint(n: int, d: DirectorField) -> None:
        if fc.checkpoint_every and n % fc.checkpoint_every == 0:
            snapshot.write(out / f"{name}_step{n:06d}.tlab", d.base)

    traj = evolve(d0, flow_cfg, on_step=checkpoint)
    (out / f"{name}.csv").write_text(traj.to_csv())
    snapshot.write(out / f"{name}_final.tlab", traj.final.base)
    rep = EstimateReport(meta={"grid": d0.grid.describe(), "label": d0.label, "dt": traj.dt,
                               "steps": fc.steps, "records": len(traj.records)})
    rep.check("completed", traj.error is None)
    if traj.error:
        rep.meta["diagnostic"] = traj.error
    rep.add("max_energy_increase", traj.max_energy_increase)
    rep.add("final_energy", traj.energies[-1])
    if len(traj.records) >= 3:
        rep.merge(energy_dissipation_check(traj))
    path = out / f"{name}.json"
    path.write_text(_stamp(rep, cfg).to_json())
    _summary(rep)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_energy(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    v = snapshot.read(args.velocity)
    d = _read_director(args.director)
    if v.grid != d.grid:
        raise UsageError(f"grid mismatch: velocity {v.grid.describe()} vs director {d.grid.describe()}")
    velocity_field(v, incompressible=cfg.energy.incompressible)
    e = cfg.energy
    coeffs = ELCoefficients(e.gamma, e.reynolds, *e.beta, mu1=e.mu1)
    rep = dissipation_terms(v, d, coeffs, e.h_mode)
    rep.merge(energy_report(v, d, coeffs, cfg.verify.axis, cfg.eps_pole))
    rep.meta.update({"gamma": e.gamma, "reynolds": e.reynolds, "beta": list(e.beta), "mu1": e.mu1})
    path = _write_report(rep, out, args.name or "energy", cfg)
    _summary(rep)
    print(path)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_report(cfg: RunConfig, args) -> int:
    ok = True
    for p in args.reports:
        rep = EstimateReport.from_json(Path(p).read_text())
        for name in sorted(rep):
            e = rep.entries[name]
            if e.passed is None and not args.all:
                continue
            tag = "info" if e.passed is None else ("PASS" if e.passed else "FAIL")
            print(f"{tag} {p}:{name} = {e.value:.6g}")
        print(f"{'PASS' if rep.passed else 'FAIL'} {p}")
        ok = ok and rep.passed
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="YAML run configuration")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, e.g. grid.sizes=[128,128]")
    common.add_argument("-o", "--out", help="output directory (overrides output.dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="twistlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write director snapshots")
    g.add_argument("--ensemble", action="store_true", help="write one snapshot per ensemble seed")
    g.add_argument("--name", help="file stem for a single snapshot")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", parents=[common], help="run the identity/inequality suite")
    v.add_argument("snapshot", nargs="?", help="TLAB1 director snapshot (default: the configured generator)")
    v.add_argument("--ensemble", action="store_true", help="verify the configured seed ensemble")
    v.add_argument("--refine", action="store_true", help="also run at twice the resolution")
    v.add_argument("--name", help="report file stem")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("flow", parents=[common], help="run the heat flow")
    f.add_argument("snapshot", nargs="?")
    f.add_argument("--name", help="output file stem")
    f.set_defaults(func=cmd_flow)

    e = sub.add_parser("energy", parents=[common], help="dissipation budget for a (v, d) pair")
    e.add_argument("velocity")
    e.add_argument("director")
    e.add_argument("--name", help="report file stem")
    e.set_defaults(func=cmd_energy)

    r = sub.add_parser("report", parents=[common], help="summarize JSON reports")
    r.add_argument("reports", nargs="+")
    r.add_argument("--all", action="store_true", help="also list unarmed entries")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config, args.set)
        return args.func(cfg, args)
    except snapshot.SnapshotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, UsageError, TwistError, CFLError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
