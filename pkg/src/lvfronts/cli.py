"""Command-line scenario runner: ``lvfronts {check,orbits,front,spectral,decay,entire,all,plots}``."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import artifacts as io
from .asymptotics import (estimate_front_constants, k_bounds, perturbed_at_fraction,
                          verify_apriori_bounds, verify_decay_theorems, verify_ratio_bounds)
from .config import PREREQ, STAGES, ScenarioConfig, load
from .entire import (EnvelopePair, back_transform_entire, build_entire, build_shift_curves,
                     check_properties, reflect_for_positive_c, reflect_front, reflect_orbit,
                     shift_domain, verify_envelope_inequalities)
from .errors import AssumptionError, ConfigError, LVFrontsError
from .front import FrontOptions, compute_front, front_residual, limits_ok, monotone_ok
from .kinetics import ReactionPack, check_assumptions, compute_orbits, orbit_residual
from .pde import Grid1D
from .spectral import degenerate_amplitudes, spectral_pack

log = logging.getLogger("lvfronts")

EXIT_OK, EXIT_CONFIG, EXIT_ASSUMPTION, EXIT_NUMERICAL = 0, 2, 3, 4
RATIO_SHIFTS = ((0.0, 0.0), (-2.0, -5.0), (-5.0, -5.0), (-1.0, -8.0))


class StageFailure(LVFrontsError):
    def __init__(self, stage: str, check: str):
        super().__init__(f"stage {stage} failed: {check}")
        self.stage, self.check = stage, check


def _closure(stage: str) -> list:
    need, todo = [], [stage]
    while todo:
        s = todo.pop()
        if s not in need:
            need.append(s)
            todo.extend(PREREQ[s])
    return [s for s in STAGES if s in need]


def _front_tag(cfg: ScenarioConfig) -> str:
    blob = json.dumps({"coeffs": repr(cfg.coeffs), "grid": asdict(cfg.grid)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class Pipeline:
    def __init__(self, cfg: ScenarioConfig, outdir: Path):
        self.cfg = cfg
        self.out = outdir
        self.out.mkdir(parents=True, exist_ok=True)
        self.coeffs = cfg.coeffs
        self.orbit = None
        self.front = None
        self.spec = None
        self.kb = None
        self.cst = None
        # problem in c < 0 orientation for the shift / envelope stages
        self.neg = None

    def run(self, stages) -> None:
        for s in stages:
            log.info("stage %s", s)
            getattr(self, "stage_" + s)()

    def stage_check(self):
        rep = check_assumptions(self.coeffs)
        io.write_text(self.out / "assumptions.txt", io.assumption_lines(rep))
        if not rep.ok:
            fails = sorted({k.split("_")[0] for k in rep.failures()})
            raise AssumptionError("assumption check failed: " + ", ".join(f"({f})" for f in fails))

    def stage_orbits(self):
        self.orbit = compute_orbits(self.coeffs, self.cfg.grid.M)
        io.write_orbits(self.out / "orbits.csv", self.orbit)
        res = orbit_residual(self.orbit, self.coeffs)
        if not res <= 1e-6:
            raise StageFailure("orbits", f"orbit residual {res:.3e} > 1e-6")

    def stage_front(self):
        g = self.cfg.grid
        tag = _front_tag(self.cfg)
        ck = self.out / "front.npz"
        if ck.exists():
            fr, old = io.load_front(ck)
            if old == tag:
                log.info("front loaded from checkpoint %s", ck)
                self.front = fr
        if self.front is None:
            opts = FrontOptions(warmup_periods=g.warmup_periods, max_periods=g.max_periods,
                                tol_front=self.cfg.tolerances["front_drift"],
                                tol_c=self.cfg.tolerances["speed"], record_stride=g.record_stride)
            self.front = compute_front(self.coeffs, self.orbit, Grid1D(g.L, g.h, g.dt), opts)
            io.save_front(ck, self.front, tag)
        res = front_residual(self.front, self.coeffs, self.orbit)
        o = self.cfg.output
        io.write_front_csv(self.out / "front.csv", self.front, o.front_t_stride, o.front_z_stride)
        io.write_text(self.out / "speed.txt", io.speed_lines(self.front, res)
                      + [f"monotone {monotone_ok(self.front)}", f"limits {limits_ok(self.front)}"])
        if not monotone_ok(self.front):
            raise StageFailure("front", "front is not monotone")
        if not res <= 5e-4:
            raise StageFailure("front", f"residual {res:.3e} > 5e-4")

    def stage_spectral(self):
        self.spec = spectral_pack(self.coeffs, self.orbit, self.front.c)
        io.write_spectral(self.out, self.spec)

    def _oriented(self):
        if self.neg is None:
            if self.front.c < 0:
                self.neg = (self.coeffs, self.orbit, self.front, self.spec, 1.0, False)
            else:
                rp = reflect_for_positive_c(self.coeffs, self.front.c)
                orb = reflect_orbit(self.orbit)
                fr = reflect_front(self.front)
                sp = spectral_pack(rp.coeffs, orb, fr.c)
                self.neg = (rp.coeffs, orb, fr, sp, rp.scale, True)
        return self.neg

    def stage_decay(self):
        tol = self.cfg.tolerances
        rep = verify_decay_theorems(self.front, self.spec, tol["decay_rel"], tol["deriv_rel"])
        lines = io.decay_lines(rep)
        deg = [(k, f) for k, f in rep.fits.items() if f.case == "degenerate"]
        if deg:
            k1 = rep.fits.get(("plus", "Q"))
            k3 = rep.fits.get(("minus", "P"))
            amp = k1.amplitude if k1 else float("nan")
            amp3 = k3.amplitude if k3 else float("nan")
            th = degenerate_amplitudes((amp, amp3), self.spec.nus, self.front.c, self.coeffs, self.orbit)
            lines += [f"theta1 {th[0]}", f"theta2 {th[1]}"]
        io.write_text(self.out / "decay.txt", lines)
        br = verify_apriori_bounds(self.front, self.spec,
                                   perturbed_at_fraction(self.coeffs, self.orbit, self.spec, 0.1))
        cs, orb, fr, sp, _, _ = self._oriented()
        self.cst = estimate_front_constants(fr, sp.nu3)
        self.kb = k_bounds(self.cst, cs, orb, fr)
        io.write_text(self.out / "bounds.txt", io.bounds_lines(br, self.cst, self.kb))
        pack = ReactionPack(cs, orb)
        ratios = [verify_ratio_bounds(fr, self.kb, j1, j2, sp.nu3, pack, t_stride=max(1, fr.M // 64))
                  for j1, j2 in RATIO_SHIFTS]
        io.write_text(self.out / "ratio_bounds.txt", io.ratio_lines(ratios))
        if not rep.passed:
            raise StageFailure("decay", "; ".join(rep.failures))
        if not br.passed:
            raise StageFailure("decay", f"a priori bounds: far-end flags {br.far_end_flags}")
        bad = [r for r in ratios if not r.passed]
        if bad:
            raise StageFailure("decay", f"ratio bound violated at j = ({bad[0].j1}, {bad[0].j2})")

    def stage_entire(self):
        e, g = self.cfg.entire, self.cfg.grid
        cs, orb, fr, sp, scale, reflected = self._oriented()
        K = self.kb.K
        varpi = shift_domain(K, fr.c, sp.nu3)
        w1 = e.omega1 if e.omega1 is not None else varpi + e.omega1_offset
        w2 = e.omega2 if e.omega2 is not None else varpi + e.omega2_offset
        curves = build_shift_curves(w1, w2, K, fr.c, sp.nu3)
        pack = ReactionPack(cs, orb)
        h = fr.meta.get("h", g.h)
        grid = Grid1D(e.L, h, g.dt)
        tol = self.cfg.tolerances["sandwich"]
        run = build_entire(fr, (w1, w2), e.n_list, grid, e.t_end * fr.T, pack, curves=curves,
                           snaps_per_period=e.snaps_per_period, tol=tol)
        env = EnvelopePair.from_curves(fr, curves)
        env_rep = verify_envelope_inequalities(env, pack, min(5.0, max(e.n_list)) * fr.T, t_stride=20)
        props = check_properties(run, fr, grid, symmetric=(w1 == w2))
        lines = io.entire_lines(run, env_rep, props, curves)
        if reflected:
            lines.append(f"reflected scale {scale!r}")
            bt = back_transform_entire(run, run.n_max, scale)
            for t in self.cfg.output.snapshot_times:
                i = int(np.argmin(np.abs(bt.times - t)))
                if abs(bt.times[i] - t) < 1e-9:
                    io.write_csv(self.out / f"entire_original_t{t:+.4f}.csv", ["x", "u", "v"],
                                 np.column_stack([bt.x, bt.W[i, 0], bt.W[i, 1]]), [f"t = {t!r}"])
        io.write_text(self.out / "entire.txt", lines)
        io.write_entire_snapshots(self.out, run, env, self.cfg.output.snapshot_times)
        fails = [k for k in ("sandwich", "monotone_in_n") if not run.diagnostics[k]]
        fails += [k for k, r in props.results.items() if not r.passed]
        if not env_rep.passed:
            fails.append("envelope")
        if fails:
            raise StageFailure("entire", ", ".join(fails))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lvfronts", description="Periodic Lotka-Volterra fronts and entire solutions")
    p.add_argument("command", choices=list(STAGES) + ["all", "plots"])
    p.add_argument("--config", "-c", help="scenario TOML file")
    p.add_argument("--out", "-o", help="output directory (overrides output.dir)")
    p.add_argument("--override", "-O", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted config override, e.g. grid.h=0.025 (repeatable)")
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plots":
        out = Path(args.out or "out")
        files = io.emit_plots_data(out)
        print(f"plot data: {len(files)} file(s) in {out / 'plots'}")
        return EXIT_OK
    try:
        if not args.config:
            raise ConfigError("--config is required")
        cfg = load(args.config, args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.output.dir)
    stages = list(cfg.stages) if args.command == "all" else _closure(args.command)
    pipe = Pipeline(cfg, out)
    try:
        pipe.run(stages)
    except AssumptionError as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except LVFrontsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.command == "all":
        io.emit_plots_data(out)
    print(f"{args.command}: ok ({', '.join(stages)}) -> {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
