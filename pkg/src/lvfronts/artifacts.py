"""Report, CSV, checkpoint and plot-data writers.

CSV numbers use ``%.17g`` so identical runs give byte-identical files.

State checkpoint layout (little endian)::

    magic  b"LVFS"         4 bytes
    version int32          (1)
    n       int64          nodes
    L, h, dt, t  float64   grid parameters and time
    u[n], v[n]   float64   row-major
"""
from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .front import FrontProfile, SpeedEstimate
from .pde import Field, Grid1D

log = logging.getLogger(__name__)

FMT = "%.17g"
_MAGIC = b"LVFS"
_HEAD = struct.Struct("<4siq4d")


def write_csv(path, columns: Sequence[str], data: np.ndarray, header: Iterable[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(data, dtype=float)
    with open(path, "w", newline="\n") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        if data.size:
            np.savetxt(fh, data, fmt=FMT, delimiter=",")
    return path


def read_csv(path) -> tuple:
    """``(header_lines, columns, data)``."""
    header, cols = [], None
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                header.append(line[2:].rstrip("\n"))
            else:
                cols = line.strip().split(",")
                break
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, cols, data


def save_state(path, fld: Field, grid: Grid1D) -> Path:
    path = Path(path)
    n = grid.n_nodes
    if fld.u.size != n or fld.v.size != n:
        raise InvalidInputError("field size does not match the grid")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_MAGIC, 1, n, grid.L, grid.h, grid.dt, fld.t))
        fh.write(np.ascontiguousarray(fld.u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(fld.v, dtype="<f8").tobytes())
    return path


def load_state(path) -> tuple:
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        raise InvalidInputError("truncated state file")
    magic, ver, n, L, h, dt, t = _HEAD.unpack_from(raw)
    if magic != _MAGIC or ver != 1:
        raise InvalidInputError("not a state checkpoint")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEAD.size)
    if body.size != 2 * n:
        raise InvalidInputError("state file size does not match its header")
    return Field(body[:n].copy(), body[n:].copy(), t), Grid1D(L, h, dt)


def save_front(path, front: FrontProfile, tag: str = "") -> Path:
    path = Path(path)
    sp = front.speed
    speed = None if sp is None else {
        "c": sp.c, "displacements": list(sp.per_period_displacements), "converged": sp.converged,
        "drift": sp.drift, "c_level_set": sp.c_level_set, "drift_history": list(sp.drift_history),
        "periods": sp.periods}
    info = json.dumps({"c": front.c, "phase": front.phase, "T": front.T, "d": front.d,
                       "meta": front.meta, "speed": speed, "tag": tag}, sort_keys=True)
    with open(path, "wb") as fh:
        np.savez(fh, zgrid=front.zgrid, tgrid=front.tgrid, P=front.P, Q=front.Q,
                 Pz=front.Pz, Qz=front.Qz, info=np.frombuffer(info.encode(), dtype=np.uint8))
    return path


def load_front(path) -> tuple:
    """``(front, tag)`` from :func:`save_front`."""
    with np.load(path, allow_pickle=False) as z:
        info = json.loads(bytes(z["info"]).decode())
        sp = info["speed"]
        speed = None if sp is None else SpeedEstimate(
            sp["c"], tuple(sp["displacements"]), sp["converged"], sp["drift"], sp["c_level_set"],
            tuple(sp["drift_history"]), sp["periods"])
        front = FrontProfile(z["zgrid"], z["tgrid"], z["P"], z["Q"], z["Pz"], z["Qz"], info["c"],
                             info["phase"], info["T"], info["d"], speed, info["meta"])
    return front, info.get("tag", "")


def _g(x) -> str:
    return FMT % x if isinstance(x, (float, np.floating)) else str(x)


def write_text(path, lines: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def assumption_lines(rep) -> list:
    lines = ["assumptions: " + ("pass" if rep.ok else "FAIL")]
    for k, v in rep.margins.items():
        lines.append(f"{k} margin {_g(v)} {'ok' if v > 1e-10 else 'FAIL'}")
    for k, v in rep.extras.items():
        lines.append(f"{k} {_g(v)}")
    fail = sorted({k.split('_')[0] for k in rep.failures()})
    if fail:
        lines.append("failed: " + ", ".join(f"({f})" for f in fail))
    return lines


def write_orbits(path, orbit) -> Path:
    return write_csv(path, ["t", "p", "q"], np.column_stack([orbit.tgrid, orbit.p, orbit.q]),
                     [f"T = {_g(orbit.T)}", f"p0 = {_g(orbit.p0)}", f"q0 = {_g(orbit.q0)}"])


def spectral_lines(sp) -> list:
    lines = [f"c {_g(sp.c)}", f"d {_g(sp.d)}", f"T {_g(sp.T)}"]
    for i, k in enumerate(sp.kappas, 1):
        lines.append(f"kappa{i} {_g(k)}")
    for i, n in enumerate(sp.nus, 1):
        lines.append(f"nu{i} {_g(n)}")
    lines += [f"plus_case {sp.plus_case}", f"minus_case {sp.minus_case}",
              f"tilde_phi1 {sp.tilde_phi1_label}", f"tilde_psi2 {sp.tilde_psi2_label}",
              f"theta1 {_g(sp.theta1)}", f"theta2 {_g(sp.theta2)}"]
    b = sp.boundary
    if b is not None:
        lines += [f"lambda0 {_g(b.lambda0)}", f"lambda1 {_g(b.lambda1)}"]
    return lines


def write_spectral(dirpath, sp, m: int = 256) -> list:
    d = Path(dirpath)
    p1 = write_text(d / "spectral.txt", spectral_lines(sp))
    s = sp.sampled(m)
    cols = [k for k in ("t", "phi1", "phi2", "psi1", "psi2", "tilde_phi1", "tilde_psi2") if k in s]
    p2 = write_csv(d / "spectral_functions.csv", cols, np.column_stack([s[k] for k in cols]))
    return [p1, p2]


def default_t_stride(front: FrontProfile) -> int:
    return max(1, front.M // 16)


def write_front_csv(path, front: FrontProfile, t_stride: int = 0, z_stride: int = 1) -> Path:
    ts = t_stride or default_t_stride(front)
    rows = []
    zs = front.zgrid[::z_stride]
    for m in range(0, front.M, ts):
        sl = slice(None, None, z_stride)
        rows.append(np.column_stack([np.full(zs.size, m), np.full(zs.size, front.tgrid[m]), zs,
                                     front.P[m, sl], front.Q[m, sl], front.Pz[m, sl], front.Qz[m, sl]]))
    meta = front.meta
    sp = front.speed
    header = [f"c = {_g(front.c)}", f"L = {_g(meta.get('L', front.L))}", f"h = {_g(meta.get('h', front.h))}",
              f"dt = {_g(meta.get('dt', front.dt_rec))}", f"T = {_g(front.T)}", f"d = {_g(front.d)}",
              f"drift = {_g(sp.drift) if sp else 'nan'}", f"t_stride = {ts}", f"z_stride = {z_stride}"]
    return write_csv(path, ["t_index", "t", "z", "P", "Q", "Pz", "Qz"], np.vstack(rows), header)


def speed_lines(front: FrontProfile, residual: Optional[float] = None) -> list:
    sp = front.speed
    lines = [f"c {_g(front.c)}"]
    if sp is not None:
        lines += [f"c_level_set {_g(sp.c_level_set)}", f"drift {_g(sp.drift)}",
                  f"converged {sp.converged}", f"periods {sp.periods}"]
    if residual is not None:
        lines.append(f"residual {_g(residual)}")
    return lines


def decay_lines(rep) -> list:
    lines = ["component,side,case,predicted_nu,fitted_nu,rel_error,model,amplitude,rms_residual,deriv_rel_error"]
    for row in rep.rows():
        lines.append(",".join(_g(v) for v in row))
    lines.append("decay: " + ("pass" if rep.passed else "FAIL"))
    lines += [f"failure: {f}" for f in rep.failures]
    return lines


def bounds_lines(br, cst, kb) -> list:
    lines = [f"epsilon {_g(br.epsilon[0])} {_g(br.epsilon[1])}"]
    lines += [f"exponent {k} {_g(v)}" for k, v in br.exponents.items()]
    lines += [f"tail_constant {k} {_g(v)}" for k, v in br.constants.items()]
    lines.append("apriori: " + ("pass" if br.passed else "FAIL"))
    for k in ("M", "N", "M1", "m1", "delta1", "delta2", "gamma1", "gamma2", "eta0", "eta1"):
        lines.append(f"front_constant {k} {_g(getattr(cst, k))}")
    lines += [f"K1 {_g(kb.K1)}", f"K2 {_g(kb.K2)}", f"K {_g(kb.K)}"]
    return lines


def ratio_lines(reports) -> list:
    lines = ["j1,j2,max_H_over_A,bound_H,worst_t,worst_x,max_Ht_over_B,bound_Ht,worst_t,worst_x,excluded,pass"]
    for r in reports:
        lines.append(",".join(_g(v) for v in (r.j1, r.j2, r.max_ratio_H, r.bound_H, *r.worst_H,
                                               r.max_ratio_Ht, r.bound_Ht, *r.worst_Ht, r.excluded,
                                               r.passed)))
    return lines


def entire_lines(run, env_report=None, props=None, curves=None) -> list:
    lines = [f"omega1 {_g(run.omegas[0])}", f"omega2 {_g(run.omegas[1])}",
             f"n_list {' '.join(map(str, run.n_list))}", f"t_end {_g(run.t_end)}"]
    if curves is not None:
        lines += [f"K {_g(curves.K)}", f"varpi {_g(curves.varpi)}", f"rho1 {_g(curves.rho1)}",
                  f"rho2 {_g(curves.rho2)}", f"R0 {_g(curves.R0)}"]
    for k, v in run.diagnostics.items():
        if isinstance(v, tuple):
            v = " ".join(_g(x) for x in v) if v and not isinstance(v[0], str) else str(v)
        lines.append(f"{k} {_g(v)}")
    if env_report is not None:
        lines += [f"envelope_min_super {_g(min(env_report.min_super))}",
                  f"envelope_max_sub {_g(max(env_report.max_sub))}",
                  f"envelope_tol {_g(env_report.tol_env)}",
                  "envelope: " + ("pass" if env_report.passed else "FAIL")]
    if props is not None:
        for k, r in props.results.items():
            lines.append(f"property {k} {_g(r.value)} tol {_g(r.tol)} {'pass' if r.passed else 'FAIL'}")
    return lines


def write_entire_snapshots(dirpath, run, env, times: Sequence[float]) -> list:
    out = []
    n = run.n_max
    for t in times:
        try:
            W = run.solution(n, t)
        except InvalidInputError:
            log.warning("snapshot time %s not recorded; skipped", t)
            continue
        cols = [run.x, W[0], W[1]]
        u, v = env.sub(t, run.x)
        cols += [u, v]
        if env.curves is not None and t <= 0:
            U, V = env.super(t, run.x)
        else:
            U = V = np.full(run.x.size, np.nan)
        cols += [U, V]
        out.append(write_csv(Path(dirpath) / f"entire_t{t:+.4f}.csv",
                             ["x", "u", "v", "u_sub", "v_sub", "U_sup", "V_sup"], np.column_stack(cols),
                             [f"t = {_g(float(t))}", f"n = {n}"]))
    return out


def emit_plots_data(outdir) -> list:
    """Gnuplot-ready data from whatever artifacts exist in ``outdir``; missing ones are skipped."""
    outdir = Path(outdir)
    pdir = outdir / "plots"
    written = []
    fpath = outdir / "front.npz"
    if fpath.exists():
        front, _ = load_front(fpath)
        pdir.mkdir(parents=True, exist_ok=True)
        phases = [int(round(k * front.M / 4)) % front.M for k in range(4)]
        data = np.column_stack([front.zgrid] + [front.P[m] for m in phases] + [front.Q[m] for m in phases])
        written.append(write_csv(pdir / "front_phases.dat", ["z"] + [f"P_{m}" for m in phases]
                                 + [f"Q_{m}" for m in phases], data))
        tails = {"minus_P": front.P, "minus_Q": front.Q, "plus_P": 1 - front.P, "plus_Q": 1 - front.Q}
        for name, W in tails.items():
            sel = front.zgrid < 0 if name.startswith("minus") else front.zgrid > 0
            w = W[:, sel]
            good = np.all(w > 0, axis=0)
            y = np.mean(np.log(w[:, good]), axis=0)
            written.append(write_csv(pdir / f"tail_{name}.dat", ["z", "mean_log"],
                                     np.column_stack([front.zgrid[sel][good], y])))
    else:
        log.warning("no front checkpoint in %s; front plot data skipped", outdir)
    fits = outdir / "decay.txt"
    if fits.exists():
        pdir.mkdir(parents=True, exist_ok=True)
        rows = [ln.split(",") for ln in fits.read_text().splitlines()[1:] if ln.count(",") == 9]
        if rows:
            lines = ["# component side fitted_nu log_amplitude model"]
            for r in rows:
                lines.append(f"{r[0]} {r[1]} {r[4]} {np.log(float(r[7])):.17g} {r[6]}")
            written.append(write_text(pdir / "tail_fits.dat", lines))
    else:
        log.warning("no decay report in %s; fit-line data skipped", outdir)
    snaps = sorted(outdir.glob("entire_t*.csv"))
    if snaps:
        pdir.mkdir(parents=True, exist_ok=True)
        blocks = []
        for p in snaps:
            hdr, cols, data = read_csv(p)
            blocks.append(f"# {hdr[0] if hdr else p.name}")
            blocks += [" ".join(FMT % v for v in row) for row in data]
            blocks += ["", ""]
        written.append(write_text(pdir / "entire_snapshots.dat", blocks))
    else:
        log.warning("no entire snapshots in %s; skipped", outdir)
    return written
