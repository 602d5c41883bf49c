"""IMEX time stepping of the normalized cooperative system on a truncated line."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import BlowUpError, InvalidInputError, PreconditionError
from .kinetics import CoefficientSet, PeriodicOrbit, ReactionPack


@dataclass(frozen=True)
class Grid1D:
    L: float
    h: float
    dt: float

    def __post_init__(self):
        if not (self.L > 0 and self.h > 0 and self.dt > 0):
            raise InvalidInputError("grid parameters must be positive")
        ratio = 2 * self.L / self.h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise InvalidInputError(f"2L/h = {ratio} is not an integer")

    @property
    def n_nodes(self) -> int:
        return int(round(2 * self.L / self.h)) + 1

    @property
    def x(self) -> np.ndarray:
        # symmetric by construction: x[j] = -x[n-1-j] exactly
        n = self.n_nodes
        return self.h * (np.arange(n) - (n // 2))

    def interior(self, margin: float = 10.0) -> np.ndarray:
        return np.abs(self.x) <= self.L - margin + 1e-12


@dataclass
class Field:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def copy(self) -> "Field":
        return Field(self.u.copy(), self.v.copy(), self.t)

    @classmethod
    def constant(cls, grid: Grid1D, u: float, v: float, t: float = 0.0) -> "Field":
        n = grid.n_nodes
        return cls(np.full(n, float(u)), np.full(n, float(v)), t)


@dataclass(frozen=True)
class BoundaryPolicy:
    kind: str = "dirichlet"
    left: tuple = (0.0, 0.0)
    right: tuple = (1.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise InvalidInputError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet":
            for pair in (self.left, self.right):
                if tuple(map(float, pair)) not in ((0.0, 0.0), (1.0, 1.0)):
                    raise InvalidInputError("Dirichlet values must be the equilibria (0,0) or (1,1)")

    @property
    def neumann(self) -> bool:
        return self.kind == "neumann"


FRONT_BOUNDARY = BoundaryPolicy("dirichlet", (0.0, 0.0), (1.0, 1.0))
NEUMANN = BoundaryPolicy("neumann")


def dt_max(pack: ReactionPack) -> float:
    """Largest step keeping the explicit reaction map monotone on the unit square."""
    return 0.5 / pack.lipschitz_bound()


class Stepper:
    """Reusable IMEX integrator bound to one reaction pack, grid and boundary policy."""

    def __init__(self, pack: ReactionPack, grid: Grid1D, boundary: BoundaryPolicy = FRONT_BOUNDARY,
                 backend=None, check_dt: bool = True):
        self.pack = pack
        self.grid = grid
        self.boundary = boundary
        self.impl = backend.imex_run if backend is not None else kernels.imex_run
        self._cache: dict = {}
        if check_dt and grid.dt > dt_max(pack) * (1 + 1e-12):
            raise PreconditionError(f"dt = {grid.dt} exceeds the monotonicity bound {dt_max(pack):.4g}")

    def _table(self, t0: float, nsteps: int, dt: float) -> np.ndarray:
        T = self.pack.T
        phase = round((t0 % T) / T * 2**40)
        key = (phase, nsteps, dt)
        tab = self._cache.get(key)
        if tab is None:
            times = (t0 % T) + (np.arange(nsteps) + 0.5) * dt
            tab = self.pack.table(times)
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = tab
        return tab

    def _run(self, u, v, t0, nsteps, dt, record_stride=0, out=None):
        if nsteps <= 0:
            return
        b = self.boundary
        if out is None:
            out = np.empty((1, 2, 1))
            record_stride = 0
        status = self.impl(u, v, self._table(t0, nsteps, dt), dt, self.grid.h, self.pack.d,
                           int(b.neumann), float(b.left[0]), float(b.left[1]),
                           float(b.right[0]), float(b.right[1]), int(record_stride), out)
        if status < 0:
            raise BlowUpError(f"state left [-10, 10] at step {-status} after t = {t0}")

    def step(self, fld: Field, dt: Optional[float] = None) -> Field:
        dt = self.grid.dt if dt is None else dt
        out = fld.copy()
        self._run(out.u, out.v, fld.t, 1, dt)
        out.t = fld.t + dt
        return out

    def advance(self, fld: Field, nsteps: int, record_stride: int = 0):
        """``nsteps`` full steps in place; optionally returns recorded states (k, 2, n)."""
        rec = None
        if record_stride > 0:
            rec = np.empty((nsteps // record_stride, 2, self.grid.n_nodes))
        self._run(fld.u, fld.v, fld.t, nsteps, self.grid.dt, record_stride, rec)
        fld.t = fld.t + nsteps * self.grid.dt
        return rec

    def evolve(self, fld: Field, t_end: float,
               observer: Optional[Callable[[Field], None]] = None) -> Field:
        """Fixed-step integration to ``t_end``; the last step is shortened to land on it.

        ``observer`` is called with the current state at every period boundary reached.
        """
        if t_end < fld.t - 1e-12:
            raise PreconditionError("t_end precedes the current time")
        out = fld.copy()
        dt, T = self.grid.dt, self.pack.T
        t0 = fld.t
        total = (t_end - t0) / dt
        nfull = int(np.floor(total + 1e-9))
        done = 0
        while done < nfull:
            t = t0 + done * dt
            # next period boundary in step units
            k_next = np.floor(t / T + 1e-9) + 1
            to_boundary = int(round((k_next * T - t) / dt))
            if to_boundary <= 0 or abs(t + to_boundary * dt - k_next * T) > 1e-9 * dt:
                chunk = nfull - done
            else:
                chunk = min(to_boundary, nfull - done)
            self._run(out.u, out.v, t, chunk, dt)
            done += chunk
            out.t = t0 + done * dt
            if observer is not None and abs(out.t / T - round(out.t / T)) < 1e-9:
                observer(out)
        rem = t_end - out.t
        if rem > 1e-12 * dt:
            self._run(out.u, out.v, out.t, 1, rem)
        out.t = t_end
        return out


def step(fld: Field, coeffs: CoefficientSet, orbit: PeriodicOrbit, grid: Grid1D,
         boundary: BoundaryPolicy = FRONT_BOUNDARY) -> Field:
    return Stepper(ReactionPack(coeffs, orbit), grid, boundary).step(fld)


def evolve(fld: Field, t_end: float, coeffs: CoefficientSet, orbit: PeriodicOrbit, grid: Grid1D,
           boundary: BoundaryPolicy = FRONT_BOUNDARY, observer=None) -> Field:
    return Stepper(ReactionPack(coeffs, orbit), grid, boundary).evolve(fld, t_end, observer)


@dataclass(frozen=True)
class OrderReport:
    min_gap_u: float
    min_gap_v: float
    tol: float
    window: float
    passed: bool = field(default=False)


def comparison_test(lower0: Field, upper0: Field, t_end: float, coeffs: CoefficientSet,
                    orbit: PeriodicOrbit, grid: Grid1D, boundary: BoundaryPolicy = NEUMANN,
                    tol: float = 1e-12, margin: float = 10.0, pack: ReactionPack | None = None,
                    check_every: int = 1) -> OrderReport:
    """Evolve an ordered pair with one discretization and track ``min(upper - lower)``."""
    if np.any(lower0.u > upper0.u) or np.any(lower0.v > upper0.v):
        raise PreconditionError("initial data are not ordered")
    pack = pack or ReactionPack(coeffs, orbit)
    st = Stepper(pack, grid, boundary)
    lo, up = lower0.copy(), upper0.copy()
    win = grid.interior(margin) if margin > 0 else np.ones(grid.n_nodes, bool)
    gu = float(np.min(up.u[win] - lo.u[win]))
    gv = float(np.min(up.v[win] - lo.v[win]))
    nsteps = int(round((t_end - lo.t) / grid.dt))
    done = 0
    while done < nsteps:
        chunk = min(check_every, nsteps - done)
        st.advance(lo, chunk)
        st.advance(up, chunk)
        done += chunk
        gu = min(gu, float(np.min(up.u[win] - lo.u[win])))
        gv = min(gv, float(np.min(up.v[win] - lo.v[win])))
    return OrderReport(gu, gv, tol, margin, bool(gu >= -tol and gv >= -tol))
