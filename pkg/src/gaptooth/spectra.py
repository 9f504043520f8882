"""Eigenvalue analysis of the one-microstep map of the coupled patch system.

The linear map is assembled column by column from unit perturbations of every
microscopic value, exactly as the integrator would step them.  Its eigenvalues
``mu`` become growth rates ``log(mu)/dt``; the ``m`` slowest are the
macroscale modes and the rest fall into ``n - 1`` groups of ``m`` fast modes
internal to the patches.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigs

from .errors import ConfigError, NumericalError
from .microsim import ModelSpec, PatchConfig, build_patch_config, stable_dt, step
from .ptbc import stencil_pair

__all__ = [
    "OneStepMap",
    "Spectrum",
    "TableRow",
    "assemble_map",
    "eigen_growth",
    "dominant_growth_rates",
    "default_dt",
    "patch_spectrum",
    "table_report",
    "table_row",
    "format_table",
    "write_table_csv",
    "convergence_order",
    "dt_floor",
    "slow_mode_errors",
]

DEFAULT_DT = 1e-6


def _stencil_p(order: int) -> int:
    if order < 2 or order % 2:
        raise ConfigError(f"PtBC order must be an even integer >= 2, got {order}")
    return order // 2


@dataclass(frozen=True)
class OneStepMap:
    matrix: np.ndarray
    dt: float
    cfg: PatchConfig
    model: ModelSpec
    order: int | None
    scheme: str


def assemble_map(cfg: PatchConfig, stencils, dt: float, model: ModelSpec | None = None,
                 scheme: str = "euler") -> OneStepMap:
    """Dense ``(m n) x (m n)`` matrix of one time step of a linear model."""
    model = model or ModelSpec()
    if not model.linear:
        raise ConfigError("the one-step map is only defined for linear models")
    N = cfg.m * cfg.n
    basis = np.eye(N).reshape(N, cfg.m, cfg.n)
    # row i of the stepped batch is the image of unit vector i
    images = step(basis, cfg, model, stencils, dt, scheme).reshape(N, N)
    matrix = np.ascontiguousarray(images.T)
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("non-finite entries in the one-step map")
    order = None if stencils is None else 2 * stencils[1].order
    return OneStepMap(matrix, dt, cfg, model, order, scheme)


def _sort_desc(z: np.ndarray) -> np.ndarray:
    return np.lexsort((-z.imag, -z.real))


@dataclass(frozen=True)
class Spectrum:
    mu: np.ndarray
    growth: np.ndarray
    m: int
    n: int
    dt: float

    @property
    def slow(self) -> np.ndarray:
        return self.growth[: self.m]

    def group(self, ell: int) -> np.ndarray:
        """Growth rates of group ``ell`` (0 = slow macroscale modes)."""
        return self.growth[ell * self.m:(ell + 1) * self.m]

    @property
    def groups(self) -> list[np.ndarray]:
        return [self.group(ell) for ell in range(self.n)]

    @property
    def max_abs_mu(self) -> float:
        return float(np.max(np.abs(self.mu)))

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "re_lambda", "im_lambda", "abs_mu", "group"])
        for i, (lam, mu) in enumerate(zip(self.growth, self.mu)):
            w.writerow([i + 1, f"{lam.real:.12g}", f"{lam.imag:.12g}",
                        f"{abs(mu):.17g}", i // self.m])


def eigen_growth(M: OneStepMap) -> Spectrum:
    """All eigenvalues of the map, converted to growth rates and grouped."""
    try:
        mu = np.linalg.eigvals(M.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(mu)):
        raise NumericalError("eigensolver returned non-finite values")
    lam = np.log(mu.astype(complex)) / M.dt
    order = _sort_desc(lam)
    return Spectrum(mu[order], lam[order], M.cfg.m, M.cfg.n, M.dt)


def dominant_growth_rates(cfg: PatchConfig, stencils, dt: float, k: int,
                          model: ModelSpec | None = None, scheme: str = "euler") -> np.ndarray:
    """Leading ``k`` growth rates by Arnoldi iteration on the stepping map alone.

    Only repeated applications of one time step are used, never the matrix.
    """
    model = model or ModelSpec()
    N = cfg.m * cfg.n

    def matvec(x):
        return step(np.real(x).reshape(cfg.m, cfg.n), cfg, model, stencils, dt, scheme).ravel()

    op = LinearOperator((N, N), matvec=matvec, dtype=float)
    mu = eigs(op, k=k, which="LM", return_eigenvectors=False, tol=1e-13, maxiter=10 * N)
    lam = np.log(mu.astype(complex)) / dt
    return lam[_sort_desc(lam)]


def default_dt(cfg: PatchConfig, scheme: str = "euler") -> float:
    return min(DEFAULT_DT, 0.5 * stable_dt(cfg, scheme))


def patch_spectrum(m: int, n: int = 11, r: float = 0.1, order: int = 4, dt: float | None = None,
                   L: float = 2 * math.pi, model: ModelSpec | None = None,
                   scheme: str = "euler") -> Spectrum:
    cfg = build_patch_config(L, m, r, n)
    st = stencil_pair(_stencil_p(order), r)
    if dt is None:
        dt = default_dt(cfg, scheme)
    return eigen_growth(assemble_map(cfg, st, dt, model, scheme))


@dataclass(frozen=True)
class TableRow:
    m: int
    lam1: float
    lam23: float
    lam45: float
    lam67: float | None
    internal: float

    def as_list(self) -> list:
        return [self.m, self.lam1, self.lam23, self.lam45, self.lam67, self.internal]


def table_report(m_list: Sequence[int], n: int = 11, r: float = 0.1, order: int = 4,
                 dt: float | None = None, L: float = 2 * math.pi) -> list[TableRow]:
    """Leading growth rates per patch count, laid out like the published tables.

    Columns are the real parts of modes 1, (2,3), (4,5), (6,7) and the first
    internal mode ``m+1``.  Patch counts smaller than the stencil width wrap
    periodically.
    """
    return [table_row(patch_spectrum(m, n, r, order, dt, L)) for m in m_list]


def table_row(spec: Spectrum) -> TableRow:
    g = spec.growth.real
    return TableRow(
        m=spec.m,
        lam1=float(g[0]),
        lam23=float(g[1]),
        lam45=float(g[3]),
        lam67=float(g[5]) if spec.m >= 7 else None,
        internal=float(spec.group(1).real[0]),
    )


def format_table(rows: Sequence[TableRow]) -> str:
    head = f"{'m':>4} | {'1':>10} {'2,3':>11} {'4,5':>11} {'6,7':>11} | {'m+1:2m':>8}"
    lines = [head, "-" * len(head)]
    for row in rows:
        l67 = "n/a" if row.lam67 is None else f"{row.lam67:.6f}"
        lines.append(
            f"{row.m:>4} | {row.lam1:>10.0e} {row.lam23:>11.6f} {row.lam45:>11.6f} "
            f"{l67:>11} | {row.internal:>8.4g}")
    return "\n".join(lines)


def write_table_csv(rows: Sequence[TableRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["m", "lambda_1", "lambda_2_3", "lambda_4_5", "lambda_6_7", "internal"])
    for row in rows:
        w.writerow([row.m] + ["" if v is None else f"{v:.12g}" for v in row.as_list()[1:]])


def slow_mode_errors(m_list: Sequence[int], n: int = 11, r: float = 0.1, order: int = 4,
                     dt: float | None = None, L: float = 2 * math.pi):
    """``(H, |lambda_{2,3} + 1|)`` for each patch count."""
    H = np.array([L / m for m in m_list])
    errors = np.array([abs(patch_spectrum(m, n, r, order, dt, L).growth[1].real + 1.0)
                       for m in m_list])
    return H, errors


def dt_floor(m: int, n: int = 11, r: float = 0.1, order: int = 4, dt: float | None = None,
             L: float = 2 * math.pi) -> float:
    """Time-discretisation floor of ``lambda_{2,3}`` from a dt-halving probe.

    First-order stepping error is about twice the change on halving dt.
    """
    cfg = build_patch_config(L, m, r, n)
    if dt is None:
        dt = default_dt(cfg)
    full = patch_spectrum(m, n, r, order, dt, L).growth[1].real
    half = patch_spectrum(m, n, r, order, dt / 2, L).growth[1].real
    return 2.0 * abs(full - half)


def convergence_order(H, errors, floor: float | None = None) -> float:
    """Least-squares slope of ``log|error|`` against ``log H``.

    Points below ``10 * floor`` are dropped as being at the roundoff or
    time-stepping floor.
    """
    H = np.asarray(H, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    if H.shape != errors.shape or H.size < 3:
        raise ConfigError("need at least three (H, error) pairs")
    keep = errors > (10.0 * floor if floor else 0.0)
    if keep.sum() < 2:
        raise NumericalError("degenerate fit: fewer than two errors above the floor")
    slope, _ = np.polyfit(np.log(H[keep]), np.log(errors[keep]), 1)
    return float(slope)
