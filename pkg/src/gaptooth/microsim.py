"""Method-of-lines microsimulation on an array of coupled patches.

Each of ``m`` patches carries ``n`` fine-grid points spanning exactly
``[X_j - h/2, X_j + h/2]``.  The patch edges are the first and last fine
points; a ghost value one fine spacing outside each edge makes the centred
difference at the edge equal to the gradient given by the patch boundary
stencils.  Fields are arrays of shape ``(..., m, n)`` so a batch of states
(for example every unit vector when assembling a linear map) steps at once.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericalError
from .ptbc import PtbcStencil, edge_gradients

__all__ = [
    "PatchConfig",
    "MicroState",
    "ModelSpec",
    "build_patch_config",
    "sample",
    "extract_macro",
    "ghost_values",
    "rhs",
    "step",
    "stable_dt",
    "integrate",
    "write_trajectory_csv",
    "burgers_demo_initial",
]

MODEL_KINDS = ("diffusion", "advection-diffusion", "burgers")
SCHEMES = ("euler", "rk4")
# Largest dt * |eigenvalue| on the negative real axis for each scheme
_REAL_AXIS_LIMIT = {"euler": 2.0, "rk4": 2.785293563405282}
BLOWUP_CAP = 1e6


@dataclass(frozen=True)
class PatchConfig:
    L: float
    m: int
    r: float
    n: int

    @property
    def H(self) -> float:
        return self.L / self.m

    @property
    def h(self) -> float:
        return 2.0 * self.r * self.H

    @property
    def dx(self) -> float:
        return self.h / (self.n - 1)

    @property
    def centres(self) -> np.ndarray:
        return np.arange(self.m) * self.H

    @property
    def centre_index(self) -> int:
        return (self.n - 1) // 2

    def fine_x(self) -> np.ndarray:
        """Fine-grid positions, shape ``(m, n)``."""
        i = np.arange(self.n)
        return self.centres[:, None] - self.h / 2 + i[None, :] * self.dx


def build_patch_config(L: float = 2 * math.pi, m: int = 8, r: float = 0.1,
                       n: int = 11) -> PatchConfig:
    if int(m) != m or m < 2:
        raise ConfigError(f"patch count m must be an integer >= 2, got {m}")
    if int(n) != n or n < 3 or n % 2 == 0:
        raise ConfigError(f"fine points n must be odd and >= 3, got {n}")
    if not 0 < r <= 0.5:
        raise ConfigError(f"patch ratio r must lie in (0, 1/2], got {r}")
    if not (math.isfinite(L) and L > 0):
        raise ConfigError(f"domain length must be positive, got {L}")
    return PatchConfig(float(L), int(m), float(r), int(n))


@dataclass(frozen=True)
class MicroState:
    t: float
    v: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.v)):
            raise NumericalError(f"non-finite field values at t={self.t}")


@dataclass(frozen=True)
class ModelSpec:
    """``u_t = u_xx - c u_x`` (linear kinds) or ``u_t = u_xx - strength u u_x``."""

    kind: str = "diffusion"
    c: float = 0.0
    strength: float = 100.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}; choose from {MODEL_KINDS}")
        if not (math.isfinite(self.c) and math.isfinite(self.strength)):
            raise ConfigError("model coefficients must be finite")

    @property
    def linear(self) -> bool:
        return self.kind != "burgers"


def sample(cfg: PatchConfig, f: Callable[[np.ndarray], np.ndarray], t: float = 0.0) -> MicroState:
    return MicroState(t, np.asarray(f(cfg.fine_x()), dtype=float))


def burgers_demo_initial(x):
    # stand-in for the unpublished two-hump initial field of the Burgers demo
    return 0.3 + 0.25 * np.sin(x) + 0.2 * np.cos(2 * x)


def extract_macro(v, cfg: PatchConfig) -> np.ndarray:
    """Macroscopic grid values: the centre fine value of every patch."""
    if isinstance(v, MicroState):
        v = v.v
    return np.asarray(v)[..., cfg.centre_index]


def ghost_values(v, cfg: PatchConfig, stencils, U=None):
    """Ghost values ``(left, right)`` one fine spacing outside each patch.

    With ``stencils=None`` the patches are insulated (zero edge flux).
    """
    if isinstance(v, MicroState):
        v = v.v
    v = np.asarray(v)
    if stencils is None:
        return v[..., 1].copy(), v[..., -2].copy()
    minus, plus = stencils
    if U is None:
        U = extract_macro(v, cfg)
    scale = 2.0 * cfg.dx / cfg.H
    g_right = v[..., -2] + scale * edge_gradients(plus, U)
    g_left = v[..., 1] - scale * edge_gradients(minus, U)
    return g_left, g_right


def rhs(v, cfg: PatchConfig, model: ModelSpec, stencils) -> np.ndarray:
    """Time derivative of the fine field, ghosts recomputed from ``v``."""
    if isinstance(v, MicroState):
        v = v.v
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NumericalError("non-finite values in state")
    g_left, g_right = ghost_values(v, cfg, stencils)
    ext = np.concatenate([g_left[..., None], v, g_right[..., None]], axis=-1)
    dx = cfg.dx
    out = (ext[..., 2:] - 2.0 * v + ext[..., :-2]) / dx**2
    if model.kind == "diffusion":
        return out
    grad = (ext[..., 2:] - ext[..., :-2]) / (2.0 * dx)
    if model.kind == "advection-diffusion":
        return out - model.c * grad
    return out - model.strength * v * grad


def step(v: np.ndarray, cfg: PatchConfig, model: ModelSpec, stencils, dt: float,
         scheme: str = "euler") -> np.ndarray:
    """One explicit time step; pure."""
    if scheme == "euler":
        return v + dt * rhs(v, cfg, model, stencils)
    if scheme == "rk4":
        k1 = rhs(v, cfg, model, stencils)
        k2 = rhs(v + 0.5 * dt * k1, cfg, model, stencils)
        k3 = rhs(v + 0.5 * dt * k2, cfg, model, stencils)
        k4 = rhs(v + dt * k3, cfg, model, stencils)
        return v + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    raise ConfigError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def stable_dt(cfg: PatchConfig, scheme: str = "euler") -> float:
    """Diffusive stability bound (``dx**2/2`` for Euler)."""
    if scheme not in _REAL_AXIS_LIMIT:
        raise ConfigError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return _REAL_AXIS_LIMIT[scheme] * cfg.dx**2 / 4.0


def integrate(s0: MicroState, cfg: PatchConfig, model: ModelSpec, stencils, dt: float,
              t_end: float, scheme: str = "euler", output_times: Sequence[float] | None = None,
              cap: float = BLOWUP_CAP, check_stability: bool = True) -> list[MicroState]:
    """Step from ``s0`` to ``t_end`` and return snapshots at ``output_times``.

    Output times are snapped to the nearest whole step; by default only the
    initial and final states are returned.
    """
    if dt <= 0 or t_end < s0.t:
        raise ConfigError("need dt > 0 and t_end >= initial time")
    if check_stability and dt > stable_dt(cfg, scheme) * (1 + 1e-12):
        raise ConfigError(
            f"dt={dt:g} exceeds the {scheme} diffusive bound {stable_dt(cfg, scheme):g}; "
            "pass check_stability=False to override")
    nsteps = int(round((t_end - s0.t) / dt))
    if output_times is None:
        output_times = [s0.t, t_end]
    wanted = sorted({min(nsteps, max(0, int(round((t - s0.t) / dt)))) for t in output_times})

    v = np.array(s0.v, dtype=float)
    traj = []
    pending = list(wanted)
    for k in range(nsteps + 1):
        if pending and pending[0] == k:
            traj.append(MicroState(s0.t + k * dt, v.copy()))
            pending.pop(0)
        if k == nsteps:
            break
        v = step(v, cfg, model, stencils, dt, scheme)
        peak = np.max(np.abs(v))
        if not np.isfinite(peak) or peak > cap:
            raise NumericalError(
                f"blow-up at t={s0.t + (k + 1) * dt:.6g}: max|v|={peak:.3g} exceeds cap {cap:g}")
    return traj


def write_trajectory_csv(traj: Sequence[MicroState], cfg: PatchConfig, fh) -> None:
    """Rows ``t, patch_j, fine_i, x, u`` for every fine point of every snapshot."""
    x = cfg.fine_x()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "patch_j", "fine_i", "x", "u"])
    for s in traj:
        for j in range(cfg.m):
            for i in range(cfg.n):
                w.writerow([f"{s.t:.10g}", j, i, f"{x[j, i]:.17g}", f"{s.v[j, i]:.17g}"])
