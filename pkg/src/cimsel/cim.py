"""Classical emulation of an amplitude-heterogeneity-corrected Ising solver.

The machine is a network of soft-spin amplitudes ``x_i`` coupled through the
instance matrix ``J`` and stabilised by per-spin error variables ``e_i``:

    dx_i/dt = (p - 1) x_i - x_i^3 + eps * e_i * sum_{j != i} J_ij x_j
    de_i/dt = -beta * (x_i^2 - a) * e_i,        eps = gamma * t

The error variables pump energy into spins whose amplitude sits below the
target ``a`` and bleed it from spins above, which destabilises local minima
of the quadratic form.  Integration is explicit Euler with a fixed step;
the readout after the final step is ``s_i = sign(x_i)`` and the solver's
score is ``s0^T J s0`` (to be maximised).

Notes on the numerics:

* ``eps = gamma * t`` grows without bound over a run (with the default
  constants it reaches 1000 by the last step).  Late in the run the
  coupling term dominates and the amplitude clamp ``x_clip`` plus the decay
  of ``e`` are what keep the state bounded.  This is deliberate; changing
  the ramp changes the solver.
* All randomness lives in the initial amplitudes; the integration itself is
  deterministic.  ``(J, params, master_seed)`` fully determines every
  outcome of :func:`solve`, independent of execution order.
* ``sign(0)`` reads out as +1 (a measure-zero tie; the rule just has to be
  fixed).
* Both state variables are updated from the pre-update amplitudes within a
  step, so the update is order-independent across indices.
* An anneal whose state goes non-finite (possible only with aggressive
  user-supplied parameters) is aborted: its row is frozen at zero and the
  outcome is flagged rather than dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .formulation import IsingInstance
from .rng import substream

__all__ = [
    "E_FLOOR",
    "CimParams",
    "CimState",
    "AnnealOutcome",
    "CimDivergenceError",
    "init_state",
    "step",
    "run_anneal",
    "solve",
    "readout",
    "ising_energy",
    "write_trajectory_csv",
]

# Lower clamp for the error variables, which must stay positive.
E_FLOOR = 1e-12


class CimDivergenceError(RuntimeError):
    """Raised when an anneal's state stops being finite."""


@dataclass(frozen=True)
class CimParams:
    """Dynamical-model constants and run sizes.

    Defaults are the reference operating point used throughout the
    benchmarks: pump ``p`` just below threshold, unit error-correction rate,
    target squared amplitude ``a = 2``, coupling ramp ``eps = gamma * t``
    with ``gamma = 100``, and 1000 Euler steps of ``dt = 0.01``.
    """

    p: float = 0.98
    beta: float = 1.0
    a: float = 2.0
    gamma: float = 100.0
    dt: float = 0.01
    steps: int = 1000
    n_anneals: int = 1000
    init_scale: float = 0.01
    x_clip: float = 10.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.n_anneals < 1:
            raise ValueError(f"n_anneals must be >= 1, got {self.n_anneals}")
        if self.init_scale <= 0:
            raise ValueError(f"init_scale must be positive, got {self.init_scale}")
        if self.x_clip <= np.sqrt(self.a):
            raise ValueError(
                f"x_clip must exceed sqrt(a) = {np.sqrt(self.a):.4g}, got {self.x_clip}"
            )


@dataclass(eq=False)
class CimState:
    """Amplitudes, error variables and elapsed model time of one anneal."""

    x: np.ndarray
    e: np.ndarray
    t: float


@dataclass(eq=False)
class AnnealOutcome:
    """Readout of one anneal: final spins, their energy, optional trajectory."""

    spins: np.ndarray
    energy: float
    aborted: bool = False
    trajectory: Optional[np.ndarray] = None
    trajectory_steps: Optional[np.ndarray] = None


def _coupling_matrix(j) -> np.ndarray:
    return j.j if isinstance(j, IsingInstance) else np.asarray(j, dtype=float)


def readout(x: np.ndarray) -> np.ndarray:
    """Spin readout ``sign(x)`` with zeros mapped to +1."""
    return np.where(x >= 0.0, 1, -1).astype(np.int8)


def ising_energy(j, spins: np.ndarray) -> float:
    """Quadratic score ``s^T J s`` of a spin vector (larger is better here)."""
    jm = _coupling_matrix(j)
    s = np.asarray(spins, dtype=float)
    return float(s @ jm @ s)


def init_state(dim: int, rng: np.random.Generator, init_scale: float = 0.01) -> CimState:
    """Fresh anneal state: small uniform amplitudes, unit error variables."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    x = rng.uniform(-init_scale, init_scale, dim)
    return CimState(x=x, e=np.ones(dim), t=0.0)


def _step_arrays(x, e, t, jm, params):
    """One Euler step on batched state arrays; returns new (x, e).

    ``eps`` uses the time at the start of the step, so the coupling term
    vanishes on the very first step.  The error-variable update uses the
    pre-update amplitudes.
    """
    eps = params.gamma * t
    # overflow is the divergence signal, caught via isfinite by the callers;
    # the numpy warnings would only repeat it
    with np.errstate(over="ignore", invalid="ignore"):
        x_sq = x * x
        dx = (params.p - 1.0) * x - x_sq * x + eps * e * (x @ jm)
        e_new = e + params.dt * (-params.beta * (x_sq - params.a) * e)
        x_new = x + params.dt * dx
        np.clip(x_new, -params.x_clip, params.x_clip, out=x_new)
        np.maximum(e_new, E_FLOOR, out=e_new)
    return x_new, e_new


def step(state: CimState, j, params: CimParams) -> CimState:
    """Advance one anneal by a single Euler step (pure; returns a new state)."""
    jm = _coupling_matrix(j)
    if state.x.shape != (jm.shape[0],):
        raise ValueError(
            f"state dimension {state.x.shape} does not match coupling {jm.shape}"
        )
    x, e = _step_arrays(state.x[None, :], state.e[None, :], state.t, jm, params)
    if not (np.isfinite(x).all() and np.isfinite(e).all()):
        raise CimDivergenceError(
            f"non-finite state at t = {state.t + params.dt:.4g}; "
            f"reduce dt or check the coupling matrix"
        )
    return CimState(x=x[0], e=e[0], t=state.t + params.dt)


def _integrate(jm, x0, params, record_every=0):
    """Integrate a batch of anneals (rows of ``x0``) for ``params.steps`` steps.

    Returns ``(x, aborted, snaps, snap_steps)`` where ``snaps`` stacks sign
    readouts of shape ``(n_samples, n_anneals, dim)`` taken at step indices
    ``0, record_every, 2*record_every, ...`` plus the final step.  Rows that
    go non-finite are flagged in ``aborted`` and frozen at zero so the rest
    of the batch keeps integrating.
    """
    x = np.array(x0, dtype=float, copy=True)
    e = np.ones_like(x)
    aborted = np.zeros(len(x), dtype=bool)
    snaps, snap_steps = [], []
    if record_every:
        snaps.append(readout(x))
        snap_steps.append(0)
    for k in range(1, params.steps + 1):
        t = (k - 1) * params.dt
        x, e = _step_arrays(x, e, t, jm, params)
        # cheap whole-batch probe; NaN/inf contaminate the sums if present
        if not np.isfinite(np.sum(x) + np.sum(e)):
            bad = ~(np.isfinite(x).all(axis=1) & np.isfinite(e).all(axis=1))
            aborted |= bad
            x[bad] = 0.0
            e[bad] = 1.0
        if record_every and (k % record_every == 0 or k == params.steps):
            if not snap_steps or snap_steps[-1] != k:
                snaps.append(readout(x))
                snap_steps.append(k)
    snap_arr = np.stack(snaps) if snaps else None
    step_arr = np.asarray(snap_steps, dtype=np.int64) if snaps else None
    return x, aborted, snap_arr, step_arr


def run_anneal(
    j, params: CimParams, rng: np.random.Generator, record_every: int = 0
) -> AnnealOutcome:
    """Run a single anneal from a fresh random initialisation.

    ``record_every > 0`` keeps sign readouts at step 0, every
    ``record_every``-th step and the final step.  A diverged anneal raises
    :class:`CimDivergenceError`.
    """
    jm = _coupling_matrix(j)
    state = init_state(jm.shape[0], rng, params.init_scale)
    x, aborted, snaps, snap_steps = _integrate(jm, state.x[None, :], params, record_every)
    if aborted[0]:
        raise CimDivergenceError("anneal diverged; state went non-finite")
    spins = readout(x[0])
    return AnnealOutcome(
        spins=spins,
        energy=ising_energy(jm, spins),
        trajectory=snaps[:, 0, :] if snaps is not None else None,
        trajectory_steps=snap_steps,
    )


def solve(
    j, params: CimParams, master_seed: int, record_every: int = 0
) -> list[AnnealOutcome]:
    """Run ``params.n_anneals`` independent anneals and return all outcomes.

    Anneal ``k`` draws its initialisation from the stream
    ``(master_seed, k)``, so the result list is ordered by ``k`` and is a
    pure function of ``(j, params, master_seed)``.  The batch is integrated
    as one vectorised system; anneals that diverge come back flagged
    ``aborted`` with NaN energy instead of being dropped.
    """
    jm = _coupling_matrix(j)
    dim = jm.shape[0]
    x0 = np.stack(
        [substream(master_seed, k).uniform(-params.init_scale, params.init_scale, dim)
         for k in range(params.n_anneals)]
    )
    x, aborted, snaps, snap_steps = _integrate(jm, x0, params, record_every)
    spins = readout(x)
    energies = np.einsum("ki,ij,kj->k", spins.astype(float), jm, spins.astype(float))
    outcomes = []
    for k in range(params.n_anneals):
        outcomes.append(
            AnnealOutcome(
                spins=spins[k],
                energy=float("nan") if aborted[k] else float(energies[k]),
                aborted=bool(aborted[k]),
                trajectory=snaps[:, k, :] if snaps is not None else None,
                trajectory_steps=snap_steps,
            )
        )
    return outcomes


def write_trajectory_csv(outcome: AnnealOutcome, j, params: CimParams, path) -> None:
    """Dump one anneal's recorded readouts: step, t, per-spin sign, energy."""
    if outcome.trajectory is None:
        raise ValueError("outcome has no recorded trajectory")
    jm = _coupling_matrix(j)
    dim = jm.shape[1]
    with open(path, "w") as fh:
        fh.write("step,t," + ",".join(f"s{i}" for i in range(dim)) + ",energy\n")
        for k, spins in zip(outcome.trajectory_steps, outcome.trajectory):
            energy = ising_energy(jm, spins)
            cells = [str(int(k)), repr(float(k) * params.dt)]
            cells += [str(int(s)) for s in spins]
            cells.append(repr(energy))
            fh.write(",".join(cells) + "\n")
