"""Monte-Carlo benchmark harness.

Reproduces the evaluation protocol end to end: draw channel instances,
compile each into an Ising instance per penalty weight, run the solver's
anneals, decode, apply the random-selection fallback, and aggregate the two
headline metrics

* ``E_rho`` - expected objective value per method, and
* ``P_c``  - probability that a raw solver readout is feasible,

either at the final step (penalty-weight sweeps) or at sampled steps along
the integration (time traces).

Scoring rules
-------------
Per anneal, the solver's output is its decoded assignment when feasible;
when infeasible the *instance-level* fallback assignment (a single seeded
random selection per instance) stands in.  ``cim_best`` is the maximum and
``cim_avg`` the mean of those per-anneal scores, which keeps
``cim_best >= cim_avg`` an identity and makes the solver collapse exactly
onto random selection when nothing is feasible.  ``cim_avg_raw`` averages
feasible decodes only (NaN when there are none).

Determinism
-----------
Channel seeds, solver streams, fallback draws and the random baseline are
all derived from ``(master_seed, instance_id)``, and every objective a row
reports is computed by one shared scoring routine, so the full metric table
is a pure function of the plan: worker counts and scheduling cannot change
a byte of the output.  Channel instances are shared across penalty weights
and methods, and the random-selection baseline scores the same draw the
solver falls back on (common random numbers throughout), which both cuts
variance and turns "best >= random selection" into a per-instance identity.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import ES_BUDGET_DEFAULT, exhaustive_search, nsa, random_selection, search_space_size
from .channel import ChannelMatrix, ConfigAssignment, MimoConfig, generate_channel
from .cim import CimParams, solve
from .formulation import compile_instance
from .rng import derive_seed, substream

__all__ = [
    "ExperimentPlan",
    "MetricRow",
    "MethodSummary",
    "TraceStepSummary",
    "CimInstanceResult",
    "InstanceRecord",
    "SweepResult",
    "TraceResult",
    "CSV_COLUMNS",
    "run_instance",
    "sweep_lambda",
    "time_trace",
    "compare_methods",
    "summarize_comparison",
    "instance_channel_seed",
    "cim_master_seed",
    "write_metric_rows",
    "write_summary_json",
    "write_trace_summary_json",
]

# stream-derivation domains under the master seed
_D_CHANNEL, _D_INSTANCE = 0, 1
# domains under the per-instance seed
_D_CIM, _D_FALLBACK = 0, 1

# full enumeration is cheap below this count; used for internal cross-checks
_ES_ORACLE_CAP = 4096

METHOD_ORDER = ("es", "nsa", "rs", "cim_best", "cim_avg", "cim_avg_raw")

CSV_COLUMNS = ("instance_id", "method", "lambda", "step", "objective", "feasible", "fallback", "seed")


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything a benchmark run depends on."""

    config: MimoConfig
    lambdas: tuple[float, ...]
    cim: CimParams
    n_instances: int = 1000
    master_seed: int = 0
    trace_stride: int = 10
    es_budget: int = ES_BUDGET_DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if self.n_instances < 1:
            raise ValueError(f"n_instances must be >= 1, got {self.n_instances}")
        if any(not 0.0 <= v <= 1.0 for v in self.lambdas):
            raise ValueError(f"penalty weights must lie in [0, 1], got {self.lambdas}")
        if self.trace_stride < 1:
            raise ValueError(f"trace_stride must be >= 1, got {self.trace_stride}")


@dataclass
class MetricRow:
    """One benchmark observation; maps 1:1 onto a results-CSV line.

    ``wall_clock`` is the per-instance compute time; it is informational and
    deliberately not part of the CSV schema (it would break reproducible
    output bytes).
    """

    instance_id: int
    method: str
    lam: float
    step: int
    objective: float
    feasible: bool
    fallback: bool
    seed: int
    wall_clock: float = 0.0


@dataclass
class MethodSummary:
    method: str
    lam: float
    e_rho: float
    p_c: float
    stderr: float
    n: int


@dataclass
class TraceStepSummary:
    step: int
    e_rho_best: float
    e_rho_avg: float
    p_c: float


@dataclass
class CimInstanceResult:
    """Solver-side record for one (instance, penalty weight) pair."""

    lam: float
    best: float
    best_assignment: ConfigAssignment
    avg: float
    avg_raw: float
    p_c: float
    n_feasible: int
    n_anneals: int
    n_aborted: int
    fallback_used: bool
    trace_steps: Optional[np.ndarray] = None
    trace_best: Optional[np.ndarray] = None
    trace_avg: Optional[np.ndarray] = None
    trace_pc: Optional[np.ndarray] = None


@dataclass
class InstanceRecord:
    """Everything measured on one channel instance."""

    instance_id: int
    channel_seed: int
    es_objective: Optional[float]
    es_assignment: Optional[ConfigAssignment]
    nsa_objective: float
    rs_objective: float
    cim: dict[float, CimInstanceResult] = field(default_factory=dict)
    wall_clock: float = 0.0


@dataclass
class SweepResult:
    rows: list[MetricRow]
    summaries: list[MethodSummary]
    records: list[InstanceRecord]
    failures: list[str]


@dataclass
class TraceResult:
    lam: float
    rows: list[MetricRow]
    step_summaries: list[TraceStepSummary]
    records: list[InstanceRecord]
    failures: list[str]


def _decode_states(spins: np.ndarray, config: MimoConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised decode of spin rows: (feasible mask, per-antenna states).

    State entries are only meaningful where the row is feasible.
    """
    shat = spins[:, 1:] * spins[:, :1]
    blocks = (shat > 0).reshape(len(spins), config.n_antennas, config.n_states)
    sums = blocks.sum(axis=2)
    feasible = (sums == 1).all(axis=1)
    states = blocks.argmax(axis=2)
    return feasible, states


def _score_states(a2: np.ndarray, states: np.ndarray, config: MimoConfig) -> np.ndarray:
    """Objective of each states-row; the single scorer behind every metric row."""
    n = config.n_states
    tx = states[:, : config.n_t]
    rx = states[:, config.n_t :]
    cols = np.arange(config.n_t) * n + tx
    rows = np.arange(config.n_r) * n + rx
    vals = a2[rows[:, :, None], cols[:, None, :]]
    return vals.sum(axis=(1, 2))


def _score_assignment(a2: np.ndarray, sel: ConfigAssignment, config: MimoConfig) -> float:
    states = np.array([sel.tx + sel.rx], dtype=np.int64)
    return float(_score_states(a2, states, config)[0])


def _es_oracle(a2: np.ndarray, config: MimoConfig) -> tuple[float, ConfigAssignment]:
    """Independent exhaustive maximum via the shared scorer (small spaces only)."""
    combos = np.array(
        list(itertools.product(range(config.n_states), repeat=config.n_antennas)),
        dtype=np.int64,
    )
    scores = _score_states(a2, combos, config)
    k = int(np.argmax(scores))
    sel = ConfigAssignment(tx=tuple(combos[k, : config.n_t]), rx=tuple(combos[k, config.n_t :]))
    return float(scores[k]), sel


def run_instance(
    g: ChannelMatrix,
    lam: float,
    cim_params: CimParams,
    seed: int,
    record_every: int = 0,
) -> CimInstanceResult:
    """Compile, solve and score one channel instance at one penalty weight.

    ``seed`` is the per-instance control seed: the solver's anneal streams
    and the fallback draw are derived from it, so results are independent
    of scheduling and of the other penalty weights being swept.
    """
    config = g.config
    a2 = np.abs(g.entries) ** 2
    inst = compile_instance(g, lam)
    outcomes = solve(inst, cim_params, cim_master_seed(seed), record_every=record_every)
    spins = np.stack([o.spins for o in outcomes])
    aborted = np.array([o.aborted for o in outcomes], dtype=bool)
    feasible, states = _decode_states(spins, config)
    feasible &= ~aborted
    scores = _score_states(a2, states, config)

    fallback = random_selection(config, substream(seed, _D_FALLBACK))
    fallback_score = _score_assignment(a2, fallback.assignment, config)
    per_anneal = np.where(feasible, scores, fallback_score)

    k_best = int(np.argmax(per_anneal))
    if feasible[k_best]:
        best_assignment = ConfigAssignment(
            tx=tuple(states[k_best, : config.n_t]), rx=tuple(states[k_best, config.n_t :])
        )
    else:
        best_assignment = fallback.assignment
    n_feasible = int(feasible.sum())

    # mean <= max is a mathematical identity of the per-anneal scores, but
    # summation rounding can land the mean one ulp above it; clamp it back
    result = CimInstanceResult(
        lam=lam,
        best=float(per_anneal[k_best]),
        best_assignment=best_assignment,
        avg=min(float(per_anneal.mean()), float(per_anneal[k_best])),
        avg_raw=float(scores[feasible].mean()) if n_feasible else float("nan"),
        p_c=float(feasible.mean()),
        n_feasible=n_feasible,
        n_anneals=len(outcomes),
        n_aborted=int(aborted.sum()),
        fallback_used=not bool(feasible.any()),
    )

    if record_every:
        traj = np.stack([o.trajectory for o in outcomes])  # (n_anneals, n_samples, dim)
        steps = outcomes[0].trajectory_steps
        n_samples = traj.shape[1]
        flat = traj.reshape(-1, traj.shape[2])
        feas_t, states_t = _decode_states(flat, config)
        feas_t &= ~np.repeat(aborted, n_samples)
        scores_t = _score_states(a2, states_t, config)
        per = np.where(feas_t, scores_t, fallback_score).reshape(len(outcomes), n_samples)
        feas_t = feas_t.reshape(len(outcomes), n_samples)
        result.trace_steps = steps
        result.trace_best = per.max(axis=0)
        result.trace_avg = np.minimum(per.mean(axis=0), result.trace_best)
        result.trace_pc = feas_t.mean(axis=0)
    return result


def _instance_record(
    plan: ExperimentPlan, instance_id: int, lambdas: Sequence[float], record_every: int
) -> InstanceRecord:
    tic = time.perf_counter()
    channel_seed = instance_channel_seed(plan.master_seed, instance_id)
    g = generate_channel(plan.config, channel_seed)
    a2 = np.abs(g.entries) ** 2
    inst_seed = derive_seed(plan.master_seed, _D_INSTANCE, instance_id)

    if search_space_size(plan.config) <= plan.es_budget:
        es_result = exhaustive_search(g, plan.es_budget)
        es_assignment = es_result.assignment
        es_objective = _score_assignment(a2, es_assignment, plan.config)
        if search_space_size(plan.config) <= _ES_ORACLE_CAP:
            # guard against scorer/search rounding disagreements on exact ties
            oracle_val, oracle_sel = _es_oracle(a2, plan.config)
            if oracle_val > es_objective:
                es_objective, es_assignment = oracle_val, oracle_sel
    else:
        es_objective, es_assignment = None, None

    nsa_result = nsa(g)
    # the random baseline reuses the fallback stream: the solver's fallback
    # and the RS method then score the same draw (common random numbers), so
    # "solver output >= random selection" holds instance by instance
    rs_result = random_selection(plan.config, substream(inst_seed, _D_FALLBACK))
    record = InstanceRecord(
        instance_id=instance_id,
        channel_seed=channel_seed,
        es_objective=es_objective,
        es_assignment=es_assignment,
        nsa_objective=_score_assignment(a2, nsa_result.assignment, plan.config),
        rs_objective=_score_assignment(a2, rs_result.assignment, plan.config),
    )
    for lam in lambdas:
        record.cim[lam] = run_instance(g, lam, plan.cim, inst_seed, record_every=record_every)
    record.wall_clock = time.perf_counter() - tic
    return record


def _record_task(args):
    """Worker entry point; failures are returned, never raised, so one bad
    instance cannot abort a sweep."""
    plan, instance_id, lambdas, record_every = args
    try:
        return instance_id, _instance_record(plan, instance_id, lambdas, record_every), None
    except Exception as exc:
        return instance_id, None, f"instance {instance_id} failed: {exc!r}"


def _run_records(
    plan: ExperimentPlan, lambdas: Sequence[float], record_every: int, workers: int
) -> tuple[list[InstanceRecord], list[str]]:
    """Compute per-instance records, optionally in parallel, merged by id."""
    tasks = [(plan, k, tuple(lambdas), record_every) for k in range(plan.n_instances)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_record_task, tasks))
    else:
        results = [_record_task(task) for task in tasks]
    results.sort(key=lambda item: item[0])
    records = [rec for _, rec, err in results if err is None]
    failures = [err for _, _, err in results if err is not None]
    return records, failures


def _baseline_rows(record: InstanceRecord, lam: float, step: int) -> list[MetricRow]:
    rows = []
    common = dict(
        instance_id=record.instance_id,
        lam=lam,
        step=step,
        feasible=True,
        fallback=False,
        seed=record.channel_seed,
        wall_clock=record.wall_clock,
    )
    if record.es_objective is not None:
        rows.append(MetricRow(method="es", objective=record.es_objective, **common))
    rows.append(MetricRow(method="nsa", objective=record.nsa_objective, **common))
    rows.append(MetricRow(method="rs", objective=record.rs_objective, **common))
    return rows


def _cim_rows(record: InstanceRecord, lam: float, step: int) -> list[MetricRow]:
    res = record.cim[lam]
    common = dict(
        instance_id=record.instance_id,
        lam=lam,
        step=step,
        seed=record.channel_seed,
        wall_clock=record.wall_clock,
    )
    return [
        MetricRow(
            method="cim_best", objective=res.best, feasible=True,
            fallback=res.fallback_used, **common,
        ),
        MetricRow(
            method="cim_avg", objective=res.avg, feasible=True,
            fallback=res.n_feasible < res.n_anneals, **common,
        ),
        MetricRow(
            method="cim_avg_raw", objective=res.avg_raw, feasible=res.n_feasible > 0,
            fallback=False, **common,
        ),
    ]


def sweep_lambda(plan: ExperimentPlan, workers: int = 1) -> SweepResult:
    """Final-readout metrics for every (method, penalty weight) pair.

    Channel instances are shared across penalty weights and methods; rows
    are ordered by (instance, weight, method) and are a pure function of
    the plan.
    """
    if not plan.lambdas:
        raise ValueError("plan.lambdas must be non-empty")
    records, failures = _run_records(plan, plan.lambdas, 0, workers)
    step = plan.cim.steps
    rows: list[MetricRow] = []
    for record in records:
        for lam in plan.lambdas:
            rows.extend(_baseline_rows(record, lam, step))
            rows.extend(_cim_rows(record, lam, step))
    summaries = _summarize(records, plan.lambdas)
    return SweepResult(rows=rows, summaries=summaries, records=records, failures=failures)


def _summarize(records: list[InstanceRecord], lambdas: Sequence[float]) -> list[MethodSummary]:
    summaries = []
    for lam in lambdas:
        per_method = {
            "es": np.array([r.es_objective for r in records if r.es_objective is not None]),
            "nsa": np.array([r.nsa_objective for r in records]),
            "rs": np.array([r.rs_objective for r in records]),
            "cim_best": np.array([r.cim[lam].best for r in records]),
            "cim_avg": np.array([r.cim[lam].avg for r in records]),
            "cim_avg_raw": np.array([r.cim[lam].avg_raw for r in records]),
        }
        pc = float(np.mean([r.cim[lam].p_c for r in records])) if records else float("nan")
        for method in METHOD_ORDER:
            vals = per_method[method]
            vals = vals[~np.isnan(vals)] if len(vals) else vals
            n = len(vals)
            if n == 0:
                continue
            e_rho = float(vals.mean())
            stderr = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            summaries.append(
                MethodSummary(
                    method=method,
                    lam=lam,
                    e_rho=e_rho,
                    p_c=pc if method.startswith("cim") else 1.0,
                    stderr=stderr,
                    n=n,
                )
            )
    return summaries


def time_trace(plan: ExperimentPlan, lam: float, workers: int = 1) -> TraceResult:
    """Metrics from instantaneous sign readouts along the integration.

    Readouts are sampled at step 0, every ``plan.trace_stride`` steps and
    the final step; per-step scores use the same post-fallback rule as the
    final readout, and ``P_c`` is the fraction of feasible readouts over
    all (instance, anneal) pairs at that step.
    """
    records, failures = _run_records(plan, (float(lam),), plan.trace_stride, workers)
    lam = float(lam)
    rows: list[MetricRow] = []
    for record in records:
        res = record.cim[lam]
        for i, step in enumerate(res.trace_steps):
            common = dict(
                instance_id=record.instance_id,
                lam=lam,
                step=int(step),
                seed=record.channel_seed,
                wall_clock=record.wall_clock,
            )
            rows.append(
                MetricRow(
                    method="cim_best", objective=float(res.trace_best[i]), feasible=True,
                    fallback=res.trace_pc[i] == 0.0, **common,
                )
            )
            rows.append(
                MetricRow(
                    method="cim_avg", objective=float(res.trace_avg[i]), feasible=True,
                    fallback=res.trace_pc[i] < 1.0, **common,
                )
            )
    steps = records[0].cim[lam].trace_steps if records else np.array([], dtype=int)
    step_summaries = []
    for i, step in enumerate(steps):
        step_summaries.append(
            TraceStepSummary(
                step=int(step),
                e_rho_best=float(np.mean([r.cim[lam].trace_best[i] for r in records])),
                e_rho_avg=float(np.mean([r.cim[lam].trace_avg[i] for r in records])),
                p_c=float(np.mean([r.cim[lam].trace_pc[i] for r in records])),
            )
        )
    return TraceResult(
        lam=lam, rows=rows, step_summaries=step_summaries, records=records, failures=failures
    )


def summarize_comparison(
    sweep: SweepResult, methods: Optional[Sequence[str]] = None
) -> list[MethodSummary]:
    """Filter sweep summaries to a method list, asserting guaranteed orderings.

    The exhaustive optimum must dominate every method on every instance and
    best-of-anneals must dominate the anneal average; both are identities of
    the construction, so violations are bugs and raise immediately.
    """
    if methods is None:
        methods = METHOD_ORDER
    if not methods:
        return []
    for record in sweep.records:
        for lam, res in record.cim.items():
            assert res.best >= res.avg, (
                f"instance {record.instance_id}: best {res.best} below average {res.avg}"
            )
            if record.es_objective is not None:
                for value in (record.nsa_objective, record.rs_objective, res.best, res.avg):
                    assert record.es_objective >= value, (
                        f"instance {record.instance_id}: exhaustive optimum "
                        f"{record.es_objective} below method value {value}"
                    )
    return [s for s in sweep.summaries if s.method in set(methods)]


def compare_methods(
    plan: ExperimentPlan, methods: Optional[Sequence[str]] = None, workers: int = 1
) -> list[MethodSummary]:
    """Per-method expected objective with standard errors.

    Exhaustive search appears only when its budget guard passes (the sweep
    simply omits it otherwise).
    """
    if methods is not None and not methods:
        return []
    return summarize_comparison(sweep_lambda(plan, workers=workers), methods)


def instance_channel_seed(master_seed: int, instance_id: int) -> int:
    """Channel seed-of-record for instance ``instance_id`` of a run.

    Shared by the benchmark harness and the file generator so that files
    written for a master seed reproduce the instances a sweep would use.
    """
    return derive_seed(master_seed, _D_CHANNEL, instance_id)


def cim_master_seed(instance_seed: int) -> int:
    """Solver stream root used by :func:`run_instance` for a given instance seed."""
    return derive_seed(instance_seed, _D_CIM)


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt_bool(v: bool) -> str:
    return "true" if v else "false"


def write_metric_rows(rows: Sequence[MetricRow], path) -> None:
    """Write the results CSV.

    First line is a ``# format: 1`` version comment, then the fixed header
    ``instance_id,method,lambda,step,objective,feasible,fallback,seed``.
    Floats use shortest round-trip formatting so output is byte-stable.
    """
    with open(path, "w") as fh:
        fh.write("# format: 1\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in rows:
            fh.write(
                ",".join(
                    (
                        str(r.instance_id),
                        r.method,
                        _fmt_float(r.lam),
                        str(r.step),
                        _fmt_float(r.objective),
                        _fmt_bool(r.feasible),
                        _fmt_bool(r.fallback),
                        str(r.seed),
                    )
                )
                + "\n"
            )


def _none_if_nan(v: float):
    return None if isinstance(v, float) and math.isnan(v) else v


def write_summary_json(summaries: Sequence[MethodSummary], path, extra: Optional[dict] = None) -> None:
    payload = {
        "format": 1,
        "rows": [
            {
                "method": s.method,
                "lambda": s.lam,
                "e_rho": _none_if_nan(s.e_rho),
                "p_c": _none_if_nan(s.p_c),
                "stderr": _none_if_nan(s.stderr),
                "n": s.n,
            }
            for s in summaries
        ],
    }
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def write_trace_summary_json(trace: TraceResult, path) -> None:
    payload = {
        "format": 1,
        "lambda": trace.lam,
        "rows": [
            {
                "step": s.step,
                "e_rho_best": _none_if_nan(s.e_rho_best),
                "e_rho_avg": _none_if_nan(s.e_rho_avg),
                "p_c": _none_if_nan(s.p_c),
            }
            for s in trace.step_summaries
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
