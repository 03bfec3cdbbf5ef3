"""Scenario files, seeded ensembles, statistics, and the model comparator.

A scenario is a strict JSON document: a top-level "kind" discriminator picks
the schema, unknown keys are rejected, and every run is reproducible from
the file plus its seed.  Ensembles fan out over a process pool and are
aggregated in run-index order so the output never depends on completion
order.
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import compliance, fluid, junction
from .agent import AgentTangleSim
from .arrivals import ArrivalProcess
from .reduced import Injection, ReducedTangleSim
from .seeding import seed_stream

KINDS = ("tangle-reduced", "tangle-agent", "fluid", "compliance-net", "junction")


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


class _Block:
    """Dict wrapper that tracks consumed keys and rejects leftovers."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ScenarioError(f"{path}: expected an object")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    _REQUIRED = object()

    def take(self, key: str, default: Any = _REQUIRED):
        self.seen.add(key)
        if key in self.data:
            return self.data[key]
        if default is self._REQUIRED:
            raise ScenarioError(f"{self.path}: missing required field '{key}'")
        return default

    def block(self, key: str, required: bool = False) -> "_Block | None":
        raw = self.take(key, None if not required else self._REQUIRED)
        if raw is None:
            return None
        return _Block(raw, f"{self.path}.{key}")

    def done(self) -> None:
        extra = set(self.data) - self.seen
        if extra:
            raise ScenarioError(
                f"{self.path}: unknown field(s) {sorted(extra)} (strict parsing)"
            )


def _number(value, path: str, positive: bool = False) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if positive and not v > 0:
        raise ScenarioError(f"{path}: must be positive, got {v}")
    return v


def _integer(value, path: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ScenarioError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{path}: must be >= {minimum}, got {value}")
    return value


@dataclass
class Scenario:
    kind: str
    name: str
    seed: int
    runs: int
    horizon: float
    params: dict  # normalized kind-specific block
    out_stem: str | None = None
    per_run: bool = False

    def semantic_dict(self) -> dict:
        """Everything that affects the numbers (not output naming)."""
        return {
            "kind": self.kind,
            "seed": self.seed,
            "runs": self.runs,
            "horizon": self.horizon,
            "params": self.params,
        }


def config_hash(scenario: Scenario) -> str:
    payload = json.dumps(
        scenario.semantic_dict(), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def _parse_injections(raw, path: str) -> list[dict]:
    if raw is None:
        return []
    if not isinstance(raw, list):
        raise ScenarioError(f"{path}: expected a list")
    out = []
    for k, item in enumerate(raw):
        b = _Block(item, f"{path}[{k}]")
        out.append(
            {
                "time": _number(b.take("time"), f"{path}[{k}].time"),
                "type": _integer(b.take("type"), f"{path}[{k}].type", minimum=2),
                "count": _integer(b.take("count"), f"{path}[{k}].count", minimum=1),
            }
        )
        b.done()
    return out


def _parse_tangle(top: _Block, kind: str) -> dict:
    params = {
        "rate": _number(top.take("rate"), f"{top.path}.rate", positive=True),
        "delay": _number(top.take("delay"), f"{top.path}.delay", positive=True),
        "types": _integer(top.take("types", 1), f"{top.path}.types", minimum=1),
        "arrival_kind": top.take("arrival_kind", "poisson"),
        "stop_arrivals_at": top.take("stop_arrivals_at", None),
        "grid_dt": _number(top.take("grid_dt", 0.5), f"{top.path}.grid_dt", positive=True),
        "injections": _parse_injections(top.take("injections", None), f"{top.path}.injections"),
    }
    if params["arrival_kind"] not in ("poisson", "fixed"):
        raise ScenarioError(f"{top.path}.arrival_kind: unknown kind")
    if params["stop_arrivals_at"] is not None:
        params["stop_arrivals_at"] = _number(
            params["stop_arrivals_at"], f"{top.path}.stop_arrivals_at"
        )
    return params


def _parse_matrix(raw, path: str, n: int) -> list[list[float]]:
    if not isinstance(raw, list) or len(raw) != n:
        raise ScenarioError(f"{path}: expected an {n}x{n} matrix")
    out = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != n:
            raise ScenarioError(f"{path}[{i}]: expected {n} entries")
        out.append([_number(v, f"{path}[{i}]") for v in row])
    return out


def _vector_or_scalar(raw, path: str):
    if isinstance(raw, list):
        return [_number(v, path) for v in raw]
    return _number(raw, path)


def _parse_compliance(top: _Block) -> dict:
    params: dict[str, Any] = {
        "window": _number(top.take("window"), f"{top.path}.window", positive=True),
        "targets": _vector_or_scalar(top.take("targets"), f"{top.path}.targets"),
        "baselines": _vector_or_scalar(top.take("baselines"), f"{top.path}.baselines"),
        "cost_sens": _vector_or_scalar(top.take("cost_sens", 1.0), f"{top.path}.cost_sens"),
        "ctrl_gain": _vector_or_scalar(top.take("ctrl_gain", 1.0), f"{top.path}.ctrl_gain"),
        "step": top.take("step", None),
        "initial_q_offset": _number(
            top.take("initial_q_offset", 0.0), f"{top.path}.initial_q_offset"
        ),
        "initial_costs": top.take("initial_costs", "static"),
    }
    if params["step"] is not None:
        params["step"] = _number(params["step"], f"{top.path}.step", positive=True)
    ring = top.block("ring")
    if ring is not None:
        params["ring"] = {
            "n": _integer(ring.take("n"), f"{ring.path}.n", minimum=3),
            "coupling": _number(ring.take("coupling"), f"{ring.path}.coupling"),
            "lag": _number(ring.take("lag"), f"{ring.path}.lag"),
        }
        ring.done()
        if "coupling" in top.data or "lags" in top.data or "n" in top.data:
            raise ScenarioError(f"{top.path}: give either 'ring' or explicit matrices")
    else:
        n = _integer(top.take("n"), f"{top.path}.n", minimum=1)
        params["n"] = n
        params["coupling"] = _parse_matrix(top.take("coupling"), f"{top.path}.coupling", n)
        params["lags"] = _parse_matrix(top.take("lags"), f"{top.path}.lags", n)
    ic = params["initial_costs"]
    if not (ic == "static" or isinstance(ic, (int, float)) or isinstance(ic, list)):
        raise ScenarioError(f"{top.path}.initial_costs: expected 'static', number, or list")
    return params


def _parse_fluid(top: _Block) -> dict:
    x0 = top.take("x0")
    l0 = top.take("l0")
    if not (isinstance(x0, list) and isinstance(l0, list) and len(x0) == len(l0)):
        raise ScenarioError(f"{top.path}: x0 and l0 must be lists of equal length")
    step_raw = top.take("step", None)
    return {
        "delay": _number(top.take("delay"), f"{top.path}.delay", positive=True),
        "step": (
            None if step_raw is None else _number(step_raw, f"{top.path}.step", positive=True)
        ),
        "x0": [_number(v, f"{top.path}.x0") for v in x0],
        "l0": [_number(v, f"{top.path}.l0") for v in l0],
    }


def _parse_junction(top: _Block) -> dict:
    cfg = top.block("config")
    config = {}
    if cfg is not None:
        config = {
            "switch_period": _integer(cfg.take("switch_period", 10), f"{cfg.path}.switch_period", 1),
            "cross_time": _number(cfg.take("cross_time", 1.0), f"{cfg.path}.cross_time", positive=True),
            "slowdown": _number(cfg.take("slowdown", 1.0), f"{cfg.path}.slowdown"),
            "service_rate": _integer(cfg.take("service_rate", 3), f"{cfg.path}.service_rate", 1),
            "arrival_rate": _number(cfg.take("arrival_rate", 1.0), f"{cfg.path}.arrival_rate", positive=True),
        }
        cfg.done()
    mode = top.take("mode")
    params: dict[str, Any] = {"config": config, "mode": mode}
    if mode == "fixed":
        params["Q"] = _number(top.take("Q"), f"{top.path}.Q")
        if not 0.0 <= params["Q"] <= 1.0:
            raise ScenarioError(f"{top.path}.Q: must lie in [0, 1]")
    elif mode == "closed-loop":
        ctl = top.block("controller")
        controller = {}
        if ctl is not None:
            controller = {
                "slope": _number(ctl.take("slope", 0.6), f"{ctl.path}.slope", positive=True),
                "memory": _number(ctl.take("memory", 1.0), f"{ctl.path}.memory"),
                "gain": _number(ctl.take("gain", 0.1), f"{ctl.path}.gain"),
                "target": _number(ctl.take("target", 0.95), f"{ctl.path}.target"),
            }
            ctl.done()
        params["controller"] = controller
    else:
        raise ScenarioError(f"{top.path}.mode: expected 'fixed' or 'closed-loop'")
    return params


def parse_scenario(source: str | Path | dict, name: str | None = None) -> Scenario:
    """Parse and strictly validate a scenario file (or pre-loaded dict)."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        name = name or path.stem
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ScenarioError(f"scenario file not found: {path}")
        except json.JSONDecodeError as e:
            raise ScenarioError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
    else:
        data = source
        name = name or "scenario"
    top = _Block(data, name)
    kind = top.take("kind")
    if kind not in KINDS:
        raise ScenarioError(f"{name}.kind: unknown kind {kind!r}, expected one of {KINDS}")
    seed = _integer(top.take("seed", 0), f"{name}.seed", minimum=0)
    runs = _integer(top.take("runs", 100), f"{name}.runs", minimum=1)
    horizon = _number(top.take("horizon"), f"{name}.horizon", positive=True)
    out_stem = top.take("out", None)
    per_run = bool(top.take("per_run", False))
    if kind in ("tangle-reduced", "tangle-agent"):
        params = _parse_tangle(top, kind)
    elif kind == "fluid":
        params = _parse_fluid(top)
    elif kind == "compliance-net":
        params = _parse_compliance(top)
    else:
        params = _parse_junction(top)
    top.done()
    return Scenario(kind, name, seed, runs, horizon, params, out_stem, per_run)


# -- builders -----------------------------------------------------------------

def build_tangle_sim(kind: str, params: dict):
    # Missing keys fall back to scenario-file defaults so the builder can be
    # driven with hand-built dicts as well as parsed scenarios.
    arrivals = ArrivalProcess(
        rate=params["rate"],
        kind=params.get("arrival_kind", "poisson"),
        stop=params.get("stop_arrivals_at"),
    )
    injections = tuple(
        Injection(i["time"], i["type"], i["count"])
        for i in params.get("injections", ())
    )
    cls = ReducedTangleSim if kind == "tangle-reduced" else AgentTangleSim
    return cls(
        arrivals=arrivals,
        delay=params["delay"],
        types=params.get("types", 1),
        injections=injections,
    )


def build_network(params: dict) -> compliance.ComplianceNetwork:
    if "ring" in params:
        r = params["ring"]
        targets = params["targets"]
        baselines = params["baselines"]
        if isinstance(targets, list) or isinstance(baselines, list):
            raise ScenarioError("ring networks take scalar targets/baselines")
        cs = params["cost_sens"]
        cg = params["ctrl_gain"]
        if isinstance(cs, list) or isinstance(cg, list):
            raise ScenarioError("ring networks take scalar cost_sens/ctrl_gain")
        return compliance.ComplianceNetwork.ring(
            n=r["n"],
            coupling=r["coupling"],
            lag=r["lag"],
            window=params["window"],
            target=targets,
            baseline=baselines,
            cost_sens=cs,
            ctrl_gain=cg,
        )
    return compliance.ComplianceNetwork.build(
        targets=params["targets"],
        baselines=params["baselines"],
        cost_sens=params["cost_sens"],
        ctrl_gain=params["ctrl_gain"],
        coupling=params["coupling"],
        lags=params["lags"],
        window=params["window"],
    )


def build_junction(params: dict) -> tuple[junction.JunctionConfig, dict]:
    config = junction.JunctionConfig(**params["config"])
    if params["mode"] == "fixed":
        return config, {"fixed_Q": params["Q"]}
    return config, {"controller": junction.ControllerParams(**params["controller"])}


# -- ensemble statistics ------------------------------------------------------

@dataclass
class VarStats:
    mean: np.ndarray
    std: np.ndarray
    p5: np.ndarray
    p95: np.ndarray


def nearest_rank_index(p: float, n: int) -> int:
    """Index of the nearest-rank p-th percentile among n sorted samples."""
    return max(int(np.ceil(p / 100.0 * n)) - 1, 0)


def ensemble_stats(stack: np.ndarray) -> VarStats:
    """Per-time stats over a (runs, times) stack."""
    srt = np.sort(stack, axis=0)
    n = stack.shape[0]
    return VarStats(
        mean=stack.mean(axis=0),
        std=stack.std(axis=0),
        p5=srt[nearest_rank_index(5, n)],
        p95=srt[nearest_rank_index(95, n)],
    )


# -- scenario execution -------------------------------------------------------

def _tangle_member(kind: str, params: dict, horizon: float, seed: int, index: int):
    sim = build_tangle_sim(kind, params)
    frame = sim.run(horizon, seed_stream(seed, index), grid_dt=params.get("grid_dt", 0.5))
    return frame.times, frame.tips, frame.free, frame.pending, frame.created


def run_tangle_ensemble(
    kind: str,
    params: dict,
    horizon: float,
    seed: int,
    runs: int,
    workers: int = 1,
) -> dict:
    """Ensemble of counter trajectories: stats per variable per type.

    Returns {"times": (G,), "L": [VarStats per type], "X": ..., "W": ...,
    "N": ...} with per-type lists indexed 0-based.
    """
    args = [(kind, params, horizon, seed, r) for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_tangle_member, *zip(*args)))
    else:
        results = [_tangle_member(*a) for a in args]
    times = results[0][0]
    d = results[0][1].shape[1]
    out: dict[str, Any] = {"times": times}
    for vi, var in enumerate(("L", "X", "W", "N")):
        stacks = np.stack([res[vi + 1] for res in results])  # (runs, G, d)
        out[var] = [ensemble_stats(stacks[:, :, i]) for i in range(d)]
    return out


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _tangle_ensemble_csv(path: Path, ens: dict, d: int) -> None:
    header = ["time"]
    for i in range(d):
        for var in ("L", "X", "W", "N"):
            for stat in ("mean", "std", "p5", "p95"):
                header.append(f"{var}{i + 1}_{stat}")
    rows = []
    for g, t in enumerate(ens["times"]):
        row = [float(t)]
        for i in range(d):
            for var in ("L", "X", "W", "N"):
                vs = ens[var][i]
                row.extend(
                    (float(vs.mean[g]), float(vs.std[g]), float(vs.p5[g]), float(vs.p95[g]))
                )
        rows.append(row)
    write_csv(path, header, rows)


@dataclass
class RunSummary:
    kind: str
    config_hash: str
    seed: int
    runs: int
    wall_time_s: float
    outputs: list[str] = field(default_factory=list)
    verdict: str | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "runs": self.runs,
            "wall_time_s": self.wall_time_s,
            "outputs": self.outputs,
            "verdict": self.verdict,
        }


def run_scenario(
    scenario: Scenario,
    out_dir: str | Path = ".",
    runs: int | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> RunSummary:
    """Execute a scenario and write its CSV outputs plus a summary JSON."""
    if runs is not None:
        scenario.runs = runs
    if seed is not None:
        scenario.seed = seed
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = scenario.out_stem or scenario.name
    started = time.perf_counter()
    summary = RunSummary(
        kind=scenario.kind,
        config_hash=config_hash(scenario),
        seed=scenario.seed,
        runs=scenario.runs,
        wall_time_s=0.0,
    )
    p = scenario.params
    if scenario.kind in ("tangle-reduced", "tangle-agent"):
        ens = run_tangle_ensemble(
            scenario.kind, p, scenario.horizon, scenario.seed, scenario.runs, workers
        )
        csv_path = out / f"{stem}_ensemble.csv"
        _tangle_ensemble_csv(csv_path, ens, p["types"])
        summary.outputs.append(str(csv_path))
        if scenario.per_run:
            for r in range(scenario.runs):
                sim = build_tangle_sim(scenario.kind, p)
                frame = sim.run(
                    scenario.horizon, seed_stream(scenario.seed, r), grid_dt=p["grid_dt"]
                )
                run_path = out / f"{stem}_run{r:04d}.csv"
                write_csv(
                    run_path,
                    ["time", "type", "tips", "free", "pending", "created"],
                    frame.row_iter(),
                )
                summary.outputs.append(str(run_path))
    elif scenario.kind == "fluid":
        hx, hl = fluid.constant_history(p["x0"], p["l0"])
        traj = fluid.integrate(
            hx, hl, p["delay"], scenario.horizon, step=p["step"]
        )
        csv_path = out / f"{stem}_fluid.csv"
        header = ["time"]
        for i in range(traj.d):
            header.extend((f"x{i + 1}", f"l{i + 1}", f"w{i + 1}"))
        write_csv(csv_path, header, traj.row_iter())
        summary.outputs.append(str(csv_path))
    elif scenario.kind == "compliance-net":
        net = build_network(p)
        sol = compliance.static_solution(net)
        if p["initial_costs"] == "static":
            if not sol.feasible:
                raise ScenarioError(
                    "initial_costs='static' but targets are infeasible: "
                    + "; ".join(sol.violations)
                )
            c0 = sol.costs
        else:
            c0 = p["initial_costs"]
        q0 = np.clip(net.targets + p["initial_q_offset"], 0.0, 1.0)
        traj = compliance.simulate(
            net, scenario.horizon, initial_Q=q0, initial_C=c0, step=p["step"]
        )
        csv_path = out / f"{stem}_compliance.csv"
        header = ["time"]
        header += [f"Q{i + 1}" for i in range(net.n)]
        header += [f"C{i + 1}" for i in range(net.n)]
        header += [f"Qbar{i + 1}" for i in range(net.n)]
        write_csv(csv_path, header, traj.row_iter())
        summary.outputs.append(str(csv_path))
    else:  # junction
        config, mode_kw = build_junction(p)
        ens = junction.run_ensemble(
            config,
            runs=scenario.runs,
            horizon=int(scenario.horizon),
            master_seed=scenario.seed,
            **mode_kw,
        )
        csv_path = out / f"{stem}_junction.csv"
        write_csv(
            csv_path,
            ["time", "vbar_mean", "vbar_std", "q_mean", "c_mean"],
            ens.row_iter(),
        )
        summary.outputs.append(str(csv_path))
    summary.wall_time_s = time.perf_counter() - started
    summary_path = out / f"{stem}_summary.json"
    summary_path.write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    summary.outputs.append(str(summary_path))
    return summary


# -- agent-vs-reduced validation ----------------------------------------------

@dataclass
class ValidationReport:
    passed: bool
    max_rel_L: float
    max_rel_X: float
    per_type_L: list[float]
    per_type_X: list[float]
    compared_from: float
    compared_points: int
    threshold: float = 0.05

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_rel_L": self.max_rel_L,
            "max_rel_X": self.max_rel_X,
            "per_type_L": self.per_type_L,
            "per_type_X": self.per_type_X,
            "compared_from": self.compared_from,
            "compared_points": self.compared_points,
            "threshold": self.threshold,
        }


def validate(
    agent_scenario: Scenario,
    reduced_scenario: Scenario,
    workers: int = 1,
) -> ValidationReport:
    """Compare agent and reduced ensemble means of tips and free tips.

    Refuses structurally incomparable scenarios (type count, horizon, or
    output grid mismatch).  Physical parameters (rate, delay) may differ;
    that simply yields an honest FAIL, which is what negative controls use.
    PASS iff the pointwise relative difference after the transient
    (t > 5 * max delay) stays below 5%.
    """
    if agent_scenario.kind != "tangle-agent":
        raise ScenarioError("first scenario must have kind 'tangle-agent'")
    if reduced_scenario.kind != "tangle-reduced":
        raise ScenarioError("second scenario must have kind 'tangle-reduced'")
    pa, pr = agent_scenario.params, reduced_scenario.params
    if pa["types"] != pr["types"]:
        raise ScenarioError("type counts differ; trajectories are not comparable")
    if agent_scenario.horizon != reduced_scenario.horizon:
        raise ScenarioError("horizons differ; trajectories are not comparable")
    if pa["grid_dt"] != pr["grid_dt"]:
        raise ScenarioError("output grids differ; trajectories are not comparable")
    ens_a = run_tangle_ensemble(
        "tangle-agent", pa, agent_scenario.horizon, agent_scenario.seed,
        agent_scenario.runs, workers,
    )
    ens_r = run_tangle_ensemble(
        "tangle-reduced", pr, reduced_scenario.horizon, reduced_scenario.seed,
        reduced_scenario.runs, workers,
    )
    t_min = 5.0 * max(pa["delay"], pr["delay"])
    mask = ens_a["times"] > t_min
    d = pa["types"]
    per_L, per_X = [], []
    for i in range(d):
        for var, acc in (("L", per_L), ("X", per_X)):
            ma = ens_a[var][i].mean[mask]
            mr = ens_r[var][i].mean[mask]
            rel = np.abs(ma - mr) / np.maximum(np.abs(mr), 1.0)
            acc.append(float(rel.max()))
    max_L, max_X = max(per_L), max(per_X)
    return ValidationReport(
        passed=max(max_L, max_X) < 0.05,
        max_rel_L=max_L,
        max_rel_X=max_X,
        per_type_L=per_L,
        per_type_X=per_X,
        compared_from=t_min,
        compared_points=int(mask.sum()),
    )
