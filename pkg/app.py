"""narx-moss command line: data generation, evolutionary structure search,
ranking, outcome analysis, parameter sweeps, statistics and frequency responses."""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from data_generator import derive_seed, generate_dataset, system_spec, write_csv
from decision_maker import PreferenceSpec, RankedEntry, RankedFront, mmd_rank, mtd_rank, preference_weights
from evolution_core import ArchiveEntry, ParetoArchive, decode
from exceptions import ArgumentError, ConfigError
from experiment_config import (
    ExperimentConfig,
    ModelSetSpec,
    SweepConfig,
    load_experiment_config,
    load_sweep_config,
    rebuild_dataset,
)
from frequency_response import duffing_reference_models, linear_frf, resonance_from_poles
from moea_optimizers import run_optimizer
from narx_model import Dataset, EstimatedModel, ModelSet, estimate_parameters, generate_model_set, model_from_dict
from nonparametric_tests import BlockedSamples, MIN_WILCOXON_PAIRS, friedman, hommel_posthoc, wilcoxon_signed_rank
from outcome_analyzer import criteria_frame, information_criteria, outcome_table
from pareto_metrics import (
    FrontSnapshot,
    ObjectiveBounds,
    ReferencePoint,
    coverage,
    dominance_ordering,
    hv_ratio,
    hypervolume,
)
from report_generator import TOP_N, ReportGenerator
from result_store import ResultStore, load_archive, model_set_dict, read_json

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

CROSSOVER_PAIR = ("single_point", "uniform")


def configure_logging(level: str = "INFO", verbose: bool = False):
    logging.basicConfig(level=logging.DEBUG if verbose else getattr(logging, level), format=LOG_FORMAT, force=True)


def parallel_map(fn: Callable, tasks: Sequence, workers: int = 1, desc: str = "runs") -> List:
    """Order-preserving map over a process pool when workers > 1"""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tqdm(tasks, desc=desc, disable=None, leave=False)]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(tqdm(executor.map(fn, tasks), total=len(tasks), desc=desc, disable=None, leave=False))


def _search_task(task) -> ParetoArchive:
    cfg, model_set, data, goal = task
    return run_optimizer(cfg, model_set, data, goal)


def run_seeds(master: int, label: str, runs: int, cell: int = 0) -> List[int]:
    return [derive_seed(master, label, cell, r) for r in range(runs)]


def rank_front(entries: Sequence[ArchiveEntry], method: str, preference: PreferenceSpec) -> RankedFront:
    if method == "mmd":
        return mmd_rank(entries)
    if len(entries) == 1:
        return RankedFront("mtd", [RankedEntry(entries[0], 1.0)])
    return mtd_rank(entries, preference_weights(preference))


def _methods(method: str) -> List[str]:
    return ["mmd", "mtd"] if method == "both" else [method]


def _print_top(ranked: RankedFront, model_set: Optional[ModelSet] = None):
    print(f"top {TOP_N} by {ranked.method.upper()}:")
    for i, item in enumerate(ranked.top(TOP_N), 1):
        line = f"  {i}. xi={item.objectives.xi} nmse={item.objectives.nmse:.4g}% {ranked.score_name}={item.score:.4g}"
        if model_set is not None:
            line += "  " + " + ".join(str(t) for t in decode(item.entry.genome, model_set))
        print(line)


def _fit_pooled(entries: Sequence[ArchiveEntry], data: Dataset, model_set: ModelSet) -> List[EstimatedModel]:
    models = []
    for entry in entries:
        try:
            models.append(estimate_parameters(data, decode(entry.genome, model_set), model_set=model_set))
        except (ArgumentError, np.linalg.LinAlgError) as e:
            logger.warning(f"could not refit pooled structure {entry.genome}: {e}")
    return models


def _model_set_from_meta(meta: Dict) -> Optional[ModelSet]:
    if "model_set" not in meta:
        return None
    return ModelSetSpec(**meta["model_set"]).build()


def cmd_search(config: ExperimentConfig) -> Path:
    """Seeded independent runs, pooled non-dominated set, refits, rankings and outcome analysis"""
    store = ResultStore(config.out)
    label = config.label
    data_seed = derive_seed(config.seed, label, "data")
    data = config.build_dataset(seed=data_seed)
    model_set = config.build_model_set()
    goal = config.goal.to_goal()

    seeds = run_seeds(config.seed, label, config.runs)
    tasks = [(config.run.model_copy(update={"seed": s}), model_set, data, goal) for s in seeds]
    archives = parallel_map(_search_task, tasks, config.workers, desc=f"{label} runs")

    meta = {
        "system": label,
        "algorithm": config.run.algorithm,
        "model_set": model_set_dict(model_set),
        "data": config.describe(data_seed),
        "goal": config.goal.model_dump(),
    }
    for r, (archive, seed) in enumerate(zip(archives, seeds)):
        store.save_archive(f"runs/run_{r:03d}.json", archive, {**meta, "run": r, "seed": seed})

    pooled = ParetoArchive.pooled(archives)
    logger.info(f"{label}: pooled {sum(len(a) for a in archives)} archived structures into {len(pooled)} non-dominated")
    store.save_archive("pooled_archive.json", pooled, {**meta, "runs": config.runs, "master_seed": config.seed})

    entries = pooled.sorted_entries()
    store.save_models("models.json", _fit_pooled(entries, data, model_set), meta)

    rankings = {}
    for method in _methods(config.mcdm.method):
        ranked = rank_front(entries, method, config.mcdm.to_preference())
        rankings[method] = ranked
        store.write_csv(f"rankings_{method}.csv", ranked.to_frame())
        _print_top(ranked, model_set)

    outcomes = None
    if config.system is not None and system_spec(config.system).is_discrete:
        truth = system_spec(config.system).true_structure()
        outcomes = outcome_table(pooled, truth, data, model_set, config.alpha)
        store.write_csv("outcomes.csv", outcomes.to_frame())

    criteria = information_criteria(pooled, data, model_set)
    store.write_csv("criteria.csv", criteria_frame(criteria))

    settings = {"algorithm": config.run.algorithm, "xi_lim": goal.xi_lim, "nmse_lim": goal.nmse_lim}
    report = ReportGenerator(model_set).generate_search_summary(label, settings, archives, pooled, rankings, outcomes, criteria)
    store.write_text("summary.md", report)
    logger.info(f"search results written to {store.root} ({len(store.written)} files)")
    return store.root


def _cell_hvr(fronts: Dict[tuple, ParetoArchive], ideal: Dict[str, ParetoArchive]) -> Dict[tuple, float]:
    """HV ratio of every (crossover, system, cell) front against its system's pooled ideal front"""
    result = {}
    for system, ideal_archive in ideal.items():
        keys = [k for k in fronts if k[1] == system]
        snapshots = {k: FrontSnapshot.from_archive(fronts[k]) for k in keys}
        ideal_front = FrontSnapshot.from_archive(ideal_archive)
        bounds = ObjectiveBounds.of(list(snapshots.values()) + [ideal_front])
        for k in keys:
            result[k] = hv_ratio(snapshots[k], ideal_front, bounds)
    return result


def _crossover_wilcoxon(pairs: pd.DataFrame) -> Dict:
    """One-sided tests of uniform > single-point, per system and pooled"""
    reports = {}
    groups = [(system, frame) for system, frame in pairs.groupby("system", sort=False)] + [("pooled", pairs)]
    for name, frame in groups:
        nonzero = int(np.count_nonzero(frame["uniform"].to_numpy() - frame["single_point"].to_numpy()))
        if 0 < nonzero < MIN_WILCOXON_PAIRS:
            logger.warning(f"wilcoxon for {name} skipped: {nonzero} non-zero differences")
            reports[name] = {"status": "insufficient_pairs", "n_pairs": nonzero}
            continue
        reports[name] = wilcoxon_signed_rank(frame["uniform"], frame["single_point"], alternative="greater").to_dict()
    return reports


def cmd_sweep(sweep: SweepConfig) -> Path:
    """Grid over (p_c, p_m): pooled front per cell, HV ratio to the pooled ideal, mean over systems"""
    store = ResultStore(sweep.out)
    crossovers = list(CROSSOVER_PAIR) if sweep.compare_crossovers else [sweep.crossover]
    cells = sweep.cells
    fronts: Dict[tuple, ParetoArchive] = {}
    audit = []

    for system in sweep.systems:
        source = sweep.data_source(system)
        data_seed = derive_seed(sweep.seed, system, "data")
        data = source.build_dataset(seed=data_seed)
        model_set = source.build_model_set()
        goal = source.goal.to_goal()
        meta = {"system": system, "model_set": model_set_dict(model_set), "data": source.describe(data_seed)}

        for crossover in crossovers:
            # seeds do not depend on the crossover so the two operators see paired streams
            tasks = [
                (sweep.cell_run_config(p_c, p_m, crossover, seed), model_set, data, goal)
                for index, p_c, p_m in cells
                for seed in run_seeds(sweep.seed, system, sweep.runs, index)
            ]
            archives = parallel_map(_search_task, tasks, sweep.workers, desc=f"{system} {crossover}")
            for index, p_c, p_m in cells:
                runs = archives[index * sweep.runs:(index + 1) * sweep.runs]
                pooled = ParetoArchive.pooled(runs)
                fronts[(crossover, system, index)] = pooled
                store.save_archive(
                    f"cells/{crossover}/{system}/cell_{index:03d}.json",
                    pooled,
                    {**meta, "algorithm": sweep.algorithm, "crossover": crossover, "p_c": p_c, "p_m": p_m, "cell": index},
                )
                evaluations = [a.evaluations for a in runs]
                # the last generation may overshoot the budget by at most one population
                if max(evaluations) > sweep.run.fe_budget + sweep.run.ps:
                    raise ArgumentError(f"cell {index} of {system} exceeded the FE budget: {max(evaluations)}")
                audit.append({"system": system, "crossover": crossover, "cell": index, "runs": len(runs), "evaluations": evaluations})
            logger.info(f"{system}/{crossover}: {len(cells)} cells x {sweep.runs} runs done")

    ideal = {
        system: ParetoArchive.pooled([a for k, a in sorted(fronts.items()) if k[1] == system])
        for system in sweep.systems
    }
    for system, archive in ideal.items():
        store.save_archive(f"ideal/{system}.json", archive, {"system": system})
    hvr = _cell_hvr(fronts, ideal)

    matrix = pd.DataFrame(
        [
            {"crossover": c, "system": s, "cell": i, "pc": cells[i][1], "pm": cells[i][2], "hvr": hvr[(c, s, i)]}
            for (c, s, i) in sorted(fronts, key=lambda k: (crossovers.index(k[0]), sweep.systems.index(k[1]), k[2]))
        ]
    )
    store.write_csv("pm_matrix.csv", matrix)
    for crossover in crossovers:
        sweet = (
            matrix[matrix["crossover"] == crossover]
            .groupby("cell", sort=True)
            .agg(pc=("pc", "first"), pm=("pm", "first"), pm_mean=("hvr", "mean"))
            .reset_index(drop=True)
        )
        name = "sweet_spot.csv" if crossover == sweep.crossover else f"sweet_spot_{crossover}.csv"
        store.write_csv(name, sweet)
        best = sweet.iloc[int(sweet["pm_mean"].to_numpy().argmax())]
        print(f"{crossover}: best cell p_c={best['pc']:.3g} p_m={best['pm']:.4g} mean HVR={best['pm_mean']:.4f}")

    store.write_json(
        "sweep_audit.json",
        {"cells": len(cells), "runs_per_cell": sweep.runs, "fe_budget": sweep.run.fe_budget, "entries": audit},
    )

    if sweep.compare_crossovers:
        wide = matrix.pivot_table(index=["system", "cell", "pc", "pm"], columns="crossover", values="hvr", sort=False)
        pairs = wide.reset_index()[["system", "pc", "pm", "single_point", "uniform"]]
        pairs.columns.name = None
        store.write_csv("crossover_pairs.csv", pairs)
        store.write_json("wilcoxon_crossover.json", {"alternative": "uniform > single_point", "tests": _crossover_wilcoxon(pairs)})

    logger.info(f"sweep results written to {store.root}")
    return store.root


def cmd_rank(archive_path: str, method: str, preference: PreferenceSpec, out: str) -> Path:
    archive, meta = load_archive(archive_path)
    entries = archive.sorted_entries()
    if not entries:
        raise ArgumentError(f"{archive_path} holds no structures to rank")
    model_set = _model_set_from_meta(meta)
    store = ResultStore(out)
    for name in _methods(method):
        ranked = rank_front(entries, name, preference)
        store.write_csv(f"rankings_{name}.csv", ranked.to_frame())
        _print_top(ranked, model_set)
    return store.root


def cmd_classify(archive_path: str, system: Optional[str], alpha: float, out: str) -> Path:
    archive, meta = load_archive(archive_path)
    system = system or meta.get("data", {}).get("system") or meta.get("system")
    if system is None:
        raise ConfigError("no system id given and none recorded in the archive", ["system"])
    spec = system_spec(system)
    if not spec.is_discrete:
        raise ArgumentError(f"system {system!r} has no known true structure")

    data = rebuild_dataset(meta.get("data", {}), system)
    model_set = _model_set_from_meta(meta) or spec.build_model_set()
    table = outcome_table(archive, spec.true_structure(), data, model_set, alpha)

    store = ResultStore(out)
    store.write_csv("outcomes.csv", table.to_frame())
    store.write_csv(
        "outcome_structures.csv",
        pd.DataFrame(
            {
                "bits": [r.bits for r in table.rows],
                "label": [r.label.value for r in table.rows],
                "terms": [" + ".join(str(t) for t in r.refined) for r in table.rows],
            }
        ),
    )
    for label, count in table.counts.items():
        print(f"{label.value}: {count}")
    return store.root


def _wilcoxon_columns(frame: pd.DataFrame, x: Optional[str], y: Optional[str]) -> tuple:
    if x and y:
        return x, y
    if {"uniform", "single_point"} <= set(frame.columns):
        return "uniform", "single_point"
    numeric = [c for c in frame.columns if pd.api.types.is_numeric_dtype(frame[c])]
    if len(numeric) < 2:
        raise ArgumentError("wilcoxon needs two numeric columns")
    return numeric[0], numeric[1]


def cmd_stats(
    matrix_path: str,
    test: str,
    out: str,
    larger_is_better: bool = True,
    control: Optional[str] = None,
    x: Optional[str] = None,
    y: Optional[str] = None,
    alternative: str = "greater",
    alpha: float = 0.05,
) -> Path:
    frame = pd.read_csv(matrix_path)
    if test == "wilcoxon":
        x, y = _wilcoxon_columns(frame, x, y)
        report = wilcoxon_signed_rank(frame[x], frame[y], alternative=alternative, alpha=alpha)
        report.details.update({"x": x, "y": y})
    else:
        samples = BlockedSamples.from_frame(frame)
        report = friedman(samples, larger_is_better=larger_is_better, alpha=alpha)
        if test == "hommel":
            ranks = list(report.mean_ranks.values())
            if control is None:
                index = int(np.argmin(ranks))
            elif control in samples.treatments:
                index = samples.treatments.index(control)
            else:
                raise ArgumentError(f"control {control!r} is not one of {samples.treatments}")
            posthoc = hommel_posthoc(ranks, samples.n_blocks, index, samples.treatments, alpha)
            posthoc.details["friedman"] = {"statistic": report.statistic, "p_value": report.p_value}
            report = posthoc

    store = ResultStore(out)
    store.write_json(f"stats_{test}.json", report.to_dict())
    print(f"{test}: statistic={report.statistic:.4g} p={report.p_value:.4g} reject={report.reject}")
    for comparison in report.comparisons:
        print(f"  {comparison.label}: z={comparison.z:.3f} p={comparison.p_value:.4g} adjusted={comparison.adjusted_p:.4g}")
    return store.root


def _load_model(name: str, index: int = 0) -> EstimatedModel:
    references = duffing_reference_models()
    if name.lower() in references:
        return references[name.lower()]
    data = read_json(name)
    if "models" in data:
        models = data["models"]
        if not 0 <= index < len(models):
            raise ArgumentError(f"model index {index} outside 0..{len(models) - 1}")
        return model_from_dict(models[index])
    return model_from_dict(data)


def cmd_frf(model_name: str, fs: float, out: str, index: int = 0, points: Optional[int] = None) -> Path:
    model = _load_model(model_name, index)
    frequencies = np.linspace(0.0, fs / 2.0, points) if points else None
    frf = linear_frf(model, fs, frequencies)
    label = Path(model_name).stem if model_name.endswith(".json") else model_name.lower()

    store = ResultStore(out)
    store.write_csv(f"frf_{label}.csv", frf.to_frame())
    resonance = resonance_from_poles(model, fs)
    peak = "n/a" if frf.degenerate else f"{frf.peak_frequency():.3f} Hz"
    poles = "n/a" if resonance is None else f"{resonance:.3f} Hz"
    print(f"{label}: |H1| peak at {peak}, dominant pole pair at {poles}")
    return store.root


def cmd_compare(archive_paths: Sequence[str], out: str, labels: Optional[Sequence[str]] = None, system: Optional[str] = None) -> Path:
    """HV, HV ratio and coverage of several approximate Pareto sets of one system"""
    if len(archive_paths) < 2:
        raise ArgumentError("compare needs at least two archives")
    loaded = [load_archive(p) for p in archive_paths]
    if labels is None:
        labels = [meta.get("algorithm") or Path(p).stem for p, (_, meta) in zip(archive_paths, loaded)]
        if len(set(labels)) != len(labels):
            labels = [Path(p).stem for p in archive_paths]
    if len(labels) != len(loaded) or len(set(labels)) != len(labels):
        raise ArgumentError("compare needs one distinct label per archive")
    system = system or loaded[0][1].get("system", "")

    archives = [a for a, _ in loaded]
    fronts = [FrontSnapshot.from_archive(a, label) for a, label in zip(archives, labels)]
    ideal = FrontSnapshot.from_archive(ParetoArchive.pooled(archives), "ideal")
    bounds = ObjectiveBounds.of(fronts)
    reference = ReferencePoint()

    rows = []
    for i, front in enumerate(fronts):
        others = ParetoArchive.pooled([a for j, a in enumerate(archives) if j != i])
        rest = FrontSnapshot.from_archive(others, "rest")
        c_ab, c_ba = coverage(front, rest), coverage(rest, front)
        rows.append(
            {
                "system": system,
                "algorithm": front.label,
                "hv": hypervolume(bounds.normalize(front), reference),
                "hv_ratio": hv_ratio(front, ideal, bounds, reference),
                "c_ab": c_ab,
                "c_ba": c_ba,
                "delta_c": c_ab - c_ba,
            }
        )

    ordering = dominance_ordering(fronts)
    store = ResultStore(out)
    store.write_csv("metrics.csv", pd.DataFrame(rows))
    store.write_json(
        "ordering.json",
        {
            "system": system,
            "chain": ordering.chain,
            "relations": [list(r) for r in ordering.relations],
            "deltas": [{"a": a, "b": b, "delta_c": d} for (a, b), d in ordering.deltas.items()],
        },
    )
    print(f"{system}: {ordering}")
    return store.root


def cmd_terms(n_u: int, n_y: int, n_l: int, out: str) -> Path:
    model_set = generate_model_set(n_u, n_y, n_l)
    store = ResultStore(out)
    store.write_csv(
        "terms.csv",
        pd.DataFrame(
            {
                "index": range(model_set.size),
                "term": [str(t) for t in model_set.terms],
                "degree": [t.degree for t in model_set.terms],
            }
        ),
    )
    print(f"model set ({n_u}, {n_y}, {n_l}): {model_set.size} terms")
    return store.root


def cmd_simulate(system: str, seed: int, out: str, n_samples: Optional[int] = None, estimation_len: Optional[int] = None) -> Path:
    """Writes exactly the dataset a search with the same master seed would use"""
    if estimation_len is None and n_samples is not None:
        estimation_len = round(0.7 * n_samples)
    spec = system_spec(system, n_samples=n_samples, estimation_len=estimation_len, seed=derive_seed(seed, system, "data"))
    data = generate_dataset(spec)
    path = write_csv(data, Path(out) / f"{system}.csv")
    logger.info(f"wrote {data.n_samples} samples of {system} to {path}")
    return Path(out)


def _overrides(args: argparse.Namespace) -> Dict:
    return {k: v for k, v in (("seed", args.seed), ("workers", args.workers), ("out", args.out)) if v is not None}


def _search(args: argparse.Namespace):
    overrides = _overrides(args)
    if args.system:
        overrides["system"] = args.system
    if args.runs is not None:
        overrides["runs"] = args.runs
    run = {key: getattr(args, key) for key in ("algorithm", "fe_budget", "ps") if getattr(args, key) is not None}
    if run:
        overrides["run"] = run
    cmd_search(load_experiment_config(args.config, overrides))


def _sweep(args: argparse.Namespace):
    cmd_sweep(load_sweep_config(args.config, _overrides(args)))


def _rank(args: argparse.Namespace):
    try:
        preference = PreferenceSpec(tuple(args.ranks), args.intensity)
    except ArgumentError as e:
        raise ConfigError(str(e), ["ranks", "intensity"]) from e
    cmd_rank(args.archive, args.method, preference, args.out or "rankings")


def _classify(args: argparse.Namespace):
    cmd_classify(args.archive, args.system, args.alpha, args.out or "outcomes")


def _stats(args: argparse.Namespace):
    cmd_stats(
        args.matrix,
        args.test,
        args.out or "stats",
        larger_is_better=not args.smaller_is_better,
        control=args.control,
        x=args.x,
        y=args.y,
        alternative=args.alternative,
        alpha=args.alpha,
    )


def _frf(args: argparse.Namespace):
    cmd_frf(args.model, args.fs, args.out or "frf", args.index, args.points)


def _compare(args: argparse.Namespace):
    cmd_compare(args.archives, args.out or "compare", args.labels, args.system)


def _terms(args: argparse.Namespace):
    cmd_terms(args.n_u, args.n_y, args.n_l, args.out or ".")


def _simulate(args: argparse.Namespace):
    cmd_simulate(args.system, args.seed or 0, args.out or ".", args.n_samples, args.estimation_len)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides the configuration)")
    common.add_argument("--workers", type=int, help="worker processes for independent runs")
    common.add_argument("--out", help="output directory")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("-v", "--verbose", action="store_true", help="shortcut for --log-level DEBUG")

    parser = argparse.ArgumentParser(
        prog="narx-moss",
        description="Multi-objective evolutionary structure selection for polynomial NARX models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("terms", parents=[common], help="enumerate a candidate term set")
    p.add_argument("--n-u", type=int, default=4)
    p.add_argument("--n-y", type=int, default=4)
    p.add_argument("--n-l", type=int, default=3)
    p.set_defaults(handler=_terms)

    p = sub.add_parser("simulate", parents=[common], help="generate a benchmark dataset as u,y CSV")
    p.add_argument("--system", required=True)
    p.add_argument("--n-samples", type=int)
    p.add_argument("--estimation-len", type=int)
    p.set_defaults(handler=_simulate)

    p = sub.add_parser("search", parents=[common], help="multi-run structure search")
    p.add_argument("--system", help="benchmark system id (replaces the configured data source)")
    p.add_argument("--runs", type=int)
    p.add_argument("--algorithm", choices=["nsga2", "spea2", "moead"])
    p.add_argument("--fe-budget", type=int)
    p.add_argument("--ps", type=int)
    p.set_defaults(handler=_search)

    p = sub.add_parser("rank", parents=[common], help="rank an archive by MMD and/or MTD")
    p.add_argument("archive")
    p.add_argument("--method", choices=["mmd", "mtd", "both"], default="both")
    p.add_argument("--ranks", type=int, nargs="+", default=[1, 2], help="objective importance, 1 = most important")
    p.add_argument("--intensity", type=float, default=5.0)
    p.set_defaults(handler=_rank)

    p = sub.add_parser("classify", parents=[common], help="refine archived structures and label search outcomes")
    p.add_argument("archive")
    p.add_argument("--system")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(handler=_classify)

    p = sub.add_parser("sweep", parents=[common], help="crossover/mutation probability sweep")
    p.set_defaults(handler=_sweep)

    p = sub.add_parser("stats", parents=[common], help="Friedman, Hommel post-hoc or Wilcoxon on a CSV")
    p.add_argument("matrix")
    p.add_argument("--test", choices=["friedman", "hommel", "wilcoxon"], default="friedman")
    p.add_argument("--smaller-is-better", action="store_true")
    p.add_argument("--control", help="control treatment for hommel (default: best mean rank)")
    p.add_argument("-x", help="first wilcoxon column")
    p.add_argument("-y", help="second wilcoxon column")
    p.add_argument("--alternative", choices=["greater", "two_sided"], default="greater")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(handler=_stats)

    p = sub.add_parser("frf", parents=[common], help="first-order frequency response of a model")
    p.add_argument("model", help="md1, md2, md3 or a model/models JSON file")
    p.add_argument("--fs", type=float, default=500.0)
    p.add_argument("--index", type=int, default=0, help="entry of a models.json file")
    p.add_argument("--points", type=int)
    p.set_defaults(handler=_frf)

    p = sub.add_parser("compare", parents=[common], help="HV, HV ratio and coverage of several archives")
    p.add_argument("archives", nargs="+")
    p.add_argument("--labels", nargs="+")
    p.add_argument("--system")
    p.set_defaults(handler=_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.verbose)
    if args.workers is not None and args.workers < 1:
        parser.error("--workers must be at least 1")

    try:
        args.handler(args)
    except ConfigError as e:
        logger.error(f"configuration error: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        logger.debug("traceback", exc_info=True)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
