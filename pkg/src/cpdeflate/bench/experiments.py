"""Experiment drivers behind the benchmark CLI.

Every driver takes a resolved :class:`ExperimentConfig` and returns a
list of :class:`ResultRow`.  Trials are seeded as (master seed, cell id,
trial index) through :class:`numpy.random.SeedSequence`, so results are
bit-reproducible for a given config regardless of execution order; the
``CPDEFLATE_THREADS`` environment variable caps how many trials run
concurrently.
"""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..diagnostics import estimate_F
from ..rank1 import best_rank1_oracle, ce_refine, rank1_als, residual, seroap, thosvd
from ..solvers import StopRule, als, cg_els, dcpd, random_model
from ..tensors import add_noise, norm, random_cp, random_tensor
from .config import ExperimentConfig, resolve
from .io import ResultRow, shape_label

__all__ = ["run_experiment", "run_fig2", "run_tables", "run_fig3", "run_fig4", "run_fig5", "run_conjecture"]


def _workers() -> int:
    raw = os.environ.get("CPDEFLATE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_trials(fn, n_trials: int):
    """Run fn(trial_index) for every trial; order-independent, seed-driven.

    Returns ``(results, failures)``: results as (trial, value) pairs for
    the trials that completed and failures as (trial, exception) pairs, so
    no trial ever drops silently.
    """

    def guarded(i):
        try:
            return True, i, fn(i)
        except Exception as exc:  # noqa: BLE001 - reported as an error row
            return False, i, exc

    workers = _workers()
    if workers == 1:
        outcomes = [guarded(i) for i in range(n_trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(guarded, range(n_trials)))
    results = [(i, v) for ok, i, v in outcomes if ok]
    failures = [(i, v) for ok, i, v in outcomes if not ok]
    return results, failures


def _trial_seed(master: int, cell: str, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master, zlib.crc32(cell.encode()), trial])


def _stop(config: ExperimentConfig, max_iterations: int, rel_tol, abs_target) -> StopRule:
    return StopRule(
        max_iterations=config.max_iterations or max_iterations,
        rel_tol=config.rel_tol if config.rel_tol is not None else rel_tol,
        abs_target=config.abs_target if config.abs_target is not None else abs_target,
    )


def _error_rows(config, failures, **labels) -> list:
    return [
        ResultRow(
            experiment=config.experiment,
            statistic="error",
            value=float("nan"),
            trials=config.trials,
            trial=str(trial),
            status=f"error:{type(exc).__name__}: {exc}",
            **labels,
        )
        for trial, exc in failures
    ]


# ---------------------------------------------------------------------------
# fig2: residual gap between the two algebraic rank-1 operators


def run_fig2(config: ExperimentConfig) -> list:
    config = resolve(config)
    rows = []
    for shape in config.shapes:
        label = shape_label(shape)

        def one_trial(trial, _shape=shape, _label=label):
            seq = _trial_seed(config.seed, f"fig2:{_label}", trial)
            t = random_tensor(_shape, field=config.field, seed=np.random.default_rng(seq))
            return residual(t, thosvd(t)) - residual(t, seroap(t))

        results, failures = _map_trials(one_trial, config.trials)
        rows.extend(_error_rows(config, failures, shape=label))
        for trial, d in results:
            rows.append(ResultRow(config.experiment, "delta_phi", float(d), config.trials,
                                  shape=label, trial=str(trial)))
        arr = np.asarray([d for _, d in results])
        rows.append(ResultRow(config.experiment, "delta_phi_min", float(arr.min()), config.trials, shape=label))
        rows.append(ResultRow(config.experiment, "delta_phi_mean", float(arr.mean()), config.trials, shape=label))
    return rows


# ---------------------------------------------------------------------------
# tables: MSE of each rank-1 method against the multi-restart oracle


def run_tables(config: ExperimentConfig) -> list:
    config = resolve(config)
    rows = []
    for shape in config.shapes:
        label = shape_label(shape)

        def one_trial(trial, _shape=shape, _label=label):
            seq = _trial_seed(config.seed, f"tables:{_label}", trial)
            rng = np.random.default_rng(seq)
            t = random_tensor(_shape, field=config.field, seed=rng)
            while norm(t) == 0.0:  # probability-zero guard
                t = random_tensor(_shape, field=config.field, seed=rng)
            best = best_rank1_oracle(t, restarts=config.oracle_restarts, seed=rng,
                                     ce_tol=config.ce_tol)
            best_res = residual(t, best)
            se_term = seroap(t)
            out = {
                "thosvd": residual(t, thosvd(t)) - best_res,
                "seroap": residual(t, se_term) - best_res,
            }
            ce_term, state = ce_refine(t, se_term, max_iter=500, tol=config.ce_tol)
            out["ce"] = residual(t, ce_term) - best_res
            iters = {"ce": state.iterations}
            als_term, als_iters = rank1_als(t, se_term)
            out["als1"] = residual(t, als_term) - best_res
            iters["als1"] = als_iters
            return out, iters

        results, failures = _map_trials(one_trial, config.trials)
        rows.extend(_error_rows(config, failures, shape=label))
        for algo in config.algorithms:
            deltas = np.asarray([r[0][algo] for _, r in results])
            for (trial, _), d in zip(results, deltas):
                rows.append(ResultRow(config.experiment, "delta_phi", float(d), config.trials,
                                      shape=label, algorithm=algo, trial=str(trial)))
            rows.append(ResultRow(config.experiment, "mse", float(np.mean(deltas**2)),
                                  config.trials, shape=label, algorithm=algo))
            if algo in ("ce", "als1"):
                iters = np.asarray([r[1][algo] for _, r in results], dtype=float)
                rows.append(ResultRow(config.experiment, "mean_iterations", float(iters.mean()),
                                      config.trials, shape=label, algorithm=algo))
    return rows


# ---------------------------------------------------------------------------
# shared CP-solver trial used by fig3 / fig4 / fig5


def _run_algorithm(algo: str, t: np.ndarray, rank: int, stop: StopRule, init_seed) -> list:
    """Residual history (one value per iteration / sweep)."""
    if algo == "als":
        init = random_model(t.shape, rank, seed=init_seed)
        _, report = als(t, rank, init=init, stop=stop)
        return report.residual_history[1:]
    if algo == "cg_els":
        init = random_model(t.shape, rank, seed=init_seed)
        _, report = cg_els(t, rank, init=init, stop=stop)
        return report.residual_history[1:]
    if algo.startswith("dcpd-"):
        _, trace = dcpd(t, rank, phi=algo[len("dcpd-"):], stop=stop, record_angles=False)
        return trace.sweep_residuals
    raise ValueError(f"unknown algorithm {algo!r}")


def _solver_stop(config: ExperimentConfig, algo: str, abs_target) -> StopRule:
    if algo.startswith("dcpd-"):
        return _stop(config, 5000, 1e-12, abs_target)
    return _stop(config, 1000, 1e-10, abs_target)


def run_fig3(config: ExperimentConfig) -> list:
    """Success percentage of exact rank-R decompositions, noiseless."""
    config = resolve(config)
    rows = []
    threshold = config.success_threshold
    for shape in config.shapes:
        for rank in config.ranks:
            label = shape_label(shape)

            def one_trial(trial, _shape=shape, _rank=rank, _label=label):
                seq = _trial_seed(config.seed, f"fig3:{_label}:r{_rank}", trial)
                children = seq.spawn(1 + len(config.algorithms))
                _, t = random_cp(_shape, _rank, field=config.field,
                                 seed=np.random.default_rng(children[0]))
                finals = {}
                for i, algo in enumerate(config.algorithms):
                    stop = _solver_stop(config, algo, threshold)
                    history = _run_algorithm(algo, t, _rank, stop, children[1 + i])
                    finals[algo] = history[-1]
                return finals

            results, failures = _map_trials(one_trial, config.trials)
            rows.extend(_error_rows(config, failures, shape=label, rank=str(rank)))
            for algo in config.algorithms:
                finals = np.asarray([r[algo] for _, r in results])
                for (trial, _), v in zip(results, finals):
                    rows.append(ResultRow(config.experiment, "final_residual", float(v),
                                          config.trials, shape=label, rank=str(rank),
                                          algorithm=algo, trial=str(trial)))
                success = 100.0 * float(np.mean(finals <= threshold)) if results else 0.0
                rows.append(ResultRow(config.experiment, "success_rate", success, config.trials,
                                      shape=label, rank=str(rank), algorithm=algo))
    return rows


def run_fig4(config: ExperimentConfig) -> list:
    """Mean relative residual per iteration under additive noise.

    One iteration means one ALS sweep, one CG iteration, or one deflation
    sweep; curves from trials that stop early are padded with their final
    value.  Residuals are normalized by the norm of the (noisy) input so
    the noise floor sits at ``10**(-snr/20)``.
    """
    config = resolve(config)
    rows = []
    max_iter = config.max_iterations or 150
    for shape in config.shapes:
        for rank in config.ranks:
            for snr in config.snr_db:
                label = shape_label(shape)

                def one_trial(trial, _shape=shape, _rank=rank, _snr=snr, _label=label):
                    seq = _trial_seed(config.seed, f"fig4:{_label}:r{_rank}:snr{_snr}", trial)
                    children = seq.spawn(2 + len(config.algorithms))
                    _, clean = random_cp(_shape, _rank, field=config.field,
                                         seed=np.random.default_rng(children[0]))
                    t = add_noise(clean, _snr, seed=np.random.default_rng(children[1]))
                    scale = norm(t)
                    curves = {}
                    stop = StopRule(max_iterations=max_iter, rel_tol=None, abs_target=None)
                    for i, algo in enumerate(config.algorithms):
                        history = _run_algorithm(algo, t, _rank, stop, children[2 + i])
                        curve = np.asarray(history, dtype=float) / scale
                        if curve.size < max_iter:  # early stop: hold the last value
                            curve = np.concatenate([curve, np.full(max_iter - curve.size, curve[-1])])
                        curves[algo] = curve
                    return curves

                results, failures = _map_trials(one_trial, config.trials)
                rows.extend(_error_rows(config, failures, shape=label, rank=str(rank),
                                        snr_db=repr(float(snr))))
                for algo in config.algorithms:
                    mean_curve = np.mean([r[algo] for _, r in results], axis=0)
                    for it, v in enumerate(mean_curve, start=1):
                        rows.append(ResultRow(config.experiment, "mean_rel_residual", float(v),
                                              config.trials, shape=label, rank=str(rank),
                                              snr_db=repr(float(snr)), algorithm=algo,
                                              iteration=str(it)))
                    for trial, r in results:
                        rows.append(ResultRow(config.experiment, "final_rel_residual",
                                              float(r[algo][-1]), config.trials, shape=label,
                                              rank=str(rank), snr_db=repr(float(snr)),
                                              algorithm=algo, trial=str(trial)))
    return rows


def run_fig5(config: ExperimentConfig) -> list:
    """Mean final relative residual under rank variation, two SNRs."""
    config = resolve(config)
    rows = []
    means = {}
    for shape in config.shapes:
        for rank in config.ranks:
            for snr in config.snr_db:
                label = shape_label(shape)

                def one_trial(trial, _shape=shape, _rank=rank, _snr=snr, _label=label):
                    seq = _trial_seed(config.seed, f"fig5:{_label}:r{_rank}:snr{_snr}", trial)
                    children = seq.spawn(2 + len(config.algorithms))
                    _, clean = random_cp(_shape, _rank, field=config.field,
                                         seed=np.random.default_rng(children[0]))
                    t = add_noise(clean, _snr, seed=np.random.default_rng(children[1]))
                    scale = norm(t)
                    finals = {}
                    for i, algo in enumerate(config.algorithms):
                        stop = _solver_stop(config, algo, None)
                        history = _run_algorithm(algo, t, _rank, stop, children[2 + i])
                        finals[algo] = history[-1] / scale
                    return finals

                results, failures = _map_trials(one_trial, config.trials)
                rows.extend(_error_rows(config, failures, shape=label, rank=str(rank),
                                        snr_db=repr(float(snr))))
                for algo in config.algorithms:
                    finals = np.asarray([r[algo] for _, r in results])
                    for (trial, _), v in zip(results, finals):
                        rows.append(ResultRow(config.experiment, "final_rel_residual", float(v),
                                              config.trials, shape=label, rank=str(rank),
                                              snr_db=repr(float(snr)), algorithm=algo,
                                              trial=str(trial)))
                    mean = float(finals.mean())
                    means[(label, rank, snr, algo)] = mean
                    rows.append(ResultRow(config.experiment, "mean_rel_residual_final", mean,
                                          config.trials, shape=label, rank=str(rank),
                                          snr_db=repr(float(snr)), algorithm=algo))
    # ordering hooks: the seroap-driven deflation should win every cell,
    # the thosvd-driven one should lose every cell
    if "dcpd-seroap" in config.algorithms:
        cells = {(s, r, n) for (s, r, n, _) in means}
        se_best = all(
            means[(s, r, n, "dcpd-seroap")] <= min(means[(s, r, n, a)] for a in config.algorithms)
            for (s, r, n) in cells
        )
        rows.append(ResultRow(config.experiment, "ordering_dcpd_seroap_best_everywhere",
                              float(se_best), config.trials))
        if "dcpd-thosvd" in config.algorithms:
            th_worst = all(
                means[(s, r, n, "dcpd-thosvd")] >= max(means[(s, r, n, a)] for a in config.algorithms)
                for (s, r, n) in cells
            )
            rows.append(ResultRow(config.experiment, "ordering_dcpd_thosvd_worst_everywhere",
                                  float(th_worst), config.trials))
    return rows


# ---------------------------------------------------------------------------
# conjecture support: Monte-Carlo cone-chain probabilities


def run_conjecture(config: ExperimentConfig) -> list:
    config = resolve(config)
    shape = config.shapes[0]
    rank = config.ranks[0]
    est = estimate_F(
        L=config.sweeps,
        beta_grid=config.beta_grid,
        shape=shape,
        rank=rank,
        trials=config.trials,
        phi=config.algorithms[0],
        seed=config.seed,
        field=config.field,
        phi_options={"restarts": config.oracle_restarts} if config.algorithms[0] == "oracle" else None,
    )
    rows = []
    label = shape_label(shape)
    for beta, p, hw in zip(est.beta_grid, est.probabilities, est.half_widths):
        rows.append(ResultRow(config.experiment, "F_hat", float(p), config.trials,
                              shape=label, rank=str(rank), algorithm=est.phi_name,
                              iteration=repr(float(beta))))
        rows.append(ResultRow(config.experiment, "F_half_width", float(hw), config.trials,
                              shape=label, rank=str(rank), algorithm=est.phi_name,
                              iteration=repr(float(beta))))
    monotone = all(
        est.probabilities[i + 1] >= est.probabilities[i] - 2 * (est.half_widths[i] + est.half_widths[i + 1])
        for i in range(len(est.beta_grid) - 1)
    )
    rows.append(ResultRow(config.experiment, "F_monotone_within_bands", float(monotone), config.trials,
                          shape=label, rank=str(rank), algorithm=est.phi_name))
    return rows


_RUNNERS = {
    "fig2": run_fig2,
    "tables": run_tables,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig5": run_fig5,
    "conjecture": run_conjecture,
}


def run_experiment(config: ExperimentConfig) -> list:
    try:
        runner = _RUNNERS[config.experiment]
    except KeyError:
        raise ValueError(f"unknown experiment {config.experiment!r}") from None
    return runner(config)
