"""
Main orchestration module for THANOS experiments.
Coordinates data, graph, reference solution, the decentralized run and the metrics log.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional

import numpy as np
import scipy.linalg

# Add the project root to Python path if not already there
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from src.config import THANOS_LOG_LEVEL, ExperimentConfig, load_experiment_config
from src.errors import DivergenceError, ThanosError
from src.manifold.stiefel import random_stiefel
from src.network.mixing import MixingMatrix, metropolis_weights
from src.network.topology import Graph, complete, erdos_renyi, load_edge_list, ring, save_edge_list, star
from src.problem.objective import DecentralizedProblem
from src.problem.sparse_pca import SparsePcaData, generate_gaussian_data, load_data_csv, sparse_pca_problem
from src.reference.solver import solve_centralized
from src.smoothing.moreau import SigmaSchedule, sigma_at
from src.storage.matrix_csv import load_matrix_csv, save_matrix_csv
from src.storage.run_log import RunLogWriter
from src.tracker.bounds import ParameterBounds, condition1_bounds
from src.tracker.thanos import RunResult, SolverConfig, run

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 500  # rounds between console progress lines


class ThanosExperiment:
    """
    One experiment: data -> problem -> graph -> W -> X_initial -> X* -> run -> CSV.
    Every stage is cached on first use so cmd_run and cmd_bounds share them.
    """

    def __init__(self, config: ExperimentConfig, executor: Optional[ThreadPoolExecutor] = None):
        """
        Initialize the experiment.

        Args:
            config: validated experiment configuration
            executor: optional worker pool for per-agent work
        """
        self.config = config
        self.executor = executor
        self._data: Optional[SparsePcaData] = None
        self._problem: Optional[DecentralizedProblem] = None
        self._graph: Optional[Graph] = None
        self._mixing: Optional[MixingMatrix] = None

    def get_config_summary(self) -> str:
        """Get a summary of the current configuration"""
        pr, gr, so = self.config.problem, self.config.graph, self.config.solver
        data = f"csv {pr.data_path}" if pr.data == 'csv' else f"gaussian (seed {pr.data_seed})"
        shape = "n, m from file" if pr.data == 'csv' else f"n={pr.n}, m={pr.m}"
        graph = f"ER({gr.prob}, seed {gr.seed})" if gr.kind == 'er' else gr.kind
        sigma = f"fixed {so.sigma0}" if so.sigma_mode == 'fixed' else f"k^(-{so.sigma_exponent:.4g})"
        return f"""
🔧 Experiment configuration:
• Problem: {shape}, d={pr.d}, p={pr.p}, mu={pr.mu}, reg={pr.reg}
• Data: {data}
• Graph: {graph}
• Solver: eta={so.eta}, beta={so.beta}, sigma={sigma}, K={so.max_iters}
• Init: {self.config.init.mode}
• Metrics: {self.config.output.metrics_path}
        """.strip()

    @property
    def data(self) -> SparsePcaData:
        if self._data is None:
            pr = self.config.problem
            if pr.data == 'csv':
                self._data = load_data_csv(pr.data_path, pr.d, pr.mu, header=pr.csv_header, p=pr.p)
            else:
                self._data = generate_gaussian_data(pr.n, pr.m, pr.d, pr.mu, pr.data_seed)
        return self._data

    @property
    def problem(self) -> DecentralizedProblem:
        if self._problem is None:
            self._problem = sparse_pca_problem(self.data, self.config.problem.reg, self.config.problem.p)
        return self._problem

    @property
    def graph(self) -> Graph:
        if self._graph is None:
            gr, d = self.config.graph, self.config.problem.d
            if gr.kind == 'file':
                self._graph = load_edge_list(gr.path, d)
            else:
                if gr.kind == 'er':
                    self._graph = erdos_renyi(d, gr.prob, gr.seed)
                elif gr.kind == 'ring':
                    self._graph = ring(d)
                elif gr.kind == 'star':
                    self._graph = star(d)
                else:
                    self._graph = complete(d)
                if gr.path:
                    save_edge_list(self._graph, gr.path)
        return self._graph

    @property
    def mixing(self) -> MixingMatrix:
        if self._mixing is None:
            self._mixing = metropolis_weights(self.graph)
        return self._mixing

    def sigma_schedule(self) -> SigmaSchedule:
        so = self.config.solver
        if so.sigma_mode == 'power':
            return SigmaSchedule.power(so.sigma0, so.sigma_exponent)
        return SigmaSchedule.fixed(so.sigma0)

    def solver_config(self) -> SolverConfig:
        so = self.config.solver
        return SolverConfig(
            eta=so.eta,
            beta=so.beta,
            sigma_schedule=self.sigma_schedule(),
            max_iters=so.max_iters,
            stop_tol=so.stop_tol,
            eta_min=so.eta_min,
            eta_max=so.eta_max,
            bb_initial=so.bb_initial,
            seed=so.seed,
        )

    def initial_point(self) -> np.ndarray:
        """Shared X_initial: leading p left singular vectors of A, or a seeded random point."""
        p = self.config.problem.p
        if self.config.init.mode == 'random':
            return random_stiefel(self.data.n, p, self.config.init.seed).value
        U, _, _ = scipy.linalg.svd(self.data.A, full_matrices=False)
        return U[:, :p].copy()

    def reference_solution(self) -> Optional[np.ndarray]:
        """
        Load X* from output.reference_path when it exists, else solve and cache it.

        Returns:
            X* or None when no reference is available (dist column left empty)
        """
        path = self.config.output.reference_path
        if path and os.path.isfile(path):
            X_star = load_matrix_csv(path)
            self.problem.check_shape(X_star)
            print(f"🎯 Loaded reference solution from {path}")
            return X_star
        ref = self.config.reference
        if not ref.solve:
            return None

        print("🎯 Computing centralized reference solution...")
        so = self.config.solver
        result = solve_centralized(self.problem, ref.sigma_final, ref.tol, ref.max_iters,
                                   X_init=self.initial_point(), beta=so.beta,
                                   eta_min=so.eta_min, eta_max=so.eta_max, bb_initial=so.bb_initial)
        status = "converged" if result.converged else "max_iters reached"
        print(f"  Reference {status}: {result.iterations_used} iterations, "
              f"residual {result.residual:.3e}, objective {result.final_objective:.10g}")
        if path:
            save_matrix_csv(result.X_star.value, path)
            print(f"  Saved reference to {path}")
        return result.X_star.value

    def run(self) -> RunResult:
        """
        Execute the full protocol and stream records to the metrics CSV.

        Data, graph and reference are built before the CSV is opened, so
        ingestion or configuration failures leave no partial log behind.
        """
        print(f"📡 Loading data ({self.config.problem.data})...")
        problem = self.problem
        print(f"  {self.data.n} features x {self.data.m} samples over {self.data.d} agents")
        print(f"🕸️ Building {self.config.graph.kind} graph...")
        mixing = self.mixing
        print(f"  {len(self.graph.edges)} edges, lambda = {mixing.lam:.6f}")

        solver = self.solver_config()
        X_initial = self.initial_point()
        X_star = self.reference_solution() if solver.max_iters > 0 else None

        def progress(rec):
            if rec.k % PROGRESS_EVERY == 0 or rec.k == solver.max_iters:
                dist = f"{rec.dist:.3e}" if rec.dist is not None else "-"
                print(f"📈 k={rec.k}: dist={dist} feas={rec.feas:.3e} "
                      f"consensus={rec.consensus:.3e} residual={rec.stat_residual:.3e}")

        with RunLogWriter(self.config.output.metrics_path) as log:
            def on_record(rec):
                log.write(rec)
                progress(rec)

            return run(problem, mixing, solver, X_initial, X_star=X_star,
                       align_columns=self.config.output.align_columns,
                       on_record=on_record, executor=self.executor)

    def bounds(self) -> ParameterBounds:
        """Convergence bounds at the smallest smoothing parameter the run will use."""
        schedule = self.sigma_schedule()
        K = self.config.solver.max_iters
        sigma = min(sigma_at(schedule, 0), sigma_at(schedule, K))
        return condition1_bounds(self.problem, sigma, self.mixing, seed=self.config.solver.seed)


def _overrides(csv_header: bool = False, align_columns: bool = False) -> Dict[str, str]:
    values = {}
    if csv_header:
        values['PROBLEM_CSV_HEADER'] = 'true'
    if align_columns:
        values['OUTPUT_ALIGN_COLUMNS'] = 'true'
    return values


def _fail(e: ThanosError) -> int:
    print(f"❌ {type(e).__name__}: {e}")
    return e.exit_code


def cmd_run(config_path: str, overrides: Optional[Mapping[str, str]] = None, threads: Optional[int] = None) -> int:
    """
    Run one experiment end to end.

    Returns:
        0 ok, 2 configuration, 3 ingestion, 4 divergence, 1 anything else
    """
    try:
        config = load_experiment_config(config_path, overrides)
    except ThanosError as e:
        return _fail(e)
    if threads is not None:
        config.threads = threads

    print("🚀 Starting THANOS experiment...")
    print("=" * 60)
    executor = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    try:
        experiment = ThanosExperiment(config, executor)
        print(experiment.get_config_summary())
        result = experiment.run()
    except DivergenceError as e:
        info = e.to_dict()
        print(f"❌ Diverged at k={info['k']} (agent {info['agent_id']}); {info['records_kept']} rounds kept in "
              f"{config.output.metrics_path}")
        return e.exit_code
    except ThanosError as e:
        return _fail(e)
    finally:
        if executor is not None:
            executor.shutdown()

    if result.records:
        last = result.records[-1]
        print(f"✅ Finished {result.iterations} rounds: feas={last.feas:.3e}, "
              f"consensus={last.consensus:.3e}, residual={last.stat_residual:.3e}")
    else:
        print("✅ No rounds requested; wrote header-only log")
    print(f"  Metrics written to {config.output.metrics_path}")
    return 0


def cmd_bounds(config_path: str, overrides: Optional[Mapping[str, str]] = None) -> int:
    """Print the convergence bounds and whether the configured beta and eta meet them."""
    try:
        config = load_experiment_config(config_path, overrides)
        experiment = ThanosExperiment(config)
        bounds = experiment.bounds()
    except ThanosError as e:
        return _fail(e)

    so = config.solver
    eta = None if so.eta == 'bb' else float(so.eta)
    beta_ok, eta_ok = bounds.check(so.beta, eta)
    exact = "exact" if bounds.mf_exact else "sampled"
    print("📊 Convergence parameter bounds:")
    print(f"• lambda     = {bounds.lam:.6g}")
    print(f"• M_f        = {bounds.M_f:.6g} ({exact})")
    print(f"• M_g        = {bounds.M_g:.6g}")
    print(f"• L_r        = {bounds.L_r:.6g}")
    print(f"• beta_lower = {bounds.beta_lower:.6g}")
    print(f"• eta_upper  = {bounds.eta_upper:.6g} (at beta_lower)")
    print(f"{'✅' if beta_ok else '⚠️'} beta = {so.beta} {'satisfies' if beta_ok else 'violates'} beta > beta_lower")
    if eta_ok is None:
        print("⚠️ eta = bb: BB stepsizes are not covered by the bounds")
    else:
        print(f"{'✅' if eta_ok else '⚠️'} eta = {eta} {'satisfies' if eta_ok else 'violates'} "
              f"eta < {bounds.eta_upper_at(so.beta):.6g} (at beta = {so.beta})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thanos", description="Decentralized sparse PCA over the Stiefel manifold")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="run one experiment and write the metrics CSV")
    run_cmd.add_argument("config", help="experiment file (KEY=value lines)")
    run_cmd.add_argument("--csv-header", action="store_true", help="data CSV has a header row")
    run_cmd.add_argument("--align-columns", action="store_true", help="sign-align columns before measuring dist")
    run_cmd.add_argument("--threads", type=int, default=None, help="worker threads for per-agent work")

    bounds_cmd = commands.add_parser("bounds", help="print the penalty and stepsize bounds that guarantee convergence")
    bounds_cmd.add_argument("config", help="experiment file (KEY=value lines)")
    bounds_cmd.add_argument("--csv-header", action="store_true", help="data CSV has a header row")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    logging.basicConfig(level=THANOS_LOG_LEVEL.upper(), format="%(asctime)s %(name)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "bounds":
        return cmd_bounds(args.config, _overrides(csv_header=args.csv_header))
    if args.threads is not None and args.threads < 1:
        print("❌ --threads must be >= 1")
        return 2
    return cmd_run(args.config, _overrides(args.csv_header, args.align_columns), args.threads)


if __name__ == "__main__":
    sys.exit(main())
