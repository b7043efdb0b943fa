from dotenv import load_dotenv, dotenv_values
import math
import os
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Mapping, Optional, Union

from src.errors import ConfigError

# Load environment variables from .env file in project root
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
env_path = os.path.join(project_root, '.env')
load_dotenv(env_path)

# Runtime
THANOS_LOG_LEVEL = os.getenv("THANOS_LOG_LEVEL", "INFO")
THANOS_THREADS = int(os.getenv("THANOS_THREADS", "1"))  # 1 = no worker pool

# Solver defaults - the source experiments use beta = 1 with BB steps
DEFAULT_BETA = float(os.getenv("DEFAULT_BETA", "1.0"))
DEFAULT_SIGMA0 = float(os.getenv("DEFAULT_SIGMA0", "1.0"))
DEFAULT_SIGMA_EXPONENT = float(os.getenv("DEFAULT_SIGMA_EXPONENT", str(1.0 / 3.0)))  # sigma_k = k^(-1/3)
DEFAULT_ETA_MIN = float(os.getenv("DEFAULT_ETA_MIN", "1e-6"))  # BB safeguard interval
DEFAULT_ETA_MAX = float(os.getenv("DEFAULT_ETA_MAX", "1.0"))
DEFAULT_BB_INITIAL = float(os.getenv("DEFAULT_BB_INITIAL", "1e-3"))  # stepsize before any secant pair exists

# Centralized reference solver (stands in for the external high-precision solver)
REFERENCE_SIGMA_FINAL = float(os.getenv("REFERENCE_SIGMA_FINAL", "1e-3"))
REFERENCE_TOL = float(os.getenv("REFERENCE_TOL", "1e-8"))
REFERENCE_MAX_ITERS = int(os.getenv("REFERENCE_MAX_ITERS", "50000"))
REFERENCE_HALVING_PERIOD = int(os.getenv("REFERENCE_HALVING_PERIOD", "2000"))  # iterations per sigma halving

# Convergence-bound calculator
BOUNDS_SAMPLES = int(os.getenv("BOUNDS_SAMPLES", "1000"))  # random points for the M_f estimate


@dataclass
class ProblemSettings:
    n: int = 10
    m: int = 320
    d: int = 32
    p: int = 3
    mu: float = 0.1
    reg: str = 'l1'
    data: str = 'generate'
    data_seed: int = 0
    data_path: Optional[str] = None
    csv_header: bool = False


@dataclass
class GraphSettings:
    kind: str = 'er'
    prob: float = 0.5
    seed: int = 0
    path: Optional[str] = None


@dataclass
class SolverSettings:
    eta: Union[float, str] = 'bb'
    beta: float = DEFAULT_BETA
    sigma_mode: str = 'fixed'
    sigma0: float = DEFAULT_SIGMA0
    sigma_exponent: float = DEFAULT_SIGMA_EXPONENT
    max_iters: int = 3000
    stop_tol: float = 0.0
    eta_min: float = DEFAULT_ETA_MIN
    eta_max: float = DEFAULT_ETA_MAX
    bb_initial: float = DEFAULT_BB_INITIAL
    seed: int = 0


@dataclass
class InitSettings:
    mode: str = 'svd'
    seed: int = 0


@dataclass
class OutputSettings:
    metrics_path: str = 'metrics.csv'
    reference_path: Optional[str] = None
    align_columns: bool = False


@dataclass
class ReferenceSettings:
    solve: bool = True
    sigma_final: float = REFERENCE_SIGMA_FINAL
    tol: float = REFERENCE_TOL
    max_iters: int = REFERENCE_MAX_ITERS


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs, validated before any computation."""
    problem: ProblemSettings = field(default_factory=ProblemSettings)
    graph: GraphSettings = field(default_factory=GraphSettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    init: InitSettings = field(default_factory=InitSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    reference: ReferenceSettings = field(default_factory=ReferenceSettings)
    threads: int = THANOS_THREADS

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# File key -> (section, attribute, parser name)
CONFIG_KEYS = {
    'PROBLEM_N': ('problem', 'n', 'int'),
    'PROBLEM_M': ('problem', 'm', 'int'),
    'PROBLEM_D': ('problem', 'd', 'int'),
    'PROBLEM_P': ('problem', 'p', 'int'),
    'PROBLEM_MU': ('problem', 'mu', 'float'),
    'PROBLEM_REG': ('problem', 'reg', 'str'),
    'PROBLEM_DATA': ('problem', 'data', 'str'),
    'PROBLEM_DATA_SEED': ('problem', 'data_seed', 'int'),
    'PROBLEM_DATA_PATH': ('problem', 'data_path', 'str'),
    'PROBLEM_CSV_HEADER': ('problem', 'csv_header', 'bool'),
    'GRAPH_KIND': ('graph', 'kind', 'str'),
    'GRAPH_PROB': ('graph', 'prob', 'float'),
    'GRAPH_SEED': ('graph', 'seed', 'int'),
    'GRAPH_PATH': ('graph', 'path', 'str'),
    'SOLVER_ETA': ('solver', 'eta', 'eta'),
    'SOLVER_BETA': ('solver', 'beta', 'float'),
    'SOLVER_SIGMA_MODE': ('solver', 'sigma_mode', 'str'),
    'SOLVER_SIGMA0': ('solver', 'sigma0', 'float'),
    'SOLVER_SIGMA_EXPONENT': ('solver', 'sigma_exponent', 'float'),
    'SOLVER_MAX_ITERS': ('solver', 'max_iters', 'int'),
    'SOLVER_STOP_TOL': ('solver', 'stop_tol', 'float'),
    'SOLVER_ETA_MIN': ('solver', 'eta_min', 'float'),
    'SOLVER_ETA_MAX': ('solver', 'eta_max', 'float'),
    'SOLVER_BB_INITIAL': ('solver', 'bb_initial', 'float'),
    'SOLVER_SEED': ('solver', 'seed', 'int'),
    'INIT': ('init', 'mode', 'str'),
    'INIT_SEED': ('init', 'seed', 'int'),
    'OUTPUT_METRICS_PATH': ('output', 'metrics_path', 'str'),
    'OUTPUT_REFERENCE_PATH': ('output', 'reference_path', 'str'),
    'OUTPUT_ALIGN_COLUMNS': ('output', 'align_columns', 'bool'),
    'REFERENCE_SOLVE': ('reference', 'solve', 'bool'),
    'REFERENCE_SIGMA_FINAL': ('reference', 'sigma_final', 'float'),
    'REFERENCE_TOL': ('reference', 'tol', 'float'),
    'REFERENCE_MAX_ITERS': ('reference', 'max_iters', 'int'),
    'THREADS': (None, 'threads', 'int'),
}


def _parse_value(raw: str, kind: str) -> Any:
    text = raw.strip()
    if kind == 'int':
        return int(text)
    if kind == 'float':
        return float(text)
    if kind == 'bool':
        lowered = text.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == 'eta':
        if text.lower() == 'bb':
            return 'bb'
        return float(text)
    return text if text else None


def _validate(config: ExperimentConfig) -> List[str]:
    errors = []
    pr, gr, so = config.problem, config.graph, config.solver

    if pr.p < 1:
        errors.append("problem.p: must be >= 1")
    if pr.data != 'csv' and pr.n < pr.p:
        errors.append(f"problem.n: must be >= problem.p ({pr.p})")
    if pr.d < 1:
        errors.append("problem.d: must be >= 1")
    if not pr.mu >= 0 or not math.isfinite(pr.mu):
        errors.append("problem.mu: must be a finite number >= 0")
    if pr.reg not in ('l1', 'l21'):
        errors.append(f"problem.reg: expected l1 or l21, got {pr.reg!r}")
    if pr.data not in ('generate', 'csv'):
        errors.append(f"problem.data: expected generate or csv, got {pr.data!r}")
    elif pr.data == 'generate' and pr.m < pr.d:
        errors.append(f"problem.m: must be >= problem.d ({pr.d})")
    elif pr.data == 'csv' and not pr.data_path:
        errors.append("problem.data_path: required when problem.data = csv")

    if gr.kind not in ('er', 'ring', 'complete', 'star', 'file'):
        errors.append(f"graph.kind: expected er, ring, complete, star or file, got {gr.kind!r}")
    if gr.kind == 'er' and not 0 < gr.prob <= 1:
        errors.append("graph.prob: must lie in (0, 1]")
    if gr.kind in ('ring', 'star') and pr.d < 2:
        errors.append(f"graph.kind: {gr.kind} needs problem.d >= 2")
    if gr.kind == 'file' and not gr.path:
        errors.append("graph.path: required when graph.kind = file")

    if so.eta != 'bb' and not so.eta > 0:
        errors.append("solver.eta: must be a positive number or bb")
    if not so.beta > 0:
        errors.append("solver.beta: must be positive")
    if so.sigma_mode not in ('fixed', 'power'):
        errors.append(f"solver.sigma_mode: expected fixed or power, got {so.sigma_mode!r}")
    if not so.sigma0 > 0:
        errors.append("solver.sigma0: must be positive")
    if so.sigma_mode == 'power' and not so.sigma_exponent > 0:
        errors.append("solver.sigma_exponent: must be positive")
    if so.max_iters < 0:
        errors.append("solver.max_iters: must be >= 0")
    if so.stop_tol < 0:
        errors.append("solver.stop_tol: must be >= 0")
    if not 0 < so.eta_min <= so.eta_max:
        errors.append("solver.eta_min: must satisfy 0 < eta_min <= eta_max")
    if not so.bb_initial > 0:
        errors.append("solver.bb_initial: must be positive")

    if config.init.mode not in ('svd', 'random'):
        errors.append(f"init.mode: expected svd or random, got {config.init.mode!r}")
    if not config.output.metrics_path:
        errors.append("output.metrics_path: required")
    if not config.reference.sigma_final > 0:
        errors.append("reference.sigma_final: must be positive")
    if not config.reference.tol > 0:
        errors.append("reference.tol: must be positive")
    if config.threads < 1:
        errors.append("threads: must be >= 1")
    return errors


def build_experiment_config(values: Mapping[str, Optional[str]], source: Optional[str] = None) -> ExperimentConfig:
    """
    Build and validate an ExperimentConfig from raw KEY=value pairs.

    Args:
        values: mapping as returned by dotenv_values
        source: file name used in error messages

    Returns:
        A fully validated ExperimentConfig

    Raises:
        ConfigError listing every violation with its field path
    """
    config = ExperimentConfig()
    errors = []
    for key, raw in values.items():
        if key not in CONFIG_KEYS:
            errors.append(f"{key}: unknown key")
            continue
        section, attr, kind = CONFIG_KEYS[key]
        path = f"{section}.{attr}" if section else attr
        if raw is None:
            raw = ""
        try:
            value = _parse_value(raw, kind)
        except ValueError:
            errors.append(f"{path}: cannot parse {raw!r} as {kind}")
            continue
        target = getattr(config, section) if section else config
        setattr(target, attr, value)

    if not errors:
        errors = _validate(config)
    if errors:
        raise ConfigError(errors, path=source)
    return config


def load_experiment_config(path: str, overrides: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """
    Parse a flat dotenv-style experiment file.

    Args:
        path: experiment file (KEY=value lines, # comments)
        overrides: extra KEY=value pairs applied after the file (command-line flags)
    """
    if not os.path.isfile(path):
        raise ConfigError([f"config file not found: {path}"], path=path)
    values = dict(dotenv_values(path))
    if overrides:
        values.update(overrides)
    return build_experiment_config(values, source=path)
