"""Experiment harness: configs, presets, runners, and CSV persistence.

An experiment fixes one synthetic problem, one right-hand side ``b``, and
one Gaussian sketch ``Omega``, shared by every method in the run so that
comparisons are fair.  Runners emit one record per ``(method, t, mu)`` into
a fixed-schema CSV; matrix-load columns always reflect real operator
counters, including the loads spent building preconditioners.

Config files are flat UTF-8 ``key = value`` text with bracketed section
headers.  Sections and keys are documented in the README; unknown keys are
rejected.  ``[method NAME]`` sections may repeat, once per method entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .block_lanczos import ReorthPolicy, krylov_decomposition
from .errors import ConfigError, NumericalFailureError
from .operator import CostCounters
from .matgen import (
    STREAM_RHS,
    STREAM_SAMPLES,
    STREAM_SKETCH,
    SeededRng,
    SpectrumSpec,
    SyntheticProblem,
    gaussian_matrix,
    generate_problem,
    make_eigenvalues,
)
from .nystrom import (
    approximation_error_norm,
    condno_upper_bound,
    deflated_condition_number,
    effective_dimension,
    exact_deflation_preconditioner,
    make_deflation_preconditioner,
    nystrom_block_krylov,
    precond_condition_number,
)
from .sampling import _isqrt_combination
from .solvers import (
    ConvergenceTrace,
    TraceRecord,
    a_norm_error,
    bcg_residual_norm,
    evaluate_bcg_iterate,
    pcg_solve,
)

CSV_HEADER = (
    "experiment,method,s,l,t,matrix_loads,matvecs,mu,"
    "rel_err_anorm,residual_norm,kappa_actual,seed"
)

_METHOD_NAMES = ("block_cg", "cg", "nystrom_pcg", "deflation_pcg")


@dataclass(frozen=True)
class MethodSpec:
    """One method entry of an experiment.

    ``s`` is the sketch depth and ``ell`` an optional per-entry sketch width
    (defaults to the run-level width; must not exceed it, since all methods
    share one Omega).  ``theta`` is ``auto`` (smallest retained eigenvalue
    of the approximation), ``lambda_d`` (exact smallest eigenvalue), or a
    positive number.  ``r`` is the exact-deflation rank.
    """

    name: str
    s: int = 1
    ell: int | None = None
    theta: str | float = "auto"
    r: int = 10

    def label(self) -> str:
        if self.name == "nystrom_pcg":
            base = f"nystrom_pcg_s{self.s}"
            if not isinstance(self.theta, str):
                base += f"_theta{self.theta:.3g}"
            return base
        if self.name == "deflation_pcg":
            return f"deflation_pcg_r{self.r}"
        return self.name


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    spectrum: SpectrumSpec
    seed: int = 1
    t_max: int = 60
    ell: int = 8
    mu_grid: tuple = (0.0,)
    reorth: ReorthPolicy = ReorthPolicy.full()
    methods: tuple = (
        MethodSpec("block_cg"),
        MethodSpec("cg"),
        MethodSpec("nystrom_pcg", s=1),
        MethodSpec("nystrom_pcg", s=3),
    )
    sampling_m: int = 10
    sampling_t: int = 20
    diag_r: int = 10
    diag_sketches: tuple = ((8, 1), (8, 3), (12, 3))
    diag_theta: str | float = "auto"
    diag_mu_grid: tuple | None = None
    diag_include_identity: bool = True
    diag_include_exact_deflation: bool = True
    out: str | None = None


# ----------------------------------------------------------------------
# Presets


def preset_names():
    return ("fastdecay", "outliers20", "bottom20", "theta-sweep")


def preset_config(name: str, command: str = "compare", seed: int | None = None) -> ExperimentConfig:
    """Named desk-scale experiment presets (d=200, shared-sketch methods).

    ``theta-sweep`` compares augmented block-CG against a grid of sketch
    depths and shift parameters for the preconditioner (log-spaced around
    an eigenvalue near the sketch rank; no single "right" theta exists).
    """
    if name == "fastdecay":
        spectrum = SpectrumSpec.fastdecay(200)
    elif name == "outliers20":
        spectrum = SpectrumSpec.outliers(200, count=20, gap=1e3)
    elif name == "bottom20":
        spectrum = SpectrumSpec.bottom(200, count=20, gap=1e3)
    elif name == "theta-sweep":
        spectrum = SpectrumSpec.fastdecay(200)
        lam = make_eigenvalues(spectrum)
        ell = 10
        anchor = float(lam[ell - 1])
        floor = float(lam[-1])
        methods = [MethodSpec("block_cg")]
        for s in (1, 5, 11):
            for factor in (0.1, 1.0, 10.0):
                theta = max(anchor * factor, floor)
                methods.append(MethodSpec("nystrom_pcg", s=s, theta=theta))
        config = ExperimentConfig(
            experiment=name, spectrum=spectrum, ell=ell, methods=tuple(methods)
        )
        if seed is not None:
            config = replace(config, seed=int(seed))
        return config
    else:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {', '.join(preset_names())}"
        )
    config = ExperimentConfig(experiment=name, spectrum=spectrum)
    if seed is not None:
        config = replace(config, seed=int(seed))
    if command == "regpath":
        lam1 = make_eigenvalues(spectrum)[0]
        config = replace(
            config, t_max=40, mu_grid=tuple(lam1 * np.logspace(-8.0, 0.0, 20))
        )
    return config


# ----------------------------------------------------------------------
# Config file parsing


_PROBLEM_KEYS = {"kind", "d", "rate", "lam1", "count", "gap", "tail_condition", "values"}
_RUN_KEYS = {"experiment", "seed", "t_max", "ell", "mu_grid", "reorth", "out"}
_METHOD_KEYS = {"s", "ell", "theta", "r"}
_SAMPLING_KEYS = {"m", "t_max"}
_DIAG_KEYS = {
    "r",
    "sketches",
    "theta",
    "mu_grid",
    "include_identity",
    "include_exact_deflation",
}


def _parse_sections(text: str):
    """Split config text into an ordered list of (section, {key: value})."""
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = (line[1:-1].strip(), {})
            sections.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in current[1]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        current[1][key] = value.strip()
    return sections


def _want(section, data, key, convert, default=None, required=False):
    if key not in data:
        if required:
            raise ConfigError(f"[{section}] is missing required key {key!r}")
        return default
    try:
        return convert(data[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] key {key!r}: {exc}") from exc


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _bool(text):
    text = text.strip().lower()
    if text in ("true", "yes", "1", "on"):
        return True
    if text in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _theta(text):
    text = text.strip()
    if text in ("auto", "lambda_d"):
        return text
    value = float(text)
    if value <= 0:
        raise ValueError("theta must be positive")
    return value


def _sketches(text):
    pairs = []
    for item in text.split(","):
        ell, _, s = item.strip().partition(":")
        pairs.append((int(ell), int(s)))
    return tuple(pairs)


def _check_keys(section, data, allowed):
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(
            f"[{section}] has unknown key(s): {', '.join(sorted(unknown))}"
        )


def parse_config_text(text: str) -> ExperimentConfig:
    sections = _parse_sections(text)
    problem = None
    run: dict = {}
    methods = []
    sampling: dict = {}
    diag: dict = {}
    for name, data in sections:
        if name == "problem":
            _check_keys(name, data, _PROBLEM_KEYS)
            problem = data
        elif name == "run":
            _check_keys(name, data, _RUN_KEYS)
            run = data
        elif name.startswith("method"):
            method_name = name[len("method") :].strip()
            if method_name not in _METHOD_NAMES:
                raise ConfigError(
                    f"unknown method {method_name!r}; choose from "
                    f"{', '.join(_METHOD_NAMES)}"
                )
            _check_keys(name, data, _METHOD_KEYS)
            methods.append(
                MethodSpec(
                    name=method_name,
                    s=_want(name, data, "s", int, default=1),
                    ell=_want(name, data, "ell", int),
                    theta=_want(name, data, "theta", _theta, default="auto"),
                    r=_want(name, data, "r", int, default=10),
                )
            )
        elif name == "sampling":
            _check_keys(name, data, _SAMPLING_KEYS)
            sampling = data
        elif name == "diagnostics":
            _check_keys(name, data, _DIAG_KEYS)
            diag = data
        else:
            raise ConfigError(f"unknown section [{name}]")
    if problem is None:
        raise ConfigError("config must contain a [problem] section")

    kind = _want("problem", problem, "kind", str, required=True)
    d = _want("problem", problem, "d", int, default=0)
    try:
        if kind == "fastdecay":
            spectrum = SpectrumSpec.fastdecay(
                d,
                rate=_want("problem", problem, "rate", float),
                lam1=_want("problem", problem, "lam1", float, default=1.0),
            )
        elif kind in ("outliers", "bottom"):
            maker = SpectrumSpec.outliers if kind == "outliers" else SpectrumSpec.bottom
            spectrum = maker(
                d,
                count=_want("problem", problem, "count", int, required=True),
                gap=_want("problem", problem, "gap", float, required=True),
                tail_condition=_want(
                    "problem", problem, "tail_condition", float, default=100.0
                ),
            )
        elif kind == "explicit":
            spectrum = SpectrumSpec.explicit(
                _want("problem", problem, "values", _floats, required=True)
            )
        else:
            raise ConfigError(f"unknown problem kind {kind!r}")
        make_eigenvalues(spectrum)  # validate eagerly
    except ValueError as exc:
        raise ConfigError(f"invalid [problem]: {exc}") from exc

    defaults = ExperimentConfig(experiment="", spectrum=spectrum)
    ell_value = _want("run", run, "ell", int, default=defaults.ell)
    reorth_text = _want("run", run, "reorth", str, default="full").strip().lower()
    try:
        if reorth_text == "partial":
            # Bare "partial" mirrors the cost of building and applying a
            # depth-s sketch: full reorthogonalization for the first s*ell
            # iterations only.
            method_list = methods if methods else defaults.methods
            s_max = max(
                (m.s for m in method_list if m.name == "nystrom_pcg"), default=3
            )
            reorth = ReorthPolicy.partial(s_max * ell_value)
        else:
            reorth = ReorthPolicy.parse(reorth_text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    config = ExperimentConfig(
        experiment=_want("run", run, "experiment", str, default=kind),
        spectrum=spectrum,
        seed=_want("run", run, "seed", int, default=1),
        t_max=_want("run", run, "t_max", int, default=defaults.t_max),
        ell=ell_value,
        mu_grid=_want("run", run, "mu_grid", _floats, default=(0.0,)),
        reorth=reorth,
        methods=tuple(methods) if methods else defaults.methods,
        sampling_m=_want("sampling", sampling, "m", int, default=defaults.sampling_m),
        sampling_t=_want(
            "sampling", sampling, "t_max", int, default=defaults.sampling_t
        ),
        diag_r=_want("diagnostics", diag, "r", int, default=defaults.diag_r),
        diag_sketches=_want(
            "diagnostics", diag, "sketches", _sketches, default=defaults.diag_sketches
        ),
        diag_theta=_want("diagnostics", diag, "theta", _theta, default="auto"),
        diag_mu_grid=_want("diagnostics", diag, "mu_grid", _floats),
        diag_include_identity=_want(
            "diagnostics", diag, "include_identity", _bool, default=True
        ),
        diag_include_exact_deflation=_want(
            "diagnostics", diag, "include_exact_deflation", _bool, default=True
        ),
        out=_want("run", run, "out", str),
    )
    _validate_config(config)
    return config


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())


def _validate_config(config: ExperimentConfig) -> None:
    if config.t_max < 1:
        raise ConfigError("t_max must be >= 1")
    if config.ell < 1:
        raise ConfigError("ell must be >= 1")
    if config.ell + 1 > config.spectrum.dim:
        raise ConfigError(
            f"ell = {config.ell} does not leave room for the augmented "
            f"block in dimension {config.spectrum.dim}"
        )
    if any(mu < 0 or not np.isfinite(mu) for mu in config.mu_grid):
        raise ConfigError("mu_grid entries must be finite and nonnegative")
    if not config.mu_grid:
        raise ConfigError("mu_grid must be nonempty")
    d = config.spectrum.dim
    for spec in config.methods:
        if spec.name == "nystrom_pcg":
            ell = spec.ell if spec.ell is not None else config.ell
            if ell > config.ell:
                raise ConfigError(
                    f"method sketch width {ell} exceeds the shared width "
                    f"{config.ell}"
                )
            if spec.s < 1 or spec.s * ell > d:
                raise ConfigError(
                    f"sketch depth s={spec.s} with width {ell} does not fit "
                    f"dimension {d}"
                )
        if spec.name == "deflation_pcg" and not 1 <= spec.r < d:
            raise ConfigError(f"deflation rank {spec.r} must lie in [1, {d})")
    if config.sampling_m < 2:
        raise ConfigError("sampling m must be >= 2")


# ----------------------------------------------------------------------
# Shared experiment inputs


def build_inputs(config: ExperimentConfig):
    """Problem, right-hand side, and sketch shared by all methods of a run."""
    rng = SeededRng(config.seed)
    problem = generate_problem(config.spectrum, rng)
    d = problem.dim
    b = gaussian_matrix(d, 1, rng.child(STREAM_RHS))[:, 0]
    Omega = gaussian_matrix(d, config.ell, rng.child(STREAM_SKETCH))
    return problem, b, Omega


def _resolve_theta(theta, problem: SyntheticProblem):
    if theta == "lambda_d":
        return float(problem.eigenvalues[-1])
    return theta  # "auto" or a positive float


# ----------------------------------------------------------------------
# Runners


def _krylov_method_rows(config, problem, dec, b, method, ell_column):
    """Rows for a method evaluated from one stored factorization."""
    rows = []
    for t in range(1, config.t_max + 1):
        k = min(t, dec.t_eff)
        counters = dec.load_history[k - 1]
        for mu in config.mu_grid:
            x = evaluate_bcg_iterate(dec, mu, 1, k)
            rows.append(
                TraceRecord(
                    method=method,
                    t=t,
                    matrix_loads=counters.matrix_loads,
                    matvecs=counters.matvecs,
                    mu=mu,
                    rel_err_anorm=a_norm_error(x, mu, problem, b),
                    residual_norm=bcg_residual_norm(dec, mu, 1, k),
                    ell=ell_column,
                )
            )
    return rows


def _pcg_method_rows(config, problem, b, method, precond, build_counters, s, ell):
    rows = []
    A = problem.matrix
    bnorm = float(np.linalg.norm(b))
    for mu in config.mu_grid:
        kappa = precond_condition_number(A, precond, mu)
        op = problem.operator()
        iterates = pcg_solve(op, b, mu, precond, config.t_max)
        consumed = op.counters()
        rows.append(
            TraceRecord(
                method=method,
                t=0,
                matrix_loads=build_counters.matrix_loads,
                matvecs=build_counters.matvecs,
                mu=mu,
                rel_err_anorm=1.0,
                residual_norm=bnorm,
                kappa_actual=kappa,
                s=s,
                ell=ell,
            )
        )
        for t, x in enumerate(iterates, start=1):
            spent = min(t, consumed.matrix_loads)
            residual = float(np.linalg.norm(b - (A @ x + mu * x)))
            rows.append(
                TraceRecord(
                    method=method,
                    t=t,
                    matrix_loads=build_counters.matrix_loads + spent,
                    matvecs=build_counters.matvecs + spent,
                    mu=mu,
                    rel_err_anorm=a_norm_error(x, mu, problem, b),
                    residual_norm=residual,
                    kappa_actual=kappa,
                    s=s,
                    ell=ell,
                )
            )
    return rows


def run_comparison(config: ExperimentConfig) -> ConvergenceTrace:
    """Convergence of every configured method against matrix-loads.

    All methods consume the same problem, ``b``, and ``Omega``.  Block-CG
    and CG evaluate every shift of the grid from one factorization; the
    preconditioned runs repeat per shift, reusing the approximation but
    re-running the recurrence, with build loads included in their rows.
    """
    problem, b, Omega = build_inputs(config)
    trace = ConvergenceTrace()
    zero_counters = CostCounters()
    for spec in config.methods:
        label = spec.label()
        if spec.name == "block_cg":
            op = problem.operator()
            B = np.column_stack([b, Omega])
            dec = krylov_decomposition(op, B, depth=config.t_max, policy=config.reorth)
            trace.extend(
                _krylov_method_rows(config, problem, dec, b, label, config.ell)
            )
        elif spec.name == "cg":
            op = problem.operator()
            dec = krylov_decomposition(op, b, depth=config.t_max, policy=config.reorth)
            trace.extend(_krylov_method_rows(config, problem, dec, b, label, None))
        elif spec.name == "nystrom_pcg":
            ell = spec.ell if spec.ell is not None else config.ell
            op = problem.operator()
            approx = nystrom_block_krylov(op, Omega[:, :ell], spec.s)
            build = op.counters()
            precond = make_deflation_preconditioner(
                approx, _resolve_theta(spec.theta, problem)
            )
            trace.extend(
                _pcg_method_rows(
                    config, problem, b, label, precond, build, spec.s, ell
                )
            )
        elif spec.name == "deflation_pcg":
            theta = _resolve_theta(spec.theta, problem)
            precond = exact_deflation_preconditioner(
                problem, spec.r, None if theta == "auto" else theta
            )
            trace.extend(
                _pcg_method_rows(
                    config, problem, b, label, precond, zero_counters, None, None
                )
            )
        else:
            raise ConfigError(f"unknown method {spec.name!r}")
    return trace


def run_regpath(config: ExperimentConfig) -> ConvergenceTrace:
    """Regularization-path run: :func:`run_comparison` over the ``mu`` grid.

    Block-CG's loads stay constant across the grid (one factorization serves
    every shift); preconditioned methods pay per shift.
    """
    return run_comparison(config)


def run_sampling(config: ExperimentConfig) -> ConvergenceTrace:
    """Block square-root sampler versus parallel single-column runs.

    The single-column runs are treated as executing in parallel: one
    matrix-load per iteration regardless of how many samples are drawn, the
    same convention as the block method.  Each method's reported loads
    include the one final product with ``A`` that lifts the inverse-root
    combination to the square root.
    """
    problem, _, _ = build_inputs(config)
    d = problem.dim
    m = config.sampling_m
    t_max = min(config.sampling_t, d // m)
    if t_max < 1:
        raise ConfigError(f"sampling m={m} does not fit dimension {d}")
    B = gaussian_matrix(d, m, SeededRng(config.seed, STREAM_SAMPLES))
    exact = problem.apply_sqrt(B)
    exact_norms = np.linalg.norm(exact, axis=0)
    trace = ConvergenceTrace()

    op = problem.operator()
    dec = krylov_decomposition(op, B, depth=t_max, policy=config.reorth)
    acct = problem.operator()
    last_block = None
    for t in range(1, t_max + 1):
        k = min(t, dec.t_eff)
        S = acct.apply_block(_isqrt_combination(dec, depth=k))
        last_block = S
        err = float(
            np.max(np.linalg.norm(S - exact, axis=0) / exact_norms)
        )
        trace.append(
            TraceRecord(
                method="block_sqrt",
                t=t,
                matrix_loads=dec.load_history[k - 1].matrix_loads + 1,
                matvecs=dec.load_history[k - 1].matvecs + m,
                mu=None,
                rel_err_anorm=err,
                residual_norm=None,
            )
        )

    single_ops = [problem.operator() for _ in range(m)]
    decs = [
        krylov_decomposition(single_ops[i], B[:, i], depth=t_max, policy=config.reorth)
        for i in range(m)
    ]
    acct_single = problem.operator()
    for t in range(1, t_max + 1):
        ks = [min(t, decs[i].t_eff) for i in range(m)]
        G = np.column_stack(
            [_isqrt_combination(decs[i], depth=ks[i]) for i in range(m)]
        )
        S = acct_single.apply_block(G)
        err = float(np.max(np.linalg.norm(S - exact, axis=0) / exact_norms))
        trace.append(
            TraceRecord(
                method="single_sqrt",
                t=t,
                matrix_loads=max(ks) + 1,
                matvecs=max(ks) * m + m,
                mu=None,
                rel_err_anorm=err,
                residual_norm=None,
            )
        )

    isqrt = _isqrt_combination(dec)
    lifted = problem.matrix @ isqrt
    consistency = float(np.linalg.norm(lifted - last_block) / np.linalg.norm(last_block))
    trace.append(
        TraceRecord(
            method="isqrt_check",
            t=t_max,
            matrix_loads=dec.load_history[dec.t_eff - 1].matrix_loads + 1,
            matvecs=dec.load_history[dec.t_eff - 1].matvecs + m,
            mu=None,
            rel_err_anorm=consistency,
            residual_norm=None,
        )
    )
    return trace


def run_diagnostics(config: ExperimentConfig) -> ConvergenceTrace:
    """Condition-number diagnostics of the deflation preconditioner.

    Per sketch ``(ell, s)`` and shift: the measured condition number of the
    preconditioned system, its deterministic upper bound from the exact
    approximation error norm, the deflated condition number of the spectrum,
    and the effective dimension.  Values are carried in the
    ``kappa_actual`` column, with the ``method`` column naming the quantity.
    """
    problem, _, Omega_shared = build_inputs(config)
    lam = problem.eigenvalues
    grid = config.diag_mu_grid if config.diag_mu_grid is not None else config.mu_grid
    max_ell = max((ell for ell, _ in config.diag_sketches), default=config.ell)
    if max_ell > Omega_shared.shape[1]:
        Omega_shared = gaussian_matrix(
            problem.dim, max_ell, SeededRng(config.seed, STREAM_SKETCH)
        )
    trace = ConvergenceTrace()

    def emit(method, mu, value, s=None, ell=None, loads=0, matvecs=0):
        trace.append(
            TraceRecord(
                method=method,
                t=None,
                matrix_loads=loads,
                matvecs=matvecs,
                mu=mu,
                rel_err_anorm=None,
                residual_norm=None,
                kappa_actual=value,
                s=s,
                ell=ell,
            )
        )

    for ell, s in config.diag_sketches:
        op = problem.operator()
        approx = nystrom_block_krylov(op, Omega_shared[:, :ell], s)
        build = op.counters()
        precond = make_deflation_preconditioner(
            approx, _resolve_theta(config.diag_theta, problem)
        )
        err_norm = approximation_error_norm(problem.matrix, approx)
        for mu in grid:
            kappa = precond_condition_number(problem.matrix, precond, mu)
            bound = condno_upper_bound(precond.theta, mu, err_norm, lam[-1])
            emit("nystrom:kappa_actual", mu, kappa, s, ell,
                 build.matrix_loads, build.matvecs)
            emit("nystrom:kappa_bound", mu, bound, s, ell,
                 build.matrix_loads, build.matvecs)

    if config.diag_include_exact_deflation:
        theta = _resolve_theta(config.diag_theta, problem)
        precond = exact_deflation_preconditioner(
            problem, config.diag_r, None if theta == "auto" else theta
        )
        for mu in grid:
            emit(
                "exact_deflation:kappa_actual",
                mu,
                precond_condition_number(problem.matrix, precond, mu),
            )
    if config.diag_include_identity:
        for mu in grid:
            emit(
                "identity:kappa_actual",
                mu,
                precond_condition_number(problem.matrix, None, mu),
            )
    for mu in grid:
        emit(
            "spectrum:kappa_deflated",
            mu,
            deflated_condition_number(lam, config.diag_r, mu),
        )
        emit("spectrum:d_eff", mu, effective_dimension(lam, mu))
    return trace


# ----------------------------------------------------------------------
# CSV persistence


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def trace_to_csv(trace: ConvergenceTrace, experiment: str, seed: int) -> str:
    lines = [CSV_HEADER]
    for rec in trace:
        lines.append(
            ",".join(
                [
                    experiment,
                    rec.method,
                    _fmt(rec.s),
                    _fmt(rec.ell),
                    _fmt(rec.t),
                    _fmt(rec.matrix_loads),
                    _fmt(rec.matvecs),
                    _fmt(rec.mu),
                    _fmt(rec.rel_err_anorm),
                    _fmt(rec.residual_norm),
                    _fmt(rec.kappa_actual),
                    str(int(seed)),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_trace(trace: ConvergenceTrace, path: str, experiment: str, seed: int) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(trace_to_csv(trace, experiment, seed))
