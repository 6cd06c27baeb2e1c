"""Experiment harness: priors, sweep configuration, execution, and reports.

A sweep walks a grid of (qubit count, rate, repetition) cells.  Each cell
generates a response matrix and a prior, pushes the prior through the
noise, runs the configured mitigation method at every truncation order,
and scores the result against the dense-inversion oracle.  Identical
configurations reproduce byte-identical reports (timing aside): every
random draw is derived from the config seed and the cell coordinates.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .decompose import decompose
from .errors import ConfigError, ReadoutMitigationError
from .metrics import trace_distance
from .mitigate_full import (
    SeriesConfig,
    convergence_norm,
    direct_truncated_mitigate,
    neumann_mitigate,
    single_bitstring_mitigate,
)
from .mitigate_zero import approximate_model_guide, recover_p0, truncate, truncation_bound
from .response import (
    ProbabilityVector,
    apply_response,
    dense_invert_mitigate,
    random_tensor,
    relaxation_only,
)

_PRIOR_KINDS = (
    "uniform",
    "point_mass",
    "random_uniform",
    "gaussian_overflow",
    "truncated_gaussian",
)
_METHODS = ("zero_truncated", "full_neumann", "full_direct", "single_target")
_MODELS = ("relaxation_only", "random_tensor")

#: Dense sweeps above this qubit count take gigabytes; refused in configs.
MAX_SWEEP_QUBITS = 14

CSV_COLUMNS = (
    "n",
    "q",
    "w",
    "method",
    "prior",
    "seed",
    "rep",
    "d_uncorrected",
    "d_mitigated",
    "bound",
    "norm_S",
    "time_ms",
    "flags",
)

CONFIG_SCHEMA = 1


@dataclass(frozen=True)
class PriorSpec:
    """Which prior distribution a sweep cell starts from.

    ``sigma`` shapes the Gaussian kinds, ``seed`` pins random_uniform
    draws (left unset, the sweep derives one per cell), ``target`` places
    the point mass, and ``decay`` flips the Gaussian exponent's sign.
    The shipped Gaussian-overflow density uses the positive exponent
    (mass peaks at index 2^(n-1)); ``decay=True`` selects the decaying
    variant whose mass peaks at index 0.
    """

    kind: str
    sigma: float = 0.25
    seed: int | None = None
    target: int = 0
    decay: bool = False

    def __post_init__(self) -> None:
        if self.kind not in _PRIOR_KINDS:
            raise ConfigError(f"unknown prior {self.kind!r}, expected one of {_PRIOR_KINDS}")
        if not self.sigma > 0.0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.target < 0:
            raise ConfigError(f"point-mass target must be nonnegative, got {self.target}")

    @property
    def label(self) -> str:
        if self.decay and self.kind in ("gaussian_overflow", "truncated_gaussian"):
            return f"{self.kind}_decay"
        return self.kind


def build_prior(
    spec: PriorSpec, n: int, *, rng: np.random.Generator | None = None
) -> ProbabilityVector:
    """Materialize a prior distribution on n qubits.

    random_uniform draws from the supplied generator, or from the spec's
    seed when no generator is given.  The Gaussian kinds evaluate
    exp(+/- (x_j - 0.5)^2 / sigma^2) over x_j = j / 2^n, with the overflow
    kind first rotating the index range by half so negative coordinates
    wrap around the top.
    """
    size = 1 << n
    if spec.kind == "uniform":
        values = np.full(size, 1.0 / size)
    elif spec.kind == "point_mass":
        if spec.target >= size:
            raise ConfigError(f"point-mass target {spec.target} out of range for n={n}")
        values = np.zeros(size)
        values[spec.target] = 1.0
    elif spec.kind == "random_uniform":
        if rng is None:
            if spec.seed is None:
                raise ConfigError("random_uniform prior needs a seed or a generator")
            rng = np.random.default_rng(spec.seed)
        values = rng.uniform(0.0, 1.0, size)
        values /= values.sum()
    else:
        j = np.arange(size)
        if spec.kind == "gaussian_overflow":
            x = ((j + size // 2) % size) / size
        else:
            x = j / size
        z = ((x - 0.5) ** 2) / spec.sigma**2
        weights = np.exp(-z) if spec.decay else np.exp(z)
        values = weights / weights.sum()
    return ProbabilityVector(n=n, values=values, flavor="prior")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep definition; round-trips losslessly through JSON."""

    n_values: tuple
    q_values: tuple
    w_values: tuple
    method: str
    prior: PriorSpec
    response_model: str
    seed: int
    repetitions: int = 1
    target: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "q_values", tuple(float(q) for q in self.q_values))
        object.__setattr__(self, "w_values", tuple(int(w) for w in self.w_values))
        if not self.n_values or not self.q_values or not self.w_values:
            raise ConfigError("n, q and w lists must be non-empty")
        if self.method not in _METHODS:
            raise ConfigError(f"unknown method {self.method!r}, expected one of {_METHODS}")
        if self.response_model not in _MODELS:
            raise ConfigError(
                f"unknown response model {self.response_model!r}, expected one of {_MODELS}"
            )
        for n in self.n_values:
            if not 1 <= n <= MAX_SWEEP_QUBITS:
                raise ConfigError(f"sweep qubit counts must lie in [1, {MAX_SWEEP_QUBITS}]")
        for q in self.q_values:
            ok = (0.0 <= q <= 0.5) if self.response_model == "random_tensor" else (0.0 <= q < 0.5)
            if not ok:
                raise ConfigError(f"rate {q} out of range for {self.response_model}")
        w_floor = 0 if self.method == "zero_truncated" else 1
        for w in self.w_values:
            if not w_floor <= w <= min(self.n_values):
                raise ConfigError(
                    f"order {w} out of range [{w_floor}, {min(self.n_values)}] for this sweep"
                )
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be at least 1, got {self.repetitions}")
        if not 0 <= self.target < (1 << min(self.n_values)):
            raise ConfigError(f"target {self.target} out of range for the smallest n")

    def to_dict(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "n": list(self.n_values),
            "q": list(self.q_values),
            "w": list(self.w_values),
            "method": self.method,
            "prior": asdict(self.prior),
            "response_model": self.response_model,
            "seed": self.seed,
            "repetitions": self.repetitions,
            "target": self.target,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        if not isinstance(payload, dict):
            raise ConfigError("experiment config must be a JSON object")
        if payload.get("schema") != CONFIG_SCHEMA:
            raise ConfigError(
                f"unsupported config schema {payload.get('schema')!r}, expected {CONFIG_SCHEMA}"
            )
        known = {"schema", "n", "q", "w", "method", "prior", "response_model", "seed",
                 "repetitions", "target"}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("n", "q", "w", "method", "prior", "response_model", "seed"):
            if key not in payload:
                raise ConfigError(f"missing config key {key!r}")
        prior_payload = payload["prior"]
        if not isinstance(prior_payload, dict) or "kind" not in prior_payload:
            raise ConfigError("prior must be an object with at least a 'kind'")
        prior_known = {"kind", "sigma", "seed", "target", "decay"}
        prior_unknown = set(prior_payload) - prior_known
        if prior_unknown:
            raise ConfigError(f"unknown prior keys: {sorted(prior_unknown)}")
        prior = PriorSpec(**prior_payload)
        return cls(
            n_values=tuple(payload["n"]),
            q_values=tuple(payload["q"]),
            w_values=tuple(payload["w"]),
            method=payload["method"],
            prior=prior,
            response_model=payload["response_model"],
            seed=int(payload["seed"]),
            repetitions=int(payload.get("repetitions", 1)),
            target=int(payload.get("target", 0)),
        )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an ExperimentConfig from JSON; bad JSON is a config error."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return ExperimentConfig.from_dict(payload)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2))


@dataclass(frozen=True)
class MitigationReport:
    """One sweep cell's outcome.

    ``d_mitigated`` is a trace distance for the full-distribution methods
    and an absolute probability error for the single-entry methods;
    ``d_uncorrected`` is the same metric for the raw observed vector.
    Fields that do not apply to a method stay None and serialize empty.
    """

    n: int
    q: float
    w: int
    method: str
    prior: str
    seed: int
    rep: int
    d_uncorrected: float | None
    d_mitigated: float | None
    bound: float | None
    norm_s: float | None
    time_ms: float | None
    flags: str = ""

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "w": self.w,
            "method": self.method,
            "prior": self.prior,
            "seed": self.seed,
            "rep": self.rep,
            "d_uncorrected": self.d_uncorrected,
            "d_mitigated": self.d_mitigated,
            "bound": self.bound,
            "norm_S": self.norm_s,
            "time_ms": self.time_ms,
            "flags": self.flags,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MitigationReport":
        return cls(
            n=int(payload["n"]),
            q=float(payload["q"]),
            w=int(payload["w"]),
            method=str(payload["method"]),
            prior=str(payload["prior"]),
            seed=int(payload["seed"]),
            rep=int(payload["rep"]),
            d_uncorrected=_opt_float(payload.get("d_uncorrected")),
            d_mitigated=_opt_float(payload.get("d_mitigated")),
            bound=_opt_float(payload.get("bound")),
            norm_s=_opt_float(payload.get("norm_S")),
            time_ms=_opt_float(payload.get("time_ms")),
            flags=str(payload.get("flags", "")),
        )


def _opt_float(value) -> float | None:
    return None if value is None or value == "" else float(value)


def _cell_prior(spec: PriorSpec, n: int, derived_seed: int) -> ProbabilityVector:
    if spec.kind == "random_uniform" and spec.seed is None:
        return build_prior(spec, n, rng=np.random.default_rng(derived_seed))
    return build_prior(spec, n)


def _error_rows(cfg: ExperimentConfig, n: int, q: float, rep: int, exc: Exception) -> list:
    flag = f"error:{type(exc).__name__}"
    return [
        MitigationReport(
            n=n, q=q, w=w, method=cfg.method, prior=cfg.prior.label, seed=cfg.seed,
            rep=rep, d_uncorrected=None, d_mitigated=None, bound=None, norm_s=None,
            time_ms=None, flags=flag,
        )
        for w in cfg.w_values
    ]


def _zero_bound(cfg: ExperimentConfig, q: float, w: int) -> float:
    if cfg.response_model == "relaxation_only":
        return truncation_bound(q, w)
    return approximate_model_guide(q, w)


def _run_cell(args) -> list:
    """Evaluate one (n, q, repetition) cell at every order; never raises."""
    cfg, n, qi, rep = args
    q = cfg.q_values[qi]
    seq = np.random.SeedSequence([cfg.seed, n, qi, rep])
    r_seed, prior_seed = (int(s) for s in seq.generate_state(2))
    try:
        if cfg.response_model == "relaxation_only":
            R = relaxation_only(n, q)
        else:
            R = random_tensor(n, q, r_seed)
        prior = _cell_prior(cfg.prior, n, prior_seed)
        p_obs = apply_response(R, prior)
        oracle = dense_invert_mitigate(R, p_obs)
    except (ReadoutMitigationError, ValueError) as exc:
        return _error_rows(cfg, n, q, rep, exc)
    oracle_values = oracle.vector.values
    base_flags = ["oracle_lstsq"] if oracle.used_lstsq else []

    def row(w, d_unc, d_mit, bound, norm_s, time_ms, extra_flags):
        return MitigationReport(
            n=n, q=q, w=w, method=cfg.method, prior=cfg.prior.label, seed=cfg.seed,
            rep=rep, d_uncorrected=d_unc, d_mitigated=d_mit, bound=bound,
            norm_s=norm_s, time_ms=time_ms, flags=";".join(base_flags + extra_flags),
        )

    rows = []
    if cfg.method == "zero_truncated":
        d_unc = abs(float(p_obs.values[0]) - float(oracle_values[0]))
        for w in cfg.w_values:
            flags, d_mit, elapsed = [], None, None
            start = time.perf_counter()
            try:
                p0 = recover_p0(truncate(R, w), p_obs)
                elapsed = (time.perf_counter() - start) * 1e3
                d_mit = abs(p0 - float(oracle_values[0]))
            except ReadoutMitigationError as exc:
                elapsed = (time.perf_counter() - start) * 1e3
                flags.append(f"error:{type(exc).__name__}")
            rows.append(row(w, d_unc, d_mit, _zero_bound(cfg, q, w), None, elapsed, flags))
        return rows

    try:
        bands = decompose(R, max(cfg.w_values))
    except ReadoutMitigationError as exc:
        return _error_rows(cfg, n, q, rep, exc)

    if cfg.method == "full_neumann":
        d_unc = trace_distance(oracle_values, p_obs.values)
        for w in cfg.w_values:
            series_cfg = SeriesConfig(w=w, mode="neumann", norm_guard=False)
            start = time.perf_counter()
            res = neumann_mitigate(bands, p_obs, series_cfg)
            elapsed = (time.perf_counter() - start) * 1e3
            flags = [] if res.diagnostic.converges else ["diverged"]
            rows.append(
                row(
                    w,
                    d_unc,
                    trace_distance(oracle_values, res.vector.values),
                    2.0 * q ** (w + 1),
                    res.diagnostic.norm_value,
                    elapsed,
                    flags,
                )
            )
    elif cfg.method == "full_direct":
        d_unc = trace_distance(oracle_values, p_obs.values)
        for w in cfg.w_values:
            start = time.perf_counter()
            res = direct_truncated_mitigate(bands, w, p_obs)
            elapsed = (time.perf_counter() - start) * 1e3
            flags = ["lstsq"] if res.used_lstsq else []
            rows.append(
                row(
                    w,
                    d_unc,
                    trace_distance(oracle_values, res.vector.values),
                    None,
                    None,
                    elapsed,
                    flags,
                )
            )
    else:  # single_target
        ell = cfg.target
        d_unc = abs(float(p_obs.values[ell]) - float(oracle_values[ell]))
        for w in cfg.w_values:
            diagnostic = convergence_norm(bands, w)
            flags, d_mit, elapsed = [], None, None
            start = time.perf_counter()
            try:
                value = single_bitstring_mitigate(bands, ell, w, p_obs, norm_guard=False)
                elapsed = (time.perf_counter() - start) * 1e3
                d_mit = abs(value - float(oracle_values[ell]))
            except ReadoutMitigationError as exc:
                elapsed = (time.perf_counter() - start) * 1e3
                flags.append(f"error:{type(exc).__name__}")
            if not diagnostic.converges:
                flags.append("diverged")
            rows.append(row(w, d_unc, d_mit, None, diagnostic.norm_value, elapsed, flags))
    return rows


def run_sweep(cfg: ExperimentConfig, *, parallel: int = 1) -> list:
    """Run every cell of the grid and return reports in config order.

    Cells are independent; ``parallel`` > 1 fans them out across worker
    processes.  Output ordering is by (n, q, repetition, w) regardless of
    completion order, so parallel runs reproduce serial output.
    """
    cells = [
        (cfg, n, qi, rep)
        for n in cfg.n_values
        for qi in range(len(cfg.q_values))
        for rep in range(cfg.repetitions)
    ]
    if parallel <= 1:
        batches = [_run_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            batches = list(pool.map(_run_cell, cells))
    return [report for batch in batches for report in batch]


def _csv_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def reports_text(reports: Sequence[MitigationReport], fmt: str) -> str:
    """Serialize reports as CSV (fixed 13-column schema) or JSON text.

    Identical report lists produce identical text; time_ms is the only
    field expected to differ between repeated runs of one config.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown report format {fmt!r}, expected 'csv' or 'json'")
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            payload = report.to_dict()
            writer.writerow(_csv_field(payload[column]) for column in CSV_COLUMNS)
        return buffer.getvalue()
    payload = {"schema": CONFIG_SCHEMA, "reports": [r.to_dict() for r in reports]}
    return json.dumps(payload, indent=2) + "\n"


def emit(reports: Sequence[MitigationReport], fmt: str, path: str | Path) -> None:
    """Write reports to a file; see :func:`reports_text` for the formats."""
    text = reports_text(reports, fmt)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def load_reports_json(path: str | Path) -> list:
    """Read back a JSON report file as MitigationReport records."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict) or "reports" not in payload:
        raise ConfigError(f"expected a report object with 'reports' in {path}")
    return [MitigationReport.from_dict(entry) for entry in payload["reports"]]


def audit_bounds(reports: Sequence[MitigationReport]) -> tuple:
    """Check every bounded row; returns (violations, audited_count)."""
    audited = 0
    violations = []
    for report in reports:
        if report.bound is None or report.d_mitigated is None:
            continue
        audited += 1
        if report.d_mitigated > report.bound:
            violations.append(report)
    return violations, audited


def override_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    """Clone a config with a replacement seed (used by the CLI --seed flag)."""
    if seed is None:
        return cfg
    return replace(cfg, seed=seed)
