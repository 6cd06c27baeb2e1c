"""Command-line interface.

Subcommands::

    simulate         generate and store a response matrix, prior, and observed vector
    mitigate-zero    recover the all-zeros probability from stored fixtures
    mitigate-full    recover the full distribution (series or direct truncated inverse)
    mitigate-target  recover one bitstring's probability from its XOR ball
    sweep            run an experiment grid and emit a CSV/JSON report
    check-bounds     run a bounded sweep and audit every cell against its bound

Exit codes: 0 success; 1 configuration error; 2 numerical failure
(singular system with no fallback, refused divergent series, or a bound
violation found by check-bounds); 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

from .decompose import decompose
from .errors import (
    ConfigError,
    DecompositionError,
    DimensionMismatchError,
    DivergenceError,
    SingularMatrixError,
    ValidationError,
)
from .harness import (
    PriorSpec,
    audit_bounds,
    build_prior,
    emit,
    load_config,
    override_seed,
    reports_text,
    run_sweep,
)
from .mitigate_full import (
    SeriesConfig,
    convergence_norm,
    direct_truncated_mitigate,
    neumann_mitigate,
    single_bitstring_mitigate,
)
from .mitigate_zero import recover_p0, truncate, truncation_bound
from .plots import render_report_figures
from .response import (
    apply_response,
    estimate_rate,
    load_matrix_json,
    load_vector_json,
    random_tensor,
    relaxation_only,
    save_matrix_json,
    save_vector_json,
)


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems as config errors (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def _add_common(sub: argparse.ArgumentParser, fmt_default: str) -> None:
    sub.add_argument("--config", required=True, help="path to the JSON configuration")
    sub.add_argument("--out", default=None, help="output path (stdout when omitted)")
    sub.add_argument("--format", choices=("csv", "json"), default=fmt_default)
    sub.add_argument("--seed", type=int, default=None, help="override the configured seed")
    sub.add_argument("--parallel", type=int, default=1, help="worker processes for sweeps")


def _build_parser() -> _Parser:
    parser = _Parser(prog="pertmit", description="Perturbative readout-error mitigation")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = subs.add_parser("simulate", help="generate and store R, prior, observed fixtures")
    _add_common(sim, "json")
    sim.set_defaults(handler=_cmd_simulate)

    zero = subs.add_parser("mitigate-zero", help="recover the all-zeros probability")
    _add_common(zero, "json")
    zero.set_defaults(handler=_cmd_mitigate_zero)

    full = subs.add_parser("mitigate-full", help="recover the full distribution")
    _add_common(full, "json")
    full.set_defaults(handler=_cmd_mitigate_full)

    target = subs.add_parser("mitigate-target", help="recover one bitstring's probability")
    _add_common(target, "json")
    target.set_defaults(handler=_cmd_mitigate_target)

    sweep = subs.add_parser("sweep", help="run an experiment grid")
    _add_common(sweep, "csv")
    sweep.add_argument(
        "--plot", action="store_true", help="render figures alongside the report (needs --out)"
    )
    sweep.set_defaults(handler=_cmd_sweep)

    check = subs.add_parser("check-bounds", help="audit a bounded sweep cell by cell")
    _add_common(check, "csv")
    check.set_defaults(handler=_cmd_check_bounds)

    return parser


def _load_json_object(path: Path, known: set, required: set) -> dict:
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"expected a JSON object in {path}")
    if payload.get("schema") != 1:
        raise ConfigError(f"unsupported schema {payload.get('schema')!r} in {path}")
    unknown = set(payload) - known - {"schema"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {path}")
    missing = required - set(payload)
    if missing:
        raise ConfigError(f"missing keys {sorted(missing)} in {path}")
    return payload


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def _load_fixtures(payload: dict, base: Path):
    R = load_matrix_json(_resolve(base, payload["response"]))
    p_obs = load_vector_json(_resolve(base, payload["observed"]))
    if p_obs.flavor != "observed":
        raise ConfigError(f"expected an observed vector, got flavor {p_obs.flavor!r}")
    return R, p_obs


def _write_record(record: dict, args) -> None:
    if args.format == "json":
        text = json.dumps(record, indent=2) + "\n"
    else:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(record.keys())
        writer.writerow("" if v is None else v for v in record.values())
        text = buffer.getvalue()
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)


def _cmd_simulate(args) -> int:
    config_path = Path(args.config)
    payload = _load_json_object(
        config_path, known={"n", "model", "prior"}, required={"n", "model", "prior"}
    )
    if args.out is None:
        raise ConfigError("simulate requires --out (a directory for the fixtures)")
    n = int(payload["n"])
    model = payload["model"]
    if not isinstance(model, dict) or "kind" not in model:
        raise ConfigError("model must be an object with a 'kind'")
    kind = model["kind"]
    q = float(model.get("q", 0.0))
    if kind == "relaxation_only":
        R = relaxation_only(n, q)
    elif kind == "random_tensor":
        seed = args.seed if args.seed is not None else model.get("seed")
        if seed is None:
            raise ConfigError("random_tensor model needs a seed (config or --seed)")
        R = random_tensor(n, q, int(seed))
    else:
        raise ConfigError(f"unknown model kind {kind!r}")
    prior_payload = dict(payload["prior"])
    bad_keys = set(prior_payload) - {"kind", "sigma", "seed", "target", "decay"}
    if bad_keys or "kind" not in prior_payload:
        raise ConfigError(f"prior must have a 'kind' and no unknown keys (got {prior_payload})")
    if args.seed is not None and prior_payload.get("kind") == "random_uniform":
        prior_payload["seed"] = args.seed + 1
    prior = build_prior(PriorSpec(**prior_payload), n)
    observed = apply_response(R, prior)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_matrix_json(R, out_dir / "response.json")
    save_vector_json(prior, out_dir / "prior.json")
    save_vector_json(observed, out_dir / "observed.json")
    for name in ("response.json", "prior.json", "observed.json"):
        print(out_dir / name)
    return 0


def _cmd_mitigate_zero(args) -> int:
    config_path = Path(args.config)
    payload = _load_json_object(
        config_path,
        known={"response", "observed", "w", "rate", "lstsq"},
        required={"response", "observed", "w"},
    )
    R, p_obs = _load_fixtures(payload, config_path.parent)
    w = int(payload["w"])
    rate = float(payload["rate"]) if "rate" in payload else estimate_rate(R)
    p0 = recover_p0(truncate(R, w), p_obs, lstsq=bool(payload.get("lstsq", False)))
    record = {
        "w": w,
        "rate": rate,
        "p0_uncorrected": float(p_obs.values[0]),
        "p0_mitigated": p0,
        "bound": truncation_bound(rate, w),
    }
    _write_record(record, args)
    return 0


def _cmd_mitigate_full(args) -> int:
    config_path = Path(args.config)
    payload = _load_json_object(
        config_path,
        known={"response", "observed", "w", "mode", "norm_guard", "clip_negatives"},
        required={"response", "observed", "w"},
    )
    R, p_obs = _load_fixtures(payload, config_path.parent)
    w = int(payload["w"])
    mode = payload.get("mode", "neumann")
    bands = decompose(R, w)
    if mode == "neumann":
        cfg = SeriesConfig(
            w=w,
            mode="neumann",
            norm_guard=bool(payload.get("norm_guard", True)),
            clip_negatives=bool(payload.get("clip_negatives", False)),
        )
        result = neumann_mitigate(bands, p_obs, cfg)
        vector = result.vector
        print(
            f"norm_S={result.diagnostic.norm_value:.6g} "
            f"converges={result.diagnostic.converges}",
            file=sys.stderr,
        )
    elif mode == "direct_inverse":
        result = direct_truncated_mitigate(bands, w, p_obs)
        vector = result.vector
        print(
            f"condition={result.condition:.6g} used_lstsq={result.used_lstsq}",
            file=sys.stderr,
        )
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    if args.format == "json":
        if args.out is None:
            payload_out = {
                "n": vector.n,
                "order": "numeric",
                "flavor": vector.flavor,
                "data": list(map(float, vector.values)),
            }
            sys.stdout.write(json.dumps(payload_out) + "\n")
        else:
            save_vector_json(vector, args.out)
    else:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(("index", "value"))
        for index, value in enumerate(vector.values):
            writer.writerow((index, repr(float(value))))
        if args.out is None:
            sys.stdout.write(buffer.getvalue())
        else:
            Path(args.out).write_text(buffer.getvalue())
    return 0


def _cmd_mitigate_target(args) -> int:
    config_path = Path(args.config)
    payload = _load_json_object(
        config_path,
        known={"response", "observed", "w", "target", "norm_guard"},
        required={"response", "observed", "w", "target"},
    )
    R, p_obs = _load_fixtures(payload, config_path.parent)
    w = int(payload["w"])
    target = int(payload["target"])
    bands = decompose(R, w)
    value = single_bitstring_mitigate(
        bands, target, w, p_obs, norm_guard=bool(payload.get("norm_guard", True))
    )
    diagnostic = convergence_norm(bands, w)
    record = {
        "target": target,
        "w": w,
        "p_uncorrected": float(p_obs.values[target]),
        "p_mitigated": value,
        "norm_S": diagnostic.norm_value,
        "converges": diagnostic.converges,
    }
    _write_record(record, args)
    return 0


def _cmd_sweep(args) -> int:
    cfg = override_seed(load_config(args.config), args.seed)
    reports = run_sweep(cfg, parallel=args.parallel)
    if args.out is None:
        if args.plot:
            raise ConfigError("--plot requires --out to anchor the figure files")
        sys.stdout.write(reports_text(reports, args.format))
        return 0
    emit(reports, args.format, args.out)
    print(args.out)
    if args.plot:
        for path in render_report_figures(reports, Path(args.out).with_suffix("")):
            print(path)
    return 0


def _cmd_check_bounds(args) -> int:
    cfg = override_seed(load_config(args.config), args.seed)
    if cfg.method not in ("zero_truncated", "full_neumann"):
        raise ConfigError(
            f"check-bounds needs a method with a bound column, not {cfg.method!r}"
        )
    reports = run_sweep(cfg, parallel=args.parallel)
    if args.out is not None:
        emit(reports, args.format, args.out)
    violations, audited = audit_bounds(reports)
    print(f"audited {audited} bounded cells: {len(violations)} violations")
    for report in violations:
        print(
            f"violation: n={report.n} q={report.q!r} w={report.w} rep={report.rep} "
            f"error={report.d_mitigated!r} bound={report.bound!r}"
        )
    return 2 if violations else 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, DimensionMismatchError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except (SingularMatrixError, DivergenceError, DecompositionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
