"""Command-line front end.

Exit status: 0 on success, 2 when the model is malformed or violates the
required conditions, 1 on any other computation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from .errors import BackendError, ModelError, QsdError, UsageError
from .example import reproduce_example
from .expand import QsdExpansion, compute_qsd_expansion
from .model import evaluate_at, load_model, validate_conditions
from .oracle import QsdPoint, qsd_direct, qsd_iterative, remainder_report
from .rootfind import DEFAULT_TOL, detect_zero_root
from .scalar import AUTO, FLOAT, RATIONAL, format_scalar, parse_rational, parse_scalar

COMMANDS = ("validate", "qsd", "expand", "check", "reproduce-example")
EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    model_path: str | None = None
    epsilon: str | None = None
    order: int | None = None
    eps_grid: list = field(default_factory=list)
    backend: str = AUTO
    output: str = "text"
    i_ref: int = 1
    method: str = "formula"
    horizon: int = 400
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command != "reproduce-example" and not self.model_path:
            raise UsageError(f"{self.command}: a model file is required")
        if self.command == "qsd" and self.epsilon is None:
            raise UsageError("qsd: --epsilon is required")
        if self.command in ("expand", "check"):
            if self.order is None or self.order < 0:
                raise UsageError(f"{self.command}: --order must be a non-negative integer")
        if self.command == "check" and not self.eps_grid:
            raise UsageError("check: --eps-grid must list at least one value")
        if self.backend not in (AUTO, RATIONAL, FLOAT):
            raise UsageError(f"unknown backend {self.backend!r}")
        if self.output not in ("text", "json"):
            raise UsageError(f"unknown output format {self.output!r}")


def _fmt(x):
    if isinstance(x, (bool, int)) or x is None:
        return x
    if isinstance(x, float) or hasattr(x, "denominator"):
        return format_scalar(x)
    return x


def expansion_to_json(x: QsdExpansion) -> dict:
    return {
        "order": x.k,
        "i_ref": x.i_ref,
        "backend": x.backend,
        "rho0": format_scalar(x.rho0),
        "c": [format_scalar(v) for v in x.c],
        "pi": {str(j): [format_scalar(v) for v in row] for j, row in sorted(x.pi.items())},
        "d": {str(j): [format_scalar(v) for v in row] for j, row in sorted(x.d.items())},
        "e": [format_scalar(v) for v in x.e],
        "diagnostics": {k: _fmt(v) for k, v in x.diagnostics.items()},
    }


def expansion_from_json(doc: dict) -> QsdExpansion:
    def row(values):
        return tuple(parse_scalar(v) for v in values)

    return QsdExpansion(
        pi={int(j): row(v) for j, v in doc["pi"].items()},
        c=row(doc["c"]),
        d={int(j): row(v) for j, v in doc["d"].items()},
        e=row(doc["e"]),
        i_ref=doc["i_ref"],
        k=doc["order"],
        rho0=parse_scalar(doc["rho0"]),
        backend=doc["backend"],
        diagnostics=dict(doc.get("diagnostics", {})),
    )


def point_to_json(p: QsdPoint) -> dict:
    return {
        "epsilon": _fmt(p.epsilon),
        "rho": _fmt(p.rho),
        "pi": {str(j): format_scalar(v) for j, v in sorted(p.pi.items())},
        "method": p.method,
        "diagnostics": {k: _fmt(v) for k, v in p.diagnostics.items()},
    }


def render_expansion(x: QsdExpansion) -> str:
    lines = [f"QSD expansion of order {x.k} (reference state {x.i_ref}, backend {x.backend})",
             f"rho0 = {format_scalar(x.rho0)}"]
    lines += [f"c_{n} = {format_scalar(v)}" for n, v in enumerate(x.c, 1)]
    for j, row in sorted(x.d.items()):
        lines.append("  ".join(f"d_{x.i_ref}{j}[{n}] = {format_scalar(v)}" for n, v in enumerate(row)))
    lines.append("  ".join(f"e_{x.i_ref}[{n}] = {format_scalar(v)}" for n, v in enumerate(x.e)))
    for j, row in sorted(x.pi.items()):
        lines.append("  ".join(f"pi_{j}[{n}] = {format_scalar(v)}" for n, v in enumerate(row)))
    for key, value in x.diagnostics.items():
        lines.append(f"# {key}: {_fmt(value)}")
    return "\n".join(lines)


def render_point(p: QsdPoint) -> str:
    head = f"QSD at eps = {_fmt(p.epsilon)} ({p.method})"
    if p.rho is not None:
        head += f", rho = {_fmt(p.rho)}"
    lines = [head] + [f"pi_{j} = {format_scalar(v)}" for j, v in sorted(p.pi.items())]
    lines += [f"# {k}: {_fmt(v)}" for k, v in p.diagnostics.items()]
    return "\n".join(lines)


def _run_validate(cfg, model):
    report = validate_conditions(model)
    status = EXIT_OK if report.ok else EXIT_INVALID
    if cfg.output == "json":
        doc = {
            "ok": report.ok,
            "communication_ok": report.communication_ok,
            "communication": report.communication,
            "nonperiodic_ok": report.nonperiodic_ok,
            "periods": {str(k): v for k, v in report.periods.items()},
            "stochastic_ok": report.stochastic_ok,
            "limit_absorption_free": report.limit_absorption_free,
            "messages": report.messages,
        }
        return status, json.dumps(doc, indent=2)
    lines = [
        f"communication: {'ok' if report.communication_ok else 'FAIL'}",
        f"non-periodicity: {'ok' if report.nonperiodic_ok else 'FAIL'} "
        f"(periods {report.periods})",
        f"stochasticity: {'ok' if report.stochastic_ok else 'FAIL'}",
        f"limiting chain absorption-free: {report.limit_absorption_free}",
    ] + [f"- {m}" for m in report.messages]
    return status, "\n".join(lines)


def _run_qsd(cfg, model):
    try:
        eps = parse_rational(cfg.epsilon)
    except ValueError:
        eps = float(cfg.epsilon)
    exact_ok = model.backend == RATIONAL and not isinstance(eps, float)
    if cfg.backend == FLOAT or not exact_ok:
        if cfg.backend == RATIONAL:
            raise BackendError("rational backend needs a rational model and a rational --epsilon")
        kernel = evaluate_at(model, float(eps), FLOAT)
    else:
        kernel = evaluate_at(model, eps, RATIONAL)
        if not detect_zero_root(kernel, cfg.i_ref):
            if cfg.backend == RATIONAL:
                raise BackendError("the characteristic root at this eps is nonzero; exact computation is "
                                 "impossible (use --backend auto or float to downgrade)")
            kernel = kernel.to_backend(FLOAT)
    if cfg.method == "iterative":
        point = qsd_iterative(kernel, cfg.horizon, cfg.i_ref)
    else:
        point = qsd_direct(kernel, cfg.tol, cfg.i_ref)
    if cfg.output == "json":
        return EXIT_OK, json.dumps(point_to_json(point), indent=2)
    return EXIT_OK, render_point(point)


def _run_expand(cfg, model):
    x = compute_qsd_expansion(model, cfg.order, cfg.i_ref, cfg.backend)
    if cfg.output == "json":
        return EXIT_OK, json.dumps(expansion_to_json(x), indent=2)
    return EXIT_OK, render_expansion(x)


def _run_check(cfg, model):
    grid = []
    for text in cfg.eps_grid:
        try:
            grid.append(parse_rational(text))
        except ValueError:
            grid.append(float(text))
    x = compute_qsd_expansion(model, cfg.order, cfg.i_ref, cfg.backend)
    report = remainder_report(model, cfg.order, grid, x, cfg.tol)
    if cfg.output == "json":
        doc = {
            "order": report.k,
            "rows": [{"epsilon": r.epsilon, "state": r.state, "oracle": r.oracle, "expansion": r.expansion,
                      "error": r.error, "normalized": r.normalized} for r in report.rows],
            "non_decaying": report.non_decaying,
        }
        return EXIT_OK, json.dumps(doc, indent=2)
    lines = [f"{'eps':>12} {'state':>5} {'oracle':>20} {'expansion':>20} {'|error|':>12} {'|error|/eps^k':>14}"]
    for r in report.rows:
        lines.append(f"{r.epsilon:12.6g} {r.state:5d} {r.oracle:20.15f} {r.expansion:20.15f} "
                     f"{r.error:12.4e} {r.normalized:14.6e}")
    if report.non_decaying:
        lines.append(f"FLAG: normalized remainder does not decrease for states {report.non_decaying}")
    else:
        lines.append("normalized remainders decrease for every state")
    return EXIT_OK, "\n".join(lines)


def _run_reproduce(cfg):
    backend = RATIONAL if cfg.backend == AUTO else cfg.backend
    report = reproduce_example(backend)
    status = EXIT_OK if report.passed else EXIT_ERROR
    if cfg.output == "json":
        doc = {
            "backend": report.backend,
            "passed": report.passed,
            "tables": [{"name": c.name, "passed": c.passed, "max_error": _fmt(c.max_error),
                        "mismatches": c.mismatches} for c in report.checks],
        }
        return status, json.dumps(doc, indent=2)
    lines = [f"{c.name:10s} {'PASS' if c.passed else 'FAIL'}  max error {_fmt(c.max_error)}" for c in report.checks]
    for c in report.checks:
        lines += [f"  {m}" for m in c.mismatches]
    lines.append(f"{report.summary} ({report.backend} backend, {report.elapsed:.3f} s)")
    return status, "\n".join(lines)


def run(cfg: RunConfig) -> tuple[int, str]:
    try:
        if cfg.command == "reproduce-example":
            return _run_reproduce(cfg)
        model = load_model(cfg.model_path)
        handler = {"validate": _run_validate, "qsd": _run_qsd, "expand": _run_expand, "check": _run_check}
        return handler[cfg.command](cfg, model)
    except ModelError as exc:
        return EXIT_INVALID, f"error: {exc}"
    except (QsdError, OSError) as exc:
        return EXIT_ERROR, f"error: {exc}"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", choices=(AUTO, RATIONAL, FLOAT),
                        default=os.environ.get("QSD_BACKEND", AUTO),
                        help="numeric backend (default: $QSD_BACKEND or auto)")
    common.add_argument("--output", choices=("text", "json"), default="text")
    common.add_argument("--i-ref", type=int, default=1, help="reference state")

    parser = argparse.ArgumentParser(prog="perturbqsd",
                                     description="Quasi-stationary distributions of perturbed semi-Markov processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check the model conditions")
    p.add_argument("model")

    p = sub.add_parser("qsd", parents=[common], help="QSD at a fixed eps")
    p.add_argument("model")
    p.add_argument("--epsilon", required=True)
    p.add_argument("--method", choices=("formula", "iterative"), default="formula")
    p.add_argument("--horizon", type=int, default=400)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p = sub.add_parser("expand", parents=[common], help="asymptotic expansion coefficients")
    p.add_argument("model")
    p.add_argument("--order", type=int, required=True)

    p = sub.add_parser("check", parents=[common], help="compare the expansion with the fixed-eps oracle")
    p.add_argument("model")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--eps-grid", required=True, help="comma-separated eps values, e.g. 1/10,1/20,1/40")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    sub.add_parser("reproduce-example", parents=[common], help="recompute the built-in example tables")
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        model_path=getattr(args, "model", None),
        epsilon=getattr(args, "epsilon", None),
        order=getattr(args, "order", None),
        eps_grid=[s for s in getattr(args, "eps_grid", "").split(",") if s.strip()] if getattr(args, "eps_grid", None) else [],
        backend=args.backend,
        output=args.output,
        i_ref=args.i_ref,
        method=getattr(args, "method", "formula"),
        horizon=getattr(args, "horizon", 400),
        tol=getattr(args, "tol", DEFAULT_TOL),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except UsageError as exc:
        parser.error(str(exc))
    status, text = run(cfg)
    stream = sys.stderr if text.startswith("error:") else sys.stdout
    print(text, file=stream)
    return status


if __name__ == "__main__":
    sys.exit(main())
