"""Command-line front end: ``gdoi {synth,eval,verify,bounds,tail}``.

Reports are deterministic JSON (sorted keys, no timings) and carry the
resolved run configuration.  Exit codes: 0 success, 1 verification failure,
2 input error, 3 numerical precondition failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .bounds import BOUND_RTOL, gdoi_lower_bound, gdoi_upper_bound, holder_upper_bound, lipschitz_bounds
from .doi import gdoi_split
from .errors import InputError, PreconditionError
from .funcalc import eval_matrix_fn1, parse_fn1, parse_fn2
from .randmat import EnsembleSpec, InstanceConfig, monte_carlo_tail, random_basis
from .serialize import (
    decomposition_from_json,
    decomposition_to_json,
    dumps,
    load_json,
    matrix_from_json,
    matrix_to_json,
    spec_from_json,
)
from .spectral import (
    DEFAULT_COND_CAP,
    DEFAULT_GROUP_TOL,
    DEFAULT_VALIDATION_TOL,
    decompose,
    fro,
    synthesize,
    validate,
)
from .suites import DEFAULT_COUNTS, SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2, 3


@dataclass
class RunConfig:
    """Everything a run depends on; echoed into every report."""

    command: str
    inputs: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    tol: float | None = None
    cond_cap: float = DEFAULT_COND_CAP
    group_tol: float = DEFAULT_GROUP_TOL
    func: str | None = None
    beta: str | None = None
    format: str = "json"
    extra: dict = field(default_factory=dict)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _load_parameter(path: str, group_tol: float):
    """A decomposition file, a matrix file (decomposed) or a structure file (identity basis)."""
    obj = load_json(path)
    if isinstance(obj, dict) and "components" in obj:
        return decomposition_from_json(obj)
    if isinstance(obj, dict) and "entries" in obj:
        return decompose(matrix_from_json(obj), group_tol)
    if isinstance(obj, dict) and "blocks" in obj:
        return synthesize(spec_from_json(obj))[1]
    raise InputError(f"{path} is neither a decomposition, a matrix nor a structure")


def _load_pair(cfg: RunConfig, args):
    d1 = _load_parameter(args.dec1, cfg.group_tol)
    d2 = _load_parameter(args.dec2, cfg.group_tol) if args.dec2 else d1
    if args.y:
        Y = matrix_from_json(load_json(args.y))
    else:
        Y = np.eye(d1.n, dtype=np.complex128)
    return d1, d2, Y


# ----------------------------------------------------------------------------
# commands


def cmd_synth(cfg: RunConfig, args) -> int:
    spec = spec_from_json(load_json(args.spec))
    basis = None
    if args.basis == "random":
        basis = random_basis(np.random.default_rng(cfg.seed), spec.total_size, args.basis_cond)
    X, dec = synthesize(spec, basis, cond_cap=cfg.cond_cap)
    report = validate(dec, DEFAULT_VALIDATION_TOL if cfg.tol is None else cfg.tol, source=X)
    outdir = cfg.out or "."
    os.makedirs(outdir, exist_ok=True)
    _emit(dumps(matrix_to_json(X)), os.path.join(outdir, "matrix.json"))
    _emit(dumps(decomposition_to_json(dec)), os.path.join(outdir, "decomposition.json"))
    sys.stdout.write(dumps({"config": asdict(cfg), "validation": report.as_dict(), "ok": report.ok}))
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_eval(cfg: RunConfig, args) -> int:
    if not cfg.beta and not cfg.func:
        raise InputError("eval needs --beta (operator integral) or --func (matrix function)")
    d1, d2, Y = _load_pair(cfg, args)
    result: dict = {"config": asdict(cfg)}
    if cfg.beta:
        split = gdoi_split(parse_fn2(cfg.beta), d1, d2, Y)
        result["gdoi"] = matrix_to_json(split.total())
        result["part_norms"] = dict(zip(("A1", "A2", "A3", "A4"), split.norms()))
    if cfg.func:
        result["f_of_x1"] = matrix_to_json(eval_matrix_fn1(parse_fn1(cfg.func), d1))
    _emit(dumps(result), cfg.out)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, args) -> int:
    if not cfg.beta and not cfg.func:
        raise InputError("bounds needs --beta and/or --func")
    d1, d2, Y = _load_pair(cfg, args)
    rtol = BOUND_RTOL if cfg.tol is None else cfg.tol
    reports = {}
    if cfg.beta:
        beta = parse_fn2(cfg.beta)
        reports["gdoi_upper"] = gdoi_upper_bound(beta, d1, d2, Y)
        reports["gdoi_lower"] = gdoi_lower_bound(beta, d1, d2, Y)
    if cfg.func:
        f = parse_fn1(cfg.func)
        reports["lipschitz_upper"], reports["lipschitz_lower"] = lipschitz_bounds(f, d1, d2)
        if args.omega is not None:
            nu = args.nu if args.nu is not None else fro(d1.matrix - d2.matrix)
            reports["holder_upper"] = holder_upper_bound(f, d1, d2, args.omega, nu, args.nu_prime)
    reports = {k: replace(r, rtol=rtol) for k, r in reports.items()}
    ok = all(r.satisfied for r in reports.values())
    _emit(dumps({"config": asdict(cfg), "bounds": {k: r.as_dict() for k, r in reports.items()}, "ok": ok}), cfg.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig, args) -> int:
    inst_cfg = InstanceConfig(n_max=6 if args.suite == "telescope" else 8, unitary=args.unitary)
    rep = run_suite(args.suite, args.count, cfg.seed, cfg.tol, inst_cfg, fault=args.inject_fault)
    if cfg.format == "csv":
        lines = ["index,residual,ok"]
        lines += [f"{inst['index']},{float(inst['residual'])!r},{int(bool(inst['ok']))}" for inst in rep.instances]
        _emit("\n".join(lines) + "\n", cfg.out)
    else:
        body = rep.to_dict()
        body["run_config"] = asdict(cfg)
        _emit(dumps(body), cfg.out)
    sys.stderr.write(f"{rep.suite}: {'PASS' if rep.passed else 'FAIL'} max residual {rep.max_residual:.3e}\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _parse_delta(text: str):
    text = text.strip()
    if text == "auto":
        return 8
    if text.startswith("auto:"):
        try:
            return int(text[5:])
        except ValueError as exc:
            raise InputError(f"bad delta grid {text!r}") from exc
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad delta grid {text!r}") from exc


def cmd_tail(cfg: RunConfig, args) -> int:
    obj = load_json(args.spec)
    if not isinstance(obj, dict):
        raise InputError("ensemble JSON must be an object")
    spec = EnsembleSpec.from_dict(obj)
    f = parse_fn1(cfg.func or "identity")
    res = monte_carlo_tail(
        f, spec, _parse_delta(args.delta), args.trials, cfg.seed, function_name=cfg.func or "identity"
    )
    if cfg.format == "csv":
        _emit(res.to_csv(), cfg.out)
    else:
        body = res.to_dict()
        body["config"] = asdict(cfg)
        _emit(dumps(body), cfg.out)
    return EXIT_OK if res.ok else EXIT_FAIL


COMMANDS = {"synth": cmd_synth, "eval": cmd_eval, "verify": cmd_verify, "bounds": cmd_bounds, "tail": cmd_tail}


# ----------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gdoi", description="Generalized double operator integrals for non-normal matrices.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="override the command's default tolerance")
    common.add_argument("--out", default=None, help="output file (directory for synth); stdout by default")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--dec1", required=True, help="decomposition, matrix or structure JSON")
    params.add_argument("--dec2", default=None, help="second parameter; defaults to --dec1")
    params.add_argument("--y", default=None, help="matrix JSON; identity by default")
    params.add_argument("--group-tol", type=float, default=DEFAULT_GROUP_TOL)
    params.add_argument("--beta", default=None, help="two-variable symbol, e.g. divdiff:exp or poly2:[[0,1],[1,0]]")
    params.add_argument("--func", default=None, help="function descriptor, e.g. poly:[0,0,1] or exp")

    s = sub.add_parser("synth", parents=[common], help="build X = U J U^-1 from a structure file")
    s.add_argument("--spec", required=True)
    s.add_argument("--basis", choices=("identity", "random"), default="identity")
    s.add_argument("--basis-cond", type=float, default=10.0, help="condition number of the random basis")
    s.add_argument("--cond-cap", type=float, default=DEFAULT_COND_CAP)

    sub.add_parser("eval", parents=[common, params], help="evaluate T_beta(Y) and/or f(X1)")

    b = sub.add_parser("bounds", parents=[common, params], help="Frobenius, Lipschitz and Holder bounds")
    b.add_argument("--omega", type=float, default=None)
    b.add_argument("--nu", type=float, default=None, help="defaults to ||X1 - X2||")
    b.add_argument("--nu-prime", type=float, default=0.05)

    v = sub.add_parser("verify", parents=[common], help="randomized identity and bound suites")
    v.add_argument("suite", choices=sorted(SUITES))
    v.add_argument("--count", type=int, default=None, help=f"instances; defaults {DEFAULT_COUNTS}")
    v.add_argument("--unitary", action="store_true", help="draw unitary similarity bases")
    v.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    t = sub.add_parser("tail", parents=[common], help="Monte-Carlo tail experiment")
    t.add_argument("--spec", required=True, help="ensemble JSON")
    t.add_argument("--func", default="identity")
    t.add_argument("--delta", default="auto:8", help="comma-separated thresholds, or auto[:count]")
    t.add_argument("--trials", type=int, default=5000)
    return p


def resolve_config(args) -> RunConfig:
    inputs = {k: getattr(args, k) for k in ("spec", "dec1", "dec2", "y") if getattr(args, k, None)}
    extra = {
        k: getattr(args, k)
        for k in ("basis", "basis_cond", "suite", "count", "unitary", "delta", "trials", "omega", "nu", "nu_prime")
        if hasattr(args, k)
    }
    return RunConfig(
        command=args.command,
        inputs=inputs,
        out=args.out,
        seed=args.seed,
        tol=args.tol,
        cond_cap=getattr(args, "cond_cap", DEFAULT_COND_CAP),
        group_tol=getattr(args, "group_tol", DEFAULT_GROUP_TOL),
        func=getattr(args, "func", None),
        beta=getattr(args, "beta", None),
        format=args.format,
        extra=extra,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    try:
        return COMMANDS[args.command](cfg, args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except PreconditionError as exc:
        sys.stderr.write(f"precondition failed: {type(exc).__name__}: {exc}\n")
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
