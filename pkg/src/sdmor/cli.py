"""Command-line interface.

Exit codes: 0 ok, 2 parse error, 3 validation error, 4 infeasible request,
5 stability refuted, 6 hypothesis violated (plant not Hurwitz),
7 numerical breakdown, 1 anything else.
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import dumps, run_comparison_campaign, write_atomic, write_campaign_outputs
from .discretize import build_switched_model, exponential_identity_residual
from .errors import (
    ConditioningError,
    ConsistencyError,
    InfeasibleRequestError,
    NotHurwitzError,
    PreconditionError,
    SdmorError,
    ValidationError,
)
from .pipelines import ReductionRequest, reduce
from .stability import Refutation, check_quadratic_stability, lyapunov_from_plant
from .sysfile import SystemFileError, dump_system, load_system, matrix_from_json
from .systems import (
    ContinuousLtiSystem,
    SampledDataSystem,
    SamplingGrid,
    SwitchedLinearSystem,
    ensure_valid,
    is_hurwitz,
    random_plant,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_VALIDATE = 3
EXIT_INFEASIBLE = 4
EXIT_REFUTED = 5
EXIT_HYPOTHESIS = 6
EXIT_NUMERICAL = 7


class CliError(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


def _load(path, expect=None):
    try:
        system, grid, meta = load_system(path)
    except FileNotFoundError:
        raise CliError(EXIT_PARSE, f"{path}: no such file") from None
    except SystemFileError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None
    if expect is not None and not isinstance(system, expect):
        kind = "lti" if expect is ContinuousLtiSystem else "ls"
        raise CliError(EXIT_VALIDATE, f'{path}: expected a system of kind "{kind}"')
    return system, grid, meta


def _grid(args, file_grid):
    if getattr(args, "grid", None):
        try:
            return SamplingGrid.parse(args.grid)
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"cannot parse grid {args.grid!r}: {exc}") from None
    if file_grid is None:
        raise CliError(EXIT_VALIDATE, 'no sampling grid: pass --grid or put "H" in the plant file')
    return file_grid


def _request(args):
    if args.order is not None:
        return ReductionRequest(max_order=args.order)
    return ReductionRequest(moments=args.moments)


def _emit(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def cmd_discretize(args):
    plant, file_grid, meta = _load(args.input, ContinuousLtiSystem)
    grid = _grid(args, file_grid)
    sd = ensure_valid(SampledDataSystem(plant, grid))
    ls = build_switched_model(sd)
    resid = max(exponential_identity_residual(plant.A, h) for h in grid)
    _emit(args.output, dump_system(ls, meta=meta))
    print(f"modes: {ls.D}  A_i: {ls.n}x{ls.n}  B_i: {ls.n}x{ls.m}  C: {ls.p}x{ls.n}", file=sys.stderr)
    print(f"max scaled |e^(Ah) - (I + A Theta(h))|: {resid:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_reduce(args):
    plant, file_grid, meta = _load(args.input, ContinuousLtiSystem)
    grid = _grid(args, file_grid)
    sd = ensure_valid(SampledDataSystem(plant, grid))
    if args.order is not None and args.order < 1:
        raise CliError(EXIT_INFEASIBLE, f"requested order {args.order} is not a positive integer")
    reduced, report = reduce(sd, _request(args), args.approach, stable_inverse=args.stable_inverse)
    _emit(args.output, dump_system(reduced, meta={"reduced_from": str(args.input), "approach": args.approach}))
    report_path = args.report or (None if args.output in (None, "-") else str(args.output) + ".report.json")
    doc = report.to_dict(include_timings=args.timings)
    if report_path is not None:
        write_atomic(report_path, dumps(doc))
    print(f"approach {report.approach}: n={report.n} -> r={report.r}, N={report.N}, "
          f"left inverse {report.left_inverse_kind}", file=sys.stderr)
    for note in report.notices:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK


def cmd_certify(args):
    ls, _, _ = _load(args.system, SwitchedLinearSystem)
    ensure_valid(ls)
    if args.plant is not None:
        plant, _, _ = _load(args.plant, ContinuousLtiSystem)
        ensure_valid(plant)
        stable, abscissa = is_hurwitz(plant)
        if not stable:
            raise CliError(EXIT_HYPOTHESIS, f"plant is not Hurwitz: spectral abscissa {abscissa:.6g}")
        if plant.n != ls.n:
            raise CliError(EXIT_VALIDATE, f"plant order {plant.n} differs from system order {ls.n}")
        P = lyapunov_from_plant(plant)
    elif args.P is not None:
        try:
            P = matrix_from_json(Path(args.P).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise CliError(EXIT_PARSE, f"{args.P}: no such file") from None
        except SystemFileError as exc:
            raise CliError(EXIT_PARSE, f"{args.P}: {exc}") from None
        if P.shape != (ls.n, ls.n):
            raise CliError(EXIT_VALIDATE, f"P has shape {P.shape}, system order is {ls.n}")
    else:
        raise CliError(EXIT_VALIDATE, "certify needs --plant or --P")
    result = check_quadratic_stability(ls, P)
    for i, m in enumerate(result.margins, start=1):
        print(f"mode {i}: lambda_max(A^T P A - P) = {m:.6e}", file=sys.stderr)
    if isinstance(result, Refutation):
        _emit(args.output, dumps(result.to_dict()))
        print(f"refuted: {result.reason}", file=sys.stderr)
        return EXIT_REFUTED
    doc = {"refuted": False}
    doc.update(result.to_dict())
    _emit(args.output, dumps(doc))
    return EXIT_OK


def cmd_campaign(args):
    plant, file_grid, _ = _load(args.plant, ContinuousLtiSystem)
    grid = _grid(args, file_grid)
    ensure_valid(SampledDataSystem(plant, grid))
    if args.order is not None and args.order < 1:
        raise CliError(EXIT_INFEASIBLE, f"requested order {args.order} is not a positive integer")
    report = run_comparison_campaign(
        plant, grid, _request(args), count=args.count, seed=args.seed, T_total=args.horizon,
        stable_inverse=args.stable_inverse,
    )
    paths = write_campaign_outputs(report, args.out_dir)
    summary = report.summary()
    for a in summary["approaches"]:
        def fmt(v):
            return "n/a" if v is None else f"{v:.4f}%"
        print(f"approach {a['approach']} (r={a['r']}, N={a['N']}): mean {fmt(a['mean'])}, "
              f"best {fmt(a['best'])}, worst {fmt(a['worst'])}", file=sys.stderr)
    hc = summary["approach_two_horizon_check"]
    print(f"approach 2 horizon check (k <= {hc['N']}): {'pass' if hc['passed'] else 'FAIL'} "
          f"(max deviation {hc['max_relative_deviation']:.3e})", file=sys.stderr)
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK if hc["passed"] else EXIT_NUMERICAL


def _parse_spectrum(text):
    try:
        return [complex(s.strip().replace(" ", "")) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"cannot parse spectrum {text!r}: {exc}") from None


def cmd_generate(args):
    spectrum = _parse_spectrum(args.spectrum) if args.spectrum else None
    n = len(spectrum) if spectrum is not None else args.n
    if n is None:
        raise CliError(EXIT_VALIDATE, "give --n or --spectrum")
    rng = np.random.default_rng(args.seed)
    kw = {}
    if spectrum is None:
        kw = {"real_range": (args.real_min, args.real_max), "unstable": args.unstable}
    try:
        plant = random_plant(n, args.m, args.p, rng=rng, spectrum=spectrum, coupling=args.coupling, **kw)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATE, str(exc)) from None
    grid = SamplingGrid.parse(args.grid) if args.grid else None
    meta = {"generator": "real Schur form with random orthogonal similarity", "seed": args.seed}
    _emit(args.output, dump_system(plant, grid=grid, meta=meta))
    stable, abscissa = is_hurwitz(plant)
    print(f"n={n} m={args.m} p={args.p} spectral abscissa {abscissa:.6g} "
          f"({'Hurwitz' if stable else 'not Hurwitz'})", file=sys.stderr)
    return EXIT_OK


def _add_request(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--order", type=int, help="order budget r_max; picks the largest N with dim R^N <= r_max")
    g.add_argument("--moments", type=int, help="moment horizon N; r = dim R^N")
    s = p.add_mutually_exclusive_group()
    s.add_argument("--stable-inverse", dest="stable_inverse", action="store_true", default=None,
                   help="use the Lyapunov-weighted left inverse (default when the plant is Hurwitz)")
    s.add_argument("--no-stable-inverse", dest="stable_inverse", action="store_false",
                   help="use the pseudoinverse V^T")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sdmor", description="Moment-matching reduction of aperiodically sampled LTI plants."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discretize", help="build the switched model of a sampled plant")
    p.add_argument("input", help="plant file (kind lti)")
    p.add_argument("--grid", help='sampling intervals, e.g. "1,1.5,2,3" (default: the file\'s "H")')
    p.add_argument("-o", "--output", default="-", help="switched-system file to write (default stdout)")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("reduce", help="reduce a sampled plant with approach 1 or 2")
    p.add_argument("input", help="plant file (kind lti)")
    p.add_argument("--approach", type=int, choices=(1, 2), required=True)
    p.add_argument("--grid")
    _add_request(p)
    p.add_argument("-o", "--output", default="-", help="reduced switched-system file (default stdout)")
    p.add_argument("--report", help="report JSON path (default: OUTPUT.report.json)")
    p.add_argument("--timings", action="store_true", help="include wall-clock stage timings in the report")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("certify", help="check quadratic stability of a switched model")
    p.add_argument("system", help="switched-system file (kind ls)")
    p.add_argument("plant", nargs="?", default=None, help="plant file; P is taken from its Lyapunov equation")
    p.add_argument("--P", help='JSON file holding {"P": [[...]]} when no plant is given')
    p.add_argument("-o", "--output", default="-", help="certificate JSON path (default stdout)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("campaign", help="Monte-Carlo BFR comparison of both approaches")
    p.add_argument("plant", help="plant file (kind lti)")
    p.add_argument("--grid")
    _add_request(p)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=float, required=True, help="simulated time span [0, T]")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("generate", help="random plant with a prescribed or random spectrum")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spectrum", help='comma-separated eigenvalues, e.g. "-0.5+2j,-0.5-2j,-3"')
    p.add_argument("--real-min", type=float, default=-2.0)
    p.add_argument("--real-max", type=float, default=-0.1)
    p.add_argument("--unstable", type=int, default=0, help="number of eigenvalues mirrored into Re > 0")
    p.add_argument("--coupling", type=float, default=0.3, help="scale of the off-diagonal Schur coupling")
    p.add_argument("--grid", help='sampling intervals stored as "H"')
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValidationError as exc:
        for v in exc.violations:
            print(f"error: invalid system: {v.code}: {v.message}", file=sys.stderr)
        return EXIT_VALIDATE
    except InfeasibleRequestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NotHurwitzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ConsistencyError, ConditioningError, PreconditionError) as exc:
        print(f"error: numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SdmorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
