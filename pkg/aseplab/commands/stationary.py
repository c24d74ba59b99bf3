from aseplab.commands.common import add_which, emit, header, require, run_config
from aseplab.models import Which
from aseplab.services import asep_exact, export


def register(sub, common, point) -> None:
    parser = sub.add_parser("stationary", parents=[common, point], help="exact stationary measure of the n-site chain")
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--m", type=int, default=None, help="emit the m-site marginal instead")
    add_which(parser)
    parser.add_argument("--extended", action="store_true", default=None, help="extended-precision solve")
    parser.set_defaults(func=run)


def run(args, options) -> int:
    n = require(options, "n", "--n")
    config = run_config("stationary", options, n=n, m=args.m)
    solution = asep_exact.solve_stationary(n, config.rates, extended=bool(options.get("extended")))
    measure = solution.measure
    if args.m is not None:
        measure = asep_exact.marginal(measure, Which(args.which), args.m)
    document = {
        **header(config),
        "n": n,
        "method": solution.method,
        "residual": solution.residual,
        "sigma2": solution.sigma2,
        "density": asep_exact.density_profile(solution.measure),
        "measure": export.measure_document(measure, which=args.which if args.m is not None else None),
    }
    emit(options, document, export.measure_csv(measure, options["digits"]))
    return 0
