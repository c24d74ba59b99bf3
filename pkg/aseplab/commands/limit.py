from aseplab.commands.common import add_backend, add_which, emit, header, require, run_config
from aseplab.models import Which
from aseplab.services import export, limits


def register(sub, common, point) -> None:
    parser = sub.add_parser("limit", parents=[common, point], help="limit of the first or last m marginals")
    parser.add_argument("--m", type=int, default=None)
    add_which(parser)
    add_backend(parser)
    parser.set_defaults(func=run)


def run(args, options) -> int:
    m = require(options, "m", "--m")
    config = run_config("limit", options, m=m)
    label, measure, grid = limits.limit_target(config.params, m, Which(args.which), args.backend)
    document = {
        **header(config),
        "target": f"{label}_{m}",
        "which": args.which,
        "measure": export.measure_document(measure),
        "grid": grid.model_dump() if grid else None,
    }
    emit(options, document, export.measure_csv(measure, options["digits"]))
    return 0
