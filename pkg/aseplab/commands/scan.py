import logging

from aseplab.commands.common import add_backend, add_which, emit, header, int_list, record, require, run_config
from aseplab.models import Which
from aseplab.services import export, limits

logger = logging.getLogger(__name__)


def register(sub, common, point) -> None:
    parser = sub.add_parser("scan", parents=[common, point], help="total variation to the limit over a list of sizes")
    parser.add_argument("--n-list", dest="n_list", type=int_list, default=None, help="e.g. 4,6,8,10")
    parser.add_argument("--m", type=int, default=None)
    add_which(parser)
    add_backend(parser)
    parser.set_defaults(func=run)


def run(args, options) -> int:
    n_list = require(options, "n_list", "--n-list")
    m = require(options, "m", "--m")
    config = run_config("scan", options, n_list=n_list, m=m)
    result = limits.convergence_scan(config.params, n_list, m, Which(args.which), args.backend, options["jobs"])
    output = options.get("output")
    if options["format"] == "csv" and output:
        sidecar = export.sidecar_path(output)
        export.write_output(export.to_json({**header(config), **export.scan_sidecar(result)}, options["digits"]) + "\n",
                            str(sidecar))
        logger.info(f"Scan metadata written to {sidecar}")
    emit(options, {**header(config), **result.model_dump()}, export.scan_csv(result, options["digits"]))
    record(options, "scan", config.model_dump(), rows=result.rows)
    return 0
