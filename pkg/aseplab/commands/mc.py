import math

from aseplab.commands.common import UsageError, emit, header, require, run_config
from aseplab.config import settings
from aseplab.models import Statistic
from aseplab.services import asep_exact, asep_mc, export


def register(sub, common, point) -> None:
    parser = sub.add_parser("mc", parents=[common, point], help="continuous-time Monte-Carlo estimates")
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--stat", action="append", default=None,
                        help="site:i or word:0101 (prefix word, site 1 first); repeatable")
    parser.add_argument("--total-time", dest="total_time", type=float, default=None)
    parser.add_argument("--burn-in", dest="burn_in", type=float, default=None)
    parser.add_argument("--batches", type=int, default=None)
    parser.add_argument("--exact", action="store_true", default=None,
                        help="compare with the exact stationary measure")
    parser.set_defaults(func=run)


def run(args, options) -> int:
    n = require(options, "n", "--n")
    try:
        statistics = [Statistic.parse(text) for text in (args.stat or ["site:1"])]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = run_config("mc", options, n=n)
    estimates = asep_mc.simulate_estimates(
        n,
        config.rates,
        statistics,
        total_time=options["total_time"],
        burn_in=options.get("burn_in"),
        seed=config.seed,
        batches=options["batches"],
    )
    entries = [estimate.model_dump() for estimate in estimates]
    if options.get("exact"):
        if n > settings.solver_cap:
            raise UsageError(f"--exact needs n <= {settings.solver_cap}")
        weights = asep_exact.stationary_measure(n, config.rates).weights
        for entry, statistic in zip(entries, statistics):
            exact = float(weights @ asep_mc.statistic_values(n, statistic))
            entry["exact"] = exact
            entry["z"] = (entry["mean"] - exact) / entry["stderr"] if entry["stderr"] > 0 else math.nan
    document = {**header(config), "n": n, "estimates": entries}
    columns = list(entries[0])
    emit(options, document, export.table_csv(columns, ([entry[key] for key in columns] for entry in entries)))
    return 0
