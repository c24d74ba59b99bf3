from aseplab.commands.common import UsageError, add_backend, emit, float_list, header, require, run_config
from aseplab.models import Which
from aseplab.services import asep_exact, export


def register(sub, common, point) -> None:
    parser = sub.add_parser(
        "gf", parents=[common, point], help="generating function of the last m sites, optionally both sides of the identity"
    )
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--t", type=float_list, required=True, help="t_1,...,t_m for sites n-m+1..n")
    parser.add_argument("--identity", action="store_true", default=None,
                        help="also evaluate the Askey-Wilson integral form")
    add_backend(parser)
    parser.set_defaults(func=run)


def run(args, options) -> int:
    n = require(options, "n", "--n")
    t = args.t
    if not 1 <= len(t) <= n:
        raise UsageError(f"--t needs between 1 and n={n} values, got {len(t)}")
    if options.get("identity") and len(t) >= n:
        raise UsageError(f"--identity needs fewer than n={n} values of --t, got {len(t)}")
    config = run_config("gf", options, n=n, m=len(t))
    measure = asep_exact.stationary_measure(n, config.rates)
    exact = asep_exact.generating_function(asep_exact.marginal(measure, Which.LAST, len(t)), t)
    document = {**header(config), "n": n, "t": t, "value": exact}
    rows = [["exact", exact]]
    if options.get("identity"):
        identity = asep_exact.characterization_gf(config.params, n, t, args.backend)
        document["identity"] = identity.model_dump()
        document["relative_difference"] = abs(identity.value - exact) / abs(exact)
        rows += [["identity", identity.value], ["applicable", identity.applicability.applicable]]
    emit(options, document, export.table_csv(["quantity", "value"], rows))
    return 0
