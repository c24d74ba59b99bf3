from aseplab.commands.common import emit, header, run_config
from aseplab.services import asep_exact, aw_measure, export


def register(sub, common, point) -> None:
    parser = sub.add_parser("phase", parents=[common, point], help="classify the phase; print theta and budget s")
    parser.add_argument("--measure", action="store_true", default=None, help="include the measure pi_1")
    parser.set_defaults(func=run)


def run(args, options) -> int:
    config = run_config("phase", options)
    params = config.params
    info = asep_exact.classify_phase(params.A, params.C, params.q, params.B, params.D)
    document = {**header(config), **info.model_dump()}
    if options.get("measure"):
        pi_1 = aw_measure.pi_marginal(*params.as_tuple(), 1.0)
        atoms, continuous = aw_measure.measure_support(pi_1)
        document["support"] = {"atoms": atoms, "continuous": continuous}
        document["pi_1"] = aw_measure.measure_to_dict(pi_1)
    rows = [[key, value.value if hasattr(value, "value") else value] for key, value in info.model_dump().items()]
    emit(options, document, export.table_csv(["field", "value"], rows))
    return 0
