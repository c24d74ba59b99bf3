import sys

from aseplab.commands.common import record
from aseplab.models import CheckStatus
from aseplab.services import export
from aseplab.services import verify as checks


def register(sub, common, point) -> None:
    parser = sub.add_parser("verify", parents=[common], help="run verification checks")
    parser.add_argument("--suite", action="append", default=None,
                        help="ALL or comma-separated check names; repeatable")
    parser.add_argument("--list", action="store_true", default=None, help="list checks and the claims they cover")
    parser.set_defaults(func=run)


def _selection(values) -> list[str]:
    names = [name.strip() for value in (values or ["ALL"]) for name in value.split(",") if name.strip()]
    return names


def run(args, options) -> int:
    if options.get("list"):
        document = {"checks": checks.check_names(), "claims": checks.CLAIM_MANIFEST}
        export.write_output(export.to_json(document) + "\n", options.get("output"))
        return 0

    selection = _selection(args.suite)
    seed = options["seed"] if options["seed_given"] else None
    reports = checks.run_suite(selection, seed=seed, jobs=options["jobs"])
    digits, timings = options["digits"], options["timings"]
    if options["format"] == "csv":
        text = export.reports_csv(reports, digits, timings)
    else:
        text = export.reports_jsonl(reports, digits, timings)
    export.write_output(text, options.get("output"))
    sys.stderr.write(export.report_table(reports))
    record(options, "verify", {"suite": selection, "seed": seed}, reports=reports)
    return 3 if any(report.status == CheckStatus.FAIL for report in reports) else 0
