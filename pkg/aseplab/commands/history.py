from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.services import export, ledger


def register(sub, common, point) -> None:
    parser = sub.add_parser("history", parents=[common], help="list ledger runs, or show one run")
    parser.add_argument("--run", default=None, help="run id")
    parser.add_argument("--limit", type=int, default=20)
    parser.set_defaults(func=run)


def run(args, options) -> int:
    data = ledger.history(settings.database_path, args.run, args.limit)
    if args.run is not None and data["run"] is None:
        raise LabError(ErrorCode.DOMAIN, f"no run {args.run!r} in the ledger")
    if options["format"] == "csv" and "reports" in data:
        text = export.reports_csv(data["reports"], options["digits"], options["timings"])
    elif options["format"] == "csv":
        rows = ([run.id, run.command, run.status.value, run.created_at, run.completed_at] for run in data["runs"])
        text = export.table_csv(["id", "command", "status", "created_at", "completed_at"], rows)
    else:
        text = export.to_json(data, options["digits"]) + "\n"
    export.write_output(text, options.get("output"))
    return 0
