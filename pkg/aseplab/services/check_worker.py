from aseplab.errors import LabError


def execute_unit(payload: dict) -> dict:
    """Run one unit of work and return a picklable result."""
    kind = payload["kind"]
    if kind == "marginal":
        from aseplab.models import BoundaryParams, Which
        from aseplab.services import asep_exact

        params = BoundaryParams(**payload["params"])
        measure = asep_exact.stationary_from_params(payload["n"], params)
        marginal = asep_exact.marginal(measure, Which(payload["which"]), payload["m"])
        return {"success": True, "weights": [float(w) for w in marginal.weights]}
    if kind == "check":
        from aseplab.services import verify

        report = verify.run_check(payload["name"], payload.get("point", {}))
        return {"success": True, "report": report.model_dump()}
    raise ValueError(f"unknown work unit kind {kind!r}")


def run_check_worker(payload: dict, result_queue) -> None:
    """Process entry point: apply the parent's settings, run the unit, report through the queue."""
    try:
        from aseplab.config import settings

        settings.apply(payload.get("settings", {}))
        result_queue.put(execute_unit(payload))
    except LabError as exc:
        try:
            result_queue.put({"success": False, "error": str(exc), "code": exc.code.value})
        except Exception:
            pass
    except Exception as exc:
        try:
            result_queue.put({
                "success": False,
                "error": str(exc) or "Work unit failed",
            })
        except Exception:
            pass
