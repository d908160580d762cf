"""Reading and writing instances and traces as CSV or JSON lines."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any

from .errors import InvalidInstance
from .model import Event, Instance, Job, ScheduleTrace

INSTANCE_FIELDS = ("id", "arrival", "workload", "weight")
TRACE_FIELDS = ("event", "time", "job_id", "machine")


def _is_jsonl(path: Path, fmt: str | None) -> bool:
    if fmt is not None:
        return fmt == "jsonl"
    return path.suffix.lower() in (".jsonl", ".ndjson", ".json")


def _job(row: dict[str, Any], where: str) -> Job:
    try:
        weight = row.get("weight")
        return Job(
            int(row["id"]),
            float(row["arrival"]),
            float(row["workload"]),
            1.0 if weight in (None, "") else float(weight),
        )
    except KeyError as exc:
        raise InvalidInstance(f"{where}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InvalidInstance(f"{where}: {exc}") from None


def read_instance(path: str | Path, fmt: str | None = None) -> Instance:
    """Load an instance from CSV (``id,arrival,workload,weight``) or JSON lines."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    jobs = []
    if _is_jsonl(path, fmt):
        for k, line in enumerate(text.splitlines(), 1):
            if line.strip():
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise InvalidInstance(f"{path}:{k}: {exc.msg}") from None
                jobs.append(_job(row, f"{path}:{k}"))
    else:
        reader = csv.DictReader(io.StringIO(text))
        missing = set(INSTANCE_FIELDS[:3]) - set(reader.fieldnames or ())
        if missing:
            raise InvalidInstance(f"{path}: header lacks {', '.join(sorted(missing))}")
        for k, row in enumerate(reader, 2):
            jobs.append(_job(row, f"{path}:{k}"))
    return Instance.from_jobs(jobs, {"source": str(path)})


def instance_text(instance: Instance, fmt: str = "csv") -> str:
    jobs = sorted(instance.jobs, key=lambda j: (j.arrival, j.id))
    if fmt == "jsonl":
        return "".join(
            json.dumps({"id": j.id, "arrival": j.arrival, "workload": j.workload, "weight": j.weight}) + "\n"
            for j in jobs
        )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(INSTANCE_FIELDS)
    for j in jobs:
        w.writerow((j.id, repr(j.arrival), repr(j.workload), repr(j.weight)))
    return buf.getvalue()


def write_instance(instance: Instance, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    path.write_text(instance_text(instance, "jsonl" if _is_jsonl(path, fmt) else "csv"), encoding="utf-8")


def trace_text(trace: ScheduleTrace, fmt: str = "csv") -> str:
    if fmt == "jsonl":
        return "".join(
            json.dumps({"event": e.kind, "time": e.time, "job_id": e.job, "machine": e.machine}) + "\n"
            for e in trace.events
        )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for e in trace.events:
        w.writerow((e.kind, f"{e.time:.12g}", e.job, "" if e.machine is None else e.machine))
    return buf.getvalue()


def write_trace(trace: ScheduleTrace, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    path.write_text(trace_text(trace, "jsonl" if _is_jsonl(path, fmt) else "csv"), encoding="utf-8")


def read_trace(path: str | Path, speeds: tuple[float, ...], fmt: str | None = None) -> ScheduleTrace:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if _is_jsonl(path, fmt):
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
    events = []
    for row in rows:
        mach = row.get("machine")
        events.append(Event(row["event"], float(row["time"]), int(row["job_id"]),
                            None if mach in (None, "") else int(mach)))
    return ScheduleTrace(events, tuple(speeds))
