"""RDS CSV files and study-report serialization.

CSV schema (UTF-8, comma separated, exact header)::

    id,degree,outcome,recruiter_id,wave

An empty ``recruiter_id`` marks a seed.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from pathlib import Path
from typing import Union

from .experiments import StudyReport
from .types import Sample, ValidationError

CSV_HEADER = ["id", "degree", "outcome", "recruiter_id", "wave"]

TABLE_COLUMNS = [
    "estimator",
    "n_nominal",
    "n_realized_mean",
    "mean_estimate",
    "bias",
    "sd",
    "rmse",
    "mc_se",
    "plim",
]


class CsvFormatError(ValidationError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class WaveInconsistencyWarning(UserWarning):
    pass


def ingest_rds_csv(path: Union[str, Path]) -> Sample:
    """Read and validate an RDS recruitment file into a :class:`Sample`.

    Line numbers in errors count the header as line 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise CsvFormatError(1, f"header must be {','.join(CSV_HEADER)!r}, got {header!r}")
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise CsvFormatError(line, f"expected {len(CSV_HEADER)} fields, got {len(row)}")
            rid, degree, outcome, recruiter, wave = (x.strip() for x in row)
            if not rid:
                raise CsvFormatError(line, "empty id")
            try:
                degree = int(degree)
                outcome = float(outcome)
                wave = int(wave)
            except ValueError as exc:
                raise CsvFormatError(line, f"malformed field: {exc}") from None
            if degree < 1:
                raise CsvFormatError(line, f"degree must be >= 1, got {degree}")
            if wave < 0:
                raise CsvFormatError(line, f"wave must be nonnegative, got {wave}")
            if outcome != outcome:
                raise CsvFormatError(line, "outcome is NaN")
            rows.append((line, rid, degree, outcome, recruiter, wave))

    if not rows:
        raise CsvFormatError(1, "file has no records")
    index = {}
    for i, (line, rid, *_rest) in enumerate(rows):
        if rid in index:
            raise CsvFormatError(line, f"duplicate id {rid!r}")
        index[rid] = i

    recruiter_idx = []
    for line, rid, _deg, _y, rec, wave in rows:
        if not rec:
            if wave != 0:
                warnings.warn(f"line {line}: seed {rid!r} has wave {wave}, expected 0", WaveInconsistencyWarning)
            recruiter_idx.append(-1)
            continue
        if rec not in index:
            raise CsvFormatError(line, f"recruiter_id {rec!r} does not match any id")
        j = index[rec]
        if rec == rid:
            raise CsvFormatError(line, f"record {rid!r} lists itself as recruiter")
        if wave != rows[j][5] + 1:
            warnings.warn(
                f"line {line}: wave {wave} but recruiter {rec!r} is at wave {rows[j][5]}",
                WaveInconsistencyWarning,
            )
        recruiter_idx.append(j)

    return Sample(
        [r[3] for r in rows],
        [r[2] for r in rows],
        None,
        recruiter_idx,
        [r[5] for r in rows],
        with_replacement=False,
    )


def write_rds_csv(sample: Sample, path: Union[str, Path]) -> None:
    """Write a sample in the RDS CSV schema; record i gets id ``r<i>``.

    Outcomes are written with ``repr`` so they re-read bit-for-bit.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in range(sample.n):
            rec = int(sample.recruiter[i])
            w.writerow(
                [
                    f"r{i}",
                    int(sample.reported_degree[i]),
                    repr(float(sample.outcome[i])),
                    "" if rec < 0 else f"r{rec}",
                    int(sample.wave[i]),
                ]
            )


# --- reports ----------------------------------------------------------------------


def report_json(report: StudyReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_table(report: StudyReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in report.rows:
        w.writerow(
            [
                r.estimator,
                r.n_nominal,
                repr(r.n_realized_mean),
                repr(r.mean_estimate),
                repr(r.bias),
                repr(r.sd),
                repr(r.rmse),
                repr(r.mc_se),
                "" if r.plim is None else repr(r.plim),
            ]
        )
    return buf.getvalue()


def emit_report(report: StudyReport, fmt: str = "structured", path=None) -> str:
    """Serialize a report; write it to ``path`` if given and return the text."""
    if fmt == "structured":
        text = report_json(report)
    elif fmt == "tabular":
        text = report_table(report)
    else:
        raise ValidationError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_report(path: Union[str, Path]) -> StudyReport:
    return StudyReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
