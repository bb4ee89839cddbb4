"""File formats: counts tables, raw allele tables, models, estimates, truth, reports.

Every text format starts with a version line ``#<format>\\tformat_version=1``
followed by a tab-separated header row.  Counts tables name each sample by
two columns, ``<sample>.x`` (successes) and ``<sample>.n`` (trials); the first
sample is the target and the rest are boosters::

    #ebfreq-counts	format_version=1
    id	target.x	target.n	booster1.x	booster1.n
    rs0001	10	30	31	90

Raw allele tables carry the two allele symbols and both allele counts per
sample (``<sample>.1``, ``<sample>.2``) and are converted to counts by
:func:`orient`.  Floats in machine-readable files are written with 17
significant digits, so values survive a write/read cycle exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .core import CountPair
from .data import DataError, MarkerDataset, MarkerRecord
from .estimate import ESTIMATE_COLUMNS
from .evaluate import EvalReport
from .priors import from_document, to_document

FORMAT_VERSION = 1
COUNTS_FORMAT = "ebfreq-counts"
RAW_FORMAT = "ebfreq-raw"
ESTIMATES_FORMAT = "ebfreq-estimates"
TRUTH_FORMAT = "ebfreq-truth"
EVAL_FORMAT = "ebfreq-eval"
NUCLEOTIDES = "ACGT"
ORIENTATION = "alphabetical-ACGT"


class FormatError(DataError):
    """Malformed input file; the message carries 1-based line and column."""

    def __init__(self, path, line, column, message):
        where = f"{path}:{line}" + (f":{column}" if column else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


def fmt_float(v) -> str:
    v = float(v)
    return "NA" if math.isnan(v) else f"{v:.17g}"


# --- shared text plumbing -----------------------------------------------------


def _version_line(fmt):
    return f"#{fmt}\tformat_version={FORMAT_VERSION}\n"


def _read_lines(path, fmt):
    """Yield ``(line_no, fields)`` after checking the version line; first item is the header."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\r\n")
        parts = first.split("\t")
        if not parts or parts[0] != f"#{fmt}":
            raise FormatError(path, 1, 1, f"expected a '#{fmt}' version line, found {first[:40]!r}")
        if len(parts) < 2 or parts[1] != f"format_version={FORMAT_VERSION}":
            raise FormatError(path, 1, 2, f"unsupported or missing format_version (this reader handles {FORMAT_VERSION})")
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            yield line_no, line.split("\t")


def _parse_int(path, line_no, col, text, what):
    if text == "":
        raise FormatError(path, line_no, col, f"missing {what}")
    try:
        value = int(text)
    except ValueError:
        raise FormatError(path, line_no, col, f"{what} {text!r} is not an integer") from None
    if value < 0:
        raise FormatError(path, line_no, col, f"{what} {value} is negative")
    return value


def _parse_float(path, line_no, col, text, what):
    if text == "NA":
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise FormatError(path, line_no, col, f"{what} {text!r} is not a number") from None


def _check_header(path, line_no, fields, ncol):
    if len(fields) != ncol:
        raise FormatError(path, line_no, min(len(fields), ncol) + 1, f"expected {ncol} columns, found {len(fields)}")


def _first_row(rows, path, what):
    try:
        return next(rows)
    except StopIteration:
        raise FormatError(path, 2, None, f"missing {what} header row") from None


# --- counts tables ------------------------------------------------------------


def _sample_names(path, line_no, header, suffixes):
    if not header or header[0] != "id":
        raise FormatError(path, line_no, 1, "first header column must be 'id'")
    width = len(suffixes)
    if (len(header) - 1) % width or len(header) == 1:
        raise FormatError(path, line_no, len(header), f"expected {width} columns per sample after 'id'")
    names = []
    for j in range(1, len(header), width):
        stem = header[j].rsplit(".", 1)[0]
        for off, suf in enumerate(suffixes):
            if header[j + off] != f"{stem}.{suf}":
                raise FormatError(path, line_no, j + off + 1, f"expected column '{stem}.{suf}', found {header[j + off]!r}")
        names.append(stem)
    return tuple(names)


def read_dataset(path, format: str = "counts-tsv") -> MarkerDataset:
    """Read a counts table; K is the number of samples after the target."""
    if format != "counts-tsv":
        raise ValueError(f"unsupported dataset format {format!r}")
    rows = _read_lines(path, COUNTS_FORMAT)
    line_no, header = _first_row(rows, path, "column")
    names = _sample_names(path, line_no, header, ("x", "n"))
    ncol = len(header)
    ids, counts, seen = [], [], {}
    for line_no, fields in rows:
        _check_header(path, line_no, fields, ncol)
        mid = fields[0]
        if mid == "":
            raise FormatError(path, line_no, 1, "empty marker id")
        if mid in seen:
            raise FormatError(path, line_no, 1, f"duplicate marker id {mid!r} (first on line {seen[mid]})")
        seen[mid] = line_no
        vals = []
        for j in range(1, ncol, 2):
            s = _parse_int(path, line_no, j + 1, fields[j], f"{header[j]} count")
            n = _parse_int(path, line_no, j + 2, fields[j + 1], f"{header[j + 1]} count")
            if n == 0:
                raise FormatError(path, line_no, j + 2, f"marker {mid!r}: {names[j // 2]} has zero trials")
            if s > n:
                raise FormatError(path, line_no, j + 1, f"marker {mid!r}: {names[j // 2]} successes {s} exceed trials {n}")
            vals += [s, n]
        ids.append(mid)
        counts.append(vals)
    arr = np.array(counts, dtype=np.int64).reshape(len(ids), ncol - 1)
    return MarkerDataset(
        ids, arr[:, 0], arr[:, 1], arr[:, 2::2], arr[:, 3::2],
        source=str(path), orientation=ORIENTATION, sample_names=names,
    )


def write_dataset(data: MarkerDataset, path) -> None:
    names = data.sample_names or ("target", *(f"booster{k + 1}" for k in range(data.K)))
    cols = ["id"] + [f"{s}.{c}" for s in names for c in ("x", "n")]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_version_line(COUNTS_FORMAT))
        fh.write("\t".join(cols) + "\n")
        for i, mid in enumerate(data.ids):
            vals = [data.y[i], data.n_y[i]]
            for k in range(data.K):
                vals += [data.x[i, k], data.n_x[i, k]]
            fh.write(mid + "\t" + "\t".join(str(int(v)) for v in vals) + "\n")


# --- orientation --------------------------------------------------------------


def orient(marker_id: str, allele1: str, allele2: str, counts) -> MarkerRecord:
    """Count the alphabetically lesser nucleotide (A < C < G < T) as the success allele.

    ``counts`` is a sequence of ``(count_allele1, count_allele2)`` per sample,
    target first.
    """
    a1, a2 = allele1.upper(), allele2.upper()
    for sym in (a1, a2):
        if len(sym) != 1 or sym not in NUCLEOTIDES:
            raise DataError(f"marker {marker_id!r}: unknown allele symbol {sym!r} (expected one of A, C, G, T)")
    if a1 == a2:
        raise DataError(f"marker {marker_id!r}: both alleles are {a1!r}")
    swap = a2 < a1
    pairs = []
    for c1, c2 in counts:
        if c1 < 0 or c2 < 0:
            raise DataError(f"marker {marker_id!r}: negative allele count")
        pairs.append(CountPair(c2 if swap else c1, c1 + c2))
    return MarkerRecord(marker_id, pairs[0], tuple(pairs[1:]))


def read_raw(path) -> MarkerDataset:
    """Read a raw allele table and orient every marker."""
    rows = _read_lines(path, RAW_FORMAT)
    line_no, header = _first_row(rows, path, "column")
    if header[1:3] != ["allele1", "allele2"]:
        raise FormatError(path, line_no, 2, "columns 2 and 3 must be 'allele1' and 'allele2'")
    names = _sample_names(path, line_no, [header[0], *header[3:]], ("1", "2"))
    ncol = len(header)
    records, seen = [], {}
    for line_no, fields in rows:
        _check_header(path, line_no, fields, ncol)
        mid = fields[0]
        if mid in seen:
            raise FormatError(path, line_no, 1, f"duplicate marker id {mid!r} (first on line {seen[mid]})")
        seen[mid] = line_no
        counts = []
        for j in range(3, ncol, 2):
            counts.append((
                _parse_int(path, line_no, j + 1, fields[j], f"{header[j]} count"),
                _parse_int(path, line_no, j + 2, fields[j + 1], f"{header[j + 1]} count"),
            ))
        try:
            rec = orient(mid, fields[1], fields[2], counts)
        except (DataError, ValueError) as exc:
            raise FormatError(path, line_no, 2, str(exc)) from None
        records.append(rec)
    return MarkerDataset.from_records(records, source=str(path), orientation=ORIENTATION, sample_names=names)


# --- models -------------------------------------------------------------------


def save_model(model, path, fit=None) -> None:
    """Write a model document; ``fit`` is the fit metadata (including the dataset hash)."""
    doc = to_document(model, fit)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def load_model_document(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(path, exc.lineno, exc.colno, f"invalid JSON: {exc.msg}") from None


def load_model(path):
    return from_document(load_model_document(path))


# --- estimate tables ----------------------------------------------------------


def write_estimates(columns: dict, path) -> None:
    """Write the column arrays returned by :func:`ebfreq.estimate.estimate_arrays`."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_version_line(ESTIMATES_FORMAT))
        fh.write("\t".join(ESTIMATE_COLUMNS) + "\n")
        for i, mid in enumerate(columns["id"]):
            fh.write(mid + "\t" + "\t".join(fmt_float(columns[c][i]) for c in ESTIMATE_COLUMNS[1:]) + "\n")


def read_estimates(path) -> dict:
    rows = _read_lines(path, ESTIMATES_FORMAT)
    line_no, header = _first_row(rows, path, "column")
    if tuple(header) != ESTIMATE_COLUMNS:
        raise FormatError(path, line_no, 1, f"expected columns {' '.join(ESTIMATE_COLUMNS)}")
    ids, vals = [], []
    for line_no, fields in rows:
        _check_header(path, line_no, fields, len(header))
        ids.append(fields[0])
        vals.append([_parse_float(path, line_no, j + 1, fields[j], header[j]) for j in range(1, len(header))])
    arr = np.array(vals, dtype=float).reshape(len(ids), len(header) - 1)
    out = {"id": ids}
    out.update({c: arr[:, j] for j, c in enumerate(ESTIMATE_COLUMNS[1:])})
    return out


# --- truth files --------------------------------------------------------------


def write_truth(truth, path) -> None:
    K = truth.p.shape[1]
    cols = ["id", *(f"p_true.{k + 1}" for k in range(K)), "q_true"]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_version_line(TRUTH_FORMAT))
        fh.write("\t".join(cols) + "\n")
        for i, mid in enumerate(truth.ids):
            fh.write(mid + "\t" + "\t".join(fmt_float(v) for v in (*truth.p[i], truth.q[i])) + "\n")


def read_truth(path) -> dict:
    """Map marker id to true target frequency."""
    rows = _read_lines(path, TRUTH_FORMAT)
    line_no, header = _first_row(rows, path, "column")
    if header[0] != "id" or header[-1] != "q_true":
        raise FormatError(path, line_no, 1, "truth header must start with 'id' and end with 'q_true'")
    out = {}
    for line_no, fields in rows:
        _check_header(path, line_no, fields, len(header))
        if fields[0] in out:
            raise FormatError(path, line_no, 1, f"duplicate marker id {fields[0]!r}")
        out[fields[0]] = _parse_float(path, line_no, len(header), fields[-1], "q_true")
    return out


# --- simulation configs -------------------------------------------------------


def save_simconfig(config, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_simconfig(path):
    from .simulate import SimConfig

    return SimConfig.from_dict(load_model_document(path))


# --- evaluation reports -------------------------------------------------------


def write_report(reports, path, profiles=None) -> None:
    """Plot-ready report: one ``all`` summary row per estimator, then per-bin rows.

    ``profiles`` optionally maps estimator name to a bias/variance profile,
    which replaces the MSE-only profile carried by the report.
    """
    profiles = profiles or {}
    cols = ["estimator", "bin_center", "count", "mse_raw", "correction_term", "mse_corrected", "bias_sq", "variance"]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_version_line(EVAL_FORMAT).rstrip("\n") + "\tvariance_convention=population\n")
        fh.write("\t".join(cols) + "\n")
        for r in reports:
            fh.write("\t".join([r.estimator, "all", str(r.n_markers), fmt_float(r.mse_raw),
                                fmt_float(r.correction_term), fmt_float(r.mse_corrected), "NA", "NA"]) + "\n")
        for r in reports:
            for b in profiles.get(r.estimator, r.profile):
                stats = [b.mse, None, b.mse, b.bias_sq, b.variance]
                fh.write("\t".join([r.estimator, fmt_float(b.center), str(b.count),
                                    *("NA" if v is None else fmt_float(v) for v in stats)]) + "\n")


def report_as_dict(r: EvalReport) -> dict:
    return {"estimator": r.estimator, "mode": r.mode, "n_markers": r.n_markers, "mse_raw": r.mse_raw,
            "correction_term": r.correction_term, "mse_corrected": r.mse_corrected}
