"""Sample files and deterministic output encoding.

A sample file is a JSON object ``{"m1", "m2", "n", "matrices"}`` where
``matrices[i][r][c]`` is entry ``(r, c)`` of observation ``i``.
"""
from __future__ import annotations

import csv
import io as _io
import json
from importlib import resources

import numpy as np

from .core import DataSample, DimensionError, KronMLEError


class SampleFileError(KronMLEError, ValueError):
    pass


def _reject_constant(name):
    raise SampleFileError(f"non-finite value {name} in sample file")


def sample_from_dict(doc) -> DataSample:
    if not isinstance(doc, dict):
        raise SampleFileError("sample file must hold a JSON object")
    missing = {"m1", "m2", "n", "matrices"} - set(doc)
    if missing:
        raise SampleFileError(f"sample file lacks {sorted(missing)}")
    dims = {}
    for key in ("m1", "m2", "n"):
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise SampleFileError(f"{key} must be a positive integer")
        dims[key] = v
    try:
        arr = np.array(doc["matrices"], dtype=float)
    except (TypeError, ValueError):
        raise SampleFileError("matrices must be a ragged-free nested list of numbers") from None
    want = (dims["n"], dims["m1"], dims["m2"])
    if arr.shape != want:
        raise SampleFileError(f"matrices have shape {arr.shape}, declared {want}")
    try:
        return DataSample(arr)
    except DimensionError as exc:
        raise SampleFileError(str(exc)) from None


def sample_to_dict(sample) -> dict:
    sample = sample if isinstance(sample, DataSample) else DataSample(sample)
    return {"m1": sample.m1, "m2": sample.m2, "n": sample.n, "matrices": sample.matrices.tolist()}


def loads_sample(text: str) -> DataSample:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SampleFileError(f"malformed JSON: {exc}") from None
    return sample_from_dict(doc)


def read_sample(path) -> DataSample:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SampleFileError(f"cannot read {path}: {exc.strerror}") from None
    return loads_sample(text)


def write_sample(path, sample) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(sample_to_dict(sample)))


def dumps_json(obj) -> str:
    """Sorted, indented JSON with a trailing newline; NaN and Inf are refused."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def trace_csv(rows) -> str:
    """``iteration,g,delta`` CSV; ``delta`` is empty for the starting point."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "g", "delta"])
    for it, g, d in rows:
        w.writerow([it, repr(float(g)), "" if d is None else repr(float(d))])
    return buf.getvalue()


def load_schema(name: str) -> dict:
    """A JSON schema shipped with the package, e.g. ``load_schema("fit_report")``."""
    text = resources.files("kronmle").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)
