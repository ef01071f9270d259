"""JSON field dumps and CSV tables.

A field dump is one JSON object::

    {"algebra": "su2", "backend": "grid", "degree": 1, "dim": 2,
     "value_shape": [2, 2],
     "n_or_degree_info": {"sites_per_axis": 8, "box_length": 1.0},
     "components": {"0": [...], "1": [...]}}

Component keys are comma-joined multi-indices (``""`` for 0-forms).  Grid
components are nested site-major arrays whose leaves are ``[re, im]`` pairs;
polynomial components map comma-joined exponent tuples to nested matrices of
``[re, im]`` pairs.  Floats are written with ``repr`` so a round trip is
bit-exact.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .forms import Domain, FormField, MatPoly, multi_indices
from .lie_algebra import make_algebra

__all__ = ["dump_field", "field_from_dict", "field_to_dict", "load_field", "write_csv"]


def _pairs(arr: np.ndarray):
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _from_pairs(nested) -> np.ndarray:
    a = np.asarray(nested, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def field_to_dict(X: FormField) -> dict:
    dom = X.domain
    if dom.is_grid:
        info = {"sites_per_axis": dom.sites_per_axis, "box_length": dom.box_length}
    else:
        info = {"sampling_points_per_axis": dom.sampling_points_per_axis}
    comps = {}
    for k in multi_indices(dom.dim, X.degree):
        c = X.components[k]
        key = ",".join(map(str, k))
        if isinstance(c, MatPoly):
            comps[key] = {
                ",".join(map(str, e)): _pairs(c.coef[e])
                for e in np.ndindex(*c.extents)
                if np.any(c.coef[e])
            }
        else:
            comps[key] = _pairs(c)
    return {
        "algebra": X.algebra.name,
        "backend": dom.backend,
        "degree": X.degree,
        "dim": dom.dim,
        "value_shape": list(X.value_shape),
        "n_or_degree_info": info,
        "components": comps,
    }


def field_from_dict(doc: dict) -> FormField:
    alg = make_algebra(doc["algebra"])
    dim = int(doc["dim"])
    info = doc["n_or_degree_info"]
    if doc["backend"] == "grid":
        dom = Domain.grid(dim, int(info["sites_per_axis"]), float(info["box_length"]))
    else:
        dom = Domain.polynomial(dim, int(info.get("sampling_points_per_axis", 4)))
    shape = tuple(doc["value_shape"])
    comps = {}
    for k in multi_indices(dim, int(doc["degree"])):
        raw = doc["components"][",".join(map(str, k))]
        if dom.is_grid:
            comps[k] = _from_pairs(raw)
        else:
            terms = {tuple(int(i) for i in e.split(",")): _from_pairs(v) for e, v in raw.items()}
            if not terms:
                comps[k] = MatPoly.constant(dim, np.zeros(shape))
                continue
            ext = [1 + max(e[i] for e in terms) for i in range(dim)]
            coef = np.zeros(ext + list(shape), dtype=complex)
            for e, v in terms.items():
                coef[e] = v
            comps[k] = MatPoly(coef)
    return FormField(int(doc["degree"]), dom, alg, comps)


def dump_field(X: FormField, path) -> None:
    Path(path).write_text(json.dumps(field_to_dict(X)))


def load_field(path) -> FormField:
    return field_from_dict(json.loads(Path(path).read_text()))


def write_csv(path, header, rows) -> None:
    """CSV with floats at 17 significant digits."""
    def fmt(v):
        if isinstance(v, (bool, np.bool_)):
            return str(bool(v)).lower()
        if isinstance(v, (float, np.floating)):
            return format(float(v), ".17g")
        return v

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
