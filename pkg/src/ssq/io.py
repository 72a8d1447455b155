"""File formats: field CSV/JSON, scattering-data JSON, plain numeric CSV."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .fields import ComplexField, ReflectionCoefficient, ScatteringData


def fmt(v) -> str:
    """Shortest round-trip decimal, locale independent."""
    v = float(v)
    if v == 0.0:
        return "0.0"  # drop the sign of negative zero for stable diffs
    return repr(v)


def write_csv(path, header, columns):
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(c[i] if c.dtype.kind in "UO" else fmt(c[i]) for c in cols) + "\n")


def read_csv(path):
    """Return (header, dict of column name -> list of strings)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    data = {h: [] for h in header}
    for r in rows[1:]:
        if not r:
            continue
        if len(r) != len(header):
            raise ValueError(f"{path}: ragged row {r!r}")
        for h, v in zip(header, r):
            data[h].append(v.strip())
    return header, data


def write_field(path, fld: ComplexField):
    write_csv(path, ["x", "re_u", "im_u"], [fld.xs, fld.values.real, fld.values.imag])


def read_field(path, time: float | None = None) -> ComplexField:
    path = Path(path)
    if path.suffix.lower() == ".json":
        d = json.loads(path.read_text())
        u = np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
        return ComplexField(np.asarray(d["xs"], float), u, d.get("t", 0.0) if time is None else time)
    header, d = read_csv(path)
    for key in ("x", "re_u", "im_u"):
        if key not in d:
            raise ValueError(f"{path}: missing column {key!r}")
    xs = np.array(d["x"], float)
    u = np.array(d["re_u"], float) + 1j * np.array(d["im_u"], float)
    return ComplexField(xs, u, 0.0 if time is None else time)


def field_to_json(fld: ComplexField) -> dict:
    return {"xs": fld.xs.tolist(), "re": fld.values.real.tolist(), "im": fld.values.imag.tolist(), "t": fld.time}


def _c(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def scattering_to_json(sd: ScatteringData) -> dict:
    g = sd.gamma
    return {
        "poles": [_c(k) for k in sd.poles],
        "norming": [[_c(c[0]), _c(c[1])] for c in sd.norming],
        "gamma": {
            "k": g.k.tolist(),
            "g1_re": g.values[:, 0].real.tolist(),
            "g1_im": g.values[:, 0].imag.tolist(),
            "g2_re": g.values[:, 1].real.tolist(),
            "g2_im": g.values[:, 1].imag.tolist(),
        },
    }


def scattering_from_json(d: dict) -> ScatteringData:
    poles = np.array([p["re"] + 1j * p["im"] for p in d.get("poles", [])], complex)
    norming = np.array([[c[0]["re"] + 1j * c[0]["im"], c[1]["re"] + 1j * c[1]["im"]] for c in d.get("norming", [])],
                       complex).reshape(-1, 2)
    g = d.get("gamma")
    if g and len(g.get("k", [])):
        vals = np.stack([np.asarray(g["g1_re"]) + 1j * np.asarray(g["g1_im"]),
                         np.asarray(g["g2_re"]) + 1j * np.asarray(g["g2_im"])], axis=1)
        gamma = ReflectionCoefficient(np.asarray(g["k"], float), vals)
    else:
        gamma = ReflectionCoefficient.zero()
    return ScatteringData(poles, norming, gamma)


def write_scattering(path, sd: ScatteringData):
    Path(path).write_text(json.dumps(scattering_to_json(sd), indent=1) + "\n")


def read_scattering(path) -> ScatteringData:
    return scattering_from_json(json.loads(Path(path).read_text()))
