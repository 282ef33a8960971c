"""JSON formats for frames, continuous models and reports.

Complex coordinates are written as [re, im] pairs; floats keep 17
significant digits so that every number round-trips exactly.
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .continuous import (
    Atom,
    Box,
    atomic_from_frame,
    exponential_on_set,
    gabor_stft,
    unbounded_counterexample,
)
from .core import Frame
from .errors import InvalidInput


def _num(x):
    return float(format(float(x), ".17g"))


def encode_vector(v, field):
    if field == "complex":
        return [[_num(z.real), _num(z.imag)] for z in np.asarray(v, dtype=complex)]
    return [_num(z) for z in np.asarray(v, dtype=float)]


def decode_vectors(rows, field, dim):
    arr = np.asarray(rows, dtype=float)
    if field == "complex":
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise InvalidInput("complex coordinates must be [re, im] pairs")
        arr = arr[..., 0] + 1j * arr[..., 1]
    if arr.size == 0:
        arr = arr.reshape(0, dim)
    return arr


def frame_to_json(frame: Frame):
    out = {"field": frame.field, "dim": frame.dim,
           "vectors": [encode_vector(v, frame.field) for v in frame.vectors]}
    if frame.weights is not None:
        out["weights"] = [_num(w) for w in frame.weights]
    return out


def frame_from_json(obj):
    try:
        field, dim = obj["field"], int(obj["dim"])
        vecs = decode_vectors(obj["vectors"], field, dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed frame JSON: {exc}") from exc
    return Frame(field, dim, vecs, obj.get("weights"))


def _mass(m):
    if isinstance(m, str):
        return Fraction(m)
    return float(m)


def _domain_from_json(entries):
    boxes, atoms = [], []
    for e in entries:
        if "box" in e:
            dens = e.get("density", "uniform")
            boxes.append(Box(e["box"], 1.0 if dens == "uniform" else float(dens)))
        elif "atoms" in e:
            atoms.extend(Atom(a["t"], _mass(a["mass"])) for a in e["atoms"])
        else:
            raise InvalidInput(f"domain entry needs 'box' or 'atoms': {e}")
    return boxes, atoms


def model_from_json(obj):
    """Build a generator model by name; an explicit "domain" replaces the default one."""
    kind = obj.get("evaluator")
    params = dict(obj.get("params", {}))
    if kind == "gabor":
        model = gabor_stft(**params)
    elif kind == "exponential":
        if "intervals" not in params:
            raise InvalidInput("exponential model needs params.intervals")
        model = exponential_on_set(**params)
    elif kind == "atomic":
        model = atomic_from_frame(frame_from_json(params))
    elif kind == "unbounded":
        model = unbounded_counterexample(int(params.get("d", 10)))
    else:
        raise InvalidInput(f"unknown evaluator {kind!r}")
    if "domain" in obj:
        boxes, atoms = _domain_from_json(obj["domain"])
        model.boxes, model.atoms = boxes, atoms
        model.__post_init__()
    return model


def model_to_json(model):
    domain = []
    for b in model.boxes:
        domain.append({"box": [[_num(lo), _num(hi)] for lo, hi in b.bounds], "density": _num(b.density)})
    if model.atoms:
        domain.append({"atoms": [{"t": [_num(v) for v in a.t],
                                  "mass": str(a.mass) if isinstance(a.mass, Fraction) else _num(a.mass)}
                                 for a in model.atoms]})
    params = dict(model.params)
    if model.name == "atomic":
        params = frame_to_json(params.pop("frame"))
    return {"domain": domain, "evaluator": model.name, "params": params}


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return _num(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, complex):
        return [_num(o.real), _num(o.imag)]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, default=_default, sort_keys=True, indent=1, allow_nan=False)


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc


def write_text(path, text):
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
