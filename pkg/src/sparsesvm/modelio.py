"""Plain-text model files.

Layout: one ``key value...`` entry per line, ``#`` comments allowed::

    format sparsesvm-model 1
    kind linear                 # or multiclass
    penalty elasticnet
    lambda1 0.5
    lambda2 1.0
    exact 0
    p 3
    intercept 0.25              # linear models
    beta 0.1 0.0 -2.5
    classes 1 2 3               # multiclass models
    origin l1msvm               # ova or l1msvm
    intercepts ...
    coef.1 ...                  # one row per class, in ``classes`` order
    means ...                   # optional standardization
    scales ...

Floats are written with ``repr`` so every finite value reads back bit for bit.
"""

from __future__ import annotations

import os
from typing import Union

import numpy as np

from .objective import PenaltySpec, Variant
from .svm import LinearModel, Model, MultiClassModel

MAGIC = "sparsesvm-model"
VERSION = "1"


class ModelFormatError(ValueError):
    pass


def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values, dtype=float).reshape(-1))


def _penalty_lines(spec: PenaltySpec) -> list[str]:
    lines = [f"penalty {spec.variant.value}"]
    for key, val in spec.params().items():
        lines.append(f"{key} {val if key == 'k' else repr(float(val))}")
    return lines


def dumps(model: Model) -> str:
    lines = [f"format {MAGIC} {VERSION}"]
    if isinstance(model, LinearModel):
        lines.append("kind linear")
        lines += _penalty_lines(model.penalty)
        lines.append(f"exact {int(model.exact)}")
        lines.append(f"p {model.p}")
        lines.append(f"intercept {repr(float(model.beta0))}")
        lines.append(f"beta {_floats(model.beta)}")
    elif isinstance(model, MultiClassModel):
        lines.append("kind multiclass")
        lines.append(f"origin {model.origin}")
        lines += _penalty_lines(model.penalty)
        lines.append(f"exact {int(model.exact)}")
        lines.append(f"p {model.p}")
        lines.append("classes " + " ".join(str(int(c)) for c in model.classes))
        lines.append(f"intercepts {_floats(model.intercepts)}")
        for c, row in zip(model.classes, model.coefs):
            lines.append(f"coef.{int(c)} {_floats(row)}")
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    if model.means is not None:
        lines.append(f"means {_floats(model.means)}")
        lines.append(f"scales {_floats(model.scales)}")
    return "\n".join(lines) + "\n"


def _parse(text: str) -> dict[str, list[str]]:
    entries: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key in entries:
            raise ModelFormatError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = rest
    return entries


def _vector(entries, key: str, size: int) -> np.ndarray:
    if key not in entries:
        raise ModelFormatError(f"missing key {key!r}")
    try:
        v = np.array([float(s) for s in entries[key]])
    except ValueError as exc:
        raise ModelFormatError(f"{key}: {exc}") from None
    if v.size != size:
        raise ModelFormatError(f"{key}: expected {size} values, found {v.size}")
    if not np.all(np.isfinite(v)):
        raise ModelFormatError(f"{key}: non-finite value")
    return v


def _scalar(entries, key: str) -> str:
    if key not in entries or len(entries[key]) != 1:
        raise ModelFormatError(f"expected exactly one value for {key!r}")
    return entries[key][0]


def _penalty(entries) -> PenaltySpec:
    variant = Variant(_scalar(entries, "penalty"))
    if variant is Variant.ELASTIC_NET:
        return PenaltySpec.elastic_net(float(_scalar(entries, "lambda1")), float(_scalar(entries, "lambda2")))
    if variant is Variant.KSUPPORT:
        return PenaltySpec.ksupport(float(_scalar(entries, "lambda")), int(_scalar(entries, "k")))
    return PenaltySpec(variant, lam=float(_scalar(entries, "lambda")))


def loads(text: str) -> Model:
    entries = _parse(text)
    if entries.get("format") != [MAGIC, VERSION]:
        raise ModelFormatError("not a sparsesvm model file (bad format line)")
    try:
        penalty = _penalty(entries)
        p = int(_scalar(entries, "p"))
        exact = bool(int(_scalar(entries, "exact")))
        kind = _scalar(entries, "kind")
    except (ValueError, KeyError) as exc:
        raise ModelFormatError(str(exc)) from None
    means = scales = None
    if "means" in entries:
        means, scales = _vector(entries, "means", p), _vector(entries, "scales", p)

    if kind == "linear":
        beta0 = float(_scalar(entries, "intercept"))
        return LinearModel(beta0, _vector(entries, "beta", p), penalty, exact=exact, means=means, scales=scales)
    if kind != "multiclass":
        raise ModelFormatError(f"unknown model kind {kind!r}")
    classes = np.array([int(c) for c in entries.get("classes", [])], dtype=np.int64)
    if classes.size < 2:
        raise ModelFormatError("multiclass model needs at least two classes")
    intercepts = _vector(entries, "intercepts", classes.size)
    coefs = np.vstack([_vector(entries, f"coef.{int(c)}", p) for c in classes])
    origin = _scalar(entries, "origin")
    binary = ()
    if origin == "ova":
        binary = tuple(LinearModel(float(b), w.copy(), penalty, exact=exact) for b, w in zip(intercepts, coefs))
    return MultiClassModel(intercepts, coefs, origin, penalty, classes, binary_models=binary,
                           exact=exact, means=means, scales=scales)


def save_model(model: Model, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def load_model(path: Union[str, os.PathLike]) -> Model:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
