"""JSON-facing converters for the spec dataclasses.

Configs are plain JSON objects; every CLI output embeds the exact dict
it was run with (plus the master seed) in a sidecar so runs can be
reproduced byte for byte.
"""

from __future__ import annotations

from typing import Any

from .errors import ValidationError
from .forecaster import (
    Identity,
    SamplingStrategy,
    SymmetricTruncate,
    Temperature,
    TopKMedian,
)
from .process import NoiseSpec, TrendSpec
from .vocab import DEFAULT_SPAN, DEFAULT_VOCAB_SIZE, Vocabulary


def trend_to_dict(t: TrendSpec) -> dict:
    out: dict[str, Any] = {"kind": t.kind}
    if t.kind == "constant":
        out["offset"] = t.offset
    elif t.kind == "linear":
        out.update(offset=t.offset, slope=t.slope)
    elif t.kind == "sine":
        out.update(offset=t.offset, amplitude=t.amplitude, period=t.period, phase=t.phase)
    elif t.kind == "sum_of_sines":
        out.update(offset=t.offset, components=[list(c) for c in t.components])
    else:
        out["points"] = [list(p) for p in t.points]
    if t.bound is not None:
        out["bound"] = t.bound
    return out


def trend_from_dict(obj: dict) -> TrendSpec:
    if "kind" not in obj:
        raise ValidationError("trend config is missing 'kind'")
    kind = obj["kind"]
    kwargs: dict[str, Any] = {"kind": kind}
    for key in ("offset", "slope", "amplitude", "period", "phase", "bound"):
        if key in obj:
            kwargs[key] = float(obj[key])
    if "components" in obj:
        kwargs["components"] = tuple(tuple(float(x) for x in c) for c in obj["components"])
    if "points" in obj:
        kwargs["points"] = tuple(tuple(float(x) for x in p) for p in obj["points"])
    return TrendSpec(**kwargs)


def noise_to_dict(n: NoiseSpec) -> dict:
    out = {
        "family": n.family,
        "weights": list(n.weights),
        "seed_variances": list(n.seed_variances),
    }
    if n.family == "student_t":
        out["df"] = n.df
    return out


def noise_from_dict(obj: dict) -> NoiseSpec:
    for key in ("family", "weights", "seed_variances"):
        if key not in obj:
            raise ValidationError(f"noise config is missing {key!r}")
    return NoiseSpec(
        family=obj["family"],
        weights=tuple(float(w) for w in obj["weights"]),
        seed_variances=tuple(float(v) for v in obj["seed_variances"]),
        df=float(obj.get("df", 5.0)),
    )


def strategy_to_dict(s: SamplingStrategy) -> dict:
    if isinstance(s, Identity):
        return {"kind": "identity"}
    if isinstance(s, Temperature):
        return {"kind": "temperature", "t": s.t}
    if isinstance(s, SymmetricTruncate):
        return {"kind": "truncate", "a": s.a}
    if isinstance(s, TopKMedian):
        return {"kind": "top_k_median", "k": s.k}
    raise ValidationError(f"unknown strategy {s!r}")


def strategy_from_dict(obj: dict) -> SamplingStrategy:
    kind = obj.get("kind")
    if kind == "identity":
        return Identity()
    if kind == "temperature":
        return Temperature(t=float(obj["t"]))
    if kind == "truncate":
        return SymmetricTruncate(a=float(obj["a"]))
    if kind == "top_k_median":
        return TopKMedian(k=int(obj["k"]))
    raise ValidationError(f"unknown strategy kind {kind!r}")


def vocab_to_dict(v: Vocabulary) -> dict:
    return {"size": v.size, "delta": v.delta, "v_min": v.v_min}


def vocab_from_dict(obj: dict | None) -> Vocabulary:
    if obj is None:
        return Vocabulary.from_span()
    if "span" in obj:
        lo, hi = obj["span"]
        return Vocabulary.from_span(int(obj.get("size", DEFAULT_VOCAB_SIZE)), (float(lo), float(hi)))
    if "delta" in obj and "v_min" in obj:
        return Vocabulary(
            size=int(obj.get("size", DEFAULT_VOCAB_SIZE)),
            delta=float(obj["delta"]),
            v_min=float(obj["v_min"]),
        )
    return Vocabulary.from_span(int(obj.get("size", DEFAULT_VOCAB_SIZE)), DEFAULT_SPAN)
