"""Versioned instance files (schema ``mpmiqp-instance/1``).

Four kinds are supported:

* ``calcium``        generator parameters plus the realized trace;
* ``hev``            generator parameters plus the realized matrices;
* ``raw-projected``  a projected problem: n, d, the sequences (``u``/``v``
                     for d = 1, nested row-major ``U``/``V`` otherwise),
                     linear term ``a``, fixed costs ``c``, ``constant``;
* ``raw-multiperiod`` the unprojected data P, A, r, f, b, c.

Files are canonical JSON (see :mod:`mpmiqp.jsonutil`): writing the same
object twice gives identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .casestudies import CalciumInstance, HevInstance, calcium_projected, hev_projected
from .factorizable import BlockFactorizableSpec, FactorizableSpec
from .jsonutil import canonical_json_bytes
from .projection import (
    MultiPeriodProblem,
    ProjectedMIQP,
    project_block,
    project_scalar,
)

__all__ = [
    "INSTANCE_SCHEMA",
    "instance_to_dict",
    "instance_from_dict",
    "write_instance",
    "read_instance",
    "projected_from_instance",
]

INSTANCE_SCHEMA = "mpmiqp-instance/1"


def _listify(arr: np.ndarray):
    return np.asarray(arr, dtype=float).tolist()


def instance_to_dict(obj) -> dict:
    if isinstance(obj, CalciumInstance):
        return {
            "version": INSTANCE_SCHEMA,
            "kind": "calcium",
            "params": {"n": obj.n, "alpha": obj.alpha, "sigma": obj.sigma,
                       "mu": obj.mu, "lambda": obj.lam, "beta0": obj.beta0,
                       "seed": obj.seed},
            "observations": _listify(obj.r),
            "trueSpikes": _listify(obj.true_spikes),
        }
    if isinstance(obj, HevInstance):
        return {
            "version": INSTANCE_SCHEMA,
            "kind": "hev",
            "params": {"n": obj.n, "lambda": obj.lam, "seed": obj.seed,
                       "stateDim": obj.state_dim, "controlDim": obj.control_dim},
            "stateCost": _listify(obj.P),
            "controlCost": _listify(obj.R),
            "targets": _listify(obj.r),
            "initialState": _listify(obj.b0),
            "dynamics": _listify(obj.A),
            "controlGain": _listify(obj.G),
            "controlOffset": _listify(obj.k),
            "stateBounds": {"lower": _listify(obj.s_lo), "upper": _listify(obj.s_hi)},
            "controlBounds": {"lower": _listify(obj.y_lo), "upper": _listify(obj.y_hi)},
        }
    if isinstance(obj, ProjectedMIQP):
        out = {
            "version": INSTANCE_SCHEMA,
            "kind": "raw-projected",
            "n": obj.n,
            "d": obj.d,
            "a": _listify(obj.a),
            "c": _listify(obj.c),
            "constant": obj.constant,
        }
        spec = obj.spec
        if isinstance(spec, FactorizableSpec):
            if spec.is_log_scaled:
                out.update(signU=_listify(spec.sign_u), logU=_listify(spec.log_u),
                           signV=_listify(spec.sign_v), logV=_listify(spec.log_v))
            else:
                out.update(u=_listify(spec.u), v=_listify(spec.v))
        else:
            out.update(U=_listify(spec.U), V=_listify(spec.V))
        return out
    if isinstance(obj, MultiPeriodProblem):
        return {
            "version": INSTANCE_SCHEMA,
            "kind": "raw-multiperiod",
            "n": obj.n,
            "d": obj.d,
            "P": _listify(obj.P),
            "A": _listify(obj.A),
            "r": _listify(obj.r),
            "f": _listify(obj.f),
            "b": _listify(obj.b),
            "c": _listify(obj.c),
        }
    raise TypeError(f"cannot serialize {type(obj).__name__} as an instance")


def instance_from_dict(data: dict):
    if data.get("version") != INSTANCE_SCHEMA:
        raise ValueError(f"unsupported instance schema {data.get('version')!r}")
    kind = data.get("kind")
    if kind == "calcium":
        p = data["params"]
        return CalciumInstance(
            n=int(p["n"]), alpha=float(p["alpha"]), sigma=float(p["sigma"]),
            mu=float(p["mu"]), lam=float(p["lambda"]), beta0=float(p["beta0"]),
            seed=int(p["seed"]),
            r=np.array(data["observations"], dtype=float),
            true_spikes=np.array(data["trueSpikes"], dtype=float))
    if kind == "hev":
        p = data["params"]
        return HevInstance(
            n=int(p["n"]), lam=float(p["lambda"]), seed=int(p["seed"]),
            P=np.array(data["stateCost"], dtype=float),
            R=np.array(data["controlCost"], dtype=float),
            r=np.array(data["targets"], dtype=float),
            b0=np.array(data["initialState"], dtype=float),
            A=np.array(data["dynamics"], dtype=float),
            G=np.array(data["controlGain"], dtype=float),
            k=np.array(data["controlOffset"], dtype=float),
            s_lo=np.array(data["stateBounds"]["lower"], dtype=float),
            s_hi=np.array(data["stateBounds"]["upper"], dtype=float),
            y_lo=np.array(data["controlBounds"]["lower"], dtype=float),
            y_hi=np.array(data["controlBounds"]["upper"], dtype=float))
    if kind == "raw-projected":
        if "U" in data:
            spec = BlockFactorizableSpec(np.array(data["U"], dtype=float),
                                         np.array(data["V"], dtype=float))
        elif "u" in data:
            spec = FactorizableSpec(np.array(data["u"], dtype=float),
                                    np.array(data["v"], dtype=float))
        else:
            spec = FactorizableSpec.from_signed_logs(
                np.array(data["signU"], dtype=float), np.array(data["logU"], dtype=float),
                np.array(data["signV"], dtype=float), np.array(data["logV"], dtype=float))
        return ProjectedMIQP(spec=spec, a=np.array(data["a"], dtype=float),
                             c=np.array(data["c"], dtype=float),
                             constant=float(data["constant"]))
    if kind == "raw-multiperiod":
        return MultiPeriodProblem(
            P=np.array(data["P"], dtype=float), A=np.array(data["A"], dtype=float),
            r=np.array(data["r"], dtype=float), f=np.array(data["f"], dtype=float),
            b=np.array(data["b"], dtype=float), c=np.array(data["c"], dtype=float))
    raise ValueError(f"unknown instance kind {kind!r}")


def write_instance(obj, destination) -> int:
    payload = canonical_json_bytes(instance_to_dict(obj))
    with open(destination, "wb") as fh:
        fh.write(payload)
    return len(payload)


def read_instance(source):
    with open(source, "rb") as fh:
        return instance_from_dict(json.loads(fh.read().decode("utf-8")))


def projected_from_instance(obj) -> ProjectedMIQP:
    """Projected problem for any instance kind (path-following instances
    drop their control side here; use hev_projected for the full pair)."""
    if isinstance(obj, ProjectedMIQP):
        return obj
    if isinstance(obj, CalciumInstance):
        return calcium_projected(obj)
    if isinstance(obj, HevInstance):
        return hev_projected(obj)[0]
    if isinstance(obj, MultiPeriodProblem):
        return project_scalar(obj) if obj.d == 1 else project_block(obj)
    raise TypeError(f"cannot project {type(obj).__name__}")
