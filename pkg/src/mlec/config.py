"""Experiment configuration: TOML (or JSON) in, validated domain objects out.

Validation errors name the offending key path, e.g.
``simulate.hops[1].efficacy.z_max``.
"""

from __future__ import annotations

import copy
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .alphabet_codec import Alphabet, DecodeObjective, TransformMatrix, build_transform
from .code_geometry import DEFAULT_ENUMERATION_CAP, CodeSpace
from .continuous_info import ConstantDensity, DensityField, GaussianDensity, Trajectory
from .energy_model import EnergyParams, KsDependency, LevelSpec
from .errors import ParseError, ValidationError
from .noise_channel import EfficacyFamily, NoiseSpec
from .pipeline_sim import AgentSpec, HopSpec, PipelineSpec

KINDS = ("design", "census", "simulate", "optimize", "continuous", "mismatch")
STOCHASTIC = ("simulate", "mismatch")
_MISSING = object()


@dataclass
class ExperimentConfig:
    kind: str
    seed: int | None
    data: dict

    def echo(self) -> dict:
        return copy.deepcopy(self.data)


def _get(d: dict, key: str, path: str, typ=None, default=_MISSING):
    full = f"{path}.{key}" if path else key
    if not isinstance(d, dict):
        raise ValidationError(path or "<root>", "expected a table")
    if key not in d:
        if default is _MISSING:
            raise ValidationError(full, "required key is missing")
        return default
    v = d[key]
    if typ is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(full, f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise ValidationError(full, "must be finite")
    elif typ is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValidationError(full, f"expected an integer, got {v!r}")
    elif typ is not None and not isinstance(v, typ):
        raise ValidationError(full, f"expected {getattr(typ, '__name__', typ)}, got {v!r}")
    return v


def _guard(path: str, fn, *args, **kw):
    """Run a constructor; turn argument complaints into a ValidationError at ``path``.

    Domain errors (unknown symbol, dimension mismatch, ...) pass through.
    """
    try:
        return fn(*args, **kw)
    except (ValueError, TypeError) as exc:
        raise ValidationError(path, str(exc)) from None


def parse_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_config(path: str | Path, seed: int | None = None, trials: int | None = None) -> ExperimentConfig:
    """Parse and validate; ``seed`` / ``trials`` override the file."""
    return config_from_dict(parse_file(path), seed=seed, trials=trials)


def config_from_dict(raw: dict, seed: int | None = None, trials: int | None = None) -> ExperimentConfig:
    data = copy.deepcopy(raw)
    kind = _get(data, "kind", "", str)
    if kind not in KINDS:
        raise ValidationError("kind", f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
    if seed is not None:
        data["seed"] = int(seed)
    if trials is not None:
        if kind != "simulate":
            raise ValidationError("trials", "only simulate experiments take a trial count")
        data.setdefault("simulate", {})["trials"] = int(trials)
    if kind in STOCHASTIC:
        s = _get(data, "seed", "", int)
        if s < 0:
            raise ValidationError("seed", "must be nonnegative")
    elif "seed" in data:
        _get(data, "seed", "", int)
    _get(data, kind, "", dict)
    cfg = ExperimentConfig(kind, data.get("seed"), data)
    build(cfg)  # validates every block
    return cfg


# ---------------------------------------------------------------- builders


def build_alphabets(data: dict) -> dict[str, Alphabet]:
    table = _get(data, "alphabets", "", dict, {})
    out = {}
    for name, symbols in table.items():
        path = f"alphabets.{name}"
        if not isinstance(symbols, list) or not symbols:
            raise ValidationError(path, "expected a non-empty list of symbols")
        out[name] = _guard(path, Alphabet, tuple(str(s) for s in symbols))
    return out


def build_codes(data: dict) -> dict[str, TransformMatrix]:
    alphabets = build_alphabets(data)
    table = _get(data, "codes", "", dict, {})
    out = {}
    for name, spec in table.items():
        path = f"codes.{name}"
        src = _get(spec, "input", path, str)
        dst = _get(spec, "output", path, str)
        for key, ref in (("input", src), ("output", dst)):
            if ref not in alphabets:
                raise ValidationError(f"{path}.{key}", f"alphabet {ref!r} is not defined")
        nu = _get(spec, "nu", path, int)
        if nu < 1:
            raise ValidationError(f"{path}.nu", "must be at least 1")
        words = _get(spec, "words", path, list)
        out[name] = _guard(f"{path}.words", build_transform, alphabets[src], alphabets[dst], nu, words)
    return out


def _code(codes: dict, name: Any, path: str) -> TransformMatrix:
    if name not in codes:
        raise ValidationError(path, f"code {name!r} is not defined")
    return codes[name]


def build_efficacy(d: dict | None, path: str) -> EfficacyFamily | None:
    if d is None:
        return None
    return _guard(
        path,
        EfficacyFamily,
        kind=_get(d, "kind", path, str, "inverse_exponential"),
        z_max=_get(d, "z_max", path, float, 0.95),
        scale=_get(d, "scale", path, float, 1.0),
    )


def build_ks(d: dict | None, path: str) -> KsDependency:
    if d is None:
        return KsDependency()
    return _guard(
        path,
        KsDependency,
        kind=_get(d, "kind", path, str, "independent"),
        k0=_get(d, "k0", path, float, 0.0),
        scale=_get(d, "scale", path, float, 1.0),
    )


def build_energy_params(d: dict, path: str) -> EnergyParams:
    """``alpha`` may be given directly or as the bit counts ``I_QR`` / ``I_RS``; if both, they must agree."""
    I_QR = _get(d, "I_QR", path, float, None)
    I_RS = _get(d, "I_RS", path, float, None)
    alpha = _get(d, "alpha", path, float, None)
    if I_QR is None and I_RS is None:
        if alpha is None:
            raise ValidationError(f"{path}.alpha", "give alpha or I_QR and I_RS")
        I_QR, I_RS = 1.0, alpha
    elif I_QR is None or I_RS is None:
        raise ValidationError(f"{path}.I_QR", "I_QR and I_RS must be given together")
    p = _guard(
        path,
        EnergyParams,
        f=_get(d, "f", path, float),
        L_R=_get(d, "L_R", path, float),
        L_S=_get(d, "L_S", path, float),
        I_QR=I_QR,
        I_RS=I_RS,
        z_family=build_efficacy(_get(d, "efficacy", path, dict, {}), f"{path}.efficacy"),
        ks_model=build_ks(_get(d, "ks", path, dict, None), f"{path}.ks"),
        b_S=_get(d, "b_S", path, float, 0.0),
    )
    if alpha is not None and not math.isclose(alpha, p.alpha, rel_tol=1e-12):
        raise ValidationError(f"{path}.alpha", f"alpha={alpha} but I_RS/I_QR={p.alpha}")
    return p


def build_levels(items: list, path: str) -> list[LevelSpec]:
    levels = []
    for i, lv in enumerate(items):
        lp = f"{path}[{i}]"
        levels.append(
            _guard(
                lp,
                LevelSpec,
                L=_get(lv, "L", lp, float),
                I=_get(lv, "I", lp, float),
                z_family=build_efficacy(_get(lv, "efficacy", lp, dict, None), f"{lp}.efficacy"),
                ks=build_ks(_get(lv, "ks", lp, dict, None), f"{lp}.ks"),
                b=_get(lv, "b", lp, float, 0.0),
            )
        )
    if len(levels) < 2:
        raise ValidationError(path, "need at least two levels")
    for i, lv in enumerate(levels[:-1]):
        if lv.z_family is None:
            raise ValidationError(f"{path}[{i}].efficacy", "every level but the last needs an efficacy family")
    return levels


def build_optimize(data: dict) -> dict:
    d = data["optimize"]
    K_max = _get(d, "K_max", "optimize", float)
    if not K_max > 0:
        raise ValidationError("optimize.K_max", "must be positive")
    noise_g = _get(d, "noise_g", "optimize", float, 0.0)
    if not 0 <= noise_g < 1:
        raise ValidationError("optimize.noise_g", "must lie in [0, 1)")
    points = _get(d, "curve_points", "optimize", int, 101)
    if points < 2:
        raise ValidationError("optimize.curve_points", "need at least two points")
    out = {"K_max": K_max, "noise_g": noise_g, "curve_points": points}
    if "levels" in d:
        out["levels"] = build_levels(_get(d, "levels", "optimize", list), "optimize.levels")
        f = _get(d, "f", "optimize", float)
        if not 0 <= f < 1:
            raise ValidationError("optimize.f", "must lie in [0, 1)")
        out["f"] = f
    else:
        out["params"] = build_energy_params(d, "optimize")
    return out


def build_census(data: dict) -> dict:
    d = data["census"]
    n = _get(d, "n", "census", int)
    nu = _get(d, "nu", "census", int)
    valid = _get(d, "valid", "census", list)
    space = _guard("census.valid", CodeSpace, n, nu, tuple(tuple(p) for p in valid))
    cap = _get(d, "cap", "census", int, DEFAULT_ENUMERATION_CAP)
    H = _get(d, "entropy_bits", "census", float, math.log2(len(space.valid_points)))
    return {"space": space, "cap": cap, "entropy_bits": H}


def build_design(data: dict) -> dict:
    codes = build_codes(data)
    d = data["design"]
    names = _get(d, "codes", "design", list, list(codes))
    chosen = {n: _code(codes, n, "design.codes") for n in names}
    requests = []
    for i, req in enumerate(_get(d, "decode", "design", list, [])):
        p = f"design.decode[{i}]"
        T = _code(codes, _get(req, "code", p, str), f"{p}.code")
        vec = _get(req, "vector", p, list)
        method = _get(req, "method", p, str, "exact")
        if method not in ("exact", "lp"):
            raise ValidationError(f"{p}.method", "expected 'exact' or 'lp'")
        if len(vec) != T.shape[0]:
            raise ValidationError(f"{p}.vector", f"expected {T.shape[0]} entries")
        obj = _get(req, "objective", p, list, None)
        if obj is not None:
            obj = _guard(f"{p}.objective", DecodeObjective, obj)
        requests.append({"code": req["code"], "vector": [float(v) for v in vec], "method": method, "objective": obj})
    return {"codes": chosen, "decode": requests}


def build_simulate(data: dict) -> dict:
    codes = build_codes(data)
    d = data["simulate"]
    hops = []
    for i, h in enumerate(_get(d, "hops", "simulate", list)):
        p = f"simulate.hops[{i}]"
        T = _code(codes, _get(h, "code", p, str), f"{p}.code")
        agent = _guard(f"{p}.mode", AgentSpec, T, _get(h, "mode", p, str, "encode"))
        hops.append(
            HopSpec(
                agent=agent,
                noise=_guard(f"{p}.noise", NoiseSpec, _get(h, "noise", p, float, 0.0)),
                K=_get(h, "K", p, float, 0.0),
                L=_get(h, "L", p, float, 0.0),
                efficacy=build_efficacy(_get(h, "efficacy", p, dict, None), f"{p}.efficacy"),
            )
        )
        if hops[-1].K < 0 or hops[-1].L < 0:
            raise ValidationError(p, "K and L must be nonnegative")
    spec = _guard(
        "simulate",
        PipelineSpec,
        tuple(hops),
        source_length=_get(d, "source_length", "simulate", int),
        seed=data["seed"],
        trials=_get(d, "trials", "simulate", int, 1),
    )
    model = None
    if "model" in d:
        model = build_energy_params(_get(d, "model", "simulate", dict), "simulate.model")
    return {"spec": spec, "model": model}


def _density(d: dict, path: str) -> DensityField:
    kind = _get(d, "kind", path, str)
    if kind == "constant":
        return _guard(path, ConstantDensity, _get(d, "value", path, float))
    if kind == "gaussian":
        return _guard(
            path,
            GaussianDensity,
            mean=_get(d, "mean", path, list),
            std=_get(d, "std", path, list),
            drift=_get(d, "drift", path, list, None),
        )
    raise ValidationError(f"{path}.kind", f"unknown density kind {kind!r}")


def _path(d: dict, times, path: str) -> Trajectory:
    kind = _get(d, "kind", path, str)
    if kind == "linear":
        return _guard(path, Trajectory.linear, times, _get(d, "start", path, list), _get(d, "velocity", path, list))
    if kind == "sine":
        return _guard(
            path,
            Trajectory.sine,
            times,
            _get(d, "offset", path, list),
            _get(d, "amplitude", path, list),
            _get(d, "frequency", path, list),
            _get(d, "phase", path, list, [0.0]),
        )
    raise ValidationError(f"{path}.kind", f"unknown path kind {kind!r}")


def build_continuous(data: dict) -> dict:
    d = data["continuous"]
    t0 = _get(d, "t0", "continuous", float, 0.0)
    t1 = _get(d, "t1", "continuous", float, 1.0)
    step = _get(d, "step", "continuous", float, 1e-3)
    if not (t1 > t0 and step > 0):
        raise ValidationError("continuous.step", "need t1 > t0 and a positive step")
    times = Trajectory.grid(t0, t1, step)
    inputs = []
    for i, item in enumerate(_get(d, "inputs", "continuous", list)):
        p = f"continuous.inputs[{i}]"
        name = _get(item, "name", p, str, f"q{i + 1}")
        dens = _density(_get(item, "density", p, dict), f"{p}.density")
        traj = _path(_get(item, "path", p, dict), times, f"{p}.path")
        inputs.append((name, dens, traj))
    if not inputs:
        raise ValidationError("continuous.inputs", "need at least one input")
    return {"inputs": inputs, "times": times}


def build_mismatch(data: dict) -> dict:
    codes = build_codes(data)
    d = data["mismatch"]
    enc = _code(codes, _get(d, "encoder", "mismatch", str), "mismatch.encoder")
    dec = _code(codes, _get(d, "decoder", "mismatch", str), "mismatch.decoder")
    M = _get(d, "source_length", "mismatch", int, 1000)
    if M < 1:
        raise ValidationError("mismatch.source_length", "must be at least 1")
    return {"encoder": enc, "decoder": dec, "source_length": M}


BUILDERS = {
    "design": build_design,
    "census": build_census,
    "simulate": build_simulate,
    "optimize": build_optimize,
    "continuous": build_continuous,
    "mismatch": build_mismatch,
}


def build(cfg: ExperimentConfig) -> dict:
    return BUILDERS[cfg.kind](cfg.data)
