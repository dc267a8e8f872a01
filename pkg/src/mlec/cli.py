"""``mlec <subcommand> --config <path> [--seed N] [--out DIR] [--trials N]``

Exit codes: 0 success, 1 domain error (recorded in the report's ``error``
field), 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .alphabet_codec import (
    block_rank_bound,
    decode_exact,
    decode_lp,
    encode,
    is_uniquely_decodable,
    rank,
)
from .code_geometry import census, p_valid
from .config import KINDS, ExperimentConfig, build, load_config
from .continuous_info import (
    ProductDensity,
    Trajectory,
    additivity_check,
    conditional_entropy,
    path_relative_entropy,
)
from .energy_model import energy_curve, optimize_multilevel, optimize_two_level
from .errors import ConfigError, MlecError, ValidationError
from .noise_channel import RNG_NAME
from .pipeline_sim import TRIAL_COLUMNS, compare_with_model, mismatch_experiment, run_pipeline
from .report import write_csv, write_json

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG = 0, 1, 2


def _design(built: dict) -> tuple[dict, list]:
    codes = {}
    for name, T in built["codes"].items():
        roundtrip = None
        if is_uniquely_decodable(T):
            roundtrip = all(decode_exact(T, encode(T, r)) == r for r in range(T.n_in))
        codes[name] = {
            "input": list(T.in_alphabet.symbols),
            "output": list(T.out_alphabet.symbols),
            "nu": T.nu,
            "role": T.role,
            "words": {
                T.in_alphabet.symbols[j]: T.out_alphabet.format_word(w) for j, w in enumerate(T.words)
            },
            "matrix": T.matrix.tolist(),
            "rank": rank(T),
            "block_rank_bound": block_rank_bound(T),
            "uniquely_decodable": is_uniquely_decodable(T),
            "roundtrip": roundtrip,
        }
    decodes = []
    for req in built["decode"]:
        T = built["codes"].get(req["code"])
        if T is None:
            raise ValidationError("design.decode.code", f"code {req['code']!r} is not in design.codes")
        if req["method"] == "exact":
            j = decode_exact(T, req["vector"])
            decodes.append({"code": req["code"], "method": "exact", "symbol": T.in_alphabet.symbols[j]})
        else:
            x = decode_lp(T, req["vector"], req["objective"])
            decodes.append(
                {
                    "code": req["code"],
                    "method": "lp",
                    "weights": dict(zip(T.in_alphabet.symbols, (float(v) for v in x))),
                }
            )
    return {"codes": codes, "decode": decodes}, []


def _census(built: dict) -> tuple[dict, list]:
    space = built["space"]
    rep = census(space, cap=built["cap"])
    out = rep.to_dict()
    out["p_valid"] = p_valid(built["entropy_bits"], space.n, space.nu)
    return out, []


def _optimize(built: dict) -> tuple[dict, list]:
    if "levels" in built:
        res = optimize_multilevel(built["levels"], built["K_max"], built["f"])
        return {"allocation": res.to_dict()}, []
    p = built["params"]
    res = optimize_two_level(p, built["K_max"], built["noise_g"])
    curve = energy_curve(p, built["K_max"], built["curve_points"], built["noise_g"])
    out = {"allocation": res.to_dict(), "alpha": p.alpha}
    return out, [("energy_curve.csv", ("K_R", "E_normalized", "z", "K_S"), curve)]


def _simulate(built: dict) -> tuple[dict, list]:
    rep = run_pipeline(built["spec"])
    if built["model"] is not None:
        rep.model = compare_with_model(rep, built["model"])
    out = rep.to_dict()
    out["rng"] = RNG_NAME
    return out, [("trials.csv", TRIAL_COLUMNS, rep.csv_rows())]


def _continuous(built: dict) -> tuple[dict, list]:
    names = [n for n, _, _ in built["inputs"]]
    inputs = [(d, tr) for _, d, tr in built["inputs"]]
    offsets = np.cumsum([0] + [tr.nu for _, tr in inputs])
    output = ProductDensity(tuple((d, tuple(range(o, o + tr.nu))) for (d, tr), o in zip(inputs, offsets)))
    path = Trajectory.concat(*(tr for _, tr in inputs))
    add = additivity_check(inputs, output, path)
    cond = {n: conditional_entropy(inputs, output, path, [i]) for i, n in enumerate(names)}
    self_div = path_relative_entropy(output, path, output, path)
    return {
        "continuous": {
            "inputs": names,
            "H_r": add.H_r,
            "mutual_information": dict(zip(names, add.mutual_information)),
            "sum_I": add.sum_I,
            "gap": add.gap,
            "conditional_entropy": cond,
            "self_divergence": self_div,
            "grid_points": int(path.times.size),
        }
    }, []


def _mismatch(built: dict, seed: int) -> tuple[dict, list]:
    rep = mismatch_experiment(built["encoder"], built["decoder"], built["source_length"], seed)
    return rep.to_dict(), []


def execute(cfg: ExperimentConfig) -> tuple[dict, list]:
    """Dispatch to the owning module; returns the result block and CSV tables."""
    built = build(cfg)
    if cfg.kind == "mismatch":
        return _mismatch(built, cfg.seed)
    return {
        "design": _design,
        "census": _census,
        "optimize": _optimize,
        "simulate": _simulate,
        "continuous": _continuous,
    }[cfg.kind](built)


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> tuple[int, dict]:
    """Run an experiment and write ``<kind>.json`` (plus CSV tables) into ``out_dir``."""
    report = {"kind": cfg.kind, "version": __version__, "config": cfg.echo(), "result": None, "error": None}
    tables = []
    code = EXIT_OK
    try:
        report["result"], tables = execute(cfg)
    except MlecError as exc:
        report["error"] = {"code": exc.code, "message": str(exc)}
        code = EXIT_DOMAIN
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / f"{cfg.kind}.json", report)
        for name, header, rows in tables:
            write_csv(out / name, header, rows)
    return code, report


def _summary(report: dict) -> str:
    res = report["result"]
    kind = report["kind"]
    if kind == "optimize":
        a = res["allocation"]
        return f"K = {a['K']}  E/I = {a['energy_normalized']:.6g}  ({a['status']})"
    if kind == "census":
        return f"valid={res['valid']} correctable={res['correctable']} ambiguous={res['ambiguous']} d={res['distance']}"
    if kind == "simulate":
        return f"accuracy={res['summary']['accuracy']:.6g} energy={res['summary']['total_energy']:.6g}"
    if kind == "continuous":
        c = res["continuous"]
        return f"H(r)={c['H_r']:.9g} sum I={c['sum_I']:.9g} gap={c['gap']:.3g}"
    if kind == "mismatch":
        return f"exact accuracy={res['exact_accuracy']:.6g} empirical={res['empirical_accuracy']:.6g}"
    return ", ".join(f"{n}: rank {c['rank']}" for n, c in res["codes"].items())


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mlec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mlec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=Path, default=Path("."))
        sp.add_argument("--trials", type=int)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, seed=args.seed, trials=args.trials)
        if cfg.kind != args.command:
            raise ValidationError("kind", f"config is a {cfg.kind!r} experiment, not {args.command!r}")
    except ConfigError as exc:
        print(f"mlec: config error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MlecError as exc:
        print(f"mlec: error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_DOMAIN

    code, report = run(cfg, args.out)
    if report["error"]:
        err = report["error"]
        print(f"mlec: error [{err['code']}]: {err['message']}", file=sys.stderr)
    else:
        print(_summary(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
