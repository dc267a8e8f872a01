"""Monte-Carlo simulation of a chain of coding agents.

Each trial draws a uniform i.i.d. source and pushes it through the hops.  A
hop applies its agent (encode: symbol -> word, decode: word -> nearest
codeword's symbol), adds substitution noise, then detects and repairs errors
against the clean reference stream.  Errors that survive a hop are carried
into the next one by the agent itself.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .alphabet_codec import Alphabet, TransformMatrix, decode_exact
from .energy_model import EnergyParams
from .errors import (
    AmbiguousCode,
    ConfigMismatch,
    DegenerateAlphabet,
    DimensionMismatch,
    NoOneHotSolution,
)
from .noise_channel import (
    STAGE_DETECT,
    STAGE_NOISE,
    STAGE_SOURCE,
    CorrectionSideInfo,
    EfficacyFamily,
    NoiseSpec,
    apply_noise,
    detect,
    repair,
    rng_for,
)

_DECODE_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class AgentSpec:
    transform: TransformMatrix
    mode: str = "encode"

    def __post_init__(self):
        if self.mode not in ("encode", "decode"):
            raise ValueError(f"agent mode must be 'encode' or 'decode', not {self.mode!r}")

    @property
    def in_alphabet(self) -> Alphabet:
        t = self.transform
        return t.in_alphabet if self.mode == "encode" else t.out_alphabet

    @property
    def out_alphabet(self) -> Alphabet:
        t = self.transform
        return t.out_alphabet if self.mode == "encode" else t.in_alphabet

    @property
    def role(self) -> str:
        if self.transform.nu == 1:
            return "one-to-one"
        return "distributor" if self.mode == "encode" else "aggregator"

    def output_length(self, n: int) -> int:
        nu = self.transform.nu
        if self.mode == "encode":
            return n * nu
        if n % nu:
            raise DimensionMismatch(f"stream of {n} symbols cannot be split into words of {nu}")
        return n // nu

    def apply(self, msg: np.ndarray) -> tuple[np.ndarray, int]:
        """Transform a stream; returns it with the number of tied nearest-codeword decodes."""
        words = np.asarray(self.transform.words, dtype=np.int64)
        if self.mode == "encode":
            return words[msg].reshape(-1), 0
        nu = self.transform.nu
        blocks = msg.reshape(-1, nu)
        out = np.empty(blocks.shape[0], dtype=np.int64)
        ties = 0
        step = max(1, _DECODE_CHUNK_CELLS // (words.size or 1))
        for s in range(0, blocks.shape[0], step):
            b = blocks[s : s + step]
            dist = (b[:, None, :] != words[None, :, :]).sum(axis=2)
            best = dist.min(axis=1)
            # argmin takes the lowest index on ties; the tie count is reported
            out[s : s + step] = dist.argmin(axis=1)
            ties += int(((dist == best[:, None]).sum(axis=1) > 1).sum())
        return out, ties


@dataclass(frozen=True)
class HopSpec:
    """One level of the chain.

    ``efficacy=None`` means the level repairs every error it sees, which is
    how the final level behaves in the two-level energy model.
    """

    agent: AgentSpec
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(0.0))
    K: float = 0.0
    L: float = 0.0
    efficacy: EfficacyFamily | None = None

    def z(self) -> float:
        return 1.0 if self.efficacy is None else float(self.efficacy(self.K))


@dataclass(frozen=True)
class PipelineSpec:
    hops: tuple[HopSpec, ...]
    source_length: int
    seed: int
    trials: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hops", tuple(self.hops))
        if not self.hops:
            raise DimensionMismatch("a pipeline needs at least one hop")
        if self.source_length < 1 or self.trials < 1:
            raise ValueError("source_length and trials must be at least 1")
        n = self.source_length
        for i, hop in enumerate(self.hops):
            if i and hop.agent.in_alphabet != self.hops[i - 1].agent.out_alphabet:
                raise DimensionMismatch(
                    f"hop {i + 1} reads {hop.agent.in_alphabet.symbols} "
                    f"but hop {i} emits {self.hops[i - 1].agent.out_alphabet.symbols}"
                )
            if hop.noise.f > 0 and hop.agent.out_alphabet.size < 2:
                raise DegenerateAlphabet(f"hop {i + 1} adds noise to a one-letter alphabet")
            n = hop.agent.output_length(n)

    @property
    def source_alphabet(self) -> Alphabet:
        return self.hops[0].agent.in_alphabet

    def lengths(self) -> list[int]:
        out, n = [], self.source_length
        for hop in self.hops:
            n = hop.agent.output_length(n)
            out.append(n)
        return out


TRIAL_COLUMNS = (
    "trial",
    "level",
    "bits",
    "detected",
    "repaired",
    "residual",
    "energy_detect",
    "energy_repair",
)


@dataclass
class LevelSummary:
    level: int
    role: str
    symbols: int
    bits: float
    K: float
    L: float
    z: float
    complete: bool
    noise: float
    errors: float
    detected: float
    repaired: float
    ambiguous_decodes: float
    residual: float
    residual_std: float
    energy_detect: float
    energy_repair: float

    @property
    def energy(self) -> float:
        return self.energy_detect + self.energy_repair

    @property
    def detected_fraction(self) -> float:
        return self.detected / self.symbols

    @property
    def repaired_fraction(self) -> float:
        return self.repaired / self.symbols


@dataclass
class SimReport:
    levels: list[LevelSummary]
    trial_rows: list[dict]
    accuracy: float
    trials: int
    model: dict | None = None

    @property
    def total_energy(self) -> float:
        return sum(lv.energy for lv in self.levels)

    def to_dict(self) -> dict:
        levels = []
        for lv in self.levels:
            d = asdict(lv)
            d.update(
                energy=lv.energy,
                detected_fraction=lv.detected_fraction,
                repaired_fraction=lv.repaired_fraction,
            )
            levels.append(d)
        out = {
            "levels": levels,
            "summary": {
                "trials": self.trials,
                "accuracy": self.accuracy,
                "total_energy": self.total_energy,
            },
        }
        if self.model is not None:
            out["model"] = self.model
        return out

    def csv_rows(self) -> list[tuple]:
        return [tuple(r[c] for c in TRIAL_COLUMNS) for r in self.trial_rows]


def _run_trial(spec: PipelineSpec, t: int):
    rng = rng_for(spec.seed, t, 0, STAGE_SOURCE)
    ref = rng.integers(0, spec.source_alphabet.size, size=spec.source_length)
    msg = ref.copy()
    rows = []
    for lvl, hop in enumerate(spec.hops, start=1):
        n_out = hop.agent.out_alphabet.size
        ref, _ = hop.agent.apply(ref)
        msg, ties = hop.agent.apply(msg)
        noisy, _ = apply_noise(msg, n_out, hop.noise, rng_for(spec.seed, t, lvl, STAGE_NOISE))
        truth = CorrectionSideInfo(noisy != ref, ref)
        found = detect(noisy, truth, hop.z(), rng_for(spec.seed, t, lvl, STAGE_DETECT))
        msg, repaired = repair(noisy, found, truth)
        bits = msg.size * math.log2(n_out) if n_out > 1 else 0.0
        rows.append(
            {
                "trial": t,
                "level": lvl,
                "bits": bits,
                "errors": int(truth.mask.sum()),
                "detected": int(found.size),
                "repaired": repaired,
                "ambiguous_decodes": ties,
                "residual": float(np.mean(msg != ref)),
                "energy_detect": hop.K * bits,
                "energy_repair": hop.L * repaired,
            }
        )
    accuracy = float(np.mean(msg == ref))
    return rows, accuracy


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MLEC_THREADS", "1")))
    except ValueError:
        return 1


def run_pipeline(spec: PipelineSpec) -> SimReport:
    """Run every trial and average per level (merge in trial order)."""
    workers = min(_threads(), spec.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _run_trial(spec, t), range(spec.trials)))
    else:
        results = [_run_trial(spec, t) for t in range(spec.trials)]

    rows = [r for trial_rows, _ in results for r in trial_rows]
    lengths = spec.lengths()
    levels = []
    for lvl, hop in enumerate(spec.hops, start=1):
        mine = [r for r in rows if r["level"] == lvl]
        col = lambda k: np.array([r[k] for r in mine], dtype=float)  # noqa: E731
        residual = col("residual")
        levels.append(
            LevelSummary(
                level=lvl,
                role=hop.agent.role,
                symbols=lengths[lvl - 1],
                bits=float(mine[0]["bits"]),
                K=hop.K,
                L=hop.L,
                z=hop.z(),
                complete=hop.efficacy is None,
                noise=hop.noise.f,
                errors=float(col("errors").mean()),
                detected=float(col("detected").mean()),
                repaired=float(col("repaired").mean()),
                ambiguous_decodes=float(col("ambiguous_decodes").mean()),
                residual=float(residual.mean()),
                residual_std=float(residual.std()),
                energy_detect=float(col("energy_detect").mean()),
                energy_repair=float(col("energy_repair").mean()),
            )
        )
    accuracy = float(np.mean([acc for _, acc in results]))
    return SimReport(levels, rows, accuracy, spec.trials)


def _close(a: float, b: float, rel: float = 1e-9) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def compare_with_model(report: SimReport, p: EnergyParams, energy_tol: float = 0.01, sigmas: float = 3.0) -> dict:
    """Check a two-level simulation against the analytic two-level energy.

    The structural parameters (repair costs, K_S = b_S + k_S(K_R), efficacy
    at R, the bit ratio alpha, a complete final level) must agree or
    :class:`ConfigMismatch` is raised.  The noise rate is not checked; a
    wrong ``f`` shows up as a flagged deviation.  Predictions count repairs
    per symbol, so they equal ``energy_two_level`` times the R bit count when
    both levels are binary.
    """
    if len(report.levels) != 2:
        raise ConfigMismatch(f"model has two levels, report has {len(report.levels)}")
    R, S = report.levels
    if not S.complete:
        raise ConfigMismatch("the model assumes the last level repairs every remaining error")
    if not (_close(R.L, p.L_R) and _close(S.L, p.L_S)):
        raise ConfigMismatch(f"repair costs ({R.L}, {S.L}) differ from ({p.L_R}, {p.L_S})")
    if not _close(R.z, float(p.z_family(R.K))):
        raise ConfigMismatch(f"efficacy at R is {R.z}, model gives {p.z_family(R.K)}")
    if not _close(S.K, float(p.K_S(R.K))):
        raise ConfigMismatch(f"K_S is {S.K}, model gives {p.K_S(R.K)}")
    if R.bits <= 0 or not _close(S.bits / R.bits, p.alpha):
        raise ConfigMismatch(f"bit ratio {S.bits / max(R.bits, 1e-300)} differs from alpha {p.alpha}")

    z, f, g = R.z, p.f, S.noise
    pred_residual_R = f * (1 - z)
    pred_repair = p.L_R * f * z * R.symbols + p.L_S * (pred_residual_R + g) * S.symbols
    pred_detect = R.K * R.bits + S.K * S.bits
    pred_total = pred_detect + pred_repair
    sim_repair = R.energy_repair + S.energy_repair
    sim_total = report.total_energy

    def rel(sim, pred):
        if pred == 0:
            return 0.0 if sim == 0 else math.inf
        return abs(sim - pred) / abs(pred)

    sigma = math.sqrt(pred_residual_R * (1 - pred_residual_R) / (R.symbols * report.trials))
    if sigma > 0:
        z_score = abs(R.residual - pred_residual_R) / sigma
    else:
        z_score = 0.0 if R.residual == pred_residual_R else math.inf
    energy_dev = rel(sim_total, pred_total)
    out = {
        "predicted": {
            "energy": pred_total,
            "energy_normalized": pred_total / R.bits,
            "energy_repair": pred_repair,
            "residual_R": pred_residual_R,
            "residual_S": 0.0,
        },
        "simulated": {
            "energy": sim_total,
            "energy_normalized": sim_total / R.bits,
            "energy_repair": sim_repair,
            "residual_R": R.residual,
            "residual_S": S.residual,
        },
        "deviation": {
            "energy_rel": energy_dev,
            "energy_repair_rel": rel(sim_repair, pred_repair),
            "residual_R_sigmas": z_score,
            "residual_S": S.residual,
        },
    }
    out["flagged"] = bool(energy_dev > energy_tol or z_score > sigmas or S.residual > 0)
    return out


@dataclass
class MismatchReport:
    exact_accuracy: float
    empirical_accuracy: float
    source_length: int
    confusion: dict[str, str | None]

    def to_dict(self) -> dict:
        return asdict(self)


def mismatch_experiment(
    T_encoder: TransformMatrix, T_decoder: TransformMatrix, source_length: int, seed: int
) -> MismatchReport:
    """Encode with one codebook, decode with another; no noise.

    ``exact_accuracy`` enumerates the input alphabet (uniform source);
    ``empirical_accuracy`` is measured on a seeded random source.
    """
    if T_encoder.shape != T_decoder.shape or T_encoder.nu != T_decoder.nu:
        raise DimensionMismatch(f"encoder {T_encoder.shape} and decoder {T_decoder.shape} differ in shape")
    decoded = []
    for j in range(T_encoder.n_in):
        try:
            decoded.append(decode_exact(T_decoder, T_encoder.column(j)))
        except (NoOneHotSolution, AmbiguousCode):
            decoded.append(None)
    hits = np.array([d == j for j, d in enumerate(decoded)])
    src = rng_for(seed, 0, 0, STAGE_SOURCE).integers(0, T_encoder.n_in, size=source_length)
    labels_in = T_encoder.in_alphabet.symbols
    labels_dec = T_decoder.in_alphabet.symbols
    confusion = {labels_in[j]: (None if d is None else labels_dec[d]) for j, d in enumerate(decoded)}
    return MismatchReport(
        exact_accuracy=float(hits.mean()),
        empirical_accuracy=float(hits[src].mean()),
        source_length=source_length,
        confusion=confusion,
    )
