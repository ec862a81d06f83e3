"""Core types: agents, configuration, RNG streams, and the event log.

The event log is the single source of truth for everything downstream:
metrics are computed from logged records only, and a run can be replayed
from its log plus the manifest.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

FEATURE_DIM = 2

# Fixed column order for event CSV files. Readers rely on this exact header.
EVENT_CSV_HEADER = [
    "timestep", "agent_id", "group", "f0", "f1", "score",
    "outcome", "threshold", "rec0", "rec1", "moved_cost",
]


class ConfigError(ValueError):
    """Raised when a configuration fails validation."""


class Group(enum.Enum):
    ADVANTAGED = "a"
    DISADVANTAGED = "d"


class Outcome(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class GeneratorCase(enum.Enum):
    """Which population-geometry variant to sample.

    EQUAL_VAR_DIFF_MEANS is the main case: equal component variances, the
    lower-performing means separated by qualification_gap * sigma. The other
    two scale the disadvantaged group's spread by variance_ratio, with and
    without the mean gap.
    """

    EQUAL_VAR_DIFF_MEANS = "equal_var_diff_means"
    DIFF_VAR_EQUAL_MEANS = "diff_var_equal_means"
    DIFF_VAR_DIFF_MEANS = "diff_var_diff_means"


class SelectionRule(enum.Enum):
    TOP_K = "top_k"
    CNS = "cns"


class RetrainingRule(enum.Enum):
    NONE = "none"
    CDA = "cda"
    GRR = "grr"


class AdaptationMode(enum.Enum):
    # CAP: never move past the recommended point. OVERSHOOT: always move the
    # full drawn effort along the recommended direction.
    CAP_AT_RECOMMENDATION = "cap"
    OVERSHOOT = "overshoot"


@dataclass
class Agent:
    """One applicant. Features live in [0,1]^2; timestamps are step indices."""

    agent_id: int
    group: Group
    features: np.ndarray
    effort_mean: float
    entry_time: int
    first_negative_time: int | None = None
    exit_time: int | None = None
    cumulative_cost: float = 0.0


@dataclass(frozen=True)
class PopulationSpec:
    """Bimodal feature population for two groups.

    Every agent is high-performing with probability high_fraction, in which
    case both feature coordinates are drawn i.i.d. from
    Normal(mu_high, sigma^2) regardless of group. Lower-performing agents
    draw from their group's lower component; the advantaged lower mean is
    always derived as mu_low_disadvantaged + qualification_gap * sigma and
    never stored. Samples are clipped into [0,1].

    effort_mean_* are the location parameters of the underlying normal whose
    absolute value gives per-step effort (see recourse.sample_effort); the
    realized step size is effort_mean * effort_scale on average.
    """

    qualification_gap: float = 0.0
    mu_high: float = 0.7
    mu_low_disadvantaged: float = 0.3
    sigma: float = 0.1
    high_fraction: float = 0.5
    effort_mean_advantaged: float = 4.0
    effort_mean_disadvantaged: float = 4.0
    generator_case: GeneratorCase = GeneratorCase.EQUAL_VAR_DIFF_MEANS
    variance_ratio: float = 2.0

    @property
    def mu_low_advantaged(self) -> float:
        return self.mu_low_disadvantaged + self.qualification_gap * self.sigma

    def validate(self) -> None:
        if self.sigma <= 0:
            raise ConfigError("population.sigma must be > 0")
        if not 0.0 <= self.high_fraction <= 1.0:
            raise ConfigError("population.high_fraction must be in [0,1]")
        if self.qualification_gap < 0:
            raise ConfigError("population.qualification_gap must be >= 0")
        if self.effort_mean_advantaged < 0 or self.effort_mean_disadvantaged < 0:
            raise ConfigError("population effort means must be >= 0")
        if self.variance_ratio <= 0:
            raise ConfigError("population.variance_ratio must be > 0")


@dataclass(frozen=True)
class SimulationConfig:
    """Full configuration of one simulated run."""

    population: PopulationSpec = field(default_factory=PopulationSpec)
    horizon: int = 20
    capacity: int = 100
    initial_population: int = 1000
    arrivals_per_step: int = 100
    effort_scale: float = 0.022
    adaptation_mode: AdaptationMode = AdaptationMode.CAP_AT_RECOMMENDATION
    selection_rule: SelectionRule = SelectionRule.TOP_K
    retraining_rule: RetrainingRule = RetrainingRule.NONE
    initial_weights: tuple[float, float] = (0.5, 0.5)
    initial_bias: float = 0.0
    grr_fairness_weight: float = 1.0
    grr_learning_rate: float = 0.05
    grr_epochs: int = 200
    seed: int = 0

    def validate(self) -> None:
        self.population.validate()
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if self.capacity < 1:
            raise ConfigError("capacity must be >= 1")
        if self.initial_population < 0:
            raise ConfigError("initial_population must be >= 0")
        if self.arrivals_per_step < 0:
            raise ConfigError("arrivals_per_step must be >= 0")
        if self.effort_scale <= 0:
            raise ConfigError("effort_scale must be > 0")
        if len(self.initial_weights) != FEATURE_DIM:
            raise ConfigError(f"initial_weights must have {FEATURE_DIM} entries")
        w = np.asarray(self.initial_weights, dtype=float)
        if not np.all(np.isfinite(w)) or not math.isfinite(self.initial_bias):
            raise ConfigError("initial scorer parameters must be finite")
        if float(np.abs(w).sum()) == 0.0:
            raise ConfigError("initial_weights must not all be zero")
        # Scores must span a subset of [0,1] over the feature box so the
        # selection threshold stays in [0,1] before any retraining.
        lo = self.initial_bias + float(np.minimum(w, 0.0).sum())
        hi = self.initial_bias + float(np.maximum(w, 0.0).sum())
        if lo < -1e-12 or hi > 1.0 + 1e-12:
            raise ConfigError(
                "initial scorer must map [0,1]^2 into [0,1] "
                f"(got range [{lo:.4g}, {hi:.4g}])"
            )
        if self.grr_fairness_weight < 0:
            raise ConfigError("grr_fairness_weight must be >= 0")
        if self.grr_learning_rate <= 0:
            raise ConfigError("grr_learning_rate must be > 0")
        if self.grr_epochs < 1:
            raise ConfigError("grr_epochs must be >= 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key, val in list(d["population"].items()):
            if isinstance(val, enum.Enum):
                d["population"][key] = val.value
        for key, val in list(d.items()):
            if isinstance(val, enum.Enum):
                d[key] = val.value
        d["initial_weights"] = list(self.initial_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        pop = dict(d.get("population", {}))
        if "generator_case" in pop:
            pop["generator_case"] = GeneratorCase(pop["generator_case"])
        population = PopulationSpec(**pop)
        rest = {k: v for k, v in d.items() if k != "population"}
        if "adaptation_mode" in rest:
            rest["adaptation_mode"] = AdaptationMode(rest["adaptation_mode"])
        if "selection_rule" in rest:
            rest["selection_rule"] = SelectionRule(rest["selection_rule"])
        if "retraining_rule" in rest:
            rest["retraining_rule"] = RetrainingRule(rest["retraining_rule"])
        if "initial_weights" in rest:
            rest["initial_weights"] = tuple(rest["initial_weights"])
        return cls(population=population, **rest)


def config_hash(config: SimulationConfig) -> str:
    """Hex digest of the canonical JSON form. Changes iff any field changes."""
    payload = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# Substream purposes. Codes are part of the determinism contract: the same
# (seed, purpose) pair always yields the same stream.
_STREAM_CODES = {
    "population_init": 0,
    "arrivals": 1,
    "effort": 2,
}


class RngStreams:
    """Independent named RNG substreams derived from one base seed.

    Draws on one stream never perturb another, so e.g. adding effort draws
    cannot shift the arrival features of a later step.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def stream(self, purpose: str) -> np.random.Generator:
        if purpose not in _STREAM_CODES:
            raise KeyError(f"unknown RNG purpose: {purpose!r}")
        if purpose not in self._streams:
            seq = np.random.SeedSequence(entropy=[self.seed, _STREAM_CODES[purpose]])
            self._streams[purpose] = np.random.default_rng(seq)
        return self._streams[purpose]


@dataclass(frozen=True)
class EventRecord:
    """One agent's outcome at one timestep, snapshotted at scoring time."""

    timestep: int
    agent_id: int
    group: Group
    features: tuple[float, float]
    score: float
    outcome: Outcome
    threshold: float
    recommendation: tuple[float, float] | None
    moved_cost: float


def _fmt(x: float) -> str:
    # Shortest round-trip decimal form; guarantees byte-identical reruns
    # and exact float recovery on read.
    return repr(float(x))


class EventLog:
    """Append-only, column-oriented store of per-step event records.

    Records are appended one step at a time as parallel arrays; columns are
    concatenated lazily. Also carries run metadata (config, seed, flags, the
    initial-population snapshot, and scorer weights per step when retraining
    is active).
    """

    def __init__(self, config: SimulationConfig | None = None, seed: int | None = None):
        self.config = config
        self.seed = seed if seed is not None else (config.seed if config else None)
        self.config_digest = config_hash(config) if config is not None else None
        self.flags: list[str] = []
        self.weight_history: list[tuple[int, float, float, float]] = []
        self.initial_ids: np.ndarray = np.empty(0, dtype=np.int64)
        self.initial_groups: np.ndarray = np.empty(0, dtype=np.int8)
        self.initial_features: np.ndarray = np.empty((0, FEATURE_DIM))
        self._chunks: list[dict[str, np.ndarray]] = []
        self._cols: dict[str, np.ndarray] | None = None

    # -- building -----------------------------------------------------------

    def set_initial_population(self, ids: np.ndarray, groups: np.ndarray,
                               features: np.ndarray) -> None:
        self.initial_ids = np.asarray(ids, dtype=np.int64).copy()
        self.initial_groups = np.asarray(groups, dtype=np.int8).copy()
        self.initial_features = np.asarray(features, dtype=float).copy()

    def append_step(self, timestep: int, ids: np.ndarray, groups: np.ndarray,
                    features: np.ndarray, scores: np.ndarray,
                    positive: np.ndarray, threshold: float,
                    rec: np.ndarray, moved: np.ndarray) -> None:
        """Append one step's rows. `groups` uses codes 0=a, 1=d; `rec` holds
        NaN rows where no recommendation was issued."""
        n = len(ids)
        self._chunks.append({
            "timestep": np.full(n, timestep, dtype=np.int64),
            "agent_id": np.asarray(ids, dtype=np.int64).copy(),
            "group": np.asarray(groups, dtype=np.int8).copy(),
            "f0": np.asarray(features[:, 0], dtype=float).copy(),
            "f1": np.asarray(features[:, 1], dtype=float).copy(),
            "score": np.asarray(scores, dtype=float).copy(),
            "positive": np.asarray(positive, dtype=bool).copy(),
            "threshold": np.full(n, threshold, dtype=float),
            "rec0": np.asarray(rec[:, 0], dtype=float).copy(),
            "rec1": np.asarray(rec[:, 1], dtype=float).copy(),
            "moved_cost": np.asarray(moved, dtype=float).copy(),
        })
        self._cols = None

    def flag(self, message: str) -> None:
        self.flags.append(message)

    # -- access --------------------------------------------------------------

    def _materialize(self) -> dict[str, np.ndarray]:
        if self._cols is None:
            if self._chunks:
                keys = self._chunks[0].keys()
                self._cols = {k: np.concatenate([c[k] for c in self._chunks])
                              for k in keys}
            else:
                self._cols = {
                    "timestep": np.empty(0, dtype=np.int64),
                    "agent_id": np.empty(0, dtype=np.int64),
                    "group": np.empty(0, dtype=np.int8),
                    "f0": np.empty(0), "f1": np.empty(0), "score": np.empty(0),
                    "positive": np.empty(0, dtype=bool),
                    "threshold": np.empty(0),
                    "rec0": np.empty(0), "rec1": np.empty(0),
                    "moved_cost": np.empty(0),
                }
        return self._cols

    def column(self, name: str) -> np.ndarray:
        return self._materialize()[name]

    @property
    def n_records(self) -> int:
        return len(self.column("timestep"))

    @property
    def timesteps(self) -> np.ndarray:
        return np.unique(self.column("timestep"))

    def records(self):
        """Yield EventRecord objects in log order. Convenience path for
        tests and small logs; bulk consumers should use columns."""
        cols = self._materialize()
        groups = (Group.ADVANTAGED, Group.DISADVANTAGED)
        for i in range(self.n_records):
            has_rec = not math.isnan(cols["rec0"][i])
            yield EventRecord(
                timestep=int(cols["timestep"][i]),
                agent_id=int(cols["agent_id"][i]),
                group=groups[cols["group"][i]],
                features=(float(cols["f0"][i]), float(cols["f1"][i])),
                score=float(cols["score"][i]),
                outcome=Outcome.POSITIVE if cols["positive"][i] else Outcome.NEGATIVE,
                threshold=float(cols["threshold"][i]),
                recommendation=(float(cols["rec0"][i]), float(cols["rec1"][i])) if has_rec else None,
                moved_cost=float(cols["moved_cost"][i]),
            )

    # -- serialization -------------------------------------------------------

    def to_csv(self, fileobj: io.TextIOBase | None = None) -> str | None:
        """Write records as CSV with the fixed header. Returns the text when
        no file object is given."""
        own = fileobj is None
        out = io.StringIO() if own else fileobj
        cols = self._materialize()
        out.write(",".join(EVENT_CSV_HEADER) + "\n")
        group_chars = ("a", "d")
        for i in range(self.n_records):
            has_rec = not math.isnan(cols["rec0"][i])
            row = [
                str(int(cols["timestep"][i])),
                str(int(cols["agent_id"][i])),
                group_chars[cols["group"][i]],
                _fmt(cols["f0"][i]),
                _fmt(cols["f1"][i]),
                _fmt(cols["score"][i]),
                "positive" if cols["positive"][i] else "negative",
                _fmt(cols["threshold"][i]),
                _fmt(cols["rec0"][i]) if has_rec else "",
                _fmt(cols["rec1"][i]) if has_rec else "",
                _fmt(cols["moved_cost"][i]),
            ]
            out.write(",".join(row) + "\n")
        if own:
            return out.getvalue()
        return None

    def to_jsonl(self, fileobj: io.TextIOBase | None = None) -> str | None:
        """Write records as one JSON object per line, same fields as the CSV."""
        own = fileobj is None
        out = io.StringIO() if own else fileobj
        cols = self._materialize()
        group_chars = ("a", "d")
        for i in range(self.n_records):
            has_rec = not math.isnan(cols["rec0"][i])
            obj = {
                "timestep": int(cols["timestep"][i]),
                "agent_id": int(cols["agent_id"][i]),
                "group": group_chars[cols["group"][i]],
                "f0": float(cols["f0"][i]),
                "f1": float(cols["f1"][i]),
                "score": float(cols["score"][i]),
                "outcome": "positive" if cols["positive"][i] else "negative",
                "threshold": float(cols["threshold"][i]),
                "rec0": float(cols["rec0"][i]) if has_rec else None,
                "rec1": float(cols["rec1"][i]) if has_rec else None,
                "moved_cost": float(cols["moved_cost"][i]),
            }
            out.write(json.dumps(obj, separators=(",", ":")) + "\n")
        if own:
            return out.getvalue()
        return None

    @classmethod
    def from_csv(cls, text_or_file, config: SimulationConfig | None = None) -> "EventLog":
        """Rebuild a log from CSV text or a readable file object."""
        if hasattr(text_or_file, "read"):
            text = text_or_file.read()
        else:
            text = text_or_file
        lines = text.splitlines()
        if not lines or lines[0].split(",") != EVENT_CSV_HEADER:
            raise ValueError("bad event CSV header")
        n = len(lines) - 1
        cols = {
            "timestep": np.empty(n, dtype=np.int64),
            "agent_id": np.empty(n, dtype=np.int64),
            "group": np.empty(n, dtype=np.int8),
            "f0": np.empty(n), "f1": np.empty(n), "score": np.empty(n),
            "positive": np.empty(n, dtype=bool),
            "threshold": np.empty(n),
            "rec0": np.empty(n), "rec1": np.empty(n),
            "moved_cost": np.empty(n),
        }
        for i, line in enumerate(lines[1:]):
            parts = line.split(",")
            cols["timestep"][i] = int(parts[0])
            cols["agent_id"][i] = int(parts[1])
            cols["group"][i] = 0 if parts[2] == "a" else 1
            cols["f0"][i] = float(parts[3])
            cols["f1"][i] = float(parts[4])
            cols["score"][i] = float(parts[5])
            cols["positive"][i] = parts[6] == "positive"
            cols["threshold"][i] = float(parts[7])
            cols["rec0"][i] = float(parts[8]) if parts[8] else math.nan
            cols["rec1"][i] = float(parts[9]) if parts[9] else math.nan
            cols["moved_cost"][i] = float(parts[10])
        log = cls(config=config)
        log._cols = cols
        log._chunks = []
        return log


def build_manifest(log: EventLog, package_version: str,
                   calibration_note: str | None = None) -> dict:
    """Assemble the run manifest: enough to identify, resume, and replay."""
    manifest = {
        "config": log.config.to_dict() if log.config else None,
        "seed": log.seed,
        "config_hash": log.config_digest,
        "build": {"package": "recourse-sim", "version": package_version},
        "record_count": log.n_records,
        "initial_population_size": int(len(log.initial_ids)),
        "flags": list(log.flags),
        "weight_history": [
            {"timestep": t, "w0": w0, "w1": w1, "bias": b}
            for (t, w0, w1, b) in log.weight_history
        ],
        "completed": True,
    }
    if calibration_note:
        manifest["calibration"] = calibration_note
    return manifest
