"""Experiment configuration, batch execution and rank-test analysis.

A config is a JSON document with ``format_version: 1``. Unknown keys at any
level raise :class:`ConfigError`. Example::

    {"format_version": 1,
     "course": {"seed": 42},
     "conditions": [{"technique": "joystick", "task": "rings"}],
     "pilots": {"count": 20, "base_seed": 1000, "policy": {"kind": "calibrated_noisy"}},
     "dt": 0.011111111111111112, "workers": 1}
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from . import __version__
from .errors import ConfigError, DegenerateData, GazeSteerError
from .harness import (
    NUMERIC_METRICS,
    SpeedTechnique,
    Task,
    TrialMetrics,
    TrialSpec,
    compute_metrics,
    run_trial,
    write_log,
)
from .pilot import CALIBRATED_NOISY, Ideal, Multitask, Noisy, PilotPolicy, fmt
from .stats import (
    DunnMatrix,
    KwResult,
    SampleGroup,
    dunn_bonferroni,
    kruskal_wallis,
    wilcoxon_signed_rank,
)
from .world import Course, CourseGenSpec, generate_default_course, loads_course

FORMAT_VERSION = 1
_SHORT = {SpeedTechnique.JOYSTICK: "Joy", SpeedTechnique.SPEED_CIRCLE: "SC"}


@dataclass(frozen=True)
class Condition:
    technique: SpeedTechnique
    task: Task

    @property
    def key(self) -> str:
        return f"{self.task.value}_{self.technique.value}"

    @property
    def label(self) -> str:
        return f"{self.task.value.capitalize()} {_SHORT[self.technique]}"


DEFAULT_CONDITIONS = (
    Condition(SpeedTechnique.JOYSTICK, Task.RINGS),
    Condition(SpeedTechnique.JOYSTICK, Task.TARGETS),
    Condition(SpeedTechnique.SPEED_CIRCLE, Task.RINGS),
    Condition(SpeedTechnique.SPEED_CIRCLE, Task.TARGETS),
)


@dataclass(frozen=True)
class PilotEntry:
    id: str
    seed: int
    policy: PilotPolicy = CALIBRATED_NOISY


def default_pilots(count: int = 20, base_seed: int = 1000, policy: PilotPolicy = CALIBRATED_NOISY) -> tuple:
    return tuple(PilotEntry(f"P{i + 1:02d}", base_seed + i, policy) for i in range(count))


@dataclass(frozen=True)
class CourseSource:
    """Either a course JSON file or the procedural generator with a seed."""

    file: Optional[str] = None
    seed: int = 42
    generator: CourseGenSpec = field(default_factory=CourseGenSpec)

    def load(self) -> Course:
        if self.file is not None:
            try:
                return loads_course(Path(self.file).read_text())
            except OSError as e:
                raise ConfigError(f"cannot read course file {self.file!r}: {e}") from e
        return generate_default_course(self.generator, seed=self.seed)


@dataclass(frozen=True)
class ExperimentConfig:
    course: CourseSource = field(default_factory=CourseSource)
    conditions: tuple = DEFAULT_CONDITIONS
    pilots: tuple = field(default_factory=default_pilots)
    dt: float = 1.0 / 90.0
    timeout: float = 600.0
    workers: int = 1
    write_logs: bool = True
    out: str = "results"

    def __post_init__(self) -> None:
        if not self.conditions:
            raise ConfigError("at least one condition is required")
        if not self.pilots:
            raise ConfigError("at least one pilot is required")
        if len({c.key for c in self.conditions}) != len(self.conditions):
            raise ConfigError("duplicate conditions")
        if len({p.id for p in self.pilots}) != len(self.pilots):
            raise ConfigError("duplicate pilot ids")
        if not (self.dt > 0 and self.timeout > 0):
            raise ConfigError("dt and timeout must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


# ---------------------------------------------------------------- (de)serialization

def policy_to_dict(p: PilotPolicy) -> dict:
    if p == CALIBRATED_NOISY:
        return {"kind": "calibrated_noisy"}
    if isinstance(p, Multitask):
        return {"kind": "multitask", "base": policy_to_dict(p.base), "engage_cone": p.engage_cone, "dwell": p.dwell}
    if isinstance(p, (Ideal, Noisy)):
        return {"kind": type(p).__name__.lower(), **dataclasses.asdict(p)}
    raise ConfigError(f"policy {type(p).__name__} cannot be stored in a config")


def _check_keys(d: Mapping, allowed: Iterable[str], where: str) -> None:
    if not isinstance(d, Mapping):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")


def policy_from_dict(d: Mapping) -> PilotPolicy:
    kind = d.get("kind") if isinstance(d, Mapping) else None
    try:
        if kind == "calibrated_noisy":
            _check_keys(d, ["kind"], "policy")
            return CALIBRATED_NOISY
        if kind == "ideal":
            _check_keys(d, ["kind", "reaim_threshold"], "policy")
            return Ideal(**{k: v for k, v in d.items() if k != "kind"})
        if kind == "noisy":
            _check_keys(d, ["kind", *(f.name for f in dataclasses.fields(Noisy))], "policy")
            return Noisy(**{k: v for k, v in d.items() if k != "kind"})
        if kind == "multitask":
            _check_keys(d, ["kind", "base", "engage_cone", "dwell"], "policy")
            kw = {k: v for k, v in d.items() if k not in ("kind", "base")}
            return Multitask(base=policy_from_dict(d.get("base", {"kind": "ideal"})), **kw)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad policy {dict(d)!r}: {e}") from e
    raise ConfigError(f"unknown policy kind {kind!r}")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    gen = dataclasses.asdict(cfg.course.generator)
    return {
        "format_version": FORMAT_VERSION,
        "course": {"file": cfg.course.file, "seed": cfg.course.seed,
                   "generator": {k: list(v) if isinstance(v, tuple) else v for k, v in gen.items()}},
        "conditions": [{"technique": c.technique.value, "task": c.task.value} for c in cfg.conditions],
        "pilots": [{"id": p.id, "seed": p.seed, "policy": policy_to_dict(p.policy)} for p in cfg.pilots],
        "dt": cfg.dt,
        "timeout": cfg.timeout,
        "workers": cfg.workers,
        "write_logs": cfg.write_logs,
        "out": cfg.out,
    }


def config_from_dict(d: Mapping) -> ExperimentConfig:
    _check_keys(d, ["format_version", "course", "conditions", "pilots", "dt", "timeout", "workers", "write_logs", "out"], "config")
    if d.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {d.get('format_version')!r}")
    kw: dict[str, Any] = {}
    if "course" in d:
        c = d["course"]
        _check_keys(c, ["file", "seed", "generator"], "course")
        gen = c.get("generator", {})
        gen_fields = [f.name for f in dataclasses.fields(CourseGenSpec)]
        _check_keys(gen, gen_fields, "course.generator")
        try:
            spec = CourseGenSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in gen.items()})
        except TypeError as e:
            raise ConfigError(f"course.generator: {e}") from e
        kw["course"] = CourseSource(file=c.get("file"), seed=int(c.get("seed", 42)), generator=spec)
    if "conditions" in d:
        conds = []
        for i, c in enumerate(d["conditions"]):
            _check_keys(c, ["technique", "task"], f"conditions[{i}]")
            try:
                conds.append(Condition(SpeedTechnique(c["technique"]), Task(c["task"])))
            except (KeyError, ValueError) as e:
                raise ConfigError(f"conditions[{i}]: {e}") from e
        kw["conditions"] = tuple(conds)
    if "pilots" in d:
        p = d["pilots"]
        if isinstance(p, Mapping):
            _check_keys(p, ["count", "base_seed", "policy"], "pilots")
            pol = policy_from_dict(p["policy"]) if "policy" in p else CALIBRATED_NOISY
            kw["pilots"] = default_pilots(int(p.get("count", 20)), int(p.get("base_seed", 1000)), pol)
        else:
            entries = []
            for i, e in enumerate(p):
                _check_keys(e, ["id", "seed", "policy"], f"pilots[{i}]")
                pol = policy_from_dict(e["policy"]) if "policy" in e else CALIBRATED_NOISY
                entries.append(PilotEntry(str(e.get("id", f"P{i + 1:02d}")), int(e["seed"]), pol))
            kw["pilots"] = tuple(entries)
    for k in ("dt", "timeout"):
        if k in d:
            kw[k] = float(d[k])
    if "workers" in d:
        kw["workers"] = int(d["workers"])
    if "write_logs" in d:
        kw["write_logs"] = bool(d["write_logs"])
    if "out" in d:
        kw["out"] = str(d["out"])
    return ExperimentConfig(**kw)


def load_config(path: os.PathLike | str) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return config_from_dict(doc)


def config_digest(cfg: ExperimentConfig) -> str:
    d = config_to_dict(cfg)
    # output location and parallelism do not affect results
    for k in ("out", "workers", "write_logs"):
        d.pop(k)
    if cfg.course.file is not None:
        d["course"]["file_sha256"] = hashlib.sha256(Path(cfg.course.file).read_bytes()).hexdigest()
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------- execution

def trial_seed(pilot_seed: int, condition: Condition) -> int:
    return zlib.crc32(f"{pilot_seed}:{condition.key}".encode())


def trial_policy(policy: PilotPolicy, task: Task) -> PilotPolicy:
    """Targets trials glance at balloons, so the base policy is wrapped in Multitask."""
    if task is Task.TARGETS and not isinstance(policy, Multitask):
        return Multitask(base=policy)
    return policy


@dataclass(frozen=True)
class MetricsRow:
    condition: Condition
    pilot: str
    seed: int
    metrics: TrialMetrics


METRICS_HEADER = ("condition", "technique", "task", "pilot", "seed", *NUMERIC_METRICS, "completed", "timed_out")


def _fmt_value(v: Any) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return fmt(v)


def metrics_csv(rows: Sequence[MetricsRow]) -> str:
    lines = [",".join(METRICS_HEADER)]
    for r in sorted(rows, key=lambda r: (r.condition.key, r.pilot)):
        m = r.metrics
        vals = [r.condition.key, r.condition.technique.value, r.condition.task.value, r.pilot, str(r.seed)]
        vals += [_fmt_value(getattr(m, f)) for f in NUMERIC_METRICS]
        vals += [_fmt_value(m.completed), _fmt_value(m.timed_out)]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def read_metrics_csv(text: str) -> list[MetricsRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or tuple(lines[0].split(",")) != METRICS_HEADER:
        raise ConfigError("metrics table has an unexpected header")
    rows = []
    int_fields = {f.name for f in dataclasses.fields(TrialMetrics) if f.type in ("int", int)}
    for ln in lines[1:]:
        p = ln.split(",")
        cond = Condition(SpeedTechnique(p[1]), Task(p[2]))
        vals = dict(zip(NUMERIC_METRICS, p[5:5 + len(NUMERIC_METRICS)]))
        kw = {k: int(v) if k in int_fields else float(v) for k, v in vals.items()}
        kw["completed"], kw["timed_out"] = p[-2] == "1", p[-1] == "1"
        rows.append(MetricsRow(cond, p[3], int(p[4]), TrialMetrics(**kw)))
    return rows


def _run_one(args: tuple) -> tuple[TrialMetrics, Optional[str]]:
    spec, want_log = args
    log = run_trial(spec)
    text = None
    if want_log:
        import io

        buf = io.StringIO()
        write_log(log, buf)
        text = buf.getvalue()
    return compute_metrics(log, spec.course), text


@dataclass
class ExperimentResult:
    rows: list
    digest: str
    out_dir: Optional[Path]


def build_trials(cfg: ExperimentConfig, course: Course) -> list[tuple[Condition, PilotEntry, TrialSpec]]:
    out = []
    for cond in sorted(cfg.conditions, key=lambda c: c.key):
        for p in sorted(cfg.pilots, key=lambda p: p.id):
            spec = TrialSpec(
                course=course,
                policy=trial_policy(p.policy, cond.task),
                speed_technique=cond.technique,
                task=cond.task,
                dt=cfg.dt,
                seed=trial_seed(p.seed, cond),
                timeout=cfg.timeout,
            )
            out.append((cond, p, spec))
    return out


def run_experiment(cfg: ExperimentConfig, out: Optional[os.PathLike | str] = None, write: bool = True) -> ExperimentResult:
    """Run every (condition, pilot) trial and write logs, metrics.csv and manifest.json."""
    course = cfg.course.load()
    trials = build_trials(cfg, course)
    jobs = [(spec, cfg.write_logs and write) for _, _, spec in trials]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        results = [_run_one(j) for j in jobs]

    rows = [MetricsRow(c, p.id, spec.seed, m) for (c, p, spec), (m, _) in zip(trials, results)]
    digest = config_digest(cfg)
    out_dir = None
    if write:
        out_dir = Path(out if out is not None else cfg.out)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            if cfg.write_logs:
                logs = out_dir / "logs"
                logs.mkdir(exist_ok=True)
                for (c, p, _), (_, text) in zip(trials, results):
                    (logs / f"{c.key}__{p.id}.log").write_text(text)
            (out_dir / "metrics.csv").write_text(metrics_csv(rows))
            manifest = {
                "format_version": FORMAT_VERSION,
                "package_version": __version__,
                "config_digest": digest,
                "config": config_to_dict(cfg),
                "trials": [{"condition": c.key, "pilot": p.id, "pilot_seed": p.seed, "trial_seed": s.seed}
                           for c, p, s in trials],
            }
            (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        except OSError as e:
            raise ConfigError(f"cannot write results to {out_dir}: {e}") from e
    return ExperimentResult(rows, digest, out_dir)


# ---------------------------------------------------------------- analysis

REPORT_METRICS = (
    "completion_time", "path_length", "collision_events", "collision_time",
    "flying_pct", "mean_speed", "rings_crossed", "balloons_popped",
)


@dataclass
class MetricAnalysis:
    metric: str
    kw: Optional[KwResult] = None
    dunn: Optional[DunnMatrix] = None
    wilcoxon: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def _conditions_in(rows: Sequence[MetricsRow]) -> list[Condition]:
    seen = {r.condition.key: r.condition for r in rows}
    order = {c.key: i for i, c in enumerate(DEFAULT_CONDITIONS)}
    return sorted(seen.values(), key=lambda c: (order.get(c.key, len(order)), c.key))


def analyze(rows: Sequence[MetricsRow], metrics: Sequence[str] = REPORT_METRICS) -> dict[str, MetricAnalysis]:
    """KW and Dunn across conditions; Wilcoxon between techniques within each task."""
    conds = _conditions_in(rows)
    by_cond = {c.key: sorted((r for r in rows if r.condition.key == c.key), key=lambda r: r.pilot) for c in conds}
    out: dict[str, MetricAnalysis] = {}
    for metric in metrics:
        a = MetricAnalysis(metric)
        if len(conds) >= 2:
            groups = [SampleGroup(c.label, [float(getattr(r.metrics, metric)) for r in by_cond[c.key]]) for c in conds]
            try:
                a.kw = kruskal_wallis(groups)
                a.dunn = dunn_bonferroni(groups)
            except DegenerateData:
                a.notes.append("all values identical; rank tests skipped")
        for task in Task:
            pair = [c for c in conds if c.task is task]
            if len(pair) != 2:
                continue
            x = {r.pilot: float(getattr(r.metrics, metric)) for r in by_cond[pair[0].key]}
            y = {r.pilot: float(getattr(r.metrics, metric)) for r in by_cond[pair[1].key]}
            ids = sorted(set(x) & set(y))
            if not ids:
                continue
            try:
                a.wilcoxon[f"{pair[0].label} vs {pair[1].label}"] = wilcoxon_signed_rank([x[i] for i in ids], [y[i] for i in ids])
            except GazeSteerError as e:
                a.notes.append(f"{pair[0].label} vs {pair[1].label}: {e}")
        out[metric] = a
    return out

