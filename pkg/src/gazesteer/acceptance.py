"""Acceptance checks runnable from the command line (``gazesteer verify``).

Each check returns a :class:`CheckResult`. Collaborators are injectable so
negative controls (a broken speed clamp, a missing fixture directory) can be
exercised from tests.
"""
from __future__ import annotations

import itertools
import math
import random
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import FixtureMissing
from .frames import InputFrame
from .geometry import Ray, UnitVec3, perpendicular_basis, vec
from .harness import SpeedTechnique, Task, TrialSpec, compute_metrics, run_trial
from .pilot import CALIBRATED_NOISY, Ideal, Multitask
from .questionnaires import (
    CountHigh,
    PresenceResponse,
    SsqResponse,
    SumNormalized,
    score_presence,
    score_ssq,
    score_tlx,
)
from .speed import JoystickConfig, SpeedCircleConfig, joystick_speed, speed_circle_speed
from .stats import _doubled_ranks, dunn_bonferroni, kruskal_wallis, wilcoxon_signed_rank
from .steering import DirectionSet, SteeringConfig, SteeringState, update_steering
from .world import CourseGenSpec, generate_default_course

REFERENCE_RINGS_PCT = 97.5
REFERENCE_BALLOONS_PCT = 96.3
CALIBRATION_SEEDS = range(1000, 1020)


@dataclass
class CheckResult:
    name: str
    passed: bool
    expected: str
    actual: str
    tolerance: str
    elapsed: float
    limit: float
    subchecks: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: expected {self.expected}; actual {self.actual}; "
                f"tolerance {self.tolerance}; {self.elapsed:.2f}s (limit {self.limit:g}s)")


def _timed(name, limit, fn) -> CheckResult:
    t0 = time.perf_counter()
    ok, expected, actual, tol, subs = fn()
    el = time.perf_counter() - t0
    within = el <= limit
    if not within:
        actual += f" [runtime {el:.2f}s over limit]"
    return CheckResult(name, ok and within, expected, actual, tol, el, limit, subs)


# ------------------------------------------------------------------ 1

def _random_unit(rng: random.Random) -> UnitVec3:
    while True:
        x, y, z = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)
        n = math.sqrt(x * x + y * y + z * z)
        if 1e-3 < n <= 1.0:
            return UnitVec3(x / n, y / n, z / n)


def random_released_frame(rng: random.Random, t: float) -> InputFrame:
    p = vec(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100))
    return InputFrame(
        t, p, Ray(p, _random_unit(rng)), vec(p[0] + 0.2, p[1] - 0.4, p[2]), _random_unit(rng),
        False, rng.random() < 0.5, rng.uniform(-1, 1), vec(rng.uniform(-1, 1), 1.0, rng.uniform(-1, 1)),
    )


def check_free_look(n: int = 10_000, seed: int = 1, step=update_steering) -> CheckResult:
    def run():
        rng = random.Random(seed)
        start = UnitVec3(0.0, 0.0, 1.0)
        state = SteeringState(start)
        changed = 0
        for i in range(n):
            state, events = step(state, random_released_frame(rng, i / 90.0))
            if state.direction != start or any(isinstance(e, DirectionSet) for e in events):
                changed += 1
                state = SteeringState(start)
        return changed == 0, "0 direction changes", f"{changed} of {n} frames changed direction", "exact", []
    return _timed("1 free-look invariance", 1.0, run)


# ------------------------------------------------------------------ 2

def alignment_threshold_deg(cfg: SteeringConfig = SteeringConfig()) -> float:
    return math.degrees(math.atan((cfg.target_width / 2.0) / cfg.target_distance))


def sweep_alignment(step_deg: float = 0.001, max_deg: float = 10.0, azimuths: int = 8,
                    cfg: SteeringConfig = SteeringConfig(), step=update_steering) -> list[tuple[float, float]]:
    """(azimuth, largest firing deviation) for each azimuth; also asserts the fired set is contiguous."""
    hand_origin = vec(0.3, 1.2, -0.7)
    hand_dir = UnitVec3(*_normalize(0.2, 0.1, 1.0))
    e1, e2 = perpendicular_basis(hand_dir)
    out = []
    n = int(round(max_deg / step_deg))
    for k in range(azimuths):
        phi = 2 * math.pi * k / azimuths
        ax = tuple(math.cos(phi) * a + math.sin(phi) * b for a, b in zip(e1, e2))
        last_fire, gap = None, False
        for i in range(n + 1):
            th = math.radians(i * step_deg)
            d = _normalize(*(math.cos(th) * h + math.sin(th) * a for h, a in zip(hand_dir, ax)))
            frame = InputFrame(0.0, hand_origin, Ray(hand_origin, UnitVec3(*d)), hand_origin, hand_dir,
                               True, False, 0.0, vec(0, 1, 0))
            _, events = step(SteeringState(), frame, cfg)
            fired = any(isinstance(e, DirectionSet) for e in events)
            if fired:
                if last_fire is not None and last_fire != (i - 1) * step_deg:
                    gap = True
                last_fire = i * step_deg
        out.append((phi, math.nan if gap or last_fire is None else last_fire))
    return out


def _normalize(x, y, z):
    n = math.sqrt(x * x + y * y + z * z)
    return x / n, y / n, z / n


def check_alignment(step_deg: float = 0.001) -> CheckResult:
    def run():
        expected = alignment_threshold_deg()
        res = sweep_alignment(step_deg)
        worst = max(abs(b - expected) if not math.isnan(b) else math.inf for _, b in res)
        edges = ", ".join(f"{b:.3f}" for _, b in res)
        return worst <= step_deg, f"fires iff deviation <= {expected:.4f} deg", f"edges [{edges}] deg", f"{step_deg} deg", []
    return _timed("2 alignment geometry", 5.0, run)


# ------------------------------------------------------------------ 3

def check_speed_clamps(n: int = 1_000_000, seed: int = 3,
                       joystick: Callable = joystick_speed, circle: Callable = speed_circle_speed) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        jcfg = JoystickConfig()
        ccfg = SpeedCircleConfig(center=vec(0.4, 0.0, -0.2), forward=UnitVec3(*_normalize(1.0, 0.0, 1.0)))
        axes = rng.uniform(-3.0, 3.0, n).tolist()
        # half the positions within a few meters, the rest up to 100 m outside
        radius = np.where(rng.random(n) < 0.5, rng.uniform(0, 2.0, n), rng.uniform(0, 100.5, n))
        ang = rng.uniform(0, 2 * math.pi, n)
        xs = (0.4 + radius * np.cos(ang)).tolist()
        zs = (-0.2 + radius * np.sin(ang)).tolist()
        worst = 0.0
        for a in axes:
            s = abs(joystick(a, jcfg))
            if s > worst:
                worst = s
        for x, z in zip(xs, zs):
            s = abs(circle((x, 1.0, z), ccfg))
            if s > worst:
                worst = s
        neutral = (joystick(0.0, jcfg), circle(vec(0.4, 1.3, -0.2), ccfg))
        ok = worst <= 5.0 and neutral == (0.0, 0.0)
        return ok, "max |speed| <= 5.0, neutral = 0", f"max |speed| = {worst!r}, neutral = {neutral}", "exact", []
    return _timed("3 speed clamps", 5.0, run)


# ------------------------------------------------------------------ 4

def check_traversal(course_seed: int = 42) -> CheckResult:
    def run():
        course = generate_default_course(CourseGenSpec(), seed=course_seed)
        t0 = time.perf_counter()
        log = run_trial(TrialSpec(course, Ideal(), SpeedTechnique.JOYSTICK, Task.RINGS))
        per_trial = time.perf_counter() - t0
        m = compute_metrics(log, course)
        ok = (m.completed and m.rings_crossed == m.rings_total and 350.0 <= m.path_length <= 402.5
              and m.completion_time >= 70.0 and per_trial < 10.0)
        return (ok, "completed, 100% rings, path in [350, 402.5] m, time >= 70 s",
                f"completed={m.completed}, rings {m.rings_crossed}/{m.rings_total}, path {m.path_length:.3f} m, "
                f"time {m.completion_time:.3f} s", "bounds inclusive", [])
    return _timed("4 course traversal bound", 10.0, run)


# ------------------------------------------------------------------ 5

def calibration_rates(seeds: Sequence[int] = CALIBRATION_SEEDS, course_seed: int = 42,
                      technique: SpeedTechnique = SpeedTechnique.JOYSTICK) -> tuple[float, float]:
    course = generate_default_course(CourseGenSpec(), seed=course_seed)
    rings = rings_total = balloons = balloons_total = 0
    for s in seeds:
        log = run_trial(TrialSpec(course, Multitask(CALIBRATED_NOISY), technique, Task.TARGETS, seed=s))
        m = compute_metrics(log, course)
        rings += m.rings_crossed
        rings_total += m.rings_total
        balloons += m.balloons_popped
        balloons_total += m.balloons_total
    return 100.0 * rings / rings_total, 100.0 * balloons / balloons_total


def check_multitask(course_seed: int = 42) -> CheckResult:
    def run():
        course = generate_default_course(CourseGenSpec(), seed=course_seed)
        log = run_trial(TrialSpec(course, Multitask(Ideal()), SpeedTechnique.JOYSTICK, Task.TARGETS))
        m = compute_metrics(log, course)
        intervals = log.diversion_intervals()
        inside = sum(1 for e in log.events if isinstance(e, DirectionSet)
                     and any(a <= e.t < b for _, a, b in intervals))
        ideal_ok = m.balloons_popped >= 29 and m.rings_crossed == 20 and m.rings_total == 20 and inside == 0
        rp, bp = calibration_rates(course_seed=course_seed)
        cal_ok = abs(rp - REFERENCE_RINGS_PCT) <= 3.0 and abs(bp - REFERENCE_BALLOONS_PCT) <= 3.0
        return (ideal_ok and cal_ok,
                "ideal: >=29/30 balloons, 20/20 rings, 0 locks while diverted; noisy: rings 97.5%, balloons 96.3%",
                f"ideal: {m.balloons_popped}/{m.balloons_total} balloons, {m.rings_crossed}/{m.rings_total} rings, "
                f"{inside} locks while diverted; noisy: rings {rp:.2f}%, balloons {bp:.2f}%",
                "noisy rates +/-3 percentage points", [])
    return _timed("5 multitask non-degradation", 30.0, run)


# ------------------------------------------------------------------ 6

def kw_permutation_p(groups: Sequence[Sequence[float]], n_perm: int = 100_000, seed: int = 6) -> float:
    """Monte-Carlo permutation p-value of H (tie-free data) with the +1 correction."""
    sizes = [len(g) for g in groups]
    pooled = np.concatenate([np.asarray(g, float) for g in groups])
    n = pooled.size
    ranks = np.argsort(np.argsort(pooled, kind="stable"), kind="stable") + 1.0
    h_obs = kruskal_wallis(groups).h
    rng = np.random.default_rng(seed)
    perm = rng.permuted(np.tile(ranks, (n_perm, 1)), axis=1)
    stat = np.zeros(n_perm)
    pos = 0
    for k in sizes:
        stat += perm[:, pos:pos + k].sum(axis=1) ** 2 / k
        pos += k
    h = 12.0 / (n * (n + 1)) * stat - 3 * (n + 1)
    hits = int(np.count_nonzero(h >= h_obs - 1e-9))
    return (hits + 1) / (n_perm + 1)


def brute_force_wilcoxon_p(diffs: Sequence[float]) -> float:
    """Two-sided exact p by listing all 2^n sign assignments."""
    d = [x for x in diffs if x != 0]
    n = len(d)
    ranks = np.array(_doubled_ranks([abs(x) for x in d]), dtype=np.int64)
    t_plus = int(sum(r for r, x in zip(ranks, d) if x > 0))
    w = min(t_plus, n * (n + 1) - t_plus)
    signs = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.int64)
    sums = signs @ ranks
    return min(1.0, 2.0 * int(np.count_nonzero(sums <= w)) / 2 ** n)


def check_statistics(n_perm: int = 100_000) -> CheckResult:
    def run():
        subs = []
        g = [[1, 2, 3], [4, 5, 6], [7, 8, 9]]
        r = kruskal_wallis(g)
        closed = math.exp(-3.6)
        subs.append(("6a KW H and closed-form p", r.h == 7.2 and abs(r.p - closed) <= 1e-4,
                     f"H=7.2 exactly, p={closed:.5f}", f"H={r.h!r}, p={r.p:.5f}", "1e-4"))

        p_perm = kw_permutation_p(g, n_perm)
        se = math.sqrt(r.p * (1 - r.p) / n_perm)
        subs.append(("6b KW p vs permutation oracle", abs(r.p - p_perm) <= 4 * se,
                     f"p_perm ~ {r.p:.5f}", f"p_perm={p_perm:.5f} ({n_perm} permutations)", f"4 MC se = {4 * se:.5f}"))

        rng = random.Random(66)
        mismatches = 0
        for i in range(100):
            n = 1 + i % 12
            diffs = [rng.choice([-1, 1]) * rng.randint(1, 6) for _ in range(n)]
            if rng.random() < 0.5:
                diffs = [x * rng.random() for x in diffs]
            res = wilcoxon_signed_rank(diffs, [0.0] * n)
            if res.p != brute_force_wilcoxon_p(diffs):
                mismatches += 1
        subs.append(("6c Wilcoxon exact vs 2^n enumeration", mismatches == 0,
                     "0 mismatches over 100 datasets, n <= 12", f"{mismatches} mismatches", "exact"))

        d = dunn_bonferroni(g)
        p13 = d.p_adj[0][2]
        subs.append(("6d Dunn-Bonferroni pair (1,3)", abs(p13 - 0.0219) <= 1e-3, "0.0219", f"{p13:.5f}", "1e-3"))

        ok = all(s[1] for s in subs)
        failed = [s[0].split()[0] for s in subs if not s[1]]
        return (ok, "all sub-checks pass", "all sub-checks pass" if ok else f"failed: {', '.join(failed)}",
                "per sub-check", subs)
    return _timed("6 statistics oracle equivalence", 60.0, run)


# ------------------------------------------------------------------ 7

def check_questionnaires(n: int = 10_000, seed: int = 7) -> CheckResult:
    def run():
        zero = score_ssq(SsqResponse([0] * 16))
        three = score_ssq(SsqResponse([3] * 16))
        tlx_lo = score_tlx([0] * 6, 20)
        tlx_hi = score_tlx([20] * 6, 20)
        rng = random.Random(seed)
        violations = 0
        for _ in range(n):
            items = [rng.randint(0, 3) for _ in range(16)]
            j = rng.randrange(16)
            if items[j] < 3:
                up = list(items)
                up[j] += 1
                a, b = score_ssq(SsqResponse(items)), score_ssq(SsqResponse(up))
                violations += any(y < x for x, y in zip(a, b))
            tl = [rng.uniform(0, 100) for _ in range(6)]
            tu = list(tl)
            k = rng.randrange(6)
            tu[k] = rng.uniform(tl[k], 100)
            violations += score_tlx(tu) < score_tlx(tl)
            pr = [rng.randint(1, 7) for _ in range(6)]
            pu = list(pr)
            k = rng.randrange(6)
            pu[k] = min(7, pu[k] + rng.randint(0, 3))
            for mode in (CountHigh(), SumNormalized(20)):
                violations += score_presence(PresenceResponse(pu), mode) < score_presence(PresenceResponse(pr), mode)
        ok = (tuple(zero) == (0, 0, 0, 0) and abs(three.total - 235.62) <= 1e-9
              and tlx_lo == 0.0 and tlx_hi == 100.0 and violations == 0)
        return (ok, "SSQ zeros -> 0, all-3 total 235.62, TLX 0/100, no monotonicity violations",
                f"SSQ zeros -> {tuple(zero)}, all-3 total {three.total!r}, TLX {tlx_lo}/{tlx_hi}, "
                f"{violations} violations in {n} perturbations", "1e-9 on SSQ total, else exact", [])
    return _timed("7 questionnaire scorers", 5.0, run)


# ------------------------------------------------------------------ 8

def check_determinism(cfg=None, workers: int = 1) -> CheckResult:
    from .experiment import ExperimentConfig, run_experiment

    def run():
        c = cfg or ExperimentConfig(write_logs=False, workers=workers)
        with tempfile.TemporaryDirectory() as tmp:
            a = run_experiment(c, Path(tmp) / "a")
            b = run_experiment(c, Path(tmp) / "b")
            ba = (a.out_dir / "metrics.csv").read_bytes()
            bb = (b.out_dir / "metrics.csv").read_bytes()
        rows = len(a.rows)
        return (ba == bb, "byte-identical metrics CSVs", f"{'identical' if ba == bb else 'different'}, {rows} rows",
                "exact bytes", [])
    return _timed("8 determinism", 60.0, run)


# ------------------------------------------------------------------ 9

# Independent transcription of the published upper triangles, row by row.
REFERENCE_TABLES = {
    "path_length_vs_magic_carpet": [
        "1.0000 1.0000 1.0000 0.7339 0.0017 0.0052",
        "1.0000 1.0000 0.0300 0.0000 0.0000",
        "1.0000 0.3482 0.0004 0.0015",
        "0.0072 0.0000 0.0000",
        "1.0000 1.0000",
        "1.0000",
    ],
    "collision_events_vs_magic_carpet": [
        "0.2170 1.0000 0.1254 1.0000 0.0101 0.0056",
        "0.1304 1.0000 1.0000 1.0000 1.0000",
        "0.0731 1.0000 0.0054 0.0029",
        "1.0000 1.0000 1.0000",
        "0.6829 0.4678",
        "1.0000",
    ],
    "completion_time_vs_magic_carpet": [
        "1.0000 0.0018 1.0000 0.4893 0.0000 0.0000",
        "0.0010 1.0000 0.3412 0.0000 0.0000",
        "0.5095 1.0000 0.7758 1.0000",
        "1.0000 0.0004 0.0256",
        "0.0114 0.2470",
        "1.0000",
    ],
}
REFERENCE_LABELS = ("Rings Joy", "Targets Joy", "Rings SC", "Targets SC", "Joy MC", "VC MC", "WIP MC")


def reference_matrix(name: str) -> list[list[str]]:
    k = len(REFERENCE_LABELS)
    m = [["1.0000"] * k for _ in range(k)]
    for i, row in enumerate(REFERENCE_TABLES[name]):
        for off, cell in enumerate(row.split()):
            j = i + 1 + off
            m[i][j] = m[j][i] = cell
    return m


def check_fixtures(fixture_dir: Optional[Path] = None) -> CheckResult:
    from .report import FIXTURE_NAMES, load_fixture, parse_text_grid, render_fixture_text

    def run():
        mismatches = []
        try:
            for name in FIXTURE_NAMES:
                fx = load_fixture(name, fixture_dir)
                lines = render_fixture_text(fx)[2:]
                got = parse_text_grid([ln[2:] for ln in lines], fx.labels)
                got = [["0.0000" if c == "<0.0001" else c for c in row] for row in got]
                want = reference_matrix(name)
                if tuple(fx.labels) != REFERENCE_LABELS:
                    mismatches.append(f"{name}: labels")
                for i, j in itertools.product(range(len(want)), repeat=2):
                    if got[i][j] != want[i][j]:
                        mismatches.append(f"{name}[{REFERENCE_LABELS[i]}, {REFERENCE_LABELS[j]}] {got[i][j]} != {want[i][j]}")
        except FixtureMissing as e:
            return False, "3 fixtures, 147 cells matching", f"FixtureMissing: {e}", "exact strings", []
        sample = reference_matrix("path_length_vs_magic_carpet")[1][4]
        return (not mismatches, "3 fixtures, 147 cells matching (e.g. Targets Joy / Joy MC = 0.0300)",
                f"{147 - len(mismatches)} cells matching, Targets Joy / Joy MC = {sample}"
                + (f"; first mismatch {mismatches[0]}" if mismatches else ""), "exact strings", [])
    return _timed("9 fixture fidelity", 5.0, run)


# ------------------------------------------------------------------ driver

ALL_CHECKS: tuple = (
    check_free_look, check_alignment, check_speed_clamps, check_traversal, check_multitask,
    check_statistics, check_questionnaires, check_determinism, check_fixtures,
)


def run_all(checks: Sequence[Callable[[], CheckResult]] = ALL_CHECKS, emit=print) -> list[CheckResult]:
    results = []
    for c in checks:
        r = c()
        emit(r.line())
        for name, ok, exp, act, tol in r.subchecks:
            emit(f"    {'PASS' if ok else 'FAIL'} {name}: expected {exp}; actual {act}; tolerance {tol}")
        results.append(r)
    passed = sum(r.passed for r in results)
    emit(f"{passed}/{len(results)} criteria passed")
    return results


def verify(emit=print) -> int:
    """Run every check; exit status 0 only when all pass."""
    return 0 if all(r.passed for r in run_all(emit=emit)) else 1
