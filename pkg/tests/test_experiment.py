import json

import pytest

from gazesteer.errors import ConfigError
from gazesteer.experiment import (
    DEFAULT_CONDITIONS,
    METRICS_HEADER,
    Condition,
    ExperimentConfig,
    analyze,
    config_digest,
    config_from_dict,
    config_to_dict,
    default_pilots,
    load_config,
    read_metrics_csv,
    run_experiment,
    trial_policy,
    trial_seed,
)
from gazesteer.harness import SpeedTechnique, Task
from gazesteer.pilot import CALIBRATED_NOISY, Ideal, Multitask

ONE = ExperimentConfig(conditions=(Condition(SpeedTechnique.JOYSTICK, Task.RINGS),), pilots=default_pilots(1))


def test_default_shape():
    cfg = ExperimentConfig()
    assert len(cfg.conditions) == 4 and len(cfg.pilots) == 20
    assert {c.label for c in DEFAULT_CONDITIONS} == {"Rings Joy", "Targets Joy", "Rings SC", "Targets SC"}


def test_one_by_one(tmp_path):
    res = run_experiment(ONE, tmp_path)
    assert len(res.rows) == 1
    lines = (tmp_path / "metrics.csv").read_text().splitlines()
    assert lines[0] == ",".join(METRICS_HEADER) and len(lines) == 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_digest"] == config_digest(ONE)
    assert manifest["trials"][0]["trial_seed"] == trial_seed(1000, ONE.conditions[0])
    assert (tmp_path / "logs" / "rings_joystick__P01.log").exists()


def test_same_config_identical_metrics(tmp_path):
    cfg = ExperimentConfig(pilots=default_pilots(2), write_logs=False)
    a = run_experiment(cfg, tmp_path / "a")
    b = run_experiment(cfg, tmp_path / "b")
    assert (a.out_dir / "metrics.csv").read_bytes() == (b.out_dir / "metrics.csv").read_bytes()
    assert len(a.rows) == 8


def test_worker_pool_matches_serial(tmp_path):
    cfg = ExperimentConfig(pilots=default_pilots(2), write_logs=False)
    a = run_experiment(cfg, tmp_path / "a")
    b = run_experiment(ExperimentConfig(pilots=default_pilots(2), write_logs=False, workers=2), tmp_path / "b")
    assert (a.out_dir / "metrics.csv").read_bytes() == (b.out_dir / "metrics.csv").read_bytes()


def test_metrics_csv_roundtrip(tmp_path):
    res = run_experiment(ONE, tmp_path)
    back = read_metrics_csv((tmp_path / "metrics.csv").read_text())
    assert back[0].metrics == res.rows[0].metrics


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig(pilots=default_pilots(3, 7, Ideal()), dt=1 / 60)
    d = config_to_dict(cfg)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(d))
    back = load_config(p)
    assert back == cfg
    assert config_digest(back) == config_digest(cfg)


def test_digest_ignores_output_location():
    import dataclasses

    assert config_digest(ONE) == config_digest(dataclasses.replace(ONE, out="elsewhere", workers=3))
    assert config_digest(ONE) != config_digest(dataclasses.replace(ONE, dt=0.02))


@pytest.mark.parametrize("doc", [
    {"format_version": 1, "bogus": 1},
    {"format_version": 2},
    {"format_version": 1, "course": {"seed": 1, "colour": "red"}},
    {"format_version": 1, "course": {"generator": {"ringz": 3}}},
    {"format_version": 1, "conditions": [{"technique": "joystick", "task": "rings", "x": 1}]},
    {"format_version": 1, "conditions": [{"technique": "hoverboard", "task": "rings"}]},
    {"format_version": 1, "conditions": []},
    {"format_version": 1, "pilots": {"count": 0}},
    {"format_version": 1, "pilots": {"count": 2, "policy": {"kind": "ideal", "speed": 3}}},
    {"format_version": 1, "pilots": {"count": 2, "policy": {"kind": "telepathic"}}},
])
def test_config_fail_closed(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")


def test_course_file_source(tmp_path):
    from gazesteer.world import CourseGenSpec, dumps_course, generate_default_course

    f = tmp_path / "course.json"
    f.write_text(dumps_course(generate_default_course(CourseGenSpec(rings=3, balloons=2), seed=1)))
    cfg = config_from_dict({"format_version": 1, "course": {"file": str(f)},
                            "conditions": [{"technique": "joystick", "task": "targets"}], "pilots": {"count": 1}})
    res = run_experiment(cfg, tmp_path / "out")
    assert res.rows[0].metrics.rings_total == 3 and res.rows[0].metrics.balloons_total == 2


def test_trial_policy_wraps_targets():
    assert trial_policy(CALIBRATED_NOISY, Task.TARGETS) == Multitask(CALIBRATED_NOISY)
    assert trial_policy(CALIBRATED_NOISY, Task.RINGS) is CALIBRATED_NOISY


def test_analyze_handles_degenerate(tmp_path):
    res = run_experiment(ExperimentConfig(pilots=default_pilots(3), write_logs=False), tmp_path)
    a = analyze(res.rows)
    assert a["collision_events"].kw is None or a["collision_events"].kw.p >= 0
    assert a["completion_time"].kw is not None
    assert set(a["completion_time"].wilcoxon) <= {"Rings Joy vs Rings SC", "Targets Joy vs Targets SC"}
