"""One test per acceptance criterion, each at its stated tolerance and runtime limit.

Every result line is also collected and printed in the terminal summary.
"""
import pytest

from gazesteer import acceptance
from gazesteer.speed import joystick_speed

RESULTS = []


def _run(check, *args, **kwargs):
    r = check(*args, **kwargs)
    RESULTS.append(r)
    print(r.line())
    for name, ok, exp, act, tol in r.subchecks:
        print(f"    {'PASS' if ok else 'FAIL'} {name}: expected {exp}; actual {act}; tolerance {tol}")
    return r


def test_criterion_1_free_look():
    assert _run(acceptance.check_free_look).passed


def test_criterion_2_alignment_sweep():
    assert _run(acceptance.check_alignment).passed


def test_criterion_3_speed_clamps():
    assert _run(acceptance.check_speed_clamps).passed


def test_criterion_4_traversal():
    assert _run(acceptance.check_traversal).passed


def test_criterion_5_multitask():
    assert _run(acceptance.check_multitask).passed


def test_criterion_6_statistics():
    r = _run(acceptance.check_statistics)
    assert r.passed, r.actual


def test_criterion_7_questionnaires():
    assert _run(acceptance.check_questionnaires).passed


def test_criterion_8_determinism():
    assert _run(acceptance.check_determinism).passed


def test_criterion_9_fixture_fidelity():
    assert _run(acceptance.check_fixtures).passed


# negative controls: the checks must be able to fail

def test_corrupted_clamp_is_caught():
    def broken(axis, cfg):
        return joystick_speed(axis, cfg) * 1.2

    r = acceptance.check_speed_clamps(n=10_000, joystick=broken)
    assert not r.passed and "6.0" in r.actual


def test_missing_fixture_is_caught(tmp_path):
    r = acceptance.check_fixtures(tmp_path)
    assert not r.passed and "FixtureMissing" in r.actual


def test_steering_that_ignores_trigger_is_caught():
    from gazesteer.steering import SteeringState, target_disc_for_hand
    from gazesteer.geometry import ray_disc_intersect
    from gazesteer.steering import DirectionSet

    def leaky(state, frame, cfg=None):
        if ray_disc_intersect(frame.gaze, target_disc_for_hand(frame.hand_origin, frame.hand_dir)) is not None:
            return SteeringState(frame.gaze.dir), [DirectionSet(frame.gaze.dir, frame.t)]
        return state, []

    assert not acceptance.check_free_look(n=20_000, step=leaky).passed
