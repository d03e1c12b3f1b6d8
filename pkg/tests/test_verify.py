import math

import numpy as np
import pytest

from fpslab import verify
from fpslab.lattice import Cube, GridFunction
from fpslab.verify import (
    FunctionSpec,
    TestSuite,
    VerificationReport,
    WeightSpec,
    attach_references,
    bbm_sweep,
    check_dyadic_summing,
    check_embedding,
    check_fractional_ps,
    check_l1_oscillation,
    check_poincare_sobolev,
    dyadic_sum_norm,
    load_references,
    one_weight_suite,
    safe_ratio,
    sharpness_experiment,
    sharpness_function,
    smootherstep_profile,
)
from fpslab.weights import ConfigError, ExponentConfig

C = ExponentConfig


def single(name="affine", weight="const", n=256, d=1, param=0.0):
    return TestSuite([FunctionSpec(name)], [WeightSpec(weight, param)], {d: n})


def test_report_ratio_and_judge():
    rep = VerificationReport("x", C(), 8, 2.0, {"a": 2.0, "b": 0.5})
    assert rep.rhs == 1.0 and rep.ratio == 2.0
    assert rep.judge(1.5).passed is False
    assert rep.judge(None).passed is None
    assert safe_ratio(0.0, 0.0) == 0.0 and safe_ratio(1.0, 0.0) == math.inf


def test_poincare_examples():
    rep = check_poincare_sobolev(single(), C(d=1, p=2, q=2))[0]
    assert rep.experiment == "poincare_sobolev.subcritical"
    assert rep.ratio == pytest.approx(1 / math.sqrt(12), rel=1e-4)
    const = check_poincare_sobolev(single("const"), C(d=1, p=2, q=2))[0]
    assert const.ratio == 0.0
    with pytest.raises(ConfigError):
        check_poincare_sobolev(single(n=16, d=2), C(d=2, p=1, q=4))


def test_poincare_critical_refinement():
    ratios = []
    for n in (64, 128):
        rep = check_poincare_sobolev(single("affine", n=n, d=2), C(d=2, p=1, q=2))[0]
        assert rep.experiment == "poincare_sobolev.critical"
        ratios.append(rep.ratio)
    assert math.isfinite(ratios[0])
    assert abs(ratios[1] - ratios[0]) / ratios[1] < 0.01


def test_fractional_example():
    rep = check_fractional_ps(single(n=1024), C(d=1, p=1, q=1, r=1, s=0.5))[0]
    assert rep.rhs_components["seminorm"] == pytest.approx(8 / 3, rel=1e-12)
    assert rep.ratio == pytest.approx(3 / 32, rel=1e-5)
    assert check_fractional_ps(single("const"), C(d=1, p=1, q=1, r=1, s=0.5))[0].ratio == 0.0


def test_fractional_branch_errors():
    crit = C(d=1, p=2, q=2, r=2, s=0.5, alpha=0.5)
    with pytest.raises(ConfigError):
        check_fractional_ps(single(), crit, "i")
    with pytest.raises(ConfigError, match="p ≥ r"):
        check_fractional_ps(single(), C(d=1, p=2, q=2, r=3, s=0.5, alpha=0.5), "ii")
    with pytest.raises(ConfigError, match="p = 1 < r"):
        check_fractional_ps(single(), C(d=1, p=1, q=1, r=2, s=0.5, alpha=0.5), "iii")


def test_fractional_s_sweep_bounded():
    ratios = [check_fractional_ps(single("bump"), C(d=1, p=2, q=2, r=2, s=s))[0].ratio for s in (0.3, 0.5, 0.7, 0.9)]
    assert max(ratios) / min(ratios) < 4


def test_embedding_example_and_sweep():
    rep = check_embedding(single(n=1024), C(d=1, p=1, q=1, r=1, s=0.5))[0]
    assert rep.lhs == pytest.approx(8 / 3, rel=1e-12)
    assert rep.ratio == pytest.approx(4 / 3, rel=1e-9)
    ratios = [check_embedding(single("bump"), C(d=1, p=2, q=2, r=2, s=s))[0].ratio for s in (0.5, 0.7, 0.9, 0.95)]
    assert max(ratios) < 2 * ratios[0]
    with pytest.raises(ConfigError):
        check_embedding(single(), C(d=1, p=2, q=2, r=2, s=0.5, alpha=0.9))


def test_dyadic_summing_geometric_sum():
    Q = Cube.unit(1)
    one = GridFunction.constant(1.0, Q, 64)
    lhs = dyadic_sum_norm(one, one, one, 2, 2, 0.5, 1, 5)
    expected = sum(2 ** (-j / 2) for j in range(6))
    assert lhs == pytest.approx(expected, rel=1e-12)
    zero = GridFunction.constant(0.0, Q, 64)
    assert dyadic_sum_norm(zero, one, one, 2, 2, 0.5) == 0.0
    with pytest.raises(ConfigError):
        check_dyadic_summing(single(), C(d=1, p=2, q=2), 1, 0.0)


@pytest.mark.parametrize("d", [1, 2])
def test_dyadic_dilation_factor_bounded(d):
    suite = TestSuite([FunctionSpec("bump"), FunctionSpec("trig", 0)], [WeightSpec("const"), WeightSpec("step", 2.0)], {1: 64, 2: 16})
    one = check_dyadic_summing(suite, C(d=d, p=2, q=2), 1, 0.5)
    three = check_dyadic_summing(suite, C(d=d, p=2, q=2), 3, 0.5)
    for a, b in zip(one, three):
        assert 1 - 1e-12 <= b.ratio / a.ratio <= 3 ** (d / 2) * 1.5 ** 0.5


def test_l1_oscillation_affine():
    rep = check_l1_oscillation(single(n=1024), C(d=1, r=1, s=0.5))[0]
    # ||x - 1/2||_1 = 1/4, seminorm 8/3, bbm 1/2
    assert rep.ratio == pytest.approx(0.25 / (0.5 * 8 / 3), rel=1e-5)


def test_bbm_closed_form():
    Q = Cube.unit(1)
    f = GridFunction.from_callable(lambda x: x, Q, 512)
    one = GridFunction.constant(1.0, Q, 512)
    for s, prod in bbm_sweep(f, one, 1, 1, (0.5, 0.9)):
        assert prod == pytest.approx(2 / (2 - s), rel=1e-10)
    c = GridFunction.constant(2.0, Q, 64)
    assert all(v == 0 for _, v in bbm_sweep(c, GridFunction.constant(1.0, Q, 64), 1, 1, (0.3, 0.7)))


def test_profile_is_monotone_with_unit_variation():
    t = np.linspace(-1.5, 1.5, 3001)
    phi = smootherstep_profile(t)
    assert phi[0] == 1 and phi[-1] == 0
    assert np.all(np.diff(phi) <= 0)


def test_sharpness_small_grid():
    rows = sharpness_experiment(1, 1, (0.6, 0.65), 1024)
    assert rows[0].eps == 2 ** -6
    assert all(abs(r.grad_l1 - 1) < 0.02 for r in rows)
    assert rows[1].product > 0.5 * rows[0].product
    rows = sharpness_experiment(2, 2, (0.3, 0.33, 0.35), 1024)
    assert min(r.product for r in rows) > 0.5 * rows[0].product
    with pytest.raises(ConfigError, match="4/n"):
        sharpness_function(0.9, 1, 1024)
    with pytest.raises(ConfigError):
        sharpness_experiment(1, 1, (0.4,), 1024)


@pytest.mark.parametrize("kind,cfg,theorem", [
    ("gradient", C(d=1, p=2, q=2, u=1), lambda s: check_poincare_sobolev(s, C(d=1, p=2, q=2))),
    ("fractional", C(d=1, p=2, q=2, r=2, s=0.5, u=1), lambda s: check_fractional_ps(s, C(d=1, p=2, q=2, r=2, s=0.5))),
    ("embedding", C(d=1, p=2, q=2, r=2, s=0.5, u=1), lambda s: check_embedding(s, C(d=1, p=2, q=2, r=2, s=0.5))),
])
def test_one_weight_reduces_to_unweighted(kind, cfg, theorem):
    suite = TestSuite([FunctionSpec("affine"), FunctionSpec("trig", 1)], [WeightSpec("const")], {1: 128})
    ours = one_weight_suite(suite, cfg, kind)
    ref = theorem(suite)
    for a, b in zip(ours, ref):
        assert a.notes["branch_ratios"]["eps"] == pytest.approx(b.ratio, rel=1e-12)


def test_one_weight_step_and_power():
    suite = TestSuite([FunctionSpec("bump")], [WeightSpec("step", 2.0)], {1: 128})
    rep = one_weight_suite(suite, C(d=1, p=2, q=2, u=2), "gradient")[0]
    assert math.isfinite(rep.ratio)
    ratios = rep.notes["branch_ratios"]
    # the smallest branch factor gives the largest ratio
    assert ratios[rep.notes["branch"]] == max(ratios.values()) == rep.ratio
    # epsilon = 1 at u = 1 makes the 1/epsilon branch the smallest
    rep = one_weight_suite(suite, C(d=1, p=2, q=2, u=1), "gradient")[0]
    assert rep.notes["branch"] == "eps"
    for seed in range(10):
        suite = TestSuite([FunctionSpec("trig", seed)], [WeightSpec("power", 0.1 + 0.02 * seed)], {1: 64})
        rep = one_weight_suite(suite, C(d=1, p=2, q=2, r=2, s=0.5, u=1, p0=1.5), "embedding")[0]
        assert 0 < rep.ratio < math.inf


def test_branch_consistency_against_references():
    suite = TestSuite.default()
    cfg = C(d=1, p=2, q=2, r=2, s=0.5, alpha=0.5)
    ii = attach_references(check_fractional_ps(suite, cfg, "ii"))
    iii = attach_references(check_fractional_ps(suite, cfg, "iii"))
    assert all(r.passed for r in ii + iii)
    emb = C(d=1, p=2, q=2, r=2, s=0.5, p0=1.5)
    a = attach_references(check_embedding(suite, emb, "i"))
    b = attach_references(check_embedding(suite, emb, "i_ainf"))
    assert all(r.passed for r in a + b)


def test_refinement_stability_smooth_suite():
    suite_a = TestSuite([FunctionSpec("bump"), FunctionSpec("trig", 0)], [WeightSpec("const"), WeightSpec("step", 2.0)], {1: 128})
    suite_b = TestSuite(suite_a.functions, suite_a.weights, {1: 256})
    runs = [
        lambda s: check_poincare_sobolev(s, C(d=1, p=2, q=2)),
        lambda s: check_fractional_ps(s, C(d=1, p=2, q=2, r=2, s=0.7)),
        lambda s: check_embedding(s, C(d=1, p=2, q=2, r=2, s=0.5)),
        lambda s: check_dyadic_summing(s, C(d=1, p=2, q=2), 1, 0.5),
    ]
    for run in runs:
        for a, b in zip(run(suite_a), run(suite_b)):
            assert abs(b.ratio - a.ratio) / b.ratio < 0.10, (a.experiment, a.label)


def test_chained_inequalities_compose():
    suite = TestSuite([FunctionSpec("bump"), FunctionSpec("trig", 2)], [WeightSpec("const")], {1: 128})
    cfg = C(d=1, p=2, q=2, r=2, s=0.5)
    refs = load_references()
    left = check_fractional_ps(suite, cfg)
    right = check_embedding(suite, cfg)
    for a, b in zip(left, right):
        # the seminorm on the right of one is the left side of the other
        assert a.rhs_components["seminorm"] == pytest.approx(b.lhs, rel=1e-12)
        composed = a.lhs / (a.rhs / a.rhs_components["seminorm"] * b.rhs)
        assert composed == pytest.approx(a.ratio * b.ratio, rel=1e-12)
        ref_a = 1.25 * refs[a.key]
        ref_b = 1.25 * refs[b.key]
        if a.ratio <= ref_a and b.ratio <= ref_b:
            assert composed <= ref_a * ref_b


def test_alpha_degrades_monotonically():
    eps = [C(d=1, p=2, q=4, alpha=a).eps_gradient() for a in (0.0, 0.25, 0.5, 0.75)]
    assert all(x > y for x, y in zip(eps, eps[1:]))
    # d=2, p=1.5, q=6 is critical at alpha=0; every legal alpha > 0 stays rejected
    suite = single(n=16, d=2)
    assert check_poincare_sobolev(suite, C(d=2, p=1.5, q=6))[0].experiment == "poincare_sobolev.critical"
    for a in (0.1, 0.3, 0.45):
        with pytest.raises(ConfigError, match="epsilon"):
            check_poincare_sobolev(suite, C(d=2, p=1.5, q=6, alpha=a))


def test_characteristic_cap_filters_pairs(monkeypatch):
    suite = TestSuite([FunctionSpec("affine")], [WeightSpec("const"), WeightSpec("power", 0.3)], {1: 64})
    assert len(list(suite.cases(1))) == 2
    monkeypatch.setattr(verify, "CHARACTERISTIC_CAP", 1.01)
    assert [label for label, *_ in suite.cases(1)] == ["affine/const"]
