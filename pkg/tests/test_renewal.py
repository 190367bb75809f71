import pytest

from bitshift_channel import (
    DegenerateRenewal,
    JitterParams,
    ResourceLimit,
    build_joint_chain,
    make_source,
    renewal_base_probability,
    renewal_entropy_estimate,
    return_word_probabilities,
)
from bitshift_channel.refine import CylinderCalculator


def test_base_probability_small_instance(small_joint_q25):
    assert renewal_base_probability(small_joint_q25) == pytest.approx(0.03125, abs=1e-12)


def test_base_probability_cd_instance(cd_source):
    joint = build_joint_chain(cd_source, JitterParams(0.1))
    assert renewal_base_probability(joint) == pytest.approx(0.003500950400259284, abs=1e-12)


def test_base_probability_matches_stationary_sum(small_joint_q25):
    direct = sum(
        mass
        for letter, mass in zip(small_joint_q25.outputs, small_joint_q25.stationary)
        if letter == 0
    )
    assert renewal_base_probability(small_joint_q25) == pytest.approx(direct, abs=1e-15)


def test_eps_zero_degenerates(cd_source):
    joint = build_joint_chain(cd_source, JitterParams(0.0))
    with pytest.raises(DegenerateRenewal):
        renewal_base_probability(joint)
    with pytest.raises(DegenerateRenewal):
        renewal_entropy_estimate(joint, 3)


def test_immediate_return_word_is_forbidden(small_joint_q25):
    table = return_word_probabilities(small_joint_q25, 0)
    assert len(table.entries) == 1
    word, prob = table.entries[0]
    assert word == (0, 0)
    assert prob == 0.0


def test_coverage_nondecreasing_and_bounded(small_joint_q25):
    previous = -1.0
    for r_max in (0, 2, 4, 6):
        table = return_word_probabilities(small_joint_q25, r_max)
        assert previous - 1e-15 <= table.coverage <= 1.0 + 1e-12
        previous = table.coverage


def test_return_word_probabilities_match_engine_cylinders(small_joint_q25):
    calc = CylinderCalculator(small_joint_q25)
    table = return_word_probabilities(small_joint_q25, 5)
    assert len(table.entries) > 100
    for word, prob in table.entries:
        assert prob == pytest.approx(calc.probability(word), abs=1e-12)


def test_estimate_monotone_in_r_max(small_joint_q25):
    values = [renewal_entropy_estimate(small_joint_q25, r)[0] for r in (2, 4, 6, 8)]
    for a, b in zip(values, values[1:]):
        assert b >= a - 1e-12


def test_small_eps_collapses_coverage():
    src = make_source(2, 3)
    fixed_r = 6
    cov = {}
    for eps in (0.25, 0.05):
        joint = build_joint_chain(src, JitterParams(eps))
        cov[eps] = return_word_probabilities(joint, fixed_r).coverage
    assert cov[0.05] < cov[0.25]
    assert cov[0.05] < 0.05


def test_resource_limit_on_blowup(small_joint_q25):
    with pytest.raises(ResourceLimit):
        return_word_probabilities(small_joint_q25, 12, max_words=2_000)


def test_probability_floor_trades_coverage_for_memory(small_joint_q25):
    exact = return_word_probabilities(small_joint_q25, 6)
    floored = return_word_probabilities(small_joint_q25, 6, floor=1e-4)
    assert len(floored.entries) < len(exact.entries)
    assert floored.coverage <= exact.coverage + 1e-15
