import pytest

from bitshift_channel import JitterParams, build_joint_chain, make_source


@pytest.fixture(scope="session")
def cd_source():
    """The compact-disc style source: (2,10), truncated geometric ratio 0.658."""
    return make_source(2, 10, geometric=0.658)


@pytest.fixture(scope="session")
def small_joint():
    """(2,3) uniform source at eps=0.1; small enough for exhaustive oracles."""
    return build_joint_chain(make_source(2, 3), JitterParams(0.1))


@pytest.fixture(scope="session")
def small_joint_q25():
    """(2,3) uniform source at eps=0.25; used by the renewal cross-checks."""
    return build_joint_chain(make_source(2, 3), JitterParams(0.25))
