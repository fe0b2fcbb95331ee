from fractions import Fraction

import pytest

from fairsched.core import ResourceVector

# the worked example cluster: 20 cpu, 40 GB
EXAMPLE_TOTALS = ResourceVector.of(20, 40 * 1024)
TASK_A = ResourceVector.of(1, 4096)
TASK_B = ResourceVector.of(2, 1024)


@pytest.fixture
def example_totals():
    return EXAMPLE_TOTALS


def frac(x) -> Fraction:
    return Fraction(x)
