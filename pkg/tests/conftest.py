import textwrap

import pytest

LINEAR_CONFIG = """
[problem]
a = 0
alpha = 0.5
beta = 0.5
x0 = 1
h = 1
b = 50
k = -1/4
rhs = x

[hypotheses]
M = 51
A = 1

[numerics]
N = 128
Q = 64
tol = 1e-8
l_override = 0.5
"""

ZERO_CONFIG = """
[problem]
a = 0
alpha = 0.5
beta = 0.5
x0 = 3
h = 10
b = 8
k = -1/3
rhs = 0

[numerics]
N = 16
Q = 8
"""


@pytest.fixture
def write_config(tmp_path):
    def write(text: str, name: str = "run.ini"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text))
        return path

    return write
