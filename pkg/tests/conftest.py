import numpy as np
import pytest

from glra.solver import GlraProblem


@pytest.fixture
def tied_problem():
    """2x2 identity target with anisotropic 2x3 factors.

    The projected matrix is the identity, so at r=1 the two tie branches
    give minimisers of Frobenius norm 1 and 4; the optimal objective is 1.
    """
    b = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.0]])
    return GlraProblem(m=np.eye(2), b=b, c=b.T.copy(), r=1)


@pytest.fixture
def x_branch_a():
    x = np.zeros((3, 3))
    x[0, 0] = 1.0
    return x


@pytest.fixture
def x_branch_b():
    x = np.zeros((3, 3))
    x[1, 1] = 4.0
    return x


def branch_member(x_canonical, alpha):
    """Pad a canonical branch solution with the five free entries."""
    x = x_canonical.copy()
    x[0, 2], x[1, 2], x[2, 0], x[2, 1], x[2, 2] = alpha
    return x
