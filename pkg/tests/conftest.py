import functools

import pytest

from fraclap import assemble, make_discretization, make_domain


@functools.lru_cache(maxsize=32)
def interval_op(s=0.5, m=255, a=-1.0, b=1.0):
    d = make_domain("interval", a=a, b=b)
    return d, assemble(make_discretization(d, n_interior=m), s)


@functools.lru_cache(maxsize=8)
def disk_op(s=0.5, m=33, R=1.0):
    d = make_domain("disk", R=R, boundary_nodes=128)
    return d, assemble(make_discretization(d, n_interior=m), s)


@pytest.fixture(scope="session")
def op1d():
    return interval_op()


@pytest.fixture(scope="session")
def op2d():
    return disk_op()
