from __future__ import annotations

import pytest

from fracmeasure.fem import assemble_mass, assemble_stiffness
from fracmeasure.mesh import build_structured_square
from fracmeasure.spectral import FracParams, decompose


@pytest.fixture(scope="session")
def square2():
    return build_structured_square(2)


@pytest.fixture(scope="session")
def square8():
    return build_structured_square(8)


@pytest.fixture(scope="session")
def square16():
    return build_structured_square(16)


@pytest.fixture(scope="session")
def square32():
    return build_structured_square(32)


@pytest.fixture(scope="session")
def eig8(square8):
    return decompose(square8)


@pytest.fixture(scope="session")
def eig16(square16):
    return decompose(square16)


@pytest.fixture(scope="session")
def eig32(square32):
    return decompose(square32)


@pytest.fixture(scope="session")
def matrices16(square16):
    return assemble_stiffness(square16), assemble_mass(square16)


@pytest.fixture(scope="session")
def params():
    return FracParams(s=0.65, theta=0.4)
