import numpy as np
import pytest

from sqgbox.basis import DomainSpec, SpectralField, build_basis


@pytest.fixture(scope="session")
def basis_j2():
    return build_basis(DomainSpec(J=2))


@pytest.fixture(scope="session")
def basis_j4():
    return build_basis(DomainSpec(J=4))


@pytest.fixture(scope="session")
def basis_j6():
    return build_basis(DomainSpec(J=6))


def random_field_on(basis, seed=0, decay=1.0):
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(basis.size) * basis.lambdas ** (-decay / 2.0)
    return SpectralField(coeffs, basis)
