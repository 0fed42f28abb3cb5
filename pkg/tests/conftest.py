import sys
import numpy as np
import pytest

from photonsim import kernels


@pytest.fixture(params=kernels.available_impls())
def impl(request):
    return request.param


def random_complex(rng, n, m=None):
    m = n if m is None else m
    return (rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))) / np.sqrt(2)


def random_symmetric(rng, n):
    A = random_complex(rng, n)
    return 0.5 * (A + A.T)


def random_tor_matrix(rng, m):
    """Hermitian 2m x 2m matrix with I - A positive definite for every reduction."""
    G = random_complex(rng, 2 * m)
    P = G @ G.conj().T + 0.5 * np.eye(2 * m)
    P /= np.linalg.norm(P, 2) * 1.05
    return np.eye(2 * m) - P


def haar_unitary(rng, n):
    Z = random_complex(rng, n)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def rel_err(a, b):
    return abs(a - b) / max(1e-300, abs(b))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
