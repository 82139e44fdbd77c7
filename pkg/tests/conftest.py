import numpy as np
import pytest

from hjprop import catalog_lookup


def catalog_systems():
    """All four catalog entries with unit parameters."""
    return [
        catalog_lookup("free", {"m": 1.0}),
        catalog_lookup("free_ip", {"m": 1.0}),
        catalog_lookup("sho_ip", {"m": 1.0, "omega": 1.0}),
        catalog_lookup("linear", {"m": 1.0, "F": 1.0}),
    ]


def in_domain_times(system, n):
    """n times strictly inside the system's validity window, edges padded."""
    iv = system.t_domain[0]
    if np.isinf(iv.lo) and np.isinf(iv.hi):
        return np.linspace(-1.0, 1.0, n)
    if np.isinf(iv.hi):
        return np.linspace(iv.lo + 0.15, iv.lo + 2.15, n)
    pad = 0.15 * (iv.hi - iv.lo)
    return np.linspace(iv.lo + pad, iv.hi - pad, n)


def lattice(system, n_q=21, n_P=21, n_t=11, q_span=3.0, P_span=3.0):
    """(q, P, t) triples on the standard in-domain test lattice."""
    qs = np.linspace(-q_span, q_span, n_q)
    Ps = np.linspace(-P_span, P_span, n_P)
    ts = in_domain_times(system, n_t)
    return [(float(q), float(P), float(t)) for t in ts for q in qs for P in Ps]


@pytest.fixture(scope="session")
def free():
    return catalog_lookup("free", {"m": 1.0})


@pytest.fixture(scope="session")
def free_ip():
    return catalog_lookup("free_ip", {"m": 1.0})


@pytest.fixture(scope="session")
def sho_ip():
    return catalog_lookup("sho_ip", {"m": 1.0, "omega": 1.0})


@pytest.fixture(scope="session")
def linear():
    return catalog_lookup("linear", {"m": 1.0, "F": 1.0})
