import pytest

from prefloc.instance import CandidateSite, DemandPoint, Instance, compute_bounds, generate_instance


@pytest.fixture
def tiny_instance():
    """Three unit-weight demand points and two sites; radii 1 and 2.5."""
    demand = (
        DemandPoint(1, 0.0, 0.0, 1.0),
        DemandPoint(2, 2.0, 0.0, 1.0),
        DemandPoint(3, 0.0, 2.0, 1.0),
    )
    sites = (CandidateSite(1, 0.0, 0.0), CandidateSite(2, 2.0, 0.0))
    return Instance(demand, sites, 1.0, 2.5)


@pytest.fixture(scope="session")
def desk_instance():
    return generate_instance(q=40, m=20, seed=3)


@pytest.fixture(scope="session")
def desk_bounds(desk_instance):
    return compute_bounds(desk_instance, p=3, method="exhaustive")
