import pytest

from src.kernels.base import QuadratureSpec
from src.settings import Settings, get_settings


@pytest.fixture(autouse=True)
def _fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def test_defaults():
    settings = Settings()
    assert settings.log_level == "INFO"
    assert settings.uniform_times == [10.0, 20.0, 40.0, 80.0]
    assert settings.finite_volumes == [16, 32, 64]
    assert settings.max_scan_dimension == 4
    assert settings.weighted_samples == 6
    assert settings.weighted_pairs == 8
    assert settings.quadrature_spec() == QuadratureSpec()


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("LATTICE_TOLERANCE", "1e-10")
    monkeypatch.setenv("LATTICE_BASE_POINTS", "64")
    monkeypatch.setenv("LATTICE_UNIFORM_TIMES", "5, 10,20")
    monkeypatch.setenv("LATTICE_FINITE_VOLUMES", "8,16")
    settings = get_settings()
    spec = settings.quadrature_spec()
    assert spec.tolerance == 1e-10
    assert spec.base_points == 64
    assert settings.uniform_times == [5.0, 10.0, 20.0]
    assert settings.finite_volumes == [8, 16]


def test_truncation_policy_from_environment(monkeypatch):
    monkeypatch.setenv("LATTICE_TRUNCATION_MARGIN", "3")
    policy = get_settings().truncation_policy()
    assert policy.margin == 3
    assert policy.max_radius == 2048
