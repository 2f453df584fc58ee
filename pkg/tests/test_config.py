from core.config import env_settings, get_settings, settings_scope


def test_defaults():
    s = env_settings()
    assert s.rho == 0.75
    assert s.divergence == 0.9
    assert s.tol_tail == 0.1
    assert s.ladder_base == 2.0


def test_environment_override(monkeypatch):
    monkeypatch.setenv("BERGDIST_MAX_CELLS", "1234")
    env_settings.cache_clear()
    try:
        assert env_settings().max_cells == 1234
    finally:
        env_settings.cache_clear()


def test_scope_is_restored():
    before = get_settings()
    with settings_scope(before.model_copy(update={"quad_tol": 1e-3})):
        assert get_settings().quad_tol == 1e-3
        with settings_scope(before.model_copy(update={"quad_tol": 1e-2})):
            assert get_settings().quad_tol == 1e-2
        assert get_settings().quad_tol == 1e-3
    assert get_settings() == before
