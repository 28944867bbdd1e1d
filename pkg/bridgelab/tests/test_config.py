"""
Tests for environment settings and run config files.
"""

import json

import pytest
from pydantic import ValidationError

from bridgelab import config
from bridgelab.logic.errors import DomainError


@pytest.fixture
def fresh_settings():
    config.get_settings.cache_clear()
    yield config.get_settings
    config.get_settings.cache_clear()


def test_settings_from_environment(monkeypatch, fresh_settings):
    monkeypatch.setenv("BRIDGELAB_THREADS", "3")
    monkeypatch.setenv("BRIDGELAB_BLOCK_SIZE", "250")
    monkeypatch.setenv("BRIDGELAB_LOG_LEVEL", "debug")
    monkeypatch.setenv("BRIDGELAB_PROGRESS", "yes")
    settings = fresh_settings()
    assert (settings.threads, settings.block_size, settings.log_level, settings.progress) == (3, 250, "DEBUG", True)


def test_settings_defaults(monkeypatch, fresh_settings):
    for name in ("BRIDGELAB_THREADS", "BRIDGELAB_BLOCK_SIZE", "BRIDGELAB_LOG_LEVEL", "BRIDGELAB_PROGRESS"):
        monkeypatch.delenv(name, raising=False)
    settings = fresh_settings()
    assert settings.threads >= 1
    assert settings.block_size == 500
    assert not settings.progress


def test_run_config_keeps_only_given_keys(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"steps": 8, "seed": 3}), encoding="utf-8")
    assert config.load_run_config(path) == {"steps": 8, "seed": 3}


def test_run_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"stepz": 8}), encoding="utf-8")
    with pytest.raises(ValidationError):
        config.load_run_config(path)


def test_run_config_must_be_an_object(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(DomainError):
        config.load_run_config(path)
