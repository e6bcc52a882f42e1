import os

from backend.config import load_settings


def test_defaults(monkeypatch, tmp_path):
    for name in ('WPT_NOMA_WORKERS', 'WPT_NOMA_LOG_LEVEL', 'WPT_NOMA_HOST', 'WPT_NOMA_PORT'):
        monkeypatch.delenv(name, raising=False)
    settings = load_settings(tmp_path / 'missing.env')
    assert settings.workers == max(1, os.cpu_count() or 1)
    assert settings.log_level == 'INFO'
    assert settings.port == 5000


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv('WPT_NOMA_WORKERS', '3')
    monkeypatch.setenv('WPT_NOMA_LOG_LEVEL', 'debug')
    monkeypatch.setenv('WPT_NOMA_PORT', '8080')
    settings = load_settings(tmp_path / 'missing.env')
    assert (settings.workers, settings.log_level, settings.port) == (3, 'DEBUG', 8080)


def test_bad_values_fall_back(monkeypatch, tmp_path):
    monkeypatch.setenv('WPT_NOMA_WORKERS', '0')
    monkeypatch.setenv('WPT_NOMA_LOG_LEVEL', 'loud')
    monkeypatch.setenv('WPT_NOMA_PORT', 'http')
    settings = load_settings(tmp_path / 'missing.env')
    assert (settings.workers, settings.log_level, settings.port) == (1, 'INFO', 5000)


def test_dotenv_file_does_not_override_the_environment(monkeypatch, tmp_path):
    env = tmp_path / '.env'
    env.write_text('WPT_NOMA_PORT=6000\nWPT_NOMA_HOST=127.0.0.1\n')
    monkeypatch.setenv('WPT_NOMA_PORT', '7000')
    # registered so the value loaded from the file is removed afterwards
    monkeypatch.setenv('WPT_NOMA_HOST', 'placeholder')
    monkeypatch.delenv('WPT_NOMA_HOST')
    settings = load_settings(env)
    assert settings.port == 7000
    assert settings.host == '127.0.0.1'
