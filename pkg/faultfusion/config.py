from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings for the fault-diagnosis toolkit."""

    model_config = SettingsConfigDict(env_prefix="FAULTFUSION_", env_file=".env", env_file_encoding="utf-8")

    app_name: str = "faultfusion"
    log_level: str = "INFO"
    # Level for the PIL logger, which logs every PNG chunk at DEBUG while spectrogram
    # previews are written. Kept apart from ``log_level`` for that reason.
    third_party_log_level: str = "WARNING"
    logs_path: str = "./logs"
    # Default parent directory for run artifacts when ``--out`` is not given. Each
    # command writes into ``<output_path>/<command>-<config hash prefix>/``.
    output_path: str = "./runs"
    # Directory holding the JSON run configs shipped with a checkout; used only to
    # resolve a bare config name such as ``benchmark`` given to ``--config``.
    configs_path: str = "./configs"


settings = Settings()
