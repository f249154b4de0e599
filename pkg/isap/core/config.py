from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # App
    PROJECT_NAME: str = "ISAP Toolkit"
    VERSION: str = "0.1.0"

    # Logging
    LOG_LEVEL: str = "INFO"

    # Artifacts
    OUTPUT_DIR: str = "runs"
    DEFAULT_SEED: int = 0

    # Compute
    TRAIN_WORKERS: int = 1
    EVAL_BATCH_SIZE: int = 128

    # Debug
    DEBUG: bool = False

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="ISAP_",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
