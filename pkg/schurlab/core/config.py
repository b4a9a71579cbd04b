from pydantic_settings import BaseSettings
from typing import Optional
from dotenv import load_dotenv

load_dotenv()

class Settings(BaseSettings):
    # Application Settings
    app_name: str = "SchurLab"
    app_version: str = "0.1.0"
    log_level: str = "INFO"
    log_dir: str = "logs"
    log_to_file: bool = False
    results_dir: str = "results"

    # Parallelism
    threads: int = 4

    # Numerical tolerances
    node_tol_rel: float = 1e-12
    verify_tol: float = 1e-8

    # Experiment defaults
    default_seed: int = 0
    restarts: int = 16
    iters: int = 60
    oracle_samples: int = 1_000_000
    oracle_chunk: int = 65_536

    # Partition of unity
    partition_sharpness: float = 64.0

    # Fourier grids
    fourier_points: int = 4096
    fourier_points_3d: int = 1024
    fourier_half_width: float = 20.0
    fourier_decay_tol: float = 1e-10

    # Growth guards
    q_table_max_n: int = 6
    decomposition_max_n: int = 3
    max_dim: int = 256

    class Config:
        env_file = ".env"
        env_prefix = "SCHURLAB_"
        case_sensitive = False
        extra = "allow"

# Global settings instance
settings = Settings()


def thread_cap(requested: Optional[int] = None) -> int:
    """Worker count bounded by SCHURLAB_THREADS."""
    cap = max(1, settings.threads)
    if requested is None:
        return cap
    return max(1, min(cap, requested))
