from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Lab settings loaded from environment variables (prefix ASEPLAB_)."""

    model_config = SettingsConfigDict(
        env_prefix="ASEPLAB_",
        case_sensitive=False,
        validate_assignment=True,
    )

    # Arithmetic
    precision_bits: int = Field(default=128, ge=64)
    series_tol: float = 1e-12
    singular_tol: float = 1e-13

    # Quadrature
    quad_tol: float = 1e-12
    gl_nodes: int = 32
    quad_max_depth: int = 40

    # Signed measures
    admissibility_tol: float = 1e-9
    mass_tol: float = 1e-8
    mass_floor: float = 1e-13
    nested_cap: int = 6
    kernel_cache_digits: int = 12
    multi_backend: str = "projection"  # projection | nested

    # Exact solver
    solver_cap: int = 14
    dense_solver_max: int = 12
    extended_solver_max: int = 6

    # Limit measures
    epsilon_safety: float = 0.9
    epsilon_cap: float = 1.0
    negative_mass_tol: float = 1e-8
    gf_retries: int = 3

    # Execution
    max_jobs: int = 4
    database_path: Optional[str] = None
    log_level: str = "INFO"

    @property
    def database_file(self) -> Optional[Path]:
        """Ledger location as Path, parent directory created on demand."""
        if not self.database_path:
            return None
        path = Path(self.database_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def overrides(self) -> dict:
        """Values differing from the defaults, for shipping to worker processes."""
        defaults = Settings.model_construct()
        return {
            name: getattr(self, name)
            for name in Settings.model_fields
            if getattr(self, name) != getattr(defaults, name)
        }

    def apply(self, values: dict) -> None:
        for name, value in values.items():
            if name in Settings.model_fields and value is not None:
                setattr(self, name, value)


settings = Settings()
