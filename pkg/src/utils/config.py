"""
Configuration management for the incentive timing toolkit
Environment overrides, output locations and numeric defaults
"""

from pathlib import Path
from dotenv import load_dotenv
import hashlib
import os

# Load environment variables
load_dotenv()


class Config:
    """Application configuration"""

    # Project paths
    PROJECT_ROOT = Path(__file__).parent.parent.parent
    SCENARIO_DIR = PROJECT_ROOT / "scenarios"
    OUTPUT_DIR = Path(os.getenv("INCENTIVE_OUTPUT_DIR", PROJECT_ROOT / "output"))

    # Runtime
    LOG_LEVEL = os.getenv("INCENTIVE_LOG_LEVEL", "INFO")
    WORKERS = int(os.getenv("INCENTIVE_WORKERS", "1"))

    # Time discretization
    HORIZON = 10.0
    DT = 0.01           # internal integration step
    CONTROL_DT = 0.1    # control grid

    # Optimizer settings
    SEED = 42
    NLP_STARTS = 20
    SWITCH_STARTS = 50
    NLP_MAX_ITERS = 200
    NLP_TOL = 1e-6             # projected-step size that counts as stationary
    NLP_FLAT_TOL = 1e-12       # profit gain per iteration that counts as no progress
    SWITCH_MAX_ITERS = 400
    ARMIJO_CONTRACTION = 0.5
    ARMIJO_SLOPE = 1e-4
    ROUNDING_TOLERANCE = 1e-4

    # Forward-backward sweep
    FBS_DAMPING = 0.5
    FBS_MAX_ITERS = 100
    FBS_PROFIT_TOL = 1e-8

    # Strategy classification thresholds
    TERMINAL_FRACTION = 0.3
    ALWAYS_ON_FRACTION = 0.95

    # Agent-based validation
    ABM_REPAIR_FACTOR = 100
    ABM_POPULATIONS = (1000, 10000)
    ABM_REPLICAS = 50

    # Numerical tolerances
    SIMPLEX_TOL = 1e-10
    INTEGRATION_DRIFT_TOL = 1e-8

    # Seed offsets per purpose tag
    SEED_TAGS = ("nlp", "switch", "abm", "graph", "gradient")

    @classmethod
    def derive_seed(cls, seed: int, tag: str) -> int:
        """
        Derive a purpose-specific seed from the scenario seed

        Args:
            seed: Scenario seed
            tag: Purpose tag (one of SEED_TAGS)

        Returns:
            seed plus a stable offset for the tag
        """
        if tag not in cls.SEED_TAGS:
            raise ValueError(f"Unknown seed tag: {tag}. Supported: {cls.SEED_TAGS}")
        offset = int(hashlib.sha256(tag.encode("utf-8")).hexdigest()[:6], 16)
        return int(seed) + offset

    @classmethod
    def validate(cls):
        """Validate configuration and prepare the output directory"""
        if cls.WORKERS < 1:
            raise ValueError(
                f"INCENTIVE_WORKERS must be >= 1, got {cls.WORKERS}"
            )

        steps = cls.CONTROL_DT / cls.DT
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(
                f"CONTROL_DT ({cls.CONTROL_DT}) must be a multiple of DT ({cls.DT})"
            )

        # Create directories if not exist
        cls.OUTPUT_DIR.mkdir(exist_ok=True, parents=True)
        return True


if __name__ == "__main__":
    # Test configuration
    Config.validate()
    print(f"Project Root: {Config.PROJECT_ROOT}")
    print(f"Output Dir: {Config.OUTPUT_DIR}")
    print(f"Grid: dt={Config.DT}, control_dt={Config.CONTROL_DT}, T={Config.HORIZON}")
