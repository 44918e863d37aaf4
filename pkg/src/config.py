"""
Run configuration and library-wide defaults.
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator
from sympy import isprime

DEFAULT_PRIME = 1000003
DEFAULT_BUDGET_DIGITS = 10**6
DEFAULT_HORIZON = 8
DEFAULT_SAMPLE_BOX = 50
DEFAULT_MATRIX_BOX = 5
DEFAULT_MAX_TRIES = 50
DEFAULT_STABILITY_TRIALS = 50
# twelve singular fibres with at most ten components each, plus xi and m*xi
DEFAULT_IRR_BOUND = 122


class RunConfig(BaseModel):
    """Options shared by every CLI command; embedded verbatim in reports."""

    model_config = ConfigDict(frozen=True)

    seed: int = 0
    horizon: int = Field(default=DEFAULT_HORIZON, ge=2)
    sample_box: int = Field(default=DEFAULT_SAMPLE_BOX, ge=1)
    modp_prime: Optional[int] = DEFAULT_PRIME
    coefficient_budget: int = Field(default=DEFAULT_BUDGET_DIGITS, ge=1)
    output_path: Optional[str] = None

    @field_validator("modp_prime")
    @classmethod
    def _check_prime(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and (value <= 3 or not isprime(value)):
            raise ValueError(f"modp_prime must be a prime > 3, got {value}")
        return value
