from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

Pair = list[float]

COMMANDS = ("basis", "pairing", "reduce", "flow", "ba", "verify")
Command = Literal["basis", "pairing", "reduce", "flow", "ba", "verify"]


def _check_lengths(rows: list[list[float]], n: int, what: str) -> list[list[float]]:
    for row in rows:
        if len(row) != n:
            raise ValueError(f"each {what} entry needs {n} numbers, got {row}")
    return rows


class DifferentialInput(BaseModel):
    """(a(x) + b(x) y) / prod (x - root)^mult dx, coefficients ascending as [re, im] pairs."""

    a: list[Pair] = Field(default_factory=lambda: [[0.0, 0.0]])
    b: list[Pair] = Field(default_factory=lambda: [[0.0, 0.0]])
    poles: list[list[float]] = Field(default_factory=list, description="[x_re, x_im, multiplicity]")

    @field_validator("a", "b")
    @classmethod
    def _pairs(cls, v):
        return _check_lengths(v, 2, "coefficient")

    @field_validator("poles")
    @classmethod
    def _poles(cls, v):
        _check_lengths(v, 3, "pole")
        for row in v:
            if row[2] < 1 or int(row[2]) != row[2]:
                raise ValueError(f"pole multiplicity must be a positive integer, got {row[2]}")
        return v


class CurveInput(BaseModel):
    P: list[Pair] = Field(..., min_length=4, description="Ascending coefficients of P as [re, im] pairs")
    D: list[list[float]] = Field(default_factory=list, description="Points [x_re, x_im, y_re, y_im]")
    D0: list[list[float]] = Field(default_factory=list)
    pp: list[Pair] = Field(default_factory=list, description="Residues at the points of D0")
    samples: list[list[float]] = Field(default_factory=list)
    differentials: list[DifferentialInput] = Field(default_factory=list)
    theta: Optional[DifferentialInput] = None

    @field_validator("P", "pp")
    @classmethod
    def _pairs(cls, v):
        return _check_lengths(v, 2, "coefficient")

    @field_validator("D", "D0", "samples")
    @classmethod
    def _points(cls, v):
        return _check_lengths(v, 4, "point")


class JobSpec(BaseModel):
    command: Command
    input: Optional[str] = None
    output: Optional[str] = None
    tol: Optional[float] = Field(None, gt=0, lt=1e-2, description="Override for residue and pairing tolerances")
    steps: int = Field(100, ge=1)
    t_end: float = Field(1.0, ge=0)
    seed: int = 0
    format: Literal["json", "csv"] = "json"


class JobRequest(BaseModel):
    input: Optional[CurveInput] = None
    tol: Optional[float] = Field(None, gt=0, lt=1e-2)
    steps: int = Field(100, ge=1)
    t_end: float = Field(1.0, ge=0)
    seed: int = 0
    format: Literal["json", "csv"] = "json"


class PropertyResult(BaseModel):
    name: str
    passed: bool
    max_error: float
    detail: str = ""


class JobResponse(BaseModel):
    run_id: str
    command: str
    exit_code: int
    report: dict
    files: list[str] = Field(default_factory=list)
