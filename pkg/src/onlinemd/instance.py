"""Problem instances: objective sequence, constraint, geometry, start point."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, InputError
from .oracles import MaxAffineConstraint, lipschitz_bound, oracle_from_dict
from .prox import ProxSetup

FORMAT_TAG = "onlinemd.instance/1"


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Minimize the mean of ``objectives`` over the setup's set subject to ``constraint <= 0``.

    ``M`` defaults to the analytic Lipschitz bound of all oracles in the
    setup's norm.  Simplex start points are nudged into the interior.
    """

    objectives: tuple
    constraint: MaxAffineConstraint
    setup: ProxSetup
    x0: np.ndarray
    M: float | None = None
    label: str = field(default="")

    def __post_init__(self):
        objectives = tuple(self.objectives)
        if not objectives:
            raise InputError("instance needs at least one objective")
        n = self.setup.dimension
        for o in (*objectives, self.constraint):
            if o.dimension != n:
                raise InputError(f"{o!r} has dimension {o.dimension}, setup has {n}")
        object.__setattr__(self, "objectives", objectives)
        x0 = np.asarray(self.x0, dtype=float)
        if not self.setup.contains(x0):
            raise DomainError("x0 is outside the feasible set")
        x0 = self.setup.interior(x0)
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if self.M is None:
            object.__setattr__(self, "M", lipschitz_bound(self))
        elif not self.M >= 0:
            raise InputError(f"M must be non-negative, got {self.M}")
        else:
            object.__setattr__(self, "M", float(self.M))

    @property
    def dimension(self) -> int:
        return self.setup.dimension

    @property
    def theta0(self) -> float:
        return self.setup.theta0

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "label": self.label,
            "setup": self.setup.to_config(),
            "x0": self.x0.tolist(),
            "M": self.M,
            "constraint": self.constraint.to_dict(),
            "objectives": [o.to_dict() for o in self.objectives],
        }

    @classmethod
    def from_dict(cls, data: dict) -> ProblemInstance:
        if data.get("format") != FORMAT_TAG:
            raise InputError(f"not an instance record (format={data.get('format')!r})")
        return cls(
            objectives=[oracle_from_dict(o) for o in data["objectives"]],
            constraint=oracle_from_dict(data["constraint"]),
            setup=ProxSetup.from_config(data["setup"]),
            x0=data["x0"],
            M=data["M"],
            label=data.get("label", ""),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> ProblemInstance:
        return cls.from_dict(json.loads(Path(path).read_text()))
