"""Run configuration shared by the CLI and the experiment drivers."""

import dataclasses
import os
from dataclasses import dataclass, field

from .errors import ValidationError

ENV_PREFIX = "POINCARE_"


@dataclass(frozen=True)
class RunConfig:
    n_points: int = 4001
    width: float = 10.0
    quad_width: float = 12.0
    quad_tol: float = 1e-9
    atom_cap: int = 200_000
    merge_tol: float = 1e-9
    degree: int = 8
    levels: int = 6
    scan_points: int = 4001
    out_dir: str = field(default=".", compare=False)
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 101 or self.n_points % 2 == 0:
            raise ValidationError("must be odd and >= 101", field="n_points")
        for name in ("width", "quad_width", "quad_tol", "merge_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError("must be positive", field=name)
        if self.atom_cap < 1:
            raise ValidationError("must be positive", field="atom_cap")
        if not 1 <= self.degree <= 12:
            raise ValidationError("must be in [1, 12]", field="degree")
        if self.levels < 0:
            raise ValidationError("must be non-negative", field="levels")
        if self.scan_points < 3:
            raise ValidationError("must be at least 3", field="scan_points")

    def to_dict(self):
        d = dataclasses.asdict(self)
        d.pop("out_dir")
        return d

    @classmethod
    def from_env(cls, environ=None, **overrides):
        """Build a config from ``POINCARE_*`` variables, then explicit overrides.

        Overrides whose value is None are ignored so argparse namespaces can be
        passed through unchanged.
        """
        environ = os.environ if environ is None else environ
        kwargs = {}
        for f in dataclasses.fields(cls):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is None:
                continue
            try:
                kwargs[f.name] = _coerce(f.type, raw)
            except ValueError:
                raise ValidationError(f"cannot parse {raw!r}", field=ENV_PREFIX + f.name.upper())
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)


def _coerce(type_name, raw):
    type_name = type_name if isinstance(type_name, str) else type_name.__name__
    if type_name == "int":
        return int(raw)
    if type_name == "float":
        return float(raw)
    return raw
