"""Shared vocabulary: units, populations, sampling-shape specs, samples and estimates.

Populations and samples are stored column-wise in read-only numpy arrays so
that Monte Carlo studies over 10^5-unit populations stay cheap; the
per-unit ``Unit`` / ``SampleRecord`` views are built on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np


class ValidationError(ValueError):
    """Input data or configuration violates a documented constraint."""


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Unit:
    outcome: float
    true_degree: int
    reported_degree: int
    group: Optional[int] = None

    def __post_init__(self):
        if self.true_degree < 1 or self.reported_degree < 1:
            raise ValidationError(
                f"degrees must be >= 1 (got true={self.true_degree}, "
                f"reported={self.reported_degree})"
            )


@dataclass(frozen=True, eq=False)
class Population:
    """A finite population stored as parallel arrays.

    ``group`` holds -1 for units without a group label.
    """

    outcome: np.ndarray
    true_degree: np.ndarray
    reported_degree: np.ndarray
    K: int
    outcome_bounds: Tuple[float, float] = (0.0, 1.0)
    group: Optional[np.ndarray] = None

    def __post_init__(self):
        y = _frozen(self.outcome, np.float64)
        td = _frozen(self.true_degree, np.int64)
        rd = _frozen(self.reported_degree, np.int64)
        if y.ndim != 1 or y.size == 0:
            raise ValidationError("population must be a nonempty 1-D collection of units")
        if td.shape != y.shape or rd.shape != y.shape:
            raise ValidationError("outcome and degree arrays must have equal length")
        if self.K < 1:
            raise ValidationError(f"K must be a positive integer, got {self.K}")
        for name, d in (("true_degree", td), ("reported_degree", rd)):
            if d.min() < 1 or d.max() > self.K:
                raise ValidationError(f"{name} outside 1..{self.K}")
        lo, hi = (float(b) for b in self.outcome_bounds)
        if not lo <= hi:
            raise ValidationError(f"invalid outcome bounds {self.outcome_bounds}")
        if y.min() < lo or y.max() > hi:
            raise ValidationError(f"outcome outside declared bounds [{lo}, {hi}]")
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "true_degree", td)
        object.__setattr__(self, "reported_degree", rd)
        object.__setattr__(self, "outcome_bounds", (lo, hi))
        if self.group is not None:
            g = _frozen(self.group, np.int64)
            if g.shape != y.shape:
                raise ValidationError("group array must match population length")
            object.__setattr__(self, "group", g)

    @classmethod
    def from_units(
        cls,
        units: Iterable[Unit],
        K: Optional[int] = None,
        outcome_bounds: Tuple[float, float] = (0.0, 1.0),
    ) -> "Population":
        units = list(units)
        if not units:
            raise ValidationError("population must be nonempty")
        td = [u.true_degree for u in units]
        rd = [u.reported_degree for u in units]
        if K is None:
            K = max(max(td), max(rd))
        group = None
        if any(u.group is not None for u in units):
            group = [-1 if u.group is None else u.group for u in units]
        return cls([u.outcome for u in units], td, rd, K, outcome_bounds, group)

    def __len__(self) -> int:
        return self.outcome.size

    @property
    def size(self) -> int:
        return self.outcome.size

    @property
    def units(self) -> Tuple[Unit, ...]:
        g = self.group
        return tuple(
            Unit(
                float(self.outcome[i]),
                int(self.true_degree[i]),
                int(self.reported_degree[i]),
                None if g is None or g[i] < 0 else int(g[i]),
            )
            for i in range(self.size)
        )

    def with_reported_degree(self, reported: Sequence[int]) -> "Population":
        return Population(
            self.outcome, self.true_degree, reported, self.K, self.outcome_bounds, self.group
        )


# --- sampling-probability shapes, known up to scale -------------------------


@dataclass(frozen=True)
class Power:
    alpha: float = 1.0


@dataclass(frozen=True)
class Constant:
    pass


@dataclass(frozen=True)
class Table:
    values: Mapping[int, float]

    def __post_init__(self):
        vals = {int(k): float(v) for k, v in dict(self.values).items()}
        if not vals:
            raise ValidationError("table f-spec needs at least one degree class")
        bad = {k: v for k, v in vals.items() if not (v > 0 and np.isfinite(v))}
        if bad:
            raise ValidationError(f"table f-spec values must be positive, got {bad}")
        if min(vals) < 1:
            raise ValidationError("table f-spec degree classes must be >= 1")
        object.__setattr__(self, "values", dict(sorted(vals.items())))

    def __hash__(self):
        return hash(tuple(self.values.items()))

    def scaled(self, factor: float) -> "Table":
        return Table({k: v * factor for k, v in self.values.items()})


FSpec = Union[Power, Constant, Table]


def f_eval(spec: FSpec, k: int) -> float:
    """Unscaled shape value f(k)."""
    if k < 1:
        raise ValidationError(f"degree class must be >= 1, got {k}")
    if isinstance(spec, Power):
        return float(k) ** spec.alpha
    if isinstance(spec, Constant):
        return 1.0
    if isinstance(spec, Table):
        try:
            return spec.values[int(k)]
        except KeyError:
            raise ValidationError(f"f-spec table has no entry for degree class {k}") from None
    raise TypeError(f"not an f-spec: {spec!r}")


def f_values(spec: FSpec, degrees: np.ndarray) -> np.ndarray:
    """Vectorized ``f_eval`` over an integer degree array."""
    d = np.asarray(degrees)
    if d.size and d.min() < 1:
        raise ValidationError("degree classes must be >= 1")
    if isinstance(spec, Power):
        return d.astype(np.float64) ** spec.alpha
    if isinstance(spec, Constant):
        return np.ones(d.shape, dtype=np.float64)
    if isinstance(spec, Table):
        lut = np.zeros(max(int(d.max(initial=0)), max(spec.values)) + 1)
        for k, v in spec.values.items():
            lut[k] = v
        out = lut[d]
        if d.size and out.min() <= 0:
            missing = sorted(set(np.unique(d[out <= 0]).tolist()))
            raise ValidationError(f"f-spec table has no entry for degree class {missing[0]}")
        return out
    raise TypeError(f"not an f-spec: {spec!r}")


def parse_fspec(text: str) -> FSpec:
    """Parse ``power:<alpha>``, ``constant`` or ``table:<k=v,...>``."""
    text = text.strip()
    head, _, rest = text.partition(":")
    head = head.strip().lower()
    try:
        if head == "power":
            return Power(float(rest) if rest.strip() else 1.0)
        if head == "constant" and not rest.strip():
            return Constant()
        if head == "table":
            pairs = [p for p in rest.split(",") if p.strip()]
            return Table({int(k): float(v) for k, v in (p.split("=") for p in pairs)})
    except ValueError as exc:
        raise ValidationError(f"malformed f-spec {text!r}: {exc}") from None
    raise ValidationError(
        f"malformed f-spec {text!r}; expected power:<alpha>, constant or table:<k=v,...>"
    )


def format_fspec(spec: FSpec) -> str:
    if isinstance(spec, Power):
        return f"power:{spec.alpha!r}"
    if isinstance(spec, Constant):
        return "constant"
    return "table:" + ",".join(f"{k}={v!r}" for k, v in spec.values.items())


# --- samples ----------------------------------------------------------------


@dataclass(frozen=True)
class SampleRecord:
    outcome: float
    reported_degree: int
    unit_index: Optional[int] = None
    recruiter: Optional[int] = None
    wave: int = 0

    def __post_init__(self):
        if self.reported_degree < 1:
            raise ValidationError(f"reported degree must be >= 1, got {self.reported_degree}")
        if self.wave < 0:
            raise ValidationError("wave must be nonnegative")


@dataclass(frozen=True, eq=False)
class Sample:
    """Ordered sample records as parallel arrays; -1 marks an absent index.

    ``truncated`` and ``restarts`` carry sampler diagnostics (a walk that ran
    out of eligible nodes, or reseeded to keep going).
    """

    outcome: np.ndarray
    reported_degree: np.ndarray
    unit_index: np.ndarray = None
    recruiter: np.ndarray = None
    wave: np.ndarray = None
    with_replacement: bool = False
    truncated: bool = False
    restarts: int = 0

    def __post_init__(self):
        y = _frozen(self.outcome, np.float64)
        d = _frozen(self.reported_degree, np.int64)
        if y.ndim != 1 or d.shape != y.shape:
            raise ValidationError("outcome and reported_degree must be equal-length 1-D arrays")
        if d.size and d.min() < 1:
            raise ValidationError("sample contains a reported degree < 1")
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "reported_degree", d)
        for name, fill in (("unit_index", -1), ("recruiter", -1), ("wave", 0)):
            v = getattr(self, name)
            arr = np.full(y.shape, fill, dtype=np.int64) if v is None else _frozen(v, np.int64)
            if arr.shape != y.shape:
                raise ValidationError(f"{name} must match sample length")
            object.__setattr__(self, name, arr)

    @classmethod
    def from_records(cls, records: Iterable[SampleRecord], **flags) -> "Sample":
        records = list(records)
        return cls(
            [r.outcome for r in records],
            [r.reported_degree for r in records],
            [-1 if r.unit_index is None else r.unit_index for r in records],
            [-1 if r.recruiter is None else r.recruiter for r in records],
            [r.wave for r in records],
            **flags,
        )

    def __len__(self) -> int:
        return self.outcome.size

    @property
    def n(self) -> int:
        return self.outcome.size

    @property
    def records(self) -> Tuple[SampleRecord, ...]:
        def opt(v):
            return None if v < 0 else int(v)

        return tuple(
            SampleRecord(
                float(self.outcome[i]),
                int(self.reported_degree[i]),
                opt(self.unit_index[i]),
                opt(self.recruiter[i]),
                int(self.wave[i]),
            )
            for i in range(self.n)
        )

    def replace_degrees(self, reported: Sequence[int]) -> "Sample":
        return Sample(
            self.outcome,
            reported,
            self.unit_index,
            self.recruiter,
            self.wave,
            self.with_replacement,
            self.truncated,
            self.restarts,
        )


@dataclass(frozen=True)
class EstimateResult:
    estimator_name: str
    value: float
    n: int
    degree_class_counts: Mapping[int, int] = field(default_factory=dict)
