"""Data model shared by the stereo pipeline.

Volumes are stored as numpy arrays shaped ``(num_disparities, height, width)``
so that each disparity slice is a contiguous image.  Use ``volume.at(x, y, d)``
for (x, y, d) style indexing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEFAULT_WIDTH = 346
DEFAULT_HEIGHT = 260

# Timestamp voxel with no event.
NO_TIMESTAMP = -np.inf
# Cost voxel with an empty union window; ranks worse than any defined cost.
UNDEFINED_COST = np.inf
# Disparity map value for rejected / undefined pixels in exported files.
INVALID_DISPARITY = 65535


class EventValidationError(ValueError):
    """Raised by :func:`validate_batch`; ``kind`` and ``index`` name the failure."""

    def __init__(self, kind: str, index: int, message: str):
        super().__init__(f"{kind} at event {index}: {message}")
        self.kind = kind
        self.index = index


class Event(NamedTuple):
    t: float
    x: int
    y: int
    p: int


@dataclass(frozen=True)
class EventBatch:
    """Struct-of-arrays container for a time-ordered set of events."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.int64)
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        t = np.ascontiguousarray(self.t, dtype=np.float64)
        p = np.ascontiguousarray(self.p, dtype=np.int8)
        if not (x.ndim == y.ndim == t.ndim == p.ndim == 1):
            raise ValueError("event arrays must be one-dimensional")
        if not (len(x) == len(y) == len(t) == len(p)):
            raise ValueError("event arrays must have equal length")
        for name, arr in (("x", x), ("y", y), ("t", t), ("p", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def empty(cls) -> "EventBatch":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0))

    @classmethod
    def from_events(cls, events: Iterable[Sequence]) -> "EventBatch":
        """Build from ``(t, x, y, p)`` records."""
        rows = list(events)
        if not rows:
            return cls.empty()
        arr = np.asarray(rows, dtype=np.float64)
        return cls(x=arr[:, 1], y=arr[:, 2], t=arr[:, 0], p=arr[:, 3])

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, item) -> "EventBatch":
        if isinstance(item, (int, np.integer)):
            raise TypeError("use .event(i) for a single record")
        return EventBatch(self.x[item], self.y[item], self.t[item], self.p[item])

    def event(self, i: int) -> Event:
        return Event(float(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __iter__(self):
        return (self.event(i) for i in range(len(self)))

    @property
    def t_first(self) -> float:
        return float(self.t[0])

    @property
    def t_last(self) -> float:
        return float(self.t[-1])

    def equals(self, other: "EventBatch") -> bool:
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.p, other.p)
        )


@dataclass(frozen=True)
class CameraRig:
    """Rectified stereo pair: shared intrinsics, baseline along +x of the left camera."""

    f: float
    cx: float
    cy: float
    b: float
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT

    def __post_init__(self):
        if not self.f > 0:
            raise ValueError(f"focal length must be positive, got {self.f}")
        if not self.b > 0:
            raise ValueError(f"baseline must be positive, got {self.b}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("resolution must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside the sensor")

    @property
    def fb(self) -> float:
        return self.f * self.b

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True)
class Velocity:
    """Linear (m/s) and angular (rad/s) velocity in the left camera frame."""

    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    w: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        v = np.array(self.v, dtype=np.float64).reshape(3)
        w = np.array(self.w, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ValueError("velocity components must be finite")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @classmethod
    def zero(cls) -> "Velocity":
        return cls(np.zeros(3), np.zeros(3))

    def is_zero(self) -> bool:
        return not (np.any(self.v) or np.any(self.w))

    def __eq__(self, other):
        if not isinstance(other, Velocity):
            return NotImplemented
        return np.array_equal(self.v, other.v) and np.array_equal(self.w, other.w)

    __hash__ = None


@dataclass(frozen=True)
class DisparityConfig:
    d_min: int = 0
    d_max: int = 31
    window: int = 24
    eps_c: float = 0.1
    eps_n: float = 0.1
    num_events: int = 15000

    def __post_init__(self):
        if self.d_min < 0 or self.d_max < self.d_min:
            raise ValueError(f"bad disparity range [{self.d_min}, {self.d_max}]")
        if self.window < 1:
            raise ValueError("window side must be >= 1")
        if not (0.0 <= self.eps_c <= 1.0 and 0.0 <= self.eps_n <= 1.0):
            raise ValueError("eps_c and eps_n must lie in [0, 1]")
        if self.num_events < 1:
            raise ValueError("num_events must be >= 1")

    def check_rig(self, rig: CameraRig) -> None:
        if self.d_max >= rig.width:
            raise ValueError("d_max must be smaller than the sensor width")

    @property
    def disparities(self) -> np.ndarray:
        return np.arange(self.d_min, self.d_max + 1, dtype=np.int64)

    @property
    def num_disparities(self) -> int:
        return self.d_max - self.d_min + 1


def _frozen(arr, dtype=None):
    arr = np.ascontiguousarray(arr, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EventDisparityVolume:
    values: np.ndarray  # int8, (D, H, W), entries in {-1, 0, 1}
    d_min: int
    d_max: int
    t_ref: float

    def __post_init__(self):
        values = _frozen(self.values, np.int8)
        if values.ndim != 3 or values.shape[0] != self.d_max - self.d_min + 1:
            raise ValueError(f"volume shape {values.shape} does not match d-range")
        object.__setattr__(self, "values", values)

    def at(self, x: int, y: int, d: int) -> int:
        return int(self.values[d - self.d_min, y, x])

    def slice(self, d: int) -> np.ndarray:
        return self.values[d - self.d_min]

    def check_domain(self) -> bool:
        return bool(np.all((self.values >= -1) & (self.values <= 1)))


@dataclass(frozen=True)
class TimestampVolume:
    values: np.ndarray  # float64, (D, H, W); NO_TIMESTAMP where empty
    d_min: int
    d_max: int

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))

    @property
    def occupied(self) -> np.ndarray:
        return self.values != NO_TIMESTAMP


@dataclass(frozen=True)
class CostVolume:
    """Window sums plus the cost that winner-takes-all minimises.

    ``cost`` equals ``c_iou`` for the IoU cost; ablation costs replace it while
    keeping the union and intersection sums used for outlier rejection.
    """

    c_i: np.ndarray
    c_u: np.ndarray
    c_iou: np.ndarray
    d_min: int
    d_max: int
    cost: np.ndarray | None = None
    kind: str = "iou"

    def __post_init__(self):
        object.__setattr__(self, "c_i", _frozen(self.c_i))
        object.__setattr__(self, "c_u", _frozen(self.c_u))
        object.__setattr__(self, "c_iou", _frozen(self.c_iou, np.float64))
        cost = self.c_iou if self.cost is None else _frozen(self.cost, np.float64)
        object.__setattr__(self, "cost", cost)

    @property
    def shape(self):
        return self.c_u.shape


@dataclass(frozen=True)
class DisparityMap:
    d_hat: np.ndarray  # int64 (H, W)
    valid: np.ndarray  # bool (H, W)
    has_events: np.ndarray  # bool (H, W)

    def __post_init__(self):
        object.__setattr__(self, "d_hat", _frozen(self.d_hat, np.int64))
        object.__setattr__(self, "valid", _frozen(self.valid, bool))
        object.__setattr__(self, "has_events", _frozen(self.has_events, bool))

    @property
    def sparse(self) -> np.ndarray:
        """Mask of reported pixels: valid and touched by a raw event."""
        return self.valid & self.has_events

    def replace(self, **kwargs) -> "DisparityMap":
        fields = dict(d_hat=self.d_hat, valid=self.valid, has_events=self.has_events)
        fields.update(kwargs)
        return DisparityMap(**fields)


def validate_batch(events, rig: CameraRig) -> EventBatch:
    """Check pixel bounds, polarity values and time ordering against ``rig``.

    Accepts an :class:`EventBatch` or any sequence of ``(t, x, y, p)`` records.
    """
    batch = events if isinstance(events, EventBatch) else EventBatch.from_events(events)
    if len(batch) == 0:
        return batch
    bad = np.flatnonzero(
        (batch.x < 0) | (batch.x >= rig.width) | (batch.y < 0) | (batch.y >= rig.height)
    )
    if bad.size:
        i = int(bad[0])
        raise EventValidationError(
            "out-of-bounds", i, f"pixel ({batch.x[i]}, {batch.y[i]}) outside {rig.width}x{rig.height}"
        )
    bad = np.flatnonzero((batch.p != 1) & (batch.p != -1))
    if bad.size:
        i = int(bad[0])
        raise EventValidationError("polarity", i, f"polarity {batch.p[i]} not in {{-1, +1}}")
    bad = np.flatnonzero(~np.isfinite(batch.t))
    if bad.size:
        raise EventValidationError("timestamp", int(bad[0]), "non-finite timestamp")
    bad = np.flatnonzero(np.diff(batch.t) < 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise EventValidationError(
            "non-monotone", i, f"t={batch.t[i]} precedes previous t={batch.t[i - 1]}"
        )
    return batch
