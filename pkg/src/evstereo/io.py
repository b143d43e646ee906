"""Text and binary file formats: events, calibration, velocity, PGM, dumps."""

from __future__ import annotations

import io as _io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import CameraRig, EventBatch, Velocity

CALIB_KEYS = ("f", "cx", "cy", "baseline", "width", "height")


def _load_rows(path, ncols: int) -> np.ndarray:
    with open(path, "r") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return np.zeros((0, ncols))
    data = np.loadtxt(_io.StringIO("".join(lines)), ndmin=2, dtype=np.float64)
    if data.shape[1] != ncols:
        raise ValueError(f"{path}: expected {ncols} columns, found {data.shape[1]}")
    return data


def read_events(path) -> EventBatch:
    """Parse ``t x y p`` lines; polarity 0 is mapped to -1."""
    data = _load_rows(path, 4)
    if data.shape[0] == 0:
        return EventBatch.empty()
    xy = data[:, 1:3]
    if np.any(xy != np.round(xy)):
        raise ValueError(f"{path}: pixel coordinates must be integers")
    p = data[:, 3].copy()
    p[p == 0] = -1
    return EventBatch(x=data[:, 1], y=data[:, 2], t=data[:, 0], p=p)


def write_events(path, events: EventBatch, header: str | None = None) -> None:
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        fh.write("# t x y p\n")
        fh.writelines(
            f"{t!r} {x} {y} {p}\n"
            for t, x, y, p in zip(events.t.tolist(), events.x.tolist(), events.y.tolist(), events.p.tolist())
        )


def read_calibration(path) -> CameraRig:
    values = {}
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, val = line.split("=", 1)
            elif ":" in line:
                key, val = line.split(":", 1)
            else:
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'key value'")
                key, val = parts
            values[key.strip()] = float(val)
    missing = [k for k in CALIB_KEYS if k not in values]
    if missing:
        raise ValueError(f"{path}: missing calibration keys {missing}")
    return CameraRig(
        f=values["f"],
        cx=values["cx"],
        cy=values["cy"],
        b=values["baseline"],
        width=int(values["width"]),
        height=int(values["height"]),
    )


def write_calibration(path, rig: CameraRig) -> None:
    with open(path, "w") as fh:
        fh.write(f"f {rig.f!r}\ncx {rig.cx!r}\ncy {rig.cy!r}\nbaseline {rig.b!r}\n")
        fh.write(f"width {rig.width}\nheight {rig.height}\n")


@dataclass(frozen=True)
class VelocityTrack:
    """Timestamped velocity samples; lookup picks the nearest sample."""

    t: np.ndarray
    v: np.ndarray  # (N, 3)
    w: np.ndarray  # (N, 3)

    @classmethod
    def constant(cls, vel: Velocity, t: float = 0.0) -> "VelocityTrack":
        return cls(np.array([t]), vel.v[None, :], vel.w[None, :])

    def __len__(self):
        return len(self.t)

    def at(self, t: float) -> Velocity:
        if len(self.t) == 0:
            raise ValueError("empty velocity track")
        i = int(np.argmin(np.abs(self.t - t)))
        return Velocity(self.v[i], self.w[i])


def read_velocity(path) -> VelocityTrack:
    data = _load_rows(path, 7)
    if data.shape[0] == 0:
        raise ValueError(f"{path}: no velocity records")
    order = np.argsort(data[:, 0], kind="stable")
    data = data[order]
    return VelocityTrack(data[:, 0], data[:, 1:4], data[:, 4:7])


def write_velocity(path, track: VelocityTrack) -> None:
    with open(path, "w") as fh:
        fh.write("# t vx vy vz wx wy wz\n")
        for t, v, w in zip(track.t, track.v, track.w):
            fh.write(" ".join(repr(float(a)) for a in (t, *v, *w)) + "\n")


def write_pgm16(path, image: np.ndarray, comments=()) -> None:
    """Binary 16-bit PGM (P5, maxval 65535, big-endian samples)."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    if image.min(initial=0) < 0 or image.max(initial=0) > 65535:
        raise ValueError("PGM samples must lie in [0, 65535]")
    h, w = image.shape
    head = "P5\n" + "".join(f"# {c}\n" for c in comments) + f"{w} {h}\n65535\n"
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii"))
        fh.write(image.astype(">u2").tobytes())


def read_pgm16(path) -> tuple[np.ndarray, list[str]]:
    """Return (image, comment lines) from a binary 16-bit PGM."""
    raw = Path(path).read_bytes()
    tokens, comments, pos = [], [], 0
    while len(tokens) < 4:
        while raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            end = raw.index(b"\n", pos)
            comments.append(raw[pos + 1 : end].decode("ascii").strip())
            pos = end + 1
            continue
        start = pos
        while not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    pos += 1  # single whitespace before raster
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != "P5" or maxval != 65535:
        raise ValueError(f"{path}: only 16-bit binary PGM is supported")
    img = np.frombuffer(raw, dtype=">u2", count=w * h, offset=pos).reshape(h, w)
    return img.astype(np.uint16), comments


def write_volume_dump(path, values: np.ndarray, d_min: int, t_ref: float) -> None:
    """Signed 8-bit voxels in (d, y, x) order after a one-line text header."""
    d, h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(f"{w} {h} {d} {d_min} {t_ref!r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(values, dtype="<i1").tobytes())


def read_volume_dump(path) -> tuple[np.ndarray, int, float]:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    w, h, d, d_min, t_ref = raw[:nl].decode("ascii").split()
    w, h, d = int(w), int(h), int(d)
    values = np.frombuffer(raw, dtype="<i1", offset=nl + 1, count=w * h * d).reshape(d, h, w)
    return values.astype(np.int8), int(d_min), float(t_ref)


def write_cost_dump(path, cost: np.ndarray, d_min: int) -> None:
    """Little-endian float32 voxels in (d, y, x) order; undefined cost is +inf."""
    d, h, w = cost.shape
    with open(path, "wb") as fh:
        fh.write(f"{w} {h} {d} {d_min}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(cost, dtype="<f4").tobytes())


def read_cost_dump(path) -> tuple[np.ndarray, int]:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    w, h, d, d_min = (int(s) for s in raw[:nl].decode("ascii").split())
    cost = np.frombuffer(raw, dtype="<f4", offset=nl + 1, count=w * h * d).reshape(d, h, w)
    return cost.astype(np.float32), d_min


GT_SCALE = 256.0


@dataclass(frozen=True)
class GroundTruth:
    """Float disparity map (NaN where unknown) valid at time ``t`` (None = any batch)."""

    disparity: np.ndarray
    t: float | None = None


def write_ground_truth(path, gt: GroundTruth) -> None:
    """16-bit PGM storing ``round(256 * d)``; 65535 marks missing pixels."""
    d = gt.disparity
    ok = np.isfinite(d)
    img = np.full(d.shape, 65535, dtype=np.uint16)
    img[ok] = np.clip(np.floor(d[ok] * GT_SCALE + 0.5), 0, 65534).astype(np.uint16)
    comments = [f"scale {GT_SCALE:g}"]
    if gt.t is not None:
        comments.append(f"t {gt.t!r}")
    write_pgm16(path, img, comments)


def read_ground_truth(path) -> GroundTruth:
    img, comments = read_pgm16(path)
    scale, t = 1.0, None
    for c in comments:
        parts = c.split()
        if len(parts) == 2 and parts[0] == "scale":
            scale = float(parts[1])
        elif len(parts) == 2 and parts[0] == "t":
            t = float(parts[1])
    disp = np.where(img == 65535, np.nan, img.astype(np.float64) / scale)
    return GroundTruth(disp, t)
