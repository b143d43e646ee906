"""Synthetic stereo event scenes with exact ground truth.

A scene is a set of fronto-parallel planes (defined in the left camera frame
at t = 0) textured with signed edge segments.  The rig moves with a constant
body-frame velocity, so a static point obeys ``dP/dt = -w x P - v`` in camera
coordinates; trajectories use the closed-form solution of that ODE rather than
the linearised image flow.  Each edge point fires events of its edge polarity
at a fixed rate while it stays in view and is not hidden by a nearer plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CameraRig, EventBatch, Velocity
from .io import GroundTruth, VelocityTrack
from .volume import round_half_away

MVSEC_LIKE_RIG = CameraRig(f=226.38, cx=173.0, cy=130.0, b=0.1, width=346, height=260)


def skew(w: np.ndarray) -> np.ndarray:
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def rigid_motion(vel: Velocity, t) -> tuple[np.ndarray, np.ndarray]:
    """(R, c) with ``P(t) = R @ P(0) + c`` for every time in ``t``.

    Shapes: R (N, 3, 3), c (N, 3).
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    K = -skew(vel.w)
    K2 = K @ K
    wn = float(np.linalg.norm(vel.w))
    eye = np.eye(3)
    if wn < 1e-12:
        b_ = 0.5 * t * t
        R = eye[None] + t[:, None, None] * K[None]
        V = t[:, None, None] * eye[None] + b_[:, None, None] * K[None]
    else:
        th = wn * t
        s, cth = np.sin(th), np.cos(th)
        R = eye[None] + (s / wn)[:, None, None] * K[None] + ((1 - cth) / wn**2)[:, None, None] * K2[None]
        V = (
            t[:, None, None] * eye[None]
            + ((1 - cth) / wn**2)[:, None, None] * K[None]
            + ((t - s / wn) / wn**2)[:, None, None] * K2[None]
        )
    c = -np.einsum("nij,j->ni", V, vel.v)
    return R, c


@dataclass
class Plane:
    """Fronto-parallel plane at depth ``z``; ``extent`` = (x0, x1, y0, y1) in metres."""

    z: float
    extent: tuple[float, float, float, float]
    points: np.ndarray  # (N, 2) metric (X, Y) edge points on the plane
    polarity: np.ndarray  # (N,) in {-1, +1}

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError("plane depth must be positive")
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        self.polarity = np.asarray(self.polarity, dtype=np.int8).reshape(-1)

    def contains(self, X, Y):
        x0, x1, y0, y1 = self.extent
        return (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1)

    @classmethod
    def from_pixels(cls, rig: CameraRig, disparity: float, box, rng, density=0.06, seg_len=(6, 24)):
        """Plane at ``disparity`` covering pixel box (u0, u1, v0, v1) at t = 0.

        Texture is random straight edge segments sampled once per pixel, each
        segment carrying one polarity; ``density`` is the expected fraction of
        covered pixels lying on an edge.
        """
        z = rig.fb / disparity
        u0, u1, v0, v1 = box
        to_m = z / rig.f
        extent = ((u0 - rig.cx) * to_m, (u1 - rig.cx) * to_m, (v0 - rig.cy) * to_m, (v1 - rig.cy) * to_m)
        area = (u1 - u0) * (v1 - v0)
        mean_len = 0.5 * (seg_len[0] + seg_len[1])
        n_seg = max(1, int(round(density * area / mean_len)))
        pts, pol = [], []
        for _ in range(n_seg):
            length = rng.uniform(*seg_len)
            ang = rng.uniform(0, np.pi)
            su = rng.uniform(u0, u1)
            sv = rng.uniform(v0, v1)
            s = np.arange(int(np.ceil(length)))
            pu = np.clip(su + s * np.cos(ang), u0, u1)
            pv = np.clip(sv + s * np.sin(ang), v0, v1)
            pts.append(np.stack([(pu - rig.cx) * to_m, (pv - rig.cy) * to_m], axis=1))
            pol.append(np.full(len(s), rng.choice((-1, 1)), dtype=np.int8))
        return cls(z, extent, np.concatenate(pts), np.concatenate(pol))


@dataclass
class SceneSpec:
    planes: list
    vel: Velocity
    duration: float
    event_rate: float  # events per edge point per second
    noise_events: int = 0
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.event_rate <= 0:
            raise ValueError("event_rate must be positive")

    @property
    def num_points(self) -> int:
        return sum(len(p.points) for p in self.planes)


def _occluded(origins, pts, owner, planes):
    """True where the segment origin->point crosses a different plane's extent."""
    hidden = np.zeros(len(pts), dtype=bool)
    for j, pl in enumerate(planes):
        dz = pts[:, 2] - origins[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (pl.z - origins[:, 2]) / dz
        hit = origins + s[:, None] * (pts - origins)
        crosses = (owner != j) & (s > 0) & (s < 1 - 1e-9) & pl.contains(hit[:, 0], hit[:, 1])
        hidden |= crosses
    return hidden


def _camera_events(planes, pts0, pol, owner, times, R, c, rig, offset):
    """Project points moved to time ``times`` into the camera at x-offset ``offset``."""
    Pt = np.einsum("nij,nj->ni", R, pts0) + c
    Pc = Pt - np.array([offset, 0.0, 0.0])
    front = Pc[:, 2] > 1e-6
    zsafe = np.where(front, Pc[:, 2], 1.0)
    u = rig.f * Pc[:, 0] / zsafe + rig.cx
    v = rig.f * Pc[:, 1] / zsafe + rig.cy
    ui = round_half_away(u)
    vi = round_half_away(v)
    inside = front & (ui >= 0) & (ui < rig.width) & (vi >= 0) & (vi < rig.height)
    # camera centre expressed in the t = 0 frame
    origins = np.einsum("nji,nj->ni", R, np.array([offset, 0.0, 0.0]) - c)
    visible = inside & ~_occluded(origins, pts0, owner, planes)
    return ui[visible], vi[visible], times[visible], pol[visible]


def _noise(rng, n, rig, duration):
    return (
        rng.integers(0, rig.width, n),
        rng.integers(0, rig.height, n),
        rng.uniform(0, duration, n),
        rng.choice(np.array([-1, 1], dtype=np.int8), n),
    )


def _to_batch(parts):
    x = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    t = np.round(np.concatenate([p[2] for p in parts]) * 1e6) / 1e6
    pol = np.concatenate([p[3] for p in parts])
    order = np.argsort(t, kind="stable")
    return EventBatch(x=x[order], y=y[order], t=t[order], p=pol[order])


def generate_stereo_events(spec: SceneSpec, rig: CameraRig):
    """Return ``(left, right, gt_disparity, gt_depth)``; ground truth is at ``duration``.

    Ground-truth maps are float arrays with NaN where no plane is visible.
    """
    for pl in spec.planes:
        if pl.z <= 0:
            raise ValueError("plane depth must be positive")
    rng = np.random.default_rng(spec.seed)
    pts = np.concatenate([np.column_stack([p.points, np.full(len(p.points), p.z)]) for p in spec.planes])
    pol = np.concatenate([p.polarity for p in spec.planes])
    owner = np.concatenate([np.full(len(p.points), j) for j, p in enumerate(spec.planes)])

    out = []
    for offset in (0.0, rig.b):
        period = 1.0 / spec.event_rate
        n_max = int(np.ceil(spec.duration / period)) + 1
        phase = rng.uniform(0.0, period, len(pts))
        grid = phase[:, None] + period * np.arange(n_max)[None, :]
        ok = grid < spec.duration
        idx = np.nonzero(ok)
        times = grid[idx]
        R, c = rigid_motion(spec.vel, times)
        sig = _camera_events(spec.planes, pts[idx[0]], pol[idx[0]], owner[idx[0]], times, R, c, rig, offset)
        out.append(_to_batch([sig, _noise(rng, spec.noise_events, rig, spec.duration)]))
    gt_disp, gt_depth = ground_truth(spec, rig, spec.duration)
    return out[0], out[1], gt_disp, gt_depth


def ground_truth(spec: SceneSpec, rig: CameraRig, t: float):
    """Ray-cast the left camera at time ``t``: (disparity, depth), NaN where empty."""
    R, c = rigid_motion(spec.vel, [t])
    R, c = R[0], c[0]
    vv, uu = np.mgrid[0 : rig.height, 0 : rig.width]
    dirs = np.stack([(uu - rig.cx) / rig.f, (vv - rig.cy) / rig.f, np.ones_like(uu, dtype=float)], -1)
    dirs0 = dirs @ R  # R^T applied to each row vector
    origin = -R.T @ c
    depth = np.full(rig.shape, np.inf)
    for pl in spec.planes:
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (pl.z - origin[2]) / dirs0[..., 2]
        hit = origin[None, None, :] + s[..., None] * dirs0
        ok = (s > 0) & pl.contains(hit[..., 0], hit[..., 1]) & (s < depth)
        depth = np.where(ok, s, depth)
    depth = np.where(np.isfinite(depth), depth, np.nan)
    disp = rig.fb / depth
    return disp, depth


def random_scene(
    seed: int,
    rig: CameraRig = MVSEC_LIKE_RIG,
    num_events: int = 15000,
    noise_frac: float = 0.05,
    d_range=(4, 28),
    duration: float = 0.022,
    speed: float = 3.0,
    spin: float = 2.0,
    overshoot: float = 1.1,
) -> SceneSpec:
    """1-3 textured planes in side-by-side columns, random translation + rotation.

    ``speed`` (m/s) and ``spin`` (rad/s) are the velocity norms; directions are
    uniform on the sphere.  ``event_rate`` is chosen so roughly
    ``overshoot * num_events`` left events are produced, ``noise_frac`` of
    them uniform noise.
    """
    rng = np.random.default_rng(seed)
    n_planes = int(rng.integers(1, 4))
    margin = 34
    cols = np.linspace(margin, rig.width - margin, n_planes + 1)
    disps = rng.choice(np.arange(d_range[0], d_range[1] + 1), n_planes, replace=False)
    planes = []
    for k in range(n_planes):
        gap = 6
        u0, u1 = cols[k] + gap, cols[k + 1] - gap
        h = rng.uniform(0.55, 0.8) * (rig.height - 2 * margin)
        v0 = rng.uniform(margin, rig.height - margin - h)
        planes.append(Plane.from_pixels(rig, float(disps[k]), (u0, u1, v0, v0 + h), rng))

    def unit(n):
        a = rng.standard_normal(n)
        return a / np.linalg.norm(a)

    vel = Velocity(speed * unit(3), spin * unit(3))
    noise = int(round(noise_frac * num_events * overshoot))
    n_points = sum(len(p.points) for p in planes)
    rate = (overshoot * num_events - noise) / (n_points * duration)
    return SceneSpec(
        planes=planes,
        vel=vel,
        duration=duration,
        event_rate=rate,
        noise_events=noise,
        seed=seed,
        meta={"disparities": [int(d) for d in disps]},
    )


def scene_recording(spec: SceneSpec, rig: CameraRig, num_events: int = 15000):
    """Generate a scene as a :class:`~evstereo.pipeline.Recording`.

    Ground truth is rendered at the reference time of the last complete
    ``num_events`` batch, so that batch is the one scored.
    """
    from .pipeline import Recording, pair_batches

    left, right, gt_disp, _ = generate_stereo_events(spec, rig)
    pairs = pair_batches(left, right, num_events)
    t_gt = pairs[-1][0].t_last if pairs else spec.duration
    if pairs:
        gt_disp, _ = ground_truth(spec, rig, t_gt)
    return Recording(
        left=left,
        right=right,
        velocity=VelocityTrack.constant(spec.vel),
        rig=rig,
        gt=GroundTruth(gt_disp, t_gt),
    )
