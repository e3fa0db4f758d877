"""Affine transforms, control-grid deformations and frame-to-frame warps.

Image coordinates: origin at the top-left corner, x to the right, y down.
Pixel ``(row, col)`` has its center at ``(col + 0.5, row + 0.5)``.

All per-point math is plain IEEE arithmetic (no vectorized transcendental
functions), so results are bit-reproducible across hosts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularTransform

DET_EPS = 1e-8


@dataclass(frozen=True)
class Affine2:
    """``p -> A p + t`` with ``A = [[a11, a12], [a21, a22]]`` and ``t = (tx, ty)``."""

    a11: float = 1.0
    a12: float = 0.0
    a21: float = 0.0
    a22: float = 1.0
    tx: float = 0.0
    ty: float = 0.0

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def translate(cls, tx, ty):
        return cls(1.0, 0.0, 0.0, 1.0, float(tx), float(ty))

    @classmethod
    def scale(cls, sx, sy=None, center=(0.0, 0.0)):
        sy = sx if sy is None else sy
        return _about(cls(float(sx), 0.0, 0.0, float(sy)), center)

    @classmethod
    def rotate(cls, degrees, center=(0.0, 0.0)):
        """Rotation by ``degrees``; positive turns +x towards +y (clockwise on screen)."""
        r = math.radians(degrees)
        c, s = math.cos(r), math.sin(r)
        return _about(cls(c, -s, s, c), center)

    @classmethod
    def similarity(cls, degrees=0.0, scale=1.0, shift=(0.0, 0.0), center=(0.0, 0.0)):
        """Rotate and scale about ``center``, then translate by ``shift``."""
        r = math.radians(degrees)
        c, s = scale * math.cos(r), scale * math.sin(r)
        core = _about(cls(c, -s, s, c), center)
        return cls.translate(*shift).compose(core)

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1], m[0, 2], m[1, 2])

    @property
    def matrix(self):
        return np.array([[self.a11, self.a12, self.tx], [self.a21, self.a22, self.ty]])

    @property
    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a21

    @property
    def linear_norm(self):
        """Operator (spectral) norm of the linear part."""
        return float(np.linalg.norm(self.matrix[:, :2], ord=2))

    def is_identity(self):
        return self == _IDENTITY

    def is_translation(self):
        return self.a11 == 1.0 and self.a12 == 0.0 and self.a21 == 0.0 and self.a22 == 1.0

    def apply_xy(self, x, y):
        if self.is_identity():
            return x, y
        return (self.a11 * x + self.a12 * y + self.tx,
                self.a21 * x + self.a22 * y + self.ty)

    def apply(self, points):
        """Map an ``(..., 2)`` array of points."""
        pts = np.asarray(points, dtype=float)
        x, y = self.apply_xy(pts[..., 0], pts[..., 1])
        return np.stack([x, y], axis=-1)

    def compose(self, inner):
        """Return ``self ∘ inner`` (``inner`` applied first)."""
        return compose(self, inner)

    def inverse(self):
        return invert(self)


_IDENTITY = Affine2()


def _about(t, center):
    cx, cy = float(center[0]), float(center[1])
    if cx == 0.0 and cy == 0.0:
        return t
    return compose(Affine2.translate(cx, cy), compose(t, Affine2.translate(-cx, -cy)))


def compose(outer, inner):
    """Affine ``outer ∘ inner``: apply ``inner`` first."""
    if inner.is_identity():
        return outer
    if outer.is_identity():
        return inner
    return Affine2(
        outer.a11 * inner.a11 + outer.a12 * inner.a21,
        outer.a11 * inner.a12 + outer.a12 * inner.a22,
        outer.a21 * inner.a11 + outer.a22 * inner.a21,
        outer.a21 * inner.a12 + outer.a22 * inner.a22,
        outer.a11 * inner.tx + outer.a12 * inner.ty + outer.tx,
        outer.a21 * inner.tx + outer.a22 * inner.ty + outer.ty,
    )


def invert(t):
    if t.is_identity():
        return t
    det = t.det
    if not abs(det) > DET_EPS:
        raise SingularTransform(f"affine transform is singular (det={det!r})")
    if t.is_translation():
        return Affine2.translate(-t.tx, -t.ty)
    i11, i12 = t.a22 / det, -t.a12 / det
    i21, i22 = -t.a21 / det, t.a11 / det
    return Affine2(i11, i12, i21, i22,
                   -(i11 * t.tx + i12 * t.ty),
                   -(i21 * t.tx + i22 * t.ty))


@dataclass(frozen=True, eq=False)
class DeformField:
    """Smooth displacement field from a bilinearly interpolated control grid.

    The grid has ``grid_w x grid_h`` cells spanning ``[x0, x0 + width] x
    [y0, y0 + height]``; ``vectors`` holds the ``(grid_h + 1, grid_w + 1, 2)``
    control displacements.
    Points outside the span take the value at the nearest border.
    """

    width: float
    height: float
    grid_w: int
    grid_h: int
    vectors: np.ndarray
    amplitude: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.shape != (self.grid_h + 1, self.grid_w + 1, 2):
            raise ValueError(f"control grid shape {v.shape} does not match "
                             f"{self.grid_h + 1}x{self.grid_w + 1}x2")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        # per-cell bilinear coefficients: d = c0 + cx*fx + cy*fy + cxy*fx*fy
        v00, v01, v10, v11 = v[:-1, :-1], v[:-1, 1:], v[1:, :-1], v[1:, 1:]
        coef = np.stack([v00, v01 - v00, v10 - v00, v11 - v10 - v01 + v00], axis=-1)
        object.__setattr__(self, "_coef", np.ascontiguousarray(coef.reshape(-1, 2, 4)))

    @classmethod
    def random(cls, width, height, grid_w, grid_h, amplitude, rng, origin=(0.0, 0.0)):
        """Control vectors drawn uniformly from the disk of radius ``amplitude``."""
        n = (grid_h + 1) * (grid_w + 1)
        u = rng.random(n)
        a = rng.random(n)
        vec = np.empty((n, 2))
        for i in range(n):
            r = amplitude * math.sqrt(u[i])
            ang = 2.0 * math.pi * a[i]
            vec[i, 0] = r * math.cos(ang)
            vec[i, 1] = r * math.sin(ang)
        return cls(float(width), float(height), int(grid_w), int(grid_h),
                   vec.reshape(grid_h + 1, grid_w + 1, 2), float(amplitude),
                   float(origin[0]), float(origin[1]))

    @classmethod
    def zero(cls, width, height, grid_w=1, grid_h=1):
        return cls(float(width), float(height), grid_w, grid_h,
                   np.zeros((grid_h + 1, grid_w + 1, 2)), 0.0)

    def max_norm(self):
        return float(np.sqrt((self.vectors ** 2).sum(axis=-1)).max())

    def lipschitz_bound(self):
        """Upper bound on the Lipschitz constant of the field (max-norm of rows)."""
        cw = self.width / self.grid_w
        ch = self.height / self.grid_h
        v = self.vectors
        dx = np.sqrt(((v[:, 1:] - v[:, :-1]) ** 2).sum(-1)).max() / cw if self.grid_w else 0.0
        dy = np.sqrt(((v[1:] - v[:-1]) ** 2).sum(-1)).max() / ch if self.grid_h else 0.0
        return float(dx + dy)

    def _eval(self, x, y, jacobian=False):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gw, gh = self.grid_w, self.grid_h
        sx, sy = gw / self.width, gh / self.height
        gx = (x - self.x0) * sx
        gy = (y - self.y0) * sy
        cgx = np.clip(gx, 0.0, float(gw))
        cgy = np.clip(gy, 0.0, float(gh))
        ix = np.minimum(cgx.astype(np.intp), gw - 1)
        iy = np.minimum(cgy.astype(np.intp), gh - 1)
        fx = cgx - ix
        fy = cgy - iy
        k = self._coef[iy * gw + ix]
        c0, cx, cy, cxy = k[..., 0], k[..., 1], k[..., 2], k[..., 3]
        ex = cx + cxy * fy[..., None]
        d = c0 + ex * fx[..., None] + cy * fy[..., None]
        u, v = d[..., 0], d[..., 1]
        if not jacobian:
            return u, v
        # clamped coordinates have zero derivative
        dx = ex * (sx * ((gx >= 0) & (gx <= gw)))[..., None]
        dy = (cy + cxy * fx[..., None]) * (sy * ((gy >= 0) & (gy <= gh)))[..., None]
        return u, v, (dx[..., 0], dy[..., 0]), (dx[..., 1], dy[..., 1])

    def __call__(self, x, y):
        return self._eval(x, y)

    def jacobian(self, x, y):
        """``(u, v, (du/dx, du/dy), (dv/dx, dv/dy))``."""
        return self._eval(x, y, jacobian=True)


@dataclass(frozen=True)
class WarpStage:
    affine: Affine2 = field(default_factory=Affine2)
    deform: DeformField | None = None

    def forward(self, x, y):
        if self.deform is not None:
            dx, dy = self.deform(x, y)
            x, y = x + dx, y + dy
        return self.affine.apply_xy(x, y)

    def backward(self, x, y, tol=1e-10, max_iter=30):
        qx, qy = invert(self.affine).apply_xy(x, y)
        if self.deform is None:
            return qx, qy
        # Newton on p + D(p) = q; I + dD stays invertible since D is a contraction
        qx = np.asarray(qx, dtype=float)
        qy = np.asarray(qy, dtype=float)
        shape = qx.shape
        qx, qy = qx.ravel(), qy.ravel()
        dx, dy = self.deform(qx, qy)
        px, py = qx - dx, qy - dy
        # iterate only the points not yet converged; each point stops on its own residual
        idx = np.arange(qx.size)
        sx, sy, tx, ty = px, py, qx, qy
        for _ in range(max_iter):
            dx, dy, (ux, uy), (vx, vy) = self.deform.jacobian(sx, sy)
            rx = sx + dx - tx
            ry = sy + dy - ty
            live = (np.abs(rx) > tol) | (np.abs(ry) > tol)
            if not live.any():
                break
            if not live.all():
                idx, sx, sy, tx, ty = idx[live], sx[live], sy[live], tx[live], ty[live]
                rx, ry, ux, uy, vx, vy = rx[live], ry[live], ux[live], uy[live], vx[live], vy[live]
            a = 1.0 + ux
            d = 1.0 + vy
            det = a * d - uy * vx
            sx = sx - (d * rx - uy * ry) / det
            sy = sy - (a * ry - vx * rx) / det
            px[idx] = sx
            py[idx] = sy
        return px.reshape(shape), py.reshape(shape)


@dataclass(frozen=True)
class WarpMap:
    """A chain of ``p -> A (p + D(p))`` stages, applied first to last.

    A single stage is the ``W(p) = affine(p + deform(p))`` map; chains arise
    when deformed motions are composed.
    """

    stages: tuple = (WarpStage(),)

    @classmethod
    def identity(cls):
        return cls((WarpStage(),))

    @classmethod
    def from_affine(cls, affine, deform=None):
        return cls((WarpStage(affine, deform),))

    @property
    def affine(self):
        """Composition of every stage's affine part (ignores deformations)."""
        out = Affine2()
        for s in self.stages:
            out = compose(s.affine, out)
        return out

    @property
    def deforms(self):
        return tuple(s.deform for s in self.stages if s.deform is not None)

    def is_affine(self):
        return not self.deforms

    def is_identity(self):
        return self.is_affine() and self.affine.is_identity()

    def __call__(self, x, y):
        for s in self.stages:
            x, y = s.forward(x, y)
        return x, y

    def apply(self, points):
        pts = np.asarray(points, dtype=float)
        x, y = self(pts[..., 0], pts[..., 1])
        return np.stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)], axis=-1)

    def inverse_xy(self, x, y):
        for s in reversed(self.stages):
            x, y = s.backward(x, y)
        return x, y

    def then(self, outer):
        """Return ``outer ∘ self``."""
        return chain(self, outer)


def chain(*warps):
    """Compose warps in application order: ``chain(a, b)(p) == b(a(p))``.

    Accepts :class:`WarpMap` or :class:`Affine2` items. Identity stages are
    dropped and an affine-only stage is folded into its predecessor.
    """
    stages = []
    for w in warps:
        items = (WarpStage(w),) if isinstance(w, Affine2) else w.stages
        for s in items:
            if s.deform is None and s.affine.is_identity():
                continue
            if s.deform is None and stages:
                prev = stages[-1]
                stages[-1] = WarpStage(compose(s.affine, prev.affine), prev.deform)
            else:
                stages.append(s)
    if not stages:
        stages = [WarpStage()]
    return WarpMap(tuple(stages))


def layer_motion(background_motion, object_motion):
    """Resolved frame-to-frame motion of a layer: background ∘ object.

    An object whose own motion is the identity moves with the background.
    """
    if object_motion.is_identity():
        return background_motion
    if background_motion.is_identity():
        return object_motion
    return chain(object_motion, background_motion)


def displacement(warp, x, y):
    """``(u, v) = W(x, y) - (x, y)``; exactly constant for pure translations."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if warp.is_affine():
        a = warp.affine
        if a.is_translation():
            return np.full(x.shape, a.tx), np.full(y.shape, a.ty)
    qx, qy = warp(x, y)
    return qx - x, qy - y


def flow_at(warp, p):
    """Displacement ``W(p) - p`` at point(s) ``p`` (array ``(..., 2)``)."""
    p = np.asarray(p, dtype=float)
    u, v = displacement(warp, p[..., 0], p[..., 1])
    return np.stack([u, v], axis=-1)
