"""Mesh loading, posing, and silhouette rasterization.

The camera model is affine: the object is rotated about its vertex centroid,
projected orthographically by dropping the camera-axis (z) coordinate, scaled
uniformly (pixels per model unit), and translated in the image plane.  Image
coordinates have the origin at the top-left corner, x rightward, y downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Pose vector layout used throughout the filter: one row per particle.
POSE_FIELDS = ("yaw", "pitch", "roll", "tx", "ty", "scale", "articulation")


class MeshError(ValueError):
    """Raised for malformed mesh files or invariant violations."""


@dataclass(frozen=True)
class Joint:
    """Single revolute joint: rotates a declared triangle subset about an axis.

    axis must be unit length; pivot is a point the axis passes through;
    member_triangles are indices into the mesh triangle list.
    """

    name: str
    axis: np.ndarray
    pivot: np.ndarray
    member_triangles: np.ndarray


@dataclass(frozen=True)
class TriangleMesh:
    """Immutable triangle mesh with an optional articulation joint.

    vertices: (V, 3) float64, model units.
    triangles: (T, 3) int64, indices into vertices.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    joint: Joint | None = None
    centroid: np.ndarray = field(init=False)

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        tris = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise MeshError("vertices must be an (V, 3) array")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError("triangles must be a (T, 3) array")
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise MeshError(
                f"triangle index out of range (vertex count {len(verts)})"
            )
        if self.joint is not None:
            axis = np.asarray(self.joint.axis, dtype=np.float64)
            if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
                raise MeshError("joint axis must be unit length")
            members = np.asarray(self.joint.member_triangles, dtype=np.int64)
            if members.size and (members.min() < 0 or members.max() >= len(tris)):
                raise MeshError("joint member triangle index out of range")
        verts.flags.writeable = False
        tris.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        centroid = verts.mean(axis=0) if len(verts) else np.zeros(3)
        centroid.flags.writeable = False
        object.__setattr__(self, "centroid", centroid)

    @property
    def joint_vertex_mask(self) -> np.ndarray:
        """Boolean (V,) mask of vertices referenced by the joint's triangles."""
        mask = np.zeros(len(self.vertices), dtype=bool)
        if self.joint is not None and self.joint.member_triangles.size:
            mask[self.triangles[self.joint.member_triangles].ravel()] = True
        return mask


@dataclass
class PoseParams:
    """Six-DOF affine pose plus one optional articulation angle.

    yaw/pitch/roll in radians (intrinsic Z-Y-X order, rotation about the mesh
    centroid), tx/ty in pixels, scale in pixels per model unit (> 0),
    articulation in radians (0 when the mesh has no joint).
    """

    yaw: float
    pitch: float
    roll: float
    tx: float
    ty: float
    scale: float
    articulation: float = 0.0

    def validate(self) -> None:
        values = self.as_array()
        if not np.all(np.isfinite(values)):
            raise ValueError("pose parameters must all be finite")
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.yaw, self.pitch, self.roll, self.tx, self.ty, self.scale,
             self.articulation],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, values) -> "PoseParams":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (7,):
            raise ValueError("pose array must have 7 entries")
        return cls(*(float(v) for v in values))


def wrap_angle(a):
    """Wrap angles to [-pi, pi); values already in range pass through bit-exactly."""
    a = np.asarray(a, dtype=np.float64)
    out_of_range = (a < -math.pi) | (a >= math.pi)
    if not np.any(out_of_range):
        return a if a.ndim else float(a)
    wrapped = np.where(out_of_range, np.mod(a + math.pi, TWO_PI) - math.pi, a)
    return wrapped if wrapped.ndim else float(wrapped)


def rotation_matrix(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Intrinsic Z-Y-X rotation: R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def axis_angle_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    t = 1.0 - c
    return np.array([
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ])


def articulated_vertices(mesh: TriangleMesh, articulation: float) -> np.ndarray:
    """Mesh vertices with the joint members rotated about the joint axis.

    An articulation of exactly 0, or a mesh without a joint, returns the
    stored vertex array unchanged (bit-exact).
    """
    if mesh.joint is None or articulation == 0.0:
        return mesh.vertices
    verts = mesh.vertices.copy()
    mask = mesh.joint_vertex_mask
    rot = axis_angle_matrix(mesh.joint.axis, articulation)
    pivot = mesh.joint.pivot
    verts[mask] = (verts[mask] - pivot) @ rot.T + pivot
    return verts


def apply_pose(mesh: TriangleMesh, pose: PoseParams) -> np.ndarray:
    """Project the posed mesh into the image plane.

    Vertices are articulated, rotated by R(yaw, pitch, roll) about the mesh
    centroid, orthographically projected by dropping z, scaled, and
    translated by (tx, ty).

    Returns
    -------
    (T, 3, 2) float64 array of projected triangles in pixel coordinates.
    """
    pose.validate()
    verts = articulated_vertices(mesh, pose.articulation)
    if pose.yaw != 0.0 or pose.pitch != 0.0 or pose.roll != 0.0:
        rot = rotation_matrix(pose.yaw, pose.pitch, pose.roll)
        verts = (verts - mesh.centroid) @ rot.T + mesh.centroid
    xy = verts[:, :2] * pose.scale
    if pose.tx != 0.0 or pose.ty != 0.0:
        xy = xy + np.array([pose.tx, pose.ty])
    return xy[mesh.triangles]


def project_vertices(mesh: TriangleMesh, pose: PoseParams) -> np.ndarray:
    """All projected vertex positions (V, 2); same transform as apply_pose."""
    pose.validate()
    verts = articulated_vertices(mesh, pose.articulation)
    if pose.yaw != 0.0 or pose.pitch != 0.0 or pose.roll != 0.0:
        rot = rotation_matrix(pose.yaw, pose.pitch, pose.roll)
        verts = (verts - mesh.centroid) @ rot.T + mesh.centroid
    return verts[:, :2] * pose.scale + np.array([pose.tx, pose.ty])


def rasterize_silhouette(tris2d: np.ndarray, width: int, height: int) -> np.ndarray:
    """Binary silhouette of a set of 2D triangles.

    A pixel (i, j) is foreground iff its center (i + 0.5, j + 0.5) lies inside
    or on the boundary of at least one triangle.  Degenerate (zero-area)
    triangles and triangles fully outside the image contribute nothing.

    Returns
    -------
    (height, width) bool array; True marks foreground.
    """
    if width <= 0 or height <= 0:
        raise ValueError("mask dimensions must be positive")
    mask = np.zeros((height, width), dtype=bool)
    tris2d = np.asarray(tris2d, dtype=np.float64)
    if tris2d.size == 0:
        return mask
    if tris2d.ndim != 3 or tris2d.shape[1:] != (3, 2):
        raise ValueError("tris2d must be a (T, 3, 2) array")

    xs_all = np.arange(width, dtype=np.float64) + 0.5
    ys_all = np.arange(height, dtype=np.float64) + 0.5
    for tri in tris2d:
        ax, ay = tri[0]
        bx, by = tri[1]
        cx, cy = tri[2]
        area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area2 == 0.0:
            continue
        # Pixel-center bbox, clipped to the image.
        x_lo, x_hi = min(ax, bx, cx), max(ax, bx, cx)
        y_lo, y_hi = min(ay, by, cy), max(ay, by, cy)
        ix0 = max(int(math.floor(x_lo - 0.5)), 0)
        ix1 = min(int(math.ceil(x_hi - 0.5)), width - 1)
        iy0 = max(int(math.floor(y_lo - 0.5)), 0)
        iy1 = min(int(math.ceil(y_hi - 0.5)), height - 1)
        if ix0 > ix1 or iy0 > iy1:
            continue
        xs = xs_all[ix0:ix1 + 1]
        ys = ys_all[iy0:iy1 + 1, None]
        e0 = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        e1 = (cx - bx) * (ys - by) - (cy - by) * (xs - bx)
        e2 = (ax - cx) * (ys - cy) - (ay - cy) * (xs - cx)
        if area2 > 0.0:
            inside = (e0 >= 0.0) & (e1 >= 0.0) & (e2 >= 0.0)
        else:
            inside = (e0 <= 0.0) & (e1 <= 0.0) & (e2 <= 0.0)
        mask[iy0:iy1 + 1, ix0:ix1 + 1] |= inside
    return mask


def load_mesh(path) -> TriangleMesh:
    """Parse a mesh file into a TriangleMesh.

    Line-oriented text format: ``v x y z`` (vertex), ``f i j k`` (1-based
    triangle), optional ``joint <name> ax ay az px py pz`` followed by
    ``jf i`` lines listing 1-based triangle indices belonging to the joint.
    ``#`` begins a comment.
    """
    vertices: list[list[float]] = []
    triangles: list[list[int]] = []
    joint_spec: tuple[str, np.ndarray, np.ndarray] | None = None
    joint_tris: list[int] = []

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            tag, args = parts[0], parts[1:]
            try:
                if tag == "v":
                    if len(args) != 3:
                        raise ValueError("expected 3 coordinates")
                    vertices.append([float(a) for a in args])
                elif tag == "f":
                    if len(args) != 3:
                        raise ValueError("expected 3 vertex indices")
                    triangles.append([int(a) - 1 for a in args])
                elif tag == "joint":
                    if joint_spec is not None:
                        raise ValueError("multiple joint definitions")
                    if len(args) != 7:
                        raise ValueError("expected name + axis + pivot")
                    axis = np.array([float(a) for a in args[1:4]])
                    pivot = np.array([float(a) for a in args[4:7]])
                    joint_spec = (args[0], axis, pivot)
                elif tag == "jf":
                    if joint_spec is None:
                        raise ValueError("jf before joint definition")
                    if len(args) != 1:
                        raise ValueError("expected one triangle index")
                    joint_tris.append(int(args[0]) - 1)
                else:
                    raise ValueError(f"unknown directive {tag!r}")
            except ValueError as exc:
                raise MeshError(f"{path}:{lineno}: {exc}") from None

    joint = None
    if joint_spec is not None:
        name, axis, pivot = joint_spec
        joint = Joint(
            name=name,
            axis=axis,
            pivot=pivot,
            member_triangles=np.array(joint_tris, dtype=np.int64),
        )
    return TriangleMesh(
        vertices=np.array(vertices, dtype=np.float64).reshape(-1, 3),
        triangles=np.array(triangles, dtype=np.int64).reshape(-1, 3),
        joint=joint,
    )
