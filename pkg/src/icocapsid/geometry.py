"""Reference configuration of the icosahedral cage resting on the plane z = 0.

Vertex 0 is the contact point and sits at the origin; the opposite vertex is
on the +z axis. Indices are sorted by (height, azimuth), so the layout is

    0        bottom vertex (contact point, pinned)
    1..5     lower pentagon, azimuths 0, 72, ..., 288 degrees
    6..10    upper pentagon, azimuths 36, 108, ..., 324 degrees
    11       top vertex
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

N_VERTICES = 12
N_FREE = 11
N_DOF = 3 * N_FREE


@dataclass(frozen=True)
class FacePair:
    """Two faces sharing the edge (i, j).

    (i, j) is ordered so that (P_i - G1) x (P_j - G1) is the outward normal of
    face ``m1`` and (P_j - G2) x (P_i - G2) the outward normal of face ``m2``.
    """

    m1: int
    m2: int
    i: int
    j: int


@dataclass(frozen=True, eq=False)
class CapsidGeometry:
    edge_length: float
    vertices: np.ndarray  # (12, 3)
    edges: tuple[tuple[int, int], ...]
    faces: tuple[tuple[int, int, int], ...]
    barycenters: np.ndarray  # (20, 3)
    face_adjacency: tuple[FacePair, ...]
    neighbor_sets: tuple[frozenset[int], ...]

    @property
    def face_vertex_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(f) for f in self.faces)

    @property
    def heights(self) -> np.ndarray:
        """Heights P_i . e_3 of the free vertices 1..11."""
        return self.vertices[1:, 2].copy()

    @property
    def circumradius(self) -> float:
        return float(circumradius(self.edge_length))

    @property
    def barycenter_spacing(self) -> float:
        """Distance g between barycenters of adjacent faces."""
        p = self.face_adjacency[0]
        return float(np.linalg.norm(self.barycenters[p.m1] - self.barycenters[p.m2]))

    def third_vertex(self, face: int, i: int, j: int) -> int:
        (k,) = set(self.faces[face]) - {i, j}
        return k


def circumradius(edge_length: float) -> float:
    return edge_length / 4.0 * np.sqrt(10.0 + 2.0 * np.sqrt(5.0))


def _unit_vertices() -> np.ndarray:
    # Polar closed form for unit edge length, axis along z, bottom vertex at origin.
    R = circumradius(1.0)
    ring_r = 2.0 * R / np.sqrt(5.0)
    ring_h = R / np.sqrt(5.0)
    pts = [(0.0, 0.0, 0.0)]
    for k in range(5):
        a = 2.0 * np.pi * k / 5.0
        pts.append((ring_r * np.cos(a), ring_r * np.sin(a), R - ring_h))
    for k in range(5):
        a = 2.0 * np.pi * k / 5.0 + np.pi / 5.0
        pts.append((ring_r * np.cos(a), ring_r * np.sin(a), R + ring_h))
    pts.append((0.0, 0.0, 2.0 * R))
    v = np.array(pts)
    v[1, 1] = 0.0  # azimuth 0 exactly
    return v


def build_icosahedron(edge_length: float = 3.0) -> CapsidGeometry:
    """Build the regular icosahedron of edge ``edge_length`` touching z=0 at vertex 0."""
    edge_length = float(edge_length)
    if not np.isfinite(edge_length) or edge_length <= 0:
        raise ValueError(f"edge_length must be positive, got {edge_length!r}")

    unit = _unit_vertices()
    vertices = edge_length * unit
    vertices.setflags(write=False)

    # Combinatorics are taken from the unit shape so they do not depend on scale.
    edges = tuple(
        (i, j)
        for i, j in itertools.combinations(range(N_VERTICES), 2)
        if abs(np.linalg.norm(unit[i] - unit[j]) - 1.0) < 1e-6
    )
    edge_set = set(edges)
    faces = tuple(
        (i, j, k)
        for i, j, k in itertools.combinations(range(N_VERTICES), 3)
        if {(i, j), (i, k), (j, k)} <= edge_set
    )
    neighbors = [set() for _ in range(N_VERTICES)]
    for i, j in edges:
        neighbors[i].add(j)
        neighbors[j].add(i)

    barycenters = vertices[list(faces)].mean(axis=1)
    barycenters.setflags(write=False)
    center = np.array([0.0, 0.0, circumradius(edge_length)])

    edge_faces: dict[tuple[int, int], list[int]] = {e: [] for e in edges}
    for m, (a, b, c) in enumerate(faces):
        for e in ((a, b), (a, c), (b, c)):
            edge_faces[e].append(m)

    pairs = []
    for (a, b), (m1, m2) in sorted(edge_faces.items(), key=lambda kv: tuple(kv[1])):
        g1 = barycenters[m1]
        n = np.cross(vertices[a] - g1, vertices[b] - g1)
        i, j = (a, b) if n @ (g1 - center) > 0 else (b, a)
        pairs.append(FacePair(m1, m2, i, j))

    return CapsidGeometry(
        edge_length=edge_length,
        vertices=vertices,
        edges=edges,
        faces=faces,
        barycenters=barycenters,
        face_adjacency=tuple(pairs),
        neighbor_sets=tuple(frozenset(s) for s in neighbors),
    )


def oriented_faces(geom: CapsidGeometry) -> list[tuple[int, int, int]]:
    """Faces reordered counter-clockwise as seen from outside."""
    center = np.array([0.0, 0.0, geom.circumradius])
    out = []
    for a, b, c in geom.faces:
        P = geom.vertices
        n = np.cross(P[b] - P[a], P[c] - P[a])
        out.append((a, b, c) if n @ (P[a] - center) > 0 else (a, c, b))
    return out


def _as_blocks(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.shape not in ((N_DOF,), (N_FREE, 3)):
        raise ValueError(f"displacement must have {N_DOF} components, got shape {U.shape}")
    return U.reshape(N_FREE, 3)


def full_displacement(U) -> np.ndarray:
    """(12, 3) displacement array with the pinned row u_0 = 0 prepended."""
    out = np.zeros((N_VERTICES, 3))
    out[1:] = _as_blocks(U)
    return out


def deformed_positions(geom: CapsidGeometry, U) -> tuple[np.ndarray, np.ndarray]:
    """Deformed vertex positions (12, 3) and deformed barycenters (20, 3)."""
    u = full_displacement(U)
    positions = geom.vertices + u
    bary = geom.barycenters + u[list(geom.faces)].sum(axis=1) / 3.0
    return positions, bary


def _face_angles(positions: np.ndarray, faces) -> np.ndarray:
    """Interior angle of each face at each of its three corners, shape (F, 3)."""
    tri = positions[np.asarray(faces)]
    out = np.empty(tri.shape[:2])
    for c in range(3):
        p = tri[:, c]
        a = tri[:, (c + 1) % 3] - p
        b = tri[:, (c + 2) % 3] - p
        cosang = np.einsum("ij,ij->i", a, b) / (
            np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
        )
        out[:, c] = np.arccos(np.clip(cosang, -1.0, 1.0))
    return out


def angular_defects(geom: CapsidGeometry, positions: np.ndarray | None = None) -> np.ndarray:
    """2*pi minus the sum of face angles, for all 12 vertices."""
    if positions is None:
        positions = geom.vertices
    angles = _face_angles(np.asarray(positions, dtype=float), geom.faces)
    total = np.zeros(N_VERTICES)
    np.add.at(total, np.asarray(geom.faces), angles)
    return 2.0 * np.pi - total


def angular_defect(geom: CapsidGeometry, vertex_index: int, positions: np.ndarray | None = None) -> float:
    if not 0 <= vertex_index < N_VERTICES:
        raise IndexError(f"vertex index {vertex_index} out of range 0..11")
    return float(angular_defects(geom, positions)[vertex_index])


def dihedral_angles(geom: CapsidGeometry, positions: np.ndarray | None = None) -> np.ndarray:
    """Interior dihedral angle for every adjacent face pair, in face_adjacency order.

    Equal to pi minus the angle between the two outward face normals.
    """
    if positions is None:
        positions = geom.vertices
    positions = np.asarray(positions, dtype=float)
    out = np.empty(len(geom.face_adjacency))
    for n, p in enumerate(geom.face_adjacency):
        g1 = positions[list(geom.faces[p.m1])].mean(axis=0)
        g2 = positions[list(geom.faces[p.m2])].mean(axis=0)
        q1 = np.cross(positions[p.i] - g1, positions[p.j] - g1)
        q2 = np.cross(positions[p.j] - g2, positions[p.i] - g2)
        # atan2 keeps full precision near the reference angle
        between = np.arctan2(np.linalg.norm(np.cross(q1, q2)), q1 @ q2)
        out[n] = np.pi - between
    return out
