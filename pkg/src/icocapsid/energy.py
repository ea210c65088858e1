"""Quadratic elastic energy of the cage: edge stretching plus linearized bending.

The displacement U lives in R^33: three components for each free vertex
1..11. The pinned vertex carries no column in any matrix.

    J_s(U) = (k_s / 2) |Sigma U|^2          one 3-row block per edge
    J_b(U) = k_b C^2 |Theta U|^2            one row per adjacent face pair
    J(U)   = J_s(U) + J_b(U) = 1/2 U^T Upsilon U
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import N_DOF, N_FREE, CapsidGeometry, angular_defects, deformed_positions

SINGULAR_RTOL = 1e-10


def _col(vertex: int) -> slice | None:
    """Columns of vertex ``vertex`` in U, or None for the pinned vertex."""
    if vertex == 0:
        return None
    return slice(3 * (vertex - 1), 3 * vertex)


def stretch_matrix(geom: CapsidGeometry) -> np.ndarray:
    """Sigma, 90 x 33: block e maps U to u_i - u_j for edge e = (i, j)."""
    sigma = np.zeros((3 * len(geom.edges), N_DOF))
    eye = np.eye(3)
    for e, (i, j) in enumerate(geom.edges):
        rows = slice(3 * e, 3 * e + 3)
        if (ci := _col(i)) is not None:
            sigma[rows, ci] += eye
        if (cj := _col(j)) is not None:
            sigma[rows, cj] -= eye
    return sigma


def bend_prefactor(geom: CapsidGeometry, pair) -> float:
    """|A x B| / |B|^4 with A = G1P_i x G1P_j, B = G2P_j x G2P_i."""
    P, G = geom.vertices, geom.barycenters
    A = np.cross(P[pair.i] - G[pair.m1], P[pair.j] - G[pair.m1])
    B = np.cross(P[pair.j] - G[pair.m2], P[pair.i] - G[pair.m2])
    return float(np.linalg.norm(np.cross(A, B)) / np.linalg.norm(B) ** 4)


def _dihedral_gradient(geom: CapsidGeometry, pair) -> dict[int, np.ndarray]:
    """First variation of the dihedral change alpha - alpha' per vertex.

    alpha - alpha' equals theta' - theta, where theta is the angle between the
    outward normals n1 = a1 x b1 and n2 = a2 x b2 built from the barycenter
    arms a1 = P_i - G1, b1 = P_j - G1, a2 = P_j - G2, b2 = P_i - G2. The arms
    move by (2/3) u_own - (1/3) sum of the other two vertices of the face.
    """
    P, G = geom.vertices, geom.barycenters
    i, j = pair.i, pair.j
    k1 = geom.third_vertex(pair.m1, i, j)
    k2 = geom.third_vertex(pair.m2, i, j)
    a1, b1 = P[i] - G[pair.m1], P[j] - G[pair.m1]
    a2, b2 = P[j] - G[pair.m2], P[i] - G[pair.m2]
    n1, n2 = np.cross(a1, b1), np.cross(a2, b2)
    s1, s2 = n1 @ n1, n2 @ n2
    norm12 = np.sqrt(s1 * s2)
    cos_t = (n1 @ n2) / norm12
    sin_t = np.linalg.norm(np.cross(n1, n2)) / norm12

    # d(cos theta) = w1 . dn1 + w2 . dn2
    w1 = n2 / norm12 - cos_t * n1 / s1
    w2 = n1 / norm12 - cos_t * n2 / s2

    # w . d(a x b) = da . (b x w) + db . (w x a)
    groups = [
        (np.cross(b1, w1), {i: 2 / 3, j: -1 / 3, k1: -1 / 3}),
        (np.cross(w1, a1), {j: 2 / 3, i: -1 / 3, k1: -1 / 3}),
        (np.cross(b2, w2), {j: 2 / 3, i: -1 / 3, k2: -1 / 3}),
        (np.cross(w2, a2), {i: 2 / 3, j: -1 / 3, k2: -1 / 3}),
    ]
    grad: dict[int, np.ndarray] = {}
    for vec, weights in groups:
        for r, w in weights.items():
            grad[r] = grad.get(r, np.zeros(3)) + w * vec
    # theta' - theta = -d(cos theta) / sin theta
    return {r: -g / sin_t for r, g in grad.items()}


def bend_rows(geom: CapsidGeometry) -> tuple[np.ndarray, float]:
    """Theta (30 x 33) and the uniform prefactor C.

    Row p is the linear functional J_p with C * J_p(U) equal to the
    first-order change of the interior dihedral angle of pair p.
    """
    prefactors = np.array([bend_prefactor(geom, p) for p in geom.face_adjacency])
    C = float(prefactors.mean())
    if not np.all(np.isfinite(prefactors)) or C <= 0:
        raise RuntimeError("degenerate face in reference configuration")
    theta = np.zeros((len(geom.face_adjacency), N_DOF))
    for row, pair in enumerate(geom.face_adjacency):
        for r, g in _dihedral_gradient(geom, pair).items():
            if (c := _col(r)) is not None:
                theta[row, c] += g / C
    return theta, C


@dataclass(frozen=True, eq=False)
class EnergyModel:
    geometry: CapsidGeometry
    k_s: float
    k_b: float
    sigma: np.ndarray
    theta: np.ndarray
    C: float
    upsilon: np.ndarray

    @property
    def stretch_hessian(self) -> np.ndarray:
        return self.k_s * self.sigma.T @ self.sigma

    @property
    def bend_hessian(self) -> np.ndarray:
        return 2.0 * self.k_b * self.C**2 * self.theta.T @ self.theta


def assemble(geom: CapsidGeometry, k_s: float = 0.25, k_b: float = 1.7) -> EnergyModel:
    if not (k_s > 0 and k_b > 0):
        raise ValueError(f"stiffnesses must be positive, got k_s={k_s}, k_b={k_b}")
    sigma = stretch_matrix(geom)
    theta, C = bend_rows(geom)
    ups = k_s * sigma.T @ sigma + 2.0 * k_b * C**2 * theta.T @ theta
    ups = 0.5 * (ups + ups.T)
    for a in (sigma, theta, ups):
        a.setflags(write=False)
    return EnergyModel(geom, float(k_s), float(k_b), sigma, theta, C, ups)


def _vec(U) -> np.ndarray:
    U = np.asarray(U, dtype=float).reshape(-1)
    if U.shape != (N_DOF,):
        raise ValueError(f"displacement must have {N_DOF} components, got {U.size}")
    return U


def stretch_energy(model: EnergyModel, U) -> float:
    s = model.sigma @ _vec(U)
    return 0.5 * model.k_s * float(s @ s)


def bend_energy(model: EnergyModel, U) -> float:
    t = model.theta @ _vec(U)
    return model.k_b * model.C**2 * float(t @ t)


def total_energy(model: EnergyModel, U) -> float:
    return stretch_energy(model, U) + bend_energy(model, U)


def gradient(model: EnergyModel, U) -> np.ndarray:
    return model.upsilon @ _vec(U)


def dihedral_change(model: EnergyModel, U) -> np.ndarray:
    """Linearized alpha - alpha' for every adjacent face pair."""
    return model.C * (model.theta @ _vec(U))


def gaussian_curvature_energy(geom: CapsidGeometry, U, k_G: float = 1.0) -> float:
    """(k_G / 2) * (sum of reference defects - sum of deformed defects).

    Vanishes for any deformation that keeps the cage convex.
    """
    positions, _ = deformed_positions(geom, U)
    return 0.5 * k_G * float(angular_defects(geom).sum() - angular_defects(geom, positions).sum())


def dilation(geom: CapsidGeometry, eps: float = 1.0) -> np.ndarray:
    """u_i = eps * (P_i - P_0): uniform scaling about the contact point."""
    return (eps * (geom.vertices[1:] - geom.vertices[0])).reshape(-1)


@dataclass(frozen=True)
class SpectrumReport:
    min_eig_stretch: float
    max_eig_stretch: float
    min_eig_theta: float
    max_eig_theta: float
    rank_theta: int
    theta_null_space: np.ndarray  # (33, 33 - rank)
    null_stretch_energies: np.ndarray

    @property
    def theta_singular(self) -> bool:
        return self.min_eig_theta <= SINGULAR_RTOL * self.max_eig_theta

    @property
    def stretch_positive_definite(self) -> bool:
        return self.min_eig_stretch > 0

    @property
    def no_bending_without_stretching(self) -> bool:
        return bool(np.all(self.null_stretch_energies > 0))


def certify_spectrum(model: EnergyModel) -> SpectrumReport:
    """Check that the stretch part is definite and Theta^T Theta is not."""
    ev_s = np.linalg.eigvalsh(model.stretch_hessian)
    ev_t = np.linalg.eigvalsh(model.theta.T @ model.theta)
    _, sv, vt = np.linalg.svd(model.theta)
    rank = int(np.sum(sv > SINGULAR_RTOL**0.5 * sv[0]))
    null = vt[rank:].T
    energies = np.array([stretch_energy(model, null[:, k]) for k in range(null.shape[1])])
    return SpectrumReport(
        min_eig_stretch=float(ev_s[0]),
        max_eig_stretch=float(ev_s[-1]),
        min_eig_theta=float(ev_t[0]),
        max_eig_theta=float(ev_t[-1]),
        rank_theta=rank,
        theta_null_space=null,
        null_stretch_energies=energies,
    )


__all__ = [
    "EnergyModel",
    "SpectrumReport",
    "assemble",
    "bend_energy",
    "bend_prefactor",
    "bend_rows",
    "certify_spectrum",
    "dihedral_change",
    "dilation",
    "gaussian_curvature_energy",
    "gradient",
    "stretch_energy",
    "stretch_matrix",
    "total_energy",
    "N_FREE",
]
