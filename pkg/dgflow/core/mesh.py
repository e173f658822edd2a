"""Structured hexahedral box meshes and curvilinear mapping metrics.

Elements are numbered ``e = i + nx*(j + ny*k)``. Local faces are numbered
``2*axis + side`` (0: xi-, 1: xi+, 2: eta-, 3: eta+, 4: zeta-, 5: zeta+).
Metric terms are computed in conservative curl form on Gauss-Lobatto
geometry nodes and interpolated to the solution nodes, so the discrete
metric identities hold for either node family.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .basis import NodeKind, along_axis, build_basis, interpolation_matrix
from .exceptions import GeometryError, InvalidOrderError, MeshValidityError
from .field import OrderMap, OrderTriple
from .logging_config import ErrorCodes, get_logger

logger = get_logger(__name__)

# Gauss rule order of the reference element volumes on curved meshes.
VOLUME_RULE_ORDER = 16

BOX_FACES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")
# Tangential reference axes of a face normal to the given axis.
TANGENT_AXES = ((1, 2), (0, 2), (0, 1))
# (transpose, flip first face axis, flip second face axis) per orientation code.
ORIENTATIONS = tuple(
    (bool(code & 1), bool(code & 2), bool(code & 4)) for code in range(8)
)


class CurvatureSpec(BaseModel):
    """Smooth interior perturbation applied on top of the affine box map."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["sinusoidal"] = "sinusoidal"
    amplitude: float = 0.1
    wavenumber: int = 1

    @field_validator("wavenumber")
    @classmethod
    def _positive_wavenumber(cls, v: int) -> int:
        if v < 1:
            raise ValueError("curvature wavenumber must be >= 1")
        return v


class MeshSpec(BaseModel):
    """Box mesh description carried inline by the control file.

    Attributes:
        elements (Tuple[int, int, int]): Element counts (nx, ny, nz).
        lower (Tuple[float, float, float]): Lower box corner.
        upper (Tuple[float, float, float]): Upper box corner.
        periodic (Tuple[bool, bool, bool]): Periodicity per axis.
        curvature (Optional[CurvatureSpec]): Interior perturbation, None for affine.
        boundary_tags (Dict[str, str]): Box face name to boundary-condition name.
    """

    model_config = ConfigDict(frozen=True)

    elements: Tuple[int, int, int] = (1, 1, 1)
    lower: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    upper: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    periodic: Tuple[bool, bool, bool] = (True, True, True)
    curvature: Optional[CurvatureSpec] = None
    boundary_tags: Dict[str, str] = {}

    @model_validator(mode="after")
    def _check(self) -> "MeshSpec":
        check_mesh_spec(self)
        return self

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def n_elements(self) -> int:
        nx, ny, nz = self.elements
        return nx * ny * nz


def check_mesh_spec(spec: MeshSpec) -> None:
    """Validate counts, bounds and face tags of a mesh description.

    Raises:
        GeometryError: On non-positive counts, degenerate bounds or unknown face names.
    """
    if min(spec.elements) < 1:
        raise GeometryError(
            f"Element counts must be >= 1, got {spec.elements}",
            elements=spec.elements,
        )
    extent = np.asarray(spec.upper, dtype=float) - np.asarray(spec.lower, dtype=float)
    if not np.all(np.isfinite(extent)) or np.any(extent <= 0):
        raise GeometryError(
            f"Degenerate box bounds {spec.lower} .. {spec.upper}",
            lower=spec.lower,
            upper=spec.upper,
        )
    unknown = sorted(set(spec.boundary_tags) - set(BOX_FACES))
    if unknown:
        raise GeometryError(f"Unknown box faces {unknown}", faces=unknown)


@dataclass(frozen=True)
class InteriorFace:
    """Face shared by two elements (possibly the same one on a periodic torus).

    ``translation`` maps left face coordinates onto right face coordinates.
    """

    left: int
    left_face: int
    right: int
    right_face: int
    orientation: int = 0
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def periodic(self) -> bool:
        return any(t != 0.0 for t in self.translation)


@dataclass(frozen=True)
class BoundaryFace:
    element: int
    face: int
    tag: str


@dataclass(frozen=True)
class Mesh:
    """Box mesh with connectivity.

    Attributes:
        spec (MeshSpec): Description the mesh was built from.
        lower_corners (np.ndarray): (E, 3) lower corner of each element.
        sizes (np.ndarray): (3,) element extent per axis.
        interior_faces (List[InteriorFace]): Each shared face exactly once.
        boundary_faces (List[BoundaryFace]): Non-periodic box faces.
    """

    spec: MeshSpec
    lower_corners: np.ndarray
    sizes: np.ndarray
    interior_faces: List[InteriorFace] = field(default_factory=list)
    boundary_faces: List[BoundaryFace] = field(default_factory=list)

    @property
    def n_elements(self) -> int:
        return self.lower_corners.shape[0]

    @property
    def curved(self) -> bool:
        return self.spec.curvature is not None and self.spec.curvature.amplitude != 0.0

    def element_index(self, i: int, j: int, k: int) -> int:
        nx, ny, _ = self.spec.elements
        return i + nx * (j + ny * k)

    def element_ijk(self, e: int) -> Tuple[int, int, int]:
        nx, ny, _ = self.spec.elements
        return e % nx, (e // nx) % ny, e // (nx * ny)

    def volume(self) -> float:
        return float(np.prod(self.spec.extent))

    @cached_property
    def element_volumes(self) -> np.ndarray:
        """(E,) element volumes, independent of any solution order.

        Curved elements are integrated with a fixed Gauss rule of order
        ``VOLUME_RULE_ORDER`` applied to det(dX/dxi).
        """
        if not self.curved:
            return np.full(self.n_elements, float(np.prod(self.sizes)))
        basis = build_basis(VOLUME_RULE_ORDER, NodeKind.GAUSS)
        grid = np.stack(np.meshgrid(basis.nodes, basis.nodes, basis.nodes, indexing="ij"))
        weights = np.einsum("i,j,k->ijk", basis.weights, basis.weights, basis.weights)
        volumes = np.empty(self.n_elements)
        for e in range(self.n_elements):
            x = self.mapping(e, grid)
            dx = np.stack([along_axis(basis.diff_matrix, x, a) for a in range(3)], axis=1)
            det = np.linalg.det(np.moveaxis(dx, (0, 1), (-2, -1)))
            volumes[e] = np.sum(weights * det)
        return volumes

    def mapping(self, e: int, xi: np.ndarray) -> np.ndarray:
        """Physical coordinates of reference points ``xi`` (3, ...) in element ``e``."""
        xi = np.asarray(xi, dtype=float)
        shape = (3,) + (1,) * (xi.ndim - 1)
        lower = self.lower_corners[e].reshape(shape)
        half = 0.5 * self.sizes.reshape(shape)
        x = lower + half * (xi + 1.0)
        curvature = self.spec.curvature
        if curvature is None or curvature.amplitude == 0.0:
            return x
        box_lower = np.asarray(self.spec.lower).reshape(shape)
        extent = self.spec.extent.reshape(shape)
        unit = (x - box_lower) / extent
        wave = 2.0 * np.pi * curvature.wavenumber
        bump = np.prod(np.sin(wave * unit), axis=0)
        return x + curvature.amplitude * extent * bump


def build_box_mesh(spec: MeshSpec) -> Mesh:
    """Build the elements and face connectivity of a box mesh.

    Args:
        spec (MeshSpec): Box description.

    Returns:
        Mesh: Mesh with interior faces listed once from their left element.

    Raises:
        GeometryError: On degenerate bounds or missing boundary tags.
    """
    check_mesh_spec(spec)
    nx, ny, nz = spec.elements
    counts = np.array(spec.elements)
    sizes = spec.extent / counts
    lower = np.asarray(spec.lower, dtype=float)

    corners = np.empty((nx * ny * nz, 3))
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                e = i + nx * (j + ny * k)
                corners[e] = lower + sizes * np.array([i, j, k])

    mesh = Mesh(spec=spec, lower_corners=corners, sizes=sizes)
    for e in range(mesh.n_elements):
        ijk = mesh.element_ijk(e)
        for axis in range(3):
            for side in (0, 1):
                face = 2 * axis + side
                step = 1 if side else -1
                nb = list(ijk)
                nb[axis] += step
                wrapped = not 0 <= nb[axis] < counts[axis]
                if wrapped and not spec.periodic[axis]:
                    name = BOX_FACES[face]
                    tag = spec.boundary_tags.get(name)
                    if tag is None:
                        raise GeometryError(
                            f"Box face {name} is neither periodic nor tagged",
                            face=name,
                        )
                    mesh.boundary_faces.append(BoundaryFace(e, face, tag))
                    continue
                if side == 0:
                    continue  # paired from the neighbour's + face
                translation = [0.0, 0.0, 0.0]
                if wrapped:
                    nb[axis] %= counts[axis]
                    translation[axis] = -float(spec.extent[axis])
                mesh.interior_faces.append(
                    InteriorFace(
                        left=e,
                        left_face=face,
                        right=mesh.element_index(*nb),
                        right_face=face - 1,
                        orientation=0,
                        translation=tuple(translation),
                    )
                )

    logger.info(
        "Built box mesh",
        elements=spec.elements,
        interior_faces=len(mesh.interior_faces),
        boundary_faces=len(mesh.boundary_faces),
        curved=mesh.curved,
        operation="build_box_mesh",
    )
    return mesh


def orient_face(values: np.ndarray, code: int) -> np.ndarray:
    """Apply orientation ``code`` to the last two (face node) axes."""
    transpose, flip_a, flip_b = ORIENTATIONS[code]
    if transpose:
        values = np.swapaxes(values, -1, -2)
    if flip_a:
        values = values[..., ::-1, :]
    if flip_b:
        values = values[..., :, ::-1]
    return values


def inverse_orientation(code: int) -> int:
    """Orientation code undoing ``code``."""
    transpose, flip_a, flip_b = ORIENTATIONS[code]
    if transpose:
        flip_a, flip_b = flip_b, flip_a
    return int(transpose) | (int(flip_a) << 1) | (int(flip_b) << 2)


def face_index_map(code: int, shape: Tuple[int, int]) -> np.ndarray:
    """Lookup table: entry [a, b] is the flat source index after orientation."""
    return orient_face(np.arange(shape[0] * shape[1]).reshape(shape), code)


@dataclass(frozen=True, eq=False)
class FaceGeometry:
    """Geometry of one local face sampled at the element's face nodes.

    Attributes:
        coordinates (np.ndarray): (3, na, nb) physical node positions.
        scaled_normal (np.ndarray): (3, na, nb) outward normal times surface Jacobian.
        normal (np.ndarray): (3, na, nb) outward unit normal.
        surface_jacobian (np.ndarray): (na, nb) positive area factor.
    """

    coordinates: np.ndarray
    scaled_normal: np.ndarray
    normal: np.ndarray
    surface_jacobian: np.ndarray


@dataclass(frozen=True, eq=False)
class GeometryMetrics:
    """Mapping metrics of one element at its solution nodes.

    Attributes:
        coordinates (np.ndarray): (3, n1, n2, n3) physical node positions.
        jacobian (np.ndarray): (n1, n2, n3) mapping Jacobian J.
        contravariant (np.ndarray): (3, 3, n1, n2, n3); [a, n] is component n of Ja^a.
        faces (Tuple[FaceGeometry, ...]): Six local faces.
    """

    coordinates: np.ndarray
    jacobian: np.ndarray
    contravariant: np.ndarray
    faces: Tuple[FaceGeometry, ...]


def face_trace(values: np.ndarray, bases: Sequence, face: int) -> np.ndarray:
    """Evaluate (..., n1, n2, n3) nodal data on local face ``face``."""
    axis, side = divmod(face, 2)
    vector = bases[axis].boundary(side)
    return np.tensordot(
        np.moveaxis(values, values.ndim - 3 + axis, -1), vector, axes=([-1], [0])
    )


def geometry_orders(mesh: Mesh, orders: OrderMap) -> List[OrderTriple]:
    """Geometry order per element and axis.

    Along axis ``a`` every element of a slab (same index along ``a``) uses
    the lowest solution order of that slab along ``a``. Face neighbours
    therefore interpolate their shared face at the same nodes and carry
    identical face metrics, whatever their solution orders.
    """
    nx, ny, nz = mesh.spec.elements
    table = np.asarray(orders.orders, dtype=np.int64).reshape(nz, ny, nx, 3)
    gx = table[..., 0].min(axis=(0, 1))
    gy = table[..., 1].min(axis=(0, 2))
    gz = table[..., 2].min(axis=(1, 2))
    result = []
    for e in range(mesh.n_elements):
        i, j, k = mesh.element_ijk(e)
        result.append((max(int(gx[i]), 1), max(int(gy[j]), 1), max(int(gz[k]), 1)))
    return result


def compute_metrics(
    mesh: Mesh,
    orders: OrderMap,
    kind: NodeKind | str = NodeKind.GAUSS_LOBATTO,
) -> List[GeometryMetrics]:
    """Compute curl-form metrics of every element.

    Geometry is sampled at Gauss-Lobatto nodes of the orders returned by
    :func:`geometry_orders`, never above the solution orders. Metrics are
    built as the reference curl of interpolated ``X_l grad X_m`` products
    and then interpolated to the solution nodes. J is det(dX/dxi) of the
    interpolated geometry; on curved meshes it is rescaled per element so
    its discrete volume equals ``Mesh.element_volumes``.

    Args:
        mesh (Mesh): The mesh.
        orders (OrderMap): Solution orders of every element.
        kind (NodeKind | str): Solution node family.

    Returns:
        List[GeometryMetrics]: One entry per element.

    Raises:
        InvalidOrderError: If an element has an order below 1.
        MeshValidityError: If J is not positive somewhere; names the element.
    """
    kind = NodeKind(kind)
    geometry = geometry_orders(mesh, orders)
    result = []
    for e in range(mesh.n_elements):
        result.append(element_metrics(mesh, e, orders[e], kind, geometry[e]))
    logger.debug(
        "Computed element metrics",
        elements=mesh.n_elements,
        kind=kind,
        operation="compute_metrics",
    )
    return result


def element_metrics(
    mesh: Mesh,
    e: int,
    order: Sequence[int],
    kind: NodeKind,
    geometry_order: Optional[Sequence[int]] = None,
) -> GeometryMetrics:
    if min(order) < 1:
        raise InvalidOrderError(
            f"Element {e} needs orders >= 1 for a 3D geometry", element=e
        )
    if geometry_order is None:
        geometry_order = order
    geo = [build_basis(g, NodeKind.GAUSS_LOBATTO) for g in geometry_order]
    sol = [build_basis(p, kind) for p in order]

    grid = np.stack(np.meshgrid(*(b.nodes for b in geo), indexing="ij"))
    x_geo = mesh.mapping(e, grid)
    # dX[n, a] = dX_n / dxi_a on the geometry grid.
    dx = np.stack(
        [along_axis(geo[a].diff_matrix, x_geo, a) for a in range(3)], axis=1
    )

    ja_geo = np.empty_like(dx)
    for n in range(3):
        m, l = (n + 1) % 3, (n + 2) % 3
        v = x_geo[l][None] * dx[m]  # v_a = X_l dX_m/dxi_a
        dv = [[along_axis(geo[b].diff_matrix, v[a], b) for b in range(3)] for a in range(3)]
        ja_geo[0, n] = -(dv[2][1] - dv[1][2])
        ja_geo[1, n] = -(dv[0][2] - dv[2][0])
        ja_geo[2, n] = -(dv[1][0] - dv[0][1])

    to_sol = [interpolation_matrix(geo[a], sol[a].nodes) for a in range(3)]

    def resample(values: np.ndarray) -> np.ndarray:
        for a in range(3):
            values = along_axis(to_sol[a], values, a)
        return values

    coords = resample(x_geo)
    ja = resample(ja_geo)
    # J = det(dX/dxi) of the interpolated geometry at the solution nodes.
    jac = np.linalg.det(np.moveaxis(resample(dx), (0, 1), (-2, -1)))

    if np.any(jac <= 0):
        node = tuple(int(i) for i in np.argwhere(jac <= 0)[0])
        logger.error(
            "Non-positive mapping Jacobian",
            element=e,
            node=node,
            error_code=ErrorCodes.MESH_VALIDITY_ERROR,
            operation="compute_metrics",
        )
        raise MeshValidityError(
            f"Non-positive Jacobian in element {e} at node {node}",
            element=e,
            node=node,
        )
    if mesh.curved:
        # Discrete element volume matches the order-independent reference, so
        # order changes keep constants and J-weighted integrals together.
        weights = np.einsum("i,j,k->ijk", *(b.weights for b in sol))
        jac = jac * (mesh.element_volumes[e] / np.sum(weights * jac))

    faces = []
    for face in range(6):
        axis, side = divmod(face, 2)
        sign = 1.0 if side else -1.0
        scaled = sign * face_trace(ja[axis], sol, face)
        area = np.sqrt(np.sum(scaled**2, axis=0))
        faces.append(
            FaceGeometry(
                coordinates=face_trace(coords, sol, face),
                scaled_normal=scaled,
                normal=scaled / area,
                surface_jacobian=area,
            )
        )
    return GeometryMetrics(
        coordinates=coords, jacobian=jac, contravariant=ja, faces=tuple(faces)
    )


def metric_identity_residual(metrics: GeometryMetrics, bases: Sequence) -> float:
    """Max over nodes of |sum_a d(Ja^a)/dxi_a| with the solution bases."""
    div = sum(
        along_axis(bases[a].diff_matrix, metrics.contravariant[a], a) for a in range(3)
    )
    return float(np.max(np.abs(div)))
