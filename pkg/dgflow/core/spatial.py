"""Semi-discrete DGSEM right-hand side.

A residual evaluation runs in two phases per pass. Face tasks gather
traces, project them through mortars and compute each interface flux
exactly once, writing both sides' face-flux slots. Element tasks then
combine volume integrals with the lifted face fluxes. Elements are
processed in fixed-size chunks of one order group, so the arithmetic is
identical for any worker count.

Viscous and artificial fluxes use BR1: gradients are lifted from
arithmetic-mean interface values and the viscous interface flux is the
mean of both sides' fluxes.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .basis import NodalBasis, NodeKind, along_axis, build_basis
from .boundary import (
    BoundaryCondition,
    BoundaryKind,
    boundary_state,
    boundary_viscous_flux,
)
from .exceptions import ConfigurationError, DimensionError
from .field import OrderMap, OrderTriple, SolutionField
from .logging_config import ErrorCodes, get_logger
from .mesh import (
    ORIENTATIONS,
    TANGENT_AXES,
    Mesh,
    compute_metrics,
    face_trace,
    inverse_orientation,
    orient_face,
)
from .mortar import Mortar, build_mortar
from .physics import (
    GasProperties,
    RiemannSolver,
    TwoPointFlux,
    entropy_flux_potential,
    entropy_variables,
    euler_flux,
    euler_flux_normal,
    riemann_flux,
    smagorinsky_viscosity,
    two_point_flux_normal,
    viscous_flux,
)
from .shock_capturing import (
    ArtificialFluxConfig,
    blend_artificial_viscosity,
    density_sensor,
    svv_filtered_flux,
)

logger = get_logger(__name__)

CHUNK_SIZE = 16

SourceTerm = Callable[[np.ndarray, float], np.ndarray]
GradientField = Dict[OrderTriple, np.ndarray]


@dataclass(frozen=True, eq=False)
class ElementGroup:
    """Metrics of all elements sharing one order triple, batched.

    Attributes:
        key (OrderTriple): Orders of the group.
        elements (np.ndarray): Global element ids, ascending.
        bases (Tuple[NodalBasis, ...]): Bases of the three axes.
        jacobian (np.ndarray): (E, n1, n2, n3).
        contravariant (np.ndarray): (3, 3, E, n1, n2, n3) as [a, n].
        coordinates (np.ndarray): (3, E, n1, n2, n3).
        scaled_normals (Tuple[np.ndarray, ...]): Per local face (3, E, na, nb).
        normals (Tuple[np.ndarray, ...]): Per local face unit normals.
        areas (Tuple[np.ndarray, ...]): Per local face (E, na, nb).
        weights (np.ndarray): Tensor quadrature weights (n1, n2, n3).
        filter_width (np.ndarray): (E,) LES filter width V^(1/3) / (mean P + 1).
    """

    key: OrderTriple
    elements: np.ndarray
    bases: Tuple[NodalBasis, ...]
    jacobian: np.ndarray
    contravariant: np.ndarray
    coordinates: np.ndarray
    scaled_normals: Tuple[np.ndarray, ...]
    normals: Tuple[np.ndarray, ...]
    areas: Tuple[np.ndarray, ...]
    weights: np.ndarray
    filter_width: np.ndarray

    def chunks(self) -> List[slice]:
        count = len(self.elements)
        return [slice(s, min(s + CHUNK_SIZE, count)) for s in range(0, count, CHUNK_SIZE)]


@dataclass(frozen=True, eq=False)
class FaceBatch:
    """Interior faces sharing group keys, local faces, orientation and mortar."""

    left_key: OrderTriple
    left_face: int
    left: np.ndarray
    right_key: OrderTriple
    right_face: int
    right: np.ndarray
    orientation: int
    mortar: Mortar
    scaled_normal: np.ndarray
    normal: np.ndarray
    area: np.ndarray
    face_ids: np.ndarray

    def right_to_left(self, values: np.ndarray) -> np.ndarray:
        return orient_face(values, self.orientation)

    def left_to_right(self, values: np.ndarray) -> np.ndarray:
        return orient_face(values, inverse_orientation(self.orientation))


@dataclass(frozen=True, eq=False)
class BoundaryBatch:
    key: OrderTriple
    face: int
    local: np.ndarray
    condition: BoundaryCondition


@dataclass
class SurfaceFluxes:
    """Outward face fluxes (times surface Jacobian) per group and local face.

    ``fluxes[key][f]`` has shape (5, E, na, nb) and holds the inviscid
    numerical flux minus the viscous one. ``interface_production`` holds the
    entropy production of every interior face when it was recorded.
    """

    fluxes: Dict[OrderTriple, List[np.ndarray]]
    interface_production: Optional[np.ndarray] = None


def _face_orders(key: OrderTriple, face: int) -> Tuple[int, int]:
    t = TANGENT_AXES[face // 2]
    return key[t[0]], key[t[1]]


def lift(
    target: np.ndarray,
    face_values: np.ndarray,
    bases: Sequence[NodalBasis],
    face: int,
    sign: float,
) -> None:
    """Add ``sign * l_i(side) / w_i * face_values`` to (..., n1, n2, n3) data in place."""
    axis, side = divmod(face, 2)
    basis = bases[axis]
    position = target.ndim - 3 + axis
    shape = [1] * target.ndim
    shape[position] = basis.size
    vector = (basis.boundary(side) / basis.weights).reshape(shape)
    target += sign * np.expand_dims(face_values, position) * vector


def volume_integral_weak(
    contravariant_flux: np.ndarray, bases: Sequence[NodalBasis]
) -> np.ndarray:
    """Weak-form volume term sum_a (w_m D_mi / w_i) Ft^a_m.

    Args:
        contravariant_flux (np.ndarray): Ft^a on axis 0, shape (3, ..., n1, n2, n3).
        bases (Sequence[NodalBasis]): Bases of the three axes.

    Returns:
        np.ndarray: Contribution to ``J du/dt`` after mass-matrix inversion.
    """
    return sum(
        along_axis(bases[a].weak_diff, contravariant_flux[a], a) for a in range(3)
    )


def volume_integral_split(
    u: np.ndarray,
    contravariant: np.ndarray,
    bases: Sequence[NodalBasis],
    variant: TwoPointFlux | str,
    gamma: float,
) -> np.ndarray:
    """Flux-differencing volume term -sum_a 2 sum_m D_im f#(u_i, u_m).(Ja_i + Ja_m)/2.

    Args:
        u (np.ndarray): States, shape (5, ..., n1, n2, n3).
        contravariant (np.ndarray): Metrics (3, 3, ..., n1, n2, n3) as [a, n].
        bases (Sequence[NodalBasis]): Gauss-Lobatto bases of the three axes.
        variant (TwoPointFlux | str): Two-point flux.
        gamma (float): Heat-capacity ratio.

    Returns:
        np.ndarray: Contribution to ``J du/dt``, same shape as ``u``.

    Raises:
        ConfigurationError: If any basis is not Gauss-Lobatto.
    """
    if any(b.kind is not NodeKind.GAUSS_LOBATTO for b in bases):
        raise ConfigurationError(
            "split forms require Gauss-Lobatto nodes", variant=str(variant)
        )
    total = np.zeros_like(u)
    for a in range(3):
        position = u.ndim - 3 + a
        ua = np.moveaxis(u, position, -1)
        ja = np.moveaxis(contravariant[a], position, -1)
        direction = 0.5 * (ja[..., :, None] + ja[..., None, :])
        pair = two_point_flux_normal(
            variant, ua[..., :, None], ua[..., None, :], direction, gamma
        )
        term = 2.0 * np.einsum("im,...im->...i", bases[a].diff_matrix, pair)
        total -= np.moveaxis(term, -1, position)
    return total


class Discretization:
    """DGSEM operator on one mesh and order map.

    Attributes:
        mesh (Mesh): The mesh.
        orders (OrderMap): Element orders.
        gas (GasProperties): Gas model.
        kind (NodeKind): Node family.
        riemann (RiemannSolver): Interface flux.
        volume_flux (Optional[TwoPointFlux]): Split-form flux; None for the weak form.
        boundaries (Dict[str, BoundaryCondition]): Conditions by tag.
        shock_capturing (Optional[ArtificialFluxConfig]): SVV settings.
        source (Optional[SourceTerm]): ``s(x, t)`` added to du/dt.
        threads (int): Worker threads for the face and element phases.
    """

    def __init__(
        self,
        mesh: Mesh,
        orders: OrderMap,
        gas: GasProperties,
        *,
        kind: NodeKind | str = NodeKind.GAUSS_LOBATTO,
        riemann: RiemannSolver | str = RiemannSolver.LAX_FRIEDRICHS,
        volume_flux: Optional[TwoPointFlux | str] = None,
        boundaries: Optional[Dict[str, BoundaryCondition]] = None,
        shock_capturing: Optional[ArtificialFluxConfig] = None,
        source: Optional[SourceTerm] = None,
        threads: int = 1,
    ):
        if len(orders) != mesh.n_elements:
            raise DimensionError(
                f"Order map has {len(orders)} entries for {mesh.n_elements} elements",
                expected=mesh.n_elements,
            )
        self.mesh = mesh
        self.orders = orders
        self.gas = gas
        self.kind = NodeKind(kind)
        try:
            self.riemann = RiemannSolver(riemann)
            self.volume_flux = None if volume_flux is None else TwoPointFlux(volume_flux)
        except ValueError as e:
            raise ConfigurationError(str(e)) from e
        self.boundaries = dict(boundaries or {})
        self.shock_capturing = shock_capturing
        self.source = source
        self.threads = max(1, int(threads))
        self.interface_production: Optional[np.ndarray] = None

        if self.kind is NodeKind.GAUSS and self.volume_flux is not None:
            logger.error(
                "Split form requested on Gauss nodes",
                volume_flux=self.volume_flux,
                error_code=ErrorCodes.CONFIGURATION_ERROR,
                operation="Discretization",
            )
            raise ConfigurationError(
                "split forms require Gauss-Lobatto nodes",
                volume_flux=self.volume_flux.value,
            )
        if self.kind is NodeKind.GAUSS and self.svv_active:
            raise ConfigurationError("SVV shock capturing requires Gauss-Lobatto nodes")

        metrics = compute_metrics(mesh, orders, self.kind)
        self._groups: Dict[OrderTriple, ElementGroup] = {}
        self._locate: Dict[int, Tuple[OrderTriple, int]] = {}
        for key, elements in orders.groups().items():
            self._groups[key] = self._build_group(key, elements, metrics)
            for local, e in enumerate(elements):
                self._locate[int(e)] = (key, local)
        self.face_batches = self._build_face_batches()
        self.boundary_batches = self._build_boundary_batches()

        logger.info(
            "Built discretization",
            elements=mesh.n_elements,
            groups=len(self._groups),
            face_batches=len(self.face_batches),
            nonconforming=sum(not b.mortar.conforming for b in self.face_batches),
            kind=self.kind,
            riemann=self.riemann,
            volume_flux=self.volume_flux,
            viscous=self.viscous,
            operation="Discretization",
        )

    @property
    def viscous(self) -> bool:
        return self.gas.viscous

    @property
    def svv_active(self) -> bool:
        return self.shock_capturing is not None and self.shock_capturing.mu_a > 0

    @property
    def groups(self) -> Dict[OrderTriple, ElementGroup]:
        return self._groups

    def group(self, key: OrderTriple) -> ElementGroup:
        return self._groups[key]

    def locate(self, e: int) -> Tuple[OrderTriple, int]:
        return self._locate[e]

    def with_orders(self, orders: OrderMap) -> "Discretization":
        """Same mesh and numerics on a different order map."""
        return Discretization(
            self.mesh,
            orders,
            self.gas,
            kind=self.kind,
            riemann=self.riemann,
            volume_flux=self.volume_flux,
            boundaries=self.boundaries,
            shock_capturing=self.shock_capturing,
            source=self.source,
            threads=self.threads,
        )

    # -- construction -------------------------------------------------------

    def _build_group(self, key, elements, metrics) -> ElementGroup:
        ms = [metrics[e] for e in elements]
        bases = tuple(build_basis(p, self.kind) for p in key)
        weights = np.einsum("i,j,k->ijk", *(b.weights for b in bases))
        jacobian = np.stack([m.jacobian for m in ms])
        volume = np.einsum("eijk,ijk->e", jacobian, weights)
        return ElementGroup(
            key=key,
            elements=elements,
            bases=bases,
            jacobian=jacobian,
            contravariant=np.stack([m.contravariant for m in ms], axis=2),
            coordinates=np.stack([m.coordinates for m in ms], axis=1),
            scaled_normals=tuple(
                np.stack([m.faces[f].scaled_normal for m in ms], axis=1) for f in range(6)
            ),
            normals=tuple(
                np.stack([m.faces[f].normal for m in ms], axis=1) for f in range(6)
            ),
            areas=tuple(
                np.stack([m.faces[f].surface_jacobian for m in ms]) for f in range(6)
            ),
            weights=weights,
            filter_width=np.cbrt(volume) / (np.mean(key) + 1.0),
        )

    def _build_face_batches(self) -> List[FaceBatch]:
        pending: Dict[tuple, List[int]] = {}
        for fid, face in enumerate(self.mesh.interior_faces):
            lkey, _ = self._locate[face.left]
            rkey, _ = self._locate[face.right]
            signature = (lkey, face.left_face, rkey, face.right_face, face.orientation)
            pending.setdefault(signature, []).append(fid)

        batches = []
        for (lkey, lface, rkey, rface, code), fids in pending.items():
            faces = [self.mesh.interior_faces[i] for i in fids]
            left = np.array([self._locate[f.left][1] for f in faces], dtype=np.int64)
            right = np.array([self._locate[f.right][1] for f in faces], dtype=np.int64)
            left_orders = _face_orders(lkey, lface)
            right_orders = _face_orders(rkey, rface)
            if ORIENTATIONS[code][0]:
                right_orders = right_orders[::-1]
            mortar = build_mortar(left_orders, right_orders, self.kind)

            # Both sides carry the same face geometry (see geometry_orders), so
            # their projected normals agree at the mortar orders.
            left_normal = self._groups[lkey].scaled_normals[lface][:, left]
            right_normal = self._groups[rkey].scaled_normals[rface][:, right]
            scaled = 0.5 * (
                mortar.project(0, left_normal)
                - mortar.project(1, orient_face(right_normal, code))
            )
            area = np.sqrt(np.sum(scaled**2, axis=0))
            batches.append(
                FaceBatch(
                    left_key=lkey,
                    left_face=lface,
                    left=left,
                    right_key=rkey,
                    right_face=rface,
                    right=right,
                    orientation=code,
                    mortar=mortar,
                    scaled_normal=scaled,
                    normal=scaled / area,
                    area=area,
                    face_ids=np.asarray(fids, dtype=np.int64),
                )
            )
        return batches

    def _build_boundary_batches(self) -> List[BoundaryBatch]:
        pending: Dict[tuple, List[int]] = {}
        for face in self.mesh.boundary_faces:
            condition = self.boundaries.get(face.tag)
            if condition is None:
                logger.error(
                    "Missing boundary condition",
                    tag=face.tag,
                    error_code=ErrorCodes.CONFIGURATION_ERROR,
                    operation="Discretization",
                )
                raise ConfigurationError(
                    f"missing boundary tag '{face.tag}'", tag=face.tag
                )
            if condition.kind is BoundaryKind.PERIODIC:
                raise ConfigurationError(
                    f"Boundary '{face.tag}' is periodic but its box faces are not",
                    tag=face.tag,
                )
            key, local = self._locate[face.element]
            pending.setdefault((key, face.face, face.tag), []).append(local)
        return [
            BoundaryBatch(key, f, np.asarray(locals_, dtype=np.int64), self.boundaries[tag])
            for (key, f, tag), locals_ in pending.items()
        ]

    # -- execution ----------------------------------------------------------

    def _run(self, function: Callable, tasks: Sequence) -> None:
        if self.threads == 1 or len(tasks) < 2:
            for task in tasks:
                function(task)
            return
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            for _ in pool.map(function, tasks):
                pass

    def _element_tasks(self) -> List[Tuple[OrderTriple, slice]]:
        return [(key, s) for key, g in self._groups.items() for s in g.chunks()]

    def states(self, field: SolutionField) -> Dict[OrderTriple, np.ndarray]:
        if field.orders.orders != self.orders.orders:
            raise DimensionError("Field orders do not match the discretization")
        return {key: np.moveaxis(field.block(key), 1, 0) for key in self._groups}

    def _traces(self, values: Dict[OrderTriple, np.ndarray]) -> Dict[OrderTriple, List[np.ndarray]]:
        return {
            key: [face_trace(v, self._groups[key].bases, f) for f in range(6)]
            for key, v in values.items()
        }

    # -- BR1 gradients ------------------------------------------------------

    def gradients(
        self,
        field: SolutionField,
        variables: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> GradientField:
        """BR1 gradients of a variable set, shape (3, 5, E, n1, n2, n3) per group.

        Args:
            field (SolutionField): Admissible state.
            variables: Map from states (5, ...) to the differentiated set;
                defaults to (rho, v1, v2, v3, T).
        """
        field.check_admissible(self.gas.gamma)
        return self._gradients(self.states(field), variables or self.gradient_variables)

    def gradient_variables(self, u: np.ndarray) -> np.ndarray:
        q = np.empty_like(u)
        q[0] = u[0]
        q[1:4] = u[1:4] / u[0]
        p = (self.gas.gamma - 1.0) * (u[4] - 0.5 * np.sum(u[1:4] * q[1:4], axis=0))
        q[4] = p / (u[0] * self.gas.gas_constant)
        return q

    def _entropy_variables(self, u: np.ndarray) -> np.ndarray:
        return entropy_variables(u, self.gas)

    def _gradients(self, states, variables) -> GradientField:
        q = {key: variables(u) for key, u in states.items()}
        q_traces = self._traces(q)
        u_traces = self._traces(states)
        lifted = {
            key: [np.zeros((3,) + t.shape) for t in q_traces[key]] for key in q_traces
        }

        def interior(batch: FaceBatch) -> None:
            m = batch.mortar
            ql = m.project(0, q_traces[batch.left_key][batch.left_face][:, batch.left])
            qr = m.project(
                1,
                batch.right_to_left(
                    q_traces[batch.right_key][batch.right_face][:, batch.right]
                ),
            )
            value = 0.5 * (ql + qr)[None] * batch.scaled_normal[:, None]
            lifted[batch.left_key][batch.left_face][:, :, batch.left] = m.back(0, value)
            lifted[batch.right_key][batch.right_face][:, :, batch.right] = (
                batch.left_to_right(-m.back(1, value))
            )

        def boundary(batch: BoundaryBatch) -> None:
            group = self._groups[batch.key]
            inner = u_traces[batch.key][batch.face][:, batch.local]
            normal = group.normals[batch.face][:, batch.local]
            ghost = boundary_state(batch.condition, inner, normal, self.gas).ghost
            mean = 0.5 * (q_traces[batch.key][batch.face][:, batch.local] + variables(ghost))
            scaled = group.scaled_normals[batch.face][:, batch.local]
            lifted[batch.key][batch.face][:, :, batch.local] = mean[None] * scaled[:, None]

        self._run(interior, self.face_batches)
        self._run(boundary, self.boundary_batches)

        grads = {key: np.empty((3,) + q[key].shape) for key in q}

        def element(task) -> None:
            key, s = task
            group = self._groups[key]
            qs = q[key][:, s]
            ja = group.contravariant[:, :, s]
            # Ft[a, d] = Ja^a_d q
            flux = ja[:, :, None] * qs[None, None]
            out = -volume_integral_weak(flux, group.bases)
            for f in range(6):
                lift(out, lifted[key][f][:, :, s], group.bases, f, 1.0)
            grads[key][:, :, s] = out / group.jacobian[s]

        self._run(element, self._element_tasks())
        return grads


    # -- viscous and artificial fluxes --------------------------------------

    def _dissipative(self, states) -> Optional["DissipativeFluxes"]:
        if not (self.viscous or self.svv_active):
            return None
        result = DissipativeFluxes(
            total={key: np.zeros((5, 3) + u.shape[1:]) for key, u in states.items()}
        )

        if self.viscous:
            grads = self._gradients(states, self.gradient_variables)
            eddy = {key: np.zeros(u.shape[1:]) for key, u in states.items()}
            cs = self.gas.smagorinsky_cs

            def viscous_task(task) -> None:
                key, s = task
                u = states[key][:, s]
                g = grads[key][:, :, s]
                if cs > 0:
                    width = self._groups[key].filter_width[s][:, None, None, None]
                    eddy[key][s] = smagorinsky_viscosity(g, width, cs, rho=u[0])
                result.total[key][:, :, s] += viscous_flux(u, g, self.gas, eddy[key][s])

            self._run(viscous_task, self._element_tasks())
            result.grads = grads
            result.eddy = eddy

        if self.svv_active:
            config = self.shock_capturing
            grad_w = self._gradients(states, self._entropy_variables)
            artificial = {key: np.zeros((5, 3) + u.shape[1:]) for key, u in states.items()}

            def svv_task(task) -> None:
                key, s = task
                group = self._groups[key]
                u = states[key][:, s]
                sensor = density_sensor(u[0], group.jacobian[s], group.bases)
                mu, blend = blend_artificial_viscosity(sensor, config)
                artificial[key][:, :, s] = svv_filtered_flux(
                    u,
                    grad_w[key][:, :, s],
                    config.kernel,
                    mu,
                    group.jacobian[s],
                    group.bases,
                    self.gas,
                    blend,
                )
                result.total[key][:, :, s] += artificial[key][:, :, s]

            self._run(svv_task, self._element_tasks())
            result.artificial = artificial
        return result

    def _boundary_dissipative_flux(
        self, batch: BoundaryBatch, inner: np.ndarray, dissipative: "DissipativeFluxes"
    ) -> np.ndarray:
        group = self._groups[batch.key]
        scaled = group.scaled_normals[batch.face][:, batch.local]
        flux = np.zeros_like(inner)
        if dissipative.grads is not None:
            grad = face_trace(dissipative.grads[batch.key], group.bases, batch.face)
            eddy = face_trace(dissipative.eddy[batch.key], group.bases, batch.face)
            flux += boundary_viscous_flux(
                batch.condition,
                inner,
                grad[:, :, batch.local],
                scaled,
                self.gas,
                np.maximum(eddy[batch.local], 0.0),
            )
        if (
            dissipative.artificial is not None
            and batch.condition.kind is BoundaryKind.FREE_STREAM
        ):
            art = face_trace(dissipative.artificial[batch.key], group.bases, batch.face)
            flux += np.einsum("vd...,d...->v...", art[:, :, batch.local], scaled)
        return flux

    # -- surface ------------------------------------------------------------

    def surface_fluxes(
        self,
        states: Dict[OrderTriple, np.ndarray],
        dissipative: Optional["DissipativeFluxes"] = None,
        record: bool = False,
    ) -> SurfaceFluxes:
        """Compute every face flux once and scatter it to both sides."""
        u_traces = self._traces(states)
        v_traces = self._traces(dissipative.total) if dissipative is not None else None
        out = {key: [np.empty_like(t) for t in u_traces[key]] for key in u_traces}
        production = np.zeros(len(self.mesh.interior_faces)) if record else None

        def interior(batch: FaceBatch) -> None:
            m = batch.mortar
            ul = m.project(0, u_traces[batch.left_key][batch.left_face][:, batch.left])
            ur = m.project(
                1,
                batch.right_to_left(
                    u_traces[batch.right_key][batch.right_face][:, batch.right]
                ),
            )
            flux = batch.area * riemann_flux(
                self.riemann, ul, ur, batch.normal, self.gas, self.volume_flux, check=False
            )
            if production is not None:
                jump_w = entropy_variables(ur, self.gas) - entropy_variables(ul, self.gas)
                jump_psi = entropy_flux_potential(ur, self.gas) - entropy_flux_potential(
                    ul, self.gas
                )
                density = np.sum(jump_w * flux, axis=0) - np.sum(
                    jump_psi * batch.scaled_normal, axis=0
                )
                production[batch.face_ids] = np.einsum("fab,ab->f", density, m.weights)
            if v_traces is not None:
                vl = m.project(
                    0, v_traces[batch.left_key][batch.left_face][:, :, batch.left]
                )
                vr = m.project(
                    1,
                    batch.right_to_left(
                        v_traces[batch.right_key][batch.right_face][:, :, batch.right]
                    ),
                )
                flux = flux - np.einsum(
                    "vd...,d...->v...", 0.5 * (vl + vr), batch.scaled_normal
                )
            out[batch.left_key][batch.left_face][:, batch.left] = m.back(0, flux)
            out[batch.right_key][batch.right_face][:, batch.right] = batch.left_to_right(
                -m.back(1, flux)
            )

        def boundary(batch: BoundaryBatch) -> None:
            group = self._groups[batch.key]
            inner = u_traces[batch.key][batch.face][:, batch.local]
            normal = group.normals[batch.face][:, batch.local]
            ghost = boundary_state(batch.condition, inner, normal, self.gas).ghost
            flux = group.areas[batch.face][batch.local] * riemann_flux(
                self.riemann, inner, ghost, normal, self.gas, self.volume_flux, check=False
            )
            if dissipative is not None:
                flux = flux - self._boundary_dissipative_flux(batch, inner, dissipative)
            out[batch.key][batch.face][:, batch.local] = flux

        self._run(interior, self.face_batches)
        self._run(boundary, self.boundary_batches)
        return SurfaceFluxes(out, production)

    # -- residual -----------------------------------------------------------

    def residual(self, field: SolutionField, record: bool = False) -> SolutionField:
        """du/dt of ``field``; see :func:`spatial_residual`."""
        field.check_admissible(self.gas.gamma)
        states = self.states(field)
        dissipative = self._dissipative(states)
        surface = self.surface_fluxes(states, dissipative, record)
        self.interface_production = surface.interface_production

        result = field.zeros_like()
        gamma = self.gas.gamma

        def element(task) -> None:
            key, s = task
            group = self._groups[key]
            u = states[key][:, s]
            ja = group.contravariant[:, :, s]
            if self.volume_flux is None:
                flux = np.einsum("vn...,an...->av...", euler_flux(u, self.gas), ja)
                du = volume_integral_weak(flux, group.bases)
            else:
                du = volume_integral_split(u, ja, group.bases, self.volume_flux, gamma)
            if dissipative is not None:
                flux = np.einsum("vn...,an...->av...", dissipative.total[key][:, :, s], ja)
                du -= volume_integral_weak(flux, group.bases)
            for f in range(6):
                face_flux = surface.fluxes[key][f][:, s]
                if self.volume_flux is not None:
                    own = euler_flux_normal(
                        face_trace(u, group.bases, f),
                        group.scaled_normals[f][:, s],
                        gamma,
                    )
                    face_flux = face_flux - own
                lift(du, face_flux, group.bases, f, -1.0)
            du /= group.jacobian[s]
            if self.source is not None:
                du += self.source(group.coordinates[:, s], field.time)
            result.block(key)[s] = np.moveaxis(du, 0, 1)

        self._run(element, self._element_tasks())
        return result

    # -- integrals ----------------------------------------------------------

    def element_integrals(
        self,
        field: SolutionField,
        function: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ) -> np.ndarray:
        """Integral of ``function(u)`` (default ``u``) times J per element, shape (..., E)."""
        result = None
        for key, group in self._groups.items():
            u = np.moveaxis(field.block(key), 1, 0)
            values = u if function is None else function(u)
            part = np.einsum("...eijk,eijk,ijk->...e", values, group.jacobian, group.weights)
            if result is None:
                result = np.zeros(part.shape[:-1] + (self.mesh.n_elements,))
            result[..., group.elements] = part
        return result

    def entropy_production(
        self, field: SolutionField, dudt: Optional[SolutionField] = None
    ) -> float:
        """Semi-discrete entropy production sum w J w.du/dt over all nodes."""
        if dudt is None:
            dudt = self.residual(field)
        total = 0.0
        for key, group in self._groups.items():
            w = entropy_variables(np.moveaxis(field.block(key), 1, 0), self.gas)
            r = np.moveaxis(dudt.block(key), 1, 0)
            total += float(
                np.einsum("veijk,veijk,eijk,ijk->", w, r, group.jacobian, group.weights)
            )
        return total


@dataclass
class DissipativeFluxes:
    """Physical viscous plus artificial fluxes (5, 3, E, n1, n2, n3) per group."""

    total: Dict[OrderTriple, np.ndarray]
    grads: Optional[GradientField] = None
    eddy: Optional[Dict[OrderTriple, np.ndarray]] = None
    artificial: Optional[Dict[OrderTriple, np.ndarray]] = None


def compute_gradients_br1(field: SolutionField, disc: Discretization) -> GradientField:
    """BR1 gradients of (rho, v1, v2, v3, T), shape (3, 5, E, n1, n2, n3) per group.

    Raises:
        AdmissibilityError: On an inadmissible state; names the element.
    """
    return disc.gradients(field)


def surface_integral(
    field: SolutionField, disc: Discretization, record: bool = False
) -> SurfaceFluxes:
    """Interface and boundary fluxes of ``field`` (inviscid part only).

    Args:
        field (SolutionField): Admissible state.
        disc (Discretization): Operator holding mortars and boundary table.
        record (bool): Also return the entropy production of every interior face.
    """
    field.check_admissible(disc.gas.gamma)
    return disc.surface_fluxes(disc.states(field), None, record)


def spatial_residual(field: SolutionField, disc: Discretization) -> SolutionField:
    """Semi-discrete du/dt: mass-inverted volume plus surface terms divided by J.

    Args:
        field (SolutionField): Admissible state at ``field.time``.
        disc (Discretization): Operator built for ``field.orders``.

    Returns:
        SolutionField: du/dt with the same layout and time as ``field``.

    Raises:
        AdmissibilityError: On an inadmissible state; names element and node.
    """
    return disc.residual(field)
