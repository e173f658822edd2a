"""Snapshot, monitor-table and restart file writers.

Restart files are flat little-endian binaries:

    header   magic b"DGSM", version u32, elements u32, time f64, step u64,
             flags u32 (version 2 only)
    orders   3 x u32 per element
    data     f64 nodal values, element by element, C order (variable, i, j, k)
"""

from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .basis import MAX_ORDER, along_axis, interpolation_matrix
from .config import SnapshotFormat
from .exceptions import DGFlowError, RestartFormatError
from .field import OrderMap, SolutionField
from .logging_config import ErrorCodes, get_logger
from .monitors import MONITOR_COLUMNS, MonitorRecord, vorticity_and_q
from .physics import pressure

logger = get_logger(__name__)

RESTART_MAGIC = b"DGSM"
RESTART_VERSION = 2
RESTART_HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("elements", "<u4"),
        ("time", "<f8"),
        ("step", "<u8"),
        ("flags", "<u4"),
    ]
)
# Version 1 files lack the flags word.
RESTART_HEADERS = {
    1: np.dtype(RESTART_HEADER.descr[:-1]),
    RESTART_VERSION: RESTART_HEADER,
}
# Flag bit: one-shot tau adaptation already happened.
FLAG_SETTLED = 1
NUMBER_FORMAT = "{:.16e}"
VTK_HEXAHEDRON = 12


def _format(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return NUMBER_FORMAT.format(float(value))


def _ensure_parent(path: Path, operation: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.error(
            "Cannot create output directory",
            path=str(path.parent),
            error=str(e),
            error_code=ErrorCodes.PERMISSION_DENIED,
            operation=operation,
        )
        raise


def write_monitors(
    records: Sequence[MonitorRecord], path: Path, probe_names: Sequence[str] = ()
) -> Path:
    """Write the monitor table: header row plus one comma-separated row per record.

    Raises:
        OSError: If the file cannot be written.
    """
    path = Path(path)
    _ensure_parent(path, "write_monitors")
    header = list(MONITOR_COLUMNS)
    for name in probe_names:
        header.extend([f"{name}_rho", f"{name}_p"])
    lines = [",".join(header)]
    for record in records:
        lines.append(",".join(_format(v) for v in record.values()))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(
        "Wrote monitors", path=str(path), rows=len(records), operation="write_monitors"
    )
    return path


def _equispaced(values: np.ndarray, bases, order: int) -> np.ndarray:
    targets = np.linspace(-1.0, 1.0, order + 1)
    for a in range(3):
        values = along_axis(interpolation_matrix(bases[a], targets), values, a)
    return values


def sample_snapshot(
    field: SolutionField,
    disc,
    visualization_order: Optional[int] = None,
    vorticity: bool = False,
) -> Tuple[List[str], List[np.ndarray]]:
    """Resample every element to equispaced points.

    Returns:
        Tuple[List[str], List[np.ndarray]]: Column names and, per element in
        element order, a (columns, m, m, m) array.
    """
    gas = disc.gas
    names = ["x", "y", "z", "rho", "u", "v", "w", "p", "T"]
    if vorticity:
        names += ["omega_x", "omega_y", "omega_z", "Q"]
        grads = disc.gradients(field)
    blocks: List[Optional[np.ndarray]] = [None] * len(field.orders)
    for key, group in disc.groups.items():
        u = np.moveaxis(field.block(key), 1, 0)
        p = pressure(u, gas.gamma)
        columns = [
            group.coordinates,
            u[0][None],
            u[1:4] / u[0],
            p[None],
            (p / (u[0] * gas.gas_constant))[None],
        ]
        if vorticity:
            omega, q = vorticity_and_q(grads[key])
            columns += [omega, q[None]]
        stacked = np.concatenate(columns, axis=0)
        order = visualization_order if visualization_order is not None else max(key)
        sampled = _equispaced(stacked, group.bases, order)
        for local, e in enumerate(group.elements):
            blocks[int(e)] = sampled[:, local]
    return names, blocks


def write_snapshot(
    field: SolutionField,
    disc,
    path: Path,
    format: SnapshotFormat | str = SnapshotFormat.POINTS,
    visualization_order: Optional[int] = None,
    vorticity: bool = False,
) -> Path:
    """Write a point table or a legacy VTK unstructured grid of hexahedral sub-cells.

    Raises:
        OSError: If the file cannot be written.
    """
    path = Path(path)
    format = SnapshotFormat(format)
    names, blocks = sample_snapshot(field, disc, visualization_order, vorticity)
    _ensure_parent(path, "write_snapshot")
    if format is SnapshotFormat.POINTS:
        lines = ["# " + " ".join(names)]
        for block in blocks:
            rows = block.reshape(block.shape[0], -1).T
            lines.extend(" ".join(NUMBER_FORMAT.format(v) for v in row) for row in rows)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        path.write_text(_vtk_text(names, blocks, field.time), encoding="utf-8")
    logger.info(
        "Wrote snapshot",
        path=str(path),
        format=format,
        time=field.time,
        operation="write_snapshot",
    )
    return path


def _vtk_text(names: List[str], blocks: List[np.ndarray], time: float) -> str:
    points = []
    cells = []
    offset = 0
    for block in blocks:
        m = block.shape[1]
        points.append(block[:3].reshape(3, -1).T)
        index = np.arange(m**3).reshape(m, m, m) + offset
        for i in range(m - 1):
            for j in range(m - 1):
                for k in range(m - 1):
                    cells.append(
                        [
                            index[i, j, k],
                            index[i + 1, j, k],
                            index[i + 1, j + 1, k],
                            index[i, j + 1, k],
                            index[i, j, k + 1],
                            index[i + 1, j, k + 1],
                            index[i + 1, j + 1, k + 1],
                            index[i, j + 1, k + 1],
                        ]
                    )
        offset += m**3
    xyz = np.concatenate(points)
    data = np.concatenate([b.reshape(b.shape[0], -1) for b in blocks], axis=1)

    lines = [
        "# vtk DataFile Version 3.0",
        f"dgflow snapshot t={NUMBER_FORMAT.format(time)}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(xyz)} double",
    ]
    lines.extend(" ".join(NUMBER_FORMAT.format(v) for v in row) for row in xyz)
    lines.append(f"CELLS {len(cells)} {9 * len(cells)}")
    lines.extend("8 " + " ".join(str(int(i)) for i in cell) for cell in cells)
    lines.append(f"CELL_TYPES {len(cells)}")
    lines.extend([str(VTK_HEXAHEDRON)] * len(cells))
    lines.append(f"POINT_DATA {len(xyz)}")

    column = {name: i for i, name in enumerate(names)}
    for name in ("rho", "p", "T", "Q"):
        if name in column:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(NUMBER_FORMAT.format(v) for v in data[column[name]])
    vectors = [("velocity", "u")]
    if "omega_x" in column:
        vectors.append(("vorticity", "omega_x"))
    for label, first in vectors:
        start = column[first]
        lines.append(f"VECTORS {label} double")
        lines.extend(
            " ".join(NUMBER_FORMAT.format(v) for v in row)
            for row in data[start : start + 3].T
        )
    return "\n".join(lines) + "\n"


class RestartData(NamedTuple):
    field: SolutionField
    step: int
    settled: bool = False


def write_restart(
    field: SolutionField, step: int, path: Path, *, settled: bool = False
) -> Path:
    """Serialize field, orders, time, step counter and run flags.

    Raises:
        OSError: If the file cannot be written.
    """
    path = Path(path)
    _ensure_parent(path, "write_restart")
    n = len(field.orders)
    header = np.zeros((), dtype=RESTART_HEADER)
    header["magic"] = RESTART_MAGIC
    header["version"] = RESTART_VERSION
    header["elements"] = n
    header["time"] = field.time
    header["step"] = step
    header["flags"] = FLAG_SETTLED if settled else 0
    orders = np.asarray(field.orders.orders, dtype="<u4").reshape(n, 3)
    data = np.concatenate([field.element(e).ravel() for e in range(n)]) if n else np.zeros(0)
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(orders.tobytes())
        handle.write(data.astype("<f8").tobytes())
    logger.info(
        "Wrote restart file",
        path=str(path),
        time=field.time,
        step=step,
        settled=settled,
        operation="write_restart",
    )
    return path


def read_restart(path: Path, p_min: int = 1, p_max: int = MAX_ORDER) -> RestartData:
    """Load a restart file written by :func:`write_restart`.

    Version 1 files (no flags word) are read with ``settled`` False.

    Returns:
        RestartData: The field (time restored), the step counter and the
        settled flag.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        RestartFormatError: On a bad magic, version or size.
    """
    path = Path(path)
    raw = path.read_bytes()

    def fail(message: str, **details):
        logger.error(
            "Invalid restart file",
            path=str(path),
            reason=message,
            error_code=ErrorCodes.RESTART_FORMAT_ERROR,
            operation="read_restart",
        )
        raise RestartFormatError(message, path=str(path), **details)

    if len(raw) < 8:
        fail("File is shorter than the restart header")
    if raw[:4] != RESTART_MAGIC:
        fail("Not a DGSM restart file")
    version = int.from_bytes(raw[4:8], "little")
    layout = RESTART_HEADERS.get(version)
    if layout is None:
        fail(f"Unsupported restart version {version}")
    if len(raw) < layout.itemsize:
        fail("File is shorter than the restart header")
    header = np.frombuffer(raw, dtype=layout, count=1)[0]
    settled = "flags" in layout.names and bool(int(header["flags"]) & FLAG_SETTLED)
    n = int(header["elements"])
    offset = layout.itemsize
    if len(raw) < offset + 12 * n:
        fail("Truncated order table")
    orders = np.frombuffer(raw, dtype="<u4", count=3 * n, offset=offset).reshape(n, 3)
    offset += 12 * n
    try:
        order_map = OrderMap(tuple(tuple(int(p) for p in row) for row in orders), p_min, p_max)
    except DGFlowError as e:
        fail(f"Invalid order table: {e}")
    field = SolutionField(order_map, time=float(header["time"]))
    sizes = [field.nodes_per_element(o) for o in order_map]
    if len(raw) - offset != 8 * sum(sizes):
        fail("Data section does not match the order table", expected=8 * sum(sizes))
    data = np.frombuffer(raw, dtype="<f8", offset=offset)
    start = 0
    for e, size in enumerate(sizes):
        field.set_element(e, data[start : start + size].reshape(field.element(e).shape))
        start += size
    logger.info(
        "Read restart file",
        path=str(path),
        elements=n,
        time=field.time,
        settled=settled,
        operation="read_restart",
    )
    return RestartData(field, int(header["step"]), settled)
