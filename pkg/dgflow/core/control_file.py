"""Control-file grammar, rendering and the load/validate/save entry points.

A control file holds one ``key = value`` per line. ``!`` starts a comment,
keys are case-insensitive with internal whitespace collapsed, and
boundary conditions and probes are declared in blocks::

    #define boundary inflow
       type  = freestream
       faces = xmin
       velocity = 1, 0, 0
    #end

Numbers accept the token ``pi`` in products and quotients (``2*pi``,
``pi/4``); vectors are comma- or space-separated; booleans accept
yes/no/true/false/.true./.false.
"""

import difflib
import enum
import math
import os
import re
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

from pydantic import ValidationError
from rich.console import Console

from .adaptation import AdaptationConfig, AdaptationMode
from .basis import NodeKind
from .boundary import BoundaryCondition, BoundaryKind
from .config import NumericsConfig, OutputConfig, RunConfig, SnapshotFormat, TimeConfig
from .exceptions import ControlFileError
from .initial_conditions import InitialConditionConfig, InitialConditionKind
from .logging_config import ErrorCodes, get_logger
from .mesh import BOX_FACES, CurvatureSpec, MeshSpec
from .monitors import ProbeConfig
from .physics import GasProperties, RiemannSolver, TwoPointFlux
from .shock_capturing import ArtificialFluxConfig, FilterKernel, FilterKind
from .time_integration import RKScheme

logger = get_logger(__name__)
console = Console()

DEFAULT_CONTROL_FILE = "case.control"
AXES = ("x", "y", "z")
TRUE_WORDS = {"yes", "true", ".true.", "on"}
FALSE_WORDS = {"no", "false", ".false.", "off"}
NONE_WORDS = {"none", "off"}
WEAK_FORM_WORDS = {"standard", "weak", "none"}
IMPLICIT_WORDS = ("implicit", "bdf", "rosenbrock", "multigrid", "fas")
IMPLICIT_POINTER = (
    "implicit time integration is not supported; "
    "use 'time integration = explicit' with 'explicit method = rk3 | rk45'"
)
MANDATORY_KEYS = ("mesh", "polynomial order")
STOP_KEYS = ("final time", "max iterations")
_FACTOR = re.compile(r"([+-]?)(pi|(?:\d+\.?\d*|\.\d+)(?:[eEdD][+-]?\d+)?)")
_DEFINE = re.compile(r"#define\s+(\w+)\s+(\S+)\s*$", re.IGNORECASE)


def normalize_key(key: str) -> str:
    return " ".join(key.lower().split())


# -- value converters ---------------------------------------------------------


def parse_real(text: str) -> float:
    """Real number, optionally a product or quotient involving ``pi``."""
    compact = text.replace(" ", "").lower()
    if not compact:
        raise ValueError("expected a number")
    parts = re.split(r"([*/])", compact)
    value = 1.0
    op = "*"
    for i, part in enumerate(parts):
        if i % 2:
            op = part
            continue
        match = _FACTOR.fullmatch(part)
        if match is None:
            raise ValueError(f"'{text.strip()}' is not a number")
        sign, body = match.groups()
        factor = math.pi if body == "pi" else float(re.sub("[dD]", "e", body))
        if sign == "-":
            factor = -factor
        if op == "/" and factor == 0.0:
            raise ValueError(f"'{text.strip()}' divides by zero")
        value = value * factor if op == "*" else value / factor
    return value


def parse_int(text: str) -> int:
    value = text.strip()
    if not re.fullmatch(r"[+-]?\d+", value):
        raise ValueError(f"'{value}' is not an integer")
    return int(value)


def parse_bool(text: str) -> bool:
    word = text.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"'{text.strip()}' is not a boolean")


def split_items(text: str) -> List[str]:
    if "," in text:
        return [item.replace(" ", "") for item in text.split(",") if item.strip()]
    return text.split()


def vector(size: int, item: Callable[[str], Any] = parse_real) -> Callable[[str], Tuple]:
    def convert(text: str) -> Tuple:
        items = split_items(text)
        if len(items) != size:
            raise ValueError(f"expected {size} values, got {len(items)}")
        return tuple(item(v) for v in items)

    return convert


def parse_orders(text: str) -> Tuple[int, int, int]:
    items = split_items(text)
    if len(items) == 1:
        return (parse_int(items[0]),) * 3
    if len(items) == 3:
        return tuple(parse_int(v) for v in items)
    raise ValueError(f"expected 1 or 3 orders, got {len(items)}")


def choice(enum_cls: type[enum.Enum]) -> Callable[[str], enum.Enum]:
    def convert(text: str) -> enum.Enum:
        word = normalize_key(text)
        try:
            return enum_cls(word)
        except ValueError:
            options = " | ".join(m.value for m in enum_cls)
            raise ValueError(f"'{text.strip()}' is not one of {options}") from None

    return convert


def optional(convert: Callable[[str], Any]) -> Callable[[str], Any]:
    def wrapped(text: str) -> Any:
        if text.strip().lower() in NONE_WORDS:
            return None
        return convert(text)

    return wrapped


def parse_axes(text: str) -> Tuple[bool, bool, bool]:
    if text.strip().lower() in NONE_WORDS:
        return (False, False, False)
    axes = [v.lower() for v in split_items(text)]
    unknown = sorted(set(axes) - set(AXES))
    if unknown:
        raise ValueError(f"unknown axes {unknown}; use x, y, z or none")
    return tuple(a in axes for a in AXES)


def parse_faces(text: str) -> List[str]:
    faces = [v.lower() for v in split_items(text)]
    unknown = [f for f in faces if f not in BOX_FACES]
    if unknown:
        raise ValueError(f"unknown box faces {unknown}; use {', '.join(BOX_FACES)}")
    return faces


def parse_volume_flux(text: str) -> Optional[TwoPointFlux]:
    if text.strip().lower() in WEAK_FORM_WORDS:
        return None
    return choice(TwoPointFlux)(text)


def parse_time_integration(text: str) -> str:
    word = text.strip().lower()
    if word == "explicit":
        return word
    if any(w in word for w in IMPLICIT_WORDS):
        raise ValueError(IMPLICIT_POINTER)
    raise ValueError(f"'{text.strip()}' is not supported; use 'explicit'")


def parse_mesh_kind(text: str) -> str:
    word = text.strip().lower()
    if word != "box":
        raise ValueError(f"'{text.strip()}' is not a supported mesh; use 'box'")
    return word


def parse_curvature(text: str) -> Optional[str]:
    word = text.strip().lower()
    if word in NONE_WORDS:
        return None
    if word != "sinusoidal":
        raise ValueError(f"'{text.strip()}' is not one of none | sinusoidal")
    return word


def parse_shock_capturing(text: str) -> bool:
    word = text.strip().lower()
    if word == "svv":
        return True
    if word in NONE_WORDS:
        return False
    raise ValueError(f"'{text.strip()}' is not one of svv | none")


# -- key tables ---------------------------------------------------------------


@dataclass(frozen=True)
class KeySpec:
    section: str
    name: str
    convert: Callable[[str], Any]


KEYS: Dict[str, KeySpec] = {
    "mesh": KeySpec("mesh", "kind", parse_mesh_kind),
    "mesh elements": KeySpec("mesh", "elements", vector(3, parse_int)),
    "mesh bounds": KeySpec("mesh", "bounds", vector(6)),
    "periodic": KeySpec("mesh", "periodic", parse_axes),
    "mesh curvature": KeySpec("mesh", "curvature", parse_curvature),
    "curvature amplitude": KeySpec("mesh", "amplitude", parse_real),
    "curvature wavenumber": KeySpec("mesh", "wavenumber", parse_int),
    "polynomial order": KeySpec("numerics", "orders", parse_orders),
    "discretization nodes": KeySpec("numerics", "nodes", choice(NodeKind)),
    "riemann solver": KeySpec("numerics", "riemann", choice(RiemannSolver)),
    "flux": KeySpec("numerics", "volume_flux", parse_volume_flux),
    "gamma": KeySpec("gas", "gamma", parse_real),
    "gas constant": KeySpec("gas", "gas_constant", parse_real),
    "mach number": KeySpec("gas", "mach", parse_real),
    "reynolds number": KeySpec("gas", "reynolds", parse_real),
    "viscosity": KeySpec("gas", "mu", parse_real),
    "prandtl number": KeySpec("gas", "prandtl", parse_real),
    "smagorinsky constant": KeySpec("gas", "smagorinsky_cs", parse_real),
    "time integration": KeySpec("time", "integration", parse_time_integration),
    "explicit method": KeySpec("time", "method", choice(RKScheme)),
    "cfl": KeySpec("time", "cfl", parse_real),
    "dfl": KeySpec("time", "dfl", parse_real),
    "dt": KeySpec("time", "dt", parse_real),
    "final time": KeySpec("time", "final_time", parse_real),
    "max iterations": KeySpec("time", "max_iterations", parse_int),
    "padaptation mode": KeySpec("adaptation", "mode", optional(choice(AdaptationMode))),
    "padaptation interval": KeySpec("adaptation", "interval", parse_int),
    "truncation error threshold": KeySpec("adaptation", "threshold", parse_real),
    "minimum order": KeySpec("adaptation", "p_min", parse_int),
    "maximum order": KeySpec("adaptation", "p_max", parse_int),
    "adaptation sensor low": KeySpec("adaptation", "sensor_low", parse_real),
    "adaptation sensor high": KeySpec("adaptation", "sensor_high", parse_real),
    "shock capturing": KeySpec("shock", "enabled", parse_shock_capturing),
    "svv kernel": KeySpec("shock", "kind", choice(FilterKind)),
    "svv cutoff": KeySpec("shock", "cutoff", parse_int),
    "artificial viscosity": KeySpec("shock", "mu_a", parse_real),
    "sensor low": KeySpec("shock", "s_low", parse_real),
    "sensor high": KeySpec("shock", "s_high", parse_real),
    "output interval": KeySpec("output", "interval", parse_int),
    "output directory": KeySpec("output", "directory", str.strip),
    "snapshot format": KeySpec("output", "format", choice(SnapshotFormat)),
    "visualization order": KeySpec("output", "visualization_order", parse_int),
    "output vorticity": KeySpec("output", "vorticity", parse_bool),
    "monitor interval": KeySpec("output", "monitor_interval", parse_int),
    "monitors file": KeySpec("output", "monitors_file", str.strip),
    "initial condition": KeySpec("initial", "name", choice(InitialConditionKind)),
    "density": KeySpec("initial", "density", parse_real),
    "velocity": KeySpec("initial", "velocity", vector(3)),
    "pressure": KeySpec("initial", "pressure", parse_real),
    "vortex strength": KeySpec("initial", "vortex_strength", parse_real),
    "vortex center": KeySpec("initial", "vortex_center", vector(2)),
    "vortex radius": KeySpec("initial", "vortex_radius", parse_real),
}

BLOCK_KEYS: Dict[str, Dict[str, KeySpec]] = {
    "boundary": {
        "type": KeySpec("boundary", "kind", choice(BoundaryKind)),
        "faces": KeySpec("boundary", "faces", parse_faces),
        "density": KeySpec("boundary", "density", parse_real),
        "velocity": KeySpec("boundary", "velocity", vector(3)),
        "pressure": KeySpec("boundary", "pressure", parse_real),
    },
    "probe": {
        "position": KeySpec("probe", "position", vector(3)),
    },
}


def suggest_key(key: str, known) -> Optional[str]:
    """Closest known key by edit similarity, or None."""
    matches = difflib.get_close_matches(key, list(known), n=1, cutoff=0.6)
    return matches[0] if matches else None


def _unknown_key_message(key: str, line_no: int, known) -> str:
    if any(w in key for w in IMPLICIT_WORDS):
        return f"line {line_no}: '{key}': {IMPLICIT_POINTER}"
    suggestion = suggest_key(key, known)
    hint = f" (did you mean '{suggestion}'?)" if suggestion else ""
    return f"line {line_no}: unknown key '{key}'{hint}"


# -- parsing ------------------------------------------------------------------


@dataclass
class _Block:
    kind: str
    name: str
    line_no: int
    values: Dict[str, Any]


def _split_lines(text: str, errors: List[str]) -> Tuple[Dict[str, Any], List[_Block]]:
    values: Dict[str, Any] = {}
    blocks: List[_Block] = []
    current: Optional[_Block] = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        lowered = line.lower()
        if lowered.startswith("#define"):
            match = _DEFINE.fullmatch(line)
            if current is not None:
                errors.append(f"line {line_no}: '#define' inside block '{current.name}' (missing '#end')")
                continue
            if match is None:
                errors.append(f"line {line_no}: expected '#define <boundary|probe> <name>'")
                continue
            kind = match.group(1).lower()
            if kind not in BLOCK_KEYS:
                errors.append(f"line {line_no}: unknown block type '{kind}' (use boundary or probe)")
                continue
            current = _Block(kind, match.group(2), line_no, {})
            continue
        if lowered == "#end":
            if current is None:
                errors.append(f"line {line_no}: '#end' without '#define'")
            else:
                blocks.append(current)
                current = None
            continue
        if "=" not in line:
            errors.append(f"line {line_no}: expected 'key = value', got '{line}'")
            continue
        key_text, value_text = line.split("=", 1)
        key = normalize_key(key_text)
        table = BLOCK_KEYS[current.kind] if current is not None else KEYS
        spec = table.get(key)
        if spec is None:
            errors.append(_unknown_key_message(key, line_no, table))
            continue
        target = current.values if current is not None else values
        if key in target:
            errors.append(f"line {line_no}: duplicate key '{key}'")
            continue
        try:
            target[key] = spec.convert(value_text)
        except ValueError as e:
            errors.append(f"line {line_no}: {key}: {e}")
    if current is not None:
        errors.append(f"line {current.line_no}: block '{current.name}' is missing '#end'")
    return values, blocks


def _section(values: Dict[str, Any], section: str) -> Dict[str, Any]:
    return {KEYS[k].name: v for k, v in values.items() if KEYS[k].section == section}


def _build(values: Dict[str, Any], blocks: List[_Block], errors: List[str]) -> Optional[RunConfig]:
    boundaries: Dict[str, BoundaryCondition] = {}
    probes: List[ProbeConfig] = []
    tags: Dict[str, str] = {}
    periodic_faces: List[str] = []
    for block in blocks:
        fields = {BLOCK_KEYS[block.kind][k].name: v for k, v in block.values.items()}
        if block.kind == "probe":
            if "position" not in fields:
                errors.append(f"line {block.line_no}: probe '{block.name}' needs 'position'")
                continue
            probes.append(ProbeConfig(name=block.name, position=fields["position"]))
            continue
        if block.name in boundaries:
            errors.append(f"line {block.line_no}: boundary '{block.name}' defined twice")
            continue
        if "kind" not in fields:
            errors.append(f"line {block.line_no}: boundary '{block.name}' needs 'type'")
            continue
        try:
            bc = BoundaryCondition(tag=block.name, **fields)
        except ValidationError as e:
            errors.extend(f"boundary '{block.name}': {_message(err)}" for err in e.errors())
            continue
        boundaries[block.name] = bc
        for face in bc.faces:
            if face in tags or face in periodic_faces:
                errors.append(f"box face {face} is bound to more than one boundary")
            elif bc.kind is BoundaryKind.PERIODIC:
                periodic_faces.append(face)
            else:
                tags[face] = block.name

    mesh = _section(values, "mesh")
    mesh_fields: Dict[str, Any] = {"boundary_tags": tags}
    if "elements" in mesh:
        mesh_fields["elements"] = mesh["elements"]
    if "bounds" in mesh:
        b = mesh["bounds"]
        mesh_fields["lower"] = (b[0], b[2], b[4])
        mesh_fields["upper"] = (b[1], b[3], b[5])
    if "periodic" in mesh:
        mesh_fields["periodic"] = mesh["periodic"]
    else:
        bound = {BOX_FACES.index(f) // 2 for f in tags}
        mesh_fields["periodic"] = tuple(axis not in bound for axis in range(3))
    curvature = None
    if mesh.get("curvature"):
        curvature = {k: mesh[k] for k in ("amplitude", "wavenumber") if k in mesh}

    gas = _section(values, "gas")
    mach = gas.pop("mach", None)
    reynolds = gas.pop("reynolds", None)
    if reynolds is not None:
        if "mu" in gas:
            errors.append("set either 'viscosity' or 'reynolds number', not both")
        elif reynolds <= 0:
            errors.append("reynolds number must be positive")
        else:
            # Unit reference density, velocity and length.
            gas["mu"] = 1.0 / reynolds
    if mach is not None:
        if mach <= 0:
            errors.append("mach number must be positive")
        elif "gas_constant" not in gas:
            gas["gas_constant"] = 1.0 / (gas.get("gamma", 1.4) * mach**2)

    time = _section(values, "time")
    time.pop("integration", None)

    shock = _section(values, "shock")
    enabled = shock.pop("enabled", False)
    kernel = {k: shock.pop(k) for k in ("kind", "cutoff") if k in shock}
    if (shock or kernel) and not enabled:
        errors.append("shock-capturing keys given but 'shock capturing' is not 'svv'")

    initial = _section(values, "initial")
    if mach is not None and mach > 0:
        initial["mach"] = mach

    if errors:
        return None
    try:
        if curvature is not None:
            mesh_fields["curvature"] = CurvatureSpec(**curvature)
        return RunConfig(
            mesh=MeshSpec(**mesh_fields),
            gas=GasProperties(**gas),
            numerics=NumericsConfig(**_section(values, "numerics")),
            time=TimeConfig(**time),
            adaptation=AdaptationConfig(**_section(values, "adaptation")),
            shock_capturing=(
                ArtificialFluxConfig(kernel=FilterKernel(**kernel), **shock)
                if enabled
                else None
            ),
            output=OutputConfig(**_section(values, "output")),
            initial_condition=InitialConditionConfig(**initial),
            boundaries=boundaries,
            probes=probes,
        )
    except ValidationError as e:
        errors.extend(_message(err) for err in e.errors())
        return None


def _message(err: Dict[str, Any]) -> str:
    location = ".".join(str(part) for part in err.get("loc", ()))
    message = str(err.get("msg", "")).removeprefix("Value error, ")
    return f"{location}: {message}" if location else message


def parse_control_file(text: str) -> RunConfig:
    """Parse control-file text into a validated run configuration.

    Args:
        text (str): Control-file contents.

    Returns:
        RunConfig: Fully validated configuration.

    Raises:
        ControlFileError: Listing every problem found (unknown keys with the
            nearest known key, bad values, missing mandatory keys, failed
            cross-checks). No partial configuration is ever returned.
    """
    errors: List[str] = []
    values, blocks = _split_lines(text, errors)
    for key in MANDATORY_KEYS:
        if key not in values:
            errors.append(f"missing mandatory key '{key}'")
    if not any(key in values for key in STOP_KEYS):
        errors.append("missing mandatory key 'final time' or 'max iterations'")
    config = _build(values, blocks, errors) if not errors else None
    if config is None:
        raise ControlFileError(errors)
    return config


# -- rendering ----------------------------------------------------------------


def _real(value: float) -> str:
    return repr(float(value))


def _reals(values) -> str:
    return ", ".join(_real(v) for v in values)


def render_control_file(config: RunConfig) -> str:
    """Render ``config`` as control-file text that parses back to it."""
    mesh = config.mesh
    lines = ["! dgflow control file", "", "! mesh"]
    lines.append("mesh = box")
    lines.append("mesh elements = " + ", ".join(str(n) for n in mesh.elements))
    bounds = [v for pair in zip(mesh.lower, mesh.upper) for v in pair]
    lines.append("mesh bounds = " + _reals(bounds))
    axes = [a for a, p in zip(AXES, mesh.periodic) if p]
    lines.append("periodic = " + (", ".join(axes) if axes else "none"))
    if mesh.curvature is not None:
        lines.append(f"mesh curvature = {mesh.curvature.kind}")
        lines.append(f"curvature amplitude = {_real(mesh.curvature.amplitude)}")
        lines.append(f"curvature wavenumber = {mesh.curvature.wavenumber}")

    numerics = config.numerics
    lines += ["", "! discretization"]
    lines.append("polynomial order = " + ", ".join(str(p) for p in numerics.orders))
    lines.append(f"discretization nodes = {numerics.nodes.value}")
    lines.append(f"riemann solver = {numerics.riemann.value}")
    lines.append(
        "flux = " + (numerics.volume_flux.value if numerics.volume_flux else "standard")
    )

    gas = config.gas
    lines += ["", "! gas"]
    lines.append(f"gamma = {_real(gas.gamma)}")
    lines.append(f"gas constant = {_real(gas.gas_constant)}")
    lines.append(f"viscosity = {_real(gas.mu)}")
    lines.append(f"prandtl number = {_real(gas.prandtl)}")
    lines.append(f"smagorinsky constant = {_real(gas.smagorinsky_cs)}")

    time = config.time
    lines += ["", "! time integration"]
    lines.append("time integration = explicit")
    lines.append(f"explicit method = {time.method.value}")
    if time.cfl is not None:
        lines.append(f"cfl = {_real(time.cfl)}")
    if time.dt is not None:
        lines.append(f"dt = {_real(time.dt)}")
    lines.append(f"dfl = {_real(time.dfl)}")
    if time.final_time is not None:
        lines.append(f"final time = {_real(time.final_time)}")
    if time.max_iterations is not None:
        lines.append(f"max iterations = {time.max_iterations}")

    adaptation = config.adaptation
    lines += ["", "! p-adaptation"]
    lines.append(
        "padaptation mode = " + (adaptation.mode.value if adaptation.mode else "none")
    )
    lines.append(f"padaptation interval = {adaptation.interval}")
    lines.append(f"truncation error threshold = {_real(adaptation.threshold)}")
    lines.append(f"minimum order = {adaptation.p_min}")
    lines.append(f"maximum order = {adaptation.p_max}")
    lines.append(f"adaptation sensor low = {_real(adaptation.sensor_low)}")
    lines.append(f"adaptation sensor high = {_real(adaptation.sensor_high)}")

    shock = config.shock_capturing
    lines += ["", "! shock capturing"]
    if shock is None:
        lines.append("shock capturing = none")
    else:
        lines.append("shock capturing = svv")
        lines.append(f"svv kernel = {shock.kernel.kind.value}")
        lines.append(f"svv cutoff = {shock.kernel.cutoff}")
        lines.append(f"artificial viscosity = {_real(shock.mu_a)}")
        lines.append(f"sensor low = {_real(shock.s_low)}")
        lines.append(f"sensor high = {_real(shock.s_high)}")

    output = config.output
    lines += ["", "! output"]
    lines.append(f"output directory = {output.directory}")
    lines.append(f"output interval = {output.interval}")
    lines.append(f"snapshot format = {output.format.value}")
    if output.visualization_order is not None:
        lines.append(f"visualization order = {output.visualization_order}")
    lines.append(f"output vorticity = {'yes' if output.vorticity else 'no'}")
    lines.append(f"monitor interval = {output.monitor_interval}")
    lines.append(f"monitors file = {output.monitors_file}")

    initial = config.initial_condition
    lines += ["", "! initial condition"]
    lines.append(f"initial condition = {initial.name.value}")
    lines.append(f"density = {_real(initial.density)}")
    lines.append("velocity = " + _reals(initial.velocity))
    lines.append(f"pressure = {_real(initial.pressure)}")
    lines.append(f"vortex strength = {_real(initial.vortex_strength)}")
    lines.append(f"vortex radius = {_real(initial.vortex_radius)}")
    if initial.vortex_center is not None:
        lines.append("vortex center = " + _reals(initial.vortex_center))
    # Only feeds the initial condition: the gas constant is written explicitly.
    lines.append(f"mach number = {_real(initial.mach)}")

    for name, bc in config.boundaries.items():
        lines += ["", f"#define boundary {name}"]
        lines.append(f"   type = {bc.kind.value}")
        if bc.faces:
            lines.append("   faces = " + ", ".join(bc.faces))
        lines.append(f"   density = {_real(bc.density)}")
        lines.append("   velocity = " + _reals(bc.velocity))
        lines.append(f"   pressure = {_real(bc.pressure)}")
        lines.append("#end")
    for probe in config.probes:
        lines += ["", f"#define probe {probe.name}"]
        lines.append("   position = " + _reals(probe.position))
        lines.append("#end")
    return "\n".join(lines) + "\n"


# -- files --------------------------------------------------------------------


def load_control_file(path: Optional[str] = None) -> Optional[RunConfig]:
    """Load and validate a control file.

    Args:
        path (Optional[str]): Control-file path. Defaults to ``case.control``.

    Returns:
        Optional[RunConfig]: The configuration, or None when the file is
        missing, unreadable or invalid (the problems are logged and printed).
    """
    path = path or DEFAULT_CONTROL_FILE
    if not os.path.isfile(path):
        logger.error(
            "Control file not found",
            file_path=path,
            operation="load_control_file",
            error_code=ErrorCodes.FILE_NOT_FOUND,
        )
        console.print(f"[red]Error: Control file {path} not found[/red]")
        return None
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except (OSError, UnicodeDecodeError) as e:
        logger.error(
            "Error reading control file",
            file_path=path,
            operation="load_control_file",
            error_code=ErrorCodes.FILE_IO_ERROR,
            error=str(e),
        )
        console.print(f"[red]Error reading {path}: {e}[/red]")
        return None
    try:
        config = parse_control_file(text)
    except ControlFileError as e:
        logger.error(
            "Invalid control file",
            file_path=path,
            operation="load_control_file",
            error_code=ErrorCodes.INVALID_CONTROL_FILE,
            errors=e.errors,
        )
        console.print(f"[red]Error: Invalid control file {path}:[/red]")
        for message in e.errors:
            console.print(f"[red]  - {message}[/red]")
        return None
    logger.info(
        "Loaded control file successfully",
        file_path=path,
        operation="load_control_file",
        elements=config.mesh.n_elements,
        orders=config.numerics.orders,
    )
    return config


def validate_control_file(path: str) -> bool:
    """Check a control file without building anything.

    Returns:
        bool: True when the file parses into a valid configuration.
    """
    config = load_control_file(path)
    if config is None:
        return False
    logger.info(
        "Validated control file",
        file_path=path,
        operation="validate_control_file",
        error_code=ErrorCodes.SUCCESS,
    )
    return True


def save_control_file(
    config: RunConfig, path: str = DEFAULT_CONTROL_FILE, dry_run: bool = False
) -> bool:
    """Write ``config`` as a control file, or print it in dry-run mode.

    Returns:
        bool: True if the operation was successful, False otherwise.
    """
    try:
        text = render_control_file(config)
        if dry_run:
            logger.info(
                "Dry-run: control file preview",
                file_path=path,
                operation="save_control_file",
            )
            console.print("[cyan]Dry-run: control file to be saved:[/cyan]")
            console.print(text, markup=False, highlight=False)
            return True
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(
            "Control file saved successfully",
            file_path=path,
            operation="save_control_file",
        )
        console.print(f"[green]Control file saved to {path}[/green]")
        return True
    except OSError as e:
        logger.error(
            "Error saving control file",
            file_path=path,
            operation="save_control_file",
            error_code=ErrorCodes.PERMISSION_DENIED,
            error=str(e),
        )
        console.print(f"[red]Error saving control file to {path}: {e}[/red]")
        return False
