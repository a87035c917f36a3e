"""Toy grid model and the ``ecostub-model 1`` description format.

A model file is plain text, one directive per line, ``#`` starts a comment::

    ecostub-model 1
    name bay
    dimensions 40 40 1 2DH          # lines columns layers mod_type
    depth 5.0                       # uniform depth for every surface cell
    depth ramp 2.0 0.25             # or: base + slope * line
    depths 1.0 1.5 2.0 ...          # or: explicit row-major values (may repeat)
    class Phytoplankton
    variable Phytoplankton chl 1.5  # uniform initial value
    values Phytoplankton chl 1 2 3  # or: explicit per-cell values
    parameter Phytoplankton k 1.5
    species Oyster all              # or: species Oyster 0 1 2 (cell indices)
    time_spec 3600 0 86400          # step start finish, seconds

Surface cells number lines * columns; variables hold one value per cell of
every layer (lines * columns * layers).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .. import messages as m

HEADER = "ecostub-model 1"
SUFFIX = ".model"


class ModelFormatError(ValueError):
    def __init__(self, path: str, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")


@dataclass
class ModelClass:
    name: str
    variables: dict[str, list[float]] = field(default_factory=dict)
    parameters: dict[str, float] = field(default_factory=dict)


@dataclass
class ToyModel:
    name: str
    lines: int
    columns: int
    layers: int
    mod_type: m.ModType
    depths: list[float]
    classes: dict[str, ModelClass] = field(default_factory=dict)
    species: dict[str, m.Boxes] = field(default_factory=dict)
    time_spec: tuple[int, int, int] = (3600, 0, 86400)

    @property
    def surface_cells(self) -> int:
        return self.lines * self.columns

    @property
    def n_cells(self) -> int:
        return self.lines * self.columns * self.layers

    def morphology(self) -> list[m.CellValue]:
        return [m.CellValue(i, d) for i, d in enumerate(self.depths)]

    def find_variable(self, var_name: str, classes: list[str] | None = None) -> ModelClass | None:
        for cname in classes if classes else self.classes:
            mc = self.classes.get(cname)
            if mc is not None and var_name in mc.variables:
                return mc
        return None


def _real(tok: str) -> float:
    return float(tok)


def parse_model(text: str, path: str = "<model>") -> ToyModel:
    lines_in = text.splitlines()
    if not lines_in or lines_in[0].strip() != HEADER:
        raise ModelFormatError(path, 1, f"missing header {HEADER!r}")
    name = None
    dims = None
    depth_spec: tuple | None = None
    explicit_depths: list[float] = []
    classes: dict[str, ModelClass] = {}
    uniform: list[tuple[int, str, str, float]] = []
    explicit: dict[tuple[str, str], list[float]] = {}
    species: dict[str, m.Boxes] = {}
    time_spec = (3600, 0, 86400)

    def cls(lineno: int, cname: str) -> ModelClass:
        if cname not in classes:
            raise ModelFormatError(path, lineno, f"undeclared class {cname}")
        return classes[cname]

    for lineno, raw in enumerate(lines_in[1:], start=2):
        words = raw.split("#", 1)[0].split()
        if not words:
            continue
        key, args = words[0], words[1:]
        try:
            if key == "name" and len(args) == 1:
                name = args[0]
            elif key == "dimensions" and len(args) == 4:
                dims = (int(args[0]), int(args[1]), int(args[2]), m.ModType(args[3]))
            elif key == "depth" and len(args) == 1:
                depth_spec = ("uniform", _real(args[0]))
            elif key == "depth" and len(args) == 3 and args[0] == "ramp":
                depth_spec = ("ramp", _real(args[1]), _real(args[2]))
            elif key == "depths":
                explicit_depths.extend(_real(a) for a in args)
            elif key == "class" and len(args) == 1:
                classes.setdefault(args[0], ModelClass(args[0]))
            elif key == "variable" and len(args) == 3:
                cls(lineno, args[0])
                uniform.append((lineno, args[0], args[1], _real(args[2])))
            elif key == "values" and len(args) >= 3:
                cls(lineno, args[0])
                explicit.setdefault((args[0], args[1]), []).extend(_real(a) for a in args[2:])
            elif key == "parameter" and len(args) == 3:
                cls(lineno, args[0]).parameters[args[1]] = _real(args[2])
            elif key == "species" and len(args) >= 2:
                if args[1:] == ["all"]:
                    species[args[0]] = m.ALL
                else:
                    species[args[0]] = m.Cells(tuple(int(a) for a in args[1:]))
            elif key == "time_spec" and len(args) == 3:
                time_spec = (int(args[0]), int(args[1]), int(args[2]))
            else:
                raise ModelFormatError(path, lineno, f"bad directive {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(path, lineno, str(exc)) from None

    if name is None or dims is None:
        raise ModelFormatError(path, len(lines_in), "name and dimensions are required")
    lines, columns, layers, mod_type = dims
    if min(lines, columns, layers) < 1:
        raise ModelFormatError(path, len(lines_in), "dimensions must be positive")
    surface = lines * columns
    n_cells = surface * layers
    if explicit_depths:
        depths = explicit_depths
    elif depth_spec is None:
        depths = [0.0] * surface
    elif depth_spec[0] == "uniform":
        depths = [depth_spec[1]] * surface
    else:
        depths = [depth_spec[1] + depth_spec[2] * (i // columns) for i in range(surface)]
    if len(depths) != surface:
        raise ModelFormatError(path, len(lines_in), f"{len(depths)} depths for {surface} cells")
    for lineno, cname, vname, value in uniform:
        classes[cname].variables[vname] = [value] * n_cells
    for (cname, vname), values in explicit.items():
        if len(values) != n_cells:
            raise ModelFormatError(path, len(lines_in), f"{cname}.{vname}: {len(values)} values for {n_cells} cells")
        classes[cname].variables[vname] = values
    for sname, boxes in species.items():
        if isinstance(boxes, m.Cells) and any(c >= surface for c in boxes.cells):
            raise ModelFormatError(path, len(lines_in), f"species {sname} cell out of range")
    return ToyModel(name, lines, columns, layers, mod_type, depths, classes, species, time_spec)


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_model(model: ToyModel) -> str:
    """Inverse of :func:`parse_model` for the current state of ``model``."""
    out = [HEADER, f"name {model.name}"]
    out.append(f"dimensions {model.lines} {model.columns} {model.layers} {model.mod_type.value}")
    for i in range(0, len(model.depths), model.columns):
        out.append("depths " + " ".join(_fmt(d) for d in model.depths[i : i + model.columns]))
    for mc in model.classes.values():
        out.append(f"class {mc.name}")
        for vname, values in mc.variables.items():
            if len(set(values)) == 1:
                out.append(f"variable {mc.name} {vname} {_fmt(values[0])}")
            else:
                out.append(f"values {mc.name} {vname} " + " ".join(_fmt(v) for v in values))
        for pname, value in mc.parameters.items():
            out.append(f"parameter {mc.name} {pname} {_fmt(value)}")
    for sname, boxes in model.species.items():
        cells = "all" if isinstance(boxes, m.Domain) else " ".join(map(str, boxes.cells))
        out.append(f"species {sname} {cells}")
    out.append("time_spec {} {} {}".format(*model.time_spec))
    return "\n".join(out) + "\n"


def load_model(path: str | os.PathLike) -> ToyModel:
    p = Path(path)
    return parse_model(p.read_text(encoding="utf-8"), str(p))


def model_path(directory: str | os.PathLike, name: str) -> Path | None:
    """File for model ``name`` in ``directory``; None if absent or not a plain name."""
    if not name or "/" in name or "\\" in name or name.startswith("."):
        return None
    p = Path(directory) / (name + SUFFIX)
    return p if p.is_file() else None


def bundled_models_dir() -> Path:
    return Path(__file__).with_name("models")
