"""CVRPLIB instance model, parser and instance-level statistics."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import (
    CvrpParseError,
    DomainError,
    InfeasibleInstanceError,
    UnknownInstanceError,
)

ROUNDED = "rounded_euclidean"
EXACT = "exact_euclidean"
_MODE_ALIASES = {
    "rounded": ROUNDED,
    ROUNDED: ROUNDED,
    "exact": EXACT,
    EXACT: EXACT,
}
# Full matrices are cached up to this many vertices; larger instances
# compute distances on demand.
MATRIX_LIMIT = 2000

_SECTIONS = ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION")


def normalize_mode(mode):
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise DomainError(f"unknown distance mode {mode!r}") from None


def _euclidean(coords):
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def _nint(values):
    # TSPLIB nint: round half up
    return np.floor(values + 0.5)


@dataclass(frozen=True, eq=False)
class Instance:
    """An immutable CVRP instance.

    Vertex 0 is the depot and vertices ``1..n`` are customers. ``coords``
    has shape ``(n + 1, 2)`` and ``demands`` shape ``(n + 1,)`` with
    ``demands[0] == 0``.
    """

    name: str
    coords: np.ndarray
    demands: np.ndarray
    capacity: int
    vehicles: int
    distance_mode: str = ROUNDED
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        demands = np.array(self.demands)
        if coords.ndim != 2 or coords.shape[1] != 2 or len(coords) < 1:
            raise DomainError("coords must have shape (n + 1, 2)")
        if demands.shape != (len(coords),):
            raise DomainError("demands must have one entry per vertex")
        if not np.all(np.isfinite(coords)):
            raise DomainError("coords must be finite")
        if np.any(demands != np.round(demands)):
            raise DomainError("demands must be integers")
        demands = demands.astype(np.int64)
        if int(self.capacity) <= 0 or int(self.vehicles) <= 0:
            raise DomainError("capacity and vehicles must be positive")
        if demands[0] != 0:
            raise DomainError("depot demand must be 0")
        if np.any(demands[1:] <= 0):
            raise DomainError("customer demands must be positive")
        over = np.flatnonzero(demands > self.capacity)
        if len(over):
            raise InfeasibleInstanceError(
                f"{self.name}: demand of customer {int(over[0])} "
                f"({int(demands[over[0]])}) exceeds capacity {self.capacity}"
            )
        coords.setflags(write=False)
        demands.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "demands", demands)
        object.__setattr__(self, "capacity", int(self.capacity))
        object.__setattr__(self, "vehicles", int(self.vehicles))
        object.__setattr__(self, "distance_mode", normalize_mode(self.distance_mode))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.capacity == other.capacity
            and self.vehicles == other.vehicles
            and self.distance_mode == other.distance_mode
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.demands, other.demands)
        )

    __hash__ = None

    @property
    def n_customers(self):
        return len(self.coords) - 1

    @property
    def n_vertices(self):
        return len(self.coords)

    @property
    def customers(self):
        return range(1, len(self.coords))

    @property
    def total_demand(self):
        return int(self.demands.sum())

    def with_vehicles(self, vehicles):
        return replace(self, vehicles=vehicles, _cache={})

    def with_distance_mode(self, mode):
        return replace(self, distance_mode=mode, _cache={})

    def distance_matrix(self, mode=None):
        """Full ``(n + 1, n + 1)`` distance matrix in ``mode`` (read-only)."""
        mode = normalize_mode(mode or self.distance_mode)
        mat = self._cache.get(mode)
        if mat is None:
            mat = _euclidean(self.coords)
            if mode == ROUNDED:
                mat = _nint(mat)
            mat.setflags(write=False)
            if self.n_vertices <= MATRIX_LIMIT:
                self._cache[mode] = mat
        return mat


def distance(inst, i, j, mode=None):
    """Travel cost between vertices ``i`` and ``j``."""
    n = inst.n_vertices
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"vertex index out of range 0..{n - 1}: ({i}, {j})")
    mode = normalize_mode(mode or inst.distance_mode)
    if n <= MATRIX_LIMIT:
        return float(inst.distance_matrix(mode)[i, j])
    dx, dy = inst.coords[i] - inst.coords[j]
    d = math.hypot(dx, dy)
    return float(math.floor(d + 0.5)) if mode == ROUNDED else d


def cur(inst):
    """Capacity utilisation rate: total demand over total fleet capacity."""
    return inst.total_demand / (inst.vehicles * inst.capacity)


# -- parsing -----------------------------------------------------------------


def _number(tok, lineno, section):
    try:
        value = float(tok)
    except ValueError:
        raise CvrpParseError(
            f"non-numeric token {tok!r} in {section}", section=section, line=lineno
        ) from None
    return int(value) if value.is_integer() and "." not in tok else value


def _vehicles_from_name(name):
    m = re.search(r"-k(\d+)\b", name)
    return int(m.group(1)) if m else None


def parse_cvrplib(text, *, vehicles=None, distance_mode=ROUNDED):
    """Parse a CVRPLIB ``.vrp`` document into an :class:`Instance`.

    The vehicle count is taken from ``vehicles`` when given, otherwise from
    a ``VEHICLES`` header, otherwise from the ``-kZ`` suffix of ``NAME``.
    """
    headers = {}
    coords = {}
    demands = {}
    depots = []
    seen = set()
    section = None
    depot_done = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.replace(":", " : ", 1).split() if ":" in line else line.split()
        head = tokens[0].upper()
        if head == "EOF":
            break
        if head in _SECTIONS:
            section = head
            seen.add(head)
            continue
        if section is not None and ":" not in line:
            if section == "DEPOT_SECTION":
                if depot_done:
                    continue
                value = _number(tokens[0], lineno, section)
                if value == -1:
                    depot_done = True
                else:
                    depots.append(value)
                continue
            values = [_number(t, lineno, section) for t in tokens]
            if section == "NODE_COORD_SECTION":
                if len(values) != 3:
                    raise CvrpParseError(
                        "expected 'id x y'", section=section, line=lineno
                    )
                coords[int(values[0])] = (float(values[1]), float(values[2]))
            else:
                if len(values) != 2 or not isinstance(values[1], int):
                    raise CvrpParseError(
                        "expected 'id demand' with integer demand",
                        section=section,
                        line=lineno,
                    )
                demands[int(values[0])] = values[1]
            continue
        if ":" not in line:
            raise CvrpParseError(f"unrecognised line {line!r}", line=lineno)
        key, _, value = line.partition(":")
        headers[key.strip().upper()] = value.strip().strip('"')
        section = None

    for required in ("NAME", "CAPACITY"):
        if required not in headers:
            raise CvrpParseError(f"{required} missing", section=required)
    for required in _SECTIONS:
        if required not in seen:
            raise CvrpParseError(f"{required} missing", section=required)

    ewt = headers.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper()
    if ewt != "EUC_2D":
        raise CvrpParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt}", section="EDGE_WEIGHT_TYPE")
    name = headers["NAME"]
    try:
        capacity = int(float(headers["CAPACITY"]))
    except ValueError:
        raise CvrpParseError("CAPACITY is not numeric", section="CAPACITY") from None

    if set(coords) != set(demands):
        raise CvrpParseError(
            "NODE_COORD_SECTION and DEMAND_SECTION list different nodes",
            section="DEMAND_SECTION",
        )
    if "DIMENSION" in headers and int(float(headers["DIMENSION"])) != len(coords):
        raise CvrpParseError(
            f"DIMENSION {headers['DIMENSION']} does not match {len(coords)} nodes",
            section="DIMENSION",
        )
    if len(depots) != 1:
        raise CvrpParseError(
            f"exactly one depot required, found {len(depots)}", section="DEPOT_SECTION"
        )
    depot = int(depots[0])
    if depot not in coords:
        raise CvrpParseError(f"depot {depot} has no coordinates", section="DEPOT_SECTION")
    if demands[depot] != 0:
        raise CvrpParseError("depot demand must be 0", section="DEMAND_SECTION")
    order = [depot] + sorted(k for k in coords if k != depot)
    if any(demands[k] <= 0 for k in order[1:]):
        raise CvrpParseError("customer demands must be positive", section="DEMAND_SECTION")

    if vehicles is None:
        if "VEHICLES" in headers:
            vehicles = int(float(headers["VEHICLES"]))
        else:
            vehicles = _vehicles_from_name(name)
    if vehicles is None:
        raise CvrpParseError(
            "vehicle count unknown: no VEHICLES field, no -kZ name suffix, no override",
            section="VEHICLES",
        )

    return Instance(
        name=name,
        coords=np.array([coords[k] for k in order], dtype=float),
        demands=np.array([demands[k] for k in order], dtype=np.int64),
        capacity=capacity,
        vehicles=vehicles,
        distance_mode=distance_mode,
    )


def _fmt(value):
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def write_cvrplib(inst):
    """Serialise ``inst`` as a CVRPLIB document (depot written as node 1)."""
    lines = [
        f"NAME : {inst.name}",
        "TYPE : CVRP",
        f"DIMENSION : {inst.n_vertices}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {inst.capacity}",
        f"VEHICLES : {inst.vehicles}",
        "NODE_COORD_SECTION",
    ]
    lines += [f"{i + 1} {_fmt(x)} {_fmt(y)}" for i, (x, y) in enumerate(inst.coords)]
    lines.append("DEMAND_SECTION")
    lines += [f"{i + 1} {int(d)}" for i, d in enumerate(inst.demands)]
    lines += ["DEPOT_SECTION", "1", "-1", "EOF", ""]
    return "\n".join(lines)


def read_instance(path, **kwargs):
    path = Path(path)
    return parse_cvrplib(path.read_text(), **kwargs)


# -- bundled data ------------------------------------------------------------


def _data_dir():
    return resources.files("cmcvrp") / "data"


def bundled_instances():
    """Names of the CVRPLIB instances shipped with the package."""
    return sorted(
        p.name[: -len(".vrp")] for p in _data_dir().iterdir() if p.name.endswith(".vrp")
    )


def load_bundled(name, **kwargs):
    path = _data_dir() / f"{name}.vrp"
    if not path.is_file():
        raise UnknownInstanceError(
            f"instance {name!r} is not bundled; available: {', '.join(bundled_instances())}"
        )
    return parse_cvrplib(path.read_text(), **kwargs)


@dataclass(frozen=True)
class BksEntry:
    instance_name: str
    bks_objective: int

    def __post_init__(self):
        if self.bks_objective <= 0:
            raise DomainError("bks_objective must be positive")


def parse_bks_registry(text):
    """Parse ``bks.tsv`` content: one ``name<ws>objective`` pair per line."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CvrpParseError("expected 'name objective'", line=lineno)
        try:
            value = int(parts[1])
        except ValueError:
            raise CvrpParseError(f"non-numeric objective {parts[1]!r}", line=lineno) from None
        entries[parts[0]] = BksEntry(parts[0], value)
    return entries


def bks_registry(path=None):
    """Bundled registry, extended/overridden by the file at ``path``."""
    entries = parse_bks_registry((_data_dir() / "bks.tsv").read_text())
    if path is not None:
        entries.update(parse_bks_registry(Path(path).read_text()))
    return entries


def load_bks(name, registry=None):
    entries = bks_registry(registry)
    try:
        return entries[name]
    except KeyError:
        raise UnknownInstanceError(
            f"no best-known solution registered for {name!r}; add a line "
            f"'{name}<TAB>objective' to a bks.tsv file and pass it as the registry"
        ) from None
