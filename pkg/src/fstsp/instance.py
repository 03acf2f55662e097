"""Instance data model, canonical JSON format and benchmark adapters.

Node indexing follows the formulations: ``0`` is the start depot, ``1..c`` are
customers and ``c + 1`` is the end depot (same physical point as ``0``).  Both
travel-time matrices are stored as full ``(c + 2) x (c + 2)`` arrays.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

FORMAT_VERSION = 1
TOL = 1e-9


class InstanceError(ValueError):
    """Raised for malformed or inconsistent instance data."""


class Sortie(NamedTuple):
    launch: int
    customer: int
    rendezvous: int

    def __str__(self) -> str:
        return f"<{self.launch},{self.customer},{self.rendezvous}>"


def _frozen(matrix) -> np.ndarray:
    arr = np.array(matrix, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    num_customers: int
    tau_truck: np.ndarray
    tau_drone: np.ndarray
    drone_eligible: frozenset[int]
    sigma_launch: float
    sigma_rendezvous: float
    endurance: float
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "tau_truck", _frozen(self.tau_truck))
        object.__setattr__(self, "tau_drone", _frozen(self.tau_drone))
        object.__setattr__(self, "drone_eligible", frozenset(int(j) for j in self.drone_eligible))
        for key in ("sigma_launch", "sigma_rendezvous", "endurance"):
            object.__setattr__(self, key, float(getattr(self, key)))
        _validate(self)

    # index sets -------------------------------------------------------
    @property
    def end_depot(self) -> int:
        return self.num_customers + 1

    @property
    def customers(self) -> range:
        return range(1, self.num_customers + 1)

    @property
    def nodes(self) -> range:
        return range(self.num_customers + 2)

    @property
    def launch_nodes(self) -> range:
        """N_0 = {0..c}."""
        return range(self.num_customers + 1)

    @property
    def rendezvous_nodes(self) -> range:
        """N_+ = {1..c+1}."""
        return range(1, self.num_customers + 2)

    def arcs(self) -> Iterable[tuple[int, int]]:
        """Arc set A in lexicographic order."""
        for i in self.launch_nodes:
            for j in self.rendezvous_nodes:
                if i != j:
                    yield i, j

    def flight_time(self, launch: int, customer: int, rendezvous: int) -> float:
        return float(self.tau_drone[launch, customer] + self.tau_drone[customer, rendezvous])

    def with_endurance(self, endurance: float) -> Instance:
        return Instance(
            self.num_customers,
            self.tau_truck,
            self.tau_drone,
            self.drone_eligible,
            self.sigma_launch,
            self.sigma_rendezvous,
            endurance,
            self.name,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.num_customers == other.num_customers
            and self.drone_eligible == other.drone_eligible
            and self.sigma_launch == other.sigma_launch
            and self.sigma_rendezvous == other.sigma_rendezvous
            and self.endurance == other.endurance
            and np.array_equal(self.tau_truck, other.tau_truck)
            and np.array_equal(self.tau_drone, other.tau_drone)
        )

    __hash__ = None  # type: ignore[assignment]


def _validate(inst: Instance) -> None:
    c = inst.num_customers
    if not isinstance(c, (int, np.integer)) or c < 1:
        raise InstanceError(f"customers: expected integer >= 1, got {c!r}")
    size = c + 2
    for field in ("tau_truck", "tau_drone"):
        mat = getattr(inst, field)
        if mat.shape != (size, size):
            raise InstanceError(f"{field}: expected {size}x{size} matrix, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            i, j = np.argwhere(~np.isfinite(mat))[0]
            raise InstanceError(f"{field}[{i}][{j}]: non-finite time")
        if np.any(mat < 0):
            i, j = np.argwhere(mat < 0)[0]
            raise InstanceError(f"{field}[{i}][{j}]: negative time {mat[i, j]}")
        if abs(mat[0, size - 1]) > TOL:
            raise InstanceError(f"{field}[0][{size - 1}]: depot pair time must be 0")
    for j in inst.drone_eligible:
        if not 1 <= j <= c:
            raise InstanceError(f"drone_eligible: index {j} outside customers 1..{c}")
    if inst.sigma_launch < 0 or inst.sigma_rendezvous < 0:
        raise InstanceError("sigma_launch/sigma_rendezvous: must be non-negative")
    if not inst.endurance > 0:
        raise InstanceError(f"endurance: must be positive, got {inst.endurance}")


# ---------------------------------------------------------------------------
# canonical format


def _round6(value: float) -> float | int:
    r = round(float(value), 6)
    return int(r) if r.is_integer() and abs(r) < 2**53 else r


def instance_to_dict(inst: Instance) -> dict:
    return {
        "version": FORMAT_VERSION,
        "customers": inst.num_customers,
        "sigma_launch": _round6(inst.sigma_launch),
        "sigma_rendezvous": _round6(inst.sigma_rendezvous),
        "endurance": _round6(inst.endurance),
        "drone_eligible": sorted(inst.drone_eligible),
        "tau_truck": [[_round6(v) for v in row] for row in inst.tau_truck],
        "tau_drone": [[_round6(v) for v in row] for row in inst.tau_drone],
    }


def serialize_instance(inst: Instance) -> str:
    """Render the canonical document (times rounded to 6 fractional digits)."""
    doc = instance_to_dict(inst)
    lines = ["{"]
    for key in ("version", "customers", "sigma_launch", "sigma_rendezvous", "endurance", "drone_eligible"):
        lines.append(f'  "{key}": {json.dumps(doc[key])},')
    for key in ("tau_truck", "tau_drone"):
        rows = ",\n".join("    " + json.dumps(row) for row in doc[key])
        tail = "," if key == "tau_truck" else ""
        lines.append(f'  "{key}": [\n{rows}\n  ]{tail}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _number(doc: dict, key: str) -> float:
    if key not in doc:
        raise InstanceError(f"{key}: missing field")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _matrix(doc: dict, key: str, size: int) -> np.ndarray:
    if key not in doc:
        raise InstanceError(f"{key}: missing field")
    rows = doc[key]
    if not isinstance(rows, list) or len(rows) != size:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise InstanceError(f"{key}: expected {size} rows, got {got}")
    out = np.zeros((size, size))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != size:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise InstanceError(f"{key}[{i}]: expected {size} entries, got {got}")
        for j, value in enumerate(row):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InstanceError(f"{key}[{i}][{j}]: expected a number, got {value!r}")
            out[i, j] = value
    return out


def instance_from_dict(doc: dict, name: str = "") -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("document: expected a JSON object")
    if doc.get("version") != FORMAT_VERSION:
        raise InstanceError(f"version: expected {FORMAT_VERSION}, got {doc.get('version')!r}")
    c = doc.get("customers")
    if isinstance(c, bool) or not isinstance(c, int) or c < 1:
        raise InstanceError(f"customers: expected integer >= 1, got {c!r}")
    eligible = doc.get("drone_eligible")
    if not isinstance(eligible, list) or not all(isinstance(j, int) and not isinstance(j, bool) for j in eligible):
        raise InstanceError("drone_eligible: expected a list of integers")
    return Instance(
        num_customers=c,
        tau_truck=_matrix(doc, "tau_truck", c + 2),
        tau_drone=_matrix(doc, "tau_drone", c + 2),
        drone_eligible=frozenset(eligible),
        sigma_launch=_number(doc, "sigma_launch"),
        sigma_rendezvous=_number(doc, "sigma_rendezvous"),
        endurance=_number(doc, "endurance"),
        name=name,
    )


def parse_instance(text: str, name: str = "") -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"document: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc, name=name)


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(encoding="utf-8"), name=path.stem)


def save_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(serialize_instance(inst), encoding="utf-8")


# ---------------------------------------------------------------------------
# sortie set


def feasible_sorties(inst: Instance) -> list[Sortie]:
    """All triples <i,j,k> whose pure flight plus rendezvous fits the endurance.

    Returned in lexicographic order.
    """
    tau = inst.tau_drone
    limit = inst.endurance - inst.sigma_rendezvous + TOL
    end = inst.end_depot
    out = []
    for i in range(end):
        for j in sorted(inst.drone_eligible):
            if j == i or tau[i, j] > limit:
                continue
            for k in range(1, end + 1):
                if k == i or k == j:
                    continue
                if tau[i, j] + tau[j, k] <= limit:
                    out.append(Sortie(i, j, k))
    return out


# ---------------------------------------------------------------------------
# generators and adapters


def adapt_tsplib(
    coords: Sequence[tuple[float, float]],
    eligible_fraction: float,
    speed_ratio: float,
    depot_mode: str = "center",
    sigma_launch: float = 1.0,
    sigma_rendezvous: float = 1.0,
    endurance: float = 20.0,
    *,
    eligible_seed: int | None = None,
    name: str = "",
) -> Instance:
    """Build an instance from planar points, all of which become customers.

    Truck times are Euclidean distances; drone times are the same distances
    divided by ``speed_ratio``.  The depot is added at the centroid
    (``"center"``) or at the bounding-box lower-left corner (``"corner"``).
    Eligibility picks the ``floor(fraction * c / 100)`` lowest customer indices,
    or a random subset of that size when ``eligible_seed`` is given.
    """
    if len(coords) == 0:
        raise InstanceError("coords: empty coordinate list")
    if len(coords) < 2:
        raise InstanceError("coords: at least 2 points required")
    if not 0 <= eligible_fraction <= 100:
        raise InstanceError(f"eligible_fraction: {eligible_fraction} outside [0, 100]")
    if not speed_ratio > 0:
        raise InstanceError(f"speed_ratio: must be positive, got {speed_ratio}")
    pts = np.asarray(coords, dtype=float)
    if depot_mode == "center":
        depot = pts.mean(axis=0)
    elif depot_mode == "corner":
        depot = pts.min(axis=0)
    else:
        raise InstanceError(f"depot_mode: expected 'center' or 'corner', got {depot_mode!r}")
    c = len(pts)
    allpts = np.vstack([depot, pts, depot])
    diff = allpts[:, None, :] - allpts[None, :, :]
    truck = np.sqrt((diff**2).sum(axis=2))
    truck[0, c + 1] = truck[c + 1, 0] = 0.0
    drone = truck / speed_ratio
    count = math.floor(eligible_fraction * c / 100 + 1e-12)
    if eligible_seed is None:
        eligible = range(1, count + 1)
    else:
        rng = np.random.default_rng(eligible_seed)
        eligible = (rng.choice(c, size=count, replace=False) + 1).tolist()
    return Instance(c, truck, drone, frozenset(eligible), sigma_launch, sigma_rendezvous, endurance, name)


def read_tsplib_coords(path: str | Path) -> list[tuple[float, float]]:
    """Read NODE_COORD_SECTION points from a TSPLIB file (EUC_2D/ATT/GEO coordinates as given)."""
    coords = []
    in_section = False
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.upper().startswith("NODE_COORD_SECTION"):
            in_section = True
            continue
        if not in_section:
            continue
        if line.upper() == "EOF" or line[0].isalpha():
            break
        parts = line.split()
        if len(parts) < 3:
            raise InstanceError(f"{path}: malformed coordinate line {raw!r}")
        coords.append((float(parts[1]), float(parts[2])))
    if not coords:
        raise InstanceError(f"{path}: no NODE_COORD_SECTION entries")
    return coords


def _read_matrix_csv(path: Path) -> np.ndarray:
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            cells = [cell.strip() for cell in row if cell.strip() != ""]
            if not cells or cells[0].startswith("%") or cells[0].startswith("#"):
                continue
            try:
                rows.append([float(x) for x in cells])
            except ValueError:
                continue  # header line
    mat = np.array(rows, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InstanceError(f"{path.name}: expected a square matrix, got shape {mat.shape}")
    return mat


def ingest_matrix_dir(
    directory: str | Path,
    sigma_launch: float = 1.0,
    sigma_rendezvous: float = 1.0,
    endurance: float = 20.0,
) -> Instance:
    """Import an external benchmark laid out as three CSV files.

    Column mapping:

    * ``tau.csv``: truck time matrix over nodes ``0..c+1`` (row = from, col = to);
    * ``tauprime.csv``: drone time matrix, same shape;
    * ``nodes.csv``: one line per node, first column the node id, last column
      ``1`` when the node may be served by drone.  Depot lines are ignored.

    Times are imported verbatim except the depot pair ``(0, c+1)``, which is
    forced to zero because both indices denote the same location.
    """
    directory = Path(directory)
    truck = _read_matrix_csv(directory / "tau.csv")
    drone = _read_matrix_csv(directory / "tauprime.csv")
    if truck.shape != drone.shape:
        raise InstanceError(f"{directory}: tau.csv {truck.shape} and tauprime.csv {drone.shape} differ")
    c = truck.shape[0] - 2
    eligible = set()
    with (directory / "nodes.csv").open(newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            cells = [cell.strip() for cell in row if cell.strip() != ""]
            if not cells or cells[0].startswith(("%", "#")):
                continue
            try:
                node, flag = int(float(cells[0])), int(float(cells[-1]))
            except ValueError:
                continue
            if 1 <= node <= c and flag == 1:
                eligible.add(node)
    for mat in (truck, drone):
        mat[0, c + 1] = mat[c + 1, 0] = 0.0
    return Instance(c, truck, drone, frozenset(eligible), sigma_launch, sigma_rendezvous, endurance, directory.name)


def random_instance(
    num_customers: int,
    seed: int,
    *,
    eligible_fraction: float = 80.0,
    speed_ratio: float = 1.5,
    sigma_launch: float = 1.0,
    sigma_rendezvous: float = 1.0,
    endurance: float = 20.0,
    side: float = 20.0,
    integer: bool = False,
) -> Instance:
    """Seeded random instance: uniform points in a square, depot at the centre.

    Truck times are Manhattan distances and drone times Euclidean distances over
    ``speed_ratio``, mirroring the usual truck/drone metric split.  With
    ``integer=True`` all times are rounded up to integers so sums are exact.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, side, size=(num_customers, 2))
    depot = np.array([side / 2, side / 2])
    allpts = np.vstack([depot, pts, depot])
    diff = allpts[:, None, :] - allpts[None, :, :]
    truck = np.abs(diff).sum(axis=2)
    drone = np.sqrt((diff**2).sum(axis=2)) / speed_ratio
    if integer:
        truck, drone = np.ceil(truck), np.ceil(drone)
    else:
        truck, drone = np.round(truck, 6), np.round(drone, 6)
    c = num_customers
    truck[0, c + 1] = truck[c + 1, 0] = 0.0
    drone[0, c + 1] = drone[c + 1, 0] = 0.0
    count = math.floor(eligible_fraction * c / 100 + 1e-12)
    eligible = (rng.choice(c, size=count, replace=False) + 1).tolist()
    return Instance(c, truck, drone, frozenset(eligible), sigma_launch, sigma_rendezvous, endurance, f"rand{c}_s{seed}")
