import logging
from dataclasses import dataclass
from pathlib import Path
import numpy as np
import plyfile
from scipy.spatial import cKDTree
from src.core.rotations import quat_to_matrix, normalize_quaternions

logger = logging.getLogger(__name__)


class PlyFormatError(ValueError):
    """Archivo PLY mal formado. `line` indica la línea (1-based) cuando se conoce."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"{message} (línea {line})" if line is not None else message)


@dataclass
class PointCloud:
    """Posiciones (N, 3) en metros y colores (N, 3) uint8."""
    positions: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        colors = np.asarray(self.colors).reshape(-1, 3)
        self.colors = np.clip(np.rint(colors), 0, 255).astype(np.uint8)
        if len(self.positions) != len(self.colors):
            raise ValueError("PointCloud con número distinto de posiciones y colores")

    def __len__(self):
        return len(self.positions)

    def merge(self, other):
        return PointCloud(np.vstack([self.positions, other.positions]),
                          np.vstack([self.colors, other.colors]))

    def subset(self, indices):
        return PointCloud(self.positions[indices], self.colors[indices])


@dataclass
class SkinBinding:
    """Por punto: nodo al que está ligado, offset local en reposo y color."""
    nodes: np.ndarray
    offsets: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=int).reshape(-1)
        self.offsets = np.asarray(self.offsets, dtype=float).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)

    def __len__(self):
        return len(self.nodes)


def skin_pose(binding, pose):
    """Coloca cada punto en la posición de su nodo más su offset rotado con la rotación del nodo."""
    if len(binding) and (binding.nodes.min() < 0 or binding.nodes.max() >= len(pose)):
        bad = binding.nodes[(binding.nodes < 0) | (binding.nodes >= len(pose))]
        raise ValueError(f"Nodo desconocido en el binding: {int(bad[0])} (la pose tiene {len(pose)} nodos)")
    rotations, _ = normalize_quaternions(pose.rotations)
    matrices = quat_to_matrix(rotations)
    world = pose.positions[binding.nodes] + np.einsum("nij,nj->ni", matrices[binding.nodes], binding.offsets)
    return PointCloud(world, binding.colors.copy())


def fps_downsample(cloud, target, start_index=0):
    """
    Muestreo del punto más lejano. Empates: índice más bajo.
    La salida conserva el orden de selección.
    """
    n = len(cloud)
    if target < 1 or target > n:
        raise ValueError(f"target inválido para FPS: {target} (la nube tiene {n} puntos)")
    return cloud.subset(fps_indices(cloud.positions, target, start_index))


def fps_indices(points, target, start_index=0):
    points = np.asarray(points, dtype=float)
    selected = np.empty(target, dtype=int)
    selected[0] = start_index
    dists = np.linalg.norm(points - points[start_index], axis=1)
    dists[start_index] = -1.0
    for k in range(1, target):
        # argmax devuelve el primer máximo
        idx = int(np.argmax(dists))
        selected[k] = idx
        # los ya elegidos quedan en -1 tras el mínimo
        dists = np.minimum(dists, np.linalg.norm(points - points[idx], axis=1))
        dists[idx] = -1.0
    return selected


def upsample_interpolate(cloud, target):
    """
    Inserta puntos medios entre cada punto y su vecino más cercano, recorriendo
    los puntos originales en orden hasta llegar a `target`. La vuelta c usa el
    (c+1)-ésimo vecino para no repetir puntos medios.
    """
    n = len(cloud)
    if n < 2:
        raise ValueError(f"Se necesitan al menos 2 puntos para interpolar, hay {n}")
    if target < n:
        raise ValueError(f"target ({target}) menor que la nube ({n})")
    missing = target - n
    if missing == 0:
        return PointCloud(cloud.positions.copy(), cloud.colors.copy())

    cycles = -(-missing // n)
    k = min(cycles, n - 1) + 1
    _, neighbors = cKDTree(cloud.positions).query(cloud.positions, k=k)
    neighbors = np.asarray(neighbors).reshape(n, k)

    sources = np.arange(missing) % n
    rank = (np.arange(missing) // n) % (n - 1) + 1
    partners = neighbors[sources, rank]
    # Duplicados exactos pueden devolverse a sí mismos como vecino
    partners = np.where(partners == sources, neighbors[sources, 0], partners)

    mid = (cloud.positions[sources] + cloud.positions[partners]) / 2.0
    colors = (cloud.colors[sources].astype(int) + cloud.colors[partners].astype(int) + 1) // 2
    return PointCloud(np.vstack([cloud.positions, mid]), np.vstack([cloud.colors, colors]))


def ply_write(cloud, path):
    """Escribe un PLY ASCII con x, y, z (float) y red, green, blue (uchar)."""
    if len(cloud) == 0:
        raise ValueError("empty cloud: no se puede escribir una nube vacía")
    vertex = np.empty(len(cloud), dtype=[("x", "f4"), ("y", "f4"), ("z", "f4"),
                                         ("red", "u1"), ("green", "u1"), ("blue", "u1")])
    vertex["x"], vertex["y"], vertex["z"] = cloud.positions.T
    vertex["red"], vertex["green"], vertex["blue"] = cloud.colors.T
    plyfile.PlyData([plyfile.PlyElement.describe(vertex, "vertex")], text=True).write(str(path))


def ply_read(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No se encontró el PLY: {path}")
    try:
        data = plyfile.PlyData.read(str(path))
    except plyfile.PlyHeaderParseError as e:
        raise PlyFormatError(f"Cabecera PLY inválida en {path}: {e}", line=getattr(e, "line", None)) from e
    except plyfile.PlyElementParseError as e:
        header_lines = _header_length(path)
        row = getattr(e, "row", None)
        line = header_lines + row + 1 if row is not None else None
        raise PlyFormatError(f"Datos PLY inválidos en {path}: {e}", line=line) from e
    except plyfile.PlyParseError as e:
        raise PlyFormatError(f"PLY inválido en {path}: {e}") from e

    if data.text:
        header_lines = _header_length(path)
        with open(path, "rb") as f:
            rows = sum(1 for raw in f.readlines()[header_lines:] if raw.strip())
        declared = sum(el.count for el in data.elements)
        if rows != declared:
            raise PlyFormatError(f"El PLY {path} declara {declared} filas pero contiene {rows}",
                                 line=header_lines + min(rows, declared) + 1)

    if "vertex" not in [el.name for el in data.elements]:
        raise PlyFormatError(f"El PLY {path} no tiene elemento 'vertex'", line=1)
    vertex = data["vertex"].data
    missing = [p for p in ("x", "y", "z", "red", "green", "blue") if p not in vertex.dtype.names]
    if missing:
        raise PlyFormatError(f"Faltan propiedades en {path}: {missing}", line=_header_length(path))
    if len(vertex) == 0:
        raise PlyFormatError("empty cloud: el PLY no contiene puntos", line=_header_length(path))

    positions = np.column_stack([vertex["x"], vertex["y"], vertex["z"]]).astype(float)
    colors = np.column_stack([vertex["red"], vertex["green"], vertex["blue"]])
    return PointCloud(positions, colors)


def _header_length(path):
    with open(path, "rb") as f:
        for i, raw in enumerate(f, start=1):
            if raw.strip() == b"end_header":
                return i
    return None
