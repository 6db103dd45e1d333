import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np
from src.core.rotations import euler_to_rotation, matrix_to_quat, normalize_quaternions

logger = logging.getLogger(__name__)


class SkeletonError(ValueError):
    """Grafo de esqueleto o traza de animación inconsistente."""


@dataclass
class SkeletonNode:
    id: int
    parent: int = None
    rest_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    name: str = ""


@dataclass
class SkeletonGraph:
    """
    Árbol de articulaciones del avatar. El offset de la raíz es el ancla de la
    posición inicial; el de los demás nodos es relativo a su padre en reposo.
    """
    nodes: list

    def __len__(self):
        return len(self.nodes)

    @property
    def parents(self):
        return np.array([-1 if n.parent is None else n.parent for n in self.nodes], dtype=int)

    @property
    def offsets(self):
        return np.array([np.asarray(n.rest_offset, dtype=float) for n in self.nodes]).reshape(-1, 3)

    @property
    def names(self):
        return [n.name or f"joint_{n.id}" for n in self.nodes]

    @property
    def root(self):
        roots = [i for i, n in enumerate(self.nodes) if n.parent is None]
        if len(roots) != 1:
            raise SkeletonError(f"multiple roots: {roots}" if roots else "no root")
        return roots[0]

    def children(self):
        kids = [[] for _ in self.nodes]
        for i, n in enumerate(self.nodes):
            if n.parent is not None:
                kids[n.parent].append(i)
        return kids

    def edges(self):
        """Aristas (padre, hijo, longitud de hueso)."""
        offsets = self.offsets
        return [(n.parent, i, float(np.linalg.norm(offsets[i])))
                for i, n in enumerate(self.nodes) if n.parent is not None]

    def topological_order(self):
        """Orden padres-primero. Lanza SkeletonError si hay ciclos o nodos sueltos."""
        root = self.root
        kids = self.children()
        order, stack = [], [root]
        while stack:
            i = stack.pop()
            order.append(i)
            stack.extend(reversed(kids[i]))
        if len(order) != len(self.nodes):
            raise SkeletonError("cycle: hay nodos inalcanzables desde la raíz")
        return order

    def path_lengths(self):
        """Suma de longitudes de hueso desde la raíz hasta cada nodo (radio de alcance)."""
        offsets = self.offsets
        reach = np.zeros(len(self.nodes))
        for i in self.topological_order():
            p = self.nodes[i].parent
            if p is not None:
                reach[i] = reach[p] + np.linalg.norm(offsets[i])
        return reach

    def to_dict(self):
        return {"nodes": [{"id": n.id,
                           "name": n.name,
                           "parent": n.parent,
                           "rest_offset": [float(v) for v in n.rest_offset]} for n in self.nodes]}

    @classmethod
    def from_dict(cls, data):
        nodes = [SkeletonNode(id=int(d["id"]),
                              parent=None if d.get("parent") is None else int(d["parent"]),
                              rest_offset=np.asarray(d["rest_offset"], dtype=float),
                              name=d.get("name", "")) for d in data["nodes"]]
        return cls(nodes=nodes)


@dataclass
class Pose:
    """Posiciones de mundo (N, 3) y rotaciones de mundo (N, 4) por articulación."""
    positions: np.ndarray
    rotations: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.rotations = np.asarray(self.rotations, dtype=float).reshape(-1, 4)
        if len(self.positions) != len(self.rotations):
            raise SkeletonError("Pose con número distinto de posiciones y rotaciones")

    def __len__(self):
        return len(self.positions)


@dataclass
class AnimationTrace:
    frames: list
    fps: float = 60.0

    def __len__(self):
        return len(self.frames)

    @property
    def joint_count(self):
        return len(self.frames[0]) if self.frames else 0

    def positions(self):
        """Posiciones apiladas (T, N, 3)."""
        return np.stack([f.positions for f in self.frames])


@dataclass
class TraceStats:
    axis_min: np.ndarray
    axis_max: np.ndarray
    histograms: list  # por eje: (conteos, bordes)


def validate_graph(graph, expected_count=None):
    """
    Revisa raíz única, conectividad, aciclicidad y huesos de longitud positiva.
    Devuelve la lista de violaciones (vacía si el grafo es válido).
    """
    violations = []
    n = len(graph.nodes)
    if n == 0:
        return ["empty graph"]
    if expected_count is not None and n != expected_count:
        violations.append(f"node count mismatch: {n} != {expected_count}")

    for i, node in enumerate(graph.nodes):
        if node.id != i:
            violations.append(f"non-sequential id: posición {i} tiene id {node.id}")
        if node.parent is not None and not 0 <= node.parent < n:
            violations.append(f"unknown parent: nodo {i} -> {node.parent}")

    roots = [i for i, node in enumerate(graph.nodes) if node.parent is None]
    if len(roots) > 1:
        violations.append(f"multiple roots: {roots}")
    elif not roots:
        violations.append("no root")

    # Ciclos: seguir punteros al padre
    in_cycle = set()
    for start in range(n):
        seen, i = set(), start
        while i is not None and 0 <= i < n and i not in seen:
            seen.add(i)
            i = graph.nodes[i].parent
        if i is not None and 0 <= i < n and i in seen and i not in in_cycle:
            cycle, j = [i], graph.nodes[i].parent
            while j != i:
                cycle.append(j)
                j = graph.nodes[j].parent
            in_cycle.update(cycle)
            violations.append(f"cycle: {sorted(cycle)}")

    if len(roots) == 1 and not in_cycle:
        kids = [[] for _ in range(n)]
        for i, node in enumerate(graph.nodes):
            if node.parent is not None and 0 <= node.parent < n:
                kids[node.parent].append(i)
        reached, stack = set(), [roots[0]]
        while stack:
            i = stack.pop()
            reached.add(i)
            stack.extend(kids[i])
        if len(reached) != n:
            violations.append(f"disconnected: {sorted(set(range(n)) - reached)}")

    for i, node in enumerate(graph.nodes):
        offset = np.asarray(node.rest_offset, dtype=float)
        if offset.shape != (3,) or not np.all(np.isfinite(offset)):
            violations.append(f"invalid offset: nodo {i}")
        elif node.parent is not None and np.linalg.norm(offset) <= 0:
            violations.append(f"non-positive bone length: nodo {i}")

    return violations


def forward_kinematics(graph, root_pos, eulers):
    """
    Posiciones a partir de ángulos de Euler locales (pitch, roll, yaw) por nodo.
    l_0 = root_pos; l_i = l_padre + R_mundo(padre) @ offset_i.
    """
    eulers = np.asarray(eulers, dtype=float).reshape(-1, 3)
    if len(eulers) != len(graph):
        raise SkeletonError(f"Se esperaban {len(graph)} ternas de Euler, llegaron {len(eulers)}")

    order = graph.topological_order()
    offsets = graph.offsets
    local = euler_to_rotation(eulers).reshape(-1, 3, 3)
    world = np.empty_like(local)
    positions = np.empty((len(graph), 3))

    for i in order:
        p = graph.nodes[i].parent
        if p is None:
            world[i] = local[i]
            positions[i] = np.asarray(root_pos, dtype=float)
        else:
            world[i] = world[p] @ local[i]
            positions[i] = positions[p] + world[p] @ offsets[i]

    return Pose(positions=positions, rotations=matrix_to_quat(world))


def trace_stats(trace, bins=50):
    """Extremos por eje de |l_t - l_(t-1)| sobre todas las articulaciones y frames."""
    if len(trace) < 2:
        raise SkeletonError(f"insufficient frames: se requieren al menos 2, hay {len(trace)}")
    deltas = np.abs(np.diff(trace.positions(), axis=0)).reshape(-1, 3)
    histograms = []
    for axis in range(3):
        upper = max(float(deltas[:, axis].max()), 1e-12)
        counts, edges = np.histogram(deltas[:, axis], bins=bins, range=(0.0, upper))
        histograms.append((counts, edges))
    return TraceStats(axis_min=deltas.min(axis=0), axis_max=deltas.max(axis=0), histograms=histograms)


def load_skeleton(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No se encontró el archivo de esqueleto: {path}")
    with open(path, "r", encoding="utf-8") as f:
        graph = SkeletonGraph.from_dict(json.load(f))
    violations = validate_graph(graph)
    if violations:
        raise SkeletonError(f"Esqueleto inválido en {path}: {'; '.join(violations)}")
    logger.info(f"Esqueleto cargado: {len(graph)} nodos desde {path}")
    return graph


def save_skeleton(graph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(graph.to_dict(), f, indent=2)


def load_trace(path):
    """Lee una traza JSON {fps, joint_count, frames: [{positions, quaternions}]}."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No se encontró la traza: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)

    joint_count = int(data["joint_count"])
    frames = []
    for t, raw in enumerate(data["frames"]):
        rotations, _ = normalize_quaternions(raw["quaternions"])
        pose = Pose(positions=raw["positions"], rotations=rotations)
        if len(pose) != joint_count:
            raise SkeletonError(f"Frame {t}: {len(pose)} articulaciones, se esperaban {joint_count}")
        frames.append(pose)
    logger.info(f"Traza cargada: {len(frames)} frames a {data.get('fps', 60)} fps")
    return AnimationTrace(frames=frames, fps=float(data.get("fps", 60)))


def save_trace(trace, path):
    data = {
        "fps": trace.fps,
        "joint_count": trace.joint_count,
        "frames": [{"positions": f.positions.tolist(), "quaternions": f.rotations.tolist()} for f in trace.frames],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f)
