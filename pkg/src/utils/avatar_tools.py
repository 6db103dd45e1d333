import logging
import numpy as np
from src.config import Config
from src.core.skeleton import SkeletonGraph, SkeletonNode, forward_kinematics
from src.core.pointcloud import PointCloud, SkinBinding, fps_indices

logger = logging.getLogger(__name__)

# Esqueleto estilo Mixamo de 25 nodos: (nombre, padre, offset en reposo)
MIXAMO_25 = [
    ("Hips", None, Config.AVATAR_INITIAL_POSITION),
    ("Spine", 0, (0.0, 0.10, 0.0)),
    ("Spine1", 1, (0.0, 0.12, 0.0)),
    ("Spine2", 2, (0.0, 0.12, 0.0)),
    ("Neck", 3, (0.0, 0.14, 0.0)),
    ("Head", 4, (0.0, 0.09, 0.01)),
    ("HeadTop_End", 5, (0.0, 0.18, 0.0)),
    ("LeftShoulder", 3, (0.06, 0.10, 0.0)),
    ("LeftArm", 7, (0.12, 0.0, 0.0)),
    ("LeftForeArm", 8, (0.26, 0.0, 0.0)),
    ("LeftHand", 9, (0.24, 0.0, 0.0)),
    ("LeftHandIndex_End", 10, (0.10, 0.0, 0.0)),
    ("RightShoulder", 3, (-0.06, 0.10, 0.0)),
    ("RightArm", 12, (-0.12, 0.0, 0.0)),
    ("RightForeArm", 13, (-0.26, 0.0, 0.0)),
    ("RightHand", 14, (-0.24, 0.0, 0.0)),
    ("RightHandIndex_End", 15, (-0.10, 0.0, 0.0)),
    ("LeftUpLeg", 0, (0.09, -0.06, 0.0)),
    ("LeftLeg", 17, (0.0, -0.42, 0.0)),
    ("LeftFoot", 18, (0.0, -0.40, 0.0)),
    ("LeftToeBase", 19, (0.0, -0.06, 0.12)),
    ("RightUpLeg", 0, (-0.09, -0.06, 0.0)),
    ("RightLeg", 21, (0.0, -0.42, 0.0)),
    ("RightFoot", 22, (0.0, -0.40, 0.0)),
    ("RightToeBase", 23, (0.0, -0.06, 0.12)),
]

# Paleta casi isoluminante (Y BT.601 entre 149.5 y 151)
PALETTE = {
    "shirt": (90, 170, 210),
    "skin": (200, 132, 120),
    "pants": (120, 158, 190),
    "shoes": (140, 153, 160),
    "table": (160, 148, 130),
}

# Hueso (nombre del hijo) -> (radio, región)
BONE_SHAPES = {
    "Spine": (0.12, "shirt"), "Spine1": (0.12, "shirt"), "Spine2": (0.11, "shirt"),
    "Neck": (0.05, "skin"), "Head": (0.05, "skin"), "HeadTop_End": (0.10, "skin"),
    "LeftShoulder": (0.05, "shirt"), "RightShoulder": (0.05, "shirt"),
    "LeftArm": (0.05, "shirt"), "RightArm": (0.05, "shirt"),
    "LeftForeArm": (0.045, "shirt"), "RightForeArm": (0.045, "shirt"),
    "LeftHand": (0.04, "skin"), "RightHand": (0.04, "skin"),
    "LeftHandIndex_End": (0.035, "skin"), "RightHandIndex_End": (0.035, "skin"),
    "LeftUpLeg": (0.08, "pants"), "RightUpLeg": (0.08, "pants"),
    "LeftLeg": (0.07, "pants"), "RightLeg": (0.07, "pants"),
    "LeftFoot": (0.05, "pants"), "RightFoot": (0.05, "pants"),
    "LeftToeBase": (0.045, "shoes"), "RightToeBase": (0.045, "shoes"),
}


def default_skeleton():
    """Esqueleto de 25 nodos con la posición inicial del avatar como ancla de la raíz."""
    return SkeletonGraph(nodes=[SkeletonNode(id=i, parent=p, rest_offset=np.array(o, dtype=float), name=name)
                                for i, (name, p, o) in enumerate(MIXAMO_25)])


def rest_pose(graph):
    return forward_kinematics(graph, graph.offsets[graph.root], np.zeros((len(graph), 3)))


def _bone_segments(graph):
    """Segmentos (padre, hijo, inicio, fin) en la pose de reposo."""
    positions = rest_pose(graph).positions
    return [(p, c, positions[p], positions[c]) for p, c, _ in graph.edges()]


def _sample_bone(rng, start, end, radius, count):
    axis = end - start
    length = np.linalg.norm(axis)
    direction = axis / length
    helper = np.array([0.0, 0.0, 1.0]) if abs(direction[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(direction, helper)
    u /= np.linalg.norm(u)
    v = np.cross(direction, u)
    t = rng.uniform(0.0, 1.0, count)
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    return start + t[:, None] * axis + radius * (np.cos(theta)[:, None] * u + np.sin(theta)[:, None] * v)


def _sample_head(rng, start, end, radius, count):
    center = (start + end) / 2.0
    directions = rng.standard_normal((count, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return center + radius * directions


def _segment_distances(points, segments):
    """Distancia de cada punto a cada segmento (N, S)."""
    starts = np.array([s for _, _, s, _ in segments])
    ends = np.array([e for _, _, _, e in segments])
    axis = ends - starts
    rel = points[:, None, :] - starts[None, :, :]
    t = np.clip(np.einsum("nsk,sk->ns", rel, axis) / np.einsum("sk,sk->s", axis, axis), 0.0, 1.0)
    closest = starts[None, :, :] + t[..., None] * axis[None, :, :]
    return np.linalg.norm(points[:, None, :] - closest, axis=2)


def build_avatar_binding(graph, n_points, seed=Config.SEED, oversample=2):
    """
    Nube del avatar en reposo ligada rígidamente al hueso más cercano.
    Los candidatos se reparten por área de superficie y se espacian con FPS.
    """
    rng = np.random.default_rng(seed)
    segments = _bone_segments(graph)
    names = graph.names
    areas = []
    for _, c, s, e in segments:
        radius, _ = BONE_SHAPES.get(names[c], (0.05, "skin"))
        if names[c] == "HeadTop_End":
            areas.append(4.0 * np.pi * radius ** 2)
        else:
            areas.append(2.0 * np.pi * radius * np.linalg.norm(e - s))
    areas = np.array(areas)
    counts = np.maximum(1, np.round(areas / areas.sum() * n_points * oversample).astype(int))

    candidates = []
    for (_, c, s, e), count in zip(segments, counts):
        radius, _ = BONE_SHAPES.get(names[c], (0.05, "skin"))
        sampler = _sample_head if names[c] == "HeadTop_End" else _sample_bone
        candidates.append(sampler(rng, s, e, radius, count))
    candidates = np.vstack(candidates)
    if len(candidates) < n_points:
        raise ValueError(f"Candidatos insuficientes ({len(candidates)}) para {n_points} puntos")

    points = candidates[fps_indices(candidates, n_points)]
    owner = np.argmin(_segment_distances(points, segments), axis=1)
    nodes = np.array([segments[k][0] for k in owner])
    colors = np.array([PALETTE[BONE_SHAPES.get(names[segments[k][1]], (0.05, "skin"))[1]] for k in owner])

    # En reposo las rotaciones de mundo son la identidad: offset = punto - nodo
    offsets = points - rest_pose(graph).positions[nodes]
    logger.info(f"Binding del avatar generado: {n_points} puntos sobre {len(segments)} huesos")
    return SkinBinding(nodes=nodes, offsets=offsets, colors=colors)


def build_stationary_cloud(n_points, seed=Config.SEED, position=Config.STATIONARY_INITIAL_POSITION, oversample=2):
    """Modelo estacionario (mesa) en su posición inicial."""
    rng = np.random.default_rng(seed + 1)
    anchor = np.asarray(position, dtype=float)
    total = n_points * oversample
    top_count = int(total * 0.6)
    leg_count = (total - top_count) // 4

    top = np.column_stack([rng.uniform(-0.25, 0.25, top_count),
                           np.full(top_count, 0.72),
                           rng.uniform(-0.25, 0.25, top_count)])
    legs = []
    for dx, dz in ((-0.22, -0.22), (-0.22, 0.22), (0.22, -0.22), (0.22, 0.22)):
        legs.append(_sample_bone(rng, np.array([dx, 0.0, dz]), np.array([dx, 0.70, dz]), 0.025, leg_count))
    candidates = anchor + np.vstack([top] + legs)

    points = candidates[fps_indices(candidates, n_points)]
    return PointCloud(points, np.tile(PALETTE["table"], (n_points, 1)))
