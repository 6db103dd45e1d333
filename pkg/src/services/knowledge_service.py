import json
import logging
from dataclasses import dataclass
from pathlib import Path
import numpy as np
import plyfile
from src.config import Config
from src.core.skeleton import SkeletonGraph, validate_graph, SkeletonError
from src.core.pointcloud import PointCloud, SkinBinding, ply_read, ply_write, PlyFormatError

logger = logging.getLogger(__name__)

SEMANTIC_FRAMEWORKS = ("gsar", "egsar", "ecgsar")


@dataclass
class BaseKnowledge:
    """
    Conocimiento compartido antes del streaming. GSAR: modelos del avatar y del
    objeto estacionario con su posición. E-GSAR/EC-GSAR añaden el grafo del
    esqueleto y la posición inicial del avatar.
    """
    framework: str
    avatar_binding: SkinBinding
    stationary: PointCloud
    stationary_position: np.ndarray
    joint_count: int = None
    graph: SkeletonGraph = None
    avatar_position: np.ndarray = None

    @property
    def has_graph(self):
        return self.graph is not None and self.avatar_position is not None


def build_base_knowledge(framework, graph, avatar_binding, stationary,
                         avatar_position=None, stationary_position=Config.STATIONARY_INITIAL_POSITION):
    """Arma el conocimiento base de cada framework semántico."""
    if framework not in SEMANTIC_FRAMEWORKS:
        raise ValueError(f"El framework {framework} no usa conocimiento base semántico")
    stationary_position = np.asarray(stationary_position, dtype=float)
    joint_count = len(graph) if graph is not None else int(avatar_binding.nodes.max()) + 1
    if framework == "gsar":
        return BaseKnowledge(framework, avatar_binding, stationary, stationary_position, joint_count)

    if graph is None:
        raise ValueError(f"{framework} requiere el grafo del esqueleto en el conocimiento base")
    if avatar_position is None:
        avatar_position = graph.offsets[graph.root]
    return BaseKnowledge(framework, avatar_binding, stationary, stationary_position, joint_count,
                         graph=graph, avatar_position=np.asarray(avatar_position, dtype=float))


def _write_binding(binding, path):
    vertex = np.empty(len(binding), dtype=[("x", "f8"), ("y", "f8"), ("z", "f8"),
                                           ("red", "u1"), ("green", "u1"), ("blue", "u1"), ("node", "i4")])
    vertex["x"], vertex["y"], vertex["z"] = binding.offsets.T
    vertex["red"], vertex["green"], vertex["blue"] = binding.colors.T
    vertex["node"] = binding.nodes
    plyfile.PlyData([plyfile.PlyElement.describe(vertex, "vertex")], text=True).write(str(path))


def _read_binding(path):
    try:
        vertex = plyfile.PlyData.read(str(path))["vertex"].data
    except (plyfile.PlyParseError, KeyError) as e:
        raise PlyFormatError(f"Binding PLY inválido en {path}: {e}") from e
    if "node" not in vertex.dtype.names:
        raise PlyFormatError(f"El binding {path} no tiene la propiedad 'node'")
    return SkinBinding(nodes=vertex["node"],
                       offsets=np.column_stack([vertex["x"], vertex["y"], vertex["z"]]),
                       colors=np.column_stack([vertex["red"], vertex["green"], vertex["blue"]]))


def save_base_knowledge(bk, path):
    """JSON con referencias a los PLY del binding y del modelo estacionario (junto al JSON)."""
    path = Path(path)
    stem = path.with_suffix("")
    binding_path = stem.with_name(f"{stem.name}_avatar.ply")
    stationary_path = stem.with_name(f"{stem.name}_stationary.ply")
    _write_binding(bk.avatar_binding, binding_path)
    ply_write(bk.stationary, stationary_path)

    data = {
        "framework": bk.framework,
        "avatar_binding": binding_path.name,
        "stationary_cloud": stationary_path.name,
        "stationary_initial_position": bk.stationary_position.tolist(),
        "joint_count": bk.joint_count,
        "skeleton": bk.graph.to_dict() if bk.graph is not None else None,
        "avatar_initial_position": bk.avatar_position.tolist() if bk.avatar_position is not None else None,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2)
    logger.info(f"Conocimiento base '{bk.framework}' guardado en {path}")


def load_base_knowledge(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No se encontró el conocimiento base: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)

    graph = None
    if data.get("skeleton") is not None:
        graph = SkeletonGraph.from_dict(data["skeleton"])
        violations = validate_graph(graph)
        if violations:
            raise SkeletonError(f"Esqueleto inválido en {path}: {'; '.join(violations)}")

    return BaseKnowledge(
        framework=data["framework"],
        avatar_binding=_read_binding(path.parent / data["avatar_binding"]),
        stationary=ply_read(path.parent / data["stationary_cloud"]),
        stationary_position=np.asarray(data["stationary_initial_position"], dtype=float),
        joint_count=data.get("joint_count"),
        graph=graph,
        avatar_position=None if data.get("avatar_initial_position") is None
        else np.asarray(data["avatar_initial_position"], dtype=float),
    )


class KnowledgeService:
    """Prepara y reparte el conocimiento base de cada framework para un experimento."""

    def prepare(self, frameworks, graph, avatar_binding, stationary):
        knowledge = {}
        for framework in frameworks:
            if framework in SEMANTIC_FRAMEWORKS:
                knowledge[framework] = build_base_knowledge(framework, graph, avatar_binding, stationary)
        logger.info(f"Conocimiento base listo para: {list(knowledge)}")
        return knowledge


# Instancia global
knowledge_service = KnowledgeService()
