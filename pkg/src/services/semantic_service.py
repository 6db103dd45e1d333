import logging
from dataclasses import dataclass
import numpy as np
from src.config import Config
from src.core.rotations import normalize_quaternions, quat_to_euler, local_rotations
from src.core.channel import round_robin_mapping

logger = logging.getLogger(__name__)

# Campos por articulación en el orden de envío
GSAR_FIELDS = ("position",) * 3 + ("quaternion",) * 4
EGSAR_FIELDS = ("euler",) * 3

VARIANT_BY_FRAMEWORK = {"gsar": "gsar", "egsar": "egsar", "ecgsar": "egsar"}


class ConvergenceError(RuntimeError):
    """AbSR no convergió; `weights` guarda la última iteración normalizada."""

    def __init__(self, message, weights):
        self.weights = weights
        super().__init__(message)


@dataclass
class SemanticFrame:
    """
    Información semántica de un frame.
    gsar: (N, 7) posición + cuaternión; egsar: (N, 3) pitch, roll, yaw en grados.
    """
    variant: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1, len(self.fields))

    @property
    def fields(self):
        return GSAR_FIELDS if self.variant == "gsar" else EGSAR_FIELDS

    @property
    def joint_count(self):
        return len(self.values)

    @property
    def scalar_count(self):
        return self.values.size

    @property
    def positions(self):
        if self.variant != "gsar":
            raise ValueError("Solo el frame GSAR transporta posiciones")
        return self.values[:, :3]

    @property
    def rotations(self):
        if self.variant != "gsar":
            raise ValueError("Solo el frame GSAR transporta cuaterniones")
        return self.values[:, 3:]

    @property
    def eulers(self):
        if self.variant != "egsar":
            raise ValueError("Solo el frame E-GSAR transporta ángulos de Euler")
        return self.values


def fields_for(framework):
    return GSAR_FIELDS if VARIANT_BY_FRAMEWORK[framework] == "gsar" else EGSAR_FIELDS


def extract_semantics(pose, framework, graph=None):
    """
    Extracción semántica a partir de la pose de verdad terreno.
    GSAR copia posiciones y cuaterniones de mundo; E-GSAR/EC-GSAR convierte
    la rotación local de cada articulación a Euler.
    """
    if framework not in VARIANT_BY_FRAMEWORK:
        raise ValueError(f"Framework sin carga semántica: {framework}")
    variant = VARIANT_BY_FRAMEWORK[framework]
    rotations, _ = normalize_quaternions(pose.rotations)
    if variant == "gsar":
        return SemanticFrame("gsar", np.hstack([pose.positions, rotations]))
    if graph is None:
        raise ValueError("E-GSAR requires skeleton graph para extraer rotaciones locales")
    local = local_rotations(rotations, graph.parents)
    return SemanticFrame("egsar", quat_to_euler(local))


def absr_weights(graph, alpha=Config.ABSR_ALPHA, epsilon=Config.ABSR_EPSILON, max_iter=Config.ABSR_MAX_ITER):
    """
    Ranking semántico basado en el avatar (iteración de punto fijo tipo PageRank):
    w_i <- deg(i) / (1 - alpha) + sum_j |l_ij| w_j, normalizado en L1 en cada vuelta.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha debe estar en (0, 1): {alpha}")
    n = len(graph)
    if n == 0:
        raise ValueError("empty graph: no hay nodos que ponderar")
    if n == 1:
        return np.ones(1)

    lengths = np.zeros((n, n))
    for parent, child, length in graph.edges():
        lengths[parent, child] = lengths[child, parent] = length
    degree = np.count_nonzero(lengths, axis=1).astype(float)
    teleport = degree / (1.0 - alpha)

    weights = np.full(n, 1.0 / n)
    for iteration in range(1, max_iter + 1):
        last = weights
        weights = teleport + lengths @ last
        weights /= np.linalg.norm(weights, 1)
        if np.linalg.norm(weights - last) < epsilon:
            logger.debug(f"AbSR convergió en {iteration} iteraciones")
            return weights

    raise ConvergenceError(f"AbSR no convergió tras {max_iter} iteraciones (epsilon={epsilon})", weights)


def channel_map(weights, channel):
    """
    Empareja ítems por peso descendente con subcanales por SNR descendente.
    Empates: índice menor primero. Si hay más ítems que subcanales se da la vuelta.
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if channel.n_subchannels == 0:
        raise ValueError("El canal no tiene subcanales")
    # Con potencia uniforme el orden por SNR coincide con el orden por |h|^2 (también sin ruido)
    quality = channel.transmit_power * np.abs(channel.gains) ** 2
    item_rank = np.argsort(-weights, kind="stable")
    sub_rank = np.argsort(-quality, kind="stable")
    mapping = np.empty(len(weights), dtype=int)
    mapping[item_rank] = sub_rank[np.arange(len(weights)) % channel.n_subchannels]
    return mapping


class SemanticService:
    """Lado transmisor de los frameworks semánticos: extracción, ranking y mapeo."""

    def __init__(self):
        self._weights = {}

    def extract(self, pose, framework, graph=None):
        return extract_semantics(pose, framework, graph)

    def weights_for(self, graph):
        """Los pesos dependen solo de las longitudes en reposo: se calculan una vez por esqueleto."""
        key = graph.parents.tobytes() + graph.offsets.tobytes()
        if key not in self._weights:
            self._weights[key] = absr_weights(graph)
            top = int(np.argmax(self._weights[key]))
            logger.info(f"Pesos AbSR calculados: nodo más importante {graph.names[top]} ({self._weights[key][top]:.4f})")
        return self._weights[key]

    def mapping_for(self, framework, n_items, channel, graph=None):
        """EC-GSAR usa el mapeo por CSI; GSAR y E-GSAR reparto cíclico."""
        if framework == "ecgsar":
            if graph is None:
                raise ValueError("EC-GSAR necesita el grafo del esqueleto para el ranking AbSR")
            return channel_map(self.weights_for(graph), channel)
        return round_robin_mapping(n_items, channel.n_subchannels)


# Instancia global
semantic_service = SemanticService()
