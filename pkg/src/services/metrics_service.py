import math
import logging
from dataclasses import dataclass, asdict
import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation
from src.config import Config
from src.core.pointcloud import fps_indices
from src.core.skeleton import Pose, forward_kinematics
from src.core.rotations import wrap_degrees
from src.services.semantic_service import SemanticFrame

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("frame", "framework", "snr_db", "seed", "mpjpe", "adj_mpjpe", "weighted_err",
               "p2point", "psnr_y", "t_s", "t_w", "t_r")

# Coeficientes de luminancia BT.601
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class LatencyBreakdown:
    t_s: float
    t_w: float
    t_r: float

    @property
    def total(self):
        return self.t_s + self.t_w + self.t_r


@dataclass
class MetricsReport:
    """Métricas de un frame; los campos no aplicables quedan en NaN."""
    mpjpe: float = math.nan
    adjacent_mpjpe: float = math.nan
    weighted_error: float = math.nan
    p2point: float = math.nan
    psnr_y: float = math.nan
    latency: LatencyBreakdown = None

    def as_row(self, frame, framework, snr_db, seed):
        latency = self.latency or LatencyBreakdown(math.nan, math.nan, math.nan)
        return {
            "frame": frame, "framework": framework, "snr_db": snr_db, "seed": seed,
            "mpjpe": self.mpjpe, "adj_mpjpe": self.adjacent_mpjpe, "weighted_err": self.weighted_error,
            "p2point": self.p2point, "psnr_y": self.psnr_y,
            "t_s": latency.t_s, "t_w": latency.t_w, "t_r": latency.t_r,
        }

    def to_dict(self):
        data = asdict(self)
        data["latency_total"] = self.latency.total if self.latency else math.nan
        return data


def _positions(pose):
    return pose.positions if isinstance(pose, Pose) else np.asarray(pose, dtype=float).reshape(-1, 3)


def mpjpe(tx, rx):
    """Error medio por articulación (m)."""
    a, b = _positions(tx), _positions(rx)
    if len(a) != len(b):
        raise ValueError(f"MPJPE con distinto número de articulaciones: {len(a)} != {len(b)}")
    return float(np.mean(np.linalg.norm(a - b, axis=1)))


def adjacent_mpjpe(poses):
    """MPJPE entre frames recuperados consecutivos."""
    if len(poses) < 2:
        raise ValueError(f"insufficient frames: adjacent MPJPE necesita al menos 2, hay {len(poses)}")
    return np.array([mpjpe(poses[t - 1], poses[t]) for t in range(1, len(poses))])


def weighted_semantic_error(tx, rx, weights, graph=None, root_pos=None):
    """
    Suma ponderada por AbSR del error de posición por articulación.
    GSAR usa las posiciones transportadas; E-GSAR las reconstruye por cinemática directa.
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if isinstance(tx, SemanticFrame) or isinstance(rx, SemanticFrame):
        if not (isinstance(tx, SemanticFrame) and isinstance(rx, SemanticFrame)) or tx.variant != rx.variant:
            raise ValueError("Frames semánticos con layouts distintos")
        if tx.values.shape != rx.values.shape:
            raise ValueError(f"Frames con tamaños distintos: {tx.values.shape} != {rx.values.shape}")
        if tx.variant == "gsar":
            a, b = tx.positions, rx.positions
        else:
            if graph is None:
                raise ValueError("E-GSAR requires skeleton graph para el error ponderado")
            anchor = graph.offsets[graph.root] if root_pos is None else root_pos
            a = forward_kinematics(graph, anchor, wrap_degrees(tx.eulers)).positions
            b = forward_kinematics(graph, anchor, wrap_degrees(rx.eulers)).positions
    else:
        a, b = _positions(tx), _positions(rx)
        if len(a) != len(b):
            raise ValueError(f"Poses con distinto número de articulaciones: {len(a)} != {len(b)}")
    if len(weights) != len(a):
        raise ValueError(f"{len(weights)} pesos para {len(a)} articulaciones")
    return float(np.sum(np.linalg.norm(a - b, axis=1) * weights))


def nearest_neighbors(source, target, brute_force_limit=Config.BRUTE_FORCE_LIMIT, chunk=1024):
    """
    Vecino más cercano en `target` de cada punto de `source`.
    Fuerza bruta si ambas nubes caben en el límite; cKDTree por encima.
    Las distancias se recalculan desde los índices con la misma fórmula en ambos caminos.
    """
    source = np.asarray(source, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float).reshape(-1, 3)
    if len(source) == 0 or len(target) == 0:
        raise ValueError("empty cloud: no hay vecinos que buscar")

    if max(len(source), len(target)) <= brute_force_limit:
        indices = np.empty(len(source), dtype=int)
        for start in range(0, len(source), chunk):
            block = source[start:start + chunk]
            d2 = ((block[:, None, :] - target[None, :, :]) ** 2).sum(axis=2)
            indices[start:start + chunk] = np.argmin(d2, axis=1)
    else:
        _, indices = cKDTree(target).query(source, k=1)
        indices = np.asarray(indices, dtype=int)

    d2 = ((source - target[indices]) ** 2).sum(axis=1)
    return d2, indices


def p2point(tx, rx, brute_force_limit=Config.BRUTE_FORCE_LIMIT):
    """Máximo de los RMS dirigidos de distancia al vecino más cercano (m)."""
    if len(tx) == 0 or len(rx) == 0:
        raise ValueError("empty cloud: P2Point requiere nubes no vacías")
    d2_ab, _ = nearest_neighbors(tx.positions, rx.positions, brute_force_limit)
    d2_ba, _ = nearest_neighbors(rx.positions, tx.positions, brute_force_limit)
    return float(max(np.sqrt(d2_ab.mean()), np.sqrt(d2_ba.mean())))


def luminance(colors):
    return np.asarray(colors, dtype=float).reshape(-1, 3) @ LUMA


def psnr_y(tx, rx, cap=Config.PSNR_CAP_DB, brute_force_limit=Config.BRUTE_FORCE_LIMIT):
    """PSNR de luminancia sobre pares (punto transmitido, vecino recibido), en dB con tope."""
    if len(tx) == 0 or len(rx) == 0:
        raise ValueError("empty cloud: PSNR_y requiere nubes no vacías")
    _, indices = nearest_neighbors(tx.positions, rx.positions, brute_force_limit)
    mse = float(np.mean((luminance(tx.colors) - luminance(rx.colors)[indices]) ** 2))
    if mse < 255.0 ** 2 * 10.0 ** (-cap / 10.0):
        return float(cap)
    return float(min(10.0 * math.log10(255.0 ** 2 / mse), cap))


def latency(payload_bits, framework, n_subchannels=Config.N_SUBCHANNELS, symbol_rate=Config.SYMBOL_RATE,
            code_rate=1, bits_per_symbol=1, mode="measured", t_s=0.0, t_r=0.0):
    """
    T_w = bits / code_rate / (N_c * tasa de símbolos * bits por símbolo).
    mode='measured' usa t_s y t_r medidos; 'analytic' las constantes de Config.
    """
    rate = n_subchannels * symbol_rate * bits_per_symbol
    if rate <= 0:
        raise ValueError(f"Tasa de transmisión no positiva: {rate}")
    t_w = payload_bits / float(code_rate) / rate
    if mode == "analytic":
        t_s, t_r = Config.ANALYTIC_T_S[framework], Config.ANALYTIC_T_R[framework]
    elif mode != "measured":
        raise ValueError(f"latency_mode desconocido: {mode}")
    return LatencyBreakdown(t_s=float(t_s), t_w=float(t_w), t_r=float(t_r))


def _rigid_fit(template, observed):
    """Rotación y traslación que llevan los offsets de plantilla a los puntos observados."""
    t_center, o_center = template.mean(axis=0), observed.mean(axis=0)
    rotation, _ = Rotation.align_vectors(observed - o_center, template - t_center)
    matrix = rotation.as_matrix()
    return matrix, o_center - matrix @ t_center


def estimate_keypoints(rx_positions, point_nodes, point_offsets, graph, landmarks=Config.KEYPOINT_LANDMARKS):
    """
    Extractor de articulaciones del receptor para el baseline de nube de puntos.

    Solo usa la nube recibida y la plantilla del avatar (nodo y offset en reposo
    de cada punto). Cada nodo se ajusta como cuerpo rígido sobre unos pocos
    landmarks de su parche, elegidos por FPS sobre la plantilla y sin rechazo de
    atípicos; las articulaciones se encadenan desde la raíz con los offsets del
    esqueleto. Un nodo con menos de 3 puntos hereda la rotación del padre.
    """
    rx_positions = np.asarray(rx_positions, dtype=float).reshape(-1, 3)
    point_nodes = np.asarray(point_nodes, dtype=int)
    point_offsets = np.asarray(point_offsets, dtype=float).reshape(-1, 3)
    if landmarks < 3:
        raise ValueError(f"Se necesitan al menos 3 landmarks por nodo, hay {landmarks}")
    if not (len(rx_positions) == len(point_nodes) == len(point_offsets)):
        raise ValueError(f"Tamaños distintos: {len(rx_positions)} puntos, {len(point_nodes)} nodos, "
                         f"{len(point_offsets)} offsets")

    n = len(graph)
    fits = {}
    for i in range(n):
        members = np.flatnonzero(point_nodes == i)
        if len(members) < 3:
            continue
        picked = members[fps_indices(point_offsets[members], min(landmarks, len(members)))]
        fits[i] = _rigid_fit(point_offsets[picked], rx_positions[picked])

    offsets = graph.offsets
    positions = np.empty((n, 3))
    world = np.empty((n, 3, 3))
    for i in graph.topological_order():
        p = graph.nodes[i].parent
        if p is None:
            world[i], positions[i] = fits.get(i, (np.eye(3), offsets[i]))
        else:
            positions[i] = positions[p] + world[p] @ offsets[i]
            world[i] = fits[i][0] if i in fits else world[p]
    return Pose(positions=positions, rotations=Rotation.from_matrix(world).as_quat())


class MetricsService:
    """Evaluación de cada frame para todos los frameworks."""

    def __init__(self, brute_force_limit=Config.BRUTE_FORCE_LIMIT, psnr_cap=Config.PSNR_CAP_DB):
        self.brute_force_limit = brute_force_limit
        self.psnr_cap = psnr_cap

    def scene_quality(self, tx_scene, rx_scene):
        """(P2Point, PSNR_y) entre la escena del transmisor y la reconstruida."""
        return (p2point(tx_scene, rx_scene, self.brute_force_limit),
                psnr_y(tx_scene, rx_scene, self.psnr_cap, self.brute_force_limit))

    def evaluate(self, tx_pose, rx_pose, tx_scene, rx_scene, latency_breakdown,
                 weights=None, previous_rx_pose=None):
        report = MetricsReport(latency=latency_breakdown)
        report.mpjpe = mpjpe(tx_pose, rx_pose)
        # sin frame anterior no hay transición: NaN, que la agregación descarta
        if previous_rx_pose is not None:
            report.adjacent_mpjpe = mpjpe(previous_rx_pose, rx_pose)
        if weights is not None:
            report.weighted_error = weighted_semantic_error(tx_pose, rx_pose, weights)
        report.p2point, report.psnr_y = self.scene_quality(tx_scene, rx_scene)
        return report


# Instancia global
metrics_service = MetricsService()
