import logging
import numpy as np
from src.config import Config, TRACE_KINDS
from src.core.skeleton import AnimationTrace, SkeletonError, forward_kinematics

logger = logging.getLogger(__name__)

# Tipo de baile -> (amplitud máx. en grados, rango de frecuencias en Hz, amplitud de la raíz)
MOVEMENTS = {
    "upper_body": (25.0, (0.4, 1.0), 0.0),
    "slight_shaking": (2.0, (0.6, 1.2), 2.0),
    "full_body": (20.0, (0.3, 0.8), 8.0),
}

UPPER_BODY_JOINTS = ("Spine2", "Neck", "Head", "Shoulder", "Arm", "Hand")


def animated_joints(graph, kind):
    """Máscara de articulaciones que se mueven en cada tipo de traza (la raíz aparte)."""
    names = graph.names
    root = graph.root
    if kind == "upper_body":
        mask = np.array([any(tag in name for tag in UPPER_BODY_JOINTS) for name in names])
        if not mask.any():
            # Esqueleto sin nombres reconocibles: se anima la mitad superior del orden topológico
            order = graph.topological_order()
            mask = np.zeros(len(graph), dtype=bool)
            mask[order[len(order) // 2:]] = True
    else:
        mask = np.ones(len(graph), dtype=bool)
    mask[root] = False
    return mask


def gen_trace(kind, frames, seed=Config.SEED, graph=None, fps=Config.FPS):
    """
    Traza procedural con la raíz fija en su ancla: cada articulación oscila
    sinusoidalmente en sus tres ángulos de Euler locales.
    """
    if kind not in MOVEMENTS:
        raise ValueError(f"Tipo de traza desconocido: {kind}. Válidos: {', '.join(TRACE_KINDS)}")
    if frames < 2:
        raise SkeletonError(f"insufficient frames: se requieren al menos 2, se pidieron {frames}")
    if graph is None:
        from src.utils.avatar_tools import default_skeleton
        graph = default_skeleton()

    amplitude, (f_lo, f_hi), root_amplitude = MOVEMENTS[kind]
    n = len(graph)
    rng = np.random.default_rng([seed, TRACE_KINDS.index(kind)])
    amplitudes = amplitude * rng.uniform(0.5, 1.0, (n, 3))
    amplitudes[~animated_joints(graph, kind)] = 0.0
    amplitudes[graph.root] = root_amplitude * rng.uniform(0.5, 1.0, 3)
    frequencies = rng.uniform(f_lo, f_hi, (n, 1))
    phases = rng.uniform(0.0, 2.0 * np.pi, (n, 3))

    root_pos = graph.offsets[graph.root]
    poses = []
    for t in range(frames):
        eulers = amplitudes * np.sin(2.0 * np.pi * frequencies * (t / fps) + phases)
        poses.append(forward_kinematics(graph, root_pos, eulers))

    logger.info(f"Traza '{kind}' generada: {frames} frames, {n} articulaciones, semilla {seed}")
    return AnimationTrace(frames=poses, fps=float(fps))
