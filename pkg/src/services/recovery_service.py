import logging
from dataclasses import dataclass
import numpy as np
from src.config import Config
from src.core.rotations import normalize_quaternions, wrap_degrees
from src.core.skeleton import Pose, forward_kinematics
from src.core.pointcloud import skin_pose, upsample_interpolate
from src.services.semantic_service import SemanticFrame

logger = logging.getLogger(__name__)


@dataclass
class ReceivedFrame:
    """Frame semántico tras el canal, con los contadores del transporte."""
    frame: SemanticFrame
    bit_errors: int = 0
    clamped: int = 0
    invalid: int = 0
    sanitized: int = 0


def recover_pose_gsar(rx, bk):
    """Pose directa: posiciones y rotaciones recibidas se adjuntan al modelo sin restricciones."""
    frame = rx.frame
    if frame.variant != "gsar":
        raise ValueError(f"Se esperaba un frame GSAR, llegó {frame.variant}")
    if bk.joint_count is not None and frame.joint_count != bk.joint_count:
        raise ValueError(f"El frame trae {frame.joint_count} articulaciones, el avatar tiene {bk.joint_count}")

    rotations, substituted = normalize_quaternions(frame.rotations)
    rx.sanitized += substituted
    if substituted:
        logger.warning(f"{substituted} cuaterniones nulos o no finitos sustituidos por la identidad")
    positions = np.nan_to_num(frame.positions, nan=0.0, posinf=0.0, neginf=0.0)
    return Pose(positions=positions, rotations=rotations)


def recover_pose_egsar(rx, bk):
    """Pose por cinemática directa desde el ancla del avatar; siempre dentro del alcance del esqueleto."""
    if bk is None or not bk.has_graph:
        raise ValueError("E-GSAR requires skeleton graph en el conocimiento base")
    frame = rx.frame
    if frame.variant != "egsar":
        raise ValueError(f"Se esperaba un frame E-GSAR, llegó {frame.variant}")
    if frame.joint_count != len(bk.graph):
        raise ValueError(f"El frame trae {frame.joint_count} articulaciones, el esqueleto tiene {len(bk.graph)}")
    return forward_kinematics(bk.graph, bk.avatar_position, wrap_degrees(frame.eulers))


def recover_scene(framework, received, bk=None, upsample_points=Config.UPSAMPLE_POINTS):
    """
    Escena del receptor. Semánticos: avatar posado (Pose recibida) más el modelo
    estacionario del conocimiento base. Nube de puntos: interpolación de la nube recibida.
    """
    if framework == "pointcloud":
        return upsample_interpolate(received, upsample_points)
    if bk is None:
        raise ValueError(f"{framework} necesita conocimiento base para reconstruir la escena")
    return skin_pose(bk.avatar_binding, received).merge(bk.stationary)


class RecoveryService:
    """Algoritmo de recuperación de pose del receptor."""

    def recover_pose(self, rx, bk):
        """GSAR adjunta la pose directamente; E-GSAR y EC-GSAR pasan por el grafo del conocimiento base."""
        if rx.frame.variant == "gsar":
            return recover_pose_gsar(rx, bk)
        return recover_pose_egsar(rx, bk)

    def recover_scene(self, framework, received, bk=None, upsample_points=Config.UPSAMPLE_POINTS):
        return recover_scene(framework, received, bk, upsample_points)


# Instancia global
recovery_service = RecoveryService()
