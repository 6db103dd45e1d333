import logging
import numpy as np
from scipy.spatial.transform import Rotation

logger = logging.getLogger(__name__)

# Cuaterniones en orden (x, y, z, w) en todo el proyecto.
IDENTITY_QUAT = np.array([0.0, 0.0, 0.0, 1.0])


def normalize_quaternions(quats):
    """
    Normaliza cuaterniones (N, 4). Los de norma nula o no finitos se
    sustituyen por la identidad. Devuelve (cuaterniones, número de sustituidos).
    """
    q = np.array(quats, dtype=float).reshape(-1, 4)
    norms = np.linalg.norm(q, axis=1)
    bad = ~np.isfinite(norms) | (norms < 1e-12)
    q[bad] = IDENTITY_QUAT
    norms[bad] = 1.0
    return q / norms[:, None], int(bad.sum())


def quat_to_euler(quats):
    """
    Cuaternión (x, y, z, w) -> ángulos de Euler (pitch, roll, yaw) en grados.
    Acepta un cuaternión (4,) o un lote (N, 4).
    """
    q = np.asarray(quats, dtype=float)
    x, y, z, w = q[..., 0], q[..., 1], q[..., 2], q[..., 3]

    pitch = np.arctan2(2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y))
    # Bloqueo de cardán: el argumento se recorta a [-1, 1]
    roll = np.arcsin(np.clip(2.0 * (w * y - x * z), -1.0, 1.0))
    yaw = np.arctan2(2.0 * (x * y + w * z), 1.0 - 2.0 * (y * y + z * z))

    return np.degrees(np.stack([pitch, roll, yaw], axis=-1))


def wrap_degrees(angles):
    """Envuelve ángulos a [-180, 180)."""
    a = np.nan_to_num(np.asarray(angles, dtype=float), nan=0.0, posinf=0.0, neginf=0.0)
    return np.mod(a + 180.0, 360.0) - 180.0


def euler_to_rotation(eulers):
    """
    Ángulos (pitch, roll, yaw) en grados -> matriz de rotación 3x3 (o lote N x 3 x 3).
    Composición intrínseca yaw * roll * pitch, inversa de quat_to_euler.
    """
    e = np.asarray(eulers, dtype=float)
    # ZYX intrínseco = Rz(yaw) @ Ry(roll) @ Rx(pitch)
    rot = Rotation.from_euler("ZYX", e[..., ::-1].reshape(-1, 3), degrees=True)
    matrices = rot.as_matrix()
    return matrices[0] if e.ndim == 1 else matrices


def euler_to_quat(eulers):
    """Ángulos (pitch, roll, yaw) en grados -> cuaterniones (x, y, z, w)."""
    e = np.asarray(eulers, dtype=float)
    quats = Rotation.from_euler("ZYX", e[..., ::-1].reshape(-1, 3), degrees=True).as_quat()
    return quats[0] if e.ndim == 1 else quats


def quat_to_matrix(quats):
    """Cuaterniones (N, 4) normalizados -> matrices (N, 3, 3)."""
    q = np.asarray(quats, dtype=float).reshape(-1, 4)
    return Rotation.from_quat(q).as_matrix()


def matrix_to_quat(matrices):
    """Matrices (N, 3, 3) -> cuaterniones (N, 4) con w >= 0."""
    q = Rotation.from_matrix(np.asarray(matrices, dtype=float).reshape(-1, 3, 3)).as_quat()
    q[q[:, 3] < 0] *= -1.0
    return q


def local_rotations(world_quats, parents):
    """
    Rotaciones locales a partir de las de mundo: conj(q_padre) * q_nodo.
    La raíz conserva su rotación de mundo.
    """
    world = Rotation.from_quat(np.asarray(world_quats, dtype=float))
    parents = np.asarray(parents)
    local = world.as_quat().copy()
    has_parent = parents >= 0
    if has_parent.any():
        parent_rot = world[parents[has_parent]]
        local[has_parent] = (parent_rot.inv() * world[np.flatnonzero(has_parent)]).as_quat()
    return local
