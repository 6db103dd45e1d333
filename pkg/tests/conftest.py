import numpy as np
import pytest
from src.config import ExperimentConfig
from src.core.skeleton import SkeletonGraph, SkeletonNode, AnimationTrace, save_trace
from src.utils.avatar_tools import default_skeleton, rest_pose, build_avatar_binding, build_stationary_cloud


@pytest.fixture(scope="session")
def skeleton():
    return default_skeleton()


@pytest.fixture(scope="session")
def rest(skeleton):
    return rest_pose(skeleton)


@pytest.fixture(scope="session")
def small_binding(skeleton):
    return build_avatar_binding(skeleton, 512, seed=7)


@pytest.fixture(scope="session")
def small_stationary():
    return build_stationary_cloud(256, seed=7)


def make_chain(lengths):
    """Cadena raíz -> hijos sobre el eje y."""
    nodes = [SkeletonNode(id=0, parent=None, rest_offset=np.zeros(3), name="root")]
    for i, length in enumerate(lengths, start=1):
        nodes.append(SkeletonNode(id=i, parent=i - 1, rest_offset=np.array([0.0, length, 0.0]), name=f"j{i}"))
    return SkeletonGraph(nodes=nodes)


def make_star(leaves, length=1.0):
    nodes = [SkeletonNode(id=0, parent=None, rest_offset=np.zeros(3), name="center")]
    directions = np.eye(3)
    for i in range(1, leaves + 1):
        offset = directions[(i - 1) % 3] * length * (1 if i <= 3 else -1)
        nodes.append(SkeletonNode(id=i, parent=0, rest_offset=offset, name=f"leaf{i}"))
    return SkeletonGraph(nodes=nodes)


@pytest.fixture
def chain():
    return make_chain


@pytest.fixture
def star():
    return make_star


@pytest.fixture
def rest_trace_path(tmp_path, rest):
    """Traza estática en reposo (3 frames) guardada como JSON."""
    path = tmp_path / "rest_trace.json"
    save_trace(AnimationTrace(frames=[rest] * 3, fps=60.0), path)
    return path


@pytest.fixture
def small_config():
    """Configuración reducida para pruebas de extremo a extremo."""
    def build(**overrides):
        params = dict(frames=3, snr_db=[float("inf")], seed=11, avatar_points=512, stationary_points=256,
                      downsample_points=256, upsample_points=512, latency_mode="analytic")
        params.update(overrides)
        return ExperimentConfig(**params).validate()
    return build
