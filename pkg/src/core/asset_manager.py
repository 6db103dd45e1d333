import logging
from pathlib import Path
from src.config import Config
from src.core.skeleton import load_skeleton, load_trace, validate_graph, SkeletonError

logger = logging.getLogger(__name__)


def _graph_key(graph):
    return graph.parents.tobytes() + graph.offsets.tobytes()


class AssetManager:
    """
    Singleton para cargar y reutilizar los recursos pesados de la simulación
    (esqueleto, trazas, binding del avatar y modelo estacionario).
    """
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(AssetManager, cls).__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        self._skeletons = {}
        self._traces = {}
        self._bindings = {}
        self._stationary = {}
        self._initialized = True

    def get_skeleton(self, path=None):
        """Esqueleto desde `path`, el JSON incluido en assets/ o el esqueleto por defecto."""
        key = str(path) if path else "default"
        if key not in self._skeletons:
            try:
                if path:
                    graph = load_skeleton(path)
                elif Path(Config.SKELETON_FILE).exists():
                    graph = load_skeleton(Config.SKELETON_FILE)
                else:
                    from src.utils.avatar_tools import default_skeleton
                    logger.info("No hay esqueleto en assets/, usando el esqueleto procedural de 25 nodos")
                    graph = default_skeleton()
                violations = validate_graph(graph, Config.AVATAR_JOINTS if not path else None)
                if violations:
                    raise SkeletonError(f"Esqueleto inválido: {'; '.join(violations)}")
                self._skeletons[key] = graph
            except Exception as e:
                logger.error(f"Error cargando esqueleto ({key}): {e}")
                raise
        return self._skeletons[key]

    def get_trace(self, path=None, kind="full_body", frames=200, seed=Config.SEED, graph=None):
        """Traza desde JSON si hay `path`; si no, traza procedural cacheada por (tipo, frames, semilla)."""
        key = str(path) if path else (kind, frames, seed, _graph_key(graph) if graph is not None else None)
        if key not in self._traces:
            try:
                if path:
                    trace = load_trace(path)
                else:
                    from src.utils.trace_tools import gen_trace
                    trace = gen_trace(kind, frames, seed, graph=graph if graph is not None else self.get_skeleton())
                self._traces[key] = trace
            except Exception as e:
                logger.error(f"Error cargando traza ({key}): {e}")
                raise
        return self._traces[key]

    def get_binding(self, graph, n_points, seed=Config.SEED):
        key = (_graph_key(graph), n_points, seed)
        if key not in self._bindings:
            from src.utils.avatar_tools import build_avatar_binding
            self._bindings[key] = build_avatar_binding(graph, n_points, seed)
        return self._bindings[key]

    def get_stationary(self, n_points, seed=Config.SEED):
        key = (n_points, seed)
        if key not in self._stationary:
            from src.utils.avatar_tools import build_stationary_cloud
            self._stationary[key] = build_stationary_cloud(n_points, seed)
        return self._stationary[key]

    def clear(self):
        """Libera los recursos cacheados (útil entre pruebas)."""
        self._skeletons.clear()
        self._traces.clear()
        self._bindings.clear()
        self._stationary.clear()


# Instancia global
asset_manager = AssetManager()
