import os
import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path
from dotenv import load_dotenv

logger = logging.getLogger(__name__)


class Config:
    """
    Configuración centralizada del simulador GSAR.
    """
    APP_VERSION = "v1.0.0"

    # 1. Definición de Rutas Base
    # src/config.py -> src/ -> gsar_sim/
    BASE_DIR = Path(__file__).resolve().parent.parent
    ASSETS_DIR = BASE_DIR / "assets"
    SKELETON_FILE = ASSETS_DIR / "avatar_skeleton.json"

    # 2. Carga de variables de entorno
    load_dotenv(BASE_DIR / ".env")

    OUTPUT_DIR = Path(os.getenv("GSAR_OUTPUT_DIR", BASE_DIR / "output"))
    LOG_LEVEL = os.getenv("GSAR_LOG_LEVEL", "INFO")
    SEED = int(os.getenv("GSAR_SEED", "2024"))

    # 3. Avatar y trazas (Tabla de experimento: 25 esqueletos, 60 Hz)
    AVATAR_JOINTS = int(os.getenv("GSAR_AVATAR_JOINTS", "25"))
    FPS = int(os.getenv("GSAR_FPS", "60"))
    AVATAR_INITIAL_POSITION = (0.0, 1.0, 0.0)
    STATIONARY_INITIAL_POSITION = (0.9, 0.0, 0.0)
    # Rango de movimiento entre frames adyacentes (x, y, z) en metros
    MOVEMENT_RANGE = (0.52, 0.76, 0.74)

    # 4. Nubes de puntos
    AVATAR_POINTS = int(os.getenv("GSAR_AVATAR_POINTS", "6144"))
    STATIONARY_POINTS = int(os.getenv("GSAR_STATIONARY_POINTS", "2048"))
    DOWNSAMPLE_POINTS = int(os.getenv("GSAR_DOWNSAMPLE_POINTS", "2048"))
    UPSAMPLE_POINTS = int(os.getenv("GSAR_UPSAMPLE_POINTS", "8192"))

    # 5. Canal inalámbrico
    N_SUBCHANNELS = int(os.getenv("GSAR_N_SUBCHANNELS", "64"))
    BITS_PER_SCALAR = int(os.getenv("GSAR_BITS_PER_SCALAR", "16"))
    COLOR_BITS = 8
    SYMBOL_RATE = float(os.getenv("GSAR_SYMBOL_RATE", "250000"))
    TRANSMIT_POWER = 1.0
    DEFAULT_SNR_DB = [0.5, 1.0, 3.0, 5.0, 8.0, 10.0, 13.0]

    # 6. AbSR (factor de descuento 0.7)
    ABSR_ALPHA = 0.7
    ABSR_EPSILON = 1e-9
    ABSR_MAX_ITER = 10000

    # 7. Métricas y latencia
    PSNR_CAP_DB = 100.0
    BRUTE_FORCE_LIMIT = 4096
    # Landmarks por nodo del extractor de articulaciones del baseline
    KEYPOINT_LANDMARKS = 4
    # Latencia analítica (segundos) por etapa: extracción y recuperación
    ANALYTIC_T_S = {"pointcloud": 2.0e-4, "gsar": 1.0e-4, "egsar": 1.0e-4, "ecgsar": 1.2e-4}
    ANALYTIC_T_R = {"pointcloud": 5.0e-4, "gsar": 2.0e-4, "egsar": 2.0e-4, "ecgsar": 2.0e-4}

    @classmethod
    def validate(cls):
        """Asegura que los parámetros críticos sean coherentes antes de arrancar."""
        problems = []
        if not 4 <= cls.BITS_PER_SCALAR <= 32: problems.append("GSAR_BITS_PER_SCALAR fuera de [4, 32]")
        if cls.N_SUBCHANNELS < 1: problems.append("GSAR_N_SUBCHANNELS debe ser >= 1")
        if cls.SYMBOL_RATE <= 0: problems.append("GSAR_SYMBOL_RATE debe ser > 0")

        if problems:
            raise ValueError(f"Configuración inválida en el entorno: {', '.join(problems)}")

        if not cls.OUTPUT_DIR.exists():
            # Intentar crearla si no existe, o avisar
            try:
                os.makedirs(cls.OUTPUT_DIR, exist_ok=True)
            except Exception:
                pass


FRAMEWORKS = ("pointcloud", "gsar", "egsar", "ecgsar")
TRACE_KINDS = ("upper_body", "slight_shaking", "full_body")


@dataclass
class ExperimentConfig:
    """Parámetros de un barrido completo (frameworks x SNR x frames)."""
    frameworks: list = field(default_factory=lambda: list(FRAMEWORKS))
    snr_db: list = field(default_factory=lambda: list(Config.DEFAULT_SNR_DB))
    frames: int = 200
    seed: int = Config.SEED
    trace_path: str = None
    trace_kind: str = "full_body"
    skeleton_path: str = None
    avatar_points: int = Config.AVATAR_POINTS
    stationary_points: int = Config.STATIONARY_POINTS
    downsample_points: int = Config.DOWNSAMPLE_POINTS
    upsample_points: int = Config.UPSAMPLE_POINTS
    n_subchannels: int = Config.N_SUBCHANNELS
    coder: str = "identity"
    bits_per_scalar: int = Config.BITS_PER_SCALAR
    layout: str = "fixed"
    symbol_rate_per_subchannel: float = Config.SYMBOL_RATE
    latency_mode: str = "analytic"
    report: bool = False

    def validate(self):
        """Reúne todos los problemas de la configuración y falla una sola vez."""
        problems = []
        if not self.frameworks: problems.append("frameworks vacío")
        unknown = [f for f in self.frameworks if f not in FRAMEWORKS]
        if unknown: problems.append(f"frameworks desconocidos: {unknown}")
        if not self.snr_db: problems.append("snr_db vacío")
        if self.frames < 1: problems.append("frames debe ser >= 1")
        if not self.trace_path and self.trace_kind not in TRACE_KINDS:
            problems.append(f"trace_kind desconocido: {self.trace_kind}")
        if not 4 <= self.bits_per_scalar <= 32: problems.append("bits_per_scalar fuera de [4, 32]")
        if self.layout not in ("fixed", "float32"): problems.append(f"layout desconocido: {self.layout}")
        if self.n_subchannels < 1: problems.append("n_subchannels debe ser >= 1")
        if self.symbol_rate_per_subchannel <= 0: problems.append("symbol_rate_per_subchannel debe ser > 0")
        if self.latency_mode not in ("analytic", "measured"): problems.append(f"latency_mode desconocido: {self.latency_mode}")
        if self.downsample_points < 1: problems.append("downsample_points debe ser >= 1")
        if self.downsample_points > self.avatar_points + self.stationary_points:
            problems.append("downsample_points supera el tamaño de la escena")
        if self.upsample_points < self.downsample_points: problems.append("upsample_points < downsample_points")
        if not (self.coder == "identity" or self.coder.startswith("repetition:")):
            problems.append(f"coder desconocido: {self.coder}")

        if problems:
            raise ValueError(f"Configuración de experimento inválida: {'; '.join(problems)}")
        return self

    def to_dict(self):
        data = asdict(self)
        # JSON no admite infinito; se serializa como texto
        data["snr_db"] = [s if math.isfinite(s) else "inf" for s in self.snr_db]
        return data


def load_experiment_config(path=None, **overrides):
    """
    Carga la configuración de experimento desde TOML o JSON.
    Las tablas de TOML se aplanan: [channel] n_subchannels -> n_subchannels.
    """
    data = {}
    if path:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"No se encontró el archivo de configuración: {path}")
        logger.info(f"Cargando configuración desde: {path}")
        with open(path, "rb") as f:
            if path.suffix.lower() == ".toml":
                raw = tomllib.load(f)
            else:
                raw = json.loads(f.read().decode("utf-8"))
        for key, value in raw.items():
            if isinstance(value, dict):
                data.update(value)
            else:
                data[key] = value

    data.update({k: v for k, v in overrides.items() if v is not None})
    known = set(ExperimentConfig.__dataclass_fields__)
    ignored = sorted(set(data) - known)
    if ignored:
        logger.warning(f"Claves de configuración ignoradas: {ignored}")
    clean = {k: v for k, v in data.items() if k in known}
    if "snr_db" in clean:
        clean["snr_db"] = [float(s) for s in clean["snr_db"]]
    return ExperimentConfig(**clean).validate()


# Validar al importar
Config.validate()
