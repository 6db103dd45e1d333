import time
import logging
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from src.config import Config, FRAMEWORKS
from src.core.asset_manager import asset_manager
from src.core.channel import (QuantizationScheme, sample_channel, transmit, round_robin_mapping,
                              quantize_serialize, deserialize_dequantize)
from src.core.coding import parse_coder, coder_encode, coder_decode
from src.core.pointcloud import PointCloud, skin_pose, fps_indices
from src.core.skeleton import SkeletonError
from src.services.semantic_service import semantic_service, SemanticFrame, VARIANT_BY_FRAMEWORK
from src.services.knowledge_service import knowledge_service
from src.services.recovery_service import recovery_service, ReceivedFrame
from src.services.metrics_service import metrics_service, MetricsReport, latency, estimate_keypoints
from src.services.results_service import results_service
from src.services.report_service import report_service

logger = logging.getLogger(__name__)

CLOUD_FIELDS = ("position",) * 3 + ("color",) * 3


def frame_seeds(master_seed, frame_idx):
    """Semillas (canal, ruido) de un frame; compartidas por todos los SNR y frameworks."""
    channel_seed, noise_seed = np.random.SeedSequence([master_seed, frame_idx]).generate_state(2)
    return int(channel_seed), int(noise_seed)


@dataclass
class SimulationContext:
    """Recursos compartidos por todos los frames de un experimento."""
    config: object
    graph: object
    binding: object
    stationary: object
    knowledge: dict
    weights: np.ndarray
    scheme: QuantizationScheme
    coder: object


@dataclass
class TransmitterFrame:
    """Lo que el transmisor conoce de un frame (se reutiliza en todo el barrido de SNR)."""
    index: int
    pose: object
    scene: PointCloud
    sent_indices: np.ndarray = None
    downsample_time: float = 0.0


@dataclass
class FrameOutcome:
    report: MetricsReport
    rx_pose: object
    rx_scene: PointCloud
    bit_errors: int = 0


@dataclass
class ExperimentResult:
    rows: list
    csv_path: Path
    summary_path: Path
    summary: dict
    report_path: Path = None


class SimulationProcess:

    def prepare(self, config):
        """Carga esqueleto, traza y modelos, y arma el contexto del experimento."""
        graph = asset_manager.get_skeleton(config.skeleton_path)
        trace = asset_manager.get_trace(config.trace_path, config.trace_kind, config.frames, config.seed, graph)
        if trace.joint_count != len(graph):
            raise SkeletonError(f"La traza tiene {trace.joint_count} articulaciones y el esqueleto {len(graph)}")

        binding = asset_manager.get_binding(graph, config.avatar_points, config.seed)
        stationary = asset_manager.get_stationary(config.stationary_points, config.seed)
        context = SimulationContext(
            config=config,
            graph=graph,
            binding=binding,
            stationary=stationary,
            knowledge=knowledge_service.prepare(config.frameworks, graph, binding, stationary),
            weights=semantic_service.weights_for(graph),
            scheme=QuantizationScheme(bits_per_scalar=config.bits_per_scalar, layout=config.layout),
            coder=parse_coder(config.coder),
        )
        return context, trace

    def transmitter_frame(self, context, index, pose):
        scene = skin_pose(context.binding, pose).merge(context.stationary)
        frame = TransmitterFrame(index=index, pose=pose, scene=scene)
        if "pointcloud" in context.config.frameworks:
            start = time.perf_counter()
            frame.sent_indices = fps_indices(scene.positions, context.config.downsample_points)
            frame.downsample_time = time.perf_counter() - start
        return frame

    def run_frame(self, framework, tx, context, channel, noise_seed, previous_rx_pose=None):
        """Un frame de un framework por una realización de canal."""
        if framework == "pointcloud":
            return self._run_pointcloud(tx, context, channel, noise_seed, previous_rx_pose)
        return self._run_semantic(framework, tx, context, channel, noise_seed, previous_rx_pose)

    def _send(self, stream, context, channel, mapping, noise_seed):
        coded = coder_encode(stream, context.coder)
        result = transmit(coded, channel, mapping, seed=noise_seed)
        return coder_decode(result.received, context.coder), result.bit_errors

    def _latency(self, framework, bits, context, t_s, t_r):
        config = context.config
        return latency(bits, framework, config.n_subchannels, config.symbol_rate_per_subchannel,
                       context.coder.code_rate, mode=config.latency_mode, t_s=t_s, t_r=t_r)

    def _run_semantic(self, framework, tx, context, channel, noise_seed, previous_rx_pose):
        bk = context.knowledge[framework]

        # A. Extracción, mapeo y serialización
        start = time.perf_counter()
        frame = semantic_service.extract(tx.pose, framework, context.graph)
        mapping = semantic_service.mapping_for(framework, frame.joint_count, channel, context.graph)
        stream, clamped = quantize_serialize(frame.values, frame.fields, context.scheme)
        t_s = time.perf_counter() - start

        # B. Canal
        received, bit_errors = self._send(stream, context, channel, mapping, noise_seed)

        # C. Recuperación de pose y escena
        start = time.perf_counter()
        values, invalid = deserialize_dequantize(received, frame.fields, context.scheme)
        rx = ReceivedFrame(SemanticFrame(VARIANT_BY_FRAMEWORK[framework], values),
                           bit_errors=bit_errors, clamped=clamped, invalid=invalid)
        rx_pose = recovery_service.recover_pose(rx, bk)
        rx_scene = recovery_service.recover_scene(framework, rx_pose, bk)
        t_r = time.perf_counter() - start

        report = metrics_service.evaluate(tx.pose, rx_pose, tx.scene, rx_scene,
                                          self._latency(framework, len(stream), context, t_s, t_r),
                                          weights=context.weights, previous_rx_pose=previous_rx_pose)
        return FrameOutcome(report, rx_pose, rx_scene, bit_errors)

    def _run_pointcloud(self, tx, context, channel, noise_seed, previous_rx_pose):
        config = context.config

        # A. Submuestreo (hecho una vez por frame) y serialización
        start = time.perf_counter()
        sent = tx.scene.subset(tx.sent_indices)
        scalars = np.hstack([sent.positions, sent.colors.astype(float)])
        stream, _ = quantize_serialize(scalars, CLOUD_FIELDS, context.scheme)
        t_s = tx.downsample_time + time.perf_counter() - start

        # B. Canal
        mapping = round_robin_mapping(len(sent), channel.n_subchannels)
        received, bit_errors = self._send(stream, context, channel, mapping, noise_seed)

        # C. Reconstrucción por interpolación
        start = time.perf_counter()
        values, _ = deserialize_dequantize(received, CLOUD_FIELDS, context.scheme)
        rx_cloud = PointCloud(values[:, :3], values[:, 3:])
        rx_scene = recovery_service.recover_scene("pointcloud", rx_cloud, upsample_points=config.upsample_points)
        t_r = time.perf_counter() - start

        # D. Articulaciones extraídas en el receptor: los primeros puntos de la escena
        # recuperada son los recibidos, en orden de envío
        avatar = tx.sent_indices < len(context.binding)
        labels = tx.sent_indices[avatar]
        rx_pose = estimate_keypoints(rx_scene.positions[:len(rx_cloud)][avatar],
                                     context.binding.nodes[labels], context.binding.offsets[labels],
                                     context.graph)

        report = metrics_service.evaluate(tx.pose, rx_pose, tx.scene, rx_scene,
                                          self._latency("pointcloud", len(stream), context, t_s, t_r),
                                          weights=context.weights, previous_rx_pose=previous_rx_pose)
        return FrameOutcome(report, rx_pose, rx_scene, bit_errors)

    def run_experiment(self, config, out_dir=None):
        """Barrido completo frameworks x SNR x frames con canales pareados por frame."""
        logger.info(">>> INICIANDO SIMULACIÓN GSAR <<<")
        out_dir = Path(out_dir or Config.OUTPUT_DIR)

        # 1. Recursos y conocimiento base
        context, trace = self.prepare(config)
        n_frames = min(config.frames, len(trace))
        if n_frames < config.frames:
            logger.warning(f"La traza solo tiene {len(trace)} frames; se simulan {n_frames}")

        # 2. Bucle principal
        rows = []
        previous = {}
        for t in range(n_frames):
            tx = self.transmitter_frame(context, t, trace.frames[t])
            channel_seed, noise_seed = frame_seeds(config.seed, t)
            for snr in config.snr_db:
                channel = sample_channel(config.n_subchannels, snr, channel_seed)
                for framework in config.frameworks:
                    rows.append(self.process_single_frame(framework, tx, context, channel, noise_seed,
                                                          snr, previous))
            if (t + 1) % 50 == 0 or t + 1 == n_frames:
                logger.info(f"Frames procesados: {t + 1}/{n_frames}")

        order = {fw: i for i, fw in enumerate(FRAMEWORKS)}
        snr_order = {snr: i for i, snr in enumerate(config.snr_db)}
        rows.sort(key=lambda r: (snr_order[r["snr_db"]], order[r["framework"]], r["frame"]))

        # 3. Persistencia
        csv_path, summary_path, summary = results_service.write(rows, config, out_dir)
        report_path = None
        if config.report:
            try:
                report_path = report_service.build_report(summary, out_dir / "report.pdf")
            except Exception as e:
                logger.error(f"No se pudo generar el reporte PDF: {e}")

        logger.info(">>> SIMULACIÓN FINALIZADA <<<")
        return ExperimentResult(rows, csv_path, summary_path, summary, report_path)

    def process_single_frame(self, framework, tx, context, channel, noise_seed, snr, previous):
        """Ejecuta un frame y lo convierte en fila; si falla, la fila queda en NaN y se sigue."""
        key = (framework, snr)
        prev_pose = previous.get(key)
        try:
            # sin pose anterior (primer frame o frame anterior fallido) el MPJPE adyacente queda en NaN
            outcome = self.run_frame(framework, tx, context, channel, noise_seed, prev_pose)
            previous[key] = outcome.rx_pose
            return outcome.report.as_row(tx.index, framework, snr, context.config.seed)
        except Exception as e:
            logger.error(f"Error en frame {tx.index} ({framework}, {snr} dB): {e}")
            previous[key] = None
            return MetricsReport().as_row(tx.index, framework, snr, context.config.seed)


# Instancia global
simulation_workflow = SimulationProcess()
