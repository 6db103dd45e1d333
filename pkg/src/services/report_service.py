import logging
import math
from pathlib import Path
from fpdf import FPDF
from src.config import Config

logger = logging.getLogger(__name__)


class ReportService:
    """
    Genera el reporte PDF de una corrida: configuración, medias por celda y
    mejora relativa de los frameworks semánticos frente a la nube de puntos.
    """

    METRICS = (("mpjpe", "MPJPE (m)"), ("adj_mpjpe", "Adj. MPJPE (m)"), ("p2point", "P2Point (m)"),
               ("psnr_y", "PSNR_y (dB)"), ("latency_total", "Latencia (s)"))

    def _sanitize(self, text):
        # Saneamiento básico para FPDF (Latin-1)
        return str(text).encode("latin-1", "replace").decode("latin-1")

    def _fmt(self, value):
        if isinstance(value, str):
            return value
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return "-"
        return f"{value:.4g}"

    def build_report(self, summary, output_path):
        pdf = FPDF()
        pdf.add_page()
        pdf.set_auto_page_break(auto=True, margin=15)

        # 1. Encabezado
        pdf.set_font("Arial", "B", 14)
        pdf.cell(0, 10, self._sanitize(f"Simulación de comunicación semántica AR ({Config.APP_VERSION})"), ln=1)

        # 2. Configuración resuelta
        pdf.set_font("Arial", size=9)
        config_lines = [f"{k}: {v}" for k, v in sorted(summary.get("config", {}).items())]
        pdf.multi_cell(0, 5, self._sanitize("\n".join(config_lines)))
        pdf.ln(3)

        # 3. Una tabla por métrica (filas = SNR, columnas = framework)
        cells = summary.get("cells", {})
        frameworks = list(cells)
        snrs = sorted({snr for fw in frameworks for snr in cells[fw]}, key=float)
        col_width = (pdf.w - 2 * pdf.l_margin) / (len(frameworks) + 1)
        for key, title in self.METRICS:
            pdf.set_font("Arial", "B", 11)
            pdf.cell(0, 8, self._sanitize(title), ln=1)
            pdf.set_font("Arial", "B", 9)
            pdf.cell(col_width, 6, "SNR (dB)", border=1)
            for fw in frameworks:
                pdf.cell(col_width, 6, fw, border=1)
            pdf.ln()
            pdf.set_font("Arial", size=9)
            for snr in snrs:
                pdf.cell(col_width, 6, snr, border=1)
                for fw in frameworks:
                    stat = cells[fw].get(snr, {}).get(key, {})
                    pdf.cell(col_width, 6, self._fmt(stat.get("mean")), border=1)
                pdf.ln()
            pdf.ln(2)

        # 4. Comparación con el baseline
        comparison = summary.get("relative_to_pointcloud", {})
        if comparison:
            pdf.set_font("Arial", "B", 11)
            pdf.cell(0, 8, "Mejora relativa frente a la nube de puntos", ln=1)
            pdf.set_font("Arial", size=9)
            lines = []
            for fw, metrics in comparison.items():
                for metric, by_snr in metrics.items():
                    values = ", ".join(f"{snr} dB: {gain * 100:.1f}%" for snr, gain in by_snr.items()
                                       if isinstance(gain, float))
                    lines.append(f"{fw} / {metric}: {values}")
            pdf.multi_cell(0, 5, self._sanitize("\n".join(lines)))

        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        pdf.output(str(output_path))
        logger.info(f"Reporte PDF generado: {output_path}")
        return output_path


# Instancia global
report_service = ReportService()
