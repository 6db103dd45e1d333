import sys
import json
import logging
import argparse
from pathlib import Path
from src.config import Config, TRACE_KINDS, load_experiment_config

# Configuración básica de logs para ver todo en consola
logging.basicConfig(
    level=getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%H:%M:%S'
)

logger = logging.getLogger(__name__)


def cmd_simulate(args):
    from src.workflows.simulation_process import simulation_workflow
    config = load_experiment_config(args.config, seed=args.seed, frames=args.frames)
    result = simulation_workflow.run_experiment(config, args.out)
    print(json.dumps({"results": str(result.csv_path), "summary": str(result.summary_path),
                      "report": str(result.report_path) if result.report_path else None}, indent=2))


def cmd_metrics(args):
    from src.core.pointcloud import ply_read
    from src.services.metrics_service import metrics_service
    tx, rx = ply_read(args.tx), ply_read(args.rx)
    p2p, psnr = metrics_service.scene_quality(tx, rx)
    print(json.dumps({"p2point": p2p, "psnr_y": psnr}, indent=2))


def cmd_rank(args):
    from src.core.skeleton import load_skeleton
    from src.services.semantic_service import absr_weights
    graph = load_skeleton(args.skeleton)
    weights = absr_weights(graph, alpha=args.alpha)
    ranking = sorted(zip(graph.names, weights), key=lambda item: -item[1])
    print(json.dumps([{"node": name, "weight": float(w)} for name, w in ranking], indent=2))


def cmd_trace_gen(args):
    from src.core.asset_manager import asset_manager
    from src.core.skeleton import save_trace
    from src.utils.trace_tools import gen_trace
    graph = asset_manager.get_skeleton(args.skeleton)
    trace = gen_trace(args.kind, args.frames, args.seed, graph=graph)
    out = Path(args.out or Config.OUTPUT_DIR / f"trace_{args.kind}_{args.seed}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_trace(trace, out)
    print(str(out))


def cmd_trace_stats(args):
    from src.core.skeleton import load_trace, trace_stats
    stats = trace_stats(load_trace(args.trace), bins=args.bins)
    print(json.dumps({
        "range_min": stats.axis_min.tolist(),
        "range_max": stats.axis_max.tolist(),
        "movement_limit": list(Config.MOVEMENT_RANGE),
        "histograms": [{"axis": axis, "counts": counts.tolist(), "edges": edges.tolist()}
                       for axis, (counts, edges) in zip("xyz", stats.histograms)],
    }, indent=2))


def cmd_plot(args):
    from src.services.results_service import results_service
    from src.services.results_service import format_value
    table = results_service.plot(args.results, args.figure, args.out)
    if not args.out:
        print("snr_db,framework,mean,std")
        for entry in table:
            print(",".join(format_value(entry[k]) for k in ("snr_db", "framework", "mean", "std")))


def cmd_ber(args):
    from src.core.channel import monte_carlo_ber, theoretical_ber_rayleigh
    rows = []
    for snr in args.snr:
        empirical = monte_carlo_ber(snr, args.bits, args.seed, args.subchannels)
        theory = float(theoretical_ber_rayleigh(snr))
        rows.append({"snr_db": snr, "empirical": empirical, "theoretical": theory,
                     "relative_error": abs(empirical - theory) / theory})
        logger.info(f"SNR {snr} dB: BER empírica {empirical:.5f} vs teórica {theory:.5f}")
    print(json.dumps(rows, indent=2))


def build_parser():
    parser = argparse.ArgumentParser(prog="gsar-sim", description="Simulador de comunicación semántica para avatares AR")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Barrido completo frameworks x SNR x frames")
    p.add_argument("--config", help="Archivo TOML o JSON de experimento")
    p.add_argument("--out", help="Carpeta de salida")
    p.add_argument("--seed", type=int)
    p.add_argument("--frames", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="P2Point y PSNR_y entre dos PLY")
    p.add_argument("--tx", required=True)
    p.add_argument("--rx", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("rank", help="Pesos AbSR de un esqueleto")
    p.add_argument("--skeleton", required=True)
    p.add_argument("--alpha", type=float, default=Config.ABSR_ALPHA)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("trace", help="Trazas de animación")
    trace_sub = p.add_subparsers(dest="trace_command", required=True)
    g = trace_sub.add_parser("gen", help="Genera una traza procedural")
    g.add_argument("--kind", required=True, choices=TRACE_KINDS)
    g.add_argument("--frames", type=int, required=True)
    g.add_argument("--seed", type=int, default=Config.SEED)
    g.add_argument("--skeleton")
    g.add_argument("--out")
    g.set_defaults(func=cmd_trace_gen)
    s = trace_sub.add_parser("stats", help="Rangos de desplazamiento entre frames adyacentes")
    s.add_argument("--trace", required=True)
    s.add_argument("--bins", type=int, default=50)
    s.set_defaults(func=cmd_trace_stats)

    p = sub.add_parser("plot", help="Tabla lista para graficar a partir de results.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--figure", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("ber", help="BER Monte Carlo vs. fórmula cerrada en Rayleigh")
    p.add_argument("--snr", type=float, nargs="+", default=[0.0, 5.0, 10.0])
    p.add_argument("--bits", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=Config.SEED)
    p.add_argument("--subchannels", type=int, default=Config.N_SUBCHANNELS)
    p.set_defaults(func=cmd_ber)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
        return 0
    except KeyboardInterrupt:
        print("\nProceso detenido por el usuario.")
        return 130
    except Exception as e:
        logger.critical(f"Error fatal en la ejecución: {e}")
        print(f"Error fatal en la ejecución: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
