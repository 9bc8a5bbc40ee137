"""Exporta o layout hexagonal e os ganhos de acoplamento G_cc/G_cd."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


def _ensure_project_root_on_path() -> None:
    """Make the repository root importable when running as a script."""

    repo_root = Path(__file__).resolve().parents[1]
    if str(repo_root) not in sys.path:
        sys.path.insert(0, str(repo_root))


_ensure_project_root_on_path()

from eemimo.config import configure_logging, load_config  # noqa: E402  (import after path fix)
from eemimo.network.geometry import build_layout, compute_coupling  # noqa: E402
from eemimo.output.files import save_coupling, save_layout  # noqa: E402


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--output-dir",
        type=Path,
        default=Path("data/layout"),
        help="Diretório onde layout.geojson e coupling.json serão salvos.",
    )
    parser.add_argument("--config", type=Path, default=None, help="Arquivo JSON de parâmetros.")
    parser.add_argument("--radius", type=float, default=None, help="Raio da célula em metros.")
    parser.add_argument("--grid-size", type=int, default=None, help="Pontos de teste por célula.")
    return parser


def main(argv: list[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)

    network = load_config(args.config).network
    layout = build_layout(
        network.num_cells,
        args.radius if args.radius is not None else network.cell_radius,
        network.min_distance,
        args.grid_size if args.grid_size is not None else network.grid_size,
    )
    gains = compute_coupling(layout, network.pathloss_coeff, network.pathloss_exp)

    save_layout(layout, args.output_dir / "layout.geojson", gains)
    save_coupling(layout, gains, args.output_dir / "coupling.json")
    print(f"Layout e ganhos salvos em {args.output_dir}")
    return 0


if __name__ == "__main__":  # pragma: no cover - CLI execution helper
    raise SystemExit(main())
