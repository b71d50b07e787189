"""Standalone figure scripts: `wavefigures KIND --in DIR --out DIR`.

The --in directory is an experiment run directory (as written by the
solver CLI); --out receives the vector image plus a sidecar caption.
Schema problems and missing inputs exit nonzero with a one-line message.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .plots import FigureSpec, regime_diagram, render
from .schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavefigures",
        description="Render report figures from experiment CSV artifacts.",
    )
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")

    p = sub.add_parser("regime-diagram",
                       help="exponent-plane threshold diagram")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--out", type=Path, required=True, metavar="DIR")

    for kind, blurb in (
        ("decay", "norm decay with fitted and reference slopes"),
        ("lifespan", "blow-up time vs amplitude with both fit curves"),
        ("inequality", "campaign worst ratios per check"),
    ):
        p = sub.add_parser(kind, help=blurb)
        p.add_argument("--in", dest="in_dir", type=Path, required=True,
                       metavar="DIR")
        p.add_argument("--out", type=Path, required=True, metavar="DIR")

    return parser


def _dispatch(args: argparse.Namespace) -> int:
    out: Path = args.out
    if args.kind == "regime-diagram":
        name = f"regime_n{args.n}_m{args.m:g}.svg"
        regime_diagram(args.n, args.m, out / name)
        print(out / name)
        return 0

    in_dir: Path = args.in_dir
    if args.kind == "decay":
        spec = FigureSpec(
            kind="decay",
            inputs=(in_dir / "norms.csv", in_dir / "fit.csv"),
            output=out / "decay.svg",
        )
    elif args.kind == "lifespan":
        spec = FigureSpec(
            kind="lifespan",
            inputs=(in_dir / "lifespan.csv", in_dir / "fit.csv"),
            output=out / "lifespan.svg",
        )
    else:
        spec = FigureSpec(
            kind="inequality",
            inputs=(in_dir / "inequalities.csv",),
            output=out / "inequalities.svg",
        )
    render(spec)
    print(spec.output)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _dispatch(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
