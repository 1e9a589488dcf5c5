"""Command-line figure generation from simulator CSV output.

    plot --kind {roc|detect|throughput} --in CSV[,CSV] --out PATH

The input is validated before the output file is opened, and the figure
is written via a temp file + rename, so a failure never leaves a partial
image behind.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile

from .figures import RENDERERS, SchemaError


def _atomic_save(fig, path: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    ext = os.path.splitext(path)[1] or ".png"
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=ext)
    os.close(fd)
    try:
        fig.savefig(tmp, metadata={"Date": None} if ext == ".svg" else None)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plot",
                                description="render simulator CSVs as figures")
    p.add_argument("--kind", choices=sorted(RENDERERS), required=True)
    p.add_argument("--in", dest="inputs", required=True,
                   help="input CSV path, or comma-separated list")
    p.add_argument("--out", required=True, help="output image path")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    paths = [s for s in args.inputs.split(",") if s]
    render = RENDERERS[args.kind]
    try:
        fig = render(paths)
    except (SchemaError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    _atomic_save(fig, args.out)
    print(f"-> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
