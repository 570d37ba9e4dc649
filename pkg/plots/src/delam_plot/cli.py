"""Command line: delam-plot <kind> <run-dir> [--out FILE] [--magnify N]."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, PlotDataError, PlotJob, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="delam-plot",
        description="render figures from a delam run directory")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("run_dir")
    parser.add_argument("--out", help="output image path "
                                      "(default <run-dir>/<kind>.<format>)")
    parser.add_argument("--magnify", type=float, default=100.0,
                        help="displacement magnification for snapshots")
    parser.add_argument("--format", dest="image_format", default="svg",
                        choices=("svg", "pdf", "png"))
    args = parser.parse_args(argv)
    job = PlotJob(run_dir=args.run_dir, kind=args.kind, out_path=args.out,
                  magnification=args.magnify, image_format=args.image_format)
    try:
        path = render(job)
    except PlotDataError as err:
        print(str(err), file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
