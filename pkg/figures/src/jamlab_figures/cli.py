"""render_figures: batch figure renderer for jamlab CSV outputs."""

from __future__ import annotations

import argparse
import sys

from jamlab_figures.jobs import SchemaError, parse_jobfile
from jamlab_figures.render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render figures listed in a plain-text jobfile "
                    "(one 'kind inputs -> out' line per figure).",
    )
    parser.add_argument("jobfile")
    args = parser.parse_args(argv)
    try:
        jobs = parse_jobfile(args.jobfile)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    status = 0
    for job in jobs:
        try:
            result = render(job)
        except SchemaError as err:
            print(f"error: {err}", file=sys.stderr)
            status = 1
            continue
        print(f"{job.kind}: {', '.join(job.inputs)} -> {result.path} "
              f"({result.n_panels} panel{'s' if result.n_panels != 1 else ''})")
    return status


if __name__ == "__main__":
    sys.exit(main())
