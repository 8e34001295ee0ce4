#!/usr/bin/env python3
"""Emit the bundled reference link description as a YAML file.

Example:
    python3 scripts/make_fixture.py --out link.yaml --channels 90 --spans 9
"""

import argparse

from ramanlink.fixtures import write_paper_fixture


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="output YAML path")
    ap.add_argument("--channels", type=int, default=90)
    ap.add_argument("--spans", type=int, default=9)
    ap.add_argument("--span-length-km", type=float, default=60.0)
    ap.add_argument("--launch-dbm", type=float, default=0.0)
    ap.add_argument("--osnr-db", type=float, default=26.0)
    args = ap.parse_args()
    write_paper_fixture(args.out, num_channels=args.channels,
                        num_spans=args.spans,
                        span_length_km=args.span_length_km,
                        launch_dbm=args.launch_dbm, osnr_db=args.osnr_db)
    print(f"wrote {args.out}: {args.channels} channels x {args.spans} spans")


if __name__ == "__main__":
    main()
