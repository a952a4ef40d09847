"""Regenerate the shipped counterexample fixtures (b1, b2, b3).

b1/b3 come from an exhaustive search over small rational grids; b2 is a
direct construction. Output goes to src/monofair/fixtures/ by default.

    python scripts/build_fixtures.py [--out DIR]
"""

import argparse
from pathlib import Path

from monofair.bounds import build_fixtures, save_case

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "monofair" / "fixtures"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, (case, expected) in build_fixtures().items():
        path = args.out / f"{name}.json"
        save_case(case, path, expected)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
