#!/usr/bin/env python3
"""Regenerate the committed two-node golden trajectory.

Writes tests/data/two_mode_fixture.json from the brute-force componentwise
integrator, stamping it with a hash of the generating source so the
committed values are always traceable to the code that produced them.

Usage: python tools/gen_two_mode_fixture.py [output.json]
"""

import json
import sys
from pathlib import Path

from hfbflow.oracle import two_mode_fixture

DEFAULT_OUTPUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "two_mode_fixture.json"


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_OUTPUT
    out.parent.mkdir(parents=True, exist_ok=True)
    fixture = two_mode_fixture(T=0.01, dt=1e-6, samples=4)
    out.write_text(json.dumps(fixture, indent=1))
    print(f"wrote {out} (generator {fixture['generator_sha256'][:12]}...)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
