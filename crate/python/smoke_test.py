"""Smoke test for the pygibq extension.

Build first, for example with
`cargo build --release -p pygibq --features extension-module` and copy
`target/release/libpygibq.so` to `pygibq.so` next to this file, or
`pip install ./crates/python`.
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pygibq  # noqa: E402


def main() -> None:
    assert pygibq.count_trees(2, 6) == [1, 1, 2, 5, 14, 42, 132]
    assert pygibq.count_trees(3, 30)[30] > 2**64

    f = pygibq.Field([(0, 1.0, 0.0)])
    assert len(f) == 1
    assert abs(f.norm("sobolev,-0.75") - 1.0) < 1e-15

    p = pygibq.Params.with_frequency(2, 2, -0.75, 256, delta=0.25)
    assert p.big_n == 256 and p.a == 10
    bump = p.bump()
    assert len(bump) == 44
    assert abs(bump.l1() - 44 * p.r) < 1e-9 * p.r

    report = json.loads(pygibq.inflate(p, families=["sobolev", "fl:1"], max_gen=3))
    assert report["status"] in ("ok", "diverged")
    assert math.isfinite(report["families"][0]["xi1_phi"])

    csv, manifest = pygibq.sweep(json.dumps({"k": 2, "s": -0.75, "n_list": []}))
    assert csv.count("\n") == 1 and json.loads(manifest)["runs"] == 0

    try:
        pygibq.Params.schedule(1, 2, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("s >= 0 must be rejected")

    lines = pygibq.verify_all(True).strip().splitlines()
    assert all(line.split(",")[1] == "true" for line in lines[1:]), lines
    print("pygibq smoke test passed")


if __name__ == "__main__":
    main()
