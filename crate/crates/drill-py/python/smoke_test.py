"""Smoke test for the drillbench extension module.

Build and install it first, e.g. `pip install ./crates/drill-py --no-build-isolation`
or `maturin develop -m crates/drill-py/Cargo.toml`, then run this script.
"""

import json
import pathlib
import sys

import drillbench as db

ROOT = pathlib.Path(__file__).resolve().parents[3]


def check(name, cond):
    print(("ok   " if cond else "FAIL ") + name)
    return cond


def main():
    ok = True

    c = db.Graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
    ok &= check("cycle graph", (c.n, c.m) == (5, 5) and c.is_connected())
    ok &= check("distances", c.distances([0]) == [0, 1, 2, 2, 1])
    ok &= check("json round trip", db.Graph.from_json(c.to_json()).edges() == c.edges())

    tree = db.generate("tree:3", radius=4)
    ok &= check("tree is 0-hyperbolic", db.delta(tree)["delta"] == 0.0)

    grid = db.generate("grid", radius=4)
    ok &= check("grid delta positive", db.delta(grid)["delta"] > 0)

    hb, depth, base = db.horoball(db.generate("path:9"), 3)
    ok &= check("horoball layers", hb.n == 9 * 4 and max(depth) == 3 and sorted(set(base)) == list(range(9)))

    ledger = db.constants("exact")
    ok &= check("exact ledger", ledger["details"]["ledger"]["Q0"] == "600002")
    ok &= check("ledger identities", all(ledger["details"]["identities"].values()))

    cfg = json.loads((ROOT / "configs" / "demo-73.json").read_text())
    bundle = db.run(cfg, stages=["generate", "measure-delta", "cusp"])
    cfg["stages"] = ["generate", "measure-delta", "cusp"]
    h = db.config_hash(cfg)
    ok &= check("pipeline run", bundle["verdict"] == "pass" and len(bundle["reports"]) == 3)
    ok &= check("config hash", bundle["config_hash"] == h)
    ok &= check("exit codes", [db.exit_code(v) for v in ("pass", "fail", "inconclusive")] == [0, 1, 2])

    try:
        db.run({"name": "x", "seed": 0, "space": {"kind": "nonsense"}, "stages": ["generate"]})
        ok &= check("bad config rejected", False)
    except ValueError as e:
        ok &= check("bad config rejected", "space" in str(e))

    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
