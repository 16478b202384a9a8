"""Smoke test for the modularis extension module.

Build and run from the workspace root:

    cargo build --release -p modularis-python --features extension-module
    cp target/release/libmodularis_py.so python/modularis.so
    python3 python/smoke_test.py
"""

import collections
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import modularis  # noqa: E402


def reference_join(left, right):
    by_key = collections.defaultdict(list)
    for key, payload in left:
        by_key[key].append(payload)
    return sorted([key, lp, rp] for key, rp in right for lp in by_key[key])


def relation(name):
    return {"name": name, "type": f"<key:Int64, {name}_payload:Int64>"}


def main():
    work = modularis.Workload.generate(4096, 14, correspondence="fanout:2", seed=3)
    assert work.names() == ["r0", "r1"], work.names()

    spec = {
        "left": relation("r0"),
        "right": relation("r1"),
        "radix": modularis.radix(14),
        "compression": True,
    }
    plan = modularis.build_join(spec)
    assert plan.result_fields() == ["key", "r0_payload", "r1_payload"]

    want = reference_join(work.rows("r0"), work.rows("r1"))
    for ranks in (1, 2, 4):
        rows, metrics = modularis.run(plan, work, ranks=ranks, strict_epochs=True)
        assert sorted(rows) == want, f"join differs at R={ranks}"
        assert metrics["transport"]["relationsShuffled"] == 2
        assert metrics["transport"]["epochViolations"] == 0
        assert set(metrics["phases"]) >= {"localHistogram", "networkPartitioning", "buildProbe"}

    local, _ = modularis.run(plan.localize(), work)
    single, _ = modularis.run(plan, work)
    assert local == single

    again = modularis.Plan.from_json(plan.to_json())
    assert again.to_json() == plan.to_json()

    with tempfile.TemporaryDirectory() as d:
        work.save(d)
        assert modularis.Workload.load(d).rows("r1") == work.rows("r1")

    groups = modularis.Workload.groups(5000, 40, 14, value_bits=10)
    gplan = modularis.build_group_by(
        {"input": {"name": "g", "type": "<key:Int64, val:Int64>"},
         "value": "val", "radix": modularis.radix(14)}
    )
    sums = collections.Counter()
    for key, val in groups.rows("g"):
        sums[key] += val
    rows, _ = modularis.run(gplan, groups, ranks=4)
    assert sorted(rows) == sorted([k, v] for k, v in sums.items())

    tables = modularis.Workload.tables(orders=1 << 10, parts=1 << 9)
    rows, _ = modularis.run(modularis.query("q12", bits=10), tables, ranks=2)
    assert all(len(r) == 3 for r in rows)

    try:
        bad = dict(spec, radix={"P": 40, "F": 4, "passBits": [4, 3]})
        modularis.build_join(bad)
    except modularis.ModularisError as e:
        assert str(e).startswith("CompressionIllegal"), e
    else:
        raise AssertionError("illegal compression accepted")

    print("python smoke test ok")


if __name__ == "__main__":
    main()
