"""Regenerate the shipped design corpus, its labels and the SAIF fixture.

    python3 tools/make_fixtures.py [--out src/sogppa/data]

Designs come from tools/benchmarks.py; labels from the reference flow in
tools/refsynth.py. The word-level operator histogram of the corpus is
printed so the generator defaults can be kept in line with it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from benchmarks import adder4, benchmark_suite  # noqa: E402
from refsynth import emit_saif, reference_flow  # noqa: E402

from sogppa.pipeline import build_sog  # noqa: E402
from sogppa.rtlgen import GEN_KINDS  # noqa: E402

SAIF_DESIGN = "cpu_w8_r4"


def _dump(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True)
        f.write("\n")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    here = os.path.dirname(os.path.abspath(__file__))
    ap.add_argument("--out", default=os.path.join(here, "..", "src", "sogppa", "data"))
    args = ap.parse_args(argv)
    ddir = os.path.join(args.out, "designs")
    os.makedirs(ddir, exist_ok=True)

    b, _ = adder4()
    _dump(b.to_dict(), os.path.join(args.out, "adder4.json"))

    hist = Counter()
    labels = {}
    for i, (name, (builder, tags)) in enumerate(sorted(benchmark_suite().items())):
        d = builder.to_dict()
        _dump(d, os.path.join(ddir, f"{name}.json"))
        for m in d["modules"].values():
            for c in m["cells"].values():
                if c["kind"] in GEN_KINDS:
                    hist[c["kind"]] += 1
        g = build_sog(builder.build())
        r = reference_flow(name, g, g.tag_modules, seed=1000 + i)
        labels[name] = dict(r["labels"], tags=list(tags))
        if name == SAIF_DESIGN:
            with open(os.path.join(args.out, f"{name}.saif"), "w") as f:
                f.write(emit_saif(name, r["saif"]))
        print(f"{name}: {len(g.kinds)} SOG nodes, {r['gates']} gates", file=sys.stderr)
    _dump({"designs": labels}, os.path.join(args.out, "labels.json"))

    total = sum(hist.values())
    print("operator mix of the corpus:")
    for k in GEN_KINDS:
        print(f"  {k}: {hist[k] / total:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
