"""Generate the SYNTHETIC three-question survey count table in data/.

Three binary items (I, S, A; category 1 = yes, 2 = no) with nonignorable
nonresponse: each item is skipped more often when the true answer is
"no", and more often when another item is skipped. The counts are one
multinomial sample of n = 2074 from the implied observed-data
distribution. This is a stand-in for real survey data, not real data.

    python scripts/make_synthetic_counts.py [--seed 20240517] [--out data/synthetic_survey_counts.txt]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from seqident.io import CountTable, write_observed
from seqident.tables import CategorySpace, FullTable, observed_from_full

N = 2074

# P(I, S, A)
JOINT = np.array([
    [[0.62, 0.03], [0.04, 0.02]],
    [[0.04, 0.02], [0.05, 0.18]],
])
# baseline skip logit per item, shift when the item's answer is "no", shift per earlier skipped item
BASE = np.array([-1.8, -1.6, -2.6])
OWN_NO = np.array([1.6, 1.4, 2.0])
OTHER_MISSING = 1.0


def full_table() -> FullTable:
    space = CategorySpace((2, 2, 2), names=("I", "S", "A"), labels=(("yes", "no"),) * 3)
    full = np.zeros(space.full_shape)
    for x in np.ndindex(2, 2, 2):
        for m in np.ndindex(2, 2, 2):
            prob = JOINT[x]
            for j in range(3):
                # skipping pairs up, so condition item j on the items before it
                logit = BASE[j] + OWN_NO[j] * x[j] + OTHER_MISSING * sum(m[:j])
                pj = 1.0 / (1.0 + np.exp(-logit))
                prob *= pj if m[j] else 1.0 - pj
            full[x + m] = prob
    return FullTable(space, full)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=20240517)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "synthetic_survey_counts.txt"))
    args = ap.parse_args(argv)
    observed = observed_from_full(full_table())
    rng = np.random.Generator(np.random.PCG64(args.seed))
    counts = rng.multinomial(N, observed.probs.ravel()).reshape(observed.probs.shape)
    comment = (
        "SYNTHETIC DATA: not the real survey table.\n"
        f"Simulated by scripts/make_synthetic_counts.py (seed {args.seed}, n = {N}) from a model where\n"
        "nonresponse depends on the unobserved answer itself."
    )
    write_observed(CountTable(observed.space, counts), args.out, comment=comment)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
