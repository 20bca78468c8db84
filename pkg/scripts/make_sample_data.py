"""Regenerate the bundled 200-event sample log (deterministic).

Twenty users, thirty venues grouped into six bundles of five. Each user
favors two bundles; each session draws a few venues from one bundle, with
intra-session gaps well under six hours and inter-session gaps well over.
"""

import pathlib

import numpy as np

OUT = (
    pathlib.Path(__file__).resolve().parent.parent
    / "src" / "sesscmf" / "resources" / "sample_checkins.tsv"
)

N_USERS = 20
N_BUNDLES = 6
BUNDLE_SIZE = 5
EVENTS_PER_USER = 10
BASE_TS = 1349000000  # autumn 2012


def main():
    rng = np.random.default_rng(20121004)
    bundles = [
        [f"v{b * BUNDLE_SIZE + n:02d}" for n in range(BUNDLE_SIZE)]
        for b in range(N_BUNDLES)
    ]
    rows = []
    for u in range(N_USERS):
        favored = rng.choice(N_BUNDLES, size=2, replace=False)
        t = BASE_TS + u * 2_592_000 // N_USERS
        remaining = EVENTS_PER_USER
        while remaining:
            if rng.random() < 0.85:
                bundle = bundles[int(favored[rng.integers(2)])]
            else:
                bundle = bundles[int(rng.integers(N_BUNDLES))]
            size = int(min(rng.integers(2, 5), remaining))
            picks = rng.choice(len(bundle), size=size, replace=False)
            for p in picks:
                t += int(rng.integers(120, 3600))
                rows.append((f"u{u:02d}", bundle[int(p)], t))
            t += int(rng.integers(30000, 90000))
            remaining -= size
    assert len(rows) == N_USERS * EVENTS_PER_USER
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8", newline="\n") as fh:
        for user, item, ts in rows:
            fh.write(f"{user}\t{item}\t{ts}\n")
    print(f"wrote {len(rows)} events to {OUT}")


if __name__ == "__main__":
    main()
