#!/usr/bin/env python3
"""Build replay recordings of questionnaire replies that reproduce target
per-model trait means (and roughly the SDs).

Each dimension score is an integer item sum over k items divided by k, so a
20-run mean can hit the target to within 1/(40k). Run sums follow fixed
normal quantiles scaled by the target SD, then get nudged until their total
is exact. A few runs open with a malformed reply so replay also exercises the
re-ask path.

usage: make_bfi_fixtures.py [--profiles FILE] [--instrument FILE] [--runs N] OUT
"""

import argparse
import json
import statistics
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
TRAITS = "OCEAN"


def run_sums(mean, sd, k, runs):
    target_total = round(mean * runs * k)
    nd = statistics.NormalDist()
    z = [nd.inv_cdf((i + 0.5) / runs) for i in range(runs)]
    # Interleave so consecutive runs are not sorted.
    z = [z[(i * 7) % runs] for i in range(runs)]
    sums = [min(5 * k, max(k, round(k * (mean + sd * zi)))) for zi in z]
    i = 0
    while sum(sums) != target_total:
        step = 1 if sum(sums) < target_total else -1
        j = i % runs
        if k <= sums[j] + step <= 5 * k:
            sums[j] += step
        i += 1
    return sums


def ratings_for_run(items, dim_sums, run):
    ratings = {}
    for d in TRAITS:
        dim_items = [it for it in items if it["dimension"] == d]
        k = len(dim_items)
        base, extra = divmod(dim_sums[d], k)
        for pos, it in enumerate(dim_items):
            scored = base + (1 if (pos + run) % k < extra else 0)
            ratings[it["label"]] = 6 - scored if it["reverse_keyed"] else scored
    return [ratings[it["label"]] for it in items]


def reply_text(items, ratings):
    return "\n".join(f"({it['label']}) {r}" for it, r in zip(items, ratings))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--profiles", default=ROOT / "data/reference/model_profiles.json")
    ap.add_argument("--instrument", default=ROOT / "data/bfi44.json")
    ap.add_argument("--runs", type=int, default=20)
    args = ap.parse_args()

    items = json.loads(Path(args.instrument).read_text())["items"]
    models = json.loads(Path(args.profiles).read_text())["models"]

    lines = []
    for name, prof in models.items():
        per_dim = {}
        for d in TRAITS:
            k = sum(1 for it in items if it["dimension"] == d)
            per_dim[d] = run_sums(prof["mean"][d], prof["sd"][d], k, args.runs)
        for run in range(args.runs):
            ratings = ratings_for_run(items, {d: per_dim[d][run] for d in TRAITS}, run)
            good = reply_text(items, ratings)
            replies = [good]
            if run % 7 == 3:
                # Drops the last item: parsed as missing, then re-asked.
                replies = ["Sure! Here are my answers:\n" + good.rsplit("\n", 1)[0], good]
            elif run % 7 == 5:
                replies = [good.replace("(c) ", "(c) four "), "Here you go.\n" + good]
            lines.append(json.dumps({"key": f"bfi/{name}/run{run + 1}", "replies": replies}))

    Path(args.out).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
