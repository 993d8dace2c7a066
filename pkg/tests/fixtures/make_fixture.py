"""Regenerate the bundled end-to-end fixture: three synthetic sequences of
five raters each, plus a segment boundary file."""

import os

import numpy as np

from annofuse.synthbench import RaterModel, generate, make_truth

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "e2e")
N = 400
SEG = 20  # samples per segment


def main():
    ann = os.path.join(HERE, "annotations")
    os.makedirs(ann, exist_ok=True)
    rows = []
    for s in range(3):
        seq = f"seq{s + 1}"
        truth = make_truth(100 + s, N)
        raters = [
            RaterModel(lag_samples=lag, bias=0.05 * i, scale=1.0 + 0.1 * i, noise_std=0.05, seed=10 * s + i)
            for i, lag in enumerate((0, 2, 4, 1, 3))
        ]
        aset = generate(truth, raters, seq)
        with open(os.path.join(ann, f"{seq}.csv"), "w") as fh:
            fh.write("timestamp_ms," + ",".join(aset.rater_ids) + "\n")
            for i in range(N):
                vals = ",".join(f"{t.values[i]:.6f}" for t in aset.tracks)
                fh.write(f"{i * truth.period_ms},{vals}\n")
        for j in range(N // SEG):
            part = "train" if j % 5 < 3 else ("devel" if j % 5 == 3 else "test")
            start = j * SEG * truth.period_ms
            rows.append(f"{seq}_s{j:02d},{seq},{start},{start + SEG * truth.period_ms},{part}")
    with open(os.path.join(HERE, "segments.csv"), "w") as fh:
        fh.write("segment_id,sequence_id,start_ms,end_ms,partition\n")
        fh.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
