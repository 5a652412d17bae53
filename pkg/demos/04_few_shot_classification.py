"""Few-shot two-class classification with prototype-seeded class models.

Runs the training-fraction sweep on a spectrally separated two-class
surrogate (pass a recognition-dataset CSV path as the first argument to use
real data instead): one Bayesian RBF-AR model per class, centers perturbed
around each class's mean window, segments scored by summed per-window log
likelihoods.
"""

import sys

import numpy as np

from rbfhmm import (
    ClassifierConfig,
    SplitProtocol,
    choose_held_out_subjects,
    confidence_histogram,
    ingest_uci_eeg,
    run_split_sweep,
    spectral_features,
    synthetic_two_class_dataset,
    threshold_sweep,
)

if len(sys.argv) > 1:
    dataset = ingest_uci_eeg(sys.argv[1])
    config = ClassifierConfig(lag=156, n_centers=250)
    fractions = (0.01, 0.05, 0.2)
else:
    dataset = synthetic_two_class_dataset(n_per_class=200, n_subjects=20, seed=0)
    config = ClassifierConfig(lag=20, n_centers=50)
    fractions = (0.01, 0.05, 0.2, 0.6)

print("spectral features of a few segments (class: fundamental Hz, entropy, alpha fraction)")
for i in (0, 1, dataset.n_segments - 1):
    f = spectral_features(dataset.segments[i], dataset.sampling_rate)
    cls = "seizure" if dataset.seizure[i] else "other"
    print(f"  {cls:8s}: {f.fundamental_hz:6.2f} Hz, {f.spectral_entropy:.3f}, "
          f"{f.alpha_band_energy:.3f}")

held = choose_held_out_subjects(dataset, 5, seed=1)
protocol = SplitProtocol(fractions, held, repeats=5, seed=2)
rows, detail = run_split_sweep(dataset, protocol, config,
                               collect_fraction=fractions[-1])

print(f"\nvalidation subjects {tuple(map(str, held))}; "
      "balanced accuracy by training fraction:")
for frac in fractions:
    accs = [r["balanced_accuracy"] for r in rows
            if r["fraction"] == frac and not r["skipped"]]
    skipped = sum(r["skipped"] for r in rows if r["fraction"] == frac)
    label = f"{np.mean(accs):.3f} over {len(accs)} repeats" if accs else "all skipped"
    print(f"  {frac:>5.0%}: {label}" + (f" ({skipped} skipped)" if skipped else ""))

if detail is not None:
    hist = confidence_histogram(detail.positive_confidence("seizure"),
                                detail.true_labels)
    print("\nseizure-confidence mass per true class (10 bins, left = confident other):")
    for cls, payload in sorted(hist["classes"].items()):
        bars = " ".join(f"{m:.2f}" for m in payload["mass"])
        print(f"  {cls:8s}: {bars}")

    print("\nraising the decision threshold trades recall for precision:")
    for row in threshold_sweep(detail, (0.3, 0.5, 0.9, 0.99)):
        print(f"  threshold {row['threshold']:.2f}: balanced accuracy "
              f"{row['balanced_accuracy']:.3f} (TPR {row['true_positive_rate']:.3f}, "
              f"TNR {row['true_negative_rate']:.3f})")
