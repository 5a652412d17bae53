"""Unsupervised segmentation of a switching nonlinear series.

A desk-scale version of the synthetic study: three RBF-AR regimes switching
under a diagonally dominant transition matrix. The nonlinear model and the
linear AR baseline are fit with identical switching hyperparameters; matched
state accuracy and the transition-matrix error tell the two apart.

Writes transition-matrix heatmaps (actual / RBF / linear) next to this file.
"""

from pathlib import Path

import numpy as np

from rbfhmm import (
    EmissionHyperprior,
    EmissionTemplate,
    GibbsConfig,
    StickyHdpPrior,
    build_lagged_matrix,
    fit,
    matched_state_accuracy,
    transition_mse,
)
from rbfhmm.plots import transition_heatmap
from rbfhmm.synth import default_synth_spec, simulate

OUT = Path(__file__).resolve().parent

spec = default_synth_spec(seed=3, n_states=3, length=3000)
data = simulate(spec, np.random.default_rng(4))
print(f"simulated {spec.length} steps from {spec.n_states} states; "
      f"occupancies {np.bincount(data.z_true)}")

targets, windows = build_lagged_matrix(data.series, spec.lag)
eprior = EmissionHyperprior(3.0, 0.75 * targets.var() * np.eye(1), np.eye(1),
                            ridge=1e-3)
prior = StickyHdpPrior(gamma=1.0, alpha=1.0, sticky=10.0, truncation=10,
                       emission_prior=eprior)
config = GibbsConfig(sweeps=250, burn_in=125, seed=5)

results = {}
for kind in ("rbf", "linear"):
    template = EmissionTemplate(lag=spec.lag, kind=kind, n_neurons=8)
    result = fit(data.series, prior, template, config)
    match = matched_state_accuracy(result.point_estimate.z, data.z_true)
    mse = transition_mse(result.point_estimate.trans, spec.trans_actual, match)
    results[kind] = (result, match, mse)
    print(f"{kind:6s}: matched z-accuracy {match.accuracy:.3f}, "
          f"transition MSE {mse:.2e}, occupied states {result.k_plus}")

rbf_acc = results["rbf"][1].accuracy
lin_acc = results["linear"][1].accuracy
print(f"\nthe nonlinear emissions buy {rbf_acc - lin_acc:+.3f} accuracy over the "
      "linear baseline on this series")

transition_heatmap(spec.trans_actual, OUT / "pi_actual.svg", "actual")
transition_heatmap(results["rbf"][0].point_estimate.trans, OUT / "pi_rbf.svg",
                   "RBF emissions")
transition_heatmap(results["linear"][0].point_estimate.trans, OUT / "pi_linear.svg",
                   "linear emissions")
print(f"heatmaps written to {OUT}/pi_*.svg")
