"""Probes for structural bias in population-based optimisers."""
from .errors import BiasProbeError, InvalidParameter, SourceExhausted, TraceFormatError
from .rng import (DrawLog, Lcg48Engine, Lcg48State, RecordedEngine, RngEngine,
                  effective_period, gaussian_draw, init_draw_count, lag_pairs, lcg48_next,
                  make_engine, marsaglia_bound, run_seed)
from .algk import Orbit, algk_orbit, algk_step, seed_scan
from .objectives import (Objective, SearchDomain, argmin_uniformity_trial, evaluate_classic,
                         f0_evaluate)
from .optimizers import (GaConfig, Individual, PsoConfig, RaConfig, RunTrace,
                         SimplifiedGaConfig, Snapshot, best_of, ga_run, pso_run, ra_run,
                         sga_run, simplified_ga_step)
from .theory import (DriftEstimate, TheoremQuantities, alpha_moments, d_bound, drift_threshold,
                     expected_drift_unabsorbed, max_sample_variance, monte_carlo_drift,
                     paired_drift, sample_variance, threshold_K, variance_trajectory)
from .stats import (BiasReport, KsResult, bias_report, dispersion_summary, ks_uniform,
                    kolmogorov_sf, sensitivity_classify)

__version__ = "0.1.0"
