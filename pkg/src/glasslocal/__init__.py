"""Sampling from mixed p-spin Ising Gibbs measures by stochastic
localization, with the scalar state-evolution theory, exact small-n oracles
and experiment harnesses."""

from .mixture import MixtureSpec, binary_entropy, binary_entropy_sum
from .scalar import QuadratureRule, mutual_info_scalar, phi, phi_prime, psi, psi_prime
from .state_evolution import (
    SEProfile,
    ThresholdReport,
    beta1,
    beta2,
    beta3,
    beta_c_rs,
    beta_dyn,
    mse_prediction,
    psi_star,
    q_schedule,
    se_recursion,
    thresholds,
)
from .disorder import (
    DisorderTensors,
    GibbsQuery,
    gen_planted,
    gen_random,
    grad,
    hamiltonian,
    hessian,
    interpolate,
    partition_rescaled,
    read_tensors,
    write_tensors,
)
from .amp import AmpState, amp_lipschitz_probe, amp_run, onsager
from .tap import (
    TapIterate,
    TapParams,
    bregman,
    ftap_grad,
    ftap_hessian,
    ftap_value,
    ngd_run,
    ons,
    ons_prime,
    relative_hessian_extremes,
)
from .localization import (
    SamplerParams,
    SampleRun,
    mean_estimate,
    round_spins,
    sample,
    simulate_planted_path,
)
from .baselines import (
    ExactGibbs,
    read_batch_bits,
    write_batch_bits,
    SampleBatch,
    empirical_w2,
    exact_gibbs,
    exact_mean_batch,
    exact_sample,
    glauber_run,
    overlap_moment,
)
from .experiments import chaos_experiment, stability_experiment

__version__ = "0.1.0"
