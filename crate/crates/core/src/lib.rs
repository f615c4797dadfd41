//! Broadband continuous-variable quantum teleportation in the frequency domain.
//!
//! Every mode is a linear combination of independent vacuum quadratures plus the
//! unknown signal ([`QuadExpansion`]). Sources build EPR pairs per frequency
//! ([`epr`]), the protocols propagate them ([`teleport`], [`swap`]) and [`criteria`]
//! scores the outputs against the classical boundaries. [`oracle`] re-derives the
//! results independently.

pub mod criteria;
pub mod epr;
pub mod error;
pub mod linmode;
pub mod oracle;
pub mod swap;
pub mod table;
pub mod teleport;

pub use num_complex::Complex64;

pub use criteria::{
    bandwidth, closed_form_fidelity, criteria_report, fidelity_point, fidelity_spectrum,
    outcome_fidelity, teleport_bandwidth, BandwidthSearch, ClassicalModelParams,
    ClassicalObjective, CriteriaReport, FidelityPoint, RalphLam,
};
pub use epr::{make_epr_pair, CustomSpectrum, EprPair, NopaParams, SqueezerSpectrum, TransferPair};
pub use error::{Error, Result};
pub use linmode::{
    commutator_pairing, covariance, difference_variance, normalized_variance, Axis, BasisLabel,
    InputFamily, InputModel, QuadExpansion,
};
pub use oracle::{covariance_teleport, mc_check, McConfig, McReport};
pub use swap::{optimal_gain, swap_fidelity, swap_once, swap_spectrum, SwapConfig, SwapGain};
pub use table::{FrequencyGrid, SpectrumRow, SpectrumTable};
pub use teleport::{teleport, BellDetector, GainSchedule, TeleportOutcome};
