//! Entanglement swapping: modes 2 and 3 of two EPR pairs are Bell-detected and mode 4
//! is displaced, leaving modes 1 and 4' entangled. The result is scored by a unit-gain
//! verification teleportation of a coherent state over (1, 4').

use num_complex::Complex64;
use rayon::prelude::*;

use crate::epr::{make_epr_pair, EprPair, SqueezerSpectrum};
use crate::error::{Error, Result};
use crate::linmode::{difference_variance, normalized_variance, Axis, BasisLabel, InputModel, QuadExpansion};
use crate::table::{FrequencyGrid, SpectrumRow, SpectrumTable};
use crate::teleport::{teleport_through, BellDetector, GainSchedule};

/// Displacement gain applied to mode 4.
#[derive(Debug, Clone, Default)]
pub enum SwapGain {
    /// Per-frequency optimum from the two sources' power spectra.
    #[default]
    Optimal,
    Schedule(GainSchedule),
}

#[derive(Debug, Clone)]
pub struct SwapConfig {
    /// Source of modes 1 and 2.
    pub source_ab: SqueezerSpectrum,
    /// Source of modes 3 and 4.
    pub source_cd: SqueezerSpectrum,
    pub gain: SwapGain,
}

impl SwapConfig {
    /// Two identical sources.
    pub fn symmetric(src: SqueezerSpectrum, gain: SwapGain) -> Self {
        SwapConfig {
            source_ab: src.clone(),
            source_cd: src,
            gain,
        }
    }
}

/// Modes 1 and 4' after swapping at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapOutcome {
    pub x1: QuadExpansion,
    pub p1: QuadExpansion,
    pub x4: QuadExpansion,
    pub p4: QuadExpansion,
    pub gain: Complex64,
    pub omega: f64,
}

impl SwapOutcome {
    /// `(1, 4')` as an EPR resource.
    pub fn pair(&self) -> EprPair {
        EprPair {
            x1: self.x1.clone(),
            p1: self.p1.clone(),
            x2: self.x4.clone(),
            p2: self.p4.clone(),
        }
    }
}

/// `(A - B)/(A + B)` for noisy and quiet powers `A`, `B`; 1 if `A` diverges.
pub fn optimal_gain(s_plus_sq: f64, s_minus_sq: f64) -> f64 {
    if s_plus_sq.is_infinite() {
        return 1.0;
    }
    (s_plus_sq - s_minus_sq) / (s_plus_sq + s_minus_sq)
}

/// Averaged noisy and quiet powers of the two sources; the noisy power is infinite at
/// a NOPA threshold.
fn mean_powers(cfg: &SwapConfig, omega: f64) -> Result<(f64, f64)> {
    let powers = |src: &SqueezerSpectrum| match src.power_spectrum(omega) {
        Err(Error::AtThreshold { .. }) => threshold_powers(src, omega),
        other => other,
    };
    let (a1, b1) = powers(&cfg.source_ab)?;
    let (a2, b2) = powers(&cfg.source_cd)?;
    Ok(((a1 + a2) / 2.0, (b1 + b2) / 2.0))
}

fn threshold_powers(src: &SqueezerSpectrum, omega: f64) -> Result<(f64, f64)> {
    match src.nopa_point() {
        Some((epsilon, beta)) => Ok((
            f64::INFINITY,
            crate::epr::lossy_quiet_spectrum(epsilon, beta, omega),
        )),
        None => Err(Error::AtThreshold {
            epsilon: f64::NAN,
            omega,
        }),
    }
}

/// The gain used at `omega`.
pub fn swap_gain(cfg: &SwapConfig, omega: f64) -> Result<Complex64> {
    match &cfg.gain {
        SwapGain::Optimal => {
            let (a, b) = mean_powers(cfg, omega)?;
            Ok(Complex64::new(optimal_gain(a, b), 0.0))
        }
        SwapGain::Schedule(s) => Ok(s.at(omega)),
    }
}

fn cd_label(l: &BasisLabel) -> BasisLabel {
    match l.as_str() {
        "bar1" => "bar3".into(),
        "bar2" => "bar4".into(),
        other => BasisLabel::new(format!("cd.{other}")),
    }
}

/// Swaps at one frequency: Claire measures `X_u = (X2 - X3)/sqrt2` and
/// `P_v = (P2 + P3)/sqrt2` and mode 4 is displaced by `Gamma sqrt2` times each. This is
/// teleportation of mode 2 through pair (3, 4) with an ideal detector.
pub fn swap_once(cfg: &SwapConfig, omega: f64) -> Result<SwapOutcome> {
    let ab = make_epr_pair(&cfg.source_ab, omega)?;
    let cd = make_epr_pair(&cfg.source_cd, omega)?.relabel(cd_label);
    let gain = swap_gain(cfg, omega)?;
    let (x4, p4) = teleport_through(
        &ab.x2,
        &ab.p2,
        &cd,
        gain,
        &BellDetector::ideal(),
        ["swap.d", "swap.e", "swap.f", "swap.g"],
    );
    Ok(SwapOutcome {
        x1: ab.x1,
        p1: ab.p1,
        x4,
        p4,
        gain,
        omega,
    })
}

/// Unit-gain verification teleportation of a coherent input over `(1, 4')`.
pub fn verification_teleport(outcome: &SwapOutcome) -> (QuadExpansion, QuadExpansion) {
    teleport_through(
        &QuadExpansion::input(1.0),
        &QuadExpansion::input(1.0),
        &outcome.pair(),
        Complex64::new(1.0, 0.0),
        &BellDetector::ideal(),
        ["verify.d", "verify.e", "verify.f", "verify.g"],
    )
}

/// `{1 + |Gamma - 1|^2 A/2 + |Gamma + 1|^2 B/2}^-1` with noisy and quiet powers `A`, `B`.
/// An infinite `A` contributes nothing at `Gamma = 1` and drives `F` to 0 otherwise.
pub fn swap_fidelity_closed(gain: Complex64, s_plus_sq: f64, s_minus_sq: f64) -> f64 {
    let dm = (gain - 1.0).norm_sqr();
    let noisy = if dm == 0.0 { 0.0 } else { dm * s_plus_sq };
    1.0 / (1.0 + noisy / 2.0 + (gain + 1.0).norm_sqr() * s_minus_sq / 2.0)
}

/// Swap fidelity at the optimal gain for two identical lossless NOPAs,
/// `{1 + 2ab/(a^2 + b^2)}^-1` with `a = (eps+1)^2 + w^2`, `b = (eps-1)^2 + w^2`.
pub fn optimized_swap_fidelity(epsilon: f64, omega: f64) -> f64 {
    let a = (epsilon + 1.0).powi(2) + omega * omega;
    let b = (epsilon - 1.0).powi(2) + omega * omega;
    1.0 / (1.0 + 2.0 * a * b / (a * a + b * b))
}

/// Verification variances `(V_x, V_p)` of `X_tel - X_in`, `P_tel - P_in`, and the
/// coherent-state fidelity at `omega`.
pub fn swap_point(cfg: &SwapConfig, omega: f64) -> Result<SpectrumRow> {
    match swap_once(cfg, omega) {
        Ok(out) => {
            let (x, p) = verification_teleport(&out);
            let coh = InputModel::coherent();
            let v_x = difference_variance(&x, &coh, Axis::X);
            let v_p = difference_variance(&p, &coh, Axis::P);
            let sx = 0.25 * (normalized_variance(&x, &coh, Axis::X) + 1.0);
            let sp = 0.25 * (normalized_variance(&p, &coh, Axis::P) + 1.0);
            Ok(SpectrumRow {
                omega,
                v_x,
                v_p,
                fidelity: 1.0 / (2.0 * (sx * sp).sqrt()),
            })
        }
        Err(Error::AtThreshold { .. }) => {
            let (a, b) = mean_powers(cfg, omega)?;
            let gain = swap_gain(cfg, omega)?;
            let f = swap_fidelity_closed(gain, a, b);
            let v = 2.0 * (1.0 / f - 1.0);
            Ok(SpectrumRow {
                omega,
                v_x: v,
                v_p: v,
                fidelity: f,
            })
        }
        Err(e) => Err(e),
    }
}

pub fn swap_fidelity(cfg: &SwapConfig, omega: f64) -> Result<f64> {
    Ok(swap_point(cfg, omega)?.fidelity)
}

/// Swap spectrum, rows evaluated in parallel and returned in ascending frequency.
pub fn swap_spectrum(cfg: &SwapConfig, grid: &FrequencyGrid) -> Result<SpectrumTable> {
    let rows = grid
        .points()
        .into_par_iter()
        .map(|w| swap_point(cfg, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable::new(rows))
}
