//! Classical-versus-quantum boundaries: the classical channel model, variance limits,
//! Ralph-Lam criteria and coherent-state fidelity.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epr::SqueezerSpectrum;
use crate::error::{invalid, Error, Result};
use crate::linmode::{
    covariance, difference_variance, normalized_variance, Axis, InputModel, QuadExpansion,
};
use crate::table::{FrequencyGrid, SpectrumRow, SpectrumTable};
use crate::teleport::{closed_form_tel_in, teleport, BellDetector, GainSchedule, TeleportOutcome};

pub const PRODUCT_LIMIT: f64 = 4.0;
pub const SUM_LIMIT: f64 = 4.0;
pub const OUT_PRODUCT_LIMIT: f64 = 9.0;
pub const CONDITIONAL_SUM_LIMIT: f64 = 2.0;
pub const TRANSFER_SUM_LIMIT: f64 = 1.0;
pub const FIDELITY_LIMIT: f64 = 0.5;
pub const DEFAULT_BANDWIDTH_THRESHOLD: f64 = 0.51;

/// Alice's measurement split `s_a`, Bob's noise split `s_b` and the two gains of the
/// least noisy classical (measure-and-prepare) channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalModelParams {
    pub s_a: f64,
    pub s_b: f64,
    pub gamma_x: f64,
    pub gamma_p: f64,
}

impl ClassicalModelParams {
    pub fn new(s_a: f64, s_b: f64, gamma_x: f64, gamma_p: f64) -> Result<Self> {
        if !(s_a > 0.0 && s_a.is_finite()) {
            return Err(invalid("s_a", s_a, "must be positive"));
        }
        if !(s_b > 0.0 && s_b.is_finite()) {
            return Err(invalid("s_b", s_b, "must be positive"));
        }
        Ok(ClassicalModelParams {
            s_a,
            s_b,
            gamma_x,
            gamma_p,
        })
    }

    pub fn unit_gain(s_a: f64, s_b: f64) -> Result<Self> {
        Self::new(s_a, s_b, 1.0, 1.0)
    }
}

/// Output quadratures of the classical channel over vacua `alice` and `bob`.
pub fn classical_model(params: &ClassicalModelParams) -> (QuadExpansion, QuadExpansion) {
    let ClassicalModelParams {
        s_a,
        s_b,
        gamma_x,
        gamma_p,
    } = *params;
    let x = QuadExpansion::input(gamma_x)
        .with_term("alice", Axis::X, gamma_x / s_a)
        .with_term("bob", Axis::X, 1.0 / s_b);
    let p = QuadExpansion::input(gamma_p)
        .with_term("alice", Axis::P, -gamma_p * s_a)
        .with_term("bob", Axis::P, s_b);
    (x, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassicalObjective {
    /// `V_tel,in^x * V_tel,in^p`
    Product,
    /// `V_tel,in^x + V_tel,in^p`
    Sum,
    /// `V_out^x * V_out^p`
    OutProduct,
    /// `V_out^x + V_out^p`
    OutSum,
}

pub fn classical_objective(
    objective: ClassicalObjective,
    params: &ClassicalModelParams,
    in_model: &InputModel,
) -> f64 {
    let (x, p) = classical_model(params);
    match objective {
        ClassicalObjective::Product | ClassicalObjective::Sum => {
            let vx = difference_variance(&x, in_model, Axis::X);
            let vp = difference_variance(&p, in_model, Axis::P);
            if objective == ClassicalObjective::Product {
                vx * vp
            } else {
                vx + vp
            }
        }
        ClassicalObjective::OutProduct | ClassicalObjective::OutSum => {
            let vx = normalized_variance(&x, in_model, Axis::X);
            let vp = normalized_variance(&p, in_model, Axis::P);
            if objective == ClassicalObjective::OutProduct {
                vx * vp
            } else {
                vx + vp
            }
        }
    }
}

/// Optimal unit-gain classical strategy and its objective value, in closed form.
///
/// The product objectives are minimized by `s_a = s_b` (any common value for the
/// excess-noise product; `(V_p/V_x)^(1/4)` for the output product, which then equals
/// `(sqrt(V_x V_p) + 2)^2`). The sums are minimized by `s_a = s_b = 1`.
pub fn optimize_classical(
    in_model: &InputModel,
    objective: ClassicalObjective,
) -> (ClassicalModelParams, f64) {
    let s = match objective {
        ClassicalObjective::OutProduct if in_model.v_x > 0.0 && in_model.v_p > 0.0 => {
            (in_model.v_p / in_model.v_x).powf(0.25)
        }
        _ => 1.0,
    };
    let params = ClassicalModelParams {
        s_a: s,
        s_b: s,
        gamma_x: 1.0,
        gamma_p: 1.0,
    };
    let value = classical_objective(objective, &params, in_model);
    (params, value)
}

/// Brute-force minimization of a unit-gain objective over `s_a, s_b in [lo, hi]`: a
/// log-spaced grid followed by successively finer grids around the incumbent.
pub fn grid_refine(
    in_model: &InputModel,
    objective: ClassicalObjective,
    lo: f64,
    hi: f64,
    points: usize,
    rounds: usize,
) -> (ClassicalModelParams, f64) {
    let points = points.max(2);
    let eval = |a: f64, b: f64| {
        let p = ClassicalModelParams {
            s_a: a,
            s_b: b,
            gamma_x: 1.0,
            gamma_p: 1.0,
        };
        (p, classical_objective(objective, &p, in_model))
    };
    let (mut la, mut ha) = (lo.ln(), hi.ln());
    let (mut lb, mut hb) = (la, ha);
    let mut best = eval(lo, lo);
    for _ in 0..=rounds {
        let da = (ha - la) / (points - 1) as f64;
        let db = (hb - lb) / (points - 1) as f64;
        for i in 0..points {
            for j in 0..points {
                let cand = eval((la + i as f64 * da).exp(), (lb + j as f64 * db).exp());
                if cand.1 < best.1 {
                    best = cand;
                }
            }
        }
        let (ca, cb) = (best.0.s_a.ln(), best.0.s_b.ln());
        la = (ca - 2.0 * da).max(lo.ln());
        ha = (ca + 2.0 * da).min(hi.ln());
        lb = (cb - 2.0 * db).max(lo.ln());
        hb = (cb + 2.0 * db).min(hi.ln());
    }
    best
}

/// Conditional variances and transfer coefficients of a linear channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RalphLam {
    pub v_c_x: f64,
    pub v_c_p: f64,
    pub t_x: f64,
    pub t_p: f64,
}

impl RalphLam {
    pub fn conditional_sum(&self) -> f64 {
        self.v_c_x + self.v_c_p
    }

    pub fn transfer_sum(&self) -> f64 {
        self.t_x + self.t_p
    }
}

/// Conditional variance `V_out - cov(out, in)^2 / V_in` and transfer coefficient
/// `|Gamma|^2 V_in / V_out`, with the gain read off the input coefficient (the
/// signal-to-noise ratio of a linear channel does not depend on the amplitude).
pub fn ralph_lam(out_x: &QuadExpansion, out_p: &QuadExpansion, in_model: &InputModel) -> RalphLam {
    let axis = |e: &QuadExpansion, axis: Axis| {
        let v_out = normalized_variance(e, in_model, axis);
        let v_in = in_model.variance(axis);
        if v_out == 0.0 {
            return (0.0, f64::INFINITY);
        }
        let cov = covariance(e, &QuadExpansion::input(1.0), in_model, axis);
        let v_c = if v_in > 0.0 { v_out - cov * cov / v_in } else { v_out };
        (v_c, e.input_coeff().norm_sqr() * v_in / v_out)
    };
    let (v_c_x, t_x) = axis(out_x, Axis::X);
    let (v_c_p, t_p) = axis(out_p, Axis::P);
    RalphLam {
        v_c_x,
        v_c_p,
        t_x,
        t_p,
    }
}

/// Fidelity of a coherent input `alpha_in = x_in + i p_in` with its teleported Gaussian
/// image of Q-function variances `sigma_x`, `sigma_p` and real gain `gain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub fidelity: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
    pub gain: f64,
    pub x_in: f64,
    pub p_in: f64,
}

pub fn fidelity_point(gain: f64, sigma_x: f64, sigma_p: f64, alpha_in: Complex64) -> Result<FidelityPoint> {
    let d = (1.0 - gain).powi(2);
    let fidelity = gaussian_fidelity(d, d, sigma_x, sigma_p, alpha_in)?;
    Ok(FidelityPoint {
        fidelity,
        sigma_x,
        sigma_p,
        gain,
        x_in: alpha_in.re,
        p_in: alpha_in.im,
    })
}

fn gaussian_fidelity(dx: f64, dp: f64, sigma_x: f64, sigma_p: f64, alpha: Complex64) -> Result<f64> {
    if !(sigma_x > 0.0) {
        return Err(invalid("sigma_x", sigma_x, "Q-function variance must be positive"));
    }
    if !(sigma_p > 0.0) {
        return Err(invalid("sigma_p", sigma_p, "Q-function variance must be positive"));
    }
    let exponent = dx * alpha.re * alpha.re / (2.0 * sigma_x) + dp * alpha.im * alpha.im / (2.0 * sigma_p);
    Ok((-exponent).exp() / (2.0 * (sigma_x * sigma_p).sqrt()))
}

/// Q-function variances `(sigma_x, sigma_p)` of the teleported mode for a coherent
/// input: the output state variance plus one vacuum unit, in absolute units.
pub fn q_variances(outcome: &TeleportOutcome) -> (f64, f64) {
    let coh = InputModel::coherent();
    let q = |e: &QuadExpansion, axis| 0.25 * (normalized_variance(e, &coh, axis) + 1.0);
    (q(&outcome.x_tel, Axis::X), q(&outcome.p_tel, Axis::P))
}

/// Coherent-state fidelity of a teleportation outcome. A complex per-quadrature gain
/// `c` displaces the mean by `(c - 1)` times the input, entering through `|1 - c|^2`.
pub fn outcome_fidelity(outcome: &TeleportOutcome, alpha_in: Complex64) -> Result<f64> {
    let (sx, sp) = q_variances(outcome);
    let one = Complex64::new(1.0, 0.0);
    let dx = (one - outcome.x_tel.input_coeff()).norm_sqr();
    let dp = (one - outcome.p_tel.input_coeff()).norm_sqr();
    gaussian_fidelity(dx, dp, sx, sp, alpha_in)
}

/// Unit-gain fidelity of a NOPA source with escape efficiency `beta` and detector
/// amplitude efficiency `eta`.
pub fn closed_form_fidelity(epsilon: f64, beta: f64, eta: f64, omega: f64) -> f64 {
    1.0 / (1.0 + closed_form_tel_in(epsilon, beta, eta, omega) / 2.0)
}

/// Unit-gain closed-form spectrum: `(omega, V_tel,in, V_tel,in, F)` rows.
pub fn closed_form_spectrum(epsilon: f64, beta: f64, eta: f64, grid: &FrequencyGrid) -> SpectrumTable {
    let rows = grid
        .points()
        .into_iter()
        .map(|omega| {
            let v = closed_form_tel_in(epsilon, beta, eta, omega);
            SpectrumRow {
                omega,
                v_x: v,
                v_p: v,
                fidelity: 1.0 / (1.0 + v / 2.0),
            }
        })
        .collect();
    SpectrumTable::new(rows)
}

fn spectrum_row(
    src: &SqueezerSpectrum,
    gain: &GainSchedule,
    det: &BellDetector,
    alpha_in: Complex64,
    omega: f64,
) -> Result<SpectrumRow> {
    match teleport(src, gain, det, omega) {
        Ok(out) => {
            let coh = InputModel::coherent();
            Ok(SpectrumRow {
                omega,
                v_x: difference_variance(&out.x_tel, &coh, Axis::X),
                v_p: difference_variance(&out.p_tel, &coh, Axis::P),
                fidelity: outcome_fidelity(&out, alpha_in)?,
            })
        }
        // the divergent anti-squeezed amplitudes cancel at unit gain; use the limit
        Err(Error::AtThreshold { .. }) if gain.at(omega) == Complex64::new(1.0, 0.0) => {
            let (epsilon, beta) = src.nopa_point().ok_or(Error::AtThreshold {
                epsilon: f64::NAN,
                omega,
            })?;
            let v = closed_form_tel_in(epsilon, beta, det.eta(), omega);
            Ok(SpectrumRow {
                omega,
                v_x: v,
                v_p: v,
                fidelity: 1.0 / (1.0 + v / 2.0),
            })
        }
        Err(e) => Err(e),
    }
}

/// Teleportation spectrum from the operator pipeline: `V_tel,in` per quadrature and the
/// coherent-state fidelity for input amplitude `alpha_in` (irrelevant at unit gain).
/// Rows are evaluated in parallel on the current rayon pool and returned in ascending
/// frequency.
pub fn fidelity_spectrum(
    src: &SqueezerSpectrum,
    gain: &GainSchedule,
    det: &BellDetector,
    alpha_in: Complex64,
    grid: &FrequencyGrid,
) -> Result<SpectrumTable> {
    let rows = grid
        .points()
        .into_par_iter()
        .map(|omega| spectrum_row(src, gain, det, alpha_in, omega))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable::new(rows))
}

/// Search settings for [`bandwidth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthSearch {
    pub threshold: f64,
    pub omega_max: f64,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for BandwidthSearch {
    fn default() -> Self {
        BandwidthSearch {
            threshold: DEFAULT_BANDWIDTH_THRESHOLD,
            omega_max: 200.0,
            step: 0.05,
            tolerance: 1e-6,
        }
    }
}

impl BandwidthSearch {
    pub fn with_threshold(threshold: f64) -> Self {
        BandwidthSearch {
            threshold,
            ..Self::default()
        }
    }
}

/// Full width `2 omega_max` of the band where `fidelity(omega) >= threshold`, for a
/// spectrum that decreases in `|omega|`. The crossing is bracketed on a grid and then
/// bisected. Returns 0 when the threshold is not reached at `omega = 0` and infinity if
/// it is still met at the end of the search range.
pub fn bandwidth(fidelity: impl Fn(f64) -> Result<f64>, search: &BandwidthSearch) -> Result<f64> {
    let thr = search.threshold;
    if fidelity(0.0)? < thr {
        return Ok(0.0);
    }
    let n = (search.omega_max / search.step).ceil() as usize;
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=n {
        let w = k as f64 * search.step;
        if fidelity(w)? >= thr {
            lo = w;
        } else {
            hi = Some(w);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return Ok(f64::INFINITY);
    };
    while hi - lo > search.tolerance {
        let mid = 0.5 * (lo + hi);
        if fidelity(mid)? >= thr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + hi)
}

/// Bandwidth of unit-gain teleportation through `src` with detector `det`.
pub fn teleport_bandwidth(src: &SqueezerSpectrum, det: &BellDetector, search: &BandwidthSearch) -> Result<f64> {
    bandwidth(
        |w| Ok(spectrum_row(src, &GainSchedule::Unit, det, Complex64::new(0.0, 0.0), w)?.fidelity),
        search,
    )
}

/// Boundary verdicts of a [`CriteriaReport`]; `true` means the classical limit is beaten.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub product: bool,
    pub sum: bool,
    pub out_product: bool,
    pub conditional_variance: bool,
    pub transfer: bool,
    /// Both Ralph-Lam limits beaten simultaneously.
    pub ralph_lam: bool,
    pub fidelity: bool,
    /// Non-unit gain: the fidelity averaged over the whole phase plane vanishes.
    pub average_fidelity_vanishes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub v_tel_in_x: f64,
    pub v_tel_in_p: f64,
    pub v_product: f64,
    pub v_sum: f64,
    pub v_out_x: f64,
    pub v_out_p: f64,
    pub v_out_product: f64,
    pub ralph_lam: RalphLam,
    pub fidelity: f64,
    pub unit_gain: bool,
    pub verdicts: Verdicts,
}

impl CriteriaReport {
    /// Verdicts recomputed from the stored values.
    pub fn recompute_verdicts(&self) -> Verdicts {
        let conditional_variance = self.ralph_lam.conditional_sum() < CONDITIONAL_SUM_LIMIT;
        let transfer = self.ralph_lam.transfer_sum() > TRANSFER_SUM_LIMIT;
        Verdicts {
            product: self.v_product < PRODUCT_LIMIT,
            sum: self.v_sum < SUM_LIMIT,
            out_product: self.v_out_product < OUT_PRODUCT_LIMIT,
            conditional_variance,
            transfer,
            ralph_lam: conditional_variance && transfer,
            fidelity: self.fidelity > FIDELITY_LIMIT,
            average_fidelity_vanishes: !self.unit_gain,
        }
    }
}

/// Evaluates every boundary for a teleportation outcome. Variances use `in_model`; the
/// fidelity is for a coherent input of amplitude `alpha_in`.
pub fn criteria_report(outcome: &TeleportOutcome, in_model: &InputModel, alpha_in: Complex64) -> Result<CriteriaReport> {
    let v_tel_in_x = difference_variance(&outcome.x_tel, in_model, Axis::X);
    let v_tel_in_p = difference_variance(&outcome.p_tel, in_model, Axis::P);
    let v_out_x = normalized_variance(&outcome.x_tel, in_model, Axis::X);
    let v_out_p = normalized_variance(&outcome.p_tel, in_model, Axis::P);
    let mut report = CriteriaReport {
        v_tel_in_x,
        v_tel_in_p,
        v_product: v_tel_in_x * v_tel_in_p,
        v_sum: v_tel_in_x + v_tel_in_p,
        v_out_x,
        v_out_p,
        v_out_product: v_out_x * v_out_p,
        ralph_lam: ralph_lam(&outcome.x_tel, &outcome.p_tel, in_model),
        fidelity: outcome_fidelity(outcome, alpha_in)?,
        unit_gain: outcome.is_unit_gain(),
        verdicts: Verdicts {
            product: false,
            sum: false,
            out_product: false,
            conditional_variance: false,
            transfer: false,
            ralph_lam: false,
            fidelity: false,
            average_fidelity_vanishes: false,
        },
    };
    report.verdicts = report.recompute_verdicts();
    Ok(report)
}
