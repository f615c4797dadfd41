//! Teleportation of one frequency component through a shared EPR resource.
//!
//! Alice mixes the input with EPR mode 1 and measures `X_u` and `P_v`; Bob displaces
//! EPR mode 2 by `Gamma * sqrt2/eta` times the measured values. The measured
//! quadratures are kept as classical symbols: Bob's mode is rewritten as a residual
//! minus `sqrt2/eta` times the measured value, so at unit gain the displacement cancels
//! it exactly, and otherwise the leftover `(Gamma - 1)` multiple is replaced by the
//! measured quadrature's own expansion (same second moments).

use std::f64::consts::SQRT_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::epr::{make_epr_pair, EprPair, SqueezerSpectrum};
use crate::error::{invalid, Result};
use crate::linmode::{difference_variance, Axis, InputModel, QuadExpansion};

/// Bob's feed-forward gain, possibly frequency dependent.
#[derive(Clone, Default)]
pub enum GainSchedule {
    #[default]
    Unit,
    Fixed(Complex64),
    PerFrequency(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl GainSchedule {
    pub fn fixed(gain: f64) -> Self {
        GainSchedule::Fixed(Complex64::new(gain, 0.0))
    }

    pub fn per_frequency(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        GainSchedule::PerFrequency(Arc::new(f))
    }

    pub fn at(&self, omega: f64) -> Complex64 {
        match self {
            GainSchedule::Unit => Complex64::new(1.0, 0.0),
            GainSchedule::Fixed(g) => *g,
            GainSchedule::PerFrequency(f) => f(omega),
        }
    }
}

impl fmt::Debug for GainSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainSchedule::Unit => f.write_str("Unit"),
            GainSchedule::Fixed(g) => write!(f, "Fixed({g})"),
            GainSchedule::PerFrequency(_) => f.write_str("PerFrequency(..)"),
        }
    }
}

/// Alice's homodyne pair with amplitude efficiency `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellDetector {
    eta: f64,
}

impl BellDetector {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid("eta", eta, "amplitude efficiency must lie in (0, 1]"));
        }
        Ok(BellDetector { eta })
    }

    /// From the power efficiency `eta^2`.
    pub fn from_power_efficiency(eta2: f64) -> Result<Self> {
        if !(eta2 > 0.0 && eta2 <= 1.0) {
            return Err(invalid("eta2", eta2, "power efficiency must lie in (0, 1]"));
        }
        Self::new(eta2.sqrt())
    }

    pub fn ideal() -> Self {
        BellDetector { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `sqrt((1 - eta^2)/eta^2)`, the weight of each detector vacuum after feed-forward.
    pub fn excess_amplitude(&self) -> f64 {
        ((1.0 - self.eta * self.eta) / (self.eta * self.eta)).sqrt()
    }
}

impl Default for BellDetector {
    fn default() -> Self {
        Self::ideal()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeleportMeta {
    pub source: String,
    pub gain: Complex64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportOutcome {
    pub x_tel: QuadExpansion,
    pub p_tel: QuadExpansion,
    pub omega: f64,
    pub meta: TeleportMeta,
}

impl TeleportOutcome {
    pub fn is_unit_gain(&self) -> bool {
        self.meta.gain == Complex64::new(1.0, 0.0)
    }
}

/// Measured quadratures `(X_u, P_v)` of Alice's Bell detection.
pub fn bell_measurement(
    x_in: &QuadExpansion,
    p_in: &QuadExpansion,
    alice: (&QuadExpansion, &QuadExpansion),
    det: &BellDetector,
    vacua: [&str; 4],
) -> (QuadExpansion, QuadExpansion) {
    let (x1, p1) = alice;
    let scale = det.eta / SQRT_2;
    let vac = ((1.0 - det.eta * det.eta) / 2.0).sqrt();
    let x_u = (x_in.clone() - x1.clone()) * scale
        + QuadExpansion::zero()
            .with_term(vacua[0], Axis::X, vac)
            .with_term(vacua[1], Axis::X, vac);
    let p_v = (p_in.clone() + p1.clone()) * scale
        + QuadExpansion::zero()
            .with_term(vacua[2], Axis::P, vac)
            .with_term(vacua[3], Axis::P, vac);
    (x_u, p_v)
}

/// Teleports the quadratures `(x_in, p_in)` onto EPR mode 2 of `pair`, returning Bob's
/// displaced mode. Detector vacua are labelled by `vacua` (`X_u` pair, then `P_v` pair).
pub fn teleport_through(
    x_in: &QuadExpansion,
    p_in: &QuadExpansion,
    pair: &EprPair,
    gain: Complex64,
    det: &BellDetector,
    vacua: [&str; 4],
) -> (QuadExpansion, QuadExpansion) {
    let (x_u, p_v) = bell_measurement(x_in, p_in, (&pair.x1, &pair.p1), det, vacua);
    let amp = det.excess_amplitude();
    // Bob's mode = residual - (sqrt2/eta) * measured
    let residual_x = x_in.clone() - (pair.x1.clone() - pair.x2.clone())
        + QuadExpansion::zero()
            .with_term(vacua[0], Axis::X, amp)
            .with_term(vacua[1], Axis::X, amp);
    let residual_p = p_in.clone()
        + (pair.p1.clone() + pair.p2.clone())
        + QuadExpansion::zero()
            .with_term(vacua[2], Axis::P, amp)
            .with_term(vacua[3], Axis::P, amp);
    let leftover = (gain - 1.0) * (SQRT_2 / det.eta);
    (
        residual_x + x_u * leftover,
        residual_p + p_v * leftover,
    )
}

/// Teleports an unknown signal quadrature pair through `src` at dimensionless
/// frequency `omega`.
pub fn teleport(
    src: &SqueezerSpectrum,
    gain: &GainSchedule,
    det: &BellDetector,
    omega: f64,
) -> Result<TeleportOutcome> {
    let pair = make_epr_pair(src, omega)?;
    let g = gain.at(omega);
    if !(g.re.is_finite() && g.im.is_finite()) {
        return Err(invalid("gain", g.norm(), "must be finite"));
    }
    let (x_tel, p_tel) = teleport_through(
        &QuadExpansion::input(1.0),
        &QuadExpansion::input(1.0),
        &pair,
        g,
        det,
        ["d", "e", "f", "g"],
    );
    Ok(TeleportOutcome {
        x_tel,
        p_tel,
        omega,
        meta: TeleportMeta {
            source: src.to_string(),
            gain: g,
            eta: det.eta,
        },
    })
}

/// Zero-bandwidth protocol with squeezing `r` and real gain.
pub fn teleport_single_mode(r: f64, gain: f64) -> Result<TeleportOutcome> {
    teleport(
        &SqueezerSpectrum::zero_bandwidth(r)?,
        &GainSchedule::fixed(gain),
        &BellDetector::ideal(),
        0.0,
    )
}

/// `V_tel,in` per quadrature. Only meaningful as an excess-noise measure at unit gain;
/// `unit_gain` is false otherwise and the values then include the `(Gamma - 1)` input term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelInVariance {
    pub v_x: f64,
    pub v_p: f64,
    pub unit_gain: bool,
}

pub fn spectral_variance_tel_in(outcome: &TeleportOutcome, in_model: &InputModel) -> TelInVariance {
    TelInVariance {
        v_x: difference_variance(&outcome.x_tel, in_model, Axis::X),
        v_p: difference_variance(&outcome.p_tel, in_model, Axis::P),
        unit_gain: outcome.is_unit_gain(),
    }
}

/// `V_tel,in` of the real and imaginary parts of the non-Hermitian spectral quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReImVariances {
    pub re_x: f64,
    pub re_p: f64,
    pub im_x: f64,
    pub im_p: f64,
}

/// Real/imaginary split of `c * O` for a spectral operator `O = Re O + i Im O`, whose
/// two parts are independent with variance 1/8 each (vacuum). Returns the variances of
/// the real and imaginary parts of `sum_k c_k O_k`, normalized by 1/8.
fn split_variances(diff_input: Complex64, v_in: f64, e: &QuadExpansion) -> (f64, f64) {
    const PART: f64 = 0.125;
    // (weight on Re O, weight on Im O, variance of O's parts)
    let mut re_terms: Vec<(f64, f64, f64)> = vec![(diff_input.re, -diff_input.im, PART * v_in)];
    let mut im_terms: Vec<(f64, f64, f64)> = vec![(diff_input.im, diff_input.re, PART * v_in)];
    for (_, _, c) in e.terms() {
        re_terms.push((c.re, -c.im, PART));
        im_terms.push((c.im, c.re, PART));
    }
    let var = |ts: &[(f64, f64, f64)]| ts.iter().map(|(a, b, v)| (a * a + b * b) * v).sum::<f64>();
    (var(&re_terms) / PART, var(&im_terms) / PART)
}

pub fn re_im_variances(outcome: &TeleportOutcome, in_model: &InputModel) -> ReImVariances {
    let one = Complex64::new(1.0, 0.0);
    let (re_x, im_x) = split_variances(outcome.x_tel.input_coeff() - one, in_model.v_x, &outcome.x_tel);
    let (re_p, im_p) = split_variances(outcome.p_tel.input_coeff() - one, in_model.v_p, &outcome.p_tel);
    ReImVariances {
        re_x,
        re_p,
        im_x,
        im_p,
    }
}

/// Unit-gain `V_tel,in` for a NOPA with escape efficiency `beta` and detector amplitude
/// efficiency `eta`, in closed form.
pub fn closed_form_tel_in(epsilon: f64, beta: f64, eta: f64, omega: f64) -> f64 {
    2.0 * (1.0 - 4.0 * epsilon * beta / ((epsilon + 1.0).powi(2) + omega * omega))
        + 2.0 * (1.0 - eta * eta) / (eta * eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmode::{commutator_pairing, normalized_variance};
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn classical_teleportation_costs_two_units() {
        let out = teleport_single_mode(0.0, 1.0).unwrap();
        let v = spectral_variance_tel_in(&out, &InputModel::coherent());
        assert_abs_diff_eq!(v.v_x, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.v_p, 2.0, epsilon = 1e-14);
        assert!(v.unit_gain);
    }

    #[test]
    fn strong_squeezing_is_nearly_perfect() {
        let out = teleport_single_mode(300.0, 1.0).unwrap();
        assert_eq!(out.x_tel.input_coeff(), c(1.0));
        assert_eq!(out.p_tel.input_coeff(), c(1.0));
        // the anti-squeezed (e^r) quadratures cancel exactly at unit gain
        assert_eq!(out.x_tel.coeff_of("bar1", Axis::X), c(0.0));
        assert_eq!(out.p_tel.coeff_of("bar2", Axis::P), c(0.0));
        let v = spectral_variance_tel_in(&out, &InputModel::coherent());
        assert!(v.v_x < 1e-200 && v.v_p < 1e-200);
    }

    #[test]
    fn unit_gain_matches_single_mode_form() {
        let r: f64 = 0.8;
        let out = teleport_single_mode(r, 1.0).unwrap();
        // x_tel = x_in - sqrt2 e^-r xbar2, p_tel = p_in + sqrt2 e^-r pbar1
        assert_abs_diff_eq!((out.x_tel.coeff_of("bar2", Axis::X) - c(-SQRT_2 * (-r).exp())).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((out.p_tel.coeff_of("bar1", Axis::P) - c(SQRT_2 * (-r).exp())).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(out.x_tel.num_terms(), 1);
        assert_eq!(out.p_tel.num_terms(), 1);
    }

    #[test]
    fn arbitrary_gain_coefficients() {
        let (r, g): (f64, f64) = (0.6, 0.35);
        let out = teleport_single_mode(r, g).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            (&out.x_tel, "bar1", Axis::X, -(g - 1.0) * h * r.exp()),
            (&out.x_tel, "bar2", Axis::X, -(g + 1.0) * h * (-r).exp()),
            (&out.p_tel, "bar2", Axis::P, (g - 1.0) * h * r.exp()),
            (&out.p_tel, "bar1", Axis::P, (g + 1.0) * h * (-r).exp()),
        ];
        for (e, label, axis, want) in expect {
            assert_abs_diff_eq!((e.coeff_of(label, axis) - c(want)).norm(), 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!((out.x_tel.input_coeff() - c(g)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_gain_output_is_bob_mode() {
        let r: f64 = 0.0;
        let out = teleport_single_mode(r, 0.0).unwrap();
        let v = normalized_variance(&out.x_tel, &InputModel::coherent(), Axis::X);
        // ((G-1)^2/2) e^2r + ((G+1)^2/2) e^-2r at G = 0
        assert_abs_diff_eq!(v, 0.5 * (2.0 * r).exp() + 0.5 * (-2.0 * r).exp(), epsilon = 1e-14);
        assert_eq!(out.x_tel.input_coeff(), c(0.0));
    }

    #[test]
    fn detector_vacua_enter_at_unit_gain() {
        let det = BellDetector::from_power_efficiency(0.97).unwrap();
        let src = SqueezerSpectrum::nopa_lossy(0.77, 0.9).unwrap();
        let out = teleport(&src, &GainSchedule::Unit, &det, 0.56).unwrap();
        let amp = det.excess_amplitude();
        for (e, label, axis) in [
            (&out.x_tel, "d", Axis::X),
            (&out.x_tel, "e", Axis::X),
            (&out.p_tel, "f", Axis::P),
            (&out.p_tel, "g", Axis::P),
        ] {
            assert_abs_diff_eq!((e.coeff_of(label, axis) - c(amp)).norm(), 0.0, epsilon = 1e-15);
        }
        let v = spectral_variance_tel_in(&out, &InputModel::coherent());
        assert_abs_diff_eq!(v.v_x, closed_form_tel_in(0.77, 0.9, det.eta(), 0.56), epsilon = 1e-12);
        assert_abs_diff_eq!(v.v_x, 0.453, epsilon = 1e-3);
        assert_abs_diff_eq!(v.v_x, v.v_p, epsilon = 1e-12);
    }

    #[test]
    fn ideal_source_limits() {
        let src = SqueezerSpectrum::nopa(1.0).unwrap();
        let v = spectral_variance_tel_in(
            &teleport(&src, &GainSchedule::Unit, &BellDetector::ideal(), 2.0).unwrap(),
            &InputModel::coherent(),
        );
        // 2 w^2/(4 + w^2) at w = 2
        assert_abs_diff_eq!(v.v_x, 1.0, epsilon = 1e-12);
        let none = SqueezerSpectrum::nopa(0.0).unwrap();
        for w in [0.0, 1.0, 9.0] {
            let v = spectral_variance_tel_in(
                &teleport(&none, &GainSchedule::Unit, &BellDetector::ideal(), w).unwrap(),
                &InputModel::coherent(),
            );
            assert_abs_diff_eq!(v.v_x, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn nonunit_gain_is_flagged() {
        let out = teleport_single_mode(0.5, 1.3).unwrap();
        assert!(!spectral_variance_tel_in(&out, &InputModel::coherent()).unit_gain);
    }

    #[test]
    fn eta_bounds() {
        assert!(BellDetector::new(0.0).is_err());
        assert!(BellDetector::new(1.01).is_err());
        assert!(BellDetector::from_power_efficiency(-0.1).is_err());
        assert_eq!(BellDetector::new(1.0).unwrap().excess_amplitude(), 0.0);
    }

    #[test]
    fn re_im_split_at_zero_frequency() {
        let out = teleport(
            &SqueezerSpectrum::nopa(0.4).unwrap(),
            &GainSchedule::Unit,
            &BellDetector::ideal(),
            0.0,
        )
        .unwrap();
        assert!(!out.x_tel.has_complex_coeffs());
        let ri = re_im_variances(&out, &InputModel::coherent());
        let v = spectral_variance_tel_in(&out, &InputModel::coherent());
        for x in [ri.re_x, ri.im_x, ri.re_p, ri.im_p] {
            assert_abs_diff_eq!(x, v.v_x, epsilon = 1e-13);
        }
    }

    #[test]
    fn per_frequency_gain_and_commutator() {
        let gain = GainSchedule::per_frequency(|w| Complex64::new(0.5 + 0.1 * w, 0.2));
        let src = SqueezerSpectrum::nopa(0.7).unwrap();
        let out = teleport(&src, &gain, &BellDetector::new(0.8).unwrap(), 1.5).unwrap();
        assert_eq!(out.meta.gain, Complex64::new(0.65, 0.2));
        let pairing = commutator_pairing(&out.x_tel, &out.p_tel);
        assert_abs_diff_eq!((pairing - 1.0).norm(), 0.0, epsilon = 1e-12);
    }
}
