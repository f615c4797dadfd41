//! Squeezing transfer functions and EPR resources.
//!
//! The canonical parameterization is dimensionless: pump amplitude `epsilon`
//! (`2 kappa / (gamma + rho)`), modulation frequency `omega` (`2 Omega / (gamma + rho)`)
//! and escape efficiency `beta` (`gamma / (gamma + rho)`). Physical rates are accepted
//! through [`NopaParams`] and converted.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linmode::{Axis, BasisLabel, QuadExpansion};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Physical parameters of a nondegenerate parametric amplifier below threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NopaParams {
    /// Pump-dressed coupling rate.
    pub kappa: f64,
    /// Output-coupler damping rate.
    pub gamma: f64,
    /// Intracavity loss rate.
    pub rho: f64,
}

impl NopaParams {
    pub fn new(kappa: f64, gamma: f64, rho: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", gamma, "damping rate must be positive"));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(invalid("rho", rho, "loss rate must be non-negative"));
        }
        if !(kappa >= 0.0) {
            return Err(invalid("kappa", kappa, "coupling must be non-negative"));
        }
        if kappa >= (gamma + rho) / 2.0 {
            return Err(invalid(
                "kappa",
                kappa,
                "at or above threshold (kappa >= (gamma + rho)/2)",
            ));
        }
        Ok(NopaParams { kappa, gamma, rho })
    }

    /// `(gamma + rho) / 2`, the frequency scale of the dimensionless variables.
    pub fn half_linewidth(&self) -> f64 {
        (self.gamma + self.rho) / 2.0
    }

    pub fn epsilon(&self) -> f64 {
        self.kappa / self.half_linewidth()
    }

    pub fn beta(&self) -> f64 {
        self.gamma / (self.gamma + self.rho)
    }

    /// Normalizes a physical modulation frequency.
    pub fn omega(&self, big_omega: f64) -> f64 {
        big_omega / self.half_linewidth()
    }

    pub fn dimensionless(&self, big_omega: f64) -> NopaDimensionless {
        NopaDimensionless {
            epsilon: self.epsilon(),
            omega: self.omega(big_omega),
            beta: self.beta(),
        }
    }
}

/// A normalized operating point: pump amplitude, modulation frequency and escape
/// efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NopaDimensionless {
    pub epsilon: f64,
    pub omega: f64,
    pub beta: f64,
}

impl NopaDimensionless {
    pub fn new(epsilon: f64, omega: f64, beta: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_beta(beta)?;
        if !omega.is_finite() {
            return Err(invalid("omega", omega, "must be finite"));
        }
        Ok(NopaDimensionless {
            epsilon,
            omega,
            beta,
        })
    }

    /// Recovers physical rates given the damping rate `gamma`. Returns the parameters
    /// and the physical modulation frequency.
    pub fn to_params(&self, gamma: f64) -> Result<(NopaParams, f64)> {
        let total = gamma / self.beta;
        let p = NopaParams::new(self.epsilon * total / 2.0, gamma, total - gamma)?;
        Ok((p, self.omega * total / 2.0))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid("epsilon", epsilon, "must lie in [0, 1]"));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid("beta", beta, "escape efficiency must lie in (0, 1]"));
    }
    Ok(())
}

/// Input-output amplitudes of a (possibly lossy) NOPA at one frequency:
/// `B_j = G B0_j + g B0_k^dag + Gbar C0_j + gbar C0_k^dag`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NopaTransfer {
    pub big_g: Complex64,
    pub small_g: Complex64,
    pub loss_big_g: Complex64,
    pub loss_small_g: Complex64,
}

impl NopaTransfer {
    /// Signal-mode part of the quiet and noisy quadrature amplitudes, `G -/+ g`.
    pub fn pair(&self) -> TransferPair {
        TransferPair {
            s_plus: self.big_g + self.small_g,
            s_minus: self.big_g - self.small_g,
        }
    }

    /// Loss-mode part, `Gbar -/+ gbar`.
    pub fn loss_pair(&self) -> TransferPair {
        TransferPair {
            s_plus: self.loss_big_g + self.loss_small_g,
            s_minus: self.loss_big_g - self.loss_small_g,
        }
    }
}

/// Transfer amplitudes from physical rates at physical frequency `big_omega`.
pub fn nopa_transfer(p: &NopaParams, big_omega: f64) -> Result<NopaTransfer> {
    let NopaParams { kappa, gamma, rho } = *p;
    if kappa >= (gamma + rho) / 2.0 {
        return Err(invalid("kappa", kappa, "at or above threshold"));
    }
    let half = re((gamma + rho) / 2.0) - I * big_omega;
    let den = half * half - kappa * kappa;
    if den.norm() == 0.0 {
        return Err(Error::AtThreshold {
            epsilon: p.epsilon(),
            omega: p.omega(big_omega),
        });
    }
    let loss = (gamma * rho).sqrt();
    Ok(NopaTransfer {
        big_g: (re(kappa * kappa) + (re((gamma - rho) / 2.0) + I * big_omega) * half) / den,
        small_g: re(kappa * gamma) / den,
        loss_big_g: half * loss / den,
        loss_small_g: re(kappa * loss) / den,
    })
}

/// Transfer amplitudes in dimensionless form, all rates scaled by `(gamma + rho)/2`.
pub fn nopa_transfer_dimensionless(epsilon: f64, beta: f64, omega: f64) -> Result<NopaTransfer> {
    check_epsilon(epsilon)?;
    check_beta(beta)?;
    let half = re(1.0) - I * omega;
    let den = half * half - epsilon * epsilon;
    if den.norm() == 0.0 {
        return Err(Error::AtThreshold { epsilon, omega });
    }
    let loss = 2.0 * (beta * (1.0 - beta)).sqrt();
    Ok(NopaTransfer {
        big_g: (re(epsilon * epsilon) + (re(2.0 * beta - 1.0) + I * omega) * half) / den,
        small_g: re(2.0 * beta * epsilon) / den,
        loss_big_g: half * loss / den,
        loss_small_g: re(epsilon * loss) / den,
    })
}

/// Noisy (`s_plus`) and quiet (`s_minus`) quadrature amplitudes at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferPair {
    pub s_plus: Complex64,
    pub s_minus: Complex64,
}

impl TransferPair {
    pub fn new(s_plus: Complex64, s_minus: Complex64) -> Self {
        TransferPair { s_plus, s_minus }
    }

    /// `Re(S+ conj(S-))`; equals 1 for any lossless squeezer.
    pub fn bogoliubov(&self) -> f64 {
        (self.s_plus * self.s_minus.conj()).re
    }

    pub fn conj(&self) -> Self {
        TransferPair {
            s_plus: self.s_plus.conj(),
            s_minus: self.s_minus.conj(),
        }
    }
}

/// `(|S+|^2, |S-|^2)` of a lossless NOPA in closed form.
pub fn squeezing_spectrum(epsilon: f64, omega: f64) -> Result<(f64, f64)> {
    check_epsilon(epsilon)?;
    let noisy_den = (epsilon - 1.0).powi(2) + omega * omega;
    if noisy_den == 0.0 && epsilon > 0.0 {
        return Err(Error::AtThreshold { epsilon, omega });
    }
    let quiet = 1.0 - 4.0 * epsilon / ((epsilon + 1.0).powi(2) + omega * omega);
    let noisy = if epsilon == 0.0 {
        1.0
    } else {
        1.0 + 4.0 * epsilon / noisy_den
    };
    Ok((noisy, quiet))
}

/// Quiet-quadrature power of a lossy NOPA, `1 - 4 eps beta / ((eps+1)^2 + w^2)`.
pub fn lossy_quiet_spectrum(epsilon: f64, beta: f64, omega: f64) -> f64 {
    1.0 - 4.0 * epsilon * beta / ((epsilon + 1.0).powi(2) + omega * omega)
}

/// One tabulated frequency of a custom source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomRow {
    pub omega: f64,
    pub s_plus_re: f64,
    pub s_plus_im: f64,
    pub s_minus_re: f64,
    pub s_minus_im: f64,
}

impl CustomRow {
    fn pair(&self) -> TransferPair {
        TransferPair::new(
            Complex64::new(self.s_plus_re, self.s_plus_im),
            Complex64::new(self.s_minus_re, self.s_minus_im),
        )
    }
}

/// Tabulated squeezer, linearly interpolated on the real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomSpectrum {
    rows: Vec<CustomRow>,
}

impl CustomSpectrum {
    pub fn new(rows: Vec<CustomRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Table("no rows".into()));
        }
        for r in &rows {
            let vals = [r.omega, r.s_plus_re, r.s_plus_im, r.s_minus_re, r.s_minus_im];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Table(format!("non-finite entry at omega = {}", r.omega)));
            }
        }
        if rows.windows(2).any(|w| w[1].omega <= w[0].omega) {
            return Err(Error::Table("omega column must be strictly increasing".into()));
        }
        Ok(CustomSpectrum { rows })
    }

    /// Reads CSV with header `omega,s_plus_re,s_plus_im,s_minus_re,s_minus_im`.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let expected = ["omega", "s_plus_re", "s_plus_im", "s_minus_re", "s_minus_im"];
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(expected.iter().copied()) {
            return Err(Error::Table(format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows = rdr.deserialize().collect::<Result<Vec<CustomRow>, _>>()?;
        Self::new(rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn rows(&self) -> &[CustomRow] {
        &self.rows
    }

    pub fn range(&self) -> (f64, f64) {
        (self.rows[0].omega, self.rows[self.rows.len() - 1].omega)
    }

    pub fn pair_at(&self, omega: f64) -> Result<TransferPair> {
        let (min, max) = self.range();
        if !(omega >= min && omega <= max) {
            return Err(Error::OutOfRange { omega, min, max });
        }
        let hi = self.rows.partition_point(|r| r.omega < omega);
        let upper = &self.rows[hi];
        if upper.omega == omega || hi == 0 {
            return Ok(upper.pair());
        }
        let lower = &self.rows[hi - 1];
        let t = (omega - lower.omega) / (upper.omega - lower.omega);
        let (a, b) = (lower.pair(), upper.pair());
        let lerp = |x: Complex64, y: Complex64| {
            Complex64::new(x.re + t * (y.re - x.re), x.im + t * (y.im - x.im))
        };
        Ok(TransferPair::new(lerp(a.s_plus, b.s_plus), lerp(a.s_minus, b.s_minus)))
    }
}

/// A broadband squeezed source, queried per dimensionless frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SqueezerSpectrum {
    NopaLossless { epsilon: f64 },
    NopaLossy { epsilon: f64, beta: f64 },
    /// Frequency-independent squeezing `S+ = e^r`, `S- = e^-r`.
    ZeroBandwidth { r: f64 },
    Custom(CustomSpectrum),
}

impl SqueezerSpectrum {
    pub fn nopa(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(SqueezerSpectrum::NopaLossless { epsilon })
    }

    /// Lossy NOPA; `beta = 1` still selects the lossy input-output model (whose loss
    /// amplitudes then vanish).
    pub fn nopa_lossy(epsilon: f64, beta: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_beta(beta)?;
        Ok(SqueezerSpectrum::NopaLossy { epsilon, beta })
    }

    pub fn zero_bandwidth(r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(invalid("r", r, "squeezing must be finite and non-negative"));
        }
        Ok(SqueezerSpectrum::ZeroBandwidth { r })
    }

    /// From physical rates: lossless model if `rho == 0`, lossy otherwise.
    pub fn from_params(p: &NopaParams) -> Self {
        if p.rho == 0.0 {
            SqueezerSpectrum::NopaLossless {
                epsilon: p.epsilon(),
            }
        } else {
            SqueezerSpectrum::NopaLossy {
                epsilon: p.epsilon(),
                beta: p.beta(),
            }
        }
    }

    /// `(epsilon, beta)` for NOPA sources.
    pub fn nopa_point(&self) -> Option<(f64, f64)> {
        match *self {
            SqueezerSpectrum::NopaLossless { epsilon } => Some((epsilon, 1.0)),
            SqueezerSpectrum::NopaLossy { epsilon, beta } => Some((epsilon, beta)),
            _ => None,
        }
    }

    pub fn is_lossless(&self) -> bool {
        !matches!(self, SqueezerSpectrum::NopaLossy { beta, .. } if *beta < 1.0)
    }

    /// Full input-output amplitudes, NOPA sources only.
    pub fn transfer(&self, omega: f64) -> Option<Result<NopaTransfer>> {
        match *self {
            SqueezerSpectrum::NopaLossless { epsilon } => {
                Some(nopa_transfer_dimensionless(epsilon, 1.0, omega))
            }
            SqueezerSpectrum::NopaLossy { epsilon, beta } => {
                Some(nopa_transfer_dimensionless(epsilon, beta, omega))
            }
            _ => None,
        }
    }

    /// Signal-mode amplitudes `(S+, S-)`. For a lossy NOPA these exclude the loss-mode
    /// contribution; see [`SqueezerSpectrum::power_spectrum`].
    pub fn s_pair(&self, omega: f64) -> Result<TransferPair> {
        match self {
            SqueezerSpectrum::NopaLossless { epsilon } => {
                let (e, w) = (*epsilon, omega);
                if e == 1.0 && w == 0.0 {
                    return Err(Error::AtThreshold {
                        epsilon: e,
                        omega: w,
                    });
                }
                let s_minus = (re(1.0 - e) + I * w) / (re(1.0 + e) - I * w);
                let s_plus = re((1.0 + e).powi(2) + w * w)
                    / ((re(1.0) - I * w) * (re(1.0) - I * w) - e * e);
                Ok(TransferPair::new(s_plus, s_minus))
            }
            SqueezerSpectrum::NopaLossy { epsilon, beta } => {
                Ok(nopa_transfer_dimensionless(*epsilon, *beta, omega)?.pair())
            }
            SqueezerSpectrum::ZeroBandwidth { r } => {
                Ok(TransferPair::new(re(r.exp()), re((-r).exp())))
            }
            SqueezerSpectrum::Custom(table) => table.pair_at(omega),
        }
    }

    /// Total noisy and quiet quadrature powers `(|S+|^2, |S-|^2)` in vacuum units,
    /// loss modes included.
    pub fn power_spectrum(&self, omega: f64) -> Result<(f64, f64)> {
        match self {
            SqueezerSpectrum::NopaLossless { epsilon } => squeezing_spectrum(*epsilon, omega),
            SqueezerSpectrum::NopaLossy { epsilon, beta } => {
                let t = nopa_transfer_dimensionless(*epsilon, *beta, omega)?;
                let (s, l) = (t.pair(), t.loss_pair());
                Ok((
                    s.s_plus.norm_sqr() + l.s_plus.norm_sqr(),
                    s.s_minus.norm_sqr() + l.s_minus.norm_sqr(),
                ))
            }
            _ => {
                let p = self.s_pair(omega)?;
                Ok((p.s_plus.norm_sqr(), p.s_minus.norm_sqr()))
            }
        }
    }
}

impl fmt::Display for SqueezerSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqueezerSpectrum::NopaLossless { epsilon } => write!(f, "nopa(epsilon={epsilon})"),
            SqueezerSpectrum::NopaLossy { epsilon, beta } => {
                write!(f, "nopa(epsilon={epsilon}, beta={beta})")
            }
            SqueezerSpectrum::ZeroBandwidth { r } => write!(f, "single-mode(r={r})"),
            SqueezerSpectrum::Custom(t) => {
                let (a, b) = t.range();
                write!(f, "custom({} rows, omega in [{a}, {b}])", t.rows().len())
            }
        }
    }
}

/// Quadratures of the two output modes of an EPR source.
#[derive(Debug, Clone, PartialEq)]
pub struct EprPair {
    pub x1: QuadExpansion,
    pub p1: QuadExpansion,
    pub x2: QuadExpansion,
    pub p2: QuadExpansion,
}

impl EprPair {
    pub fn relabel(&self, f: impl Fn(&BasisLabel) -> BasisLabel + Copy) -> Self {
        EprPair {
            x1: self.x1.relabel(f),
            p1: self.p1.relabel(f),
            x2: self.x2.relabel(f),
            p2: self.p2.relabel(f),
        }
    }
}

/// 50/50 beam splitter: `((a + b)/sqrt2, (a - b)/sqrt2)`.
pub fn beam_splitter(a: &QuadExpansion, b: &QuadExpansion) -> (QuadExpansion, QuadExpansion) {
    let h = re(FRAC_1_SQRT_2);
    (
        crate::linmode::combine(a, b, h, h),
        crate::linmode::combine(a, b, h, -h),
    )
}

/// Two independent squeezers, noisy in X (`first`) and in P (`second`), over the given
/// vacuum labels.
pub fn independent_squeezers(
    pair: TransferPair,
    first: &str,
    second: &str,
) -> (QuadExpansion, QuadExpansion, QuadExpansion, QuadExpansion) {
    (
        QuadExpansion::zero().with_term(first, Axis::X, pair.s_plus),
        QuadExpansion::zero().with_term(first, Axis::P, pair.s_minus),
        QuadExpansion::zero().with_term(second, Axis::X, pair.s_minus),
        QuadExpansion::zero().with_term(second, Axis::P, pair.s_plus),
    )
}

/// EPR pair from two squeezers recombined at a 50/50 splitter, over labels `first`,
/// `second` (the decoupled vacuum modes).
pub fn epr_from_pair(pair: TransferPair, first: &str, second: &str) -> EprPair {
    let (x_a, p_a, x_b, p_b) = independent_squeezers(pair, first, second);
    let (x1, x2) = beam_splitter(&x_a, &x_b);
    let (p1, p2) = beam_splitter(&p_a, &p_b);
    EprPair { x1, p1, x2, p2 }
}

/// Lossy-NOPA output quadratures over vacua `B0_1, B0_2` (labels `b1`, `b2`) and loss
/// vacua `C0_1, C0_2` (labels `c1`, `c2`).
pub fn epr_from_transfer(t: &NopaTransfer) -> EprPair {
    let mode = |own: &str, other: &str, own_c: &str, other_c: &str| {
        let x = QuadExpansion::zero()
            .with_term(own, Axis::X, t.big_g)
            .with_term(other, Axis::X, t.small_g)
            .with_term(own_c, Axis::X, t.loss_big_g)
            .with_term(other_c, Axis::X, t.loss_small_g);
        let p = QuadExpansion::zero()
            .with_term(own, Axis::P, t.big_g)
            .with_term(other, Axis::P, -t.small_g)
            .with_term(own_c, Axis::P, t.loss_big_g)
            .with_term(other_c, Axis::P, -t.loss_small_g);
        (x, p)
    };
    let (x1, p1) = mode("b1", "b2", "c1", "c2");
    let (x2, p2) = mode("b2", "b1", "c2", "c1");
    EprPair { x1, p1, x2, p2 }
}

/// EPR resource of `src` at dimensionless frequency `omega`. Lossless sources use the
/// decoupled basis `bar1`, `bar2`; lossy NOPAs use `b1`, `b2`, `c1`, `c2`.
pub fn make_epr_pair(src: &SqueezerSpectrum, omega: f64) -> Result<EprPair> {
    match src {
        SqueezerSpectrum::NopaLossy { epsilon, beta } => Ok(epr_from_transfer(
            &nopa_transfer_dimensionless(*epsilon, *beta, omega)?,
        )),
        _ => Ok(epr_from_pair(src.s_pair(omega)?, "bar1", "bar2")),
    }
}

/// EPR resource of a lossy NOPA from physical rates at physical frequency `big_omega`.
pub fn make_lossy_epr_pair(p: &NopaParams, big_omega: f64) -> Result<EprPair> {
    Ok(epr_from_transfer(&nopa_transfer(p, big_omega)?))
}

/// Rewrites an expansion over `b1`, `b2` in the decoupled basis `bar1 = (b1 + b2)/sqrt2`,
/// `bar2 = (b1 - b2)/sqrt2` (and likewise `c1`, `c2` into `cbar1`, `cbar2`).
pub fn to_decoupled_basis(e: &QuadExpansion) -> QuadExpansion {
    let h = FRAC_1_SQRT_2;
    let mut out = e.clone();
    for (one, two, bar1, bar2) in [("b1", "b2", "bar1", "bar2"), ("c1", "c2", "cbar1", "cbar2")] {
        for axis in [Axis::X, Axis::P] {
            let first = QuadExpansion::zero()
                .with_term(bar1, axis, h)
                .with_term(bar2, axis, h);
            let second = QuadExpansion::zero()
                .with_term(bar1, axis, h)
                .with_term(bar2, axis, -h);
            out = out.substitute(&one.into(), axis, &first);
            out = out.substitute(&two.into(), axis, &second);
        }
    }
    out
}
