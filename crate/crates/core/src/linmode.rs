//! Linear quadrature algebra over independent vacuum modes.
//!
//! Every field quadrature produced by the protocols is a linear combination of the
//! signal quadrature and a finite set of independent vacuum quadratures, each with a
//! complex weight. Second moments follow directly from the weights: in units of the
//! vacuum variance (1/4) each vacuum quadrature contributes `|c|^2` and distinct modes
//! are uncorrelated. Spectral (delta-normalized) variances are represented by these
//! per-frequency numbers without the delta factor.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Absolute variance of a vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.25;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    P,
}

impl Axis {
    pub fn conjugate(self) -> Axis {
        match self {
            Axis::X => Axis::P,
            Axis::P => Axis::X,
        }
    }
}

/// Name of one independent vacuum mode. Equality is by name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisLabel(String);

impl BasisLabel {
    pub fn new(name: impl Into<String>) -> Self {
        BasisLabel(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BasisLabel {
    fn from(s: &str) -> Self {
        BasisLabel::new(s)
    }
}

/// A quadrature operator written as `input_coeff * Q_in + sum_k c_k * V_k`, where the
/// `V_k` are X or P quadratures of independent vacuum modes.
///
/// Entries with an exactly-zero coefficient are dropped; nothing else is pruned.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadExpansion {
    input: Complex64,
    terms: BTreeMap<(BasisLabel, Axis), Complex64>,
}

impl QuadExpansion {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `coeff` times the signal quadrature, no vacuum terms.
    pub fn input(coeff: impl Into<Complex64>) -> Self {
        QuadExpansion {
            input: coeff.into(),
            terms: BTreeMap::new(),
        }
    }

    /// Unit-weight quadrature of a single vacuum mode.
    pub fn vacuum(label: impl Into<BasisLabel>, axis: Axis) -> Self {
        Self::zero().with_term(label, axis, ONE)
    }

    /// Adds `coeff` to the weight of `(label, axis)`.
    pub fn with_term(
        mut self,
        label: impl Into<BasisLabel>,
        axis: Axis,
        coeff: impl Into<Complex64>,
    ) -> Self {
        self.accumulate((label.into(), axis), coeff.into());
        self
    }

    pub fn with_input(mut self, coeff: impl Into<Complex64>) -> Self {
        self.input += coeff.into();
        self
    }

    fn accumulate(&mut self, key: (BasisLabel, Axis), coeff: Complex64) {
        let entry = self.terms.entry(key.clone()).or_insert(ZERO);
        *entry += coeff;
        if *entry == ZERO {
            // exact cancellation only
            self.terms.remove(&key);
        }
    }

    pub fn input_coeff(&self) -> Complex64 {
        self.input
    }

    pub fn coeff(&self, label: &BasisLabel, axis: Axis) -> Complex64 {
        self.terms
            .get(&(label.clone(), axis))
            .copied()
            .unwrap_or(ZERO)
    }

    /// Coefficient lookup by plain name.
    pub fn coeff_of(&self, label: &str, axis: Axis) -> Complex64 {
        self.coeff(&BasisLabel::new(label), axis)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisLabel, Axis, Complex64)> + '_ {
        self.terms.iter().map(|((l, a), c)| (l, *a, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// True when no vacuum mode contributes.
    pub fn is_noiseless(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.input == ZERO && self.terms.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &BasisLabel> + '_ {
        self.terms.keys().map(|(l, _)| l)
    }

    /// True if any weight carries a nonzero imaginary part.
    pub fn has_complex_coeffs(&self) -> bool {
        self.input.im != 0.0 || self.terms.values().any(|c| c.im != 0.0)
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        combine(self, &Self::zero(), s.into(), ZERO)
    }

    /// Replaces the vacuum quadrature `(label, axis)` by `replacement`, i.e. rewrites
    /// the expansion in a different vacuum basis.
    pub fn substitute(&self, label: &BasisLabel, axis: Axis, replacement: &QuadExpansion) -> Self {
        let key = (label.clone(), axis);
        let Some(&c) = self.terms.get(&key) else {
            return self.clone();
        };
        let mut rest = self.clone();
        rest.terms.remove(&key);
        combine(&rest, replacement, ONE, c)
    }

    /// Prefixes every basis label, so expansions from two copies of the same source
    /// stay on disjoint bases.
    pub fn relabel(&self, f: impl Fn(&BasisLabel) -> BasisLabel) -> Self {
        let mut out = QuadExpansion::input(self.input);
        for ((l, a), c) in &self.terms {
            out.accumulate((f(l), *a), *c);
        }
        out
    }
}

/// Returns `ca * a + cb * b`, coefficient-wise including the signal weight.
pub fn combine(a: &QuadExpansion, b: &QuadExpansion, ca: Complex64, cb: Complex64) -> QuadExpansion {
    let mut out = QuadExpansion {
        input: ca * a.input + cb * b.input,
        terms: BTreeMap::new(),
    };
    for (k, c) in &a.terms {
        out.terms.insert(k.clone(), ca * c);
    }
    for (k, c) in &b.terms {
        let e = out.terms.entry(k.clone()).or_insert(ZERO);
        *e += cb * c;
    }
    out.terms.retain(|_, c| *c != ZERO);
    out
}

impl Add for QuadExpansion {
    type Output = QuadExpansion;
    fn add(self, rhs: QuadExpansion) -> QuadExpansion {
        combine(&self, &rhs, ONE, ONE)
    }
}

impl Sub for QuadExpansion {
    type Output = QuadExpansion;
    fn sub(self, rhs: QuadExpansion) -> QuadExpansion {
        combine(&self, &rhs, ONE, -ONE)
    }
}

impl Neg for QuadExpansion {
    type Output = QuadExpansion;
    fn neg(self) -> QuadExpansion {
        self.scale(-ONE)
    }
}

impl Mul<Complex64> for QuadExpansion {
    type Output = QuadExpansion;
    fn mul(self, rhs: Complex64) -> QuadExpansion {
        self.scale(rhs)
    }
}

impl Mul<f64> for QuadExpansion {
    type Output = QuadExpansion;
    fn mul(self, rhs: f64) -> QuadExpansion {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// The set of states the signal is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InputFamily {
    Coherent,
    /// Minimum-uncertainty squeezed input with parameter `s_v`: X variance `s_v^-2`,
    /// P variance `s_v^2`.
    Squeezed(f64),
    /// Arbitrary variances supplied directly.
    Symbolic,
}

/// Signal-quadrature variances, normalized to the vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputModel {
    pub family: InputFamily,
    pub v_x: f64,
    pub v_p: f64,
}

impl InputModel {
    pub fn coherent() -> Self {
        InputModel {
            family: InputFamily::Coherent,
            v_x: 1.0,
            v_p: 1.0,
        }
    }

    pub fn squeezed(s_v: f64) -> Result<Self> {
        if !(s_v > 0.0 && s_v.is_finite()) {
            return Err(invalid("s_v", s_v, "must be positive and finite"));
        }
        Ok(InputModel {
            family: InputFamily::Squeezed(s_v),
            v_x: s_v.powi(-2),
            v_p: s_v * s_v,
        })
    }

    pub fn symbolic(v_x: f64, v_p: f64) -> Result<Self> {
        if !(v_x >= 0.0 && v_x.is_finite()) {
            return Err(invalid("v_x", v_x, "must be non-negative and finite"));
        }
        if !(v_p >= 0.0 && v_p.is_finite()) {
            return Err(invalid("v_p", v_p, "must be non-negative and finite"));
        }
        Ok(InputModel {
            family: InputFamily::Symbolic,
            v_x,
            v_p,
        })
    }

    pub fn variance(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.v_x,
            Axis::P => self.v_p,
        }
    }
}

impl Default for InputModel {
    fn default() -> Self {
        Self::coherent()
    }
}

/// Variance of `e` in vacuum units.
pub fn normalized_variance(e: &QuadExpansion, in_model: &InputModel, axis: Axis) -> f64 {
    let noise: f64 = e.terms.values().map(|c| c.norm_sqr()).sum();
    e.input.norm_sqr() * in_model.variance(axis) + noise
}

/// Variance of `out - Q_in` in vacuum units.
pub fn difference_variance(out: &QuadExpansion, in_model: &InputModel, axis: Axis) -> f64 {
    let diff = QuadExpansion {
        input: out.input - ONE,
        terms: out.terms.clone(),
    };
    normalized_variance(&diff, in_model, axis)
}

/// Symmetrized covariance of two same-axis expansions in vacuum units.
pub fn covariance(a: &QuadExpansion, b: &QuadExpansion, in_model: &InputModel, axis: Axis) -> f64 {
    let signal = (a.input.conj() * b.input).re * in_model.variance(axis);
    let noise: f64 = a
        .terms
        .iter()
        .filter_map(|(k, ca)| b.terms.get(k).map(|cb| (ca.conj() * cb).re))
        .sum();
    signal + noise
}

/// `[x, p^dagger]` in units of `i/2`. A canonical pair gives exactly 1.
pub fn commutator_pairing(x: &QuadExpansion, p: &QuadExpansion) -> Complex64 {
    let mut acc = x.input * p.input.conj();
    for ((label, axis), a) in &x.terms {
        let partner = (label.clone(), axis.conjugate());
        if let Some(d) = p.terms.get(&partner) {
            match axis {
                Axis::X => acc += a * d.conj(),
                Axis::P => acc -= a * d.conj(),
            }
        }
    }
    acc
}
