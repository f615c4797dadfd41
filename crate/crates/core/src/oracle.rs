//! Independent checks of the operator algebra: a covariance-matrix simulator of
//! zero-bandwidth teleportation with explicit homodyne conditioning, and Monte-Carlo
//! sampling of linear combinations of vacuum noise.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::epr::SqueezerSpectrum;
use crate::error::{invalid, Result};
use crate::linmode::{covariance, normalized_variance, Axis, BasisLabel, InputModel, QuadExpansion, VACUUM_VARIANCE};
use crate::swap::{swap_once, SwapConfig, SwapGain};
use crate::teleport::{closed_form_tel_in, teleport, BellDetector, GainSchedule};

/// Gaussian state of `n` modes, quadratures ordered `x_0, p_0, x_1, p_1, ...`.
///
/// The covariance is held as `cov = factor factor^T / 4` (vacuum factor = identity).
/// Strong squeezing puts `e^{2r}` entries into the covariance whose cancellations are
/// lost in floating point; the factor only carries `e^r` and keeps them.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub factor: DMatrix<f64>,
}

impl GaussianState {
    pub fn vacuum(modes: usize) -> Self {
        GaussianState {
            mean: DVector::zeros(2 * modes),
            factor: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn cov(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose() * VACUUM_VARIANCE
    }

    pub fn displace(&mut self, mode: usize, alpha: Complex64) {
        self.mean[2 * mode] += alpha.re;
        self.mean[2 * mode + 1] += alpha.im;
    }

    /// Applies the linear map `S` to all quadratures.
    pub fn transform(&mut self, s: &DMatrix<f64>) {
        self.mean = s * &self.mean;
        self.factor = s * &self.factor;
    }

    /// Single-mode squeezer: `x -> e^r x`, `p -> e^-r p`.
    pub fn squeeze(&mut self, mode: usize, r: f64) {
        let mut s = DMatrix::identity(self.mean.len(), self.mean.len());
        s[(2 * mode, 2 * mode)] = r.exp();
        s[(2 * mode + 1, 2 * mode + 1)] = (-r).exp();
        self.transform(&s);
    }

    /// 50/50 splitter: `a -> (a + b)/sqrt2`, `b -> (a - b)/sqrt2`.
    pub fn beam_splitter(&mut self, a: usize, b: usize) {
        let n = self.mean.len();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut s = DMatrix::zeros(n, n);
        for k in 0..n {
            if k / 2 != a && k / 2 != b {
                s[(k, k)] = 1.0;
            }
        }
        for q in 0..2 {
            let (ia, ib) = (2 * a + q, 2 * b + q);
            s[(ia, ia)] = h;
            s[(ia, ib)] = h;
            s[(ib, ia)] = h;
            s[(ib, ib)] = -h;
        }
        self.transform(&s);
    }

    /// Regression of the unmeasured quadratures (all indices, measured rows zero) on
    /// the measured ones, `Sigma_RM Sigma_MM^-1`, and the orthonormal basis `Q` of the
    /// measured rows' span.
    fn regression(&self, indices: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let a_m = self.factor.select_rows(indices);
        let qr = a_m.transpose().qr();
        let (q, r) = (qr.q(), qr.r());
        // Sigma_MM = R^T R / 4, Sigma_RM = A Q R / 4, so K = A Q R^-T
        let r_t_inv = r
            .transpose()
            .try_inverse()
            .ok_or_else(|| invalid("measured covariance", 0.0, "singular"))?;
        let mut k = &self.factor * &q * r_t_inv;
        for &i in indices {
            k.row_mut(i).fill(0.0);
        }
        Ok((k, q))
    }

    /// Conditions on ideal homodyne outcomes `values` of the quadratures at `indices`.
    /// Measured quadratures become sharp: their factor rows are zeroed and their means
    /// set to the outcomes.
    pub fn condition_on(&self, indices: &[usize], values: &[f64]) -> Result<GaussianState> {
        let (k, q) = self.regression(indices)?;
        let mu_m = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.mean[i]));
        let shift = &k * (DVector::from_column_slice(values) - mu_m);
        let mut mean = &self.mean + shift;
        // project out the span of the measured rows
        let mut factor = &self.factor - &self.factor * &q * q.transpose();
        for (&i, &v) in indices.iter().zip(values) {
            mean[i] = v;
            factor.row_mut(i).fill(0.0);
        }
        Ok(GaussianState { mean, factor })
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let c = self.cov();
        (&c - c.transpose()).amax() <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.cov().symmetric_eigenvalues().min()
    }

    /// Mean and covariance of one mode.
    pub fn mode(&self, mode: usize) -> (Vector2<f64>, Matrix2<f64>) {
        let i = 2 * mode;
        let rows = self.factor.rows(i, 2);
        let c = &rows * rows.transpose() * VACUUM_VARIANCE;
        (
            Vector2::new(self.mean[i], self.mean[i + 1]),
            Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]),
        )
    }
}

/// Overlap `<alpha| rho |alpha>` of a coherent state with a one-mode Gaussian state.
pub fn coherent_overlap(mean: &Vector2<f64>, cov: &Matrix2<f64>, alpha: Complex64) -> f64 {
    let sigma_q = cov + Matrix2::identity() * VACUUM_VARIANCE;
    let delta = mean - Vector2::new(alpha.re, alpha.im);
    let inv = sigma_q.try_inverse().expect("Q-function covariance is positive definite");
    let quad = (delta.transpose() * inv * delta)[(0, 0)];
    (-0.5 * quad).exp() / (2.0 * sigma_q.determinant().sqrt())
}

/// Outcome-averaged teleported mode of the covariance simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTeleport {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    pub fidelity: f64,
}

/// Zero-bandwidth teleportation of the coherent state `alpha_in` with squeezing `r` and
/// real gain `gain`. Modes: 0 input, 1 Alice's EPR half, 2 Bob's. Bob's mode conditioned
/// on Alice's outcomes has a Gaussian law whose mean is linear in the outcomes, so the
/// displacement is averaged over the outcome distribution exactly.
pub fn covariance_teleport(r: f64, gain: f64, alpha_in: Complex64) -> Result<CovarianceTeleport> {
    let mut st = GaussianState::vacuum(3);
    st.displace(0, alpha_in);
    st.squeeze(1, r);
    st.squeeze(2, -r);
    st.beam_splitter(1, 2);
    // modes 0 and 1 now carry (x_in + x_1)/sqrt2 and (x_in - x_1)/sqrt2
    st.beam_splitter(0, 1);
    // measured: x of mode 1 and p of mode 0
    let measured = [2usize, 1usize];
    let mu_m = DVector::from_iterator(2, measured.iter().map(|&i| st.mean[i]));

    // conditional state at the mean outcome (the covariance does not depend on it)
    let cond = st.condition_on(&measured, mu_m.as_slice())?;
    let (k, _) = st.regression(&measured)?;
    let g = gain * SQRT_2;

    // Bob's output is his conditional mode plus (K + g) times the outcome fluctuation
    let a_m = st.factor.select_rows(&measured);
    let feed = k.rows(4, 2) * &a_m + a_m * g;
    let (mu_b, cov_cond) = cond.mode(2);
    let spread = &feed * feed.transpose() * VACUUM_VARIANCE;
    let mean = mu_b + Vector2::new(g * mu_m[0], g * mu_m[1]);
    let cov = cov_cond + Matrix2::new(spread[(0, 0)], spread[(0, 1)], spread[(1, 0)], spread[(1, 1)]);
    let fidelity = coherent_overlap(&mean, &cov, alpha_in);
    Ok(CovarianceTeleport { mean, cov, fidelity })
}

/// Monte-Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub sample_count: usize,
    pub seed: u64,
}

pub const MIN_SAMPLES: usize = 1000;
const BATCH: usize = 1 << 14;

impl McConfig {
    pub fn new(sample_count: usize, seed: u64) -> Result<Self> {
        if sample_count < MIN_SAMPLES {
            return Err(invalid("sample_count", sample_count as f64, "at least 1000 samples required"));
        }
        Ok(McConfig { sample_count, seed })
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            sample_count: 1_000_000,
            seed: 0x5eed,
        }
    }
}

/// Sample estimate of one variance (`i == j`) or covariance, in vacuum units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEntry {
    pub i: usize,
    pub j: usize,
    pub expected: f64,
    pub estimate: f64,
    pub std_error: f64,
}

impl McEntry {
    /// Deviation from the coefficient-based value in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.std_error == 0.0 {
            if self.estimate == self.expected {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - self.expected) / self.std_error
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub sample_count: usize,
    pub seed: u64,
    pub complex: bool,
    pub entries: Vec<McEntry>,
}

impl McReport {
    pub fn max_abs_z(&self) -> f64 {
        self.entries.iter().map(|e| e.z_score().abs()).fold(0.0, f64::max)
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.max_abs_z() <= sigmas
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

type Key = (Option<BasisLabel>, Axis);

/// Samples the quadratures `exprs` (each on its own axis) over independent vacuum
/// noise: each basis quadrature has variance 1/4, split evenly between independent real
/// and imaginary parts when any coefficient is complex; the signal quadratures carry
/// `in_model` variances. Returns every variance and same-axis covariance with its
/// standard error next to the value computed from the coefficients.
pub fn mc_check(exprs: &[(QuadExpansion, Axis)], in_model: &InputModel, cfg: &McConfig) -> McReport {
    let mut keys: BTreeMap<Key, usize> = BTreeMap::new();
    for (e, axis) in exprs {
        if e.input_coeff() != Complex64::new(0.0, 0.0) {
            let next = keys.len();
            keys.entry((None, *axis)).or_insert(next);
        }
        for (l, a, _) in e.terms() {
            let next = keys.len();
            keys.entry((Some(l.clone()), a)).or_insert(next);
        }
    }
    let sd: Vec<f64> = {
        let mut v = vec![0.0; keys.len()];
        for ((l, a), &k) in &keys {
            let var = match l {
                None => VACUUM_VARIANCE * in_model.variance(*a),
                Some(_) => VACUUM_VARIANCE,
            };
            v[k] = var.sqrt();
        }
        v
    };
    let rows: Vec<Vec<(usize, Complex64)>> = exprs
        .iter()
        .map(|(e, axis)| {
            let mut r = Vec::new();
            if e.input_coeff() != Complex64::new(0.0, 0.0) {
                r.push((keys[&(None, *axis)], e.input_coeff()));
            }
            for (l, a, c) in e.terms() {
                r.push((keys[&(Some(l.clone()), a)], c));
            }
            r
        })
        .collect();
    let complex = exprs.iter().any(|(e, _)| e.has_complex_coeffs());

    let n = exprs.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i == j || exprs[i].1 == exprs[j].1)
        .collect();

    let batches = cfg.sample_count.div_ceil(BATCH);
    let partial: Vec<Vec<(Neumaier, Neumaier)>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(cfg.sample_count - b * BATCH);
            let mut acc = vec![(Neumaier::default(), Neumaier::default()); pairs.len()];
            let mut z = vec![Complex64::new(0.0, 0.0); sd.len()];
            let mut vals = vec![Complex64::new(0.0, 0.0); n];
            for _ in 0..count {
                for (zk, s) in z.iter_mut().zip(&sd) {
                    *zk = if complex {
                        let h = s * std::f64::consts::FRAC_1_SQRT_2;
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(h * re, h * im)
                    } else {
                        let re: f64 = rng.sample(StandardNormal);
                        Complex64::new(s * re, 0.0)
                    };
                }
                for (v, row) in vals.iter_mut().zip(&rows) {
                    *v = row.iter().map(|&(k, c)| c * z[k]).sum();
                }
                for (slot, &(i, j)) in acc.iter_mut().zip(&pairs) {
                    let prod = (vals[i].conj() * vals[j]).re / VACUUM_VARIANCE;
                    slot.0.add(prod);
                    slot.1.add(prod * prod);
                }
            }
            acc
        })
        .collect();

    let total = cfg.sample_count as f64;
    let entries = pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let mut s = Neumaier::default();
            let mut s2 = Neumaier::default();
            for batch in &partial {
                s.add(batch[k].0.total());
                s2.add(batch[k].1.total());
            }
            let mean = s.total() / total;
            let var = (s2.total() / total - mean * mean).max(0.0);
            let expected = if i == j {
                normalized_variance(&exprs[i].0, in_model, exprs[i].1)
            } else {
                covariance(&exprs[i].0, &exprs[j].0, in_model, exprs[i].1)
            };
            McEntry {
                i,
                j,
                expected,
                estimate: mean,
                std_error: (var / (total - 1.0)).sqrt(),
            }
        })
        .collect();
    McReport {
        sample_count: cfg.sample_count,
        seed: cfg.seed,
        complex,
        entries,
    }
}

/// One comparison of the validation suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    /// Absolute tolerance, or the number of standard errors for sampled cases.
    pub tolerance: f64,
    pub sampled: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub config: McConfig,
    pub cases: Vec<OracleCase>,
    pub passed: bool,
}

fn exact_case(name: &str, expected: f64, observed: f64, tol: f64) -> OracleCase {
    OracleCase {
        name: name.to_string(),
        expected,
        observed,
        tolerance: tol,
        sampled: false,
        passed: (expected - observed).abs() <= tol,
    }
}

fn sampled_cases(name: &str, report: &McReport, sigmas: f64) -> Vec<OracleCase> {
    report
        .entries
        .iter()
        .map(|e| OracleCase {
            name: format!("{name}[{},{}]", e.i, e.j),
            expected: e.expected,
            observed: e.estimate,
            tolerance: sigmas,
            sampled: true,
            passed: e.z_score().abs() <= sigmas,
        })
        .collect()
}

/// Runs the validation suite used by `oracle-check`.
pub fn run_suite(cfg: &McConfig) -> Result<OracleReport> {
    let mut cases = Vec::new();
    let coh = InputModel::coherent();

    for &(r, g, a) in &[
        (0.0, 1.0, Complex64::new(0.0, 0.0)),
        (1.0, 1.0, Complex64::new(3.0, 4.0)),
        (0.7, 0.6, Complex64::new(-1.0, 2.0)),
        (10.0, 1.0, Complex64::new(1.0, 1.0)),
    ] {
        let cov = covariance_teleport(r, g, a)?;
        let out = crate::teleport::teleport_single_mode(r, g)?;
        let f = crate::criteria::outcome_fidelity(&out, a)?;
        cases.push(exact_case(&format!("covariance fidelity r={r} gain={g} alpha={a}"), f, cov.fidelity, 1e-9));
    }

    let vac = [(QuadExpansion::vacuum("v", Axis::X), Axis::X)];
    cases.extend(sampled_cases("vacuum", &mc_check(&vac, &coh, cfg), 5.0));

    let lossless = teleport(&SqueezerSpectrum::nopa(0.5)?, &GainSchedule::Unit, &BellDetector::ideal(), 1.0)?;
    let diff = [
        (lossless.x_tel.clone() - QuadExpansion::input(1.0), Axis::X),
        (lossless.p_tel.clone() - QuadExpansion::input(1.0), Axis::P),
    ];
    let rep = mc_check(&diff, &coh, cfg);
    cases.extend(sampled_cases("teleport eps=0.5 omega=1", &rep, 5.0));
    let closed = closed_form_tel_in(0.5, 1.0, 1.0, 1.0);
    for e in rep.entries.iter().filter(|e| e.i == e.j) {
        cases.push(OracleCase {
            name: format!("teleport eps=0.5 omega=1 closed form [{}]", e.i),
            expected: closed,
            observed: e.estimate,
            tolerance: 5.0,
            sampled: true,
            passed: ((e.estimate - closed) / e.std_error).abs() <= 5.0,
        });
    }

    let src = SqueezerSpectrum::nopa_lossy(0.5, 0.9)?;
    let det = BellDetector::from_power_efficiency(0.97)?;
    let out = teleport(&src, &GainSchedule::Unit, &det, 1.0)?;
    let diff = [
        (out.x_tel.clone() - QuadExpansion::input(1.0), Axis::X),
        (out.p_tel.clone() - QuadExpansion::input(1.0), Axis::P),
    ];
    let rep = mc_check(&diff, &coh, cfg);
    cases.extend(sampled_cases("lossy teleport eps=0.5 omega=1", &rep, 5.0));
    cases.push(exact_case(
        "lossy teleport closed form",
        closed_form_tel_in(0.5, 0.9, det.eta(), 1.0),
        rep.entries[0].expected,
        1e-12,
    ));

    let swap = swap_once(&SwapConfig::symmetric(SqueezerSpectrum::nopa(0.3)?, SwapGain::Optimal), 0.5)?;
    let epr = [
        (swap.x1.clone() - swap.x4.clone(), Axis::X),
        (swap.p1.clone() + swap.p4.clone(), Axis::P),
    ];
    cases.extend(sampled_cases("swap eps=0.3 omega=0.5", &mc_check(&epr, &coh, cfg), 5.0));

    let passed = cases.iter().all(|c| c.passed);
    Ok(OracleReport {
        config: *cfg,
        cases,
        passed,
    })
}
