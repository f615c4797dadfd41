use std::io::Write;

use cvtele_core::criteria::{
    closed_form_fidelity, closed_form_spectrum, criteria_report, fidelity_spectrum, optimize_classical,
    ralph_lam, ClassicalModelParams, ClassicalObjective, classical_objective,
};
use cvtele_core::epr::{epr_from_pair, TransferPair};
use cvtele_core::swap::{optimized_swap_fidelity, swap_fidelity_closed};
use cvtele_core::teleport::{closed_form_tel_in, re_im_variances, spectral_variance_tel_in, teleport_single_mode};
use cvtele_core::{
    commutator_pairing, swap_fidelity, swap_spectrum, teleport, BellDetector, Complex64, CustomSpectrum,
    FrequencyGrid, GainSchedule, InputModel, SqueezerSpectrum, SwapConfig, SwapGain,
};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn nopa(e: f64) -> SqueezerSpectrum {
    SqueezerSpectrum::nopa(e).unwrap()
}

#[test]
fn pipeline_spectrum_equals_closed_form() {
    let grid = FrequencyGrid::new(0.0, 20.0, 0.25).unwrap();
    for &(eps, beta, eta2) in &[(0.3, 1.0, 1.0), (0.77, 0.9, 0.97), (0.5, 0.6, 0.8)] {
        let eta = f64::sqrt(eta2);
        let src = if beta == 1.0 {
            nopa(eps)
        } else {
            SqueezerSpectrum::nopa_lossy(eps, beta).unwrap()
        };
        let det = BellDetector::new(eta).unwrap();
        let pipe = fidelity_spectrum(&src, &GainSchedule::Unit, &det, ZERO, &grid).unwrap();
        let closed = closed_form_spectrum(eps, beta, eta, &grid);
        for (a, b) in pipe.rows.iter().zip(&closed.rows) {
            assert_eq!(a.omega, b.omega);
            assert_abs_diff_eq!(a.v_x, b.v_x, epsilon = 1e-12);
            assert_abs_diff_eq!(a.v_p, b.v_p, epsilon = 1e-12);
            assert_abs_diff_eq!(a.fidelity, b.fidelity, epsilon = 1e-12);
        }
    }
}

#[test]
fn classical_source_gives_half_everywhere() {
    let grid = FrequencyGrid::new(0.0, 10.0, 0.5).unwrap();
    let t = fidelity_spectrum(&nopa(0.0), &GainSchedule::Unit, &BellDetector::ideal(), ZERO, &grid).unwrap();
    for r in &t.rows {
        assert_abs_diff_eq!(r.fidelity, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.v_x, 2.0, epsilon = 1e-15);
    }
}

#[test]
fn threshold_limit_spectrum() {
    for w in [0.1, 1.0, 5.0] {
        let v = closed_form_tel_in(1.0, 1.0, 1.0, w);
        assert_abs_diff_eq!(v, 2.0 * w * w / (4.0 + w * w), epsilon = 1e-14);
    }
}

#[test]
fn fig5_peak_eps_04() {
    assert!((closed_form_fidelity(0.4, 1.0, 1.0, 0.0) - 0.84).abs() < 0.005);
}

#[test]
fn real_and_imaginary_parts_share_the_variance() {
    let out = teleport(&nopa(0.6), &GainSchedule::Unit, &BellDetector::ideal(), 1.3).unwrap();
    let ri = re_im_variances(&out, &InputModel::coherent());
    let v = spectral_variance_tel_in(&out, &InputModel::coherent());
    // a unit-gain lossless channel adds phase-insensitive noise
    assert_abs_diff_eq!(ri.re_x, v.v_x, epsilon = 1e-12);
    assert_abs_diff_eq!(ri.im_x, v.v_x, epsilon = 1e-12);
    assert_abs_diff_eq!(ri.re_p, v.v_p, epsilon = 1e-12);
}

#[test]
fn ralph_lam_at_three_db() {
    // |S-|^2 = e^{-2r} = 1/2
    let r = std::f64::consts::LN_2 / 2.0;
    let out = teleport_single_mode(r, 1.0).unwrap();
    let rl = ralph_lam(&out.x_tel, &out.p_tel, &InputModel::coherent());
    assert_abs_diff_eq!(rl.conditional_sum(), 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(rl.transfer_sum(), 1.0, epsilon = 1e-12);

    let stronger = teleport_single_mode(r * 1.5, 1.0).unwrap();
    let rep = criteria_report(&stronger, &InputModel::coherent(), ZERO).unwrap();
    assert!(rep.verdicts.ralph_lam);
    let weaker = teleport_single_mode(r * 0.5, 1.0).unwrap();
    let rep = criteria_report(&weaker, &InputModel::coherent(), ZERO).unwrap();
    assert!(!rep.verdicts.ralph_lam);
    assert!(rep.verdicts.product, "any squeezing beats the product limit");
}

#[test]
fn swap_is_narrower_than_direct_teleportation() {
    for eps in [0.1, 0.2, 0.4, 0.6, 0.9] {
        for w in [0.0, 0.5, 2.0, 8.0] {
            let direct = closed_form_fidelity(eps, 1.0, 1.0, w);
            let swapped = swap_fidelity(&SwapConfig::symmetric(nopa(eps), SwapGain::Optimal), w).unwrap();
            assert!(swapped < direct, "eps={eps} w={w}");
            assert!(swapped > 0.5);
        }
    }
    let at_one = swap_fidelity(&SwapConfig::symmetric(nopa(1.0), SwapGain::Optimal), 0.0).unwrap();
    assert_eq!(at_one, closed_form_fidelity(1.0, 1.0, 1.0, 0.0));
}

#[test]
fn unequal_sources_use_the_averaged_powers() {
    let cfg = SwapConfig {
        source_ab: nopa(0.3),
        source_cd: nopa(0.7),
        gain: SwapGain::Schedule(GainSchedule::fixed(0.6)),
    };
    let w = 0.9;
    let (a1, b1) = nopa(0.3).power_spectrum(w).unwrap();
    let (a2, b2) = nopa(0.7).power_spectrum(w).unwrap();
    let closed = swap_fidelity_closed(Complex64::new(0.6, 0.0), (a1 + a2) / 2.0, (b1 + b2) / 2.0);
    assert_abs_diff_eq!(swap_fidelity(&cfg, w).unwrap(), closed, epsilon = 1e-12);
}

#[test]
fn swap_spectrum_is_ordered_and_thread_independent() {
    let cfg = SwapConfig::symmetric(nopa(0.4), SwapGain::Optimal);
    let grid = FrequencyGrid::new(0.0, 6.0, 0.1).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| swap_spectrum(&cfg, &grid)).unwrap();
    let b = four.install(|| swap_spectrum(&cfg, &grid)).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    assert!(a.rows.windows(2).all(|w| w[0].omega < w[1].omega));
    for r in &a.rows {
        assert_abs_diff_eq!(r.fidelity, optimized_swap_fidelity(0.4, r.omega), epsilon = 1e-12);
    }
}

#[test]
fn custom_table_reproduces_nopa() {
    let src = nopa(0.5);
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "omega,s_plus_re,s_plus_im,s_minus_re,s_minus_im").unwrap();
    for k in 0..=400 {
        let w = k as f64 * 0.05;
        let p = src.s_pair(w).unwrap();
        writeln!(file, "{w},{},{},{},{}", p.s_plus.re, p.s_plus.im, p.s_minus.re, p.s_minus.im).unwrap();
    }
    let custom = SqueezerSpectrum::Custom(CustomSpectrum::from_path(file.path()).unwrap());
    // on a tabulated frequency the two sources agree exactly
    let det = BellDetector::ideal();
    let a = teleport(&custom, &GainSchedule::Unit, &det, 1.5).unwrap();
    let b = teleport(&src, &GainSchedule::Unit, &det, 1.5).unwrap();
    let m = InputModel::coherent();
    assert_abs_diff_eq!(
        spectral_variance_tel_in(&a, &m).v_x,
        spectral_variance_tel_in(&b, &m).v_x,
        epsilon = 1e-12
    );
    // between rows the interpolation error is small
    let a = teleport(&custom, &GainSchedule::Unit, &det, 1.525).unwrap();
    let b = teleport(&src, &GainSchedule::Unit, &det, 1.525).unwrap();
    assert!((spectral_variance_tel_in(&a, &m).v_x - spectral_variance_tel_in(&b, &m).v_x).abs() < 1e-3);
    assert!(teleport(&custom, &GainSchedule::Unit, &det, 25.0).is_err());
}

proptest! {
    #[test]
    fn classical_optimum_is_a_lower_bound(s_a in 0.05f64..20.0, s_b in 0.05f64..20.0, s_v in 0.2f64..5.0) {
        let m = InputModel::squeezed(s_v).unwrap();
        let p = ClassicalModelParams::unit_gain(s_a, s_b).unwrap();
        for obj in [ClassicalObjective::Product, ClassicalObjective::Sum, ClassicalObjective::OutProduct, ClassicalObjective::OutSum] {
            let (_, best) = optimize_classical(&m, obj);
            prop_assert!(classical_objective(obj, &p, &m) >= best - 1e-9);
        }
    }

    #[test]
    fn unit_gain_lossless_beats_product_limit(eps in 1e-3f64..1.0, w in 0.0f64..50.0) {
        let out = teleport(&nopa(eps), &GainSchedule::Unit, &BellDetector::ideal(), w).unwrap();
        let v = spectral_variance_tel_in(&out, &InputModel::coherent());
        let s2 = nopa(eps).s_pair(w).unwrap().s_minus.norm_sqr();
        prop_assert!(v.v_x * v.v_p < 4.0);
        prop_assert!((v.v_x * v.v_p - 4.0 * s2 * s2).abs() < 1e-12);
    }

    #[test]
    fn complex_gain_keeps_commutators(eps in 0.0f64..0.99, w in 0.0f64..20.0, re in 0.0f64..2.0, im in -1.0f64..1.0) {
        let gain = GainSchedule::Fixed(Complex64::new(re, im));
        let out = teleport(&nopa(eps), &gain, &BellDetector::ideal(), w).unwrap();
        prop_assert!((commutator_pairing(&out.x_tel, &out.p_tel) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn generic_epr_pair_is_canonical(r in 0.0f64..3.0, phase in 0.0f64..6.28) {
        let rot = Complex64::from_polar(1.0, phase);
        let pair = TransferPair::new(rot * r.exp(), rot * (-r).exp());
        let e = epr_from_pair(pair, "u", "v");
        prop_assert!((commutator_pairing(&e.x1, &e.p1) - 1.0).norm() < 1e-12);
        prop_assert!((commutator_pairing(&e.x2, &e.p2) - 1.0).norm() < 1e-12);
        prop_assert!(commutator_pairing(&e.x1, &e.p2).norm() < 1e-12);
    }
}
