use std::f64::consts::PI;

use proptest::prelude::*;
use toda_spectra::connection::{build_connection, minor_det_direct, minor_det_subset_sum, qc_value, QcCase};
use toda_spectra::qfn::{quantum_wronskian, ModelParams, TruncationOpts};
use toda_spectra::rootsys::{positive_roots, weight_dot, weyl_orbit_subsets, WeightVector};
use toda_spectra::C64;

fn zero_sum(raw: Vec<(f64, f64)>) -> Vec<C64> {
    let mut v: Vec<C64> = raw.into_iter().map(|(a, b)| C64::new(a, b)).collect();
    let mean = v.iter().sum::<C64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

fn separated(sigma: &[C64]) -> bool {
    (0..sigma.len()).all(|i| {
        (i + 1..sigma.len()).all(|j| {
            let d = sigma[i] - sigma[j];
            C64::new(d.re - d.re.round(), d.im).norm() > 0.05
        })
    })
}

fn exps(v: &[C64]) -> Vec<C64> {
    v.iter().map(|s| (C64::new(0.0, 2.0 * PI) * s).exp()).collect()
}

fn data(n: usize) -> impl Strategy<Value = (Vec<C64>, Vec<C64>)> {
    let pair = (-0.45f64..0.45, -0.3f64..0.3);
    (prop::collection::vec(pair.clone(), n), prop::collection::vec(pair, n))
        .prop_map(|(s, e)| (zero_sum(s), zero_sum(e)))
        .prop_filter("exponents too close", |(s, _)| separated(s))
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subset_sum_matches_direct_minor((sigma, eta) in (2usize..=6).prop_flat_map(data)) {
        let n = sigma.len();
        let (mono, zeta) = (exps(&sigma), exps(&eta));
        let m = n.div_ceil(2);
        let direct = minor_det_direct(&build_connection(&mono, &zeta).unwrap(), m).unwrap();
        let sum = minor_det_subset_sum(&mono, &zeta, m).unwrap();
        prop_assert!(close(direct, sum, 1e-9), "{direct} vs {sum}");
    }

    #[test]
    fn qc_ignores_labelling((sigma, eta) in (2usize..=6).prop_flat_map(data), rot in 1usize..6) {
        let n = sigma.len();
        let zeta = exps(&eta);
        let case = QcCase::for_order(n);
        let q = qc_value(&sigma, &zeta, case).unwrap();
        let r = rot % n;
        let (mut s2, mut z2) = (sigma.clone(), zeta.clone());
        s2.rotate_left(r);
        z2.rotate_left(r);
        let q2 = qc_value(&s2, &z2, case).unwrap();
        prop_assert!(close(q, q2, 1e-9), "permutation: {q} vs {q2}");
    }

    #[test]
    fn qc_ignores_integer_shifts((sigma, eta) in (2usize..=6).prop_flat_map(data), k in -2i32..=2) {
        let n = sigma.len();
        let zeta = exps(&eta);
        let case = QcCase::for_order(n);
        let q = qc_value(&sigma, &zeta, case).unwrap();
        // shift one exponent up and another down to stay on the zero-sum plane
        let mut shifted = sigma.clone();
        shifted[0] += k as f64;
        shifted[n - 1] -= k as f64;
        let q2 = qc_value(&shifted, &zeta, case).unwrap();
        prop_assert!(close(q, q2, 1e-9), "shift: {q} vs {q2}");
    }

    #[test]
    fn orbit_weights_pair_with_roots_in_unit_range(n in 2usize..=9, k_raw in 1usize..8) {
        let k = 1 + k_raw % (n - 1);
        let roots = positive_roots(n).unwrap();
        for s in weyl_orbit_subsets(n, k).unwrap() {
            let w = WeightVector::from_subset(n, &s).unwrap();
            for a in &roots {
                let d = weight_dot(&w, a).unwrap();
                prop_assert!(d.numer().abs() <= 1 && *d.denom() == 1);
            }
        }
    }

    #[test]
    fn wronskian_period_shift(re in -2.0f64..2.0, im in -0.4f64..0.4, lambda in 0.2f64..1.5) {
        let p = ModelParams::new(3, 1.0, lambda, vec![], C64::new(0.5, 0.1)).unwrap();
        let opts = TruncationOpts::default();
        let l = C64::new(re, im);
        let w0 = quantum_wronskian(&p, l, &opts).unwrap();
        let w1 = quantum_wronskian(&p, l + C64::new(0.0, 1.0), &opts).unwrap();
        prop_assert!(close(w1, -w0, 1e-8), "{w1} vs {}", -w0);
    }
}
