//! The connection matrix `E = V⁻¹TV` between the Floquet bases at the two
//! punctures, its bottom-left minor, and the Weyl-orbit sums that express
//! that minor as a quantization condition.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rootsys::{orbit_root_exponents, weight_dot, weyl_orbit_subsets, weyl_vector, WeightVector};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Smallest admissible separation of monodromy eigenvalues.
pub const MIN_GAP: f64 = 1e-12;

/// Condition number above which the Vandermonde solve is flagged.
pub const COND_WARN: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionData {
    /// Monodromy eigenvalues `Σ_j = e^{2πiσ_j}`.
    pub sigma_mono: Vec<C64>,
    pub zeta: Vec<C64>,
    pub e: DMatrix<C64>,
    /// 2-norm condition number of the Vandermonde matrix.
    pub cond_v: f64,
    /// `‖VE − TV‖ / ‖TV‖` in the Frobenius norm.
    pub residual: f64,
    pub warning: Option<String>,
}

/// Solves `V E = T V` for `E`, with `V_ij = Σ_i^{j−1}` and `T = diag(ζ)`.
pub fn build_connection(sigma_mono: &[C64], zeta: &[C64]) -> Result<ConnectionData> {
    let n = sigma_mono.len();
    if zeta.len() != n {
        return Err(Error::Dimension { left: n, right: zeta.len() });
    }
    if n == 0 {
        return Err(Error::Domain("empty monodromy data".into()));
    }
    check_gaps(sigma_mono)?;
    let v = DMatrix::from_fn(n, n, |i, j| sigma_mono[i].powi(j as i32));
    let tv = DMatrix::from_fn(n, n, |i, j| zeta[i] * v[(i, j)]);
    let e = v
        .clone()
        .full_piv_lu()
        .solve(&tv)
        .ok_or_else(|| Error::DegenerateMonodromy(1, 2))?;
    let residual = (&v * &e - &tv).norm() / tv.norm().max(f64::MIN_POSITIVE);
    let sv = v.singular_values();
    let cond_v = sv.max() / sv.min();
    let warning = (cond_v > COND_WARN)
        .then(|| format!("Vandermonde condition number {cond_v:.3e} exceeds {COND_WARN:e}"));
    Ok(ConnectionData { sigma_mono: sigma_mono.to_vec(), zeta: zeta.to_vec(), e, cond_v, residual, warning })
}

fn check_gaps(sigma_mono: &[C64]) -> Result<()> {
    for i in 0..sigma_mono.len() {
        for j in i + 1..sigma_mono.len() {
            if (sigma_mono[i] - sigma_mono[j]).norm() < MIN_GAP {
                return Err(Error::DegenerateMonodromy(i + 1, j + 1));
            }
        }
    }
    Ok(())
}

/// Determinant of rows `N−M+1..N`, columns `1..M` of `E`.
pub fn minor_det_direct(cd: &ConnectionData, m: usize) -> Result<C64> {
    let n = cd.e.nrows();
    if m == 0 || m > n {
        return Err(Error::Domain(format!("minor size {m} outside 1..={n}")));
    }
    let block = cd.e.view((n - m, 0), (m, m)).clone_owned();
    Ok(block.lu().determinant())
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: C64,
    comp: C64,
}

impl Compensated {
    fn add(&mut self, x: C64) {
        let t = self.sum + x;
        self.comp += C64::new(two_sum_err(self.sum.re, x.re, t.re), two_sum_err(self.sum.im, x.im, t.im));
        self.sum = t;
    }

    fn value(&self) -> C64 {
        self.sum + self.comp
    }
}

fn two_sum_err(a: f64, b: f64, t: f64) -> f64 {
    if a.abs() >= b.abs() {
        (a - t) + b
    } else {
        (b - t) + a
    }
}

/// `Σ_{|S|=M} Π_{i∈S} ζ_i Π_{i∈S, j∉S} 1/(Σ_i − Σ_j)`.
pub fn minor_det_subset_sum(sigma_mono: &[C64], zeta: &[C64], m: usize) -> Result<C64> {
    let n = sigma_mono.len();
    if zeta.len() != n {
        return Err(Error::Dimension { left: n, right: zeta.len() });
    }
    if m == 0 || m > n {
        return Err(Error::Domain(format!("minor size {m} outside 1..={n}")));
    }
    check_gaps(sigma_mono)?;
    if m == n {
        return Ok(zeta.iter().product());
    }
    let mut acc = Compensated::default();
    for subset in weyl_orbit_subsets(n, m)? {
        let mut inside = vec![false; n];
        for &i in &subset {
            inside[i - 1] = true;
        }
        let mut term: C64 = subset.iter().map(|&i| zeta[i - 1]).product();
        for &i in &subset {
            for j in (0..n).filter(|&j| !inside[j]) {
                term /= sigma_mono[i - 1] - sigma_mono[j];
            }
        }
        acc.add(term);
    }
    Ok(acc.value())
}

/// Which condition of the main theorem to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QcCase {
    /// `N` even, orbit of `λ_{N/2}`; roots are bound states.
    Even,
    /// `N` odd, orbit of `λ_{(N+1)/2}`; resonances in the upper half-plane.
    OddCase1,
    /// As `OddCase1` with `η → −η`; the conjugate resonances.
    OddCase2,
}

impl QcCase {
    pub fn as_str(self) -> &'static str {
        match self {
            QcCase::Even => "even",
            QcCase::OddCase1 => "odd_case1",
            QcCase::OddCase2 => "odd_case2",
        }
    }

    /// The case matching the parity of `N` (case 1 for odd `N`).
    pub fn for_order(n: usize) -> Self {
        if n % 2 == 0 {
            QcCase::Even
        } else {
            QcCase::OddCase1
        }
    }

    pub fn check(self, n: usize) -> Result<()> {
        let ok = match self {
            QcCase::Even => n % 2 == 0,
            QcCase::OddCase1 | QcCase::OddCase2 => n % 2 == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("case {} does not apply to N = {n}", self.as_str())))
        }
    }
}

/// Weyl-orbit quantization function
///
/// ```text
/// Σ_{n ∈ W·λ_M} e^{iπ(±2η − ρ [+ σ])·n} / Π_{α>0, (n·α)²=1} 2 sin(π σ·α)
/// ```
///
/// with `M = ⌈N/2⌉`, the `σ·n` term present for odd `N` only and the sign
/// of `η` flipped for case 2. `e^{2πiη·n}` is rebuilt as `Π_{i∈S} ζ_i`, so
/// no branch of `η` is needed.
pub fn qc_value(sigma: &[C64], zeta: &[C64], case: QcCase) -> Result<C64> {
    qc_value_with_tol(sigma, zeta, case, 1e-12)
}

/// [`qc_value`] with an explicit threshold for resonant denominators.
pub fn qc_value_with_tol(sigma: &[C64], zeta: &[C64], case: QcCase, tol_abs: f64) -> Result<C64> {
    let n = sigma.len();
    if zeta.len() != n {
        return Err(Error::Dimension { left: n, right: zeta.len() });
    }
    if n < 2 {
        return Err(Error::Domain(format!("N must be >= 2, got {n}")));
    }
    case.check(n)?;
    let total: C64 = sigma.iter().sum();
    if total.norm() > 1e-9 {
        return Err(Error::ZeroSum(total));
    }
    let m = n.div_ceil(2);
    let rho = weyl_vector(n)?;
    let mut sines = vec![vec![C64::new(0.0, 0.0); n]; n];
    for k in 0..n {
        for l in k + 1..n {
            let s = 2.0 * (PI * (sigma[k] - sigma[l])).sin();
            if s.norm() < tol_abs {
                return Err(Error::ResonantDenominator(k + 1, l + 1));
            }
            sines[k][l] = s;
        }
    }

    let mut acc = Compensated::default();
    for subset in weyl_orbit_subsets(n, m)? {
        let weight = WeightVector::from_subset(n, &subset)?;
        let rho_n = weight_dot(&rho, &weight)?;
        let rho_n = *rho_n.numer() as f64 / *rho_n.denom() as f64;
        let mut term: C64 = match case {
            QcCase::Even | QcCase::OddCase1 => subset.iter().map(|&i| zeta[i - 1]).product(),
            QcCase::OddCase2 => subset.iter().map(|&i| zeta[i - 1].inv()).product(),
        };
        let mut phase = -I * PI * rho_n;
        if case != QcCase::Even {
            phase += I * PI * subset.iter().map(|&i| sigma[i - 1]).sum::<C64>();
        }
        term *= phase.exp();
        for ((k, l), _) in orbit_root_exponents(n, &subset)? {
            term /= sines[k - 1][l - 1];
        }
        acc.add(term);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn two_by_two_by_hand() {
        let s = [c(1.0, 0.0), c(2.0, 0.0)];
        let z = [c(3.0, 0.0), c(5.0, 0.0)];
        let cd = build_connection(&s, &z).unwrap();
        assert!((cd.e[(1, 0)] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((minor_det_direct(&cd, 1).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
        assert!((minor_det_subset_sum(&s, &z, 1).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn unit_multipliers_give_identity() {
        let s: Vec<C64> = (0..4).map(|k| (I * (0.3 + k as f64)).exp()).collect();
        let cd = build_connection(&s, &[c(1.0, 0.0); 4]).unwrap();
        assert!((cd.e.clone() - DMatrix::<C64>::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn degenerate_monodromy_rejected() {
        let s = [c(1.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(build_connection(&s, &[c(1.0, 0.0); 2]), Err(Error::DegenerateMonodromy(1, 2))));
        assert!(minor_det_subset_sum(&s, &[c(1.0, 0.0); 2], 1).is_err());
    }

    #[test]
    fn full_minor_is_product_of_multipliers() {
        let s: Vec<C64> = (0..5).map(|k| c(0.4 * k as f64 - 0.7, 0.2 * (k * k) as f64)).collect();
        let z: Vec<C64> = (0..5).map(|k| c(1.0 + 0.1 * k as f64, -0.3 * k as f64)).collect();
        let cd = build_connection(&s, &z).unwrap();
        let prod: C64 = z.iter().product();
        assert!((minor_det_direct(&cd, 5).unwrap() - prod).norm() < 1e-10 * prod.norm());
    }

    #[test]
    fn two_point_closed_form() {
        // sin(2πη₁)/sin(2πσ₁) for σ = (σ₁, −σ₁), η = (η₁, −η₁)
        let sigma = [c(0.15, 0.0), c(-0.15, 0.0)];
        let zeta = [(2.0 * PI * I * 0.2).exp(), (-2.0 * PI * I * 0.2).exp()];
        let q = qc_value(&sigma, &zeta, QcCase::Even).unwrap();
        let expected = (0.4 * PI).sin() / (0.3 * PI).sin();
        assert!((q - c(expected, 0.0)).norm() < 1e-14, "{q}");
        assert!((expected - 1.175570).abs() < 1e-6);
    }

    #[test]
    fn wrong_parity_rejected() {
        let sigma = [c(0.1, 0.0), c(-0.1, 0.0)];
        let zeta = [c(1.0, 0.0), c(2.0, 0.0)];
        assert!(qc_value(&sigma, &zeta, QcCase::OddCase1).is_err());
    }

    #[test]
    fn resonant_denominator_detected() {
        let sigma = [c(0.5, 0.0), c(-0.5, 0.0)];
        let zeta = [c(1.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(qc_value(&sigma, &zeta, QcCase::Even), Err(Error::ResonantDenominator(1, 2))));
    }
}
