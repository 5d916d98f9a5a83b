//! Brute-force spectral solvers used to cross-check the quantization roots.
//!
//! * [`schrodinger_eigen_n2`]: second-order finite differences for
//!   `−ħ²ψ'' + 2Λ² cosh(x) ψ = E ψ` with Dirichlet walls, Sturm bisection on
//!   the tridiagonal matrix and Richardson extrapolation over `(n, 2n)`.
//! * [`difference_collocation_even`]: the difference operator
//!   `2Λᴺ cosh(ħp) + V_N(y)` on a periodic box, in the plane-wave basis
//!   `|ħp| ≤ cutoff` with potential matrix elements by collocation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qfn::ModelParams;
use crate::C64;

/// Upper bound on `ħ·p_max` for the collocation grid.
pub const COSH_GUARD: f64 = 40.0;

/// Default `ħ·p` cutoff of the collocation basis. Dense eigensolvers lose
/// `ε·‖H‖` absolutely, so `cosh` of the cutoff sets the noise floor.
pub const DEFAULT_MOMENTUM_CUTOFF: f64 = 14.0;

/// Lowest-eigenvalue drift allowed between a grid and its double.
pub const POLLUTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Box `[−L, L]`.
    pub half_width: f64,
    /// Grid points, a power of two `≥ 64`.
    pub points: usize,
    /// Collocation only: keep plane waves with `ħ|p| ≤ momentum_cutoff`.
    #[serde(default)]
    pub momentum_cutoff: Option<f64>,
}

impl GridSpec {
    pub fn new(half_width: f64, points: usize) -> Self {
        Self { half_width, points, momentum_cutoff: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::Domain(format!("box half-width must be positive, got {}", self.half_width)));
        }
        if self.points < 64 || !self.points.is_power_of_two() {
            return Err(Error::Domain(format!("grid points must be a power of two >= 64, got {}", self.points)));
        }
        if let Some(c) = self.momentum_cutoff {
            if !(c > 0.0 && c <= COSH_GUARD) {
                return Err(Error::Domain(format!("momentum cutoff must lie in (0, {COSH_GUARD}], got {c}")));
            }
        }
        Ok(())
    }

    fn doubled(&self) -> Self {
        Self { half_width: 2.0 * self.half_width, points: 2 * self.points, ..*self }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 10.0, points: 4096, momentum_cutoff: None }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`
/// (Sturm count via the `LDLᵀ` pivots).
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    let off2 = off * off;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - x } else { d - x - off2 / q };
        if q == 0.0 {
            q = f64::EPSILON * (d.abs() + x.abs() + off.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_eigenvalues(diag: &[f64], off: f64, count: usize) -> Vec<f64> {
    let lo0 = diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * off.abs();
    let hi0 = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * off.abs();
    (0..count)
        .map(|k| {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(diag, off, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

fn n2_matrix(hbar: f64, lambda: f64, grid: &GridSpec) -> (Vec<f64>, f64, f64) {
    let n = grid.points;
    let l = grid.half_width;
    let h = 2.0 * l / (n + 1) as f64;
    let k = hbar * hbar / (h * h);
    let diag = (1..=n).map(|j| 2.0 * k + 2.0 * lambda * lambda * (-l + h * j as f64).cosh()).collect();
    (diag, -k, h)
}

/// Lowest `count` eigenvalues `E_0 < E_1 < …` of
/// `−ħ² d²/dx² + 2Λ² cosh x`; quantization roots sit at `u₂ = −E_n`.
pub fn schrodinger_eigen_n2(hbar: f64, lambda_cpl: f64, count: usize, grid: &GridSpec) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Domain("count must be >= 1".into()));
    }
    if !(hbar > 0.0 && lambda_cpl > 0.0) {
        return Err(Error::Domain("hbar and Lambda must be positive".into()));
    }
    grid.validate()?;
    let mut g = *grid;
    for _ in 0..=3 {
        let coarse = {
            let (d, e, _) = n2_matrix(hbar, lambda_cpl, &g);
            tridiagonal_eigenvalues(&d, e, count)
        };
        let fine = {
            let (d, e, _) = n2_matrix(hbar, lambda_cpl, &GridSpec { points: 2 * g.points, ..g });
            tridiagonal_eigenvalues(&d, e, count)
        };
        let top = fine[count - 1];
        // classically forbidden margin: the WKB tail must be negligible
        let wall = 2.0 * lambda_cpl * lambda_cpl * g.half_width.cosh();
        let margin = 40.0 * hbar * hbar + 10.0 * top.abs();
        if wall > top + margin {
            // h ∝ 1/(n+1), so the grid ratio is not exactly two
            let r = ((2 * g.points + 1) as f64 / (g.points + 1) as f64).powi(2);
            return Ok(coarse.iter().zip(&fine).map(|(c, f)| (r * f - c) / (r - 1.0)).collect());
        }
        // enlarge the box at fixed spacing
        g = GridSpec { half_width: 1.5 * g.half_width, points: (g.points * 3 / 2).next_power_of_two(), ..g };
    }
    Err(Error::Oracle(format!(
        "box too small for the requested {count} levels after 3 enlargements (L = {})",
        g.half_width
    )))
}

/// Node counts of the finite-difference eigenvectors at `energies`, by
/// inverse iteration on the tridiagonal matrix.
pub fn n2_node_counts(hbar: f64, lambda_cpl: f64, energies: &[f64], grid: &GridSpec) -> Result<Vec<usize>> {
    grid.validate()?;
    let (diag, off, _) = n2_matrix(hbar, lambda_cpl, grid);
    let n = diag.len();
    let mut out = Vec::with_capacity(energies.len());
    for &e in energies {
        // snap to the nearest eigenvalue of this grid
        let below = sturm_count(&diag, off, e);
        let cands = tridiagonal_eigenvalues(&diag, off, below + 1);
        let snapped = cands
            .iter()
            .copied()
            .skip(below.saturating_sub(1))
            .min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()))
            .unwrap_or(e);
        let shift = snapped + 1e-10 * (1.0 + snapped.abs());
        let mut v = vec![1.0; n];
        for _ in 0..4 {
            v = thomas_solve(&diag, off, shift, &v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let significant: Vec<f64> = v.into_iter().filter(|x| x.abs() > 1e-8 * peak).collect();
        out.push(significant.windows(2).filter(|w| w[0].signum() != w[1].signum()).count());
    }
    Ok(out)
}

fn thomas_solve(diag: &[f64], off: f64, shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut b = diag[0] - shift;
    c[0] = off / b;
    d[0] = rhs[0] / b;
    for i in 1..n {
        b = diag[i] - shift - off * c[i - 1];
        c[i] = off / b;
        d[i] = (rhs[i] - off * d[i - 1]) / b;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn collocation_eigenvalues(params: &ModelParams, grid: &GridSpec, count: usize) -> Result<Vec<f64>> {
    let n = grid.points;
    let l = grid.half_width;
    let hbar = params.hbar();
    let nyquist = hbar * PI * n as f64 / (2.0 * l);
    if nyquist > COSH_GUARD {
        let n_ok = ((COSH_GUARD * 2.0 * l / (hbar * PI)) as usize + 1).next_power_of_two() / 2;
        return Err(Error::Oracle(format!(
            "cosh overflow guard: hbar*pi*n/(2L) = {nyquist:.2} > {COSH_GUARD}; try L = {l}, n = {} or L = {:.3}, n = {n}",
            n_ok.max(64),
            hbar * PI * n as f64 / (2.0 * COSH_GUARD)
        )));
    }
    let cutoff = grid.momentum_cutoff.unwrap_or(DEFAULT_MOMENTUM_CUTOFF).min(nyquist);
    let dp = PI / l;
    let kmax = (cutoff / (hbar * dp)).floor() as i64;
    let kmax = kmax.min(n as i64 / 2 - 1);
    let modes: Vec<i64> = (-kmax..=kmax).collect();
    let m = modes.len();
    if m < count {
        return Err(Error::Oracle(format!("only {m} plane waves below the momentum cutoff, {count} levels requested")));
    }

    let dy = 2.0 * l / n as f64;
    let vy: Vec<C64> = (0..n).map(|j| params.potential(C64::new(-l + dy * j as f64, 0.0))).collect();
    // V̂(d) = (1/n) Σ_j V(y_j) e^{−i d·dp·y_j}, d = k − l ∈ [−2kmax, 2kmax]
    let vhat: Vec<C64> = (-2 * kmax..=2 * kmax)
        .map(|d| {
            let w = -(d as f64) * dp;
            vy.iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, w * (-l + dy * j as f64)))
                .sum::<C64>()
                / n as f64
        })
        .collect();

    let kin = 2.0 * params.lambda().powi(params.n() as i32);
    let h = DMatrix::from_fn(m, m, |a, b| {
        let d = modes[a] - modes[b];
        let mut v = vhat[(d + 2 * kmax) as usize];
        if a == b {
            v += kin * (hbar * dp * modes[a] as f64).cosh();
        }
        v
    });
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(count);
    Ok(ev)
}

/// Lowest `count` eigenvalues `μ_n` of `2Λᴺ cosh(ħp) + V_N(y)` for even `N`;
/// the quantization prediction is `u_N = −μ_n`.
///
/// The value of `u_N` stored in `params` is ignored.
pub fn difference_collocation_even(params: &ModelParams, grid: &GridSpec, count: usize) -> Result<Vec<f64>> {
    if params.n() % 2 != 0 {
        return Err(Error::Domain(format!("collocation oracle needs even N, got {}", params.n())));
    }
    if !params.is_real() || (2..params.n()).any(|k| params.coupling(k).im != 0.0) {
        return Err(Error::Domain("collocation oracle needs real couplings".into()));
    }
    if count == 0 {
        return Err(Error::Domain("count must be >= 1".into()));
    }
    grid.validate()?;
    let base = collocation_eigenvalues(params, grid, count)?;
    let check = collocation_eigenvalues(params, &grid.doubled(), 1)?;
    let drift = (check[0] - base[0]).abs();
    if drift > POLLUTION_TOL {
        return Err(Error::NotConverged { what: "collocation (grid doubling)", rows: grid.points, err_est: drift });
    }
    Ok(base)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumComparison {
    /// `(index in a, index in b, |a − b|)` sorted by index in `a`.
    pub matched: Vec<(usize, usize, f64)>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
    pub max_deviation: f64,
    pub all_within_tol: bool,
}

/// Greedy closest-pair matching within `tol`.
pub fn compare_spectra(a: &[f64], b: &[f64], tol: f64) -> SpectrumComparison {
    let mut pairs: Vec<(f64, usize, usize)> =
        a.iter().enumerate().flat_map(|(i, x)| b.iter().enumerate().map(move |(j, y)| ((x - y).abs(), i, j))).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut matched = Vec::new();
    for (d, i, j) in pairs {
        if d > tol {
            break;
        }
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matched.push((i, j, d));
        }
    }
    matched.sort_by_key(|m| m.0);
    let max_deviation = matched.iter().map(|m| m.2).fold(0.0, f64::max);
    let unmatched_a: Vec<usize> = (0..a.len()).filter(|&i| !used_a[i]).collect();
    let unmatched_b: Vec<usize> = (0..b.len()).filter(|&j| !used_b[j]).collect();
    SpectrumComparison {
        all_within_tol: unmatched_a.is_empty() && unmatched_b.is_empty(),
        matched,
        unmatched_a,
        unmatched_b,
        max_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n4() -> ModelParams {
        ModelParams::new(4, 1.0, 1.0, vec![0.0], C64::new(0.0, 0.0)).unwrap()
    }

    fn collocation_grid() -> GridSpec {
        GridSpec::new(8.0, 64)
    }

    #[test]
    fn n2_levels_lie_above_the_potential_minimum() {
        let e = schrodinger_eigen_n2(1.0, 1.0, 3, &GridSpec::default()).unwrap();
        assert!(e.iter().all(|&x| x > 2.0));
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn n2_richardson_is_grid_converged() {
        let a = schrodinger_eigen_n2(1.0, 1.0, 3, &GridSpec::new(10.0, 2048)).unwrap();
        let b = schrodinger_eigen_n2(1.0, 1.0, 3, &GridSpec::new(10.0, 4096)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn n2_node_counts_increase_by_one() {
        let g = GridSpec::new(10.0, 1024);
        let e = schrodinger_eigen_n2(1.0, 1.0, 4, &g).unwrap();
        assert_eq!(n2_node_counts(1.0, 1.0, &e, &g).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn n2_oracles_agree() {
        let fd = schrodinger_eigen_n2(1.0, 1.0, 3, &GridSpec::default()).unwrap();
        let p = ModelParams::new(2, 1.0, 1.0, vec![], C64::new(0.0, 0.0)).unwrap();
        let col = difference_collocation_even(&p, &collocation_grid(), 3).unwrap();
        for (x, y) in fd.iter().zip(&col) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn n4_collocation_bounds_and_doubling() {
        let a = difference_collocation_even(&n4(), &collocation_grid(), 3).unwrap();
        // 2Λ⁴ + min y⁴ = 2
        assert!(a.iter().all(|&x| x > 2.0));
        let b = difference_collocation_even(&n4(), &GridSpec::new(16.0, 128), 1).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-8);
    }

    #[test]
    fn collocation_rejects_odd_order_and_overflowing_grids() {
        let p3 = ModelParams::new(3, 1.0, 1.0, vec![], C64::new(0.0, 0.0)).unwrap();
        assert!(matches!(difference_collocation_even(&p3, &collocation_grid(), 1), Err(Error::Domain(_))));
        let err = difference_collocation_even(&n4(), &GridSpec::new(2.0, 256), 1).unwrap_err();
        assert!(matches!(err, Error::Oracle(ref m) if m.contains("try L")), "{err}");
    }

    #[test]
    fn comparison_cases() {
        let a = [1.0, 2.0, 3.0];
        let same = compare_spectra(&a, &a, 1e-12);
        assert_eq!(same.max_deviation, 0.0);
        assert!(same.all_within_tol);

        let b: Vec<f64> = a.iter().map(|x| x + 1e-7).collect();
        let off = compare_spectra(&a, &b, 1e-6);
        assert_eq!(off.matched.len(), 3);
        assert!((off.max_deviation - 1e-7).abs() < 1e-12);

        let short = compare_spectra(&a, &a[..2], 1e-6);
        assert_eq!(short.unmatched_a, vec![2]);
        assert!(!short.all_within_tol);
    }
}
