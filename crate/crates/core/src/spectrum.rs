//! Roots of the quantization conditions in the spectral parameter `u_N`:
//! bound states on the real line for even `N`, resonances in a half-plane
//! for odd `N`.

use rayon::prelude::*;

use crate::connection::{qc_value_with_tol, QcCase};
use crate::error::{Error, Result};
use crate::floquet::locate_sigma;
use crate::qfn::{ModelParams, TruncationOpts};
use crate::C64;

/// Newton iteration cap in [`refine_root`].
pub const MAX_NEWTON_STEPS: usize = 50;

/// Relative tolerance on the root displacement under row doubling.
pub const STABILITY_TOL: f64 = 1e-7;

/// `qc(u_N)` on the Floquet data of `base` with `u_N` replaced.
pub fn quantization_function(base: &ModelParams, u_n: C64, case: QcCase, opts: &TruncationOpts) -> Result<C64> {
    let eval = || -> Result<C64> {
        let params = base.with_u_n(u_n)?;
        let fd = locate_sigma(&params, opts)?;
        qc_value_with_tol(&fd.sigma, &fd.zeta, case, opts.tol_abs)
    };
    eval().map_err(|e| e.at_u_n(u_n))
}

/// One sample of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSample {
    pub u_n: C64,
    /// `None` where the quantization function could not be evaluated.
    pub qc: Option<C64>,
}

/// A refined root of a quantization condition.
#[derive(Debug, Clone, PartialEq)]
pub struct RootRecord {
    pub u_n: C64,
    pub qc_abs: f64,
    /// `max |qc|` over the scan samples adjacent to the seed.
    pub local_scale: f64,
    pub refinement_steps: usize,
    /// Displacement of the root when `det_rows` is doubled.
    pub truncation_stability: f64,
    pub trajectory: Vec<C64>,
    pub warnings: Vec<String>,
}

impl RootRecord {
    /// Whether the root passed the truncation-stability re-solve.
    pub fn is_stable(&self) -> bool {
        self.truncation_stability < STABILITY_TOL * (1.0 + self.u_n.norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub case: QcCase,
    /// Accepted roots sorted by real part.
    pub roots: Vec<RootRecord>,
    /// Roots that moved too much under row doubling or whose residual is
    /// not small against the local scan scale.
    pub suspect: Vec<RootRecord>,
    /// Seeds handed to the refinement stage.
    pub candidates: Vec<C64>,
    pub scan_diag: Vec<ScanSample>,
    /// Grid points skipped after a failed evaluation, with the reason.
    pub gaps: Vec<(C64, String)>,
    /// Seeds whose refinement failed.
    pub failures: Vec<(C64, String)>,
}

/// Search region for [`spectrum_list`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchRegion {
    /// Uniform samples of real `u_N` in `[lo, hi]`.
    Real { lo: f64, hi: f64, steps: usize },
    /// Uniform `(re_steps + 1) × (im_steps + 1)` grid.
    Complex { re: (f64, f64), im: (f64, f64), re_steps: usize, im_steps: usize },
}

impl SearchRegion {
    /// Default odd-`N` rectangle: `Im u_N ∈ (0, im_max]` for case 1 and its
    /// mirror for case 2.
    pub fn half_plane(case: QcCase, re: (f64, f64), im_max: f64, re_steps: usize, im_steps: usize) -> Self {
        let lo = im_max / im_steps.max(1) as f64;
        let im = match case {
            QcCase::OddCase2 => (-im_max, -lo),
            _ => (lo, im_max),
        };
        SearchRegion::Complex { re, im, re_steps, im_steps }
    }
}

fn sample(base: &ModelParams, u: C64, du: f64, case: QcCase, opts: &TruncationOpts) -> (ScanSample, Option<(C64, String)>) {
    match quantization_function(base, u, case, opts) {
        Ok(q) => (ScanSample { u_n: u, qc: Some(q) }, None),
        Err(_) => {
            // one subdivision: retry a quarter cell away
            let v = u + C64::new(0.25 * du, 0.0);
            match quantization_function(base, v, case, opts) {
                Ok(q) => (ScanSample { u_n: v, qc: Some(q) }, None),
                Err(e) => (ScanSample { u_n: u, qc: None }, Some((u, e.to_string()))),
            }
        }
    }
}

/// Samples `qc` on a uniform real grid and returns seeds at sign changes of
/// the phase-aligned real part and at local minima of `|qc|`.
pub fn scan_real(base: &ModelParams, case: QcCase, lo: f64, hi: f64, steps: usize, opts: &TruncationOpts) -> Result<SpectrumResult> {
    if base.n() % 2 != 0 || case != QcCase::Even {
        return Err(Error::Domain("real scans apply to the even case only".into()));
    }
    if !(lo < hi) || steps == 0 {
        return Err(Error::Domain(format!("empty scan window [{lo}, {hi}] with {steps} steps")));
    }
    let du = (hi - lo) / steps as f64;
    let results: Vec<_> = (0..=steps)
        .into_par_iter()
        .map(|k| sample(base, C64::new(lo + du * k as f64, 0.0), du, case, opts))
        .collect();
    let mut scan = Vec::with_capacity(results.len());
    let mut gaps = Vec::new();
    for (s, g) in results {
        scan.push(s);
        gaps.extend(g);
    }
    let candidates = real_candidates(&scan);
    Ok(SpectrumResult { case, roots: vec![], suspect: vec![], candidates, scan_diag: scan, gaps, failures: vec![] })
}

/// The phase `φ` that makes `e^{−iφ} qc` closest to real on average.
fn dominant_phase(values: &[C64]) -> f64 {
    // weight by unit-modulus squares so exponential growth does not dominate
    let s: C64 = values.iter().filter(|q| q.norm() > 0.0).map(|q| (q / q.norm()).powi(2)).sum();
    0.5 * s.arg()
}

fn real_candidates(scan: &[ScanSample]) -> Vec<C64> {
    let vals: Vec<C64> = scan.iter().filter_map(|s| s.qc).collect();
    let rot = C64::from_polar(1.0, -dominant_phase(&vals));
    let mut out = Vec::new();
    for w in scan.windows(2) {
        if let (Some(a), Some(b)) = (w[0].qc, w[1].qc) {
            let (ra, rb) = ((a * rot).re, (b * rot).re);
            if ra == 0.0 {
                out.push(w[0].u_n);
            } else if ra.signum() != rb.signum() && rb != 0.0 {
                // linear interpolation of the bracket
                let t = ra / (ra - rb);
                out.push(w[0].u_n + (w[1].u_n - w[0].u_n) * t);
            }
        }
    }
    for w in scan.windows(3) {
        if let (Some(a), Some(b), Some(c)) = (w[0].qc, w[1].qc, w[2].qc) {
            if b.norm() < a.norm() && b.norm() < c.norm() {
                let close = out.iter().any(|u| (u - w[1].u_n).norm() < (w[2].u_n - w[0].u_n).norm());
                if !close {
                    out.push(w[1].u_n);
                }
            }
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re));
    out
}

fn complex_candidates(scan: &[ScanSample], nre: usize, nim: usize) -> Vec<C64> {
    let at = |i: usize, j: usize| scan[i * nim + j].qc.map(|q| q.norm());
    let mut out = Vec::new();
    for i in 0..nre {
        for j in 0..nim {
            let Some(centre) = at(i, j) else { continue };
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nre as i64 || jj >= nim as i64 {
                        continue;
                    }
                    if let Some(v) = at(ii as usize, jj as usize) {
                        if v < centre {
                            is_min = false;
                        }
                    }
                }
            }
            if is_min {
                out.push(scan[i * nim + j].u_n);
            }
        }
    }
    out
}

fn newton(base: &ModelParams, seed: C64, case: QcCase, opts: &TruncationOpts) -> Result<(C64, usize, Vec<C64>)> {
    let mut u = seed;
    let mut trajectory = vec![u];
    let mut last_step = f64::INFINITY;
    for it in 1..=MAX_NEWTON_STEPS {
        let q = quantization_function(base, u, case, opts)?;
        let h = 1e-6 * (1.0 + u.norm());
        let dq = (quantization_function(base, u + h, case, opts)? - quantization_function(base, u - h, case, opts)?)
            / (2.0 * h);
        let step = q / dq;
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        u -= step;
        trajectory.push(u);
        last_step = step.norm();
        if last_step < 1e-10 * (1.0 + u.norm()) {
            return Ok((u, it, trajectory));
        }
    }
    Err(Error::NoConvergence { iterations: MAX_NEWTON_STEPS, last_step, trajectory })
}

/// Complex Newton on `u_N ↦ qc` from `seed`, followed by a re-solve with
/// doubled `det_rows` to measure truncation stability.
pub fn refine_root(base: &ModelParams, seed: C64, case: QcCase, opts: &TruncationOpts) -> Result<RootRecord> {
    let (u, steps, trajectory) = newton(base, seed, case, opts)?;
    let doubled = opts.with_det_rows((opts.det_rows * 2).min(crate::qfn::MAX_DET_ROWS));
    let (u2, _, _) = newton(base, u, case, &doubled)?;
    let q = quantization_function(base, u, case, opts)?;
    let mut warnings = Vec::new();
    match case {
        QcCase::OddCase1 if u.im <= 0.0 => warnings.push("case-1 root outside the upper half-plane".to_string()),
        QcCase::OddCase2 if u.im >= 0.0 => warnings.push("case-2 root outside the lower half-plane".to_string()),
        _ => {}
    }
    Ok(RootRecord {
        u_n: u,
        qc_abs: q.norm(),
        local_scale: 0.0,
        refinement_steps: steps,
        truncation_stability: (u2 - u).norm(),
        trajectory,
        warnings,
    })
}

/// Scan, refine and deduplicate roots in `region`.
pub fn spectrum_list(base: &ModelParams, case: QcCase, region: SearchRegion, opts: &TruncationOpts) -> Result<SpectrumResult> {
    spectrum_list_seeded(base, case, region, &[], opts)
}

/// [`spectrum_list`] with user seeds refined alongside the scan candidates.
pub fn spectrum_list_seeded(
    base: &ModelParams,
    case: QcCase,
    region: SearchRegion,
    seeds: &[C64],
    opts: &TruncationOpts,
) -> Result<SpectrumResult> {
    let n = base.n();
    let parity_ok = match case {
        QcCase::Even => n % 2 == 0,
        _ => n % 2 == 1,
    };
    if !parity_ok {
        return Err(Error::Domain(format!("case {} does not apply to N = {n}", case.as_str())));
    }
    let mut result = match region {
        SearchRegion::Real { lo, hi, steps } => {
            if case != QcCase::Even {
                return Err(Error::Domain("odd cases need a complex search region".into()));
            }
            scan_real(base, case, lo, hi, steps, opts)?
        }
        SearchRegion::Complex { re, im, re_steps, im_steps } => scan_complex(base, case, re, im, re_steps, im_steps, opts)?,
    };
    let mut all_seeds = seeds.to_vec();
    all_seeds.extend(result.candidates.iter().copied());
    result.candidates = all_seeds.clone();
    let seeds = all_seeds;
    let outcomes: Vec<(C64, Result<RootRecord>)> =
        seeds.par_iter().map(|&s| (s, refine_root(base, s, case, opts))).collect();
    let mut accepted: Vec<RootRecord> = Vec::new();
    for (seed, out) in outcomes {
        match out {
            Ok(mut rec) => {
                rec.local_scale = local_scale(&result.scan_diag, seed);
                let scale = 1.0 + rec.u_n.norm();
                let dup = accepted.iter().chain(&result.suspect).any(|r| (r.u_n - rec.u_n).norm() < 1e-7 * scale);
                if dup {
                    continue;
                }
                if in_region(&region, rec.u_n) {
                    let small = rec.qc_abs < opts.tol_abs * rec.local_scale;
                    if !small {
                        rec.warnings.push(format!(
                            "|qc| = {:.3e} above tol_abs times the local scan scale {:.3e}",
                            rec.qc_abs, rec.local_scale
                        ));
                    }
                    if rec.is_stable() && small {
                        accepted.push(rec);
                    } else {
                        result.suspect.push(rec);
                    }
                }
            }
            Err(e) => result.failures.push((seed, e.to_string())),
        }
    }
    accepted.sort_by(|a, b| a.u_n.re.total_cmp(&b.u_n.re));
    result.roots = accepted;
    Ok(result)
}

fn in_region(region: &SearchRegion, u: C64) -> bool {
    match *region {
        SearchRegion::Real { lo, hi, .. } => {
            let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
            u.re >= lo - pad && u.re <= hi + pad
        }
        SearchRegion::Complex { re, im, .. } => u.re >= re.0 && u.re <= re.1 && u.im >= im.0 && u.im <= im.1,
    }
}

fn local_scale(scan: &[ScanSample], seed: C64) -> f64 {
    let mut best: Vec<(f64, f64)> = scan
        .iter()
        .filter_map(|s| s.qc.map(|q| ((s.u_n - seed).norm(), q.norm())))
        .collect();
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    best.iter().take(3).map(|p| p.1).fold(0.0, f64::max)
}

/// Samples `qc` on a uniform 2-D grid (row-major in `Re u_N`) and returns
/// local minima of `|qc|` as seeds.
pub fn scan_complex(
    base: &ModelParams,
    case: QcCase,
    re: (f64, f64),
    im: (f64, f64),
    re_steps: usize,
    im_steps: usize,
    opts: &TruncationOpts,
) -> Result<SpectrumResult> {
    if !(re.0 < re.1 && im.0 < im.1) || re_steps == 0 || im_steps == 0 {
        return Err(Error::Domain("empty complex search region".into()));
    }
    let (nre, nim) = (re_steps + 1, im_steps + 1);
    let dre = (re.1 - re.0) / re_steps as f64;
    let dim = (im.1 - im.0) / im_steps as f64;
    let results: Vec<_> = (0..nre * nim)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nim, k % nim);
            sample(base, C64::new(re.0 + dre * i as f64, im.0 + dim * j as f64), dre, case, opts)
        })
        .collect();
    let mut scan = Vec::with_capacity(results.len());
    let mut gaps = Vec::new();
    for (s, g) in results {
        scan.push(s);
        gaps.extend(g);
    }
    // grid order is needed for the neighbour test, so keep the requested points
    for (k, s) in scan.iter_mut().enumerate() {
        let (i, j) = (k / nim, k % nim);
        let nominal = C64::new(re.0 + dre * i as f64, im.0 + dim * j as f64);
        if s.u_n != nominal {
            s.u_n = nominal;
        }
    }
    let candidates = complex_candidates(&scan, nre, nim);
    Ok(SpectrumResult { case, roots: vec![], suspect: vec![], candidates, scan_diag: scan, gaps, failures: vec![] })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GROUND: f64 = -3.059174596902;

    fn n2() -> ModelParams {
        ModelParams::new(2, 1.0, 1.0, vec![], C64::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn nothing_above_the_potential_floor() {
        let region = SearchRegion::Real { lo: -1.9, hi: 0.0, steps: 20 };
        let res = spectrum_list(&n2(), QcCase::Even, region, &TruncationOpts::default()).unwrap();
        assert!(res.roots.is_empty(), "{:?}", res.roots);
        assert_eq!(res.scan_diag.len(), 21);
    }

    #[test]
    fn parity_mismatch_is_rejected() {
        let region = SearchRegion::Real { lo: -4.0, hi: -2.0, steps: 4 };
        assert!(spectrum_list(&n2(), QcCase::OddCase1, region, &TruncationOpts::default()).is_err());
    }

    #[test]
    fn refinement_lands_on_the_ground_state() {
        let r = refine_root(&n2(), C64::new(-3.0, 0.0), QcCase::Even, &TruncationOpts::default()).unwrap();
        assert!((r.u_n.re - GROUND).abs() < 1e-10 && r.u_n.im.abs() < 1e-10);
        assert!(r.is_stable());
        assert!(r.trajectory.len() >= 2);
    }

    #[test]
    fn seeds_are_deduplicated() {
        let region = SearchRegion::Real { lo: -4.0, hi: -2.0, steps: 10 };
        let seeds = [C64::new(-3.1, 0.0), C64::new(-3.0, 0.0), C64::new(-3.1, 0.0)];
        let res = spectrum_list_seeded(&n2(), QcCase::Even, region, &seeds, &TruncationOpts::default()).unwrap();
        assert_eq!(res.roots.len(), 1);
        assert!(res.candidates.len() >= 3);
    }

    #[test]
    fn quantization_function_vanishes_at_a_level() {
        let opts = TruncationOpts::default();
        let at = quantization_function(&n2(), C64::new(GROUND, 0.0), QcCase::Even, &opts).unwrap().norm();
        let off = quantization_function(&n2(), C64::new(-3.5, 0.0), QcCase::Even, &opts).unwrap().norm();
        assert!(at < 1e-8 * off, "{at} vs {off}");
    }
}
