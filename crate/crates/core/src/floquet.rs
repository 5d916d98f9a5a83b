//! Floquet exponents from the zeros of the quantum Wronskian, the
//! multipliers `ζ_j = Q₊/Q₋` at those zeros, the truncated Floquet series,
//! and the small-Λ asymptotic form of `η`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qfn::{q_core, q_function, scaled_wronskian, sort_complex, t_eval, Direction, ModelParams, TruncationOpts};
use crate::rootsys::{positive_root_pairs, weyl_vector};
use crate::special::ln_gamma;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Integer shift applied to one exponent to make `Σσ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigmaShift {
    /// Zero-based index into `sigma`.
    pub index: usize,
    /// Amount subtracted from that exponent.
    pub by: i64,
}

/// Floquet exponents and multipliers for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetData {
    /// `σ_j = iλ_j/ħ`, sorted by real then imaginary part.
    pub sigma: Vec<C64>,
    /// `ζ_j = Q₊(−iħσ_j)/Q₋(−iħσ_j)`.
    pub zeta: Vec<C64>,
    /// Principal `η_j = log ζ_j / (2πi)`.
    pub eta_rep: Vec<C64>,
    /// Newton correction `|W/W'|/ħ` at each zero, an estimate of the error
    /// in `σ_j`.
    pub residuals: Vec<f64>,
    pub opts_used: TruncationOpts,
    pub shift: Option<SigmaShift>,
    /// Half-width of the rectangle on which the zeros were counted.
    pub search_radius: f64,
}

impl FloquetData {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    /// Monodromy eigenvalues `Σ_j = e^{2πiσ_j}`.
    pub fn monodromy(&self) -> Vec<C64> {
        self.sigma.iter().map(|s| (2.0 * PI * I * s).exp()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    re: (f64, f64),
    im: (f64, f64),
}

impl Rect {
    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re.0, self.im.0),
            C64::new(self.re.1, self.im.0),
            C64::new(self.re.1, self.im.1),
            C64::new(self.re.0, self.im.1),
        ]
    }

    fn contains(&self, z: C64) -> bool {
        z.re >= self.re.0 && z.re <= self.re.1 && z.im >= self.im.0 && z.im <= self.im.1
    }

    fn center(&self) -> C64 {
        C64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    /// Cuts the longer side at fraction `frac`.
    fn split(&self, frac: f64) -> (Rect, Rect) {
        if self.re.1 - self.re.0 >= self.im.1 - self.im.0 {
            let m = self.re.0 + frac * (self.re.1 - self.re.0);
            (Rect { re: (self.re.0, m), ..*self }, Rect { re: (m, self.re.1), ..*self })
        } else {
            let m = self.im.0 + frac * (self.im.1 - self.im.0);
            (Rect { im: (self.im.0, m), ..*self }, Rect { im: (m, self.im.1), ..*self })
        }
    }
}

/// The function whose zeros are the `−iħσ_j`.
struct Wronskian<'a> {
    params: &'a ModelParams,
    opts: &'a TruncationOpts,
}

impl Wronskian<'_> {
    fn eval(&self, lam: C64) -> Result<C64> {
        scaled_wronskian(self.params, lam, self.opts)
    }

    /// Phase change of `W` along the segment `a → b`, refined until no
    /// step exceeds `π/4`.
    fn phase_along(&self, a: C64, b: C64, fa: C64, fb: C64, depth: u32) -> Result<f64> {
        let d = (fb / fa).arg();
        if d.abs() < PI / 4.0 {
            return Ok(d);
        }
        if depth > 40 {
            return Err(Error::Newton(format!(
                "Wronskian zero on or next to the contour near {}",
                0.5 * (a + b)
            )));
        }
        let m = 0.5 * (a + b);
        let fm = self.eval(m)?;
        Ok(self.phase_along(a, m, fa, fm, depth + 1)? + self.phase_along(m, b, fm, fb, depth + 1)?)
    }

    /// Number of zeros inside `rect` by the argument principle.
    fn count(&self, rect: &Rect) -> Result<i64> {
        const SAMPLES_PER_EDGE: usize = 24;
        let corners = rect.corners();
        let points: Vec<C64> = (0..4)
            .flat_map(|e| {
                let (a, b) = (corners[e], corners[(e + 1) % 4]);
                (0..SAMPLES_PER_EDGE).map(move |k| a + (b - a) * (k as f64 / SAMPLES_PER_EDGE as f64))
            })
            .collect();
        let values: Vec<C64> = points.par_iter().map(|&z| self.eval(z)).collect::<Result<_>>()?;
        let total: f64 = (0..points.len())
            .into_par_iter()
            .map(|k| {
                let k1 = (k + 1) % points.len();
                self.phase_along(points[k], points[k1], values[k], values[k1], 0)
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum();
        let winding = total / (2.0 * PI);
        let rounded = winding.round();
        if (winding - rounded).abs() > 0.05 {
            return Err(Error::Newton(format!("non-integer winding number {winding:.4}")));
        }
        Ok(rounded as i64)
    }

    fn derivative(&self, lam: C64) -> Result<C64> {
        let h = 1e-6 * self.params.hbar() * (1.0 + lam.norm());
        Ok((self.eval(lam + h)? - self.eval(lam - h)?) / (2.0 * h))
    }

    /// Newton iteration confined to `cell`; `None` if it leaves the cell or
    /// stalls.
    fn newton(&self, start: C64, cell: &Rect) -> Result<Option<C64>> {
        let mut lam = start;
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let f = self.eval(lam)?;
            if f == C64::new(0.0, 0.0) {
                return Ok(Some(lam));
            }
            let df = self.derivative(lam)?;
            let step = f / df;
            if !step.re.is_finite() || !step.im.is_finite() {
                return Ok(None);
            }
            lam -= step;
            if !cell.contains(lam) {
                return Ok(None);
            }
            let size = step.norm();
            if size < 1e-15 * (1.0 + lam.norm()) || (size < 1e-11 && size >= last) {
                return Ok(Some(lam));
            }
            last = size;
        }
        Ok(None)
    }
}

/// Strip offsets tried in turn. Real couplings put zeros exactly on
/// `Im λ = ±ħ/2` inside band gaps, so a shifted fundamental strip is needed
/// there.
const STRIP_OFFSETS: [f64; 4] = [0.0, 0.137, -0.163, 0.291];

/// Off-centre cut positions; symmetric data put zeros on the midlines.
const SPLIT_FRACTIONS: [f64; 3] = [0.5371, 0.4419, 0.6013];

/// Finds the `N` zeros of the quantum Wronskian in a fundamental strip of
/// height `ħ` and returns `σ_j = iλ_j/ħ` reduced to `|Re σ| ≤ 1/2`, with
/// multipliers.
pub fn locate_sigma(params: &ModelParams, opts: &TruncationOpts) -> Result<FloquetData> {
    opts.validate()?;
    let mut last = None;
    for offset in STRIP_OFFSETS {
        match locate_in_strip(params, opts, offset * params.hbar()) {
            Ok(fd) => return Ok(fd),
            Err(e @ (Error::Newton(_) | Error::MissedRoots { .. } | Error::DegenerateExponents(..))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one strip offset"))
}

fn locate_in_strip(params: &ModelParams, opts: &TruncationOpts, offset: f64) -> Result<FloquetData> {
    let n = params.n();
    let hbar = params.hbar();
    let w = Wronskian { params, opts };
    let taus = &params.taus().roots;
    let half = 0.5 * hbar - opts.tol_abs;
    let r0 = taus.iter().map(|t| t.re.abs()).fold(0.0, f64::max) + 2.0 * params.lambda() + 2.0 * hbar;

    let mut found = 0;
    let mut outer = None;
    for factor in 1..=3 {
        let r = r0 * factor as f64;
        // offset the vertical edges so symmetric parameter sets do not put
        // a zero on them
        let rect = Rect { re: (-r - 1e-3 * hbar, r + 1.7e-3 * hbar), im: (offset - half, offset + half) };
        found = w.count(&rect)?;
        if found == n as i64 {
            outer = Some((rect, r));
            break;
        }
        if found > n as i64 {
            break;
        }
    }
    let (rect, radius) = outer.ok_or(Error::MissedRoots { found, expected: n })?;

    let cells = isolate(&w, rect, n as i64, 0)?;
    let mut zeros: Vec<C64> = cells
        .par_iter()
        .map(|cell| polish(&w, cell, taus))
        .collect::<Result<_>>()?;
    for z in zeros.iter_mut() {
        // Re σ = −Im λ/ħ; move into |Re σ| ≤ 1/2
        let k = (z.im / hbar).round();
        if (z.im / hbar - k).abs() < 0.5 - 1e-12 || z.im.abs() > 0.5 * hbar {
            *z -= C64::new(0.0, k * hbar);
        }
    }

    let mut residuals = Vec::with_capacity(n);
    for &z in &zeros {
        let f = w.eval(z)?;
        let df = w.derivative(z)?;
        residuals.push(if f == C64::new(0.0, 0.0) { 0.0 } else { (f / df).norm() / hbar });
    }

    let mut sigma: Vec<C64> = zeros.iter().map(|&l| I * l / hbar).collect();
    let mut order: Vec<usize> = (0..n).collect();
    sort_indices(&sigma, &mut order);
    sigma = order.iter().map(|&i| sigma[i]).collect();
    residuals = order.iter().map(|&i| residuals[i]).collect();
    zeros = order.iter().map(|&i| zeros[i]).collect();

    for i in 0..n {
        for j in i + 1..n {
            if (sigma[i] - sigma[j]).norm() < opts.tol_rel {
                return Err(Error::DegenerateExponents(i + 1, j + 1));
            }
        }
    }

    let shift = normalize_sum(&mut sigma)?;
    let (zeta, eta_rep) = multipliers_at(params, &zeros, opts)?;
    Ok(FloquetData { sigma, zeta, eta_rep, residuals, opts_used: *opts, shift, search_radius: radius })
}

fn sort_indices(sigma: &[C64], order: &mut [usize]) {
    let mut keyed: Vec<C64> = sigma.to_vec();
    sort_complex(&mut keyed, 1e-12);
    let mut used = vec![false; sigma.len()];
    for (slot, target) in order.iter_mut().zip(&keyed) {
        let idx = (0..sigma.len()).find(|&i| !used[i] && sigma[i] == *target).expect("permuted value");
        used[idx] = true;
        *slot = idx;
    }
}

fn isolate(w: &Wronskian, rect: Rect, count: i64, depth: u32) -> Result<Vec<Rect>> {
    if count == 0 {
        return Ok(vec![]);
    }
    if count == 1 {
        return Ok(vec![rect]);
    }
    if depth > 50 {
        return Err(Error::DegenerateExponents(1, 2));
    }
    let mut last = None;
    let mut halves = None;
    for frac in SPLIT_FRACTIONS {
        let (a, b) = rect.split(frac);
        let (ca, cb) = rayon::join(|| w.count(&a), || w.count(&b));
        match (ca, cb) {
            (Ok(ca), Ok(cb)) if ca + cb == count => {
                halves = Some((a, b, ca, cb));
                break;
            }
            (Ok(ca), Ok(cb)) => {
                last = Some(Error::Newton(format!(
                    "inconsistent zero count after subdivision ({ca} + {cb} != {count})"
                )))
            }
            (Err(e), _) | (_, Err(e)) => last = Some(e),
        }
    }
    let Some((a, b, ca, cb)) = halves else {
        return Err(last.expect("at least one split"));
    };
    let mut out = isolate(w, a, ca, depth + 1)?;
    out.extend(isolate(w, b, cb, depth + 1)?);
    Ok(out)
}

/// Newton polish inside a one-zero cell, bisecting the cell when Newton
/// escapes.
fn polish(w: &Wronskian, cell: &Rect, taus: &[C64]) -> Result<C64> {
    let mut cell = *cell;
    for _ in 0..30 {
        let seed = taus.iter().copied().find(|t| cell.contains(*t)).unwrap_or_else(|| cell.center());
        if let Some(z) = w.newton(seed, &cell)? {
            return Ok(z);
        }
        if seed != cell.center() {
            if let Some(z) = w.newton(cell.center(), &cell)? {
                return Ok(z);
            }
        }
        let (a, b) = cell.split(0.5);
        cell = if w.count(&a)? == 1 { a } else { b };
    }
    Err(Error::Newton(format!("no convergence in cell around {}", cell.center())))
}

/// Brings `Σσ` to zero by shifting one exponent when the sum is a nonzero
/// integer.
fn normalize_sum(sigma: &mut [C64]) -> Result<Option<SigmaShift>> {
    let total: C64 = sigma.iter().sum();
    if total.norm() < 1e-9 {
        return Ok(None);
    }
    let k = total.re.round();
    if (total - k).norm() >= 1e-9 {
        return Err(Error::ZeroSum(total));
    }
    // shift the exponent that ends up closest to the strip
    let index = (0..sigma.len())
        .max_by(|&a, &b| (sigma[a].re * k).total_cmp(&(sigma[b].re * k)))
        .expect("nonempty");
    sigma[index] -= k;
    Ok(Some(SigmaShift { index, by: k as i64 }))
}

/// Multipliers and principal `η` for given exponents.
///
/// Exponents outside the fundamental strip are first moved into it by an
/// integer; `ζ` is unchanged by such shifts at a Wronskian zero.
pub fn multipliers(params: &ModelParams, sigma: &[C64], opts: &TruncationOpts) -> Result<(Vec<C64>, Vec<C64>)> {
    if sigma.len() != params.n() {
        return Err(Error::Dimension { left: sigma.len(), right: params.n() });
    }
    let zeros: Vec<C64> = sigma
        .iter()
        .map(|&s| {
            let s0 = s - s.re.round();
            -I * params.hbar() * s0
        })
        .collect();
    multipliers_at(params, &zeros, opts)
}

fn multipliers_at(params: &ModelParams, zeros: &[C64], opts: &TruncationOpts) -> Result<(Vec<C64>, Vec<C64>)> {
    let mut zeta = Vec::with_capacity(zeros.len());
    let mut eta = Vec::with_capacity(zeros.len());
    for (j, &zero) in zeros.iter().enumerate() {
        let lam = best_lattice_point(params, zero);
        let qm_full = q_function(params, lam, Direction::Minus, opts)?;
        if qm_full.norm() < opts.tol_abs {
            return Err(Error::MultiplierBlowUp(j + 1));
        }
        // the e^{−Nπλ/ħ} factors cancel in the ratio
        let z = q_core(params, lam, Direction::Plus, opts)? / q_core(params, lam, Direction::Minus, opts)?;
        zeta.push(z);
        eta.push(z.ln() / (2.0 * PI * I));
    }
    Ok((zeta, eta))
}

/// Among `λ`, `λ ± iħ`, the point farthest from the poles of `K±`, which
/// sit at `τ_k ∓ imħ`, `m ≥ 1`. At a Wronskian zero `Q₊/Q₋` takes the same
/// value on the whole lattice `λ + iħℤ`.
fn best_lattice_point(params: &ModelParams, lam: C64) -> C64 {
    let hbar = params.hbar();
    let clearance = |mu: C64| {
        let mut d = f64::INFINITY;
        for &tau in &params.taus().roots {
            for m in 1..=3 {
                let shift = I * hbar * m as f64;
                d = d.min((mu - tau + shift).norm()).min((mu - tau - shift).norm());
            }
        }
        d
    };
    if clearance(lam) > 0.25 * hbar {
        return lam;
    }
    [0.0, 1.0, -1.0]
        .iter()
        .map(|&k| lam + I * hbar * k)
        .max_by(|a, b| clearance(*a).total_cmp(&clearance(*b)))
        .expect("three candidates")
}

/// Leading small-Λ form of `η` obtained from the one-loop prepotential:
///
/// ```text
/// 2πi η = πi ρ − Σ_{α>0} [iπ/2 + 2i (α·a/ħ) ln(Λ/ħ) + ln Γ(1 − iα·a/ħ) − ln Γ(1 + iα·a/ħ)] α
/// ```
///
/// with `a = −iħσ`. Defined modulo integers.
pub fn eta_small_lambda(params: &ModelParams, sigma: &[C64]) -> Result<Vec<C64>> {
    let n = params.n();
    if sigma.len() != n {
        return Err(Error::Dimension { left: sigma.len(), right: n });
    }
    let hbar = params.hbar();
    let log_ratio = (params.lambda() / hbar).ln();
    let a: Vec<C64> = sigma.iter().map(|&s| -I * hbar * s).collect();
    let rho = weyl_vector(n)?.to_f64();
    let mut acc: Vec<C64> = rho.iter().map(|&r| I * PI * r).collect();
    for (k, l) in positive_root_pairs(n)? {
        let x = (a[k - 1] - a[l - 1]) / hbar;
        for arg in [C64::new(1.0, 0.0) - I * x, C64::new(1.0, 0.0) + I * x] {
            if arg.im.abs() < 1e-14 && arg.re <= 0.0 && (arg.re - arg.re.round()).abs() < 1e-14 {
                return Err(Error::Domain(format!("Gamma pole at 1 -/+ i alpha.a/hbar for root ({k}, {l})")));
            }
        }
        let b = I * PI / 2.0 + 2.0 * I * x * log_ratio + ln_gamma(C64::new(1.0, 0.0) - I * x)
            - ln_gamma(C64::new(1.0, 0.0) + I * x);
        acc[k - 1] -= b;
        acc[l - 1] += b;
    }
    Ok(acc.into_iter().map(|v| v / (2.0 * PI * I)).collect())
}

/// The puncture at which a Floquet series is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Puncture {
    /// `z = 0`, coefficients from `Q₊`.
    Zero,
    /// `z = ∞`, coefficients from `Q₋`.
    Infinity,
}

/// Laurent coefficients `c_n`, `n = −m..=m`, of the Floquet solution `j`.
///
/// On the side where the Q-function is recessive (`n ≤ 0` for `Q₊`, `n ≥ 0`
/// for `Q₋`) the coefficients are direct evaluations `Q(−iħ(σ_j + n))`. On
/// the other side direct evaluation suffers catastrophic cancellation, so
/// the coefficients continue the recursion
///
/// ```text
/// (iΛ)^N c_{n−1} + (−iΛ)^N c_{n+1} = t(−iħ(σ_j + n)) c_n
/// ```
///
/// as its minimal solution, through backward continued fractions. The two
/// halves join consistently only at a true Floquet exponent.
pub fn floquet_coefficients(
    params: &ModelParams,
    fd: &FloquetData,
    j: usize,
    which: Puncture,
    m: usize,
    opts: &TruncationOpts,
) -> Result<Vec<C64>> {
    if j >= fd.n() {
        return Err(Error::Domain(format!("exponent index {j} outside 0..{}", fd.n())));
    }
    let hbar = params.hbar();
    let lam = -I * hbar * fd.sigma[j];
    let y = |k: i64| lam - I * hbar * k as f64;
    let np = params.n() as i32;
    let up = (I * params.lambda()).powi(np);
    let down = (-I * params.lambda()).powi(np);
    let mi = m as i64;
    let extra = 40 + m as i64;
    let mut c = vec![C64::new(0.0, 0.0); 2 * m + 1];
    let idx = |k: i64| (k + mi) as usize;
    match which {
        Puncture::Zero => {
            for k in -mi..=0 {
                c[idx(k)] = q_function(params, y(k), Direction::Plus, opts)?;
            }
            // ρ_k = c_{k+1}/c_k from ρ_k = (iΛ)^N / (t(y_{k+1}) − (−iΛ)^N ρ_{k+1})
            let mut rho = vec![C64::new(0.0, 0.0); (extra + 1) as usize];
            for k in (0..extra).rev() {
                let next = rho[(k + 1) as usize];
                rho[k as usize] = up / (t_eval(params, y(k + 1)) - down * next);
            }
            for k in 0..mi {
                c[idx(k + 1)] = c[idx(k)] * rho[k as usize];
            }
        }
        Puncture::Infinity => {
            for k in 0..=mi {
                c[idx(k)] = q_function(params, y(k), Direction::Minus, opts)?;
            }
            // ρ'_k = c_{k−1}/c_k from ρ'_k = (−iΛ)^N / (t(y_{k−1}) − (iΛ)^N ρ'_{k−1})
            let mut rho = vec![C64::new(0.0, 0.0); (extra + 1) as usize];
            for k in (0..extra).rev() {
                let next = rho[(k + 1) as usize];
                rho[k as usize] = down / (t_eval(params, y(-k - 1)) - up * next);
            }
            for k in 0..mi {
                c[idx(-k - 1)] = c[idx(-k)] * rho[k as usize];
            }
        }
    }
    Ok(c)
}

/// Largest number of terms per side before a series is declared divergent.
pub const MAX_SERIES_TERMS: usize = 512;

/// `Σ_n c_n exp((σ_j + n) logz)` with the coefficients of
/// [`floquet_coefficients`], extended until the outermost terms on both
/// sides drop below `tol_rel` of the partial sum.
pub fn floquet_series_eval(
    params: &ModelParams,
    fd: &FloquetData,
    j: usize,
    which: Puncture,
    logz: C64,
    opts: &TruncationOpts,
) -> Result<C64> {
    opts.validate()?;
    let mut m = opts.series_terms;
    loop {
        let c = floquet_coefficients(params, fd, j, which, m, opts)?;
        let sigma = fd.sigma[j];
        let term = |k: i64| c[(k + m as i64) as usize] * ((sigma + k as f64) * logz).exp();
        let mut sum = C64::new(0.0, 0.0);
        let mut comp = C64::new(0.0, 0.0);
        for k in -(m as i64)..=(m as i64) {
            // Neumaier summation
            let x = term(k);
            let t = sum + x;
            comp += if sum.norm() >= x.norm() { (sum - t) + x } else { (x - t) + sum };
            sum = t;
        }
        let sum = sum + comp;
        let edge = term(m as i64).norm().max(term(-(m as i64)).norm());
        if edge < opts.tol_rel * sum.norm() {
            return Ok(sum);
        }
        if m >= MAX_SERIES_TERMS {
            return Err(Error::NotConverged { what: "Floquet series", rows: m, err_est: edge });
        }
        m = (2 * m).min(MAX_SERIES_TERMS);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn n2(u2: f64, lambda: f64) -> ModelParams {
        ModelParams::new(2, 1.0, lambda, vec![], c(u2, 0.0)).unwrap()
    }

    #[test]
    fn small_coupling_exponents_sit_at_the_roots() {
        let fd = locate_sigma(&n2(-1.0, 1e-3), &TruncationOpts::default()).unwrap();
        assert_eq!(fd.sigma.len(), 2);
        assert!((fd.sigma[0] - c(0.0, -1.0)).norm() < 1e-5, "{:?}", fd.sigma);
        assert!((fd.sigma[1] - c(0.0, 1.0)).norm() < 1e-5, "{:?}", fd.sigma);
        assert!(fd.shift.is_none());
    }

    #[test]
    fn exponents_sum_to_zero_and_residuals_are_small() {
        let opts = TruncationOpts::default();
        for (n, u, un, lambda) in [
            (2usize, vec![], c(-2.5, 0.0), 0.8),
            (3, vec![], c(0.7, 0.2), 0.5),
            (4, vec![-0.6], c(-1.1, 0.0), 0.9),
        ] {
            let p = ModelParams::new(n, 1.0, lambda, u, un).unwrap();
            let fd = locate_sigma(&p, &opts).unwrap();
            let total: C64 = fd.sigma.iter().sum();
            assert!(total.norm() < 1e-9, "N = {n}: sum {total}");
            for r in &fd.residuals {
                assert!(*r < 1e-10, "N = {n}: residual {r}");
            }
        }
    }

    #[test]
    fn exponents_closed_under_conjugation_for_real_couplings() {
        let p = ModelParams::new(4, 1.0, 0.7, vec![0.3], c(-2.0, 0.0)).unwrap();
        let fd = locate_sigma(&p, &TruncationOpts::default()).unwrap();
        for s in &fd.sigma {
            // σ = iλ/ħ, so the zero λ̄ carries the exponent −σ̄
            let best = fd.sigma.iter().map(|t| (t + s.conj()).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "{:?}", fd.sigma);
        }
    }

    #[test]
    fn multipliers_invariant_under_integer_shift() {
        let p = n2(-1.7, 0.6);
        let opts = TruncationOpts::default();
        let fd = locate_sigma(&p, &opts).unwrap();
        let shifted: Vec<C64> = fd.sigma.iter().map(|s| s + 1.0).collect();
        let (z2, _) = multipliers(&p, &shifted, &opts).unwrap();
        for (a, b) in fd.zeta.iter().zip(&z2) {
            assert!((a - b).norm() < 1e-12 * a.norm());
        }
    }

    #[test]
    fn eta_small_lambda_at_symmetric_point() {
        // σ = 0: each root contributes −iπ/2, so 2πi η = iπρ − (iπ/2) Σ α
        // and Σ_{α>0} α = 2ρ, giving η = ρ/2 − ρ/2 = 0
        let p = ModelParams::new(3, 1.0, 0.01, vec![], c(0.1, 0.0)).unwrap();
        let eta = eta_small_lambda(&p, &[c(0.0, 0.0); 3]).unwrap();
        for e in eta {
            assert!(e.norm() < 1e-15, "{e}");
        }
    }

    #[test]
    fn eta_small_lambda_matches_multipliers() {
        let opts = TruncationOpts::default();
        let mut errs = vec![];
        for lambda in [1e-2, 1e-3] {
            let p = n2(-0.09, lambda);
            let fd = locate_sigma(&p, &opts).unwrap();
            let approx = eta_small_lambda(&p, &fd.sigma).unwrap();
            let err = fd
                .eta_rep
                .iter()
                .zip(&approx)
                .map(|(a, b)| {
                    let d = a - b;
                    (d - d.re.round()).norm()
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] < 1e-3 && errs[1] < errs[0] / 50.0, "{errs:?}");
    }

    #[test]
    fn coefficients_obey_the_three_term_recursion() {
        let p = n2(-1.7, 0.6);
        let opts = TruncationOpts::default();
        let fd = locate_sigma(&p, &opts).unwrap();
        let m = 10usize;
        for which in [Puncture::Zero, Puncture::Infinity] {
            let co = floquet_coefficients(&p, &fd, 0, which, m, &opts).unwrap();
            let lam = -I * fd.sigma[0];
            for k in -(m as i64) + 1..(m as i64) {
                let i = (k + m as i64) as usize;
                // (iΛ)² = (−iΛ)² = −Λ²
                let lhs = -(co[i - 1] + co[i + 1]) * p.lambda().powi(2);
                let rhs = t_eval(&p, lam - I * k as f64) * co[i];
                let scale = rhs.norm().max((co[i - 1].norm() + co[i + 1].norm()) * p.lambda().powi(2));
                assert!((lhs - rhs).norm() < 1e-9 * scale, "{which:?} n = {k}");
            }
        }
    }

    #[test]
    fn series_monodromy_and_ratio() {
        let p = n2(-1.7, 0.6);
        let opts = TruncationOpts::default();
        let fd = locate_sigma(&p, &opts).unwrap();
        for j in 0..2 {
            let logz = c(0.0, 0.4);
            let f0 = floquet_series_eval(&p, &fd, j, Puncture::Zero, logz, &opts).unwrap();
            let f1 = floquet_series_eval(&p, &fd, j, Puncture::Zero, logz + 2.0 * PI * I, &opts).unwrap();
            let mono = (2.0 * PI * I * fd.sigma[j]).exp();
            assert!((f1 - mono * f0).norm() < 1e-8 * f1.norm());
            let finf = floquet_series_eval(&p, &fd, j, Puncture::Infinity, logz, &opts).unwrap();
            assert!((f0 / finf - fd.zeta[j]).norm() < 1e-8 * fd.zeta[j].norm(), "j = {j}");
        }
    }
}
