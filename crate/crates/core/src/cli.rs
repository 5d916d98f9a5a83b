//! Command-line front end: JSON job files in, CSV/JSON results out.
//!
//! Every output file embeds the resolved configuration and the crate
//! version. Outputs are byte-identical for identical inputs: scans are
//! merged by grid index and JSON maps are key-sorted.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::connection::{build_connection, minor_det_direct, minor_det_subset_sum, qc_value, QcCase};
use crate::error::{Error, Result};
use crate::floquet::{floquet_series_eval, locate_sigma, FloquetData, Puncture};
use crate::oracle::{compare_spectra, difference_collocation_even, schrodinger_eigen_n2, GridSpec};
use crate::qfn::{baxter_residual, quantum_wronskian, Direction, ModelParams, TruncationOpts};
use crate::rootsys::weyl_orbit_subsets;
use crate::spectrum::{scan_complex, scan_real, spectrum_list_seeded, RootRecord, SearchRegion, SpectrumResult};
use crate::{C64, VERSION};

/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 1;
/// Exit code for unreadable or invalid configurations.
pub const EXIT_CONFIG: i32 = 2;

/// Complex number as it appears in JSON.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cplx {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<C64> for Cplx {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Cplx> for C64 {
    fn from(z: Cplx) -> Self {
        C64::new(z.re, z.im)
    }
}

fn cj(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn cjv(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|&z| cj(z)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub hbar: f64,
    pub lambda: f64,
    /// `u_2, …, u_{N−2}`.
    #[serde(default)]
    pub u: Vec<f64>,
    /// Spectral parameter; ignored by scans and solves.
    #[serde(default)]
    pub u_n: Cplx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// `Re u_N` window.
    pub re: [f64; 2],
    /// `Im u_N` window; absent for real scans.
    #[serde(default)]
    pub im: Option<[f64; 2]>,
    #[serde(default = "default_re_steps")]
    pub re_steps: usize,
    #[serde(default = "default_im_steps")]
    pub im_steps: usize,
}

fn default_re_steps() -> usize {
    200
}

fn default_im_steps() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Grid for the N = 2 finite-difference solver.
    #[serde(default)]
    pub fd_grid: Option<GridSpec>,
    /// Grid for the collocation solver.
    #[serde(default)]
    pub collocation_grid: Option<GridSpec>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_oracle_tol")]
    pub tol: f64,
    /// A `solve.json` to compare against; the solve is rerun when absent.
    #[serde(default)]
    pub solve_output: Option<PathBuf>,
}

fn default_count() -> usize {
    3
}

fn default_oracle_tol() -> f64 {
    1e-6
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { fd_grid: None, collocation_grid: None, count: 3, tol: 1e-6, solve_output: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    /// Relative perturbation applied to ζ before `qc_value`; nonzero values
    /// make the three-way check fail on purpose.
    #[serde(default)]
    pub zeta_perturbation: f64,
    #[serde(default = "default_verify_tol")]
    pub tol: f64,
}

fn default_instances() -> usize {
    100
}

fn default_seed() -> u64 {
    1
}

fn default_orders() -> Vec<usize> {
    (2..=8).collect()
}

fn default_verify_tol() -> f64 {
    1e-9
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { instances: 100, seed: 1, orders: default_orders(), zeta_perturbation: 0.0, tol: 1e-9 }
    }
}

/// A parsed job file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub truncation: TruncationOpts,
    /// Quantization condition; defaults to `even` or `odd_case1` by parity.
    #[serde(default)]
    pub case: Option<QcCase>,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    /// Extra Newton seeds for `solve`.
    #[serde(default)]
    pub seeds: Vec<Cplx>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: JobConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Re-checks every physical constraint; failures are config errors.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.params().map_err(cfg)?;
        self.truncation.validate().map_err(cfg)?;
        if let Some(case) = self.case {
            case.check(self.model.n).map_err(cfg)?;
        }
        if let Some(scan) = &self.scan {
            if !(scan.re[0] < scan.re[1]) {
                return Err(Error::Config(format!("empty scan window re = {:?}", scan.re)));
            }
            if let Some(im) = scan.im {
                if !(im[0] < im[1]) {
                    return Err(Error::Config(format!("empty scan window im = {im:?}")));
                }
            }
            if scan.re_steps == 0 || scan.im_steps == 0 {
                return Err(Error::Config("scan steps must be positive".into()));
            }
        }
        if let Some(o) = &self.oracle {
            for g in [o.fd_grid, o.collocation_grid].into_iter().flatten() {
                g.validate().map_err(cfg)?;
            }
            if o.count == 0 || !(o.tol > 0.0) {
                return Err(Error::Config("oracle count and tol must be positive".into()));
            }
        }
        if let Some(v) = &self.verify {
            if v.orders.iter().any(|&n| !(2..=12).contains(&n)) {
                return Err(Error::Config("verify orders must lie in 2..=12".into()));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.n, m.hbar, m.lambda, m.u.clone(), m.u_n.into())
    }

    pub fn case(&self) -> QcCase {
        self.case.unwrap_or_else(|| QcCase::for_order(self.model.n))
    }
}

#[derive(Debug, Parser)]
#[command(name = "toda-spectra", version, about = "Floquet data, quantization conditions and spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON job file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Override `truncation.det_rows`.
    #[arg(long)]
    pub det_rows: Option<usize>,
    /// Worker threads for parallel scans.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Floquet exponents and multipliers.
    Sigma(CommonArgs),
    /// Quantization function on a scan grid.
    Qc(CommonArgs),
    /// Roots of the quantization condition.
    Solve(CommonArgs),
    /// Identity suites.
    Verify(CommonArgs),
    /// Brute-force oracles against a solve.
    Oracle(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Sigma(a) | Command::Qc(a) | Command::Solve(a) | Command::Verify(a) | Command::Oracle(a) => a,
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.root_cause() {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Machine-readable error blob printed on stderr.
pub fn error_json(e: &Error) -> String {
    let mut v = json!({
        "error": {
            "kind": e.kind(),
            "message": e.to_string(),
            "exit_code": exit_code(e),
        }
    });
    if let Error::AtSpectralParameter { u_n, .. } = e {
        v["error"]["u_n"] = cj(*u_n);
    }
    if let Error::NoConvergence { trajectory, .. } = e.root_cause() {
        v["error"]["trajectory"] = cjv(trajectory);
    }
    v.to_string()
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(report) => {
            print!("{report}");
            report_exit(&report)
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

fn report_exit(report: &str) -> i32 {
    if report.lines().any(|l| l.ends_with(" FAIL")) {
        EXIT_NUMERICAL
    } else {
        0
    }
}

/// Loads the config, applies command-line overrides and dispatches.
/// Returns the text printed on stdout.
pub fn execute(cmd: &Command) -> Result<String> {
    let args = cmd.common();
    let mut cfg = JobConfig::load(&args.config)?;
    if let Some(rows) = args.det_rows {
        cfg.truncation.det_rows = rows;
        cfg.validate()?;
    }
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::Config(format!("{}: {e}", args.out.display())))?;
    let out = &args.out;
    match cmd {
        Command::Sigma(_) => cmd_sigma(&cfg, out),
        Command::Qc(_) => cmd_qc(&cfg, out),
        Command::Solve(_) => cmd_solve(&cfg, out),
        Command::Verify(_) => cmd_verify(&cfg, out),
        Command::Oracle(_) => cmd_oracle(&cfg, out),
    }
}

fn header(cfg: &JobConfig, command: &str) -> Value {
    json!({
        "version": VERSION,
        "command": command,
        "config": serde_json::to_value(cfg).expect("config serializes"),
    })
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn write_csv(path: &Path, cfg: &JobConfig, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))?;
    drop(w);
    // config and version as a sidecar, since CSV has no comment syntax
    let meta = path.with_extension("csv.json");
    write_json(&meta, &header_for_csv(cfg, path))
}

fn header_for_csv(cfg: &JobConfig, path: &Path) -> Value {
    let mut h = header(cfg, "csv");
    h["describes"] = json!(path.file_name().map(|s| s.to_string_lossy().into_owned()));
    h
}

fn sigma_table(fd: &FloquetData) -> Vec<Vec<String>> {
    (0..fd.n())
        .map(|j| {
            vec![
                (j + 1).to_string(),
                fmt_f64(fd.sigma[j].re),
                fmt_f64(fd.sigma[j].im),
                fmt_f64(fd.zeta[j].re),
                fmt_f64(fd.zeta[j].im),
                fmt_f64(fd.residuals[j]),
            ]
        })
        .collect()
}

/// `sigma.csv` and `sigma.json`, with a re-solve at doubled `det_rows`.
pub fn cmd_sigma(cfg: &JobConfig, out: &Path) -> Result<String> {
    let params = cfg.params()?;
    let opts = cfg.truncation;
    let fd = locate_sigma(&params, &opts)?;
    let doubled = opts.with_det_rows((2 * opts.det_rows).min(crate::qfn::MAX_DET_ROWS));
    let fd2 = locate_sigma(&params, &doubled)?;
    let drift = fd.sigma.iter().zip(&fd2.sigma).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    write_csv(
        &out.join("sigma.csv"),
        cfg,
        &["j", "re_sigma", "im_sigma", "re_zeta", "im_zeta", "residual"],
        &sigma_table(&fd),
    )?;
    let mut v = header(cfg, "sigma");
    v["sigma"] = cjv(&fd.sigma);
    v["zeta"] = cjv(&fd.zeta);
    v["eta"] = cjv(&fd.eta_rep);
    v["residuals"] = json!(fd.residuals);
    v["search_radius"] = json!(fd.search_radius);
    v["sum_shift"] = match fd.shift {
        Some(s) => json!({ "index": s.index + 1, "by": s.by }),
        None => Value::Null,
    };
    v["stability"] = json!({ "det_rows": doubled.det_rows, "max_sigma_drift": drift });
    write_json(&out.join("sigma.json"), &v)?;

    let mut s = String::new();
    for (j, sig) in fd.sigma.iter().enumerate() {
        let _ = writeln!(s, "sigma_{} = {:+.12} {:+.12}i", j + 1, sig.re, sig.im);
    }
    let _ = writeln!(s, "max drift under det_rows doubling: {drift:.3e}");
    Ok(s)
}

fn scan_of(cfg: &JobConfig) -> Result<ScanConfig> {
    cfg.scan.clone().ok_or_else(|| Error::Config("this command needs a \"scan\" block".into()))
}

fn is_real_scan(cfg: &JobConfig, scan: &ScanConfig) -> bool {
    cfg.case() == QcCase::Even && scan.im.is_none()
}

fn odd_default_im(case: QcCase) -> [f64; 2] {
    match case {
        QcCase::OddCase2 => [-5.0, -0.5],
        _ => [0.5, 5.0],
    }
}

fn run_scan(cfg: &JobConfig, base: &ModelParams, scan: &ScanConfig) -> Result<SpectrumResult> {
    let case = cfg.case();
    if is_real_scan(cfg, scan) {
        scan_real(base, case, scan.re[0], scan.re[1], scan.re_steps, &cfg.truncation)
    } else {
        let im = scan.im.unwrap_or_else(|| odd_default_im(case));
        scan_complex(base, case, (scan.re[0], scan.re[1]), (im[0], im[1]), scan.re_steps, scan.im_steps, &cfg.truncation)
    }
}

/// `qc_scan.csv`, `qc_scan.gp` and `qc.json`.
pub fn cmd_qc(cfg: &JobConfig, out: &Path) -> Result<String> {
    let base = cfg.params()?;
    let scan = scan_of(cfg)?;
    let res = run_scan(cfg, &base, &scan)?;
    let rows: Vec<Vec<String>> = res
        .scan_diag
        .iter()
        .map(|s| {
            let (re, im, abs) = match s.qc {
                Some(q) => (fmt_f64(q.re), fmt_f64(q.im), fmt_f64(q.norm())),
                None => (String::new(), String::new(), String::new()),
            };
            vec![fmt_f64(s.u_n.re), fmt_f64(s.u_n.im), re, im, abs]
        })
        .collect();
    write_csv(&out.join("qc_scan.csv"), cfg, &["re_u", "im_u", "re_qc", "im_qc", "abs_qc"], &rows)?;
    let gp = if is_real_scan(cfg, &scan) {
        "set datafile separator ','\nset key autotitle columnhead\nset logscale y\n\
         set xlabel 'Re u_N'\nset ylabel '|qc|'\n\
         plot 'qc_scan.csv' using 1:5 with linespoints title '|qc|'\n"
    } else {
        "set datafile separator ','\nset key autotitle columnhead\n\
         set xlabel 'Re u_N'\nset ylabel 'Im u_N'\nset cblabel 'log10 |qc|'\nset view map\n\
         splot 'qc_scan.csv' using 1:2:(log10($5)) with points pointtype 5 palette title '|qc|'\n"
    };
    let cfg_line = serde_json::to_string(cfg).expect("config serializes");
    fs::write(out.join("qc_scan.gp"), format!("# toda-spectra {VERSION}\n# config: {cfg_line}\n{gp}"))
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut v = header(cfg, "qc");
    v["case"] = json!(cfg.case().as_str());
    v["samples"] = json!(res.scan_diag.len());
    v["candidates"] = cjv(&res.candidates);
    v["gaps"] = Value::Array(res.gaps.iter().map(|(u, m)| json!({ "u_n": cj(*u), "reason": m })).collect());
    write_json(&out.join("qc.json"), &v)?;
    Ok(format!(
        "{} samples, {} candidates, {} gaps\n",
        res.scan_diag.len(),
        res.candidates.len(),
        res.gaps.len()
    ))
}

fn root_json(r: &RootRecord, case: QcCase) -> Value {
    json!({
        "case": case.as_str(),
        "u_n": cj(r.u_n),
        "qc_abs": r.qc_abs,
        "local_scale": r.local_scale,
        "refinement_steps": r.refinement_steps,
        "truncation_stability": r.truncation_stability,
        "trajectory": cjv(&r.trajectory),
        "warnings": r.warnings,
    })
}

fn solve(cfg: &JobConfig, base: &ModelParams) -> Result<SpectrumResult> {
    let scan = scan_of(cfg)?;
    let case = cfg.case();
    let region = if is_real_scan(cfg, &scan) {
        SearchRegion::Real { lo: scan.re[0], hi: scan.re[1], steps: scan.re_steps }
    } else {
        let im = scan.im.unwrap_or_else(|| odd_default_im(case));
        SearchRegion::Complex { re: (scan.re[0], scan.re[1]), im: (im[0], im[1]), re_steps: scan.re_steps, im_steps: scan.im_steps }
    };
    let seeds: Vec<C64> = cfg.seeds.iter().map(|&s| s.into()).collect();
    spectrum_list_seeded(base, case, region, &seeds, &cfg.truncation)
}

/// `solve.json` and `roots.csv`.
pub fn cmd_solve(cfg: &JobConfig, out: &Path) -> Result<String> {
    let base = cfg.params()?;
    let res = solve(cfg, &base)?;
    let case = res.case;
    let rows: Vec<Vec<String>> = res
        .roots
        .iter()
        .map(|r| {
            vec![
                case.as_str().to_string(),
                fmt_f64(r.u_n.re),
                fmt_f64(r.u_n.im),
                fmt_f64(r.qc_abs),
                r.refinement_steps.to_string(),
                fmt_f64(r.truncation_stability),
            ]
        })
        .collect();
    write_csv(
        &out.join("roots.csv"),
        cfg,
        &["case", "re_u", "im_u", "abs_qc", "refinement_steps", "truncation_stability"],
        &rows,
    )?;
    let mut v = header(cfg, "solve");
    v["case"] = json!(case.as_str());
    v["roots"] = Value::Array(res.roots.iter().map(|r| root_json(r, case)).collect());
    v["suspect"] = Value::Array(res.suspect.iter().map(|r| root_json(r, case)).collect());
    v["failures"] = Value::Array(res.failures.iter().map(|(u, m)| json!({ "seed": cj(*u), "reason": m })).collect());
    v["gaps"] = Value::Array(res.gaps.iter().map(|(u, m)| json!({ "u_n": cj(*u), "reason": m })).collect());
    write_json(&out.join("solve.json"), &v)?;
    let mut s = String::new();
    for r in &res.roots {
        let _ = writeln!(s, "{} u_N = {:+.12} {:+.12}i  |qc| = {:.2e}", case.as_str(), r.u_n.re, r.u_n.im, r.qc_abs);
    }
    let _ = writeln!(s, "{} roots, {} suspect, {} failed seeds", res.roots.len(), res.suspect.len(), res.failures.len());
    Ok(s)
}

/// One line of the verify table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub suite: String,
    pub n: usize,
    pub metric: f64,
    pub tol: f64,
    pub pass: bool,
    pub note: String,
}

fn zero_sum_draw(rng: &mut ChaCha8Rng, n: usize, re: f64, im: f64) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-re..re), rng.gen_range(-im..im))).collect();
    let mean = v.iter().sum::<C64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

fn min_gap(v: &[C64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let d = v[i] - v[j];
            // distance of σ_i − σ_j from the integers
            g = g.min(C64::new(d.re - d.re.round(), d.im).norm());
        }
    }
    g
}

/// Direct minor, subset sum and `qc_value` on random zero-sum data; for
/// odd `N` also `qc(odd_case2)` against the minor of `E⁻¹`.
pub fn minor_identity_suite(cfg: &VerifyConfig) -> Result<Vec<SuiteRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
    let mut rows = Vec::new();
    for &n in &cfg.orders {
        let m = n.div_ceil(2);
        let case = QcCase::for_order(n);
        let (mut worst, mut worst_inv) = (0.0f64, 0.0f64);
        let mut done = 0;
        while done < cfg.instances {
            let sigma = zero_sum_draw(&mut rng, n, 0.45, 0.3);
            let eta = zero_sum_draw(&mut rng, n, 0.5, 0.3);
            if min_gap(&sigma) < 0.05 {
                continue;
            }
            let mono: Vec<C64> = sigma.iter().map(|s| (two_pi_i * s).exp()).collect();
            let zeta: Vec<C64> = eta.iter().map(|e| (two_pi_i * e).exp()).collect();
            let direct = minor_det_direct(&build_connection(&mono, &zeta)?, m)?;
            let subset = minor_det_subset_sum(&mono, &zeta, m)?;
            let perturbed: Vec<C64> = zeta.iter().map(|z| z * (1.0 + cfg.zeta_perturbation)).collect();
            let qc = qc_value(&sigma, &perturbed, case)?;
            let scale = direct.norm();
            worst = worst.max((direct - subset).norm() / scale).max((qc - direct).norm() / scale).max((qc - subset).norm() / scale);
            if n % 2 == 1 {
                let inv: Vec<C64> = zeta.iter().map(|z| z.inv()).collect();
                let d_inv = minor_det_direct(&build_connection(&mono, &inv)?, m)?;
                let q2 = qc_value(&sigma, &perturbed, QcCase::OddCase2)?;
                worst_inv = worst_inv.max((q2 - d_inv).norm() / d_inv.norm());
            }
            done += 1;
        }
        rows.push(SuiteRow {
            suite: "minor_three_way".into(),
            n,
            metric: worst,
            tol: cfg.tol,
            pass: worst < cfg.tol,
            note: format!("{} draws, case {}", cfg.instances, case.as_str()),
        });
        if n % 2 == 1 {
            rows.push(SuiteRow {
                suite: "inverse_minor".into(),
                n,
                metric: worst_inv,
                tol: cfg.tol,
                pass: worst_inv < cfg.tol,
                note: "odd_case2 vs E^-1 minor".into(),
            });
        }
    }
    Ok(rows)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Orbit sizes `C(N, ⌈N/2⌉)` of the weight indexing the minor.
pub fn orbit_size_suite(orders: &[usize]) -> Result<Vec<SuiteRow>> {
    orders
        .iter()
        .map(|&n| {
            let k = n.div_ceil(2);
            let size = weyl_orbit_subsets(n, k.min(n - 1))?.len();
            let expected = binomial(n, k.min(n - 1));
            Ok(SuiteRow {
                suite: "orbit_size".into(),
                n,
                metric: size as f64,
                tol: 0.0,
                pass: size == expected,
                note: format!("C({n},{}) = {expected}", k.min(n - 1)),
            })
        })
        .collect()
}

fn sample_points(rng: &mut ChaCha8Rng, params: &ModelParams, count: usize) -> Vec<C64> {
    let h = params.hbar();
    (0..count).map(|_| C64::new(rng.gen_range(-1.5..1.5) * h, rng.gen_range(-0.4..0.4) * h)).collect()
}

/// Wronskian quasi-periodicity, Baxter residuals and Floquet monodromy for
/// the configured model.
pub fn model_identity_suite(params: &ModelParams, opts: &TruncationOpts, seed: u64) -> Result<Vec<SuiteRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n();
    let shift = C64::new(0.0, params.hbar());
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut rows = Vec::new();

    let mut worst = 0.0f64;
    for lam in sample_points(&mut rng, params, 10) {
        let w0 = quantum_wronskian(params, lam, opts)?;
        let w1 = quantum_wronskian(params, lam + shift, opts)?;
        worst = worst.max((w1 - sign * w0).norm() / w0.norm());
    }
    rows.push(SuiteRow {
        suite: "wronskian_periodicity".into(),
        n,
        metric: worst,
        tol: 1e-8,
        pass: worst < 1e-8,
        note: "10 points".into(),
    });

    let mut worst = 0.0f64;
    for y in sample_points(&mut rng, params, 10) {
        for d in [Direction::Plus, Direction::Minus] {
            worst = worst.max(baxter_residual(params, y, d, opts)?);
        }
    }
    rows.push(SuiteRow { suite: "baxter_residual".into(), n, metric: worst, tol: 1e-9, pass: worst < 1e-9, note: "10 points, Q+ and Q-".into() });

    let fd = locate_sigma(params, opts)?;
    let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
    let logz = C64::new(0.3, 0.2);
    let (mut mono, mut ratio) = (0.0f64, 0.0f64);
    for j in 0..n {
        let a = floquet_series_eval(params, &fd, j, Puncture::Zero, logz, opts)?;
        let b = floquet_series_eval(params, &fd, j, Puncture::Zero, logz + two_pi_i, opts)?;
        let expected = (two_pi_i * fd.sigma[j]).exp();
        mono = mono.max((b / a - expected).norm() / expected.norm());
        let inf = floquet_series_eval(params, &fd, j, Puncture::Infinity, logz, opts)?;
        ratio = ratio.max((a / inf - fd.zeta[j]).norm() / fd.zeta[j].norm());
    }
    rows.push(SuiteRow { suite: "floquet_monodromy".into(), n, metric: mono, tol: 1e-8, pass: mono < 1e-8, note: "logz -> logz + 2 pi i".into() });
    rows.push(SuiteRow { suite: "floquet_ratio".into(), n, metric: ratio, tol: 1e-8, pass: ratio < 1e-8, note: "zero/infinity series ratio vs zeta".into() });
    Ok(rows)
}

/// Runs every suite, writes `verify.json` and returns the table.
pub fn cmd_verify(cfg: &JobConfig, out: &Path) -> Result<String> {
    let vc = cfg.verify.clone().unwrap_or_default();
    let mut rows = minor_identity_suite(&vc)?;
    rows.extend(orbit_size_suite(&vc.orders)?);
    rows.extend(model_identity_suite(&cfg.params()?, &cfg.truncation, vc.seed)?);
    let mut v = header(cfg, "verify");
    v["rows"] = serde_json::to_value(&rows).expect("rows serialize");
    v["all_pass"] = json!(rows.iter().all(|r| r.pass));
    write_json(&out.join("verify.json"), &v)?;
    let mut s = format!("{:<24} {:>3} {:>12} {:>8}  result\n", "suite", "N", "metric", "tol");
    for r in &rows {
        let _ = writeln!(
            s,
            "{:<24} {:>3} {:>12.3e} {:>8.0e}  {}",
            r.suite,
            r.n,
            r.metric,
            r.tol,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(s)
}

fn solve_roots_from_file(path: &Path) -> Result<Vec<C64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let roots = v["roots"].as_array().ok_or_else(|| Error::Config("solve output has no roots array".into()))?;
    roots
        .iter()
        .map(|r| {
            let c: Cplx = serde_json::from_value(r["u_n"].clone()).map_err(|e| Error::Config(e.to_string()))?;
            Ok(c.into())
        })
        .collect()
}

/// Oracle eigenvalues compared with the quantization roots (`oracle.json`).
pub fn cmd_oracle(cfg: &JobConfig, out: &Path) -> Result<String> {
    let base = cfg.params()?;
    let n = base.n();
    let mut v = header(cfg, "oracle");
    if n % 2 == 1 {
        v["available"] = json!(false);
        v["reason"] = json!("no desk-scale oracle for odd N; resonances are checked by conjugate pairing and truncation stability");
        write_json(&out.join("oracle.json"), &v)?;
        return Ok(format!("no oracle for odd N = {n}; see `verify` and the conjugate-pairing check\n"));
    }
    let oc = cfg.oracle.clone().unwrap_or_default();
    let roots = match &oc.solve_output {
        Some(p) => solve_roots_from_file(p)?,
        None => solve(cfg, &base)?.roots.iter().map(|r| r.u_n).collect(),
    };
    let predicted: Vec<f64> = roots.iter().map(|u| -u.re).collect();
    let col_grid = oc.collocation_grid.unwrap_or(GridSpec::new(8.0, 64));
    let mu = difference_collocation_even(&base, &col_grid, oc.count)?;
    let vs_col = compare_spectra(&predicted, &mu, oc.tol);
    v["available"] = json!(true);
    v["quantization_minus_u_n"] = json!(predicted);
    v["collocation"] = json!({ "grid": col_grid, "eigenvalues": mu, "comparison": vs_col });
    let mut s = format!(
        "collocation: {} matched, max deviation {:.3e}, tol {:.0e} {}\n",
        vs_col.matched.len(),
        vs_col.max_deviation,
        oc.tol,
        if pass_count(&vs_col, oc.count) { "PASS" } else { "FAIL" }
    );
    if n == 2 {
        let fd_grid = oc.fd_grid.unwrap_or_default();
        let e = schrodinger_eigen_n2(base.hbar(), base.lambda(), oc.count, &fd_grid)?;
        let vs_fd = compare_spectra(&predicted, &e, oc.tol);
        let dual = compare_spectra(&e, &mu, 1e-8);
        let _ = writeln!(
            s,
            "finite differences: {} matched, max deviation {:.3e}, tol {:.0e} {}",
            vs_fd.matched.len(),
            vs_fd.max_deviation,
            oc.tol,
            if pass_count(&vs_fd, oc.count) { "PASS" } else { "FAIL" }
        );
        let _ = writeln!(
            s,
            "oracle agreement: max deviation {:.3e}, tol 1e-08 {}",
            dual.max_deviation,
            if dual.all_within_tol { "PASS" } else { "FAIL" }
        );
        v["finite_difference"] = json!({ "grid": fd_grid, "eigenvalues": e, "comparison": vs_fd, "oracle_agreement": dual });
    }
    write_json(&out.join("oracle.json"), &v)?;
    Ok(s)
}

/// Every oracle level has a quantization root within tolerance.
fn pass_count(c: &crate::oracle::SpectrumComparison, count: usize) -> bool {
    c.unmatched_b.is_empty() && c.matched.len() == count
}
