//! Experiment catalog, config files, and CSV artifacts.
//!
//! Each named experiment resolves to fully specified per-method
//! simulations. Runs emit one decay CSV and one terminal-sample CSV per
//! method plus a manifest that pins every resolved parameter; replaying a
//! manifest reproduces the CSVs byte for byte.

use crate::dynamics::{DynamicsParams, Method};
use crate::error::{GaulError, Result};
use crate::gaussian_theory::{continuous_eigenvalues, fixed_point_covariance, mixing_rates};
use crate::linalg::Mat;
use crate::metrics::{gaussian_kl, histogram_kl, tv_upper_bound};
use crate::potentials::{
    make_logistic_target, synthesize_logistic_data, BimodalTarget, MixtureTarget, Potential,
    QuadCosTarget, QuadraticTarget,
};
use crate::rng;
use crate::sampler::{em_step, ensemble_stats, init_ensemble, x_marginals, Ensemble};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Environment variable capping the rayon worker-thread count.
pub const THREADS_ENV: &str = "GAUL_THREADS";

/// Decay CSV header.
pub const DECAY_HEADER: &str = "step,time,kl,tv_bound,var_x_min,var_x_max";
/// Theory CSV header.
pub const THEORY_HEADER: &str = "mode,s,re_lam0,re_lamp,im_lamp,y11,y12,y22,cont_rate,disc_rate";

/// All catalog experiment names.
pub const EXPERIMENT_NAMES: [&str; 9] = [
    "gauss1d-small",
    "gauss1d-large",
    "gauss20d",
    "mixture-logconcave",
    "mixture-nonlogconcave",
    "quadcos",
    "bimodal",
    "bayes-logistic",
    "theory-report",
];

/// Worker-thread cap from the environment, if set and valid.
pub fn worker_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

/// Format a float with 17 significant digits (round-trips bit-exactly).
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Method selection for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodSel {
    One(Method),
    All,
}

impl MethodSel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ol" => Ok(MethodSel::One(Method::Overdamped)),
            "ul" => Ok(MethodSel::One(Method::Underdamped)),
            "gaul" => Ok(MethodSel::One(Method::Gaul)),
            "all" => Ok(MethodSel::All),
            other => Err(GaulError::Argument(format!(
                "unknown method {other:?} (expected ol|ul|gaul|all)"
            ))),
        }
    }

    fn methods(self) -> Vec<Method> {
        match self {
            MethodSel::One(m) => vec![m],
            MethodSel::All => vec![Method::Overdamped, Method::Underdamped, Method::Gaul],
        }
    }
}

/// A parsed experiment request; `None` fields fall back to catalog defaults.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub method: MethodSel,
    pub m: Option<usize>,
    pub steps: Option<usize>,
    pub h: Option<f64>,
    pub seed: u64,
    pub record_every: Option<usize>,
    pub a: Option<f64>,
    pub gamma: Option<f64>,
    pub hist_n: Option<usize>,
    pub hist_bounds: Option<Vec<(f64, f64)>>,
    pub output: Option<PathBuf>,
    /// Restore full-scale ensemble sizes (default runs at 1/10).
    pub full: bool,
}

impl ExperimentConfig {
    pub fn named(name: &str) -> Self {
        ExperimentConfig {
            name: name.to_string(),
            method: MethodSel::All,
            m: None,
            steps: None,
            h: None,
            seed: 12345,
            record_every: None,
            a: None,
            gamma: None,
            hist_n: None,
            hist_bounds: None,
            output: None,
            full: false,
        }
    }
}

/// Parse a flat key=value config file (one experiment per file).
///
/// Recognized keys: name, method, m, steps, h, seed, record_every, a,
/// gamma, hist_n, hist_bounds (lo:hi[,lo:hi]), out, full. Lines starting
/// with `#` and blank lines are ignored.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::named("");
    let mut saw_name = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(GaulError::Parse {
                line: line_no,
                detail: format!("expected key=value, got {line:?}"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = |detail: String| GaulError::Parse { line: line_no, detail };
        match key {
            "name" => {
                config.name = value.to_string();
                saw_name = true;
            }
            "method" => {
                config.method = MethodSel::parse(value)
                    .map_err(|e| bad(e.to_string()))?;
            }
            "m" => {
                config.m = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("invalid particle count {value:?}")))?,
                )
            }
            "steps" => {
                config.steps = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("invalid step count {value:?}")))?,
                )
            }
            "h" => {
                config.h = Some(parse_positive(value).map_err(|d| bad(d))?);
            }
            "seed" => {
                config.seed = value
                    .parse()
                    .map_err(|_| bad(format!("invalid seed {value:?}")))?;
            }
            "record_every" => {
                config.record_every = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("invalid stride {value:?}")))?,
                )
            }
            "a" => {
                config.a = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("invalid a {value:?}")))?,
                )
            }
            "gamma" => {
                config.gamma = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("invalid gamma {value:?}")))?,
                )
            }
            "hist_n" => {
                config.hist_n = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("invalid bin count {value:?}")))?,
                )
            }
            "hist_bounds" => {
                let mut bounds = Vec::new();
                for part in value.split(',') {
                    let Some((lo, hi)) = part.split_once(':') else {
                        return Err(bad(format!("expected lo:hi, got {part:?}")));
                    };
                    let lo: f64 = lo
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("invalid bound {lo:?}")))?;
                    let hi: f64 = hi
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("invalid bound {hi:?}")))?;
                    if !(lo < hi) {
                        return Err(bad(format!("bounds need lo < hi, got {lo}:{hi}")));
                    }
                    bounds.push((lo, hi));
                }
                config.hist_bounds = Some(bounds);
            }
            "out" => config.output = Some(PathBuf::from(value)),
            "full" => {
                config.full = value
                    .parse()
                    .map_err(|_| bad(format!("invalid bool {value:?}")))?;
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    if !saw_name {
        return Err(GaulError::Parse {
            line: 0,
            detail: "missing required key: name".into(),
        });
    }
    Ok(config)
}

fn parse_positive(value: &str) -> std::result::Result<f64, String> {
    let v: f64 = value
        .parse()
        .map_err(|_| format!("invalid number {value:?}"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {value}"))
    }
}

/// How the decay KL column is computed for an experiment.
pub enum KlKind {
    /// Closed-form Gaussian KL of the empirical x covariance against the
    /// known target covariance.
    Gaussian { target_cov: Mat },
    /// Histogram KL against the unnormalized target density on a fixed box.
    Histogram { bounds: Vec<(f64, f64)>, n: usize },
}

/// One fully resolved per-method simulation.
pub struct MethodRun {
    pub method: Method,
    pub params: DynamicsParams,
}

/// A fully resolved experiment: target, per-method dynamics, horizon,
/// metric choice, and everything else a run needs.
pub struct ResolvedExperiment {
    pub name: String,
    pub seed: u64,
    pub m: usize,
    pub steps: usize,
    pub record_every: usize,
    pub h: f64,
    pub init_cov: f64,
    pub target: Box<dyn Potential>,
    pub kl: KlKind,
    pub runs: Vec<MethodRun>,
    /// Precision spectrum for Gaussian targets (theory CSV input).
    pub spectrum: Option<Vec<f64>>,
    /// The a used by the gaul method (theory CSV input).
    pub a: f64,
    /// The gamma used by the gaul method (theory CSV input).
    pub gamma_pdd: f64,
    /// True when this experiment only emits theory tables.
    pub theory_only: bool,
    /// Resolution notes recorded in the manifest.
    pub notes: Vec<String>,
}

struct CatalogEntry {
    target: Box<dyn Potential>,
    spectrum: Option<Vec<f64>>,
    h: f64,
    steps: usize,
    m_paper: usize,
    a: f64,
    gamma_ul: f64,
    gamma_pdd: f64,
    init_cov: f64,
    kl: KlKind,
    theory_only: bool,
    notes: Vec<String>,
}

/// Seed of the fixed synthetic artifacts (logistic data, quadcos rotation).
/// Catalog data is independent of the run seed so that different run seeds
/// sample the same posterior.
const DATA_SEED: u64 = 7;

fn quadcos_rotation() -> Mat {
    // Orthonormalize a fixed pseudo-random 2x2 matrix (Gram-Schmidt QR).
    let g: Vec<f64> = (0..4)
        .map(|k| rng::standard_normal(DATA_SEED, rng::CTX_DATA, 100 + k, 0, 0))
        .collect();
    let n0 = (g[0] * g[0] + g[2] * g[2]).sqrt();
    let q0 = [g[0] / n0, g[2] / n0];
    let proj = g[1] * q0[0] + g[3] * q0[1];
    let r1 = [g[1] - proj * q0[0], g[3] - proj * q0[1]];
    let n1 = (r1[0] * r1[0] + r1[1] * r1[1]).sqrt();
    Mat::from_rows(2, 2, &[q0[0], r1[0] / n1, q0[1], r1[1] / n1])
}

fn catalog(name: &str) -> Result<CatalogEntry> {
    match name {
        "gauss1d-small" => {
            let spectrum = vec![100.0];
            Ok(CatalogEntry {
                target: Box::new(QuadraticTarget::new(spectrum.clone())?),
                kl: KlKind::Gaussian { target_cov: Mat::from_rows(1, 1, &[0.01]) },
                spectrum: Some(spectrum),
                h: 1e-4,
                steps: 400,
                m_paper: 100_000,
                a: 1.0,
                gamma_ul: 20.0,
                gamma_pdd: 120.0,
                init_cov: 1.0,
                theory_only: false,
                notes: vec![],
            })
        }
        "gauss1d-large" => {
            let spectrum = vec![0.01];
            Ok(CatalogEntry {
                target: Box::new(QuadraticTarget::new(spectrum.clone())?),
                kl: KlKind::Gaussian { target_cov: Mat::from_rows(1, 1, &[100.0]) },
                spectrum: Some(spectrum),
                h: 1e-2,
                steps: 600,
                m_paper: 100_000,
                a: 1.0,
                gamma_ul: 0.2,
                gamma_pdd: 0.21,
                init_cov: 1.0,
                theory_only: false,
            notes: vec![],
            })
        }
        "gauss20d" | "theory-report" => {
            // Diagonal covariance with variances 0.05 + 5i, i = 0..19
            // (the listed values are variances, not standard deviations;
            // flagged in the manifest).
            let variances: Vec<f64> = (0..20).map(|i| 0.05 + 5.0 * i as f64).collect();
            let spectrum: Vec<f64> = variances.iter().map(|v| 1.0 / v).collect();
            let (s1, sd) = (spectrum[0], *spectrum.last().unwrap());
            let a = 2.0 / (s1.sqrt() - sd.sqrt());
            let mut target_cov = Mat::zeros(20, 20);
            for (i, &v) in variances.iter().enumerate() {
                target_cov[(i, i)] = v;
            }
            Ok(CatalogEntry {
                target: Box::new(QuadraticTarget::new(spectrum.clone())?),
                kl: KlKind::Gaussian { target_cov },
                spectrum: Some(spectrum),
                h: 5e-3,
                steps: 4000,
                m_paper: 100_000,
                a,
                gamma_ul: 2.0 * sd.sqrt(),
                gamma_pdd: a * sd + 2.0 * sd.sqrt(),
                init_cov: 1.0,
                theory_only: name == "theory-report",
                notes: vec!["spectrum_reading=listed values treated as variances".into()],
            })
        }
        "mixture-logconcave" => {
            let (m, l) = (0.5f64, 1.0f64);
            let a = 2.0 / (l.sqrt() - m.sqrt());
            Ok(CatalogEntry {
                target: Box::new(MixtureTarget::new(vec![0.5, 0.5])?),
                kl: KlKind::Histogram { bounds: vec![(-6.0, 6.0), (-6.0, 6.0)], n: 50 },
                spectrum: None,
                h: 2e-4,
                steps: 2000,
                m_paper: 500_000,
                a,
                gamma_ul: 2.0 * m.sqrt(),
                gamma_pdd: 2.0 * m.sqrt() + a * m,
                init_cov: 1.0,
                theory_only: false,
                notes: vec![],
            })
        }
        "mixture-nonlogconcave" => {
            let m = 0.5f64;
            let a = 1.0;
            Ok(CatalogEntry {
                target: Box::new(MixtureTarget::new(vec![3.0, 3.0])?),
                kl: KlKind::Histogram { bounds: vec![(-8.0, 8.0), (-8.0, 8.0)], n: 50 },
                spectrum: None,
                h: 1e-3,
                steps: 2000,
                m_paper: 500_000,
                a,
                gamma_ul: 2.0 * m.sqrt(),
                gamma_pdd: 2.0 * m.sqrt() + a * m,
                init_cov: 1.0,
                theory_only: false,
                notes: vec![],
            })
        }
        "quadcos" => {
            // Covariance-like matrix B = P diag(1, 25) P'; the quadratic
            // part of the potential uses B^{-1}.
            let p = quadcos_rotation();
            let mut inv_diag = Mat::zeros(2, 2);
            inv_diag[(0, 0)] = 1.0;
            inv_diag[(1, 1)] = 1.0 / 25.0;
            let precision = p.matmul(&inv_diag).matmul(&p.transpose());
            // Symmetrize against rounding.
            let precision = precision.add_scaled(&precision.transpose(), 1.0).scale(0.5);
            let c = 0.95f64.sqrt();
            let m = 1.0f64 / 25.0;
            let a = 1.0;
            Ok(CatalogEntry {
                target: Box::new(QuadCosTarget::new(precision, vec![c, c])?),
                kl: KlKind::Histogram { bounds: vec![(-20.0, 20.0), (-20.0, 20.0)], n: 50 },
                spectrum: None,
                h: 1e-2,
                steps: 1000,
                m_paper: 500_000,
                a,
                gamma_ul: 2.0 * m.sqrt(),
                gamma_pdd: 2.0 * m.sqrt() + a * m,
                init_cov: 1.0,
                theory_only: false,
                notes: vec!["rotation=fixed seeded orthonormal basis".into()],
            })
        }
        "bimodal" => {
            let m = 0.5f64;
            let a = 1.0;
            Ok(CatalogEntry {
                target: Box::new(BimodalTarget::new()),
                kl: KlKind::Histogram { bounds: vec![(-6.0, 6.0), (-6.0, 6.0)], n: 50 },
                spectrum: None,
                h: 1e-3,
                steps: 500,
                m_paper: 1_000_000,
                a,
                gamma_ul: 2.0 * m.sqrt(),
                gamma_pdd: 2.0 * m.sqrt() + a * m,
                init_cov: 1.0,
                theory_only: false,
                notes: vec![],
            })
        }
        "bayes-logistic" => {
            let (x, y) = synthesize_logistic_data(50, 2, &[1.0, 1.0], DATA_SEED);
            let target = make_logistic_target(x, y, 0.5)?;
            let m = target.bound_m();
            let l = target.bound_l();
            let a = 1.0;
            Ok(CatalogEntry {
                kl: KlKind::Histogram { bounds: vec![(-3.0, 5.0), (-3.0, 5.0)], n: 50 },
                spectrum: None,
                h: 1e-3,
                steps: 400,
                m_paper: 1_000_000,
                a,
                gamma_ul: 2.0 * m.sqrt(),
                gamma_pdd: 2.0 * m.sqrt() + a * m,
                init_cov: 1.0 / l,
                theory_only: false,
                notes: vec![format!(
                    "logistic_bounds=m {} L {} (data seed {DATA_SEED})",
                    fmt_float(m),
                    fmt_float(l)
                )],
                target: Box::new(target),
            })
        }
        other => Err(GaulError::Catalog(format!(
            "unknown experiment {other:?}; known: {}",
            EXPERIMENT_NAMES.join(", ")
        ))),
    }
}

/// Fill catalog defaults and apply overrides.
pub fn resolve_experiment(config: &ExperimentConfig) -> Result<ResolvedExperiment> {
    let entry = catalog(&config.name)?;
    let h = config.h.unwrap_or(entry.h);
    let steps = config.steps.unwrap_or(entry.steps);
    let m_default = if config.full { entry.m_paper } else { entry.m_paper / 10 };
    let m = config.m.unwrap_or(m_default);
    let record_every = config.record_every.unwrap_or_else(|| (steps / 100).max(1));
    let a = config.a.unwrap_or(entry.a);
    let d = entry.target.dim();
    let mut runs = Vec::new();
    for method in config.method.methods() {
        let params = match method {
            Method::Overdamped => DynamicsParams::new(0.0, 0.0, d, h, method)?,
            Method::Underdamped => {
                DynamicsParams::new(0.0, config.gamma.unwrap_or(entry.gamma_ul), d, h, method)?
            }
            Method::Gaul => {
                DynamicsParams::new(a, config.gamma.unwrap_or(entry.gamma_pdd), d, h, method)?
            }
        };
        runs.push(MethodRun { method, params });
    }
    let kl = match entry.kl {
        KlKind::Histogram { bounds, n } => KlKind::Histogram {
            bounds: config.hist_bounds.clone().unwrap_or(bounds),
            n: config.hist_n.unwrap_or(n),
        },
        gaussian => gaussian,
    };
    Ok(ResolvedExperiment {
        name: config.name.clone(),
        seed: config.seed,
        m,
        steps,
        record_every,
        h,
        init_cov: entry.init_cov,
        target: entry.target,
        kl,
        runs,
        spectrum: entry.spectrum,
        a,
        gamma_pdd: config.gamma.unwrap_or(entry.gamma_pdd),
        theory_only: entry.theory_only,
        notes: entry.notes,
    })
}

/// Everything needed to reproduce and audit a run.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub wall_clock_secs: f64,
    pub files: Vec<PathBuf>,
    /// Per-method divergence reports, empty on success.
    pub divergences: Vec<String>,
    pub lines: Vec<String>,
}

impl RunManifest {
    fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name={}", self.name);
        let _ = writeln!(out, "version={}", self.version);
        let _ = writeln!(out, "seed={}", self.seed);
        for line in &self.lines {
            let _ = writeln!(out, "{line}");
        }
        for d in &self.divergences {
            let _ = writeln!(out, "divergence={d}");
        }
        for f in &self.files {
            let _ = writeln!(out, "file={}", f.display());
        }
        let _ = writeln!(out, "wall_clock_secs={}", fmt_float(self.wall_clock_secs));
        out
    }
}

fn decay_row(step: u64, time: f64, kl: f64, tv: f64, var_min: f64, var_max: f64) -> String {
    format!(
        "{step},{},{},{},{},{}",
        fmt_float(time),
        fmt_float(kl),
        fmt_float(tv),
        fmt_float(var_min),
        fmt_float(var_max)
    )
}

fn checkpoint_metrics(
    ensemble: &Ensemble,
    h: f64,
    kl: &KlKind,
    target: &dyn Potential,
) -> Result<(u64, f64, f64, f64, f64, f64)> {
    let stats = ensemble_stats(ensemble, h)?;
    let var_min = stats.x_var.iter().cloned().fold(f64::INFINITY, f64::min);
    let var_max = stats.x_var.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (kl_val, tv_val) = match kl {
        KlKind::Gaussian { target_cov } => {
            let kl_v = gaussian_kl(&stats.x_cov, target_cov)?;
            let tv_v = tv_upper_bound(target_cov, &stats.x_cov)?;
            (kl_v, tv_v)
        }
        KlKind::Histogram { bounds, n } => {
            let xs = x_marginals(ensemble);
            let density = |p: &[f64]| (-target.value(p)).exp();
            let (kl_v, _dropped) = histogram_kl(&xs, ensemble.d, density, bounds, *n)?;
            (kl_v, f64::NAN)
        }
    };
    Ok((stats.step, stats.time, kl_val, tv_val, var_min, var_max))
}

/// Render the theory CSV for a Gaussian experiment.
pub fn theory_csv(resolved: &ResolvedExperiment) -> Result<String> {
    let Some(spectrum) = &resolved.spectrum else {
        return Err(GaulError::Argument(format!(
            "experiment {} has no Gaussian spectrum; theory tables need one",
            resolved.name
        )));
    };
    let (a, gamma, h) = (resolved.a, resolved.gamma_pdd, resolved.h);
    let s1 = spectrum.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sd = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
    let rates = mixing_rates(a, gamma, h, s1, sd);
    let fp = fixed_point_covariance(a, gamma, h, spectrum)?;
    let mut out = String::from(THEORY_HEADER);
    out.push('\n');
    for (i, &s) in spectrum.iter().enumerate() {
        let ms = continuous_eigenvalues(a, gamma, s);
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{}",
            fmt_float(s),
            fmt_float(ms.lam0.re),
            fmt_float(ms.lam_plus.re),
            fmt_float(ms.lam_plus.im),
            fmt_float(fp.y11[i]),
            fmt_float(fp.y12[i]),
            fmt_float(fp.y22[i]),
            fmt_float(rates.cont_rate),
            fmt_float(rates.disc_rate)
        );
    }
    Ok(out)
}

/// Run an experiment, writing CSVs and a manifest into the output
/// directory (default `out/<name>`). Divergences are recorded in the
/// manifest and partial outputs kept.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    let start = std::time::Instant::now();
    let resolved = resolve_experiment(config)?;
    let out_dir = config
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&resolved.name));
    std::fs::create_dir_all(&out_dir)?;
    let mut manifest = RunManifest {
        name: resolved.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: resolved.seed,
        wall_clock_secs: 0.0,
        files: Vec::new(),
        divergences: Vec::new(),
        lines: Vec::new(),
    };
    manifest.lines.push(format!("m={}", resolved.m));
    manifest.lines.push(format!("steps={}", resolved.steps));
    manifest.lines.push(format!("h={}", fmt_float(resolved.h)));
    manifest
        .lines
        .push(format!("record_every={}", resolved.record_every));
    manifest.lines.push(format!("full={}", config.full));
    for note in &resolved.notes {
        manifest.lines.push(format!("note={note}"));
    }
    for run in &resolved.runs {
        manifest.lines.push(format!(
            "method={} a={} gamma={}",
            run.method.label(),
            fmt_float(run.params.a),
            fmt_float(run.params.gamma)
        ));
    }
    if resolved.theory_only {
        let path = out_dir.join(format!("{}-theory.csv", resolved.name));
        std::fs::write(&path, theory_csv(&resolved)?)?;
        manifest.files.push(path);
    } else {
        for method_run in &resolved.runs {
            let label = method_run.method.label();
            let mut ensemble = init_ensemble(
                resolved.m,
                resolved.target.dim(),
                resolved.init_cov,
                resolved.seed,
            )?;
            let mut decay = String::from(DECAY_HEADER);
            decay.push('\n');
            let (step, time, kl, tv, vmin, vmax) =
                checkpoint_metrics(&ensemble, resolved.h, &resolved.kl, resolved.target.as_ref())?;
            decay.push_str(&decay_row(step, time, kl, tv, vmin, vmax));
            decay.push('\n');
            let mut diverged = None;
            for k in 1..=resolved.steps {
                if let Err(e) = em_step(&mut ensemble, &method_run.params, resolved.target.as_ref())
                {
                    diverged = Some(format!("{label}: {e}"));
                    break;
                }
                if k % resolved.record_every == 0 || k == resolved.steps {
                    let (step, time, kl, tv, vmin, vmax) = checkpoint_metrics(
                        &ensemble,
                        resolved.h,
                        &resolved.kl,
                        resolved.target.as_ref(),
                    )?;
                    decay.push_str(&decay_row(step, time, kl, tv, vmin, vmax));
                    decay.push('\n');
                }
            }
            let decay_path = out_dir.join(format!("{}-{label}-decay.csv", resolved.name));
            std::fs::write(&decay_path, &decay)?;
            manifest.files.push(decay_path);
            if let Some(msg) = diverged {
                manifest.divergences.push(msg);
                continue;
            }
            // Terminal samples.
            let d = resolved.target.dim();
            let mut terminal = String::from("particle");
            for j in 1..=d {
                let _ = write!(terminal, ",x{j}");
            }
            terminal.push('\n');
            let xs = x_marginals(&ensemble);
            for (i, row) in xs.chunks_exact(d).enumerate() {
                let _ = write!(terminal, "{i}");
                for v in row {
                    let _ = write!(terminal, ",{}", fmt_float(*v));
                }
                terminal.push('\n');
            }
            let term_path = out_dir.join(format!("{}-{label}-terminal.csv", resolved.name));
            std::fs::write(&term_path, &terminal)?;
            manifest.files.push(term_path);
            // 20d visualization slice: first and last coordinates.
            if d > 2 {
                let mut slice = String::from("x_first,x_last\n");
                for row in xs.chunks_exact(d) {
                    let _ = writeln!(slice, "{},{}", fmt_float(row[0]), fmt_float(row[d - 1]));
                }
                let slice_path =
                    out_dir.join(format!("{}-{label}-first-last.csv", resolved.name));
                std::fs::write(&slice_path, &slice)?;
                manifest.files.push(slice_path);
            }
        }
        // Gaussian experiments also get their theory table for reference;
        // an inadmissible (a, gamma, h) has no fixed point, so just note it.
        if resolved.spectrum.is_some() {
            match theory_csv(&resolved) {
                Ok(table) => {
                    let path = out_dir.join(format!("{}-theory.csv", resolved.name));
                    std::fs::write(&path, table)?;
                    manifest.files.push(path);
                }
                Err(e) => manifest.lines.push(format!("note=theory table skipped: {e}")),
            }
        }
    }
    manifest.wall_clock_secs = start.elapsed().as_secs_f64();
    std::fs::write(out_dir.join("manifest.txt"), manifest.render())?;
    Ok(manifest)
}

/// One parsed decay series.
#[derive(Debug)]
pub struct DecaySeries {
    pub steps: Vec<u64>,
    pub kl: Vec<f64>,
}

/// Parse a decay CSV, reporting the offending line on schema mismatch.
pub fn parse_decay_csv(path: &Path) -> Result<DecaySeries> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == DECAY_HEADER => {}
        Some((_, header)) => {
            return Err(GaulError::Parse {
                line: 1,
                detail: format!("unexpected header {header:?}"),
            })
        }
        None => {
            return Err(GaulError::Parse { line: 1, detail: "empty file".into() });
        }
    }
    let mut steps = Vec::new();
    let mut kl = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(GaulError::Parse {
                line: idx + 1,
                detail: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let step: u64 = fields[0].parse().map_err(|_| GaulError::Parse {
            line: idx + 1,
            detail: format!("invalid step {:?}", fields[0]),
        })?;
        let kl_v: f64 = fields[2].parse().map_err(|_| GaulError::Parse {
            line: idx + 1,
            detail: format!("invalid kl {:?}", fields[2]),
        })?;
        steps.push(step);
        kl.push(kl_v);
    }
    Ok(DecaySeries { steps, kl })
}

/// Summary of one decay series against a threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSummary {
    pub terminal_step: Option<u64>,
    pub terminal_kl: Option<f64>,
    /// First recorded step with kl below the threshold, if any.
    pub step_to_threshold: Option<u64>,
}

fn summarize(series: &DecaySeries, threshold: f64) -> SeriesSummary {
    SeriesSummary {
        terminal_step: series.steps.last().copied(),
        terminal_kl: series.kl.last().copied(),
        step_to_threshold: series
            .steps
            .iter()
            .zip(&series.kl)
            .find(|(_, &kl)| kl < threshold)
            .map(|(&s, _)| s),
    }
}

/// Compare two decay CSVs: terminal values and time-to-threshold.
pub fn compare_decay(a: &Path, b: &Path, threshold: f64) -> Result<(SeriesSummary, SeriesSummary)> {
    let sa = parse_decay_csv(a)?;
    let sb = parse_decay_csv(b)?;
    Ok((summarize(&sa, threshold), summarize(&sb, threshold)))
}
