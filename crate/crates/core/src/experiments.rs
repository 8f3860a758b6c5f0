//! Experiment orchestration: configuration, cost guards, deterministic
//! parallel dispatch, CSV/JSON artifacts, and a checksummed manifest.
//!
//! Determinism contract: identical config + seed produce byte-identical CSV
//! bodies under any thread budget; the manifest's wall-clock field is the
//! only nondeterministic output.

use crate::coarse_grain::{
    bernoulli_survival_frequency, bond_minimum, chain_factorization_check,
    dependence_structure_check, good_threshold, lss_threshold, oriented_percolation_survive,
    BernoulliBonds, BondField, CgBond, CgGeometry, ExplicitBonds, GoodBonds,
};
use crate::continuum::{continuum_constant_estimate, universality_distribution_check};
use crate::environment::{log_mgf, DisorderLaw, EnvironmentField};
use crate::numeric::{mean_stderr, wilson_interval};
use crate::polymer::log_w_samples;
use crate::rng;
use crate::walk::{
    coupling_marginal_exact, exit_probability_exact, grr_bound_check, meeting_time_tail_curve,
    meeting_time_tail_window, random_piecewise_linear,
};
use crate::{chaos, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const DEFAULT_COST_CEILING: f64 = 1e10;

/// β⁴-scaling scan grid. N per point is n_factor·β^{−4} rounded, and the
/// factor must keep every run at least 50 coarse blocks deep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Beta4Config {
    pub beta: Vec<f64>,
    pub n_factor: f64,
}

impl Default for Beta4Config {
    fn default() -> Self {
        Self {
            beta: vec![0.7, 0.55, 0.4],
            n_factor: 50.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoodBondConfig {
    pub beta: Vec<f64>,
    pub t: Vec<f64>,
    pub delta: f64,
    pub l: f64,
    pub eps: Vec<f64>,
    /// environments for the independence diagnostic (0 skips it)
    pub dependence_samples: u32,
}

impl Default for GoodBondConfig {
    fn default() -> Self {
        Self {
            beta: vec![0.3, 0.5, 0.7],
            t: vec![2.0, 4.0],
            delta: 0.2,
            l: 2.0,
            eps: vec![0.4],
            dependence_samples: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PercolationConfig {
    /// synthetic Bernoulli marginals; one CSV row each
    pub p: Vec<f64>,
    pub horizon: u32,
    pub trials: u32,
    /// also run the environment-driven good-bond field
    pub good_bonds: bool,
    pub good_beta: f64,
    pub good_t: f64,
    pub good_delta: f64,
    pub good_l: f64,
    pub good_eps: f64,
    pub good_horizon: u32,
    pub good_trials: u32,
}

impl Default for PercolationConfig {
    fn default() -> Self {
        Self {
            p: vec![0.3, 0.8],
            horizon: 200,
            trials: 500,
            good_bonds: false,
            good_beta: 0.5,
            good_t: 2.0,
            good_delta: 0.5,
            good_l: 2.1,
            good_eps: 0.4,
            good_horizon: 8,
            good_trials: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuumConfig {
    pub n: u32,
    pub t: Vec<f64>,
    /// second law for the distributional universality check (0 samples skips)
    pub ks_law: DisorderLaw,
    pub ks_samples: u32,
}

impl Default for ContinuumConfig {
    fn default() -> Self {
        Self {
            n: 64,
            t: vec![2.0, 4.0, 8.0],
            ks_law: DisorderLaw::Rademacher,
            ks_samples: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// informational label; the entry point chooses what runs
    pub experiment: String,
    pub law: DisorderLaw,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub samples: u32,
    /// 0 = let the active rayon pool decide; the CLI installs a sized pool
    pub threads: usize,
    /// refuse runs whose estimated slice-cell updates exceed this
    pub cost_ceiling: f64,
    pub beta4: Beta4Config,
    pub good_bonds: GoodBondConfig,
    pub percolation: PercolationConfig,
    pub continuum: ContinuumConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: String::new(),
            law: DisorderLaw::Gaussian,
            seed: 1,
            out_dir: PathBuf::from("out"),
            samples: 200,
            threads: 0,
            cost_ceiling: DEFAULT_COST_CEILING,
            beta4: Beta4Config::default(),
            good_bonds: GoodBondConfig::default(),
            percolation: PercolationConfig::default(),
            continuum: ContinuumConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON serialization; identifies the run.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_digest(json.as_bytes())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultManifest {
    pub experiment: String,
    pub artifact_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub files: Vec<FileRecord>,
    /// informational only; excluded from determinism comparisons
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest_path: PathBuf,
    /// failed checks (verification suite only; 0 elsewhere)
    pub failures: u32,
}

fn write_artifact(dir: &Path, name: &str, body: &str) -> Result<(PathBuf, FileRecord)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok((
        path,
        FileRecord {
            name: name.to_string(),
            sha256: hex_digest(body.as_bytes()),
            bytes: body.len() as u64,
        },
    ))
}

fn finish_run(
    experiment: &str,
    config: &ExperimentConfig,
    records: Vec<FileRecord>,
    paths: Vec<PathBuf>,
    started: Instant,
    failures: u32,
) -> Result<RunOutput> {
    let manifest = ResultManifest {
        experiment: experiment.to_string(),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config.config_hash(),
        seed: config.seed,
        files: records,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let manifest_path = config.out_dir.join("manifest.json");
    fs::create_dir_all(&config.out_dir)?;
    fs::write(&manifest_path, body)?;
    Ok(RunOutput {
        out_dir: config.out_dir.clone(),
        files: paths,
        manifest_path,
        failures,
    })
}

fn guard_cost(estimate: f64, ceiling: f64) -> Result<()> {
    if estimate > ceiling {
        return Err(Error::Cost(format!(
            "estimated {estimate:.3e} slice-cell updates exceeds the ceiling {ceiling:.3e}"
        )));
    }
    Ok(())
}

/// Cells touched by one unconstrained transfer-matrix run of N steps.
fn free_run_cost(n_steps: f64) -> f64 {
    0.5 * n_steps * (n_steps + 3.0)
}

/// Cells touched by one tube-restricted block solve, all starts.
fn bond_cost(geom: &CgGeometry) -> f64 {
    let starts = geom.sqrt_n() + 1.0;
    let width = 2.0 * geom.tube_half_width() + 1.0;
    starts * geom.block_len() as f64 * width
}

/// Free-energy scaling scan: one CSV row per β with N = n_factor·β^{−4},
/// reporting F_N = mean(log W)/N and the ratio F_N/β⁴.
pub fn run_beta4_scan(config: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let cfg = &config.beta4;
    if cfg.beta.is_empty() {
        return Err(Error::Config("beta4: empty beta grid".into()));
    }
    if cfg.n_factor < 50.0 {
        return Err(Error::Config(format!(
            "beta4: n_factor must be ≥ 50 so every run spans many blocks, got {}",
            cfg.n_factor
        )));
    }
    if config.samples < 2 {
        return Err(Error::Config("beta4: samples must be ≥ 2".into()));
    }
    let mut cells: Vec<(f64, u32)> = Vec::new();
    for &beta in &cfg.beta {
        if !(beta > 0.0 && beta <= 0.7) {
            return Err(Error::Config(format!(
                "beta4: beta grid must lie in (0, 0.7], got {beta}"
            )));
        }
        log_mgf(config.law, beta)?;
        let n = (cfg.n_factor * beta.powi(-4)).round() as u32;
        cells.push((beta, n));
    }
    let estimate: f64 = cells
        .iter()
        .map(|&(_, n)| config.samples as f64 * free_run_cost(n as f64))
        .sum();
    guard_cost(estimate, config.cost_ceiling)?;

    let mut csv = String::from("beta,N,F_N mean,stderr,F_N/beta^4\n");
    for (idx, &(beta, n)) in cells.iter().enumerate() {
        let logs = log_w_samples(
            config.law,
            beta,
            n,
            config.samples,
            rng::child_seed(config.seed, idx as u64),
        )?;
        let (mean, se) = mean_stderr(&logs);
        let f_n = mean / n as f64;
        let f_se = se / n as f64;
        let ratio = f_n / beta.powi(4);
        writeln!(csv, "{beta},{n},{f_n},{f_se},{ratio}").unwrap();
    }
    let (path, record) = write_artifact(&config.out_dir, "beta4_scan.csv", &csv)?;
    finish_run("beta4-scan", config, vec![record], vec![path], started, 0)
}

/// Good-bond density surface over a (β, T, ε) grid, with the per-environment
/// bond minimum shared across ε columns, plus the independence diagnostic.
pub fn run_good_bond_surface(config: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let cfg = &config.good_bonds;
    if cfg.beta.is_empty() || cfg.t.is_empty() || cfg.eps.is_empty() {
        return Err(Error::Config("good_bonds: empty grid".into()));
    }
    if config.samples < 2 {
        return Err(Error::Config("good_bonds: samples must be ≥ 2".into()));
    }
    for &eps in &cfg.eps {
        if eps <= 0.0 {
            return Err(Error::Config(format!(
                "good_bonds: eps must be > 0, got {eps}"
            )));
        }
    }
    let mut geoms = Vec::new();
    for &beta in &cfg.beta {
        log_mgf(config.law, beta)?;
        for &t in &cfg.t {
            geoms.push(CgGeometry::new(beta, t, cfg.delta, cfg.l)?);
        }
    }
    let estimate: f64 = geoms
        .iter()
        .map(|g| config.samples as f64 * bond_cost(g))
        .sum::<f64>()
        + cfg.dependence_samples as f64 * 6.0 * bond_cost(&geoms[0]);
    guard_cost(estimate, config.cost_ceiling)?;

    let bond = CgBond::new(0, 0, 1)?;
    let mut csv = String::from("beta,T,eps,density,stderr\n");
    for (idx, geom) in geoms.iter().enumerate() {
        let cell_seed = rng::child_seed(config.seed, idx as u64);
        let law = config.law;
        let mins: Vec<f64> = (0..config.samples)
            .into_par_iter()
            .map(|i| {
                let field = EnvironmentField::new(rng::child_seed(cell_seed, i as u64), law);
                bond_minimum(&field, law, geom, bond).expect("validated parameters")
            })
            .collect();
        for &eps in &cfg.eps {
            let thr = good_threshold(geom, eps);
            let indicators: Vec<f64> = mins.iter().map(|&m| f64::from(m >= thr)).collect();
            let (density, se) = mean_stderr(&indicators);
            writeln!(csv, "{},{},{eps},{density},{se}", geom.beta, geom.t).unwrap();
        }
    }
    let (path, record) = write_artifact(&config.out_dir, "good_bond_surface.csv", &csv)?;
    let mut records = vec![record];
    let mut paths = vec![path];

    if cfg.dependence_samples > 0 {
        let report = dependence_structure_check(
            config.law,
            &geoms[0],
            cfg.eps[0],
            cfg.dependence_samples,
            rng::child_seed(config.seed, 0xDE9),
        )?;
        let body = serde_json::to_string_pretty(&report).expect("report serializes");
        let (p, r) = write_artifact(&config.out_dir, "dependence.json", &body)?;
        records.push(r);
        paths.push(p);
    }
    finish_run("good-bonds", config, records, paths, started, 0)
}

/// Oriented percolation survival for synthetic Bernoulli bonds and,
/// optionally, the environment-driven good-bond field.
pub fn run_percolation_survival(config: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let cfg = &config.percolation;
    if cfg.trials == 0 {
        return Err(Error::Config("percolation: trials must be ≥ 1".into()));
    }
    let mut estimate = cfg.p.len() as f64 * cfg.trials as f64 * 4.0 * (cfg.horizon as f64).powi(2);
    let good_geom = if cfg.good_bonds {
        if cfg.good_horizon > 64 {
            return Err(Error::Config(
                "percolation: good-bond horizon is capped at 64 (each bond is a block solve)"
                    .into(),
            ));
        }
        let geom = CgGeometry::new(cfg.good_beta, cfg.good_t, cfg.good_delta, cfg.good_l)?;
        log_mgf(config.law, cfg.good_beta)?;
        estimate +=
            cfg.good_trials as f64 * 4.0 * (cfg.good_horizon as f64).powi(2) * bond_cost(&geom);
        Some(geom)
    } else {
        None
    };
    guard_cost(estimate, config.cost_ceiling)?;

    let mut csv = String::from("field,param,horizon,trials,survival,ci_low,ci_high\n");
    for (idx, &p) in cfg.p.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!(
                "percolation: p must lie in [0,1], got {p}"
            )));
        }
        let freq = bernoulli_survival_frequency(
            p,
            cfg.horizon,
            cfg.trials,
            rng::child_seed(config.seed, idx as u64),
        );
        let hits = (freq * cfg.trials as f64).round() as u64;
        let (lo, hi) = wilson_interval(hits, cfg.trials as u64);
        writeln!(
            csv,
            "bernoulli,{p},{},{},{freq},{lo},{hi}",
            cfg.horizon, cfg.trials
        )
        .unwrap();
    }
    if let Some(geom) = good_geom {
        let law = config.law;
        let master = rng::child_seed(config.seed, 0x90D);
        let survivals: Vec<u32> = (0..cfg.good_trials)
            .into_par_iter()
            .map(|t| {
                let field = EnvironmentField::new(rng::child_seed(master, t as u64), law);
                let bonds =
                    GoodBonds::new(&field, law, geom, cfg.good_eps).expect("validated parameters");
                u32::from(oriented_percolation_survive(&bonds, cfg.good_horizon).is_some())
            })
            .collect();
        let hits: u32 = survivals.iter().sum();
        let freq = hits as f64 / cfg.good_trials as f64;
        let (lo, hi) = wilson_interval(hits as u64, cfg.good_trials as u64);
        writeln!(
            csv,
            "good,{},{},{},{freq},{lo},{hi}",
            cfg.good_eps, cfg.good_horizon, cfg.good_trials
        )
        .unwrap();
    }
    let (path, record) = write_artifact(&config.out_dir, "percolation.csv", &csv)?;
    finish_run("percolation", config, vec![record], vec![path], started, 0)
}

/// Per-T continuum-constant estimates at coupling n^{−1/4}, with an optional
/// cross-law distribution check.
pub fn run_continuum_constant(config: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let cfg = &config.continuum;
    let estimate: f64 = cfg
        .t
        .iter()
        .map(|&t| config.samples as f64 * free_run_cost((t * cfg.n as f64).floor()))
        .sum::<f64>()
        + cfg.ks_samples as f64
            * 2.0
            * free_run_cost(cfg.t.iter().cloned().fold(f64::INFINITY, f64::min) * cfg.n as f64);
    guard_cost(estimate, config.cost_ceiling)?;

    let est = continuum_constant_estimate(
        cfg.n,
        &cfg.t,
        config.samples,
        config.law,
        rng::child_seed(config.seed, 0),
    )?;
    let mut csv = String::from("n,T,law,samples,mean,stderr\n");
    for p in &est.points {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            est.n, p.t, est.law, p.samples, p.mean, p.stderr
        )
        .unwrap();
    }
    let (path, record) = write_artifact(&config.out_dir, "continuum_constant.csv", &csv)?;
    let mut records = vec![record];
    let mut paths = vec![path];
    if cfg.ks_samples > 0 {
        let t = cfg.t.iter().cloned().fold(f64::INFINITY, f64::min);
        let report = universality_distribution_check(
            cfg.n,
            t,
            config.law,
            cfg.ks_law,
            cfg.ks_samples,
            rng::child_seed(config.seed, 0x45),
        )?;
        let body = serde_json::to_string_pretty(&report).expect("report serializes");
        let (p, r) = write_artifact(&config.out_dir, "universality.json", &body)?;
        records.push(r);
        paths.push(p);
    }
    finish_run("continuum-constant", config, records, paths, started, 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub failures: u32,
    pub passed: bool,
}

fn exit_probability_enumerated(n_steps: u32, a: i64) -> f64 {
    // brute-force oracle over all 2^n step sequences, n small
    let n = n_steps as usize;
    let mut stay = 0u64;
    'outer: for mask in 0u64..(1 << n) {
        let mut s = 0i64;
        for k in 0..n {
            s += if (mask >> k) & 1 == 0 { -1 } else { 1 };
            if s.abs() >= a {
                continue 'outer;
            }
        }
        stay += 1;
    }
    1.0 - stay as f64 / (1u64 << n) as f64
}

/// The exact-identity verification suite: every closed-form or enumerable
/// oracle in the library, reported as machine-readable pass/fail checks.
pub fn run_verification_suite(config: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let seed = config.seed;
    let mut checks: Vec<CheckResult> = Vec::new();
    let mut push = |id: &str, passed: bool, detail: String| {
        checks.push(CheckResult {
            id: id.to_string(),
            passed,
            detail,
        });
    };

    // chaos expansion sums back to the partition function, all laws
    {
        let mut worst = 0.0_f64;
        let mut ok = true;
        for law in DisorderLaw::ALL {
            let beta = 0.5;
            for n in 1..=6u32 {
                for e in 0..3u64 {
                    let field = EnvironmentField::new(
                        rng::child_seed(seed, 0x100 + e * 17 + n as u64),
                        law,
                    );
                    let d = chaos::chaos_expand(
                        &field,
                        law,
                        beta,
                        n,
                        0,
                        &chaos::PathEvent::unrestricted(),
                    )?;
                    let w = chaos::transfer_matrix_event_value(
                        &field,
                        law,
                        beta,
                        n,
                        0,
                        &chaos::PathEvent::unrestricted(),
                    )?;
                    let rel = (d.total() - w).abs() / w.abs().max(1e-300);
                    worst = worst.max(rel);
                    ok &= rel < 1e-12;
                }
            }
        }
        push(
            "chaos-sum-equals-partition",
            ok,
            format!("worst relative error {worst:.3e} (tolerance 1e-12)"),
        );
    }

    // degree orthogonality, exact disorder enumeration
    {
        let r = chaos::orthogonality_exact(
            DisorderLaw::Rademacher,
            0.45,
            2,
            0,
            2,
            &chaos::PathEvent::unrestricted(),
        )?;
        push(
            "chaos-degree-orthogonality",
            r.max_off_diagonal < 1e-12,
            format!(
                "max off-diagonal Gram entry {:.3e} over {} disorder sites",
                r.max_off_diagonal, r.disorder_sites
            ),
        );
    }

    // second-moment decomposition matches direct enumeration
    {
        let d = chaos::second_moment_decompose(
            DisorderLaw::Rademacher,
            0.45,
            3,
            0,
            2,
            &chaos::PathEvent::unrestricted(),
        )?;
        let rel =
            (d.total() - d.direct_second_moment).abs() / d.direct_second_moment.abs().max(1e-300);
        push(
            "difference-second-moment-decomposition",
            rel < 1e-10,
            format!("relative mismatch {rel:.3e} (tolerance 1e-10)"),
        );
    }

    // hypercontractive moment bound at p = 2 and 4
    {
        let mut ok = true;
        let mut detail = String::new();
        for p in [2.0, 4.0] {
            let r = chaos::moment_bound_check(
                DisorderLaw::Rademacher,
                0.4,
                2,
                0,
                2,
                p,
                &chaos::PathEvent::unrestricted(),
            )?;
            ok &= r.holds;
            write!(detail, "p={p}: lhs={:.6e} rhs={:.6e}; ", r.lhs, r.rhs).unwrap();
        }
        push("moment-bound-holds", ok, detail);
    }

    // reflection coupling leaves the marginal law untouched
    {
        let r = coupling_marginal_exact(0, 4, 12)?;
        push(
            "coupling-marginal-exact",
            r.tv_distance < 1e-12,
            format!("total variation {:.3e} at 12 steps", r.tv_distance),
        );
    }

    // meeting-time tail equals the pmf window, exact DP
    {
        let mut worst = 0.0_f64;
        for d in [1i64, 4, 10] {
            let curve = meeting_time_tail_curve(0, 2 * d, 300)?;
            for (i, &tail) in curve.iter().enumerate() {
                let window = meeting_time_tail_window(0, 2 * d, i as u32)?;
                worst = worst.max((tail - window).abs());
            }
        }
        push(
            "meeting-time-window-identity",
            worst < 1e-12,
            format!("worst absolute difference {worst:.3e}"),
        );
    }

    // exit probability DP against full path enumeration
    {
        let mut worst = 0.0_f64;
        for n in [6u32, 9, 10] {
            for a in 1..=(n as i64 + 1) {
                let dp = exit_probability_exact(n, a)?;
                let bf = exit_probability_enumerated(n, a);
                worst = worst.max((dp - bf).abs());
            }
        }
        push(
            "exit-probability-enumeration",
            worst < 1e-12,
            format!("worst absolute difference {worst:.3e}"),
        );
    }

    // modulus-of-continuity bound on random piecewise-linear functions
    {
        let mut ok = true;
        let mut detail = String::new();
        for (p, q) in [(4.0, 0.625), (3.0, 1.0)] {
            let fns: Vec<_> = (0..25)
                .map(|i| random_piecewise_linear(rng::child_seed(seed, 0x600 + i), 12))
                .collect();
            let r = grr_bound_check(&fns, p, q, 1.0, 64, rng::child_seed(seed, 0x700))?;
            ok &= r.violations == 0;
            write!(
                detail,
                "(p={p},q={q}): {} violations, worst ratio {:.3}; ",
                r.violations, r.worst_ratio
            )
            .unwrap();
        }
        push("grr-modulus-bound", ok, detail);
    }

    // chain bound: full-chain partition dominates the product of bond infima
    {
        let geom = CgGeometry::new(0.5, 2.0, 0.5, 3.0)?;
        let mut ok = true;
        let mut worst = f64::INFINITY;
        for e in 0..2u64 {
            let field =
                EnvironmentField::new(rng::child_seed(seed, 0x800 + e), DisorderLaw::Gaussian);
            for path in [vec![0i64, 1], vec![0, 1, 2], vec![0, -1, 0]] {
                let r = chain_factorization_check(&field, DisorderLaw::Gaussian, &geom, &path)?;
                ok &= r.holds;
                worst = worst.min(r.lhs_log - r.rhs_log);
            }
        }
        push(
            "chain-factorization-bound",
            ok,
            format!("smallest log slack {worst:.6}"),
        );
    }

    // percolation DP against exhaustive path enumeration
    {
        let mut ok = true;
        for s in 0..60u64 {
            let bonds = BernoulliBonds {
                seed: rng::child_seed(seed, 0x900 + s),
                p: 0.6,
            };
            let dp = oriented_percolation_survive(&bonds, 4);
            let mut best: Option<Vec<i64>> = None;
            for mask in 0u64..16 {
                let mut path = vec![0i64];
                let mut feasible = true;
                for i in 0..4usize {
                    let cur = path[i];
                    let y = if (mask >> i) & 1 == 0 {
                        cur - 1
                    } else {
                        cur + 1
                    };
                    let bond = CgBond {
                        i: i as u32,
                        x: cur,
                        y,
                    };
                    if !(bond.is_valid() && bonds.open(bond)) {
                        feasible = false;
                        break;
                    }
                    path.push(y);
                }
                if feasible && (best.is_none() || path < *best.as_ref().unwrap()) {
                    best = Some(path);
                }
            }
            ok &= dp == best;
        }
        // trivial lattices
        ok &= oriented_percolation_survive(&ExplicitBonds::new(true), 5)
            == Some(vec![0, -1, -2, -3, -4, -5]);
        ok &= oriented_percolation_survive(&ExplicitBonds::new(false), 3).is_none();
        push(
            "percolation-dp-enumeration",
            ok,
            "leftmost path agreement on 60 random 4-level lattices".into(),
        );
    }

    // domination threshold arithmetic
    {
        let a = lss_threshold(1);
        let b = lss_threshold(2);
        let mono = (1..64).all(|k| lss_threshold(k) < lss_threshold(k + 1));
        let ok = a == 0.75 && (b - (1.0 - 4.0 / 27.0)).abs() < 1e-15 && mono;
        push(
            "dependent-field-domination-threshold",
            ok,
            format!("k=1 → {a}, k=2 → {b}, monotone over k ≤ 64"),
        );
    }

    let failures = checks.iter().filter(|c| !c.passed).count() as u32;
    let report = VerificationReport {
        passed: failures == 0,
        failures,
        checks,
    };
    let body = serde_json::to_string_pretty(&report).expect("report serializes");
    let (path, record) = write_artifact(&config.out_dir, "verification.json", &body)?;
    finish_run(
        "verify",
        config,
        vec![record],
        vec![path],
        started,
        failures,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn base_config(dir: &TempDir) -> ExperimentConfig {
        ExperimentConfig {
            out_dir: dir.path().to_path_buf(),
            seed: 31,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.config_hash(), back.config_hash());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let r: std::result::Result<ExperimentConfig, _> = toml::from_str("zzz_unknown = 3");
        assert!(r.is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: ExperimentConfig = toml::from_str("seed = 7\n[beta4]\nbeta = [0.7]\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.beta4.beta, vec![0.7]);
        assert_eq!(cfg.beta4.n_factor, 50.0);
        assert_eq!(cfg.samples, 200);
    }

    #[test]
    fn beta4_rejects_out_of_range_grid() {
        let dir = TempDir::new().unwrap();
        let mut cfg = base_config(&dir);
        cfg.beta4.beta = vec![0.8];
        assert!(matches!(run_beta4_scan(&cfg), Err(Error::Config(_))));
        cfg.beta4.beta = vec![0.0];
        assert!(matches!(run_beta4_scan(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn beta4_refuses_over_budget() {
        let dir = TempDir::new().unwrap();
        let mut cfg = base_config(&dir);
        cfg.cost_ceiling = 1e3;
        cfg.beta4.beta = vec![0.7];
        cfg.samples = 50;
        assert!(matches!(run_beta4_scan(&cfg), Err(Error::Cost(_))));
    }

    #[test]
    fn beta4_scan_writes_csv_and_manifest() {
        let dir = TempDir::new().unwrap();
        let mut cfg = base_config(&dir);
        cfg.beta4.beta = vec![0.7];
        cfg.samples = 8;
        let out = run_beta4_scan(&cfg).unwrap();
        let csv = std::fs::read_to_string(&out.files[0]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "beta,N,F_N mean,stderr,F_N/beta^4");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "0.7");
        assert_eq!(row[1], "208");
        let ratio: f64 = row[4].parse().unwrap();
        assert!(ratio < 0.0);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out.manifest_path).unwrap()).unwrap();
        assert_eq!(manifest["experiment"], "beta4-scan");
        assert_eq!(manifest["files"][0]["name"], "beta4_scan.csv");
        let digest = manifest["files"][0]["sha256"].as_str().unwrap();
        assert_eq!(digest, hex_digest(csv.as_bytes()));
    }

    #[test]
    fn beta4_scan_is_deterministic() {
        let d1 = TempDir::new().unwrap();
        let d2 = TempDir::new().unwrap();
        let mut c1 = base_config(&d1);
        c1.beta4.beta = vec![0.7];
        c1.samples = 6;
        let mut c2 = base_config(&d2);
        c2.beta4.beta = vec![0.7];
        c2.samples = 6;
        let o1 = run_beta4_scan(&c1).unwrap();
        let o2 = run_beta4_scan(&c2).unwrap();
        assert_eq!(
            std::fs::read(&o1.files[0]).unwrap(),
            std::fs::read(&o2.files[0]).unwrap()
        );
    }

    #[test]
    fn good_bond_surface_shares_minima_across_eps() {
        let dir = TempDir::new().unwrap();
        let mut cfg = base_config(&dir);
        cfg.samples = 12;
        cfg.good_bonds.beta = vec![0.5];
        cfg.good_bonds.t = vec![2.0];
        cfg.good_bonds.delta = 0.5;
        cfg.good_bonds.l = 3.0;
        cfg.good_bonds.eps = vec![0.2, 0.5, 100.0];
        let out = run_good_bond_surface(&cfg).unwrap();
        let csv = std::fs::read_to_string(&out.files[0]).unwrap();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        // density is monotone in eps, and a huge eps certifies everything
        assert!(rows[0][3] <= rows[1][3]);
        assert_eq!(rows[2][3], 1.0);
    }

    #[test]
    fn percolation_run_covers_both_fields() {
        let dir = TempDir::new().unwrap();
        let mut cfg = base_config(&dir);
        cfg.percolation.p = vec![1.0, 0.3];
        cfg.percolation.horizon = 40;
        cfg.percolation.trials = 60;
        cfg.percolation.good_bonds = true;
        cfg.percolation.good_horizon = 2;
        cfg.percolation.good_trials = 4;
        let out = run_percolation_survival(&cfg).unwrap();
        let csv = std::fs::read_to_string(&out.files[0]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("bernoulli,1,"));
        let p1: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(p1[4], "1");
        let p03: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(p03[4], "0");
        assert!(lines[3].starts_with("good,"));
    }

    #[test]
    fn percolation_caps_good_horizon() {
        let dir = TempDir::new().unwrap();
        let mut cfg = base_config(&dir);
        cfg.percolation.good_bonds = true;
        cfg.percolation.good_horizon = 65;
        assert!(matches!(
            run_percolation_survival(&cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn continuum_run_emits_schema() {
        let dir = TempDir::new().unwrap();
        let mut cfg = base_config(&dir);
        cfg.samples = 60;
        cfg.continuum.n = 16;
        cfg.continuum.t = vec![2.0, 1.0];
        cfg.continuum.ks_samples = 60;
        cfg.continuum.ks_law = DisorderLaw::Rademacher;
        let out = run_continuum_constant(&cfg).unwrap();
        let csv = std::fs::read_to_string(&out.files[0]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,T,law,samples,mean,stderr");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "16");
        assert_eq!(row[1], "1"); // sorted ascending
        assert_eq!(row[2], "gaussian");
        assert!(out.files.iter().any(|p| p.ends_with("universality.json")));
    }

    #[test]
    fn verification_suite_is_green() {
        let dir = TempDir::new().unwrap();
        let cfg = base_config(&dir);
        let out = run_verification_suite(&cfg).unwrap();
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out.files[0]).unwrap()).unwrap();
        assert_eq!(out.failures, 0, "{report:#}");
        assert_eq!(report["passed"], true);
        assert!(report["checks"].as_array().unwrap().len() >= 10);
    }

    #[test]
    fn manifest_lists_every_artifact_with_checksums() {
        let dir = TempDir::new().unwrap();
        let mut cfg = base_config(&dir);
        cfg.samples = 60;
        cfg.continuum.n = 16;
        cfg.continuum.t = vec![1.0];
        cfg.continuum.ks_samples = 50;
        let out = run_continuum_constant(&cfg).unwrap();
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out.manifest_path).unwrap()).unwrap();
        let files = manifest["files"].as_array().unwrap();
        assert_eq!(files.len(), out.files.len());
        for f in files {
            let body = std::fs::read(dir.path().join(f["name"].as_str().unwrap())).unwrap();
            assert_eq!(f["sha256"].as_str().unwrap(), hex_digest(&body));
        }
    }
}
