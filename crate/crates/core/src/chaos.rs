//! Polynomial-chaos machinery for small systems: exact expansion of event-
//! restricted partition functions into degree components, orthogonality and
//! second-moment decompositions over a finite disorder space, and
//! hypercontractive moment bounds.
//!
//! Exact Q-identities are verified with the two-point law only: its finite
//! sample space turns every disorder expectation into a finite sum, so the
//! checks carry zero statistical error.

use crate::environment::{log_mgf, DisorderField, DisorderLaw};
use crate::numeric::{adaptive_simpson, KahanSum};
use crate::polymer::{for_each_path, partition_function, PathConstraint};
use crate::{Error, Result};
use std::collections::{BTreeMap, HashMap};

/// A path event: either satisfying a constraint throughout (stay) or its
/// complement (escape). The canonical escape event is "the path leaves the
/// tube".
#[derive(Clone, Debug)]
pub enum PathEvent {
    Stay(PathConstraint),
    Escape(PathConstraint),
}

impl PathEvent {
    pub fn unrestricted() -> Self {
        PathEvent::Stay(PathConstraint::none())
    }

    /// Full-path indicator; sites[0] is the start.
    pub fn contains(&self, sites: &[i64]) -> bool {
        let (c, stay) = match self {
            PathEvent::Stay(c) => (c, true),
            PathEvent::Escape(c) => (c, false),
        };
        let last = sites.len() - 1;
        let mut inside = sites
            .iter()
            .enumerate()
            .all(|(k, &s)| c.allows(k as u32, s));
        if inside {
            inside = c.endpoint_allows(sites[last]);
        }
        if stay {
            inside
        } else {
            !inside
        }
    }
}

/// W(E) in linear scale via the transfer matrix; the escape value is the
/// complement W − W(stay).
pub fn transfer_matrix_event_value(
    field: &impl DisorderField,
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    start: i64,
    event: &PathEvent,
) -> Result<f64> {
    match event {
        PathEvent::Stay(c) => Ok(partition_function(field, law, beta, n_steps, start, c)?.exp()),
        PathEvent::Escape(c) => {
            let free =
                partition_function(field, law, beta, n_steps, start, &PathConstraint::none())?
                    .exp();
            let stay = partition_function(field, law, beta, n_steps, start, c)?.exp();
            Ok((free - stay).max(0.0))
        }
    }
}

/// Degree components Θ^(0..N) of W(E) on one environment.
#[derive(Debug, Clone)]
pub struct ChaosDecomposition {
    pub n_steps: u32,
    pub start: i64,
    pub components: Vec<f64>,
}

impl ChaosDecomposition {
    /// Σ_k Θ^(k); equals W(E) exactly.
    pub fn total(&self) -> f64 {
        let mut s = KahanSum::new();
        for &c in &self.components {
            s.add(c);
        }
        s.value()
    }
}

/// Expand W(E) into chaos components by enumerating paths and accumulating
/// elementary symmetric polynomials of the centered weights ζ − 1.
/// Refuses above 8 steps (2^N paths with O(N²) work each).
pub fn chaos_expand(
    field: &impl DisorderField,
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    start: i64,
    event: &PathEvent,
) -> Result<ChaosDecomposition> {
    if n_steps > 8 {
        return Err(Error::Cost(format!(
            "chaos_expand: {n_steps} steps exceeds the degree-8 cap"
        )));
    }
    let lambda = log_mgf(law, beta)?;
    let np = n_steps as usize;
    let mut comps = vec![KahanSum::new(); np + 1];
    let mut e = vec![0.0_f64; np + 1];
    for_each_path(n_steps, start, |sites| {
        if !event.contains(sites) {
            return;
        }
        e[0] = 1.0;
        for v in e[1..].iter_mut() {
            *v = 0.0;
        }
        for (k, &xk) in sites.iter().enumerate().skip(1) {
            let w = (beta * field.eta(k as u32, xk) - lambda).exp() - 1.0;
            for j in (1..=k).rev() {
                e[j] += w * e[j - 1];
            }
        }
        for (k, c) in comps.iter_mut().enumerate() {
            c.add(e[k]);
        }
    });
    let scale = 2f64.powi(-(n_steps as i32));
    Ok(ChaosDecomposition {
        n_steps,
        start,
        components: comps.iter().map(|s| s.value() * scale).collect(),
    })
}

struct PathInfo {
    site_ids: Vec<u16>,
    in_event: bool,
}

/// Precomputed enumeration state for exact two-point-law expectations.
struct ExactEnum {
    m: usize,
    /// ζ − 1 at η = +1 / −1.
    wp: f64,
    wm: f64,
    /// ζ at η = +1 / −1.
    zp: f64,
    zm: f64,
    paths: Vec<Vec<PathInfo>>,
}

fn build_exact(beta: f64, n_steps: u32, starts: &[i64], event: &PathEvent) -> Result<ExactEnum> {
    let lambda = log_mgf(DisorderLaw::Rademacher, beta)?;
    let mut site_index: BTreeMap<(u32, i64), u16> = BTreeMap::new();
    for &s in starts {
        for k in 1..=n_steps {
            let mut x = s - k as i64;
            while x <= s + k as i64 {
                let next = site_index.len() as u16;
                site_index.entry((k, x)).or_insert(next);
                x += 2;
            }
        }
    }
    let m = site_index.len();
    if m > 24 {
        return Err(Error::Cost(format!(
            "exact enumeration needs 2^{m} disorder configurations; cap is 2^24"
        )));
    }
    let paths = starts
        .iter()
        .map(|&s| {
            let mut v = Vec::with_capacity(1 << n_steps);
            for_each_path(n_steps, s, |sites| {
                v.push(PathInfo {
                    site_ids: sites
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, &x)| site_index[&(k as u32, x)])
                        .collect(),
                    in_event: event.contains(sites),
                });
            });
            v
        })
        .collect();
    Ok(ExactEnum {
        m,
        wp: (beta - lambda).exp() - 1.0,
        wm: (-beta - lambda).exp() - 1.0,
        zp: (beta - lambda).exp(),
        zm: (-beta - lambda).exp(),
        paths,
    })
}

impl ExactEnum {
    /// Θ^(0..N) for one start under the disorder configuration `config`
    /// (bit j = 1 means η = +1 at site j). Output written into `out`.
    fn thetas(&self, which: usize, config: u32, out: &mut [f64], e: &mut [f64]) {
        let np = out.len() - 1;
        for v in out.iter_mut() {
            *v = 0.0;
        }
        for path in &self.paths[which] {
            if !path.in_event {
                continue;
            }
            e[0] = 1.0;
            for v in e[1..].iter_mut() {
                *v = 0.0;
            }
            for (k, &id) in path.site_ids.iter().enumerate() {
                let w = if (config >> id) & 1 == 1 {
                    self.wp
                } else {
                    self.wm
                };
                for j in (1..=k + 1).rev() {
                    e[j] += w * e[j - 1];
                }
            }
            for k in 0..=np {
                out[k] += e[k];
            }
        }
        let scale = 2f64.powi(-(self.paths[which][0].site_ids.len() as i32));
        for v in out.iter_mut() {
            *v *= scale;
        }
    }

    /// W(E) for one start under `config`.
    fn event_value(&self, which: usize, config: u32) -> f64 {
        let mut total = 0.0;
        for path in &self.paths[which] {
            if !path.in_event {
                continue;
            }
            let mut prod = 1.0;
            for &id in &path.site_ids {
                prod *= if (config >> id) & 1 == 1 {
                    self.zp
                } else {
                    self.zm
                };
            }
            total += prod;
        }
        total * 2f64.powi(-(self.paths[which][0].site_ids.len() as i32))
    }
}

fn require_rademacher(law: DisorderLaw, what: &str) -> Result<()> {
    if law != DisorderLaw::Rademacher {
        return Err(Error::Domain(format!(
            "{what}: exact expectations need the two-point law, got {law}"
        )));
    }
    Ok(())
}

/// Exact Gram matrix Q[Θ^(k)(x) Θ^(l)(y)] over the full disorder space.
#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    pub n_steps: u32,
    pub disorder_sites: usize,
    /// gram[k][l] = Q[Θ^(k)(x) Θ^(l)(y)].
    pub gram: Vec<Vec<f64>>,
    /// Q[Θ^(k)(x)].
    pub means: Vec<f64>,
    pub max_off_diagonal: f64,
}

pub fn orthogonality_exact(
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    x: i64,
    y: i64,
    event: &PathEvent,
) -> Result<OrthogonalityReport> {
    require_rademacher(law, "orthogonality_exact")?;
    if n_steps > 4 {
        return Err(Error::Cost(
            "orthogonality_exact: degree cap is 4 steps".into(),
        ));
    }
    let en = build_exact(beta, n_steps, &[x, y], event)?;
    let np = n_steps as usize;
    let mut gram = vec![vec![KahanSum::new(); np + 1]; np + 1];
    let mut means = vec![KahanSum::new(); np + 1];
    let mut tx = vec![0.0; np + 1];
    let mut ty = vec![0.0; np + 1];
    let mut e = vec![0.0; np + 1];
    let total = 1u64 << en.m;
    for config in 0..total {
        en.thetas(0, config as u32, &mut tx, &mut e);
        en.thetas(1, config as u32, &mut ty, &mut e);
        for k in 0..=np {
            means[k].add(tx[k]);
            for l in 0..=np {
                gram[k][l].add(tx[k] * ty[l]);
            }
        }
    }
    let norm = 1.0 / total as f64;
    let gram: Vec<Vec<f64>> = gram
        .iter()
        .map(|row| row.iter().map(|s| s.value() * norm).collect())
        .collect();
    let means: Vec<f64> = means.iter().map(|s| s.value() * norm).collect();
    let mut max_off = 0.0_f64;
    for (k, row) in gram.iter().enumerate() {
        for (l, &v) in row.iter().enumerate() {
            if k != l {
                max_off = max_off.max(v.abs());
            }
        }
    }
    Ok(OrthogonalityReport {
        n_steps,
        disorder_sites: en.m,
        gram,
        means,
        max_off_diagonal: max_off,
    })
}

/// Degree-resolved second moment of W^x(E) − W^y(E).
#[derive(Debug, Clone)]
pub struct SecondMomentDecomposition {
    /// Λ^(k) for k = 0..=N; each is σ^{2k} times a sum of squared kernel
    /// differences, hence nonnegative.
    pub lambdas: Vec<f64>,
    /// Q[|W^x(E) − W^y(E)|²] enumerated directly.
    pub direct_second_moment: f64,
}

impl SecondMomentDecomposition {
    pub fn total(&self) -> f64 {
        let mut s = KahanSum::new();
        for &v in &self.lambdas {
            s.add(v);
        }
        s.value()
    }

    /// k·Λ^(k)/Λ^(k−1) for consecutive positive terms; a qualitative decay
    /// diagnostic, reported but never asserted.
    pub fn decay_ratios(&self) -> Vec<f64> {
        self.lambdas
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] > 0.0)
            .map(|(i, w)| (i as f64 + 1.0) * w[1] / w[0])
            .collect()
    }
}

pub fn second_moment_decompose(
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    x: i64,
    y: i64,
    event: &PathEvent,
) -> Result<SecondMomentDecomposition> {
    require_rademacher(law, "second_moment_decompose")?;
    if n_steps > 4 {
        return Err(Error::Cost(
            "second_moment_decompose: degree cap is 4 steps".into(),
        ));
    }
    let en = build_exact(beta, n_steps, &[x, y], event)?;
    let np = n_steps as usize;
    let sigma2 = 0.5 * (en.wp * en.wp + en.wm * en.wm);

    // Kernel differences: for each time subset and site assignment, the two
    // start kernels P^x[E, S|_A = z] and P^y[E, S|_A = z].
    let mut kernels: HashMap<(u32, u64), (f64, f64)> = HashMap::new();
    let p_path = 2f64.powi(-(n_steps as i32));
    for (which, start) in [x, y].into_iter().enumerate() {
        for_each_path(n_steps, start, |sites| {
            if !event.contains(sites) {
                return;
            }
            for mask in 0u32..(1 << np) {
                let mut key = 0u64;
                for (bit, &site) in sites.iter().skip(1).enumerate() {
                    if (mask >> bit) & 1 == 1 {
                        key = key << 9 | ((site + 128) as u64 & 0x1ff);
                    }
                }
                let entry = kernels.entry((mask, key)).or_insert((0.0, 0.0));
                if which == 0 {
                    entry.0 += p_path;
                } else {
                    entry.1 += p_path;
                }
            }
        });
    }
    let mut lambda_sums = vec![KahanSum::new(); np + 1];
    for ((mask, _), (px, py)) in &kernels {
        let k = mask.count_ones() as usize;
        let d = px - py;
        lambda_sums[k].add(d * d);
    }
    let lambdas: Vec<f64> = lambda_sums
        .iter()
        .enumerate()
        .map(|(k, s)| sigma2.powi(k as i32) * s.value())
        .collect();

    // Direct enumeration of the second moment over all disorder configs.
    let total = 1u64 << en.m;
    let mut direct = KahanSum::new();
    for config in 0..total {
        let d = en.event_value(0, config as u32) - en.event_value(1, config as u32);
        direct.add(d * d);
    }
    Ok(SecondMomentDecomposition {
        lambdas,
        direct_second_moment: direct.value() / total as f64,
    })
}

/// Q[|ζ − 1|^p] for real p ≥ 1: closed form on the two-point law, quadrature
/// elsewhere. shifted_exponential needs pβ < 1.
pub fn centered_weight_abs_moment(law: DisorderLaw, beta: f64, p: f64) -> Result<f64> {
    let lambda = log_mgf(law, beta)?;
    if beta == 0.0 {
        return Ok(0.0);
    }
    match law {
        DisorderLaw::Rademacher => {
            let wp = (beta - lambda).exp() - 1.0;
            let wm = (-beta - lambda).exp() - 1.0;
            Ok(0.5 * (wp.abs().powf(p) + wm.abs().powf(p)))
        }
        DisorderLaw::Gaussian => {
            let cut = 12.0 + p * beta.abs();
            let f = |z: f64| {
                ((beta * z - lambda).exp() - 1.0).abs().powf(p) * (-0.5 * z * z).exp()
                    / (2.0 * std::f64::consts::PI).sqrt()
            };
            Ok(adaptive_simpson(&f, -cut, cut, 1e-13))
        }
        DisorderLaw::CenteredUniform => {
            let s3 = 3f64.sqrt();
            let f = |u: f64| 0.5 * ((beta * s3 * u - lambda).exp() - 1.0).abs().powf(p);
            Ok(adaptive_simpson(&f, -1.0, 1.0, 1e-13))
        }
        DisorderLaw::ShiftedExponential => {
            if p * beta >= 0.999 {
                return Err(Error::Domain(format!(
                    "centered_weight_abs_moment: p·β = {} leaves the integrable range",
                    p * beta
                )));
            }
            let cut = 60.0 / (1.0 - p * beta).min(1.0);
            let f = |t: f64| ((beta * (t - 1.0) - lambda).exp() - 1.0).abs().powf(p) * (-t).exp();
            Ok(adaptive_simpson(&f, 0.0, cut, 1e-13))
        }
    }
}

fn binomial_u128(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for j in 1..=k as u128 {
        c = c * (n as u128 - k as u128 + j) / j;
    }
    c
}

/// Q[(ζ − 1)^p] for even integer p, in closed form through the moment
/// generating function: Σ_j C(p,j) (−1)^{p−j} exp(λ(jβ) − jλ(β)).
pub fn centered_weight_moment_even(law: DisorderLaw, beta: f64, p: u32) -> Result<f64> {
    if !p.is_multiple_of(2) || p == 0 || p > 16 {
        return Err(Error::Domain(format!(
            "centered_weight_moment_even: p must be a positive even integer ≤ 16, got {p}"
        )));
    }
    let lambda = log_mgf(law, beta)?;
    let mut s = KahanSum::new();
    for j in 0..=p {
        let sign = if (p - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        let term =
            binomial_u128(p, j) as f64 * (log_mgf(law, j as f64 * beta)? - j as f64 * lambda).exp();
        s.add(sign * term);
    }
    Ok(s.value())
}

/// Hypercontractivity constant κ_p = 2√(p−1) · Q[|ζ−1|^p]^{1/p} / Q[|ζ−1|²]^{1/2}.
///
/// Defined at a fixed β: the moment ratio does not vary with the horizon, so
/// the supremum in the defining display collapses to a single term once β is
/// pinned. [`kappa_p_scaling_sup`] covers the β = n^{−1/4} family instead.
pub fn kappa_p(law: DisorderLaw, beta: f64, p: f64) -> Result<f64> {
    if p < 2.0 {
        return Err(Error::Domain(format!("kappa_p: need p ≥ 2, got {p}")));
    }
    if beta == 0.0 {
        return Err(Error::Domain(
            "kappa_p: moment ratio is 0/0 at beta = 0".into(),
        ));
    }
    let mp = centered_weight_abs_moment(law, beta, p)?;
    let m2 = centered_weight_abs_moment(law, beta, 2.0)?;
    Ok(2.0 * (p - 1.0).sqrt() * mp.powf(1.0 / p) / m2.sqrt())
}

/// sup of the p-to-2 moment ratio along β_n = n^{−1/4}, n ≤ n_max, times
/// 2√(p−1): the scaling-regime reading of the defining supremum.
pub fn kappa_p_scaling_sup(law: DisorderLaw, p: f64, n_max: u32) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let beta = (n as f64).powf(-0.25);
        if law == DisorderLaw::ShiftedExponential && p * beta >= 0.999 {
            continue;
        }
        let k = kappa_p(law, beta, p)?;
        if k > best {
            best = k;
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Domain(
            "kappa_p_scaling_sup: no admissible β in range".into(),
        ))
    }
}

/// Verdict of the p-th moment bound Q[|W^x−W^y|^p] ≤ (Σ_k κ_p^k √Λ^(k))^p.
#[derive(Debug, Clone, Copy)]
pub struct MomentBoundReport {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn moment_bound_check(
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    x: i64,
    y: i64,
    p: f64,
    event: &PathEvent,
) -> Result<MomentBoundReport> {
    require_rademacher(law, "moment_bound_check")?;
    let decomp = second_moment_decompose(law, beta, n_steps, x, y, event)?;
    let kappa = kappa_p(law, beta, p)?;
    let mut s = KahanSum::new();
    for (k, &l) in decomp.lambdas.iter().enumerate() {
        s.add(kappa.powi(k as i32) * l.sqrt());
    }
    let rhs = s.value().powf(p);
    let en = build_exact(beta, n_steps, &[x, y], event)?;
    let total = 1u64 << en.m;
    let mut lhs = KahanSum::new();
    for config in 0..total {
        let d = en.event_value(0, config as u32) - en.event_value(1, config as u32);
        lhs.add(d.abs().powf(p));
    }
    let lhs = lhs.value() / total as f64;
    Ok(MomentBoundReport {
        p,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-10) + 1e-300,
    })
}
