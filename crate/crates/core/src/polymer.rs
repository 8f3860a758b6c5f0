//! Exact transfer-matrix evaluation of normalized partition functions.
//!
//! A polymer path is a simple random walk bridge weighted multiplicatively by
//! ζ(k, S_k) = exp(β η(k, S_k) − λ(β)). The engine evolves one time slice at a
//! time with the recursion Z(k+1, x) = ½(Z(k, x−1) + Z(k, x+1))·ζ(k+1, x),
//! keeping slices as nonnegative mantissas against a shared power-of-two
//! scale so runs of length 10⁵ neither overflow nor underflow.

use crate::environment::{log_mgf, DisorderField, DisorderLaw, EnvironmentField};
use crate::numeric::{mean_stderr, KahanSum};
use crate::rng;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

const LN_2: f64 = std::f64::consts::LN_2;

type RegionFn = dyn Fn(u32, i64) -> bool + Send + Sync;
type EndpointFn = dyn Fn(i64) -> bool + Send + Sync;

/// Path event: a per-step allowed region plus an optional endpoint set.
///
/// The region is consulted at every time index including 0 (the start must be
/// allowed for a nonempty result); the endpoint set only at the final time.
#[derive(Clone, Default)]
pub struct PathConstraint {
    region: Option<Arc<RegionFn>>,
    endpoint: Option<Arc<EndpointFn>>,
}

impl std::fmt::Debug for PathConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PathConstraint")
            .field("region", &self.region.is_some())
            .field("endpoint", &self.endpoint.is_some())
            .finish()
    }
}

impl PathConstraint {
    /// No restriction.
    pub fn none() -> Self {
        Self::default()
    }

    /// Restrict every step to a predicate over (time, site).
    pub fn region(f: impl Fn(u32, i64) -> bool + Send + Sync + 'static) -> Self {
        Self {
            region: Some(Arc::new(f)),
            endpoint: None,
        }
    }

    /// Band |site − center| ≤ half_width at every time.
    pub fn band(center: i64, half_width: i64) -> Self {
        Self::region(move |_, l| (l - center).abs() <= half_width)
    }

    /// Add an endpoint predicate, keeping the region.
    pub fn with_endpoint(mut self, f: impl Fn(i64) -> bool + Send + Sync + 'static) -> Self {
        self.endpoint = Some(Arc::new(f));
        self
    }

    /// Endpoint restricted to the closed interval [lo, hi].
    pub fn with_endpoint_window(self, lo: i64, hi: i64) -> Self {
        self.with_endpoint(move |l| lo <= l && l <= hi)
    }

    #[inline]
    pub fn allows(&self, k: u32, l: i64) -> bool {
        match &self.region {
            None => true,
            Some(f) => f(k, l),
        }
    }

    #[inline]
    pub fn endpoint_allows(&self, l: i64) -> bool {
        match &self.endpoint {
            None => true,
            Some(f) => f(l),
        }
    }
}

/// One time slice of point-to-point partition values.
///
/// Sites are origin + 2i (every slice has a single parity). The represented
/// value at a site is mantissa · 2^{scale_exp}; the scale exponent is shared
/// by the whole slice and adjusted in exact powers of two, so rescaling never
/// changes represented values.
#[derive(Debug, Clone)]
pub struct PartitionSlice {
    time: u32,
    origin: i64,
    values: Vec<f64>,
    scale_exp: i64,
    empty: bool,
}

impl PartitionSlice {
    /// Initial slice: unit mass at the start site, time 0.
    pub fn delta(start_x: i64) -> Self {
        Self {
            time: 0,
            origin: start_x,
            values: vec![1.0],
            scale_exp: 0,
            empty: false,
        }
    }

    fn empty_at(time: u32) -> Self {
        Self {
            time,
            origin: 0,
            values: Vec::new(),
            scale_exp: 0,
            empty: true,
        }
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    /// True when a constraint annihilated every path.
    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Shared log scale: represented value = mantissa · exp(log_offset).
    pub fn log_offset(&self) -> f64 {
        self.scale_exp as f64 * LN_2
    }

    /// Mantissa at site x (0 outside the support or off parity).
    pub fn mantissa_at(&self, x: i64) -> f64 {
        if self.empty {
            return 0.0;
        }
        let d = x - self.origin;
        if d < 0 || d % 2 != 0 {
            return 0.0;
        }
        let i = (d / 2) as usize;
        if i < self.values.len() {
            self.values[i]
        } else {
            0.0
        }
    }

    /// log of the represented value at site x; −∞ outside the support.
    pub fn log_value_at(&self, x: i64) -> f64 {
        let m = self.mantissa_at(x);
        if m == 0.0 {
            f64::NEG_INFINITY
        } else {
            m.ln() + self.log_offset()
        }
    }

    /// (site, mantissa) pairs over the support.
    pub fn sites(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let origin = self.origin;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (origin + 2 * i as i64, v))
    }

    /// log of the slice total; −∞ when empty.
    ///
    /// Plain left-to-right summation: every partial operation is monotone
    /// under rounding, so pointwise-dominated slices yield dominated totals
    /// exactly (the mask-monotonicity invariant survives floating point).
    pub fn log_total(&self) -> f64 {
        self.log_total_endpoint(&PathConstraint::none())
    }

    /// log of the endpoint-filtered slice total; −∞ when nothing is allowed.
    pub fn log_total_endpoint(&self, constraint: &PathConstraint) -> f64 {
        if self.empty {
            return f64::NEG_INFINITY;
        }
        let mut s = 0.0_f64;
        for (x, v) in self.sites() {
            if v > 0.0 && constraint.endpoint_allows(x) {
                s += v;
            }
        }
        if s == 0.0 {
            f64::NEG_INFINITY
        } else {
            s.ln() + self.log_offset()
        }
    }

    /// Pull the slice's max mantissa back into [1/2, 2) by an exact power of
    /// two whenever it drifts outside [2^{−16}, 2^{16}].
    fn renormalize(&mut self) {
        let max = self.values.iter().cloned().fold(0.0_f64, f64::max);
        if max == 0.0 {
            *self = Self::empty_at(self.time);
            return;
        }
        if (2f64.powi(-16)..=2f64.powi(16)).contains(&max) {
            return;
        }
        let e = max.log2().floor() as i32 + 1;
        let scale = 2f64.powi(-e);
        for v in &mut self.values {
            *v *= scale;
        }
        self.scale_exp += e as i64;
    }

    /// Drop zero margins so constrained runs stay narrow.
    fn trim(&mut self) {
        let first = self.values.iter().position(|&v| v > 0.0);
        let Some(first) = first else {
            *self = Self::empty_at(self.time);
            return;
        };
        let last = self.values.iter().rposition(|&v| v > 0.0).unwrap();
        if first > 0 || last + 1 < self.values.len() {
            self.origin += 2 * first as i64;
            self.values.drain(last + 1..);
            self.values.drain(..first);
        }
    }
}

fn step_slice(
    slice: &PartitionSlice,
    field: &impl DisorderField,
    beta: f64,
    lambda: f64,
    constraint: &PathConstraint,
) -> PartitionSlice {
    let k = slice.time + 1;
    if slice.empty {
        return PartitionSlice::empty_at(k);
    }
    let new_origin = slice.origin - 1;
    let n_new = slice.values.len() + 1;
    let mut values = vec![0.0_f64; n_new];
    let zero_beta = beta == 0.0;
    for (i, out) in values.iter_mut().enumerate() {
        let left = if i >= 1 { slice.values[i - 1] } else { 0.0 };
        let right = if i < slice.values.len() {
            slice.values[i]
        } else {
            0.0
        };
        let m = 0.5 * (left + right);
        if m == 0.0 {
            continue;
        }
        let x = new_origin + 2 * i as i64;
        if !constraint.allows(k, x) {
            continue;
        }
        let w = if zero_beta {
            (-lambda).exp()
        } else {
            (beta * field.eta(k, x) - lambda).exp()
        };
        *out = m * w;
    }
    let mut next = PartitionSlice {
        time: k,
        origin: new_origin,
        values,
        scale_exp: slice.scale_exp,
        empty: false,
    };
    next.trim();
    if !next.empty {
        next.renormalize();
    }
    next
}

/// One Markov step of the recursion; masks the region after the step and
/// renormalizes. An annihilated slice comes back flagged empty, not as an
/// error.
pub fn evolve_slice(
    slice: &PartitionSlice,
    field: &impl DisorderField,
    law: DisorderLaw,
    beta: f64,
    constraint: &PathConstraint,
) -> Result<PartitionSlice> {
    let lambda = log_mgf(law, beta)?;
    Ok(step_slice(slice, field, beta, lambda, constraint))
}

/// Evolve a delta start through n_steps steps under the constraint's region.
/// The endpoint predicate is not applied here; totals filtered by it come
/// from [`PartitionSlice::log_total_endpoint`].
pub fn final_slice(
    field: &impl DisorderField,
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    start_x: i64,
    constraint: &PathConstraint,
) -> Result<PartitionSlice> {
    let lambda = log_mgf(law, beta)?;
    let mut slice = if constraint.allows(0, start_x) {
        PartitionSlice::delta(start_x)
    } else {
        PartitionSlice::empty_at(0)
    };
    for _ in 0..n_steps {
        slice = step_slice(&slice, field, beta, lambda, constraint);
    }
    Ok(slice)
}

/// log W for the constrained normalized partition function; −∞ when the
/// constraint annihilates every path.
pub fn partition_function(
    field: &impl DisorderField,
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    start_x: i64,
    constraint: &PathConstraint,
) -> Result<f64> {
    let slice = final_slice(field, law, beta, n_steps, start_x, constraint)?;
    Ok(slice.log_total_endpoint(constraint))
}

/// log Z(n_steps, end_y) for the unconstrained point-to-point function.
pub fn point_to_point(
    field: &impl DisorderField,
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    start_x: i64,
    end_y: i64,
) -> Result<f64> {
    let d = end_y - start_x;
    if d.abs() > n_steps as i64 || (n_steps as i64 + d) % 2 != 0 {
        return Err(Error::Domain(format!(
            "point_to_point: endpoint {end_y} unreachable from {start_x} in {n_steps} steps"
        )));
    }
    let slice = final_slice(field, law, beta, n_steps, start_x, &PathConstraint::none())?;
    Ok(slice.log_value_at(end_y))
}

/// Free-energy sample statistics at one (β, N) cell.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FreeEnergyEstimate {
    pub beta: f64,
    pub n_steps: u32,
    pub sample_count: u32,
    /// Mean of (1/N) log W over independent environments.
    pub mean: f64,
    pub stderr: f64,
}

/// Per-sample log W values over independent environments; sample i uses the
/// derived seed child_seed(master, i), so sample sets are reproducible and
/// extensible. Deterministic under any thread schedule.
pub fn log_w_samples(
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    samples: u32,
    master_seed: u64,
) -> Result<Vec<f64>> {
    log_mgf(law, beta)?;
    Ok((0..samples)
        .into_par_iter()
        .map(|i| {
            let field = EnvironmentField::new(rng::child_seed(master_seed, i as u64), law);
            partition_function(&field, law, beta, n_steps, 0, &PathConstraint::none())
                .expect("domain checked before dispatch")
        })
        .collect())
}

/// Monte Carlo estimate of (1/N) Q[log W].
pub fn free_energy_estimate(
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    samples: u32,
    master_seed: u64,
) -> Result<FreeEnergyEstimate> {
    if samples < 2 {
        return Err(Error::Config(
            "free_energy_estimate: samples must be ≥ 2".into(),
        ));
    }
    let logs = log_w_samples(law, beta, n_steps, samples, master_seed)?;
    let scaled: Vec<f64> = logs.iter().map(|lw| lw / n_steps as f64).collect();
    let (mean, stderr) = mean_stderr(&scaled);
    Ok(FreeEnergyEstimate {
        beta,
        n_steps,
        sample_count: samples,
        mean,
        stderr,
    })
}

/// Superadditivity diagnostic for Q[log W]: the combined horizon mean must
/// dominate the sum of the split means up to 3 combined standard errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuperadditivityReport {
    pub n: u32,
    pub m: u32,
    pub mean_log_w_nm: f64,
    pub stderr_nm: f64,
    pub mean_log_w_n: f64,
    pub stderr_n: f64,
    pub mean_log_w_m: f64,
    pub stderr_m: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn superadditivity_check(
    law: DisorderLaw,
    beta: f64,
    n: u32,
    m: u32,
    samples: u32,
    master_seed: u64,
) -> Result<SuperadditivityReport> {
    let part = |tag: u64, steps: u32| -> Result<(f64, f64)> {
        let logs = log_w_samples(law, beta, steps, samples, rng::child_seed(master_seed, tag))?;
        Ok(mean_stderr(&logs))
    };
    let (mean_nm, se_nm) = part(1, n + m)?;
    let (mean_n, se_n) = part(2, n)?;
    let (mean_m, se_m) = part(3, m)?;
    let slack = 3.0 * (se_nm * se_nm + se_n * se_n + se_m * se_m).sqrt();
    Ok(SuperadditivityReport {
        n,
        m,
        mean_log_w_nm: mean_nm,
        stderr_nm: se_nm,
        mean_log_w_n: mean_n,
        stderr_n: se_n,
        mean_log_w_m: mean_m,
        stderr_m: se_m,
        slack,
        holds: mean_nm >= mean_n + mean_m - slack,
    })
}

/// Visit every nearest-neighbor path of n_steps steps from start_x.
/// The callback receives sites[0..=n_steps].
pub fn for_each_path<F: FnMut(&[i64])>(n_steps: u32, start_x: i64, mut f: F) {
    assert!(n_steps <= 24, "path enumeration capped at 24 steps");
    let n = n_steps as usize;
    let mut sites = vec![0i64; n + 1];
    sites[0] = start_x;
    for mask in 0..(1u64 << n) {
        for k in 0..n {
            sites[k + 1] = sites[k] + if (mask >> k) & 1 == 1 { 1 } else { -1 };
        }
        f(&sites);
    }
}

/// Brute-force log W by direct summation over all 2^N paths. Oracle for the
/// transfer matrix; refuses above 24 steps.
pub fn brute_force_partition(
    field: &impl DisorderField,
    law: DisorderLaw,
    beta: f64,
    n_steps: u32,
    start_x: i64,
    constraint: &PathConstraint,
) -> Result<f64> {
    if n_steps > 24 {
        return Err(Error::Cost(format!(
            "brute_force_partition: 2^{n_steps} paths exceeds the enumeration cap"
        )));
    }
    let lambda = log_mgf(law, beta)?;
    if !constraint.allows(0, start_x) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut total = KahanSum::new();
    for_each_path(n_steps, start_x, |sites| {
        let mut weight = 1.0_f64;
        for (k, &x) in sites.iter().enumerate().skip(1) {
            if !constraint.allows(k as u32, x) {
                return;
            }
            weight *= (beta * field.eta(k as u32, x) - lambda).exp();
        }
        if !constraint.endpoint_allows(sites[n_steps as usize]) {
            return;
        }
        total.add(weight);
    });
    let w = total.value() * 2f64.powi(-(n_steps as i32));
    Ok(if w <= 0.0 { f64::NEG_INFINITY } else { w.ln() })
}
