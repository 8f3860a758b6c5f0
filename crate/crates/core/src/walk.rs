//! Exact simple-random-walk analytics: pmfs, local-limit envelopes, exit
//! probabilities and rates, the reflection coupling with its meeting-time
//! identity, and a numeric modulus-of-continuity inequality checker.

use crate::numeric::{chi_squared_pvalue, KahanSum};
use crate::rng;
use crate::{Error, Result};

/// P(S_i = d) for a simple random walk from 0: 2^{−i}·C(i, (i+d)/2).
///
/// Exact u128 binomial up to 80 steps; compensated log-space product above
/// that (absolute exponent error ≲ 1e−13, so window sums stay below 1e−12).
pub fn srw_pmf(i: u64, d: i64) -> f64 {
    if d.unsigned_abs() > i || (i as i64 + d) % 2 != 0 {
        return 0.0;
    }
    let k = ((i as i64 + d) / 2) as u64;
    if i <= 80 {
        pmf_exact_small(i, k)
    } else {
        pmf_log(i, k)
    }
}

fn pmf_exact_small(i: u64, k: u64) -> f64 {
    let k = k.min(i - k);
    let mut c: u128 = 1;
    for j in 1..=k {
        c = c * (i - k + j) as u128 / j as u128;
    }
    c as f64 * 2f64.powi(-(i as i32))
}

fn pmf_log(i: u64, k: u64) -> f64 {
    let k = k.min(i - k);
    let mut s = KahanSum::new();
    for j in 1..=k {
        s.add(((i - k + j) as f64).ln() - (j as f64).ln());
    }
    (s.value() - i as f64 * std::f64::consts::LN_2).exp()
}

/// Local-limit envelope scan: the smallest c with max_d P(S_i = d) ≤ c/√i for
/// every 2 ≤ i ≤ i_max, plus the plateau value of max_d P(S_i = d)·√i at i_max.
#[derive(Debug, Clone, Copy)]
pub struct LltEnvelopeReport {
    pub i_max: u64,
    /// max over i of (max_d pmf)·√i.
    pub c: f64,
    /// (max_d pmf)·√i at i = i_max.
    pub plateau: f64,
}

pub fn llt_envelope_check(i_max: u64) -> LltEnvelopeReport {
    assert!(i_max >= 2);
    let mut c = 0.0_f64;
    let mut plateau = 0.0;
    for i in 2..=i_max {
        let peak = srw_pmf(i, if i % 2 == 0 { 0 } else { 1 });
        let scaled = peak * (i as f64).sqrt();
        c = c.max(scaled);
        if i == i_max {
            plateau = scaled;
        }
    }
    LltEnvelopeReport { i_max, c, plateau }
}

/// Exact P(max_{i≤N} |S_i| ≥ a) by absorbing dynamic programming.
///
/// Absorbed flux is accumulated directly, so tiny exit probabilities come out
/// at full precision instead of as 1 − (mass ≈ 1).
pub fn exit_probability_exact(n_steps: u32, a: i64) -> Result<f64> {
    if a <= 0 {
        return Ok(1.0);
    }
    if a > n_steps as i64 {
        return Ok(0.0);
    }
    let width = (2 * a - 1) as usize;
    let cells = n_steps as u64 * (width as u64 + 1);
    if cells > 100_000_000 {
        return Err(Error::Cost(format!(
            "exit_probability_exact: {cells} DP cells exceeds the 1e8 guard"
        )));
    }
    // interior sites −(a−1)..=a−1, index x + (a−1)
    let mut cur = vec![0.0_f64; width];
    cur[(a - 1) as usize] = 1.0;
    let mut exited = KahanSum::new();
    for _ in 0..n_steps {
        let mut next = vec![0.0_f64; width];
        for (j, &m) in cur.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let half = 0.5 * m;
            if j == 0 {
                exited.add(half);
            } else {
                next[j - 1] += half;
            }
            if j == width - 1 {
                exited.add(half);
            } else {
                next[j + 1] += half;
            }
        }
        cur = next;
    }
    Ok(exited.value().min(1.0))
}

/// Empirical exit rate −(1/T) log P(E) with N = ⌊T·n⌋ and a = ⌊L·T·√n⌋.
/// +∞ when the tube is unreachable (P = 0): the rate saturates rather than
/// erroring, since wide tubes legitimately kill the event at desk scale.
pub fn exit_rate_estimate(t: f64, n: u32, l: f64) -> Result<f64> {
    if t < 1.0 || n == 0 || l <= 0.0 {
        return Err(Error::Domain(format!(
            "exit_rate_estimate: need t ≥ 1, n ≥ 1, l > 0 (got t={t}, n={n}, l={l})"
        )));
    }
    let n_steps = (t * n as f64).floor() as u32;
    let a = (l * t * (n as f64).sqrt()).floor() as i64;
    let p = exit_probability_exact(n_steps, a)?;
    Ok(if p == 0.0 { f64::INFINITY } else { -p.ln() / t })
}

/// A reflection-coupled pair of simple random walks.
#[derive(Debug, Clone)]
pub struct CoupledWalkPair {
    pub start_x: i64,
    pub start_y: i64,
    /// S trajectory from start_x, length n_steps + 1.
    pub s: Vec<i64>,
    /// S̃ trajectory from start_y: the mirror of S about (x+y)/2 until the
    /// meeting time, then S itself.
    pub s_tilde: Vec<i64>,
    /// First index where S hits (x+y)/2, if within the horizon.
    pub tau: Option<u32>,
}

/// Sample one coupled pair. Requires x ≡ y (mod 2) so the midpoint is a site
/// of the right parity.
pub fn reflection_coupling_sample(
    x: i64,
    y: i64,
    n_steps: u32,
    seed: u64,
) -> Result<CoupledWalkPair> {
    if (x - y).rem_euclid(2) != 0 {
        return Err(Error::Domain(format!(
            "reflection_coupling_sample: starts {x}, {y} differ in parity"
        )));
    }
    let mid = (x + y) / 2;
    let mut s = Vec::with_capacity(n_steps as usize + 1);
    s.push(x);
    for i in 1..=n_steps {
        let step = if rng::site_word(seed, i, 0, 3) >> 63 == 1 {
            1
        } else {
            -1
        };
        s.push(s[i as usize - 1] + step);
    }
    let tau = s.iter().position(|&v| v == mid).map(|i| i as u32);
    let s_tilde = s
        .iter()
        .enumerate()
        .map(|(i, &v)| match tau {
            Some(t) if (i as u32) >= t => v,
            _ => x + y - v,
        })
        .collect();
    Ok(CoupledWalkPair {
        start_x: x,
        start_y: y,
        s,
        s_tilde,
        tau,
    })
}

/// Exactness report for the coupling's marginal: enumerate all 2^N driving
/// paths and compare the induced path law of S̃ against uniform SRW from y.
#[derive(Debug, Clone, Copy)]
pub struct CouplingMarginalReport {
    pub n_steps: u32,
    pub tv_distance: f64,
}

pub fn coupling_marginal_exact(x: i64, y: i64, n_steps: u32) -> Result<CouplingMarginalReport> {
    if (x - y).rem_euclid(2) != 0 {
        return Err(Error::Domain(
            "coupling_marginal_exact: parity mismatch".into(),
        ));
    }
    if n_steps > 20 {
        return Err(Error::Cost(
            "coupling_marginal_exact: enumeration capped at 20 steps".into(),
        ));
    }
    let n = n_steps as usize;
    let mid = (x + y) / 2;
    let mut counts = vec![0u32; 1usize << n];
    let total = 1u64 << n;
    for mask in 0..total {
        // Drive S by the mask, build S̃, and re-encode S̃'s step sequence.
        let mut s = x;
        let mut met = s == mid;
        let mut prev_tilde = y;
        let mut key = 0usize;
        for k in 0..n {
            let step = if (mask >> k) & 1 == 1 { 1i64 } else { -1 };
            s += step;
            let tilde = if met { s } else { x + y - s };
            if (tilde - prev_tilde) == 1 {
                key |= 1 << k;
            }
            prev_tilde = tilde;
            if s == mid {
                met = true;
            }
        }
        counts[key] += 1;
    }
    let mut tv = 0.0_f64;
    for &c in &counts {
        tv += (c as f64 / total as f64 - 1.0 / total as f64).abs();
    }
    Ok(CouplingMarginalReport {
        n_steps,
        tv_distance: 0.5 * tv,
    })
}

/// Chi-squared p-value for the sampled S̃ endpoint against the exact SRW law
/// (bins with expected count < 5 merged inward from the tails).
pub fn coupling_endpoint_chi_squared(
    x: i64,
    y: i64,
    n_steps: u32,
    samples: u32,
    seed: u64,
) -> Result<f64> {
    let mut observed = std::collections::HashMap::new();
    for i in 0..samples {
        let pair = reflection_coupling_sample(x, y, n_steps, rng::child_seed(seed, i as u64))?;
        *observed
            .entry(pair.s_tilde[n_steps as usize])
            .or_insert(0u32) += 1;
    }
    let mut bins_obs = Vec::new();
    let mut bins_exp = Vec::new();
    let mut carry_obs = 0.0;
    let mut carry_exp = 0.0;
    for d in (-(n_steps as i64)..=n_steps as i64).filter(|d| (d + n_steps as i64) % 2 == 0) {
        carry_obs += *observed.get(&(y + d)).unwrap_or(&0) as f64;
        carry_exp += srw_pmf(n_steps as u64, d) * samples as f64;
        if carry_exp >= 5.0 {
            bins_obs.push(carry_obs);
            bins_exp.push(carry_exp);
            carry_obs = 0.0;
            carry_exp = 0.0;
        }
    }
    if carry_exp > 0.0 {
        let last = bins_obs.len() - 1;
        bins_obs[last] += carry_obs;
        bins_exp[last] += carry_exp;
    }
    Ok(chi_squared_pvalue(&bins_obs, &bins_exp))
}

/// P(τ_{x,y} > i) for the coupling's meeting time, by first-passage DP from
/// d = |x−y|/2 with an absorbing site at 0.
pub fn meeting_time_tail(x: i64, y: i64, i: u32) -> Result<f64> {
    Ok(*meeting_time_tail_curve(x, y, i)?.last().unwrap())
}

/// Tail curve P(τ > i) for i = 0..=i_max in one DP sweep.
pub fn meeting_time_tail_curve(x: i64, y: i64, i_max: u32) -> Result<Vec<f64>> {
    if (x - y).rem_euclid(2) != 0 {
        return Err(Error::Domain("meeting_time_tail: parity mismatch".into()));
    }
    let d = (x - y).abs() / 2;
    if d == 0 {
        return Ok(vec![0.0; i_max as usize + 1]);
    }
    // Walk from d, absorbing at 0; sites 1..=d+i_max.
    let width = (d + i_max as i64) as usize;
    let mut cur = vec![0.0_f64; width + 1];
    cur[d as usize] = 1.0;
    let mut tails = Vec::with_capacity(i_max as usize + 1);
    tails.push(1.0);
    for _ in 1..=i_max {
        let mut next = vec![0.0_f64; width + 1];
        for j in 1..width {
            let m = cur[j];
            if m == 0.0 {
                continue;
            }
            let half = 0.5 * m;
            if j > 1 {
                next[j - 1] += half;
            }
            next[j + 1] += half;
        }
        let mut alive = KahanSum::new();
        for &v in &next {
            alive.add(v);
        }
        tails.push(alive.value());
        cur = next;
    }
    Ok(tails)
}

/// The same tail through the window identity P(τ > i) = P(−d < S_i ≤ d).
pub fn meeting_time_tail_window(x: i64, y: i64, i: u32) -> Result<f64> {
    if (x - y).rem_euclid(2) != 0 {
        return Err(Error::Domain("meeting_time_tail: parity mismatch".into()));
    }
    let d = (x - y).abs() / 2;
    let mut s = KahanSum::new();
    for v in (1 - d)..=d {
        s.add(srw_pmf(i as u64, v));
    }
    Ok(s.value())
}

/// A continuous piecewise-linear function on [−1, 1].
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    /// Strictly increasing knots from −1 to 1.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        Self { xs, ys }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.xs[0], *self.xs.last().unwrap());
        let idx = match self.xs.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i,
        };
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let (y0, y1) = (self.ys[idx - 1], self.ys[idx]);
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }
}

/// Random piecewise-linear function with `interior` interior knots, values in
/// [−1, 1]; deterministic in the seed.
pub fn random_piecewise_linear(seed: u64, interior: u32) -> PiecewiseLinear {
    let mut xs = vec![-1.0];
    for j in 0..interior {
        xs.push(2.0 * rng::unit_open(rng::site_word(seed, 1, j as i64, 0)) - 1.0);
    }
    xs.push(1.0);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let ys = (0..xs.len())
        .map(|j| 2.0 * rng::unit_open(rng::site_word(seed, 2, j as i64, 1)) - 1.0)
        .collect();
    PiecewiseLinear::new(xs, ys)
}

/// Result of the continuity-modulus inequality scan.
#[derive(Debug, Clone, Copy)]
pub struct GrrReport {
    pub functions_checked: usize,
    pub pairs_per_function: u32,
    pub violations: usize,
    /// Worst LHS/RHS ratio seen over pairs with RHS > 0.
    pub worst_ratio: f64,
    /// Functions skipped because the double integral was not finite.
    pub skipped: usize,
}

/// Checks |f(x)−f(y)| ≤ [2^{2/p+q+3} / (λ^{1/p} (q − 2/p))] · |x−y|^{q−2/p} · B^{1/p}
/// with B = ∫∫ (|f(t)−f(s)| / |t−s|^q)^p ds dt over [−1,1]², at random pairs.
///
/// The universal constant λ in the bound has no standard numeric value; it
/// is a parameter (default 1) and the worst ratio is always reported
/// alongside the violation count.
pub fn grr_bound_check(
    functions: &[PiecewiseLinear],
    p: f64,
    q: f64,
    lambda: f64,
    pairs_per_function: u32,
    seed: u64,
) -> Result<GrrReport> {
    if p < 1.0 || q <= 0.0 || p * q <= 2.0 {
        return Err(Error::Domain(format!(
            "grr_bound_check: need p ≥ 1, q > 0, pq > 2 (got p={p}, q={q})"
        )));
    }
    let exponent = q - 2.0 / p;
    let constant = 2f64.powf(2.0 / p + q + 3.0) / (lambda.powf(1.0 / p) * exponent);
    let mut violations = 0usize;
    let mut worst = 0.0_f64;
    let mut skipped = 0usize;
    const M: usize = 256;
    let h = 2.0 / M as f64;
    for (fi, f) in functions.iter().enumerate() {
        // Midpoint rule; the diagonal cells vanish in the limit pq < p + 2
        // relevant here, so they contribute 0.
        let grid: Vec<f64> = (0..M).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| f.eval(t)).collect();
        let mut b = KahanSum::new();
        for i in 0..M {
            for j in 0..M {
                if i == j {
                    continue;
                }
                let num = (vals[i] - vals[j]).abs();
                if num == 0.0 {
                    continue;
                }
                let den = (grid[i] - grid[j]).abs();
                b.add((num / den.powf(q)).powf(p) * h * h);
            }
        }
        let b = b.value();
        if !b.is_finite() {
            skipped += 1;
            continue;
        }
        let b_root = b.powf(1.0 / p);
        for k in 0..pairs_per_function {
            let s = rng::child_seed(seed, (fi as u64) << 32 | k as u64);
            let xx = 2.0 * rng::unit_open(rng::site_word(s, 3, 0, 0)) - 1.0;
            let yy = 2.0 * rng::unit_open(rng::site_word(s, 3, 1, 0)) - 1.0;
            if xx == yy {
                continue;
            }
            let lhs = (f.eval(xx) - f.eval(yy)).abs();
            let rhs = constant * (xx - yy).abs().powf(exponent) * b_root;
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
                if lhs > rhs {
                    violations += 1;
                }
            } else if lhs > 0.0 {
                violations += 1;
            }
        }
    }
    Ok(GrrReport {
        functions_checked: functions.len(),
        pairs_per_function,
        violations,
        worst_ratio: worst,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_small_values() {
        assert_eq!(srw_pmf(2, 0), 0.5);
        assert_eq!(srw_pmf(2, 2), 0.25);
        assert_eq!(srw_pmf(2, -2), 0.25);
        assert_eq!(srw_pmf(2, 1), 0.0);
        assert_eq!(srw_pmf(3, 5), 0.0);
        assert_eq!(srw_pmf(0, 0), 1.0);
    }

    #[test]
    fn pmf_symmetry_and_normalization() {
        for &i in &[1u64, 10, 66, 67, 80, 81, 100, 500, 1000] {
            let mut s = KahanSum::new();
            for d in -(i as i64)..=i as i64 {
                let p = srw_pmf(i, d);
                assert_eq!(p, srw_pmf(i, -d));
                s.add(p);
            }
            assert!((s.value() - 1.0).abs() < 1e-12, "i={i}");
        }
    }

    #[test]
    fn pmf_branches_agree_near_cut() {
        for i in 60..=90u64 {
            for d in (-(i as i64)..=i as i64)
                .step_by(2)
                .filter(|d| (i as i64 + d) % 2 == 0)
            {
                let k = ((i as i64 + d) / 2) as u64;
                let a = pmf_exact_small(i, k);
                let b = pmf_log(i, k);
                if a > 0.0 {
                    assert!(((a - b) / a).abs() < 1e-12, "i={i} d={d}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn llt_envelope_below_one() {
        let r = llt_envelope_check(1000);
        assert!(r.c < 1.0, "c={}", r.c);
        assert!(r.c >= 0.5 * 2f64.sqrt() - 1e-15);
        // plateau approaches √(2/π) ≈ 0.7979 from below
        assert!((r.plateau - 0.7979).abs() < 0.01, "plateau={}", r.plateau);
    }

    #[test]
    fn exit_probability_edges() {
        assert_eq!(exit_probability_exact(5, 6).unwrap(), 0.0);
        assert_eq!(exit_probability_exact(1, 1).unwrap(), 1.0);
        // straight runs only: P(max ≥ N) = 2·2^{−N}
        let p = exit_probability_exact(10, 10).unwrap();
        assert!((p - 2.0 * 2f64.powi(-10)).abs() < 1e-15);
    }

    fn exit_brute(n_steps: u32, a: i64) -> f64 {
        let mut hits = 0u64;
        crate::polymer::for_each_path(n_steps, 0, |sites| {
            if sites.iter().any(|&s| s.abs() >= a) {
                hits += 1;
            }
        });
        hits as f64 / 2f64.powi(n_steps as i32)
    }

    #[test]
    fn exit_probability_matches_enumeration() {
        for n in 1..=12u32 {
            for a in 1..=(n as i64 + 1) {
                let dp = exit_probability_exact(n, a).unwrap();
                let bf = exit_brute(n, a);
                assert!((dp - bf).abs() < 1e-12, "n={n} a={a}: {dp} vs {bf}");
            }
        }
    }

    #[test]
    fn exit_probability_monotone_and_hoeffding() {
        for &n in &[10u32, 50, 100, 400] {
            let mut prev = 1.0_f64;
            for a in 1..=n as i64 {
                let p = exit_probability_exact(n, a).unwrap();
                assert!(p <= prev + 1e-15, "a-monotonicity n={n} a={a}");
                prev = p;
                let bound = 4.0 * (-(a as f64) * a as f64 / (2.0 * n as f64)).exp();
                assert!(p <= bound.min(1.0) + 1e-15, "hoeffding n={n} a={a}");
            }
        }
        // nondecreasing in N at fixed a
        let mut prev = 0.0;
        for n in 4..40u32 {
            let p = exit_probability_exact(n, 4).unwrap();
            assert!(p >= prev - 1e-15);
            prev = p;
        }
    }

    #[test]
    fn exit_rate_increases_then_saturates() {
        let ls = [2.0, 3.0, 4.0, 6.0, 8.0];
        let rates: Vec<f64> = ls
            .iter()
            .map(|&l| exit_rate_estimate(4.0, 16, l).unwrap())
            .collect();
        let finite: Vec<f64> = rates.iter().copied().filter(|r| r.is_finite()).collect();
        assert!(finite.len() >= 3);
        for w in finite.windows(2) {
            assert!(w[1] > w[0], "{rates:?}");
        }
        // beyond the reachable width the event is impossible: rate saturates
        assert!(rates.iter().skip(finite.len()).all(|r| r.is_infinite()));
    }

    #[test]
    fn coupling_identity_pathwise() {
        for seed in 0..50u64 {
            let pair = reflection_coupling_sample(0, 6, 40, seed).unwrap();
            let mid = 3;
            let tau = pair.tau;
            for i in 0..=40usize {
                match tau {
                    Some(t) if i as u32 >= t => assert_eq!(pair.s_tilde[i], pair.s[i]),
                    _ => assert_eq!(pair.s_tilde[i], 6 - pair.s[i]),
                }
            }
            if let Some(t) = tau {
                assert_eq!(pair.s[t as usize], mid);
                assert!(pair.s[..t as usize].iter().all(|&v| v != mid));
            }
        }
    }

    #[test]
    fn coupling_same_start_trivial() {
        let pair = reflection_coupling_sample(2, 2, 10, 9).unwrap();
        assert_eq!(pair.tau, Some(0));
        assert_eq!(pair.s, pair.s_tilde);
    }

    #[test]
    fn coupling_parity_rejected() {
        assert!(reflection_coupling_sample(0, 3, 5, 1).is_err());
    }

    #[test]
    fn coupling_marginal_exactly_uniform() {
        for (x, y, n) in [(0i64, 4i64, 10u32), (0, 2, 12), (-3, 5, 9)] {
            let r = coupling_marginal_exact(x, y, n).unwrap();
            assert!(
                r.tv_distance < 1e-12,
                "x={x} y={y} n={n}: tv={}",
                r.tv_distance
            );
        }
    }

    #[test]
    fn coupling_endpoint_distribution_sane() {
        let p = coupling_endpoint_chi_squared(0, 4, 30, 20_000, 123).unwrap();
        assert!(p > 0.01, "p={p}");
    }

    #[test]
    fn meeting_tail_identity_and_monotonicity() {
        for d in [1i64, 2, 5, 10, 20] {
            let curve = meeting_time_tail_curve(2 * d, 0, 200).unwrap();
            assert_eq!(curve[0], 1.0);
            for i in 0..=200u32 {
                let window = meeting_time_tail_window(2 * d, 0, i).unwrap();
                assert!(
                    (curve[i as usize] - window).abs() < 1e-12,
                    "d={d} i={i}: {} vs {window}",
                    curve[i as usize]
                );
                if i > 0 {
                    assert!(curve[i as usize] <= curve[i as usize - 1] + 1e-15);
                }
            }
        }
    }

    #[test]
    fn meeting_tail_same_start_zero() {
        assert_eq!(meeting_time_tail(4, 4, 17).unwrap(), 0.0);
    }

    #[test]
    fn grr_constant_function_trivial() {
        let f = PiecewiseLinear::new(vec![-1.0, 1.0], vec![0.3, 0.3]);
        let r = grr_bound_check(&[f], 4.0, 0.625, 1.0, 100, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.worst_ratio, 0.0);
    }

    #[test]
    fn grr_identity_function_holds() {
        let f = PiecewiseLinear::new(vec![-1.0, 1.0], vec![-1.0, 1.0]);
        let r = grr_bound_check(&[f], 4.0, 0.625, 1.0, 1000, 2).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.worst_ratio > 0.0 && r.worst_ratio < 1.0);
    }

    #[test]
    fn grr_random_scan_no_violations() {
        let fs: Vec<PiecewiseLinear> = (0..40).map(|s| random_piecewise_linear(s, 6)).collect();
        for (p, q) in [(4.0, 0.625), (3.0, 1.0)] {
            let r = grr_bound_check(&fs, p, q, 1.0, 200, 7).unwrap();
            assert_eq!(r.violations, 0, "p={p} q={q}: worst {}", r.worst_ratio);
            assert_eq!(r.skipped, 0);
        }
    }

    #[test]
    fn grr_rejects_bad_exponents() {
        let f = PiecewiseLinear::new(vec![-1.0, 1.0], vec![0.0, 1.0]);
        assert!(grr_bound_check(&[f], 2.0, 0.5, 1.0, 10, 1).is_err());
    }
}
