//! Coarse-grained block lattice over the polymer: segments, tubes, the
//! ε-good bond predicate, its density and dependence structure, block-chain
//! factorization, and the induced oriented percolation.

use crate::environment::{log_mgf, DisorderField, DisorderLaw, EnvironmentField, ShiftedField};
use crate::numeric::{correlation, mean_stderr};
use crate::polymer::{partition_function, PathConstraint};
use crate::rng;
use crate::{Error, Result};
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

/// Continuum free energy per unit time at the intermediate-disorder coupling;
/// the good-bond threshold is exp(T·(this − ε)). The continuum module
/// estimates the same constant independently for cross-validation.
pub const CONTINUUM_FREE_ENERGY: f64 = -1.0 / 6.0;

/// n = ⌊β^{−4}⌋, with a snap to the nearest integer when β^{−4} sits within
/// one part in 10⁹ of it (so fourth-power-exact points round cleanly).
pub fn scale_from_beta(beta: f64) -> Result<u32> {
    if !(0.0..=1.0).contains(&beta) || beta == 0.0 {
        return Err(Error::Domain(format!(
            "scale_from_beta: beta must lie in (0, 1], got {beta}"
        )));
    }
    let mut p = beta.powi(-4);
    let snapped = p.round();
    if (p - snapped).abs() <= 1e-9 * p {
        p = snapped;
    }
    Ok(p.floor() as u32)
}

/// β = n^{−1/4}: the inverse convention, fixing the lattice scale first.
pub fn beta_from_scale(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("beta_from_scale: n must be ≥ 1".into()));
    }
    Ok((n as f64).powf(-0.25))
}

/// Block geometry: time blocks of length ⌊Tn⌋ (rounded down to even so site
/// parity is consistent level to level), segment spacing δT√n, tube
/// half-width LT√n.
#[derive(Debug, Clone, Copy)]
pub struct CgGeometry {
    pub beta: f64,
    pub n: u32,
    pub t: f64,
    pub delta: f64,
    pub l: f64,
}

impl CgGeometry {
    pub fn new(beta: f64, t: f64, delta: f64, l: f64) -> Result<Self> {
        let n = scale_from_beta(beta)?;
        Self::validate(beta, n, t, delta, l)
    }

    /// Fix the lattice scale and derive β = n^{−1/4}.
    pub fn with_scale(n: u32, t: f64, delta: f64, l: f64) -> Result<Self> {
        let beta = beta_from_scale(n)?;
        Self::validate(beta, n, t, delta, l)
    }

    fn validate(beta: f64, n: u32, t: f64, delta: f64, l: f64) -> Result<Self> {
        if t < 1.0 {
            return Err(Error::Config(format!("block time T must be ≥ 1, got {t}")));
        }
        if !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(Error::Config(format!(
                "segment spacing delta must lie in (0,1), got {delta}"
            )));
        }
        if l <= 2.0 * delta + 1.0 {
            return Err(Error::Config(format!(
                "tube width L must exceed 2δ+1 = {}, got {l}",
                2.0 * delta + 1.0
            )));
        }
        let geom = Self {
            beta,
            n,
            t,
            delta,
            l,
        };
        if geom.block_len() < 2 {
            return Err(Error::Config(format!(
                "block length ⌊Tn⌋ = {} is too small to evolve",
                (t * n as f64).floor()
            )));
        }
        Ok(geom)
    }

    /// Walk steps per block: ⌊T·n⌋ rounded down to even.
    pub fn block_len(&self) -> u32 {
        let b = (self.t * self.n as f64).floor() as u32;
        b - b % 2
    }

    pub fn sqrt_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    /// Center of segment j in lattice units: j·δ·T·√n.
    pub fn segment_center(&self, j: i64) -> f64 {
        j as f64 * self.delta * self.t * self.sqrt_n()
    }

    /// Tube half-width in lattice units: L·T·√n.
    pub fn tube_half_width(&self) -> f64 {
        self.l * self.t * self.sqrt_n()
    }

    /// Integer points of segment j at the given (even) time anchor: the
    /// interval [center − √n, center + √n] rounded inward, keeping only
    /// sites of the anchor's parity.
    pub fn segment_points(&self, j: i64, time_anchor: u64) -> Vec<i64> {
        let c = self.segment_center(j);
        let s = self.sqrt_n();
        let lo = (c - s).ceil() as i64;
        let hi = (c + s).floor() as i64;
        (lo..=hi)
            .filter(|x| (x - time_anchor as i64).rem_euclid(2) == 0)
            .collect()
    }

    /// Global time range (lo, hi] covered by the tube at level i.
    pub fn tube_time_range(&self, i: u32) -> (u64, u64) {
        let b = self.block_len() as u64;
        (i as u64 * b, (i as u64 + 1) * b)
    }

    /// Space interval covered by the tube anchored at coarse site x.
    pub fn tube_space_range(&self, x: i64) -> (f64, f64) {
        let c = self.segment_center(x);
        let w = self.tube_half_width();
        (c - w, c + w)
    }

    /// Stay-in-tube constraint for a block-local run (times 1..=block_len);
    /// the start time 0 is unconstrained.
    pub fn tube_constraint(&self, x: i64) -> PathConstraint {
        let center = self.segment_center(x);
        let width = self.tube_half_width();
        PathConstraint::region(move |k, l| k == 0 || (l as f64 - center).abs() <= width)
    }
}

/// Coarse lattice site (level, spatial index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CgSite {
    pub i: u32,
    pub x: i64,
}

impl CgSite {
    pub fn is_valid(&self) -> bool {
        self.x.abs() <= self.i as i64 && (self.i as i64 - self.x.abs()) % 2 == 0
    }
}

/// Oriented bond from (i, x) to (i+1, y), |x − y| = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CgBond {
    pub i: u32,
    pub x: i64,
    pub y: i64,
}

impl CgBond {
    pub fn new(i: u32, x: i64, y: i64) -> Result<Self> {
        let b = Self { i, x, y };
        if !b.is_valid() {
            return Err(Error::Domain(format!(
                "invalid coarse bond ({i},{x})→({},{y})",
                i + 1
            )));
        }
        Ok(b)
    }

    pub fn is_valid(&self) -> bool {
        (self.x - self.y).abs() == 1
            && CgSite {
                i: self.i,
                x: self.x,
            }
            .is_valid()
            && CgSite {
                i: self.i + 1,
                x: self.y,
            }
            .is_valid()
    }
}

/// log of the tube-restricted, segment-landing block partition function for
/// one bond, started at start_x (which must be an admissible point of the
/// bond's source segment). The environment is read time-shifted by i·block.
pub fn bond_partition(
    field: &impl DisorderField,
    law: DisorderLaw,
    geom: &CgGeometry,
    bond: CgBond,
    start_x: i64,
) -> Result<f64> {
    if !bond.is_valid() {
        return Err(Error::Domain(format!("invalid bond {bond:?}")));
    }
    let b = geom.block_len();
    let anchor = bond.i as u64 * b as u64;
    let seg = geom.segment_points(bond.x, anchor);
    if !seg.contains(&start_x) {
        return Err(Error::Domain(format!(
            "start {start_x} is not an admissible point of segment {} at level {}",
            bond.x, bond.i
        )));
    }
    let landing: HashSet<i64> = geom
        .segment_points(bond.y, anchor + b as u64)
        .into_iter()
        .collect();
    let constraint = geom
        .tube_constraint(bond.x)
        .with_endpoint(move |l| landing.contains(&l));
    let shifted = ShiftedField::new(field, anchor as u32);
    partition_function(&shifted, law, geom.beta, b, start_x, &constraint)
}

/// min over admissible starts of the bond partition; the quantity thresholded
/// by the good predicate.
pub fn bond_minimum(
    field: &impl DisorderField,
    law: DisorderLaw,
    geom: &CgGeometry,
    bond: CgBond,
) -> Result<f64> {
    let anchor = bond.i as u64 * geom.block_len() as u64;
    let seg = geom.segment_points(bond.x, anchor);
    if seg.is_empty() {
        return Err(Error::Domain(format!(
            "segment {} at level {} rounded to empty",
            bond.x, bond.i
        )));
    }
    let mut min = f64::INFINITY;
    for start in seg {
        let v = bond_partition(field, law, geom, bond, start)?;
        if v < min {
            min = v;
        }
    }
    Ok(min)
}

/// log threshold T·(continuum constant − ε).
pub fn good_threshold(geom: &CgGeometry, eps: f64) -> f64 {
    geom.t * (CONTINUUM_FREE_ENERGY - eps)
}

/// The ε-good predicate: every admissible start's tube-restricted block
/// partition stays at or above the threshold.
pub fn is_good(
    field: &impl DisorderField,
    law: DisorderLaw,
    geom: &CgGeometry,
    bond: CgBond,
    eps: f64,
) -> Result<bool> {
    if eps <= 0.0 {
        return Err(Error::Domain(format!(
            "is_good: eps must be > 0, got {eps}"
        )));
    }
    let min = match bond_minimum(field, law, geom, bond) {
        Ok(v) => v,
        // an empty segment cannot certify anything: not good
        Err(Error::Domain(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    Ok(min >= good_threshold(geom, eps))
}

/// Monte Carlo density of the good event at the reference bond (0,0)→(1,1);
/// all bonds share its law by translation invariance.
#[derive(Debug, Clone, Copy)]
pub struct DensityEstimate {
    pub density: f64,
    pub stderr: f64,
    pub samples: u32,
}

pub fn good_density_estimate(
    law: DisorderLaw,
    geom: &CgGeometry,
    eps: f64,
    samples: u32,
    seed: u64,
) -> Result<DensityEstimate> {
    log_mgf(law, geom.beta)?;
    if samples < 2 {
        return Err(Error::Config("good_density_estimate: samples ≥ 2".into()));
    }
    let bond = CgBond::new(0, 0, 1)?;
    let vals: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let field = EnvironmentField::new(rng::child_seed(seed, i as u64), law);
            if is_good(&field, law, geom, bond, eps).expect("validated parameters") {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let (density, stderr) = mean_stderr(&vals);
    Ok(DensityEstimate {
        density,
        stderr,
        samples,
    })
}

/// Chain-factorization verdict: the full-chain partition function dominates
/// the product of per-bond infima on the same environment.
#[derive(Debug, Clone)]
pub struct ChainFactorizationReport {
    pub lhs_log: f64,
    pub rhs_log: f64,
    pub per_bond_min: Vec<f64>,
    pub holds: bool,
}

/// cg_path holds the coarse spatial index at levels 0..=I, starting at 0,
/// with nearest-neighbor increments.
pub fn chain_factorization_check(
    field: &impl DisorderField,
    law: DisorderLaw,
    geom: &CgGeometry,
    cg_path: &[i64],
) -> Result<ChainFactorizationReport> {
    if cg_path.len() < 2 || cg_path[0] != 0 {
        return Err(Error::Config(
            "chain_factorization_check: path must start at 0 and contain ≥ 1 bond".into(),
        ));
    }
    if cg_path.windows(2).any(|w| (w[1] - w[0]).abs() != 1) {
        return Err(Error::Config(
            "chain_factorization_check: path must move by ±1 per level".into(),
        ));
    }
    let levels = cg_path.len() - 1;
    let b = geom.block_len() as u64;

    let mut per_bond_min = Vec::with_capacity(levels);
    for (j, w) in cg_path.windows(2).enumerate() {
        let bond = CgBond::new(j as u32, w[0], w[1])?;
        per_bond_min.push(bond_minimum(field, law, geom, bond)?);
    }
    let rhs_log: f64 = per_bond_min.iter().sum();

    let centers: Vec<f64> = cg_path[..levels]
        .iter()
        .map(|&x| geom.segment_center(x))
        .collect();
    let boundary_sets: Vec<HashSet<i64>> = (1..=levels)
        .map(|j| {
            geom.segment_points(cg_path[j], j as u64 * b)
                .into_iter()
                .collect()
        })
        .collect();
    let width = geom.tube_half_width();
    let constraint = PathConstraint::region(move |k, l| {
        if k == 0 {
            return true;
        }
        let j = ((k as u64 - 1) / b) as usize;
        if j >= centers.len() {
            return false;
        }
        if (l as f64 - centers[j]).abs() > width {
            return false;
        }
        if (k as u64).is_multiple_of(b) {
            boundary_sets[j].contains(&l)
        } else {
            true
        }
    });
    let lhs_log = partition_function(
        field,
        law,
        geom.beta,
        (levels as u64 * b) as u32,
        0,
        &constraint,
    )?;
    let holds = if rhs_log == f64::NEG_INFINITY {
        true
    } else if lhs_log == f64::NEG_INFINITY {
        false
    } else {
        lhs_log >= rhs_log - 1e-10 * (1.0 + rhs_log.abs())
    };
    Ok(ChainFactorizationReport {
        lhs_log,
        rhs_log,
        per_bond_min,
        holds,
    })
}

/// Stochastic-domination threshold: a k-dependent Bernoulli field with
/// marginal above 1 − k^k/(k+1)^{k+1} dominates a supercritical product
/// field.
pub fn lss_threshold(k: u64) -> f64 {
    assert!(k >= 1);
    let kf = k as f64;
    1.0 - (kf / (kf + 1.0)).powi(k as i32) / (kf + 1.0)
}

/// Bond openness backend for the oriented percolation engine.
pub trait BondField: Sync {
    fn open(&self, bond: CgBond) -> bool;
}

/// Explicit bond table with a default.
#[derive(Debug, Clone, Default)]
pub struct ExplicitBonds {
    open: HashMap<(u32, i64, i64), bool>,
    default: bool,
}

impl ExplicitBonds {
    pub fn new(default: bool) -> Self {
        Self {
            open: HashMap::new(),
            default,
        }
    }

    pub fn set(&mut self, i: u32, x: i64, y: i64, open: bool) {
        self.open.insert((i, x, y), open);
    }
}

impl BondField for ExplicitBonds {
    fn open(&self, bond: CgBond) -> bool {
        *self
            .open
            .get(&(bond.i, bond.x, bond.y))
            .unwrap_or(&self.default)
    }
}

/// i.i.d. Bernoulli(p) bonds, counter-based in (seed, bond).
#[derive(Debug, Clone, Copy)]
pub struct BernoulliBonds {
    pub seed: u64,
    pub p: f64,
}

impl BondField for BernoulliBonds {
    fn open(&self, bond: CgBond) -> bool {
        let dir = (bond.y - bond.x + 1) / 2;
        let w = rng::site_word(self.seed, bond.i, bond.x * 2 + dir, 4);
        rng::unit_open(w) < self.p
    }
}

/// Environment-driven good bonds, evaluated lazily with a cache.
pub struct GoodBonds<'a, F: DisorderField> {
    field: &'a F,
    law: DisorderLaw,
    geom: CgGeometry,
    eps: f64,
    cache: Mutex<HashMap<CgBond, bool>>,
}

impl<'a, F: DisorderField> GoodBonds<'a, F> {
    pub fn new(field: &'a F, law: DisorderLaw, geom: CgGeometry, eps: f64) -> Result<Self> {
        log_mgf(law, geom.beta)?;
        if eps <= 0.0 {
            return Err(Error::Domain("GoodBonds: eps must be > 0".into()));
        }
        Ok(Self {
            field,
            law,
            geom,
            eps,
            cache: Mutex::new(HashMap::new()),
        })
    }
}

impl<F: DisorderField> BondField for GoodBonds<'_, F> {
    fn open(&self, bond: CgBond) -> bool {
        if let Some(&v) = self.cache.lock().unwrap().get(&bond) {
            return v;
        }
        let v = is_good(self.field, self.law, &self.geom, bond, self.eps)
            .expect("parameters validated at construction");
        self.cache.lock().unwrap().insert(bond, v);
        v
    }
}

/// Leftmost open oriented path from (0,0) to the horizon, if one exists.
///
/// Dynamic program: forward reachability, backward co-reachability, then a
/// lexicographically minimal descent. Returns the spatial index per level.
pub fn oriented_percolation_survive(bonds: &impl BondField, i_max: u32) -> Option<Vec<i64>> {
    let levels = i_max as usize;
    if levels == 0 {
        return Some(vec![0]);
    }
    let idx = |i: usize, x: i64| (x + i as i64) as usize;
    let mut reach: Vec<Vec<bool>> = (0..=levels).map(|i| vec![false; 2 * i + 1]).collect();
    reach[0][0] = true;
    for i in 0..levels {
        for x in -(i as i64)..=i as i64 {
            if !reach[i][idx(i, x)] {
                continue;
            }
            for y in [x - 1, x + 1] {
                let bond = CgBond { i: i as u32, x, y };
                if bond.is_valid() && bonds.open(bond) {
                    reach[i + 1][idx(i + 1, y)] = true;
                }
            }
        }
    }
    if !reach[levels].iter().any(|&v| v) {
        return None;
    }
    let mut co = reach.clone();
    for i in (0..levels).rev() {
        for x in -(i as i64)..=i as i64 {
            if !reach[i][idx(i, x)] {
                co[i][idx(i, x)] = false;
                continue;
            }
            co[i][idx(i, x)] = [x - 1, x + 1].into_iter().any(|y| {
                let bond = CgBond { i: i as u32, x, y };
                bond.is_valid() && bonds.open(bond) && co[i + 1][idx(i + 1, y)]
            });
        }
    }
    debug_assert!(co[0][0]);
    let mut path = Vec::with_capacity(levels + 1);
    path.push(0i64);
    let mut cur = 0i64;
    for i in 0..levels {
        let next = [cur - 1, cur + 1]
            .into_iter()
            .find(|&y| {
                let bond = CgBond {
                    i: i as u32,
                    x: cur,
                    y,
                };
                bond.is_valid() && bonds.open(bond) && co[i + 1][idx(i + 1, y)]
            })
            .expect("co-reachable site must have an open continuation");
        path.push(next);
        cur = next;
    }
    Some(path)
}

/// Fraction of independent Bernoulli bond fields percolating to the horizon.
pub fn bernoulli_survival_frequency(p: f64, horizon: u32, trials: u32, seed: u64) -> f64 {
    let hits: u32 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let bonds = BernoulliBonds {
                seed: rng::child_seed(seed, t as u64),
                p,
            };
            u32::from(oriented_percolation_survive(&bonds, horizon).is_some())
        })
        .sum();
    hits as f64 / trials as f64
}

/// Bisection estimate of the p where survival frequency crosses one half.
/// Monte Carlo oracle for the oriented-bond critical point.
pub fn bernoulli_critical_bisect(horizon: u32, trials: u32, iters: u32, seed: u64) -> f64 {
    let mut lo = 0.5_f64;
    let mut hi = 0.9_f64;
    for it in 0..iters {
        let mid = 0.5 * (lo + hi);
        let f =
            bernoulli_survival_frequency(mid, horizon, trials, rng::child_seed(seed, it as u64));
        if f < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Independence diagnostics for the good-bond field.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DependenceReport {
    pub samples: u32,
    /// Same level, spatial separation beyond 2L/δ: tubes disjoint, so the
    /// indicators must be uncorrelated.
    pub far_separation: i64,
    pub far_tubes_disjoint: bool,
    pub corr_far: f64,
    /// Different levels: tube time ranges disjoint.
    pub levels_tubes_disjoint: bool,
    pub corr_levels: f64,
    /// Adjacent bonds share tube region; correlation reported, not asserted.
    pub corr_adjacent: f64,
    /// 3/√samples, the assertion scale for the null correlations.
    pub corr_tolerance: f64,
}

pub fn dependence_structure_check(
    law: DisorderLaw,
    geom: &CgGeometry,
    eps: f64,
    samples: u32,
    seed: u64,
) -> Result<DependenceReport> {
    log_mgf(law, geom.beta)?;
    // Smallest even spatial separation beyond the independence radius 2L/δ.
    let mut sep = 2 * ((geom.l / geom.delta).ceil() as i64 + 1);
    if sep % 2 != 0 {
        sep += 1;
    }
    let level = sep as u32;
    let far_a = CgBond::new(level, 0, 1)?;
    let far_b = CgBond::new(level, sep, sep + 1)?;
    let lev_a = CgBond::new(0, 0, 1)?;
    let lev_b = CgBond::new(1, 1, 2)?;
    let adj_a = far_a;
    let adj_b = CgBond::new(level, 2, 3)?;

    let (a_lo, a_hi) = geom.tube_space_range(far_a.x);
    let (b_lo, b_hi) = geom.tube_space_range(far_b.x);
    let far_tubes_disjoint = a_hi < b_lo || b_hi < a_lo;
    let (ta, tb) = (geom.tube_time_range(lev_a.i), geom.tube_time_range(lev_b.i));
    let levels_tubes_disjoint = ta.1 <= tb.0 || tb.1 <= ta.0;

    let rows: Vec<[f64; 6]> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let field = EnvironmentField::new(rng::child_seed(seed, i as u64), law);
            let g = |bond| {
                is_good(&field, law, geom, bond, eps).expect("validated parameters") as u8 as f64
            };
            [g(far_a), g(far_b), g(lev_a), g(lev_b), g(adj_a), g(adj_b)]
        })
        .collect();
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    Ok(DependenceReport {
        samples,
        far_separation: sep,
        far_tubes_disjoint,
        corr_far: correlation(&col(0), &col(1)),
        levels_tubes_disjoint,
        corr_levels: correlation(&col(2), &col(3)),
        corr_adjacent: correlation(&col(4), &col(5)),
        corr_tolerance: 3.0 / (samples as f64).sqrt(),
    })
}
