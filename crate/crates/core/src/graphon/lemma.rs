//! Numerical checks of the bounds between codegree distance `δ` and network distance `d`:
//!
//! * `δ(u, v) ≤ d(u, v)` for every graphon;
//! * `d(u, v) ≤ 2 C^{1/(2+4α)} δ(u, v)^{α/(1+2α)}` when every set
//!   `{v : sup_τ |f(u,τ) − f(v,τ)| ≤ ε}` has measure at least `(ε/C)^{1/α}`.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{check_unit, GraphonKind, GraphonOracle, GraphonSpec, QuadratureGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Slack allowed for quadrature error when comparing distances.
pub const LEMMA_TOLERANCE: f64 = 1e-8;
/// Default number of grid points per axis for the Hölder-constant search.
pub const DEFAULT_HOLDER_RESOLUTION: usize = 201;

const ALPHA_CANDIDATES: [f64; 3] = [1.0, 0.5, 0.25];
const EPSILON_STEPS: usize = 50;
const MAX_CERTIFIED_C: f64 = 1e6;
const C_INFLATION: f64 = 1.01;

fn tolerance<T: Real>() -> T {
    T::lit(LEMMA_TOLERANCE).max(T::epsilon() * T::lit(100.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderConstants<T> {
    pub alpha: T,
    pub c: T,
}

impl<T: Real> HolderConstants<T> {
    pub fn new(alpha: T, c: T) -> Result<Self> {
        if alpha > T::zero() && c > T::zero() && alpha.is_finite() && c.is_finite() {
            Ok(Self { alpha, c })
        } else {
            Err(Error::InvalidHolder { alpha: alpha.to_f64_lossy(), c: c.to_f64_lossy() })
        }
    }

    /// Upper bound on network distance implied by a codegree distance.
    pub fn network_distance_bound(&self, codegree_distance: T) -> T {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let scale = self.c.powf(T::one() / (two + four * self.alpha));
        let exponent = self.alpha / (T::one() + two * self.alpha);
        two * scale * codegree_distance.powf(exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum HolderCertificate<T> {
    Certified(HolderConstants<T>),
    NotCertified { reason: String },
}

impl<T: Copy> HolderCertificate<T> {
    pub fn constants(&self) -> Option<HolderConstants<T>> {
        match self {
            HolderCertificate::Certified(h) => Some(*h),
            HolderCertificate::NotCertified { .. } => None,
        }
    }
}

/// Searches for Hölder constants `(α, C)` by brute force on a uniform grid.
///
/// For every grid point `u` and `ε ∈ {1/E, …, 1}` the measure of
/// `{v : sup_τ |f(u,τ) − f(v,τ)| ≤ ε}` is estimated from below by
/// `(#grid points in the set − 1) / (resolution − 1)`. For the largest
/// `α ∈ {1, 1/2, 1/4}` with a finite requirement, the smallest admissible `C`
/// is inflated by 1% and rounded up to a power of two.
///
/// Only continuous variants can be certified from a finite grid; block models
/// are reported as not certified and tabulated grids are unsupported.
pub fn holder_constants<T: Real>(
    spec: &GraphonSpec<T>,
    resolution: usize,
) -> Result<HolderCertificate<T>> {
    match spec.kind() {
        GraphonKind::Grid { .. } => {
            return Err(Error::Unsupported(
                "Hölder constants for tabulated grid graphons (discontinuous interpolation)".into(),
            ))
        }
        GraphonKind::Blockmodel { l, .. } if *l >= 2 => {
            return Ok(HolderCertificate::NotCertified {
                reason: format!(
                    "block model with {l} blocks is discontinuous at block boundaries; \
                     a grid search cannot certify it"
                ),
            })
        }
        _ => {}
    }
    if resolution < 3 {
        return Err(Error::Config(format!("Hölder search resolution {resolution} must be at least 3")));
    }
    let r = resolution;
    let points: Vec<T> = (0..r).map(|k| T::from_count(k) / T::from_count(r - 1)).collect();
    let table: Vec<T> = points
        .iter()
        .flat_map(|&u| points.iter().map(move |&t| (u, t)))
        .map(|(u, t)| spec.eval_unchecked(u, t))
        .collect();
    let row = |a: usize| &table[a * r..(a + 1) * r];
    // sup-distance between link functions of grid points a and b
    let sup_dist: Vec<Vec<T>> = (0..r)
        .into_par_iter()
        .map(|a| {
            (0..r)
                .map(|b| {
                    row(a)
                        .iter()
                        .zip(row(b))
                        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
                })
                .collect()
        })
        .collect();

    let epsilons: Vec<T> =
        (1..=EPSILON_STEPS).map(|j| T::from_count(j) / T::from_count(EPSILON_STEPS)).collect();
    // measures[a][j]: lower estimate of the set measure for point a and epsilon j
    let measures: Vec<Vec<T>> = sup_dist
        .par_iter()
        .map(|dists| {
            epsilons
                .iter()
                .map(|&eps| {
                    let count = dists.iter().filter(|&&s| s <= eps).count();
                    T::from_count(count.saturating_sub(1)) / T::from_count(r - 1)
                })
                .collect()
        })
        .collect();

    for &alpha in &ALPHA_CANDIDATES {
        let alpha = T::lit(alpha);
        let mut c_min = T::zero();
        for row in &measures {
            for (&eps, &m) in epsilons.iter().zip(row) {
                let needed = if m > T::zero() { eps / m.powf(alpha) } else { T::infinity() };
                c_min = c_min.max(needed);
            }
        }
        if c_min.is_finite() && c_min.to_f64_lossy() <= MAX_CERTIFIED_C {
            let inflated = c_min.to_f64_lossy().max(f64::MIN_POSITIVE) * C_INFLATION;
            let c = 2f64.powf(inflated.log2().ceil());
            return Ok(HolderCertificate::Certified(HolderConstants::new(alpha, T::lit(c))?));
        }
    }
    Ok(HolderCertificate::NotCertified {
        reason: "no candidate exponent admits a finite constant on the search grid".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaCheck {
    /// `δ ≤ d`; `bound` is `d`.
    CodegreeBelowNetwork,
    /// `d ≤ 2 C^{1/(2+4α)} δ^{α/(1+2α)}`; `bound` is the right-hand side.
    HolderUpperBound,
}

/// One checked pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCheck<T> {
    pub pair_index: usize,
    pub u: T,
    pub v: T,
    pub delta: T,
    pub d: T,
    pub bound: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport<T> {
    pub check: LemmaCheck,
    pub tolerance: T,
    pub rows: Vec<PairCheck<T>>,
}

impl<T: Real> LemmaReport<T> {
    pub fn violations(&self) -> Vec<&PairCheck<T>> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Checked side over bound (`δ/d` or `d/bound`) for pairs with a positive bound.
    pub fn tightness_ratios(&self) -> Vec<T> {
        self.rows
            .iter()
            .filter(|r| r.bound > T::zero())
            .map(|r| match self.check {
                LemmaCheck::CodegreeBelowNetwork => r.delta / r.bound,
                LemmaCheck::HolderUpperBound => r.d / r.bound,
            })
            .collect()
    }
}

/// Codegree and network distances for every pair, sharing work across repeated points.
fn pair_distances<T: Real>(
    spec: &GraphonSpec<T>,
    pairs: &[(T, T)],
    grid: &QuadratureGrid<T>,
) -> Result<Vec<(T, T)>> {
    for &(u, v) in pairs {
        check_unit("u", u)?;
        check_unit("v", v)?;
    }
    let oracle = GraphonOracle::new(spec, grid);
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut points: Vec<T> = Vec::new();
    let mut key = |x: T| {
        *index.entry(x.to_f64_lossy().to_bits()).or_insert_with(|| {
            points.push(x);
            points.len() - 1
        })
    };
    let pair_ids: Vec<(usize, usize)> = pairs.iter().map(|&(u, v)| (key(u), key(v))).collect();
    let profiles: Vec<(Vec<T>, Vec<T>)> = points
        .par_iter()
        .map(|&x| {
            let link = oracle.link_function(x).expect("checked above");
            let codegree = oracle.codegree_function(x).expect("checked above");
            (link, codegree)
        })
        .collect();
    Ok(pair_ids
        .par_iter()
        .map(|&(a, b)| {
            let (fa, pa) = &profiles[a];
            let (fb, pb) = &profiles[b];
            (grid.l2_distance(pa, pb), grid.l2_distance(fa, fb))
        })
        .collect())
}

/// Checks `δ(u, v) ≤ d(u, v) + tolerance` for every pair.
pub fn verify_lemma1<T: Real>(
    spec: &GraphonSpec<T>,
    pairs: &[(T, T)],
    grid: &QuadratureGrid<T>,
) -> Result<LemmaReport<T>> {
    let tol = tolerance::<T>();
    let rows = pair_distances(spec, pairs, grid)?
        .into_iter()
        .zip(pairs)
        .enumerate()
        .map(|(pair_index, ((delta, d), &(u, v)))| PairCheck {
            pair_index,
            u,
            v,
            delta,
            d,
            bound: d,
            pass: delta <= d + tol,
        })
        .collect();
    Ok(LemmaReport { check: LemmaCheck::CodegreeBelowNetwork, tolerance: tol, rows })
}

/// Checks `d(u, v) ≤ 2 C^{1/(2+4α)} δ(u, v)^{α/(1+2α)} + tolerance` for every pair.
pub fn verify_lemma_a1<T: Real>(
    spec: &GraphonSpec<T>,
    holder: HolderConstants<T>,
    pairs: &[(T, T)],
    grid: &QuadratureGrid<T>,
) -> Result<LemmaReport<T>> {
    let tol = tolerance::<T>();
    let holder = HolderConstants::new(holder.alpha, holder.c)?;
    let rows = pair_distances(spec, pairs, grid)?
        .into_iter()
        .zip(pairs)
        .enumerate()
        .map(|(pair_index, ((delta, d), &(u, v)))| {
            let bound = holder.network_distance_bound(delta);
            PairCheck { pair_index, u, v, delta, d, bound, pass: d <= bound + tol }
        })
        .collect();
    Ok(LemmaReport { check: LemmaCheck::HolderUpperBound, tolerance: tol, rows })
}

/// Writes `pair_index,u,v,delta,d,bound,pass` rows.
pub fn write_report_csv<T: Real, W: Write>(report: &LemmaReport<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair_index", "u", "v", "delta", "d", "bound", "pass"])?;
    for r in &report.rows {
        w.write_record([
            r.pair_index.to_string(),
            r.u.to_string(),
            r.v.to_string(),
            format!("{:e}", r.delta.to_f64_lossy()),
            format!("{:e}", r.d.to_f64_lossy()),
            format!("{:e}", r.bound.to_f64_lossy()),
            r.pass.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect()
    }

    fn coarse() -> QuadratureGrid<f64> {
        QuadratureGrid::gauss_legendre(16, 8).unwrap()
    }

    #[test]
    fn constant_graphon_pairs_are_zero_and_pass() {
        let g = GraphonSpec::blockmodel(vec![vec![0.4]]).unwrap();
        let report = verify_lemma1(&g, &[(0.1, 0.9), (0.0, 1.0)], &coarse()).unwrap();
        for row in &report.rows {
            assert_eq!((row.delta, row.d, row.pass), (0.0, 0.0, true));
        }
    }

    #[test]
    fn homophily_extreme_pair_respects_lemma1() {
        let report =
            verify_lemma1(&GraphonSpec::homophily(), &[(0.0, 1.0)], &QuadratureGrid::default())
                .unwrap();
        let row = report.rows[0];
        assert!(row.pass);
        assert!(row.delta <= 1.0 / 3f64.sqrt());
        assert!((row.d - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn random_pairs_never_violate_lemma1() {
        let pairs = random_pairs(1000, 11);
        let specs = [
            GraphonSpec::homophily(),
            GraphonSpec::additive_logistic(),
            GraphonSpec::blockmodel(vec![vec![0.8, 0.2], vec![0.2, 0.6]]).unwrap(),
            GraphonSpec::grid(3, vec![0.9, 0.1, 0.4, 0.1, 0.7, 0.2, 0.4, 0.2, 0.5]).unwrap(),
        ];
        for spec in &specs {
            let report = verify_lemma1(spec, &pairs, &coarse()).unwrap();
            assert!(report.passed(), "{}", spec.name());
            assert!(report.tightness_ratios().iter().all(|&r| r <= 1.0 + 1e-8));
        }
    }

    #[test]
    fn homophily_certifies_alpha_one_c_four() {
        let cert = holder_constants(&GraphonSpec::<f64>::homophily(), DEFAULT_HOLDER_RESOLUTION)
            .unwrap();
        assert_eq!(cert, HolderCertificate::Certified(HolderConstants { alpha: 1.0, c: 4.0 }));
    }

    #[test]
    fn logistic_certifies_alpha_one() {
        let cert =
            holder_constants(&GraphonSpec::<f64>::additive_logistic(), DEFAULT_HOLDER_RESOLUTION)
                .unwrap();
        let h = cert.constants().expect("certified");
        assert_eq!(h.alpha, 1.0);
        assert!(h.c.is_finite() && h.c > 0.0);
    }

    #[test]
    fn blockmodel_and_grid_are_not_certified() {
        let b = GraphonSpec::<f64>::blockmodel(vec![vec![0.8, 0.2], vec![0.2, 0.6]]).unwrap();
        assert!(matches!(holder_constants(&b, 51).unwrap(), HolderCertificate::NotCertified { .. }));
        let g = GraphonSpec::<f64>::grid(1, vec![0.5]).unwrap();
        assert!(matches!(holder_constants(&g, 51), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_codegree_distance_requires_zero_network_distance() {
        let h = HolderConstants::new(1.0, 4.0).unwrap();
        assert_eq!(h.network_distance_bound(0.0), 0.0);
        let g = GraphonSpec::blockmodel(vec![vec![0.4]]).unwrap();
        let report = verify_lemma_a1(&g, h, &[(0.2, 0.8)], &coarse()).unwrap();
        assert!(report.rows[0].pass);
        assert_eq!(report.rows[0].bound, 0.0);
    }

    #[test]
    fn holder_bound_holds_on_random_pairs() {
        let pairs = random_pairs(1000, 5);
        let h = HolderConstants::new(1.0, 4.0).unwrap();
        let report = verify_lemma_a1(&GraphonSpec::homophily(), h, &pairs, &coarse()).unwrap();
        assert!(report.passed());
        let h = holder_constants(&GraphonSpec::additive_logistic(), 101).unwrap().constants().unwrap();
        let report = verify_lemma_a1(&GraphonSpec::additive_logistic(), h, &pairs, &coarse()).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn holder_bound_matches_closed_form() {
        // α = C = 1: d ≤ 2 δ^{1/3}
        let h = HolderConstants::new(1.0f64, 1.0).unwrap();
        assert!((h.network_distance_bound(0.125) - 1.0).abs() < 1e-15);
        assert!(HolderConstants::new(0.0, 1.0).is_err());
        assert!(HolderConstants::new(1.0, -1.0).is_err());
    }

    #[test]
    fn violations_are_reported_as_data() {
        // constants far too small for homophily
        let h = HolderConstants::new(1.0, 1e-9).unwrap();
        let report =
            verify_lemma_a1(&GraphonSpec::homophily(), h, &[(0.0, 1.0), (0.3, 0.3)], &coarse()).unwrap();
        assert_eq!(report.violations().len(), 1);
        assert_eq!(report.violations()[0].pair_index, 0);
    }

    #[test]
    fn out_of_range_pairs_are_rejected() {
        assert!(verify_lemma1(&GraphonSpec::homophily(), &[(0.0, 1.5)], &coarse()).is_err());
    }

    #[test]
    fn csv_report_layout() {
        let report = verify_lemma1(&GraphonSpec::homophily(), &[(0.25, 0.5)], &coarse()).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "pair_index,u,v,delta,d,bound,pass");
        assert!(lines.next().unwrap().starts_with("0,0.25,0.5,"));
    }
}
