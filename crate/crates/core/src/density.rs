//! Induced densities and distribution tables, exact and Monte Carlo.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exec;
use crate::peon::chamber::{approx, chamber_denominator, chamber_total, for_each_chamber, to_volume};
use crate::peon::{ChamberLayout, DependencyMask, Slot, Theon};
use crate::sampler::{realize_code, sample_histogram, PartialPoint};
use crate::space::{factorial, Point, VertexSet};
use crate::stats::{chi_square_gof, chi_square_independence, wilson, z_for};
use crate::symbols::{automorphism_count, enumerate_structures, Language, Structure, StructureCode, TupleIndex};

/// Confidence level of reported intervals.
pub const CONFIDENCE: f64 = 0.99;

/// Which engine computes a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Exact when every peon is chamber-grid and within the caps, else Monte Carlo.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Backend::Auto),
            "exact" => Ok(Backend::Exact),
            "mc" | "monte-carlo" => Ok(Backend::MonteCarlo),
            _ => Err(Error::InvalidArgument(format!("backend must be auto, exact or mc, got `{s}`"))),
        }
    }
}

/// Limits of the exact engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    pub max_vertices: usize,
    pub max_chambers: u64,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits { max_vertices: 4, max_chambers: 1 << 28 }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings { samples: 100_000, seed: 0 }
    }
}

/// A density value with its uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub estimate: f64,
    pub samples: u64,
    /// Half-width of the 99% interval; zero when exact.
    pub half_width: f64,
    pub ci: (f64, f64),
    pub exact: Option<BigRational>,
}

impl DensityEstimate {
    pub fn exact(value: BigRational) -> Self {
        let f = approx(&value);
        DensityEstimate { estimate: f, samples: 0, half_width: 0.0, ci: (f, f), exact: Some(value) }
    }

    pub fn from_counts(count: u64, samples: u64) -> Self {
        let (lo, hi) = wilson(count, samples, z_for(CONFIDENCE));
        let estimate = if samples == 0 { 0.0 } else { count as f64 / samples as f64 };
        DensityEstimate { estimate, samples, half_width: (hi - lo) / 2.0, ci: (lo, hi), exact: None }
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Multiplies by a nonnegative constant, clamping to `[0,1]`.
    fn scaled(mut self, factor: &BigRational) -> Self {
        let f = approx(factor);
        if let Some(e) = &self.exact {
            let v = e * factor;
            return DensityEstimate::exact(v);
        }
        self.estimate = (self.estimate * f).min(1.0);
        self.ci = ((self.ci.0 * f).min(1.0), (self.ci.1 * f).min(1.0));
        self.half_width *= f;
        self
    }
}

impl fmt::Display for DensityEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) => write!(f, "{r}"),
            None => write!(f, "{:.6} ± {:.6}", self.estimate, self.half_width),
        }
    }
}

/// Probability of one structure in a table.
#[derive(Debug, Clone, PartialEq)]
pub enum Mass {
    Exact(BigRational),
    Estimated { count: u64, samples: u64 },
}

impl Mass {
    pub fn value(&self) -> f64 {
        match self {
            Mass::Exact(r) => approx(r),
            Mass::Estimated { count, samples } => *count as f64 / *samples as f64,
        }
    }

    pub fn estimate(&self) -> DensityEstimate {
        match self {
            Mass::Exact(r) => DensityEstimate::exact(r.clone()),
            Mass::Estimated { count, samples } => DensityEstimate::from_counts(*count, *samples),
        }
    }
}

/// The distribution a theon induces on structures over a vertex set.
/// Structures of mass zero are omitted from `entries`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    pub language: Language,
    pub vertices: VertexSet,
    pub index: TupleIndex,
    pub entries: BTreeMap<StructureCode, Mass>,
    /// Sample count for Monte Carlo tables.
    pub samples: Option<u64>,
}

impl DistributionTable {
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_exact(&self) -> bool {
        self.samples.is_none()
    }

    pub fn mass_of_code(&self, code: &StructureCode) -> Mass {
        match (self.entries.get(code), self.samples) {
            (Some(m), _) => m.clone(),
            (None, Some(samples)) => Mass::Estimated { count: 0, samples },
            (None, None) => Mass::Exact(BigRational::zero()),
        }
    }

    pub fn mass(&self, k: &Structure) -> Result<Mass> {
        self.check(k)?;
        Ok(self.mass_of_code(&k.code(&self.index)))
    }

    pub fn probability(&self, k: &Structure) -> Result<f64> {
        Ok(self.mass(k)?.value())
    }

    fn check(&self, k: &Structure) -> Result<()> {
        if k.language() != &self.language {
            return Err(Error::LanguageMismatch("structure and table languages differ".into()));
        }
        if k.vertices() != &self.vertices {
            return Err(Error::VertexMismatch("structure and table vertex sets differ".into()));
        }
        Ok(())
    }

    /// Exact total mass, if exact.
    pub fn total_exact(&self) -> Option<BigRational> {
        let mut s = BigRational::zero();
        for m in self.entries.values() {
            match m {
                Mass::Exact(r) => s += r,
                Mass::Estimated { .. } => return None,
            }
        }
        Some(s)
    }

    /// Structures with positive mass, in code order.
    pub fn support(&self) -> impl Iterator<Item = (Structure, &Mass)> + '_ {
        self.entries.iter().map(|(c, m)| (Structure::from_code(&self.language, &self.vertices, &self.index, c), m))
    }

    /// Every structure on the vertex set with its mass, zeros included.
    pub fn full(&self, cap: u64) -> Result<Vec<(Structure, Mass)>> {
        let all = enumerate_structures(&self.language, &self.vertices, cap)?;
        Ok(all
            .into_iter()
            .map(|k| {
                let m = self.mass_of_code(&k.code(&self.index));
                (k, m)
            })
            .collect())
    }
}

/// The joint dependency mask of all tuple evaluations of `n` over `[size]`.
pub fn joint_mask(n: &Theon, size: usize) -> DependencyMask {
    let index = TupleIndex::new(n.language(), size);
    let mut mask = DependencyMask::empty(size, n.descriptor());
    for (pi, t) in index.entries() {
        mask = mask.union(&n.peons()[*pi].mask().pushforward(t, size));
    }
    mask
}

/// Size of an exact enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCost {
    pub vertices: usize,
    pub weight_slots: usize,
    pub order_slots: usize,
    /// Number of joint chambers, saturating at `u128::MAX`.
    pub chambers: u128,
}

impl fmt::Display for ExactCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} joint chambers over {} weight and {} order coordinates on {} vertices",
            self.chambers, self.weight_slots, self.order_slots, self.vertices
        )
    }
}

fn free_layout(n: &Theon, size: usize, pinned: Option<&PartialPoint>) -> Result<ChamberLayout> {
    let grid = n
        .grid()
        .ok_or_else(|| Error::NotChamberGrid(format!("theon `{}` has a peon without a chamber grid", n.name())))?;
    let mask = joint_mask(n, size);
    let is_pinned = |s: u64| pinned.is_some_and(|p| p.get(s).is_some());
    let weights: Vec<(u64, usize)> = mask.weight_slots().into_iter().filter(|&(s, _)| !is_pinned(s)).collect();
    let orders: Vec<(u64, usize)> = mask.order_slots().into_iter().filter(|&(s, _)| !is_pinned(s)).collect();
    let layout = ChamberLayout::new(&grid, &weights, &orders)?;
    if let Some(p) = pinned {
        for lv in layout.levels.iter().filter(|l| l.level.ranked) {
            let shares = mask.slots().iter().any(|slot| {
                matches!(*slot, Slot::Weight(s, c)
                    if c == lv.component && s.count_ones() as usize == lv.level.size && p.get(s).is_some())
            });
            if shares {
                return Err(Error::InvalidArgument(format!(
                    "component {} at size {} is ranked and only partly pinned",
                    lv.component, lv.level.size
                )));
            }
        }
    }
    Ok(layout)
}

/// Cost of the exact enumeration over `size` vertices.
pub fn exact_cost(n: &Theon, size: usize, pinned: Option<&PartialPoint>) -> Result<ExactCost> {
    let layout = free_layout(n, size, pinned)?;
    Ok(ExactCost {
        vertices: size,
        weight_slots: layout.levels.iter().map(|l| l.slots.len()).sum(),
        order_slots: layout.orders.len(),
        chambers: layout.chamber_count(),
    })
}

/// Whether the exact engine accepts `n` over `size` vertices within `limits`.
pub fn exact_feasible(n: &Theon, size: usize, limits: &ExactLimits) -> bool {
    size <= limits.max_vertices && exact_cost(n, size, None).is_ok_and(|c| c.chambers <= limits.max_chambers as u128)
}

/// Exact distribution of the structure realized over `v`, optionally with
/// some coordinates pinned. Sums volumes of joint chambers of every
/// coordinate the realization reads.
pub fn exact_distribution(
    n: &Theon,
    v: &VertexSet,
    pinned: Option<&PartialPoint>,
    limits: &ExactLimits,
) -> Result<DistributionTable> {
    let size = v.len();
    if size > limits.max_vertices {
        return Err(Error::CapExceeded(format!(
            "exact engine is capped at {} vertices, got {size}",
            limits.max_vertices
        )));
    }
    if let Some(p) = pinned {
        if p.vertices() != v || p.descriptor() != n.descriptor() {
            return Err(Error::VertexMismatch("pinned point does not match the theon and vertex set".into()));
        }
    }
    let layout = free_layout(n, size, pinned)?;
    let cost = exact_cost(n, size, pinned)?;
    log::info!("exact engine: {cost}");
    if cost.chambers > limits.max_chambers as u128 {
        return Err(Error::CapExceeded(format!("{cost} exceed the cap of {}", limits.max_chambers)));
    }
    let factors = layout.factors()?;
    let total = chamber_total(&factors).ok_or_else(|| Error::CapExceeded("chamber count overflows".into()))?;
    let mut base = Point::zeros(size, Some(n.language().max_arity()), n.descriptor())?;
    if let Some(p) = pinned {
        for (&s, c) in p.pinned() {
            if (s.count_ones() as usize) <= n.language().max_arity() {
                base.set(s, c.clone());
            }
        }
    }
    let index = TupleIndex::new(n.language(), size);
    let chunk = (total / 256).max(1024);
    let den = chamber_denominator(&factors);
    if den.bits() > 127 {
        return Err(Error::CapExceeded("chamber volumes need more than 127 bits".into()));
    }
    let parts = exec::map_chunks(total, chunk, |range| {
        // numerators sum to at most the denominator, so u128 cannot overflow
        let mut acc: HashMap<StructureCode, u128> = HashMap::new();
        for_each_chamber(&layout, &factors, &base, range, |x, num| {
            *acc.entry(realize_code(n, x, &index)).or_default() += num;
        });
        acc
    });
    let mut sums: BTreeMap<StructureCode, u128> = BTreeMap::new();
    for part in parts {
        for (c, k) in part {
            *sums.entry(c).or_default() += k;
        }
    }
    let entries = sums
        .into_iter()
        .filter(|(_, k)| !k.is_zero())
        .map(|(c, k)| (c, Mass::Exact(to_volume(&BigUint::from(k), &den))))
        .collect();
    Ok(DistributionTable { language: n.language().clone(), vertices: v.clone(), index, entries, samples: None })
}

/// Monte Carlo distribution over `v`.
pub fn mc_distribution(
    n: &Theon,
    v: &VertexSet,
    pinned: Option<&PartialPoint>,
    mc: &McSettings,
) -> Result<DistributionTable> {
    if mc.samples == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let (index, counts) = sample_histogram(n, v, pinned, mc.samples, mc.seed)?;
    let entries = counts.into_iter().map(|(c, count)| (c, Mass::Estimated { count, samples: mc.samples })).collect();
    Ok(DistributionTable {
        language: n.language().clone(),
        vertices: v.clone(),
        index,
        entries,
        samples: Some(mc.samples),
    })
}

/// `μ^N` on `[size]` (labels `1..=size`) with the chosen backend.
pub fn distribution_on(
    n: &Theon,
    size: usize,
    backend: Backend,
    limits: &ExactLimits,
    mc: &McSettings,
) -> Result<DistributionTable> {
    distribution_over(n, &VertexSet::range(size), backend, limits, mc)
}

/// `μ^N_V` with the chosen backend.
pub fn distribution_over(
    n: &Theon,
    v: &VertexSet,
    backend: Backend,
    limits: &ExactLimits,
    mc: &McSettings,
) -> Result<DistributionTable> {
    match backend {
        Backend::Exact => exact_distribution(n, v, None, limits),
        Backend::MonteCarlo => mc_distribution(n, v, None, mc),
        Backend::Auto if exact_feasible(n, v.len(), limits) => exact_distribution(n, v, None, limits),
        Backend::Auto => mc_distribution(n, v, None, mc),
    }
}

fn check_language(n: &Theon, k: &Structure) -> Result<()> {
    if k.language() != n.language() {
        return Err(Error::LanguageMismatch(format!(
            "structure over {:?}, theon over {:?}",
            k.language().predicates(),
            n.language().predicates()
        )));
    }
    Ok(())
}

/// `t_ind(K, N)` exactly.
pub fn t_ind_exact(n: &Theon, k: &Structure) -> Result<BigRational> {
    t_ind_exact_with(n, k, &ExactLimits::default())
}

pub fn t_ind_exact_with(n: &Theon, k: &Structure, limits: &ExactLimits) -> Result<BigRational> {
    check_language(n, k)?;
    match exact_distribution(n, k.vertices(), None, limits)?.mass(k)? {
        Mass::Exact(r) => Ok(r),
        Mass::Estimated { .. } => unreachable!("exact table"),
    }
}

/// `t_ind(K, N)` estimated from `samples` realizations.
pub fn t_ind_mc(n: &Theon, k: &Structure, samples: u64, seed: u64) -> Result<DensityEstimate> {
    check_language(n, k)?;
    let table = mc_distribution(n, k.vertices(), None, &McSettings { samples, seed })?;
    Ok(table.mass(k)?.estimate())
}

/// `t_ind(K, N)` with the chosen backend.
pub fn t_ind(
    n: &Theon,
    k: &Structure,
    backend: Backend,
    limits: &ExactLimits,
    mc: &McSettings,
) -> Result<DensityEstimate> {
    check_language(n, k)?;
    let table = distribution_over(n, k.vertices(), backend, limits, mc)?;
    Ok(table.mass(k)?.estimate())
}

/// `φ_N(K) = |K|!/|Aut(K)| · t_ind(K, N)`.
pub fn phi(
    n: &Theon,
    k: &Structure,
    backend: Backend,
    limits: &ExactLimits,
    mc: &McSettings,
) -> Result<DensityEstimate> {
    let t = t_ind(n, k, backend, limits, mc)?;
    let factor = BigRational::new(BigInt::from(factorial(k.vertices().len())), BigInt::from(automorphism_count(k)?));
    Ok(t.scaled(&factor))
}

/// How two distributions were compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Exact,
    GoodnessOfFit,
    TwoSample,
}

/// Outcome of an equivalence test.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub comparison: Comparison,
    /// Total-variation distance between the two tables (estimated unless exact).
    pub tv: f64,
    pub tv_exact: Option<BigRational>,
    pub p_value: Option<f64>,
    /// Structure with the largest mass discrepancy, with both masses.
    pub witness: Option<(Structure, f64, f64)>,
}

/// Renames `n2` positionally onto `n1`'s symbols when their arities agree.
pub fn align_language(n1: &Theon, n2: &Theon) -> Result<Theon> {
    if n1.language() == n2.language() {
        return Ok(n2.clone());
    }
    let (p1, p2) = (n1.language().predicates(), n2.language().predicates());
    if p1.len() != p2.len() || p1.iter().zip(p2).any(|(a, b)| a.arity != b.arity) {
        return Err(Error::LanguageMismatch(format!(
            "theons `{}` and `{}` have different languages",
            n1.name(),
            n2.name()
        )));
    }
    let map: BTreeMap<String, String> = p2.iter().zip(p1).map(|(b, a)| (b.name.clone(), a.name.clone())).collect();
    let renamed = n2.rename(&map)?;
    if renamed.language() != n1.language() {
        return Err(Error::LanguageMismatch("positional renaming does not align the languages".into()));
    }
    Ok(renamed)
}

/// Compares `μ^{N1}` and `μ^{N2}` on `[size]`.
pub fn equivalence_test(
    n1: &Theon,
    n2: &Theon,
    size: usize,
    backend: Backend,
    limits: &ExactLimits,
    mc: &McSettings,
    significance: f64,
) -> Result<EquivalenceVerdict> {
    let n2 = align_language(n1, n2)?;
    let t1 = distribution_on(n1, size, backend, limits, mc)?;
    let mc2 = McSettings { seed: crate::rng::derive_seed(mc.seed, 1), ..*mc };
    let t2 = distribution_on(&n2, size, backend, limits, &mc2)?;
    compare_tables(&t1, &t2, significance)
}

/// Compares two tables over the same language and vertex set.
pub fn compare_tables(t1: &DistributionTable, t2: &DistributionTable, significance: f64) -> Result<EquivalenceVerdict> {
    if t1.language != t2.language || t1.vertices != t2.vertices {
        return Err(Error::LanguageMismatch("tables are over different languages or vertex sets".into()));
    }
    let codes: Vec<&StructureCode> = {
        let mut c: Vec<_> = t1.entries.keys().chain(t2.entries.keys()).collect();
        c.sort();
        c.dedup();
        c
    };
    let mut witness: Option<(&StructureCode, f64, f64)> = None;
    let mut tv = 0.0;
    for &c in &codes {
        let (a, b) = (t1.mass_of_code(c).value(), t2.mass_of_code(c).value());
        tv += (a - b).abs() / 2.0;
        if witness.is_none_or(|(_, x, y)| (a - b).abs() > (x - y).abs()) {
            witness = Some((c, a, b));
        }
    }
    let witness = witness.map(|(c, a, b)| (Structure::from_code(&t1.language, &t1.vertices, &t1.index, c), a, b));
    let verdict = match (t1.is_exact(), t2.is_exact()) {
        (true, true) => {
            let mut d = BigRational::zero();
            for &c in &codes {
                let (Mass::Exact(a), Mass::Exact(b)) = (t1.mass_of_code(c), t2.mass_of_code(c)) else {
                    unreachable!("exact tables")
                };
                d += if a > b { a - b } else { b - a };
            }
            let d = d / BigRational::from_integer(2.into());
            EquivalenceVerdict {
                equivalent: d.is_zero(),
                comparison: Comparison::Exact,
                tv: approx(&d),
                tv_exact: Some(d),
                p_value: None,
                witness,
            }
        }
        (false, false) => {
            let table: Vec<Vec<u64>> =
                [t1, t2].iter().map(|t| codes.iter().map(|c| count_of(t, c)).collect()).collect();
            let r = chi_square_independence(&table);
            EquivalenceVerdict {
                equivalent: r.p_value >= significance,
                comparison: Comparison::TwoSample,
                tv,
                tv_exact: None,
                p_value: Some(r.p_value),
                witness,
            }
        }
        (e1, _) => {
            let (exact, sampled) = if e1 { (t1, t2) } else { (t2, t1) };
            let observed: Vec<u64> = codes.iter().map(|c| count_of(sampled, c)).collect();
            let expected: Vec<f64> = codes.iter().map(|c| exact.mass_of_code(c).value()).collect();
            let r = chi_square_gof(&observed, &expected);
            EquivalenceVerdict {
                equivalent: r.p_value >= significance,
                comparison: Comparison::GoodnessOfFit,
                tv,
                tv_exact: None,
                p_value: Some(r.p_value),
                witness,
            }
        }
    };
    Ok(verdict)
}

fn count_of(t: &DistributionTable, c: &StructureCode) -> u64 {
    match t.entries.get(c) {
        Some(Mass::Estimated { count, .. }) => *count,
        _ => 0,
    }
}

/// Sum of exact masses over structures isomorphic to `k`.
pub fn isomorphism_class_mass(table: &DistributionTable, k: &Structure) -> Result<BigRational> {
    let mut total = BigRational::zero();
    let mut seen = std::collections::BTreeSet::new();
    for perm in crate::space::all_perms(k.vertices().len())? {
        let alpha = crate::space::Injection::new(
            k.vertices().clone(),
            k.vertices().clone(),
            perm.as_slice().iter().map(|&p| p as usize).collect(),
        )?;
        let relabeled = crate::symbols::pullback_structure(&alpha, k)?;
        let code = relabeled.code(&table.index);
        if seen.insert(code.clone()) {
            match table.mass_of_code(&code) {
                Mass::Exact(r) => total += r,
                Mass::Estimated { .. } => return Err(Error::InvalidArgument("table is not exact".into())),
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peon::{gallery, GalleryParams, GALLERY};
    use crate::symbols::enumerate_structures;

    fn g(name: &str, k: Option<usize>) -> Theon {
        gallery(name, &GalleryParams { k, ..Default::default() }).unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> Structure {
        let lang = Language::new([("E", 2)]).unwrap();
        let mut k = Structure::empty(lang, VertexSet::range(n));
        for &(a, b) in edges {
            k.insert(0, vec![a, b]).unwrap();
            k.insert(0, vec![b, a]).unwrap();
        }
        k
    }

    #[test]
    fn qr_tables() {
        let qr = g("qr_graph", None);
        let t = exact_distribution(&qr, &VertexSet::range(2), None, &ExactLimits::default()).unwrap();
        assert_eq!(t.entries.len(), 2);
        assert!(t.entries.values().all(|m| *m == Mass::Exact(q(1, 2))));
        let t3 = exact_distribution(&qr, &VertexSet::range(3), None, &ExactLimits::default()).unwrap();
        assert_eq!(t3.entries.len(), 8);
        assert!(t3.entries.values().all(|m| *m == Mass::Exact(q(1, 8))));
        assert_eq!(t_ind_exact(&qr, &graph(3, &[(0, 1), (1, 2), (0, 2)])).unwrap(), q(1, 8));
    }

    #[test]
    fn orientation_tables() {
        let t = distribution_on(
            &g("kqrO_1theon", Some(2)),
            3,
            Backend::Exact,
            &ExactLimits::default(),
            &McSettings::default(),
        )
        .unwrap();
        assert_eq!(t.entries.len(), 8);
        assert!(t.entries.values().all(|m| *m == Mass::Exact(q(1, 8))));
        let t = distribution_on(
            &g("kqrO_0theon", Some(2)),
            2,
            Backend::Exact,
            &ExactLimits::default(),
            &McSettings::default(),
        )
        .unwrap();
        assert_eq!(t.entries.len(), 2);
        assert!(t.entries.values().all(|m| *m == Mass::Exact(q(1, 2))));
        let t = distribution_on(
            &g("kqrO_1theon", Some(3)),
            3,
            Backend::Exact,
            &ExactLimits::default(),
            &McSettings::default(),
        )
        .unwrap();
        assert_eq!(t.entries.len(), 6);
        assert!(t.entries.values().all(|m| *m == Mass::Exact(q(1, 6))));
    }

    #[test]
    fn disc_places_half() {
        let t = distribution_on(
            &g("disc_3hypergraph", None),
            3,
            Backend::Exact,
            &ExactLimits::default(),
            &McSettings::default(),
        )
        .unwrap();
        assert_eq!(t.entries.len(), 2);
        assert!(t.entries.values().all(|m| *m == Mass::Exact(q(1, 2))));
    }

    #[test]
    fn phi_scales_by_labelings() {
        let qr = g("qr_graph", None);
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let p = phi(&qr, &tri, Backend::Exact, &ExactLimits::default(), &McSettings::default()).unwrap();
        assert_eq!(p.exact, Some(q(1, 8)));
        let path = graph(3, &[(0, 1), (1, 2)]);
        let relabeled = graph(3, &[(0, 2), (1, 2)]);
        let a = phi(&qr, &path, Backend::Exact, &ExactLimits::default(), &McSettings::default()).unwrap();
        let b = phi(&qr, &relabeled, Backend::Exact, &ExactLimits::default(), &McSettings::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.exact, Some(q(3, 8)));
        let t = exact_distribution(&qr, &VertexSet::range(3), None, &ExactLimits::default()).unwrap();
        assert_eq!(isomorphism_class_mass(&t, &path).unwrap(), q(3, 8));
        let one = graph(1, &[]);
        assert_eq!(
            phi(&qr, &one, Backend::Exact, &ExactLimits::default(), &McSettings::default()).unwrap().exact,
            Some(q(1, 1))
        );
    }

    #[test]
    fn exact_tables_sum_to_one() {
        for e in GALLERY.iter().filter(|e| e.exact) {
            let n = g(e.name, e.default_k);
            for size in 1..=3 {
                let t = exact_distribution(&n, &VertexSet::range(size), None, &ExactLimits::default()).unwrap();
                assert_eq!(t.total_exact(), Some(q(1, 1)), "{} on {size}", e.name);
            }
        }
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let qr = g("qr_graph", None);
        let edge = graph(2, &[(0, 1)]);
        let est = t_ind_mc(&qr, &edge, 100_000, 1).unwrap();
        assert!((est.estimate - 0.5).abs() < est.half_width * 3.0);
        let tw = g("twist_graph", None);
        let est = t_ind_mc(&tw, &edge, 100_000, 2).unwrap();
        assert!((est.estimate - 0.5).abs() < est.half_width * 3.0);
        let bp = g("bipartite_graph", None);
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(t_ind_mc(&bp, &tri, 20_000, 3).unwrap().estimate, 0.0);
    }

    #[test]
    fn equivalence_verdicts() {
        let limits = ExactLimits::default();
        let mc = McSettings { samples: 100_000, seed: 4 };
        let qr = g("qr_graph", None);
        let v = equivalence_test(&qr, &g("twist_graph", None), 3, Backend::Auto, &limits, &mc, 0.001).unwrap();
        assert!(v.equivalent && v.tv < 0.02, "{v:?}");
        assert_eq!(v.comparison, Comparison::GoodnessOfFit);
        let v = equivalence_test(&qr, &g("bipartite_graph", None), 3, Backend::Auto, &limits, &mc, 0.001).unwrap();
        assert!(!v.equivalent);
        // bipartite: empty graph 1/4, each of the three paths 1/4
        assert_eq!(v.tv_exact, Some(q(1, 2)));
        let v = equivalence_test(&qr, &g("twist_graph", None), 3, Backend::MonteCarlo, &limits, &mc, 0.001).unwrap();
        assert_eq!(v.comparison, Comparison::TwoSample);
        assert!(v.equivalent);
    }

    #[test]
    fn renaming_aligns_languages() {
        let qr = g("qr_graph", None);
        let map = BTreeMap::from([("E".to_string(), "F".to_string())]);
        let renamed = qr.rename(&map).unwrap();
        let v =
            equivalence_test(&qr, &renamed, 3, Backend::Exact, &ExactLimits::default(), &McSettings::default(), 0.01)
                .unwrap();
        assert!(v.equivalent);
        assert!(align_language(&qr, &g("kqrO_1theon", Some(3))).is_err());
    }

    #[test]
    fn weight_only_and_order_tournaments_agree() {
        let a = g("qr_tournament_0", None);
        let b = g("kqrO_1theon", Some(2));
        for n in [3, 4] {
            let v = equivalence_test(&a, &b, n, Backend::Exact, &ExactLimits::default(), &McSettings::default(), 0.01)
                .unwrap();
            assert!(v.equivalent, "n = {n}");
        }
    }

    #[test]
    fn exchangeable_under_relabeling() {
        for name in ["qr_tournament_0", "cycle_3hypergraph", "disc_3hypergraph"] {
            let n = g(name, None);
            let v = VertexSet::range(3);
            let t = exact_distribution(&n, &v, None, &ExactLimits::default()).unwrap();
            for k in enumerate_structures(n.language(), &v, 1 << 12).unwrap() {
                let m = t.mass(&k).unwrap();
                for perm in crate::space::all_perms(3).unwrap() {
                    let map = perm.as_slice().iter().map(|&p| p as usize).collect();
                    let alpha = crate::space::Injection::new(v.clone(), v.clone(), map).unwrap();
                    let moved = crate::symbols::pullback_structure(&alpha, &k).unwrap();
                    assert_eq!(t.mass(&moved).unwrap(), m, "{name}");
                }
            }
        }
    }

    #[test]
    fn caps_and_errors() {
        let qr = g("qr_graph", None);
        assert!(matches!(
            exact_distribution(&qr, &VertexSet::range(5), None, &ExactLimits::default()),
            Err(Error::CapExceeded(_))
        ));
        assert!(matches!(
            exact_distribution(&g("twist_graph", None), &VertexSet::range(2), None, &ExactLimits::default()),
            Err(Error::NotChamberGrid(_))
        ));
        let cost = exact_cost(&qr, 4, None).unwrap();
        assert_eq!(cost.chambers, 64);
        assert_eq!(cost.weight_slots, 6);
    }
}
