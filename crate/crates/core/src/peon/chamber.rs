//! Chamber grids: the finite partitions of coordinate space on which
//! chamber-grid peons are constant.
//!
//! Weights of one component and one subset size form a *level* with a grid
//! resolution `m`. A chamber fixes the grid cell of every weight slot of the
//! level and, for ranked levels, the order of the slots sharing a cell. Order
//! slots contribute their whole order. Chambers of independent levels combine
//! by product.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{all_perms, factorial, Perm, Point};

/// `⌊t·m⌋` computed exactly for `t ∈ [0,1)`.
pub fn floor_mul(t: f64, m: u64) -> u64 {
    debug_assert!((0.0..1.0).contains(&t), "{t} outside [0,1)");
    if t <= 0.0 {
        return 0;
    }
    let bits = t.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let (mant, e) =
        if exp == 0 { (bits & ((1 << 52) - 1), -1074) } else { ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075) };
    let prod = mant as u128 * m as u128;
    let shift = (-e) as u32;
    if shift >= 128 {
        0
    } else {
        (prod >> shift) as u64
    }
}

/// Grid of one weight component at one subset size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Level {
    pub size: usize,
    pub resolution: u64,
    pub ranked: bool,
}

/// Per weight component, the levels a chamber-grid peon resolves.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GridSpec {
    pub levels: Vec<Vec<Level>>,
}

impl GridSpec {
    pub fn empty(width: usize) -> Self {
        GridSpec { levels: vec![Vec::new(); width] }
    }

    pub fn with_level(mut self, component: usize, size: usize, resolution: u64, ranked: bool) -> Self {
        self.add(component, Level { size, resolution, ranked });
        self
    }

    pub fn level(&self, component: usize, size: usize) -> Option<&Level> {
        self.levels.get(component)?.iter().find(|l| l.size == size)
    }

    /// Adds a level, refining an existing one at the same size by lcm of
    /// resolutions and union of rankings.
    pub fn add(&mut self, component: usize, level: Level) {
        let lv = &mut self.levels[component];
        match lv.iter_mut().find(|l| l.size == level.size) {
            Some(l) => {
                l.resolution = l.resolution.lcm(&level.resolution);
                l.ranked |= level.ranked;
            }
            None => {
                lv.push(level);
                lv.sort_by_key(|l| l.size);
            }
        }
    }

    /// Common refinement.
    pub fn merge(&mut self, other: &GridSpec) {
        for (c, lv) in other.levels.iter().enumerate() {
            for l in lv {
                self.add(c, *l);
            }
        }
    }

    /// This grid embedded at component offset `offset` of a wider space.
    pub fn shifted(&self, offset: usize, width: usize) -> GridSpec {
        let mut g = GridSpec::empty(width);
        for (c, lv) in self.levels.iter().enumerate() {
            g.levels[c + offset] = lv.clone();
        }
        g
    }
}

/// Exact volume of one chamber: `m^{-N} · Π 1/q! · Π 1/|A|!` where `N` weight
/// coordinates lie on an `m` grid, `q` ranges over occupancies of ranked
/// cells, and `|A|` over order ground-set sizes.
pub fn chamber_volume(
    resolution: u64,
    weight_coords: usize,
    occupancies: &[usize],
    order_sizes: &[usize],
) -> BigRational {
    let mut den = BigUint::from(resolution).pow(weight_coords as u32);
    for &q in occupancies.iter().chain(order_sizes) {
        den *= BigUint::from(factorial(q));
    }
    BigRational::new(One::one(), den.into())
}

/// The slots a chamber resolves: weight slots grouped into levels, and order
/// slots. Slot identities are subset masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChamberLayout {
    pub levels: Vec<LevelSlots>,
    /// `(subset, degree)`, sorted.
    pub orders: Vec<(u64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSlots {
    pub component: usize,
    pub level: Level,
    /// Subset masks, increasing.
    pub slots: Vec<u64>,
}

impl ChamberLayout {
    /// Groups weight slots `(subset, component)` and order slots by the grid.
    pub fn new(grid: &GridSpec, weights: &[(u64, usize)], orders: &[(u64, usize)]) -> Result<Self> {
        let mut groups: BTreeMap<(usize, usize), Vec<u64>> = BTreeMap::new();
        for &(mask, c) in weights {
            groups.entry((c, mask.count_ones() as usize)).or_default().push(mask);
        }
        let mut levels = Vec::new();
        for ((c, size), mut slots) in groups {
            let level = *grid
                .level(c, size)
                .ok_or_else(|| Error::NotChamberGrid(format!("no grid level for component {c} at size {size}")))?;
            slots.sort_unstable();
            slots.dedup();
            levels.push(LevelSlots { component: c, level, slots });
        }
        let mut orders = orders.to_vec();
        orders.sort_unstable_by_key(|&(m, j)| (j, m));
        orders.dedup();
        Ok(ChamberLayout { levels, orders })
    }

    /// Chamber key of a point: per level the cells and (if ranked) ranks of
    /// its slots, then the lexicographic index of each order slot.
    pub fn key(&self, x: &Point) -> Vec<u32> {
        let mut key = Vec::new();
        for lv in &self.levels {
            let m = lv.level.resolution;
            let vals: Vec<f64> = lv.slots.iter().map(|&s| x.weight(s, lv.component)).collect();
            let cells: Vec<u64> = vals.iter().map(|&v| floor_mul(v, m)).collect();
            key.extend(cells.iter().map(|&c| c as u32));
            if lv.level.ranked {
                for i in 0..vals.len() {
                    let rank = (0..vals.len()).filter(|&j| cells[j] == cells[i] && (vals[j], j) < (vals[i], i)).count();
                    key.push(rank as u32);
                }
            }
        }
        for &(mask, j) in &self.orders {
            key.push(x.order(mask, j).lex_index() as u32);
        }
        key
    }

    /// Local chambers of every factor, in a fixed order. Each factor lists
    /// `(assignment, numerator)` pairs whose volumes are `numerator / denominator`.
    pub fn factors(&self) -> Result<Vec<Factor>> {
        let mut out = Vec::new();
        for (li, lv) in self.levels.iter().enumerate() {
            out.push(level_factor(li, lv)?);
        }
        for (oi, &(mask, _)) in self.orders.iter().enumerate() {
            let s = mask.count_ones() as usize;
            let perms = all_perms(s)?;
            out.push(Factor {
                denominator: factorial(s) as u128,
                choices: perms.into_iter().map(|p| (Choice::Order(oi, p), 1)).collect(),
            });
        }
        Ok(out)
    }

    /// Total number of chambers, saturating.
    pub fn chamber_count(&self) -> u128 {
        let mut total: u128 = 1;
        for lv in &self.levels {
            let n = lv.slots.len() as u32;
            let m = lv.level.resolution as u128;
            let c = if lv.level.ranked {
                // n! · C(n+m-1, n)
                let mut c = factorial(n as usize) as u128;
                let mut binom: u128 = 1;
                for i in 0..n as u128 {
                    binom = binom.saturating_mul(m + i) / (i + 1);
                }
                c = c.saturating_mul(binom);
                c
            } else {
                m.saturating_pow(n)
            };
            total = total.saturating_mul(c);
        }
        for &(mask, _) in &self.orders {
            total = total.saturating_mul(factorial(mask.count_ones() as usize) as u128);
        }
        total
    }
}

/// One independent factor of a chamber enumeration.
#[derive(Debug, Clone)]
pub struct Factor {
    pub denominator: u128,
    pub choices: Vec<(Choice, u128)>,
}

/// A local chamber: weight values for one level, or one order slot's order.
#[derive(Debug, Clone)]
pub enum Choice {
    Weights(usize, Vec<f64>),
    Order(usize, Perm),
}

impl Choice {
    /// Writes the representative values into `x`.
    pub fn apply(&self, layout: &ChamberLayout, x: &mut Point) {
        match self {
            Choice::Weights(li, vals) => {
                let lv = &layout.levels[*li];
                for (&s, &v) in lv.slots.iter().zip(vals) {
                    x.set_weight(s, lv.component, v);
                }
            }
            Choice::Order(oi, p) => {
                let (mask, j) = layout.orders[*oi];
                x.set_order(mask, j, p.clone());
            }
        }
    }
}

fn level_factor(li: usize, lv: &LevelSlots) -> Result<Factor> {
    let n = lv.slots.len();
    let m = lv.level.resolution;
    let m_pow = (m as u128)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::CapExceeded("grid level too large to enumerate".into()))?;
    let center = |cell: u64| (cell as f64 + 0.5) / m as f64;
    let mut choices = Vec::new();
    if !lv.level.ranked {
        let mut cells = vec![0u64; n];
        loop {
            choices.push((Choice::Weights(li, cells.iter().map(|&c| center(c)).collect()), 1));
            if !advance(&mut cells, m) {
                break;
            }
        }
        return Ok(Factor { denominator: m_pow, choices });
    }
    let nf = factorial(n) as u128;
    let perms = all_perms(n)?;
    let mut comp = vec![0usize; m as usize];
    compositions(n, m as usize, 0, &mut comp, &mut |blocks| {
        let mut num = nf;
        for &q in blocks {
            num /= factorial(q) as u128;
        }
        for perm in &perms {
            // perm lists slots by increasing value
            let mut vals = vec![0.0; n];
            let mut pos = 0;
            for (cell, &q) in blocks.iter().enumerate() {
                for t in 0..q {
                    let slot = perm.get(pos);
                    vals[slot] = (cell as f64 + (t + 1) as f64 / (q + 1) as f64) / m as f64;
                    pos += 1;
                }
            }
            choices.push((Choice::Weights(li, vals), num));
        }
    });
    Ok(Factor { denominator: m_pow * nf, choices })
}

fn advance(digits: &mut [u64], radix: u64) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

fn compositions(n: usize, parts: usize, at: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if at + 1 == parts {
        cur[at] = n;
        f(cur);
        return;
    }
    for q in 0..=n {
        cur[at] = q;
        compositions(n - q, parts, at + 1, cur, f);
    }
}

/// Enumerates all chambers of `layout`: for each, `visit` receives the
/// representative point (other coordinates untouched from `base`) and the
/// numerator of its volume over [`chamber_denominator`]. Only chambers with
/// index in `range` are visited, so disjoint ranges can run in parallel.
pub fn for_each_chamber(
    layout: &ChamberLayout,
    factors: &[Factor],
    base: &Point,
    range: std::ops::Range<u64>,
    mut visit: impl FnMut(&Point, u128),
) {
    let radices: Vec<u64> = factors.iter().map(|f| f.choices.len() as u64).collect();
    let mut x = base.clone();
    let mut digits = vec![0u64; factors.len()];
    let mut rem = range.start;
    for (d, &r) in digits.iter_mut().zip(&radices) {
        *d = rem % r;
        rem /= r;
    }
    for (f, &d) in factors.iter().zip(&digits) {
        f.choices[d as usize].0.apply(layout, &mut x);
    }
    for _ in range {
        let num = factors.iter().zip(&digits).fold(1u128, |acc, (f, &d)| acc * f.choices[d as usize].1);
        visit(&x, num);
        for (i, d) in digits.iter_mut().enumerate() {
            *d += 1;
            if *d < radices[i] {
                factors[i].choices[*d as usize].0.apply(layout, &mut x);
                break;
            }
            *d = 0;
            factors[i].choices[0].0.apply(layout, &mut x);
        }
    }
}

/// Product of the factor denominators.
pub fn chamber_denominator(factors: &[Factor]) -> BigUint {
    factors.iter().fold(BigUint::one(), |acc, f| acc * BigUint::from(f.denominator))
}

/// Number of chambers of a factor list.
pub fn chamber_total(factors: &[Factor]) -> Option<u64> {
    factors.iter().try_fold(1u64, |acc, f| acc.checked_mul(f.choices.len() as u64))
}

/// Converts an accumulated numerator to the exact volume.
pub fn to_volume(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(num.clone().into(), den.clone().into())
}

/// Float approximation of a rational.
pub fn approx(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceDescriptor;
    use num_traits::Zero;

    #[test]
    fn floor_mul_is_exact() {
        assert_eq!(floor_mul(0.0, 6), 0);
        assert_eq!(floor_mul(0.5, 2), 1);
        assert_eq!(floor_mul(0.3, 2), 0);
        assert_eq!(floor_mul(0.7, 2), 1);
        let just_below = f64::from_bits(0.5f64.to_bits() - 1);
        assert_eq!(floor_mul(just_below, 2), 0);
        assert_eq!(floor_mul(1.0 / 3.0, 3), 0);
        assert_eq!(floor_mul(f64::from_bits(1), 720), 0);
        assert_eq!(floor_mul(0.999_999_999_999_999_9, 720), 719);
    }

    #[test]
    fn volume_examples() {
        assert_eq!(chamber_volume(2, 1, &[], &[]), BigRational::new(1.into(), 2.into()));
        assert_eq!(chamber_volume(2, 2, &[2], &[]), BigRational::new(1.into(), 8.into()));
    }

    fn layout_sum(grid: &GridSpec, w: &[(u64, usize)], o: &[(u64, usize)]) -> (BigRational, u64) {
        let layout = ChamberLayout::new(grid, w, o).unwrap();
        let factors = layout.factors().unwrap();
        let total = chamber_total(&factors).unwrap();
        assert_eq!(total as u128, layout.chamber_count());
        let base = Point::zeros(3, None, SpaceDescriptor::new(1, 1).unwrap()).unwrap();
        let mut sum = BigUint::zero();
        let mut keys = std::collections::HashSet::new();
        for_each_chamber(&layout, &factors, &base, 0..total, |x, num| {
            sum += BigUint::from(num);
            assert!(keys.insert(layout.key(x)), "two chambers share a key");
        });
        (to_volume(&sum, &chamber_denominator(&factors)), total)
    }

    #[test]
    fn volumes_partition_unity() {
        let one = BigRational::one();
        let g = GridSpec::empty(1).with_level(0, 1, 2, true).with_level(0, 2, 3, false);
        let (s, n) = layout_sum(&g, &[(1, 0), (2, 0), (4, 0), (3, 0), (5, 0)], &[(3, 0), (7, 0)]);
        assert_eq!(s, one);
        // ranked level of 3 slots on 2 cells: 3!·C(4,3) = 24; unranked 3^2; orders 2·6
        assert_eq!(n, 24 * 9 * 12);
        let g = GridSpec::empty(1).with_level(0, 2, 1, true);
        let (s, n) = layout_sum(&g, &[(3, 0), (5, 0), (6, 0)], &[]);
        assert_eq!((s, n), (one, 6));
    }

    #[test]
    fn range_split_matches_full_enumeration() {
        let g = GridSpec::empty(1).with_level(0, 1, 2, true);
        let layout = ChamberLayout::new(&g, &[(1, 0), (2, 0), (4, 0)], &[(3, 0)]).unwrap();
        let factors = layout.factors().unwrap();
        let total = chamber_total(&factors).unwrap();
        let base = Point::zeros(3, None, SpaceDescriptor::new(1, 1).unwrap()).unwrap();
        let mut all = Vec::new();
        for_each_chamber(&layout, &factors, &base, 0..total, |x, _| all.push(layout.key(x)));
        let mut parts = Vec::new();
        for r in [0..5, 5..17, 17..total] {
            for_each_chamber(&layout, &factors, &base, r, |x, _| parts.push(layout.key(x)));
        }
        assert_eq!(all, parts);
    }

    #[test]
    fn keys_of_random_points_match_representatives() {
        use rand::Rng;
        let g = GridSpec::empty(1).with_level(0, 1, 2, true).with_level(0, 2, 2, false);
        let w = [(1, 0), (2, 0), (3, 0)];
        let layout = ChamberLayout::new(&g, &w, &[]).unwrap();
        let factors = layout.factors().unwrap();
        let base = Point::zeros(2, None, SpaceDescriptor::new(1, 0).unwrap()).unwrap();
        let mut reps = std::collections::HashSet::new();
        for_each_chamber(&layout, &factors, &base, 0..chamber_total(&factors).unwrap(), |x, _| {
            reps.insert(layout.key(x));
        });
        let mut r = crate::rng::stream_rng(3, 3);
        for _ in 0..1000 {
            let mut x = base.clone();
            for &(s, c) in &w {
                x.set_weight(s, c, r.random());
            }
            assert!(reps.contains(&layout.key(&x)));
        }
    }
}
