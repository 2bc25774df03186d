//! Realizing order variables by weights, and simulating them by an
//! independent orientation.
//!
//! The basic 1-realization sends a weight pair `(x, y)` at a set `A` to the
//! weight `x_A` and the order `(τ_{|A|}(y_A) ∘ σ_y)^*(≤)`, where `σ_y` ranks
//! the `y` values of the co-singletons of `A`. [`RealizationFamily`] runs `d`
//! independent copies side by side and passes `p` further weights through.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::peon::gallery::kqro_peon;
use crate::peon::{floor_mul, union_theon, DependencyMask, GridSpec, Level, Peon, Slot, Theon};
use crate::space::{
    bits, combinations, factorial, positions, sample_point, subset_masks, Perm, Point, SpaceDescriptor, VertexSet,
    FACTORIAL_CAP,
};
use crate::symbols::{Expr, Formula, Interpretation, Language};

/// `σ_y` as a rank array: `σ[a]` is the position of `values[a]` in increasing
/// order, ties broken by smaller index. The flag reports a tie.
pub fn sigma_sort(values: &[f64]) -> (Perm, bool) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let tie = idx.windows(2).any(|w| values[w[0]] == values[w[1]]);
    (Perm::from_vec(idx).expect("sorted indices").inverse(), tie)
}

/// `τ_i(t)`: the permutation at index `⌊t·i!⌋` of the lexicographic enumeration.
pub fn tau(i: usize, t: f64) -> Result<Perm> {
    if i > FACTORIAL_CAP {
        return Err(Error::CapExceeded(format!("{i}! exceeds the factorial cap")));
    }
    Ok(Perm::from_lex_index(i, floor_mul(t, factorial(i))))
}

/// Order produced from the `y` value of a set and those of its
/// co-singletons (listed by the removed member, increasing).
pub fn order_from_weights(top: f64, co: &[f64]) -> Result<(Perm, bool)> {
    let i = co.len().max(1);
    if i == 1 {
        return Ok((Perm::identity(1), false));
    }
    let (sigma, tie) = sigma_sort(co);
    Ok((tau(i, top)?.compose(&sigma), tie))
}

/// Values at the co-singletons of `a` by removed member; empty for singletons.
fn co_singletons(a: u64, value: impl Fn(u64) -> f64) -> Vec<f64> {
    if a.count_ones() < 2 {
        return Vec::new();
    }
    positions(a).map(|p| value(a & !(1 << p))).collect()
}

/// `(y + k0) / m`, nudged so that `⌊h·m⌋ = k0` holds exactly.
fn place(y: f64, k0: u64, m: u64) -> f64 {
    let mut h = ((y + k0 as f64) / m as f64).min(1.0f64.next_down());
    loop {
        match floor_mul(h, m).cmp(&k0) {
            std::cmp::Ordering::Less => h = h.next_up(),
            std::cmp::Ordering::Greater => h = h.next_down(),
            std::cmp::Ordering::Equal => return h,
        }
    }
}

/// `(h, k)` at a set of size `i` from its `y` value, the `h` values of its
/// co-singletons and its order. `k` is 1-based. The flag reports a tie.
pub fn h_step(y: f64, co_h: &[f64], order: &Perm) -> Result<(f64, u64, bool)> {
    let i = order.len();
    if i > FACTORIAL_CAP {
        return Err(Error::CapExceeded(format!("{i}! exceeds the factorial cap")));
    }
    let (sigma, tie) = if i == 1 { (Perm::identity(1), false) } else { sigma_sort(co_h) };
    // γ_k ∘ σ̃ must equal the order
    let gamma = order.compose(&sigma.inverse());
    let k0 = gamma.lex_index();
    Ok((place(y, k0, factorial(i)), k0 + 1, tie))
}

/// `f_i` on a point over `[i]` with weights `(x, y)`: the top `x` and the order.
pub fn realize_f(x: &Point) -> Result<(f64, Perm)> {
    let fam = RealizationFamily::new(1, 1);
    let lifted = fam.hat_f(x)?;
    let top = crate::space::full_mask(x.vertex_count());
    Ok((lifted.point.weight(top, 0), lifted.point.order(top, 0).clone()))
}

/// `g_i` on a point over `[i]` with weights `(x, y)` and one order: `(x_{[i]}, h_i)`.
pub fn realize_g(x: &Point) -> Result<(f64, f64)> {
    let fam = RealizationFamily::new(1, 1);
    let lifted = fam.hat_g(x)?;
    let top = crate::space::full_mask(x.vertex_count());
    Ok((lifted.point.weight(top, 0), lifted.point.weight(top, 1)))
}

/// A point produced by a realization, with the number of tied rankings met.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifted {
    pub point: Point,
    pub degenerate: usize,
}

/// `d` copies of the basic 1-realization plus `width` pass-through weights.
///
/// * forward: `(width + degree, 0) → (width, degree)`
/// * inverse: `(width + degree, degree) → (width + degree, 0)`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RealizationFamily {
    pub width: usize,
    pub degree: usize,
    /// Largest set size whose orders are realized.
    pub max_level: usize,
}

impl RealizationFamily {
    pub fn new(width: usize, degree: usize) -> Self {
        RealizationFamily { width, degree, max_level: 6 }
    }

    /// The family whose target is `desc`.
    pub fn for_target(desc: SpaceDescriptor) -> Self {
        RealizationFamily::new(desc.width, desc.degree)
    }

    pub fn source(&self) -> SpaceDescriptor {
        SpaceDescriptor { width: self.width + self.degree, degree: 0 }
    }

    pub fn target(&self) -> SpaceDescriptor {
        SpaceDescriptor { width: self.width, degree: self.degree }
    }

    pub fn inverse_source(&self) -> SpaceDescriptor {
        SpaceDescriptor { width: self.width + self.degree, degree: self.degree }
    }

    fn check(&self, x: &Point, want: SpaceDescriptor) -> Result<Vec<u64>> {
        if x.descriptor() != want {
            return Err(Error::DescriptorMismatch(format!("expected a point over {want}, got {}", x.descriptor())));
        }
        let top = x.ell().map_or(x.vertex_count(), |l| l.min(x.vertex_count()));
        if self.degree > 0 && top > self.max_level {
            return Err(Error::CapExceeded(format!(
                "orders on {top}-sets exceed the realization cap of {}",
                self.max_level
            )));
        }
        Ok(subset_masks(x.vertex_count(), x.ell()))
    }

    /// `f̂_V`.
    pub fn hat_f(&self, x: &Point) -> Result<Lifted> {
        let masks = self.check(x, self.source())?;
        let mut out = Point::zeros(x.vertex_count(), x.ell(), self.target())?;
        let mut degenerate = 0;
        for &a in &masks {
            for c in 0..self.width {
                out.set_weight(a, c, x.weight(a, c));
            }
            for j in 0..self.degree {
                let c = self.width + j;
                let co = co_singletons(a, |s| x.weight(s, c));
                let (order, tie) = order_from_weights(x.weight(a, c), &co)?;
                if tie {
                    log::debug!("tied co-singleton weights at {a:#b}");
                    degenerate += 1;
                }
                out.set_order(a, j, order);
            }
        }
        Ok(Lifted { point: out, degenerate })
    }

    /// `ĝ_V`.
    pub fn hat_g(&self, x: &Point) -> Result<Lifted> {
        let masks = self.check(x, self.inverse_source())?;
        let mut out = Point::zeros(x.vertex_count(), x.ell(), self.source())?;
        let mut degenerate = 0;
        for &a in &masks {
            for c in 0..self.width {
                out.set_weight(a, c, x.weight(a, c));
            }
        }
        // masks come by increasing size, so co-singletons are filled first
        for j in 0..self.degree {
            let c = self.width + j;
            for &a in &masks {
                let co = co_singletons(a, |s| out.weight(s, c));
                let (h, _, tie) = h_step(x.weight(a, c), &co, x.order(a, j))?;
                if tie {
                    log::debug!("tied h values at {a:#b}");
                    degenerate += 1;
                }
                out.set_weight(a, c, h);
            }
        }
        Ok(Lifted { point: out, degenerate })
    }

    /// Slots of the source read to compute the target slot.
    pub fn source_slots(&self, slot: Slot) -> Vec<Slot> {
        match slot {
            Slot::Weight(a, c) => vec![Slot::Weight(a, c)],
            Slot::Order(a, _) if a.count_ones() == 1 => Vec::new(),
            Slot::Order(a, j) => {
                let c = self.width + j;
                let mut v = vec![Slot::Weight(a, c)];
                v.extend(positions(a).map(|p| Slot::Weight(a & !(1 << p), c)));
                v
            }
        }
    }
}

/// `f^*(N)`: each peon evaluated on the realized point.
pub fn pull_theon(family: &RealizationFamily, n: &Theon) -> Result<Theon> {
    if n.descriptor() != family.target() {
        return Err(Error::DescriptorMismatch(format!(
            "family targets {}, theon is over {}",
            family.target(),
            n.descriptor()
        )));
    }
    let fam = *family;
    let mut peons = BTreeMap::new();
    for (p, peon) in n.language().predicates().iter().zip(n.peons()) {
        let k = peon.arity();
        let mut mask = DependencyMask::empty(k, fam.source());
        for slot in peon.mask().slots() {
            for s in fam.source_slots(slot) {
                mask.add(s);
            }
        }
        let inner = peon.clone();
        let pulled = Peon::new(mask, move |v| {
            let mut y = Point::zeros(k, None, fam.target()).expect("small arity");
            for slot in inner.mask().slots() {
                match slot {
                    Slot::Weight(a, c) => y.set_weight(a, c, v.w(a, c)),
                    Slot::Order(a, j) => {
                        let c = fam.width + j;
                        let co = co_singletons(a, |s| v.w(s, c));
                        let top = if co.is_empty() { 0.0 } else { v.w(a, c) };
                        let (o, _) = order_from_weights(top, &co).expect("arity within the factorial cap");
                        y.set_order(a, j, o);
                    }
                }
            }
            inner.eval_unchecked(&y)
        });
        let pulled = match peon.grid() {
            Some(g) => pulled.with_grid(pulled_grid(&fam, g, peon.mask()))?,
            None => pulled,
        };
        peons.insert(p.name.clone(), pulled);
    }
    Theon::new(format!("f*({})", n.name()), n.language().clone(), fam.source(), peons)
}

/// Grid of a pulled peon: the original weight levels, and for each order
/// slot on an `s`-set an `s!` grid at size `s` plus a ranking at size `s-1`.
fn pulled_grid(fam: &RealizationFamily, grid: &GridSpec, mask: &DependencyMask) -> GridSpec {
    let mut g = grid.shifted(0, fam.source().width);
    for (a, j) in mask.order_slots() {
        let s = a.count_ones() as usize;
        if s < 2 {
            continue;
        }
        let c = fam.width + j;
        g.add(c, Level { size: s, resolution: factorial(s), ranked: false });
        g.add(c, Level { size: s - 1, resolution: 1, ranked: true });
    }
    g
}

/// The objects that simulate the order variables of `(ℓ+1)`-sets of a
/// 1-theon by an independent `(ℓ+1)`-orientation.
#[derive(Debug, Clone)]
pub struct SimulationBundle {
    pub ell: usize,
    pub source: Theon,
    /// `Q_⊲` peons: the source with the `(ℓ+1)`-set orders replaced by `⊲`.
    pub h: Theon,
    /// `H` together with the orientation predicate.
    pub g: Theon,
    pub orientation: String,
    pub interpretation: Interpretation,
}

impl SimulationBundle {
    /// `I^*(G)`, which should agree with the source.
    pub fn interpreted(&self) -> Result<Theon> {
        crate::peon::interpret_theon(&self.interpretation, &self.g)
    }

    /// Fraction of `trials` random points on which the interpreted theon
    /// agrees with the source, over every predicate.
    pub fn agreement(&self, trials: u64, seed: u64) -> Result<f64> {
        let back = self.interpreted()?;
        let mut agree = 0u64;
        let mut total = 0u64;
        for (i, (p, q)) in self.source.peons().iter().zip(back.peons()).enumerate() {
            let v = VertexSet::range(p.arity());
            let hits = crate::exec::map_chunks(trials, 1024, |r| {
                r.filter(|&t| {
                    let x = sample_point(&v, None, p.descriptor(), crate::rng::derive_seed(seed ^ i as u64, t))
                        .expect("small arity");
                    p.eval_unchecked(&x) == q.eval_unchecked(&x)
                })
                .count() as u64
            });
            agree += hits.iter().sum::<u64>();
            total += trials;
        }
        Ok(if total == 0 { 1.0 } else { agree as f64 / total as f64 })
    }
}

/// Name of `Q_⊲`: the members of each `(ℓ+1)`-set listed in `⊲` order, 1-based.
fn simulated_name(q: &str, sets: &[u64], orders: &[Perm]) -> String {
    let parts: Vec<String> = sets
        .iter()
        .zip(orders)
        .map(|(&a, o)| {
            let members: Vec<usize> = positions(a).collect();
            o.ranked().iter().map(|&r| (members[r] + 1).to_string()).collect::<String>()
        })
        .collect();
    format!("{q}@{}", parts.join("/"))
}

/// Most `Q_⊲` symbols generated for one source predicate.
pub const MAX_SIMULATED_SYMBOLS: u64 = 1 << 12;

/// Builds the simulation of `(ℓ+1)`-set orders of `n` by an independent
/// `(ℓ+1)`-orientation. `n` must be a 1-theon that does not depend on
/// coordinates of sets of size at most `ℓ`; undeclared independence is
/// spot-checked with `trials` resamplings.
pub fn simulate_orders(n: &Theon, ell: usize, trials: u64, seed: u64) -> Result<SimulationBundle> {
    let desc = n.descriptor();
    if desc.degree != 1 {
        return Err(Error::InvalidArgument(format!("order simulation needs a 1-theon, got degree {}", desc.degree)));
    }
    let m = ell + 1;
    if m > FACTORIAL_CAP {
        return Err(Error::CapExceeded(format!("orientation arity {m} exceeds the factorial cap")));
    }
    for (p, peon) in n.language().predicates().iter().zip(n.peons()) {
        if peon.mask().is_independent_below(ell) {
            continue;
        }
        let low: Vec<Slot> = peon
            .mask()
            .slots()
            .into_iter()
            .filter(|s| match *s {
                Slot::Weight(a, _) | Slot::Order(a, _) => a.count_ones() as usize <= ell,
            })
            .collect();
        let report = crate::peon::dependency_check_slots(peon, &low, trials, seed)?;
        if !report.independent {
            return Err(Error::NotIndependent(format!("`{}` depends on coordinates of sets of size ≤ {ell}", p.name)));
        }
    }

    let mut h_peons = BTreeMap::new();
    let mut defs = BTreeMap::new();
    let orientation = "P".to_string();
    let perms = crate::space::all_perms(m)?;
    for (p, peon) in n.language().predicates().iter().zip(n.peons()) {
        let k = p.arity;
        let mut sets = Vec::new();
        if k >= m {
            combinations(k, m, |c| sets.push(bits(c)));
        }
        let count = (perms.len() as u64).checked_pow(sets.len() as u32);
        if count.is_none_or(|c| c > MAX_SIMULATED_SYMBOLS) {
            return Err(Error::CapExceeded(format!("too many simulated symbols for `{}`", p.name)));
        }
        let mut mask = DependencyMask::empty(k, desc);
        for slot in peon.mask().slots() {
            if !matches!(slot, Slot::Order(a, 0) if a.count_ones() as usize == m) {
                mask.add(slot);
            }
        }
        let mut disjuncts = Vec::new();
        let mut digits = vec![0usize; sets.len()];
        loop {
            let orders: Vec<Perm> = digits.iter().map(|&d| perms[d].clone()).collect();
            let name = simulated_name(&p.name, &sets, &orders);
            let inner = peon.clone();
            let fixed: Vec<(u64, Perm)> = sets.iter().copied().zip(orders.iter().cloned()).collect();
            let hp = Peon::new(mask.clone(), move |v| {
                let mut x = Point::zeros(k, None, desc).expect("small arity");
                for slot in inner.mask().slots() {
                    match slot {
                        Slot::Weight(a, c) => x.set_weight(a, c, v.w(a, c)),
                        Slot::Order(a, j) => match fixed.iter().find(|(s, _)| *s == a && j == 0) {
                            Some((_, o)) => x.set_order(a, j, o.clone()),
                            None => x.set_order(a, j, v.order(a, j).clone()),
                        },
                    }
                }
                inner.eval_unchecked(&x)
            });
            let hp = match peon.grid() {
                Some(g) => hp.with_grid(g.clone())?,
                None => hp,
            };
            h_peons.insert(name.clone(), hp);
            let mut conj = vec![Expr::atom(name, (0..k).collect())];
            for (&a, o) in sets.iter().zip(&orders) {
                let members: Vec<usize> = positions(a).collect();
                conj.push(Expr::atom(orientation.clone(), o.ranked().iter().map(|&r| members[r]).collect()));
            }
            disjuncts.push(Expr::And(conj));
            if !advance(&mut digits, perms.len()) {
                break;
            }
        }
        defs.insert(p.name.clone(), Formula::new(k, Expr::Or(disjuncts))?);
    }
    let h_lang = Language::new(h_peons.iter().map(|(s, p)| (s.clone(), p.arity())))?;
    let h = Theon::new(format!("H({})", n.name()), h_lang, desc, h_peons)?;
    let mut o_peons = BTreeMap::new();
    o_peons.insert(orientation.clone(), kqro_peon(m, desc));
    let o = Theon::new(format!("orientation({m})"), Language::new([(orientation.as_str(), m)])?, desc, o_peons)?;
    let g = union_theon(&h, &o)?;
    let interpretation = Interpretation::new(n.language().clone(), g.language().clone(), defs)?;
    Ok(SimulationBundle { ell, source: n.clone(), h, g, orientation, interpretation })
}

fn advance(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}
