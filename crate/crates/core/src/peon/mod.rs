//! Membership predicates on points (peons), theons built from them, and the
//! theon-level combinators: interpretation, reduct, union and independent
//! coupling.

pub mod chamber;
pub mod gallery;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::space::{
    full_mask, image_mask, positions, pull_rank, sample_point, CoordinateSource, Perm, Point, SeededSource,
    SpaceDescriptor, VertexSet,
};
use crate::symbols::{Interpretation, Language};

pub use chamber::{chamber_volume, floor_mul, ChamberLayout, GridSpec, Level};
pub use gallery::{gallery, Convention, GalleryParams, GALLERY};

/// Largest arity a peon may have.
pub const MAX_ARITY: usize = 7;

/// The coordinate slots a peon reads: per weight component and per order
/// degree, a bitset over subset masks of `[arity]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DependencyMask {
    arity: usize,
    weights: Vec<u128>,
    orders: Vec<u128>,
}

/// One coordinate slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Weight(u64, usize),
    Order(u64, usize),
}

impl DependencyMask {
    pub fn empty(arity: usize, desc: SpaceDescriptor) -> Self {
        assert!(arity <= MAX_ARITY, "arity {arity} exceeds {MAX_ARITY}");
        DependencyMask { arity, weights: vec![0; desc.width], orders: vec![0; desc.degree] }
    }

    /// Every slot of `r([arity])`.
    pub fn full(arity: usize, desc: SpaceDescriptor) -> Self {
        let mut m = DependencyMask::empty(arity, desc);
        let all = (1..=full_mask(arity)).fold(0u128, |acc, s| acc | 1 << s);
        m.weights.fill(all);
        m.orders.fill(all);
        m
    }

    pub fn with_weight(mut self, subset: u64, component: usize) -> Self {
        self.add(Slot::Weight(subset, component));
        self
    }

    pub fn with_order(mut self, subset: u64, degree: usize) -> Self {
        self.add(Slot::Order(subset, degree));
        self
    }

    /// Reads every weight component at `subset`.
    pub fn with_weights(mut self, subset: u64) -> Self {
        for c in 0..self.weights.len() {
            self.add(Slot::Weight(subset, c));
        }
        self
    }

    pub fn add(&mut self, slot: Slot) {
        match slot {
            Slot::Weight(s, c) => {
                assert!(s != 0 && s <= full_mask(self.arity));
                self.weights[c] |= 1 << s;
            }
            Slot::Order(s, j) => {
                assert!(s != 0 && s <= full_mask(self.arity));
                self.orders[j] |= 1 << s;
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor { width: self.weights.len(), degree: self.orders.len() }
    }

    pub fn reads_weight(&self, subset: u64, component: usize) -> bool {
        subset < 128 && self.weights[component] >> subset & 1 == 1
    }

    pub fn reads_order(&self, subset: u64, degree: usize) -> bool {
        subset < 128 && self.orders[degree] >> subset & 1 == 1
    }

    pub fn reads(&self, slot: Slot) -> bool {
        match slot {
            Slot::Weight(s, c) => self.reads_weight(s, c),
            Slot::Order(s, j) => self.reads_order(s, j),
        }
    }

    /// Whether any coordinate at `subset` is read.
    pub fn reads_subset(&self, subset: u64) -> bool {
        (0..self.weights.len()).any(|c| self.reads_weight(subset, c))
            || (0..self.orders.len()).any(|j| self.reads_order(subset, j))
    }

    pub fn slots(&self) -> Vec<Slot> {
        let mut out = Vec::new();
        for (c, &w) in self.weights.iter().enumerate() {
            out.extend(bit_iter(w).map(|s| Slot::Weight(s, c)));
        }
        for (j, &o) in self.orders.iter().enumerate() {
            out.extend(bit_iter(o).map(|s| Slot::Order(s, j)));
        }
        out
    }

    pub fn weight_slots(&self) -> Vec<(u64, usize)> {
        self.slots().into_iter().filter_map(|s| if let Slot::Weight(m, c) = s { Some((m, c)) } else { None }).collect()
    }

    pub fn order_slots(&self) -> Vec<(u64, usize)> {
        self.slots().into_iter().filter_map(|s| if let Slot::Order(m, j) = s { Some((m, j)) } else { None }).collect()
    }

    pub fn union(&self, other: &DependencyMask) -> DependencyMask {
        assert_eq!(self.arity, other.arity);
        assert_eq!(self.descriptor(), other.descriptor());
        DependencyMask {
            arity: self.arity,
            weights: self.weights.iter().zip(&other.weights).map(|(a, b)| a | b).collect(),
            orders: self.orders.iter().zip(&other.orders).map(|(a, b)| a | b).collect(),
        }
    }

    /// The slots read after relabeling `[arity]` into `[n]` along `map`.
    pub fn pushforward(&self, map: &[usize], n: usize) -> DependencyMask {
        let mut out = DependencyMask::empty(n, self.descriptor());
        for slot in self.slots() {
            out.add(match slot {
                Slot::Weight(s, c) => Slot::Weight(image_mask(map, s), c),
                Slot::Order(s, j) => Slot::Order(image_mask(map, s), j),
            });
        }
        out
    }

    /// This mask inside a wider space, at component offset `woff` and degree offset `ooff`.
    pub fn embedded(&self, desc: SpaceDescriptor, woff: usize, ooff: usize) -> DependencyMask {
        let mut out = DependencyMask::empty(self.arity, desc);
        for (c, &w) in self.weights.iter().enumerate() {
            out.weights[c + woff] = w;
        }
        for (j, &o) in self.orders.iter().enumerate() {
            out.orders[j + ooff] = o;
        }
        out
    }

    /// Whether no slot of size at most `ell` is read.
    pub fn is_independent_below(&self, ell: usize) -> bool {
        self.slots().into_iter().all(|s| {
            let m = match s {
                Slot::Weight(m, _) | Slot::Order(m, _) => m,
            };
            m.count_ones() as usize > ell
        })
    }
}

fn bit_iter(w: u128) -> impl Iterator<Item = u64> {
    (1..128u64).filter(move |&s| w >> s & 1 == 1)
}

/// A point seen through a dependency mask. Reading a slot outside the mask
/// panics, which keeps declared masks honest.
pub struct PointView<'a> {
    point: &'a Point,
    mask: &'a DependencyMask,
}

impl<'a> PointView<'a> {
    pub fn new(point: &'a Point, mask: &'a DependencyMask) -> Self {
        PointView { point, mask }
    }

    pub fn arity(&self) -> usize {
        self.mask.arity
    }

    /// Weight component `c` at `subset`.
    pub fn w(&self, subset: u64, c: usize) -> f64 {
        assert!(
            self.mask.reads_weight(subset, c),
            "peon read weight {c} at subset {subset:#b} outside its dependency mask"
        );
        self.point.weight(subset, c)
    }

    /// Order `j` at `subset`.
    pub fn order(&self, subset: u64, j: usize) -> &Perm {
        assert!(
            self.mask.reads_order(subset, j),
            "peon read order {j} at subset {subset:#b} outside its dependency mask"
        );
        self.point.order(subset, j)
    }

    /// The pullback along `map: [k] → [arity]`, filled only at the slots
    /// `inner` reads.
    pub fn pull(&self, map: &[usize], inner: &DependencyMask) -> Point {
        let desc = self.point.descriptor();
        let mut y = Point::zeros(map.len(), None, desc).expect("small arity");
        for slot in inner.slots() {
            match slot {
                Slot::Weight(s, c) => y.set_weight(s, c, self.w(image_mask(map, s), c)),
                Slot::Order(s, j) => {
                    let image = image_mask(map, s);
                    let rank = pull_rank(self.order(image, j), image, positions(s).map(|a| map[a]));
                    y.set_order(s, j, rank);
                }
            }
        }
        y
    }

    /// Copies the slots `inner` reads from the component window starting at
    /// `woff` and degree window starting at `ooff` into a point of `inner`'s
    /// descriptor.
    pub fn project(&self, inner: &DependencyMask, woff: usize, ooff: usize) -> Point {
        let mut y = Point::zeros(self.arity(), None, inner.descriptor()).expect("small arity");
        for slot in inner.slots() {
            match slot {
                Slot::Weight(s, c) => y.set_weight(s, c, self.w(s, c + woff)),
                Slot::Order(s, j) => y.set_order(s, j, self.order(s, j + ooff).clone()),
            }
        }
        y
    }
}

/// Membership predicate body.
pub type PeonFn = Arc<dyn Fn(&PointView<'_>) -> bool + Send + Sync>;

#[derive(Clone)]
enum Eval {
    Func(PeonFn),
    Table(Arc<ChamberGridPeon>),
}

/// Membership predicate on points over `[arity]`.
#[derive(Clone)]
pub struct Peon {
    arity: usize,
    desc: SpaceDescriptor,
    mask: DependencyMask,
    grid: Option<GridSpec>,
    eval: Eval,
}

impl fmt::Debug for Peon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Peon")
            .field("arity", &self.arity)
            .field("desc", &self.desc)
            .field("slots", &self.mask.slots())
            .field("grid", &self.grid)
            .finish()
    }
}

impl Peon {
    pub fn new(mask: DependencyMask, f: impl Fn(&PointView<'_>) -> bool + Send + Sync + 'static) -> Self {
        Peon { arity: mask.arity, desc: mask.descriptor(), mask, grid: None, eval: Eval::Func(Arc::new(f)) }
    }

    /// Declares that membership is constant on the chambers of `grid`.
    pub fn with_grid(mut self, grid: GridSpec) -> Result<Self> {
        ChamberLayout::new(&grid, &self.mask.weight_slots(), &self.mask.order_slots())?;
        if grid.levels.len() != self.desc.width {
            return Err(Error::DescriptorMismatch("grid has the wrong number of components".into()));
        }
        self.grid = Some(grid);
        Ok(self)
    }

    /// The peon that never holds.
    pub fn never(arity: usize, desc: SpaceDescriptor) -> Self {
        Peon::new(DependencyMask::empty(arity, desc), |_| false)
            .with_grid(GridSpec::empty(desc.width))
            .expect("empty grid")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        self.desc
    }

    pub fn mask(&self) -> &DependencyMask {
        &self.mask
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }

    pub fn is_chamber_grid(&self) -> bool {
        self.grid.is_some()
    }

    /// Membership of a point over `[arity]`.
    pub fn eval(&self, x: &Point) -> Result<bool> {
        if x.vertex_count() != self.arity {
            return Err(Error::ArityMismatch(format!(
                "peon of arity {} evaluated on a point over {} vertices",
                self.arity,
                x.vertex_count()
            )));
        }
        if x.descriptor() != self.desc {
            return Err(Error::DescriptorMismatch(format!(
                "peon over {} evaluated on a point over {}",
                self.desc,
                x.descriptor()
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Membership without shape checks; reads only masked slots.
    pub fn eval_unchecked(&self, x: &Point) -> bool {
        let view = PointView::new(x, &self.mask);
        match &self.eval {
            Eval::Func(f) => f(&view),
            Eval::Table(t) => t.lookup(&view),
        }
    }

    /// Membership of `α^*(x)` for a tuple `α` of positions of a coordinate source.
    pub fn eval_tuple(&self, source: &dyn CoordinateSource, tuple: &[usize]) -> bool {
        let y = masked_pullback(source, tuple, &self.mask);
        self.eval_unchecked(&y)
    }
}

/// `α^*(x)` restricted to the slots of `mask`, for `α` given by `tuple`.
pub fn masked_pullback(source: &dyn CoordinateSource, tuple: &[usize], mask: &DependencyMask) -> Point {
    let k = tuple.len();
    let desc = source.descriptor();
    let mut y = Point::zeros(k, None, desc).expect("small arity");
    let mut image: Vec<usize> = Vec::with_capacity(k);
    for s in 1..=full_mask(k) {
        if !mask.reads_subset(s) {
            continue;
        }
        image.clear();
        image.extend(positions(s).map(|a| tuple[a]));
        let mut sorted = image.clone();
        sorted.sort_unstable();
        let coord = source.coordinate(&sorted);
        for c in 0..desc.width {
            if mask.reads_weight(s, c) {
                y.set_weight(s, c, coord.weights[c]);
            }
        }
        for j in 0..desc.degree {
            if mask.reads_order(s, j) {
                let rank = &coord.orders[j];
                let pulled: Vec<usize> =
                    image.iter().map(|b| rank.get(sorted.binary_search(b).expect("member"))).collect();
                y.set_order(s, j, Perm::from_vec(pulled).expect("bijection"));
            }
        }
    }
    y
}

/// Membership of a point in a peon, with shape checks.
pub fn eval_peon(peon: &Peon, x: &Point) -> Result<bool> {
    peon.eval(x)
}

/// A peon given by a finite truth table over chambers. Chambers not listed
/// in the table are false.
#[derive(Debug, Clone)]
pub struct ChamberGridPeon {
    mask: DependencyMask,
    grid: GridSpec,
    layout: ChamberLayout,
    truth: HashSet<Vec<u32>>,
    chambers: u64,
}

impl ChamberGridPeon {
    /// Tabulates `f` at one representative of every chamber.
    pub fn tabulate(mask: DependencyMask, grid: GridSpec, f: impl Fn(&PointView<'_>) -> bool) -> Result<Self> {
        let layout = ChamberLayout::new(&grid, &mask.weight_slots(), &mask.order_slots())?;
        let factors = layout.factors()?;
        let chambers = chamber::chamber_total(&factors)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::CapExceeded("chamber table too large".into()))?;
        let base = Point::zeros(mask.arity, None, mask.descriptor())?;
        let mut truth = HashSet::new();
        chamber::for_each_chamber(&layout, &factors, &base, 0..chambers, |x, _| {
            if f(&PointView::new(x, &mask)) {
                truth.insert(layout.key(x));
            }
        });
        Ok(ChamberGridPeon { mask, grid, layout, truth, chambers })
    }

    /// Table from the indices of the true chambers in enumeration order.
    pub fn from_true_chambers(mask: DependencyMask, grid: GridSpec, true_chambers: &[u64]) -> Result<Self> {
        let set: HashSet<u64> = true_chambers.iter().copied().collect();
        let layout = ChamberLayout::new(&grid, &mask.weight_slots(), &mask.order_slots())?;
        let factors = layout.factors()?;
        let chambers = chamber::chamber_total(&factors)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::CapExceeded("chamber table too large".into()))?;
        if let Some(bad) = set.iter().find(|&&i| i >= chambers) {
            return Err(Error::InvalidArgument(format!("chamber {bad} out of range 0..{chambers}")));
        }
        let base = Point::zeros(mask.arity, None, mask.descriptor())?;
        let mut truth = HashSet::new();
        let mut i = 0u64;
        chamber::for_each_chamber(&layout, &factors, &base, 0..chambers, |x, _| {
            if set.contains(&i) {
                truth.insert(layout.key(x));
            }
            i += 1;
        });
        Ok(ChamberGridPeon { mask, grid, layout, truth, chambers })
    }

    pub fn chamber_count(&self) -> u64 {
        self.chambers
    }

    pub fn true_count(&self) -> usize {
        self.truth.len()
    }

    /// Indices of the true chambers in enumeration order.
    pub fn true_chambers(&self) -> Result<Vec<u64>> {
        let factors = self.layout.factors()?;
        let base = Point::zeros(self.mask.arity, None, self.mask.descriptor())?;
        let mut out = Vec::new();
        let mut i = 0u64;
        chamber::for_each_chamber(&self.layout, &factors, &base, 0..self.chambers, |x, _| {
            if self.truth.contains(&self.layout.key(x)) {
                out.push(i);
            }
            i += 1;
        });
        Ok(out)
    }

    fn lookup(&self, view: &PointView<'_>) -> bool {
        // every slot of the layout is in the mask, so the key is a masked read
        debug_assert!(self
            .layout
            .levels
            .iter()
            .all(|l| l.slots.iter().all(|&s| view.mask.reads_weight(s, l.component))));
        self.truth.contains(&self.layout.key(view.point))
    }
}

impl From<ChamberGridPeon> for Peon {
    fn from(t: ChamberGridPeon) -> Peon {
        Peon {
            arity: t.mask.arity,
            desc: t.mask.descriptor(),
            mask: t.mask.clone(),
            grid: Some(t.grid.clone()),
            eval: Eval::Table(Arc::new(t)),
        }
    }
}

/// A theon: one peon per predicate symbol over a shared space.
#[derive(Clone, Debug)]
pub struct Theon {
    name: String,
    language: Language,
    desc: SpaceDescriptor,
    peons: Vec<Peon>,
}

/// Alternative name for [`Theon`].
pub type EuclideanStructure = Theon;

impl Theon {
    pub fn new(
        name: impl Into<String>,
        language: Language,
        desc: SpaceDescriptor,
        mut peons: BTreeMap<String, Peon>,
    ) -> Result<Self> {
        let mut list = Vec::with_capacity(language.len());
        for p in language.predicates() {
            let peon =
                peons.remove(&p.name).ok_or_else(|| Error::LanguageMismatch(format!("no peon for `{}`", p.name)))?;
            if peon.arity != p.arity {
                return Err(Error::ArityMismatch(format!(
                    "`{}` has arity {} but its peon has arity {}",
                    p.name, p.arity, peon.arity
                )));
            }
            if peon.desc != desc {
                return Err(Error::DescriptorMismatch(format!(
                    "peon of `{}` is over {}, theon over {desc}",
                    p.name, peon.desc
                )));
            }
            list.push(peon);
        }
        if let Some(extra) = peons.keys().next() {
            return Err(Error::LanguageMismatch(format!("peon for unknown symbol `{extra}`")));
        }
        Ok(Theon { name: name.into(), language, desc, peons: list })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        self.desc
    }

    /// Peons in language order.
    pub fn peons(&self) -> &[Peon] {
        &self.peons
    }

    pub fn peon(&self, name: &str) -> Option<&Peon> {
        self.language.index_of(name).map(|i| &self.peons[i])
    }

    pub fn is_chamber_grid(&self) -> bool {
        self.peons.iter().all(Peon::is_chamber_grid)
    }

    /// Common refinement of all peon grids, if every peon has one.
    pub fn grid(&self) -> Option<GridSpec> {
        let mut g = GridSpec::empty(self.desc.width);
        for p in &self.peons {
            g.merge(p.grid()?);
        }
        Some(g)
    }

    /// Renames symbols; names missing from `map` are kept.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Result<Theon> {
        let language = self.language.rename(map)?;
        let peons = self
            .language
            .predicates()
            .iter()
            .zip(&self.peons)
            .map(|(p, peon)| (map.get(&p.name).cloned().unwrap_or_else(|| p.name.clone()), peon.clone()))
            .collect();
        Theon::new(self.name.clone(), language, self.desc, peons)
    }
}

/// The theon restricted to the sublanguage `sub`.
pub fn reduct_theon(n: &Theon, sub: &Language) -> Result<Theon> {
    if !sub.is_sublanguage_of(&n.language) {
        return Err(Error::LanguageMismatch(format!("{sub} is not a sublanguage of {}", n.language)));
    }
    let peons = sub.predicates().iter().map(|p| (p.name.clone(), n.peon(&p.name).expect("checked").clone())).collect();
    Theon::new(format!("{}|{}", n.name, sub), sub.clone(), n.desc, peons)
}

/// Two theons over the same space side by side, in `L1 ⊔ L2`; colliding
/// symbols of `n2` are renamed as in [`Language::disjoint_union`].
pub fn union_theon(n1: &Theon, n2: &Theon) -> Result<Theon> {
    if n1.desc != n2.desc {
        return Err(Error::DescriptorMismatch(format!("{} vs {}", n1.desc, n2.desc)));
    }
    let (language, renames) = n1.language.disjoint_union(&n2.language);
    let mut peons: BTreeMap<String, Peon> =
        n1.language.predicates().iter().zip(&n1.peons).map(|(p, peon)| (p.name.clone(), peon.clone())).collect();
    for (p, peon) in n2.language.predicates().iter().zip(&n2.peons) {
        peons.insert(renames[&p.name].clone(), peon.clone());
    }
    Theon::new(format!("{}+{}", n1.name, n2.name), language, n1.desc, peons)
}

/// `N1 ⊗ N2` over the product space: weights and orders are concatenated and
/// each predicate reads only its own factor.
pub fn independent_coupling(n1: &Theon, n2: &Theon) -> Result<Theon> {
    let desc = SpaceDescriptor { width: n1.desc.width + n2.desc.width, degree: n1.desc.degree + n2.desc.degree };
    let (language, renames) = n1.language.disjoint_union(&n2.language);
    let mut peons = BTreeMap::new();
    let factors = [(n1, 0, 0, None), (n2, n1.desc.width, n1.desc.degree, Some(&renames))];
    for (theon, woff, ooff, rename) in factors {
        for (p, inner) in theon.language.predicates().iter().zip(&theon.peons) {
            let mask = inner.mask.embedded(desc, woff, ooff);
            let sub = inner.clone();
            let mut peon = Peon::new(mask, move |v| {
                let y = v.project(&sub.mask, woff, ooff);
                sub.eval_unchecked(&y)
            });
            if let Some(g) = inner.grid() {
                peon = peon.with_grid(g.shifted(woff, desc.width))?;
            }
            let name = rename.map_or_else(|| p.name.clone(), |r| r[&p.name].clone());
            peons.insert(name, peon);
        }
    }
    Theon::new(format!("{}*{}", n1.name, n2.name), language, desc, peons)
}

/// `I^*(N)`: each source predicate holds on the truth set of its definition.
pub fn interpret_theon(i: &Interpretation, n: &Theon) -> Result<Theon> {
    if i.target() != &n.language {
        return Err(Error::LanguageMismatch(format!(
            "theon is in {}, interpretation targets {}",
            n.language,
            i.target()
        )));
    }
    let mut peons = BTreeMap::new();
    for (p, f) in i.source().predicates().iter().zip(i.definitions()) {
        let k = p.arity;
        if k > MAX_ARITY {
            return Err(Error::CapExceeded(format!("arity {k} exceeds {MAX_ARITY}")));
        }
        let mut mask = DependencyMask::empty(k, n.desc);
        let mut grid = Some(GridSpec::empty(n.desc.width));
        f.expr().visit_atoms(&mut |name, args| {
            let mut sorted = args.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != args.len() {
                return;
            }
            let sub = n.peon(name).expect("checked by the interpretation");
            mask = mask.union(&sub.mask.pushforward(args, k));
            match (&mut grid, sub.grid()) {
                (Some(g), Some(sg)) => g.merge(sg),
                _ => grid = None,
            }
        });
        let theon = n.clone();
        let expr = f.expr().clone();
        let identity: Vec<usize> = (0..k).collect();
        let mut peon = Peon::new(mask, move |v| {
            expr.eval_with(&identity, &mut |name, args| {
                let sub = theon.peon(name).expect("checked");
                sub.eval_unchecked(&v.pull(args, &sub.mask))
            })
        });
        if let Some(g) = grid {
            peon = peon.with_grid(g)?;
        }
        peons.insert(p.name.clone(), peon);
    }
    Theon::new(format!("I({})", n.name), i.source().clone(), n.desc, peons)
}

/// Result of a dependency spot-check.
#[derive(Debug, Clone)]
pub struct DependencyReport {
    pub independent: bool,
    pub trials: u64,
    /// Two points differing only in the resampled slots with different membership.
    pub witness: Option<(Point, Point)>,
}

/// Spot-checks that resampling every coordinate at `subset` never flips membership.
pub fn dependency_check(peon: &Peon, subset: u64, trials: u64, seed: u64) -> Result<DependencyReport> {
    let mut slots: Vec<Slot> = (0..peon.desc.width).map(|c| Slot::Weight(subset, c)).collect();
    slots.extend((0..peon.desc.degree).map(|j| Slot::Order(subset, j)));
    dependency_check_slots(peon, &slots, trials, seed)
}

/// Spot-checks that resampling the given slots never flips membership.
pub fn dependency_check_slots(peon: &Peon, slots: &[Slot], trials: u64, seed: u64) -> Result<DependencyReport> {
    let k = peon.arity;
    for s in slots {
        let m = match s {
            Slot::Weight(m, _) | Slot::Order(m, _) => *m,
        };
        if m == 0 || m > full_mask(k) {
            return Err(Error::InvalidArgument(format!("subset {m:#b} outside r([{k}])")));
        }
    }
    let v = VertexSet::range(k);
    let results = crate::exec::map_chunks(trials, 256, |range| {
        for t in range {
            let s = derive_seed(seed, t);
            let x = sample_point(&v, None, peon.desc, s).expect("small arity");
            let fresh = SeededSource::new(&v, peon.desc, derive_seed(s, 0x5eed));
            let mut y = x.clone();
            for slot in slots {
                match *slot {
                    Slot::Weight(m, c) => {
                        y.set_weight(m, c, fresh.coordinate(&positions(m).collect::<Vec<_>>()).weights[c])
                    }
                    Slot::Order(m, j) => {
                        let o = fresh.coordinate(&positions(m).collect::<Vec<_>>()).orders[j].clone();
                        y.set_order(m, j, o)
                    }
                }
            }
            if peon.eval_unchecked(&x) != peon.eval_unchecked(&y) {
                return Some((x, y));
            }
        }
        None
    });
    let witness = results.into_iter().flatten().next();
    Ok(DependencyReport { independent: witness.is_none(), trials, witness })
}
