//! Points of the coordinate space over a finite vertex set, linear orders,
//! injections and their pullbacks.
//!
//! Points are positional: a point over `n` vertices stores one coordinate per
//! non-empty subset of `{0, .., n-1}`, addressed by the subset's bitmask.
//! Vertex labels only matter at the edges (serialization, structures); a
//! [`VertexSet`] supplies them and fixes the position of every label.
//!
//! A linear order of an `s`-element ground set is a [`Perm`] read as a rank
//! array: `rank[u]` is the position of element `u` in the order. Read as a
//! permutation in one-line notation the same array is the `π` whose pullback
//! of the natural order is the stored order, so pulling an order back along a
//! bijection `β` is the composition `rank ∘ β`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rng;

/// Largest vertex count of a materialized point.
pub const MAX_DENSE_VERTICES: usize = 20;
/// Default cap on the size of a ground set whose orders are enumerated.
pub const FACTORIAL_CAP: usize = 8;

/// Shape of one coordinate: `width` weights in `[0,1)` and `degree` orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub width: usize,
    pub degree: usize,
}

impl SpaceDescriptor {
    pub fn new(width: usize, degree: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidArgument("weight width must be at least 1".into()));
        }
        Ok(SpaceDescriptor { width, degree })
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, d={})", self.width, self.degree)
    }
}

/// Finite vertex set with labels in lexicographic order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexSet(Arc<[String]>);

impl VertexSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut v: Vec<String> = labels.into_iter().map(Into::into).collect();
        v.sort();
        for w in v.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidArgument(format!("duplicate vertex `{}`", w[0])));
            }
        }
        if let Some(bad) = v.iter().find(|l| l.is_empty() || l.contains(',')) {
            return Err(Error::InvalidArgument(format!("vertex labels must be non-empty and comma-free, got `{bad}`")));
        }
        Ok(VertexSet(v.into()))
    }

    /// The vertex set `{"1", .., "n"}`.
    pub fn range(n: usize) -> Self {
        let mut v: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        v.sort();
        VertexSet(v.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn label(&self, pos: usize) -> &str {
        &self.0[pos]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.0.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// Key of every vertex for the coordinate RNG.
    pub fn keys(&self) -> Vec<u64> {
        self.0.iter().map(|l| rng::label_key(l)).collect()
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// Injective map between vertex sets, stored by positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Injection {
    domain: VertexSet,
    codomain: VertexSet,
    map: Vec<usize>,
}

impl Injection {
    pub fn new(domain: VertexSet, codomain: VertexSet, map: Vec<usize>) -> Result<Self> {
        if map.len() != domain.len() {
            return Err(Error::NotInjective(format!("map has {} entries for a domain of {}", map.len(), domain.len())));
        }
        let mut seen = vec![false; codomain.len()];
        for &b in &map {
            if b >= codomain.len() {
                return Err(Error::NotInjective(format!("position {b} outside codomain")));
            }
            if std::mem::replace(&mut seen[b], true) {
                return Err(Error::NotInjective(format!("two vertices map to `{}`", codomain.label(b))));
            }
        }
        Ok(Injection { domain, codomain, map })
    }

    /// Builds an injection from label pairs `(a, α(a))`.
    pub fn from_labels(domain: VertexSet, codomain: VertexSet, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut map = vec![usize::MAX; domain.len()];
        for (a, b) in pairs {
            let i = domain.position(a).ok_or_else(|| Error::VertexMismatch(format!("`{a}` not in domain")))?;
            let j = codomain.position(b).ok_or_else(|| Error::VertexMismatch(format!("`{b}` not in codomain")))?;
            map[i] = j;
        }
        if map.contains(&usize::MAX) {
            return Err(Error::NotInjective("map is not total on the domain".into()));
        }
        Injection::new(domain, codomain, map)
    }

    pub fn identity(v: &VertexSet) -> Self {
        Injection { domain: v.clone(), codomain: v.clone(), map: (0..v.len()).collect() }
    }

    /// Order-preserving inclusion of the subset `mask` of `codomain`, with the
    /// subset's own labels as domain.
    pub fn inclusion(codomain: &VertexSet, mask: u64) -> Self {
        let map: Vec<usize> = positions(mask).collect();
        let domain = VertexSet(map.iter().map(|&p| codomain.label(p).to_string()).collect());
        Injection { domain, codomain: codomain.clone(), map }
    }

    pub fn domain(&self) -> &VertexSet {
        &self.domain
    }

    pub fn codomain(&self) -> &VertexSet {
        &self.codomain
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, pos: usize) -> usize {
        self.map[pos]
    }

    pub fn is_bijective(&self) -> bool {
        self.domain.len() == self.codomain.len()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Injection) -> Result<Injection> {
        if inner.codomain != self.domain {
            return Err(Error::VertexMismatch("composition of non-matching injections".into()));
        }
        Ok(Injection {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            map: inner.map.iter().map(|&a| self.map[a]).collect(),
        })
    }

    /// Image of a subset mask of the domain.
    pub fn image_mask(&self, mask: u64) -> u64 {
        image_mask(&self.map, mask)
    }
}

/// Image of `mask` under a position map.
pub fn image_mask(map: &[usize], mask: u64) -> u64 {
    positions(mask).fold(0, |acc, p| acc | 1u64 << map[p])
}

/// Bitmask of a list of positions.
pub fn bits(positions: &[usize]) -> u64 {
    positions.iter().fold(0, |acc, &p| acc | 1u64 << p)
}

/// Positions in a mask, increasing.
pub fn positions(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let p = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(p)
        }
    })
}

/// Rank of position `p` inside `mask` (number of members below it).
pub fn rank_in(mask: u64, p: usize) -> usize {
    (mask & ((1u64 << p) - 1)).count_ones() as usize
}

/// The full mask on `n` positions.
pub fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Non-empty subsets of `{0..n}` (size at most `ell`), by size then lexicographically.
pub fn subset_masks(n: usize, ell: Option<usize>) -> Vec<u64> {
    let top = ell.unwrap_or(n).min(n);
    let mut out = Vec::new();
    for size in 1..=top {
        combinations(n, size, |c| out.push(bits(c)));
    }
    out
}

/// Calls `f` on every `size`-combination of `{0..n}` in lexicographic order.
pub fn combinations(n: usize, size: usize, mut f: impl FnMut(&[usize])) {
    if size > n {
        return;
    }
    let mut c: Vec<usize> = (0..size).collect();
    loop {
        f(&c);
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] < n - size + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        c[i] += 1;
        for j in i + 1..size {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Non-empty subsets of `V` (of size at most `ell`), by size then lexicographically.
pub fn r_sets(v: &VertexSet, ell: Option<usize>) -> Vec<Vec<String>> {
    assert!(v.len() <= 64, "r_sets is limited to 64 vertices");
    subset_masks(v.len(), ell).into_iter().map(|m| positions(m).map(|p| v.label(p).to_string()).collect()).collect()
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Permutation of `{0..s}` in 0-based one-line notation; also the rank array
/// of a linear order (see the module documentation).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(SmallVec<[u8; 8]>);

impl Perm {
    pub fn identity(s: usize) -> Self {
        Perm((0..s as u8).collect())
    }

    pub fn from_vec(v: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; v.len()];
        for &x in &v {
            if x >= v.len() || std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidArgument(format!("{v:?} is not a permutation")));
            }
        }
        Ok(Perm(v.into_iter().map(|x| x as u8).collect()))
    }

    /// The order whose elements, listed from first to last, are `ranked`.
    pub fn from_ranked(ranked: &[usize]) -> Result<Self> {
        Ok(Perm::from_vec(ranked.to_vec())?.inverse())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, u: usize) -> usize {
        self.0[u] as usize
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// `(self ∘ other)[u] = self[other[u]]`.
    pub fn compose(&self, other: &Perm) -> Perm {
        debug_assert_eq!(self.len(), other.len());
        Perm(other.0.iter().map(|&u| self.0[u as usize]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = SmallVec::from_elem(0u8, self.len());
        for (u, &r) in self.0.iter().enumerate() {
            inv[r as usize] = u as u8;
        }
        Perm(inv)
    }

    /// Elements listed by increasing rank.
    pub fn ranked(&self) -> Vec<usize> {
        self.inverse().0.iter().map(|&u| u as usize).collect()
    }

    /// Whether `u` comes before `v` in the order.
    pub fn precedes(&self, u: usize, v: usize) -> bool {
        self.0[u] < self.0[v]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &r)| i == r as usize)
    }

    /// 0-based position of this permutation in the lexicographic enumeration
    /// of one-line notations.
    pub fn lex_index(&self) -> u64 {
        let s = self.len();
        let mut idx = 0u64;
        for i in 0..s {
            let smaller = self.0[i + 1..].iter().filter(|&&x| x < self.0[i]).count() as u64;
            idx += smaller * factorial(s - 1 - i);
        }
        idx
    }

    /// Inverse of [`Perm::lex_index`].
    pub fn from_lex_index(s: usize, mut idx: u64) -> Perm {
        let mut pool: Vec<u8> = (0..s as u8).collect();
        let mut out = SmallVec::with_capacity(s);
        for i in 0..s {
            let f = factorial(s - 1 - i);
            let q = (idx / f) as usize;
            idx %= f;
            out.push(pool.remove(q));
        }
        Perm(out)
    }

    /// Uniformly random permutation.
    pub fn random<R: Rng + ?Sized>(s: usize, rng: &mut R) -> Perm {
        let mut v: SmallVec<[u8; 8]> = (0..s as u8).collect();
        v.shuffle(rng);
        Perm(v)
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

/// All permutations of `{0..s}` in lexicographic order of one-line notation.
pub fn all_perms(s: usize) -> Result<Vec<Perm>> {
    if s > FACTORIAL_CAP {
        return Err(Error::CapExceeded(format!("{s}! orders exceed the factorial cap")));
    }
    Ok((0..factorial(s)).map(|i| Perm::from_lex_index(s, i)).collect())
}

/// A linear order of a labeled ground set, as the ranked list of its elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderAssignment {
    pub ranked: Vec<String>,
}

impl OrderAssignment {
    pub fn new<S: Into<String>>(ranked: impl IntoIterator<Item = S>) -> Result<Self> {
        let ranked: Vec<String> = ranked.into_iter().map(Into::into).collect();
        VertexSet::new(ranked.clone())?;
        Ok(OrderAssignment { ranked })
    }

    /// The order `perm` (rank array) on the ground set `ground`.
    pub fn from_perm(ground: &VertexSet, perm: &Perm) -> Self {
        OrderAssignment { ranked: perm.ranked().into_iter().map(|u| ground.label(u).to_string()).collect() }
    }

    pub fn ground(&self) -> VertexSet {
        VertexSet::new(self.ranked.clone()).expect("validated on construction")
    }

    /// Rank array over the sorted ground set.
    pub fn to_perm(&self) -> Perm {
        let ground = self.ground();
        let mut rank = vec![0usize; self.ranked.len()];
        for (r, l) in self.ranked.iter().enumerate() {
            rank[ground.position(l).expect("member")] = r;
        }
        Perm::from_vec(rank).expect("bijection")
    }
}

/// All orders of `a` in the fixed lexicographic enumeration.
pub fn all_orders(a: &VertexSet) -> Result<Vec<OrderAssignment>> {
    Ok(all_perms(a.len())?.iter().map(|p| OrderAssignment::from_perm(a, p)).collect())
}

/// Pullback of an order along a bijection onto its ground set:
/// `u1` precedes `u2` iff `α(u1)` precedes `α(u2)`.
pub fn pullback_order(alpha: &Injection, order: &OrderAssignment) -> Result<OrderAssignment> {
    if !alpha.is_bijective() || alpha.codomain() != &order.ground() {
        return Err(Error::NotInjective("pullback of an order needs a bijection onto its ground set".into()));
    }
    let rank = order.to_perm();
    let pulled = Perm(alpha.map().iter().map(|&b| rank.0[b]).collect());
    Ok(OrderAssignment::from_perm(alpha.domain(), &pulled))
}

/// Value of one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Coord {
    pub weights: SmallVec<[f64; 4]>,
    pub orders: SmallVec<[Perm; 2]>,
}

/// Anything that can produce coordinates by subset.
pub trait CoordinateSource: Sync {
    fn descriptor(&self) -> SpaceDescriptor;
    fn vertex_count(&self) -> usize;
    /// Coordinate of the subset given by increasing positions.
    fn coordinate(&self, subset: &[usize]) -> Coord;
}

/// A point over `n` positional vertices, dense by subset mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    n: usize,
    ell: Option<usize>,
    desc: SpaceDescriptor,
    weights: Vec<f64>,
    orders: Vec<Perm>,
}

impl Point {
    /// A point with every weight `0` and every order the natural one.
    pub fn zeros(n: usize, ell: Option<usize>, desc: SpaceDescriptor) -> Result<Self> {
        if n > MAX_DENSE_VERTICES {
            return Err(Error::CapExceeded(format!(
                "dense points hold at most {MAX_DENSE_VERTICES} vertices, got {n}"
            )));
        }
        let slots = (1usize << n) - 1;
        let mut weights = vec![f64::NAN; slots * desc.width];
        let mut orders = vec![Perm::identity(0); slots * desc.degree];
        for mask in 1..=slots as u64 {
            if ell.is_some_and(|l| mask.count_ones() as usize > l) {
                continue;
            }
            let i = (mask - 1) as usize;
            weights[i * desc.width..(i + 1) * desc.width].fill(0.0);
            let id = Perm::identity(mask.count_ones() as usize);
            orders[i * desc.degree..(i + 1) * desc.degree].fill(id);
        }
        Ok(Point { n, ell, desc, weights, orders })
    }

    /// Materializes all coordinates of `source` (up to the cap `ell`).
    pub fn from_source(source: &dyn CoordinateSource, ell: Option<usize>) -> Result<Self> {
        let n = source.vertex_count();
        let desc = source.descriptor();
        let mut x = Point::zeros(n, ell, desc)?;
        let mut buf = Vec::with_capacity(n);
        for mask in 1..=full_mask(n) {
            if !x.contains(mask) {
                continue;
            }
            buf.clear();
            buf.extend(positions(mask));
            x.set(mask, source.coordinate(&buf));
        }
        Ok(x)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> Option<usize> {
        self.ell
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        self.desc
    }

    /// Whether the subset `mask` is in the index set.
    pub fn contains(&self, mask: u64) -> bool {
        mask != 0 && mask <= full_mask(self.n) && self.ell.is_none_or(|l| mask.count_ones() as usize <= l)
    }

    pub fn weight(&self, mask: u64, c: usize) -> f64 {
        debug_assert!(self.contains(mask) && c < self.desc.width);
        self.weights[(mask - 1) as usize * self.desc.width + c]
    }

    pub fn weights(&self, mask: u64) -> &[f64] {
        let i = (mask - 1) as usize * self.desc.width;
        &self.weights[i..i + self.desc.width]
    }

    pub fn order(&self, mask: u64, j: usize) -> &Perm {
        debug_assert!(self.contains(mask) && j < self.desc.degree);
        &self.orders[(mask - 1) as usize * self.desc.degree + j]
    }

    pub fn set_weight(&mut self, mask: u64, c: usize, value: f64) {
        assert!(self.contains(mask), "subset outside the index set");
        self.weights[(mask - 1) as usize * self.desc.width + c] = value;
    }

    pub fn set_order(&mut self, mask: u64, j: usize, order: Perm) {
        assert!(self.contains(mask), "subset outside the index set");
        assert_eq!(order.len(), mask.count_ones() as usize, "order of the wrong ground set");
        self.orders[(mask - 1) as usize * self.desc.degree + j] = order;
    }

    pub fn coord(&self, mask: u64) -> Coord {
        let d = self.desc.degree;
        let i = (mask - 1) as usize;
        Coord {
            weights: self.weights(mask).iter().copied().collect(),
            orders: self.orders[i * d..(i + 1) * d].iter().cloned().collect(),
        }
    }

    pub fn set(&mut self, mask: u64, coord: Coord) {
        assert_eq!(coord.weights.len(), self.desc.width);
        assert_eq!(coord.orders.len(), self.desc.degree);
        for (c, w) in coord.weights.into_iter().enumerate() {
            self.set_weight(mask, c, w);
        }
        for (j, o) in coord.orders.into_iter().enumerate() {
            self.set_order(mask, j, o);
        }
    }

    /// Checks the coordinate invariants.
    pub fn validate(&self) -> Result<()> {
        for mask in 1..=full_mask(self.n) {
            if !self.contains(mask) {
                continue;
            }
            if let Some(w) = self.weights(mask).iter().find(|w| !(0.0..1.0).contains(*w)) {
                return Err(Error::InvalidArgument(format!("weight {w} outside [0,1)")));
            }
            for j in 0..self.desc.degree {
                if self.order(mask, j).len() != mask.count_ones() as usize {
                    return Err(Error::InvalidArgument("order of the wrong ground set".into()));
                }
            }
        }
        Ok(())
    }

    /// JSON map from comma-joined subset labels to `{"w": [..], "orders": [[..]..]}`.
    pub fn to_json(&self, v: &VertexSet) -> Result<serde_json::Value> {
        if v.len() != self.n {
            return Err(Error::VertexMismatch("point and vertex set differ in size".into()));
        }
        let mut map = serde_json::Map::new();
        for mask in subset_masks(self.n, self.ell) {
            let labels: Vec<&str> = positions(mask).map(|p| v.label(p)).collect();
            let ground = VertexSet::new(labels.iter().copied())?;
            let orders: Vec<Vec<String>> = (0..self.desc.degree)
                .map(|j| OrderAssignment::from_perm(&ground, self.order(mask, j)).ranked)
                .collect();
            map.insert(labels.join(","), serde_json::json!({ "w": self.weights(mask), "orders": orders }));
        }
        Ok(serde_json::Value::Object(map))
    }

    /// Inverse of [`Point::to_json`].
    pub fn from_json(
        value: &serde_json::Value,
        v: &VertexSet,
        ell: Option<usize>,
        desc: SpaceDescriptor,
    ) -> Result<Point> {
        #[derive(Deserialize)]
        struct Entry {
            w: Vec<f64>,
            #[serde(default)]
            orders: Vec<Vec<String>>,
        }
        let map: BTreeMap<String, Entry> =
            serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut x = Point::zeros(v.len(), ell, desc)?;
        let mut seen = 0usize;
        for (key, entry) in map {
            let mut mask = 0u64;
            for l in key.split(',') {
                let p = v.position(l).ok_or_else(|| Error::VertexMismatch(format!("unknown vertex `{l}`")))?;
                mask |= 1 << p;
            }
            if !x.contains(mask) || entry.w.len() != desc.width || entry.orders.len() != desc.degree {
                return Err(Error::Parse(format!("coordinate `{key}` does not fit the point")));
            }
            for (c, w) in entry.w.into_iter().enumerate() {
                x.set_weight(mask, c, w);
            }
            for (j, o) in entry.orders.into_iter().enumerate() {
                let order = OrderAssignment::new(o)?;
                let expect: Vec<&str> = positions(mask).map(|p| v.label(p)).collect();
                if order.ground().labels() != expect.as_slice() {
                    return Err(Error::Parse(format!("order at `{key}` has the wrong ground set")));
                }
                x.set_order(mask, j, order.to_perm());
            }
            seen += 1;
        }
        if seen != subset_masks(v.len(), ell).len() {
            return Err(Error::Parse("point is missing coordinates".into()));
        }
        x.validate()?;
        Ok(x)
    }
}

impl CoordinateSource for Point {
    fn descriptor(&self) -> SpaceDescriptor {
        self.desc
    }

    fn vertex_count(&self) -> usize {
        self.n
    }

    fn coordinate(&self, subset: &[usize]) -> Coord {
        self.coord(bits(subset))
    }
}

/// Lazily drawn uniform point: every coordinate comes from its own keyed
/// stream, so it never has to be materialized.
#[derive(Debug, Clone)]
pub struct SeededSource {
    seed: u64,
    desc: SpaceDescriptor,
    keys: Vec<u64>,
}

impl SeededSource {
    pub fn new(v: &VertexSet, desc: SpaceDescriptor, seed: u64) -> Self {
        SeededSource { seed, desc, keys: v.keys() }
    }
}

impl CoordinateSource for SeededSource {
    fn descriptor(&self) -> SpaceDescriptor {
        self.desc
    }

    fn vertex_count(&self) -> usize {
        self.keys.len()
    }

    fn coordinate(&self, subset: &[usize]) -> Coord {
        let key = rng::subset_key(subset.iter().map(|&p| self.keys[p]));
        let mut r = rng::stream_rng(self.seed, key);
        let weights = (0..self.desc.width).map(|_| r.random::<f64>()).collect();
        let orders = (0..self.desc.degree).map(|_| Perm::random(subset.len(), &mut r)).collect();
        Coord { weights, orders }
    }
}

/// Uniform random point over `v`, determined by `seed`.
pub fn sample_point(v: &VertexSet, ell: Option<usize>, desc: SpaceDescriptor, seed: u64) -> Result<Point> {
    Point::from_source(&SeededSource::new(v, desc, seed), ell)
}

/// Pulls the rank array at an image subset back to the preimage subset.
/// `image` is the image mask; `members` lists `α(a)` for the preimage members
/// in increasing order.
pub fn pull_rank(rank: &Perm, image: u64, members: impl Iterator<Item = usize>) -> Perm {
    Perm(members.map(|b| rank.0[rank_in(image, b)]).collect())
}

/// Pullback of a point along a position map `α: [k] → [n]`.
pub fn pullback_positions(map: &[usize], x: &Point) -> Result<Point> {
    let k = map.len();
    if map.iter().any(|&b| b >= x.n) {
        return Err(Error::VertexMismatch("injection leaves the point's vertex set".into()));
    }
    let mut y = Point::zeros(k, x.ell, x.desc)?;
    for mask in 1..=full_mask(k) {
        if !y.contains(mask) {
            continue;
        }
        let image = image_mask(map, mask);
        for c in 0..x.desc.width {
            y.set_weight(mask, c, x.weight(image, c));
        }
        for j in 0..x.desc.degree {
            let pulled = pull_rank(x.order(image, j), image, positions(mask).map(|a| map[a]));
            y.set_order(mask, j, pulled);
        }
    }
    Ok(y)
}

/// `α^*(x)`: the weight at `A` is the weight at `α(A)` and each order at `A`
/// is the pullback of the order at `α(A)`.
pub fn pullback_point(alpha: &Injection, x: &Point) -> Result<Point> {
    if alpha.codomain().len() != x.vertex_count() {
        return Err(Error::VertexMismatch("injection codomain does not index the point".into()));
    }
    pullback_positions(alpha.map(), x)
}

fn spread(v: u32) -> u64 {
    let mut x = v as u64;
    x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
    x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & 0x5555_5555_5555_5555
}

fn gather(z: u64) -> u32 {
    let mut x = z & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x >> 4)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x >> 8)) & 0x0000_ffff_0000_ffff;
    ((x | (x >> 16)) & 0x0000_0000_ffff_ffff) as u32
}

fn to_fixed(t: f64) -> u64 {
    debug_assert!((0.0..1.0).contains(&t));
    (t * 18_446_744_073_709_551_616.0) as u64
}

fn from_fixed(z: u64) -> f64 {
    (z >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Interleaves the binary expansions of `a` and `b` (bits of `a` first).
/// The 64-bit interleaving is a bijection; the returned double keeps its top
/// 53 bits, i.e. 27 bits of `a` and 26 bits of `b`.
pub fn interleave_weights(a: f64, b: f64) -> f64 {
    let (za, zb) = (to_fixed(a) >> 32, to_fixed(b) >> 32);
    from_fixed((spread(za as u32) << 1) | spread(zb as u32))
}

/// Inverse of [`interleave_weights`] up to the retained precision.
pub fn split_weight(t: f64) -> (f64, f64) {
    let z = to_fixed(t);
    let a = (gather(z >> 1) as u64) << 32;
    let b = (gather(z) as u64) << 32;
    (from_fixed(a), from_fixed(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: usize, q: usize) -> SpaceDescriptor {
        SpaceDescriptor::new(p, q).unwrap()
    }

    #[test]
    fn r_sets_examples() {
        assert_eq!(r_sets(&VertexSet::range(1), None), vec![vec!["1".to_string()]]);
        let two: Vec<Vec<&str>> = vec![vec!["1"], vec!["2"], vec!["1", "2"]];
        let got = r_sets(&VertexSet::range(2), None);
        assert_eq!(got, two.iter().map(|s| s.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>());
        assert_eq!(r_sets(&VertexSet::range(3), Some(1)).len(), 3);
        for n in 0..8 {
            assert_eq!(subset_masks(n, None).len(), (1usize << n) - 1);
            let capped: u64 = (1..=2.min(n)).map(|k| binom(n as u64, k as u64)).sum();
            assert_eq!(subset_masks(n, Some(2)).len() as u64, capped);
        }
    }

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn lex_enumeration_round_trips() {
        for s in 0..=5 {
            let all = all_perms(s).unwrap();
            assert_eq!(all.len() as u64, factorial(s));
            for (i, p) in all.iter().enumerate() {
                assert_eq!(p.lex_index(), i as u64);
            }
            assert!(all.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(all_perms(9).is_err());
    }

    #[test]
    fn all_orders_counts() {
        assert_eq!(all_orders(&VertexSet::range(1)).unwrap().len(), 1);
        assert_eq!(all_orders(&VertexSet::range(2)).unwrap().len(), 2);
        let four = all_orders(&VertexSet::range(4)).unwrap();
        assert_eq!(four.len(), 24);
        let distinct: std::collections::HashSet<_> = four.iter().collect();
        assert_eq!(distinct.len(), 24);
    }

    #[test]
    fn order_pullback_relabels() {
        let a = VertexSet::new(["a", "b"]).unwrap();
        let b = VertexSet::range(2);
        let alpha = Injection::from_labels(a, b, &[("a", "2"), ("b", "1")]).unwrap();
        let order = OrderAssignment::new(["1", "2"]).unwrap();
        assert_eq!(pullback_order(&alpha, &order).unwrap().ranked, vec!["b", "a"]);
    }

    #[test]
    fn order_pullback_is_contravariant_on_three_sets() {
        let v = VertexSet::range(3);
        let perms = all_perms(3).unwrap();
        for a in &perms {
            for b in &perms {
                let ia = Injection::new(v.clone(), v.clone(), a.ranked()).unwrap();
                let ib = Injection::new(v.clone(), v.clone(), b.ranked()).unwrap();
                for o in all_orders(&v).unwrap() {
                    let lhs = pullback_order(&ib.compose(&ia).unwrap(), &o).unwrap();
                    let rhs = pullback_order(&ia, &pullback_order(&ib, &o).unwrap()).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn perm_algebra() {
        let p = Perm::from_vec(vec![2, 0, 1]).unwrap();
        assert!(p.compose(&p.inverse()).is_identity());
        assert_eq!(Perm::from_ranked(&p.ranked()).unwrap(), p);
        assert!(Perm::from_vec(vec![0, 0]).is_err());
    }

    #[test]
    fn sample_point_shape_and_reproducibility() {
        let v = VertexSet::range(2);
        let x = sample_point(&v, None, d(1, 1), 3).unwrap();
        assert_eq!(subset_masks(2, None).len(), 3);
        for m in 1..=3u64 {
            assert_eq!(x.order(m, 0).len(), m.count_ones() as usize);
        }
        x.validate().unwrap();
        assert_eq!(x, sample_point(&v, None, d(1, 1), 3).unwrap());
        assert_ne!(x, sample_point(&v, None, d(1, 1), 4).unwrap());
    }

    #[test]
    fn sub_vertex_sets_share_coordinates() {
        let big = VertexSet::range(4);
        let small = VertexSet::new(["2", "4"]).unwrap();
        let xb = sample_point(&big, None, d(2, 1), 11).unwrap();
        let xs = sample_point(&small, None, d(2, 1), 11).unwrap();
        let inc = Injection::inclusion(&big, 0b1010);
        assert_eq!(inc.domain(), &small);
        assert_eq!(pullback_point(&inc, &xb).unwrap(), xs);
    }

    #[test]
    fn weight_mean_and_order_balance() {
        let v = VertexSet::range(2);
        let n = 100_000;
        let mut sum = 0.0;
        for s in 0..n {
            let src = SeededSource::new(&v, d(1, 0), s);
            sum += src.coordinate(&[0]).weights[0];
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
        let mut first = 0;
        for s in 0..10_000 {
            let src = SeededSource::new(&v, d(1, 1), s);
            if src.coordinate(&[0, 1]).orders[0].precedes(0, 1) {
                first += 1;
            }
        }
        assert!((first as f64 / 10_000.0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn pullback_identity_and_functoriality() {
        let v3 = VertexSet::range(3);
        let v4 = VertexSet::range(4);
        let v2 = VertexSet::new(["a", "b"]).unwrap();
        for seed in 0..100 {
            let x = sample_point(&v4, None, d(1, 2), seed).unwrap();
            assert_eq!(pullback_point(&Injection::identity(&v4), &x).unwrap(), x);
            let beta = Injection::new(v3.clone(), v4.clone(), vec![3, 0, 2]).unwrap();
            let alpha = Injection::new(v2.clone(), v3.clone(), vec![2, 1]).unwrap();
            let lhs = pullback_point(&beta.compose(&alpha).unwrap(), &x).unwrap();
            let rhs = pullback_point(&alpha, &pullback_point(&beta, &x).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            assert_eq!(lhs.vertex_count(), 2);
        }
    }

    #[test]
    fn pullback_reads_image_coordinates() {
        let x = sample_point(&VertexSet::range(3), None, d(1, 1), 5).unwrap();
        let y = pullback_positions(&[2, 0], &x).unwrap();
        assert_eq!(y.weight(0b01, 0), x.weight(0b100, 0));
        assert_eq!(y.weight(0b10, 0), x.weight(0b001, 0));
        assert_eq!(y.weight(0b11, 0), x.weight(0b101, 0));
        let o = x.order(0b101, 0);
        assert_eq!(y.order(0b11, 0).precedes(0, 1), o.precedes(1, 0));
    }

    #[test]
    fn capped_points() {
        let x = sample_point(&VertexSet::range(4), Some(2), d(1, 0), 1).unwrap();
        assert!(x.contains(0b11) && !x.contains(0b111));
        x.validate().unwrap();
    }

    #[test]
    fn point_json_round_trip() {
        let v = VertexSet::range(3);
        let x = sample_point(&v, None, d(2, 1), 9).unwrap();
        let j = x.to_json(&v).unwrap();
        let back = Point::from_json(&j, &v, None, d(2, 1)).unwrap();
        assert_eq!(back, x);
        assert_eq!(serde_json::to_string(&back.to_json(&v).unwrap()).unwrap(), serde_json::to_string(&j).unwrap());
    }

    #[test]
    fn interleave_examples() {
        assert_eq!(interleave_weights(0.0, 0.0), 0.0);
        let mut r = rng::stream_rng(1, 2);
        let grid = (1u64 << 26) as f64;
        for _ in 0..10_000 {
            let (a, b): (f64, f64) = (r.random(), r.random());
            let t = interleave_weights(a, b);
            assert!((0.0..1.0).contains(&t));
            let (a2, b2) = split_weight(t);
            assert_eq!((a * grid).floor(), (a2 * grid).floor());
            assert_eq!((b * grid).floor(), (b2 * grid).floor());
        }
    }
}
