//! Realizing structures from points and sampling them.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::exec;
use crate::peon::Theon;
use crate::rng::derive_seed;
use crate::space::{
    bits, full_mask, subset_masks, Coord, CoordinateSource, Point, SeededSource, SpaceDescriptor, VertexSet,
    MAX_DENSE_VERTICES,
};
use crate::symbols::{Structure, StructureCode, TupleIndex};

/// Above this many coordinate draws, sampling streams coordinates lazily.
pub const LAZY_DRAWS: u64 = 1_000_000;

/// Pinned coordinates over a vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPoint {
    vertices: VertexSet,
    desc: SpaceDescriptor,
    coords: BTreeMap<u64, Coord>,
}

impl PartialPoint {
    pub fn new(vertices: VertexSet, desc: SpaceDescriptor) -> Self {
        PartialPoint { vertices, desc, coords: BTreeMap::new() }
    }

    /// Pins the coordinate at the subset `mask` of vertex positions.
    pub fn pin(&mut self, mask: u64, coord: Coord) -> Result<()> {
        if mask == 0 || self.vertices.len() > 64 || mask > full_mask(self.vertices.len()) {
            return Err(Error::InvalidArgument(format!("subset {mask:#b} outside the vertex set")));
        }
        if coord.weights.len() != self.desc.width || coord.orders.len() != self.desc.degree {
            return Err(Error::DescriptorMismatch("pinned coordinate has the wrong shape".into()));
        }
        if let Some(w) = coord.weights.iter().find(|w| !(0.0..1.0).contains(*w)) {
            return Err(Error::InvalidArgument(format!("pinned weight {w} outside [0,1)")));
        }
        if coord.orders.iter().any(|o| o.len() != mask.count_ones() as usize) {
            return Err(Error::InvalidArgument("pinned order of the wrong ground set".into()));
        }
        self.coords.insert(mask, coord);
        Ok(())
    }

    /// Pins the coordinate at a subset given by labels.
    pub fn pin_labels(&mut self, subset: &[&str], coord: Coord) -> Result<()> {
        let pos = subset
            .iter()
            .map(|l| self.vertices.position(l).ok_or_else(|| Error::VertexMismatch(format!("unknown vertex `{l}`"))))
            .collect::<Result<Vec<_>>>()?;
        self.pin(bits(&pos), coord)
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        self.desc
    }

    pub fn get(&self, mask: u64) -> Option<&Coord> {
        self.coords.get(&mask)
    }

    pub fn pinned(&self) -> impl Iterator<Item = (&u64, &Coord)> {
        self.coords.iter()
    }
}

/// Fresh coordinates except where pinned.
struct PinnedSource<'a> {
    pinned: &'a PartialPoint,
    base: SeededSource,
}

impl CoordinateSource for PinnedSource<'_> {
    fn descriptor(&self) -> SpaceDescriptor {
        self.base.descriptor()
    }

    fn vertex_count(&self) -> usize {
        self.base.vertex_count()
    }

    fn coordinate(&self, subset: &[usize]) -> Coord {
        match self.pinned.get(bits(subset)) {
            Some(c) => c.clone(),
            None => self.base.coordinate(subset),
        }
    }
}

/// Code of the realized structure over `index`, evaluating tuples in index order.
pub fn realize_code(n: &Theon, source: &dyn CoordinateSource, index: &TupleIndex) -> StructureCode {
    let mut code = StructureCode::zeros(index.len());
    let peons = n.peons();
    let entries = index.entries();
    if entries.len() <= 4096 {
        for (b, (pi, t)) in entries.iter().enumerate() {
            if peons[*pi].eval_tuple(source, t) {
                code.set(b);
            }
        }
        return code;
    }
    let parts = exec::map_chunks(entries.len() as u64, 4096, |r| {
        r.filter(|&b| {
            let (pi, t) = &entries[b as usize];
            peons[*pi].eval_tuple(source, t)
        })
        .collect::<Vec<_>>()
    });
    for b in parts.into_iter().flatten() {
        code.set(b as usize);
    }
    code
}

fn check_source(n: &Theon, source: &dyn CoordinateSource, v: &VertexSet) -> Result<()> {
    if source.descriptor() != n.descriptor() {
        return Err(Error::DescriptorMismatch(format!(
            "theon over {}, point over {}",
            n.descriptor(),
            source.descriptor()
        )));
    }
    if source.vertex_count() != v.len() {
        return Err(Error::VertexMismatch("point and vertex set differ in size".into()));
    }
    Ok(())
}

/// `M^N_V(x)`: `P` holds on `α` iff `α^*(x)` is in the peon of `P`.
pub fn realize_structure(n: &Theon, v: &VertexSet, x: &Point) -> Result<Structure> {
    check_source(n, x, v)?;
    if x.ell().is_some_and(|l| l < n.language().max_arity()) {
        return Err(Error::VertexMismatch("point is capped below the language's arity".into()));
    }
    realize_from_source(n, v, x)
}

/// Realizes a structure from any coordinate source.
pub fn realize_from_source(n: &Theon, v: &VertexSet, source: &dyn CoordinateSource) -> Result<Structure> {
    check_source(n, source, v)?;
    let index = TupleIndex::new(n.language(), v.len());
    let code = realize_code(n, source, &index);
    Ok(Structure::from_code(n.language(), v, &index, &code))
}

/// Number of coordinates a realization over `n` vertices reads at most.
fn draws_needed(n: usize, max_arity: usize) -> u64 {
    let mut total = 0u64;
    let mut c = 1u64;
    for k in 1..=max_arity.min(n) {
        c = c * (n - k + 1) as u64 / k as u64;
        total = total.saturating_add(c);
    }
    total
}

/// Whether sampling over `n` vertices materializes the point.
pub fn materializes(n: usize) -> bool {
    n <= MAX_DENSE_VERTICES && (1u64 << n) - 1 <= LAZY_DRAWS
}

fn realize_seeded(n: &Theon, v: &VertexSet, source: &dyn CoordinateSource, index: &TupleIndex) -> StructureCode {
    if materializes(v.len()) && draws_needed(v.len(), n.language().max_arity()) > 0 {
        let x = Point::from_source(source, Some(n.language().max_arity())).expect("dense size");
        realize_code(n, &x, index)
    } else {
        realize_code(n, source, index)
    }
}

/// A structure drawn from `μ^N_V`.
pub fn sample_structure(n: &Theon, v: &VertexSet, seed: u64) -> Result<Structure> {
    let source = SeededSource::new(v, n.descriptor(), seed);
    let index = TupleIndex::new(n.language(), v.len());
    let code = realize_seeded(n, v, &source, &index);
    Ok(Structure::from_code(n.language(), v, &index, &code))
}

/// A structure drawn with the pinned coordinates held fixed.
pub fn sample_conditional(n: &Theon, v: &VertexSet, pinned: &PartialPoint, seed: u64) -> Result<Structure> {
    check_pinned(n, v, pinned)?;
    let source = PinnedSource { pinned, base: SeededSource::new(v, n.descriptor(), seed) };
    let index = TupleIndex::new(n.language(), v.len());
    let code = realize_seeded(n, v, &source, &index);
    Ok(Structure::from_code(n.language(), v, &index, &code))
}

fn check_pinned(n: &Theon, v: &VertexSet, pinned: &PartialPoint) -> Result<()> {
    if pinned.vertices() != v {
        return Err(Error::VertexMismatch("pinned point is over another vertex set".into()));
    }
    if pinned.descriptor() != n.descriptor() {
        return Err(Error::DescriptorMismatch("pinned point has the wrong descriptor".into()));
    }
    Ok(())
}

/// Counts of sampled structure codes over `v`; sample `i` uses seed
/// `derive_seed(seed, i)`. Identical for any worker count.
pub fn sample_histogram(
    n: &Theon,
    v: &VertexSet,
    pinned: Option<&PartialPoint>,
    samples: u64,
    seed: u64,
) -> Result<(TupleIndex, BTreeMap<StructureCode, u64>)> {
    if let Some(p) = pinned {
        check_pinned(n, v, p)?;
    }
    let index = TupleIndex::new(n.language(), v.len());
    let parts = exec::map_chunks(samples, 1024, |range| {
        let mut counts: HashMap<StructureCode, u64> = HashMap::new();
        for i in range {
            let base = SeededSource::new(v, n.descriptor(), derive_seed(seed, i));
            let code = match pinned {
                Some(p) => realize_seeded(n, v, &PinnedSource { pinned: p, base }, &index),
                None => realize_seeded(n, v, &base, &index),
            };
            *counts.entry(code).or_default() += 1;
        }
        counts
    });
    let mut total = BTreeMap::new();
    for part in parts {
        for (c, k) in part {
            *total.entry(c).or_default() += k;
        }
    }
    Ok((index, total))
}

/// Low-arity subsets of `[n]` (size at most `ell`), in `r_sets` order.
pub fn low_subsets(n: usize, ell: usize) -> Vec<u64> {
    subset_masks(n, Some(ell))
}
