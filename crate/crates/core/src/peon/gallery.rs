//! Named example theons.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::peon::{ChamberGridPeon, DependencyMask, GridSpec, Peon, PointView, Theon};
use crate::realization::{sigma_sort, tau};
use crate::space::{bits, factorial, full_mask, SpaceDescriptor};
use crate::symbols::Language;

/// How the weight-only orientation reads its chamber: `σ_x = τ_k(x_[k])`
/// (`Direct`) or `σ_x = τ_k(x_[k])^{-1}` (`Inverse`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    #[default]
    Direct,
    Inverse,
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Convention::Direct),
            "inverse" => Ok(Convention::Inverse),
            _ => Err(Error::InvalidArgument(format!("convention must be direct or inverse, got `{s}`"))),
        }
    }
}

/// Parameters of parametrized gallery entries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GalleryParams {
    pub k: Option<usize>,
    pub convention: Convention,
}

impl GalleryParams {
    pub fn with_k(k: usize) -> Self {
        GalleryParams { k: Some(k), ..Default::default() }
    }
}

/// A gallery entry.
#[derive(Debug, Clone, Copy)]
pub struct GalleryEntry {
    pub name: &'static str,
    pub summary: &'static str,
    /// Default `k` for parametrized entries.
    pub default_k: Option<usize>,
    pub exact: bool,
}

pub const GALLERY: &[GalleryEntry] = &[
    GalleryEntry { name: "qr_graph", summary: "edge iff the pair weight is below 1/2", default_k: None, exact: true },
    GalleryEntry {
        name: "twist_graph",
        summary: "edge iff (w_v + w_w + w_vw) mod 1 < 1/2",
        default_k: None,
        exact: false,
    },
    GalleryEntry {
        name: "bipartite_graph",
        summary: "edge iff exactly one endpoint weight is below 1/2",
        default_k: None,
        exact: true,
    },
    GalleryEntry {
        name: "qr_tournament_0",
        summary: "arc v->w iff exactly one of w_v < w_w and w_vw < 1/2",
        default_k: None,
        exact: true,
    },
    GalleryEntry {
        name: "disc_3hypergraph",
        summary: "low vertex weight: triple weight below 1/2; otherwise odd number of low pair weights",
        default_k: None,
        exact: true,
    },
    GalleryEntry {
        name: "odd_3hypergraph",
        summary: "edge iff an odd number of pair weights are below 1/2",
        default_k: None,
        exact: true,
    },
    GalleryEntry {
        name: "cycle_3hypergraph",
        summary: "edge iff the qr_tournament_0 arcs of the triple form a directed cycle",
        default_k: None,
        exact: true,
    },
    GalleryEntry {
        name: "semitwist_graph",
        summary: "qr_graph when some endpoint weight is below 1/2, twist_graph otherwise",
        default_k: None,
        exact: false,
    },
    GalleryEntry {
        name: "kqrO_1theon",
        summary: "k-orientation read off the order variable of the k-set",
        default_k: Some(2),
        exact: true,
    },
    GalleryEntry {
        name: "kqrO_0theon",
        summary: "k-orientation from the top weight cell and the ranking of co-singleton weights",
        default_k: Some(2),
        exact: true,
    },
];

/// Builds a named gallery theon.
pub fn gallery(name: &str, params: &GalleryParams) -> Result<Theon> {
    let w1 = SpaceDescriptor { width: 1, degree: 0 };
    let need_k = || -> Result<usize> {
        let k = params.k.ok_or_else(|| Error::InvalidArgument(format!("`{name}` needs a parameter k")))?;
        if k == 0 || k > 6 {
            return Err(Error::CapExceeded(format!("k = {k} outside 1..=6")));
        }
        Ok(k)
    };
    let single = |pred: &str, arity: usize, desc: SpaceDescriptor, peon: Peon| -> Result<Theon> {
        let mut peons = BTreeMap::new();
        peons.insert(pred.to_string(), peon);
        Theon::new(name, Language::new([(pred, arity)])?, desc, peons)
    };
    let (a, b, ab) = (bits(&[0]), bits(&[1]), bits(&[0, 1]));
    match name {
        "qr_graph" => {
            let mask = DependencyMask::empty(2, w1).with_weight(ab, 0);
            let peon =
                Peon::new(mask, move |v| v.w(ab, 0) < 0.5).with_grid(GridSpec::empty(1).with_level(0, 2, 2, false))?;
            single("E", 2, w1, peon)
        }
        "twist_graph" => {
            let mask = DependencyMask::empty(2, w1).with_weight(a, 0).with_weight(b, 0).with_weight(ab, 0);
            single("E", 2, w1, Peon::new(mask, move |v| frac(v.w(a, 0) + v.w(b, 0) + v.w(ab, 0)) < 0.5))
        }
        "bipartite_graph" => {
            let mask = DependencyMask::empty(2, w1).with_weight(a, 0).with_weight(b, 0);
            let peon = Peon::new(mask, move |v| (v.w(a, 0) < 0.5) != (v.w(b, 0) < 0.5))
                .with_grid(GridSpec::empty(1).with_level(0, 1, 2, false))?;
            single("E", 2, w1, peon)
        }
        "qr_tournament_0" => {
            let mask = DependencyMask::empty(2, w1).with_weight(a, 0).with_weight(b, 0).with_weight(ab, 0);
            let peon = Peon::new(mask, move |v| arc(v, 0, 1))
                .with_grid(GridSpec::empty(1).with_level(0, 1, 1, true).with_level(0, 2, 2, false))?;
            single("P", 2, w1, peon)
        }
        "disc_3hypergraph" => {
            let mask = DependencyMask::full(3, w1);
            let peon = Peon::new(mask, |v| {
                let low = [1, 2, 4].iter().any(|&s| v.w(s, 0) < 0.5);
                if low {
                    v.w(7, 0) < 0.5
                } else {
                    odd_low_pairs(v)
                }
            })
            .with_grid(
                GridSpec::empty(1).with_level(0, 1, 2, false).with_level(0, 2, 2, false).with_level(0, 3, 2, false),
            )?;
            single("H", 3, w1, peon)
        }
        "odd_3hypergraph" => {
            let mask = DependencyMask::empty(3, w1).with_weight(3, 0).with_weight(5, 0).with_weight(6, 0);
            let peon = Peon::new(mask, odd_low_pairs).with_grid(GridSpec::empty(1).with_level(0, 2, 2, false))?;
            single("H", 3, w1, peon)
        }
        "cycle_3hypergraph" => {
            let mut mask = DependencyMask::empty(3, w1);
            for s in [1, 2, 4, 3, 5, 6] {
                mask = mask.with_weight(s, 0);
            }
            let peon = Peon::new(mask, |v| {
                let (o01, o12, o02) = (arc(v, 0, 1), arc(v, 1, 2), arc(v, 0, 2));
                o01 == o12 && o02 != o01
            })
            .with_grid(GridSpec::empty(1).with_level(0, 1, 1, true).with_level(0, 2, 2, false))?;
            single("H", 3, w1, peon)
        }
        "semitwist_graph" => {
            let mask = DependencyMask::empty(2, w1).with_weight(a, 0).with_weight(b, 0).with_weight(ab, 0);
            let peon = Peon::new(mask, move |v| {
                let (x1, x2, x12) = (v.w(a, 0), v.w(b, 0), v.w(ab, 0));
                if x1.min(x2) < 0.5 {
                    x12 < 0.5
                } else {
                    frac(x1 + x2 + x12) < 0.5
                }
            });
            single("E", 2, w1, peon)
        }
        "kqrO_1theon" => {
            let k = need_k()?;
            let desc = SpaceDescriptor { width: 1, degree: 1 };
            single("P", k, desc, kqro_peon(k, desc))
        }
        "kqrO_0theon" => {
            let k = need_k()?;
            single("P", k, w1, kqro_0theon_table(k, params.convention)?.into())
        }
        _ => Err(Error::UnknownTheon(name.to_string())),
    }
}

/// The orientation peon on `[k]` over any space of degree at least 1: holds
/// iff the first order at `[k]` is the natural order.
pub fn kqro_peon(k: usize, desc: SpaceDescriptor) -> Peon {
    assert!(desc.degree >= 1);
    let top = full_mask(k);
    let mask = DependencyMask::empty(k, desc).with_order(top, 0);
    Peon::new(mask, move |v| v.order(top, 0).is_identity())
        .with_grid(GridSpec::empty(desc.width))
        .expect("order-only grid")
}

fn kqro_0theon_mask(k: usize) -> (DependencyMask, GridSpec) {
    let top = full_mask(k);
    let mut mask = DependencyMask::empty(k, SpaceDescriptor { width: 1, degree: 0 }).with_weight(top, 0);
    let mut grid = GridSpec::empty(1).with_level(0, k, factorial(k), false);
    if k >= 2 {
        for a in 0..k {
            mask = mask.with_weight(top & !(1 << a), 0);
        }
        grid = grid.with_level(0, k - 1, 1, true);
    }
    (mask, grid)
}

fn kqro_0theon_holds(v: &PointView<'_>, k: usize, convention: Convention) -> bool {
    let top = full_mask(k);
    let co: Vec<f64> = if k >= 2 { (0..k).map(|a| v.w(top & !(1 << a), 0)).collect() } else { vec![0.0] };
    let (sigma, _) = sigma_sort(&co);
    let t = tau(k, v.w(top, 0)).expect("k within the factorial cap");
    match convention {
        Convention::Direct => sigma == t,
        Convention::Inverse => sigma == t.inverse(),
    }
}

/// The weight-only orientation as a formula peon (no table).
pub fn kqro_0theon_formula(k: usize, convention: Convention) -> Result<Peon> {
    let (mask, grid) = kqro_0theon_mask(k);
    Peon::new(mask, move |v| kqro_0theon_holds(v, k, convention)).with_grid(grid)
}

/// The weight-only orientation tabulated over its chambers.
pub fn kqro_0theon_table(k: usize, convention: Convention) -> Result<ChamberGridPeon> {
    let (mask, grid) = kqro_0theon_mask(k);
    ChamberGridPeon::tabulate(mask, grid, |v| kqro_0theon_holds(v, k, convention))
}

fn frac(s: f64) -> f64 {
    s - s.floor()
}

/// Whether the weight-only tournament has the arc `u -> w`.
fn arc(v: &PointView<'_>, u: usize, w: usize) -> bool {
    let (su, sw) = (1u64 << u, 1u64 << w);
    (v.w(su, 0) < v.w(sw, 0)) != (v.w(su | sw, 0) < 0.5)
}

fn odd_low_pairs(v: &PointView<'_>) -> bool {
    [3, 5, 6].iter().filter(|&&s| v.w(s, 0) < 0.5).count() % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Point;

    fn point(n: usize, desc: SpaceDescriptor, w: &[(u64, f64)]) -> Point {
        let mut x = Point::zeros(n, None, desc).unwrap();
        for &(s, val) in w {
            x.set_weight(s, 0, val);
        }
        x
    }

    fn holds(name: &str, x: &Point) -> bool {
        gallery(name, &GalleryParams::default()).unwrap().peons()[0].eval(x).unwrap()
    }

    const W1: SpaceDescriptor = SpaceDescriptor { width: 1, degree: 0 };

    #[test]
    fn membership_examples() {
        assert!(holds("qr_graph", &point(2, W1, &[(3, 0.3)])));
        assert!(!holds("qr_graph", &point(2, W1, &[(3, 0.7)])));
        assert!(holds("twist_graph", &point(2, W1, &[(1, 0.4), (2, 0.4), (3, 0.3)])));
        assert!(holds("bipartite_graph", &point(2, W1, &[(1, 0.25), (2, 0.75)])));
        assert!(!holds("bipartite_graph", &point(2, W1, &[(1, 0.25), (2, 0.25)])));
        assert!(holds("odd_3hypergraph", &point(3, W1, &[(3, 0.1), (5, 0.6), (6, 0.6)])));
        // low weight at vertex 1 and high triple weight: no edge
        assert!(!holds("disc_3hypergraph", &point(3, W1, &[(1, 0.2), (2, 0.7), (4, 0.7), (7, 0.6)])));
        // all vertex weights high: parity of the pair weights
        assert!(holds(
            "disc_3hypergraph",
            &point(3, W1, &[(1, 0.6), (2, 0.7), (4, 0.8), (3, 0.1), (5, 0.6), (6, 0.6)])
        ));
        // w1 < w2 and w12 high: exactly one condition holds, so 1 -> 2
        assert!(holds("qr_tournament_0", &point(2, W1, &[(1, 0.1), (2, 0.2), (3, 0.9)])));
        assert!(!holds("qr_tournament_0", &point(2, W1, &[(1, 0.1), (2, 0.2), (3, 0.1)])));
        assert!(holds("semitwist_graph", &point(2, W1, &[(1, 0.2), (2, 0.7), (3, 0.3)])));
        assert!(!holds("semitwist_graph", &point(2, W1, &[(1, 0.6), (2, 0.7), (3, 0.3)])));
    }

    #[test]
    fn cycle_needs_a_directed_triangle() {
        // weights 1 < 2 < 3 with all pair weights high: arcs 1->2, 2->3, 1->3 (transitive)
        let x = point(3, W1, &[(1, 0.1), (2, 0.2), (4, 0.3), (3, 0.9), (5, 0.9), (6, 0.9)]);
        assert!(!holds("cycle_3hypergraph", &x));
        // flipping the pair {1,3} reverses that arc: 1->2->3->1
        let x = point(3, W1, &[(1, 0.1), (2, 0.2), (4, 0.3), (3, 0.9), (5, 0.1), (6, 0.9)]);
        assert!(holds("cycle_3hypergraph", &x));
    }

    #[test]
    fn orientation_examples() {
        let desc = SpaceDescriptor { width: 1, degree: 1 };
        let t = gallery("kqrO_1theon", &GalleryParams::with_k(2)).unwrap();
        let mut x = Point::zeros(2, None, desc).unwrap();
        assert!(t.peons()[0].eval(&x).unwrap());
        x.set_order(3, 0, crate::space::Perm::from_vec(vec![1, 0]).unwrap());
        assert!(!t.peons()[0].eval(&x).unwrap());
        assert!(gallery("kqrO_1theon", &GalleryParams::default()).is_err());
        assert!(gallery("kqrO_1theon", &GalleryParams::with_k(9)).is_err());
        assert!(matches!(gallery("nope", &GalleryParams::default()), Err(Error::UnknownTheon(_))));
    }

    #[test]
    fn exactness_flags_match_grids() {
        for g in GALLERY {
            let t = gallery(g.name, &GalleryParams { k: g.default_k, ..Default::default() }).unwrap();
            assert_eq!(t.is_chamber_grid(), g.exact, "{}", g.name);
        }
    }

    #[test]
    fn single_vertex_orientation_always_holds() {
        let t = gallery("kqrO_0theon", &GalleryParams::with_k(1)).unwrap();
        assert!(t.peons()[0].eval(&point(1, W1, &[(1, 0.9)])).unwrap());
    }
}
