//! Experiment configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use theon::peon::{
    gallery, independent_coupling, interpret_theon, reduct_theon, union_theon, ChamberGridPeon, Convention,
    DependencyMask, GalleryParams, GridSpec, Level, Peon, Theon,
};
use theon::realization::{pull_theon, simulate_orders, RealizationFamily};
use theon::space::{subset_masks, SpaceDescriptor};
use theon::symbols::{Formula, Interpretation, Language};

/// How to build a theon.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TheonSpec {
    Gallery {
        name: String,
        k: Option<usize>,
        convention: Option<String>,
    },
    /// Independent coupling over the product space.
    Coupling {
        left: Box<TheonSpec>,
        right: Box<TheonSpec>,
    },
    /// Both theons over their shared space.
    Union {
        left: Box<TheonSpec>,
        right: Box<TheonSpec>,
    },
    Reduct {
        of: Box<TheonSpec>,
        keep: Vec<String>,
    },
    Interpret {
        of: Box<TheonSpec>,
        predicates: BTreeMap<String, Definition>,
    },
    /// Pullback along the realization family whose target is the inner theon's space.
    Pull {
        of: Box<TheonSpec>,
    },
    /// Order simulation by an independent orientation.
    Simulate {
        of: Box<TheonSpec>,
        ell: usize,
        #[serde(default = "default_check_trials")]
        check_trials: u64,
        #[serde(default)]
        seed: u64,
    },
    ChamberGrid(ChamberGridSpec),
}

fn default_check_trials() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Definition {
    pub arity: usize,
    /// Quantifier-free formula in variables `x1, x2, ..`.
    pub formula: String,
}

/// A single-predicate theon given by its true chambers.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChamberGridSpec {
    pub name: String,
    pub predicate: String,
    pub arity: usize,
    pub width: usize,
    #[serde(default)]
    pub degree: usize,
    pub levels: Vec<LevelSpec>,
    pub true_chambers: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    #[serde(default)]
    pub component: usize,
    pub size: usize,
    pub resolution: u64,
    #[serde(default)]
    pub ranked: bool,
}

/// Contents of a config file. Command-line flags override every field.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theon: Option<TheonSpec>,
    pub n: Option<usize>,
    pub backend: Option<String>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub significance: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

impl TheonSpec {
    #[cfg(test)]
    pub fn gallery(name: &str, k: Option<usize>) -> Self {
        TheonSpec::Gallery { name: name.to_string(), k, convention: None }
    }

    pub fn build(&self) -> Result<Theon> {
        Ok(match self {
            TheonSpec::Gallery { name, k, convention } => {
                let convention: Convention = match convention {
                    Some(c) => c.parse()?,
                    None => Convention::default(),
                };
                gallery(name, &GalleryParams { k: *k, convention })?
            }
            TheonSpec::Coupling { left, right } => independent_coupling(&left.build()?, &right.build()?)?,
            TheonSpec::Union { left, right } => union_theon(&left.build()?, &right.build()?)?,
            TheonSpec::Reduct { of, keep } => {
                let inner = of.build()?;
                let preds = keep
                    .iter()
                    .map(|p| {
                        let a = inner.language().arity(p).with_context(|| format!("no predicate `{p}` to keep"))?;
                        Ok((p.clone(), a))
                    })
                    .collect::<Result<Vec<_>>>()?;
                reduct_theon(&inner, &Language::new(preds)?)?
            }
            TheonSpec::Interpret { of, predicates } => {
                let inner = of.build()?;
                let source = Language::new(predicates.iter().map(|(p, d)| (p.clone(), d.arity)))?;
                let defs = predicates
                    .iter()
                    .map(|(p, d)| {
                        let f = Formula::parse(&d.formula, d.arity).with_context(|| format!("definition of `{p}`"))?;
                        Ok((p.clone(), f))
                    })
                    .collect::<Result<BTreeMap<_, _>>>()?;
                let i = Interpretation::new(source, inner.language().clone(), defs)?;
                interpret_theon(&i, &inner)?
            }
            TheonSpec::Pull { of } => {
                let inner = of.build()?;
                pull_theon(&RealizationFamily::for_target(inner.descriptor()), &inner)?
            }
            TheonSpec::Simulate { of, ell, check_trials, seed } => {
                simulate_orders(&of.build()?, *ell, *check_trials, *seed)?.interpreted()?
            }
            TheonSpec::ChamberGrid(spec) => spec.build()?,
        })
    }
}

impl ChamberGridSpec {
    pub fn build(&self) -> Result<Theon> {
        let desc = SpaceDescriptor::new(self.width, self.degree)?;
        let mut grid = GridSpec::empty(self.width);
        for l in &self.levels {
            if l.component >= self.width {
                bail!("level component {} outside width {}", l.component, self.width);
            }
            grid.add(l.component, Level { size: l.size, resolution: l.resolution, ranked: l.ranked });
        }
        let mut mask = DependencyMask::empty(self.arity, desc);
        for s in subset_masks(self.arity, None) {
            let size = s.count_ones() as usize;
            for c in 0..self.width {
                if grid.level(c, size).is_some() {
                    mask = mask.with_weight(s, c);
                }
            }
            if size >= 2 {
                for j in 0..self.degree {
                    mask = mask.with_order(s, j);
                }
            }
        }
        let peon: Peon = ChamberGridPeon::from_true_chambers(mask, grid, &self.true_chambers)?.into();
        let language = Language::new([(self.predicate.clone(), self.arity)])?;
        Ok(Theon::new(self.name.clone(), language, desc, BTreeMap::from([(self.predicate.clone(), peon)]))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn gallery_recipe() {
        let c = parse("n = 3\nseed = 7\n[theon.gallery]\nname = \"kqrO_1theon\"\nk = 3\n");
        assert_eq!(c.n, Some(3));
        let t = c.theon.unwrap().build().unwrap();
        assert_eq!(t.language().max_arity(), 3);
    }

    #[test]
    fn coupling_recipe() {
        let c = parse(
            "[theon.coupling.left.gallery]\nname = \"qr_graph\"\n[theon.coupling.right.gallery]\nname = \"kqrO_1theon\"\nk = 2\n",
        );
        let t = c.theon.unwrap().build().unwrap();
        assert_eq!(t.language().len(), 2);
        assert_eq!(t.descriptor(), SpaceDescriptor { width: 2, degree: 1 });
    }

    #[test]
    fn interpret_recipe() {
        let c = parse(
            "[theon.interpret.of.gallery]\nname = \"qr_graph\"\n[theon.interpret.predicates.N]\narity = 2\nformula = \"!E(x1,x2)\"\n",
        );
        let t = c.theon.unwrap().build().unwrap();
        assert!(t.peon("N").is_some());
    }

    #[test]
    fn chamber_grid_recipe_matches_qr_graph() {
        let c = parse(
            "[theon.chamber_grid]\nname = \"half\"\npredicate = \"E\"\narity = 2\nwidth = 1\nlevels = [{ size = 2, resolution = 2 }]\ntrue_chambers = [0]\n",
        );
        let t = c.theon.unwrap().build().unwrap();
        assert!(t.is_chamber_grid());
        let qr = TheonSpec::gallery("qr_graph", None).build().unwrap();
        let v = theon::density::equivalence_test(
            &qr,
            &t,
            3,
            theon::density::Backend::Exact,
            &Default::default(),
            &Default::default(),
            0.01,
        )
        .unwrap();
        assert!(v.equivalent);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("nn = 3").is_err());
        let bad = TheonSpec::Reduct { of: Box::new(TheonSpec::gallery("qr_graph", None)), keep: vec!["F".into()] };
        assert!(bad.build().is_err());
    }
}
