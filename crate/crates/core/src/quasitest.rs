//! Statistical tests for quasirandomness properties on small vertex sets.
//!
//! Both tests are one-sided: a `Consistent` verdict only says that no
//! violation was detected at the tested size and budget.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

use crate::density::{
    compare_tables, equivalence_test, exact_distribution, Backend, DistributionTable, ExactLimits, McSettings,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::peon::{gallery, GalleryParams, Theon};
use crate::rng::derive_seed;
use crate::sampler::{low_subsets, realize_code, sample_histogram, PartialPoint};
use crate::space::{factorial, positions, Coord, Perm, Point, SeededSource, VertexSet};
use crate::stats::{chi_square_independence, MIN_EXPECTED};
use crate::symbols::{Structure, StructureCode, TupleIndex};

/// Most rows a contingency table may have.
pub const MAX_ROWS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Rejected,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestParams {
    pub ell: usize,
    pub n: usize,
    pub trials: u64,
    pub bins: usize,
    pub significance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

/// Outcome of one test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub property: String,
    pub theon: String,
    pub params: TestParams,
    pub statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
    pub witness: Option<Value>,
    /// Too few samples per row for the test to have useful power.
    pub low_power: bool,
    pub note: String,
}

impl TestReport {
    fn new(property: String, theon: &str, params: TestParams, statistic: f64, p_value: f64) -> Self {
        let verdict = if p_value < params.significance { Verdict::Rejected } else { Verdict::Consistent };
        let note = match verdict {
            Verdict::Consistent => {
                format!("no violation detected on {} vertices; this does not prove the property", params.n)
            }
            Verdict::Rejected => format!("violation detected on {} vertices", params.n),
        };
        TestReport {
            property,
            theon: theon.to_string(),
            params,
            statistic,
            p_value,
            verdict,
            witness: None,
            low_power: false,
            note,
        }
    }

    pub fn rejected(&self) -> bool {
        self.verdict == Verdict::Rejected
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} n={}: {} (statistic {:.4}, p={:.4e}{})",
            self.theon,
            self.property,
            self.params.n,
            self.verdict,
            self.statistic,
            self.p_value,
            if self.low_power { ", low power" } else { "" }
        )
    }
}

/// Low-arity coordinates as a mixed-radix grid: every weight is cut into
/// `bins` intervals and every order takes each of its values.
#[derive(Debug, Clone)]
struct LowGrid {
    width: usize,
    degree: usize,
    bins: usize,
    subsets: Vec<u64>,
    radices: Vec<u64>,
    total: u64,
}

impl LowGrid {
    fn new(theon: &Theon, n: usize, ell: usize, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("at least one bin per weight is needed".into()));
        }
        if ell == 0 || ell > n {
            return Err(Error::InvalidArgument(format!("ell must lie in 1..={n}, got {ell}")));
        }
        let desc = theon.descriptor();
        let subsets = low_subsets(n, ell);
        let mut radices = Vec::new();
        for &s in &subsets {
            radices.extend(std::iter::repeat_n(bins as u64, desc.width));
            let size = s.count_ones() as usize;
            if size >= 2 {
                radices.extend(std::iter::repeat_n(factorial(size), desc.degree));
            }
        }
        let total = radices
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(r))
            .ok_or_else(|| Error::CapExceeded("low-arity grid overflows".into()))?;
        Ok(LowGrid { width: desc.width, degree: desc.degree, bins, subsets, radices, total })
    }

    fn digits(&self, mut index: u64) -> Vec<u64> {
        let mut d = vec![0; self.radices.len()];
        for (slot, &r) in self.radices.iter().enumerate().rev() {
            d[slot] = index % r;
            index /= r;
        }
        d
    }

    fn orders_of(&self, s: u64) -> usize {
        if s.count_ones() >= 2 {
            self.degree
        } else {
            0
        }
    }

    /// Representative point of a cell. Weights sharing a bin are spread
    /// evenly inside it so that no two pinned weights tie.
    fn pin(&self, theon: &Theon, v: &VertexSet, index: u64) -> Result<PartialPoint> {
        let d = self.digits(index);
        let mut per_bin = vec![0usize; self.bins];
        let mut slot = 0;
        for &s in &self.subsets {
            for &b in &d[slot..slot + self.width] {
                per_bin[b as usize] += 1;
            }
            slot += self.width + self.orders_of(s);
        }
        let mut seen = vec![0usize; self.bins];
        let mut point = PartialPoint::new(v.clone(), theon.descriptor());
        let mut slot = 0;
        for &s in &self.subsets {
            let size = s.count_ones() as usize;
            let weights = (0..self.width)
                .map(|c| {
                    let b = d[slot + c] as usize;
                    seen[b] += 1;
                    (b as f64 + seen[b] as f64 / (per_bin[b] + 1) as f64) / self.bins as f64
                })
                .collect();
            slot += self.width;
            let orders = (0..self.degree)
                .map(|_| {
                    if size >= 2 {
                        slot += 1;
                        Perm::from_lex_index(size, d[slot - 1])
                    } else {
                        Perm::identity(size)
                    }
                })
                .collect();
            point.pin(s, Coord { weights, orders })?;
        }
        Ok(point)
    }

    /// Cell index of a full point.
    fn locate(&self, x: &Point) -> u64 {
        let mut index = 0u64;
        for &s in &self.subsets {
            for c in 0..self.width {
                let b = ((x.weight(s, c) * self.bins as f64) as u64).min(self.bins as u64 - 1);
                index = index * self.bins as u64 + b;
            }
            let size = s.count_ones() as usize;
            for j in 0..self.orders_of(s) {
                index = index * factorial(size) + x.order(s, j).lex_index();
            }
        }
        index
    }

    fn describe(&self, v: &VertexSet, index: u64) -> Value {
        let d = self.digits(index);
        let mut slot = 0;
        let mut out = serde_json::Map::new();
        for &s in &self.subsets {
            let label: Vec<&str> = positions(s).map(|p| v.label(p)).collect();
            let bins: Vec<u64> = d[slot..slot + self.width].to_vec();
            slot += self.width;
            let k = self.orders_of(s);
            let orders: Vec<Vec<usize>> =
                d[slot..slot + k].iter().map(|&o| Perm::from_lex_index(s.count_ones() as usize, o).ranked()).collect();
            slot += k;
            let entry = if orders.is_empty() { json!({"bins": bins}) } else { json!({"bins": bins, "orders": orders}) };
            out.insert(label.join(","), entry);
        }
        Value::Object(out)
    }

    /// `count` cell indices spread evenly over the grid, first and last included.
    fn spread(&self, count: usize) -> Vec<u64> {
        if count as u64 >= self.total {
            return (0..self.total).collect();
        }
        if count <= 1 {
            return vec![0];
        }
        let last = self.total - 1;
        let mut out: Vec<u64> = (0..count).map(|i| ((i as u128 * last as u128) / (count as u128 - 1)) as u64).collect();
        out.dedup();
        out
    }
}

fn check_size(theon: &Theon, n: usize) -> Result<()> {
    if n == 0 || n > 20 {
        return Err(Error::InvalidArgument(format!("vertex count must lie in 1..=20, got {n}")));
    }
    if theon.language().max_arity() > n {
        return Err(Error::InvalidArgument(format!(
            "{} has arity {} above n = {n}",
            theon.name(),
            theon.language().max_arity()
        )));
    }
    Ok(())
}

/// Fewer than `POWER_FACTOR · MIN_EXPECTED` samples per (row, outcome) pair.
const POWER_FACTOR: f64 = 4.0;

fn low_power(rows: usize, row_total: u64, support: usize) -> bool {
    (row_total as f64) < POWER_FACTOR * MIN_EXPECTED * support.max(2) as f64 || rows < 2
}

fn tv_of(a: &BTreeMap<StructureCode, u64>, b: &BTreeMap<StructureCode, u64>) -> f64 {
    let (ta, tb) = (a.values().sum::<u64>().max(1) as f64, b.values().sum::<u64>().max(1) as f64);
    let mut tv = 0.0;
    for c in a.keys().chain(b.keys().filter(|c| !a.contains_key(*c))) {
        let pa = a.get(c).copied().unwrap_or(0) as f64 / ta;
        let pb = b.get(c).copied().unwrap_or(0) as f64 / tb;
        tv += (pa - pb).abs() / 2.0;
    }
    tv
}

/// Discrepancy test: pins the coordinates of all sets of size at most `ell`
/// at up to `cells` grid cells, samples the conditional distribution of the
/// structure on `[n]` in each, and tests every cell against the pooled rest
/// (Bonferroni over cells).
#[allow(clippy::too_many_arguments)]
pub fn disc_test(
    theon: &Theon,
    ell: usize,
    n: usize,
    bins: usize,
    cells: usize,
    trials_per_cell: u64,
    significance: f64,
    seed: u64,
) -> Result<TestReport> {
    check_size(theon, n)?;
    let grid = LowGrid::new(theon, n, ell, bins)?;
    let v = VertexSet::range(n);
    let chosen = grid.spread(cells);
    let mut hists = Vec::with_capacity(chosen.len());
    for (i, &c) in chosen.iter().enumerate() {
        let pinned = grid.pin(theon, &v, c)?;
        let (_, h) = sample_histogram(theon, &v, Some(&pinned), trials_per_cell, derive_seed(seed, i as u64))?;
        hists.push(h);
    }
    let codes: Vec<StructureCode> = {
        let mut all: Vec<StructureCode> = hists.iter().flat_map(|h| h.keys().cloned()).collect();
        all.sort();
        all.dedup();
        all
    };
    let row =
        |h: &BTreeMap<StructureCode, u64>| codes.iter().map(|c| h.get(c).copied().unwrap_or(0)).collect::<Vec<_>>();
    let rows: Vec<Vec<u64>> = hists.iter().map(row).collect();
    let totals: Vec<u64> = (0..codes.len()).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
    let mut worst = (0usize, 1.0f64, 0.0f64);
    for (i, r) in rows.iter().enumerate() {
        if rows.len() < 2 {
            break;
        }
        let rest: Vec<u64> = totals.iter().zip(r).map(|(t, x)| t - x).collect();
        let chi = chi_square_independence(&[r.clone(), rest]);
        if chi.p_value < worst.1 || i == 0 {
            worst = (i, chi.p_value, chi.statistic);
        }
    }
    let p = (worst.1 * rows.len() as f64).min(1.0);
    let params = TestParams {
        ell,
        n,
        trials: trials_per_cell * chosen.len() as u64,
        bins,
        significance,
        cells: Some(chosen.len()),
    };
    let mut report = TestReport::new(format!("Disc[{ell}]"), theon.name(), params, worst.2, p);
    report.low_power = low_power(rows.len(), trials_per_cell, codes.len());
    if report.rejected() {
        let a = worst.0;
        let b = (0..hists.len())
            .max_by(|&x, &y| tv_of(&hists[a], &hists[x]).total_cmp(&tv_of(&hists[a], &hists[y])))
            .unwrap_or(a);
        report.witness = Some(json!({
            "cells": [grid.describe(&v, chosen[a]), grid.describe(&v, chosen[b])],
            "tv": tv_of(&hists[a], &hists[b]),
        }));
    }
    Ok(report)
}

/// Independence test: samples full points over `[n]` and tests the realized
/// structure against the joint cell of all coordinates of sets of size at
/// most `ell`.
pub fn ucouple_test(
    theon: &Theon,
    ell: usize,
    n: usize,
    bins: usize,
    trials: u64,
    significance: f64,
    seed: u64,
) -> Result<TestReport> {
    check_size(theon, n)?;
    let grid = LowGrid::new(theon, n, ell, bins)?;
    if grid.total > MAX_ROWS {
        return Err(Error::CapExceeded(format!("{} low-arity cells exceed {MAX_ROWS}", grid.total)));
    }
    let v = VertexSet::range(n);
    let index = TupleIndex::new(theon.language(), n);
    let cap = Some(theon.language().max_arity().max(ell));
    let parts = exec::map_chunks(trials, 1024, |range| {
        let mut counts: HashMap<(u64, StructureCode), u64> = HashMap::new();
        for i in range {
            let source = SeededSource::new(&v, theon.descriptor(), derive_seed(seed, i));
            let x = Point::from_source(&source, cap).expect("dense size");
            *counts.entry((grid.locate(&x), realize_code(theon, &x, &index))).or_default() += 1;
        }
        counts
    });
    let mut joint: BTreeMap<(u64, StructureCode), u64> = BTreeMap::new();
    for part in parts {
        for (key, k) in part {
            *joint.entry(key).or_default() += k;
        }
    }
    let mut codes: Vec<&StructureCode> = joint.keys().map(|(_, c)| c).collect();
    codes.sort();
    codes.dedup();
    let col: BTreeMap<&StructureCode, usize> = codes.iter().enumerate().map(|(j, &c)| (c, j)).collect();
    let mut table = vec![vec![0u64; codes.len()]; grid.total as usize];
    for ((r, c), k) in &joint {
        table[*r as usize][col[c]] += k;
    }
    let chi = chi_square_independence(&table);
    let params = TestParams { ell, n, trials, bins, significance, cells: None };
    let mut report = TestReport::new(format!("UCouple[{ell}]"), theon.name(), params, chi.statistic, chi.p_value);
    report.low_power = low_power(table.len(), trials / grid.total.max(1), codes.len());
    if report.rejected() {
        let row_tot: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
        let col_tot: Vec<u64> = (0..codes.len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        let mut best = (0usize, 0usize, 0.0f64);
        for (i, r) in table.iter().enumerate() {
            for (j, &o) in r.iter().enumerate() {
                let e = row_tot[i] as f64 * col_tot[j] as f64 / trials as f64;
                if e > 0.0 {
                    let z = (o as f64 - e) / e.sqrt();
                    if z.abs() > best.2.abs() {
                        best = (i, j, z);
                    }
                }
            }
        }
        let (i, j, z) = best;
        let structure = Structure::from_code(theon.language(), &v, &index, codes[j]);
        report.witness = Some(json!({
            "cell": grid.describe(&v, i as u64),
            "structure": structure.to_json_value(),
            "observed": table[i][j],
            "expected": row_tot[i] as f64 * col_tot[j] as f64 / trials as f64,
            "residual": z,
        }));
    }
    Ok(report)
}

/// Exact conditional tables at the cells `disc_test` would pin.
pub fn exact_cell_tables(
    theon: &Theon,
    ell: usize,
    n: usize,
    bins: usize,
    cells: usize,
    limits: &ExactLimits,
) -> Result<Vec<DistributionTable>> {
    check_size(theon, n)?;
    let grid = LowGrid::new(theon, n, ell, bins)?;
    let v = VertexSet::range(n);
    grid.spread(cells)
        .into_iter()
        .map(|c| exact_distribution(theon, &v, Some(&grid.pin(theon, &v, c)?), limits))
        .collect()
}

/// Whether every exact conditional table equals the first.
pub fn exact_homogeneous(tables: &[DistributionTable]) -> Result<bool> {
    for t in tables.iter().skip(1) {
        if !compare_tables(&tables[0], t, 0.0)?.equivalent {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Equivalence of two theons on `[n]`, reported like the other tests. Exact
/// comparisons report `p = 1` when equal and `p = 0` otherwise.
pub fn equivalence_report(
    a: &Theon,
    b: &Theon,
    n: usize,
    samples: u64,
    significance: f64,
    seed: u64,
) -> Result<TestReport> {
    let mc = McSettings { samples, seed };
    let verdict = equivalence_test(a, b, n, Backend::Auto, &ExactLimits::default(), &mc, significance)?;
    let p = verdict.p_value.unwrap_or(if verdict.equivalent { 1.0 } else { 0.0 });
    let params = TestParams { ell: 0, n, trials: samples, bins: 0, significance, cells: None };
    let name = format!("{} vs {}", a.name(), b.name());
    let mut report = TestReport::new("equivalence".into(), &name, params, verdict.tv, p);
    report.note = match (report.verdict, verdict.tv_exact.is_some()) {
        (Verdict::Consistent, true) => format!("identical exact distributions on {n} vertices"),
        (Verdict::Consistent, false) => format!("no difference detected on {n} vertices"),
        (Verdict::Rejected, _) => format!("distributions differ on {n} vertices"),
    };
    if let (Verdict::Rejected, Some((k, pa, pb))) = (report.verdict, &verdict.witness) {
        report.witness = Some(json!({"structure": k.to_json_value(), "mass_a": pa, "mass_b": pb}));
    }
    Ok(report)
}

/// Sample budgets of the counterexample suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteBudget {
    pub trials: u64,
    pub trials_per_cell: u64,
    pub cells: usize,
    pub equivalence_samples: u64,
    pub significance: f64,
}

impl Default for SuiteBudget {
    fn default() -> Self {
        SuiteBudget {
            trials: 100_000,
            trials_per_cell: 20_000,
            cells: 16,
            equivalence_samples: 100_000,
            significance: 0.01,
        }
    }
}

impl SuiteBudget {
    /// Every sample count set to `trials`.
    pub fn uniform(trials: u64) -> Self {
        SuiteBudget { trials, trials_per_cell: trials, equivalence_samples: trials, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// Landed on the wrong side with too little power to mean anything.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub expected: Verdict,
    pub outcome: Outcome,
    pub report: TestReport,
}

impl SuiteEntry {
    fn judge(report: TestReport, expected: Verdict) -> Self {
        let outcome = if report.verdict == expected {
            Outcome::Pass
        } else if report.low_power {
            Outcome::Inconclusive
        } else {
            Outcome::Fail
        };
        SuiteEntry { expected, outcome, report }
    }
}

/// Whether no entry failed.
pub fn suite_passed(entries: &[SuiteEntry]) -> bool {
    entries.iter().all(|e| e.outcome != Outcome::Fail)
}

/// The separating examples, each checked against its expected verdict.
pub fn counterexample_suite(seed: u64, budget: &SuiteBudget) -> Result<Vec<SuiteEntry>> {
    use Verdict::{Consistent, Rejected};
    let g = |name: &str, k: Option<usize>| gallery(name, &GalleryParams { k, ..Default::default() });
    let disc = g("disc_3hypergraph", None)?;
    let qr = g("qr_graph", None)?;
    let sig = budget.significance;
    let s = |i: u64| derive_seed(seed, i);
    let b = budget;
    Ok(vec![
        SuiteEntry::judge(disc_test(&disc, 1, 3, 2, b.cells, b.trials_per_cell, sig, s(0))?, Consistent),
        SuiteEntry::judge(disc_test(&disc, 1, 4, 2, b.cells, b.trials_per_cell, sig, s(1))?, Rejected),
        SuiteEntry::judge(ucouple_test(&disc, 1, 4, 2, b.trials, sig, s(2))?, Rejected),
        SuiteEntry::judge(ucouple_test(&g("qr_tournament_0", None)?, 1, 3, 2, b.trials, sig, s(3))?, Consistent),
        SuiteEntry::judge(ucouple_test(&g("kqrO_1theon", Some(2))?, 1, 3, 2, b.trials, sig, s(4))?, Consistent),
        SuiteEntry::judge(
            equivalence_report(&g("semitwist_graph", None)?, &qr, 4, b.equivalence_samples, sig, s(5))?,
            Consistent,
        ),
        SuiteEntry::judge(
            equivalence_report(&g("twist_graph", None)?, &qr, 3, b.equivalence_samples, sig, s(6))?,
            Consistent,
        ),
        SuiteEntry::judge(
            equivalence_report(&g("bipartite_graph", None)?, &qr, 3, b.equivalence_samples, sig, s(7))?,
            Rejected,
        ),
    ])
}
