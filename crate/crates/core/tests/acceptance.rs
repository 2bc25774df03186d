//! Acceptance checks. Each criterion prints one line; the process fails if
//! any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use theon::density::{
    compare_tables, distribution_on, equivalence_test, exact_distribution, exact_feasible, mc_distribution,
    t_ind_exact, Backend, DistributionTable, ExactLimits, Mass, McSettings,
};
use theon::peon::{dependency_check, gallery, independent_coupling, GalleryParams, Theon, GALLERY};
use theon::quasitest::{counterexample_suite, disc_test, suite_passed, ucouple_test, SuiteBudget};
use theon::realization::{pull_theon, simulate_orders, RealizationFamily};
use theon::rng::derive_seed;
use theon::sampler::{realize_structure, sample_structure};
use theon::space::{all_perms, factorial, pullback_point, sample_point, subset_masks, Injection, Point, VertexSet};
use theon::stats::{chi_square_gof, ks_uniform};
use theon::symbols::{enumerate_structures, injective_tuples, pullback_structure, reduct, Structure};

type Outcome = Result<String, String>;

fn g(name: &str, k: Option<usize>) -> Theon {
    gallery(name, &GalleryParams { k, ..Default::default() }).expect("gallery entry")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn is_graph(k: &Structure) -> bool {
    let r = k.relation(0);
    r.iter().all(|t| r.contains(&vec![t[1], t[0]]))
}

fn is_tournament(k: &Structure) -> bool {
    let r = k.relation(0);
    injective_tuples(k.vertices().len(), 2)
        .iter()
        .filter(|t| t[0] < t[1])
        .all(|t| r.contains(t) != r.contains(&vec![t[1], t[0]]))
}

/// Exact uniformity of graphs and tournaments.
fn criterion_1() -> Outcome {
    let qr = g("qr_graph", None);
    let tk = g("kqrO_1theon", Some(2));
    let mut checked = 0;
    for n in 2..=3usize {
        let v = VertexSet::range(n);
        let want = rat(1, 1 << (n * (n - 1) / 2));
        for k in enumerate_structures(qr.language(), &v, 1 << 20).map_err(err)? {
            if is_graph(&k) {
                let t = t_ind_exact(&qr, &k).map_err(err)?;
                ensure(t == want, format!("graph {} has mass {t}", k.to_json()))?;
                checked += 1;
            }
        }
        for k in enumerate_structures(tk.language(), &v, 1 << 20).map_err(err)? {
            if is_tournament(&k) {
                let t = t_ind_exact(&tk, &k).map_err(err)?;
                ensure(t == want, format!("tournament {} has mass {t}", k.to_json()))?;
                checked += 1;
            }
        }
    }
    ensure(checked == 2 + 8 + 2 + 8, format!("checked {checked} structures"))?;
    Ok(format!("{checked} labeled graphs and tournaments each at exactly 2^-C(n,2)"))
}

/// Exact 1/6 per orientation of a triple, and the orientation axioms on samples.
fn criterion_2() -> Outcome {
    let n = g("kqrO_1theon", Some(3));
    let t = distribution_on(&n, 3, Backend::Exact, &ExactLimits::default(), &McSettings::default()).map_err(err)?;
    ensure(t.entries.len() == 6, format!("{} structures in the support", t.entries.len()))?;
    for (k, m) in t.support() {
        ensure(*m == Mass::Exact(rat(1, 6)), format!("mass {m:?}"))?;
        ensure(k.relation(0).len() == 1, "support structure is not a single oriented triple")?;
    }
    let v = VertexSet::range(5);
    let mut violations = 0;
    for s in 0..10_000u64 {
        let m = sample_structure(&n, &v, derive_seed(2, s)).map_err(err)?;
        for set in injective_tuples(5, 3).into_iter().filter(|t| t.windows(2).all(|w| w[0] < w[1])) {
            let holding = all_perms(3)
                .map_err(err)?
                .iter()
                .filter(|p| m.holds(0, &p.ranked().iter().map(|&r| set[r]).collect::<Vec<_>>()))
                .count();
            violations += (holding != 1) as u32;
        }
    }
    ensure(violations == 0, format!("{violations} triples without exactly one oriented tuple"))?;
    Ok("6 orientations at exactly 1/6; 0 axiom violations over 10^4 samples on 5 vertices".into())
}

/// Equivalence witnesses.
fn criterion_3() -> Outcome {
    let start = Instant::now();
    let qr = g("qr_graph", None);
    let limits = ExactLimits::default();
    let mc = McSettings { samples: 100_000, seed: 3 };
    let tw = equivalence_test(&g("twist_graph", None), &qr, 3, Backend::Auto, &limits, &mc, 0.01).map_err(err)?;
    ensure(tw.equivalent, format!("twist vs qr rejected: p = {:?}", tw.p_value))?;
    let st = equivalence_test(&g("semitwist_graph", None), &qr, 4, Backend::Auto, &limits, &mc, 0.01).map_err(err)?;
    ensure(st.equivalent, format!("semitwist vs qr rejected: p = {:?}", st.p_value))?;
    let bp = g("bipartite_graph", None);
    let b = equivalence_test(&bp, &qr, 3, Backend::Auto, &limits, &mc, 0.01).map_err(err)?;
    ensure(!b.equivalent && b.tv_exact.is_some(), "bipartite vs qr not rejected exactly")?;
    let mut tri = Structure::empty(qr.language().clone(), VertexSet::range(3));
    for t in injective_tuples(3, 2) {
        tri.insert(0, t).map_err(err)?;
    }
    let (a, q) = (t_ind_exact(&bp, &tri).map_err(err)?, t_ind_exact(&qr, &tri).map_err(err)?);
    ensure(a.is_zero() && q == rat(1, 8), format!("triangle masses {a} and {q}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "twist p={:.3}, semitwist p={:.3}, bipartite tv={} with triangle 0 vs 1/8, {secs:.1}s",
        tw.p_value.unwrap_or(1.0),
        st.p_value.unwrap_or(1.0),
        b.tv_exact.unwrap()
    ))
}

/// Round trip of the realization on orders and weights.
fn criterion_4() -> Outcome {
    let fam = RealizationFamily::new(1, 1);
    let mut degenerate = 0;
    let mut mismatches = 0;
    for i in 1..=4 {
        let v = VertexSet::range(i);
        for s in 0..10_000u64 {
            let x = sample_point(&v, None, fam.inverse_source(), derive_seed(40 + i as u64, s)).map_err(err)?;
            let gx = fam.hat_g(&x).map_err(err)?;
            let fx = fam.hat_f(&gx.point).map_err(err)?;
            if gx.degenerate + fx.degenerate > 0 {
                degenerate += 1;
                continue;
            }
            for a in subset_masks(i, None) {
                let same = fx.point.weight(a, 0).to_bits() == x.weight(a, 0).to_bits()
                    && fx.point.order(a, 0) == x.order(a, 0);
                mismatches += (!same) as u32;
            }
        }
    }
    ensure(mismatches == 0, format!("{mismatches} coordinates not recovered"))?;
    ensure(degenerate == 0, format!("{degenerate} degenerate inputs"))?;
    Ok("4 x 10^4 inputs recovered bit-exactly, 0 degenerate".into())
}

/// Measure preservation of the forward realization. The weight and joint
/// order tests form one family at level 0.01 (Bonferroni).
fn criterion_5() -> Outcome {
    let fam = RealizationFamily::new(1, 1);
    let samples = 100_000u64;
    let mut tests: Vec<(String, f64)> = Vec::new();
    for i in 1..=3usize {
        let v = VertexSet::range(i);
        let masks = subset_masks(i, None);
        let mut weights: Vec<Vec<f64>> = vec![Vec::with_capacity(samples as usize); masks.len()];
        let cells: u64 = masks.iter().map(|&a| factorial(a.count_ones() as usize)).product();
        let mut counts = vec![0u64; cells as usize];
        for s in 0..samples {
            let x = sample_point(&v, None, fam.source(), derive_seed(50 + i as u64, s)).map_err(err)?;
            let y: Point = fam.hat_f(&x).map_err(err)?.point;
            let mut cell = 0u64;
            for (m, &a) in masks.iter().enumerate() {
                weights[m].push(y.weight(a, 0));
                cell = cell * factorial(a.count_ones() as usize) + y.order(a, 0).lex_index();
            }
            counts[cell as usize] += 1;
        }
        for (w, a) in weights.iter_mut().zip(&masks) {
            tests.push((format!("weight KS at {a:#b} on {i} vertices"), ks_uniform(w).1));
        }
        let chi = chi_square_gof(&counts, &vec![1.0 / cells as f64; cells as usize]);
        tests.push((format!("joint order chi-square on {i} vertices ({cells} cells)"), chi.p_value));
    }
    let m = tests.len() as f64;
    let (name, p) = tests.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned().expect("tests ran");
    ensure(p * m >= 0.01, format!("{name}: p = {p:.2e}, adjusted {:.2e}", p * m))?;
    Ok(format!("{} tests, smallest p = {p:.4} ({name}), adjusted {:.3}", tests.len(), (p * m).min(1.0)))
}

/// Rank reduction by pulling back along the realization.
fn criterion_6() -> Outcome {
    let n = g("kqrO_1theon", Some(3));
    let pulled = pull_theon(&RealizationFamily::for_target(n.descriptor()), &n).map_err(err)?;
    for a in subset_masks(3, Some(1)) {
        let r = dependency_check(&pulled.peons()[0], a, 10_000, 6).map_err(err)?;
        ensure(r.independent, format!("pulled peon depends on subset {a:#b}"))?;
    }
    let mc = McSettings { samples: 100_000, seed: 6 };
    let v = equivalence_test(&pulled, &n, 3, Backend::Auto, &ExactLimits::default(), &mc, 0.01).map_err(err)?;
    ensure(v.equivalent, format!("pulled theon differs: tv = {}", v.tv))?;
    let how = if v.tv_exact.is_some() { "exactly" } else { "statistically" };
    Ok(format!("no dependence on singletons over 10^4 trials; densities equal {how}"))
}

/// Order simulation by an independent orientation.
fn criterion_7() -> Outcome {
    let n = g("kqrO_1theon", Some(2));
    let b = simulate_orders(&n, 1, 10_000, 7).map_err(err)?;
    let agreement = b.agreement(100_000, 7).map_err(err)?;
    ensure(agreement >= 0.999, format!("agreement {agreement}"))?;
    let back = b.interpreted().map_err(err)?;
    let sampled =
        mc_distribution(&back, &VertexSet::range(3), None, &McSettings { samples: 100_000, seed: 77 }).map_err(err)?;
    let uniform = exact_distribution(&n, &VertexSet::range(3), None, &ExactLimits::default()).map_err(err)?;
    let v = compare_tables(&uniform, &sampled, 0.01).map_err(err)?;
    ensure(v.equivalent, format!("interpreted structures differ from uniform: p = {:?}", v.p_value))?;
    Ok(format!("agreement {agreement:.5} over 10^5 points; vs uniform tournaments p = {:.3}", v.p_value.unwrap_or(1.0)))
}

/// Separations between the quasirandomness properties.
fn criterion_8() -> Outcome {
    let disc = g("disc_3hypergraph", None);
    let tk = g("kqrO_1theon", Some(2));
    let mut disc_rej = 0;
    let mut tk_rej = 0;
    let mut disc3_rej = 0;
    for s in 0..20u64 {
        disc_rej += ucouple_test(&disc, 1, 4, 2, 100_000, 0.01, derive_seed(8, s)).map_err(err)?.rejected() as u32;
        tk_rej += ucouple_test(&tk, 1, 3, 2, 100_000, 0.01, derive_seed(88, s)).map_err(err)?.rejected() as u32;
        disc3_rej += disc_test(&disc, 1, 3, 2, 8, 5_000, 0.01, derive_seed(888, s)).map_err(err)?.rejected() as u32;
    }
    let suite = counterexample_suite(1, &SuiteBudget::default()).map_err(err)?;
    ensure(suite_passed(&suite), "counterexample suite failed at seed 1")?;
    ensure(disc_rej >= 19, format!("disc rejected UCouple[1] in only {disc_rej}/20 runs"))?;
    ensure(tk_rej == 0, format!("orientation rejected UCouple[1] in {tk_rej}/20 runs"))?;
    ensure(disc3_rej == 0, format!("disc rejected Disc[1] on 3 vertices in {disc3_rej}/20 runs"))?;
    Ok(format!(
        "suite passed; disc UCouple[1] rejected {disc_rej}/20, orientation {tk_rej}/20, disc Disc[1] at n=3 {disc3_rej}/20"
    ))
}

/// Multiplicativity of exact densities under independent coupling.
fn criterion_9() -> Outcome {
    let n1 = g("qr_graph", None);
    let n2 = g("kqrO_1theon", Some(2));
    let joint = independent_coupling(&n1, &n2).map_err(err)?;
    let (l1, l2) = (n1.language().clone(), n2.language().clone());
    let limits = ExactLimits::default();
    let mut checked = 0;
    for n in 1..=3usize {
        let v = VertexSet::range(n);
        let tj = exact_distribution(&joint, &v, None, &limits).map_err(err)?;
        let t1 = exact_distribution(&n1, &v, None, &limits).map_err(err)?;
        let t2 = exact_distribution(&n2, &v, None, &limits).map_err(err)?;
        for m in enumerate_structures(joint.language(), &v, 1 << 20).map_err(err)? {
            let lhs = exact_mass(&tj, &m)?;
            let rhs =
                exact_mass(&t1, &reduct(&m, &l1).map_err(err)?)? * exact_mass(&t2, &reduct(&m, &l2).map_err(err)?)?;
            ensure(lhs == rhs, format!("{} has {lhs}, product {rhs}", m.to_json()))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} joint structures on at most 3 vertices factor exactly"))
}

fn exact_mass(t: &DistributionTable, k: &Structure) -> Result<BigRational, String> {
    match t.mass(k).map_err(err)? {
        Mass::Exact(r) => Ok(r),
        Mass::Estimated { .. } => Err("table is not exact".into()),
    }
}

fn gallery_theons() -> Vec<Theon> {
    let mut out: Vec<Theon> = GALLERY.iter().map(|e| g(e.name, e.default_k)).collect();
    out.push(g("kqrO_1theon", Some(3)));
    out.push(g("kqrO_0theon", Some(3)));
    out
}

/// Equivariance, exchangeability and locality.
fn criterion_10() -> Outcome {
    let limits = ExactLimits::default();
    let theons = gallery_theons();
    let mut exact_checked = 0;
    for n in &theons {
        if !n.is_chamber_grid() {
            continue;
        }
        for size in n.language().max_arity()..=3 {
            let v = VertexSet::range(size);
            let t = exact_distribution(n, &v, None, &limits).map_err(err)?;
            for perm in all_perms(size).map_err(err)? {
                let map: Vec<usize> = perm.as_slice().iter().map(|&p| p as usize).collect();
                let pi = Injection::new(v.clone(), v.clone(), map).map_err(err)?;
                for (k, m) in t.support() {
                    let moved = pullback_structure(&pi, &k).map_err(err)?;
                    ensure(t.mass(&moved).map_err(err)? == *m, format!("{} not exchangeable", n.name()))?;
                }
            }
            exact_checked += 1;
        }
        locality(n, &limits)?;
    }
    let v4 = VertexSet::range(4);
    let mut pointwise = 0;
    for n in &theons {
        let injections = injections_into(&v4);
        for s in 0..1_000u64 {
            let x = sample_point(&v4, None, n.descriptor(), derive_seed(10, s)).map_err(err)?;
            let m = realize_structure(n, &v4, &x).map_err(err)?;
            let alpha = &injections[(s as usize) % injections.len()];
            let lhs = realize_structure(n, alpha.domain(), &pullback_point(alpha, &x).map_err(err)?).map_err(err)?;
            let rhs = pullback_structure(alpha, &m).map_err(err)?;
            ensure(lhs == rhs, format!("{} not equivariant at seed {s}", n.name()))?;
            pointwise += 1;
        }
    }
    Ok(format!("{exact_checked} exact tables exchangeable and local; {pointwise} pointwise equivariance checks"))
}

/// Every injection from a set of at most 3 vertices into `v`.
fn injections_into(v: &VertexSet) -> Vec<Injection> {
    let labels = ["a", "b", "c"];
    let mut out = Vec::new();
    for k in 1..=3 {
        let dom = VertexSet::new(labels[..k].iter().copied()).expect("labels");
        for map in injective_tuples(v.len(), k) {
            out.push(Injection::new(dom.clone(), v.clone(), map).expect("injective"));
        }
    }
    out
}

/// Joint law of the restrictions to two disjoint sets is the product of the marginals.
fn locality(n: &Theon, limits: &ExactLimits) -> Result<(), String> {
    let size = if exact_feasible(n, 4, limits) { 4 } else { 3 };
    let v = VertexSet::range(size);
    let (a, b) = if size == 4 { (0b0011, 0b1100) } else { (0b001, 0b110) };
    let t = exact_distribution(n, &v, None, limits).map_err(err)?;
    let (ia, ib) = (Injection::inclusion(&v, a), Injection::inclusion(&v, b));
    let mut joint: BTreeMap<(String, String), BigRational> = BTreeMap::new();
    let mut ma: BTreeMap<String, BigRational> = BTreeMap::new();
    let mut mb: BTreeMap<String, BigRational> = BTreeMap::new();
    for (k, m) in t.support() {
        let Mass::Exact(p) = m else { return Err("table is not exact".into()) };
        let ka = pullback_structure(&ia, &k).map_err(err)?.to_json();
        let kb = pullback_structure(&ib, &k).map_err(err)?.to_json();
        *joint.entry((ka.clone(), kb.clone())).or_insert_with(BigRational::zero) += p;
        *ma.entry(ka).or_insert_with(BigRational::zero) += p;
        *mb.entry(kb).or_insert_with(BigRational::zero) += p;
    }
    let total: BigRational = ma.values().cloned().sum();
    ensure(total.is_one(), format!("{} marginal mass {total}", n.name()))?;
    for (ka, pa) in &ma {
        for (kb, pb) in &mb {
            let pj = joint.get(&(ka.clone(), kb.clone())).cloned().unwrap_or_else(BigRational::zero);
            ensure(pj == pa * pb, format!("{} restrictions to disjoint sets are dependent", n.name()))?;
        }
    }
    Ok(())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact uniformity of graphs and tournaments", criterion_1),
        ("orientation uniformity", criterion_2),
        ("equivalence witnesses", criterion_3),
        ("realization round trip", criterion_4),
        ("measure preservation", criterion_5),
        ("rank reduction", criterion_6),
        ("order simulation pipeline", criterion_7),
        ("quasirandomness separations", criterion_8),
        ("coupling multiplicativity", criterion_9),
        ("equivariance, exchangeability, locality", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:<12} {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id:<12} {name}: {why} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
