//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured values. Exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use dcstore_core::ltcds::{run_inference, run_ltcds, source_payload, DegreeFamily, LtcdsConfig};
use dcstore_core::rcds::{run_rcds, RcdsConfig};
use dcstore_core::rng::{self, derive_seed, Purpose};
use dcstore_core::trial::{count_successes, lt_success_counts, place_sources};
use dcstore_core::walk::{measure_cover_time, measure_packet_times, measure_return_times};
use dcstore_core::{peel, peel_two_stage, DegreeDistribution, Network, PrecodeConfig, QuerySet};
use dcstore_sim::experiments::{run_plan, transmission_scaling, ResultRow};
use dcstore_sim::plan::{Algorithm, ExperimentPlan};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const DENSITY: f64 = 40.0 / 9.0;

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        println!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id.to_string());
        }
    }
}

fn ps_at(rows: &[ResultRow], eta: f64) -> f64 {
    rows.iter().find(|r| r.eta == eta).expect("eta on grid").ps
}

fn oracle_plan(n: usize, k: usize, etas: &[f64]) -> ExperimentPlan {
    ExperimentPlan {
        eta_grid: etas.to_vec(),
        subsets: 200,
        seeds: 10,
        ..ExperimentPlan::new(Algorithm::LtcdsOracle, n, k)
    }
}

const THRESHOLD_GRID: [f64; 14] = [
    1.0, 1.05, 1.1, 1.15, 1.2, 1.25, 1.3, 1.35, 1.4, 1.45, 1.5, 1.7, 2.0, 2.5,
];

fn criteria_1_2(r: &mut Report) {
    let mut plateau = Vec::new();
    let mut threshold = Vec::new();
    for (n, k) in [(200, 20), (500, 50)] {
        let rows = run_plan(&oracle_plan(n, k, &THRESHOLD_GRID), None).unwrap().rows;
        let top = ps_at(&rows, 2.5);
        plateau.push((format!("n={n}/k={k} Ps(2.5)={top:.4}"), top >= 0.95));
        let low = ps_at(&rows, 1.0);
        let cross = rows.iter().find(|row| row.ps > 0.5).map(|row| row.eta);
        let ok = low <= 0.05 && cross.is_some_and(|e| (1.05..=1.5).contains(&e));
        let curve: Vec<String> = rows.iter().map(|row| format!("{}:{:.3}", row.eta, row.ps)).collect();
        threshold.push((
            format!(
                "n={n}/k={k} Ps(1.0)={low:.4} first eta with Ps>0.5: {} [{}]",
                cross.map_or("none".into(), |e| e.to_string()),
                curve.join(" ")
            ),
            ok,
        ));
    }
    let join = |v: &[(String, bool)]| v.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>().join("; ");
    r.line(
        "1 Ps plateau (Ps(2.5) >= 0.95)",
        plateau.iter().all(|p| p.1),
        join(&plateau),
    );
    r.line(
        "2 decoding threshold (Ps(1.0) <= 0.05, crossing in [1.05, 1.5])",
        threshold.iter().all(|p| p.1),
        join(&threshold),
    );
}

fn criteria_3_4(r: &mut Report) {
    let (n, k, seeds) = (1000usize, 100usize, 20u64);
    let family = DegreeFamily::Robust { c0: 0.1, delta: 0.5 };
    let dist = family.build(k).unwrap();
    let thinned = dist.thinned(k);
    let mut counts = vec![0usize; k + 1];
    for t in 0..seeds {
        let seed = derive_seed(3, t);
        let net = Network::generate(n, DENSITY, seed).unwrap();
        let sources = place_sources(n, k, seed);
        let cfg = LtcdsConfig {
            family,
            oracle: Some((n, k)),
            ..LtcdsConfig::default()
        };
        for set in run_ltcds(&net, &sources, &cfg, seed).stored_sets() {
            counts[set.len()] += 1;
        }
    }
    let total = counts.iter().sum::<usize>() as f64;
    let empty = counts[0] as f64 / total;
    let e2 = (-2.0f64).exp();
    let (lo, hi) = (0.5 * e2 - 0.03, e2 + 0.15);
    r.line(
        "3 empty-storage fraction bracket",
        empty > lo && empty < hi,
        format!("empty fraction {empty:.4} (thinned law {:.4}) in ({lo:.4}, {hi:.4})", thinned[0]),
    );

    // Adjacent bins are pooled until each expects at least 5 nodes.
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for i in 0..=k {
        e_acc += thinned[i] * total;
        o_acc += counts[i] as f64;
        if e_acc >= 5.0 {
            stat += (o_acc - e_acc).powi(2) / e_acc;
            bins += 1;
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if e_acc > 0.0 {
        stat += (o_acc - e_acc).powi(2) / e_acc;
        bins += 1;
    }
    let crit = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
    let mean: f64 = counts.iter().enumerate().map(|(i, &c)| (i * c) as f64).sum::<f64>() / total;
    let d = dist.mean();
    let rel = (mean - d).abs() / d;
    r.line(
        "4 thinned-degree law",
        stat < crit && rel <= 0.05,
        format!(
            "chi2={stat:.2} on {bins} bins (99% critical {crit:.2}); mean stored degree {mean:.4} vs {d:.4} (rel {rel:.4})"
        ),
    );
}

fn criterion_5(r: &mut Report) {
    let (n, k) = (200usize, 20usize);
    let (mut ks, mut ns) = (Vec::new(), Vec::new());
    for t in 0..10 {
        let seed = derive_seed(7, t);
        let net = Network::generate(n, DENSITY, seed).unwrap();
        let sources = place_sources(n, k, seed);
        let out = run_inference(&net, &sources, 50, seed, u64::MAX);
        for e in out.estimates.iter().flatten() {
            ks.push(e.k_hat as f64);
            ns.push(e.n_hat);
        }
    }
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for &x in &ks {
        *hist.entry(x as usize).or_default() += 1;
    }
    let mode = hist.iter().max_by_key(|&(_, c)| *c).map(|(&v, _)| v).unwrap();
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
        (m, var.sqrt() / m)
    };
    let (k_mean, k_cv) = stats(&ks);
    let (n_mean, n_cv) = stats(&ns);
    r.line(
        "5 estimator quality",
        mode == k && (k_mean - k as f64).abs() <= 0.2 * k as f64 && k_cv < n_cv,
        format!("k_hat mode {mode}, mean {k_mean:.3}, CV {k_cv:.4}; n_hat mean {n_mean:.1}, CV {n_cv:.4}"),
    );
}

fn criterion_6(r: &mut Report) {
    let (n, k) = (1000, 100);
    let base = ExperimentPlan {
        c1: 10.0,
        c2: 50,
        ..oracle_plan(n, k, &[2.0])
    };
    let oracle = ps_at(&run_plan(&base, None).unwrap().rows, 2.0);
    let est_plan = ExperimentPlan {
        algorithm: Algorithm::LtcdsEstimated,
        ..base
    };
    let est = ps_at(&run_plan(&est_plan, None).unwrap().rows, 2.0);
    r.line(
        "6 estimated vs oracle gap",
        (est - oracle).abs() <= 0.05,
        format!("n={n}/k={k} eta=2 C1=10 C2=50: estimated {est:.4}, oracle {oracle:.4}"),
    );
}

fn criterion_7(r: &mut Report) {
    let c1_ps = |c1: f64| {
        let plan = ExperimentPlan {
            c1,
            ..oracle_plan(500, 50, &[2.0])
        };
        ps_at(&run_plan(&plan, None).unwrap().rows, 2.0)
    };
    let (p1, p3, p5) = (c1_ps(1.0), c1_ps(3.0), c1_ps(5.0));
    let c2_ps = |c2: u32| {
        let plan = ExperimentPlan {
            algorithm: Algorithm::LtcdsEstimated,
            c1: 10.0,
            c2,
            ..oracle_plan(100, 10, &[2.0])
        };
        ps_at(&run_plan(&plan, None).unwrap().rows, 2.0)
    };
    let (q30, q50) = (c2_ps(30), c2_ps(50));
    r.line(
        "7 C1 and C2 plateaus",
        (p3 - p5).abs() <= 0.05 && (q30 - q50).abs() <= 0.05,
        format!("500/50: Ps(C1=3)={p3:.4} Ps(C1=5)={p5:.4}; 100/10: Ps(C2=30)={q30:.4} Ps(C2=50)={q50:.4}"),
    );
    r.line(
        "7+ C1 sweep margin (Ps(C1=3) - Ps(C1=1) > 0.1)",
        p3 - p1 > 0.1,
        format!("500/50 eta=2: Ps(C1=1)={p1:.4} Ps(C1=3)={p3:.4} margin {:.4}", p3 - p1),
    );
}

fn criterion_8(r: &mut Report) {
    let base = oracle_plan(100, 10, &[1.0]);
    let rows = transmission_scaling(&base, &[100, 200, 400], 0.1, None).unwrap();
    let v: Vec<f64> = rows.iter().map(|row| row.normalized).collect();
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    r.line(
        "8 transmission scaling",
        max / min < 2.0,
        format!("transmissions/(k n ln n) = {v:.4?}, max/min {:.4}", max / min),
    );
}

fn mean(v: &[u32]) -> f64 {
    v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Graphs per size in the cover-time family; single graphs are heavy-tailed.
const COVER_GRAPHS: usize = 30;

fn criterion_9(r: &mut Report) {
    let n = 200;
    let k = 20;
    let net = Network::generate(n, DENSITY, derive_seed(9, 0)).unwrap();
    let two_e: f64 = (0..n).map(|u| net.degree(u) as f64).sum();
    let mut g = rng::stream(9, Purpose::Probe, 0);
    let visits = measure_return_times(&net, 0, 2_000_000, &mut g);
    let packets = measure_packet_times(&net, k, 100_000, &mut g);
    let nodes: Vec<usize> = (0..n).filter(|&u| visits[u].len() >= 500 && packets[u].len() >= 500).collect();
    let visit_err = median(
        nodes
            .iter()
            .map(|&u| {
                let expect = two_e / net.degree(u) as f64;
                (mean(&visits[u]) - expect).abs() / expect
            })
            .collect(),
    );
    let packet_err = median(
        nodes
            .iter()
            .map(|&u| {
                let expect = mean(&visits[u]) / k as f64;
                (mean(&packets[u]) - expect).abs() / expect
            })
            .collect(),
    );
    let cover: Vec<f64> = [100usize, 200, 400]
        .iter()
        .map(|&m| {
            let mut g = rng::stream(9, Purpose::Probe, m as u64);
            let total: f64 = (0..COVER_GRAPHS)
                .map(|i| {
                    let net = Network::generate(m, DENSITY, derive_seed(9, (m * 1000 + i) as u64)).unwrap();
                    measure_cover_time(&net, 20, &mut g)
                })
                .sum();
            total / COVER_GRAPHS as f64 / (m as f64 * (m as f64).ln())
        })
        .collect();
    let cmax = cover.iter().cloned().fold(f64::MIN, f64::max);
    let cmin = cover.iter().cloned().fold(f64::MAX, f64::min);
    r.line(
        "9 random-walk physics",
        visit_err < 0.10 && packet_err < 0.10 && cmax / cmin < 2.0,
        format!(
            "inter-visit median rel err {visit_err:.4} over {} nodes; inter-packet vs inter-visit/k {packet_err:.4}; cover/(n ln n) {cover:.3?} (max/min {:.3})",
            nodes.len(),
            cmax / cmin
        ),
    );
}

type Sets = Vec<BTreeSet<u32>>;

fn random_sets<R: Rng>(g: &mut R, k: u32, count: usize, max_len: usize) -> Sets {
    (0..count)
        .map(|_| {
            let len = g.gen_range(0..=max_len);
            (0..len).map(|_| g.gen_range(0..k)).collect()
        })
        .collect()
}

fn query(sets: &Sets) -> QuerySet {
    QuerySet::new(sets.iter().map(|s| s.iter().copied().collect()).collect())
}

/// Exhaustive search over every order of peeling singletons.
fn any_order_recovers(sets: &Sets, known: &BTreeSet<u32>, k: usize) -> bool {
    if (0..k as u32).all(|v| known.contains(&v)) {
        return true;
    }
    let singles: BTreeSet<u32> = sets
        .iter()
        .filter_map(|s| {
            let open: Vec<u32> = s.difference(known).copied().collect();
            (open.len() == 1).then(|| open[0])
        })
        .collect();
    singles.into_iter().any(|v| {
        let mut next = known.clone();
        next.insert(v);
        any_order_recovers(sets, &next, k)
    })
}

/// Substitutes each pre-code ID by its source set, XOR-composing, then peels.
fn expand_and_peel(sets: &Sets, map: &[Vec<u32>], k: usize) -> bool {
    let composed: Vec<Vec<u32>> = sets
        .iter()
        .map(|s| {
            let mut acc = BTreeSet::new();
            for &j in s {
                for &x in &map[j as usize] {
                    if !acc.insert(x) {
                        acc.remove(&x);
                    }
                }
            }
            acc.into_iter().collect()
        })
        .collect();
    peel(&QuerySet::new(composed), k).success
}

fn criterion_10(r: &mut Report) {
    let mut g = rng::stream(10, Purpose::Probe, 0);
    let mut parts: Vec<(String, bool)> = Vec::new();

    let (mut order_ok, mut mono_ok, mut brute_ok) = (true, true, true);
    for _ in 0..2000 {
        let k = g.gen_range(1..=8u32);
        let count = g.gen_range(0..12);
        let sets = random_sets(&mut g, k, count, k as usize);
        let d = peel(&query(&sets), k as usize);
        let mut rev = sets.clone();
        rev.reverse();
        order_ok &= peel(&query(&rev), k as usize) == d;
        let mut more = sets.clone();
        more.extend(random_sets(&mut g, k, 3, k as usize));
        let big = peel(&query(&more), k as usize);
        mono_ok &= d.recovered.iter().all(|v| big.recovered.contains(v)) && (!d.success || big.success);
        brute_ok &= d.success == any_order_recovers(&sets, &BTreeSet::new(), k as usize);
    }
    parts.push(("peel order invariance".into(), order_ok));
    parts.push(("peel monotonicity".into(), mono_ok));
    parts.push(("brute-force oracle k<=8".into(), brute_ok));

    let (mut agree, mut cases) = (0usize, 0usize);
    for _ in 0..2000 {
        let k = g.gen_range(1..=6usize);
        let m = g.gen_range(k..=8usize);
        let map: Vec<Vec<u32>> = (0..m)
            .map(|_| {
                let s: BTreeSet<u32> = (0..g.gen_range(1..=3)).map(|_| g.gen_range(0..k as u32)).collect();
                s.into_iter().collect()
            })
            .collect();
        let count = g.gen_range(0..10);
        let sets = random_sets(&mut g, m as u32, count, 3);
        let two = peel_two_stage(&query(&sets), &map, k, m).unwrap().success;
        cases += 1;
        agree += usize::from(two == expand_and_peel(&sets, &map, k));
    }
    parts.push((format!("two-stage vs expand-and-peel k<=6 ({agree}/{cases} agree)"), agree == cases));

    let mut graph_ok = true;
    for seed in 0..20 {
        let a = Network::generate(150, DENSITY, seed).unwrap();
        let b = Network::generate(150, DENSITY, seed).unwrap();
        graph_ok &= a.positions() == b.positions();
        for u in 0..150 {
            graph_ok &= a.neighbors(u) == b.neighbors(u);
            graph_ok &= a.neighbors(u).iter().all(|&v| a.neighbors(v as usize).contains(&(u as u32)));
        }
    }
    parts.push(("graph symmetry and determinism".into(), graph_ok));

    let mut norm_ok = true;
    for k in [1usize, 2, 10, 100, 1000] {
        let mut dists = vec![DegreeDistribution::ideal_soliton(k).unwrap()];
        dists.extend(DegreeDistribution::robust_soliton(k, 0.1, 0.5));
        for d in dists {
            norm_ok &= (d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12;
            norm_ok &= (d.thinned(k).iter().sum::<f64>() - 1.0).abs() < 1e-9;
        }
    }
    parts.push(("distribution normalization".into(), norm_ok));

    let net = Network::generate(200, DENSITY, 10).unwrap();
    let sources = place_sources(200, 20, 10);
    let cfg = LtcdsConfig {
        payloads: true,
        trace: true,
        ..LtcdsConfig::default()
    };
    let out = run_ltcds(&net, &sources, &cfg, 10);
    let xor_ok = out.nodes.iter().all(|node| {
        node.storage.as_ref().is_some_and(|s| {
            s.payload() == Some(s.stored().iter().fold(0, |a, &id| a ^ source_payload(10, id)))
        })
    });
    parts.push(("XOR payload consistency".into(), xor_ok));

    let again = run_ltcds(&net, &sources, &cfg, 10);
    let plan = ExperimentPlan {
        algorithm: Algorithm::Rcds,
        subsets: 50,
        seeds: 3,
        ..oracle_plan(150, 15, &[1.5, 2.0])
    };
    let (p1, p2) = (run_plan(&plan, Some(1)).unwrap(), run_plan(&plan, None).unwrap());
    let replay_ok = again.nodes == out.nodes && again.trace == out.trace && p1.rows == p2.rows;
    parts.push(("bit-exact replay".into(), replay_ok));

    let detail: Vec<String> = parts
        .iter()
        .map(|(name, ok)| format!("{name}: {}", if *ok { "ok" } else { "FAILED" }))
        .collect();
    r.line("10 property suites", parts.iter().all(|p| p.1), detail.join("; "));
}

fn rcds_head_to_head(r: &mut Report) {
    let (n, k, m) = (500usize, 50usize, 55usize);
    let (mut two, mut plain) = (0usize, 0usize);
    let seeds = 20;
    for t in 0..seeds {
        let seed = derive_seed(2024, t);
        let net = Network::generate(n, DENSITY, seed).unwrap();
        let sources = place_sources(n, k, seed);
        let lt_cfg = LtcdsConfig {
            oracle: Some((n, k)),
            ..LtcdsConfig::default()
        };
        plain += lt_success_counts(&run_ltcds(&net, &sources, &lt_cfg, seed).stored_sets(), k, &[2.0], 200, seed)[0];
        let cfg = RcdsConfig {
            precode: PrecodeConfig {
                m,
                ..PrecodeConfig::for_sources(k)
            },
            inner: LtcdsConfig::default(),
            inner_known: true,
        };
        let out = run_rcds(&net, &sources, &cfg, seed).unwrap();
        let map = &out.precode.precode_map;
        let mut g = rng::stream(seed, Purpose::Query, 0);
        two += count_successes(&out.inner.stored_sets(), 2 * k, 200, &mut g, |q| {
            peel_two_stage(q, map, k, map.len()).unwrap().success
        });
    }
    let total = (seeds * 200) as f64;
    let (pt, pp) = (two as f64 / total, plain as f64 / total);
    r.line(
        "10+ two-stage vs single-stage at eta=2 (n=500, k=50, m=55)",
        pt >= pp,
        format!("two-stage Ps {pt:.4}, single-stage Ps {pp:.4}"),
    );
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    let steps: [(&str, fn(&mut Report)); 9] = [
        ("1-2", criteria_1_2),
        ("3-4", criteria_3_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
        ("10+", rcds_head_to_head),
    ];
    for (name, step) in steps {
        let t = Instant::now();
        step(&mut r);
        eprintln!("  ({name} took {:.1?})", t.elapsed());
    }
    if r.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", r.failed.len(), r.failed.join(", "));
        std::process::exit(1);
    }
}
