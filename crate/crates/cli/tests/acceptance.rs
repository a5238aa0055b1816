//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Tolerances are the contract values. A failed criterion is reported as
//! FAIL with its evidence; the process exits nonzero on any failure only
//! when `PHILASSO_ACCEPTANCE_STRICT` is set, so `cargo test` still runs the
//! remaining suites.

mod common;

use std::path::Path;
use std::time::Instant;

use philasso::parallel;
use philasso_core::decompose::{partial_inverse, penalty_decomposed, Decomposition};
use philasso_core::glm::{gradient, log_likelihood, Dataset, Family};
use philasso_core::sim::{gen_design, population_covariance, ExperimentConfig, SimConfig};
use philasso_core::solver::{phi_lasso_fit, weighted_lasso, SolverOptions, WeightedLassoProblem};
use philasso_core::taxonomy::{singleton_taxonomy, Taxonomy};
use philasso_core::tuning::{auc, lambda_max};
use philasso_core::{rng, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = r.random_range(f64::EPSILON..1.0);
    let v: f64 = r.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Random nested taxonomy with `depth` grouping levels.
fn random_taxonomy(p: usize, depth: usize, r: &mut impl Rng) -> Taxonomy {
    let mut labels: Vec<Vec<usize>> = Vec::new();
    let top = r.random_range(1..=p.min(6));
    labels.push((0..p).map(|_| r.random_range(0..top)).collect());
    for t in 1..depth {
        let split = r.random_range(1..=3);
        let prev = labels[t - 1].clone();
        labels.push(prev.iter().map(|&g| g * 3 + r.random_range(0..split)).collect());
    }
    let grouping = labels
        .iter()
        .map(|lab| {
            let mut ids = lab.clone();
            ids.sort_unstable();
            ids.dedup();
            ids.iter().map(|&g| (0..p).filter(|&j| lab[j] == g).collect()).collect()
        })
        .collect();
    Taxonomy::from_grouping_levels(p, grouping).unwrap()
}

fn random_beta(p: usize, density: f64, r: &mut impl Rng) -> Vec<f64> {
    (0..p)
        .map(|_| if r.random_bool(density) { 3.0 * normal(r) } else { 0.0 })
        .collect()
}

fn random_dataset(n: usize, p: usize, family: Family, intercept: bool, r: &mut impl Rng) -> Dataset {
    let x: Vec<f64> = (0..n * p).map(|_| normal(r)).collect();
    let x = Matrix::from_col_major(n, p, x).unwrap();
    let beta: Vec<f64> = (0..p).map(|_| if r.random_bool(0.4) { normal(r) } else { 0.0 }).collect();
    let eta = x.mul_vec(&beta);
    let mut y: Vec<f64> = eta
        .iter()
        .map(|&e| match family {
            Family::Gaussian => e + 0.3 + normal(r),
            Family::Logistic => f64::from(u8::from(r.random_bool(1.0 / (1.0 + (-e).exp())))),
        })
        .collect();
    if family == Family::Logistic {
        y[0] = 0.0;
        y[1] = 1.0;
    }
    Dataset::new(x, y, family, intercept).unwrap()
}

fn c1_closed_form() -> Outcome {
    let mut r = seeded(101);
    let mut worst = 0.0f64;
    let start = Instant::now();
    for _ in 0..1000 {
        let p = r.random_range(1..=32);
        let tax = random_taxonomy(p, 1, &mut r);
        let beta = random_beta(p, 0.7, &mut r);
        let q = match r.random_range(0..3) {
            0 => 1.0,
            1 => 2.0,
            _ => r.random_range(0.5..3.0),
        };
        let d = partial_inverse(&beta, &tax, q, 1e-14).unwrap();
        for (k, taxon) in tax.grouping_levels()[0].taxa.iter().enumerate() {
            let norm = taxon.members.iter().map(|&j| beta[j].abs().powf(q)).sum::<f64>().powf(1.0 / q);
            let dk = norm.sqrt();
            worst = worst.max((d.d[0][k] - dk).abs());
            for &j in &taxon.members {
                let a = if dk == 0.0 { 0.0 } else { beta[j] / dk };
                worst = worst.max((d.alpha[j] - a).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && secs < 5.0,
        format!("max deviation {worst:.2e} (tol 1e-12), {secs:.2} s (limit 5 s)"),
    )
}

/// Penalty of the fiber point with log-multipliers shifted by `u`.
fn moved_penalty(d: &Decomposition, tax: &Taxonomy, beta: &[f64], u: &[Vec<f64>]) -> f64 {
    let mut m = d.clone();
    for (t, ut) in u.iter().enumerate() {
        for (k, uk) in ut.iter().enumerate() {
            m.d[t][k] *= uk.exp();
        }
    }
    for (j, a) in m.alpha.iter_mut().enumerate() {
        let prod: f64 = (0..tax.depth()).map(|t| m.d[t][tax.taxon_of(t, j)]).product();
        *a = if beta[j] == 0.0 { 0.0 } else { beta[j] / prod };
    }
    penalty_decomposed(&m, 1.0)
}

fn c2_fiber_optimality() -> Outcome {
    let mut r = seeded(202);
    let start = Instant::now();
    let mut worst_gain = f64::NEG_INFINITY;
    let mut trials = 0usize;
    for _ in 0..100 {
        let p = r.random_range(2..=64);
        let depth = r.random_range(1..=3);
        let tax = random_taxonomy(p, depth, &mut r);
        let beta = random_beta(p, 0.6, &mut r);
        let d = partial_inverse(&beta, &tax, 1.0, 1e-14).unwrap();
        let base = penalty_decomposed(&d, 1.0);
        let zero_u: Vec<Vec<f64>> = d.d.iter().map(|l| vec![0.0; l.len()]).collect();
        let active: Vec<(usize, usize)> = d
            .d
            .iter()
            .enumerate()
            .flat_map(|(t, l)| l.iter().enumerate().filter(|(_, v)| **v > 0.0).map(move |(k, _)| (t, k)))
            .collect();
        let mut check = |u: &Vec<Vec<f64>>| {
            let gain = base - moved_penalty(&d, &tax, &beta, u);
            worst_gain = worst_gain.max(gain);
            trials += 1;
        };
        for &(t, k) in &active {
            for s in [1e-6, 1e-3, 0.1, 0.7] {
                for sign in [-1.0, 1.0] {
                    let mut u = zero_u.clone();
                    u[t][k] = sign * s;
                    check(&u);
                }
            }
        }
        for s in [1e-4, 1e-2, 0.3] {
            for _ in 0..100 {
                let mut u = zero_u.clone();
                for &(t, k) in &active {
                    u[t][k] = s * normal(&mut r);
                }
                check(&u);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_gain <= 1e-9 && secs < 60.0,
        format!("{trials} fiber points, largest penalty decrease {worst_gain:.2e} (tol 1e-9), {secs:.2} s (limit 60 s)"),
    )
}

fn c3_bridge_equivalence() -> Outcome {
    const STEP: f64 = 1e-3;
    let mut r = seeded(303);
    let tax = singleton_taxonomy(2, 1).unwrap();
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for inst in 0..20 {
        let n = 40;
        let x: Vec<f64> = (0..2 * n).map(|_| normal(&mut r)).collect();
        let x = Matrix::from_col_major(n, 2, x).unwrap();
        let truth = [r.random_range(0.3..2.0) * sign(&mut r), r.random_range(0.3..2.0) * sign(&mut r)];
        let y: Vec<f64> = x.mul_vec(&truth).iter().map(|e| e + normal(&mut r)).collect();
        let data = Dataset::new(x.clone(), y.clone(), Family::Gaussian, false).unwrap();
        let lambda = r.random_range(0.02..0.3) * lambda_max(&data).unwrap();
        let fit = phi_lasso_fit(&data, &tax, lambda, &SolverOptions::default(), None).unwrap();
        let lp = 2.0 * n as f64 * lambda;

        // sufficient statistics of -(1/2)||y - X b||^2
        let g11: f64 = x.col(0).iter().map(|v| v * v).sum();
        let g22: f64 = x.col(1).iter().map(|v| v * v).sum();
        let g12: f64 = x.col(0).iter().zip(x.col(1)).map(|(a, b)| a * b).sum();
        let c1: f64 = x.col(0).iter().zip(&y).map(|(a, b)| a * b).sum();
        let c2: f64 = x.col(1).iter().zip(&y).map(|(a, b)| a * b).sum();
        let det = g11 * g22 - g12 * g12;
        let ols = [(g22 * c1 - g12 * c2) / det, (g11 * c2 - g12 * c1) / det];
        let k = ((ols[0].abs().max(ols[1].abs()) * 1.5 + 0.5) / STEP).ceil() as i64;
        let values: Vec<f64> = (-k..=k).map(|i| i as f64 * STEP).collect();
        let t1: Vec<f64> = values.iter().map(|&b| c1 * b - 0.5 * g11 * b * b - lp * b.abs().sqrt()).collect();
        let t2: Vec<f64> = values.iter().map(|&b| c2 * b - 0.5 * g22 * b * b - lp * b.abs().sqrt()).collect();
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for (i, &b1) in values.iter().enumerate() {
            let cross = g12 * b1;
            for (jj, &b2) in values.iter().enumerate() {
                let v = t1[i] + t2[jj] - cross * b2;
                if v > best.0 {
                    best = (v, b1, b2);
                }
            }
        }
        let dev = (fit.beta[0] - best.1).abs().max((fit.beta[1] - best.2).abs());
        worst = worst.max(dev);
        if dev > STEP {
            let b = &fit.beta;
            let at_fit = c1 * b[0] + c2 * b[1] - 0.5 * (g11 * b[0] * b[0] + 2.0 * g12 * b[0] * b[1] + g22 * b[1] * b[1])
                - lp * (b[0].abs().sqrt() + b[1].abs().sqrt());
            let kind = if fit.converged {
                "converged to a local maximum".to_string()
            } else {
                format!("not converged, {} revival steps", fit.revivals.iter().filter(|&&v| v > 0).count())
            };
            details.push(format!(
                "#{inst} fit ({:.4}, {:.4}) objective {at_fit:.4} vs grid ({:.3}, {:.3}) objective {:.4}, {kind}",
                b[0], b[1], best.1, best.2, best.0
            ));
        }
    }
    let mut detail = format!(
        "{}/20 instances within tolerance, max |fit - grid argmax| {worst:.2e} (tol {STEP:.0e})",
        20 - details.len()
    );
    if !details.is_empty() {
        detail.push_str("; ");
        detail.push_str(&details.join("; "));
    }
    outcome(worst <= STEP, detail)
}

fn sign(r: &mut impl Rng) -> f64 {
    if r.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Subgradient violation computed from first principles.
fn independent_kkt(data: &Dataset, beta: &[f64], b0: f64, lambda: f64, factors: &[f64]) -> f64 {
    let n = data.n();
    let x = data.x();
    let resid: Vec<f64> = (0..n)
        .map(|i| {
            let eta = b0 + (0..data.p()).map(|j| x.get(i, j) * beta[j]).sum::<f64>();
            let mu = match data.family() {
                Family::Gaussian => eta,
                Family::Logistic => 1.0 / (1.0 + (-eta).exp()),
            };
            data.y()[i] - mu
        })
        .collect();
    let mut worst = 0.0f64;
    for j in 0..data.p() {
        let g = (0..n).map(|i| x.get(i, j) * resid[i]).sum::<f64>() / n as f64;
        let thr = lambda * factors[j];
        let v = if beta[j] == 0.0 { (g.abs() - thr).max(0.0) } else { (g - thr * beta[j].signum()).abs() };
        worst = worst.max(v);
    }
    if data.intercept() {
        worst = worst.max((resid.iter().sum::<f64>() / n as f64).abs());
    }
    worst
}

fn c4_kkt() -> Outcome {
    let mut r = seeded(404);
    let opts = SolverOptions::default();
    let (mut total, mut converged, mut certified) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    for family in [Family::Gaussian, Family::Logistic] {
        for _ in 0..150 {
            let n = r.random_range(15..80);
            let p = r.random_range(1..25);
            let data = random_dataset(n, p, family, r.random_bool(0.7), &mut r);
            let lmax = lambda_max(&data).unwrap();
            let lambda = r.random_range(0.01..1.0) * lmax;
            let mut cases: Vec<Vec<f64>> = vec![vec![1.0; p], (0..p).map(|_| r.random_range(0.1..10.0)).collect()];
            let tax = random_taxonomy(p, r.random_range(1..=3), &mut r);
            let phi = phi_lasso_fit(&data, &tax, lambda, &opts, None).unwrap();
            cases.push(phi.penalty_factors.clone());
            for factors in cases {
                let problem = WeightedLassoProblem::new(&data, lambda, factors.clone(), opts).unwrap();
                let fit = weighted_lasso(&problem, None).unwrap();
                total += 1;
                if fit.converged {
                    converged += 1;
                    let v = independent_kkt(&data, &fit.beta, fit.intercept, lambda, &factors);
                    worst = worst.max(v);
                    certified += usize::from(v <= 1e-6);
                }
            }
        }
    }
    outcome(
        certified == converged && converged > 0,
        format!("{certified}/{converged} converged fits certified ({total} fits, both families), worst residual {worst:.2e} (tol 1e-6)"),
    )
}

fn c5_gradients() -> Outcome {
    let mut r = seeded(505);
    let mut worst = [0.0f64; 2];
    for (f, family) in [Family::Gaussian, Family::Logistic].into_iter().enumerate() {
        for _ in 0..100 {
            let n = r.random_range(5..60);
            let p = r.random_range(1..12);
            let data = random_dataset(n, p, family, true, &mut r);
            let beta: Vec<f64> = (0..p).map(|_| normal(&mut r)).collect();
            let b0 = normal(&mut r);
            let g = gradient(&data, &beta, b0).unwrap();
            let h = 1e-5;
            let mut err2 = 0.0;
            let mut norm2 = 0.0;
            for j in 0..=p {
                let at = |s: f64| {
                    let mut b = beta.clone();
                    let mut i0 = b0;
                    if j < p {
                        b[j] += s;
                    } else {
                        i0 += s;
                    }
                    log_likelihood(&data, &b, i0).unwrap()
                };
                let fd = (at(h) - at(-h)) / (2.0 * h);
                err2 += (fd - g[j]).powi(2);
                norm2 += g[j] * g[j];
            }
            worst[f] = worst[f].max((err2 / norm2.max(f64::MIN_POSITIVE)).sqrt());
        }
    }
    outcome(
        worst[0] < 1e-6 && worst[1] < 1e-6,
        format!(
            "max relative error gaussian {:.2e}, logistic {:.2e} (tol 1e-6, 100 instances each)",
            worst[0], worst[1]
        ),
    )
}

fn normal_tail(z: f64) -> f64 {
    libm::erfc(z / std::f64::consts::SQRT_2)
}

fn c6_generator() -> Outcome {
    let cfg = SimConfig::desk();
    let tax = cfg.generator_taxonomy().unwrap();
    let p = cfg.p();
    let n = 10_000;
    let mut stream = rng::derived_rng(cfg.seed, rng::purpose::DATASET, n as u64, 0);
    let x = gen_design(&cfg, &tax, n, &mut stream).unwrap();
    let means: Vec<f64> = (0..p).map(|j| x.col(j).iter().sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = (0..p).map(|j| x.col(j).iter().map(|v| v - means[j]).collect()).collect();
    let (mut worst, mut exceed, mut expected) = (0.0f64, 0usize, 0.0f64);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..p {
        for k in j..p {
            let c = centered[j].iter().zip(&centered[k]).map(|(a, b)| a * b).sum::<f64>() / (n - 1) as f64;
            let s = population_covariance(&cfg, &tax, j, k);
            let dev = (c - s).abs();
            worst = worst.max(dev);
            exceed += usize::from(dev > 0.03);
            let sd = ((population_covariance(&cfg, &tax, j, j) * population_covariance(&cfg, &tax, k, k) + s * s)
                / n as f64)
                .sqrt();
            expected += normal_tail(0.03 / sd);
            if j == k {
                vmin = vmin.min(c);
                vmax = vmax.max(c);
            }
        }
    }
    let entries = p * (p + 1) / 2;
    let cov_ok = worst <= 0.03;
    let var_ok = vmin >= 0.95 && vmax <= 1.05;
    outcome(
        cov_ok && var_ok,
        format!(
            "max |cov - analytic| {worst:.4} (tol 0.03): {exceed}/{entries} entries outside, sampling theory for an exact generator expects {expected:.0}; variances in [{vmin:.4}, {vmax:.4}] (tol [0.95, 1.05])"
        ),
    )
}

fn c7_desk_trends() -> Outcome {
    let cfg = ExperimentConfig::desk();
    let start = Instant::now();
    let res = parallel::run_experiment(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let med = |method: &str, n: usize, metric: &str| res.row(method, n, metric).map_or(f64::NAN, |r| r.median);
    let recall: Vec<f64> = cfg.n_list.iter().map(|&n| med("philasso", n, "recall")).collect();
    let nmax = *cfg.n_list.last().unwrap();
    let precision = med("philasso", nmax, "precision");
    let mspe = med("philasso", nmax, "mspe");
    let oracle = med("oracle", nmax, "mspe");
    let clauses = [
        ("recall nondecreasing", recall.windows(2).all(|w| w[1] >= w[0])),
        ("recall >= 0.9", recall[recall.len() - 1] >= 0.9),
        ("precision >= 0.7", precision >= 0.7),
        ("MSPE within 25% of oracle", mspe <= 1.25 * oracle),
        ("runtime < 30 min", secs < 1800.0),
    ];
    let failed: Vec<&str> = clauses.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let mut detail = format!(
        "medians at n={nmax}: recall {recall:?}, precision {precision:.3}, MSPE {mspe:.4} vs oracle {oracle:.4} (ratio {:.3}); lambdas {:?}; {secs:.1} s",
        mspe / oracle,
        res.lambdas.iter().map(|(_, l)| (l * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    if !failed.is_empty() {
        detail.push_str(&format!("; failing clauses: {}", failed.join(", ")));
    }
    outcome(failed.is_empty(), detail)
}

fn pairwise_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1.0 && labels[j] == 0.0 {
                pairs += 1.0;
                num += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / pairs
}

fn c8_auc() -> Outcome {
    let mut r = seeded(808);
    let mut mismatches = 0;
    for i in 0..200 {
        let n = r.random_range(2..=200);
        let levels = if i % 2 == 0 { 5 } else { 1000 };
        let mut labels: Vec<f64> = (0..n).map(|_| f64::from(u8::from(r.random_bool(0.5)))).collect();
        labels[0] = 0.0;
        labels[1] = 1.0;
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..levels)) / 3.0).collect();
        if auc(&scores, &labels).unwrap() != pairwise_auc(&scores, &labels) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches}/200 instances differ from the pairwise count"))
}

fn run_cli(args: &[String]) -> std::process::Output {
    common::philasso(args)
}

fn cv_args(f: &common::Fixture, out: &Path) -> Vec<String> {
    let mut a = common::args(&["--seed", "17", "cv", "--folds", "loo", "--n-lambda", "20", "--out-dir"]);
    a.push(out.display().to_string());
    a.extend(f.data_args("logistic"));
    a
}

fn c9_cv_smoke(dir: &Path) -> Outcome {
    let f = common::write_fixture(dir, 17, 3, true, 17);
    let out = dir.join("cv");
    let o = run_cli(&cv_args(&f, &out));
    if !matches!(o.status.code(), Some(0) | Some(2)) {
        return outcome(false, format!("cv exited with {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
    }
    let curves = std::fs::read_to_string(out.join("cv.csv")).unwrap();
    let rows: Vec<Vec<&str>> = curves.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let curves_ok = rows.len() == 20 && rows.iter().all(|r| r[1].parse::<f64>().is_ok() && r[2].parse::<f64>().is_ok());
    let mut freq_ok = true;
    let mut selected = 0;
    for name in ["selection_by_auc.tsv", "selection_by_brier.tsv"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split('\t').collect();
        let col = header.iter().position(|h| *h == "frequency").unwrap();
        for line in text.lines().skip(1) {
            let v: f64 = line.split('\t').nth(col).unwrap().parse().unwrap();
            let k = (v * 17.0).round();
            freq_ok &= k / 17.0 == v;
            selected += 1;
        }
    }
    outcome(
        curves_ok && freq_ok && selected > 0,
        format!(
            "20 lambda rows with AUC and Brier: {curves_ok}; {selected} selection rows, all frequencies k/17: {freq_ok}"
        ),
    )
}

fn c10_determinism(dir: &Path) -> Outcome {
    let f = common::write_fixture(dir, 17, 3, true, 17);
    let sim_cfg = dir.join("sim.json");
    std::fs::write(&sim_cfg, serde_json::to_string(&ExperimentConfig::desk()).unwrap()).unwrap();
    let mut differing = Vec::new();
    let mut files = 0;
    let runs: Vec<_> = (0..2)
        .map(|i| {
            let out_cv = dir.join(format!("cv{i}"));
            let out_sim = dir.join(format!("sim{i}"));
            let cv = run_cli(&cv_args(&f, &out_cv));
            let threads = if i == 0 { "1" } else { "4" };
            let mut a = common::args(&["--seed", "1", "--threads", threads, "simulate", "--config"]);
            a.push(sim_cfg.display().to_string());
            a.push("--out-dir".into());
            a.push(out_sim.display().to_string());
            let sim = run_cli(&a);
            (out_cv, out_sim, cv.status.code(), sim.status.code())
        })
        .collect();
    for (sub, names) in [
        (0usize, &["cv.csv", "selection_by_auc.tsv", "selection_by_brier.tsv", "manifest.json"][..]),
        (1, &["experiment.csv", "replicates.csv", "lambdas.csv", "config.json", "manifest.json"][..]),
    ] {
        for name in names {
            let path = |r: &(std::path::PathBuf, std::path::PathBuf, Option<i32>, Option<i32>)| {
                if sub == 0 {
                    r.0.join(name)
                } else {
                    r.1.join(name)
                }
            };
            files += 1;
            match (std::fs::read(path(&runs[0])), std::fs::read(path(&runs[1]))) {
                (Ok(a), Ok(b)) if a == b => {}
                _ => differing.push(name.to_string()),
            }
        }
    }
    let codes_ok = runs.iter().all(|r| matches!(r.2, Some(0) | Some(2)) && r.3 == Some(0));
    outcome(
        differing.is_empty() && codes_ok,
        format!(
            "{}/{files} cv and simulate outputs byte-identical across reruns (1 and 4 threads){}",
            files - differing.len(),
            if differing.is_empty() { String::new() } else { format!("; differing: {}", differing.join(", ")) }
        ),
    )
}

type Criterion = (u32, &'static str, Box<dyn Fn() -> Outcome>);

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let cv_dir = dir.path().join("c9");
    let det_dir = dir.path().join("c10");
    std::fs::create_dir_all(&cv_dir).unwrap();
    std::fs::create_dir_all(&det_dir).unwrap();
    let criteria: Vec<Criterion> = vec![
        (1, "closed-form single-level decomposition", Box::new(c1_closed_form)),
        (2, "mass-equilibrium fiber optimality", Box::new(c2_fiber_optimality)),
        (3, "bridge-penalty equivalence", Box::new(c3_bridge_equivalence)),
        (4, "KKT certification", Box::new(c4_kkt)),
        (5, "gradient finite differences", Box::new(c5_gradients)),
        (6, "generator covariance fidelity", Box::new(c6_generator)),
        (7, "desk-scale performance trends", Box::new(c7_desk_trends)),
        (8, "midrank AUC equals pairwise oracle", Box::new(c8_auc)),
        (9, "LOO-CV workflow smoke", Box::new(move || c9_cv_smoke(&cv_dir))),
        (10, "byte-identical reruns", Box::new(move || c10_determinism(&det_dir))),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in &criteria {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {id:>2} {name} [{:.1} s]: {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(*id);
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() && std::env::var_os("PHILASSO_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
