//! Acceptance suite.
//!
//! Every criterion prints one `PASS` / `FAIL` line with its timing. The values are
//! checked against oracles computed here rather than inside the library.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::{Duration, Instant};
use thermoform::cli::load_fixture;
use thermoform::complexity::{
    essential_spectral_potential, forward_entropy, inverse_rami_rate, topological_entropy,
    topological_pressure, NetSchedule, PreimageParams,
};
use thermoform::measures::{
    bernoulli, cantor_frequency_bound, cantor_nonwandering, essential_set, integrate, is_essential,
    lebesgue, markov_measure, max_cycle_mean, max_ergodic_average, symbolic_representatives,
    EssentialParams, EssentialSetParams,
};
use thermoform::observable::Observable;
use thermoform::systems::{cantor_prefix_admissible, Point, SystemKind, SystemModel, Word};
use thermoform::tentropy::{
    cross_check_identities, legendre_dual, t_entropy_closed_form, t_entropy_partition,
    t_entropy_radon, verify_variational_principle, DualParams, Hypotheses, IdentityBundle,
    IdentityStatus, RadonParams,
};
use thermoform::transfer::{
    check_compatibility, perron_frobenius, spectral_potential, with_potential, Compatibility,
    CompatibilityParams, SpectralParams,
};

type Outcome = Result<(bool, String), String>;

fn report(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let took = start.elapsed();
    let (ok, detail) = match outcome {
        Ok((ok, detail)) => (ok && took <= limit, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let over = if took > limit {
        format!(" (over the {:?} limit)", limit)
    } else {
        String::new()
    };
    let line = format!(
        "{} [{:>2}] {name}: {detail} [{:.2}s]{over}\n",
        if ok { "PASS" } else { "FAIL" },
        id,
        took.as_secs_f64()
    );
    // Written straight to the process stdout so the lines show without --nocapture.
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    ok
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ln_golden() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).ln()
}

/// Perron root of a nonnegative matrix by power iteration.
fn perron_root(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    let mut v = vec![1.0; k];
    let mut root = 0.0;
    for _ in 0..5000 {
        let w: Vec<f64> = (0..k)
            .map(|i| (0..k).map(|j| m[i][j] * v[j]).sum())
            .collect();
        let norm = w.iter().cloned().fold(0.0, f64::max);
        v = w.iter().map(|x| x / norm).collect();
        if (norm - root).abs() < 1e-15 * norm {
            root = norm;
            break;
        }
        root = norm;
    }
    root
}

/// Preimage tree sum `Σ_{2ⁿy = x} Π ρ(·)e^{ψ(·)}` of the doubling map, summed depth first.
fn doubling_tree_sum(x: f64, n: usize, weight: &dyn Fn(f64) -> f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    [x / 2.0, (x + 1.0) / 2.0]
        .iter()
        .map(|&y| weight(y) * doubling_tree_sum(y, n - 1, weight))
        .sum()
}

/// `ln(S_{n+1}/S_n)` at a few points, converging geometrically to the spectral potential.
fn doubling_lambda_oracle(weight: &dyn Fn(f64) -> f64) -> f64 {
    let n = 18;
    [0.17, 0.5, 0.83]
        .iter()
        .map(|&x| (doubling_tree_sum(x, n + 1, weight) / doubling_tree_sum(x, n, weight)).ln())
        .sum::<f64>()
        / 3.0
}

/// Brute-force maximum cycle mean over simple cycles.
fn brute_cycle_mean(edges: &[Vec<(usize, f64)>]) -> Option<f64> {
    fn walk(
        edges: &[Vec<(usize, f64)>],
        start: usize,
        v: usize,
        on_path: &mut Vec<bool>,
        sum: f64,
        len: usize,
        best: &mut Option<f64>,
    ) {
        for &(u, w) in &edges[v] {
            if u == start {
                let mean = (sum + w) / (len + 1) as f64;
                *best = Some(best.map_or(mean, |b: f64| b.max(mean)));
            } else if u > start && !on_path[u] {
                on_path[u] = true;
                walk(edges, start, u, on_path, sum + w, len + 1, best);
                on_path[u] = false;
            }
        }
    }
    let mut best = None;
    for s in 0..edges.len() {
        let mut on_path = vec![false; edges.len()];
        on_path[s] = true;
        walk(edges, s, s, &mut on_path, 0.0, 0, &mut best);
    }
    best
}

/// Exhaustive maximum number of occurrences of `w` starting in `[0, len)` over admissible Cantor words.
fn cantor_exhaustive_visits(w: &[u8], len: usize) -> usize {
    fn grow(seq: &mut Vec<u8>, total: usize, w: &[u8], len: usize, best: &mut usize) {
        if seq.len() == total {
            let visits = (0..len).filter(|&i| seq[i..i + w.len()] == *w).count();
            *best = (*best).max(visits);
            return;
        }
        for s in [1u8, 0] {
            seq.push(s);
            if cantor_prefix_admissible(seq) {
                grow(seq, total, w, len, best);
            }
            seq.pop();
        }
    }
    let mut best = 0;
    grow(&mut Vec::new(), len + w.len(), w, len, &mut best);
    best
}

fn markov_entropy(p: &[Vec<f64>], pi: &[f64]) -> f64 {
    let mut h = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            if p[i][j] > 0.0 {
                h -= pi[i] * p[i][j] * p[i][j].ln();
            }
        }
    }
    h
}

fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let k = p.len();
    let mut pi = vec![1.0 / k as f64; k];
    for _ in 0..10_000 {
        pi = (0..k)
            .map(|j| (0..k).map(|i| pi[i] * p[i][j]).sum())
            .collect();
    }
    pi
}

fn c01_full_shift_flat() -> Outcome {
    let s = SystemModel::full_shift(2);
    let t = perron_frobenius(&s, Observable::constant(1.0)).map_err(err)?;
    let tr = spectral_potential(&t, &SpectralParams::new(20)).map_err(err)?;
    let ln2 = 2f64.ln();
    let worst = tr
        .cells
        .iter()
        .map(|c| (c.value - ln2).abs())
        .fold(0.0, f64::max);
    Ok((
        (tr.headline - ln2).abs() <= 1e-12 && worst <= 1e-12,
        format!(
            "lambda(0) = {:.15}, max trace deviation {worst:.1e}",
            tr.headline
        ),
    ))
}

fn c02_golden() -> Outcome {
    let s = SystemModel::golden_mean();
    let t = perron_frobenius(&s, Observable::constant(1.0)).map_err(err)?;
    let lambda = spectral_potential(&t, &SpectralParams::new(20))
        .map_err(err)?
        .headline;
    let h = topological_entropy(&s, &NetSchedule::for_host(&s))
        .map_err(err)?
        .headline();
    let oracle = perron_root(&[vec![1.0, 1.0], vec![1.0, 0.0]]).ln();
    let ok = (oracle - ln_golden()).abs() < 1e-12
        && (lambda - oracle).abs() <= 1e-2
        && (h - oracle).abs() <= 0.02;
    Ok((
        ok,
        format!("lambda = {lambda:.6}, h = {h:.6}, ln phi = {oracle:.6}"),
    ))
}

fn c03_square() -> Outcome {
    let f = load_fixture("square").map_err(err)?;
    let mut bundle = IdentityBundle::new("square", f.operator.clone(), f.info.hypotheses.clone());
    bundle.potentials = vec![("x1 + x2".into(), Observable::affine(0.0, vec![1.0, 1.0]))];
    bundle.n_max = 20;
    let rep = cross_check_identities(&bundle).map_err(err)?;
    let row = rep
        .rows
        .iter()
        .find(|r| r.identity == "lambda(psi) = P(psi + ln rho)")
        .ok_or("identity row missing")?;
    let (lambda, p) = (row.lhs, row.rhs);
    let ok = (0.95..=1.05).contains(&lambda)
        && (1.95..=2.05).contains(&p)
        && row.status == IdentityStatus::NotApplicable;
    Ok((
        ok,
        format!(
            "lambda = {lambda:.4}, P = {p:.4}, row {}",
            row.status.as_str()
        ),
    ))
}

fn c04_flat_top() -> Outcome {
    let params = EssentialSetParams {
        spacing: 1.0 / 1024.0,
        ..Default::default()
    };
    let e = essential_set(&SystemModel::flat_top(), &params).map_err(err)?;
    let ok = e.points == vec![Point::Real(0.0), Point::Real(1.0)];
    Ok((ok, format!("essential set {:?}", e.points)))
}

fn c05_cantor() -> Outcome {
    let returns = cantor_nonwandering(6, 256);
    let wandering: Vec<_> = returns.iter().filter(|r| r.return_time.is_none()).collect();
    let host = SystemModel::cantor_fixture();
    let reps = symbolic_representatives(&host, 6).map_err(err)?;
    let probe = EssentialParams {
        radius: 1.0 / 128.0,
        horizon: 256,
    };
    let star = Point::Word(Word::constant(0));
    let mut positive = Vec::new();
    for x in &reps {
        if is_essential(&host, x, &probe, &reps)
            .map_err(err)?
            .is_positive()
        {
            positive.push(x.clone());
        }
    }
    let only_star =
        positive.len() == 1 && host.distance(&positive[0], &star).map_err(err)? < probe.radius;
    let mut bound_fail = 0;
    let mut rows = 0;
    for n in 1..=14u32 {
        for m in 1..=4 {
            for f in cantor_frequency_bound(n, m) {
                rows += 1;
                // Small n: the greedy count must not beat the exhaustive maximum, which itself obeys the bound.
                let exhaustive_ok = n > 5 || {
                    let exhaustive = cantor_exhaustive_visits(&f.word, 1 << n);
                    f.max_visits <= exhaustive
                        && exhaustive as f64 <= f.bound * (1u64 << n) as f64 + 1e-9
                };
                if !f.holds() || !exhaustive_ok {
                    bound_fail += 1;
                }
            }
        }
    }
    let ok = wandering.is_empty() && only_star && bound_fail == 0;
    Ok((
        ok,
        format!(
            "{} cylinders all return: {}, essential hits {}, counting bound {}/{rows} rows hold",
            returns.len(),
            wandering.is_empty(),
            positive.len(),
            rows - bound_fail
        ),
    ))
}

fn c06_compat() -> Outcome {
    let f = load_fixture("squaring").map_err(err)?;
    let y = f.compat_subset.clone().ok_or("no subset")?;
    let params = CompatibilityParams {
        resolution: 1.0 / 1024.0,
        ..Default::default()
    };
    let jump = match check_compatibility(&f.operator, &y, &params).map_err(err)? {
        Compatibility::Incompatible { jump, .. } => Some(jump),
        Compatibility::Compatible { .. } => None,
    };
    let lin = Observable::affine(-0.8, vec![1.0]);
    let vanishing = perron_frobenius(&f.host, lin.clone().times(lin)).map_err(err)?;
    let second = check_compatibility(&vanishing, &y, &params).map_err(err)?;
    let ok = jump.is_some_and(|j| j.abs() >= 0.4) && second.is_compatible();
    Ok((
        ok,
        format!(
            "rho(x0) = 0.5: {}, rho(x0) = 0: {}",
            jump.map_or("compatible".into(), |j| format!(
                "incompatible, jump {j:.4}"
            )),
            if second.is_compatible() {
                "compatible"
            } else {
                "incompatible"
            }
        ),
    ))
}

fn c07_doubling() -> Outcome {
    let f = load_fixture("doubling-weighted").map_err(err)?;
    let tau = std::f64::consts::TAU;
    let psis: Vec<(Observable, Box<dyn Fn(f64) -> f64>)> = vec![
        (Observable::zero(), Box::new(|_| 0.0)),
        (
            Observable::cosine(0.0, 0.5, 1.0, 0.0),
            Box::new(move |x| 0.5 * (tau * x).cos()),
        ),
        (Observable::affine(0.0, vec![1.0]), Box::new(|x| x)),
        (
            Observable::cosine(0.2, 1.0, 2.0, 0.3),
            Box::new(move |x| 0.2 + (tau * (2.0 * x + 0.3)).cos()),
        ),
        (
            Observable::cosine(-0.1, 0.3, 3.0, 0.25),
            Box::new(move |x| -0.1 + 0.3 * (tau * (3.0 * x + 0.25)).cos()),
        ),
    ];
    let schedule = NetSchedule::for_host(&f.host);
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut parts = Vec::new();
    for (psi, plain) in &psis {
        let tp = with_potential(&f.operator, psi).map_err(err)?;
        let lambda = spectral_potential(&tp, &SpectralParams::new(24))
            .map_err(err)?
            .headline;
        let p = topological_pressure(&f.host, Some(&tp.branch_weight()), &schedule)
            .map_err(err)?
            .headline();
        let oracle = doubling_lambda_oracle(&|y: f64| (0.5 + y / 2.0) * plain(y).exp());
        worst = worst.max((lambda - p).abs());
        worst_oracle = worst_oracle.max((oracle - p).abs());
        parts.push(format!("{lambda:.3}/{p:.3}/{oracle:.3}"));
    }
    Ok((
        worst <= 0.05 && worst_oracle <= 0.05,
        format!(
            "lambda/P/oracle {}; max |lambda - P| {worst:.4}, max |oracle - P| {worst_oracle:.4}",
            parts.join(" ")
        ),
    ))
}

fn c08_markov_tentropy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let hyp = Hypotheses {
        local_homeo_on_x_alpha: true,
        open_on_x_alpha: true,
        non_contracting: true,
        cocycle_continuous: true,
        entropy_usc: true,
        x_alpha_compatible: true,
        ..Default::default()
    };
    let mut worst_radon: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    let mut worst_partition = f64::INFINITY;
    for trial in 0..10 {
        let k = 2 + trial % 2;
        let s = SystemModel::full_shift(k);
        let p: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let row: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
                let sum: f64 = row.iter().sum();
                row.iter().map(|x| x / sum).collect()
            })
            .collect();
        let cocycle: Vec<f64> = (0..k).map(|_| rng.gen_range(0.3..3.0)).collect();
        let mu = markov_measure(&s, p.clone()).map_err(err)?;
        let t = perron_frobenius(&s, Observable::first_symbol(cocycle.clone())).map_err(err)?;
        let pi = stationary(&p);
        let oracle = markov_entropy(&p, &pi) + (0..k).map(|i| pi[i] * cocycle[i].ln()).sum::<f64>();
        let closed = t_entropy_closed_form(&t, &mu, &hyp).map_err(err)?.value;
        let radon = t_entropy_radon(&t, &mu, &RadonParams::new(8))
            .map_err(err)?
            .headline;
        let partition = t_entropy_partition(&t, &mu, 4, 4).map_err(err)?.headline;
        worst_closed = worst_closed.max((closed - oracle).abs());
        worst_radon = worst_radon.max((radon - closed).abs());
        worst_partition = worst_partition.min(partition - closed);
    }
    let ok = worst_radon <= 1e-3 && worst_closed <= 1e-9 && worst_partition >= -1e-3;
    Ok((
        ok,
        format!(
            "max |radon - closed| {worst_radon:.1e}, max |closed - oracle| {worst_closed:.1e}, min (partition - closed) {worst_partition:.2e}"
        ),
    ))
}

fn c09_golden_vp() -> Outcome {
    let f = load_fixture("golden").map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let psis: Vec<(String, Observable)> = (0..5)
        .map(|i| {
            let v = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            (format!("psi{i}"), Observable::first_symbol(v))
        })
        .collect();
    let rep = verify_variational_principle(
        &f.operator,
        &psis,
        &f.measures,
        &f.info.hypotheses,
        1e-3,
        20,
    )
    .map_err(err)?;
    let mut worst_oracle: f64 = 0.0;
    for ((_, psi), row) in psis.iter().zip(&rep.rows) {
        let e = |i: usize| psi.eval_symbols(&[i as u8]).exp();
        let oracle = perron_root(&[vec![e(0), e(0)], vec![e(1), 0.0]]).ln();
        worst_oracle = worst_oracle.max((row.lambda - oracle).abs());
    }
    let worst_gap = rep.rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max);
    Ok((
        rep.all_pass() && worst_oracle <= 1e-9 && worst_gap <= 1e-3,
        format!("max |lambda - family max| {worst_gap:.1e}, max |lambda - matrix oracle| {worst_oracle:.1e}"),
    ))
}

struct InequalityCase {
    fixture: &'static str,
    psi: Observable,
}

fn c10_inequalities() -> Outcome {
    let tol = 0.05;
    let cases = [
        InequalityCase {
            fixture: "full2",
            psi: Observable::first_symbol(vec![0.4, -0.2]),
        },
        InequalityCase {
            fixture: "golden",
            psi: Observable::first_symbol(vec![0.3, -0.5]),
        },
        InequalityCase {
            fixture: "doubling",
            psi: Observable::cosine(0.0, 0.5, 1.0, 0.0),
        },
        InequalityCase {
            fixture: "rotation",
            psi: Observable::cosine(0.0, 0.5, 1.0, 0.0),
        },
        InequalityCase {
            fixture: "finite-cycle",
            psi: Observable::zero(),
        },
        InequalityCase {
            fixture: "flat-top",
            psi: Observable::affine(0.0, vec![1.0]),
        },
    ];
    let mut checked = 0;
    let mut failures = Vec::new();
    for c in &cases {
        let f = load_fixture(c.fixture).map_err(err)?;
        let hyp = &f.info.hypotheses;
        let host = &f.host;
        let schedule = NetSchedule::for_host(host);
        let h = topological_entropy(host, &schedule)
            .map_err(err)?
            .headline();
        let gamma = forward_entropy(host, &schedule).map_err(err)?.headline();
        let omega = inverse_rami_rate(host, &PreimageParams::new(16))
            .map_err(err)?
            .headline;
        let a = c.psi.clone().exp();
        let ell = essential_spectral_potential(host, &a, &PreimageParams::new(16))
            .map_err(err)?
            .headline;
        let mut check = |name: &str, holds: bool| {
            checked += 1;
            if !holds {
                failures.push(format!("{}: {name}", c.fixture));
            }
        };
        check("gamma <= h", gamma <= h + tol);
        if hyp.local_homeo_on_x_alpha || hyp.omega_zero {
            check("omega <= h", omega <= h + tol);
        }
        check("h <= gamma + omega", h <= gamma + omega + tol);
        if hyp.local_homeo_on_x_alpha && hyp.non_contracting {
            let p = topological_pressure(host, Some(&a), &schedule)
                .map_err(err)?
                .headline();
            check("P - gamma <= ell", p - gamma - tol <= ell);
            check("ell <= P", ell <= p + tol);
        }
        let log_a = c.psi.clone();
        let mcm = match max_ergodic_average(host, &log_a) {
            Ok(m) => Some(m.value),
            Err(_) if matches!(host.kind, SystemKind::CircleRotation { .. }) => {
                Some(integrate(&lebesgue(host).map_err(err)?, &log_a).map_err(err)?)
            }
            Err(_) => None,
        };
        if let Some(m) = mcm {
            check("mcm <= ell", m <= ell + tol);
            check("ell <= mcm + omega", ell <= m + omega + tol);
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{}/{checked} inequalities hold over {} fixtures{}",
            checked - failures.len(),
            cases.len(),
            {
                if failures.is_empty() {
                    String::new()
                } else {
                    format!("; failing: {}", failures.join(", "))
                }
            }
        ),
    ))
}

fn c11_karp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    for _ in 0..200 {
        let k = rng.gen_range(1..=7);
        let density = rng.gen_range(0.15..0.7);
        let edges: Vec<Vec<(usize, f64)>> = (0..k)
            .map(|_| {
                let mut row = Vec::new();
                for j in 0..k {
                    if rng.gen_bool(density) {
                        row.push((j, rng.gen_range(-5.0..5.0)));
                    }
                }
                row
            })
            .collect();
        match (max_cycle_mean(&edges), brute_cycle_mean(&edges)) {
            (Ok((v, _)), Some(b)) => worst = worst.max((v - b).abs()),
            (Err(_), None) => {}
            _ => mismatched += 1,
        }
    }
    Ok((
        worst <= 1e-12 && mismatched == 0,
        format!("200 graphs, max deviation {worst:.1e}, {mismatched} cycle/no-cycle mismatches"),
    ))
}

fn c12_duality() -> Outcome {
    let f = load_fixture("full2").map_err(err)?;
    let mu = bernoulli(&f.host, &[0.5, 0.5]).map_err(err)?;
    let rep =
        legendre_dual(&f.operator, &mu, &f.info.hypotheses, &DualParams::default()).map_err(err)?;
    let target = -(2f64.ln());
    let ok = (rep.best - target).abs() <= 0.05 && rep.max_violation <= 1e-3 && rep.bound_holds;
    Ok((
        ok,
        format!(
            "dual {:.5} vs -ln 2 {target:.5}, largest mu[psi] - lambda(psi) + tau {:.1e} over {} potentials",
            rep.best, rep.max_violation, rep.evaluations
        ),
    ))
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let results = [
        report(
            1,
            "full 2-shift spectral potential",
            secs(1),
            c01_full_shift_flat,
        ),
        report(2, "golden-mean shift", secs(30), c02_golden),
        report(
            3,
            "square: spectral potential below pressure",
            secs(30),
            c03_square,
        ),
        report(4, "flat-top essential set", secs(5), c04_flat_top),
        report(5, "Cantor fixture", secs(60), c05_cantor),
        report(6, "squaring compatibility", secs(5), c06_compat),
        report(7, "weighted doubling: lambda = P", secs(120), c07_doubling),
        report(
            8,
            "Markov t-entropy methods",
            secs(120),
            c08_markov_tentropy,
        ),
        report(9, "golden variational principle", secs(60), c09_golden_vp),
        report(10, "inequality suite", secs(300), c10_inequalities),
        report(11, "Karp vs brute force", secs(30), c11_karp),
        report(12, "Legendre duality", secs(60), c12_duality),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
