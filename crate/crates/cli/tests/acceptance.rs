//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails unless every attainable criterion passes.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use paralip::checks::{chord_suite, metric_suite};
use paralip::{
    build_atlas, build_g, check_bilipschitz, choose_constants, dilate, estimate_lip12, estimate_nondegeneracy, evaluate,
    extract_chart, parabolic_norm, parse, sphere_chord_identity, verify_atlas, Dilation, IftProblem, Lip12Fn,
    NondegenerateFn, ParabolicPoint, RadialSpec, Sampler, SpaceTimeBox, StarlikeDomain, C0, C1,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose statement cannot hold; each maps to the reason printed.
const UNATTAINABLE: &[(usize, &str)] = &[(
    4,
    "the lower constant 0.5 is not sharp: the ratio is exactly 1 at t=0 and at x=0 and its infimum is about 0.636",
)];

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> StarlikeDomain {
    let text = std::fs::read_to_string(configs().join(name)).expect("config readable");
    RadialSpec::from_json(&text).and_then(|s| s.to_domain()).expect("valid config")
}

fn point<R: Rng>(rng: &mut R, n: usize) -> ParabolicPoint {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    let t = scale * scale * rng.gen_range(-1.0..1.0);
    ParabolicPoint::new(t, (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.into_iter().map(|a| a / r).collect();
        }
    }
}

/// Root of `|x|²/ρ² + t²/ρ⁴ = 1` by bisection on `ρ`.
fn norm_by_bisection(p: &ParabolicPoint) -> f64 {
    let x2: f64 = p.x().iter().map(|a| a * a).sum();
    let t = p.t();
    if x2 == 0.0 && t == 0.0 {
        return 0.0;
    }
    let f = |r: f64| x2 / (r * r) + t * t / r.powi(4);
    let (mut lo, mut hi) = (1e-300f64, 1.0f64);
    while f(hi) > 1.0 {
        hi *= 2.0;
    }
    while f(lo) <= 1.0 {
        lo *= 0.5;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn ratio(p: &ParabolicPoint) -> f64 {
    let x = p.x().iter().map(|a| a * a).sum::<f64>().sqrt();
    parabolic_norm(p) / (p.t().abs().sqrt() + x)
}

fn ift_problem() -> IftProblem {
    let b = SpaceTimeBox::new((-2.0, 2.0), vec![(-2.0, 2.0), (-3.0, 3.0)]).unwrap();
    let f = Lip12Fn::scalar(b, |t, v| 2.0 * v[1] - v[0].sin() - t.abs().sqrt()).with_declared_m(2.0);
    IftProblem::new(NondegenerateFn::new(f, 1, 2.0).unwrap(), (0.0, vec![0.0]), 0.0).unwrap()
}

fn c1_metric_suite() -> (bool, String) {
    let start = Instant::now();
    let r = metric_suite(&[1, 2, 3], 100_000, 42);
    let secs = start.elapsed().as_secs_f64();
    let excess = r.dims.iter().map(|d| d.max_triangle_excess).fold(f64::NEG_INFINITY, f64::max);
    (r.passed && secs <= 10.0, format!("max triangle excess {excess:.3e}, {secs:.2} s"))
}

fn c2_homogeneity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=3);
        let p = point(&mut rng, n);
        let lambda = 10f64.powf(rng.gen_range(-3.0..3.0));
        let scaled = parabolic_norm(&dilate(&Dilation::new(lambda).unwrap(), &p));
        let expect = lambda * parabolic_norm(&p);
        if expect > 0.0 {
            worst = worst.max((scaled - expect).abs() / expect);
        }
    }
    (worst <= 1e-12, format!("max relative error {worst:.3e}"))
}

fn c3_norm_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=3);
        let p = point(&mut rng, n);
        let a = parabolic_norm(&p);
        worst = worst.max((a - norm_by_bisection(&p)).abs() / a);
    }
    let r345 = parabolic_norm(&ParabolicPoint::new(0.0, vec![3.0, 4.0]).unwrap());
    let r4 = parabolic_norm(&ParabolicPoint::new(4.0, vec![0.0, 0.0]).unwrap());
    (
        worst <= 1e-10 && r345 == 5.0 && r4 == 2.0,
        format!("max relative gap {worst:.3e}, rho(0,(3,4)) = {r345}, rho(4,0) = {r4}"),
    )
}

fn c4_comparability() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..100_000 {
        let n = rng.gen_range(1..=3);
        let p = point(&mut rng, n);
        let r = ratio(&p);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let at_t0 = ratio(&ParabolicPoint::new(0.0, vec![1.0]).unwrap());
    let at_x0 = ratio(&ParabolicPoint::new(1.0, vec![0.0]).unwrap());
    let in_range = lo >= 0.5 && hi <= 1.0;
    let upper_attained = (at_t0 - 1.0).abs() <= 1e-12 && (at_x0 - 1.0).abs() <= 1e-12;
    let lower_attained = [at_t0, at_x0, lo].iter().any(|r| (r - 0.5).abs() <= 1e-12);
    (
        in_range && upper_attained && lower_attained,
        format!("sampled range [{lo:.6}, {hi:.6}], ratio {at_t0} at t=0 and {at_x0} at x=0, lower endpoint attained: {lower_attained}"),
    )
}

fn c5_chord_identity() -> (bool, String) {
    let lib = chord_suite(&[2, 3, 4], 100_000, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut lib_worst: f64 = 0.0;
    for n in [2, 3, 4] {
        for _ in 0..100_000 {
            let (a, b) = (unit(&mut rng, n), unit(&mut rng, n));
            let (r1, r2) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
            let lhs: f64 = a.iter().zip(&b).map(|(x, y)| (r1 * x - r2 * y).powi(2)).sum();
            let chord: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
            worst = worst.max((lhs - (r1 - r2).powi(2) - r1 * r2 * chord).abs());
            lib_worst = lib_worst.max(sphere_chord_identity(&a, &b, r1, r2).unwrap().abs());
        }
    }
    (
        lib.passed && worst <= 1e-12 && lib_worst <= 1e-12,
        format!("suite {:.3e}, direct {worst:.3e}, library on direct samples {lib_worst:.3e}", lib.max_residual),
    )
}

fn c6_ift() -> (bool, String) {
    let graph = paralip::solve_graph(ift_problem()).expect("solvable");
    let nb = graph.neighborhood().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut gap, mut res): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let (t, x) = nb.sample_interior(&mut rng);
        let phi = graph.phi(t, &x).unwrap();
        gap = gap.max((phi - (x[0].sin() + t.abs().sqrt()) / 2.0).abs());
        res = res.max(graph.residual(t, &x).unwrap().abs());
    }
    let m_prime = graph.constants().m_prime;
    let lip = estimate_lip12(&graph.as_lip12fn().unwrap(), &Sampler::new(10_000, 6)).unwrap().constant;
    (
        gap <= 1e-10 && res <= 1e-10 && m_prime == 8.0 && lip <= m_prime,
        format!("closed-form gap {gap:.3e}, residual {res:.3e}, Lip {lip:.4} vs m' = {m_prime}"),
    )
}

fn c7_g_sandwich() -> (bool, String) {
    let problem = ift_problem();
    let c = choose_constants(2.0, 2.0).unwrap();
    let g = build_g(&problem, &c);
    let domain = problem.function().base().domain().clone();
    let cert = check_bilipschitz(g, &domain, &Sampler::new(10_000, 7)).unwrap();
    let (lo, hi) = (c.q / C1, c.p / C0);
    (
        cert.lower >= lo - 1e-9 && cert.upper <= hi + 1e-9,
        format!("certificate [{:.4}, {:.4}] within [{lo}, {hi}] over {} pairs", cert.lower, cert.upper, cert.sample_count),
    )
}

fn c8_unit_ball_chart() -> (bool, String) {
    let d = load("unit_ball.json");
    let chart = extract_chart(&d, 0.05, &[0.0, 1.0]).expect("chart");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut gap: f64 = 0.0;
    for _ in 0..1000 {
        let (t, xp) = chart.neighborhood().sample_interior(&mut rng);
        let r2: f64 = xp.iter().map(|a| a * a).sum();
        gap = gap.max((chart.psi(t, &xp).unwrap() - (1.0 - r2).sqrt()).abs());
    }
    let v = chart.verification();
    (
        gap <= 1e-10 && v.samples >= 1000 && v.tolerance <= 1e-8 && v.max_residual <= 1e-8,
        format!("psi gap {gap:.3e}, inclusion residual {:.3e} at {} samples per direction", v.max_residual, v.samples),
    )
}

fn c9_breathing_chart() -> (bool, String) {
    let d = load("breathing.json");
    let chart = extract_chart(&d, 0.0, &[0.0, 1.0]).expect("chart");
    let (lambda, eta) = (chart.lambda(), chart.eta());
    let cap = (lambda / 2.0).min(lambda.powi(3) / (16.0 * d.k0() * d.m_const()));
    let k = estimate_nondegeneracy(chart.graph().problem().function(), &Sampler::new(10_000, 9)).unwrap().constant;
    let v = chart.verification();
    (
        v.samples >= 1000 && v.max_residual <= 1e-8 && eta <= cap && k >= lambda / 2.0 - 1e-6,
        format!(
            "inclusion residual {:.3e}, eta {eta:.6} <= {cap:.6}, K estimate {k:.6} vs lambda/2 = {:.6}",
            v.max_residual,
            lambda / 2.0
        ),
    )
}

fn c10_atlas() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (file, density) in [("unit_ball.json", 1600.0), ("breathing.json", 500.0)] {
        let d = load(file);
        let start = Instant::now();
        let atlas = build_atlas(&d, density).expect("atlas");
        let report = verify_atlas(&atlas, 43).expect("verification");
        let secs = start.elapsed().as_secs_f64();
        ok &= atlas.seed_coverage() == 1.0 && report.fraction == 1.0 && report.worst_residual <= 1e-8 && secs <= 60.0;
        parts.push(format!(
            "{file}: {} charts, seeds {:.3}, fresh {:.3} of {}, residual {:.2e}, {secs:.1} s",
            atlas.charts().len(),
            atlas.seed_coverage(),
            report.fraction,
            report.samples,
            report.worst_residual
        ));
    }
    (ok, parts.join("; "))
}

const GOLDEN: &[(&str, &str)] = &[
    ("1", "1"),
    ("s", "s"),
    ("w1", "w1"),
    ("w9", "w9"),
    ("2 + cos(w1)", "2 + cos(w1)"),
    ("2+0.25*sin(s)*w1", "2 + 0.25 * sin(s) * w1"),
    ("neg(s)", "neg(s)"),
    ("(1 + s)", "(1 + s)"),
    ("s^2", "s^2"),
    ("w2^0", "w2^0"),
    ("sqrt(1 + w2^2)", "sqrt(1 + w2^2)"),
    ("abs(w1) * 3", "abs(w1) * 3"),
    ("1 - s - w1", "1 - s - w1"),
    ("2 * (s + 1) / 3", "2 * (s + 1) / 3"),
    ("1.5e-3 + s", "0.0015 + s"),
    ("cos(sin(s))", "cos(sin(s))"),
    ("  2\n  + w1", "2 + w1"),
];

const NEGATIVE: &[(&str, usize, usize)] = &[
    ("2 +", 1, 4),
    ("foo(s)", 1, 1),
    ("sin(s, w1)", 1, 6),
    ("1 / 0", 1, 5),
    ("2 * (s + 1", 1, 11),
    ("1 +\n  * 2", 2, 3),
    ("w0 + 1", 1, 1),
    ("-s", 1, 1),
];

fn c11_dsl() -> (bool, String) {
    let mut bad = Vec::new();
    for (src, want) in GOLDEN {
        match parse(src) {
            Ok(e) if e.to_string() == *want => {}
            other => bad.push(format!("{src:?} gave {other:?}")),
        }
    }
    for (src, line, column) in NEGATIVE {
        match parse(src) {
            Err(e) if (e.line, e.column) == (*line, *column) => {}
            other => bad.push(format!("{src:?} gave {other:?}")),
        }
    }
    let v = evaluate(&parse("2 + cos(w1)").unwrap(), 0.3, &[1.0, 0.0]).unwrap();
    let gap = (v - (2.0 + 1f64.cos())).abs();
    (
        bad.is_empty() && gap <= 1e-15,
        format!("{} golden, {} negative, {} mismatches {:?}, eval gap {gap:.1e}", GOLDEN.len(), NEGATIVE.len(), bad.len(), bad),
    )
}

fn c12_cli_determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("unit_ball.json");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_paralip"))
            .args(["--reproducible", "--out"])
            .arg(&out)
            .arg("verify")
            .arg(&config)
            .status()
            .expect("binary runs");
        (status.code(), std::fs::read(&out).unwrap_or_default())
    };
    let (c1, a) = run("a.json");
    let (c2, b) = run("b.json");
    (
        c1 == Some(0) && c2 == Some(0) && !a.is_empty() && a == b,
        format!("exit codes {c1:?} {c2:?}, {} bytes, identical: {}", a.len(), a == b),
    )
}

fn main() {
    let criteria: Vec<(usize, &'static str, fn() -> (bool, String))> = vec![
        (1, "metric suite", c1_metric_suite),
        (2, "homogeneity", c2_homogeneity),
        (3, "norm oracle", c3_norm_oracle),
        (4, "comparability", c4_comparability),
        (5, "sphere chord identity", c5_chord_identity),
        (6, "implicit function", c6_ift),
        (7, "g-map sandwich", c7_g_sandwich),
        (8, "unit ball chart", c8_unit_ball_chart),
        (9, "breathing chart", c9_breathing_chart),
        (10, "atlas coverage", c10_atlas),
        (11, "expression language", c11_dsl),
        (12, "cli determinism", c12_cli_determinism),
    ];
    let outcomes: Vec<Outcome> = criteria
        .into_iter()
        .map(|(id, name, run)| {
            let (passed, detail) = run();
            Outcome { id, name, passed, detail }
        })
        .collect();
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {}: {}", o.id, o.name, o.detail);
        if let Some((_, why)) = UNATTAINABLE.iter().find(|(id, _)| *id == o.id) {
            println!("             known unattainable: {why}");
        }
    }
    let unexpected: Vec<usize> = outcomes
        .iter()
        .filter(|o| !o.passed && !UNATTAINABLE.iter().any(|(id, _)| *id == o.id))
        .map(|o| o.id)
        .collect();
    if !unexpected.is_empty() {
        eprintln!("failing criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
