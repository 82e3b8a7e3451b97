//! Acceptance suite: one pass/fail line per criterion, each with its
//! tolerance and runtime budget. Runs without the libtest harness so the
//! lines always reach the terminal.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use lingrowth::catenoid::{envelope_excess, neck_limit, ode_residual, profile_value, profile_value_substituted};
use lingrowth::experiments::{
    run_catenoid_reproduction, run_comparison_suite, run_removability, CatenoidReproductionConfig, ComparisonConfig, ExperimentReport,
    MeshResolution, OuterData, Records, RemovabilityConfig,
};
use lingrowth::{
    build_polar_mesh, solve_dirichlet, BoundaryData, CatenoidSpec, Convention, Density, DensitySpec, Growth, Height, RadialProfile, Sign,
    SolverOptions,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn spec(sign: Sign, alpha: f64, n: u32, convention: Convention) -> CatenoidSpec {
    CatenoidSpec::new(sign, alpha, 0.0, n, convention).unwrap()
}

fn catenoid_golden_values() -> Outcome {
    let d = Density::area();
    let s = spec(Sign::Plus, 1.0, 2, Convention::Section2);
    let worst = log_space(1.001, 10.0, 50)
        .into_iter()
        .map(|rho| (profile_value(&d, &s, rho).unwrap().to_f64() - rho.acosh()).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-8,
        format!("max |value - arcosh| = {worst:.2e} over 50 radii (tol 1e-8)"),
    )
}

fn parametrization_cross_check() -> Outcome {
    let densities = [
        Density::area(),
        Density::mu(2.5).unwrap(),
        Density::mu(3.0).unwrap(),
        Density::mu(4.0).unwrap(),
    ];
    let s = spec(Sign::Plus, 1.0, 2, Convention::Section2);
    let mut worst: f64 = 0.0;
    for d in &densities {
        for rho in log_space(1.0001, 20.0, 20) {
            let a = profile_value(d, &s, rho).unwrap().to_f64();
            let b = profile_value_substituted(d, &s, rho).unwrap().to_f64();
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max route disagreement {worst:.2e} over 4 densities x 20 radii (tol 1e-8)"),
    )
}

fn growth_dichotomy() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let finite = [
        Density::area(),
        Density::mu(2.5).unwrap(),
        Density::mu(3.0).unwrap(),
        Density::mu(4.0).unwrap(),
    ];
    let infinite = [Density::mu(1.5).unwrap(), Density::mu(2.0).unwrap()];
    let a = 0.75;
    for d in &finite {
        let growth_ok = d.classify_growth() == Growth::FiniteIntegral;
        let s = CatenoidSpec::new(Sign::Minus, 1.0, a, 2, Convention::Section2).unwrap();
        let neck = neck_limit(d, &s).unwrap();
        let neck_ok = neck == Height::Finite(a);
        ok &= growth_ok && neck_ok;
        notes.push(format!("{}: {:?}/{:?}", d.name(), d.classify_growth(), neck));
    }
    for d in &infinite {
        let growth_ok = d.classify_growth() == Growth::InfiniteIntegral;
        let s = CatenoidSpec::new(Sign::Minus, 0.25, a, 2, Convention::Section3).unwrap();
        let neck = neck_limit(d, &s).unwrap();
        let neck_ok = neck == Height::Unbounded { positive: true };
        ok &= growth_ok && neck_ok;
        notes.push(format!(
            "{}: {:?}/{}",
            d.name(),
            d.classify_growth(),
            if neck_ok { "+inf" } else { "finite?" }
        ));
    }
    outcome(ok, notes.join("; "))
}

fn flux_constancy() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut profiles = 0;
    for n in [2u32, 3, 5] {
        for d in [Density::area(), Density::mu(3.0).unwrap()] {
            let s = spec(Sign::Minus, 1.0, n, Convention::Section2);
            let p = RadialProfile::generate(&d, &s, 1.001, 10.0, 100).unwrap();
            worst = worst.max(ode_residual(&d, &p));
            profiles += 1;
        }
        let d2 = Density::mu(2.0).unwrap();
        let s = spec(Sign::Minus, 0.25, n, Convention::Section3);
        let neck = s.neck_radius();
        let p = RadialProfile::generate(&d2, &s, neck * 1.001, 2.0, 100).unwrap();
        worst = worst.max(ode_residual(&d2, &p));
        profiles += 1;
    }
    outcome(
        worst <= 1e-9,
        format!("max residual {worst:.2e} over {profiles} profiles, n in {{2,3,5}} (tol 1e-9)"),
    )
}

fn solver_exactness_and_convergence() -> Outcome {
    let d = Density::area();
    let mesh = Arc::new(build_polar_mesh(0.5, 1.0, 16, 32).unwrap());
    let affine = |p: [f64; 2]| 0.4 + 1.3 * p[0] - 0.7 * p[1];
    let data = BoundaryData::from_fn(&mesh, |_, p| affine(p));
    let sol = solve_dirichlet(&d, &mesh, &data, &SolverOptions::default()).unwrap();
    let affine_err = mesh
        .nodes
        .iter()
        .zip(&sol.values)
        .map(|(&p, u)| (u - affine(p)).abs())
        .fold(0.0, f64::max);

    let cfg = CatenoidReproductionConfig {
        density: DensitySpec::Area,
        catenoid: spec(Sign::Minus, 1.0, 2, Convention::Section2),
        r_in: 1.5,
        r_out: 3.0,
        n_r: 16,
        n_theta: 64,
        refinements: 3,
        solver: SolverOptions::default(),
    };
    let report = run_catenoid_reproduction(&cfg).unwrap();
    let Records::CatenoidReproduction(levels) = &report.sweep else {
        unreachable!()
    };
    let final_err = levels.last().map_or(f64::INFINITY, |r| r.max_error);
    let orders = &report.convergence_orders;
    let ok = affine_err <= 1e-9 && report.complete && orders.len() == 2 && orders.iter().all(|&p| p >= 1.8) && final_err <= 5e-4;
    outcome(
        ok,
        format!(
            "affine error {affine_err:.2e} (tol 1e-9); catenoid orders {:?} (need >= 1.8), final error {final_err:.2e} (tol 5e-4)",
            orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn comparison_suite() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for density in [DensitySpec::Area, DensitySpec::Mu { mu: 3.0 }] {
        let report = run_comparison_suite(&ComparisonConfig::new(density, 20, 7)).unwrap();
        let Records::Comparison(trials) = &report.sweep else {
            unreachable!()
        };
        let pairs = trials.iter().filter(|t| t.scenario == "ordered_pair").count();
        let violations = trials.iter().filter(|t| !(t.applicable && t.holds)).count();
        let barrier = report.check("catenoid_barrier_holds") == Some(true);
        ok &= report.passed() && pairs == 20 && violations == 0 && barrier;
        notes.push(format!(
            "{density:?}: {pairs} trials, {violations} violations, barrier {}",
            if barrier { "holds" } else { "FAILS" }
        ));
    }
    outcome(ok, format!("{} (tol 1e-8 + 10h^2)", notes.join("; ")))
}

fn removability_config(density: DensitySpec, outer_data: OuterData) -> RemovabilityConfig {
    RemovabilityConfig {
        density,
        outer_radius: 1.0,
        probe_radius: 0.5,
        epsilons: vec![0.2, 0.1, 0.05, 0.025],
        spike: 1.0,
        outer_data,
        mesh: MeshResolution::default(),
        solver: SolverOptions::default(),
    }
}

fn describe_sweep(report: &ExperimentReport) -> String {
    let Records::Removability(recs) = &report.sweep else {
        unreachable!()
    };
    recs.iter()
        .map(|r| {
            format!(
                "eps {}: {:.4} <= {:.4}",
                r.epsilon,
                r.deviation_at_probe,
                r.envelope_value + 10.0 * r.h * r.h
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn removability_finite_integral() -> Outcome {
    let report = run_removability(&removability_config(
        DensitySpec::Area,
        OuterData::Affine { q: [0.0, 0.0], c: 0.25 },
    ))
    .unwrap();
    let e_last = envelope_excess(&Density::area(), 0.025, 0.5, 1.0, 2).unwrap();
    let ok = report.complete
        && report.check("deviation_monotone") == Some(true)
        && report.check("deviation_within_envelope") == Some(true)
        && report.check("two_sided_envelope") == Some(true)
        && e_last < 0.02;
    outcome(ok, format!("{}; E(0.025) = {e_last:.4} (need < 0.02)", describe_sweep(&report)))
}

fn removability_infinite_integral() -> Outcome {
    let d = Density::mu(2.0).unwrap();
    let half = d.invert_gprime(0.5).unwrap();
    let report = run_removability(&removability_config(
        DensitySpec::Mu { mu: 2.0 },
        OuterData::Affine { q: [0.0, 0.0], c: 0.25 },
    ))
    .unwrap();
    let ok = report.complete
        && report.check("deviation_monotone") == Some(true)
        && report.check("deviation_within_envelope") == Some(true)
        && report.check("uniform_bound_case8") == Some(true)
        && (half - 1.0).abs() <= 1e-12;
    outcome(
        ok,
        format!("{}; uniform bound holds, (g')^-1(1/2) = {half}", describe_sweep(&report)),
    )
}

/// Tilted outer data: the barrier argument bounds u between the extreme
/// outer values widened by the envelope, and the deviations must decay.
fn removability_tilted_data() -> Outcome {
    let report = run_removability(&removability_config(DensitySpec::Area, OuterData::Affine { q: [0.3, 0.2], c: 0.0 })).unwrap();
    let ok = report.complete && report.check("two_sided_envelope") == Some(true) && report.check("deviation_monotone") == Some(true);
    let Records::Removability(recs) = &report.sweep else {
        unreachable!()
    };
    let deviations: Vec<String> = recs.iter().map(|r| format!("{:.4}", r.deviation_at_probe)).collect();
    outcome(
        ok,
        format!(
            "area density, outer data 0.3x + 0.2y: min - E - 10h^2 <= u <= max + E + 10h^2 at every probe node; deviations {} decrease",
            deviations.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("1", "catenoid golden values", Duration::from_secs(1), catenoid_golden_values),
        (
            "2",
            "parametrization cross-check",
            Duration::from_secs(5),
            parametrization_cross_check,
        ),
        ("3", "growth dichotomy", Duration::from_secs(5), growth_dichotomy),
        ("4", "flux constancy", Duration::from_secs(1), flux_constancy),
        (
            "5",
            "solver exactness and convergence",
            Duration::from_secs(60),
            solver_exactness_and_convergence,
        ),
        ("6", "comparison suite", Duration::from_secs(120), comparison_suite),
        (
            "7",
            "removability, finite integral",
            Duration::from_secs(120),
            removability_finite_integral,
        ),
        (
            "8",
            "removability, infinite integral",
            Duration::from_secs(120),
            removability_infinite_integral,
        ),
        (
            "7+",
            "removability, tilted outer data",
            Duration::from_secs(120),
            removability_tilted_data,
        ),
    ];
    let mut failures = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = out.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id:<2} {} {name}: {} [{:.2}s of {}s]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
