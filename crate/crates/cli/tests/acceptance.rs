//! Acceptance suite. Every criterion prints exactly one line:
//!
//! ```text
//! PASS  [n] name: detail
//! ```
//!
//! All tolerances and sample sizes are pinned below. The process exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use moran_cli::config::{
    AssumptionSpec, EnvMode, ExperimentConfig, FwSpec, GridSpec, InitSpec, Kind, Tolerances,
};
use moran_cli::{render_svg, run_with_threads, PlotKind, Summary};
use moran_core::disorder::{environment_from_counts, expected_distinct, key_ratio};
use moran_core::engine::{class_rate, event_rates, sample_event, Direction, PopulationState};
use moran_core::observables::{delta, lyapunov_h, masses, project_p, project_pcheck};
use moran_core::rate_law::{
    check_condition_i, check_corollary_a, check_corollary_b, make_finite_law, make_power_law,
    LawSpec,
};
use moran_core::seeding::stream;
use rand::Rng;

// Criterion 1
const MARTINGALE_SIGMA: f64 = 3.0;
// Criterion 2
const SLOPE_REL: f64 = 0.15;
const SLOPE_TARGET: f64 = -3.2;
const SLOPE_WRONG_CONVENTION: f64 = -1.6;
// Criterion 3
const H_BOUND_FACTOR: f64 = 1.5;
const MZ_RATIO: f64 = 0.8;
// Criterion 4
const KS_MAX: f64 = 0.10;
// Criterion 5
const FIXATION_TARGET: f64 = 0.30;
const FIXATION_ABS: f64 = 0.045;
// Criterion 6
const D_ABS: f64 = 0.05;
// Criterion 8
const FIG1_TOL: f64 = 1e-6;
const GEOMETRY_TOL: f64 = 1e-12;
const RANDOM_STATES: usize = 1000;
// Criterion 9
const ORACLE_SIGMAS: f64 = 4.0;
const ORACLE_EVENTS: usize = 100_000;

const MASTER_SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

fn two_class_law() -> LawSpec {
    LawSpec {
        family: "finite".into(),
        atoms: Some(vec![[1.0, 0.5], [4.0, 0.5]]),
        ..Default::default()
    }
}

fn base_config(kind: Kind, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        n: vec![500],
        replicas: 1,
        seed: MASTER_SEED,
        out: out.to_path_buf(),
        env_mode: EnvMode::Proportional,
        law: two_class_law(),
        init: None,
        grid: None,
        fw: None,
        assumption: None,
        collapse: None,
        t_small: None,
        t_max: None,
        snapshots: false,
        tolerances: Tolerances::default(),
    }
}

fn get(summary: &Summary, key: &str) -> f64 {
    summary
        .get_f64(key)
        .unwrap_or_else(|| panic!("summary has no numeric `{key}`"))
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(cfg: &ExperimentConfig) -> Summary {
    run_with_threads(cfg, None).expect("experiment runs")
}

/// Criteria 1 and 2 share one run.
fn martingale_run() -> Summary {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(Kind::Collapse, dir.path());
    cfg.replicas = 400;
    cfg.init = Some(InitSpec::SameFraction { s0: 0.5 });
    cfg.grid = Some(GridSpec {
        start: 0.1,
        stop: 1.0,
        step: 0.1,
    });
    cfg.tolerances.mean_sigma = Some(MARTINGALE_SIGMA);
    cfg.tolerances.slope_rel = Some(SLOPE_REL);
    run(&cfg)
}

fn criterion_1(s: &Summary) -> Outcome {
    let z = get(s, "N500.max_z_S");
    let s0 = get(s, "N500.S0");
    verdict(
        s0 == 0.5 && z <= MARTINGALE_SIGMA,
        format!(
            "N=500, 400 replicas, t=0.1..1.0: max |mean S - 0.5|/SE = {z:.3} <= {MARTINGALE_SIGMA}"
        ),
    )
}

fn criterion_2(s: &Summary) -> Outcome {
    let slope = get(s, "N500.het_slope");
    let rel = ((slope - SLOPE_TARGET) / SLOPE_TARGET).abs();
    let rel_wrong = ((slope - SLOPE_WRONG_CONVENTION) / SLOPE_WRONG_CONVENTION).abs();
    verdict(
        rel <= SLOPE_REL && rel_wrong > SLOPE_REL,
        format!(
            "slope {slope:.4}: rel. error {rel:.4} vs -3.2 (<= {SLOPE_REL}), {rel_wrong:.4} vs -1.6 (must exceed {SLOPE_REL})"
        ),
    )
}

fn criterion_3() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(Kind::Collapse, dir.path());
    cfg.n = vec![250, 500, 1000, 2000];
    cfg.replicas = 200;
    // Rate-1 class entirely type 1: off the line, h(0) = 1/4.
    cfg.init = Some(InitSpec::WholeClasses { classes: vec![0] });
    cfg.grid = Some(GridSpec {
        start: 0.05,
        stop: 1.0,
        step: 0.05,
    });
    cfg.tolerances.h_bound_factor = Some(H_BOUND_FACTOR);
    cfg.tolerances.mz_ratio = Some(MZ_RATIO);
    let s = run(&cfg);
    let ratio = get(&s, "N500.h_bound_max_ratio");
    let mz: Vec<f64> = cfg
        .n
        .iter()
        .map(|n| get(&s, &format!("N{n}.mz_term1")))
        .collect();
    let decreasing = mz.windows(2).all(|w| w[1] <= MZ_RATIO * w[0]);
    let steps: Vec<String> = mz
        .windows(2)
        .map(|w| format!("{:.3}", w[1] / w[0]))
        .collect();
    verdict(
        ratio <= H_BOUND_FACTOR && decreasing && s.failed() == 0,
        format!(
            "N=500 max mean h/bound = {ratio:.4} <= {H_BOUND_FACTOR}; term1 integral ratios {} each <= {MZ_RATIO}",
            steps.join(", ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(Kind::CompareFw, dir.path());
    cfg.n = vec![1000];
    cfg.replicas = 800;
    cfg.init = Some(InitSpec::SameFraction { s0: 0.5 });
    cfg.fw = Some(FwSpec {
        d: Some(1.6),
        s0: None,
        dt: 1e-3,
        samples: 2000,
        t_compare: 0.5,
    });
    cfg.tolerances.ks_max = Some(KS_MAX);
    let s = run(&cfg);
    let ks = get(&s, "N1000.ks");
    verdict(
        ks <= KS_MAX && get(&s, "N1000.reference_s0") == 0.5,
        format!("KS(800 particle, 2000 reference at t=0.5) = {ks:.4} <= {KS_MAX}"),
    )
}

fn criterion_5() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(Kind::Fixation, dir.path());
    cfg.n = vec![200];
    cfg.replicas = 1000;
    cfg.law = LawSpec {
        family: "finite".into(),
        atoms: Some(vec![[1.0, 1.0]]),
        ..Default::default()
    };
    cfg.init = Some(InitSpec::SameFraction { s0: 0.3 });
    cfg.tolerances.fixation_abs = Some(FIXATION_ABS);
    let s = run(&cfg);
    let f = get(&s, "N200.fixed_fraction");
    let timeouts = get(&s, "N200.timeouts");
    verdict(
        (f - FIXATION_TARGET).abs() <= FIXATION_ABS && timeouts == 0.0,
        format!(
            "fixed-at-1 fraction {f:.3} = {FIXATION_TARGET} +- {FIXATION_ABS}, timeouts {timeouts}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(Kind::DiagnoseLaw, dir.path());
    cfg.n = vec![100_000];
    cfg.replicas = 20;
    cfg.law = LawSpec {
        family: "geometric".into(),
        p: Some(0.5),
        ..Default::default()
    };
    cfg.tolerances.d_abs = Some(D_ABS);
    let s = run(&cfg);
    let d = get(&s, "law.D");
    let dev = get(&s, "N100000.max_abs_D_N_minus_D");
    let exact = 1.0 / std::f64::consts::LN_2;
    verdict(
        (d - exact).abs() < 1e-9 && dev < D_ABS,
        format!("20 environments at N=1e5: max |D_N - 1/ln 2| = {dev:.4e} < {D_ABS}"),
    )
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    let base = environment_from_counts(&[(1.0, 50), (2.0, 50)]).unwrap();
    expect(
        (key_ratio(&base) - 0.0375).abs() <= 1e-15,
        "key_ratio example",
    );
    for c in [2u64, 3, 10, 1000] {
        let scaled = environment_from_counts(&[(1.0, 50 * c), (2.0, 50 * c)]).unwrap();
        let r = key_ratio(&scaled) * c as f64 / key_ratio(&base);
        expect((r - 1.0).abs() <= 1e-15, "key_ratio proportional to 1/N");
    }
    let single = environment_from_counts(&[(3.0, 40)]).unwrap();
    expect(
        (key_ratio(&single) - 1.0 / (40.0 * 9.0)).abs() <= 1e-15,
        "single-class key_ratio",
    );

    let fair = make_finite_law(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
    expect(
        expected_distinct(&fair, 2).unwrap().value == 1.5,
        "expected_distinct = 1.5",
    );

    expect(
        check_corollary_a(100.0, 100.0, 0.1, 0.1),
        "corollary a example",
    );
    for alpha in [0.5, 1.0, 3.0] {
        for other in [0.01, 0.5, 1.0] {
            expect(
                !check_corollary_a(alpha, 1e6, other, other),
                "corollary a with alpha <= 3",
            );
        }
    }
    expect(check_corollary_b(100.0, 4.0, 5.0), "corollary b example");
    expect(
        !check_corollary_b(100.0, 2.0, 2.0),
        "corollary b false case",
    );
    let power = make_power_law(5.0, 1e-8).unwrap();
    expect(
        !check_condition_i(&power, 1.0, 4.5).satisfied,
        "power(5), beta = 4.5",
    );
    expect(
        check_condition_i(&power, 1.0, 3.5).satisfied,
        "power(5), beta = 3.5",
    );

    // The same judgement through the experiment runner.
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(Kind::AssumptionCheck, dir.path());
    cfg.law = LawSpec {
        family: "geometric".into(),
        p: Some(0.5),
        ..Default::default()
    };
    cfg.assumption = Some(AssumptionSpec {
        alpha: 100.0,
        beta: 100.0,
        gamma: 0.1,
        delta: 0.1,
        chi: None,
        eps_grid: None,
        residual_threshold: None,
    });
    let s = run(&cfg);
    expect(
        s.check_passed("corollary_a") == Some(true),
        "assumption-check corollary a",
    );
    expect(
        s.check_passed("condition_i") == Some(true),
        "assumption-check condition I",
    );
    expect(
        s.check_passed("condition_ii") == Some(true),
        "assumption-check condition II",
    );

    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "key_ratio scaling, expected_distinct, corollary truth tables, geometric-law assumption check".into()
        } else {
            format!("failed: {}", failures.join("; "))
        },
    )
}

fn criterion_8() -> Outcome {
    let env = environment_from_counts(&[(0.8, 37), (3.5, 63)]).unwrap();
    let y = [0.17, 0.61];
    let (s, sc) = masses(&y, &env).unwrap();
    let p = project_p(&y, &env);
    let d = delta(&y, &env);
    let h = lyapunov_h(&y, &env);
    let fig1 = [
        (s, 0.78),
        (sc, 0.602002),
        (p[0], 0.2886),
        (p[1], 0.4914),
        (d[0], -0.1186),
        (d[1], 0.1186),
        (h, 0.060343),
    ];
    let fig1_err = fig1.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut rng = stream(MASTER_SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..RANDOM_STATES {
        let k = rng.random_range(1..=8);
        let mut pairs = Vec::with_capacity(k);
        for i in 0..k {
            pairs.push((
                0.1 + i as f64 + rng.random::<f64>() * 0.9,
                rng.random_range(1..=500u64),
            ));
        }
        let env = environment_from_counts(&pairs).unwrap();
        let y: Vec<f64> = env
            .fractions()
            .iter()
            .map(|n| n * rng.random::<f64>())
            .collect();
        let py = project_p(&y, &env);
        let ppy = project_p(&py, &env);
        let qy = project_pcheck(&y, &env);
        let qqy = project_pcheck(&qy, &env);
        let idem = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        worst = worst
            .max(idem(&ppy, &py))
            .max(idem(&qqy, &qy))
            .max(delta(&y, &env).iter().sum::<f64>().abs());
    }
    verdict(
        fig1_err <= FIG1_TOL && worst <= GEOMETRY_TOL,
        format!(
            "figure values max error {fig1_err:.2e} <= {FIG1_TOL:e}; {RANDOM_STATES} random states: idempotence and sum(delta) within {worst:.2e} <= {GEOMETRY_TOL:e}"
        ),
    )
}

fn transition_oracle() -> Result<f64, String> {
    // N = 4: two classes of two, visited from every interior state.
    let env = environment_from_counts(&[(1.0, 2), (3.0, 2)]).unwrap();
    let starts = [[1, 0], [0, 1], [1, 1], [2, 1], [1, 2]];
    let per_state = ORACLE_EVENTS / starts.len();
    let mut rng = stream(MASTER_SEED ^ 0x5EED);
    let mut worst_z: f64 = 0.0;
    for x in starts {
        let state = PopulationState::from_counts(&env, x.to_vec()).unwrap();
        let total = event_rates(&state, &env).total();
        let mut counts: BTreeMap<(usize, bool), usize> = BTreeMap::new();
        let mut wait_sum = 0.0;
        for _ in 0..per_state {
            let e = sample_event(&state, &env, &mut rng).unwrap();
            *counts
                .entry((e.class, e.direction == Direction::Up))
                .or_default() += 1;
            wait_sum += e.wait;
        }
        for k in 0..env.num_classes() {
            for dir in [Direction::Down, Direction::Up] {
                let p = class_rate(&state, &env, k, dir) / total;
                let c = *counts.get(&(k, dir == Direction::Up)).unwrap_or(&0);
                let f = c as f64 / per_state as f64;
                if p == 0.0 {
                    if c > 0 {
                        return Err(format!("impossible event in class {k} from {x:?}"));
                    }
                    continue;
                }
                let z = (f - p).abs() / (p * (1.0 - p) / per_state as f64).sqrt();
                worst_z = worst_z.max(z);
            }
        }
        // Exponential waits: mean 1/total, standard deviation 1/total.
        let mean_wait = wait_sum / per_state as f64;
        let z = (mean_wait * total - 1.0).abs() * (per_state as f64).sqrt();
        worst_z = worst_z.max(z);
    }
    Ok(worst_z)
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let worst_z = transition_oracle()?;

    let mut outputs = Vec::new();
    for threads in [1, 4, 1] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(Kind::Simulate, dir.path());
        cfg.n = vec![50, 300];
        cfg.replicas = 24;
        cfg.env_mode = EnvMode::Draw;
        cfg.law = LawSpec {
            family: "geometric".into(),
            p: Some(0.4),
            ..Default::default()
        };
        cfg.init = Some(InitSpec::Uniform { s0: 0.4 });
        cfg.grid = Some(GridSpec {
            start: 0.05,
            stop: 0.5,
            step: 0.05,
        });
        cfg.snapshots = true;
        run_with_threads(&cfg, Some(threads)).unwrap();
        let mut files = dir_bytes(dir.path());
        files.remove("config.toml"); // records the temporary output path
        outputs.push(files);
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let csv = String::from_utf8(outputs[0]["paths_N300.csv"].clone()).unwrap();
    let svg_same =
        render_svg(PlotKind::Paths, &csv).unwrap() == render_svg(PlotKind::Paths, &csv).unwrap();
    verdict(
        worst_z <= ORACLE_SIGMAS && identical && svg_same,
        format!(
            "N=4 oracle over {ORACLE_EVENTS} events: worst deviation {worst_z:.2} sigma <= {ORACLE_SIGMAS}; outputs byte-identical across 1/4/1 threads: {identical}"
        ),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let start = Instant::now();
    let martingale =
        catch_unwind(martingale_run).map_err(|_| "martingale run panicked".to_string());
    let shared = |f: fn(&Summary) -> Outcome| match &martingale {
        Ok(s) => guarded(|| f(s)),
        Err(e) => Err(e.clone()),
    };

    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "martingale", shared(criterion_1)),
        (2, "diffusion constant", shared(criterion_2)),
        (3, "collapse", guarded(criterion_3)),
        (4, "marginal law", guarded(criterion_4)),
        (5, "fixation probability", guarded(criterion_5)),
        (6, "quenched-law convergence", guarded(criterion_6)),
        (7, "assumption machinery", guarded(criterion_7)),
        (8, "geometry", guarded(criterion_8)),
        (9, "engine exactness", guarded(criterion_9)),
    ];

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  [{n}] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  [{n}] {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
