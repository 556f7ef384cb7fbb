//! Experiment orchestration.
//!
//! Seeding: the `j`-th entry of the `n` list gets the master seed
//! `mix64(seed, j)`. Replica `i` of that entry runs on
//! `replica_stream(mix64(seed, j), i)`, the environment is drawn from
//! `replica_stream(mix64(seed, j), ENV_STREAM)` and the reference diffusion
//! samples use `mix64(mix64(seed, j), FW_STREAM)` as their own master seed.
//! Results are merged in replica order, so no output byte depends on the
//! thread count.

use std::fs;
use std::io::Write;
use std::path::Path;

use moran_core::disorder::{
    draw_environment, environment_from_counts, expected_distinct, key_ratio,
};
use moran_core::engine::{
    init_state, observe, run_to_absorption, simulate_path, InitRule, Outcome, PathRecord,
};
use moran_core::fw::{
    ks_two_sample, mean_var_ci, moments_fw, short_time_variance_probe, simulate_fw, DiffusionSpec,
};
use moran_core::observables::{
    lyapunov_bound, mz_integral, triangle_terms_aligned, write_triangle_csv, LawAlignment,
    TriangleTerms,
};
use moran_core::rate_law::{
    check_condition_i, check_condition_ii, check_condition_iii, check_corollary_a,
    check_corollary_b, diffusion_constant, ConditionReport, Family, RateLaw, DEFAULT_FIT_RESIDUAL,
};
use moran_core::seeding::{mix64, replica_stream, replicate};
use moran_core::Environment;

use crate::config::{CollapseSpec, EnvMode, ExperimentConfig, Kind};
use crate::error::CliError;
use crate::summary::Summary;

pub const ENV_STREAM: u64 = 1 << 63;
pub const FW_STREAM: u64 = 1 << 62;
const DEFAULT_T_MAX: f64 = 1e6;

/// Runs `cfg`, writes every output under `cfg.out` and returns the summary.
/// Failed checks are recorded in the summary, not returned as errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    cfg.validate()?;
    let law = cfg.law.build()?;
    let out = cfg.out.as_path();
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(&out.join("config.toml"), cfg.to_toml().as_bytes())?;

    let mut summary = Summary::new();
    summary.text("kind", cfg.kind.tag());
    summary.int("replicas", cfg.replicas as u64);
    summary.int("seed", cfg.seed);
    summary.num("law.D", diffusion_constant(&law));
    summary.int("law.atoms", law.len() as u64);

    match cfg.kind {
        Kind::AssumptionCheck => assumption_check(cfg, &law, &mut summary)?,
        Kind::DiagnoseLaw => diagnose_law(cfg, &law, out, &mut summary)?,
        _ => {
            let mut mz_by_n = Vec::new();
            for (j, &n) in cfg.n.iter().enumerate() {
                let n_seed = mix64(cfg.seed, j as u64);
                let env = make_environment(cfg.env_mode, &law, n, n_seed)?;
                write_file(
                    &out.join(format!("env_N{n}.txt")),
                    env.to_document().as_bytes(),
                )?;
                let key = format!("N{n}");
                summary.num(format!("{key}.D_N"), env.d_n());
                summary.int(format!("{key}.classes"), env.num_classes() as u64);
                match cfg.kind {
                    Kind::Simulate => simulate(cfg, &law, &env, n_seed, out, &key, &mut summary)?,
                    Kind::Collapse => {
                        let mz = collapse(cfg, &law, &env, n_seed, out, &key, &mut summary)?;
                        mz_by_n.push((n, mz));
                    }
                    Kind::CompareFw => {
                        compare_fw(cfg, &law, &env, n_seed, out, &key, &mut summary)?
                    }
                    Kind::Fixation => fixation(cfg, &env, n_seed, out, &key, &mut summary)?,
                    Kind::ProbeVariance => probe(cfg, &env, n_seed, &key, &mut summary)?,
                    Kind::AssumptionCheck | Kind::DiagnoseLaw => unreachable!(),
                }
            }
            if let Some(ratio) = cfg.tolerances.mz_ratio {
                for w in mz_by_n.windows(2) {
                    let ((n0, a), (n1, b)) = (w[0], w[1]);
                    summary.check(
                        format!("mz_decrease.N{n0}_N{n1}"),
                        b <= ratio * a,
                        format!("{b:.6e} <= {ratio} * {a:.6e}"),
                    );
                }
            }
        }
    }
    write_file(&out.join("summary.txt"), summary.render().as_bytes())?;
    Ok(summary)
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_with_threads(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Summary, CliError> {
    match threads {
        None => run_experiment(cfg),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| run_experiment(cfg)),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_with(
    path: &Path,
    body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    body(&mut buf).map_err(|e| CliError::io(path, e))?;
    write_file(path, &buf)
}

pub fn make_environment(
    mode: EnvMode,
    law: &RateLaw,
    n: u64,
    n_seed: u64,
) -> Result<Environment, CliError> {
    match mode {
        EnvMode::Draw => Ok(draw_environment(
            law,
            n,
            &mut replica_stream(n_seed, ENV_STREAM),
        )?),
        EnvMode::Proportional => Ok(environment_from_counts(&proportional_counts(law, n))?),
    }
}

/// Largest-remainder apportionment of `n` over the stored atoms; ties go to
/// the lower index. Zero counts are dropped.
pub fn proportional_counts(law: &RateLaw, n: u64) -> Vec<(f64, u64)> {
    let total: f64 = law.atoms().iter().map(|a| a.prob).sum();
    let quotas: Vec<f64> = law
        .atoms()
        .iter()
        .map(|a| a.prob / total * n as f64)
        .collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned) as usize) {
        counts[k] += 1;
    }
    law.atoms()
        .iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(a, c)| (a.rate, c))
        .collect()
}

struct Replica {
    path: PathRecord,
    terms: Vec<TriangleTerms>,
}

fn run_replicas(
    cfg: &ExperimentConfig,
    law: &RateLaw,
    env: &Environment,
    n_seed: u64,
) -> Result<(Vec<f64>, Vec<Replica>), CliError> {
    let grid = cfg.grid.expect("validated").points();
    let rule = cfg.init.as_ref().expect("validated").rule();
    let align = LawAlignment::new(env, law);
    let n = env.n() as f64;
    let reps = replicate(
        cfg.replicas,
        n_seed,
        |_, rng| -> Result<Replica, CliError> {
            let path = simulate_path(env, &rule, &grid, rng, true)?;
            let terms = path
                .snapshots
                .as_ref()
                .expect("snapshots requested")
                .iter()
                .map(|xs| {
                    let y: Vec<f64> = xs.iter().map(|&x| x as f64 / n).collect();
                    triangle_terms_aligned(&y, env, &align, None)
                })
                .collect();
            Ok(Replica { path, terms })
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok((grid, reps))
}

/// Replica means of the triangle terms at each grid time.
fn mean_terms(grid: &[f64], reps: &[Replica]) -> Vec<TriangleTerms> {
    let r = reps.len() as f64;
    (0..grid.len())
        .map(|i| {
            let sum =
                |f: fn(&TriangleTerms) -> f64| reps.iter().map(|p| f(&p.terms[i])).sum::<f64>() / r;
            TriangleTerms {
                term1: sum(|t| t.term1),
                term2: sum(|t| t.term2),
                term3: sum(|t| t.term3),
                term4: None,
            }
        })
        .collect()
}

fn write_paths(path: &Path, reps: &[Replica]) -> Result<(), CliError> {
    write_with(path, |buf| {
        for (i, r) in reps.iter().enumerate() {
            if i == 0 {
                r.path.write_csv(&mut *buf)?;
            } else {
                // Same schema, header only once: replicas follow each other.
                let mut one = Vec::new();
                r.path.write_csv(&mut one)?;
                let body = one.splitn(2, |&b| b == b'\n').nth(1).unwrap_or(&[]);
                buf.write_all(body)?;
            }
        }
        if reps.is_empty() {
            writeln!(buf, "t,S,S_check,h,dist2_P,absorbed")?;
        }
        Ok(())
    })
}

fn simulate(
    cfg: &ExperimentConfig,
    law: &RateLaw,
    env: &Environment,
    n_seed: u64,
    out: &Path,
    key: &str,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let (grid, reps) = run_replicas(cfg, law, env, n_seed)?;
    write_paths(&out.join(format!("paths_{key}.csv")), &reps)?;
    write_with(&out.join(format!("triangle_{key}.csv")), |buf| {
        write_triangle_csv(buf, &grid, &mean_terms(&grid, &reps))
    })?;
    if cfg.snapshots {
        write_with(&out.join(format!("snapshots_{key}.csv")), |buf| {
            writeln!(buf, "replica,t,k,x_k")?;
            for (i, r) in reps.iter().enumerate() {
                let mut one = Vec::new();
                r.path.write_snapshot_csv(&mut one)?;
                for line in String::from_utf8_lossy(&one).lines().skip(1) {
                    writeln!(buf, "{i},{line}")?;
                }
            }
            Ok(())
        })?;
    }
    let last = grid.len() - 1;
    let finals: Vec<f64> = reps.iter().map(|r| r.path.s[last]).collect();
    summary.num(format!("{key}.t_final"), grid[last]);
    summary.num(
        format!("{key}.mean_S_final"),
        finals.iter().sum::<f64>() / finals.len() as f64,
    );
    let absorbed = reps.iter().filter(|r| r.path.absorbed[last]).count();
    summary.int(format!("{key}.absorbed_final"), absorbed as u64);
    Ok(())
}

fn sample_stats(xs: &[f64]) -> (f64, f64) {
    if xs.len() < 2 {
        return (xs.first().copied().unwrap_or(f64::NAN), f64::NAN);
    }
    let s = mean_var_ci(xs).expect("at least two samples");
    (s.mean, s.se_mean)
}

/// `|mean - reference| / se`, with 0/0 read as 0.
fn z_score(mean: f64, reference: f64, se: f64) -> f64 {
    let diff = (mean - reference).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

/// Least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn collapse(
    cfg: &ExperimentConfig,
    law: &RateLaw,
    env: &Environment,
    n_seed: u64,
    out: &Path,
    key: &str,
    summary: &mut Summary,
) -> Result<f64, CliError> {
    let spec = cfg.collapse.clone().unwrap_or_default();
    let CollapseSpec {
        slope_window,
        mz_window,
        bound_from,
    } = spec;
    let rule = cfg.init.as_ref().expect("validated").rule();
    let (grid, reps) = run_replicas(cfg, law, env, n_seed)?;
    write_paths(&out.join(format!("paths_{key}.csv")), &reps)?;
    let terms = mean_terms(&grid, &reps);
    write_with(&out.join(format!("triangle_{key}.csv")), |buf| {
        write_triangle_csv(buf, &grid, &terms)
    })?;

    // Starting values, replayed from each replica's stream.
    let starts = replicate(cfg.replicas, n_seed, |_, rng| {
        init_state(env, &rule, rng).map(|s| observe(&s, env))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let r = starts.len() as f64;
    let s0 = starts.iter().map(|o| o.s).sum::<f64>() / r;
    let sc0 = starts.iter().map(|o| o.s_check).sum::<f64>() / r;
    let g0 = starts.iter().map(|o| o.h).sum::<f64>() / r;
    summary.num(format!("{key}.S0"), s0);
    summary.num(format!("{key}.S_check0"), sc0);
    summary.num(format!("{key}.h0"), g0);

    let column = |i: usize, f: fn(&PathRecord, usize) -> f64| -> Vec<f64> {
        reps.iter().map(|rep| f(&rep.path, i)).collect()
    };
    let mut z_s: f64 = 0.0;
    let mut z_sc: f64 = 0.0;
    let mut bound_ratio: f64 = 0.0;
    let (mut slope_t, mut slope_y) = (Vec::new(), Vec::new());
    write_with(&out.join(format!("collapse_{key}.csv")), |buf| {
        writeln!(buf, "{}", crate::plot::COLLAPSE_HEADER)?;
        for (i, &t) in grid.iter().enumerate() {
            let (ms, ses) = sample_stats(&column(i, |p, i| p.s[i]));
            let (msc, sesc) = sample_stats(&column(i, |p, i| p.s_check[i]));
            let (mh, seh) = sample_stats(&column(i, |p, i| p.h[i]));
            let het = column(i, |p, i| p.s[i] * (1.0 - p.s[i]))
                .iter()
                .sum::<f64>()
                / r;
            let bound = lyapunov_bound(env, g0, t);
            writeln!(
                buf,
                "{t:.16e},{ms:.16e},{ses:.16e},{msc:.16e},{sesc:.16e},{mh:.16e},{seh:.16e},{bound:.16e},{het:.16e}"
            )?;
            z_s = z_s.max(z_score(ms, s0, ses));
            z_sc = z_sc.max(z_score(msc, sc0, sesc));
            if t >= bound_from - 1e-12 {
                bound_ratio = bound_ratio.max(mh / bound);
            }
            if t >= slope_window[0] - 1e-12 && t <= slope_window[1] + 1e-12 && het > 0.0 {
                slope_t.push(t);
                slope_y.push(het.ln());
            }
        }
        Ok(())
    })?;

    let slope = if slope_t.len() >= 2 {
        ols_slope(&slope_t, &slope_y)
    } else {
        f64::NAN
    };
    let predicted = -2.0 * env.d_n();
    let term1: Vec<Vec<f64>> = reps
        .iter()
        .map(|rep| rep.terms.iter().map(|t| t.term1).collect())
        .collect();
    let mz = mz_integral(&grid, &term1, mz_window[0], mz_window[1])?;

    summary.num(format!("{key}.max_z_S"), z_s);
    summary.num(format!("{key}.max_z_S_check"), z_sc);
    summary.num(format!("{key}.het_slope"), slope);
    summary.num(format!("{key}.het_slope_predicted"), predicted);
    summary.num(format!("{key}.h_bound_max_ratio"), bound_ratio);
    summary.num(format!("{key}.mz_term1"), mz);

    let tol = &cfg.tolerances;
    if let Some(k) = tol.mean_sigma {
        summary.check(
            format!("{key}.martingale_S_check"),
            z_sc <= k,
            format!("max |mean - start| / SE = {z_sc:.4} <= {k}"),
        );
        if cfg.init.as_ref().is_some_and(|i| i.on_line()) {
            summary.check(
                format!("{key}.martingale_S"),
                z_s <= k,
                format!("max |mean - start| / SE = {z_s:.4} <= {k}"),
            );
        }
    }
    if let Some(rel) = tol.slope_rel {
        let err = ((slope - predicted) / predicted).abs();
        summary.check(
            format!("{key}.het_slope"),
            err <= rel,
            format!("slope {slope:.4} vs {predicted:.4}: rel. error {err:.4} <= {rel}"),
        );
    }
    if let Some(f) = tol.h_bound_factor {
        summary.check(
            format!("{key}.h_bound"),
            bound_ratio <= f,
            format!("max mean h / bound = {bound_ratio:.4} <= {f}"),
        );
    }
    Ok(mz)
}

fn compare_fw(
    cfg: &ExperimentConfig,
    law: &RateLaw,
    env: &Environment,
    n_seed: u64,
    out: &Path,
    key: &str,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let fw = cfg.fw.as_ref().expect("validated");
    let rule = cfg.init.as_ref().expect("validated").rule();
    let grid = [fw.t_compare];
    let runs = replicate(
        cfg.replicas,
        n_seed,
        |_, rng| -> Result<(f64, f64), CliError> {
            let start = init_state(env, &rule, &mut rng.clone())?;
            let path = simulate_path(env, &rule, &grid, rng, false)?;
            Ok((observe(&start, env).s_check, path.s[0]))
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let particle: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let s0 = fw
        .s0
        .unwrap_or_else(|| runs.iter().map(|r| r.0).sum::<f64>() / runs.len() as f64);
    let d = fw.d.unwrap_or_else(|| diffusion_constant(law));
    let spec = DiffusionSpec::new(d, s0, fw.dt)?;
    let reference = replicate(fw.samples, mix64(n_seed, FW_STREAM), |_, rng| {
        simulate_fw(&spec, &grid, rng).map(|v| v[0])
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    for (name, xs) in [("particle", &particle), ("reference", &reference)] {
        write_with(&out.join(format!("{name}_{key}.csv")), |buf| {
            writeln!(buf, "S")?;
            for x in xs.iter() {
                writeln!(buf, "{x:.16e}")?;
            }
            Ok(())
        })?;
    }
    let ks = ks_two_sample(&particle, &reference)?;
    let exact = moments_fw(&spec, fw.t_compare)?;
    let het = |xs: &[f64]| xs.iter().map(|x| x * (1.0 - x)).sum::<f64>() / xs.len() as f64;
    summary.num(format!("{key}.ks"), ks);
    summary.num(format!("{key}.reference_D"), d);
    summary.num(format!("{key}.reference_s0"), s0);
    summary.num(
        format!("{key}.particle_mean"),
        particle.iter().sum::<f64>() / particle.len() as f64,
    );
    summary.num(
        format!("{key}.reference_mean"),
        reference.iter().sum::<f64>() / reference.len() as f64,
    );
    summary.num(format!("{key}.particle_het"), het(&particle));
    summary.num(format!("{key}.reference_het"), het(&reference));
    summary.num(format!("{key}.exact_het"), exact.heterozygosity);
    if let Some(max) = cfg.tolerances.ks_max {
        summary.check(
            format!("{key}.ks"),
            ks <= max,
            format!("KS = {ks:.4} <= {max}"),
        );
    }
    Ok(())
}

fn fixation(
    cfg: &ExperimentConfig,
    env: &Environment,
    n_seed: u64,
    out: &Path,
    key: &str,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let rule: InitRule = cfg.init.as_ref().expect("validated").rule();
    let t_max = cfg.t_max.unwrap_or(DEFAULT_T_MAX);
    let runs = replicate(
        cfg.replicas,
        n_seed,
        |_, rng| -> Result<(f64, Outcome, f64), CliError> {
            let start = init_state(env, &rule, &mut rng.clone())?;
            let (outcome, t) = run_to_absorption(env, &rule, rng, t_max)?;
            Ok((observe(&start, env).s_check, outcome, t))
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    write_with(&out.join(format!("fixation_{key}.csv")), |buf| {
        writeln!(buf, "replica,outcome,time")?;
        for (i, (_, o, t)) in runs.iter().enumerate() {
            let code = match o {
                Outcome::FixedOne => 1,
                Outcome::FixedZero => 0,
                Outcome::Timeout => -1,
            };
            writeln!(buf, "{i},{code},{t:.16e}")?;
        }
        Ok(())
    })?;
    let r = runs.len() as f64;
    let fixed = runs.iter().filter(|x| x.1 == Outcome::FixedOne).count();
    let timeouts = runs.iter().filter(|x| x.1 == Outcome::Timeout).count();
    let frac = fixed as f64 / r;
    let predicted = runs.iter().map(|x| x.0).sum::<f64>() / r;
    summary.num(format!("{key}.fixed_fraction"), frac);
    summary.num(
        format!("{key}.fixed_fraction_se"),
        (frac * (1.0 - frac) / r).sqrt(),
    );
    summary.num(format!("{key}.predicted"), predicted);
    summary.int(format!("{key}.timeouts"), timeouts as u64);
    let done: Vec<f64> = runs
        .iter()
        .filter(|x| x.1 != Outcome::Timeout)
        .map(|x| x.2)
        .collect();
    if !done.is_empty() {
        summary.num(
            format!("{key}.mean_absorption_time"),
            done.iter().sum::<f64>() / done.len() as f64,
        );
    }
    if let Some(tol) = cfg.tolerances.fixation_abs {
        let err = (frac - predicted).abs();
        summary.check(
            format!("{key}.fixation"),
            err <= tol && timeouts == 0,
            format!("|{frac:.4} - {predicted:.4}| <= {tol}, timeouts = {timeouts}"),
        );
    }
    Ok(())
}

fn probe(
    cfg: &ExperimentConfig,
    env: &Environment,
    n_seed: u64,
    key: &str,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let InitRule::SameFraction(s0) = cfg.init.as_ref().expect("validated").rule() else {
        unreachable!("validated")
    };
    let est = short_time_variance_probe(
        env,
        s0,
        cfg.t_small.expect("validated"),
        cfg.replicas,
        n_seed,
    )?;
    summary.num(format!("{key}.variance_slope"), est.slope);
    summary.num(format!("{key}.variance_slope_se"), est.se);
    summary.num(format!("{key}.variance_slope_predicted"), est.predicted);
    if let Some(rel) = cfg.tolerances.probe_rel {
        let err = ((est.slope - est.predicted) / est.predicted).abs();
        summary.check(
            format!("{key}.variance_slope"),
            err <= rel,
            format!(
                "{:.4} vs {:.4}: rel. error {err:.4} <= {rel}",
                est.slope, est.predicted
            ),
        );
    }
    Ok(())
}

fn record_condition(summary: &mut Summary, name: &str, report: &ConditionReport) {
    for (q, v) in &report.quantities {
        summary.num(format!("{name}.{q}"), *v);
    }
    if !report.caveat.is_empty() {
        summary.text(format!("{name}.caveat"), report.caveat.clone());
    }
    summary.check(
        name,
        report.satisfied,
        if report.caveat.is_empty() {
            "exact"
        } else {
            "numerical"
        },
    );
}

fn assumption_check(
    cfg: &ExperimentConfig,
    law: &RateLaw,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let a = cfg.assumption.as_ref().expect("validated");
    let eps_grid = a
        .eps_grid
        .clone()
        .unwrap_or_else(|| (1..=10).map(|e| 10f64.powi(-e)).collect());
    record_condition(
        summary,
        "condition_i",
        &check_condition_i(law, a.alpha, a.beta),
    );
    record_condition(
        summary,
        "condition_ii",
        &check_condition_ii(law, a.gamma, a.delta, &eps_grid)?,
    );
    let ok_a = check_corollary_a(a.alpha, a.beta, a.gamma, a.delta);
    summary.check(
        "corollary_a",
        ok_a,
        format!(
            "2 max(gamma, delta) + 1/beta < 1 - 3/alpha with ({}, {}, {}, {})",
            a.alpha, a.beta, a.gamma, a.delta
        ),
    );
    let chi = a.chi.or(match law.family() {
        Some(Family::Power { chi }) => Some(chi),
        _ => None,
    });
    if let Some(chi) = chi {
        let threshold = a.residual_threshold.unwrap_or(DEFAULT_FIT_RESIDUAL);
        record_condition(
            summary,
            "condition_iii",
            &check_condition_iii(law, threshold),
        );
        summary.check(
            "corollary_b",
            check_corollary_b(a.alpha, a.beta, chi),
            format!("1/(chi - 1) + 1/beta < 1 - 3/alpha with chi = {chi}"),
        );
    }
    Ok(())
}

fn diagnose_law(
    cfg: &ExperimentConfig,
    law: &RateLaw,
    out: &Path,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let d = diffusion_constant(law);
    summary.num("law.truncated_mass", law.truncated_mass());
    for (j, &n) in cfg.n.iter().enumerate() {
        let key = format!("N{n}");
        let n_seed = mix64(cfg.seed, j as u64);
        let envs = replicate(cfg.replicas, n_seed, |_, rng| draw_environment(law, n, rng))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        write_with(&out.join(format!("diagnose_{key}.csv")), |buf| {
            writeln!(buf, "replica,D_N,classes,key_ratio")?;
            for (i, e) in envs.iter().enumerate() {
                writeln!(
                    buf,
                    "{i},{:.16e},{},{:.16e}",
                    e.d_n(),
                    e.num_classes(),
                    key_ratio(e)
                )?;
            }
            Ok(())
        })?;
        let max_dev = envs.iter().map(|e| (e.d_n() - d).abs()).fold(0.0, f64::max);
        let mean_classes =
            envs.iter().map(|e| e.num_classes() as f64).sum::<f64>() / envs.len() as f64;
        let distinct = expected_distinct(law, n)?;
        summary.num(format!("{key}.max_abs_D_N_minus_D"), max_dev);
        summary.num(format!("{key}.mean_classes"), mean_classes);
        summary.num(format!("{key}.expected_distinct"), distinct.value);
        summary.text(
            format!("{key}.expected_distinct_is_lower_bound"),
            distinct.lower_bound.to_string(),
        );
        if let Some(tol) = cfg.tolerances.d_abs {
            summary.check(
                format!("{key}.empirical_D"),
                max_dev < tol,
                format!("max |D_N - D| = {max_dev:.4e} < {tol}"),
            );
        }
    }
    Ok(())
}
