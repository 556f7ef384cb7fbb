//! Reference Fisher-Wright diffusion and the statistics used to compare it
//! with the particle system.
//!
//! Convention: the limit generator is `G f(s) = D s (1 - s) f''(s)`, so the
//! infinitesimal variance of `S` is `2 D s (1 - s)`. This is what a
//! second-order expansion of the particle generator produces, and it is the
//! convention checked by [`short_time_variance_probe`]. Every formula in
//! this module uses it.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::disorder::Environment;
use crate::engine::{init_state, simulate_observed, InitRule};
use crate::seeding::replicate;
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSpec {
    pub d: f64,
    pub s0: f64,
    pub dt: f64,
}

impl DiffusionSpec {
    pub fn new(d: f64, s0: f64, dt: f64) -> Result<Self> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "diffusion constant {d} is negative"
            )));
        }
        if !(0.0..=1.0).contains(&s0) {
            return Err(Error::InvalidArgument(format!("s0 = {s0} outside [0, 1]")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step dt = {dt} must be positive"
            )));
        }
        Ok(Self { d, s0, dt })
    }
}

/// Euler-Maruyama path read off at `grid`.
///
/// Each step is `s += sqrt(2 D s (1-s) h) xi` followed by clamping to
/// `[0, 1]`; a path that reaches 0 or 1 stays there. Steps are shortened so
/// that every grid time is hit exactly.
pub fn simulate_fw<R: Rng + ?Sized>(
    spec: &DiffusionSpec,
    grid: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    crate::engine::validate_grid(grid)?;
    let mut s = spec.s0;
    let mut absorbed = s == 0.0 || s == 1.0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &tg in grid {
        while tg - t > 1e-12 * tg.max(1.0) {
            let h = spec.dt.min(tg - t);
            if !absorbed {
                let xi: f64 = rng.sample(StandardNormal);
                s += (2.0 * spec.d * s * (1.0 - s) * h).sqrt() * xi;
                s = s.clamp(0.0, 1.0);
                absorbed = s == 0.0 || s == 1.0;
            }
            t += h;
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwMoments {
    pub mean: f64,
    pub variance: f64,
    /// `E[S (1 - S)]`
    pub heterozygosity: f64,
}

/// Exact moments: `E S = s0`, `E S(1-S) = s0 (1-s0) e^{-2Dt}`.
pub fn moments_fw(spec: &DiffusionSpec, t: f64) -> Result<FwMoments> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} is negative")));
    }
    let h0 = spec.s0 * (1.0 - spec.s0);
    let decay = (-2.0 * spec.d * t).exp();
    Ok(FwMoments {
        mean: spec.s0,
        variance: h0 * (1.0 - decay),
        heterozygosity: h0 * decay,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "KS statistic needs two nonempty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN in KS sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (divisor `n - 1`).
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

pub fn mean_var_ci(samples: &[f64]) -> Result<SampleSummary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let variance = m2 / (nf - 1.0);
    // Var(s^2) ~ (mu_4 - (n-3)/(n-1) sigma^4) / n
    let var_of_var = (m4 - (nf - 3.0) / (nf - 1.0) * variance * variance) / nf;
    Ok(SampleSummary {
        n,
        mean,
        variance,
        se_mean: (variance / nf).sqrt(),
        se_variance: var_of_var.max(0.0).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeEstimate {
    /// `Var[S(t_small)] / t_small` across replicas.
    pub slope: f64,
    pub se: f64,
    /// `2 D_N s0 (1 - s0)` under the generator convention.
    pub predicted: f64,
}

/// Estimates the initial growth rate of `Var[S^N(t)]` from replicas of the
/// particle system started at per-class fraction `s0`.
pub fn short_time_variance_probe(
    env: &Environment,
    s0: f64,
    t_small: f64,
    replicas: usize,
    master_seed: u64,
) -> Result<ProbeEstimate> {
    if !(t_small > 0.0 && t_small <= 0.05) {
        return Err(Error::InvalidArgument(format!(
            "t_small = {t_small} must lie in (0, 0.05]"
        )));
    }
    if replicas < 400 {
        return Err(Error::InvalidArgument(format!(
            "need at least 400 replicas, got {replicas}"
        )));
    }
    let rule = InitRule::SameFraction(s0);
    let finals = replicate(replicas, master_seed, |_, rng| -> Result<f64> {
        let mut state = init_state(env, &rule, rng)?;
        let mut s = 0.0;
        simulate_observed(env, &mut state, &[t_small], rng, |_, _, st| {
            s = st.type_one() as f64 / env.n() as f64;
        })?;
        Ok(s)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let summary = mean_var_ci(&finals)?;
    Ok(ProbeEstimate {
        slope: summary.variance / t_small,
        se: summary.se_variance / t_small,
        predicted: 2.0 * env.d_n() * s0 * (1.0 - s0),
    })
}
