//! Geometry of the state space `Q = {y : 0 <= y_k <= n_k}` and the
//! convergence diagnostics built on it.
//!
//! All vectors are indexed by the environment's classes; `y_k` is the
//! fraction of the whole population that has type 1 and lies in class `k`.
//! The line `{s n : s in [0, 1]}` is where the dynamics collapse; `P`
//! projects onto it preserving total mass, `P_check` preserving the
//! rate-weighted mass `D_N sum y_k / r_k`.

use std::io::{self, Write};

use crate::disorder::Environment;
use crate::rate_law::RateLaw;
use crate::{Error, Result};

/// Slack allowed on `0 <= y_k <= n_k` for vectors built from floats.
const RANGE_TOL: f64 = 1e-12;

fn check_y(y: &[f64], env: &Environment) -> Result<()> {
    if y.len() != env.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "state has {} coordinates, environment has {} classes",
            y.len(),
            env.num_classes()
        )));
    }
    for (k, (&yk, &nk)) in y.iter().zip(env.fractions()).enumerate() {
        if !(yk >= -RANGE_TOL && yk <= nk + RANGE_TOL) {
            return Err(Error::InvalidArgument(format!(
                "y[{k}] = {yk} outside [0, {nk}]"
            )));
        }
    }
    Ok(())
}

fn total_mass(y: &[f64]) -> f64 {
    y.iter().sum()
}

fn weighted_mass(y: &[f64], env: &Environment) -> f64 {
    env.d_n() * y.iter().zip(env.rates()).map(|(yk, r)| yk / r).sum::<f64>()
}

/// `(S, S_check) = (sum y_k, D_N sum y_k / r_k)`.
pub fn masses(y: &[f64], env: &Environment) -> Result<(f64, f64)> {
    check_y(y, env)?;
    Ok((total_mass(y), weighted_mass(y, env)))
}

/// `P y = (sum y_l) n`.
pub fn project_p(y: &[f64], env: &Environment) -> Vec<f64> {
    let s = total_mass(y);
    env.fractions().iter().map(|n| s * n).collect()
}

/// `P_check y = (D_N sum y_l / r_l) n`.
pub fn project_pcheck(y: &[f64], env: &Environment) -> Vec<f64> {
    let s = weighted_mass(y, env);
    env.fractions().iter().map(|n| s * n).collect()
}

/// `Delta_k = y_k - n_k sum_l y_l`, i.e. `y - P y`.
pub fn delta(y: &[f64], env: &Environment) -> Vec<f64> {
    let s = total_mass(y);
    y.iter()
        .zip(env.fractions())
        .map(|(yk, nk)| yk - nk * s)
        .collect()
}

/// Lyapunov function `h(y) = sum_k Delta_k^2 / n_k`.
pub fn lyapunov_h(y: &[f64], env: &Environment) -> f64 {
    let s = total_mass(y);
    y.iter()
        .zip(env.fractions())
        .map(|(yk, nk)| (yk - nk * s).powi(2) / nk)
        .sum()
}

/// `||y - P y||_2^2`.
pub fn dist2_p(y: &[f64], env: &Environment) -> f64 {
    let s = total_mass(y);
    y.iter()
        .zip(env.fractions())
        .map(|(yk, nk)| (yk - nk * s).powi(2))
        .sum()
}

/// Upper bound on `E h(Y(t))` started from `h(Y(0)) = g0`:
/// `F + (g0 - F) exp(-2 N M_- t)` with floor `F = Sigma_N / (N M_-)`.
pub fn lyapunov_bound(env: &Environment, g0: f64, t: f64) -> f64 {
    let rate = env.n() as f64 * env.m_minus();
    let floor = env.sigma() / rate;
    floor + (g0 - floor) * (-2.0 * rate * t).exp()
}

/// Norms of `n - mu` and `mu` on the union of the environment's classes and
/// the law's stored atoms. Coordinates missing on either side count as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawAlignment {
    pub n_minus_mu: f64,
    pub mu: f64,
}

impl LawAlignment {
    pub fn new(env: &Environment, law: &RateLaw) -> Self {
        let mut diff2 = 0.0;
        for (c, nk) in env.classes().iter().zip(env.fractions()) {
            diff2 += (nk - law.prob_of(c.rate)).powi(2);
        }
        let mut mu2 = 0.0;
        for a in law.atoms() {
            mu2 += a.prob * a.prob;
            if !env.classes().iter().any(|c| c.rate == a.rate) {
                diff2 += a.prob * a.prob;
            }
        }
        Self {
            n_minus_mu: diff2.sqrt(),
            mu: mu2.sqrt(),
        }
    }
}

/// The four norms bounding `||Y - s P||_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleTerms {
    /// `||Y - S n||`
    pub term1: f64,
    /// `||S n - S_check n||`
    pub term2: f64,
    /// `||S_check n - S_check mu||`
    pub term3: f64,
    /// `||S_check mu - s_ref mu||`, only with a caller-supplied reference.
    pub term4: Option<f64>,
}

pub fn triangle_terms(
    y: &[f64],
    env: &Environment,
    law: &RateLaw,
    s_ref: Option<f64>,
) -> Result<TriangleTerms> {
    check_y(y, env)?;
    Ok(triangle_terms_aligned(
        y,
        env,
        &LawAlignment::new(env, law),
        s_ref,
    ))
}

/// [`triangle_terms`] with the law-dependent norms precomputed.
pub fn triangle_terms_aligned(
    y: &[f64],
    env: &Environment,
    align: &LawAlignment,
    s_ref: Option<f64>,
) -> TriangleTerms {
    let s = total_mass(y);
    let s_check = weighted_mass(y, env);
    let n_norm = env.fractions().iter().map(|n| n * n).sum::<f64>().sqrt();
    TriangleTerms {
        term1: dist2_p(y, env).sqrt(),
        term2: (s - s_check).abs() * n_norm,
        term3: s_check * align.n_minus_mu,
        term4: s_ref.map(|r| (s_check - r).abs() * align.mu),
    }
}

/// Writes `t,term1,term2,term3[,term4]` rows.
pub fn write_triangle_csv<W: Write>(
    mut out: W,
    times: &[f64],
    terms: &[TriangleTerms],
) -> io::Result<()> {
    let with4 = terms.iter().any(|t| t.term4.is_some());
    if with4 {
        writeln!(out, "t,term1,term2,term3,term4")?;
    } else {
        writeln!(out, "t,term1,term2,term3")?;
    }
    for (t, row) in times.iter().zip(terms) {
        write!(
            out,
            "{t:.16e},{:.16e},{:.16e},{:.16e}",
            row.term1, row.term2, row.term3
        )?;
        if with4 {
            write!(out, ",{:.16e}", row.term4.unwrap_or(f64::NAN))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Replica average of the trapezoid approximation to
/// `int_a^b d(t) e^-t dt`, where each series holds `d` on `grid`.
///
/// Endpoints that fall between grid points are handled by linear
/// interpolation of the integrand.
pub fn mz_integral(grid: &[f64], series: &[Vec<f64>], a: f64, b: f64) -> Result<f64> {
    if !(a >= 0.0 && a < b) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= a < b, got [{a}, {b}]"
        )));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "grid must be strictly increasing with >= 2 points".into(),
        ));
    }
    if grid[0] > a || *grid.last().unwrap() < b {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] does not cover [{a}, {b}]",
            grid[0],
            grid.last().unwrap()
        )));
    }
    if series.is_empty() {
        return Err(Error::InvalidArgument("no series".into()));
    }
    let mut total = 0.0;
    for d in series {
        if d.len() != grid.len() {
            return Err(Error::InvalidArgument(
                "series length differs from grid".into(),
            ));
        }
        let f = |i: usize| d[i] * (-grid[i]).exp();
        let mut acc = 0.0;
        for i in 0..grid.len() - 1 {
            let (t0, t1) = (grid[i], grid[i + 1]);
            let lo = t0.max(a);
            let hi = t1.min(b);
            if hi <= lo {
                continue;
            }
            let (f0, f1) = (f(i), f(i + 1));
            let at = |t: f64| f0 + (f1 - f0) * (t - t0) / (t1 - t0);
            acc += 0.5 * (at(lo) + at(hi)) * (hi - lo);
        }
        total += acc;
    }
    Ok(total / series.len() as f64)
}
