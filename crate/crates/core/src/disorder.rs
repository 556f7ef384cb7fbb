//! Quenched environments: `N` i.i.d. rates drawn once, stored as the classes
//! that actually occur (the set `N_R`) with their counts.

use std::fmt::Write as _;

use rand::Rng;

use crate::rate_law::{sample_index, sci, RateLaw};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Class {
    pub rate: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    n: u64,
    classes: Vec<Class>,
    /// `n_k = count_k / N`.
    fractions: Vec<f64>,
    sigma: f64,
    m_minus: f64,
    m_plus: f64,
    m_inv2: f64,
    d_n: f64,
}

impl Environment {
    fn build(classes: Vec<Class>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidEnvironment("no classes".into()));
        }
        for c in &classes {
            if c.count == 0 {
                return Err(Error::InvalidEnvironment(format!(
                    "class with rate {} has zero count",
                    c.rate
                )));
            }
            if !(c.rate.is_finite() && c.rate > 0.0) {
                return Err(Error::InvalidEnvironment(format!(
                    "rate {} is not positive",
                    c.rate
                )));
            }
        }
        let mut rates: Vec<f64> = classes.iter().map(|c| c.rate).collect();
        rates.sort_by(f64::total_cmp);
        if let Some(w) = rates.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidEnvironment(format!(
                "duplicate rate {}",
                w[0]
            )));
        }
        let n: u64 = classes.iter().map(|c| c.count).sum();
        let fractions: Vec<f64> = classes.iter().map(|c| c.count as f64 / n as f64).collect();
        let sigma = classes.iter().map(|c| c.rate).sum();
        let m_minus = rates[0];
        let m_plus = *rates.last().unwrap();
        let m_inv2 = classes.iter().map(|c| c.rate.powi(-2)).sum();
        let d_n = 1.0
            / classes
                .iter()
                .zip(&fractions)
                .map(|(c, f)| f / c.rate)
                .sum::<f64>();
        Ok(Self {
            n,
            classes,
            fractions,
            sigma,
            m_minus,
            m_plus,
            m_inv2,
            d_n,
        })
    }

    /// Population size `N`.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn classes(&self) -> &[Class] {
        &self.classes
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.classes.iter().map(|c| c.rate)
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// Number of classes present, `Z_N`.
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// `Sigma_N`, the sum of the distinct rates present.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn m_minus(&self) -> f64 {
        self.m_minus
    }

    pub fn m_plus(&self) -> f64 {
        self.m_plus
    }

    /// `sum_k r_k^-2` over the classes present.
    pub fn m_inv2(&self) -> f64 {
        self.m_inv2
    }

    /// `D_N = (sum_k n_k / r_k)^-1`.
    pub fn d_n(&self) -> f64 {
        self.d_n
    }

    /// Plain-text form: a `N = ...` line followed by `rate count` rows.
    pub fn to_document(&self) -> String {
        let mut out = String::from("# moran environment\n");
        writeln!(out, "N = {}", self.n).unwrap();
        out.push_str("# rate count\n");
        for c in &self.classes {
            writeln!(out, "{} {}", sci(c.rate), c.count).unwrap();
        }
        out
    }

    pub fn from_document(doc: &str) -> Result<Self> {
        let mut declared = None;
        let mut pairs = Vec::new();
        for (lineno, line) in doc.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Parse(format!("line {}: `{line}`", lineno + 1));
            if let Some(rest) = line.strip_prefix("N") {
                let value = rest.trim_start().strip_prefix('=').ok_or_else(bad)?;
                declared = Some(value.trim().parse::<u64>().map_err(|_| bad())?);
                continue;
            }
            let mut fields = line.split_whitespace();
            let rate = fields
                .next()
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(bad)?;
            let count = fields
                .next()
                .and_then(|f| f.parse::<u64>().ok())
                .ok_or_else(bad)?;
            if fields.next().is_some() {
                return Err(bad());
            }
            pairs.push((rate, count));
        }
        let env = environment_from_counts(&pairs)?;
        match declared {
            Some(n) if n == env.n => Ok(env),
            Some(n) => Err(Error::Parse(format!(
                "declared N = {n} but counts sum to {}",
                env.n
            ))),
            None => Err(Error::Parse("missing `N = ...` line".into())),
        }
    }
}

/// Draws `N` i.i.d. rates from `law` and aggregates them into classes, in
/// the law's atom order.
pub fn draw_environment<R: Rng + ?Sized>(
    law: &RateLaw,
    n: u64,
    rng: &mut R,
) -> Result<Environment> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "population size must be at least 1".into(),
        ));
    }
    let mut counts = vec![0u64; law.len()];
    for _ in 0..n {
        counts[sample_index(law, rng)] += 1;
    }
    let classes = law
        .atoms()
        .iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(a, count)| Class {
            rate: a.rate,
            count,
        })
        .collect();
    Environment::build(classes)
}

pub fn environment_from_counts(pairs: &[(f64, u64)]) -> Result<Environment> {
    Environment::build(
        pairs
            .iter()
            .map(|&(rate, count)| Class { rate, count })
            .collect(),
    )
}

pub fn empirical_d(env: &Environment) -> f64 {
    env.d_n
}

/// `(sum r_k)(sum r_k^-2) / (N min r_k)` over the classes present.
pub fn key_ratio(env: &Environment) -> f64 {
    env.sigma * env.m_inv2 / (env.n as f64 * env.m_minus)
}

/// Expected number of distinct classes among `N` draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinctEstimate {
    pub value: f64,
    /// Set when the law is truncated, so `value` only bounds the true
    /// expectation from below.
    pub lower_bound: bool,
}

/// `sum_k [1 - (1 - mu_k)^N]` over the stored atoms.
pub fn expected_distinct(law: &RateLaw, n: u64) -> Result<DistinctEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "population size must be at least 1".into(),
        ));
    }
    let nf = n as f64;
    let value = law
        .atoms()
        .iter()
        .map(|a| {
            if a.prob > 1e-3 {
                1.0 - (1.0 - a.prob).powf(nf)
            } else {
                // 1 - (1-mu)^N loses all digits for tiny mu.
                -(nf * (-a.prob).ln_1p()).exp_m1()
            }
        })
        .sum();
    Ok(DistinctEstimate {
        value,
        lower_bound: law.truncated_mass() > 0.0,
    })
}
