//! The resampling-rate law `P = sum_k mu_k delta_{r_k}`.
//!
//! Countable families are truncated once the dropped tail mass falls below
//! `eps_trunc`; the dropped mass is carried in [`RateLaw::truncated_mass`]
//! so every downstream sum knows it is looking at a finite section.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on `sum probs + truncated_mass = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;
pub const DEFAULT_EPS_TRUNC: f64 = 1e-12;
/// Residual threshold for the power-law fit in [`check_condition_iii`].
pub const DEFAULT_FIT_RESIDUAL: f64 = 1e-3;
/// Hard cap on the number of atoms a truncated family may produce.
pub const MAX_ATOMS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Finite,
    /// `r_k = k`, `mu_k = p (1-p)^(k-1)`.
    Geometric {
        p: f64,
    },
    /// `r_k = k`, `mu_k = k^(-chi) / zeta(chi)`.
    Power {
        chi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub rate: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateLaw {
    atoms: Vec<Atom>,
    /// Running sums of `prob`, used for inverse-CDF sampling.
    cumulative: Vec<f64>,
    truncated_mass: f64,
    eps_trunc: f64,
    family: Option<Family>,
}

/// A sum over atoms together with whether the untruncated sum is known to
/// diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub diverges: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub satisfied: bool,
    pub quantities: BTreeMap<String, f64>,
    /// Empty unless the verdict rests on a numerical estimate.
    pub caveat: String,
}

impl ConditionReport {
    fn new(satisfied: bool, quantities: BTreeMap<String, f64>, caveat: impl Into<String>) -> Self {
        Self {
            satisfied,
            quantities,
            caveat: caveat.into(),
        }
    }
}

impl RateLaw {
    fn from_parts(
        atoms: Vec<Atom>,
        truncated_mass: f64,
        eps_trunc: f64,
        family: Option<Family>,
    ) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidLaw("no atoms".into()));
        }
        if !(0.0..1.0).contains(&truncated_mass) {
            return Err(Error::InvalidLaw(format!(
                "truncated mass {truncated_mass} outside [0, 1)"
            )));
        }
        for a in &atoms {
            if !(a.rate.is_finite() && a.rate > 0.0) {
                return Err(Error::InvalidLaw(format!(
                    "rate {} is not positive",
                    a.rate
                )));
            }
            if !(a.prob.is_finite() && a.prob > 0.0) {
                return Err(Error::InvalidLaw(format!(
                    "probability {} is not positive",
                    a.prob
                )));
            }
        }
        let mut rates: Vec<f64> = atoms.iter().map(|a| a.rate).collect();
        rates.sort_by(f64::total_cmp);
        if let Some(w) = rates.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidLaw(format!("duplicate rate {}", w[0])));
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.prob;
            cumulative.push(acc);
        }
        if (acc + truncated_mass - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {acc} with truncated mass {truncated_mass}"
            )));
        }
        Ok(Self {
            atoms,
            cumulative,
            truncated_mass,
            eps_trunc,
            family,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn eps_trunc(&self) -> f64 {
        self.eps_trunc
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    /// Probability of the atom with exactly this rate, zero if absent.
    pub fn prob_of(&self, rate: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.rate == rate)
            .map_or(0.0, |a| a.prob)
    }

    /// Serializes to the key-value law document.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        match self.family {
            Some(Family::Finite) => out.push_str("family = \"finite\"\n"),
            Some(Family::Geometric { p }) => {
                out.push_str("family = \"geometric\"\n");
                writeln!(out, "p = {}", sci(p)).unwrap();
            }
            Some(Family::Power { chi }) => {
                out.push_str("family = \"power\"\n");
                writeln!(out, "chi = {}", sci(chi)).unwrap();
            }
            None => out.push_str("family = \"untagged\"\n"),
        }
        writeln!(out, "eps_trunc = {}", sci(self.eps_trunc)).unwrap();
        if matches!(self.family, Some(Family::Finite) | None) {
            if self.family.is_none() {
                writeln!(out, "truncated_mass = {}", sci(self.truncated_mass)).unwrap();
            }
            out.push_str("atoms = [\n");
            for a in &self.atoms {
                writeln!(out, "  [{}, {}],", sci(a.rate), sci(a.prob)).unwrap();
            }
            out.push_str("]\n");
        }
        out
    }

    pub fn from_document(doc: &str) -> Result<Self> {
        let spec: LawSpec = toml::from_str(doc).map_err(|e| Error::Parse(e.to_string()))?;
        spec.build()
    }

    pub fn spec(&self) -> LawSpec {
        let atoms = || Some(self.atoms.iter().map(|a| [a.rate, a.prob]).collect());
        match self.family {
            Some(Family::Finite) => LawSpec {
                family: "finite".into(),
                atoms: atoms(),
                ..LawSpec::default()
            },
            Some(Family::Geometric { p }) => LawSpec {
                family: "geometric".into(),
                p: Some(p),
                eps_trunc: Some(self.eps_trunc),
                ..LawSpec::default()
            },
            Some(Family::Power { chi }) => LawSpec {
                family: "power".into(),
                chi: Some(chi),
                eps_trunc: Some(self.eps_trunc),
                ..LawSpec::default()
            },
            None => LawSpec {
                family: "untagged".into(),
                truncated_mass: Some(self.truncated_mass),
                atoms: atoms(),
                ..LawSpec::default()
            },
        }
    }
}

/// 17 significant digits, exact round trip through any decimal parser.
pub(crate) fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serde form of a law document; embedded verbatim in experiment configs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_trunc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<[f64; 2]>>,
}

impl LawSpec {
    pub fn build(&self) -> Result<RateLaw> {
        let eps = self.eps_trunc.unwrap_or(DEFAULT_EPS_TRUNC);
        let pairs = || {
            self.atoms
                .clone()
                .ok_or_else(|| Error::Parse(format!("family {} needs `atoms`", self.family)))
                .map(|v| v.into_iter().map(|[r, m]| (r, m)).collect::<Vec<_>>())
        };
        match self.family.as_str() {
            "finite" => make_finite_law(&pairs()?),
            "geometric" => {
                let p = self
                    .p
                    .ok_or_else(|| Error::Parse("geometric law needs `p`".into()))?;
                make_geometric_law(p, eps)
            }
            "power" => {
                let chi = self
                    .chi
                    .ok_or_else(|| Error::Parse("power law needs `chi`".into()))?;
                make_power_law(chi, eps)
            }
            "untagged" => make_truncated_law(&pairs()?, self.truncated_mass.unwrap_or(0.0)),
            other => Err(Error::Parse(format!("unknown law family `{other}`"))),
        }
    }
}

pub fn make_finite_law(pairs: &[(f64, f64)]) -> Result<RateLaw> {
    let atoms = pairs
        .iter()
        .map(|&(rate, prob)| Atom { rate, prob })
        .collect();
    RateLaw::from_parts(atoms, 0.0, 0.0, Some(Family::Finite))
}

/// A law given by explicit atoms and a known dropped mass, without a family
/// tag. Condition checks on such a law are numerical estimates only.
pub fn make_truncated_law(pairs: &[(f64, f64)], truncated_mass: f64) -> Result<RateLaw> {
    let atoms = pairs
        .iter()
        .map(|&(rate, prob)| Atom { rate, prob })
        .collect();
    RateLaw::from_parts(atoms, truncated_mass, 0.0, None)
}

fn check_eps(eps_trunc: f64) -> Result<()> {
    if eps_trunc > 0.0 && eps_trunc < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLaw(format!(
            "eps_trunc {eps_trunc} outside (0, 1)"
        )))
    }
}

pub fn make_geometric_law(p: f64, eps_trunc: f64) -> Result<RateLaw> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidLaw(format!(
            "geometric p = {p} outside (0, 1)"
        )));
    }
    check_eps(eps_trunc)?;
    let q = 1.0 - p;
    let mut atoms = Vec::new();
    // mu_k = p q^(k-1); tail after K atoms is q^K.
    let mut tail = 1.0;
    while tail > eps_trunc {
        if atoms.len() == MAX_ATOMS {
            return Err(Error::InvalidLaw(format!(
                "geometric p = {p} needs more than {MAX_ATOMS} atoms for eps_trunc {eps_trunc}"
            )));
        }
        let k = atoms.len() + 1;
        atoms.push(Atom {
            rate: k as f64,
            prob: p * q.powi(k as i32 - 1),
        });
        tail = q.powi(k as i32);
    }
    RateLaw::from_parts(atoms, tail, eps_trunc, Some(Family::Geometric { p }))
}

/// Euler-Maclaurin estimate of `sum_{k > K} k^(-s)`.
fn zeta_tail(s: f64, k: usize) -> f64 {
    let k = k as f64;
    k.powf(1.0 - s) / (s - 1.0) - 0.5 * k.powf(-s) + s / 12.0 * k.powf(-s - 1.0)
}

pub fn make_power_law(chi: f64, eps_trunc: f64) -> Result<RateLaw> {
    if !(chi > 1.0 && chi.is_finite()) {
        return Err(Error::InvalidLaw(format!(
            "power-law exponent chi = {chi} must exceed 1"
        )));
    }
    check_eps(eps_trunc)?;
    // The integral bound sum_{k>K} k^-chi <= K^(1-chi)/(chi-1) fixes K; zeta(chi) >= 1
    // makes the normalized tail smaller still.
    let k_needed = (eps_trunc * (chi - 1.0)).powf(-1.0 / (chi - 1.0)).ceil();
    if !(k_needed <= MAX_ATOMS as f64) {
        return Err(Error::InvalidLaw(format!(
            "power law chi = {chi} needs about {k_needed:e} atoms for eps_trunc {eps_trunc}; \
             raise eps_trunc"
        )));
    }
    let k_max = (k_needed as usize).max(1);
    let weights: Vec<f64> = (1..=k_max).map(|k| (k as f64).powf(-chi)).collect();
    // Sum smallest terms first.
    let head: f64 = weights.iter().rev().sum();
    let tail = zeta_tail(chi, k_max);
    let zeta = head + tail;
    let atoms = weights
        .iter()
        .enumerate()
        .map(|(i, w)| Atom {
            rate: (i + 1) as f64,
            prob: w / zeta,
        })
        .collect();
    RateLaw::from_parts(atoms, tail / zeta, eps_trunc, Some(Family::Power { chi }))
}

/// `D` with `1/D = sum_k mu_k / r_k` over the stored atoms.
pub fn diffusion_constant(law: &RateLaw) -> f64 {
    1.0 / law.atoms.iter().map(|a| a.prob / a.rate).sum::<f64>()
}

/// `sum_k mu_k r_k^b`.
pub fn moment(law: &RateLaw, b: f64) -> Moment {
    let value = law.atoms.iter().map(|a| a.prob * a.rate.powf(b)).sum();
    let diverges = match law.family {
        Some(Family::Power { chi }) => b >= chi - 1.0,
        _ => false,
    };
    Moment { value, diverges }
}

/// `sum_k mu_k r_k^(-a)`.
pub fn inverse_moment(law: &RateLaw, a: f64) -> Moment {
    let value = law.atoms.iter().map(|x| x.prob * x.rate.powf(-a)).sum();
    // Both tagged countable families have r_k = k >= 1.
    Moment {
        value,
        diverges: false,
    }
}

const NUMERIC_CAVEAT: &str =
    "untagged law: asymptotic condition estimated from the stored atoms, not proved";

/// Share of a sum carried by the last quarter of its terms.
fn tail_share(terms: &[f64]) -> f64 {
    let total: f64 = terms.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let start = terms.len() - terms.len() / 4;
    terms[start..].iter().sum::<f64>() / total
}

/// Condition (I): finite inverse moment of order `alpha`, finite moment of
/// order `beta`.
pub fn check_condition_i(law: &RateLaw, alpha: f64, beta: f64) -> ConditionReport {
    let inv = inverse_moment(law, alpha);
    let mom = moment(law, beta);
    let mut q = BTreeMap::new();
    q.insert("inverse_moment_alpha".to_string(), inv.value);
    q.insert("moment_beta".to_string(), mom.value);
    match law.family {
        Some(Family::Finite) | Some(Family::Geometric { .. }) => ConditionReport::new(true, q, ""),
        Some(Family::Power { .. }) => ConditionReport::new(!inv.diverges && !mom.diverges, q, ""),
        None => {
            let inv_terms: Vec<f64> = law
                .atoms
                .iter()
                .map(|a| a.prob * a.rate.powf(-alpha))
                .collect();
            let mom_terms: Vec<f64> = law
                .atoms
                .iter()
                .map(|a| a.prob * a.rate.powf(beta))
                .collect();
            let share = tail_share(&inv_terms).max(tail_share(&mom_terms));
            q.insert("tail_share".to_string(), share);
            let ok = inv.value.is_finite() && mom.value.is_finite() && share < 1e-3;
            ConditionReport::new(ok, q, NUMERIC_CAVEAT)
        }
    }
}

/// Condition (II), evaluated on a decreasing grid of `eps` values:
/// `A(eps) = eps^-(1-gamma) sum_k mu_k 1{mu_k <= eps}` and
/// `B(eps) = eps^delta #{k : mu_k > eps}`.
pub fn check_condition_ii(
    law: &RateLaw,
    gamma: f64,
    delta: f64,
    eps_grid: &[f64],
) -> Result<ConditionReport> {
    if !(gamma > 0.0 && gamma <= 1.0 && delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma = {gamma}, delta = {delta} must lie in (0, 1]"
        )));
    }
    if eps_grid.is_empty() {
        return Err(Error::InvalidArgument("empty eps grid".into()));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0)) || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "eps grid must be positive and strictly decreasing".into(),
        ));
    }
    let a_of = |eps: f64| {
        eps.powf(-(1.0 - gamma))
            * law
                .atoms
                .iter()
                .filter(|a| a.prob <= eps)
                .map(|a| a.prob)
                .sum::<f64>()
    };
    let b_of =
        |eps: f64| eps.powf(delta) * law.atoms.iter().filter(|a| a.prob > eps).count() as f64;
    let a_vals: Vec<f64> = eps_grid.iter().map(|&e| a_of(e)).collect();
    let b_vals: Vec<f64> = eps_grid.iter().map(|&e| b_of(e)).collect();
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);

    let mut q = BTreeMap::new();
    q.insert("sup_A".to_string(), sup(&a_vals));
    q.insert("sup_B".to_string(), sup(&b_vals));
    q.insert("A_at_min_eps".to_string(), *a_vals.last().unwrap());
    q.insert("B_at_min_eps".to_string(), *b_vals.last().unwrap());

    let satisfied = match law.family {
        Some(Family::Finite) | Some(Family::Geometric { .. }) => true,
        // mu_k ~ k^-chi: B(eps) ~ eps^(delta - 1/chi), A(eps) ~ eps^(gamma - 1/chi).
        Some(Family::Power { chi }) => gamma >= 1.0 / chi && delta >= 1.0 / chi,
        None => {
            // Trend over the smallest decade of the grid.
            let eps_min = *eps_grid.last().unwrap();
            let first = eps_grid.iter().position(|&e| e <= 10.0 * eps_min).unwrap();
            let non_increasing =
                |v: &[f64]| *v.last().unwrap() <= v[first] * (1.0 + 1e-9) + f64::MIN_POSITIVE;
            q.values().all(|x| x.is_finite()) && non_increasing(&a_vals) && non_increasing(&b_vals)
        }
    };
    Ok(ConditionReport::new(
        satisfied,
        q,
        "limsup over eps -> 0 estimated on a finite grid, not proved",
    ))
}

/// Condition (III): `mu_k ~ k^-chi`, with `chi` fitted by least squares of
/// `log mu_k` on `log k` over the upper half of the atom indices.
pub fn check_condition_iii(law: &RateLaw, residual_threshold: f64) -> ConditionReport {
    let k_max = law.atoms.len();
    let mut q = BTreeMap::new();
    if k_max < 10 {
        return ConditionReport::new(false, q, "too few atoms");
    }
    let start = k_max / 2;
    let points: Vec<(f64, f64)> = (start..k_max)
        .map(|i| (((i + 1) as f64).ln(), law.atoms[i].prob.ln()))
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let chi_hat = -slope;
    q.insert("chi_hat".to_string(), chi_hat);
    q.insert("fit_residual_rms".to_string(), rms);
    let caveat = if law.family.is_none() {
        NUMERIC_CAVEAT
    } else {
        ""
    };
    ConditionReport::new(rms < residual_threshold && chi_hat > 1.0, q, caveat)
}

/// `2 max(gamma, delta) + 1/beta < 1 - 3/alpha`.
pub fn check_corollary_a(alpha: f64, beta: f64, gamma: f64, delta: f64) -> bool {
    2.0 * gamma.max(delta) + 1.0 / beta < 1.0 - 3.0 / alpha
}

/// `1/(chi - 1) + 1/beta < 1 - 3/alpha`.
pub fn check_corollary_b(alpha: f64, beta: f64, chi: f64) -> bool {
    1.0 / (chi - 1.0) + 1.0 / beta < 1.0 - 3.0 / alpha
}

/// Inverse-CDF draw, conditioned on landing in the stored atoms.
pub fn sample_rate<R: Rng + ?Sized>(law: &RateLaw, rng: &mut R) -> f64 {
    law.atoms[sample_index(law, rng)].rate
}

pub(crate) fn sample_index<R: Rng + ?Sized>(law: &RateLaw, rng: &mut R) -> usize {
    let total = *law.cumulative.last().unwrap();
    let u = rng.random::<f64>() * total;
    law.cumulative
        .partition_point(|&c| c <= u)
        .min(law.atoms.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use approx::assert_relative_eq;

    fn two_atom() -> RateLaw {
        make_finite_law(&[(1.0, 0.5), (4.0, 0.5)]).unwrap()
    }

    #[test]
    fn finite_law_sums() {
        let law = two_atom();
        assert_eq!(law.truncated_mass(), 0.0);
        assert_eq!(law.family(), Some(Family::Finite));
        assert_relative_eq!(1.0 / diffusion_constant(&law), 0.625, epsilon = 1e-15);
        assert_relative_eq!(diffusion_constant(&law), 1.6, epsilon = 1e-14);
        let point = make_finite_law(&[(1.0, 1.0)]).unwrap();
        assert_eq!(diffusion_constant(&point), 1.0);
    }

    #[test]
    fn finite_law_rejections() {
        assert!(make_finite_law(&[(1.0, 0.5), (1.0, 0.5)]).is_err());
        assert!(make_finite_law(&[]).is_err());
        assert!(make_finite_law(&[(0.0, 1.0)]).is_err());
        assert!(make_finite_law(&[(1.0, -0.5), (2.0, 1.5)]).is_err());
        assert!(make_finite_law(&[(1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(make_finite_law(&[(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn geometric_truncation_point() {
        let law = make_geometric_law(0.5, 1e-12).unwrap();
        // 2^-40 <= 1e-12 < 2^-39
        assert_eq!(law.len(), 40);
        assert_eq!(law.truncated_mass(), 2f64.powi(-40));
        assert_eq!(
            law.atoms()[0],
            Atom {
                rate: 1.0,
                prob: 0.5
            }
        );
        let d_inv: f64 = law.atoms().iter().map(|a| a.prob / a.rate).sum();
        assert!((d_inv - 2f64.ln()).abs() < 1e-10);
        assert!((diffusion_constant(&law) - 1.0 / 2f64.ln()).abs() < 1e-6);
        assert_eq!(make_geometric_law(0.3, 1e-6).unwrap().atoms()[0].prob, 0.3);
        assert!(make_geometric_law(0.0, 1e-12).is_err());
        assert!(make_geometric_law(1.0, 1e-12).is_err());
    }

    #[test]
    fn power_law_basics() {
        assert!(make_power_law(1.0, 1e-12).is_err());
        assert!(make_power_law(0.5, 1e-12).is_err());
        let law = make_power_law(5.0, 1e-12).unwrap();
        assert!(law.truncated_mass() <= 1e-12);
        let first = law.atoms()[0].prob;
        assert!(law.atoms().iter().all(|a| a.prob <= first));
        // A heavy tail at a tiny eps would need ~1e24 atoms.
        assert!(make_power_law(1.5, 1e-12).is_err());
        assert!(make_power_law(1.5, 1e-2).is_ok());
    }

    #[test]
    fn moments() {
        let law = make_geometric_law(0.5, 1e-12).unwrap();
        assert!((moment(&law, 0.0).value + law.truncated_mass() - 1.0).abs() < 1e-12);
        let point = make_finite_law(&[(2.0, 1.0)]).unwrap();
        assert_eq!(inverse_moment(&point, 1.0).value, 0.5);
        let power = make_power_law(5.0, 1e-12).unwrap();
        assert!(moment(&power, 4.0).diverges);
        assert!(!moment(&power, 3.9).diverges);
        assert!(!inverse_moment(&power, 50.0).diverges);
    }

    #[test]
    fn condition_i() {
        assert!(check_condition_i(&two_atom(), 100.0, 100.0).satisfied);
        let geo = make_geometric_law(0.5, 1e-12).unwrap();
        assert!(check_condition_i(&geo, 100.0, 100.0).satisfied);
        let power = make_power_law(5.0, 1e-12).unwrap();
        assert!(!check_condition_i(&power, 1.0, 4.5).satisfied);
        assert!(check_condition_i(&power, 1.0, 3.5).satisfied);
        let report = check_condition_i(&power, 1.0, 3.5);
        assert!(report.quantities.values().all(|v| v.is_finite()));
    }

    #[test]
    fn condition_i_untagged_is_heuristic() {
        let law = make_truncated_law(&[(1.0, 0.5), (2.0, 0.25), (3.0, 0.25)], 0.0).unwrap();
        let report = check_condition_i(&law, 1.0, 1.0);
        assert!(!report.caveat.is_empty());
    }

    fn grid() -> Vec<f64> {
        (1..=40).map(|i| 10f64.powf(-(i as f64) * 0.25)).collect()
    }

    #[test]
    fn condition_ii() {
        let geo = make_geometric_law(0.5, 1e-12).unwrap();
        let report = check_condition_ii(&geo, 0.1, 0.1, &grid()).unwrap();
        assert!(report.satisfied);
        assert!(!report.caveat.is_empty());

        let finite = two_atom();
        let report = check_condition_ii(&finite, 0.5, 0.5, &grid()).unwrap();
        assert!(report.satisfied);
        assert_eq!(report.quantities["A_at_min_eps"], 0.0);

        let point = make_finite_law(&[(3.0, 1.0)]).unwrap();
        let g = grid();
        let report = check_condition_ii(&point, 0.5, 0.3, &g).unwrap();
        assert_relative_eq!(report.quantities["sup_B"], g[0].powf(0.3), epsilon = 1e-15);

        assert!(check_condition_ii(&point, 0.5, 0.3, &[]).is_err());
        assert!(check_condition_ii(&point, 0.5, 0.3, &[0.1, 0.2]).is_err());
        assert!(check_condition_ii(&point, 0.0, 0.3, &g).is_err());
    }

    #[test]
    fn condition_ii_untagged_trend() {
        let pairs: Vec<(f64, f64)> = (1..=5).map(|k| (k as f64, 0.2)).collect();
        let law = make_truncated_law(&pairs, 0.0).unwrap();
        let report = check_condition_ii(&law, 0.5, 0.5, &grid()).unwrap();
        assert!(report.satisfied);
    }

    #[test]
    fn condition_iii() {
        let power = make_power_law(5.0, 1e-12).unwrap();
        let report = check_condition_iii(&power, DEFAULT_FIT_RESIDUAL);
        assert!(report.satisfied);
        assert!((report.quantities["chi_hat"] - 5.0).abs() < 0.05);

        let geo = make_geometric_law(0.5, 1e-12).unwrap();
        let report = check_condition_iii(&geo, DEFAULT_FIT_RESIDUAL);
        assert!(!report.satisfied);
        assert!(report.quantities["fit_residual_rms"] > DEFAULT_FIT_RESIDUAL);

        let pairs: Vec<(f64, f64)> = (1..=5).map(|k| (k as f64, 0.2)).collect();
        let small = make_finite_law(&pairs).unwrap();
        let report = check_condition_iii(&small, DEFAULT_FIT_RESIDUAL);
        assert!(!report.satisfied);
        assert_eq!(report.caveat, "too few atoms");
    }

    #[test]
    fn corollaries() {
        assert!(check_corollary_a(100.0, 100.0, 0.1, 0.1));
        for alpha in [0.5, 1.0, 3.0] {
            assert!(!check_corollary_a(alpha, 1e9, 1e-9, 1e-9));
        }
        assert!(check_corollary_b(100.0, 4.0, 5.0));
        assert!(!check_corollary_b(3.0, 1e9, 1e9));
    }

    #[test]
    fn sampling() {
        let point = make_finite_law(&[(2.5, 1.0)]).unwrap();
        let mut rng = stream(1);
        assert!((0..100).all(|_| sample_rate(&point, &mut rng) == 2.5));

        let geo = make_geometric_law(0.5, 1e-12).unwrap();
        let n = 100_000;
        let mut rng = stream(2);
        let ones = (0..n)
            .filter(|_| sample_rate(&geo, &mut rng) == 1.0)
            .count();
        assert!((ones as f64 / n as f64 - 0.5).abs() <= 0.005);

        let mut a = stream(3);
        let mut b = stream(3);
        let xs: Vec<f64> = (0..50).map(|_| sample_rate(&geo, &mut a)).collect();
        let ys: Vec<f64> = (0..50).map(|_| sample_rate(&geo, &mut b)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn document_round_trip() {
        for law in [
            two_atom(),
            make_finite_law(&[(0.1, 0.3), (1.0 / 3.0, 0.7)]).unwrap(),
            make_geometric_law(0.37, 1e-9).unwrap(),
            make_power_law(4.5, 1e-10).unwrap(),
            make_truncated_law(&[(1.0, 0.6), (2.0, 0.3)], 0.1).unwrap(),
        ] {
            let doc = law.to_document();
            assert_eq!(RateLaw::from_document(&doc).unwrap(), law, "{doc}");
            assert_eq!(law.spec().build().unwrap(), law);
        }
        assert!(RateLaw::from_document("family = \"lognormal\"").is_err());
        assert!(RateLaw::from_document("family = \"geometric\"").is_err());
    }
}
