//! Exact simulation of the class-aggregated Moran jump process.
//!
//! Individuals inside a class are exchangeable, so the chain only tracks
//! the number `x_k` of type-1 individuals in each class. In scaled time
//! `t = tau / N` the type-changing events fire at
//!
//! ```text
//! lambda(k, -) = r_k x_k (N - X)          (a type-1 individual copies a type 0)
//! lambda(k, +) = r_k (n_k - x_k) X        (a type-0 individual copies a type 1)
//! ```
//!
//! with `X = sum_k x_k`. Writing `A = sum r_k x_k` and `B = sum r_k (n_k - x_k)`,
//! the total rate is `A (N - X) + B X`. Self-choices and same-type choices
//! leave the state unchanged and are not simulated.
//!
//! Each step draws an exponential waiting time, a direction, and then a
//! class from one of two Fenwick trees (leaf weights `r_k x_k` and
//! `r_k (n_k - x_k)`), so an event costs `O(log K)`.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::Open01;

use crate::disorder::Environment;
use crate::fenwick::WeightTree;
use crate::observables;
use crate::{Error, Result};

/// Events between exact recomputations of the cached weighted sums.
pub const REFRESH_INTERVAL: u64 = 1 << 20;

/// How the initial type-1 counts are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitRule {
    /// `x_k = round_half_up(f_k n_k)`, one fraction per class.
    Fractions(Vec<f64>),
    /// [`InitRule::Fractions`] with the same fraction in every class.
    SameFraction(f64),
    /// The listed classes are entirely type 1, all others type 0.
    WholeClasses(Vec<usize>),
    /// Every individual is type 1 independently with this probability.
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// A type-1 individual becomes type 0.
    Down,
    /// A type-0 individual becomes type 1.
    Up,
}

impl Direction {
    pub fn sign(self) -> i8 {
        match self {
            Direction::Down => -1,
            Direction::Up => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub class: usize,
    pub direction: Direction,
    /// Waiting time in scaled units.
    pub wait: f64,
}

#[derive(Debug, Clone)]
pub struct PopulationState {
    counts: Vec<u64>,
    type_one: u64,
    weight_one: f64,
    weight_zero: f64,
    tree_one: WeightTree,
    tree_zero: WeightTree,
    events_since_refresh: u64,
}

impl PopulationState {
    pub fn from_counts(env: &Environment, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != env.num_classes() {
            return Err(Error::InvalidInit(format!(
                "{} counts for {} classes",
                counts.len(),
                env.num_classes()
            )));
        }
        for (k, (x, c)) in counts.iter().zip(env.classes()).enumerate() {
            if *x > c.count {
                return Err(Error::InvalidInit(format!(
                    "class {k}: {x} type-1 individuals out of {}",
                    c.count
                )));
            }
        }
        let (ones, zeros) = leaf_weights(env, &counts);
        let mut state = Self {
            type_one: counts.iter().sum(),
            counts,
            weight_one: 0.0,
            weight_zero: 0.0,
            tree_one: WeightTree::new(&ones),
            tree_zero: WeightTree::new(&zeros),
            events_since_refresh: 0,
        };
        state.refresh(env);
        Ok(state)
    }

    /// Type-1 counts `x_k` per class.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `X = sum_k x_k`.
    pub fn type_one(&self) -> u64 {
        self.type_one
    }

    /// Cached `A = sum r_k x_k`.
    pub fn weight_one(&self) -> f64 {
        self.weight_one
    }

    /// Cached `B = sum r_k (n_k - x_k)`.
    pub fn weight_zero(&self) -> f64 {
        self.weight_zero
    }

    pub fn tree_totals(&self) -> (f64, f64) {
        (self.tree_one.total(), self.tree_zero.total())
    }

    pub fn is_absorbed(&self, env: &Environment) -> bool {
        self.type_one == 0 || self.type_one == env.n()
    }

    /// `y_k = x_k / N`.
    pub fn fractions(&self, env: &Environment) -> Vec<f64> {
        let n = env.n() as f64;
        self.counts.iter().map(|&x| x as f64 / n).collect()
    }

    /// `A` and `B` recomputed from the integer counts.
    pub fn exact_weights(&self, env: &Environment) -> (f64, f64) {
        let (ones, zeros) = leaf_weights(env, &self.counts);
        (ones.iter().sum(), zeros.iter().sum())
    }

    fn refresh(&mut self, env: &Environment) {
        let (a, b) = self.exact_weights(env);
        self.weight_one = a;
        self.weight_zero = b;
        self.tree_one.rebuild();
        self.tree_zero.rebuild();
        self.events_since_refresh = 0;
    }

    fn apply(&mut self, env: &Environment, event: &SimEvent) {
        let k = event.class;
        let class = env.classes()[k];
        match event.direction {
            Direction::Down => {
                self.counts[k] -= 1;
                self.type_one -= 1;
                self.weight_one -= class.rate;
                self.weight_zero += class.rate;
            }
            Direction::Up => {
                self.counts[k] += 1;
                self.type_one += 1;
                self.weight_one += class.rate;
                self.weight_zero -= class.rate;
            }
        }
        let x = self.counts[k];
        self.tree_one.set(k, class.rate * x as f64);
        self.tree_zero.set(k, class.rate * (class.count - x) as f64);
        self.events_since_refresh += 1;
        if self.events_since_refresh >= REFRESH_INTERVAL {
            self.refresh(env);
        }
    }
}

fn leaf_weights(env: &Environment, counts: &[u64]) -> (Vec<f64>, Vec<f64>) {
    env.classes()
        .iter()
        .zip(counts)
        .map(|(c, &x)| (c.rate * x as f64, c.rate * (c.count - x) as f64))
        .unzip()
}

pub fn init_state<R: Rng + ?Sized>(
    env: &Environment,
    rule: &InitRule,
    rng: &mut R,
) -> Result<PopulationState> {
    let check_fraction = |f: f64| {
        if (0.0..=1.0).contains(&f) {
            Ok(f)
        } else {
            Err(Error::InvalidInit(format!("fraction {f} outside [0, 1]")))
        }
    };
    let round_half_up = |f: f64, n: u64| ((f * n as f64 + 0.5).floor() as u64).min(n);
    let counts = match rule {
        InitRule::Fractions(fs) => {
            if fs.len() != env.num_classes() {
                return Err(Error::InvalidInit(format!(
                    "{} fractions for {} classes",
                    fs.len(),
                    env.num_classes()
                )));
            }
            fs.iter()
                .zip(env.classes())
                .map(|(&f, c)| check_fraction(f).map(|f| round_half_up(f, c.count)))
                .collect::<Result<Vec<_>>>()?
        }
        InitRule::SameFraction(f) => {
            let f = check_fraction(*f)?;
            env.classes()
                .iter()
                .map(|c| round_half_up(f, c.count))
                .collect()
        }
        InitRule::WholeClasses(which) => {
            let mut counts = vec![0; env.num_classes()];
            for &k in which {
                let c = env.classes().get(k).ok_or_else(|| {
                    Error::InvalidInit(format!(
                        "class index {k} out of range ({} classes)",
                        env.num_classes()
                    ))
                })?;
                counts[k] = c.count;
            }
            counts
        }
        InitRule::Uniform(s0) => {
            let s0 = check_fraction(*s0)?;
            env.classes()
                .iter()
                .map(|c| (0..c.count).filter(|_| rng.random::<f64>() < s0).count() as u64)
                .collect()
        }
    };
    PopulationState::from_counts(env, counts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRates {
    /// `A (N - X)`, total rate of `Down` events.
    pub down: f64,
    /// `B X`, total rate of `Up` events.
    pub up: f64,
}

impl EventRates {
    pub fn total(&self) -> f64 {
        self.down + self.up
    }
}

pub fn event_rates(state: &PopulationState, env: &Environment) -> EventRates {
    let ones = state.type_one as f64;
    let zeros = (env.n() - state.type_one) as f64;
    EventRates {
        down: state.weight_one * zeros,
        up: state.weight_zero * ones,
    }
}

/// Rate of a single `(class, direction)` event, from the integer counts.
pub fn class_rate(state: &PopulationState, env: &Environment, k: usize, dir: Direction) -> f64 {
    let c = env.classes()[k];
    let x = state.counts[k];
    match dir {
        Direction::Down => c.rate * x as f64 * (env.n() - state.type_one) as f64,
        Direction::Up => c.rate * (c.count - x) as f64 * state.type_one as f64,
    }
}

/// Draws the next event without applying it.
pub fn sample_event<R: Rng + ?Sized>(
    state: &PopulationState,
    env: &Environment,
    rng: &mut R,
) -> Result<SimEvent> {
    let rates = event_rates(state, env);
    let total = rates.total();
    if state.is_absorbed(env) || !(total > 0.0) {
        return Err(Error::Absorbed);
    }
    let u: f64 = rng.sample(Open01);
    let wait = -u.ln() / total;
    let (direction, class) = if rng.random::<f64>() * total < rates.down {
        let k = state.tree_one.find(rng.random::<f64>() * state.weight_one);
        (Direction::Down, k)
    } else {
        let k = state
            .tree_zero
            .find(rng.random::<f64>() * state.weight_zero);
        (Direction::Up, k)
    };
    Ok(SimEvent {
        class,
        direction,
        wait,
    })
}

/// Draws and applies one event.
pub fn step<R: Rng + ?Sized>(
    state: &mut PopulationState,
    env: &Environment,
    rng: &mut R,
) -> Result<SimEvent> {
    let event = sample_event(state, env, rng)?;
    state.apply(env, &event);
    Ok(event)
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if !(grid[0] >= 0.0) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid(
            "grid must be finite and start at t >= 0".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Runs the chain from `state`, calling `observe(index, t, state)` at each
/// grid time with the state in force at that time. After absorption the
/// remaining grid times see the absorbed state.
///
/// Returns the absorption time, if absorption happened before the last grid
/// time.
pub fn simulate_observed<R, F>(
    env: &Environment,
    state: &mut PopulationState,
    grid: &[f64],
    rng: &mut R,
    mut observe: F,
) -> Result<Option<f64>>
where
    R: Rng + ?Sized,
    F: FnMut(usize, f64, &PopulationState),
{
    validate_grid(grid)?;
    let mut t = 0.0;
    let mut next = 0;
    let mut absorbed_at = None;
    while next < grid.len() {
        if state.is_absorbed(env) {
            absorbed_at.get_or_insert(t);
            for (i, &tg) in grid.iter().enumerate().skip(next) {
                observe(i, tg, state);
            }
            break;
        }
        let event = sample_event(state, env, rng)?;
        let t_event = t + event.wait;
        while next < grid.len() && grid[next] < t_event {
            observe(next, grid[next], state);
            next += 1;
        }
        if next == grid.len() {
            break;
        }
        state.apply(env, &event);
        t = t_event;
    }
    Ok(absorbed_at)
}

/// Observables recorded at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub s: f64,
    pub s_check: f64,
    pub h: f64,
    pub dist2_p: f64,
    pub absorbed: bool,
}

pub fn observe(state: &PopulationState, env: &Environment) -> Observation {
    let y = state.fractions(env);
    let s = state.type_one as f64 / env.n() as f64;
    let s_check = env.d_n() * y.iter().zip(env.rates()).map(|(yk, r)| yk / r).sum::<f64>();
    Observation {
        s,
        s_check,
        h: observables::lyapunov_h(&y, env),
        dist2_p: observables::dist2_p(&y, env),
        absorbed: state.is_absorbed(env),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub s_check: Vec<f64>,
    pub h: Vec<f64>,
    pub dist2_p: Vec<f64>,
    pub absorbed: Vec<bool>,
    pub absorption_time: Option<f64>,
    /// Per grid time, the full `x_k` vector.
    pub snapshots: Option<Vec<Vec<u64>>>,
}

impl PathRecord {
    fn with_capacity(n: usize, snapshots: bool) -> Self {
        Self {
            times: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            s_check: Vec::with_capacity(n),
            h: Vec::with_capacity(n),
            dist2_p: Vec::with_capacity(n),
            absorbed: Vec::with_capacity(n),
            absorption_time: None,
            snapshots: snapshots.then(|| Vec::with_capacity(n)),
        }
    }

    fn push(&mut self, t: f64, obs: Observation) {
        self.times.push(t);
        self.s.push(obs.s);
        self.s_check.push(obs.s_check);
        self.h.push(obs.h);
        self.dist2_p.push(obs.dist2_p);
        self.absorbed.push(obs.absorbed);
    }

    /// `t,S,S_check,h,dist2_P,absorbed`
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,S,S_check,h,dist2_P,absorbed")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                self.times[i],
                self.s[i],
                self.s_check[i],
                self.h[i],
                self.dist2_p[i],
                u8::from(self.absorbed[i])
            )?;
        }
        Ok(())
    }

    /// `t,k,x_k`; writes only the header when snapshots were not recorded.
    pub fn write_snapshot_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,k,x_k")?;
        if let Some(snaps) = &self.snapshots {
            for (t, xs) in self.times.iter().zip(snaps) {
                for (k, x) in xs.iter().enumerate() {
                    writeln!(out, "{t:.16e},{k},{x}")?;
                }
            }
        }
        Ok(())
    }
}

pub fn simulate_path<R: Rng + ?Sized>(
    env: &Environment,
    rule: &InitRule,
    grid: &[f64],
    rng: &mut R,
    record_snapshots: bool,
) -> Result<PathRecord> {
    validate_grid(grid)?;
    let mut state = init_state(env, rule, rng)?;
    let mut record = PathRecord::with_capacity(grid.len(), record_snapshots);
    let absorbed_at = simulate_observed(env, &mut state, grid, rng, |_, t, st| {
        record.push(t, observe(st, env));
        if let Some(snaps) = record.snapshots.as_mut() {
            snaps.push(st.counts().to_vec());
        }
    })?;
    record.absorption_time = absorbed_at;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    FixedOne,
    FixedZero,
    Timeout,
}

/// Simulates until absorption or until scaled time exceeds `t_max`.
pub fn run_to_absorption<R: Rng + ?Sized>(
    env: &Environment,
    rule: &InitRule,
    rng: &mut R,
    t_max: f64,
) -> Result<(Outcome, f64)> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_max = {t_max} must be positive"
        )));
    }
    let mut state = init_state(env, rule, rng)?;
    let mut t = 0.0;
    loop {
        if state.type_one == 0 {
            return Ok((Outcome::FixedZero, t));
        }
        if state.type_one == env.n() {
            return Ok((Outcome::FixedOne, t));
        }
        let event = sample_event(&state, env, rng)?;
        if t + event.wait > t_max {
            return Ok((Outcome::Timeout, t_max));
        }
        t += event.wait;
        state.apply(env, &event);
    }
}
