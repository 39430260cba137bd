//! Box-constrained Hamiltonian Monte Carlo.
//!
//! Positions that leave the box during a leapfrog position update are
//! reflected back at the violated bound and the matching momentum component
//! is negated. The kinetic energy is always `p'p / 2`.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Distance by which a reflected coordinate landing on a bound is moved inward.
pub const BOUNDARY_NUDGE: f64 = 1e-12;

/// A differentiable potential energy `U(q) = -log pi(q) + const`.
pub trait Potential {
    fn dim(&self) -> usize;
    fn energy(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64], grad: &mut [f64]);
}

/// Adapts a pair of closures into a [`Potential`].
pub struct FnPotential<E, G> {
    dim: usize,
    energy: E,
    gradient: G,
}

impl<E, G> FnPotential<E, G>
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(dim: usize, energy: E, gradient: G) -> Self {
        Self {
            dim,
            energy,
            gradient,
        }
    }
}

impl<E, G> Potential for FnPotential<E, G>
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn energy(&self, q: &[f64]) -> f64 {
        (self.energy)(q)
    }

    fn gradient(&self, q: &[f64], grad: &mut [f64]) {
        (self.gradient)(q, grad)
    }
}

/// Scalar bounds shared by every coordinate of a sampled block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    lower: f64,
    upper: f64,
}

impl BoxBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Config(format!(
                "invalid box [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit() -> Self {
        Self {
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Strict interior test.
    pub fn contains(&self, q: f64) -> bool {
        q > self.lower && q < self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChmcConfig {
    pub epsilon: f64,
    pub nlf_min: usize,
    pub nlf_max: usize,
    pub bounds: BoxBounds,
    pub adapt_window: usize,
    pub adapt_low: f64,
    pub adapt_high: f64,
    pub adapt_factor: f64,
}

impl ChmcConfig {
    /// Defaults for the latent-coefficient block.
    pub fn latent_default() -> Self {
        Self {
            epsilon: 0.01,
            ..Self::base()
        }
    }

    /// Defaults for the endmember-row block.
    pub fn endmember_default() -> Self {
        Self {
            epsilon: 0.005,
            ..Self::base()
        }
    }

    fn base() -> Self {
        Self {
            epsilon: 0.01,
            nlf_min: 45,
            nlf_max: 55,
            bounds: BoxBounds::unit(),
            adapt_window: 50,
            adapt_low: 0.5,
            adapt_high: 0.8,
            adapt_factor: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("step size {} must be positive", self.epsilon)));
        }
        if self.nlf_min < 1 || self.nlf_min > self.nlf_max {
            return Err(Error::Config(format!(
                "leapfrog range [{}, {}] is empty or starts at zero",
                self.nlf_min, self.nlf_max
            )));
        }
        if self.adapt_window < 1 {
            return Err(Error::Config("adaptation window must be at least 1".into()));
        }
        if !(0.0 < self.adapt_low && self.adapt_low < self.adapt_high && self.adapt_high < 1.0) {
            return Err(Error::Config(format!(
                "adaptation thresholds need 0 < {} < {} < 1",
                self.adapt_low, self.adapt_high
            )));
        }
        if !(self.adapt_factor > 0.0 && self.adapt_factor < 1.0) {
            return Err(Error::Config(format!(
                "adaptation factor {} outside (0, 1)",
                self.adapt_factor
            )));
        }
        BoxBounds::new(self.bounds.lower, self.bounds.upper)?;
        Ok(())
    }
}

/// Folds `q` back into `[lower, upper]` by repeated mirror reflections,
/// negating `p` once per reflection.
///
/// Closed form: the trajectory is periodic with period `2 (upper - lower)`.
/// A result sitting exactly on a bound is nudged inward by [`BOUNDARY_NUDGE`].
pub fn reflect_into_box(q: f64, p: f64, bounds: BoxBounds) -> (f64, f64) {
    let (lo, hi) = (bounds.lower, bounds.upper);
    if !q.is_finite() {
        return (q, p);
    }
    let (mut q_new, p_new) = if q >= lo && q <= hi {
        (q, p)
    } else {
        let width = hi - lo;
        let reflections = if q < lo {
            ((lo - q) / width).ceil()
        } else {
            ((q - hi) / width).ceil()
        };
        let t = (q - lo).rem_euclid(2.0 * width);
        let folded = if t <= width { lo + t } else { lo + 2.0 * width - t };
        let sign = if reflections % 2.0 == 0.0 { 1.0 } else { -1.0 };
        (folded.clamp(lo, hi), sign * p)
    };
    if q_new <= lo {
        q_new = lo + BOUNDARY_NUDGE;
    } else if q_new >= hi {
        q_new = hi - BOUNDARY_NUDGE;
    }
    (q_new, p_new)
}

/// A leapfrog trajectory produced a non-finite position, momentum or energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diverged;

/// Runs `n_steps` reflective leapfrog steps in place.
pub fn constrained_leapfrog<P: Potential + ?Sized>(
    q: &mut [f64],
    p: &mut [f64],
    epsilon: f64,
    n_steps: usize,
    target: &P,
    bounds: BoxBounds,
) -> std::result::Result<(), Diverged> {
    let mut grad = vec![0.0; q.len()];
    target.gradient(q, &mut grad);
    for _ in 0..n_steps {
        for (pd, gd) in p.iter_mut().zip(&grad) {
            *pd -= 0.5 * epsilon * gd;
        }
        for (qd, pd) in q.iter_mut().zip(p.iter_mut()) {
            let (qn, pn) = reflect_into_box(*qd + epsilon * *pd, *pd, bounds);
            *qd = qn;
            *pd = pn;
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Diverged);
        }
        target.gradient(q, &mut grad);
        for (pd, gd) in p.iter_mut().zip(&grad) {
            *pd -= 0.5 * epsilon * gd;
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Diverged);
        }
    }
    Ok(())
}

pub fn kinetic_energy(p: &[f64]) -> f64 {
    0.5 * p.iter().map(|v| v * v).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepOutcome {
    pub accepted: bool,
    pub diverged: bool,
}

/// One CHMC transition. `q` is replaced by the next state of the chain.
///
/// The leapfrog count is drawn uniformly on `[nlf_min, nlf_max]`; the step
/// size is `cfg.epsilon`. A diverged trajectory counts as a rejection.
pub fn chmc_step<P: Potential + ?Sized, R: Rng + ?Sized>(
    q: &mut [f64],
    target: &P,
    cfg: &ChmcConfig,
    rng: &mut R,
) -> StepOutcome {
    let dim = q.len();
    let p0: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n_steps = rng.random_range(cfg.nlf_min..=cfg.nlf_max);
    let u: f64 = rng.random();

    let h0 = target.energy(q) + kinetic_energy(&p0);
    let mut q_star = q.to_vec();
    let mut p_star = p0;
    if constrained_leapfrog(&mut q_star, &mut p_star, cfg.epsilon, n_steps, target, cfg.bounds)
        .is_err()
    {
        return StepOutcome {
            accepted: false,
            diverged: true,
        };
    }
    let h_star = target.energy(&q_star) + kinetic_energy(&p_star);
    if !h_star.is_finite() || !h0.is_finite() {
        return StepOutcome {
            accepted: false,
            diverged: true,
        };
    }
    let accepted = u.ln() < h0 - h_star;
    if accepted {
        q.copy_from_slice(&q_star);
    }
    StepOutcome {
        accepted,
        diverged: false,
    }
}

/// A step-size change made during burn-in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptEvent {
    pub iteration: usize,
    pub rate: f64,
    pub old_epsilon: f64,
    pub new_epsilon: f64,
}

/// Burn-in step-size tuning over non-overlapping windows of acceptance rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChmcAdaptState {
    epsilon: f64,
    recent: VecDeque<f64>,
    window: usize,
    in_burn_in: bool,
    iteration: usize,
    events: Vec<AdaptEvent>,
}

impl ChmcAdaptState {
    pub fn new(cfg: &ChmcConfig) -> Self {
        Self {
            epsilon: cfg.epsilon,
            recent: VecDeque::with_capacity(cfg.adapt_window),
            window: cfg.adapt_window,
            in_burn_in: true,
            iteration: 0,
            events: Vec::new(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn in_burn_in(&self) -> bool {
        self.in_burn_in
    }

    /// Freezes the step size for the rest of the run.
    pub fn end_burn_in(&mut self) {
        self.in_burn_in = false;
        self.recent.clear();
    }

    pub fn events(&self) -> &[AdaptEvent] {
        &self.events
    }

    pub fn buffered(&self) -> usize {
        self.recent.len()
    }

    /// Records one accept flag and adapts.
    pub fn record_accept(&mut self, accepted: bool, cfg: &ChmcConfig) -> Option<AdaptEvent> {
        self.record_rate(if accepted { 1.0 } else { 0.0 }, cfg)
    }

    /// Records the acceptance rate of one iteration (averaged over the
    /// sub-chains of a block) and adapts.
    pub fn record_rate(&mut self, rate: f64, cfg: &ChmcConfig) -> Option<AdaptEvent> {
        self.iteration += 1;
        if !self.in_burn_in {
            return None;
        }
        self.recent.push_back(rate);
        adapt_stepsize(self, cfg)
    }

    /// Configuration for the next transition with the current step size.
    pub fn config(&self, base: &ChmcConfig) -> ChmcConfig {
        ChmcConfig {
            epsilon: self.epsilon,
            ..*base
        }
    }
}

/// Applies the window rule: once the window is full, a mean rate below
/// `adapt_low` shrinks the step by `adapt_factor`, above `adapt_high`
/// grows it by the same factor. The window is then cleared. No-op after
/// burn-in.
pub fn adapt_stepsize(state: &mut ChmcAdaptState, cfg: &ChmcConfig) -> Option<AdaptEvent> {
    if !state.in_burn_in || state.recent.len() < state.window {
        return None;
    }
    let rate = state.recent.iter().sum::<f64>() / state.recent.len() as f64;
    state.recent.clear();
    let old = state.epsilon;
    let new = if rate < cfg.adapt_low {
        old * (1.0 - cfg.adapt_factor)
    } else if rate > cfg.adapt_high {
        old * (1.0 + cfg.adapt_factor)
    } else {
        return None;
    };
    state.epsilon = new;
    let event = AdaptEvent {
        iteration: state.iteration,
        rate,
        old_epsilon: old,
        new_epsilon: new,
    };
    state.events.push(event);
    Some(event)
}
