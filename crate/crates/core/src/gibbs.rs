//! CHMC-within-Gibbs sampler over the full hierarchical model.
//!
//! One iteration updates, in order: latent coefficients (CHMC per pixel),
//! endmember rows (CHMC per band), nonlinearity coefficients
//! (Bernoulli-Gaussian per pixel), noise variances (inverse gamma per band),
//! the nonlinearity variance (inverse gamma) and the nonlinearity weight (beta).
//! Per-pixel and per-band work inside a block is independent and runs under
//! the configured [`Exec`] policy with per-index RNG streams.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};

use crate::chmc::{chmc_step, AdaptEvent, ChmcAdaptState, ChmcConfig, StepOutcome};
use crate::error::{Error, Result};
use crate::init::init_endmember_prior;
use crate::model::{
    column, dot, forward_raw, latent_to_abundances, mat_vec, neg_log_likelihood,
    stick_breaking_inverse, AbundanceMatrix, EndmemberMatrix, LatentCoefficients, ModelState,
    NoiseVariances, NonlinearityVector, PixelPotential, RowPotential, SpectralImage,
};
use crate::par::{self, Exec};
use crate::rng::{stream, Block};

/// Floor added to the scale of the noise-variance conditional.
pub const SCALE_FLOOR: f64 = 1e-12;

/// Floor on the initial noise variances.
pub const INIT_VARIANCE_FLOOR: f64 = 1e-8;

/// Margin keeping initial endmember entries inside the open unit box.
const INIT_MARGIN: f64 = 1e-9;

/// Smallest initial abundance.
pub const INIT_ABUNDANCE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    /// Variance of the truncated Gaussian endmember prior.
    pub s2: f64,
    /// Inverse-gamma shape of the nonlinearity variance prior.
    pub gamma: f64,
    /// Inverse-gamma scale of the nonlinearity variance prior.
    pub nu: f64,
    /// Endmember prior means; estimated from the data when absent.
    pub mbar: Option<EndmemberMatrix>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            s2: 50.0,
            gamma: 0.1,
            nu: 0.1,
            mbar: None,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s2 > 0.0) {
            return Err(Error::Config(format!("prior variance s2 = {} must be positive", self.s2)));
        }
        if !(self.gamma > 0.0 && self.nu > 0.0) {
            return Err(Error::Config(format!(
                "inverse-gamma hyperparameters ({}, {}) must be positive",
                self.gamma, self.nu
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub n_mc: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub seed: u64,
    pub chmc_z: ChmcConfig,
    pub chmc_m: ChmcConfig,
    pub priors: PriorConfig,
    /// CHMC transitions per block per Gibbs iteration.
    pub inner_steps: usize,
    pub exec: Exec,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_mc: 5000,
            n_burn: 2000,
            thin: 5,
            seed: 0,
            chmc_z: ChmcConfig::latent_default(),
            chmc_m: ChmcConfig::endmember_default(),
            priors: PriorConfig::default(),
            inner_steps: 1,
            exec: Exec::Parallel,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_burn >= self.n_mc {
            return Err(Error::Config(format!(
                "burn-in {} must be shorter than the chain length {}",
                self.n_burn, self.n_mc
            )));
        }
        if self.thin < 1 {
            return Err(Error::Config("thinning stride must be at least 1".into()));
        }
        if self.inner_steps < 1 {
            return Err(Error::Config("inner_steps must be at least 1".into()));
        }
        self.chmc_z.validate()?;
        self.chmc_m.validate()?;
        self.priors.validate()
    }
}

/// Where a block update sits in the run: keys the RNG streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepContext {
    pub seed: u64,
    pub iteration: u64,
    pub exec: Exec,
}

/// Outcome of the CHMC sub-chains of one block update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockStats {
    pub outcomes: Vec<StepOutcome>,
}

impl BlockStats {
    pub fn accept_rate(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().filter(|o| o.accepted).count() as f64 / self.outcomes.len() as f64
    }

    pub fn divergences(&self) -> usize {
        self.outcomes.iter().filter(|o| o.diverged).count()
    }
}

fn check_shapes(state: &ModelState, y: &SpectralImage) -> Result<()> {
    if state.n_bands() != y.n_bands() || state.n_pixels() != y.n_pixels() {
        return Err(Error::Dimension(format!(
            "state of {} bands x {} pixels for an image of {} x {}",
            state.n_bands(),
            state.n_pixels(),
            y.n_bands(),
            y.n_pixels()
        )));
    }
    Ok(())
}

/// Latent-coefficient block: one CHMC transition (or `inner_steps`) per
/// pixel, all pixels independent given the other parameters.
pub fn sample_z(
    state: &mut ModelState,
    y: &SpectralImage,
    cfg: &ChmcConfig,
    inner_steps: usize,
    ctx: StepContext,
) -> Result<BlockStats> {
    check_shapes(state, y)?;
    let inv = state.sigma2.inverse();
    let m = state.m.data();
    let b = state.b.as_slice();
    let z = state.z.data();
    let results = par::map_indexed(ctx.exec, y.n_pixels(), |n| {
        let mut rng = stream(ctx.seed, ctx.iteration, Block::Latent, n as u64);
        let target = PixelPotential::new(y.pixel(n), m, b[n], &inv);
        let mut q = column(z, n).to_vec();
        let mut last = StepOutcome::default();
        let mut any_accept = false;
        for _ in 0..inner_steps {
            last = chmc_step(&mut q, &target, cfg, &mut rng);
            any_accept |= last.accepted;
        }
        last.accepted = any_accept;
        (q, last)
    });
    let zm = state.z.raw_mut();
    let r1 = zm.nrows();
    let mut outcomes = Vec::with_capacity(results.len());
    for (n, (q, o)) in results.into_iter().enumerate() {
        zm.as_mut_slice()[n * r1..(n + 1) * r1].copy_from_slice(&q);
        outcomes.push(o);
    }
    Ok(BlockStats { outcomes })
}

/// Endmember block: one CHMC transition per band row, rows independent
/// given the abundances, nonlinearities and noise variances.
pub fn sample_m(
    state: &mut ModelState,
    y: &SpectralImage,
    priors: &PriorConfig,
    mbar: &EndmemberMatrix,
    cfg: &ChmcConfig,
    inner_steps: usize,
    ctx: StepContext,
) -> Result<BlockStats> {
    check_shapes(state, y)?;
    if mbar.data().shape() != state.m.data().shape() {
        return Err(Error::Dimension("prior means do not match the endmember matrix".into()));
    }
    let a = latent_to_abundances(state.z.data());
    let yt = y.data().transpose();
    let b = state.b.as_slice();
    let sigma2 = state.sigma2.as_slice();
    let inv_s2 = 1.0 / priors.s2;
    let m = state.m.data();
    let mb = mbar.data();
    let results = par::map_indexed(ctx.exec, y.n_bands(), |l| {
        let mut rng = stream(ctx.seed, ctx.iteration, Block::Endmember, l as u64);
        let bar: Vec<f64> = mb.row(l).iter().copied().collect();
        let target = RowPotential::new(column(&yt, l), &a, b, 1.0 / sigma2[l], inv_s2, &bar);
        let mut q: Vec<f64> = m.row(l).iter().copied().collect();
        let mut last = StepOutcome::default();
        let mut any_accept = false;
        for _ in 0..inner_steps {
            last = chmc_step(&mut q, &target, cfg, &mut rng);
            any_accept |= last.accepted;
        }
        last.accepted = any_accept;
        (q, last)
    });
    let mm = state.m.raw_mut();
    let mut outcomes = Vec::with_capacity(results.len());
    for (l, (q, o)) in results.into_iter().enumerate() {
        for (r, v) in q.into_iter().enumerate() {
            mm[(l, r)] = v;
        }
        outcomes.push(o);
    }
    Ok(BlockStats { outcomes })
}

/// Bernoulli-Gaussian conditional of one nonlinearity coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeSlabPosterior {
    /// Posterior probability of the slab (nonzero coefficient).
    pub w_star: f64,
    pub mu: f64,
    pub s2: f64,
}

/// Conditional law of `b_n` given the linear mixture `s = M a_n`.
pub fn nonlinearity_posterior(
    y: &[f64],
    s: &[f64],
    inv_sigma2: &[f64],
    sigma_b2: f64,
    w: f64,
) -> SpikeSlabPosterior {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((yv, sv), iv) in y.iter().zip(s).zip(inv_sigma2) {
        let h = sv * sv;
        num += (yv - sv) * h * iv;
        den += h * h * iv;
    }
    // precision form of sigma_b2 num / (sigma_b2 den + 1) and sigma_b2 / (sigma_b2 den + 1)
    let prec = den + 1.0 / sigma_b2;
    let mu = num / prec;
    let s2 = 1.0 / prec;
    let w_star = if w <= 0.0 {
        0.0
    } else if w >= 1.0 {
        1.0
    } else {
        let log_beta = 0.5 * (sigma_b2.ln() - s2.ln()) - mu * mu / (2.0 * s2);
        let log_odds_spike = (1.0 - w).ln() - w.ln() + log_beta;
        1.0 / (1.0 + log_odds_spike.exp())
    };
    SpikeSlabPosterior { w_star, mu, s2 }
}

impl SpikeSlabPosterior {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < self.w_star {
            Normal::new(self.mu, self.s2.sqrt())
                .expect("finite slab parameters")
                .sample(rng)
        } else {
            0.0
        }
    }
}

/// Nonlinearity block: independent spike-and-slab draws per pixel.
pub fn sample_b(state: &mut ModelState, y: &SpectralImage, ctx: StepContext) -> Result<()> {
    check_shapes(state, y)?;
    if !(state.sigma_b2 > 0.0) {
        return Err(Error::Domain(format!(
            "nonlinearity variance {} is not positive",
            state.sigma_b2
        )));
    }
    let inv = state.sigma2.inverse();
    let a = latent_to_abundances(state.z.data());
    let m = state.m.data();
    let (sigma_b2, w) = (state.sigma_b2, state.w);
    let draws = par::map_indexed(ctx.exec, y.n_pixels(), |n| {
        let mut rng = stream(ctx.seed, ctx.iteration, Block::Nonlinearity, n as u64);
        let mut s = vec![0.0; m.nrows()];
        mat_vec(m, column(&a, n), &mut s);
        nonlinearity_posterior(y.pixel(n), &s, &inv, sigma_b2, w).sample(&mut rng)
    });
    state.b.raw_mut().copy_from_slice(&draws);
    Ok(())
}

/// Draws from `IG(shape, scale)` as `scale / Gamma(shape, 1)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    scale / g
}

/// Noise-variance block: `s2_l ~ IG(N/2, |y_l - x_l|^2 / 2 + floor)` per band.
pub fn sample_sigma2(state: &mut ModelState, y: &SpectralImage, ctx: StepContext) -> Result<()> {
    check_shapes(state, y)?;
    let a = latent_to_abundances(state.z.data());
    let x = forward_raw(state.m.data(), &a, state.b.as_slice());
    let resid = y.data() - x;
    let rt = resid.transpose();
    let shape = y.n_pixels() as f64 / 2.0;
    let draws = par::map_indexed(ctx.exec, y.n_bands(), |l| {
        let mut rng = stream(ctx.seed, ctx.iteration, Block::NoiseVariance, l as u64);
        let r = column(&rt, l);
        let scale = 0.5 * dot(r, r) + SCALE_FLOOR;
        sample_inverse_gamma(shape, scale, &mut rng)
    });
    state.sigma2.raw_mut().copy_from_slice(&draws);
    Ok(())
}

/// `s_b^2 ~ IG(k/2 + gamma, sum_{b_n != 0} b_n^2 / 2 + nu)` with `k` the
/// number of nonzero coefficients.
pub fn sample_sigma_b2(state: &mut ModelState, priors: &PriorConfig, ctx: StepContext) -> Result<()> {
    priors.validate()?;
    let b = state.b.as_slice();
    let k = state.b.count_nonzero() as f64;
    let ss: f64 = b.iter().filter(|v| **v != 0.0).map(|v| v * v).sum();
    let mut rng = stream(ctx.seed, ctx.iteration, Block::NonlinearityVariance, 0);
    state.sigma_b2 = sample_inverse_gamma(0.5 * k + priors.gamma, 0.5 * ss + priors.nu, &mut rng);
    Ok(())
}

/// `w ~ Beta(k + 1, N - k + 1)` with `k` the number of nonzero coefficients.
pub fn sample_w(state: &mut ModelState, ctx: StepContext) -> Result<()> {
    let k = state.b.count_nonzero() as f64;
    let n = state.b.len() as f64;
    let mut rng = stream(ctx.seed, ctx.iteration, Block::Weight, 0);
    state.w = Beta::new(k + 1.0, n - k + 1.0)
        .map_err(|e| Error::Numerical(e.to_string()))?
        .sample(&mut rng);
    Ok(())
}

/// Stored output of a sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub samples: Vec<ModelState>,
    pub kept_iterations: Vec<usize>,
    /// Negative log-likelihood of each kept sample.
    pub neg_log_lik: Vec<f64>,
    pub n_burn: usize,
    /// Per-iteration block acceptance rates.
    pub accept_z: Vec<f64>,
    pub accept_m: Vec<f64>,
    pub divergences_z: Vec<usize>,
    pub divergences_m: Vec<usize>,
    /// Step size used at each iteration.
    pub epsilon_z: Vec<f64>,
    pub epsilon_m: Vec<f64>,
    pub adapt_events_z: Vec<AdaptEvent>,
    pub adapt_events_m: Vec<AdaptEvent>,
    /// Prior means the run used.
    pub mbar: EndmemberMatrix,
}

impl Chain {
    pub const TRACE_NAMES: [&'static str; 5] = [
        "sigma_b2",
        "w",
        "mean_sigma2",
        "nonzero_fraction",
        "neg_log_lik",
    ];

    /// `kept x 5` matrix of scalar summaries, columns as in [`Chain::TRACE_NAMES`].
    pub fn scalar_trace(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.samples.len(), Self::TRACE_NAMES.len(), |i, c| {
            let s = &self.samples[i];
            match c {
                0 => s.sigma_b2,
                1 => s.w,
                2 => s.sigma2.data().mean(),
                3 => s.b.count_nonzero() as f64 / s.b.len() as f64,
                _ => self.neg_log_lik[i],
            }
        })
    }
}

/// MMSE estimates from a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmixResult {
    pub a_hat: AbundanceMatrix,
    pub m_hat: EndmemberMatrix,
    pub b_hat: NonlinearityVector,
    /// Posterior probability that each coefficient is nonzero.
    pub b_nonzero_prob: DVector<f64>,
    pub sigma2_hat: NoiseVariances,
    pub sigma_b2_hat: f64,
    pub w_hat: f64,
}

/// Initial state: endmembers at the prior means, abundances from a
/// sum-to-one least-squares fit on those means, no nonlinearity,
/// least-squares residual noise variances.
pub fn initial_state(y: &SpectralImage, mbar: &EndmemberMatrix, priors: &PriorConfig) -> Result<ModelState> {
    let (l, r) = mbar.data().shape();
    if l != y.n_bands() {
        return Err(Error::Dimension(format!(
            "prior means have {l} bands, image has {}",
            y.n_bands()
        )));
    }
    let n = y.n_pixels();
    let m0 = mbar.data().map(|v| v.clamp(INIT_MARGIN, 1.0 - INIT_MARGIN));

    // unconstrained least squares on the prior means
    let svd = m0.clone().svd(true, true);
    let a_ls = svd
        .solve(y.data(), 1e-12)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let resid = y.data() - &m0 * &a_ls;
    let sigma2 = DVector::from_fn(l, |i, _| {
        let row = resid.row(i);
        (row.dot(&row) / n as f64).max(INIT_VARIANCE_FLOOR)
    });
    let a0 = initial_abundances(&m0, &a_ls);
    let z0 = match LatentCoefficients::from_abundances(&a0) {
        Ok(z) => z,
        Err(_) => {
            let z_col = stick_breaking_inverse(&vec![1.0 / r as f64; r])?;
            LatentCoefficients::new(DMatrix::from_fn(r - 1, n, |i, _| z_col[i]))?
        }
    };
    ModelState::new(
        z0,
        EndmemberMatrix::new(m0)?,
        NonlinearityVector::zeros(n),
        NoiseVariances::new(sigma2)?,
        priors.nu / priors.gamma,
        0.5,
    )
}

/// Sum-to-one least-squares abundances, clipped at [`INIT_ABUNDANCE_FLOOR`]
/// and renormalized. Falls back to uniform abundances when `M^T M` is singular.
fn initial_abundances(m: &DMatrix<f64>, a_ls: &DMatrix<f64>) -> AbundanceMatrix {
    let (r, n) = (m.ncols(), a_ls.ncols());
    let uniform = || AbundanceMatrix::new(DMatrix::from_element(r, n, 1.0 / r as f64));
    let Some(chol) = (m.transpose() * m).cholesky() else {
        return uniform().expect("uniform abundances are valid");
    };
    // a = a_u - G^{-1} 1 (1^T a_u - 1) / (1^T G^{-1} 1)
    let g1 = chol.solve(&DVector::from_element(r, 1.0));
    let denom = g1.sum();
    let mut a = a_ls.clone();
    for mut col in a.column_iter_mut() {
        let excess = col.sum() - 1.0;
        col -= &g1 * (excess / denom);
        col.iter_mut().for_each(|v| *v = v.max(INIT_ABUNDANCE_FLOOR));
        let s = col.sum();
        col /= s;
    }
    AbundanceMatrix::new(a).or_else(|_| uniform()).expect("uniform abundances are valid")
}

/// Runs the sampler for `cfg.n_mc` iterations and keeps every `thin`-th
/// state after burn-in.
pub fn run(y: &SpectralImage, r: usize, cfg: &SamplerConfig) -> Result<Chain> {
    cfg.validate()?;
    if r < 2 {
        return Err(Error::Domain(format!("need at least 2 endmembers, got {r}")));
    }
    let mbar = match &cfg.priors.mbar {
        Some(m) => m.clone(),
        None => init_endmember_prior(y, r)?,
    };
    if mbar.n_endmembers() != r {
        return Err(Error::Dimension(format!(
            "prior means hold {} endmembers, {r} requested",
            mbar.n_endmembers()
        )));
    }
    let state = initial_state(y, &mbar, &cfg.priors)?;
    run_from(y, state, mbar, cfg)
}

/// Runs the sampler from a given starting state.
pub fn run_from(
    y: &SpectralImage,
    mut state: ModelState,
    mbar: EndmemberMatrix,
    cfg: &SamplerConfig,
) -> Result<Chain> {
    cfg.validate()?;
    check_shapes(&state, y)?;
    let mut adapt_z = ChmcAdaptState::new(&cfg.chmc_z);
    let mut adapt_m = ChmcAdaptState::new(&cfg.chmc_m);
    let kept_capacity = (cfg.n_mc - cfg.n_burn).div_ceil(cfg.thin);
    let mut chain = Chain {
        samples: Vec::with_capacity(kept_capacity),
        kept_iterations: Vec::with_capacity(kept_capacity),
        neg_log_lik: Vec::with_capacity(kept_capacity),
        n_burn: cfg.n_burn,
        accept_z: Vec::with_capacity(cfg.n_mc),
        accept_m: Vec::with_capacity(cfg.n_mc),
        divergences_z: Vec::with_capacity(cfg.n_mc),
        divergences_m: Vec::with_capacity(cfg.n_mc),
        epsilon_z: Vec::with_capacity(cfg.n_mc),
        epsilon_m: Vec::with_capacity(cfg.n_mc),
        adapt_events_z: Vec::new(),
        adapt_events_m: Vec::new(),
        mbar: mbar.clone(),
    };

    for t in 0..cfg.n_mc {
        if t == cfg.n_burn {
            adapt_z.end_burn_in();
            adapt_m.end_burn_in();
        }
        let ctx = StepContext {
            seed: cfg.seed,
            iteration: t as u64,
            exec: cfg.exec,
        };

        let cz = adapt_z.config(&cfg.chmc_z);
        let stats = sample_z(&mut state, y, &cz, cfg.inner_steps, ctx)?;
        chain.epsilon_z.push(cz.epsilon);
        chain.accept_z.push(stats.accept_rate());
        chain.divergences_z.push(stats.divergences());
        adapt_z.record_rate(stats.accept_rate(), &cfg.chmc_z);

        let cm = adapt_m.config(&cfg.chmc_m);
        let stats = sample_m(&mut state, y, &cfg.priors, &mbar, &cm, cfg.inner_steps, ctx)?;
        chain.epsilon_m.push(cm.epsilon);
        chain.accept_m.push(stats.accept_rate());
        chain.divergences_m.push(stats.divergences());
        adapt_m.record_rate(stats.accept_rate(), &cfg.chmc_m);

        sample_b(&mut state, y, ctx)?;
        sample_sigma2(&mut state, y, ctx)?;
        sample_sigma_b2(&mut state, &cfg.priors, ctx)?;
        sample_w(&mut state, ctx)?;

        if t >= cfg.n_burn && (t - cfg.n_burn) % cfg.thin == 0 {
            state
                .check_invariants()
                .map_err(|e| Error::Numerical(format!("iteration {t}: {e}")))?;
            let x = forward_raw(
                state.m.data(),
                &latent_to_abundances(state.z.data()),
                state.b.as_slice(),
            );
            chain.neg_log_lik.push(neg_log_likelihood(y, &x, &state.sigma2)?);
            chain.samples.push(state.clone());
            chain.kept_iterations.push(t);
        }
    }
    chain.adapt_events_z = adapt_z.events().to_vec();
    chain.adapt_events_m = adapt_m.events().to_vec();
    Ok(chain)
}

/// Posterior means of the kept samples. Abundances are averaged on the
/// simplex, not in latent coordinates.
pub fn mmse_estimate(chain: &Chain) -> Result<UnmixResult> {
    let first = chain.samples.first().ok_or(Error::EmptyChain)?;
    let count = chain.samples.len() as f64;
    let (l, r) = first.m.data().shape();
    let n = first.n_pixels();
    let mut a_sum = DMatrix::zeros(r, n);
    let mut m_sum = DMatrix::zeros(l, r);
    let mut b_sum = DVector::zeros(n);
    let mut nz = DVector::zeros(n);
    let mut s2_sum = DVector::zeros(l);
    let mut sb_sum = 0.0;
    let mut w_sum = 0.0;
    for s in &chain.samples {
        a_sum += latent_to_abundances(s.z.data());
        m_sum += s.m.data();
        b_sum += s.b.data();
        for (acc, v) in nz.iter_mut().zip(s.b.as_slice()) {
            if *v != 0.0 {
                *acc += 1.0;
            }
        }
        s2_sum += s.sigma2.data();
        sb_sum += s.sigma_b2;
        w_sum += s.w;
    }
    Ok(UnmixResult {
        a_hat: AbundanceMatrix::new(a_sum / count)?,
        m_hat: EndmemberMatrix::new(m_sum / count)?,
        b_hat: NonlinearityVector::new(b_sum / count)?,
        b_nonzero_prob: nz / count,
        sigma2_hat: NoiseVariances::new(s2_sum / count)?,
        sigma_b2_hat: sb_sum / count,
        w_hat: w_sum / count,
    })
}
