//! Synthetic scenes: truncated-simplex abundances mixed under the linear,
//! polynomial post-nonlinear or generalized bilinear model, plus i.i.d.
//! Gaussian noise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};

use crate::error::{Error, Result};
use crate::metrics::sam;
use crate::model::{column, AbundanceMatrix, EndmemberMatrix, SpectralImage};
use crate::par::{self, Exec};
use crate::rng::{stream, Block};

/// Rejection budget for one truncated-simplex draw.
pub const SIMPLEX_BUDGET: usize = 100_000;

/// Resample budget for procedural endmember sets.
pub const ENDMEMBER_BUDGET: usize = 10_000;

/// Minimum pairwise spectral angle between procedural endmembers (radians).
pub const MIN_ENDMEMBER_SAM: f64 = 0.15;

const SPECTRUM_LO: f64 = 0.05;
const SPECTRUM_HI: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingModel {
    Lmm,
    Ppnmm,
    Gbm,
}

impl MixingModel {
    pub fn name(self) -> &'static str {
        match self {
            MixingModel::Lmm => "lmm",
            MixingModel::Ppnmm => "ppnmm",
            MixingModel::Gbm => "gbm",
        }
    }
}

impl std::str::FromStr for MixingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lmm" => Ok(MixingModel::Lmm),
            "ppnmm" => Ok(MixingModel::Ppnmm),
            "gbm" => Ok(MixingModel::Gbm),
            _ => Err(Error::Config(format!("unknown mixing model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EndmemberSource {
    Procedural,
    User(EndmemberMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_endmembers: usize,
    pub n_bands: usize,
    pub model: MixingModel,
    /// Purity ceiling on every abundance.
    pub a_max: f64,
    pub noise_sigma2: f64,
    pub b_range: [f64; 2],
    /// Draws of `b` are restricted to `|b| >= b_min_abs`.
    pub b_min_abs: f64,
    pub gamma_range: [f64; 2],
    pub endmembers: EndmemberSource,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_rows: 30,
            n_cols: 30,
            n_endmembers: 3,
            n_bands: 50,
            model: MixingModel::Ppnmm,
            a_max: 0.9,
            noise_sigma2: 1e-4,
            b_range: [-0.3, 0.3],
            b_min_abs: 0.0,
            gamma_range: [0.0, 1.0],
            endmembers: EndmemberSource::Procedural,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn n_pixels(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.n_endmembers;
        if self.n_pixels() == 0 {
            return Err(Error::Config("empty pixel grid".into()));
        }
        if r < 2 || r > self.n_bands {
            return Err(Error::Config(format!(
                "need 2 <= R <= L, got R = {r}, L = {}",
                self.n_bands
            )));
        }
        if !(self.a_max > 1.0 / r as f64 && self.a_max <= 1.0) {
            return Err(Error::Config(format!(
                "a_max = {} must lie in (1/R, 1]",
                self.a_max
            )));
        }
        if !(self.noise_sigma2 >= 0.0 && self.noise_sigma2.is_finite()) {
            return Err(Error::Config(format!(
                "noise variance {} must be non-negative",
                self.noise_sigma2
            )));
        }
        for (name, [lo, hi]) in [("b_range", self.b_range), ("gamma_range", self.gamma_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("{name} [{lo}, {hi}] is not an interval")));
            }
        }
        let [lo, hi] = self.b_range;
        if self.b_min_abs < 0.0 || (self.b_min_abs > lo.abs().max(hi.abs())) {
            return Err(Error::Config(format!(
                "b_min_abs = {} excludes the whole b_range",
                self.b_min_abs
            )));
        }
        if let EndmemberSource::User(m) = &self.endmembers {
            if m.n_bands() != self.n_bands || m.n_endmembers() != r {
                return Err(Error::Dimension(format!(
                    "endmember file is {} x {}, spec asks for {} x {r}",
                    m.n_bands(),
                    m.n_endmembers(),
                    self.n_bands
                )));
            }
        }
        Ok(())
    }
}

/// Per-pixel nonlinearity parameters of the generating model.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityTruth {
    None,
    /// One `b` per pixel.
    Polynomial(DVector<f64>),
    /// Interaction coefficients, `R(R-1)/2 x N`, pairs in `(0,1), (0,2), ..., (R-2,R-1)` order.
    Bilinear(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub m_true: EndmemberMatrix,
    pub a_true: AbundanceMatrix,
    pub nonlinearity: NonlinearityTruth,
    pub sigma2_true: f64,
    /// Noise-free signal.
    pub clean: DMatrix<f64>,
}

fn uniform_simplex<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Vec<f64> {
    let mut e: Vec<f64> = (0..r).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= s);
    e
}

/// Uniform draw from `{a : 0 < a_r < a_max, sum a = 1}` together with the
/// number of proposals it took.
pub fn sample_truncated_simplex_counted<R: Rng + ?Sized>(
    r: usize,
    a_max: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    if r < 2 || !(a_max > 1.0 / r as f64 && a_max <= 1.0) {
        return Err(Error::Domain(format!(
            "a_max = {a_max} must lie in (1/{r}, 1]"
        )));
    }
    for tries in 1..=SIMPLEX_BUDGET {
        let a = uniform_simplex(r, rng);
        if a.iter().all(|&v| v > 0.0 && v < a_max) {
            return Ok((a, tries));
        }
    }
    Err(Error::Numerical(format!(
        "no draw with all abundances below {a_max} (R = {r}) in {SIMPLEX_BUDGET} proposals; \
         the admissible set is too small"
    )))
}

pub fn sample_truncated_simplex<R: Rng + ?Sized>(r: usize, a_max: f64, rng: &mut R) -> Result<Vec<f64>> {
    sample_truncated_simplex_counted(r, a_max, rng).map(|(a, _)| a)
}

fn sample_b<R: Rng + ?Sized>(range: [f64; 2], min_abs: f64, rng: &mut R) -> Result<f64> {
    let [lo, hi] = range;
    if lo == hi {
        return Ok(lo);
    }
    for _ in 0..SIMPLEX_BUDGET {
        let b = rng.random_range(lo..hi);
        if b.abs() >= min_abs {
            return Ok(b);
        }
    }
    Err(Error::Numerical(format!(
        "no b in [{lo}, {hi}] with |b| >= {min_abs} after {SIMPLEX_BUDGET} proposals"
    )))
}

fn uniform_in<R: Rng + ?Sized>([lo, hi]: [f64; 2], rng: &mut R) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn smooth_spectrum<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Vec<f64> {
    let base = rng.random_range(0.2..0.6);
    let n_bumps = rng.random_range(3..=6);
    let span = l.max(2) as f64;
    let bumps: Vec<(f64, f64, f64)> = (0..n_bumps)
        .map(|_| {
            let centre = rng.random_range(-0.1..1.1) * span;
            let width = rng.random_range(0.05..0.25) * span;
            let sign = if rng.random_bool(0.4) { -1.0 } else { 1.0 };
            (centre, width.max(1.0), sign * rng.random_range(0.1..0.45))
        })
        .collect();
    let mut v: Vec<f64> = (0..l)
        .map(|i| {
            let x = i as f64;
            base + bumps
                .iter()
                .map(|(c, w, a)| a * (-(x - c).powi(2) / (2.0 * w * w)).exp())
                .sum::<f64>()
        })
        .collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < SPECTRUM_LO || hi > SPECTRUM_HI {
        let (tlo, thi) = (lo.max(SPECTRUM_LO), hi.min(SPECTRUM_HI));
        if hi - lo > 0.0 {
            let k = (thi - tlo) / (hi - lo);
            v.iter_mut().for_each(|x| *x = tlo + (*x - lo) * k);
        } else {
            v.iter_mut().for_each(|x| *x = x.clamp(SPECTRUM_LO, SPECTRUM_HI));
        }
    }
    v
}

/// `R` smooth spectra in `[0.05, 0.95]` built from Gaussian bumps over the
/// band index, with every pairwise spectral angle at least 0.15 rad.
pub fn procedural_endmembers<R: Rng + ?Sized>(r: usize, l: usize, rng: &mut R) -> Result<EndmemberMatrix> {
    if r < 2 || r > l {
        return Err(Error::Domain(format!("need 2 <= R <= L, got R = {r}, L = {l}")));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut budget = ENDMEMBER_BUDGET;
    while cols.len() < r {
        if budget == 0 {
            return Err(Error::Numerical(format!(
                "could not find {r} spectra of length {l} with pairwise angle >= {MIN_ENDMEMBER_SAM}"
            )));
        }
        budget -= 1;
        let cand = smooth_spectrum(l, rng);
        let mut ok = true;
        for c in &cols {
            if sam(c, &cand)? < MIN_ENDMEMBER_SAM {
                ok = false;
                break;
            }
        }
        if ok {
            cols.push(cand);
        }
    }
    EndmemberMatrix::new(DMatrix::from_fn(l, r, |i, j| cols[j][i]))
}

/// `10 log10(|X|_F^2 / (N L sigma2))`.
pub fn snr_db(clean: &DMatrix<f64>, sigma2: f64) -> f64 {
    let n = clean.len() as f64;
    10.0 * (clean.norm_squared() / (n * sigma2)).log10()
}

struct PixelDraw {
    a: Vec<f64>,
    nonlin: Vec<f64>,
    clean: Vec<f64>,
    noisy: Vec<f64>,
}

/// Builds an image and its ground truth. Every pixel draws from its own
/// stream, so the output does not depend on `exec`.
pub fn generate(spec: &SynthSpec, exec: Exec) -> Result<(SpectralImage, GroundTruth)> {
    spec.validate()?;
    let (r, l, n) = (spec.n_endmembers, spec.n_bands, spec.n_pixels());
    let m = match &spec.endmembers {
        EndmemberSource::User(m) => m.clone(),
        EndmemberSource::Procedural => {
            let mut rng = stream(spec.seed, 0, Block::SynthEndmembers, 0);
            procedural_endmembers(r, l, &mut rng)?
        }
    };
    let md = m.data();
    let pairs: Vec<(usize, usize)> = (0..r)
        .flat_map(|i| (i + 1..r).map(move |j| (i, j)))
        .collect();
    let noise_sd = spec.noise_sigma2.sqrt();

    let draws = par::map_indexed(exec, n, |p| -> Result<PixelDraw> {
        let mut rng = stream(spec.seed, 0, Block::SynthPixel, p as u64);
        let a = sample_truncated_simplex(r, spec.a_max, &mut rng)?;
        let mut s = vec![0.0; l];
        for (j, aj) in a.iter().enumerate() {
            for (sv, mv) in s.iter_mut().zip(column(md, j)) {
                *sv += aj * mv;
            }
        }
        let nonlin = match spec.model {
            MixingModel::Lmm => Vec::new(),
            MixingModel::Ppnmm => {
                let b = sample_b(spec.b_range, spec.b_min_abs, &mut rng)?;
                s.iter_mut().for_each(|v| *v += b * *v * *v);
                vec![b]
            }
            MixingModel::Gbm => {
                let g: Vec<f64> = pairs.iter().map(|_| uniform_in(spec.gamma_range, &mut rng)).collect();
                for (&(i, j), gij) in pairs.iter().zip(&g) {
                    let w = gij * a[i] * a[j];
                    for ((sv, mi), mj) in s.iter_mut().zip(column(md, i)).zip(column(md, j)) {
                        *sv += w * mi * mj;
                    }
                }
                g
            }
        };
        let noisy = if noise_sd > 0.0 {
            let normal = Normal::new(0.0, noise_sd).map_err(|e| Error::Domain(e.to_string()))?;
            s.iter().map(|v| v + normal.sample(&mut rng)).collect()
        } else {
            s.clone()
        };
        Ok(PixelDraw { a, nonlin, clean: s, noisy })
    });

    let mut a_true = DMatrix::zeros(r, n);
    let mut clean = DMatrix::zeros(l, n);
    let mut y = DMatrix::zeros(l, n);
    let mut nonlin = DMatrix::zeros(
        match spec.model {
            MixingModel::Lmm => 0,
            MixingModel::Ppnmm => 1,
            MixingModel::Gbm => pairs.len(),
        },
        n,
    );
    for (p, d) in draws.into_iter().enumerate() {
        let d = d?;
        a_true.set_column(p, &DVector::from_vec(d.a));
        clean.set_column(p, &DVector::from_vec(d.clean));
        y.set_column(p, &DVector::from_vec(d.noisy));
        if !d.nonlin.is_empty() {
            nonlin.set_column(p, &DVector::from_vec(d.nonlin));
        }
    }
    let nonlinearity = match spec.model {
        MixingModel::Lmm => NonlinearityTruth::None,
        MixingModel::Ppnmm => NonlinearityTruth::Polynomial(nonlin.row(0).transpose()),
        MixingModel::Gbm => NonlinearityTruth::Bilinear(nonlin),
    };
    let truth = GroundTruth {
        m_true: m,
        a_true: AbundanceMatrix::new(a_true)?,
        nonlinearity,
        sigma2_true: spec.noise_sigma2,
        clean,
    };
    Ok((SpectralImage::new(y)?, truth))
}
