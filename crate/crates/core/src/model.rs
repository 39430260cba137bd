//! Domain types, the polynomial post-nonlinear forward model, the
//! stick-breaking abundance parameterization and the two potential energies
//! (per-pixel latent coefficients, per-band endmember rows) with their
//! analytic gradients.
//!
//! Matrices keep one pixel per column: an image is `L x N`, endmembers are
//! `L x R`, abundances `R x N` and latent coefficients `(R-1) x N`.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};

use crate::chmc::Potential;
use crate::error::{Error, Result};

/// Tolerance on the column sums of an [`AbundanceMatrix`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Observed hyperspectral image: `L` bands by `N` pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralImage {
    data: DMatrix<f64>,
    wavelengths: Option<Vec<f64>>,
}

impl SpectralImage {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::Domain(format!(
                "an image needs at least 2 bands, got {}",
                data.nrows()
            )));
        }
        if data.ncols() < 1 {
            return Err(Error::Domain("an image needs at least one pixel".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("image contains non-finite values".into()));
        }
        Ok(Self {
            data,
            wavelengths: None,
        })
    }

    /// Attaches band-center wavelengths (nm). Metadata only.
    pub fn with_wavelengths(mut self, wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.len() != self.n_bands() {
            return Err(Error::Dimension(format!(
                "{} wavelengths for {} bands",
                wavelengths.len(),
                self.n_bands()
            )));
        }
        self.wavelengths = Some(wavelengths);
        Ok(self)
    }

    pub fn n_bands(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_pixels(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn wavelengths(&self) -> Option<&[f64]> {
        self.wavelengths.as_deref()
    }

    pub fn pixel(&self, n: usize) -> &[f64] {
        column(&self.data, n)
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }
}

/// `L x R` reflectance matrix, one endmember spectrum per column.
#[derive(Debug, Clone, PartialEq)]
pub struct EndmemberMatrix(DMatrix<f64>);

impl EndmemberMatrix {
    pub(crate) fn raw_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.0
    }


    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (l, r) = data.shape();
        if r < 2 {
            return Err(Error::Domain(format!("need at least 2 endmembers, got {r}")));
        }
        if r > l {
            return Err(Error::Domain(format!(
                "{r} endmembers exceed the {l} available bands"
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!(
                "endmember reflectance {v} outside [0, 1]"
            )));
        }
        Ok(Self(data))
    }

    pub fn n_bands(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_endmembers(&self) -> usize {
        self.0.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// `R x N` abundance matrix; each column lies on the open probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceMatrix(DMatrix<f64>);

impl AbundanceMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        for (n, col) in data.column_iter().enumerate() {
            if let Some(v) = col.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "abundance {v} of pixel {n} is not strictly positive"
                )));
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::Domain(format!(
                    "abundances of pixel {n} sum to {sum}"
                )));
            }
        }
        Ok(Self(data))
    }

    /// Maps every latent column through [`stick_breaking_forward`].
    pub fn from_latent(z: &LatentCoefficients) -> Self {
        Self(latent_to_abundances(z.data()))
    }

    pub fn n_endmembers(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_pixels(&self) -> usize {
        self.0.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn pixel(&self, n: usize) -> &[f64] {
        column(&self.0, n)
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// `(R-1) x N` stick-breaking coordinates, all strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCoefficients(DMatrix<f64>);

impl LatentCoefficients {
    pub(crate) fn raw_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.0
    }


    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 1 {
            return Err(Error::Domain("latent coefficients need R >= 2".into()));
        }
        if let Some(v) = data.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::Domain(format!(
                "latent coefficient {v} outside the open unit interval"
            )));
        }
        Ok(Self(data))
    }

    pub fn from_abundances(a: &AbundanceMatrix) -> Result<Self> {
        let (r, n) = a.data().shape();
        let mut z = DMatrix::zeros(r - 1, n);
        for j in 0..n {
            let col = stick_breaking_inverse(a.pixel(j))?;
            z.column_mut(j).copy_from_slice(&col);
        }
        Self::new(z)
    }

    pub fn n_pixels(&self) -> usize {
        self.0.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Per-pixel nonlinearity coefficients; an exact zero marks a linearly mixed pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityVector(DVector<f64>);

impl NonlinearityVector {
    pub(crate) fn raw_mut(&mut self) -> &mut DVector<f64> {
        &mut self.0
    }


    pub fn new(data: DVector<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite nonlinearity coefficient".into()));
        }
        Ok(Self(data))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.0
    }

    /// Number of nonzero coefficients.
    pub fn count_nonzero(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }
}

/// Per-band Gaussian noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVariances(DVector<f64>);

impl NoiseVariances {
    pub(crate) fn raw_mut(&mut self) -> &mut DVector<f64> {
        &mut self.0
    }


    pub fn new(data: DVector<f64>) -> Result<Self> {
        if let Some(v) = data.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("noise variance {v} is not positive")));
        }
        Ok(Self(data))
    }

    pub fn constant(l: usize, value: f64) -> Result<Self> {
        Self::new(DVector::from_element(l, value))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Vec<f64> {
        self.0.iter().map(|v| 1.0 / v).collect()
    }
}

/// Full parameter and hyperparameter set at one sampler iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub z: LatentCoefficients,
    pub m: EndmemberMatrix,
    pub b: NonlinearityVector,
    pub sigma2: NoiseVariances,
    pub sigma_b2: f64,
    pub w: f64,
}

impl ModelState {
    pub fn new(
        z: LatentCoefficients,
        m: EndmemberMatrix,
        b: NonlinearityVector,
        sigma2: NoiseVariances,
        sigma_b2: f64,
        w: f64,
    ) -> Result<Self> {
        let state = Self {
            z,
            m,
            b,
            sigma2,
            sigma_b2,
            w,
        };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn n_endmembers(&self) -> usize {
        self.m.n_endmembers()
    }

    pub fn n_pixels(&self) -> usize {
        self.z.n_pixels()
    }

    pub fn n_bands(&self) -> usize {
        self.m.n_bands()
    }

    pub fn abundances(&self) -> AbundanceMatrix {
        AbundanceMatrix::from_latent(&self.z)
    }

    /// Re-validates every component invariant and the cross-component shapes.
    pub fn check_invariants(&self) -> Result<()> {
        LatentCoefficients::new(self.z.data().clone())?;
        EndmemberMatrix::new(self.m.data().clone())?;
        NonlinearityVector::new(self.b.data().clone())?;
        NoiseVariances::new(self.sigma2.data().clone())?;
        AbundanceMatrix::new(self.abundances().into_inner())?;
        let (l, r) = self.m.data().shape();
        if self.z.data().nrows() + 1 != r {
            return Err(Error::Dimension(format!(
                "{} latent rows for {r} endmembers",
                self.z.data().nrows()
            )));
        }
        if self.b.len() != self.n_pixels() {
            return Err(Error::Dimension(format!(
                "{} nonlinearity coefficients for {} pixels",
                self.b.len(),
                self.n_pixels()
            )));
        }
        if self.sigma2.len() != l {
            return Err(Error::Dimension(format!(
                "{} noise variances for {l} bands",
                self.sigma2.len()
            )));
        }
        if !(self.sigma_b2 > 0.0 && self.sigma_b2.is_finite()) {
            return Err(Error::Domain(format!(
                "nonlinearity variance {} is not positive",
                self.sigma_b2
            )));
        }
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::Domain(format!("weight {} outside [0, 1]", self.w)));
        }
        Ok(())
    }
}

pub(crate) fn column(m: &DMatrix<f64>, j: usize) -> &[f64] {
    let r = m.nrows();
    &m.as_slice()[j * r..(j + 1) * r]
}

// ---------------------------------------------------------------------------
// Stick-breaking parameterization
// ---------------------------------------------------------------------------

/// Maps latent coordinates in `(0,1)^(R-1)` to a point of the open `R`-simplex.
///
/// `a_r = (prod_{k<r} z_k)(1 - z_r)` for `r < R` and `a_R = prod_{k<R} z_k`.
pub fn stick_breaking_forward(z: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = z.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::Domain(format!(
            "stick-breaking coordinate {v} outside (0, 1)"
        )));
    }
    let mut a = vec![0.0; z.len() + 1];
    stick_break_into(z, &mut a);
    Ok(a)
}

#[inline]
pub(crate) fn stick_break_into(z: &[f64], a: &mut [f64]) {
    debug_assert_eq!(a.len(), z.len() + 1);
    let mut stick = 1.0;
    for (ar, zr) in a.iter_mut().zip(z) {
        *ar = stick * (1.0 - zr);
        stick *= zr;
    }
    a[z.len()] = stick;
}

/// Inverse of [`stick_breaking_forward`] on the open simplex.
pub fn stick_breaking_inverse(a: &[f64]) -> Result<Vec<f64>> {
    if a.len() < 2 {
        return Err(Error::Domain("need at least two abundances".into()));
    }
    if let Some(v) = a.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("abundance {v} is not strictly positive")));
    }
    let sum: f64 = a.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("abundances sum to {sum}")));
    }
    // tail[r] = sum_{k>=r} a_k equals prod_{k<r} z_k
    let mut tail = vec![0.0; a.len() + 1];
    for r in (0..a.len()).rev() {
        tail[r] = tail[r + 1] + a[r];
    }
    Ok((0..a.len() - 1).map(|r| tail[r + 1] / tail[r]).collect())
}

pub(crate) fn latent_to_abundances(z: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, n) = z.shape();
    let mut a = DMatrix::zeros(r1 + 1, n);
    for j in 0..n {
        let zc = column(z, j);
        let start = j * (r1 + 1);
        stick_break_into(zc, &mut a.as_mut_slice()[start..start + r1 + 1]);
    }
    a
}

// ---------------------------------------------------------------------------
// Forward model
// ---------------------------------------------------------------------------

/// Elementwise second-order polynomial `s + b s^2`.
pub fn polynomial_nonlinearity(s: &[f64], b: f64) -> Vec<f64> {
    s.iter().map(|v| v + b * v * v).collect()
}

/// Noiseless observation of one pixel: `g_b(M a)`.
pub fn ppnmm_pixel(m: &EndmemberMatrix, a: &[f64], b: f64) -> Result<DVector<f64>> {
    if a.len() != m.n_endmembers() {
        return Err(Error::Dimension(format!(
            "{} abundances for {} endmembers",
            a.len(),
            m.n_endmembers()
        )));
    }
    let s = m.data() * DVector::from_column_slice(a);
    Ok(s.map(|v| v + b * v * v))
}

/// Noiseless observation matrix `MA + [(MA) o (MA)] diag(b)`.
pub fn ppnmm_image(
    m: &EndmemberMatrix,
    a: &AbundanceMatrix,
    b: &NonlinearityVector,
) -> Result<DMatrix<f64>> {
    if a.n_endmembers() != m.n_endmembers() {
        return Err(Error::Dimension(format!(
            "{} abundance rows for {} endmembers",
            a.n_endmembers(),
            m.n_endmembers()
        )));
    }
    if b.len() != a.n_pixels() {
        return Err(Error::Dimension(format!(
            "{} nonlinearity coefficients for {} pixels",
            b.len(),
            a.n_pixels()
        )));
    }
    Ok(forward_raw(m.data(), a.data(), b.as_slice()))
}

pub(crate) fn forward_raw(m: &DMatrix<f64>, a: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let linear = m * a;
    let squared = linear.component_mul(&linear);
    linear + squared * DMatrix::from_diagonal(&DVector::from_column_slice(b))
}

/// Negative log-likelihood of the observations up to an additive constant:
/// `(N/2) sum_l log s2_l + 1/2 sum_{n,l} (y_ln - x_ln)^2 / s2_l`.
///
/// The dropped constant is `(N L / 2) log(2 pi)`.
pub fn neg_log_likelihood(
    y: &SpectralImage,
    x: &DMatrix<f64>,
    sigma2: &NoiseVariances,
) -> Result<f64> {
    if y.data().shape() != x.shape() {
        return Err(Error::Dimension(format!(
            "observations {:?} vs model {:?}",
            y.data().shape(),
            x.shape()
        )));
    }
    if sigma2.len() != y.n_bands() {
        return Err(Error::Dimension(format!(
            "{} noise variances for {} bands",
            sigma2.len(),
            y.n_bands()
        )));
    }
    let n = y.n_pixels() as f64;
    let inv = sigma2.inverse();
    let log_det: f64 = sigma2.as_slice().iter().map(|v| v.ln()).sum();
    let mut quad = 0.0;
    for (yc, xc) in y.data().column_iter().zip(x.column_iter()) {
        for ((yv, xv), iv) in yc.iter().zip(xc.iter()).zip(&inv) {
            let r = yv - xv;
            quad += r * r * iv;
        }
    }
    Ok(0.5 * n * log_det + 0.5 * quad)
}

// ---------------------------------------------------------------------------
// Latent-coefficient potential (one pixel)
// ---------------------------------------------------------------------------

/// Potential energy of the latent coefficients of one pixel given the
/// endmembers, its nonlinearity coefficient and the noise variances.
///
/// `U(z) = 1/2 (y - x)' S^-1 (y - x) - sum_r (R - r - 1) log z_r`.
pub struct PixelPotential<'a> {
    y: &'a [f64],
    m: &'a DMatrix<f64>,
    b: f64,
    inv_sigma2: &'a [f64],
    scratch: RefCell<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

impl<'a> PixelPotential<'a> {
    /// `inv_sigma2` holds the reciprocal noise variances.
    pub fn new(y: &'a [f64], m: &'a DMatrix<f64>, b: f64, inv_sigma2: &'a [f64]) -> Self {
        let (l, r) = m.shape();
        debug_assert_eq!(y.len(), l);
        debug_assert_eq!(inv_sigma2.len(), l);
        Self {
            y,
            m,
            b,
            inv_sigma2,
            scratch: RefCell::new((vec![0.0; r], vec![0.0; l], vec![0.0; r])),
        }
    }

    fn n_endmembers(&self) -> usize {
        self.m.ncols()
    }

    /// Fills `a` and `s = M a`, returns the data term.
    fn data_term(&self, z: &[f64], a: &mut [f64], s: &mut [f64]) -> f64 {
        stick_break_into(z, a);
        mat_vec(self.m, a, s);
        let mut quad = 0.0;
        for ((sv, yv), iv) in s.iter().zip(self.y).zip(self.inv_sigma2) {
            let r = yv - (sv + self.b * sv * sv);
            quad += r * r * iv;
        }
        0.5 * quad
    }
}

impl Potential for PixelPotential<'_> {
    fn dim(&self) -> usize {
        self.n_endmembers() - 1
    }

    fn energy(&self, z: &[f64]) -> f64 {
        let mut guard = self.scratch.borrow_mut();
        let (a, s, _) = &mut *guard;
        let data = self.data_term(z, a, s);
        let r = self.n_endmembers();
        let prior: f64 = z
            .iter()
            .enumerate()
            .map(|(i, zi)| (r - i - 2) as f64 * zi.ln())
            .sum();
        data - prior
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        let mut guard = self.scratch.borrow_mut();
        let (a, s, g) = &mut *guard;
        stick_break_into(z, a);
        mat_vec(self.m, a, s);
        // s becomes the per-band coefficient (y - x) / s2 * (1 + 2 b s)
        for ((sv, yv), iv) in s.iter_mut().zip(self.y).zip(self.inv_sigma2) {
            let lin = *sv;
            let resid = (yv - (lin + self.b * lin * lin)) * iv;
            *sv = resid * (1.0 + 2.0 * self.b * lin);
        }
        let l = self.m.nrows();
        let mdata = self.m.as_slice();
        for (r, gr) in g.iter_mut().enumerate() {
            *gr = -dot(&mdata[r * l..(r + 1) * l], s);
        }
        let rr = self.n_endmembers();
        // tail = sum_{r > i} g_r a_r
        let mut tail = g[rr - 1] * a[rr - 1];
        for i in (0..rr - 1).rev() {
            let zi = z[i];
            grad[i] = g[i] * a[i] / (zi - 1.0) + tail / zi - (rr - i - 2) as f64 / zi;
            tail += g[i] * a[i];
        }
    }
}

fn check_latent(z: &[f64], m: &EndmemberMatrix) -> Result<()> {
    if z.len() + 1 != m.n_endmembers() {
        return Err(Error::Dimension(format!(
            "{} latent coordinates for {} endmembers",
            z.len(),
            m.n_endmembers()
        )));
    }
    if let Some(v) = z.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::Domain(format!(
            "latent coordinate {v} outside (0, 1)"
        )));
    }
    Ok(())
}

fn check_pixel(y: &[f64], m: &EndmemberMatrix, sigma2: &NoiseVariances) -> Result<()> {
    if y.len() != m.n_bands() || sigma2.len() != m.n_bands() {
        return Err(Error::Dimension(format!(
            "pixel of {} bands, {} variances, endmembers of {} bands",
            y.len(),
            sigma2.len(),
            m.n_bands()
        )));
    }
    Ok(())
}

/// Checked evaluation of the latent-coefficient potential of one pixel.
pub fn potential_u(
    z: &[f64],
    y: &[f64],
    m: &EndmemberMatrix,
    b: f64,
    sigma2: &NoiseVariances,
) -> Result<f64> {
    check_latent(z, m)?;
    check_pixel(y, m, sigma2)?;
    let inv = sigma2.inverse();
    Ok(PixelPotential::new(y, m.data(), b, &inv).energy(z))
}

/// Checked gradient of [`potential_u`] with respect to the latent coordinates.
pub fn grad_u(
    z: &[f64],
    y: &[f64],
    m: &EndmemberMatrix,
    b: f64,
    sigma2: &NoiseVariances,
) -> Result<Vec<f64>> {
    check_latent(z, m)?;
    check_pixel(y, m, sigma2)?;
    let inv = sigma2.inverse();
    let mut g = vec![0.0; z.len()];
    PixelPotential::new(y, m.data(), b, &inv).gradient(z, &mut g);
    Ok(g)
}

// ---------------------------------------------------------------------------
// Endmember-row potential (one band)
// ---------------------------------------------------------------------------

/// Potential energy of one endmember row `m_l` (all endmembers at band `l`).
///
/// `V(m) = |y_l - t|^2 / (2 s2_l) + |m - mbar_l|^2 / (2 s^2)` with
/// `t = A'm + diag(b)[(A'm) o (A'm)]`.
pub struct RowPotential<'a> {
    y_row: &'a [f64],
    a: &'a DMatrix<f64>,
    b: &'a [f64],
    inv_sigma2: f64,
    inv_s2: f64,
    mbar_row: &'a [f64],
}

impl<'a> RowPotential<'a> {
    /// `inv_sigma2 = 1/s2_l`, `inv_s2 = 1/s^2` (zero drops the prior term).
    pub fn new(
        y_row: &'a [f64],
        a: &'a DMatrix<f64>,
        b: &'a [f64],
        inv_sigma2: f64,
        inv_s2: f64,
        mbar_row: &'a [f64],
    ) -> Self {
        debug_assert_eq!(y_row.len(), a.ncols());
        debug_assert_eq!(b.len(), a.ncols());
        debug_assert_eq!(mbar_row.len(), a.nrows());
        Self {
            y_row,
            a,
            b,
            inv_sigma2,
            inv_s2,
            mbar_row,
        }
    }
}

impl Potential for RowPotential<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn energy(&self, m: &[f64]) -> f64 {
        let r = self.a.nrows();
        let adata = self.a.as_slice();
        let mut quad = 0.0;
        for (n, (yv, bv)) in self.y_row.iter().zip(self.b).enumerate() {
            let s = dot(&adata[n * r..(n + 1) * r], m);
            let resid = yv - (s + bv * s * s);
            quad += resid * resid;
        }
        let prior: f64 = m
            .iter()
            .zip(self.mbar_row)
            .map(|(mv, bar)| (mv - bar) * (mv - bar))
            .sum();
        0.5 * quad * self.inv_sigma2 + 0.5 * prior * self.inv_s2
    }

    fn gradient(&self, m: &[f64], grad: &mut [f64]) {
        let r = self.a.nrows();
        let adata = self.a.as_slice();
        for ((g, mv), bar) in grad.iter_mut().zip(m).zip(self.mbar_row) {
            *g = (mv - bar) * self.inv_s2;
        }
        for (n, (yv, bv)) in self.y_row.iter().zip(self.b).enumerate() {
            let an = &adata[n * r..(n + 1) * r];
            let s = dot(an, m);
            let coef = -(yv - (s + bv * s * s)) * self.inv_sigma2 * (1.0 + 2.0 * bv * s);
            for (g, av) in grad.iter_mut().zip(an) {
                *g += coef * av;
            }
        }
    }
}

fn check_row(
    m_row: &[f64],
    y_row: &[f64],
    a: &AbundanceMatrix,
    b: &NonlinearityVector,
    sigma_l2: f64,
    s2: f64,
    mbar_row: &[f64],
) -> Result<()> {
    if !(sigma_l2 > 0.0) {
        return Err(Error::Domain(format!("band variance {sigma_l2} is not positive")));
    }
    if !(s2 > 0.0) {
        return Err(Error::Domain(format!("prior variance {s2} is not positive")));
    }
    let r = a.n_endmembers();
    let n = a.n_pixels();
    if m_row.len() != r || mbar_row.len() != r || y_row.len() != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "row of {} / prior of {} for {r} endmembers; {} observations and {} \
             coefficients for {n} pixels",
            m_row.len(),
            mbar_row.len(),
            y_row.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Checked evaluation of the endmember-row potential. `s2` may be infinite.
pub fn potential_v(
    m_row: &[f64],
    y_row: &[f64],
    a: &AbundanceMatrix,
    b: &NonlinearityVector,
    sigma_l2: f64,
    s2: f64,
    mbar_row: &[f64],
) -> Result<f64> {
    check_row(m_row, y_row, a, b, sigma_l2, s2, mbar_row)?;
    let pot = RowPotential::new(y_row, a.data(), b.as_slice(), 1.0 / sigma_l2, 1.0 / s2, mbar_row);
    Ok(pot.energy(m_row))
}

/// Checked gradient of [`potential_v`].
pub fn grad_v(
    m_row: &[f64],
    y_row: &[f64],
    a: &AbundanceMatrix,
    b: &NonlinearityVector,
    sigma_l2: f64,
    s2: f64,
    mbar_row: &[f64],
) -> Result<Vec<f64>> {
    check_row(m_row, y_row, a, b, sigma_l2, s2, mbar_row)?;
    let pot = RowPotential::new(y_row, a.data(), b.as_slice(), 1.0 / sigma_l2, 1.0 / s2, mbar_row);
    let mut g = vec![0.0; m_row.len()];
    pot.gradient(m_row, &mut g);
    Ok(g)
}

// ---------------------------------------------------------------------------
// small dense kernels
// ---------------------------------------------------------------------------

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `out = M x` for a column-major `M`.
#[inline]
pub(crate) fn mat_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let l = m.nrows();
    let data = m.as_slice();
    out.fill(0.0);
    for (r, xr) in x.iter().enumerate() {
        for (o, mv) in out.iter_mut().zip(&data[r * l..(r + 1) * l]) {
            *o += xr * mv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eye2() -> EndmemberMatrix {
        EndmemberMatrix::new(DMatrix::identity(2, 2)).unwrap()
    }

    #[test]
    fn stick_breaking_hand_values() {
        let a = stick_breaking_forward(&[0.5, 0.5]).unwrap();
        assert_eq!(a, vec![0.5, 0.25, 0.25]);
        let a = stick_breaking_forward(&[0.3]).unwrap();
        assert_abs_diff_eq!(a[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn stick_breaking_rejects_boundary() {
        assert!(matches!(stick_breaking_forward(&[0.0, 0.5]), Err(Error::Domain(_))));
        assert!(stick_breaking_forward(&[0.5, 1.0]).is_err());
        assert!(stick_breaking_forward(&[f64::NAN]).is_err());
    }

    #[test]
    fn inverse_hand_values() {
        let z = stick_breaking_inverse(&[0.5, 0.25, 0.25]).unwrap();
        assert_abs_diff_eq!(z[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 0.5, epsilon = 1e-15);
        let third = 1.0 / 3.0;
        let z = stick_breaking_inverse(&[third, third, third]).unwrap();
        assert_abs_diff_eq!(z[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn inverse_rejects_bad_simplex() {
        assert!(stick_breaking_inverse(&[0.5, 0.5, 0.0]).is_err());
        assert!(stick_breaking_inverse(&[0.5, 0.6]).is_err());
        assert!(stick_breaking_inverse(&[1.0]).is_err());
    }

    #[test]
    fn pixel_model_hand_values() {
        let x = ppnmm_pixel(&eye2(), &[0.6, 0.4], 0.5).unwrap();
        assert_abs_diff_eq!(x[0], 0.78, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.48, epsilon = 1e-15);
        assert_eq!(polynomial_nonlinearity(&[0.5], 1.0), vec![0.75]);
    }

    #[test]
    fn linear_pixel_is_exactly_ma() {
        let m = EndmemberMatrix::new(DMatrix::from_row_slice(3, 2, &[0.1, 0.9, 0.3, 0.4, 0.7, 0.2]))
            .unwrap();
        let a = [0.35, 0.65];
        let x = ppnmm_pixel(&m, &a, 0.0).unwrap();
        let lin = m.data() * DVector::from_column_slice(&a);
        assert_eq!(x, lin);
    }

    #[test]
    fn image_rejects_shape_mismatch() {
        let a = AbundanceMatrix::new(DMatrix::from_element(2, 3, 0.5)).unwrap();
        let b = NonlinearityVector::zeros(4);
        assert!(matches!(ppnmm_image(&eye2(), &a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn likelihood_hand_values() {
        let y = SpectralImage::new(DMatrix::from_row_slice(2, 1, &[0.3, 0.4])).unwrap();
        let s2 = NoiseVariances::constant(2, 1.0).unwrap();
        assert_eq!(neg_log_likelihood(&y, y.data(), &s2).unwrap(), 0.0);
        let x = DMatrix::from_row_slice(2, 1, &[2.3, 0.4]);
        assert_abs_diff_eq!(neg_log_likelihood(&y, &x, &s2).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_variances_must_be_positive() {
        assert!(NoiseVariances::new(DVector::from_vec(vec![1.0, 0.0])).is_err());
        assert!(NoiseVariances::new(DVector::from_vec(vec![-1.0])).is_err());
    }

    #[test]
    fn potential_u_prior_only() {
        let m = EndmemberMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[0.2, 0.5, 0.9, 0.4, 0.1, 0.3, 0.6, 0.8, 0.2],
        ))
        .unwrap();
        let z = [0.5, 0.5];
        let a = stick_breaking_forward(&z).unwrap();
        let y = ppnmm_pixel(&m, &a, 0.2).unwrap();
        let s2 = NoiseVariances::constant(3, 0.01).unwrap();
        let u = potential_u(&z, y.as_slice(), &m, 0.2, &s2).unwrap();
        assert_abs_diff_eq!(u, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn potential_u_two_endmembers_has_no_prior() {
        let m = eye2();
        let s2 = NoiseVariances::constant(2, 1.0).unwrap();
        let y = [0.6, 0.4];
        let z = [0.4];
        assert_abs_diff_eq!(potential_u(&z, &y, &m, 0.0, &s2).unwrap(), 0.0, epsilon = 1e-15);
        let g = grad_u(&z, &y, &m, 0.0, &s2).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-15);
        let u = potential_u(&[0.5], &y, &m, 0.0, &s2).unwrap();
        assert_abs_diff_eq!(u, 0.5 * (0.01 + 0.01), epsilon = 1e-15);
    }

    #[test]
    fn potential_u_boundary_is_domain_error() {
        let m = eye2();
        let s2 = NoiseVariances::constant(2, 1.0).unwrap();
        assert!(matches!(
            potential_u(&[0.0], &[0.5, 0.5], &m, 0.0, &s2),
            Err(Error::Domain(_))
        ));
        assert!(grad_u(&[1.0], &[0.5, 0.5], &m, 0.0, &s2).is_err());
    }

    #[test]
    fn potential_v_hand_value() {
        let a = AbundanceMatrix::new(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let b = NonlinearityVector::new(DVector::from_vec(vec![1.0])).unwrap();
        let v = potential_v(&[0.5], &[0.9], &a, &b, 1.0, f64::INFINITY, &[0.1]).unwrap();
        assert_abs_diff_eq!(v, 0.01125, epsilon = 1e-15);
    }

    #[test]
    fn potential_v_zero_at_fit() {
        let a = AbundanceMatrix::new(DMatrix::from_row_slice(2, 2, &[0.3, 0.6, 0.7, 0.4])).unwrap();
        let b = NonlinearityVector::zeros(2);
        let m = [0.2, 0.8];
        let y: Vec<f64> = (0..2)
            .map(|n| a.pixel(n)[0] * m[0] + a.pixel(n)[1] * m[1])
            .collect();
        assert_abs_diff_eq!(potential_v(&m, &y, &a, &b, 0.1, 50.0, &m).unwrap(), 0.0, epsilon = 1e-15);
        let g = grad_v(&m, &y, &a, &b, 0.1, 50.0, &m).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
        assert!(potential_v(&m, &y, &a, &b, 0.0, 50.0, &m).is_err());
        assert!(grad_v(&m, &y, &a, &b, 0.1, -1.0, &m).is_err());
    }

    #[test]
    fn type_invariants() {
        assert!(SpectralImage::new(DMatrix::zeros(1, 4)).is_err());
        assert!(SpectralImage::new(DMatrix::from_element(2, 2, f64::NAN)).is_err());
        assert!(EndmemberMatrix::new(DMatrix::from_element(3, 2, 1.2)).is_err());
        assert!(EndmemberMatrix::new(DMatrix::from_element(2, 3, 0.5)).is_err());
        assert!(AbundanceMatrix::new(DMatrix::from_row_slice(2, 1, &[0.5, 0.6])).is_err());
        assert!(LatentCoefficients::new(DMatrix::from_element(1, 2, 1.0)).is_err());
        let img = SpectralImage::new(DMatrix::zeros(2, 3)).unwrap();
        assert!(img.clone().with_wavelengths(vec![400.0]).is_err());
        assert_eq!(img.with_wavelengths(vec![400.0, 410.0]).unwrap().wavelengths().unwrap().len(), 2);
    }
}
