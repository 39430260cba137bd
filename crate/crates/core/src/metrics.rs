//! Scoring of unmixing results and chain diagnostics.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gibbs::{Chain, UnmixResult};
use crate::model::{ppnmm_image, AbundanceMatrix, EndmemberMatrix, SpectralImage};

/// Upper cap reported for a potential scale reduction factor whose
/// within-chain variance vanishes.
pub const PSRF_SENTINEL: f64 = 1e12;

/// Posterior nonzero probability below which a pixel is declared linear.
pub const LINEAR_THRESHOLD: f64 = 0.5;

/// Root normalized mean square error between abundance matrices.
pub fn rnmse(a_true: &AbundanceMatrix, a_hat: &AbundanceMatrix) -> Result<f64> {
    rms_diff(a_true.data(), a_hat.data())
}

/// Reconstruction error between observations and their model reconstruction.
pub fn re(y: &SpectralImage, y_hat: &DMatrix<f64>) -> Result<f64> {
    rms_diff(y.data(), y_hat)
}

fn rms_diff(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::Dimension(format!(
            "{:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let ss: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / x.len() as f64).sqrt())
}

/// Spectral angle (radians) between two spectra.
pub fn sam(m_true: &[f64], m_hat: &[f64]) -> Result<f64> {
    if m_true.len() != m_hat.len() {
        return Err(Error::Dimension(format!(
            "spectra of {} and {} bands",
            m_true.len(),
            m_hat.len()
        )));
    }
    let nt = m_true.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nh = m_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nt == 0.0 || nh == 0.0 {
        return Err(Error::Domain("spectral angle of a zero-norm spectrum".into()));
    }
    let inner: f64 = m_true.iter().zip(m_hat).map(|(a, b)| a * b).sum();
    Ok((inner / (nt * nh)).clamp(-1.0, 1.0).acos())
}

/// Column matching between reference and estimated endmembers.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `aligned[:, r] = m_hat[:, permutation[r]]`.
    pub permutation: Vec<usize>,
    pub aligned: DMatrix<f64>,
    pub sam: Vec<f64>,
}

impl Alignment {
    pub fn total_sam(&self) -> f64 {
        self.sam.iter().sum()
    }

    /// Reorders abundance rows with the same permutation.
    pub fn apply_to_abundances(&self, a_hat: &AbundanceMatrix) -> AbundanceMatrix {
        let data = a_hat.data();
        let mut out = DMatrix::zeros(data.nrows(), data.ncols());
        for (r, &src) in self.permutation.iter().enumerate() {
            out.row_mut(r).copy_from(&data.row(src));
        }
        AbundanceMatrix::new(out).expect("row permutation keeps the simplex")
    }
}

fn sam_cost(m_true: &DMatrix<f64>, m_hat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = m_true.ncols();
    let mut cost = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            cost[(i, j)] = sam(
                m_true.column(i).as_slice(),
                m_hat.column(j).as_slice(),
            )?;
        }
    }
    Ok(cost)
}

/// Finds the column permutation of `m_hat` minimizing the total spectral
/// angle to `m_true`: exhaustive search up to 8 endmembers, Hungarian
/// assignment above.
pub fn align_endmembers(m_true: &EndmemberMatrix, m_hat: &EndmemberMatrix) -> Result<Alignment> {
    if m_true.data().shape() != m_hat.data().shape() {
        return Err(Error::Dimension(format!(
            "{:?} vs {:?}",
            m_true.data().shape(),
            m_hat.data().shape()
        )));
    }
    let cost = sam_cost(m_true.data(), m_hat.data())?;
    let r = cost.nrows();
    let permutation = if r <= 8 {
        exhaustive_assignment(&cost)
    } else {
        hungarian(&cost)
    };
    let mut aligned = DMatrix::zeros(m_hat.n_bands(), r);
    for (dst, &src) in permutation.iter().enumerate() {
        aligned.set_column(dst, &m_hat.data().column(src));
    }
    let sam = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[(i, j)])
        .collect();
    Ok(Alignment {
        permutation,
        aligned,
        sam,
    })
}

/// Minimum-cost assignment by enumerating every permutation.
pub fn exhaustive_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let r = cost.nrows();
    let mut best = (f64::INFINITY, (0..r).collect::<Vec<_>>());
    for perm in (0..r).permutations(r) {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        if total < best.0 {
            best = (total, perm);
        }
    }
    best.1
}

/// Minimum-cost assignment of a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns `assignment[row] = column`.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    // 1-based arrays; index 0 is the virtual start column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

/// Principal-component projection of the pixels of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// Per-band mean removed before projecting.
    pub mean: DVector<f64>,
    /// `L x k` orthonormal spectral directions.
    pub basis: DMatrix<f64>,
    /// `k x N` pixel coordinates.
    pub scores: DMatrix<f64>,
    /// All singular values of the centered data, descending.
    pub singular_values: Vec<f64>,
}

impl Pca {
    /// Coordinates of arbitrary spectra (columns of `x`) in the component basis.
    pub fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut centered = x.clone();
        for mut col in centered.column_iter_mut() {
            col -= &self.mean;
        }
        self.basis.transpose() * centered
    }

    /// Fraction of the total variance carried by each retained component.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        self.singular_values[..self.basis.ncols()]
            .iter()
            .map(|s| if total > 0.0 { s * s / total } else { 0.0 })
            .collect()
    }
}

/// Projects the mean-centered pixels onto the top-`k` principal directions.
///
/// Each basis vector is signed so that its largest-magnitude loading is positive.
pub fn pca_project(y: &SpectralImage, k: usize) -> Result<Pca> {
    pca_raw(y.data(), k)
}

pub(crate) fn pca_raw(data: &DMatrix<f64>, k: usize) -> Result<Pca> {
    let (l, n) = data.shape();
    if k == 0 || k > l.min(n) {
        return Err(Error::Domain(format!(
            "{k} components requested from {l} bands and {n} pixels"
        )));
    }
    let mean = data.column_mean();
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let scatter = &centered * centered.transpose();
    let eig = SymmetricEigen::new(scatter);
    let order: Vec<usize> = (0..l)
        .sorted_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]))
        .collect();
    let singular_values: Vec<f64> = order
        .iter()
        .take(l.min(n))
        .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
        .collect();
    let mut basis = DMatrix::zeros(l, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (j, x)| if x.abs() > acc.1 { (j, x.abs()) } else { acc });
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        basis.set_column(c, &v);
    }
    let scores = basis.transpose() * &centered;
    Ok(Pca {
        mean,
        basis,
        scores,
        singular_values,
    })
}

// ---------------------------------------------------------------------------
// Nonlinearity summary
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct BSummary {
    /// Bin edges, `counts.len() + 1` entries.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Fraction of pixels whose posterior nonzero probability is below 0.5.
    pub linear_fraction: f64,
}

/// Histogram of the estimated nonlinearity coefficients over their observed
/// range and the fraction of pixels declared linear.
pub fn b_summary(b_hat: &[f64], b_nonzero_prob: &[f64], bins: usize) -> Result<BSummary> {
    if b_hat.len() != b_nonzero_prob.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients, {} probabilities",
            b_hat.len(),
            b_nonzero_prob.len()
        )));
    }
    if b_hat.is_empty() || bins == 0 {
        return Err(Error::Domain("empty histogram".into()));
    }
    let lo = b_hat.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = b_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (edges, counts) = if hi == lo {
        (vec![lo, hi], vec![b_hat.len()])
    } else {
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for v in b_hat {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        (edges, counts)
    };
    let linear = b_nonzero_prob
        .iter()
        .filter(|p| **p < LINEAR_THRESHOLD)
        .count();
    Ok(BSummary {
        edges,
        counts,
        linear_fraction: linear as f64 / b_hat.len() as f64,
    })
}

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rnmse: f64,
    pub sam_per_endmember: Vec<f64>,
    pub sam_average: f64,
    pub re: f64,
    pub permutation: Vec<usize>,
    pub b_histogram: BSummary,
    pub linear_fraction: f64,
}

impl EvalReport {
    /// `key=value` lines; angles in degrees when `degrees` is set.
    pub fn to_key_value(&self, degrees: bool) -> String {
        let ang = |v: f64| if degrees { v.to_degrees() } else { v };
        let mut out = String::new();
        out.push_str(&format!("rnmse={:.17e}\n", self.rnmse));
        out.push_str(&format!("re={:.17e}\n", self.re));
        out.push_str(&format!("sam_unit={}\n", if degrees { "deg" } else { "rad" }));
        out.push_str(&format!("sam_average={:.17e}\n", ang(self.sam_average)));
        for (r, s) in self.sam_per_endmember.iter().enumerate() {
            out.push_str(&format!("sam_{r}={:.17e}\n", ang(*s)));
        }
        out.push_str(&format!(
            "permutation={}\n",
            self.permutation.iter().join(",")
        ));
        out.push_str(&format!("linear_fraction={:.17e}\n", self.linear_fraction));
        out
    }
}

/// Scores an unmixing result against ground truth. The reconstruction uses
/// the MMSE estimates pushed through the forward model.
pub fn evaluate(
    y: &SpectralImage,
    m_true: &EndmemberMatrix,
    a_true: &AbundanceMatrix,
    result: &UnmixResult,
) -> Result<EvalReport> {
    let alignment = align_endmembers(m_true, &result.m_hat)?;
    let a_aligned = alignment.apply_to_abundances(&result.a_hat);
    let rnmse = rnmse(a_true, &a_aligned)?;
    let y_hat = ppnmm_image(&result.m_hat, &result.a_hat, &result.b_hat)?;
    let re = re(y, &y_hat)?;
    let b_histogram = b_summary(
        result.b_hat.as_slice(),
        result.b_nonzero_prob.as_slice(),
        50,
    )?;
    let sam_average = alignment.total_sam() / alignment.sam.len() as f64;
    Ok(EvalReport {
        rnmse,
        sam_per_endmember: alignment.sam.clone(),
        sam_average,
        re,
        permutation: alignment.permutation,
        linear_fraction: b_histogram.linear_fraction,
        b_histogram,
    })
}

// ---------------------------------------------------------------------------
// Chain diagnostics
// ---------------------------------------------------------------------------

/// Scalar summaries of one chain: one row per kept sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrace {
    pub names: Vec<String>,
    /// `kept x names.len()`.
    pub values: DMatrix<f64>,
    pub accept_z: Vec<f64>,
    pub accept_m: Vec<f64>,
    pub divergences_z: usize,
    pub divergences_m: usize,
}

impl ScalarTrace {
    pub fn from_chain(chain: &Chain) -> Self {
        let names = Chain::TRACE_NAMES.iter().map(|s| s.to_string()).collect();
        Self {
            names,
            values: chain.scalar_trace(),
            accept_z: chain.accept_z.clone(),
            accept_m: chain.accept_m.clone(),
            divergences_z: chain.divergences_z.iter().sum(),
            divergences_m: chain.divergences_m.iter().sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostics {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub lag1_autocorrelation: f64,
    pub psrf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub n_chains: usize,
    pub params: Vec<ParamDiagnostics>,
    pub mean_accept_z: Vec<f64>,
    pub mean_accept_m: Vec<f64>,
    pub divergences: Vec<(usize, usize)>,
}

impl DiagnosticsReport {
    pub fn to_key_value(&self) -> String {
        let mut out = format!("n_chains={}\n", self.n_chains);
        for p in &self.params {
            out.push_str(&format!("{}.mean={:.17e}\n", p.name, p.mean));
            out.push_str(&format!("{}.sd={:.17e}\n", p.name, p.sd));
            out.push_str(&format!("{}.lag1_autocorrelation={:.17e}\n", p.name, p.lag1_autocorrelation));
            if let Some(r) = p.psrf {
                out.push_str(&format!("{}.psrf={:.17e}\n", p.name, r));
            }
        }
        for (c, (az, am)) in self.mean_accept_z.iter().zip(&self.mean_accept_m).enumerate() {
            out.push_str(&format!("chain{c}.accept_z={az:.17e}\n"));
            out.push_str(&format!("chain{c}.accept_m={am:.17e}\n"));
            let (dz, dm) = self.divergences[c];
            out.push_str(&format!("chain{c}.divergences_z={dz}\n"));
            out.push_str(&format!("chain{c}.divergences_m={dm}\n"));
        }
        out
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Potential scale reduction factor `sqrt((W + B/n) / W)` over equal-length
/// chains, with `W` the mean within-chain variance and `B/n` the variance of
/// the chain means. Identical chains give exactly 1; zero within-chain
/// variance with distinct means gives [`PSRF_SENTINEL`].
pub fn psrf(chains: &[&[f64]]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::Domain("potential scale reduction needs two chains".into()));
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if n < 2 {
        return Err(Error::Domain("chains need at least two samples".into()));
    }
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| mean_var(&c[..n])).collect();
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let w = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    let (_, b_over_n) = mean_var(&means);
    if w == 0.0 {
        return Ok(if b_over_n == 0.0 { 1.0 } else { PSRF_SENTINEL });
    }
    Ok(((w + b_over_n) / w).sqrt().min(PSRF_SENTINEL))
}

fn lag1(x: &[f64]) -> f64 {
    let (mean, var) = mean_var(x);
    if x.len() < 3 || var == 0.0 {
        return 0.0;
    }
    let c: f64 = x
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum::<f64>()
        / (x.len() - 1) as f64;
    c / var
}

/// Trace statistics of each scalar parameter, PSRF when at least two chains
/// are given, post-burn-in acceptance means and divergence counts.
pub fn diagnose(traces: &[ScalarTrace]) -> Result<DiagnosticsReport> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Domain("no chains to diagnose".into()))?;
    if traces.iter().any(|t| t.names != first.names) {
        return Err(Error::Dimension("chains record different parameters".into()));
    }
    let mut params = Vec::with_capacity(first.names.len());
    for (p, name) in first.names.iter().enumerate() {
        let cols: Vec<Vec<f64>> = traces
            .iter()
            .map(|t| t.values.column(p).iter().copied().collect())
            .collect();
        let pooled: Vec<f64> = cols.iter().flatten().copied().collect();
        if pooled.is_empty() {
            return Err(Error::EmptyChain);
        }
        let (mean, var) = mean_var(&pooled);
        let psrf = if cols.len() >= 2 {
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            Some(psrf(&refs)?)
        } else {
            None
        };
        params.push(ParamDiagnostics {
            name: name.clone(),
            mean,
            sd: var.sqrt(),
            lag1_autocorrelation: lag1(&cols[0]),
            psrf,
        });
    }
    let avg = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(DiagnosticsReport {
        n_chains: traces.len(),
        params,
        mean_accept_z: traces.iter().map(|t| avg(&t.accept_z)).collect(),
        mean_accept_m: traces.iter().map(|t| avg(&t.accept_m)).collect(),
        divergences: traces
            .iter()
            .map(|t| (t.divergences_z, t.divergences_m))
            .collect(),
    })
}

/// [`diagnose`] applied to in-memory chains.
pub fn diagnostics(chains: &[Chain]) -> Result<DiagnosticsReport> {
    let traces: Vec<ScalarTrace> = chains.iter().map(ScalarTrace::from_chain).collect();
    diagnose(&traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn rnmse_hand_value() {
        let a = AbundanceMatrix::new(DMatrix::from_row_slice(2, 1, &[0.5, 0.5])).unwrap();
        let b = AbundanceMatrix::new(DMatrix::from_row_slice(2, 1, &[0.6, 0.4])).unwrap();
        assert_eq!(rnmse(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(rnmse(&a, &b).unwrap(), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn rnmse_shape_mismatch() {
        let a = AbundanceMatrix::new(DMatrix::from_element(2, 1, 0.5)).unwrap();
        let b = AbundanceMatrix::new(DMatrix::from_element(2, 2, 0.5)).unwrap();
        assert!(matches!(rnmse(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn sam_cases() {
        assert_eq!(sam(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_abs_diff_eq!(sam(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(sam(&[0.2, 0.7, 0.1], &[0.6, 2.1, 0.3]).unwrap(), 0.0, epsilon = 1e-7);
        assert!(sam(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn re_constant_residual() {
        let y = SpectralImage::new(DMatrix::from_element(3, 4, 0.5)).unwrap();
        let y_hat = DMatrix::from_element(3, 4, 0.52);
        assert_abs_diff_eq!(re(&y, &y_hat).unwrap(), 0.02, epsilon = 1e-12);
        assert_eq!(re(&y, y.data()).unwrap(), 0.0);
    }

    #[test]
    fn alignment_recovers_swap() {
        let m = DMatrix::from_row_slice(3, 2, &[0.1, 0.9, 0.5, 0.2, 0.8, 0.4]);
        let mut swapped = m.clone();
        swapped.swap_columns(0, 1);
        let mt = EndmemberMatrix::new(m).unwrap();
        let al = align_endmembers(&mt, &EndmemberMatrix::new(swapped).unwrap()).unwrap();
        assert_eq!(al.permutation, vec![1, 0]);
        assert!(al.total_sam() < 1e-7);
        let id = align_endmembers(&mt, &mt).unwrap();
        assert_eq!(id.permutation, vec![0, 1]);
    }

    #[test]
    fn psrf_identical_and_constant() {
        let a = [1.0, 2.0, 3.0, 2.5];
        assert_eq!(psrf(&[&a, &a]).unwrap(), 1.0);
        assert_eq!(psrf(&[&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]]).unwrap(), PSRF_SENTINEL);
        assert!(psrf(&[&a]).is_err());
    }

    #[test]
    fn b_summary_all_zero() {
        let s = b_summary(&[0.0; 10], &[0.0; 10], 50).unwrap();
        assert_eq!(s.counts, vec![10]);
        assert_eq!(s.edges, vec![0.0, 0.0]);
        assert_eq!(s.linear_fraction, 1.0);
    }

    #[test]
    fn b_summary_spans_range() {
        let b: Vec<f64> = (0..61).map(|i| -0.3 + 0.01 * i as f64).collect();
        let p = vec![1.0; b.len()];
        let s = b_summary(&b, &p, 50).unwrap();
        assert_abs_diff_eq!(s.edges[0], -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(*s.edges.last().unwrap(), 0.3, epsilon = 1e-12);
        assert_eq!(s.counts.iter().sum::<usize>(), 61);
        assert_eq!(s.linear_fraction, 0.0);
    }

    #[test]
    fn pca_rank_one() {
        let dir = DVector::from_vec(vec![0.2, 0.5, 0.1, 0.7]);
        let data = DMatrix::from_fn(4, 20, |l, n| 0.1 + dir[l] * (n as f64 / 10.0));
        let y = SpectralImage::new(data).unwrap();
        let pca = pca_project(&y, 2).unwrap();
        let ratio = pca.explained_variance_ratio();
        assert_abs_diff_eq!(ratio[0], 1.0, epsilon = 1e-10);
        assert!(pca_project(&y, 5).is_err());
        assert!(pca_project(&y, 0).is_err());
    }
}
