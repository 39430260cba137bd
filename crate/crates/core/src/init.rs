//! Endmember prior means from the data: maximum-volume purest-pixel
//! selection in the principal subspace (N-FINDR style).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::pca_raw;
use crate::model::{EndmemberMatrix, SpectralImage};

const MAX_SWEEPS: usize = 100;

/// Relative singular-value floor below which the data are considered rank deficient.
const RANK_TOL: f64 = 1e-9;

/// Indices of the `r` pixels spanning the largest simplex in the
/// `(r-1)`-dimensional principal subspace.
pub fn select_purest_pixels(y: &SpectralImage, r: usize) -> Result<Vec<usize>> {
    let n = y.n_pixels();
    if r < 2 {
        return Err(Error::Domain(format!("need at least 2 endmembers, got {r}")));
    }
    if n < r {
        return Err(Error::Domain(format!("{n} pixels cannot provide {r} endmembers")));
    }
    if r - 1 > y.n_bands() {
        return Err(Error::Domain(format!(
            "{r} endmembers need at least {} bands",
            r - 1
        )));
    }
    let pca = pca_raw(y.data(), r - 1)?;
    let sv = &pca.singular_values;
    if sv[0] <= 0.0 || sv[r - 2] <= RANK_TOL * sv[0] {
        return Err(Error::Numerical(format!(
            "the data span fewer than {} dimensions; supply the endmember prior means explicitly",
            r - 1
        )));
    }
    let coords = &pca.scores;

    let mut chosen = grow_simplex(coords, r);
    let mut volume = simplex_volume(coords, &chosen);
    for _ in 0..MAX_SWEEPS {
        let mut improved = false;
        for slot in 0..r {
            for cand in 0..n {
                if chosen.contains(&cand) {
                    continue;
                }
                let old = chosen[slot];
                chosen[slot] = cand;
                let v = simplex_volume(coords, &chosen);
                if v > volume * (1.0 + 1e-12) {
                    volume = v;
                    improved = true;
                } else {
                    chosen[slot] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    if !(volume > 0.0) {
        return Err(Error::Numerical(
            "degenerate simplex; supply the endmember prior means explicitly".into(),
        ));
    }
    Ok(chosen)
}

/// Prior endmember means: spectra of the selected purest pixels clamped to `[0, 1]`.
pub fn init_endmember_prior(y: &SpectralImage, r: usize) -> Result<EndmemberMatrix> {
    let chosen = select_purest_pixels(y, r)?;
    let mut m = DMatrix::zeros(y.n_bands(), r);
    for (c, &idx) in chosen.iter().enumerate() {
        m.set_column(c, &y.data().column(idx).map(|v| v.clamp(0.0, 1.0)));
    }
    EndmemberMatrix::new(m)
}

/// Greedy start: the point farthest from the mean, then repeatedly the point
/// farthest from the affine hull of the chosen vertices.
fn grow_simplex(coords: &DMatrix<f64>, r: usize) -> Vec<usize> {
    let n = coords.ncols();
    let first = (0..n)
        .max_by(|&i, &j| coords.column(i).norm().total_cmp(&coords.column(j).norm()))
        .unwrap_or(0);
    let mut chosen = vec![first];
    let origin = coords.column(first).into_owned();
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    while chosen.len() < r {
        let mut best = (None, -1.0);
        for i in 0..n {
            if chosen.contains(&i) {
                continue;
            }
            let mut d = coords.column(i) - &origin;
            for e in &basis {
                let c = e.dot(&d);
                d -= e * c;
            }
            let dist = d.norm();
            if dist > best.1 {
                best = (Some((i, d)), dist);
            }
        }
        let Some((i, d)) = best.0 else { break };
        chosen.push(i);
        if best.1 > 0.0 {
            basis.push(d / best.1);
        }
    }
    chosen
}

/// Unnormalized simplex volume `|det[v_1 - v_0, ..., v_{k} - v_0]|`.
fn simplex_volume(coords: &DMatrix<f64>, vertices: &[usize]) -> f64 {
    let d = coords.nrows();
    let v0 = coords.column(vertices[0]);
    let mut edges = DMatrix::zeros(d, vertices.len() - 1);
    for (c, &v) in vertices[1..].iter().enumerate() {
        edges.set_column(c, &(coords.column(v) - v0));
    }
    edges.determinant().abs()
}
