//! Hermitian spectral calculus, polar decompositions, and deterministic
//! orthonormal completions.
//!
//! All spectral operations share two numerical conventions:
//!
//! * **PSD tolerance** — eigenvalues at or above `−`[`PSD_EIG_TOL`] count as
//!   nonnegative and are clamped to zero; anything lower is a positivity error.
//! * **Support cutoff** — for kernel-sensitive functions (`log2`,
//!   `inv_sqrt_on_support`) eigenvalues below [`SUPPORT_CUTOFF_REL`]` × λ_max`
//!   belong to the kernel and are excluded (mapped to zero).

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::tensor::{assert_hermitian, basis_vec, hermitian_part, CMat, CVec, C64, HERMITIAN_TOL};

/// Eigenvalues below `SUPPORT_CUTOFF_REL × λ_max` are treated as kernel.
pub const SUPPORT_CUTOFF_REL: f64 = 1e-10;

/// Eigenvalues of nominally-PSD matrices may undershoot zero by this much.
pub const PSD_EIG_TOL: f64 = 1e-10;

/// Relative singular-value cutoff used to detect rank deficiency.
const RANK_CUTOFF_REL: f64 = 1e-12;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEigen {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns.
    pub vectors: CMat,
}

impl HermEigen {
    /// Largest eigenvalue (0 for empty matrices).
    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Smallest eigenvalue (0 for empty matrices).
    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Kernel threshold for this spectrum: `SUPPORT_CUTOFF_REL × max(λ_max, 0)`.
    pub fn support_cutoff(&self) -> f64 {
        SUPPORT_CUTOFF_REL * self.max_value().max(0.0)
    }

    /// Reassembles `V f(Λ) V†` for a scalar function of the eigenvalues.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> CMat {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let fv = C64::new(f(v), 0.0);
            for r in 0..d {
                scaled[(r, k)] *= fv;
            }
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }
}

/// Eigendecomposition of a Hermitian matrix (verified within
/// [`HERMITIAN_TOL`](crate::tensor::HERMITIAN_TOL) per entry, then
/// symmetrized before decomposing).
pub fn herm_eigen(m: &CMat) -> Result<HermEigen> {
    assert_hermitian(m, HERMITIAN_TOL)?;
    herm_eigen_unchecked(m)
}

/// The unitary discrete-Fourier matrix `F[j,k] = e^{2πi·jk/d}/√d`. The index
/// product is reduced mod `d` in integer arithmetic so every entry is exact.
fn fourier_unitary(d: usize) -> CMat {
    let scale = 1.0 / (d as f64).sqrt();
    CMat::from_fn(d, d, |j, k| {
        let t = (j * k) % d;
        let angle = 2.0 * std::f64::consts::PI * (t as f64) / (d as f64);
        C64::new(angle.cos() * scale, angle.sin() * scale)
    })
}

/// Eigendecomposition that symmetrizes without checking; for internal use on
/// matrices that are Hermitian by construction up to rounding.
pub fn herm_eigen_unchecked(m: &CMat) -> Result<HermEigen> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let h = hermitian_part(m);
    let mut eig = SymmetricEigen::new(h.clone());
    let mut back: Option<CMat> = None;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        // The QL iteration can break down on exactly-sparse matrices (e.g.
        // tensor powers of low-rank states). Conjugating by the dense Fourier
        // unitary leaves the spectrum untouched and restores convergence; the
        // eigenvectors are rotated back afterwards.
        let f = fourier_unitary(h.nrows());
        eig = SymmetricEigen::new(hermitian_part(&(f.adjoint() * &h * &f)));
        back = Some(f);
    }
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("non-finite eigenvalue".into()));
    }
    let mut vectors = CMat::zeros(d, d);
    for (new, &old) in order.iter().enumerate() {
        vectors.set_column(new, &eig.eigenvectors.column(old));
    }
    if let Some(f) = back {
        vectors = f * vectors;
    }
    Ok(HermEigen { values, vectors })
}

/// Spectral function selector for [`herm_fn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HermFn {
    /// Principal square root (PSD input required).
    Sqrt,
    /// Base-2 logarithm on the support; kernel eigenvalues excluded (mapped to 0).
    Log2,
    /// `λ^{-1/2}` on the support, 0 on the kernel (PSD input required).
    InvSqrtOnSupport,
    /// `2^λ` on the whole spectrum.
    Exp2,
}

/// Applies a scalar function to a Hermitian matrix spectrally.
pub fn herm_fn(m: &CMat, f: HermFn) -> Result<CMat> {
    let eig = herm_eigen(m)?;
    herm_fn_of_eigen(&eig, f)
}

/// [`herm_fn`] on a precomputed eigendecomposition.
pub fn herm_fn_of_eigen(eig: &HermEigen, f: HermFn) -> Result<CMat> {
    let needs_psd = matches!(f, HermFn::Sqrt | HermFn::Log2 | HermFn::InvSqrtOnSupport);
    if needs_psd && eig.min_value() < -PSD_EIG_TOL {
        return Err(Error::NotPositive(eig.min_value()));
    }
    let cutoff = eig.support_cutoff();
    Ok(match f {
        HermFn::Sqrt => eig.reassemble(|v| v.max(0.0).sqrt()),
        HermFn::Log2 => eig.reassemble(|v| if v > cutoff { v.log2() } else { 0.0 }),
        HermFn::InvSqrtOnSupport => {
            eig.reassemble(|v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 })
        }
        HermFn::Exp2 => eig.reassemble(|v| v.exp2()),
    })
}

/// Principal square root of a PSD matrix.
pub fn sqrtm_psd(m: &CMat) -> Result<CMat> {
    herm_fn(m, HermFn::Sqrt)
}

/// Projector onto the support (eigenvalues above the cutoff) and its rank.
pub fn support_projector(m: &CMat) -> Result<(CMat, usize)> {
    let eig = herm_eigen(m)?;
    let cutoff = eig.support_cutoff();
    let rank = eig.values.iter().filter(|&&v| v > cutoff).count();
    Ok((eig.reassemble(|v| if v > cutoff { 1.0 } else { 0.0 }), rank))
}

/// Euclidean projection onto the PSD cone (eigenvalue clipping). Returns the
/// projected matrix and the most negative input eigenvalue (0 when already PSD).
pub fn psd_project(m: &CMat) -> Result<(CMat, f64)> {
    let eig = herm_eigen_unchecked(m)?;
    let worst = eig.min_value().min(0.0);
    Ok((eig.reassemble(|v| v.max(0.0)), worst))
}

/// Unitary polar factor of a square matrix.
///
/// For `m = W Σ V†` this returns the unitary carrying `V`'s singular directions
/// onto `W`'s; on the rank-deficient complement both bases are completed
/// deterministically over the computational basis, so the result is
/// reproducible. `Tr(polar_unitary(m)† m)` equals the nuclear norm of `m`.
pub fn polar_unitary(m: &CMat) -> Result<CMat> {
    Ok(polar_with_nuclear(m)?.0)
}

/// [`polar_unitary`] together with the nuclear norm `Σ σ_k`.
pub fn polar_with_nuclear(m: &CMat) -> Result<(CMat, f64)> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "polar decomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = m.nrows();
    let svd = m.clone().svd(true, true);
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Decomposition("svd did not return U".into()))?;
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Decomposition("svd did not return V^†".into()))?;
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let nuclear: f64 = svd.singular_values.iter().sum();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_CUTOFF_REL * sigma_max)
        .count();
    let mut w_cols: Vec<CVec> = (0..rank).map(|k| u.column(k).into_owned()).collect();
    let mut v_cols: Vec<CVec> = (0..rank)
        .map(|k| v_t.row(k).adjoint().column(0).into_owned())
        .collect();
    complete_orthonormal(&mut w_cols, d)?;
    complete_orthonormal(&mut v_cols, d)?;
    let mut out = CMat::zeros(d, d);
    for (w, v) in w_cols.iter().zip(&v_cols) {
        out += w * v.adjoint();
    }
    Ok((out, nuclear))
}

/// Extends a set of orthonormal columns to a full orthonormal basis of
/// dimension `dim`, deterministically: at every step the computational basis
/// vector with the largest residual (lowest index on ties) is orthonormalized
/// and appended.
pub fn complete_orthonormal(cols: &mut Vec<CVec>, dim: usize) -> Result<()> {
    if cols.len() > dim {
        return Err(Error::Shape(format!(
            "{} columns cannot be orthonormal in dimension {dim}",
            cols.len()
        )));
    }
    for c in cols.iter() {
        if c.len() != dim {
            return Err(Error::Shape(format!(
                "column of length {} in dimension {dim}",
                c.len()
            )));
        }
    }
    let mut residuals: Vec<CVec> = (0..dim)
        .map(|k| {
            let mut r = basis_vec(dim, k);
            for b in cols.iter() {
                let overlap = b.dotc(&r);
                r -= b * overlap;
            }
            r
        })
        .collect();
    while cols.len() < dim {
        let (best, best_norm) = residuals
            .iter()
            .map(|r| r.norm())
            .enumerate()
            .fold((0usize, -1.0f64), |acc, (k, n)| if n > acc.1 { (k, n) } else { acc });
        if best_norm < 1e-12 {
            return Err(Error::Decomposition(
                "orthonormal completion found no independent direction".into(),
            ));
        }
        let mut v = residuals[best].clone() / C64::new(best_norm, 0.0);
        // One extra orthogonalization round for numerical hygiene.
        for b in cols.iter() {
            let overlap = b.dotc(&v);
            v -= b * overlap;
        }
        v /= C64::new(v.norm(), 0.0);
        for r in residuals.iter_mut() {
            let overlap = v.dotc(r);
            *r -= &v * overlap;
        }
        cols.push(v);
    }
    Ok(())
}

/// Builds a unitary with the prescribed orthonormal columns at the given
/// column indices; every unprescribed column is filled deterministically by
/// [`complete_orthonormal`] in increasing index order.
pub fn unitary_completion(prescribed: &[(usize, CVec)], dim: usize) -> Result<CMat> {
    let mut seen = vec![false; dim];
    for (idx, col) in prescribed {
        if *idx >= dim {
            return Err(Error::Shape(format!("column index {idx} out of range {dim}")));
        }
        if seen[*idx] {
            return Err(Error::Shape(format!("column index {idx} prescribed twice")));
        }
        seen[*idx] = true;
        if col.len() != dim {
            return Err(Error::Shape(format!(
                "prescribed column has length {}, expected {dim}",
                col.len()
            )));
        }
    }
    // Verify the prescription is isometric.
    for (i, (_, a)) in prescribed.iter().enumerate() {
        for (j, (_, b)) in prescribed.iter().enumerate() {
            let overlap = a.dotc(b);
            let expect = if i == j { 1.0 } else { 0.0 };
            if (overlap - C64::new(expect, 0.0)).norm() > 1e-9 {
                return Err(Error::InvalidArgument(
                    "prescribed columns are not orthonormal within 1e-9".into(),
                ));
            }
        }
    }
    let mut cols: Vec<CVec> = prescribed.iter().map(|(_, c)| c.clone()).collect();
    complete_orthonormal(&mut cols, dim)?;
    let mut u = CMat::zeros(dim, dim);
    let mut fill = prescribed.len();
    for idx in 0..dim {
        if let Some((_, col)) = prescribed.iter().find(|(i, _)| *i == idx) {
            u.set_column(idx, col);
        } else {
            u.set_column(idx, &cols[fill]);
            fill += 1;
        }
    }
    Ok(u)
}

/// Frobenius distance of `u† u` from the identity.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let d = u.ncols();
    (u.adjoint() * u - CMat::identity(d, d)).norm()
}
