//! Dense linear algebra on the generator: stationary distribution,
//! resolvent, group inverse and the semigroup `e^{tL}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GeneratorMatrix, ScalarField};
use crate::report::ValidationReport;

/// Numerical nullity of `m`: singular values below `n·ε·σ_max`.
pub fn numerical_nullity(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let tol = m.nrows().max(1) as f64 * f64::EPSILON * max;
    sv.iter().filter(|&&s| s <= tol).count()
}

/// 1-norm condition estimate `‖A‖₁‖A⁻¹‖₁` (exact inverse, small matrices).
pub fn condition_estimate(a: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    let norm1 = |m: &DMatrix<f64>| {
        m.column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    norm1(a) * norm1(inv)
}

/// Stationary distribution `ρ` with `ρL = 0`, `Σρ = 1`.
///
/// Solves `Lᵀρ = 0` with the last equation replaced by the normalization.
pub fn stationary_distribution(l: &GeneratorMatrix) -> Result<ScalarField> {
    let n = l.n();
    let nullity = numerical_nullity(l.matrix());
    if nullity > 1 {
        return Err(Error::SingularBeyondNullity { nullity });
    }
    let mut a = l.matrix().transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let rho = a
        .lu()
        .solve(&b)
        .ok_or(Error::SingularBeyondNullity { nullity: 2 })?;
    Ok(ScalarField::new(rho.iter().copied().collect()))
}

/// `‖ρL‖∞`.
pub fn stationarity_residual(l: &GeneratorMatrix, rho: &[f64]) -> f64 {
    let n = l.n();
    (0..n)
        .map(|y| (0..n).map(|x| rho[x] * l[(x, y)]).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// Resolvent `(I + α𝓛)⁻¹ = (I − αL)⁻¹` for `α > 0`.
pub fn resolvent(l: &GeneratorMatrix, alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("resolvent needs α > 0, got {alpha}")));
    }
    let n = l.n();
    let m = DMatrix::identity(n, n) - l.matrix() * alpha;
    m.lu()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("I − αL is singular".into()))
}

/// The group inverse `L#` of a generator, together with the stationary
/// distribution used to build it.
#[derive(Debug, Clone, Serialize)]
pub struct GroupInverse {
    #[serde(serialize_with = "serialize_matrix")]
    matrix: DMatrix<f64>,
    stationary: Vec<f64>,
    condition_estimate: f64,
}

pub(crate) fn serialize_matrix<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in m.row_iter() {
        seq.serialize_element(&r.iter().copied().collect::<Vec<_>>())?;
    }
    seq.end()
}

impl GroupInverse {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Condition estimate of the shifted matrix `L + 1ρ`.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// `-L# f`, the centered solution of `LV + f = 0` for centered `f`.
    pub fn solve_centered(&self, f: &[f64]) -> Vec<f64> {
        let n = self.matrix.nrows();
        (0..n)
            .map(|x| -(0..n).map(|y| self.matrix[(x, y)] * f[y]).sum::<f64>())
            .collect()
    }
}

/// `L# = (L + 1ρ)⁻¹ − 1ρ`.
pub fn group_inverse(l: &GeneratorMatrix) -> Result<GroupInverse> {
    let n = l.n();
    let rho = stationary_distribution(l)?.into_values();
    let pi = DMatrix::from_fn(n, n, |_, y| rho[y]);
    let shifted = l.matrix() + &pi;
    let inv = shifted
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularBeyondNullity { nullity: 2 })?;
    let condition_estimate = condition_estimate(&shifted, &inv);
    Ok(GroupInverse {
        matrix: inv - pi,
        stationary: rho,
        condition_estimate,
    })
}

/// Residuals `‖LXL − L‖`, `‖XLX − X‖`, `‖LX − XL‖` (max norm), each checked
/// against `1e-9·‖L‖`.
pub fn verify_group_axioms(l: &GeneratorMatrix, x: &DMatrix<f64>) -> Result<ValidationReport> {
    verify_group_axioms_with(l, x, 1e-9)
}

/// [`verify_group_axioms`] with tolerance `rel·‖L‖`.
pub fn verify_group_axioms_with(
    l: &GeneratorMatrix,
    x: &DMatrix<f64>,
    rel: f64,
) -> Result<ValidationReport> {
    let a = l.matrix();
    if x.shape() != a.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: x.nrows(),
        });
    }
    let tol = rel * l.norm();
    let mut r = ValidationReport::new();
    r.check_le("LXL=L", (a * x * a - a).amax(), tol);
    r.check_le("XLX=X", (x * a * x - x).amax(), tol);
    r.check_le("LX=XL", (a * x - x * a).amax(), tol);
    Ok(r)
}

/// Eigenvalues of `L` (complex, unordered).
pub fn eigenvalues(l: &GeneratorMatrix) -> Vec<nalgebra::Complex<f64>> {
    l.matrix().clone().complex_eigenvalues().iter().copied().collect()
}

/// Spectral gap: the smallest `|Re λ|` over the eigenvalues of `L` other
/// than the zero eigenvalue.
pub fn spectral_gap(l: &GeneratorMatrix) -> f64 {
    let mut ev = eigenvalues(l);
    ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    ev.iter()
        .skip(1)
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min)
}

/// `e^{tL}`.
pub fn semigroup(l: &GeneratorMatrix, t: f64) -> DMatrix<f64> {
    (l.matrix() * t).exp()
}

/// `e^{tL} h`.
pub fn propagate(l: &GeneratorMatrix, h: &[f64], t: f64) -> Vec<f64> {
    let p = semigroup(l, t);
    let v = p * DVector::from_column_slice(h);
    v.iter().copied().collect()
}

/// `(e^{TL}h, ∫₀^T e^{tL}h dt)` from one exponential of the augmented matrix
/// `[[L, h], [0, 0]]`.
pub fn propagate_and_integrate(l: &GeneratorMatrix, h: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let n = l.n();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(l.matrix());
    for x in 0..n {
        aug[(x, n)] = h[x];
    }
    let e = (aug * t).exp();
    let propagated = (0..n)
        .map(|x| (0..n).map(|y| e[(x, y)] * h[y]).sum())
        .collect();
    let integral = (0..n).map(|x| e[(x, n)]).collect();
    (propagated, integral)
}
