//! Dense complex operators on the spin-star Hilbert space.
//!
//! [`Operator`] wraps a square `nalgebra` matrix of `Complex<R>` and adds
//! the handful of operations the rest of the crate is built from:
//! Kronecker products, commutators, the Hilbert–Schmidt inner product,
//! Hermitian eigendecomposition, `exp(-iHt)`, the trace norm and the
//! polar factor, and the partial trace over a leading tensor factor.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::linalg::{SymmetricEigen, SVD};
use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, modulus, phase_neg, Real};

/// Spatial axis of a spin operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<R: Real> {
    m: DMatrix<Complex<R>>,
}

impl<R: Real> Operator<R> {
    /// Wraps a square matrix.
    ///
    /// # Panics
    /// If `m` is not square.
    pub fn from_matrix(m: DMatrix<Complex<R>>) -> Self {
        assert!(m.is_square(), "operator matrix must be square");
        Self { m }
    }

    /// Builds a `dim × dim` operator from entries in row-major order.
    pub fn from_row_major(dim: usize, entries: &[Complex<R>]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: entries.len(),
            });
        }
        Ok(Self {
            m: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex<R>) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    /// Diagonal operator with real entries.
    pub fn diagonal(values: &[R]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| if i == j { c(values[i], R::zero()) } else { Complex::new(R::zero(), R::zero()) })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<Complex<R>> {
        &self.m
    }

    #[inline]
    pub fn matrix_mut(&mut self) -> &mut DMatrix<Complex<R>> {
        &mut self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex<R>> {
        self.m
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<R> {
        self.m[(row, col)]
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex<R>> {
        self.m.transpose().as_slice().to_vec()
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> Complex<R> {
        self.m.trace()
    }

    pub fn scale(&self, factor: Complex<R>) -> Self {
        Self { m: &self.m * factor }
    }

    pub fn scale_real(&self, factor: R) -> Self {
        self.scale(c(factor, R::zero()))
    }

    /// `i·self`, mapping Hermitian operators to skew-Hermitian ones.
    pub fn times_i(&self) -> Self {
        self.scale(c(R::zero(), R::one()))
    }

    /// `self + factor·other`, in place.
    pub fn axpy(&mut self, factor: Complex<R>, other: &Self) {
        self.m.zip_apply(&other.m, |a, b| *a += b * factor);
    }

    pub fn frobenius_norm(&self) -> R {
        self.m.iter().map(|z| z.re * z.re + z.im * z.im).fold(R::zero(), |a, b| a + b).sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> R {
        self.m.iter().map(|z| modulus(*z)).fold(R::zero(), |a, b| a.max(b))
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| modulus(*a - *b))
            .fold(R::zero(), |a, b| a.max(b))
    }

    /// max |M − M†|.
    pub fn hermiticity_deviation(&self) -> R {
        self.max_abs_diff(&self.adjoint())
    }

    /// max |M + M†|.
    pub fn skew_hermiticity_deviation(&self) -> R {
        let mut worst = R::zero();
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let s = self.m[(i, j)] + self.m[(j, i)].conj();
                worst = worst.max(modulus(s));
            }
        }
        worst
    }

    /// max |M†M − 1|.
    pub fn unitarity_deviation(&self) -> R {
        let p = Self {
            m: self.m.adjoint() * &self.m,
        };
        p.max_abs_diff(&Self::identity(self.dim()))
    }

    pub fn is_hermitian(&self, tol: R) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn is_skew_hermitian(&self, tol: R) -> bool {
        self.skew_hermiticity_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: R) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Kronecker product `self ⊗ other` (index of `self` varies slower).
    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other)
    }

    /// Matrix power with a nonnegative exponent.
    pub fn pow(&self, exponent: u32) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron<R: Real>(a: &Operator<R>, b: &Operator<R>) -> Operator<R> {
    Operator { m: a.m.kronecker(&b.m) }
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<R: Real>(factors: &[Operator<R>]) -> Operator<R> {
    factors
        .iter()
        .fold(Operator::identity(1), |acc, f| kron(&acc, f))
}

fn check_dims<R: Real>(a: &Operator<R>, b: &Operator<R>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// `[a, b] = ab − ba`.
pub fn commutator<R: Real>(a: &Operator<R>, b: &Operator<R>) -> Result<Operator<R>> {
    check_dims(a, b)?;
    Ok(Operator {
        m: &a.m * &b.m - &b.m * &a.m,
    })
}

/// Hilbert–Schmidt inner product `tr(a† b)`.
pub fn hs_inner<R: Real>(a: &Operator<R>, b: &Operator<R>) -> Result<Complex<R>> {
    check_dims(a, b)?;
    Ok(a.m.dotc(&b.m))
}

/// Eigendecomposition of a Hermitian operator with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<R: Real> {
    pub eigenvalues: Vec<R>,
    /// Unitary whose columns are the eigenvectors, in eigenvalue order.
    pub eigenvectors: Operator<R>,
}

impl<R: Real> SpectralDecomposition<R> {
    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> Operator<R> {
        self.apply_function(|l| c(l, R::zero()))
    }

    /// `V diag(f(λ)) V†`.
    pub fn apply_function(&self, f: impl Fn(R) -> Complex<R>) -> Operator<R> {
        let v = &self.eigenvectors.m;
        let mut scaled = v.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fl);
        }
        Operator {
            m: scaled * v.adjoint(),
        }
    }

    /// `exp(−iHt)` from the stored spectrum.
    pub fn exp_neg_i(&self, t: R) -> Operator<R> {
        self.apply_function(|l| phase_neg(l * t))
    }
}

/// Hermitian eigendecomposition. Fails when `h` deviates from
/// Hermiticity by more than `tol`.
pub fn eig_hermitian<R: Real>(h: &Operator<R>, tol: R) -> Result<SpectralDecomposition<R>> {
    let deviation = h.hermiticity_deviation();
    if deviation > tol {
        return Err(Error::NotHermitian {
            deviation: deviation.as_f64(),
        });
    }
    Ok(eig_hermitian_unchecked(h))
}

/// Same as [`eig_hermitian`] without the Hermiticity check.
pub fn eig_hermitian_unchecked<R: Real>(h: &Operator<R>) -> SpectralDecomposition<R> {
    let eig = SymmetricEigen::new(h.m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let n = h.dim();
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = Operator::from_fn(n, |r, col| eig.eigenvectors[(r, order[col])]);
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// `exp(−i h t)` for Hermitian `h`, via its eigendecomposition.
pub fn expm_unitary<R: Real>(h: &Operator<R>, t: R, tol: R) -> Result<Operator<R>> {
    Ok(eig_hermitian(h, tol)?.exp_neg_i(t))
}

/// Polar decomposition `q = W·P` together with the trace norm `tr P`.
#[derive(Clone, Debug)]
pub struct Polar<R: Real> {
    pub unitary: Operator<R>,
    pub trace_norm: R,
}

/// Polar decomposition via the SVD `q = U Σ V†`: `W = U V†`, `tr P = Σσ`.
///
/// For singular `q` the SVD already supplies full square `U` and `V`,
/// so `W` is some unitary completion on the null space.
pub fn polar<R: Real>(q: &Operator<R>) -> Polar<R> {
    let svd = SVD::new(q.m.clone(), true, true);
    let trace_norm = svd.singular_values.iter().fold(R::zero(), |a, &s| a + s);
    let u = svd.u.expect("SVD computed with U");
    let v_t = svd.v_t.expect("SVD computed with V†");
    Polar {
        unitary: Operator { m: u * v_t },
        trace_norm,
    }
}

/// Sum of singular values.
pub fn trace_norm<R: Real>(q: &Operator<R>) -> R {
    SVD::new(q.m.clone(), false, false)
        .singular_values
        .iter()
        .fold(R::zero(), |a, &s| a + s)
}

/// Unitary factor `W` of the polar decomposition `q = W·P`.
pub fn polar_unitary<R: Real>(q: &Operator<R>) -> Operator<R> {
    polar(q).unitary
}

/// Partial trace over a leading tensor factor of dimension `lead`.
///
/// For `op` on `C^lead ⊗ C^rest` returns the `rest × rest` operator
/// `Σ_s ⟨s|op|s⟩`.
pub fn partial_trace_leading<R: Real>(op: &Operator<R>, lead: usize) -> Result<Operator<R>> {
    let d = op.dim();
    if lead == 0 || d % lead != 0 {
        return Err(Error::DimensionMismatch { left: d, right: lead });
    }
    let rest = d / lead;
    Ok(Operator::from_fn(rest, |i, j| {
        (0..lead).fold(c(R::zero(), R::zero()), |acc, s| acc + op.m[(s * rest + i, s * rest + j)])
    }))
}

/// Single-spin operators.
pub mod pauli {
    use super::*;

    pub fn sigma<R: Real>(axis: Axis) -> Operator<R> {
        let (o, l, i) = (R::zero(), R::one(), c(R::zero(), R::one()));
        let z = c(o, o);
        let one = c(l, o);
        let entries = match axis {
            Axis::X => [z, one, one, z],
            Axis::Y => [z, -i, i, z],
            Axis::Z => [one, z, z, -one],
        };
        Operator::from_row_major(2, &entries).expect("2x2")
    }

    /// `σ₊ = (σx + iσy)/2 = |↑⟩⟨↓|`.
    pub fn sigma_plus<R: Real>() -> Operator<R> {
        let (o, l) = (R::zero(), R::one());
        Operator::from_row_major(2, &[c(o, o), c(l, o), c(o, o), c(o, o)]).expect("2x2")
    }

    /// `σ₋ = (σx − iσy)/2`.
    pub fn sigma_minus<R: Real>() -> Operator<R> {
        sigma_plus::<R>().adjoint()
    }
}

impl<'a, R: Real> Add<&'a Operator<R>> for &'a Operator<R> {
    type Output = Operator<R>;
    fn add(self, rhs: &'a Operator<R>) -> Operator<R> {
        Operator { m: &self.m + &rhs.m }
    }
}

impl<'a, R: Real> Sub<&'a Operator<R>> for &'a Operator<R> {
    type Output = Operator<R>;
    fn sub(self, rhs: &'a Operator<R>) -> Operator<R> {
        Operator { m: &self.m - &rhs.m }
    }
}

impl<'a, R: Real> Mul<&'a Operator<R>> for &'a Operator<R> {
    type Output = Operator<R>;
    fn mul(self, rhs: &'a Operator<R>) -> Operator<R> {
        Operator { m: &self.m * &rhs.m }
    }
}

impl<R: Real> Neg for Operator<R> {
    type Output = Operator<R>;
    fn neg(self) -> Operator<R> {
        Operator { m: -self.m }
    }
}

impl<'a, R: Real> AddAssign<&'a Operator<R>> for Operator<R> {
    fn add_assign(&mut self, rhs: &'a Operator<R>) {
        self.m += &rhs.m;
    }
}

#[cfg(test)]
mod tests {
    use super::pauli::{sigma, sigma_minus, sigma_plus};
    use super::*;

    type Op = Operator<f64>;

    fn cr(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn kron_layout() {
        let id = Op::identity(2);
        let zi = kron(&sigma(Axis::Z), &id);
        assert_eq!(zi, Op::diagonal(&[1.0, 1.0, -1.0, -1.0]));
        let iz = kron(&id, &sigma(Axis::Z));
        assert_eq!(iz, Op::diagonal(&[1.0, -1.0, 1.0, -1.0]));
        let xx = kron(&sigma::<f64>(Axis::X), &sigma(Axis::X));
        assert_eq!(&xx * &xx, Op::identity(4));
    }

    #[test]
    fn commutator_of_pauli_generators() {
        let iy = sigma::<f64>(Axis::Y).times_i();
        let iz = sigma::<f64>(Axis::Z).times_i();
        // [iσy, iσz] = −[σy, σz] = −2iσx
        let expected = sigma::<f64>(Axis::X).scale(Complex::new(0.0, -2.0));
        assert!(commutator(&iy, &iz).unwrap().max_abs_diff(&expected) < 1e-15);
        assert_eq!(commutator(&iy, &iy).unwrap(), Op::zeros(2));
        assert!(matches!(
            commutator(&iy, &Op::identity(4)),
            Err(Error::DimensionMismatch { left: 2, right: 4 })
        ));
    }

    #[test]
    fn hs_inner_values() {
        let x = sigma::<f64>(Axis::X);
        let y = sigma::<f64>(Axis::Y);
        assert_eq!(hs_inner(&x, &x).unwrap(), cr(2.0));
        assert_eq!(hs_inner(&x, &y).unwrap(), cr(0.0));
        assert_eq!(hs_inner(&Op::identity(8), &Op::identity(8)).unwrap(), cr(8.0));
        assert!(hs_inner(&x, &Op::identity(4)).is_err());
    }

    #[test]
    fn ladder_operators() {
        let sp = sigma_plus::<f64>();
        let sm = sigma_minus::<f64>();
        let x = &sp + &sm;
        assert_eq!(x, sigma(Axis::X));
        // i(σ₋ − σ₊) = σy
        assert!((&sm - &sp).times_i().max_abs_diff(&sigma(Axis::Y)) < 1e-15);
    }

    #[test]
    fn pauli_spectra() {
        for axis in [Axis::X, Axis::Z] {
            let e = eig_hermitian(&sigma::<f64>(axis), 1e-12).unwrap();
            assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
            assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = Op::from_row_major(2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]).unwrap();
        assert!(matches!(eig_hermitian(&m, 1e-12), Err(Error::NotHermitian { .. })));
        assert!(expm_unitary(&m, 1.0, 1e-12).is_err());
    }

    #[test]
    fn exponential_examples() {
        let z = sigma::<f64>(Axis::Z);
        let u = expm_unitary(&z, std::f64::consts::FRAC_PI_2, 1e-12).unwrap();
        let expected = Op::from_row_major(
            2,
            &[Complex::new(0.0, -1.0), cr(0.0), cr(0.0), Complex::new(0.0, 1.0)],
        )
        .unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-14);

        let h = &kron(&sigma::<f64>(Axis::X), &sigma(Axis::Y)) + &kron(&sigma(Axis::Z), &Op::identity(2));
        assert!(expm_unitary(&h, 0.0, 1e-12).unwrap().max_abs_diff(&Op::identity(4)) < 1e-14);

        let x = sigma::<f64>(Axis::X);
        let u = expm_unitary(&x, std::f64::consts::PI, 1e-12).unwrap();
        assert!(u.max_abs_diff(&Op::identity(2).scale_real(-1.0)) < 1e-14);
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&Op::identity(5)) - 5.0).abs() < 1e-13);
        assert_eq!(trace_norm(&Op::zeros(3)), 0.0);
        assert!((trace_norm(&Op::diagonal(&[3.0, -4.0])) - 7.0).abs() < 1e-13);
    }

    #[test]
    fn polar_of_singular_matrix_is_unitary() {
        let q = Op::diagonal(&[2.0, 0.0, -1.0]);
        let p = polar(&q);
        assert!((p.trace_norm - 3.0).abs() < 1e-13);
        assert!(p.unitary.is_unitary(1e-12));
        // W† q = P is positive semidefinite with trace equal to the trace norm
        let pos = &p.unitary.adjoint() * &q;
        assert!((pos.trace().re - 3.0).abs() < 1e-12);
        assert!(pos.is_hermitian(1e-12));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = Op::diagonal(&[1.0, 2.0]);
        let b = sigma::<f64>(Axis::X);
        let pt = partial_trace_leading(&kron(&a, &b), 2).unwrap();
        assert!(pt.max_abs_diff(&b.scale_real(3.0)) < 1e-15);
        assert!(partial_trace_leading(&Op::identity(6), 4).is_err());
    }

    #[test]
    fn row_major_round_trip() {
        let entries: Vec<_> = (0..9).map(|k| Complex::new(k as f64, -(k as f64))).collect();
        let op = Op::from_row_major(3, &entries).unwrap();
        assert_eq!(op.get(0, 1), entries[1]);
        assert_eq!(op.to_row_major(), entries);
        assert!(Op::from_row_major(3, &entries[..8]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let h = &kron(&sigma::<f32>(Axis::X), &sigma(Axis::X)) + &kron(&sigma(Axis::Y), &Operator::identity(2));
        let u = expm_unitary(&h, 0.7f32, 1e-6).unwrap();
        assert!(u.is_unitary(1e-5));
    }
}
