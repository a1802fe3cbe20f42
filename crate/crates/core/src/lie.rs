//! Dynamical Lie algebra of the spin star.
//!
//! The closure is built breadth-first: level 0 holds the generators,
//! level `k + 1` holds the commutators of every level-`k` element with
//! each generator. Each candidate is orthogonalized against the basis
//! found so far (modified Gram–Schmidt, two passes) and kept when its
//! relative residual exceeds the rank tolerance. The next level is built
//! from the accepted raw commutators, not from their orthogonalized
//! residuals: both span the same space level by level, but dividing by a
//! small residual amplifies rounding error and feeding that back through
//! further commutators inflates the rank. Since basis elements
//! are appended level by level, the depth of a target is the first level
//! whose prefix of the basis spans it, independent of the order in which
//! commutators were taken inside a level.
//!
//! Skew-Hermitian `d × d` matrices are stored as real coordinate vectors
//! of length `d²` (isometric for `Re tr(a†b)`), which halves the memory of
//! the basis and keeps all projections real.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpinStarSystem;
use crate::operator::{commutator, Axis, Operator};
use crate::scalar::Real;
use crate::tolerance::Tolerances;

/// Real coordinates of a skew-Hermitian matrix.
///
/// Diagonal: `Im X_jj`. Strict upper triangle: `√2 Re X_jk`, `√2 Im X_jk`.
/// The Euclidean inner product of two coordinate vectors equals
/// `Re tr(a† b)`. The Hermitian part of a non-skew input is discarded.
pub fn skew_coords<R: Real>(op: &Operator<R>) -> Vec<R> {
    let d = op.dim();
    let m = op.matrix();
    let s2 = R::lit(std::f64::consts::SQRT_2);
    let half = R::lit(0.5);
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        v.push(m[(j, j)].im);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            // skew part: (X_jk - conj(X_kj)) / 2
            let re = (m[(j, k)].re - m[(k, j)].re) * half;
            let im = (m[(j, k)].im + m[(k, j)].im) * half;
            v.push(s2 * re);
            v.push(s2 * im);
        }
    }
    v
}

/// Inverse of [`skew_coords`].
pub fn from_skew_coords<R: Real>(v: &[R], dim: usize) -> Operator<R> {
    assert_eq!(v.len(), dim * dim, "coordinate length");
    let inv_s2 = R::lit(std::f64::consts::FRAC_1_SQRT_2);
    let mut op = Operator::zeros(dim);
    let m = op.matrix_mut();
    for j in 0..dim {
        m[(j, j)] = Complex::new(R::zero(), v[j]);
    }
    let mut idx = dim;
    for j in 0..dim {
        for k in (j + 1)..dim {
            let re = v[idx] * inv_s2;
            let im = v[idx + 1] * inv_s2;
            idx += 2;
            m[(j, k)] = Complex::new(re, im);
            m[(k, j)] = Complex::new(-re, im);
        }
    }
    op
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<R: Real>(a: &[R]) -> R {
    dot(a, a).sqrt()
}

fn subtract_projection<R: Real>(v: &mut [R], q: &[R]) {
    let coef = dot(q, v);
    v.iter_mut().zip(q).for_each(|(x, &y)| *x -= coef * y);
}

/// Knobs and guards for [`closure`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosureSettings {
    /// Relative residual above which a candidate is a new element.
    pub rank_tol: f64,
    /// Largest Hilbert-space dimension accepted by [`closure_for_system`].
    pub max_hilbert_dim: usize,
    /// Upper bound on the memory the basis may need, in bytes.
    pub max_basis_bytes: usize,
}

impl Default for ClosureSettings {
    fn default() -> Self {
        Self {
            rank_tol: Tolerances::default().lie_rank,
            max_hilbert_dim: 128,
            max_basis_bytes: 1 << 30,
        }
    }
}

/// Orthonormal basis of a dynamical Lie algebra with per-element depth.
#[derive(Clone, Debug)]
pub struct LieClosure<R: Real> {
    basis: Vec<Vec<R>>,
    depths: Vec<usize>,
    dim_hilbert: usize,
    generator_count: usize,
    capped: bool,
}

impl<R: Real> LieClosure<R> {
    /// Dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn dim_hilbert(&self) -> usize {
        self.dim_hilbert
    }

    pub fn generator_count(&self) -> usize {
        self.generator_count
    }

    /// BFS level at which each basis element was found.
    pub fn depths(&self) -> &[usize] {
        &self.depths
    }

    pub fn max_depth(&self) -> usize {
        self.depths.last().copied().unwrap_or(0)
    }

    /// Number of basis elements found at each level.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.max_depth() + 1];
        for &d in &self.depths {
            sizes[d] += 1;
        }
        sizes
    }

    /// True when construction stopped at the `su(d)` dimension bound.
    pub fn hit_dimension_cap(&self) -> bool {
        self.capped
    }

    /// Basis element `i` as a matrix (Hilbert–Schmidt unit norm).
    pub fn element(&self, i: usize) -> Operator<R> {
        from_skew_coords(&self.basis[i], self.dim_hilbert)
    }

    fn check_target(&self, target: &Operator<R>) -> Result<Vec<R>> {
        if target.dim() != self.dim_hilbert {
            return Err(Error::DimensionMismatch {
                left: self.dim_hilbert,
                right: target.dim(),
            });
        }
        let scale = target.max_abs().max(R::one());
        let deviation = target.skew_hermiticity_deviation();
        if deviation > R::lit(Tolerances::for_scalar::<R>().hermitian) * scale {
            return Err(Error::NotSkewHermitian {
                deviation: deviation.as_f64(),
            });
        }
        Ok(skew_coords(target))
    }

    /// Relative residual of `target` after projecting out the basis,
    /// evaluated after each BFS level. Entry `k` covers depths `≤ k`.
    fn residual_profile(&self, target: &Operator<R>) -> Result<Vec<R>> {
        let mut v = self.check_target(target)?;
        let n0 = norm(&v);
        let levels = self.max_depth() + 1;
        if n0 == R::zero() {
            return Ok(vec![R::zero(); levels]);
        }
        let mut profile = Vec::with_capacity(levels);
        let mut start = 0;
        for level in 0..levels {
            let end = self.depths.partition_point(|&d| d <= level);
            for _ in 0..2 {
                for q in &self.basis[start..end] {
                    subtract_projection(&mut v, q);
                }
            }
            start = end;
            profile.push(norm(&v) / n0);
        }
        Ok(profile)
    }

    /// Projects `target` onto the algebra.
    pub fn contains(&self, target: &Operator<R>, tol: R) -> Result<Membership<R>> {
        let residual = self
            .residual_profile(target)?
            .last()
            .copied()
            .unwrap_or_else(R::one);
        Ok(Membership {
            contained: residual <= tol,
            residual,
        })
    }

    /// Smallest level `k` whose elements of depth `≤ k` span `target`.
    pub fn element_depth(&self, target: &Operator<R>, tol: R) -> Result<usize> {
        let profile = self.residual_profile(target)?;
        profile
            .iter()
            .position(|&r| r <= tol)
            .ok_or_else(|| Error::NotContained {
                residual: profile.last().map_or(1.0, |r| r.as_f64()),
            })
    }

    /// Largest pairwise `|⟨b_i, b_j⟩|` over `i ≠ j` and largest `|‖b_i‖ − 1|`.
    pub fn orthonormality_defect(&self) -> (R, R) {
        let mut off = R::zero();
        let mut unit = R::zero();
        for (i, a) in self.basis.iter().enumerate() {
            unit = unit.max((norm(a) - R::one()).abs());
            for b in &self.basis[..i] {
                off = off.max(dot(a, b).abs());
            }
        }
        (off, unit)
    }
}

/// Result of a membership query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Membership<R> {
    pub contained: bool,
    /// `‖t − Pt‖ / ‖t‖` with `P` the projector onto the algebra.
    pub residual: R,
}

/// Lie closure of skew-Hermitian `generators` under commutation.
pub fn closure<R: Real>(generators: &[Operator<R>], rank_tol: R) -> Result<LieClosure<R>> {
    let Some(first) = generators.first() else {
        return Err(Error::InvalidConfig("no generators".into()));
    };
    let d = first.dim();
    let herm_tol = R::lit(Tolerances::for_scalar::<R>().hermitian);
    let mut traceless = true;
    for g in generators {
        if g.dim() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: g.dim(),
            });
        }
        let deviation = g.skew_hermiticity_deviation();
        if deviation > herm_tol * g.max_abs().max(R::one()) {
            return Err(Error::NotSkewHermitian {
                deviation: deviation.as_f64(),
            });
        }
        traceless &= g.trace().norm_sqr().sqrt() <= herm_tol * R::from_count(d);
    }
    let cap = if traceless { d * d - 1 } else { d * d };

    let mut out = LieClosure {
        basis: Vec::new(),
        depths: Vec::new(),
        dim_hilbert: d,
        generator_count: generators.len(),
        capped: false,
    };

    let mut frontier = Vec::new();
    for g in generators {
        if out.basis.len() < cap {
            if let Some(scaled) = try_append(&mut out, g, 0, rank_tol) {
                frontier.push(scaled);
            }
        }
    }

    let mut level = 0;
    while !frontier.is_empty() && out.basis.len() < cap {
        let mut next = Vec::new();
        'level: for b in &frontier {
            for g in generators {
                let candidate = commutator(b, g)?;
                if let Some(scaled) = try_append(&mut out, &candidate, level + 1, rank_tol) {
                    next.push(scaled);
                    if out.basis.len() >= cap {
                        break 'level;
                    }
                }
            }
        }
        frontier = next;
        level += 1;
    }
    out.capped = out.basis.len() >= cap;
    Ok(out)
}

/// Appends the orthonormalized residual of `candidate` when it is new and
/// returns the candidate rescaled to unit norm.
fn try_append<R: Real>(
    closure: &mut LieClosure<R>,
    candidate: &Operator<R>,
    depth: usize,
    tol: R,
) -> Option<Operator<R>> {
    let mut v = skew_coords(candidate);
    let n0 = norm(&v);
    if n0 == R::zero() {
        return None;
    }
    for _ in 0..2 {
        for q in &closure.basis {
            subtract_projection(&mut v, q);
        }
    }
    let r = norm(&v);
    if r <= tol * n0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= r);
    closure.basis.push(v);
    closure.depths.push(depth);
    Some(candidate.scale_real(R::one() / n0))
}

/// Closed-form dimension of the equal-coupling algebra for `n_bath` spins.
pub fn dimension_formula(n_bath: u64) -> u64 {
    let n = n_bath;
    if n % 2 == 0 {
        (2 + n) * (9 + 4 * n * (4 + n)) / 6
    } else {
        (1 + n) * (3 + 2 * n) * (7 + 2 * n) / 6
    }
}

/// `dim su(2^(N+1)) = 4^(N+1) − 1`.
pub fn full_dimension(n_bath: u32) -> u64 {
    4u64.pow(n_bath + 1) - 1
}

/// The generators `{iH_c, iH₀}` of a spin star, control first.
pub fn generators<R: Real>(sys: &SpinStarSystem) -> [Operator<R>; 2] {
    [
        sys.control_hamiltonian::<R>().times_i(),
        sys.drift_hamiltonian::<R>().times_i(),
    ]
}

/// Dimension the closure of `sys` is expected to reach.
pub fn expected_dimension(sys: &SpinStarSystem) -> u64 {
    if sys.scheme().is_equal() {
        dimension_formula(sys.n_bath() as u64)
    } else {
        full_dimension(sys.n_bath() as u32)
    }
}

/// Rejects systems whose closure would exceed the configured limits.
pub fn check_resources<R: Real>(sys: &SpinStarSystem, settings: &ClosureSettings) -> Result<()> {
    if sys.n_bath() > 12 || sys.dim() > settings.max_hilbert_dim {
        return Err(Error::ResourceLimit(format!(
            "Hilbert dimension 2^{} exceeds the cap {}",
            sys.n_bath() + 1,
            settings.max_hilbert_dim
        )));
    }
    let d2 = (sys.dim() * sys.dim()) as u128;
    let bytes = expected_dimension(sys) as u128 * d2 * std::mem::size_of::<R>() as u128;
    if bytes > settings.max_basis_bytes as u128 {
        return Err(Error::ResourceLimit(format!(
            "closure basis would need ~{} MiB (limit {} MiB)",
            bytes >> 20,
            settings.max_basis_bytes >> 20
        )));
    }
    Ok(())
}

/// Resource-checked closure of a spin star's generators.
pub fn closure_for_system<R: Real>(sys: &SpinStarSystem, settings: &ClosureSettings) -> Result<LieClosure<R>> {
    check_resources::<R>(sys, settings)?;
    closure(&generators::<R>(sys), R::lit(settings.rank_tol))
}

/// Named skew-Hermitian probe operators for membership and depth queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Probe {
    /// `iσ_α ⊗ 1`.
    Central(Axis),
    /// `iσ_α^(k)`, `k ∈ 1..=N`.
    BathSpin(usize, Axis),
    /// `i 1 ⊗ J_α`.
    Collective(Axis),
}

impl Probe {
    /// Parses `sx`, `sy`, `sz` (central), `sx2` (bath spin 2) or `jx` (collective).
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        let bad = || Error::InvalidConfig(format!("unknown probe `{text}`"));
        let mut chars = t.chars();
        let kind = chars.next().ok_or_else(bad)?;
        let axis = match chars.next() {
            Some('x') => Axis::X,
            Some('y') => Axis::Y,
            Some('z') => Axis::Z,
            _ => return Err(bad()),
        };
        let rest: String = chars.collect();
        match (kind, rest.is_empty()) {
            ('s', true) => Ok(Probe::Central(axis)),
            ('s', false) => rest.parse().map(|k| Probe::BathSpin(k, axis)).map_err(|_| bad()),
            ('j', true) => Ok(Probe::Collective(axis)),
            _ => Err(bad()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Probe::Central(a) => format!("s{}", a.name()),
            Probe::BathSpin(k, a) => format!("s{}{}", a.name(), k),
            Probe::Collective(a) => format!("j{}", a.name()),
        }
    }

    pub fn operator<R: Real>(&self, sys: &SpinStarSystem) -> Result<Operator<R>> {
        let h = match *self {
            Probe::Central(a) => sys.central_pauli(a),
            Probe::BathSpin(k, a) => sys.bath_pauli(k, a)?,
            Probe::Collective(a) => sys.bath_angular_momentum(a)?,
        };
        Ok(h.times_i())
    }
}

/// Outcome of checking the equal-coupling family `iσ_α(J₊^l J₋^k J_z^s + h.c.)`.
#[derive(Clone, Debug, Serialize)]
pub struct EqualCouplingBasisReport {
    pub n_bath: usize,
    pub max_order: usize,
    pub entries: Vec<EqualCouplingBasisEntry>,
    pub max_residual: f64,
    pub all_contained: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EqualCouplingBasisEntry {
    pub axis: Axis,
    pub l: usize,
    pub k: usize,
    pub s: usize,
    /// The element vanishes identically on this bath (e.g. `J₊^l` with `l > N`).
    pub vanishes: bool,
    pub contained: bool,
    pub residual: f64,
}

/// `iσ_α ⊗ (J₊^l J₋^k J_z^s + h.c.)`.
pub fn equal_coupling_element<R: Real>(
    sys: &SpinStarSystem,
    axis: Axis,
    l: u32,
    k: u32,
    s: u32,
) -> Result<Operator<R>> {
    let jp = sys.bath_ladder::<R>(true)?;
    let jm = sys.bath_ladder::<R>(false)?;
    let jz = sys.bath_collective::<R>(Axis::Z)?;
    let word = &(&jp.pow(l) * &jm.pow(k)) * &jz.pow(s);
    let herm = &word + &word.adjoint();
    Ok(crate::operator::pauli::sigma::<R>(axis).kron(&herm).times_i())
}

/// Checks every element with `l + k + s ≤ max_order` against `closure`.
pub fn verify_equal_coupling_basis<R: Real>(
    sys: &SpinStarSystem,
    closure: &LieClosure<R>,
    max_order: usize,
    tol: R,
) -> Result<EqualCouplingBasisReport> {
    if !sys.scheme().is_equal() {
        return Err(Error::NotEqualCouplings);
    }
    let mut entries = Vec::new();
    for order in 0..=max_order {
        for l in 0..=order {
            for k in 0..=(order - l) {
                let s = order - l - k;
                for axis in Axis::ALL {
                    let el = equal_coupling_element::<R>(sys, axis, l as u32, k as u32, s as u32)?;
                    let vanishes = el.max_abs() <= R::lit(1e-12);
                    let m = closure.contains(&el, tol)?;
                    entries.push(EqualCouplingBasisEntry {
                        axis,
                        l,
                        k,
                        s,
                        vanishes,
                        contained: m.contained,
                        residual: m.residual.as_f64(),
                    });
                }
            }
        }
    }
    let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    let all_contained = entries.iter().all(|e| e.contained);
    Ok(EqualCouplingBasisReport {
        n_bath: sys.n_bath(),
        max_order,
        entries,
        max_residual,
        all_contained,
    })
}

/// Genericity conditions on a coupling list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingAssumptions {
    pub couplings: Vec<f64>,
    /// `h_n ≠ h_m` for all `n ≠ m`.
    pub distinct_values: bool,
    /// `|h_n| ≠ |h_m|` for all `n ≠ m`.
    pub distinct_magnitudes: bool,
    /// `|h_n − h_m| ≠ |h_i − h_j|` for distinct unordered pairs.
    pub distinct_gaps: bool,
    pub violations: Vec<String>,
    pub pass: bool,
}

/// Flags coupling lists that break the genericity assumptions behind
/// full controllability. Advisory only.
pub fn coupling_assumptions_check(couplings: &[f64]) -> CouplingAssumptions {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let n = couplings.len();
    let mut violations = Vec::new();
    let mut distinct_values = true;
    let mut distinct_magnitudes = true;
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (couplings[i], couplings[j]);
            if close(a, b) {
                distinct_values = false;
                violations.push(format!("h{} = h{} = {a}", i + 1, j + 1));
            }
            if close(a.abs(), b.abs()) {
                distinct_magnitudes = false;
                violations.push(format!("|h{}| = |h{}| = {}", i + 1, j + 1, a.abs()));
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let mut distinct_gaps = true;
    for (p, &(a, b)) in pairs.iter().enumerate() {
        for &(c, d) in &pairs[p + 1..] {
            let g1 = (couplings[a] - couplings[b]).abs();
            let g2 = (couplings[c] - couplings[d]).abs();
            if close(g1, g2) {
                distinct_gaps = false;
                violations.push(format!(
                    "|h{}-h{}| = |h{}-h{}| = {g1}",
                    a + 1,
                    b + 1,
                    c + 1,
                    d + 1
                ));
            }
        }
    }
    CouplingAssumptions {
        couplings: couplings.to_vec(),
        distinct_values,
        distinct_magnitudes,
        distinct_gaps,
        pass: distinct_values && distinct_magnitudes && distinct_gaps,
        violations,
    }
}

/// Summary of a closure run, as written by the `lie-dim` and `membership` commands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LieReport {
    pub n_bath: usize,
    pub scheme: String,
    pub couplings: Vec<f64>,
    pub dim: usize,
    /// Closed-form expectation: the equal-coupling formula, or `4^(N+1) − 1` otherwise.
    pub formula_dim: u64,
    #[serde(rename = "match")]
    pub matches: bool,
    pub level_sizes: Vec<usize>,
    pub depths: BTreeMap<String, Option<usize>>,
    pub residuals: BTreeMap<String, f64>,
}

impl LieReport {
    pub fn new<R: Real>(sys: &SpinStarSystem, closure: &LieClosure<R>) -> Self {
        let formula_dim = expected_dimension(sys);
        Self {
            n_bath: sys.n_bath(),
            scheme: sys.scheme().label().to_string(),
            couplings: sys.couplings().to_vec(),
            dim: closure.dim(),
            formula_dim,
            matches: closure.dim() as u64 == formula_dim,
            level_sizes: closure.level_sizes(),
            depths: BTreeMap::new(),
            residuals: BTreeMap::new(),
        }
    }

    /// Records membership residual and (when contained) depth of each probe.
    pub fn probe<R: Real>(
        &mut self,
        sys: &SpinStarSystem,
        closure: &LieClosure<R>,
        probes: &[Probe],
        tol: R,
    ) -> Result<()> {
        for p in probes {
            let op = p.operator::<R>(sys)?;
            let m = closure.contains(&op, tol)?;
            let depth = if m.contained {
                Some(closure.element_depth(&op, tol)?)
            } else {
                None
            };
            self.residuals.insert(p.label(), m.residual.as_f64());
            self.depths.insert(p.label(), depth);
        }
        Ok(())
    }
}
