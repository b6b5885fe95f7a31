//! Euclidean simplex quality: thickness, fatness, singular-value bounds,
//! Gram-matrix realization from edge lengths, and determinant/distortion
//! perturbation estimates.

use crate::sample;
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimplexError {
    #[error("a simplex needs at least one vertex")]
    Empty,
    #[error("vertex {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("{k} + 1 vertices cannot be independent in ambient dimension {n}")]
    TooManyVertices { k: usize, n: usize },
    #[error("vertex index {0} out of range")]
    BadIndex(usize),
    #[error("length matrix is not a metric candidate: {0}")]
    NonMetric(String),
    #[error("matrix shapes disagree: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("edge perturbation {max_dev} exceeds the admissible band {allowed}")]
    PerturbationTooLarge { max_dev: f64, allowed: f64 },
    #[error("source simplex is degenerate")]
    DegenerateSource,
    #[error("vector {0} has zero norm")]
    ZeroVector(usize),
}

/// A `k`-simplex given by `k + 1` vertices in `R^n`, `k <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanSimplex<R: Real> {
    vertices: Vec<DVector<R>>,
}

impl<R: Real> EuclideanSimplex<R> {
    pub fn new(vertices: Vec<DVector<R>>) -> Result<Self, SimplexError> {
        if vertices.is_empty() {
            return Err(SimplexError::Empty);
        }
        let n = vertices[0].len();
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != n {
                return Err(SimplexError::DimensionMismatch {
                    index: i,
                    got: v.len(),
                    expected: n,
                });
            }
        }
        let k = vertices.len() - 1;
        if k > n {
            return Err(SimplexError::TooManyVertices { k, n });
        }
        Ok(Self { vertices })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, SimplexError> {
        let vs = rows
            .iter()
            .map(|r| DVector::from_iterator(r.len(), r.iter().map(|&x| R::of(x))))
            .collect();
        Self::new(vs)
    }

    /// Topological dimension `k`.
    pub fn k(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Ambient dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[DVector<R>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &DVector<R> {
        &self.vertices[i]
    }

    /// Column `j` is `v_m - v_base` over all `m != base`, in index order.
    pub fn edge_matrix(&self, base: usize) -> Result<DMatrix<R>, SimplexError> {
        if base > self.k() {
            return Err(SimplexError::BadIndex(base));
        }
        let n = self.ambient_dim();
        let k = self.k();
        let mut m = DMatrix::zeros(n, k);
        let mut col = 0;
        for (i, v) in self.vertices.iter().enumerate() {
            if i != base {
                m.set_column(col, &(v - &self.vertices[base]));
                col += 1;
            }
        }
        Ok(m)
    }

    /// Symmetric `(k+1) x (k+1)` matrix of pairwise distances, zero diagonal.
    pub fn edge_lengths(&self) -> DMatrix<R> {
        let m = self.vertices.len();
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                R::zero()
            } else {
                (&self.vertices[i] - &self.vertices[j]).norm()
            }
        })
    }

    /// Longest edge length; zero for a point.
    pub fn longest_edge(&self) -> R {
        let mut best = R::zero();
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                let d = (&self.vertices[i] - &self.vertices[j]).norm();
                if d > best {
                    best = d;
                }
            }
        }
        best
    }

    /// Distance from vertex `i` to the affine hull of the opposite facet.
    pub fn altitude(&self, i: usize) -> Result<R, SimplexError> {
        if i > self.k() {
            return Err(SimplexError::BadIndex(i));
        }
        let facet: Vec<&DVector<R>> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v)
            .collect();
        let w = &self.vertices[i] - facet[0];
        if facet.len() == 1 {
            return Ok(w.norm());
        }
        let n = self.ambient_dim();
        let mut span = DMatrix::zeros(n, facet.len() - 1);
        for (c, v) in facet.iter().skip(1).enumerate() {
            span.set_column(c, &(*v - facet[0]));
        }
        Ok(distance_to_column_span(&span, &w))
    }

    /// Thickness `t`: 1 for a point, otherwise `min_i a_i / (k L)`.
    pub fn thickness(&self) -> R {
        let k = self.k();
        if k == 0 {
            return R::one();
        }
        let l = self.longest_edge();
        if l == R::zero() {
            return R::zero();
        }
        let mut min_alt = R::inf();
        for i in 0..=k {
            let a = self.altitude(i).expect("index in range");
            if a < min_alt {
                min_alt = a;
            }
        }
        min_alt / (R::of(k as f64) * l)
    }

    /// Volume from the singular values of the edge matrix.
    pub fn volume(&self) -> R {
        let k = self.k();
        if k == 0 {
            return R::one();
        }
        let p = self.edge_matrix(0).expect("base 0 valid");
        let svals = p.svd(false, false).singular_values;
        let mut prod = R::one();
        for i in 0..k {
            prod *= svals[i];
        }
        prod / R::of(factorial(k))
    }

    /// Volume through the recursion `vol_j = a_0 * vol_{j-1}(facet_0) / j`.
    pub fn volume_inductive(&self) -> R {
        let k = self.k();
        if k == 0 {
            return R::one();
        }
        let a0 = self.altitude(0).expect("vertex 0 exists");
        let facet = Self::new(self.vertices[1..].to_vec()).expect("facet is a simplex");
        a0 * facet.volume_inductive() / R::of(k as f64)
    }

    /// Fatness `vol / L^k`; 1 for a point.
    pub fn fatness(&self) -> R {
        let k = self.k();
        if k == 0 {
            return R::one();
        }
        let l = self.longest_edge();
        if l == R::zero() {
            return R::zero();
        }
        let vol = self.volume();
        debug_assert!({
            let alt = self.volume_inductive();
            let scale = nalgebra::ComplexField::powi(l, k as i32);
            (vol - alt).abs() <= R::of(1e-6) * (vol.abs() + alt.abs() + scale)
        });
        vol / nalgebra::ComplexField::powi(l, k as i32)
    }

    /// Smallest singular value of the base-0 edge matrix.
    pub fn min_singular_value(&self) -> R {
        let k = self.k();
        if k == 0 {
            return R::zero();
        }
        let p = self.edge_matrix(0).expect("base 0 valid");
        let svals = p.svd(false, false).singular_values;
        svals[k - 1]
    }

    /// The facet opposite vertex `i`.
    pub fn facet(&self, i: usize) -> Result<Self, SimplexError> {
        if i > self.k() {
            return Err(SimplexError::BadIndex(i));
        }
        let vs = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        Self::new(vs)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Distance from `w` to the column span of `span` (rank-revealing projection).
fn distance_to_column_span<R: Real>(span: &DMatrix<R>, w: &DVector<R>) -> R {
    if span.ncols() == 0 {
        return w.norm();
    }
    let svd = span.clone().svd(true, false);
    let u = svd.u.as_ref().expect("u requested");
    let svals = &svd.singular_values;
    let smax = svals[0];
    let tol = smax * R::EPS * R::of(span.nrows().max(span.ncols()) as f64 * 8.0);
    let mut resid = w.clone();
    for c in 0..svals.len() {
        if svals[c] > tol {
            let uc = u.column(c);
            let coef = uc.dot(w);
            resid -= uc * coef;
        }
    }
    resid.norm()
}

/// Result of comparing the smallest singular value against `sqrt(k) t L`
/// and the pseudo-inverse rows against the reciprocal altitudes.
#[derive(Debug, Clone)]
pub struct SingularValueCheck<R: Real> {
    pub smallest_singular: R,
    pub lower_bound: R,
    pub bound_holds: bool,
    pub pinv_rows_checked: bool,
    pub pinv_rows_ok: bool,
}

/// Check `sigma_k(P) >= sqrt(k) t L` and, on full-rank input, that row `i`
/// of the pseudo-inverse of the base-0 edge matrix has norm `1 / a_i`.
pub fn check_singular_value_bound<R: Real>(
    s: &EuclideanSimplex<R>,
) -> Result<SingularValueCheck<R>, SimplexError> {
    let k = s.k();
    if k == 0 {
        return Ok(SingularValueCheck {
            smallest_singular: R::zero(),
            lower_bound: R::zero(),
            bound_holds: true,
            pinv_rows_checked: false,
            pinv_rows_ok: true,
        });
    }
    let p = s.edge_matrix(0)?;
    let svd = p.clone().svd(true, true);
    let svals = svd.singular_values.clone();
    let smallest = svals[k - 1];
    let l = s.longest_edge();
    let bound = R::of((k as f64).sqrt()) * s.thickness() * l;
    let bound_holds = smallest >= bound - R::of(1e-9) * (l + R::one());

    let full_rank = svals[0] > R::zero() && smallest > svals[0] * R::of(1e-12);
    let mut pinv_ok = true;
    if full_rank {
        let pinv = svd
            .pseudo_inverse(svals[0] * R::EPS * R::of(64.0))
            .expect("svd computed");
        for row in 0..k {
            let alt = s.altitude(row + 1)?;
            let expect = R::one() / alt;
            let got = pinv.row(row).norm();
            if (got - expect).abs() > R::of(1e-9) * expect {
                pinv_ok = false;
            }
        }
    }
    Ok(SingularValueCheck {
        smallest_singular: smallest,
        lower_bound: bound,
        bound_holds,
        pinv_rows_checked: full_rank,
        pinv_rows_ok: pinv_ok,
    })
}

/// Outcome of building the vertex Gram matrix from prescribed edge lengths.
#[derive(Debug, Clone)]
pub struct GramRealization<R: Real> {
    pub gram: DMatrix<R>,
    pub min_eigenvalue: R,
    /// Whether the lengths embed in Euclidean space (smallest Gram eigenvalue
    /// above the `-1e-10 * trace` cutoff).
    pub realizable: bool,
    pub simplex: Option<EuclideanSimplex<R>>,
}

/// Build `G_ij = (l_0i^2 + l_0j^2 - l_ij^2) / 2` from a symmetric length
/// matrix and factor it into vertex coordinates when realizable.
pub fn gram_from_lengths<R: Real>(
    lengths: &DMatrix<R>,
) -> Result<GramRealization<R>, SimplexError> {
    let m = lengths.nrows();
    if m == 0 || lengths.ncols() != m {
        return Err(SimplexError::NonMetric(format!(
            "length matrix must be square and nonempty, got {}x{}",
            m,
            lengths.ncols()
        )));
    }
    let mut max_entry = R::zero();
    for i in 0..m {
        for j in 0..m {
            if lengths[(i, j)].abs() > max_entry {
                max_entry = lengths[(i, j)].abs();
            }
        }
    }
    let tol = R::of(1e-9) * (max_entry + R::one());
    for i in 0..m {
        if lengths[(i, i)].abs() > tol {
            return Err(SimplexError::NonMetric(format!(
                "diagonal entry ({i},{i}) is {:?}, expected 0",
                lengths[(i, i)].to64()
            )));
        }
        for j in (i + 1)..m {
            if (lengths[(i, j)] - lengths[(j, i)]).abs() > tol {
                return Err(SimplexError::NonMetric(format!(
                    "entries ({i},{j}) and ({j},{i}) differ"
                )));
            }
            if lengths[(i, j)] <= R::zero() {
                return Err(SimplexError::NonMetric(format!(
                    "off-diagonal entry ({i},{j}) must be positive"
                )));
            }
        }
    }

    let k = m - 1;
    let gram = DMatrix::from_fn(k, k, |i, j| {
        let l0i = lengths[(0, i + 1)];
        let l0j = lengths[(0, j + 1)];
        let lij = lengths[(i + 1, j + 1)];
        (l0i * l0i + l0j * l0j - lij * lij) * R::of(0.5)
    });

    if k == 0 {
        return Ok(GramRealization {
            gram,
            min_eigenvalue: R::zero(),
            realizable: true,
            simplex: Some(EuclideanSimplex::new(vec![DVector::zeros(0)]).expect("point")),
        });
    }

    let eig = SymmetricEigen::new(gram.clone());
    let mut min_eig = eig.eigenvalues[0];
    for i in 1..k {
        if eig.eigenvalues[i] < min_eig {
            min_eig = eig.eigenvalues[i];
        }
    }
    let realizable = min_eig >= -R::of(1e-10) * gram.trace();

    let simplex = if realizable {
        // G = P^T P with P = sqrt(clamped eigenvalues) * Q^T.
        let mut p = DMatrix::zeros(k, k);
        for r in 0..k {
            let lam = eig.eigenvalues[r].max(R::zero());
            let srow = lam.sqrt();
            for c in 0..k {
                p[(r, c)] = srow * eig.eigenvectors[(c, r)];
            }
        }
        let mut vs = vec![DVector::zeros(k)];
        for c in 0..k {
            vs.push(p.column(c).into_owned());
        }
        Some(EuclideanSimplex::new(vs).expect("k+1 vertices in R^k"))
    } else {
        None
    };

    Ok(GramRealization {
        gram,
        min_eigenvalue: min_eig,
        realizable,
        simplex,
    })
}

/// Guaranteed lower bounds for a simplex whose edge lengths move by at most
/// `eta t^2 / 4 * L`.
#[derive(Debug, Clone)]
pub struct DistortionBounds<R: Real> {
    pub c0: R,
    pub singular_lower: R,
    pub thickness_lower: R,
}

/// Bounds on the perturbed simplex: `sigma_k >= (1-eta) sigma_k(P)` and
/// `t >= 4 (1-eta) t / (5 sqrt(k))`, valid when every edge moves by at most
/// `C0 L` with `C0 = eta t^2 / 4`.
pub fn thickness_distortion<R: Real>(
    s: &EuclideanSimplex<R>,
    perturbed_lengths: &DMatrix<R>,
    eta: R,
) -> Result<DistortionBounds<R>, SimplexError> {
    let m = s.vertices().len();
    if perturbed_lengths.nrows() != m || perturbed_lengths.ncols() != m {
        return Err(SimplexError::ShapeMismatch(
            perturbed_lengths.nrows(),
            perturbed_lengths.ncols(),
            m,
            m,
        ));
    }
    if !(R::zero()..=R::one()).contains(&eta) {
        return Err(SimplexError::NonMetric(format!(
            "eta = {} outside [0, 1]",
            eta.to64()
        )));
    }
    let t = s.thickness();
    let l = s.longest_edge();
    let c0 = eta * t * t * R::of(0.25);
    let allowed = c0 * l;
    let lengths = s.edge_lengths();
    let mut max_dev = R::zero();
    for i in 0..m {
        for j in 0..m {
            let dev = (perturbed_lengths[(i, j)] - lengths[(i, j)]).abs();
            if dev > max_dev {
                max_dev = dev;
            }
        }
    }
    if max_dev > allowed * (R::one() + R::of(1e-9)) + R::of(1e-15) {
        return Err(SimplexError::PerturbationTooLarge {
            max_dev: max_dev.to64(),
            allowed: allowed.to64(),
        });
    }
    let k = s.k().max(1) as f64;
    Ok(DistortionBounds {
        c0,
        singular_lower: (R::one() - eta) * s.min_singular_value(),
        thickness_lower: R::of(4.0) * (R::one() - eta) * t / (R::of(5.0) * R::of(k.sqrt())),
    })
}

/// Realize the perturbed lengths and check them against [`thickness_distortion`].
#[derive(Debug, Clone)]
pub struct DistortionVerification<R: Real> {
    pub bounds: DistortionBounds<R>,
    pub realized_singular: R,
    pub realized_thickness: R,
    pub holds: bool,
}

pub fn verify_thickness_distortion<R: Real>(
    s: &EuclideanSimplex<R>,
    perturbed_lengths: &DMatrix<R>,
    eta: R,
) -> Result<DistortionVerification<R>, SimplexError> {
    let bounds = thickness_distortion(s, perturbed_lengths, eta)?;
    let real = gram_from_lengths(perturbed_lengths)?;
    let realized = real.simplex.ok_or(SimplexError::NonMetric(
        "perturbed lengths within the admissible band must realize".into(),
    ))?;
    let rs = realized.min_singular_value();
    let rt = realized.thickness();
    let slack = R::of(1e-9) * (R::one() + s.longest_edge());
    let holds = rs >= bounds.singular_lower - slack && rt >= bounds.thickness_lower - R::of(1e-9);
    Ok(DistortionVerification {
        bounds,
        realized_singular: rs,
        realized_thickness: rt,
        holds,
    })
}

/// Operator norm flavor used by the determinant perturbation bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PNorm {
    One,
    Two,
    Inf,
}

pub fn operator_p_norm<R: Real>(m: &DMatrix<R>, p: PNorm) -> R {
    match p {
        PNorm::One => {
            let mut best = R::zero();
            for c in 0..m.ncols() {
                let s = m.column(c).iter().fold(R::zero(), |acc, x| acc + x.abs());
                if s > best {
                    best = s;
                }
            }
            best
        }
        PNorm::Inf => {
            let mut best = R::zero();
            for r in 0..m.nrows() {
                let s = m.row(r).iter().fold(R::zero(), |acc, x| acc + x.abs());
                if s > best {
                    best = s;
                }
            }
            best
        }
        PNorm::Two => {
            if m.nrows() == 0 || m.ncols() == 0 {
                R::zero()
            } else {
                m.clone().svd(false, false).singular_values[0]
            }
        }
    }
}

/// `|det(A+E) - det(A)|` against `n max(|A|_p, |A+E|_p)^(n-1) |E|_p`.
#[derive(Debug, Clone)]
pub struct DeterminantGap<R: Real> {
    pub actual: R,
    pub bound: R,
}

pub fn friedland_gap<R: Real>(
    a: &DMatrix<R>,
    e: &DMatrix<R>,
    p: PNorm,
) -> Result<DeterminantGap<R>, SimplexError> {
    let n = a.nrows();
    if a.ncols() != n || e.nrows() != n || e.ncols() != n {
        return Err(SimplexError::ShapeMismatch(
            e.nrows(),
            e.ncols(),
            n,
            a.ncols(),
        ));
    }
    let ae = a + e;
    let actual = (ae.determinant() - a.determinant()).abs();
    let na = operator_p_norm(a, p);
    let nae = operator_p_norm(&ae, p);
    let ne = operator_p_norm(e, p);
    let base = na.max(nae);
    let bound = R::of(n as f64) * nalgebra::ComplexField::powi(base, n as i32 - 1) * ne;
    Ok(DeterminantGap { actual, bound })
}

/// Metric distortion bound `eta = 4 C0 / t^2` for the affine map carrying a
/// full-dimensional simplex onto a perturbation of it.
pub fn linear_distortion_bound<R: Real>(
    s: &EuclideanSimplex<R>,
    s_perturbed: &EuclideanSimplex<R>,
) -> Result<R, SimplexError> {
    if s.k() != s.ambient_dim() || s_perturbed.k() != s_perturbed.ambient_dim() {
        return Err(SimplexError::TooManyVertices {
            k: s.k(),
            n: s.ambient_dim(),
        });
    }
    if s.k() != s_perturbed.k() {
        return Err(SimplexError::ShapeMismatch(
            s_perturbed.k(),
            s_perturbed.ambient_dim(),
            s.k(),
            s.ambient_dim(),
        ));
    }
    let t = s.thickness();
    if t <= R::zero() {
        return Err(SimplexError::DegenerateSource);
    }
    let l = s.longest_edge();
    let la = s.edge_lengths();
    let lb = s_perturbed.edge_lengths();
    let mut max_dev = R::zero();
    for i in 0..la.nrows() {
        for j in 0..la.ncols() {
            let dev = (la[(i, j)] - lb[(i, j)]).abs();
            if dev > max_dev {
                max_dev = dev;
            }
        }
    }
    let c0 = max_dev / l;
    if c0 > R::of(2.0 / 3.0) {
        return Err(SimplexError::PerturbationTooLarge {
            max_dev: max_dev.to64(),
            allowed: (R::of(2.0 / 3.0) * l).to64(),
        });
    }
    Ok(R::of(4.0) * c0 / (t * t))
}

/// Largest sampled relative distortion of the affine map sending `s` to
/// `s_perturbed`, over `pairs` random point pairs inside `s`.
pub fn max_affine_distortion<R: Real>(
    s: &EuclideanSimplex<R>,
    s_perturbed: &EuclideanSimplex<R>,
    pairs: usize,
    rng: &mut impl Rng,
) -> Result<R, SimplexError> {
    if s.k() != s.ambient_dim() {
        return Err(SimplexError::TooManyVertices {
            k: s.k(),
            n: s.ambient_dim(),
        });
    }
    let p = s.edge_matrix(0)?;
    let pt = s_perturbed.edge_matrix(0)?;
    let pinv = p
        .clone()
        .try_inverse()
        .ok_or(SimplexError::DegenerateSource)?;
    let a = &pt * &pinv;
    let m = s.vertices().len();
    let mut worst = R::zero();
    for _ in 0..pairs {
        let lam: Vec<R> = sample::dirichlet(m, rng);
        let mu: Vec<R> = sample::dirichlet(m, rng);
        let x = barycentric_point(s, &lam);
        let y = barycentric_point(s, &mu);
        let d = (&x - &y).norm();
        if d <= R::of(1e-14) {
            continue;
        }
        let dx = &a * (&x - &y);
        let ratio = (dx.norm() - d).abs() / d;
        if ratio > worst {
            worst = ratio;
        }
    }
    Ok(worst)
}

/// Affine combination of the vertices with the given weights.
pub fn barycentric_point<R: Real>(s: &EuclideanSimplex<R>, weights: &[R]) -> DVector<R> {
    let mut x = DVector::zeros(s.ambient_dim());
    for (w, v) in weights.iter().zip(s.vertices()) {
        x += v * *w;
    }
    x
}

/// Gaussian random `k`-simplex in `R^n`, for test batteries.
pub fn sample_gaussian_simplex<R: Real>(
    k: usize,
    n: usize,
    rng: &mut impl Rng,
) -> EuclideanSimplex<R> {
    assert!(k <= n);
    let vs = (0..=k).map(|_| sample::gauss_vector(n, rng)).collect();
    EuclideanSimplex::new(vs).expect("dimensions consistent")
}
