//! Abstract simplicial complexes, star/link machinery, the full-star
//! embedding check in a tangent chart, and the test-mesh generators.

use crate::manifold::{ManifoldError, ModelManifold};
use crate::scalar::Real;
use crate::simplex::EuclideanSimplex;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error)]
pub enum ComplexError {
    #[error("vertex {0} is not part of the complex")]
    UnknownVertex(usize),
    #[error("vertex index {index} out of range for {count} vertices")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error("exact star checks support dimension <= {max}, got {dim}")]
    DimensionUnsupported { dim: usize, max: usize },
    #[error("chart construction failed: {0}")]
    Chart(#[from] ManifoldError),
}

/// A face-closed set of sorted vertex tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractComplex {
    vertex_count: usize,
    simplices: BTreeSet<Vec<usize>>,
    dim: usize,
}

fn push_faces(simplex: &[usize], out: &mut BTreeSet<Vec<usize>>) {
    // All nonempty subsets, via the bitmask; tuples arrive sorted.
    let n = simplex.len();
    for mask in 1..(1u32 << n) {
        let mut face = Vec::with_capacity(mask.count_ones() as usize);
        for (i, &v) in simplex.iter().enumerate() {
            if mask & (1 << i) != 0 {
                face.push(v);
            }
        }
        out.insert(face);
    }
}

impl AbstractComplex {
    /// Build from top-level simplices; faces are added automatically.
    pub fn new(vertex_count: usize, top: &[Vec<usize>]) -> Result<Self, ComplexError> {
        let mut simplices = BTreeSet::new();
        for s in top {
            let mut t = s.clone();
            t.sort_unstable();
            t.dedup();
            if t.len() != s.len() {
                return Err(ComplexError::BadParams(format!(
                    "repeated vertex in simplex {s:?}"
                )));
            }
            for &v in &t {
                if v >= vertex_count {
                    return Err(ComplexError::IndexOutOfRange {
                        index: v,
                        count: vertex_count,
                    });
                }
            }
            push_faces(&t, &mut simplices);
        }
        let dim = simplices.iter().map(|s| s.len() - 1).max().unwrap_or(0);
        Ok(Self {
            vertex_count,
            simplices,
            dim,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Dimension of the largest simplex.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, simplex: &[usize]) -> bool {
        let mut t = simplex.to_vec();
        t.sort_unstable();
        self.simplices.contains(&t)
    }

    pub fn simplices(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.simplices.iter()
    }

    pub fn simplices_of_dim(&self, d: usize) -> impl Iterator<Item = &Vec<usize>> {
        self.simplices.iter().filter(move |s| s.len() == d + 1)
    }

    /// Simplices not contained in any larger simplex.
    pub fn maximal_simplices(&self) -> Vec<&Vec<usize>> {
        self.simplices
            .iter()
            .filter(|s| {
                !self
                    .simplices
                    .iter()
                    .any(|t| t.len() > s.len() && s.iter().all(|v| t.contains(v)))
            })
            .collect()
    }

    /// Vertices that actually appear in some simplex.
    pub fn used_vertices(&self) -> BTreeSet<usize> {
        self.simplices.iter().flatten().copied().collect()
    }

    /// Sum of `(-1)^d` over all simplices.
    pub fn euler_characteristic(&self) -> i64 {
        self.simplices
            .iter()
            .map(|s| if (s.len() - 1) % 2 == 0 { 1i64 } else { -1i64 })
            .sum()
    }

    /// Subcomplex of everything touching `p`, closed under faces.
    pub fn star(&self, p: usize) -> Result<Self, ComplexError> {
        if !self.simplices.contains(&vec![p]) {
            return Err(ComplexError::UnknownVertex(p));
        }
        let mut simplices = BTreeSet::new();
        for s in &self.simplices {
            if s.contains(&p) {
                push_faces(s, &mut simplices);
            }
        }
        let dim = simplices.iter().map(|s| s.len() - 1).max().unwrap_or(0);
        Ok(Self {
            vertex_count: self.vertex_count,
            simplices,
            dim,
        })
    }

    /// Faces of star simplices that avoid `p`.
    pub fn link(&self, p: usize) -> Result<Self, ComplexError> {
        let star = self.star(p)?;
        let simplices: BTreeSet<Vec<usize>> = star
            .simplices
            .iter()
            .filter(|s| !s.contains(&p))
            .cloned()
            .collect();
        let dim = simplices.iter().map(|s| s.len() - 1).max().unwrap_or(0);
        Ok(Self {
            vertex_count: self.vertex_count,
            simplices,
            dim,
        })
    }

    /// Connectivity of the top-dimensional simplices through shared facets.
    fn strongly_connected(&self) -> bool {
        let tops: Vec<&Vec<usize>> = self.simplices_of_dim(self.dim).collect();
        if tops.len() <= 1 {
            return true;
        }
        let mut facet_map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (idx, s) in tops.iter().enumerate() {
            for skip in 0..s.len() {
                let mut f = (*s).clone();
                f.remove(skip);
                facet_map.entry(f).or_default().push(idx);
            }
        }
        let mut seen = vec![false; tops.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for skip in 0..tops[i].len() {
                let mut f = tops[i].clone();
                f.remove(skip);
                for &j in &facet_map[&f] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Whether the 1-skeleton of this (sub)complex is connected on its used
    /// vertices.
    fn skeleton_connected(&self) -> bool {
        let verts: Vec<usize> = self.used_vertices().into_iter().collect();
        if verts.len() <= 1 {
            return true;
        }
        let index: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); verts.len()];
        for e in self.simplices_of_dim(1) {
            let a = index[&e[0]];
            let b = index[&e[1]];
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; verts.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

/// Combinatorial health report for a complex that should triangulate a
/// closed n-manifold.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ManifoldComplexReport {
    /// Every maximal simplex has the top dimension.
    pub pure: bool,
    /// Every ridge bounds exactly two top simplices.
    pub closed_pseudomanifold: bool,
    /// Top simplices form one component through shared ridges.
    pub strongly_connected: bool,
    /// Vertex links look like spheres (checked combinatorially for
    /// dimension <= 3; vacuous above).
    pub links_ok: bool,
    pub links_checked: bool,
    /// Vertices whose link failed.
    pub link_failures: Vec<usize>,
    pub euler_characteristic: i64,
}

impl ManifoldComplexReport {
    pub fn all_ok(&self) -> bool {
        self.pure && self.closed_pseudomanifold && self.strongly_connected && self.links_ok
    }
}

/// Check a vertex link combinatorially: a single closed cycle in dimension
/// 2, a connected closed surface of Euler characteristic 2 in dimension 3.
fn link_is_sphere(link: &AbstractComplex, ambient_dim: usize) -> bool {
    match ambient_dim {
        1 => link.simplices_of_dim(0).count() == 2,
        2 => {
            let verts = link.used_vertices().len();
            let edges = link.simplices_of_dim(1).count();
            if verts == 0 || edges != verts {
                return false;
            }
            let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
            for e in link.simplices_of_dim(1) {
                *degree.entry(e[0]).or_insert(0) += 1;
                *degree.entry(e[1]).or_insert(0) += 1;
            }
            degree.values().all(|&d| d == 2) && link.skeleton_connected()
        }
        3 => {
            let mut edge_use: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for t in link.simplices_of_dim(2) {
                for skip in 0..3 {
                    let mut e = t.clone();
                    e.remove(skip);
                    *edge_use.entry(e).or_insert(0) += 1;
                }
            }
            if edge_use.is_empty() || edge_use.values().any(|&c| c != 2) {
                return false;
            }
            link.euler_characteristic() == 2 && link.skeleton_connected()
        }
        _ => true,
    }
}

pub fn is_manifold_complex(a: &AbstractComplex) -> ManifoldComplexReport {
    let n = a.dim();
    let pure = a.maximal_simplices().iter().all(|s| s.len() == n + 1);
    let mut ridge_use: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for s in a.simplices_of_dim(n) {
        for skip in 0..s.len() {
            let mut f = s.clone();
            f.remove(skip);
            *ridge_use.entry(f).or_insert(0) += 1;
        }
    }
    let closed_pseudomanifold = n >= 1 && ridge_use.values().all(|&c| c == 2);
    let strongly_connected = a.strongly_connected();
    let links_checked = n <= 3;
    let mut link_failures = Vec::new();
    if links_checked {
        for &v in &a.used_vertices() {
            let link = a.link(v).expect("used vertex is present");
            if !link_is_sphere(&link, n) {
                link_failures.push(v);
            }
        }
    }
    ManifoldComplexReport {
        pure,
        closed_pseudomanifold,
        strongly_connected,
        links_ok: link_failures.is_empty(),
        links_checked,
        link_failures,
        euler_characteristic: a.euler_characteristic(),
    }
}

/// A vertex star carried into a tangent chart: the center maps to the
/// origin, every star vertex to its log coordinates.
#[derive(Debug, Clone)]
pub struct LiftedStar<R: Real> {
    pub center: usize,
    pub star: AbstractComplex,
    chart: BTreeMap<usize, DVector<R>>,
}

impl<R: Real> LiftedStar<R> {
    /// Assemble from explicit chart coordinates (the center must map to the
    /// origin).
    pub fn from_chart(
        center: usize,
        star: AbstractComplex,
        chart: BTreeMap<usize, DVector<R>>,
    ) -> Result<Self, ComplexError> {
        let origin = chart
            .get(&center)
            .ok_or(ComplexError::UnknownVertex(center))?;
        if origin.norm() > R::of(1e-12) {
            return Err(ComplexError::BadParams(
                "star center must sit at the chart origin".into(),
            ));
        }
        for v in star.used_vertices() {
            if !chart.contains_key(&v) {
                return Err(ComplexError::UnknownVertex(v));
            }
        }
        Ok(Self {
            center,
            star,
            chart,
        })
    }

    /// Lift the star of `center` through `log` at its point, coordinates in
    /// the deterministic tangent frame there.
    pub fn from_points(
        m: &ModelManifold<R>,
        points: &[DVector<R>],
        complex: &AbstractComplex,
        center: usize,
    ) -> Result<Self, ComplexError> {
        let star = complex.star(center)?;
        let base = &points[center];
        let frame = m.tangent_basis(base);
        let mut chart = BTreeMap::new();
        for v in star.used_vertices() {
            if v >= points.len() {
                return Err(ComplexError::IndexOutOfRange {
                    index: v,
                    count: points.len(),
                });
            }
            let l = m.log(base, &points[v])?;
            chart.insert(v, m.frame_coords(base, &frame, &l));
        }
        Ok(Self {
            center,
            star,
            chart,
        })
    }

    pub fn chart_point(&self, v: usize) -> &DVector<R> {
        &self.chart[&v]
    }

    /// Chart dimension.
    pub fn dim(&self) -> usize {
        self.chart[&self.center].len()
    }

    fn geometric(&self, simplex: &[usize]) -> EuclideanSimplex<R> {
        EuclideanSimplex::new(simplex.iter().map(|v| self.chart[v].clone()).collect())
            .expect("chart points share the ambient dimension")
    }
}

/// How pairwise interior disjointness was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    Exact,
    Sampled,
}

/// Outcome of the geometric full-star verification.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FullStarReport {
    pub thickness_ok: bool,
    pub min_thickness: f64,
    /// Open top-simplices pairwise disjoint in the chart.
    pub embedded: bool,
    /// Worst interior-overlap margin over simplex pairs (positive means an
    /// actual overlap).
    pub max_overlap_margin: f64,
    pub orientation_consistent: bool,
    pub center_interior: bool,
    pub mode: CheckMode,
}

impl FullStarReport {
    pub fn all_ok(&self) -> bool {
        self.thickness_ok && self.embedded && self.orientation_consistent && self.center_interior
    }
}

/// Largest interior margin with which the two open simplices intersect:
/// maximize `delta` subject to a common point carrying barycentric weights
/// `>= delta` in both.  Nonpositive means disjoint interiors.  Solved by
/// enumerating basic solutions of the equality-constrained program.
fn interior_overlap_margin<R: Real>(a: &EuclideanSimplex<R>, b: &EuclideanSimplex<R>) -> f64 {
    let n = a.ambient_dim();
    let ka = a.k() + 1;
    let kb = b.k() + 1;
    let vars = ka + kb + 1;
    let eqs = n + 2;
    // Equalities: sum(lambda_i v_i) - sum(mu_j w_j) = 0; sums = 1.
    let mut e = DMatrix::<R>::zeros(eqs, vars);
    let mut rhs = DVector::<R>::zeros(eqs);
    for i in 0..ka {
        for r in 0..n {
            e[(r, i)] = a.vertex(i)[r];
        }
        e[(n, i)] = R::one();
    }
    for j in 0..kb {
        for r in 0..n {
            e[(r, ka + j)] = -b.vertex(j)[r];
        }
        e[(n + 1, ka + j)] = R::one();
    }
    rhs[n] = R::one();
    rhs[n + 1] = R::one();

    // Inequalities: weight - delta >= 0 for each of the ka + kb weights.
    let ineqs = ka + kb;
    let actives_needed = vars.saturating_sub(eqs);
    if actives_needed > ineqs {
        return f64::NEG_INFINITY;
    }

    let mut best = f64::NEG_INFINITY;
    let mut active = vec![0usize; actives_needed];
    enumerate_subsets(ineqs, actives_needed, &mut active, 0, 0, &mut |subset| {
        let rows = eqs + subset.len();
        let mut sys = DMatrix::<R>::zeros(rows, vars);
        let mut srhs = DVector::<R>::zeros(rows);
        sys.view_mut((0, 0), (eqs, vars)).copy_from(&e);
        srhs.rows_mut(0, eqs).copy_from(&rhs);
        for (extra, &w) in subset.iter().enumerate() {
            sys[(eqs + extra, w)] = R::one();
            sys[(eqs + extra, vars - 1)] = -R::one();
        }
        if rows != vars {
            return;
        }
        let lu = sys.lu();
        let Some(sol) = lu.solve(&srhs) else {
            return;
        };
        let delta = sol[vars - 1].to64();
        if delta <= best {
            return;
        }
        // Feasibility of the remaining weight inequalities.
        for w in 0..ineqs {
            if (sol[w] - sol[vars - 1]).to64() < -1e-9 {
                return;
            }
        }
        best = delta;
    });
    best
}

fn enumerate_subsets(
    n: usize,
    k: usize,
    buf: &mut Vec<usize>,
    start: usize,
    depth: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        f(buf);
        return;
    }
    for i in start..n {
        buf[depth] = i;
        enumerate_subsets(n, k, buf, i + 1, depth + 1, f);
    }
}

fn sampled_overlap<R: Real>(
    a: &EuclideanSimplex<R>,
    b: &EuclideanSimplex<R>,
    samples: usize,
    rng: &mut impl Rng,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let w = crate::sample::dirichlet::<R>(a.k() + 1, rng);
        let mut x = DVector::zeros(a.ambient_dim());
        for (i, &wi) in w.iter().enumerate() {
            x += a.vertex(i) * wi;
        }
        if let Some(coords) = barycentric_coordinates(b, &x) {
            let margin_b = coords
                .iter()
                .fold(R::inf(), |acc, &c| acc.min(c))
                .to64();
            let margin_a = w.iter().fold(R::inf(), |acc, &c| acc.min(c)).to64();
            worst = worst.max(margin_a.min(margin_b));
        }
    }
    worst
}

/// Barycentric coordinates of `x` in the affine hull of `s`, or `None` when
/// `x` is off the hull (beyond tolerance) or the simplex is degenerate.
pub fn barycentric_coordinates<R: Real>(
    s: &EuclideanSimplex<R>,
    x: &DVector<R>,
) -> Option<DVector<R>> {
    let k = s.k();
    let p = s.edge_matrix(0).ok()?;
    let svd = p.clone().svd(true, true);
    let smax = svd.singular_values[0];
    if smax <= R::zero() || svd.singular_values[k - 1] <= smax * R::of(1e-12) {
        return None;
    }
    let rel = x - s.vertex(0);
    let u = svd.pseudo_inverse(smax * R::of(1e-13)).ok()?.clone() * &rel;
    let recon = &p * &u;
    if (&recon - &rel).norm() > R::of(1e-9) * (R::one() + rel.norm()) {
        return None;
    }
    let mut coords = DVector::zeros(k + 1);
    let mut rest = R::zero();
    for i in 0..k {
        coords[i + 1] = u[i];
        rest += u[i];
    }
    coords[0] = R::one() - rest;
    Some(coords)
}

/// Signed volume determinant of the simplex spanned by `anchor` facet
/// vertices and an apex, with columns ordered apex-first.
fn side_determinant<R: Real>(
    chart: &BTreeMap<usize, DVector<R>>,
    facet: &[usize],
    apex: usize,
) -> R {
    let base = &chart[&facet[0]];
    let n = base.len();
    let mut m = DMatrix::<R>::zeros(n, n);
    m.set_column(0, &(&chart[&apex] - base));
    for (c, &v) in facet.iter().skip(1).enumerate() {
        m.set_column(c + 1, &(&chart[&v] - base));
    }
    m.determinant()
}

/// Verify that the lifted star is a genuine full star: thick simplices, a
/// consistent orientation, pairwise-disjoint interiors, and the center
/// strictly inside.  Exact separation runs for chart dimension <= 3;
/// `Sampled` mode Monte Carlo tests the interiors instead.
pub fn full_star_check<R: Real>(
    ls: &LiftedStar<R>,
    t0: f64,
    mode: CheckMode,
    seed: u64,
) -> Result<FullStarReport, ComplexError> {
    let n = ls.star.dim();
    if n != ls.dim() {
        return Err(ComplexError::BadParams(format!(
            "star dimension {n} does not match chart dimension {}",
            ls.dim()
        )));
    }
    if mode == CheckMode::Exact && n > 3 {
        return Err(ComplexError::DimensionUnsupported { dim: n, max: 3 });
    }

    let tops: Vec<&Vec<usize>> = ls.star.simplices_of_dim(n).collect();
    let geoms: Vec<EuclideanSimplex<R>> = tops.iter().map(|s| ls.geometric(s)).collect();

    let mut min_thickness = f64::INFINITY;
    for g in &geoms {
        min_thickness = min_thickness.min(g.thickness().to64());
    }
    let thickness_ok = !geoms.is_empty() && min_thickness >= t0 * (1.0 - 1e-12) - 1e-15;

    // Orientation: across every ridge shared by two top simplices, the two
    // apexes must fall on opposite sides.
    let mut ridge_map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (idx, s) in tops.iter().enumerate() {
        for skip in 0..s.len() {
            let mut f = (*s).clone();
            f.remove(skip);
            ridge_map.entry(f).or_default().push(idx);
        }
    }
    let mut orientation_consistent = true;
    for (ridge, owners) in &ridge_map {
        if owners.len() == 2 {
            let apex = |idx: usize| {
                tops[idx]
                    .iter()
                    .copied()
                    .find(|v| !ridge.contains(v))
                    .expect("top simplex exceeds its ridge")
            };
            let d0 = side_determinant(&ls.chart, ridge, apex(owners[0]));
            let d1 = side_determinant(&ls.chart, ridge, apex(owners[1]));
            if !(d0.to64() * d1.to64() < 0.0) {
                orientation_consistent = false;
            }
        }
    }

    // Pairwise interior disjointness.
    let mut max_overlap_margin = f64::NEG_INFINITY;
    match mode {
        CheckMode::Exact => {
            for i in 0..geoms.len() {
                for j in (i + 1)..geoms.len() {
                    max_overlap_margin =
                        max_overlap_margin.max(interior_overlap_margin(&geoms[i], &geoms[j]));
                }
            }
        }
        CheckMode::Sampled => {
            let mut rng = crate::sample::rng_from_seed(seed);
            let pairs = geoms.len() * geoms.len().saturating_sub(1) / 2;
            let per_pair = (100_000 / pairs.max(1)).max(64);
            for i in 0..geoms.len() {
                for j in (i + 1)..geoms.len() {
                    max_overlap_margin = max_overlap_margin
                        .max(sampled_overlap(&geoms[i], &geoms[j], per_pair, &mut rng));
                    max_overlap_margin = max_overlap_margin
                        .max(sampled_overlap(&geoms[j], &geoms[i], per_pair, &mut rng));
                }
            }
        }
    }
    let embedded = max_overlap_margin <= 1e-10;

    // Center interiority: the link must close up around the origin and each
    // ray through a link-facet barycenter must leave through exactly one
    // facet.
    let link = ls.star.link(ls.center).expect("center is in its own star");
    let link_report = is_manifold_complex(&link);
    let link_closed = link.dim() + 1 == n
        && link_report.pure
        && link_report.closed_pseudomanifold
        && link_report.strongly_connected;
    let mut center_interior = link_closed;
    if center_interior {
        let facets: Vec<&Vec<usize>> = link.simplices_of_dim(n - 1).collect();
        for probe in &facets {
            let mut dir = DVector::<R>::zeros(ls.dim());
            for &v in probe.iter() {
                dir += &ls.chart[&v];
            }
            dir /= R::of(probe.len() as f64);
            if dir.norm() <= R::of(1e-12) {
                center_interior = false;
                break;
            }
            let mut crossings = 0usize;
            for facet in &facets {
                if ray_hits_facet(&ls.chart, facet, &dir) {
                    crossings += 1;
                }
            }
            if crossings != 1 {
                center_interior = false;
                break;
            }
        }
    }

    Ok(FullStarReport {
        thickness_ok,
        min_thickness,
        embedded,
        max_overlap_margin,
        orientation_consistent,
        center_interior,
        mode,
    })
}

/// Whether the open ray from the origin along `dir` meets the geometric
/// `(n-1)`-simplex on the given vertices.
fn ray_hits_facet<R: Real>(
    chart: &BTreeMap<usize, DVector<R>>,
    facet: &[usize],
    dir: &DVector<R>,
) -> bool {
    let n = dir.len();
    debug_assert_eq!(facet.len(), n);
    // Solve sum(alpha_i w_i) = t * dir with sum(alpha) = 1.
    let mut m = DMatrix::<R>::zeros(n + 1, n + 1);
    let mut rhs = DVector::<R>::zeros(n + 1);
    for (c, &v) in facet.iter().enumerate() {
        for r in 0..n {
            m[(r, c)] = chart[&v][r];
        }
        m[(n, c)] = R::one();
    }
    for r in 0..n {
        m[(r, n)] = -dir[r];
    }
    rhs[n] = R::one();
    let Some(sol) = m.lu().solve(&rhs) else {
        return false;
    };
    if sol[n] <= R::of(1e-12) {
        return false;
    }
    (0..n).all(|i| sol[i] >= R::of(-1e-9))
}

/// A generated point set bound to its manifold and combinatorics.
#[derive(Debug, Clone)]
pub struct GeneratedMesh<R: Real> {
    pub manifold: ModelManifold<R>,
    pub points: Vec<DVector<R>>,
    pub complex: AbstractComplex,
    pub name: String,
}

const ICOSA_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn icosa_vertices<R: Real>() -> Vec<DVector<R>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    raw.iter()
        .map(|c| {
            let v = DVector::from_vec(vec![R::of(c[0]), R::of(c[1]), R::of(c[2])]);
            let n = v.norm();
            v / n
        })
        .collect()
}

/// Geodesic sphere: the icosahedron subdivided `level` times by edge
/// midpoints and reprojected.  Unit-vector coordinates; the radius lives in
/// the manifold descriptor.
pub fn generate_icosphere<R: Real>(level: usize, radius: R) -> Result<GeneratedMesh<R>, ComplexError> {
    if radius <= R::zero() {
        return Err(ComplexError::BadParams("radius must be positive".into()));
    }
    if level > 7 {
        return Err(ComplexError::BadParams(format!(
            "subdivision level {level} too deep"
        )));
    }
    let mut verts = icosa_vertices::<R>();
    let mut faces: Vec<[usize; 3]> = ICOSA_FACES.to_vec();
    for _ in 0..level {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[e] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (&verts[a] + &verts[b]) * R::of(0.5);
                    let n = m.norm();
                    verts.push(m / n);
                    verts.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }
    let complex = AbstractComplex::new(
        verts.len(),
        &faces.iter().map(|f| f.to_vec()).collect::<Vec<_>>(),
    )?;
    Ok(GeneratedMesh {
        manifold: ModelManifold::sphere(2, radius),
        points: verts,
        complex,
        name: format!("icosphere-{level}"),
    })
}

/// Octahedron boundary on the sphere.
pub fn generate_octahedron<R: Real>(radius: R) -> Result<GeneratedMesh<R>, ComplexError> {
    if radius <= R::zero() {
        return Err(ComplexError::BadParams("radius must be positive".into()));
    }
    let mut points = Vec::new();
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut v = DVector::<R>::zeros(3);
            v[axis] = R::of(sign);
            points.push(v);
        }
    }
    // Vertex order: +x, -x, +y, -y, +z, -z.
    let faces = vec![
        vec![0, 2, 4],
        vec![2, 1, 4],
        vec![1, 3, 4],
        vec![3, 0, 4],
        vec![2, 0, 5],
        vec![1, 2, 5],
        vec![3, 1, 5],
        vec![0, 3, 5],
    ];
    let complex = AbstractComplex::new(points.len(), &faces)?;
    Ok(GeneratedMesh {
        manifold: ModelManifold::sphere(2, radius),
        points,
        complex,
        name: "octahedron".into(),
    })
}

/// Square-grid triangulation of a rectangular flat torus, each cell split
/// along one diagonal.
pub fn generate_grid_torus<R: Real>(
    n: usize,
    periods: (R, R),
) -> Result<GeneratedMesh<R>, ComplexError> {
    if n < 3 {
        return Err(ComplexError::BadParams(format!(
            "grid size {n} below 3 collapses wraparound edges"
        )));
    }
    let (lx, ly) = periods;
    if lx <= R::zero() || ly <= R::zero() {
        return Err(ComplexError::BadParams("periods must be positive".into()));
    }
    let id = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut points = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push(DVector::from_vec(vec![
                lx * R::of(i as f64) / R::of(n as f64),
                ly * R::of(j as f64) / R::of(n as f64),
            ]));
        }
    }
    let mut faces = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            faces.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let complex = AbstractComplex::new(points.len(), &faces)?;
    Ok(GeneratedMesh {
        manifold: ModelManifold::flat_torus(vec![lx, ly]),
        points,
        complex,
        name: format!("grid-torus-{n}"),
    })
}

/// Copy of a mesh with every vertex pushed along a random tangent of length
/// at most `magnitude`.
pub fn generate_perturbed<R: Real>(
    mesh: &GeneratedMesh<R>,
    magnitude: R,
    seed: u64,
) -> Result<GeneratedMesh<R>, ComplexError> {
    if magnitude < R::zero() {
        return Err(ComplexError::BadParams("magnitude must be nonnegative".into()));
    }
    let mut rng = crate::sample::rng_from_seed(seed);
    let points = mesh
        .points
        .iter()
        .map(|p| {
            let t = mesh.manifold.random_tangent_in_ball(p, magnitude, &mut rng);
            mesh.manifold.exp(p, &t)
        })
        .collect();
    Ok(GeneratedMesh {
        manifold: mesh.manifold.clone(),
        points,
        complex: mesh.complex.clone(),
        name: format!("{}-perturbed", mesh.name),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tetra_boundary() -> AbstractComplex {
        AbstractComplex::new(
            4,
            &[vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn face_closure_and_counts() {
        let c = tetra_boundary();
        assert_eq!(c.dim(), 2);
        assert_eq!(c.simplices_of_dim(0).count(), 4);
        assert_eq!(c.simplices_of_dim(1).count(), 6);
        assert_eq!(c.simplices_of_dim(2).count(), 4);
        assert!(c.contains(&[2, 0]));
        assert_eq!(c.euler_characteristic(), 2);
    }

    #[test]
    fn rejects_bad_indices_and_duplicates() {
        assert!(AbstractComplex::new(2, &[vec![0, 1, 2]]).is_err());
        assert!(AbstractComplex::new(3, &[vec![0, 1, 1]]).is_err());
    }

    #[test]
    fn tetra_star_and_link() {
        let c = tetra_boundary();
        let star = c.star(0).unwrap();
        assert_eq!(star.simplices_of_dim(2).count(), 3);
        let link = c.link(0).unwrap();
        assert_eq!(link.simplices_of_dim(1).count(), 3);
        assert_eq!(link.used_vertices().len(), 3);
        assert!(link_is_sphere(&link, 2));
        assert!(c.star(7).is_err());
    }

    #[test]
    fn octahedron_star_and_links() {
        let mesh = generate_octahedron::<f64>(1.0).unwrap();
        let c = &mesh.complex;
        for v in 0..6 {
            let star = c.star(v).unwrap();
            assert_eq!(star.simplices_of_dim(2).count(), 4, "vertex {v}");
            let link = c.link(v).unwrap();
            assert_eq!(link.simplices_of_dim(1).count(), 4);
            assert!(link_is_sphere(&link, 2));
        }
        let rep = is_manifold_complex(c);
        assert!(rep.all_ok());
        assert_eq!(rep.euler_characteristic, 2);
    }

    #[test]
    fn pinched_complex_fails_link_check() {
        // Two triangles glued at vertex 2 only.
        let c = AbstractComplex::new(5, &[vec![0, 1, 2], vec![2, 3, 4]]).unwrap();
        let rep = is_manifold_complex(&c);
        assert!(!rep.links_ok);
        assert!(rep.link_failures.contains(&2));
        assert!(!rep.closed_pseudomanifold, "boundary edges are single-use");
    }

    #[test]
    fn icosphere_counts_and_edge_length() {
        for level in 0..4usize {
            let mesh = generate_icosphere::<f64>(level, 1.0).unwrap();
            let expect_v = 10 * 4usize.pow(level as u32) + 2;
            let expect_f = 20 * 4usize.pow(level as u32);
            assert_eq!(mesh.points.len(), expect_v, "level {level} vertices");
            assert_eq!(
                mesh.complex.simplices_of_dim(2).count(),
                expect_f,
                "level {level} faces"
            );
            let rep = is_manifold_complex(&mesh.complex);
            assert!(rep.all_ok(), "level {level} combinatorics");
            assert_eq!(rep.euler_characteristic, 2);
            for p in &mesh.points {
                assert_relative_eq!(p.norm(), 1.0, epsilon = 1e-12);
            }
        }
        let mesh = generate_icosphere::<f64>(0, 1.0).unwrap();
        let e = mesh.complex.simplices_of_dim(1).next().unwrap();
        let d = mesh.manifold.dist(&mesh.points[e[0]], &mesh.points[e[1]]);
        assert_relative_eq!(d, 2f64.atan(), max_relative = 1e-12);
    }

    #[test]
    fn grid_torus_counts_and_edges() {
        let mesh = generate_grid_torus::<f64>(4, (1.0, 1.0)).unwrap();
        assert_eq!(mesh.points.len(), 16);
        assert_eq!(mesh.complex.simplices_of_dim(2).count(), 32);
        let rep = is_manifold_complex(&mesh.complex);
        assert!(rep.all_ok());
        assert_eq!(rep.euler_characteristic, 0);
        let mut max_edge = 0f64;
        for e in mesh.complex.simplices_of_dim(1) {
            max_edge = max_edge.max(mesh.manifold.dist(&mesh.points[e[0]], &mesh.points[e[1]]));
        }
        assert_relative_eq!(max_edge, 2f64.sqrt() / 4.0, max_relative = 1e-12);
        assert!(generate_grid_torus::<f64>(2, (1.0, 1.0)).is_err());
    }

    fn planar_fan(count: usize) -> (AbstractComplex, BTreeMap<usize, DVector<f64>>) {
        let mut chart = BTreeMap::new();
        chart.insert(0usize, DVector::from_vec(vec![0.0, 0.0]));
        for j in 0..6 {
            let a = std::f64::consts::FRAC_PI_3 * j as f64;
            chart.insert(j + 1, DVector::from_vec(vec![a.cos(), a.sin()]));
        }
        let tris: Vec<Vec<usize>> = (0..count)
            .map(|j| vec![0, j + 1, (j + 1) % 6 + 1])
            .collect();
        (AbstractComplex::new(7, &tris).unwrap(), chart)
    }

    #[test]
    fn full_fan_passes_all_checks() {
        let (complex, chart) = planar_fan(6);
        let star = complex.star(0).unwrap();
        let ls = LiftedStar::from_chart(0, star, chart).unwrap();
        let rep = full_star_check(&ls, 0.4, CheckMode::Exact, 1).unwrap();
        assert!(rep.thickness_ok, "equilateral thickness {}", rep.min_thickness);
        assert!(rep.embedded, "overlap margin {}", rep.max_overlap_margin);
        assert!(rep.orientation_consistent);
        assert!(rep.center_interior);
        assert!(rep.all_ok());
    }

    #[test]
    fn half_fan_is_a_boundary_star() {
        let (complex, chart) = planar_fan(3);
        let star = complex.star(0).unwrap();
        let ls = LiftedStar::from_chart(0, star, chart).unwrap();
        let rep = full_star_check(&ls, 0.4, CheckMode::Exact, 1).unwrap();
        assert!(rep.thickness_ok && rep.embedded && rep.orientation_consistent);
        assert!(!rep.center_interior);
        assert!(!rep.all_ok());
    }

    #[test]
    fn reflected_spoke_breaks_orientation() {
        let (complex, mut chart) = planar_fan(6);
        let v2 = chart[&2].clone();
        chart.insert(2, -v2);
        let star = complex.star(0).unwrap();
        let ls = LiftedStar::from_chart(0, star, chart).unwrap();
        let rep = full_star_check(&ls, 0.0, CheckMode::Exact, 1).unwrap();
        assert!(!rep.orientation_consistent);
        assert!(!rep.embedded, "reflected spoke overlaps its neighbors");
    }

    #[test]
    fn overlap_margin_known_cases() {
        let tri = |pts: [[f64; 2]; 3]| {
            EuclideanSimplex::new(pts.iter().map(|p| DVector::from_vec(p.to_vec())).collect())
                .unwrap()
        };
        let a = tri([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        // Shares only the edge x + y = 1.
        let b = tri([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert!(interior_overlap_margin(&a, &b).abs() < 1e-9);
        // Far away.
        let c = tri([[5.0, 5.0], [6.0, 5.0], [5.0, 6.0]]);
        assert!(interior_overlap_margin(&a, &c) < -1e-3);
        // Genuine overlap.
        let d = tri([[0.1, 0.1], [1.1, 0.1], [0.1, 1.1]]);
        assert!(interior_overlap_margin(&a, &d) > 1e-3);
        // Sampled mode agrees on the overlap case.
        let mut rng = crate::sample::rng_from_seed(5);
        assert!(sampled_overlap(&a, &d, 2000, &mut rng) > 1e-3);
    }

    #[test]
    fn grid_torus_stars_all_pass() {
        let mesh = generate_grid_torus::<f64>(4, (1.0, 1.0)).unwrap();
        for v in 0..mesh.points.len() {
            let ls =
                LiftedStar::from_points(&mesh.manifold, &mesh.points, &mesh.complex, v).unwrap();
            let rep = full_star_check(&ls, 0.25, CheckMode::Exact, 1).unwrap();
            assert!(rep.all_ok(), "vertex {v}: {rep:?}");
            assert_relative_eq!(rep.min_thickness, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn icosphere_stars_pass_at_their_scale() {
        let mesh = generate_icosphere::<f64>(1, 1.0).unwrap();
        for v in [0usize, 12, 20] {
            let ls =
                LiftedStar::from_points(&mesh.manifold, &mesh.points, &mesh.complex, v).unwrap();
            let rep = full_star_check(&ls, 0.3, CheckMode::Exact, 1).unwrap();
            assert!(rep.all_ok(), "vertex {v}: {rep:?}");
        }
    }

    #[test]
    fn sampled_mode_matches_exact_on_fan() {
        let (complex, chart) = planar_fan(6);
        let star = complex.star(0).unwrap();
        let ls = LiftedStar::from_chart(0, star, chart).unwrap();
        let rep = full_star_check(&ls, 0.4, CheckMode::Sampled, 9).unwrap();
        assert_eq!(rep.mode, CheckMode::Sampled);
        assert!(rep.embedded);
        assert!(rep.all_ok());
    }

    #[test]
    fn perturbed_mesh_stays_on_manifold() {
        let mesh = generate_icosphere::<f64>(1, 1.0).unwrap();
        let p = generate_perturbed(&mesh, 0.01, 17).unwrap();
        assert_eq!(p.points.len(), mesh.points.len());
        let mut moved = 0.0f64;
        for (a, b) in mesh.points.iter().zip(&p.points) {
            mesh.manifold.check_point(b).unwrap();
            moved = moved.max(mesh.manifold.dist(a, b));
        }
        assert!(moved > 1e-4 && moved <= 0.0100001, "max move {moved}");
        // Same seed, same mesh.
        let p2 = generate_perturbed(&mesh, 0.01, 17).unwrap();
        assert_eq!(p.points, p2.points);
    }

    #[test]
    fn deep_subdivision_stays_pseudomanifold() {
        for level in 0..5usize {
            let mesh = generate_icosphere::<f64>(level, 1.0).unwrap();
            let rep = is_manifold_complex(&mesh.complex);
            assert!(
                rep.pure && rep.closed_pseudomanifold && rep.strongly_connected,
                "level {level}"
            );
        }
    }
}
