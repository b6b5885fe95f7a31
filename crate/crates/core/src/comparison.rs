//! Sampled verification batteries for the curvature-comparison
//! inequalities: each battery draws random admissible configurations,
//! measures the quantity the inequality controls (by finite differences
//! where a differential is involved), and reports violations and the worst
//! margin against the stated bound.

use crate::cert::{toponogov_error_budget, Hinge};
use crate::fd;
use crate::manifold::{comparison_s, holonomy_defect, ModelManifold};
use crate::sample;
use crate::scalar::Real;
use crate::simplex::{friedland_gap, operator_p_norm, PNorm};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Absolute slack granted to inequalities whose left side is estimated by
/// finite differences.
pub const FD_SLACK: f64 = 1e-3;
/// Slack for closed-form (non-differential) inequality checks.
pub const EXACT_SLACK: f64 = 1e-12;
/// Step for central differences of maps between tangent spaces.
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, serde::Serialize)]
pub struct BatteryReport {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Smallest observed `bound + slack - measured`; negative iff some
    /// sample violated its inequality.
    pub worst_margin: f64,
}

impl BatteryReport {
    fn collect(name: String, margins: impl IntoIterator<Item = f64>) -> Self {
        let mut samples = 0;
        let mut violations = 0;
        let mut worst = f64::INFINITY;
        for m in margins {
            samples += 1;
            if m < 0.0 {
                violations += 1;
            }
            worst = worst.min(m);
        }
        BatteryReport {
            name,
            samples,
            violations,
            worst_margin: worst,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Short human label for a model space, used in battery names.
pub fn manifold_label<R: Real>(m: &ModelManifold<R>) -> String {
    match m {
        ModelManifold::Euclidean { dim } => format!("euclidean-{dim}"),
        ModelManifold::Sphere { dim, radius } => format!("sphere-{dim}-r{}", radius.to64()),
        ModelManifold::Hyperbolic { dim, scale } => format!("hyperbolic-{dim}-k{}", scale.to64()),
        ModelManifold::FlatTorus { periods } => format!("torus-{}", periods.len()),
    }
}

/// Cap an infinite radius budget at a workable sampling scale.
fn finite_cap<R: Real>(r: R, cap: f64) -> f64 {
    let v = r.to64();
    if v.is_finite() {
        v
    } else {
        cap
    }
}

/// Columns of the differential of `exp_p` at `v`, expressed in the chart
/// frame at the image point.  The directional derivative is read through
/// `log` at the image, whose own differential is the identity there, so the
/// only error is the finite-difference truncation.
fn dexp_in_frames<R: Real>(
    m: &ModelManifold<R>,
    p: &DVector<R>,
    frame_p: &[DVector<R>],
    v: &DVector<R>,
    x: &DVector<R>,
    frame_x: &[DVector<R>],
) -> DMatrix<R> {
    let n = m.dim();
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let col = fd::central_diff4(
            |t: R| {
                let y = m.exp(p, &(v + &frame_p[c] * t));
                let l = m.log(x, &y).expect("probe stays inside the injectivity radius");
                m.frame_coords(x, frame_x, &l)
            },
            R::of(FD_STEP),
        );
        j.set_column(c, &col);
    }
    j
}

/// Matrix of parallel transport from `p` to `x` between the two frames.
fn transport_in_frames<R: Real>(
    m: &ModelManifold<R>,
    p: &DVector<R>,
    frame_p: &[DVector<R>],
    x: &DVector<R>,
    frame_x: &[DVector<R>],
) -> DMatrix<R> {
    let n = m.dim();
    let mut t = DMatrix::zeros(n, n);
    for c in 0..n {
        let moved = m
            .transport(p, x, &frame_p[c])
            .expect("transport within the injectivity radius");
        t.set_column(c, &m.frame_coords(x, frame_x, &moved));
    }
    t
}

/// `|(d exp_p)_v - T_xp| <= Lambda r^2 / 2` at sampled base points and radii
/// up to the comparison limit.
pub fn strong_rauch_battery<R: Real>(
    m: &ModelManifold<R>,
    samples: usize,
    seed: u64,
) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let lambda = m.lambda().to64();
    let r_max = {
        let curv = if lambda > 0.0 {
            std::f64::consts::FRAC_PI_2 / lambda.sqrt()
        } else {
            f64::INFINITY
        };
        let unique = 0.45 * finite_cap(m.injectivity_radius(), 4.0);
        curv.min(unique).min(2.0)
    };
    let margins = (0..samples).map(|_| {
        let p = m.random_point(&mut rng);
        let r = r_max * rng.gen_range(0.05..0.98);
        let mut v = m.random_tangent_in_ball(&p, R::of(1.0), &mut rng);
        v *= R::of(r) / m.tangent_norm(&p, &v);
        let x = m.exp(&p, &v);
        let frame_p = m.tangent_basis(&p);
        let frame_x = m.tangent_basis(&x);
        let j = dexp_in_frames(m, &p, &frame_p, &v, &x, &frame_x);
        let t = transport_in_frames(m, &p, &frame_p, &x, &frame_x);
        let actual = operator_p_norm(&(j - t), PNorm::Two).to64();
        0.5 * lambda * r * r + FD_SLACK - actual
    });
    BatteryReport::collect(format!("strong-rauch {}", manifold_label(m)), margins)
}

/// `|d(exp_x^-1 . exp_p)_v - T_xp| <= 6 Lambda rho^2` for `x`, `y = exp_p(v)`
/// inside a ball of radius `rho < rho0/2` around `p`.
pub fn strong_transition_battery<R: Real>(
    m: &ModelManifold<R>,
    samples: usize,
    seed: u64,
) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let lambda = m.lambda().to64();
    let rho_max = 0.95 * 0.5 * finite_cap(m.rho0(), 2.0);
    let margins = (0..samples).map(|_| {
        let rho = rho_max * rng.gen_range(0.3..1.0);
        let p = m.random_point(&mut rng);
        let x = m.random_point_in_ball(&p, R::of(rho * 0.999), &mut rng);
        let y = m.random_point_in_ball(&p, R::of(rho * 0.999), &mut rng);
        let v = m.log(&p, &y).expect("inside the ball");
        let frame_p = m.tangent_basis(&p);
        let frame_x = m.tangent_basis(&x);
        let g = |u: &DVector<R>| {
            let mut vec = v.clone();
            for (c, base) in frame_p.iter().enumerate() {
                vec += base * u[c];
            }
            let l = m.log(&x, &m.exp(&p, &vec)).expect("image stays near x");
            m.frame_coords(&x, &frame_x, &l)
        };
        let j = fd::jacobian4(g, &DVector::zeros(m.dim()), R::of(FD_STEP));
        let t = transport_in_frames(m, &p, &frame_p, &x, &frame_x);
        let actual = operator_p_norm(&(j - t), PNorm::Two).to64();
        6.0 * lambda * rho * rho + FD_SLACK - actual
    });
    BatteryReport::collect(format!("strong-transition {}", manifold_label(m)), margins)
}

/// Lifted-edge stability: for points of a common `rho`-ball,
/// `||v_i(x) - v_j(x)| - |v_i(p) - v_j(p)|| <= 21 Lambda rho^2 |v_i(p) - v_j(p)|`.
pub fn edge_distortion_battery<R: Real>(
    m: &ModelManifold<R>,
    samples: usize,
    seed: u64,
) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let lambda = m.lambda().to64();
    let rho_max = 0.9 * finite_cap(m.rho0(), 1.0);
    let margins = (0..samples).map(|_| {
        let rho = rho_max * rng.gen_range(0.3..1.0);
        let c = m.random_point(&mut rng);
        let draw = |rng: &mut _| m.random_point_in_ball(&c, R::of(rho * 0.995), rng);
        let p = draw(&mut rng);
        let x = draw(&mut rng);
        let pi = draw(&mut rng);
        let pj = draw(&mut rng);
        let at = |base: &DVector<R>| -> f64 {
            let vi = m.log(base, &pi).expect("within the ball");
            let vj = m.log(base, &pj).expect("within the ball");
            m.tangent_norm(base, &(vi - vj)).to64()
        };
        let ref_len = at(&p);
        let moved = at(&x);
        let bound = 21.0 * lambda * rho * rho * ref_len;
        bound + EXACT_SLACK - (moved - ref_len).abs()
    });
    BatteryReport::collect(format!("edge-distortion {}", manifold_label(m)), margins)
}

/// Transport around sampled small triangles deviates from the direct
/// transport by at most `(4/3) Lambda area`.
pub fn holonomy_battery<R: Real>(
    m: &ModelManifold<R>,
    samples: usize,
    seed: u64,
) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let rho = 0.125 * finite_cap(m.rho0(), 2.0);
    let margins = (0..samples).map(|_| {
        let c = m.random_point(&mut rng);
        let p = m.random_point_in_ball(&c, R::of(rho), &mut rng);
        let x = m.random_point_in_ball(&c, R::of(rho), &mut rng);
        let y = m.random_point_in_ball(&c, R::of(rho), &mut rng);
        let d = holonomy_defect(m, &p, &x, &y).expect("triangle inside the gates");
        d.bound.to64() + EXACT_SLACK - d.actual.to64()
    });
    BatteryReport::collect(format!("holonomy {}", manifold_label(m)), margins)
}

/// The Rauch sandwich: perpendicular stretching of `d exp` lies between the
/// comparison factors `S_k(r)/r` for the curvature bounds, and radial
/// directions are carried isometrically.  Model spaces have constant
/// curvature, so both factors coincide and the measurement must match the
/// comparison function itself.
pub fn rauch_sandwich_battery<R: Real>(
    m: &ModelManifold<R>,
    samples: usize,
    seed: u64,
) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let lambda = m.lambda().to64();
    let r_max = {
        let curv = if lambda > 0.0 {
            std::f64::consts::FRAC_PI_2 / lambda.sqrt()
        } else {
            f64::INFINITY
        };
        curv.min(0.45 * finite_cap(m.injectivity_radius(), 4.0)).min(2.0)
    };
    let kappa = m.curvature_upper();
    let margins = (0..samples).flat_map(|_| {
        let p = m.random_point(&mut rng);
        let r = r_max * rng.gen_range(0.05..0.95);
        let mut v = m.random_tangent_in_ball(&p, R::of(1.0), &mut rng);
        v /= m.tangent_norm(&p, &v);
        let mut w = m.random_tangent_in_ball(&p, R::of(1.0), &mut rng);
        w -= &v * m.metric_dot(&p, &w, &v);
        let wn = m.tangent_norm(&p, &w);
        if wn.to64() < 1e-6 {
            return vec![];
        }
        w /= wn;
        let rv = &v * R::of(r);
        let x = m.exp(&p, &rv);
        let stretch = |dir: &DVector<R>| -> f64 {
            let col = fd::central_diff4(
                |t: R| {
                    let y = m.exp(&p, &(&rv + dir * t));
                    let l = m.log(&x, &y).expect("probe near the geodesic");
                    l
                },
                R::of(FD_STEP),
            );
            m.tangent_norm(&x, &col).to64()
        };
        let factor = comparison_s(kappa, R::of(r)).to64() / r;
        let perp = stretch(&w);
        let radial = stretch(&v);
        vec![
            FD_SLACK - (perp - factor).abs(),
            FD_SLACK - (radial - 1.0).abs(),
        ]
    });
    BatteryReport::collect(format!("rauch-sandwich {}", manifold_label(m)), margins)
}

/// Embedding estimates for the transition maps `F = exp_x^-1 . exp_p` in the
/// transported frame: bi-Lipschitz distortion and fixed-point displacement
/// are both controlled by `eta = 6 Lambda rho^2`.
pub fn embedding_suite_battery<R: Real>(
    m: &ModelManifold<R>,
    samples: usize,
    seed: u64,
) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let lambda = m.lambda().to64();
    let rho_max = 0.95 * 0.5 * finite_cap(m.rho0(), 2.0);
    let margins = (0..samples).flat_map(|_| {
        let rho = rho_max * rng.gen_range(0.3..1.0);
        let eta = 6.0 * lambda * rho * rho;
        let p = m.random_point(&mut rng);
        let x = m.random_point_in_ball(&p, R::of(rho * 0.999), &mut rng);
        let frame_p = m.tangent_basis(&p);
        let frame_x = m.tangent_basis(&x);
        let t = transport_in_frames(m, &p, &frame_p, &x, &frame_x);
        let f = |u: &DVector<R>| -> DVector<R> {
            let mut vec = DVector::zeros(m.ambient_dim());
            for (c, base) in frame_p.iter().enumerate() {
                vec += base * u[c];
            }
            let l = m.log(&x, &m.exp(&p, &vec)).expect("image stays near x");
            m.frame_coords(&x, &frame_x, &l)
        };
        // Straighten by the transport so the comparison isometry is the
        // identity and the origin is fixed.
        let origin = f(&DVector::zeros(m.dim()));
        let g = |u: &DVector<R>| t.transpose() * (f(u) - &origin);
        let mut out = Vec::with_capacity(2 * 3);
        for _ in 0..3 {
            let u = frame_ball_point(m.dim(), rho * 0.99, &mut rng);
            let w = frame_ball_point(m.dim(), rho * 0.99, &mut rng);
            let gu = g(&u);
            let gw = g(&w);
            let seg = (&u - &w).norm().to64();
            let img = (&gu - &gw).norm().to64();
            out.push(eta * seg + 1e-9 - (img - seg).abs());
            out.push(eta * u.norm().to64() + 1e-9 - (&gu - &u).norm().to64());
        }
        out
    });
    BatteryReport::collect(format!("embedding-suite {}", manifold_label(m)), margins)
}

fn frame_ball_point<R: Real>(n: usize, rho: f64, rng: &mut impl Rng) -> DVector<R> {
    let raw = sample::gauss_vector::<R>(n, rng);
    let norm = raw.norm();
    if norm.to64() < 1e-12 {
        return DVector::zeros(n);
    }
    let u: f64 = rng.gen_range(0.0f64..1.0);
    raw * (R::of(rho * u.powf(1.0 / n as f64)) / norm)
}

/// Linear operators within `eta <= 1/2` of an isometry have inverses within
/// `2 eta` of the inverse isometry.
pub fn operator_inverse_battery(n: usize, samples: usize, seed: u64) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let margins = (0..samples).map(|_| {
        let t = random_orthogonal(n, &mut rng);
        let mut e = DMatrix::<f64>::from_fn(n, n, |_, _| sample::gauss::<f64>(&mut rng));
        let en = operator_p_norm(&e, PNorm::Two);
        e /= en;
        let eta: f64 = rng.gen_range(1e-3..0.5);
        let a = &t + &e * eta;
        let inv_gap = operator_p_norm(
            &(a.clone().try_inverse().expect("perturbation below 1/2 keeps A invertible")
                - t.transpose()),
            PNorm::Two,
        );
        2.0 * eta + 1e-10 - inv_gap
    });
    BatteryReport::collect(format!("operator-inverse dim-{n}"), margins)
}

fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| sample::gauss::<f64>(rng));
    let qr = g.qr();
    qr.q()
}

/// Determinant perturbation inequality on random matrices, all three
/// operator norms.
pub fn friedland_battery(n: usize, samples: usize, seed: u64) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let norms = [PNorm::One, PNorm::Two, PNorm::Inf];
    let margins = (0..samples).map(|i| {
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| sample::gauss::<f64>(&mut rng));
        let scale = 10f64.powf(rng.gen_range(-6.0..-1.0f64));
        let e = DMatrix::<f64>::from_fn(n, n, |_, _| sample::gauss::<f64>(&mut rng) * scale);
        let gap = friedland_gap(&a, &e, norms[i % norms.len()]).expect("square inputs");
        gap.bound * (1.0 + EXACT_SLACK) + 1e-15 - gap.actual
    });
    BatteryReport::collect(format!("friedland-gap dim-{n}"), margins)
}

/// Hinge-closure error budgets on a curved model space: squared-length
/// deviation and, where the length floor allows, the angle-cosine gap.
pub fn budget_battery<R: Real>(m: &ModelManifold<R>, samples: usize, seed: u64) -> BatteryReport {
    let mut rng = sample::rng_from_seed(seed);
    let scale_cap = match m {
        ModelManifold::Sphere { radius, .. } => radius.to64(),
        ModelManifold::Hyperbolic { scale, .. } => scale.to64(),
        _ => 1.0,
    };
    let margins = (0..samples).flat_map(|_| {
        let d_max = scale_cap * rng.gen_range(0.05..0.45);
        let a = d_max * rng.gen_range(0.1..0.5);
        let b = d_max * rng.gen_range(0.1..0.5);
        let gamma = rng.gen_range(0.05..std::f64::consts::PI - 0.05);
        let report = toponogov_error_budget(
            m,
            Hinge {
                a: R::of(a),
                b: R::of(b),
                gamma: R::of(gamma),
                d_max: R::of(d_max),
            },
        )
        .expect("sampled hinge satisfies the preconditions");
        let mut out = vec![(report.e_prime_bound - report.e_prime.abs()).to64() + EXACT_SLACK];
        if report.cos_applicable {
            out.push((report.cos_gap_bound - report.cos_gap).to64() + EXACT_SLACK);
        }
        out
    });
    BatteryReport::collect(format!("hinge-budget {}", manifold_label(m)), margins)
}

/// The standard model-space roster exercised by the property suite.
pub fn standard_manifolds() -> Vec<ModelManifold<f64>> {
    vec![
        ModelManifold::euclidean(2),
        ModelManifold::euclidean(3),
        ModelManifold::sphere(2, 1.0),
        ModelManifold::sphere(3, 0.7),
        ModelManifold::hyperbolic(2, 1.0),
        ModelManifold::hyperbolic(3, 1.3),
        ModelManifold::flat_torus(vec![1.0, 1.0]),
        ModelManifold::flat_torus(vec![0.8, 1.2, 0.6]),
    ]
}

/// Run every battery in the suite at the given sample count.
pub fn run_all_batteries(samples: usize, seed: u64) -> Vec<BatteryReport> {
    let mut out = Vec::new();
    for (i, m) in standard_manifolds().iter().enumerate() {
        let s = seed.wrapping_add(i as u64 * 101);
        out.push(strong_rauch_battery(m, samples, s));
        out.push(strong_transition_battery(m, samples, s ^ 1));
        out.push(edge_distortion_battery(m, samples, s ^ 2));
        out.push(holonomy_battery(m, samples, s ^ 3));
        out.push(rauch_sandwich_battery(m, samples, s ^ 4));
        out.push(embedding_suite_battery(m, samples, s ^ 5));
        if matches!(
            m,
            ModelManifold::Sphere { .. } | ModelManifold::Hyperbolic { .. }
        ) {
            out.push(budget_battery(m, samples, s ^ 6));
        }
    }
    for n in 2..=4usize {
        out.push(operator_inverse_battery(n, samples, seed.wrapping_add(7000 + n as u64)));
        out.push(friedland_battery(n, samples, seed.wrapping_add(8000 + n as u64)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const N: usize = 150;

    #[test]
    fn strong_rauch_all_kinds() {
        for m in standard_manifolds() {
            let rep = strong_rauch_battery(&m, N, 21);
            assert!(rep.passed(), "{}: {rep:?}", rep.name);
            assert_eq!(rep.samples, N);
        }
    }

    #[test]
    fn strong_rauch_margin_is_tight_for_flat_space() {
        // Flat differentials equal the transport exactly; the whole margin
        // is the granted slack.
        let rep = strong_rauch_battery(&ModelManifold::<f64>::euclidean(3), 50, 3);
        assert!(rep.worst_margin > FD_SLACK * 0.99 && rep.worst_margin <= FD_SLACK);
    }

    #[test]
    fn strong_transition_all_kinds() {
        for m in standard_manifolds() {
            let rep = strong_transition_battery(&m, N, 22);
            assert!(rep.passed(), "{}: {rep:?}", rep.name);
        }
    }

    #[test]
    fn edge_distortion_all_kinds() {
        for m in standard_manifolds() {
            let rep = edge_distortion_battery(&m, N, 23);
            assert!(rep.passed(), "{}: {rep:?}", rep.name);
        }
    }

    #[test]
    fn holonomy_all_kinds() {
        for m in standard_manifolds() {
            let rep = holonomy_battery(&m, N, 24);
            assert!(rep.passed(), "{}: {rep:?}", rep.name);
        }
    }

    #[test]
    fn sandwich_all_kinds() {
        for m in standard_manifolds() {
            let rep = rauch_sandwich_battery(&m, N, 25);
            assert!(rep.passed(), "{}: {rep:?}", rep.name);
        }
    }

    #[test]
    fn embedding_suite_all_kinds() {
        for m in standard_manifolds() {
            let rep = embedding_suite_battery(&m, N, 26);
            assert!(rep.passed(), "{}: {rep:?}", rep.name);
        }
    }

    #[test]
    fn operator_inverse_random_and_known_case() {
        for n in 2..=4 {
            let rep = operator_inverse_battery(n, N, 27);
            assert!(rep.passed(), "{rep:?}");
        }
        // Scaled isometry: |A^-1 - T^-1| = eta/(1+eta).
        let eta = 0.3;
        let t = DMatrix::<f64>::identity(3, 3);
        let a = &t * (1.0 + eta);
        let gap = operator_p_norm(&(a.try_inverse().unwrap() - &t), PNorm::Two);
        assert_relative_eq!(gap, eta / (1.0 + eta), epsilon = 1e-12);
        assert!(gap <= 2.0 * eta);
    }

    #[test]
    fn friedland_random() {
        for n in 2..=4 {
            let rep = friedland_battery(n, N, 28);
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn budget_battery_curved_kinds() {
        for m in [
            ModelManifold::sphere(2, 1.0),
            ModelManifold::hyperbolic(2, 1.0),
        ] {
            let rep = budget_battery(&m, N, 29);
            assert!(rep.passed(), "{}: {rep:?}", rep.name);
        }
    }

    #[test]
    fn full_suite_summary() {
        let reports = run_all_batteries(40, 30);
        assert!(reports.len() > 20);
        for rep in &reports {
            assert!(rep.passed(), "{}: {rep:?}", rep.name);
        }
    }

    #[test]
    fn sphere_sandwich_detects_real_curvature() {
        // Perpendicular stretch on the unit sphere at r = 1 is sin(1)/1,
        // well separated from the flat value 1; the battery must be
        // measuring the true factor, not a tautology.
        let m = ModelManifold::sphere(2, 1.0);
        assert_relative_eq!(comparison_s(1.0, 1.0), 1f64.sin(), epsilon = 1e-15);
        let rep = rauch_sandwich_battery(&m, 200, 31);
        assert!(rep.passed());
        assert!(
            rep.worst_margin < FD_SLACK,
            "curved space should consume some slack: {rep:?}"
        );
    }
}
