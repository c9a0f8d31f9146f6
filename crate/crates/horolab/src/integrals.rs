//! Quadrature over geodesic spheres and balls in geodesic polar coordinates.
//!
//! Around a basepoint p, integration points are q = exp_p(s·u) for radii s
//! and unit directions u; the volume element is dμ = θ(p,u,s) ds dΩ with θ
//! the radial density from [`crate::manifolds::ManifoldModel::volume_density`].
//! Directions are discretized by a [`DirectionGrid`] (equispaced angles on
//! the circle, Gauss–Legendre in cos(polar) × equispaced azimuth on the
//! 2-sphere), radii by Gauss–Legendre on (0, r).
//!
//! The inverse exponential map of an integration point is free in these
//! coordinates — exp_p⁻¹(exp_p(s·u)) = s·u — so the center-of-mass integrals
//! never shoot. On conformal surfaces, each direction is swept once by a
//! single geodesic integration that lands on every radial node
//! ([`crate::geodesics::ray_sweep`]).
//!
//! All node loops accumulate in a fixed deterministic order, so a given
//! configuration reproduces bit-identical results.

use crate::linalg;
use crate::manifolds::{ManifoldModel, Point, TangentVector};
use crate::{Error, Result};

/// Quadrature resolution: `direction_order` is the number of circle angles
/// in 2-D (and yields direction_order/8 polar × direction_order/4 azimuth
/// nodes in 3-D); `radial_order` is the Gauss–Legendre node count on (0, r).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureConfig {
    pub direction_order: usize,
    pub radial_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            direction_order: 256,
            radial_order: 64,
        }
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on the
/// Legendre recurrence. Nodes come out in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi-style initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = -p / d;
            x += dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to (0, r).
#[derive(Clone, Debug)]
pub struct RadialRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

pub fn radial_rule(r: f64, order: usize) -> RadialRule {
    let (x, w) = gauss_legendre(order);
    RadialRule {
        nodes: x.iter().map(|&t| 0.5 * r * (t + 1.0)).collect(),
        weights: w.iter().map(|&t| 0.5 * r * t).collect(),
        order,
    }
}

/// Unit directions and weights discretizing the unit sphere of T_pM; weights
/// sum to the surface measure of S^{n−1} (2 in 1-D, 2π in 2-D, 4π in 3-D).
#[derive(Clone, Debug)]
pub struct DirectionGrid {
    pub base: Point,
    pub basis: Vec<TangentVector>,
    /// Unit coefficient vectors in the orthonormal basis, one per direction.
    pub coeffs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl DirectionGrid {
    pub fn build(m: &ManifoldModel, p: &Point, order: usize) -> Result<Self> {
        let dim = m.dim();
        let basis = m.orthonormal_basis(p)?;
        let (coeffs, weights) = match dim {
            1 => (vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0]),
            2 => {
                if order < 2 || order % 2 != 0 {
                    return Err(Error::Precondition(format!(
                        "2-D direction order must be even and >= 2, got {order}"
                    )));
                }
                let w = 2.0 * std::f64::consts::PI / order as f64;
                let mut coeffs = Vec::with_capacity(order);
                for k in 0..order / 2 {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / order as f64;
                    coeffs.push(vec![phi.cos(), phi.sin()]);
                }
                // Mirror the first half so antipodal nodes negate exactly.
                for k in 0..order / 2 {
                    let c = coeffs[k].clone();
                    coeffs.push(vec![-c[0], -c[1]]);
                }
                (coeffs, vec![w; order])
            }
            3 => {
                if order < 16 || order % 16 != 0 {
                    return Err(Error::Precondition(format!(
                        "3-D direction order must be a positive multiple of 16, got {order}"
                    )));
                }
                let polar = order / 8;
                let azimuth = order / 4;
                let (x, wx) = gauss_legendre(polar);
                let wphi = 2.0 * std::f64::consts::PI / azimuth as f64;
                // Half the nodes explicitly, then their exact negations: the
                // mirror of (cosθ, sinθ·e^{iφ}) is the node at (−cosθ, φ+π).
                let mut coeffs = Vec::with_capacity(polar * azimuth);
                let mut weights = Vec::with_capacity(polar * azimuth);
                for (j, &cos_theta) in x.iter().enumerate() {
                    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
                    for k in 0..azimuth / 2 {
                        let phi = 2.0 * std::f64::consts::PI * k as f64 / azimuth as f64;
                        coeffs.push(vec![
                            cos_theta,
                            sin_theta * phi.cos(),
                            sin_theta * phi.sin(),
                        ]);
                        weights.push(wx[j] * wphi);
                    }
                }
                let half = coeffs.len();
                for k in 0..half {
                    let c = coeffs[k].clone();
                    coeffs.push(vec![-c[0], -c[1], -c[2]]);
                    weights.push(weights[k]);
                }
                (coeffs, weights)
            }
            d => {
                return Err(Error::Precondition(format!(
                    "direction grids support dimensions 1..=3, got {d}"
                )))
            }
        };
        Ok(DirectionGrid {
            base: p.clone(),
            basis,
            coeffs,
            weights,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Ambient components of the k-th unit direction, Σᵢ cᵢ·eᵢ.
    pub fn ambient(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.basis[0].components.len()];
        for (c, e) in self.coeffs[k].iter().zip(&self.basis) {
            for (o, b) in out.iter_mut().zip(&e.components) {
                *o += c * b;
            }
        }
        out
    }

    /// The k-th direction as a unit tangent vector at the base point.
    pub fn direction(&self, k: usize) -> TangentVector {
        TangentVector::new(self.base.clone(), self.ambient(k))
    }
}

/// Evaluated sphere S(p,r): one position and density per grid direction.
#[derive(Clone, Debug)]
pub struct SphereNodes {
    pub grid: DirectionGrid,
    pub radius: f64,
    pub points: Vec<Point>,
    pub densities: Vec<f64>,
}

/// Evaluated ball B(p,r): positions and densities indexed [direction][radial].
#[derive(Clone, Debug)]
pub struct BallNodes {
    pub grid: DirectionGrid,
    pub radial: RadialRule,
    pub points: Vec<Vec<Point>>,
    pub densities: Vec<Vec<f64>>,
}

fn check_radius(m: &ManifoldModel, p: &Point, r: f64) -> Result<()> {
    if r <= 0.0 {
        return Err(Error::Precondition(format!(
            "radius must be positive, got {r}"
        )));
    }
    if r >= m.injectivity_bound(p) {
        return Err(Error::Domain(format!(
            "radius {r} is at or beyond the injectivity bound of {}",
            m.name()
        )));
    }
    Ok(())
}

/// Walk one grid direction out to each radius in ascending order, producing
/// (position, density) pairs. Closed-form models evaluate directly; conformal
/// surfaces integrate a single geodesic + Jacobi sweep per direction.
fn eval_ray(
    m: &ManifoldModel,
    grid: &DirectionGrid,
    k: usize,
    radii: &[f64],
) -> Result<Vec<(Point, f64)>> {
    let n = m.dim() as i32;
    match m {
        ManifoldModel::Conformal(s) => {
            let c = &grid.coeffs[k];
            let phi = c[1].atan2(c[0]);
            let samples = crate::geodesics::ray_sweep(s, &grid.base, phi, radii)?;
            Ok(samples
                .into_iter()
                .map(|s| (s.position, s.density))
                .collect())
        }
        _ => {
            let u = grid.ambient(k);
            let p = &grid.base;
            radii
                .iter()
                .map(|&s| {
                    let q = m.exp_map(p, &TangentVector::new(p.clone(), linalg::scale(&u, s)))?;
                    let theta = match m {
                        ManifoldModel::Euclidean { .. } => s.powi(n - 1),
                        ManifoldModel::Hyperboloid { .. } => s.sinh().powi(n - 1),
                        ManifoldModel::Sphere { .. } => s.sin().powi(n - 1),
                        ManifoldModel::Conformal(_) => unreachable!(),
                    };
                    Ok((q, theta))
                })
                .collect()
        }
    }
}

/// Materialize the geodesic sphere S(p,r) on the direction grid.
pub fn sphere_nodes(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<SphereNodes> {
    check_radius(m, p, r)?;
    let grid = DirectionGrid::build(m, p, quad.direction_order)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut densities = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let ray = eval_ray(m, &grid, k, &[r])?;
        let (q, theta) = ray.into_iter().next().expect("one radius requested");
        points.push(q);
        densities.push(theta);
    }
    Ok(SphereNodes {
        grid,
        radius: r,
        points,
        densities,
    })
}

/// Materialize the geodesic ball B(p,r) on the direction × radial grid.
pub fn ball_nodes(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<BallNodes> {
    check_radius(m, p, r)?;
    let grid = DirectionGrid::build(m, p, quad.direction_order)?;
    let radial = radial_rule(r, quad.radial_order);
    let mut points = Vec::with_capacity(grid.len());
    let mut densities = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let ray = eval_ray(m, &grid, k, &radial.nodes)?;
        let mut ps = Vec::with_capacity(ray.len());
        let mut ds = Vec::with_capacity(ray.len());
        for (q, theta) in ray {
            ps.push(q);
            ds.push(theta);
        }
        points.push(ps);
        densities.push(ds);
    }
    Ok(BallNodes {
        grid,
        radial,
        points,
        densities,
    })
}

impl SphereNodes {
    /// ∫_{S(p,r)} f dσ = Σ_u w_u f(exp_p(r·u)) θ(p,u,r).
    ///
    /// Directions are reduced antipodal-pair first: odd integrands on
    /// symmetric configurations cancel exactly, not just to roundoff.
    pub fn integrate_scalar(&self, mut f: impl FnMut(&Point) -> f64) -> f64 {
        let half = self.grid.len() / 2;
        let term = |k: usize, f: &mut dyn FnMut(&Point) -> f64| {
            self.grid.weights[k] * f(&self.points[k]) * self.densities[k]
        };
        let mut acc = 0.0;
        for k in 0..half {
            acc += term(k, &mut f) + term(k + half, &mut f);
        }
        acc
    }

    /// Scalar integral where the integrand also sees the direction
    /// coefficients of its node (e.g. cos-angle weights).
    pub fn integrate_scalar_directional(&self, mut f: impl FnMut(&Point, &[f64]) -> f64) -> f64 {
        let half = self.grid.len() / 2;
        let term = |k: usize, f: &mut dyn FnMut(&Point, &[f64]) -> f64| {
            self.grid.weights[k] * f(&self.points[k], &self.grid.coeffs[k]) * self.densities[k]
        };
        let mut acc = 0.0;
        for k in 0..half {
            acc += term(k, &mut f) + term(k + half, &mut f);
        }
        acc
    }

    /// Componentwise vector integral in the orthonormal basis at p; the
    /// integrand returns basis coefficients of a vector pulled back to T_pM.
    pub fn integrate_vector(&self, mut f: impl FnMut(&Point, &[f64]) -> Vec<f64>) -> Vec<f64> {
        let dim = self.grid.coeffs[0].len();
        let half = self.grid.len() / 2;
        let mut acc = vec![0.0; dim];
        for k in 0..half {
            let ka = k;
            let kb = k + half;
            let va = f(&self.points[ka], &self.grid.coeffs[ka]);
            let vb = f(&self.points[kb], &self.grid.coeffs[kb]);
            let wa = self.grid.weights[ka] * self.densities[ka];
            let wb = self.grid.weights[kb] * self.densities[kb];
            for i in 0..dim {
                acc[i] += wa * va[i] + wb * vb[i];
            }
        }
        acc
    }
}

impl BallNodes {
    /// ∫_{B(p,r)} f dμ = Σ_s w_s Σ_u w_u f(exp_p(s·u)) θ(p,u,s).
    pub fn integrate_scalar(&self, mut f: impl FnMut(&Point) -> f64) -> f64 {
        let half = self.grid.len() / 2;
        let mut ray = |k: usize, f: &mut dyn FnMut(&Point) -> f64| {
            let mut ray_acc = 0.0;
            for (j, w_s) in self.radial.weights.iter().enumerate() {
                ray_acc += w_s * f(&self.points[k][j]) * self.densities[k][j];
            }
            self.grid.weights[k] * ray_acc
        };
        let mut acc = 0.0;
        for k in 0..half {
            acc += ray(k, &mut f) + ray(k + half, &mut f);
        }
        acc
    }

    /// Vector integral in basis coefficients; the integrand sees the node
    /// position, its radius s, and its direction coefficients.
    pub fn integrate_vector(&self, mut f: impl FnMut(&Point, f64, &[f64]) -> Vec<f64>) -> Vec<f64> {
        let dim = self.grid.coeffs[0].len();
        let half = self.grid.len() / 2;
        let mut ray = |k: usize, f: &mut dyn FnMut(&Point, f64, &[f64]) -> Vec<f64>| {
            let mut ray_acc = vec![0.0; dim];
            for (j, w_s) in self.radial.weights.iter().enumerate() {
                let val = f(
                    &self.points[k][j],
                    self.radial.nodes[j],
                    &self.grid.coeffs[k],
                );
                let w = w_s * self.densities[k][j];
                for (a, v) in ray_acc.iter_mut().zip(&val) {
                    *a += w * v;
                }
            }
            ray_acc
        };
        let mut acc = vec![0.0; dim];
        for k in 0..half {
            let ra = ray(k, &mut f);
            let rb = ray(k + half, &mut f);
            let wa = self.grid.weights[k];
            let wb = self.grid.weights[k + half];
            for i in 0..dim {
                acc[i] += wa * ra[i] + wb * rb[i];
            }
        }
        acc
    }
}

/// Combine basis coefficients back into an ambient tangent vector at p.
pub(crate) fn from_basis(grid: &DirectionGrid, coeffs: &[f64]) -> TangentVector {
    let mut comps = vec![0.0; grid.basis[0].components.len()];
    for (c, e) in coeffs.iter().zip(&grid.basis) {
        for (o, b) in comps.iter_mut().zip(&e.components) {
            *o += c * b;
        }
    }
    TangentVector::new(grid.base.clone(), comps)
}

/// ∫_{S(p,r)} f dσ.
pub fn sphere_integral_scalar(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    quad: &QuadratureConfig,
    f: impl FnMut(&Point) -> f64,
) -> Result<f64> {
    Ok(sphere_nodes(m, p, r, quad)?.integrate_scalar(f))
}

/// ∫_{S(p,r)} F dσ for a T_pM-valued integrand given in basis coefficients.
pub fn sphere_integral_vector(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    quad: &QuadratureConfig,
    f: impl FnMut(&Point, &[f64]) -> Vec<f64>,
) -> Result<TangentVector> {
    let nodes = sphere_nodes(m, p, r, quad)?;
    let coeffs = nodes.integrate_vector(f);
    Ok(from_basis(&nodes.grid, &coeffs))
}

/// ∫_{B(p,r)} f dμ.
pub fn ball_integral(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    quad: &QuadratureConfig,
    f: impl FnMut(&Point) -> f64,
) -> Result<f64> {
    Ok(ball_nodes(m, p, r, quad)?.integrate_scalar(f))
}

/// Ball volume V(p,r).
pub fn volume(m: &ManifoldModel, p: &Point, r: f64, quad: &QuadratureConfig) -> Result<f64> {
    ball_integral(m, p, r, quad, |_| 1.0)
}

/// Sphere area A(p,r).
pub fn area(m: &ManifoldModel, p: &Point, r: f64, quad: &QuadratureConfig) -> Result<f64> {
    sphere_integral_scalar(m, p, r, quad, |_| 1.0)
}

/// The ball center-of-mass field H(p,r) = ∫_{B(p,r)} exp_p⁻¹(q) dμ(q).
/// In polar coordinates the integrand at node exp_p(s·u) is s·u.
pub fn stability_field(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<TangentVector> {
    let nodes = ball_nodes(m, p, r, quad)?;
    let coeffs = nodes.integrate_vector(|_, s, dir| linalg::scale(dir, s));
    Ok(from_basis(&nodes.grid, &coeffs))
}

/// ∂H/∂r (p,r) = ∫_{S(p,r)} exp_p⁻¹(q) dσ(q); integrand r·u at each node.
pub fn stability_radial_derivative(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<TangentVector> {
    let nodes = sphere_nodes(m, p, r, quad)?;
    let coeffs = nodes.integrate_vector(|_, dir| linalg::scale(dir, r));
    Ok(from_basis(&nodes.grid, &coeffs))
}

/// Default displacement for the finite-difference volume gradient.
pub const GRAD_VOLUME_FD_STEP: f64 = 1e-3;

/// Covariant gradient of p ↦ V(p,r) by central differences along geodesics:
/// component i is (V(exp_p(h·eᵢ), r) − V(exp_p(−h·eᵢ), r))/(2h) in the
/// orthonormal basis at p.
pub fn grad_volume_fd(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    h: f64,
    quad: &QuadratureConfig,
) -> Result<TangentVector> {
    if h <= 0.0 {
        return Err(Error::Precondition(format!(
            "step must be positive, got {h}"
        )));
    }
    let basis = m.orthonormal_basis(p)?;
    let mut coeffs = Vec::with_capacity(basis.len());
    for e in &basis {
        let step = linalg::scale(&e.components, h);
        let plus = m.exp_map(p, &TangentVector::new(p.clone(), step.clone()))?;
        let minus = m.exp_map(
            p,
            &TangentVector::new(p.clone(), linalg::scale(&step, -1.0)),
        )?;
        let v_plus = volume(m, &plus, r, quad)?;
        let v_minus = volume(m, &minus, r, quad)?;
        coeffs.push((v_plus - v_minus) / (2.0 * h));
    }
    let mut comps = vec![0.0; basis[0].components.len()];
    for (c, e) in coeffs.iter().zip(&basis) {
        for (o, b) in comps.iter_mut().zip(&e.components) {
            *o += c * b;
        }
    }
    Ok(TangentVector::new(p.clone(), comps))
}

/// All stability quantities of one (p, r) in a single report.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub p: Point,
    pub r: f64,
    pub volume: f64,
    pub area: f64,
    pub h: TangentVector,
    pub dh_dr: TangentVector,
    pub grid_order: usize,
    pub radial_order: usize,
}

pub fn stability_report(
    m: &ManifoldModel,
    p: &Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<StabilityReport> {
    let ball = ball_nodes(m, p, r, quad)?;
    let sphere = sphere_nodes(m, p, r, quad)?;
    let volume = ball.integrate_scalar(|_| 1.0);
    let area = sphere.integrate_scalar(|_| 1.0);
    let h = from_basis(
        &ball.grid,
        &ball.integrate_vector(|_, s, dir| linalg::scale(dir, s)),
    );
    let dh_dr = from_basis(
        &sphere.grid,
        &sphere.integrate_vector(|_, dir| linalg::scale(dir, r)),
    );
    if volume <= 0.0 || area <= 0.0 {
        return Err(Error::Accuracy(format!(
            "nonpositive measures V = {volume}, A = {area}"
        )));
    }
    Ok(StabilityReport {
        p: p.clone(),
        r,
        volume,
        area,
        h,
        dh_dr,
        grid_order: quad.direction_order,
        radial_order: quad.radial_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::ConformalSurface;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pt(c: &[f64]) -> Point {
        Point::from_slice(c)
    }

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn gauss_legendre_is_exact_to_stated_degree() {
        // Order n integrates monomials up to degree 2n−1 exactly on (0, r).
        let r = 1.7;
        for n in [2usize, 5, 16, 64] {
            let rule = radial_rule(r, n);
            for deg in 0..(2 * n).min(24) {
                let exact = r.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                let got: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&x, &w)| w * x.powi(deg as i32))
                    .sum();
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                    "order {n} degree {deg}: {got} vs {exact}"
                );
            }
            let total: f64 = rule.weights.iter().sum();
            assert_relative_eq!(total, r, epsilon = 1e-13);
        }
    }

    #[test]
    fn direction_grid_weights_sum_to_sphere_measure() {
        let e2 = ManifoldModel::euclidean(2);
        let g2 = DirectionGrid::build(&e2, &pt(&[0.0, 0.0]), 256).unwrap();
        let s2: f64 = g2.weights.iter().sum();
        assert!((s2 - 2.0 * PI).abs() < 1e-12);

        let e3 = ManifoldModel::euclidean(3);
        let g3 = DirectionGrid::build(&e3, &pt(&[0.0, 0.0, 0.0]), 256).unwrap();
        assert_eq!(g3.len(), 32 * 64);
        let s3: f64 = g3.weights.iter().sum();
        assert!((s3 - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn direction_grid_rejects_bad_orders() {
        let e2 = ManifoldModel::euclidean(2);
        assert!(DirectionGrid::build(&e2, &pt(&[0.0, 0.0]), 7).is_err());
        let e3 = ManifoldModel::euclidean(3);
        assert!(DirectionGrid::build(&e3, &pt(&[0.0; 3]), 12).is_err());
    }

    #[test]
    fn circle_length_euclidean_with_polygonal_oracle() {
        let m = ManifoldModel::euclidean(2);
        let a = area(&m, &pt(&[0.0, 0.0]), 2.0, &quad()).unwrap();
        assert_relative_eq!(a, 4.0 * PI, max_relative = 1e-12);
        // Brute-force polygonal arc length of the circle of radius 2.
        let n = 100_000;
        let mut per = 0.0;
        for k in 0..n {
            let a0 = 2.0 * PI * k as f64 / n as f64;
            let a1 = 2.0 * PI * (k + 1) as f64 / n as f64;
            let d = ((a1.cos() - a0.cos()).powi(2) + (a1.sin() - a0.sin()).powi(2)).sqrt();
            per += 2.0 * d;
        }
        assert_relative_eq!(a, per, max_relative = 1e-8);
    }

    #[test]
    fn sphere_areas_closed_forms() {
        let h2 = ManifoldModel::hyperboloid(2);
        let a = area(&h2, &pt(&[1.0, 0.0, 0.0]), 1.0, &quad()).unwrap();
        assert_relative_eq!(a, 2.0 * PI * 1.0_f64.sinh(), max_relative = 1e-12);

        let s2 = ManifoldModel::sphere(2);
        let a = area(&s2, &pt(&[0.0, 0.0, 1.0]), PI / 2.0, &quad()).unwrap();
        assert_relative_eq!(a, 2.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn ball_volume_euclidean_with_grid_counting_oracle() {
        let m = ManifoldModel::euclidean(2);
        let v = volume(&m, &pt(&[0.0, 0.0]), 2.0, &quad()).unwrap();
        assert_relative_eq!(v, 4.0 * PI, max_relative = 1e-12);
        // Midpoint grid count over [−2, 2]².
        let n = 800;
        let hcell = 4.0 / n as f64;
        let mut count = 0u64;
        for i in 0..n {
            for j in 0..n {
                let x = -2.0 + (i as f64 + 0.5) * hcell;
                let y = -2.0 + (j as f64 + 0.5) * hcell;
                if x * x + y * y <= 4.0 {
                    count += 1;
                }
            }
        }
        let grid_v = count as f64 * hcell * hcell;
        assert!((v - grid_v).abs() < 0.01 * v, "quad {v} vs grid {grid_v}");
    }

    #[test]
    fn ball_volume_hyperbolic_closed_form() {
        let h2 = ManifoldModel::hyperboloid(2);
        let v = volume(&h2, &pt(&[1.0, 0.0, 0.0]), 1.0, &quad()).unwrap();
        assert_relative_eq!(v, 2.0 * PI * (1.0_f64.cosh() - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn ball_integral_of_coordinate_recovers_center() {
        let m = ManifoldModel::euclidean(2);
        let p = pt(&[0.8, -0.4]);
        let got = ball_integral(&m, &p, 1.5, &quad(), |q| q.coords[0]).unwrap();
        let expect = 0.8 * PI * 1.5 * 1.5;
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn vector_sphere_integral_vanishes_by_symmetry() {
        // Antipodal-pair reduction cancels the odd integrand exactly when
        // the density is direction-independent.
        let e2 = ManifoldModel::euclidean(2);
        let v = stability_radial_derivative(&e2, &pt(&[0.3, 0.4]), 1.0, &quad()).unwrap();
        assert_eq!(v.components, vec![0.0, 0.0]);

        let h2 = ManifoldModel::hyperboloid(2);
        let v = stability_radial_derivative(&h2, &pt(&[1.0, 0.0, 0.0]), 2.0, &quad()).unwrap();
        assert!(linalg::norm(&v.components) < 1e-10);

        let e3 = ManifoldModel::euclidean(3);
        let v = stability_radial_derivative(&e3, &pt(&[0.1, 0.2, -0.4]), 1.0, &quad()).unwrap();
        assert_eq!(v.components, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn stability_field_vanishes_on_homogeneous_models() {
        let e2 = ManifoldModel::euclidean(2);
        let h = stability_field(&e2, &pt(&[1.0, -2.0]), 1.5, &quad()).unwrap();
        assert_eq!(h.components, vec![0.0, 0.0]);

        let h2 = ManifoldModel::hyperboloid(2);
        let h = stability_field(&h2, &pt(&[1.0, 0.0, 0.0]), 2.0, &quad()).unwrap();
        assert!(linalg::norm(&h.components) < 1e-10);
    }

    #[test]
    fn radial_derivative_matches_fd_of_ball_field_on_bump() {
        let m = ManifoldModel::conformal(ConformalSurface::bump());
        let p = pt(&[1.5, 0.0]);
        let r = 1.0;
        let dh = stability_radial_derivative(&m, &p, r, &quad()).unwrap();
        let h = 1e-4;
        let hp = stability_field(&m, &p, r + h, &quad()).unwrap();
        let hm = stability_field(&m, &p, r - h, &quad()).unwrap();
        let fd: Vec<f64> = hp
            .components
            .iter()
            .zip(&hm.components)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        assert!(
            linalg::max_abs_diff(&dh.components, &fd) < 1e-6,
            "sphere form {:?} vs FD {:?}",
            dh.components,
            fd
        );
        assert!(
            linalg::norm(&dh.components) > 1e-6,
            "should be nonzero on the bump"
        );
    }

    #[test]
    fn grad_volume_vanishes_on_homogeneous_models() {
        let e2 = ManifoldModel::euclidean(2);
        let g = grad_volume_fd(&e2, &pt(&[0.5, 0.5]), 1.0, GRAD_VOLUME_FD_STEP, &quad()).unwrap();
        assert!(linalg::norm(&g.components) < 1e-9);

        let h2 = ManifoldModel::hyperboloid(2);
        let g =
            grad_volume_fd(&h2, &pt(&[1.0, 0.0, 0.0]), 1.0, GRAD_VOLUME_FD_STEP, &quad()).unwrap();
        assert!(linalg::norm(&g.components) < 1e-8);
    }

    #[test]
    fn grad_volume_richardson_consistency_on_bump() {
        let m = ManifoldModel::conformal(ConformalSurface::bump());
        let p = pt(&[1.5, 0.0]);
        let g1 = grad_volume_fd(&m, &p, 1.0, 1e-3, &quad()).unwrap();
        let g2 = grad_volume_fd(&m, &p, 1.0, 5e-4, &quad()).unwrap();
        assert!(
            linalg::max_abs_diff(&g1.components, &g2.components) < 1e-6,
            "step halving moved the gradient by more than 1e-6"
        );
        assert!(linalg::norm(&g1.components) > 1e-4);
    }

    #[test]
    fn radial_volume_derivative_equals_area() {
        // Coarea: ∂V/∂r = A.
        let cases: Vec<(ManifoldModel, Point, f64)> = vec![
            (ManifoldModel::euclidean(2), pt(&[0.0, 0.0]), 1.0),
            (ManifoldModel::hyperboloid(2), pt(&[1.0, 0.0, 0.0]), 2.0),
            (ManifoldModel::sphere(2), pt(&[0.0, 0.0, 1.0]), 1.2),
            (
                ManifoldModel::conformal(ConformalSurface::bump()),
                pt(&[1.5, 0.0]),
                1.0,
            ),
        ];
        let h = 1e-3;
        for (m, p, r) in cases {
            let a = area(&m, &p, r, &quad()).unwrap();
            let vp = volume(&m, &p, r + h, &quad()).unwrap();
            let vm = volume(&m, &p, r - h, &quad()).unwrap();
            let fd = (vp - vm) / (2.0 * h);
            assert!(
                ((fd - a) / a).abs() < 1e-6,
                "{}: dV/dr = {fd} vs A = {a}",
                m.name()
            );
        }
    }

    #[test]
    fn radial_derivative_norm_bounded_by_r_times_area() {
        let cases: Vec<(ManifoldModel, Point, f64)> = vec![
            (ManifoldModel::euclidean(3), pt(&[0.1, 0.2, 0.3]), 1.5),
            (ManifoldModel::hyperboloid(2), pt(&[1.0, 0.0, 0.0]), 2.0),
            (
                ManifoldModel::conformal(ConformalSurface::wave()),
                pt(&[0.5, 0.5]),
                1.0,
            ),
        ];
        for (m, p, r) in cases {
            let rep = stability_report(&m, &p, r, &quad()).unwrap();
            let lhs = m.metric_norm(&rep.dh_dr).unwrap();
            assert!(
                lhs <= r * rep.area * (1.0 + 1e-12),
                "{}: |dH/dr| = {lhs} vs r·A = {}",
                m.name(),
                r * rep.area
            );
            assert!(rep.volume > 0.0 && rep.area > 0.0);
        }
    }

    #[test]
    fn doubling_direction_order_is_converged() {
        let coarse = QuadratureConfig {
            direction_order: 256,
            radial_order: 64,
        };
        let fine = QuadratureConfig {
            direction_order: 512,
            radial_order: 64,
        };
        let cases: Vec<(ManifoldModel, Point, f64)> = vec![
            (ManifoldModel::hyperboloid(2), pt(&[1.0, 0.0, 0.0]), 2.0),
            (
                ManifoldModel::conformal(ConformalSurface::bump()),
                pt(&[1.5, 0.0]),
                1.0,
            ),
        ];
        for (m, p, r) in cases {
            let a = stability_report(&m, &p, r, &coarse).unwrap();
            let b = stability_report(&m, &p, r, &fine).unwrap();
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-12);
            assert!(rel(a.volume, b.volume) < 1e-8, "{} volume", m.name());
            assert!(rel(a.area, b.area) < 1e-8, "{} area", m.name());
            let dh = linalg::max_abs_diff(&a.h.components, &b.h.components);
            let scale = linalg::norm(&a.h.components).max(1e-12);
            assert!(dh / scale.max(1.0) < 1e-8, "{} H", m.name());
        }
    }

    #[test]
    fn ball_nodes_reject_out_of_domain_radius() {
        let s2 = ManifoldModel::sphere(2);
        let p = pt(&[0.0, 0.0, 1.0]);
        assert!(matches!(
            ball_nodes(&s2, &p, 3.2, &quad()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            ball_nodes(&s2, &p, -1.0, &quad()),
            Err(Error::Precondition(_))
        ));
    }

    // Monte Carlo oracle for the center-of-mass field on the bump surface:
    // rejection sampling in the chart with density e^{2λ}, membership and
    // log map via shooting — an independent route from polar quadrature.
    #[test]
    fn stability_field_bump_against_monte_carlo() {
        use rand::{Rng, SeedableRng};
        let s = ConformalSurface::bump();
        let m = ManifoldModel::conformal(s.clone());
        let p = pt(&[1.5, 0.0]);
        let r = 1.0;
        let h = stability_field(&m, &p, r, &quad()).unwrap();
        // The bump interior carries positive curvature, so geodesic spheres
        // spread less toward it: the radial density is smaller on the bump
        // side and the ball's mass shifts away from the origin, H_x > 0.
        // Frozen from a 5.12e6-sample run of the oracle below:
        // H = (0.004504 ± 0.000830, 0.000720 ± 0.000817), quadrature inside
        // the 1σ band on both components.
        assert!(
            (h.components[0] - 5.142019411e-3).abs() < 1e-9,
            "H_x = {}",
            h.components[0]
        );
        assert!(h.components[1].abs() < 1e-10, "H_y = {}", h.components[1]);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (x0, x1, y0, y1) = (0.3_f64, 2.7_f64, -1.2_f64, 1.2_f64);
        let box_area = (x1 - x0) * (y1 - y0);
        let n = if cfg!(debug_assertions) { 1_500 } else { 20_000 };
        let mut sum = [0.0_f64, 0.0];
        let mut sum_sq = [0.0_f64, 0.0];
        for _ in 0..n {
            let q = pt(&[rng.gen_range(x0..x1), rng.gen_range(y0..y1)]);
            let shot = crate::geodesics::shoot_log(&s, &p, &q, 1e-9, 60).unwrap();
            let d = m.metric_norm(&shot.velocity).unwrap();
            let mut val = [0.0, 0.0];
            if d <= r {
                let dens = (2.0 * s.lambda(q.coords[0], q.coords[1])).exp();
                val = [
                    shot.velocity.components[0] * dens,
                    shot.velocity.components[1] * dens,
                ];
            }
            for i in 0..2 {
                sum[i] += val[i];
                sum_sq[i] += val[i] * val[i];
            }
        }
        for i in 0..2 {
            let mean = sum[i] / n as f64;
            let var = (sum_sq[i] / n as f64 - mean * mean).max(0.0);
            let est = box_area * mean;
            let se = box_area * (var / n as f64).sqrt();
            assert!(
                (h.components[i] - est).abs() <= 3.0 * se,
                "component {i}: quadrature {} vs MC {est} ± {se}",
                h.components[i]
            );
        }
    }
}
