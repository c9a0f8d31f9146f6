//! Model manifolds with closed-form geometry.
//!
//! Four families are implemented:
//!
//! - `Euclidean(n)` — flat ℝⁿ in chart coordinates,
//! - `Hyperboloid(n)` — hyperbolic space Hⁿ as the upper sheet of
//!   ⟨x,x⟩_L = −1 in Minkowski space (Lorentz form −x₀y₀ + Σxᵢyᵢ),
//! - `Sphere(n)` — the unit round sphere Sⁿ ⊂ ℝⁿ⁺¹,
//! - `Conformal` — 2-D surfaces with metric g = e²λ(dx² + dy²); exponential
//!   map, transport, and densities for these are numeric and live in
//!   [`crate::geodesics`].
//!
//! Points on the embedded models carry ambient coordinates (n+1 entries);
//! chart models use n entries. All operations are pure functions of their
//! arguments and the immutable model value.

use crate::linalg::{self, dot, lorentz_dot, norm};
use crate::{Error, Result};

/// Tolerance for the constraint surfaces ⟨x,x⟩_L = −1 and ‖x‖ = 1.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Hyperboloid points are renormalized back onto the sheet when the
/// constraint drifts beyond this after arithmetic; keeps long-radius
/// computations on-manifold.
const RENORM_TRIGGER: f64 = 1e-12;

/// A manifold point in the containing model's coordinate convention.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point {
            coords: coords.to_vec(),
        }
    }
}

/// A tangent vector anchored at its base point, in the same coordinate
/// convention as [`Point`].
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, components: Vec<f64>) -> Self {
        TangentVector { base, components }
    }
}

/// A conformally flat surface g = e²λ(dx² + dy²) given by its log-factor λ.
///
/// The shipped instances all have analytic first derivatives (used by the
/// geodesic equations) and analytic Laplacians (used by the curvature in the
/// Jacobi equation); [`crate::geodesics::gauss_curvature`] falls back to
/// central differences when no analytic Laplacian is available.
#[derive(Clone, Debug, PartialEq)]
pub enum ConformalSurface {
    /// λ ≡ 0; reduces every operation to the Euclidean plane.
    Flat,
    /// λ = a·exp(−(x²+y²)/s²): an isolated curvature bump at the origin.
    Bump { amplitude: f64, width: f64 },
    /// λ = a·sin(x)·sin(y): a doubly periodic curvature pattern.
    Wave { amplitude: f64 },
    /// λ = log(2/(1−x²−y²)) on the unit disk: curvature −1, the disk chart
    /// of the hyperbolic plane.
    PoincareDisk,
}

impl ConformalSurface {
    /// The standard bump instance a = 0.2, s = 1.5.
    pub fn bump() -> Self {
        ConformalSurface::Bump {
            amplitude: 0.2,
            width: 1.5,
        }
    }

    /// The standard wave instance a = 0.1.
    pub fn wave() -> Self {
        ConformalSurface::Wave { amplitude: 0.1 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConformalSurface::Flat => "flat-surface",
            ConformalSurface::Bump { .. } => "bump-surface",
            ConformalSurface::Wave { .. } => "wave-surface",
            ConformalSurface::PoincareDisk => "poincare-disk",
        }
    }

    pub fn lambda(&self, x: f64, y: f64) -> f64 {
        match *self {
            ConformalSurface::Flat => 0.0,
            ConformalSurface::Bump { amplitude, width } => {
                amplitude * (-(x * x + y * y) / (width * width)).exp()
            }
            ConformalSurface::Wave { amplitude } => amplitude * x.sin() * y.sin(),
            ConformalSurface::PoincareDisk => {
                let d = 1.0 - x * x - y * y;
                (2.0 / d).ln()
            }
        }
    }

    /// (∂λ/∂x, ∂λ/∂y), analytic for every shipped instance.
    pub fn lambda_grad(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            ConformalSurface::Flat => (0.0, 0.0),
            ConformalSurface::Bump { amplitude, width } => {
                let s2 = width * width;
                let l = amplitude * (-(x * x + y * y) / s2).exp();
                (-2.0 * x / s2 * l, -2.0 * y / s2 * l)
            }
            ConformalSurface::Wave { amplitude } => (
                amplitude * x.cos() * y.sin(),
                amplitude * x.sin() * y.cos(),
            ),
            ConformalSurface::PoincareDisk => {
                let d = 1.0 - x * x - y * y;
                (2.0 * x / d, 2.0 * y / d)
            }
        }
    }

    /// Analytic Laplacian Δλ when the instance provides one.
    pub fn lambda_laplacian(&self, x: f64, y: f64) -> Option<f64> {
        match *self {
            ConformalSurface::Flat => Some(0.0),
            ConformalSurface::Bump { amplitude, width } => {
                let s2 = width * width;
                let r2 = x * x + y * y;
                let l = amplitude * (-r2 / s2).exp();
                Some(l * (4.0 * r2 / (s2 * s2) - 4.0 / s2))
            }
            ConformalSurface::Wave { amplitude } => Some(-2.0 * amplitude * x.sin() * y.sin()),
            ConformalSurface::PoincareDisk => {
                let d = 1.0 - x * x - y * y;
                Some(4.0 / (d * d))
            }
        }
    }

    /// Conformal factor e^λ at a chart point.
    pub fn factor(&self, x: f64, y: f64) -> f64 {
        self.lambda(x, y).exp()
    }
}

/// One of the concrete model spaces.
#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldModel {
    Euclidean { dim: usize },
    Hyperboloid { dim: usize },
    Sphere { dim: usize },
    Conformal(ConformalSurface),
}

impl ManifoldModel {
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1);
        ManifoldModel::Euclidean { dim }
    }

    pub fn hyperboloid(dim: usize) -> Self {
        assert!(dim >= 1);
        ManifoldModel::Hyperboloid { dim }
    }

    pub fn sphere(dim: usize) -> Self {
        assert!(dim >= 1);
        ManifoldModel::Sphere { dim }
    }

    pub fn conformal(surface: ConformalSurface) -> Self {
        ManifoldModel::Conformal(surface)
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldModel::Euclidean { dim } => *dim,
            ManifoldModel::Hyperboloid { dim } => *dim,
            ManifoldModel::Sphere { dim } => *dim,
            ManifoldModel::Conformal(_) => 2,
        }
    }

    /// Number of coordinates carried by points and tangent vectors.
    pub fn ambient_dim(&self) -> usize {
        match self {
            ManifoldModel::Euclidean { dim } => *dim,
            ManifoldModel::Hyperboloid { dim } => dim + 1,
            ManifoldModel::Sphere { dim } => dim + 1,
            ManifoldModel::Conformal(_) => 2,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ManifoldModel::Euclidean { dim } => format!("euclidean{dim}"),
            ManifoldModel::Hyperboloid { dim } => format!("hyperboloid{dim}"),
            ManifoldModel::Sphere { dim } => format!("sphere{dim}"),
            ManifoldModel::Conformal(s) => s.name().to_string(),
        }
    }

    /// Verify `p` has the right arity and satisfies the model's constraint
    /// surface within [`CONSTRAINT_TOL`].
    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.coords.len() != self.ambient_dim() {
            return Err(Error::Contract(format!(
                "point has {} coordinates, {} expects {}",
                p.coords.len(),
                self.name(),
                self.ambient_dim()
            )));
        }
        match self {
            ManifoldModel::Hyperboloid { .. } => {
                let c = lorentz_dot(&p.coords, &p.coords);
                // The constraint residual is only evaluable to eps·‖x‖², so
                // the tolerance is taken relative to the coordinate scale.
                let scale = dot(&p.coords, &p.coords).max(1.0);
                if (c + 1.0).abs() > CONSTRAINT_TOL * scale || p.coords[0] <= 0.0 {
                    return Err(Error::Contract(format!(
                        "point not on hyperboloid sheet: <x,x>_L = {c:.3e}, x0 = {}",
                        p.coords[0]
                    )));
                }
            }
            ManifoldModel::Sphere { .. } => {
                let n = norm(&p.coords);
                if (n - 1.0).abs() > CONSTRAINT_TOL {
                    return Err(Error::Contract(format!(
                        "point not on unit sphere: |x| = {n:.12}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Verify `v` is anchored at `p` and tangent to the constraint surface.
    pub fn check_tangent_at(&self, p: &Point, v: &TangentVector) -> Result<()> {
        self.check_point(p)?;
        if v.components.len() != self.ambient_dim() {
            return Err(Error::Contract(format!(
                "tangent vector has {} components, {} expects {}",
                v.components.len(),
                self.name(),
                self.ambient_dim()
            )));
        }
        if linalg::max_abs_diff(&v.base.coords, &p.coords) > 1e-12 {
            return Err(Error::Contract(format!(
                "tangent vector based at {:?}, used at {:?}",
                v.base.coords, p.coords
            )));
        }
        match self {
            ManifoldModel::Hyperboloid { .. } => {
                let c = lorentz_dot(&p.coords, &v.components);
                if c.abs() > CONSTRAINT_TOL * (1.0 + norm(&v.components)) {
                    return Err(Error::Contract(format!(
                        "vector not Lorentz-orthogonal to base: <p,v>_L = {c:.3e}"
                    )));
                }
            }
            ManifoldModel::Sphere { .. } => {
                let c = dot(&p.coords, &v.components);
                if c.abs() > CONSTRAINT_TOL * (1.0 + norm(&v.components)) {
                    return Err(Error::Contract(format!(
                        "vector not orthogonal to base: <p,v> = {c:.3e}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Riemannian inner product ⟨v,w⟩ at p.
    pub fn metric_inner(&self, p: &Point, v: &TangentVector, w: &TangentVector) -> Result<f64> {
        self.check_tangent_at(p, v)?;
        self.check_tangent_at(p, w)?;
        Ok(self.metric_inner_unchecked(p, &v.components, &w.components))
    }

    /// Inner product on raw component slices; callers guarantee the contract.
    pub(crate) fn metric_inner_unchecked(&self, p: &Point, v: &[f64], w: &[f64]) -> f64 {
        match self {
            ManifoldModel::Euclidean { .. } | ManifoldModel::Sphere { .. } => dot(v, w),
            ManifoldModel::Hyperboloid { .. } => lorentz_dot(v, w),
            ManifoldModel::Conformal(s) => {
                let l = s.lambda(p.coords[0], p.coords[1]);
                (2.0 * l).exp() * dot(v, w)
            }
        }
    }

    /// Metric norm ‖v‖ at the vector's base point.
    pub fn metric_norm(&self, v: &TangentVector) -> Result<f64> {
        Ok(self
            .metric_inner(&v.base.clone(), v, v)?
            .max(0.0)
            .sqrt())
    }

    /// Exponential map: follow the geodesic with initial velocity `v` for
    /// unit parameter time. Total on its domain; `exp_map(p, 0) = p` exactly.
    pub fn exp_map(&self, p: &Point, v: &TangentVector) -> Result<Point> {
        self.check_tangent_at(p, v)?;
        match self {
            ManifoldModel::Euclidean { .. } => {
                Ok(Point::new(linalg::add(&p.coords, &v.components)))
            }
            ManifoldModel::Hyperboloid { .. } => {
                let t = lorentz_dot(&v.components, &v.components).max(0.0).sqrt();
                if t == 0.0 {
                    return Ok(p.clone());
                }
                let mut q: Vec<f64> = p
                    .coords
                    .iter()
                    .zip(&v.components)
                    .map(|(pi, vi)| t.cosh() * pi + t.sinh() / t * vi)
                    .collect();
                renormalize_hyperboloid(&mut q);
                Ok(Point::new(q))
            }
            ManifoldModel::Sphere { .. } => {
                let t = norm(&v.components);
                if t == 0.0 {
                    return Ok(p.clone());
                }
                let mut q: Vec<f64> = p
                    .coords
                    .iter()
                    .zip(&v.components)
                    .map(|(pi, vi)| t.cos() * pi + t.sin() / t * vi)
                    .collect();
                renormalize_sphere(&mut q);
                Ok(Point::new(q))
            }
            ManifoldModel::Conformal(s) => crate::geodesics::exp_conformal(s, p, v),
        }
    }

    /// Inverse exponential map: the velocity v with exp_p(v) = q and metric
    /// norm equal to the geodesic distance d(p,q).
    pub fn log_map(&self, p: &Point, q: &Point) -> Result<TangentVector> {
        self.check_point(p)?;
        self.check_point(q)?;
        match self {
            ManifoldModel::Euclidean { .. } => Ok(TangentVector::new(
                p.clone(),
                linalg::sub(&q.coords, &p.coords),
            )),
            ManifoldModel::Hyperboloid { .. } => {
                let c = (-lorentz_dot(&p.coords, &q.coords)).max(1.0);
                let e = c - 1.0;
                if e <= 0.0 {
                    return Ok(TangentVector::new(p.clone(), vec![0.0; p.coords.len()]));
                }
                // v = f·(q − c·p), f = acosh(c)/sqrt(c²−1); series near c = 1.
                let f = if e < 1e-8 {
                    1.0 - e / 3.0
                } else {
                    c.acosh() / (c * c - 1.0).sqrt()
                };
                let comps: Vec<f64> = q
                    .coords
                    .iter()
                    .zip(&p.coords)
                    .map(|(qi, pi)| f * (qi - c * pi))
                    .collect();
                Ok(TangentVector::new(p.clone(), comps))
            }
            ManifoldModel::Sphere { .. } => {
                let c = dot(&p.coords, &q.coords).clamp(-1.0, 1.0);
                if c <= -1.0 + 1e-12 {
                    return Err(Error::Domain(
                        "log map undefined at the antipode (cut locus of the sphere)".into(),
                    ));
                }
                let e = 1.0 - c;
                if e <= 0.0 {
                    return Ok(TangentVector::new(p.clone(), vec![0.0; p.coords.len()]));
                }
                let f = if e < 1e-8 {
                    1.0 + e / 3.0
                } else {
                    c.acos() / (1.0 - c * c).sqrt()
                };
                let comps: Vec<f64> = q
                    .coords
                    .iter()
                    .zip(&p.coords)
                    .map(|(qi, pi)| f * (qi - c * pi))
                    .collect();
                Ok(TangentVector::new(p.clone(), comps))
            }
            ManifoldModel::Conformal(s) => {
                let shot = crate::geodesics::shoot_log(
                    s,
                    p,
                    q,
                    crate::geodesics::SHOOTING_TOL,
                    crate::geodesics::SHOOTING_MAX_ITER,
                )?;
                Ok(shot.velocity)
            }
        }
    }

    /// Geodesic distance d(p,q).
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        let v = self.log_map(p, q)?;
        self.metric_norm(&v)
    }

    /// Parallel transport of `v` from p to q along the unique minimizing
    /// geodesic. Preserves inner products; carries the outgoing radial
    /// direction to the arriving geodesic velocity.
    pub fn parallel_transport(&self, p: &Point, q: &Point, v: &TangentVector) -> Result<TangentVector> {
        self.check_tangent_at(p, v)?;
        self.check_point(q)?;
        match self {
            ManifoldModel::Euclidean { .. } => {
                Ok(TangentVector::new(q.clone(), v.components.clone()))
            }
            ManifoldModel::Hyperboloid { .. } => {
                let log = self.log_map(p, q)?;
                let d = lorentz_dot(&log.components, &log.components)
                    .max(0.0)
                    .sqrt();
                if d == 0.0 {
                    return Ok(TangentVector::new(q.clone(), v.components.clone()));
                }
                let u = linalg::scale(&log.components, 1.0 / d);
                let a = lorentz_dot(&v.components, &u);
                // P(v) = v + a((cosh d − 1)u + sinh d · p)
                let comps: Vec<f64> = v
                    .components
                    .iter()
                    .enumerate()
                    .map(|(i, vi)| vi + a * ((d.cosh() - 1.0) * u[i] + d.sinh() * p.coords[i]))
                    .collect();
                Ok(TangentVector::new(q.clone(), comps))
            }
            ManifoldModel::Sphere { .. } => {
                let log = self.log_map(p, q)?;
                let d = norm(&log.components);
                if d == 0.0 {
                    return Ok(TangentVector::new(q.clone(), v.components.clone()));
                }
                let u = linalg::scale(&log.components, 1.0 / d);
                let a = dot(&v.components, &u);
                // P(v) = v + a((cos d − 1)u − sin d · p)
                let comps: Vec<f64> = v
                    .components
                    .iter()
                    .enumerate()
                    .map(|(i, vi)| vi + a * ((d.cos() - 1.0) * u[i] - d.sin() * p.coords[i]))
                    .collect();
                Ok(TangentVector::new(q.clone(), comps))
            }
            ManifoldModel::Conformal(s) => {
                let log = self.log_map(p, q)?;
                let path = crate::geodesics::integrate_geodesic_adaptive(s, p, &log, 1.0)?;
                crate::geodesics::transport_along(s, &path, v)
            }
        }
    }

    /// Radial volume density θ(p,u,r): the Jacobian with dμ = θ dr dΩ in
    /// geodesic polar coordinates around p, along the unit direction u.
    pub fn volume_density(&self, p: &Point, u: &TangentVector, r: f64) -> Result<f64> {
        self.check_tangent_at(p, u)?;
        if r <= 0.0 {
            return Err(Error::Precondition(format!("radius must be positive, got {r}")));
        }
        if r >= self.injectivity_bound(p) {
            return Err(Error::Domain(format!(
                "radius {r} is at or beyond the injectivity bound of {}",
                self.name()
            )));
        }
        let nu = self.metric_inner_unchecked(p, &u.components, &u.components).sqrt();
        if (nu - 1.0).abs() > 1e-8 {
            return Err(Error::Contract(format!(
                "direction must be a unit vector, got metric norm {nu:.12}"
            )));
        }
        let n = self.dim() as i32;
        match self {
            ManifoldModel::Euclidean { .. } => Ok(r.powi(n - 1)),
            ManifoldModel::Hyperboloid { .. } => Ok(r.sinh().powi(n - 1)),
            ManifoldModel::Sphere { .. } => Ok(r.sin().powi(n - 1)),
            ManifoldModel::Conformal(s) => {
                let phi = u.components[1].atan2(u.components[0]);
                crate::geodesics::jacobi_density(s, p, phi, r)
            }
        }
    }

    /// Radius below which exp_p is a diffeomorphism: +∞ for the open models
    /// in the catalog, π for the sphere.
    pub fn injectivity_bound(&self, _p: &Point) -> f64 {
        match self {
            ManifoldModel::Sphere { .. } => std::f64::consts::PI,
            _ => f64::INFINITY,
        }
    }

    /// A deterministic metric-orthonormal basis of T_pM.
    pub fn orthonormal_basis(&self, p: &Point) -> Result<Vec<TangentVector>> {
        self.check_point(p)?;
        match self {
            ManifoldModel::Euclidean { dim } => Ok((0..*dim)
                .map(|i| {
                    let mut c = vec![0.0; *dim];
                    c[i] = 1.0;
                    TangentVector::new(p.clone(), c)
                })
                .collect()),
            ManifoldModel::Conformal(s) => {
                let f = (-s.lambda(p.coords[0], p.coords[1])).exp();
                Ok((0..2)
                    .map(|i| {
                        let mut c = vec![0.0; 2];
                        c[i] = f;
                        TangentVector::new(p.clone(), c)
                    })
                    .collect())
            }
            ManifoldModel::Hyperboloid { dim } | ManifoldModel::Sphere { dim } => {
                let lorentzian = matches!(self, ManifoldModel::Hyperboloid { .. });
                let inner = |a: &[f64], b: &[f64]| {
                    if lorentzian {
                        lorentz_dot(a, b)
                    } else {
                        dot(a, b)
                    }
                };
                let ambient = dim + 1;
                let mut basis: Vec<Vec<f64>> = Vec::with_capacity(*dim);
                for i in 0..ambient {
                    if basis.len() == *dim {
                        break;
                    }
                    let mut w = vec![0.0; ambient];
                    w[i] = 1.0;
                    // Project onto the tangent space at p.
                    let c = inner(&w, &p.coords);
                    let sign = if lorentzian { 1.0 } else { -1.0 };
                    for (k, wk) in w.iter_mut().enumerate() {
                        *wk += sign * c * p.coords[k];
                    }
                    for b in &basis {
                        let c = inner(&w, b);
                        for (k, wk) in w.iter_mut().enumerate() {
                            *wk -= c * b[k];
                        }
                    }
                    let n2 = inner(&w, &w);
                    if n2 > 1e-12 {
                        let s = 1.0 / n2.sqrt();
                        basis.push(linalg::scale(&w, s));
                    }
                }
                if basis.len() != *dim {
                    return Err(Error::Contract(format!(
                        "failed to build an orthonormal basis at {:?}",
                        p.coords
                    )));
                }
                Ok(basis
                    .into_iter()
                    .map(|c| TangentVector::new(p.clone(), c))
                    .collect())
            }
        }
    }
}

fn renormalize_hyperboloid(q: &mut [f64]) {
    let c = lorentz_dot(q, q);
    let scale = dot(q, q).max(1.0);
    if (c + 1.0).abs() > RENORM_TRIGGER * scale && c < 0.0 {
        let s = 1.0 / (-c).sqrt();
        for qi in q.iter_mut() {
            *qi *= s;
        }
    }
}

fn renormalize_sphere(q: &mut [f64]) {
    let n2 = dot(q, q);
    if (n2 - 1.0).abs() > RENORM_TRIGGER {
        let s = 1.0 / n2.sqrt();
        for qi in q.iter_mut() {
            *qi *= s;
        }
    }
}
