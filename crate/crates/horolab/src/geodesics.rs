//! Numerical geodesics on conformal surfaces g = e²λ(dx² + dy²).
//!
//! The geodesic equations in the chart are
//!
//! ```text
//! ẍ = −λ_x(ẋ² − ẏ²) − 2 λ_y ẋ ẏ
//! ÿ = +λ_y(ẋ² − ẏ²) − 2 λ_x ẋ ẏ
//! ```
//!
//! integrated with a classical fixed-step 4th-order scheme. Accuracy is
//! monitored through the metric speed ‖γ̇‖_g, which is conserved along exact
//! geodesics; a path whose speed drifts by more than [`ENERGY_DRIFT_TOL`] is
//! rejected and the driver retries with a halved step, up to
//! [`MAX_STEP_HALVINGS`] times.
//!
//! The inverse exponential map is realized by damped Newton shooting on the
//! endpoint map v ↦ exp_p(v), with the Jacobian taken by central finite
//! differences. Volume densities come from the scalar Jacobi equation
//! j″ + K j = 0 co-integrated along the geodesic.

use crate::linalg;
use crate::manifolds::{ConformalSurface, Point, TangentVector};
use crate::{Error, Result};

/// Maximum tolerated drift of the metric speed along an accepted path.
pub const ENERGY_DRIFT_TOL: f64 = 1e-7;

/// Retry budget for the step-halving driver.
pub const MAX_STEP_HALVINGS: u32 = 6;

/// Default number of integration steps per geodesic (step r/256 for a
/// unit-speed geodesic of length r); fixed cost inside quadrature loops.
pub const DEFAULT_STEPS: usize = 256;

/// Default chart-distance tolerance for Newton shooting.
pub const SHOOTING_TOL: f64 = 1e-10;

/// Default iteration cap for Newton shooting.
pub const SHOOTING_MAX_ITER: u32 = 50;

/// Absolute finite-difference step for the shooting Jacobian.
const SHOOTING_FD_STEP: f64 = 1e-6;

/// Central-difference step for numerical second derivatives of λ.
const CURVATURE_FD_STEP: f64 = 1e-4;

/// One recorded state of a geodesic.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub t: f64,
    pub position: Point,
    pub velocity: TangentVector,
}

/// A fixed-step geodesic integration over [0, T].
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    /// Samples at t = 0, h, 2h, …, T; t strictly increasing from 0.
    pub samples: Vec<PathSample>,
    /// Step actually used.
    pub step: f64,
    /// max over samples of |‖γ̇‖_g − ‖γ̇(0)‖_g|.
    pub energy_drift: f64,
}

impl GeodesicPath {
    pub fn start(&self) -> &PathSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &PathSample {
        self.samples.last().expect("paths have at least one sample")
    }
}

/// Outcome of Newton shooting for the inverse exponential map.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootingResult {
    /// Velocity v with exp_p(v) within tolerance of the target.
    pub velocity: TangentVector,
    /// Newton iterations spent (each evaluates the residual once).
    pub iterations: u32,
    /// Chart distance of the final endpoint from the target.
    pub terminal_error: f64,
}

#[inline]
fn rk4_step<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(y);
    let mut y2 = *y;
    for i in 0..N {
        y2[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(&y2);
    for i in 0..N {
        y2[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(&y2);
    for i in 0..N {
        y2[i] = y[i] + h * k3[i];
    }
    let k4 = f(&y2);
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn geodesic_rhs(s: &ConformalSurface, y: &[f64; 4]) -> [f64; 4] {
    let (lx, ly) = s.lambda_grad(y[0], y[1]);
    let (vx, vy) = (y[2], y[3]);
    let d = vx * vx - vy * vy;
    [
        vx,
        vy,
        -lx * d - 2.0 * ly * vx * vy,
        ly * d - 2.0 * lx * vx * vy,
    ]
}

#[inline]
fn metric_speed(s: &ConformalSurface, y: &[f64; 4]) -> f64 {
    s.factor(y[0], y[1]) * (y[2] * y[2] + y[3] * y[3]).sqrt()
}

/// Integrate the geodesic with initial chart velocity `v` over [0, T] at a
/// fixed step. Fails when the metric speed drifts beyond
/// [`ENERGY_DRIFT_TOL`]; callers halve the step and retry (see
/// [`integrate_geodesic_adaptive`]).
pub fn integrate_geodesic(
    s: &ConformalSurface,
    p: &Point,
    v: &TangentVector,
    total_t: f64,
    step: f64,
) -> Result<GeodesicPath> {
    if step <= 0.0 || total_t < 0.0 {
        return Err(Error::Precondition(format!(
            "integration wants total_t >= 0 and step > 0, got T={total_t}, step={step}"
        )));
    }
    if linalg::max_abs_diff(&v.base.coords, &p.coords) > 1e-12 {
        return Err(Error::Contract("velocity not based at the start point".into()));
    }
    let mut y = [p.coords[0], p.coords[1], v.components[0], v.components[1]];
    let speed0 = metric_speed(s, &y);
    let n = (total_t / step).ceil().max(1.0) as usize;
    let h = total_t / n as f64;
    let rhs = |state: &[f64; 4]| geodesic_rhs(s, state);
    let mut samples = Vec::with_capacity(n + 1);
    let mut drift: f64 = 0.0;
    samples.push(sample_from(0.0, &y));
    for k in 1..=n {
        y = rk4_step(&rhs, &y, h);
        if !y.iter().all(|c| c.is_finite()) {
            return Err(Error::Accuracy(format!(
                "geodesic left the chart domain near t = {}",
                k as f64 * h
            )));
        }
        drift = drift.max((metric_speed(s, &y) - speed0).abs());
        samples.push(sample_from(k as f64 * h, &y));
    }
    if drift > ENERGY_DRIFT_TOL {
        return Err(Error::Accuracy(format!(
            "metric speed drift {drift:.3e} exceeds {ENERGY_DRIFT_TOL:.1e} at step {h:.3e}"
        )));
    }
    Ok(GeodesicPath {
        samples,
        step: h,
        energy_drift: drift,
    })
}

fn sample_from(t: f64, y: &[f64; 4]) -> PathSample {
    let position = Point::new(vec![y[0], y[1]]);
    PathSample {
        t,
        position: position.clone(),
        velocity: TangentVector::new(position, vec![y[2], y[3]]),
    }
}

/// Integrate with the default step T/[`DEFAULT_STEPS`], halving on drift
/// failures up to [`MAX_STEP_HALVINGS`] times.
pub fn integrate_geodesic_adaptive(
    s: &ConformalSurface,
    p: &Point,
    v: &TangentVector,
    total_t: f64,
) -> Result<GeodesicPath> {
    let mut step = total_t / DEFAULT_STEPS as f64;
    if step <= 0.0 {
        step = 1.0 / DEFAULT_STEPS as f64;
    }
    let mut last = None;
    for _ in 0..=MAX_STEP_HALVINGS {
        match integrate_geodesic(s, p, v, total_t, step) {
            Ok(path) => return Ok(path),
            Err(e) => last = Some(e),
        }
        step *= 0.5;
    }
    Err(last.unwrap())
}

/// Exponential map on a conformal surface: endpoint of the unit-parameter
/// geodesic with initial velocity `v`.
pub fn exp_conformal(s: &ConformalSurface, p: &Point, v: &TangentVector) -> Result<Point> {
    if v.components.iter().all(|&c| c == 0.0) {
        return Ok(p.clone());
    }
    let path = integrate_geodesic_adaptive(s, p, v, 1.0)?;
    Ok(path.end().position.clone())
}

/// Raw endpoint of the unit-parameter geodesic at a given refinement level:
/// no sample storage and no drift rejection. Newton shooting iterates on
/// this map so that the endpoint stays a smooth function of the velocity.
fn endpoint_raw(s: &ConformalSurface, start: [f64; 2], v: [f64; 2], nsteps: usize) -> [f64; 2] {
    let mut y = [start[0], start[1], v[0], v[1]];
    let h = 1.0 / nsteps as f64;
    let rhs = |state: &[f64; 4]| geodesic_rhs(s, state);
    for _ in 0..nsteps {
        y = rk4_step(&rhs, &y, h);
    }
    [y[0], y[1]]
}

/// Inverse exponential map by damped Newton shooting on the endpoint map.
///
/// Initialized with the chart difference q − p; the Jacobian is taken by
/// central finite differences, and a step that increases the residual is
/// halved before being accepted. Deterministic for fixed inputs. The
/// degenerate input p = q returns the zero vector immediately.
pub fn shoot_log(
    s: &ConformalSurface,
    p: &Point,
    q: &Point,
    tol: f64,
    max_iter: u32,
) -> Result<ShootingResult> {
    let start = [p.coords[0], p.coords[1]];
    let target = [q.coords[0], q.coords[1]];
    if start == target {
        return Ok(ShootingResult {
            velocity: TangentVector::new(p.clone(), vec![0.0, 0.0]),
            iterations: 0,
            terminal_error: 0.0,
        });
    }
    let mut nsteps = DEFAULT_STEPS;
    let mut level = 0u32;
    let mut v = [target[0] - start[0], target[1] - start[1]];
    let residual = |v: &[f64; 2], nsteps: usize| -> [f64; 2] {
        let e = endpoint_raw(s, start, *v, nsteps);
        [e[0] - target[0], e[1] - target[1]]
    };
    let mut res = residual(&v, nsteps);
    let mut res_norm = linalg::norm(&res);
    let mut iterations = 0u32;
    while iterations < max_iter {
        iterations += 1;
        if res_norm <= tol {
            // Converged at this level; accept once the drift check passes,
            // otherwise refine the grid and keep iterating.
            match integrate_geodesic(
                s,
                p,
                &TangentVector::new(p.clone(), v.to_vec()),
                1.0,
                1.0 / nsteps as f64,
            ) {
                Ok(_) => {
                    return Ok(ShootingResult {
                        velocity: TangentVector::new(p.clone(), v.to_vec()),
                        iterations,
                        terminal_error: res_norm,
                    });
                }
                Err(_) if level < MAX_STEP_HALVINGS => {
                    level += 1;
                    nsteps *= 2;
                    res = residual(&v, nsteps);
                    res_norm = linalg::norm(&res);
                    continue;
                }
                Err(e) => return Err(e),
            }
        }
        // Central-difference Jacobian of the endpoint map.
        let mut jac = vec![vec![0.0; 2]; 2];
        for col in 0..2 {
            let mut vp = v;
            let mut vm = v;
            vp[col] += SHOOTING_FD_STEP;
            vm[col] -= SHOOTING_FD_STEP;
            let ep = residual(&vp, nsteps);
            let em = residual(&vm, nsteps);
            for row in 0..2 {
                jac[row][col] = (ep[row] - em[row]) / (2.0 * SHOOTING_FD_STEP);
            }
        }
        let delta = match linalg::solve_dense(&jac, &[-res[0], -res[1]]) {
            Some(d) => d,
            None => {
                return Err(Error::ShootingFailed {
                    iterations,
                    residual: res_norm,
                })
            }
        };
        // Damping: halve the step while the residual increases.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let cand = [v[0] + alpha * delta[0], v[1] + alpha * delta[1]];
            let cand_res = residual(&cand, nsteps);
            let cand_norm = linalg::norm(&cand_res);
            if cand_norm.is_finite() && cand_norm <= res_norm {
                v = cand;
                res = cand_res;
                res_norm = cand_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::ShootingFailed {
                iterations,
                residual: res_norm,
            });
        }
    }
    if res_norm <= tol {
        return Ok(ShootingResult {
            velocity: TangentVector::new(p.clone(), v.to_vec()),
            iterations,
            terminal_error: res_norm,
        });
    }
    Err(Error::ShootingFailed {
        iterations,
        residual: res_norm,
    })
}

/// Gauss curvature K = −e^{−2λ} Δλ, using the instance's analytic Laplacian
/// when present and central differences otherwise.
pub fn gauss_curvature(s: &ConformalSurface, p: &Point) -> f64 {
    let (x, y) = (p.coords[0], p.coords[1]);
    let lap = s
        .lambda_laplacian(x, y)
        .unwrap_or_else(|| laplacian_fd(s, x, y));
    -(-2.0 * s.lambda(x, y)).exp() * lap
}

/// Five-point central-difference Laplacian of λ at step [`CURVATURE_FD_STEP`].
pub fn laplacian_fd(s: &ConformalSurface, x: f64, y: f64) -> f64 {
    let h = CURVATURE_FD_STEP;
    (s.lambda(x + h, y) + s.lambda(x - h, y) + s.lambda(x, y + h) + s.lambda(x, y - h)
        - 4.0 * s.lambda(x, y))
        / (h * h)
}

#[inline]
fn jacobi_rhs(s: &ConformalSurface, y: &[f64; 6]) -> [f64; 6] {
    let g = geodesic_rhs(s, &[y[0], y[1], y[2], y[3]]);
    let k = gauss_curvature(s, &Point::new(vec![y[0], y[1]]));
    [g[0], g[1], g[2], g[3], y[5], -k * y[4]]
}

/// Radial volume density along the unit-speed geodesic leaving `p` in the
/// chart direction `phi`: the solution j(r) of j″ + K j = 0, j(0) = 0,
/// j′(0) = 1, co-integrated with the geodesic.
pub fn jacobi_density(s: &ConformalSurface, p: &Point, phi: f64, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Precondition(format!("radius must be positive, got {r}")));
    }
    let samples = ray_sweep(s, p, phi, &[r])?;
    Ok(samples[0].density)
}

/// One landing of a radial sweep: position and polar volume density at a
/// requested radius.
#[derive(Clone, Debug)]
pub struct RaySample {
    pub position: Point,
    pub density: f64,
}

/// Integrate one unit-speed geodesic from `p` in chart direction `phi`,
/// landing exactly on each radius in ascending `radii`, co-integrating the
/// scalar Jacobi equation. This is the quadrature workhorse: one sweep
/// serves every radial node of a ball integral.
pub fn ray_sweep(
    s: &ConformalSurface,
    p: &Point,
    phi: f64,
    radii: &[f64],
) -> Result<Vec<RaySample>> {
    let r_max = *radii.last().ok_or_else(|| {
        Error::Precondition("ray sweep needs at least one radius".into())
    })?;
    if radii.iter().any(|&r| r <= 0.0) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "ray sweep radii must be positive and strictly increasing".into(),
        ));
    }
    let f = (-s.lambda(p.coords[0], p.coords[1])).exp();
    let v0 = [f * phi.cos(), f * phi.sin()];
    let mut base_step = r_max / DEFAULT_STEPS as f64;
    let mut last_err = None;
    'attempt: for _ in 0..=MAX_STEP_HALVINGS {
        let mut y = [p.coords[0], p.coords[1], v0[0], v0[1], 0.0, 1.0];
        let speed0 = metric_speed(s, &[y[0], y[1], y[2], y[3]]);
        let rhs = |state: &[f64; 6]| jacobi_rhs(s, state);
        let mut out = Vec::with_capacity(radii.len());
        let mut t = 0.0;
        let mut drift: f64 = 0.0;
        for &target in radii {
            let seg = target - t;
            let n = (seg / base_step).ceil().max(1.0) as usize;
            let h = seg / n as f64;
            for _ in 0..n {
                y = rk4_step(&rhs, &y, h);
                if !y.iter().all(|c| c.is_finite()) {
                    last_err = Some(Error::Accuracy(format!(
                        "radial sweep left the chart domain near arclength {t:.4}"
                    )));
                    base_step *= 0.5;
                    continue 'attempt;
                }
                drift = drift.max((metric_speed(s, &[y[0], y[1], y[2], y[3]]) - speed0).abs());
            }
            t = target;
            if y[4] <= 0.0 {
                return Err(Error::ConjugatePoint { r: target });
            }
            out.push(RaySample {
                position: Point::new(vec![y[0], y[1]]),
                density: y[4],
            });
        }
        if drift > ENERGY_DRIFT_TOL {
            last_err = Some(Error::Accuracy(format!(
                "radial sweep speed drift {drift:.3e} exceeds {ENERGY_DRIFT_TOL:.1e}"
            )));
            base_step *= 0.5;
            continue 'attempt;
        }
        return Ok(out);
    }
    Err(last_err.unwrap_or_else(|| Error::Accuracy("radial sweep failed".into())))
}

#[inline]
fn transport_rhs(s: &ConformalSurface, y: &[f64; 6]) -> [f64; 6] {
    let g = geodesic_rhs(s, &[y[0], y[1], y[2], y[3]]);
    let (lx, ly) = s.lambda_grad(y[0], y[1]);
    let (gx, gy, wx, wy) = (y[2], y[3], y[4], y[5]);
    let a = lx * gx + ly * gy;
    let b = ly * gx - lx * gy;
    [g[0], g[1], g[2], g[3], -a * wx - b * wy, b * wx - a * wy]
}

/// Parallel transport of `v` along a stored geodesic path, by co-integrating
/// the transport equation with the geodesic at the path's own step.
pub fn transport_along(
    s: &ConformalSurface,
    path: &GeodesicPath,
    v: &TangentVector,
) -> Result<TangentVector> {
    let start = path.start();
    if linalg::max_abs_diff(&v.base.coords, &start.position.coords) > 1e-12 {
        return Err(Error::Contract(
            "transported vector must be based at the path start".into(),
        ));
    }
    let total_t = path.end().t;
    if total_t == 0.0 {
        return Ok(v.clone());
    }
    let mut y = [
        start.position.coords[0],
        start.position.coords[1],
        start.velocity.components[0],
        start.velocity.components[1],
        v.components[0],
        v.components[1],
    ];
    let norm0 = s.factor(y[0], y[1]) * (y[4] * y[4] + y[5] * y[5]).sqrt();
    let n = ((total_t / path.step).round() as usize).max(1);
    let h = total_t / n as f64;
    let rhs = |state: &[f64; 6]| transport_rhs(s, state);
    for _ in 0..n {
        y = rk4_step(&rhs, &y, h);
    }
    let norm1 = s.factor(y[0], y[1]) * (y[4] * y[4] + y[5] * y[5]).sqrt();
    if (norm1 - norm0).abs() > ENERGY_DRIFT_TOL {
        return Err(Error::Accuracy(format!(
            "transport norm drift {:.3e} exceeds {ENERGY_DRIFT_TOL:.1e}",
            (norm1 - norm0).abs()
        )));
    }
    let end = Point::new(vec![y[0], y[1]]);
    Ok(TangentVector::new(end, vec![y[4], y[5]]))
}

/// Chart isometry between the Poincaré disk (λ = log(2/(1−x²−y²))) and the
/// hyperboloid sheet ⟨x,x⟩_L = −1: two representations of the same
/// hyperbolic plane, used to cross-validate the numeric pipeline against
/// closed forms.
pub mod disk {
    use super::*;

    /// (x, y) ↦ ((1+ρ²)/D, 2x/D, 2y/D) with D = 1 − ρ².
    pub fn to_hyperboloid(p: &Point) -> Point {
        let (x, y) = (p.coords[0], p.coords[1]);
        let d = 1.0 - x * x - y * y;
        Point::new(vec![(1.0 + x * x + y * y) / d, 2.0 * x / d, 2.0 * y / d])
    }

    /// (x₀, x₁, x₂) ↦ (x₁, x₂)/(1 + x₀).
    pub fn from_hyperboloid(p: &Point) -> Point {
        let s = 1.0 + p.coords[0];
        Point::new(vec![p.coords[1] / s, p.coords[2] / s])
    }

    /// Push a disk tangent vector forward through the differential of the
    /// embedding.
    pub fn tangent_to_hyperboloid(v: &TangentVector) -> TangentVector {
        let (x, y) = (v.base.coords[0], v.base.coords[1]);
        let d = 1.0 - x * x - y * y;
        let d2 = d * d;
        let (a, b) = (v.components[0], v.components[1]);
        let comps = vec![
            (4.0 * x * a + 4.0 * y * b) / d2,
            ((2.0 * d + 4.0 * x * x) * a + 4.0 * x * y * b) / d2,
            (4.0 * x * y * a + (2.0 * d + 4.0 * y * y) * b) / d2,
        ];
        TangentVector::new(to_hyperboloid(&v.base), comps)
    }
}
