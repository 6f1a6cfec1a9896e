//! Operators on functions of the unit sphere: the ascending ladder operator
//! `rho_z`, the MAP resolvent `R_z`, the factorisation `R_z = C rho_{d-alpha-z} rho_z`,
//! the excursion occupation functional and the Kelvin duality checks.
//!
//! Both operators are evaluated as radial x spherical quadratures centred on
//! the output direction `theta`, with the radius split at the unit sphere
//! where the kernels are singular.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::identities::{ladder_potential_density, resolvent_density, EntranceExitMode, LadderSide};
use crate::model::{kelvin_invert, kv, IdentityReport, Point, StableParams};
use crate::numerics::quadrature::{try_integrate, QuadValue, QuadratureSpec};
use crate::numerics::special::{ln_gamma, ln_gamma_pos};
use crate::numerics::sphere::{integrate_sphere, sphere_area, sphere_average_angle};

type Evaluator = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Constant(f64),
    /// `phi -> <a, phi>`, a degree-one spherical harmonic.
    Linear(Point),
    General(Evaluator),
}

/// A bounded function on the unit sphere `S_{d-1}`.
///
/// Constants and linear functions are tagged so that operators can exploit
/// rotation equivariance; the operators themselves still integrate the
/// linear case over the full sphere.
#[derive(Clone)]
pub struct SphereFunction {
    label: String,
    shape: Shape,
}

impl fmt::Debug for SphereFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereFunction").field("label", &self.label).finish()
    }
}

impl SphereFunction {
    pub fn constant(c: f64) -> Self {
        Self { label: format!("{c}"), shape: Shape::Constant(c) }
    }

    /// `phi -> <a, phi>`.
    pub fn linear(a: Point) -> Self {
        Self { label: format!("<{a}, phi>"), shape: Shape::Linear(a) }
    }

    /// The coordinate function `phi -> phi_k` in dimension `d`.
    pub fn coordinate(d: usize, k: usize) -> Self {
        let mut a = vec![0.0; d];
        a[k] = 1.0;
        Self { label: format!("phi_{}", k + 1), shape: Shape::Linear(Point::new(a)) }
    }

    pub fn general(label: impl Into<String>, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), shape: Shape::General(Arc::new(f)) }
    }

    /// `a f + b g`, evaluated pointwise.
    pub fn combine(a: f64, f: &SphereFunction, b: f64, g: &SphereFunction) -> Self {
        let (f2, g2) = (f.clone(), g.clone());
        Self::general(format!("{a}*({}) + {b}*({})", f.label, g.label), move |p| a * f2.eval(p) + b * g2.eval(p))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, phi: &Point) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Linear(a) => a.dot(phi),
            Shape::General(f) => f(phi),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, Shape::Constant(_))
    }

    /// Upper bound on `|f|` used to scale absolute tolerances; exact for
    /// constants and linear functions, a sampled estimate otherwise.
    fn scale(&self, d: usize) -> f64 {
        match &self.shape {
            Shape::Constant(c) => c.abs(),
            Shape::Linear(a) => a.norm(),
            Shape::General(f) => {
                let mut m: f64 = 0.0;
                for k in 0..d {
                    for sign in [1.0, -1.0] {
                        let mut c = vec![0.0; d];
                        c[k] = sign;
                        m = m.max(f(&Point::new(c)).abs());
                    }
                }
                m.max(f64::MIN_POSITIVE)
            }
        }
    }
}

/// `C_{alpha,d} = 2^{-alpha} Gamma((d-alpha)/2)^2 / Gamma(d/2)^2`.
pub fn factorization_constant(p: &StableParams) -> Result<f64> {
    p.validate()?;
    let (d, a) = (p.df(), p.alpha());
    Ok((-a * 2f64.ln() + 2.0 * ln_gamma_pos((d - a) / 2.0)? - 2.0 * ln_gamma_pos(d / 2.0)?).exp())
}

/// `rho_z[1] = Gamma(d/2) Gamma(z/2) / (Gamma((d-alpha)/2) Gamma((z+alpha)/2))`.
pub fn rho_of_one(p: &StableParams, z: Complex64) -> Result<Complex64> {
    p.validate()?;
    let (d, a) = (p.df(), p.alpha());
    let ln = ln_gamma_pos(d / 2.0)? + ln_gamma(z / 2.0)? - ln_gamma_pos((d - a) / 2.0)? - ln_gamma((z + a) / 2.0)?;
    Ok(ln.exp())
}

/// `R_z[1] = 2^{-alpha} Gamma(z/2) Gamma((d-alpha-z)/2) / (Gamma((alpha+z)/2) Gamma((d-z)/2))`.
pub fn resolvent_of_one(p: &StableParams, z: Complex64) -> Result<Complex64> {
    p.validate()?;
    let (d, a) = (p.df(), p.alpha());
    let ln = -a * 2f64.ln() + ln_gamma(z / 2.0)? + ln_gamma((d - a - z) / 2.0)? - ln_gamma((a + z) / 2.0)? - ln_gamma((d - z) / 2.0)?;
    Ok(ln.exp())
}

/// Tolerances used by [`rho_op`] and [`resolvent_op`].
pub fn default_operator_spec() -> QuadratureSpec {
    QuadratureSpec::relative(1e-10)
}

fn check_theta(p: &StableParams, theta: &Point) -> Result<()> {
    p.validate()?;
    p.check_point("theta", theta)?;
    if (theta.norm() - 1.0).abs() > 1e-12 {
        return domain(format!("theta must lie on the unit sphere, got |theta| = {}", theta.norm()));
    }
    Ok(())
}

/// `avg_phi f(phi) k(t)` over the unit sphere, `t` the angle between `phi`
/// and `theta`. The angular kernel may peak at `t = 0`.
fn sphere_mean<K: Fn(f64) -> f64>(d: usize, theta: &Point, f: &SphereFunction, spec: &QuadratureSpec, k: K) -> Result<f64> {
    match &f.shape {
        Shape::Constant(c) => Ok(c * sphere_average_angle(|t| Ok(k(t)), d, spec)?),
        _ => integrate_sphere(theta, spec, |phi, t| Ok(f.eval(phi) * k(t))),
    }
}

/// `|y - theta|^2` for `|y| = rho = 1 +- s` at angle `t` from `theta`,
/// floored to stay positive after underflow.
fn gap_sq(rho: f64, s: f64, t: f64) -> f64 {
    let h = (0.5 * t).sin();
    (s * s + 4.0 * rho * h * h).max(f64::MIN_POSITIVE)
}

/// Radial integral `int w(rho) M(rho, |rho - 1|) d rho` over the pieces
/// `[lo, 1/2]`, `[1/2, 1]` (as `s = 1 - rho`) and `[1, inf)` (as `s = rho - 1`).
fn radial_pieces<T, W>(include_inner: bool, spec: &QuadratureSpec, mut w: W) -> Result<T>
where
    T: QuadValue,
    W: FnMut(f64, f64) -> Result<T>,
{
    let outer = spec.clone().with_hints([0.0]);
    let mut total = try_integrate(|s| w(1.0 + s, s), 0.0, f64::INFINITY, &outer)?.value;
    if include_inner {
        total = total + try_integrate(|s| w(1.0 - s, s), 0.0, 0.5, &outer)?.value;
        total = total + try_integrate(|rho| w(rho, 1.0 - rho), 0.0, 0.5, &outer)?.value;
    }
    Ok(total)
}

fn inner_spec(spec: &QuadratureSpec, abs: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: abs.max(1e-300),
        rel_tol: 0.1 * spec.rel_tol,
        max_depth: spec.max_depth,
        singularity_hints: vec![0.0],
        grading: spec.grading,
    }
}

/// `rho_z[f](theta)`: the ascending ladder operator, for `Re z > 0`.
pub fn rho_op(p: &StableParams, z: Complex64, f: &SphereFunction, theta: &Point) -> Result<Complex64> {
    rho_op_with(p, z, f, theta, &default_operator_spec())
}

pub fn rho_op_with(p: &StableParams, z: Complex64, f: &SphereFunction, theta: &Point, spec: &QuadratureSpec) -> Result<Complex64> {
    check_theta(p, theta)?;
    if !(z.re > 0.0) {
        return domain(format!("rho_z requires Re z > 0, got z = {z}"));
    }
    let (d, a) = (p.d(), p.alpha());
    let df = d as f64;
    let ln_n =
        -0.5 * df * std::f64::consts::PI.ln() + 2.0 * ln_gamma_pos(df / 2.0)? - ln_gamma_pos((df - a) / 2.0)? - ln_gamma_pos(a / 2.0)?;
    let scale = f.scale(d);
    // radial behaviour: s^{alpha/2 - 1} at rho = 1, rho^{-1-z} at infinity
    let mut outer = spec.clone().for_singular_power((0.5 * a).min(z.re));
    outer.abs_tol = outer.abs_tol.max(spec.rel_tol * scale * rho_of_one(p, Complex64::new(z.re, 0.0))?.norm());
    let total: Complex64 = radial_pieces(false, &outer, |rho, s| {
        if s <= 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        // the sphere mean of |theta - y|^{-d} is of order 1 / (rho^2 - 1)
        let kscale = scale / (s * (rho + 1.0)).max(1e-300);
        let m = sphere_mean(d, theta, f, &inner_spec(spec, 1e-3 * spec.rel_tol * kscale), |t| gap_sq(rho, s, t).powf(-0.5 * df))?;
        let radial = (df - 1.0 - a) * rho.ln() + 0.5 * a * (s * (rho + 1.0)).ln();
        Ok((Complex64::new(radial, 0.0) - z * rho.ln()).exp() * m)
    })?;
    Ok(total * (ln_n.exp() * sphere_area(d)?))
}

/// `R_z[f](theta) = int f(arg y) u(theta, y) |y|^{-(alpha+z)} dy` for
/// `0 < Re z < d - alpha`, with `u` the free potential density.
pub fn resolvent_op(p: &StableParams, z: Complex64, f: &SphereFunction, theta: &Point) -> Result<Complex64> {
    resolvent_op_with(p, z, f, theta, &default_operator_spec())
}

pub fn resolvent_op_with(p: &StableParams, z: Complex64, f: &SphereFunction, theta: &Point, spec: &QuadratureSpec) -> Result<Complex64> {
    check_theta(p, theta)?;
    let (d, a) = (p.d(), p.alpha());
    let df = d as f64;
    if !(z.re > 0.0 && z.re < df - a) {
        return domain(format!("R_z requires 0 < Re z < d - alpha = {}, got z = {z}", df - a));
    }
    let ln_u = ln_gamma_pos((df - a) / 2.0)? - a * 2f64.ln() - 0.5 * df * std::f64::consts::PI.ln() - ln_gamma_pos(a / 2.0)?;
    let scale = f.scale(d);
    // radial behaviour: s^{min(alpha, 1) - 1} at rho = 1, rho^{d-1-alpha-z} at 0, rho^{-1-z} at infinity
    let kappa = a.min(1.0).min(z.re).min(df - a - z.re);
    let mut outer = spec.clone().for_singular_power(kappa);
    outer.abs_tol = outer.abs_tol.max(spec.rel_tol * scale * resolvent_of_one(p, Complex64::new(z.re, 0.0))?.norm());
    let total: Complex64 = radial_pieces(true, &outer, |rho, s| {
        if s <= 0.0 || rho <= 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let kscale = scale * s.max(1e-300).powf((a - 1.0).min(0.0)).max(1.0);
        let m = sphere_mean(d, theta, f, &inner_spec(spec, 1e-3 * spec.rel_tol * kscale), |t| gap_sq(rho, s, t).powf(0.5 * (a - df)))?;
        let radial = (df - 1.0 - a) * rho.ln();
        Ok((Complex64::new(radial, 0.0) - z * rho.ln()).exp() * m)
    })?;
    Ok(total * (ln_u.exp() * sphere_area(d)?))
}

/// The alternative resolvent integrand `c |y - theta|^{-z-d}` with
/// `z = -i lambda`.
///
/// Documentation only: for `Re z != 0` its integral over `R^d` diverges
/// (at `y = theta` or at infinity) and on the imaginary axis it converges
/// only conditionally. Checks use [`resolvent_op`].
pub fn resolvent_integrand_as_printed(p: &StableParams, z: Complex64, theta: &Point, y: &Point) -> Result<Complex64> {
    check_theta(p, theta)?;
    p.check_point("y", y)?;
    let (df, a) = (p.df(), p.alpha());
    let r = y.dist(theta);
    if r == 0.0 {
        return Err(Error::Singularity("printed resolvent integrand at y = theta".into()));
    }
    let ln_u = ln_gamma_pos((df - a) / 2.0)? - a * 2f64.ln() - 0.5 * df * std::f64::consts::PI.ln() - ln_gamma_pos(a / 2.0)?;
    Ok((Complex64::new(ln_u - df * r.ln(), 0.0) - z * r.ln()).exp())
}

/// `rho_z[f]` as a sphere function, for real `z > 0`.
///
/// Constants map to constants and linear functions to multiples of
/// themselves (rotation equivariance); both need a single quadrature.
/// General functions are wrapped lazily and cost one full quadrature per
/// evaluation; a failed evaluation yields NaN.
pub fn rho_apply(p: &StableParams, z: f64, f: &SphereFunction) -> Result<SphereFunction> {
    let d = p.d();
    let zc = Complex64::new(z, 0.0);
    let label = format!("rho_{z}[{}]", f.label);
    match &f.shape {
        Shape::Constant(_) => {
            let v = rho_op(p, zc, f, &Point::on_axis(d, 1.0))?.re;
            Ok(SphereFunction { label, shape: Shape::Constant(v) })
        }
        Shape::Linear(a) => {
            let n = a.norm();
            if n == 0.0 {
                return Ok(SphereFunction { label, shape: Shape::Linear(a.clone()) });
            }
            let u = a.unit()?;
            let probe = SphereFunction {
                label: String::new(),
                shape: Shape::General(Arc::new({
                    let u = u.clone();
                    move |phi: &Point| u.dot(phi)
                })),
            };
            let lambda = rho_op(p, zc, &probe, &u)?.re;
            Ok(SphereFunction { label, shape: Shape::Linear(a.scaled(lambda)) })
        }
        Shape::General(_) => {
            let (p2, f2) = (*p, f.clone());
            Ok(SphereFunction::general(label, move |theta| rho_op(&p2, zc, &f2, theta).map(|v| v.re).unwrap_or(f64::NAN)))
        }
    }
}

/// Fixed evaluation directions for the factorisation check: unit vectors
/// in the first coordinate plane with positive first coordinate.
pub fn factorization_directions(d: usize) -> Vec<Point> {
    [0.0, 0.6, -1.1]
        .iter()
        .map(|phi: &f64| {
            let mut c = vec![0.0; d];
            c[0] = phi.cos();
            c[1] = phi.sin();
            Point::new(c)
        })
        .collect()
}

fn parallel_mean<F>(thetas: &[Point], f: F) -> Result<f64>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    let values: Vec<Result<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = thetas.iter().map(|t| s.spawn(|| f(t))).collect();
        handles.into_iter().map(|h| h.join().expect("quadrature worker panicked")).collect()
    });
    let mut sum = 0.0;
    for v in values {
        sum += v?;
    }
    Ok(sum / thetas.len() as f64)
}

/// Compares `R_z[f]` with `C_{alpha,d} rho_{d-alpha-z}[rho_z[f]]`, both
/// averaged over [`factorization_directions`].
pub fn factorization_residual(p: &StableParams, z: f64, f: &SphereFunction, tol: f64) -> Result<IdentityReport> {
    p.validate()?;
    let (d, a) = (p.d(), p.alpha());
    if !(z > 0.0 && z < p.df() - a) {
        return domain(format!("factorisation check requires 0 < z < d - alpha = {}, got z = {z}", p.df() - a));
    }
    let thetas = if f.is_constant() { vec![Point::on_axis(d, 1.0)] } else { factorization_directions(d) };
    let zc = Complex64::new(z, 0.0);
    let lhs = parallel_mean(&thetas, |t| Ok(resolvent_op(p, zc, f, t)?.re))?;
    let inner = rho_apply(p, z, f)?;
    // z = -i lambda turns the outer index i lambda + d - alpha into d - alpha - z
    let outer_z = Complex64::new(p.df() - a - z, 0.0);
    let c = factorization_constant(p)?;
    let rhs = c * parallel_mean(&thetas, |t| Ok(rho_op(p, outer_z, &inner, t)?.re))?;
    Ok(IdentityReport::new("factorization", vec![kv("d", d), kv("alpha", a), kv("z", z), kv("f", f.label())], lhs, rhs, tol))
}

/// `C_{alpha,d} int g(z) U^+_theta(dz)`: the excursion occupation functional
/// for `g` supported in the shell `support.0 <= |z| <= support.1`, with
/// `support.0 > 1` (`support.1` may be infinite).
pub fn excursion_occupation_value<G>(p: &StableParams, g: G, support: (f64, f64), theta: &Point) -> Result<f64>
where
    G: Fn(&Point) -> f64,
{
    check_theta(p, theta)?;
    let (lo, hi) = support;
    if !(lo > 1.0 && hi >= lo) {
        return domain(format!("occupation functional needs support in 1 < r_lo <= r_hi, got [{lo}, {hi}]"));
    }
    let d = p.d();
    let spec = QuadratureSpec::relative(1e-10);
    let ang = QuadratureSpec::relative(1e-11);
    let radial = try_integrate(
        |rho| {
            let m: f64 = integrate_sphere(theta, &ang, |phi, _| {
                let z = phi.scaled(rho);
                let v = g(&z);
                if v == 0.0 {
                    return Ok(0.0);
                }
                Ok(v * ladder_potential_density(p, LadderSide::Plus, theta, &z)?)
            })?;
            Ok(m * rho.powi(d as i32 - 1))
        },
        lo,
        hi,
        &spec,
    )?;
    Ok(factorization_constant(p)? * sphere_area(d)? * radial.value)
}

/// Checks the ladder-potential and resolvent dualities under Kelvin
/// inversion at `0 < |x| < |z|` and returns the worse of the two reports.
///
/// The resolvent duality is taken at radius `r = |x|/2` outside the ball and
/// `1/r` inside: `h_plus_r(x, z) = (|x||z|)^{alpha-d} h_minus_{1/r}(Kx, Kz)`.
pub fn kelvin_duality_check(p: &StableParams, x: &Point, z: &Point, tol: f64) -> Result<IdentityReport> {
    p.validate()?;
    p.check_point("x", x)?;
    p.check_point("z", z)?;
    let (xn, zn) = (x.norm(), z.norm());
    if !(xn > 0.0 && xn < zn) {
        return domain(format!("Kelvin duality check requires 0 < |x| < |z|, got |x| = {xn}, |z| = {zn}"));
    }
    let (df, a) = (p.df(), p.alpha());
    let (kx, kz) = (kelvin_invert(x)?, kelvin_invert(z)?);
    let params = vec![kv("d", p.d()), kv("alpha", a), kv("x", x), kv("z", z)];

    let lhs = ladder_potential_density(p, LadderSide::Plus, x, z)?;
    let rhs = ladder_potential_density(p, LadderSide::Minus, &kx, &kz)? * (xn / zn).powf(a - df) * zn.powf(-2.0 * df);
    let potential = IdentityReport::new("kelvin-duality/potential", params.clone(), lhs, rhs, tol);

    let r = 0.5 * xn;
    let lhs = resolvent_density(p, r, EntranceExitMode::Entrance, x, z)?;
    let rhs = resolvent_density(p, 1.0 / r, EntranceExitMode::Exit, &kx, &kz)? * (xn / zn).powf(a - df) * zn.powf(2.0 * a - 2.0 * df);
    let mut rparams = params;
    rparams.push(kv("r", r));
    let resolvent = IdentityReport::new("kelvin-duality/resolvent", rparams, lhs, rhs, tol);

    Ok(if resolvent.rel_err > potential.rel_err || !resolvent.pass { resolvent } else { potential })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::gamma;

    fn params(d: usize, a: f64) -> StableParams {
        StableParams::new(d, a).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn closed_forms() {
        let p = params(2, 1.0);
        assert!(rel(rho_of_one(&p, c(1.0)).unwrap().re, 1.0) < 1e-13);
        assert!(rel(rho_of_one(&p, c(2.0)).unwrap().re, 2.0 / std::f64::consts::PI) < 1e-13);
        let expect = gamma(0.25).unwrap().powi(2) / (2.0 * gamma(0.75).unwrap().powi(2));
        assert!(rel(resolvent_of_one(&p, c(0.5)).unwrap().re, expect) < 1e-13);
        assert!(rel(factorization_constant(&p).unwrap(), std::f64::consts::PI / 2.0) < 1e-13);
    }

    #[test]
    fn rho_of_constant_matches_closed_form() {
        for (d, a) in [(2, 1.0), (3, 1.2), (2, 0.6)] {
            let p = params(d, a);
            for z in [0.5, 1.0, 2.0] {
                let v = rho_op(&p, c(z), &SphereFunction::constant(1.0), &Point::on_axis(d, 1.0)).unwrap();
                let e = rho_of_one(&p, c(z)).unwrap();
                assert!((v - e).norm() / e.norm() < 1e-8, "d={d} a={a} z={z}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn resolvent_of_constant_matches_closed_form() {
        let p = params(2, 1.0);
        let t = Point::new(vec![0.6, 0.8]);
        let v = resolvent_op(&p, c(0.5), &SphereFunction::constant(1.0), &t).unwrap();
        let e = resolvent_of_one(&p, c(0.5)).unwrap();
        assert!((v - e).norm() / e.norm() < 1e-8, "{v} vs {e}");
        assert!((v.re - 4.3769).abs() < 1e-3);
        assert!(resolvent_op(&p, c(1.0), &SphereFunction::constant(1.0), &t).is_err());
    }

    #[test]
    fn complex_index() {
        let p = params(3, 1.2);
        let z = Complex64::new(0.9, 0.7);
        let v = resolvent_op(&p, z, &SphereFunction::constant(1.0), &Point::on_axis(3, 1.0)).unwrap();
        let e = resolvent_of_one(&p, z).unwrap();
        assert!((v - e).norm() / e.norm() < 1e-7, "{v} vs {e}");
    }

    #[test]
    fn rho_linearity() {
        let p = params(2, 1.0);
        let f = SphereFunction::constant(1.0);
        let g = SphereFunction::general("phi_1^2", |x: &Point| x[0] * x[0]);
        let h = SphereFunction::combine(2.0, &f, -1.0, &g);
        let t = Point::new(vec![0.8, 0.6]);
        let lhs = rho_op(&p, c(1.0), &h, &t).unwrap().re;
        let rhs = 2.0 * rho_op(&p, c(1.0), &f, &t).unwrap().re - rho_op(&p, c(1.0), &g, &t).unwrap().re;
        assert!(rel(lhs, rhs) < 1e-8);
    }

    #[test]
    fn factorization_constant_function() {
        let p = params(2, 1.0);
        let r = factorization_residual(&p, 0.5, &SphereFunction::constant(1.0), 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.lhs - 4.3769).abs() < 1e-3);
    }

    #[test]
    fn kelvin_examples() {
        let p = params(2, 1.0);
        let r = kelvin_duality_check(&p, &Point::new(vec![1.0, 0.0]), &Point::new(vec![0.0, 2.0]), 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
        let p = params(3, 1.5);
        let r = kelvin_duality_check(&p, &Point::new(vec![0.5, 0.0, 0.0]), &Point::new(vec![0.0, 0.0, 4.0]), 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(kelvin_duality_check(&p, &Point::on_axis(3, 1.0), &Point::on_axis(3, -1.0), 1e-12).is_err());
    }

    #[test]
    fn occupation_examples() {
        let p = params(2, 1.0);
        let t = Point::on_axis(2, 1.0);
        assert_eq!(excursion_occupation_value(&p, |_| 0.0, (1.5, 2.0), &t).unwrap(), 0.0);
        assert!(excursion_occupation_value(&p, |_| 1.0, (1.0, 2.0), &t).is_err());
        let v = excursion_occupation_value(&p, |_| 1.0, (1.5, 2.0), &t).unwrap();
        assert!(v > 0.0);
    }

    #[test]
    fn as_printed_integrand_is_pointwise_finite() {
        let p = params(2, 1.0);
        let t = Point::on_axis(2, 1.0);
        let v = resolvent_integrand_as_printed(&p, Complex64::new(0.0, -1.0), &t, &Point::new(vec![0.0, 1.0])).unwrap();
        assert!(v.norm().is_finite());
        assert!(resolvent_integrand_as_printed(&p, c(0.5), &t, &t).is_err());
    }
}
