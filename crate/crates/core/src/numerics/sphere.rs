//! Integration over the unit sphere `S_{d-1}` against the normalised surface
//! measure, and the reductions of ball and shell integrals built on it.
//!
//! Zonal integrands (functions of the angle to one axis only) reduce to a
//! single angular integral with weight `sin^{d-2} t`. General integrands use
//! hyperspherical coordinates centred on a chosen pole, recursing down to
//! `S_0 = {+1, -1}`.

use std::f64::consts::PI;

use super::quadrature::{try_integrate, QuadValue, QuadratureSpec};
use super::special::ln_gamma_pos;
use crate::error::{domain, Result};
use crate::model::Point;

/// `c_d = Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2))`, so that
/// `c_d int_0^pi sin^{d-2} t dt = 1`. For `d = 2` this is `1/pi`.
pub fn sphere_constant(d: usize) -> Result<f64> {
    if d < 2 {
        return domain(format!("sphere integrals need d >= 2, got {d}"));
    }
    let d = d as f64;
    Ok((ln_gamma_pos(d / 2.0)? - 0.5 * PI.ln() - ln_gamma_pos((d - 1.0) / 2.0)?).exp())
}

/// Surface area `2 pi^{d/2} / Gamma(d/2)` of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> Result<f64> {
    let df = d as f64;
    Ok(2.0 * (0.5 * df * PI.ln() - ln_gamma_pos(df / 2.0)?).exp())
}

/// `int g sigma_1(d phi)` for `g` depending only on the angle `t in [0, pi]`
/// between `phi` and a fixed axis.
pub fn sphere_average_angle<T, G>(mut g: G, d: usize, spec: &QuadratureSpec) -> Result<T>
where
    T: QuadValue,
    G: FnMut(f64) -> Result<T>,
{
    let c = sphere_constant(d)?;
    let m = d as i32 - 2;
    let est = try_integrate(
        |t| {
            let w = if m == 0 { 1.0 } else { t.sin().powi(m) };
            Ok(g(t)? * w)
        },
        0.0,
        PI,
        spec,
    )?;
    Ok(est.value * c)
}

/// `int g(<phi, e_1>) sigma_1(d phi)` for a function of the angle cosine.
pub fn sphere_average<G: FnMut(f64) -> f64>(mut g: G, d: usize) -> Result<f64> {
    sphere_average_angle(|t| Ok(g(t.cos())), d, &QuadratureSpec::relative(1e-12))
}

/// `|phi - w|^2` for `phi` at angle `t` from `w`, in the cancellation-free
/// form `(1 - |w|)^2 + 4 |w| sin^2(t/2)`.
pub fn unit_to_point_dist_sq(w_norm: f64, t: f64) -> f64 {
    let s = (0.5 * t).sin();
    (1.0 - w_norm) * (1.0 - w_norm) + 4.0 * w_norm * s * s
}

/// `|y - u|^2` for `|u| = 1` and `|y| = rho` at angle `t`:
/// `(rho - 1)^2 + 4 rho sin^2(t/2)`.
pub fn radial_dist_sq(rho: f64, t: f64) -> f64 {
    let s = (0.5 * t).sin();
    (rho - 1.0) * (rho - 1.0) + 4.0 * rho * s * s
}

/// Numerical `int |phi - w|^{-d} sigma_1(d phi)` over the unit sphere; the
/// classical Poisson formula predicts `(1 - |w|^2)^{-1}`.
pub fn poisson_kernel_average(w: &Point, d: usize) -> Result<f64> {
    if w.dim() != d {
        return domain(format!("point w has {} coordinates but d = {d}", w.dim()));
    }
    let r = w.norm();
    if !(r < 1.0) {
        return domain(format!("Poisson kernel average requires |w| < 1, got |w| = {r}"));
    }
    let half_d = d as f64 / 2.0;
    sphere_average_angle(|t| Ok(unit_to_point_dist_sq(r, t).powf(-half_d)), d, &QuadratureSpec::relative(1e-12))
}

/// `int_{r_lo < |y| < r_hi} g(|y|, t) dy` where `t` is the angle between `y`
/// and a fixed axis; `r_hi` may be infinite. Radial singularity locations
/// go in `spec.singularity_hints`; the angular integrals use `angular`.
pub fn shell_integral<G>(d: usize, r_lo: f64, r_hi: f64, spec: &QuadratureSpec, angular: &QuadratureSpec, mut g: G) -> Result<f64>
where
    G: FnMut(f64, f64) -> Result<f64>,
{
    if !(r_lo >= 0.0 && r_hi >= r_lo) {
        return domain(format!("shell [{r_lo}, {r_hi}] is invalid"));
    }
    let area = sphere_area(d)?;
    let m = d as i32 - 1;
    let est = try_integrate(
        |rho| {
            let avg = sphere_average_angle(|t| g(rho, t), d, angular)?;
            Ok(avg * rho.powi(m))
        },
        r_lo,
        r_hi,
        spec,
    )?;
    Ok(area * est.value)
}

/// Orthonormal basis of `R^d` whose first vector is `pole` (a unit vector).
pub fn basis_with_pole(pole: &Point) -> Vec<Point> {
    let d = pole.dim();
    let mut basis: Vec<Point> = vec![pole.clone()];
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = Point::on_axis(d, 0.0).into_coords();
        v[k] = 1.0;
        let mut v = Point::new(v);
        for b in &basis {
            let p = v.dot(b);
            v = &v - &(b * p);
        }
        for b in &basis {
            let p = v.dot(b);
            v = &v - &(b * p);
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v.scaled(1.0 / n));
        }
    }
    basis
}

fn sphere_rec<T: QuadValue>(basis: &[Point], spec: &QuadratureSpec, g: &mut dyn FnMut(&Point, f64) -> Result<T>, top: bool) -> Result<T> {
    if basis.len() == 1 {
        let a = g(&basis[0], 0.0)?;
        let b = g(&basis[0].scaled(-1.0), std::f64::consts::PI)?;
        return Ok((a + b) * 0.5);
    }
    let n = basis.len();
    let pole = &basis[0];
    let rest = &basis[1..];
    let inner_spec = spec.without_hints();
    sphere_average_angle(
        |t| {
            let (s, c) = t.sin_cos();
            sphere_rec(
                rest,
                &inner_spec,
                &mut |w: &Point, _| {
                    let phi = &(pole * c) + &(w * s);
                    g(&phi, if top { t } else { f64::NAN })
                },
                false,
            )
        },
        n,
        spec,
    )
}

/// `int g(phi) sigma_1(d phi)` over `S_{d-1}` for a general integrand.
///
/// Coordinates are centred on `pole`; the integrand also receives the angle
/// `t` between `phi` and the pole, so kernels singular at `phi = pole` can be
/// evaluated without cancellation. Cost grows geometrically with `d`.
pub fn integrate_sphere<T, G>(pole: &Point, spec: &QuadratureSpec, mut g: G) -> Result<T>
where
    T: QuadValue,
    G: FnMut(&Point, f64) -> Result<T>,
{
    let d = pole.dim();
    if d < 2 {
        return domain("sphere integrals need d >= 2");
    }
    let u = pole.unit()?;
    let basis = basis_with_pole(&u);
    sphere_rec(&basis, spec, &mut g, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn constants() {
        assert!(rel(sphere_constant(2).unwrap(), 1.0 / PI) < 1e-14);
        assert!(rel(sphere_constant(3).unwrap(), 0.5) < 1e-14);
        assert!(rel(sphere_area(2).unwrap(), 2.0 * PI) < 1e-14);
        assert!(rel(sphere_area(3).unwrap(), 4.0 * PI) < 1e-14);
        assert!(sphere_constant(1).is_err());
    }

    #[test]
    fn average_examples() {
        for d in [2, 3, 4, 7] {
            assert!((sphere_average(|_| 1.0, d).unwrap() - 1.0).abs() < 1e-13);
            assert!(sphere_average(|c| c, d).unwrap().abs() < 1e-13);
            // E[c^2] = 1/d
            assert!(rel(sphere_average(|c| c * c, d).unwrap(), 1.0 / d as f64) < 1e-12);
        }
        // |phi - w|^{-d} with w = e_1 / 2, d = 2
        let v = sphere_average(|c| (1.25 - c).powf(-1.0), 2).unwrap();
        assert!(rel(v, 4.0 / 3.0) < 1e-12);
    }

    #[test]
    fn poisson_examples() {
        assert!(rel(poisson_kernel_average(&Point::zeros(2), 2).unwrap(), 1.0) < 1e-13);
        let w = Point::new(vec![0.3, 0.4]);
        assert!(rel(poisson_kernel_average(&w, 2).unwrap(), 4.0 / 3.0) < 1e-10);
        let w = Point::new(vec![0.0, 0.9, 0.0]);
        assert!(rel(poisson_kernel_average(&w, 3).unwrap(), 1.0 / 0.19) < 1e-10);
        assert!(poisson_kernel_average(&Point::on_axis(3, 1.0), 3).is_err());
        assert!(poisson_kernel_average(&Point::on_axis(3, 0.5), 2).is_err());
    }

    #[test]
    fn shell_volume() {
        // volume of the 3-ball is 4 pi / 3
        let s = QuadratureSpec::relative(1e-12);
        let v = shell_integral(3, 0.0, 1.0, &s, &s, |_, _| Ok(1.0)).unwrap();
        assert!(rel(v, 4.0 * PI / 3.0) < 1e-12);
        // int_{R^2} e^{-|y|^2} dy = pi
        let g = shell_integral(2, 0.0, f64::INFINITY, &s, &s, |r, _| Ok((-r * r).exp())).unwrap();
        assert!(rel(g, PI) < 1e-10);
    }

    #[test]
    fn basis_is_orthonormal() {
        let pole = Point::new(vec![0.2, -0.5, 0.3, 0.7]).unit().unwrap();
        let b = basis_with_pole(&pole);
        assert_eq!(b.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((b[i].dot(&b[j]) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn general_sphere_integrals() {
        let s = QuadratureSpec::relative(1e-10);
        for d in [2usize, 3, 4] {
            let pole = Point::new((0..d).map(|k| 1.0 + k as f64).collect()).unit().unwrap();
            let one: f64 = integrate_sphere(&pole, &s, |_, _| Ok(1.0)).unwrap();
            assert!((one - 1.0).abs() < 1e-10, "d = {d}");
            // second moment of a coordinate not aligned with the pole
            let m2: f64 = integrate_sphere(&pole, &s, |p, _| Ok(p[0] * p[0])).unwrap();
            assert!(rel(m2, 1.0 / d as f64) < 1e-9, "d = {d}: {m2}");
            // the reported angle is the angle to the pole
            let loose = QuadratureSpec { abs_tol: 1e-13, ..s.clone() };
            let dev: f64 = integrate_sphere(&pole, &loose, |p, t| Ok((p.dot(&pole) - t.cos()).abs())).unwrap();
            assert!(dev < 1e-12);
        }
    }
}
