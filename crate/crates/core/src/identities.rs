//! Closed-form evaluators for the densities, measures and exponents attached
//! to an isotropic stable process.
//!
//! Every evaluator is a pure function of the parameters and the geometry.
//! Off-support arguments are rejected with [`Error::Domain`] instead of being
//! mapped to zero. Gamma-function constants are assembled in log space and
//! exponentiated once.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::model::{Point, StableParams};
use crate::numerics::special::{j_integral, ln_beta, ln_gamma, ln_gamma_abs, ln_gamma_pos, reg_inc_beta, reg_inc_beta_pair};
use crate::numerics::sphere::poisson_kernel_average;

/// Whether a ball is entered from outside (`tau_plus`) or left from inside (`tau_minus`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntranceExitMode {
    Entrance,
    Exit,
}

impl FromStr for EntranceExitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entrance" => Ok(Self::Entrance),
            "exit" => Ok(Self::Exit),
            other => domain(format!("mode must be 'entrance' or 'exit', got '{other}'")),
        }
    }
}

impl fmt::Display for EntranceExitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Entrance => "entrance",
            Self::Exit => "exit",
        })
    }
}

/// Descending (`|z| < |x|`) or ascending (`|z| > |x|`) ladder potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LadderSide {
    Minus,
    Plus,
}

impl FromStr for LadderSide {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minus" => Ok(Self::Minus),
            "plus" => Ok(Self::Plus),
            other => domain(format!("side must be 'minus' or 'plus', got '{other}'")),
        }
    }
}

impl fmt::Display for LadderSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Minus => "minus",
            Self::Plus => "plus",
        })
    }
}

fn ln_pi() -> f64 {
    PI.ln()
}

/// `|a^2 - b^2|` as `|a - b| (a + b)` for nonnegative `a`, `b`.
fn abs_sq_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() * (a + b)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("radius must be positive and finite, got r = {r}"));
    }
    Ok(())
}

fn check_points(p: &StableParams, pts: &[(&str, &Point)]) -> Result<()> {
    p.validate()?;
    for (name, pt) in pts {
        p.check_point(name, pt)?;
        if pt.coords().iter().any(|c| !c.is_finite()) {
            return domain(format!("point {name} has non-finite coordinates"));
        }
    }
    Ok(())
}

fn distinct(a: &Point, b: &Point, what: &str) -> Result<f64> {
    let dist = a.dist(b);
    if dist == 0.0 {
        return Err(Error::Singularity(format!("{what} is singular on the diagonal")));
    }
    Ok(dist)
}

/// `ln` of `2^alpha Gamma((d+alpha)/2) / (pi^{d/2} |Gamma(-alpha/2)|)`.
fn ln_jump_const(p: &StableParams) -> Result<f64> {
    let (d, a) = (p.df(), p.alpha());
    Ok(a * 2f64.ln() + ln_gamma_pos((d + a) / 2.0)? - 0.5 * d * ln_pi() - ln_gamma_abs(-a / 2.0)?)
}

/// `ln` of `pi^{-d/2} Gamma(d/2)^2 / (Gamma((d-alpha)/2) Gamma(alpha/2))`.
fn ln_potential_const(p: &StableParams) -> Result<f64> {
    let (d, a) = (p.df(), p.alpha());
    Ok(-0.5 * d * ln_pi() + 2.0 * ln_gamma_pos(d / 2.0)? - ln_gamma_pos((d - a) / 2.0)? - ln_gamma_pos(a / 2.0)?)
}

/// `ln` of `2^{-alpha} pi^{-d/2} Gamma(d/2) / Gamma(alpha/2)^2`.
fn ln_resolvent_const(p: &StableParams) -> Result<f64> {
    let (d, a) = (p.df(), p.alpha());
    Ok(-a * 2f64.ln() - 0.5 * d * ln_pi() + ln_gamma_pos(d / 2.0)? - 2.0 * ln_gamma_pos(a / 2.0)?)
}

/// `D_{alpha,d} = Gamma(d/2) / (Gamma((d-alpha)/2) Gamma(alpha/2))`.
pub fn survival_constant(p: &StableParams) -> Result<f64> {
    p.validate()?;
    let (d, a) = (p.df(), p.alpha());
    Ok((ln_gamma_pos(d / 2.0)? - ln_gamma_pos((d - a) / 2.0)? - ln_gamma_pos(a / 2.0)?).exp())
}

/// Density of the Lévy measure, `const * |w|^{-(alpha+d)}`.
pub fn jump_density(p: &StableParams, w: &Point) -> Result<f64> {
    check_points(p, &[("w", w)])?;
    let n = w.norm();
    if n == 0.0 {
        return domain("jump density requires w != 0");
    }
    Ok((ln_jump_const(p)? - (p.alpha() + p.df()) * n.ln()).exp())
}

/// Characteristic exponent of the ordinate of the Lamperti–Kiu MAP,
/// a ratio of four complex gamma functions.
pub fn levy_exponent(p: &StableParams, theta: f64) -> Result<Complex64> {
    p.validate()?;
    if !theta.is_finite() {
        return domain("levy exponent requires a finite argument");
    }
    if theta == 0.0 {
        // Gamma(-i theta / 2) has a pole at 0, so the first factor vanishes
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (d, a) = (p.df(), p.alpha());
    let it = Complex64::new(0.0, theta);
    let ln = ln_gamma((-it + a) / 2.0)? - ln_gamma(-it / 2.0)? + ln_gamma((it + d) / 2.0)? - ln_gamma((it + d - a) / 2.0)?;
    Ok(ln.exp())
}

fn potential_kernel(p: &StableParams, x: &Point, z: &Point) -> Result<f64> {
    let (xn, zn) = (x.norm(), z.norm());
    let a = p.alpha();
    let ln = ln_potential_const(p)? + 0.5 * a * abs_sq_diff(zn, xn).ln() - a * zn.ln() - p.df() * z.dist(x).ln();
    Ok(ln.exp())
}

/// Density at `y` of the point of closest reach to the origin, started at `x`.
pub fn closest_reach_density(p: &StableParams, x: &Point, y: &Point) -> Result<f64> {
    check_points(p, &[("x", x), ("y", y)])?;
    let (xn, yn) = (x.norm(), y.norm());
    if !(yn > 0.0 && yn < xn) {
        return domain(format!("closest reach density requires 0 < |y| < |x|, got |y| = {yn}, |x| = {xn}"));
    }
    potential_kernel(p, x, y)
}

/// `P(|X_G| <= rho)` for `|x| = 1`: `|X_G|^2 ~ Beta((d-alpha)/2, alpha/2)`.
pub fn closest_reach_radial_cdf(p: &StableParams, rho: f64) -> Result<f64> {
    p.validate()?;
    if !(rho > 0.0 && rho <= 1.0) {
        return domain(format!("closest reach radial cdf requires 0 < rho <= 1, got {rho}"));
    }
    let (d, a) = (p.df(), p.alpha());
    reg_inc_beta_pair(rho * rho, (1.0 - rho) * (1.0 + rho), (d - a) / 2.0, a / 2.0)
}

/// Density of `|X_G|` at `rho` for `|x| = 1`, i.e. `2 rho` times the
/// `Beta((d-alpha)/2, alpha/2)` density at `rho^2`.
pub fn closest_reach_radial_density(p: &StableParams, rho: f64) -> Result<f64> {
    p.validate()?;
    if !(rho > 0.0 && rho < 1.0) {
        return domain(format!("closest reach radial density requires 0 < rho < 1, got {rho}"));
    }
    let (d, a) = (p.df(), p.alpha());
    let (ba, bb) = ((d - a) / 2.0, a / 2.0);
    let ln = 2f64.ln() + rho.ln() + (ba - 1.0) * (rho * rho).ln() + (bb - 1.0) * ((1.0 - rho) * (1.0 + rho)).ln() - ln_beta(ba, bb)?;
    Ok(ln.exp())
}

/// Density of the position at first entrance into (or exit from) the ball of
/// radius `r`.
pub fn first_passage_density(p: &StableParams, x: &Point, r: f64, mode: EntranceExitMode, y: &Point) -> Result<f64> {
    check_points(p, &[("x", x), ("y", y)])?;
    check_radius(r)?;
    let (xn, yn) = (x.norm(), y.norm());
    match mode {
        EntranceExitMode::Entrance if !(xn > r && yn < r) => {
            return domain(format!("entrance density requires |x| > r > |y|, got |x| = {xn}, r = {r}, |y| = {yn}"));
        }
        EntranceExitMode::Exit if !(xn < r && yn > r) => {
            return domain(format!("exit density requires |x| < r < |y|, got |x| = {xn}, r = {r}, |y| = {yn}"));
        }
        _ => {}
    }
    let (d, a) = (p.df(), p.alpha());
    let ln_c = -(d / 2.0 + 1.0) * ln_pi() + ln_gamma_pos(d / 2.0)? + (PI * a / 2.0).sin().ln();
    let ln = ln_c + 0.5 * a * (abs_sq_diff(r, xn).ln() - abs_sq_diff(r, yn).ln()) - d * x.dist(y).ln();
    Ok(ln.exp())
}

/// `P_x(tau_plus_r = inf)`, the probability that the ball of radius `r` is
/// never entered.
pub fn survival_probability(p: &StableParams, x: &Point, r: f64) -> Result<f64> {
    check_points(p, &[("x", x)])?;
    check_radius(r)?;
    let xn = x.norm();
    if !(xn > r) {
        return domain(format!("survival probability: require |x| > r, got |x| = {xn}, r = {r}"));
    }
    let (d, a) = (p.df(), p.alpha());
    let q = r / xn;
    // I_{1 - q^2}(alpha/2, (d-alpha)/2), with 1 - q^2 formed without cancellation
    reg_inc_beta_pair((1.0 - q) * (1.0 + q), q * q, a / 2.0, (d - a) / 2.0)
}

/// The same probability through `D_{alpha,d} J(|x|^2/r^2 - 1)`.
pub fn survival_probability_via_j(p: &StableParams, x: &Point, r: f64) -> Result<f64> {
    check_points(p, &[("x", x)])?;
    check_radius(r)?;
    let xn = x.norm();
    if !(xn > r) {
        return domain(format!("survival probability: require |x| > r, got |x| = {xn}, r = {r}"));
    }
    let zeta = (xn - r) * (xn + r) / (r * r);
    Ok(survival_constant(p)? * j_integral(zeta, p)?)
}

/// `zeta_r(x, y) = (|x|^2 - r^2)(|y|^2 - r^2) / (r^2 |x - y|^2)` up to sign,
/// in factored form.
pub fn zeta(r: f64, x: &Point, y: &Point) -> f64 {
    let (xn, yn) = (x.norm(), y.norm());
    let s = x.dist(y);
    (abs_sq_diff(xn, r) / (r * s)) * (abs_sq_diff(yn, r) / (r * s))
}

/// Occupation density (Green function) of the process killed on entering
/// (`Entrance`, both points outside) or leaving (`Exit`, both inside) the ball.
pub fn resolvent_density(p: &StableParams, r: f64, mode: EntranceExitMode, x: &Point, y: &Point) -> Result<f64> {
    check_points(p, &[("x", x), ("y", y)])?;
    check_radius(r)?;
    let (xn, yn) = (x.norm(), y.norm());
    match mode {
        EntranceExitMode::Entrance if !(xn > r && yn > r) => {
            return domain(format!("entrance resolvent requires |x|, |y| > r, got |x| = {xn}, |y| = {yn}, r = {r}"));
        }
        EntranceExitMode::Exit if !(xn < r && yn < r) => {
            return domain(format!("exit resolvent requires |x|, |y| < r, got |x| = {xn}, |y| = {yn}, r = {r}"));
        }
        _ => {}
    }
    let s = distinct(x, y, "resolvent density")?;
    let ln = ln_resolvent_const(p)? + (p.alpha() - p.df()) * s.ln();
    Ok(ln.exp() * j_integral(zeta(r, x, y), p)?)
}

/// Expected time to leave the ball of radius `r` from `|x| < r`.
pub fn expected_exit_time(p: &StableParams, x: &Point, r: f64) -> Result<f64> {
    check_points(p, &[("x", x)])?;
    check_radius(r)?;
    let xn = x.norm();
    if !(xn < r) {
        return domain(format!("expected exit time requires |x| < r, got |x| = {xn}, r = {r}"));
    }
    let (d, a) = (p.df(), p.alpha());
    let ln = ln_gamma_pos(d / 2.0)? + 0.5 * a * abs_sq_diff(r, xn).ln()
        - a * 2f64.ln()
        - ln_gamma_pos(1.0 + a / 2.0)?
        - ln_gamma_pos((d + a) / 2.0)?;
    Ok(ln.exp())
}

fn check_triple_order(mode: EntranceExitMode, r: f64, xn: f64, zn: f64, yn: Option<f64>, vn: f64) -> Result<()> {
    let ok = match mode {
        EntranceExitMode::Entrance => xn > zn && zn > r && yn.is_none_or(|y| y > zn) && vn < r,
        EntranceExitMode::Exit => xn < zn && zn < r && yn.is_none_or(|y| y < zn) && vn > r,
    };
    if ok {
        return Ok(());
    }
    let need = match (mode, yn.is_some()) {
        (EntranceExitMode::Entrance, true) => "|x| > |z| > r, |y| > |z|, |v| < r",
        (EntranceExitMode::Entrance, false) => "|x| > |z| > r, |v| < r",
        (EntranceExitMode::Exit, true) => "|x| < |z| < r, |y| < |z|, |v| > r",
        (EntranceExitMode::Exit, false) => "|x| < |z| < r, |v| > r",
    };
    domain(format!("{mode} law requires {need}"))
}

/// Joint density of the closest (or furthest) radial point before passage,
/// the pre-passage position and the post-passage position.
#[allow(clippy::too_many_arguments)]
pub fn triple_density(p: &StableParams, r: f64, mode: EntranceExitMode, x: &Point, z: &Point, y: &Point, v: &Point) -> Result<f64> {
    check_points(p, &[("x", x), ("z", z), ("y", y), ("v", v)])?;
    check_radius(r)?;
    let (xn, zn, yn, vn) = (x.norm(), z.norm(), y.norm(), v.norm());
    check_triple_order(mode, r, xn, zn, Some(yn), vn)?;
    let (d, a) = (p.df(), p.alpha());
    let ln_c = -1.5 * d * ln_pi() + ln_gamma_pos((d + a) / 2.0)? - ln_gamma_abs(-a / 2.0)? + 2.0 * ln_gamma_pos(d / 2.0)?
        - 2.0 * ln_gamma_pos(a / 2.0)?;
    let ln = ln_c + 0.5 * a * (abs_sq_diff(zn, xn).ln() + abs_sq_diff(yn, zn).ln())
        - a * zn.ln()
        - d * (z.dist(x).ln() + z.dist(y).ln())
        - (a + d) * v.dist(y).ln();
    Ok(ln.exp())
}

/// Triple law marginalised over the pre-passage position.
pub fn pair_reach_density(p: &StableParams, r: f64, mode: EntranceExitMode, x: &Point, z: &Point, v: &Point) -> Result<f64> {
    check_points(p, &[("x", x), ("z", z), ("v", v)])?;
    check_radius(r)?;
    let (xn, zn, vn) = (x.norm(), z.norm(), v.norm());
    check_triple_order(mode, r, xn, zn, None, vn)?;
    let (d, a) = (p.df(), p.alpha());
    let ln_c = 2.0 * ln_gamma_pos(d / 2.0)? - d * ln_pi() - ln_gamma_abs(-a / 2.0)? - ln_gamma_pos(a / 2.0)?;
    let ln = ln_c + 0.5 * a * (abs_sq_diff(zn, xn).ln() - abs_sq_diff(zn, vn).ln()) - d * (z.dist(v).ln() + z.dist(x).ln());
    Ok(ln.exp())
}

/// Triple law marginalised over the radial extremum: joint density of the
/// pre-passage and post-passage positions.
pub fn pair_jump_density(p: &StableParams, r: f64, mode: EntranceExitMode, x: &Point, y: &Point, v: &Point) -> Result<f64> {
    check_points(p, &[("x", x), ("y", y), ("v", v)])?;
    check_radius(r)?;
    let (xn, yn, vn) = (x.norm(), y.norm(), v.norm());
    let ok = match mode {
        EntranceExitMode::Entrance => xn > r && yn > r && vn < r,
        EntranceExitMode::Exit => xn < r && yn < r && vn > r,
    };
    if !ok {
        let need = match mode {
            EntranceExitMode::Entrance => "|x|, |y| > r > |v|",
            EntranceExitMode::Exit => "|x|, |y| < r < |v|",
        };
        return domain(format!("{mode} law requires {need}"));
    }
    let s = distinct(x, y, "pair jump density")?;
    let (d, a) = (p.df(), p.alpha());
    let ln_c = ln_gamma_pos((d + a) / 2.0)? + ln_gamma_pos(d / 2.0)? - d * ln_pi() - ln_gamma_abs(-a / 2.0)? - 2.0 * ln_gamma_pos(a / 2.0)?;
    let ln = ln_c + (a - d) * s.ln() - (a + d) * v.dist(y).ln();
    Ok(ln.exp() * j_integral(zeta(r, x, y), p)?)
}

/// Cartesian density of the descending (`Minus`) or ascending (`Plus`)
/// ladder potential measure started from `x`.
pub fn ladder_potential_density(p: &StableParams, side: LadderSide, x: &Point, z: &Point) -> Result<f64> {
    check_points(p, &[("x", x), ("z", z)])?;
    let (xn, zn) = (x.norm(), z.norm());
    let ok = match side {
        LadderSide::Minus => zn > 0.0 && zn < xn,
        LadderSide::Plus => xn > 0.0 && zn > xn,
    };
    if !ok {
        let need = match side {
            LadderSide::Minus => "0 < |z| < |x|",
            LadderSide::Plus => "|z| > |x| > 0",
        };
        return domain(format!("{side} ladder potential requires {need}, got |x| = {xn}, |z| = {zn}"));
    }
    potential_kernel(p, x, z)
}

/// Lévy density of the descending ladder height subordinator.
pub fn ladder_levy_density(p: &StableParams, y: f64) -> Result<f64> {
    p.validate()?;
    if !(y > 0.0) {
        return domain(format!("ladder Lévy density requires y > 0, got {y}"));
    }
    let (d, a) = (p.df(), p.alpha());
    let ln_c = a.ln() + ln_gamma_pos((d - a) / 2.0)? - ln_gamma_pos(d / 2.0)? - ln_gamma_pos(1.0 - a / 2.0)?;
    let ln = ln_c + (-a / 2.0 - 1.0) * (-(-2.0 * y).exp_m1()).ln() - d * y;
    Ok(ln.exp())
}

/// Laplace exponent of the descending ladder height, including unit killing.
pub fn ladder_laplace_exponent(p: &StableParams, lambda: f64) -> Result<f64> {
    p.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return domain(format!("ladder Laplace exponent requires lambda >= 0, got {lambda}"));
    }
    let (d, a) = (p.df(), p.alpha());
    let ln =
        ln_gamma_pos((d - a) / 2.0)? + ln_gamma_pos((lambda + d) / 2.0)? - ln_gamma_pos(d / 2.0)? - ln_gamma_pos((lambda + d - a) / 2.0)?;
    Ok(ln.exp())
}

/// Density of the overshoot of an excursion from `theta` on the unit sphere
/// that ends strictly inside the unit ball.
pub fn excursion_overshoot_density(p: &StableParams, theta: &Point, y: &Point) -> Result<f64> {
    check_points(p, &[("theta", theta), ("y", y)])?;
    if (theta.norm() - 1.0).abs() > 1e-12 {
        return domain(format!("theta must lie on the unit sphere, got |theta| = {}", theta.norm()));
    }
    let yn = y.norm();
    if !(yn < 1.0) {
        return domain(format!("overshoot density requires |y| < 1, got |y| = {yn}"));
    }
    let (d, a) = (p.df(), p.alpha());
    let ln_c = (a / 2.0).ln() - 0.5 * d * ln_pi() + ln_gamma_pos((d - a) / 2.0)? - ln_gamma_pos(1.0 - a / 2.0)?;
    let ln = ln_c - 0.5 * a * ((1.0 - yn) * (1.0 + yn)).ln() - d * theta.dist(y).ln();
    Ok(ln.exp())
}

fn ln_stationary_const(p: &StableParams) -> Result<f64> {
    let (d, a) = (p.df(), p.alpha());
    Ok(-0.5 * d * ln_pi() + ln_gamma_pos((d + a) / 2.0)? - ln_gamma_pos(a / 2.0)?)
}

fn check_in_unit_ball(w: &Point) -> Result<f64> {
    let wn = w.norm();
    if !(wn < 1.0) {
        return domain(format!("stationary density requires |w| < 1, got |w| = {wn}"));
    }
    Ok(wn)
}

/// Stationary density of the process reflected in its radial maximum,
/// `const * (1 - |w|^2)^{alpha/2 - 1}`.
pub fn stationary_density(p: &StableParams, w: &Point) -> Result<f64> {
    check_points(p, &[("w", w)])?;
    let wn = check_in_unit_ball(w)?;
    let ln = ln_stationary_const(p)? + (p.alpha() / 2.0 - 1.0) * ((1.0 - wn) * (1.0 + wn)).ln();
    Ok(ln.exp())
}

/// The same density with the sphere average of the Poisson kernel evaluated
/// by quadrature instead of in closed form.
pub fn stationary_density_via_poisson(p: &StableParams, w: &Point) -> Result<f64> {
    check_points(p, &[("w", w)])?;
    let wn = check_in_unit_ball(w)?;
    let ln = ln_stationary_const(p)? + (p.alpha() / 2.0) * ((1.0 - wn) * (1.0 + wn)).ln();
    Ok(ln.exp() * poisson_kernel_average(w, p.d())?)
}

/// `E|W|^{2 gamma}` under the stationary law: a `Beta(d/2, alpha/2)` moment.
pub fn stationary_radial_moment(p: &StableParams, gamma: f64) -> Result<f64> {
    p.validate()?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return domain(format!("radial moment requires gamma >= 0, got {gamma}"));
    }
    let (d, a) = (p.df(), p.alpha());
    Ok((ln_beta(gamma + d / 2.0, a / 2.0)? - ln_beta(d / 2.0, a / 2.0)?).exp())
}

/// `(rho^2 - (r - delta)^2)^{-alpha/2} r^alpha P_{rho e_1}(tau_plus_{r-delta} = inf)`,
/// whose limit as `delta -> 0` is `2 D_{alpha,d} / alpha` uniformly in
/// `rho in (r - delta, r]`.
pub fn escape_ratio(p: &StableParams, rho: f64, r: f64, delta: f64) -> Result<f64> {
    p.validate()?;
    check_radius(r)?;
    let inner = r - delta;
    if !(delta > 0.0 && inner > 0.0 && rho > inner && rho <= r) {
        return domain(format!("escape ratio requires 0 < r - delta < rho <= r, got rho = {rho}, r = {r}, delta = {delta}"));
    }
    let surv = survival_probability(p, &Point::on_axis(p.d(), rho), inner)?;
    let gap = (rho - inner) * (rho + inner);
    Ok(surv * (p.alpha() * r.ln() - 0.5 * p.alpha() * gap.ln()).exp())
}

/// The limit `2 D_{alpha,d} / alpha` of [`escape_ratio`].
pub fn escape_limit(p: &StableParams) -> Result<f64> {
    Ok(2.0 * survival_constant(p)? / p.alpha())
}

/// Beta cumulative distribution function; re-exported for samplers and checks.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> Result<f64> {
    reg_inc_beta(x, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(d: usize, a: f64) -> StableParams {
        StableParams::new(d, a).unwrap()
    }

    fn pt(c: &[f64]) -> Point {
        Point::from(c)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn rotate2(p: &Point, phi: f64) -> Point {
        let (s, c) = phi.sin_cos();
        pt(&[c * p[0] - s * p[1], s * p[0] + c * p[1]])
    }

    #[test]
    fn jump_density_examples() {
        let p = params(2, 1.0);
        let v = jump_density(&p, &pt(&[1.0, 0.0])).unwrap();
        assert!(rel(v, 1.0 / (2.0 * PI)) < 1e-13);
        let v2 = jump_density(&p, &pt(&[0.0, 2.0])).unwrap();
        assert!(rel(v2, 1.0 / (16.0 * PI)) < 1e-13);
        let p3 = params(3, 1.5);
        let w = pt(&[0.3, -0.2, 0.5]);
        let ratio = jump_density(&p3, &w.scaled(2.0)).unwrap() / jump_density(&p3, &w).unwrap();
        assert!(rel(ratio, 2f64.powf(-4.5)) < 1e-13);
        assert!(jump_density(&p, &Point::zeros(2)).is_err());
    }

    #[test]
    fn levy_exponent_examples() {
        let p = params(2, 1.0);
        assert_eq!(levy_exponent(&p, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        for t in [0.5, 2.0, 10.0] {
            assert!(levy_exponent(&p, t).unwrap().re >= 0.0);
        }
        let p3 = params(3, 1.2);
        let a = levy_exponent(&p3, 1.7).unwrap();
        let b = levy_exponent(&p3, -1.7).unwrap();
        assert!((a - b.conj()).norm() < 1e-13 * a.norm());
        // continuity at the origin
        assert!(levy_exponent(&p3, 1e-9).unwrap().norm() < 1e-8);
    }

    #[test]
    fn closest_reach_examples() {
        let p = params(2, 1.0);
        let v = closest_reach_density(&p, &pt(&[2.0, 0.0]), &pt(&[1.0, 0.0])).unwrap();
        assert!(rel(v, 3f64.sqrt() / (PI * PI)) < 1e-13);
        assert!(closest_reach_density(&p, &pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).is_err());
        assert!(closest_reach_density(&p, &pt(&[1.0, 0.0]), &Point::zeros(2)).is_err());
        assert!((closest_reach_radial_cdf(&p, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((closest_reach_radial_cdf(&p, 0.5f64.sqrt()).unwrap() - 0.5).abs() < 1e-12);
        let p3 = params(3, 1.4);
        let lhs = 1.0 - closest_reach_radial_cdf(&p3, 0.6).unwrap();
        let rhs = survival_probability(&p3, &pt(&[1.0, 0.0, 0.0]), 0.6).unwrap();
        assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn first_passage_examples() {
        let p = params(2, 1.0);
        let v = first_passage_density(&p, &pt(&[2.0, 0.0]), 1.0, EntranceExitMode::Entrance, &Point::zeros(2)).unwrap();
        assert!(rel(v, 3f64.sqrt() / (4.0 * PI * PI)) < 1e-13);
        let p = params(2, 1.3);
        let a = first_passage_density(&p, &pt(&[1.7, 0.0]), 1.0, EntranceExitMode::Entrance, &pt(&[0.4, 0.0])).unwrap();
        let b = first_passage_density(&p, &pt(&[0.4, 0.0]), 1.0, EntranceExitMode::Exit, &pt(&[1.7, 0.0])).unwrap();
        // swapping the inside and outside arguments inverts the boundary ratio
        let ratio = ((1.7f64 * 1.7 - 1.0) / (1.0 - 0.4 * 0.4)).powf(1.3);
        assert!(rel(a / b, ratio) < 1e-13);
        assert!(first_passage_density(&p, &pt(&[0.4, 0.0]), 1.0, EntranceExitMode::Entrance, &pt(&[0.1, 0.0])).is_err());
    }

    #[test]
    fn survival_examples() {
        let p = params(2, 1.0);
        let s = survival_probability(&p, &pt(&[2.0, 0.0]), 1.0).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-12);
        let sj = survival_probability_via_j(&p, &pt(&[2.0, 0.0]), 1.0).unwrap();
        assert!((sj - 2.0 / 3.0).abs() < 1e-12);
        assert!(survival_probability(&p, &pt(&[1.0 + 1e-12, 0.0]), 1.0).unwrap() < 1e-5);
        assert!(survival_probability(&p, &pt(&[1.0, 0.0]), 1e-9).unwrap() > 1.0 - 1e-4);
        let e = survival_probability(&p, &pt(&[0.5, 0.0]), 1.0).unwrap_err();
        assert!(e.to_string().contains("require |x| > r") || e.to_string().contains("requires |x| > r"));
    }

    #[test]
    fn resolvent_examples() {
        let p = params(2, 1.0);
        let v = resolvent_density(&p, 1.0, EntranceExitMode::Exit, &pt(&[0.2, 0.0]), &pt(&[-0.2, 0.0])).unwrap();
        let expect = 2.5 * 2.0 * 2.4f64.atan() / (2.0 * PI * PI);
        assert!(rel(v, expect) < 1e-12, "{v} vs {expect}");
        assert!(matches!(
            resolvent_density(&p, 1.0, EntranceExitMode::Exit, &pt(&[0.2, 0.0]), &pt(&[0.2, 0.0])),
            Err(Error::Singularity(_))
        ));
        assert!(resolvent_density(&p, 1.0, EntranceExitMode::Entrance, &pt(&[0.2, 0.0]), &pt(&[2.0, 0.0])).is_err());
    }

    #[test]
    fn triple_and_pair_examples() {
        let p = params(2, 1.0);
        let e = EntranceExitMode::Entrance;
        let v = triple_density(&p, 1.0, e, &pt(&[3.0, 0.0]), &pt(&[2.0, 0.0]), &pt(&[4.0, 0.0]), &Point::zeros(2)).unwrap();
        let expect = 5f64.sqrt() * 12f64.sqrt() / (2.0 * 4.0 * 64.0) / (4.0 * PI.powi(4));
        assert!(rel(v, expect) < 1e-12);
        assert!((v - 3.883e-5).abs() < 1e-8);
        let w = pair_reach_density(&p, 1.0, e, &pt(&[2.0, 0.0]), &pt(&[1.5, 0.0]), &Point::zeros(2)).unwrap();
        let expect = 1.75f64.sqrt() / (2.25f64.sqrt() * 2.25 * 0.25) / (2.0 * PI.powi(3));
        assert!(rel(w, expect) < 1e-12);
        assert!(triple_density(&p, 1.0, e, &pt(&[3.0, 0.0]), &pt(&[2.0, 0.0]), &pt(&[1.5, 0.0]), &Point::zeros(2)).is_err());
        // exit branch shares the kernel
        let x = EntranceExitMode::Exit;
        let t = triple_density(&p, 1.0, x, &pt(&[0.2, 0.0]), &pt(&[0.6, 0.0]), &pt(&[0.0, 0.3]), &pt(&[0.0, 1.5])).unwrap();
        assert!(t > 0.0);
    }

    #[test]
    fn pair_jump_factorises() {
        let p = params(2, 1.0);
        let (x, y, v) = (pt(&[2.0, 0.0]), pt(&[1.5, 0.0]), pt(&[0.2, 0.0]));
        let lhs = pair_jump_density(&p, 1.0, EntranceExitMode::Entrance, &x, &y, &v).unwrap();
        let rhs = resolvent_density(&p, 1.0, EntranceExitMode::Entrance, &x, &y).unwrap() * jump_density(&p, &(&v - &y)).unwrap();
        assert!(rel(lhs, rhs) < 1e-12);
        let p3 = params(3, 1.1);
        let (x, y) = (pt(&[2.0, 0.0, 0.0]), pt(&[0.0, 1.5, 0.0]));
        let v1 = pt(&[0.0, 0.5, 0.0]);
        let v2 = pt(&[0.0, -0.5, 0.0]);
        let a = pair_jump_density(&p3, 0.75, EntranceExitMode::Entrance, &x, &y, &v1).unwrap();
        let b = pair_jump_density(&p3, 0.75, EntranceExitMode::Entrance, &x, &y, &v2).unwrap();
        assert!(rel(b / a, 2f64.powf(-4.1)) < 1e-12);
    }

    #[test]
    fn ladder_examples() {
        let p = params(2, 1.0);
        let (x, z) = (pt(&[2.0, 0.0]), pt(&[1.0, 0.0]));
        let m = ladder_potential_density(&p, LadderSide::Minus, &x, &z).unwrap();
        assert!(rel(m, closest_reach_density(&p, &x, &z).unwrap()) < 1e-15);
        assert!(ladder_potential_density(&p, LadderSide::Plus, &x, &z).is_err());
        let v = ladder_levy_density(&p, 2f64.ln() / 2.0).unwrap();
        assert!(rel(v, 2f64.sqrt()) < 1e-13);
        assert!(ladder_levy_density(&p, 0.0).is_err());
        let p3 = params(3, 1.5);
        let c = (1.5f64.ln() + ln_gamma_pos(0.75).unwrap() - ln_gamma_pos(1.5).unwrap() - ln_gamma_pos(0.25).unwrap()).exp();
        let y = 1e-7;
        assert!(rel(ladder_levy_density(&p3, y).unwrap() * y.powf(1.75), c * 2f64.powf(-1.75)) < 1e-5);
        let y = 40.0;
        assert!(rel(ladder_levy_density(&p3, y).unwrap() * (3.0 * y).exp(), c) < 1e-12);
        assert!((ladder_laplace_exponent(&p, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(rel(ladder_laplace_exponent(&p, 2.0).unwrap(), 2.0) < 1e-13);
    }

    #[test]
    fn overshoot_and_stationary_examples() {
        let p = params(2, 1.0);
        let v = excursion_overshoot_density(&p, &pt(&[1.0, 0.0]), &Point::zeros(2)).unwrap();
        assert!(rel(v, 1.0 / (2.0 * PI)) < 1e-13);
        assert!(excursion_overshoot_density(&p, &pt(&[1.1, 0.0]), &Point::zeros(2)).is_err());
        assert!(excursion_overshoot_density(&p, &pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).is_err());
        let s = stationary_density(&p, &Point::zeros(2)).unwrap();
        assert!(rel(s, 1.0 / (2.0 * PI)) < 1e-13);
        let w = pt(&[0.3, -0.6]);
        assert!(rel(stationary_density_via_poisson(&p, &w).unwrap(), stationary_density(&p, &w).unwrap()) < 1e-10);
        assert!(stationary_density(&p, &pt(&[1.0, 0.0])).is_err());
        assert!((stationary_radial_moment(&p, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(rel(stationary_radial_moment(&p, 1.0).unwrap(), 2.0 / 3.0) < 1e-13);
    }

    #[test]
    fn exit_time_and_escape() {
        let p = params(2, 1.5);
        assert!(expected_exit_time(&p, &Point::zeros(2), 1.0).unwrap() > 0.0);
        assert!(expected_exit_time(&p, &pt(&[1.0, 0.0]), 1.0).is_err());
        let p = params(2, 1.0);
        let lim = escape_limit(&p).unwrap();
        // D = 1/pi at d = 2, alpha = 1
        assert!(rel(lim, 2.0 / PI) < 1e-13);
        for k in 1..=4 {
            let rho = 1.0 - 1e-6 + k as f64 * 0.25e-6;
            assert!(rel(escape_ratio(&p, rho, 1.0, 1e-6).unwrap(), lim) < 1e-3);
        }
    }

    #[test]
    fn mode_and_side_parse() {
        assert_eq!("entrance".parse::<EntranceExitMode>().unwrap(), EntranceExitMode::Entrance);
        assert_eq!("exit".parse::<EntranceExitMode>().unwrap().to_string(), "exit");
        assert!("sideways".parse::<EntranceExitMode>().is_err());
        assert_eq!("plus".parse::<LadderSide>().unwrap(), LadderSide::Plus);
    }

    proptest! {
        #[test]
        fn closest_reach_is_rotation_invariant(phi in 0.0..std::f64::consts::TAU, a in 0.1..1.9f64, yx in -0.9..0.9f64, yy in -0.4..0.4f64) {
            let p = params(2, a);
            let x = pt(&[1.3, 0.2]);
            let y = pt(&[yx, yy]);
            let v = closest_reach_density(&p, &x, &y).unwrap();
            let w = closest_reach_density(&p, &rotate2(&x, phi), &rotate2(&y, phi)).unwrap();
            prop_assert!(rel(v, w) < 1e-12);
        }

        #[test]
        fn scaling_properties(c in prop::sample::select(vec![0.5, 3.0]), a in 0.1..1.9f64) {
            let p = params(3, a);
            let x = pt(&[1.0, 0.5, -0.2]);
            let y = pt(&[0.1, -0.3, 0.4]);
            let v = closest_reach_density(&p, &x.scaled(c), &y.scaled(c)).unwrap() * c.powi(3);
            prop_assert!(rel(v, closest_reach_density(&p, &x, &y).unwrap()) < 1e-12);
            let s = survival_probability(&p, &x.scaled(c), 0.7 * c).unwrap();
            prop_assert!(rel(s, survival_probability(&p, &x, 0.7).unwrap()) < 1e-12);
        }

        #[test]
        fn survival_forms_agree(d in 2usize..6, a in 0.05..1.95f64, xn in 1.001..50.0f64) {
            let p = params(d, a);
            let x = Point::on_axis(d, xn);
            let s1 = survival_probability(&p, &x, 1.0).unwrap();
            let s2 = survival_probability_via_j(&p, &x, 1.0).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-11);
            prop_assert!((0.0..=1.0).contains(&s1));
        }

        #[test]
        fn densities_are_positive(a in 0.05..1.95f64, t in 0.0..std::f64::consts::TAU) {
            let p = params(2, a);
            let x = pt(&[2.0, 0.0]);
            let y = rotate2(&pt(&[0.5, 0.0]), t);
            prop_assert!(first_passage_density(&p, &x, 1.0, EntranceExitMode::Entrance, &y).unwrap() > 0.0);
            prop_assert!(resolvent_density(&p, 1.0, EntranceExitMode::Exit, &pt(&[0.1, 0.2]), &y).unwrap() > 0.0);
        }
    }
}
