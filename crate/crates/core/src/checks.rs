//! Named identity suites: each case compares a closed form with an
//! independent evaluation (quadrature, a second closed form or an algebraic
//! transform) and reports the discrepancy.
//!
//! Geometric test points lie on the first coordinate axis, so every
//! integrand in a ball or shell is zonal and reduces to a radial integral of
//! one angular average.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::identities::{
    closest_reach_density, escape_limit, escape_ratio, excursion_overshoot_density, first_passage_density, jump_density,
    ladder_laplace_exponent, ladder_levy_density, pair_jump_density, pair_reach_density, resolvent_density, stationary_density,
    stationary_density_via_poisson, stationary_radial_moment, survival_probability, survival_probability_via_j, triple_density,
    EntranceExitMode,
};
use crate::model::{kv, IdentityReport, Point, StableParams};
use crate::numerics::quadrature::{try_integrate, QuadratureSpec};
use crate::numerics::special::ln_beta;
use crate::numerics::sphere::{poisson_kernel_average, sphere_area, sphere_average_angle};
use crate::operators::{factorization_residual, rho_of_one, rho_op, SphereFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Normalization,
    BetaMarginal,
    BgrConsistency,
    Marginalization,
    KelvinDuality,
    PhiMinus,
    OvershootNu,
    Factorization,
    Stationary,
    PoissonKernel,
    EscapeLimit,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Normalization,
        Suite::BetaMarginal,
        Suite::BgrConsistency,
        Suite::Marginalization,
        Suite::KelvinDuality,
        Suite::PhiMinus,
        Suite::OvershootNu,
        Suite::Factorization,
        Suite::Stationary,
        Suite::PoissonKernel,
        Suite::EscapeLimit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Normalization => "normalization",
            Suite::BetaMarginal => "beta-marginal",
            Suite::BgrConsistency => "bgr-consistency",
            Suite::Marginalization => "marginalization",
            Suite::KelvinDuality => "kelvin-duality",
            Suite::PhiMinus => "phi-minus",
            Suite::OvershootNu => "overshoot-nu",
            Suite::Factorization => "factorization",
            Suite::Stationary => "stationary",
            Suite::PoissonKernel => "poisson-kernel",
            Suite::EscapeLimit => "escape-limit",
        }
    }

    /// Runs every case at `p`; `tol` overrides the per-case defaults.
    pub fn run(&self, p: &StableParams, tol: Option<f64>) -> Result<Vec<IdentityReport>> {
        p.validate()?;
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return domain(format!("tolerance must be positive, got {t}"));
            }
        }
        let t = |default: f64| tol.unwrap_or(default);
        match self {
            Suite::Normalization => normalization(p, t),
            Suite::BetaMarginal => beta_marginal(p, t),
            Suite::BgrConsistency => bgr_consistency(p, t),
            Suite::Marginalization => marginalization(p, t),
            Suite::KelvinDuality => kelvin_duality(p, t),
            Suite::PhiMinus => phi_minus(p, t),
            Suite::OvershootNu => overshoot_nu(p, t),
            Suite::Factorization => factorization(p, t),
            Suite::Stationary => stationary(p, t),
            Suite::PoissonKernel => poisson_kernel(p, t),
            Suite::EscapeLimit => escape(p, t),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| {
            let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
            Error::Config(format!("unknown suite '{s}', expected one of: {}", names.join(", ")))
        })
    }
}

/// Gap below which edge integrands are continued by their power law rather
/// than evaluated, relative to the edge radius.
const EDGE_FLOOR: f64 = 1e-8;

fn radial_spec() -> QuadratureSpec {
    QuadratureSpec::relative(1e-10)
}

fn angular_spec() -> QuadratureSpec {
    QuadratureSpec::relative(1e-9).with_hints([0.0])
}

/// `rho (cos t e_1 + sin t e_2)`.
fn axial(d: usize, rho: f64, t: f64) -> Point {
    let (s, c) = t.sin_cos();
    let mut y = vec![0.0; d];
    y[0] = rho * c;
    y[1] = rho * s;
    Point::new(y)
}

/// `|S_{d-1}| rho^{d-1}` times the sphere average of `g` at radius `rho`:
/// the radial density of a zonal integrand.
fn shell_density<G>(d: usize, rho: f64, mut g: G) -> Result<f64>
where
    G: FnMut(&Point) -> Result<f64>,
{
    let avg = sphere_average_angle(|t| g(&axial(d, rho, t)), d, &angular_spec())?;
    Ok(sphere_area(d)? * rho.powi(d as i32 - 1) * avg)
}

/// `int_0^len f(s) ds` for `f(s) ~ s^{kappa-1}` as `s -> 0`, where `s` is a
/// gap to a nonzero radius and cannot be resolved below `floor`.
fn edge_integral<F>(mut f: F, len: f64, kappa: f64, floor: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let head = f(floor)? * floor / kappa;
    let body = try_integrate(|v| f(floor + v), 0.0, len - floor, &spec.clone().with_hints([0.0]))?;
    Ok(head + body.value)
}

/// Integral over `[a, b]` of a function with an integrable singularity at
/// radius `c = a` (`left`) or `c = b`, evaluated in the gap `|rho - c|`; a
/// node landing exactly on `c` contributes nothing.
fn gap_integral<F>(mut f: F, a: f64, b: f64, left: bool, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let est = try_integrate(
        |s| {
            let rho = if left { a + s } else { b - s };
            if rho == if left { a } else { b } {
                return Ok(0.0);
            }
            f(rho)
        },
        0.0,
        b - a,
        &spec.clone().with_hints([0.0]),
    )?;
    Ok(est.value)
}

fn base(p: &StableParams) -> Vec<(String, String)> {
    vec![kv("d", p.d()), kv("alpha", p.alpha())]
}

fn with(p: &StableParams, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut v = base(p);
    v.extend(extra.iter().map(|(k, s)| kv(k, s)));
    v
}

fn normalization(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let (d, a) = (p.d(), p.alpha());
    let xn = 1.5;
    let x = Point::on_axis(d, xn);
    let dens = |rho: f64| shell_density(d, rho, |y| closest_reach_density(p, &x, y));
    let inner = try_integrate(dens, 0.0, 0.5 * xn, &radial_spec().with_hints([0.0]))?.value;
    let outer = edge_integral(|s| dens(xn - s), 0.5 * xn, 0.5 * a, EDGE_FLOOR * xn, &radial_spec())?;
    let closest = IdentityReport::new("normalization/closest-reach", with(p, &[("x", x.to_string())]), inner + outer, 1.0, tol(1e-6));

    let r = 1.0;
    let x = Point::on_axis(d, 0.4);
    let dens = |rho: f64| shell_density(d, rho, |y| first_passage_density(p, &x, r, EntranceExitMode::Exit, y));
    let near = edge_integral(|s| dens(r + s), r, 1.0 - 0.5 * a, EDGE_FLOOR * r, &radial_spec())?;
    let far = try_integrate(dens, 2.0 * r, f64::INFINITY, &radial_spec())?.value;
    let exit = IdentityReport::new(
        "normalization/exit-position",
        with(p, &[("x", x.to_string()), ("r", r.to_string())]),
        near + far,
        1.0,
        tol(1e-6),
    );
    Ok(vec![closest, exit])
}

/// `Beta(a, b)` density, written out independently of the identities module.
fn beta_pdf(u: f64, a: f64, b: f64) -> Result<f64> {
    Ok(((a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - ln_beta(a, b)?).exp())
}

fn beta_marginal(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let (d, a, df) = (p.d(), p.alpha(), p.df());
    let x = Point::on_axis(d, 1.0);
    (1..=20)
        .map(|k| {
            let rho = (k as f64 - 0.5) / 20.0;
            // density of |y| at rho, pushed to u = |y|^2
            let lhs = shell_density(d, rho, |y| closest_reach_density(p, &x, y))? / (2.0 * rho);
            let rhs = beta_pdf(rho * rho, (df - a) / 2.0, a / 2.0)?;
            Ok(IdentityReport::new("beta-marginal", with(p, &[("rho", rho.to_string())]), lhs, rhs, tol(1e-6)))
        })
        .collect()
}

fn bgr_consistency(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let (d, a) = (p.d(), p.alpha());
    let r = 1.0;
    let x = Point::on_axis(d, 2.0);
    let geo = with(p, &[("x", x.to_string()), ("r", r.to_string())]);
    let survival = survival_probability(p, &x, r)?;
    let mut out = vec![IdentityReport::new(
        "bgr-consistency/survival-forms",
        geo.clone(),
        survival,
        survival_probability_via_j(p, &x, r)?,
        tol(1e-10),
    )];
    if d == 2 && a == 1.0 {
        out.push(IdentityReport::new("bgr-consistency/survival-exact", geo.clone(), survival, 2.0 / 3.0, tol(1e-10)));
    }
    let dens = |rho: f64| shell_density(d, rho, |y| first_passage_density(p, &x, r, EntranceExitMode::Entrance, y));
    let inner = try_integrate(dens, 0.0, 0.5 * r, &radial_spec())?.value;
    let edge = edge_integral(|s| dens(r - s), 0.5 * r, 1.0 - 0.5 * a, EDGE_FLOOR * r, &radial_spec())?;
    out.push(IdentityReport::new("bgr-consistency/entrance-mass", geo, 1.0 - inner - edge, survival, tol(1e-6)));
    Ok(out)
}

/// `int_{|v| < r} Pi(v - y) dv` for `y = rho e_1`, `rho > r`.
fn jump_mass_into_ball(p: &StableParams, rho: f64, r: f64) -> Result<f64> {
    let d = p.d();
    let y = Point::on_axis(d, rho);
    let dens = |s: f64| shell_density(d, r - s, |v| jump_density(p, &(v - &y)));
    Ok(try_integrate(dens, 0.0, r, &QuadratureSpec::relative(1e-8).with_hints([0.0]))?.value)
}

fn marginalization(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let (d, a) = (p.d(), p.alpha());
    let mode = EntranceExitMode::Entrance;
    let r = 1.0;
    let (x, z, v) = (Point::on_axis(d, 3.0), Point::on_axis(d, 2.0), Point::on_axis(d, 0.3));
    let zn = z.norm();
    let geo = |extra: &[(&str, String)]| {
        let mut g = with(p, &[("r", r.to_string()), ("x", x.to_string())]);
        g.extend(extra.iter().map(|(k, s)| kv(k, s)));
        g
    };
    let mut out = Vec::new();

    // integrate the pre-passage position out of the triple law
    let dens = |rho: f64| shell_density(d, rho, |y| triple_density(p, r, mode, &x, &z, y, &v));
    let near = edge_integral(|s| dens(zn + s), zn, 0.5 * a, EDGE_FLOOR * zn, &radial_spec())?;
    let far = try_integrate(dens, 2.0 * zn, f64::INFINITY, &radial_spec())?.value;
    out.push(IdentityReport::new(
        "marginalization/triple-to-pair",
        geo(&[("z", z.to_string()), ("v", v.to_string())]),
        near + far,
        pair_reach_density(p, r, mode, &x, &z, &v)?,
        tol(1e-4),
    ));

    // integrate the radial extremum out of the pair law
    let xn = x.norm();
    let dens = |rho: f64| shell_density(d, rho, |z| pair_reach_density(p, r, mode, &x, z, &v));
    let lhs = edge_integral(|s| dens(xn - s), xn - r, 0.5 * a, EDGE_FLOOR * xn, &radial_spec())?;
    out.push(IdentityReport::new(
        "marginalization/pair-to-entrance",
        geo(&[("v", v.to_string())]),
        lhs,
        first_passage_density(p, &x, r, mode, &v)?,
        tol(1e-4),
    ));

    // the jump law factorises into the killed resolvent and the Lévy density
    let y = Point::on_axis(d, 1.5);
    out.push(IdentityReport::new(
        "marginalization/pair-jump-factorises",
        geo(&[("y", y.to_string()), ("v", v.to_string())]),
        pair_jump_density(p, r, mode, &x, &y, &v)?,
        resolvent_density(p, r, mode, &x, &y)? * jump_density(p, &(&v - &y))?,
        tol(1e-12),
    ));

    // total mass of the jump law is the entrance probability
    let x = Point::on_axis(d, 2.0);
    let xn = x.norm();
    let dens = |rho: f64| -> Result<f64> {
        let h = shell_density(d, rho, |y| {
            if y.dist(&x) == 0.0 {
                return Ok(0.0);
            }
            resolvent_density(p, r, mode, &x, y)
        })?;
        Ok(h * jump_mass_into_ball(p, rho, r)?)
    };
    let mid = 0.5 * (r + xn);
    let loose = QuadratureSpec::relative(1e-6);
    let mass = edge_integral(|s| dens(r + s), mid - r, 1.0 - 0.5 * a, EDGE_FLOOR * r, &loose)?
        + gap_integral(dens, mid, xn, false, &loose)?
        + gap_integral(dens, xn, 2.0 * xn, true, &loose)?
        + try_integrate(dens, 2.0 * xn, f64::INFINITY, &loose)?.value;
    out.push(IdentityReport::absolute(
        "marginalization/jump-law-mass",
        with(p, &[("r", r.to_string()), ("x", x.to_string())]),
        mass,
        1.0 - survival_probability(p, &x, r)?,
        tol(1e-3),
    ));
    Ok(out)
}

/// Seed of the fixed point pairs used by the Kelvin duality suite.
const KELVIN_SEED: u64 = 0x6b65_6c76;

fn random_direction(d: usize, rng: &mut ChaCha8Rng) -> Point {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = Point::new(v);
        let n = p.norm();
        if n > 0.1 && n <= 1.0 {
            return p.scaled(1.0 / n);
        }
    }
}

fn kelvin_duality(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let d = p.d();
    let mut rng = ChaCha8Rng::seed_from_u64(KELVIN_SEED);
    (0..10)
        .map(|_| {
            let x = random_direction(d, &mut rng).scaled(rng.random_range(0.2..1.5));
            let z = random_direction(d, &mut rng).scaled(x.norm() * rng.random_range(1.1..3.0));
            crate::operators::kelvin_duality_check(p, &x, &z, tol(1e-12))
        })
        .collect()
}

fn phi_minus(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let (df, a) = (p.df(), p.alpha());
    let mut out = Vec::new();
    for lambda in [0.5, 1.0, 2.0] {
        // unit killing plus the Lévy–Khintchine integral of the jump part
        let jumps = try_integrate(
            |y| Ok(-(-lambda * y).exp_m1() * ladder_levy_density(p, y)?),
            0.0,
            f64::INFINITY,
            &QuadratureSpec::relative(1e-12).with_hints([0.0]),
        )?;
        out.push(IdentityReport::new(
            "phi-minus/levy-khintchine",
            with(p, &[("lambda", lambda.to_string())]),
            ladder_laplace_exponent(p, lambda)?,
            1.0 + jumps.value,
            tol(1e-8),
        ));
    }
    // Gamma recurrence: Phi(2) = d / (d - alpha)
    out.push(IdentityReport::new(
        "phi-minus/exact",
        with(p, &[("lambda", "2".to_string())]),
        ladder_laplace_exponent(p, 2.0)?,
        df / (df - a),
        tol(1e-8),
    ));
    Ok(out)
}

fn overshoot_nu(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let d = p.d();
    let theta = Point::on_axis(d, 1.0);
    [0.3, 0.7]
        .into_iter()
        .map(|s| {
            // density of -log|Y| at u = -log s is s times the density of |Y| at s
            let lhs = s * shell_density(d, s, |y| excursion_overshoot_density(p, &theta, y))?;
            let rhs = ladder_levy_density(p, -s.ln())?;
            Ok(IdentityReport::new("overshoot-nu", with(p, &[("s", s.to_string())]), lhs, rhs, tol(1e-8)))
        })
        .collect()
}

fn factorization(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let (d, a, df) = (p.d(), p.alpha(), p.df());
    let strip = df - a;
    let one = SphereFunction::constant(1.0);
    let mut out = Vec::new();
    for frac in [0.25, 0.5, 0.75] {
        out.push(factorization_residual(p, frac * strip, &one, tol(1e-6))?);
    }
    let theta = Point::on_axis(d, 1.0);
    for frac in [0.25, 0.75] {
        let z = Complex64::new(frac * strip, 0.0);
        out.push(IdentityReport::new(
            "factorization/rho-of-one",
            with(p, &[("z", z.re.to_string())]),
            rho_op(p, z, &one, &theta)?.re,
            rho_of_one(p, z)?.re,
            tol(1e-8),
        ));
    }
    if d == 2 {
        out.push(factorization_residual(p, 0.5 * strip, &SphereFunction::coordinate(d, 0), tol(1e-4))?);
    }
    Ok(out)
}

fn stationary(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let (d, a, df) = (p.d(), p.alpha(), p.df());
    let mut out = Vec::new();
    for gamma in [0.0, 1.0, 2.0] {
        let dens = |rho: f64| -> Result<f64> {
            let w = Point::on_axis(d, rho);
            Ok(sphere_area(d)? * rho.powi(d as i32 - 1) * rho.powf(2.0 * gamma) * stationary_density(p, &w)?)
        };
        let inner = try_integrate(dens, 0.0, 0.5, &radial_spec())?.value;
        let edge = edge_integral(|s| dens(1.0 - s), 0.5, 0.5 * a, EDGE_FLOOR, &radial_spec())?;
        let (name, rhs, t) = if gamma == 0.0 {
            ("stationary/normalization", 1.0, tol(1e-6))
        } else {
            ("stationary/radial-moment", stationary_radial_moment(p, gamma)?, tol(1e-8))
        };
        out.push(IdentityReport::new(name, with(p, &[("gamma", gamma.to_string())]), inner + edge, rhs, t));
    }
    out.push(IdentityReport::new(
        "stationary/beta-mean",
        with(p, &[("gamma", "1".to_string())]),
        stationary_radial_moment(p, 1.0)?,
        df / (df + a),
        tol(1e-8),
    ));
    for wn in [0.0, 0.5, 0.9] {
        let w = Point::on_axis(d, wn);
        out.push(IdentityReport::new(
            "stationary/poisson-form",
            with(p, &[("w", w.to_string())]),
            stationary_density_via_poisson(p, &w)?,
            stationary_density(p, &w)?,
            tol(1e-8),
        ));
    }
    Ok(out)
}

fn poisson_kernel(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let d = p.d();
    [0.0, 0.3, 0.7, 0.95]
        .into_iter()
        .map(|wn| {
            let w = Point::on_axis(d, wn);
            let lhs = poisson_kernel_average(&w, d)?;
            Ok(IdentityReport::new("poisson-kernel", vec![kv("d", d), kv("w", &w)], lhs, 1.0 / ((1.0 - wn) * (1.0 + wn)), tol(1e-8)))
        })
        .collect()
}

fn escape(p: &StableParams, tol: impl Fn(f64) -> f64) -> Result<Vec<IdentityReport>> {
    let (r, delta) = (1.0, 1e-6);
    let limit = escape_limit(p)?;
    (1..=4)
        .map(|k| {
            let rho = r - delta + delta * k as f64 / 4.0;
            let lhs = escape_ratio(p, rho, r, delta)?;
            Ok(IdentityReport::new(
                "escape-limit",
                with(p, &[("rho", rho.to_string()), ("r", r.to_string()), ("delta", delta.to_string())]),
                lhs,
                limit,
                tol(1e-3),
            ))
        })
        .collect()
}
