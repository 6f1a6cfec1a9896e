//! Path simulation and sampling for isotropic stable processes, used as an
//! independent statistical check of the closed forms.
//!
//! Increments are exact in law: a Brownian motion subordinated by a
//! one-sided `alpha/2`-stable variable. Paths are observed on a time grid, so
//! running extrema and passage times carry a grid bias that is budgeted in
//! the tolerances rather than corrected.

use std::f64::consts::PI;
use std::fmt;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::identities::{expected_exit_time, resolvent_density, stationary_radial_moment, survival_probability, EntranceExitMode};
use crate::model::{Point, StableParams};
use crate::numerics::quadrature::{integrate_1d, try_integrate, QuadratureSpec};
use crate::numerics::special::reg_inc_beta;
use crate::numerics::sphere::{sphere_area, sphere_average_angle};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed plus worker index; each pair owns an independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub worker_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, worker_index: u64) -> Self {
        Self { master_seed, worker_index }
    }

    pub fn stream_seed(&self) -> u64 {
        splitmix64(self.master_seed.wrapping_add(self.worker_index.wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.stream_seed())
    }

    pub fn worker(&self, index: u64) -> Self {
        Self { master_seed: self.master_seed, worker_index: index }
    }
}

/// Draw `S > 0` with `E exp(-lambda S) = exp(-lambda^beta)`, by Kanter's
/// representation `S = (A(U) / E)^{(1-beta)/beta}`.
pub fn sample_one_sided_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return domain(format!("one-sided stable law requires 0 < beta < 1, got {beta}"));
    }
    Ok(one_sided_stable(beta, rng))
}

fn one_sided_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u = PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let ln_a = (beta * (beta * u).sin().ln() + (1.0 - beta) * ((1.0 - beta) * u).sin().ln() - u.sin().ln()) / (1.0 - beta);
    ((ln_a - e.ln()) * (1.0 - beta) / beta).exp()
}

/// Increment over time `dt` of the process with exponent `|theta|^alpha`.
pub fn sample_stable_increment<R: Rng + ?Sized>(p: &StableParams, dt: f64, rng: &mut R) -> Result<Point> {
    p.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("time step must be positive, got dt = {dt}"));
    }
    let mut out = vec![0.0; p.d()];
    add_increment(p, dt, rng, &mut out);
    Ok(Point::new(out))
}

fn add_increment<R: Rng + ?Sized>(p: &StableParams, dt: f64, rng: &mut R, x: &mut [f64]) {
    let a = p.alpha();
    let s = dt.powf(2.0 / a) * one_sided_stable(a / 2.0, rng);
    let scale = (2.0 * s).sqrt();
    for c in x.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *c += scale * z;
    }
}

/// How the simulation grid is laid out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Constant step `dt`.
    Uniform(f64),
    /// Step `dt |X_k|^alpha`: the same resolution at every scale, so the
    /// work per path grows only logarithmically in the radial range.
    RadiusScaled(f64),
}

impl StepRule {
    fn base(&self) -> f64 {
        match *self {
            StepRule::Uniform(dt) | StepRule::RadiusScaled(dt) => dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitReason {
    HitInner,
    HitOuter,
    Horizon,
}

impl fmt::Display for ExitReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExitReason::HitInner => "hit_inner",
            ExitReason::HitOuter => "hit_outer",
            ExitReason::Horizon => "horizon",
        })
    }
}

/// Summary of one simulated trajectory, observed on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub min_radius: f64,
    pub argmin_point: Point,
    pub max_radius: f64,
    pub first_passage_time: Option<f64>,
    pub first_passage_position: Option<Point>,
    pub exit_reason: ExitReason,
    /// Position at the end of the simulation.
    pub final_point: Point,
    pub steps: u64,
}

/// Safety cap on grid steps per path; reaching it ends the path at the
/// horizon.
pub const MAX_STEPS: u64 = 200_000_000;

/// Stopping rules of a path simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walk {
    pub rule: StepRule,
    pub inner_r: f64,
    pub outer_r: Option<f64>,
    pub horizon: f64,
}

impl Walk {
    fn validate(&self, x0: &Point) -> Result<()> {
        let dt = self.rule.base();
        if !(dt > 0.0 && dt.is_finite()) {
            return domain(format!("time step must be positive, got dt = {dt}"));
        }
        if !(self.inner_r >= 0.0) {
            return domain("inner radius must be nonnegative");
        }
        if self.horizon.is_nan() || self.horizon < 0.0 {
            return domain("horizon must be nonnegative");
        }
        let n = x0.norm();
        if !(n > self.inner_r || (self.inner_r == 0.0 && n == 0.0)) {
            return domain(format!("start must satisfy |x0| > inner radius, got |x0| = {n}"));
        }
        if let Some(o) = self.outer_r {
            if !(o > n) {
                return domain(format!("start must satisfy |x0| < outer radius, got |x0| = {n}"));
            }
        }
        if matches!(self.rule, StepRule::RadiusScaled(_)) && n == 0.0 {
            return domain("radius-scaled steps cannot start at the origin");
        }
        Ok(())
    }

    /// Runs one path; `on_step(x, h)` sees each pre-step position and the
    /// length of the step taken from it.
    fn run<R: Rng + ?Sized>(&self, p: &StableParams, x0: &Point, rng: &mut R, on_step: &mut dyn FnMut(&[f64], f64)) -> PathRecord {
        let a = p.alpha();
        let mut x = x0.coords().to_vec();
        let r0 = x0.norm();
        let (mut min_r, mut max_r) = (r0, r0);
        let mut argmin = x.clone();
        let mut t = 0.0;
        let mut steps = 0u64;
        let mut reason = ExitReason::Horizon;
        let mut passage = None;
        let mut r = r0;
        while t < self.horizon && steps < MAX_STEPS {
            let h = match self.rule {
                StepRule::Uniform(dt) => dt,
                StepRule::RadiusScaled(dt) => dt * r.powf(a),
            }
            .min(self.horizon - t);
            on_step(&x, h);
            add_increment(p, h, rng, &mut x);
            t += h;
            steps += 1;
            r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r < min_r {
                min_r = r;
                argmin.copy_from_slice(&x);
            }
            max_r = max_r.max(r);
            if r < self.inner_r {
                reason = ExitReason::HitInner;
                passage = Some(t);
                break;
            }
            if self.outer_r.is_some_and(|o| r > o) {
                reason = ExitReason::HitOuter;
                passage = Some(t);
                break;
            }
        }
        PathRecord {
            min_radius: min_r,
            argmin_point: Point::new(argmin),
            max_radius: max_r,
            first_passage_time: passage,
            first_passage_position: passage.map(|_| Point::new(x.clone())),
            exit_reason: reason,
            final_point: Point::new(x),
            steps,
        }
    }
}

/// Euler path on the uniform grid `{k dt}` with exact increments, stopped on
/// entering `{|y| < inner_r}`, leaving `{|y| <= outer_r}` or at `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_path(
    p: &StableParams,
    x0: &Point,
    dt: f64,
    inner_r: f64,
    outer_r: Option<f64>,
    horizon: f64,
    seeds: SeedSpec,
) -> Result<PathRecord> {
    simulate_path_with(p, x0, Walk { rule: StepRule::Uniform(dt), inner_r, outer_r, horizon }, seeds)
}

pub fn simulate_path_with(p: &StableParams, x0: &Point, walk: Walk, seeds: SeedSpec) -> Result<PathRecord> {
    p.validate()?;
    p.check_point("x0", x0)?;
    walk.validate(x0)?;
    Ok(walk.run(p, x0, &mut seeds.rng(), &mut |_, _| {}))
}

/// Number of grid cells of the cached radial inverse CDF.
pub const RADIAL_GRID: usize = 4096;

/// Cap on angular rejection attempts per draw.
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// Exact sampler for the position at first entrance into the ball of radius
/// `r` from `x`.
///
/// The radial marginal of the entrance law is
/// `rho^{d-1} (r^2 - rho^2)^{-alpha/2} m(rho)` with `m(rho)` the sphere mean of
/// `|x - y|^{-d}`, equal to `|x|^{2-d} / (|x|^2 - rho^2)` by the Poisson
/// formula. In `w = (1 - rho^2/r^2)^{1 - alpha/2}` it becomes a bounded
/// smooth density, tabulated once on [`RADIAL_GRID`] cells and inverted by
/// linear interpolation. Directions are drawn by rejection against the
/// bound `(|x| - rho)^{-d}`.
#[derive(Debug, Clone)]
pub struct FirstEntranceSampler {
    params: StableParams,
    x: Point,
    r: f64,
    survival: f64,
    /// CDF in `w` at `w_k = k / RADIAL_GRID`, measured from `w = 0` (`rho = r`).
    cdf: Vec<f64>,
}

impl FirstEntranceSampler {
    pub fn new(p: &StableParams, x: &Point, r: f64) -> Result<Self> {
        p.check_point("x", x)?;
        let survival = survival_probability(p, x, r)?;
        let (d, a) = (p.df(), p.alpha());
        let big = (x.norm() / r).powi(2);
        let kappa = 1.0 - a / 2.0;
        // density in w up to a constant: q^{d/2-1} / (X^2 - q), q = 1 - w^{1/kappa}
        let dens = move |w: f64| {
            let q = 1.0 - w.powf(1.0 / kappa);
            q.max(0.0).powf(d / 2.0 - 1.0) / (big - q)
        };
        let spec = QuadratureSpec::relative(1e-12);
        let mut cdf = Vec::with_capacity(RADIAL_GRID + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for k in 0..RADIAL_GRID {
            let (lo, hi) = (k as f64 / RADIAL_GRID as f64, (k + 1) as f64 / RADIAL_GRID as f64);
            acc += integrate_1d(dens, lo, hi, &spec)?.value;
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(Self { params: *p, x: x.clone(), r, survival, cdf })
    }

    pub fn survival(&self) -> f64 {
        self.survival
    }

    /// Radius `rho < r` drawn from the radial marginal of the entrance law.
    pub fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, RADIAL_GRID);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        let w = (k as f64 - 1.0 + frac) / RADIAL_GRID as f64;
        let kappa = 1.0 - self.params.alpha() / 2.0;
        let q = 1.0 - w.powf(1.0 / kappa);
        self.r * q.max(0.0).sqrt()
    }

    /// `None` with the survival probability, else the entrance position.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<Point>> {
        let u: f64 = rng.random();
        if u < self.survival {
            return Ok(None);
        }
        let rho = self.sample_radius(rng);
        let d = self.params.d();
        let xn = self.x.norm();
        let bound = xn - rho;
        let mut dir = vec![0.0; d];
        for _ in 0..REJECTION_BUDGET {
            let mut n2 = 0.0;
            for c in dir.iter_mut() {
                *c = rng.sample(StandardNormal);
                n2 += *c * *c;
            }
            if n2 == 0.0 {
                continue;
            }
            let y = Point::new(dir.iter().map(|c| rho * c / n2.sqrt()).collect());
            let accept = (bound / self.x.dist(&y)).powi(d as i32);
            if rng.random::<f64>() < accept {
                return Ok(Some(y));
            }
        }
        Err(Error::RejectionBudgetExceeded { attempts: REJECTION_BUDGET })
    }
}

/// One exact draw from the first-entrance law; see [`FirstEntranceSampler`]
/// for repeated draws.
pub fn sample_first_entrance<R: Rng + ?Sized>(p: &StableParams, x: &Point, r: f64, rng: &mut R) -> Result<Option<Point>> {
    FirstEntranceSampler::new(p, x, r)?.sample(rng)
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// the continuous CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Streaming mean and variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Estimate with its standard error and seed provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: SeedSpec,
    pub workers: usize,
}

/// Monte Carlo experiments and the closed forms they are compared with.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    /// Indicator that the ball of radius `r` is never entered; paths are
    /// stopped at `1e3 |x0|`.
    Survival { x0: Point, r: f64, dt: f64 },
    /// `(min radius / |x0|)^2`, whose law is `Beta((d-alpha)/2, alpha/2)`.
    ClosestReachRadial { x0: Point, dt: f64 },
    /// `|Y| / r` for the first-entrance position `Y`, conditionally on entering;
    /// with `dt = None` the exact sampler is used instead of Euler paths.
    FirstEntrancePosition { x0: Point, r: f64, dt: Option<f64> },
    /// `(|X_T| / M_T)^2` at `T = (2^doublings |x0|)^alpha`.
    ReflectedStationary { x0: Point, dt: f64, doublings: u32 },
    /// Time spent in the shell `lo <= |y| < hi` before leaving the ball of
    /// radius `r`, on the uniform grid.
    Occupation { x0: Point, r: f64, lo: f64, hi: f64, dt: f64 },
}

/// Reference law of the per-path samples, for the KS column.
type SampleCdf = Box<dyn Fn(f64) -> f64>;

/// Outer radius standing in for "never returns", relative to `|x0|`.
pub const TRUNCATION_FACTOR: f64 = 1e3;

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Survival { .. } => "survival",
            Experiment::ClosestReachRadial { .. } => "closest_reach_radial",
            Experiment::FirstEntrancePosition { .. } => "first_entrance_position",
            Experiment::ReflectedStationary { .. } => "reflected_stationary",
            Experiment::Occupation { .. } => "occupation",
        }
    }

    pub fn x0(&self) -> &Point {
        match self {
            Experiment::Survival { x0, .. }
            | Experiment::ClosestReachRadial { x0, .. }
            | Experiment::FirstEntrancePosition { x0, .. }
            | Experiment::ReflectedStationary { x0, .. }
            | Experiment::Occupation { x0, .. } => x0,
        }
    }

    fn validate(&self, p: &StableParams) -> Result<()> {
        p.validate()?;
        p.check_point("x", self.x0())?;
        let xn = self.x0().norm();
        let positive = |name: &str, v: f64| -> Result<()> {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive, got {v}"));
            }
            Ok(())
        };
        match self {
            Experiment::Survival { r, dt, .. } => {
                positive("r", *r)?;
                positive("dt", *dt)?;
                if !(xn > *r) {
                    return domain(format!("survival experiment: require |x| > r, got |x| = {xn}, r = {r}"));
                }
            }
            Experiment::ClosestReachRadial { dt, .. } | Experiment::ReflectedStationary { dt, .. } => {
                positive("dt", *dt)?;
                positive("|x|", xn)?;
            }
            Experiment::FirstEntrancePosition { r, dt, .. } => {
                positive("r", *r)?;
                if let Some(dt) = dt {
                    positive("dt", *dt)?;
                }
                if !(xn > *r) {
                    return domain(format!("first entrance experiment: require |x| > r, got |x| = {xn}, r = {r}"));
                }
            }
            Experiment::Occupation { r, lo, hi, dt, .. } => {
                positive("r", *r)?;
                positive("dt", *dt)?;
                if !(xn < *r) {
                    return domain(format!("occupation experiment: require |x| < r, got |x| = {xn}, r = {r}"));
                }
                if !(*lo >= 0.0 && lo < hi && *hi <= *r) {
                    return domain(format!("occupation shell must satisfy 0 <= lo < hi <= r, got [{lo}, {hi})"));
                }
            }
        }
        if let Experiment::ReflectedStationary { doublings, .. } = self {
            if *doublings == 0 || *doublings > 60 {
                return domain("doublings must lie in 1..=60");
            }
        }
        Ok(())
    }

    /// Closed-form (or quadrature) value the estimate is compared with.
    pub fn reference(&self, p: &StableParams) -> Result<f64> {
        self.validate(p)?;
        let (d, a) = (p.df(), p.alpha());
        match self {
            Experiment::Survival { x0, r, .. } => survival_probability(p, x0, *r),
            Experiment::ClosestReachRadial { .. } => Ok((d - a) / d),
            Experiment::FirstEntrancePosition { x0, r, .. } => {
                let cdf = entrance_radial_cdf_table(p, x0.norm() / r)?;
                // E[rho] = int_0^1 (1 - F(rho)) d rho
                Ok(integrate_1d(|s| 1.0 - cdf.eval(s), 0.0, 1.0, &QuadratureSpec::relative(1e-10))?.value)
            }
            Experiment::ReflectedStationary { .. } => stationary_radial_moment(p, 1.0),
            Experiment::Occupation { x0, r, lo, hi, .. } => occupation_reference(p, x0, *r, *lo, *hi),
        }
    }

    /// CDF the per-path samples are compared with, if the experiment has one.
    fn sample_cdf(&self, p: &StableParams) -> Result<Option<SampleCdf>> {
        let (d, a) = (p.df(), p.alpha());
        match self {
            Experiment::ClosestReachRadial { .. } => {
                let (ba, bb) = ((d - a) / 2.0, a / 2.0);
                Ok(Some(Box::new(move |x: f64| reg_inc_beta(x.clamp(0.0, 1.0), ba, bb).unwrap_or(f64::NAN))))
            }
            Experiment::FirstEntrancePosition { x0, r, .. } => {
                let table = entrance_radial_cdf_table(p, x0.norm() / r)?;
                Ok(Some(Box::new(move |x: f64| table.eval(x))))
            }
            _ => Ok(None),
        }
    }
}

/// `int_{lo <= |y| < hi} h_minus_r(x0, y) dy`; for the full ball this is the
/// expected exit time.
pub fn occupation_reference(p: &StableParams, x0: &Point, r: f64, lo: f64, hi: f64) -> Result<f64> {
    let xn = x0.norm();
    if lo == 0.0 && hi == r {
        return expected_exit_time(p, x0, r);
    }
    let d = p.d();
    let area = sphere_area(d)?;
    let spec = QuadratureSpec::relative(1e-9);
    if xn == 0.0 {
        let val = try_integrate(
            |rho| Ok(resolvent_density(p, r, EntranceExitMode::Exit, x0, &Point::on_axis(d, rho))? * rho.powi(d as i32 - 1)),
            lo,
            hi,
            &spec.clone().with_hints([lo]),
        )?;
        return Ok(area * val.value);
    }
    let x = Point::on_axis(d, xn);
    let ang = QuadratureSpec::relative(1e-10).with_hints([0.0]);
    let val = try_integrate(
        |rho| {
            if rho == xn {
                // the angular mean diverges logarithmically at this single radius
                return Ok(0.0);
            }
            let m = sphere_average_angle(
                |t| {
                    let (s, c) = t.sin_cos();
                    let mut y = vec![0.0; d];
                    y[0] = rho * c;
                    y[1] = rho * s;
                    let y = Point::new(y);
                    if y.dist(&x) == 0.0 {
                        // a node on the integrable diagonal singularity
                        return Ok(0.0);
                    }
                    resolvent_density(p, r, EntranceExitMode::Exit, &x, &y)
                },
                d,
                &ang,
            )?;
            Ok(m * rho.powi(d as i32 - 1))
        },
        lo,
        hi,
        &spec.clone().with_hints([xn.clamp(lo, hi)]),
    )?;
    Ok(area * val.value)
}

/// Radial CDF of the first-entrance position in units of `r`, from direct
/// quadrature of the entrance density (independent of the sampler's table).
#[derive(Debug, Clone)]
pub struct RadialCdf {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl RadialCdf {
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        let k = self.grid.partition_point(|&g| g <= s).clamp(1, self.grid.len() - 1);
        let (g0, g1) = (self.grid[k - 1], self.grid[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (s - g0) / (g1 - g0)
    }
}

/// Tabulates `P(|Y| <= s r | entered)` for `|x| / r = ratio` on 512 cells,
/// integrating `rho^{d-1} (1 - rho^2)^{-alpha/2}` against the sphere mean of
/// `|x - y|^{-d}` computed by quadrature.
pub fn entrance_radial_cdf_table(p: &StableParams, ratio: f64) -> Result<RadialCdf> {
    if !(ratio > 1.0) {
        return domain(format!("entrance law requires |x| > r, got |x|/r = {ratio}"));
    }
    let d = p.d();
    let df = p.df();
    let a = p.alpha();
    let ang = QuadratureSpec::relative(1e-11);
    let dens = |rho: f64, gap: f64| -> Result<f64> {
        let m = sphere_average_angle(
            |t| {
                let h = (0.5 * t).sin();
                let dist2 = (ratio - rho) * (ratio - rho) + 4.0 * ratio * rho * h * h;
                Ok(dist2.powf(-0.5 * df))
            },
            d,
            &ang,
        )?;
        Ok(rho.powi(d as i32 - 1) * (gap * (1.0 + rho)).powf(-0.5 * a) * m)
    };
    // cells uniform in w = (1 - rho^2)^{1 - alpha/2}, which flattens the edge singularity
    let kappa = 1.0 - a / 2.0;
    let cells = 512;
    let mut grid: Vec<f64> = (0..=cells)
        .map(|k| {
            let w = 1.0 - k as f64 / cells as f64;
            (1.0 - w.powf(1.0 / kappa)).max(0.0).sqrt()
        })
        .collect();
    grid[cells] = 1.0;
    let spec = QuadratureSpec::relative(1e-10);
    let mut values = vec![0.0];
    let mut acc = 0.0;
    for k in 0..cells {
        let (lo, hi) = (grid[k], grid[k + 1]);
        let piece = if k + 1 == cells {
            // endpoint singularity at rho = 1: integrate in s = 1 - rho
            try_integrate(|s| dens(1.0 - s, s), 0.0, hi - lo, &spec.clone().with_hints([0.0]))?.value
        } else {
            try_integrate(|rho| dens(rho, 1.0 - rho), lo, hi, &spec)?.value
        };
        acc += piece;
        values.push(acc);
    }
    for v in values.iter_mut() {
        *v /= acc;
    }
    Ok(RadialCdf { grid, values })
}

/// Result of one experiment: the estimate, its reference and, where the
/// experiment produces a sample law, the KS distance to the reference law.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub estimate: MonteCarloEstimate,
    pub reference: f64,
    pub ks: Option<f64>,
}

struct WorkerOutput {
    moments: Moments,
    samples: Vec<f64>,
}

fn run_worker(p: &StableParams, exp: &Experiment, n: u64, seed: SeedSpec, keep: bool) -> Result<WorkerOutput> {
    let mut rng = seed.rng();
    let mut moments = Moments::default();
    let mut samples = Vec::with_capacity(if keep { n as usize } else { 0 });
    let x0 = exp.x0();
    let xn = x0.norm();
    match exp {
        Experiment::Survival { r, dt, .. } => {
            let walk =
                Walk { rule: StepRule::RadiusScaled(*dt), inner_r: *r, outer_r: Some(TRUNCATION_FACTOR * xn), horizon: f64::INFINITY };
            for _ in 0..n {
                let rec = walk.run(p, x0, &mut rng, &mut |_, _| {});
                moments.push(if rec.exit_reason == ExitReason::HitInner { 0.0 } else { 1.0 });
            }
        }
        Experiment::ClosestReachRadial { dt, .. } => {
            let walk =
                Walk { rule: StepRule::RadiusScaled(*dt), inner_r: 0.0, outer_r: Some(TRUNCATION_FACTOR * xn), horizon: f64::INFINITY };
            for _ in 0..n {
                let rec = walk.run(p, x0, &mut rng, &mut |_, _| {});
                let v = (rec.min_radius / xn).powi(2);
                moments.push(v);
                if keep {
                    samples.push(v);
                }
            }
        }
        Experiment::FirstEntrancePosition { r, dt, .. } => {
            let sampler = match dt {
                None => Some(FirstEntranceSampler::new(p, x0, *r)?),
                Some(_) => None,
            };
            let walk = dt.map(|dt| Walk {
                rule: StepRule::RadiusScaled(dt),
                inner_r: *r,
                outer_r: Some(TRUNCATION_FACTOR * xn),
                horizon: f64::INFINITY,
            });
            let mut done = 0;
            // n counts entering paths; non-entering draws are discarded
            while done < n {
                let y = match (&sampler, &walk) {
                    (Some(s), _) => s.sample(&mut rng)?,
                    (None, Some(w)) => {
                        let rec = w.run(p, x0, &mut rng, &mut |_, _| {});
                        if rec.exit_reason == ExitReason::HitInner {
                            rec.first_passage_position
                        } else {
                            None
                        }
                    }
                    _ => unreachable!("either the sampler or the walk is set"),
                };
                if let Some(y) = y {
                    let v = y.norm() / r;
                    moments.push(v);
                    if keep {
                        samples.push(v);
                    }
                    done += 1;
                }
            }
        }
        Experiment::ReflectedStationary { dt, doublings, .. } => {
            let horizon = (2f64.powi(*doublings as i32) * xn).powf(p.alpha());
            let walk = Walk { rule: StepRule::RadiusScaled(*dt), inner_r: 0.0, outer_r: None, horizon };
            for _ in 0..n {
                let rec = walk.run(p, x0, &mut rng, &mut |_, _| {});
                let v = (rec.final_point.norm() / rec.max_radius).powi(2);
                moments.push(v);
            }
        }
        Experiment::Occupation { r, lo, hi, dt, .. } => {
            let walk = Walk { rule: StepRule::Uniform(*dt), inner_r: 0.0, outer_r: Some(*r), horizon: f64::INFINITY };
            for _ in 0..n {
                let mut occ = 0.0;
                walk.run(p, x0, &mut rng, &mut |x, h| {
                    let rr = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if rr >= *lo && rr < *hi {
                        occ += h;
                    }
                });
                moments.push(occ);
            }
        }
    }
    Ok(WorkerOutput { moments, samples })
}

/// Runs `n` samples of an experiment split over `workers` threads.
///
/// Worker `w` draws `n / workers` samples (the first `n % workers` workers
/// one more) from the stream of `SeedSpec { master, w }`; results are merged
/// in worker order, so the outcome depends only on `(seed, workers, n)`.
pub fn estimate(p: &StableParams, exp: &Experiment, n: u64, master_seed: u64, workers: usize) -> Result<ExperimentOutcome> {
    exp.validate(p)?;
    if n < 100 {
        return domain(format!("estimate requires n >= 100, got {n}"));
    }
    if workers == 0 {
        return domain("workers must be at least 1");
    }
    let reference = exp.reference(p)?;
    let cdf = exp.sample_cdf(p)?;
    let keep = cdf.is_some();
    let w = workers as u64;
    let seed = SeedSpec::new(master_seed, 0);
    let outputs: Vec<Result<WorkerOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..w)
            .map(|k| {
                let count = n / w + u64::from(k < n % w);
                let ws = seed.worker(k);
                s.spawn(move || run_worker(p, exp, count, ws, keep))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation worker panicked")).collect()
    });
    let mut moments = Moments::default();
    let mut samples = Vec::new();
    for out in outputs {
        let out = out?;
        moments = moments.merge(&out.moments);
        samples.extend(out.samples);
    }
    let ks = cdf.map(|f| ks_statistic(&samples, f));
    Ok(ExperimentOutcome {
        estimate: MonteCarloEstimate { mean: moments.mean, stderr: moments.stderr(), n: moments.n, seed, workers },
        reference,
        ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference splitmix64 generator seeded with 0
        assert_eq!(splitmix64(GOLDEN_GAMMA), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(GOLDEN_GAMMA.wrapping_mul(2)), 0x6E78_9E6A_A1B9_65F4);
        let a = SeedSpec::new(42, 0).stream_seed();
        let b = SeedSpec::new(42, 1).stream_seed();
        assert_ne!(a, b);
        assert_eq!(SeedSpec::new(42, 3).stream_seed(), splitmix64(42u64.wrapping_add(3u64.wrapping_mul(GOLDEN_GAMMA))));
    }

    #[test]
    fn one_sided_positive_and_rejects_bad_beta() {
        let mut rng = SeedSpec::new(1, 0).rng();
        for _ in 0..10_000 {
            assert!(sample_one_sided_stable(0.3, &mut rng).unwrap() > 0.0);
        }
        assert!(sample_one_sided_stable(1.0, &mut rng).is_err());
    }

    #[test]
    fn laplace_transform() {
        let mut rng = SeedSpec::new(7, 0).rng();
        let mut m = Moments::default();
        for _ in 0..100_000 {
            m.push((-sample_one_sided_stable(0.7, &mut rng).unwrap()).exp());
        }
        assert!((m.mean - (-1f64).exp()).abs() < 3.0 * m.stderr(), "{} +- {}", m.mean, m.stderr());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 37) % 101) as f64 * 0.1).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert_eq!(m.n, all.n);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 - all.m2).abs() < 1e-8 * all.m2);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&xs, |x| x) <= 0.0005 + 1e-12);
    }

    #[test]
    fn zero_horizon_path() {
        let p = StableParams::new(2, 1.0).unwrap();
        let x0 = Point::new(vec![1.0, 0.0]);
        let rec = simulate_path(&p, &x0, 1e-3, 0.0, None, 0.0, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(rec.min_radius, 1.0);
        assert_eq!(rec.exit_reason, ExitReason::Horizon);
        assert_eq!(rec.steps, 0);
    }

    #[test]
    fn path_is_deterministic() {
        let p = StableParams::new(3, 1.3).unwrap();
        let x0 = Point::new(vec![1.0, 0.5, 0.0]);
        let a = simulate_path(&p, &x0, 1e-3, 0.5, Some(5.0), 10.0, SeedSpec::new(9, 2)).unwrap();
        let b = simulate_path(&p, &x0, 1e-3, 0.5, Some(5.0), 10.0, SeedSpec::new(9, 2)).unwrap();
        assert_eq!(a, b);
        assert!(a.min_radius <= x0.norm());
        assert!((a.argmin_point.norm() - a.min_radius).abs() < 1e-12);
    }

    #[test]
    fn entrance_sampler_none_rate_and_symmetry() {
        let p = StableParams::new(2, 1.0).unwrap();
        let x = Point::new(vec![2.0, 0.0]);
        let s = FirstEntranceSampler::new(&p, &x, 1.0).unwrap();
        let mut rng = SeedSpec::new(3, 0).rng();
        let (mut none, mut orth) = (Moments::default(), Moments::default());
        for _ in 0..20_000 {
            match s.sample(&mut rng).unwrap() {
                None => none.push(1.0),
                Some(y) => {
                    none.push(0.0);
                    assert!(y.norm() < 1.0);
                    orth.push(y[1] / y.norm());
                }
            }
        }
        assert!((none.mean - 2.0 / 3.0).abs() < 3.0 * none.stderr());
        assert!(orth.mean.abs() < 3.0 * orth.stderr());
    }

    #[test]
    fn sampler_table_matches_quadrature_cdf() {
        let p = StableParams::new(3, 1.4).unwrap();
        let x = Point::new(vec![0.0, 1.6, 0.0]);
        let s = FirstEntranceSampler::new(&p, &x, 1.0).unwrap();
        let table = entrance_radial_cdf_table(&p, 1.6).unwrap();
        let mut rng = SeedSpec::new(5, 0).rng();
        let rs: Vec<f64> = (0..20_000).map(|_| s.sample_radius(&mut rng)).collect();
        assert!(ks_statistic(&rs, |v| table.eval(v)) < 0.015);
    }

    #[test]
    fn estimate_rejects_small_n_and_is_deterministic() {
        let p = StableParams::new(2, 1.0).unwrap();
        let exp = Experiment::FirstEntrancePosition { x0: Point::new(vec![2.0, 0.0]), r: 1.0, dt: None };
        assert!(estimate(&p, &exp, 50, 1, 2).is_err());
        let a = estimate(&p, &exp, 2000, 11, 3).unwrap();
        let b = estimate(&p, &exp, 2000, 11, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimate.n, 2000);
        assert!(a.ks.unwrap() < 0.05);
    }
}
