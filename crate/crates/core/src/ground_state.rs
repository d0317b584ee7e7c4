//! Positive radial ground states of `-a Δf + s f = s f^{p-1}` on `R^n`.
//!
//! The ground state is found by bisection on `β = f(0)`: too large a `β`
//! overshoots and crosses zero, too small a `β` turns around at a positive
//! local minimum. The decaying solution is unstable under forward
//! integration, so a single bracket only resolves it up to the point where the
//! two bracketing trajectories separate. From there the profile is continued
//! by re-shooting on the logarithmic slope `f'/f` at the last reliable node,
//! which keeps the stored grid accurate all the way to its far end.

use serde::{Deserialize, Serialize};

use crate::dims::ProblemDims;
use crate::error::{Error, Result};
use crate::radial_ode::{
    classify_default, integrate, integrate_from, RadialIvp, Sampling, Tolerances, Trajectory,
    TrajectoryClass,
};
use crate::scalar::{from_usize, lit, Scalar};

/// Which normalization of the ground-state equation a profile solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    /// `-a_N Δf + s_g f = s_g f^{p-1}`.
    Yamabe,
    /// `-Δw + w = w^{p-1}`.
    Unit,
}

impl Equation {
    /// Coefficient `κ` in the radial form `f'' + ((n-1)/t) f' = κ (f - f^{p-1})`.
    pub fn kappa<T: Scalar>(self, dims: &ProblemDims<T>) -> T {
        match self {
            Equation::Yamabe => dims.kappa(),
            Equation::Unit => T::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Equation::Yamabe => "yamabe",
            Equation::Unit => "unit",
        }
    }
}

/// Parameters of the shooting solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingSettings<T> {
    /// Bracket width on `β` at which bisection stops, relative to `β`.
    pub tol_beta: T,
    pub tolerances: Tolerances<T>,
    /// Number of grid intervals of the stored profile.
    pub grid_nodes: usize,
    /// Shooting horizon in units of the decay length `1/μ`.
    pub horizon_factor: T,
    /// Extent of the stored grid in units of `1/μ`.
    pub grid_factor: T,
    pub max_iterations: usize,
    /// Relative gap between bracketing trajectories beyond which they are no
    /// longer trusted.
    pub separation_tol: T,
    pub max_segments: usize,
}

impl<T: Scalar> Default for ShootingSettings<T> {
    fn default() -> Self {
        Self {
            tol_beta: lit(1e-12),
            tolerances: Tolerances::default(),
            grid_nodes: 4096,
            horizon_factor: lit(40.0),
            grid_factor: lit(25.0),
            max_iterations: 400,
            separation_tol: lit(1e-8),
            max_segments: 64,
        }
    }
}

/// How a profile was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileDiagnostics<T> {
    pub beta_bracket: (T, T),
    pub bisection_iterations: usize,
    /// Number of slope re-shootings used to extend the profile.
    pub continuation_segments: usize,
    /// Decay rate from a free two-parameter fit of the tail (diagnostic only).
    pub fitted_tail_rate: T,
    pub tol_beta: T,
    pub rtol: T,
    pub atol: T,
}

/// A radial function sampled on a uniform grid with an exponential tail.
///
/// For `t > t_grid` the profile is `A t^{-(n-1)/2} e^{-μ t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T> {
    pub dims: ProblemDims<T>,
    pub equation: Equation,
    pub spacing: T,
    pub values: Vec<T>,
    pub derivs: Vec<T>,
    pub tail_rate: T,
    pub tail_amplitude: T,
    pub beta: T,
    pub diagnostics: ProfileDiagnostics<T>,
}

impl<T: Scalar> RadialProfile<T> {
    /// Wraps samples `values[i] = f(i h)`, `derivs[i] = f'(i h)` and fits the
    /// tail with the decay rate implied by `equation`.
    pub fn from_samples(
        dims: ProblemDims<T>,
        equation: Equation,
        spacing: T,
        values: Vec<T>,
        derivs: Vec<T>,
    ) -> Result<Self> {
        if values.len() != derivs.len() || values.len() < 11 {
            return Err(Error::InvalidInput(format!(
                "profile needs matching value/derivative samples (>= 11), got {} and {}",
                values.len(),
                derivs.len()
            )));
        }
        if !(spacing > T::zero()) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        let tail_rate = equation.kappa(&dims).sqrt();
        let mut profile = Self {
            dims,
            equation,
            spacing,
            beta: values[0],
            values,
            derivs,
            tail_rate,
            tail_amplitude: T::zero(),
            diagnostics: ProfileDiagnostics {
                beta_bracket: (T::zero(), T::zero()),
                bisection_iterations: 0,
                continuation_segments: 0,
                fitted_tail_rate: T::nan(),
                tol_beta: T::zero(),
                rtol: T::zero(),
                atol: T::zero(),
            },
        };
        let (amplitude, fitted) = profile.fit_tail()?;
        profile.tail_amplitude = amplitude;
        profile.diagnostics.fitted_tail_rate = fitted;
        Ok(profile)
    }

    /// Number of grid intervals.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn t_grid(&self) -> T {
        from_usize::<T>(self.intervals()) * self.spacing
    }

    pub fn node(&self, i: usize) -> T {
        from_usize::<T>(i) * self.spacing
    }

    fn tail_power(&self) -> T {
        (self.dims.n_scalar() - T::one()) * lit(0.5)
    }

    /// Least-squares fit of `log f + ((n-1)/2) log t = log A - μ t` over the
    /// last tenth of the grid. Returns `A` with `μ` fixed, and the free-fit `μ`.
    fn fit_tail(&self) -> Result<(T, T)> {
        let m = self.intervals();
        let start = (m - m / 10).max(1);
        let power = self.tail_power();
        let mut sum_y = T::zero();
        let mut sum_t = T::zero();
        let mut sum_tt = T::zero();
        let mut sum_ty = T::zero();
        let mut count = 0usize;
        for i in start..=m {
            let f = self.values[i];
            if !(f > T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "tail fit needs positive samples, f({}) = {f}",
                    self.node(i)
                )));
            }
            let t = self.node(i);
            let y = f.ln() + power * t.ln();
            sum_y = sum_y + y + self.tail_rate * t;
            sum_t = sum_t + t;
            sum_tt = sum_tt + t * t;
            sum_ty = sum_ty + t * y;
            count += 1;
        }
        let k = from_usize::<T>(count);
        let log_amplitude = sum_y / k;
        // Free fit: y = c - μ t over the same window.
        let sum_y_raw = sum_y - self.tail_rate * sum_t;
        let slope = (k * sum_ty - sum_t * sum_y_raw) / (k * sum_tt - sum_t * sum_t);
        Ok((log_amplitude.exp(), -slope))
    }

    fn tail(&self, t: T) -> (T, T) {
        let power = self.tail_power();
        let f = self.tail_amplitude * t.powf(-power) * (-self.tail_rate * t).exp();
        (f, -f * (self.tail_rate + power / t))
    }

    /// Value and derivative at `t >= 0` without argument checking.
    pub fn value_and_deriv(&self, t: T) -> (T, T) {
        let m = self.intervals();
        let t_grid = self.t_grid();
        if t > t_grid {
            return self.tail(t);
        }
        let x = t / self.spacing;
        let mut i = x.floor().to_usize().unwrap_or(0);
        if i >= m {
            i = m - 1;
        }
        let h = self.spacing;
        let s = x - from_usize::<T>(i);
        let (fa, fb) = (self.values[i], self.values[i + 1]);
        let (da, db) = (self.derivs[i], self.derivs[i + 1]);
        let two: T = lit(2.0);
        let three: T = lit(3.0);
        let six: T = lit(6.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (two * s3 - three * s2 + T::one()) * fa
            + (s3 - two * s2 + s) * h * da
            + (-two * s3 + three * s2) * fb
            + (s3 - s2) * h * db;
        let deriv = ((six * s2 - six * s) * fa + (-six * s2 + six * s) * fb) / h
            + (three * s2 - two * s * two + T::one()) * da
            + (three * s2 - two * s) * db;
        (value, deriv)
    }

    #[inline]
    pub fn value(&self, t: T) -> T {
        self.value_and_deriv(t).0
    }

    /// Evaluates the profile: cubic Hermite on the grid, tail model beyond.
    pub fn eval(&self, t: T) -> Result<T> {
        if !(t >= T::zero()) {
            return Err(Error::InvalidInput(format!(
                "profile evaluated at t = {t} < 0"
            )));
        }
        Ok(self.value(t))
    }

    /// The profile `t ↦ f(factor · t)`.
    pub fn rescaled(&self, factor: T) -> Self {
        let power = self.tail_power();
        Self {
            dims: self.dims,
            equation: self.equation,
            spacing: self.spacing / factor,
            values: self.values.clone(),
            derivs: self.derivs.iter().map(|&d| d * factor).collect(),
            tail_rate: self.tail_rate * factor,
            tail_amplitude: self.tail_amplitude * factor.powf(-power),
            beta: self.beta,
            diagnostics: ProfileDiagnostics {
                fitted_tail_rate: self.diagnostics.fitted_tail_rate * factor,
                ..self.diagnostics
            },
        }
    }
}

/// Computes the ground state `f_K` of the Yamabe-normalized equation.
pub fn shoot_ground_state<T: Scalar>(
    dims: &ProblemDims<T>,
    settings: &ShootingSettings<T>,
) -> Result<RadialProfile<T>> {
    shoot(dims, Equation::Yamabe, settings)
}

/// Computes the ground state `w` of `-Δw + w = w^{p-1}`.
pub fn shoot_normalized<T: Scalar>(
    dims: &ProblemDims<T>,
    settings: &ShootingSettings<T>,
) -> Result<RadialProfile<T>> {
    shoot(dims, Equation::Unit, settings)
}

/// Maps a solution of `-Δw + w = w^{p-1}` to `f(t) = w(sqrt(s_g/a_N) t)`,
/// which solves the Yamabe-normalized equation.
pub fn rescale_normalized<T: Scalar>(
    w_profile: &RadialProfile<T>,
    dims: &ProblemDims<T>,
) -> Result<RadialProfile<T>> {
    if w_profile.equation != Equation::Unit {
        return Err(Error::DimensionMismatch(
            "rescaling expects a profile of the unit-coefficient equation".into(),
        ));
    }
    if w_profile.dims.n != dims.n || w_profile.dims.p != dims.p {
        return Err(Error::DimensionMismatch(format!(
            "profile has n = {}, p = {}; target has n = {}, p = {}",
            w_profile.dims.n, w_profile.dims.p, dims.n, dims.p
        )));
    }
    let mut out = w_profile.rescaled(dims.decay_rate());
    out.dims = *dims;
    out.equation = Equation::Yamabe;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// Overshoot: the trajectory crosses zero.
    Above,
    /// Undershoot: the trajectory turns around at a positive minimum.
    Below,
    Unresolved,
}

struct Shooter<'a, T> {
    dims: &'a ProblemDims<T>,
    settings: &'a ShootingSettings<T>,
    kappa: T,
    exponent: T,
    horizon: T,
}

impl<'a, T: Scalar> Shooter<'a, T> {
    fn source(&self) -> impl Fn(T, T) -> T {
        let kappa = self.kappa;
        let e = self.exponent;
        move |_t: T, u: T| kappa * (u - u.abs().powf(e) * u)
    }

    fn ivp(
        &self,
        u0: T,
        horizon: T,
        tolerances: Tolerances<T>,
    ) -> RadialIvp<T, impl Fn(T, T) -> T> {
        RadialIvp::new(self.dims.n, self.source(), u0, horizon).with_tolerances(tolerances)
    }

    fn side_of(
        trajectory: &Result<Trajectory<T>>,
        ivp_events: &crate::radial_ode::EventThresholds<T>,
    ) -> Result<Side> {
        let traj = match trajectory {
            Ok(t) => t,
            Err(e) => return Err(e.clone()),
        };
        Ok(match classify_default(traj, ivp_events) {
            Ok(TrajectoryClass::ZeroCrossing { .. }) => Side::Above,
            Ok(TrajectoryClass::LocalMin { .. }) => Side::Below,
            Err(Error::NotDecreasing { .. }) => Side::Below,
            Ok(TrajectoryClass::DecreasingPositive) | Err(Error::AmbiguousTrajectory { .. }) => {
                Side::Unresolved
            }
            Err(e) => return Err(e),
        })
    }

    /// Classifies `β`, retrying once with tighter tolerances and once with a
    /// doubled horizon when the outcome is ambiguous.
    fn beta_side(&self, beta: T) -> Result<Side> {
        let tol = self.settings.tolerances;
        let attempts = [
            (tol, self.horizon),
            (tol.scaled(lit(0.1)), self.horizon),
            (tol.scaled(lit(0.1)), self.horizon * lit(2.0)),
        ];
        for (tolerances, horizon) in attempts {
            let ivp = self.ivp(beta, horizon, tolerances);
            let side = Self::side_of(&integrate(&ivp), &ivp.events)?;
            if side != Side::Unresolved {
                return Ok(side);
            }
        }
        Ok(Side::Unresolved)
    }

    /// Same trichotomy for a restart at node time `t0` with slope `w u0`.
    fn slope_side(&self, t0: T, u0: T, w: T, tolerances: Tolerances<T>) -> Result<Side> {
        let horizon = t0 + self.horizon;
        let ivp = self.ivp(u0, horizon, tolerances);
        Self::side_of(&integrate_from(&ivp, t0, u0, w * u0), &ivp.events)
    }
}

fn bisect_sides<T: Scalar>(
    mut below: T,
    mut above: T,
    width_tol: impl Fn(T, T) -> bool,
    max_iterations: usize,
    what: &str,
    mut side: impl FnMut(T) -> Result<Side>,
) -> Result<(T, T, usize)> {
    let half: T = lit(0.5);
    let mut unresolved = 0usize;
    for iteration in 0..max_iterations {
        if width_tol(below, above) {
            return Ok((below, above, iteration));
        }
        let mid = below + (above - below) * half;
        if mid == below || mid == above {
            return Ok((below, above, iteration));
        }
        match side(mid)? {
            Side::Below => below = mid,
            Side::Above => above = mid,
            Side::Unresolved => {
                // Ambiguity concentrates at the root; shrink from alternating ends.
                if unresolved.is_multiple_of(2) {
                    below = mid;
                } else {
                    above = mid;
                }
                unresolved += 1;
            }
        }
    }
    Err(Error::NonConvergence {
        what: what.into(),
        iterations: max_iterations,
    })
}

/// Shoots the ground state of `equation` and stores it on a uniform grid.
pub fn shoot<T: Scalar>(
    dims: &ProblemDims<T>,
    equation: Equation,
    settings: &ShootingSettings<T>,
) -> Result<RadialProfile<T>> {
    if !(settings.tol_beta > T::zero()) {
        return Err(Error::InvalidInput("tol_beta must be positive".into()));
    }
    if settings.grid_nodes < 20 {
        return Err(Error::InvalidInput(
            "grid needs at least 20 intervals".into(),
        ));
    }
    let kappa = equation.kappa(dims);
    let mu = kappa.sqrt();
    let shooter = Shooter {
        dims,
        settings,
        kappa,
        exponent: dims.p - lit(2.0),
        horizon: settings.horizon_factor / mu,
    };

    // Bracket: [1 + 1e-3, 2], doubling the upper end until it overshoots.
    let mut below: T = lit(1.0 + 1e-3);
    if shooter.beta_side(below)? != Side::Below {
        return Err(Error::BracketNotFound(format!(
            "ground state: beta = {below} does not undershoot"
        )));
    }
    let mut above: T = lit(2.0);
    let cap: T = lit(32768.0);
    loop {
        match shooter.beta_side(above)? {
            Side::Above => break,
            _ if above >= cap => {
                return Err(Error::BracketNotFound(format!(
                    "ground state: no overshoot for beta up to {cap}"
                )))
            }
            _ => {
                below = above;
                above = above * lit(2.0);
            }
        }
    }

    let tol_beta = settings.tol_beta;
    let (below, above, iterations) = bisect_sides(
        below,
        above,
        |lo, hi| hi - lo <= tol_beta * hi,
        settings.max_iterations,
        "ground-state bisection",
        |beta| shooter.beta_side(beta),
    )?;

    let m = settings.grid_nodes;
    let spacing = settings.grid_factor / mu / from_usize::<T>(m);
    let t_grid = from_usize::<T>(m) * spacing;
    let uniform = Sampling::Uniform { spacing };
    let base_tol = settings.tolerances;

    let mut values = vec![T::nan(); m + 1];
    let mut derivs = vec![T::nan(); m + 1];
    let run_origin =
        |beta: T| integrate(&shooter.ivp(beta, t_grid, base_tol).with_sampling(uniform));
    let mut low = run_origin(below)?;
    let mut high = run_origin(above)?;
    let mut start = 0usize;
    let mut segments = 0usize;
    let beta = (below + above) * lit(0.5);

    loop {
        let len = low.grid.len().min(high.grid.len());
        let mut reach = None;
        for k in 0..len {
            let (ul, uh) = (low.values[k], high.values[k]);
            let (vl, vh) = (low.derivs[k], high.derivs[k]);
            let mid = (ul + uh) * lit(0.5);
            let decreasing = (start == 0 && k == 0) || (vl < T::zero() && vh < T::zero());
            let ok = ul > T::zero()
                && uh > T::zero()
                && decreasing
                && (ul - uh).abs() <= settings.separation_tol * mid;
            if !ok {
                break;
            }
            values[start + k] = mid;
            derivs[start + k] = (vl + vh) * lit(0.5);
            reach = Some(k);
        }
        let reach = reach.unwrap_or(0);
        if start + reach == m {
            break;
        }
        if reach == 0 {
            return Err(Error::NonConvergence {
                what: format!(
                    "ground-state continuation at t = {}",
                    from_usize::<T>(start) * spacing
                ),
                iterations: segments,
            });
        }
        segments += 1;
        if segments > settings.max_segments {
            return Err(Error::NonConvergence {
                what: "ground-state continuation".into(),
                iterations: segments,
            });
        }

        let r = start + reach;
        let t_r = from_usize::<T>(r) * spacing;
        let u_r = values[r];
        let tolerances = Tolerances {
            atol: base_tol.atol * (u_r / beta),
            ..base_tol
        };
        // Log-slopes: the overshooting trajectory is the steeper one.
        let w_steep = high.derivs[reach] / high.values[reach];
        let w_shallow = low.derivs[reach] / low.values[reach];
        let side = |w: T| shooter.slope_side(t_r, u_r, w, tolerances);
        let (mut shallow, mut steep) = (w_shallow, w_steep);
        let mut width = (shallow - steep)
            .abs()
            .max(T::epsilon() * steep.abs() * lit(16.0));
        let centre = (shallow + steep) * lit(0.5);
        let mut expansions = 0;
        while side(shallow)? != Side::Below || side(steep)? != Side::Above {
            expansions += 1;
            if expansions > 60 {
                return Err(Error::BracketNotFound(format!(
                    "ground-state continuation slope at t = {t_r}"
                )));
            }
            width = width * lit(2.0);
            shallow = centre + width;
            steep = centre - width;
        }
        // Bisection on the log-slope; `below` is the shallow end here.
        let (shallow, steep, _) = bisect_sides(
            shallow,
            steep,
            |_, _| false,
            settings.max_iterations,
            "ground-state continuation bisection",
            side,
        )?;
        let run = |w: T| {
            let ivp = shooter.ivp(u_r, t_grid, tolerances).with_sampling(uniform);
            integrate_from(&ivp, t_r, u_r, w * u_r)
        };
        low = run(shallow)?;
        high = run(steep)?;
        start = r;
    }

    if values.windows(2).any(|w| !(w[1] < w[0])) || values.iter().any(|&v| !(v > T::zero())) {
        return Err(Error::NonConvergence {
            what: "ground state is not positive and strictly decreasing on the grid".into(),
            iterations,
        });
    }

    let mut profile = RadialProfile::from_samples(*dims, equation, spacing, values, derivs)?;
    profile.beta = beta;
    profile.diagnostics = ProfileDiagnostics {
        beta_bracket: (below, above),
        bisection_iterations: iterations,
        continuation_segments: segments,
        tol_beta,
        rtol: base_tol.rtol,
        atol: base_tol.atol,
        ..profile.diagnostics
    };
    Ok(profile)
}
