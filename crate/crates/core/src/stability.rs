//! Stability threshold `λ(m, n)` and the curve `A(λ)`.
//!
//! Both are computed by bisection on the trichotomy of the linear radial
//! equation
//!
//! ```text
//! u'' + ((n-1)/t) u' + (C f^{p-2} - K) u = 0,   u(0) = 1, u'(0) = 0,
//! ```
//!
//! where `f` is the Yamabe-normalized ground state. Increasing `K` (or
//! decreasing `C`) moves a zero-crossing solution towards one with a positive
//! local minimum, and the critical parameter is the one whose solution stays
//! positive and decreasing.

use serde::{Deserialize, Serialize};

use crate::dims::ProblemDims;
use crate::error::{Error, Result};
use crate::ground_state::{Equation, RadialProfile};
use crate::radial_ode::{
    classify_default, integrate, linear_ivp, EventThresholds, Sampling, Tolerances, Trajectory,
    TrajectoryClass,
};
use crate::scalar::{lit, Scalar};

/// Parameters shared by the λ and α bisections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySettings<T> {
    /// Bracket width at which the λ and α bisections stop.
    pub tol: T,
    pub tolerances: Tolerances<T>,
    pub events: EventThresholds<T>,
    /// Classification horizon; `None` means `40 / sqrt(s_g / a_N)`.
    pub horizon: Option<T>,
    pub max_iterations: usize,
    /// Lower limit of the half-width of the marginal verdict band.
    pub marginal_band: T,
}

impl<T: Scalar> Default for StabilitySettings<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-6),
            tolerances: Tolerances::default(),
            events: EventThresholds::default(),
            horizon: None,
            max_iterations: 200,
            marginal_band: lit(1e-4),
        }
    }
}

impl<T: Scalar> StabilitySettings<T> {
    pub fn horizon_for(&self, dims: &ProblemDims<T>) -> T {
        self.horizon
            .unwrap_or_else(|| lit::<T>(40.0) / dims.decay_rate())
    }
}

/// Coefficients `C` and `K` of the linear equation at a given `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCoefficients<T> {
    /// `(p-1) s_g / a_N`.
    pub c: T,
    /// `s_g / a_N + λ`.
    pub k: T,
    pub lambda: T,
}

impl<T: Scalar> LinearCoefficients<T> {
    pub fn new(dims: &ProblemDims<T>, lambda: T) -> Self {
        Self {
            c: (dims.p - T::one()) * dims.kappa(),
            k: dims.kappa() + lambda,
            lambda,
        }
    }
}

/// Upper end of the admissible λ range, `C f(0)^{p-2} - s_g/a_N`.
pub fn admissible_lambda_max<T: Scalar>(profile: &RadialProfile<T>) -> T {
    let dims = &profile.dims;
    let c = LinearCoefficients::new(dims, T::zero()).c;
    c * profile.beta.powf(dims.p - lit(2.0)) - dims.kappa()
}

fn check_profile<T: Scalar>(profile: &RadialProfile<T>) -> Result<()> {
    if profile.equation != Equation::Yamabe {
        return Err(Error::InvalidInput(
            "stability computations need the Yamabe-normalized ground state".into(),
        ));
    }
    Ok(())
}

/// Integrates `u'' + ((n-1)/t) u' + (c f^{p-2} - k) u = 0` from `u(0) = 1`.
fn linear_trajectory_ck<T: Scalar>(
    profile: &RadialProfile<T>,
    c: T,
    k: T,
    horizon: T,
    settings: &StabilitySettings<T>,
    sampling: Sampling<T>,
) -> Result<Trajectory<T>> {
    let exponent = profile.dims.p - lit(2.0);
    let q = move |t: T| c * profile.value(t).powf(exponent) - k;
    let ivp = linear_ivp(profile.dims.n, q, T::one(), horizon)
        .with_tolerances(settings.tolerances)
        .with_events(settings.events)
        .with_sampling(sampling);
    integrate(&ivp)
}

/// Solves the λ-dependent linear equation and returns the samples.
pub fn linear_trajectory<T: Scalar>(
    profile: &RadialProfile<T>,
    lambda: T,
    horizon: T,
    settings: &StabilitySettings<T>,
    sampling: Sampling<T>,
) -> Result<Trajectory<T>> {
    check_profile(profile)?;
    let coeffs = LinearCoefficients::new(&profile.dims, lambda);
    let lambda_max = admissible_lambda_max(profile);
    if !(lambda >= T::zero()) || !(lambda < lambda_max) {
        return Err(Error::CoefficientPrecondition {
            lambda: lambda.to_f64().unwrap_or(f64::NAN),
            lambda_max: lambda_max.to_f64().unwrap_or(f64::NAN),
        });
    }
    linear_trajectory_ck(profile, coeffs.c, coeffs.k, horizon, settings, sampling)
}

/// Trichotomy class of the linear solution at `λ`.
pub fn classify_at_lambda<T: Scalar>(
    profile: &RadialProfile<T>,
    lambda: T,
    horizon: T,
    settings: &StabilitySettings<T>,
) -> Result<TrajectoryClass<T>> {
    let trajectory = linear_trajectory(profile, lambda, horizon, settings, Sampling::Steps)?;
    classify_default(&trajectory, &settings.events)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Probe {
    Zero,
    Min,
    Unresolved,
}

/// Classifies with one horizon doubling when the outcome is ambiguous.
fn probe<T: Scalar>(
    horizon: T,
    used: &mut T,
    mut run: impl FnMut(T) -> Result<Trajectory<T>>,
    events: &EventThresholds<T>,
) -> Result<Probe> {
    for h in [horizon, horizon * lit(2.0)] {
        *used = used.max(h);
        let trajectory = run(h)?;
        match classify_default(&trajectory, events) {
            Ok(TrajectoryClass::ZeroCrossing { .. }) => return Ok(Probe::Zero),
            Ok(TrajectoryClass::LocalMin { .. }) => return Ok(Probe::Min),
            Err(Error::NotDecreasing { .. }) => return Ok(Probe::Min),
            Ok(TrajectoryClass::DecreasingPositive) | Err(Error::AmbiguousTrajectory { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Probe::Unresolved)
}

/// Bisection on a bracket `[zero_end, min_end]` (either order).
fn bisect<T: Scalar>(
    mut zero_end: T,
    mut min_end: T,
    tol: T,
    max_iterations: usize,
    what: &str,
    mut side: impl FnMut(T) -> Result<Probe>,
) -> Result<(T, T, usize, usize)> {
    let mut unresolved = 0usize;
    for iteration in 0..max_iterations {
        if (min_end - zero_end).abs() < tol {
            return Ok((zero_end, min_end, iteration, unresolved));
        }
        let mid = zero_end + (min_end - zero_end) * lit(0.5);
        if mid == zero_end || mid == min_end {
            return Ok((zero_end, min_end, iteration, unresolved));
        }
        match side(mid)? {
            Probe::Zero => zero_end = mid,
            Probe::Min => min_end = mid,
            Probe::Unresolved => {
                if unresolved.is_multiple_of(2) {
                    zero_end = mid;
                } else {
                    min_end = mid;
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

/// Converged stability threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaResult<T> {
    pub lambda_mn: T,
    /// `(λ_lo, λ_hi)`: zero crossing at `λ_lo`, local minimum at `λ_hi`.
    pub bracket: (T, T),
    pub iterations: usize,
    pub horizon_used: T,
    pub ground_state_beta: T,
    pub tol: T,
    /// Probes whose class could not be resolved at the doubled horizon.
    pub unresolved_probes: usize,
}

/// Computes `λ(m, n)` by bisection on `[0, C f(0)^{p-2} - s_g/a_N)`.
pub fn find_lambda<T: Scalar>(
    profile: &RadialProfile<T>,
    settings: &StabilitySettings<T>,
) -> Result<LambdaResult<T>> {
    check_profile(profile)?;
    if !(settings.tol > T::zero()) {
        return Err(Error::InvalidInput(
            "lambda tolerance must be positive".into(),
        ));
    }
    let horizon = settings.horizon_for(&profile.dims);
    let boundary = admissible_lambda_max(profile);
    let cap = boundary - boundary.abs().max(T::one()) * lit(1e-6);
    let mut used = T::zero();
    let mut side = |lambda: T| {
        probe(
            horizon,
            &mut used,
            |h| linear_trajectory(profile, lambda, h, settings, Sampling::Steps),
            &settings.events,
        )
    };
    if side(T::zero())? != Probe::Zero {
        return Err(Error::BracketNotFound(
            "lambda = 0 does not produce a zero crossing".into(),
        ));
    }
    if side(cap)? != Probe::Min {
        return Err(Error::BracketNotFound(format!(
            "lambda = {cap} near the admissible boundary does not produce a local minimum"
        )));
    }
    let (lo, hi, iterations, unresolved) = bisect(
        T::zero(),
        cap,
        settings.tol,
        settings.max_iterations,
        "lambda bisection",
        &mut side,
    )?;
    Ok(LambdaResult {
        lambda_mn: (lo + hi) * lit(0.5),
        bracket: (lo, hi),
        iterations,
        horizon_used: used,
        ground_state_beta: profile.beta,
        tol: settings.tol,
        unresolved_probes: unresolved,
    })
}

/// `A(λ)`: the critical `α` of `-a_N Δb + (s_g + a_N λ) b = α f^{p-2} b`.
///
/// Below the critical `α` the radial solution turns around at a positive
/// minimum; above it the solution crosses zero. The lower end of the bracket
/// is `s_g f(0)^{2-p}`, at which the solution is not even initially
/// decreasing.
pub fn a_of_lambda<T: Scalar>(
    profile: &RadialProfile<T>,
    lambda: T,
    settings: &StabilitySettings<T>,
) -> Result<T> {
    let (lo, hi) = a_of_lambda_bracket(profile, lambda, settings)?;
    Ok((lo + hi) * lit(0.5))
}

/// Final `(α_lo, α_hi)` bracket of `A(λ)`: local minimum at `α_lo`, zero
/// crossing at `α_hi`, width below `settings.tol`.
pub fn a_of_lambda_bracket<T: Scalar>(
    profile: &RadialProfile<T>,
    lambda: T,
    settings: &StabilitySettings<T>,
) -> Result<(T, T)> {
    check_profile(profile)?;
    if !(lambda >= T::zero()) {
        return Err(Error::InvalidInput(format!(
            "A(lambda) needs lambda >= 0, got {lambda}"
        )));
    }
    let dims = &profile.dims;
    let horizon = settings.horizon_for(dims);
    let k = dims.kappa() + lambda;
    let f0_pow = profile.beta.powf(dims.p - lit(2.0));
    let mut used = T::zero();
    let mut side = |alpha: T| {
        let c = alpha / dims.a_n;
        if !(c * f0_pow > k) {
            return Ok(Probe::Min);
        }
        probe(
            horizon,
            &mut used,
            |h| linear_trajectory_ck(profile, c, k, h, settings, Sampling::Steps),
            &settings.events,
        )
    };
    let alpha_lo = lower_bound_a(profile);
    let mut below = alpha_lo;
    let mut above = alpha_lo.max((dims.p - T::one()) * dims.s_g) * lit(2.0);
    let mut doublings = 0;
    while side(above)? != Probe::Zero {
        doublings += 1;
        if doublings > 60 {
            return Err(Error::BracketNotFound(format!(
                "A({lambda}): no zero crossing for large alpha"
            )));
        }
        below = above;
        above = above * lit(2.0);
    }
    let (zero_end, min_end, _, _) = bisect(
        above,
        below,
        settings.tol,
        settings.max_iterations,
        "alpha bisection",
        &mut side,
    )?;
    Ok((min_end, zero_end))
}

/// Lower bound `s_g f(0)^{2-p}` of `A(λ)` for every `λ >= 0`.
pub fn lower_bound_a<T: Scalar>(profile: &RadialProfile<T>) -> T {
    let dims = &profile.dims;
    dims.s_g * profile.beta.powf(lit::<T>(2.0) - dims.p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Stable => "Stable",
            Verdict::Unstable => "Unstable",
            Verdict::Marginal => "Marginal",
        }
    }
}

/// Stability of the ground state over `(M, g)` with first eigenvalue `λ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport<T> {
    pub m: u32,
    pub n: u32,
    pub lambda_1: T,
    pub lambda_mn: T,
    pub verdict: Verdict,
    /// Half-width of the band around `λ(m, n)` reported as marginal.
    pub band: T,
    /// `m >= λ(m, n)`: every Yamabe metric on `M` has `λ₁ >= m`, so this
    /// makes the ground state stable for all of them.
    pub yamabe_metric_sufficient: bool,
}

pub fn stability_verdict<T: Scalar>(
    dims: &ProblemDims<T>,
    lambda_1: T,
    result: &LambdaResult<T>,
    settings: &StabilitySettings<T>,
) -> Result<StabilityReport<T>> {
    if !(lambda_1 > T::zero()) || !lambda_1.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lambda_1 must be positive, got {lambda_1}"
        )));
    }
    let band = result.tol.max(settings.marginal_band);
    let lambda_mn = result.lambda_mn;
    let verdict = if lambda_1 >= lambda_mn + band {
        Verdict::Stable
    } else if lambda_1 <= lambda_mn - band {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    };
    Ok(StabilityReport {
        m: dims.m,
        n: dims.n,
        lambda_1,
        lambda_mn,
        verdict,
        band,
        yamabe_metric_sufficient: dims.m_scalar() >= lambda_mn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dims::make_dims;
    use crate::ground_state::{shoot_ground_state, ShootingSettings};

    fn profile(m: u32, n: u32) -> RadialProfile<f64> {
        let dims = make_dims::<f64>(m, n).unwrap();
        shoot_ground_state(&dims, &ShootingSettings::default()).unwrap()
    }

    #[test]
    fn coefficients() {
        let dims = make_dims::<f64>(2, 2).unwrap();
        let c = LinearCoefficients::new(&dims, 0.5);
        assert!((c.c - 3.0 * 2.0 / 6.0).abs() < 1e-15);
        assert!((c.k - (2.0 / 6.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn three_regimes_for_two_two() {
        let f = profile(2, 2);
        let s = StabilitySettings::default();
        let h = s.horizon_for(&f.dims);
        assert!(matches!(
            classify_at_lambda(&f, 1.0, h, &s).unwrap(),
            TrajectoryClass::ZeroCrossing { .. }
        ));
        assert!(matches!(
            classify_at_lambda(&f, 2.5, h, &s).unwrap(),
            TrajectoryClass::LocalMin { .. }
        ));
    }

    #[test]
    fn precondition_violation_reports_range() {
        let f = profile(2, 2);
        let s = StabilitySettings::default();
        let max = admissible_lambda_max(&f);
        match classify_at_lambda(&f, max + 0.1, 50.0, &s) {
            Err(Error::CoefficientPrecondition { lambda_max, .. }) => {
                assert!((lambda_max - max).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            classify_at_lambda(&f, -0.1, 50.0, &s),
            Err(Error::CoefficientPrecondition { .. })
        ));
    }

    #[test]
    fn lambda_zero_variant_reproduces_ground_state() {
        // With C = K = s_g/a_N the function f/f(0) solves the linear equation.
        let f = profile(2, 2);
        let kappa = f.dims.kappa();
        let s = StabilitySettings::default();
        let horizon = 12.0;
        let traj = linear_trajectory_ck(&f, kappa, kappa, horizon, &s, Sampling::Steps).unwrap();
        for (t, u) in traj.grid.iter().zip(&traj.values) {
            let expected = f.value(*t) / f.beta;
            assert!((u - expected).abs() < 1e-8, "t = {t}: {u} vs {expected}");
        }
    }

    #[test]
    fn lambda_for_two_two() {
        let f = profile(2, 2);
        let s = StabilitySettings::default();
        let r = find_lambda(&f, &s).unwrap();
        assert!((r.lambda_mn - 1.8041).abs() < 2e-3, "{r:?}");
        assert!(r.bracket.1 - r.bracket.0 <= 2.0 * s.tol);
        assert!(r.bracket.0 < r.lambda_mn && r.lambda_mn < r.bracket.1);
        assert!(r.lambda_mn < admissible_lambda_max(&f));
        let h = s.horizon_for(&f.dims);
        assert!(matches!(
            classify_at_lambda(&f, r.bracket.0, h, &s).unwrap(),
            TrajectoryClass::ZeroCrossing { .. }
        ));
        assert!(matches!(
            classify_at_lambda(&f, r.bracket.1, h, &s).unwrap(),
            TrajectoryClass::LocalMin { .. }
        ));
    }

    #[test]
    fn verdicts() {
        let dims = make_dims::<f64>(2, 2).unwrap();
        let s = StabilitySettings::default();
        let result = LambdaResult {
            lambda_mn: 1.80405,
            bracket: (1.8040495, 1.8040505),
            iterations: 22,
            horizon_used: 69.0,
            ground_state_beta: 2.2,
            tol: 1e-6,
            unresolved_probes: 0,
        };
        let v = |l1: f64| stability_verdict(&dims, l1, &result, &s).unwrap().verdict;
        assert_eq!(v(2.0), Verdict::Stable);
        assert_eq!(v(1.0), Verdict::Unstable);
        assert_eq!(v(1.8041), Verdict::Marginal);
        assert!(
            stability_verdict(&dims, 2.0, &result, &s)
                .unwrap()
                .yamabe_metric_sufficient
        );
        assert!(matches!(
            stability_verdict(&dims, 0.0, &result, &s),
            Err(Error::InvalidInput(_))
        ));
    }
}
