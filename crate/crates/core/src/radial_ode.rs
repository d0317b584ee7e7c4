//! Radial initial value problems `u'' + ((n-1)/t) u' = S(t, u)` started at the
//! origin with `u'(0) = 0`.
//!
//! The `1/t` coordinate singularity is stepped over with a second-order Taylor
//! expansion, after which an adaptive Dormand-Prince 5(4) pair takes over. The
//! integrator stops at the first zero crossing or the first local minimum of
//! `u`, which is all the shooting solvers in this crate need to know.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Step-size control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    pub rtol: T,
    pub atol: T,
    /// Taylor start offset as a fraction of the horizon.
    pub start_fraction: T,
    /// Largest step as a fraction of the horizon.
    pub max_step_fraction: T,
    /// Steps below `min_step * max(1, t)` abort with [`Error::StepUnderflow`].
    pub min_step: T,
    pub max_steps: usize,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-10),
            atol: lit(1e-10),
            start_fraction: lit(1e-6),
            max_step_fraction: lit(1.0 / 64.0),
            min_step: lit(1e-14),
            max_steps: 2_000_000,
        }
    }
}

impl<T: Scalar> Tolerances<T> {
    /// Same controller with both tolerances multiplied by `factor`.
    pub fn scaled(self, factor: T) -> Self {
        Self {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
            ..self
        }
    }
}

/// Thresholds deciding whether a trajectory event is genuine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventThresholds<T> {
    /// A zero crossing fires once `u < -eps_zero`.
    pub eps_zero: T,
    /// A local minimum only counts when `u_min > eps_min_rel * |u(0)|`.
    pub eps_min_rel: T,
    /// Event times are refined to this absolute accuracy.
    pub time_tol: T,
}

impl<T: Scalar> Default for EventThresholds<T> {
    fn default() -> Self {
        Self {
            eps_zero: lit(1e-12),
            eps_min_rel: lit(1e-8),
            time_tol: lit(1e-10),
        }
    }
}

/// Which states the integrator keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling<T> {
    /// Every accepted step.
    Steps,
    /// Exactly the nodes `k * spacing`; steps are clipped to land on them.
    Uniform { spacing: T },
}

/// A radial IVP. `source(t, u)` is the right-hand side `S(t, u)`; for the
/// linear equation `u'' + ((n-1)/t) u' + q(t) u = 0` it is `-q(t) u`.
#[derive(Debug, Clone)]
pub struct RadialIvp<T, F> {
    pub n: u32,
    pub source: F,
    pub u0: T,
    pub horizon: T,
    pub tolerances: Tolerances<T>,
    pub events: EventThresholds<T>,
    pub sampling: Sampling<T>,
}

impl<T: Scalar, F: Fn(T, T) -> T> RadialIvp<T, F> {
    pub fn new(n: u32, source: F, u0: T, horizon: T) -> Self {
        Self {
            n,
            source,
            u0,
            horizon,
            tolerances: Tolerances::default(),
            events: EventThresholds::default(),
            sampling: Sampling::Steps,
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances<T>) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling<T>) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_events(mut self, events: EventThresholds<T>) -> Self {
        self.events = events;
        self
    }
}

/// Builds the linear IVP `u'' + ((n-1)/t) u' + q(t) u = 0`.
pub fn linear_ivp<T: Scalar, Q: Fn(T) -> T>(
    n: u32,
    q: Q,
    u0: T,
    horizon: T,
) -> RadialIvp<T, impl Fn(T, T) -> T> {
    RadialIvp::new(n, move |t, u| -q(t) * u, u0, horizon)
}

/// Why the integrator stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason<T> {
    /// `u` fell below `-eps_zero`; `t` is the refined root of `u`.
    ZeroCrossing {
        t: T,
    },
    /// `u'` changed sign from negative to non-negative while `u > 0`.
    LocalMin {
        t: T,
        u: T,
    },
    Horizon,
}

/// The three shooting outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryClass<T> {
    ZeroCrossing { t: T },
    LocalMin { t: T, u: T },
    DecreasingPositive,
}

impl<T> TrajectoryClass<T> {
    pub fn name(&self) -> &'static str {
        match self {
            TrajectoryClass::ZeroCrossing { .. } => "ZeroCrossing",
            TrajectoryClass::LocalMin { .. } => "LocalMin",
            TrajectoryClass::DecreasingPositive => "DecreasingPositive",
        }
    }
}

/// Samples of an integrated radial IVP.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub grid: Vec<T>,
    pub values: Vec<T>,
    pub derivs: Vec<T>,
    pub stop: StopReason<T>,
    /// State where integration actually ended (may lie between uniform nodes).
    pub end: (T, T, T),
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// `|u(0)|` of the problem, for relative thresholds.
    pub scale: T,
}

/// Second-order Taylor step off the origin.
///
/// Regularity at `t = 0` forces `u''(0) = S(0, u0) / n`, giving
/// `u(h0) = u0 + u''(0) h0^2 / 2` and `u'(h0) = u''(0) h0`.
pub fn taylor_start<T: Scalar, F: Fn(T, T) -> T>(ivp: &RadialIvp<T, F>, h0: T) -> (T, T, T) {
    let curvature = origin_curvature(ivp);
    let half: T = lit(0.5);
    (h0, ivp.u0 + half * curvature * h0 * h0, curvature * h0)
}

/// `u''(0)` of the regular solution.
pub fn origin_curvature<T: Scalar, F: Fn(T, T) -> T>(ivp: &RadialIvp<T, F>) -> T {
    (ivp.source)(T::zero(), ivp.u0) / T::from_u32(ivp.n).unwrap()
}

/// Integrates from the origin to the horizon or the first event.
pub fn integrate<T: Scalar, F: Fn(T, T) -> T>(ivp: &RadialIvp<T, F>) -> Result<Trajectory<T>> {
    if !(ivp.horizon > T::zero()) || !ivp.horizon.is_finite() {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive and finite, got {}",
            ivp.horizon
        )));
    }
    let h0 = ivp.tolerances.start_fraction * ivp.horizon;
    let (t1, u1, v1) = taylor_start(ivp, h0);
    let mut out = Recorder::new(ivp.sampling, T::zero());
    out.force(T::zero(), ivp.u0, T::zero());
    let stepper = Stepper::new(ivp);
    let a1 = stepper.accel(t1, [u1, v1]);
    stepper.run(t1, [u1, v1], a1, out)
}

/// Integrates from an interior state `(t0, u0, v0)` with `t0 > 0`.
///
/// With uniform sampling `t0` should itself be a node; it is recorded as the
/// first sample.
pub fn integrate_from<T: Scalar, F: Fn(T, T) -> T>(
    ivp: &RadialIvp<T, F>,
    t0: T,
    u0: T,
    v0: T,
) -> Result<Trajectory<T>> {
    if !(t0 > T::zero()) || !(ivp.horizon > t0) {
        return Err(Error::InvalidInput(format!(
            "interior start requires 0 < t0 < horizon (t0 = {t0}, horizon = {})",
            ivp.horizon
        )));
    }
    let mut out = Recorder::new(ivp.sampling, t0);
    out.force(t0, u0, v0);
    let stepper = Stepper::new(ivp);
    let a0 = stepper.accel(t0, [u0, v0]);
    stepper.run(t0, [u0, v0], a0, out)
}

/// Reads the trichotomy off a trajectory.
///
/// Local minima at or below `eps_min` and trajectories that reach the horizon
/// with `u` in `(0, eps_min]` are reported as [`Error::AmbiguousTrajectory`]:
/// the horizon or the arithmetic cannot separate the cases there.
pub fn classify<T: Scalar>(
    trajectory: &Trajectory<T>,
    eps_zero: T,
    eps_min: T,
) -> Result<TrajectoryClass<T>> {
    match trajectory.stop {
        StopReason::ZeroCrossing { t } => {
            let (_, u_end, _) = trajectory.end;
            debug_assert!(u_end < -eps_zero || u_end <= T::zero());
            Ok(TrajectoryClass::ZeroCrossing { t })
        }
        StopReason::LocalMin { t, u } => {
            if u > eps_min {
                Ok(TrajectoryClass::LocalMin { t, u })
            } else {
                Err(Error::AmbiguousTrajectory {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    u: u.to_f64().unwrap_or(f64::NAN),
                })
            }
        }
        StopReason::Horizon => {
            if let Some(i) = trajectory.derivs.iter().position(|&d| d > T::zero()) {
                return Err(Error::NotDecreasing {
                    t: trajectory.grid[i].to_f64().unwrap_or(f64::NAN),
                });
            }
            let (t_end, u_end, _) = trajectory.end;
            if u_end <= eps_min {
                return Err(Error::AmbiguousTrajectory {
                    t: t_end.to_f64().unwrap_or(f64::NAN),
                    u: u_end.to_f64().unwrap_or(f64::NAN),
                });
            }
            Ok(TrajectoryClass::DecreasingPositive)
        }
    }
}

/// [`classify`] with the thresholds the trajectory's IVP was built with.
pub fn classify_default<T: Scalar>(
    trajectory: &Trajectory<T>,
    events: &EventThresholds<T>,
) -> Result<TrajectoryClass<T>> {
    classify(
        trajectory,
        events.eps_zero,
        events.eps_min_rel * trajectory.scale,
    )
}

struct Recorder<T> {
    sampling: Sampling<T>,
    next_node: usize,
    grid: Vec<T>,
    values: Vec<T>,
    derivs: Vec<T>,
}

impl<T: Scalar> Recorder<T> {
    fn new(sampling: Sampling<T>, t0: T) -> Self {
        let next_node = match sampling {
            Sampling::Steps => 0,
            Sampling::Uniform { spacing } => (t0 / spacing).round().to_usize().unwrap_or(0),
        };
        Self {
            sampling,
            next_node,
            grid: Vec::new(),
            values: Vec::new(),
            derivs: Vec::new(),
        }
    }

    fn force(&mut self, t: T, u: T, v: T) {
        self.grid.push(t);
        self.values.push(u);
        self.derivs.push(v);
        if matches!(self.sampling, Sampling::Uniform { .. }) {
            self.next_node += 1;
        }
    }

    /// Time of the next node a step must not overshoot.
    fn barrier(&self) -> Option<T> {
        match self.sampling {
            Sampling::Steps => None,
            Sampling::Uniform { spacing } => Some(from_usize::<T>(self.next_node) * spacing),
        }
    }

    fn accept(&mut self, t: T, u: T, v: T, on_barrier: bool) {
        match self.sampling {
            Sampling::Steps => {
                self.grid.push(t);
                self.values.push(u);
                self.derivs.push(v);
            }
            Sampling::Uniform { .. } => {
                if on_barrier {
                    self.force(t, u, v);
                }
            }
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

type State<T> = [T; 2];

struct Stepper<'a, T, F> {
    ivp: &'a RadialIvp<T, F>,
    drift: T,
}

/// Endpoints of one accepted step.
#[derive(Clone, Copy)]
struct Segment<T> {
    ta: T,
    tb: T,
    ya: State<T>,
    yb: State<T>,
    aa: T,
}

impl<T: Scalar> Segment<T> {
    /// Root of `g` on the step, assuming `g(ta)` and `g(tb)` differ in sign.
    fn root(&self, g: impl Fn(T) -> T, tol: T) -> T {
        let mut lo = self.ta;
        let mut hi = self.tb;
        let g_lo = g(lo);
        let half: T = lit(0.5);
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = half * (lo + hi);
            let gm = g(mid);
            if (gm > T::zero()) == (g_lo > T::zero()) && gm != T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        half * (lo + hi)
    }
}

impl<'a, T: Scalar, F: Fn(T, T) -> T> Stepper<'a, T, F> {
    fn new(ivp: &'a RadialIvp<T, F>) -> Self {
        Self {
            ivp,
            drift: T::from_u32(ivp.n).unwrap() - T::one(),
        }
    }

    fn accel(&self, t: T, y: State<T>) -> T {
        (self.ivp.source)(t, y[0]) - self.drift / t * y[1]
    }

    /// State inside an accepted step, from a single sub-step off its start.
    /// This keeps event locations at integrator accuracy rather than
    /// interpolation accuracy.
    fn state_at(&self, seg: &Segment<T>, t: T) -> State<T> {
        if t <= seg.ta {
            return seg.ya;
        }
        self.attempt(seg.ta, seg.ya, [seg.ya[1], seg.aa], t - seg.ta)
            .0
    }

    fn rhs(&self, t: T, y: State<T>) -> State<T> {
        [y[1], self.accel(t, y)]
    }

    /// One Dormand-Prince attempt; returns the new state, its derivative and
    /// the scaled error norm.
    fn attempt(&self, t: T, y: State<T>, k1: State<T>, h: T) -> (State<T>, State<T>, T) {
        let c = |x: f64| -> T { lit(x) };
        let comb = |terms: &[(f64, &State<T>)]| -> State<T> {
            let mut out = y;
            for (w, k) in terms {
                for i in 0..2 {
                    out[i] = out[i] + h * c(*w) * k[i];
                }
            }
            out
        };
        let k2 = self.rhs(t + c(C2) * h, comb(&[(A21, &k1)]));
        let k3 = self.rhs(t + c(C3) * h, comb(&[(A31, &k1), (A32, &k2)]));
        let k4 = self.rhs(t + c(C4) * h, comb(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = self.rhs(
            t + c(C5) * h,
            comb(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = self.rhs(
            t + h,
            comb(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = comb(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = self.rhs(t + h, y_new);
        let tol = &self.ivp.tolerances;
        let mut err = T::zero();
        for i in 0..2 {
            let e = h
                * (c(E1) * k1[i]
                    + c(E3) * k3[i]
                    + c(E4) * k4[i]
                    + c(E5) * k5[i]
                    + c(E6) * k6[i]
                    + c(E7) * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !y_new[0].is_finite() || !y_new[1].is_finite() || !err.is_finite() {
            err = T::infinity();
        }
        (y_new, k7, err)
    }

    fn run(
        &self,
        t_start: T,
        y_start: State<T>,
        a_start: T,
        mut out: Recorder<T>,
    ) -> Result<Trajectory<T>> {
        let ivp = self.ivp;
        let tol = ivp.tolerances;
        let horizon = ivp.horizon;
        let h_max = tol.max_step_fraction * horizon;
        let eps_zero = ivp.events.eps_zero;
        let time_tol = ivp.events.time_tol;

        let mut t = t_start;
        let mut y = y_start;
        let mut a = a_start;
        let mut h = (t_start * lit(0.5))
            .max(tol.start_fraction * horizon)
            .min(h_max);
        let mut accepted = 0usize;
        let mut rejected = 0usize;
        // Step on which u first went non-positive, for refining the root.
        let mut sign_change: Option<Segment<T>> = None;

        // Uniform sampling may start a node ahead of `t`; drop nodes already passed.
        while let Some(b) = out.barrier() {
            if b > t {
                break;
            }
            out.next_node += 1;
        }

        loop {
            if t >= horizon {
                return Ok(self.finish(
                    out,
                    StopReason::Horizon,
                    (t, y[0], y[1]),
                    accepted,
                    rejected,
                ));
            }
            if accepted + rejected >= tol.max_steps {
                return Err(Error::NonConvergence {
                    what: "radial integration".into(),
                    iterations: accepted + rejected,
                });
            }
            let mut step = h.min(horizon - t);
            let mut on_barrier = false;
            if let Some(b) = out.barrier() {
                if b <= horizon && t + step >= b {
                    step = b - t;
                    on_barrier = true;
                }
            }
            let floor = tol.min_step * t.abs().max(T::one());
            if step < floor {
                return Err(Error::StepUnderflow {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    h: step.to_f64().unwrap_or(f64::NAN),
                    u: y[0].to_f64().unwrap_or(f64::NAN),
                    du: y[1].to_f64().unwrap_or(f64::NAN),
                });
            }
            let k1 = [y[1], a];
            let (y_new, k7, err) = self.attempt(t, y, k1, step);
            let safety: T = lit(0.9);
            let expo: T = lit(-0.2);
            if err > T::one() {
                rejected += 1;
                let factor = if err.is_finite() {
                    (safety * err.powf(expo)).max(lit(0.2))
                } else {
                    lit(0.1)
                };
                h = step * factor.min(T::one());
                continue;
            }
            accepted += 1;
            let t_new = if on_barrier {
                out.barrier().unwrap()
            } else {
                t + step
            };
            let seg = Segment {
                ta: t,
                tb: t_new,
                ya: y,
                yb: y_new,
                aa: a,
            };
            out.accept(t_new, y_new[0], y_new[1], on_barrier);

            let factor = if err == T::zero() {
                lit(5.0)
            } else {
                (safety * err.powf(expo)).max(lit(0.2)).min(lit(5.0))
            };
            // Keep the step proposal independent of barrier clipping.
            h = (h.max(step) * factor).min(h_max);
            t = t_new;
            y = y_new;
            a = k7[1];

            if y[0] <= T::zero() && sign_change.is_none() {
                sign_change = Some(seg);
            }
            if y[0] < -eps_zero {
                let first = sign_change.unwrap_or(seg);
                let t_zero = if first.ya[0] > T::zero() {
                    first.root(|s| self.state_at(&first, s)[0], time_tol)
                } else {
                    first.ta
                };
                return Ok(self.finish(
                    out,
                    StopReason::ZeroCrossing { t: t_zero },
                    (t, y[0], y[1]),
                    accepted,
                    rejected,
                ));
            }
            if y[0] > T::zero() {
                sign_change = None;
                if seg.ya[1] < T::zero() && seg.yb[1] >= T::zero() {
                    let t_min = seg.root(|s| self.state_at(&seg, s)[1], time_tol);
                    let u_min = self.state_at(&seg, t_min)[0].min(seg.ya[0]).min(seg.yb[0]);
                    return Ok(self.finish(
                        out,
                        StopReason::LocalMin { t: t_min, u: u_min },
                        (t, y[0], y[1]),
                        accepted,
                        rejected,
                    ));
                }
            }
        }
    }

    fn finish(
        &self,
        out: Recorder<T>,
        stop: StopReason<T>,
        end: (T, T, T),
        accepted: usize,
        rejected: usize,
    ) -> Trajectory<T> {
        Trajectory {
            grid: out.grid,
            values: out.values,
            derivs: out.derivs,
            stop,
            end,
            accepted_steps: accepted,
            rejected_steps: rejected,
            scale: self.ivp.u0.abs(),
        }
    }
}
