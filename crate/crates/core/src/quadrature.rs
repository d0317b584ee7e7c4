//! Integrals of radial functions over `R^n`.
//!
//! `∫_{R^n} g = ω_{n-1} ∫_0^∞ g(t) t^{n-1} dt`. The grid part uses composite
//! Simpson on the profile's uniform samples; the tail beyond the grid uses the
//! profile's exponential model integrated by adaptive Simpson.

use serde::{Deserialize, Serialize};

use crate::dims::ProblemDims;
use crate::error::{Error, Result};
use crate::ground_state::{Equation, RadialProfile};
use crate::scalar::{from_usize, lit, Scalar};

/// Surface measure `ω_{n-1} = 2 π^{n/2} / Γ(n/2)` of the unit sphere in `R^n`.
pub fn sphere_area<T: Scalar>(n: u32) -> T {
    // Γ(n/2) by the half-integer recursion from Γ(1) = 1 or Γ(1/2) = √π.
    let pi = T::PI();
    let mut gamma = if n.is_multiple_of(2) {
        T::one()
    } else {
        pi.sqrt()
    };
    let mut x: T = if n.is_multiple_of(2) {
        T::one()
    } else {
        lit(0.5)
    };
    let target: T = T::from_u32(n).unwrap() * lit(0.5);
    while x < target {
        gamma = gamma * x;
        x = x + T::one();
    }
    lit::<T>(2.0) * pi.powf(T::from_u32(n).unwrap() * lit(0.5)) / gamma
}

/// Integrands built from the profile value and derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrand<T> {
    /// `|f|^k`.
    Power(T),
    /// `|f'|^2`.
    GradSquared,
}

impl<T: Scalar> Integrand<T> {
    fn eval(&self, f: T, df: T) -> T {
        match *self {
            Integrand::Power(k) => f.abs().powf(k),
            Integrand::GradSquared => df * df,
        }
    }

    /// Multiple of the tail decay rate at which the integrand decays.
    fn decay_multiple(&self) -> T {
        match *self {
            Integrand::Power(k) => k,
            Integrand::GradSquared => lit(2.0),
        }
    }
}

/// `∫_{R^n} g(f, f')` for a radial profile.
pub fn radial_integral<T: Scalar>(
    profile: &RadialProfile<T>,
    integrand: Integrand<T>,
) -> Result<T> {
    radial_integral_with(profile, integrand.decay_multiple(), |_t, f, df| {
        integrand.eval(f, df)
    })
}

/// `∫_{R^n} g(t, f, f')` for a caller-supplied integrand decaying like
/// `e^{-k μ t}` under the tail model (`k = decay_multiple`).
pub fn radial_integral_with<T: Scalar>(
    profile: &RadialProfile<T>,
    decay_multiple: T,
    g: impl Fn(T, T, T) -> T,
) -> Result<T> {
    if !(decay_multiple > T::zero()) || !(profile.tail_rate > T::zero()) {
        return Err(Error::TailDivergence);
    }
    let n = profile.dims.n;
    let weight_power = n as i32 - 1;
    let m = profile.intervals();
    let h = profile.spacing;
    let weighted = |i: usize| {
        let t = profile.node(i);
        g(t, profile.values[i], profile.derivs[i]) * t.powi(weight_power)
    };

    // Composite Simpson; an odd interval count closes with the 3/8 rule.
    let simpson_end = if m.is_multiple_of(2) { m } else { m - 3 };
    let mut acc = weighted(0) + weighted(simpson_end);
    for i in 1..simpson_end {
        let w: T = if i % 2 == 1 { lit(4.0) } else { lit(2.0) };
        acc = acc + w * weighted(i);
    }
    let mut grid_part = acc * h / lit(3.0);
    if simpson_end != m {
        let s = simpson_end;
        let three_eighths: T = lit(3.0 / 8.0);
        grid_part = grid_part
            + three_eighths
                * h
                * (weighted(s)
                    + lit::<T>(3.0) * weighted(s + 1)
                    + lit::<T>(3.0) * weighted(s + 2)
                    + weighted(s + 3));
    }

    let t_grid = profile.t_grid();
    let rate = decay_multiple * profile.tail_rate;
    let tail_len: T = lit::<T>(60.0) / rate;
    let tail_fn = |t: T| {
        let (f, df) = profile.value_and_deriv(t);
        g(t, f, df) * t.powi(weight_power)
    };
    let tail_part = adaptive_simpson(&tail_fn, t_grid, t_grid + tail_len, lit(1e-12), 40);
    Ok(sphere_area::<T>(n) * (grid_part + tail_part))
}

fn adaptive_simpson<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T, tol: T, depth: usize) -> T {
    let half: T = lit(0.5);
    let six: T = lit(6.0);
    let c = (a + b) * half;
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / six * (fa + lit::<T>(4.0) * fc + fb);
    #[allow(clippy::too_many_arguments)]
    fn recurse<T: Scalar>(
        f: &impl Fn(T) -> T,
        a: T,
        b: T,
        fa: T,
        fb: T,
        fc: T,
        whole: T,
        tol: T,
        depth: usize,
    ) -> T {
        let half: T = lit(0.5);
        let six: T = lit(6.0);
        let four: T = lit(4.0);
        let c = (a + b) * half;
        let (d, e) = ((a + c) * half, (c + b) * half);
        let (fd, fe) = (f(d), f(e));
        let left = (c - a) / six * (fa + four * fd + fc);
        let right = (b - c) / six * (fc + four * fe + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= lit::<T>(15.0) * tol {
            return left + right + delta / lit(15.0);
        }
        recurse(f, a, c, fa, fc, fd, left, tol * half, depth - 1)
            + recurse(f, c, b, fc, fb, fe, right, tol * half, depth - 1)
    }
    recurse(f, a, b, fa, fb, fc, whole, tol, depth)
}

/// Norms of a ground state and the relative residuals of its three integral
/// identities:
///
/// * `a_N m ‖∇f‖₂² = n s_g ‖f‖₂²`
/// * `N a_N ‖∇f‖₂² = n s_g ‖f‖_p^p`
/// * `N ‖f‖₂² = m ‖f‖_p^p`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport<T> {
    pub l2_sq: T,
    pub lp_p: T,
    pub grad_sq: T,
    pub sphere_factor: T,
    pub residual_gradient_l2: T,
    pub residual_gradient_lp: T,
    pub residual_l2_lp: T,
}

fn relative_gap<T: Scalar>(lhs: T, rhs: T) -> T {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
}

impl<T: Scalar> IntegralReport<T> {
    pub fn max_residual(&self) -> T {
        self.residual_gradient_l2
            .max(self.residual_gradient_lp)
            .max(self.residual_l2_lp)
    }

    /// `E(f) = a_N ‖∇f‖₂² + s_g ‖f‖₂²`.
    pub fn energy(&self, dims: &ProblemDims<T>) -> T {
        dims.a_n * self.grad_sq + dims.s_g * self.l2_sq
    }
}

/// Evaluates the norms of a Yamabe-normalized ground state.
pub fn integral_report<T: Scalar>(profile: &RadialProfile<T>) -> Result<IntegralReport<T>> {
    let dims = &profile.dims;
    let l2_sq = radial_integral(profile, Integrand::Power(lit(2.0)))?;
    let lp_p = radial_integral(profile, Integrand::Power(dims.p))?;
    let grad_sq = radial_integral(profile, Integrand::GradSquared)?;
    let (m, n, big_n) = (dims.m_scalar(), dims.n_scalar(), dims.total_scalar());
    let (a, s) = (dims.a_n, dims.s_g);
    Ok(IntegralReport {
        l2_sq,
        lp_p,
        grad_sq,
        sphere_factor: sphere_area(dims.n),
        residual_gradient_l2: relative_gap(a * m * grad_sq, n * s * l2_sq),
        residual_gradient_lp: relative_gap(big_n * a * grad_sq, n * s * lp_p),
        residual_l2_lp: relative_gap(big_n * l2_sq, m * lp_p),
    })
}

/// The Gagliardo–Nirenberg quotient `‖∇u‖₂^{2n/N} ‖u‖₂^{2m/N} / ‖u‖_p²`.
pub fn gn_quotient<T: Scalar>(profile: &RadialProfile<T>, dims: &ProblemDims<T>) -> Result<T> {
    let l2_sq = radial_integral(profile, Integrand::Power(lit(2.0)))?;
    let lp_p = radial_integral(profile, Integrand::Power(dims.p))?;
    let grad_sq = radial_integral(profile, Integrand::GradSquared)?;
    let big_n = dims.total_scalar();
    let numerator = grad_sq.powf(dims.n_scalar() / big_n) * l2_sq.powf(dims.m_scalar() / big_n);
    Ok(numerator / lp_p.powf(lit::<T>(2.0) / dims.p))
}

/// Best constant `σ_{m,n}` of the Gagliardo–Nirenberg inequality, evaluated
/// at the ground state `w` of `-Δw + w = w^{p-1}`.
pub fn gn_best_constant<T: Scalar>(
    profile_w: &RadialProfile<T>,
    dims: &ProblemDims<T>,
) -> Result<T> {
    if profile_w.dims.n != dims.n || profile_w.dims.p != dims.p {
        return Err(Error::DimensionMismatch(format!(
            "profile has n = {}, p = {}; target has n = {}, p = {}",
            profile_w.dims.n, profile_w.dims.p, dims.n, dims.p
        )));
    }
    Ok(T::one() / gn_quotient(profile_w, dims)?)
}

/// Restricted Yamabe constant `s_g (Vol(M) ‖f‖_p^p)^{2/N}` of `M × R^n`.
///
/// The conformal metric `f^{p-2}(g + g_E)` has volume form `f^p dv` because
/// `(p-2) N / 2 = p`, so its volume is `Vol(M) ‖f‖_p^p`.
pub fn yamabe_constant_rn<T: Scalar>(
    profile: &RadialProfile<T>,
    dims: &ProblemDims<T>,
    vol_m: T,
) -> Result<T> {
    if !(vol_m > T::zero()) || !vol_m.is_finite() {
        return Err(Error::InvalidInput(format!(
            "volume of M must be positive, got {vol_m}"
        )));
    }
    if profile.equation != Equation::Yamabe || profile.dims != *dims {
        return Err(Error::DimensionMismatch(
            "Yamabe constant needs the Yamabe-normalized ground state of the same dimensions"
                .into(),
        ));
    }
    let lp_p = radial_integral(profile, Integrand::Power(dims.p))?;
    Ok(dims.s_g * (vol_m * lp_p).powf(lit::<T>(2.0) / dims.total_scalar()))
}

/// Uniform-grid samples of `f(t)`, `f'(t)` on `[0, length]`.
pub fn sample_profile<T: Scalar>(
    intervals: usize,
    length: T,
    f: impl Fn(T) -> (T, T),
) -> (T, Vec<T>, Vec<T>) {
    let h = length / from_usize::<T>(intervals);
    let (values, derivs) = (0..=intervals).map(|i| f(from_usize::<T>(i) * h)).unzip();
    (h, values, derivs)
}
