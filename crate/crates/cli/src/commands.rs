use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use yamabe_core::quadrature::{
    gn_best_constant, integral_report, radial_integral, yamabe_constant_rn, Integrand,
};
use yamabe_core::radial_ode::{classify_default, Sampling};
use yamabe_core::reference::{reference_lambda, REFERENCE_TABLE};
use yamabe_core::stability::{
    a_of_lambda, find_lambda, linear_trajectory, lower_bound_a, stability_verdict,
};
use yamabe_core::{make_dims, Class, Equation, Error, SolverSettings, Verdict};

use crate::cache::ProfileCache;
use crate::cli::{Common, Format, Pair};
use crate::render::{many, opt, single, text, Record};

/// Rendered output plus the exit status it implies.
pub struct Output {
    pub text: String,
    pub status: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, status: 0 }
    }
}

pub struct Context {
    pub format: Format,
    pub settings: SolverSettings<f64>,
    pub cache: ProfileCache,
}

impl Context {
    pub fn new(common: &Common) -> Self {
        Self {
            format: common.format,
            settings: common.settings(),
            cache: ProfileCache::new(common.cache_dir.clone()),
        }
    }

    fn profile(&self, pair: Pair) -> yamabe_core::Result<yamabe_core::Profile> {
        self.cache
            .get(pair.m, pair.n, Equation::Yamabe, &self.settings.shooting)
    }
}

#[derive(Serialize)]
struct GroundStateRecord {
    m: u32,
    n: u32,
    beta: f64,
    beta_bracket: (f64, f64),
    t_grid: f64,
    intervals: usize,
    tail_rate: f64,
    fitted_tail_rate: f64,
    tail_amplitude: f64,
    bisection_iterations: usize,
    continuation_segments: usize,
    tol_beta: f64,
    rtol: f64,
    atol: f64,
    samples: Vec<(f64, f64, f64)>,
}

impl Record for GroundStateRecord {
    const HEADER: &'static str = "m,n,beta,t_grid,intervals,tail_rate,tail_amplitude";

    fn csv(&self) -> String {
        format!(
            "{},{},{:?},{:?},{},{:?},{:?}",
            self.m,
            self.n,
            self.beta,
            self.t_grid,
            self.intervals,
            self.tail_rate,
            self.tail_amplitude
        )
    }

    fn human(&self) -> String {
        format!(
            "ground state for (m, n) = ({}, {})\n  f(0)                  {:.12}\n  f(0) bracket          [{:.15}, {:.15}]\n  grid                  [0, {:.4}] with {} intervals\n  tail rate             {:.10} (fitted {:.10})\n  tail amplitude        {:.6e}\n  bisection iterations  {}\n  continuation segments {}\n",
            self.m,
            self.n,
            self.beta,
            self.beta_bracket.0,
            self.beta_bracket.1,
            self.t_grid,
            self.intervals,
            self.tail_rate,
            self.fitted_tail_rate,
            self.tail_amplitude,
            self.bisection_iterations,
            self.continuation_segments,
        )
    }
}

#[derive(Serialize)]
struct SampleRow {
    m: u32,
    n: u32,
    t: f64,
    f: f64,
    df: f64,
}

impl Record for SampleRow {
    const HEADER: &'static str = "m,n,t,f,df";

    fn csv(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?}",
            self.m, self.n, self.t, self.f, self.df
        )
    }

    fn human(&self) -> String {
        format!("{} {} {}\n", self.t, self.f, self.df)
    }
}

pub fn ground_state(ctx: &Context, pair: Pair, samples: usize) -> anyhow::Result<Output> {
    if samples == 0 {
        return Err(Error::InvalidInput("--samples must be positive".into()).into());
    }
    let f = ctx.profile(pair)?;
    let t_grid = f.t_grid();
    let d = &f.diagnostics;
    let record = GroundStateRecord {
        m: pair.m,
        n: pair.n,
        beta: f.beta,
        beta_bracket: d.beta_bracket,
        t_grid,
        intervals: f.intervals(),
        tail_rate: f.tail_rate,
        fitted_tail_rate: d.fitted_tail_rate,
        tail_amplitude: f.tail_amplitude,
        bisection_iterations: d.bisection_iterations,
        continuation_segments: d.continuation_segments,
        tol_beta: d.tol_beta,
        rtol: d.rtol,
        atol: d.atol,
        samples: (0..=samples)
            .map(|i| {
                let t = t_grid * i as f64 / samples as f64;
                let (v, dv) = f.value_and_deriv(t);
                (t, v, dv)
            })
            .collect(),
    };
    if ctx.format == Format::Csv {
        let rows: Vec<SampleRow> = record
            .samples
            .iter()
            .map(|&(t, f, df)| SampleRow {
                m: pair.m,
                n: pair.n,
                t,
                f,
                df,
            })
            .collect();
        return Ok(Output::ok(many("ground-state", &rows, "", ctx.format)));
    }
    Ok(Output::ok(single("ground-state", &record, ctx.format)))
}

#[derive(Serialize)]
struct LambdaRecord {
    m: u32,
    n: u32,
    lambda: f64,
    bracket: (f64, f64),
    iterations: usize,
    horizon: f64,
    beta: f64,
    tol_lambda: f64,
    tol_beta: f64,
    rtol: f64,
    atol: f64,
    unresolved_probes: usize,
}

impl Record for LambdaRecord {
    const HEADER: &'static str =
        "m,n,lambda,bracket_lo,bracket_hi,iterations,horizon,beta,tol_lambda,tol_beta,rtol,atol,unresolved_probes";

    fn csv(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            self.m,
            self.n,
            self.lambda,
            self.bracket.0,
            self.bracket.1,
            self.iterations,
            self.horizon,
            self.beta,
            self.tol_lambda,
            self.tol_beta,
            self.rtol,
            self.atol,
            self.unresolved_probes
        )
    }

    fn human(&self) -> String {
        format!(
            "lambda({}, {}) = {:.8}\n  bracket     [{:.10}, {:.10}] after {} bisections\n  horizon     {:.4}\n  f(0)        {:.12}\n  tolerances  lambda {:e}, f(0) {:e}, rtol {:e}, atol {:e}\n",
            self.m,
            self.n,
            self.lambda,
            self.bracket.0,
            self.bracket.1,
            self.iterations,
            self.horizon,
            self.beta,
            self.tol_lambda,
            self.tol_beta,
            self.rtol,
            self.atol
        )
    }
}

fn lambda_record(ctx: &Context, pair: Pair) -> yamabe_core::Result<LambdaRecord> {
    let f = ctx.profile(pair)?;
    let r = find_lambda(&f, &ctx.settings.stability)?;
    Ok(LambdaRecord {
        m: pair.m,
        n: pair.n,
        lambda: r.lambda_mn,
        bracket: r.bracket,
        iterations: r.iterations,
        horizon: r.horizon_used,
        beta: r.ground_state_beta,
        tol_lambda: r.tol,
        tol_beta: ctx.settings.shooting.tol_beta,
        rtol: ctx.settings.stability.tolerances.rtol,
        atol: ctx.settings.stability.tolerances.atol,
        unresolved_probes: r.unresolved_probes,
    })
}

pub fn lambda(ctx: &Context, pair: Pair) -> anyhow::Result<Output> {
    let record = lambda_record(ctx, pair)?;
    Ok(Output::ok(single("lambda", &record, ctx.format)))
}

#[derive(Serialize)]
struct TableRow {
    m: u32,
    n: u32,
    lambda: Option<f64>,
    reference: Option<f64>,
    abs_deviation: Option<f64>,
    error: Option<String>,
    #[serde(skip)]
    show_reference: bool,
}

impl Record for TableRow {
    const HEADER: &'static str = "m,n,lambda,reference,abs_deviation,error";

    fn csv(&self) -> String {
        let reference = if self.show_reference {
            self.reference
        } else {
            None
        };
        let deviation = if self.show_reference {
            self.abs_deviation
        } else {
            None
        };
        format!(
            "{},{},{},{},{},{}",
            self.m,
            self.n,
            self.lambda.map(|l| format!("{l:.4}")).unwrap_or_default(),
            reference.map(|r| format!("{r:.4}")).unwrap_or_default(),
            opt(deviation.map(|d| (d * 1e6).round() / 1e6)),
            text(self.error.as_deref().unwrap_or(""))
        )
    }

    fn human(&self) -> String {
        let mut line = format!("{}, {}, ", self.m, self.n);
        match (&self.lambda, &self.error) {
            (Some(l), _) => write!(line, "{l:.4}").unwrap(),
            (None, Some(e)) => write!(line, "error: {e}").unwrap(),
            (None, None) => {}
        }
        if self.show_reference {
            match (self.reference, self.abs_deviation) {
                (Some(r), Some(d)) => write!(line, ", {r:.4}, {d:.1e}").unwrap(),
                (Some(r), None) => write!(line, ", {r:.4}, -").unwrap(),
                _ => line.push_str(", -, -"),
            }
        }
        line.push('\n');
        line
    }
}

/// Parses `2x2,3x2` into pairs; an empty string gives no pairs.
pub fn parse_pairs(spec: &str) -> yamabe_core::Result<Vec<(u32, u32)>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let bad = || Error::InvalidInput(format!("pair `{s}` is not of the form MxN"));
            let (m, n) = s.split_once(['x', 'X', ':']).ok_or_else(bad)?;
            Ok((
                m.trim().parse().map_err(|_| bad())?,
                n.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

pub fn table(
    ctx: &Context,
    pairs: Option<&str>,
    reference: bool,
    jobs: Option<usize>,
) -> anyhow::Result<Output> {
    let pairs = match pairs {
        Some(spec) => parse_pairs(spec)?,
        None => REFERENCE_TABLE.iter().map(|&(m, n, _)| (m, n)).collect(),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidInput("--jobs must be positive".into()).into());
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build()?;
    let rows: Vec<TableRow> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(m, n)| {
                let computed = lambda_record(ctx, Pair { m, n });
                let reference_value = reference_lambda(m, n);
                let (lambda, error) = match computed {
                    Ok(r) => (Some(r.lambda), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                TableRow {
                    m,
                    n,
                    lambda,
                    reference: if reference { reference_value } else { None },
                    abs_deviation: match (reference, lambda, reference_value) {
                        (true, Some(l), Some(r)) => Some((l - r).abs()),
                        _ => None,
                    },
                    error,
                    show_reference: reference,
                }
            })
            .collect()
    });
    let failed = rows.iter().any(|r| r.error.is_some());
    let header = if reference {
        "m, n, lambda, reference, |deviation|\n"
    } else {
        "m, n, lambda\n"
    };
    Ok(Output {
        text: many("table", &rows, header, ctx.format),
        status: if failed { 3 } else { 0 },
    })
}

#[derive(Serialize)]
struct CurveRow {
    m: u32,
    n: u32,
    lambda: f64,
    a: Option<f64>,
    target: f64,
    lower_bound: f64,
    error: Option<String>,
}

impl Record for CurveRow {
    const HEADER: &'static str = "m,n,lambda,a,target,lower_bound,error";

    fn csv(&self) -> String {
        format!(
            "{},{},{:?},{},{:?},{:?},{}",
            self.m,
            self.n,
            self.lambda,
            opt(self.a),
            self.target,
            self.lower_bound,
            text(self.error.as_deref().unwrap_or(""))
        )
    }

    fn human(&self) -> String {
        match (&self.a, &self.error) {
            (Some(a), _) => format!("{:>12.6}  {:>14.8}\n", self.lambda, a),
            (None, e) => format!(
                "{:>12.6}  error: {}\n",
                self.lambda,
                e.as_deref().unwrap_or("")
            ),
        }
    }
}

pub fn a_curve(ctx: &Context, pair: Pair, lambdas: &[f64]) -> anyhow::Result<Output> {
    let f = ctx.profile(pair)?;
    let target = (f.dims.p - 1.0) * f.dims.s_g;
    let lower_bound = lower_bound_a(&f);
    let rows: Vec<CurveRow> = lambdas
        .iter()
        .map(|&lambda| {
            let a = a_of_lambda(&f, lambda, &ctx.settings.stability);
            CurveRow {
                m: pair.m,
                n: pair.n,
                lambda,
                a: a.as_ref().ok().copied(),
                target,
                lower_bound,
                error: a.err().map(|e| e.to_string()),
            }
        })
        .collect();
    let failed = rows.iter().any(|r| r.error.is_some());
    let header = format!(
        "A(lambda) for (m, n) = ({}, {}); threshold level (p-1) s_g = {target}, lower bound {lower_bound:.8}\n      lambda         A(lambda)\n",
        pair.m, pair.n
    );
    Ok(Output {
        text: many("a-curve", &rows, &header, ctx.format),
        status: if failed { 3 } else { 0 },
    })
}

#[derive(Serialize)]
struct StabilityRecord {
    m: u32,
    n: u32,
    lambda_1: f64,
    lambda: f64,
    verdict: Verdict,
    band: f64,
    yamabe_metric_sufficient: bool,
    bracket: (f64, f64),
    tol_lambda: f64,
    tol_beta: f64,
    rtol: f64,
    atol: f64,
}

impl Record for StabilityRecord {
    const HEADER: &'static str =
        "m,n,lambda_1,lambda,verdict,band,yamabe_metric_sufficient,bracket_lo,bracket_hi,tol_lambda,tol_beta,rtol,atol";

    fn csv(&self) -> String {
        format!(
            "{},{},{:?},{:?},{},{:?},{},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.m,
            self.n,
            self.lambda_1,
            self.lambda,
            self.verdict.name(),
            self.band,
            self.yamabe_metric_sufficient,
            self.bracket.0,
            self.bracket.1,
            self.tol_lambda,
            self.tol_beta,
            self.rtol,
            self.atol
        )
    }

    fn human(&self) -> String {
        format!(
            "{} for (m, n) = ({}, {}) with lambda_1 = {}\n  lambda(m, n)   {:.8} in [{:.10}, {:.10}]\n  marginal band  +/- {:e}\n  lambda_1 >= m suffices (m >= lambda(m, n)): {}\n",
            self.verdict.name(),
            self.m,
            self.n,
            self.lambda_1,
            self.lambda,
            self.bracket.0,
            self.bracket.1,
            self.band,
            self.yamabe_metric_sufficient
        )
    }
}

pub fn check_stability(ctx: &Context, pair: Pair, lambda_1: f64) -> anyhow::Result<Output> {
    let dims = make_dims::<f64>(pair.m, pair.n)?;
    if !(lambda_1.is_finite() && lambda_1 > 0.0) {
        return Err(
            Error::InvalidInput(format!("lambda_1 must be positive, got {lambda_1}")).into(),
        );
    }
    let f = ctx.profile(pair)?;
    let r = find_lambda(&f, &ctx.settings.stability)?;
    let report = stability_verdict(&dims, lambda_1, &r, &ctx.settings.stability)?;
    let record = StabilityRecord {
        m: pair.m,
        n: pair.n,
        lambda_1,
        lambda: report.lambda_mn,
        verdict: report.verdict,
        band: report.band,
        yamabe_metric_sufficient: report.yamabe_metric_sufficient,
        bracket: r.bracket,
        tol_lambda: r.tol,
        tol_beta: ctx.settings.shooting.tol_beta,
        rtol: ctx.settings.stability.tolerances.rtol,
        atol: ctx.settings.stability.tolerances.atol,
    };
    Ok(Output {
        text: single("check-stability", &record, ctx.format),
        status: if report.verdict == Verdict::Unstable {
            4
        } else {
            0
        },
    })
}

#[derive(Serialize)]
struct IdentityRecord {
    m: u32,
    n: u32,
    l2_sq: f64,
    lp_p: f64,
    grad_sq: f64,
    energy: f64,
    residual_gradient_l2: f64,
    residual_gradient_lp: f64,
    residual_l2_lp: f64,
}

impl Record for IdentityRecord {
    const HEADER: &'static str =
        "m,n,l2_sq,lp_p,grad_sq,energy,residual_gradient_l2,residual_gradient_lp,residual_l2_lp";

    fn csv(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.m,
            self.n,
            self.l2_sq,
            self.lp_p,
            self.grad_sq,
            self.energy,
            self.residual_gradient_l2,
            self.residual_gradient_lp,
            self.residual_l2_lp
        )
    }

    fn human(&self) -> String {
        format!(
            "integral identities for (m, n) = ({}, {})\n  ||f||_2^2      {:.12e}\n  ||f||_p^p      {:.12e}\n  ||grad f||^2   {:.12e}\n  energy         {:.12e}\n  relative residuals\n    a_N m ||grad f||^2 = n s_g ||f||_2^2   {:.2e}\n    N a_N ||grad f||^2 = n s_g ||f||_p^p   {:.2e}\n    N ||f||_2^2 = m ||f||_p^p              {:.2e}\n",
            self.m,
            self.n,
            self.l2_sq,
            self.lp_p,
            self.grad_sq,
            self.energy,
            self.residual_gradient_l2,
            self.residual_gradient_lp,
            self.residual_l2_lp
        )
    }
}

pub fn verify_identities(ctx: &Context, pair: Pair) -> anyhow::Result<Output> {
    let f = ctx.profile(pair)?;
    let r = integral_report(&f)?;
    let record = IdentityRecord {
        m: pair.m,
        n: pair.n,
        l2_sq: r.l2_sq,
        lp_p: r.lp_p,
        grad_sq: r.grad_sq,
        energy: r.energy(&f.dims),
        residual_gradient_l2: r.residual_gradient_l2,
        residual_gradient_lp: r.residual_gradient_lp,
        residual_l2_lp: r.residual_l2_lp,
    };
    Ok(Output::ok(single("verify-identities", &record, ctx.format)))
}

#[derive(Serialize)]
struct YamabeRecord {
    m: u32,
    n: u32,
    vol_m: f64,
    lp_p: f64,
    yamabe_constant: f64,
    gn_constant: f64,
}

impl Record for YamabeRecord {
    const HEADER: &'static str = "m,n,vol_m,lp_p,yamabe_constant,gn_constant";

    fn csv(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{:?}",
            self.m, self.n, self.vol_m, self.lp_p, self.yamabe_constant, self.gn_constant
        )
    }

    fn human(&self) -> String {
        format!(
            "(m, n) = ({}, {}), vol(M) = {}\n  restricted Yamabe constant  {:.12}\n  ||f||_p^p                   {:.12e}\n  Gagliardo-Nirenberg sigma   {:.12}\n",
            self.m, self.n, self.vol_m, self.yamabe_constant, self.lp_p, self.gn_constant
        )
    }
}

pub fn yamabe_constant(ctx: &Context, pair: Pair, vol_m: f64) -> anyhow::Result<Output> {
    let dims = make_dims::<f64>(pair.m, pair.n)?;
    if !(vol_m.is_finite() && vol_m > 0.0) {
        return Err(
            Error::InvalidInput(format!("volume of M must be positive, got {vol_m}")).into(),
        );
    }
    let f = ctx.profile(pair)?;
    let w = ctx
        .cache
        .get(pair.m, pair.n, Equation::Unit, &ctx.settings.shooting)?;
    let record = YamabeRecord {
        m: pair.m,
        n: pair.n,
        vol_m,
        lp_p: radial_integral(&f, Integrand::Power(dims.p))?,
        yamabe_constant: yamabe_constant_rn(&f, &dims, vol_m)?,
        gn_constant: gn_best_constant(&w, &dims)?,
    };
    Ok(Output::ok(single("yamabe-constant", &record, ctx.format)))
}

#[derive(Serialize)]
struct ClassRecord {
    m: u32,
    n: u32,
    lambda: f64,
    class: &'static str,
    event_t: Option<f64>,
    event_u: Option<f64>,
    horizon: f64,
}

impl Record for ClassRecord {
    const HEADER: &'static str = "m,n,lambda,class,event_t,event_u";

    fn csv(&self) -> String {
        format!(
            "{},{},{:?},{},{},{}",
            self.m,
            self.n,
            self.lambda,
            self.class,
            opt(self.event_t),
            opt(self.event_u)
        )
    }

    fn human(&self) -> String {
        let event = match (self.event_t, self.event_u) {
            (Some(t), Some(u)) => format!(" at t = {t:.8}, u = {u:.6e}"),
            (Some(t), None) => format!(" at t = {t:.8}"),
            _ => format!(" up to t = {}", self.horizon),
        };
        format!(
            "(m, n) = ({}, {}), lambda = {}: {}{event}\n",
            self.m, self.n, self.lambda, self.class
        )
    }
}

pub fn classify(
    ctx: &Context,
    pair: Pair,
    lambda: f64,
    trajectory: Option<&Path>,
    spacing: f64,
) -> anyhow::Result<Output> {
    if trajectory.is_some() && (spacing.is_nan() || spacing <= 0.0) {
        return Err(
            Error::InvalidInput(format!("--spacing must be positive, got {spacing}")).into(),
        );
    }
    let f = ctx.profile(pair)?;
    let settings = &ctx.settings.stability;
    let horizon = settings.horizon_for(&f.dims);
    let run = linear_trajectory(&f, lambda, horizon, settings, Sampling::Steps)?;
    let class = classify_default(&run, &settings.events)?;
    let (event_t, event_u) = match class {
        Class::ZeroCrossing { t } => (Some(t), None),
        Class::LocalMin { t, u } => (Some(t), Some(u)),
        Class::DecreasingPositive => (None, None),
    };
    if let Some(path) = trajectory {
        let samples =
            linear_trajectory(&f, lambda, horizon, settings, Sampling::Uniform { spacing })?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "schema_version,t,u,du")?;
        for i in 0..samples.grid.len() {
            writeln!(
                out,
                "{},{:?},{:?},{:?}",
                crate::render::SCHEMA_VERSION,
                samples.grid[i],
                samples.values[i],
                samples.derivs[i]
            )?;
        }
        out.flush()?;
    }
    let record = ClassRecord {
        m: pair.m,
        n: pair.n,
        lambda,
        class: class.name(),
        event_t,
        event_u,
        horizon,
    };
    Ok(Output::ok(single("classify", &record, ctx.format)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_parse() {
        assert_eq!(
            parse_pairs("2x2, 3x2,4:3").unwrap(),
            vec![(2, 2), (3, 2), (4, 3)]
        );
        assert!(parse_pairs("").unwrap().is_empty());
        assert!(matches!(parse_pairs("2-2"), Err(Error::InvalidInput(_))));
        assert!(matches!(parse_pairs("2xq"), Err(Error::InvalidInput(_))));
    }
}
