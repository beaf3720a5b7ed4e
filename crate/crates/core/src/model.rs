//! Closed-form routing-overhead model for proactive protocols.
//!
//! The aggregate overhead of a proactive protocol is split into three
//! components: data packets lost to routes that broke inside a periodic
//! interval (`ro_pf`), periodic table broadcasts (`ro_pr`) and triggered
//! updates (`ro_tr`). Every component and every sensitivity is a pure
//! function of [`ModelParams`].
//!
//! The trigger term contains a ceiling. Its derivative is zero almost
//! everywhere, yet the published sensitivity expressions keep ceiling
//! factors. Each sensitivity is therefore returned as a [`Derivative`] that
//! keeps the smooth part and both readings of the ceiling part apart, see
//! [`CeilingMode`].

use std::ops::{Add, Mul};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("no sign change of the stationarity residual in [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },
    #[error("residual changes sign across a jump near t_pr = {at} (|residual| = {residual})")]
    DiscontinuousCrossing { at: f64, residual: f64 },
}

pub type Result<T> = std::result::Result<T, ModelError>;

fn invalid(name: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::InvalidParameter {
        name,
        value,
        reason,
    }
}

/// Unvalidated model inputs. Convert into [`ModelParams`] with `try_into`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelInputs {
    /// Node count.
    pub n: u32,
    /// Link bandwidth in bits/s.
    pub bandwidth: f64,
    /// Protocol impulse adjustment factor.
    pub k: f64,
    /// Periodic update interval in seconds.
    pub t_pr: f64,
    /// Mean link uptime in seconds.
    pub mu_k: f64,
    /// Mean packet arrival rate per node, packets/s.
    pub lambda: f64,
    /// Triggered-update epoch in seconds.
    pub t_trig: f64,
    /// Average path length in hops.
    pub l_avg: u32,
    /// Number of active paths.
    pub pn_avg: u32,
    /// OLSR HELLO interval in seconds. The TC interval is twice this.
    pub hello: f64,
}

impl Default for ModelInputs {
    fn default() -> Self {
        Self {
            n: 50,
            bandwidth: 2.0e6,
            k: 1.0,
            t_pr: 5.0,
            mu_k: 10.0,
            lambda: 4.0,
            t_trig: 7.5,
            l_avg: 3,
            pn_avg: 10,
            hello: 1.0,
        }
    }
}

/// Validated model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams(ModelInputs);

impl TryFrom<ModelInputs> for ModelParams {
    type Error = ModelError;

    fn try_from(inputs: ModelInputs) -> Result<Self> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, v, "must be finite and > 0"))
            }
        }
        if inputs.n < 1 {
            return Err(invalid("n", inputs.n as f64, "must be >= 1"));
        }
        positive("bandwidth", inputs.bandwidth)?;
        positive("k", inputs.k)?;
        positive("t_pr", inputs.t_pr)?;
        positive("mu_k", inputs.mu_k)?;
        if !(inputs.lambda.is_finite() && inputs.lambda >= 0.0) {
            return Err(invalid("lambda", inputs.lambda, "must be finite and >= 0"));
        }
        positive("t_trig", inputs.t_trig)?;
        positive("hello", inputs.hello)?;
        Ok(Self(inputs))
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self(ModelInputs::default())
    }
}

impl ModelParams {
    pub fn inputs(&self) -> ModelInputs {
        self.0
    }

    /// Copy with a modified field, re-validated.
    pub fn with(&self, edit: impl FnOnce(&mut ModelInputs)) -> Result<Self> {
        let mut inputs = self.0;
        edit(&mut inputs);
        inputs.try_into()
    }

    pub fn n(&self) -> u32 {
        self.0.n
    }
    pub fn bandwidth(&self) -> f64 {
        self.0.bandwidth
    }
    pub fn k(&self) -> f64 {
        self.0.k
    }
    pub fn t_pr(&self) -> f64 {
        self.0.t_pr
    }
    pub fn mu_k(&self) -> f64 {
        self.0.mu_k
    }
    pub fn lambda(&self) -> f64 {
        self.0.lambda
    }
    pub fn t_trig(&self) -> f64 {
        self.0.t_trig
    }
    pub fn l_avg(&self) -> u32 {
        self.0.l_avg
    }
    pub fn pn_avg(&self) -> u32 {
        self.0.pn_avg
    }
    pub fn hello(&self) -> f64 {
        self.0.hello
    }

    /// Offered load on active paths, `pn_avg * lambda`.
    pub fn path_load(&self) -> f64 {
        self.0.pn_avg as f64 * self.0.lambda
    }
}

/// Overhead components, each in its own unit.
///
/// `ro_pf` is packets per interval, `ro_pr` is bits/s and `ro_tr` is a
/// dimensionless ratio sum. `ro_total` is their raw sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadBreakdown {
    pub ro_pf: f64,
    pub ro_pr: f64,
    pub ro_tr: f64,
    pub ro_total: f64,
}

impl OverheadBreakdown {
    pub fn new(ro_pf: f64, ro_pr: f64, ro_tr: f64) -> Self {
        Self {
            ro_pf,
            ro_pr,
            ro_tr,
            ro_total: ro_pf + ro_pr + ro_tr,
        }
    }
}

/// How ceiling factors contribute to a derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CeilingMode {
    /// The derivative expressions with their ceiling factors, evaluated as written.
    #[default]
    Printed,
    /// `ceil` is treated as locally constant, giving the exact derivative of
    /// the trigger term away from its jumps.
    MeasureTheoretic,
}

/// A derivative split into its smooth part and the ceiling-bearing part.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivative {
    /// Contribution of the differentiable terms (packet failure, periodic).
    pub smooth: f64,
    /// Ceiling part as printed with the published expression.
    pub ceiling_printed: f64,
    /// Almost-everywhere derivative of the trigger term.
    pub ceiling_measure: f64,
    /// Set when evaluated on a jump of a ceiling.
    pub at_discontinuity: bool,
}

impl Derivative {
    pub fn value(&self, mode: CeilingMode) -> f64 {
        match mode {
            CeilingMode::Printed => self.smooth + self.ceiling_printed,
            CeilingMode::MeasureTheoretic => self.smooth + self.ceiling_measure,
        }
    }

    fn smooth(smooth: f64) -> Self {
        Self {
            smooth,
            ..Self::default()
        }
    }
}

impl Add for Derivative {
    type Output = Derivative;

    fn add(self, rhs: Derivative) -> Derivative {
        Derivative {
            smooth: self.smooth + rhs.smooth,
            ceiling_printed: self.ceiling_printed + rhs.ceiling_printed,
            ceiling_measure: self.ceiling_measure + rhs.ceiling_measure,
            at_discontinuity: self.at_discontinuity || rhs.at_discontinuity,
        }
    }
}

impl Mul<f64> for Derivative {
    type Output = Derivative;

    fn mul(self, s: f64) -> Derivative {
        Derivative {
            smooth: self.smooth * s,
            ceiling_printed: self.ceiling_printed * s,
            ceiling_measure: self.ceiling_measure * s,
            at_discontinuity: self.at_discontinuity,
        }
    }
}

fn is_integral(x: f64) -> bool {
    x.fract() == 0.0
}

/// Probability that a link on the first `r` hops goes down within `t_pr`,
/// under exponential link uptime with mean `mu_k`.
pub fn uplink_change_probability(r: u32, t_pr: f64, mu_k: f64) -> Result<f64> {
    if !(mu_k > 0.0) {
        return Err(invalid("mu_k", mu_k, "must be > 0"));
    }
    if !(t_pr >= 0.0) {
        return Err(invalid("t_pr", t_pr, "must be >= 0"));
    }
    Ok(-(-(r as f64) * t_pr / mu_k).exp_m1())
}

fn link_break(r: u32, t_pr: f64, mu_k: f64) -> f64 {
    -(-(r as f64) * t_pr / mu_k).exp_m1()
}

/// Expected data packets lost to route failure during one periodic interval.
pub fn packet_failure_overhead(p: &ModelParams) -> f64 {
    let arrivals = p.lambda() * p.t_pr();
    let per_path: f64 = (0..=p.l_avg())
        .map(|r| link_break(r, p.t_pr(), p.mu_k()) * arrivals)
        .sum();
    p.pn_avg() as f64 * per_path
}

/// `k n^3 / (B * interval)` with a continuous node count.
pub fn periodic_term(k: f64, n: f64, bandwidth: f64, interval: f64) -> f64 {
    k * n.powi(3) / (bandwidth * interval)
}

/// Periodic table-broadcast overhead in bits/s.
pub fn periodic_overhead(p: &ModelParams) -> f64 {
    periodic_term(p.k(), p.n() as f64, p.bandwidth(), p.t_pr())
}

/// Overhead of one triggered update, `ceil(x) / x` with `x = t_trig / t_pr`.
pub fn trigger_ratio(t_trig: f64, t_pr: f64) -> Result<f64> {
    if !(t_trig > 0.0) {
        return Err(invalid("t_trig", t_trig, "must be > 0"));
    }
    if !(t_pr > 0.0) {
        return Err(invalid("t_pr", t_pr, "must be > 0"));
    }
    let x = t_trig / t_pr;
    Ok(x.ceil() / x)
}

fn ratio(t_trig: f64, interval: f64) -> f64 {
    let x = t_trig / interval;
    x.ceil() / x
}

/// Worst-case triggered-update overhead when every node triggers once.
pub fn trigger_overhead(p: &ModelParams) -> f64 {
    p.n() as f64 * ratio(p.t_trig(), p.t_pr())
}

pub fn aggregate_overhead(p: &ModelParams) -> OverheadBreakdown {
    OverheadBreakdown::new(
        packet_failure_overhead(p),
        periodic_overhead(p),
        trigger_overhead(p),
    )
}

/// Derivative of the trigger sum with respect to the interval it is
/// evaluated at. `scale` is `d interval / d variable`.
fn trigger_interval_derivative(nodes: f64, t_trig: f64, interval: f64, scale: f64) -> Derivative {
    let y = t_trig / (interval * interval);
    let x = t_trig / interval;
    let printed = ((-y).ceil() + y) / (t_trig * t_trig / (interval * interval));
    Derivative {
        smooth: 0.0,
        ceiling_printed: nodes * printed,
        // d/d(interval) of ceil(x) * interval / t_trig with ceil(x) frozen.
        ceiling_measure: nodes * x.ceil() / t_trig * scale,
        at_discontinuity: is_integral(x) || is_integral(y),
    }
}

/// Sensitivity of the aggregate overhead to the periodic interval.
pub fn sensitivity_tpr(p: &ModelParams) -> Derivative {
    let (t, mu) = (p.t_pr(), p.mu_k());
    let failure: f64 = (0..=p.l_avg())
        .map(|r| {
            let z = r as f64 * t / mu;
            let e = (-z).exp();
            1.0 - e + z * e
        })
        .sum();
    let smooth = p.path_load() * failure - p.k() * (p.n() as f64).powi(3) / (p.bandwidth() * t * t);
    Derivative::smooth(smooth) + trigger_interval_derivative(p.n() as f64, p.t_trig(), t, 1.0)
}

/// Sensitivity to the arrival rate. Always non-negative.
pub fn sensitivity_lambda(p: &ModelParams) -> f64 {
    let t = p.t_pr();
    let s: f64 = (0..=p.l_avg())
        .map(|r| t * link_break(r, t, p.mu_k()))
        .sum();
    p.pn_avg() as f64 * s
}

/// The ceiling-only sum printed for the trigger-epoch sensitivity, with an
/// explicit number of summed terms (`terms + 1` summands, `r = 0..=terms`).
pub fn trigger_epoch_sensitivity(terms: u32, t_pr: f64, t_trig: f64) -> Derivative {
    let inv = 1.0 / (t_pr * t_pr);
    let per_term = (inv.ceil() - inv) / (t_trig * t_trig / (t_pr * t_pr));
    let x = t_trig / t_pr;
    Derivative {
        smooth: 0.0,
        ceiling_printed: (terms as f64 + 1.0) * per_term,
        ceiling_measure: -(terms as f64) * x.ceil() * t_pr / (t_trig * t_trig),
        at_discontinuity: is_integral(x),
    }
}

/// Sensitivity to the triggered-update epoch `T`.
pub fn sensitivity_t(p: &ModelParams) -> Derivative {
    trigger_epoch_sensitivity(p.n(), p.t_pr(), p.t_trig())
}

/// Sensitivity to the mean link uptime. Always non-positive.
pub fn sensitivity_mu(p: &ModelParams) -> f64 {
    let (t, mu) = (p.t_pr(), p.mu_k());
    let s: f64 = (0..=p.l_avg())
        .map(|r| {
            let z = r as f64 * t / mu;
            -(r as f64 * t / (mu * mu)) * (-z).exp()
        })
        .sum();
    p.path_load() * t * s
}

/// Sensitivity to the node count, `3 k n^2 / (B t_pr)`.
pub fn sensitivity_n(p: &ModelParams) -> f64 {
    3.0 * p.k() * (p.n() as f64).powi(2) / (p.bandwidth() * p.t_pr())
}

/// Total derivative along `t_pr` when the trigger epoch is coupled to it
/// with slope `dt_trig_dt_pr`.
pub fn total_derivative_tpr(p: &ModelParams, dt_trig_dt_pr: f64) -> Derivative {
    sensitivity_tpr(p) + sensitivity_t(p) * dt_trig_dt_pr
}

/// Left side minus right side of the stationarity condition
/// `d ro / d t_pr = 0`, as printed: `C * sum[(1-e^{-x}) + e^{-x}]` against
/// `k n^3 / t_pr^2` minus the ceiling term.
pub fn stationarity_residual(p: &ModelParams) -> f64 {
    let (t, mu, tt) = (p.t_pr(), p.mu_k(), p.t_trig());
    let lhs = p.path_load()
        * (0..=p.l_avg())
            .map(|r| {
                let z = r as f64 * t / mu;
                (1.0 - (-z).exp()) + (-z).exp()
            })
            .sum::<f64>();
    let y = tt / (t * t);
    let rhs = p.k() * (p.n() as f64).powi(3) / (t * t) - ((-y).ceil() + y) / (tt * tt / (t * t));
    lhs - rhs
}

const RESIDUAL_TOL: f64 = 1e-9;
const BRACKET_TOL: f64 = 1e-12;

/// Bisection on [`stationarity_residual`] over `t_pr`.
///
/// Stops once `|residual| < 1e-9` or the bracket is narrower than `1e-12`.
/// A collapsed bracket with a large residual is a sign change across a
/// jump of the ceiling term, reported as [`ModelError::DiscontinuousCrossing`].
pub fn solve_optimal_tpr(p: &ModelParams, t_lo: f64, t_hi: f64) -> Result<f64> {
    let eval = |t: f64| -> Result<f64> { Ok(stationarity_residual(&p.with(|i| i.t_pr = t)?)) };
    let (mut lo, mut hi) = if t_lo <= t_hi {
        (t_lo, t_hi)
    } else {
        (t_hi, t_lo)
    };
    let mut f_lo = eval(lo)?;
    if f_lo.abs() < RESIDUAL_TOL {
        return Ok(lo);
    }
    let f_hi = eval(hi)?;
    if f_hi.abs() < RESIDUAL_TOL {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(ModelError::NoRootInBracket { lo, hi });
    }
    loop {
        let mid = lo + (hi - lo) / 2.0;
        let f_mid = eval(mid)?;
        if f_mid.abs() < RESIDUAL_TOL {
            return Ok(mid);
        }
        if hi - lo < BRACKET_TOL || mid <= lo || mid >= hi {
            return Err(ModelError::DiscontinuousCrossing {
                at: mid,
                residual: f_mid.abs(),
            });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

/// Stationarity residual written in the update coefficient `h = t_pr / mu_k`.
pub fn update_coefficient_residual(p: &ModelParams, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("h", h, "must be > 0"));
    }
    let at = p.with(|i| i.t_pr = i.mu_k * h)?;
    Ok(stationarity_residual(&at))
}

/// OLSR periodic term for HELLO interval `h` and TC interval `2h`.
pub fn olsr_periodic_term(k: f64, n: f64, bandwidth: f64, hello: f64) -> f64 {
    let hello_part = periodic_term(k, n, bandwidth, hello);
    hello_part + k * n.powi(3) / (bandwidth * (2.0 * hello))
}

/// OLSR overhead with HELLO and TC intervals replacing the single periodic
/// interval. The trigger term uses the combined interval `H + 2H`.
pub fn olsr_overhead(p: &ModelParams) -> OverheadBreakdown {
    let n = p.n() as f64;
    OverheadBreakdown::new(
        packet_failure_overhead(p),
        olsr_periodic_term(p.k(), n, p.bandwidth(), p.hello()),
        n * ratio(p.t_trig(), 3.0 * p.hello()),
    )
}

/// Smooth part of the OLSR HELLO-interval sensitivity.
pub fn olsr_periodic_sensitivity(k: f64, n: f64, bandwidth: f64, hello: f64) -> f64 {
    -k * n.powi(3) / (bandwidth * hello * hello) - k * n.powi(3) / (bandwidth * 2.0 * hello * hello)
}

/// Sensitivity of [`olsr_overhead`] to the HELLO interval.
pub fn olsr_sensitivity_h(p: &ModelParams) -> Derivative {
    let n = p.n() as f64;
    let h = p.hello();
    Derivative::smooth(olsr_periodic_sensitivity(p.k(), n, p.bandwidth(), h))
        + trigger_interval_derivative(n, p.t_trig(), 3.0 * h, 3.0)
}

/// All five sensitivities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivities {
    pub d_tpr: Derivative,
    pub d_lambda: f64,
    pub d_t: Derivative,
    pub d_mu: f64,
    pub d_n: f64,
}

pub fn sensitivities(p: &ModelParams) -> Sensitivities {
    Sensitivities {
        d_tpr: sensitivity_tpr(p),
        d_lambda: sensitivity_lambda(p),
        d_t: sensitivity_t(p),
        d_mu: sensitivity_mu(p),
        d_n: sensitivity_n(p),
    }
}
