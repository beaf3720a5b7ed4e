//! CSV field layouts shared by the command line and the tests.
//!
//! Floats are printed with 9 significant digits, `%.9g` style, so identical
//! runs give identical bytes. Undefined values print as `NA`.

use crate::metrics::MetricsRecord;
use crate::model::{CeilingMode, OverheadBreakdown, Sensitivities};
use crate::scenario::ScenarioConfig;

pub const NA: &str = "NA";

pub const SIM_COLUMNS: [&str; 13] = [
    "protocol",
    "seed",
    "nodes",
    "pause_s",
    "speed_max",
    "throughput_bps",
    "mean_delay_s",
    "nrl",
    "data_sent",
    "data_delivered",
    "data_dropped",
    "ctrl_periodic",
    "ctrl_triggered",
];

/// Appended after [`SIM_COLUMNS`] when extended output is requested.
pub const SIM_EXTENDED_COLUMNS: [&str; 6] = [
    "delay_p50_s",
    "delay_p95_s",
    "data_in_flight",
    "pf_count",
    "ctrl_transmissions",
    "ctrl_bits",
];

pub const OVERHEAD_COLUMNS: [&str; 4] = ["ro_pf", "ro_pr", "ro_tr", "ro_total"];

pub const SENSITIVITY_COLUMNS: [&str; 5] = ["d_tpr", "d_lambda", "d_mu", "d_n", "d_t"];

/// `%.9g`: 9 significant digits, exponent form outside `[1e-4, 1e9)`,
/// trailing zeros removed.
pub fn fmt_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), fmt_sig9)
}

pub fn sim_header(extended: bool) -> Vec<&'static str> {
    let mut h = SIM_COLUMNS.to_vec();
    if extended {
        h.extend(SIM_EXTENDED_COLUMNS);
    }
    h
}

pub fn sim_row(
    config: &ScenarioConfig,
    seed: u64,
    r: &MetricsRecord,
    extended: bool,
) -> Vec<String> {
    let mut row = vec![
        config.protocol.name.to_string(),
        seed.to_string(),
        config.network.nodes.to_string(),
        fmt_sig9(config.mobility.pause_s),
        fmt_sig9(config.mobility.speed_max),
        fmt_sig9(r.throughput_bps),
        fmt_opt(r.mean_delay_s),
        fmt_opt(r.nrl),
        r.data_sent.to_string(),
        r.data_delivered.to_string(),
        r.data_dropped.to_string(),
        r.ctrl_periodic.to_string(),
        r.ctrl_triggered.to_string(),
    ];
    if extended {
        row.extend([
            fmt_opt(r.delay_p50_s),
            fmt_opt(r.delay_p95_s),
            r.data_in_flight.to_string(),
            r.pf_count.to_string(),
            r.ctrl_transmissions.to_string(),
            r.ctrl_bits.to_string(),
        ]);
    }
    row
}

pub fn overhead_fields(o: &OverheadBreakdown) -> Vec<String> {
    [o.ro_pf, o.ro_pr, o.ro_tr, o.ro_total]
        .into_iter()
        .map(fmt_sig9)
        .collect()
}

pub fn sensitivity_fields(s: &Sensitivities, mode: CeilingMode) -> Vec<String> {
    [
        s.d_tpr.value(mode),
        s.d_lambda,
        s.d_mu,
        s.d_n,
        s.d_t.value(mode),
    ]
    .into_iter()
    .map(fmt_sig9)
    .collect()
}
