use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use manet_overhead::metrics::MetricsRecord;
use manet_overhead::model::{
    aggregate_overhead, olsr_overhead, olsr_sensitivity_h, sensitivities, CeilingMode, ModelInputs,
    ModelParams, OverheadBreakdown,
};
use manet_overhead::report::{
    fmt_opt, fmt_sig9, overhead_fields, sensitivity_fields, sim_header, sim_row, OVERHEAD_COLUMNS,
    SENSITIVITY_COLUMNS,
};
use manet_overhead::scenario::{
    MobilityModel, NrlCounting, ProtocolKind, ScenarioConfig, TcTrigger,
};
use manet_overhead::sim::Simulation;

use crate::{
    Axis, Ceiling, Cli, CliError, Command, CompareArgs, ModelCommand, ModelEvalArgs, ModelFlags,
    ModelSweepArgs, OutputFlags, ScenarioFlags, SimCommand, SimRunArgs, SimSweepArgs, SweepAxis,
};

pub const MODEL_EVAL_COLUMNS: [&str; 5] = ["form", "ro_pf", "ro_pr", "ro_tr", "ro_total"];
pub const COMPARE_COLUMNS: [&str; 7] = [
    "protocol", "quantity", "measured", "modeled", "basis", "ratio", "flag",
];

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Model(ModelCommand::Eval(a)) => model_eval(a),
        Command::Model(ModelCommand::Sweep(a)) => model_sweep(a),
        Command::Sim(SimCommand::Run(a)) => sim_run(a),
        Command::Sim(SimCommand::Sweep(a)) => sim_sweep(a),
        Command::Compare(a) => compare(a),
    }
}

/// Where CSV, metadata and the human-readable report go.
struct Sink {
    out: Option<PathBuf>,
    csv: csv::Writer<Box<dyn Write>>,
}

impl Sink {
    fn open(flags: &OutputFlags) -> Result<Self, CliError> {
        let w: Box<dyn Write> = match &flags.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?,
            )),
            None => Box::new(io::stdout().lock()),
        };
        let csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        Ok(Self {
            out: flags.out.clone(),
            csv,
        })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.csv.write_record(fields).map_err(|e| self.csv_error(e))
    }

    fn csv_error(&self, e: csv::Error) -> CliError {
        let path = self
            .out
            .as_ref()
            .map_or("<stdout>".to_string(), |p| p.display().to_string());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::Internal(format!("csv output: {other:?}")),
        }
    }

    /// Flushes the CSV, then writes metadata next to it (or to standard
    /// error when the CSV went to standard output).
    fn finish(mut self, meta: &str) -> Result<(), CliError> {
        self.csv.flush().map_err(|e| {
            CliError::io(
                self.out
                    .as_ref()
                    .map_or("<stdout>".into(), |p| p.display().to_string()),
                e,
            )
        })?;
        match &self.out {
            Some(p) => {
                let path = meta_path(p);
                std::fs::write(&path, meta).map_err(|e| CliError::io(path.display().to_string(), e))
            }
            None => {
                let mut err = io::stderr().lock();
                for line in meta.lines() {
                    let _ = writeln!(err, "# {line}");
                }
                Ok(())
            }
        }
    }

    fn report(&self, text: &str) {
        if self.out.is_some() {
            print!("{text}");
        } else {
            eprint!("{text}");
        }
    }
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_os_string();
    s.push(".meta.toml");
    PathBuf::from(s)
}

fn model_inputs(f: &ModelFlags) -> ModelInputs {
    let mut i = ModelInputs::default();
    if let Some(v) = f.n {
        i.n = v;
    }
    if let Some(v) = f.bandwidth {
        i.bandwidth = v;
    }
    if let Some(v) = f.k {
        i.k = v;
    }
    if let Some(v) = f.t_pr {
        i.t_pr = v;
    }
    if let Some(v) = f.mu_k {
        i.mu_k = v;
    }
    if let Some(v) = f.lambda {
        i.lambda = v;
    }
    if let Some(v) = f.t_trig {
        i.t_trig = v;
    }
    if let Some(v) = f.l_avg {
        i.l_avg = v;
    }
    if let Some(v) = f.pn_avg {
        i.pn_avg = v;
    }
    if let Some(v) = f.hello {
        i.hello = v;
    }
    i
}

fn model_meta(i: &ModelInputs, extra: &[(&str, toml::Value)]) -> String {
    let mut root = toml::Table::new();
    root.insert("tool".into(), tool_table());
    let mut run = toml::Table::new();
    for (k, v) in extra {
        run.insert((*k).into(), v.clone());
    }
    root.insert("run".into(), run.into());
    root.insert("model".into(), model_table(i));
    toml::to_string(&root).expect("metadata serializes")
}

fn model_table(i: &ModelInputs) -> toml::Value {
    let mut model = toml::Table::new();
    model.insert("n".into(), (i.n as i64).into());
    model.insert("bandwidth".into(), i.bandwidth.into());
    model.insert("k".into(), i.k.into());
    model.insert("t_pr".into(), i.t_pr.into());
    model.insert("mu_k".into(), i.mu_k.into());
    model.insert("lambda".into(), i.lambda.into());
    model.insert("t_trig".into(), i.t_trig.into());
    model.insert("l_avg".into(), (i.l_avg as i64).into());
    model.insert("pn_avg".into(), (i.pn_avg as i64).into());
    model.insert("hello".into(), i.hello.into());
    model.into()
}

fn tool_table() -> toml::Value {
    let mut t = toml::Table::new();
    t.insert("name".into(), env!("CARGO_PKG_NAME").into());
    t.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    t.into()
}

fn scenario_meta(config: &ScenarioConfig, extra: &[(&str, toml::Value)]) -> String {
    let mut head = toml::Table::new();
    head.insert("tool".into(), tool_table());
    let mut run = toml::Table::new();
    for (k, v) in extra {
        run.insert((*k).into(), v.clone());
    }
    head.insert("run".into(), run.into());
    format!(
        "{}\n{}",
        toml::to_string(&head).expect("metadata serializes"),
        config.to_toml_string()
    )
}

fn model_eval(a: &ModelEvalArgs) -> Result<(), CliError> {
    let inputs = model_inputs(&a.model);
    let params = ModelParams::try_from(inputs)?;
    let (form, o) = if a.olsr {
        ("olsr", olsr_overhead(&params))
    } else {
        ("aggregate", aggregate_overhead(&params))
    };
    let mut sink = Sink::open(&a.output)?;
    sink.row(MODEL_EVAL_COLUMNS)?;
    sink.row(std::iter::once(form.to_string()).chain(overhead_fields(&o)))?;
    sink.report(&format_breakdown(form, &o));
    sink.finish(&model_meta(
        &inputs,
        &[("command", "model eval".into()), ("form", form.into())],
    ))
}

fn format_breakdown(form: &str, o: &OverheadBreakdown) -> String {
    format!(
        "form      {form}\n\
         ro_pf     {} packets per interval\n\
         ro_pr     {} bits/s\n\
         ro_tr     {} (ratio sum, dimensionless)\n\
         ro_total  {} (raw sum of the three)\n",
        fmt_sig9(o.ro_pf),
        fmt_sig9(o.ro_pr),
        fmt_sig9(o.ro_tr),
        fmt_sig9(o.ro_total)
    )
}

fn set_axis(i: &mut ModelInputs, axis: Axis, v: f64) {
    match axis {
        Axis::N => i.n = v.round() as u32,
        Axis::TPr => i.t_pr = v,
        Axis::MuK => i.mu_k = v,
        Axis::Lambda => i.lambda = v,
        Axis::TTrig => i.t_trig = v,
        Axis::Hello => i.hello = v,
    }
}

fn model_sweep(a: &ModelSweepArgs) -> Result<(), CliError> {
    if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
        return Err(CliError::Usage(format!(
            "--min ({}) must be below --max ({})",
            a.min, a.max
        )));
    }
    if a.steps < 2 {
        return Err(CliError::Usage(format!(
            "--steps must be >= 2, got {}",
            a.steps
        )));
    }
    if a.axis == Axis::N && a.min < 1.0 {
        return Err(CliError::Usage("--min must be >= 1 on the n axis".into()));
    }
    let mode = match a.ceiling {
        Ceiling::Printed => CeilingMode::Printed,
        Ceiling::Measure => CeilingMode::MeasureTheoretic,
    };
    let base = model_inputs(&a.model);
    ModelParams::try_from(base)?;

    let mut header = vec![a.axis.name()];
    header.extend(OVERHEAD_COLUMNS);
    header.extend(SENSITIVITY_COLUMNS);
    if a.olsr {
        header[1 + OVERHEAD_COLUMNS.len()] = "d_hello";
    }

    let mut sink = Sink::open(&a.output)?;
    sink.row(&header)?;
    for i in 0..a.steps {
        let v = a.min + (a.max - a.min) * i as f64 / (a.steps - 1) as f64;
        let mut inputs = base;
        set_axis(&mut inputs, a.axis, v);
        let p = ModelParams::try_from(inputs)?;
        let shown = if a.axis == Axis::N {
            p.n().to_string()
        } else {
            fmt_sig9(v)
        };
        let mut row = vec![shown];
        let s = sensitivities(&p);
        let mut sens = sensitivity_fields(&s, mode);
        if a.olsr {
            row.extend(overhead_fields(&olsr_overhead(&p)));
            sens[0] = fmt_sig9(olsr_sensitivity_h(&p).value(mode));
        } else {
            row.extend(overhead_fields(&aggregate_overhead(&p)));
        }
        row.extend(sens);
        sink.row(&row)?;
    }
    sink.report(&format!(
        "{} rows over {} in [{}, {}], ceiling mode {:?}\n",
        a.steps,
        a.axis.name(),
        fmt_sig9(a.min),
        fmt_sig9(a.max),
        mode
    ));
    let extra = [
        ("command", "model sweep".into()),
        ("axis", a.axis.name().into()),
        ("min", a.min.into()),
        ("max", a.max.into()),
        ("steps", (a.steps as i64).into()),
        ("ceiling", format!("{:?}", a.ceiling).to_lowercase().into()),
        ("olsr", a.olsr.into()),
    ];
    sink.finish(&model_meta(&base, &extra))
}

fn parse_flag<T>(flag: &str, v: &str, options: &[(&str, T)]) -> Result<T, CliError>
where
    T: Copy,
{
    options
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(v.trim()))
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|o| o.0).collect();
            CliError::Usage(format!(
                "--{flag}: unknown value `{v}` (expected {})",
                names.join(", ")
            ))
        })
}

fn parse_protocol(flag: &str, v: &str) -> Result<ProtocolKind, CliError> {
    v.parse()
        .map_err(|e: String| CliError::Usage(format!("--{flag}: {e}")))
}

pub fn load_scenario(f: &ScenarioFlags) -> Result<ScenarioConfig, CliError> {
    let mut c = match &f.config {
        Some(p) => ScenarioConfig::from_path(p)?,
        None => ScenarioConfig::default(),
    };
    macro_rules! set {
        ($($field:ident => $target:expr),* $(,)?) => {
            $(if let Some(v) = f.$field { $target = v; })*
        };
    }
    set! {
        nodes => c.network.nodes,
        area_m => c.network.area_m,
        range_m => c.network.range_m,
        bandwidth_bps => c.network.bandwidth_bps,
        propagation_s => c.network.propagation_s,
        flows => c.traffic.flows,
        rate_pps => c.traffic.rate_pps,
        payload_bytes => c.traffic.payload_bytes,
        start_s => c.traffic.start_s,
        speed_min => c.mobility.speed_min,
        speed_max => c.mobility.speed_max,
        pause_s => c.mobility.pause_s,
        step_s => c.mobility.step_s,
        periodic_s => c.protocol.periodic_s,
        hello_s => c.protocol.hello_s,
        fsr_inner_hops => c.protocol.fsr_inner_hops,
        fsr_outer_factor => c.protocol.fsr_outer_factor,
        neighbor_loss_intervals => c.protocol.neighbor_loss_intervals,
        duration_s => c.sim.duration_s,
    }
    if let Some(v) = f.settling_s {
        c.protocol.settling_s = Some(v);
    }
    if let Some(v) = &f.mobility {
        c.mobility.model = parse_flag(
            "mobility",
            v,
            &[
                ("static", MobilityModel::Static),
                ("random_waypoint", MobilityModel::RandomWaypoint),
            ],
        )?;
    }
    if let Some(v) = &f.protocol {
        c.protocol.name = parse_protocol("protocol", v)?;
    }
    if let Some(v) = &f.tc_trigger {
        c.protocol.tc_trigger = parse_flag(
            "tc-trigger",
            v,
            &[
                ("immediate", TcTrigger::Immediate),
                ("scheduled", TcTrigger::Scheduled),
            ],
        )?;
    }
    if let Some(v) = &f.nrl {
        c.sim.nrl = parse_flag(
            "nrl",
            v,
            &[
                ("per_hop", NrlCounting::PerHop),
                ("per_origination", NrlCounting::PerOrigination),
            ],
        )?;
    }
    c.validate()?;
    Ok(c)
}

fn run_one(
    config: &ScenarioConfig,
    seed: u64,
    trace: Option<&Path>,
) -> Result<MetricsRecord, CliError> {
    let mut b = Simulation::builder(config.clone(), seed);
    if let Some(p) = trace {
        let f = File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?;
        b = b.trace(Box::new(BufWriter::new(f)));
    }
    Ok(b.build()?.run()?)
}

fn summary(config: &ScenarioConfig, seed: u64, r: &MetricsRecord) -> String {
    format!(
        "{} seed {seed}: {} nodes, {} s\n  \
         throughput {} bit/s, mean delay {} s, NRL {}\n  \
         data sent {} delivered {} dropped {} in flight {}\n  \
         control {} transmissions ({} periodic, {} triggered), {} bits\n",
        config.protocol.name,
        config.network.nodes,
        fmt_sig9(config.sim.duration_s),
        fmt_sig9(r.throughput_bps),
        fmt_opt(r.mean_delay_s),
        fmt_opt(r.nrl),
        r.data_sent,
        r.data_delivered,
        r.data_dropped,
        r.data_in_flight,
        r.ctrl_transmissions,
        r.ctrl_periodic,
        r.ctrl_triggered,
        r.ctrl_bits,
    )
}

fn sim_run(a: &SimRunArgs) -> Result<(), CliError> {
    let config = load_scenario(&a.scenario)?;
    let record = run_one(&config, a.seed, a.trace.as_deref())?;
    let mut sink = Sink::open(&a.output)?;
    sink.row(sim_header(a.extended))?;
    sink.row(sim_row(&config, a.seed, &record, a.extended))?;
    sink.report(&summary(&config, a.seed, &record));
    let seed = i64::try_from(a.seed).map_or_else(|_| a.seed.to_string().into(), toml::Value::from);
    sink.finish(&scenario_meta(
        &config,
        &[("command", "sim run".into()), ("seed", seed)],
    ))
}

fn parse_protocols(list: &[String]) -> Result<Vec<ProtocolKind>, CliError> {
    if list.is_empty() {
        return Err(CliError::Usage(
            "--protocols needs at least one protocol".into(),
        ));
    }
    list.iter()
        .map(|p| parse_protocol("protocols", p))
        .collect()
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    })
}

struct Cell {
    protocol: ProtocolKind,
    value: f64,
    config: ScenarioConfig,
    seed: u64,
}

fn sim_sweep(a: &SimSweepArgs) -> Result<(), CliError> {
    let base = load_scenario(&a.scenario)?;
    let protocols = parse_protocols(&a.protocols)?;
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be >= 1".into()));
    }
    let axis_name = match a.axis {
        SweepAxis::PauseS => "pause_s",
        SweepAxis::Nodes => "nodes",
    };
    let mut cells = Vec::new();
    for &value in &a.values {
        for &protocol in &protocols {
            let mut config = base.clone();
            config.protocol.name = protocol;
            match a.axis {
                SweepAxis::PauseS => config.mobility.pause_s = value,
                SweepAxis::Nodes => {
                    if value.fract() != 0.0 || value < 1.0 {
                        return Err(CliError::Usage(format!(
                            "--values: node count {value} is not a positive integer"
                        )));
                    }
                    config.network.nodes = value as u32;
                }
            }
            config.validate()?;
            for i in 0..a.seeds {
                cells.push(Cell {
                    protocol,
                    value,
                    config: config.clone(),
                    seed: a.seed.wrapping_add(i as u64),
                });
            }
        }
    }

    let results: Vec<Result<MetricsRecord, CliError>> = cells
        .par_iter()
        .map(|c| run_one(&c.config, c.seed, None))
        .collect();

    let mut sink = Sink::open(&a.output)?;
    sink.row(sim_header(a.extended))?;
    let mut records = Vec::with_capacity(cells.len());
    for (cell, result) in cells.iter().zip(results) {
        let r = result.map_err(|e| {
            CliError::Internal(format!(
                "run {} {axis_name}={} seed={} failed: {e}",
                cell.protocol,
                fmt_sig9(cell.value),
                cell.seed
            ))
        })?;
        sink.row(sim_row(&cell.config, cell.seed, &r, a.extended))?;
        records.push(r);
    }
    sink.report(&sweep_report(
        axis_name, &a.values, &protocols, &cells, &records,
    ));
    let extra = [
        ("command", "sim sweep".into()),
        ("axis", axis_name.into()),
        (
            "values",
            toml::Value::Array(a.values.iter().map(|&v| v.into()).collect()),
        ),
        ("seeds", (a.seeds as i64).into()),
        ("first_seed", a.seed.to_string().into()),
        (
            "protocols",
            toml::Value::Array(protocols.iter().map(|p| p.as_str().into()).collect()),
        ),
    ];
    sink.finish(&scenario_meta(&base, &extra))
}

#[derive(Debug, Clone, Copy)]
pub struct CellMedians {
    pub throughput: Option<f64>,
    pub delay: Option<f64>,
    pub nrl: Option<f64>,
    pub ctrl: Option<f64>,
}

pub fn cell_medians<'a>(records: impl Iterator<Item = &'a MetricsRecord>) -> CellMedians {
    let mut thr = Vec::new();
    let mut delay = Vec::new();
    let mut nrl = Vec::new();
    let mut ctrl = Vec::new();
    for r in records {
        thr.push(r.throughput_bps);
        delay.extend(r.mean_delay_s);
        nrl.extend(r.nrl);
        ctrl.push(r.ctrl_transmissions as f64);
    }
    CellMedians {
        throughput: median(&mut thr),
        delay: median(&mut delay),
        nrl: median(&mut nrl),
        ctrl: median(&mut ctrl),
    }
}

fn sweep_report(
    axis: &str,
    values: &[f64],
    protocols: &[ProtocolKind],
    cells: &[Cell],
    records: &[MetricsRecord],
) -> String {
    let mut out = format!("medians per cell ({axis}, protocol)\n");
    out += &format!(
        "{:>10} {:>6} {:>14} {:>12} {:>10} {:>12}\n",
        axis, "proto", "throughput", "delay_s", "nrl", "ctrl_tx"
    );
    let mut tables = String::new();
    for &v in values {
        let mut row_medians = Vec::new();
        for &p in protocols {
            let m = cell_medians(
                cells
                    .iter()
                    .zip(records)
                    .filter(|(c, _)| c.protocol == p && c.value == v)
                    .map(|(_, r)| r),
            );
            out += &format!(
                "{:>10} {:>6} {:>14} {:>12} {:>10} {:>12}\n",
                fmt_sig9(v),
                p.as_str(),
                fmt_opt(m.throughput),
                fmt_opt(m.delay),
                fmt_opt(m.nrl),
                fmt_opt(m.ctrl)
            );
            row_medians.push((p, m));
        }
        let rank = |key: fn(&CellMedians) -> Option<f64>, descending: bool| -> String {
            let mut v: Vec<(ProtocolKind, f64)> = row_medians
                .iter()
                .filter_map(|(p, m)| key(m).map(|x| (*p, x)))
                .collect();
            v.sort_by(|a, b| {
                if descending {
                    b.1.total_cmp(&a.1)
                } else {
                    a.1.total_cmp(&b.1)
                }
            });
            v.iter()
                .map(|(p, _)| p.as_str())
                .collect::<Vec<_>>()
                .join(" > ")
        };
        tables += &format!(
            "{axis}={}: throughput {} | delay (low first) {} | nrl (low first) {}\n",
            fmt_sig9(v),
            rank(|m| m.throughput, true),
            rank(|m| m.delay, false),
            rank(|m| m.nrl, false)
        );
    }
    out + "\nordering\n" + &tables
}

fn compare(a: &CompareArgs) -> Result<(), CliError> {
    let base = load_scenario(&a.scenario)?;
    let protocols = parse_protocols(&a.protocols)?;
    let defaults = ModelInputs::default();
    let inputs = ModelInputs {
        n: base.network.nodes,
        bandwidth: base.network.bandwidth_bps,
        k: a.k.unwrap_or(defaults.k),
        t_pr: base.protocol.periodic_s,
        mu_k: a.mu_k.unwrap_or(defaults.mu_k),
        lambda: base.traffic.rate_pps,
        t_trig: a.t_trig.unwrap_or(defaults.t_trig),
        l_avg: a.l_avg.unwrap_or(defaults.l_avg),
        pn_avg: a.pn_avg.unwrap_or(defaults.pn_avg),
        hello: base.protocol.hello_s,
    };
    let params = ModelParams::try_from(inputs)?;
    let is_static = base.mobility.model == MobilityModel::Static || base.mobility.speed_max == 0.0;

    let configs: Vec<ScenarioConfig> = protocols
        .iter()
        .map(|&p| {
            let mut c = base.clone();
            c.protocol.name = p;
            c
        })
        .collect();
    let results: Vec<Result<MetricsRecord, CliError>> = configs
        .par_iter()
        .map(|c| run_one(c, a.seed, None))
        .collect();

    let mut sink = Sink::open(&a.output)?;
    sink.row(COMPARE_COLUMNS)?;
    let mut report = String::new();
    let duration = base.sim.duration_s;
    for (config, result) in configs.iter().zip(results) {
        let r = result?;
        let p = config.protocol.name;
        let (model, interval) = match p {
            ProtocolKind::Olsr => (olsr_overhead(&params), 3.0 * params.hello()),
            _ => (aggregate_overhead(&params), params.t_pr()),
        };
        let rows = compare_rows(&model, interval, duration, &r, is_static);
        for row in &rows {
            sink.row([
                p.as_str().to_string(),
                row.quantity.to_string(),
                row.measured.to_string(),
                fmt_sig9(row.modeled),
                row.basis.clone(),
                fmt_opt(row.ratio),
                row.flag.to_string(),
            ])?;
            report += &format!(
                "{:>5} {:>10}: measured {:>10} modeled {:>14} ratio {:>12} {}\n",
                p.as_str(),
                row.quantity,
                row.measured,
                fmt_sig9(row.modeled),
                fmt_opt(row.ratio),
                row.flag
            );
        }
    }
    sink.report(&report);
    let seed = a.seed.to_string();
    let mut meta = scenario_meta(
        &base,
        &[("command", "compare".into()), ("seed", seed.into())],
    );
    let mut model = toml::Table::new();
    model.insert("model".into(), model_table(&inputs));
    meta += "\n";
    meta += &toml::to_string(&model).expect("metadata serializes");
    sink.finish(&meta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub quantity: &'static str,
    pub measured: u64,
    pub modeled: f64,
    pub basis: String,
    pub ratio: Option<f64>,
    pub flag: &'static str,
}

/// Measured counts next to their model counterparts over one run:
/// periodic transmissions against `ro_pr * duration`, triggered ones against
/// `ro_tr` per interval and packet failures against `ro_pf` per interval.
pub fn compare_rows(
    model: &OverheadBreakdown,
    interval: f64,
    duration: f64,
    r: &MetricsRecord,
    is_static: bool,
) -> Vec<CompareRow> {
    let intervals = duration / interval;
    let row = |quantity, measured: u64, modeled: f64, basis: String, flag| CompareRow {
        quantity,
        measured,
        modeled,
        basis,
        ratio: (modeled != 0.0).then(|| measured as f64 / modeled),
        flag,
    };
    // Without movement the only triggered updates are the start-up ones.
    let static_flag = if is_static { "static regime" } else { "" };
    vec![
        row(
            "periodic",
            r.ctrl_periodic,
            model.ro_pr * duration,
            format!("ro_pr*{}", fmt_sig9(duration)),
            "",
        ),
        row(
            "triggered",
            r.ctrl_triggered,
            model.ro_tr * intervals,
            format!("ro_tr*{}/{}", fmt_sig9(duration), fmt_sig9(interval)),
            static_flag,
        ),
        row(
            "pf",
            r.pf_count,
            model.ro_pf * intervals,
            format!("ro_pf*{}/{}", fmt_sig9(duration), fmt_sig9(interval)),
            "",
        ),
    ]
}
