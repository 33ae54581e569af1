//! Command-line front end: subcommand dispatch and report emission.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{config_hash, parse_unvalidated, validate_config, Format, RunConfig, Strictness};
use crate::error::{Error, Result};
use crate::graphs::{
    check_admissible, check_adapted, parse_edge_list, pf_pairing, pf_residual, AdaptedFunction, GraphPatch, Lattice,
    Orientation, PfWeight,
};
use crate::model::ReservoirKind;
use crate::ness::NessEvaluator;
use crate::oracle::{build_truncation, contour_identity_check, AnalyticEvolution, ContourStatus};
use crate::selfenergy::{check_condition_a, ConditionA, ConditionB};
use crate::spectral::{fmt12, graph_coefficients};
use crate::transport::{transport_report, PositivityVerdict, TransportReport};

#[derive(Debug, Parser)]
#[command(name = "boson-ness", version, about = "Steady states and transport of a bosonic mode coupled to reservoirs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Overrides `numerics.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Reservoir spectral densities.
    Density,
    /// Boundary values of the self-energy and η(0).
    Eta,
    /// Verdicts of conditions (A), (B) and (D).
    Check,
    /// Particle, energy and Josephson currents.
    Currents,
    /// Entropy production, open channels and positivity verdict.
    Epr,
    /// Truncated-matrix dynamics with the analytic comparison.
    Evolve,
    /// Adapted, admissible and PF-weight checks on the reservoir graphs.
    GraphCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Eta => "eta",
            Command::Check => "check",
            Command::Currents => "currents",
            Command::Epr => "epr",
            Command::Evolve => "evolve",
            Command::GraphCheck => "graph-check",
        }
    }

    fn strictness(self) -> Strictness {
        match self {
            Command::Density | Command::Eta | Command::Check | Command::Evolve | Command::GraphCheck => {
                Strictness::AllowUncoupled
            }
            Command::Currents | Command::Epr => Strictness::Full,
        }
    }
}

/// One emitted file: CSV rows (without header comments) and the JSON payload.
struct Artifact {
    name: String,
    csv: String,
}

struct Report {
    command: Command,
    hash: String,
    verdicts: Value,
    artifacts: Vec<Artifact>,
    data: Value,
}

impl Report {
    fn csv_header(&self) -> String {
        let mut s = format!("# config_sha256={}\n# subcommand={}\n", self.hash, self.command.name());
        if let Value::Object(map) = &self.verdicts {
            for (k, v) in map {
                s.push_str(&format!("# {k}={}\n", compact(v)));
            }
        }
        s
    }

    fn render(&self, format: Format) -> Vec<(String, String)> {
        match format {
            Format::Csv => {
                let head = self.csv_header();
                self.artifacts
                    .iter()
                    .map(|a| (format!("{}.csv", a.name), format!("{head}{}", a.csv)))
                    .collect()
            }
            Format::Json => {
                let doc = json!({
                    "config_sha256": self.hash,
                    "subcommand": self.command.name(),
                    "verdicts": round_numbers(&self.verdicts),
                    "data": round_numbers(&self.data),
                });
                let text = serde_json::to_string_pretty(&doc).unwrap_or_default() + "\n";
                vec![(format!("{}.json", self.command.name().replace('-', "_")), text)]
            }
        }
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => round_numbers(other).to_string(),
    }
}

/// Rounds every float to 12 significant digits.
fn round_numbers(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            fmt12(x).parse::<f64>().map(Value::from).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.iter().map(round_numbers).collect()),
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), round_numbers(v))).collect()),
        other => other.clone(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).unwrap_or(Value::Null)
}

/// Reads, overrides and validates the configuration.
pub fn load_config(path: &Path, seed: Option<u64>, strictness: Strictness) -> Result<(RunConfig, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let hash = config_hash(&text);
    let mut cfg = parse_unvalidated(&text)?;
    if seed.is_some() {
        cfg.numerics.seed = seed;
    }
    let errors = validate_config(&cfg, strictness);
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok((cfg, hash))
}

#[derive(Serialize)]
struct Verdicts {
    condition_a: Option<ConditionA>,
    condition_b: ConditionB,
    condition_d: String,
    eta_zero: Option<f64>,
}

fn verdicts(ev: &NessEvaluator, with_a: bool) -> Result<Value> {
    let a = if with_a { Some(check_condition_a(&ev.eta.rho_g)?) } else { None };
    let v = Verdicts {
        condition_a: a,
        condition_b: ev.condition_b.clone(),
        condition_d: ev.eta.condition_d.clone().unwrap_or_else(|| "pass".into()),
        eta_zero: ev.eta.eta_zero_checked().ok(),
    };
    let mut val = to_value(&v);
    if let Value::Object(m) = &mut val {
        // flat summaries for CSV headers
        let b = &ev.condition_b;
        m.insert(
            "condition_b".into(),
            Value::String(format!(
                "{} min_abs={} argmin={} threshold={}",
                if b.pass { "pass" } else { "fail" },
                fmt12(b.min_abs),
                fmt12(b.argmin),
                fmt12(b.threshold)
            )),
        );
        if let Some(a) = &v.condition_a {
            m.insert(
                "condition_a".into(),
                Value::String(format!("{} c_g={}", if a.pass { "pass" } else { "fail" }, fmt12(a.c_g))),
            );
        } else {
            m.remove("condition_a");
        }
    }
    Ok(val)
}

fn build(cfg: &RunConfig) -> Result<NessEvaluator> {
    NessEvaluator::build_unchecked(&cfg.model, &cfg.numerics.spectral_params(), cfg.numerics.threshold_b)
}

fn run_density(cfg: &RunConfig, ev: &NessEvaluator) -> Result<(Vec<Artifact>, Value)> {
    let mut arts = Vec::new();
    let mut summary = String::from("k,method,total_mass,norm_sq,relative_mass_error,pf_re,pf_im\n");
    let mut data = Vec::new();
    for (k, r) in ev.reservoirs.iter().enumerate() {
        arts.push(Artifact {
            name: format!("density_{k}"),
            csv: r.density.to_csv(),
        });
        let pf = r.pf_pairing.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        summary.push_str(&format!(
            "{k},{:?},{},{},{},{},{}\n",
            r.density.method,
            fmt12(r.density.total_mass),
            fmt12(r.density.norm_sq),
            fmt12(r.density.relative_mass_error()),
            fmt12(pf.re),
            fmt12(pf.im)
        ));
        data.push(json!({
            "method": to_value(&r.density.method),
            "total_mass": r.density.total_mass,
            "norm_sq": r.density.norm_sq,
            "relative_mass_error": r.density.relative_mass_error(),
            "pf_pairing": r.pf_pairing.map(|p| [p.re, p.im]),
            "nu": r.density.grid.nodes(),
            "rho": r.density.values,
        }));
    }
    let _ = cfg;
    arts.push(Artifact {
        name: "density_summary".into(),
        csv: summary,
    });
    Ok((arts, json!({ "reservoirs": data })))
}

fn run_eta(ev: &NessEvaluator) -> (Vec<Artifact>, Value) {
    let e = &ev.eta;
    let summary = format!(
        "quantity,value\neta_zero,{}\nmin_abs_eta_plus,{}\nargmin,{}\n",
        fmt12(e.eta_zero),
        fmt12(e.min_abs),
        fmt12(e.argmin)
    );
    let data = json!({
        "x": e.grid.nodes(),
        "re": e.eta_plus.iter().map(|v| v.re).collect::<Vec<_>>(),
        "im": e.eta_plus.iter().map(|v| v.im).collect::<Vec<_>>(),
        "eta_zero": e.eta_zero,
    });
    (
        vec![
            Artifact {
                name: "eta".into(),
                csv: e.to_csv(),
            },
            Artifact {
                name: "eta_summary".into(),
                csv: summary,
            },
        ],
        data,
    )
}

fn run_check(ev: &NessEvaluator, verdicts: &Value) -> (Vec<Artifact>, Value) {
    let b = &ev.condition_b;
    let mut s = String::from("condition,pass,value,detail\n");
    if let Some(a) = verdicts.get("condition_a") {
        let pass = a.as_str().map(|t| t.starts_with("pass")).unwrap_or(false);
        s.push_str(&format!("A,{pass},,{}\n", a.as_str().unwrap_or("")));
    }
    s.push_str(&format!(
        "B,{},{},argmin={} threshold={}\n",
        b.pass,
        fmt12(b.min_abs),
        fmt12(b.argmin),
        fmt12(b.threshold)
    ));
    let d = &ev.eta.condition_d;
    s.push_str(&format!(
        "D,{},{},{}\n",
        d.is_none(),
        fmt12(ev.eta.eta_zero),
        d.clone().unwrap_or_default().replace(',', ";")
    ));
    s.push_str("C,assumed,,initial system state moments not checked\n");
    (
        vec![Artifact {
            name: "check".into(),
            csv: s,
        }],
        verdicts.clone(),
    )
}

fn transport_artifacts(r: &TransportReport, epr: bool) -> Vec<Artifact> {
    if !epr {
        return vec![Artifact {
            name: "currents".into(),
            csv: r.to_csv(),
        }];
    }
    let mut s = String::from("quantity,value\n");
    s.push_str(&format!("Ep,{}\n", fmt12(r.entropy_production.value)));
    s.push_str(&format!("Ep_err,{}\n", fmt12(r.entropy_production.quad_error)));
    let verdict = match r.verdict {
        PositivityVerdict::StrictlyPositive => "strictly_positive",
        PositivityVerdict::HypothesesNotMet => "hypotheses_not_met",
        PositivityVerdict::Inconclusive => "inconclusive",
    };
    s.push_str(&format!("verdict,{verdict}\n"));
    for (l, j) in r.josephson.iter().enumerate() {
        s.push_str(&format!("Jos_{l},{}\n", fmt12(j.value)));
    }
    let mut ch = String::from("k,l,measure\n");
    for (k, row) in r.open_channels.iter().enumerate() {
        for (l, m) in row.iter().enumerate() {
            if k != l {
                ch.push_str(&format!("{k},{l},{}\n", fmt12(*m)));
            }
        }
    }
    vec![
        Artifact {
            name: "epr".into(),
            csv: s,
        },
        Artifact {
            name: "channels".into(),
            csv: ch,
        },
    ]
}

struct EvolveOutcome {
    artifacts: Vec<Artifact>,
    data: Value,
    refused: Option<Error>,
}

fn run_evolve(cfg: &RunConfig, ev: &NessEvaluator) -> Result<EvolveOutcome> {
    let n = ev.len();
    let omega = ev.system.omega;
    let f = cfg.evolve.initial.to_vector(n);
    let probes: Vec<_> = cfg.evolve.probes.iter().map(|p| p.to_probe()).collect();
    let steps = cfg.evolve.steps;
    let times: Vec<f64> = (0..=steps)
        .map(|k| k as f64 * cfg.evolve.t_max / (steps as f64 * omega))
        .collect();
    let tm = build_truncation(ev, cfg.numerics.modes_per_reservoir)?;
    let mut rows = Vec::with_capacity(times.len());
    for &t in &times {
        let r = tm.evolve_matrix(&f, t, &probes)?;
        let cov = if cfg.evolve.covariance { tm.quench_covariance(&f, t)? } else { f64::NAN };
        rows.push((r, cov));
    }
    let (analytic_status, refused) = if ev.system.lambda == 0.0 {
        ("degenerate", None)
    } else if let Err(e) = ev.require_b() {
        ("refused", Some(e))
    } else {
        ("ok", None)
    };
    let mut analytic: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    let mut contour = Value::String(analytic_status.into());
    if analytic_status == "ok" {
        let an = AnalyticEvolution::new(ev, &f)?;
        for &t in &times {
            let ov = probes.iter().map(|p| an.overlap(p, t)).collect::<Result<Vec<_>>>()?;
            analytic.push((an.c(t), ov));
        }
        let status = contour_identity_check(ev, &[0.0, 1.0 / omega, 5.0 / omega])?;
        contour = to_value(&status);
        if let ContourStatus::Degenerate = status {
            contour = Value::String("degenerate".into());
        }
    }
    let mut head = String::from("t,re_c,im_c,abs_c,norm_sq,covariance");
    if !analytic.is_empty() {
        head.push_str(",re_c_analytic,im_c_analytic");
    }
    for i in 0..probes.len() {
        head.push_str(&format!(",re_probe{i},im_probe{i}"));
        if !analytic.is_empty() {
            head.push_str(&format!(",re_probe{i}_analytic,im_probe{i}_analytic"));
        }
    }
    head.push('\n');
    let mut csv = head;
    let mut max_gap: f64 = 0.0;
    for (k, (r, cov)) in rows.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{}",
            fmt12(r.t),
            fmt12(r.c.re),
            fmt12(r.c.im),
            fmt12(r.c.norm()),
            fmt12(r.norm_sq),
            fmt12(*cov)
        ));
        if let Some((ca, _)) = analytic.get(k) {
            csv.push_str(&format!(",{},{}", fmt12(ca.re), fmt12(ca.im)));
            max_gap = max_gap.max((ca - r.c).norm());
        }
        for (i, o) in r.overlaps.iter().enumerate() {
            csv.push_str(&format!(",{},{}", fmt12(o.re), fmt12(o.im)));
            if let Some((_, ov)) = analytic.get(k) {
                csv.push_str(&format!(",{},{}", fmt12(ov[i].re), fmt12(ov[i].im)));
            }
        }
        csv.push('\n');
    }
    let mut summary = String::from("quantity,value\n");
    summary.push_str(&format!("modes_per_reservoir,{}\n", cfg.numerics.modes_per_reservoir));
    summary.push_str(&format!("recurrence_time,{}\n", fmt12(tm.recurrence_time())));
    summary.push_str(&format!("analytic,{analytic_status}\n"));
    if !analytic.is_empty() {
        summary.push_str(&format!("max_abs_c_gap,{}\n", fmt12(max_gap)));
    }
    if let Some(Value::Array(checks)) = contour.get("checks") {
        for c in checks {
            let t = c.get("t").and_then(Value::as_f64).unwrap_or(f64::NAN);
            let r = c.get("residual").and_then(Value::as_f64).unwrap_or(f64::NAN);
            summary.push_str(&format!("contour_residual_t={},{}\n", fmt12(t), fmt12(r)));
        }
    }
    if cfg.evolve.covariance && analytic_status == "ok" {
        summary.push_str(&format!("ness_covariance,{}\n", fmt12(ev.ness_covariance(&f)?)));
    }
    let data = json!({
        "t": times,
        "c_matrix": rows.iter().map(|(r, _)| [r.c.re, r.c.im]).collect::<Vec<_>>(),
        "norm_sq": rows.iter().map(|(r, _)| r.norm_sq).collect::<Vec<_>>(),
        "covariance": rows.iter().map(|(_, c)| if c.is_finite() { Value::from(*c) } else { Value::Null }).collect::<Vec<_>>(),
        "probes_matrix": rows.iter().map(|(r, _)| r.overlaps.iter().map(|o| [o.re, o.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "analytic": analytic_status,
        "c_analytic": analytic.iter().map(|(c, _)| [c.re, c.im]).collect::<Vec<_>>(),
        "probes_analytic": analytic.iter().map(|(_, o)| o.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "max_abs_c_gap": if analytic.is_empty() { Value::Null } else { Value::from(max_gap) },
        "contour": contour,
        "recurrence_time": tm.recurrence_time(),
    });
    Ok(EvolveOutcome {
        artifacts: vec![
            Artifact {
                name: "evolve".into(),
                csv,
            },
            Artifact {
                name: "evolve_summary".into(),
                csv: summary,
            },
        ],
        data,
        refused,
    })
}

fn run_graph_check(cfg: &RunConfig) -> Result<(Vec<Artifact>, Value)> {
    let gc = &cfg.graph_check;
    let margin = cfg.numerics.boundary_margin;
    let mut s = String::from("graph,check,pass,detail\n");
    let mut data = Vec::new();
    for (k, r) in cfg.model.reservoirs.iter().enumerate() {
        let (lat, patch) = match r.kind {
            ReservoirKind::LatticeZd { dim } => (Lattice::Zd(dim), GraphPatch::zd(dim, gc.patch_radius, margin)),
            ReservoirKind::CombZdZ { dim } => (
                Lattice::Comb(dim),
                GraphPatch::comb(dim, gc.patch_radius, 2 * gc.patch_radius, false, margin),
            ),
            _ => continue,
        };
        let name = format!("reservoirs[{k}]");
        let adapted = check_adapted(&patch, &AdaptedFunction::coordinate_sum(&patch));
        let admissible = check_admissible(&patch, &Orientation::coordinate(&patch), gc.max_walk_length);
        let v = PfWeight::for_lattice(lat);
        let residual = pf_residual(&patch, &v, lat);
        let coeffs = graph_coefficients(lat, &r.form_factor)?;
        let pairing = pf_pairing(&v, &coeffs);
        s.push_str(&format!(
            "{name},adapted,{},violations={} max_increment={}\n",
            adapted.pass,
            adapted.violation_count,
            fmt12(adapted.max_increment)
        ));
        s.push_str(&format!(
            "{name},admissible,{},univoque={} uniform={} closed_walks={}\n",
            admissible.pass(),
            admissible.univoque,
            admissible.uniform,
            admissible.closed_walks_checked
        ));
        s.push_str(&format!("{name},pf_residual,{},{}\n", residual <= 1e-10, fmt12(residual)));
        s.push_str(&format!(
            "{name},pf_pairing,,re={} im={}\n",
            fmt12(pairing.re),
            fmt12(pairing.im)
        ));
        data.push(json!({
            "graph": name,
            "adapted": to_value(&adapted),
            "admissible": {
                "pass": admissible.pass(),
                "univoque": admissible.univoque,
                "uniform": admissible.uniform,
                "witness_cycle": admissible.witness_cycle,
                "witness_index": admissible.witness_index,
                "closed_walks_checked": admissible.closed_walks_checked,
            },
            "pf_residual": residual,
            "pf_pairing": [pairing.re, pairing.im],
        }));
    }
    if let Some(path) = &gc.edge_list {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(Path::new(path), e))?;
        let edges = parse_edge_list(&text)?;
        let patch = GraphPatch::custom(&edges)?;
        let pairs: Vec<(usize, usize)> = edges
            .iter()
            .map(|(u, v)| (patch.index_of_name(u).unwrap_or(0), patch.index_of_name(v).unwrap_or(0)))
            .collect();
        let o = Orientation::from_pairs(&patch, &pairs)?;
        let adm = check_admissible(&patch, &o, gc.max_walk_length);
        let witness = adm.witness_cycle.clone().map(|c| c.join(" ")).unwrap_or_default();
        s.push_str(&format!(
            "edge_list,admissible,{},univoque={} uniform={} witness={} index={}\n",
            adm.pass(),
            adm.univoque,
            adm.uniform,
            witness,
            adm.witness_index
        ));
        data.push(json!({
            "graph": "edge_list",
            "admissible": {
                "pass": adm.pass(),
                "univoque": adm.univoque,
                "uniform": adm.uniform,
                "witness_cycle": adm.witness_cycle,
                "witness_index": adm.witness_index,
                "closed_walks_checked": adm.closed_walks_checked,
            },
        }));
    }
    Ok((
        vec![Artifact {
            name: "graph_check".into(),
            csv: s,
        }],
        Value::Array(data),
    ))
}

fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<()> {
    let files = report.render(format);
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            for (name, text) in files {
                let p = dir.join(&name);
                std::fs::write(&p, text).map_err(|e| io_err(&p, e))?;
            }
        }
        None => {
            use std::io::Write;
            let many = files.len() > 1;
            let mut out = std::io::stdout().lock();
            let mut write = || -> std::io::Result<()> {
                for (name, text) in &files {
                    if many {
                        writeln!(out, "# file: {name}")?;
                    }
                    out.write_all(text.as_bytes())?;
                }
                out.flush()
            };
            match write() {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(Error::Io(e)),
                _ => {}
            }
        }
    }
    Ok(())
}

/// Runs one invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        // Ignored if a global pool already exists (e.g. repeated calls in one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config(vec!["--config: a configuration file is required".into()]))?;
    let (cfg, hash) = load_config(path, cli.seed, cli.command.strictness())?;
    let format = cli.format.or(cfg.outputs.format).unwrap_or(Format::Csv);
    let out_dir = cli.out.clone().or_else(|| cfg.outputs.dir.as_ref().map(PathBuf::from));
    let command = cli.command;
    let mut exit = 0;
    let (verdicts_v, artifacts, data) = match command {
        Command::GraphCheck => {
            let (a, d) = run_graph_check(&cfg)?;
            (json!({}), a, d)
        }
        _ => {
            let ev = build(&cfg)?;
            let v = verdicts(&ev, command == Command::Check)?;
            match command {
                Command::Density => {
                    let (a, d) = run_density(&cfg, &ev)?;
                    (v, a, d)
                }
                Command::Eta => {
                    let (a, d) = run_eta(&ev);
                    (v, a, d)
                }
                Command::Check => {
                    let (a, d) = run_check(&ev, &v);
                    if !ev.condition_b.pass {
                        exit = 2;
                    }
                    (v, a, d)
                }
                Command::Currents | Command::Epr => {
                    ev.require_b()?;
                    let r = transport_report(&ev, cfg.numerics.channel_threshold)?;
                    (v, transport_artifacts(&r, command == Command::Epr), to_value(&r))
                }
                Command::Evolve => {
                    let o = run_evolve(&cfg, &ev)?;
                    if let Some(e) = &o.refused {
                        eprintln!("error: analytic evolution refused: {e}");
                        exit = e.exit_code();
                    }
                    (v, o.artifacts, o.data)
                }
                Command::GraphCheck => unreachable!(),
            }
        }
    };
    let report = Report {
        command,
        hash,
        verdicts: verdicts_v,
        artifacts,
        data,
    };
    emit(&report, format, out_dir.as_deref())?;
    if exit == 2 {
        let b = report.verdicts.get("condition_b").map(compact).unwrap_or_default();
        eprintln!("condition (B): {b}");
    }
    Ok(exit)
}
