use std::f64::consts::TAU;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::anyhow;
use fibremem::netsim::apply_linear_channel;
use fibremem::spectral::{model_spectrum, model_transfer_matrix};
use fibremem::{
    channel_capacity, channel_status, convergence_study, eta, positivity_threshold, propagate_gaussian,
    tail_convergence_report, transmissivity_spectrum, ChannelParams, GaussianState, SymbolModel, Threshold,
};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::cli::{Format, Grid, Mode, Opts};
use crate::table::{Cell, Table};

/// Failure split by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Numeric(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Numeric(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<fibremem::Error> for Failure {
    fn from(e: fibremem::Error) -> Self {
        if e.is_numerical() {
            Failure::Numeric(e.into())
        } else {
            Failure::Usage(e.into())
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

pub enum Output {
    Table { meta: Map<String, Value>, table: Table },
    Json(Value),
}

fn meta(command: &str, entries: Vec<(&str, Value)>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), command.into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    for (k, v) in entries {
        m.insert(k.into(), v);
    }
    m
}

fn params(o: &Opts) -> Outcome<ChannelParams<f64>> {
    Ok(ChannelParams::with_all(o.lambda()?, o.mu()?, o.nu(), o.gamma())?)
}

fn param_meta(p: &ChannelParams<f64>) -> Vec<(&'static str, Value)> {
    vec![
        ("lambda", p.lambda().into()),
        ("mu", p.mu().into()),
        ("nu", p.nu().into()),
        ("gamma", p.gamma().into()),
    ]
}

pub fn spectrum(o: &Opts) -> Outcome<Output> {
    let p = params(o)?;
    let n = o.n()?;
    let model = o.model();
    let values: Vec<f64> = match model {
        SymbolModel::Dim => transmissivity_spectrum(n, &p)?.values().to_vec(),
        SymbolModel::Lim => model_spectrum(n, p.lambda(), p.mu(), model)?
            .values()
            .iter()
            .map(|v| p.gamma() * v)
            .collect(),
    };
    let mut table = Table::new(vec!["j", "eta_j", "eta_symbol"]);
    for (i, &v) in values.iter().enumerate() {
        let j = i + 1;
        let x = TAU * (j as f64 / n as f64);
        let sym = p.gamma() * eta(model, x, p.lambda(), p.mu())?;
        table.push(vec![j.into(), v.into(), sym.into()]);
    }
    let mut entries = param_meta(&p);
    entries.push(("n", n.into()));
    entries.push(("model", model.to_string().into()));
    Ok(Output::Table { meta: meta("spectrum", entries), table })
}

fn json_str<S: serde::Serialize>(v: S) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

pub fn capacity(o: &Opts) -> Outcome<Output> {
    let p = params(o)?;
    let (model, kind, tol) = (o.model(), o.kind(), o.tol());
    let r = channel_capacity(&p, model, kind, tol)?;
    let mut table = Table::new(vec![
        "value",
        "lower",
        "upper",
        "kind",
        "model",
        "exact",
        "nu",
        "lambda",
        "mu",
        "gamma",
        "quad_points",
        "bracket_blocks",
        "bound",
    ]);
    table.push(vec![
        r.value.into(),
        r.lower.into(),
        r.upper.into(),
        kind.to_string().into(),
        model.to_string().into(),
        r.is_exact.into(),
        r.nu.into(),
        r.lambda.into(),
        r.mu.into(),
        r.gamma.into(),
        r.quadrature_points.into(),
        r.bracket_blocks.into(),
        json_str(r.bound).into(),
    ]);
    let mut entries = param_meta(&p);
    entries.push(("model", model.to_string().into()));
    entries.push(("kind", kind.to_string().into()));
    entries.push(("tol", tol.into()));
    Ok(Output::Table { meta: meta("capacity", entries), table })
}

fn grid_for(o: &Opts, specific: &Option<String>, name: &str) -> Outcome<Grid> {
    let text = specific
        .as_ref()
        .or(o.grid.as_ref())
        .ok_or_else(|| anyhow!("--{name}-grid or --grid is required"))?;
    Ok(Grid::parse(text)?)
}

pub fn region(o: &Opts) -> Outcome<Output> {
    let lg = grid_for(o, &o.lambda_grid, "lambda")?;
    let mg = grid_for(o, &o.mu_grid, "mu")?;
    let (nu, gamma, model, kind, tol) = (o.nu(), o.gamma(), o.model(), o.kind(), o.tol());
    let cells: Vec<(f64, f64)> = lg
        .points()
        .into_iter()
        .flat_map(|l| mg.points().into_iter().map(move |m| (l, m)))
        .collect();
    // validate everything up front so argument errors win over numeric ones
    for &(l, m) in &cells {
        ChannelParams::with_all(l, m, nu, gamma)?;
    }
    let rows: Vec<Vec<Cell>> = cells
        .par_iter()
        .map(|&(l, m)| -> Outcome<Vec<Cell>> {
            let p = ChannelParams::with_all(l, m, nu, gamma)?;
            let r = channel_capacity(&p, model, kind, tol)?;
            let th = positivity_threshold(l, nu, gamma, kind, model)?;
            let (nec, suf) = match th {
                Threshold::Exact { sqrt_mu } => (sqrt_mu, sqrt_mu),
                Threshold::Bracket { necessary, sufficient } => (necessary, sufficient),
            };
            let status = channel_status(&p, model, kind);
            Ok(vec![
                l.into(),
                m.into(),
                r.value.into(),
                r.lower.into(),
                r.upper.into(),
                status.to_string().into(),
                nec.into(),
                suf.into(),
            ])
        })
        .collect::<Outcome<_>>()?;
    let mut table = Table::new(vec![
        "lambda",
        "mu",
        "value",
        "lower",
        "upper",
        "status",
        "threshold",
        "threshold_sufficient",
    ]);
    for row in rows {
        table.push(row);
    }
    let entries = vec![
        ("lambda_grid", grid_meta(&lg)),
        ("mu_grid", grid_meta(&mg)),
        ("nu", nu.into()),
        ("gamma", gamma.into()),
        ("model", model.to_string().into()),
        ("kind", kind.to_string().into()),
        ("tol", tol.into()),
    ];
    Ok(Output::Table { meta: meta("region", entries), table })
}

fn grid_meta(g: &Grid) -> Value {
    serde_json::json!({ "start": g.start, "stop": g.stop, "steps": g.steps })
}

pub fn converge(o: &Opts) -> Outcome<Output> {
    let (lambda, mu) = (o.lambda()?, o.mu()?);
    let mode = o.mode.unwrap_or(Mode::FiniteM);
    match mode {
        Mode::FiniteM => {
            let n = o.n()?;
            let list = o.m_list.as_ref().ok_or_else(|| anyhow!("--m-list is required in finite-m mode"))?;
            let points = convergence_study(n, lambda, mu, list)?;
            let mut table = Table::new(vec!["m_steps", "error"]);
            for pt in points {
                table.push(vec![pt.m_steps.into(), pt.error.into()]);
            }
            let entries = vec![
                ("mode", "finite-m".into()),
                ("lambda", lambda.into()),
                ("mu", mu.into()),
                ("n", n.into()),
                ("m_list", list.clone().into()),
            ];
            Ok(Output::Table { meta: meta("converge", entries), table })
        }
        Mode::Tail => {
            let list = o.n_list.as_ref().ok_or_else(|| anyhow!("--n-list is required in tail mode"))?;
            if list.is_empty() {
                return Err(anyhow!("--n-list must not be empty").into());
            }
            let model = o.model();
            let mut table = Table::new(vec!["n", "j_start", "max_deviation", "outside_fraction"]);
            for &n in list {
                let r = tail_convergence_report(n, lambda, mu, model)?;
                table.push(vec![r.n.into(), r.j_start.into(), r.max_deviation.into(), r.outside_fraction.into()]);
            }
            let entries = vec![
                ("mode", "tail".into()),
                ("lambda", lambda.into()),
                ("mu", mu.into()),
                ("model", model.to_string().into()),
                ("n_list", list.clone().into()),
            ];
            Ok(Output::Table { meta: meta("converge", entries), table })
        }
    }
}

pub fn simulate(o: &Opts) -> Outcome<Output> {
    if o.format == Some(Format::Csv) {
        return Err(anyhow!("simulate only writes JSON").into());
    }
    let path = o.state.as_ref().ok_or_else(|| anyhow!("--state is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| anyhow!("reading {}: {e}", path.display()))?;
    let state: GaussianState<f64> =
        serde_json::from_str(&text).map_err(|e| anyhow!("parsing state {}: {e}", path.display()))?;
    let n = o.n.unwrap_or(state.n());
    if n != state.n() {
        return Err(anyhow!("--n {n} does not match the state's {} modes", state.n()).into());
    }
    let p = params(o)?;
    let out = match o.model() {
        SymbolModel::Dim => propagate_gaussian(&state, n, &p)?,
        SymbolModel::Lim => {
            let a = model_transfer_matrix(n, p.lambda(), p.mu(), SymbolModel::Lim)? * p.gamma().sqrt();
            apply_linear_channel(&state, &a, p.nu())?
        }
    };
    let value = serde_json::to_value(&out).map_err(|e| Failure::Numeric(e.into()))?;
    Ok(Output::Json(value))
}

pub fn write_output(o: &Opts, output: Output) -> Outcome<()> {
    let sink: Box<dyn Write> = match &o.out {
        Some(path) => Box::new(
            File::create(path).map_err(|e| anyhow!("cannot create {}: {e}", path.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    let res = match output {
        Output::Table { meta, table } => match o.format() {
            Format::Csv => table.write_csv(&mut w),
            Format::Json => write_json(&mut w, &table.to_json(meta)),
        },
        Output::Json(v) => write_json(&mut w, &v),
    };
    res.and_then(|_| w.flush()).map_err(|e| anyhow!("writing output: {e}"))?;
    Ok(())
}

fn write_json<W: Write>(w: &mut W, v: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, v)?;
    writeln!(w)
}
