use std::fs::File;
use std::io::{self, BufWriter, Read, Write};

use esopt_core::pde::{convergence_table, write_surface_csv, Leg};
use esopt_core::scenario::write_csv;
use esopt_core::*;
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::output::{csv_row, num, write_json};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, invalid parameters.
    Input(String),
    /// A boundary state maps to a non-positive price.
    Unpriceable(String),
    /// Writing results failed.
    Output(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Unpriceable(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Unpriceable(msg) => f.write_str(msg),
            CliError::Output(e) => write!(f, "writing output: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_unpriceable() {
            CliError::Unpriceable(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Output(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn market(a: &MarketArgs) -> CliResult<MarketParams> {
    let m = match (a.tau, a.expiry) {
        (Some(tau), _) => MarketParams::with_tau(a.sigma, a.rate, a.strike, tau)?,
        (None, Some(expiry)) => {
            MarketParams::new(a.sigma, a.rate, a.strike, expiry, a.time.unwrap_or(0.0))?
        }
        (None, None) => return Err(input("one of --tau or --expiry is required")),
    };
    if !(a.spot.is_finite() && a.spot > 0.0) {
        return Err(input(format!(
            "invalid spot: must be positive, got {}",
            a.spot
        )));
    }
    Ok(m)
}

const QUOTE_HEADER: [&str; 4] = ["method", "call", "put", "error_estimate"];

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn quote_row(q: &PriceQuote) -> Vec<String> {
    vec![
        q.method.as_str().to_string(),
        num(q.call),
        num(q.put),
        num(q.error_estimate),
    ]
}

fn write_quote<W: Write>(mut w: W, q: &PriceQuote, format: Format) -> CliResult<()> {
    match format {
        Format::Csv => {
            csv_row(&mut w, &header(&QUOTE_HEADER))?;
            csv_row(&mut w, &quote_row(q))?;
        }
        Format::Json => write_json(&mut w, serde_json::to_value(q).expect("quote serializes"))?,
    }
    Ok(())
}

pub fn price<W: Write>(a: &PriceArgs, w: W) -> CliResult<()> {
    let m = market(&a.market)?;
    write_quote(w, &quote(a.market.spot, &m)?, a.market.format)
}

pub fn quad<W: Write>(a: &QuadArgs, w: W) -> CliResult<()> {
    let m = market(&a.market)?;
    let cfg = QuadConfig {
        width: a.width,
        order: a.order,
        tol: a.tol,
        ..QuadConfig::default()
    };
    write_quote(
        w,
        &greens_function_price(a.market.spot, &m, &cfg)?,
        a.market.format,
    )
}

pub fn mc<W: Write>(a: &McArgs, mut w: W) -> CliResult<()> {
    let m = market(&a.market)?;
    let cfg = McConfig::new(a.paths, a.seed)
        .antithetic(a.antithetic)
        .workers(a.workers);
    let est = mc_price(a.market.spot, &m, &cfg)?;
    match a.market.format {
        Format::Csv => {
            csv_row(
                &mut w,
                &header(&[
                    "method",
                    "call",
                    "put",
                    "call_se",
                    "put_se",
                    "discounted_spot",
                    "paths",
                    "seed",
                    "antithetic",
                ]),
            )?;
            csv_row(
                &mut w,
                &[
                    est.quote.method.as_str().to_string(),
                    num(est.quote.call),
                    num(est.quote.put),
                    num(est.call_se),
                    num(est.put_se),
                    num(est.discounted_spot),
                    a.paths.to_string(),
                    a.seed.to_string(),
                    a.antithetic.to_string(),
                ],
            )?;
        }
        Format::Json => {
            let mut v = serde_json::to_value(est).expect("estimate serializes");
            v["paths"] = json!(a.paths);
            v["seed"] = json!(a.seed);
            v["antithetic"] = json!(a.antithetic);
            write_json(&mut w, v)?;
        }
    }
    Ok(())
}

fn create(path: &std::path::Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| input(format!("cannot create {}: {e}", path.display())))
}

pub fn pde<W: Write>(a: &PdeArgs, mut w: W) -> CliResult<()> {
    let m = market(&a.market)?;
    let s = a.market.spot;
    let scheme = match a.scheme {
        SchemeArg::CrankNicolson => Scheme::CrankNicolson,
        SchemeArg::Explicit => Scheme::Explicit,
    };
    let grid = match (a.x_min, a.x_max, a.nx, a.ntau) {
        (Some(lo), Some(hi), Some(nx), Some(ntau)) => Grid::new(lo, hi, nx, ntau)?,
        _ => Grid::default_for(s, &m)?,
    };
    let q = fd_price(s, &m, &grid, scheme)?;

    // table ends at the chosen grid
    let mut base = grid;
    let mut rows = 1;
    while rows < a.levels as usize {
        match base.coarsened() {
            Some(c) => {
                base = c;
                rows += 1;
            }
            None => break,
        }
    }
    let table = convergence_table(s, &m, &base, rows, scheme)?;

    if let Some(path) = &a.surface {
        let mut f = create(path)?;
        write_surface_csv(&m, &grid, scheme, Leg::Call, &mut f)?;
        f.flush()?;
    }
    if let Some(path) = &a.slice {
        let mut f = create(path)?;
        fd_solve(&m, &grid, scheme)?.write_slice_csv(&mut f)?;
        f.flush()?;
    }

    match a.market.format {
        Format::Csv => {
            csv_row(&mut w, &header(&QUOTE_HEADER))?;
            csv_row(&mut w, &quote_row(&q))?;
            writeln!(w)?;
            csv_row(&mut w, &header(&["nx", "ntau", "call", "error", "order"]))?;
            for r in &table {
                csv_row(
                    &mut w,
                    &[
                        r.nx.to_string(),
                        r.ntau.to_string(),
                        num(r.call),
                        num(r.error),
                        r.order.map(num).unwrap_or_default(),
                    ],
                )?;
            }
        }
        Format::Json => write_json(
            &mut w,
            json!({ "quote": q, "grid": grid, "scheme": scheme, "convergence": table }),
        )?,
    }
    Ok(())
}

fn read_source(path: &str) -> CliResult<String> {
    let mut text = String::new();
    let res = if path == "-" {
        io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map(|_| ())
    };
    res.map_err(|e| input(format!("cannot read {path}: {e}")))?;
    Ok(text)
}

fn parse_list(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| {
                input(format!(
                    "invalid --{flag}: cannot parse {:?} as a number",
                    t.trim()
                ))
            })
        })
        .collect()
}

fn parse_step(text: &str) -> CliResult<Value> {
    let (t, h) = text
        .split_once(':')
        .ok_or_else(|| input(format!("invalid --step {text:?}: expected t:h1,h2,...")))?;
    let t: f64 = t
        .trim()
        .parse()
        .map_err(|_| input(format!("invalid --step {text:?}: bad time")))?;
    Ok(json!({ "t": t, "h": parse_list("step", h)? }))
}

fn section<'a>(
    doc: &'a mut Map<String, Value>,
    key: &str,
) -> CliResult<&'a mut Map<String, Value>> {
    doc.entry(key)
        .or_insert_with(|| Value::Object(Map::new()))
        .as_object_mut()
        .ok_or_else(|| input(format!("malformed JSON: {key} must be an object")))
}

/// The scenario document after applying flag overrides to the file (if any).
fn scenario_document(a: &ScenarioArgs) -> CliResult<Value> {
    let mut doc = match &a.file {
        Some(path) => {
            let text = read_source(path)?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| input(format!("malformed JSON: {e}")))?
        }
        None => json!({}),
    };
    let root = doc
        .as_object_mut()
        .ok_or_else(|| input("malformed JSON: scenario must be an object"))?;

    if a.h_target.is_some()
        && root.get("market").and_then(|m| m.get("strike")).is_some()
        && a.strike.is_none()
    {
        return Err(input(
            "--h-target conflicts with market.strike in the file; drop one of them",
        ));
    }

    for (key, v) in [("s0", a.s0), ("alpha", a.alpha)] {
        if let Some(v) = v {
            section(root, "mapping")?.insert(key.into(), json!(v));
        }
    }
    for (key, v) in [
        ("sigma", a.sigma),
        ("r", a.rate),
        ("strike", a.strike),
        ("expiry", a.expiry),
    ] {
        if let Some(v) = v {
            section(root, "market")?.insert(key.into(), json!(v));
        }
    }
    if let Some(n) = a.dimension {
        section(root, "pb")?.insert("dimension".into(), json!(n));
    }
    if let Some(labels) = &a.labels {
        section(root, "pb")?.insert("labels".into(), json!(labels));
    }
    if let Some(g) = &a.g {
        let rows: Vec<Vec<f64>> = g
            .split(';')
            .map(|row| parse_list("g", row))
            .collect::<CliResult<_>>()?;
        section(root, "pb")?.insert("g".into(), json!(rows));
    }
    if let Some(r) = &a.reference {
        root.insert("reference".into(), json!(parse_list("reference", r)?));
    }
    if let Some(t) = &a.h_target {
        root.insert("h_target".into(), json!(parse_list("h-target", t)?));
    }
    if !a.steps.is_empty() {
        let steps: Vec<Value> = a
            .steps
            .iter()
            .map(|s| parse_step(s))
            .collect::<CliResult<_>>()?;
        root.insert("steps".into(), Value::Array(steps));
    }
    if let Some(mode) = &a.delta_mode {
        root.insert("delta_mode".into(), json!(mode));
    }
    Ok(doc)
}

/// Unpriceable steps are still written; the exit status reports them.
pub fn scenario<W: Write>(a: &ScenarioArgs, mut w: W) -> CliResult<()> {
    let doc: ScenarioDocument =
        serde_json::from_value(scenario_document(a)?).map_err(Error::from)?;
    let sc = doc.into_scenario()?;
    let points = run_scenario(&sc)?;
    match a.format {
        Format::Csv => write_csv(&points, &mut w)?,
        Format::Json => write_json(
            &mut w,
            json!({ "labels": sc.labels, "strike": sc.market.strike, "points": points }),
        )?,
    }
    w.flush()?;
    match points.iter().find(|p| !p.priceable) {
        Some(p) => Err(CliError::Unpriceable(format!(
            "unpriceable state at t = {}: mapped spot {} is not positive",
            num(p.time),
            num(p.spot)
        ))),
        None => Ok(()),
    }
}

pub fn hessian<W: Write>(a: &HessianArgs, w: W) -> CliResult<()> {
    let state = PbDocument::from_json(&read_source(&a.file)?)?.validate()?;
    let n = state.g.dim();
    let coords: Vec<usize> = a
        .coords
        .iter()
        .map(|&c| {
            if c == 0 || c > n {
                Err(input(format!(
                    "invalid coords: {c} is outside 1..={n} (coordinates are one-based)"
                )))
            } else {
                Ok(c - 1)
            }
        })
        .collect::<CliResult<_>>()?;
    let params = MappingParams::new(a.s0, a.alpha)?;
    let report = classify_extremum(&params, &state.g, &coords)?;

    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["coords"] = json!(a.coords);
    let labels: Vec<&str> = coords.iter().map(|&c| state.labels[c].as_str()).collect();
    let obj = v.as_object_mut().expect("report is an object");
    obj.shift_insert(1, "labels".into(), json!(labels));
    write_json(w, v)?;
    Ok(())
}
