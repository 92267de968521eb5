use std::fmt::Write as _;
use std::path::Path;

use expg::base::{BaseDistribution, Family};
use expg::error::Error;
use expg::fatigue::FATIGUE_LIFE;
use expg::inference::{
    lr_from_fits, lr_test, mle_fit, score_from_fit, score_test, wald_from_fit, wald_test, Dataset, FitOptions,
    FitReport, Hypothesis, TestKind, TestReport,
};
use expg::info::{constraint_expectations, entropy_quadrature, kl_divergence, shannon_entropy, Direction, DivergenceResult};
use expg::input::{parse_dataset, parse_range, parse_theta};
use expg::model::ExpGModel;
use expg::moments::{moment, moment_quadrature, skewness_kurtosis};
use expg::series::TruncationPolicy;
use serde_json::{json, Map, Value};

use crate::args::{
    CurvesArgs, DemoArgs, EntropyArgs, FitArgs, ModelArgs, MomentsArgs, OutFormat, Quantity, SampleArgs, TestArgs,
};

/// A failed command, split by the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input: exit 1.
    Input(String),
    /// The computation itself failed: exit 2.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parameter { .. }
            | Error::OutsideUnitInterval { .. }
            | Error::OutsideSupport { .. }
            | Error::Data { .. }
            | Error::EmptyData
            | Error::Unsupported { .. }
            | Error::Hypothesis(_)
            | Error::Parse(_) => Failure::Input(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

type CmdResult = Result<String, Failure>;

fn input_err(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

fn load_data(path: &Path, family: Family) -> Result<Dataset, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let values = parse_dataset(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    Ok(Dataset::new(values, family)?)
}

fn build_model(args: &ModelArgs) -> Result<ExpGModel, Failure> {
    let family = Family::from(args.family);
    let theta = parse_theta(&args.theta).map_err(|e| input_err(format!("--theta: {e}")))?;
    if theta.len() != family.n_params() {
        return Err(input_err(format!(
            "--theta: the {family} family takes {} parameter(s) ({}), got {}",
            family.n_params(),
            family.param_names().join(","),
            theta.len()
        )));
    }
    let base = BaseDistribution::from_params(family, &theta)?;
    Ok(ExpGModel::new(args.lambda, base)?)
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn model_header(m: &ExpGModel) -> Map<String, Value> {
    let mut o = Map::new();
    o.insert("family".into(), json!(m.family()));
    o.insert("lambda".into(), json!(m.lambda()));
    let theta: Map<String, Value> = m
        .family()
        .param_names()
        .iter()
        .zip(m.base().params())
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    o.insert("theta".into(), Value::Object(theta));
    o
}

// ---- fit ----

pub fn fit_json(r: &FitReport) -> Value {
    let named = |vals: Vec<Value>| -> Value {
        Value::Object(r.parameters.iter().map(|p| p.to_string()).zip(vals).collect())
    };
    let ci = r.ci.as_ref().map(|c| {
        json!({
            "level": c.level,
            "intervals": named(c.intervals.iter().map(|i| json!(i)).collect()),
        })
    });
    json!({
        "family": r.family,
        "n": r.n,
        "parameters": r.parameters,
        "estimates": named(r.estimates.iter().map(|v| json!(v)).collect()),
        "fixed": r.parameters.iter().zip(&r.fixed).filter(|p| *p.1).map(|p| *p.0).collect::<Vec<_>>(),
        "loglik": r.loglik,
        "std_errors": named(r.std_errors.iter().map(|v| json!(v)).collect()),
        "ci": ci,
        "converged": r.converged,
        "iterations": r.iterations,
        "grad_norm": r.grad_norm,
    })
}

fn fit_text(r: &FitReport, out: &mut String) {
    let _ = writeln!(out, "family {}  n = {}", r.family, r.n);
    let _ = writeln!(
        out,
        "loglik {:.4}  converged {}  iterations {}  gradient norm {:.2e}",
        r.loglik, r.converged, r.iterations, r.grad_norm
    );
    let level = r.ci.as_ref().map_or(0.95, |c| c.level);
    let _ = writeln!(out, "{:<8} {:>14} {:>12}   {:.0}% interval", "param", "estimate", "std.err", level * 100.0);
    for (i, p) in r.parameters.iter().enumerate() {
        if r.fixed[i] {
            let _ = writeln!(out, "{p:<8} {:>14.6} {:>12}", r.estimates[i], "(fixed)");
            continue;
        }
        let se = r.std_errors[i].map_or("n/a".to_string(), |s| format!("{s:.6}"));
        let ci = r
            .ci
            .as_ref()
            .and_then(|c| c.intervals[i])
            .map_or("n/a".to_string(), |[lo, hi]| format!("[{lo:.6}, {hi:.6}]"));
        let _ = writeln!(out, "{p:<8} {:>14.6} {se:>12}   {ci}", r.estimates[i]);
    }
    if r.information_singular {
        let _ = writeln!(out, "warning: the information matrix is singular; no standard errors");
    }
}

pub fn cmd_fit(a: &FitArgs) -> CmdResult {
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(input_err(format!("--level must lie in (0, 1), got {}", a.level)));
    }
    let family = Family::from(a.family);
    let data = load_data(&a.data, family)?;
    let opts = match a.fix_lambda {
        Some(l) => FitOptions::fix_lambda(l),
        None => FitOptions::default(),
    }
    .with_level(a.level);
    let r = mle_fit(family, &data, &opts)?;
    Ok(match a.out {
        OutFormat::Json => to_json(&fit_json(&r)),
        OutFormat::Text => {
            let mut s = String::new();
            fit_text(&r, &mut s);
            s
        }
    })
}

// ---- test ----

fn stat_name(k: TestKind) -> &'static str {
    match k {
        TestKind::Lr => "lr",
        TestKind::Wald => "wald",
        TestKind::Score => "score",
    }
}

pub fn test_json(t: &TestReport) -> Value {
    json!({
        "stat": stat_name(t.kind),
        "value": t.statistic,
        "df": t.df,
        "p_value": t.p_value,
    })
}

fn test_text(t: &TestReport, out: &mut String) {
    let _ = writeln!(
        out,
        "{:<6} statistic {:>10.4}  df {}  p-value {:.4e}",
        stat_name(t.kind),
        t.statistic,
        t.df,
        t.p_value
    );
}

pub fn cmd_test(a: &TestArgs) -> CmdResult {
    let family = Family::from(a.family);
    let data = load_data(&a.data, family)?;
    let null = Hypothesis::new(vec![(0, a.fix_lambda)])?;
    let t = match TestKind::from(a.stat) {
        TestKind::Lr => lr_test(family, &data, &null)?,
        TestKind::Wald => wald_test(family, &data, &null)?,
        TestKind::Score => score_test(family, &data, &null)?,
    };
    Ok(match a.out {
        OutFormat::Json => {
            let mut v = test_json(&t);
            v["family"] = json!(family);
            v["n"] = json!(data.len());
            v["null_lambda"] = json!(a.fix_lambda);
            to_json(&v)
        }
        OutFormat::Text => {
            let mut s = String::new();
            test_text(&t, &mut s);
            s
        }
    })
}

// ---- moments ----

/// Orders up to which integer requests are expanded into a full table.
const MAX_TABLE_ORDER: f64 = 12.0;

pub fn cmd_moments(a: &MomentsArgs) -> CmdResult {
    let m = build_model(&a.model)?;
    let r = a.order;
    if !r.is_finite() {
        return Err(input_err("--order must be finite"));
    }
    let integer = r == r.round() && (1.0..=MAX_TABLE_ORDER).contains(&r);
    let orders: Vec<f64> = if integer { (1..=r as usize).map(|k| k as f64).collect() } else { vec![r] };
    let pol = TruncationPolicy::default();
    let mut rows = Vec::new();
    let mut raw = vec![1.0];
    for &k in &orders {
        let series = moment(&m, k, &pol)?;
        let quad = moment_quadrature(&m, k)?;
        raw.push(series.value);
        let central = integer.then(|| central_moment(&raw));
        rows.push(json!({
            "order": k,
            "raw": series.value,
            "central": central,
            "route": series.route,
            "terms": series.terms,
            "achieved_tol": series.achieved_tol,
            "quadrature": quad.value,
            "quadrature_tol": quad.achieved_tol,
            "relative_gap": ((series.value - quad.value) / quad.value).abs(),
        }));
    }
    Ok(match a.out {
        OutFormat::Json => {
            let mut o = model_header(&m);
            o.insert("moments".into(), Value::Array(rows));
            to_json(&Value::Object(o))
        }
        OutFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "{:>5} {:>20} {:>20} {:>15} {:>10} {:>20} {:>10}", "order", "raw", "central", "route", "tol", "quadrature", "gap");
            for row in &rows {
                let central = row["central"].as_f64().map_or("-".to_string(), |c| format!("{c:.12e}"));
                let _ = writeln!(
                    s,
                    "{:>5} {:>20.12e} {:>20} {:>15} {:>10.1e} {:>20.12e} {:>10.1e}",
                    row["order"].as_f64().unwrap_or(f64::NAN),
                    row["raw"].as_f64().unwrap_or(f64::NAN),
                    central,
                    row["route"].as_str().unwrap_or(""),
                    row["achieved_tol"].as_f64().unwrap_or(f64::NAN),
                    row["quadrature"].as_f64().unwrap_or(f64::NAN),
                    row["relative_gap"].as_f64().unwrap_or(f64::NAN),
                );
            }
            s
        }
    })
}

/// `E[(X - mu)^k]` from `raw = [1, mu'_1, ..., mu'_k]`.
fn central_moment(raw: &[f64]) -> f64 {
    let k = raw.len() - 1;
    let mu = raw[1];
    let mut binom = 1.0;
    let mut total = 0.0;
    for (j, r) in raw.iter().enumerate() {
        total += binom * r * (-mu).powi((k - j) as i32);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    total
}

// ---- entropy ----

fn divergence_json(d: &DivergenceResult) -> Value {
    json!({
        "closed_form": d.closed_form,
        "quadrature": d.quadrature_value,
        "discrepancy": d.discrepancy,
    })
}

pub fn cmd_entropy(a: &EntropyArgs) -> CmdResult {
    let m = build_model(&a.model)?;
    let c = constraint_expectations(&m)?;
    let h = shannon_entropy(&m)?;
    let hq = entropy_quadrature(&m)?;
    let forward = kl_divergence(&m, Direction::BaseVsModel)?;
    let reverse = kl_divergence(&m, Direction::ModelVsBase)?;
    Ok(match a.out {
        OutFormat::Json => {
            let mut o = model_header(&m);
            o.insert("entropy".into(), json!(h));
            o.insert("entropy_quadrature".into(), json!(hq));
            o.insert("c1".into(), json!(c.c1));
            o.insert("c1_error".into(), json!(c.c1_error));
            o.insert("c2".into(), json!(c.c2));
            o.insert("kl_g_vs_expg".into(), divergence_json(&forward));
            o.insert("kl_expg_vs_g".into(), divergence_json(&reverse));
            to_json(&Value::Object(o))
        }
        OutFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "entropy          {h:.12}  (direct quadrature {hq:.12})");
            let _ = writeln!(s, "C1 = E[log g]    {:.12}  (error {:.1e})", c.c1, c.c1_error);
            let _ = writeln!(s, "C2 = E[G]        {:.12}", c.c2);
            let _ = writeln!(s, "D(G || exp-G)    {:.12e}  (quadrature {:.12e})", forward.closed_form, forward.quadrature_value);
            let _ = writeln!(s, "D(exp-G || G)    {:.12e}  (quadrature {:.12e})", reverse.closed_form, reverse.quadrature_value);
            s
        }
    })
}

// ---- sample ----

pub fn cmd_sample(a: &SampleArgs) -> CmdResult {
    let m = build_model(&a.model)?;
    let mut s = String::new();
    for x in m.sample(a.n, a.seed) {
        let _ = writeln!(s, "{x}");
    }
    Ok(s)
}

// ---- curves ----

fn point_value(m: &ExpGModel, q: Quantity, x: f64) -> Result<f64, Error> {
    match q {
        Quantity::Cdf => Ok(m.cdf(x)),
        Quantity::Pdf if m.base().is_discrete() => m.pmf(x),
        Quantity::Pdf => m.pdf(x),
        // Past the upper endpoint the hazard is undefined; the row stays.
        Quantity::Hazard => match m.hazard(x) {
            Err(Error::ZeroSurvival { .. }) => Ok(f64::NAN),
            other => other,
        },
        Quantity::Skewness | Quantity::Kurtosis => unreachable!("shape statistics run over lambda"),
    }
}

pub fn cmd_curves(a: &CurvesArgs) -> CmdResult {
    let m = build_model(&a.model)?;
    let name = format!("{:?}", a.quantity).to_lowercase();
    let mut s = String::new();
    match a.quantity {
        Quantity::Pdf | Quantity::Cdf | Quantity::Hazard => {
            let Some(spec) = &a.grid else {
                return Err(input_err(format!("curves --quantity {name} needs --grid a:b:step")));
            };
            let grid = parse_range(spec).map_err(|e| input_err(format!("--grid: {e}")))?;
            let _ = writeln!(s, "# x\t{name}");
            for x in grid {
                let _ = writeln!(s, "{x}\t{}", point_value(&m, a.quantity, x)?);
            }
        }
        Quantity::Skewness | Quantity::Kurtosis => {
            let Some(spec) = &a.lambda_grid else {
                return Err(input_err(format!("curves --quantity {name} needs --lambda-grid a:b:step")));
            };
            let grid = parse_range(spec).map_err(|e| input_err(format!("--lambda-grid: {e}")))?;
            let pol = TruncationPolicy::default();
            let _ = writeln!(s, "# lambda\t{name}");
            for l in grid {
                let st = skewness_kurtosis(&m.with_lambda(l)?, &pol)?;
                let v = if a.quantity == Quantity::Skewness { st.skewness } else { st.excess_kurtosis };
                let _ = writeln!(s, "{l}\t{v}");
            }
        }
    }
    Ok(s)
}

// ---- demo ----

pub fn cmd_demo(a: &DemoArgs) -> CmdResult {
    let family = Family::Weibull;
    let (source, data) = match &a.data {
        Some(p) => (p.display().to_string(), load_data(p, family)?),
        None => ("embedded".to_string(), Dataset::new(FATIGUE_LIFE.to_vec(), family)?),
    };
    let grid = parse_range(&a.grid).map_err(|e| input_err(format!("--grid: {e}")))?;
    let base = mle_fit(family, &data, &FitOptions::fix_lambda(0.0))?;
    let full = mle_fit(family, &data, &FitOptions::default())?;
    let null = Hypothesis::lambda_zero();
    let tests = [
        lr_from_fits(&full, &base, &null)?,
        wald_from_fit(&full, &null)?,
        score_from_fit(&base, &data, &null)?,
    ];
    let (g, f) = (base.model()?, full.model()?);
    let mut rows = Vec::with_capacity(grid.len());
    for x in grid {
        rows.push([x, g.pdf(x)?, f.pdf(x)?]);
    }
    Ok(match a.out {
        OutFormat::Json => to_json(&json!({
            "data": { "source": source, "n": data.len() },
            "fits": { "weibull": fit_json(&base), "exp_weibull": fit_json(&full) },
            "tests": tests.iter().map(test_json).collect::<Vec<_>>(),
            "density": { "columns": ["x", "weibull", "exp_weibull"], "rows": rows },
        })),
        OutFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "fatigue lives: {} observations ({source})", data.len());
            let _ = writeln!(s, "\n== Weibull (lambda = 0) ==");
            fit_text(&base, &mut s);
            let _ = writeln!(s, "\n== exp-Weibull ==");
            fit_text(&full, &mut s);
            let _ = writeln!(s, "\n== H0: lambda = 0 ==");
            for t in &tests {
                test_text(t, &mut s);
            }
            let _ = writeln!(s, "\n== fitted densities ==");
            let _ = writeln!(s, "# x\tweibull\texp_weibull");
            for [x, gx, fx] in rows {
                let _ = writeln!(s, "{x}\t{gx:.10e}\t{fx:.10e}");
            }
            s
        }
    })
}
