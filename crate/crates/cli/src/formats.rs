//! Text file formats: taxonomy, design and vector inputs; JSON, CSV and TSV
//! reports.
//!
//! Floats are written with Rust's shortest round-trip formatting so reports
//! are byte-stable for identical results.

use std::fmt::Write as _;

use philasso_core::decompose::{self, Equilibrium};
use philasso_core::sim::{ExperimentResult, METRICS};
use philasso_core::solver::PhiLassoFit;
use philasso_core::taxonomy::{TableRow, Taxonomy, TaxonomyTable};
use philasso_core::tuning::{CvResult, SelectionSummary};
use philasso_core::Matrix;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::CliError;

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64, CliError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("{what} line {line}: '{}' is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(CliError::Parse(format!("{what} line {line}: non-finite value")));
    }
    Ok(v)
}

/// Taxonomy TSV: a header `index<TAB>level...<TAB>unit`, then one row per
/// covariate with its 1-based index, one label per level and a unit label.
pub fn read_taxonomy_table(text: &str) -> Result<TaxonomyTable, CliError> {
    let mut lines = data_lines(text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Parse("taxonomy: missing header".into()))?;
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    if cols.len() < 3 {
        return Err(CliError::Parse(
            "taxonomy header needs index, at least one level and a unit column".into(),
        ));
    }
    let level_names: Vec<String> = cols[1..cols.len() - 1].iter().map(|s| s.to_string()).collect();
    let unit_name = cols[cols.len() - 1].to_string();
    let mut rows = Vec::new();
    for (line, l) in lines {
        let f: Vec<&str> = l.split('\t').map(str::trim).collect();
        if f.len() != cols.len() {
            return Err(CliError::Parse(format!(
                "taxonomy line {line}: {} fields, header has {}",
                f.len(),
                cols.len()
            )));
        }
        let index: usize = f[0]
            .parse()
            .map_err(|_| CliError::Parse(format!("taxonomy line {line}: bad index '{}'", f[0])))?;
        rows.push(TableRow {
            index,
            labels: f[1..f.len() - 1].iter().map(|s| s.to_string()).collect(),
            unit: f[f.len() - 1].to_string(),
        });
    }
    Ok(TaxonomyTable {
        level_names,
        unit_name,
        rows,
    })
}

pub fn write_taxonomy_table(table: &TaxonomyTable) -> String {
    let mut out = String::from("index");
    for n in &table.level_names {
        out.push('\t');
        out.push_str(n);
    }
    let _ = writeln!(out, "\t{}", table.unit_name);
    for r in &table.rows {
        let _ = write!(out, "{}", r.index);
        for l in &r.labels {
            out.push('\t');
            out.push_str(l);
        }
        let _ = writeln!(out, "\t{}", r.unit);
    }
    out
}

/// Design TSV: a header of covariate identifiers, then one row of values per
/// sample.
pub fn read_design(text: &str) -> Result<(Vec<String>, Matrix), CliError> {
    let mut lines = data_lines(text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Parse("design: missing header".into()))?;
    let ids: Vec<String> = header.split('\t').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (line, l) in lines {
        let row = l
            .split('\t')
            .map(|f| parse_f64(f, line, "design"))
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != ids.len() {
            return Err(CliError::Parse(format!(
                "design line {line}: {} values, header has {}",
                row.len(),
                ids.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Parse("design: no samples".into()));
    }
    let x = Matrix::from_rows(&rows).map_err(CliError::Core)?;
    Ok((ids, x))
}

pub fn write_design(ids: &[String], x: &Matrix) -> String {
    let mut out = ids.join("\t");
    out.push('\n');
    for i in 0..x.nrows() {
        let row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// One number per line (responses, coefficients, scores).
pub fn read_vector(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    data_lines(text).map(|(line, l)| parse_f64(l, line, what)).collect()
}

pub fn write_vector(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}\n")).collect()
}

struct SparseBeta<'a>(&'a [f64]);

impl Serialize for SparseBeta<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let nz = self.0.iter().filter(|b| **b != 0.0).count();
        let mut m = s.serialize_map(Some(nz))?;
        for (j, b) in self.0.iter().enumerate().filter(|(_, b)| **b != 0.0) {
            m.serialize_entry(&(j + 1).to_string(), b)?;
        }
        m.end()
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FitJson<'a> {
    lambda: f64,
    intercept: f64,
    beta: SparseBeta<'a>,
    converged: bool,
    outer_iterations: usize,
    kkt_residual: f64,
    objective: f64,
}

fn fit_json(fit: &PhiLassoFit) -> FitJson<'_> {
    FitJson {
        lambda: fit.lambda,
        intercept: fit.intercept,
        beta: SparseBeta(&fit.beta),
        converged: fit.converged,
        outer_iterations: fit.outer_iterations,
        kkt_residual: fit.kkt_residual,
        objective: fit.objective,
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialization");
    s.push('\n');
    s
}

/// Fit JSON with `beta` as a sparse map from 1-based index to value.
pub fn write_fit(fit: &PhiLassoFit) -> String {
    to_json(&fit_json(fit))
}

/// Path JSON: the fits of a path in grid order; failed points carry an error.
pub fn write_path(path: &[Result<PhiLassoFit, philasso_core::Error>], grid: &[f64]) -> String {
    #[derive(Serialize)]
    #[serde(untagged)]
    enum Entry<'a> {
        Fit(FitJson<'a>),
        Failed { lambda: f64, error: String },
    }
    let entries: Vec<Entry<'_>> = path
        .iter()
        .zip(grid)
        .map(|(r, &lambda)| match r {
            Ok(f) => Entry::Fit(fit_json(f)),
            Err(e) => Entry::Failed {
                lambda,
                error: e.to_string(),
            },
        })
        .collect();
    to_json(&entries)
}

#[derive(Serialize)]
struct TaxonValue {
    level: String,
    taxon: String,
    value: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DecompositionJson {
    q: f64,
    d: Vec<TaxonValue>,
    alpha: Vec<f64>,
    sweeps: usize,
    equilibrium_residual: f64,
    compose_residual: f64,
}

fn taxon_label(tax: &Taxonomy, level: usize, k: usize) -> String {
    let taxon = &tax.levels()[level].taxa[k];
    taxon.name.clone().unwrap_or_else(|| taxon.id.to_string())
}

/// Decomposition JSON with one entry per grouping-level taxon.
pub fn write_decomposition(eq: &Equilibrium, beta: &[f64], tax: &Taxonomy) -> Result<String, CliError> {
    let dec = &eq.decomposition;
    let composed = decompose::compose(dec, tax).map_err(CliError::Core)?;
    let compose_residual = composed.iter().zip(beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut d = Vec::new();
    for (t, level) in tax.grouping_levels().iter().enumerate() {
        for (k, &value) in dec.d[t].iter().enumerate() {
            d.push(TaxonValue {
                level: level.name.clone(),
                taxon: taxon_label(tax, t, k),
                value,
            });
        }
    }
    Ok(to_json(&DecompositionJson {
        q: dec.q,
        d,
        alpha: dec.alpha.clone(),
        sweeps: eq.sweeps,
        equilibrium_residual: eq.residual,
        compose_residual,
    }))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Tuning curve CSV: one row per grid point.
pub fn write_cv_csv(cv: &CvResult) -> String {
    let mut out = String::from("lambda,auc,brier,deviance,meanSupportSize\n");
    for s in &cv.per_lambda {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.lambda,
            opt(s.auc),
            opt(s.brier),
            opt(s.deviance),
            s.mean_support_size
        );
    }
    out
}

/// Level position used for the family and genus columns: a level with that
/// name, or otherwise the second-deepest / deepest grouping level.
fn report_levels(tax: &Taxonomy) -> (Option<usize>, Option<usize>) {
    let t = tax.depth();
    let find = |name: &str| {
        tax.grouping_levels()
            .iter()
            .position(|l| l.name.eq_ignore_ascii_case(name))
    };
    let genus = find("genus").or(Some(t - 1));
    let family = find("family").or_else(|| genus.and_then(|g| g.checked_sub(1)));
    (family, genus)
}

/// Selection TSV (covariates never selected are omitted).
pub fn write_selection_tsv(sel: &SelectionSummary, tax: &Taxonomy) -> String {
    let (family, genus) = report_levels(tax);
    let label = |level: Option<usize>, j: usize| {
        level.map_or_else(|| "-".to_string(), |l| taxon_label(tax, l, tax.taxon_of(l, j)))
    };
    let unit_level = tax.depth();
    let mut out = String::from("covariate\tunit-label\tfamily-label\tgenus-label\tfrequency\tmeanEstimate\tse\n");
    for c in sel.selected() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.index + 1,
            taxon_label(tax, unit_level, tax.taxon_of(unit_level, c.index)),
            label(family, c.index),
            label(genus, c.index),
            c.frequency,
            c.mean_estimate,
            c.se
        );
    }
    out
}

/// Experiment CSV `method,n,metric,mean,se`.
pub fn write_experiment_csv(res: &ExperimentResult) -> String {
    let mut out = String::from("method,n,metric,mean,se\n");
    for r in &res.rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.method, r.n, r.metric, r.mean, r.se);
    }
    out
}

/// Per-replicate metrics; failed fits leave their metrics as `NA`.
pub fn write_replicates_csv(res: &ExperimentResult) -> String {
    let mut out = format!("n,replicate,method,{},converged\n", METRICS.join(","));
    for o in &res.replicates {
        for (method, rec, conv) in [
            ("philasso", &o.philasso, o.philasso_converged),
            ("oracle", &o.oracle, o.oracle.is_ok()),
        ] {
            let vals = match rec {
                Ok(r) => [r.sse, r.mspe, r.recall, r.precision].map(|v| v.to_string()).join(","),
                Err(_) => ["NA"; 4].join(","),
            };
            let _ = writeln!(out, "{},{},{method},{vals},{conv}", o.n, o.replicate);
        }
    }
    out
}

/// Selected lambda per sample size.
pub fn write_lambdas_csv(res: &ExperimentResult) -> String {
    let mut out = String::from("n,lambda\n");
    for (n, l) in &res.lambdas {
        let _ = writeln!(out, "{n},{l}");
    }
    out
}
