//! Batch front-end: resolves an [`ExperimentConfig`], runs one probe and
//! renders JSON lines plus an optional CSV table.

pub mod config;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use surjlab_core::operator::io::read_text;
use surjlab_core::probe::{
    self, approx_kernel_sequence, finite_group_surjunctivity, heisenberg_survey, herz_check,
    is_nonincreasing, parse_trial, range_modulus_sweep, trial_elements, willis_experiment, Invariant,
    SweepOptions, EVIDENCE_ONLY,
};
use surjlab_core::{
    assemble, eig_herm, mat_nclp_norm, nc_lp_norm_group, nclp, opnorm_est, parse_element_expr, Error, Exponent,
    ExperimentRecord, Family, Group, GroupAlgebraElement, Side, TracialMatrixAlgebra,
};

pub use config::{parse_list, Command, ExperimentConfig};

pub const TOOL: &str = "surjlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bad flags, bad config files and unparsable descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Whether an error should exit with the usage status.
pub fn is_usage_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(
                e.downcast_ref::<Error>(),
                Some(Error::BadDescriptor(_) | Error::Parse { .. } | Error::BadExponent(_))
            )
    })
}

/// A CSV table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Everything one run produced.
#[derive(Clone, Debug)]
pub struct Report {
    pub config: ExperimentConfig,
    pub records: Vec<ExperimentRecord>,
    pub table: Option<Table>,
}

#[derive(Serialize)]
struct Header<'a> {
    kind: &'static str,
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Line<'a> {
    kind: &'static str,
    #[serde(flatten)]
    record: &'a ExperimentRecord,
}

#[derive(Serialize)]
struct Summary<'a> {
    kind: &'static str,
    records: usize,
    failed: &'a [String],
}

impl Report {
    /// `record: invariant` for every invariant that does not hold.
    pub fn failed(&self) -> Vec<String> {
        self.records
            .iter()
            .flat_map(|r| {
                let tag = r.label.clone().unwrap_or_else(|| r.experiment.clone());
                r.failed().into_iter().map(move |name| format!("{tag}: {name}"))
            })
            .collect()
    }

    /// Header line, one line per record, then a summary line.
    pub fn to_json_lines(&self) -> anyhow::Result<String> {
        let mut out = String::new();
        let header = Header {
            kind: "header",
            tool: TOOL,
            version: VERSION,
            config: &self.config,
        };
        out.push_str(&serde_json::to_string(&header)?);
        out.push('\n');
        for record in &self.records {
            out.push_str(&serde_json::to_string(&Line { kind: "record", record })?);
            out.push('\n');
        }
        let failed = self.failed();
        let summary = Summary {
            kind: "summary",
            records: self.records.len(),
            failed: &failed,
        };
        out.push_str(&serde_json::to_string(&summary)?);
        out.push('\n');
        Ok(out)
    }

    /// Writes to the configured paths, or the JSON lines to `stdout`.
    pub fn write<W: Write>(&self, stdout: W) -> anyhow::Result<()> {
        let lines = self.to_json_lines()?;
        match &self.config.out {
            Some(path) => write_atomic(path, lines.as_bytes())?,
            None => {
                let mut stdout = stdout;
                stdout.write_all(lines.as_bytes())?;
            }
        }
        if let Some(path) = &self.config.csv {
            let Some(table) = &self.table else {
                return Err(UsageError(format!("{} produces no table", self.config.command.name())).into());
            };
            write_atomic(path, table.to_csv()?.as_bytes())?;
        }
        Ok(())
    }
}

/// Writes through a temporary file in the target directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Resolves defaults and runs the configured command.
pub fn execute(config: ExperimentConfig) -> anyhow::Result<Report> {
    let config = config.resolved();
    let (records, table) = match config.command {
        Command::Ball => run_ball(&config)?,
        Command::Spectrum => run_spectrum(&config)?,
        Command::ApproxKernel => run_approx_kernel(&config)?,
        Command::Willis => run_willis(&config)?,
        Command::Herz => run_herz(&config)?,
        Command::Nclp => run_nclp(&config)?,
        Command::Probe => run_probe(&config)?,
        Command::Finite => run_finite(&config)?,
    };
    Ok(Report { config, records, table })
}

type Output = (Vec<ExperimentRecord>, Option<Table>);

fn group_of(config: &ExperimentConfig) -> anyhow::Result<Group> {
    let Some(text) = &config.group else {
        return Err(UsageError(format!("{} needs --group", config.command.name())).into());
    };
    Ok(Group::parse(text)?)
}

fn element_of(config: &ExperimentConfig, group: &Group) -> anyhow::Result<GroupAlgebraElement> {
    let Some(text) = &config.elem else {
        return Err(UsageError(format!("{} needs --elem", config.command.name())).into());
    };
    Ok(parse_trial(group, text)?)
}

fn scalar_of(group: &Group, text: &str) -> anyhow::Result<Complex64> {
    let x = parse_element_expr(group, text)?;
    let e = group.identity();
    if x.support().any(|g| *g != e) {
        return Err(UsageError(format!("{text:?} is not a scalar")).into());
    }
    Ok(x.coeff(&e))
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn to_value<T: Serialize>(x: &T) -> anyhow::Result<serde_json::Value> {
    Ok(serde_json::to_value(x)?)
}

fn sweep_options(config: &ExperimentConfig) -> SweepOptions {
    SweepOptions {
        restarts: config.restarts.unwrap_or(4),
        seed: config.seed,
        rel_tol: config.lp_tol.unwrap_or(probe::LP_TOLERANCE),
        ..SweepOptions::default()
    }
}

fn run_ball(config: &ExperimentConfig) -> anyhow::Result<Output> {
    let group = group_of(config)?;
    let r = config.r.unwrap_or(4);
    let ball = group.ball(r)?;
    let mut record = ExperimentRecord::new("ball", &GroupAlgebraElement::identity(&group));
    record.element.clear();
    record.radii = vec![r];
    let closed = ball
        .elements()
        .iter()
        .all(|g| group.inv(g).map(|h| ball.contains(&h)).unwrap_or(false));
    let nested = r == 0 || group.ball(r - 1)?.elements() == &ball.elements()[..ball.prefix_len(r - 1)];
    record.invariants = vec![
        Invariant::new("identity at index 0", ball.identity_index() == 0),
        Invariant::new("closed under inversion", closed),
        Invariant::new("smaller ball is a prefix", nested),
    ];
    record.data = json!({
        "radius": r,
        "size": ball.len(),
        "layer_sizes": ball.layer_sizes(),
    });
    let mut table = Table::new(&["index", "element", "layer"]);
    for (i, g) in ball.elements().iter().enumerate() {
        table.push(vec![i.to_string(), group.format_element(g), ball.layer_of(i).to_string()]);
    }
    Ok((vec![record], Some(table)))
}

fn run_spectrum(config: &ExperimentConfig) -> anyhow::Result<Output> {
    let group = group_of(config)?;
    let a = element_of(config, &group)?;
    let r = config.r.unwrap_or(4);
    let p = config.p.unwrap_or(Exponent::TWO);
    let ball = Arc::new(group.ball(r)?);
    let positive = a.star().convolve(&a)?;
    let m = assemble(&positive, &ball, Side::Left)?.matrix().to_dense();
    let spectrum = eig_herm(&m)?;
    let norm = opnorm_est(&assemble(&a, &ball, Side::Left)?, p)?;
    let scale = spectrum.max_eigenvalue().abs().max(1.0);
    let mut record = ExperimentRecord::new("spectrum", &a);
    record.p = Some(p);
    record.radii = vec![r];
    record.invariants = vec![
        Invariant::new("eigen residual", spectrum.residual() <= 1e-9 * scale)
            .with_detail(format!("{:e}", spectrum.residual())),
        Invariant::new("eigenvectors orthonormal", spectrum.orthonormality_defect() <= 1e-10)
            .with_detail(format!("{:e}", spectrum.orthonormality_defect())),
        Invariant::new("compression of a*a is positive", spectrum.min_eigenvalue() >= -1e-9 * scale),
        Invariant::new("norm bounds ordered", norm.lower <= norm.upper * (1.0 + 1e-12)),
    ];
    record.data = json!({
        "radius": r,
        "dim": spectrum.dim(),
        "spectrum": spectrum,
        "opnorm": norm,
    });
    let mut table = Table::new(&["index", "eigenvalue"]);
    for (i, l) in spectrum.eigenvalues().iter().enumerate() {
        table.push(vec![i.to_string(), num(*l)]);
    }
    Ok((vec![record], Some(table)))
}

fn run_approx_kernel(config: &ExperimentConfig) -> anyhow::Result<Output> {
    let group = group_of(config)?;
    let a = element_of(config, &group)?;
    let r = config.r.unwrap_or(64);
    let ns = config.n.clone().unwrap_or_else(|| vec![1, 10, 100]);
    let seq = approx_kernel_sequence(&a, &ns, r)?;
    let mut record = ExperimentRecord::new("approx-kernel", &a);
    record.radii = vec![r];
    record.invariants = seq
        .iter()
        .map(|s| Invariant::new(format!("certified at n={}", s.n), s.certified))
        .collect();
    record.data = to_value(&seq)?;
    let mut table = Table::new(&["n", "ratio", "bound", "certified_sup", "column_ratio"]);
    for s in &seq {
        table.push(vec![
            s.n.to_string(),
            num(s.ratio),
            num(s.bound),
            num(s.certified_sup),
            num(s.column_ratio),
        ]);
    }
    Ok((vec![record], Some(table)))
}

fn run_willis(config: &ExperimentConfig) -> anyhow::Result<Output> {
    let group = group_of(config)?;
    let ta = scalar_of(&group, config.ta.as_deref().unwrap_or("w"))?;
    let tb = scalar_of(&group, config.tb.as_deref().unwrap_or("w2"))?;
    let p = config.p.unwrap_or(Exponent::ONE);
    let radii = config.radii.clone().unwrap_or_else(|| (2..=5).collect());
    let options = sweep_options(config);
    let run = willis_experiment(&group, ta, tb, p, &radii, &options)?;
    let x = probe::willis_element(&group, ta, tb)?;
    let mut record = ExperimentRecord::new("willis", &x);
    record.p = Some(p);
    record.radii = run.records.iter().map(|w| w.radius).collect();
    record.invariants.push(Invariant::new("range distance nonincreasing in r", run.monotone));
    for w in &run.records {
        let gap = w.duality_gap.unwrap_or(0.0);
        record.invariants.push(
            Invariant::new(
                format!("duality gap at r={}", w.radius),
                gap <= options.rel_tol * w.distance.max(1.0),
            )
            .with_detail(format!("{gap:e}")),
        );
    }
    record.note = run.scope.clone();
    record.data = to_value(&run)?;
    let mut table = Table::new(&["radius", "distance", "lower_bound", "modulus"]);
    for w in &run.records {
        table.push(vec![w.radius.to_string(), num(w.distance), num(w.lower_bound), num(w.modulus)]);
    }
    Ok((vec![record], Some(table)))
}

fn run_herz(config: &ExperimentConfig) -> anyhow::Result<Output> {
    let group = group_of(config)?;
    let a = element_of(config, &group)?;
    let p = config.p.unwrap_or(Exponent::TWO);
    let r = config.r.unwrap_or(4);
    let samples = config.samples.unwrap_or(100);
    let cp = config.cp.unwrap_or(1.0);
    let h = herz_check(&a, p, r, samples, config.seed, cp)?;
    let mut record = ExperimentRecord::new("herz", &a);
    record.p = Some(p);
    record.radii = vec![r];
    record.invariants = vec![
        Invariant::new("no sample exceeds the candidate constant", !h.violation)
            .with_detail(format!("max ratio {:e}, floor {:e}", h.max_ratio, h.floor)),
    ];
    let mut table = Table::new(&["radius", "p", "norm_lower", "norm_upper", "max_ratio", "floor"]);
    table.push(vec![
        r.to_string(),
        p.to_string(),
        num(h.norm_lower),
        num(h.norm_upper),
        num(h.max_ratio),
        num(h.floor),
    ]);
    record.data = to_value(&h)?;
    Ok((vec![record], Some(table)))
}

fn run_nclp(config: &ExperimentConfig) -> anyhow::Result<Output> {
    let p = config.p.unwrap_or(Exponent::TWO);
    let mut records = Vec::new();
    let mut table = None;
    if config.group.is_some() || config.elem.is_some() {
        let group = group_of(config)?;
        let a = element_of(config, &group)?;
        let radii = config.radii.clone().unwrap_or_else(|| (2..=6).collect());
        let report = nc_lp_norm_group(&a, p, &radii)?;
        let mut record = ExperimentRecord::new("nclp", &a);
        record.p = Some(p);
        record.radii = report.radii.clone();
        record
            .invariants
            .push(Invariant::new("values nonnegative", report.values.iter().all(|v| *v >= 0.0)));
        if p == Exponent::TWO {
            let exact = a.lp_coeff_norm(Exponent::TWO);
            let err = report.values.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
            record.invariants.push(
                Invariant::new("p=2 value equals coefficient l2 norm", err <= 1e-10)
                    .with_detail(format!("{err:e}")),
            );
        }
        if report.diverging {
            record.note = Some("values diverge across radii".into());
        }
        let mut t = Table::new(&["radius", "dim", "value"]);
        for ((r, d), v) in report.radii.iter().zip(&report.dims).zip(&report.values) {
            t.push(vec![r.to_string(), d.to_string(), num(*v)]);
        }
        table = Some(t);
        record.data = to_value(&report)?;
        records.push(record);
    }
    if let Some(path) = &config.matrix {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let m = read_text(BufReader::new(file))?;
        if m.rows() != m.cols() {
            return Err(UsageError(format!("{} is not square", path.display())).into());
        }
        let x = m.to_dense();
        let alg = TracialMatrixAlgebra::uniform(x.nrows())?;
        let norm = mat_nclp_norm(&alg, &x, p)?;
        let mut record = ExperimentRecord {
            experiment: "nclp-matrix".into(),
            group: "matrix".into(),
            label: Some(path.display().to_string()),
            element: Vec::new(),
            p: Some(p),
            radii: Vec::new(),
            data: serde_json::Value::Null,
            invariants: Vec::new(),
            note: None,
        };
        let mut data = json!({ "dim": x.nrows(), "norm": norm });
        if !p.is_infinite() && norm > 0.0 {
            let att = nclp::norm_attainment(&alg, &x, p)?;
            let rel = (att.achieved - att.sigma_max).abs() / att.sigma_max;
            record.invariants.push(
                Invariant::new("norm attained by the constructed witness", rel <= 1e-9)
                    .with_detail(format!("{rel:e}")),
            );
            data["attainment"] = json!({
                "achieved": att.achieved,
                "sigma_max": att.sigma_max,
                "multiplicity": att.multiplicity,
            });
        }
        record.data = data;
        records.push(record);
    }
    if records.is_empty() {
        bail!(UsageError("nclp needs --group and --elem, or --matrix".into()));
    }
    Ok((records, table))
}

fn run_probe(config: &ExperimentConfig) -> anyhow::Result<Output> {
    let group = group_of(config)?;
    let p = config.p.unwrap_or(Exponent::ONE);
    let radii = config.radii.clone().unwrap_or_else(|| (1..=3).collect());
    let options = sweep_options(config);
    let names: Vec<String> = if config.trials.is_empty() {
        trial_elements(group.family()).into_iter().map(|t| t.name).collect()
    } else {
        config.trials.clone()
    };
    let trials = names
        .iter()
        .map(|n| Ok((n.clone(), parse_trial(&group, n)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let records = if group.family() == Family::Heisenberg {
        heisenberg_survey(p, &radii, &trials, &options)?
    } else {
        let mut records = Vec::with_capacity(trials.len());
        for (name, a) in &trials {
            let sweep = range_modulus_sweep(a, p, &radii, &options)?;
            let distances: Vec<f64> = sweep.iter().map(|s| s.distance).collect();
            let mut record = ExperimentRecord::new("probe", a);
            record.label = Some(name.clone());
            record.p = Some(p);
            record.radii = sweep.iter().map(|s| s.radius).collect();
            record.invariants.push(Invariant::new(
                "range distance nonincreasing in r",
                is_nonincreasing(&distances, 0.0),
            ));
            record.data = to_value(&sweep)?;
            record.note = Some(EVIDENCE_ONLY.to_string());
            records.push(record);
        }
        records.sort_by(|x, y| x.label.cmp(&y.label));
        records
    };
    let mut table = Table::new(&["label", "radius", "distance", "lower_bound", "modulus"]);
    for record in &records {
        let sweep: Vec<probe::SweepRecord> = serde_json::from_value(record.data.clone())?;
        for s in sweep {
            table.push(vec![
                record.label.clone().unwrap_or_default(),
                s.radius.to_string(),
                num(s.distance),
                num(s.lower_bound),
                num(s.modulus),
            ]);
        }
    }
    Ok((records, Some(table)))
}

fn run_finite(config: &ExperimentConfig) -> anyhow::Result<Output> {
    let group = group_of(config)?;
    if !group.is_finite() {
        return Err(UsageError(format!("{group} is not finite")).into());
    }
    let a = element_of(config, &group)?;
    let f = finite_group_surjunctivity(&a)?;
    let mut record = ExperimentRecord::new("finite", &a);
    record.invariants = vec![Invariant::new("injective iff surjective", f.consistent())];
    record.data = to_value(&f)?;
    Ok((vec![record], None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(command: Command, group: &str, elem: Option<&str>) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(command);
        c.group = Some(group.into());
        c.elem = elem.map(Into::into);
        c
    }

    #[test]
    fn finite_antipodal_is_neither() {
        let report = execute(config(Command::Finite, "C4", Some("de + dg2"))).unwrap();
        let data = &report.records[0].data;
        assert_eq!(data["injective"], false);
        assert_eq!(data["surjective"], false);
        assert!(report.failed().is_empty());
    }

    #[test]
    fn ball_table_matches_sizes() {
        let mut c = config(Command::Ball, "F2", None);
        c.r = Some(2);
        let report = execute(c).unwrap();
        assert_eq!(report.table.unwrap().rows.len(), 17);
        assert_eq!(report.records[0].data["layer_sizes"], json!([1, 4, 12]));
    }

    #[test]
    fn json_lines_have_header_and_summary() {
        let report = execute(config(Command::Finite, "C3", Some("de"))).unwrap();
        let text = report.to_json_lines().unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0]["kind"], "header");
        assert_eq!(lines[0]["version"], VERSION);
        assert_eq!(lines[0]["config"]["command"], "finite");
        assert_eq!(lines[1]["kind"], "record");
        assert_eq!(lines[2]["failed"], json!([]));
    }

    #[test]
    fn usage_errors_are_classified() {
        let err = execute(config(Command::Finite, "Q8", Some("de"))).unwrap_err();
        assert!(is_usage_error(&err));
        let err = execute(config(Command::Finite, "C4", Some("de +"))).unwrap_err();
        assert!(is_usage_error(&err));
        let err = execute(config(Command::Finite, "Z", Some("de"))).unwrap_err();
        assert!(is_usage_error(&err));
    }

    #[test]
    fn scalars_reject_group_elements() {
        let g = Group::parse("F2").unwrap();
        assert!((scalar_of(&g, "w").unwrap() - surjlab_core::expr::omega()).norm() < 1e-15);
        assert!(scalar_of(&g, "da").is_err());
    }
}
