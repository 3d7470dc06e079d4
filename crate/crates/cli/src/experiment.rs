use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ifpinn::ansatz::{axes, Ansatz, AnsatzKind, Evaluator};
use ifpinn::problems::{
    oracle_1d, problem_spec, reference_p4, test_points, MeshField, ProblemId, ProblemSpec, ReferenceOptions,
};
use ifpinn::training::{
    constraint_report, predict, train, Checkpoint, ConstraintReport, LossParts, MetricRecord, ReferenceSolution,
    TrainReport,
};
use ifpinn::window::{make_window, WindowKind};
use serde::{Deserialize, Serialize};

use crate::config::{expand_values, output_root, ExperimentConfig, SweepAxis};
use crate::svg::{heatmaps, line_chart, log_bars, Series};
use crate::CliError;

/// Largest residual per condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSummary {
    pub dirichlet: Option<f64>,
    pub neumann: Option<f64>,
    pub interface_value: Option<f64>,
    pub interface_flux: Option<f64>,
    /// Largest relative buffer-row residual at the buffer's own samples.
    pub at_samples: Option<f64>,
}

impl ConstraintSummary {
    fn of(r: &ConstraintReport) -> Self {
        Self {
            dirichlet: r.max_of("dirichlet"),
            neumann: r.max_of("neumann"),
            interface_value: r.max_of("interface_value"),
            interface_flux: r.max_of("interface_flux"),
            at_samples: r.max_at_samples(),
        }
    }

    /// Largest interface residual along the dense samples.
    pub fn interface_max(&self) -> Option<f64> {
        match (self.interface_value, self.interface_flux) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub name: String,
    pub problem: ProblemId,
    pub ansatz: AnsatzKind,
    pub n_parameters: usize,
    pub iterations: usize,
    pub final_relative_l2: f64,
    pub final_loss: f64,
    pub final_parts: LossParts,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<ifpinn::training::AbortInfo>,
    pub metric_history: Vec<MetricRecord>,
    pub constraints: ConstraintSummary,
    pub config: ExperimentConfig,
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: RunReport,
    pub theta: Vec<f64>,
}

struct Prepared {
    spec: ProblemSpec,
    ansatz: Ansatz,
    reference: ReferenceSolution,
    mesh: Option<MeshField>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let spec = cfg.spec();
    let ansatz = cfg
        .ansatz
        .build(&spec)
        .map_err(|e| CliError::Config(format!("ansatz: {e}")))?;
    let points = test_points(&spec);
    let (reference, mesh) = match &spec {
        ProblemSpec::OneD(p) => {
            let o = oracle_1d(cfg.problem, p)?;
            (ReferenceSolution::from_fn(points, |x| o.value(x[0])), None)
        }
        ProblemSpec::TwoD(p) => {
            let opts = ReferenceOptions {
                layout: cfg.reference.layout,
                ..ReferenceOptions::grid(cfg.reference.nx, cfg.reference.ny)
            };
            let mesh = reference_p4(p, &opts)?;
            (ReferenceSolution::from_fn(points, |x| mesh.interpolate([x[0], x[1]])), Some(mesh))
        }
    };
    Ok(Prepared {
        spec,
        ansatz,
        reference,
        mesh,
    })
}

fn stamp(cfg: &ExperimentConfig) -> String {
    format!("config_hash={} seed={}", cfg.hash(), cfg.train.seed)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn json_with_stamp<T: Serialize>(value: &T, cfg: &ExperimentConfig) -> String {
    let mut v = serde_json::to_value(value).expect("serializes");
    if let serde_json::Value::Object(m) = &mut v {
        m.insert("config_hash".into(), cfg.hash().into());
        m.insert("seed".into(), cfg.train.seed.into());
    }
    serde_json::to_string_pretty(&v).expect("serializes")
}

/// `-div(kappa grad u)` of the trained model and the source at `p`.
fn lhs_and_source(e: &mut Evaluator, a: &Ansatz, spec: &ProblemSpec, p: &[f64]) -> (f64, f64) {
    let sub = a.subdomain(p, None);
    let lhs = match e.eval(p, &axes(p.len()), None) {
        Ok(j) => -spec.kappa(sub) * j.iter().map(|j| j.d2).sum::<f64>(),
        Err(_) => f64::NAN,
    };
    (lhs, spec.source().eval(p, sub))
}

/// Trains the configured model and writes every artifact into the run's
/// output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let prep = prepare(cfg)?;
    let outcome = train(&prep.ansatz, &cfg.train, &prep.reference)?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let constraints = constraint_report(&prep.ansatz, &outcome.theta, cfg.verify.dense)?;
    let report = run_report(cfg, &outcome.report, &constraints);
    write_artifacts(cfg, &dir, &prep, &outcome.theta, &outcome.report, &report, &constraints)?;
    Ok(RunOutcome {
        dir,
        report,
        theta: outcome.theta,
    })
}

fn run_report(cfg: &ExperimentConfig, t: &TrainReport, c: &ConstraintReport) -> RunReport {
    RunReport {
        config_hash: cfg.hash(),
        seed: cfg.train.seed,
        name: cfg.name.clone(),
        problem: cfg.problem,
        ansatz: t.ansatz,
        n_parameters: t.n_parameters,
        iterations: t.loss_history.len(),
        final_relative_l2: t.final_relative_l2,
        final_loss: t.final_loss,
        final_parts: t.final_parts,
        wall_seconds: t.wall_seconds,
        aborted: t.aborted.clone(),
        metric_history: t.metric_history.clone(),
        constraints: ConstraintSummary::of(c),
        config: cfg.clone(),
    }
}

fn write_artifacts(
    cfg: &ExperimentConfig,
    dir: &Path,
    prep: &Prepared,
    theta: &[f64],
    t: &TrainReport,
    report: &RunReport,
    constraints: &ConstraintReport,
) -> Result<(), CliError> {
    let st = stamp(cfg);
    write(dir, "report.json", &serde_json::to_string_pretty(report).expect("serializes"))?;
    write(dir, "config.toml", &format!("# {st}\n{}", cfg.to_toml()))?;
    let ckpt = Checkpoint::new(&prep.ansatz, theta, cfg.train.seed, cfg.train.init, cfg.hash())?;
    write(dir, "checkpoint.json", &ckpt.to_json())?;

    // history
    let mut h = format!("# {st}\niteration,loss,relative_l2\n");
    let mut metrics = t.metric_history.iter().peekable();
    for (i, l) in t.loss_history.iter().enumerate() {
        let rel = match metrics.peek() {
            Some(m) if m.iteration == i => {
                let r = m.relative_l2;
                metrics.next();
                format!("{r:e}")
            }
            _ => String::new(),
        };
        let _ = writeln!(h, "{i},{l:e},{rel}");
    }
    for m in metrics {
        let _ = writeln!(h, "{},{:e},{:e}", m.iteration, m.loss, m.relative_l2);
    }
    write(dir, "history.csv", &h)?;

    // solution profile
    let pred = predict(&prep.ansatz, theta, &prep.reference.points)?;
    let two_d = prep.spec.dimension() == 2;
    let mut prof = format!(
        "# {st}\n{}u_pred,u_ref,abs_err\n",
        if two_d { "x,y," } else { "x," }
    );
    for ((p, u), r) in prep.reference.points.iter().zip(&pred).zip(&prep.reference.values) {
        for c in p {
            let _ = write!(prof, "{c},");
        }
        let _ = writeln!(prof, "{u:e},{r:e},{:e}", (u - r).abs());
    }
    write(dir, "profile.csv", &prof)?;

    // constraints
    write(dir, "constraints.json", &json_with_stamp(constraints, cfg))?;
    write(dir, "constraints.csv", &constraint_csv(&st, constraints))?;
    let bars: Vec<(String, f64)> = constraints
        .dense
        .iter()
        .map(|e| (format!("{} {}", e.condition, e.location), e.max))
        .chain(
            constraints
                .at_samples
                .iter()
                .map(|e| (format!("{} {} (samples)", e.condition, e.location), e.max)),
        )
        .collect();
    write(
        dir,
        "constraints.svg",
        &log_bars("Constraint residuals (max)", &st, "log10 |residual|", &bars),
    )?;

    // plots
    let mut e = Evaluator::new(&prep.ansatz, theta)?;
    match &prep.spec {
        ProblemSpec::OneD(_) => {
            let xs: Vec<f64> = prep.reference.points.iter().map(|p| p[0]).collect();
            let sol = line_chart(
                "Solution",
                &st,
                "x",
                "u",
                &[
                    Series {
                        label: "reference",
                        points: xs.iter().zip(&prep.reference.values).map(|(x, u)| [*x, *u]).collect(),
                        dashed: false,
                    },
                    Series {
                        label: "trained",
                        points: xs.iter().zip(&pred).map(|(x, u)| [*x, *u]).collect(),
                        dashed: true,
                    },
                ],
            );
            write(dir, "solution.svg", &sol)?;
            let (mut l, mut f) = (Vec::new(), Vec::new());
            for x in &xs {
                let (a, b) = lhs_and_source(&mut e, &prep.ansatz, &prep.spec, &[*x]);
                l.push([*x, a]);
                f.push([*x, b]);
            }
            let lhs = line_chart(
                "LHS vs source",
                &st,
                "x",
                "-(k u')'  /  f",
                &[
                    Series {
                        label: "source f",
                        points: f,
                        dashed: false,
                    },
                    Series {
                        label: "LHS of trained",
                        points: l,
                        dashed: true,
                    },
                ],
            );
            write(dir, "lhs_vs_source.svg", &lhs)?;
        }
        ProblemSpec::TwoD(p) => {
            let (nx, ny) = (101, 101);
            let err: Vec<f64> = pred.iter().zip(&prep.reference.values).map(|(a, b)| (a - b).abs()).collect();
            write(
                dir,
                "solution.svg",
                &heatmaps(
                    "Solution",
                    &st,
                    &[("reference", &prep.reference.values), ("trained", &pred)],
                    nx,
                    ny,
                ),
            )?;
            write(dir, "error.svg", &heatmaps("Absolute error", &st, &[("|u - u_ref|", &err)], nx, ny))?;
            let (gx, gy) = (80, 40);
            let (mut l, mut f) = (Vec::with_capacity(gx * gy), Vec::with_capacity(gx * gy));
            for j in 0..gy {
                for i in 0..gx {
                    let q = [
                        p.width * (i as f64 + 0.5) / gx as f64,
                        p.height * (j as f64 + 0.5) / gy as f64,
                    ];
                    let (a, b) = lhs_and_source(&mut e, &prep.ansatz, &prep.spec, &q);
                    l.push(a);
                    f.push(b);
                }
            }
            write(
                dir,
                "lhs_vs_source.svg",
                &heatmaps("LHS vs source", &st, &[("LHS of trained", &l), ("source f", &f)], gx, gy),
            )?;
            if let Some(m) = &prep.mesh {
                let mut text = Vec::new();
                m.write_csv(&mut text)?;
                write(
                    dir,
                    "reference.csv",
                    &format!("# {st}\n{}", String::from_utf8_lossy(&text)),
                )?;
            }
        }
    }
    Ok(())
}

fn constraint_csv(stamp: &str, r: &ConstraintReport) -> String {
    let mut s = format!("# {stamp}\nset,condition,location,samples,max,mean\n");
    for (set, entries) in [("dense", &r.dense), ("at_samples", &r.at_samples)] {
        for e in entries.iter() {
            let _ = writeln!(
                s,
                "{set},{},{},{},{:e},{:e}",
                e.condition, e.location, e.samples, e.max, e.mean
            );
        }
    }
    s
}

pub struct VerifySummary {
    pub report: ConstraintReport,
    pub summary: ConstraintSummary,
    pub dir: PathBuf,
}

/// Dense constraint residuals of the checkpoint written by [`run`].
pub fn verify(cfg: &ExperimentConfig) -> Result<VerifySummary, CliError> {
    cfg.validate()?;
    let dir = cfg.output_dir();
    let path = dir.join("checkpoint.json");
    let text = fs::read_to_string(&path).map_err(|_| CliError::MissingCheckpoint(path.display().to_string()))?;
    let ckpt = Checkpoint::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let ansatz = cfg
        .ansatz
        .build(&cfg.spec())
        .map_err(|e| CliError::Config(format!("ansatz: {e}")))?;
    ckpt.check(&ansatz)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let report = constraint_report(&ansatz, &ckpt.theta, cfg.verify.dense)?;
    let st = stamp(cfg);
    write(&dir, "verify.json", &json_with_stamp(&report, cfg))?;
    write(&dir, "verify.csv", &constraint_csv(&st, &report))?;
    let summary = ConstraintSummary::of(&report);
    Ok(VerifySummary { report, summary, dir })
}

/// One line of a sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: String,
    pub final_relative_l2: f64,
    pub wall_seconds: f64,
    pub seed: u64,
    pub config_hash: String,
}

fn sanitize(v: &str) -> String {
    v.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Runs every sweep point (on `jobs` threads) and writes the summary CSV.
pub fn sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
    jobs: usize,
) -> Result<(PathBuf, Vec<SweepRow>), CliError> {
    let values = expand_values(axis, values);
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let root = base.output.clone().unwrap_or_else(|| base.name.clone());
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| {
            let mut c = base.with_axis_value(axis, v)?;
            c.output = Some(format!("{root}/sweep_{axis}/{}", sanitize(v)));
            Ok(c)
        })
        .collect::<Result<_, CliError>>()?;
    let jobs = jobs.max(1);
    let mut results: Vec<Option<Result<RunOutcome, CliError>>> = (0..configs.len()).map(|_| None).collect();
    for chunk in configs.iter().zip(results.iter_mut()).collect::<Vec<_>>().chunks_mut(jobs) {
        std::thread::scope(|s| {
            for (c, slot) in chunk.iter_mut() {
                s.spawn(move || **slot = Some(run(c)));
            }
        });
    }
    let mut rows = Vec::with_capacity(values.len());
    for ((v, c), r) in values.iter().zip(&configs).zip(results) {
        let r = r.expect("every sweep point ran")?;
        rows.push(SweepRow {
            axis,
            value: v.clone(),
            final_relative_l2: r.report.final_relative_l2,
            wall_seconds: r.report.wall_seconds,
            seed: c.train.seed,
            config_hash: c.hash(),
        });
    }
    let dir = output_root().join(&root);
    fs::create_dir_all(&dir)?;
    let mut csv = format!(
        "# base_config_hash={} seed={}\naxis,value,final_relative_l2,wall_seconds,seed,config_hash\n",
        base.hash(),
        base.train.seed
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{:e},{:.3},{},{}",
            r.axis, r.value, r.final_relative_l2, r.wall_seconds, r.seed, r.config_hash
        );
    }
    let path = dir.join(format!("sweep_{axis}.csv"));
    fs::write(&path, csv)?;
    Ok((path, rows))
}

/// Reference solution as CSV: `x,u,du,d2u` on the 1001 test points for
/// line problems, `x,y,u` on the mesh nodes for the rectangle.
pub fn oracle_csv(id: ProblemId, nx: usize, ny: usize) -> Result<String, CliError> {
    let spec = problem_spec(id, None);
    match &spec {
        ProblemSpec::OneD(p) => {
            let o = oracle_1d(id, p)?;
            let mut s = format!("# problem={id}\nx,u,du,d2u\n");
            for x in test_points(&spec) {
                let j = o.eval(x[0]);
                let _ = writeln!(s, "{},{:e},{:e},{:e}", x[0], j.v, j.d1, j.d2);
            }
            Ok(s)
        }
        ProblemSpec::TwoD(p) => {
            let m = reference_p4(p, &ReferenceOptions::grid(nx, ny))?;
            let mut text = Vec::new();
            m.write_csv(&mut text)?;
            Ok(format!("# problem={id} nx={nx} ny={ny}\n{}", String::from_utf8_lossy(&text)))
        }
    }
}

/// Window polynomial samples on `[0, 1]`: `tau,w,dw,d2w`.
pub fn window_csv(kind: WindowKind, order: usize, samples: usize) -> Result<String, CliError> {
    let w = make_window(kind, order).map_err(|e| CliError::Config(e.to_string()))?;
    if samples < 2 {
        return Err(CliError::Config("samples: need at least 2".into()));
    }
    let mut s = String::from("tau,w,dw,d2w\n");
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let _ = writeln!(
            s,
            "{t},{:e},{:e},{:e}",
            w.derivative_at(0, t),
            w.derivative_at(1, t),
            w.derivative_at(2, t)
        );
    }
    Ok(s)
}
