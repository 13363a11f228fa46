//! Command dispatch.

use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skewflow_core::skew::suspend_set_in;
use skewflow_core::{
    build_box_cover, build_transition_graph, chain_components, integrate_fundamental, Analysis, FiberKind, FiberSpace,
    FundamentalSolution, LinearAction, PeriodicSystem, SampleScheme, TheoremId, VerifyConfig,
};
use thiserror::Error;

use crate::config::{Command, ConfigError, RunConfig};
use crate::demo;
use crate::format::{csv_row, fnv1a, header, matrix_rows, num, render_report, render_witness, Emitter};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// A core error caused by the configured values.
    #[error("invalid configuration: {0}")]
    Invalid(skewflow_core::Error),
    #[error("numerical failure: {0}")]
    Numeric(skewflow_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

impl From<skewflow_core::Error> for RunError {
    fn from(e: skewflow_core::Error) -> Self {
        use skewflow_core::Error as E;
        match e {
            E::InvalidSystem(_) | E::InvalidArgument(_) | E::ResolutionOverflow { .. } => RunError::Invalid(e),
            _ => RunError::Numeric(e),
        }
    }
}

impl RunError {
    /// 1 for configuration and output problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Invalid(_) | RunError::Io(_) => 1,
            RunError::Numeric(_) => 2,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    /// Whether every requested check passed.
    pub passed: bool,
    /// Text for standard output.
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    /// 0 on success, 3 when a check failed.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            3
        }
    }
}

struct Context {
    config: RunConfig,
    /// The configured system before period normalization.
    system: PeriodicSystem,
    fs: FundamentalSolution,
    fiber: FiberSpace,
    out: Emitter,
}

impl Context {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.seed)
    }
}

/// Hash of the resolved configuration; the output directory is not part of it.
pub fn config_hash(config: &RunConfig, system: &PeriodicSystem) -> u64 {
    let config = RunConfig { output: PathBuf::new(), ..config.clone() };
    fnv1a(format!("{config:?}\n{system:?}").as_bytes())
}

/// Runs the configured command, writing its files below `config.output`.
pub fn run_command(config: &RunConfig) -> Result<Outcome, RunError> {
    let command = config.command.ok_or(ConfigError::MissingCommand)?;
    let system = config.system.resolve()?;
    if !config.steps.is_power_of_two() || config.steps < 16 {
        return Err(ConfigError::Field {
            field: "steps".into(),
            line: None,
            message: format!("must be a power of two >= 16 (got {})", config.steps),
        }
        .into());
    }
    let fs = integrate_fundamental(&system.normalize_period(), config.steps)?;
    let fiber = FiberSpace { kind: config.fiber, dim: system.dimension() };
    let out = Emitter::new(&config.output, header(config_hash(config, &system), config.seed))?;
    let mut cx = Context { config: config.clone(), system, fs, fiber, out };
    let (passed, summary) = match command {
        Command::Integrate => integrate(&mut cx)?,
        Command::Monodromy => monodromy(&mut cx)?,
        Command::ChainGraph => chain_graph(&mut cx)?,
        Command::Verify(which) => verify(&mut cx, which)?,
        Command::LiftDemo => lift_demo(&mut cx)?,
        Command::ProjectDemo => project_demo(&mut cx)?,
    };
    Ok(Outcome { passed, summary, files: cx.out.written().to_vec() })
}

/// Fibers without a bound are covered on the unit ball.
fn covered(fiber: FiberSpace) -> FiberSpace {
    match fiber.kind {
        FiberKind::Ball { radius } if radius.is_infinite() => FiberSpace::ball(fiber.dim, 1.0),
        _ => fiber,
    }
}

fn integrate(cx: &mut Context) -> Result<(bool, String), RunError> {
    let n = cx.fs.dimension();
    let x0 = match &cx.config.initial {
        Some(x) if x.len() != n => {
            return Err(ConfigError::Field {
                field: "x0".into(),
                line: None,
                message: format!("has {} entries, expected {n}", x.len()),
            }
            .into())
        }
        Some(x) => x.clone(),
        None => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
    };
    let period = cx.system.period();
    let rows = (cx.config.t_end * cx.config.rate as f64).round().max(1.0) as usize;
    let mut body = String::from("t");
    for i in 1..=n {
        let _ = write!(body, ", x{i}");
    }
    body.push('\n');
    for k in 0..=rows {
        let t = cx.config.t_end * k as f64 / rows as f64;
        let x = cx.fs.solve_ivp(&x0, t / period);
        let _ = writeln!(body, "{}, {}", num(t), csv_row(x));
    }
    cx.out.write("trajectory.csv", &body)?;
    let sus = suspend_set_in(&cx.fs, &FiberSpace::euclidean(n), &[x0], cx.config.base_resolution)?;
    let mut body = String::from("s");
    for i in 1..=n {
        let _ = write!(body, ", x{i}");
    }
    body.push('\n');
    for p in sus.points() {
        let _ = writeln!(body, "{}, {}", num(p.s), csv_row(p.x));
    }
    cx.out.write("suspension.csv", &body)?;
    Ok((true, format!("{}\ntrajectory.csv: {} rows\nsuspension.csv: {} rows\n", cx.out.header(), rows + 1, sus.len())))
}

fn monodromy(cx: &mut Context) -> Result<(bool, String), RunError> {
    let fs = &cx.fs;
    let mut body = String::new();
    let _ = writeln!(body, "system: {}", cx.system.label());
    let _ = writeln!(body, "period: {}", num(cx.system.period()));
    let _ = writeln!(body, "steps: {}", fs.step_count());
    let _ = writeln!(body, "monodromy:");
    body.push_str(&matrix_rows(fs.monodromy()));
    let _ = writeln!(body, "multipliers: re, im, modulus");
    for mu in fs.floquet_multipliers()? {
        let _ = writeln!(body, "  {}", csv_row([mu.re, mu.im, mu.norm()]));
    }
    let c = fs.constants();
    let _ = writeln!(body, "constants: lipschitz, inverse_lipschitz, bound, two_period");
    let _ = writeln!(body, "  {}", csv_row([c.lipschitz, c.inverse_lipschitz, c.bound, c.two_period]));
    cx.out.write("monodromy.txt", &body)?;
    Ok((true, format!("{}\n{body}", cx.out.header())))
}

fn chain_graph(cx: &mut Context) -> Result<(bool, String), RunError> {
    let cfg = &cx.config;
    let fiber = covered(cx.fiber);
    let cover = build_box_cover(fiber, cfg.resolution)?;
    let scheme = SampleScheme { per_box: cfg.samples_per_box, corners: true, seed: cfg.seed };
    let graph = build_transition_graph(&cover, &LinearAction::monodromy(&cx.fs, fiber), cfg.epsilon, scheme)?;
    let components = chain_components(&graph);

    let mut edges = format!("# src_box_id dst_box_id; node {} is the sink\n", graph.sink());
    for (a, b) in graph.edges() {
        let _ = writeln!(edges, "{a} {b}");
    }
    let mut boxes = String::from("box_id");
    for i in 1..=cover.center(0).len() {
        let _ = write!(boxes, ", c{i}");
    }
    boxes.push_str(", radius\n");
    for id in 0..cover.count() {
        let _ = writeln!(boxes, "{id}, {}, {}", csv_row(cover.center(id)), num(cover.radius(id)));
    }
    let mut comps = String::from("box_id, component_index\n");
    for id in components.recurrent_boxes() {
        let _ = writeln!(comps, "{id}, {}", components.component_of(id).expect("recurrent box"));
    }
    cx.out.write("edges.txt", &edges)?;
    cx.out.write("boxes.csv", &boxes)?;
    cx.out.write("components.csv", &comps)?;
    let mut summary = format!(
        "{}\nboxes: {}\nedges: {}\ncomponents: {}\n",
        cx.out.header(),
        cover.count(),
        graph.edge_count(),
        components.len()
    );
    for (i, c) in components.components.iter().enumerate() {
        let _ = writeln!(summary, "  component {i}: {} boxes", c.len());
    }
    Ok((true, summary))
}

fn verify(cx: &mut Context, which: Option<TheoremId>) -> Result<(bool, String), RunError> {
    let cfg = &cx.config;
    let config = VerifyConfig {
        resolution: cfg.resolution,
        base_resolution: cfg.base_resolution,
        epsilon: cfg.epsilon,
        scheme: SampleScheme { per_box: cfg.samples_per_box, corners: true, seed: cfg.seed },
        samples: cfg.samples,
        n_min: cfg.n_min,
        ..VerifyConfig::default()
    };
    let analysis = Analysis::new(&cx.fs, cx.fiber, config)?;
    let theorems: Vec<TheoremId> = match which {
        Some(t) => vec![t],
        None => TheoremId::ALL.to_vec(),
    };
    let mut body = String::new();
    let mut summary = format!("{}\n", cx.out.header());
    let mut passed = true;
    for t in theorems {
        let report = analysis.verify(t);
        body.push_str(&render_report(&report));
        body.push('\n');
        let _ = writeln!(summary, "{}", report.summary_line());
        passed &= report.passed();
    }
    cx.out.write("verify.txt", &body)?;
    Ok((passed, summary))
}

fn lift_demo(cx: &mut Context) -> Result<(bool, String), RunError> {
    let mut rng = cx.rng();
    let d = demo::lift_demo(&mut rng, &cx.fs, cx.fiber, cx.config.epsilon, cx.config.chain_steps)?;
    let mut body = format!("# u = {}, v = {}\n", num(d.u), num(d.v));
    body.push_str(&render_witness("input", &d.input));
    body.push_str(&render_witness("lifted", &d.lifted));
    let _ = writeln!(body, "# endpoint errors: {}", csv_row(d.endpoint_errors));
    cx.out.write("lift.txt", &body)?;
    let passed = d.lifted.is_valid() && d.endpoint_errors.iter().all(|e| *e <= 1e-9);
    let worst = (0..d.lifted.steps()).map(|i| d.lifted.residuals[i] / d.lifted.bounds[i]).fold(0.0, f64::max);
    Ok((
        passed,
        format!(
            "{}\nlift: {} steps, worst residual/bound {}, endpoint errors {} {}\n",
            cx.out.header(),
            d.lifted.steps(),
            num(worst),
            num(d.endpoint_errors[0]),
            num(d.endpoint_errors[1]),
        ),
    ))
}

fn project_demo(cx: &mut Context) -> Result<(bool, String), RunError> {
    let mut rng = cx.rng();
    let cfg = &cx.config;
    let d = demo::project_demo(&mut rng, &cx.fs, cx.fiber, cfg.epsilon, cfg.n_min, cfg.samples)?;
    let mut body = render_witness("input", &d.input);
    body.push_str(&render_witness("projected", &d.projected));
    let cases: Vec<String> = d.cases.iter().map(|c| format!("{c:?}")).collect();
    let _ = writeln!(body, "# cases: {}", cases.join(", "));
    cx.out.write("project.txt", &body)?;
    let w = &d.projected;
    let passed =
        (0..w.steps()).all(|i| w.residuals[i] <= w.bounds[i] && w.times[i] > cfg.n_min as f64) && w.start() == w.end();
    Ok((passed, format!("{}\nproject: cases {}, times {:?}\n", cx.out.header(), cases.join(", "), w.times)))
}
