//! End-to-end experiments: run the lattice and effective models side by side,
//! measure the relative mass-norm distance between them, sweep the period to
//! estimate convergence orders, and expose everything as a CLI.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::basis::ShapeTable;
use crate::cell::{parse_pattern, periodic_identification, require_valid, validate, UnitCellPattern};
use crate::fem2d::{
    assemble_2d, assemble_load_2d, evaluate_at_points, evaluate_gradient_at_points,
    homogenize_source, HomogenizedProblem, InitialField, QuadFeSpace,
};
use crate::graph_fem::{
    apply_dirichlet, assemble_load, assemble_mass, assemble_stiffness, build_space,
    CoefficientField, DirichletMode, GraphFeSpace, SourceSpec,
};
use crate::lattice::{build_lattice, DirichletSpec, LatticeMesh};
use crate::linalg::{dot, spmv, Csr};
use crate::tensor::{
    build_incidence_system, corrector_slopes, solve_tensor, CorrectorField, EffectiveTensor,
};
use crate::timestep::{crank_nicolson_run, TransientSystem};
use crate::{Error, Result};

/// Everything one experiment needs; the config file holds `key = value`
/// lines with exactly these keys (see [`parse_config`]).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub pattern: PathBuf,
    pub l1: f64,
    pub l2: f64,
    pub deltas: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub degree_graph: usize,
    pub splits: usize,
    pub nx: usize,
    pub ny: usize,
    pub degree_2d: usize,
    pub source_amp: f64,
    pub source_k: f64,
    pub source_cx: f64,
    pub source_cy: f64,
    pub source_lambda: f64,
    pub a_const: f64,
    pub rho_cp: f64,
    pub dirichlet: DirichletSpec,
    pub outdir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pattern: PathBuf::new(),
            l1: 1.0,
            l2: 1.0,
            deltas: vec![0.25, 0.125, 0.0625],
            t_final: 2.0,
            dt: 0.002,
            degree_graph: 2,
            splits: 3,
            nx: 4,
            ny: 4,
            degree_2d: 6,
            source_amp: 4.0,
            source_k: 196.0,
            source_cx: 0.5,
            source_cy: 0.5,
            source_lambda: 3.0,
            a_const: 1.0,
            rho_cp: 1.0,
            dirichlet: DirichletSpec::All,
            outdir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn source(&self) -> SourceSpec {
        SourceSpec::Gaussian {
            amplitude: self.source_amp,
            decay: self.source_k,
            center: [self.source_cx, self.source_cy],
            rate: self.source_lambda,
        }
    }

    /// Check the structural constraints: periods divide the domain sides,
    /// the step divides the final time, everything positive.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.pattern.as_os_str().is_empty() {
            return bad("missing `pattern`".into());
        }
        if !(self.l1 > 0.0 && self.l2 > 0.0) {
            return bad("domain sides must be positive".into());
        }
        if self.deltas.is_empty() {
            return bad("no periods given".into());
        }
        for &d in &self.deltas {
            if !(d > 0.0) {
                return bad(format!("non-positive period {d}"));
            }
            for (l, name) in [(self.l1, "L1"), (self.l2, "L2")] {
                let r = l / d;
                if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                    return bad(format!("{name}/delta = {r} is not an integer"));
                }
            }
        }
        if !(self.t_final > 0.0 && self.dt > 0.0) {
            return bad("t_final and dt must be positive".into());
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return bad(format!("dt = {} does not divide t_final = {}", self.dt, self.t_final));
        }
        if !(1..=3).contains(&self.degree_graph) || self.splits == 0 {
            return bad("graph discretization needs degree in 1..=3 and splits >= 1".into());
        }
        if self.nx == 0 || self.ny == 0 || self.degree_2d == 0 {
            return bad("2d discretization needs nx, ny, degree >= 1".into());
        }
        if !(self.a_const > 0.0 && self.rho_cp > 0.0) {
            return bad("coefficients must be positive".into());
        }
        Ok(())
    }
}

/// Accept plain floats and `p/q` fractions for the period list.
fn parse_delta(tok: &str) -> Result<f64> {
    let tok = tok.trim();
    if let Some((num, den)) = tok.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| Error::Config(format!("bad period `{tok}`")))?;
        let d: f64 = den.trim().parse().map_err(|_| Error::Config(format!("bad period `{tok}`")))?;
        if d == 0.0 {
            return Err(Error::Config(format!("bad period `{tok}`")));
        }
        Ok(n / d)
    } else {
        tok.parse().map_err(|_| Error::Config(format!("bad period `{tok}`")))
    }
}

/// Parse the line-based config format. Unknown keys are rejected; omitted
/// keys keep their defaults (the experiment setup of the convergence study,
/// with `dt = 0.002`).
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut dirichlet_raw: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config(format!(
            "line {}: expected `key = value`, got `{line}`",
            idx + 1
        )))?;
        let key = key.trim();
        let value = value.trim();
        let fnum = || -> Result<f64> {
            value.parse().map_err(|_| Error::Config(format!("bad number `{value}` for `{key}`")))
        };
        let unum = || -> Result<usize> {
            value.parse().map_err(|_| Error::Config(format!("bad count `{value}` for `{key}`")))
        };
        match key {
            "pattern" => cfg.pattern = PathBuf::from(value),
            "L1" => cfg.l1 = fnum()?,
            "L2" => cfg.l2 = fnum()?,
            "deltas" => {
                cfg.deltas = value
                    .split(',')
                    .map(parse_delta)
                    .collect::<Result<Vec<_>>>()?;
            }
            "t_final" => cfg.t_final = fnum()?,
            "dt" => cfg.dt = fnum()?,
            "degree_graph" => cfg.degree_graph = unum()?,
            "splits" => cfg.splits = unum()?,
            "nx" => cfg.nx = unum()?,
            "ny" => cfg.ny = unum()?,
            "degree_2d" => cfg.degree_2d = unum()?,
            "source_amp" => cfg.source_amp = fnum()?,
            "source_k" => cfg.source_k = fnum()?,
            "source_cx" => cfg.source_cx = fnum()?,
            "source_cy" => cfg.source_cy = fnum()?,
            "source_lambda" => cfg.source_lambda = fnum()?,
            "a_const" => cfg.a_const = fnum()?,
            "rho_cp" => cfg.rho_cp = fnum()?,
            "dirichlet" => dirichlet_raw = Some(value.to_string()),
            "outdir" => cfg.outdir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
    }
    if let Some(raw) = dirichlet_raw {
        cfg.dirichlet = DirichletSpec::parse(&raw, cfg.l1, cfg.l2)?;
    }
    cfg.check()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn load_pattern(path: &Path) -> Result<UnitCellPattern> {
    parse_pattern(&std::fs::read_to_string(path)?)
}

/// Relative mass-norm distance sqrt((u - v)^T M (u - v) / (u^T M u)).
pub fn relative_error(u_lattice: &[f64], u_projected: &[f64], mass: &Csr) -> Result<f64> {
    if u_lattice.len() != mass.dim || u_projected.len() != mass.dim {
        return Err(Error::DimensionMismatch("relative_error operands".into()));
    }
    let diff: Vec<f64> = u_lattice.iter().zip(u_projected).map(|(a, b)| a - b).collect();
    let num = dot(&diff, &spmv(mass, &diff)?);
    let den = dot(u_lattice, &spmv(mass, u_lattice)?);
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// Full output of one lattice-vs-effective run at a fixed period.
pub struct SimulationRun {
    pub delta: f64,
    /// Relative mass-norm error at the final time.
    pub error: f64,
    pub seconds: f64,
    pub u_graph: Vec<f64>,
    pub u_2d: Vec<f64>,
    /// The 2D solution evaluated at every graph node.
    pub projected: Vec<f64>,
    pub graph_space: GraphFeSpace,
    pub quad_space: QuadFeSpace,
    pub lattice: LatticeMesh,
    /// Unconstrained mass matrix of the graph space.
    pub mass_graph: Csr,
    pub tensor: EffectiveTensor,
    pub corrector: CorrectorField,
}

impl SimulationRun {
    /// sqrt(delta * u^T M u), the scaled lattice norm of the final state.
    pub fn scaled_mass_norm(&self) -> f64 {
        (self.delta * dot(&self.u_graph, &spmv(&self.mass_graph, &self.u_graph).unwrap())).sqrt()
    }
}

/// Run both models to the final time and compare them on the lattice.
pub fn run_simulation(
    cfg: &ExperimentConfig,
    pattern: &UnitCellPattern,
    delta: f64,
) -> Result<SimulationRun> {
    let start = Instant::now();
    let s = periodic_identification(pattern)?;
    require_valid(pattern, &s)?;
    let sys = build_incidence_system(pattern, &s);
    let tensor = solve_tensor(&sys, pattern.total_length())?;
    let corrector = corrector_slopes(&tensor, pattern, &s);
    let source = cfg.source();

    // Effective 2D model.
    let quad_space = QuadFeSpace::new(cfg.nx, cfg.ny, cfg.degree_2d, cfg.l1, cfg.l2)?;
    let prob = HomogenizedProblem {
        a_hom: tensor.a_hom,
        coef: CoefficientField::constant(cfg.a_const, cfg.rho_cp),
        source: homogenize_source(&source, pattern),
        u_init: InitialField::Zero,
    };
    let (m2, k2) = assemble_2d(&quad_space, &prob)?;
    let bnodes2 = quad_space.dirichlet_nodes(&cfg.dirichlet);
    let f0 = assemble_load_2d(&quad_space, |x| prob.source.eval(0.0, x));
    let (m2r, k2r, _, map2) = apply_dirichlet(&m2, &k2, &f0, &bnodes2, DirichletMode::Eliminate);
    let load2 = |t: f64| map2.restrict(&assemble_load_2d(&quad_space, |x| prob.source.eval(t, x)));
    let u_2d = map2.expand(&crank_nicolson_run(
        &TransientSystem {
            mass: &m2r,
            stiffness: &k2r,
            load: &load2,
            u0: vec![0.0; map2.reduced_dim()],
            dt: cfg.dt,
            t_final: cfg.t_final,
        },
        |_, _, _| {},
    )?);

    // Fine lattice model.
    let mut lattice = build_lattice(pattern, cfg.l1, cfg.l2, delta)?;
    if lattice.mark_dirichlet(&cfg.dirichlet) == 0 {
        eprintln!("warning: no lattice vertices on the Dirichlet boundary at delta = {delta}");
    }
    let graph_space = build_space(&lattice, cfg.degree_graph, cfg.splits)?;
    let mass_graph = assemble_mass(&graph_space, cfg.rho_cp);
    let coef = CoefficientField::constant(cfg.a_const, cfg.rho_cp);
    let k_graph = assemble_stiffness(&graph_space, &coef)?;
    let f0g = assemble_load(&graph_space, &source, 0.0);
    let (mgr, kgr, _, mapg) =
        apply_dirichlet(&mass_graph, &k_graph, &f0g, &lattice.dirichlet, DirichletMode::Eliminate);
    let loadg = |t: f64| mapg.restrict(&assemble_load(&graph_space, &source, t));
    let u_graph = mapg.expand(&crank_nicolson_run(
        &TransientSystem {
            mass: &mgr,
            stiffness: &kgr,
            load: &loadg,
            u0: vec![0.0; mapg.reduced_dim()],
            dt: cfg.dt,
            t_final: cfg.t_final,
        },
        |_, _, _| {},
    )?);

    // Project the 2D solution onto the graph nodes and compare.
    let projected = evaluate_at_points(&quad_space, &u_2d, &graph_space.nodes)?;
    let error = relative_error(&u_graph, &projected, &mass_graph)?;

    Ok(SimulationRun {
        delta,
        error,
        seconds: start.elapsed().as_secs_f64(),
        u_graph,
        u_2d,
        projected,
        graph_space,
        quad_space,
        lattice,
        mass_graph,
        tensor,
        corrector,
    })
}

/// Scaled broken-gradient norms of the mismatch at the final time, without
/// and with the cell-corrector term.
///
/// At a quadrature point on an element of cell edge j, the plain integrand is
/// the edge derivative of the lattice solution minus grad(u0) . t_j, the
/// corrected one subtracts grad(u0) . b_j instead (the corrector's own
/// x-gradient term is one order smaller and skipped). Both norms carry the
/// sqrt(delta) measure scaling.
pub fn corrector_gradient_error(run: &SimulationRun) -> Result<(f64, f64)> {
    let p = run.graph_space.degree;
    let table = ShapeTable::gauss(p, p + 2);
    let nq = table.points.len();

    // One batched gradient evaluation for all quadrature points.
    let mut points = Vec::with_capacity(run.graph_space.elements.len() * nq);
    for elem in &run.graph_space.elements {
        let x0 = run.graph_space.nodes[elem.nodes[0]];
        let x1 = run.graph_space.nodes[elem.nodes[p]];
        for &t in &table.points {
            points.push([x0[0] + t * (x1[0] - x0[0]), x0[1] + t * (x1[1] - x0[1])]);
        }
    }
    let grads = evaluate_gradient_at_points(&run.quad_space, &run.u_2d, &points)?;

    let mut plain_sq = 0.0;
    let mut corrected_sq = 0.0;
    for (ei, elem) in run.graph_space.elements.iter().enumerate() {
        let x0 = run.graph_space.nodes[elem.nodes[0]];
        let x1 = run.graph_space.nodes[elem.nodes[p]];
        let h = elem.length;
        let tangent = [(x1[0] - x0[0]) / h, (x1[1] - x0[1]) / h];
        let b = run.tensor.b[run.lattice.edges[elem.lattice_edge].unit_edge];
        for q in 0..nq {
            let mut du = 0.0;
            for i in 0..=p {
                du += run.u_graph[elem.nodes[i]] * table.deriv[q][i];
            }
            du /= h;
            let g = grads[ei * nq + q];
            let w = table.weights[q] * h;
            plain_sq += w * (du - (g[0] * tangent[0] + g[1] * tangent[1])).powi(2);
            corrected_sq += w * (du - (g[0] * b[0] + g[1] * b[1])).powi(2);
        }
    }
    Ok(((run.delta * plain_sq).sqrt(), (run.delta * corrected_sq).sqrt()))
}

/// One line of the error sweep.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
    pub nodes_graph: usize,
    pub nodes_2d: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log error against log delta.
    pub fitted_order: f64,
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - xm) * (yi - ym);
        den += (xi - xm) * (xi - xm);
    }
    num / den
}

/// Run the sweep over the configured periods; the per-period runs execute
/// concurrently (they share nothing mutable).
pub fn convergence_study(
    cfg: &ExperimentConfig,
    pattern: &UnitCellPattern,
) -> Result<ConvergenceStudy> {
    if cfg.deltas.len() < 2 {
        return Err(Error::Config("a convergence study needs at least two periods".into()));
    }
    let runs: Vec<Result<SimulationRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .deltas
            .iter()
            .map(|&d| scope.spawn(move || run_simulation(cfg, pattern, d)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });
    let mut rows = Vec::with_capacity(runs.len());
    for run in runs {
        let run = run?;
        let order = rows.last().map(|prev: &ConvergenceRow| {
            (prev.error / run.error).ln() / (prev.delta / run.delta).ln()
        });
        rows.push(ConvergenceRow {
            delta: run.delta,
            error: run.error,
            order,
            nodes_graph: run.graph_space.node_count(),
            nodes_2d: run.quad_space.node_count(),
            seconds: run.seconds,
        });
    }
    let logs: (Vec<f64>, Vec<f64>) =
        rows.iter().map(|r| (r.delta.ln(), r.error.ln())).unzip();
    let fitted_order = fit_slope(&logs.0, &logs.1);
    Ok(ConvergenceStudy { rows, fitted_order })
}

// --- reports and file output ---

fn fmt17(v: f64) -> String {
    format!("{:.16e}", v)
}

/// Key=value report of a tensor solve.
pub fn tensor_report(t: &EffectiveTensor) -> String {
    let a = &t.a_hom;
    let eig = t.eigenvalues();
    let mut s = format!("A11={} A12={} A21={} A22={}\n", a[0][0], a[0][1], a[1][0], a[1][1]);
    s.push_str(&format!("eig_min={} eig_max={}\n", eig[0], eig[1]));
    s.push_str(&format!("total_length={}\n", t.total_length));
    for (j, b) in t.b.iter().enumerate() {
        s.push_str(&format!("b{}_x={} b{}_y={}\n", j + 1, b[0], j + 1, b[1]));
    }
    s
}

/// One-line CSV variant: tensor entries, eigenvalues, total length.
pub fn tensor_csv(t: &EffectiveTensor) -> String {
    let a = &t.a_hom;
    let eig = t.eigenvalues();
    format!(
        "{},{},{},{},{},{},{}\n",
        fmt17(a[0][0]),
        fmt17(a[0][1]),
        fmt17(a[1][0]),
        fmt17(a[1][1]),
        fmt17(eig[0]),
        fmt17(eig[1]),
        fmt17(t.total_length)
    )
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut s = String::from("delta,error,order,nodes_graph,nodes_2d,seconds\n");
    for r in rows {
        let order = r.order.map(fmt17).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(r.delta),
            fmt17(r.error),
            order,
            r.nodes_graph,
            r.nodes_2d,
            fmt17(r.seconds)
        ));
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn write_graph_solution_csv(path: &Path, space: &GraphFeSpace, u: &[f64]) -> Result<()> {
    let mut s = String::from("node,x,y,value\n");
    for (i, p) in space.nodes.iter().enumerate() {
        s.push_str(&format!("{},{},{},{}\n", i, fmt17(p[0]), fmt17(p[1]), fmt17(u[i])));
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn write_2d_solution_csv(
    path: &Path,
    space: &QuadFeSpace,
    u: &[f64],
    resolution: usize,
) -> Result<()> {
    let n = resolution.max(2);
    let mut pts = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            pts.push([
                space.l1 * ix as f64 / (n - 1) as f64,
                space.l2 * iy as f64 / (n - 1) as f64,
            ]);
        }
    }
    let vals = evaluate_at_points(space, u, &pts)?;
    let mut s = String::from("x,y,value\n");
    for (p, v) in pts.iter().zip(vals) {
        s.push_str(&format!("{},{},{}\n", fmt17(p[0]), fmt17(p[1]), fmt17(v)));
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn write_mesh_csvs(outdir: &Path, mesh: &LatticeMesh) -> Result<()> {
    let mut s = String::from("id,x,y,dirichlet\n");
    for (i, v) in mesh.vertices.iter().enumerate() {
        let flag = mesh.dirichlet.binary_search(&i).is_ok() as u8;
        s.push_str(&format!("{},{},{},{}\n", i, fmt17(v[0]), fmt17(v[1]), flag));
    }
    std::fs::write(outdir.join("vertices.csv"), s)?;
    let mut s = String::from("id,from,to,length\n");
    for (i, e) in mesh.edges.iter().enumerate() {
        s.push_str(&format!("{},{},{},{}\n", i, e.from, e.to, fmt17(e.length)));
    }
    std::fs::write(outdir.join("edges.csv"), s)?;
    Ok(())
}

// --- command line ---

#[derive(Parser)]
#[command(name = "meshhom", version, about = "Effective tensors and transient heat conduction on periodic lattice graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the effective tensor of a unit-cell pattern
    Tensor {
        /// Pattern file
        #[arg(long)]
        pattern: PathBuf,
        /// Emit one CSV line instead of key=value text
        #[arg(long)]
        csv: bool,
    },
    /// Run the structural checks on a pattern
    Validate {
        /// Pattern file
        #[arg(long)]
        pattern: PathBuf,
    },
    /// Simulate both models at one period and report the error
    Simulate {
        /// Config file
        #[arg(long)]
        config: PathBuf,
        /// Period (overrides the config's list)
        #[arg(long, value_parser = cli_delta)]
        delta: f64,
        /// Sample resolution per side for solution_2d.csv
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Also dump the lattice as vertices.csv / edges.csv
        #[arg(long)]
        dump_mesh: bool,
    },
    /// Sweep the configured periods and write convergence.csv
    Converge {
        /// Config file
        #[arg(long)]
        config: PathBuf,
    },
}

fn cli_delta(s: &str) -> std::result::Result<f64, String> {
    parse_delta(s).map_err(|e| e.to_string())
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn cli_main<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage/help text.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Tensor { pattern, csv } => {
            let p = load_pattern(&pattern)?;
            let s = periodic_identification(&p)?;
            require_valid(&p, &s)?;
            let sys = build_incidence_system(&p, &s);
            let t = solve_tensor(&sys, p.total_length())?;
            if csv {
                print!("{}", tensor_csv(&t));
            } else {
                print!("{}", tensor_report(&t));
            }
            Ok(0)
        }
        Command::Validate { pattern } => {
            let p = load_pattern(&pattern)?;
            let s = periodic_identification(&p)?;
            let report = validate(&p, &s);
            println!("{report}");
            Ok(if report.ok() { 0 } else { 1 })
        }
        Command::Simulate { config, delta, grid, dump_mesh } => {
            let cfg = load_config(&config)?;
            let mut check_cfg = cfg.clone();
            check_cfg.deltas = vec![delta];
            check_cfg.check()?;
            let pattern = load_pattern(&cfg.pattern)?;
            std::fs::create_dir_all(&cfg.outdir)?;
            let run = run_simulation(&cfg, &pattern, delta)?;
            write_graph_solution_csv(
                &cfg.outdir.join(format!("solution_graph_{delta}.csv")),
                &run.graph_space,
                &run.u_graph,
            )?;
            write_2d_solution_csv(&cfg.outdir.join("solution_2d.csv"), &run.quad_space, &run.u_2d, grid)?;
            std::fs::write(cfg.outdir.join("tensor.txt"), tensor_report(&run.tensor))?;
            if dump_mesh {
                write_mesh_csvs(&cfg.outdir, &run.lattice)?;
            }
            println!(
                "delta={} E(t_f={})={} nodes_graph={} nodes_2d={} seconds={:.3}",
                delta,
                cfg.t_final,
                run.error,
                run.graph_space.node_count(),
                run.quad_space.node_count(),
                run.seconds
            );
            Ok(0)
        }
        Command::Converge { config } => {
            let cfg = load_config(&config)?;
            let pattern = load_pattern(&cfg.pattern)?;
            std::fs::create_dir_all(&cfg.outdir)?;
            let study = convergence_study(&cfg, &pattern)?;
            write_convergence_csv(&cfg.outdir.join("convergence.csv"), &study.rows)?;
            println!("delta,error,order,nodes_graph,nodes_2d,seconds");
            for r in &study.rows {
                println!(
                    "{},{},{},{},{},{:.3}",
                    r.delta,
                    r.error,
                    r.order.map(|o| format!("{o:.3}")).unwrap_or_default(),
                    r.nodes_graph,
                    r.nodes_2d,
                    r.seconds
                );
            }
            println!("fitted_order={:.4}", study.fitted_order);
            Ok(0)
        }
    }
}
