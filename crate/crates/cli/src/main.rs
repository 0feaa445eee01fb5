//! Batch front door for the scalar field solver: parses a run configuration,
//! executes one command, and persists reports, field CSVs, and plot data.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use config::RunConfig;
use scalarfield_core::decomposition::{
    decompose, verify_decomposition, DecomposeOpts, FieldSequence, VerifyOpts,
};
use scalarfield_core::functional::{classify, energy, Classification, Thresholds};
use scalarfield_core::solver::{
    self, pohozaev_minimize, radial_disk_boundary, symmetric_minimax_solve, NonradialOpts,
    SolverOpts,
};
use scalarfield_core::testmaps::{
    build_u_k, choose_r_k, cutoff_chi, dilation_curve, pi_k_potential, sample_directions,
    RadiusSearchOpts,
};
use scalarfield_core::{
    build_grid, oracle, read_field_csv, validate_bl, write_field_csv, Field, GridRef,
    SymmetryClass,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "scalarfield",
    about = "Compute and verify candidate states of the scalar field equation",
    version
)]
struct Cli {
    /// Run configuration file (key = value with dotted sections)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory override
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural conditions on the configured nonlinearity
    CheckNonlinearity,
    /// Ground-state pipeline: lambda continuation in the radial class
    SolveRadial,
    /// Radial excited states by the symmetric minimax
    SolveRadialExcited {
        /// defaults to task.k from the config
        #[arg(long)]
        k: Option<usize>,
    },
    /// Sign-changing states in the block-antisymmetric classes
    SolveNonradial {
        #[arg(long, value_parser = ["o1tau", "o2tau"])]
        class: String,
    },
    /// Build and validate the odd profile families and block test maps
    Testmaps {
        /// defaults to task.k from the config
        #[arg(long)]
        k: Option<usize>,
        /// profile radius; searched when omitted, task.r otherwise
        #[arg(long)]
        r: Option<f64>,
    },
    /// Translation profile decomposition of a stored field sequence
    Decompose {
        #[arg(long)]
        input: PathBuf,
    },
    /// Radial shooting oracle: ground and excited profiles
    Oracle,
    /// Three-way level table: minimax, manifold bound, oracle
    Compare,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn thread_cap() -> Result<usize> {
    match std::env::var("SCALARFIELD_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => {
            let n: usize = v
                .parse()
                .with_context(|| format!("SCALARFIELD_THREADS = {v:?} is not an integer"))?;
            if n == 0 {
                bail!("SCALARFIELD_THREADS must be positive");
            }
            Ok(n)
        }
    }
}

#[derive(Serialize)]
struct Provenance {
    version: String,
    command: String,
    seed: u64,
    thread_cap: usize,
    config: BTreeMap<String, String>,
}

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    curves: Vec<(f64, f64, String)>,
}

impl Run {
    fn new(cli_config: Option<PathBuf>, out_override: Option<PathBuf>) -> Result<Self> {
        let (map, base) = match &cli_config {
            Some(path) => (
                config::parse_file(path)?,
                path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            ),
            None => (BTreeMap::new(), PathBuf::from(".")),
        };
        let cfg = RunConfig::from_map(map, &base)?;
        let out = out_override.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Self { cfg, out, curves: Vec::new() })
    }

    fn write_provenance(&self, command: &str) -> Result<()> {
        let p = Provenance {
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: self.cfg.seed,
            thread_cap: thread_cap()?,
            config: self.cfg.raw.clone(),
        };
        self.write_json("provenance.json", &p)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.out.join(name);
        let mut f = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        writeln!(f)?;
        Ok(())
    }

    fn write_field(&self, name: &str, field: &Field) -> Result<()> {
        let f = fs::File::create(self.out.join(name))?;
        write_field_csv(field, std::io::BufWriter::new(f)).map_err(|e| anyhow!("{e}"))
    }

    fn add_curve(&mut self, series: &str, points: impl IntoIterator<Item = (f64, f64)>) {
        for (x, y) in points {
            self.curves.push((x, y, series.to_string()));
        }
    }

    fn write_curves(&self) -> Result<()> {
        let mut f = fs::File::create(self.out.join("curves.csv"))?;
        writeln!(f, "x,y,series")?;
        for (x, y, s) in &self.curves {
            writeln!(f, "{x},{y},{s}")?;
        }
        Ok(())
    }

    fn solver_opts(&self) -> SolverOpts {
        SolverOpts {
            grad_tol: self.cfg.grad_tol,
            max_iters: self.cfg.max_iters,
            path_nodes: self.cfg.path_nodes,
            reparam_every: 10,
            seed: self.cfg.seed,
        }
    }

    fn thresholds(&self) -> Thresholds {
        Thresholds {
            grad_tol: self.cfg.grad_tol,
            poho_tol: self.cfg.poho_tol,
            trivial_floor: 1e-6,
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let mut run = Run::new(cli.config, cli.out)?;
    match cli.command {
        Command::CheckNonlinearity => check_nonlinearity(&mut run),
        Command::SolveRadial => solve_radial(&mut run),
        Command::SolveRadialExcited { k } => solve_radial_excited(&mut run, k),
        Command::SolveNonradial { class } => solve_nonradial(&mut run, &class),
        Command::Testmaps { k, r } => testmaps(&mut run, k, r),
        Command::Decompose { input } => decompose_cmd(&mut run, &input),
        Command::Oracle => oracle_cmd(&mut run),
        Command::Compare => compare(&mut run),
    }
}

fn check_nonlinearity(run: &mut Run) -> Result<i32> {
    run.write_provenance("check-nonlinearity")?;
    let (model, scheme, truncated) = run.cfg.scheme()?;
    let report = validate_bl(&model, 10.0, 1e-2);

    #[derive(Serialize)]
    struct CheckReport {
        conditions: scalarfield_core::nonlinearity::BlReport,
        mu: f64,
        zeta: f64,
        lambda0: f64,
        truncated: bool,
        model: String,
    }
    let out = CheckReport {
        mu: scheme.mu,
        zeta: scheme.zeta,
        lambda0: scheme.lambda0,
        truncated,
        model: model.tag(),
        conditions: report,
    };
    run.write_json("report.json", &out)?;
    println!(
        "oddness {} | linearization {} | growth {} | positive primitive {}",
        out.conditions.odd_ok, out.conditions.f2_ok, out.conditions.f3_ok, out.conditions.f4_ok
    );
    Ok(if out.conditions.all_pass() { 0 } else { 1 })
}

fn solve_radial(run: &mut Run) -> Result<i32> {
    run.write_provenance("solve-radial")?;
    let (_, scheme, _) = run.cfg.scheme()?;
    let n = run.cfg.class.ambient_dim();
    let grid = build_grid(SymmetryClass::Radial { n }, run.cfg.r_inf, run.cfg.h)
        .map_err(|e| anyhow!("{e}"))?;
    let report = solver::radial_ground_state(
        &scheme,
        &grid,
        run.cfg.stages,
        &run.solver_opts(),
        &run.thresholds(),
    )
    .map_err(|e| anyhow!("{e}"))?;
    run.add_curve(
        "level_vs_lambda",
        report.stages.iter().map(|s| (s.lambda, s.level)),
    );
    let candidate = report.final_candidate().clone();
    let e = energy(&candidate, &scheme, 1.0).map_err(|e| anyhow!("{e}"))?;
    let ts: Vec<f64> = (1..=60).map(|i| i as f64 * 0.05).collect();
    let curve = dilation_curve(&candidate, &scheme, 1.0, &ts).map_err(|e| anyhow!("{e}"))?;
    run.add_curve("dilation_curve", curve);
    run.write_field("candidate.csv", &candidate)?;
    run.write_curves()?;

    #[derive(Serialize)]
    struct Out<'a> {
        solve: &'a solver::SolveReport,
        energy: scalarfield_core::EnergyBreakdown,
        lambda0: f64,
    }
    run.write_json("report.json", &Out { solve: &report, energy: e, lambda0: scheme.lambda0 })?;
    let m = &report.final_metrics;
    println!(
        "level {:.6} | grad residual {:.3e} | poho residual {:.3e} | {:?}",
        report.final_level(),
        m.grad_residual,
        m.poho_residual,
        m.classification
    );
    Ok(if m.classification == Classification::CriticalCandidate { 0 } else { 1 })
}

fn solve_radial_excited(run: &mut Run, k: Option<usize>) -> Result<i32> {
    run.write_provenance("solve-radial-excited")?;
    let k = k.unwrap_or(run.cfg.k);
    let (_, scheme, _) = run.cfg.scheme()?;
    let n = run.cfg.class.ambient_dim();
    let grid = build_grid(SymmetryClass::Radial { n }, run.cfg.r_inf, run.cfg.h)
        .map_err(|e| anyhow!("{e}"))?;
    let n_theta = if k == 1 { 1 } else { 12 };
    let boundary = radial_disk_boundary(k, &scheme, &grid, n_theta, run.cfg.seed)
        .map_err(|e| anyhow!("{e}"))?;
    let rec = symmetric_minimax_solve(&scheme, 1.0, k, &boundary, run.cfg.grad_tol, &run.solver_opts())
        .map_err(|e| anyhow!("{e}"))?;
    run.write_field("candidate.csv", &rec.candidate)?;
    let metrics =
        classify(&rec.candidate, &scheme, 1.0, &run.thresholds()).map_err(|e| anyhow!("{e}"))?;

    #[derive(Serialize)]
    struct Out<'a> {
        k: usize,
        stage: &'a solver::StageRecord,
        metrics: scalarfield_core::functional::ClassifyMetrics,
    }
    run.write_json("report.json", &Out { k, stage: &rec, metrics: metrics.clone() })?;
    run.write_curves()?;
    println!(
        "k = {k}: level {:.6} | status {:?} | grad residual {:.3e}",
        rec.level, rec.status, rec.grad_residual
    );
    Ok(if metrics.classification == Classification::CriticalCandidate { 0 } else { 1 })
}

fn solve_nonradial(run: &mut Run, class: &str) -> Result<i32> {
    run.write_provenance("solve-nonradial")?;
    let (_, scheme, _) = run.cfg.scheme()?;
    let n = run.cfg.class.ambient_dim();
    let m = match run.cfg.class {
        SymmetryClass::O1Tau { m, .. } | SymmetryClass::O2Tau { m, .. } => m,
        _ => bail!("solve-nonradial needs problem.class = o1tau or o2tau"),
    };
    let grid = match class {
        "o1tau" => build_grid(SymmetryClass::O1Tau { n, m }, run.cfg.r_inf, run.cfg.h),
        "o2tau" => build_grid(SymmetryClass::O2Tau { n, m }, run.cfg.r_inf, run.cfg.h),
        _ => unreachable!("clap restricts the class values"),
    }
    .map_err(|e| anyhow!("{e}"))?;
    let radial = run.cfg.radial_grid()?;
    let opts = NonradialOpts {
        solver: run.solver_opts(),
        stages: run.cfg.stages,
        radius: run.cfg.big_r,
        radius_search: RadiusSearchOpts { seed: run.cfg.seed, ..Default::default() },
    };
    let rep = solver::nonradial_solve(&scheme, &grid, &radial, &opts, &run.thresholds())
        .map_err(|e| anyhow!("{e}"))?;
    run.write_field("candidate.csv", rep.report.final_candidate())?;
    run.add_curve(
        "level_vs_lambda",
        rep.report.stages.iter().map(|s| (s.lambda, s.level)),
    );
    run.write_curves()?;
    run.write_json("report.json", &rep)?;
    println!(
        "level {:.6} | sign-changing {} | tau defect {:.1e} | J - 2 c_mp = {:.4} | {:?}",
        rep.report.final_level(),
        rep.sign_changing,
        rep.tau_defect,
        rep.level_vs_twice_radial,
        rep.report.final_metrics.classification
    );
    Ok(
        if rep.report.final_metrics.classification == Classification::CriticalCandidate
            && rep.sign_changing
        {
            0
        } else {
            1
        },
    )
}

fn testmaps(run: &mut Run, k: Option<usize>, r: Option<f64>) -> Result<i32> {
    run.write_provenance("testmaps")?;
    let k = k.unwrap_or(run.cfg.k);
    let (_, scheme, _) = run.cfg.scheme()?;
    let class = match run.cfg.class {
        c @ (SymmetryClass::O1Tau { .. } | SymmetryClass::O2Tau { .. }) => c,
        _ => SymmetryClass::O2Tau { n: 4, m: 2 },
    };
    let opts = RadiusSearchOpts { seed: run.cfg.seed, ..Default::default() };
    let big_r = match r.or(run.cfg.big_r) {
        Some(v) => v,
        None => choose_r_k(k, &scheme, class, &opts).map_err(|e| anyhow!("{e}"))?,
    };

    let dirs = sample_directions(k, 16, opts.seed);
    let mut membership_ok = true;
    let mut integrals = Vec::new();
    for l in &dirs {
        let u = build_u_k(k, big_r, l).map_err(|e| anyhow!("{e}"))?;
        if let Err(e) = u.validate() {
            eprintln!("membership failed for {l:?}: {e}");
            membership_ok = false;
        }
        integrals.push(pi_k_potential(k, big_r, l, &scheme, class, opts.h).map_err(|e| anyhow!("{e}"))?);
    }
    // profile and cutoff samples for plotting
    let u0 = build_u_k(k, big_r, &dirs[0]).map_err(|e| anyhow!("{e}"))?;
    run.add_curve(
        "u_k_profile",
        (0..=400).map(|i| {
            let rr = big_r * i as f64 / 400.0;
            (rr, u0.eval(rr))
        }),
    );
    run.add_curve(
        "cutoff_chi",
        (0..=400).map(|i| {
            let rr = (big_r * big_r + big_r + 1.5) * i as f64 / 400.0;
            (rr, cutoff_chi(big_r, rr))
        }),
    );
    run.write_curves()?;

    #[derive(Serialize)]
    struct Out {
        k: usize,
        big_r: f64,
        membership_ok: bool,
        min_integral: f64,
        integrals: Vec<f64>,
    }
    let min_integral = integrals.iter().cloned().fold(f64::INFINITY, f64::min);
    run.write_json(
        "report.json",
        &Out { k, big_r, membership_ok, min_integral, integrals },
    )?;
    println!("k = {k}, R = {big_r}: membership {membership_ok}, min integral {min_integral:.4}");
    Ok(if membership_ok && min_integral >= 1.0 { 0 } else { 1 })
}

#[derive(serde::Deserialize)]
struct Manifest {
    class: String,
    r_inf: f64,
    h: f64,
    fields: Vec<String>,
}

fn decompose_cmd(run: &mut Run, input: &Path) -> Result<i32> {
    run.write_provenance("decompose")?;
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(input.join("manifest.json"))
            .with_context(|| format!("reading {}/manifest.json", input.display()))?,
    )?;
    let class = match manifest.class.as_str() {
        "line" => SymmetryClass::Line,
        other => bail!("manifest class {other:?}: decomposition inputs use the line grid"),
    };
    let grid: GridRef =
        build_grid(class, manifest.r_inf, manifest.h).map_err(|e| anyhow!("{e}"))?;
    let mut fields = Vec::new();
    for name in &manifest.fields {
        let f = fs::File::open(input.join(name))
            .with_context(|| format!("opening {}", input.join(name).display()))?;
        fields.push(read_field_csv(&grid, std::io::BufReader::new(f)).map_err(|e| anyhow!("{e}"))?);
    }
    let seq = FieldSequence::new(fields).map_err(|e| anyhow!("{e}"))?;
    let dec = decompose(&seq, &DecomposeOpts::default()).map_err(|e| anyhow!("{e}"))?;
    let (_, scheme, _) = run.cfg.scheme()?;
    let report = verify_decomposition(&seq, &dec, &scheme, &VerifyOpts::default())
        .map_err(|e| anyhow!("{e}"))?;
    for (i, w) in dec.profiles.iter().enumerate() {
        run.write_field(&format!("profile_{:02}.csv", i + 1), w)?;
    }

    #[derive(Serialize)]
    struct Out {
        l: usize,
        flag: scalarfield_core::decomposition::DecompositionFlag,
        centers: Vec<Vec<i64>>,
        verification: scalarfield_core::decomposition::DecompositionReport,
    }
    run.write_json(
        "report.json",
        &Out { l: dec.l(), flag: dec.flag, centers: dec.centers.clone(), verification: report },
    )?;
    println!("l = {} ({:?})", dec.l(), dec.flag);
    Ok(0)
}

fn oracle_cmd(run: &mut Run) -> Result<i32> {
    run.write_provenance("oracle")?;
    let (model, scheme, _) = run.cfg.scheme()?;
    let n = run.cfg.class.ambient_dim();
    let grid = build_grid(SymmetryClass::Radial { n }, run.cfg.r_inf, run.cfg.h)
        .map_err(|e| anyhow!("{e}"))?;
    let gs = oracle::ground_state(&model, n, &grid, &scheme).map_err(|e| anyhow!("{e}"))?;
    run.write_field("oracle_profile.csv", &gs.to_field(&grid))?;
    run.add_curve(
        "oracle_trajectory",
        gs.trajectory.samples.iter().map(|&(r, u, _)| (r, u)),
    );
    let mut excited = Vec::new();
    for k in 1..=2 {
        match oracle::bound_state(&model, n, k, &grid, &scheme) {
            Ok(b) => excited.push((k, b.alpha, b.energy.j_lambda)),
            Err(e) => eprintln!("excited k = {k}: {e}"),
        }
    }
    run.write_curves()?;

    #[derive(Serialize)]
    struct Out {
        alpha: f64,
        nodes: usize,
        decay_verified: bool,
        energy: scalarfield_core::EnergyBreakdown,
        poho_rel: f64,
        excited: Vec<(usize, f64, f64)>,
    }
    let poho_rel = gs.energy.p_lambda.abs() / gs.energy.kinetic;
    run.write_json(
        "report.json",
        &Out {
            alpha: gs.alpha,
            nodes: gs.nodes,
            decay_verified: gs.decay_verified,
            energy: gs.energy.clone(),
            poho_rel,
            excited,
        },
    )?;
    println!(
        "alpha = {:.9}, J = {:.6}, |P|/K = {:.3e}, decay verified {}",
        gs.alpha, gs.energy.j_lambda, poho_rel, gs.decay_verified
    );
    Ok(0)
}

fn compare(run: &mut Run) -> Result<i32> {
    run.write_provenance("compare")?;
    let (model, scheme, _) = run.cfg.scheme()?;
    let n = run.cfg.class.ambient_dim();
    let grid = build_grid(SymmetryClass::Radial { n }, run.cfg.r_inf, run.cfg.h)
        .map_err(|e| anyhow!("{e}"))?;
    let gs = oracle::ground_state(&model, n, &grid, &scheme).map_err(|e| anyhow!("{e}"))?;
    let report = solver::radial_ground_state(
        &scheme,
        &grid,
        run.cfg.stages,
        &run.solver_opts(),
        &run.thresholds(),
    )
    .map_err(|e| anyhow!("{e}"))?;
    let mut seeds = vec![report.final_candidate().clone(), gs.to_field(&grid)];
    for &(amp, width) in &[(1.5, 1.0), (1.25, 1.3)] {
        let a = amp * scheme.zeta;
        seeds.push(Field::from_fn(&grid, |c| {
            a * (-0.5 * (c[0] / width).powi(2)).exp()
        }));
    }
    let (bound, _) = pohozaev_minimize(&scheme, 1.0, &seeds).map_err(|e| anyhow!("{e}"))?;
    let levels = [
        ("minimax", report.final_level()),
        ("manifold_bound", bound),
        ("oracle", gs.energy.j_lambda),
    ];
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            worst = worst.max((levels[i].1 - levels[j].1).abs() / levels[j].1.abs());
        }
    }
    println!("method           level");
    for (name, v) in &levels {
        println!("{name:<16} {v:.6}");
    }
    println!("worst pairwise relative gap: {worst:.3e}");

    #[derive(Serialize)]
    struct Out {
        minimax: f64,
        manifold_bound: f64,
        oracle: f64,
        worst_pairwise_gap: f64,
    }
    run.write_json(
        "report.json",
        &Out {
            minimax: levels[0].1,
            manifold_bound: levels[1].1,
            oracle: levels[2].1,
            worst_pairwise_gap: worst,
        },
    )?;
    run.add_curve(
        "levels",
        levels.iter().enumerate().map(|(i, (_, v))| (i as f64, *v)),
    );
    run.write_curves()?;
    Ok(if worst <= 1e-2 { 0 } else { 1 })
}
