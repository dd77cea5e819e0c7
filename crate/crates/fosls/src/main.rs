//! Command-line driver for convergence studies and invariant checks.
//!
//! Exit codes: 0 on success, 2 when an acceptance threshold is violated
//! (rate floor or failed check), 1 on any other error.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fosls::harness::{
    check_determinism, check_norm_equivalence, check_projector_suite, check_structural,
    emit_outputs, rate_floor_violations, run_h_study, run_p_study, DomainKind, RateTable,
    StudyConfig, StudyMode,
};
use fosls::mesh::{dump_mesh, make_disk_mesh, make_square_mesh};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fosls",
    about = "First-order system least-squares solver and convergence-study harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StudyArgs {
    /// Flat key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Computational domain: square | disk.
    #[arg(long)]
    domain: Option<String>,
    /// Vector element family: rt | bdm.
    #[arg(long)]
    family: Option<String>,
    /// Scalar polynomial degree p_s >= 1.
    #[arg(long)]
    ps: Option<usize>,
    /// Vector degree parameter p_v >= 1.
    #[arg(long)]
    pv: Option<usize>,
    /// Refinement levels for h-studies.
    #[arg(long)]
    levels: Option<usize>,
    /// Largest degree for p-studies.
    #[arg(long)]
    pmax: Option<usize>,
    /// Problem case id (const_one, linear_x, square_cos_cosh, disk_smooth,
    /// radial_step).
    #[arg(long)]
    case: Option<String>,
    /// Output directory for the CSV table and SVG charts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized property checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for element loops (1 = fully sequential).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// h-version convergence study: uniform refinements at fixed degrees.
    StudyH(StudyArgs),
    /// p-version convergence study on the fixed coarse disk mesh.
    StudyP(StudyArgs),
    /// Run the invariant suites (norm equivalence, projection, structure).
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Write a mesh in the plain-text dump format.
    DumpMesh {
        #[arg(long, default_value = "disk")]
        domain: String,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn apply_args(config: &mut StudyConfig, args: &StudyArgs) -> anyhow::Result<()> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        config.apply_file(&text)?;
    }
    if let Some(v) = &args.domain {
        config.apply_key("domain", v)?;
    }
    if let Some(v) = &args.family {
        config.apply_key("family", v)?;
    }
    if let Some(v) = args.ps {
        config.p_s = v;
    }
    if let Some(v) = args.pv {
        config.p_v = v;
    }
    if let Some(v) = args.levels {
        config.levels = v;
    }
    if let Some(v) = args.pmax {
        config.p_max = v;
    }
    if let Some(v) = &args.case {
        config.case = v.clone();
        // smooth manufactured cases have unrestricted data regularity
        if v != "radial_step" {
            config.regularity = f64::INFINITY;
        }
    }
    if let Some(v) = &args.out {
        config.out_dir = Some(v.clone());
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    Ok(())
}

fn init_threads(threads: usize) {
    if threads >= 1 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn print_table(table: &RateTable) {
    println!(
        "{:<6} {:>10} {:>7} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "level", "h", "ndof", "err_u", "err_grad_u", "err_phi", "err_div", "err_phi_n", "err_b"
    );
    for (i, row) in table.rows.iter().enumerate() {
        let label = match table.mode {
            StudyMode::HRefinement => format!("{i}"),
            StudyMode::PElevation => format!("p={}", table.xs[i]),
        };
        println!(
            "{:<6} {:>10.4e} {:>7} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            label,
            row.h,
            row.ndof,
            row.err_u_l2,
            row.err_grad_u,
            row.err_phi_l2,
            row.err_div_phi,
            row.err_phi_n,
            row.err_b
        );
    }
    println!(
        "fitted slopes:  u {:+.3}  grad_u {:+.3}  phi {:+.3}  div_phi {:+.3}  phi_n {:+.3}  (R2 {:.4})",
        table.fitted.u,
        table.fitted.grad_u,
        table.fitted.phi,
        table.fitted.div_phi,
        table.fitted.phi_n,
        table.fitted.r_squared
    );
    println!(
        "guaranteed:     u {:+.3}  grad_u {:+.3}  phi {:+.3}  div_phi {:+.3}  phi_n {:+.3}",
        table.predicted.u,
        table.predicted.grad_u,
        table.predicted.phi,
        table.predicted.div_phi,
        table.predicted.phi_n
    );
    println!(
        "space ceiling:  u {:+.3}  grad_u {:+.3}  phi {:+.3}  div_phi {:+.3}  phi_n {:+.3}",
        table.best_possible.u,
        table.best_possible.grad_u,
        table.best_possible.phi,
        table.best_possible.div_phi,
        table.best_possible.phi_n
    );
}

fn study_stem(config: &StudyConfig) -> String {
    let mode = match config.mode {
        StudyMode::HRefinement => "h",
        StudyMode::PElevation => "p",
    };
    let domain = match config.domain {
        DomainKind::Square => "square",
        DomainKind::Disk => "disk",
    };
    format!(
        "study_{mode}_{domain}_{}_{}_ps{}_pv{}",
        config.family.short_name(),
        config.case,
        config.p_s,
        config.p_v
    )
}

fn run_study(args: &StudyArgs, mode: StudyMode) -> anyhow::Result<ExitCode> {
    init_threads(args.threads);
    let mut config = StudyConfig::defaults();
    config.mode = mode;
    apply_args(&mut config, args)?;
    let table = match mode {
        StudyMode::HRefinement => run_h_study(&config)?,
        StudyMode::PElevation => run_p_study(&config)?,
    };
    print_table(&table);
    if let Some(dir) = &config.out_dir {
        let files = emit_outputs(&table, dir, &study_stem(&config))?;
        for f in files {
            println!("wrote {}", f.display());
        }
    }
    let violations = rate_floor_violations(&table);
    if violations.is_empty() {
        println!("rate floor satisfied for every tracked norm");
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("rate floor violated: {v}");
        }
        Ok(ExitCode::from(2))
    }
}

fn run_checks(seed: u64, threads: usize) -> anyhow::Result<ExitCode> {
    init_threads(threads);
    let mut all = Vec::new();
    all.extend(check_norm_equivalence(2.0, 1.0)?);
    all.extend(check_projector_suite(seed)?);
    all.extend(check_structural(seed)?);
    let mut det_cfg = StudyConfig::defaults();
    det_cfg.levels = 3;
    det_cfg.p_s = 1;
    det_cfg.p_v = 1;
    all.push(check_determinism(&det_cfg)?);
    let mut ok = true;
    for r in &all {
        println!(
            "{} {:<45} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        ok &= r.passed;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::StudyH(args) => run_study(args, StudyMode::HRefinement),
        Command::StudyP(args) => run_study(args, StudyMode::PElevation),
        Command::Check { seed, threads } => run_checks(*seed, *threads),
        Command::DumpMesh { domain, level, out } => (|| {
            let mesh = match DomainKind::parse(domain)? {
                DomainKind::Square => make_square_mesh(1 << level)?,
                DomainKind::Disk => make_disk_mesh(*level)?,
            };
            let mut file = std::fs::File::create(out)?;
            dump_mesh(&mesh, &mut file)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        })(),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
