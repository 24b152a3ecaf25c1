use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use hyperflow::artifacts::{simulate, to_json, write_outputs};
use hyperflow::config::RunConfig;
use hyperflow::flow::run;
use hyperflow::functionals::evaluate;
use hyperflow::hypgeom::{BallTables, Profile};
use hyperflow::verify::{classify, identity_battery, inequality_suite, InequalityRecord, Verdict};
use hyperflow::Error;

#[derive(Parser)]
#[command(name = "hyperflow", version, about = "Curvature flows of radial graphs in hyperbolic space")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Initial,
    Final,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run flows and write series.csv and summary.json per config.
    Simulate {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        /// Number of configs evaluated concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate the inequality registry on the initial or final surface.
    Inequalities {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Stage::Initial)]
        at: Stage,
        /// Print records as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long, hide = true)]
        flip_lhs: bool,
    },
    /// Seeded random check of the symmetric-function identities.
    Identities {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
    },
    /// Dump the geodesic-ball profiles as CSV over a radius range.
    BallTable {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        r_min: f64,
        #[arg(long, default_value_t = 3.0)]
        r_max: f64,
        #[arg(long, default_value_t = 30)]
        samples: usize,
    },
    /// Minkowski residuals of a config's initial surface.
    Minkowski {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Exit code 1: a verdict failed.
struct Failed;

enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.cmd) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> hyperflow::Result<Outcome> {
    let failed = match cmd {
        Cmd::Simulate { configs, jobs } => cmd_simulate(&configs, jobs)?,
        Cmd::Inequalities { config, at, json, flip_lhs } => cmd_inequalities(&config, at, json, flip_lhs)?,
        Cmd::Identities { n, samples, seed, tol } => cmd_identities(n, samples, seed, tol)?,
        Cmd::BallTable { n, r_min, r_max, samples } => cmd_ball_table(n, r_min, r_max, samples)?,
        Cmd::Minkowski { config } => cmd_minkowski(&config)?,
    };
    Ok(if failed.is_some() { Outcome::Failed } else { Outcome::Ok })
}

fn cmd_simulate(paths: &[PathBuf], jobs: usize) -> hyperflow::Result<Option<Failed>> {
    if jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let configs = paths.iter().map(|p| RunConfig::load(p)).collect::<hyperflow::Result<Vec<_>>>()?;
    let mut dirs = HashSet::new();
    for cfg in &configs {
        if !dirs.insert(cfg.out_dir.clone()) {
            return Err(Error::Config(format!("out_dir {} used by more than one config", cfg.out_dir.display())));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                let out = simulate(cfg)?;
                let files = write_outputs(cfg, &out)?;
                Ok((out.summary, files))
            })
            .collect::<Vec<hyperflow::Result<_>>>()
    });
    let mut any_failed = false;
    for (path, res) in paths.iter().zip(results) {
        let (s, (csv, json)) = res?;
        any_failed |= !s.passed;
        println!(
            "{}: status={} passed={} t={:.6} radius={:.10} predicted={} drift={:.3e} violated={} csv={} summary={}",
            path.display(),
            s.status,
            s.passed,
            s.t_final,
            s.final_radius,
            s.predicted_radius.map_or("n/a".into(), |r| format!("{r:.10}")),
            s.conserved_drift,
            s.violated_inequalities,
            csv.display(),
            json.display(),
        );
    }
    Ok(any_failed.then_some(Failed))
}

fn flip(rec: &mut InequalityRecord, cfg: &RunConfig) {
    if !rec.hypotheses_ok {
        return;
    }
    rec.lhs = -rec.lhs;
    rec.relative_gap = (rec.lhs - rec.rhs) / rec.rhs.abs().max(1.0);
    rec.verdict = classify(true, rec.relative_gap, &cfg.tolerances);
}

fn cmd_inequalities(path: &Path, at: Stage, json: bool, flip_lhs: bool) -> hyperflow::Result<Option<Failed>> {
    let cfg = RunConfig::load(path)?;
    let g0 = cfg.initial_graph()?;
    let g = match at {
        Stage::Initial => g0,
        Stage::Final => run(&g0, &cfg.flow.spec())?.1,
    };
    let (fields, report) = evaluate(&g)?;
    let mut records = inequality_suite(&fields, &report, cfg.tolerances)?;
    if flip_lhs {
        records.iter_mut().for_each(|r| flip(r, &cfg));
    }
    if json {
        println!("{}", to_json(&records)?);
    } else {
        for r in &records {
            let verdict = serde_json::to_value(r.verdict).expect("verdict serializes");
            println!(
                "{:<12} {:<10} {:<16} gap={:+.3e} lhs={:.10e} rhs={:.10e}{}",
                r.id,
                r.indices,
                verdict.as_str().unwrap_or_default(),
                r.relative_gap,
                r.lhs,
                r.rhs,
                if r.reasons.is_empty() { String::new() } else { format!("  [{}]", r.reasons.join("; ")) },
            );
        }
    }
    let count = |v: Verdict| records.iter().filter(|r| r.verdict == v).count();
    eprintln!(
        "holds={} equality={} violated={} hypotheses_unmet={}",
        count(Verdict::Holds),
        count(Verdict::Equality),
        count(Verdict::Violated),
        count(Verdict::HypothesesUnmet)
    );
    Ok((count(Verdict::Violated) > 0).then_some(Failed))
}

fn cmd_identities(n: usize, samples: usize, seed: u64, tol: f64) -> hyperflow::Result<Option<Failed>> {
    let report = identity_battery(n, samples, seed)?;
    for (name, v) in &report.checks {
        println!("{name:<24} {v:.3e}");
    }
    let ok = report.passes(tol);
    println!("n={n} samples={samples} seed={seed} max_violation={:.3e} {}", report.max_violation(), if ok { "PASS" } else { "FAIL" });
    Ok((!ok).then_some(Failed))
}

fn cmd_ball_table(n: usize, r_min: f64, r_max: f64, samples: usize) -> hyperflow::Result<Option<Failed>> {
    if !(r_min > 0.0 && r_max > r_min) || samples < 2 {
        return Err(Error::Config("need 0 < r_min < r_max and samples >= 2".into()));
    }
    let tables = BallTables::shared(n)?;
    let families: [fn(usize) -> Profile; 6] = [
        Profile::Quermass,
        Profile::ShiftedQuermass,
        Profile::GaussBonnet,
        Profile::Weighted,
        Profile::ShiftedWeighted,
        Profile::WeightedGaussBonnet,
    ];
    let profiles: Vec<Profile> = families
        .iter()
        .flat_map(|f| (0..=n).map(f))
        .filter(|&p| tables.eval(p, 1.0).is_ok())
        .collect();
    let header: Vec<String> = std::iter::once("r".to_string()).chain(profiles.iter().map(|p| p.to_string())).collect();
    println!("{}", header.join(","));
    for i in 0..samples {
        let r = r_min + (r_max - r_min) * i as f64 / (samples - 1) as f64;
        let mut row = vec![format!("{r:.16e}")];
        for &p in &profiles {
            row.push(format!("{:.16e}", tables.eval(p, r)?));
        }
        println!("{}", row.join(","));
    }
    Ok(None)
}

fn cmd_minkowski(path: &Path) -> hyperflow::Result<Option<Failed>> {
    let cfg = RunConfig::load(path)?;
    let g = cfg.initial_graph()?;
    let (_, report) = evaluate(&g)?;
    println!("m,rho,rho_rel,rhot,rhot_rel");
    for m in 0..report.rho.len() {
        let scale = report.int_lp_e[m].abs().max(1.0);
        let scale_t = report.int_shift_lp_e[m].abs().max(1.0);
        println!(
            "{m},{:.16e},{:.16e},{:.16e},{:.16e}",
            report.rho[m],
            report.rho[m] / scale,
            report.rho_t[m],
            report.rho_t[m] / scale_t
        );
    }
    Ok(None)
}
