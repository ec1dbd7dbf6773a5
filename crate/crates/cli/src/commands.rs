//! Subcommand implementations. Each returns the process exit code.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use relperf_core::equilibrium::{self, crra_closed_form, no_competition_solve, relative_sup_distance, VERIFY_TOL};
use relperf_core::hmap::TraceRow;
use relperf_core::oracle::fixed_point_iterate;
use relperf_core::sweeps::run_sweep;
use relperf_core::{Error, RegimeLabel};

use crate::config::{load_sweep, ConfigError, Overrides, RunConfig};

pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const SOLVER: i32 = 2;
    /// Verification failed, oracle disagreed, or a sweep was not monotone.
    pub const VERIFY: i32 = 3;
    pub const ORACLE_INCONCLUSIVE: i32 = 4;
    pub const SWEEP_ROW_FAILED: i32 = 5;
}

/// Tolerance for the closed-form cross-check in solve reports.
const CROSS_CHECK_TOL: f64 = 1e-8;
/// Agreement required between the solver and best-response iteration.
const ORACLE_TOL: f64 = 1e-6;

fn config_error(e: ConfigError) -> i32 {
    eprintln!("error: {e}");
    exit::CONFIG
}

fn solver_exit(e: &Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::VerificationFailed { .. } => exit::VERIFY,
        _ => exit::SOLVER,
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> i32 {
    eprintln!("error: cannot write {}: {e}", path.display());
    exit::CONFIG
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Serialize)]
struct ResidualReport {
    foc: f64,
    budget: f64,
}

#[derive(Serialize)]
struct CrossCheck {
    reference: &'static str,
    max_relative_distance: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct SolveReport {
    regime_label: RegimeLabel,
    unique: bool,
    dual: Vec<f64>,
    budgets: Vec<f64>,
    residuals: ResidualReport,
    newton_iterations: usize,
    wealth_csv: Option<String>,
    cross_check: Option<CrossCheck>,
}

fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["iteration", "residual", "step_size"])?;
    for row in trace {
        w.write_record([
            row.iteration.to_string(),
            format!("{:.16e}", row.residual),
            format!("{:.16e}", row.step_size),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn solve(config: &Path, ov: &Overrides) -> i32 {
    let cfg = match RunConfig::load(config, ov) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let profile = match equilibrium::solve(&cfg.game, &cfg.market, &cfg.x0, &cfg.solver) {
        Ok(p) => p,
        Err(e) => return solver_exit(&e),
    };
    let regime = cfg.thresholds.classify(&cfg.game);

    let reference = match regime {
        RegimeLabel::CrraClosedForm => Some(("crra_closed_form", crra_closed_form(&cfg.game, &cfg.market, &cfg.x0))),
        RegimeLabel::NoCompetition => Some(("no_competition", no_competition_solve(&cfg.game, &cfg.market, &cfg.x0))),
        _ => None,
    };
    let cross_check = match reference {
        None => None,
        Some((name, Ok(r))) => {
            let d = relative_sup_distance(&profile.wealth, &r.wealth);
            Some(CrossCheck {
                reference: name,
                max_relative_distance: d,
                tolerance: CROSS_CHECK_TOL,
                passed: d <= CROSS_CHECK_TOL,
            })
        }
        Some((_, Err(e))) => return solver_exit(&e),
    };

    if let Some(path) = &cfg.wealth {
        let written = create(path)
            .map_err(Error::from)
            .and_then(|w| equilibrium::write_wealth_csv(&cfg.market, &profile.wealth, w));
        if let Err(e) = written {
            return io_error(path, e);
        }
    }
    if let Some(path) = &cfg.trace {
        if let Err(e) = write_trace(path, &profile.trace) {
            return io_error(path, e);
        }
    }

    let passed = cross_check.as_ref().is_none_or(|c| c.passed);
    let report = SolveReport {
        regime_label: regime,
        unique: regime.unique(),
        dual: profile.dual.as_slice().to_vec(),
        budgets: profile.budgets.clone(),
        residuals: ResidualReport {
            foc: profile.foc_residual,
            budget: profile.budget_residual,
        },
        newton_iterations: profile.newton_iterations,
        wealth_csv: cfg.wealth.as_ref().map(|p| p.display().to_string()),
        cross_check,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    match &cfg.report {
        Some(path) => {
            if let Err(e) = create(path).and_then(|mut w| writeln!(w, "{json}").and_then(|_| w.flush())) {
                return io_error(path, e);
            }
            println!(
                "solved: regime {regime}, foc {:.3e}, budget {:.3e}, {} Newton iterations",
                profile.foc_residual, profile.budget_residual, profile.newton_iterations
            );
        }
        None => println!("{json}"),
    }
    if passed {
        exit::OK
    } else {
        eprintln!("error: closed-form cross-check failed");
        exit::VERIFY
    }
}

pub fn verify(config: &Path, wealth: &Path, ov: &Overrides) -> i32 {
    let cfg = match RunConfig::load(config, ov) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let matrix = match File::open(wealth)
        .map_err(Error::from)
        .and_then(equilibrium::read_wealth_csv)
    {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", wealth.display());
            return exit::CONFIG;
        }
    };
    let res = match equilibrium::verify(&cfg.game, &cfg.market, &cfg.x0, &matrix) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::CONFIG;
        }
    };
    let tol = ov.tol.unwrap_or(VERIFY_TOL);
    println!("foc_residual {:.6e}", res.foc);
    println!("budget_residual {:.6e}", res.budget);
    if res.passes(&cfg.x0, tol) {
        exit::OK
    } else {
        eprintln!("residuals exceed tolerance {tol:e}");
        exit::VERIFY
    }
}

#[derive(Serialize)]
struct OracleReport {
    converged: bool,
    rounds: usize,
    sup_distance: f64,
    tolerance: f64,
    history: Vec<f64>,
}

pub fn oracle(config: &Path, max_rounds: usize, ov: &Overrides) -> i32 {
    let cfg = match RunConfig::load(config, ov) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let eq = match equilibrium::solve(&cfg.game, &cfg.market, &cfg.x0, &cfg.solver) {
        Ok(p) => p,
        Err(e) => return solver_exit(&e),
    };
    let decoupled = cfg
        .game
        .with_lambdas(&vec![0.0; cfg.game.n()])
        .and_then(|g| no_competition_solve(&g, &cfg.market, &cfg.x0));
    let start = match decoupled {
        Ok(p) => p.wealth,
        Err(e) => return solver_exit(&e),
    };
    let fp = match fixed_point_iterate(&cfg.game, &cfg.market, &cfg.x0, &start, max_rounds) {
        Ok(fp) => fp,
        Err(e) => {
            eprintln!("oracle inconclusive: {e}");
            return exit::ORACLE_INCONCLUSIVE;
        }
    };
    let distance = fp.profile.sup_distance(&eq.wealth);
    let report = OracleReport {
        converged: fp.converged,
        rounds: fp.rounds,
        sup_distance: distance,
        tolerance: ORACLE_TOL,
        history: fp.history,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    if !fp.converged {
        eprintln!("oracle inconclusive: best-response iteration did not converge in {max_rounds} rounds");
        exit::ORACLE_INCONCLUSIVE
    } else if distance > ORACLE_TOL {
        eprintln!("error: oracle and solver disagree by {distance:.3e}");
        exit::VERIFY
    } else {
        exit::OK
    }
}

pub fn sweep(config: &Path, ov: &Overrides) -> i32 {
    let loaded = match load_sweep(config, ov) {
        Ok(l) => l,
        Err(e) => return config_error(e),
    };
    let table = match run_sweep(&loaded.config) {
        Ok(t) => t,
        Err(e) => return solver_exit(&e),
    };
    let written = match &loaded.output {
        Some(path) => create(path)
            .map_err(Error::from)
            .and_then(|w| table.write_csv(w))
            .map_err(|e| io_error(path, e)),
        None => table.write_csv(io::stdout().lock()).map_err(|e| {
            eprintln!("error: {e}");
            exit::CONFIG
        }),
    };
    if let Err(code) = written {
        return code;
    }
    let ratios: Vec<String> = table.ratios().iter().map(|r| format!("{r:.4}")).collect();
    eprintln!("consecutive sup-distance ratios: [{}]", ratios.join(", "));
    for row in table.rows.iter().filter(|r| r.status != relperf_core::sweeps::RowStatus::Ok) {
        eprintln!("row epsilon={}: {}", row.epsilon, row.status);
    }
    if !table.all_solved() {
        exit::SWEEP_ROW_FAILED
    } else if !table.is_monotone() {
        eprintln!("error: distances to the reference increase along the grid");
        exit::VERIFY
    } else {
        exit::OK
    }
}
