//! Command-line surface for the heaviness library: deficit traces,
//! heavy-point searches, exact finite-system certificates, the multiples
//! sequence, and the continued-fraction sweep. Fraction inputs stay
//! exact end to end; `sqrt(n)` inputs or `--approx` switch to floats.

mod emit;
mod spec;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use heaviness::{
    cf_expand_normalized, characterization_rows, coeffs_to_point, deficit_trace,
    find_heavy_candidate, first_failure_exact, greedy_tower_partition, heavy_existence_certificate,
    heavy_multiples_exact, heavy_multiples_scan, heavy_set_exact, morse_block_heaviness,
    morse_prefix_string, multiples_deficits, odd_index_divisible, point_to_sequence,
    polynomial_skew_system, polynomial_value_mod1, random_finite_system, skew_product_system,
    two_sided_search, two_sided_trace, window_set_exact, CirclePoint, CollisionKind,
    ContinuedFraction, DeficitTrace, FiniteSystem, LastCoordIndicator, MorsePoint, MorseShift,
    MultiplesVerdict, Observable, Rational, ScanMode, Scalar, SkewProduct, TorusPoint,
};

use emit::{csv_field, failure_json, report_json, scalar_json, trace_csv, trace_json, Format, Output};
use spec::{
    circle_obs, circle_point, obs_needs_approx, parse_interval_union, torus_point, CircleSystem,
    Num, SystemSpec,
};

#[derive(Parser)]
#[command(
    name = "heaviness",
    about = "Prefix-sum dominance of Birkhoff averages: traces, heavy sets, towers, and the multiples sequence",
    version
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Zero-comparison slack for floating-point runs; overrides the
    /// HEAVINESS_TOLERANCE environment variable (default 1e-9).
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Evaluate in floating point even when every input is a fraction.
    #[arg(long, global = true)]
    approx: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deficit trace of a forward orbit.
    Trace {
        /// rotation:ALPHA | times:M | skew:ALPHA,K | finite:PATH | morse
        #[arg(long)]
        system: String,
        /// Start point: circle value, comma-separated torus coordinates,
        /// atom index, or Morse offset.
        #[arg(long)]
        x: String,
        /// indicator:a,b[;c,d...] | step:b=v[,b=v...] | constant:c |
        /// table[:v0,v1,...] | bit
        #[arg(long)]
        obs: Option<String>,
        #[arg(long = "N")]
        horizon: u64,
    },
    /// Two-sided deficit trace over the window n1..n2 (n1 <= 0 <= n2).
    Trace2 {
        #[arg(long)]
        system: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        obs: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        n1: i64,
        #[arg(long, allow_negative_numbers = true)]
        n2: i64,
    },
    /// Heaviness through N over a grid or point list; lists survivors.
    HeavyScan {
        #[arg(long)]
        system: String,
        #[arg(long)]
        obs: Option<String>,
        #[arg(long = "N")]
        horizon: u64,
        /// Grid resolution: circle points i/q, torus points (i/q, j/q, ...).
        #[arg(long, conflicts_with = "points")]
        grid: Option<u64>,
        /// Semicolon-separated explicit points.
        #[arg(long)]
        points: Option<String>,
    },
    /// Best candidate point: maximizes the worst deficit through N.
    HeavySearch {
        #[arg(long)]
        system: String,
        #[arg(long)]
        obs: Option<String>,
        #[arg(long = "N")]
        horizon: u64,
        #[arg(long, conflicts_with = "points")]
        grid: Option<u64>,
        #[arg(long)]
        points: Option<String>,
    },
    /// Walk an orbit to manufacture a two-sided heavy point.
    TwoSidedSearch {
        #[arg(long)]
        system: String,
        #[arg(long)]
        obs: Option<String>,
        /// Orbit seed.
        #[arg(long)]
        x0: String,
        /// Symmetric window half-width to aim for.
        #[arg(long = "N")]
        window: u64,
        #[arg(long)]
        max_steps: u64,
    },
    /// First failure time of one atom of a finite system.
    FinitePsi {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        atom: usize,
        #[arg(long = "N")]
        horizon: u64,
    },
    /// Atoms heavy through N, with their total measure.
    FiniteHeavy {
        #[arg(long)]
        file: PathBuf,
        #[arg(long = "N")]
        horizon: u64,
    },
    /// Tower peeling of the non-heavy atoms, with collision diagnostics.
    Tower {
        #[arg(long)]
        file: PathBuf,
        #[arg(long = "N")]
        horizon: u64,
    },
    /// Heavy-set certificates for one system or a seeded random sweep;
    /// exits nonzero when any certificate fails.
    FiniteVerify {
        #[arg(long, conflicts_with_all = ["seed", "atoms", "count"])]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        atoms: usize,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long = "N")]
        horizon: u64,
    },
    /// Two-sided heavy atom set H(n1, n2) of a finite system.
    Window {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        n1: i64,
        #[arg(long, allow_negative_numbers = true)]
        n2: i64,
    },
    /// Deficits of the multiples sequence x, 2x, 3x, ... for a target.
    Multiples {
        #[arg(long)]
        x: String,
        /// Interval union a,b[;c,d...]
        #[arg(long)]
        target: String,
        #[arg(long = "N")]
        horizon: u64,
    },
    /// Exact all-horizons heaviness decision for rational x.
    MultiplesExact {
        #[arg(long)]
        x: String,
        #[arg(long)]
        target: String,
    },
    /// Continued fraction in even-length normal form, with optional
    /// divisibility of the odd-indexed quotients.
    Cf {
        #[arg(long)]
        x: String,
        #[arg(long)]
        k: Option<u64>,
    },
    /// Compare exact heaviness for [0, 1/k) against the continued
    /// fraction divisibility test over all reduced p/q, q <= qmax.
    CfSweep {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        qmax: u64,
    },
    /// Scan the grid i/q for heaviness of the multiples sequence.
    MultiplesScan {
        #[arg(long)]
        target: String,
        #[arg(long)]
        q: u64,
        /// Check a finite horizon instead of the exact all-N decision.
        #[arg(long = "N")]
        horizon: Option<u64>,
    },
    /// Morse prefix, with an optional heaviness scan of its "11" blocks.
    Morse {
        #[arg(long)]
        length: usize,
        /// Scan block starts below this bound...
        #[arg(long, requires = "check_horizon")]
        check_start: Option<usize>,
        /// ...walking deficits through this horizon.
        #[arg(long, requires = "check_start")]
        check_horizon: Option<usize>,
    },
    /// Polynomial sequence via the skew product, cross-checked against
    /// direct evaluation.
    PolySeq {
        #[arg(long)]
        alpha: String,
        /// Comma-separated a_0, ..., a_{k-1}.
        #[arg(long)]
        coeffs: String,
        #[arg(long = "N")]
        length: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}

fn tolerance_of(cli: &Cli) -> Option<f64> {
    cli.tolerance.or_else(|| {
        std::env::var("HEAVINESS_TOLERANCE")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn apply_tolerance<S: Scalar>(cli: &Cli, trace: DeficitTrace<S>) -> DeficitTrace<S> {
    match tolerance_of(cli) {
        Some(t) if !S::EXACT => {
            let tol = Num::Irrational(t).to_scalar().expect("finite tolerance");
            trace.with_tolerance(tol)
        }
        _ => trace,
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let (output, ok) = match &cli.command {
        Command::Trace {
            system,
            x,
            obs,
            horizon,
        } => (cmd_trace(cli, system, x, obs.as_deref(), *horizon)?, true),
        Command::Trace2 {
            system,
            x,
            obs,
            n1,
            n2,
        } => (cmd_trace2(cli, system, x, obs.as_deref(), *n1, *n2)?, true),
        Command::HeavyScan {
            system,
            obs,
            horizon,
            grid,
            points,
        } => (
            cmd_heavy_scan(cli, system, obs.as_deref(), *horizon, *grid, points.as_deref())?,
            true,
        ),
        Command::HeavySearch {
            system,
            obs,
            horizon,
            grid,
            points,
        } => (
            cmd_heavy_search(cli, system, obs.as_deref(), *horizon, *grid, points.as_deref())?,
            true,
        ),
        Command::TwoSidedSearch {
            system,
            obs,
            x0,
            window,
            max_steps,
        } => (
            cmd_two_sided_search(cli, system, obs.as_deref(), x0, *window, *max_steps)?,
            true,
        ),
        Command::FinitePsi {
            file,
            atom,
            horizon,
        } => (cmd_finite_psi(file, *atom, *horizon)?, true),
        Command::FiniteHeavy { file, horizon } => (cmd_finite_heavy(file, *horizon)?, true),
        Command::Tower { file, horizon } => (cmd_tower(file, *horizon)?, true),
        Command::FiniteVerify {
            file,
            seed,
            atoms,
            count,
            horizon,
        } => cmd_finite_verify(file.as_ref(), *seed, *atoms, *count, *horizon)?,
        Command::Window { file, n1, n2 } => (cmd_window(file, *n1, *n2)?, true),
        Command::Multiples { x, target, horizon } => {
            (cmd_multiples(cli, x, target, *horizon)?, true)
        }
        Command::MultiplesExact { x, target } => (cmd_multiples_exact(x, target)?, true),
        Command::Cf { x, k } => (cmd_cf(x, *k)?, true),
        Command::CfSweep { k, qmax } => (cmd_cf_sweep(*k, *qmax)?, true),
        Command::MultiplesScan { target, q, horizon } => {
            (cmd_multiples_scan(target, *q, *horizon)?, true)
        }
        Command::Morse {
            length,
            check_start,
            check_horizon,
        } => (cmd_morse(*length, *check_start, *check_horizon)?, true),
        Command::PolySeq {
            alpha,
            coeffs,
            length,
        } => (cmd_poly_seq(cli, alpha, coeffs, *length)?, true),
    };
    output.deliver(cli.format, cli.out.as_ref())?;
    Ok(ok)
}

fn wants_approx(cli: &Cli, sys: &SystemSpec, obs: Option<&str>, points: &[&str]) -> bool {
    cli.approx
        || sys.needs_approx()
        || obs_needs_approx(obs)
        || points.iter().any(|p| p.contains("sqrt"))
}

fn finite_obs(sys: &FiniteSystem<Rational>, obs: Option<&str>) -> Result<heaviness::AtomTable<Rational>> {
    match obs {
        None | Some("table") => Ok(sys.observable()),
        Some(spec) => {
            let rest = spec
                .strip_prefix("table:")
                .ok_or_else(|| anyhow!("finite systems take --obs table[:v0,v1,...]"))?;
            let values = rest
                .split(',')
                .map(|v| Num::parse(v)?.to_scalar::<Rational>())
                .collect::<Result<Vec<_>>>()?;
            Ok(heaviness::AtomTable::weighted(values, sys.weights())?)
        }
    }
}

fn morse_obs(shift: &MorseShift, obs: Option<&str>) -> Result<heaviness::MorseBit> {
    match obs {
        None | Some("bit") => Ok(shift.bit_observable()),
        Some(other) => bail!("the Morse shift only supports --obs bit, got {other:?}"),
    }
}

fn load_finite(path: &PathBuf) -> Result<FiniteSystem<Rational>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading finite system from {}", path.display()))?;
    Ok(FiniteSystem::from_text(&text)?)
}

fn atom_point(text: &str) -> Result<usize> {
    text.trim()
        .parse()
        .with_context(|| format!("bad atom index {text:?}"))
}

fn offset_point(text: &str) -> Result<MorsePoint> {
    Ok(MorsePoint::new(text.trim().parse().with_context(|| {
        format!("bad Morse offset {text:?}")
    })?))
}

// ---- trace and trace2 -----------------------------------------------------

fn trace_output<S: Scalar>(
    cli: &Cli,
    system_label: String,
    point_label: String,
    trace: DeficitTrace<S>,
) -> Output {
    let trace = apply_tolerance(cli, trace);
    let report = trace.report();
    let json = json!({
        "system": system_label,
        "x": point_label,
        "trace": trace_json(&trace),
        "report": report_json(&report),
    });
    let csv = trace_csv(&trace);
    Output { json, csv }
}

fn cmd_trace(cli: &Cli, system: &str, x: &str, obs: Option<&str>, horizon: u64) -> Result<Output> {
    let sys_spec = SystemSpec::parse(system)?;
    let approx = wants_approx(cli, &sys_spec, obs, &[x]);
    match &sys_spec {
        SystemSpec::Rotation(_) | SystemSpec::Times(_) => {
            if approx {
                let sys = CircleSystem::<f64>::build(&sys_spec)?;
                let f = circle_obs::<f64>(obs)?;
                let point = circle_point::<f64>(x)?;
                let trace = deficit_trace(&sys, &point, &f, horizon)?;
                Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
            } else {
                let sys = CircleSystem::<Rational>::build(&sys_spec)?;
                let f = circle_obs::<Rational>(obs)?;
                let point = circle_point::<Rational>(x)?;
                let trace = deficit_trace(&sys, &point, &f, horizon)?;
                Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
            }
        }
        SystemSpec::Skew { alpha, dim } => {
            if approx {
                let sys = skew_product_system(CirclePoint::new(alpha.to_scalar::<f64>()?), *dim)?;
                let f = torus_obs::<f64>(obs)?;
                let point = torus_point::<f64>(x, *dim)?;
                let trace = deficit_trace(&sys, &point, &f, horizon)?;
                Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
            } else {
                let sys =
                    skew_product_system(CirclePoint::new(alpha.to_scalar::<Rational>()?), *dim)?;
                let f = torus_obs::<Rational>(obs)?;
                let point = torus_point::<Rational>(x, *dim)?;
                let trace = deficit_trace(&sys, &point, &f, horizon)?;
                Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
            }
        }
        SystemSpec::Finite(path) => {
            let sys = load_finite(path)?;
            let f = finite_obs(&sys, obs)?;
            let atom = atom_point(x)?;
            let trace = deficit_trace(&sys, &atom, &f, horizon)?;
            Ok(trace_output(cli, sys_spec.label(), atom.to_string(), trace))
        }
        SystemSpec::Morse => {
            let sys = MorseShift::new();
            let f = morse_obs(&sys, obs)?;
            let point = offset_point(x)?;
            let trace: DeficitTrace<Rational> = deficit_trace(&sys, &point, &f, horizon)?;
            Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
        }
    }
}

fn cmd_trace2(
    cli: &Cli,
    system: &str,
    x: &str,
    obs: Option<&str>,
    n1: i64,
    n2: i64,
) -> Result<Output> {
    let sys_spec = SystemSpec::parse(system)?;
    let approx = wants_approx(cli, &sys_spec, obs, &[x]);
    match &sys_spec {
        SystemSpec::Rotation(_) | SystemSpec::Times(_) => {
            if approx {
                let sys = CircleSystem::<f64>::build(&sys_spec)?;
                let f = circle_obs::<f64>(obs)?;
                let point = circle_point::<f64>(x)?;
                let trace = two_sided_trace(&sys, &point, &f, n1, n2)?;
                Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
            } else {
                let sys = CircleSystem::<Rational>::build(&sys_spec)?;
                let f = circle_obs::<Rational>(obs)?;
                let point = circle_point::<Rational>(x)?;
                let trace = two_sided_trace(&sys, &point, &f, n1, n2)?;
                Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
            }
        }
        SystemSpec::Skew { alpha, dim } => {
            if approx {
                let sys = skew_product_system(CirclePoint::new(alpha.to_scalar::<f64>()?), *dim)?;
                let f = torus_obs::<f64>(obs)?;
                let point = torus_point::<f64>(x, *dim)?;
                let trace = two_sided_trace(&sys, &point, &f, n1, n2)?;
                Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
            } else {
                let sys =
                    skew_product_system(CirclePoint::new(alpha.to_scalar::<Rational>()?), *dim)?;
                let f = torus_obs::<Rational>(obs)?;
                let point = torus_point::<Rational>(x, *dim)?;
                let trace = two_sided_trace(&sys, &point, &f, n1, n2)?;
                Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
            }
        }
        SystemSpec::Finite(path) => {
            let sys = load_finite(path)?;
            let f = finite_obs(&sys, obs)?;
            let atom = atom_point(x)?;
            let trace = two_sided_trace(&sys, &atom, &f, n1, n2)?;
            Ok(trace_output(cli, sys_spec.label(), atom.to_string(), trace))
        }
        SystemSpec::Morse => {
            let sys = MorseShift::new();
            let f = morse_obs(&sys, obs)?;
            let point = offset_point(x)?;
            let trace: DeficitTrace<Rational> = two_sided_trace(&sys, &point, &f, n1, n2)?;
            Ok(trace_output(cli, sys_spec.label(), point.to_string(), trace))
        }
    }
}

fn torus_obs<S: Scalar>(obs: Option<&str>) -> Result<LastCoordIndicator<S>> {
    let spec = obs.ok_or_else(|| {
        anyhow!("torus systems need --obs indicator:a,b[;c,d...] (applied to the last coordinate)")
    })?;
    let rest = spec
        .strip_prefix("indicator:")
        .ok_or_else(|| anyhow!("torus systems only support indicator observables"))?;
    Ok(LastCoordIndicator::new(parse_interval_union(rest)?))
}

// ---- scans and searches ---------------------------------------------------

fn circle_grid<S: Scalar>(grid: u64) -> Vec<CirclePoint<S>> {
    (0..grid)
        .map(|i| CirclePoint::from_fraction(i as i64, grid as i64))
        .collect()
}

fn torus_grid<S: Scalar>(grid: u64, dim: usize) -> Result<Vec<TorusPoint<S>>> {
    let total = (grid as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if total > 4_000_000 {
        bail!("grid {grid}^{dim} has too many points; pass --points or a smaller grid");
    }
    let mut points = Vec::with_capacity(total as usize);
    let mut digits = vec![0u64; dim];
    loop {
        points.push(TorusPoint::new(
            digits
                .iter()
                .map(|&d| CirclePoint::from_fraction(d as i64, grid as i64))
                .collect(),
        )?);
        let mut carry = 0;
        while carry < dim {
            digits[carry] += 1;
            if digits[carry] < grid {
                break;
            }
            digits[carry] = 0;
            carry += 1;
        }
        if carry == dim {
            break;
        }
    }
    Ok(points)
}

fn split_points(points: &str) -> Vec<&str> {
    points.split(';').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn scan_output<Sys, F, S>(
    cli: &Cli,
    label: String,
    sys: &Sys,
    f: &F,
    horizon: u64,
    candidates: &[Sys::Point],
) -> Result<Output>
where
    Sys: heaviness::System,
    Sys::Point: Display,
    F: Observable<S, Point = Sys::Point>,
    S: Scalar,
{
    let mut rows = String::from("point,heavy\n");
    let mut survivors = Vec::new();
    for point in candidates {
        let trace = apply_tolerance(cli, deficit_trace(sys, point, f, horizon)?);
        let heavy = trace.all_nonnegative();
        rows.push_str(&format!("{},{heavy}\n", csv_field(&point.to_string())));
        if heavy {
            survivors.push(point.to_string());
        }
    }
    let json = json!({
        "system": label,
        "horizon": horizon,
        "candidates": candidates.len(),
        "survivors": survivors,
        "survivor_fraction": format!("{}/{}", survivors.len(), candidates.len()),
    });
    Ok(Output { json, csv: rows })
}

fn search_output<Sys, F, S>(
    cli: &Cli,
    label: String,
    sys: &Sys,
    f: &F,
    horizon: u64,
    candidates: &[Sys::Point],
) -> Result<Output>
where
    Sys: heaviness::System + Sync,
    Sys::Point: Display + Send + Sync,
    F: Observable<S, Point = Sys::Point> + Sync,
    S: Scalar,
{
    let outcome = find_heavy_candidate(sys, f, horizon, candidates)?;
    let trace = apply_tolerance(cli, deficit_trace(sys, &outcome.point, f, horizon)?);
    let report = trace.report();
    let json = json!({
        "system": label,
        "horizon": horizon,
        "candidates": candidates.len(),
        "index": outcome.index,
        "point": outcome.point.to_string(),
        "report": report_json(&report),
    });
    let csv = format!(
        "index,point,min_deficit,argmin_time,first_failure,heavy\n{},{},{},{},{},{}\n",
        outcome.index,
        csv_field(&outcome.point.to_string()),
        report.min_deficit,
        report.argmin_time,
        report.first_failure,
        report.is_heavy(),
    );
    Ok(Output { json, csv })
}

macro_rules! dispatch_candidates {
    ($cli:ident, $sys_spec:ident, $obs:ident, $horizon:ident, $grid:ident, $points:ident, $runner:ident) => {{
        let point_texts: Vec<&str> = $points.map(split_points).unwrap_or_default();
        let approx = wants_approx($cli, &$sys_spec, $obs, &point_texts);
        match &$sys_spec {
            SystemSpec::Rotation(_) | SystemSpec::Times(_) => {
                if approx {
                    let sys = CircleSystem::<f64>::build(&$sys_spec)?;
                    let f = circle_obs::<f64>($obs)?;
                    let candidates: Vec<CirclePoint<f64>> = match ($grid, &point_texts[..]) {
                        (Some(q), _) => circle_grid(q),
                        (None, texts) if !texts.is_empty() => texts
                            .iter()
                            .map(|t| circle_point::<f64>(t))
                            .collect::<Result<_>>()?,
                        _ => bail!("pass --grid or --points"),
                    };
                    $runner($cli, $sys_spec.label(), &sys, &f, $horizon, &candidates)
                } else {
                    let sys = CircleSystem::<Rational>::build(&$sys_spec)?;
                    let f = circle_obs::<Rational>($obs)?;
                    let candidates: Vec<CirclePoint<Rational>> = match ($grid, &point_texts[..]) {
                        (Some(q), _) => circle_grid(q),
                        (None, texts) if !texts.is_empty() => texts
                            .iter()
                            .map(|t| circle_point::<Rational>(t))
                            .collect::<Result<_>>()?,
                        _ => bail!("pass --grid or --points"),
                    };
                    $runner($cli, $sys_spec.label(), &sys, &f, $horizon, &candidates)
                }
            }
            SystemSpec::Skew { alpha, dim } => {
                if approx {
                    let sys =
                        skew_product_system(CirclePoint::new(alpha.to_scalar::<f64>()?), *dim)?;
                    let f = torus_obs::<f64>($obs)?;
                    let candidates: Vec<TorusPoint<f64>> = match ($grid, &point_texts[..]) {
                        (Some(q), _) => torus_grid(q, *dim)?,
                        (None, texts) if !texts.is_empty() => texts
                            .iter()
                            .map(|t| torus_point::<f64>(t, *dim))
                            .collect::<Result<_>>()?,
                        _ => bail!("pass --grid or --points"),
                    };
                    $runner($cli, $sys_spec.label(), &sys, &f, $horizon, &candidates)
                } else {
                    let sys = skew_product_system(
                        CirclePoint::new(alpha.to_scalar::<Rational>()?),
                        *dim,
                    )?;
                    let f = torus_obs::<Rational>($obs)?;
                    let candidates: Vec<TorusPoint<Rational>> = match ($grid, &point_texts[..]) {
                        (Some(q), _) => torus_grid(q, *dim)?,
                        (None, texts) if !texts.is_empty() => texts
                            .iter()
                            .map(|t| torus_point::<Rational>(t, *dim))
                            .collect::<Result<_>>()?,
                        _ => bail!("pass --grid or --points"),
                    };
                    $runner($cli, $sys_spec.label(), &sys, &f, $horizon, &candidates)
                }
            }
            SystemSpec::Finite(path) => {
                let sys = load_finite(path)?;
                let f = finite_obs(&sys, $obs)?;
                let candidates: Vec<usize> = if point_texts.is_empty() {
                    (0..sys.atoms()).collect()
                } else {
                    point_texts
                        .iter()
                        .map(|t| atom_point(t))
                        .collect::<Result<_>>()?
                };
                $runner($cli, $sys_spec.label(), &sys, &f, $horizon, &candidates)
            }
            SystemSpec::Morse => {
                let sys = MorseShift::new();
                let f = morse_obs(&sys, $obs)?;
                let candidates: Vec<MorsePoint> = match ($grid, &point_texts[..]) {
                    (Some(q), _) => (0..q as usize).map(MorsePoint::new).collect(),
                    (None, texts) if !texts.is_empty() => texts
                        .iter()
                        .map(|t| offset_point(t))
                        .collect::<Result<_>>()?,
                    _ => bail!("pass --grid or --points"),
                };
                // The Morse bit observable is scalar-generic; pin it.
                $runner::<MorseShift, heaviness::MorseBit, Rational>(
                    $cli,
                    $sys_spec.label(),
                    &sys,
                    &f,
                    $horizon,
                    &candidates,
                )
            }
        }
    }};
}

fn cmd_heavy_scan(
    cli: &Cli,
    system: &str,
    obs: Option<&str>,
    horizon: u64,
    grid: Option<u64>,
    points: Option<&str>,
) -> Result<Output> {
    let sys_spec = SystemSpec::parse(system)?;
    dispatch_candidates!(cli, sys_spec, obs, horizon, grid, points, scan_output)
}

fn cmd_heavy_search(
    cli: &Cli,
    system: &str,
    obs: Option<&str>,
    horizon: u64,
    grid: Option<u64>,
    points: Option<&str>,
) -> Result<Output> {
    let sys_spec = SystemSpec::parse(system)?;
    dispatch_candidates!(cli, sys_spec, obs, horizon, grid, points, search_output)
}

fn cmd_two_sided_search(
    cli: &Cli,
    system: &str,
    obs: Option<&str>,
    x0: &str,
    window: u64,
    max_steps: u64,
) -> Result<Output> {
    let sys_spec = SystemSpec::parse(system)?;
    let approx = wants_approx(cli, &sys_spec, obs, &[x0]);
    match &sys_spec {
        SystemSpec::Rotation(_) | SystemSpec::Times(_) => {
            if approx {
                let sys = CircleSystem::<f64>::build(&sys_spec)?;
                let f = circle_obs::<f64>(obs)?;
                let seed = circle_point::<f64>(x0)?;
                witness_output(sys_spec.label(), two_sided_search(&sys, &f, window, &seed, max_steps)?)
            } else {
                let sys = CircleSystem::<Rational>::build(&sys_spec)?;
                let f = circle_obs::<Rational>(obs)?;
                let seed = circle_point::<Rational>(x0)?;
                witness_output(sys_spec.label(), two_sided_search(&sys, &f, window, &seed, max_steps)?)
            }
        }
        SystemSpec::Skew { alpha, dim } => {
            if approx {
                let sys = skew_product_system(CirclePoint::new(alpha.to_scalar::<f64>()?), *dim)?;
                let f = torus_obs::<f64>(obs)?;
                let seed = torus_point::<f64>(x0, *dim)?;
                witness_output(sys_spec.label(), two_sided_search(&sys, &f, window, &seed, max_steps)?)
            } else {
                let sys =
                    skew_product_system(CirclePoint::new(alpha.to_scalar::<Rational>()?), *dim)?;
                let f = torus_obs::<Rational>(obs)?;
                let seed = torus_point::<Rational>(x0, *dim)?;
                witness_output(sys_spec.label(), two_sided_search(&sys, &f, window, &seed, max_steps)?)
            }
        }
        SystemSpec::Finite(path) => {
            let sys = load_finite(path)?;
            let f = finite_obs(&sys, obs)?;
            let seed = atom_point(x0)?;
            witness_output(sys_spec.label(), two_sided_search(&sys, &f, window, &seed, max_steps)?)
        }
        SystemSpec::Morse => {
            // Not invertible; surface the library's error.
            let sys = MorseShift::new();
            let f = morse_obs(&sys, obs)?;
            let seed = offset_point(x0)?;
            let result: Option<heaviness::TwoSidedWitness<MorsePoint, Rational>> =
                two_sided_search(&sys, &f, window, &seed, max_steps)?;
            witness_output(sys_spec.label(), result)
        }
    }
}

fn witness_output<P: Display, S: Scalar>(
    label: String,
    witness: Option<heaviness::TwoSidedWitness<P, S>>,
) -> Result<Output> {
    match witness {
        Some(w) => {
            let json = json!({
                "system": label,
                "found": true,
                "point": w.point.to_string(),
                "verified_window": w.verified_window,
                "neg_entry": w.neg_entry,
                "pos_entry": w.pos_entry,
                "pivot": w.pivot,
                "pivot_deficit": scalar_json(&w.pivot_deficit),
            });
            let csv = format!(
                "found,point,verified_window,neg_entry,pos_entry,pivot\ntrue,{},{},{},{},{}\n",
                csv_field(&w.point.to_string()),
                w.verified_window,
                w.neg_entry,
                w.pos_entry,
                w.pivot
            );
            Ok(Output { json, csv })
        }
        None => Ok(Output {
            json: json!({ "system": label, "found": false }),
            csv: "found,point,verified_window,neg_entry,pos_entry,pivot\nfalse,,,,,\n".into(),
        }),
    }
}

// ---- finite-system subcommands ---------------------------------------------

fn cmd_finite_psi(file: &PathBuf, atom: usize, horizon: u64) -> Result<Output> {
    let sys = load_finite(file)?;
    let failure = first_failure_exact(&sys, atom, horizon)?;
    let json = json!({
        "atom": atom,
        "horizon": horizon,
        "first_failure": failure_json(&failure),
    });
    let csv = format!("atom,horizon,first_failure\n{atom},{horizon},{failure}\n");
    Ok(Output { json, csv })
}

fn measure_of(sys: &FiniteSystem<Rational>, atoms: &[usize]) -> Rational {
    let mut total = Rational::from_fraction(0, 1);
    for &a in atoms {
        total = total + sys.weight(a);
    }
    total
}

fn cmd_finite_heavy(file: &PathBuf, horizon: u64) -> Result<Output> {
    let sys = load_finite(file)?;
    let heavy = heavy_set_exact(&sys, horizon)?;
    let measure = measure_of(&sys, &heavy);
    let json = json!({
        "horizon": horizon,
        "heavy_atoms": heavy,
        "count": heavy.len(),
        "measure": measure.to_string(),
    });
    let mut csv = String::from("atom\n");
    for a in &heavy {
        csv.push_str(&format!("{a}\n"));
    }
    Ok(Output { json, csv })
}

fn cmd_tower(file: &PathBuf, horizon: u64) -> Result<Output> {
    let sys = load_finite(file)?;
    let tower = greedy_tower_partition(&sys, horizon)?;
    let rows: Vec<Value> = tower
        .rows
        .iter()
        .map(|r| {
            json!({
                "base": r.base,
                "height": r.height,
                "row_atoms": r.row_atoms,
                "row_sum": r.row_sum.to_string(),
            })
        })
        .collect();
    let collisions: Vec<Value> = tower
        .collisions
        .iter()
        .map(|c| {
            json!({
                "row": c.row,
                "step": c.step,
                "atom": c.atom,
                "kind": match c.kind {
                    CollisionKind::AlreadyCovered => "already-covered",
                    CollisionKind::HeavySetOverlap => "heavy-set-overlap",
                },
            })
        })
        .collect();
    let json = json!({
        "horizon": horizon,
        "rows": rows,
        "collisions": collisions,
        "covered": tower.covered,
        "heavy": tower.heavy,
    });
    let mut csv = String::from("row,height,base_size,row_sum\n");
    for (i, r) in tower.rows.iter().enumerate() {
        csv.push_str(&format!("{i},{},{},{}\n", r.height, r.base.len(), r.row_sum));
    }
    Ok(Output { json, csv })
}

fn cmd_finite_verify(
    file: Option<&PathBuf>,
    seed: u64,
    atoms: usize,
    count: u64,
    horizon: u64,
) -> Result<(Output, bool)> {
    match file {
        Some(path) => {
            let sys = load_finite(path)?;
            let cert = heavy_existence_certificate(&sys, horizon)?;
            let json = json!({
                "mode": "file",
                "horizon": horizon,
                "heavy_set": cert.heavy_set,
                "rows": cert.partition.rows.len(),
                "rows_all_negative": cert.rows_all_negative,
                "rows_disjoint": cert.rows_disjoint,
                "rows_cover_space": cert.rows_cover_space,
                "holds": cert.holds,
            });
            let csv = format!(
                "holds,heavy_count,rows\n{},{},{}\n",
                cert.holds,
                cert.heavy_set.len(),
                cert.partition.rows.len()
            );
            Ok((Output { json, csv }, cert.holds))
        }
        None => {
            if atoms == 0 || count == 0 || horizon == 0 {
                bail!("the sweep needs positive --atoms, --count, and --N");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut failures = Vec::new();
            let mut csv = String::from("index,holds\n");
            for index in 0..count {
                let n_atoms = rng.random_range(1..=atoms);
                let sys: FiniteSystem<Rational> = random_finite_system(&mut rng, n_atoms);
                let mut all = true;
                for n in 1..=horizon {
                    let cert = heavy_existence_certificate(&sys, n)?;
                    if !cert.holds {
                        all = false;
                    }
                }
                if !all {
                    failures.push(index);
                }
                csv.push_str(&format!("{index},{all}\n"));
            }
            let ok = failures.is_empty();
            let json = json!({
                "mode": "sweep",
                "seed": seed,
                "max_atoms": atoms,
                "count": count,
                "horizon": horizon,
                "all_hold": ok,
                "failures": failures,
            });
            Ok((Output { json, csv }, ok))
        }
    }
}

fn cmd_window(file: &PathBuf, n1: i64, n2: i64) -> Result<Output> {
    let sys = load_finite(file)?;
    let atoms = window_set_exact(&sys, n1, n2)?;
    let measure = measure_of(&sys, &atoms);
    let json = json!({
        "n1": n1,
        "n2": n2,
        "atoms": atoms,
        "count": atoms.len(),
        "measure": measure.to_string(),
    });
    let mut csv = String::from("atom\n");
    for a in &atoms {
        csv.push_str(&format!("{a}\n"));
    }
    Ok(Output { json, csv })
}

// ---- multiples and continued fractions --------------------------------------

fn cmd_multiples(cli: &Cli, x: &str, target: &str, horizon: u64) -> Result<Output> {
    let approx = cli.approx || x.contains("sqrt") || target.contains("sqrt");
    if approx {
        let point = circle_point::<f64>(x)?;
        let union = parse_interval_union::<f64>(target)?;
        let trace = multiples_deficits(&point, &union, horizon)?;
        Ok(trace_output(cli, format!("multiples of {point}"), point.to_string(), trace))
    } else {
        let point = circle_point::<Rational>(x)?;
        let union = parse_interval_union::<Rational>(target)?;
        let trace = multiples_deficits(&point, &union, horizon)?;
        Ok(trace_output(cli, format!("multiples of {point}"), point.to_string(), trace))
    }
}

fn cmd_multiples_exact(x: &str, target: &str) -> Result<Output> {
    let value = Num::parse(x)?;
    let x = value
        .exact()
        .context("the exact decision needs rational x; use `multiples` with --N for irrationals")?;
    let union = parse_interval_union::<Rational>(target)?;
    let decision = heavy_multiples_exact(x, &union)?;
    let (verdict, first_failure) = match decision.verdict {
        MultiplesVerdict::Heavy => ("heavy", None),
        MultiplesVerdict::NotHeavy { first_failure } => ("not-heavy", Some(first_failure)),
    };
    let json = json!({
        "x": x.to_string(),
        "target": union.to_string(),
        "period": decision.period,
        "period_surplus": decision.period_surplus.to_string(),
        "verdict": verdict,
        "first_failure": first_failure,
    });
    let csv = format!(
        "x,period,period_surplus,verdict,first_failure\n{},{},{},{},{}\n",
        x,
        decision.period,
        decision.period_surplus,
        verdict,
        first_failure.map_or(String::new(), |n| n.to_string()),
    );
    Ok(Output { json, csv })
}

fn cmd_cf(x: &str, k: Option<u64>) -> Result<Output> {
    let value = Num::parse(x)?;
    let x = value.exact().context("continued fractions need rational x")?;
    let canonical = ContinuedFraction::expand(x)?;
    let normalized = cf_expand_normalized(x)?;
    let divisible = match k {
        Some(k) => Some(odd_index_divisible(&normalized, k)?),
        None => None,
    };
    let json = json!({
        "x": x.to_string(),
        "canonical": canonical.quotients(),
        "normalized": normalized.quotients(),
        "even_length": normalized.is_normalized(),
        "value_check": normalized.value() == *x,
        "divisor": k,
        "odd_index_divisible": divisible,
    });
    let quotient_list = normalized
        .quotients()
        .iter()
        .map(|q| q.to_string())
        .collect::<Vec<_>>()
        .join(";");
    let csv = format!(
        "x,normalized_quotients,odd_index_divisible\n{},{},{}\n",
        x,
        quotient_list,
        divisible.map_or(String::new(), |b| b.to_string()),
    );
    Ok(Output { json, csv })
}

fn cmd_cf_sweep(k: u64, qmax: u64) -> Result<Output> {
    let rows = characterization_rows(k, qmax)?;
    let total = rows.len();
    let agreements = rows.iter().filter(|r| r.agree).count();
    let mismatches: Vec<Value> = rows
        .iter()
        .filter(|r| !r.agree)
        .map(|r| {
            json!({
                "p": r.numer,
                "q": r.denom,
                "heavy": r.heavy,
                "divisible": r.divisible,
                "period_surplus": r.period_surplus.to_string(),
                "first_failure": r.first_failure,
            })
        })
        .collect();
    let json = json!({
        "k": k,
        "qmax": qmax,
        "total": total,
        "agreements": agreements,
        "mismatch_count": mismatches.len(),
        "mismatches": mismatches,
    });
    let mut csv = String::from("p,q,heavy,divisible,agree,surplus,first_failure\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.numer,
            r.denom,
            r.heavy,
            r.divisible,
            r.agree,
            r.period_surplus,
            r.first_failure.map_or(String::new(), |n| n.to_string()),
        ));
    }
    Ok(Output { json, csv })
}

fn cmd_multiples_scan(target: &str, q: u64, horizon: Option<u64>) -> Result<Output> {
    let union = parse_interval_union::<Rational>(target)?;
    let mode = match horizon {
        Some(n) => ScanMode::FiniteHorizon(n),
        None => ScanMode::Exact,
    };
    let scan = heavy_multiples_scan(&union, q, mode)?;
    let survivors: Vec<String> = scan.survivors.iter().map(|x| x.to_string()).collect();
    let json = json!({
        "target": union.to_string(),
        "grid": q,
        "mode": match mode {
            ScanMode::Exact => "exact".to_string(),
            ScanMode::FiniteHorizon(n) => format!("horizon:{n}"),
        },
        "survivors": survivors,
        "count": survivors.len(),
        "fraction": scan.fraction.to_string(),
    });
    let mut csv = String::from("survivor\n");
    for s in &survivors {
        csv.push_str(&format!("{s}\n"));
    }
    Ok(Output { json, csv })
}

// ---- morse and polynomial sequences -----------------------------------------

fn cmd_morse(
    length: usize,
    check_start: Option<usize>,
    check_horizon: Option<usize>,
) -> Result<Output> {
    if length == 0 {
        bail!("--length must be at least 1");
    }
    let prefix = morse_prefix_string(length);
    let check = match (check_start, check_horizon) {
        (Some(start), Some(horizon)) => {
            let report = morse_block_heaviness(start, horizon)?;
            Some(json!({
                "max_start": start,
                "horizon": horizon,
                "positions_tested": report.positions_tested,
                "all_heavy": report.all_heavy(),
                "min_zero_returns": report.min_zero_returns,
                "violations": report.violations.len(),
            }))
        }
        _ => None,
    };
    let json = json!({
        "length": length,
        "prefix": prefix,
        "block_check": check,
    });
    let mut csv = String::from("index,bit\n");
    for (i, b) in prefix.bytes().enumerate() {
        csv.push_str(&format!("{i},{}\n", b as char));
    }
    Ok(Output { json, csv })
}

fn cmd_poly_seq(cli: &Cli, alpha: &str, coeffs: &str, length: u64) -> Result<Output> {
    let alpha_num = Num::parse(alpha)?;
    let coeff_nums = coeffs
        .split(',')
        .map(Num::parse)
        .collect::<Result<Vec<_>>>()?;
    let approx = cli.approx || !alpha_num.is_exact() || coeff_nums.iter().any(|c| !c.is_exact());
    if approx {
        let a = CirclePoint::new(alpha_num.to_scalar::<f64>()?);
        let cs: Vec<CirclePoint<f64>> = coeff_nums
            .iter()
            .map(|c| Ok(CirclePoint::new(c.to_scalar::<f64>()?)))
            .collect::<Result<_>>()?;
        poly_seq_output::<f64>(&a, &cs, length, tolerance_of(cli).unwrap_or(1e-9))
    } else {
        let a = CirclePoint::new(alpha_num.to_scalar::<Rational>()?);
        let cs: Vec<CirclePoint<Rational>> = coeff_nums
            .iter()
            .map(|c| Ok(CirclePoint::new(c.to_scalar::<Rational>()?)))
            .collect::<Result<_>>()?;
        poly_seq_output::<Rational>(&a, &cs, length, 0.0)
    }
}

fn poly_seq_output<S: Scalar>(
    alpha: &CirclePoint<S>,
    coeffs: &[CirclePoint<S>],
    length: u64,
    tolerance: f64,
) -> Result<Output> {
    let start = coeffs_to_point(alpha, coeffs)?;
    let system: SkewProduct<S> = polynomial_skew_system(alpha, coeffs.len())?;
    let orbit = point_to_sequence(&system, &start, length)?;
    let direct: Vec<CirclePoint<S>> = (0..length)
        .map(|n| polynomial_value_mod1(alpha, coeffs, n as i64))
        .collect();
    let agree = orbit.iter().zip(&direct).all(|(a, b)| {
        if S::EXACT {
            a == b
        } else {
            let d = (a.value().to_f64_lossy() - b.value().to_f64_lossy()).abs();
            d.min(1.0 - d) <= tolerance
        }
    });
    let json = json!({
        "alpha": alpha.to_string(),
        "coefficients": coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "start_point": start.to_string(),
        "sequence": orbit.iter().map(|v| scalar_json(v.value())).collect::<Vec<_>>(),
        "direct": direct.iter().map(|v| scalar_json(v.value())).collect::<Vec<_>>(),
        "agree": agree,
        "mode": if S::EXACT { "exact" } else { "numerical" },
    });
    let mut csv = String::from("n,orbit,direct\n");
    for (n, (a, b)) in orbit.iter().zip(&direct).enumerate() {
        csv.push_str(&format!("{n},{a},{b}\n"));
    }
    Ok(Output { json, csv })
}
