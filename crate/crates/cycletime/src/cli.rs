//! Command-line front end: dataset synthesis, model training, benchmark
//! grids, and prediction, with deterministic file outputs.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 data or model schema. Divergent
//! training runs still exit 0; divergence is a reported result, not a
//! failure of the tool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::anfis::{
    anfis_split_spec, run_anfis_comparison, test_walk, train_hybrid, AnfisRun, FisModel,
    HybridConfig, SugenoOrder,
};
use crate::ann::{model_kind_of, NetworkModel, Topology};
use crate::dataset::{
    format_float, generate_synthetic, load_csv, normalize, split, write_csv, Dataset,
};
use crate::error::{Error, Result};
use crate::trainers::{
    run_comparison, train, Algorithm, ComparisonRun, TrainConfig, TrainReport, ANN_SPLIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Ann,
    Anfis,
    All,
}

/// Comma-separated positive integers, e.g. hidden widths "8,8".
#[derive(Debug, Clone)]
struct NumList(Vec<usize>);

fn parse_num_list(s: &str) -> std::result::Result<NumList, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let n: usize = part
            .trim()
            .parse()
            .map_err(|_| format!("{part:?} is not a positive integer"))?;
        if n == 0 {
            return Err("entries must be at least 1".to_string());
        }
        out.push(n);
    }
    if out.is_empty() {
        return Err("expected at least one entry".to_string());
    }
    Ok(NumList(out))
}

/// Seeds as a single value `7`, a list `1,2,3`, or an inclusive range `1..10`.
#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
        let hi: u64 = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
        if hi < lo {
            return Err(format!("empty seed range {lo}..{hi}"));
        }
        return Ok(SeedList((lo..=hi).collect()));
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        out.push(
            part.trim()
                .parse()
                .map_err(|_| format!("{part:?} is not a seed"))?,
        );
    }
    if out.is_empty() {
        return Err("expected at least one seed".to_string());
    }
    Ok(SeedList(out))
}

#[derive(Parser)]
#[command(
    name = "cycletime",
    version,
    about = "Predicts injection-moulding cycle time with a feedforward network or a fuzzy inference model"
)]
struct Cli {
    /// Seed for data generation, splitting, and parameter initialization.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Restrict table outputs to one format; default writes both.
    #[arg(long, global = true, value_enum)]
    format: Option<TableFormat>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic process dataset as CSV.
    GenData {
        /// Number of rows.
        #[arg(long, default_value_t = 600)]
        n: usize,
        /// Standard deviation of the cycle-time noise, in seconds.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Output CSV path (default: <out-dir>/data.csv).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Train one network algorithm; writes model, report, and plot data.
    TrainAnn {
        /// Training algorithm.
        #[arg(long, value_enum)]
        algo: Algorithm,
        /// Hidden layer widths, comma separated.
        #[arg(long, default_value = "8,8", value_parser = parse_num_list)]
        hidden: NumList,
        /// Input CSV; omit to train on the synthetic dataset.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Synthetic row count (only without --data).
        #[arg(long)]
        n: Option<usize>,
        /// Synthetic noise level (only without --data).
        #[arg(long)]
        noise: Option<f64>,
        /// Epoch budget.
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        /// Stop once the normalized training MSE reaches this value.
        #[arg(long, default_value_t = 0.0)]
        goal: f64,
        /// Learning rate for the descent algorithms.
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        /// Momentum coefficient for gdm.
        #[arg(long, default_value_t = 0.9)]
        momentum: f64,
    },
    /// Train one fuzzy inference cell; writes model, report, and test trace.
    TrainAnfis {
        /// Membership functions per input.
        #[arg(long, default_value_t = 2)]
        mfs: usize,
        /// Sugeno consequent order.
        #[arg(long, value_enum, default_value_t = SugenoOrder::Linear)]
        order: SugenoOrder,
        /// Input CSV; omit to train on the synthetic dataset.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Synthetic row count (only without --data).
        #[arg(long)]
        n: Option<usize>,
        /// Synthetic noise level (only without --data).
        #[arg(long)]
        noise: Option<f64>,
        /// Epoch budget.
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        /// Learning rate for the membership parameters.
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
    },
    /// Benchmark the training algorithms and/or the fuzzy grid.
    Compare {
        /// Which benchmark to run.
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Input CSV; omit to benchmark on the synthetic dataset.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Synthetic row count (only without --data).
        #[arg(long)]
        n: Option<usize>,
        /// Synthetic noise level (only without --data).
        #[arg(long)]
        noise: Option<f64>,
        /// Training seeds: `7`, `1,2,3`, or inclusive `1..10`
        /// (default: the global --seed).
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<SeedList>,
        /// Hidden layer widths for the network runs.
        #[arg(long, default_value = "8,8", value_parser = parse_num_list)]
        hidden: NumList,
        /// Epoch budget per network run.
        #[arg(long, default_value_t = 1000)]
        ann_epochs: usize,
        /// Epoch budget per fuzzy run.
        #[arg(long, default_value_t = 50)]
        anfis_epochs: usize,
        /// Membership counts for the fuzzy grid.
        #[arg(long, default_value = "2,4", value_parser = parse_num_list)]
        mfs: NumList,
    },
    /// Predict cycle times with a saved model.
    Predict {
        /// Serialized model file (network or fuzzy).
        #[arg(long)]
        model: PathBuf,
        /// Batch CSV; omit to predict one point from the three flags.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output CSV for batch mode (default: <out-dir>/predictions.csv).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Mould temperature for a single prediction.
        #[arg(long)]
        mould_temp: Option<f64>,
        /// Injection pressure for a single prediction.
        #[arg(long)]
        injection_pressure: Option<f64>,
        /// Switch-over pressure for a single prediction.
        #[arg(long)]
        switchover_pressure: Option<f64>,
    },
}

/// Parses arguments, runs the selected subcommand, and maps errors onto the
/// documented exit codes.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        Error::Csv(e) => match e.kind() {
            csv::ErrorKind::Io(_) => 3,
            _ => 4,
        },
        Error::InvalidArgument(_)
        | Error::BadRange { .. }
        | Error::BadRatios { .. }
        | Error::BadCounts { .. } => 2,
        _ => 4,
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenData { n, noise, out } => cmd_gen_data(cli, *n, *noise, out),
        Command::TrainAnn {
            algo,
            hidden,
            data,
            n,
            noise,
            epochs,
            goal,
            lr,
            momentum,
        } => cmd_train_ann(
            cli, *algo, hidden, data, *n, *noise, *epochs, *goal, *lr, *momentum,
        ),
        Command::TrainAnfis {
            mfs,
            order,
            data,
            n,
            noise,
            epochs,
            lr,
        } => cmd_train_anfis(cli, *mfs, *order, data, *n, *noise, *epochs, *lr),
        Command::Compare {
            suite,
            data,
            n,
            noise,
            seeds,
            hidden,
            ann_epochs,
            anfis_epochs,
            mfs,
        } => cmd_compare(
            cli,
            *suite,
            data,
            *n,
            *noise,
            seeds,
            hidden,
            *ann_epochs,
            *anfis_epochs,
            mfs,
        ),
        Command::Predict {
            model,
            data,
            out,
            mould_temp,
            injection_pressure,
            switchover_pressure,
        } => cmd_predict(
            cli,
            model,
            data,
            out,
            *mould_temp,
            *injection_pressure,
            *switchover_pressure,
        ),
    }
}

/// Loads the CSV when given, otherwise draws the synthetic dataset; the
/// string names the source for echoing into reports.
fn obtain_data(
    data: &Option<PathBuf>,
    n: Option<usize>,
    noise: Option<f64>,
    seed: u64,
) -> Result<(Dataset, String)> {
    match data {
        Some(path) => {
            if n.is_some() || noise.is_some() {
                return Err(Error::InvalidArgument(
                    "--n and --noise shape the synthetic dataset; drop them when passing --data"
                        .to_string(),
                ));
            }
            Ok((load_csv(path)?, path.display().to_string()))
        }
        None => {
            let rows = n.unwrap_or(600);
            let sd = noise.unwrap_or(0.1);
            Ok((
                generate_synthetic(rows, seed, sd)?,
                format!("synthetic(n={rows}, seed={seed}, noise={sd})"),
            ))
        }
    }
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cli.out_dir)?;
    Ok(cli.out_dir.join(name))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn cmd_gen_data(cli: &Cli, n: usize, noise: f64, out: &Option<PathBuf>) -> Result<()> {
    let d = generate_synthetic(n, cli.seed, noise)?;
    let path = match out {
        Some(p) => p.clone(),
        None => out_path(cli, "data.csv")?,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_csv(&d, &path)?;
    println!("wrote {} rows to {}", d.len(), path.display());
    for (col, name) in d.input_names().iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (row, _) in d.rows() {
            lo = lo.min(row[col]);
            hi = hi.max(row[col]);
        }
        println!("  {name}: {lo:.3} .. {hi:.3}");
    }
    let lo = d.targets().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = d
        .targets()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    println!("  {}: {lo:.3} .. {hi:.3}", d.target_name());
    Ok(())
}

fn loss_trace_csv(report: &TrainReport) -> String {
    let mut s = String::from("epoch,train_mse,validation_mse\n");
    for rec in &report.trace {
        let _ = writeln!(
            s,
            "{},{},{}",
            rec.epoch,
            format_float(rec.train_mse),
            opt_float(rec.validation_mse)
        );
    }
    s
}

fn pairs_csv(pairs: &[(f64, f64)]) -> String {
    let mut s = String::from("actual,predicted\n");
    for &(a, p) in pairs {
        let _ = writeln!(s, "{},{}", format_float(a), format_float(p));
    }
    s
}

fn walk_csv(walk: &[(usize, f64, f64)]) -> String {
    let mut s = String::from("index,actual,predicted\n");
    for &(i, a, p) in walk {
        let _ = writeln!(s, "{i},{},{}", format_float(a), format_float(p));
    }
    s
}

fn print_report_summary(report: &TrainReport) {
    println!(
        "{}: {} epochs, stopped by {}{}",
        report.algorithm,
        report.epochs_run,
        report.stop_reason.as_str(),
        if report.diverged { " (diverged)" } else { "" }
    );
    println!(
        "  train MSE {:.6e} s^2, validation {}, test {}",
        report.train_mse,
        report
            .validation_mse
            .map(|v| format!("{v:.6e} s^2"))
            .unwrap_or_else(|| "n/a".to_string()),
        report
            .test_mse
            .map(|v| format!("{v:.6e} s^2"))
            .unwrap_or_else(|| "n/a".to_string()),
    );
    println!(
        "  network MSE {:.6e} s^2, R {}",
        report.network_mse,
        report
            .r_value
            .map(|r| format!("{r:.6}"))
            .unwrap_or_else(|| "n/a".to_string()),
    );
}

#[allow(clippy::too_many_arguments)]
fn cmd_train_ann(
    cli: &Cli,
    algo: Algorithm,
    hidden: &NumList,
    data: &Option<PathBuf>,
    n: Option<usize>,
    noise: Option<f64>,
    epochs: usize,
    goal: f64,
    lr: f64,
    momentum: f64,
) -> Result<()> {
    let (raw, source) = obtain_data(data, n, noise, cli.seed)?;
    let (normalized, params) = normalize(&raw)?;
    let split_data = split(&normalized, &ANN_SPLIT, cli.seed)?;
    let topology = Topology::new(raw.input_dim(), hidden.0.clone());
    let model0 = NetworkModel::init(&topology, cli.seed, params)?;
    let mut config = TrainConfig::new(algo);
    config.max_epochs = epochs;
    config.goal_mse = goal;
    config.learning_rate = lr;
    config.momentum = momentum;
    let (trained, report) = train(&model0, &split_data, &config)?;

    let stem = algo.short_name();
    let json_tables = cli.format != Some(TableFormat::Csv);
    let csv_tables = cli.format != Some(TableFormat::Json);
    write_text(&out_path(cli, &format!("{stem}_model.json"))?, &trained.to_json()?)?;
    if json_tables {
        write_text(
            &out_path(cli, &format!("{stem}_report.json"))?,
            &serde_json::to_string_pretty(&report)?,
        )?;
    }
    if csv_tables {
        write_text(
            &out_path(cli, &format!("{stem}_loss_trace.csv"))?,
            &loss_trace_csv(&report),
        )?;
        let predicted = trained.predict_dataset(&raw)?;
        let pairs: Vec<(f64, f64)> = raw.targets().iter().cloned().zip(predicted).collect();
        write_text(
            &out_path(cli, &format!("{stem}_predictions.csv"))?,
            &pairs_csv(&pairs),
        )?;
    }
    println!("data: {source}");
    print_report_summary(&report);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train_anfis(
    cli: &Cli,
    mfs: usize,
    order: SugenoOrder,
    data: &Option<PathBuf>,
    n: Option<usize>,
    noise: Option<f64>,
    epochs: usize,
    lr: f64,
) -> Result<()> {
    let (raw, source) = obtain_data(data, n, noise, cli.seed)?;
    let (normalized, params) = normalize(&raw)?;
    let split_data = split(&normalized, &anfis_split_spec(raw.len()), cli.seed)?;
    let dim = raw.input_dim();
    let fis0 = FisModel::grid_partition(&vec![(-1.0, 1.0); dim], &vec![mfs; dim], order, params)?;
    let config = HybridConfig {
        max_epochs: epochs,
        lr_premise: lr,
        ..HybridConfig::default()
    };
    let (fis, report) = train_hybrid(&fis0, &split_data, &config)?;
    let run = AnfisRun {
        n_mfs: mfs,
        order,
        seed: split_data.seed,
        rule_count: fis.rule_count(),
        report,
        test_trace: test_walk(&fis, &split_data.test),
    };

    let stem = format!("anfis_{mfs}mf_{}", order.report_name());
    let json_tables = cli.format != Some(TableFormat::Csv);
    let csv_tables = cli.format != Some(TableFormat::Json);
    write_text(&out_path(cli, &format!("{stem}_model.json"))?, &fis.to_json()?)?;
    if json_tables {
        write_text(
            &out_path(cli, &format!("{stem}_report.json"))?,
            &serde_json::to_string_pretty(&run)?,
        )?;
    }
    if csv_tables {
        write_text(
            &out_path(cli, &format!("{stem}_loss_trace.csv"))?,
            &loss_trace_csv(&run.report),
        )?;
        write_text(
            &out_path(cli, &format!("{stem}_test_trace.csv"))?,
            &walk_csv(&run.test_trace),
        )?;
    }
    println!("data: {source}");
    println!(
        "anfis: {} membership functions per input, {} order, {} rules",
        mfs,
        order.report_name(),
        run.rule_count
    );
    print_report_summary(&run.report);
    Ok(())
}

const COMPARISON_HEADER: &str = "model,algorithm,n_mfs,order,rule_count,seed,epochs,\
stop_reason,diverged,rank_warning,train_mse,validation_mse,test_mse,network_mse,\
train_mse_norm,validation_mse_norm,test_mse_norm,network_mse_norm,r_value";

fn comparison_row(
    model: &str,
    algorithm: &str,
    cell: Option<(usize, &str, usize)>,
    report: &TrainReport,
) -> String {
    let (n_mfs, order, rules) = match cell {
        Some((m, o, r)) => (m.to_string(), o.to_string(), r.to_string()),
        None => (String::new(), String::new(), String::new()),
    };
    format!(
        "{model},{algorithm},{n_mfs},{order},{rules},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        report.seed,
        report.epochs_run,
        report.stop_reason.as_str(),
        report.diverged,
        report.rank_warning,
        format_float(report.train_mse),
        opt_float(report.validation_mse),
        opt_float(report.test_mse),
        format_float(report.network_mse),
        format_float(report.train_mse_norm),
        opt_float(report.validation_mse_norm),
        opt_float(report.test_mse_norm),
        format_float(report.network_mse_norm),
        opt_float(report.r_value),
    )
}

/// Median of the finite values; None when none are finite.
fn median_finite(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

fn print_group_line(label: &str, reports: &[&TrainReport]) {
    let net = median_finite(reports.iter().map(|r| r.network_mse));
    let r = median_finite(reports.iter().filter_map(|r| r.r_value));
    let diverged = reports.iter().filter(|r| r.diverged).count();
    println!(
        "  {label:<22} median network MSE {} s^2, median R {}, {} runs, {} diverged",
        net.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "n/a".to_string()),
        r.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".to_string()),
        reports.len(),
        diverged
    );
}

#[derive(Serialize)]
struct AnfisRowView<'a> {
    n_mfs: usize,
    order: &'a str,
    rule_count: usize,
    report: &'a TrainReport,
}

#[derive(Serialize)]
struct ComparisonFile<'a> {
    schema_version: u32,
    source: &'a str,
    seeds: &'a [u64],
    ann: Option<Vec<&'a TrainReport>>,
    anfis: Option<Vec<AnfisRowView<'a>>>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    cli: &Cli,
    suite: Suite,
    data: &Option<PathBuf>,
    n: Option<usize>,
    noise: Option<f64>,
    seeds: &Option<SeedList>,
    hidden: &NumList,
    ann_epochs: usize,
    anfis_epochs: usize,
    mfs: &NumList,
) -> Result<()> {
    let (raw, source) = obtain_data(data, n, noise, cli.seed)?;
    let seeds: Vec<u64> = seeds
        .as_ref()
        .map(|s| s.0.clone())
        .unwrap_or_else(|| vec![cli.seed]);

    let ann_runs: Option<Vec<ComparisonRun>> = if suite != Suite::Anfis {
        let topology = Topology::new(raw.input_dim(), hidden.0.clone());
        let configs: Vec<TrainConfig> = Algorithm::ALL
            .iter()
            .map(|&a| {
                let mut c = TrainConfig::new(a);
                c.max_epochs = ann_epochs;
                c
            })
            .collect();
        Some(run_comparison(&raw, &topology, &seeds, &configs, &ANN_SPLIT)?)
    } else {
        None
    };

    let anfis_runs: Option<Vec<AnfisRun>> = if suite != Suite::Ann {
        let config = HybridConfig {
            max_epochs: anfis_epochs,
            ..HybridConfig::default()
        };
        Some(run_anfis_comparison(
            &raw,
            &mfs.0,
            &[SugenoOrder::Constant, SugenoOrder::Linear],
            &seeds,
            &anfis_split_spec(raw.len()),
            &config,
        )?)
    } else {
        None
    };

    let json_tables = cli.format != Some(TableFormat::Csv);
    let csv_tables = cli.format != Some(TableFormat::Json);

    if csv_tables {
        let mut table = String::from(COMPARISON_HEADER);
        table.push('\n');
        for run in ann_runs.iter().flatten() {
            table.push_str(&comparison_row("ann", &run.report.algorithm, None, &run.report));
        }
        for run in anfis_runs.iter().flatten() {
            table.push_str(&comparison_row(
                "anfis",
                "anfis",
                Some((run.n_mfs, run.order.report_name(), run.rule_count)),
                &run.report,
            ));
        }
        write_text(&out_path(cli, "comparison.csv")?, &table)?;

        for run in ann_runs.iter().flatten() {
            let name = format!(
                "traces/ann_{}_seed{}_predictions.csv",
                run.algorithm.short_name(),
                run.seed
            );
            write_text(&out_path(cli, &name)?, &pairs_csv(&run.pairs))?;
        }
        for run in anfis_runs.iter().flatten() {
            let name = format!(
                "traces/anfis_{}mf_{}_seed{}_test.csv",
                run.n_mfs,
                run.order.report_name(),
                run.seed
            );
            write_text(&out_path(cli, &name)?, &walk_csv(&run.test_trace))?;
        }
    }

    if json_tables {
        let file = ComparisonFile {
            schema_version: 1,
            source: &source,
            seeds: &seeds,
            ann: ann_runs
                .as_ref()
                .map(|runs| runs.iter().map(|r| &r.report).collect()),
            anfis: anfis_runs.as_ref().map(|runs| {
                runs.iter()
                    .map(|r| AnfisRowView {
                        n_mfs: r.n_mfs,
                        order: r.order.report_name(),
                        rule_count: r.rule_count,
                        report: &r.report,
                    })
                    .collect()
            }),
        };
        write_text(
            &out_path(cli, "comparison.json")?,
            &serde_json::to_string_pretty(&file)?,
        )?;
    }

    println!("data: {source}");
    println!("seeds: {seeds:?}");
    if let Some(runs) = &ann_runs {
        println!("network algorithms:");
        for algo in Algorithm::ALL {
            let group: Vec<&TrainReport> = runs
                .iter()
                .filter(|r| r.algorithm == algo)
                .map(|r| &r.report)
                .collect();
            print_group_line(algo.report_name(), &group);
        }
    }
    if let Some(runs) = &anfis_runs {
        println!("fuzzy cells:");
        for &m in &mfs.0 {
            for order in [SugenoOrder::Constant, SugenoOrder::Linear] {
                let group: Vec<&TrainReport> = runs
                    .iter()
                    .filter(|r| r.n_mfs == m && r.order == order)
                    .map(|r| &r.report)
                    .collect();
                let label = format!("anfis {m} MF {}", order.report_name());
                print_group_line(&label, &group);
            }
        }
    }
    Ok(())
}

enum AnyModel {
    Network(NetworkModel),
    Fis(FisModel),
}

impl AnyModel {
    fn load(path: &Path) -> Result<AnyModel> {
        let json = std::fs::read_to_string(path)?;
        match model_kind_of(&json)?.as_str() {
            "ann" => Ok(AnyModel::Network(NetworkModel::from_json(&json)?)),
            "anfis" => Ok(AnyModel::Fis(FisModel::from_json(&json)?)),
            other => Err(Error::Schema(format!("unknown model kind {other:?}"))),
        }
    }

    fn predict(&self, raw: &[f64]) -> Result<f64> {
        match self {
            AnyModel::Network(m) => m.predict(raw),
            AnyModel::Fis(m) => m.predict(raw),
        }
    }

    fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        match self {
            AnyModel::Network(m) => m.predict_dataset(d),
            AnyModel::Fis(m) => m.predict_dataset(d),
        }
    }
}

fn cmd_predict(
    cli: &Cli,
    model_path: &Path,
    data: &Option<PathBuf>,
    out: &Option<PathBuf>,
    mould_temp: Option<f64>,
    injection_pressure: Option<f64>,
    switchover_pressure: Option<f64>,
) -> Result<()> {
    let model = AnyModel::load(model_path)?;
    let point_flags = [mould_temp, injection_pressure, switchover_pressure];
    match data {
        Some(path) => {
            if point_flags.iter().any(Option::is_some) {
                return Err(Error::InvalidArgument(
                    "pass either --data or the three point flags, not both".to_string(),
                ));
            }
            let batch = load_csv(path)?;
            let predicted = model.predict_dataset(&batch)?;
            let mut table = String::new();
            let _ = writeln!(
                table,
                "{},{},predicted_cycle_time",
                batch.input_names().join(","),
                batch.target_name()
            );
            for ((row, target), pred) in batch.rows().zip(&predicted) {
                for v in row {
                    let _ = write!(table, "{},", format_float(*v));
                }
                let _ = writeln!(table, "{},{}", format_float(target), format_float(*pred));
            }
            let path = match out {
                Some(p) => p.clone(),
                None => out_path(cli, "predictions.csv")?,
            };
            write_text(&path, &table)?;
            println!("{} predictions", predicted.len());
            Ok(())
        }
        None => {
            let [t, pi, ps] = point_flags;
            let (t, pi, ps) = match (t, pi, ps) {
                (Some(t), Some(pi), Some(ps)) => (t, pi, ps),
                _ => {
                    return Err(Error::InvalidArgument(
                        "a single prediction needs --mould-temp, --injection-pressure, \
                         and --switchover-pressure (or --data for a batch)"
                            .to_string(),
                    ))
                }
            };
            let y = model.predict(&[t, pi, ps])?;
            println!("{y}");
            Ok(())
        }
    }
}
