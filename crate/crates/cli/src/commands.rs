//! Implementations of the five subcommands.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use aoiq::analytic::{age_path, peak_age_path, tandem_age, two_class_ages, AgeError, PathLoads};
use aoiq::netmodel::{
    check_overtake_free, check_stability, parse_network, solve_traffic, OvertakeViolation,
    ParseError, StabilityViolation,
};
use aoiq::simcore::{simulate, simulate_traced, SimError};
use aoiq::{FlowSolution64, NetworkSpec64, SimConfig64, SimStats64};
use thiserror::Error;

use crate::fmtnum::sig6;
use crate::grid::SweepGrid;
use crate::{Command, Figure, SimFlags};

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {err}")]
    Parse { path: String, err: ParseError },
    #[error("unstable network: {}", join(.0))]
    Unstable(Vec<StabilityViolation>),
    #[error("overtaking possible: {}", join(.0))]
    Overtaking(Vec<OvertakeViolation>),
    #[error(transparent)]
    Age(#[from] AgeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Grid(String),
    #[error("validation failed")]
    ValidationFailed,
}

impl Error {
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Grid(_) => 2,
            _ => 1,
        }
    }
}

fn join<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Validate { spec } => cmd_validate(&spec),
        Command::Analyze { spec } => cmd_analyze(&spec),
        Command::Simulate { spec, sim, trace } => cmd_simulate(&spec, sim, trace),
        Command::Sweep {
            spec,
            grid,
            simulate,
            sim,
        } => cmd_sweep(&spec, &grid, simulate, sim),
        Command::Reproduce { figure, out } => cmd_reproduce(figure, &out),
    }
}

fn load_network(path: &Path) -> Result<NetworkSpec64, Error> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: shown.clone(),
        source,
    })?;
    parse_network(&text).map_err(|err| Error::Parse { path: shown, err })
}

/// Fails unless the network is stable and overtake-free, the regime the
/// closed forms and the simulator both require.
fn require_valid(net: &NetworkSpec64, flow: &FlowSolution64) -> Result<(), Error> {
    let unstable = check_stability(flow, net);
    if !unstable.is_empty() {
        return Err(Error::Unstable(unstable));
    }
    let overtakes = check_overtake_free(net);
    if !overtakes.is_empty() {
        return Err(Error::Overtaking(overtakes));
    }
    Ok(())
}

fn itinerary_text(net: &NetworkSpec64, class: &str) -> String {
    let ids: Vec<String> = net
        .class(class)
        .expect("class comes from the network")
        .itinerary()
        .iter()
        .map(|id| id.to_string())
        .collect();
    ids.join(",")
}

fn cmd_validate(spec: &Path) -> Result<(), Error> {
    let net = load_network(spec)?;
    let flow = solve_traffic(&net);
    let mut out = io::stdout().lock();
    let render = |out: &mut dyn Write| -> io::Result<()> {
        writeln!(out, "nodes: {}", net.nodes().len())?;
        writeln!(out, "classes: {}", net.classes().len())?;
        for node in net.nodes() {
            writeln!(
                out,
                "node {}: mu={} lambda={} rho={}",
                node.id(),
                sig6(node.mu()),
                sig6(flow.node_rate(node.id())),
                sig6(flow.node_load(node.id())),
            )?;
        }
        for class in net.classes() {
            writeln!(
                out,
                "class {}: lambda={} path={}",
                class.name(),
                sig6(class.lambda()),
                itinerary_text(&net, class.name()),
            )?;
        }
        let unstable = check_stability(&flow, &net);
        match unstable.as_slice() {
            [] => writeln!(out, "stability: ok")?,
            list => writeln!(out, "stability: violated: {}", join(list))?,
        }
        let overtakes = check_overtake_free(&net);
        match overtakes.as_slice() {
            [] => writeln!(out, "overtake-free: ok")?,
            list => writeln!(out, "overtake-free: violated: {}", join(list))?,
        }
        Ok(())
    };
    render(&mut out).map_err(|source| Error::Io {
        path: "stdout".into(),
        source,
    })?;
    require_valid(&net, &flow).map_err(|_| Error::ValidationFailed)
}

fn cmd_analyze(spec: &Path) -> Result<(), Error> {
    let net = load_network(spec)?;
    let flow = solve_traffic(&net);
    require_valid(&net, &flow)?;
    let max_hops = net
        .classes()
        .iter()
        .map(|c| c.itinerary().len())
        .max()
        .expect("a valid network has classes");

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    let mut header = vec![
        "class".to_string(),
        "lambda".into(),
        "h_left".into(),
        "h".into(),
        "h_right".into(),
        "peak".into(),
    ];
    for k in 1..=max_hops {
        header.push(format!("hop{k}_node"));
        header.push(format!("hop{k}_wait"));
        header.push(format!("hop{k}_service"));
    }
    w.write_record(&header)?;

    for class in net.classes() {
        let loads = PathLoads::for_class(&net, &flow, class.name())?;
        let report = age_path(&loads)?;
        let mut row = vec![
            class.name().to_string(),
            sig6(class.lambda()),
            sig6(report.h_left),
            sig6(report.h),
            sig6(report.h_right),
            sig6(peak_age_path(&loads)),
        ];
        for term in &report.per_node_terms {
            row.push(term.node.to_string());
            row.push(sig6(term.waiting));
            row.push(sig6(term.service));
        }
        row.resize(6 + 3 * max_hops, String::new());
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "stdout".into(),
        source,
    })?;
    Ok(())
}

fn sim_config(flags: SimFlags) -> SimConfig64 {
    SimConfig64 {
        horizon: flags.horizon,
        warmup_fraction: flags.warmup_frac,
        replications: flags.replications,
        master_seed: flags.seed,
        wa_probe: None,
    }
}

fn cmd_simulate(spec: &Path, flags: SimFlags, trace: bool) -> Result<(), Error> {
    let net = load_network(spec)?;
    let cfg = sim_config(flags);
    let stats: SimStats64 = if trace {
        let mut err = io::stderr().lock();
        simulate_traced(&net, &cfg, |class, gen, exit| {
            let _ = writeln!(err, "{class},{},{}", sig6(gen), sig6(exit));
        })?
    } else {
        simulate(&net, &cfg)?
    };
    let flow = solve_traffic(&net);

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record([
        "class",
        "lambda",
        "h_analytic",
        "h_hat",
        "h_hat_ci95",
        "h_left_hat",
        "h_left_ci95",
        "h_right_hat",
        "h_right_ci95",
        "d_mean",
        "d_m2",
        "sojourn_mean",
        "departures",
    ])?;
    for cs in &stats.classes {
        let loads = PathLoads::for_class(&net, &flow, &cs.class)?;
        let report = age_path(&loads)?;
        w.write_record([
            cs.class.clone(),
            sig6(
                net.class(&cs.class)
                    .expect("simulated class exists")
                    .lambda(),
            ),
            sig6(report.h),
            sig6(cs.h.mean),
            sig6(cs.h.ci_half),
            sig6(cs.h_left.mean),
            sig6(cs.h_left.ci_half),
            sig6(cs.h_right.mean),
            sig6(cs.h_right.ci_half),
            sig6(cs.d_mean),
            sig6(cs.d_m2),
            sig6(cs.sojourn_mean),
            cs.departures.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "stdout".into(),
        source,
    })?;
    Ok(())
}

fn cmd_sweep(spec: &Path, grid_text: &str, with_sim: bool, flags: SimFlags) -> Result<(), Error> {
    let grid = SweepGrid::parse(grid_text).map_err(Error::Grid)?;
    let template = load_network(spec)?;
    grid.check_target(&template).map_err(Error::Grid)?;
    // Rates never change the topology, so overtake-freedom holds at every
    // grid point iff it holds for the template.
    let overtakes = check_overtake_free(&template);
    if !overtakes.is_empty() {
        return Err(Error::Overtaking(overtakes));
    }

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    let mut header = vec![
        "param", "value", "class", "status", "h_left", "h", "h_right", "peak",
    ];
    if with_sim {
        header.push("h_hat");
        header.push("h_hat_ci95");
    }
    w.write_record(&header)?;

    let columns = header.len();
    let unstable_rows = |w: &mut csv::Writer<_>, value: f64| -> Result<(), Error> {
        for class in template.classes() {
            let mut row = vec![
                grid.label.clone(),
                sig6(value),
                class.name().to_string(),
                "unstable".to_string(),
            ];
            row.resize(columns, String::new());
            w.write_record(&row)?;
        }
        Ok(())
    };

    for value in grid.points() {
        let Ok(net) = grid.instantiate(&template, value) else {
            unstable_rows(&mut w, value)?;
            continue;
        };
        let flow = solve_traffic(&net);
        if !check_stability(&flow, &net).is_empty() {
            unstable_rows(&mut w, value)?;
            continue;
        }
        // Per-class closed forms; a load inside the saturation guard band is
        // reported as unstable rather than aborting the sweep.
        let mut reports = Vec::with_capacity(net.classes().len());
        for class in net.classes() {
            let report = PathLoads::for_class(&net, &flow, class.name())
                .and_then(|loads| age_path(&loads).map(|r| (r, peak_age_path(&loads))));
            reports.push(report);
        }
        if reports
            .iter()
            .any(|r| matches!(r, Err(AgeError::Saturated { .. })))
        {
            unstable_rows(&mut w, value)?;
            continue;
        }
        let stats = if with_sim {
            Some(simulate(&net, &sim_config(flags))?)
        } else {
            None
        };
        for (class, report) in net.classes().iter().zip(reports) {
            let (report, peak) = report?;
            let mut row = vec![
                grid.label.clone(),
                sig6(value),
                class.name().to_string(),
                "ok".to_string(),
                sig6(report.h_left),
                sig6(report.h),
                sig6(report.h_right),
                sig6(peak),
            ];
            if let Some(stats) = &stats {
                let cs = stats
                    .classes
                    .iter()
                    .find(|cs| cs.class == class.name())
                    .expect("simulated classes mirror the network");
                row.push(sig6(cs.h.mean));
                row.push(sig6(cs.h.ci_half));
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: "stdout".into(),
        source,
    })?;
    Ok(())
}

/// The 0.01-spaced open-interval rate grid used by the reference datasets.
fn hundredths() -> Vec<f64> {
    (1..=99).map(|k| f64::from(k) / 100.0).collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    let path: PathBuf = dir.join(name);
    let file = File::create(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

fn cmd_reproduce(figure: Figure, out: &Path) -> Result<(), Error> {
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.display().to_string(),
        source,
    })?;
    match figure {
        Figure::Fig3 => reproduce_fig3(out),
        Figure::Fig5a => reproduce_fig5(out, false),
        Figure::Fig5b => reproduce_fig5(out, true),
    }
}

/// Tandem-path age over the rate grid for path lengths 1, 2, 5 and 10, plus
/// a summary with each curve's grid minimum and the heavy-load gap between
/// the longest and shortest path.
fn reproduce_fig3(out: &Path) -> Result<(), Error> {
    let lengths = [1u32, 2, 5, 10];
    let mut w = csv::Writer::from_writer(create(out, "fig3.csv")?);
    w.write_record(["lambda", "n", "H"])?;
    let mut minima = Vec::new();
    for &n in &lengths {
        let mut best = (f64::INFINITY, 0.0);
        for lambda in hundredths() {
            let h = tandem_age(n, lambda, 1.0)?;
            if h < best.0 {
                best = (h, lambda);
            }
            w.write_record([sig6(lambda), n.to_string(), sig6(h)])?;
        }
        minima.push((n, best));
    }
    w.flush().map_err(|source| Error::Io {
        path: "fig3.csv".into(),
        source,
    })?;

    let mut s = create(out, "fig3_summary.txt")?;
    let gap = tandem_age(10, 0.99, 1.0)? - tandem_age(1, 0.99, 1.0)?;
    let render = |s: &mut dyn Write| -> io::Result<()> {
        for (n, (h, rho)) in &minima {
            writeln!(s, "argmin_rho_n{n}={}", sig6(*rho))?;
            writeln!(s, "min_H_n{n}={}", sig6(*h))?;
        }
        writeln!(s, "gap_n10_vs_n1_at_rho_0.99={}", sig6(gap))
    };
    render(&mut s).map_err(|source| Error::Io {
        path: "fig3_summary.txt".into(),
        source,
    })
}

/// Two-class merge ages over the joint rate grid. Grid points that overload
/// the shared node are emitted with an `unstable` marker. The one-class
/// summary labels its rate-b minimizer `boundary`: the age rises with the
/// cross rate, so the true infimum sits at rate zero, outside the domain,
/// and the grid attains its minimum at the smallest rate-b point.
fn reproduce_fig5(out: &Path, both: bool) -> Result<(), Error> {
    let (csv_name, summary_name) = if both {
        ("fig5b.csv", "fig5b_summary.txt")
    } else {
        ("fig5a.csv", "fig5a_summary.txt")
    };
    let mut w = csv::Writer::from_writer(create(out, csv_name)?);
    if both {
        w.write_record(["lambda_a", "lambda_b", "H_alpha", "H_beta"])?;
    } else {
        w.write_record(["lambda_a", "lambda_b", "H_alpha"])?;
    }

    let mut min_alpha = (f64::INFINITY, 0.0, 0.0);
    let mut min_sum = (f64::INFINITY, 0.0, 0.0);
    for lambda_a in hundredths() {
        for lambda_b in hundredths() {
            match two_class_ages(lambda_a, lambda_b, 1.0, 1.0, 1.0) {
                Ok((h_a, h_b)) => {
                    if h_a < min_alpha.0 {
                        min_alpha = (h_a, lambda_a, lambda_b);
                    }
                    if h_a + h_b < min_sum.0 {
                        min_sum = (h_a + h_b, lambda_a, lambda_b);
                    }
                    if both {
                        w.write_record([sig6(lambda_a), sig6(lambda_b), sig6(h_a), sig6(h_b)])?;
                    } else {
                        w.write_record([sig6(lambda_a), sig6(lambda_b), sig6(h_a)])?;
                    }
                }
                Err(AgeError::Saturated { .. }) => {
                    let mut row = vec![sig6(lambda_a), sig6(lambda_b), "unstable".to_string()];
                    if both {
                        row.push("unstable".to_string());
                    }
                    w.write_record(&row)?;
                }
                Err(err) => return Err(err.into()),
            }
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: csv_name.into(),
        source,
    })?;

    let mut s = create(out, summary_name)?;
    let render = |s: &mut dyn Write| -> io::Result<()> {
        if both {
            writeln!(s, "min_H_sum={}", sig6(min_sum.0))?;
            writeln!(s, "argmin_lambda_a={}", sig6(min_sum.1))?;
            writeln!(s, "argmin_lambda_b={}", sig6(min_sum.2))
        } else {
            writeln!(s, "min_H_alpha={}", sig6(min_alpha.0))?;
            writeln!(s, "argmin_lambda_a={}", sig6(min_alpha.1))?;
            writeln!(s, "argmin_lambda_b=boundary")?;
            writeln!(s, "boundary_lambda_b={}", sig6(min_alpha.2))
        }
    };
    render(&mut s).map_err(|source| Error::Io {
        path: summary_name.into(),
        source,
    })
}
