mod output;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwpotts::chain::{
    exact_mean_hitting_time, monte_carlo_hitting_times, sample_hitting_times, simulate, CountVector, HittingEstimate,
    MagnetizationChain, StopRule, DEFAULT_STATE_CAP,
};
use cwpotts::critical::{enumerate_critical_points, verify_appendix, PointFamily, TemperatureProfile};
use cwpotts::ek::{ek_constants, ek_prediction, ek_sweep, reduced_chain, Transition};
use cwpotts::export::{Table, Value};
use cwpotts::landscape::{default_resolution, depths, free_energy_curve, grid_free_energy, wells};
use cwpotts::{Error, SimplexPoint};

use output::{Format, Output};

const MAX_Q: usize = 10_000;
const KINK_TOL: f64 = 1e-4;
const GAP_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "cwpotts", version, about = "Energy landscape and metastable Glauber dynamics of the Curie-Weiss-Potts model")]
struct Cli {
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Write one file per table into this directory instead of standard output.
    #[arg(long, env = "CWPOTTS_OUTPUT_DIR", global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical temperatures, or the classified critical points at one β.
    Critical(CriticalArgs),
    /// Wells, gates and depths on a simplex grid (q <= 5).
    Landscape(LandscapeArgs),
    /// Exact and Monte Carlo mean hitting times of the magnetization chain.
    Simulate(SimulateArgs),
    /// Eyring-Kramers constants, limiting chains and transition times.
    Ek(EkArgs),
    /// Mean-field free energy along a β grid.
    FreeEnergy(FreeEnergyArgs),
    /// Numerical verification of the critical temperature ordering.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long, value_parser = q_parser())]
    q: usize,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long, value_parser = q_parser())]
    q: usize,
    #[arg(long)]
    beta: f64,
    /// Grid resolution; defaults to 200, 120, 60 for q = 3, 4, 5.
    #[arg(long)]
    m: Option<usize>,
    /// Also emit every node of a labelled well.
    #[arg(long)]
    nodes: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransitionArg {
    #[value(name = "u1-p")]
    OrderedToBarycenter,
    #[value(name = "p-U1")]
    BarycenterToOrdered,
    #[value(name = "u1-U1")]
    OrderedToOrdered,
}

impl From<TransitionArg> for Transition {
    fn from(t: TransitionArg) -> Self {
        match t {
            TransitionArg::OrderedToBarycenter => Transition::OrderedToBarycenter,
            TransitionArg::BarycenterToOrdered => Transition::BarycenterToOrdered,
            TransitionArg::OrderedToOrdered => Transition::OrderedToOrdered,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = q_parser())]
    q: usize,
    #[arg(long = "N", alias = "n", value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    #[arg(long)]
    beta: f64,
    /// Start and target at the rounded critical points.
    #[arg(long, value_enum, conflicts_with_all = ["start", "target"], required_unless_present_all = ["start", "target"])]
    transition: Option<TransitionArg>,
    /// Start counts, e.g. "12,0,0".
    #[arg(long, requires = "target")]
    start: Option<String>,
    /// Target counts separated by ';', e.g. "0,12,0;0,0,12".
    #[arg(long, requires = "start")]
    target: Option<String>,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest state space for which the chain is built.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: u128,
    /// Also emit one trajectory of this many jumps from the start.
    #[arg(long)]
    trajectory: Option<usize>,
}

#[derive(Args)]
struct EkArgs {
    #[arg(long, value_parser = q_parser())]
    q: usize,
    #[arg(long, conflicts_with = "beta_grid", required_unless_present = "beta_grid")]
    beta: Option<f64>,
    /// Sweep "lo:hi:count", endpoints included.
    #[arg(long, value_parser = parse_grid)]
    beta_grid: Option<Grid>,
    /// System sizes for transition time predictions.
    #[arg(long = "N", alias = "n", value_delimiter = ',', requires = "beta")]
    n: Vec<usize>,
}

#[derive(Args)]
struct FreeEnergyArgs {
    #[arg(long, value_parser = q_parser())]
    q: usize,
    #[arg(long, value_parser = parse_grid)]
    beta_grid: Grid,
    /// Also report the grid minimum of F at this resolution.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 5)]
    q_lo: usize,
    #[arg(long, default_value_t = 6500)]
    q_hi: usize,
}

#[derive(Debug, Clone)]
struct Grid {
    spec: String,
    values: Vec<f64>,
}

fn q_parser() -> clap::builder::RangedU64ValueParser<usize> {
    clap::builder::RangedU64ValueParser::new().range(3..=MAX_Q as u64)
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err("expected lo:hi:count".into());
    };
    let lo: f64 = lo.trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("hi: {e}"))?;
    let count: usize = count.trim().parse().map_err(|e| format!("count: {e}"))?;
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi < lo || count == 0 {
        return Err("need 0 < lo <= hi and count >= 1".into());
    }
    let values = if count == 1 {
        vec![lo]
    } else {
        (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
    };
    Ok(Grid { spec: s.to_string(), values })
}

fn parse_counts(s: &str) -> Result<Vec<u32>, String> {
    s.split(',').map(|c| c.trim().parse::<u32>().map_err(|e| format!("bad count {c:?}: {e}"))).collect()
}

enum Failure {
    Usage(String),
    Library(Error),
    Verification(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Run = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (dir, format) = (cli.out_dir, cli.format);
    let result = match cli.command {
        Command::Critical(a) => critical(a, dir, format),
        Command::Landscape(a) => landscape(a, dir, format),
        Command::Simulate(a) => simulate_cmd(a, dir, format),
        Command::Ek(a) => ek(a, dir, format),
        Command::FreeEnergy(a) => free_energy(a, dir, format),
        Command::Verify(a) => verify(a, dir, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Library(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Structural(_) => ExitCode::from(4),
                _ => ExitCode::from(3),
            }
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(4)
        }
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(1)
        }
    }
}

fn check_beta(beta: f64) -> Run {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--beta must be positive and finite, got {beta}")))
    }
}

fn regime_note(out: &mut Output, q: usize, beta: f64) -> Run {
    let prof = TemperatureProfile::new(q)?;
    out.note(format!("regime: {}", prof.regime(beta).label()));
    Ok(())
}

fn exact_row(name: &str, value: f64, lo: f64, hi: f64, certified: bool) -> Vec<Value> {
    vec![name.into(), value.into(), lo.into(), hi.into(), certified.into()]
}

fn critical(a: CriticalArgs, dir: Option<PathBuf>, format: Format) -> Run {
    let mut cfg = vec![("q", a.q.to_string())];
    if let Some(b) = a.beta {
        check_beta(b)?;
        cfg.push(("beta", b.to_string()));
    }
    let mut out = Output::new(dir, format, "critical", &cfg)?;
    let prof = TemperatureProfile::new(a.q)?;
    match a.beta {
        None => {
            let mut t = Table::new(&["name", "value", "lo", "hi", "certified"]);
            for s in &prof.spinodal {
                let b = s.beta;
                t.push(exact_row(&format!("beta_s{}", s.i), b.value, b.lo, b.hi, b.certified));
            }
            let b1 = prof.spinodal[0].beta;
            t.push(exact_row("beta1", b1.value, b1.lo, b1.hi, b1.certified));
            t.push(exact_row("beta2", prof.beta_c, prof.beta_c, prof.beta_c, true));
            let bm = prof.beta_m;
            t.push(exact_row("beta3", bm.value, bm.lo, bm.hi, bm.certified));
            let q = prof.beta4();
            t.push(exact_row("beta4", q, q, q, true));
            out.emit("temperatures", t)?;
        }
        Some(beta) => {
            regime_note(&mut out, a.q, beta)?;
            let mut cols: Vec<String> =
                ["family", "orbit_size", "index", "classification", "free_energy", "t", "r"].map(String::from).into();
            cols.extend((1..=a.q).map(|k| format!("x{k}")));
            cols.push("eigenvalues".into());
            let names: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut t = Table::new(&names);
            for p in enumerate_critical_points(a.q, beta)? {
                let mut row: Vec<Value> = vec![
                    p.family.to_string().into(),
                    p.orbit_size.into(),
                    p.index().into(),
                    p.classification.to_string().into(),
                    p.free_energy.into(),
                    p.coords.t.into(),
                    p.coords.r.into(),
                ];
                row.extend(p.location.coords().iter().map(|&x| Value::Float(x)));
                let eig: Vec<String> =
                    p.spectrum.groups.iter().map(|(v, m)| format!("{}x{m}", cwpotts::export::format_float(*v))).collect();
                row.push(eig.join(" ").into());
                t.push(row);
            }
            out.emit("critical_points", t)?;
        }
    }
    Ok(())
}

fn landscape(a: LandscapeArgs, dir: Option<PathBuf>, format: Format) -> Run {
    check_beta(a.beta)?;
    if a.q > cwpotts::landscape::MAX_GRID_Q {
        return Err(Failure::Usage(format!(
            "landscape grids are only supported for q <= {}; use `critical` for the classification at q = {}",
            cwpotts::landscape::MAX_GRID_Q,
            a.q
        )));
    }
    let m = match a.m {
        Some(m) => m,
        None => default_resolution(a.q)?,
    };
    let cfg = [("q", a.q.to_string()), ("beta", a.beta.to_string()), ("M", m.to_string()), ("nodes", a.nodes.to_string())];
    let mut out = Output::new(dir, format, "landscape", &cfg)?;
    regime_note(&mut out, a.q, a.beta)?;
    let dec = wells(a.q, a.beta, m)?;
    let d = match depths(a.q, a.beta) {
        Ok(d) => Some(d),
        Err(Error::Regime(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let prof = TemperatureProfile::new(a.q)?;
    let finite = |x: f64| x.is_finite().then_some(x);
    let mut t = Table::new(&[
        "q", "beta", "M", "regime", "H_beta", "level_o", "theta_1", "theta_o", "wells", "unlabeled", "gate_pairs",
    ]);
    t.push(vec![
        a.q.into(),
        a.beta.into(),
        m.into(),
        prof.regime(a.beta).label().into(),
        Value::opt(finite(dec.level)),
        Value::opt(dec.level_o),
        Value::opt(d.map(|d| d.theta_1)),
        Value::opt(d.and_then(|d| d.theta_o)),
        dec.components.len().into(),
        dec.unlabeled.into(),
        dec.gates.len().into(),
    ]);
    out.emit("scalars", t)?;
    out.emit("wells", dec.summary_table())?;
    out.emit("gates", dec.gate_table())?;
    if a.nodes {
        out.emit("nodes", dec.node_table())?;
    }
    Ok(())
}

fn rounded(p: &[f64], n: usize) -> Result<CountVector, Failure> {
    Ok(CountVector::nearest(&SimplexPoint::new(p.to_vec())?, n)?)
}

/// Start and targets at the rounded `u_1` orbit and barycentre.
fn transition_states(q: usize, n: usize, beta: f64, t: Transition) -> Result<(CountVector, Vec<CountVector>), Failure> {
    let points = enumerate_critical_points(q, beta)?;
    let Some(u1) = points.iter().find(|p| p.family == PointFamily::U(1)) else {
        return Err(Error::Regime(format!("u1 does not exist at q = {q}, β = {beta}")).into());
    };
    let orbit = u1.orbit();
    let p = rounded(&vec![1.0 / q as f64; q], n)?;
    let start_u = rounded(u1.location.coords(), n)?;
    let all_u = orbit.iter().map(|x| rounded(x, n)).collect::<Result<Vec<_>, _>>()?;
    Ok(match t {
        Transition::OrderedToBarycenter => (start_u, vec![p]),
        Transition::BarycenterToOrdered => (p, all_u),
        Transition::OrderedToOrdered => {
            let others = all_u.into_iter().filter(|c| c != &start_u).collect();
            (start_u, others)
        }
    })
}

fn show(c: &CountVector) -> String {
    c.counts().iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn simulate_cmd(a: SimulateArgs, dir: Option<PathBuf>, format: Format) -> Run {
    check_beta(a.beta)?;
    let n = a.n as usize;
    let transition = a.transition.map(Transition::from);
    let (start, target) = match (transition, &a.start, &a.target) {
        (Some(t), _, _) => transition_states(a.q, n, a.beta, t)?,
        (None, Some(s), Some(tg)) => {
            let check = |c: Vec<u32>| -> Result<CountVector, Failure> {
                if c.len() != a.q || c.iter().map(|&k| k as usize).sum::<usize>() != n {
                    return Err(Failure::Usage(format!("count vectors need {} entries summing to N = {n}", a.q)));
                }
                CountVector::new(c).map_err(Failure::from)
            };
            let start = check(parse_counts(s).map_err(Failure::Usage)?)?;
            let target = tg
                .split(';')
                .map(|t| check(parse_counts(t).map_err(Failure::Usage)?))
                .collect::<Result<Vec<_>, _>>()?;
            (start, target)
        }
        _ => return Err(Failure::Usage("give --transition or both --start and --target".into())),
    };
    if target.is_empty() {
        return Err(Failure::Usage("the target set is empty at this N".into()));
    }
    let target_text = target.iter().map(show).collect::<Vec<_>>().join(";");
    let mut cfg = vec![("q", a.q.to_string()), ("N", n.to_string()), ("beta", a.beta.to_string())];
    if let Some(t) = transition {
        cfg.push(("transition", t.to_string()));
    }
    cfg.extend([
        ("start", show(&start)),
        ("target", target_text.clone()),
        ("runs", a.runs.to_string()),
        ("seed", a.seed.to_string()),
        ("state_cap", a.state_cap.to_string()),
    ]);
    if let Some(j) = a.trajectory {
        cfg.push(("trajectory", j.to_string()));
    }
    let mut out = Output::new(dir, format, "simulate", &cfg)?;
    regime_note(&mut out, a.q, a.beta)?;

    let chain = match MagnetizationChain::with_cap(a.q, n, a.beta, a.state_cap) {
        Ok(c) => Some(c),
        Err(Error::Size { needed, cap, .. }) => {
            let msg = format!("state space of {needed} exceeds the cap {cap}; exact value skipped, Monte Carlo only");
            eprintln!("notice: {msg}");
            out.note(format!("notice: {msg}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let exact = match &chain {
        Some(ch) => Some(exact_mean_hitting_time(ch, &start, &target)?),
        None => None,
    };
    let mc: Option<HittingEstimate> = match (&chain, a.runs) {
        (_, 0) => None,
        (Some(ch), runs) => Some(monte_carlo_hitting_times(ch, &start, &ch.mask(&target)?, runs, a.seed)?),
        (None, runs) => Some(sample_hitting_times(a.beta, &start, &target, runs, a.seed)?),
    };
    let prediction = match transition {
        Some(t) => match ek_prediction(a.q, a.beta, n, t) {
            Ok(p) => Some(p),
            Err(Error::Regime(m)) => {
                out.note(format!("no prediction: {m}"));
                None
            }
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    if prediction.is_some() {
        out.note("time scale: 2πN·exp(N·θ)");
    }

    let mut cols = vec!["seed", "q", "N", "beta", "start", "target", "exact"];
    if mc.is_some() {
        cols.extend(["runs", "mc_mean", "mc_std_error", "z_score"]);
    }
    cols.extend(["ek_prefactor", "ek_theta", "ek_prediction", "exact_over_ek"]);
    let mut t = Table::new(&cols);
    let mut row: Vec<Value> = vec![
        Value::Int(a.seed as i64),
        a.q.into(),
        n.into(),
        a.beta.into(),
        show(&start).into(),
        target_text.clone().into(),
        Value::opt(exact),
    ];
    if let Some(m) = &mc {
        let z = exact.filter(|_| m.std_error > 0.0).map(|e| (m.mean - e) / m.std_error);
        row.extend([m.runs.into(), m.mean.into(), m.std_error.into(), Value::opt(z)]);
    }
    row.extend([
        Value::opt(prediction.map(|p| p.prefactor)),
        Value::opt(prediction.map(|p| p.theta)),
        Value::opt(prediction.map(|p| p.time)),
        Value::opt(exact.zip(prediction).map(|(e, p)| e / p.time)),
    ]);
    t.push(row);
    out.emit("hitting", t)?;

    if let Some(m) = &mc {
        let mut s = Table::new(&["seed", "q", "N", "beta", "start", "target", "run", "hitting_time"]);
        for (k, &h) in m.samples.iter().enumerate() {
            s.push(vec![
                Value::Int(a.seed as i64),
                a.q.into(),
                n.into(),
                a.beta.into(),
                show(&start).into(),
                target_text.clone().into(),
                k.into(),
                h.into(),
            ]);
        }
        out.emit("samples", s)?;
    }

    if let Some(jumps) = a.trajectory {
        match &chain {
            Some(ch) => {
                let traj = simulate(ch, &start, &StopRule::Jumps(jumps), a.seed)?;
                let mut cols = vec!["jump".to_string(), "t".to_string()];
                cols.extend((1..=a.q).map(|k| format!("n{k}")));
                let names: Vec<&str> = cols.iter().map(String::as_str).collect();
                let mut tt = Table::new(&names);
                for k in 0..traj.states.len() {
                    let mut row: Vec<Value> = vec![k.into(), traj.times[k].into()];
                    row.extend(traj.count_vector(k).counts().iter().map(|&c| c as usize).map(Value::from));
                    tt.push(row);
                }
                tt.comment(format!("end_time = {}", cwpotts::export::format_float(traj.end_time)));
                out.emit("trajectory", tt)?;
            }
            None => eprintln!("notice: trajectory skipped, the chain was not built"),
        }
    }
    Ok(())
}

fn ek(a: EkArgs, dir: Option<PathBuf>, format: Format) -> Run {
    let mut cfg = vec![("q", a.q.to_string())];
    if let Some(b) = a.beta {
        check_beta(b)?;
        cfg.push(("beta", b.to_string()));
    }
    if let Some(g) = &a.beta_grid {
        cfg.push(("beta_grid", g.spec.clone()));
    }
    if !a.n.is_empty() {
        cfg.push(("N", a.n.iter().map(usize::to_string).collect::<Vec<_>>().join(",")));
    }
    let mut out = Output::new(dir, format, "ek", &cfg)?;
    out.note("time scale: 2πN·exp(N·θ)");
    let Some(beta) = a.beta else {
        let g = a.beta_grid.expect("clap requires one of --beta and --beta-grid");
        out.emit("constants", ek_sweep(a.q, &g.values)?)?;
        return Ok(());
    };
    regime_note(&mut out, a.q, beta)?;
    let c = ek_constants(a.q, beta)?;
    out.emit("constants", ek_sweep(a.q, &[beta])?)?;
    let mut mu = Table::new(&["saddle", "mu"]);
    mu.push(vec!["u2".into(), Value::opt(c.mu_1)]);
    mu.push(vec!["v1".into(), Value::opt(c.mu_o)]);
    out.emit("mu", mu)?;

    match reduced_chain(a.q, beta) {
        Ok(ch) => {
            let mut t = ch.table();
            t.comment(format!("time scale: {}", ch.time_scale));
            out.emit("reduced", t)?;
            if let Some(slow) = &ch.second_scale {
                let mut t = slow.table();
                t.comment(format!("time scale: {}", slow.time_scale));
                out.emit("reduced_slow", t)?;
            }
        }
        Err(Error::Regime(m)) => eprintln!("notice: no limiting chain: {m}"),
        Err(e) => return Err(e.into()),
    }

    if !a.n.is_empty() {
        let mut t = Table::new(&["transition", "N", "prefactor", "theta", "time"]);
        for &n in &a.n {
            for tr in [Transition::OrderedToBarycenter, Transition::BarycenterToOrdered, Transition::OrderedToOrdered] {
                match ek_prediction(a.q, beta, n, tr) {
                    Ok(p) => t.push(vec![tr.to_string().into(), n.into(), p.prefactor.into(), p.theta.into(), p.time.into()]),
                    Err(Error::Regime(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
        out.emit("predictions", t)?;
    }
    Ok(())
}

fn free_energy(a: FreeEnergyArgs, dir: Option<PathBuf>, format: Format) -> Run {
    let mut cfg = vec![("q", a.q.to_string()), ("beta_grid", a.beta_grid.spec.clone())];
    if let Some(m) = a.m {
        cfg.push(("M", m.to_string()));
    }
    let mut out = Output::new(dir, format, "free-energy", &cfg)?;
    let curve = free_energy_curve(a.q, &a.beta_grid.values)?;
    let mut cols = vec!["beta", "psi"];
    if a.m.is_some() {
        cols.extend(["grid_min_f", "grid_minus_psi"]);
    }
    let mut t = Table::new(&cols);
    for (&b, &psi) in curve.betas.iter().zip(&curve.psi) {
        let mut row: Vec<Value> = vec![b.into(), psi.into()];
        if let Some(m) = a.m {
            let g = grid_free_energy(a.q, b, m)?;
            row.extend([g.into(), (g - psi).into()]);
        }
        t.push(row);
    }
    out.emit("psi", t)?;
    let mut k = Table::new(&["beta_c", "gap", "psi_prime_left", "psi_prime_right", "numeric_jump", "analytic_jump"]);
    k.push(vec![
        curve.beta_c.into(),
        curve.gap_at_beta_c.into(),
        curve.psi_prime_left.into(),
        curve.psi_prime_right.into(),
        curve.numeric_jump().into(),
        curve.analytic_jump.into(),
    ]);
    out.emit("kink", k)?;
    Ok(())
}

fn verify(a: VerifyArgs, dir: Option<PathBuf>, format: Format) -> Run {
    if a.q_lo < 3 || a.q_hi < a.q_lo || a.q_hi > 6500 {
        return Err(Failure::Usage(format!("need 3 <= q-lo <= q-hi <= 6500, got {}..{}", a.q_lo, a.q_hi)));
    }
    let cfg = [("q_lo", a.q_lo.to_string()), ("q_hi", a.q_hi.to_string())];
    let mut out = Output::new(dir, format, "verify", &cfg)?;
    let mut failures = Vec::new();

    if a.q_lo <= 4 {
        let mut t = Table::new(&["q", "beta1", "beta2", "beta3", "beta4", "ordered"]);
        for q in a.q_lo..=a.q_hi.min(4) {
            let p = TemperatureProfile::new(q)?;
            let ok = p.beta1() < p.beta2() && p.beta2() < p.beta3() && p.beta3() == q as f64 && p.beta4() == q as f64;
            if !ok {
                failures.push(format!("ordering at q = {q}"));
            }
            t.push(vec![q.into(), p.beta1().into(), p.beta2().into(), p.beta3().into(), p.beta4().into(), ok.into()]);
        }
        out.emit("ordering", t)?;
    }

    let mut t = Table::new(&["q", "gap", "numeric_jump", "analytic_jump", "passed"]);
    for q in a.q_lo..=a.q_hi {
        let c = free_energy_curve(q, &[q as f64])?;
        let ok =
            c.gap_at_beta_c < GAP_TOL && c.analytic_jump > 0.0 && (c.numeric_jump() - c.analytic_jump).abs() < KINK_TOL;
        if !ok {
            failures.push(format!("free energy kink at q = {q}"));
        }
        t.push(vec![q.into(), c.gap_at_beta_c.into(), c.numeric_jump().into(), c.analytic_jump.into(), ok.into()]);
    }
    out.emit("kink", t)?;

    if a.q_hi >= 5 {
        let report = verify_appendix(a.q_lo.max(5)..=a.q_hi)?;
        if let Some(f) = report.f_star {
            eprintln!("f_star(6500) lower bound: {}", cwpotts::export::format_float(f));
        }
        failures.extend(report.failures.iter().cloned());
        out.emit("appendix", report.to_table())?;
    }

    eprintln!("verify: q in [{}, {}], {} failure(s)", a.q_lo, a.q_hi, failures.len());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failures.join("; ")))
    }
}
