use std::collections::BTreeMap;
use std::path::Path;

use cladoflow_core::chain::{simulate_seeded, Clock, SimOptions, Trajectory};
use cladoflow_core::crt_stats::{
    distance_matrix_mc, duality_check, mean_distance_average, mixing_experiment, q_n_table,
    subtree_mass_histogram, Start,
};
use cladoflow_core::mass_poly::{identity_suite, mass_function, mass_generator_gap};
use cladoflow_core::rng::{replicate_rng, sub_seed, SeedRecord};
use cladoflow_core::shape_poly::generator_gap;
use cladoflow_core::tree::{
    balanced_cladogram, comb_cladogram, parse, to_newick, uniform_cladogram, validate_cladogram,
};
use cladoflow_core::{count_cladograms, enumerate_cladograms, Cladogram};
use serde_json::{json, Map, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::CliError;

pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

macro_rules! p {
    ($name:expr, $default:expr, $help:expr) => {
        ParamSpec {
            name: $name,
            default: $default,
            help: $help,
        }
    };
}

/// Accepted parameters with their defaults as JSON text.
pub fn param_specs(e: Experiment) -> &'static [ParamSpec] {
    match e {
        Experiment::Simulate => &[
            p!("N", "20", "leaves (>= 3)"),
            p!("start", "\"comb\"", "comb, balanced or uniform"),
            p!(
                "tree",
                "\"\"",
                "start tree file (Newick or JSON); overrides N and start"
            ),
            p!("horizon", "1.0", "time horizon"),
            p!(
                "clock",
                "\"jumps\"",
                "jumps: state changes only; all: record no-ops too"
            ),
            p!("snapshot_every", "1024", "events between stored snapshots"),
            p!("replicate", "0", "stream index under the seed"),
        ],
        Experiment::GeneratorGap => &[
            p!("m", "4", "sample size, 3..=6"),
            p!("N", "[8, 16, 32, 64]", "tree sizes"),
            p!("trees_per_N", "20", "uniform trees per size"),
        ],
        Experiment::MassGeneratorGap => &[
            p!(
                "f",
                "\"sym_pairs\"",
                "sym_pairs, one, coord_mean, entropy_like or c:i,j,k;..."
            ),
            p!("N", "[8, 16, 32, 64, 128]", "tree sizes (<= 1024)"),
            p!("trees_per_N", "20", "uniform trees per size"),
            p!(
                "slope_min",
                "-1.3",
                "lower end of the accepted log-log slope"
            ),
            p!(
                "slope_max",
                "-0.7",
                "upper end of the accepted log-log slope"
            ),
        ],
        Experiment::CrtMoments => &[
            p!("N", "1000", "leaves"),
            p!("m", "3", "sampled leaves spanning the subtree"),
            p!(
                "replicates",
                "20000",
                "uniform trees for the mass histogram"
            ),
            p!(
                "pair_tolerance",
                "0.002",
                "accepted |E[eta1 eta2] - target|"
            ),
            p!(
                "distance_trees",
                "200",
                "trees for the mean distance (0 skips)"
            ),
            p!(
                "distance_tolerance",
                "0.01",
                "accepted |mean distance - 2/5|"
            ),
        ],
        Experiment::QnTable => &[
            p!("N", "10", "leaves"),
            p!("m", "3", "sampled leaves, 3..=6"),
            p!(
                "shape",
                "0",
                "index into the canonical list of m-cladograms"
            ),
        ],
        Experiment::Duality => &[
            p!("N", "[50]", "tree sizes; one uniform start tree each"),
            p!("tree", "\"\"", "start tree file; overrides N"),
            p!("m", "4", "sample size, 3..=6"),
            p!(
                "shape",
                "0",
                "index into the canonical list of m-cladograms"
            ),
            p!("horizon", "1.0", "time horizon"),
            p!("replicates", "1000", "chains per side"),
        ],
        Experiment::Mixing => &[
            p!("N", "200", "leaves"),
            p!("start", "\"comb\"", "comb, balanced or file"),
            p!("tree", "\"\"", "start tree file when start = file"),
            p!("m", "4", "sample size, 3..=6"),
            p!("grid", "[0, 1, 2, 5, 10]", "ascending observation times"),
            p!("replicates", "200", "independent chains"),
        ],
        Experiment::Identities => &[
            p!("N_max", "64", "largest tree size"),
            p!("cases", "1000", "random instances per identity"),
        ],
        Experiment::DistanceMatrix => &[
            p!("N", "50", "leaves"),
            p!("start", "\"uniform\"", "comb, balanced or uniform"),
            p!("tree", "\"\"", "tree file; overrides N and start"),
            p!("m", "4", "points per sample"),
            p!("samples", "100", "sampled matrices"),
        ],
    }
}

/// Text listing every experiment with its parameters and defaults.
pub fn help_text() -> String {
    let mut out = String::from("Experiments and parameters (--param key=value):\n");
    for e in Experiment::ALL {
        out.push_str(&format!("\n  {e}\n"));
        for s in param_specs(e) {
            out.push_str(&format!(
                "    {:<20} {:<22} {}\n",
                s.name, s.default, s.help
            ));
        }
    }
    out
}

/// Given params overlaid on the defaults; unknown keys are usage errors.
pub fn resolve_params(
    e: Experiment,
    given: &BTreeMap<String, Value>,
) -> Result<BTreeMap<String, Value>, CliError> {
    let specs = param_specs(e);
    let mut out = BTreeMap::new();
    for s in specs {
        let v = serde_json::from_str(s.default).expect("default parameter values are JSON");
        out.insert(s.name.to_string(), v);
    }
    for (k, v) in given {
        if !out.contains_key(k) {
            let names: Vec<_> = specs.iter().map(|s| s.name).collect();
            return Err(CliError::Usage(format!(
                "unknown parameter {k:?} for {e}; expected one of {}",
                names.join(", ")
            )));
        }
        out.insert(k.clone(), v.clone());
    }
    Ok(out)
}

struct Params<'a>(&'a BTreeMap<String, Value>);

fn bad(key: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        key: key.to_string(),
        message: message.into(),
    }
}

fn value_usize(key: &str, v: &Value) -> Result<usize, CliError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| bad(key, format!("expected a nonnegative integer, got {v}")))
}

fn value_f64(key: &str, v: &Value) -> Result<f64, CliError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(key, format!("expected a number, got {v}")))
}

impl Params<'_> {
    fn get(&self, key: &str) -> &Value {
        &self.0[key]
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        value_usize(key, self.get(key))
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        value_f64(key, self.get(key))
    }

    fn string(&self, key: &str) -> Result<String, CliError> {
        match self.get(key) {
            Value::String(s) => Ok(s.clone()),
            v => Err(bad(key, format!("expected a string, got {v}"))),
        }
    }

    fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        match self.get(key) {
            Value::Array(xs) if !xs.is_empty() => xs.iter().map(|x| value_usize(key, x)).collect(),
            Value::Array(_) => Err(bad(key, "empty list")),
            v => Ok(vec![value_usize(key, v)?]),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        match self.get(key) {
            Value::Array(xs) if !xs.is_empty() => xs.iter().map(|x| value_f64(key, x)).collect(),
            Value::Array(_) => Err(bad(key, "empty list")),
            v => Ok(vec![value_f64(key, v)?]),
        }
    }
}

fn require(ok: bool, key: &str, message: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(bad(key, message))
    }
}

fn leaves(key: &str, n: usize) -> Result<(), CliError> {
    require(n >= 3, key, format!("N = {n}, need N >= 3"))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Assertion {
    Assertion {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// Everything an experiment produces before it is written out.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub metrics: Map<String, Value>,
    pub assertions: Vec<Assertion>,
    /// Additional files as (extension, contents).
    pub extra: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn new(header: &[&str]) -> Outcome {
        Outcome {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Outcome::default()
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    fn metric(&mut self, key: &str, v: impl Into<Value>) {
        self.metrics.insert(key.to_string(), v.into());
    }
}

macro_rules! cells {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

fn read_tree(path: &str) -> Result<Cladogram, CliError> {
    let text = std::fs::read_to_string(Path::new(path))?;
    Ok(parse(&text)?)
}

fn start_tree(p: &Params, seed: u64) -> Result<Cladogram, CliError> {
    let file = p.string("tree")?;
    if !file.is_empty() {
        let t = read_tree(&file)?;
        leaves("tree", t.n())?;
        return Ok(t);
    }
    let n = p.usize("N")?;
    leaves("N", n)?;
    Ok(match p.string("start")?.as_str() {
        "comb" => comb_cladogram(n)?,
        "balanced" => balanced_cladogram(n)?,
        "uniform" => uniform_cladogram(n, &mut replicate_rng(sub_seed(seed, 0x7374), 0))?,
        s => {
            return Err(bad(
                "start",
                format!("{s:?}; expected comb, balanced or uniform"),
            ))
        }
    })
}

fn sample_size(p: &Params) -> Result<usize, CliError> {
    let m = p.usize("m")?;
    require(
        (3..=6).contains(&m),
        "m",
        format!("m = {m}, need 3 <= m <= 6"),
    )?;
    Ok(m)
}

/// Run one experiment with resolved parameters.
pub fn execute(
    config: &ExperimentConfig,
    params: &BTreeMap<String, Value>,
) -> Result<Outcome, CliError> {
    let p = Params(params);
    let seed = config.seed;
    match config.experiment {
        Experiment::Simulate => simulate(&p, seed),
        Experiment::GeneratorGap => gen_gap(&p, seed),
        Experiment::MassGeneratorGap => mass_gap(&p, seed),
        Experiment::CrtMoments => crt_moments(&p, seed),
        Experiment::QnTable => qn(&p),
        Experiment::Duality => duality(&p, seed),
        Experiment::Mixing => mixing(&p, seed),
        Experiment::Identities => identities(&p, seed),
        Experiment::DistanceMatrix => distances(&p, seed),
    }
}

fn simulate(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let t0 = start_tree(p, seed)?;
    let horizon = p.f64("horizon")?;
    require(horizon >= 0.0, "horizon", "must be nonnegative")?;
    let clock = match p.string("clock")?.as_str() {
        "jumps" => Clock::JumpsOnly,
        "all" => Clock::AllPairs,
        s => return Err(bad("clock", format!("{s:?}; expected jumps or all"))),
    };
    let snapshot_every = p.usize("snapshot_every")?;
    require(snapshot_every > 0, "snapshot_every", "must be positive")?;
    let record = SeedRecord {
        master: seed,
        replicate: p.usize("replicate")? as u64,
    };
    let opts = SimOptions {
        clock,
        snapshot_every,
    };
    let tr = simulate_seeded(&t0, horizon, record, opts)?;
    let mut out = Outcome::new(&["event", "t", "leaf", "edge_a", "edge_b", "noop"]);
    for (i, ev) in tr.events.iter().enumerate() {
        out.row(cells![
            i + 1,
            ev.t,
            ev.mv.leaf,
            ev.mv.edge.0,
            ev.mv.edge.1,
            ev.noop
        ]);
    }
    let n = t0.n();
    let rate = match clock {
        Clock::JumpsOnly => n * (2 * n - 6),
        Clock::AllPairs => n * (2 * n - 3),
    } as f64;
    let last = tr.final_state();
    out.metric("N", n);
    out.metric("events", tr.events.len());
    out.metric("jumps", tr.jumps());
    out.metric("expected_events", rate * horizon);
    out.metric("initial_newick", to_newick(&t0));
    out.metric("final_newick", to_newick(&last));

    let edges: Vec<_> = last.edges().collect();
    out.assertions.push(check(
        "final_state_valid",
        validate_cladogram(n, &edges).is_ok(),
        format!("{} leaves, {} edges", n, edges.len()),
    ));
    out.assertions.push(check(
        "event_times_increasing",
        tr.events.windows(2).all(|w| w[0].t < w[1].t)
            && tr.events.last().map_or(true, |e| e.t <= horizon),
        format!("{} events on [0, {horizon}]", tr.events.len()),
    ));
    let mut buf = vec![];
    tr.write_jsonl(&mut buf)?;
    let back = Trajectory::read_jsonl(&buf[..])?;
    out.assertions.push(check(
        "trajectory_round_trip",
        back.final_state() == last && back.events == tr.events,
        "JSON lines re-read",
    ));
    out.extra.push(("trajectory.jsonl".into(), buf));
    Ok(out)
}

fn gen_gap(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let m = sample_size(p)?;
    let ns = p.usize_list("N")?;
    for &n in &ns {
        leaves("N", n)?;
        require(n >= m, "N", format!("N = {n} < m = {m}"))?;
    }
    let trees = p.usize("trees_per_N")?;
    require(trees > 0, "trees_per_N", "must be positive")?;
    let shapes = enumerate_cladograms(m)?;
    let rows = generator_gap(&ns, m, &shapes, trees, seed)?;
    let mut out = Outcome::new(&["N", "m", "shape", "gap", "mean_gap", "bound", "pass"]);
    for r in &rows {
        out.row(cells![
            r.n,
            r.m,
            r.shape_key,
            r.gap,
            r.mean_gap,
            r.bound,
            r.pass
        ]);
    }
    let violations = rows.iter().filter(|r| !r.pass).count();
    out.metric("violations", violations);
    out.metric(
        "max_gap_times_N",
        rows.iter().map(|r| r.gap * r.n as f64).fold(0.0, f64::max),
    );
    out.assertions.push(check(
        "gap_within_7m(m-1)/N",
        violations == 0,
        format!("{violations} of {} rows above the bound", rows.len()),
    ));
    Ok(out)
}

fn mass_gap(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let f = mass_function(&p.string("f")?).map_err(|e| bad("f", e.to_string()))?;
    let ns = p.usize_list("N")?;
    for &n in &ns {
        leaves("N", n)?;
        require(n <= 1024, "N", format!("N = {n} above 1024"))?;
    }
    let trees = p.usize("trees_per_N")?;
    require(trees > 0, "trees_per_N", "must be positive")?;
    let (lo, hi) = (p.f64("slope_min")?, p.f64("slope_max")?);
    let g = mass_generator_gap(&ns, f.as_ref(), trees, seed)?;
    let mut out = Outcome::new(&["N", "f", "gap", "mean_gap"]);
    for r in &g.rows {
        out.row(cells![r.n, r.function, r.gap, r.mean_gap]);
    }
    out.metric("slope", g.slope);
    out.assertions.push(check(
        "gap_decreasing",
        g.decreasing,
        "max gap strictly decreasing in N",
    ));
    out.assertions.push(check(
        "slope_in_window",
        (lo..=hi).contains(&g.slope),
        format!("log-log slope {:.4} against [{lo}, {hi}]", g.slope),
    ));
    Ok(out)
}

fn crt_moments(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n = p.usize("N")?;
    leaves("N", n)?;
    let m = p.usize("m")?;
    require(m >= 3 && m <= n, "m", format!("need 3 <= m <= N, got {m}"))?;
    let reps = p.usize("replicates")?;
    require(reps >= 2, "replicates", "need at least 2")?;
    let tol = p.f64("pair_tolerance")?;
    let h = subtree_mass_histogram(n, m, reps, seed)?;
    let mut out = Outcome::new(&["statistic", "estimate", "std_error", "target"]);
    for r in &h.moments {
        out.row(cells![
            r.name,
            r.estimate.mean,
            r.estimate.std_error,
            r.target
        ]);
    }
    out.row(cells!["KS eta1", h.ks_eta1, "", h.ks_critical]);
    if let Some(c) = h.chi_square {
        out.row(cells!["chi-square", c.statistic, "", c.df]);
        out.metric("chi_square_p_value", c.p_value);
    }
    out.assertions.push(check(
        "masses_sum_to_one",
        h.masses_sum_exact,
        format!("{reps} replicates"),
    ));
    let dev = (h.pair_moment.mean - h.pair_target).abs();
    out.assertions.push(check(
        "pair_moment",
        dev < tol,
        format!(
            "|{:.6} - {:.6}| = {dev:.6} against {tol}",
            h.pair_moment.mean, h.pair_target
        ),
    ));
    out.assertions.push(check(
        "ks_eta1",
        h.ks_eta1 < h.ks_critical,
        format!("{:.6} against critical {:.6}", h.ks_eta1, h.ks_critical),
    ));
    let trees = p.usize("distance_trees")?;
    if trees > 0 {
        let d = mean_distance_average(n, trees, seed)?;
        let dtol = p.f64("distance_tolerance")?;
        out.row(cells!["mean distance", d.mean, d.std_error, 0.4]);
        out.assertions.push(check(
            "mean_distance",
            (d.mean - 0.4).abs() < dtol,
            format!("{:.6} over {trees} trees against 0.4 +- {dtol}", d.mean),
        ));
    }
    Ok(out)
}

fn pick_shape(p: &Params, m: usize) -> Result<cladoflow_core::LabelledShape, CliError> {
    let shapes = enumerate_cladograms(m)?;
    let i = p.usize("shape")?;
    shapes.get(i).cloned().ok_or_else(|| {
        bad(
            "shape",
            format!("index {i}, there are {} shapes", shapes.len()),
        )
    })
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

pub const QN_PROFILE_CAP: u128 = 2_000_000;

fn qn(p: &Params) -> Result<Outcome, CliError> {
    let n = p.usize("N")?;
    leaves("N", n)?;
    let m = sample_size(p)?;
    require(n >= m, "N", format!("N = {n} < m = {m}"))?;
    let edges = 2 * m as u128 - 3;
    let count = binomial(n as u128 - m as u128 + edges - 1, edges - 1);
    require(
        count <= QN_PROFILE_CAP,
        "N",
        format!("{count} profiles, cap {QN_PROFILE_CAP}"),
    )?;
    let s = pick_shape(p, m)?;
    let (rows, total) = q_n_table(n, &s)?;
    let mut out = Outcome::new(&["counts", "trees", "q", "value"]);
    for r in &rows {
        let counts: Vec<_> = r.counts.iter().map(|c| c.to_string()).collect();
        out.row(cells![counts.join(" "), r.trees, r.q, r.value]);
    }
    let classes = count_cladograms(m).to_string();
    let want = if classes == "1" {
        classes
    } else {
        format!("1/{classes}")
    };
    let got = total.to_string();
    out.metric("shape", s.key());
    out.metric("profiles", rows.len());
    out.metric("sum", got.clone());
    out.assertions.push(check(
        "profile_sum",
        got == want,
        format!("sum {got}, expected {want}"),
    ));
    Ok(out)
}

fn duality(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let m = sample_size(p)?;
    let s = pick_shape(p, m)?;
    let horizon = p.f64("horizon")?;
    require(horizon >= 0.0, "horizon", "must be nonnegative")?;
    let reps = p.usize("replicates")?;
    require(reps >= 2, "replicates", "need at least 2")?;
    let file = p.string("tree")?;
    let trees: Vec<Cladogram> = if file.is_empty() {
        let mut v = vec![];
        for n in p.usize_list("N")? {
            leaves("N", n)?;
            require(n >= m, "N", format!("N = {n} < m = {m}"))?;
            v.push(uniform_cladogram(
                n,
                &mut replicate_rng(sub_seed(seed, 0x6475), n as u64),
            )?);
        }
        v
    } else {
        vec![read_tree(&file)?]
    };
    let mut out = Outcome::new(&[
        "N",
        "m",
        "shape",
        "horizon",
        "lhs",
        "lhs_se",
        "rhs",
        "rhs_se",
        "semigroup",
        "replicates",
    ]);
    let mut gaps = vec![];
    for x in &trees {
        let r = duality_check(x, &s, horizon, reps, sub_seed(seed, x.n() as u64))?;
        out.row(cells![
            r.n,
            r.m,
            r.start_shape,
            r.horizon,
            r.lhs.mean,
            r.lhs.std_error,
            r.rhs.mean,
            r.rhs.std_error,
            r.semigroup,
            r.replicates
        ]);
        let gap = (r.lhs.mean - r.rhs.mean).abs();
        let se = r.lhs.std_error.hypot(r.rhs.std_error);
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        out.assertions.push(check(
            format!("in_unit_interval_N={}", r.n),
            unit(r.lhs.mean) && unit(r.rhs.mean),
            format!("lhs {:.6}, rhs {:.6}", r.lhs.mean, r.rhs.mean),
        ));
        if horizon == 0.0 {
            out.assertions.push(check(
                format!("exact_at_zero_N={}", r.n),
                r.lhs.mean == r.rhs.mean,
                format!("{} vs {}", r.lhs.mean, r.rhs.mean),
            ));
        } else {
            out.assertions.push(check(
                format!("sides_agree_N={}", r.n),
                gap <= 3.0 * se + 1e-12,
                format!("|lhs - rhs| = {gap:.3e}, 3 se = {:.3e}", 3.0 * se),
            ));
        }
        gaps.push((r.n, gap, se));
    }
    if gaps.len() > 1 {
        let ok = gaps
            .windows(2)
            .all(|w| w[1].1 <= w[0].1 + w[0].2.hypot(w[1].2));
        out.assertions.push(check(
            "gap_trend",
            ok,
            "|lhs - rhs| non-increasing in N within combined standard errors",
        ));
    }
    out.metric(
        "gaps",
        gaps.iter()
            .map(|g| json!({"N": g.0, "gap": g.1, "se": g.2}))
            .collect::<Vec<_>>(),
    );
    Ok(out)
}

fn mixing(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n = p.usize("N")?;
    leaves("N", n)?;
    let m = sample_size(p)?;
    require(n >= m, "N", format!("N = {n} < m = {m}"))?;
    let start = match p.string("start")?.as_str() {
        "comb" => Start::Comb,
        "balanced" => Start::Balanced,
        "file" => Start::Tree(read_tree(&p.string("tree")?)?),
        s => {
            return Err(bad(
                "start",
                format!("{s:?}; expected comb, balanced or file"),
            ))
        }
    };
    let grid = p.f64_list("grid")?;
    require(
        grid.windows(2).all(|w| w[0] <= w[1]) && grid.iter().all(|&t| t >= 0.0),
        "grid",
        "must be ascending and nonnegative",
    )?;
    let reps = p.usize("replicates")?;
    require(reps >= 2, "replicates", "need at least 2")?;
    let rows = mixing_experiment(n, &start, m, &grid, reps, seed)?;
    let mut out = Outcome::new(&["t", "shape", "mean", "std_error", "target", "within_3se"]);
    for r in &rows {
        out.row(cells![
            r.t,
            r.shape_key,
            r.estimate.mean,
            r.estimate.std_error,
            r.target,
            r.within_3se
        ]);
    }
    let last = *grid.last().expect("grid is nonempty");
    let final_rows: Vec<_> = rows.iter().filter(|r| r.t == last).collect();
    let ok = final_rows.iter().filter(|r| r.within_3se).count();
    out.metric("start", start.name());
    out.metric("target", rows[0].target);
    out.assertions.push(check(
        format!("stationary_at_t={last}"),
        ok == final_rows.len(),
        format!(
            "{ok} of {} shapes within 3 standard errors",
            final_rows.len()
        ),
    ));
    Ok(out)
}

fn identities(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n_max = p.usize("N_max")?;
    leaves("N_max", n_max)?;
    let cases = p.usize("cases")?;
    require(cases > 0, "cases", "must be positive")?;
    let rows = identity_suite(n_max, cases, seed)?;
    let mut out = Outcome::new(&["identity", "cases", "failures"]);
    for r in &rows {
        out.row(cells![r.identity, r.cases, r.failures]);
        out.assertions.push(check(
            r.identity.clone(),
            r.failures == 0,
            format!("{} failures in {} cases", r.failures, r.cases),
        ));
    }
    Ok(out)
}

fn distances(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let t = start_tree(p, seed)?;
    let m = p.usize("m")?;
    require(m >= 2, "m", "need at least 2 points")?;
    let samples = p.usize("samples")?;
    let mut rng = replicate_rng(sub_seed(seed, 0x646d), 0);
    let draws = distance_matrix_mc(&t, m, samples, &mut rng);
    let mut out = Outcome::new(&[
        "sample",
        "i",
        "j",
        "leaf_i",
        "leaf_j",
        "numerator",
        "denominator",
        "value",
    ]);
    let (mut four_point, mut shaped) = (0, 0);
    for (k, d) in draws.iter().enumerate() {
        four_point += usize::from(d.four_point_holds());
        let mut ok = true;
        for i in 0..m {
            ok &= d.numerators[i][i] == 0;
            for j in 0..m {
                ok &= d.numerators[i][j] == d.numerators[j][i];
                if i < j {
                    out.row(cells![
                        k,
                        i,
                        j,
                        d.leaves[i],
                        d.leaves[j],
                        d.numerators[i][j],
                        d.denominator,
                        d.numerators[i][j] as f64 / d.denominator as f64
                    ]);
                }
            }
        }
        shaped += usize::from(ok);
    }
    out.metric("N", t.n());
    out.assertions.push(check(
        "symmetric_zero_diagonal",
        shaped == samples,
        format!("{shaped} of {samples} matrices"),
    ));
    if m >= 4 {
        out.assertions.push(check(
            "four_point",
            four_point == samples,
            format!("{four_point} of {samples} matrices"),
        ));
    }
    Ok(out)
}
