//! `hytraj`: batch checks over hybrid transition systems.
//!
//! Exit status 0 when the check passes, 1 when it fails with a witness, 2 on
//! input errors.

mod inputs;
mod plot;

use std::fs;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hytraj::casestudy::{run_fixture, run_refinement_chain, tank_discretization, GalleryOutcome};
use hytraj::discretize::{
    hts_discretize, milner_sim_check, relation_discretize, theorem6_check, theorem7_check, timeful_sample_within, DiscreteRelation, DiscreteSystem,
    MilnerReport, SamplingConvention, StepRule,
};
use hytraj::homomorphism::{theorem1_check, theorem3_check, StateMap};
use hytraj::hts::ExplicitSystem;
use hytraj::instances::connection_suite;
use hytraj::random::{aligned_system, state_map, SystemShape};
use hytraj::rational::{show_q, Q};
use hytraj::simulation::{bisim_check, greatest_simulation, preservation_check, sim_check, SimMode, SimReport};
use hytraj::time::TimePoint;
use hytraj::trajectory::Trajectory;

use inputs::{gallery_names, Common, Named};

#[derive(Parser)]
#[command(name = "hytraj", version, about = "Exact checks over piecewise-affine hybrid transition systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the structural conditions of a system.
    Validate(Common),
    /// Generate the trajectories within the horizon; `--out` writes CSV.
    Trajectories(Common),
    /// Timeful samples of every trajectory at step `--delta`.
    Sample {
        #[command(flatten)]
        c: Common,
        /// Keep the sample at the end of complete trajectories.
        #[arg(long)]
        closed: bool,
    },
    /// Discretize a system (and its abstract system and relation when given).
    Discretize {
        #[command(flatten)]
        c: Common,
        /// Re-check a dump written by `discretize --out`.
        #[arg(long, value_name = "FILE")]
        discrete: Option<String>,
    },
    /// Hybrid simulation of the concrete system by the abstract one.
    CheckSim {
        #[command(flatten)]
        c: Common,
        #[arg(long)]
        sync: bool,
    },
    CheckBisim(Common),
    /// The for-all-successors variant together with progress.
    CheckPreservation(Common),
    /// Greatest simulation inside the relation; passes when it relates every
    /// concrete initial configuration to an abstract initial one.
    GreatestSim {
        #[command(flatten)]
        c: Common,
        /// Fail when a splice leaves the configuration universe.
        #[arg(long)]
        strict: bool,
    },
    /// The three-stage tank refinement chain.
    CheckRefinement(Common),
    /// One of the commutation, composition or discretization results: 1, 3, 5, 6 or 7.
    CheckTheorem {
        #[arg(value_parser = ["1", "3", "5", "6", "7"])]
        which: String,
        #[command(flatten)]
        c: Common,
        /// State map file for 1 and 3; without a system, random cases are drawn from `--seed`.
        #[arg(long, value_name = "FILE")]
        map: Option<String>,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Laws of the finite Galois connection instances.
    GaloisLaws {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
    /// Run a named counterexample; lists them without a name.
    Gallery {
        name: Option<String>,
        #[arg(long, value_name = "N")]
        check_theorem: Option<String>,
        #[command(flatten)]
        c: Common,
    },
    /// SVG plot of the trajectories.
    Plot(Common),
}

struct Report {
    pass: bool,
    text: String,
    json: Value,
}

impl Report {
    fn new(pass: bool, text: impl Into<String>, json: Value) -> Self {
        Report {
            pass,
            text: text.into(),
            json,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn status(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn max_rank(h: &Q, delta: &Q) -> usize {
    (h / delta).floor().to_integer().try_into().unwrap_or(0)
}

fn describe(s: &Trajectory) -> String {
    let tl: Vec<String> = s.timeline().iter().map(|t| t.to_string()).collect();
    let tag = if s.is_truncated() { " (truncated)" } else { "" };
    format!("{}{tag}: {} at {}", s.len(), s.modes().join(" "), tl.join(", "))
}

fn validate(c: &Common) -> Result<Report> {
    let s = c.concrete()?;
    Ok(match s.validate() {
        Ok(v) => Report::new(
            true,
            format!("valid: {} configurations, {} edges, {} initial, {} on the frontier", v.configurations, v.edges, v.initial, v.frontier),
            json!({ "valid": true, "report": to_json(&v)? }),
        ),
        Err(e) => Report::new(false, format!("invalid: {e}"), json!({ "valid": false, "error": e.to_string() })),
    })
}

fn generate(c: &Common) -> Result<(ExplicitSystem, Vec<Trajectory>)> {
    let s = c.concrete()?;
    let sem = s.generate(&TimePoint::Finite(c.horizon()?), c.depth()?)?;
    Ok((s, sem.trajectories))
}

fn trajectories(c: &Common) -> Result<Report> {
    let (_, ts) = generate(c)?;
    if let Some(out) = &c.out {
        let grid = c.grid()?;
        let h = c.horizon()?;
        for (i, s) in ts.iter().enumerate() {
            let path = if ts.len() == 1 { out.clone() } else { indexed(out, i) };
            let f = fs::File::create(&path).with_context(|| format!("writing {path}"))?;
            s.write_csv(&grid, Some(&h), f)?;
        }
    }
    let text: Vec<String> = ts.iter().enumerate().map(|(i, s)| format!("#{i} {}", describe(s))).collect();
    Ok(Report::new(true, text.join("\n"), json!({ "horizon": show_q(&c.horizon()?), "trajectories": to_json(&ts)? })))
}

fn indexed(path: &str, i: usize) -> String {
    match path.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}-{i}.{ext}"),
        None => format!("{path}-{i}"),
    }
}

fn sample(c: &Common, closed: bool) -> Result<Report> {
    let (_, ts) = generate(c)?;
    let delta = c.delta()?;
    let n = max_rank(&c.horizon()?, &delta);
    let conv = if closed { SamplingConvention::Closed } else { SamplingConvention::HalfOpen };
    let samples: Vec<_> = ts.iter().map(|s| timeful_sample_within(s, &delta, n, conv)).collect();
    let text: Vec<String> = samples
        .iter()
        .enumerate()
        .map(|(i, xs)| format!("#{i} {}", xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")))
        .collect();
    Ok(Report::new(true, text.join("\n"), json!({ "delta": show_q(&delta), "samples": to_json(&samples)? })))
}

#[derive(Serialize, Deserialize)]
struct DiscreteDump {
    concrete: DiscreteSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    abstract_system: Option<DiscreteSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relation: Option<DiscreteRelation>,
}

fn has_abstract(c: &Common) -> Result<bool> {
    Ok(c.abstract_file.is_some()
        || match c.named()? {
            Some(Named::Gallery(f)) => f.systems.len() > 1,
            Some(Named::TankImpl | Named::TankAutomaton) => true,
            _ => false,
        })
}

fn discretize(c: &Common, discrete: Option<&str>) -> Result<Report> {
    let dump: DiscreteDump = match discrete {
        Some(path) => serde_json::from_str(&fs::read_to_string(path).with_context(|| format!("reading {path}"))?)
            .with_context(|| format!("parsing {path}"))?,
        None => {
            let delta = c.delta()?;
            let n = max_rank(&c.horizon()?, &delta);
            let d = hts_discretize(&c.concrete()?, &delta, n)?;
            if has_abstract(c)? {
                let db = hts_discretize(&c.abstract_system()?, &delta, n)?;
                let rel = relation_discretize(&c.relation()?, &d, &db)?;
                DiscreteDump {
                    concrete: d,
                    abstract_system: Some(db),
                    relation: Some(rel),
                }
            } else {
                DiscreteDump {
                    concrete: d,
                    abstract_system: None,
                    relation: None,
                }
            }
        }
    };
    if let Some(out) = &c.out {
        fs::write(out, serde_json::to_string_pretty(&dump)?).with_context(|| format!("writing {out}"))?;
    }
    let summary = |d: &DiscreteSystem| -> Result<Value> {
        let traces = d.traces(d.max_rank, SamplingConvention::HalfOpen)?;
        Ok(json!({
            "delta": show_q(&d.delta),
            "max_rank": d.max_rank,
            "states": d.states.len(),
            "initial": d.initial.len(),
            "edges": d.edges.len(),
            "jumps": d.edges_by(StepRule::Jump).len(),
            "traces": traces.len(),
        }))
    };
    let mut out = json!({ "concrete": summary(&dump.concrete)? });
    let mut text = format!("concrete: {}", summary(&dump.concrete)?);
    let mut pass = true;
    if let (Some(db), Some(rel)) = (&dump.abstract_system, &dump.relation) {
        let m: MilnerReport = milner_sim_check(rel, &dump.concrete, db);
        pass = m.holds;
        out["abstract"] = summary(db)?;
        out["related_pairs"] = json!(rel.pairs.len());
        out["milner"] = to_json(&m)?;
        text.push_str(&format!(
            "\nabstract: {}\ndiscrete simulation over {} related pairs: {}",
            summary(db)?,
            rel.pairs.len(),
            status(m.holds)
        ));
        if let Some(w) = &m.witness {
            text.push_str(&format!("\n  unmatched step {} -> {} against {}", w.concrete, w.step, w.abstract_state));
        }
    }
    Ok(Report::new(pass, text, out))
}

fn sim_text(r: &SimReport) -> String {
    let mut lines = vec![format!(
        "simulation: {} ({} related pairs{})",
        status(r.verdict),
        r.pairs_checked,
        if r.horizon_bounded { ", within the instantiation bound" } else { "" }
    )];
    for (k, h) in &r.hypotheses {
        lines.push(format!("  {k}: {}{}", status(h.holds), h.witness.as_ref().map(|w| format!(" ({w})")).unwrap_or_default()));
    }
    for v in r.violations.iter().take(5) {
        lines.push(format!("  violation at <{}, {}>: {}", v.concrete, v.abstract_config, v.reason));
    }
    lines.join("\n")
}

fn check_sim(c: &Common, sync: bool) -> Result<Report> {
    let mode = if sync { SimMode::Sync } else { SimMode::Async };
    let r = sim_check(&c.relation()?, &c.concrete()?, &c.abstract_system()?, mode)?;
    Ok(Report::new(r.verdict, sim_text(&r), to_json(&r)?))
}

fn check_bisim(c: &Common) -> Result<Report> {
    let r = bisim_check(&c.relation()?, &c.concrete()?, &c.abstract_system()?)?;
    assert_eq!(r.verdict, r.forward.verdict && r.backward.verdict);
    let text = format!("bisimulation: {}\nforward {}\nbackward {}", status(r.verdict), sim_text(&r.forward), sim_text(&r.backward));
    Ok(Report::new(r.verdict, text, to_json(&r)?))
}

fn check_preservation(c: &Common) -> Result<Report> {
    let r = preservation_check(&c.relation()?, &c.concrete()?, &c.abstract_system()?)?;
    let mut lines = vec![
        format!("preservation: {} ({} pairs)", status(r.preservation), r.pairs_checked),
        format!("simulation entailed: {}", r.simulation_entailed),
    ];
    for (k, h) in &r.hypotheses {
        lines.push(format!("  {k}: {}", status(h.holds)));
    }
    for v in r.violations.iter().take(5) {
        lines.push(format!("  violation at <{}, {}>: {}", v.concrete, v.abstract_config, v.reason));
    }
    Ok(Report::new(r.preservation, lines.join("\n"), to_json(&r)?))
}

fn greatest(c: &Common, strict: bool) -> Result<Report> {
    let (tau, tau_bar) = (c.concrete()?, c.abstract_system()?);
    let g = greatest_simulation(&c.relation()?, &tau, &tau_bar, strict)?;
    let uncovered: Vec<usize> =
        tau.initial.iter().copied().filter(|&i| !tau_bar.initial.iter().any(|&k| g.pairs.contains(&(i, k)))).collect();
    let pass = uncovered.is_empty();
    let text = format!(
        "greatest simulation: {} pairs after {} rounds, {} auxiliary splices; initial configurations uncovered: {:?}",
        g.pairs.len(),
        g.rounds,
        g.auxiliary,
        uncovered
    );
    Ok(Report::new(pass, text, json!({ "greatest": to_json(&g)?, "uncovered_initial": uncovered })))
}

fn check_refinement(c: &Common) -> Result<Report> {
    if !matches!(c.named()?, None | Some(Named::TankChain)) {
        bail!("check-refinement runs the tank fixture only");
    }
    let p = c.params()?;
    let r = run_refinement_chain(&p, &c.horizon()?)?;
    let mut lines = vec![format!(
        "semantic: {} (automaton in property: {}, witnesses {:?})",
        status(r.semantic.holds),
        r.semantic.automaton_in_spec,
        r.semantic.matches.iter().map(|m| m.catalog_entry.as_str()).collect::<Vec<_>>()
    )];
    for v in &r.simulation {
        let sim = v.simulation.as_ref().map_or_else(|| format!("error: {}", v.error.as_deref().unwrap_or("?")), |s| status(s.verdict).to_string());
        lines.push(format!("simulation {:?} relation, {:?} rate: {sim}", v.relation, v.rate));
        if let Some(s) = &v.simulation {
            if let Some(x) = s.violations.first() {
                lines.push(format!("  first violation: {}", x.reason));
            }
        }
        for pw in v.pointwise.iter().filter(|p| p.verdict.as_ref().is_some_and(|v| !v.holds) || p.error.is_some()) {
            let at = pw.verdict.as_ref().and_then(|v| v.witness.as_ref()).map(show_q);
            lines.push(format!("  x0={}: pointwise failure at {:?} {}", show_q(&pw.x0), at, pw.error.as_deref().unwrap_or("")));
        }
    }
    for s in &r.composition {
        lines.push(format!(
            "composition x0={}: {} ({} off phases, level 0 against t - begin: {})",
            show_q(&s.x0),
            status(s.holds()),
            s.off_phases.len(),
            s.off_phases.iter().all(|o| o.matches)
        ));
    }
    if r.horizon_bounded {
        lines.push("horizon ends before the first shut phase can: verdicts are horizon-bounded".into());
    }
    lines.push(format!("chain: {}", status(r.holds())));
    Ok(Report::new(r.holds(), lines.join("\n"), to_json(&r)?))
}

fn load_map(path: &str) -> Result<StateMap> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    serde_json::from_str(&src).with_context(|| format!("parsing {path}"))
}

fn explicit_given(c: &Common) -> bool {
    c.system.is_some() || c.fixture.is_some()
}

/// The cases for 1, 3 and 6: the given system, or random ones.
fn cases(c: &Common, map: Option<&str>, n: usize, need_map: bool) -> Result<Vec<(ExplicitSystem, Option<StateMap>)>> {
    if explicit_given(c) {
        let h = match map {
            Some(p) => Some(load_map(p)?),
            None if need_map => bail!("give --map FILE with a system"),
            None => None,
        };
        return Ok(vec![(c.concrete()?, h)]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let shape = SystemShape::default();
    Ok((0..n)
        .map(|_| {
            let s = aligned_system(&mut rng, &shape);
            let h = need_map.then(|| state_map(&mut rng));
            (s, h)
        })
        .collect())
}

fn check_theorem(which: &str, c: &Common, map: Option<&str>, n: usize) -> Result<Report> {
    let h = c.horizon()?;
    let delta = c.delta()?;
    match which {
        "1" | "3" => {
            let mut rows = Vec::new();
            let mut pass = true;
            for (k, (s, m)) in cases(c, map, n, true)?.into_iter().enumerate() {
                let m = m.expect("a map per case");
                let row = if which == "1" {
                    let r = theorem1_check(&s, &m, &TimePoint::Finite(h.clone()), c.depth()?)?;
                    pass &= r.holds();
                    json!({ "case": k, "holds": r.holds(), "report": to_json(&r)? })
                } else {
                    let ts = s.generate(&TimePoint::Finite(h.clone()), c.depth()?)?.trajectories;
                    let r = theorem3_check(&ts, &m, &delta, max_rank(&h, &delta), SamplingConvention::HalfOpen)?;
                    pass &= r.equal;
                    json!({ "case": k, "holds": r.equal, "report": to_json(&r)? })
                };
                rows.push(row);
            }
            let failed: Vec<&Value> = rows.iter().filter(|r| r["holds"] == json!(false)).collect();
            let text = format!("{} cases, {} fail{}", rows.len(), failed.len(), failed.first().map(|r| format!(": first {}", r["case"])).unwrap_or_default());
            Ok(Report::new(pass, text, json!({ "cases": rows })))
        }
        "6" => {
            let mut rows = Vec::new();
            let mut pass = true;
            for (k, (s, _)) in cases(c, None, n, false)?.into_iter().enumerate() {
                let r = theorem6_check(&s, &delta, &h, SamplingConvention::HalfOpen)?;
                pass &= r.equal;
                rows.push(json!({ "case": k, "equal": r.equal, "report": to_json(&r)? }));
            }
            let failed = rows.iter().filter(|r| r["equal"] == json!(false)).count();
            Ok(Report::new(pass, format!("{} cases, {failed} differ", rows.len()), json!({ "cases": rows })))
        }
        "5" => match c.named()? {
            Some(Named::TankChain) | None => {
                let r = run_refinement_chain(&c.params()?, &h)?;
                let pass = r.composition.iter().all(|s| s.holds());
                let text: Vec<String> = r
                    .composition
                    .iter()
                    .map(|s| format!("x0={}: {} ({} off phases)", show_q(&s.x0), status(s.holds()), s.off_phases.len()))
                    .collect();
                Ok(Report::new(pass, text.join("\n"), to_json(&r.composition)?))
            }
            Some(Named::Gallery(f)) if f.name == "fig6" || f.name == "fig7" => outcome_report(&run_fixture(&f)?),
            _ => bail!("5 runs on the tank chain or on gallery/fig6 and gallery/fig7"),
        },
        "7" => {
            let r = match c.named()? {
                Some(Named::TankChain) => tank_discretization(&c.params()?, &h)?,
                _ => theorem7_check(&c.relation()?, &c.concrete()?, &c.abstract_system()?, &delta, max_rank(&h, &delta))?,
            };
            theorem7_report(&r)
        }
        _ => unreachable!("restricted by the parser"),
    }
}

fn theorem7_report(r: &hytraj::discretize::Theorem7Report) -> Result<Report> {
    let mut lines = vec![format!("hybrid simulation: {}", status(r.simulation.verdict))];
    for f in &r.hypotheses.findings {
        lines.push(format!("  {:?} violated{}: {}", f.hypothesis, f.subcase.map(|s| format!(" ({s})")).unwrap_or_default(), f.detail));
    }
    lines.push(format!("discrete simulation: {} over {} pairs", status(r.milner.holds), r.milner.pairs));
    if let Some(w) = &r.milner.witness {
        lines.push(format!("  unmatched step {} -> {} against {}", w.concrete, w.step, w.abstract_state));
    }
    lines.push(format!("violated: {:?}", r.hypotheses.violated()));
    Ok(Report::new(r.confirmed, lines.join("\n"), to_json(r)?))
}

fn outcome_report(o: &GalleryOutcome) -> Result<Report> {
    let (pass, text) = match o {
        GalleryOutcome::Discretization { theorem7 } => return theorem7_report(theorem7),
        GalleryOutcome::Sampling { theorem6, timeless, .. } => (
            theorem6.equal,
            format!(
                "sampled semantics equals discretized semantics: {}\ntimeless discretization: {} self loops, strict over-approximation: {}",
                theorem6.equal,
                timeless.self_loops.len(),
                timeless.strict_overapproximation
            ),
        ),
        GalleryOutcome::Composition { compose, direct } => (
            compose.holds,
            format!(
                "composition certified: {}\nduration gaps: {:?}\nouter pair related directly: {} (witness {:?})",
                compose.holds,
                compose.chains.iter().map(|ch| ch.duration_gap.as_ref().map(show_q)).collect::<Vec<_>>(),
                direct.holds,
                direct.witness.as_ref().map(show_q)
            ),
        ),
        GalleryOutcome::Nesting { nesting, compose_error } => (
            nesting.holds,
            format!("well nested: {} (witness {:?})\ncomposition: {}", nesting.holds, nesting.witness, compose_error.as_deref().unwrap_or("ran")),
        ),
        GalleryOutcome::Preservation { simulation, preservation } => (
            preservation.preservation,
            format!(
                "simulation: {}\npreservation: {}{}",
                status(simulation.verdict),
                status(preservation.preservation),
                preservation.violations.first().map(|v| format!("\n  violation: {}", v.reason)).unwrap_or_default()
            ),
        ),
    };
    Ok(Report::new(pass, text, to_json(o)?))
}

fn gallery(name: Option<&str>, theorem: Option<&str>, c: &Common) -> Result<Report> {
    let Some(name) = name else {
        let names = gallery_names();
        return Ok(Report::new(true, names.join("\n"), json!(names)));
    };
    let Named::Gallery(f) = inputs::named(name)? else {
        bail!("{name} is not a gallery fixture");
    };
    let mut c = c.clone();
    c.fixture = Some(format!("gallery/{}", f.name));
    match theorem {
        None => outcome_report(&run_fixture(&f)?),
        Some(t) => {
            let fits = match f.name {
                "fig8-1" | "fig8-2" | "fig8-3" => t == "7",
                "example10" => t == "6",
                "fig6" | "fig7" => t == "5",
                _ => false,
            };
            if !fits {
                bail!("gallery/{} does not exercise result {t}", f.name);
            }
            check_theorem(t, &c, None, 1)
        }
    }
}

fn galois(c: &Common, rounds: usize) -> Result<Report> {
    let reps = connection_suite(c.seed, rounds)?;
    let pass = reps.iter().all(|r| r.comparison_only || r.passed());
    let text: Vec<String> = reps
        .iter()
        .map(|r| {
            let verdict = if r.comparison_only { format!("literal reading, passes: {}", r.passed()) } else { status(r.passed()).to_string() };
            format!("{} [{}] {}x{}: {verdict}", r.name, r.variant, r.concrete_size, r.abstract_size)
        })
        .collect();
    Ok(Report::new(pass, text.join("\n"), to_json(&reps)?))
}

fn plot_cmd(c: &Common) -> Result<Report> {
    let (_, ts) = generate(c)?;
    let title = c.fixture.clone().or_else(|| c.system.clone()).unwrap_or_default();
    let svg = plot::render(&ts, &c.horizon()?, &c.grid()?, &title);
    match &c.out {
        Some(out) => {
            fs::write(out, &svg).with_context(|| format!("writing {out}"))?;
            Ok(Report::new(true, format!("wrote {out}: {} trajectories", ts.len()), json!({ "out": out, "trajectories": ts.len() })))
        }
        None => Ok(Report::new(true, svg.trim_end().to_string(), json!({ "svg": svg }))),
    }
}

fn run(cli: Cli) -> Result<(Report, bool)> {
    let (report, c) = match &cli.cmd {
        Cmd::Validate(c) => (validate(c)?, c),
        Cmd::Trajectories(c) => (trajectories(c)?, c),
        Cmd::Sample { c, closed } => (sample(c, *closed)?, c),
        Cmd::Discretize { c, discrete } => (discretize(c, discrete.as_deref())?, c),
        Cmd::CheckSim { c, sync } => (check_sim(c, *sync)?, c),
        Cmd::CheckBisim(c) => (check_bisim(c)?, c),
        Cmd::CheckPreservation(c) => (check_preservation(c)?, c),
        Cmd::GreatestSim { c, strict } => (greatest(c, *strict)?, c),
        Cmd::CheckRefinement(c) => (check_refinement(c)?, c),
        Cmd::CheckTheorem { which, c, map, cases } => (check_theorem(which, c, map.as_deref(), *cases)?, c),
        Cmd::GaloisLaws { c, rounds } => (galois(c, *rounds)?, c),
        Cmd::Gallery { name, check_theorem, c } => (gallery(name.as_deref(), check_theorem.as_deref(), c)?, c),
        Cmd::Plot(c) => (plot_cmd(c)?, c),
    };
    Ok((report, c.json))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((r, json)) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&r.json).expect("reports serialize"));
            } else {
                println!("{}", r.text);
            }
            if r.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
