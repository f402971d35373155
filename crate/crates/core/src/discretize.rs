//! Timeful discretization: sampling with ranks, discrete transition systems,
//! discretized relations and the hypotheses under which hybrid simulations
//! discretize into discrete simulations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Configuration, State};
use crate::hts::ExplicitSystem;
use crate::rational::{is_multiple_of, show_q, Q};
use crate::relation::TimedRelation;
use crate::simulation::{sim_check, SimMode, SimReport};
use crate::time::{Span, TimeInterval, TimePoint};
use crate::trajectory::Trajectory;

/// Bound on enumerated discrete traces.
pub const MAX_TRACES: usize = 200_000;

/// A state tagged with its sample rank; the time is `rank * delta`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimefulState {
    pub state: State,
    pub rank: usize,
}

impl fmt::Display for TimefulState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.state, self.rank)
    }
}

/// How the end of a trajectory is sampled.
///
/// `HalfOpen` keeps `n * delta < duration` for complete trajectories and, on
/// the transition-system side, drops the trailing state added by a final step.
/// `Closed` keeps `n * delta <= duration` wherever the trajectory is defined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingConvention {
    #[default]
    HalfOpen,
    Closed,
}

fn time_of(rank: usize, delta: &Q) -> Q {
    Q::from_integer(rank.into()) * delta
}

fn rank_of(t: &Q, delta: &Q) -> Option<usize> {
    let k = t / delta;
    if k.is_integer() {
        k.to_integer().to_usize()
    } else {
        None
    }
}

/// Samples up to `max_rank` (inclusive).
pub fn timeful_sample_within(s: &Trajectory, delta: &Q, max_rank: usize, conv: SamplingConvention) -> Vec<TimefulState> {
    assert!(delta > &Q::zero(), "sampling step must be positive");
    let strict_end = match (conv, s.end()) {
        (SamplingConvention::HalfOpen, TimePoint::Finite(e)) if !s.is_truncated() => Some(e.clone()),
        _ => None,
    };
    let mut out = Vec::new();
    for n in 0..=max_rank {
        let t = time_of(n, delta);
        if strict_end.as_ref().is_some_and(|e| &t >= e) {
            break;
        }
        match s.eval(&t) {
            Some(state) => out.push(TimefulState { state, rank: n }),
            None => break,
        }
    }
    out
}

/// `α_δ(σ)`; errors on unbounded trajectories.
pub fn timeful_sample(s: &Trajectory, delta: &Q, conv: SamplingConvention) -> Result<Vec<TimefulState>> {
    match s.end() {
        TimePoint::Infinity => Err(Error::UnboundedSampling),
        TimePoint::Finite(e) => {
            let last = (e / delta).floor().to_integer().to_usize().unwrap_or(usize::MAX);
            Ok(timeful_sample_within(s, delta, last, conv))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Alignment {
    pub aligned: bool,
    /// First misaligned configuration with the offending bound.
    pub witness: Option<(usize, String)>,
}

/// Begin and finite end of every configuration are multiples of `delta`.
pub fn grid_alignment_check(tau: &ExplicitSystem, delta: &Q) -> Alignment {
    for (i, c) in tau.configs.iter().enumerate() {
        if !is_multiple_of(c.b(), delta) {
            return Alignment {
                aligned: false,
                witness: Some((i, format!("b = {}", show_q(c.b())))),
            };
        }
        if let TimePoint::Finite(e) = c.e() {
            if !is_multiple_of(e, delta) || e <= c.b() {
                return Alignment {
                    aligned: false,
                    witness: Some((i, format!("e = {}", show_q(e)))),
                };
            }
        }
    }
    Alignment {
        aligned: true,
        witness: None,
    }
}

/// Which rule produced a discrete step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StepRule {
    /// Inside a configuration, not its last step.
    Interior,
    /// Last step of a configuration into the first state of a successor.
    Jump,
    /// Last step of a successor-free configuration into its own final state.
    Final,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteEdge {
    pub from: TimefulState,
    pub to: TimefulState,
    pub rules: BTreeSet<StepRule>,
}

/// `α_δ(τ)` with its state space and initial states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteSystem {
    #[serde(with = "crate::rational::serde_q")]
    pub delta: Q,
    /// Edges reach at most this rank.
    pub max_rank: usize,
    pub states: BTreeSet<TimefulState>,
    pub initial: BTreeSet<TimefulState>,
    /// Sorted by `(from, to)`.
    pub edges: Vec<DiscreteEdge>,
}

impl DiscreteSystem {
    pub fn successors<'a>(&'a self, s: &'a TimefulState) -> impl Iterator<Item = &'a DiscreteEdge> + 'a {
        let start = self.edges.partition_point(|e| &e.from < s);
        self.edges[start..].iter().take_while(move |e| &e.from == s)
    }

    pub fn has_edge(&self, s: &TimefulState, t: &TimefulState) -> bool {
        self.successors(s).any(|e| &e.to == t)
    }

    /// Edges produced by the given rule.
    pub fn edges_by(&self, rule: StepRule) -> Vec<&DiscreteEdge> {
        self.edges.iter().filter(|e| e.rules.contains(&rule)).collect()
    }

    /// Traces from initial states, cut at `max_rank`.
    ///
    /// Under `HalfOpen`, a trace whose last step is a final step and that
    /// cannot continue loses that last state.
    pub fn traces(&self, max_rank: usize, conv: SamplingConvention) -> Result<BTreeSet<Vec<TimefulState>>> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<(Vec<TimefulState>, bool)> = self.initial.iter().rev().map(|s| (vec![s.clone()], false)).collect();
        while let Some((path, by_final)) = stack.pop() {
            let last = path.last().expect("nonempty trace");
            let next: Vec<&DiscreteEdge> = if last.rank >= max_rank { Vec::new() } else { self.successors(last).collect() };
            if next.is_empty() {
                let mut p = path;
                if by_final && conv == SamplingConvention::HalfOpen && self.successors(p.last().unwrap()).next().is_none() {
                    p.pop();
                }
                out.insert(p);
                if out.len() > MAX_TRACES {
                    return Err(Error::BranchingExplosion(MAX_TRACES));
                }
                continue;
            }
            for e in next.into_iter().rev() {
                let mut p = path.clone();
                p.push(e.to.clone());
                stack.push((p, e.rules.contains(&StepRule::Final)));
            }
        }
        Ok(out)
    }
}

/// Ranks `n` with `n * delta` in `dom(c)`, up to `max_rank`.
fn grid_ranks(i: &TimeInterval, delta: &Q, max_rank: usize) -> Vec<usize> {
    let first = (i.lo() / delta).ceil().to_integer().to_usize().unwrap_or(0);
    (first..=max_rank)
        .take_while(|&n| i.end_at_least(&time_of(n, delta)))
        .filter(|&n| i.contains(&time_of(n, delta)))
        .collect()
}

/// Grid states of a configuration, up to `max_rank`.
pub fn grid_states(c: &Configuration, delta: &Q, max_rank: usize) -> Vec<TimefulState> {
    grid_ranks(c.interval(), delta, max_rank)
        .into_iter()
        .map(|n| TimefulState {
            state: c.eval(&time_of(n, delta)).expect("rank inside the interval"),
            rank: n,
        })
        .collect()
}

/// `α_δ(τ)` restricted to ranks `<= max_rank`.
///
/// Frontier configurations get no final step since their successors are unknown.
pub fn hts_discretize(tau: &ExplicitSystem, delta: &Q, max_rank: usize) -> Result<DiscreteSystem> {
    let al = grid_alignment_check(tau, delta);
    if let Some((index, detail)) = al.witness {
        return Err(Error::Misaligned { index, detail });
    }
    let mut states = BTreeSet::new();
    let mut edges: BTreeMap<(TimefulState, TimefulState), BTreeSet<StepRule>> = BTreeMap::new();
    let mut add = |from: TimefulState, to: TimefulState, rule: StepRule| {
        edges.entry((from, to)).or_default().insert(rule);
    };
    let reached: BTreeSet<usize> = tau.initial.iter().copied().chain(tau.edges.iter().map(|e| e.1)).collect();
    for (i, c) in tau.configs.iter().enumerate() {
        let grid = grid_states(c, delta, max_rank);
        states.extend(grid.iter().cloned());
        let last_before_end = match c.e() {
            TimePoint::Finite(e) => rank_of(e, delta).map(|k| k - 1),
            TimePoint::Infinity => None,
        };
        if reached.contains(&i) {
            for w in grid.windows(2) {
                if Some(w[0].rank) != last_before_end {
                    add(w[0].clone(), w[1].clone(), StepRule::Interior);
                }
            }
        }
        let Some(n) = last_before_end else { continue };
        if n + 1 > max_rank {
            continue;
        }
        let t_end = time_of(n + 1, delta);
        let from = TimefulState {
            state: c.eval(&time_of(n, delta)).expect("last grid point inside"),
            rank: n,
        };
        for j in tau.successors(i) {
            let to = TimefulState {
                state: tau.configs[j].eval(&t_end).expect("successor starts at the end"),
                rank: n + 1,
            };
            states.insert(to.clone());
            add(from.clone(), to, StepRule::Jump);
        }
        if tau.is_blocking(i) {
            if let Some(state) = c.eval(&t_end) {
                add(from.clone(), TimefulState { state, rank: n + 1 }, StepRule::Final);
            }
        }
    }
    let initial = tau
        .initial
        .iter()
        .map(|&i| TimefulState {
            state: tau.configs[i].eval(&Q::zero()).expect("initial configuration starts at 0"),
            rank: 0,
        })
        .collect();
    Ok(DiscreteSystem {
        delta: delta.clone(),
        max_rank,
        states,
        initial,
        edges: edges.into_iter().map(|((from, to), rules)| DiscreteEdge { from, to, rules }).collect(),
    })
}

fn cut(trace: &[TimefulState], max_rank: usize) -> Vec<TimefulState> {
    trace.iter().filter(|s| s.rank <= max_rank).cloned().collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Theorem6Report {
    pub equal: bool,
    pub sampled: usize,
    pub generated: usize,
    /// In the sampled semantics only.
    pub only_sampled: Vec<Vec<TimefulState>>,
    /// Generated by the discrete system only.
    pub only_generated: Vec<Vec<TimefulState>>,
    /// No grid state is shared by two distinct configurations.
    pub grid_determinism: bool,
    pub determinism_witness: Option<TimefulState>,
}

/// Whether two distinct configurations pass through the same grid state.
pub fn shared_grid_state(tau: &ExplicitSystem, delta: &Q, max_rank: usize) -> Option<TimefulState> {
    let mut owner: BTreeMap<TimefulState, usize> = BTreeMap::new();
    for (i, c) in tau.configs.iter().enumerate() {
        for s in grid_states(c, delta, max_rank) {
            match owner.get(&s) {
                Some(&k) if tau.configs[k] != *c => return Some(s),
                Some(_) => {}
                None => {
                    owner.insert(s, i);
                }
            }
        }
    }
    None
}

/// `α_δ(⟦τ⟧)` against the traces of `α_δ(τ)`, up to rank `floor(horizon / delta)`.
///
/// Both sides are generated one step past the horizon and then cut, so that
/// bound effects stay outside the compared ranks.
pub fn theorem6_check(tau: &ExplicitSystem, delta: &Q, horizon: &Q, conv: SamplingConvention) -> Result<Theorem6Report> {
    let n = (horizon / delta).floor().to_integer().to_usize().unwrap_or(0);
    let past = TimePoint::Finite(horizon + delta);
    let d = hts_discretize(tau, delta, n + 1)?;
    let sem = tau.generate(&past, n + 3)?;
    let sampled: BTreeSet<Vec<TimefulState>> =
        sem.trajectories.iter().map(|s| cut(&timeful_sample_within(s, delta, n + 1, conv), n)).collect();
    let generated: BTreeSet<Vec<TimefulState>> = d.traces(n, conv)?.into_iter().collect();
    let only_sampled: Vec<_> = sampled.difference(&generated).cloned().collect();
    let only_generated: Vec<_> = generated.difference(&sampled).cloned().collect();
    let witness = shared_grid_state(tau, delta, n);
    Ok(Theorem6Report {
        equal: only_sampled.is_empty() && only_generated.is_empty(),
        sampled: sampled.len(),
        generated: generated.len(),
        only_sampled,
        only_generated,
        grid_determinism: witness.is_none(),
        determinism_witness: witness,
    })
}

/// `α_δ(r)` over the states of two discrete systems.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteRelation {
    pub pairs: BTreeSet<(TimefulState, TimefulState)>,
}

impl DiscreteRelation {
    pub fn contains(&self, s: &TimefulState, sb: &TimefulState) -> bool {
        self.pairs.contains(&(s.clone(), sb.clone()))
    }

    pub fn related_to<'a>(&'a self, s: &'a TimefulState) -> impl Iterator<Item = &'a TimefulState> + 'a {
        self.pairs.iter().filter(move |p| &p.0 == s).map(|p| &p.1)
    }
}

fn in_dom(r: &dyn TimedRelation, t: &Q) -> bool {
    match r.domain() {
        None => true,
        Some(d) => d.iter().any(|i| i.contains(t)),
    }
}

/// Equal-rank pairs related at their grid time; errors when a rank covered by
/// a concrete state lies outside `dom(r)`.
pub fn relation_discretize(r: &dyn TimedRelation, d: &DiscreteSystem, db: &DiscreteSystem) -> Result<DiscreteRelation> {
    let delta = &d.delta;
    let mut by_rank: BTreeMap<usize, Vec<&TimefulState>> = BTreeMap::new();
    for s in &db.states {
        by_rank.entry(s.rank).or_default().push(s);
    }
    let mut pairs = BTreeSet::new();
    for s in &d.states {
        let t = time_of(s.rank, delta);
        if !in_dom(r, &t) {
            return Err(Error::DomainGapAtGridPoint(format!("{} (t = {})", s.rank, show_q(&t))));
        }
        for sb in by_rank.get(&s.rank).into_iter().flatten() {
            if r.holds_at(&t, &s.state, &sb.state)? {
                pairs.insert((s.clone(), (*sb).clone()));
            }
        }
    }
    Ok(DiscreteRelation { pairs })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MilnerWitness {
    pub concrete: TimefulState,
    pub abstract_state: TimefulState,
    pub step: TimefulState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MilnerReport {
    pub holds: bool,
    pub pairs: usize,
    pub witness: Option<MilnerWitness>,
}

fn unmatched_step(rel: &DiscreteRelation, d: &DiscreteSystem, db: &DiscreteSystem, s: &TimefulState, sb: &TimefulState) -> Option<TimefulState> {
    d.successors(s)
        .find(|e| !db.successors(sb).any(|eb| rel.contains(&e.to, &eb.to)))
        .map(|e| e.to.clone())
}

/// Every concrete step from a related pair is matched by an abstract step
/// into a related pair.
pub fn milner_sim_check(rel: &DiscreteRelation, d: &DiscreteSystem, db: &DiscreteSystem) -> MilnerReport {
    for (s, sb) in &rel.pairs {
        if let Some(step) = unmatched_step(rel, d, db, s, sb) {
            return MilnerReport {
                holds: false,
                pairs: rel.pairs.len(),
                witness: Some(MilnerWitness {
                    concrete: s.clone(),
                    abstract_state: sb.clone(),
                    step,
                }),
            };
        }
    }
    MilnerReport {
        holds: true,
        pairs: rel.pairs.len(),
        witness: None,
    }
}

/// Greatest discrete simulation inside `rel`, by repeated removal.
pub fn greatest_discrete_simulation(rel: &DiscreteRelation, d: &DiscreteSystem, db: &DiscreteSystem) -> DiscreteRelation {
    let mut cur = rel.clone();
    loop {
        let bad: Vec<_> = cur
            .pairs
            .iter()
            .filter(|(s, sb)| unmatched_step(&cur, d, db, s, sb).is_some())
            .cloned()
            .collect();
        if bad.is_empty() {
            return cur;
        }
        for p in bad {
            cur.pairs.remove(&p);
        }
    }
}

/// The four hypotheses relating hybrid and discrete simulations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DiscHypothesis {
    /// Every covered grid time is in `dom(r)`.
    GridDomain,
    /// A state related to a concrete grid state is the grid state of an
    /// abstract configuration that is initial or has a predecessor.
    RelatedOrigin,
    /// A related abstract configuration without successor ends with the
    /// concrete one.
    NonBlocking,
    /// Related configurations stay related at grid points, with the listed
    /// end-of-interval cases.
    Compatibility,
}

impl fmt::Display for DiscHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiscHypothesis::GridDomain => "grid-domain",
            DiscHypothesis::RelatedOrigin => "related-origin",
            DiscHypothesis::NonBlocking => "non-blocking",
            DiscHypothesis::Compatibility => "compatibility",
        };
        f.write_str(s)
    }
}

/// Sub-cases of the compatibility hypothesis.
pub mod subcase {
    pub const INTERIOR: &str = "interior";
    pub const CONCRETE_END_SUCCESSOR: &str = "concrete-end/successor";
    pub const CONCRETE_END_JUMP: &str = "concrete-end/jump";
    pub const CONCRETE_END_FINAL: &str = "concrete-end/final";
    pub const ABSTRACT_END_SUCCESSOR: &str = "abstract-end/successor";
    pub const ABSTRACT_END_JUMP: &str = "abstract-end/jump";
    pub const ABSTRACT_END_FINAL: &str = "abstract-end/final";
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub hypothesis: DiscHypothesis,
    pub subcase: Option<&'static str>,
    pub concrete: Option<usize>,
    pub abstract_config: Option<usize>,
    pub rank: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HypothesesReport {
    pub findings: Vec<Finding>,
}

impl HypothesesReport {
    pub fn holds(&self, h: DiscHypothesis) -> bool {
        !self.findings.iter().any(|f| f.hypothesis == h)
    }

    pub fn all_hold(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn violated(&self) -> BTreeSet<DiscHypothesis> {
        self.findings.iter().map(|f| f.hypothesis).collect()
    }

    pub fn subcases(&self) -> BTreeSet<&'static str> {
        self.findings.iter().filter_map(|f| f.subcase).collect()
    }
}

/// Some `t` in both intervals and `dom(r)` with `<c_t, d_t> ∈ r(t)`.
fn related_somewhere(r: &dyn TimedRelation, c: &Configuration, d: &Configuration) -> Result<bool> {
    let Some(w) = c.interval().intersect(d.interval()) else {
        return Ok(false);
    };
    let target = w.as_span();
    let parts: Vec<Span> = match r.domain() {
        None => vec![target],
        Some(dom) => dom.iter().filter_map(|i| target.intersect(&i.as_span())).collect(),
    };
    for p in parts {
        if r.satisfied_spans(c, d, &p)?.iter().any(|s| !s.is_empty()) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn end_state(c: &Configuration, t: &Q) -> State {
    c.closure().eval(t).expect("end of a bounded configuration")
}

/// Checks the four hypotheses over the configuration universes, up to `max_rank`.
///
/// The jump sub-cases are read as applying to configurations that have a
/// successor; without one they would contradict the final sub-cases.
pub fn discretization_hypotheses(
    r: &dyn TimedRelation,
    tau: &ExplicitSystem,
    tau_bar: &ExplicitSystem,
    delta: &Q,
    max_rank: usize,
) -> Result<HypothesesReport> {
    for sys in [tau, tau_bar] {
        if let Some((index, detail)) = grid_alignment_check(sys, delta).witness {
            return Err(Error::Misaligned { index, detail });
        }
    }
    let mut out = Vec::new();
    let mut find = |h, subcase, c: Option<usize>, cb: Option<usize>, rank: Option<usize>, detail: String| {
        out.push(Finding {
            hypothesis: h,
            subcase,
            concrete: c,
            abstract_config: cb,
            rank,
            detail,
        })
    };
    let gridded: Vec<Vec<TimefulState>> = tau.configs.iter().map(|c| grid_states(c, delta, max_rank)).collect();

    let mut gaps = BTreeSet::new();
    for (i, g) in gridded.iter().enumerate() {
        for s in g {
            if !in_dom(r, &time_of(s.rank, delta)) && gaps.insert(s.rank) {
                find(DiscHypothesis::GridDomain, None, Some(i), None, Some(s.rank), format!("t = {} outside dom(r)", show_q(&time_of(s.rank, delta))));
            }
        }
    }

    let reached: BTreeSet<usize> = tau_bar.initial.iter().copied().chain(tau_bar.edges.iter().map(|e| e.1)).collect();
    let mut abstract_grid: BTreeMap<usize, BTreeSet<(State, usize)>> = BTreeMap::new();
    for (k, cb) in tau_bar.configs.iter().enumerate() {
        for s in grid_states(cb, delta, max_rank) {
            abstract_grid.entry(s.rank).or_default().insert((s.state, k));
        }
    }
    for (i, g) in gridded.iter().enumerate() {
        for s in g {
            let t = time_of(s.rank, delta);
            if !in_dom(r, &t) {
                continue;
            }
            let Some(cands) = abstract_grid.get(&s.rank) else { continue };
            let states: BTreeSet<&State> = cands.iter().map(|x| &x.0).collect();
            for sb in states {
                if !r.holds_at(&t, &s.state, sb)? {
                    continue;
                }
                let origin = cands.iter().any(|(x, k)| x == sb && reached.contains(k));
                if !origin {
                    let k = cands.iter().find(|(x, _)| x == sb).map(|x| x.1);
                    find(DiscHypothesis::RelatedOrigin, None, Some(i), k, Some(s.rank), format!("{sb} is not a state of an initial or successor configuration"));
                }
            }
        }
    }

    for (i, c) in tau.configs.iter().enumerate() {
        let c_succ: Vec<usize> = tau.successors(i).collect();
        for (k, cb) in tau_bar.configs.iter().enumerate() {
            if !related_somewhere(r, c, cb)? {
                continue;
            }
            if tau_bar.is_blocking(k) && cb.e() != c.e() {
                find(DiscHypothesis::NonBlocking, None, Some(i), Some(k), None, format!("abstract ends at {} while concrete ends at {}", cb.e(), c.e()));
            }
            let Some(common) = c.interval().intersect(cb.interval()) else { continue };
            for n in grid_ranks(&common, delta, max_rank) {
                let t = time_of(n, delta);
                if c.e().cmp_q(&t).is_eq() || cb.e().cmp_q(&t).is_eq() {
                    continue;
                }
                if !r.holds_at(&t, &c.eval(&t).unwrap(), &cb.eval(&t).unwrap())? {
                    find(DiscHypothesis::Compatibility, Some(subcase::INTERIOR), Some(i), Some(k), Some(n), "states not related".into());
                }
            }
            // concrete configuration ends inside the abstract one
            if let TimePoint::Finite(e) = c.e() {
                if let (Some(n), true) = (rank_of(e, delta), cb.interval().contains(e)) {
                    let (sc, sb) = (end_state(c, e), cb.eval(e).unwrap());
                    let related = r.holds_at(e, &sc, &sb)?;
                    for &j in &c_succ {
                        if !r.holds_at(e, &tau.configs[j].eval(e).unwrap(), &sb)? {
                            find(DiscHypothesis::Compatibility, Some(subcase::CONCRETE_END_SUCCESSOR), Some(i), Some(k), Some(n), format!("successor {j} not related"));
                        }
                    }
                    let continued = c_succ.iter().any(|&j| tau.configs[j].eval(e).as_ref() == Some(&sc));
                    if !c_succ.is_empty() && !continued && related {
                        find(DiscHypothesis::Compatibility, Some(subcase::CONCRETE_END_JUMP), Some(i), Some(k), Some(n), "end state related although every successor jumps".into());
                    }
                    if c_succ.is_empty() && !tau.frontier.contains(&i) && !related {
                        find(DiscHypothesis::Compatibility, Some(subcase::CONCRETE_END_FINAL), Some(i), Some(k), Some(n), "final state not related".into());
                    }
                }
            }
            // abstract configuration ends inside the concrete one
            if let TimePoint::Finite(e) = cb.e() {
                if let (Some(n), true) = (rank_of(e, delta), c.interval().contains(e)) {
                    let (sc, sb) = (c.eval(e).unwrap(), end_state(cb, e));
                    let related = r.holds_at(e, &sc, &sb)?;
                    let b_succ: Vec<usize> = tau_bar.successors(k).collect();
                    for &j in &b_succ {
                        if !r.holds_at(e, &sc, &tau_bar.configs[j].eval(e).unwrap())? {
                            find(DiscHypothesis::Compatibility, Some(subcase::ABSTRACT_END_SUCCESSOR), Some(i), Some(k), Some(n), format!("abstract successor {j} not related"));
                        }
                    }
                    let continued = b_succ.iter().any(|&j| tau_bar.configs[j].eval(e).as_ref() == Some(&sb));
                    if !b_succ.is_empty() && !continued && related {
                        find(DiscHypothesis::Compatibility, Some(subcase::ABSTRACT_END_JUMP), Some(i), Some(k), Some(n), "end state related although every abstract successor jumps".into());
                    }
                    if tau_bar.is_blocking(k) && !related {
                        find(DiscHypothesis::Compatibility, Some(subcase::ABSTRACT_END_FINAL), Some(i), Some(k), Some(n), "abstract final state not related".into());
                    }
                }
            }
        }
    }
    Ok(HypothesesReport { findings: out })
}

/// Rank-free discretization, kept to show the spurious cycles it creates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TimelessDemo {
    pub edges: BTreeSet<(State, State)>,
    pub self_loops: Vec<State>,
    /// Rank-stripped samples of the trajectories.
    pub sampled: BTreeSet<Vec<State>>,
    /// Paths of the rank-free system from initial states, up to the length bound.
    pub generated: BTreeSet<Vec<State>>,
    pub strict_overapproximation: bool,
}

pub fn timeless_demo(tau: &ExplicitSystem, delta: &Q, horizon: &Q, max_len: usize) -> Result<TimelessDemo> {
    let n = (horizon / delta).floor().to_integer().to_usize().unwrap_or(0);
    let d = hts_discretize(tau, delta, n + 1)?;
    let edges: BTreeSet<(State, State)> = d.edges.iter().map(|e| (e.from.state.clone(), e.to.state.clone())).collect();
    let self_loops = edges.iter().filter(|(a, b)| a == b).map(|(a, _)| a.clone()).collect();
    let sampled: BTreeSet<Vec<State>> = tau
        .generate(&TimePoint::Finite(horizon + delta), n + 3)?
        .trajectories
        .iter()
        .map(|s| cut(&timeful_sample_within(s, delta, n + 1, SamplingConvention::HalfOpen), n).into_iter().map(|x| x.state).collect())
        .collect();
    let mut generated = BTreeSet::new();
    let mut frontier: Vec<Vec<State>> = d.initial.iter().map(|s| vec![s.state.clone()]).collect();
    while let Some(p) = frontier.pop() {
        if p.len() < max_len {
            for (a, b) in &edges {
                if a == p.last().unwrap() {
                    let mut q = p.clone();
                    q.push(b.clone());
                    frontier.push(q);
                }
            }
        }
        generated.insert(p);
    }
    let strict_overapproximation = sampled.is_subset(&generated) && generated.len() > sampled.len();
    Ok(TimelessDemo {
        edges,
        self_loops,
        sampled,
        generated,
        strict_overapproximation,
    })
}

/// Hybrid simulation, the four hypotheses, and the discrete simulation they
/// are meant to yield.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Theorem7Report {
    pub simulation: SimReport,
    pub hypotheses: HypothesesReport,
    pub milner: MilnerReport,
    /// Simulation and all four hypotheses hold.
    pub premises: bool,
    /// The premises hold and so does the discrete simulation: the theorem is
    /// confirmed on this instance. False when a premise fails.
    pub confirmed: bool,
}

pub fn theorem7_check(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem, delta: &Q, max_rank: usize) -> Result<Theorem7Report> {
    let simulation = sim_check(r, tau, tau_bar, SimMode::Async)?;
    let hypotheses = discretization_hypotheses(r, tau, tau_bar, delta, max_rank)?;
    let d = hts_discretize(tau, delta, max_rank)?;
    let db = hts_discretize(tau_bar, delta, max_rank)?;
    let rel = relation_discretize(r, &d, &db)?;
    let milner = milner_sim_check(&rel, &d, &db);
    let premises = simulation.verdict && hypotheses.all_hold();
    Ok(Theorem7Report {
        confirmed: premises && milner.holds,
        simulation,
        hypotheses,
        milner,
        premises,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};
    use crate::relation::ClauseRelation;

    fn konst(mode: &str, v: i64, lo: i64, hi: i64, closed: bool) -> Configuration {
        Configuration::affine(mode, &[("x", int(v), int(0))], TimeInterval::raw(int(lo), TimePoint::Finite(int(hi)), closed))
    }

    fn st(mode: &str, x: Q, rank: usize) -> TimefulState {
        TimefulState {
            state: State::new(mode, &[("x", x)]),
            rank,
        }
    }

    fn single_constant() -> ExplicitSystem {
        ExplicitSystem::new(vec![konst("s", 0, 0, 2, true)], q(1, 100)).with_initial(&[0])
    }

    #[test]
    fn single_configuration_sets() {
        let tau = single_constant();
        let s = tau.generate(&TimePoint::Infinity, 5).unwrap().trajectories[0].clone();
        let s0 = st("s", int(0), 0);
        let s1 = st("s", int(0), 1);
        let s2 = st("s", int(0), 2);
        assert_eq!(timeful_sample(&s, &int(1), SamplingConvention::HalfOpen).unwrap(), vec![s0.clone(), s1.clone()]);
        assert_eq!(timeful_sample(&s, &int(1), SamplingConvention::Closed).unwrap(), vec![s0.clone(), s1.clone(), s2.clone()]);
        let d = hts_discretize(&tau, &int(1), 4).unwrap();
        assert!(d.edges_by(StepRule::Jump).is_empty());
        assert_eq!(d.edges_by(StepRule::Interior).len(), 1);
        assert_eq!(d.edges_by(StepRule::Final).len(), 1);
        let half = d.traces(4, SamplingConvention::HalfOpen).unwrap();
        assert_eq!(half, BTreeSet::from([vec![s0.clone(), s1.clone()]]));
        let closed = d.traces(4, SamplingConvention::Closed).unwrap();
        assert_eq!(closed, BTreeSet::from([vec![s0, s1, s2]]));
        for conv in [SamplingConvention::HalfOpen, SamplingConvention::Closed] {
            assert!(theorem6_check(&tau, &int(1), &int(4), conv).unwrap().equal);
        }
        let demo = timeless_demo(&tau, &int(1), &int(4), 5).unwrap();
        assert_eq!(demo.self_loops.len(), 1);
        assert_eq!(demo.sampled.len(), 1);
        assert!(demo.strict_overapproximation);
    }

    #[test]
    fn two_configuration_layout() {
        // c on [0,2) with x = t, c' on [2,4] with x = 10 + t
        let c = Configuration::affine("m", &[("x", int(0), int(1))], TimeInterval::raw(int(0), TimePoint::Finite(int(2)), false));
        let c2 = Configuration::affine("n", &[("x", int(12), int(1))], TimeInterval::raw(int(2), TimePoint::Finite(int(4)), true));
        let tau = ExplicitSystem::new(vec![c, c2], q(1, 100)).with_initial(&[0]).with_edges(&[(0, 1)]);
        let d = hts_discretize(&tau, &int(1), 10).unwrap();
        let got: BTreeSet<(TimefulState, TimefulState, StepRule)> = d
            .edges
            .iter()
            .flat_map(|e| e.rules.iter().map(|r| (e.from.clone(), e.to.clone(), *r)).collect::<Vec<_>>())
            .collect();
        let want = BTreeSet::from([
            (st("m", int(0), 0), st("m", int(1), 1), StepRule::Interior),
            (st("m", int(1), 1), st("n", int(12), 2), StepRule::Jump),
            (st("n", int(12), 2), st("n", int(13), 3), StepRule::Interior),
            (st("n", int(13), 3), st("n", int(14), 4), StepRule::Final),
        ]);
        assert_eq!(got, want);
        assert!(theorem6_check(&tau, &int(1), &int(9), SamplingConvention::HalfOpen).unwrap().equal);
        assert!(theorem6_check(&tau, &int(1), &int(9), SamplingConvention::Closed).unwrap().equal);
    }

    #[test]
    fn alignment_witness() {
        let tau = ExplicitSystem::new(vec![konst("s", 0, 0, 3, true)], q(1, 100)).with_initial(&[0]);
        assert!(grid_alignment_check(&tau, &int(1)).aligned);
        assert!(grid_alignment_check(&tau, &q(1, 2)).aligned);
        let al = grid_alignment_check(&tau, &int(2));
        assert_eq!(al.witness.unwrap().0, 0);
        assert!(matches!(hts_discretize(&tau, &int(2), 4), Err(Error::Misaligned { .. })));
    }

    #[test]
    fn crossing_flows_break_grid_determinism() {
        // a: x = t then b: x = 1 + t ; a': x = 2 - t then b': x = 5 ; a and a' meet at t = 1
        let a = Configuration::affine("m", &[("x", int(0), int(1))], TimeInterval::raw(int(0), TimePoint::Finite(int(2)), false));
        let a2 = Configuration::affine("m", &[("x", int(2), int(-1))], TimeInterval::raw(int(0), TimePoint::Finite(int(2)), false));
        let b = konst("m", 7, 2, 3, true);
        let b2 = konst("m", 9, 2, 3, true);
        let tau = ExplicitSystem::new(vec![a, a2, b, b2], q(1, 100)).with_initial(&[0, 1]).with_edges(&[(0, 2), (1, 3)]);
        let rep = theorem6_check(&tau, &int(1), &int(3), SamplingConvention::Closed).unwrap();
        assert!(!rep.grid_determinism);
        assert!(!rep.equal);
        assert_eq!(rep.only_generated.len(), 2);
    }

    #[test]
    fn equality_relation_and_milner() {
        let tau = single_constant();
        let d = hts_discretize(&tau, &int(1), 4).unwrap();
        let r = ClauseRelation::equality(&["s"], &["x"]);
        let rel = relation_discretize(&r, &d, &d).unwrap();
        assert_eq!(rel.pairs.len(), d.states.len());
        assert!(rel.pairs.iter().all(|(a, b)| a == b));
        assert!(milner_sim_check(&rel, &d, &d).holds);
        assert!(milner_sim_check(&DiscreteRelation::default(), &d, &d).holds);
        let rep = discretization_hypotheses(&r, &tau, &tau, &int(1), 4).unwrap();
        assert!(rep.all_hold(), "{:?}", rep.findings);
    }

    #[test]
    fn blocking_abstract_fails_milner_and_non_blocking() {
        // concrete lasts [0,3], abstract the same constant on [0,2]
        let tau = ExplicitSystem::new(vec![konst("s", 0, 0, 3, true)], q(1, 100)).with_initial(&[0]);
        let tb = single_constant();
        let r = ClauseRelation::equality(&["s"], &["x"]);
        let d = hts_discretize(&tau, &int(1), 5).unwrap();
        let db = hts_discretize(&tb, &int(1), 5).unwrap();
        let rel = relation_discretize(&r, &d, &db).unwrap();
        let m = milner_sim_check(&rel, &d, &db);
        assert!(!m.holds);
        assert_eq!(m.witness.unwrap().concrete.rank, 2);
        let rep = discretization_hypotheses(&r, &tau, &tb, &int(1), 5).unwrap();
        assert!(!rep.holds(DiscHypothesis::NonBlocking));
        let g = greatest_discrete_simulation(&rel, &d, &db);
        assert!(milner_sim_check(&g, &d, &db).holds);
        assert!(g.pairs.len() < rel.pairs.len());
    }
}
