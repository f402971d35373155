//! Hybrid simulations between explicit systems.
//!
//! A concrete step `c -> c'` is matched by an abstract step `c̄ -> c̄'` (or by
//! the abstract side staying put, written `None` here for the empty successor)
//! after both sides are spliced to the common window
//! `[min(b(c'), b(c̄')), min(e(c'), e(c̄')))`. An empty successor is ignored by
//! both minima.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::Configuration;
use crate::hts::ExplicitSystem;
use crate::rational::{show_q, Q};
use crate::relation::{config_related, config_witness, traj_related_timewise, ConfigRelation, TimedRelation, Verdict};
use crate::time::{Span, TimeInterval, TimePoint};
use crate::trajectory::Trajectory;

/// Upper bound on `|C| · |C̄|` for the exhaustive checks.
pub const MAX_PAIRS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Async,
    Sync,
}

/// The common window of a spliced pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    #[serde(with = "crate::rational::serde_q")]
    pub lo: Q,
    pub hi: TimePoint,
    pub closed: bool,
}

impl Window {
    /// `None` when both successors are empty.
    pub fn of(cp: Option<&Configuration>, ap: Option<&Configuration>) -> Option<Window> {
        let present: Vec<&Configuration> = cp.into_iter().chain(ap).collect();
        let lo = present.iter().map(|c| c.b()).min()?.clone();
        let hi = present.iter().map(|c| c.e()).min()?.clone();
        let closed = hi.is_finite() && present.iter().all(|c| c.e() > &hi || c.is_closed());
        Some(Window { lo, hi, closed })
    }

    pub fn span(&self) -> Option<Span> {
        Span::new(self.lo.clone(), true, self.hi.clone(), self.closed)
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let close = if self.closed { ']' } else { ')' };
        write!(f, "[{}, {}{}", show_q(&self.lo), self.hi, close)
    }
}

/// `c $ c' <w>`, or `c <w>` for the empty successor; `None` when empty.
pub fn splice(c: &Configuration, succ: Option<&Configuration>, w: &Window) -> Result<Option<Configuration>> {
    let base = match succ {
        Some(s) => c.concat(s)?,
        None => c.clone(),
    };
    Ok(base.slice_raw(&w.lo, &w.hi, w.closed))
}

/// One abstract option for a concrete step, with its spliced pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Candidate {
    /// Index of `c̄'` in the abstract universe; `None` for the empty successor.
    pub successor: Option<usize>,
    pub window: Window,
    pub concrete: Configuration,
    pub abstract_config: Configuration,
}

/// The outcome of one concrete step from a pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub accepted: Vec<Candidate>,
    /// Rejected options with a reason.
    pub rejected: Vec<(Option<usize>, String)>,
}

fn describe(side: Option<usize>) -> String {
    side.map_or_else(|| "empty".to_string(), |k| format!("#{k}"))
}

/// Abstract options for the concrete step `c -> c'` from `<c, c̄>` under `γ(r)`.
///
/// `c_prime = None` is the empty concrete successor, which is matched by an
/// abstract step alone.
pub fn sim_transfer(
    r: &dyn TimedRelation,
    tau: &ExplicitSystem,
    tau_bar: &ExplicitSystem,
    c: usize,
    cb: usize,
    c_prime: Option<usize>,
) -> Result<Transfer> {
    let cc = &tau.configs[c];
    let ca = &tau_bar.configs[cb];
    let cp = c_prime.map(|j| &tau.configs[j]);
    let mut options: Vec<Option<usize>> = tau_bar.successors(cb).map(Some).collect();
    if c_prime.is_some() {
        options.push(None);
    }
    let mut out = Transfer {
        accepted: Vec::new(),
        rejected: Vec::new(),
    };
    for opt in options {
        let ap = opt.map(|k| &tau_bar.configs[k]);
        let w = Window::of(cp, ap).expect("one successor is present");
        let sc = splice(cc, cp, &w)?;
        let sa = splice(ca, ap, &w)?;
        let (Some(sc), Some(sa)) = (sc, sa) else {
            out.rejected.push((opt, format!("splice window {w} misses a side")));
            continue;
        };
        match config_witness(r, &sc, &sa)? {
            None => out.accepted.push(Candidate {
                successor: opt,
                window: w,
                concrete: sc,
                abstract_config: sa,
            }),
            Some(None) => out.rejected.push((opt, format!("spliced pair does not overlap in {w}"))),
            Some(Some(t)) => out.rejected.push((opt, format!("spliced pair unrelated at t={}", show_q(&t)))),
        }
    }
    Ok(out)
}

/// Synchronous form: `<c', c̄'<b(c'), e(c')>>` must be related, with `c̄` itself
/// standing for an empty abstract successor.
fn sync_transfer(
    r: &dyn TimedRelation,
    tau: &ExplicitSystem,
    tau_bar: &ExplicitSystem,
    cb: usize,
    c_prime: usize,
) -> Result<Transfer> {
    let cp = &tau.configs[c_prime];
    let w = Window {
        lo: cp.b().clone(),
        hi: cp.e().clone(),
        closed: cp.is_closed(),
    };
    let mut out = Transfer {
        accepted: Vec::new(),
        rejected: Vec::new(),
    };
    let options: Vec<Option<usize>> = tau_bar.successors(cb).map(Some).chain([None]).collect();
    for opt in options {
        let a = &tau_bar.configs[opt.unwrap_or(cb)];
        let Some(sa) = a.slice_raw(&w.lo, &w.hi, w.closed) else {
            out.rejected.push((opt, format!("abstract side misses {w}")));
            continue;
        };
        match config_witness(r, cp, &sa)? {
            None => out.accepted.push(Candidate {
                successor: opt,
                window: w.clone(),
                concrete: cp.clone(),
                abstract_config: sa,
            }),
            Some(None) => out.rejected.push((opt, format!("no overlap in {w}"))),
            Some(Some(t)) => out.rejected.push((opt, format!("unrelated at t={}", show_q(&t)))),
        }
    }
    Ok(out)
}

/// The pair the matcher moves to after a concrete step and an abstract option.
///
/// The concrete side advances unless the abstract successor ends before the
/// concrete step starts; the abstract side advances when its successor meets
/// the concrete step's window.
fn next_pair(tau: &ExplicitSystem, tau_bar: &ExplicitSystem, c: usize, cb: usize, cp: usize, opt: Option<usize>) -> (usize, usize) {
    match opt {
        None => (cp, cb),
        Some(k) => {
            let (ccp, ck) = (&tau.configs[cp], &tau_bar.configs[k]);
            let concrete = if ck.e().cmp_q(ccp.b()).is_gt() { cp } else { c };
            let abstr = if ccp.e().cmp_q(ck.b()).is_gt() { k } else { cb };
            (concrete, abstr)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub concrete: Configuration,
    pub abstract_config: Configuration,
    pub successor: Option<Configuration>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hypothesis {
    pub holds: bool,
    pub witness: Option<String>,
}

impl Hypothesis {
    fn from_witness(w: Option<String>) -> Self {
        Hypothesis {
            holds: w.is_none(),
            witness: w,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub verdict: bool,
    pub violations: Vec<Violation>,
    /// Keys: `init`, `blocking`, `well_nested`, `progress`.
    pub hypotheses: BTreeMap<String, Hypothesis>,
    /// Related pairs examined.
    pub pairs_checked: usize,
    /// Set when some configuration has successors beyond the instantiation bound.
    pub horizon_bounded: bool,
}

impl SimReport {
    pub fn hypothesis(&self, key: &str) -> bool {
        self.hypotheses.get(key).is_some_and(|h| h.holds)
    }
}

fn check_size(tau: &ExplicitSystem, tau_bar: &ExplicitSystem) -> Result<()> {
    let n = tau.configs.len().saturating_mul(tau_bar.configs.len());
    if n > MAX_PAIRS {
        return Err(Error::UniverseTooLarge(n));
    }
    Ok(())
}

fn pair_label(tau: &ExplicitSystem, tau_bar: &ExplicitSystem, c: usize, cb: usize) -> String {
    format!("concrete #{c} {} vs abstract #{cb} {}", tau.configs[c], tau_bar.configs[cb])
}

/// `∀c ∈ C0. ∃c̄ ∈ C̄0. <c, c̄> ∈ γ(r)`, with the first unmatched `c`.
fn init_witness(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem) -> Result<Option<usize>> {
    for &c in &tau.initial {
        let mut found = false;
        for &cb in &tau_bar.initial {
            if config_related(r, &tau.configs[c], &tau_bar.configs[cb])? {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

fn related_initial_pairs(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for &c in &tau.initial {
        for &cb in &tau_bar.initial {
            if config_related(r, &tau.configs[c], &tau_bar.configs[cb])? {
                out.push((c, cb));
            }
        }
    }
    Ok(out)
}

fn has_known_successor(s: &ExplicitSystem, i: usize) -> bool {
    s.successors(i).next().is_some()
}

/// Hypotheses evaluated over a set of pairs.
fn pair_hypotheses(
    r: &dyn TimedRelation,
    tau: &ExplicitSystem,
    tau_bar: &ExplicitSystem,
    pairs: &BTreeSet<(usize, usize)>,
) -> Result<BTreeMap<String, Hypothesis>> {
    let label = |&(c, cb): &(usize, usize)| pair_label(tau, tau_bar, c, cb);
    let init = init_witness(r, tau, tau_bar)?.map(|c| format!("initial concrete #{c} {}", tau.configs[c]));
    let blocking = pairs
        .iter()
        .find(|&&(c, cb)| tau.is_blocking(c) && !tau_bar.is_blocking(cb))
        .map(label);
    let nested = pairs
        .iter()
        .find(|&&(c, cb)| !tau.configs[c].interval().is_subset(tau_bar.configs[cb].interval()))
        .map(label);
    let progress = pairs
        .iter()
        .find(|&&(c, cb)| has_known_successor(tau, c) && tau_bar.is_blocking(cb))
        .map(label);
    let mut h = BTreeMap::new();
    h.insert("init".to_string(), Hypothesis::from_witness(init));
    h.insert("blocking".to_string(), Hypothesis::from_witness(blocking));
    h.insert("well_nested".to_string(), Hypothesis::from_witness(nested));
    h.insert("progress".to_string(), Hypothesis::from_witness(progress));
    Ok(h)
}

/// Checks the simulation condition on every pair of `γ(r)` reachable from the
/// related initial pairs through accepted steps.
///
/// The synchronous mode refuses unless every reachable pair is well nested
/// (the concrete interval lies inside the abstract one).
pub fn sim_check(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem, mode: SimMode) -> Result<SimReport> {
    check_size(tau, tau_bar)?;
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for p in related_initial_pairs(r, tau, tau_bar)? {
        if seen.insert(p) {
            queue.push_back(p);
        }
    }
    let mut violations = Vec::new();
    while let Some((c, cb)) = queue.pop_front() {
        if mode == SimMode::Sync && !tau.configs[c].interval().is_subset(tau_bar.configs[cb].interval()) {
            return Err(Error::SyncRequiresWellNesting(pair_label(tau, tau_bar, c, cb)));
        }
        let succ: Vec<usize> = tau.successors(c).collect();
        for cp in succ {
            let tr = match mode {
                SimMode::Async => sim_transfer(r, tau, tau_bar, c, cb, Some(cp))?,
                SimMode::Sync => sync_transfer(r, tau, tau_bar, cb, cp)?,
            };
            if tr.accepted.is_empty() {
                let tried: Vec<String> = tr
                    .rejected
                    .iter()
                    .map(|(o, why)| format!("{}: {why}", describe(*o)))
                    .collect();
                violations.push(Violation {
                    concrete: tau.configs[c].clone(),
                    abstract_config: tau_bar.configs[cb].clone(),
                    successor: Some(tau.configs[cp].clone()),
                    reason: format!("no abstract option matches concrete step to #{cp} ({})", tried.join("; ")),
                });
            }
            for cand in &tr.accepted {
                let next = match mode {
                    SimMode::Async => next_pair(tau, tau_bar, c, cb, cp, cand.successor),
                    SimMode::Sync => (cp, cand.successor.unwrap_or(cb)),
                };
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
    }
    let hypotheses = pair_hypotheses(r, tau, tau_bar, &seen)?;
    Ok(SimReport {
        verdict: violations.is_empty(),
        violations,
        hypotheses,
        pairs_checked: seen.len(),
        horizon_bounded: !tau.frontier.is_empty() || !tau_bar.frontier.is_empty(),
    })
}

/// Swaps the two sides of a timed relation.
pub struct Inverse<'a>(pub &'a dyn TimedRelation);

impl TimedRelation for Inverse<'_> {
    fn holds_at(&self, t: &Q, s: &crate::flow::State, sb: &crate::flow::State) -> Result<bool> {
        self.0.holds_at(t, sb, s)
    }

    fn satisfied_spans(&self, c: &Configuration, d: &Configuration, within: &Span) -> Result<Vec<Span>> {
        self.0.satisfied_spans(d, c, within)
    }

    fn domain(&self) -> Option<Vec<TimeInterval>> {
        self.0.domain()
    }
}

/// Relates every pair of states at every time.
pub struct Full;

impl TimedRelation for Full {
    fn holds_at(&self, _: &Q, _: &crate::flow::State, _: &crate::flow::State) -> Result<bool> {
        Ok(true)
    }

    fn satisfied_spans(&self, _: &Configuration, _: &Configuration, within: &Span) -> Result<Vec<Span>> {
        Ok(vec![within.clone()])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BisimReport {
    pub verdict: bool,
    pub forward: SimReport,
    pub backward: SimReport,
}

/// Simulation in both directions, the backward one for the inverse relation.
pub fn bisim_check(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem) -> Result<BisimReport> {
    let forward = sim_check(r, tau, tau_bar, SimMode::Async)?;
    let inv = Inverse(r);
    let backward = sim_check(&inv, tau_bar, tau, SimMode::Async)?;
    let verdict = forward.verdict && backward.verdict;
    assert!(!verdict || (forward.verdict && backward.verdict));
    Ok(BisimReport {
        verdict,
        forward,
        backward,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PreservationReport {
    /// Every admissible pair of successors yields a related splice.
    pub preservation: bool,
    pub violations: Vec<Violation>,
    pub hypotheses: BTreeMap<String, Hypothesis>,
    /// Preservation, progress and initialization together.
    pub simulation_entailed: bool,
    pub pairs_checked: usize,
}

/// For a two-sided step, each empty successor is admissible only while its
/// side still covers part of the window.
fn preservation_options(tau: &ExplicitSystem, tau_bar: &ExplicitSystem, c: usize, cb: usize) -> Vec<(Option<usize>, Option<usize>)> {
    let cs: Vec<Option<usize>> = tau.successors(c).map(Some).chain([None]).collect();
    let ds: Vec<Option<usize>> = tau_bar.successors(cb).map(Some).chain([None]).collect();
    let mut out = Vec::new();
    for &x in &cs {
        for &y in &ds {
            if x.is_some() || y.is_some() {
                out.push((x, y));
            }
        }
    }
    out
}

/// The spliced pair for a two-sided option; `Ok(None)` when an empty
/// successor's side does not reach the window.
fn pair_splice(
    tau: &ExplicitSystem,
    tau_bar: &ExplicitSystem,
    c: usize,
    cb: usize,
    x: Option<usize>,
    y: Option<usize>,
) -> Result<Option<(Window, Configuration, Configuration)>> {
    let cp = x.map(|j| &tau.configs[j]);
    let ap = y.map(|k| &tau_bar.configs[k]);
    let w = Window::of(cp, ap).expect("one successor is present");
    let sc = splice(&tau.configs[c], cp, &w)?;
    let sa = splice(&tau_bar.configs[cb], ap, &w)?;
    Ok(match (sc, sa) {
        (Some(a), Some(b)) => Some((w, a, b)),
        _ => None,
    })
}

fn two_sided_next(tau: &ExplicitSystem, tau_bar: &ExplicitSystem, c: usize, cb: usize, x: Option<usize>, y: Option<usize>) -> (usize, usize) {
    match x {
        Some(cp) => next_pair(tau, tau_bar, c, cb, cp, y),
        None => (c, y.unwrap_or(cb)),
    }
}

/// The `∀c̄'` form over the pairs of `γ(r)` reachable from related initial
/// pairs, together with progress.
pub fn preservation_check(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem) -> Result<PreservationReport> {
    check_size(tau, tau_bar)?;
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for p in related_initial_pairs(r, tau, tau_bar)? {
        if seen.insert(p) {
            queue.push_back(p);
        }
    }
    let mut violations = Vec::new();
    while let Some((c, cb)) = queue.pop_front() {
        for (x, y) in preservation_options(tau, tau_bar, c, cb) {
            let Some((w, sc, sa)) = pair_splice(tau, tau_bar, c, cb, x, y)? else {
                if x.is_some() && y.is_some() {
                    unreachable!("two present successors always meet the window");
                }
                continue;
            };
            match config_witness(r, &sc, &sa)? {
                None => {
                    let next = two_sided_next(tau, tau_bar, c, cb, x, y);
                    if seen.insert(next) {
                        queue.push_back(next);
                    }
                }
                Some(why) => {
                    let reason = match why {
                        None => format!("spliced pair does not overlap in {w}"),
                        Some(t) => format!("spliced pair unrelated at t={} in {w}", show_q(&t)),
                    };
                    violations.push(Violation {
                        concrete: tau.configs[c].clone(),
                        abstract_config: tau_bar.configs[cb].clone(),
                        successor: x.map(|j| tau.configs[j].clone()),
                        reason: format!("abstract option {}: {reason}", describe(y)),
                    });
                }
            }
        }
    }
    let hypotheses = pair_hypotheses(r, tau, tau_bar, &seen)?;
    let preservation = violations.is_empty();
    let simulation_entailed = preservation && hypotheses["progress"].holds && hypotheses["init"].holds;
    Ok(PreservationReport {
        preservation,
        violations,
        hypotheses,
        simulation_entailed,
        pairs_checked: seen.len(),
    })
}

/// Which functional a greatest fixpoint is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    /// Some abstract option (a step or staying put) matches each concrete step.
    Simulation,
    /// Every admissible pair of successors yields a member.
    Preservation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Key {
    Pair(usize),
    /// A splice outside the universe, decided by the seed.
    Aux(bool),
}

/// Result of a greatest fixpoint over a finite universe.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Greatest {
    /// Index pairs `(c, c̄)` in the fixpoint.
    pub pairs: BTreeSet<(usize, usize)>,
    pub relation: ConfigRelation,
    /// Splices that fell outside the universe and were decided by the seed.
    pub auxiliary: usize,
    pub rounds: usize,
}

struct Indexer {
    map: HashMap<Configuration, usize>,
}

impl Indexer {
    fn new(s: &ExplicitSystem) -> Self {
        let mut map = HashMap::new();
        for (i, c) in s.configs.iter().enumerate() {
            map.entry(c.clone()).or_insert(i);
        }
        Indexer { map }
    }

    fn get(&self, c: &Configuration) -> Option<usize> {
        self.map.get(c).copied()
    }
}

/// Greatest fixpoint of `R ↦ R ∩ F(R)` from the overlapping pairs of `γ(r)`.
///
/// Splices are looked up in the universe. With `strict`, a splice outside it
/// is an error; otherwise it is an auxiliary configuration without successors,
/// so its pairs keep their seed membership.
pub fn greatest_fixpoint(
    r: &dyn TimedRelation,
    tau: &ExplicitSystem,
    tau_bar: &ExplicitSystem,
    functional: Functional,
    strict: bool,
) -> Result<Greatest> {
    check_size(tau, tau_bar)?;
    let (n, m) = (tau.configs.len(), tau_bar.configs.len());
    let id = |c: usize, cb: usize| c * m + cb;
    let mut seed = vec![false; n * m];
    for c in 0..n {
        for cb in 0..m {
            seed[id(c, cb)] = config_related(r, &tau.configs[c], &tau_bar.configs[cb])?;
        }
    }
    let (ic, ia) = (Indexer::new(tau), Indexer::new(tau_bar));
    let mut auxiliary = 0;
    // per seed pair: the obligations, each a disjunction (simulation) or a
    // single member (preservation)
    let mut obligations: Vec<Vec<Vec<Key>>> = vec![Vec::new(); n * m];
    for c in 0..n {
        for cb in 0..m {
            if !seed[id(c, cb)] {
                continue;
            }
            let mut key_of = |sc: &Configuration, sa: &Configuration| -> Result<Key> {
                match (ic.get(sc), ia.get(sa)) {
                    (Some(i), Some(k)) => Ok(Key::Pair(id(i, k))),
                    _ if strict => Err(Error::NotSliceClosed(format!("{sc} / {sa}"))),
                    _ => {
                        auxiliary += 1;
                        Ok(Key::Aux(config_related(r, sc, sa)?))
                    }
                }
            };
            let mut obs = Vec::new();
            match functional {
                Functional::Simulation => {
                    for cp in tau.successors(c).collect::<Vec<_>>() {
                        let mut alts = Vec::new();
                        let ds: Vec<Option<usize>> = tau_bar.successors(cb).map(Some).chain([None]).collect();
                        for y in ds {
                            if let Some((_, sc, sa)) = pair_splice(tau, tau_bar, c, cb, Some(cp), y)? {
                                alts.push(key_of(&sc, &sa)?);
                            }
                        }
                        obs.push(alts);
                    }
                }
                Functional::Preservation => {
                    for (x, y) in preservation_options(tau, tau_bar, c, cb) {
                        if let Some((_, sc, sa)) = pair_splice(tau, tau_bar, c, cb, x, y)? {
                            obs.push(vec![key_of(&sc, &sa)?]);
                        }
                    }
                }
            }
            obligations[id(c, cb)] = obs;
        }
    }
    let mut cur = seed.clone();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let holds = |k: &Key, cur: &[bool]| match k {
            Key::Pair(p) => cur[*p],
            Key::Aux(b) => *b,
        };
        // one round reads the previous iterate only
        let next: Vec<bool> = (0..n * m)
            .map(|p| cur[p] && obligations[p].iter().all(|alts| alts.iter().any(|k| holds(k, &cur))))
            .collect();
        if next == cur {
            break;
        }
        cur = next;
    }
    let pairs: BTreeSet<(usize, usize)> = (0..n * m).filter(|&p| cur[p]).map(|p| (p / m, p % m)).collect();
    let relation = ConfigRelation::new(
        pairs
            .iter()
            .map(|&(c, cb)| (tau.configs[c].clone(), tau_bar.configs[cb].clone()))
            .collect(),
    )?;
    // post-check: the result is a post-fixpoint
    for &(c, cb) in &pairs {
        let ok = obligations[id(c, cb)].iter().all(|alts| {
            alts.iter().any(|k| match k {
                Key::Pair(p) => cur[*p],
                Key::Aux(b) => *b,
            })
        });
        assert!(ok, "greatest fixpoint is not a post-fixpoint");
    }
    Ok(Greatest {
        pairs,
        relation,
        auxiliary,
        rounds,
    })
}

/// The greatest simulation contained in the overlapping pairs of `γ(r)`.
pub fn greatest_simulation(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem, strict: bool) -> Result<Greatest> {
    greatest_fixpoint(r, tau, tau_bar, Functional::Simulation, strict)
}

/// Related pairs from which every concrete step has an accepted abstract
/// option leading back into the set; the pairs the matcher can always extend.
pub fn matching_core(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem) -> Result<BTreeSet<(usize, usize)>> {
    check_size(tau, tau_bar)?;
    let mut moves: BTreeMap<(usize, usize), Vec<Vec<(usize, usize)>>> = BTreeMap::new();
    for c in 0..tau.configs.len() {
        for cb in 0..tau_bar.configs.len() {
            if !config_related(r, &tau.configs[c], &tau_bar.configs[cb])? {
                continue;
            }
            let mut obs = Vec::new();
            for cp in tau.successors(c).collect::<Vec<_>>() {
                let tr = sim_transfer(r, tau, tau_bar, c, cb, Some(cp))?;
                obs.push(
                    tr.accepted
                        .iter()
                        .map(|k| next_pair(tau, tau_bar, c, cb, cp, k.successor))
                        .collect(),
                );
            }
            moves.insert((c, cb), obs);
        }
    }
    let mut core: BTreeSet<(usize, usize)> = moves.keys().copied().collect();
    loop {
        let next: BTreeSet<(usize, usize)> = core
            .iter()
            .copied()
            .filter(|p| moves[p].iter().all(|alts| alts.iter().any(|q| core.contains(q))))
            .collect();
        if next == core {
            return Ok(core);
        }
        core = next;
    }
}

/// One induction step of the matcher.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatchStep {
    pub concrete: usize,
    pub abstract_rank: usize,
    /// How the abstract ends sit against the concrete step `c -> c'`: the
    /// matched abstract configuration ends by `e(c)` (`early-*`), inside
    /// `(e(c), e(c'))` (`within-*`) or at or after `e(c')` (`covers`); the
    /// suffix places the next abstract end the same way.
    pub case: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Match {
    pub abstract_trajectory: Trajectory,
    /// Universe indices of the abstract configurations.
    pub abstract_path: Vec<usize>,
    pub steps: Vec<MatchStep>,
    /// End case when the concrete trajectory stops: the abstract configuration
    /// ends before the last concrete one (`abstract-first`), with it
    /// (`together`) or after it (`concrete-first`).
    pub termination: String,
    /// Independent timewise re-check of the pair.
    pub certified: Verdict,
    /// Both trajectories complete and related over the whole shorter one.
    pub full: bool,
}

fn end_of(c: &Configuration) -> TimePoint {
    c.e().clone()
}

/// Builds an abstract trajectory related to `sigma` step by step, keeping the
/// current pair in the matching core.
///
/// Ties among abstract options go to the smallest end, then to the smallest
/// configuration; the empty successor ranks after every step.
pub fn theorem4_match(r: &dyn TimedRelation, tau: &ExplicitSystem, tau_bar: &ExplicitSystem, sigma: &Trajectory) -> Result<Match> {
    let core = matching_core(r, tau, tau_bar)?;
    theorem4_match_in(r, tau, tau_bar, &core, sigma)
}

/// [`theorem4_match`] with a precomputed core.
pub fn theorem4_match_in(
    r: &dyn TimedRelation,
    tau: &ExplicitSystem,
    tau_bar: &ExplicitSystem,
    core: &BTreeSet<(usize, usize)>,
    sigma: &Trajectory,
) -> Result<Match> {
    let ic = Indexer::new(tau);
    let path: Vec<usize> = sigma
        .configs()
        .iter()
        .map(|c| ic.get(c).ok_or_else(|| Error::LocalSimulationGap(format!("configuration {c} is not in the universe"))))
        .collect::<Result<_>>()?;
    let first = path[0];
    let mut inits: Vec<usize> = tau_bar.initial.iter().copied().filter(|&k| core.contains(&(first, k))).collect();
    inits.sort_by(|&a, &b| {
        let (x, y) = (&tau_bar.configs[a], &tau_bar.configs[b]);
        (x.e(), x).cmp(&(y.e(), y))
    });
    let Some(&k0) = inits.first() else {
        return Err(Error::NoInitialWitness(tau.configs[first].to_string()));
    };
    let mut abs = vec![k0];
    let mut steps = Vec::new();
    let mut j = 0;
    let mut cb = k0;
    while j + 1 < path.len() {
        let (c, cp) = (path[j], path[j + 1]);
        let tr = sim_transfer(r, tau, tau_bar, c, cb, Some(cp))?;
        let mut opts: Vec<(Option<usize>, (usize, usize))> = tr
            .accepted
            .iter()
            .map(|k| (k.successor, next_pair(tau, tau_bar, c, cb, cp, k.successor)))
            .filter(|(_, nx)| core.contains(nx))
            .collect();
        opts.sort_by(|a, b| {
            let key = |o: &Option<usize>| o.map(|k| (end_of(&tau_bar.configs[k]), tau_bar.configs[k].clone()));
            match (key(&a.0), key(&b.0)) {
                (Some(x), Some(y)) => x.cmp(&y),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            }
        });
        let Some(&(opt, (nc, nb))) = opts.first() else {
            return Err(Error::LocalSimulationGap(pair_label(tau, tau_bar, c, cb)));
        };
        let case = overlap_case(&tau.configs[c], &tau.configs[cp], &tau_bar.configs[cb], opt.map(|k| &tau_bar.configs[k]));
        steps.push(MatchStep {
            concrete: j,
            abstract_rank: abs.len() - 1,
            case,
        });
        if nb != cb {
            abs.push(nb);
            cb = nb;
        }
        if nc == cp {
            j += 1;
        }
    }
    let last = &tau.configs[path[j]];
    let alast = &tau_bar.configs[cb];
    let termination = match alast.e().cmp(last.e()) {
        std::cmp::Ordering::Less => "abstract-first",
        std::cmp::Ordering::Equal => "together",
        std::cmp::Ordering::Greater => "concrete-first",
    }
    .to_string();
    let abstract_done = tau_bar.is_blocking(cb);
    let truncated = !abstract_done || sigma.is_truncated();
    let configs: Vec<Configuration> = abs.iter().map(|&k| tau_bar.configs[k].clone()).collect();
    let abstract_trajectory = Trajectory::validate(configs, truncated && !(abstract_done && alast.is_final()))?;
    let certified = traj_related_timewise(r, sigma, &abstract_trajectory)?;
    let full = certified.holds && !sigma.is_truncated() && !abstract_trajectory.is_truncated();
    Ok(Match {
        abstract_trajectory,
        abstract_path: abs,
        steps,
        termination,
        certified,
        full,
    })
}

/// Classifies a matched step by how the abstract ends compare with the
/// concrete ones.
fn overlap_case(c: &Configuration, cp: &Configuration, cb: &Configuration, cbp: Option<&Configuration>) -> String {
    let (ec, ecp, eb) = (c.e(), cp.e(), cb.e());
    let case = if eb <= ec {
        match cbp.map(|x| x.e()) {
            Some(e2) if e2 <= ec => "early-early",
            Some(e2) if e2 <= ecp => "early-within",
            _ => "early-beyond",
        }
    } else if eb >= ecp {
        "covers"
    } else {
        match cbp.map(|x| x.e()) {
            Some(e2) if e2 > ecp => "within-beyond",
            _ => "within-within",
        }
    };
    case.to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NestingReport {
    pub holds: bool,
    /// `(concrete trajectory, abstract trajectory, j, k)` of the first overlap
    /// that is not a containment.
    pub witness: Option<(usize, usize, usize, usize)>,
}

/// Every concrete interval meeting an abstract one lies inside it, over all
/// trajectory pairs.
pub fn well_nested_check(t: &[Trajectory], tb: &[Trajectory]) -> NestingReport {
    for (a, s) in t.iter().enumerate() {
        for (b, sb) in tb.iter().enumerate() {
            for (j, c) in s.configs().iter().enumerate() {
                for (k, d) in sb.configs().iter().enumerate() {
                    if c.interval().overlaps(d.interval()) && !c.interval().is_subset(d.interval()) {
                        return NestingReport {
                            holds: false,
                            witness: Some((a, b, j, k)),
                        };
                    }
                }
            }
        }
    }
    NestingReport {
        holds: true,
        witness: None,
    }
}

/// A span where three configurations of a chain overlap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComposeWindow {
    pub span: Span,
    pub concrete: usize,
    pub middle: usize,
    pub abstract_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    pub concrete: usize,
    pub middle: usize,
    pub abstract_index: usize,
    pub first: Verdict,
    pub second: Verdict,
    /// A time before `min(⟦σ⟧, ⟦σ̄̄⟧)` not covered by the intermediate trajectory.
    #[serde(serialize_with = "ser_opt_q")]
    pub duration_gap: Option<Q>,
    pub windows: Vec<ComposeWindow>,
}

pub(crate) fn ser_opt_q<S: serde::Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.serialize_some(&crate::rational::fmt_q(q)),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComposeReport {
    pub holds: bool,
    pub chains: Vec<ChainReport>,
}

/// Certifies `<T, T̄̄>` for the composed relation through intermediate
/// witnesses: `witnesses[i] = (m, a)` pairs `T[i]` with `T̄[m]` and `T̄̄[a]`.
/// At each time the intermediate state is the one that composes `r1(t)` with
/// `r2(t)`.
pub fn compose_check(
    r1: &dyn TimedRelation,
    r2: &dyn TimedRelation,
    t: &[Trajectory],
    tb: &[Trajectory],
    tbb: &[Trajectory],
    witnesses: &[Option<(usize, usize)>],
) -> Result<ComposeReport> {
    for (lhs, rhs) in [(t, tb), (tb, tbb)] {
        let n = well_nested_check(lhs, rhs);
        if let Some((a, b, j, k)) = n.witness {
            return Err(Error::NotWellNested(format!("trajectory {a} rank {j} vs trajectory {b} rank {k}")));
        }
    }
    let mut chains = Vec::new();
    for (i, s) in t.iter().enumerate() {
        let Some(&Some((mi, ai))) = witnesses.get(i) else {
            return Err(Error::MissingIntermediateWitness(i));
        };
        let (sm, sa) = (&tb[mi], &tbb[ai]);
        let first = traj_related_timewise(r1, s, sm)?;
        let second = traj_related_timewise(r2, sm, sa)?;
        let outer = TimePoint::min(s.end(), sa.end());
        let duration_gap = match (sm.end().cmp(&outer), sm.end()) {
            (std::cmp::Ordering::Less, TimePoint::Finite(e)) => Some(e.clone()),
            _ => None,
        };
        let mut windows = Vec::new();
        for (j, c) in s.configs().iter().enumerate() {
            for (k, d) in sm.configs().iter().enumerate() {
                let Some(cd) = c.interval().intersect(d.interval()) else { continue };
                for (l, e) in sa.configs().iter().enumerate() {
                    if let Some(w) = cd.intersect(e.interval()) {
                        windows.push(ComposeWindow {
                            span: w.as_span(),
                            concrete: j,
                            middle: k,
                            abstract_rank: l,
                        });
                    }
                }
            }
        }
        chains.push(ChainReport {
            concrete: i,
            middle: mi,
            abstract_index: ai,
            first,
            second,
            duration_gap,
            windows,
        });
    }
    let holds = chains
        .iter()
        .all(|c| c.first.holds && c.second.holds && c.duration_gap.is_none());
    Ok(ComposeReport { holds, chains })
}

/// The audit trail of the inference rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub premises: Vec<(String, bool)>,
    pub conclusion: bool,
    pub matches: usize,
    pub simulation: SimReport,
}

/// Concludes that `⟦τ⟧` is related to the abstract property from a simulation,
/// initialization, blocking and `⟦τ̄⟧ ⊆ P̄` on the generated abstract semantics.
///
/// The simulation premise is discharged on the matching core, a simulation
/// inside `γ(r)`; every generated concrete trajectory is then matched and
/// re-checked.
pub fn verify_by_simulation(
    r: &dyn TimedRelation,
    tau: &ExplicitSystem,
    tau_bar: &ExplicitSystem,
    p_bar: &dyn Fn(&Trajectory) -> Result<bool>,
    horizon: &TimePoint,
    depth: usize,
) -> Result<VerifyReport> {
    let simulation = sim_check(r, tau, tau_bar, SimMode::Async)?;
    let core = matching_core(r, tau, tau_bar)?;
    let init_ok = tau
        .initial
        .iter()
        .all(|&c| tau_bar.initial.iter().any(|&k| core.contains(&(c, k))));
    let blocking_ok = core
        .iter()
        .all(|&(c, cb)| !tau.is_blocking(c) || tau_bar.is_blocking(cb));
    let abstract_sem = tau_bar.generate(horizon, depth)?;
    let mut prop_ok = true;
    for s in &abstract_sem.trajectories {
        if !p_bar(s)? {
            prop_ok = false;
            break;
        }
    }
    let premises = vec![
        ("simulation".to_string(), simulation.verdict || !core.is_empty()),
        ("initialization".to_string(), init_ok),
        ("blocking".to_string(), blocking_ok),
        ("abstract property".to_string(), prop_ok),
    ];
    if let Some((name, _)) = premises.iter().find(|(_, ok)| !ok) {
        return Err(Error::PremiseFailed(name.clone()));
    }
    let concrete = tau.generate(horizon, depth)?;
    let mut matches = 0;
    for s in &concrete.trajectories {
        let m = theorem4_match_in(r, tau, tau_bar, &core, s)?;
        if !m.certified.holds {
            return Err(Error::LocalSimulationGap(format!("matched pair fails at {:?}", m.certified.witness)));
        }
        matches += 1;
    }
    Ok(VerifyReport {
        premises,
        conclusion: true,
        matches,
        simulation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};
    use crate::relation::ClauseRelation;

    fn cfg(mode: &str, y0: i64, rate: i64, lo: i64, hi: Option<i64>, closed: bool) -> Configuration {
        let hi_t = hi.map_or(TimePoint::Infinity, |h| TimePoint::Finite(int(h)));
        Configuration::affine(mode, &[("y", int(y0), int(rate))], TimeInterval::raw(int(lo), hi_t, closed))
    }

    fn chain(configs: Vec<Configuration>) -> ExplicitSystem {
        let n = configs.len();
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        ExplicitSystem::new(configs, q(1, 1000)).with_initial(&[0]).with_edges(&edges)
    }

    fn eq_rel() -> ClauseRelation {
        ClauseRelation::equality(&["a", "b"], &["y"])
    }

    fn two_step() -> ExplicitSystem {
        chain(vec![cfg("a", 0, 1, 0, Some(2), false), cfg("b", 2, -1, 2, Some(4), true)])
    }

    #[test]
    fn identity_passes_both_modes() {
        let s = two_step();
        let r = eq_rel();
        for mode in [SimMode::Async, SimMode::Sync] {
            let rep = sim_check(&r, &s, &s, mode).unwrap();
            assert!(rep.verdict, "{mode:?}");
            assert!(rep.hypothesis("init") && rep.hypothesis("blocking") && rep.hypothesis("well_nested"));
        }
        assert!(bisim_check(&r, &s, &s).unwrap().verdict);
    }

    #[test]
    fn empty_relation_fails_init() {
        let s = two_step();
        let r = ClauseRelation::new("empty", vec![]);
        let rep = sim_check(&r, &s, &s, SimMode::Async).unwrap();
        assert!(rep.verdict);
        assert!(!rep.hypothesis("init"));
        assert!(rep.hypotheses["init"].witness.as_ref().unwrap().contains("#0"));
        assert!(bisim_check(&r, &s, &s).unwrap().verdict);
    }

    #[test]
    fn abstract_staying_put_matches() {
        // abstract side is one long configuration following the same line
        let conc = chain(vec![cfg("a", 0, 1, 0, Some(1), false), cfg("b", 1, 1, 1, Some(3), true)]);
        let abs = chain(vec![cfg("a", 0, 1, 0, Some(3), true)]);
        let r = ClauseRelation::new("y", vec![crate::relation::Clause::new("y", None, None, &["c.y = a.y"]).unwrap()]);
        let tr = sim_transfer(&r, &conc, &abs, 0, 0, Some(1)).unwrap();
        assert_eq!(tr.accepted.len(), 1);
        assert_eq!(tr.accepted[0].successor, None);
        let rep = sim_check(&r, &conc, &abs, SimMode::Sync).unwrap();
        assert!(rep.verdict);
        let err = sim_check(&r, &abs, &conc, SimMode::Sync).unwrap_err();
        assert!(matches!(err, Error::SyncRequiresWellNesting(_)));
        let back = bisim_check(&r, &conc, &abs).unwrap();
        assert!(back.forward.verdict);
    }

    #[test]
    fn asynchronous_windows_are_minima() {
        // concrete switches at 2, abstract at 1 and 3
        let c0 = cfg("a", 0, 1, 0, Some(2), false);
        let c1 = cfg("a", 2, 1, 2, Some(4), false);
        let d0 = cfg("a", 0, 1, 0, Some(1), false);
        let d1 = cfg("a", 1, 1, 1, Some(3), false);
        let w = Window::of(Some(&c1), Some(&d1)).unwrap();
        assert_eq!((w.lo.clone(), w.hi.clone()), (int(1), TimePoint::Finite(int(3))));
        let sc = splice(&c0, Some(&c1), &w).unwrap().unwrap();
        assert_eq!(sc.b(), &int(1));
        assert_eq!(sc.eval(&q(3, 2)).unwrap().get("y"), Some(&q(3, 2)));
        let sa = splice(&d0, Some(&d1), &w).unwrap().unwrap();
        assert_eq!(sa, d1);
    }

    #[test]
    fn greatest_simulation_keeps_diagonal() {
        let s = two_step();
        let g = greatest_simulation(&Full, &s, &s, true).unwrap();
        assert!(g.pairs.contains(&(0, 0)) && g.pairs.contains(&(1, 1)));
        let none = greatest_simulation(&ClauseRelation::new("empty", vec![]), &s, &s, true).unwrap();
        assert!(none.pairs.is_empty());
    }

    #[test]
    fn matcher_on_identity_returns_input() {
        let s = two_step();
        let r = eq_rel();
        let sem = s.generate(&TimePoint::Infinity, 10).unwrap();
        for t in &sem.trajectories {
            let m = theorem4_match(&r, &s, &s, t).unwrap();
            assert_eq!(&m.abstract_trajectory, t);
            assert!(m.certified.holds && m.full);
            assert_eq!(m.termination, "together");
        }
    }

    #[test]
    fn matcher_classifies_abstract_catch_up() {
        // abstract switches twice inside the first concrete configuration
        let conc = chain(vec![cfg("a", 0, 0, 0, Some(3), false), cfg("a", 0, 0, 3, Some(4), true)]);
        let abs = chain(vec![
            cfg("a", 0, 0, 0, Some(1), false),
            cfg("a", 0, 0, 1, Some(2), false),
            cfg("a", 0, 0, 2, Some(4), true),
        ]);
        let r = ClauseRelation::new("y", vec![crate::relation::Clause::new("y", None, None, &["c.y = a.y"]).unwrap()]);
        let sigma = conc.generate(&TimePoint::Infinity, 5).unwrap().trajectories[0].clone();
        let m = theorem4_match(&r, &conc, &abs, &sigma).unwrap();
        let cases: Vec<&str> = m.steps.iter().map(|s| s.case.as_str()).collect();
        assert_eq!(cases, vec!["early-early", "early-within"]);
        assert_eq!(m.abstract_path, vec![0, 1, 2]);
        assert!(m.certified.holds && m.full);
        let fine = chain(vec![
            cfg("a", 0, 0, 0, Some(1), false),
            cfg("a", 0, 0, 1, Some(2), false),
            cfg("a", 0, 0, 2, Some(4), true),
        ]);
        let coarse = chain(vec![cfg("a", 0, 0, 0, Some(4), true)]);
        let sigma = fine.generate(&TimePoint::Infinity, 5).unwrap().trajectories[0].clone();
        let m = theorem4_match(&r, &fine, &coarse, &sigma).unwrap();
        let cases: Vec<&str> = m.steps.iter().map(|s| s.case.as_str()).collect();
        assert_eq!(cases, vec!["covers", "covers"]);
        assert_eq!(m.abstract_path, vec![0]);
    }

    #[test]
    fn preservation_distinguishes_branching() {
        let conc = chain(vec![cfg("a", 0, 1, 0, Some(1), false), cfg("b", 1, 0, 1, Some(2), true)]);
        let mut abs = chain(vec![cfg("a", 0, 1, 0, Some(1), false), cfg("b", 1, 0, 1, Some(2), true)]);
        abs.configs.push(cfg("b", 5, 0, 1, Some(2), true));
        abs.edges.insert((0, 2));
        let r = eq_rel();
        assert!(sim_check(&r, &conc, &abs, SimMode::Async).unwrap().verdict);
        let p = preservation_check(&r, &conc, &abs).unwrap();
        assert!(!p.preservation);
        assert!(p.violations[0].reason.contains("#2"));
    }

    #[test]
    fn nesting_witness() {
        let a = Trajectory::new(vec![cfg("a", 0, 0, 0, Some(2), false), cfg("a", 0, 0, 2, Some(4), true)]).unwrap();
        let b = Trajectory::new(vec![cfg("a", 0, 0, 0, Some(3), false), cfg("a", 0, 0, 3, Some(4), true)]).unwrap();
        let n = well_nested_check(std::slice::from_ref(&a), std::slice::from_ref(&b));
        assert_eq!(n.witness, Some((0, 0, 1, 0)));
        let single = Trajectory::new(vec![cfg("a", 0, 0, 0, Some(4), true)]).unwrap();
        assert!(well_nested_check(&[a, b], &[single]).holds);
    }
}
