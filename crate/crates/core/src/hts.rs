//! Hybrid transition systems and their bounded trajectory semantics.
//!
//! Two presentations are supported. [`ExplicitSystem`] lists configurations and
//! edges directly. [`SchemaSystem`] describes modes by rates and exit
//! conditions; it is instantiated into an explicit system covering every
//! configuration reachable before a horizon.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_constraint, parse_expr, Constraint, Expr, LinExpr};
use crate::flow::{AffineFlow, Configuration};
use crate::rational::{parse_q, show_q, Q};
use crate::time::{TimeInterval, TimePoint};
use crate::trajectory::Trajectory;

pub const DEFAULT_TRAJECTORY_CAP: usize = 100_000;

/// `<C, C0, τ>` over a finite configuration list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitSystem {
    pub configs: Vec<Configuration>,
    pub initial: BTreeSet<usize>,
    pub edges: BTreeSet<(usize, usize)>,
    #[serde(with = "crate::rational::serde_q")]
    pub zeta: Q,
    /// Configurations whose successors lie beyond the instantiation bound.
    #[serde(default)]
    pub frontier: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub configurations: usize,
    pub edges: usize,
    pub initial: usize,
    pub frontier: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Semantics {
    pub trajectories: Vec<Trajectory>,
    pub horizon: TimePoint,
    pub depth: usize,
}

impl Semantics {
    pub fn complete(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.iter().filter(|t| !t.is_truncated())
    }

    pub fn contains(&self, s: &Trajectory) -> bool {
        self.trajectories.binary_search(s).is_ok()
    }

    pub fn is_subset(&self, other: &Semantics) -> bool {
        self.trajectories.iter().all(|s| other.contains(s))
    }
}

impl ExplicitSystem {
    pub fn new(configs: Vec<Configuration>, zeta: Q) -> Self {
        ExplicitSystem {
            configs,
            initial: BTreeSet::new(),
            edges: BTreeSet::new(),
            zeta,
            frontier: BTreeSet::new(),
        }
    }

    pub fn with_initial(mut self, init: &[usize]) -> Self {
        self.initial.extend(init.iter().copied());
        self
    }

    pub fn with_edges(mut self, edges: &[(usize, usize)]) -> Self {
        self.edges.extend(edges.iter().copied());
        self
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((i, 0)..=(i, usize::MAX)).map(|&(_, j)| j)
    }

    pub fn predecessors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == j).map(|e| e.0)
    }

    pub fn is_blocking(&self, i: usize) -> bool {
        self.successors(i).next().is_none() && !self.frontier.contains(&i)
    }

    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.configs.iter().position(|x| x == c)
    }

    /// Checks the three conditions on `<C, C0, τ>` and the minimum duration.
    pub fn validate(&self) -> Result<ValidationReport> {
        for c in &self.configs {
            if let TimePoint::Finite(d) = c.interval().duration() {
                if d < self.zeta {
                    return Err(Error::DurationBelowZeta {
                        duration: show_q(&d),
                        zeta: show_q(&self.zeta),
                    });
                }
            }
        }
        for &i in &self.initial {
            if !self.configs[i].b().is_zero() {
                return Err(Error::InitialNotAtZero(i));
            }
        }
        for &(i, j) in &self.edges {
            let (c, d) = (&self.configs[i], &self.configs[j]);
            if c.e() != &TimePoint::Finite(d.b().clone()) {
                return Err(Error::NonConsecutiveEdge { from: i, to: j });
            }
        }
        for (i, c) in self.configs.iter().enumerate() {
            let has_succ = self.successors(i).next().is_some() || self.frontier.contains(&i);
            if has_succ && c.is_final() {
                return Err(Error::ClosedWithSuccessor(i));
            }
            if !has_succ && !c.is_final() {
                return Err(Error::FinalNotClosed(i));
            }
        }
        Ok(ValidationReport {
            configurations: self.configs.len(),
            edges: self.edges.len(),
            initial: self.initial.len(),
            frontier: self.frontier.len(),
        })
    }

    /// Maximal trajectories, extended while the last configuration ends before
    /// `horizon` and fewer than `depth` configurations have been chained.
    pub fn generate(&self, horizon: &TimePoint, depth: usize) -> Result<Semantics> {
        self.generate_capped(horizon, depth, DEFAULT_TRAJECTORY_CAP)
    }

    pub fn generate_capped(&self, horizon: &TimePoint, depth: usize, cap: usize) -> Result<Semantics> {
        let mut out = self
            .raw_paths(horizon, depth, cap)?
            .into_iter()
            .map(|(p, truncated)| self.trajectory_of(&p, truncated))
            .collect::<Result<Vec<_>>>()?;
        out.sort();
        out.dedup();
        Ok(Semantics {
            trajectories: out,
            horizon: horizon.clone(),
            depth,
        })
    }

    /// Index paths of the generated trajectories with their truncation flag,
    /// in the order of the trajectories returned by `generate`.
    pub fn paths(&self, horizon: &TimePoint, depth: usize) -> Result<Vec<(Vec<usize>, bool)>> {
        let mut out: Vec<(Trajectory, (Vec<usize>, bool))> = self
            .raw_paths(horizon, depth, DEFAULT_TRAJECTORY_CAP)?
            .into_iter()
            .map(|(p, t)| Ok((self.trajectory_of(&p, t)?, (p, t))))
            .collect::<Result<_>>()?;
        out.sort();
        Ok(out.into_iter().map(|x| x.1).collect())
    }

    fn raw_paths(&self, horizon: &TimePoint, depth: usize, cap: usize) -> Result<Vec<(Vec<usize>, bool)>> {
        let mut out = Vec::new();
        let mut stack: Vec<Vec<usize>> = self.initial.iter().rev().map(|&i| vec![i]).collect();
        while let Some(path) = stack.pop() {
            let last = *path.last().expect("nonempty path");
            let succ: Vec<usize> = self.successors(last).collect();
            if succ.is_empty() && !self.frontier.contains(&last) {
                out.push((path, false));
            } else if succ.is_empty() || path.len() >= depth || self.configs[last].e() >= horizon {
                out.push((path, true));
            } else {
                for &j in succ.iter().rev() {
                    let mut p = path.clone();
                    p.push(j);
                    stack.push(p);
                }
            }
            if out.len() > cap {
                return Err(Error::BranchingExplosion(cap));
            }
        }
        Ok(out)
    }

    fn trajectory_of(&self, path: &[usize], truncated: bool) -> Result<Trajectory> {
        let configs = path.iter().map(|&i| self.configs[i].clone()).collect();
        Trajectory::validate(configs, truncated)
    }
}

/// Whether every `τ`-blocking configuration is `τ'`-blocking; errors unless `τ ⊆ τ'`.
pub fn blocking_check(tau: &ExplicitSystem, tau_prime: &ExplicitSystem) -> Result<bool> {
    Ok(blocking_violation(tau, tau_prime)?.is_none())
}

/// A configuration that blocks in `tau` but not in `tau_prime`.
pub fn blocking_violation(tau: &ExplicitSystem, tau_prime: &ExplicitSystem) -> Result<Option<usize>> {
    if tau.configs != tau_prime.configs {
        return Err(Error::UniverseMismatch);
    }
    if let Some(&(from, to)) = tau.edges.iter().find(|e| !tau_prime.edges.contains(e)) {
        return Err(Error::NotASubset { from, to });
    }
    Ok((0..tau.configs.len()).find(|&i| tau.is_blocking(i) && !tau_prime.is_blocking(i)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContainmentReport {
    pub blocking_holds: bool,
    pub blocking_witness: Option<usize>,
    /// Every bounded execution of `tau`, with its truncation flag, is one of `tau_prime`.
    pub contained: bool,
    /// Configuration indices of an execution of `tau` missing from `tau_prime`.
    pub counterexample: Option<(Vec<usize>, bool)>,
    pub executions: usize,
}

/// Compares the executions of a sub-system with those of the larger system
/// as index paths, so systems whose blocking configurations are not closed
/// can still be compared.
pub fn subsystem_containment(tau: &ExplicitSystem, tau_prime: &ExplicitSystem, horizon: &TimePoint, depth: usize) -> Result<ContainmentReport> {
    let blocking_witness = blocking_violation(tau, tau_prime)?;
    let mine = tau.raw_paths(horizon, depth, DEFAULT_TRAJECTORY_CAP)?;
    let theirs: BTreeSet<(Vec<usize>, bool)> = tau_prime.raw_paths(horizon, depth, DEFAULT_TRAJECTORY_CAP)?.into_iter().collect();
    let counterexample = mine.iter().find(|p| !theirs.contains(*p)).cloned();
    Ok(ContainmentReport {
        blocking_holds: blocking_witness.is_none(),
        blocking_witness,
        contained: counterexample.is_none(),
        counterexample,
        executions: mine.len(),
    })
}

/// How a mode's configuration ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exit {
    /// At the first positive duration where this affine expression over the
    /// current state reaches 0.
    When(Expr),
    /// After a duration given by an expression over entry values and parameters.
    After(Expr),
    /// The configuration is unbounded.
    Never,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeSchema {
    pub name: String,
    /// Rates, evaluated once from the entry state and parameters.
    pub rates: BTreeMap<String, Expr>,
    pub entry: Vec<Constraint>,
    pub exit: Exit,
    pub terminal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSchema {
    pub from: String,
    pub to: String,
    pub guard: Vec<Constraint>,
    /// New values, evaluated on the exit state; other variables carry over.
    pub reset: BTreeMap<String, Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitialSchema {
    pub mode: String,
    pub constraints: Vec<Constraint>,
    /// Representative entry states for a possibly continuous initial set.
    pub samples: Vec<BTreeMap<String, Q>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaSystem {
    pub variables: Vec<String>,
    pub params: BTreeMap<String, Q>,
    pub modes: Vec<ModeSchema>,
    pub edges: Vec<EdgeSchema>,
    pub initial: Vec<InitialSchema>,
    pub zeta: Q,
}

impl SchemaSystem {
    fn mode(&self, name: &str) -> Result<&ModeSchema> {
        self.modes.iter().find(|m| m.name == name).ok_or_else(|| Error::Schema {
            mode: name.to_string(),
            message: "undeclared mode".into(),
        })
    }

    fn env<'a>(&'a self, vars: &'a BTreeMap<String, Q>) -> impl Fn(&str) -> Option<Q> + 'a {
        move |n: &str| vars.get(n).or_else(|| self.params.get(n)).cloned()
    }

    fn holds_all(&self, cs: &[Constraint], vars: &BTreeMap<String, Q>, mode: &str) -> Result<bool> {
        for c in cs {
            let ok = c.holds(&self.env(vars)).map_err(|e| Error::Schema {
                mode: mode.to_string(),
                message: format!("{c}: {e}"),
            })?;
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Builds the configuration entered in `mode` at time `start` with entry values `vars`.
    fn enter(&self, mode: &ModeSchema, start: &Q, vars: &BTreeMap<String, Q>) -> Result<Option<Configuration>> {
        if !self.holds_all(&mode.entry, vars, &mode.name)? {
            return Ok(None);
        }
        let schema_err = |message: String| Error::Schema {
            mode: mode.name.clone(),
            message,
        };
        let mut rate = BTreeMap::new();
        for v in &self.variables {
            let r = match mode.rates.get(v) {
                Some(e) => e.eval(&self.env(vars)).map_err(|e| schema_err(format!("rate of {v}: {e}")))?,
                None => Q::zero(),
            };
            rate.insert(v.clone(), r);
        }
        let flow = AffineFlow::new(&mode.name, start.clone(), vars.clone(), rate.clone());
        let duration = match &mode.exit {
            Exit::Never => None,
            Exit::After(e) => Some(e.eval(&self.env(vars)).map_err(|e| schema_err(format!("duration: {e}")))?),
            Exit::When(e) => {
                // e(state at start + d) = a + k*d
                let lin = e
                    .linearize(&|n| {
                        if let (Some(x0), Some(r)) = (vars.get(n), rate.get(n)) {
                            Some(LinExpr::constant(x0.clone()).add(&LinExpr::term("d", r.clone())))
                        } else {
                            self.params.get(n).cloned().map(LinExpr::constant)
                        }
                    })
                    .map_err(|e| schema_err(format!("exit condition: {e}")))?;
                let k = lin.coef("d");
                if k.is_zero() {
                    None
                } else {
                    let d = -&lin.constant / &k;
                    if !d.is_positive() {
                        None
                    } else {
                        Some(d)
                    }
                }
            }
        };
        let hi = match duration {
            None => TimePoint::Infinity,
            Some(d) if d < self.zeta => return Ok(None),
            Some(d) => TimePoint::Finite(start + d),
        };
        let interval = TimeInterval::try_raw(start.clone(), hi, false).ok_or_else(|| schema_err("empty configuration".into()))?;
        Ok(Some(Configuration::new(flow, interval)))
    }

    fn successors_of(&self, c: &Configuration) -> Result<Vec<Configuration>> {
        let TimePoint::Finite(end) = c.e().clone() else {
            return Ok(vec![]);
        };
        if self.mode(c.mode())?.terminal {
            return Ok(vec![]);
        }
        let exit_state = c.flow().at(&end).vars;
        let mut out = Vec::new();
        for e in self.edges.iter().filter(|e| e.from == c.mode()) {
            if !self.holds_all(&e.guard, &exit_state, &e.from)? {
                continue;
            }
            let mut vars = exit_state.clone();
            for (v, x) in &e.reset {
                let val = x.eval(&self.env(&exit_state)).map_err(|err| Error::Schema {
                    mode: e.from.clone(),
                    message: format!("reset of {v}: {err}"),
                })?;
                vars.insert(v.clone(), val);
            }
            if let Some(next) = self.enter(self.mode(&e.to)?, &end, &vars)? {
                out.push(next);
            }
        }
        Ok(out)
    }

    fn initial_configs(&self) -> Result<Vec<Configuration>> {
        let mut out = Vec::new();
        for init in &self.initial {
            let mode = self.mode(&init.mode)?;
            for s in &init.samples {
                let want: BTreeSet<&String> = self.variables.iter().collect();
                if s.keys().collect::<BTreeSet<_>>() != want {
                    return Err(Error::Schema {
                        mode: init.mode.clone(),
                        message: "initial sample does not match the variable signature".into(),
                    });
                }
                if !self.holds_all(&init.constraints, s, &init.mode)? {
                    let shown: Vec<String> = s.iter().map(|(k, v)| format!("{k}={}", show_q(v))).collect();
                    return Err(Error::ParamConstraintViolated(format!(
                        "initial sample {} for mode {}",
                        shown.join(", "),
                        init.mode
                    )));
                }
                match self.enter(mode, &Q::zero(), s)? {
                    Some(c) => out.push(c),
                    None => {
                        return Err(Error::Schema {
                            mode: init.mode.clone(),
                            message: "initial sample violates the entry constraints or the minimum duration".into(),
                        })
                    }
                }
            }
        }
        Ok(out)
    }

    /// Every configuration reachable from the sampled initial states starting
    /// before `horizon` within `depth` steps. A configuration that has
    /// successors but was not expanded is left open and put on the frontier.
    pub fn instantiate(&self, horizon: &Q, depth: usize) -> Result<ExplicitSystem> {
        let mut index: HashMap<Configuration, usize> = HashMap::new();
        let mut sys = ExplicitSystem::new(Vec::new(), self.zeta.clone());
        let mut queue = VecDeque::new();
        for c in self.initial_configs()? {
            let i = intern(&mut sys, &mut index, c.clone());
            sys.initial.insert(i);
            queue.push_back((i, 1usize));
        }
        let mut level: HashMap<usize, usize> = HashMap::new();
        while let Some((i, lvl)) = queue.pop_front() {
            if level.contains_key(&i) {
                continue;
            }
            level.insert(i, lvl);
            let c = sys.configs[i].clone();
            let succ = self.successors_of(&c)?;
            if succ.is_empty() {
                if let TimePoint::Finite(_) = c.e() {
                    // the open form stays in the index so later paths find it
                    sys.configs[i] = c.closure();
                    index.insert(sys.configs[i].clone(), i);
                }
                continue;
            }
            let expand = lvl < depth && c.e() < &TimePoint::Finite(horizon.clone());
            if !expand {
                sys.frontier.insert(i);
                continue;
            }
            for d in succ {
                let j = intern(&mut sys, &mut index, d);
                sys.edges.insert((i, j));
                queue.push_back((j, lvl + 1));
            }
        }
        Ok(sys)
    }

    pub fn generate(&self, horizon: &Q, depth: usize) -> Result<Semantics> {
        self.instantiate(horizon, depth)?
            .generate(&TimePoint::Finite(horizon.clone()), depth)
    }
}

fn intern(sys: &mut ExplicitSystem, index: &mut HashMap<Configuration, usize>, c: Configuration) -> usize {
    if let Some(&i) = index.get(&c) {
        return i;
    }
    sys.configs.push(c.clone());
    index.insert(c, sys.configs.len() - 1);
    sys.configs.len() - 1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HybridSystem {
    Schema(SchemaSystem),
    Explicit(ExplicitSystem),
}

impl HybridSystem {
    pub fn zeta(&self) -> &Q {
        match self {
            HybridSystem::Schema(s) => &s.zeta,
            HybridSystem::Explicit(e) => &e.zeta,
        }
    }

    /// The explicit system covering `horizon`; explicit systems are returned as is.
    pub fn explicit(&self, horizon: &Q, depth: usize) -> Result<ExplicitSystem> {
        match self {
            HybridSystem::Schema(s) => s.instantiate(horizon, depth),
            HybridSystem::Explicit(e) => Ok(e.clone()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[serde(default)]
    variables: Vec<String>,
    #[serde(default)]
    params: BTreeMap<String, String>,
    #[serde(default)]
    modes: Vec<ModeFile>,
    #[serde(default)]
    edges: Vec<EdgeFile>,
    #[serde(default)]
    initial: Vec<InitialFile>,
    zeta: Option<String>,
    configs: Option<Vec<Configuration>>,
    #[serde(default)]
    initial_configs: Vec<usize>,
    #[serde(default)]
    transitions: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeFile {
    name: String,
    #[serde(default)]
    rates: BTreeMap<String, String>,
    #[serde(default)]
    entry: Vec<String>,
    #[serde(default)]
    exit: ExitFile,
    #[serde(default)]
    terminal: bool,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "lowercase")]
enum ExitFile {
    When(String),
    After(String),
    #[default]
    Never,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    from: String,
    to: String,
    #[serde(default)]
    guard: Vec<String>,
    #[serde(default)]
    reset: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialFile {
    mode: String,
    #[serde(default)]
    constraints: Vec<String>,
    samples: Vec<BTreeMap<String, String>>,
}

/// Re-anchors a parse error inside a JSON string literal to file coordinates.
pub(crate) fn locate(src: &str, literal: &str, err: Error) -> Error {
    let Error::Parse { line: _, column, message } = err else {
        return err;
    };
    let quoted = format!("\"{literal}\"");
    match src.find(&quoted) {
        Some(off) => {
            let before = &src[..off];
            let line = before.matches('\n').count() + 1;
            let col0 = before.rfind('\n').map_or(off, |p| off - p - 1);
            Error::Parse {
                line,
                column: col0 + 1 + column,
                message,
            }
        }
        None => Error::Parse { line: 0, column, message },
    }
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses a system description (schema or explicit form).
pub fn load_system(src: &str) -> Result<HybridSystem> {
    let f: SystemFile = serde_json::from_str(src).map_err(json_error)?;
    let q = |s: &str| parse_q(s).map_err(|e| locate(src, s, e));
    let ex = |s: &str| parse_expr(s).map_err(|e| locate(src, s, e));
    let cons = |s: &str| parse_constraint(s).map_err(|e| locate(src, s, e));
    let zeta = match &f.zeta {
        Some(z) => q(z)?,
        None => crate::time::default_zeta(),
    };
    if let Some(configs) = f.configs {
        let mut sys = ExplicitSystem::new(configs, zeta);
        sys.initial = f.initial_configs.into_iter().collect();
        sys.edges = f.transitions.into_iter().collect();
        let n = sys.configs.len();
        if sys.initial.iter().chain(sys.edges.iter().flat_map(|e| [&e.0, &e.1])).any(|&i| i >= n) {
            return Err(Error::Parse {
                line: 0,
                column: 0,
                message: "configuration index out of range".into(),
            });
        }
        return Ok(HybridSystem::Explicit(sys));
    }
    let mut params = BTreeMap::new();
    for (k, v) in &f.params {
        params.insert(k.clone(), q(v)?);
    }
    let mut modes = Vec::new();
    for m in &f.modes {
        let mut rates = BTreeMap::new();
        for (v, e) in &m.rates {
            rates.insert(v.clone(), ex(e)?);
        }
        modes.push(ModeSchema {
            name: m.name.clone(),
            rates,
            entry: m.entry.iter().map(|s| cons(s)).collect::<Result<_>>()?,
            exit: match &m.exit {
                ExitFile::When(e) => Exit::When(ex(e)?),
                ExitFile::After(e) => Exit::After(ex(e)?),
                ExitFile::Never => Exit::Never,
            },
            terminal: m.terminal,
        });
    }
    let mut edges = Vec::new();
    for e in &f.edges {
        let mut reset = BTreeMap::new();
        for (v, x) in &e.reset {
            reset.insert(v.clone(), ex(x)?);
        }
        edges.push(EdgeSchema {
            from: e.from.clone(),
            to: e.to.clone(),
            guard: e.guard.iter().map(|s| cons(s)).collect::<Result<_>>()?,
            reset,
        });
    }
    let mut initial = Vec::new();
    for i in &f.initial {
        let mut samples = Vec::new();
        for s in &i.samples {
            let mut m = BTreeMap::new();
            for (k, v) in s {
                m.insert(k.clone(), q(v)?);
            }
            samples.push(m);
        }
        initial.push(InitialSchema {
            mode: i.mode.clone(),
            constraints: i.constraints.iter().map(|s| cons(s)).collect::<Result<_>>()?,
            samples,
        });
    }
    let sys = SchemaSystem {
        variables: f.variables,
        params,
        modes,
        edges,
        initial,
        zeta,
    };
    for m in &sys.modes {
        for v in m.rates.keys() {
            if !sys.variables.contains(v) {
                return Err(Error::Schema {
                    mode: m.name.clone(),
                    message: format!("rate for undeclared variable {v}"),
                });
            }
        }
    }
    for e in &sys.edges {
        sys.mode(&e.from)?;
        sys.mode(&e.to)?;
    }
    Ok(HybridSystem::Schema(sys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    fn z() -> Q {
        q(1, 100)
    }

    fn c(lo: i64, hi: i64, y: i64) -> Configuration {
        Configuration::affine("m", &[("y", int(y), int(0))], TimeInterval::new(int(lo), int(hi).into(), &z()).unwrap())
    }

    #[test]
    fn single_closed_configuration() {
        let sys = ExplicitSystem::new(vec![c(0, 2, 0).closure()], z()).with_initial(&[0]);
        sys.validate().unwrap();
        let sem = sys.generate(&TimePoint::Infinity, 10).unwrap();
        assert_eq!(sem.trajectories.len(), 1);
        assert_eq!(sem.trajectories[0].configs(), &[c(0, 2, 0).closure()]);
    }

    #[test]
    fn validation_errors() {
        let bad = ExplicitSystem::new(vec![c(0, 1, 0), c(2, 3, 0).closure()], z())
            .with_initial(&[0])
            .with_edges(&[(0, 1)]);
        assert_eq!(bad.validate(), Err(Error::NonConsecutiveEdge { from: 0, to: 1 }));
        let open_final = ExplicitSystem::new(vec![c(0, 1, 0)], z()).with_initial(&[0]);
        assert_eq!(open_final.validate(), Err(Error::FinalNotClosed(0)));
        let late = ExplicitSystem::new(vec![c(1, 2, 0).closure()], z()).with_initial(&[0]);
        assert_eq!(late.validate(), Err(Error::InitialNotAtZero(0)));
    }

    #[test]
    fn empty_initial_set() {
        let sys = ExplicitSystem::new(vec![c(0, 2, 0).closure()], z());
        assert!(sys.generate(&TimePoint::Infinity, 5).unwrap().trajectories.is_empty());
    }

    #[test]
    fn blocking() {
        let base = ExplicitSystem::new(vec![c(0, 1, 0), c(1, 2, 0).closure(), c(1, 2, 1), c(2, 3, 0).closure()], z())
            .with_initial(&[0])
            .with_edges(&[(0, 1), (2, 3)]);
        assert!(blocking_check(&base, &base).unwrap());
        let more = base.clone().with_edges(&[(0, 2)]);
        assert!(blocking_check(&base, &more).unwrap());
        let mut fewer = base.clone();
        fewer.edges.remove(&(2, 3));
        assert!(matches!(blocking_check(&base, &fewer), Err(Error::NotASubset { .. })));
        assert_eq!(blocking_violation(&fewer, &base).unwrap(), Some(2));
    }

    const TOY: &str = r#"{
        "variables": ["x"],
        "zeta": "1/100",
        "modes": [
            {"name": "up", "rates": {"x": "1"}, "exit": {"when": "x - 2"}},
            {"name": "down", "rates": {"x": "-1"}, "exit": {"when": "x"}}
        ],
        "edges": [
            {"from": "up", "to": "down"},
            {"from": "down", "to": "up"}
        ],
        "initial": [{"mode": "up", "constraints": ["x < 2"], "samples": [{"x": "0"}]}]
    }"#;

    #[test]
    fn schema_generation() {
        let HybridSystem::Schema(s) = load_system(TOY).unwrap() else { panic!() };
        let sem = s.generate(&int(6), 100).unwrap();
        assert_eq!(sem.trajectories.len(), 1);
        let t = &sem.trajectories[0];
        assert!(t.is_truncated());
        let tl: Vec<String> = t.timeline().iter().map(|p| p.to_string()).collect();
        assert_eq!(tl, ["0", "2", "4", "6"]);
    }

    #[test]
    fn schema_parse_error_location() {
        let src = TOY.replace("\"x - 2\"", "\"x - * 2\"");
        match load_system(&src) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }
}
