//! Timed relations between concrete and abstract states, and their lifts to
//! configurations, trajectories and semantics.
//!
//! Everything is decided exactly. On a window where both configurations
//! follow a single affine piece, every affine constraint in `t` has a convex
//! solution set, so the set of times where a relation holds is a finite union
//! of spans and the question "does it hold on the whole window" is a coverage
//! check.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_constraint, CmpOp, Constraint, LinExpr};
use crate::flow::{AffineFlow, Configuration, State};
use crate::hts::{json_error, locate};
use crate::rational::{parse_q, show_q, Q};
use crate::time::{first_uncovered, Span, TimeInterval, TimePoint};
use crate::trajectory::Trajectory;

/// `r(t) ⊆ S × S̄` for every time `t`.
pub trait TimedRelation {
    fn holds_at(&self, t: &Q, s: &State, sb: &State) -> Result<bool>;

    /// Spans inside `within` where `<c(t), d(t)> ∈ r(t)`; `within` must lie in
    /// both intervals.
    fn satisfied_spans(&self, c: &Configuration, d: &Configuration, within: &Span) -> Result<Vec<Span>>;

    /// `dom(r)`; `None` when total.
    fn domain(&self) -> Option<Vec<TimeInterval>> {
        None
    }
}

/// Restricts `target` to `dom(r)`.
fn in_domain(r: &dyn TimedRelation, target: &Span) -> Vec<Span> {
    match r.domain() {
        None => vec![target.clone()],
        Some(d) => d.iter().filter_map(|i| target.intersect(&i.as_span())).collect(),
    }
}

/// Splits `within` at the given times into consecutive left-closed parts.
pub(crate) fn split(within: &Span, cuts: &[Q]) -> Vec<Span> {
    let mut pts: Vec<&Q> = cuts
        .iter()
        .filter(|x| *x > &within.lo && within.hi.cmp_q(x).is_gt())
        .collect();
    pts.sort();
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut lo = within.lo.clone();
    let mut lo_closed = within.lo_closed;
    for p in pts {
        if let Some(s) = Span::new(lo.clone(), lo_closed, TimePoint::Finite(p.clone()), false) {
            out.push(s);
        }
        lo = p.clone();
        lo_closed = true;
    }
    if let Some(s) = Span::new(lo, lo_closed, within.hi.clone(), within.hi_closed) {
        out.push(s);
    }
    out
}

/// Intersects `span` with `{t | k*t + m op 0}`.
pub(crate) fn cut(span: &Span, k: &Q, m: &Q, op: CmpOp) -> Option<Span> {
    if k.is_zero() {
        return op.holds(m).then(|| span.clone());
    }
    let x = -m / k;
    let mut s = span.clone();
    let pos = k > &Q::zero();
    // k*t + m op 0  <=>  t op' x, with op' flipped when k < 0
    let (lower, upper) = match (op, pos) {
        (CmpOp::Eq, _) => (Some(false), Some(false)),
        (CmpOp::Ge, true) | (CmpOp::Le, false) => (Some(false), None),
        (CmpOp::Gt, true) | (CmpOp::Lt, false) => (Some(true), None),
        (CmpOp::Le, true) | (CmpOp::Ge, false) => (None, Some(false)),
        (CmpOp::Lt, true) | (CmpOp::Gt, false) => (None, Some(true)),
    };
    if let Some(strict) = lower {
        if x > s.lo || (x == s.lo && strict) {
            s.lo_closed = !strict && (x > s.lo || s.lo_closed);
            s.lo = x.clone();
        }
    }
    if let Some(strict) = upper {
        match s.hi.cmp_q(&x) {
            std::cmp::Ordering::Greater => {
                s.hi = TimePoint::Finite(x);
                s.hi_closed = !strict;
            }
            std::cmp::Ordering::Equal => s.hi_closed = s.hi_closed && !strict,
            std::cmp::Ordering::Less => {}
        }
    }
    (!s.is_empty()).then_some(s)
}

fn flow_atom(prefix: &str, name: &str, p: &AffineFlow) -> Option<LinExpr> {
    let v = name.strip_prefix(prefix)?;
    let x0 = p.initial.get(v)?;
    let r = &p.rate[v];
    Some(LinExpr::constant(x0 - r * &p.anchor).add(&LinExpr::term("t", r.clone())))
}

/// Breakpoints where either configuration switches piece.
fn joint_cuts(c: &Configuration, d: &Configuration) -> Vec<Q> {
    let mut v = c.breakpoints();
    v.extend(d.breakpoints());
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub label: String,
    pub window: Option<TimeInterval>,
    pub concrete_mode: Option<String>,
    pub abstract_mode: Option<String>,
    pub constraints: Vec<Constraint>,
}

impl Clause {
    pub fn new(label: &str, concrete_mode: Option<&str>, abstract_mode: Option<&str>, constraints: &[&str]) -> Result<Self> {
        Ok(Clause {
            label: label.to_string(),
            window: None,
            concrete_mode: concrete_mode.map(str::to_string),
            abstract_mode: abstract_mode.map(str::to_string),
            constraints: constraints.iter().map(|s| parse_constraint(s)).collect::<Result<_>>()?,
        })
    }

    pub fn uses_endpoints(&self) -> bool {
        self.constraints
            .iter()
            .flat_map(|c| c.vars())
            .any(|v| ENDPOINTS.contains(&v.as_str()))
    }

    fn guards(&self, cm: &str, am: &str) -> bool {
        self.concrete_mode.as_deref().is_none_or(|m| m == cm) && self.abstract_mode.as_deref().is_none_or(|m| m == am)
    }
}

pub const ENDPOINTS: [&str; 4] = ["B_c", "E_c", "B_a", "E_a"];

/// A disjunction of guarded conjunctions of affine constraints over `t`,
/// concrete variables `c.<v>`, abstract variables `a.<v>`, parameters, and
/// the endpoints `B_c, E_c, B_a, E_a` of the enclosing configurations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseRelation {
    pub name: String,
    pub params: BTreeMap<String, Q>,
    pub clauses: Vec<Clause>,
    pub domain: Option<Vec<TimeInterval>>,
}

/// Values of the endpoint symbols for one configuration pair.
#[derive(Clone, Debug)]
pub struct Endpoints {
    pub b_c: Q,
    pub e_c: TimePoint,
    pub b_a: Q,
    pub e_a: TimePoint,
}

impl Endpoints {
    pub fn of(c: &Configuration, d: &Configuration) -> Self {
        Endpoints {
            b_c: c.b().clone(),
            e_c: c.e().clone(),
            b_a: d.b().clone(),
            e_a: d.e().clone(),
        }
    }

    fn get(&self, name: &str) -> Option<Option<Q>> {
        let finite = |t: &TimePoint| t.finite().cloned();
        match name {
            "B_c" => Some(Some(self.b_c.clone())),
            "E_c" => Some(finite(&self.e_c)),
            "B_a" => Some(Some(self.b_a.clone())),
            "E_a" => Some(finite(&self.e_a)),
            _ => None,
        }
    }
}

/// One failed clause, for discrepancy reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseFailure {
    pub clause: String,
    pub constraint: String,
    pub lhs_minus_rhs: String,
}

impl ClauseRelation {
    pub fn new(name: &str, clauses: Vec<Clause>) -> Self {
        ClauseRelation {
            name: name.to_string(),
            params: BTreeMap::new(),
            clauses,
            domain: None,
        }
    }

    pub fn with_param(mut self, name: &str, v: Q) -> Self {
        self.params.insert(name.to_string(), v);
        self
    }

    /// Same mode and equal values of the listed variables.
    pub fn equality(modes: &[&str], vars: &[&str]) -> Self {
        let cons: Vec<String> = vars.iter().map(|v| format!("c.{v} = a.{v}")).collect();
        let refs: Vec<&str> = cons.iter().map(String::as_str).collect();
        let clauses = modes
            .iter()
            .map(|m| Clause::new(m, Some(m), Some(m), &refs).expect("well-formed"))
            .collect();
        ClauseRelation::new("equality", clauses)
    }

    pub fn uses_endpoints(&self) -> bool {
        self.clauses.iter().any(Clause::uses_endpoints)
    }

    fn lin_env<'a>(
        &'a self,
        cp: &'a AffineFlow,
        dp: &'a AffineFlow,
        ends: Option<&'a Endpoints>,
    ) -> impl Fn(&str) -> Option<LinExpr> + 'a {
        move |n: &str| {
            if n == "t" {
                return Some(LinExpr::atom("t"));
            }
            if let Some(v) = flow_atom("c.", n, cp).or_else(|| flow_atom("a.", n, dp)) {
                return Some(v);
            }
            if let Some(e) = ends.and_then(|e| e.get(n)) {
                return e.map(LinExpr::constant);
            }
            self.params.get(n).cloned().map(LinExpr::constant)
        }
    }

    /// Solution span of one clause on a window where both flows are affine.
    fn clause_span(&self, cl: &Clause, cp: &AffineFlow, dp: &AffineFlow, ends: &Endpoints, within: &Span) -> Result<Option<Span>> {
        if !cl.guards(&cp.mode, &dp.mode) {
            return Ok(None);
        }
        let mut span = match &cl.window {
            None => within.clone(),
            Some(w) => match within.intersect(&w.as_span()) {
                Some(s) => s,
                None => return Ok(None),
            },
        };
        let env = self.lin_env(cp, dp, Some(ends));
        for c in &cl.constraints {
            let lin = c.normal(&env)?;
            if lin.coeffs.keys().any(|k| k != "t") {
                let other = lin.coeffs.keys().find(|k| *k != "t").expect("some atom");
                return Err(Error::Unbound(other.clone()));
            }
            match cut(&span, &lin.coef("t"), &lin.constant, c.op) {
                Some(s) => span = s,
                None => return Ok(None),
            }
        }
        Ok(Some(span))
    }

    /// Evaluates `r(t)` on a state pair with explicit endpoint values.
    pub fn holds_with(&self, t: &Q, s: &State, sb: &State, ends: Option<&Endpoints>) -> Result<bool> {
        let mut failures = Vec::new();
        self.holds_explained(t, s, sb, ends, &mut failures)
    }

    /// As `holds_with`, collecting for each clause whose guards match the
    /// first violated constraint.
    pub fn holds_explained(
        &self,
        t: &Q,
        s: &State,
        sb: &State,
        ends: Option<&Endpoints>,
        failures: &mut Vec<ClauseFailure>,
    ) -> Result<bool> {
        if let Some(d) = &self.domain {
            if !d.iter().any(|i| i.contains(t)) {
                return Ok(false);
            }
        }
        for cl in &self.clauses {
            if !cl.guards(&s.mode, &sb.mode) || cl.window.as_ref().is_some_and(|w| !w.contains(t)) {
                continue;
            }
            if ends.is_none() && cl.uses_endpoints() {
                return Err(Error::EndpointSymbolsUnbound);
            }
            let env = |n: &str| -> Option<Q> {
                if n == "t" {
                    return Some(t.clone());
                }
                if let Some(v) = n.strip_prefix("c.") {
                    return s.vars.get(v).cloned();
                }
                if let Some(v) = n.strip_prefix("a.") {
                    return sb.vars.get(v).cloned();
                }
                if let Some(e) = ends.and_then(|e| e.get(n)) {
                    return e;
                }
                self.params.get(n).cloned()
            };
            let mut ok = true;
            for c in &cl.constraints {
                if !c.holds(&env)? {
                    let diff = c.lhs.eval(&env)? - c.rhs.eval(&env)?;
                    failures.push(ClauseFailure {
                        clause: cl.label.clone(),
                        constraint: c.to_string(),
                        lhs_minus_rhs: show_q(&diff),
                    });
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

impl TimedRelation for ClauseRelation {
    fn holds_at(&self, t: &Q, s: &State, sb: &State) -> Result<bool> {
        self.holds_with(t, s, sb, None)
    }

    fn satisfied_spans(&self, c: &Configuration, d: &Configuration, within: &Span) -> Result<Vec<Span>> {
        let ends = Endpoints::of(c, d);
        let mut out = Vec::new();
        for part in split(within, &joint_cuts(c, d)) {
            let w = part.witness();
            let (Some(cp), Some(dp)) = (c.piece_at(&w), d.piece_at(&w)) else {
                continue;
            };
            for cl in &self.clauses {
                if let Some(s) = self.clause_span(cl, cp, dp, &ends, &part)? {
                    out.push(s);
                }
            }
        }
        Ok(out)
    }

    fn domain(&self) -> Option<Vec<TimeInterval>> {
        self.domain.clone()
    }
}

/// Outcome of an exact check over a time range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    /// A time where the relation fails, when it does.
    #[serde(serialize_with = "ser_opt")]
    pub witness: Option<Q>,
    /// Set when the range was shortened by a truncated trajectory.
    pub truncated: bool,
}

fn ser_opt<S: serde::Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.serialize_some(&crate::rational::fmt_q(q)),
        None => s.serialize_none(),
    }
}

impl Verdict {
    fn pass(truncated: bool) -> Self {
        Verdict {
            holds: true,
            witness: None,
            truncated,
        }
    }

    fn fail(t: Q, truncated: bool) -> Self {
        Verdict {
            holds: false,
            witness: Some(t),
            truncated,
        }
    }
}

/// A time in `target ∩ dom(r)` where `<c(t), d(t)> ∉ r(t)`.
pub fn uncovered_in(r: &dyn TimedRelation, c: &Configuration, d: &Configuration, target: &Span) -> Result<Option<Q>> {
    for part in in_domain(r, target) {
        let ok = r.satisfied_spans(c, d, &part)?;
        if let Some(t) = first_uncovered(&part, &ok) {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// `<c, d> ∈ γ(r)`: the intervals overlap and the states are related throughout.
pub fn config_related(r: &dyn TimedRelation, c: &Configuration, d: &Configuration) -> Result<bool> {
    Ok(config_witness(r, c, d)?.is_none())
}

/// `None` when related, `Some(None)` when the intervals do not meet, else the failing time.
pub fn config_witness(r: &dyn TimedRelation, c: &Configuration, d: &Configuration) -> Result<Option<Option<Q>>> {
    let Some(w) = c.interval().intersect(d.interval()) else {
        return Ok(Some(None));
    };
    Ok(uncovered_in(r, c, d, &w.as_span())?.map(Some))
}

/// A finite relation between overlapping configurations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigRelation {
    pub pairs: Vec<(Configuration, Configuration)>,
}

impl ConfigRelation {
    pub fn new(pairs: Vec<(Configuration, Configuration)>) -> Result<Self> {
        if pairs.iter().any(|(c, d)| !c.interval().overlaps(d.interval())) {
            return Err(Error::NonOverlappingPair);
        }
        let mut pairs = pairs;
        pairs.sort();
        pairs.dedup();
        Ok(ConfigRelation { pairs })
    }

    pub fn contains(&self, c: &Configuration, d: &Configuration) -> bool {
        self.pairs.iter().any(|(x, y)| x == c && y == d)
    }

    /// `α(R)`.
    pub fn project(&self) -> ProjectedRelation {
        ProjectedRelation { pairs: self.pairs.clone() }
    }

    /// `R ⊆ γ(α(R))`.
    pub fn roundtrip_holds(&self) -> Result<bool> {
        let a = self.project();
        for (c, d) in &self.pairs {
            if !config_related(&a, c, d)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `α(R)(t) = {<f(t), f̄(t)> | <<f,i>, <f̄,ī>> ∈ R, t ∈ i ∩ ī}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectedRelation {
    pub pairs: Vec<(Configuration, Configuration)>,
}

impl ProjectedRelation {
    pub fn states_at(&self, t: &Q) -> Vec<(State, State)> {
        let mut out: Vec<(State, State)> = self
            .pairs
            .iter()
            .filter_map(|(c, d)| Some((c.eval(t)?, d.eval(t)?)))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

fn equal_span(span: &Span, x: &AffineFlow, y: &AffineFlow) -> Option<Span> {
    if x.mode != y.mode || x.initial.keys().ne(y.initial.keys()) {
        return None;
    }
    let mut s = span.clone();
    for v in x.initial.keys() {
        let dx = flow_atom("", v, x)?.sub(&flow_atom("", v, y)?);
        s = cut(&s, &dx.coef("t"), &dx.constant, CmpOp::Eq)?;
    }
    Some(s)
}

impl TimedRelation for ProjectedRelation {
    fn holds_at(&self, t: &Q, s: &State, sb: &State) -> Result<bool> {
        Ok(self
            .pairs
            .iter()
            .any(|(c, d)| c.eval(t).as_ref() == Some(s) && d.eval(t).as_ref() == Some(sb)))
    }

    fn satisfied_spans(&self, c: &Configuration, d: &Configuration, within: &Span) -> Result<Vec<Span>> {
        let mut out = Vec::new();
        for (pc, pd) in &self.pairs {
            let Some(w) = pc.interval().intersect(pd.interval()) else {
                continue;
            };
            let Some(w) = within.intersect(&w.as_span()) else {
                continue;
            };
            let mut cuts = joint_cuts(c, d);
            cuts.extend(joint_cuts(pc, pd));
            for part in split(&w, &cuts) {
                let t = part.witness();
                let pieces = (c.piece_at(&t), d.piece_at(&t), pc.piece_at(&t), pd.piece_at(&t));
                let (Some(a), Some(b), Some(pa), Some(pb)) = pieces else {
                    continue;
                };
                if let Some(s) = equal_span(&part, a, pa).and_then(|s| equal_span(&s, b, pb)) {
                    out.push(s);
                }
            }
        }
        Ok(out)
    }
}

fn range_end(s: &Trajectory, sb: &Trajectory) -> (TimePoint, bool) {
    let m = TimePoint::min(s.end(), sb.end());
    let truncated = (s.is_truncated() && s.end() == &m) || (sb.is_truncated() && sb.end() == &m);
    (m, truncated)
}

/// Timewise: `∀t ∈ [0, min(⟦σ⟧, ⟦σ̄⟧)) ∩ dom(r). <σ_t, σ̄_t> ∈ r(t)`.
pub fn traj_related_timewise(r: &dyn TimedRelation, s: &Trajectory, sb: &Trajectory) -> Result<Verdict> {
    let (m, truncated) = range_end(s, sb);
    let Some(range) = Span::new(Q::zero(), true, m, false) else {
        return Ok(Verdict::pass(truncated));
    };
    for c in s.configs() {
        for d in sb.configs() {
            let Some(w) = c.interval().intersect(d.interval()) else {
                continue;
            };
            let Some(target) = w.as_span().intersect(&range) else {
                continue;
            };
            if let Some(t) = uncovered_in(r, c, d, &target)? {
                return Ok(Verdict::fail(t, truncated));
            }
        }
    }
    Ok(Verdict::pass(truncated))
}

/// Which half of the rank-based check failed, with the unmatched rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankwiseVerdict {
    pub holds: bool,
    pub concrete_unmatched: Option<usize>,
    pub abstract_unmatched: Option<usize>,
}

/// Rank-based, literal form: (a) every concrete configuration ending within the
/// abstract duration is `γ(r)`-related to some abstract configuration, and
/// (b) symmetrically.
pub fn traj_related_rankwise(r: &dyn TimedRelation, s: &Trajectory, sb: &Trajectory) -> Result<RankwiseVerdict> {
    let side = |xs: &Trajectory, ys: &Trajectory, flip: bool| -> Result<Option<usize>> {
        for (j, c) in xs.configs().iter().enumerate() {
            if c.e() > ys.end() {
                continue;
            }
            let mut found = false;
            for d in ys.configs() {
                let ok = if flip { config_related(r, d, c)? } else { config_related(r, c, d)? };
                if ok {
                    found = true;
                    break;
                }
            }
            if !found {
                return Ok(Some(j));
            }
        }
        Ok(None)
    };
    let a = side(s, sb, false)?;
    let b = side(sb, s, true)?;
    Ok(RankwiseVerdict {
        holds: a.is_none() && b.is_none(),
        concrete_unmatched: a,
        abstract_unmatched: b,
    })
}

/// A rank-based form that agrees with the timewise check: every pair of overlapping
/// configurations is related on the part of their overlap before `min(⟦σ⟧, ⟦σ̄⟧)`.
pub fn traj_related_overlapwise(r: &dyn TimedRelation, s: &Trajectory, sb: &Trajectory) -> Result<bool> {
    let (m, _) = range_end(s, sb);
    let Some(range) = Span::new(Q::zero(), true, m, false) else {
        return Ok(true);
    };
    for c in s.configs() {
        for d in sb.configs() {
            let Some(w) = c.interval().intersect(d.interval()) else {
                continue;
            };
            if let Some(target) = w.as_span().intersect(&range) {
                // the slices are the pair's restriction to the quantified range
                let lo = &target.lo;
                let (cs, ds) = (
                    c.slice_raw(lo, &target.hi, target.hi_closed),
                    d.slice_raw(lo, &target.hi, target.hi_closed),
                );
                let (Some(cs), Some(ds)) = (cs, ds) else { continue };
                if uncovered_in(r, &cs, &ds, &target)?.is_some() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Semantics relation result: a witness for every concrete trajectory, or the first without one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemVerdict {
    pub holds: bool,
    /// `(concrete index, abstract index)` per matched trajectory.
    pub witnesses: Vec<(usize, usize)>,
    pub unmatched: Option<usize>,
}

/// `∀σ ∈ T. ∃σ̄ ∈ T̄. <σ, σ̄> ∈ R`.
pub fn sem_related(
    related: &dyn Fn(&Trajectory, &Trajectory) -> Result<bool>,
    t: &[Trajectory],
    tb: &[Trajectory],
) -> Result<SemVerdict> {
    let mut witnesses = Vec::new();
    for (i, s) in t.iter().enumerate() {
        let mut hit = None;
        for (j, sb) in tb.iter().enumerate() {
            if related(s, sb)? {
                hit = Some(j);
                break;
            }
        }
        match hit {
            Some(j) => witnesses.push((i, j)),
            None => {
                return Ok(SemVerdict {
                    holds: false,
                    witnesses,
                    unmatched: Some(i),
                })
            }
        }
    }
    Ok(SemVerdict {
        holds: true,
        witnesses,
        unmatched: None,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationFile {
    #[serde(default)]
    name: String,
    #[serde(default)]
    params: BTreeMap<String, String>,
    clauses: Vec<ClauseFile>,
    domain: Option<Vec<WindowFile>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClauseFile {
    #[serde(default)]
    label: String,
    concrete_mode: Option<String>,
    abstract_mode: Option<String>,
    window: Option<WindowFile>,
    #[serde(default)]
    constraints: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowFile {
    lo: String,
    hi: String,
    #[serde(default)]
    closed: bool,
}

/// Parses a relation file: clauses with mode guards, optional windows and
/// affine constraint strings.
pub fn load_relation(src: &str) -> Result<ClauseRelation> {
    let f: RelationFile = serde_json::from_str(src).map_err(json_error)?;
    let q = |s: &str| parse_q(s).map_err(|e| locate(src, s, e));
    let window = |w: &WindowFile| -> Result<TimeInterval> {
        let hi = if w.hi.trim() == "inf" { TimePoint::Infinity } else { TimePoint::Finite(q(&w.hi)?) };
        TimeInterval::try_raw(q(&w.lo)?, hi, w.closed).ok_or(Error::EmptyIntersection)
    };
    let mut params = BTreeMap::new();
    for (k, v) in &f.params {
        params.insert(k.clone(), q(v)?);
    }
    let mut clauses = Vec::new();
    for (n, c) in f.clauses.iter().enumerate() {
        clauses.push(Clause {
            label: if c.label.is_empty() { format!("clause{n}") } else { c.label.clone() },
            window: c.window.as_ref().map(window).transpose()?,
            concrete_mode: c.concrete_mode.clone(),
            abstract_mode: c.abstract_mode.clone(),
            constraints: c
                .constraints
                .iter()
                .map(|s| parse_constraint(s).map_err(|e| locate(src, s, e)))
                .collect::<Result<_>>()?,
        });
    }
    Ok(ClauseRelation {
        name: f.name,
        params,
        clauses,
        domain: f.domain.as_ref().map(|d| d.iter().map(window).collect()).transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    fn z() -> Q {
        q(1, 100)
    }

    fn cfg(mode: &str, lo: i64, hi: Option<i64>, y0: Q, rate: Q) -> Configuration {
        let hi = hi.map_or(TimePoint::Infinity, |h| TimePoint::Finite(int(h)));
        Configuration::affine(mode, &[("y", y0, rate)], TimeInterval::new(int(lo), hi, &z()).unwrap())
    }

    fn eq_rel() -> ClauseRelation {
        ClauseRelation::equality(&["m", "n"], &["y"])
    }

    #[test]
    fn disjoint_configurations_are_unrelated() {
        let c = cfg("m", 0, Some(1), int(0), int(0));
        let d = cfg("m", 1, Some(2), int(0), int(0));
        assert!(!config_related(&eq_rel(), &c, &d).unwrap());
    }

    #[test]
    fn failure_at_the_right_limit_only() {
        // y = t and ȳ = 2 - t meet at t = 1, the open end of the overlap
        let c = cfg("m", 0, Some(1), int(0), int(1));
        let d = cfg("m", 0, Some(1), int(2), int(-1));
        let le = ClauseRelation::new("le", vec![Clause::new("le", None, None, &["c.y < a.y"]).unwrap()]);
        assert!(config_related(&le, &c, &d).unwrap());
        let closed = ClauseRelation::new("le", vec![Clause::new("le", None, None, &["c.y < a.y"]).unwrap()]);
        let cc = c.closure();
        let dc = d.closure();
        assert_eq!(config_witness(&closed, &cc, &dc).unwrap(), Some(Some(int(1))));
    }

    #[test]
    fn cut_solutions() {
        let s = Span::new(int(0), true, int(4).into(), false).unwrap();
        let ge = cut(&s, &int(1), &int(-1), CmpOp::Ge).unwrap();
        assert_eq!(ge, Span::new(int(1), true, int(4).into(), false).unwrap());
        let lt = cut(&s, &int(-2), &int(4), CmpOp::Gt).unwrap();
        assert_eq!(lt, Span::new(int(0), true, int(2).into(), false).unwrap());
        assert_eq!(cut(&s, &int(1), &int(-4), CmpOp::Eq), None);
        assert_eq!(cut(&s, &int(1), &int(-3), CmpOp::Eq), Some(Span::point(int(3))));
        assert_eq!(cut(&s, &int(0), &int(1), CmpOp::Le), None);
    }

    #[test]
    fn projection() {
        let c = cfg("m", 0, Some(2), int(0), int(1));
        let d = cfg("m", 1, Some(3), int(5), int(0));
        let r = ConfigRelation::new(vec![(c.clone(), d.clone())]).unwrap();
        let a = r.project();
        let at = a.states_at(&q(3, 2));
        assert_eq!(at, vec![(c.eval(&q(3, 2)).unwrap(), d.eval(&q(3, 2)).unwrap())]);
        assert!(a.states_at(&int(5)).is_empty());
        assert!(r.roundtrip_holds().unwrap());
        let far = cfg("m", 5, Some(6), int(0), int(0));
        assert_eq!(ConfigRelation::new(vec![(c, far)]), Err(Error::NonOverlappingPair));
    }

    #[test]
    fn timewise_and_rankwise_on_identity() {
        let s = Trajectory::new(vec![cfg("m", 0, Some(1), int(0), int(1)), cfg("n", 1, None, int(1), int(0))]).unwrap();
        assert!(traj_related_timewise(&eq_rel(), &s, &s).unwrap().holds);
        assert!(traj_related_rankwise(&eq_rel(), &s, &s).unwrap().holds);
    }

    #[test]
    fn endpoint_clauses_need_context() {
        let r = ClauseRelation::new("ends", vec![Clause::new("e", None, None, &["t - B_c >= 0"]).unwrap()]);
        let s = State::new("m", &[("y", int(0))]);
        assert_eq!(r.holds_at(&int(0), &s, &s), Err(Error::EndpointSymbolsUnbound));
        let c = cfg("m", 0, Some(1), int(0), int(0));
        assert!(config_related(&r, &c, &c).unwrap());
    }

    #[test]
    fn relation_file() {
        let r = load_relation(
            r#"{"name": "r", "params": {"eps": "1/4"},
                "clauses": [{"concrete_mode": "m", "abstract_mode": "m",
                             "constraints": ["c.y <= a.y + eps"]}]}"#,
        )
        .unwrap();
        let c = cfg("m", 0, Some(1), int(0), int(0));
        let d = cfg("m", 0, Some(1), q(-1, 4), int(0));
        assert!(config_related(&r, &c, &d).unwrap());
    }
}
