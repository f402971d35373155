//! The water tank: its specification, the two-mode automaton, the valve
//! implementation with actuation delay, the relations between them, and the
//! named counterexample fixtures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::discretize::{theorem6_check, theorem7_check, timeless_demo, SamplingConvention, Theorem6Report, Theorem7Report, TimelessDemo};
use crate::error::{Error, Result};
use crate::expr::{parse_constraint, parse_expr, CmpOp};
use crate::flow::{AffineFlow, Configuration};
use crate::homomorphism::StateMap;
use crate::hts::{EdgeSchema, Exit, ExplicitSystem, InitialSchema, ModeSchema, SchemaSystem};
use crate::rational::{int, q, show_q, Q};
use crate::relation::{cut, sem_related, traj_related_timewise, uncovered_in, Clause, ClauseFailure, ClauseRelation, Endpoints, SemVerdict, Verdict};
use crate::simulation::{compose_check, preservation_check, sim_check, well_nested_check, ComposeReport, NestingReport, PreservationReport, SimMode, SimReport};
use crate::time::{Span, TimeInterval, TimePoint};
use crate::trajectory::Trajectory;

const LEVEL_MAX: i64 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TankParams {
    /// Valve actuation delay.
    #[serde(with = "crate::rational::serde_q")]
    pub epsilon: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub zeta: Q,
    #[serde(serialize_with = "ser_qs")]
    pub x0_samples: Vec<Q>,
    #[serde(with = "crate::rational::serde_q")]
    pub delta: Q,
}

fn ser_qs<S: serde::Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(crate::rational::fmt_q))
}

impl Default for TankParams {
    fn default() -> Self {
        TankParams {
            epsilon: q(1, 4),
            zeta: q(1, 100),
            x0_samples: vec![int(0), int(1), int(2)],
            delta: int(1),
        }
    }
}

impl TankParams {
    pub fn with_x0(&self, x0: &[Q]) -> Self {
        TankParams {
            x0_samples: x0.to_vec(),
            ..self.clone()
        }
    }

    /// The abstract shut phase from `x` lasts `3 - x`, later ones at least
    /// `3/2`; the implementation needs each to exceed `2ε`.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ParamConstraintViolated(m));
        if !self.zeta.is_positive() {
            return bad(format!("zeta = {} must be positive", show_q(&self.zeta)));
        }
        if self.epsilon <= self.zeta {
            return bad(format!(
                "epsilon = {} must exceed zeta = {}",
                show_q(&self.epsilon),
                show_q(&self.zeta)
            ));
        }
        if !self.delta.is_positive() {
            return bad(format!("delta = {} must be positive", show_q(&self.delta)));
        }
        let two_eps = &self.epsilon * int(2);
        if q(3, 2) - &two_eps < self.zeta {
            return bad(format!("epsilon = {} leaves no shut phase after the first cycle", show_q(&self.epsilon)));
        }
        if self.x0_samples.is_empty() {
            return bad("no initial x sample".into());
        }
        for x in &self.x0_samples {
            if x.is_negative() || *x >= int(LEVEL_MAX) {
                return bad(format!("x0 = {} outside [0, 3)", show_q(x)));
            }
            if int(LEVEL_MAX) - x - &two_eps < self.zeta {
                return bad(format!("x0 = {} leaves a first shut phase shorter than 2 epsilon", show_q(x)));
            }
        }
        Ok(())
    }
}

fn mode(name: &str, rates: &[(&str, &str)], exit: Exit) -> ModeSchema {
    ModeSchema {
        name: name.to_string(),
        rates: rates
            .iter()
            .map(|(v, e)| (v.to_string(), parse_expr(e).expect("fixture rate")))
            .collect(),
        entry: Vec::new(),
        exit,
        terminal: false,
    }
}

fn edge(from: &str, to: &str, reset: &[(&str, &str)]) -> EdgeSchema {
    EdgeSchema {
        from: from.to_string(),
        to: to.to_string(),
        guard: Vec::new(),
        reset: reset
            .iter()
            .map(|(v, e)| (v.to_string(), parse_expr(e).expect("fixture reset")))
            .collect(),
    }
}

fn when(e: &str) -> Exit {
    Exit::When(parse_expr(e).expect("fixture exit"))
}

fn initial(mode: &str, x0: &[Q]) -> InitialSchema {
    InitialSchema {
        mode: mode.to_string(),
        constraints: ["x >= 0", "x < 3", "y = 0"]
            .iter()
            .map(|c| parse_constraint(c).expect("fixture constraint"))
            .collect(),
        samples: x0
            .iter()
            .map(|x| BTreeMap::from([("x".to_string(), x.clone()), ("y".to_string(), Q::zero())]))
            .collect(),
    }
}

/// Valve shut fills at rate 1 until the timer `x` reaches 3; valve open
/// drains at rate 2 until empty.
pub fn build_tank_automaton(p: &TankParams) -> Result<SchemaSystem> {
    p.validate()?;
    Ok(SchemaSystem {
        variables: vec!["x".into(), "y".into()],
        params: BTreeMap::new(),
        modes: vec![
            mode("shut", &[("x", "1"), ("y", "1")], when("x - 3")),
            mode("open", &[("x", "1"), ("y", "-2")], when("y")),
        ],
        edges: vec![edge("shut", "open", &[("x", "0")]), edge("open", "shut", &[("y", "0")])],
        initial: vec![initial("shut", &p.x0_samples)],
        zeta: p.zeta.clone(),
    })
}

/// Shut-phase filling rate of the implementation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImplRate {
    /// `3/(3 - 2ε)`, exact only when the abstract phase lasts 3.
    Published,
    /// `D/(D - 2ε)` with `D = 3 + ε - x` at entry, so the level reaches the
    /// abstract one when the valve finishes opening.
    Corrected,
}

/// The valve takes `ε` to close (`off`, level held at 0) and `ε` to open
/// (`on`, level held).
pub fn build_tank_impl(p: &TankParams, rate: ImplRate) -> Result<SchemaSystem> {
    p.validate()?;
    let shut_rate = match rate {
        ImplRate::Published => "3 / (3 - 2 * eps)",
        ImplRate::Corrected => "(3 + eps - x) / (3 - eps - x)",
    };
    Ok(SchemaSystem {
        variables: vec!["x".into(), "y".into()],
        params: BTreeMap::from([("eps".to_string(), p.epsilon.clone())]),
        modes: vec![
            mode("off", &[("x", "1")], Exit::After(parse_expr("eps")?)),
            mode("shut", &[("x", "1"), ("y", shut_rate)], when("x - 3 + eps")),
            mode("on", &[("x", "1")], Exit::After(parse_expr("eps")?)),
            mode("open", &[("x", "1"), ("y", "-2")], when("y")),
        ],
        edges: vec![
            edge("off", "shut", &[]),
            edge("shut", "on", &[]),
            edge("on", "open", &[("x", "0")]),
            edge("open", "off", &[("y", "0")]),
        ],
        initial: vec![initial("off", &p.x0_samples)],
        zeta: p.zeta.clone(),
    })
}

/// Enough steps for every configuration starting before `horizon`.
pub fn tank_depth(horizon: &Q) -> usize {
    let h = horizon.ceil().to_integer();
    let h: usize = h.try_into().unwrap_or(0);
    4 * h + 16
}

/// The automaton's trajectory from one initial timer value.
pub fn automaton_trajectory(p: &TankParams, x0: &Q, horizon: &Q) -> Result<Trajectory> {
    single(build_tank_automaton(&p.with_x0(std::slice::from_ref(x0)))?, horizon)
}

pub fn impl_trajectory(p: &TankParams, rate: ImplRate, x0: &Q, horizon: &Q) -> Result<Trajectory> {
    single(build_tank_impl(&p.with_x0(std::slice::from_ref(x0)), rate)?, horizon)
}

fn single(s: SchemaSystem, horizon: &Q) -> Result<Trajectory> {
    let mut sem = s.generate(horizon, tank_depth(horizon))?;
    assert_eq!(sem.trajectories.len(), 1, "the tank is deterministic");
    Ok(sem.trajectories.remove(0))
}

// ---------------------------------------------------------------------------
// Specification predicate

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecClause {
    /// `0 ≤ y ≤ 3` throughout.
    LevelBounds,
    /// The level strictly decreases while the valve stays open.
    DrainsWhileOpen,
    /// The level strictly increases while the valve stays shut.
    FillsWhileShut,
    /// An empty tank is no longer empty `ζ` later.
    LeavesEmpty,
}

impl fmt::Display for SpecClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecClause::LevelBounds => "level-bounds",
            SpecClause::DrainsWhileOpen => "drains-while-open",
            SpecClause::FillsWhileShut => "fills-while-shut",
            SpecClause::LeavesEmpty => "leaves-empty",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecViolation {
    pub clause: SpecClause,
    /// Configuration rank containing `time`.
    pub rank: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub time: Q,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecReport {
    pub holds: bool,
    pub violations: Vec<SpecViolation>,
    /// End of the checked range `[0, checked_until)`.
    pub checked_until: TimePoint,
    /// Per configuration rank, the clauses it violates.
    pub per_config: Vec<BTreeSet<SpecClause>>,
}

impl SpecReport {
    pub fn first(&self, clause: SpecClause) -> Option<&SpecViolation> {
        self.violations.iter().find(|v| v.clause == clause)
    }

    pub fn violated(&self) -> BTreeSet<SpecClause> {
        self.violations.iter().map(|v| v.clause).collect()
    }
}

struct Seg<'a> {
    span: Span,
    flow: &'a AffineFlow,
}

impl Seg<'_> {
    /// `y(t) = k t + m`.
    fn coeffs(&self) -> (Q, Q) {
        let k = self.flow.rate.get("y").cloned().unwrap_or_else(Q::zero);
        let y0 = self.flow.initial.get("y").cloned().unwrap_or_else(Q::zero);
        let m = y0 - &k * &self.flow.anchor;
        (k, m)
    }

    fn y(&self, t: &Q) -> Q {
        let (k, m) = self.coeffs();
        k * t + m
    }

    fn rate(&self) -> Q {
        self.coeffs().0
    }

    fn mode(&self) -> &str {
        &self.flow.mode
    }
}

fn segments<'a>(s: &'a Trajectory, range: &Span) -> Vec<Seg<'a>> {
    let mut out = Vec::new();
    for c in s.configs() {
        for (iv, flow) in c.segments() {
            if let Some(span) = iv.as_span().intersect(range) {
                out.push(Seg { span, flow });
            }
        }
    }
    out
}

/// Decides the tank property exactly on `[0, min(⟦σ⟧, limit))`: ranges and
/// monotonicity follow from the rates of the affine pieces, and every zero of
/// the level is found in closed form.
pub fn spec_predicate_check(s: &Trajectory, zeta: &Q, limit: &TimePoint) -> SpecReport {
    let end = TimePoint::min(s.end(), limit);
    let mut violations = Vec::new();
    let Some(range) = Span::new(Q::zero(), true, end.clone(), false) else {
        return SpecReport {
            holds: true,
            violations,
            checked_until: end,
            per_config: vec![BTreeSet::new(); s.len()],
        };
    };
    let segs = segments(s, &range);
    let mut push = |clause, time: Q, detail: String| {
        let rank = s.rank_at(&time).expect("witness inside the trajectory");
        violations.push(SpecViolation { clause, rank, time, detail });
    };

    for g in &segs {
        let (k, m) = g.coeffs();
        let high = cut(&g.span, &k, &(&m - int(LEVEL_MAX)), CmpOp::Gt);
        let low = cut(&g.span, &k, &m, CmpOp::Lt);
        let bad = match (high, low) {
            (Some(a), Some(b)) => Some(if a.lo <= b.lo { a } else { b }),
            (a, b) => a.or(b),
        };
        if let Some(b) = bad {
            let t = b.witness();
            let y = g.y(&t);
            push(SpecClause::LevelBounds, t, format!("y = {}", show_q(&y)));
        }
    }

    // maximal runs of one valve position
    let mut i = 0;
    while i < segs.len() {
        let m = segs[i].mode();
        let mut j = i + 1;
        while j < segs.len() && segs[j].mode() == m {
            j += 1;
        }
        let want = match m {
            "open" => Some((SpecClause::DrainsWhileOpen, -1)),
            "shut" => Some((SpecClause::FillsWhileShut, 1)),
            _ => None,
        };
        if let Some((clause, sign)) = want {
            for k in i..j {
                let g = &segs[k];
                let single_point = g.span.hi.cmp_q(&g.span.lo).is_eq();
                let r = g.rate();
                let ok = single_point || (sign < 0 && r.is_negative()) || (sign > 0 && r.is_positive());
                if !ok {
                    push(clause, g.span.witness(), format!("rate {} in mode {m}", show_q(&r)));
                    break;
                }
                if k > i {
                    let prev = &segs[k - 1];
                    let b = &g.span.lo;
                    let (left, here) = (prev.y(b), g.y(b));
                    let broken = if sign < 0 { here > left } else { here < left };
                    if broken {
                        push(clause, b.clone(), format!("jump from {} to {} in mode {m}", show_q(&left), show_q(&here)));
                        break;
                    }
                }
            }
        }
        i = j;
    }

    'zeros: for g in &segs {
        let (k, m) = g.coeffs();
        let Some(z) = cut(&g.span, &k, &m, CmpOp::Eq) else { continue };
        let shifted = Span::new(
            &z.lo + zeta,
            z.lo_closed,
            match &z.hi {
                TimePoint::Finite(h) => TimePoint::Finite(h + zeta),
                TimePoint::Infinity => TimePoint::Infinity,
            },
            z.hi_closed,
        )
        .expect("translate of a non-empty span");
        for h in &segs {
            let Some(part) = h.span.intersect(&shifted) else { continue };
            let (k2, m2) = h.coeffs();
            if let Some(bad) = cut(&part, &k2, &m2, CmpOp::Le) {
                let t2 = bad.witness();
                let t = &t2 - zeta;
                push(
                    SpecClause::LeavesEmpty,
                    t.clone(),
                    format!("y = 0 at t = {} and y = {} at t = {}", show_q(&t), show_q(&h.y(&t2)), show_q(&t2)),
                );
                break 'zeros;
            }
        }
    }

    let mut per_config = vec![BTreeSet::new(); s.len()];
    for v in &violations {
        per_config[v.rank].insert(v.clause);
    }
    SpecReport {
        holds: violations.is_empty(),
        violations,
        checked_until: end,
        per_config,
    }
}

// ---------------------------------------------------------------------------
// Specification catalog

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecEntry {
    pub name: String,
    pub trajectory: Trajectory,
    /// The property decided within the catalog's check range.
    pub member: bool,
    pub report: SpecReport,
}

/// A finite stand-in for the specification: single-configuration trajectories
/// on `[0, ∞)`, with membership decided by [`spec_predicate_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecCatalog {
    pub entries: Vec<SpecEntry>,
    #[serde(with = "crate::rational::serde_q")]
    pub checked_until: Q,
}

impl SpecCatalog {
    pub fn members(&self) -> Vec<&SpecEntry> {
        self.entries.iter().filter(|e| e.member).collect()
    }

    /// All entries, members or not.
    pub fn trajectories(&self) -> Vec<Trajectory> {
        self.entries.iter().map(|e| e.trajectory.clone()).collect()
    }

    /// The members as a system: every configuration initial, no steps.
    pub fn system(&self, zeta: &Q) -> ExplicitSystem {
        let configs: Vec<Configuration> = self.members().iter().map(|e| e.trajectory.configs()[0].clone()).collect();
        let init: Vec<usize> = (0..configs.len()).collect();
        ExplicitSystem::new(configs, zeta.clone()).with_initial(&init)
    }
}

fn level_projection() -> StateMap {
    StateMap::projection(&["y"])
}

/// Glues the level projection of a trajectory into one configuration, the
/// last piece extended to `∞`.
pub fn spec_configuration(s: &Trajectory) -> Configuration {
    let h = level_projection();
    let pieces: Vec<AffineFlow> = s.configs().iter().flat_map(|c| h.config(c).pieces().to_vec()).collect();
    Configuration::from_pieces(pieces, TimeInterval::raw(Q::zero(), TimePoint::Infinity, false))
}

fn piece(mode: &str, anchor: Q, y0: Q, rate: Q) -> AffineFlow {
    AffineFlow::from_pairs(mode, anchor, &[("y", y0, rate)])
}

fn unbounded(pieces: Vec<AffineFlow>) -> Result<Trajectory> {
    Trajectory::new(vec![Configuration::from_pieces(
        pieces,
        TimeInterval::raw(Q::zero(), TimePoint::Infinity, false),
    )])
}

/// Catalog for the automaton's samples: their projections, plus entries that
/// agree with them at first and then leave the property.
pub fn spec_catalog(p: &TankParams, horizon: &Q) -> Result<SpecCatalog> {
    let check = horizon + int(6);
    let gen = horizon + int(9);
    let mut raw: Vec<(String, Trajectory)> = Vec::new();
    for x0 in &p.x0_samples {
        let s = automaton_trajectory(p, x0, &gen)?;
        raw.push((format!("automaton x0={}", show_q(x0)), Trajectory::new(vec![spec_configuration(&s)])?));
    }
    raw.push(("fills forever".into(), unbounded(vec![piece("shut", Q::zero(), Q::zero(), Q::one())])?));
    raw.push(("drains below empty".into(), unbounded(vec![piece("open", Q::zero(), Q::zero(), int(-2))])?));
    let wait = &p.zeta * int(2);
    raw.push((
        "stays empty".into(),
        unbounded(vec![
            piece("shut", Q::zero(), Q::zero(), Q::zero()),
            piece("shut", wait.clone(), Q::zero(), Q::one()),
            piece("open", &wait + int(2), int(2), int(-2)),
            piece("shut", &wait + int(3), Q::zero(), Q::one()),
        ])?,
    ));
    let entries = raw
        .into_iter()
        .map(|(name, trajectory)| {
            let report = spec_predicate_check(&trajectory, &p.zeta, &TimePoint::Finite(check.clone()));
            SpecEntry {
                name,
                member: report.holds,
                trajectory,
                report,
            }
        })
        .collect();
    Ok(SpecCatalog {
        entries,
        checked_until: check,
    })
}

// ---------------------------------------------------------------------------
// Relations

/// Same valve position and level; the timer is ignored.
pub fn r39() -> ClauseRelation {
    let mut r = ClauseRelation::equality(&["shut", "open"], &["y"]);
    r.name = "level".into();
    r
}

/// Which form of the implementation-to-automaton relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum R53Form {
    /// Literal form, over the interval endpoints.
    Published,
    /// Endpoint form with the shut case's sides swapped and the on case's
    /// denominator measured from the concrete start.
    Corrected,
    /// The corrected form with the endpoints eliminated: a bound on the
    /// level difference per mode pair.
    State,
}

impl fmt::Display for R53Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            R53Form::Published => "published",
            R53Form::Corrected => "corrected",
            R53Form::State => "state",
        })
    }
}

pub fn r53(eps: &Q, form: R53Form) -> ClauseRelation {
    let cl = |label: &str, c: &str, a: &str, cons: &[&str]| Clause::new(label, Some(c), Some(a), cons).expect("fixture clause");
    let clauses = match form {
        R53Form::Published | R53Form::Corrected => {
            let (shut, on) = match form {
                R53Form::Published => (
                    "a.y = c.y + eps * (1 - 2 * (E_c - t) / (E_c - B_c))",
                    "c.y = a.y + eps * (E_a - t) / (E_a - E_c)",
                ),
                _ => (
                    "c.y = a.y + eps * (1 - 2 * (E_c - t) / (E_c - B_c))",
                    "c.y = a.y + eps * (E_a - t) / (E_a - B_c)",
                ),
            };
            vec![
                cl("off", "off", "shut", &["c.x = a.x", "c.y = 0", "a.y = t - B_c", "B_c = B_a", "E_c = B_a + eps"]),
                cl("shut", "shut", "shut", &["c.x = a.x", "B_c = B_a + eps", "E_c = E_a - eps", shut]),
                cl("on", "on", "shut", &["c.x = a.x", "B_c = E_a - eps", "E_c = E_a", on]),
                cl("open", "open", "open", &["c.x = a.x", "c.y = a.y", "B_c = B_a", "E_c = E_a"]),
            ]
        }
        R53Form::State => vec![
            cl("off", "off", "shut", &["c.x = a.x", "c.y = 0", "a.y >= 0", "a.y < eps"]),
            cl("shut", "shut", "shut", &["c.x = a.x", "c.y - a.y >= -eps", "c.y - a.y < eps"]),
            cl("on", "on", "shut", &["c.x = a.x", "c.y - a.y > 0", "c.y - a.y <= eps"]),
            cl("open", "open", "open", &["c.x = a.x", "c.y = a.y"]),
        ],
    };
    ClauseRelation::new(&format!("impl-{form}"), clauses).with_param("eps", eps.clone())
}

/// `{r39, R53}` with the literal relation between implementation and automaton.
pub fn tank_relations(p: &TankParams) -> (ClauseRelation, ClauseRelation) {
    (r39(), r53(&p.epsilon, R53Form::Published))
}

// ---------------------------------------------------------------------------
// Refinement chain

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecMatch {
    #[serde(with = "crate::rational::serde_q")]
    pub x0: Q,
    pub catalog_entry: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemanticStage {
    pub holds: bool,
    pub verdict: SemVerdict,
    pub matches: Vec<SpecMatch>,
    /// Every automaton trajectory satisfies the property.
    pub automaton_in_spec: bool,
}

/// Pointwise comparison of one implementation trajectory with the automaton's.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pointwise {
    #[serde(with = "crate::rational::serde_q")]
    pub x0: Q,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
    /// Clauses whose mode guards match at the failing time, with the first
    /// violated constraint.
    pub failures: Vec<ClauseFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VariantReport {
    pub relation: R53Form,
    pub rate: ImplRate,
    pub simulation: Option<SimReport>,
    pub error: Option<String>,
    pub pointwise: Vec<Pointwise>,
    /// The relation evaluated once per concrete mode, mid-configuration, on
    /// the first sample; reaches clauses the pointwise check stops before.
    pub probes: Vec<ClauseProbe>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseProbe {
    pub mode: String,
    #[serde(with = "crate::rational::serde_q")]
    pub time: Q,
    pub holds: Option<bool>,
    pub error: Option<String>,
    pub failures: Vec<ClauseFailure>,
}

fn probes(r: &ClauseRelation, s: &Trajectory, sb: &Trajectory) -> Vec<ClauseProbe> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for c in s.configs() {
        let TimePoint::Finite(e) = c.e() else { continue };
        if !seen.insert(c.mode().to_string()) {
            continue;
        }
        let t = (c.b() + e) / int(2);
        let Some(d) = sb.rank_at(&t).map(|k| &sb.configs()[k]) else { continue };
        let (a, b) = (c.eval(&t).expect("midpoint"), d.eval(&t).expect("midpoint"));
        let mut failures = Vec::new();
        let (holds, error) = match r.holds_explained(&t, &a, &b, Some(&Endpoints::of(c, d)), &mut failures) {
            Ok(h) => (Some(h), None),
            Err(e) => (None, Some(e.to_string())),
        };
        out.push(ClauseProbe {
            mode: c.mode().to_string(),
            time: t,
            holds,
            error,
            failures,
        });
    }
    out
}

impl VariantReport {
    pub fn passes(&self) -> bool {
        self.simulation.as_ref().is_some_and(|s| s.verdict)
    }

    /// A failing variant names a witness: an error, a violation, or a
    /// pointwise failure time.
    pub fn documented(&self) -> bool {
        self.passes()
            || self.error.is_some()
            || self.simulation.as_ref().is_some_and(|s| !s.violations.is_empty())
            || self.pointwise.iter().any(|p| p.error.is_some() || p.verdict.as_ref().is_some_and(|v| v.witness.is_some()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OffPhase {
    #[serde(with = "crate::rational::serde_q")]
    pub begin: Q,
    pub end: TimePoint,
    /// On the whole phase the implementation level is 0 while the
    /// specification level is `t - begin`.
    pub matches: bool,
    #[serde(serialize_with = "crate::simulation::ser_opt_q")]
    pub witness: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompositionStage {
    #[serde(with = "crate::rational::serde_q")]
    pub x0: Q,
    pub nesting_impl: NestingReport,
    pub nesting_automaton: NestingReport,
    pub compose: Option<ComposeReport>,
    pub error: Option<String>,
    pub off_phases: Vec<OffPhase>,
    /// Clauses of the property the implementation's level violates.
    pub impl_spec_violations: BTreeSet<SpecClause>,
}

impl CompositionStage {
    pub fn holds(&self) -> bool {
        self.nesting_impl.holds
            && self.nesting_automaton.holds
            && self.compose.as_ref().is_some_and(|c| c.holds)
            && self.off_phases.iter().all(|o| o.matches)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefinementReport {
    pub params: TankParams,
    #[serde(with = "crate::rational::serde_q")]
    pub horizon: Q,
    /// The horizon ends before the first abstract shut phase can.
    pub horizon_bounded: bool,
    pub semantic: SemanticStage,
    pub simulation: Vec<VariantReport>,
    pub composition: Vec<CompositionStage>,
    /// Well-nesting over all samples at once, which fails across samples
    /// with different timelines.
    pub cross_sample_nesting: NestingReport,
}

impl RefinementReport {
    /// The semantic and composition stages pass and every simulation
    /// variant either passes or documents its failure.
    pub fn holds(&self) -> bool {
        self.semantic.holds && self.simulation.iter().all(VariantReport::documented) && self.composition.iter().all(CompositionStage::holds)
    }

    pub fn variant(&self, relation: R53Form, rate: ImplRate) -> Option<&VariantReport> {
        self.simulation.iter().find(|v| v.relation == relation && v.rate == rate)
    }
}

fn stage_error(stage: &str, e: Error) -> String {
    format!("{stage}: {e}")
}

fn pointwise(r: &ClauseRelation, x0: &Q, s: &Trajectory, sb: &Trajectory) -> Pointwise {
    match traj_related_timewise(r, s, sb) {
        Err(e) => Pointwise {
            x0: x0.clone(),
            verdict: None,
            error: Some(e.to_string()),
            failures: Vec::new(),
        },
        Ok(v) => {
            let mut failures = Vec::new();
            if let Some(t) = &v.witness {
                if let (Some(j), Some(k)) = (s.rank_at(t), sb.rank_at(t)) {
                    let (c, d) = (&s.configs()[j], &sb.configs()[k]);
                    let ends = Endpoints::of(c, d);
                    if let (Some(a), Some(b)) = (c.eval(t), d.eval(t)) {
                        let _ = r.holds_explained(t, &a, &b, Some(&ends), &mut failures);
                    }
                }
            }
            Pointwise {
                x0: x0.clone(),
                verdict: Some(v),
                error: None,
                failures,
            }
        }
    }
}

fn off_phases(s: &Trajectory, spec: &Trajectory, eps: &Q, horizon: &Q) -> Result<Vec<OffPhase>> {
    let rel = ClauseRelation::new(
        "off-phase",
        vec![Clause::new("off", Some("off"), None, &["c.y = 0", "a.y = t - B_c"])?],
    )
    .with_param("eps", eps.clone());
    let d = &spec.configs()[0];
    let mut out = Vec::new();
    for c in s.configs().iter().filter(|c| c.mode() == "off" && c.b() < horizon) {
        let witness = uncovered_in(&rel, c, d, &c.interval().as_span())?;
        out.push(OffPhase {
            begin: c.b().clone(),
            end: c.e().clone(),
            matches: witness.is_none(),
            witness,
        });
    }
    Ok(out)
}

/// Runs the three stages: the automaton against the specification catalog,
/// the implementation against the automaton by synchronous simulation, and
/// the composed chain per initial sample.
pub fn run_refinement_chain(p: &TankParams, horizon: &Q) -> Result<RefinementReport> {
    p.validate()?;
    let depth = tank_depth(horizon);
    let catalog = spec_catalog(p, horizon).map_err(|e| Error::PremiseFailed(stage_error("catalog", e)))?;
    let spec_ts = catalog.trajectories();
    let r_level = r39();

    // stage i
    let automaton: Vec<Trajectory> = p
        .x0_samples
        .iter()
        .map(|x0| automaton_trajectory(p, x0, horizon))
        .collect::<Result<_>>()?;
    let members: Vec<bool> = catalog.entries.iter().map(|e| e.member).collect();
    let related = |s: &Trajectory, sb: &Trajectory| -> Result<bool> {
        let k = spec_ts.iter().position(|x| x == sb).expect("catalog entry");
        Ok(members[k] && traj_related_timewise(&r_level, s, sb)?.holds)
    };
    let verdict = sem_related(&related, &automaton, &spec_ts)?;
    let matches = verdict
        .witnesses
        .iter()
        .map(|&(i, j)| SpecMatch {
            x0: p.x0_samples[i].clone(),
            catalog_entry: catalog.entries[j].name.clone(),
        })
        .collect();
    let automaton_in_spec = automaton
        .iter()
        .all(|s| spec_predicate_check(s, &p.zeta, &TimePoint::Finite(horizon.clone())).holds);
    let semantic = SemanticStage {
        holds: verdict.holds && automaton_in_spec,
        verdict: verdict.clone(),
        matches,
        automaton_in_spec,
    };

    // stage ii
    let tau3 = build_tank_automaton(p)?.instantiate(horizon, depth)?;
    let mut simulation = Vec::new();
    let variants = [
        (R53Form::Published, ImplRate::Published),
        (R53Form::Corrected, ImplRate::Corrected),
        (R53Form::State, ImplRate::Corrected),
        (R53Form::State, ImplRate::Published),
    ];
    let mut impls: BTreeMap<&'static str, Vec<Trajectory>> = BTreeMap::new();
    for rate in [ImplRate::Published, ImplRate::Corrected] {
        let ts = p
            .x0_samples
            .iter()
            .map(|x0| impl_trajectory(p, rate, x0, horizon))
            .collect::<Result<_>>()?;
        impls.insert(rate_key(rate), ts);
    }
    for (form, rate) in variants {
        let r = r53(&p.epsilon, form);
        let tau6 = build_tank_impl(p, rate)?.instantiate(horizon, depth)?;
        let (sim, error) = match sim_check(&r, &tau6, &tau3, SimMode::Sync) {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let pw = p
            .x0_samples
            .iter()
            .enumerate()
            .map(|(i, x0)| pointwise(&r, x0, &impls[rate_key(rate)][i], &automaton[i]))
            .collect();
        simulation.push(VariantReport {
            relation: form,
            rate,
            simulation: sim,
            error,
            pointwise: pw,
            probes: probes(&r, &impls[rate_key(rate)][0], &automaton[0]),
        });
    }

    // stage iii
    let r_impl = r53(&p.epsilon, R53Form::Corrected);
    let h_spec = level_projection().with_mode("off", "shut").with_mode("on", "shut");
    let mut composition = Vec::new();
    for (i, x0) in p.x0_samples.iter().enumerate() {
        let s6 = &impls[rate_key(ImplRate::Corrected)][i];
        let s3 = &automaton[i];
        let spec_index = verdict.witnesses.iter().find(|w| w.0 == i).map(|w| w.1);
        let nesting_impl = well_nested_check(std::slice::from_ref(s6), std::slice::from_ref(s3));
        let (compose, error, offs) = match spec_index {
            None => (None, Some("no specification witness from the semantic stage".to_string()), Vec::new()),
            Some(a) => {
                let res = compose_check(
                    &r_impl,
                    &r_level,
                    std::slice::from_ref(s6),
                    std::slice::from_ref(s3),
                    &spec_ts,
                    &[Some((0, a))],
                );
                let offs = off_phases(s6, &spec_ts[a], &p.epsilon, horizon)?;
                match res {
                    Ok(c) => (Some(c), None, offs),
                    Err(e) => (None, Some(stage_error("composition", e)), offs),
                }
            }
        };
        let nesting_automaton = match spec_index {
            Some(a) => well_nested_check(std::slice::from_ref(s3), std::slice::from_ref(&spec_ts[a])),
            None => NestingReport {
                holds: false,
                witness: None,
            },
        };
        let impl_spec = spec_predicate_check(&h_spec.trajectory(s6)?, &p.zeta, &TimePoint::Finite(horizon.clone()));
        composition.push(CompositionStage {
            x0: x0.clone(),
            nesting_impl,
            nesting_automaton,
            compose,
            error,
            off_phases: offs,
            impl_spec_violations: impl_spec.violated(),
        });
    }
    let cross_sample_nesting = well_nested_check(&impls[rate_key(ImplRate::Corrected)], &automaton);
    Ok(RefinementReport {
        params: p.clone(),
        horizon: horizon.clone(),
        horizon_bounded: *horizon < int(LEVEL_MAX),
        semantic,
        simulation,
        composition,
        cross_sample_nesting,
    })
}

fn rate_key(r: ImplRate) -> &'static str {
    match r {
        ImplRate::Published => "published",
        ImplRate::Corrected => "corrected",
    }
}

/// The automaton from `x0 = 1`, whose timeline sits on the unit grid, against
/// its level projection.
pub fn tank_discretization(p: &TankParams, horizon: &Q) -> Result<Theorem7Report> {
    let p1 = p.with_x0(&[int(1)]);
    let tau = build_tank_automaton(&p1)?.instantiate(horizon, tank_depth(horizon))?;
    let tau_bar = level_projection().system(&tau);
    let n = (horizon / &p.delta).floor().to_integer();
    theorem7_check(&r39(), &tau, &tau_bar, &p.delta, n.try_into().unwrap_or(0))
}

// ---------------------------------------------------------------------------
// Gallery

pub const GALLERY: [&str; 7] = ["fig8-1", "fig8-2", "fig8-3", "example10", "fig6", "fig7", "fig11"];

/// Systems and relation of a named counterexample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    /// Concrete first; then the abstract system, and for composition
    /// fixtures the outermost one last.
    pub systems: Vec<ExplicitSystem>,
    pub relation: ClauseRelation,
    pub delta: Q,
    pub horizon: Q,
}

fn interval(lo: i64, hi: Option<i64>, closed: bool) -> TimeInterval {
    TimeInterval::raw(int(lo), hi.map_or(TimePoint::Infinity, |h| TimePoint::Finite(int(h))), closed)
}

/// `x = x0 + rate * (t - lo)` in `mode`.
fn line(mode: &str, x0: i64, rate: i64, lo: i64, hi: Option<i64>, closed: bool) -> Configuration {
    Configuration::affine(mode, &[("x", int(x0), int(rate))], interval(lo, hi, closed))
}

fn chain(configs: Vec<Configuration>) -> ExplicitSystem {
    let n = configs.len();
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    ExplicitSystem::new(configs, q(1, 100)).with_initial(&[0]).with_edges(&edges)
}

fn x_equal() -> ClauseRelation {
    ClauseRelation::new("x-equal", vec![Clause::new("x", None, None, &["c.x = a.x"]).expect("fixture clause")])
}

pub fn fixture(name: &str) -> Result<Fixture> {
    let f = match name {
        "fig8-1" => Fixture {
            name: "fig8-1",
            description: "the concrete configuration outlasts a related final abstract one",
            systems: vec![chain(vec![line("s", 0, 0, 0, Some(3), true)]), chain(vec![line("s", 0, 0, 0, Some(2), true)])],
            relation: x_equal(),
            delta: int(1),
            horizon: int(3),
        },
        "fig8-2" => Fixture {
            name: "fig8-2",
            description: "a concrete grid state is related to a state of an unreachable abstract configuration",
            systems: vec![chain(vec![line("s", 0, 0, 0, Some(2), true)]), {
                let configs = vec![line("s", 0, 0, 0, Some(2), true), line("iso", 0, 0, 0, Some(2), true)];
                ExplicitSystem::new(configs, q(1, 100)).with_initial(&[0])
            }],
            relation: x_equal(),
            delta: int(1),
            horizon: int(2),
        },
        "fig8-3" => Fixture {
            name: "fig8-3",
            description: "the abstract successor starts unrelated where the concrete configuration continues",
            systems: vec![
                chain(vec![line("s", 0, 1, 0, Some(4), true)]),
                chain(vec![line("s", 0, 1, 0, Some(2), false), line("s2", 12, 1, 2, Some(4), true)]),
            ],
            relation: x_equal(),
            delta: int(1),
            horizon: int(4),
        },
        "example10" => Fixture {
            name: "example10",
            description: "one constant configuration on [0, 2] sampled at unit steps",
            systems: vec![chain(vec![line("s", 0, 0, 0, Some(2), true)])],
            relation: x_equal(),
            delta: int(1),
            horizon: int(2),
        },
        "fig6" => Fixture {
            name: "fig6",
            description: "the intermediate trajectory stops before the outer ones diverge",
            systems: vec![
                chain(vec![line("s", 0, 1, 0, Some(2), false), line("s", 2, 1, 2, Some(4), true)]),
                {
                    // cut off at 2: the only configuration is left unexpanded
                    let mut m = chain(vec![line("s", 0, 1, 0, Some(2), false)]);
                    m.frontier.insert(0);
                    m
                },
                chain(vec![Configuration::from_pieces(
                    vec![
                        AffineFlow::from_pairs("s", int(0), &[("x", int(0), int(1))]),
                        AffineFlow::from_pairs("s", int(2), &[("x", int(7), int(0))]),
                    ],
                    interval(0, Some(4), true),
                )]),
            ],
            relation: x_equal(),
            delta: int(1),
            horizon: int(4),
        },
        "fig7" => Fixture {
            name: "fig7",
            description: "concrete and intermediate intervals cross without nesting",
            systems: vec![
                chain(vec![line("s", 0, 1, 0, Some(2), false), line("s", 2, 1, 2, Some(4), true)]),
                chain(vec![line("s", 0, 1, 0, Some(1), false), line("s", 1, 1, 1, Some(4), true)]),
                chain(vec![line("s", 0, 1, 0, Some(4), true)]),
            ],
            relation: x_equal(),
            delta: int(1),
            horizon: int(4),
        },
        "fig11" => Fixture {
            name: "fig11",
            description: "one abstract successor matches, the other does not",
            systems: vec![chain(vec![line("s", 0, 0, 0, Some(1), false), line("s", 0, 0, 1, Some(2), true)]), {
                let configs = vec![
                    line("s", 0, 0, 0, Some(1), false),
                    line("s", 0, 0, 1, Some(2), true),
                    line("s", 5, 0, 1, Some(2), true),
                ];
                ExplicitSystem::new(configs, q(1, 100)).with_initial(&[0]).with_edges(&[(0, 1), (0, 2)])
            }],
            relation: x_equal(),
            delta: int(1),
            horizon: int(2),
        },
        other => return Err(Error::UnknownFixture(other.to_string())),
    };
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GalleryOutcome {
    Discretization {
        theorem7: Box<Theorem7Report>,
    },
    Sampling {
        theorem6: Theorem6Report,
        closed: Theorem6Report,
        timeless: TimelessDemo,
    },
    Composition {
        compose: ComposeReport,
        /// The outer trajectories compared directly.
        direct: Verdict,
    },
    Nesting {
        nesting: NestingReport,
        compose_error: Option<String>,
    },
    Preservation {
        simulation: SimReport,
        preservation: PreservationReport,
    },
}

fn trajectories(s: &ExplicitSystem, horizon: &Q) -> Result<Vec<Trajectory>> {
    Ok(s.generate(&TimePoint::Finite(horizon.clone()), 16)?.trajectories)
}

pub fn run_fixture(f: &Fixture) -> Result<GalleryOutcome> {
    let r = &f.relation;
    let n: usize = (&f.horizon / &f.delta).floor().to_integer().try_into().unwrap_or(0);
    Ok(match f.name {
        "fig8-1" | "fig8-2" | "fig8-3" => GalleryOutcome::Discretization {
            theorem7: Box::new(theorem7_check(r, &f.systems[0], &f.systems[1], &f.delta, n)?),
        },
        "example10" => GalleryOutcome::Sampling {
            theorem6: theorem6_check(&f.systems[0], &f.delta, &f.horizon, SamplingConvention::HalfOpen)?,
            closed: theorem6_check(&f.systems[0], &f.delta, &f.horizon, SamplingConvention::Closed)?,
            timeless: timeless_demo(&f.systems[0], &f.delta, &f.horizon, n + 3)?,
        },
        "fig6" => {
            let ts: Vec<Vec<Trajectory>> = f.systems.iter().map(|s| trajectories(s, &f.horizon)).collect::<Result<_>>()?;
            GalleryOutcome::Composition {
                compose: compose_check(r, r, &ts[0], &ts[1], &ts[2], &[Some((0, 0))])?,
                direct: traj_related_timewise(r, &ts[0][0], &ts[2][0])?,
            }
        }
        "fig7" => {
            let ts: Vec<Vec<Trajectory>> = f.systems.iter().map(|s| trajectories(s, &f.horizon)).collect::<Result<_>>()?;
            GalleryOutcome::Nesting {
                nesting: well_nested_check(&ts[0], &ts[1]),
                compose_error: compose_check(r, r, &ts[0], &ts[1], &ts[2], &[Some((0, 0))]).err().map(|e| e.to_string()),
            }
        }
        "fig11" => GalleryOutcome::Preservation {
            simulation: sim_check(r, &f.systems[0], &f.systems[1], SimMode::Async)?,
            preservation: preservation_check(r, &f.systems[0], &f.systems[1])?,
        },
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::DiscHypothesis;
    use crate::flow::State;

    fn q30() -> Q {
        int(30)
    }

    #[test]
    fn automaton_steady_cycle() {
        let p = TankParams::default();
        let s = automaton_trajectory(&p, &int(1), &int(9)).unwrap();
        let tl: Vec<TimePoint> = s.timeline().into_iter().take(7).collect();
        let want: Vec<TimePoint> = [0, 2, 3, 5, 6, 8, 9].iter().map(|&t| TimePoint::Finite(int(t))).collect();
        assert_eq!(tl, want);
        assert_eq!(s.eval(&int(2)).unwrap().get("y"), Some(&int(2)));
        let s0 = automaton_trajectory(&p, &int(0), &int(9)).unwrap();
        assert_eq!(s0.configs()[0].e(), &TimePoint::Finite(int(3)));
        assert_eq!(s0.eval(&int(3)).unwrap().get("y"), Some(&int(3)));
    }

    #[test]
    fn impl_rates() {
        let p = TankParams::default();
        let s = impl_trajectory(&p, ImplRate::Published, &int(0), &int(9)).unwrap();
        let shut = &s.configs()[1];
        assert_eq!(shut.mode(), "shut");
        assert_eq!(shut.flow().rate["y"], q(6, 5));
        // published rate is exact from x0 = 0: the shut block totals 3
        assert_eq!(s.configs()[2].e(), &TimePoint::Finite(int(3)));
        assert_eq!(s.eval(&int(3)).unwrap().get("y"), Some(&int(3)));
        let c = impl_trajectory(&p, ImplRate::Corrected, &int(1), &int(9)).unwrap();
        assert_eq!(c.configs()[1].flow().rate["y"], q(4, 3));
        assert_eq!(c.timeline()[4], TimePoint::Finite(int(3)));
    }

    #[test]
    fn params_rejected() {
        let p = TankParams {
            epsilon: q(1, 100),
            ..TankParams::default()
        };
        assert!(matches!(build_tank_impl(&p, ImplRate::Corrected), Err(Error::ParamConstraintViolated(_))));
        let p = TankParams::default().with_x0(&[int(3)]);
        assert!(matches!(p.validate(), Err(Error::ParamConstraintViolated(_))));
    }

    #[test]
    fn spec_predicate_clauses() {
        let p = TankParams::default();
        for x0 in [int(0), int(1), int(2)] {
            let s = automaton_trajectory(&p, &x0, &q30()).unwrap();
            assert!(spec_predicate_check(&s, &p.zeta, &TimePoint::Infinity).holds);
        }
        let over = unbounded(vec![piece("shut", int(0), int(0), int(1))]).unwrap();
        let rep = spec_predicate_check(&over, &p.zeta, &TimePoint::Finite(int(4)));
        let v = rep.first(SpecClause::LevelBounds).unwrap();
        assert!(v.time > int(3) && v.time < int(4));
        assert_eq!(rep.violated(), BTreeSet::from([SpecClause::LevelBounds]));
        let z = &p.zeta * int(2);
        let hold = unbounded(vec![piece("shut", int(0), int(0), int(0)), piece("shut", z, int(0), int(1))]).unwrap();
        let rep = spec_predicate_check(&hold, &p.zeta, &TimePoint::Finite(int(1)));
        assert!(rep.violated().contains(&SpecClause::LeavesEmpty));
        assert_eq!(rep.first(SpecClause::LeavesEmpty).unwrap().time, int(0));
        let flat = unbounded(vec![piece("open", int(0), int(2), int(0))]).unwrap();
        let rep = spec_predicate_check(&flat, &p.zeta, &TimePoint::Finite(int(1)));
        assert_eq!(rep.violated(), BTreeSet::from([SpecClause::DrainsWhileOpen]));
    }

    #[test]
    fn level_relation() {
        let r = r39();
        let s = State::new("shut", &[("x", int(7)), ("y", int(1))]);
        let sb = State::new("shut", &[("y", int(1))]);
        assert!(r.holds_with(&int(0), &s, &sb, None).unwrap());
        let so = State::new("open", &[("y", int(1))]);
        assert!(!r.holds_with(&int(0), &s, &so, None).unwrap());
    }

    #[test]
    fn impl_relation_open_case() {
        let r = r53(&q(1, 4), R53Form::Published);
        let c = line("open", 0, 1, 2, Some(3), false);
        let ends = Endpoints::of(&c, &c);
        let s = State::new("open", &[("x", int(0)), ("y", int(2))]);
        assert!(r.holds_with(&int(2), &s, &s, Some(&ends)).unwrap());
    }

    #[test]
    fn catalog_membership() {
        let cat = spec_catalog(&TankParams::default(), &int(9)).unwrap();
        let names: Vec<&str> = cat.members().iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["automaton x0=0", "automaton x0=1", "automaton x0=2"]);
        assert_eq!(cat.entries.len(), 6);
        let stays = cat.entries.iter().find(|e| e.name == "stays empty").unwrap();
        assert!(stays.report.violated().contains(&SpecClause::LeavesEmpty));
    }

    #[test]
    fn refinement_chain_defaults() {
        let p = TankParams::default();
        let rep = run_refinement_chain(&p, &q30()).unwrap();
        assert!(rep.semantic.holds, "{:?}", rep.semantic);
        let published = rep.variant(R53Form::Published, ImplRate::Published).unwrap();
        assert!(!published.passes() && published.documented());
        let on = published.probes.iter().find(|p| p.mode == "on").unwrap();
        assert!(on.error.as_deref().is_some_and(|e| e.contains("division by zero")), "{on:?}");
        let corrected = rep.variant(R53Form::Corrected, ImplRate::Corrected).unwrap();
        assert!(corrected.probes.iter().all(|p| p.holds == Some(true)));
        assert!(corrected.pointwise.iter().all(|p| p.verdict.as_ref().is_some_and(|v| v.holds)));
        let state = rep.variant(R53Form::State, ImplRate::Corrected).unwrap();
        assert!(state.passes(), "{:?}", state.error);
        assert!(state.pointwise.iter().all(|p| p.verdict.as_ref().is_some_and(|v| v.holds)));
        for c in &rep.composition {
            assert!(c.holds(), "{c:?}");
            assert!(!c.off_phases.is_empty());
            assert!(c.impl_spec_violations.contains(&SpecClause::LeavesEmpty));
        }
        assert!(!rep.cross_sample_nesting.holds);
        assert!(rep.holds());
    }

    #[test]
    fn short_horizon_is_flagged() {
        let rep = run_refinement_chain(&TankParams::default(), &int(2)).unwrap();
        assert!(rep.horizon_bounded);
        assert!(rep.semantic.holds);
    }

    #[test]
    fn tank_discretization_passes() {
        let rep = tank_discretization(&TankParams::default(), &int(9)).unwrap();
        assert!(rep.simulation.verdict);
        assert!(rep.hypotheses.all_hold(), "{:?}", rep.hypotheses);
        assert!(rep.milner.holds);
    }

    fn theorem7(name: &str) -> Theorem7Report {
        match run_fixture(&fixture(name).unwrap()).unwrap() {
            GalleryOutcome::Discretization { theorem7 } => *theorem7,
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn hypothesis_attributions() {
        let cases = [
            ("fig8-1", DiscHypothesis::NonBlocking),
            ("fig8-2", DiscHypothesis::RelatedOrigin),
            ("fig8-3", DiscHypothesis::Compatibility),
        ];
        for (name, h) in cases {
            let rep = theorem7(name);
            assert!(rep.simulation.verdict, "{name}");
            assert!(!rep.milner.holds, "{name}");
            assert_eq!(rep.hypotheses.violated(), BTreeSet::from([h]), "{name}: {:?}", rep.hypotheses);
        }
        let subs = theorem7("fig8-3").hypotheses.subcases();
        assert!(subs.iter().all(|s| s.starts_with("abstract-end/")), "{subs:?}");
    }

    #[test]
    fn other_fixtures() {
        match run_fixture(&fixture("fig6").unwrap()).unwrap() {
            GalleryOutcome::Composition { compose, direct } => {
                assert!(!compose.holds);
                assert_eq!(compose.chains[0].duration_gap, Some(int(2)));
                assert_eq!(direct.witness, Some(int(2)));
            }
            o => panic!("{o:?}"),
        }
        match run_fixture(&fixture("fig7").unwrap()).unwrap() {
            GalleryOutcome::Nesting { nesting, compose_error } => {
                assert!(!nesting.holds && compose_error.is_some());
            }
            o => panic!("{o:?}"),
        }
        match run_fixture(&fixture("fig11").unwrap()).unwrap() {
            GalleryOutcome::Preservation { simulation, preservation } => {
                assert!(simulation.verdict);
                assert!(!preservation.preservation);
                assert!(!preservation.violations.is_empty());
            }
            o => panic!("{o:?}"),
        }
        match run_fixture(&fixture("example10").unwrap()).unwrap() {
            GalleryOutcome::Sampling { theorem6, timeless, .. } => {
                assert!(theorem6.equal);
                assert!(timeless.strict_overapproximation);
            }
            o => panic!("{o:?}"),
        }
        assert!(matches!(fixture("fig9"), Err(Error::UnknownFixture(_))));
    }
}
