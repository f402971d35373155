//! States, affine flows and configurations.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{serde_q, serde_q_map, show_q, Q};
use crate::time::{TimeInterval, TimePoint};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub mode: String,
    #[serde(with = "serde_q_map")]
    pub vars: BTreeMap<String, Q>,
}

impl State {
    pub fn new(mode: &str, vars: &[(&str, Q)]) -> Self {
        State {
            mode: mode.to_string(),
            vars: vars.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }

    pub fn get(&self, var: &str) -> Option<&Q> {
        self.vars.get(var)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}", self.mode)?;
        for (k, v) in &self.vars {
            write!(f, ", {k}={}", show_q(v))?;
        }
        f.write_str(">")
    }
}

/// `v(t) = initial[v] + rate[v] * (t - anchor)` in a fixed mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffineFlow {
    pub mode: String,
    #[serde(with = "serde_q")]
    pub anchor: Q,
    #[serde(with = "serde_q_map")]
    pub initial: BTreeMap<String, Q>,
    #[serde(with = "serde_q_map")]
    pub rate: BTreeMap<String, Q>,
}

impl AffineFlow {
    /// Variables missing from `rate` get rate 0; rates of unknown variables are dropped.
    pub fn new(mode: &str, anchor: Q, initial: BTreeMap<String, Q>, rate: BTreeMap<String, Q>) -> Self {
        let rate = initial
            .keys()
            .map(|k| (k.clone(), rate.get(k).cloned().unwrap_or_else(Q::zero)))
            .collect();
        AffineFlow {
            mode: mode.to_string(),
            anchor,
            initial,
            rate,
        }
    }

    pub fn from_pairs(mode: &str, anchor: Q, vars: &[(&str, Q, Q)]) -> Self {
        let initial = vars.iter().map(|(k, v, _)| (k.to_string(), v.clone())).collect();
        let rate = vars.iter().map(|(k, _, r)| (k.to_string(), r.clone())).collect();
        AffineFlow::new(mode, anchor, initial, rate)
    }

    pub fn constant(state: &State, anchor: Q) -> Self {
        AffineFlow::new(&state.mode, anchor, state.vars.clone(), BTreeMap::new())
    }

    pub fn value(&self, var: &str, t: &Q) -> Option<Q> {
        let x0 = self.initial.get(var)?;
        let r = &self.rate[var];
        Some(x0 + r * (t - &self.anchor))
    }

    pub fn at(&self, t: &Q) -> State {
        State {
            mode: self.mode.clone(),
            vars: self
                .initial
                .iter()
                .map(|(k, x0)| (k.clone(), x0 + &self.rate[k] * (t - &self.anchor)))
                .collect(),
        }
    }

    /// The same function, anchored at `t`.
    pub fn reanchor(&self, t: &Q) -> AffineFlow {
        AffineFlow {
            mode: self.mode.clone(),
            anchor: t.clone(),
            initial: self.at(t).vars,
            rate: self.rate.clone(),
        }
    }

    fn frozen(&self) -> AffineFlow {
        AffineFlow {
            rate: self.rate.keys().map(|k| (k.clone(), Q::zero())).collect(),
            ..self.clone()
        }
    }

    fn continues(&self, next: &AffineFlow) -> bool {
        self.mode == next.mode && self.at(&next.anchor).vars == next.initial
    }
}

/// A flow paired with its time interval.
///
/// The flow is piecewise affine: piece `k` starts at its anchor and holds up to
/// the anchor of piece `k + 1`. The representation is canonical (adjacent
/// pieces describing the same function are merged) so that derived equality is
/// equality of the value function on the interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    interval: TimeInterval,
    pieces: Vec<AffineFlow>,
}

impl Configuration {
    pub fn new(flow: AffineFlow, interval: TimeInterval) -> Self {
        let flow = if flow.anchor == *interval.lo() {
            flow
        } else {
            flow.reanchor(interval.lo())
        };
        Self::from_pieces(vec![flow], interval)
    }

    /// Pieces must be sorted by anchor, the first anchored at `interval.lo`.
    pub fn from_pieces(pieces: Vec<AffineFlow>, interval: TimeInterval) -> Self {
        assert!(!pieces.is_empty(), "configuration without a flow");
        assert_eq!(&pieces[0].anchor, interval.lo(), "first piece must start the interval");
        let mut c = Configuration { interval, pieces };
        c.canonicalize();
        c
    }

    pub fn affine(mode: &str, vars: &[(&str, Q, Q)], interval: TimeInterval) -> Self {
        let lo = interval.lo().clone();
        Configuration::new(AffineFlow::from_pairs(mode, lo, vars), interval)
    }

    fn canonicalize(&mut self) {
        let hi = self.interval.hi().clone();
        let closed = self.interval.is_closed();
        self.pieces.retain(|p| match hi.cmp_q(&p.anchor) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => closed,
            std::cmp::Ordering::Less => false,
        });
        let mut out: Vec<AffineFlow> = Vec::with_capacity(self.pieces.len());
        let n = self.pieces.len();
        for (k, p) in self.pieces.drain(..).enumerate() {
            let is_point = k + 1 == n && hi.cmp_q(&p.anchor).is_eq() && k > 0;
            let p = if is_point { p.frozen() } else { p };
            if let Some(prev) = out.last() {
                let same = prev.continues(&p) && (is_point || prev.rate == p.rate);
                if same {
                    continue;
                }
            }
            out.push(p);
        }
        if out.len() == 1 && self.interval.is_point() {
            out[0] = out[0].frozen();
        }
        self.pieces = out;
    }

    pub fn interval(&self) -> &TimeInterval {
        &self.interval
    }

    pub fn pieces(&self) -> &[AffineFlow] {
        &self.pieces
    }

    /// The first (for schema-built configurations, the only) affine piece.
    pub fn flow(&self) -> &AffineFlow {
        &self.pieces[0]
    }

    pub fn mode(&self) -> &str {
        &self.pieces[0].mode
    }

    pub fn is_affine(&self) -> bool {
        self.pieces.len() == 1
    }

    pub fn b(&self) -> &Q {
        self.interval.lo()
    }

    pub fn e(&self) -> &TimePoint {
        self.interval.hi()
    }

    pub fn is_closed(&self) -> bool {
        self.interval.is_closed()
    }

    pub fn is_final(&self) -> bool {
        self.interval.is_final()
    }

    pub fn with_interval(&self, interval: TimeInterval) -> Self {
        let mut pieces = self.pieces.clone();
        pieces[0] = pieces[0].reanchor(interval.lo());
        Configuration::from_pieces(pieces, interval)
    }

    pub fn closure(&self) -> Self {
        let mut c = Configuration {
            interval: self.interval.closure(),
            pieces: self.pieces.clone(),
        };
        c.canonicalize();
        c
    }

    /// Index of the piece defining the value at `t`, assuming `t` is in the interval.
    fn piece_index(&self, t: &Q) -> usize {
        self.pieces.partition_point(|p| &p.anchor <= t).saturating_sub(1)
    }

    pub fn piece_at(&self, t: &Q) -> Option<&AffineFlow> {
        self.interval
            .contains(t)
            .then(|| &self.pieces[self.piece_index(t)])
    }

    pub fn eval(&self, t: &Q) -> Option<State> {
        self.piece_at(t).map(|p| p.at(t))
    }

    /// Pieces paired with the sub-interval they govern.
    pub fn segments(&self) -> Vec<(TimeInterval, &AffineFlow)> {
        let n = self.pieces.len();
        self.pieces
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let iv = if k + 1 < n {
                    TimeInterval::raw(p.anchor.clone(), TimePoint::Finite(self.pieces[k + 1].anchor.clone()), false)
                } else {
                    TimeInterval::raw(p.anchor.clone(), self.interval.hi().clone(), self.interval.is_closed())
                };
                (iv, p)
            })
            .collect()
    }

    /// Times where the flow switches piece.
    pub fn breakpoints(&self) -> Vec<Q> {
        self.pieces.iter().skip(1).map(|p| p.anchor.clone()).collect()
    }

    /// `c $ d`; at the junction the value of `d` wins.
    pub fn concat(&self, d: &Configuration) -> Result<Configuration> {
        if self.interval.hi() != &TimePoint::Finite(d.b().clone()) {
            return Err(Error::NonConsecutive {
                left_end: self.e().to_string(),
                right_begin: show_q(d.b()),
            });
        }
        let mut pieces: Vec<AffineFlow> = self
            .pieces
            .iter()
            .filter(|p| &p.anchor < d.b())
            .cloned()
            .collect();
        pieces.extend(d.pieces.iter().cloned());
        let interval = TimeInterval::raw(self.b().clone(), d.e().clone(), d.is_closed());
        Ok(Configuration::from_pieces(pieces, interval))
    }

    /// `c<t1, t2>` without the minimum-duration check; `None` when empty.
    pub fn slice_raw(&self, t1: &Q, t2: &TimePoint, closed: bool) -> Option<Configuration> {
        let window = TimeInterval::try_raw(t1.clone(), t2.clone(), closed && t2.is_finite())?;
        let iv = self.interval.intersect(&window)?;
        let start = self.piece_index(iv.lo());
        let mut pieces: Vec<AffineFlow> = self.pieces[start..].to_vec();
        pieces[0] = pieces[0].reanchor(iv.lo());
        Some(Configuration::from_pieces(pieces, iv))
    }

    /// `c<t1, t2>` (or `c<t1, t2]` when `closed`), enforcing `zeta` on the result.
    pub fn slice(&self, t1: &Q, t2: &TimePoint, closed: bool, zeta: &Q) -> Result<Configuration> {
        let c = self.slice_raw(t1, t2, closed).ok_or(Error::EmptyIntersection)?;
        if let TimePoint::Finite(d) = c.interval.duration() {
            if &d < zeta {
                return Err(Error::DurationBelowZeta {
                    duration: show_q(&d),
                    zeta: show_q(zeta),
                });
            }
        }
        Ok(c)
    }

    /// Maps states through `h`, keeping the interval; the image of an affine
    /// piece under `h` must again be affine, which holds for the renamings and
    /// projections used by homomorphisms.
    pub fn map_pieces(&self, h: &dyn Fn(&AffineFlow) -> AffineFlow) -> Configuration {
        Configuration::from_pieces(self.pieces.iter().map(h).collect(), self.interval.clone())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (k, p) in self.pieces.iter().enumerate() {
            if k > 0 {
                write!(f, " | @{} ", show_q(&p.anchor))?;
            }
            write!(f, "{}", p.mode)?;
            for (v, x0) in &p.initial {
                let r = &p.rate[v];
                if r.is_zero() {
                    write!(f, " {v}={}", show_q(x0))?;
                } else {
                    write!(f, " {v}={}{:+}*(t-{})", show_q(x0), ShowSigned(r), show_q(&p.anchor))?;
                }
            }
        }
        write!(f, ", {}>", self.interval)
    }
}

struct ShowSigned<'a>(&'a Q);

impl fmt::Display for ShowSigned<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 >= &Q::zero() {
            write!(f, "+{}", show_q(self.0))
        } else {
            f.write_str(&show_q(self.0))
        }
    }
}

/// `b(c)`, with `b(ε) = +inf`.
pub fn maybe_begin(c: Option<&Configuration>) -> TimePoint {
    c.map_or(TimePoint::Infinity, |c| TimePoint::Finite(c.b().clone()))
}

/// `e(c)`, with `None` standing for `e(ε) = -inf`.
pub fn maybe_end(c: Option<&Configuration>) -> Option<TimePoint> {
    c.map(|c| c.e().clone())
}

pub fn maybe_eval(c: Option<&Configuration>, t: &Q) -> Option<State> {
    c.and_then(|c| c.eval(t))
}

/// `c $ d` with `c $ ε = ε $ c = c`.
pub fn maybe_concat(c: Option<&Configuration>, d: Option<&Configuration>) -> Result<Option<Configuration>> {
    match (c, d) {
        (Some(c), Some(d)) => c.concat(d).map(Some),
        (Some(x), None) | (None, Some(x)) => Ok(Some(x.clone())),
        (None, None) => Ok(None),
    }
}

/// `c<t1, t2>` with `ε<t1, t2> = ε`.
pub fn maybe_slice(c: Option<&Configuration>, t1: &Q, t2: &TimePoint, closed: bool, zeta: &Q) -> Result<Option<Configuration>> {
    match c {
        None => Ok(None),
        Some(c) => c.slice(t1, t2, closed, zeta).map(Some),
    }
}
