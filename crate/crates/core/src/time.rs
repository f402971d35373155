//! Time points, configuration intervals and exact interval algebra.
//!
//! A [`TimeInterval`] is left closed. Its right end is open unless the
//! interval is the closed final interval of a finite trajectory. A minimum
//! duration `zeta` is enforced when intervals are built for configurations;
//! intersections may be shorter and callers decide whether that matters.

use std::cmp::Ordering;
use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, parse_q, qmax, show_q, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimePoint {
    Finite(Q),
    Infinity,
}

impl TimePoint {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            TimePoint::Finite(v) => Some(v),
            TimePoint::Infinity => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, TimePoint::Finite(_))
    }

    pub fn min(a: &TimePoint, b: &TimePoint) -> TimePoint {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    pub fn cmp_q(&self, v: &Q) -> Ordering {
        match self {
            TimePoint::Finite(x) => x.cmp(v),
            TimePoint::Infinity => Ordering::Greater,
        }
    }
}

impl From<Q> for TimePoint {
    fn from(v: Q) -> Self {
        TimePoint::Finite(v)
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePoint::Finite(v) => f.write_str(&show_q(v)),
            TimePoint::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for TimePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimePoint::Finite(v) => s.serialize_str(&fmt_q(v)),
            TimePoint::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for TimePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        if raw.trim() == "inf" {
            return Ok(TimePoint::Infinity);
        }
        parse_q(&raw)
            .map(TimePoint::Finite)
            .map_err(serde::de::Error::custom)
    }
}

/// `[lo, hi)` or `[lo, hi]`; `lo == hi` only occurs closed, as the result of an intersection.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeInterval {
    #[serde(with = "crate::rational::serde_q")]
    lo: Q,
    hi: TimePoint,
    closed_hi: bool,
}

impl TimeInterval {
    /// Builds `[lo, hi)`, enforcing `hi - lo >= zeta`.
    pub fn new(lo: Q, hi: TimePoint, zeta: &Q) -> Result<Self> {
        if lo.is_negative() {
            return Err(Error::NegativeTime(show_q(&lo)));
        }
        if let TimePoint::Finite(h) = &hi {
            let d = h - &lo;
            if &d < zeta {
                return Err(Error::DurationBelowZeta {
                    duration: show_q(&d),
                    zeta: show_q(zeta),
                });
            }
        }
        Ok(TimeInterval {
            lo,
            hi,
            closed_hi: false,
        })
    }

    /// Builds an interval without the minimum-duration check.
    ///
    /// Panics when the bounds describe an empty set.
    pub fn raw(lo: Q, hi: TimePoint, closed_hi: bool) -> Self {
        let ok = match &hi {
            TimePoint::Finite(h) => h > &lo || (h == &lo && closed_hi),
            TimePoint::Infinity => !closed_hi,
        };
        assert!(ok, "empty interval [{}, {})", show_q(&lo), hi);
        TimeInterval { lo, hi, closed_hi }
    }

    pub fn try_raw(lo: Q, hi: TimePoint, closed_hi: bool) -> Option<Self> {
        let ok = match &hi {
            TimePoint::Finite(h) => h > &lo || (h == &lo && closed_hi),
            TimePoint::Infinity => !closed_hi,
        };
        ok.then_some(TimeInterval { lo, hi, closed_hi })
    }

    pub fn closed(lo: Q, hi: Q, zeta: &Q) -> Result<Self> {
        Ok(TimeInterval::new(lo, TimePoint::Finite(hi), zeta)?.closure())
    }

    pub fn lo(&self) -> &Q {
        &self.lo
    }

    pub fn hi(&self) -> &TimePoint {
        &self.hi
    }

    pub fn is_closed(&self) -> bool {
        self.closed_hi
    }

    pub fn is_unbounded(&self) -> bool {
        !self.hi.is_finite()
    }

    /// Final intervals are closed or unbounded.
    pub fn is_final(&self) -> bool {
        self.closed_hi || self.is_unbounded()
    }

    pub fn duration(&self) -> TimePoint {
        match &self.hi {
            TimePoint::Finite(h) => TimePoint::Finite(h - &self.lo),
            TimePoint::Infinity => TimePoint::Infinity,
        }
    }

    pub fn is_point(&self) -> bool {
        self.hi.cmp_q(&self.lo) == Ordering::Equal
    }

    pub fn contains(&self, t: &Q) -> bool {
        if t < &self.lo {
            return false;
        }
        match self.hi.cmp_q(t) {
            Ordering::Greater => true,
            Ordering::Equal => self.closed_hi,
            Ordering::Less => false,
        }
    }

    /// Includes the upper bound unless it is infinite.
    pub fn closure(&self) -> Self {
        TimeInterval {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            closed_hi: self.hi.is_finite(),
        }
    }

    pub fn opened(&self) -> Self {
        TimeInterval {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            closed_hi: false,
        }
    }

    pub fn intersect(&self, other: &TimeInterval) -> Option<TimeInterval> {
        let lo = qmax(&self.lo, &other.lo);
        let (hi, closed_hi) = match self.hi.cmp(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.closed_hi),
            Ordering::Greater => (other.hi.clone(), other.closed_hi),
            Ordering::Equal => (self.hi.clone(), self.closed_hi && other.closed_hi),
        };
        TimeInterval::try_raw(lo, hi, closed_hi)
    }

    pub fn overlaps(&self, other: &TimeInterval) -> bool {
        self.intersect(other).is_some()
    }

    pub fn is_subset(&self, other: &TimeInterval) -> bool {
        self.intersect(other).as_ref() == Some(self)
    }

    pub fn end_at_least(&self, t: &Q) -> bool {
        self.hi.cmp_q(t) != Ordering::Less
    }

    pub fn as_span(&self) -> Span {
        Span {
            lo: self.lo.clone(),
            lo_closed: true,
            hi: self.hi.clone(),
            hi_closed: self.closed_hi,
        }
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}{}",
            show_q(&self.lo),
            self.hi,
            if self.closed_hi { "]" } else { ")" }
        )
    }
}

/// Interval with either end open or closed, used for satisfaction sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Span {
    #[serde(with = "crate::rational::serde_q")]
    pub lo: Q,
    pub lo_closed: bool,
    pub hi: TimePoint,
    pub hi_closed: bool,
}

impl Span {
    pub fn new(lo: Q, lo_closed: bool, hi: TimePoint, hi_closed: bool) -> Option<Span> {
        let hi_closed = hi_closed && hi.is_finite();
        let s = Span {
            lo,
            lo_closed,
            hi,
            hi_closed,
        };
        (!s.is_empty()).then_some(s)
    }

    pub fn point(t: Q) -> Span {
        Span {
            lo: t.clone(),
            lo_closed: true,
            hi: TimePoint::Finite(t),
            hi_closed: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self.hi.cmp_q(&self.lo) {
            Ordering::Less => true,
            Ordering::Equal => !(self.lo_closed && self.hi_closed),
            Ordering::Greater => false,
        }
    }

    pub fn contains(&self, t: &Q) -> bool {
        let after_lo = if self.lo_closed { t >= &self.lo } else { t > &self.lo };
        let before_hi = match self.hi.cmp_q(t) {
            Ordering::Greater => true,
            Ordering::Equal => self.hi_closed,
            Ordering::Less => false,
        };
        after_lo && before_hi
    }

    pub fn intersect(&self, other: &Span) -> Option<Span> {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            Ordering::Greater => (self.lo.clone(), self.lo_closed),
            Ordering::Less => (other.lo.clone(), other.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_closed),
            Ordering::Greater => (other.hi.clone(), other.hi_closed),
            Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        Span::new(lo, lo_closed, hi, hi_closed)
    }

    /// A rational point inside the span.
    pub fn witness(&self) -> Q {
        if self.lo_closed {
            return self.lo.clone();
        }
        match &self.hi {
            TimePoint::Finite(h) => (&self.lo + h) / Q::from_integer(2.into()),
            TimePoint::Infinity => &self.lo + Q::from_integer(1.into()),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { "[" } else { "(" },
            show_q(&self.lo),
            self.hi,
            if self.hi_closed { "]" } else { ")" }
        )
    }
}

/// Returns a point of `target` not covered by the union of `pieces`, if any.
pub fn first_uncovered(target: &Span, pieces: &[Span]) -> Option<Q> {
    if target.is_empty() {
        return None;
    }
    // every t < x in the target is covered; `x_done` says whether x itself is
    let mut x = target.lo.clone();
    let mut x_done = !target.lo_closed;
    let mut used = vec![false; pieces.len()];
    loop {
        let past_end = match target.hi.cmp_q(&x) {
            Ordering::Less => true,
            Ordering::Equal => x_done || !target.hi_closed,
            Ordering::Greater => false,
        };
        if past_end {
            return None;
        }
        let mut progressed = false;
        for (k, p) in pieces.iter().enumerate() {
            if used[k] {
                continue;
            }
            let starts_ok = p.lo < x || (p.lo == x && (p.lo_closed || x_done));
            if !starts_ok {
                continue;
            }
            match p.hi.cmp_q(&x) {
                Ordering::Greater => {
                    match &p.hi {
                        TimePoint::Finite(h) => {
                            x = h.clone();
                            x_done = p.hi_closed;
                        }
                        TimePoint::Infinity => return None,
                    }
                    used[k] = true;
                    progressed = true;
                }
                Ordering::Equal if p.hi_closed && !x_done => {
                    x_done = true;
                    used[k] = true;
                    progressed = true;
                }
                _ => {
                    used[k] = true;
                }
            }
        }
        if !progressed {
            if !x_done {
                return Some(x);
            }
            // x is covered but points just after it are not
            let mut next = target.hi.clone();
            for p in pieces {
                if p.lo > x && TimePoint::Finite(p.lo.clone()) < next {
                    next = TimePoint::Finite(p.lo.clone());
                }
            }
            return Some(match next {
                TimePoint::Finite(n) => (&x + n) / Q::from_integer(2.into()),
                TimePoint::Infinity => x + Q::from_integer(1.into()),
            });
        }
    }
}

pub fn default_zeta() -> Q {
    Q::new(1.into(), 1000.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    fn z() -> Q {
        q(1, 100)
    }

    #[test]
    fn construction() {
        let i = TimeInterval::new(int(0), TimePoint::Infinity, &z()).unwrap();
        assert!(i.is_unbounded());
        assert_eq!(i.to_string(), "[0, inf)");
        assert!(matches!(
            TimeInterval::new(int(1), TimePoint::Finite(int(1) + q(1, 200)), &z()),
            Err(Error::DurationBelowZeta { .. })
        ));
        assert!(matches!(
            TimeInterval::new(int(-1), TimePoint::Finite(int(1)), &z()),
            Err(Error::NegativeTime(_))
        ));
        let i = TimeInterval::new(int(3), int(5).into(), &z()).unwrap();
        assert_eq!(i.lo(), &int(3));
        assert_eq!(i.hi(), &TimePoint::Finite(int(5)));
        assert_eq!(i.duration(), TimePoint::Finite(int(2)));
    }

    #[test]
    fn closure() {
        let i = TimeInterval::new(int(1), int(2).into(), &z()).unwrap();
        let c = i.closure();
        assert!(c.is_closed() && c.contains(&int(2)) && !i.contains(&int(2)));
        assert_eq!(c.closure(), c);
        let u = TimeInterval::new(int(0), TimePoint::Infinity, &z()).unwrap();
        assert_eq!(u.closure(), u);
    }

    #[test]
    fn intersections() {
        let a = TimeInterval::new(int(0), int(4).into(), &z()).unwrap();
        let b = TimeInterval::new(int(1), int(3).into(), &z()).unwrap();
        assert_eq!(a.intersect(&b), Some(b.clone()));
        let c = TimeInterval::new(int(0), int(1).into(), &z()).unwrap();
        let d = TimeInterval::new(int(1), int(2).into(), &z()).unwrap();
        assert_eq!(c.intersect(&d), None);
        assert_eq!(c.closure().intersect(&d), Some(TimeInterval::raw(int(1), int(1).into(), true)));
        let u = TimeInterval::new(int(0), TimePoint::Infinity, &z()).unwrap();
        let e = TimeInterval::closed(int(5), int(9), &z()).unwrap();
        assert_eq!(u.intersect(&e), Some(e));
    }

    #[test]
    fn coverage() {
        let target = Span::new(int(0), true, int(2).into(), false).unwrap();
        let a = Span::new(int(0), true, int(1).into(), false).unwrap();
        let b = Span::new(int(1), true, int(2).into(), true).unwrap();
        assert_eq!(first_uncovered(&target, &[b.clone(), a.clone()]), None);
        let b_open = Span::new(int(1), false, int(2).into(), true).unwrap();
        assert_eq!(first_uncovered(&target, &[a.clone(), b_open.clone()]), Some(int(1)));
        assert_eq!(first_uncovered(&target, &[a.clone(), b_open, Span::point(int(1))]), None);
        let a_closed = Span::new(int(0), true, int(1).into(), true).unwrap();
        let tail = Span::new(q(3, 2), true, int(2).into(), false).unwrap();
        let w = first_uncovered(&target, &[a_closed, tail]).unwrap();
        assert!(w > int(1) && w < q(3, 2));
        let closed_target = Span::new(int(0), true, int(2).into(), true).unwrap();
        let whole = Span::new(int(0), true, int(2).into(), false).unwrap();
        assert_eq!(first_uncovered(&closed_target, &[whole]), Some(int(2)));
    }
}
