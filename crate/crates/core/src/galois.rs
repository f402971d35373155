//! Finite posets, Galois connections and Galois relations, with exhaustive
//! law checking.

use std::collections::BTreeSet;
use std::fmt::Debug;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest base set accepted by [`powerset`].
pub const MAX_BASE: usize = 6;

/// A finite partial order with its order matrix precomputed.
#[derive(Clone, Debug)]
pub struct FinitePoset<T> {
    elements: Vec<T>,
    leq: Vec<Vec<bool>>,
}

impl<T: Clone + Ord + Debug> FinitePoset<T> {
    pub fn new(elements: Vec<T>, leq: impl Fn(&T, &T) -> bool) -> Result<Self> {
        let mut elements = elements;
        elements.sort();
        elements.dedup();
        let m: Vec<Vec<bool>> = elements
            .iter()
            .map(|a| elements.iter().map(|b| leq(a, b)).collect())
            .collect();
        let n = elements.len();
        for i in 0..n {
            if !m[i][i] {
                return Err(Error::NotAPartialOrder(format!("{:?} is not below itself", elements[i])));
            }
            for j in 0..n {
                if i != j && m[i][j] && m[j][i] {
                    return Err(Error::NotAPartialOrder(format!("{:?} and {:?}", elements[i], elements[j])));
                }
                for k in 0..n {
                    if m[i][j] && m[j][k] && !m[i][k] {
                        return Err(Error::NotAPartialOrder(format!(
                            "{:?} <= {:?} <= {:?}",
                            elements[i], elements[j], elements[k]
                        )));
                    }
                }
            }
        }
        Ok(FinitePoset { elements, leq: m })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn get(&self, i: usize) -> &T {
        &self.elements[i]
    }

    pub fn index_of(&self, x: &T) -> Option<usize> {
        self.elements.binary_search(x).ok()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    /// Least upper bound of the given elements, if any.
    pub fn join(&self, idx: &[usize]) -> Option<usize> {
        let ub: Vec<usize> = (0..self.len()).filter(|&u| idx.iter().all(|&i| self.leq[i][u])).collect();
        ub.iter().copied().find(|&u| ub.iter().all(|&v| self.leq[u][v]))
    }

    pub fn meet(&self, idx: &[usize]) -> Option<usize> {
        let lb: Vec<usize> = (0..self.len()).filter(|&l| idx.iter().all(|&i| self.leq[l][i])).collect();
        lb.iter().copied().find(|&l| lb.iter().all(|&v| self.leq[v][l]))
    }

    /// A finite poset is a complete lattice iff it has a bottom and all binary joins.
    pub fn lattice_witness(&self) -> Option<String> {
        if self.join(&[]).is_none() {
            return Some("no least element".into());
        }
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.join(&[i, j]).is_none() {
                    return Some(format!("no join of {:?} and {:?}", self.elements[i], self.elements[j]));
                }
            }
        }
        None
    }

    pub fn is_complete_lattice(&self) -> bool {
        self.lattice_witness().is_none()
    }

    /// The same elements under the reversed order.
    pub fn dual(&self) -> Self {
        let n = self.len();
        FinitePoset {
            elements: self.elements.clone(),
            leq: (0..n).map(|i| (0..n).map(|j| self.leq[j][i]).collect()).collect(),
        }
    }
}

/// All subsets of `base` under inclusion.
pub fn powerset<T: Clone + Ord + Debug>(base: &[T]) -> Result<FinitePoset<BTreeSet<T>>> {
    if base.len() > MAX_BASE {
        return Err(Error::CarrierTooLarge(1 << base.len().min(30)));
    }
    let subsets = (0..1usize << base.len())
        .map(|m| (0..base.len()).filter(|i| m >> i & 1 == 1).map(|i| base[i].clone()).collect())
        .collect();
    FinitePoset::new(subsets, |a: &BTreeSet<T>, b| a.is_subset(b))
}

/// `0 ≤ 1 ≤ … ≤ n-1`.
pub fn chain(n: usize) -> FinitePoset<usize> {
    FinitePoset::new((0..n).collect(), |a, b| a <= b).expect("total order")
}

/// `post[r]P = {y | ∃x ∈ P. <x,y> ∈ r}`.
pub fn post<X: Ord + Clone, Y: Ord + Clone>(r: &BTreeSet<(X, Y)>, p: &BTreeSet<X>) -> BTreeSet<Y> {
    r.iter().filter(|(x, _)| p.contains(x)).map(|(_, y)| y.clone()).collect()
}

/// `pre[r]Q = post[r⁻¹]Q`.
pub fn pre<X: Ord + Clone, Y: Ord + Clone>(r: &BTreeSet<(X, Y)>, q: &BTreeSet<Y>) -> BTreeSet<X> {
    r.iter().filter(|(_, y)| q.contains(y)).map(|(x, _)| x.clone()).collect()
}

fn complement<T: Ord + Clone>(u: &BTreeSet<T>, p: &BTreeSet<T>) -> BTreeSet<T> {
    u.difference(p).cloned().collect()
}

/// `¬ ∘ post[r] ∘ ¬`, complements taken in `xs` and `ys`.
pub fn tilde_post<X: Ord + Clone, Y: Ord + Clone>(
    r: &BTreeSet<(X, Y)>,
    p: &BTreeSet<X>,
    xs: &BTreeSet<X>,
    ys: &BTreeSet<Y>,
) -> BTreeSet<Y> {
    complement(ys, &post(r, &complement(xs, p)))
}

pub fn tilde_pre<X: Ord + Clone, Y: Ord + Clone>(
    r: &BTreeSet<(X, Y)>,
    q: &BTreeSet<Y>,
    xs: &BTreeSet<X>,
    ys: &BTreeSet<Y>,
) -> BTreeSet<X> {
    complement(xs, &pre(r, &complement(ys, q)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transformer {
    Post,
    Pre,
    TildePost,
    TildePre,
}

/// The four transformers of a relation on one universe.
pub fn transformers<T: Ord + Clone>(r: &BTreeSet<(T, T)>, p: &BTreeSet<T>, which: Transformer, universe: &BTreeSet<T>) -> BTreeSet<T> {
    match which {
        Transformer::Post => post(r, p),
        Transformer::Pre => pre(r, p),
        Transformer::TildePost => tilde_post(r, p, universe, universe),
        Transformer::TildePre => tilde_pre(r, p, universe, universe),
    }
}

/// `α_h(X) = {h(x) | x ∈ X}`.
pub fn hom_alpha<X: Ord, Y: Ord>(h: impl Fn(&X) -> Y, xs: &BTreeSet<X>) -> BTreeSet<Y> {
    xs.iter().map(h).collect()
}

/// `γ_h(Y) = {x ∈ S | h(x) ∈ Y}`.
pub fn hom_gamma<X: Ord + Clone, Y: Ord>(h: impl Fn(&X) -> Y, universe: &BTreeSet<X>, ys: &BTreeSet<Y>) -> BTreeSet<X> {
    universe.iter().filter(|x| ys.contains(&h(x))).cloned().collect()
}

/// A pair of maps between two finite posets, stored by element index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    pub alpha: Vec<usize>,
    pub gamma: Vec<usize>,
}

impl Connection {
    pub fn from_fns<C: Clone + Ord + Debug, A: Clone + Ord + Debug>(
        cp: &FinitePoset<C>,
        ap: &FinitePoset<A>,
        alpha: impl Fn(&C) -> A,
        gamma: impl Fn(&A) -> C,
    ) -> Result<Self> {
        let alpha = cp
            .elements()
            .iter()
            .map(|x| {
                let y = alpha(x);
                ap.index_of(&y).ok_or_else(|| Error::NotInCarrier(format!("alpha({x:?}) = {y:?}")))
            })
            .collect::<Result<_>>()?;
        let gamma = ap
            .elements()
            .iter()
            .map(|y| {
                let x = gamma(y);
                cp.index_of(&x).ok_or_else(|| Error::NotInCarrier(format!("gamma({y:?}) = {x:?}")))
            })
            .collect::<Result<_>>()?;
        Ok(Connection { alpha, gamma })
    }

    pub fn swapped(&self) -> Connection {
        Connection {
            alpha: self.gamma.clone(),
            gamma: self.alpha.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawViolation {
    pub law: String,
    pub witness: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LawsReport {
    pub checked: Vec<String>,
    pub violations: Vec<LawViolation>,
}

impl LawsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated(&self, law: &str) -> bool {
        self.violations.iter().any(|v| v.law == law)
    }
}

/// Checks monotonicity of both maps, extensivity, reductivity and the
/// adjunction exhaustively, reporting one witness per violated law.
pub fn galois_laws_check<C: Clone + Ord + Debug, A: Clone + Ord + Debug>(
    conn: &Connection,
    cp: &FinitePoset<C>,
    ap: &FinitePoset<A>,
) -> LawsReport {
    let (a, g) = (&conn.alpha, &conn.gamma);
    let (nc, na) = (cp.len(), ap.len());
    let mut rep = LawsReport::default();
    let mut law = |name: &str, w: Option<String>| {
        rep.checked.push(name.to_string());
        if let Some(witness) = w {
            rep.violations.push(LawViolation {
                law: name.to_string(),
                witness,
            });
        }
    };
    let pairs = |n: usize| (0..n).flat_map(move |i| (0..n).map(move |j| (i, j)));
    let c = |i: usize| format!("{:?}", cp.get(i));
    let y = |i: usize| format!("{:?}", ap.get(i));

    law(
        "alpha-monotone",
        pairs(nc)
            .find(|&(i, j)| cp.leq(i, j) && !ap.leq(a[i], a[j]))
            .map(|(i, j)| format!("{} <= {} but alpha not increasing", c(i), c(j))),
    );
    law(
        "gamma-monotone",
        pairs(na)
            .find(|&(i, j)| ap.leq(i, j) && !cp.leq(g[i], g[j]))
            .map(|(i, j)| format!("{} <= {} but gamma not increasing", y(i), y(j))),
    );
    let ga: Vec<usize> = (0..nc).map(|i| g[a[i]]).collect();
    let ag: Vec<usize> = (0..na).map(|j| a[g[j]]).collect();
    let upper = (0..nc)
        .find(|&i| !cp.leq(i, ga[i]))
        .map(|i| format!("{} is not below gamma(alpha(x)) = {}", c(i), c(ga[i])))
        .or_else(|| (0..nc).find(|&i| ga[ga[i]] != ga[i]).map(|i| format!("gamma.alpha not idempotent at {}", c(i))))
        .or_else(|| {
            pairs(nc)
                .find(|&(i, j)| cp.leq(i, j) && !cp.leq(ga[i], ga[j]))
                .map(|(i, j)| format!("gamma.alpha not increasing on {} <= {}", c(i), c(j)))
        });
    law("upper-closure", upper);
    let lower = (0..na)
        .find(|&j| !ap.leq(ag[j], j))
        .map(|j| format!("alpha(gamma(y)) = {} is not below {}", y(ag[j]), y(j)))
        .or_else(|| (0..na).find(|&j| ag[ag[j]] != ag[j]).map(|j| format!("alpha.gamma not idempotent at {}", y(j))))
        .or_else(|| {
            pairs(na)
                .find(|&(i, j)| ap.leq(i, j) && !ap.leq(ag[i], ag[j]))
                .map(|(i, j)| format!("alpha.gamma not increasing on {} <= {}", y(i), y(j)))
        });
    law("lower-closure", lower);
    let adj = (0..nc)
        .flat_map(|i| (0..na).map(move |j| (i, j)))
        .find(|&(i, j)| ap.leq(a[i], j) != cp.leq(i, g[j]))
        .map(|(i, j)| {
            format!(
                "x = {}, y = {}: alpha(x) <= y is {}, x <= gamma(y) is {}",
                c(i),
                y(j),
                ap.leq(a[i], j),
                cp.leq(i, g[j])
            )
        });
    law("adjunction", adj);
    rep
}

/// A relation between two finite posets, by index pairs.
pub type IndexRelation = BTreeSet<(usize, usize)>;

/// `R_α`, checked equal to `{<x,y> | x ⊑ γ(y)}`.
pub fn connection_to_relation<C: Clone + Ord + Debug, A: Clone + Ord + Debug>(
    conn: &Connection,
    cp: &FinitePoset<C>,
    ap: &FinitePoset<A>,
) -> Result<IndexRelation> {
    if !galois_laws_check(conn, cp, ap).passed() {
        return Err(Error::LawsViolated);
    }
    let by_alpha: IndexRelation = (0..cp.len())
        .flat_map(|i| (0..ap.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| ap.leq(conn.alpha[i], j))
        .collect();
    let by_gamma: IndexRelation = (0..cp.len())
        .flat_map(|i| (0..ap.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| cp.leq(i, conn.gamma[j]))
        .collect();
    if by_alpha != by_gamma {
        return Err(Error::LawsViolated);
    }
    Ok(by_alpha)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    /// Witnesses for down-up closure, join closure and meet closure; `None`
    /// when the property holds.
    pub down_up: Option<String>,
    pub join_closed: Option<String>,
    pub meet_closed: Option<String>,
    /// Membership in the tensor product.
    pub member: bool,
    /// Whether `α(x) = ⋀{y | <x,y> ∈ R}`, `γ(y) = ⋁{x | <x,y> ∈ R}` is a
    /// connection whose relation is `R` again.
    pub roundtrip: bool,
}

/// Checks the closure properties, tensor product membership and the
/// relation-to-connection round trip.
pub fn galois_relation_check<C: Clone + Ord + Debug, A: Clone + Ord + Debug>(
    r: &IndexRelation,
    cp: &FinitePoset<C>,
    ap: &FinitePoset<A>,
) -> Result<RelationReport> {
    if let Some(w) = cp.lattice_witness() {
        return Err(Error::NotACompleteLattice(w));
    }
    if let Some(w) = ap.lattice_witness() {
        return Err(Error::NotACompleteLattice(w));
    }
    let (nc, na) = (cp.len(), ap.len());
    let show = |(i, j): (usize, usize)| format!("<{:?}, {:?}>", cp.get(i), ap.get(j));
    let mut rep = RelationReport::default();

    'a: for &(x1, y1) in r {
        for x in (0..nc).filter(|&x| cp.leq(x, x1)) {
            for y in (0..na).filter(|&y| ap.leq(y1, y)) {
                if !r.contains(&(x, y)) {
                    rep.down_up = Some(format!("{} in R but {} is not", show((x1, y1)), show((x, y))));
                    break 'a;
                }
            }
        }
    }
    // closure under all joins of a finite lattice = bottom plus binary joins
    let bot = cp.join(&[]).expect("lattice");
    'b: for y in 0..na {
        let left: Vec<usize> = (0..nc).filter(|&x| r.contains(&(x, y))).collect();
        if !r.contains(&(bot, y)) {
            rep.join_closed = Some(format!("empty join {} missing", show((bot, y))));
            break;
        }
        for &x1 in &left {
            for &x2 in &left {
                let j = cp.join(&[x1, x2]).expect("lattice");
                if !r.contains(&(j, y)) {
                    rep.join_closed = Some(format!("{} and {} in R but not their join {}", show((x1, y)), show((x2, y)), show((j, y))));
                    break 'b;
                }
            }
        }
    }
    let top = ap.meet(&[]).expect("lattice");
    'c: for x in 0..nc {
        let right: Vec<usize> = (0..na).filter(|&y| r.contains(&(x, y))).collect();
        if !r.contains(&(x, top)) {
            rep.meet_closed = Some(format!("empty meet {} missing", show((x, top))));
            break;
        }
        for &y1 in &right {
            for &y2 in &right {
                let m = ap.meet(&[y1, y2]).expect("lattice");
                if !r.contains(&(x, m)) {
                    rep.meet_closed = Some(format!("{} and {} in R but not their meet {}", show((x, y1)), show((x, y2)), show((x, m))));
                    break 'c;
                }
            }
        }
    }
    rep.member = rep.down_up.is_none() && rep.join_closed.is_none() && rep.meet_closed.is_none();

    let alpha: Vec<usize> = (0..nc)
        .map(|x| {
            let ys: Vec<usize> = (0..na).filter(|&y| r.contains(&(x, y))).collect();
            ap.meet(&ys).expect("lattice")
        })
        .collect();
    let gamma: Vec<usize> = (0..na)
        .map(|y| {
            let xs: Vec<usize> = (0..nc).filter(|&x| r.contains(&(x, y))).collect();
            cp.join(&xs).expect("lattice")
        })
        .collect();
    let conn = Connection { alpha, gamma };
    rep.roundtrip = connection_to_relation(&conn, cp, ap).is_ok_and(|back| &back == r);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    type Set = BTreeSet<u8>;

    fn set(xs: &[u8]) -> Set {
        xs.iter().copied().collect()
    }

    fn sets(base: &[u8]) -> FinitePoset<Set> {
        powerset(base).unwrap()
    }

    /// All subsets by bitmask, independent of `powerset`.
    fn subsets(base: &[u8]) -> Vec<Set> {
        (0..1u32 << base.len())
            .map(|m| base.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, x)| *x).collect())
            .collect()
    }

    #[test]
    fn transformers_examples() {
        let r: BTreeSet<(u8, char)> = [(1, 'a'), (2, 'b')].into_iter().collect();
        assert_eq!(post(&r, &set(&[1])), ['a'].into_iter().collect());
        assert_eq!(pre(&r, &['a'].into_iter().collect()), set(&[1]));
    }

    #[test]
    fn tilde_post_by_brute_force() {
        let u = set(&[0, 1, 2]);
        let cells: Vec<(u8, u8)> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
        // every subset of a fixed set of 9 pairs is too many with all P; sample relations by mask stride
        for m in (0..1u32 << 9).step_by(7) {
            let r: BTreeSet<(u8, u8)> = cells.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| *p).collect();
            for p in subsets(&[0, 1, 2]) {
                // y ∈ tilde-post P  iff  every x with <x,y> ∈ r is in P
                let oracle: Set = u.iter().copied().filter(|y| r.iter().all(|(x, yy)| yy != y || p.contains(x))).collect();
                assert_eq!(transformers(&r, &p, Transformer::TildePost, &u), oracle);
            }
        }
    }

    #[test]
    fn homomorphic_connection_on_four_elements() {
        let base = [0u8, 1, 2, 3];
        let cp = sets(&base);
        let ap = sets(&[0, 1]);
        let h = |x: &u8| x % 2;
        let u: Set = base.iter().copied().collect();
        let conn = Connection::from_fns(&cp, &ap, |x| hom_alpha(h, x), |y| hom_gamma(h, &u, y)).unwrap();
        assert!(galois_laws_check(&conn, &cp, &ap).passed());
        assert_eq!(hom_alpha(|x: &u8| *x, &set(&[1, 3])), set(&[1, 3]));
        assert_eq!(hom_alpha(|_: &u8| 7u8, &set(&[1, 3])), set(&[7]));
    }

    #[test]
    fn post_and_tilde_pre_connect() {
        let xs = set(&[0, 1, 2]);
        let r: BTreeSet<(u8, u8)> = [(0, 1), (1, 1), (2, 0)].into_iter().collect();
        let cp = sets(&[0, 1, 2]);
        let conn = Connection::from_fns(&cp, &cp, |p| post(&r, p), |q| tilde_pre(&r, q, &xs, &xs)).unwrap();
        assert!(galois_laws_check(&conn, &cp, &cp).passed());
    }

    #[test]
    fn swapped_connection_fails_extensivity() {
        let c = chain(3);
        let conn = Connection {
            alpha: vec![0, 0, 2],
            gamma: vec![1, 1, 2],
        };
        assert!(galois_laws_check(&conn, &c, &c).passed());
        let rep = galois_laws_check(&conn.swapped(), &c, &c);
        assert!(rep.violated("upper-closure"));
        assert!(rep.violations[0].witness.starts_with('1'));
    }

    #[test]
    fn relation_of_identity_is_the_order() {
        let c = chain(4);
        let id = Connection {
            alpha: (0..4).collect(),
            gamma: (0..4).collect(),
        };
        let r = connection_to_relation(&id, &c, &c).unwrap();
        let leq: IndexRelation = (0..4).flat_map(|i| (i..4).map(move |j| (i, j))).collect();
        assert_eq!(r, leq);
        let rep = galois_relation_check(&r, &c, &c).unwrap();
        assert!(rep.member && rep.roundtrip);
    }

    #[test]
    fn non_monotone_alpha_rejected() {
        let c = chain(2);
        let bad = Connection {
            alpha: vec![1, 0],
            gamma: vec![1, 0],
        };
        assert_eq!(connection_to_relation(&bad, &c, &c), Err(Error::LawsViolated));
    }

    #[test]
    fn homomorphic_relation_brute_force() {
        let base = [0u8, 1, 2];
        let cp = sets(&base);
        let ap = sets(&[0, 1]);
        let h = |x: &u8| u8::from(*x > 0);
        let u: Set = base.iter().copied().collect();
        let conn = Connection::from_fns(&cp, &ap, |x| hom_alpha(h, x), |y| hom_gamma(h, &u, y)).unwrap();
        let r = connection_to_relation(&conn, &cp, &ap).unwrap();
        let oracle: IndexRelation = (0..cp.len())
            .flat_map(|i| (0..ap.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| cp.get(i).iter().map(h).all(|v| ap.get(j).contains(&v)))
            .collect();
        assert_eq!(r, oracle);
    }

    #[test]
    fn full_relation_and_missing_join() {
        let c = sets(&[0, 1]);
        let a = chain(3);
        let full: IndexRelation = (0..c.len()).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
        assert!(galois_relation_check(&full, &c, &a).unwrap().member);

        let conn = Connection::from_fns(&c, &a, |x: &Set| x.len(), |y| if *y >= 2 { set(&[0, 1]) } else { set(&[]) }).unwrap();
        // alpha = cardinality is not a connection (alpha({0}) = 1 but gamma(1) = {})
        assert!(!galois_laws_check(&conn, &c, &a).passed());
        let h = |x: &u8| *x;
        let u = set(&[0, 1]);
        let cp = c.clone();
        let hc = Connection::from_fns(&cp, &cp, |x| hom_alpha(h, x), |y| hom_gamma(h, &u, y)).unwrap();
        let mut r = connection_to_relation(&hc, &cp, &cp).unwrap();
        // drop <{0,1}, {0,1}>: the join of <{0},{0,1}> and <{1},{0,1}>
        let top = cp.index_of(&set(&[0, 1])).unwrap();
        r.remove(&(top, top));
        let rep = galois_relation_check(&r, &cp, &cp).unwrap();
        assert!(!rep.member);
        assert!(rep.join_closed.is_some());
        assert!(!rep.roundtrip);
    }

    #[test]
    fn poset_validation() {
        assert!(FinitePoset::new(vec![0u8, 1], |_, _| true).is_err());
        assert!(chain(3).is_complete_lattice());
        let anti = FinitePoset::new(vec![0u8, 1], |a, b| a == b).unwrap();
        assert!(!anti.is_complete_lattice());
        assert!(matches!(powerset(&[0u8; 7]), Err(Error::CarrierTooLarge(_))));
    }
}
