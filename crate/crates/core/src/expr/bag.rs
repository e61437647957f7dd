use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A finite multiset. Zero counts are never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bag<T: Ord> {
    counts: BTreeMap<T, usize>,
}

impl<T: Ord> Default for Bag<T> {
    fn default() -> Self {
        Bag {
            counts: BTreeMap::new(),
        }
    }
}

impl<T: Ord> Bag<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: T) {
        self.insert_n(v, 1);
    }

    pub fn insert_n(&mut self, v: T, n: usize) {
        if n > 0 {
            *self.counts.entry(v).or_default() += n;
        }
    }

    pub fn count(&self, v: &T) -> usize {
        self.counts.get(v).copied().unwrap_or(0)
    }

    /// Total number of elements, counting repeats.
    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Number of distinct elements.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, usize)> {
        self.counts.iter().map(|(k, v)| (k, *v))
    }

    pub fn keys(&self) -> impl DoubleEndedIterator<Item = &T> {
        self.counts.keys()
    }

    /// Bag union: counts add up.
    pub fn union(mut self, other: Bag<T>) -> Bag<T> {
        for (k, n) in other.counts {
            self.insert_n(k, n);
        }
        self
    }

    pub fn map<U: Ord>(&self, f: impl Fn(&T) -> U) -> Bag<U> {
        let mut out = Bag::new();
        for (k, n) in self.iter() {
            out.insert_n(f(k), n);
        }
        out
    }
}

impl<T: Ord> FromIterator<T> for Bag<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut b = Bag::new();
        for v in iter {
            b.insert(v);
        }
        b
    }
}

impl<T: Ord + fmt::Display> fmt::Display for Bag<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[[")?;
        for (i, (k, n)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}->{n}")?;
        }
        f.write_str("]]")
    }
}

/// Sum of value times count; `None` on overflow.
pub fn bagsum(b: &Bag<i64>) -> Option<i64> {
    b.iter().try_fold(0i64, |acc, (v, n)| {
        v.checked_mul(i64::try_from(n).ok()?)
            .and_then(|x| acc.checked_add(x))
    })
}

/// Smallest element; `None` for the empty bag.
pub fn bagmin<T: Ord + Clone>(b: &Bag<T>) -> Option<T> {
    b.keys().next().cloned()
}

/// Largest element; `None` for the empty bag.
pub fn bagmax<T: Ord + Clone>(b: &Bag<T>) -> Option<T> {
    b.keys().next_back().cloned()
}

/// Multiset of `f(x)` over `xs`; the result is independent of iteration order.
pub fn bag_of<X, T: Ord>(xs: impl IntoIterator<Item = X>, f: impl Fn(X) -> T) -> Bag<T> {
    xs.into_iter().map(f).collect()
}

/// The strictly ascending enumeration of a finite set.
pub fn as_seq<T: Ord + Clone>(s: &BTreeSet<T>) -> Vec<T> {
    s.iter().cloned().collect()
}

/// The numerically first element of a set.
pub fn pick_first<T: Ord + Clone>(s: &BTreeSet<T>) -> Option<T> {
    s.first().cloned()
}

/// Smallest transitive relation containing `tuples`.
pub fn transitive_closure<T: Ord + Copy>(tuples: &BTreeSet<(T, T)>) -> BTreeSet<(T, T)> {
    let mut succ: BTreeMap<T, BTreeSet<T>> = BTreeMap::new();
    for &(a, b) in tuples {
        succ.entry(a).or_default().insert(b);
    }
    let mut out = BTreeSet::new();
    for &start in succ.keys() {
        let mut stack: Vec<T> = succ[&start].iter().copied().collect();
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                out.insert((start, n));
                if let Some(next) = succ.get(&n) {
                    stack.extend(next.iter().copied());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bag(pairs: &[(i64, usize)]) -> Bag<i64> {
        let mut b = Bag::new();
        for &(v, n) in pairs {
            b.insert_n(v, n);
        }
        b
    }

    #[test]
    fn aggregates() {
        assert_eq!(bagsum(&Bag::new()), Some(0));
        assert_eq!(bagsum(&bag(&[(2, 2), (3, 1)])), Some(7));
        let b = bag(&[(1, 1), (5, 2)]);
        assert_eq!(bagmax(&b), Some(5));
        assert_eq!(bagmin(&b), Some(1));
        assert_eq!(bagmin(&Bag::<i64>::new()), None);
        assert_eq!(bagsum(&bag(&[(i64::MAX, 2)])), None);
    }

    #[test]
    fn no_zero_counts() {
        let mut b = Bag::new();
        b.insert_n(4, 0);
        assert!(b.is_empty());
        assert_eq!(b.distinct(), 0);
    }

    #[test]
    fn bag_of_values() {
        let powers = [300, 300];
        assert_eq!(bag_of(powers, |p| p), bag(&[(300, 2)]));
        assert!(bag_of(Vec::<i64>::new(), |p| p).is_empty());
        let vals = BTreeMap::from([(1, 5), (2, 7), (3, 5)]);
        assert_eq!(bag_of(vals.keys(), |r| vals[r]), bag(&[(5, 2), (7, 1)]));
    }

    #[test]
    fn seqs() {
        assert!(as_seq(&BTreeSet::<u64>::new()).is_empty());
        assert_eq!(as_seq(&BTreeSet::from([3, 1, 2])), vec![1, 2, 3]);
        assert_eq!(as_seq(&BTreeSet::from([9])), vec![9]);
        assert_eq!(pick_first(&BTreeSet::from([4, 2])), Some(2));
    }

    #[test]
    fn closures() {
        let (pc, mb, cpu) = (1, 2, 3);
        let c = transitive_closure(&BTreeSet::from([(pc, mb), (mb, cpu)]));
        assert!(c.contains(&(pc, cpu)));
        let image: BTreeSet<_> = c.iter().filter(|(a, _)| *a == pc).map(|p| p.1).collect();
        assert_eq!(image, BTreeSet::from([mb, cpu]));
        assert!(transitive_closure(&BTreeSet::<(u8, u8)>::new()).is_empty());
        let cyc = transitive_closure(&BTreeSet::from([(1, 2), (2, 1)]));
        assert!(cyc.contains(&(1, 1)) && cyc.contains(&(2, 2)));
    }

    proptest! {
        #[test]
        fn bagsum_is_additive(a in prop::collection::vec(0i64..100, 0..20), b in prop::collection::vec(0i64..100, 0..20)) {
            let ba: Bag<i64> = a.iter().copied().collect();
            let bb: Bag<i64> = b.iter().copied().collect();
            let sa = bagsum(&ba).unwrap();
            let sb = bagsum(&bb).unwrap();
            prop_assert_eq!(bagsum(&ba.union(bb)).unwrap(), sa + sb);
        }

        #[test]
        fn as_seq_is_ascending(s in prop::collection::btree_set(0u32..1000, 0..30)) {
            let q = as_seq(&s);
            prop_assert!(q.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(q.into_iter().collect::<BTreeSet<_>>(), s);
        }

        #[test]
        fn closure_is_idempotent(edges in prop::collection::btree_set((0u8..8, 0u8..8), 0..20)) {
            let c = transitive_closure(&edges);
            prop_assert_eq!(transitive_closure(&c), c.clone());
            prop_assert!(edges.is_subset(&c));
        }
    }
}
