//! Canonical forms under reference renaming.
//!
//! Objects are coloured by class and attribute values, the colouring is
//! refined along relation tuples, sequence positions and reified pairs until
//! stable, and remaining ties are broken by individualising each member of
//! the first non-singleton cell in turn. The canonical form is the least
//! relabelled instance over all leaves of that search. Members of a cell that
//! are interchangeable (their transposition is an automorphism) are explored
//! only once.

use std::collections::{BTreeMap, BTreeSet};

use super::{Instance, Object};
use crate::model::ObjectRef;

/// Renumber references to `1..=n` so that isomorphic instances map to the
/// same value. Pool references not used by any object follow as `n+1..`.
pub fn canonicalize(instance: &Instance) -> Instance {
    let g = Graph::new(instance);
    let n = g.n;
    if n == 0 {
        return g.relabel(&[]);
    }
    let init = g.refine(g.initial.clone());
    let twins = g.twins(&init);
    let mut best: Option<Instance> = None;
    g.search(init, &twins, &mut best);
    best.expect("at least one leaf")
}

pub fn is_canonical(instance: &Instance) -> bool {
    let mut norm = instance.clone();
    norm.normalize();
    canonicalize(instance) == norm
}

type Colour = u32;

struct Graph<'a> {
    inst: &'a Instance,
    n: usize,
    index: BTreeMap<ObjectRef, usize>,
    initial: Vec<Colour>,
    /// `(relation, neighbour, outgoing)` per object, from flat tuples.
    adj: Vec<Vec<(u32, usize, bool)>>,
    /// `(relation, position, neighbour, role)`: role 0 = source of a
    /// sequence, 1 = member; for reified data, 2/3/4 = pair source, pair
    /// target, data object.
    ordered: Vec<Vec<(u32, u32, usize, u8)>>,
    in_pool: Vec<bool>,
}

impl<'a> Graph<'a> {
    fn new(inst: &'a Instance) -> Self {
        let n = inst.objects.len();
        let mut index = BTreeMap::new();
        for (i, o) in inst.objects.iter().enumerate() {
            index.entry(o.r).or_insert(i);
        }
        let keys: BTreeSet<(&str, &BTreeMap<_, _>)> = inst
            .objects
            .iter()
            .map(|o| (o.class.as_str(), &o.attrs))
            .collect();
        let keys: Vec<_> = keys.into_iter().collect();
        let initial = inst
            .objects
            .iter()
            .map(|o| keys.binary_search(&(o.class.as_str(), &o.attrs)).unwrap() as Colour)
            .collect();

        let names: BTreeSet<&str> = inst
            .relations
            .keys()
            .chain(inst.sequences.keys())
            .chain(inst.reified.keys())
            .map(String::as_str)
            .collect();
        let rel_id = |name: &str| names.iter().position(|x| *x == name).unwrap() as u32;

        let mut adj = vec![Vec::new(); n];
        for (name, tuples) in &inst.relations {
            let id = rel_id(name);
            for (s, t) in tuples {
                if let (Some(&a), Some(&b)) = (index.get(s), index.get(t)) {
                    adj[a].push((id, b, true));
                    adj[b].push((id, a, false));
                }
            }
        }
        let mut ordered = vec![Vec::new(); n];
        for (name, seqs) in &inst.sequences {
            let id = rel_id(name);
            for (s, q) in seqs {
                let Some(&a) = index.get(s) else { continue };
                for (pos, t) in q.iter().enumerate() {
                    if let Some(&b) = index.get(t) {
                        ordered[a].push((id, pos as u32, b, 0));
                        ordered[b].push((id, pos as u32, a, 1));
                    }
                }
            }
        }
        for (name, map) in &inst.reified {
            let id = rel_id(name);
            for (&(s, t), d) in map {
                let ends = [index.get(&s), index.get(&t), index.get(d)];
                if let [Some(&a), Some(&b), Some(&c)] = ends {
                    ordered[a].push((id, 0, b, 2));
                    ordered[a].push((id, 1, c, 2));
                    ordered[b].push((id, 0, a, 3));
                    ordered[b].push((id, 1, c, 3));
                    ordered[c].push((id, 0, a, 4));
                    ordered[c].push((id, 1, b, 4));
                }
            }
        }
        let in_pool = inst
            .objects
            .iter()
            .map(|o| inst.pool.as_ref().is_some_and(|p| p.contains(&o.r)))
            .collect();
        Graph {
            inst,
            n,
            index,
            initial,
            adj,
            ordered,
            in_pool,
        }
    }

    /// Iterate neighbourhood signatures until the number of colours is
    /// stable. Colours stay ordered by their previous value, so a cell only
    /// ever splits in place.
    fn refine(&self, mut col: Vec<Colour>) -> Vec<Colour> {
        let mut count = distinct(&col);
        loop {
            let sigs: Vec<_> = (0..self.n)
                .map(|i| {
                    let mut nb: Vec<(u32, Colour, bool)> = self.adj[i]
                        .iter()
                        .map(|&(r, j, out)| (r, col[j], out))
                        .collect();
                    nb.sort_unstable();
                    let mut ord: Vec<(u32, u8, u32, Colour)> = self.ordered[i]
                        .iter()
                        .map(|&(r, p, j, role)| (r, role, p, col[j]))
                        .collect();
                    ord.sort_unstable();
                    (col[i], self.in_pool[i], nb, ord)
                })
                .collect();
            let mut sorted: Vec<_> = sigs.iter().collect();
            sorted.sort();
            sorted.dedup();
            let next: Vec<Colour> = sigs
                .iter()
                .map(|s| sorted.binary_search(&s).unwrap() as Colour)
                .collect();
            let c = sorted.len();
            col = next;
            if c == count {
                return col;
            }
            count = c;
        }
    }

    /// Pairs in the same refined cell whose transposition is an automorphism,
    /// as a representative per object.
    fn twins(&self, col: &[Colour]) -> Vec<usize> {
        let mut rep: Vec<usize> = (0..self.n).collect();
        let mut base = self.inst.clone();
        base.normalize();
        for v in 0..self.n {
            for u in 0..v {
                if rep[u] != u || col[u] != col[v] {
                    continue;
                }
                if self.swap(u, v) == base {
                    rep[v] = u;
                    break;
                }
            }
        }
        rep
    }

    fn swap(&self, u: usize, v: usize) -> Instance {
        let (a, b) = (self.inst.objects[u].r, self.inst.objects[v].r);
        let f = |r: ObjectRef| {
            if r == a {
                b
            } else if r == b {
                a
            } else {
                r
            }
        };
        let mut out = map_instance(self.inst, f);
        out.normalize();
        out
    }

    fn search(&self, col: Vec<Colour>, twins: &[usize], best: &mut Option<Instance>) {
        let mut cells: BTreeMap<Colour, Vec<usize>> = BTreeMap::new();
        for (i, &c) in col.iter().enumerate() {
            cells.entry(c).or_default().push(i);
        }
        let Some(cell) = cells.into_values().find(|c| c.len() > 1) else {
            let cand = self.relabel(&col);
            if best.as_ref().is_none_or(|b| cand < *b) {
                *best = Some(cand);
            }
            return;
        };
        let mut tried: Vec<usize> = Vec::new();
        for &v in &cell {
            if tried.iter().any(|&u| twins[u] == twins[v]) {
                continue;
            }
            tried.push(v);
            let next: Vec<Colour> = col
                .iter()
                .enumerate()
                .map(|(i, &c)| 2 * c + u32::from(i != v))
                .collect();
            self.search(self.refine(next), twins, best);
        }
    }

    /// Apply a discrete colouring: colour `k` becomes reference `k+1`.
    fn relabel(&self, col: &[Colour]) -> Instance {
        let mut map: BTreeMap<ObjectRef, ObjectRef> = BTreeMap::new();
        for (r, &i) in &self.index {
            map.insert(*r, ObjectRef(u64::from(col[i]) + 1));
        }
        let mut next = self.n as u64 + 1;
        let extra = self
            .inst
            .pool
            .iter()
            .flatten()
            .copied()
            .chain(referenced(self.inst))
            .collect::<BTreeSet<_>>();
        for r in extra {
            map.entry(r).or_insert_with(|| {
                next += 1;
                ObjectRef(next - 1)
            });
        }
        let mut out = map_instance(self.inst, |r| map[&r]);
        // Duplicate references collapse onto one slot; keep them distinct.
        if self.index.len() != self.n {
            for (i, o) in out.objects.iter_mut().enumerate() {
                if self.index[&self.inst.objects[i].r] != i {
                    o.r = ObjectRef(next);
                    next += 1;
                }
            }
        }
        out.normalize();
        out
    }
}

fn distinct(col: &[Colour]) -> usize {
    col.iter().collect::<BTreeSet<_>>().len()
}

fn referenced(inst: &Instance) -> impl Iterator<Item = ObjectRef> + '_ {
    let flat = inst.relations.values().flatten().flat_map(|&(a, b)| [a, b]);
    let seqs = inst
        .sequences
        .values()
        .flatten()
        .flat_map(|(s, q)| std::iter::once(*s).chain(q.iter().copied()));
    let reif = inst
        .reified
        .values()
        .flatten()
        .flat_map(|(&(a, b), &d)| [a, b, d]);
    flat.chain(seqs).chain(reif)
}

fn map_instance(inst: &Instance, f: impl Fn(ObjectRef) -> ObjectRef) -> Instance {
    Instance {
        objects: inst
            .objects
            .iter()
            .map(|o| Object {
                r: f(o.r),
                class: o.class.clone(),
                attrs: o.attrs.clone(),
            })
            .collect(),
        relations: inst
            .relations
            .iter()
            .map(|(k, t)| (k.clone(), t.iter().map(|&(a, b)| (f(a), f(b))).collect()))
            .collect(),
        sequences: inst
            .sequences
            .iter()
            .map(|(k, m)| {
                (
                    k.clone(),
                    m.iter()
                        .map(|(s, q)| (f(*s), q.iter().map(|&r| f(r)).collect()))
                        .collect(),
                )
            })
            .collect(),
        reified: inst
            .reified
            .iter()
            .map(|(k, m)| {
                (
                    k.clone(),
                    m.iter().map(|(&(a, b), &d)| ((f(a), f(b)), f(d))).collect(),
                )
            })
            .collect(),
        pool: inst
            .pool
            .as_ref()
            .map(|p| p.iter().map(|&r| f(r)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Value;
    use proptest::prelude::*;

    fn obj(r: u64, c: &str) -> Object {
        Object::new(ObjectRef(r), c)
    }

    fn with_objects(objects: Vec<Object>) -> Instance {
        Instance {
            objects,
            ..Instance::default()
        }
    }

    fn pair(a: u64, b: u64) -> (ObjectRef, ObjectRef) {
        (ObjectRef(a), ObjectRef(b))
    }

    #[test]
    fn renumbers_by_class() {
        let mut i = with_objects(vec![obj(7, "A"), obj(2, "B")]);
        i.relations.insert("r".into(), [pair(7, 2)].into());
        let c = canonicalize(&i);
        assert_eq!(c.objects, vec![obj(1, "A"), obj(2, "B")]);
        assert_eq!(c.relations["r"], [pair(1, 2)].into());
    }

    #[test]
    fn idempotent_on_a_cycle() {
        let mut i = with_objects((1..=5).map(|r| obj(r * 3, "N")).collect());
        let t = (1..=5).map(|k| pair(k * 3, (k % 5 + 1) * 3)).collect();
        i.relations.insert("next".into(), t);
        let c = canonicalize(&i);
        assert_eq!(canonicalize(&c), c);
        assert!(is_canonical(&c));
        assert!(!is_canonical(&i));
    }

    #[test]
    fn sequences_distinguish_order() {
        let mut a = with_objects(vec![
            obj(1, "P"),
            obj(2, "Q").with("v", Value::Int(1)),
            obj(3, "Q").with("v", Value::Int(2)),
        ]);
        a.sequences.insert(
            "s".into(),
            [(ObjectRef(1), vec![ObjectRef(2), ObjectRef(3)])].into(),
        );
        let mut b = a.clone();
        b.sequences.insert(
            "s".into(),
            [(ObjectRef(1), vec![ObjectRef(3), ObjectRef(2)])].into(),
        );
        assert_ne!(canonicalize(&a), canonicalize(&b));
    }

    #[test]
    fn unused_pool_refs_follow_objects() {
        let mut i = with_objects(vec![obj(5, "A")]);
        i.pool = Some([ObjectRef(2), ObjectRef(5)].into());
        let c = canonicalize(&i);
        assert_eq!(c.objects, vec![obj(1, "A")]);
        assert_eq!(c.pool, Some([ObjectRef(1), ObjectRef(2)].into()));
    }

    #[test]
    fn regular_graph_needs_individualisation() {
        // Two disjoint triangles vs a hexagon: same degrees, not isomorphic.
        let mk = |edges: &[(u64, u64)]| {
            let mut i = with_objects((1..=6).map(|r| obj(r, "V")).collect());
            i.relations
                .insert("e".into(), edges.iter().map(|&(a, b)| pair(a, b)).collect());
            i
        };
        let tri = mk(&[(1, 2), (2, 3), (3, 1), (4, 5), (5, 6), (6, 4)]);
        let hex = mk(&[(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1)]);
        assert_ne!(canonicalize(&tri), canonicalize(&hex));
        let tri2 = mk(&[(4, 6), (6, 5), (5, 4), (2, 1), (1, 3), (3, 2)]);
        assert_eq!(canonicalize(&tri), canonicalize(&tri2));
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..7)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    prop::collection::vec((0..2u8, 0..3i64), n),
                    prop::collection::btree_set((0..n, 0..n), 0..10),
                    prop::collection::btree_set((0..n, 0..n), 0..6),
                    prop::collection::vec(0..n, 0..4),
                )
            })
            .prop_map(|(_, objs, r1, r2, seq)| {
                let mut i = with_objects(
                    objs.iter()
                        .enumerate()
                        .map(|(k, &(c, v))| {
                            obj(k as u64 + 1, if c == 0 { "A" } else { "B" })
                                .with("v", Value::Int(v))
                        })
                        .collect(),
                );
                let p = |(a, b): (usize, usize)| pair(a as u64 + 1, b as u64 + 1);
                i.relations
                    .insert("r".into(), r1.into_iter().map(p).collect());
                i.relations
                    .insert("s".into(), r2.into_iter().map(p).collect());
                if !seq.is_empty() {
                    i.sequences.insert(
                        "q".into(),
                        [(
                            ObjectRef(1),
                            seq.iter().map(|&k| ObjectRef(k as u64 + 1)).collect(),
                        )]
                        .into(),
                    );
                }
                i.normalize();
                i
            })
    }

    fn permute(i: &Instance, perm: &[u64]) -> Instance {
        let f = |r: ObjectRef| ObjectRef(perm[r.0 as usize - 1] * 10 + 3);
        map_instance(i, f)
    }

    proptest! {
        #[test]
        fn invariant_under_renaming(i in arb_instance(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let n = i.objects.len();
            let mut perm: Vec<u64> = (1..=n as u64).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let j = permute(&i, &perm);
            let ci = canonicalize(&i);
            prop_assert_eq!(&ci, &canonicalize(&j));
            prop_assert_eq!(&canonicalize(&ci), &ci);
        }

        #[test]
        fn canonical_form_is_isomorphic(i in arb_instance()) {
            let c = canonicalize(&i);
            prop_assert_eq!(c.objects.len(), i.objects.len());
            for (k, t) in &i.relations {
                prop_assert_eq!(c.relations.get(k).map_or(0, |x| x.len()), t.len());
            }
            let mut a: Vec<_> = i.objects.iter().map(|o| (&o.class, &o.attrs)).collect();
            let mut b: Vec<_> = c.objects.iter().map(|o| (&o.class, &o.attrs)).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
