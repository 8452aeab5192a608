//! Per-structure operations: membership, embedding and exhaustive enumeration.

use itertools::Itertools;
use ndarray::Array1;
use num_traits::ToPrimitive;

use crate::counting::space::{pair_index, Family, StructureSpace};
use crate::counting::structure::Structure;
use crate::error::{Error, Result};

impl StructureSpace {
    /// Polynomial-time membership test; errors name the violated condition.
    pub fn check_membership(&self, y: &Structure) -> Result<()> {
        match (&self.family(), y) {
            (Family::Multiclass { d } | Family::Ordinal { d }, Structure::Label(l)) => {
                in_range(*l, *d)
            }
            (Family::PosetRegression { poset }, Structure::Label(l)) => in_range(*l, poset.len()),
            (Family::Hierarchy { tree }, Structure::Label(l)) => in_range(*l, tree.len()),
            (Family::Multilabel { d }, Structure::Subset(bits)) => bits_len(bits, *d),
            (Family::EllSubsets { d, ell }, Structure::Subset(bits)) => {
                bits_len(bits, *d)?;
                let k = bits.iter().filter(|&&b| b).count();
                if k != *ell {
                    return Err(Error::Membership(format!(
                        "subset has {k} elements, expected exactly {ell}"
                    )));
                }
                Ok(())
            }
            (Family::Cliques { n }, Structure::Subset(bits)) => bits_len(bits, *n),
            (
                Family::Subtrees {
                    tree,
                    include_empty,
                },
                Structure::Subset(bits),
            ) => {
                bits_len(bits, tree.len())?;
                if !include_empty && bits.iter().all(|&b| !b) {
                    return Err(Error::Membership(
                        "empty subtree excluded by this space".into(),
                    ));
                }
                if !tree.is_rooted_subtree(bits) {
                    return Err(Error::Membership(
                        "vertex set is not connected to the root".into(),
                    ));
                }
                Ok(())
            }
            (Family::Permutations { d }, Structure::Ranking(order)) => {
                if order.len() != *d {
                    return Err(Error::Membership(format!(
                        "ranking has {} entries, expected {d}",
                        order.len()
                    )));
                }
                let mut seen = vec![false; *d];
                for &v in order {
                    if v >= *d {
                        return Err(Error::Membership(format!("label {v} out of range 0..{d}")));
                    }
                    if seen[v] {
                        return Err(Error::Membership(format!("label {v} repeated")));
                    }
                    seen[v] = true;
                }
                Ok(())
            }
            (Family::DirectedCycles { n }, Structure::DirectedCycle(seq))
            | (Family::UndirectedCycles { n }, Structure::UndirectedCycle(seq)) => {
                if seq.len() < 3 {
                    return Err(Error::Membership(format!(
                        "cycle has {} vertices, need at least 3",
                        seq.len()
                    )));
                }
                let mut seen = vec![false; *n];
                for &v in seq {
                    if v >= *n {
                        return Err(Error::Membership(format!("vertex {v} out of range 0..{n}")));
                    }
                    if seen[v] {
                        return Err(Error::Membership(format!(
                            "vertex {v} visited twice; pairs must form a single simple cycle"
                        )));
                    }
                    seen[v] = true;
                }
                Ok(())
            }
            (Family::PartialTournaments { n }, Structure::Tournament(pairs)) => {
                let mut oriented = std::collections::BTreeSet::new();
                for &(u, v) in pairs {
                    if u >= *n || v >= *n {
                        return Err(Error::Membership(format!(
                            "pair ({u},{v}) out of range 0..{n}"
                        )));
                    }
                    if u == v {
                        return Err(Error::Membership(format!("self-loop at {u}")));
                    }
                    if !oriented.insert((u.min(v), u.max(v))) {
                        return Err(Error::Membership(format!(
                            "pair {{{},{}}} oriented twice (2-cycle or duplicate)",
                            u.min(v),
                            u.max(v)
                        )));
                    }
                }
                Ok(())
            }
            _ => Err(Error::Membership(format!(
                "payload {:?} does not match family {:?}",
                payload_name(y),
                self.family()
            ))),
        }
    }

    /// The embedding psi(y). Errors if `y` is not a member.
    pub fn embed(&self, y: &Structure) -> Result<Array1<f64>> {
        self.check_membership(y)?;
        let dim = self.embedding_dim();
        let mut psi = Array1::zeros(dim);
        match (&self.family(), y) {
            (Family::Multiclass { .. }, Structure::Label(l)) => psi[*l] = 1.0,
            (Family::Ordinal { .. }, Structure::Label(l)) => {
                for i in 0..=*l {
                    psi[i] = 1.0;
                }
            }
            (Family::PosetRegression { poset }, Structure::Label(l)) => {
                for i in 0..poset.len() {
                    if poset.dominates(*l, i) {
                        psi[i] = 1.0;
                    }
                }
            }
            (Family::Hierarchy { tree }, Structure::Label(l)) => {
                psi[*l] = 1.0;
                for a in tree.ancestors(*l) {
                    psi[a] = 1.0;
                }
            }
            (
                Family::Multilabel { .. } | Family::EllSubsets { .. } | Family::Subtrees { .. },
                Structure::Subset(bits),
            ) => {
                for (i, &b) in bits.iter().enumerate() {
                    if b {
                        psi[i] = 1.0;
                    }
                }
            }
            (Family::Cliques { n }, Structure::Subset(bits)) => {
                let members: Vec<usize> = bits
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &b)| b.then_some(i))
                    .collect();
                for (a, b) in members.iter().tuple_combinations() {
                    psi[pair_index(*a, *b, *n)] = 1.0;
                }
            }
            (Family::Permutations { d }, Structure::Ranking(order)) => {
                let mut pos = vec![0usize; *d];
                for (rank, &v) in order.iter().enumerate() {
                    pos[v] = rank;
                }
                for u in 0..*d {
                    for v in (u + 1)..*d {
                        psi[pair_index(u, v, *d)] = if pos[u] < pos[v] { 1.0 } else { -1.0 };
                    }
                }
            }
            (Family::DirectedCycles { n }, Structure::DirectedCycle(seq)) => {
                for (u, v) in Structure::cycle_pairs(seq) {
                    if u < v {
                        psi[pair_index(u, v, *n)] = 1.0;
                    } else {
                        psi[pair_index(v, u, *n)] = -1.0;
                    }
                }
            }
            (Family::UndirectedCycles { n }, Structure::UndirectedCycle(seq)) => {
                for (u, v) in Structure::cycle_pairs(seq) {
                    psi[pair_index(u.min(v), u.max(v), *n)] = 1.0;
                }
            }
            (Family::PartialTournaments { n }, Structure::Tournament(pairs)) => {
                for &(u, v) in pairs {
                    if u < v {
                        psi[pair_index(u, v, *n)] = 1.0;
                    } else {
                        psi[pair_index(v, u, *n)] = -1.0;
                    }
                }
            }
            _ => unreachable!("membership check admitted a mismatched payload"),
        }
        Ok(psi)
    }

    /// Complete duplicate-free listing of Y in canonical (lexicographic) order.
    /// Refuses with the exact count when |Y| exceeds `limit`.
    pub fn enumerate_small(&self, limit: u64) -> Result<Vec<Structure>> {
        let count = self.cardinality()?;
        if count.to_u64().map_or(true, |c| c > limit) {
            return Err(Error::TooLarge { count, limit });
        }
        let mut out = Vec::with_capacity(count.to_usize().unwrap());
        match &self.family() {
            Family::Multiclass { d } | Family::Ordinal { d } => {
                out.extend((0..*d).map(Structure::Label));
            }
            Family::PosetRegression { poset } => {
                out.extend((0..poset.len()).map(Structure::Label));
            }
            Family::Hierarchy { tree } => {
                out.extend((0..tree.len()).map(Structure::Label));
            }
            Family::Multilabel { d } => {
                for mask in 0u64..(1 << *d) {
                    out.push(mask_subset(mask, *d));
                }
            }
            Family::EllSubsets { d, ell } => {
                for mask in 0u64..(1 << *d) {
                    if mask.count_ones() as usize == *ell {
                        out.push(mask_subset(mask, *d));
                    }
                }
            }
            Family::Cliques { n } => {
                for mask in 0u64..(1 << *n) {
                    out.push(mask_subset(mask, *n));
                }
            }
            Family::Subtrees {
                tree,
                include_empty,
            } => {
                for mask in 0u64..(1 << tree.len()) {
                    if mask == 0 && !include_empty {
                        continue;
                    }
                    let bits: Vec<bool> = (0..tree.len()).map(|i| mask >> i & 1 == 1).collect();
                    if tree.is_rooted_subtree(&bits) {
                        out.push(Structure::Subset(bits));
                    }
                }
            }
            Family::Permutations { d } => {
                for perm in (0..*d).permutations(*d) {
                    out.push(Structure::Ranking(perm));
                }
            }
            Family::DirectedCycles { n } => {
                enumerate_cycles(*n, false, &mut out);
            }
            Family::UndirectedCycles { n } => {
                enumerate_cycles(*n, true, &mut out);
            }
            Family::PartialTournaments { n } => {
                let eta = n * (n - 1) / 2;
                let mut state = vec![0u8; eta];
                loop {
                    let mut pairs = Vec::new();
                    for (idx, &s) in state.iter().enumerate() {
                        let (u, v) = crate::counting::space::pair_at(idx, *n);
                        match s {
                            1 => pairs.push((u, v)),
                            2 => pairs.push((v, u)),
                            _ => {}
                        }
                    }
                    out.push(Structure::tournament(pairs));
                    // increment base-3 counter, least-significant pair first
                    let mut i = 0;
                    loop {
                        if i == eta {
                            return Ok(out);
                        }
                        state[i] += 1;
                        if state[i] < 3 {
                            break;
                        }
                        state[i] = 0;
                        i += 1;
                    }
                }
            }
        }
        Ok(out)
    }
}

impl StructureSpace {
    /// Parse the dataset label syntax for this family (inverse of
    /// [`Structure::format_label`]); validates membership.
    pub fn parse_label(&self, text: &str) -> Result<Structure> {
        let text = text.trim();
        let bad = |why: &str| Error::Parse(format!("label `{text}`: {why}"));
        let y = match &self.family() {
            Family::Multiclass { .. }
            | Family::Ordinal { .. }
            | Family::PosetRegression { .. }
            | Family::Hierarchy { .. } => {
                Structure::Label(text.parse().map_err(|_| bad("expected a label id"))?)
            }
            Family::Multilabel { d } | Family::EllSubsets { d, .. } => {
                parse_subset(text, *d).map_err(|_| bad("expected comma-separated ids or `-`"))?
            }
            Family::Cliques { n } => {
                parse_subset(text, *n).map_err(|_| bad("expected comma-separated ids or `-`"))?
            }
            Family::Subtrees { tree, .. } => parse_subset(text, tree.len())
                .map_err(|_| bad("expected comma-separated ids or `-`"))?,
            Family::Permutations { .. } => {
                let order: Vec<usize> = text
                    .split('>')
                    .map(|t| t.trim().parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("expected a ranking like 2>0>1"))?;
                Structure::Ranking(order)
            }
            Family::DirectedCycles { .. } | Family::UndirectedCycles { .. } => {
                let pairs =
                    parse_pairs(text, ',').map_err(|_| bad("expected pairs u,v;v,w;..."))?;
                let seq = crate::counting::structure::cycle_from_pairs(&pairs)?;
                if matches!(self.family(), Family::DirectedCycles { .. }) {
                    Structure::dicycle(seq)
                } else {
                    Structure::cycle(seq)
                }
            }
            Family::PartialTournaments { .. } => {
                if text == "-" {
                    Structure::Tournament(Vec::new())
                } else {
                    Structure::tournament(
                        parse_pairs(text, '>').map_err(|_| bad("expected pairs u>v;w>x;..."))?,
                    )
                }
            }
        };
        self.check_membership(&y)?;
        Ok(y)
    }
}

fn parse_subset(text: &str, d: usize) -> std::result::Result<Structure, ()> {
    if text == "-" {
        return Ok(Structure::empty_subset(d));
    }
    let mut bits = vec![false; d];
    for part in text.split(',') {
        let i: usize = part.trim().parse().map_err(|_| ())?;
        if i >= d {
            return Err(());
        }
        bits[i] = true;
    }
    Ok(Structure::Subset(bits))
}

fn parse_pairs(text: &str, sep: char) -> std::result::Result<Vec<(usize, usize)>, ()> {
    text.split(';')
        .map(|p| {
            let (a, b) = p.trim().split_once(sep).ok_or(())?;
            Ok((
                a.trim().parse().map_err(|_| ())?,
                b.trim().parse().map_err(|_| ())?,
            ))
        })
        .collect()
}

fn in_range(l: usize, d: usize) -> Result<()> {
    if l < d {
        Ok(())
    } else {
        Err(Error::Membership(format!("label {l} out of range 0..{d}")))
    }
}

fn bits_len(bits: &[bool], d: usize) -> Result<()> {
    if bits.len() == d {
        Ok(())
    } else {
        Err(Error::Membership(format!(
            "bit vector has length {}, expected {d}",
            bits.len()
        )))
    }
}

fn payload_name(y: &Structure) -> &'static str {
    match y {
        Structure::Subset(_) => "subset",
        Structure::Label(_) => "label",
        Structure::Ranking(_) => "ranking",
        Structure::DirectedCycle(_) => "directed cycle",
        Structure::UndirectedCycle(_) => "undirected cycle",
        Structure::Tournament(_) => "tournament",
    }
}

fn mask_subset(mask: u64, d: usize) -> Structure {
    Structure::Subset((0..d).map(|i| mask >> i & 1 == 1).collect())
}

/// All simple cycles on >= 3 of the n labelled vertices, canonical order:
/// by support mask, then lexicographic on the canonical vertex sequence.
fn enumerate_cycles(n: usize, undirected: bool, out: &mut Vec<Structure>) {
    for mask in 0u64..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if members.len() < 3 {
            continue;
        }
        let first = members[0];
        let rest = &members[1..];
        for tail in rest.iter().copied().permutations(rest.len()) {
            if undirected && tail[0] > tail[tail.len() - 1] {
                continue; // keep one direction per undirected cycle
            }
            let mut seq = Vec::with_capacity(members.len());
            seq.push(first);
            seq.extend(tail);
            out.push(if undirected {
                Structure::UndirectedCycle(seq)
            } else {
                Structure::DirectedCycle(seq)
            });
        }
    }
}
