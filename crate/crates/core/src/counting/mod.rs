//! Combinatorial structure spaces, their feature embeddings and the exact
//! aggregate statistics (|Y|, Psi, C) computed by closed forms, plus
//! brute-force enumeration oracles and kernels on partial orders.
//!
//! All operations are pure functions of their inputs and safe to call from
//! any number of threads.

mod ops;
pub mod oracle;
mod poset;
mod space;
mod structure;
mod tree;

pub use poset::{poset_kernel, Poset, PosetKernelKind};
pub use space::{pair_at, pair_index, EmbeddingStats, Family, StructureSpace};
pub use structure::{cycle_from_pairs, Structure};
pub use tree::{count_subtrees, count_subtrees_containing, RootedTree};

use crate::error::{Error, Result};

/// Parse a space spec like `multilabel:d=3` or `subtrees:tree=taxonomy.txt`.
///
/// `read_file` resolves file-valued parameters (trees, poset edge lists) so
/// callers control where paths are rooted.
pub fn parse_spec(
    spec: &str,
    read_file: &dyn Fn(&str) -> Result<String>,
) -> Result<StructureSpace> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r.trim()),
        None => (spec.trim(), ""),
    };
    let mut params = std::collections::BTreeMap::new();
    for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, found `{kv}`")))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get_usize = |key: &str| -> Result<usize> {
        params
            .get(key)
            .ok_or_else(|| Error::Parse(format!("space `{name}` needs parameter `{key}`")))?
            .parse()
            .map_err(|_| Error::Parse(format!("parameter `{key}` must be an integer")))
    };
    let get_tree = |key: &str| -> Result<RootedTree> {
        let path = params
            .get(key)
            .ok_or_else(|| Error::Parse(format!("space `{name}` needs parameter `{key}`")))?;
        RootedTree::parse(&read_file(path)?)
    };
    let family = match name {
        "multiclass" => Family::Multiclass { d: get_usize("d")? },
        "multilabel" => Family::Multilabel { d: get_usize("d")? },
        "ell_subsets" => Family::EllSubsets {
            d: get_usize("d")?,
            ell: get_usize("ell")?,
        },
        "ordinal" => Family::Ordinal { d: get_usize("d")? },
        "poset_regression" => {
            let d = get_usize("d")?;
            let path = params
                .get("edges")
                .ok_or_else(|| Error::Parse("poset_regression needs `edges=FILE`".into()))?;
            Family::PosetRegression {
                poset: Poset::parse(d, &read_file(path)?)?,
            }
        }
        "hierarchy" => Family::Hierarchy {
            tree: get_tree("tree")?,
        },
        "permutations" => Family::Permutations { d: get_usize("d")? },
        "partial_tournaments" => Family::PartialTournaments { n: get_usize("n")? },
        "cliques" => Family::Cliques { n: get_usize("n")? },
        "undirected_cycles" => Family::UndirectedCycles { n: get_usize("n")? },
        "directed_cycles" => Family::DirectedCycles { n: get_usize("n")? },
        "subtrees" => {
            let include_empty = match params.get("include_empty").map(String::as_str) {
                None | Some("true") => true,
                Some("false") => false,
                Some(other) => {
                    return Err(Error::Parse(format!(
                        "include_empty must be true or false, found `{other}`"
                    )))
                }
            };
            Family::Subtrees {
                tree: get_tree("tree")?,
                include_empty,
            }
        }
        other => return Err(Error::Parse(format!("unknown structure family `{other}`"))),
    };
    StructureSpace::new(family)
}
