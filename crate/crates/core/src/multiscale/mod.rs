//! Greedy covers, nested partitions and tree transport.
//!
//! A [`PartitionTree`] holds partitions of a finite point set at scales
//! `4^-j s`, each refining the previous one. Measures on the leaves can be
//! moved along the tree, which gives an explicit coupling
//! ([`tree_transport_plan`]) and a closed-form bound on its cost
//! ([`tree_transport_bound`]) in terms of total variation at each level.

mod cover;
mod tree;
mod tree_transport;

pub use cover::{brute_force_cover_count, greedy_cover, GreedyPermutation};
pub use tree::{scale_radius, Level, PartitionTree};
pub use tree_transport::{
    coarsen, snap_to_leaves, surplus_measures, total_variation, tree_transport_bound, tree_transport_plan, TreeBound,
};

/// Shorthand for [`PartitionTree::build`].
pub fn build_partition_tree(
    space: std::sync::Arc<crate::measures::MetricSpace>,
    subset: &[usize],
    s: f64,
    u: i32,
    v: i32,
) -> crate::Result<PartitionTree> {
    PartitionTree::build(space, subset, s, u, v)
}
