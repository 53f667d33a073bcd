//! Maximum-cardinality matching on general graphs via blossom contraction.
//!
//! Augmenting paths are located by BFS over an alternating tree; odd cycles
//! are contracted on the fly by remapping vertices to a common blossom base.
//! `augment_from` grows an existing matching by one edge when an augmenting
//! path from the given free vertex exists, which lets callers maintain a
//! matching incrementally across edge deletions.

use std::collections::VecDeque;

/// Least common ancestor of `a` and `b` in the alternating tree, in terms of
/// blossom bases.
fn tree_lca(
    a: usize,
    b: usize,
    base: &[usize],
    parent: &[Option<usize>],
    mate: &[Option<usize>],
) -> usize {
    let mut seen = vec![false; base.len()];
    let mut v = a;
    loop {
        v = base[v];
        seen[v] = true;
        match mate[v] {
            None => break,
            Some(m) => match parent[m] {
                None => break,
                Some(pm) => v = pm,
            },
        }
    }
    let mut v = b;
    loop {
        v = base[v];
        if seen[v] {
            return v;
        }
        v = parent[mate[v].expect("tree vertices below the root are matched")]
            .expect("tree vertices below the root have parents");
    }
}

/// Marks the blossom path from `v` down to base `b`, rethreading parent
/// pointers through `child` so both cycle arcs become usable.
fn mark_path(
    v: usize,
    b: usize,
    mut child: usize,
    base: &mut [usize],
    parent: &mut [Option<usize>],
    mate: &[Option<usize>],
    in_blossom: &mut [bool],
) {
    let mut v = v;
    while base[v] != b {
        let m = mate[v].expect("blossom interior vertices are matched");
        in_blossom[base[v]] = true;
        in_blossom[base[m]] = true;
        parent[v] = Some(child);
        child = m;
        v = parent[m].expect("blossom interior vertices have parents");
    }
}

/// Tries to enlarge `mate` with an augmenting path rooted at the free vertex
/// `root`. Returns true (and flips the path into the matching) on success.
pub fn augment_from(adj: &[Vec<usize>], mate: &mut [Option<usize>], root: usize) -> bool {
    let n = adj.len();
    debug_assert!(mate[root].is_none());
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut base: Vec<usize> = (0..n).collect();
    let mut in_queue = vec![false; n];
    let mut queue = VecDeque::new();
    queue.push_back(root);
    in_queue[root] = true;

    while let Some(v) = queue.pop_front() {
        for &to in &adj[v] {
            if base[v] == base[to] || mate[v] == Some(to) {
                continue;
            }
            let to_is_even =
                to == root || mate[to].is_some_and(|m| parent[m].is_some());
            if to_is_even {
                // Even-even edge closes an odd cycle: contract the blossom.
                let b = tree_lca(v, to, &base, &parent, mate);
                let mut in_blossom = vec![false; n];
                mark_path(v, b, to, &mut base, &mut parent, mate, &mut in_blossom);
                mark_path(to, b, v, &mut base, &mut parent, mate, &mut in_blossom);
                for i in 0..n {
                    if in_blossom[base[i]] {
                        base[i] = b;
                        if !in_queue[i] {
                            in_queue[i] = true;
                            queue.push_back(i);
                        }
                    }
                }
            } else if parent[to].is_none() {
                parent[to] = Some(v);
                match mate[to] {
                    None => {
                        // Free vertex reached: flip the alternating path.
                        let mut cur = Some(to);
                        while let Some(u) = cur {
                            let pu = parent[u].expect("path vertices have parents");
                            let next = mate[pu];
                            mate[u] = Some(pu);
                            mate[pu] = Some(u);
                            cur = next;
                        }
                        return true;
                    }
                    Some(m) => {
                        if !in_queue[m] {
                            in_queue[m] = true;
                            queue.push_back(m);
                        }
                    }
                }
            }
        }
    }
    false
}

/// Maximum-cardinality matching of the whole graph, built by augmenting from
/// every free vertex once.
pub fn maximum_matching(adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let n = adj.len();
    let mut mate: Vec<Option<usize>> = vec![None; n];
    // Greedy seed cuts the number of augmentation phases.
    for v in 0..n {
        if mate[v].is_none() {
            if let Some(&u) = adj[v].iter().find(|&&u| mate[u].is_none() && u != v) {
                mate[v] = Some(u);
                mate[u] = Some(v);
            }
        }
    }
    for v in 0..n {
        if mate[v].is_none() {
            augment_from(adj, &mut mate, v);
        }
    }
    mate
}

/// Number of matched edges.
pub fn matching_size(mate: &[Option<usize>]) -> usize {
    mate.iter().flatten().count() / 2
}
