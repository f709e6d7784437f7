//! Small directed-graph utilities shared by the symbolic estimators.

/// Strongly connected components (Kosaraju), each sorted, listed by smallest member.
pub fn sccs(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut stack = vec![(s, 0usize)];
        seen[s] = true;
        while let Some((v, i)) = stack.pop() {
            if i < adj[v].len() {
                stack.push((v, i + 1));
                let u = adj[v][i];
                if !seen[u] {
                    seen[u] = true;
                    stack.push((u, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (v, outs) in adj.iter().enumerate() {
        for &u in outs {
            radj[u].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &u in &radj[v] {
                if comp[u] == usize::MAX {
                    comp[u] = id;
                    members.push(u);
                    stack.push(u);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out.sort_by_key(|c| c[0]);
    out
}

/// Whether the component carries a cycle (more than one vertex or a self-loop).
pub fn is_cyclic(adj: &[Vec<usize>], comp: &[usize]) -> bool {
    comp.len() > 1 || adj[comp[0]].contains(&comp[0])
}

/// Components with no edge leaving them.
pub fn closed_classes(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    sccs(adj)
        .into_iter()
        .filter(|c| {
            c.iter()
                .all(|&v| adj[v].iter().all(|u| c.binary_search(u).is_ok()))
        })
        .collect()
}

/// Adjacency lists of a 0/1 matrix.
pub fn adjacency(matrix: &[Vec<u8>]) -> Vec<Vec<usize>> {
    matrix
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, &v)| v == 1)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_of_two_cycles_and_a_tail() {
        let adj = vec![vec![1], vec![0], vec![0], vec![3]];
        assert_eq!(sccs(&adj), vec![vec![0, 1], vec![2], vec![3]]);
        assert_eq!(closed_classes(&adj), vec![vec![0, 1], vec![3]]);
        assert!(!is_cyclic(&adj, &[2]));
        assert!(is_cyclic(&adj, &[3]));
    }
}
