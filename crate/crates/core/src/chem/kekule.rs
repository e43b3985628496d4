//! Kekulé assignment for aromatic systems: a perfect matching over the atoms
//! that still need a pi bond, restricted to aromatic edges.

/// `need[v]` marks atoms that must receive exactly one double bond;
/// `edges` are the aromatic bonds. Returns one flag per edge (true = double)
/// or `None` when no assignment exists.
pub(crate) fn assign_double_bonds(n: usize, need: &[bool], edges: &[(usize, usize)]) -> Option<Vec<bool>> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        if need[a] && need[b] {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
    }

    // Odd-sized components can never be perfectly matched.
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if !need[s] || label[s] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut stack = vec![s];
        label[s] = next;
        while let Some(v) = stack.pop() {
            size += 1;
            for &(nb, _) in &adj[v] {
                if label[nb] == usize::MAX {
                    label[nb] = next;
                    stack.push(nb);
                }
            }
        }
        if size % 2 == 1 {
            return None;
        }
        next += 1;
    }

    let mut mate = vec![usize::MAX; n];
    let mut double = vec![false; edges.len()];
    if search(need, &adj, &mut mate, &mut double) {
        Some(double)
    } else {
        None
    }
}

fn search(need: &[bool], adj: &[Vec<(usize, usize)>], mate: &mut [usize], double: &mut [bool]) -> bool {
    // Most constrained unmatched atom first.
    let mut pick = None;
    let mut best = usize::MAX;
    for v in 0..need.len() {
        if !need[v] || mate[v] != usize::MAX {
            continue;
        }
        let options = adj[v].iter().filter(|&&(nb, _)| mate[nb] == usize::MAX).count();
        if options < best {
            best = options;
            pick = Some(v);
            if options <= 1 {
                break;
            }
        }
    }
    let Some(v) = pick else {
        return true;
    };
    if best == 0 {
        return false;
    }
    for &(nb, e) in &adj[v] {
        if mate[nb] != usize::MAX {
            continue;
        }
        mate[v] = nb;
        mate[nb] = v;
        double[e] = true;
        if search(need, adj, mate, double) {
            return true;
        }
        mate[v] = usize::MAX;
        mate[nb] = usize::MAX;
        double[e] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benzene_ring_matches() {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let d = assign_double_bonds(6, &[true; 6], &edges).unwrap();
        assert_eq!(d.iter().filter(|&&x| x).count(), 3);
    }

    #[test]
    fn five_ring_of_needy_atoms_fails() {
        let edges: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        assert!(assign_double_bonds(5, &[true; 5], &edges).is_none());
    }
}
