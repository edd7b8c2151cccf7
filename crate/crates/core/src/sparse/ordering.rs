//! Fill-reducing column ordering by graph nested dissection.
//!
//! Separators are BFS level sets rooted at a pseudo-peripheral node, trimmed to
//! the nodes that actually touch the far side.

/// Returns a permutation `order` where `order[k]` is the original index
/// eliminated at step `k`.
pub fn nested_dissection(adj: &[Vec<usize>], leaf: usize) -> Vec<usize> {
    let n = adj.len();
    let mut nd = Dissector {
        adj,
        label: vec![0; n],
        next_label: 1,
        stamp: vec![0; n],
        next_stamp: 1,
        leaf: leaf.max(1),
        out: Vec::with_capacity(n),
    };
    let all: Vec<usize> = (0..n).collect();
    nd.dissect(all, 0);
    debug_assert_eq!(nd.out.len(), n);
    nd.out
}

struct Dissector<'a> {
    adj: &'a [Vec<usize>],
    label: Vec<u32>,
    next_label: u32,
    stamp: Vec<u32>,
    next_stamp: u32,
    leaf: usize,
    out: Vec<usize>,
}

impl Dissector<'_> {
    fn relabel(&mut self, nodes: &[usize]) -> u32 {
        let l = self.next_label;
        self.next_label += 1;
        for &v in nodes {
            self.label[v] = l;
        }
        l
    }

    /// Level sets of a BFS from `root` restricted to nodes carrying `label`.
    fn bfs(&mut self, root: usize, label: u32) -> Vec<Vec<usize>> {
        let s = self.next_stamp;
        self.next_stamp += 1;
        self.stamp[root] = s;
        let mut levels = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in &self.adj[v] {
                    if self.label[w] == label && self.stamp[w] != s {
                        self.stamp[w] = s;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    }

    fn degree_in(&self, v: usize, label: u32) -> usize {
        self.adj[v].iter().filter(|&&w| self.label[w] == label).count()
    }

    fn dissect(&mut self, nodes: Vec<usize>, label: u32) {
        if nodes.len() <= self.leaf {
            self.out.extend(nodes);
            return;
        }
        let mut levels = self.bfs(nodes[0], label);
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            // Disconnected: handle each component on its own.
            let s = self.next_stamp - 1;
            let (first, rest): (Vec<usize>, Vec<usize>) =
                nodes.into_iter().partition(|&v| self.stamp[v] == s);
            let l1 = self.relabel(&first);
            let l2 = self.relabel(&rest);
            self.dissect(first, l1);
            self.dissect(rest, l2);
            return;
        }

        // Pseudo-peripheral root: restart from a min-degree node of the last level.
        for _ in 0..6 {
            let far = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| self.degree_in(v, label))
                .unwrap();
            let cand = self.bfs(far, label);
            if cand.len() > levels.len() {
                levels = cand;
            } else {
                break;
            }
        }
        if levels.len() < 3 {
            self.out.extend(nodes);
            return;
        }

        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (m, lv) in levels.iter().enumerate() {
            acc += lv.len();
            if acc >= half {
                mid = m;
                break;
            }
        }
        let mid = mid.clamp(1, levels.len() - 2);

        let mut near: Vec<usize> = levels[..mid].concat();
        let far: Vec<usize> = levels[mid + 1..].concat();
        let far_label = self.relabel(&far);
        let mut sep = Vec::with_capacity(levels[mid].len());
        for &v in &levels[mid] {
            if self.adj[v].iter().any(|&w| self.label[w] == far_label) {
                sep.push(v);
            } else {
                near.push(v);
            }
        }
        let near_label = self.relabel(&near);
        self.relabel(&sep);
        self.dissect(near, near_label);
        self.dissect(far, far_label);
        self.out.extend(sep);
    }
}
