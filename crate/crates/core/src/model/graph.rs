//! Communicating classes and periods of the graph x → y iff m_xy > 0.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

/// Strongly connected components of a sparse adjacency, with periods.
#[derive(Debug, Clone)]
pub struct ClassStructure {
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
    periods: Vec<Option<usize>>,
}

impl ClassStructure {
    /// `rows[x]` lists the successors of `x` (entries with zero weight are
    /// ignored).
    pub fn from_rows(rows: &[Vec<(usize, f64)>]) -> Self {
        let n = rows.len();
        let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(n, rows.iter().map(Vec::len).sum());
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for (x, row) in rows.iter().enumerate() {
            for &(y, w) in row {
                if w > 0.0 {
                    graph.add_edge(nodes[x], nodes[y], ());
                }
            }
        }
        let mut classes: Vec<Vec<usize>> = tarjan_scc(&graph)
            .into_iter()
            .map(|comp| {
                let mut c: Vec<usize> = comp.into_iter().map(|v| v.index()).collect();
                c.sort_unstable();
                c
            })
            .collect();
        classes.sort_by_key(|c| c[0]);
        let mut class_of = vec![0; n];
        for (i, c) in classes.iter().enumerate() {
            for &v in c {
                class_of[v] = i;
            }
        }
        let periods = classes.iter().enumerate().map(|(i, c)| class_period(rows, &class_of, i, c)).collect();
        Self { class_of, classes, periods }
    }

    pub fn class_of(&self, x: usize) -> usize {
        self.class_of[x]
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.classes[class]
    }

    /// Period of the class of `x`; `None` when `x` lies on no cycle.
    pub fn period_of(&self, x: usize) -> Option<usize> {
        self.periods[self.class_of[x]]
    }

    pub fn is_irreducible(&self) -> bool {
        self.classes.len() == 1 && self.periods[0].is_some()
    }

    pub fn same_class(&self, x: usize, y: usize) -> bool {
        self.class_of[x] == self.class_of[y]
    }
}

/// Period via BFS levels: gcd of level(u) + 1 − level(v) over edges inside
/// the class.
fn class_period(rows: &[Vec<(usize, f64)>], class_of: &[usize], id: usize, members: &[usize]) -> Option<usize> {
    let root = members[0];
    let mut level = std::collections::HashMap::with_capacity(members.len());
    level.insert(root, 0i64);
    let mut queue = std::collections::VecDeque::from([root]);
    let mut g: i64 = 0;
    while let Some(u) = queue.pop_front() {
        let lu = level[&u];
        for &(v, w) in &rows[u] {
            if w <= 0.0 || class_of[v] != id {
                continue;
            }
            match level.get(&v) {
                Some(&lv) => g = gcd(g, (lu + 1 - lv).abs()),
                None => {
                    level.insert(v, lu + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    (g > 0).then_some(g as usize)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a } else { gcd(b, a % b) }
}
