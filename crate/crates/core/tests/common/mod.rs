//! Test-only oracles, independent of the library's scheduling code.
#![allow(dead_code)]

use rand::Rng;
use rpsa::sched::{Pointers, ScKey, VoqSnapshot};
use rpsa::SchedulerKind;

/// A random arbitration scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub n: usize,
    pub lens: Vec<usize>,
    pub last: Vec<u64>,
    pub pointers: Pointers,
}

impl Scenario {
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        // Skew towards empty VOQs so sparse request graphs show up too.
        let lens = (0..n * n)
            .map(|_| {
                if rng.random_bool(0.4) {
                    0
                } else {
                    rng.random_range(0..=10)
                }
            })
            .collect();
        let last = (0..n * n).map(|_| rng.random_range(0..4)).collect();
        let pointers = Pointers {
            rri: (0..n).map(|_| rng.random_range(0..n)).collect(),
            rro: (0..n).map(|_| rng.random_range(0..n)).collect(),
        };
        Scenario {
            n,
            lens,
            last,
            pointers,
        }
    }

    pub fn view(&self) -> VoqSnapshot {
        VoqSnapshot::new(self.n, self.lens.clone(), self.last.clone())
    }

    pub fn requests(&self, i: usize, j: usize) -> bool {
        self.lens[i * self.n + j] > 0
    }
}

/// Maximum bipartite matching size by augmenting paths (Kuhn's algorithm).
pub fn maximum_matching_size(n: usize, edge: impl Fn(usize, usize) -> bool) -> usize {
    fn augment(
        u: usize,
        n: usize,
        edge: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for v in 0..n {
            if edge(u, v) && !seen[v] {
                seen[v] = true;
                if owner[v].is_none() || augment(owner[v].unwrap(), n, edge, seen, owner) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; n];
    let mut size = 0;
    for u in 0..n {
        let mut seen = vec![false; n];
        if augment(u, n, &edge, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

fn closest_from(candidates: &[bool], start: usize) -> Option<usize> {
    let n = candidates.len();
    (0..n).map(|k| (start + k) % n).find(|&x| candidates[x])
}

fn sc_less(a: ScKey, b: ScKey) -> bool {
    a.len > b.len || (a.len == b.len && a.last_scheduled_slot < b.last_scheduled_slot)
}

/// Straightforward phase-by-phase reference of iSLIP / FIRM / BSC-FIRM.
/// Returns the matched pairs sorted by input.
pub fn reference_schedule<R: Rng>(
    kind: SchedulerKind,
    sc: &Scenario,
    ptr: &mut Pointers,
    max_iterations: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let n = sc.n;
    let key = |i: usize, j: usize| ScKey {
        len: sc.lens[i * n + j],
        last_scheduled_slot: sc.last[i * n + j],
    };
    if kind == SchedulerKind::BscFirm {
        for i in 0..n {
            let outs: Vec<usize> = (0..n).filter(|&j| sc.requests(i, j)).collect();
            if outs.is_empty() {
                continue;
            }
            let best = outs.iter().copied().fold(outs[0], |b, j| {
                if sc_less(key(i, j), key(i, b)) {
                    j
                } else {
                    b
                }
            });
            let ties: Vec<usize> = outs
                .into_iter()
                .filter(|&j| key(i, j) == key(i, best))
                .collect();
            ptr.rri[i] = if ties.len() == 1 {
                ties[0]
            } else {
                ties[rng.random_range(0..ties.len())]
            };
        }
    }

    let mut in_partner: Vec<Option<usize>> = vec![None; n];
    let mut out_partner: Vec<Option<usize>> = vec![None; n];
    for it in 0..max_iterations {
        // Request
        let mut req = vec![vec![false; n]; n]; // req[j][i]
        for i in 0..n {
            for j in 0..n {
                if in_partner[i].is_none() && out_partner[j].is_none() && sc.requests(i, j) {
                    req[j][i] = true;
                }
            }
        }
        // Grant
        let mut grant_of_output: Vec<Option<usize>> = vec![None; n];
        let mut grants = vec![vec![false; n]; n]; // grants[i][j]
        for j in 0..n {
            if let Some(i) = closest_from(&req[j], ptr.rro[j]) {
                grant_of_output[j] = Some(i);
                grants[i][j] = true;
            }
        }
        // Accept
        let mut new = 0;
        let mut accepted = vec![false; n];
        for i in 0..n {
            if let Some(j) = closest_from(&grants[i], ptr.rri[i]) {
                in_partner[i] = Some(j);
                out_partner[j] = Some(i);
                accepted[j] = true;
                new += 1;
                if it == 0 {
                    ptr.rri[i] = (j + 1) % n;
                    ptr.rro[j] = (i + 1) % n;
                }
            }
        }
        if it == 0 && kind != SchedulerKind::Islip {
            for j in 0..n {
                if let Some(i) = grant_of_output[j] {
                    if !accepted[j] {
                        ptr.rro[j] = i;
                    }
                }
            }
        }
        if new == 0 {
            break;
        }
    }
    (0..n)
        .filter_map(|i| in_partner[i].map(|j| (i, j)))
        .collect()
}

pub fn sorted_pairs(m: &rpsa::Matching) -> Vec<(usize, usize)> {
    let mut v: Vec<_> = m.pairs().iter().map(|&(i, j)| (i.0, j.0)).collect();
    v.sort();
    v
}

/// Validity: no repeated input or output, every pair over a non-empty VOQ.
pub fn check_valid(sc: &Scenario, pairs: &[(usize, usize)]) -> Result<(), String> {
    let mut ins = vec![false; sc.n];
    let mut outs = vec![false; sc.n];
    for &(i, j) in pairs {
        if ins[i] || outs[j] {
            return Err(format!("port reused in {pairs:?}"));
        }
        ins[i] = true;
        outs[j] = true;
        if !sc.requests(i, j) {
            return Err(format!("pair ({i},{j}) over empty VOQ"));
        }
    }
    Ok(())
}

/// Maximality: no request edge joins an unmatched input to an unmatched output.
pub fn check_maximal(sc: &Scenario, pairs: &[(usize, usize)]) -> Result<(), String> {
    let mut ins = vec![false; sc.n];
    let mut outs = vec![false; sc.n];
    for &(i, j) in pairs {
        ins[i] = true;
        outs[j] = true;
    }
    for i in 0..sc.n {
        for j in 0..sc.n {
            if !ins[i] && !outs[j] && sc.requests(i, j) {
                return Err(format!("({i},{j}) could still be added to {pairs:?}"));
            }
        }
    }
    Ok(())
}

pub mod stats;
