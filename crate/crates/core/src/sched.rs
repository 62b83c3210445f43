//! Iterative request–grant–accept schedulers: iSLIP, FIRM and BSC-FIRM.
//!
//! All three share the same three-phase iteration over a bipartite request
//! graph (input `i` requests output `j` iff VOQ(i, j) is non-empty). They
//! differ only in how the round-robin pointers move:
//!
//! * **iSLIP** advances the grant pointer `rro[j]` and the accept pointer
//!   `rri[i]` one past the partner, and only when a grant is accepted in the
//!   first iteration.
//! * **FIRM** does the same, and in addition an output whose first-iteration
//!   grant was refused keeps pointing at the refused input, so that input is
//!   served first next time.
//! * **BSC-FIRM** is FIRM with one extra step: before the first iteration each
//!   input's `rri` jumps to the output of its minimum-service-capacity VOQ
//!   (longest queue, then oldest last service), with uniform random
//!   tie-breaking.
//!
//! Request sets are held as `u64` bitmasks, which bounds the fabric at 64 ports.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{PortId, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchedulerKind {
    #[serde(rename = "islip")]
    Islip,
    #[serde(rename = "firm")]
    Firm,
    #[serde(rename = "bsc-firm")]
    BscFirm,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [
        SchedulerKind::Islip,
        SchedulerKind::Firm,
        SchedulerKind::BscFirm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Islip => "islip",
            SchedulerKind::Firm => "firm",
            SchedulerKind::BscFirm => "bsc-firm",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "islip" => Ok(SchedulerKind::Islip),
            "firm" => Ok(SchedulerKind::Firm),
            "bsc-firm" => Ok(SchedulerKind::BscFirm),
            other => Err(format!(
                "unknown scheduler `{other}` (expected islip, firm or bsc-firm)"
            )),
        }
    }
}

/// Round-robin arbitration pointers: `rri` per input (accept), `rro` per output (grant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pointers {
    pub rri: Vec<usize>,
    pub rro: Vec<usize>,
}

impl Pointers {
    pub fn new(n: usize) -> Self {
        Pointers {
            rri: vec![0; n],
            rro: vec![0; n],
        }
    }
}

/// One slot's crossbar configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    pairs: Vec<(PortId, PortId)>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from explicit pairs, rejecting any repeated input or output.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (PortId, PortId)>) -> Option<Self> {
        let mut m = Matching::new();
        let (mut ins, mut outs) = (0u128, 0u128);
        for (i, j) in pairs {
            if i.0 >= 128 || j.0 >= 128 || ins & (1 << i.0) != 0 || outs & (1 << j.0) != 0 {
                return None;
            }
            ins |= 1 << i.0;
            outs |= 1 << j.0;
            m.pairs.push((i, j));
        }
        Some(m)
    }

    #[inline]
    pub fn pairs(&self) -> &[(PortId, PortId)] {
        &self.pairs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn output_of(&self, input: PortId) -> Option<PortId> {
        self.pairs.iter().find(|p| p.0 == input).map(|p| p.1)
    }

    pub fn input_of(&self, output: PortId) -> Option<PortId> {
        self.pairs.iter().find(|p| p.1 == output).map(|p| p.0)
    }
}

/// Service-capacity key of one VOQ. Smaller SC means higher priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScKey {
    pub len: usize,
    pub last_scheduled_slot: Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScOrder {
    ALess,
    BLess,
    Equal,
}

/// Compare service capacities: a longer queue has smaller SC; at equal
/// length, the VOQ served longer ago has smaller SC.
pub fn sc_compare(a: ScKey, b: ScKey) -> ScOrder {
    match b
        .len
        .cmp(&a.len)
        .then(a.last_scheduled_slot.cmp(&b.last_scheduled_slot))
    {
        Ordering::Less => ScOrder::ALess,
        Ordering::Greater => ScOrder::BLess,
        Ordering::Equal => ScOrder::Equal,
    }
}

/// Read access a scheduler needs to the VOQ fabric.
pub trait VoqView {
    fn ports(&self) -> usize;
    /// Bitmask of outputs `j` with VOQ(input, j) non-empty.
    fn requests(&self, input: usize) -> u64;
    fn sc_key(&self, input: usize, output: usize) -> ScKey;
}

/// Plain snapshot of VOQ lengths and last-service slots, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoqSnapshot {
    n: usize,
    lens: Vec<usize>,
    last: Vec<Slot>,
}

impl VoqSnapshot {
    pub fn new(n: usize, lens: Vec<usize>, last: Vec<Slot>) -> Self {
        assert!(n <= 64, "at most 64 ports");
        assert_eq!(lens.len(), n * n);
        assert_eq!(last.len(), n * n);
        VoqSnapshot { n, lens, last }
    }

    pub fn from_lens(n: usize, lens: Vec<usize>) -> Self {
        Self::new(n, lens, vec![0; n * n])
    }

    #[inline]
    pub fn len_of(&self, input: usize, output: usize) -> usize {
        self.lens[input * self.n + output]
    }
}

impl VoqView for VoqSnapshot {
    fn ports(&self) -> usize {
        self.n
    }

    fn requests(&self, input: usize) -> u64 {
        let row = &self.lens[input * self.n..(input + 1) * self.n];
        row.iter()
            .enumerate()
            .filter(|(_, &l)| l > 0)
            .fold(0, |m, (j, _)| m | 1 << j)
    }

    fn sc_key(&self, input: usize, output: usize) -> ScKey {
        ScKey {
            len: self.lens[input * self.n + output],
            last_scheduled_slot: self.last[input * self.n + output],
        }
    }
}

/// First set bit of `mask` at or after `start`, wrapping around below `start`.
#[inline]
fn round_robin_first(mask: u64, start: usize) -> Option<usize> {
    if mask == 0 {
        return None;
    }
    let upper = mask & (u64::MAX << start);
    let pick = if upper != 0 { upper } else { mask };
    Some(pick.trailing_zeros() as usize)
}

/// Output of the minimum-SC non-empty VOQ of `input`; ties drawn uniformly from `rng`.
fn min_sc_output<V: VoqView + ?Sized, R: Rng + ?Sized>(
    view: &V,
    input: usize,
    requests: u64,
    rng: &mut R,
) -> Option<usize> {
    let mut best: Option<ScKey> = None;
    let mut ties: u64 = 0;
    let mut bits = requests;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let key = view.sc_key(input, j);
        match best.map(|b| sc_compare(key, b)) {
            None | Some(ScOrder::ALess) => {
                best = Some(key);
                ties = 1 << j;
            }
            Some(ScOrder::Equal) => ties |= 1 << j,
            Some(ScOrder::BLess) => {}
        }
    }
    match ties.count_ones() {
        0 => None,
        1 => Some(ties.trailing_zeros() as usize),
        k => {
            let mut nth = rng.random_range(0..k);
            let mut bits = ties;
            loop {
                let j = bits.trailing_zeros() as usize;
                if nth == 0 {
                    return Some(j);
                }
                nth -= 1;
                bits &= bits - 1;
            }
        }
    }
}

/// Shared request–grant–accept loop.
fn iterate<V: VoqView + ?Sized, R: Rng + ?Sized>(
    kind: SchedulerKind,
    view: &V,
    ptr: &mut Pointers,
    max_iterations: usize,
    rng: &mut R,
) -> Matching {
    let n = view.ports();
    debug_assert!(n <= 64);
    debug_assert_eq!(ptr.rri.len(), n);
    debug_assert_eq!(ptr.rro.len(), n);
    let requests: Vec<u64> = (0..n).map(|i| view.requests(i)).collect();

    if kind == SchedulerKind::BscFirm {
        for (i, &req) in requests.iter().enumerate() {
            if let Some(j) = min_sc_output(view, i, req, rng) {
                ptr.rri[i] = j;
            }
        }
    }

    let mut matching = Matching::new();
    let mut in_matched: u64 = 0;
    let mut out_matched: u64 = 0;
    let mut column = vec![0u64; n];
    let mut granted_to = vec![usize::MAX; n];
    let mut grants = vec![0u64; n];

    for iteration in 0..max_iterations {
        // Request: column[j] = unmatched inputs requesting unmatched output j.
        column.iter_mut().for_each(|c| *c = 0);
        let mut any = false;
        for (i, &req) in requests.iter().enumerate() {
            if in_matched & (1 << i) != 0 {
                continue;
            }
            let mut bits = req & !out_matched;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                column[j] |= 1 << i;
                any = true;
            }
        }
        if !any {
            break;
        }

        // Grant.
        grants.iter_mut().for_each(|g| *g = 0);
        for j in 0..n {
            granted_to[j] = usize::MAX;
            if let Some(i) = round_robin_first(column[j], ptr.rro[j]) {
                granted_to[j] = i;
                grants[i] |= 1 << j;
            }
        }

        // Accept.
        let mut accepted_outputs: u64 = 0;
        for i in 0..n {
            let Some(j) = round_robin_first(grants[i], ptr.rri[i]) else {
                continue;
            };
            matching.pairs.push((PortId(i), PortId(j)));
            in_matched |= 1 << i;
            out_matched |= 1 << j;
            accepted_outputs |= 1 << j;
            if iteration == 0 {
                ptr.rri[i] = (j + 1) % n;
                ptr.rro[j] = (i + 1) % n;
            }
        }

        if iteration == 0 && kind != SchedulerKind::Islip {
            for (j, &i) in granted_to.iter().enumerate() {
                if i != usize::MAX && accepted_outputs & (1 << j) == 0 {
                    ptr.rro[j] = i;
                }
            }
        }

        if accepted_outputs == 0 {
            break;
        }
    }
    matching
}

/// iSLIP and FIRM never draw random numbers.
struct NoDraws;

impl rand::RngCore for NoDraws {
    fn next_u32(&mut self) -> u32 {
        unreachable!("deterministic scheduler drew a random number")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("deterministic scheduler drew a random number")
    }
    fn fill_bytes(&mut self, _dst: &mut [u8]) {
        unreachable!("deterministic scheduler drew a random number")
    }
}

pub fn islip_schedule<V: VoqView + ?Sized>(
    view: &V,
    ptr: &mut Pointers,
    max_iterations: usize,
) -> Matching {
    iterate(
        SchedulerKind::Islip,
        view,
        ptr,
        max_iterations,
        &mut NoDraws,
    )
}

pub fn firm_schedule<V: VoqView + ?Sized>(
    view: &V,
    ptr: &mut Pointers,
    max_iterations: usize,
) -> Matching {
    iterate(SchedulerKind::Firm, view, ptr, max_iterations, &mut NoDraws)
}

pub fn bsc_firm_schedule<V: VoqView + ?Sized, R: Rng + ?Sized>(
    view: &V,
    ptr: &mut Pointers,
    max_iterations: usize,
    rng: &mut R,
) -> Matching {
    iterate(SchedulerKind::BscFirm, view, ptr, max_iterations, rng)
}

/// Dispatch on `kind`. Only BSC-FIRM draws from `rng`.
pub fn schedule<V: VoqView + ?Sized, R: Rng + ?Sized>(
    kind: SchedulerKind,
    view: &V,
    ptr: &mut Pointers,
    max_iterations: usize,
    rng: &mut R,
) -> Matching {
    iterate(kind, view, ptr, max_iterations, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn key(len: usize, t: Slot) -> ScKey {
        ScKey {
            len,
            last_scheduled_slot: t,
        }
    }

    fn pairs(m: &Matching) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = m.pairs().iter().map(|&(i, j)| (i.0, j.0)).collect();
        v.sort();
        v
    }

    #[test]
    fn sc_compare_examples() {
        assert_eq!(sc_compare(key(5, 3), key(2, 9)), ScOrder::ALess);
        assert_eq!(sc_compare(key(4, 2), key(4, 7)), ScOrder::ALess);
        assert_eq!(sc_compare(key(0, 0), key(0, 0)), ScOrder::Equal);
        assert_eq!(sc_compare(key(2, 9), key(5, 3)), ScOrder::BLess);
    }

    #[test]
    fn round_robin_wraps() {
        assert_eq!(round_robin_first(0b1001, 0), Some(0));
        assert_eq!(round_robin_first(0b1001, 1), Some(3));
        assert_eq!(round_robin_first(0b1001, 3), Some(3));
        assert_eq!(round_robin_first(0b0011, 3), Some(0));
        assert_eq!(round_robin_first(1 << 63, 63), Some(63));
        assert_eq!(round_robin_first(0, 5), None);
    }

    #[test]
    fn empty_state_gives_empty_matching() {
        let view = VoqSnapshot::from_lens(4, vec![0; 16]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in SchedulerKind::ALL {
            let mut p = Pointers::new(4);
            let m = schedule(kind, &view, &mut p, 5, &mut rng);
            assert!(m.is_empty(), "{kind}");
            assert_eq!(
                p,
                Pointers::new(4),
                "{kind} moved pointers without matching"
            );
        }
    }

    #[test]
    fn single_request_matches() {
        let mut lens = vec![0; 16];
        lens[3] = 2;
        let view = VoqSnapshot::from_lens(4, lens);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in SchedulerKind::ALL {
            let mut p = Pointers::new(4);
            let m = schedule(kind, &view, &mut p, 5, &mut rng);
            assert_eq!(pairs(&m), vec![(0, 3)], "{kind}");
        }
    }

    #[test]
    fn bsc_firm_two_by_two_trace() {
        let view = VoqSnapshot::from_lens(2, vec![5, 1, 1, 5]);
        let mut p = Pointers::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = bsc_firm_schedule(&view, &mut p, 5, &mut rng);
        assert_eq!(pairs(&m), vec![(0, 0), (1, 1)]);
        // Input 1 was matched in iteration 2, so its repositioned RRI stays at 1.
        assert_eq!(p.rri, vec![1, 1]);
        // Output 1 granted input 0 in iteration 1 and was refused.
        assert_eq!(p.rro, vec![1, 0]);
    }

    #[test]
    fn firm_two_by_two_trace() {
        let view = VoqSnapshot::from_lens(2, vec![1, 1, 1, 1]);
        let mut p = Pointers::new(2);
        let m = firm_schedule(&view, &mut p, 5);
        assert_eq!(pairs(&m), vec![(0, 0), (1, 1)]);
        assert_eq!(p.rri, vec![1, 0]);
        assert_eq!(p.rro, vec![1, 0]);
    }

    #[test]
    fn firm_unaccepted_grant_points_at_refusing_input() {
        // Output 1 starts pointing at input 1 but only input 0 requests it.
        // Input 0 prefers output 0 and refuses output 1's grant.
        let view = VoqSnapshot::from_lens(2, vec![1, 1, 0, 0]);
        let mut p = Pointers {
            rri: vec![0, 0],
            rro: vec![0, 1],
        };
        let m = firm_schedule(&view, &mut p, 1);
        assert_eq!(pairs(&m), vec![(0, 0)]);
        assert_eq!(p.rro[1], 0);

        let mut p = Pointers {
            rri: vec![0, 0],
            rro: vec![0, 1],
        };
        islip_schedule(&view, &mut p, 1);
        assert_eq!(
            p.rro[1], 1,
            "iSLIP leaves an unaccepted grant pointer alone"
        );
    }

    #[test]
    fn islip_two_by_two_trace() {
        let view = VoqSnapshot::from_lens(2, vec![1, 1, 1, 1]);
        let mut p = Pointers::new(2);
        let m = islip_schedule(&view, &mut p, 5);
        assert_eq!(pairs(&m), vec![(0, 0), (1, 1)]);
        assert_eq!(p.rri, vec![1, 0]);
        assert_eq!(p.rro, vec![1, 0]);
    }

    #[test]
    fn pointers_frozen_after_first_iteration() {
        // Iteration 1 matches (0,0); (1,1) forms in iteration 2 and must not move pointers.
        let view = VoqSnapshot::from_lens(2, vec![1, 1, 1, 1]);
        for kind in [SchedulerKind::Islip, SchedulerKind::Firm] {
            let mut p = Pointers::new(2);
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            schedule(kind, &view, &mut p, 5, &mut rng);
            assert_eq!(p.rri[1], 0, "{kind}");
        }
    }

    #[test]
    fn bsc_firm_ties_are_random_but_reproducible() {
        // Input 0 has four equal-SC VOQs; over many draws every one gets picked.
        let mut lens = vec![0; 16];
        lens[0..4].copy_from_slice(&[3, 3, 3, 3]);
        let view = VoqSnapshot::from_lens(4, lens);
        let mut seen = [0usize; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..400 {
            let mut p = Pointers::new(4);
            let m = bsc_firm_schedule(&view, &mut p, 1, &mut rng);
            seen[m.output_of(PortId(0)).unwrap().0] += 1;
        }
        assert!(seen.iter().all(|&c| c > 60), "{seen:?}");

        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| {
                    let mut p = Pointers::new(4);
                    bsc_firm_schedule(&view, &mut p, 1, &mut rng)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn bsc_firm_prefers_older_voq_at_equal_length() {
        let view = VoqSnapshot::new(2, vec![2, 2, 0, 0], vec![9, 4, 0, 0]);
        let mut p = Pointers::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = bsc_firm_schedule(&view, &mut p, 1, &mut rng);
        assert_eq!(pairs(&m), vec![(0, 1)]);
    }

    #[test]
    fn scheduler_names_round_trip() {
        for kind in SchedulerKind::ALL {
            assert_eq!(kind.as_str().parse::<SchedulerKind>().unwrap(), kind);
        }
        assert!("pim".parse::<SchedulerKind>().is_err());
    }
}
