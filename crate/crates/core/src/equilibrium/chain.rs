//! Brute-force solution of one station's contention chain.
//!
//! The transition matrix is built state by state from the backoff and
//! post-backoff transition rules and solved exactly with the
//! Grassmann-Taksar-Heyman (GTH) state-reduction algorithm on a sparse
//! representation. States are eliminated by decreasing backoff counter, so
//! deterministic countdown chains collapse without fill-in and windows of a
//! few thousand slots stay cheap.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scenario::{PhyMacParams, StationProfile};

/// Refuse chains larger than this.
pub const MAX_CHAIN_STATES: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainState {
    /// Backoff stage `i`, counter `k`.
    Backoff { stage: u32, counter: u32 },
    /// Post-backoff counter `k`; `k = 0` is the idle state.
    PostBackoff { counter: u32 },
}

impl ChainState {
    fn counter(&self) -> u32 {
        match *self {
            ChainState::Backoff { counter, .. } | ChainState::PostBackoff { counter } => counter,
        }
    }
}

/// Sparse discrete-time Markov chain.
#[derive(Debug, Clone)]
pub struct SparseChain {
    pub states: Vec<ChainState>,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SparseChain {
    fn new(states: Vec<ChainState>) -> Self {
        let rows = vec![BTreeMap::new(); states.len()];
        SparseChain { states, rows }
    }

    fn add(&mut self, from: usize, to: usize, prob: f64) {
        if prob != 0.0 {
            *self.rows[from].entry(to).or_insert(0.0) += prob;
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn row_sum(&self, from: usize) -> f64 {
        self.rows[from].values().sum()
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.rows[from].get(&to).copied().unwrap_or(0.0)
    }

    /// Stationary distribution by GTH reduction, eliminating states in `order`.
    /// The last state of `order` is kept; it must be reachable from all others.
    pub fn stationary_gth(&self, order: &[usize]) -> Result<Vec<f64>> {
        let n = self.len();
        if order.len() != n {
            return Err(Error::SingularChain(
                "elimination order must cover every state".into(),
            ));
        }
        let mut out = self.rows.clone();
        let mut incoming: Vec<BTreeMap<usize, ()>> = vec![BTreeMap::new(); n];
        for (i, row) in out.iter().enumerate() {
            for &j in row.keys() {
                if j != i {
                    incoming[j].insert(i, ());
                }
            }
        }

        struct Eliminated {
            state: usize,
            outflow: f64,
            preds: Vec<(usize, f64)>,
        }
        let mut log = Vec::with_capacity(n.saturating_sub(1));

        for &x in &order[..n - 1] {
            out[x].remove(&x);
            let succs: Vec<(usize, f64)> = out[x].iter().map(|(&j, &v)| (j, v)).collect();
            let outflow: f64 = succs.iter().map(|&(_, v)| v).sum();
            if !(outflow > 0.0) {
                return Err(Error::SingularChain(format!(
                    "state {:?} has no exit to the remaining states",
                    self.states[x]
                )));
            }
            let preds: Vec<(usize, f64)> = incoming[x]
                .keys()
                .map(|&i| (i, out[i].remove(&x).unwrap_or(0.0)))
                .collect();
            for &(i, pix) in &preds {
                for &(j, pxj) in &succs {
                    *out[i].entry(j).or_insert(0.0) += pix * pxj / outflow;
                    if i != j {
                        incoming[j].insert(i, ());
                    }
                }
            }
            for &(j, _) in &succs {
                incoming[j].remove(&x);
            }
            out[x].clear();
            incoming[x].clear();
            log.push(Eliminated {
                state: x,
                outflow,
                preds,
            });
        }

        let mut pi = vec![0.0; n];
        pi[order[n - 1]] = 1.0;
        for e in log.iter().rev() {
            pi[e.state] = e.preds.iter().map(|&(i, p)| pi[i] * p).sum::<f64>() / e.outflow;
        }
        let total: f64 = pi.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::SingularChain(
                "stationary vector does not normalise".into(),
            ));
        }
        for v in &mut pi {
            *v /= total;
        }
        Ok(pi)
    }
}

/// Builds the contention chain of a station with minimum window `w0`.
pub fn build_contention_chain(
    w0: u32,
    m: u32,
    r: u32,
    q: f64,
    p_eq: f64,
    p_idle: f64,
) -> Result<(SparseChain, ChainIndex)> {
    if w0 < 1 {
        return Err(Error::Domain("minimum window must be >= 1".into()));
    }
    let windows: Vec<u32> = (0..=r)
        .map(|i| w0.checked_shl(i.min(m)).filter(|w| *w < u32::MAX / 2))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Domain("contention window overflows".into()))?;
    let count: usize = windows.iter().map(|&w| w as usize).sum::<usize>() + w0 as usize;
    if count > MAX_CHAIN_STATES {
        return Err(Error::Domain(format!(
            "chain with {count} states is too large"
        )));
    }

    let mut states = Vec::with_capacity(count);
    let mut stage_offset = Vec::with_capacity(windows.len());
    for (i, &w) in windows.iter().enumerate() {
        stage_offset.push(states.len());
        states.extend((0..w).map(|k| ChainState::Backoff {
            stage: i as u32,
            counter: k,
        }));
    }
    let post_offset = states.len();
    states.extend((0..w0).map(|k| ChainState::PostBackoff { counter: k }));
    let index = ChainIndex {
        stage_offset,
        post_offset,
        windows: windows.clone(),
    };

    let mut chain = SparseChain::new(states);
    let w0f = w0 as f64;
    let b = |i: u32, k: u32| index.backoff(i, k);
    let post = |k: u32| index.post(k);

    for i in 0..=r {
        let wi = windows[i as usize];
        for k in 1..wi {
            chain.add(b(i, k), b(i, k - 1), 1.0);
        }
        let from = b(i, 0);
        if i < r {
            for k in 0..w0 {
                chain.add(from, post(k), (1.0 - p_eq) * (1.0 - q) / w0f);
                chain.add(from, b(0, k), (1.0 - p_eq) * q / w0f);
            }
            let next = windows[i as usize + 1];
            for k in 0..next {
                chain.add(from, b(i + 1, k), p_eq / next as f64);
            }
        } else {
            // Last stage: success or drop, either way the packet leaves.
            for k in 0..w0 {
                chain.add(from, post(k), (1.0 - q) / w0f);
                chain.add(from, b(0, k), q / w0f);
            }
        }
    }

    for k in 1..w0 {
        chain.add(post(k), post(k - 1), 1.0 - q);
        chain.add(post(k), b(0, k - 1), q);
    }
    let idle = post(0);
    chain.add(idle, idle, 1.0 - q);
    // Immediate attempt from the idle state succeeds with (1 - p_eq); with
    // r = 0 a failed attempt is a drop and leaves the chain the same way.
    let leave = if r >= 1 { 1.0 - p_eq } else { 1.0 };
    for k in 0..w0 {
        chain.add(idle, post(k), q * p_idle * leave * (1.0 - q) / w0f);
        chain.add(
            idle,
            b(0, k),
            q * ((1.0 - p_idle) + q * p_idle * leave) / w0f,
        );
    }
    if r >= 1 {
        let w1 = windows[1];
        for k in 0..w1 {
            chain.add(idle, b(1, k), q * p_idle * p_eq / w1 as f64);
        }
    }
    Ok((chain, index))
}

/// Positions of chain states in a [`SparseChain`] built by [`build_contention_chain`].
#[derive(Debug, Clone)]
pub struct ChainIndex {
    stage_offset: Vec<usize>,
    post_offset: usize,
    windows: Vec<u32>,
}

impl ChainIndex {
    pub fn backoff(&self, stage: u32, counter: u32) -> usize {
        debug_assert!(counter < self.windows[stage as usize]);
        self.stage_offset[stage as usize] + counter as usize
    }

    pub fn post(&self, counter: u32) -> usize {
        self.post_offset + counter as usize
    }

    pub fn stages(&self) -> u32 {
        self.stage_offset.len() as u32
    }
}

/// Stationary distribution of the contention chain together with its index.
pub fn chain_stationary(
    w0: u32,
    m: u32,
    r: u32,
    q: f64,
    p_eq: f64,
    p_idle: f64,
) -> Result<(Vec<f64>, SparseChain, ChainIndex)> {
    let (chain, index) = build_contention_chain(w0, m, r, q, p_eq, p_idle)?;
    // Highest counters first; the idle state is kept to the end because it
    // absorbs all mass when no packets arrive.
    let idle = index.post(0);
    let mut order: Vec<usize> = (0..chain.len()).filter(|&s| s != idle).collect();
    order.sort_by_key(|&s| std::cmp::Reverse(chain.states[s].counter()));
    order.push(idle);
    let pi = chain.stationary_gth(&order)?;
    Ok((pi, chain, index))
}

/// Transmission probability read off the brute-force stationary distribution:
/// every `(i, 0)` state transmits, and the idle state transmits when a packet
/// has arrived and the channel is idle.
pub fn chain_oracle(
    profile: &StationProfile,
    q: f64,
    p_eq: f64,
    p_idle: f64,
    p: &PhyMacParams,
) -> Result<f64> {
    let (pi, _, index) = chain_stationary(
        profile.cw_min,
        p.max_backoff_stage,
        p.retry_limit,
        q,
        p_eq,
        p_idle,
    )?;
    let backoff: f64 = (0..index.stages()).map(|i| pi[index.backoff(i, 0)]).sum();
    Ok(backoff + pi[index.post(0)] * q * p_idle)
}
