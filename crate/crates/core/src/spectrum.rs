//! Low-weight distance spectrum of a turbo code with a fixed interleaver.
//!
//! Every codeword of weight `d = w + c1 + c2` (information weight plus the
//! surviving-parity-and-tail weight contributed by each constituent encoder)
//! satisfies `w + 2 min(c1, c2) <= d`. The search runs once per constituent in
//! its own input order over inputs with `w + 2c <= d_max`, evaluates the other
//! constituent exactly on the mapped support, and keeps a codeword only on the
//! side where its contribution is the smaller one (ties go to the first
//! encoder), so each codeword is counted exactly once.
//!
//! Inputs are built from single events: paths that leave the zero state once
//! and remerge, or run to the end of the frame. Single events do not depend on
//! the interleaver and are enumerated once per constituent by a trellis walk
//! pruned with an exact backward bound. Multi-event inputs are time-disjoint
//! combinations of them with additive costs.
//!
//! Most candidates are rejected before the other encoder is run: with a parity
//! budget `b`, the other trellis can stay away from the zero state on zero
//! input for at most `reach(b)` steps, so every mapped one needs another
//! mapped one (or the end of the frame) within that distance.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use crate::codec::{turbo_encode, PuncturePhase, Termination, TurboCodeConfig};
use crate::error::{Error, Result};
use crate::interleave::Permutation;
use crate::poly::RscSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpectrumTerm {
    pub weight: u32,
    pub multiplicity: u64,
    pub information_weight: u64,
}

impl SpectrumTerm {
    pub fn new(weight: u32, multiplicity: u64, information_weight: u64) -> Self {
        Self {
            weight,
            multiplicity,
            information_weight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceSpectrum {
    /// Strictly increasing in weight.
    pub terms: Vec<SpectrumTerm>,
    /// Every codeword of weight up to this value is enumerated.
    pub certified_up_to: u32,
    pub d_max: u32,
    pub w_max: u32,
    /// Information supports of the codewords in the first term.
    pub min_weight_inputs: Vec<Vec<u32>>,
}

impl DistanceSpectrum {
    pub fn free_distance(&self) -> Option<SpectrumTerm> {
        self.terms.first().copied()
    }

    pub fn term(&self, weight: u32) -> Option<SpectrumTerm> {
        self.terms.iter().find(|t| t.weight == weight).copied()
    }

    /// CSV with a trailing `# certified_up_to=` comment.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("weight,codeword_multiplicity,information_weight\n");
        for t in &self.terms {
            let _ = writeln!(s, "{},{},{}", t.weight, t.multiplicity, t.information_weight);
        }
        let _ = writeln!(s, "# certified_up_to={}", self.certified_up_to);
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut cert = None;
        for (k, line) in text.lines().enumerate() {
            let ln = k + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("certified_up_to=") {
                    cert = Some(v.trim().parse().map_err(|e| Error::Parse {
                        line: ln,
                        msg: format!("bad certification bound: {e}"),
                    })?);
                }
                continue;
            }
            if ln == 1 {
                if line != "weight,codeword_multiplicity,information_weight" {
                    return Err(Error::Parse {
                        line: ln,
                        msg: "unexpected spectrum header".into(),
                    });
                }
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected 3 fields, got {}", f.len()),
                });
            }
            let num = |s: &str| -> Result<u64> {
                s.trim().parse().map_err(|e| Error::Parse {
                    line: ln,
                    msg: format!("bad number {s:?}: {e}"),
                })
            };
            terms.push(SpectrumTerm::new(num(f[0])? as u32, num(f[1])?, num(f[2])?));
        }
        let certified_up_to = cert.unwrap_or_else(|| terms.last().map_or(0, |t| t.weight));
        Ok(Self {
            terms,
            certified_up_to,
            d_max: certified_up_to,
            w_max: certified_up_to,
            min_weight_inputs: Vec::new(),
        })
    }
}

/// Limits of one spectrum search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    /// Largest codeword weight enumerated.
    pub d_max: u32,
    /// Largest information weight enumerated.
    pub w_max: u32,
    /// Number of leading terms reported; `None` keeps all.
    pub term_count: Option<usize>,
    /// Abort after visiting this many trellis nodes.
    pub node_budget: u64,
}

impl SearchLimits {
    pub fn new(d_max: u32) -> Self {
        Self {
            d_max,
            w_max: d_max,
            term_count: None,
            node_budget: 2_000_000_000,
        }
    }

    pub fn terms(mut self, count: usize) -> Self {
        self.term_count = Some(count);
        self
    }
}

const REACH_CAP: usize = 64;

/// Longest zero-input run (plus one) from any nonzero state and start time
/// whose surviving parity stays within each budget `0..=cap`.
fn zero_run_reach(next: &[usize], par: &[u8], keep: &[bool], ns: usize, cap: usize) -> Vec<u32> {
    let width = cap + 1;
    let mut f = vec![0u32; ns * width];
    let mut g = f.clone();
    let mut best = vec![0u32; width];
    for t in (0..keep.len()).rev() {
        for s in 1..ns {
            let nx = next[2 * s];
            let p = (keep[t] as u8 & par[2 * s]) as usize;
            for b in 0..width {
                let run = if p > b { 0 } else { 1 + f[nx * width + b - p] };
                g[s * width + b] = run;
                best[b] = best[b].max(run);
            }
        }
        std::mem::swap(&mut f, &mut g);
    }
    best.into_iter().map(|r| r + 1).collect()
}

/// One constituent encoder as seen by the search.
struct View {
    n: usize,
    next: Vec<usize>,
    par: Vec<u8>,
    keep: Vec<bool>,
    /// Tail weight per final state, or all zeros if unterminated.
    tail: Vec<u32>,
    ns: usize,
    /// reach[b]: no nonzero state runs `reach[b]` zero-input steps within the
    /// frame with surviving parity at most `b`
    reach: Vec<u32>,
}

impl View {
    fn new(rsc: &RscSpec, keep: Vec<bool>, terminated: bool, tail_systematic: bool) -> Self {
        let (next, par) = rsc.tables();
        let ns = rsc.num_states();
        let tail = (0..ns)
            .map(|s| match (terminated, tail_systematic) {
                (false, _) => 0,
                (true, true) => rsc.tail_weight(s),
                (true, false) => rsc.tail(s).iter().map(|&(_, p)| p as u32).sum(),
            })
            .collect();
        let reach = zero_run_reach(&next, &par, &keep, ns, REACH_CAP);
        Self {
            n: keep.len(),
            next,
            par,
            keep,
            tail,
            ns,
            reach,
        }
    }

    fn reach(&self, budget: u32) -> u32 {
        self.reach.get(budget as usize).copied().unwrap_or(u32::MAX)
    }

    /// Smallest budget whose reach covers `distance`.
    fn budget_for(&self, distance: u32) -> u32 {
        self.reach.partition_point(|&r| r < distance) as u32
    }

    #[inline]
    fn step(&self, s: usize, u: usize, t: usize) -> (usize, u32) {
        let k = 2 * s + u;
        (self.next[k], (self.keep[t] as u8 & self.par[k]) as u32)
    }

    /// Contribution (surviving parity plus tail) of a sparse input, or `None`
    /// if it exceeds `budget`. `ones` must be sorted.
    fn contribution(&self, ones: &[u32], budget: u32) -> Option<u32> {
        let mut s = 0usize;
        let mut c = 0u32;
        let mut t = 0usize;
        for &p in ones {
            let p = p as usize;
            while t < p && s != 0 {
                let (ns, par) = self.step(s, 0, t);
                s = ns;
                c += par;
                t += 1;
                if c > budget {
                    return None;
                }
            }
            let (ns, par) = self.step(s, 1, p);
            s = ns;
            c += par;
            t = p + 1;
            if c > budget {
                return None;
            }
        }
        while s != 0 && t < self.n {
            let (ns, par) = self.step(s, 0, t);
            s = ns;
            c += par;
            t += 1;
            if c > budget {
                return None;
            }
        }
        c += self.tail[s];
        (c <= budget).then_some(c)
    }
}

/// Depth-first enumeration of all single trellis events (paths that leave the
/// zero state once and either remerge or reach the frame end) with
/// `w + 2c <= bound` and `w <= w_max`.
struct Walker<'a, F: FnMut(&[u32], u32, bool)> {
    view: &'a View,
    /// lb[t * ns + s]: cheapest `w + 2c` completion from state `s` at time `t`
    lb: Vec<u32>,
    /// start[t]: cheapest completion of an input whose next one is at `t` or later
    start_min: Vec<u32>,
    bound: u32,
    w_max: u32,
    support: Vec<u32>,
    nodes: u64,
    node_budget: u64,
    exhausted: bool,
    /// `(ones, contribution, terminal)`
    emit: F,
}

impl<'a, F: FnMut(&[u32], u32, bool)> Walker<'a, F> {
    fn new(view: &'a View, bound: u32, w_max: u32, node_budget: u64, emit: F) -> Self {
        let (n, ns) = (view.n, view.ns);
        let mut lb = vec![0u32; (n + 1) * ns];
        for s in 0..ns {
            lb[n * ns + s] = 2 * view.tail[s];
        }
        for t in (0..n).rev() {
            for s in 0..ns {
                let mut best = u32::MAX;
                for u in 0..2 {
                    let (nx, par) = view.step(s, u, t);
                    best = best.min(u as u32 + 2 * par + lb[(t + 1) * ns + nx]);
                }
                lb[t * ns + s] = best;
            }
        }
        let mut start_min = vec![u32::MAX; n + 1];
        for t in (0..n).rev() {
            let (nx, par) = view.step(0, 1, t);
            start_min[t] = start_min[t + 1].min(1 + 2 * par + lb[(t + 1) * ns + nx]);
        }
        Self {
            view,
            lb,
            start_min,
            bound,
            w_max,
            support: Vec::new(),
            nodes: 0,
            node_budget,
            exhausted: false,
            emit,
        }
    }

    fn run(&mut self) {
        let ns = self.view.ns;
        for tp in 0..self.view.n {
            if self.start_min[tp] > self.bound {
                break;
            }
            let (nx, par) = self.view.step(0, 1, tp);
            let g1 = 1 + 2 * par;
            if g1 + self.lb[(tp + 1) * ns + nx] > self.bound {
                continue;
            }
            self.support.push(tp as u32);
            self.walk(tp + 1, nx, g1, par);
            self.support.pop();
            if self.exhausted {
                return;
            }
        }
    }

    /// In state `s` at time `t`, having left the zero state.
    fn walk(&mut self, t: usize, s: usize, g: u32, c: u32) {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            self.exhausted = true;
            return;
        }
        if s == 0 {
            (self.emit)(&self.support, c, false);
            return;
        }
        let ns = self.view.ns;
        if t == self.view.n {
            let tail = self.view.tail[s];
            if g + 2 * tail <= self.bound {
                (self.emit)(&self.support, c + tail, true);
            }
            return;
        }
        for u in 0..2 {
            if u == 1 && self.support.len() as u32 >= self.w_max {
                continue;
            }
            let (nx, par) = self.view.step(s, u, t);
            let g1 = g + u as u32 + 2 * par;
            if g1 + self.lb[(t + 1) * ns + nx] > self.bound {
                continue;
            }
            if u == 1 {
                self.support.push(t as u32);
            }
            self.walk(t + 1, nx, g1, c + par);
            if u == 1 {
                self.support.pop();
            }
            if self.exhausted {
                return;
            }
        }
    }
}

#[derive(Default)]
struct Accumulator {
    terms: BTreeMap<u32, (u64, u64)>,
    min_weight: u32,
    min_inputs: Vec<Vec<u32>>,
}

impl Accumulator {
    fn add(&mut self, d: u32, w: u32, support: &[u32]) {
        let e = self.terms.entry(d).or_default();
        e.0 += 1;
        e.1 += w as u64;
        if self.min_inputs.is_empty() || d < self.min_weight {
            self.min_weight = d;
            self.min_inputs.clear();
        }
        if d == self.min_weight {
            self.min_inputs.push(support.to_vec());
        }
    }

    fn finish(self, limits: &SearchLimits) -> DistanceSpectrum {
        let certified_up_to = limits.d_max.min(limits.w_max);
        let mut terms: Vec<SpectrumTerm> = self
            .terms
            .into_iter()
            .filter(|(d, _)| *d <= certified_up_to)
            .map(|(d, (m, w))| SpectrumTerm::new(d, m, w))
            .collect();
        let mut min_weight_inputs = if terms.first().map(|t| t.weight) == Some(self.min_weight) {
            self.min_inputs
        } else {
            Vec::new()
        };
        min_weight_inputs.sort();
        if let Some(k) = limits.term_count {
            terms.truncate(k);
        }
        DistanceSpectrum {
            terms,
            certified_up_to,
            d_max: limits.d_max,
            w_max: limits.w_max,
            min_weight_inputs,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Event {
    /// Offset of the event's ones in `EventSet::ones`.
    off: u32,
    w: u32,
    c: u32,
    start: u32,
    /// First time at which another event may start.
    end: u32,
    terminal: bool,
}

#[derive(Clone, Copy, Debug, Default)]
struct Entry {
    li: u32,
    start: u32,
    w: u32,
    c: u32,
}

/// Every single event of one constituent with `w + 2c <= bound`; depends on
/// the code, frame length, puncturing and termination but not on the
/// interleaver. Inputs with several events are combinations of these.
#[derive(Default)]
struct EventSet {
    ones: Vec<u32>,
    events: Vec<Event>,
    min_cost: u32,
    /// Smallest `w + c` among small events.
    min_wc: u32,
    /// Events cheap enough to share the bound with another event.
    small: Vec<u32>,
    /// by_cost_small[g]: local indices of small events with `w + 2c == g`, ordered by start
    by_cost_small: Vec<Vec<u32>>,
    /// small events containing each position, grouped by position and cost
    containing: Vec<Entry>,
    containing_end: Vec<u32>,
    costs: usize,
    nodes: u64,
    exhausted: bool,
}

impl EventSet {
    fn build(view: &View, bound: u32, w_max: u32, node_budget: u64) -> Self {
        let n = view.n as u32;
        let mut set = EventSet {
            min_cost: u32::MAX,
            ..Default::default()
        };
        let (nodes, exhausted) = {
            let mut walker = Walker::new(view, bound, w_max, node_budget, |ones, c, terminal| {
                let w = ones.len() as u32;
                set.min_cost = set.min_cost.min(w + 2 * c);
                set.events.push(Event {
                    off: set.ones.len() as u32,
                    w,
                    c,
                    start: ones[0],
                    end: if terminal { n } else { ones[ones.len() - 1] + 1 },
                    terminal,
                });
                set.ones.extend_from_slice(ones);
            });
            walker.run();
            (walker.nodes, walker.exhausted)
        };
        set.nodes = nodes;
        set.exhausted = exhausted;
        set.index_small(bound, view.n);
        set
    }

    fn index_small(&mut self, bound: u32, n: usize) {
        let costs = bound as usize + 2;
        self.by_cost_small = vec![Vec::new(); bound as usize + 1];
        self.min_wc = u32::MAX;
        let mut counts = vec![0u32; n * costs + 1];
        for (ei, e) in self.events.iter().enumerate() {
            let g = e.w + 2 * e.c;
            if g + self.min_cost <= bound {
                self.min_wc = self.min_wc.min(e.w + e.c);
                self.by_cost_small[g as usize].push(self.small.len() as u32);
                self.small.push(ei as u32);
                for &o in self.ones(e) {
                    counts[o as usize * costs + g as usize + 1] += 1;
                }
            }
        }
        for k in 0..n * costs {
            counts[k + 1] += counts[k];
        }
        let mut fill = counts.clone();
        self.containing = vec![Entry::default(); counts[n * costs] as usize];
        for (li, &ei) in self.small.iter().enumerate() {
            let e = &self.events[ei as usize];
            let g = (e.w + 2 * e.c) as usize;
            for &o in &self.ones[e.off as usize..(e.off + e.w) as usize] {
                let slot = &mut fill[o as usize * costs + g];
                self.containing[*slot as usize] = Entry {
                    li: li as u32,
                    start: e.start,
                    w: e.w,
                    c: e.c,
                };
                *slot += 1;
            }
        }
        for k in 0..n * costs {
            self.containing[counts[k] as usize..counts[k + 1] as usize].sort_by_key(|en| en.w + en.c);
        }
        self.containing_end = counts;
        self.costs = costs;
    }

    /// Small events containing position `z` with cost in `lo..=hi`, ordered
    /// by cost and then by `w + c`.
    fn containing(&self, z: u32, lo: u32, hi: u32) -> &[Entry] {
        let base = z as usize * self.costs;
        &self.containing
            [self.containing_end[base + lo as usize] as usize..self.containing_end[base + hi as usize + 1] as usize]
    }

    fn ones(&self, e: &Event) -> &[u32] {
        &self.ones[e.off as usize..(e.off + e.w) as usize]
    }
}

/// Combinable events of one side mapped through the interleaver.
///
/// The other constituent cannot afford a zero-input run of `reach` steps from
/// a nonzero state, so in any surviving codeword every mapped one has another
/// mapped one within `reach` positions or lies within `reach` of the frame
/// end. Ones of an event with no partner inside the event are recorded as
/// needs `(position, reach)`; a combination survives only if every need is
/// met by another event. Positions are also bucketed into at most 64 blocks
/// for a cheap first test.
struct MappedEvents {
    /// Per combinable event (indexed like `EventSet::small`).
    ones: Vec<u32>,
    ones_end: Vec<u32>,
    occ: Vec<u64>,
    needs: Vec<(u32, u32)>,
    need_masks: Vec<u64>,
    need_end: Vec<u32>,
}

/// Whether every one of sorted `m` has a partner within `reach` or lies
/// within `reach` of the frame end.
fn all_partnered(m: &[u32], reach: u64, n: u64) -> bool {
    m.iter().enumerate().all(|(j, &y)| {
        let y = y as u64;
        let near = |k: usize| (m[k] as u64).abs_diff(y) <= reach;
        (j > 0 && near(j - 1)) || (j + 1 < m.len() && near(j + 1)) || y + reach >= n
    })
}

impl MappedEvents {
    fn new(set: &EventSet, other: &View, bound: u32, map: impl Fn(usize) -> usize) -> Self {
        let n = other.n as u64;
        let width = block_width(other.n);
        let mut out = MappedEvents {
            ones: Vec::new(),
            ones_end: Vec::with_capacity(set.small.len()),
            occ: Vec::with_capacity(set.small.len()),
            needs: Vec::new(),
            need_masks: Vec::new(),
            need_end: Vec::with_capacity(set.small.len()),
        };
        for &ei in &set.small {
            let e = &set.events[ei as usize];
            let from = out.ones.len();
            out.ones.extend(set.ones(e).iter().map(|&i| map(i as usize) as u32));
            out.ones_end.push(out.ones.len() as u32);
            let m = &mut out.ones[from..];
            m.sort_unstable();
            let reach = other.reach(bound - e.w - e.c) as u64;
            let mut occ = 0u64;
            for (j, &y) in m.iter().enumerate() {
                let y = y as u64;
                occ |= 1u64 << (y / width);
                let near = |k: usize| (m[k] as u64).abs_diff(y) <= reach;
                let partnered = (j > 0 && near(j - 1)) || (j + 1 < m.len() && near(j + 1));
                if !partnered && y + reach < n {
                    let (lo, hi) = (y.saturating_sub(reach), y + reach);
                    out.needs.push((y as u32, reach as u32));
                    out.need_masks.push(block_range(lo / width, hi.min(n - 1) / width));
                }
            }
            out.occ.push(occ);
            out.need_end.push(out.needs.len() as u32);
        }
        out
    }

    fn ones(&self, li: usize) -> &[u32] {
        let from = if li == 0 { 0 } else { self.ones_end[li - 1] as usize };
        &self.ones[from..self.ones_end[li] as usize]
    }

    fn need_range(&self, li: usize) -> std::ops::Range<usize> {
        let from = if li == 0 { 0 } else { self.need_end[li - 1] as usize };
        from..self.need_end[li] as usize
    }
}

fn block_width(n: usize) -> u64 {
    n.div_ceil(64).max(1) as u64
}

/// Bits `lo..=hi`.
fn block_range(lo: u64, hi: u64) -> u64 {
    let upper = if hi >= 63 { u64::MAX } else { (1u64 << (hi + 1)) - 1 };
    upper & !((1u64 << lo) - 1)
}

/// Combines events of one side in time order and evaluates the survivors.
struct Combiner<'a> {
    set: &'a EventSet,
    mapped: &'a MappedEvents,
    other: &'a View,
    /// other-side position of each position of this side, and the inverse
    fwd: &'a [u32],
    back: &'a [u32],
    /// 0: inputs in encoder-1 order, kept if `c1 <= c2`; 1: encoder-2 order, kept if `c2 < c1`
    side: usize,
    bound: u32,
    w_max: u32,
    /// local indices of the chosen events
    stack: Vec<u32>,
    buf: Vec<u32>,
    unmet: Vec<u32>,
    nodes: u64,
    node_budget: u64,
    exhausted: bool,
    acc: &'a mut Accumulator,
}

impl Combiner<'_> {
    fn run(&mut self) {
        let set = self.set;
        for (li, &ei) in set.small.iter().enumerate() {
            let e = &set.events[ei as usize];
            if e.terminal {
                continue;
            }
            self.stack.push(li as u32);
            self.extend(e.end, e.w + 2 * e.c, e.w, e.c);
            self.stack.pop();
            if self.exhausted {
                return;
            }
        }
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            self.exhausted = true;
        }
        self.exhausted
    }

    fn extend(&mut self, t: u32, g: u32, w: u32, c: u32) {
        let set = self.set;
        let min = set.min_cost;
        if g + min > self.bound {
            return;
        }
        // events that leave room for another one
        for gv in min..=(self.bound - g).saturating_sub(min) {
            if g + gv + min > self.bound {
                break;
            }
            let list = &set.by_cost_small[gv as usize];
            let from = list.partition_point(|&li| set.events[set.small[li as usize] as usize].start < t);
            for &li in &list[from..] {
                let e = &set.events[set.small[li as usize] as usize];
                if w + e.w > self.w_max {
                    continue;
                }
                if self.tick() {
                    return;
                }
                self.stack.push(li);
                self.evaluate(w + e.w, c + e.c);
                if !e.terminal {
                    self.extend(e.end, g + gv, w + e.w, c + e.c);
                }
                self.stack.pop();
                if self.exhausted {
                    return;
                }
            }
        }
        // final events
        let last_lo = (self.bound - g + 1).saturating_sub(min).max(min);
        let last_hi = self.bound - g;
        let reach = self.unmet_needs(w, c);
        match self.unmet.first() {
            Some(&y) => self.final_in_window(t, w, c, last_lo, last_hi, y, reach),
            None => {
                for gv in last_lo..=last_hi {
                    let list = &set.by_cost_small[gv as usize];
                    let from = list.partition_point(|&li| set.events[set.small[li as usize] as usize].start < t);
                    for &li in &list[from..] {
                        let e = &set.events[set.small[li as usize] as usize];
                        if w + e.w > self.w_max {
                            continue;
                        }
                        if self.tick() {
                            return;
                        }
                        self.stack.push(li);
                        self.evaluate(w + e.w, c + e.c);
                        self.stack.pop();
                    }
                }
            }
        }
    }

    /// Final events containing a one whose mapped position is within `r` of `y`;
    /// each is visited once, at its first such one.
    #[allow(clippy::too_many_arguments)]
    fn final_in_window(&mut self, t: u32, w: u32, c: u32, lo: u32, hi: u32, y: u32, r: u32) {
        let set = self.set;
        let n = self.other.n as u32;
        let (ylo, yhi) = (y.saturating_sub(r), (y + r).min(n - 1));
        let inside = |z: u32| (ylo..=yhi).contains(&self.fwd[z as usize]);
        let spare = self.bound - w - c;
        for yy in ylo..=yhi {
            let z = self.back[yy as usize];
            if z < t {
                continue;
            }
            // larger events leave too little reach to partner `y` from here
            let Some(wc_hi) = spare.checked_sub(self.other.budget_for(yy.abs_diff(y))) else {
                continue;
            };
            if wc_hi < set.min_wc {
                continue;
            }
            for g in lo..=hi {
                for en in set.containing(z, g, g) {
                    if en.w + en.c > wc_hi {
                        break;
                    }
                    if en.start < t || w + en.w > self.w_max {
                        continue;
                    }
                    let re = self.other.reach(spare - en.w - en.c);
                    let li = en.li;
                    let mine = self.mapped.ones(li as usize);
                    if !self.unmet[1..]
                        .iter()
                        .all(|&u| mine.iter().any(|&v| v.abs_diff(u) <= re))
                    {
                        continue;
                    }
                    let e = &set.events[set.small[li as usize] as usize];
                    if set.ones(e).iter().take_while(|&&o| o < z).any(|&o| inside(o)) {
                        continue;
                    }
                    if self.tick() {
                        return;
                    }
                    self.stack.push(li);
                    self.evaluate(w + e.w, c + e.c);
                    self.stack.pop();
                }
            }
        }
    }

    /// Mapped ones of the chosen events that still lack a partner within
    /// the reach left for any completion (into `unmet`), and that reach.
    fn unmet_needs(&mut self, w: u32, c: u32) -> u32 {
        let budget = (self.bound - w - c).saturating_sub(self.set.min_wc);
        let reach = self.other.reach(budget);
        self.gather();
        let n = self.other.n as u64;
        let m = &self.buf;
        self.unmet.clear();
        for j in 0..m.len() {
            let y = m[j] as u64;
            let near = |k: usize| (m[k] as u64).abs_diff(y) <= reach as u64;
            let partnered = (j > 0 && near(j - 1)) || (j + 1 < m.len() && near(j + 1)) || y + reach as u64 >= n;
            if !partnered {
                self.unmet.push(m[j]);
            }
        }
        reach
    }

    /// Sorted mapped ones of the chosen events into `buf`.
    fn gather(&mut self) {
        self.buf.clear();
        for &l in &self.stack {
            self.buf.extend_from_slice(self.mapped.ones(l as usize));
        }
        self.buf.sort_unstable();
    }

    fn evaluate(&mut self, w: u32, c: u32) {
        let (set, mapped) = (self.set, self.mapped);
        for (a, &la) in self.stack.iter().enumerate() {
            let others = self
                .stack
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .fold(0u64, |m, (_, &lb)| m | mapped.occ[lb as usize]);
            if mapped
                .need_range(la as usize)
                .any(|k| mapped.need_masks[k] & others == 0)
            {
                return;
            }
        }
        self.gather();
        if !all_partnered(
            &self.buf,
            self.other.reach(self.bound - w - c) as u64,
            self.other.n as u64,
        ) {
            return;
        }
        let Some(co) = self.other.contribution(&self.buf, self.bound - w - c) else {
            return;
        };
        let d = w + c + co;
        if self.side == 0 {
            if c <= co {
                let ones: Vec<u32> = self
                    .stack
                    .iter()
                    .flat_map(|&l| set.ones(&set.events[set.small[l as usize] as usize]).iter().copied())
                    .collect();
                self.acc.add(d, w, &ones);
            }
        } else if c < co {
            self.acc.add(d, w, &self.buf);
        }
    }
}

type CacheKey = (usize, u32, u32);

/// Spectrum search for a fixed code, frame length, puncturing and termination,
/// reusable across interleavers. Per-constituent event sets are cached by
/// weight bound.
pub struct SpectrumSearcher {
    n: usize,
    views: [View; 2],
    cache: Mutex<HashMap<CacheKey, Arc<EventSet>>>,
}

impl SpectrumSearcher {
    pub fn new(rsc: &RscSpec, n: usize, phase: PuncturePhase, termination: Termination) -> Self {
        let v1 = View::new(
            rsc,
            (0..n).map(|t| phase.keeps_parity1(t)).collect(),
            termination.first(),
            true,
        );
        let v2 = View::new(
            rsc,
            (0..n).map(|t| phase.keeps_parity2(t)).collect(),
            termination.second(),
            termination.second_tail_systematic(),
        );
        Self {
            n,
            views: [v1, v2],
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn for_config(cfg: &TurboCodeConfig) -> Self {
        Self::new(&cfg.constituent, cfg.n(), cfg.phase, cfg.termination)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cached single events for each constituent at `bound`.
    pub fn event_counts(&self, bound: u32, w_max: u32) -> [Option<usize>; 2] {
        let cache = self.cache.lock().unwrap();
        [0, 1].map(|side| cache.get(&(side, bound, w_max)).map(|s| s.events.len()))
    }

    fn events(&self, side: usize, limits: &SearchLimits) -> Arc<EventSet> {
        let key = (side, limits.d_max, limits.w_max);
        if let Some(set) = self.cache.lock().unwrap().get(&key) {
            return Arc::clone(set);
        }
        let set = Arc::new(EventSet::build(
            &self.views[side],
            limits.d_max,
            limits.w_max,
            limits.node_budget,
        ));
        if !set.exhausted {
            self.cache.lock().unwrap().insert(key, Arc::clone(&set));
        }
        set
    }

    /// All codewords of weight at most `limits.d_max` (and information weight
    /// at most `limits.w_max`) for interleaver `pi`.
    pub fn compute(&self, pi: &Permutation, limits: SearchLimits) -> Result<DistanceSpectrum> {
        if limits.d_max < 1 || limits.w_max < 1 {
            return Err(Error::InvalidParameter("d_max and w_max must be >= 1".into()));
        }
        if pi.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: pi.len(),
            });
        }
        let mut acc = Accumulator::default();
        let mut nodes = 0;
        let mut exhausted = false;
        let map: Vec<u32> = (0..self.n).map(|i| pi.map(i) as u32).collect();
        let unmap: Vec<u32> = (0..self.n).map(|j| pi.unmap(j) as u32).collect();
        let mut buf = Vec::new();
        for side in 0..2 {
            let set = self.events(side, &limits);
            let other = &self.views[1 - side];
            let (fwd, back) = if side == 0 { (&map, &unmap) } else { (&unmap, &map) };
            nodes += set.nodes;
            exhausted |= set.exhausted;

            // single events
            for e in &set.events {
                let reach = other.reach(limits.d_max - e.w - e.c);
                let ones = set.ones(e);
                let y0 = fwd[ones[0] as usize];
                if (y0 as u64 + reach as u64) < self.n as u64
                    && !ones[1..].iter().any(|&o| fwd[o as usize].abs_diff(y0) <= reach)
                {
                    continue;
                }
                buf.clear();
                buf.extend(set.ones(e).iter().map(|&i| fwd[i as usize]));
                buf.sort_unstable();
                if !all_partnered(&buf, reach as u64, self.n as u64) {
                    continue;
                }
                let Some(co) = other.contribution(&buf, limits.d_max - e.w - e.c) else {
                    continue;
                };
                let d = e.w + e.c + co;
                if side == 0 && e.c <= co {
                    acc.add(d, e.w, set.ones(e));
                } else if side == 1 && e.c < co {
                    acc.add(d, e.w, &buf);
                }
            }

            // combinations of several events
            let mapped = MappedEvents::new(&set, other, limits.d_max, |i| fwd[i] as usize);
            let mut comb = Combiner {
                set: &set,
                mapped: &mapped,
                other,
                fwd,
                back,
                side,
                bound: limits.d_max,
                w_max: limits.w_max,
                stack: Vec::new(),
                buf: Vec::new(),
                unmet: Vec::new(),
                nodes: 0,
                node_budget: limits.node_budget.saturating_sub(nodes),
                exhausted: false,
                acc: &mut acc,
            };
            comb.run();
            nodes += comb.nodes;
            exhausted |= comb.exhausted;
            if exhausted {
                break;
            }
        }
        if exhausted {
            return Err(exhausted_error(acc, &limits, nodes));
        }
        Ok(acc.finish(&limits))
    }

    /// Free-distance term, growing `d_max` from `start` in steps of 2 until a
    /// term is certified (at most `limit`).
    pub fn free_distance(&self, pi: &Permutation, start: u32, limit: u32) -> Result<DistanceSpectrum> {
        let mut d = start.max(1);
        loop {
            let spec = self.compute(pi, SearchLimits::new(d).terms(1))?;
            if !spec.terms.is_empty() {
                return Ok(spec);
            }
            if d >= limit {
                return Err(Error::BudgetExhausted(format!("no codeword of weight <= {limit}")));
            }
            d = (d + 2).min(limit);
        }
    }
}

/// All codewords of weight at most `limits.d_max` (and information weight at
/// most `limits.w_max`), grouped into spectral terms.
pub fn compute_spectrum(cfg: &TurboCodeConfig, limits: SearchLimits) -> Result<DistanceSpectrum> {
    SpectrumSearcher::for_config(cfg).compute(&cfg.interleaver, limits)
}

fn exhausted_error(acc: Accumulator, limits: &SearchLimits, nodes: u64) -> Error {
    let partial = acc.finish(limits);
    let listed: Vec<String> = partial
        .terms
        .iter()
        .map(|t| format!("({},{},{})", t.weight, t.multiplicity, t.information_weight))
        .collect();
    Error::BudgetExhausted(format!(
        "node budget {} exceeded after {nodes} nodes; partial, uncertified terms: {}",
        limits.node_budget,
        listed.join(" ")
    ))
}

/// Largest frame length accepted by [`brute_force_spectrum`].
pub const BRUTE_FORCE_MAX_N: usize = 20;

/// Spectrum by encoding every nonzero input; the reference for the search.
pub fn brute_force_spectrum(cfg: &TurboCodeConfig, d_max: u32) -> Result<DistanceSpectrum> {
    let n = cfg.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::InvalidParameter(format!(
            "brute force limited to N <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let mut acc = Accumulator::default();
    let mut info = vec![0u8; n];
    for x in 1u32..(1 << n) {
        for (i, b) in info.iter_mut().enumerate() {
            *b = ((x >> i) & 1) as u8;
        }
        let d = turbo_encode(cfg, &info)?.weight();
        if d <= d_max {
            let support = (0..n as u32).filter(|&i| (x >> i) & 1 == 1).collect::<Vec<_>>();
            acc.add(d, x.count_ones(), &support);
        }
    }
    Ok(acc.finish(&SearchLimits::new(d_max)))
}

/// Free-distance term with adaptive `d_max`; see [`SpectrumSearcher::free_distance`].
pub fn free_distance_stats_from(cfg: &TurboCodeConfig, start: u32, limit: u32) -> Result<DistanceSpectrum> {
    SpectrumSearcher::for_config(cfg).free_distance(&cfg.interleaver, start, limit)
}

/// `(d_free, N_free, w_free)` of one configuration.
pub fn free_distance_stats(cfg: &TurboCodeConfig) -> Result<SpectrumTerm> {
    let s = free_distance_stats_from(cfg, 10, 64)?;
    Ok(s.terms[0])
}

/// Which parity positions of an isolated trellis event survive puncturing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventPhase {
    Unpunctured,
    /// The parity bit at the event's first offset survives, then every other one.
    StartKept,
    /// The parity bit at the event's first offset is dropped.
    StartDropped,
}

impl EventPhase {
    #[inline]
    fn keeps(self, offset: usize) -> bool {
        match self {
            EventPhase::Unpunctured => true,
            EventPhase::StartKept => offset & 1 == 0,
            EventPhase::StartDropped => offset & 1 == 1,
        }
    }
}

/// A trellis path that leaves the zero state at offset 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimpleEvent {
    pub phase: EventPhase,
    /// Offsets of the input ones; the first is 0.
    pub inputs: Vec<u32>,
    /// Number of trellis steps until the path re-enters the zero state (or the horizon).
    pub span: u32,
    /// Surviving parity weight under `phase`.
    pub parity_weight: u32,
    /// Parity weight before puncturing.
    pub full_parity_weight: u32,
    /// True if the path is still away from the zero state at the horizon.
    pub terminal: bool,
}

impl SimpleEvent {
    pub fn input_weight(&self) -> u32 {
        self.inputs.len() as u32
    }

    /// Input weight plus surviving parity weight.
    pub fn weight(&self) -> u32 {
        self.input_weight() + self.parity_weight
    }
}

/// All events whose input weight plus surviving parity weight is at most `cap`.
///
/// With `horizon = Some(h)`, paths still diverged after `h` steps are reported
/// as terminal events of span `h`; otherwise only remerging events are listed.
/// Spans are limited to `max_span` steps.
pub fn enumerate_simple_events(
    spec: &RscSpec,
    cap: u32,
    phase: EventPhase,
    horizon: Option<usize>,
    max_span: usize,
) -> Result<Vec<SimpleEvent>> {
    if cap < 1 {
        return Err(Error::InvalidParameter("event weight cap must be >= 1".into()));
    }
    let ns = spec.num_states();
    let (next, par) = spec.tables();
    let limit = horizon.map_or(max_span, |h| h.min(max_span));
    // cheapest return to zero from (state, offset parity); Bellman-Ford style fixpoint
    let mut ret = vec![[u32::MAX; 2]; ns];
    ret[0] = [0, 0];
    loop {
        let mut changed = false;
        for s in 1..ns {
            for ph in 0..2 {
                let mut best = ret[s][ph];
                for u in 0..2 {
                    let k = 2 * s + u;
                    let r = ret[next[k]][ph ^ 1];
                    if r != u32::MAX {
                        let cost = u as u32 + if phase.keeps(ph) { par[k] as u32 } else { 0 } + r;
                        best = best.min(cost);
                    }
                }
                if best < ret[s][ph] {
                    ret[s][ph] = best;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    struct Ctx<'a> {
        next: &'a [usize],
        par: &'a [u8],
        ret: &'a [[u32; 2]],
        phase: EventPhase,
        cap: u32,
        limit: usize,
        terminal: bool,
        inputs: Vec<u32>,
        out: Vec<SimpleEvent>,
    }
    fn go(ctx: &mut Ctx, t: usize, s: usize, g: u32, pw: u32, full: u32) {
        if s == 0 {
            ctx.out.push(SimpleEvent {
                phase: ctx.phase,
                inputs: ctx.inputs.clone(),
                span: t as u32,
                parity_weight: pw,
                full_parity_weight: full,
                terminal: false,
            });
            return;
        }
        if t == ctx.limit {
            if ctx.terminal {
                ctx.out.push(SimpleEvent {
                    phase: ctx.phase,
                    inputs: ctx.inputs.clone(),
                    span: t as u32,
                    parity_weight: pw,
                    full_parity_weight: full,
                    terminal: true,
                });
            }
            return;
        }
        for u in 0..2 {
            let k = 2 * s + u;
            let p = ctx.par[k] as u32;
            let kept = if ctx.phase.keeps(t) { p } else { 0 };
            let g1 = g + u as u32 + kept;
            let nx = ctx.next[k];
            let lb = if ctx.terminal { 0 } else { ctx.ret[nx][(t + 1) & 1] };
            if lb == u32::MAX || g1 + lb > ctx.cap {
                continue;
            }
            if u == 1 {
                ctx.inputs.push(t as u32);
            }
            go(ctx, t + 1, nx, g1, pw + kept, full + p);
            if u == 1 {
                ctx.inputs.pop();
            }
        }
    }

    let mut ctx = Ctx {
        next: &next,
        par: &par,
        ret: &ret,
        phase,
        cap,
        limit,
        terminal: horizon.is_some(),
        inputs: vec![0],
        out: Vec::new(),
    };
    let (s1, p1) = (next[1], par[1] as u32);
    let kept = if phase.keeps(0) { p1 } else { 0 };
    if kept < cap {
        go(&mut ctx, 1, s1, 1 + kept, kept, p1);
    }
    let mut out = ctx.out;
    out.sort_by(|a, b| (a.weight(), a.span, &a.inputs).cmp(&(b.weight(), b.span, &b.inputs)));
    Ok(out)
}
