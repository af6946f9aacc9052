//! Rate-1/2 parallel concatenated encoder with alternate parity puncturing,
//! and the iterative log-MAP decoder.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::interleave::Permutation;
use crate::poly::RscSpec;

/// Which index parity carries the first encoder's parity bit. The second
/// encoder's parity survives on the complementary index parity of the
/// interleaved stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum PuncturePhase {
    #[default]
    P1AtEvenIndex,
    P1AtOddIndex,
}

impl PuncturePhase {
    #[inline]
    pub fn keeps_parity1(self, i: usize) -> bool {
        match self {
            PuncturePhase::P1AtEvenIndex => i & 1 == 0,
            PuncturePhase::P1AtOddIndex => i & 1 == 1,
        }
    }

    #[inline]
    pub fn keeps_parity2(self, j: usize) -> bool {
        !self.keeps_parity1(j)
    }
}

impl fmt::Display for PuncturePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PuncturePhase::P1AtEvenIndex => "even",
            PuncturePhase::P1AtOddIndex => "odd",
        })
    }
}

impl FromStr for PuncturePhase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(PuncturePhase::P1AtEvenIndex),
            "odd" => Ok(PuncturePhase::P1AtOddIndex),
            _ => Err(Error::InvalidParameter(format!("unknown puncture phase {s:?}"))),
        }
    }
}

/// Trellis termination applied to the constituent encoders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Termination {
    None,
    /// Only the first encoder is driven back to the zero state.
    FirstOnly,
    /// Both encoders append their own tail, transmitted unpunctured.
    #[default]
    Both,
    /// Both encoders are terminated; the second encoder's tail sends only its
    /// parity bits.
    BothSecondParityOnly,
}

impl Termination {
    pub fn first(self) -> bool {
        !matches!(self, Termination::None)
    }

    pub fn second(self) -> bool {
        matches!(self, Termination::Both | Termination::BothSecondParityOnly)
    }

    /// Whether the second encoder's tail input bits are transmitted.
    pub fn second_tail_systematic(self) -> bool {
        matches!(self, Termination::Both)
    }

    pub const ALL: [Termination; 4] = [
        Termination::None,
        Termination::FirstOnly,
        Termination::Both,
        Termination::BothSecondParityOnly,
    ];
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::None => "none",
            Termination::FirstOnly => "first",
            Termination::Both => "both",
            Termination::BothSecondParityOnly => "both-p2",
        })
    }
}

impl FromStr for Termination {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Termination::None),
            "first" => Ok(Termination::FirstOnly),
            "both" => Ok(Termination::Both),
            "both-p2" => Ok(Termination::BothSecondParityOnly),
            _ => Err(Error::InvalidParameter(format!("unknown termination {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TurboCodeConfig {
    pub constituent: RscSpec,
    pub interleaver: Permutation,
    pub phase: PuncturePhase,
    pub termination: Termination,
}

impl TurboCodeConfig {
    pub fn new(constituent: RscSpec, interleaver: Permutation, phase: PuncturePhase, termination: Termination) -> Self {
        Self {
            constituent,
            interleaver,
            phase,
            termination,
        }
    }

    /// Frame length.
    pub fn n(&self) -> usize {
        self.interleaver.len()
    }

    /// Nominal code rate, ignoring tail overhead.
    pub fn nominal_rate(&self) -> f64 {
        0.5
    }

    pub fn tail_len(&self) -> usize {
        self.constituent.memory() as usize
    }

    /// Transmitted tail bits (systematic and parity, both encoders).
    pub fn overhead(&self) -> usize {
        let m = self.tail_len();
        let t = self.termination;
        let second = if t.second_tail_systematic() { 2 * m } else { m };
        2 * m * t.first() as usize + second * t.second() as usize
    }

    pub fn transmitted_len(&self) -> usize {
        2 * self.n() + self.overhead()
    }
}

/// Encoded frame. `parity[t]` is the surviving parity bit at time `t`: the
/// first encoder's where the phase keeps it, otherwise the second encoder's
/// bit at interleaved index `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodewordFrame {
    pub systematic: Vec<u8>,
    pub parity: Vec<u8>,
    /// `(systematic, parity)` per tail step; empty when unterminated.
    pub tail1: Vec<(u8, u8)>,
    pub tail2: Vec<(u8, u8)>,
    /// Whether the systematic half of `tail2` is transmitted.
    pub tail2_systematic: bool,
}

impl CodewordFrame {
    pub fn weight(&self) -> u32 {
        let body: u32 = self.systematic.iter().chain(&self.parity).map(|&b| b as u32).sum();
        let t1: u32 = self.tail1.iter().map(|&(u, p)| (u + p) as u32).sum();
        let t2: u32 = self
            .tail2
            .iter()
            .map(|&(u, p)| (u * self.tail2_systematic as u8 + p) as u32)
            .sum();
        body + t1 + t2
    }

    /// Transmission order: systematic, parity, tail 1, tail 2.
    pub fn to_bits(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * self.systematic.len() + 2 * (self.tail1.len() + self.tail2.len()));
        out.extend_from_slice(&self.systematic);
        out.extend_from_slice(&self.parity);
        for &(u, p) in &self.tail1 {
            out.push(u);
            out.push(p);
        }
        for &(u, p) in &self.tail2 {
            if self.tail2_systematic {
                out.push(u);
            }
            out.push(p);
        }
        out
    }

    pub fn xor(&self, other: &CodewordFrame) -> CodewordFrame {
        let x = |a: &[u8], b: &[u8]| a.iter().zip(b).map(|(x, y)| x ^ y).collect();
        let xt = |a: &[(u8, u8)], b: &[(u8, u8)]| a.iter().zip(b).map(|(x, y)| (x.0 ^ y.0, x.1 ^ y.1)).collect();
        CodewordFrame {
            systematic: x(&self.systematic, &other.systematic),
            parity: x(&self.parity, &other.parity),
            tail1: xt(&self.tail1, &other.tail1),
            tail2: xt(&self.tail2, &other.tail2),
            tail2_systematic: self.tail2_systematic,
        }
    }
}

/// Channel LLRs laid out like [`CodewordFrame`]; positive favours bit 0.
/// Untransmitted tail bits carry LLR 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrFrame {
    pub systematic: Vec<f64>,
    pub parity: Vec<f64>,
    pub tail1: Vec<(f64, f64)>,
    pub tail2: Vec<(f64, f64)>,
}

impl LlrFrame {
    /// Splits a flat LLR vector in transmission order.
    pub fn from_flat(cfg: &TurboCodeConfig, llr: &[f64]) -> Result<Self> {
        let n = cfg.n();
        if llr.len() != cfg.transmitted_len() {
            return Err(Error::LengthMismatch {
                expected: cfg.transmitted_len(),
                actual: llr.len(),
            });
        }
        let m = cfg.tail_len();
        let pairs = |s: &[f64]| s.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();
        let mut off = 2 * n;
        let tail1 = if cfg.termination.first() {
            off += 2 * m;
            pairs(&llr[2 * n..off])
        } else {
            Vec::new()
        };
        let tail2 = if cfg.termination.second_tail_systematic() {
            pairs(&llr[off..off + 2 * m])
        } else if cfg.termination.second() {
            llr[off..off + m].iter().map(|&p| (0.0, p)).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            systematic: llr[..n].to_vec(),
            parity: llr[n..2 * n].to_vec(),
            tail1,
            tail2,
        })
    }

    pub fn zeros(cfg: &TurboCodeConfig) -> Self {
        Self::from_flat(cfg, &vec![0.0; cfg.transmitted_len()]).expect("sized from cfg")
    }

    fn check(&self, cfg: &TurboCodeConfig) -> Result<()> {
        let n = cfg.n();
        let m = cfg.tail_len();
        let want = [
            (self.systematic.len(), n),
            (self.parity.len(), n),
            (self.tail1.len(), if cfg.termination.first() { m } else { 0 }),
            (self.tail2.len(), if cfg.termination.second() { m } else { 0 }),
        ];
        for (actual, expected) in want {
            if actual != expected {
                return Err(Error::LengthMismatch { expected, actual });
            }
        }
        Ok(())
    }
}

pub fn turbo_encode(cfg: &TurboCodeConfig, info: &[u8]) -> Result<CodewordFrame> {
    let n = cfg.n();
    if info.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: info.len(),
        });
    }
    let rsc = &cfg.constituent;
    let (p1, s1) = rsc.encode(info);
    let interleaved = cfg.interleaver.permute(info);
    let (p2, s2) = rsc.encode(&interleaved);
    let parity = (0..n)
        .map(|t| if cfg.phase.keeps_parity1(t) { p1[t] } else { p2[t] })
        .collect();
    Ok(CodewordFrame {
        systematic: info.to_vec(),
        parity,
        tail1: if cfg.termination.first() {
            rsc.tail(s1)
        } else {
            Vec::new()
        },
        tail2: if cfg.termination.second() {
            rsc.tail(s2)
        } else {
            Vec::new()
        },
        tail2_systematic: cfg.termination.second_tail_systematic(),
    })
}

/// Pairwise combining rule of the forward/backward recursions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MaxStar {
    /// `max(a, b) + ln(1 + e^{-|a-b|})`
    #[default]
    Exact,
    /// `max(a, b)`
    MaxLog,
}

impl MaxStar {
    #[inline]
    fn apply(self, a: f64, b: f64) -> f64 {
        let m = a.max(b);
        match self {
            MaxStar::MaxLog => m,
            MaxStar::Exact => {
                if m == f64::NEG_INFINITY {
                    m
                } else {
                    m + (-(a - b).abs()).exp().ln_1p()
                }
            }
        }
    }
}

/// Soft-in soft-out log-MAP (BCJR) pass over one constituent trellis.
///
/// Returns the extrinsic LLRs: posterior minus systematic channel LLR minus
/// a-priori LLR. `tail` carries the channel LLRs of a terminated trellis, whose
/// final state is then pinned to zero; `None` leaves the final state free.
pub fn siso_logmap(
    spec: &RscSpec,
    systematic: &[f64],
    parity: &[f64],
    apriori: &[f64],
    tail: Option<&[(f64, f64)]>,
    rule: MaxStar,
) -> Result<Vec<f64>> {
    let n = systematic.len();
    for len in [parity.len(), apriori.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    if let Some(t) = tail {
        if t.len() != spec.memory() as usize {
            return Err(Error::LengthMismatch {
                expected: spec.memory() as usize,
                actual: t.len(),
            });
        }
    }
    let ns = spec.num_states();
    let (next, par) = spec.tables();
    let tail_len = tail.map_or(0, <[_]>::len);
    let steps = n + tail_len;
    const NEG: f64 = f64::NEG_INFINITY;

    // sign(b) = +1 for bit 0
    let sgn = |b: u8| 1.0 - 2.0 * b as f64;
    let gamma = |t: usize, s: usize, u: u8| -> f64 {
        if t < n {
            0.5 * (systematic[t] + apriori[t]) * sgn(u) + 0.5 * parity[t] * sgn(par[2 * s + u as usize])
        } else {
            let (ls, lp) = tail.unwrap()[t - n];
            0.5 * ls * sgn(u) + 0.5 * lp * sgn(par[2 * s + u as usize])
        }
    };

    let mut alpha = vec![NEG; (steps + 1) * ns];
    alpha[0] = 0.0;
    for t in 0..steps {
        let (cur, rest) = alpha[t * ns..].split_at_mut(ns);
        let nxt = &mut rest[..ns];
        for s in 0..ns {
            let a = cur[s];
            if a == NEG {
                continue;
            }
            let inputs: &[u8] = if t < n { &[0, 1] } else { &[spec.tail_input(s)][..] };
            for &u in inputs {
                let k = 2 * s + u as usize;
                let ns_ = next[k];
                nxt[ns_] = rule.apply(nxt[ns_], a + gamma(t, s, u));
            }
        }
        let norm = nxt.iter().cloned().fold(NEG, f64::max);
        if norm.is_finite() {
            nxt.iter_mut().for_each(|x| *x -= norm);
        }
    }

    let mut beta = vec![NEG; (steps + 1) * ns];
    if tail.is_some() {
        beta[steps * ns] = 0.0;
    } else {
        beta[steps * ns..].iter_mut().for_each(|b| *b = 0.0);
    }
    for t in (0..steps).rev() {
        let (cur, rest) = beta[t * ns..].split_at_mut(ns);
        let nxt = &rest[..ns];
        for s in 0..ns {
            let inputs: &[u8] = if t < n { &[0, 1] } else { &[spec.tail_input(s)][..] };
            let mut acc = NEG;
            for &u in inputs {
                let k = 2 * s + u as usize;
                acc = rule.apply(acc, nxt[next[k]] + gamma(t, s, u));
            }
            cur[s] = acc;
        }
        let norm = cur.iter().cloned().fold(NEG, f64::max);
        if norm.is_finite() {
            cur.iter_mut().for_each(|x| *x -= norm);
        }
    }

    let mut ext = vec![0.0; n];
    for t in 0..n {
        let mut num = [NEG, NEG];
        for s in 0..ns {
            let a = alpha[t * ns + s];
            if a == NEG {
                continue;
            }
            for u in 0..2u8 {
                let k = 2 * s + u as usize;
                let b = beta[(t + 1) * ns + next[k]];
                let v = a + 0.5 * parity[t] * sgn(par[k]) + b;
                num[u as usize] = rule.apply(num[u as usize], v);
            }
        }
        ext[t] = num[0] - num[1];
    }
    Ok(ext)
}

/// Result of iterative decoding.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutput {
    pub bits: Vec<u8>,
    pub posterior: Vec<f64>,
}

pub fn turbo_decode(cfg: &TurboCodeConfig, llr: &LlrFrame, iterations: usize) -> Result<DecodeOutput> {
    turbo_decode_with(cfg, llr, iterations, MaxStar::Exact)
}

pub fn turbo_decode_with(
    cfg: &TurboCodeConfig,
    llr: &LlrFrame,
    iterations: usize,
    rule: MaxStar,
) -> Result<DecodeOutput> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    llr.check(cfg)?;
    let n = cfg.n();
    let pi = &cfg.interleaver;
    let rsc = &cfg.constituent;

    // depuncture: the dropped parity of each encoder carries LLR 0
    let mut p1 = vec![0.0; n];
    let mut p2 = vec![0.0; n];
    for t in 0..n {
        if cfg.phase.keeps_parity1(t) {
            p1[t] = llr.parity[t];
        } else {
            p2[t] = llr.parity[t];
        }
    }
    let sys2 = pi.permute(&llr.systematic);
    let tail1 = cfg.termination.first().then_some(&llr.tail1[..]);
    let tail2 = cfg.termination.second().then_some(&llr.tail2[..]);

    let mut apriori1 = vec![0.0; n];
    let mut ext1 = vec![0.0; n];
    for _ in 0..iterations {
        ext1 = siso_logmap(rsc, &llr.systematic, &p1, &apriori1, tail1, rule)?;
        let apriori2 = pi.permute(&ext1);
        let ext2 = siso_logmap(rsc, &sys2, &p2, &apriori2, tail2, rule)?;
        apriori1 = pi.depermute(&ext2);
    }
    let posterior: Vec<f64> = (0..n).map(|i| llr.systematic[i] + ext1[i] + apriori1[i]).collect();
    let bits = posterior.iter().map(|&l| (l < 0.0) as u8).collect();
    Ok(DecodeOutput { bits, posterior })
}
