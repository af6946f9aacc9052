//! GF(2) polynomial arithmetic and the recursive systematic convolutional
//! (RSC) trellis shared by the encoder, the decoder and the spectrum search.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported encoder memory.
pub const MAX_MEMORY: u32 = 16;

/// A polynomial over GF(2); bit `k` of the mask is the coefficient of `D^k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BinaryPolynomial(u32);

impl BinaryPolynomial {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    /// Builds a polynomial from its coefficient mask. Masks wider than
    /// `MAX_MEMORY + 1` taps are rejected.
    pub fn new(mask: u32) -> Result<Self> {
        if mask >> (MAX_MEMORY + 1) != 0 {
            return Err(Error::InvalidPolynomial(format!(
                "{mask:#o} exceeds {} taps",
                MAX_MEMORY + 1
            )));
        }
        Ok(Self(mask))
    }

    /// `1 + D^k`.
    pub fn one_plus_d_pow(k: u32) -> Result<Self> {
        if k > MAX_MEMORY {
            return Err(Error::InvalidPolynomial(format!("1+D^{k} exceeds supported degree")));
        }
        Ok(Self(1 | (1 << k)))
    }

    /// Parses an octal string where bit `k` of the value is the coefficient of `D^k`
    /// (so `"15"` is `1 + D^2 + D^3`).
    pub fn from_octal(s: &str) -> Result<Self> {
        let v = u32::from_str_radix(s.trim(), 8).map_err(|e| Error::InvalidPolynomial(format!("{s:?}: {e}")))?;
        Self::new(v)
    }

    pub fn to_octal(self) -> String {
        format!("{:o}", self.0)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(self) -> Option<u32> {
        (self.0 != 0).then(|| 31 - self.0.leading_zeros())
    }

    pub fn coeff(self, k: u32) -> bool {
        k < 32 && (self.0 >> k) & 1 == 1
    }

    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    /// Remainder of `self` divided by `modulus`.
    pub fn rem(self, modulus: Self) -> Result<Self> {
        poly_mod(self, modulus)
    }
}

impl fmt::Debug for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryPolynomial({self})")
    }
}

impl fmt::Display for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return f.write_str("0");
        }
        let mut first = true;
        for k in 0..32 {
            if self.coeff(k) {
                if !first {
                    f.write_str("+")?;
                }
                first = false;
                match k {
                    0 => f.write_str("1")?,
                    1 => f.write_str("D")?,
                    _ => write!(f, "D^{k}")?,
                }
            }
        }
        Ok(())
    }
}

/// `a mod p` over GF(2).
pub fn poly_mod(a: BinaryPolynomial, p: BinaryPolynomial) -> Result<BinaryPolynomial> {
    let dp = p.degree().ok_or(Error::ZeroModulus)?;
    let mut r = a.0;
    while r != 0 {
        let dr = 31 - r.leading_zeros();
        if dr < dp {
            break;
        }
        r ^= p.0 << (dr - dp);
    }
    Ok(BinaryPolynomial(r))
}

/// Smallest `k >= 1` with `p(D) | 1 + D^k`.
///
/// Computed by tracking `D^k mod p` (the polynomial need not be irreducible), so
/// `k` may exceed the supported polynomial degree. The result never exceeds
/// `2^deg(p) - 1`.
pub fn cycle_length(p: BinaryPolynomial) -> Result<u32> {
    let d = match p.degree() {
        Some(d) if d >= 1 && p.coeff(0) => d,
        _ => return Err(Error::NoCycle(p.0)),
    };
    let top = 1u32 << d;
    // x = D^k mod p
    let mut x = 1u32;
    for k in 1..top {
        x <<= 1;
        if x & top != 0 {
            x ^= p.0;
        }
        if x == 1 {
            return Ok(k);
        }
    }
    unreachable!("D is invertible modulo a polynomial with unit constant term")
}

/// A recursive systematic convolutional constituent code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct RscSpec {
    feedback: BinaryPolynomial,
    feedforward: BinaryPolynomial,
    memory: u32,
}

impl RscSpec {
    pub fn new(feedback: BinaryPolynomial, feedforward: BinaryPolynomial) -> Result<Self> {
        let memory = match feedback.degree() {
            Some(m) if m >= 1 && feedback.coeff(0) => m,
            _ => {
                return Err(Error::InvalidPolynomial(format!(
                    "feedback {feedback} must have constant term 1 and degree >= 1"
                )))
            }
        };
        if memory > MAX_MEMORY {
            return Err(Error::InvalidPolynomial(format!("memory {memory} > {MAX_MEMORY}")));
        }
        if feedforward.is_zero() || feedforward.degree().unwrap() > memory {
            return Err(Error::InvalidPolynomial(format!(
                "feedforward {feedforward} must be nonzero with degree <= {memory}"
            )));
        }
        Ok(Self {
            feedback,
            feedforward,
            memory,
        })
    }

    /// Parses a pair of octal polynomial strings.
    pub fn from_octal(feedback: &str, feedforward: &str) -> Result<Self> {
        Self::new(
            BinaryPolynomial::from_octal(feedback)?,
            BinaryPolynomial::from_octal(feedforward)?,
        )
    }

    /// LTE constituent: feedback `1+D^2+D^3`, feedforward `1+D+D^3`.
    pub fn lte() -> Self {
        Self::new(BinaryPolynomial(0b1101), BinaryPolynomial(0b1011)).unwrap()
    }

    /// Berrou constituent: feedback `1+D+D^2+D^3+D^4`, feedforward `1+D^4`.
    pub fn berrou() -> Self {
        Self::new(BinaryPolynomial(0b11111), BinaryPolynomial(0b10001)).unwrap()
    }

    pub fn feedback(&self) -> BinaryPolynomial {
        self.feedback
    }

    pub fn feedforward(&self) -> BinaryPolynomial {
        self.feedforward
    }

    pub fn memory(&self) -> u32 {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    /// Cycle length of the feedback polynomial.
    pub fn cycle_length(&self) -> u32 {
        cycle_length(self.feedback).expect("validated on construction")
    }

    /// One trellis transition: returns `(next_state, parity)`.
    ///
    /// Bit `k-1` of the state holds the register value `a_{t-k}`; the new
    /// register value is `a_t = u_t + sum_k g0_k a_{t-k}`.
    pub fn step(&self, state: usize, input: u8) -> Result<(usize, u8)> {
        if state >= self.num_states() {
            return Err(Error::StateOutOfRange {
                state,
                memory: self.memory,
            });
        }
        Ok(self.step_unchecked(state, input))
    }

    #[inline]
    pub(crate) fn step_unchecked(&self, state: usize, input: u8) -> (usize, u8) {
        let s = state as u32;
        let fb = ((self.feedback.0 >> 1) & s).count_ones() & 1;
        let a = (input as u32 & 1) ^ fb;
        let reg = (s << 1) | a;
        let parity = (self.feedforward.0 & reg).count_ones() & 1;
        let next = reg & ((1 << self.memory) - 1);
        (next as usize, parity as u8)
    }

    /// Input bit that zeroes the register feedback from `state`, i.e. drives the
    /// trellis toward the zero state.
    #[inline]
    pub fn tail_input(&self, state: usize) -> u8 {
        (((self.feedback.0 >> 1) & state as u32).count_ones() & 1) as u8
    }

    /// The `m` tail steps from `state`: `(systematic, parity)` per step.
    pub fn tail(&self, state: usize) -> Vec<(u8, u8)> {
        let mut s = state;
        (0..self.memory)
            .map(|_| {
                let u = self.tail_input(s);
                let (ns, p) = self.step_unchecked(s, u);
                s = ns;
                (u, p)
            })
            .collect()
    }

    /// Total Hamming weight (systematic + parity) of the tail from `state`.
    pub fn tail_weight(&self, state: usize) -> u32 {
        self.tail(state).iter().map(|&(u, p)| (u + p) as u32).sum()
    }

    /// Runs `input` from the zero state; returns the parity bits and final state.
    pub fn encode(&self, input: &[u8]) -> (Vec<u8>, usize) {
        let mut s = 0;
        let parity = input
            .iter()
            .map(|&u| {
                let (ns, p) = self.step_unchecked(s, u);
                s = ns;
                p
            })
            .collect();
        (parity, s)
    }

    /// Dense transition tables indexed by `state * 2 + input`.
    pub(crate) fn tables(&self) -> (Vec<usize>, Vec<u8>) {
        let ns = self.num_states();
        let mut next = Vec::with_capacity(2 * ns);
        let mut par = Vec::with_capacity(2 * ns);
        for s in 0..ns {
            for u in 0..2 {
                let (n, p) = self.step_unchecked(s, u);
                next.push(n);
                par.push(p);
            }
        }
        (next, par)
    }
}

/// Parity Hamming weight of running `input` from the zero state. With
/// `terminate`, the feedback-cancelling tail is appended and its parity counted.
pub fn parity_weight_of_input(spec: &RscSpec, input: &[u8], terminate: bool) -> u32 {
    let (parity, state) = spec.encode(input);
    let mut w: u32 = parity.iter().map(|&p| p as u32).sum();
    if terminate {
        w += spec.tail(state).iter().map(|&(_, p)| p as u32).sum::<u32>();
    }
    w
}
