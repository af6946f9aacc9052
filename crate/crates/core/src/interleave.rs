//! Interleaver construction (random, random odd-even, high-spread, block) and
//! the permutation metrics used to compare them.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng as _;

use crate::codec::PuncturePhase;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Construction family of a permutation, kept for provenance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Identity,
    Random,
    RandomOddEven,
    Hsr { s: u32 },
    HsrOddEven { s: u32 },
    Block { rows: u32, cols: u32 },
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Identity => f.write_str("identity"),
            Family::Random => f.write_str("random"),
            Family::RandomOddEven => f.write_str("random-oe"),
            Family::Hsr { .. } => f.write_str("hsr"),
            Family::HsrOddEven { .. } => f.write_str("hsr-oe"),
            Family::Block { .. } => f.write_str("block"),
            Family::Custom => f.write_str("custom"),
        }
    }
}

impl Family {
    /// Family parameters as `key=value` pairs separated by `;`.
    pub fn params(&self) -> String {
        match self {
            Family::Hsr { s } | Family::HsrOddEven { s } => format!("s={s}"),
            Family::Block { rows, cols } => format!("rows={rows};cols={cols}"),
            _ => String::new(),
        }
    }
}

/// A bijection on `0..N`; `table[i]` is the output position of input bit `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    table: Vec<u32>,
    inverse: Vec<u32>,
    family: Family,
    seed: Option<u64>,
}

impl Permutation {
    pub fn new(table: Vec<u32>, family: Family, seed: Option<u64>) -> Result<Self> {
        let n = table.len();
        if n < 2 {
            return Err(Error::InvalidPermutation(format!("length {n} < 2")));
        }
        let mut inverse = vec![u32::MAX; n];
        for (i, &t) in table.iter().enumerate() {
            let t = t as usize;
            if t >= n {
                return Err(Error::InvalidPermutation(format!("entry {t} out of range at {i}")));
            }
            if inverse[t] != u32::MAX {
                return Err(Error::InvalidPermutation(format!("duplicate entry {t}")));
            }
            inverse[t] = i as u32;
        }
        Ok(Self {
            table,
            inverse,
            family,
            seed,
        })
    }

    pub fn from_table(table: Vec<u32>) -> Result<Self> {
        Self::new(table, Family::Custom, None)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n as u32).collect(), Family::Identity, None)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    #[inline]
    pub fn map(&self, i: usize) -> usize {
        self.table[i] as usize
    }

    #[inline]
    pub fn unmap(&self, j: usize) -> usize {
        self.inverse[j] as usize
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn inverse_table(&self) -> &[u32] {
        &self.inverse
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        let table = other.table.iter().map(|&i| self.table[i as usize]).collect();
        Self::new(table, Family::Custom, None)
    }

    /// `x_out[π(i)] = x_in[i]`.
    pub fn permute<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.inverse.iter().map(|&i| input[i as usize]).collect()
    }

    /// Inverse of [`Permutation::permute`].
    pub fn depermute<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.table.iter().map(|&j| input[j as usize]).collect()
    }

    /// Interleaver file text: `N` on the first line, then one image per line.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 5 + 8);
        s.push_str(&self.len().to_string());
        s.push('\n');
        for t in &self.table {
            s.push_str(&t.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty interleaver file".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|e| Error::Parse {
            line: 1,
            msg: format!("bad length: {e}"),
        })?;
        let mut table = Vec::with_capacity(n);
        for (ln, l) in lines {
            if l.trim().is_empty() {
                continue;
            }
            let v: u32 = l.trim().parse().map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("bad entry: {e}"),
            })?;
            table.push(v);
        }
        if table.len() != n {
            return Err(Error::Parse {
                line: n + 1,
                msg: format!("expected {n} entries, found {}", table.len()),
            });
        }
        Self::new(table, Family::Custom, None)
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidParameter(format!("interleaver length {n} < 2")))
    } else {
        Ok(())
    }
}

/// Uniform random permutation (Fisher-Yates).
pub fn gen_random(n: usize, seed: u64) -> Result<Permutation> {
    check_len(n)?;
    let mut rng = rng_from_seed(seed);
    let mut table: Vec<u32> = (0..n as u32).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        table.swap(i, j);
    }
    Permutation::new(table, Family::Random, Some(seed))
}

/// Random odd-even permutation: each position draws its image uniformly from
/// the unused positions of its own parity class.
pub fn gen_random_oddeven(n: usize, seed: u64) -> Result<Permutation> {
    check_len(n)?;
    let mut rng = rng_from_seed(seed);
    let mut pools: [Vec<u32>; 2] = [(0..n as u32).step_by(2).collect(), (1..n as u32).step_by(2).collect()];
    let table = (0..n)
        .map(|i| {
            let pool = &mut pools[i & 1];
            let k = rng.gen_range(0..pool.len());
            pool.swap_remove(k)
        })
        .collect();
    Permutation::new(table, Family::RandomOddEven, Some(seed))
}

/// Effort limits for the high-spread constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HsrBudget {
    /// Dead-ends tolerated (each repaired by backtracking) before a full restart.
    pub dead_ends_per_restart: u32,
    pub max_restarts: u32,
}

impl Default for HsrBudget {
    fn default() -> Self {
        Self {
            dead_ends_per_restart: 100,
            max_restarts: 10_000,
        }
    }
}

/// Largest spread parameter accepted for length `n`: `floor(sqrt(2n))`.
pub fn spread_ceiling(n: usize) -> u32 {
    ((2 * n) as f64).sqrt().floor() as u32
}

/// High-spread random permutation with spread greater than `s`.
pub fn gen_hsr(n: usize, s: u32, seed: u64, budget: HsrBudget) -> Result<Permutation> {
    let table = hsr_fill(n, s, false, seed, budget)?;
    Permutation::new(table, Family::Hsr { s }, Some(seed))
}

/// High-spread random odd-even permutation.
pub fn gen_hsr_oddeven(n: usize, s: u32, seed: u64, budget: HsrBudget) -> Result<Permutation> {
    let table = hsr_fill(n, s, true, seed, budget)?;
    Permutation::new(table, Family::HsrOddEven { s }, Some(seed))
}

/// Randomized sequential fill. Position `i` takes a uniformly chosen unused
/// image `v` with `|v - π(j)| > s - (i - j)` for every `j` in the last `s - 1`
/// positions. A dead-end backtracks a random number of placements; too many
/// dead-ends trigger a full restart.
fn hsr_fill(n: usize, s: u32, odd_even: bool, seed: u64, budget: HsrBudget) -> Result<Vec<u32>> {
    check_len(n)?;
    if s < 1 {
        return Err(Error::InvalidParameter("spread parameter must be >= 1".into()));
    }
    let ceiling = spread_ceiling(n);
    if s > ceiling {
        return Err(Error::InvalidParameter(format!(
            "S = {s} exceeds the feasibility ceiling {ceiling} for N = {n}"
        )));
    }
    let s = s as usize;
    let mut rng = rng_from_seed(seed);
    // unused images, per parity class when odd-even (else all in class 0)
    let classes = if odd_even { 2 } else { 1 };
    let mut pool: Vec<Vec<u32>> = vec![Vec::new(); classes];
    let mut slot = vec![0usize; n];
    let mut table = vec![0u32; n];
    let mut candidates = Vec::with_capacity(n);

    for _restart in 0..budget.max_restarts {
        for p in pool.iter_mut() {
            p.clear();
        }
        for v in 0..n {
            let c = if odd_even { v & 1 } else { 0 };
            slot[v] = pool[c].len();
            pool[c].push(v as u32);
        }
        let mut i = 0;
        let mut dead_ends = 0;
        while i < n {
            // v may follow table[i - d] iff d + |v - table[i - d]| > s
            let free =
                |v: u32, table: &[u32]| (1..s.min(i + 1)).all(|d| (v as usize).abs_diff(table[i - d] as usize) > s - d);
            let c = if odd_even { i & 1 } else { 0 };
            let len = pool[c].len();
            // rejection sampling first, exhaustive filter if that stalls;
            // either way the pick is uniform over the admissible values
            let mut pick = None;
            for _ in 0..8 {
                let v = pool[c][rng.gen_range(0..len)];
                if free(v, &table) {
                    pick = Some(v);
                    break;
                }
            }
            if pick.is_none() {
                candidates.clear();
                candidates.extend(pool[c].iter().copied().filter(|&v| free(v, &table)));
                if !candidates.is_empty() {
                    pick = Some(candidates[rng.gen_range(0..candidates.len())]);
                }
            }
            if let Some(v) = pick {
                let k = slot[v as usize];
                let last = *pool[c].last().unwrap();
                pool[c].swap_remove(k);
                if last != v {
                    slot[last as usize] = k;
                }
                table[i] = v;
                i += 1;
                continue;
            }
            dead_ends += 1;
            if dead_ends > budget.dead_ends_per_restart {
                break;
            }
            let back = rng.gen_range(1..=s.min(i).max(1)).min(i);
            for _ in 0..back {
                i -= 1;
                let v = table[i];
                let c = if odd_even { v as usize & 1 } else { 0 };
                slot[v as usize] = pool[c].len();
                pool[c].push(v);
            }
        }
        if i == n {
            return Ok(table);
        }
    }
    Err(Error::ConstructionFailed(format!(
        "no permutation with spread > {s} found for N = {n} within {} restarts",
        budget.max_restarts
    )))
}

/// Block interleaver: written row-wise into `rows x cols`, read column-wise.
pub fn gen_block(rows: usize, cols: usize) -> Result<Permutation> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("block dimensions must be >= 1".into()));
    }
    let n = rows * cols;
    let table = (0..n).map(|i| ((i % cols) * rows + i / cols) as u32).collect();
    Permutation::new(
        table,
        Family::Block {
            rows: rows as u32,
            cols: cols as u32,
        },
        None,
    )
}

/// `π(i) ≡ i (mod 2)` for every `i`.
pub fn is_odd_even(p: &Permutation) -> bool {
    p.table.iter().enumerate().all(|(i, &t)| (i ^ t as usize) & 1 == 0)
}

/// Minimum of `|i - j| + |π(i) - π(j)|` over distinct pairs, with a witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpreadReport {
    pub spread: u32,
    pub witness: (usize, usize),
}

pub fn spread(p: &Permutation) -> SpreadReport {
    let n = p.len();
    let mut best = u32::MAX;
    let mut witness = (0, 1);
    for i in 0..n {
        let pi = p.table[i] as i64;
        let mut d = 1;
        while i + d < n && (d as u32) < best {
            let v = d as u32 + (pi - p.table[i + d] as i64).unsigned_abs() as u32;
            if v < best {
                best = v;
                witness = (i, i + d);
            }
            d += 1;
        }
    }
    SpreadReport { spread: best, witness }
}

/// Tabulation of how weight-2 patterns at multiples of a cycle length are mapped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingCensus {
    pub cycle_length: u32,
    pub max_input_distance: u32,
    /// input distance -> number of pairs examined
    pub pairs: BTreeMap<u32, u64>,
    /// (input distance, output distance) -> pairs, output distance a multiple of the cycle length
    pub counts: BTreeMap<(u32, u32), u64>,
}

impl PairingCensus {
    /// Fraction of pairs at input distance `d` whose images are also `d` apart.
    pub fn preservation(&self, d: u32) -> f64 {
        let total = self.pairs.get(&d).copied().unwrap_or(0);
        if total == 0 {
            return 0.0;
        }
        self.counts.get(&(d, d)).copied().unwrap_or(0) as f64 / total as f64
    }

    /// Preservation probability at input distance equal to the cycle length.
    pub fn preservation_probability(&self) -> f64 {
        self.preservation(self.cycle_length)
    }

    /// Accumulates another census with the same parameters.
    pub fn merge(&mut self, other: &PairingCensus) {
        for (k, v) in &other.pairs {
            *self.pairs.entry(*k).or_default() += v;
        }
        for (k, v) in &other.counts {
            *self.counts.entry(*k).or_default() += v;
        }
    }
}

pub fn weight2_pairing_census(p: &Permutation, cl: u32, max_input_distance: u32) -> Result<PairingCensus> {
    if cl == 0 {
        return Err(Error::InvalidParameter("cycle length must be >= 1".into()));
    }
    let n = p.len();
    let mut census = PairingCensus {
        cycle_length: cl,
        max_input_distance,
        pairs: BTreeMap::new(),
        counts: BTreeMap::new(),
    };
    let mut d = cl as usize;
    while d <= max_input_distance as usize && d < n {
        census.pairs.insert(d as u32, (n - d) as u64);
        for i in 0..n - d {
            let out = (p.table[i] as i64 - p.table[i + d] as i64).unsigned_abs() as u32;
            if out.is_multiple_of(cl) {
                *census.counts.entry((d as u32, out)).or_default() += 1;
            }
        }
        d += cl as usize;
    }
    Ok(census)
}

/// Per-information-bit count of surviving parity bits after alternate puncturing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UepCoverage {
    pub counts: Vec<u8>,
    pub histogram: [usize; 3],
}

impl UepCoverage {
    pub fn is_uniform(&self) -> bool {
        self.histogram[1] == self.counts.len()
    }
}

pub fn uep_coverage(p: &Permutation, phase: PuncturePhase) -> UepCoverage {
    let counts: Vec<u8> = (0..p.len())
        .map(|i| phase.keeps_parity1(i) as u8 + phase.keeps_parity2(p.map(i)) as u8)
        .collect();
    let mut histogram = [0; 3];
    for &c in &counts {
        histogram[c as usize] += 1;
    }
    UepCoverage { counts, histogram }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transposition(n: usize) -> Permutation {
        let mut t: Vec<u32> = (0..n as u32).collect();
        t.swap(0, 1);
        Permutation::from_table(t).unwrap()
    }

    #[test]
    fn construction_rejects_non_bijections() {
        assert!(Permutation::from_table(vec![0]).is_err());
        assert!(Permutation::from_table(vec![0, 0]).is_err());
        assert!(Permutation::from_table(vec![0, 2]).is_err());
        assert!(gen_random(1, 0).is_err());
        assert!(gen_random_oddeven(0, 0).is_err());
    }

    #[test]
    fn random_is_reproducible() {
        assert_eq!(gen_random(4, 99).unwrap(), gen_random(4, 99).unwrap());
        assert_eq!(gen_random(300, 5).unwrap().table(), gen_random(300, 5).unwrap().table());
        assert_ne!(gen_random(300, 5).unwrap().table(), gen_random(300, 6).unwrap().table());
    }

    #[test]
    fn random_oddeven_small_cases() {
        assert_eq!(gen_random_oddeven(2, 3).unwrap().table(), &[0, 1]);
        for seed in 0..20 {
            assert!(is_odd_even(&gen_random_oddeven(7, seed).unwrap()));
        }
    }

    #[test]
    fn block_examples() {
        let b = gen_block(20, 20).unwrap();
        assert_eq!(b.len(), 400);
        assert!(!is_odd_even(&b));
        let oe = gen_block(21, 19).unwrap();
        assert_eq!(oe.len(), 399);
        assert!(is_odd_even(&oe));
        assert_eq!(
            gen_block(1, 9).unwrap().table(),
            Permutation::identity(9).unwrap().table()
        );
        // i = r*C + c -> c*R + r
        let b = gen_block(2, 3).unwrap();
        assert_eq!(b.table(), &[0, 2, 4, 1, 3, 5]);
        assert!(gen_block(0, 3).is_err());
    }

    #[test]
    fn odd_even_examples() {
        assert!(is_odd_even(&Permutation::identity(10).unwrap()));
        assert!(!is_odd_even(&transposition(10)));
    }

    #[test]
    fn spread_examples() {
        for n in [2, 3, 17] {
            assert_eq!(spread(&Permutation::identity(n).unwrap()).spread, 2);
            let rev = Permutation::from_table((0..n as u32).rev().collect()).unwrap();
            assert_eq!(spread(&rev).spread, 2);
        }
        let p = Permutation::from_table(vec![0, 2, 4, 1, 3]).unwrap();
        let r = spread(&p);
        assert_eq!(r.spread, 3);
        let (i, j) = r.witness;
        assert_eq!(
            (j - i) as u32 + (p.map(i) as i64 - p.map(j) as i64).unsigned_abs() as u32,
            3
        );
    }

    #[test]
    fn hsr_rejects_above_ceiling() {
        assert_eq!(spread_ceiling(512), 32);
        assert!(matches!(
            gen_hsr(512, 33, 0, HsrBudget::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn hsr_meets_spread() {
        let p = gen_hsr(128, 10, 4, HsrBudget::default()).unwrap();
        assert!(spread(&p).spread > 10);
        let p = gen_hsr_oddeven(128, 9, 4, HsrBudget::default()).unwrap();
        assert!(spread(&p).spread > 9);
        assert!(is_odd_even(&p));
    }

    #[test]
    fn hsr_oddeven_fails_when_infeasible() {
        // exhaustive: best spread over all 4!·4! odd-even permutations of 8
        let mut best = 0;
        let evens = permutations(&[0, 2, 4, 6]);
        let odds = permutations(&[1, 3, 5, 7]);
        for e in &evens {
            for o in &odds {
                let t: Vec<u32> = (0..8).map(|i| if i % 2 == 0 { e[i / 2] } else { o[i / 2] }).collect();
                best = best.max(spread(&Permutation::from_table(t).unwrap()).spread);
            }
        }
        let small = HsrBudget {
            dead_ends_per_restart: 50,
            max_restarts: 20,
        };
        // S = best - 1 is feasible; S = best is not
        assert!(gen_hsr_oddeven(8, best - 1, 1, small).is_ok());
        if best <= spread_ceiling(8) {
            assert!(matches!(
                gen_hsr_oddeven(8, best, 1, small),
                Err(Error::ConstructionFailed(_))
            ));
        }
        assert!(gen_hsr_oddeven(8, 6, 1, small).is_err());
    }

    fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for k in 0..items.len() {
            let mut rest = items.to_vec();
            let x = rest.remove(k);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn census_identity() {
        let c = weight2_pairing_census(&Permutation::identity(50).unwrap(), 7, 21).unwrap();
        for d in [7, 14, 21] {
            assert_eq!(c.preservation(d), 1.0);
        }
        assert_eq!(c.pairs[&7], 43);
        assert!(weight2_pairing_census(&Permutation::identity(5).unwrap(), 0, 3).is_err());
    }

    #[test]
    fn uep_examples() {
        let t = transposition(2);
        let cov = uep_coverage(&t, PuncturePhase::P1AtEvenIndex);
        assert_eq!(cov.histogram, [1, 0, 1]);
        let cov = uep_coverage(&gen_random_oddeven(64, 1).unwrap(), PuncturePhase::P1AtOddIndex);
        assert_eq!(cov.histogram, [0, 64, 0]);
        assert!(cov.is_uniform());
    }

    #[test]
    fn text_format() {
        let p = gen_random(5, 1).unwrap();
        let text = p.to_text();
        assert!(text.starts_with("5\n"));
        assert_eq!(text.lines().count(), 6);
        assert!(text.ends_with('\n') && !text.contains(" \n"));
        assert_eq!(Permutation::from_text(&text).unwrap().table(), p.table());
        assert!(matches!(Permutation::from_text("3\n0\n1\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            Permutation::from_text("2\n0\nx\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(Permutation::from_text("2\n0\n0\n").is_err());
    }
}
