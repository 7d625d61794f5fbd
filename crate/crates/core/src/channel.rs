//! The trapdoor channel as a unifilar finite-state channel.
//!
//! The channel holds one ball. The transmitter inserts a ball and the
//! receiver gets one of the two balls uniformly at random; the other stays
//! behind as the new state. The next state is therefore the XOR of the old
//! state, the input and the output.

use std::fmt;
use std::ops::BitXor;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary symbol (ball label, channel input/output, action bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub const ALL: [Bit; 2] = [Bit::Zero, Bit::One];

    pub fn as_u8(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    pub fn index(self) -> usize {
        self.as_u8() as usize
    }

    pub fn from_index(i: usize) -> Option<Bit> {
        match i {
            0 => Some(Bit::Zero),
            1 => Some(Bit::One),
            _ => None,
        }
    }

    pub fn from_char(c: char) -> Option<Bit> {
        match c {
            '0' => Some(Bit::Zero),
            '1' => Some(Bit::One),
            _ => None,
        }
    }

    pub fn flip(self) -> Bit {
        self ^ Bit::One
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

impl BitXor for Bit {
    type Output = Bit;
    fn bitxor(self, rhs: Bit) -> Bit {
        Bit::from(self != rhs)
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Parse an ASCII `0`/`1` string.
pub fn parse_bits(s: &str) -> Option<Vec<Bit>> {
    s.trim().chars().map(Bit::from_char).collect()
}

pub fn format_bits(bits: &[Bit]) -> String {
    bits.iter()
        .map(|b| if *b == Bit::One { '1' } else { '0' })
        .collect()
}

/// The ball currently held by the channel.
pub type ChannelState = Bit;

/// One use of the channel: what went in, what came out, what stayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelStep {
    pub input: Bit,
    pub output: Bit,
    pub next_state: ChannelState,
}

/// A finite-state channel whose next state is a deterministic function of
/// (state, input, output). Symbols are indices so the belief recursion can
/// stay generic in the alphabet sizes.
pub trait UnifilarChannel {
    fn num_states(&self) -> usize;
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    /// `p(y | x, s)`.
    fn output_prob_idx(&self, x: usize, s: usize, y: usize) -> f64;
    /// `f(s, x, y)`; only meaningful where `output_prob_idx > 0`.
    fn next_state_idx(&self, s: usize, x: usize, y: usize) -> usize;
}

/// The trapdoor channel.
#[derive(Debug, Clone, Copy, Default)]
pub struct Trapdoor;

impl Trapdoor {
    /// `p(y | x, s)`: deterministic when input and state agree, a fair coin otherwise.
    pub fn output_prob(x: Bit, s: ChannelState, y: Bit) -> f64 {
        if x == s {
            if y == x {
                1.0
            } else {
                0.0
            }
        } else {
            0.5
        }
    }

    /// `s ^ x ^ y`, rejecting tuples the channel can never produce.
    pub fn next_state(s: ChannelState, x: Bit, y: Bit) -> Result<ChannelState> {
        if Self::output_prob(x, s, y) == 0.0 {
            return Err(Error::InfeasibleTuple {
                state: s.as_u8(),
                input: x.as_u8(),
                output: y.as_u8(),
            });
        }
        Ok(s ^ x ^ y)
    }

    /// Push ball `x` into a channel holding `s`. Consumes one uniform draw
    /// only when the output is actually random.
    pub fn sample_step<R: Rng + ?Sized>(s: ChannelState, x: Bit, rng: &mut R) -> ChannelStep {
        let output = if x == s || rng.random::<bool>() { x } else { s };
        ChannelStep {
            input: x,
            output,
            next_state: s ^ x ^ output,
        }
    }
}

impl UnifilarChannel for Trapdoor {
    fn num_states(&self) -> usize {
        2
    }
    fn num_inputs(&self) -> usize {
        2
    }
    fn num_outputs(&self) -> usize {
        2
    }
    fn output_prob_idx(&self, x: usize, s: usize, y: usize) -> f64 {
        match (Bit::from_index(x), Bit::from_index(s), Bit::from_index(y)) {
            (Some(x), Some(s), Some(y)) => Trapdoor::output_prob(x, s, y),
            _ => 0.0,
        }
    }
    fn next_state_idx(&self, s: usize, x: usize, y: usize) -> usize {
        (s ^ x ^ y) & 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use Bit::{One, Zero};

    #[test]
    fn output_prob_table() {
        assert_eq!(Trapdoor::output_prob(Zero, Zero, Zero), 1.0);
        assert_eq!(Trapdoor::output_prob(One, Zero, One), 0.5);
        assert_eq!(Trapdoor::output_prob(One, One, Zero), 0.0);
        assert_eq!(Trapdoor::output_prob(Zero, One, Zero), 0.5);
        for x in Bit::ALL {
            for s in Bit::ALL {
                let total: f64 = Bit::ALL
                    .iter()
                    .map(|&y| Trapdoor::output_prob(x, s, y))
                    .sum();
                assert_eq!(total, 1.0);
            }
        }
    }

    #[test]
    fn next_state_examples() {
        assert_eq!(Trapdoor::next_state(Zero, Zero, Zero), Ok(Zero));
        assert_eq!(Trapdoor::next_state(One, Zero, One), Ok(Zero));
        assert_eq!(Trapdoor::next_state(Zero, One, Zero), Ok(One));
    }

    #[test]
    fn next_state_defined_exactly_on_feasible_tuples() {
        for s in Bit::ALL {
            for x in Bit::ALL {
                for y in Bit::ALL {
                    let feasible = Trapdoor::output_prob(x, s, y) > 0.0;
                    let r = Trapdoor::next_state(s, x, y);
                    assert_eq!(r.is_ok(), feasible);
                    if let Ok(next) = r {
                        assert_eq!(next ^ s ^ x ^ y, Zero);
                    }
                }
            }
        }
        assert!(matches!(
            Trapdoor::next_state(One, One, Zero),
            Err(Error::InfeasibleTuple { .. })
        ));
    }

    #[test]
    fn deterministic_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let st = Trapdoor::sample_step(Zero, Zero, &mut rng);
            assert_eq!((st.output, st.next_state), (Zero, Zero));
            let st = Trapdoor::sample_step(One, One, &mut rng);
            assert_eq!((st.output, st.next_state), (One, One));
        }
    }

    #[test]
    fn mixed_row_is_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let zeros = (0..n)
            .filter(|_| Trapdoor::sample_step(Zero, One, &mut rng).output == Zero)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.002, "freq {freq}");
    }

    #[test]
    fn sampled_steps_are_feasible_and_seeded() {
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = Zero;
            (0..200)
                .map(|i| {
                    let st = Trapdoor::sample_step(s, Bit::from(i % 3 == 0), &mut rng);
                    assert_eq!(
                        Trapdoor::next_state(s, st.input, st.output),
                        Ok(st.next_state)
                    );
                    s = st.next_state;
                    st
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn bit_strings() {
        let bits = parse_bits("1011010001").unwrap();
        assert_eq!(format_bits(&bits), "1011010001");
        assert!(parse_bits("10x").is_none());
    }
}
