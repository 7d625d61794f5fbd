//! Zero-error feedback code for the trapdoor channel.
//!
//! Messages are mapped (by lexicographic enumeration) onto *action
//! sequences*: words with no two consecutive ones that end in zero. Action
//! bit 0 means "insert a ball equal to the channel state", 1 means "insert
//! the opposite ball"; the encoder knows the state through feedback. The
//! decoder sees only output flips `y_k ^ y_{k-1}` and recovers the actions
//! backwards from the final (known) zero.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{format_bits, Bit, ChannelState, Trapdoor};
use crate::error::{Error, Result};

/// Largest block length whose codebook size fits in a `u128`.
pub const MAX_BLOCK_LENGTH: usize = 185;

/// Default cap on channel uses spent flushing an unknown state.
pub const DEFAULT_FLUSH_CAP: usize = 10_000;

/// A no-`11` word ending in 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionSequence(Vec<Bit>);

impl ActionSequence {
    pub fn new(bits: Vec<Bit>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidSequence("empty sequence".into()));
        }
        if bits.last() != Some(&Bit::Zero) {
            return Err(Error::InvalidSequence("last action must be 0".into()));
        }
        if bits
            .windows(2)
            .any(|w| w[0] == Bit::One && w[1] == Bit::One)
        {
            return Err(Error::InvalidSequence("two consecutive 1s".into()));
        }
        Ok(Self(bits))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bits = crate::channel::parse_bits(s)
            .ok_or_else(|| Error::InvalidSequence(format!("not a 0/1 string: {s:?}")))?;
        Self::new(bits)
    }

    pub fn bits(&self) -> &[Bit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// MSB-first bit packing, zero padded to whole bytes.
    pub fn to_packed(&self) -> Vec<u8> {
        pack_bits(&self.0)
    }
}

impl fmt::Display for ActionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_bits(&self.0))
    }
}

pub fn pack_bits(bits: &[Bit]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, b)| acc | (b.as_u8() << (7 - i)))
        })
        .collect()
}

pub fn unpack_bits(bytes: &[u8], len: usize) -> Option<Vec<Bit>> {
    if len > bytes.len() * 8 {
        return None;
    }
    Some(
        (0..len)
            .map(|i| Bit::from((bytes[i / 8] >> (7 - i % 8)) & 1 == 1))
            .collect(),
    )
}

/// Output flips `y_k ^ y_{k-1}` for `k = 2..=N`; the first position has no
/// predecessor and is never read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialOutput(Vec<Bit>);

impl DifferentialOutput {
    pub fn from_outputs(y: &[Bit]) -> Self {
        Self(y.windows(2).map(|w| w[0] ^ w[1]).collect())
    }

    /// 1-based access; `None` for `k = 1` or past the end.
    pub fn get(&self, k: usize) -> Option<Bit> {
        if k < 2 {
            None
        } else {
            self.0.get(k - 2).copied()
        }
    }

    pub fn block_length(&self) -> usize {
        self.0.len() + 1
    }
}

impl fmt::Display for DifferentialOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "*{}", format_bits(&self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub index: u128,
    pub block_length: usize,
}

/// Number of valid action sequences per remaining length, from the
/// recursion `n0(k+1) = n0(k) + n1(k)`, `n1(k+1) = n0(k)` on counts of
/// no-`11` words ending in 0 / 1. `suffixes[r]` counts valid completions of
/// `r` positions after a 0 (or at the start); `suffixes[0] = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    block_length: usize,
    suffixes: Vec<u128>,
}

impl Codebook {
    pub fn new(block_length: usize) -> Result<Self> {
        if block_length == 0 {
            return Err(Error::InvalidParameter(
                "block length must be positive".into(),
            ));
        }
        if block_length > MAX_BLOCK_LENGTH {
            return Err(Error::BlockLengthTooLarge(block_length));
        }
        let mut suffixes = Vec::with_capacity(block_length + 1);
        suffixes.push(1u128);
        let (mut ends0, mut ends1) = (1u128, 1u128);
        for _ in 1..=block_length {
            suffixes.push(ends0);
            // Only counts up to N are read, so saturating the step past N is harmless.
            let next0 = ends0.saturating_add(ends1);
            ends1 = ends0;
            ends0 = next0;
        }
        Ok(Self {
            block_length,
            suffixes,
        })
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn size(&self) -> u128 {
        self.suffixes[self.block_length]
    }

    /// `log2(size) / N`, the rate in bits per channel use.
    pub fn rate(&self) -> f64 {
        (self.size() as f64).log2() / self.block_length as f64
    }

    /// The `index`-th valid sequence in lexicographic order (0 < 1).
    pub fn unrank(&self, index: u128) -> Result<ActionSequence> {
        let n = self.block_length;
        if index >= self.size() {
            return Err(Error::MessageOutOfRange {
                index,
                block_length: n,
                size: self.size(),
            });
        }
        let mut rest = index;
        let mut bits = Vec::with_capacity(n);
        let mut prev = Bit::Zero;
        for pos in 0..n {
            let remaining = n - pos;
            let bit = if prev == Bit::One {
                Bit::Zero
            } else {
                let with_zero = self.suffixes[remaining - 1];
                if rest < with_zero {
                    Bit::Zero
                } else {
                    rest -= with_zero;
                    Bit::One
                }
            };
            bits.push(bit);
            prev = bit;
        }
        Ok(ActionSequence(bits))
    }

    pub fn rank(&self, seq: &ActionSequence) -> Result<u128> {
        let n = self.block_length;
        if seq.len() != n {
            return Err(Error::InvalidSequence(format!(
                "length {} does not match block length {n}",
                seq.len()
            )));
        }
        let mut index = 0u128;
        for (pos, &b) in seq.bits().iter().enumerate() {
            if b == Bit::One {
                index += self.suffixes[n - pos - 1];
            }
        }
        Ok(index)
    }
}

pub fn codebook_size(block_length: usize) -> Result<u128> {
    Codebook::new(block_length).map(|c| c.size())
}

pub fn unrank(m: Message) -> Result<ActionSequence> {
    Codebook::new(m.block_length)?.unrank(m.index)
}

pub fn rank(c: &ActionSequence) -> Result<Message> {
    let book = Codebook::new(c.len())?;
    Ok(Message {
        index: book.rank(c)?,
        block_length: c.len(),
    })
}

/// Channel input for action `x̃` when the channel holds `s`.
pub fn encode_step(action: Bit, s: ChannelState) -> Bit {
    action ^ s
}

/// What happened on the wire for one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTransmission {
    pub inputs: Vec<Bit>,
    pub outputs: Vec<Bit>,
    /// Channel state before each use, plus the final state.
    pub states: Vec<ChannelState>,
}

impl BlockTransmission {
    pub fn final_state(&self) -> ChannelState {
        *self
            .states
            .last()
            .expect("states holds at least the initial state")
    }
}

/// Send `seq` through the channel from known state `s0`. The encoder tracks
/// the state from its own input and the fed-back output.
pub fn transmit<R: Rng + ?Sized>(
    seq: &ActionSequence,
    s0: ChannelState,
    rng: &mut R,
) -> BlockTransmission {
    let mut s = s0;
    let mut out = BlockTransmission {
        inputs: Vec::with_capacity(seq.len()),
        outputs: Vec::with_capacity(seq.len()),
        states: vec![s0],
    };
    for &a in seq.bits() {
        let x = encode_step(a, s);
        let step = Trapdoor::sample_step(s, x, rng);
        s = Trapdoor::next_state(s, x, step.output).expect("sampled tuples are feasible");
        out.inputs.push(x);
        out.outputs.push(step.output);
        out.states.push(s);
    }
    out
}

/// Which decoding rule fixed an action bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeCase {
    /// The last action, zero by construction.
    Given,
    /// No output flip at `k + 1`: action `k` was 0.
    Case1,
    /// Action `k + 1` was 1: action `k` is 0 (no `11`).
    Case2,
    /// Both of the above hold.
    Case1Or2,
    /// Output flip at `k + 1` after a 0 action: action `k` was 1.
    Case3,
}

impl fmt::Display for DecodeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DecodeCase::Given => "Given",
            DecodeCase::Case1 => "Case 1",
            DecodeCase::Case2 => "Case 2",
            DecodeCase::Case1Or2 => "Case 1 or 2",
            DecodeCase::Case3 => "Case 3",
        };
        f.write_str(s)
    }
}

fn decide(flip: Bit, next: Bit) -> (Bit, DecodeCase) {
    match (flip, next) {
        (Bit::Zero, Bit::One) => (Bit::Zero, DecodeCase::Case1Or2),
        (Bit::Zero, Bit::Zero) => (Bit::Zero, DecodeCase::Case1),
        (Bit::One, Bit::One) => (Bit::Zero, DecodeCase::Case2),
        (Bit::One, Bit::Zero) => (Bit::One, DecodeCase::Case3),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStep {
    /// 1-based position decided at this step.
    pub k: usize,
    pub bit: Bit,
    pub case: DecodeCase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub outputs: Vec<Bit>,
    pub differential: DifferentialOutput,
    /// In decoding order, from `k = N` down to 1.
    pub steps: Vec<DecodeStep>,
    pub decoded: ActionSequence,
}

impl DecodeTrace {
    /// Backward-decoding table: outputs, flips, then the growing decoded
    /// suffix with the rule used at each step.
    pub fn table(&self) -> String {
        let n = self.outputs.len();
        let mut rows = vec![
            (
                "y_n".to_string(),
                format_bits(&self.outputs),
                "Channel output".to_string(),
            ),
            (
                "~y_n".to_string(),
                self.differential.to_string(),
                "Differential output".to_string(),
            ),
        ];
        let mut suffix: Vec<Bit> = Vec::with_capacity(n);
        for (i, step) in self.steps.iter().enumerate() {
            suffix.insert(0, step.bit);
            let label = if i == 0 { "~x_n" } else { "" };
            rows.push((
                label.to_string(),
                format_bits(&suffix),
                step.case.to_string(),
            ));
        }
        let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(8);
        let w1 = n.max(5);
        let mut out = format!("{:<w0$} | {:>w1$} | Reason\n", "Variable", "Value");
        out.push_str(&format!(
            "{}-+-{}-+-{}\n",
            "-".repeat(w0),
            "-".repeat(w1),
            "-".repeat(19)
        ));
        for (a, b, c) in rows {
            out.push_str(&format!("{a:<w0$} | {b:>w1$} | {c}\n"));
        }
        out
    }
}

/// Backward decoding with the full rule trace. Any output word decodes to
/// some valid action sequence; only channel-generated words are guaranteed
/// to decode to what was sent.
pub fn decode_block_traced(y: &[Bit]) -> Result<DecodeTrace> {
    let n = y.len();
    if n == 0 {
        return Err(Error::InvalidSequence("empty output block".into()));
    }
    let differential = DifferentialOutput::from_outputs(y);
    let mut bits = vec![Bit::Zero; n];
    let mut steps = vec![DecodeStep {
        k: n,
        bit: Bit::Zero,
        case: DecodeCase::Given,
    }];
    for k in (1..n).rev() {
        let flip = differential.get(k + 1).expect("k + 1 in 2..=N");
        let (bit, case) = decide(flip, bits[k]);
        bits[k - 1] = bit;
        steps.push(DecodeStep { k, bit, case });
    }
    Ok(DecodeTrace {
        outputs: y.to_vec(),
        differential,
        steps,
        decoded: ActionSequence::new(bits)?,
    })
}

pub fn decode_block(y: &[Bit]) -> Result<ActionSequence> {
    decode_block_traced(y).map(|t| t.decoded)
}

/// Decode `x̃_1..x̃_k` without the rest of the block. Requires no output flip
/// at `k + 1`, which pins `x̃_k = 0`.
pub fn decode_prefix(y: &[Bit], k: usize) -> Result<Vec<Bit>> {
    let differential = DifferentialOutput::from_outputs(y);
    if k == 0 || differential.get(k + 1) != Some(Bit::Zero) {
        return Err(Error::InvalidParameter(format!(
            "early decoding needs an unflipped output at position {}",
            k + 1
        )));
    }
    let mut bits = vec![Bit::Zero; k];
    for j in (1..k).rev() {
        let flip = differential.get(j + 1).expect("j + 1 <= k < N");
        bits[j - 1] = decide(flip, bits[j]).0;
    }
    Ok(bits)
}

/// Result of flushing a channel whose state is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlushOutcome {
    pub uses: usize,
    /// State inferred by both ends: the last input.
    pub learned_state: ChannelState,
    /// State of the simulated channel, for checking.
    pub true_state: ChannelState,
}

/// Feed `0, 1, 0, 1, ...` until an output differs from its input. At that
/// moment the ball that left is the old state and the ball just inserted
/// stays behind, so the new state equals the last input.
pub fn flush<R: Rng + ?Sized>(
    rng: &mut R,
    hidden_state: ChannelState,
    max_uses: usize,
) -> Result<FlushOutcome> {
    let mut s = hidden_state;
    for uses in 1..=max_uses {
        let x = Bit::from(uses % 2 == 0);
        let step = Trapdoor::sample_step(s, x, rng);
        s = step.next_state;
        if step.output != x {
            return Ok(FlushOutcome {
                uses,
                learned_state: x,
                true_state: s,
            });
        }
    }
    Err(Error::FlushCapExceeded(max_uses))
}
