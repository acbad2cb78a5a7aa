//! The k-stage linear feedback shift register over GF(2^m).
//!
//! This is the mathematical model of a pseudo-ring iteration: the register
//! stages are the sliding window of `k` memory cells, and one step emits the
//! tap-weighted sum that the engine writes into the next cell. Because the
//! model is exact, the state after any number of steps can be predicted a
//! priori and compared against what a real (possibly faulty) memory produced.
//!
//! A register is defined by its normalized tap vector: the recurrence is
//! `s[i+k] = sum_j taps[j] * s[i+j]`. A raw generator polynomial
//! `g(x) = a_0 + a_1 x + ... + a_k x^k` with `a_k != 0` induces the taps
//! `taps[j] = a_k^-1 * a_j`; non-monic generators are normalized that way.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::{FieldSpec, GaloisError, GfElement};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LfsrError {
    #[error("degenerate generator: {0}")]
    DegenerateGenerator(&'static str),
    #[error("tap vector must be nonempty")]
    NoTaps,
    #[error("lowest tap must be nonzero or the state map is not invertible")]
    ZeroLowTap,
    #[error("state length {got} does not match register stage count {want}")]
    StateLength { got: usize, want: usize },
    #[error("cell count {n} is below the stage count {k}")]
    TooFewCells { n: usize, k: usize },
    #[error("the all-zero state is a fixed point and has no useful period")]
    ZeroState,
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

/// Register state: the `k` stage values, index `j` holding `s[i+j]` of the
/// sliding window.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LfsrState {
    stages: Vec<GfElement>,
}

impl LfsrState {
    pub fn new(stages: Vec<GfElement>) -> Self {
        Self { stages }
    }

    pub fn stages(&self) -> &[GfElement] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.stages.iter().all(|&s| s == 0)
    }
}

impl From<Vec<GfElement>> for LfsrState {
    fn from(stages: Vec<GfElement>) -> Self {
        Self::new(stages)
    }
}

impl std::fmt::Display for LfsrState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.stages.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s:x}")?;
        }
        write!(f, ")")
    }
}

/// A k-stage register over a field: normalized taps plus, when derived from
/// a raw generator polynomial, the original coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LfsrDef {
    spec: FieldSpec,
    taps: Vec<GfElement>,
    origin: Option<Vec<GfElement>>,
}

impl LfsrDef {
    /// Builds a register from an explicit tap vector `taps[0..k]`.
    pub fn new(spec: FieldSpec, taps: Vec<GfElement>) -> Result<Self, LfsrError> {
        if taps.is_empty() {
            return Err(LfsrError::NoTaps);
        }
        for &t in &taps {
            spec.element(t as u32)?;
        }
        if taps[0] == 0 {
            return Err(LfsrError::ZeroLowTap);
        }
        Ok(Self {
            spec,
            taps,
            origin: None,
        })
    }

    /// Builds a register from generator coefficients `a_0 ..= a_k`,
    /// normalizing by `a_k^-1` so the recurrence is explicit.
    pub fn from_generator(spec: FieldSpec, coeffs: &[GfElement]) -> Result<Self, LfsrError> {
        if coeffs.len() < 2 {
            return Err(LfsrError::DegenerateGenerator("degree must be at least 1"));
        }
        for &a in coeffs {
            spec.element(a as u32)?;
        }
        let a_k = *coeffs.last().unwrap();
        if a_k == 0 {
            return Err(LfsrError::DegenerateGenerator(
                "leading coefficient is zero",
            ));
        }
        if coeffs[0] == 0 {
            return Err(LfsrError::DegenerateGenerator(
                "constant coefficient is zero",
            ));
        }
        let lead_inv = spec.inv(a_k)?;
        let taps = coeffs[..coeffs.len() - 1]
            .iter()
            .map(|&a| spec.mul(lead_inv, a))
            .collect();
        Ok(Self {
            spec,
            taps,
            origin: Some(coeffs.to_vec()),
        })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// Number of register stages.
    pub fn stage_count(&self) -> usize {
        self.taps.len()
    }

    pub fn taps(&self) -> &[GfElement] {
        &self.taps
    }

    /// Raw generator coefficients, when the register was built from one.
    pub fn origin(&self) -> Option<&[GfElement]> {
        self.origin.as_deref()
    }

    /// True when every tap is 0 or 1, i.e. the recurrence restricts to each
    /// bit plane independently and the register can drive per-bit lanes.
    pub fn has_binary_taps(&self) -> bool {
        self.taps.iter().all(|&t| t <= 1)
    }

    fn check_state(&self, state: &LfsrState) -> Result<(), LfsrError> {
        if state.len() != self.stage_count() {
            return Err(LfsrError::StateLength {
                got: state.len(),
                want: self.stage_count(),
            });
        }
        Ok(())
    }

    /// Tap-weighted sum of a window of stage values.
    pub fn feedback(&self, stages: &[GfElement]) -> GfElement {
        debug_assert_eq!(stages.len(), self.taps.len());
        self.taps
            .iter()
            .zip(stages)
            .fold(0, |acc, (&g, &s)| acc ^ self.spec.mul(g, s))
    }

    /// One register step: emits the feedback value and slides the window.
    pub fn step(&self, state: &LfsrState) -> Result<(LfsrState, GfElement), LfsrError> {
        self.check_state(state)?;
        let emitted = self.feedback(state.stages());
        let mut next = state.stages()[1..].to_vec();
        next.push(emitted);
        Ok((LfsrState::new(next), emitted))
    }

    /// State after walking an `n`-cell array: exactly `n - k` steps, i.e. the
    /// last `k` cells of a fault-free pseudo-ring iteration over `n` cells.
    pub fn expected_final(&self, init: &LfsrState, n: usize) -> Result<LfsrState, LfsrError> {
        self.check_state(init)?;
        let k = self.stage_count();
        if n < k {
            return Err(LfsrError::TooFewCells { n, k });
        }
        let mut state = init.clone();
        for _ in 0..(n - k) {
            state = self.step(&state)?.0;
        }
        Ok(state)
    }

    /// Orbit length of `init` under stepping: the smallest `T > 0` with
    /// `state_T = init`. The step map is invertible (lowest tap nonzero), so
    /// every nonzero state lies on a cycle and direct iteration terminates
    /// within `2^(m*k)` steps.
    pub fn period(&self, init: &LfsrState) -> Result<u64, LfsrError> {
        self.check_state(init)?;
        if init.is_zero() {
            return Err(LfsrError::ZeroState);
        }
        let cap: u64 = 1u64 << (self.spec.width() as u64 * self.stage_count() as u64).min(63);
        let mut state = init.clone();
        let mut steps: u64 = 0;
        loop {
            state = self.step(&state)?.0;
            steps += 1;
            if state == *init {
                return Ok(steps);
            }
            assert!(steps < cap, "orbit exceeded the state-space size");
        }
    }

    /// The fault-free cell sequence of an `n`-cell walk: the `k` seed values
    /// followed by each emitted feedback value.
    pub fn sequence(&self, init: &LfsrState, n: usize) -> Result<Vec<GfElement>, LfsrError> {
        self.check_state(init)?;
        let k = self.stage_count();
        if n < k {
            return Err(LfsrError::TooFewCells { n, k });
        }
        let mut seq = init.stages().to_vec();
        let mut state = init.clone();
        for _ in 0..(n - k) {
            let (next, emitted) = self.step(&state)?;
            seq.push(emitted);
            state = next;
        }
        Ok(seq)
    }
}
