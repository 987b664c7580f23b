//! Strictly increasing index selectors `k -> n_k` and subsequences.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rule for an infinite, strictly increasing index sequence (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Identity,
    /// `n_k = 2k`
    Evens,
    /// `n_k = 2k - 1`
    Odds,
    /// `n_k = k^2`
    Squares,
    /// `n_k = step * k + offset`
    Affine { step: u64, offset: u64 },
    /// `n_k = 4k + u_k` with `u_k` in `0..4` drawn from a seeded stream.
    Random { seed: u64 },
    /// Finite explicit list; only usable on finite term arrays.
    Explicit(Vec<u64>),
}

impl Selector {
    pub fn name(&self) -> String {
        match self {
            Selector::Identity => "identity".into(),
            Selector::Evens => "evens".into(),
            Selector::Odds => "odds".into(),
            Selector::Squares => "squares".into(),
            Selector::Affine { step, offset } => format!("affine({step},{offset})"),
            Selector::Random { seed } => format!("random({seed})"),
            Selector::Explicit(v) => format!("explicit[{}]", v.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Selector::Affine { step, .. } if *step == 0 => {
                Err(Error::input("affine selector needs a positive step"))
            }
            Selector::Explicit(v) => {
                if v.first() == Some(&0) || v.windows(2).any(|w| w[1] <= w[0]) {
                    Err(Error::input("selector must be strictly increasing and 1-based"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// `n_k` for `k >= 1`; `None` past the end of an explicit list.
    pub fn index(&self, k: u128) -> Option<u128> {
        match self {
            Selector::Identity => Some(k),
            Selector::Evens => Some(2 * k),
            Selector::Odds => Some(2 * k - 1),
            Selector::Squares => Some(k * k),
            Selector::Affine { step, offset } => Some(*step as u128 * k + *offset as u128),
            Selector::Random { seed } => Some(4 * k + random_offset(*seed, k)),
            Selector::Explicit(v) => v.get(usize::try_from(k).ok()?.checked_sub(1)?).map(|&n| n as u128),
        }
    }

    /// Standard battery used for subsequence refinement and tangency probing.
    pub fn battery(seed: u64) -> Vec<Selector> {
        vec![Selector::Evens, Selector::Odds, Selector::Squares, Selector::Random { seed }]
    }
}

fn random_offset(seed: u64, k: u128) -> u128 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * k);
    (rng.next_u64() % 4) as u128
}

/// `out[k-1] = terms[n_k - 1]` for every `n_k` inside the array.
pub fn subsequence<T: Clone>(terms: &[T], selector: &Selector) -> Result<Vec<T>> {
    selector.validate()?;
    let mut out = Vec::new();
    let mut k = 1u128;
    while let Some(n) = selector.index(k) {
        if n == 0 || n > terms.len() as u128 {
            break;
        }
        out.push(terms[n as usize - 1].clone());
        k += 1;
    }
    Ok(out)
}
