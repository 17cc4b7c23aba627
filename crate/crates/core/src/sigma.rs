//! Cumulative Σ enumerations: Σ₀ is the algebraic enumeration of a window,
//! layer `n+1` is the offset-diagonal family over Σₙ, and Σₙ₊₁ alternates
//! Σₙ with that layer.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebraic::AlgebraicEnumeration;
use crate::diagonal::diagonalize;
use crate::digits::{DigitCounter, DigitStream, StreamSequence};
use crate::dyadic::DyadicInterval;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SigmaError {
    #[error("layer {layer} is above level {level}")]
    LayerAboveLevel { layer: u32, level: u32 },
    #[error("element index must be at least 1")]
    ZeroElement,
    #[error("index of element {element} of layer {layer} at level {level} overflows u64")]
    IndexOverflow { layer: u32, element: u64, level: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// 1-based position in the algebraic enumeration.
    Algebraic { index: u64 },
    /// Offset-`offset` diagonal applied to Σ at `level`.
    Diagonal { offset: u64, level: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub layer: u32,
    pub generator: Generator,
}

impl Provenance {
    /// 1-based element number within its layer.
    pub fn element(&self) -> u64 {
        match self.generator {
            Generator::Algebraic { index } => index,
            Generator::Diagonal { offset, .. } => offset + 1,
        }
    }
}

/// Σ₀ rows: the canonical algebraic enumeration of `window`, expanded
/// relative to the same window.
pub struct AlgebraicRows {
    enumeration: Arc<AlgebraicEnumeration>,
    memo: Mutex<Vec<DigitStream>>,
    counter: Arc<DigitCounter>,
}

impl AlgebraicRows {
    pub fn new(window: &DyadicInterval) -> Self {
        AlgebraicRows {
            enumeration: AlgebraicEnumeration::shared(window),
            memo: Mutex::new(Vec::new()),
            counter: Arc::new(DigitCounter::default()),
        }
    }

    /// Rows of `(0, 1)`, shared process-wide.
    pub fn unit() -> Arc<AlgebraicRows> {
        static UNIT: std::sync::OnceLock<Arc<AlgebraicRows>> = std::sync::OnceLock::new();
        UNIT.get_or_init(|| Arc::new(AlgebraicRows::new(&DyadicInterval::unit()))).clone()
    }

    pub fn window(&self) -> &DyadicInterval {
        self.enumeration.window()
    }

    pub fn enumeration(&self) -> &Arc<AlgebraicEnumeration> {
        &self.enumeration
    }

    /// Digits produced so far by all rows.
    pub fn base_digit_count(&self) -> u64 {
        self.counter.get()
    }
}

impl StreamSequence for AlgebraicRows {
    fn get(&self, index: u64) -> DigitStream {
        assert!(index >= 1, "sequence indices start at 1");
        let idx = (index - 1) as usize;
        {
            let memo = self.memo.lock().expect("row memo poisoned");
            if let Some(s) = memo.get(idx) {
                return s.clone();
            }
        }
        let needed = self.enumeration.prefix(idx + 1);
        let mut memo = self.memo.lock().expect("row memo poisoned");
        while memo.len() <= idx {
            let value = needed[memo.len()].value.clone();
            let s = DigitStream::algebraic_counted(value, self.window().clone(), Some(self.counter.clone()))
                .expect("enumerated values lie inside the window");
            memo.push(s);
        }
        memo[idx].clone()
    }

    fn describe(&self) -> Value {
        json!({ "kind": "algebraic_enumeration", "window": self.window() })
    }
}

/// The offset-diagonal family over a base enumeration: element `k` is the
/// diagonal with column offset `k − 1`. Elements are memoized.
pub struct LayerFamily {
    base: Arc<dyn StreamSequence>,
    base_level: u32,
    memo: Mutex<HashMap<u64, DigitStream>>,
}

impl LayerFamily {
    pub fn new(base: Arc<dyn StreamSequence>, base_level: u32) -> Self {
        LayerFamily { base, base_level, memo: Mutex::new(HashMap::new()) }
    }

    /// Level of the enumeration the diagonals are applied to.
    pub fn base_level(&self) -> u32 {
        self.base_level
    }
}

impl StreamSequence for LayerFamily {
    fn get(&self, k: u64) -> DigitStream {
        assert!(k >= 1, "layer elements start at 1");
        let mut memo = self.memo.lock().expect("layer memo poisoned");
        memo.entry(k).or_insert_with(|| diagonalize(self.base.clone(), k - 1)).clone()
    }

    fn describe(&self) -> Value {
        json!({ "kind": "layer", "level": self.base_level + 1, "base": self.base.describe() })
    }
}

enum SigmaNode {
    Base(Arc<AlgebraicRows>),
    Merged { base: SigmaEnumeration, layer: Arc<LayerFamily> },
}

/// Σ at some finite level; a cheap handle.
#[derive(Clone)]
pub struct SigmaEnumeration {
    level: u32,
    node: Arc<SigmaNode>,
}

impl SigmaEnumeration {
    pub fn base(window: &DyadicInterval) -> Self {
        Self::from_rows(Arc::new(AlgebraicRows::new(window)))
    }

    pub fn from_rows(rows: Arc<AlgebraicRows>) -> Self {
        SigmaEnumeration { level: 0, node: Arc::new(SigmaNode::Base(rows)) }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Σ at the next level: this enumeration alternated with its diagonal family.
    pub fn next_level(&self) -> SigmaEnumeration {
        let layer = Arc::new(layer_family(self));
        merge_interleave(self, layer)
    }

    pub fn rows(&self) -> &Arc<AlgebraicRows> {
        let mut node = &self.node;
        loop {
            match node.as_ref() {
                SigmaNode::Base(rows) => return rows,
                SigmaNode::Merged { base, .. } => node = &base.node,
            }
        }
    }

    pub fn window(&self) -> &DyadicInterval {
        self.rows().window()
    }

    /// Algebraic digits computed so far through this enumeration's base.
    pub fn base_digit_count(&self) -> u64 {
        self.rows().base_digit_count()
    }

    pub fn provenance(&self, index: u64) -> Provenance {
        assert!(index >= 1, "sequence indices start at 1");
        let mut node = self;
        let mut idx = index;
        loop {
            match node.node.as_ref() {
                SigmaNode::Base(_) => {
                    return Provenance { layer: 0, generator: Generator::Algebraic { index: idx } }
                }
                SigmaNode::Merged { base, .. } => {
                    if idx % 2 == 1 {
                        idx = idx.div_ceil(2);
                        node = base;
                    } else {
                        return Provenance {
                            layer: node.level,
                            generator: Generator::Diagonal { offset: idx / 2 - 1, level: node.level - 1 },
                        };
                    }
                }
            }
        }
    }

    /// The stream of element `element` of `layer`, resolved directly from
    /// the layer rather than through Σ indexing.
    pub fn layer_element(&self, layer: u32, element: u64) -> Result<DigitStream, SigmaError> {
        if layer > self.level {
            return Err(SigmaError::LayerAboveLevel { layer, level: self.level });
        }
        if element == 0 {
            return Err(SigmaError::ZeroElement);
        }
        let mut node = self;
        while node.level > layer {
            let SigmaNode::Merged { base, .. } = node.node.as_ref() else { unreachable!() };
            node = base;
        }
        Ok(match node.node.as_ref() {
            SigmaNode::Base(rows) => rows.get(element),
            SigmaNode::Merged { layer, .. } => layer.get(element),
        })
    }
}

impl StreamSequence for SigmaEnumeration {
    fn get(&self, index: u64) -> DigitStream {
        assert!(index >= 1, "sequence indices start at 1");
        let mut node = self;
        let mut idx = index;
        loop {
            match node.node.as_ref() {
                SigmaNode::Base(rows) => return rows.get(idx),
                SigmaNode::Merged { base, layer } => {
                    if idx % 2 == 1 {
                        idx = idx.div_ceil(2);
                        node = base;
                    } else {
                        return layer.get(idx / 2);
                    }
                }
            }
        }
    }

    fn describe(&self) -> Value {
        json!({ "kind": "sigma", "level": self.level, "window": self.window() })
    }
}

/// `family[k] = diagonalize(base, k − 1)`, lazy in `k` and in digit position.
pub fn layer_family(base: &SigmaEnumeration) -> LayerFamily {
    LayerFamily::new(Arc::new(base.clone()), base.level)
}

/// Strict alternation starting with `base`: index `2j−1` is `base[j]`,
/// index `2j` is `layer[j]`.
pub fn merge_interleave(base: &SigmaEnumeration, layer: Arc<LayerFamily>) -> SigmaEnumeration {
    SigmaEnumeration {
        level: base.level + 1,
        node: Arc::new(SigmaNode::Merged { base: base.clone(), layer }),
    }
}

/// Σ_depth over `(0, 1)`.
pub fn build_sigma(depth: u32) -> SigmaEnumeration {
    build_sigma_from(SigmaEnumeration::from_rows(AlgebraicRows::unit()), depth)
}

/// Σ_depth over a window, with fresh digit caches.
pub fn build_sigma_in(window: &DyadicInterval, depth: u32) -> SigmaEnumeration {
    build_sigma_from(SigmaEnumeration::base(window), depth)
}

fn build_sigma_from(mut sigma: SigmaEnumeration, depth: u32) -> SigmaEnumeration {
    for _ in 0..depth {
        sigma = sigma.next_level();
    }
    sigma
}

/// Σ_at_level index of element `element` of `layer`. An element enters at
/// index `j` (layer 0) or `2j` (layer ≥ 1); each later merge maps an index
/// `i` to `2i − 1`, so the result is `2^(L−layer)·(entry − 1) + 1`.
pub fn index_of(layer: u32, element: u64, at_level: u32) -> Result<u64, SigmaError> {
    if layer > at_level {
        return Err(SigmaError::LayerAboveLevel { layer, level: at_level });
    }
    if element == 0 {
        return Err(SigmaError::ZeroElement);
    }
    let overflow = || SigmaError::IndexOverflow { layer, element, level: at_level };
    let entry = if layer == 0 { element } else { element.checked_mul(2).ok_or_else(overflow)? };
    let shift = at_level - layer;
    if shift >= 64 {
        return if entry == 1 { Ok(1) } else { Err(overflow()) };
    }
    (entry - 1)
        .checked_mul(1u64 << shift)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(overflow)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: scan provenance until the element turns up.
    fn scan_index(sigma: &SigmaEnumeration, layer: u32, element: u64) -> u64 {
        (1..).find(|&i| {
            let p = sigma.provenance(i);
            p.layer == layer && p.element() == element
        })
        .unwrap()
    }

    #[test]
    fn index_of_examples() {
        assert_eq!(index_of(1, 7, 1), Ok(14));
        assert_eq!(index_of(0, 1, 1), Ok(1));
        // 2 -> 3 -> 5
        assert_eq!(index_of(1, 1, 3), Ok(5));
        assert_eq!(index_of(2, 1, 1), Err(SigmaError::LayerAboveLevel { layer: 2, level: 1 }));
        assert_eq!(index_of(0, 0, 1), Err(SigmaError::ZeroElement));
        assert!(matches!(index_of(0, 3, 70), Err(SigmaError::IndexOverflow { .. })));
        assert_eq!(index_of(0, 1, 70), Ok(1));
    }

    #[test]
    fn index_of_matches_scan() {
        let sigma = build_sigma(3);
        for layer in 0..=3 {
            for element in 1..=20 {
                assert_eq!(index_of(layer, element, 3).unwrap(), scan_index(&sigma, layer, element));
            }
        }
    }

    #[test]
    fn merge_alternates() {
        let s0 = build_sigma(0);
        let s1 = build_sigma(1);
        for j in 1..=4u64 {
            assert!(s1.get(2 * j - 1).same_handle(&s0.get(j)));
            assert_eq!(s1.provenance(2 * j), Provenance {
                layer: 1,
                generator: Generator::Diagonal { offset: j - 1, level: 0 },
            });
        }
        let s2 = build_sigma(2);
        // first-merged layer element j sits at 4j - 1 after the second merge
        for j in 1..=4u64 {
            assert_eq!(s2.provenance(4 * j - 1).layer, 1);
            assert_eq!(s2.provenance(4 * j - 1).element(), j);
        }
    }

    #[test]
    fn sigma_two_index_four_is_offset_one_over_sigma_one() {
        let s2 = build_sigma(2);
        let s1 = build_sigma(1);
        let expected = diagonalize(Arc::new(s1), 1);
        assert_eq!(s2.get(4).prefix(40), expected.prefix(40));
        assert_eq!(s2.provenance(4).generator, Generator::Diagonal { offset: 1, level: 1 });
    }

    #[test]
    fn layer_family_offsets() {
        let s0 = build_sigma(0);
        let family = layer_family(&s0);
        assert_eq!(family.get(1).digit_at(1), 1 - s0.get(1).digit_at(1));
        assert_eq!(family.get(3).digit_at(2), 1 - s0.get(2).digit_at(4));
    }

    #[test]
    fn resolver_is_deterministic() {
        let a = build_sigma_in(&DyadicInterval::unit(), 2);
        let b = build_sigma_in(&DyadicInterval::unit(), 2);
        for i in 1..=16 {
            assert_eq!(a.get(i).prefix(32), b.get(i).prefix(32));
        }
    }

    #[test]
    fn layer_element_agrees_with_index_of() {
        let sigma = build_sigma(2);
        for layer in 0..=2 {
            for element in 1..=6 {
                let idx = index_of(layer, element, 2).unwrap();
                assert!(sigma.get(idx).same_handle(&sigma.layer_element(layer, element).unwrap()));
            }
        }
        assert!(sigma.layer_element(3, 1).is_err());
    }
}
