use thiserror::Error;

use super::{AssociationRule, Weight};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderingError {
    #[error("ordering value overflows 128 bits")]
    Overflow,
    #[error("rule weight {weight} exceeds w_max {w_max}")]
    WeightAboveMax { weight: Weight, w_max: Weight },
}

/// A strictly increasing map on non-negative integers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum MonotoneMap {
    #[default]
    Identity,
    /// `x ↦ mul·x + add`, with `mul ≥ 1`.
    Affine { mul: u64, add: u64 },
    /// `x ↦ x^exp`, with `exp ≥ 1`.
    Power { exp: u32 },
}

impl MonotoneMap {
    pub fn apply(self, x: u128) -> Result<u128, OrderingError> {
        match self {
            MonotoneMap::Identity => Ok(x),
            MonotoneMap::Affine { mul, add } => x
                .checked_mul(u128::from(mul.max(1)))
                .and_then(|v| v.checked_add(u128::from(add)))
                .ok_or(OrderingError::Overflow),
            MonotoneMap::Power { exp } => x.checked_pow(exp.max(1)).ok_or(OrderingError::Overflow),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderingKind {
    WeightOnly,
    LengthOnly,
    /// Longer antecedents first, then heavier weights.
    LengthThenWeight,
    /// Heavier weights first, then longer antecedents.
    WeightThenLength,
}

/// Database-wide quantities some orderings depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderingContext {
    pub w_max: Weight,
    pub universe_size: u32,
}

/// Integer-valued rule ranking `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OrderingFunction {
    pub kind: OrderingKind,
    pub g1: MonotoneMap,
    pub g2: MonotoneMap,
}

impl OrderingFunction {
    pub const fn new(kind: OrderingKind) -> Self {
        OrderingFunction { kind, g1: MonotoneMap::Identity, g2: MonotoneMap::Identity }
    }

    pub const fn weight_only() -> Self {
        Self::new(OrderingKind::WeightOnly)
    }

    pub const fn length_only() -> Self {
        Self::new(OrderingKind::LengthOnly)
    }

    pub const fn length_then_weight() -> Self {
        Self::new(OrderingKind::LengthThenWeight)
    }

    pub const fn weight_then_length() -> Self {
        Self::new(OrderingKind::WeightThenLength)
    }

    pub fn with_maps(mut self, g1: MonotoneMap, g2: MonotoneMap) -> Self {
        self.g1 = g1;
        self.g2 = g2;
        self
    }

    /// `f` for a rule with the given weight and antecedent length.
    pub fn value(&self, weight: Weight, len: usize, ctx: OrderingContext) -> Result<u128, OrderingError> {
        let w = u128::from(weight);
        let len = len as u128;
        match self.kind {
            OrderingKind::WeightOnly => Ok(w),
            OrderingKind::LengthOnly => Ok(len),
            OrderingKind::LengthThenWeight => {
                if weight > ctx.w_max {
                    return Err(OrderingError::WeightAboveMax { weight, w_max: ctx.w_max });
                }
                let scale = self.g1.apply(u128::from(ctx.w_max))?;
                let tier = scale.checked_mul(self.g2.apply(len)?).ok_or(OrderingError::Overflow)?;
                self.g1.apply(w)?.checked_add(tier).ok_or(OrderingError::Overflow)
            }
            OrderingKind::WeightThenLength => {
                let scale = self.g2.apply(u128::from(ctx.universe_size))?;
                let tier = scale.checked_mul(self.g1.apply(w)?).ok_or(OrderingError::Overflow)?;
                self.g2.apply(len)?.checked_add(tier).ok_or(OrderingError::Overflow)
            }
        }
    }

    pub fn evaluate(&self, rule: &AssociationRule, ctx: OrderingContext) -> Result<u128, OrderingError> {
        self.value(rule.weight, rule.antecedent.len(), ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CTX: OrderingContext = OrderingContext { w_max: 10, universe_size: 100 };

    #[test]
    fn documented_values() {
        assert_eq!(OrderingFunction::length_then_weight().value(3, 2, CTX), Ok(23));
        assert_eq!(OrderingFunction::weight_only().value(7, 1, CTX), Ok(7));
        assert_eq!(OrderingFunction::weight_then_length().value(6, 4, CTX), Ok(604));
        assert_eq!(OrderingFunction::length_only().value(6, 4, CTX), Ok(4));
    }

    #[test]
    fn overflow_and_precondition_are_signalled() {
        let ctx = OrderingContext { w_max: u64::MAX, universe_size: u32::MAX };
        let f = OrderingFunction::length_then_weight().with_maps(MonotoneMap::Power { exp: 3 }, MonotoneMap::Identity);
        assert_eq!(f.value(1, 2, ctx), Err(OrderingError::Overflow));
        assert!(matches!(
            OrderingFunction::length_then_weight().value(11, 1, CTX),
            Err(OrderingError::WeightAboveMax { .. })
        ));
    }

    proptest! {
        // Longer antecedents never rank below shorter ones, and equal lengths
        // rank by weight.
        #[test]
        fn length_then_weight_properties(w_max in 0u64..1_000_000, a in 0u64..1_000_000, b in 0u64..1_000_000,
                                         la in 1usize..20, lb in 1usize..20, mul in 1u64..50, add in 0u64..50) {
            let (a, b) = (a.min(w_max), b.min(w_max));
            let ctx = OrderingContext { w_max, universe_size: 1000 };
            let g = MonotoneMap::Affine { mul, add };
            for f in [OrderingFunction::length_then_weight(), OrderingFunction::length_then_weight().with_maps(g, g)] {
                let fa = f.value(a, la, ctx).unwrap();
                let fb = f.value(b, lb, ctx).unwrap();
                if la < lb { prop_assert!(fa <= fb); }
                if la == lb { prop_assert_eq!(fa.cmp(&fb), a.cmp(&b)); }
            }
        }

        #[test]
        fn weight_then_length_prefers_weight(a in 0u64..1_000_000, b in 0u64..1_000_000, la in 1usize..50, lb in 1usize..50) {
            let ctx = OrderingContext { w_max: 1_000_000, universe_size: 64 };
            let f = OrderingFunction::weight_then_length();
            let fa = f.value(a, la, ctx).unwrap();
            let fb = f.value(b, lb, ctx).unwrap();
            if a < b { prop_assert!(fa < fb); }
            if a == b { prop_assert_eq!(fa.cmp(&fb), la.cmp(&lb)); }
        }
    }
}
