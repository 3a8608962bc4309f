//! Dense factors over discrete variables.
//!
//! A factor's table is stored row-major over its scope: the **last** scope
//! variable varies fastest. For a scope `[A, B]` with binary variables the
//! entries are ordered `(A=0,B=0), (A=0,B=1), (A=1,B=0), (A=1,B=1)`. Every
//! file format and CPT in the crate uses this order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Identifier of a variable inside a [`crate::Network`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub cardinality: usize,
}

impl Variable {
    pub fn new(id: VarId, name: impl Into<String>, cardinality: usize) -> Result<Self> {
        if cardinality < 2 {
            return Err(Error::Cardinality { var: id, cardinality });
        }
        Ok(Variable { id, name: name.into(), cardinality })
    }

    pub fn binary(id: VarId, name: impl Into<String>) -> Self {
        Variable { id, name: name.into(), cardinality: 2 }
    }
}

/// Observed states, at most one per variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<VarId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `var = state`. Re-inserting the same state is a no-op;
    /// a different state is rejected.
    pub fn insert(&mut self, var: VarId, state: usize) -> Result<()> {
        match self.assignments.get(&var) {
            Some(&first) if first != state => {
                Err(Error::ConflictingEvidence { var, first, second: state })
            }
            _ => {
                self.assignments.insert(var, state);
                Ok(())
            }
        }
    }

    pub fn merge(&mut self, other: &Evidence) -> Result<()> {
        for (&var, &state) in other.iter() {
            self.insert(var, state)?;
        }
        Ok(())
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.assignments.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.assignments.contains_key(&var)
    }

    pub fn remove(&mut self, var: VarId) -> Option<usize> {
        self.assignments.remove(&var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &usize)> {
        self.assignments.iter()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

impl FromIterator<(VarId, usize)> for Evidence {
    /// Later entries overwrite earlier ones.
    fn from_iter<I: IntoIterator<Item = (VarId, usize)>>(iter: I) -> Self {
        Evidence { assignments: iter.into_iter().collect() }
    }
}

/// Nonnegative table over an ordered scope.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

fn strides_of(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![0; cards.len()];
    let mut acc = 1;
    for k in (0..cards.len()).rev() {
        strides[k] = acc;
        acc *= cards[k];
    }
    strides
}

/// Steps through a row-major index space while tracking linear offsets into
/// one or two other tables that share some of its axes.
struct Odometer<'a> {
    cards: &'a [usize],
    state: Vec<usize>,
}

impl<'a> Odometer<'a> {
    fn new(cards: &'a [usize]) -> Self {
        Odometer { cards, state: vec![0; cards.len()] }
    }

    /// Advances by one and updates each offset with its stride table.
    #[inline]
    fn step<const N: usize>(&mut self, offsets: &mut [usize; N], strides: [&[usize]; N]) {
        for k in (0..self.cards.len()).rev() {
            self.state[k] += 1;
            if self.state[k] < self.cards[k] {
                for (o, s) in offsets.iter_mut().zip(strides.iter()) {
                    *o += s[k];
                }
                return;
            }
            self.state[k] = 0;
            for (o, s) in offsets.iter_mut().zip(strides.iter()) {
                *o -= s[k] * (self.cards[k] - 1);
            }
        }
    }
}

impl Factor {
    /// Builds a factor from `(variable, cardinality)` pairs and a row-major table.
    pub fn new(scope: Vec<(VarId, usize)>, values: Vec<f64>) -> Result<Self> {
        let mut vars = Vec::with_capacity(scope.len());
        let mut cards = Vec::with_capacity(scope.len());
        for (var, card) in scope {
            if vars.contains(&var) {
                return Err(Error::DuplicateScopeVariable(var));
            }
            if card == 0 {
                return Err(Error::Cardinality { var, cardinality: 0 });
            }
            vars.push(var);
            cards.push(card);
        }
        let expected: usize = cards.iter().product();
        if values.len() != expected {
            return Err(Error::TableSize { expected, actual: values.len() });
        }
        if let Some((index, &value)) =
            values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidEntry { index, value });
        }
        Ok(Factor { scope: vars, cards, values })
    }

    /// Empty-scope factor holding a single value.
    pub fn scalar(value: f64) -> Self {
        Factor { scope: Vec::new(), cards: Vec::new(), values: vec![value] }
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.scope.contains(&var)
    }

    pub fn cardinality_of(&self, var: VarId) -> Option<usize> {
        self.scope.iter().position(|&v| v == var).map(|k| self.cards[k])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Value at the joint state given by `state_of` for each scope variable.
    pub fn value_with(&self, mut state_of: impl FnMut(VarId) -> usize) -> f64 {
        let mut index = 0;
        for (k, &var) in self.scope.iter().enumerate() {
            index = index * self.cards[k] + state_of(var);
        }
        self.values[index]
    }

    /// Value at per-scope-position states.
    pub fn get(&self, states: &[usize]) -> f64 {
        debug_assert_eq!(states.len(), self.scope.len());
        let mut index = 0;
        for (k, &s) in states.iter().enumerate() {
            index = index * self.cards[k] + s;
        }
        self.values[index]
    }

    /// Pointwise product over the union of both scopes. The result scope is
    /// `self`'s scope followed by the variables only `other` has.
    pub fn product(&self, other: &Factor) -> Result<Factor> {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (k, &var) in other.scope.iter().enumerate() {
            match self.cardinality_of(var) {
                Some(c) if c != other.cards[k] => {
                    return Err(Error::CardinalityMismatch { var, left: c, right: other.cards[k] })
                }
                Some(_) => {}
                None => {
                    scope.push(var);
                    cards.push(other.cards[k]);
                }
            }
        }

        let self_strides = strides_of(&self.cards);
        let other_strides = strides_of(&other.cards);
        let mut sa = vec![0; scope.len()];
        let mut sb = vec![0; scope.len()];
        for (k, &var) in scope.iter().enumerate() {
            if let Some(p) = self.scope.iter().position(|&v| v == var) {
                sa[k] = self_strides[p];
            }
            if let Some(p) = other.scope.iter().position(|&v| v == var) {
                sb[k] = other_strides[p];
            }
        }

        let len: usize = cards.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut odo = Odometer::new(&cards);
        let mut offsets = [0usize; 2];
        for _ in 0..len {
            values.push(self.values[offsets[0]] * other.values[offsets[1]]);
            odo.step(&mut offsets, [&sa, &sb]);
        }
        Ok(Factor { scope, cards, values })
    }

    /// Sums `var` out of the factor.
    pub fn marginalize(&self, var: VarId) -> Result<Factor> {
        let pos = self.scope.iter().position(|&v| v == var).ok_or(Error::NotInScope(var))?;
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let out_strides = strides_of(&cards);
        let mut src_to_out = vec![0; self.scope.len()];
        for k in 0..self.scope.len() {
            if k < pos {
                src_to_out[k] = out_strides[k];
            } else if k > pos {
                src_to_out[k] = out_strides[k - 1];
            }
        }
        let mut values = vec![0.0; cards.iter().product()];
        let mut odo = Odometer::new(&self.cards);
        let mut offsets = [0usize; 1];
        for &v in &self.values {
            values[offsets[0]] += v;
            odo.step(&mut offsets, [&src_to_out]);
        }
        Ok(Factor { scope, cards, values })
    }

    /// Restricts the factor to the observed states. Evidence on variables
    /// outside the scope is ignored.
    pub fn reduce(&self, evidence: &Evidence) -> Factor {
        if !self.scope.iter().any(|&v| evidence.contains(v)) {
            return self.clone();
        }
        let strides = strides_of(&self.cards);
        let mut base = 0;
        let mut scope = Vec::new();
        let mut cards = Vec::new();
        let mut kept = Vec::new();
        for (k, &var) in self.scope.iter().enumerate() {
            match evidence.get(var) {
                Some(state) => base += state * strides[k],
                None => {
                    scope.push(var);
                    cards.push(self.cards[k]);
                    kept.push(strides[k]);
                }
            }
        }
        let len: usize = cards.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut odo = Odometer::new(&cards);
        let mut offsets = [base];
        for _ in 0..len {
            values.push(self.values[offsets[0]]);
            odo.step(&mut offsets, [&kept]);
        }
        Factor { scope, cards, values }
    }

    /// Same factor with its scope permuted into `order`.
    pub fn aligned(&self, order: &[VarId]) -> Result<Factor> {
        if order.len() != self.scope.len() {
            return Err(Error::TableSize { expected: self.scope.len(), actual: order.len() });
        }
        let strides = strides_of(&self.cards);
        let mut cards = Vec::with_capacity(order.len());
        let mut src = Vec::with_capacity(order.len());
        for (i, &var) in order.iter().enumerate() {
            let p = self.scope.iter().position(|&v| v == var).ok_or(Error::NotInScope(var))?;
            if order[..i].contains(&var) {
                return Err(Error::DuplicateScopeVariable(var));
            }
            cards.push(self.cards[p]);
            src.push(strides[p]);
        }
        let mut values = Vec::with_capacity(self.values.len());
        let mut odo = Odometer::new(&cards);
        let mut offsets = [0usize];
        for _ in 0..self.values.len() {
            values.push(self.values[offsets[0]]);
            odo.step(&mut offsets, [&src]);
        }
        Ok(Factor { scope: order.to_vec(), cards, values })
    }

    /// Scales the table to sum to one. Returns the original total.
    pub fn normalize(&mut self) -> f64 {
        let z = self.total();
        if z > 0.0 {
            for v in &mut self.values {
                *v /= z;
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const X: VarId = VarId(0);
    const Y: VarId = VarId(1);
    const Z: VarId = VarId(2);

    fn f(scope: &[(VarId, usize)], values: &[f64]) -> Factor {
        Factor::new(scope.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn product_with_scalar_is_identity() {
        let a = f(&[(X, 2)], &[0.5, 0.5]);
        assert_eq!(a.product(&Factor::scalar(1.0)).unwrap(), a);
    }

    #[test]
    fn pointwise_product_on_shared_scope() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        let b = f(&[(X, 2)], &[0.2, 0.8]);
        let p = a.product(&b).unwrap();
        assert_eq!(p.scope(), &[X]);
        assert!((p.values()[0] - 0.06).abs() < 1e-15);
        assert!((p.values()[1] - 0.56).abs() < 1e-15);
    }

    #[test]
    fn outer_product_matches_enumeration() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        let b = f(&[(Y, 2)], &[0.2, 0.8]);
        let p = a.product(&b).unwrap();
        assert_eq!(p.scope(), &[X, Y]);
        for x in 0..2 {
            for y in 0..2 {
                let expected = a.get(&[x]) * b.get(&[y]);
                assert_eq!(p.get(&[x, y]), expected);
            }
        }
    }

    #[test]
    fn product_rejects_cardinality_mismatch() {
        let a = f(&[(X, 2)], &[0.5, 0.5]);
        let b = f(&[(X, 3)], &[0.2, 0.3, 0.5]);
        assert!(matches!(a.product(&b), Err(Error::CardinalityMismatch { .. })));
    }

    #[test]
    fn marginalize_to_total_mass() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        let m = a.marginalize(X).unwrap();
        assert!(m.scope().is_empty());
        assert!((m.values()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marginalize_independent_pair() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        let b = f(&[(Y, 2)], &[0.2, 0.8]);
        let m = a.product(&b).unwrap().marginalize(Y).unwrap();
        assert!((m.values()[0] - 0.3).abs() < 1e-15);
        assert!((m.values()[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn marginalize_rejects_foreign_variable() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        assert_eq!(a.marginalize(Y), Err(Error::NotInScope(Y)));
    }

    #[test]
    fn marginalize_three_variables_against_hand_sum() {
        let values: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let g = f(&[(X, 2), (Y, 3), (Z, 2)], &values);
        let m = g.marginalize(Y).unwrap();
        assert_eq!(m.scope(), &[X, Z]);
        for x in 0..2 {
            for z in 0..2 {
                let hand: f64 = (0..3).map(|y| values[x * 6 + y * 2 + z]).sum();
                assert!((m.get(&[x, z]) - hand).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reduce_slices_observed_state() {
        let g = f(&[(X, 2), (Y, 2)], &[0.1, 0.2, 0.3, 0.4]);
        let e: Evidence = [(Y, 1)].into_iter().collect();
        let r = g.reduce(&e);
        assert_eq!(r.scope(), &[X]);
        assert_eq!(r.values(), &[0.2, 0.4]);
    }

    #[test]
    fn reduce_ignores_foreign_evidence() {
        let g = f(&[(X, 2)], &[0.1, 0.9]);
        let e: Evidence = [(Y, 1)].into_iter().collect();
        assert_eq!(g.reduce(&e), g);
    }

    #[test]
    fn chained_reductions_commute() {
        let g = f(&[(X, 2), (Y, 2), (Z, 2)], &[1., 2., 3., 4., 5., 6., 7., 8.]);
        let y1: Evidence = [(Y, 1)].into_iter().collect();
        let x0: Evidence = [(X, 0)].into_iter().collect();
        let both: Evidence = [(X, 0), (Y, 1)].into_iter().collect();
        assert_eq!(g.reduce(&y1).reduce(&x0), g.reduce(&both));
    }

    #[test]
    fn evidence_rejects_conflicts() {
        let mut e = Evidence::new();
        e.insert(X, 1).unwrap();
        e.insert(X, 1).unwrap();
        assert!(matches!(e.insert(X, 0), Err(Error::ConflictingEvidence { .. })));
    }

    #[test]
    fn new_rejects_bad_tables() {
        assert!(matches!(
            Factor::new(vec![(X, 2)], vec![0.5]),
            Err(Error::TableSize { expected: 2, actual: 1 })
        ));
        assert!(matches!(
            Factor::new(vec![(X, 2)], vec![0.5, -0.1]),
            Err(Error::InvalidEntry { index: 1, .. })
        ));
        assert!(matches!(
            Factor::new(vec![(X, 2)], vec![0.5, f64::NAN]),
            Err(Error::InvalidEntry { .. })
        ));
        assert!(Factor::new(vec![(X, 2), (X, 2)], vec![0.0; 4]).is_err());
    }

    fn factor_over(vars: &'static [VarId]) -> impl Strategy<Value = Factor> {
        prop::collection::vec(1usize..4, vars.len()).prop_flat_map(move |cards| {
            let n: usize = cards.iter().product();
            prop::collection::vec(0.0f64..1.0, n).prop_map(move |values| {
                Factor::new(vars.iter().copied().zip(cards.iter().copied()).collect(), values)
                    .unwrap()
            })
        })
    }

    fn close(a: &Factor, b: &Factor, tol: f64) -> bool {
        let b = b.aligned(a.scope()).unwrap();
        a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= tol)
    }

    proptest! {
        #[test]
        fn product_commutes(a in factor_over(&[X, Y]), b in factor_over(&[Z])) {
            let ab = a.product(&b).unwrap();
            let ba = b.product(&a).unwrap();
            prop_assert!(close(&ab, &ba, 1e-12));
        }

        #[test]
        fn product_associates(a in factor_over(&[X]), b in factor_over(&[Y]), c in factor_over(&[Z])) {
            let left = a.product(&b).unwrap().product(&c).unwrap();
            let right = a.product(&b.product(&c).unwrap()).unwrap();
            prop_assert!(close(&left, &right, 1e-12));
        }

        #[test]
        fn marginalization_order_is_irrelevant(g in factor_over(&[X, Y, Z])) {
            let xy = g.marginalize(X).unwrap().marginalize(Y).unwrap();
            let yx = g.marginalize(Y).unwrap().marginalize(X).unwrap();
            prop_assert!(close(&xy, &yx, 1e-12));
        }

        #[test]
        fn marginalizing_everything_preserves_total(g in factor_over(&[X, Y, Z])) {
            let total = g.marginalize(X).unwrap().marginalize(Y).unwrap().marginalize(Z).unwrap();
            prop_assert!((total.values()[0] - g.total()).abs() < 1e-12);
        }
    }
}
