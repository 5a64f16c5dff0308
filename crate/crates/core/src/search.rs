//! Exhaustive backtracking over small non-negative integer assignments.
//!
//! Variables are assigned in index order, each taking the values
//! `0..=max_value` in ascending order, so the first solution found is the
//! lexicographically least one. Every equation is checked exactly as soon as
//! its last variable is assigned; equations against a constant target are
//! also pruned on partial sums, which is sound because all terms are
//! non-negative.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// `coef * x[a]` or `coef * x[a] * x[b]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Term {
    coef: u128,
    a: usize,
    b: Option<usize>,
}

impl Term {
    pub(crate) fn linear(coef: u128, a: usize) -> Self {
        Term { coef, a, b: None }
    }

    pub(crate) fn bilinear(a: usize, b: usize) -> Self {
        Term {
            coef: 1,
            a,
            b: Some(b),
        }
    }

    fn last_var(&self) -> usize {
        self.b.map_or(self.a, |b| b.max(self.a))
    }

    fn eval(&self, values: &[u64]) -> u128 {
        let mut v = self.coef * values[self.a] as u128;
        if let Some(b) = self.b {
            v *= values[b] as u128;
        }
        v
    }
}

/// `sum(lhs) == sum(rhs) + target`.
#[derive(Debug, Clone)]
pub(crate) struct Equation {
    lhs: Vec<Term>,
    rhs: Vec<Term>,
    target: Target,
}

/// Constant side of an equation. Targets beyond `u128` can never be met by
/// bounded assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Value(u128),
    Unreachable,
}

impl Equation {
    /// `sum(lhs) == target`.
    pub(crate) fn against(lhs: Vec<Term>, target: &BigUint) -> Self {
        Equation {
            lhs,
            rhs: Vec::new(),
            target: target.to_u128().map_or(Target::Unreachable, Target::Value),
        }
    }

    /// `sum(lhs) == sum(rhs)`.
    pub(crate) fn balance(lhs: Vec<Term>, rhs: Vec<Term>) -> Self {
        Equation {
            lhs,
            rhs,
            target: Target::Value(0),
        }
    }

    fn prune_zero_terms(&mut self) {
        self.lhs.retain(|t| t.coef != 0);
        self.rhs.retain(|t| t.coef != 0);
    }

    fn last_var(&self) -> Option<usize> {
        self.lhs.iter().chain(&self.rhs).map(Term::last_var).max()
    }

    fn bounded(&self) -> bool {
        self.rhs.is_empty()
    }

    fn holds(&self, values: &[u64]) -> bool {
        let Target::Value(target) = self.target else {
            return false;
        };
        let lhs: u128 = self.lhs.iter().map(|t| t.eval(values)).sum();
        let rhs: u128 = self.rhs.iter().map(|t| t.eval(values)).sum();
        lhs == rhs + target
    }

    /// Sum of lhs terms whose variables are all among `0..=upto`.
    fn partial_lhs(&self, values: &[u64], upto: usize) -> u128 {
        self.lhs
            .iter()
            .filter(|t| t.last_var() <= upto)
            .map(|t| t.eval(values))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Found,
    Exhausted,
    BudgetExceeded,
}

pub(crate) struct Problem {
    n_vars: usize,
    max_value: u64,
    /// Equations whose last variable is `i`.
    closing: Vec<Vec<usize>>,
    /// Constant-target equations containing variable `i` but not closed by it.
    bounding: Vec<Vec<usize>>,
    equations: Vec<Equation>,
    infeasible: bool,
}

impl Problem {
    /// `max_value` must not exceed `u32::MAX` and coefficients must fit in
    /// `u64`; with those limits no partial sum can overflow `u128`.
    pub(crate) fn new(n_vars: usize, max_value: u64, equations: Vec<Equation>) -> Self {
        debug_assert!(max_value <= u32::MAX as u64);
        let mut closing = vec![Vec::new(); n_vars];
        let mut bounding = vec![Vec::new(); n_vars];
        let mut infeasible = false;
        let mut kept = Vec::with_capacity(equations.len());
        for mut eq in equations {
            eq.prune_zero_terms();
            match eq.last_var() {
                None => {
                    // No variables left: the equation is a constant fact.
                    if !eq.holds(&[]) {
                        infeasible = true;
                    }
                }
                Some(last) => {
                    let idx = kept.len();
                    closing[last].push(idx);
                    if eq.bounded() {
                        let mut vars: Vec<usize> = eq
                            .lhs
                            .iter()
                            .flat_map(|t| std::iter::once(t.a).chain(t.b))
                            .filter(|&v| v != last)
                            .collect();
                        vars.sort_unstable();
                        vars.dedup();
                        for v in vars {
                            bounding[v].push(idx);
                        }
                    }
                    kept.push(eq);
                }
            }
        }
        Problem {
            n_vars,
            max_value,
            closing,
            bounding,
            equations: kept,
            infeasible,
        }
    }

    /// Searches for the lexicographically least solution, charging one unit
    /// of `budget` per value tried.
    pub(crate) fn solve(&self, budget: &mut u64) -> (Outcome, Option<Vec<u64>>) {
        if self.infeasible {
            return (Outcome::Exhausted, None);
        }
        let mut values = vec![0u64; self.n_vars];
        if self.n_vars == 0 {
            return (Outcome::Found, Some(values));
        }
        match self.descend(0, &mut values, budget) {
            Outcome::Found => (Outcome::Found, Some(values)),
            other => (other, None),
        }
    }

    fn descend(&self, var: usize, values: &mut [u64], budget: &mut u64) -> Outcome {
        for v in 0..=self.max_value {
            if *budget == 0 {
                return Outcome::BudgetExceeded;
            }
            *budget -= 1;
            values[var] = v;
            match self.consistent(var, values) {
                Check::Ok => {}
                Check::Retry => continue,
                Check::Stop => break,
            }
            if var + 1 == self.n_vars {
                return Outcome::Found;
            }
            match self.descend(var + 1, values, budget) {
                Outcome::Exhausted => {}
                other => return other,
            }
        }
        values[var] = 0;
        Outcome::Exhausted
    }

    fn consistent(&self, var: usize, values: &[u64]) -> Check {
        let mut result = Check::Ok;
        for &idx in &self.closing[var] {
            let eq = &self.equations[idx];
            if eq.holds(values) {
                continue;
            }
            // A constant-target sum that already overshoots only grows with
            // larger values of `var`.
            if eq.bounded() {
                if let Target::Value(t) = eq.target {
                    if eq.partial_lhs(values, var) > t {
                        return Check::Stop;
                    }
                } else {
                    return Check::Stop;
                }
            }
            result = Check::Retry;
        }
        if result == Check::Retry {
            return result;
        }
        for &idx in &self.bounding[var] {
            let eq = &self.equations[idx];
            if let Target::Value(t) = eq.target {
                if eq.partial_lhs(values, var) > t {
                    return Check::Stop;
                }
            }
        }
        Check::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    Ok,
    Retry,
    Stop,
}
