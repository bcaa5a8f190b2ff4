//! Declarative smooth programs.

/// Value, gradient and Hessian of one constraint, restricted to its support.
#[derive(Debug, Clone, Default)]
pub struct LocalEval {
    pub value: f64,
    /// Gradient over the support, same order as [`Constraint::support`].
    pub grad: Vec<f64>,
    /// Row-major `k x k` Hessian over the support. Zeroed before each call.
    pub hess: Vec<f64>,
}

impl LocalEval {
    pub fn with_size(k: usize) -> Self {
        LocalEval {
            value: 0.0,
            grad: vec![0.0; k],
            hess: vec![0.0; k * k],
        }
    }

    pub(crate) fn reset(&mut self, k: usize) {
        self.value = 0.0;
        self.grad.clear();
        self.grad.resize(k, 0.0);
        self.hess.clear();
        self.hess.resize(k * k, 0.0);
    }

    pub fn h(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.grad.len();
        &mut self.hess[i * k + j]
    }
}

/// A smooth inequality `g(x) <= 0` that touches only the variables listed
/// by [`support`](Constraint::support).
pub trait Constraint: Send + Sync {
    fn support(&self) -> &[usize];

    /// Evaluates `g` at `x`, the values of the support variables. Returns
    /// `false` if `x` lies outside the domain of `g`; `out` is then ignored.
    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool;

    /// Whether the Hessian is identically zero.
    fn is_linear(&self) -> bool {
        false
    }
}

/// `coef . x - rhs <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub idx: Vec<usize>,
    pub coef: Vec<f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(terms: &[(usize, f64)], rhs: f64) -> Self {
        LinearConstraint {
            idx: terms.iter().map(|t| t.0).collect(),
            coef: terms.iter().map(|t| t.1).collect(),
            rhs,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.coef).map(|(&i, c)| c * x[i]).sum::<f64>() - self.rhs
    }
}

impl Constraint for LinearConstraint {
    fn support(&self) -> &[usize] {
        &self.idx
    }

    fn eval(&self, x: &[f64], _want_hess: bool, out: &mut LocalEval) -> bool {
        out.value = x.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>() - self.rhs;
        out.grad.copy_from_slice(&self.coef);
        true
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// Sparse row of an equality block `a x = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Maximize `c . x` subject to smooth inequalities, affine equalities and
/// variable bounds, from a starting point.
pub struct SmoothProgram {
    pub n: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Box<dyn Constraint>>,
    /// Per constraint: relaxed by the elastic slack in elastic mode.
    pub soft: Vec<bool>,
    pub equalities: Vec<EqualityRow>,
    pub bounds: Vec<(f64, f64)>,
    pub start: Vec<f64>,
}

impl SmoothProgram {
    /// An unconstrained program with `n` variables, zero objective and the
    /// origin as start.
    pub fn new(n: usize) -> Self {
        SmoothProgram {
            n,
            objective: vec![0.0; n],
            constraints: Vec::new(),
            soft: Vec::new(),
            equalities: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
            start: vec![0.0; n],
        }
    }

    pub fn maximize(mut self, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.n, "objective length");
        self.objective = c;
        self
    }

    pub fn start_at(mut self, x0: Vec<f64>) -> Self {
        assert_eq!(x0.len(), self.n, "start length");
        self.start = x0;
        self
    }

    pub fn add(&mut self, c: impl Constraint + 'static) {
        debug_assert!(c.support().iter().all(|&i| i < self.n));
        self.constraints.push(Box::new(c));
        self.soft.push(false);
    }

    /// Adds a constraint that elastic mode may violate at a price.
    pub fn add_soft(&mut self, c: impl Constraint + 'static) {
        self.add(c);
        *self.soft.last_mut().unwrap() = true;
    }

    pub fn add_linear(&mut self, terms: &[(usize, f64)], rhs: f64) {
        self.add(LinearConstraint::new(terms, rhs));
    }

    pub fn add_equality(&mut self, terms: &[(usize, f64)], rhs: f64) {
        self.equalities.push(EqualityRow {
            terms: terms.to_vec(),
            rhs,
        });
    }

    pub fn bound(&mut self, i: usize, lo: f64, hi: f64) {
        self.bounds[i] = (lo, hi);
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Finite variable bounds as linear constraints.
    pub(crate) fn bound_constraints(&self) -> Vec<LinearConstraint> {
        let mut out = Vec::new();
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_finite() {
                out.push(LinearConstraint::new(&[(i, -1.0)], -lo));
            }
            if hi.is_finite() {
                out.push(LinearConstraint::new(&[(i, 1.0)], hi));
            }
        }
        out
    }
}
