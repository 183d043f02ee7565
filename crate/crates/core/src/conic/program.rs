use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Handle to a decision variable of a [`ConicProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

/// `Σ coef·var + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        AffineExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(var: Var, coef: f64) -> Self {
        AffineExpr {
            terms: vec![(var, coef)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, var: Var, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
        self
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|(_, c)| c.is_finite())
    }
}

impl From<Var> for AffineExpr {
    fn from(v: Var) -> Self {
        AffineExpr::term(v, 1.0)
    }
}

impl From<f64> for AffineExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c)
    }
}

impl AddAssign<&AffineExpr> for AffineExpr {
    fn add_assign(&mut self, rhs: &AffineExpr) {
        self.terms.extend_from_slice(&rhs.terms);
        self.constant += rhs.constant;
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self += &rhs;
        self
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(mut self, k: f64) -> AffineExpr {
        self.terms.iter_mut().for_each(|(_, c)| *c *= k);
        self.constant *= k;
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self * -1.0
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self + (-rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    /// `expr ≤ 0`
    Le,
    /// `expr = 0`
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub expr: AffineExpr,
    pub sense: RowSense,
}

/// Membership `(a, b, c) ∈ K_exp`, i.e. `a ≥ b·exp(c/b)` with `a, b ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpConeTriple {
    pub a: AffineExpr,
    pub b: AffineExpr,
    pub c: AffineExpr,
}

/// `‖(x_1, …, x_d)‖₂ ≤ t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderCone {
    pub t: AffineExpr,
    pub x: Vec<AffineExpr>,
}

/// A minimization problem with a linear objective, linear rows, variable
/// bounds, exponential-cone triples and second-order cones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: AffineExpr,
    rows: Vec<LinearRow>,
    exp_cones: Vec<ExpConeTriple>,
    socs: Vec<SecondOrderCone>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Var {
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        Var(self.names.len() - 1)
    }

    pub fn add_free_var(&mut self, name: impl Into<String>) -> Var {
        self.add_var(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn set_objective(&mut self, objective: AffineExpr) {
        self.objective = objective;
    }

    pub fn add_to_objective(&mut self, expr: &AffineExpr) {
        self.objective += expr;
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.rows.push(LinearRow {
            expr: lhs - rhs,
            sense: RowSense::Le,
        });
    }

    /// `lhs = rhs`.
    pub fn add_eq(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.rows.push(LinearRow {
            expr: lhs - rhs,
            sense: RowSense::Eq,
        });
    }

    pub fn add_exp_cone(&mut self, a: AffineExpr, b: AffineExpr, c: AffineExpr) {
        self.exp_cones.push(ExpConeTriple { a, b, c });
    }

    pub fn add_soc(&mut self, t: AffineExpr, x: Vec<AffineExpr>) {
        self.socs.push(SecondOrderCone { t, x });
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.names[v.0]
    }

    pub fn bounds(&self, v: Var) -> (f64, f64) {
        (self.lower[v.0], self.upper[v.0])
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    pub fn rows(&self) -> &[LinearRow] {
        &self.rows
    }

    pub fn exp_cones(&self) -> &[ExpConeTriple] {
        &self.exp_cones
    }

    pub fn socs(&self) -> &[SecondOrderCone] {
        &self.socs
    }

    /// Check that every expression refers to declared variables and has
    /// finite coefficients.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        let check = |e: &AffineExpr, what: &str| -> Result<(), String> {
            if let Some((v, _)) = e.terms.iter().find(|(v, _)| v.0 >= n) {
                return Err(format!("{what} references undeclared variable {}", v.0));
            }
            if !e.is_finite() {
                return Err(format!("{what} has a non-finite coefficient"));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (r, row) in self.rows.iter().enumerate() {
            check(&row.expr, &format!("row {r}"))?;
        }
        for (k, cone) in self.exp_cones.iter().enumerate() {
            for e in [&cone.a, &cone.b, &cone.c] {
                check(e, &format!("exp cone {k}"))?;
            }
        }
        for (k, cone) in self.socs.iter().enumerate() {
            check(&cone.t, &format!("soc {k}"))?;
            for e in &cone.x {
                check(e, &format!("soc {k}"))?;
            }
        }
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(format!("variable {j} has invalid bounds [{lo}, {hi}]"));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.evaluate(x)
    }

    /// Largest violation of any bound, row or cone at `x`. Exponential cones
    /// are measured as `b·exp(c/b) − a` (or `max(0,-a)` on the `b = 0` face
    /// with `c ≤ 0`), second-order cones as `‖x‖₂ − t`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let r = row.expr.evaluate(x);
            worst = worst.max(match row.sense {
                RowSense::Le => r,
                RowSense::Eq => r.abs(),
            });
        }
        for cone in &self.exp_cones {
            let (a, b, c) = (cone.a.evaluate(x), cone.b.evaluate(x), cone.c.evaluate(x));
            let v = if b > 0.0 {
                b * (c / b).exp() - a
            } else {
                (-a).max(-b).max(if b == 0.0 { c } else { 0.0 })
            };
            worst = worst.max(v);
        }
        for cone in &self.socs {
            let t = cone.t.evaluate(x);
            let norm = cone
                .x
                .iter()
                .map(|e| e.evaluate(x).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(norm - t);
        }
        worst
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &AffineExpr) -> fmt::Result {
    let mut first = true;
    for (v, c) in &e.terms {
        if first {
            write!(f, "{c} x{}", v.0)?;
            first = false;
        } else {
            write!(
                f,
                " {} {} x{}",
                if *c < 0.0 { '-' } else { '+' },
                c.abs(),
                v.0
            )?;
        }
    }
    if first {
        write!(f, "{}", e.constant)
    } else if e.constant != 0.0 {
        write!(
            f,
            " {} {}",
            if e.constant < 0.0 { '-' } else { '+' },
            e.constant.abs()
        )
    } else {
        Ok(())
    }
}

/// Line-oriented debugging dump:
///
/// ```text
/// var <index> <name> <lower> <upper>
/// minimize <expr>
/// row <index> <expr> <= 0 | = 0
/// exp <index> (<a>) (<b>) (<c>)
/// soc <index> (<t>) (<x1>) ...
/// ```
impl fmt::Display for ConicProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, name) in self.names.iter().enumerate() {
            writeln!(f, "var {j} {name} {} {}", self.lower[j], self.upper[j])?;
        }
        write!(f, "minimize ")?;
        write_expr(f, &self.objective)?;
        writeln!(f)?;
        for (r, row) in self.rows.iter().enumerate() {
            write!(f, "row {r} ")?;
            write_expr(f, &row.expr)?;
            match row.sense {
                RowSense::Le => writeln!(f, " <= 0")?,
                RowSense::Eq => writeln!(f, " = 0")?,
            }
        }
        for (k, cone) in self.exp_cones.iter().enumerate() {
            write!(f, "exp {k}")?;
            for e in [&cone.a, &cone.b, &cone.c] {
                write!(f, " (")?;
                write_expr(f, e)?;
                write!(f, ")")?;
            }
            writeln!(f)?;
        }
        for (k, cone) in self.socs.iter().enumerate() {
            write!(f, "soc {k} (")?;
            write_expr(f, &cone.t)?;
            write!(f, ")")?;
            for e in &cone.x {
                write!(f, " (")?;
                write_expr(f, e)?;
                write!(f, ")")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
