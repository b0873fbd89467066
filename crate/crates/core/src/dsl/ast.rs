use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Time `s`.
    Time,
    /// Component `w{k}` of `ω`, 1-based.
    Omega(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "neg" => UnaryOp::Neg,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Parsed radial-function expression.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialExpr {
    Lit(f64),
    Var(Var),
    Unary(UnaryOp, Box<RadialExpr>),
    Binary(BinOp, Box<RadialExpr>, Box<RadialExpr>),
    /// Integer power.
    Pow(Box<RadialExpr>, i32),
    /// Explicit parentheses, kept so printing reproduces the source tree.
    Group(Box<RadialExpr>),
}

impl RadialExpr {
    /// Largest `k` among the `wk` variables, `0` if none occur.
    pub fn max_omega_index(&self) -> usize {
        match self {
            RadialExpr::Lit(_) | RadialExpr::Var(Var::Time) => 0,
            RadialExpr::Var(Var::Omega(k)) => *k as usize,
            RadialExpr::Unary(_, e) | RadialExpr::Pow(e, _) | RadialExpr::Group(e) => e.max_omega_index(),
            RadialExpr::Binary(_, a, b) => a.max_omega_index().max(b.max_omega_index()),
        }
    }

    /// Whether the expression mentions the time variable.
    pub fn depends_on_time(&self) -> bool {
        match self {
            RadialExpr::Lit(_) | RadialExpr::Var(Var::Omega(_)) => false,
            RadialExpr::Var(Var::Time) => true,
            RadialExpr::Unary(_, e) | RadialExpr::Pow(e, _) | RadialExpr::Group(e) => e.depends_on_time(),
            RadialExpr::Binary(_, a, b) => a.depends_on_time() || b.depends_on_time(),
        }
    }
}

impl fmt::Display for RadialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialExpr::Lit(v) if *v < 0.0 => write!(f, "neg({})", -v),
            RadialExpr::Lit(v) => write!(f, "{v}"),
            RadialExpr::Var(Var::Time) => write!(f, "s"),
            RadialExpr::Var(Var::Omega(k)) => write!(f, "w{k}"),
            RadialExpr::Unary(op, e) => write!(f, "{}({e})", op.name()),
            RadialExpr::Binary(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            RadialExpr::Pow(e, k) => write!(f, "{e}^{k}"),
            RadialExpr::Group(e) => write!(f, "({e})"),
        }
    }
}
