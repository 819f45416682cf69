//! Coefficient expressions for the `custom` preset.
//!
//! Expressions are parsed once and evaluated with a small fixed context:
//! the variables named at compile time, the constant `pi`, and the short
//! function names `sin cos tan exp ln sqrt abs tanh sinh cosh` (the
//! `math::` builtins stay available). Integer literals use integer
//! arithmetic, so write `0.5` rather than `1/2`.

use std::sync::Arc;

use evalexpr::{
    build_operator_tree, Context, DefaultNumericTypes, EvalexprError, EvalexprResult, Node, Value,
};

use crate::error::CliError;

#[derive(Clone)]
pub struct Expr {
    source: String,
    vars: Vec<&'static str>,
    tree: Arc<Node<DefaultNumericTypes>>,
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

struct Vars<'a> {
    names: &'a [&'static str],
    values: Vec<Value<DefaultNumericTypes>>,
    pi: Value<DefaultNumericTypes>,
}

impl Context for Vars<'_> {
    type NumericTypes = DefaultNumericTypes;

    fn get_value(&self, identifier: &str) -> Option<&Value<DefaultNumericTypes>> {
        if identifier == "pi" {
            return Some(&self.pi);
        }
        self.names
            .iter()
            .position(|n| *n == identifier)
            .map(|i| &self.values[i])
    }

    fn call_function(
        &self,
        identifier: &str,
        argument: &Value<DefaultNumericTypes>,
    ) -> EvalexprResult<Value<DefaultNumericTypes>, DefaultNumericTypes> {
        let f: fn(f64) -> f64 = match identifier {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "tan" => f64::tan,
            "exp" => f64::exp,
            "ln" => f64::ln,
            "sqrt" => f64::sqrt,
            "abs" => f64::abs,
            "tanh" => f64::tanh,
            "sinh" => f64::sinh,
            "cosh" => f64::cosh,
            _ => {
                return Err(EvalexprError::FunctionIdentifierNotFound(
                    identifier.to_string(),
                ))
            }
        };
        Ok(Value::Float(f(argument.as_number()?)))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(
        &mut self,
        _disabled: bool,
    ) -> EvalexprResult<(), DefaultNumericTypes> {
        Err(EvalexprError::BuiltinFunctionsCannotBeDisabled)
    }
}

impl Expr {
    /// Parses `source` and checks it evaluates to a number at the origin.
    pub fn compile(key: &str, source: &str, vars: &[&'static str]) -> Result<Self, CliError> {
        let tree = build_operator_tree::<DefaultNumericTypes>(source)
            .map_err(|e| CliError::Config(format!("{key}: cannot parse {source:?}: {e}")))?;
        let expr = Expr {
            source: source.to_string(),
            vars: vars.to_vec(),
            tree: Arc::new(tree),
        };
        expr.try_eval(&vec![0.0; vars.len()])
            .map_err(|e| CliError::Config(format!("{key}: cannot evaluate {source:?}: {e}")))?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_eval(&self, args: &[f64]) -> EvalexprResult<f64, DefaultNumericTypes> {
        let ctx = Vars {
            names: &self.vars,
            values: args.iter().map(|&a| Value::Float(a)).collect(),
            pi: Value::Float(std::f64::consts::PI),
        };
        self.tree.eval_number_with_context(&ctx)
    }

    /// Value at `args` (in the order of the compile-time variable names).
    /// Evaluation errors after a successful compile yield NaN, which the
    /// solvers reject as a singular or non-finite coefficient.
    pub fn eval(&self, args: &[f64]) -> f64 {
        self.try_eval(args).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_variables_and_functions() {
        let e = Expr::compile("k", "(1.5 + cos(2*x)) * (1 + 0.5*z)", &["x", "z"]).unwrap();
        let (x, z) = (0.3, -0.4);
        assert_eq!(e.eval(&[x, z]), (1.5 + (2.0 * x).cos()) * (1.0 + 0.5 * z));
        let e = Expr::compile("k", "math::sin(pi * x) + sqrt(4.0)", &["x"]).unwrap();
        assert!((e.eval(&[0.5]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(Expr::compile("k", "y + 1", &["x"]).is_err());
        assert!(Expr::compile("k", "foo(x)", &["x"]).is_err());
        assert!(Expr::compile("k", "1 +", &["x"]).is_err());
    }
}
