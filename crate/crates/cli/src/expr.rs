use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};

const FUNCS: &[&str] = &[
    "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sinh", "cosh", "tanh", "exp", "exp2", "ln", "log", "log2",
    "log10", "sqrt", "cbrt", "abs", "pow", "hypot",
];

/// A scalar formula in a fixed set of variables, e.g. `100/(t+1)`.
///
/// Bare function names are mapped to the `math::` namespace and integer
/// literals are read as floats, so `1/2` is one half. `pi` is predefined.
#[derive(Clone, Debug)]
pub struct Expr {
    vars: Vec<&'static str>,
    node: Node<DefaultNumericTypes>,
}

impl Expr {
    pub fn parse(src: &str, vars: &[&'static str]) -> Result<Self, String> {
        let rewritten = rewrite(src);
        let node = build_operator_tree::<DefaultNumericTypes>(&rewritten)
            .map_err(|e| format!("cannot parse expression {src:?}: {e}"))?;
        for id in node.iter_variable_identifiers() {
            if id != "pi" && !vars.contains(&id) {
                return Err(format!("expression {src:?} uses unknown variable {id:?}; allowed: pi, {}", vars.join(", ")));
            }
        }
        let e = Expr { vars: vars.to_vec(), node };
        let probe = e.try_eval(&vec![0.5; vars.len()]);
        if let Err(msg) = probe {
            return Err(format!("expression {src:?} does not evaluate to a number: {msg}"));
        }
        Ok(e)
    }

    fn try_eval(&self, vals: &[f64]) -> Result<f64, String> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI)).map_err(|e| e.to_string())?;
        for (name, v) in self.vars.iter().zip(vals) {
            ctx.set_value((*name).into(), Value::Float(*v)).map_err(|e| e.to_string())?;
        }
        self.node.eval_number_with_context(&ctx).map_err(|e| e.to_string())
    }

    /// Evaluation errors surface as NaN and are caught by the front-end
    /// validators.
    pub fn eval(&self, vals: &[f64]) -> f64 {
        self.try_eval(vals).unwrap_or(f64::NAN)
    }
}

fn rewrite(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 16);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == ':') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j < chars.len() && chars[j] == '(' && FUNCS.contains(&word.as_str()) {
                out.push_str("math::");
            }
            out.push_str(&word);
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                float = true;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            if lit.starts_with('.') {
                out.push('0');
            }
            out.push_str(&lit);
            if !float {
                out.push_str(".0");
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_division_is_real() {
        let e = Expr::parse("1/2 + t", &["t"]).unwrap();
        assert_eq!(e.eval(&[0.25]), 0.75);
    }

    #[test]
    fn functions_and_pi() {
        let e = Expr::parse("sin(pi*x) + exp(0)", &["x"]).unwrap();
        assert!((e.eval(&[0.5]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scientific_literals() {
        let e = Expr::parse("1e-6 * 2E+3 + .5", &[]).unwrap();
        assert!((e.eval(&[]) - 0.502).abs() < 1e-15);
    }

    #[test]
    fn unknown_variable_rejected() {
        assert!(Expr::parse("y + 1", &["x"]).is_err());
        assert!(Expr::parse("1 +", &["x"]).is_err());
    }
}
