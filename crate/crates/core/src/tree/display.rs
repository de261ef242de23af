use std::fmt::{self, Write};

use super::{LinearModel, ModelTree, SplitRule};

/// Compact decimal rendering: at most four decimals, trailing zeros dropped.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn equation(model: &LinearModel, names: &[String]) -> String {
    let mut out = format!("y = {}", num(model.intercept));
    for t in &model.terms {
        let sign = if t.coef < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {}*{}", num(t.coef.abs()), names[t.feature]);
    }
    out
}

impl ModelTree {
    /// Linear models of the leaves, numbered left to right from 1.
    pub fn leaf_models(&self) -> Vec<(usize, &LinearModel)> {
        self.leaf_indices()
            .into_iter()
            .enumerate()
            .map(|(k, i)| (k + 1, &self.nodes[i].model))
            .collect()
    }
}

/// One line per node, children indented under their parent with `|   `.
/// The first child listed is the one the condition sends cases to.
///
/// ```text
/// size <= 12.5 (n=20)
/// |   LM 1: y = 1.2 + 0.5*size (n=10)
/// |   LM 2: y = 7 (n=10)
/// ```
impl fmt::Display for ModelTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = &self.features.names;
        let mut leaf_no = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, depth)) = stack.pop() {
            let node = &self.nodes[i];
            let indent = "|   ".repeat(depth);
            match &node.split {
                None => {
                    leaf_no += 1;
                    writeln!(
                        f,
                        "{indent}LM {leaf_no}: {} (n={})",
                        equation(&node.model, names),
                        node.coverage
                    )?;
                }
                Some(split) => {
                    let feature = &names[split.feature];
                    match &split.rule {
                        SplitRule::Threshold(t) => {
                            writeln!(f, "{indent}{feature} <= {} (n={})", num(*t), node.coverage)?
                        }
                        SplitRule::Levels { left, .. } => {
                            let levels = &self.features.levels[split.feature];
                            let set: Vec<&str> = left.iter().map(|&l| levels[l].as_str()).collect();
                            writeln!(f, "{indent}{feature} in {{{}}} (n={})", set.join(", "), node.coverage)?
                        }
                    }
                    stack.push((split.right, depth + 1));
                    stack.push((split.left, depth + 1));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_rendering() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.12345), "0.1235");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(-0.00001), "0");
        assert_eq!(num(1200.0), "1200");
    }
}
