//! Reader for the parenthesized cost form
//! `(ces :alpha A :C C :a (a1 ... ak) child1 ... childk)` with `(axis i)` leaves.

use super::{check_alpha, CostExpr, Node};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Sexp {
    Atom { text: String, line: usize, col: usize },
    List { items: Vec<Sexp>, line: usize, col: usize },
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom { line, col, .. } | Sexp::List { line, col, .. } => (*line, *col),
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let (line, col) = self.pos();
        Error::parse(line, col, message)
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_blank();
        let (line, col) = (self.line, self.col);
        match self.chars.peek() {
            None => Err(Error::parse(line, col, "unexpected end of input")),
            Some(')') => Err(Error::parse(line, col, "unexpected ')'")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => {
                            return Err(Error::parse(line, col, "unclosed '('"));
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List { items, line, col });
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom { text, line, col })
            }
        }
    }
}

fn number(s: &Sexp, what: &str) -> Result<f64> {
    match s {
        Sexp::Atom { text, .. } => text
            .parse::<f64>()
            .map_err(|_| s.err(format!("{what}: expected a number, got '{text}'"))),
        Sexp::List { .. } => Err(s.err(format!("{what}: expected a number, got a list"))),
    }
}

fn node(s: &Sexp) -> Result<Node> {
    let items = match s {
        Sexp::List { items, .. } => items,
        Sexp::Atom { text, .. } => {
            return Err(s.err(format!("expected '(ces ...)' or '(axis i)', got '{text}'")))
        }
    };
    let head = match items.first() {
        Some(Sexp::Atom { text, .. }) => text.as_str(),
        _ => return Err(s.err("expected 'ces' or 'axis' after '('")),
    };
    match head {
        "axis" => {
            if items.len() != 2 {
                return Err(s.err("'(axis i)' takes exactly one index"));
            }
            let raw = match &items[1] {
                Sexp::Atom { text, .. } => text,
                other => return Err(other.err("axis index must be an integer")),
            };
            let index: usize = raw
                .parse()
                .map_err(|_| items[1].err(format!("axis index must be a positive integer, got '{raw}'")))?;
            if index == 0 {
                return Err(items[1].err("axis indices are 1-based"));
            }
            Ok(Node::Axis(index - 1))
        }
        "ces" => ces(s, &items[1..]),
        other => Err(items[0].err(format!("unknown node '{other}'"))),
    }
}

fn ces(whole: &Sexp, rest: &[Sexp]) -> Result<Node> {
    let mut alpha = None;
    let mut scale = None;
    let mut weights: Option<Vec<f64>> = None;
    let mut children = Vec::new();
    let mut i = 0;
    while i < rest.len() {
        match &rest[i] {
            Sexp::Atom { text, .. } if text.starts_with(':') => {
                let value = rest
                    .get(i + 1)
                    .ok_or_else(|| rest[i].err(format!("missing value for {text}")))?;
                match text.as_str() {
                    ":alpha" => {
                        let a = number(value, ":alpha")?;
                        check_alpha(a).map_err(|e| value.err(e.to_string()))?;
                        alpha = Some(a);
                    }
                    ":C" => scale = Some(number(value, ":C")?),
                    ":a" => match value {
                        Sexp::List { items, .. } => {
                            weights = Some(
                                items
                                    .iter()
                                    .map(|w| number(w, ":a"))
                                    .collect::<Result<_>>()?,
                            );
                        }
                        _ => return Err(value.err(":a expects a list '(a1 ... ak)'")),
                    },
                    other => return Err(rest[i].err(format!("unknown keyword {other}"))),
                }
                i += 2;
            }
            child => {
                children.push(node(child)?);
                i += 1;
            }
        }
    }
    let alpha = alpha.ok_or_else(|| whole.err("missing :alpha"))?;
    let scale = scale.ok_or_else(|| whole.err("missing :C"))?;
    let weights = weights.ok_or_else(|| whole.err("missing :a"))?;
    Node::ces(alpha, scale, weights, children).map_err(|e| whole.err(e.to_string()))
}

pub(super) fn parse_cost(text: &str) -> Result<CostExpr> {
    let mut reader = Reader::new(text);
    let sexp = reader.read()?;
    reader.skip_blank();
    if reader.chars.peek().is_some() {
        return Err(Error::parse(
            reader.line,
            reader.col,
            "trailing input after cost expression",
        ));
    }
    let root = node(&sexp)?;
    CostExpr::new(root).map_err(|e| sexp.err(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_tree() {
        let q = parse_cost(
            "(ces :alpha 1 :C 1 :a (0.5 0.5)\n  (axis 1)\n  (ces :alpha 0.5 :C 1 :a (0.5 0.5) (axis 2) (axis 3)))",
        )
        .unwrap();
        assert_eq!(q.dim(), 3);
        assert_eq!(q.depth(), 2);
    }

    #[test]
    fn alpha_error_names_rule_and_position() {
        let err = parse_cost("(ces :alpha 1.5 :C 1 :a (0.5 0.5) (axis 1) (axis 2))").unwrap_err();
        match err {
            Error::Parse { line, column, message } => {
                assert_eq!((line, column), (1, 13));
                assert!(message.contains("(0, 1]"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_axis_is_structural() {
        let err = parse_cost("(ces :alpha 1 :C 1 :a (0.5 0.5) (axis 2) (axis 2))").unwrap_err();
        assert!(err.to_string().contains("axis 2 appears more than once"), "{err}");
    }

    #[test]
    fn gap_in_axes_is_reported() {
        let err = parse_cost("(ces :alpha 1 :C 1 :a (0.5 0.5) (axis 1) (axis 3))").unwrap_err();
        assert!(err.to_string().contains("axis 2 is missing"), "{err}");
    }

    #[test]
    fn unclosed_paren() {
        let err = parse_cost("(ces :alpha 1 :C 1 :a (0.5 0.5) (axis 1) (axis 2)").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, column: 1, .. }), "{err}");
    }

    #[test]
    fn comments_and_whitespace() {
        let q = parse_cost("; linear\n(ces :a (0.25 0.75) :C 2 :alpha 1 (axis 2) (axis 1))").unwrap();
        assert_eq!(q.value(&[1.0, 1.0]), 2.0);
    }
}
